//! Downlink metrics: safe margin, SEP bounds, constraint assembly for the
//! precoder designs and nearest-neighbour PSK decoding.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{dim, IsacError, Result};
use crate::model::{rotate_channels, CMatrix, CVector, CommChannels, Constellation, SystemConfig};

fn cot(v: f64) -> f64 {
    v.cos() / v.sin()
}

/// `kappa_{1,2} = 1 -/+ exp(-j pi/2) cot(pi/M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeMarginCoeffs {
    pub kappa1: Complex64,
    pub kappa2: Complex64,
}

impl SafeMarginCoeffs {
    pub fn new(order: usize) -> Self {
        let c = if order == 2 { 0.0 } else { cot(PI / order as f64) };
        let rot = Complex64::from_polar(1.0, -PI / 2.0) * c;
        SafeMarginCoeffs {
            kappa1: Complex64::from(1.0) - rot,
            kappa2: Complex64::from(1.0) + rot,
        }
    }
}

/// Safe margin of a noise-free received sample `z = h_bar^H x` already
/// rotated into the intended symbol's frame.
pub fn margin_of(z: Complex64, order: usize) -> f64 {
    let k = SafeMarginCoeffs::new(order);
    (k.kappa1 * z).re.min((k.kappa2 * z).re)
}

/// `min{Re(kappa1 h_bar^H x), Re(kappa2 h_bar^H x)}`.
pub fn safe_margin(h_bar_u: &CVector, x: &CVector, order: usize) -> Result<f64> {
    if h_bar_u.len() != x.len() {
        return Err(dim(format!("channel {} vs signal {}", h_bar_u.len(), x.len())));
    }
    Ok(margin_of(h_bar_u.dotc(x), order))
}

/// Standard Gaussian upper tail.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// SEP bracket for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepBounds {
    pub lower: f64,
    /// `2 * lower`; exceeds 1 when the margin is small or negative.
    pub upper_raw: f64,
    /// `min(1, upper_raw)`.
    pub upper: f64,
    pub clamped: bool,
}

/// `Psi(sqrt(2) sin(pi/M) alpha / sigma_C) <= SEP <= 2 Psi(...)`.
pub fn sep_bounds(alpha: f64, sigma_c: f64, order: usize) -> Result<SepBounds> {
    if !(sigma_c > 0.0) {
        return Err(IsacError::Domain {
            name: "sigma_C",
            value: sigma_c,
            domain: "(0, inf)",
        });
    }
    let arg = std::f64::consts::SQRT_2 * (PI / order as f64).sin() * alpha / sigma_c;
    let lower = gaussian_tail(arg);
    let upper_raw = 2.0 * lower;
    Ok(SepBounds {
        lower,
        upper_raw,
        upper: upper_raw.min(1.0),
        clamped: upper_raw > 1.0,
    })
}

/// `Re(A x) >= lambda` with rows `kappa1 h_bar_u^H`, `kappa2 h_bar_u^H` per user.
#[derive(Debug, Clone, PartialEq)]
pub struct QosConstraintSet {
    pub a_matrix: CMatrix,
    pub thresholds: Vec<f64>,
}

impl QosConstraintSet {
    /// `Re(A x)`, one entry per row.
    pub fn row_values(&self, x: &CVector) -> Vec<f64> {
        (&self.a_matrix * x).iter().map(|z| z.re).collect()
    }

    /// Safe margin per user: the smaller of its two rows.
    pub fn user_margins(&self, x: &CVector) -> Vec<f64> {
        self.row_values(x)
            .chunks(2)
            .map(|p| p[0].min(p[1]))
            .collect()
    }

    pub fn is_satisfied(&self, x: &CVector, tol: f64) -> bool {
        self.row_values(x)
            .iter()
            .zip(&self.thresholds)
            .all(|(v, t)| *v >= t - tol * (1.0 + t.abs()))
    }
}

/// Margin rows in the rotated frame of each user's symbol.
pub fn margin_rows(rotated: &[CVector], order: usize) -> CMatrix {
    let k = SafeMarginCoeffs::new(order);
    let n = rotated.first().map_or(0, |h| h.len());
    let mut a = CMatrix::zeros(2 * rotated.len(), n);
    for (u, h) in rotated.iter().enumerate() {
        let hh = h.adjoint();
        a.row_mut(2 * u).copy_from(&(&hh * k.kappa1));
        a.row_mut(2 * u + 1).copy_from(&(&hh * k.kappa2));
    }
    a
}

/// QoS rows for symbol vector `symbols` and per-user SNR targets `gammas`
/// (linear): thresholds `sqrt(Gamma_u sigma_{C,u}^2)`, each used twice.
pub fn build_qos_constraints(
    channels: &CommChannels,
    symbols: &[Complex64],
    gammas: &[f64],
    cfg: &SystemConfig,
) -> Result<QosConstraintSet> {
    if gammas.len() != channels.n_users() || cfg.comm_noise_powers.len() != channels.n_users() {
        return Err(dim(format!(
            "{} SNR targets / {} noise powers for {} users",
            gammas.len(),
            cfg.comm_noise_powers.len(),
            channels.n_users()
        )));
    }
    if let Some(&g) = gammas.iter().find(|g| !(**g >= 0.0)) {
        return Err(IsacError::Domain {
            name: "communication SNR target",
            value: g,
            domain: "[0, inf)",
        });
    }
    let rot = rotate_channels(channels, symbols)?;
    let a_matrix = margin_rows(&rot.rotated, cfg.modulation_order);
    let thresholds = gammas
        .iter()
        .zip(&cfg.comm_noise_powers)
        .flat_map(|(g, s)| {
            let t = (g * s).sqrt();
            [t, t]
        })
        .collect();
    Ok(QosConstraintSet {
        a_matrix,
        thresholds,
    })
}

/// Index of the PSK point nearest to `y`, i.e. maximizing `Re(y conj(s_m))`.
/// Near-ties (including `y = 0`) resolve to the smallest index.
pub fn decode_psk(y: Complex64, constellation: &Constellation) -> usize {
    let scores: Vec<f64> = constellation
        .points
        .iter()
        .map(|s| (y * s.conj()).re)
        .collect();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * y.norm();
    scores
        .iter()
        .position(|&v| v >= best - tol)
        .unwrap_or(0)
}

/// Number of half-planes in the polygonal disk approximation.
pub const MMSE_FACETS: usize = 8;

/// Radius of the largest disk that fits inside the margin-`lambda` sector.
pub fn mmse_radius(lambda: f64, order: usize) -> Result<f64> {
    if order < 4 {
        return Err(IsacError::InvalidConfig("disk constraints need M >= 4".into()));
    }
    Ok(lambda * (PI / order as f64).tan())
}

/// Disk constraints around the intended symbols, one octagon per user.
///
/// The disk of radius `eps_u` is centred at `s_u eps_u cot(pi / 2M)`, which
/// is where a disk of that radius touches both sides of the sector. Each disk
/// is replaced by the inscribed octagon
/// `Re(e^{-j theta_k}(y_u - c_u)) <= eps_u cos(pi/8)`, stored as
/// `Re(R x) >= b` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseConstraintSet {
    pub a_matrix: CMatrix,
    pub rhs: Vec<f64>,
    pub centers: Vec<Complex64>,
    pub radii: Vec<f64>,
}

impl MmseConstraintSet {
    pub fn row_values(&self, x: &CVector) -> Vec<f64> {
        (&self.a_matrix * x).iter().map(|z| z.re).collect()
    }

    pub fn slacks(&self, x: &CVector) -> Vec<f64> {
        self.row_values(x)
            .iter()
            .zip(&self.rhs)
            .map(|(v, b)| v - b)
            .collect()
    }
}

pub(crate) fn facet_angle(k: usize) -> f64 {
    2.0 * PI * k as f64 / MMSE_FACETS as f64
}

/// Distance from centre to facet relative to the disk radius.
pub(crate) fn facet_inradius() -> f64 {
    (PI / MMSE_FACETS as f64).cos()
}

/// Centre distance relative to the radius for an order-`M` sector.
pub(crate) fn center_factor(order: usize) -> f64 {
    1.0 / (PI / (2.0 * order as f64)).tan()
}

pub fn build_mmse_constraints(
    channels: &CommChannels,
    symbols: &[Complex64],
    epsilons: &[f64],
    order: usize,
) -> Result<MmseConstraintSet> {
    if epsilons.len() != channels.n_users() {
        return Err(dim(format!("{} radii for {} users", epsilons.len(), channels.n_users())));
    }
    if let Some(&e) = epsilons.iter().find(|e| !(**e >= 0.0)) {
        return Err(IsacError::Domain {
            name: "disk radius",
            value: e,
            domain: "[0, inf)",
        });
    }
    if order < 4 {
        return Err(IsacError::InvalidConfig("disk constraints need M >= 4".into()));
    }
    let rot = rotate_channels(channels, symbols)?;
    let n = channels.h.first().map_or(0, |h| h.len());
    let users = channels.n_users();
    let mut a = CMatrix::zeros(users * MMSE_FACETS, n);
    let mut rhs = Vec::with_capacity(users * MMSE_FACETS);
    let mut centers = Vec::with_capacity(users);
    for (u, (h, &eps)) in rot.rotated.iter().zip(epsilons).enumerate() {
        let center = eps * center_factor(order);
        centers.push(symbols[u] / symbols[u].norm() * center);
        let hh = h.adjoint();
        for k in 0..MMSE_FACETS {
            let e = Complex64::from_polar(1.0, -facet_angle(k));
            a.row_mut(u * MMSE_FACETS + k).copy_from(&(&hh * (-e)));
            rhs.push(-(e * center).re - eps * facet_inradius());
        }
    }
    Ok(MmseConstraintSet {
        a_matrix: a,
        rhs,
        centers,
        radii: epsilons.to_vec(),
    })
}

//! System model: configuration, array steering, radar and user channels,
//! 1-bit converters and PSK constellations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim, IsacError, Result};
use crate::rng::{complex_normal, substream, tags};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Scene and hardware parameters shared by every routine.
///
/// Ratios are linear. `clutter_cnrs` holds `varsigma_q^2 / sigma_R^2`, i.e.
/// before the `2/pi` factor that the 1-bit receiver introduces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub power_budget: f64,
    pub radar_noise_power: f64,
    pub comm_noise_powers: Vec<f64>,
    pub radar_snr: f64,
    pub clutter_cnrs: Vec<f64>,
    pub target_angle: f64,
    pub clutter_angles: Vec<f64>,
    pub n_users: usize,
    pub modulation_order: usize,
    pub rng_seed: u64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

impl SystemConfig {
    /// The evaluation scene: 128x128 array, four users, 8-PSK, target at 10
    /// degrees, clutter at -50 and 30 degrees, 15 dB SNR, 30 dB CNR and a
    /// 5 dB communication SNR.
    pub fn paper_default() -> Self {
        let n_users = 4;
        let power_budget = 1.0;
        let snr_c = db_to_linear(5.0);
        SystemConfig {
            n_tx: 128,
            n_rx: 128,
            power_budget,
            radar_noise_power: 1.0,
            comm_noise_powers: vec![power_budget / snr_c; n_users],
            radar_snr: db_to_linear(15.0),
            clutter_cnrs: vec![db_to_linear(30.0); 2],
            target_angle: 10f64.to_radians(),
            clutter_angles: vec![(-50f64).to_radians(), 30f64.to_radians()],
            n_users,
            modulation_order: 8,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(IsacError::InvalidConfig(m.to_string()));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("antenna counts must be positive");
        }
        if !(self.power_budget > 0.0) || !self.power_budget.is_finite() {
            return bad("power budget must be positive");
        }
        if !(self.radar_noise_power > 0.0) {
            return bad("radar noise power must be positive");
        }
        if self.n_users == 0 {
            return bad("at least one user is required");
        }
        if self.comm_noise_powers.len() != self.n_users {
            return bad("one communication noise power per user is required");
        }
        if self.comm_noise_powers.iter().any(|&s| !(s > 0.0)) {
            return bad("communication noise powers must be positive");
        }
        if !(self.radar_snr >= 0.0) {
            return bad("radar SNR must be non-negative");
        }
        if self.clutter_cnrs.len() != self.clutter_angles.len() {
            return bad("clutter CNR and angle lists differ in length");
        }
        if self.clutter_cnrs.iter().any(|&c| !(c >= 0.0)) {
            return bad("clutter CNRs must be non-negative");
        }
        let m = self.modulation_order;
        if m < 2 || !m.is_power_of_two() {
            return bad("modulation order must be a power of two >= 2");
        }
        Ok(())
    }

    pub fn n_clutter(&self) -> usize {
        self.clutter_cnrs.len()
    }

    /// Per-component amplitude of the 1-bit transmit alphabet, sqrt(E / 2N_T).
    pub fn dac_amplitude(&self) -> f64 {
        (self.power_budget / (2.0 * self.n_tx as f64)).sqrt()
    }

    /// Target amplitude variance `varsigma_0^2`.
    pub fn target_power(&self) -> f64 {
        self.radar_snr * self.radar_noise_power
    }

    /// Clutter amplitude variances `varsigma_q^2`.
    pub fn clutter_powers(&self) -> Vec<f64> {
        self.clutter_cnrs
            .iter()
            .map(|c| c * self.radar_noise_power)
            .collect()
    }

    /// Sets every user's noise power from a communication SNR `E / sigma_C^2`.
    pub fn with_comm_snr_db(mut self, snr_db: f64) -> Self {
        let s = self.power_budget / db_to_linear(snr_db);
        self.comm_noise_powers = vec![s; self.n_users];
        self
    }
}

/// Uniform linear array response, half-wavelength spacing, unit norm.
pub fn steering_vector(angle: f64, n_antennas: usize) -> CVector {
    let scale = 1.0 / (n_antennas as f64).sqrt();
    let s = angle.sin();
    CVector::from_fn(n_antennas, |k, _| {
        Complex64::from_polar(scale, -PI * k as f64 * s)
    })
}

/// Transmit and receive steering vectors toward one angle.
#[derive(Debug, Clone)]
pub struct SteeringPair {
    pub g_tx: CVector,
    pub g_rx: CVector,
}

impl SteeringPair {
    pub fn new(angle: f64, cfg: &SystemConfig) -> Self {
        SteeringPair {
            g_tx: steering_vector(angle, cfg.n_tx),
            g_rx: steering_vector(angle, cfg.n_rx),
        }
    }

    /// `g_R g_T^T` as a dense matrix.
    pub fn outer(&self) -> CMatrix {
        &self.g_rx * self.g_tx.transpose()
    }

    /// `G x = g_R (g_T^T x)` without forming the matrix.
    pub fn apply(&self, x: &CVector) -> CVector {
        &self.g_rx * self.g_tx.dot(x)
    }
}

/// `G(theta) = g_R(theta) g_T(theta)^T`.
pub fn radar_channel(angle: f64, cfg: &SystemConfig) -> CMatrix {
    SteeringPair::new(angle, cfg).outer()
}

/// Target and clutter channels. Each is rank one, so only the steering pairs
/// are stored and the matrices are formed on request.
#[derive(Debug, Clone)]
pub struct RadarChannel {
    pub target: SteeringPair,
    pub clutter: Vec<SteeringPair>,
}

impl RadarChannel {
    pub fn new(cfg: &SystemConfig) -> Self {
        RadarChannel {
            target: SteeringPair::new(cfg.target_angle, cfg),
            clutter: cfg
                .clutter_angles
                .iter()
                .map(|&a| SteeringPair::new(a, cfg))
                .collect(),
        }
    }

    pub fn g0(&self) -> CMatrix {
        self.target.outer()
    }

    pub fn gq(&self) -> Vec<CMatrix> {
        self.clutter.iter().map(SteeringPair::outer).collect()
    }

    pub fn n_tx(&self) -> usize {
        self.target.g_tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.target.g_rx.len()
    }
}

fn sign_unit(v: f64) -> f64 {
    // sign(0) := +1
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn csign(z: Complex64) -> Complex64 {
    Complex64::new(sign_unit(z.re), sign_unit(z.im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalKind {
    OneBit,
    Continuous,
}

/// A transmit vector on the 1-bit alphabet or on the power sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSignal {
    pub x: CVector,
    pub kind: SignalKind,
}

impl TransmitSignal {
    /// Wraps `x` as a 1-bit signal after checking every entry is `c(+-1 +- j)`.
    pub fn one_bit(x: CVector, cfg: &SystemConfig) -> Result<Self> {
        if x.len() != cfg.n_tx {
            return Err(dim(format!("x has {} entries, N_T = {}", x.len(), cfg.n_tx)));
        }
        let c = cfg.dac_amplitude();
        let on_grid = |v: f64| ((v.abs() - c) / c).abs() <= 1e-12;
        if x.iter().any(|z| !on_grid(z.re) || !on_grid(z.im)) {
            return Err(IsacError::InvalidConfig(
                "entry outside the 1-bit alphabet".into(),
            ));
        }
        let x = x.map(|z| Complex64::new(c * sign_unit(z.re), c * sign_unit(z.im)));
        Ok(TransmitSignal {
            x,
            kind: SignalKind::OneBit,
        })
    }

    /// Scales `x` onto `||x||^2 = E`.
    pub fn on_sphere(x: CVector, power_budget: f64) -> Result<Self> {
        let n = x.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(IsacError::Degenerate("cannot scale a zero vector onto the sphere".into()));
        }
        Ok(TransmitSignal {
            x: x * Complex64::from(power_budget.sqrt() / n),
            kind: SignalKind::Continuous,
        })
    }

    pub fn power(&self) -> f64 {
        self.x.norm_squared()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Entrywise 1-bit DAC: `sqrt(E/2N_T) (sign Re + j sign Im)`, sign(0) = +1.
pub fn quantize_dac_1bit(x_o: &CVector, cfg: &SystemConfig) -> Result<TransmitSignal> {
    if x_o.len() != cfg.n_tx {
        return Err(dim(format!("x_o has {} entries, N_T = {}", x_o.len(), cfg.n_tx)));
    }
    let c = Complex64::from(cfg.dac_amplitude());
    Ok(TransmitSignal {
        x: x_o.map(|z| csign(z) * c),
        kind: SignalKind::OneBit,
    })
}

/// Entrywise 1-bit ADC: `sign Re + j sign Im`, sign(0) = +1.
pub fn quantize_adc_1bit(r: &CVector) -> CVector {
    r.map(csign)
}

/// Per-user downlink channels and their symbol-rotated versions
/// `h_u exp(j angle(s_u))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannels {
    pub h: Vec<CVector>,
    pub rotated: Vec<CVector>,
}

impl CommChannels {
    pub fn new(h: Vec<CVector>) -> Self {
        CommChannels {
            rotated: h.clone(),
            h,
        }
    }

    pub fn n_users(&self) -> usize {
        self.h.len()
    }
}

/// I.i.d. CN(0, 1) channels. User `u` always comes from the same stream, so
/// the first `U` users agree across configurations that differ only in `U`.
pub fn draw_comm_channels(cfg: &SystemConfig) -> CommChannels {
    let h = (0..cfg.n_users)
        .map(|u| {
            let mut rng = substream(cfg.rng_seed, tags::COMM_CHANNEL, u as u64);
            CVector::from_fn(cfg.n_tx, |_, _| complex_normal(&mut rng, 1.0))
        })
        .collect();
    CommChannels::new(h)
}

/// Rotates each user's channel by the phase of its intended symbol.
pub fn rotate_channels(ch: &CommChannels, symbols: &[Complex64]) -> Result<CommChannels> {
    if symbols.len() != ch.n_users() {
        return Err(dim(format!(
            "{} symbols for {} users",
            symbols.len(),
            ch.n_users()
        )));
    }
    let rotated = ch
        .h
        .iter()
        .zip(symbols)
        .enumerate()
        .map(|(u, (h, s))| {
            if s.norm() == 0.0 {
                return Err(IsacError::ZeroSymbol(u));
            }
            let phase = Complex64::from_polar(1.0, s.arg());
            Ok(h * phase)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CommChannels {
        h: ch.h.clone(),
        rotated,
    })
}

/// Unit-modulus M-PSK with Gray labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub order: usize,
    pub points: Vec<Complex64>,
    bit_map: Vec<u32>,
}

impl Constellation {
    pub fn psk(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(IsacError::InvalidConfig(format!(
                "PSK order {order} is not a power of two >= 2"
            )));
        }
        let points = (0..order)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / order as f64))
            .collect();
        let bit_map = (0..order as u32).map(|m| m ^ (m >> 1)).collect();
        Ok(Constellation {
            order,
            points,
            bit_map,
        })
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    /// Gray label of symbol `index`.
    pub fn bits(&self, index: usize) -> u32 {
        self.bit_map[index]
    }

    pub fn bit_errors(&self, sent: usize, decided: usize) -> u32 {
        (self.bit_map[sent] ^ self.bit_map[decided]).count_ones()
    }

    pub fn symbol(&self, index: usize) -> Complex64 {
        self.points[index]
    }
}

/// Draws one symbol index per user from stream `(SYMBOLS, draw)`.
pub fn draw_symbol_indices(seed: u64, draw: u64, n_users: usize, order: usize) -> Vec<usize> {
    use rand::Rng;
    let mut rng = substream(seed, tags::SYMBOLS, draw);
    (0..n_users).map(|_| rng.random_range(0..order)).collect()
}

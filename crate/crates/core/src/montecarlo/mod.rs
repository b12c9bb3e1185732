//! Monte Carlo engines for the radar statistic and the downlink error rates.
//!
//! Trial `i` draws from its own stream `(tag, i)`, and samples are gathered
//! in trial order before any reduction. Estimates are therefore bit-identical
//! for any batch size or thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm::{decode_psk, sep_bounds};
use crate::designs::{design, DesignProblem, DesignResult, DesignStatus, Requirement};
use crate::error::{dim, IsacError, Result};
use crate::model::{
    draw_symbol_indices, quantize_adc_1bit, Constellation, CVector, RadarChannel, SystemConfig,
    TransmitSignal,
};
use crate::radar::{prob_detection, qscnr, scnr_infinite_bit, threshold_for_pfa, ReceiveFilter, Resolution};
use crate::rng::{complex_normal, substream, tags};

/// Smallest trial count for which statistics are reported.
pub const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_trials: usize,
    pub rng_seed: u64,
    /// Trials per parallel work item. Has no effect on the results.
    pub batch: usize,
}

impl McConfig {
    pub fn new(n_trials: usize, rng_seed: u64) -> Self {
        McConfig {
            n_trials,
            rng_seed,
            batch: 1024,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_trials < MIN_TRIALS {
            return Err(IsacError::TooFewTrials(self.n_trials));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    /// Binomial rate `k / n` with stderr `sqrt(p (1 - p) / n)`.
    pub fn rate(k: u64, n: usize) -> Self {
        let p = k as f64 / n as f64;
        McEstimate {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Sample variance `E|z - mean|^2` of complex samples with the stderr of
/// that estimate.
pub fn complex_variance(z: &[Complex64]) -> McEstimate {
    let n = z.len();
    let mean = z.iter().sum::<Complex64>() / n as f64;
    let dev: Vec<f64> = z.iter().map(|v| (v - mean).norm_sqr()).collect();
    let var = dev.iter().sum::<f64>() / (n - 1) as f64;
    let spread = dev.iter().map(|d| (d - var).powi(2)).sum::<f64>() / (n - 1) as f64;
    McEstimate {
        value: var,
        stderr: (spread / n as f64).sqrt(),
        n,
    }
}

/// `Var(z1) / Var(z0) - 1` with a delta-method stderr.
pub fn variance_ratio_estimate(z1: &[Complex64], z0: &[Complex64]) -> McEstimate {
    let v1 = complex_variance(z1);
    let v0 = complex_variance(z0);
    let r = v1.value / v0.value;
    McEstimate {
        value: r - 1.0,
        stderr: r * ((v1.stderr / v1.value).powi(2) + (v0.stderr / v0.value).powi(2)).sqrt(),
        n: v1.n.min(v0.n),
    }
}

/// Filter outputs `z = f^H r~` under H0 (clutter and noise) and H1 (plus target).
#[derive(Debug, Clone)]
pub struct RadarSamples {
    pub h0: Vec<Complex64>,
    pub h1: Vec<Complex64>,
}

fn radar_trial(
    with_target: bool,
    index: u64,
    x: &CVector,
    f: &ReceiveFilter,
    ch: &RadarChannel,
    cfg: &SystemConfig,
    adc: Resolution,
    seed: u64,
) -> Complex64 {
    let tag = if with_target { tags::RADAR_H1 } else { tags::RADAR_H0 };
    let mut rng = substream(seed, tag, index);
    let mut r = CVector::zeros(ch.n_rx());
    if with_target {
        let g0 = complex_normal(&mut rng, cfg.target_power());
        r += ch.target.apply(x) * g0;
    }
    for (pair, p) in ch.clutter.iter().zip(cfg.clutter_powers()) {
        let gq = complex_normal(&mut rng, p);
        r += pair.apply(x) * gq;
    }
    for v in r.iter_mut() {
        *v += complex_normal(&mut rng, cfg.radar_noise_power);
    }
    match adc {
        Resolution::OneBit => f.f.dotc(&quantize_adc_1bit(&r)),
        Resolution::Infinite => f.f.dotc(&r),
    }
}

/// Draws `mc.n_trials` outputs per hypothesis. The infinite-resolution path
/// skips the quantizer, so any gap between the two paths is due to it.
pub fn radar_samples(
    x: &TransmitSignal,
    f: &ReceiveFilter,
    ch: &RadarChannel,
    cfg: &SystemConfig,
    adc: Resolution,
    mc: &McConfig,
) -> Result<RadarSamples> {
    mc.check()?;
    if x.len() != ch.n_tx() || f.f.len() != ch.n_rx() {
        return Err(dim(format!(
            "signal {} / filter {} against a {}x{} channel",
            x.len(),
            f.f.len(),
            ch.n_rx(),
            ch.n_tx()
        )));
    }
    let draw = |with_target: bool| -> Vec<Complex64> {
        (0..mc.n_trials)
            .into_par_iter()
            .with_min_len(mc.batch.max(1))
            .map(|i| radar_trial(with_target, i as u64, &x.x, f, ch, cfg, adc, mc.rng_seed))
            .collect()
    };
    Ok(RadarSamples {
        h0: draw(false),
        h1: draw(true),
    })
}

/// Empirical output SCNR and the per-hypothesis variances behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QscnrEstimate {
    pub qscnr: McEstimate,
    pub var_h0: McEstimate,
    pub var_h1: McEstimate,
    /// Closed-form value for the same receiver resolution.
    pub analytic: f64,
}

/// `Var(z | H1) / Var(z | H0) - 1` over `mc.n_trials` trials per hypothesis.
pub fn mc_qscnr(
    x: &TransmitSignal,
    f: &ReceiveFilter,
    ch: &RadarChannel,
    cfg: &SystemConfig,
    adc: Resolution,
    mc: &McConfig,
) -> Result<QscnrEstimate> {
    let s = radar_samples(x, f, ch, cfg, adc, mc)?;
    let analytic = match adc {
        Resolution::OneBit => qscnr(f, x, ch, cfg)?,
        Resolution::Infinite => scnr_infinite_bit(f, x, ch, cfg)?,
    };
    Ok(QscnrEstimate {
        qscnr: variance_ratio_estimate(&s.h1, &s.h0),
        var_h0: complex_variance(&s.h0),
        var_h1: complex_variance(&s.h1),
        analytic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub delta: f64,
    pub threshold: f64,
    pub pfa: McEstimate,
    pub pd: McEstimate,
    pub pd_analytic: f64,
}

/// Empirical ROC of the 1-bit GLRT `|f^H r~| > kappa(delta)`. All thresholds
/// share one set of trials.
pub fn mc_roc(
    x: &TransmitSignal,
    f: &ReceiveFilter,
    ch: &RadarChannel,
    cfg: &SystemConfig,
    deltas: &[f64],
    mc: &McConfig,
) -> Result<Vec<RocPoint>> {
    let q = qscnr(f, x, ch, cfg)?;
    let thresholds = deltas
        .iter()
        .map(|&d| threshold_for_pfa(d, f, x, ch, cfg))
        .collect::<Result<Vec<_>>>()?;
    let s = radar_samples(x, f, ch, cfg, Resolution::OneBit, mc)?;
    let exceed = |z: &[Complex64], k: f64| z.iter().filter(|v| v.norm() > k).count() as u64;
    deltas
        .iter()
        .zip(thresholds)
        .map(|(&delta, k)| {
            Ok(RocPoint {
                delta,
                threshold: k,
                pfa: McEstimate::rate(exceed(&s.h0, k), s.h0.len()),
                pd: McEstimate::rate(exceed(&s.h1, k), s.h1.len()),
                pd_analytic: prob_detection(delta, q)?,
            })
        })
        .collect()
}

/// Symbol-vector designs per BER point.
pub const BER_SYMBOL_DRAWS: usize = 200;

/// Noise draws per design: `max(500, n_trials / 200)`.
pub fn noise_draws(mc: &McConfig) -> usize {
    (mc.n_trials / BER_SYMBOL_DRAWS).max(500)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointStatus {
    Feasible,
    /// Some symbol draws had no feasible design; rates cover the rest.
    Partial,
    Infeasible,
}

impl PointStatus {
    pub fn label(self) -> &'static str {
        match self {
            PointStatus::Feasible => "feasible",
            PointStatus::Partial => "partial",
            PointStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_c_db: f64,
    pub status: PointStatus,
    /// `None` when no design was feasible.
    pub ber: Option<McEstimate>,
    pub sep: Option<McEstimate>,
    /// Per-user SEP bounds averaged over users and feasible designs.
    pub sep_lower: f64,
    pub sep_upper: f64,
    /// Smallest user margin over the feasible designs.
    pub alpha_min: f64,
    pub mean_qscnr: f64,
    pub designs: usize,
    pub infeasible_designs: usize,
}

/// Error counts of one design under `n_noise` downlink noise draws.
struct DrawOutcome {
    feasible: bool,
    symbol_errors: u64,
    bit_errors: u64,
    lower: f64,
    upper: f64,
    alpha_min: f64,
    qscnr: f64,
}

fn design_for(template: &DesignProblem, cfg: &SystemConfig, draw: u64) -> Result<DesignResult> {
    let psk = Constellation::psk(cfg.modulation_order)?;
    let idx = draw_symbol_indices(cfg.rng_seed, draw, cfg.n_users, cfg.modulation_order);
    let mut p = template.clone();
    p.cfg = cfg.clone();
    p.symbols = idx.iter().map(|&i| psk.symbol(i)).collect();
    design(&p)
}

fn count_errors(
    res: &DesignResult,
    cfg: &SystemConfig,
    template: &DesignProblem,
    draw: u64,
    stream: u64,
    n_noise: usize,
) -> Result<DrawOutcome> {
    let order = cfg.modulation_order;
    let psk = Constellation::psk(order)?;
    let idx = draw_symbol_indices(cfg.rng_seed, draw, cfg.n_users, order);
    let clean: Vec<Complex64> = template.channels.h.iter().map(|h| h.dotc(&res.x.x)).collect();
    let mut rng = substream(cfg.rng_seed, tags::COMM_NOISE, stream);
    let (mut se, mut be) = (0u64, 0u64);
    for _ in 0..n_noise {
        for (u, y0) in clean.iter().enumerate() {
            let y = y0 + complex_normal(&mut rng, cfg.comm_noise_powers[u]);
            let d = decode_psk(y, &psk);
            if d != idx[u] {
                se += 1;
                be += u64::from(psk.bit_errors(idx[u], d));
            }
        }
    }
    let (mut lower, mut upper) = (0.0, 0.0);
    for (alpha, s2) in res.user_margins.iter().zip(&cfg.comm_noise_powers) {
        let b = sep_bounds(*alpha, s2.sqrt(), order)?;
        lower += b.lower;
        upper += b.upper;
    }
    let users = cfg.n_users as f64;
    Ok(DrawOutcome {
        feasible: true,
        symbol_errors: se,
        bit_errors: be,
        lower: lower / users,
        upper: upper / users,
        alpha_min: res.final_min_margin,
        qscnr: res.final_qscnr,
    })
}

/// Downlink SEP and Gray-coded BER over a grid of communication SNRs. Each
/// point averages [`BER_SYMBOL_DRAWS`] symbol vectors, each with its own
/// design, times [`noise_draws`] noise realizations.
///
/// Designs that do not depend on the noise level (QoD requirements) are
/// solved once per symbol vector and shared by all grid points.
pub fn mc_ber(problem: &DesignProblem, snr_c_grid: &[f64], mc: &McConfig) -> Result<Vec<BerPoint>> {
    mc.check()?;
    problem.validate()?;
    let n_noise = noise_draws(mc);
    let draws = BER_SYMBOL_DRAWS as u64;
    let cfgs: Vec<SystemConfig> = snr_c_grid
        .iter()
        .map(|&s| problem.cfg.clone().with_comm_snr_db(s))
        .collect();
    let shared = matches!(problem.requirement, Requirement::Qod { .. });
    let cached: Vec<Option<DesignResult>> = if shared {
        (0..draws)
            .into_par_iter()
            .map(|d| design_for(problem, &problem.cfg, d).map(Some))
            .collect::<Result<_>>()?
    } else {
        vec![None; BER_SYMBOL_DRAWS]
    };

    let mut out = Vec::with_capacity(cfgs.len());
    for (gi, (cfg, &snr)) in cfgs.iter().zip(snr_c_grid).enumerate() {
        let outcomes: Vec<DrawOutcome> = (0..draws)
            .into_par_iter()
            .map(|d| {
                let res = match &cached[d as usize] {
                    Some(r) => r.clone(),
                    None => design_for(problem, cfg, d)?,
                };
                if res.status == DesignStatus::Infeasible {
                    return Ok(DrawOutcome {
                        feasible: false,
                        symbol_errors: 0,
                        bit_errors: 0,
                        lower: 0.0,
                        upper: 0.0,
                        alpha_min: f64::NAN,
                        qscnr: f64::NAN,
                    });
                }
                let stream = gi as u64 * draws + d;
                count_errors(&res, cfg, problem, d, stream, n_noise)
            })
            .collect::<Result<_>>()?;
        out.push(summarize(snr, cfg, &outcomes, n_noise));
    }
    Ok(out)
}

fn summarize(snr: f64, cfg: &SystemConfig, outcomes: &[DrawOutcome], n_noise: usize) -> BerPoint {
    let ok: Vec<&DrawOutcome> = outcomes.iter().filter(|o| o.feasible).collect();
    let bad = outcomes.len() - ok.len();
    let status = match (ok.len(), bad) {
        (_, 0) => PointStatus::Feasible,
        (0, _) => PointStatus::Infeasible,
        _ => PointStatus::Partial,
    };
    if ok.is_empty() {
        return BerPoint {
            snr_c_db: snr,
            status,
            ber: None,
            sep: None,
            sep_lower: f64::NAN,
            sep_upper: f64::NAN,
            alpha_min: f64::NAN,
            mean_qscnr: f64::NAN,
            designs: outcomes.len(),
            infeasible_designs: bad,
        };
    }
    let symbols = ok.len() * n_noise * cfg.n_users;
    let bits = symbols * cfg.modulation_order.trailing_zeros() as usize;
    let m = ok.len() as f64;
    BerPoint {
        snr_c_db: snr,
        status,
        ber: Some(McEstimate::rate(ok.iter().map(|o| o.bit_errors).sum(), bits)),
        sep: Some(McEstimate::rate(ok.iter().map(|o| o.symbol_errors).sum(), symbols)),
        sep_lower: ok.iter().map(|o| o.lower).sum::<f64>() / m,
        sep_upper: ok.iter().map(|o| o.upper).sum::<f64>() / m,
        alpha_min: ok.iter().map(|o| o.alpha_min).fold(f64::INFINITY, f64::min),
        mean_qscnr: ok.iter().map(|o| o.qscnr).sum::<f64>() / m,
        designs: outcomes.len(),
        infeasible_designs: bad,
    }
}

#[cfg(test)]
mod tests;

//! Receive filtering, SCNR metrics, GLRT detection statistics and the radar
//! energy-efficiency model.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim, IsacError, Result};
use crate::model::{CMatrix, CVector, RadarChannel, SystemConfig, TransmitSignal};

/// Converter resolution at either end of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    OneBit,
    Infinite,
}

impl Resolution {
    pub fn label(self) -> &'static str {
        match self {
            Resolution::OneBit => "1bit",
            Resolution::Infinite => "inf",
        }
    }
}

/// Weights of the output SCNR seen by a receiver of a given resolution:
/// `mu |f^H G_0 x|^2 / (sum_q w_q |f^H G_q x|^2 + ||f||^2)`.
///
/// A 1-bit receiver scales signal and clutter by `2/pi` relative to the
/// unquantized one; the noise term is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarMetric {
    pub mu: f64,
    pub clutter_weights: Vec<f64>,
}

impl RadarMetric {
    pub fn for_adc(adc: Resolution, cfg: &SystemConfig) -> Self {
        let scale = match adc {
            Resolution::OneBit => 2.0 / PI,
            Resolution::Infinite => 1.0,
        };
        RadarMetric {
            mu: scale * cfg.radar_snr,
            clutter_weights: cfg.clutter_cnrs.iter().map(|c| scale * c).collect(),
        }
    }

    /// Upper bound `mu E` on the concentrated metric over `||x||^2 <= E`.
    pub fn ceiling(&self, power_budget: f64) -> f64 {
        self.mu * power_budget
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveFilter {
    pub f: CVector,
}

fn target_echo(x: &TransmitSignal, ch: &RadarChannel) -> CVector {
    ch.target.apply(&x.x)
}

/// `M = sum_q w_q (G_q x)(G_q x)^H + I`.
pub fn interference_matrix(x: &CVector, ch: &RadarChannel, weights: &[f64]) -> CMatrix {
    let n = ch.n_rx();
    let mut m = CMatrix::identity(n, n);
    for (pair, &w) in ch.clutter.iter().zip(weights) {
        let a = pair.apply(x);
        m.ger(Complex64::from(w), &a, &a.conjugate(), Complex64::from(1.0));
    }
    m
}

pub(crate) fn solve_hpd(m: CMatrix, b: &CVector) -> CVector {
    // M = I + PSD, so the factorization cannot fail.
    Cholesky::new(m)
        .expect("interference matrix is positive definite")
        .solve(b)
}

fn check_lengths(f: &ReceiveFilter, x: &TransmitSignal, ch: &RadarChannel) -> Result<()> {
    if f.f.len() != ch.n_rx() || x.len() != ch.n_tx() {
        return Err(dim(format!(
            "filter {} / signal {} against a {}x{} channel",
            f.f.len(),
            x.len(),
            ch.n_rx(),
            ch.n_tx()
        )));
    }
    Ok(())
}

/// Rayleigh-quotient maximizer `M^{-1} G_0 x / (x^H G_0^H M^{-1} G_0 x)` for
/// the given metric weights.
pub fn receive_filter_for(
    metric: &RadarMetric,
    x: &TransmitSignal,
    ch: &RadarChannel,
) -> Result<ReceiveFilter> {
    let s = target_echo(x, ch);
    if s.norm() <= 1e-14 * x.x.norm().max(f64::MIN_POSITIVE) {
        return Err(IsacError::Degenerate(
            "transmit signal is orthogonal to the target steering vector".into(),
        ));
    }
    let m = interference_matrix(&x.x, ch, &metric.clutter_weights);
    let v = solve_hpd(m, &s);
    let denom = s.dotc(&v).re;
    Ok(ReceiveFilter {
        f: v / Complex64::from(denom),
    })
}

/// Optimal filter for the 1-bit receiver.
pub fn receive_filter(x: &TransmitSignal, ch: &RadarChannel, cfg: &SystemConfig) -> Result<ReceiveFilter> {
    receive_filter_for(&RadarMetric::for_adc(Resolution::OneBit, cfg), x, ch)
}

/// Output SCNR of filter `f` under `metric`.
pub fn filtered_scnr(
    metric: &RadarMetric,
    f: &ReceiveFilter,
    x: &TransmitSignal,
    ch: &RadarChannel,
) -> Result<f64> {
    check_lengths(f, x, ch)?;
    let energy = f.f.norm_squared();
    if !(energy > 0.0) {
        return Err(IsacError::Degenerate("receive filter is zero".into()));
    }
    let signal = f.f.dotc(&target_echo(x, ch)).norm_sqr();
    let clutter: f64 = ch
        .clutter
        .iter()
        .zip(&metric.clutter_weights)
        .map(|(pair, w)| w * f.f.dotc(&pair.apply(&x.x)).norm_sqr())
        .sum();
    Ok(metric.mu * signal / (clutter + energy))
}

/// SCNR after the 1-bit ADC.
pub fn qscnr(f: &ReceiveFilter, x: &TransmitSignal, ch: &RadarChannel, cfg: &SystemConfig) -> Result<f64> {
    filtered_scnr(&RadarMetric::for_adc(Resolution::OneBit, cfg), f, x, ch)
}

/// SCNR of an unquantized receiver.
pub fn scnr_infinite_bit(
    f: &ReceiveFilter,
    x: &TransmitSignal,
    ch: &RadarChannel,
    cfg: &SystemConfig,
) -> Result<f64> {
    filtered_scnr(&RadarMetric::for_adc(Resolution::Infinite, cfg), f, x, ch)
}

/// `mu x^H G_0^H M^{-1} G_0 x`, the metric with the optimal filter plugged in.
pub fn concentrated_scnr(metric: &RadarMetric, x: &CVector, ch: &RadarChannel) -> f64 {
    let s = ch.target.apply(x);
    let m = interference_matrix(x, ch, &metric.clutter_weights);
    let v = solve_hpd(m, &s);
    metric.mu * s.dotc(&v).re
}

pub fn qscnr_concentrated(x: &TransmitSignal, ch: &RadarChannel, cfg: &SystemConfig) -> Result<f64> {
    if ch.target.apply(&x.x).norm() == 0.0 {
        return Err(IsacError::Degenerate(
            "transmit signal is orthogonal to the target steering vector".into(),
        ));
    }
    Ok(concentrated_scnr(
        &RadarMetric::for_adc(Resolution::OneBit, cfg),
        &x.x,
        ch,
    ))
}

/// Clutter term `Pi_0 = sum_q 4 varsigma_q^2 / (pi sigma_R^2) |f^H G_q x|^2`.
pub fn clutter_spread(f: &ReceiveFilter, x: &TransmitSignal, ch: &RadarChannel, cfg: &SystemConfig) -> f64 {
    ch.clutter
        .iter()
        .zip(&cfg.clutter_cnrs)
        .map(|(pair, cnr)| 4.0 * cnr / PI * f.f.dotc(&pair.apply(&x.x)).norm_sqr())
        .sum()
}

/// Statistics of the asymptotic detector `|f^H r~|` for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionStats {
    pub pi0: f64,
    pub pi1: f64,
    pub filter_energy: f64,
    pub qscnr: f64,
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
}

impl DetectionStats {
    /// Asymptotic variance of `z` under H0, `2||f||^2 + Pi_0`.
    pub fn var_h0(&self) -> f64 {
        2.0 * self.filter_energy + self.pi0
    }

    pub fn var_h1(&self) -> f64 {
        2.0 * self.filter_energy + self.pi1
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(IsacError::Domain {
            name: "false-alarm probability",
            value: delta,
            domain: "(0, 1)",
        })
    }
}

/// Threshold on `|z|` that yields false-alarm probability `delta`.
pub fn threshold_for_pfa(
    delta: f64,
    f: &ReceiveFilter,
    x: &TransmitSignal,
    ch: &RadarChannel,
    cfg: &SystemConfig,
) -> Result<f64> {
    check_delta(delta)?;
    let var0 = 2.0 * f.f.norm_squared() + clutter_spread(f, x, ch, cfg);
    Ok((-var0 * delta.ln()).sqrt())
}

/// Inverse of [`threshold_for_pfa`]: `exp(-kappa^2 / (2||f||^2 + Pi_0))`.
pub fn pfa_of_threshold(
    threshold: f64,
    f: &ReceiveFilter,
    x: &TransmitSignal,
    ch: &RadarChannel,
    cfg: &SystemConfig,
) -> f64 {
    let var0 = 2.0 * f.f.norm_squared() + clutter_spread(f, x, ch, cfg);
    (-threshold * threshold / var0).exp()
}

/// `Pr_D = exp(ln(delta) / (1 + qscnr))`.
pub fn prob_detection(delta: f64, qscnr_value: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(qscnr_value >= 0.0) {
        return Err(IsacError::Domain {
            name: "QSCNR",
            value: qscnr_value,
            domain: "[0, inf)",
        });
    }
    Ok((delta.ln() / (1.0 + qscnr_value)).exp())
}

/// QSCNR needed for detection probability `eta` at false-alarm rate `delta`:
/// `ln(delta) / ln(eta) - 1`.
pub fn qscnr_for_detection(delta: f64, eta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(eta > delta && eta < 1.0) {
        return Err(IsacError::Domain {
            name: "detection probability",
            value: eta,
            domain: "(Pr_FA, 1)",
        });
    }
    Ok(delta.ln() / eta.ln() - 1.0)
}

pub fn detection_stats(
    delta: f64,
    f: &ReceiveFilter,
    x: &TransmitSignal,
    ch: &RadarChannel,
    cfg: &SystemConfig,
) -> Result<DetectionStats> {
    check_lengths(f, x, ch)?;
    let pi0 = clutter_spread(f, x, ch, cfg);
    let target = 4.0 * cfg.radar_snr / PI * f.f.dotc(&ch.target.apply(&x.x)).norm_sqr();
    let q = qscnr(f, x, ch, cfg)?;
    let threshold = threshold_for_pfa(delta, f, x, ch, cfg)?;
    Ok(DetectionStats {
        pi0,
        pi1: pi0 + target,
        filter_energy: f.f.norm_squared(),
        qscnr: q,
        threshold,
        pfa: delta,
        pd: prob_detection(delta, q)?,
    })
}

/// GLRT statistic `|f^H r~|`.
pub fn glrt_statistic(f: &ReceiveFilter, r_quantized: &CVector) -> Result<f64> {
    if f.f.len() != r_quantized.len() {
        return Err(dim(format!(
            "filter has {} taps, observation has {} samples",
            f.f.len(),
            r_quantized.len()
        )));
    }
    Ok(f.f.dotc(r_quantized).norm())
}

/// Front-end power model. Converter power follows Walden's figure of merit,
/// `FOM_w f_s 2^B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub e_rf: f64,
    pub e_lna: f64,
    pub e_bb: f64,
    pub fom_w: f64,
    pub f_s: f64,
    pub bits_adc: u32,
    pub bits_dac: u32,
}

/// Resolution used to stand in for an unquantized converter.
pub const INFINITE_BITS: u32 = 10;

impl PowerModel {
    pub fn new(dac: Resolution, adc: Resolution) -> Self {
        let bits = |r| match r {
            Resolution::OneBit => 1,
            Resolution::Infinite => INFINITE_BITS,
        };
        PowerModel {
            e_rf: 40e-3,
            e_lna: 20e-3,
            e_bb: 200e-3,
            fom_w: 500e-15,
            f_s: 1e9,
            bits_adc: bits(adc),
            bits_dac: bits(dac),
        }
    }

    pub fn converter_power(&self, bits: u32) -> f64 {
        self.fom_w * self.f_s * 2f64.powi(bits as i32)
    }

    /// Total consumption. DACs sit on the N_T transmit chains and ADCs on the
    /// N_R receive chains, two converters (I and Q) per chain.
    pub fn total_power(&self, n_tx: usize, n_rx: usize) -> f64 {
        let (nt, nr) = (n_tx as f64, n_rx as f64);
        (nt + nr) * (self.e_rf + self.e_lna)
            + 2.0 * self.e_bb
            + 2.0 * nt * self.converter_power(self.bits_dac)
            + 2.0 * nr * self.converter_power(self.bits_adc)
    }
}

/// Linear SCNR per watt of front-end consumption.
pub fn radar_energy_efficiency(scnr_linear: f64, cfg: &SystemConfig, pm: &PowerModel) -> Result<f64> {
    if !(scnr_linear >= 0.0) {
        return Err(IsacError::Domain {
            name: "SCNR",
            value: scnr_linear,
            domain: "[0, inf)",
        });
    }
    Ok(scnr_linear / pm.total_power(cfg.n_tx, cfg.n_rx))
}

//! Minorize-maximize surrogates of the concentrated radar metric
//! `mu s^H M^{-1} s` with `s = G_0 x` and `M = sum_q w_q G_q x x^H G_q^H + I`.
//!
//! Stage one replaces the inverse-quadratic form by a concave quadratic that
//! touches it at `x_t`. Stage two drops the quadratic's curvature on the
//! power sphere `||x||^2 = E`, which leaves a linear function `Re(w_t^H x)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dim, IsacError, Result};
use crate::model::{CMatrix, CVector, RadarChannel};
use crate::radar::{interference_matrix, solve_hpd, RadarMetric};

#[derive(Debug, Clone)]
pub struct SurrogateState {
    pub mu: f64,
    /// `M_t`.
    pub m_t: CMatrix,
    /// `M~_t = sum_q w_q G_q^H v v^H G_q` with `v = M_t^{-1} G_0 x_t`.
    pub m_tilde: CMatrix,
    /// Largest eigenvalue of `M~_t`.
    pub ell_max: f64,
    /// `G_0^H M_t^{-1} G_0 x_t`.
    pub b_t: CVector,
    pub w_t: CVector,
    pub const1: f64,
    pub const2: f64,
    pub anchor: CVector,
}

/// Stage one (quadratic minorizer) at `x_t`. The linear stage is left zero
/// until [`majorize_to_linear`] is called.
pub fn minorize_inverse_quadratic(
    x_t: &CVector,
    ch: &RadarChannel,
    metric: &RadarMetric,
) -> Result<SurrogateState> {
    if x_t.len() != ch.n_tx() {
        return Err(dim(format!(
            "anchor of length {} for {} transmit antennas",
            x_t.len(),
            ch.n_tx()
        )));
    }
    if x_t.norm() == 0.0 {
        return Err(IsacError::Degenerate("surrogate anchor is zero".into()));
    }
    let s = ch.target.apply(x_t);
    let m_t = interference_matrix(x_t, ch, &metric.clutter_weights);
    let v = solve_hpd(m_t.clone(), &s);

    let n = ch.n_tx();
    let q = ch.clutter.len();
    // M~ = B D B^H with B = [conj(g_T,q)] and D = diag(w_q |g_R,q^H v|^2).
    let d: Vec<f64> = ch
        .clutter
        .iter()
        .zip(&metric.clutter_weights)
        .map(|(p, w)| w * p.g_rx.dotc(&v).norm_sqr())
        .collect();
    let mut m_tilde = CMatrix::zeros(n, n);
    for (p, dq) in ch.clutter.iter().zip(&d) {
        let b = p.g_tx.conjugate();
        m_tilde.ger(Complex64::from(*dq), &b, &p.g_tx, Complex64::from(1.0));
    }
    // Nonzero spectrum of M~ equals that of the Q x Q matrix D^1/2 B^H B D^1/2.
    let ell_max = if q == 0 {
        0.0
    } else {
        let k = DMatrix::<Complex64>::from_fn(q, q, |i, j| {
            let gram = ch.clutter[i].g_tx.dot(&ch.clutter[j].g_tx.conjugate());
            gram * (d[i] * d[j]).sqrt()
        });
        k.symmetric_eigenvalues().max().max(0.0)
    };

    let b_t = ch.target.g_tx.conjugate() * ch.target.g_rx.dotc(&v);
    Ok(SurrogateState {
        mu: metric.mu,
        m_t,
        m_tilde,
        ell_max,
        b_t,
        w_t: CVector::zeros(n),
        const1: -metric.mu * v.norm_squared(),
        const2: 0.0,
        anchor: x_t.clone(),
    })
}

/// Stage two: `w_t = 2 mu b_t - 2 mu (M~_t - l I) x_t` and
/// `const2 = const1 - mu l E + mu x_t^H (M~_t - l I) x_t`.
pub fn majorize_to_linear(state: &mut SurrogateState, power_budget: f64) -> (CVector, f64) {
    let mu = state.mu;
    let l = state.ell_max;
    let shifted = &state.m_tilde * &state.anchor - &state.anchor * Complex64::from(l);
    let w = &state.b_t * Complex64::from(2.0 * mu) - &shifted * Complex64::from(2.0 * mu);
    let const2 = state.const1 - mu * l * power_budget + mu * state.anchor.dotc(&shifted).re;
    state.w_t = w.clone();
    state.const2 = const2;
    (w, const2)
}

/// Both stages at once.
pub fn build_surrogate(
    x_t: &CVector,
    ch: &RadarChannel,
    metric: &RadarMetric,
    power_budget: f64,
) -> Result<SurrogateState> {
    let mut state = minorize_inverse_quadratic(x_t, ch, metric)?;
    majorize_to_linear(&mut state, power_budget);
    Ok(state)
}

/// `-mu x^H M~ x + 2 mu Re(b_t^H x) + const1`.
pub fn quadratic_surrogate(state: &SurrogateState, x: &CVector) -> f64 {
    let quad = x.dotc(&(&state.m_tilde * x)).re;
    -state.mu * quad + 2.0 * state.mu * state.b_t.dotc(x).re + state.const1
}

/// `Re(w_t^H x) + const2`.
pub fn linear_surrogate(state: &SurrogateState, x: &CVector) -> f64 {
    state.w_t.dotc(x).re + state.const2
}

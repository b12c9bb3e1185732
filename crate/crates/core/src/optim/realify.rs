//! Lifting of complex linear forms onto the stacked real vector
//! `x_r = [Re x; Im x]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{dim, IsacError, Result};
use crate::model::{CMatrix, CVector};

/// A continuous variable `lambda` entering the objective with weight
/// `objective` and row `i` as `A_i x_r - coupling_i lambda >= b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousVar {
    pub objective: f64,
    pub coupling: Vec<f64>,
}

/// `max w^T x_r (+ objective * lambda)  s.t.  A x_r (- g lambda) >= b`,
/// `x_r in {-c, +c}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpInstance {
    pub objective: Vec<f64>,
    pub constraint_matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
    pub amplitude: f64,
    pub continuous_var: Option<ContinuousVar>,
}

impl IlpInstance {
    pub fn n_binaries(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(IsacError::Domain {
                name: "binary amplitude",
                value: self.amplitude,
                domain: "(0, inf)",
            });
        }
        let (k, n) = self.constraint_matrix.shape();
        if k != self.rhs.len() || (k > 0 && n != self.n_binaries()) {
            return Err(dim(format!(
                "{k}x{n} constraints, {} rhs entries, {} binaries",
                self.rhs.len(),
                self.n_binaries()
            )));
        }
        if let Some(cv) = &self.continuous_var {
            if cv.coupling.len() != k {
                return Err(dim(format!(
                    "{} coupling coefficients for {k} rows",
                    cv.coupling.len()
                )));
            }
        }
        let finite = self.objective.iter().chain(&self.rhs).all(|v| v.is_finite())
            && self.constraint_matrix.iter().all(|v| v.is_finite());
        if !finite {
            return Err(IsacError::InvalidConfig("non-finite ILP coefficient".into()));
        }
        Ok(())
    }

    /// Row activities `A x_r`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_constraints())
            .map(|i| {
                self.constraint_matrix
                    .row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn linear_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Objective and best `lambda` at a binary point, or `None` when it is
    /// infeasible. Row slack tolerance is `tol (1 + |b_i|)`.
    pub fn evaluate(&self, x: &[f64], tol: f64) -> Option<(f64, Option<f64>)> {
        let act = self.activities(x);
        let base = self.linear_value(x);
        let slack = |i: usize| tol * (1.0 + self.rhs[i].abs());
        match &self.continuous_var {
            None => act
                .iter()
                .zip(&self.rhs)
                .enumerate()
                .all(|(i, (a, b))| *a >= b - slack(i))
                .then_some((base, None)),
            Some(cv) => {
                // Each row bounds lambda from one side (or not at all when g_i = 0).
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..act.len() {
                    let r = act[i] - self.rhs[i];
                    let g = cv.coupling[i];
                    if g > 0.0 {
                        hi = hi.min(r / g);
                    } else if g < 0.0 {
                        lo = lo.max(r / g);
                    } else if r < -slack(i) {
                        return None;
                    }
                }
                if lo > hi + tol * (1.0 + hi.abs()) {
                    return None;
                }
                let lambda = if cv.objective > 0.0 {
                    hi
                } else if cv.objective < 0.0 {
                    lo
                } else if lo.is_finite() {
                    lo
                } else if hi.is_finite() {
                    hi
                } else {
                    0.0
                };
                if !lambda.is_finite() {
                    return None;
                }
                Some((base + cv.objective * lambda, Some(lambda)))
            }
        }
    }
}

/// `[Re v; Im v]`.
pub fn realify_vector(v: &CVector) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`realify_vector`].
pub fn unrealify(x: &[f64]) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(x[i], x[i + n]))
}

/// Rows `[Re A, -Im A]`, so that `Re(A x) = A_r x_r`.
pub fn realify_rows(a: &CMatrix) -> DMatrix<f64> {
    let (k, n) = a.shape();
    DMatrix::from_fn(k, 2 * n, |i, j| {
        if j < n {
            a[(i, j)].re
        } else {
            -a[(i, j - n)].im
        }
    })
}

/// Lift `max Re(w^H x)  s.t.  Re(A x) >= b` onto `x_r`. The objective
/// becomes `[Re w; Im w]` since `Re(w^H x) = Re w . Re x + Im w . Im x`.
pub fn realify(
    objective: &CVector,
    constraints: &CMatrix,
    rhs: &[f64],
    amplitude: f64,
) -> Result<IlpInstance> {
    let (k, n) = constraints.shape();
    if k != rhs.len() || (k > 0 && n != objective.len()) {
        return Err(dim(format!(
            "{k}x{n} constraints, {} rhs entries, objective length {}",
            rhs.len(),
            objective.len()
        )));
    }
    let mut constraint_matrix = realify_rows(constraints);
    if k == 0 {
        constraint_matrix = DMatrix::zeros(0, 2 * objective.len());
    }
    let inst = IlpInstance {
        objective: realify_vector(objective).iter().copied().collect(),
        constraint_matrix,
        rhs: rhs.to_vec(),
        amplitude,
        continuous_var: None,
    };
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, substream};

    fn random_cvec(seed: u64, n: usize) -> CVector {
        let mut rng = substream(seed, 0, 0);
        CVector::from_fn(n, |_, _| complex_normal(&mut rng, 1.0))
    }

    #[test]
    fn inner_products_preserved() {
        for s in 0..10_000u64 {
            let n = 1 + (s % 7) as usize;
            let w = random_cvec(2 * s, n);
            let x = random_cvec(2 * s + 1, n);
            let lhs = w.dotc(&x).re;
            let rhs = realify_vector(&w).dot(&realify_vector(&x));
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} {rhs}");
        }
    }

    #[test]
    fn real_vectors_reduce_to_plain_dot() {
        let w = CVector::from_vec(vec![Complex64::new(1.5, 0.0), Complex64::new(-2.0, 0.0)]);
        let x = CVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(3.0, 0.0)]);
        let inst = realify(&w, &CMatrix::zeros(0, 2), &[], 1.0).unwrap();
        let xr: Vec<f64> = realify_vector(&x).iter().copied().collect();
        assert_eq!(inst.linear_value(&xr), 1.5 * 0.5 - 2.0 * 3.0);
    }

    #[test]
    fn margin_row_lift_matches_complex_form() {
        let h = random_cvec(5, 4);
        let kappa = Complex64::new(0.3, -1.2);
        let row = h.adjoint() * kappa;
        let a = CMatrix::from_rows(&[row.clone()]);
        let ar = realify_rows(&a);
        for s in 0..50u64 {
            let x = random_cvec(100 + s, 4);
            let complex = (row.clone() * &x)[(0, 0)].re;
            let xr = realify_vector(&x);
            let real: f64 = ar.row(0).iter().zip(xr.iter()).map(|(p, q)| p * q).sum();
            assert!((complex - real).abs() <= 1e-12);
        }
        for j in 0..4 {
            assert_eq!(ar[(0, j)], row[j].re);
            assert_eq!(ar[(0, j + 4)], -row[j].im);
        }
    }

    #[test]
    fn round_trip() {
        let x = random_cvec(9, 5);
        let xr: Vec<f64> = realify_vector(&x).iter().copied().collect();
        assert_eq!(unrealify(&xr), x);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let w = random_cvec(1, 3);
        assert!(realify(&w, &CMatrix::zeros(2, 3), &[0.0], 1.0).is_err());
        assert!(realify(&w, &CMatrix::zeros(1, 3), &[0.0], 0.0).is_err());
    }
}

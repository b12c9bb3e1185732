//! Dense bounded-variable primal simplex for
//! `max c^T y  s.t.  a_i^T y >= b_i,  l <= y <= u`.
//!
//! Each row gets a surplus `s_i >= 0` and an artificial `r_i`, so the working
//! system is `a_i^T y - s_i + sigma_i r_i = b_i`. Phase 1 drives the
//! artificials to zero, phase 2 fixes them at zero and optimizes `c`.
//! Nonbasic variables sit at a finite bound, or at zero when free.

use super::realify::IlpInstance;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Tableau {
    m: usize,
    ncols: usize,
    // Row-major B^{-1} [A | -I | diag(sigma)].
    t: Vec<f64>,
    full_rhs: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    val: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    // Original (unreduced) columns, row-major m x ncols, for refactoring values.
    a_full: Vec<f64>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.t[r * n + j];
        for k in 0..n {
            self.t[r * n + k] /= p;
        }
        let prow: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + j];
            if f != 0.0 {
                for k in 0..n {
                    self.t[i * n + k] -= f * prow[k];
                }
                self.t[i * n + j] = 0.0;
            }
        }
    }

    /// Recompute basic values from `B^{-1}(b - N x_N)` to shed drift.
    fn refresh_basic_values(&mut self) {
        let n = self.ncols;
        let mut resid = self.full_rhs.clone();
        for j in 0..n {
            if self.state[j] != State::Basic && self.val[j] != 0.0 {
                for (i, r) in resid.iter_mut().enumerate() {
                    *r -= self.a_full[i * n + j] * self.val[j];
                }
            }
        }
        // B^{-1} = T_art diag(sigma), and T_art is stored in the last m columns.
        let art0 = n - self.m;
        for i in 0..self.m {
            let mut s = 0.0;
            for (k, rk) in resid.iter().enumerate() {
                let sigma = self.a_full[k * n + art0 + k];
                s += self.t[i * n + art0 + k] * sigma * rk;
            }
            self.val[self.basis[i]] = s;
        }
    }

    fn run(&mut self, cost: &[f64], max_iter: usize) -> LpStatus {
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            let d = self.reduced_costs(cost);
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                let dir = match self.state[j] {
                    State::Basic => continue,
                    State::Lower if d[j] > COST_TOL => 1.0,
                    State::Upper if d[j] < -COST_TOL => -1.0,
                    State::Free if d[j].abs() > COST_TOL => d[j].signum(),
                    _ => continue,
                };
                let score = d[j].abs();
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if score > best {
                    best = score;
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else {
                return LpStatus::Optimal;
            };

            let mut theta = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_mag = 0.0;
            for i in 0..self.m {
                let alpha = self.at(i, j) * dir;
                let k = self.basis[i];
                let (limit, to_upper) = if alpha > PIVOT_TOL && self.lo[k].is_finite() {
                    (((self.val[k] - self.lo[k]) / alpha).max(0.0), false)
                } else if alpha < -PIVOT_TOL && self.hi[k].is_finite() {
                    (((self.hi[k] - self.val[k]) / -alpha).max(0.0), true)
                } else {
                    continue;
                };
                let better = limit < theta - 1e-12
                    || (limit <= theta + 1e-12
                        && leave.is_some()
                        && if bland {
                            k < self.basis[leave.unwrap().0]
                        } else {
                            alpha.abs() > leave_mag
                        });
                if better {
                    theta = limit;
                    leave = Some((i, to_upper));
                    leave_mag = alpha.abs();
                }
            }
            if theta.is_infinite() {
                return LpStatus::Unbounded;
            }
            degenerate_run = if theta < 1e-12 { degenerate_run + 1 } else { 0 };

            self.val[j] += dir * theta;
            for i in 0..self.m {
                let k = self.basis[i];
                self.val[k] -= self.at(i, j) * dir * theta;
            }
            match leave {
                None => {
                    // Bound flip: the entering variable crosses its own range.
                    if dir > 0.0 {
                        self.val[j] = self.hi[j];
                        self.state[j] = State::Upper;
                    } else {
                        self.val[j] = self.lo[j];
                        self.state[j] = State::Lower;
                    }
                }
                Some((r, to_upper)) => {
                    let k = self.basis[r];
                    if to_upper {
                        self.val[k] = self.hi[k];
                        self.state[k] = State::Upper;
                    } else {
                        self.val[k] = self.lo[k];
                        self.state[k] = State::Lower;
                    }
                    self.basis[r] = j;
                    self.state[j] = State::Basic;
                    self.pivot(r, j);
                }
            }
        }
        LpStatus::IterationLimit
    }
}

/// Solve a linear program to optimality.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let n = lp.objective.len();
    let m = lp.rows.len();
    let ncols = n + 2 * m;
    let infeasible = |status| LpSolution {
        status,
        objective: f64::NEG_INFINITY,
        point: vec![0.0; n],
    };
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return infeasible(LpStatus::Infeasible);
    }

    let mut lo = vec![0.0; ncols];
    let mut hi = vec![f64::INFINITY; ncols];
    let mut val = vec![0.0; ncols];
    let mut state = vec![State::Lower; ncols];
    for j in 0..n {
        lo[j] = lp.lower[j];
        hi[j] = lp.upper[j];
        // Boxed variables start at the bound favoured by the objective.
        (val[j], state[j]) = if hi[j].is_finite() && (lp.objective[j] > 0.0 || !lo[j].is_finite()) {
            (hi[j], State::Upper)
        } else if lo[j].is_finite() {
            (lo[j], State::Lower)
        } else {
            (0.0, State::Free)
        };
    }

    let mut a_full = vec![0.0; m * ncols];
    let mut sigma = vec![1.0; m];
    let mut basis = vec![0; m];
    for i in 0..m {
        let row = &lp.rows[i];
        let r = lp.rhs[i] - row.iter().zip(&val[..n]).map(|(a, y)| a * y).sum::<f64>();
        a_full[i * ncols..i * ncols + n].copy_from_slice(row);
        a_full[i * ncols + n + i] = -1.0;
        if r > 0.0 {
            // Artificial starts basic at r.
            sigma[i] = 1.0;
            basis[i] = n + m + i;
            val[n + m + i] = r;
        } else {
            // Surplus starts basic at -r and the artificial is never needed.
            sigma[i] = -1.0;
            basis[i] = n + i;
            val[n + i] = -r;
            hi[n + m + i] = 0.0;
        }
        a_full[i * ncols + n + m + i] = sigma[i];
    }
    let mut t = vec![0.0; m * ncols];
    for i in 0..m {
        for k in 0..ncols {
            t[i * ncols + k] = sigma[i] * a_full[i * ncols + k];
        }
        state[basis[i]] = State::Basic;
    }

    let mut tab = Tableau {
        m,
        ncols,
        t,
        full_rhs: lp.rhs.clone(),
        basis,
        state,
        val,
        lo,
        hi,
        a_full,
    };
    let max_iter = 200 * (ncols + m) + 1000;

    let mut phase1 = vec![0.0; ncols];
    let needs_phase1 = (0..m).any(|i| tab.basis[i] >= n + m);
    if needs_phase1 {
        for c in phase1[n + m..].iter_mut() {
            *c = -1.0;
        }
        let status = tab.run(&phase1, max_iter);
        if status == LpStatus::IterationLimit {
            return infeasible(status);
        }
        tab.refresh_basic_values();
        let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let art: f64 = tab.val[n + m..].iter().sum();
        if art > 1e-9 * scale {
            return infeasible(LpStatus::Infeasible);
        }
    }
    for k in n + m..ncols {
        tab.hi[k] = 0.0;
        if tab.state[k] != State::Basic {
            tab.val[k] = 0.0;
            tab.state[k] = State::Lower;
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.objective);
    let status = tab.run(&cost, max_iter);
    if status != LpStatus::Optimal {
        return infeasible(status);
    }
    tab.refresh_basic_values();
    let point: Vec<f64> = tab.val[..n]
        .iter()
        .zip(lp.lower.iter().zip(&lp.upper))
        .map(|(y, (l, u))| y.clamp(*l, *u))
        .collect();
    let objective = point.iter().zip(&lp.objective).map(|(y, c)| y * c).sum();
    LpSolution {
        status: LpStatus::Optimal,
        objective,
        point,
    }
}

/// Build the relaxation LP of an instance over the box, with per-coordinate
/// overrides in `fixed` (`Some(v)` pins coordinate `j` to `v`).
pub(crate) fn relaxation_lp(inst: &IlpInstance, fixed: &[Option<f64>]) -> LinearProgram {
    let n = inst.n_binaries();
    let c = inst.amplitude;
    let mut objective = inst.objective.clone();
    let mut lower: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(-c)).collect();
    let mut upper: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(c)).collect();
    let mut rows: Vec<Vec<f64>> = (0..inst.n_constraints())
        .map(|i| inst.constraint_matrix.row(i).iter().copied().collect())
        .collect();
    if let Some(cv) = &inst.continuous_var {
        objective.push(cv.objective);
        lower.push(f64::NEG_INFINITY);
        upper.push(f64::INFINITY);
        for (row, g) in rows.iter_mut().zip(&cv.coupling) {
            row.push(-g);
        }
    }
    debug_assert_eq!(objective.len(), lower.len());
    debug_assert!(rows.iter().all(|r| r.len() == objective.len()) && n <= objective.len());
    LinearProgram {
        objective,
        rows,
        rhs: inst.rhs.clone(),
        lower,
        upper,
    }
}

/// Continuous relaxation over the box `[-c, c]`: `(bound, point)`, where
/// `point` holds the binaries followed by the continuous variable, if any.
/// An empty polytope gives `(-inf, _)`.
pub fn lp_relaxation(inst: &IlpInstance) -> (f64, Vec<f64>) {
    let sol = solve_lp(&relaxation_lp(inst, &vec![None; inst.n_binaries()]));
    (sol.objective, sol.point)
}

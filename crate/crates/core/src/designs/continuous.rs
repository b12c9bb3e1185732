//! Convex subproblems of the unquantized-DAC design:
//! `max w^T y  s.t.  A y >= b,  ||y||^2 <= E` over real `y`.
//!
//! For a ball multiplier `rho > 0` the optimum is the Euclidean projection of
//! `w / rho` onto the polyhedron, and its norm decreases in `rho`. The
//! subproblem therefore reduces to exact projections plus a scalar search.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance for accepting a row as satisfied.
const ROW_TOL: f64 = 1e-11;

fn row_tol(a: &DMatrix<f64>, b: &[f64], i: usize, y_norm: f64) -> f64 {
    ROW_TOL * (1.0 + b[i].abs() + a.row(i).norm() * y_norm)
}

/// Euclidean projection of `z` onto `{y : A y >= b}` by the Goldfarb-Idnani
/// dual active-set method (identity Hessian). Returns the projection and the
/// active rows with their multipliers, or `None` when the set is empty.
pub(crate) fn project_polyhedron(
    a: &DMatrix<f64>,
    b: &[f64],
    z: &DVector<f64>,
) -> Option<(DVector<f64>, Vec<(usize, f64)>)> {
    let k = a.nrows();
    let mut y = z.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let max_outer = 20 * (k + 1) + 100;
    for _ in 0..max_outer {
        let y_norm = y.norm();
        let mut p = None;
        let mut worst = 0.0;
        for i in 0..k {
            if active.contains(&i) {
                continue;
            }
            let s = a.row(i).dot(&y.transpose()) - b[i];
            if s < -row_tol(a, b, i, y_norm) && s < worst {
                worst = s;
                p = Some(i);
            }
        }
        let Some(p) = p else {
            let u = polish(a, b, z, &active, &mut y).unwrap_or(u);
            return Some((y, active.into_iter().zip(u).collect()));
        };
        let np: DVector<f64> = a.row(p).transpose();
        let np_sq = np.norm_squared();
        let mut s_p = worst;
        let mut u_p = 0.0;
        loop {
            let (z_dir, r) = if active.is_empty() {
                (np.clone(), Vec::new())
            } else {
                let n_mat = DMatrix::from_fn(a.ncols(), active.len(), |i, j| a[(active[j], i)]);
                let qr = n_mat.qr();
                let q = qr.q();
                let rr = qr.r();
                let qtn = q.transpose() * &np;
                let z_dir = &np - &q * &qtn;
                let r = rr
                    .solve_upper_triangular(&qtn)
                    .map(|v| v.iter().copied().collect())
                    .unwrap_or_else(|| vec![0.0; active.len()]);
                (z_dir, r)
            };
            // Partial step limited by an active multiplier reaching zero.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, rj) in r.iter().enumerate() {
                if *rj > 1e-14 {
                    let t = u[j] / rj;
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            let zz = z_dir.dot(&np);
            let t2 = if zz > 1e-13 * np_sq { -s_p / zz } else { f64::INFINITY };
            let t = t1.min(t2);
            if t.is_infinite() {
                return None;
            }
            for (uj, rj) in u.iter_mut().zip(&r) {
                *uj -= t * rj;
            }
            u_p += t;
            if t2.is_finite() {
                y += &z_dir * t;
                s_p += t * zz;
            }
            if t2 <= t1 {
                active.push(p);
                u.push(u_p);
                break;
            }
            let j = drop.expect("partial step has a blocking multiplier");
            active.remove(j);
            u.remove(j);
        }
    }
    // Cycling guard: accept the current point if it is feasible.
    let y_norm = y.norm();
    (0..k)
        .all(|i| a.row(i).dot(&y.transpose()) - b[i] >= -1e3 * row_tol(a, b, i, y_norm))
        .then(|| (y, active.into_iter().zip(u).collect()))
}

/// Recomputes the projection from its final active set. The dual steps build
/// `y` from `z` incrementally, which loses about `eps ||z||` of accuracy on the
/// active rows when `z` is long. Splitting `z` into the span of the active
/// normals and its complement keeps those rows exact.
fn polish(
    a: &DMatrix<f64>,
    b: &[f64],
    z: &DVector<f64>,
    active: &[usize],
    y: &mut DVector<f64>,
) -> Option<Vec<f64>> {
    let (n, m) = (a.ncols(), active.len());
    if m == 0 || m > n {
        return None;
    }
    let aug = DMatrix::from_fn(n, m + n, |i, j| {
        if j < m {
            a[(active[j], i)]
        } else {
            f64::from(u8::from(i == j - m))
        }
    });
    let qr = aug.qr();
    let q = qr.q();
    let r = qr.r().view((0, 0), (m, m)).into_owned();
    let q_act = q.columns(0, m);
    let q_perp = q.columns(m, n - m);
    let b_act = DVector::from_iterator(m, active.iter().map(|&i| b[i]));
    let c = r.transpose().solve_lower_triangular(&b_act)?;
    let polished = &q_perp * (q_perp.transpose() * z) + &q_act * c;
    let u = r.solve_upper_triangular(&(q_act.transpose() * (&polished - z)))?;
    if u.iter().any(|v| !v.is_finite()) {
        return None;
    }
    *y = polished;
    Some(u.iter().copied().collect())
}

/// Outcome of the ball-constrained linear subproblem. The multipliers are
/// only read by the optimality checks in tests.
#[derive(Debug, Clone)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct BallSolution {
    pub y: DVector<f64>,
    /// Ball multiplier; zero when the ball is inactive.
    pub rho: f64,
    /// Row multipliers `nu` with `w + A^T nu = rho y`.
    pub multipliers: Vec<(usize, f64)>,
}

/// Minimum-norm point of the polyhedron if it lies within the ball.
pub(crate) fn ball_feasible_point(
    a: &DMatrix<f64>,
    b: &[f64],
    energy: f64,
) -> Option<DVector<f64>> {
    let (y0, _) = project_polyhedron(a, b, &DVector::zeros(a.ncols()))?;
    (y0.norm_squared() <= energy * (1.0 + 1e-12)).then_some(y0)
}

/// `max w^T y  s.t.  A y >= b,  ||y||^2 <= E`; `None` when infeasible.
pub(crate) fn max_linear_on_ball(
    w: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &[f64],
    energy: f64,
) -> Option<BallSolution> {
    let y0 = ball_feasible_point(a, b, energy)?;
    let w_norm = w.norm();
    if w_norm == 0.0 {
        return Some(BallSolution {
            y: y0,
            rho: 0.0,
            multipliers: Vec::new(),
        });
    }
    // Projections of very long `w / rho` can lose the active set numerically,
    // so a failed projection counts as "outside the ball".
    let proj = |rho: f64| project_polyhedron(a, b, &(w / rho));
    let over = |sol: &Option<(DVector<f64>, Vec<(usize, f64)>)>| {
        sol.as_ref().is_none_or(|s| s.0.norm_squared() > energy)
    };

    // Bracket rho so that the projection norm crosses sqrt(E).
    let mut lo = w_norm / energy.sqrt();
    let mut hi = lo;
    let mut at_hi = proj(hi);
    if over(&at_hi) {
        let mut found = false;
        for _ in 0..200 {
            lo = hi;
            hi *= 2.0;
            at_hi = proj(hi);
            if !over(&at_hi) {
                found = true;
                break;
            }
        }
        if !found {
            // Only the minimum-norm point fits.
            return Some(BallSolution {
                y: y0,
                rho: f64::INFINITY,
                multipliers: Vec::new(),
            });
        }
    } else {
        // Thirty halvings leave the ball term below 1e-9 of ||w||. Going
        // further makes `w / rho` so long that the projection loses accuracy.
        let mut found = false;
        for _ in 0..30 {
            let trial = 0.5 * hi;
            let at_lo = proj(trial);
            if at_lo.is_none() {
                break;
            }
            if over(&at_lo) {
                lo = trial;
                found = true;
                break;
            }
            hi = trial;
            at_hi = at_lo;
        }
        if !found {
            // The polyhedral optimum lies inside the ball.
            let (y, mu) = at_hi.expect("bracket end is feasible");
            return Some(BallSolution {
                y,
                rho: hi,
                multipliers: mu.into_iter().map(|(i, m)| (i, m * hi)).collect(),
            });
        }
    }
    // Norm is monotone in rho; bisect to the crossing.
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        let at_mid = proj(mid);
        if over(&at_mid) {
            lo = mid;
        } else {
            hi = mid;
            at_hi = at_mid;
        }
    }
    let (y, mu) = at_hi.expect("bracket end is feasible");
    Some(BallSolution {
        y,
        rho: hi,
        multipliers: mu.into_iter().map(|(i, m)| (i, m * hi)).collect(),
    })
}

/// Stationarity, complementarity and feasibility residual of a ball
/// solution, relative to `||w||`.
#[cfg(test)]
pub(crate) fn kkt_residual(
    sol: &BallSolution,
    w: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &[f64],
    energy: f64,
) -> f64 {
    let scale = w.norm().max(1e-300);
    let mut g = w.clone();
    for (i, nu) in &sol.multipliers {
        g += a.row(*i).transpose() * *nu;
    }
    if sol.rho.is_finite() {
        g -= &sol.y * sol.rho;
    }
    let stationarity = if sol.rho.is_finite() { g.norm() / scale } else { 0.0 };
    let act = a * &sol.y;
    let mut worst: f64 = stationarity;
    for (i, bi) in b.iter().enumerate() {
        worst = worst.max((bi - act[i]).max(0.0) / (1.0 + bi.abs()));
    }
    for (i, nu) in &sol.multipliers {
        worst = worst.max(nu.min(0.0).abs() / scale);
        worst = worst.max((nu * (act[*i] - b[*i])).abs() / scale);
    }
    if sol.rho.is_finite() {
        worst = worst.max(sol.rho * (energy - sol.y.norm_squared()).abs() / scale);
    }
    worst.max((sol.y.norm_squared() - energy).max(0.0) / energy)
}

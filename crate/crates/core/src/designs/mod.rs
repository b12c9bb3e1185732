//! Joint transmit-waveform and receive-filter designs.
//!
//! Both design problems are solved by minorize-maximize: the radar metric is
//! replaced at the current iterate by a linear minorizer, the resulting
//! linear program over the transmit alphabet is solved exactly (branch and
//! bound for the 1-bit DAC, a ball-constrained convex program for the
//! unquantized DAC), and the new iterate is kept only if the true objective
//! does not decrease.

mod continuous;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::comm::{build_mmse_constraints, center_factor, facet_inradius, margin_rows, mmse_radius};
use crate::error::{dim, IsacError, Result};
use crate::model::{
    quantize_dac_1bit, rotate_channels, CMatrix, CVector, CommChannels, RadarChannel, SignalKind,
    SystemConfig, TransmitSignal,
};
use crate::optim::{
    build_surrogate, realify, realify_rows, realify_vector, solve_bnb_with, unrealify, BnbOptions,
    BnbStatus, ContinuousVar, SurrogateState, DEFAULT_NODE_LIMIT,
};
use crate::radar::{concentrated_scnr, receive_filter_for, RadarMetric, ReceiveFilter, Resolution};

use continuous::{ball_feasible_point, max_linear_on_ball};

pub const DEFAULT_MAX_ITERS: usize = 50;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Row slack accepted when checking a design against its constraints.
const FEAS_TOL: f64 = 1e-9;

/// What the design must guarantee.
#[derive(Debug, Clone, PartialEq)]
pub enum Requirement {
    /// Maximize the radar metric subject to per-user SNR targets `Gamma_u`
    /// (linear). A zero target leaves that user unconstrained.
    Qos { gammas: Vec<f64> },
    /// Maximize the worst user's margin subject to radar metric `>= chi`.
    Qod { chi: f64 },
}

/// Downlink constraint geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommMetric {
    /// Constructive-interference sector with a safe margin.
    SafeMargin,
    /// Disk around the scaled intended symbol, as an inscribed octagon.
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignStatus {
    Converged,
    IterLimit,
    Infeasible,
}

impl DesignStatus {
    pub fn label(self) -> &'static str {
        match self {
            DesignStatus::Converged => "converged",
            DesignStatus::IterLimit => "iter_limit",
            DesignStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub requirement: Requirement,
    pub cfg: SystemConfig,
    pub channels: CommChannels,
    /// Intended symbol per user.
    pub symbols: Vec<Complex64>,
    pub dac: Resolution,
    pub adc: Resolution,
    pub comm_metric: CommMetric,
    pub max_iters: usize,
    /// Relative objective change that stops the iterations.
    pub tolerance: f64,
    pub node_limit: usize,
    /// Extra starting point, e.g. the solution of a neighbouring sweep point.
    pub warm_start: Option<CVector>,
}

impl DesignProblem {
    pub fn new(
        requirement: Requirement,
        cfg: SystemConfig,
        channels: CommChannels,
        symbols: Vec<Complex64>,
    ) -> Self {
        DesignProblem {
            requirement,
            cfg,
            channels,
            symbols,
            dac: Resolution::OneBit,
            adc: Resolution::OneBit,
            comm_metric: CommMetric::SafeMargin,
            max_iters: DEFAULT_MAX_ITERS,
            tolerance: DEFAULT_TOLERANCE,
            node_limit: DEFAULT_NODE_LIMIT,
            warm_start: None,
        }
    }

    pub fn with_converters(mut self, dac: Resolution, adc: Resolution) -> Self {
        self.dac = dac;
        self.adc = adc;
        self
    }

    pub fn with_comm_metric(mut self, metric: CommMetric) -> Self {
        self.comm_metric = metric;
        self
    }

    pub fn with_warm_start(mut self, x: Option<CVector>) -> Self {
        self.warm_start = x;
        self
    }

    /// Radar metric seen by the configured receiver.
    pub fn metric(&self) -> RadarMetric {
        RadarMetric::for_adc(self.adc, &self.cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        let users = self.channels.n_users();
        if self.symbols.len() != users {
            return Err(dim(format!("{} symbols for {users} users", self.symbols.len())));
        }
        if self.channels.h.iter().any(|h| h.len() != self.cfg.n_tx) {
            return Err(dim("channel length differs from N_T"));
        }
        if self.cfg.comm_noise_powers.len() != users {
            return Err(dim(format!(
                "{} noise powers for {users} users",
                self.cfg.comm_noise_powers.len()
            )));
        }
        match &self.requirement {
            Requirement::Qos { gammas } => {
                if gammas.len() != users {
                    return Err(dim(format!("{} SNR targets for {users} users", gammas.len())));
                }
                if let Some(&g) = gammas.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
                    return Err(IsacError::Domain {
                        name: "communication SNR target",
                        value: g,
                        domain: "[0, inf)",
                    });
                }
            }
            Requirement::Qod { chi } => {
                if !(*chi >= 0.0 && chi.is_finite()) {
                    return Err(IsacError::Domain {
                        name: "radar threshold chi",
                        value: *chi,
                        domain: "[0, inf)",
                    });
                }
            }
        }
        if self.max_iters == 0 || !(self.tolerance > 0.0) {
            return Err(IsacError::InvalidConfig(
                "max_iters and tolerance must be positive".into(),
            ));
        }
        if self.comm_metric == CommMetric::Mmse && self.cfg.modulation_order < 4 {
            return Err(IsacError::InvalidConfig("disk constraints need M >= 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub x: TransmitSignal,
    pub f: ReceiveFilter,
    /// True objective after each accepted iterate, starting with `x_0`:
    /// the radar metric for QoS designs, the worst-user margin for QoD ones.
    pub objective_trace: Vec<f64>,
    /// Radar metric of the final `x` under the configured receiver.
    pub final_qscnr: f64,
    /// Smallest safe margin over users.
    pub final_min_margin: f64,
    pub user_margins: Vec<f64>,
    pub status: DesignStatus,
    /// MM iterations performed.
    pub iterations: usize,
    /// LP relaxations solved by branch and bound over all iterations.
    pub nodes_explored: usize,
    /// Largest optimality gap left by a node-limited ILP (zero if none).
    pub max_gap: f64,
}

/// `Re(A x) - g lambda >= b`.
#[derive(Debug, Clone)]
struct CommRows {
    a: CMatrix,
    rhs: Vec<f64>,
    coupling: Vec<f64>,
}

impl CommRows {
    fn values(&self, x: &CVector) -> Vec<f64> {
        (&self.a * x).iter().map(|z| z.re).collect()
    }

    fn satisfied(&self, x: &CVector) -> bool {
        self.values(x)
            .iter()
            .zip(&self.rhs)
            .all(|(v, b)| *v >= b - FEAS_TOL * (1.0 + b.abs()))
    }

    /// Largest `lambda` the rows admit at `x`.
    fn best_lambda(&self, x: &CVector) -> f64 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for ((v, b), g) in self.values(x).iter().zip(&self.rhs).zip(&self.coupling) {
            let r = v - b;
            if *g > 0.0 {
                hi = hi.min(r / g);
            } else if *g < 0.0 {
                lo = lo.max(r / g);
            }
        }
        if lo > hi + FEAS_TOL * (1.0 + hi.abs()) {
            f64::NEG_INFINITY
        } else {
            hi
        }
    }

    fn with_row(&self, row: CVector, rhs: f64, coupling: f64) -> CommRows {
        let (k, n) = self.a.shape();
        let mut a = CMatrix::zeros(k + 1, n);
        a.rows_mut(0, k).copy_from(&self.a);
        a.row_mut(k).copy_from(&row.adjoint());
        let mut r = self.rhs.clone();
        r.push(rhs);
        let mut g = self.coupling.clone();
        g.push(coupling);
        CommRows { a, rhs: r, coupling: g }
    }

    fn select_users(a: CMatrix, rhs: Vec<f64>, per_user: usize, keep: &[bool]) -> CommRows {
        let rows: Vec<usize> = (0..a.nrows())
            .filter(|i| keep[i / per_user])
            .collect();
        let n = a.ncols();
        CommRows {
            a: CMatrix::from_fn(rows.len(), n, |i, j| a[(rows[i], j)]),
            rhs: rows.iter().map(|&i| rhs[i]).collect(),
            coupling: vec![1.0; rows.len()],
        }
    }
}

/// Radar channel, metric and constraint rows shared by every iteration.
struct Context<'a> {
    p: &'a DesignProblem,
    ch: RadarChannel,
    metric: RadarMetric,
    margin: CMatrix,
}

/// What one MM run optimizes.
enum Goal<'a> {
    Radar(&'a CommRows),
    Comm { rows: &'a CommRows, chi: f64 },
}

struct Step {
    x: CVector,
    nodes: usize,
    gap: f64,
    limited: bool,
}

struct Run {
    x: CVector,
    trace: Vec<f64>,
    iterations: usize,
    status: DesignStatus,
    nodes: usize,
    max_gap: f64,
}

impl<'a> Context<'a> {
    fn new(p: &'a DesignProblem) -> Result<Self> {
        p.validate()?;
        let rot = rotate_channels(&p.channels, &p.symbols)?;
        Ok(Context {
            p,
            ch: RadarChannel::new(&p.cfg),
            metric: p.metric(),
            margin: margin_rows(&rot.rotated, p.cfg.modulation_order),
        })
    }

    fn energy(&self) -> f64 {
        self.p.cfg.power_budget
    }

    fn radar(&self, x: &CVector) -> f64 {
        concentrated_scnr(&self.metric, x, &self.ch)
    }

    fn user_margins(&self, x: &CVector) -> Vec<f64> {
        (&self.margin * x)
            .iter()
            .map(|z| z.re)
            .collect::<Vec<_>>()
            .chunks(2)
            .map(|p| p[0].min(p[1]))
            .collect()
    }

    /// Rows for the SNR targets, with unit coupling so that the same rows
    /// give the max-min slack problem.
    fn qos_rows(&self, gammas: &[f64]) -> Result<CommRows> {
        let cfg = &self.p.cfg;
        let keep: Vec<bool> = gammas.iter().map(|g| *g > 0.0).collect();
        let levels: Vec<f64> = gammas
            .iter()
            .zip(&cfg.comm_noise_powers)
            .map(|(g, s)| (g * s).sqrt())
            .collect();
        Ok(match self.p.comm_metric {
            CommMetric::SafeMargin => {
                let rhs = levels.iter().flat_map(|t| [*t, *t]).collect();
                CommRows::select_users(self.margin.clone(), rhs, 2, &keep)
            }
            CommMetric::Mmse => {
                let order = cfg.modulation_order;
                let eps = levels
                    .iter()
                    .map(|l| mmse_radius(*l, order))
                    .collect::<Result<Vec<_>>>()?;
                let set = build_mmse_constraints(&self.p.channels, &self.p.symbols, &eps, order)?;
                CommRows::select_users(set.a_matrix, set.rhs, crate::comm::MMSE_FACETS, &keep)
            }
        })
    }

    /// Homogeneous rows whose `lambda` is the common margin of all users.
    fn qod_rows(&self) -> Result<CommRows> {
        let users = self.p.channels.n_users();
        Ok(match self.p.comm_metric {
            CommMetric::SafeMargin => CommRows {
                a: self.margin.clone(),
                rhs: vec![0.0; 2 * users],
                coupling: vec![1.0; 2 * users],
            },
            CommMetric::Mmse => {
                let order = self.p.cfg.modulation_order;
                let set = build_mmse_constraints(
                    &self.p.channels,
                    &self.p.symbols,
                    &vec![1.0; users],
                    order,
                )?;
                // Centre lambda (1 + sec) and radius lambda tan(pi/M) in the
                // rotated frame, so each facet bound is linear in lambda.
                let tan = (std::f64::consts::PI / order as f64).tan();
                let facets = crate::comm::MMSE_FACETS;
                let coupling = (0..users * facets)
                    .map(|i| {
                        let theta = crate::comm::facet_angle(i % facets);
                        -tan * (center_factor(order) * theta.cos() + facet_inradius())
                    })
                    .collect();
                CommRows {
                    a: set.a_matrix,
                    rhs: vec![0.0; users * facets],
                    coupling,
                }
            }
        })
    }

    fn objective(&self, goal: &Goal, x: &CVector) -> Option<f64> {
        match goal {
            Goal::Radar(rows) => rows.satisfied(x).then(|| self.radar(x)),
            Goal::Comm { rows, chi } => {
                let ok = self.radar(x) >= chi - FEAS_TOL * chi.max(1.0);
                let lambda = rows.best_lambda(x);
                (ok && lambda.is_finite()).then_some(lambda)
            }
        }
    }

    fn surrogate(&self, x: &CVector) -> Result<SurrogateState> {
        build_surrogate(x, &self.ch, &self.metric, self.energy())
    }

    fn step(&self, goal: &Goal, x_t: &CVector) -> Result<Option<Step>> {
        let st = self.surrogate(x_t)?;
        match self.p.dac {
            Resolution::OneBit => self.binary_step(goal, x_t, &st),
            Resolution::Infinite => Ok(self.continuous_step(goal, x_t, &st)),
        }
    }

    fn binary_step(&self, goal: &Goal, x_t: &CVector, st: &SurrogateState) -> Result<Option<Step>> {
        let c = self.p.cfg.dac_amplitude();
        let inst = match goal {
            Goal::Radar(rows) => realify(&st.w_t, &rows.a, &rows.rhs, c)?,
            Goal::Comm { rows, chi } => {
                let all = with_radar_row(rows, st, *chi);
                let mut inst = realify(&CVector::zeros(x_t.len()), &all.a, &all.rhs, c)?;
                inst.continuous_var = Some(ContinuousVar {
                    objective: 1.0,
                    coupling: all.coupling,
                });
                inst
            }
        };
        let res = solve_bnb_with(
            &inst,
            &BnbOptions {
                node_limit: self.p.node_limit,
                warm_start: Some(realify_vector(x_t).iter().copied().collect()),
            },
        )?;
        if res.solution.is_empty() {
            return Ok(None);
        }
        Ok(Some(Step {
            x: unrealify(&res.solution),
            nodes: res.nodes_explored,
            gap: if res.status == BnbStatus::NodeLimit { res.gap } else { 0.0 },
            limited: res.status == BnbStatus::NodeLimit,
        }))
    }

    fn continuous_step(&self, goal: &Goal, x_t: &CVector, st: &SurrogateState) -> Option<Step> {
        let e = self.energy();
        let y = match goal {
            Goal::Radar(rows) => {
                let a = realify_rows(&rows.a);
                let sol = max_linear_on_ball(&realify_vector(&st.w_t), &a, &rows.rhs, e)?;
                to_sphere(sol.y, e, |y| real_rows_hold(&a, &rows.rhs, &[], 0.0, y))
            }
            Goal::Comm { rows, chi } => {
                let all = with_radar_row(rows, st, *chi);
                let a = realify_rows(&all.a);
                let (lambda, y) = max_common_margin(&a, &all.rhs, &all.coupling, e, rows.best_lambda(x_t))?;
                to_sphere(y, e, |y| real_rows_hold(&a, &all.rhs, &all.coupling, lambda, y))
            }
        };
        Some(Step {
            x: unrealify(y.as_slice()),
            nodes: 0,
            gap: 0.0,
            limited: false,
        })
    }

    /// MM iterations from a feasible `x0`.
    fn run(&self, goal: &Goal, x0: CVector) -> Result<Run> {
        let mut val = self
            .objective(goal, &x0)
            .ok_or_else(|| IsacError::Infeasible("starting point violates the constraints".into()))?;
        let mut run = Run {
            x: x0,
            trace: vec![val],
            iterations: 0,
            status: DesignStatus::IterLimit,
            nodes: 0,
            max_gap: 0.0,
        };
        let mut limited = false;
        for _ in 0..self.p.max_iters {
            run.iterations += 1;
            let Some(step) = self.step(goal, &run.x)? else {
                run.status = DesignStatus::Converged;
                break;
            };
            run.nodes += step.nodes;
            run.max_gap = run.max_gap.max(step.gap);
            limited |= step.limited;
            let Some(new) = self.objective(goal, &step.x) else {
                run.status = DesignStatus::Converged;
                break;
            };
            if new < val {
                // Only rounding can get here; keep the monotone iterate.
                run.status = DesignStatus::Converged;
                break;
            }
            run.x = step.x;
            run.trace.push(new);
            let done = (new - val).abs() <= self.p.tolerance * val.abs().max(1.0);
            val = new;
            if done {
                run.status = DesignStatus::Converged;
                break;
            }
        }
        if limited {
            run.status = DesignStatus::IterLimit;
        }
        Ok(run)
    }

    /// Radar-optimal point without downlink constraints, from the matched beam.
    fn radar_max(&self) -> Result<CVector> {
        let none = CommRows {
            a: CMatrix::zeros(0, self.p.cfg.n_tx),
            rhs: vec![],
            coupling: vec![],
        };
        Ok(self.run(&Goal::Radar(&none), self.matched_start()?)?.x)
    }

    /// Matched beam `g_T^*` on the transmit alphabet.
    fn matched_start(&self) -> Result<CVector> {
        let g = self.ch.target.g_tx.conjugate();
        Ok(match self.p.dac {
            Resolution::OneBit => quantize_dac_1bit(&g, &self.p.cfg)?.x,
            Resolution::Infinite => g * Complex64::from(self.energy().sqrt() / self.ch.target.g_tx.norm()),
        })
    }

    fn initial_point(&self, goal: &Goal) -> Result<CVector> {
        let cand = self.matched_start()?;
        if self.objective(goal, &cand).is_some() {
            return Ok(cand);
        }
        match goal {
            Goal::Radar(rows) => match self.p.dac {
                Resolution::OneBit => self.max_min_slack(rows),
                Resolution::Infinite => {
                    // One subproblem solve at the matched anchor lands on a
                    // feasible point, or proves there is none.
                    let st = self.surrogate(&cand)?;
                    self.continuous_step(goal, &cand, &st)
                        .map(|s| s.x)
                        .ok_or_else(|| {
                            IsacError::Infeasible("SNR targets exceed what the power budget supports".into())
                        })
                }
            },
            Goal::Comm { chi, .. } => {
                let best = self.radar_max()?;
                if self.objective(goal, &best).is_some() {
                    return Ok(best);
                }
                // Disk rows admit no margin at some points. One subproblem
                // solve from the radar optimum finds a point that has one.
                let stepped = if self.radar(&best) >= *chi {
                    self.step(goal, &best)?.map(|s| s.x)
                } else {
                    None
                };
                if let Some(x) = stepped.filter(|x| self.objective(goal, x).is_some()) {
                    Ok(x)
                } else {
                    Err(IsacError::Infeasible(format!(
                        "radar threshold {chi:.6} exceeds the best radar value found {:.6}",
                        self.radar(&best)
                    )))
                }
            }
        }
    }

    /// Binary point maximizing the smallest row slack; infeasible when even
    /// that slack is negative.
    fn max_min_slack(&self, rows: &CommRows) -> Result<CVector> {
        let c = self.p.cfg.dac_amplitude();
        let mut inst = realify(&CVector::zeros(self.p.cfg.n_tx), &rows.a, &rows.rhs, c)?;
        inst.continuous_var = Some(ContinuousVar {
            objective: 1.0,
            coupling: vec![1.0; rows.rhs.len()],
        });
        let res = solve_bnb_with(
            &inst,
            &BnbOptions {
                node_limit: self.p.node_limit,
                warm_start: None,
            },
        )?;
        match res.continuous_value {
            Some(l) if l >= -FEAS_TOL => Ok(unrealify(&res.solution)),
            Some(l) if res.status == BnbStatus::Optimal => Err(IsacError::Infeasible(format!(
                "best achievable worst-row slack is {l:.6}"
            ))),
            _ => Err(IsacError::Infeasible(
                "no binary point meets the SNR targets within the node budget".into(),
            )),
        }
    }

    fn warm_point(&self, goal: &Goal) -> Result<Option<CVector>> {
        let Some(w) = &self.p.warm_start else {
            return Ok(None);
        };
        if w.len() != self.p.cfg.n_tx || w.norm() == 0.0 {
            return Ok(None);
        }
        let x = match self.p.dac {
            Resolution::OneBit => quantize_dac_1bit(w, &self.p.cfg)?.x,
            Resolution::Infinite => w * Complex64::from(self.energy().sqrt() / w.norm()),
        };
        Ok(self.objective(goal, &x).map(|_| x))
    }

    fn solve(&self, goal: &Goal) -> Result<DesignResult> {
        let start = self.initial_point(goal);
        let warm = self.warm_point(goal)?;
        let mut best: Option<Run> = None;
        let mut infeasible_reason = None;
        match start {
            Ok(x0) => best = Some(self.run(goal, x0)?),
            Err(IsacError::Infeasible(msg)) => infeasible_reason = Some(msg),
            Err(e) => return Err(e),
        }
        if let Some(xw) = warm {
            let run = self.run(goal, xw)?;
            let better = best
                .as_ref()
                .is_none_or(|b| run.trace.last() > b.trace.last());
            if better {
                best = Some(run);
            }
        }
        match best {
            Some(run) => self.finish(run),
            None => self.finish_infeasible(infeasible_reason.unwrap_or_default()),
        }
    }

    fn signal(&self, x: CVector) -> Result<TransmitSignal> {
        match self.p.dac {
            Resolution::OneBit => TransmitSignal::one_bit(x, &self.p.cfg),
            Resolution::Infinite => Ok(TransmitSignal {
                x,
                kind: SignalKind::Continuous,
            }),
        }
    }

    fn finish(&self, run: Run) -> Result<DesignResult> {
        let x = self.signal(run.x)?;
        let f = receive_filter_for(&self.metric, &x, &self.ch)?;
        let user_margins = self.user_margins(&x.x);
        Ok(DesignResult {
            final_qscnr: self.radar(&x.x),
            final_min_margin: user_margins.iter().copied().fold(f64::INFINITY, f64::min),
            user_margins,
            f,
            x,
            objective_trace: run.trace,
            status: run.status,
            iterations: run.iterations,
            nodes_explored: run.nodes,
            max_gap: run.max_gap,
        })
    }

    fn finish_infeasible(&self, _reason: String) -> Result<DesignResult> {
        let fallback = match &self.p.requirement {
            Requirement::Qod { .. } => self.radar_max()?,
            Requirement::Qos { .. } => self.matched_start()?,
        };
        let mut res = self.finish(Run {
            x: fallback,
            trace: Vec::new(),
            iterations: 0,
            status: DesignStatus::Infeasible,
            nodes: 0,
            max_gap: 0.0,
        })?;
        res.status = DesignStatus::Infeasible;
        Ok(res)
    }
}

/// Appends the surrogate radar row `Re(w_t^H x) >= chi - const2`. The radar
/// metric is nonnegative, so `chi = 0` needs no row.
fn with_radar_row(rows: &CommRows, st: &SurrogateState, chi: f64) -> CommRows {
    if chi > 0.0 {
        rows.with_row(st.w_t.clone(), chi - st.const2, 0.0)
    } else {
        rows.clone()
    }
}

fn real_rows_hold(a: &DMatrix<f64>, b: &[f64], g: &[f64], lambda: f64, y: &DVector<f64>) -> bool {
    let act = a * y;
    (0..b.len()).all(|i| {
        let rhs = b[i] + g.get(i).copied().unwrap_or(0.0) * lambda;
        act[i] >= rhs - FEAS_TOL * (1.0 + rhs.abs())
    })
}

/// Scale `y` onto `||y||^2 = E` when the constraints survive the scaling.
fn to_sphere(y: DVector<f64>, energy: f64, ok: impl Fn(&DVector<f64>) -> bool) -> DVector<f64> {
    let n = y.norm();
    if n == 0.0 {
        return y;
    }
    let scaled = &y * (energy.sqrt() / n);
    if ok(&scaled) {
        scaled
    } else {
        y
    }
}

/// `max lambda  s.t.  A y - g lambda >= b,  ||y||^2 <= E`, by bisection on
/// `lambda` from a feasible level `start`. The feasible levels form an
/// interval because the constraint set is jointly convex in `(y, lambda)`.
fn max_common_margin(
    a: &DMatrix<f64>,
    b: &[f64],
    g: &[f64],
    energy: f64,
    start: f64,
) -> Option<(f64, DVector<f64>)> {
    let point = |lambda: f64| {
        let shifted: Vec<f64> = b.iter().zip(g).map(|(bi, gi)| bi + gi * lambda).collect();
        ball_feasible_point(a, &shifted, energy)
    };
    let mut lo = if start.is_finite() { start } else { 0.0 };
    let mut y_lo = point(lo);
    let mut step = lo.abs().max(1e-6);
    for _ in 0..80 {
        if y_lo.is_some() {
            break;
        }
        lo -= step;
        step *= 2.0;
        y_lo = point(lo);
    }
    let mut y_lo = y_lo?;
    let mut width = lo.abs().max(1.0);
    let mut hi = lo + width;
    let mut bounded = false;
    for _ in 0..80 {
        match point(hi) {
            Some(y) => {
                lo = hi;
                y_lo = y;
                width *= 2.0;
                hi = lo + width;
            }
            None => {
                bounded = true;
                break;
            }
        }
    }
    if !bounded {
        return None;
    }
    while hi - lo > 1e-12 * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        match point(mid) {
            Some(y) => {
                lo = mid;
                y_lo = y;
            }
            None => hi = mid,
        }
    }
    Some((lo, y_lo))
}

/// QoS-constrained design: maximize the radar metric subject to the
/// per-user SNR targets. Dispatches on the DAC resolution.
pub fn design_qos(p: &DesignProblem) -> Result<DesignResult> {
    let Requirement::Qos { gammas } = &p.requirement else {
        return Err(IsacError::InvalidConfig("design_qos needs a QoS requirement".into()));
    };
    let ctx = Context::new(p)?;
    let rows = ctx.qos_rows(gammas)?;
    ctx.solve(&Goal::Radar(&rows))
}

/// QoD-constrained design: maximize the worst user's margin subject to the
/// radar metric reaching `chi`.
pub fn design_qod(p: &DesignProblem) -> Result<DesignResult> {
    let Requirement::Qod { chi } = &p.requirement else {
        return Err(IsacError::InvalidConfig("design_qod needs a QoD requirement".into()));
    };
    let ctx = Context::new(p)?;
    let rows = ctx.qod_rows()?;
    ctx.solve(&Goal::Comm { rows: &rows, chi: *chi })
}

/// Unquantized-DAC design on the power sphere, for either requirement.
pub fn design_continuous(p: &DesignProblem) -> Result<DesignResult> {
    let mut q = p.clone();
    q.dac = Resolution::Infinite;
    design(&q)
}

/// Dispatch on the requirement.
pub fn design(p: &DesignProblem) -> Result<DesignResult> {
    match p.requirement {
        Requirement::Qos { .. } => design_qos(p),
        Requirement::Qod { .. } => design_qod(p),
    }
}

/// Feasible starting point: the matched beam if it already meets the
/// requirement, otherwise the max-min-slack point (QoS) or the radar-optimal
/// point (QoD).
pub fn initialize_x(p: &DesignProblem) -> Result<TransmitSignal> {
    let ctx = Context::new(p)?;
    let x = match &p.requirement {
        Requirement::Qos { gammas } => {
            let rows = ctx.qos_rows(gammas)?;
            ctx.initial_point(&Goal::Radar(&rows))?
        }
        Requirement::Qod { chi } => {
            let rows = ctx.qod_rows()?;
            ctx.initial_point(&Goal::Comm { rows: &rows, chi: *chi })?
        }
    };
    ctx.signal(x)
}

//! Sweep runners. Each experiment is a pure function of the resolved spec:
//! grid points may run in parallel, and rows are emitted in grid order.

use std::time::Instant;

use anyhow::Result;
use onebit_isac::designs::{design, DesignProblem, DesignResult, DesignStatus, Requirement};
use onebit_isac::model::{
    db_to_linear, draw_comm_channels, draw_symbol_indices, linear_to_db, Constellation, CVector,
    RadarChannel, SystemConfig,
};
use onebit_isac::montecarlo::{mc_ber, mc_qscnr, mc_roc, BerPoint, McEstimate, PointStatus};
use onebit_isac::radar::{radar_energy_efficiency, PowerModel, Resolution};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConverterPair, ExperimentKind, ExperimentSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// One result row plus metadata that only goes to the JSON sidecar.
#[derive(Debug, Clone)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub infeasible: bool,
    pub meta: Value,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub experiment: ExperimentKind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Values of column `name`, in row order.
    pub fn column(&self, name: &str) -> Vec<&Cell> {
        let i = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| &r.cells[i]).collect()
    }

    pub fn all_infeasible(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.infeasible)
    }
}

pub fn columns(kind: ExperimentKind) -> Vec<&'static str> {
    match kind {
        ExperimentKind::QosSweep => vec![
            "config", "gamma_db", "qscnr_ta_db", "qscnr_mc_db", "qscnr_mc_stderr", "margin", "iters", "status",
        ],
        ExperimentKind::AntennaSweepRx => vec![
            "config", "n_rx", "qscnr_ta_db", "qscnr_mc_db", "qscnr_mc_stderr", "margin", "iters", "status",
        ],
        ExperimentKind::AntennaSweepTx => vec![
            "config", "n_tx", "qscnr_ta_db", "qscnr_mc_db", "qscnr_mc_stderr", "margin", "iters", "status",
        ],
        ExperimentKind::Roc => vec![
            "config", "delta", "threshold", "pfa_mc", "pfa_stderr", "pd_mc", "pd_stderr", "pd_ta", "qscnr_ta_db",
            "status",
        ],
        ExperimentKind::QodSweep => vec!["config", "chi_db", "margin", "qscnr_ta_db", "iters", "status"],
        ExperimentKind::BerVsSnr => vec![
            "config", "order", "snr_c_db", "ber", "ber_stderr", "sep", "sep_stderr", "sep_lb", "sep_ub",
            "alpha_min", "infeasible_designs", "status",
        ],
        ExperimentKind::UserSweep => vec![
            "config", "n_users", "ber", "ber_stderr", "sep", "sep_stderr", "alpha_min", "infeasible_designs",
            "status",
        ],
        ExperimentKind::Ree => vec!["config", "n_rx", "qscnr_ta_db", "total_power_w", "ree", "status"],
        ExperimentKind::Convergence => vec!["config", "run_seed", "iteration", "objective", "objective_db", "status"],
    }
}

/// Runs the experiment described by a resolved spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Table> {
    let base = spec.system_config()?;
    let per_config: Vec<Vec<Row>> = spec
        .configs()
        .par_iter()
        .map(|&pair| run_config(spec, &base, pair))
        .collect::<Result<_>>()?;
    Ok(Table {
        experiment: spec.experiment,
        columns: columns(spec.experiment),
        rows: per_config.into_iter().flatten().collect(),
    })
}

fn run_config(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair) -> Result<Vec<Row>> {
    let grid = spec.grid();
    match spec.experiment {
        ExperimentKind::QosSweep => continuation(spec, base, pair, grid, |cfg, g| {
            (cfg.clone(), qos(cfg, db_to_linear(g)))
        }),
        ExperimentKind::AntennaSweepRx => continuation(spec, base, pair, grid, |cfg, n| {
            let cfg = SystemConfig { n_rx: n as usize, ..cfg.clone() };
            let req = qos(&cfg, db_to_linear(spec.gamma_db));
            (cfg, req)
        }),
        ExperimentKind::AntennaSweepTx => grid
            .par_iter()
            .map(|&n| {
                let cfg = SystemConfig { n_tx: n as usize, ..base.clone() };
                let req = qos(&cfg, db_to_linear(spec.gamma_db));
                radar_row(spec, pair, &cfg, req, n, None).map(|(row, _)| row)
            })
            .collect(),
        ExperimentKind::QodSweep => qod_sweep(spec, base, pair, grid),
        ExperimentKind::Roc => roc(spec, base, pair, grid),
        ExperimentKind::BerVsSnr => ber_vs_snr(spec, base, pair, grid),
        ExperimentKind::UserSweep => user_sweep(spec, base, pair, grid),
        ExperimentKind::Ree => grid.par_iter().map(|&n| ree(spec, base, pair, n)).collect(),
        ExperimentKind::Convergence => {
            let runs: Vec<Vec<Row>> = grid
                .par_iter()
                .map(|&s| convergence(spec, base, pair, s as u64))
                .collect::<Result<_>>()?;
            Ok(runs.into_iter().flatten().collect())
        }
    }
}

fn qos(cfg: &SystemConfig, gamma: f64) -> Requirement {
    Requirement::Qos {
        gammas: vec![gamma; cfg.n_users],
    }
}

/// Design problem for symbol draw 0 under `cfg`.
pub fn build_problem(
    spec: &ExperimentSpec,
    pair: ConverterPair,
    cfg: &SystemConfig,
    requirement: Requirement,
) -> Result<DesignProblem> {
    let psk = Constellation::psk(cfg.modulation_order)?;
    let symbols = draw_symbol_indices(cfg.rng_seed, 0, cfg.n_users, cfg.modulation_order)
        .into_iter()
        .map(|i| psk.symbol(i))
        .collect();
    Ok(DesignProblem::new(requirement, cfg.clone(), draw_comm_channels(cfg), symbols)
        .with_converters(pair.dac.into(), pair.adc.into())
        .with_comm_metric(spec.comm_metric.into()))
}

fn db(v: f64) -> Option<f64> {
    (v > 0.0).then(|| linear_to_db(v))
}

/// Standard error of `10 log10(value)` by the delta method.
fn db_stderr(e: &McEstimate) -> Option<f64> {
    (e.value > 0.0).then(|| 10.0 / std::f64::consts::LN_10 * e.stderr / e.value)
}

fn design_meta(pair: ConverterPair, point: f64, res: &DesignResult, started: Instant) -> Value {
    json!({
        "config": pair.label(),
        "point": point,
        "nodes_explored": res.nodes_explored,
        "max_gap": res.max_gap,
        "objective_trace": res.objective_trace,
        "wall_time_s": started.elapsed().as_secs_f64(),
    })
}

fn feasible(res: &DesignResult) -> bool {
    res.status != DesignStatus::Infeasible
}

/// Design plus TA and MC radar metrics at one point. Returns the design too
/// so that sweeps can continue from it.
fn radar_row(
    spec: &ExperimentSpec,
    pair: ConverterPair,
    cfg: &SystemConfig,
    req: Requirement,
    point: f64,
    warm: Option<CVector>,
) -> Result<(Row, DesignResult)> {
    let started = Instant::now();
    let p = build_problem(spec, pair, cfg, req)?.with_warm_start(warm);
    let res = design(&p)?;
    let label = pair.label();
    let point_cell = if spec.experiment == ExperimentKind::QosSweep {
        Cell::Float(point)
    } else {
        Cell::Int(point as i64)
    };
    if !feasible(&res) {
        let cells = vec![
            Cell::Text(label),
            point_cell,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Int(res.iterations as i64),
            Cell::Text(res.status.label().into()),
        ];
        let meta = design_meta(pair, point, &res, started);
        return Ok((Row { cells, infeasible: true, meta }, res));
    }
    let ch = RadarChannel::new(cfg);
    let adc: Resolution = pair.adc.into();
    let est = mc_qscnr(&res.x, &res.f, &ch, cfg, adc, &spec.mc_config())?;
    let cells = vec![
        Cell::Text(label),
        point_cell,
        Cell::opt(db(res.final_qscnr)),
        Cell::opt(db(est.qscnr.value)),
        Cell::opt(db_stderr(&est.qscnr)),
        Cell::Float(res.final_min_margin),
        Cell::Int(res.iterations as i64),
        Cell::Text(res.status.label().into()),
    ];
    let mut meta = design_meta(pair, point, &res, started);
    meta["qscnr_mc_linear"] = json!(est.qscnr);
    meta["var_h0"] = json!(est.var_h0);
    Ok((Row { cells, infeasible: false, meta }, res))
}

/// Runs the grid in order, warm-starting each point from the last feasible
/// design.
fn continuation(
    spec: &ExperimentSpec,
    base: &SystemConfig,
    pair: ConverterPair,
    grid: &[f64],
    point: impl Fn(&SystemConfig, f64) -> (SystemConfig, Requirement),
) -> Result<Vec<Row>> {
    let mut warm: Option<CVector> = None;
    let mut rows = Vec::with_capacity(grid.len());
    for &g in grid {
        let (cfg, req) = point(base, g);
        let (row, res) = radar_row(spec, pair, &cfg, req, g, warm.clone())?;
        if feasible(&res) {
            warm = Some(res.x.x.clone());
        }
        rows.push(row);
    }
    Ok(rows)
}

fn qod_sweep(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair, grid: &[f64]) -> Result<Vec<Row>> {
    let mut warm: Option<CVector> = None;
    let mut rows = Vec::with_capacity(grid.len());
    for &chi_db in grid {
        let started = Instant::now();
        let req = Requirement::Qod {
            chi: db_to_linear(chi_db),
        };
        let p = build_problem(spec, pair, base, req)?.with_warm_start(warm.clone());
        let res = design(&p)?;
        let ok = feasible(&res);
        if ok {
            warm = Some(res.x.x.clone());
        }
        rows.push(Row {
            cells: vec![
                Cell::Text(pair.label()),
                Cell::Float(chi_db),
                Cell::opt(ok.then_some(res.final_min_margin)),
                Cell::opt(if ok { db(res.final_qscnr) } else { None }),
                Cell::Int(res.iterations as i64),
                Cell::Text(res.status.label().into()),
            ],
            infeasible: !ok,
            meta: design_meta(pair, chi_db, &res, started),
        });
    }
    Ok(rows)
}

fn roc(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair, deltas: &[f64]) -> Result<Vec<Row>> {
    let started = Instant::now();
    let p = build_problem(spec, pair, base, qos(base, db_to_linear(spec.gamma_db)))?;
    let res = design(&p)?;
    let label = pair.label();
    if !feasible(&res) {
        return Ok(deltas
            .iter()
            .map(|&d| {
                let mut cells = vec![Cell::Text(label.clone()), Cell::Float(d)];
                cells.extend(std::iter::repeat_n(Cell::Empty, 7));
                cells.push(Cell::Text(res.status.label().into()));
                Row {
                    cells,
                    infeasible: true,
                    meta: design_meta(pair, d, &res, started),
                }
            })
            .collect());
    }
    let ch = RadarChannel::new(base);
    let pts = mc_roc(&res.x, &res.f, &ch, base, deltas, &spec.mc_config())?;
    Ok(pts
        .iter()
        .map(|pt| Row {
            cells: vec![
                Cell::Text(label.clone()),
                Cell::Float(pt.delta),
                Cell::Float(pt.threshold),
                Cell::Float(pt.pfa.value),
                Cell::Float(pt.pfa.stderr),
                Cell::Float(pt.pd.value),
                Cell::Float(pt.pd.stderr),
                Cell::Float(pt.pd_analytic),
                Cell::opt(db(res.final_qscnr)),
                Cell::Text(res.status.label().into()),
            ],
            infeasible: false,
            meta: design_meta(pair, pt.delta, &res, started),
        })
        .collect())
}

fn ber_cells(pt: &BerPoint) -> Vec<Cell> {
    vec![
        Cell::opt(pt.ber.map(|e| e.value)),
        Cell::opt(pt.ber.map(|e| e.stderr)),
        Cell::opt(pt.sep.map(|e| e.value)),
        Cell::opt(pt.sep.map(|e| e.stderr)),
    ]
}

fn ber_meta(pair: ConverterPair, pt: &BerPoint, started: Instant) -> Value {
    json!({
        "config": pair.label(),
        "point": pt,
        "wall_time_s": started.elapsed().as_secs_f64(),
    })
}

fn qod_problem(spec: &ExperimentSpec, pair: ConverterPair, cfg: &SystemConfig) -> Result<DesignProblem> {
    build_problem(
        spec,
        pair,
        cfg,
        Requirement::Qod {
            chi: db_to_linear(spec.chi_db),
        },
    )
}

fn ber_vs_snr(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair, grid: &[f64]) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for order in spec.orders() {
        let started = Instant::now();
        let cfg = SystemConfig {
            modulation_order: order,
            ..base.clone()
        };
        let pts = mc_ber(&qod_problem(spec, pair, &cfg)?, grid, &spec.mc_config())?;
        for pt in &pts {
            let mut cells = vec![Cell::Text(pair.label()), Cell::Int(order as i64), Cell::Float(pt.snr_c_db)];
            cells.extend(ber_cells(pt));
            let bounds = pt.status != PointStatus::Infeasible;
            cells.push(Cell::opt(bounds.then_some(pt.sep_lower)));
            cells.push(Cell::opt(bounds.then_some(pt.sep_upper)));
            cells.push(Cell::opt(bounds.then_some(pt.alpha_min)));
            cells.push(Cell::Int(pt.infeasible_designs as i64));
            cells.push(Cell::Text(pt.status.label().into()));
            rows.push(Row {
                cells,
                infeasible: pt.status == PointStatus::Infeasible,
                meta: ber_meta(pair, pt, started),
            });
        }
    }
    Ok(rows)
}

fn user_sweep(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair, grid: &[f64]) -> Result<Vec<Row>> {
    grid.par_iter()
        .map(|&u| {
            let started = Instant::now();
            let users = u as usize;
            let cfg = SystemConfig {
                n_users: users,
                comm_noise_powers: vec![base.comm_noise_powers[0]; users],
                ..base.clone()
            };
            let snr = spec.base.snr_c_db;
            let pt = mc_ber(&qod_problem(spec, pair, &cfg)?, &[snr], &spec.mc_config())?.remove(0);
            let mut cells = vec![Cell::Text(pair.label()), Cell::Int(users as i64)];
            cells.extend(ber_cells(&pt));
            let ok = pt.status != PointStatus::Infeasible;
            cells.push(Cell::opt(ok.then_some(pt.alpha_min)));
            cells.push(Cell::Int(pt.infeasible_designs as i64));
            cells.push(Cell::Text(pt.status.label().into()));
            Ok(Row {
                cells,
                infeasible: !ok,
                meta: ber_meta(pair, &pt, started),
            })
        })
        .collect()
}

fn ree(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair, n_rx: f64) -> Result<Row> {
    let started = Instant::now();
    let cfg = SystemConfig {
        n_rx: n_rx as usize,
        ..base.clone()
    };
    let res = design(&build_problem(spec, pair, &cfg, qos(&cfg, db_to_linear(spec.gamma_db)))?)?;
    let pm = PowerModel::new(pair.dac.into(), pair.adc.into());
    let total = pm.total_power(cfg.n_tx, cfg.n_rx);
    let ok = feasible(&res);
    let ree = if ok {
        Some(radar_energy_efficiency(res.final_qscnr, &cfg, &pm)?)
    } else {
        None
    };
    let mut meta = design_meta(pair, n_rx, &res, started);
    meta["scnr_linear"] = json!(res.final_qscnr);
    Ok(Row {
        cells: vec![
            Cell::Text(pair.label()),
            Cell::Int(cfg.n_rx as i64),
            Cell::opt(if ok { db(res.final_qscnr) } else { None }),
            Cell::Float(total),
            Cell::opt(ree),
            Cell::Text(res.status.label().into()),
        ],
        infeasible: !ok,
        meta,
    })
}

fn convergence(spec: &ExperimentSpec, base: &SystemConfig, pair: ConverterPair, offset: u64) -> Result<Vec<Row>> {
    let started = Instant::now();
    let cfg = SystemConfig {
        rng_seed: base.rng_seed.wrapping_add(offset),
        ..base.clone()
    };
    let res = design(&build_problem(spec, pair, &cfg, qos(&cfg, db_to_linear(spec.gamma_db)))?)?;
    let meta = design_meta(pair, offset as f64, &res, started);
    let status = res.status.label();
    let seed = Cell::Int(cfg.rng_seed as i64);
    if !feasible(&res) {
        return Ok(vec![Row {
            cells: vec![
                Cell::Text(pair.label()),
                seed,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Text(status.into()),
            ],
            infeasible: true,
            meta,
        }]);
    }
    Ok(res
        .objective_trace
        .iter()
        .enumerate()
        .map(|(i, &v)| Row {
            cells: vec![
                Cell::Text(pair.label()),
                seed.clone(),
                Cell::Int(i as i64),
                Cell::Float(v),
                Cell::opt(db(v)),
                Cell::Text(status.into()),
            ],
            infeasible: false,
            meta: meta.clone(),
        })
        .collect())
}

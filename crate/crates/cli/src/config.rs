//! Experiment specification: JSON schema, defaults and conversion to the
//! linear-scale library configuration.
//!
//! Every field is optional. Absent scene fields take the reference scene
//! (U = 4, E = 1 W, target at 10 deg, clutter at -50 and 30 deg, SNR_R = 15 dB,
//! CNR = 30 dB, SNR_C = 5 dB, 8-PSK). Antenna counts and trial counts follow
//! the selected scale. A resolved spec serializes with every field present
//! and parses back to itself.

use std::path::Path;

use anyhow::{bail, Context, Result};
use onebit_isac::designs::CommMetric;
use onebit_isac::model::{db_to_linear, SystemConfig};
use onebit_isac::montecarlo::McConfig;
use onebit_isac::radar::Resolution;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QosSweep,
    AntennaSweepRx,
    AntennaSweepTx,
    Roc,
    QodSweep,
    BerVsSnr,
    UserSweep,
    Ree,
    Convergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::QosSweep => "qos_sweep",
            ExperimentKind::AntennaSweepRx => "antenna_sweep_rx",
            ExperimentKind::AntennaSweepTx => "antenna_sweep_tx",
            ExperimentKind::Roc => "roc",
            ExperimentKind::QodSweep => "qod_sweep",
            ExperimentKind::BerVsSnr => "ber_vs_snr",
            ExperimentKind::UserSweep => "user_sweep",
            ExperimentKind::Ree => "ree",
            ExperimentKind::Convergence => "convergence",
        }
    }

    /// Grid used when the spec gives none.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            ExperimentKind::QosSweep => vec![0.0, 4.0, 8.0, 12.0],
            ExperimentKind::AntennaSweepRx => vec![32.0, 64.0, 128.0],
            ExperimentKind::AntennaSweepTx => vec![8.0, 12.0, 16.0],
            ExperimentKind::Roc => vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9],
            ExperimentKind::QodSweep => vec![4.0, 8.0, 12.0],
            ExperimentKind::BerVsSnr => vec![0.0, 5.0, 10.0, 15.0],
            ExperimentKind::UserSweep => vec![2.0, 4.0, 6.0],
            ExperimentKind::Ree => vec![32.0, 128.0],
            ExperimentKind::Convergence => vec![0.0],
        }
    }

    /// What the grid values mean, used in error messages.
    fn grid_meaning(self) -> &'static str {
        match self {
            ExperimentKind::QosSweep => "SNR targets in dB",
            ExperimentKind::AntennaSweepRx | ExperimentKind::Ree => "receive antenna counts",
            ExperimentKind::AntennaSweepTx => "transmit antenna counts",
            ExperimentKind::Roc => "false-alarm probabilities",
            ExperimentKind::QodSweep => "radar thresholds in dB",
            ExperimentKind::BerVsSnr => "communication SNRs in dB",
            ExperimentKind::UserSweep => "user counts",
            ExperimentKind::Convergence => "seed offsets",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Converter {
    OneBit,
    Infinite,
}

impl From<Converter> for Resolution {
    fn from(c: Converter) -> Self {
        match c {
            Converter::OneBit => Resolution::OneBit,
            Converter::Infinite => Resolution::Infinite,
        }
    }
}

/// One DAC/ADC pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterPair {
    pub dac: Converter,
    pub adc: Converter,
}

impl ConverterPair {
    pub fn label(self) -> String {
        format!(
            "{}dac_{}adc",
            Resolution::from(self.dac).label(),
            Resolution::from(self.adc).label()
        )
    }

    pub fn all() -> Vec<ConverterPair> {
        use Converter::*;
        [(OneBit, OneBit), (OneBit, Infinite), (Infinite, OneBit), (Infinite, Infinite)]
            .into_iter()
            .map(|(dac, adc)| ConverterPair { dac, adc })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// N_T = 16, N_R = 64, 1e5 trials.
    Desk,
    /// N_T = N_R = 128, 1e6 trials.
    Paper,
}

impl Scale {
    fn antennas(self) -> (usize, usize) {
        match self {
            Scale::Desk => (16, 64),
            Scale::Paper => (128, 128),
        }
    }

    fn trials(self) -> usize {
        match self {
            Scale::Desk => 100_000,
            Scale::Paper => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommMetricSpec {
    SafeMargin,
    Mmse,
}

impl From<CommMetricSpec> for CommMetric {
    fn from(c: CommMetricSpec) -> Self {
        match c {
            CommMetricSpec::SafeMargin => CommMetric::SafeMargin,
            CommMetricSpec::Mmse => CommMetric::Mmse,
        }
    }
}

/// Scene parameters in user units (dB, degrees, watts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub n_tx: Option<usize>,
    pub n_rx: Option<usize>,
    pub power_budget_w: f64,
    pub radar_noise_power_w: f64,
    /// `E / sigma_C^2`, the same for every user.
    pub snr_c_db: f64,
    pub snr_r_db: f64,
    pub cnr_db: Vec<f64>,
    pub target_angle_deg: f64,
    pub clutter_angles_deg: Vec<f64>,
    pub n_users: usize,
    pub modulation_order: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            n_tx: None,
            n_rx: None,
            power_budget_w: 1.0,
            radar_noise_power_w: 1.0,
            snr_c_db: 5.0,
            snr_r_db: 15.0,
            cnr_db: vec![30.0, 30.0],
            target_angle_deg: 10.0,
            clutter_angles_deg: vec![-50.0, 30.0],
            n_users: 4,
            modulation_order: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub n_trials: Option<usize>,
    pub batch: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            n_trials: None,
            batch: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub scale: Scale,
    /// DAC/ADC pairs; all four by default (the two 1-bit ADC ones for ROC).
    pub configs: Option<Vec<ConverterPair>>,
    pub base: SceneSpec,
    /// Sweep values; their meaning depends on the experiment.
    pub grid: Option<Vec<f64>>,
    /// SNR target for experiments that run QoS designs at a fixed level.
    pub gamma_db: f64,
    /// Radar threshold for the error-rate experiments, which run QoD designs.
    pub chi_db: f64,
    /// PSK orders for the error-rate experiments (defaults to the scene's).
    pub orders: Option<Vec<usize>>,
    pub comm_metric: CommMetricSpec,
    pub mc: McSpec,
    pub seed: u64,
    pub output_path: String,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            experiment: ExperimentKind::QosSweep,
            scale: Scale::Desk,
            configs: None,
            base: SceneSpec::default(),
            grid: None,
            gamma_db: 0.0,
            chi_db: 4.0,
            orders: None,
            comm_metric: CommMetricSpec::SafeMargin,
            mc: McSpec::default(),
            seed: 0,
            output_path: "results".into(),
        }
    }
}

/// Parses a spec, naming the offending field on schema errors.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ExperimentSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!(
            "field `{path}`: {inner} (line {}, column {})",
            inner.line(),
            inner.column()
        )
    })?;
    Ok(spec)
}

/// Reads, parses and resolves a spec file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = parse_spec(&text).with_context(|| format!("in {}", path.display()))?;
    spec.resolve()
}

impl ExperimentSpec {
    /// Fills scale-dependent fields and checks every value.
    pub fn resolve(mut self) -> Result<Self> {
        let (nt, nr) = self.scale.antennas();
        self.base.n_tx.get_or_insert(nt);
        self.base.n_rx.get_or_insert(nr);
        self.mc.n_trials.get_or_insert(self.scale.trials());
        self.grid.get_or_insert_with(|| self.experiment.default_grid());
        self.orders.get_or_insert_with(|| vec![self.base.modulation_order]);
        let roc = self.experiment == ExperimentKind::Roc;
        self.configs.get_or_insert_with(|| {
            ConverterPair::all()
                .into_iter()
                .filter(|c| !roc || c.adc == Converter::OneBit)
                .collect()
        });
        self.validate()?;
        Ok(self)
    }

    /// Forces the reference antenna and trial counts.
    pub fn paper_scale(mut self) -> Self {
        self.scale = Scale::Paper;
        let (nt, nr) = Scale::Paper.antennas();
        self.base.n_tx = Some(nt);
        self.base.n_rx = Some(nr);
        self.mc.n_trials = Some(Scale::Paper.trials());
        self
    }

    pub fn grid(&self) -> &[f64] {
        self.grid.as_deref().unwrap_or(&[])
    }

    pub fn configs(&self) -> &[ConverterPair] {
        self.configs.as_deref().unwrap_or(&[])
    }

    pub fn orders(&self) -> Vec<usize> {
        self.orders.clone().unwrap_or_else(|| vec![self.base.modulation_order])
    }

    fn validate(&self) -> Result<()> {
        let b = &self.base;
        let angle = |name: &str, v: f64| -> Result<()> {
            if !(v.abs() <= 90.0) {
                bail!("field `base.{name}`: {v} is not an angle in degrees within [-90, 90]");
            }
            Ok(())
        };
        angle("target_angle_deg", b.target_angle_deg)?;
        for &a in &b.clutter_angles_deg {
            angle("clutter_angles_deg", a)?;
        }
        if b.cnr_db.len() != b.clutter_angles_deg.len() {
            bail!(
                "field `base.cnr_db`: {} values for {} clutter angles",
                b.cnr_db.len(),
                b.clutter_angles_deg.len()
            );
        }
        for (name, v) in [
            ("snr_c_db", b.snr_c_db),
            ("snr_r_db", b.snr_r_db),
            ("power_budget_w", b.power_budget_w),
            ("radar_noise_power_w", b.radar_noise_power_w),
        ] {
            if !v.is_finite() {
                bail!("field `base.{name}` must be finite");
            }
        }
        if b.cnr_db.iter().any(|v| !v.is_finite()) {
            bail!("field `base.cnr_db` must be finite");
        }
        if !self.gamma_db.is_finite() || !self.chi_db.is_finite() {
            bail!("fields `gamma_db` and `chi_db` must be finite");
        }
        if self.configs().is_empty() {
            bail!("field `configs`: at least one DAC/ADC pair is required");
        }
        let grid = self.grid();
        if grid.is_empty() {
            bail!("field `grid`: at least one point is required");
        }
        if grid.iter().any(|v| !v.is_finite()) {
            bail!("field `grid`: values must be finite");
        }
        let counts = |what: &str| -> Result<()> {
            if grid.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                bail!("field `grid`: {what} must be positive integers");
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::AntennaSweepRx
            | ExperimentKind::AntennaSweepTx
            | ExperimentKind::Ree
            | ExperimentKind::UserSweep => counts(self.experiment.grid_meaning())?,
            ExperimentKind::Convergence => {
                if grid.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                    bail!("field `grid`: {} must be nonnegative integers", self.experiment.grid_meaning());
                }
            }
            ExperimentKind::Roc => {
                if grid.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
                    bail!("field `grid`: {} must lie in (0, 1)", self.experiment.grid_meaning());
                }
                if self.configs().iter().any(|c| c.adc != Converter::OneBit) {
                    bail!("field `configs`: the ROC experiment models the 1-bit receiver only");
                }
            }
            _ => {}
        }
        if let Some(orders) = &self.orders {
            if orders.is_empty() || orders.iter().any(|m| *m < 2 || !m.is_power_of_two()) {
                bail!("field `orders`: PSK orders must be powers of two >= 2");
            }
        }
        if self.mc.batch == 0 {
            bail!("field `mc.batch` must be positive");
        }
        // Library-level checks (positivity, consistency).
        self.system_config().map_err(|e| anyhow::anyhow!("field `base`: {e}"))?;
        if self.output_path.is_empty() {
            bail!("field `output_path` must not be empty");
        }
        Ok(())
    }

    /// Linear-scale scene. This is the only place where dB and degrees are
    /// converted.
    pub fn system_config(&self) -> onebit_isac::Result<SystemConfig> {
        let b = &self.base;
        let e = b.power_budget_w;
        let sigma_c2 = e / db_to_linear(b.snr_c_db);
        let cfg = SystemConfig {
            n_tx: b.n_tx.unwrap_or(self.scale.antennas().0),
            n_rx: b.n_rx.unwrap_or(self.scale.antennas().1),
            power_budget: e,
            radar_noise_power: b.radar_noise_power_w,
            comm_noise_powers: vec![sigma_c2; b.n_users],
            radar_snr: db_to_linear(b.snr_r_db),
            clutter_cnrs: b.cnr_db.iter().map(|&c| db_to_linear(c)).collect(),
            target_angle: b.target_angle_deg.to_radians(),
            clutter_angles: b.clutter_angles_deg.iter().map(|a| a.to_radians()).collect(),
            n_users: b.n_users,
            modulation_order: b.modulation_order,
            rng_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_trials: self.mc.n_trials.unwrap_or(self.scale.trials()),
            rng_seed: self.seed,
            batch: self.mc.batch,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

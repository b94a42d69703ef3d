//! Scenario configuration files.
//!
//! Configs are TOML. Every table rejects unknown keys, and all fields are
//! validated before a scenario is dispatched. Physical inputs are
//! dimensionless: frequencies in units of `ω`, times in units of `1/ω`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use qcavity::dynamics::{Coupling, IntegratorConfig};
use qcavity::magnus::solve_displacement_target;
use qcavity::{Envelope, PulseSpec, SystemSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in m/s.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Evolve,
    ConcurrenceSectors,
    Subcycle,
    FidelitySweep,
    Quasistatic,
    RwaCheck,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::ConcurrenceSectors => "concurrence-sectors",
            Self::Subcycle => "subcycle",
            Self::FidelitySweep => "fidelity-sweep",
            Self::Quasistatic => "quasistatic",
            Self::RwaCheck => "rwa-check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    Rwa,
    Full,
}

impl From<CouplingKind> for Coupling {
    fn from(c: CouplingKind) -> Self {
        match c {
            CouplingKind::Rwa => Coupling::Rwa,
            CouplingKind::Full => Coupling::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    HermiteGauss,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// `g/ω`; may instead come from `[si]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_over_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

/// Laboratory units, converted to dimensionless ratios on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiSection {
    pub wavelength_nm: f64,
    pub g_over_2pi_ghz: f64,
    pub tau_d_ps: f64,
}

impl SiSection {
    pub fn omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }

    pub fn g_over_omega(&self) -> f64 {
        2.0 * PI * self.g_over_2pi_ghz * 1e9 / self.omega()
    }

    pub fn omega_tau_d(&self) -> f64 {
        self.omega() * self.tau_d_ps * 1e-12
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// `ωτ_d`; may instead come from `[si]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_tau_d: Option<f64>,
    /// `Ωτ_d`; exclusive with `target_z0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    /// `[re, im]` of the asymptotic displacement to realize; sets area and phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_z0: Option<[f64; 2]>,
    #[serde(default = "default_shape")]
    pub shape: Shape,
    /// `[[m, c_m], ...]` for the Hermite–Gauss shape.
    #[serde(default = "default_hg")]
    pub hg: Vec<(usize, f64)>,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_true")]
    pub carrier: bool,
}

fn default_shape() -> Shape {
    Shape::HermiteGauss
}

fn default_hg() -> Vec<(usize, f64)> {
    vec![(0, 1.0)]
}

fn default_window() -> f64 {
    qcavity::pulses::DEFAULT_WINDOW
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_max_step_fraction")]
    pub max_step_fraction: f64,
    #[serde(default = "default_leakage")]
    pub leakage_tolerance: f64,
}

fn default_rtol() -> f64 {
    IntegratorConfig::default().rtol
}

fn default_atol() -> f64 {
    IntegratorConfig::default().atol
}

fn default_max_step_fraction() -> f64 {
    IntegratorConfig::default().max_step_fraction
}

fn default_leakage() -> f64 {
    IntegratorConfig::default().leakage_tolerance
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            atol: default_atol(),
            max_step_fraction: default_max_step_fraction(),
            leakage_tolerance: default_leakage(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// Qubit label of the initial state, `"00"` to `"11"` (qubit A first).
    #[serde(default = "default_qubits")]
    pub initial_qubits: String,
    #[serde(default)]
    pub initial_photons: usize,
    /// Defaults to the start of the pulse window, or 0 without a pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    /// Defaults to one single-photon exchange period after the pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_coupling")]
    pub coupling: CouplingKind,
    /// `[["00", n], ...]` amplitudes exported as re/im columns.
    #[serde(default)]
    pub amplitudes: Vec<(String, usize)>,
}

fn default_qubits() -> String {
    "00".into()
}

fn default_points() -> usize {
    400
}

fn default_coupling() -> CouplingKind {
    CouplingKind::Rwa
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            initial_qubits: default_qubits(),
            initial_photons: 0,
            t_start: None,
            t_end: None,
            points: default_points(),
            coupling: default_coupling(),
            amplitudes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorsSection {
    /// Photon numbers `n` of the sectors `|00; n⟩`.
    #[serde(default = "default_sectors")]
    pub sectors: Vec<usize>,
    /// End of the `g t` axis.
    #[serde(default = "default_gt_end")]
    pub gt_end: f64,
    #[serde(default = "default_sector_points")]
    pub points: usize,
}

fn default_sectors() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_gt_end() -> f64 {
    2.0 * PI
}

fn default_sector_points() -> usize {
    1001
}

impl Default for SectorsSection {
    fn default() -> Self {
        Self { sectors: default_sectors(), gt_end: default_gt_end(), points: default_sector_points() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubcycleSection {
    /// Magnus order of the analytic column, 1 to 3.
    #[serde(default = "default_order")]
    pub order: u8,
    /// Defaults to one single-photon exchange period after the pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_order() -> u8 {
    1
}

impl Default for SubcycleSection {
    fn default() -> Self {
        Self { order: default_order(), t_end: None, points: default_points() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityEnvelope {
    pub name: String,
    pub hg: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySection {
    /// `[re, im]` of the target displacement.
    pub z0: [f64; 2],
    pub envelopes: Vec<FidelityEnvelope>,
    #[serde(default = "default_g_tau_min")]
    pub g_tau_min: f64,
    #[serde(default = "default_g_tau_max")]
    pub g_tau_max: f64,
    #[serde(default = "default_fidelity_points")]
    pub points: usize,
    #[serde(default = "default_fidelity_omega_tau")]
    pub omega_tau_d: f64,
}

fn default_g_tau_min() -> f64 {
    0.05
}

fn default_g_tau_max() -> f64 {
    0.6
}

fn default_fidelity_points() -> usize {
    8
}

fn default_fidelity_omega_tau() -> f64 {
    qcavity::magnus::FIDELITY_OMEGA_TAU
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasistaticSection {
    pub r: Vec<f64>,
    /// One series per entry; `[true, false]` compares both variants.
    #[serde(default = "default_rotation")]
    pub rotation: Vec<bool>,
    /// End of the time window in units of `1/g`.
    #[serde(default = "default_quench_gt_end")]
    pub gt_end: f64,
    #[serde(default = "default_quench_points")]
    pub points: usize,
    /// Write only the per-`r` summary, not the time series.
    #[serde(default)]
    pub summary_only: bool,
}

fn default_rotation() -> Vec<bool> {
    vec![true]
}

fn default_quench_gt_end() -> f64 {
    20.0
}

fn default_quench_points() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwaSection {
    /// End of the run in units of `1/g`.
    #[serde(default = "default_rwa_span")]
    pub gt_span: f64,
    /// Repeat at `g/2` and report the residual ratio.
    #[serde(default = "default_true")]
    pub compare_halved: bool,
}

fn default_rwa_span() -> f64 {
    2.0
}

impl Default for RwaSection {
    fn default() -> Self {
        Self { gt_span: default_rwa_span(), compare_halved: true }
    }
}

/// One scenario: a kind plus the sections it reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    /// CSV destination; standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub si: Option<SiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors: Option<SectorsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcycle: Option<SubcycleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quasistatic: Option<QuasistaticSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rwa: Option<RwaSection>,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            seed: 0,
            output: None,
            system: None,
            si: None,
            pulse: None,
            integrator: None,
            evolve: None,
            sectors: None,
            subcycle: None,
            fidelity: None,
            quasistatic: None,
            rwa: None,
        }
    }

    /// Parses and validates; parse errors carry the TOML line and column.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let needs_system = matches!(
            self.kind,
            ScenarioKind::Evolve | ScenarioKind::Subcycle | ScenarioKind::Quasistatic | ScenarioKind::RwaCheck
        );
        if needs_system {
            self.system_spec()?;
        }
        if self.kind == ScenarioKind::Subcycle {
            self.pulse_spec()?.ok_or_else(|| field_err("pulse", "section required by kind `subcycle`"))?;
        } else if self.pulse.is_some() {
            self.pulse_spec()?;
        }
        self.integrator_config()?;
        if let Some(s) = &self.si {
            for (name, v) in [("wavelength_nm", s.wavelength_nm), ("g_over_2pi_ghz", s.g_over_2pi_ghz), ("tau_d_ps", s.tau_d_ps)] {
                positive(&format!("si.{name}"), v)?;
            }
        }
        match self.kind {
            ScenarioKind::Evolve => self.validate_evolve(),
            ScenarioKind::ConcurrenceSectors => self.validate_sectors(),
            ScenarioKind::Subcycle => self.validate_subcycle(),
            ScenarioKind::FidelitySweep => self.validate_fidelity(),
            ScenarioKind::Quasistatic => self.validate_quasistatic(),
            ScenarioKind::RwaCheck => {
                positive("rwa.gt_span", self.rwa_section().gt_span)?;
                if self.pulse.is_some() {
                    return Err(field_err("pulse", "kind `rwa-check` uses its fixed short Gaussian pulse"));
                }
                Ok(())
            }
        }
    }

    fn validate_evolve(&self) -> Result<(), ConfigError> {
        let e = self.evolve_section();
        qubit_index(&e.initial_qubits).map_err(|m| field_err("evolve.initial_qubits", m))?;
        let spec = self.system_spec()?;
        if e.initial_photons > spec.n_max {
            return Err(field_err("evolve.initial_photons", format!("exceeds n_max = {}", spec.n_max)));
        }
        for (label, n) in &e.amplitudes {
            qubit_index(label).map_err(|m| field_err("evolve.amplitudes", m))?;
            if *n > spec.n_max {
                return Err(field_err("evolve.amplitudes", format!("photon number {n} exceeds n_max = {}", spec.n_max)));
            }
        }
        if e.points < 2 {
            return Err(field_err("evolve.points", "need at least 2 points"));
        }
        let (t0, t1) = self.evolve_window()?;
        if !(t1 > t0) {
            return Err(field_err("evolve.t_end", format!("must exceed t_start = {t0}")));
        }
        Ok(())
    }

    fn validate_sectors(&self) -> Result<(), ConfigError> {
        let s = self.sectors_section();
        if s.sectors.is_empty() || s.sectors.contains(&0) {
            return Err(field_err("sectors.sectors", "need a nonempty list of photon numbers n ≥ 1"));
        }
        positive("sectors.gt_end", s.gt_end)?;
        if s.points < 2 {
            return Err(field_err("sectors.points", "need at least 2 points"));
        }
        Ok(())
    }

    fn validate_subcycle(&self) -> Result<(), ConfigError> {
        let s = self.subcycle_section();
        if !(1..=3).contains(&s.order) {
            return Err(field_err("subcycle.order", format!("must be 1, 2 or 3, got {}", s.order)));
        }
        if s.points < 2 {
            return Err(field_err("subcycle.points", "need at least 2 points"));
        }
        let (t0, t1) = self.subcycle_window()?;
        if !(t1 > t0) {
            return Err(field_err("subcycle.t_end", format!("must exceed the pulse start {t0}")));
        }
        Ok(())
    }

    fn validate_fidelity(&self) -> Result<(), ConfigError> {
        let f = self.fidelity.as_ref().ok_or_else(|| field_err("fidelity", "section required by kind `fidelity-sweep`"))?;
        if C64::new(f.z0[0], f.z0[1]).norm() == 0.0 {
            return Err(field_err("fidelity.z0", "target displacement must be nonzero"));
        }
        if f.envelopes.is_empty() {
            return Err(field_err("fidelity.envelopes", "need at least one envelope"));
        }
        for e in &f.envelopes {
            let env = Envelope::hermite_gauss(e.hg.clone()).map_err(|err| field_err("fidelity.envelopes.hg", err.to_string()))?;
            solve_displacement_target(C64::new(f.z0[0], f.z0[1]), &env)
                .map_err(|err| field_err("fidelity.envelopes.hg", err.to_string()))?;
        }
        positive("fidelity.g_tau_min", f.g_tau_min)?;
        if !(f.g_tau_max > f.g_tau_min) {
            return Err(field_err("fidelity.g_tau_max", "must exceed g_tau_min"));
        }
        if f.points < 2 {
            return Err(field_err("fidelity.points", "need at least 2 points"));
        }
        positive("fidelity.omega_tau_d", f.omega_tau_d)
    }

    fn validate_quasistatic(&self) -> Result<(), ConfigError> {
        let q = self.quasistatic.as_ref().ok_or_else(|| field_err("quasistatic", "section required by kind `quasistatic`"))?;
        if q.r.is_empty() {
            return Err(field_err("quasistatic.r", "need at least one squeezing value"));
        }
        if let Some(r) = q.r.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(field_err("quasistatic.r", format!("squeezing must be finite and nonnegative, got {r}")));
        }
        if q.rotation.is_empty() {
            return Err(field_err("quasistatic.rotation", "need at least one variant"));
        }
        positive("quasistatic.gt_end", q.gt_end)?;
        if q.points < 2 {
            return Err(field_err("quasistatic.points", "need at least 2 points"));
        }
        Ok(())
    }

    /// System with `ω = 1`; `g/ω` from `[system]` or `[si]`.
    pub fn system_spec(&self) -> Result<SystemSpec, ConfigError> {
        let sys = self.system.as_ref().ok_or_else(|| field_err("system", format!("section required by kind `{}`", self.kind.name())))?;
        let g = match (sys.g_over_omega, &self.si) {
            (Some(_), Some(_)) => return Err(field_err("system.g_over_omega", "given both directly and through [si]")),
            (Some(g), None) => g,
            (None, Some(si)) => si.g_over_omega(),
            (None, None) => return Err(field_err("system.g_over_omega", "missing")),
        };
        let n_max = match (sys.n_max, self.kind) {
            (Some(n), _) => n,
            // quench cutoffs are chosen per squeezing value
            (None, ScenarioKind::Quasistatic) => 2,
            (None, _) => return Err(field_err("system.n_max", "missing")),
        };
        SystemSpec::new(1.0, g, n_max).map_err(|e| field_err("system", e.to_string()))
    }

    /// The resolved pulse, or `None` when the config has no `[pulse]`.
    pub fn pulse_spec(&self) -> Result<Option<PulseSpec>, ConfigError> {
        let Some(p) = &self.pulse else { return Ok(None) };
        let omega_tau_d = match (p.omega_tau_d, &self.si) {
            (Some(_), Some(_)) => return Err(field_err("pulse.omega_tau_d", "given both directly and through [si]")),
            (Some(w), None) => w,
            (None, Some(si)) => si.omega_tau_d(),
            (None, None) => return Err(field_err("pulse.omega_tau_d", "missing")),
        };
        let envelope = match p.shape {
            Shape::Gaussian => Envelope::Gaussian,
            Shape::HermiteGauss => Envelope::hermite_gauss(p.hg.clone()).map_err(|e| field_err("pulse.hg", e.to_string()))?,
        };
        let (area, phi) = match (p.area, p.target_z0) {
            (Some(_), Some(_)) => return Err(field_err("pulse.target_z0", "exclusive with pulse.area")),
            (Some(a), None) => (a, p.phi),
            (None, Some(z)) => solve_displacement_target(C64::new(z[0], z[1]), &envelope)
                .map_err(|e| field_err("pulse.target_z0", e.to_string()))?,
            (None, None) => return Err(field_err("pulse.area", "missing (or give pulse.target_z0)")),
        };
        let spec = PulseSpec::new(omega_tau_d, area, phi, envelope)
            .and_then(|s| s.with_window(p.window))
            .map_err(|e| field_err("pulse", e.to_string()))?;
        Ok(Some(if p.carrier { spec } else { spec.without_carrier() }))
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig, ConfigError> {
        let s = self.integrator.clone().unwrap_or_default();
        let cfg = IntegratorConfig {
            rtol: s.rtol,
            atol: s.atol,
            max_step_fraction: s.max_step_fraction,
            leakage_tolerance: s.leakage_tolerance,
            ..IntegratorConfig::default()
        };
        cfg.validate().map_err(|e| field_err("integrator", e.to_string()))?;
        Ok(cfg)
    }

    pub fn evolve_section(&self) -> EvolveSection {
        self.evolve.clone().unwrap_or_default()
    }

    pub fn sectors_section(&self) -> SectorsSection {
        self.sectors.clone().unwrap_or_default()
    }

    pub fn subcycle_section(&self) -> SubcycleSection {
        self.subcycle.clone().unwrap_or_default()
    }

    pub fn rwa_section(&self) -> RwaSection {
        self.rwa.clone().unwrap_or_default()
    }

    /// Half-duration `T` of the pulse window in units of `1/ω`.
    fn pulse_half_window(&self) -> Result<Option<f64>, ConfigError> {
        Ok(self.pulse_spec()?.map(|p| p.window * p.omega_tau_d))
    }

    fn exchange_period(&self) -> Result<f64, ConfigError> {
        Ok(2.0 * PI / self.system_spec()?.g)
    }

    pub fn evolve_window(&self) -> Result<(f64, f64), ConfigError> {
        let e = self.evolve_section();
        let half = self.pulse_half_window()?;
        let t0 = e.t_start.unwrap_or(half.map_or(0.0, |t| -t));
        let t1 = match e.t_end {
            Some(t) => t,
            None => half.unwrap_or(0.0) + self.exchange_period()?,
        };
        Ok((t0, t1))
    }

    pub fn subcycle_window(&self) -> Result<(f64, f64), ConfigError> {
        let half = self.pulse_half_window()?.unwrap_or(0.0);
        let t1 = match self.subcycle_section().t_end {
            Some(t) => t,
            None => half + self.exchange_period()?,
        };
        Ok((-half, t1))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive and finite, got {v}")))
    }
}

/// Basis index `2 q_A + q_B` of a two-character qubit label.
pub fn qubit_index(label: &str) -> Result<usize, String> {
    match label {
        "00" => Ok(0),
        "01" => Ok(1),
        "10" => Ok(2),
        "11" => Ok(3),
        _ => Err(format!("qubit label must be one of 00, 01, 10, 11, got {label:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "subcycle"

[system]
g_over_omega = 0.05
n_max = 12

[pulse]
omega_tau_d = 3.141592653589793
area = 0.0531
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        let p = cfg.pulse_spec().unwrap().unwrap();
        assert_eq!(p.window, 5.0);
        assert!(p.carrier);
        assert_eq!(cfg.subcycle_section().order, 1);
        assert_eq!(cfg.integrator_config().unwrap(), IntegratorConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_names_line() {
        let err = ScenarioConfig::parse(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") && msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn invalid_field_is_named() {
        let err = ScenarioConfig::parse(&MINIMAL.replace("n_max = 12", "n_max = 0")).unwrap_err();
        assert!(err.to_string().contains("system"), "{err}");
        let err = ScenarioConfig::parse(&format!("{MINIMAL}[subcycle]\norder = 4\n")).unwrap_err();
        assert!(err.to_string().contains("subcycle.order"), "{err}");
    }

    #[test]
    fn si_conversion_matches_hand_values() {
        let si = SiSection { wavelength_nm: 928.0, g_over_2pi_ghz: 16.0, tau_d_ps: 5.5 };
        // ω = 2πc/λ ≈ 2.0298e15 rad/s
        assert!((si.omega() / 2.029_8e15 - 1.0).abs() < 1e-4);
        // gτ_d = 2π·16 GHz·5.5 ps ≈ 0.553
        assert!((si.g_over_omega() * si.omega_tau_d() - 2.0 * PI * 16e9 * 5.5e-12).abs() < 1e-12);
    }

    #[test]
    fn si_and_direct_values_conflict() {
        let text = MINIMAL.replace("[pulse]", "[si]\nwavelength_nm = 928.0\ng_over_2pi_ghz = 16.0\ntau_d_ps = 5.5\n\n[pulse]");
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("[si]"), "{err}");
    }

    #[test]
    fn target_displacement_sets_area() {
        let text = MINIMAL.replace("area = 0.0531", "target_z0 = [0.0, -0.05]");
        let p = ScenarioConfig::parse(&text).unwrap().pulse_spec().unwrap().unwrap();
        let (area, phi) = solve_displacement_target(C64::new(0.0, -0.05), &Envelope::hg(0)).unwrap();
        assert_eq!((p.area, p.phi), (area, phi));
    }

    #[test]
    fn qubit_labels() {
        assert_eq!(qubit_index("10"), Ok(2));
        assert!(qubit_index("2").is_err());
    }
}

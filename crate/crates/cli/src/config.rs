//! JSON run configuration and its resolution into engine inputs.
//!
//! A config document has exactly one `model` section (cold_atom or circuit),
//! a `schedule`, optional `noise`, and an `outputs` list. Circuit frequencies
//! are given in GHz/MHz as in the hardware table and converted to angular
//! units internally. κ may be the string "inf" for the fermionic limit.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use dtc_core::drive::{linear_gradient_scale, make_schedule, PulseKind, PulseSchedule, PulseSpec};
use dtc_core::evolve::{NoiseChannel, NoiseSpec};
use dtc_core::models::{
    self, build_xxz, circuit_couplings, cold_atom_couplings, CircuitParams, ColdAtomParams,
    CouplingSet, Frame,
};
use dtc_core::spin::{antiferromagnetic_state, HilbertSpace, SpinOperator, StateVector};

use crate::CliError;

/// f64 that serializes infinity as the string "inf".
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FlexF64(pub f64);

impl Serialize for FlexF64 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() && self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for FlexF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = FlexF64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or the string \"inf\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<FlexF64, E> {
                Ok(FlexF64(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<FlexF64, E> {
                Ok(FlexF64(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<FlexF64, E> {
                Ok(FlexF64(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<FlexF64, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinity" => Ok(FlexF64(f64::INFINITY)),
                    other => other
                        .parse::<f64>()
                        .map(FlexF64)
                        .map_err(|_| E::custom(format!("cannot parse \"{v}\" as a number"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    ColdAtom {
        #[serde(default = "default_n_sites")]
        n_sites: usize,
        g: f64,
        kappa: FlexF64,
        /// Trap exchange coefficients; defaults to the five-site harmonic
        /// trap values when n_sites == 5.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<Vec<f64>>,
    },
    Circuit {
        #[serde(default = "default_n_sites")]
        n_sites: usize,
        /// Qubit frequencies Ωᵢ/2π in GHz; half-length vectors are
        /// mirror-completed.
        omega_ghz: Vec<f64>,
        /// Ising couplings Jᵢᶻ/2π in MHz; half-length vectors are
        /// mirror-completed.
        jz_mhz: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_unc_ghz: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jz_unc_mhz: Option<Vec<f64>>,
    },
}

fn default_n_sites() -> usize {
    5
}

impl ModelConfig {
    pub fn n_sites(&self) -> usize {
        match self {
            ModelConfig::ColdAtom { n_sites, .. } | ModelConfig::Circuit { n_sites, .. } => {
                *n_sites
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelConfig::ColdAtom { .. } => "cold_atom",
            ModelConfig::Circuit { .. } => "circuit",
        }
    }
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PulseKindConfig {
    Instantaneous,
    FiniteRwa,
    FiniteLab,
}

impl From<PulseKindConfig> for PulseKind {
    fn from(k: PulseKindConfig) -> Self {
        match k {
            PulseKindConfig::Instantaneous => PulseKind::Instantaneous,
            PulseKindConfig::FiniteRwa => PulseKind::FiniteRwa,
            PulseKindConfig::FiniteLab => PulseKind::FiniteLab,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Driving period T_D in the model's time unit.
    pub t_d: f64,
    pub n_periods: usize,
    #[serde(default = "default_pulse_kind")]
    pub pulse_kind: PulseKindConfig,
    /// Pulse imperfection ε; the rotation angle is θ = π − ε.
    #[serde(default)]
    pub epsilon: f64,
    /// Linear per-site driving inhomogeneity gradient δ.
    #[serde(default)]
    pub delta: f64,
    /// Drive amplitude A in angular units, for finite pulses. Defaults to
    /// 100× the largest |coupling| of the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: usize,
}

fn default_pulse_kind() -> PulseKindConfig {
    PulseKindConfig::Instantaneous
}

fn default_sample_rate() -> usize {
    32
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChannelConfig {
    Relaxation,
    Dephasing,
}

impl From<NoiseChannelConfig> for NoiseChannel {
    fn from(c: NoiseChannelConfig) -> Self {
        match c {
            NoiseChannelConfig::Relaxation => NoiseChannel::Relaxation,
            NoiseChannelConfig::Dephasing => NoiseChannel::Dephasing,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub zeta: f64,
    #[serde(default = "default_channels")]
    pub channels: Vec<NoiseChannelConfig>,
    #[serde(default = "default_true")]
    pub per_site: bool,
}

fn default_channels() -> Vec<NoiseChannelConfig> {
    vec![NoiseChannelConfig::Relaxation]
}

fn default_true() -> bool {
    true
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            zeta: 0.0,
            channels: default_channels(),
            per_site: true,
        }
    }
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Magnetization,
    Overlap,
    Spectrum,
    Peaks,
}

fn default_outputs() -> Vec<OutputKind> {
    vec![
        OutputKind::Magnetization,
        OutputKind::Overlap,
        OutputKind::Spectrum,
        OutputKind::Peaks,
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    /// Reserved: the dynamics are deterministic, but the field is carried
    /// through to the metadata.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default = "default_label")]
    pub label: String,
}

fn default_label() -> String {
    "run".into()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!(
                "{e} (line {}, column {})",
                e.line(),
                e.column()
            ))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.model.n_sites();
        if !(2..=dtc_core::spin::MAX_SITES).contains(&n) {
            return Err(CliError::Config(format!(
                "model.n_sites must be in 2..={}, got {n}",
                dtc_core::spin::MAX_SITES
            )));
        }
        match &self.model {
            ModelConfig::ColdAtom {
                g, kappa, alpha, ..
            } => {
                if g.is_nan() || *g <= 0.0 || g.is_infinite() {
                    return Err(CliError::Config(format!(
                        "model.g must be positive and finite, got {g}"
                    )));
                }
                if kappa.0.is_nan() || kappa.0 <= 0.0 {
                    return Err(CliError::Config(format!(
                        "model.kappa must be positive (or \"inf\"), got {}",
                        kappa.0
                    )));
                }
                if let Some(a) = alpha {
                    if a.len() != n - 1 {
                        return Err(CliError::Config(format!(
                            "model.alpha has length {}, expected {}",
                            a.len(),
                            n - 1
                        )));
                    }
                } else if n != 5 {
                    return Err(CliError::Config(
                        "model.alpha is required unless n_sites == 5".into(),
                    ));
                }
            }
            ModelConfig::Circuit {
                omega_ghz, jz_mhz, ..
            } => {
                models::mirror_complete(omega_ghz, n)
                    .map_err(|e| CliError::Config(format!("model.omega_ghz: {e}")))?;
                models::mirror_complete(jz_mhz, n - 1)
                    .map_err(|e| CliError::Config(format!("model.jz_mhz: {e}")))?;
            }
        }
        if self.schedule.t_d.is_nan() || self.schedule.t_d <= 0.0 || self.schedule.t_d.is_infinite() {
            return Err(CliError::Config(format!(
                "schedule.t_d must be positive, got {}",
                self.schedule.t_d
            )));
        }
        if self.schedule.n_periods == 0 {
            return Err(CliError::Config("schedule.n_periods must be >= 1".into()));
        }
        if !(0.0..PI).contains(&self.schedule.epsilon) {
            return Err(CliError::Config(format!(
                "schedule.epsilon must lie in [0, pi), got {}",
                self.schedule.epsilon
            )));
        }
        if !self.schedule.delta.is_finite() {
            return Err(CliError::Config("schedule.delta must be finite".into()));
        }
        if self.schedule.sample_rate == 0 {
            return Err(CliError::Config(
                "schedule.sample_rate must be >= 1".into(),
            ));
        }
        if let Some(a) = self.schedule.amplitude {
            if a.is_nan() || a <= 0.0 || a.is_infinite() {
                return Err(CliError::Config(format!(
                    "schedule.amplitude must be positive, got {a}"
                )));
            }
        }
        if self.wants(OutputKind::Spectrum) && self.schedule.n_periods < 8 {
            return Err(CliError::Config(
                "schedule.n_periods must be >= 8 when a spectrum is requested".into(),
            ));
        }
        if self.noise.zeta.is_nan() || self.noise.zeta < 0.0 || self.noise.zeta.is_infinite() {
            return Err(CliError::Config(format!(
                "noise.zeta must be finite and non-negative, got {}",
                self.noise.zeta
            )));
        }
        if self.outputs.is_empty() {
            return Err(CliError::Config("outputs must not be empty".into()));
        }
        if self.schedule.pulse_kind == PulseKindConfig::FiniteLab
            && matches!(self.model, ModelConfig::ColdAtom { .. })
        {
            return Err(CliError::Config(
                "finite_lab pulses need qubit carrier frequencies; use the circuit model".into(),
            ));
        }
        Ok(())
    }

    /// Materialize every defaulted quantity so the metadata records the full
    /// parameterization that actually ran.
    pub fn resolved(&self) -> Result<RunConfig, CliError> {
        let mut out = self.clone();
        let n = out.model.n_sites();
        match &mut out.model {
            ModelConfig::ColdAtom { alpha, .. } => {
                if alpha.is_none() {
                    alpha.replace(models::ALPHA_N5.to_vec());
                }
            }
            ModelConfig::Circuit {
                omega_ghz, jz_mhz, ..
            } => {
                *omega_ghz = models::mirror_complete(omega_ghz, n)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                *jz_mhz = models::mirror_complete(jz_mhz, n - 1)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        if out.schedule.pulse_kind != PulseKindConfig::Instantaneous
            && out.schedule.amplitude.is_none()
        {
            out.schedule.amplitude = Some(self.default_amplitude()?);
        }
        out.outputs.sort();
        out.outputs.dedup();
        Ok(out)
    }

    /// Default finite-pulse amplitude: 100× the largest coupling magnitude,
    /// falling back to 100× the largest tabulated Ising coupling when the
    /// chain is non-interacting (so ideal and interacting runs share pulses).
    fn default_amplitude(&self) -> Result<f64, CliError> {
        let couplings = self.couplings()?;
        let max_c = couplings.max_bond_coupling();
        let fallback = 100.0 * models::mhz_to_angular(models::TABLE_JZ_MHZ[0].abs());
        Ok(if max_c > 0.0 { 100.0 * max_c } else { fallback })
    }

    pub fn couplings(&self) -> Result<CouplingSet, CliError> {
        let n = self.model.n_sites();
        match &self.model {
            ModelConfig::ColdAtom {
                g, kappa, alpha, ..
            } => {
                let alpha = alpha.clone().unwrap_or_else(|| models::ALPHA_N5.to_vec());
                let params = ColdAtomParams::new(n, *g, kappa.0, alpha)?;
                Ok(cold_atom_couplings(&params)?)
            }
            ModelConfig::Circuit { .. } => {
                let params = self.circuit_params(1.0)?;
                Ok(circuit_couplings(&params, Frame::Rotating)?)
            }
        }
    }

    pub fn circuit_params(&self, amplitude: f64) -> Result<CircuitParams, CliError> {
        let ModelConfig::Circuit {
            n_sites,
            omega_ghz,
            jz_mhz,
            omega_unc_ghz,
            jz_unc_mhz,
        } = &self.model
        else {
            return Err(CliError::Config("not a circuit model".into()));
        };
        let mut params = CircuitParams::from_table_ghz_mhz(
            *n_sites,
            omega_ghz,
            jz_mhz,
            amplitude,
            self.schedule.epsilon,
            self.noise.zeta,
        )?;
        params.omega_unc = omega_unc_ghz.clone();
        params.jz_unc = jz_unc_mhz.clone();
        Ok(params)
    }

    /// Warnings about parameter regimes (recorded in the metadata).
    pub fn warnings(&self) -> Vec<String> {
        match &self.model {
            ModelConfig::ColdAtom {
                n_sites,
                g,
                kappa,
                alpha,
            } => ColdAtomParams::new(
                *n_sites,
                *g,
                kappa.0,
                alpha.clone().unwrap_or_else(|| models::ALPHA_N5.to_vec()),
            )
            .map(|p| p.validity_warnings())
            .unwrap_or_default(),
            ModelConfig::Circuit { .. } => Vec::new(),
        }
    }
}

/// Engine-ready inputs assembled from a validated config.
pub struct ResolvedRun {
    pub config: RunConfig,
    pub space: HilbertSpace,
    pub hamiltonian: SpinOperator,
    pub initial_state: StateVector,
    pub schedule: PulseSchedule,
    pub noise: NoiseSpec,
    pub warnings: Vec<String>,
}

impl ResolvedRun {
    pub fn f_drive(&self) -> f64 {
        1.0 / self.schedule.period
    }
}

pub fn resolve(config: &RunConfig) -> Result<ResolvedRun, CliError> {
    config.validate()?;
    let config = config.resolved()?;
    let n = config.model.n_sites();
    let space = HilbertSpace::new(n)?;
    let couplings = config.couplings()?;
    let hamiltonian = build_xxz(&couplings, space)?;
    let initial_state = antiferromagnetic_state(space);

    let theta = PI - config.schedule.epsilon;
    let scale = linear_gradient_scale(n, config.schedule.delta);
    let kind: PulseKind = config.schedule.pulse_kind.into();
    let (amplitude, carrier) = match kind {
        PulseKind::Instantaneous => (None, None),
        PulseKind::FiniteRwa => (config.schedule.amplitude, None),
        PulseKind::FiniteLab => {
            let params = config.circuit_params(1.0)?;
            (config.schedule.amplitude, Some(params.omega_q))
        }
    };
    let pulse = PulseSpec::new(theta, kind, amplitude, scale, carrier)?;
    let schedule = make_schedule(
        config.schedule.t_d,
        config.schedule.n_periods,
        pulse,
        config.schedule.sample_rate,
    )?;
    let noise = NoiseSpec::new(
        config.noise.zeta,
        config.noise.channels.iter().map(|c| (*c).into()).collect(),
        config.noise.per_site,
    )?;
    let warnings = config.warnings();
    Ok(ResolvedRun {
        config,
        space,
        hamiltonian,
        initial_state,
        schedule,
        noise,
        warnings,
    })
}

/// Apply a `--set path.to.field=value` override onto the config JSON.
pub fn apply_override(doc: &mut serde_json::Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!("--set expects key=value, got \"{assignment}\""))
    })?;
    let value: serde_json::Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(_) => serde_json::Value::String(raw.to_string()),
    };
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("invalid --set path \"{path}\"")));
    }
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_object_mut()
            .ok_or_else(|| {
                CliError::Config(format!("--set path \"{path}\" crosses a non-object"))
            })?
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| {
        CliError::Config(format!("--set path \"{path}\" crosses a non-object"))
    })?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

//! Named run configurations covering the standard scenarios: the three
//! trapped-gas runs (perfect pulses, imperfect fermionic, imperfect bosonic)
//! and the circuit grid over {noninteracting, interacting} ×
//! {ideal, inhomogeneous} × {lossless, noisy}.

use std::f64::consts::PI;

use crate::config::{
    FlexF64, ModelConfig, NoiseConfig, OutputKind, PulseKindConfig, RunConfig, ScheduleConfig,
};
use crate::CliError;
use dtc_core::models::{TABLE_JZ_MHZ, TABLE_JZ_UNC_MHZ, TABLE_OMEGA_GHZ, TABLE_OMEGA_UNC_GHZ};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub figure: &'static str,
}

/// Imperfection used by the "imperfect" presets.
pub const EPSILON_IMPERFECT: f64 = 0.1 * PI;
/// Inhomogeneity gradient used by the "inhomogeneous" presets.
pub const DELTA_INHOMOGENEOUS: f64 = 0.1;
/// Noise rate of the "noisy" presets (inverse time units of the model).
pub const ZETA_NOISY: f64 = 0.05;

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2-perfect",
        description: "trapped gas, fermionic limit, perfect pi pulses",
        figure: "Fig. 2 a-c",
    },
    Preset {
        name: "fig2-fermion-imperfect",
        description: "trapped gas, fermionic limit, epsilon = 0.1 pi",
        figure: "Fig. 2 d-f",
    },
    Preset {
        name: "fig2-boson-imperfect",
        description: "trapped gas, bosonic kappa = 0.1, epsilon = 0.1 pi",
        figure: "Fig. 2 g-i",
    },
    Preset {
        name: "fig4-noninteracting-ideal-lossless",
        description: "circuit, J = 0, homogeneous finite pulses, no noise",
        figure: "Fig. 4 a,c",
    },
    Preset {
        name: "fig4-noninteracting-ideal-noisy",
        description: "circuit, J = 0, homogeneous finite pulses, relaxation 0.05",
        figure: "Fig. 4 a,c",
    },
    Preset {
        name: "fig4-noninteracting-inhomogeneous-lossless",
        description: "circuit, J = 0, inhomogeneous pulses (delta = 0.1), no noise",
        figure: "Fig. 4 b,c",
    },
    Preset {
        name: "fig4-noninteracting-inhomogeneous-noisy",
        description: "circuit, J = 0, inhomogeneous pulses, relaxation 0.05",
        figure: "Fig. 4 b,c",
    },
    Preset {
        name: "fig4-interacting-ideal-lossless",
        description: "circuit, tabulated J, homogeneous finite pulses, no noise",
        figure: "Fig. 4 d,f",
    },
    Preset {
        name: "fig4-interacting-ideal-noisy",
        description: "circuit, tabulated J, homogeneous finite pulses, relaxation 0.05",
        figure: "Fig. 4 d,f",
    },
    Preset {
        name: "fig4-interacting-inhomogeneous-lossless",
        description: "circuit, tabulated J, inhomogeneous pulses (delta = 0.1), no noise",
        figure: "Fig. 4 e,f",
    },
    Preset {
        name: "fig4-interacting-inhomogeneous-noisy",
        description: "circuit, tabulated J, inhomogeneous pulses, relaxation 0.05",
        figure: "Fig. 4 e,f",
    },
];

fn cold_atom(label: &str, kappa: f64, epsilon: f64) -> RunConfig {
    RunConfig {
        model: ModelConfig::ColdAtom {
            n_sites: 5,
            g: 10.0,
            kappa: FlexF64(kappa),
            alpha: None,
        },
        schedule: ScheduleConfig {
            t_d: 1.0,
            n_periods: 64,
            pulse_kind: PulseKindConfig::Instantaneous,
            epsilon,
            delta: 0.0,
            amplitude: None,
            sample_rate: 32,
        },
        noise: NoiseConfig::default(),
        outputs: all_outputs(),
        seed: 0,
        out_dir: None,
        label: label.into(),
    }
}

fn circuit(label: &str, interacting: bool, delta: f64, zeta: f64) -> RunConfig {
    let jz_mhz = if interacting {
        TABLE_JZ_MHZ.to_vec()
    } else {
        vec![0.0, 0.0]
    };
    RunConfig {
        model: ModelConfig::Circuit {
            n_sites: 5,
            omega_ghz: TABLE_OMEGA_GHZ.to_vec(),
            jz_mhz,
            omega_unc_ghz: Some(TABLE_OMEGA_UNC_GHZ.to_vec()),
            jz_unc_mhz: if interacting {
                Some(TABLE_JZ_UNC_MHZ.to_vec())
            } else {
                None
            },
        },
        schedule: ScheduleConfig {
            t_d: 10.0,
            n_periods: 64,
            pulse_kind: PulseKindConfig::FiniteRwa,
            epsilon: EPSILON_IMPERFECT,
            delta,
            amplitude: None,
            sample_rate: 32,
        },
        noise: NoiseConfig {
            zeta,
            ..NoiseConfig::default()
        },
        outputs: all_outputs(),
        seed: 0,
        out_dir: None,
        label: label.into(),
    }
}

fn all_outputs() -> Vec<OutputKind> {
    vec![
        OutputKind::Magnetization,
        OutputKind::Overlap,
        OutputKind::Spectrum,
        OutputKind::Peaks,
    ]
}

pub fn preset_config(name: &str) -> Result<RunConfig, CliError> {
    let config = match name {
        "fig2-perfect" => cold_atom(name, f64::INFINITY, 0.0),
        "fig2-fermion-imperfect" => cold_atom(name, f64::INFINITY, EPSILON_IMPERFECT),
        "fig2-boson-imperfect" => cold_atom(name, 0.1, EPSILON_IMPERFECT),
        "fig4-noninteracting-ideal-lossless" => circuit(name, false, 0.0, 0.0),
        "fig4-noninteracting-ideal-noisy" => circuit(name, false, 0.0, ZETA_NOISY),
        "fig4-noninteracting-inhomogeneous-lossless" => {
            circuit(name, false, DELTA_INHOMOGENEOUS, 0.0)
        }
        "fig4-noninteracting-inhomogeneous-noisy" => {
            circuit(name, false, DELTA_INHOMOGENEOUS, ZETA_NOISY)
        }
        "fig4-interacting-ideal-lossless" => circuit(name, true, 0.0, 0.0),
        "fig4-interacting-ideal-noisy" => circuit(name, true, 0.0, ZETA_NOISY),
        "fig4-interacting-inhomogeneous-lossless" => {
            circuit(name, true, DELTA_INHOMOGENEOUS, 0.0)
        }
        "fig4-interacting-inhomogeneous-noisy" => {
            circuit(name, true, DELTA_INHOMOGENEOUS, ZETA_NOISY)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown preset \"{other}\"; see `dtc list-presets`"
            )))
        }
    };
    Ok(config)
}

pub fn render_table() -> String {
    let mut out = String::new();
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    for p in PRESETS {
        out.push_str(&format!(
            "{:width$}  {:10}  {}\n",
            p.name,
            p.figure,
            p.description,
            width = width
        ));
    }
    out
}

//! Parameter sweeps: a base run plus up to two axes, reduced to scalar
//! metrics per grid point. Points run in parallel; rows are emitted in
//! row-major order over the axes as listed.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{apply_override, FlexF64, ModelConfig, RunConfig};
use crate::output::{self, fmt_f64};
use crate::runner::{simulate, RunProducts};
use crate::CliError;

pub const MAX_GRID_POINTS: usize = 10_000;

#[derive(Copy, Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxisParam {
    G,
    Kappa,
    Epsilon,
    Zeta,
    Delta,
}

impl SweepAxisParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxisParam::G => "g",
            SweepAxisParam::Kappa => "kappa",
            SweepAxisParam::Epsilon => "epsilon",
            SweepAxisParam::Zeta => "zeta",
            SweepAxisParam::Delta => "delta",
        }
    }
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepMetric {
    SubharmonicWeight,
    PeakFrequency,
    PeakHeight,
    SplitDetected,
    SplitSeparation,
    FinalAbsM,
}

impl SweepMetric {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMetric::SubharmonicWeight => "subharmonic_weight",
            SweepMetric::PeakFrequency => "peak_frequency",
            SweepMetric::PeakHeight => "peak_height",
            SweepMetric::SplitDetected => "split_detected",
            SweepMetric::SplitSeparation => "split_separation",
            SweepMetric::FinalAbsM => "final_abs_m",
        }
    }

    fn evaluate(&self, products: &RunProducts) -> f64 {
        let peaks = products.peaks.as_ref();
        match self {
            SweepMetric::SubharmonicWeight => {
                peaks.map(|p| p.subharmonic_weight).unwrap_or(f64::NAN)
            }
            SweepMetric::PeakFrequency => peaks.map(|p| p.peak_frequency).unwrap_or(f64::NAN),
            SweepMetric::PeakHeight => peaks.map(|p| p.peak_height).unwrap_or(f64::NAN),
            SweepMetric::SplitDetected => peaks
                .map(|p| if p.split_detected { 1.0 } else { 0.0 })
                .unwrap_or(f64::NAN),
            SweepMetric::SplitSeparation => peaks
                .and_then(|p| p.split_separation)
                .unwrap_or(f64::NAN),
            SweepMetric::FinalAbsM => products
                .strobe_magnetization
                .last()
                .map(|m| m.abs())
                .unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepAxisParam,
    pub values: Vec<FlexF64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub axes: Vec<SweepAxis>,
    pub reduce: Vec<SweepMetric>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: SweepConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!(
                "{e} (line {}, column {})",
                e.line(),
                e.column()
            ))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.base.validate()?;
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(CliError::Config(format!(
                "sweeps take 1 or 2 axes, got {}",
                self.axes.len()
            )));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(CliError::Config(format!(
                    "axis \"{}\" has no values",
                    axis.param.name()
                )));
            }
            for v in &axis.values {
                if v.0.is_nan() {
                    return Err(CliError::Config(format!(
                        "axis \"{}\" contains NaN",
                        axis.param.name()
                    )));
                }
                if v.0.is_infinite() && axis.param != SweepAxisParam::Kappa {
                    return Err(CliError::Config(format!(
                        "axis \"{}\" values must be finite",
                        axis.param.name()
                    )));
                }
            }
            let cold_only = matches!(axis.param, SweepAxisParam::G | SweepAxisParam::Kappa);
            if cold_only && !matches!(self.base.model, ModelConfig::ColdAtom { .. }) {
                return Err(CliError::Config(format!(
                    "axis \"{}\" applies only to the cold_atom model",
                    axis.param.name()
                )));
            }
        }
        let points: usize = self.axes.iter().map(|a| a.values.len()).product();
        if points > MAX_GRID_POINTS {
            return Err(CliError::Config(format!(
                "grid has {points} points, limit is {MAX_GRID_POINTS}"
            )));
        }
        if self.reduce.is_empty() {
            return Err(CliError::Config("reduce must list at least one metric".into()));
        }
        Ok(())
    }

    fn point_config(&self, coords: &[f64]) -> Result<RunConfig, CliError> {
        let mut doc = serde_json::to_value(&self.base).expect("config serializes");
        for (axis, value) in self.axes.iter().zip(coords) {
            let path = match axis.param {
                SweepAxisParam::G => "model.g",
                SweepAxisParam::Kappa => "model.kappa",
                SweepAxisParam::Epsilon => "schedule.epsilon",
                SweepAxisParam::Zeta => "noise.zeta",
                SweepAxisParam::Delta => "schedule.delta",
            };
            let rendered = if value.is_infinite() {
                "\"inf\"".to_string()
            } else {
                // full precision so the override is exact
                format!("{value:?}")
            };
            apply_override(&mut doc, &format!("{path}={rendered}"))?;
        }
        let config: RunConfig = serde_json::from_value(doc)
            .map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// All grid coordinates in row-major order over the axes as listed.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        match self.axes.len() {
            1 => self.axes[0].values.iter().map(|v| vec![v.0]).collect(),
            2 => {
                let mut out = Vec::new();
                for a in &self.axes[0].values {
                    for b in &self.axes[1].values {
                        out.push(vec![a.0, b.0]);
                    }
                }
                out
            }
            _ => unreachable!("validated"),
        }
    }
}

pub struct SweepRow {
    pub coords: Vec<f64>,
    pub metrics: Vec<f64>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    config.validate()?;
    let grid = config.grid();
    let results: Vec<Result<SweepRow, CliError>> = grid
        .par_iter()
        .map(|coords| {
            let point = config.point_config(coords)?;
            let products = simulate(&point)?;
            let metrics = config
                .reduce
                .iter()
                .map(|m| m.evaluate(&products))
                .collect();
            Ok(SweepRow {
                coords: coords.clone(),
                metrics,
            })
        })
        .collect();
    results.into_iter().collect()
}

pub fn write_grid_csv(
    path: &Path,
    config: &SweepConfig,
    rows: &[SweepRow],
) -> Result<(), CliError> {
    let mut header: Vec<String> = config
        .axes
        .iter()
        .map(|a| a.param.name().to_string())
        .collect();
    header.extend(config.reduce.iter().map(|m| m.name().to_string()));
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let mut fields: Vec<String> = row.coords.iter().map(|v| fmt_f64(*v)).collect();
        fields.extend(row.metrics.iter().map(|v| fmt_f64(*v)));
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    output::write_file(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset_config;

    fn kappa_sweep_json() -> String {
        let base = preset_config("fig2-boson-imperfect").unwrap();
        serde_json::json!({
            "base": serde_json::to_value(&base).unwrap(),
            "axes": [{"param": "kappa", "values": [0.1, 1.0, "inf"]}],
            "reduce": ["subharmonic_weight", "split_detected"]
        })
        .to_string()
    }

    #[test]
    fn sweep_config_parses_and_grids() {
        let s = SweepConfig::from_json(&kappa_sweep_json()).unwrap();
        let grid = s.grid();
        assert_eq!(grid.len(), 3);
        assert!(grid[2][0].is_infinite());
    }

    #[test]
    fn oversized_grid_rejected() {
        let base = preset_config("fig2-perfect").unwrap();
        let values: Vec<f64> = (0..101).map(|k| 1.0 + k as f64).collect();
        let doc = serde_json::json!({
            "base": serde_json::to_value(&base).unwrap(),
            "axes": [
                {"param": "g", "values": values},
                {"param": "epsilon", "values": (0..100).map(|k| k as f64 * 0.001).collect::<Vec<_>>()}
            ],
            "reduce": ["subharmonic_weight"]
        });
        assert!(SweepConfig::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn cold_atom_axes_rejected_for_circuit() {
        let base = preset_config("fig4-interacting-ideal-lossless").unwrap();
        let doc = serde_json::json!({
            "base": serde_json::to_value(&base).unwrap(),
            "axes": [{"param": "kappa", "values": [1.0]}],
            "reduce": ["subharmonic_weight"]
        });
        assert!(SweepConfig::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn unknown_axis_name_rejected() {
        let base = preset_config("fig2-perfect").unwrap();
        let doc = serde_json::json!({
            "base": serde_json::to_value(&base).unwrap(),
            "axes": [{"param": "volume", "values": [1.0]}],
            "reduce": ["subharmonic_weight"]
        });
        assert!(SweepConfig::from_json(&doc.to_string()).is_err());
    }
}

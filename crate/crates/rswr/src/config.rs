//! Run configuration: JSON schema, validation, boundary-source evaluation and
//! the built-in experiment presets.
//!
//! Unknown JSON keys are rejected so typos fail loudly. Validation errors
//! name the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RswrError};
use crate::pde::{BoundarySide, Grid1D};

/// Which physical boundary a source drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePlacement {
    LeftBoundary,
    RightBoundary,
}

impl SourcePlacement {
    pub fn side(self) -> BoundarySide {
        match self {
            SourcePlacement::LeftBoundary => BoundarySide::Left,
            SourcePlacement::RightBoundary => BoundarySide::Right,
        }
    }
}

/// Pulse shape of a boundary source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceShape {
    /// `amplitude * exp(-((t - center_time) / width)^2 / 2)`.
    GaussianPulse,
    /// Hann pulse supported on `[center_time - width, center_time + width]`.
    RaisedCosine,
    Zero,
}

/// One boundary drive term. Terms with the same placement sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub placement: SourcePlacement,
    pub shape: SourceShape,
    pub amplitude: f64,
    pub center_time: f64,
    pub width: f64,
}

impl SourceSpec {
    pub fn value(&self, t: f64) -> f64 {
        match self.shape {
            SourceShape::GaussianPulse => {
                let z = (t - self.center_time) / self.width;
                self.amplitude * (-0.5 * z * z).exp()
            }
            SourceShape::RaisedCosine => {
                let z = t - self.center_time;
                if z.abs() >= self.width {
                    0.0
                } else {
                    self.amplitude * 0.5 * (1.0 + (std::f64::consts::PI * z / self.width).cos())
                }
            }
            SourceShape::Zero => 0.0,
        }
    }
}

/// Execution mode of the worker protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Workers stepped round-robin on one thread; the reference ordering.
    Single,
    /// One OS thread per worker, message passing over channels. Produces
    /// bitwise-identical results to `Single`.
    Parallel,
}

impl Default for RunMode {
    fn default() -> Self {
        RunMode::Single
    }
}

/// Output locations and sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Directory for solution/error CSVs and the run report.
    pub dir: Option<String>,
    /// Write every `solution_stride`-th node to the solution CSV.
    pub solution_stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: None, solution_stride: 4 }
    }
}

fn default_beta() -> f64 {
    0.1
}

fn default_epsilon_rel() -> f64 {
    1e-10
}

fn default_safety_steps() -> usize {
    1
}

/// Full run configuration. `initial_predict_steps` defaults to
/// `overlap_cells` (one overlap transit) when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RswrConfig {
    pub wave_speed: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_nodes: usize,
    pub courant: f64,
    pub n_subdomains: usize,
    pub overlap_cells: usize,
    #[serde(default = "default_epsilon_rel")]
    pub epsilon_rel: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub initial_predict_steps: Option<usize>,
    #[serde(default = "default_safety_steps")]
    pub safety_steps: usize,
    pub t_end: f64,
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl RswrConfig {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_nodes - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.courant * self.dx() / self.wave_speed
    }

    /// Number of whole time steps covering `[0, t_end]`; `t_end` is realized
    /// as the nearest step.
    pub fn n_total_steps(&self) -> u64 {
        (self.t_end / self.dt()).round() as u64
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n_nodes)
    }

    pub fn initial_predict(&self) -> usize {
        self.initial_predict_steps.unwrap_or(self.overlap_cells)
    }

    /// Sum of the sources on one physical boundary at absolute time `t`.
    pub fn boundary_value(&self, side: BoundarySide, t: f64) -> f64 {
        self.sources
            .iter()
            .filter(|s| s.placement.side() == side)
            .map(|s| s.value(t))
            .sum()
    }

    /// Boundary series for window steps `start_step .. start_step + n_steps`,
    /// evaluated at `t = global_step * dt` so every worker and mode computes
    /// identical values.
    pub fn boundary_series(&self, side: BoundarySide, start_step: u64, n_steps: usize) -> Vec<f64> {
        let dt = self.dt();
        (0..=n_steps)
            .map(|s| self.boundary_value(side, (start_step + s as u64) as f64 * dt))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let field_err = |field: &str, message: String| -> RswrError {
            RswrError::Schema { field: field.to_string(), message }
        };
        if !(self.wave_speed > 0.0) || !self.wave_speed.is_finite() {
            return Err(field_err("wave_speed", format!("must be positive, got {}", self.wave_speed)));
        }
        if !self.x_min.is_finite() || !self.x_max.is_finite() || !(self.x_max > self.x_min) {
            return Err(field_err(
                "x_min/x_max",
                format!("need x_max > x_min, got [{}, {}]", self.x_min, self.x_max),
            ));
        }
        if self.n_nodes < 3 {
            return Err(field_err("n_nodes", format!("need at least 3 nodes, got {}", self.n_nodes)));
        }
        if !(self.courant > 0.0 && self.courant <= 1.0) {
            return Err(RswrError::Stability(format!(
                "config field `courant` must lie in (0, 1], got {}",
                self.courant
            )));
        }
        if self.n_subdomains == 0 {
            return Err(field_err("n_subdomains", "must be at least 1".into()));
        }
        if self.overlap_cells < 4 || self.overlap_cells % 2 != 0 {
            return Err(field_err(
                "overlap_cells",
                format!("must be even and >= 4, got {}", self.overlap_cells),
            ));
        }
        if !(self.epsilon_rel > 0.0) || !self.epsilon_rel.is_finite() {
            return Err(field_err(
                "epsilon_rel",
                format!("must be positive, got {}", self.epsilon_rel),
            ));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(field_err("beta", format!("must be >= 0, got {}", self.beta)));
        }
        if self.safety_steps == 0 {
            return Err(field_err("safety_steps", "must be at least 1".into()));
        }
        if let Some(p) = self.initial_predict_steps {
            if p == 0 {
                return Err(field_err("initial_predict_steps", "must be at least 1".into()));
            }
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(field_err("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if self.outputs.solution_stride == 0 {
            return Err(field_err("outputs.solution_stride", "must be at least 1".into()));
        }
        for (i, s) in self.sources.iter().enumerate() {
            let field = format!("sources[{i}]");
            if !(s.width > 0.0) || !s.width.is_finite() {
                return Err(field_err(&field, format!("width must be positive, got {}", s.width)));
            }
            if !s.amplitude.is_finite() || !s.center_time.is_finite() {
                return Err(field_err(&field, "amplitude and center_time must be finite".into()));
            }
            let at_zero = s.value(0.0).abs();
            let bound = 1e-14 * s.amplitude.abs();
            if at_zero > bound {
                return Err(field_err(
                    &field,
                    format!(
                        "source is {at_zero:.3e} at t = 0 (limit {bound:.3e}); it must start \
                         silent to be compatible with the zero initial condition"
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Loads and validates a JSON config file.
pub fn load_config(path: &Path) -> Result<RswrConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: RswrConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

/// Built-in experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two subdomains, one Gaussian pulse from the left, two domain transits.
    N2,
    /// Ten subdomains, staggered pulses from both ends, one domain transit.
    N10,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Preset> {
        match name {
            "n2" => Ok(Preset::N2),
            "n10" => Ok(Preset::N10),
            other => Err(RswrError::Config(format!(
                "unknown preset `{other}`; available presets: n2, n10"
            ))),
        }
    }
}

/// Applies a preset on top of `base`: geometry, decomposition, drive and
/// duration come from the preset; tolerances, mode and outputs stay.
pub fn apply_preset(mut base: RswrConfig, preset: Preset) -> RswrConfig {
    let gaussian = |placement: SourcePlacement, center_time: f64| SourceSpec {
        placement,
        shape: SourceShape::GaussianPulse,
        amplitude: 1.0,
        center_time,
        // Sigma 5 at unit wave speed and dx = 1 spans roughly 20 cells.
        width: 5.0,
    };
    match preset {
        Preset::N2 => {
            base.wave_speed = 1.0;
            base.x_min = 0.0;
            base.x_max = 400.0;
            base.n_nodes = 401;
            base.courant = 0.9;
            base.n_subdomains = 2;
            base.overlap_cells = 40;
            base.initial_predict_steps = None;
            base.t_end = 800.0;
            base.sources = vec![gaussian(SourcePlacement::LeftBoundary, 45.0)];
        }
        Preset::N10 => {
            base.wave_speed = 1.0;
            base.x_min = 0.0;
            base.x_max = 2000.0;
            base.n_nodes = 2001;
            base.courant = 0.9;
            base.n_subdomains = 10;
            base.overlap_cells = 40;
            base.initial_predict_steps = None;
            base.t_end = 2000.0;
            base.sources = vec![
                gaussian(SourcePlacement::LeftBoundary, 45.0),
                gaussian(SourcePlacement::LeftBoundary, 405.0),
                gaussian(SourcePlacement::LeftBoundary, 765.0),
                gaussian(SourcePlacement::RightBoundary, 225.0),
                gaussian(SourcePlacement::RightBoundary, 585.0),
                gaussian(SourcePlacement::RightBoundary, 945.0),
            ];
        }
    }
    base
}

/// A neutral base config; presets overwrite the physics fields.
pub fn default_base() -> RswrConfig {
    RswrConfig {
        wave_speed: 1.0,
        x_min: 0.0,
        x_max: 400.0,
        n_nodes: 401,
        courant: 0.9,
        n_subdomains: 2,
        overlap_cells: 40,
        epsilon_rel: default_epsilon_rel(),
        beta: default_beta(),
        initial_predict_steps: None,
        safety_steps: default_safety_steps(),
        t_end: 800.0,
        sources: vec![],
        mode: RunMode::default(),
        outputs: OutputSpec::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "wave_speed": 1.0,
            "x_min": 0.0,
            "x_max": 100.0,
            "n_nodes": 101,
            "courant": 0.9,
            "n_subdomains": 2,
            "overlap_cells": 20,
            "t_end": 90.0
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c: RswrConfig = serde_json::from_str(&minimal_json()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.beta, 0.1);
        assert_eq!(c.epsilon_rel, 1e-10);
        assert_eq!(c.safety_steps, 1);
        assert_eq!(c.initial_predict(), 20);
        assert_eq!(c.mode, RunMode::Single);
        assert_eq!(c.outputs.solution_stride, 4);
        assert_eq!(c.n_total_steps(), 100);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let with_typo = minimal_json().replace("\"t_end\"", "\"t_endd\"");
        assert!(serde_json::from_str::<RswrConfig>(&with_typo).is_err());
    }

    #[test]
    fn unstable_courant_is_a_stability_error() {
        let mut c: RswrConfig = serde_json::from_str(&minimal_json()).unwrap();
        c.courant = 1.5;
        assert!(matches!(c.validate(), Err(RswrError::Stability(_))));
    }

    #[test]
    fn odd_overlap_names_the_field() {
        let mut c: RswrConfig = serde_json::from_str(&minimal_json()).unwrap();
        c.overlap_cells = 3;
        match c.validate() {
            Err(RswrError::Schema { field, .. }) => assert_eq!(field, "overlap_cells"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn loud_source_at_t0_is_rejected() {
        let mut c: RswrConfig = serde_json::from_str(&minimal_json()).unwrap();
        c.sources = vec![SourceSpec {
            placement: SourcePlacement::LeftBoundary,
            shape: SourceShape::GaussianPulse,
            amplitude: 1.0,
            center_time: 5.0,
            width: 5.0,
        }];
        match c.validate() {
            Err(RswrError::Schema { field, .. }) => assert_eq!(field, "sources[0]"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn preset_sources_are_silent_at_t0() {
        for preset in [Preset::N2, Preset::N10] {
            let c = apply_preset(default_base(), preset);
            c.validate().unwrap();
            // Frozen reference: exp(-0.5 * 81) = 2.57675710915498104e-18.
            if preset == Preset::N2 {
                let v = c.boundary_value(BoundarySide::Left, 0.0);
                assert!((v - 2.57675710915498104e-18).abs() < 1e-30);
            }
        }
    }

    #[test]
    fn presets_are_pure() {
        let a = apply_preset(default_base(), Preset::N10);
        let b = apply_preset(default_base(), Preset::N10);
        assert_eq!(a, b);
        assert_eq!(a.n_nodes, 2001);
        assert_eq!(a.n_subdomains, 10);
        assert_eq!(a.overlap_cells, 40);
    }

    #[test]
    fn raised_cosine_is_compact_and_smooth() {
        let s = SourceSpec {
            placement: SourcePlacement::LeftBoundary,
            shape: SourceShape::RaisedCosine,
            amplitude: 2.0,
            center_time: 30.0,
            width: 10.0,
        };
        assert_eq!(s.value(19.999), 0.0);
        assert_eq!(s.value(40.0), 0.0);
        assert_eq!(s.value(30.0), 2.0);
        assert!(s.value(25.0) > 0.0);
    }

    #[test]
    fn boundary_series_sums_sources_per_side() {
        let mut c: RswrConfig = serde_json::from_str(&minimal_json()).unwrap();
        c.sources = vec![
            SourceSpec {
                placement: SourcePlacement::LeftBoundary,
                shape: SourceShape::GaussianPulse,
                amplitude: 1.0,
                center_time: 50.0,
                width: 5.0,
            },
            SourceSpec {
                placement: SourcePlacement::LeftBoundary,
                shape: SourceShape::GaussianPulse,
                amplitude: 0.5,
                center_time: 50.0,
                width: 5.0,
            },
            SourceSpec {
                placement: SourcePlacement::RightBoundary,
                shape: SourceShape::Zero,
                amplitude: 1.0,
                center_time: 50.0,
                width: 5.0,
            },
        ];
        c.validate().unwrap();
        let dt = c.dt();
        let left = c.boundary_series(BoundarySide::Left, 10, 5);
        assert_eq!(left.len(), 6);
        for (s, v) in left.iter().enumerate() {
            let t = (10 + s as u64) as f64 * dt;
            let expect = 1.5 * (-0.5 * ((t - 50.0) / 5.0) * ((t - 50.0) / 5.0)).exp();
            assert!((v - expect).abs() <= 1e-16);
        }
        let right = c.boundary_series(BoundarySide::Right, 10, 5);
        assert!(right.iter().all(|&v| v == 0.0));
    }
}

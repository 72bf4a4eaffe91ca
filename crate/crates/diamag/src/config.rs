use serde::{Deserialize, Serialize};

use crate::checks::PairGrid;
use crate::error::{Error, Result};
use crate::fields::{FieldProfile, Geometry, PotentialProfile};
use crate::iwatsuka::{Grid1D, SpectralSettings};
use crate::radial::RadialGrid;

/// Declarative problem descriptions, loadable from TOML or JSON. Every field
/// has a default, unknown keys are rejected, and `build` methods translate
/// the plain data into core types (reporting bad presets as configuration
/// errors rather than panics).

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    /// One of `zero`, `constant`, `fact4`, `sine`, `gaussian-bump`,
    /// `piecewise`.
    pub preset: String,
    pub b: f64,
    pub lambda: f64,
    pub b0: f64,
    pub sigma: f64,
    /// For `gaussian-bump`: `radial` or `along-x1`.
    pub geometry: String,
    /// For `piecewise`: `[x1, b]` breakpoints, strictly increasing in `x1`.
    pub nodes: Vec<(f64, f64)>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            preset: "constant".into(),
            b: 1.0,
            lambda: 1.0,
            b0: 1.0,
            sigma: 1.0,
            geometry: "radial".into(),
            nodes: Vec::new(),
        }
    }
}

impl FieldConfig {
    pub fn build(&self) -> Result<FieldProfile<f64>> {
        match self.preset.as_str() {
            "zero" => FieldProfile::constant(0.0),
            "constant" => FieldProfile::constant(self.b),
            "fact4" => FieldProfile::fact4(self.b, self.lambda),
            "sine" => Ok(FieldProfile::sine()),
            "gaussian-bump" => {
                let geometry = match self.geometry.as_str() {
                    "radial" => Geometry::Radial,
                    "along-x1" => Geometry::AlongX1,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown bump geometry {other:?} (expected radial or along-x1)"
                        )))
                    }
                };
                FieldProfile::gaussian_bump(self.b0, self.sigma, geometry)
            }
            "piecewise" => FieldProfile::piecewise_linear(self.nodes.clone()),
            other => Err(Error::Config(format!("unknown field preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    /// One of `zero`, `oscillator`, `coulomb`.
    pub preset: String,
    pub omega: f64,
    pub g: f64,
    pub lambda: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            preset: "zero".into(),
            omega: 1.0,
            g: 1.0,
            lambda: 1.0,
        }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialProfile<f64>> {
        match self.preset.as_str() {
            "zero" => Ok(PotentialProfile::zero()),
            "oscillator" => PotentialProfile::oscillator(self.omega),
            "coulomb" => PotentialProfile::coulomb(self.g, self.lambda),
            other => Err(Error::Config(format!(
                "unknown potential preset {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_min: -14.0,
            x_max: 14.0,
            n_points: 2801,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D<f64>> {
        Grid1D::new(self.x_min, self.x_max, self.n_points)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KConfig {
    pub half_width: f64,
    pub n_points: usize,
}

impl Default for KConfig {
    fn default() -> Self {
        KConfig {
            half_width: 10.0,
            n_points: 161,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialConfig {
    pub r_max: f64,
    pub n_points: usize,
    pub m_min: i64,
    pub m_max: i64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig {
            r_max: 12.0,
            n_points: 1500,
            m_min: -60,
            m_max: 60,
        }
    }
}

impl RadialConfig {
    pub fn build(&self) -> Result<RadialGrid<f64>> {
        RadialGrid::new(self.r_max, self.n_points)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_samples: u64,
    pub n_steps: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_samples: 100_000,
            n_steps: 256,
            seed: 12345,
        }
    }
}

/// Query points: the cross product `x1 x y1 x d2 x betas`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QueryConfig {
    pub betas: Vec<f64>,
    pub x1: Vec<f64>,
    pub y1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            betas: vec![1.0],
            x1: vec![0.0],
            y1: vec![0.0],
            d2: vec![0.0],
        }
    }
}

impl QueryConfig {
    pub fn build(&self) -> Result<PairGrid<f64>> {
        PairGrid::new(
            self.x1.clone(),
            self.y1.clone(),
            self.d2.clone(),
            self.betas.clone(),
        )
    }
}

/// Full problem description for the inequality checks. The hat pair
/// defaults to the plain pair, which turns the comparisons into exact
/// equalities.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    pub field: FieldConfig,
    pub potential: PotentialConfig,
    pub field_hat: Option<FieldConfig>,
    pub potential_hat: Option<PotentialConfig>,
    pub grid: GridConfig,
    pub k: KConfig,
    pub radial: RadialConfig,
    pub query: QueryConfig,
    pub mc: McConfig,
    /// `spectral` or `mc` for the kernel comparisons; energy estimates pick
    /// their backend from the subcommand.
    pub backend: String,
}

impl CheckConfig {
    pub fn settings(&self) -> Result<SpectralSettings<f64>> {
        SpectralSettings::new(self.grid.build()?, self.k.half_width, self.k.n_points)
    }

    pub fn build_field_hat(&self) -> Result<FieldProfile<f64>> {
        self.field_hat.as_ref().unwrap_or(&self.field).build()
    }

    pub fn build_potential_hat(&self) -> Result<PotentialProfile<f64>> {
        self.potential_hat
            .as_ref()
            .unwrap_or(&self.potential)
            .build()
    }

    pub fn backend_name(&self) -> Result<&str> {
        match self.backend.as_str() {
            "" | "spectral" => Ok("spectral"),
            "mc" => Ok("mc"),
            other => Err(Error::Config(format!(
                "unknown check backend {other:?} (expected spectral or mc)"
            ))),
        }
    }
}

/// Problem description for direct kernel evaluation and cross-method
/// comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// One of `mehler`, `iwatsuka`, `mc`.
    pub method: String,
    pub field: FieldConfig,
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    pub k: KConfig,
    pub mc: McConfig,
    pub query: QueryConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: "mehler".into(),
            field: FieldConfig::default(),
            potential: PotentialConfig::default(),
            grid: GridConfig::default(),
            k: KConfig::default(),
            mc: McConfig::default(),
            query: QueryConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn settings(&self) -> Result<SpectralSettings<f64>> {
        SpectralSettings::new(self.grid.build()?, self.k.half_width, self.k.n_points)
    }

    /// For the closed-form method: the constant field strength, rejecting
    /// presets the closed form does not cover.
    pub fn mehler_b(&self) -> Result<f64> {
        match self.field.preset.as_str() {
            "zero" => Ok(0.0),
            "constant" => Ok(self.field.b),
            other => Err(Error::Config(format!(
                "the closed-form method needs a constant field, got preset {other:?}"
            ))),
        }
    }

    /// For the closed-form method: the oscillator frequency (zero for a free
    /// potential).
    pub fn mehler_omega(&self) -> Result<f64> {
        match self.potential.preset.as_str() {
            "zero" => Ok(0.0),
            "oscillator" => Ok(self.potential.omega),
            other => Err(Error::Config(format!(
                "the closed-form method covers zero or oscillator potentials, got {other:?}"
            ))),
        }
    }
}

//! Run configuration shared by the CLI and the verification suites.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DiskDomain, GeometryError};
use crate::operators::{GreenOperators, OperatorError};
use crate::quadrature::{QuadratureError, Resolution};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("tolerance {name} must be positive and finite, got {value}")]
    Tolerance { name: &'static str, value: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Per-property error thresholds used by the verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative, kernel vs direct two-center quadrature.
    pub kernel_oracle: f64,
    /// Absolute, boundary kernel vs contour quadrature.
    pub contour: f64,
    /// Relative, `T` on `z̄^l` vs its exact value.
    pub golden: f64,
    /// Relative, closed-form operators vs nested composition.
    pub nested: f64,
    /// Relative, FD `∂̄ T f` vs `f`.
    pub inversion: f64,
    /// Absolute, `T ∂̄f + S f − f`.
    pub interior: f64,
    /// Relative FD residual for first-order mixed equations.
    pub pde_first: f64,
    /// Relative FD residual for second-order mixed equations.
    pub pde_second: f64,
    /// Relative, polydisc tensor rule vs factor-wise products.
    pub polydisc: f64,
    /// Absolute, conjugation routes.
    pub conjugation: f64,
    /// Relative, low-order kernel table vs general kernel.
    pub kernel_table: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel_oracle: 1e-4,
            contour: 1e-10,
            golden: 1e-8,
            nested: 1e-5,
            inversion: 1e-3,
            interior: 1e-8,
            pde_first: 1e-2,
            pde_second: 5e-2,
            polydisc: 1e-3,
            conjugation: 1e-10,
            kernel_table: 1e-12,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 11] {
        [
            ("kernel_oracle", self.kernel_oracle),
            ("contour", self.contour),
            ("golden", self.golden),
            ("nested", self.nested),
            ("inversion", self.inversion),
            ("interior", self.interior),
            ("pde_first", self.pde_first),
            ("pde_second", self.pde_second),
            ("polydisc", self.polydisc),
            ("conjugation", self.conjugation),
            ("kernel_table", self.kernel_table),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in self.entries() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Tolerance { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub radius: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub contour_count: usize,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ops = GreenOperators::default();
        Self {
            radius: 1.0,
            n_radial: ops.resolution.n_radial,
            n_angular: ops.resolution.n_angular,
            contour_count: ops.contour_count,
            tolerances: Tolerances::default(),
            output: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        DiskDomain::new(self.radius)?;
        self.operators()?;
        self.tolerances.validate()
    }

    pub fn resolution(&self) -> Result<Resolution, ConfigError> {
        Ok(Resolution::new(self.n_radial, self.n_angular)?)
    }

    pub fn operators(&self) -> Result<GreenOperators, ConfigError> {
        Ok(GreenOperators::new(self.resolution()?, self.contour_count)?)
    }

    /// Origin-centred disk of the configured radius.
    pub fn domain(&self) -> Result<DiskDomain, ConfigError> {
        Ok(DiskDomain::new(self.radius)?)
    }
}

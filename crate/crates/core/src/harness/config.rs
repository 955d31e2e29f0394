//! Flat key-table experiment configuration.
//!
//! Configs are TOML restricted to top-level keys; matrices are row-major
//! number lists with an explicit dimension. Parse errors surface the line
//! and column from the TOML parser, missing or inconsistent fields name the
//! offending key.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::oseledets::{self, Spectrum};
use crate::systems::{BaseKind, SystemSpec};

/// Raw top-level key table, prior to per-kind validation.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: String,
    // system parameters
    pub dim: Option<usize>,
    pub matrix: Option<Vec<f64>>,
    pub base: Option<BaseKind>,
    pub matrices: Option<Vec<f64>>,
    pub mat_dim: Option<usize>,
    pub diag: Option<Vec<f64>>,
    pub rho: Option<f64>,
    pub nu: Option<f64>,
    pub alphabet: Option<u8>,
    pub rates: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub system_seed: Option<u64>,
    // experiment parameters
    pub eps: Option<f64>,
    pub ell: Option<u32>,
    pub ell_sweep: Option<Vec<u32>>,
    pub horizon: Option<usize>,
    pub sample_count: Option<usize>,
    pub pair_budget: Option<usize>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub seed: Option<u64>,
    pub subspace_index: Option<usize>,
    pub spectrum_horizon: Option<usize>,
    pub split_horizon: Option<usize>,
    pub gap_tol: Option<f64>,
    pub slope_slack: Option<f64>,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub eps: f64,
    pub ell: u32,
    pub ell_sweep: Vec<u32>,
    pub horizon: usize,
    pub sample_count: usize,
    pub pair_budget: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub seed: u64,
    pub subspace_index: usize,
    pub spectrum_horizon: usize,
    /// 0 selects the automatic horizon `n·mingap ≥ 30`.
    pub split_horizon: usize,
    pub gap_tol: f64,
    pub slope_slack: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta_min > 0.0 && self.delta_min < self.delta_max) {
            return Err(format!(
                "need 0 < delta_min < delta_max, got [{}, {}]",
                self.delta_min, self.delta_max
            ));
        }
        if self.delta_max >= 0.5 {
            return Err(format!(
                "delta_max = {} too large: pair offsets must stay local",
                self.delta_max
            ));
        }
        if self.sample_count == 0 {
            return Err("sample_count must be positive".into());
        }
        if self.subspace_index == 0 {
            return Err("subspace_index is 1-based".into());
        }
        if self.ell == 0 || self.ell_sweep.contains(&0) {
            return Err("ell values must be positive integers".into());
        }
        if self.spectrum_horizon < 8 {
            return Err("spectrum_horizon must be at least 8".into());
        }
        Ok(())
    }

    /// Splitting-estimate horizon: explicit value, or `n·mingap ≥ 30`.
    pub fn resolved_split_horizon(&self, spectrum: &Spectrum) -> usize {
        if self.split_horizon > 0 {
            self.split_horizon
        } else {
            let g = spectrum.min_gap();
            oseledets::default_horizon(if g.is_finite() { Some(g) } else { None })
                .min(self.spectrum_horizon)
        }
    }
}

fn require<T: Clone>(field: &Option<T>, key: &str, kind: &str) -> Result<T, String> {
    field
        .clone()
        .ok_or_else(|| format!("system kind '{kind}' requires the '{key}' key"))
}

fn square_matrix(data: &[f64], dim: usize, key: &str) -> Result<DMatrix<f64>, String> {
    if data.len() != dim * dim {
        return Err(format!(
            "'{key}' has {} entries, expected {} for a {dim}x{dim} row-major matrix",
            data.len(),
            dim * dim
        ));
    }
    Ok(DMatrix::from_row_slice(dim, dim, data))
}

impl RawConfig {
    /// Parses a config file body.
    pub fn parse(text: &str) -> Result<RawConfig, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Resolves the raw key table into a validated [`ExperimentConfig`].
    pub fn resolve(&self) -> Result<ExperimentConfig, String> {
        let kind = self.kind.as_str();
        let system = match kind {
            "constant" => {
                let dim = self.dim.unwrap_or(2);
                let matrix = square_matrix(&require(&self.matrix, "matrix", kind)?, dim, "matrix")?;
                SystemSpec::Constant {
                    matrix,
                    base: self.base.unwrap_or(BaseKind::CatMap),
                }
            }
            "cat_map" => SystemSpec::CatMap,
            "doubling" => {
                let dim = self.dim.unwrap_or(2);
                let matrix = square_matrix(&require(&self.matrix, "matrix", kind)?, dim, "matrix")?;
                SystemSpec::Doubling { matrix }
            }
            "shift_iid" => {
                let dim = self.mat_dim.or(self.dim).unwrap_or(2);
                let flat = require(&self.matrices, "matrices", kind)?;
                if flat.is_empty() || flat.len() % (dim * dim) != 0 {
                    return Err(format!(
                        "'matrices' has {} entries, expected a multiple of {}",
                        flat.len(),
                        dim * dim
                    ));
                }
                let matrices = flat
                    .chunks(dim * dim)
                    .map(|c| DMatrix::from_row_slice(dim, dim, c))
                    .collect();
                SystemSpec::ShiftIid {
                    matrices,
                    seed: self.system_seed.unwrap_or(0),
                }
            }
            "shift_holder" => SystemSpec::ShiftHolder {
                diag: DVector::from_vec(require(&self.diag, "diag", kind)?),
                rho: self.rho.unwrap_or(0.05),
                nu: require(&self.nu, "nu", kind)?,
                alphabet: self.alphabet.unwrap_or(2),
                seed: self.system_seed.unwrap_or(0),
            },
            "perturbed_diagonal" => SystemSpec::PerturbedDiagonal {
                diag: DVector::from_vec(require(&self.diag, "diag", kind)?),
                rho: self.rho.unwrap_or(0.01),
                nu: require(&self.nu, "nu", kind)?,
                seed: self.system_seed.unwrap_or(0),
            },
            "linear_flow" => SystemSpec::LinearFlow {
                rates: DVector::from_vec(require(&self.rates, "rates", kind)?),
                tau: self.tau.unwrap_or(1.0),
            },
            other => {
                return Err(format!(
                    "unknown system kind '{other}' (expected constant, cat_map, doubling, \
                     shift_iid, shift_holder, perturbed_diagonal, or linear_flow)"
                ))
            }
        };
        let cfg = ExperimentConfig {
            system,
            eps: self.eps.unwrap_or(0.1),
            ell: self.ell.unwrap_or(8),
            ell_sweep: self
                .ell_sweep
                .clone()
                .unwrap_or_else(|| vec![1, 2, 4, 8, 16]),
            horizon: self.horizon.unwrap_or(50),
            sample_count: self.sample_count.unwrap_or(2000),
            pair_budget: self.pair_budget.unwrap_or(600),
            delta_min: self.delta_min.unwrap_or(1e-5),
            delta_max: self.delta_max.unwrap_or(1e-2),
            seed: self.seed.unwrap_or(0),
            subspace_index: self.subspace_index.unwrap_or(1),
            spectrum_horizon: self.spectrum_horizon.unwrap_or(2000),
            split_horizon: self.split_horizon.unwrap_or(0),
            gap_tol: self.gap_tol.unwrap_or(0.05),
            slope_slack: self.slope_slack.unwrap_or(0.1),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses and resolves a config file body in one step.
pub fn load_config(text: &str) -> Result<ExperimentConfig, String> {
    RawConfig::parse(text)?.resolve()
}

//! Experiment driver: sample point pairs on regular blocks, measure
//! subspace distances between Oseledets data at nearby points, fit the
//! empirical Hölder exponent in log-log coordinates, and compare against the
//! predicted exponents and constants.
//!
//! Everything is deterministic given the config seed: sampling happens on a
//! single seeded stream before any parallel work, and parallel evaluation
//! writes results back by index.

pub mod config;
pub mod report;
pub mod verify;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::{self, BoundsError, TheoremPrediction};
use crate::cocycle::{self, CocycleError, CocycleSystem, Point};
use crate::grassmann::{self, GrassmannError};
use crate::oseledets::{self, OseledetsData, OseledetsError, Spectrum};
use crate::regular_blocks::{self, BlockError, RegularBlockParams};
use crate::systems::{self, SystemError};

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no sampled point passed the block membership test")]
    EmptyBlock,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Oseledets(#[from] OseledetsError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// One evaluated pair of block points.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub pair_id: usize,
    pub x_id: usize,
    pub y_id: usize,
    /// Base distance d(x, y).
    pub d_base: f64,
    /// Distance between the `i`-th Oseledets subspaces at x and y.
    pub dist_subspace: f64,
    /// 1-based subspace index.
    pub i_index: usize,
}

/// Least-squares fit of `log dist` against `log d`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HolderFit {
    pub slope: f64,
    pub intercept_log: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
    pub n_pairs: usize,
    pub distance_window: (f64, f64),
    /// Pairs excluded because the subspace distance vanished (they satisfy
    /// any upper bound trivially and have no logarithm).
    pub zero_pairs: usize,
}

/// Outcome of comparing an empirical fit against a theorem prediction.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TheoremComparison {
    /// νω_i, the predicted Hölder exponent of the subspace map.
    pub predicted_exponent: f64,
    pub predicted_constant: f64,
    pub slope: f64,
    /// `slope ≥ predicted_exponent − slack`.
    pub slope_ok: bool,
    /// Fraction of pairs satisfying `dist ≤ C_pred · d^{νω_i}` pointwise.
    pub pointwise_fraction: f64,
    pub zero_pairs: usize,
    /// Pass iff the slope test holds or every pair satisfied the bound
    /// pointwise (a steeper empirical decay is consistent with an upper
    /// bound).
    pub passed: bool,
    /// Worst pointwise margin as a bound report (log-free, linear scale).
    pub worst_pointwise: bounds::BoundReport,
}

/// Produces a partner point at base distance ~`r` from `x`, exact for torus
/// points and snapped to the nearest power of 1/2 for shift points.
pub fn partner_at_distance(x: &Point, r: f64, rng: &mut ChaCha8Rng) -> Point {
    match x {
        Point::Torus(_) => systems::torus_offset(x, r, rng),
        Point::Shift { word, cursor } => {
            let agree = (-r.log2()).round().max(0.0) as usize;
            let len = word.len();
            let mut symbols: Vec<u8> = (0..len).map(|i| word[(cursor + i) % len]).collect();
            let alphabet = symbols.iter().copied().max().unwrap_or(1).max(1) + 1;
            for s in symbols.iter_mut().skip(agree) {
                *s = rng.gen_range(0..alphabet);
            }
            if agree < len {
                symbols[agree] = (word[(cursor + agree) % len] + 1) % alphabet;
            }
            Point::shift(symbols)
        }
    }
}

/// The `log a` used for theorem predictions: the measured iterate-Hölder
/// rate `log c₁`, raised to clear the domain requirement `log a > χ_k + ε`
/// when necessary (the comparison rate may always be enlarged).
pub fn comparison_log_a(sys: &CocycleSystem, spectrum: &Spectrum, eps: f64) -> f64 {
    let c1 =
        cocycle::holder_iterate_constant(sys.holder_c0(), sys.holder_nu(), sys.lipschitz_l(), 0.0)
            .unwrap_or(sys.lipschitz_l().max(1.0));
    let chi_top = *spectrum.exponents().last().unwrap();
    c1.ln().max(chi_top + eps + 0.05)
}

/// Block construction plus pair sampling. Draws `sample_count` base points,
/// filters them through the regular-block membership test, then pairs each
/// passing point with a partner at log-uniform base distance inside the
/// δ-window, keeping pairs whose partner also passes. Subspace distances are
/// measured between the `i`-th Oseledets spaces of the two points.
pub struct SampledPairs {
    pub pairs: Vec<PairSample>,
    pub samples_drawn: usize,
    pub samples_passing: usize,
    pub partners_rejected: usize,
    pub block_fraction: f64,
}

pub fn sample_block_pairs(
    sys: &CocycleSystem,
    cfg: &ExperimentConfig,
    spectrum: &Spectrum,
    params: &RegularBlockParams,
) -> Result<SampledPairs, HarnessError> {
    use rayon::prelude::*;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<Point> = (0..cfg.sample_count)
        .map(|_| sys.sample(&mut rng))
        .collect();
    let split_horizon = cfg.resolved_split_horizon(spectrum);
    let data_fn = |pt: &Point| -> Result<OseledetsData, OseledetsError> {
        if sys.invertible() {
            oseledets::splitting(sys, pt, split_horizon, spectrum)
        } else {
            let flags = oseledets::forward_filtration(sys, pt, split_horizon, spectrum)?;
            Ok(OseledetsData {
                at: pt.clone(),
                spectrum: spectrum.clone(),
                flags,
                splitting: None,
            })
        }
    };
    let summary = regular_blocks::build_block(sys, &samples, data_fn, params)?;
    let passing: Vec<usize> = summary
        .results
        .iter()
        .enumerate()
        .filter(|(_, (_, m))| m.passed)
        .map(|(i, _)| i)
        .collect();
    if passing.is_empty() {
        return Err(HarnessError::EmptyBlock);
    }
    // partner offsets drawn on the single seeded stream, in sample order
    let (lo, hi) = (cfg.delta_min.ln(), cfg.delta_max.ln());
    let candidates: Vec<(usize, Point)> = passing
        .iter()
        .take(cfg.pair_budget)
        .map(|&idx| {
            let r = (lo + rng.gen::<f64>() * (hi - lo)).exp();
            (idx, partner_at_distance(&samples[idx], r, &mut rng))
        })
        .collect();
    let i0 = cfg.subspace_index - 1;
    let evaluated: Vec<Option<(usize, f64, f64)>> = candidates
        .par_iter()
        .map(|(idx, partner)| {
            let x = &samples[*idx];
            let d_base = sys.distance(x, partner);
            if !(cfg.delta_min..=cfg.delta_max * (1.0 + 1e-9)).contains(&d_base) {
                return None;
            }
            let data_x = data_fn(x).ok()?;
            let data_y = data_fn(partner).ok()?;
            let mb = if sys.invertible() {
                regular_blocks::membership_invertible(sys, partner, &data_y, params)
            } else {
                regular_blocks::membership_noninvertible(sys, partner, &data_y, params)
            }
            .ok()?;
            if !mb.passed {
                return None;
            }
            let space = |d: &OseledetsData| -> Option<grassmann::Subspace> {
                match &d.splitting {
                    Some(es) => es.get(i0).cloned(),
                    None => d.flags.get(i0).cloned(),
                }
            };
            let sx = space(&data_x)?;
            let sy = space(&data_y)?;
            let dist = grassmann::subspace_distance(&sx, &sy).ok()?;
            Some((*idx, d_base, dist))
        })
        .collect();
    let mut pairs = Vec::new();
    let mut rejected = 0usize;
    for (slot, ev) in evaluated.iter().enumerate() {
        match ev {
            Some((x_id, d_base, dist)) => {
                pairs.push(PairSample {
                    pair_id: pairs.len(),
                    x_id: *x_id,
                    y_id: cfg.sample_count + slot,
                    d_base: *d_base,
                    dist_subspace: *dist,
                    i_index: cfg.subspace_index,
                });
            }
            None => rejected += 1,
        }
    }
    Ok(SampledPairs {
        pairs,
        samples_drawn: cfg.sample_count,
        samples_passing: passing.len(),
        partners_rejected: rejected,
        block_fraction: summary.passing_fraction,
    })
}

/// Least-squares fit of `log dist` against `log d` over pairs with positive
/// distances. Zero-distance pairs are excluded and counted separately.
pub fn holder_fit(pairs: &[PairSample]) -> Result<HolderFit, HarnessError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zero_pairs = 0usize;
    let mut window = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pairs {
        if p.d_base <= 0.0 {
            continue;
        }
        if p.dist_subspace <= 1e-14 {
            zero_pairs += 1;
            continue;
        }
        window.0 = window.0.min(p.d_base);
        window.1 = window.1.max(p.d_base);
        xs.push(p.d_base.ln());
        ys.push(p.dist_subspace.ln());
    }
    let n = xs.len();
    if n < 10 {
        return Err(HarnessError::InsufficientData(format!(
            "{n} usable pairs after excluding {zero_pairs} zero-distance pairs; need at least 10"
        )));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mean_x;
        let dy = ys[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(HarnessError::InsufficientData(
            "all pairs share one base distance; the slope is undetermined".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept_log = mean_y - slope * mean_x;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(HolderFit {
        slope,
        intercept_log,
        r_squared,
        n_pairs: n,
        distance_window: window,
        zero_pairs,
    })
}

/// Compares an empirical fit and the raw pairs against a theorem
/// prediction. Passing requires the regression slope to reach
/// `ν·ω_i − slack`, or every pair to sit below the predicted bound curve
/// pointwise (the theorem is an upper bound, so steeper decay is
/// consistent).
pub fn compare_to_theorem(
    fit: &HolderFit,
    predicted: &TheoremPrediction,
    nu: f64,
    pairs: &[PairSample],
    slack: f64,
) -> TheoremComparison {
    let exponent = nu * predicted.exponent;
    let constant = predicted.constant;
    let slope_ok = fit.slope >= exponent - slack;
    let mut satisfied = 0usize;
    let mut zero_pairs = 0usize;
    let mut worst: Option<(f64, f64)> = None; // (margin, at bound)
    let mut considered = 0usize;
    for p in pairs {
        if p.d_base <= 0.0 {
            continue;
        }
        considered += 1;
        if p.dist_subspace <= 1e-14 {
            zero_pairs += 1;
            satisfied += 1;
            continue;
        }
        let bound = constant * p.d_base.powf(exponent);
        let margin = bound - p.dist_subspace;
        if margin >= -1e-9 * bound.max(1.0) {
            satisfied += 1;
        }
        if worst.is_none_or(|(m, _)| margin < m) {
            worst = Some((margin, bound));
        }
    }
    let pointwise_fraction = if considered == 0 {
        1.0
    } else {
        satisfied as f64 / considered as f64
    };
    let worst_pointwise = match worst {
        Some((margin, bound)) => {
            bounds::BoundReport::evaluate(bound, bound - margin, "worst pointwise theorem bound")
        }
        None => bounds::BoundReport::evaluate(0.0, 0.0, "no positive-distance pairs"),
    };
    TheoremComparison {
        predicted_exponent: exponent,
        predicted_constant: constant,
        slope: fit.slope,
        slope_ok,
        pointwise_fraction,
        zero_pairs,
        passed: slope_ok || pointwise_fraction >= 1.0,
        worst_pointwise,
    }
}

/// Everything `run_experiment` produced, before serialization.
pub struct ExperimentOutcome {
    pub spectrum: Spectrum,
    pub ell_fractions: Vec<(u32, f64)>,
    pub chosen_ell: u32,
    pub sampled: SampledPairs,
    pub fit: Option<HolderFit>,
    pub prediction: Option<TheoremPrediction>,
    pub comparison: Option<TheoremComparison>,
    pub log_a: f64,
    pub nu: f64,
}

/// Runs the full pipeline: spectrum → block sweep over ℓ → pair sampling →
/// Hölder fit → theorem comparison. Deterministic given the config seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate().map_err(HarnessError::Config)?;
    let sys = systems::make_system(&cfg.system)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
    let x0 = sys.sample(&mut rng);
    let spectrum = oseledets::lyapunov_spectrum(&sys, &x0, cfg.spectrum_horizon, cfg.gap_tol)?;

    // ℓ sweep on a deterministic subsample to pick the working block
    let sweep_samples: Vec<Point> = {
        let mut srng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xB10C);
        (0..cfg.sample_count.min(200))
            .map(|_| sys.sample(&mut srng))
            .collect()
    };
    let split_horizon = cfg.resolved_split_horizon(&spectrum);
    let data_fn = |pt: &Point| -> Result<OseledetsData, OseledetsError> {
        if sys.invertible() {
            oseledets::splitting(&sys, pt, split_horizon, &spectrum)
        } else {
            let flags = oseledets::forward_filtration(&sys, pt, split_horizon, &spectrum)?;
            Ok(OseledetsData {
                at: pt.clone(),
                spectrum: spectrum.clone(),
                flags,
                splitting: None,
            })
        }
    };
    let mut ell_fractions = Vec::new();
    let mut chosen_ell = None;
    for &ell in &cfg.ell_sweep {
        let params = RegularBlockParams::new(cfg.eps, ell, cfg.horizon, spectrum.clone())?;
        let summary = regular_blocks::build_block(&sys, &sweep_samples, data_fn, &params)?;
        ell_fractions.push((ell, summary.passing_fraction));
        if chosen_ell.is_none() && summary.passing_fraction >= 0.9 {
            chosen_ell = Some(ell);
        }
    }
    let chosen_ell = chosen_ell.unwrap_or(cfg.ell);

    let params = RegularBlockParams::new(cfg.eps, chosen_ell, cfg.horizon, spectrum.clone())?;
    let sampled = sample_block_pairs(&sys, cfg, &spectrum, &params)?;

    let nu = sys.holder_nu();
    let log_a = comparison_log_a(&sys, &spectrum, cfg.eps);
    let (fit, prediction, comparison) = if spectrum.len() >= 2 {
        let preds = bounds::theorem_exponents(
            &spectrum,
            cfg.eps,
            log_a,
            sys.invertible(),
            chosen_ell as f64,
        )?;
        let prediction = preds
            .into_iter()
            .find(|p| p.index == cfg.subspace_index)
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "subspace index {} has no theorem prediction",
                    cfg.subspace_index
                ))
            })?;
        match holder_fit(&sampled.pairs) {
            Ok(fit) => {
                let cmp =
                    compare_to_theorem(&fit, &prediction, nu, &sampled.pairs, cfg.slope_slack);
                (Some(fit), Some(prediction), Some(cmp))
            }
            Err(HarnessError::InsufficientData(_)) => {
                // no regression possible; when every subspace distance
                // vanished the pointwise upper bound is satisfied vacuously
                let zero_pairs = sampled
                    .pairs
                    .iter()
                    .filter(|p| p.dist_subspace <= 1e-14)
                    .count();
                let cmp = if !sampled.pairs.is_empty() && zero_pairs == sampled.pairs.len() {
                    Some(TheoremComparison {
                        predicted_exponent: nu * prediction.exponent,
                        predicted_constant: prediction.constant,
                        slope: 0.0,
                        slope_ok: false,
                        pointwise_fraction: 1.0,
                        zero_pairs,
                        passed: true,
                        worst_pointwise: bounds::BoundReport::evaluate(
                            0.0,
                            0.0,
                            "all subspace distances vanish; pointwise bound vacuous",
                        ),
                    })
                } else {
                    None
                };
                (None, Some(prediction), cmp)
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, None, None)
    };

    Ok(ExperimentOutcome {
        spectrum,
        ell_fractions,
        chosen_ell,
        sampled,
        fit,
        prediction,
        comparison,
        log_a,
        nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn synthetic_pairs(slope: f64, constant: f64, n: usize, noise: f64) -> Vec<PairSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        (0..n)
            .map(|i| {
                let d = 10.0_f64.powf(-(rng.gen::<f64>() * 4.0 + 1.0));
                let eps = 1.0 + noise * (2.0 * rng.gen::<f64>() - 1.0);
                PairSample {
                    pair_id: i,
                    x_id: i,
                    y_id: n + i,
                    d_base: d,
                    dist_subspace: constant * d.powf(slope) * eps,
                    i_index: 1,
                }
            })
            .collect()
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let pairs = synthetic_pairs(0.5, 2.0, 50, 0.0);
        let fit = holder_fit(&pairs).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept_log, 2.0_f64.ln(), epsilon = 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn fit_with_noise_stays_close() {
        for target in [0.25, 0.5, 0.75, 1.0] {
            let pairs = synthetic_pairs(target, 1.5, 300, 0.01);
            let fit = holder_fit(&pairs).unwrap();
            assert!(
                (fit.slope - target).abs() < 0.02,
                "slope {} for target {target}",
                fit.slope
            );
        }
    }

    #[test]
    fn fit_rejects_all_zero_distances() {
        let mut pairs = synthetic_pairs(0.5, 1.0, 30, 0.0);
        for p in &mut pairs {
            p.dist_subspace = 0.0;
        }
        match holder_fit(&pairs) {
            Err(HarnessError::InsufficientData(msg)) => assert!(msg.contains("30 zero-distance")),
            other => panic!("expected InsufficientData, got {other:?}"),
        }
    }

    #[test]
    fn comparison_flags_flat_slope_with_violations() {
        // flat distances against a positive predicted exponent: slope 0 and
        // pointwise violations for small d
        let mut pairs = synthetic_pairs(0.0, 0.5, 40, 0.0);
        for p in &mut pairs {
            p.dist_subspace = 0.5;
        }
        let fit = holder_fit(&pairs).unwrap();
        let pred = TheoremPrediction {
            index: 1,
            kind: crate::bounds::ExponentKind::Lowest,
            exponent: 0.8,
            constant: 1.0,
            eta: None,
        };
        let cmp = compare_to_theorem(&fit, &pred, 1.0, &pairs, 0.1);
        assert!(!cmp.slope_ok);
        assert!(cmp.pointwise_fraction < 1.0);
        assert!(!cmp.passed);
    }

    #[test]
    fn comparison_vacuous_on_zero_distances() {
        let mut pairs = synthetic_pairs(0.5, 1.0, 40, 0.0);
        for p in &mut pairs {
            p.dist_subspace = 0.0;
        }
        let pred = TheoremPrediction {
            index: 1,
            kind: crate::bounds::ExponentKind::Lowest,
            exponent: 0.8,
            constant: 1.0,
            eta: None,
        };
        let fake_fit = HolderFit {
            slope: 0.0,
            intercept_log: 0.0,
            r_squared: 1.0,
            n_pairs: 40,
            distance_window: (1e-5, 1e-2),
            zero_pairs: 40,
        };
        let cmp = compare_to_theorem(&fake_fit, &pred, 1.0, &pairs, 0.1);
        assert!((cmp.pointwise_fraction - 1.0).abs() < 1e-12);
        assert!(cmp.passed);
    }
}

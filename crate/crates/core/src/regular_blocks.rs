//! Executable membership tests for regular (Pesin) blocks.
//!
//! A point belongs to the block `Λ_ε^ℓ` when the Oseledets growth estimates
//! hold with the uniform constants `(ε, ℓ)` along its orbit. The
//! non-invertible form tests, for every flag index `i` and `0 ≤ m, n ≤ H`,
//!
//! ```text
//! ‖Aⁿ(x_m) v‖ ≤ ℓ e^{(χ_i+ε)n + εm} ‖v‖                 v ∈ Aᵐ(x)F^i
//! ℓ⁻¹ e^{(χ_i−ε)n − εm} ‖v‖ ≤ ‖Aⁿ(x_m) v‖ ≤ ℓ e^{(χ_i+ε)n + εm} ‖v‖
//!                                    v ∈ (Aᵐ(x)F^{i−1})⊥ ∩ Aᵐ(x)F^i
//! ```
//!
//! and the invertible form tests the two-sided bounds on each `Aᵐ(x)E^i`
//! for `n` of both signs together with the angle condition
//! `cos∠(⊕_{i∈I}E^i, ⊕_{j∉I}E^j) ≤ 1 − e^{−ε|n|}/ℓ` over proper subsets
//! `I`. Orthogonal complements are taken in the fixed ambient inner
//! product. The finite horizon makes membership a necessary-condition
//! certificate, not a proof of block membership for all times.
//!
//! # Numerical realization
//!
//! Two instabilities rule out the naive evaluation. Pushing an estimated
//! invariant frame forward amplifies its direction error by `e^{spread·m}`,
//! and the small singular values of a raw product `Aⁿ(x_m)·W` drown in
//! roundoff once `n·spread` passes ~35. Both are avoided by working through
//! the invariant family itself: `Aᵐ(x)F^i = F^i(x_m)` is realized by
//! re-estimating the flag at the orbit point, and `‖Aⁿ(x_m)v‖` is evaluated
//! through the *restricted* cocycle `R_j = W(x_{j+1})ᵀ A(x_j) W(x_j)` in the
//! moving frames, accumulated with log rescaling. Restricted products keep
//! every singular value at its own scale, so the two-sided clauses are
//! tested without catastrophic cancellation. Extremes over unit vectors of
//! each tested space are exact singular values of the restricted product.
//!
//! Slack is recorded in log scale for norm clauses and linearly for angle
//! clauses; `passed ⇔ worst slack ≥ −1e-9`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bounds::BoundReport;
use crate::cocycle::{self, CocycleError, CocycleSystem, Point};
use crate::grassmann::{self, GrassmannError, Subspace};
use crate::linalg;
use crate::oseledets::{self, OseledetsData, OseledetsError, Spectrum};

pub const SLACK_TOL: f64 = -1e-9;

#[derive(Debug, Error, Clone)]
pub enum BlockError {
    #[error("subset enumeration over k = {k} exponents requested exhaustively (limit 12)")]
    SubsetBlowup { k: usize },
    #[error("eps = {eps} outside (0, eps0/10) with eps0 = {eps0}")]
    EpsTooLarge { eps: f64, eps0: f64 },
    #[error("invalid block parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Oseledets(#[from] OseledetsError),
}

/// Block parameters `(ε, ℓ)` with the derived norm-growth constant
/// `L = e^{2(χ_k − χ₁)}` of the exponential norm bound.
#[derive(Debug, Clone)]
pub struct RegularBlockParams {
    pub eps: f64,
    pub ell: u32,
    pub horizon: usize,
    pub spectrum: Spectrum,
    pub l_bound: f64,
    /// Horizon used to re-estimate flags/splittings at orbit points.
    pub estimator_horizon: usize,
}

impl RegularBlockParams {
    pub fn new(
        eps: f64,
        ell: u32,
        horizon: usize,
        spectrum: Spectrum,
    ) -> Result<RegularBlockParams, BlockError> {
        if ell == 0 {
            return Err(BlockError::InvalidParams(
                "ell must be a positive integer".into(),
            ));
        }
        if eps <= 0.0 {
            return Err(BlockError::InvalidParams(format!(
                "eps must be positive, got {eps}"
            )));
        }
        let eps0 = spectrum.min_gap();
        if eps >= eps0 / 10.0 {
            return Err(BlockError::EpsTooLarge { eps, eps0 });
        }
        let chi = spectrum.exponents();
        let l_bound = (2.0 * (chi[chi.len() - 1] - chi[0])).exp();
        let estimator_horizon = if eps0.is_finite() {
            ((34.0 / eps0).ceil() as usize).clamp(16, 400)
        } else {
            16
        };
        Ok(RegularBlockParams {
            eps,
            ell,
            horizon,
            spectrum,
            l_bound,
            estimator_horizon,
        })
    }
}

/// Identifies the inequality family and indices `(i, m, n)` of a clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseId {
    /// Upper bound on `Aᵐ(x)F^i` (non-invertible first family).
    FlagUpper {
        i: usize,
        m: i64,
        n: i64,
    },
    /// Upper/lower bound on `(Aᵐ(x)F^{i−1})⊥ ∩ Aᵐ(x)F^i`.
    PerpUpper {
        i: usize,
        m: i64,
        n: i64,
    },
    PerpLower {
        i: usize,
        m: i64,
        n: i64,
    },
    /// Two-sided bounds on `Aᵐ(x)E^i` (invertible families, n of either sign).
    SplitUpper {
        i: usize,
        m: i64,
        n: i64,
    },
    SplitLower {
        i: usize,
        m: i64,
        n: i64,
    },
    /// Angle condition for the subset with the given bitmask at time n.
    Angle {
        subset: u32,
        n: i64,
    },
    /// Exponential norm bound `‖Aⁿ(x_m)‖ ≤ ℓ L^{|n|} e^{ε|m|}`.
    NormGrowth {
        m: i64,
        n: i64,
    },
}

/// Verdict for one point.
#[derive(Debug, Clone)]
pub struct BlockMembership {
    pub point: Point,
    pub passed: bool,
    /// Most negative slack over all tested inequalities (log scale for norm
    /// clauses, linear for angle clauses).
    pub worst_violation: f64,
    pub failing_clause: Option<ClauseId>,
}

struct SlackTracker {
    worst: f64,
    clause: Option<ClauseId>,
}

impl SlackTracker {
    fn new() -> Self {
        SlackTracker {
            worst: f64::INFINITY,
            clause: None,
        }
    }

    fn record(&mut self, slack: f64, clause: ClauseId) {
        if slack < self.worst {
            self.worst = slack;
            self.clause = Some(clause);
        }
    }

    fn finish(self, point: Point) -> BlockMembership {
        let worst = if self.worst.is_finite() {
            self.worst
        } else {
            0.0
        };
        BlockMembership {
            point,
            passed: worst >= SLACK_TOL,
            worst_violation: worst,
            failing_clause: if worst >= SLACK_TOL {
                None
            } else {
                self.clause
            },
        }
    }
}

/// A matrix product accumulated with log rescaling, so singular-value
/// extremes stay available far past the raw floating-point range.
struct LogScaled {
    p: DMatrix<f64>,
    log: f64,
}

impl LogScaled {
    fn new(p: DMatrix<f64>) -> Self {
        LogScaled { p, log: 0.0 }
    }

    fn mul_left(&mut self, r: &DMatrix<f64>) {
        self.p = r * &self.p;
        let scale = linalg::max_abs(&self.p);
        if !(1e-100..=1e100).contains(&scale) && scale > 0.0 {
            self.p /= scale;
            self.log += scale.ln();
        }
    }

    /// `(log σ_max, log σ_min)` of the accumulated product.
    fn log_sigma_extremes(&self) -> (f64, f64) {
        let (smax, smin) = linalg::sigma_extremes(&self.p);
        (smax.ln() + self.log, smin.ln() + self.log)
    }
}

/// Restricted step matrix `W_nextᵀ · A · W`: the action of `A` between two
/// moving frames of (numerically) equivariant subspaces.
fn restricted_step(a: &DMatrix<f64>, w: &Subspace, w_next: &Subspace) -> DMatrix<f64> {
    w_next.frame().transpose() * a * w.frame()
}

/// Estimated Oseledets data along an orbit window, at offsets
/// `lo..=hi` relative to the base point. Offset 0 uses the caller-provided
/// data; other offsets are re-estimated, which realizes `Aᵐ(x)F^i` as
/// `F^i(x_m)` without the exponential error blowup of raw pushforward.
struct OrbitData {
    lo: i64,
    datas: Vec<OseledetsData>,
    gens: Vec<DMatrix<f64>>,
}

impl OrbitData {
    fn data(&self, offset: i64) -> &OseledetsData {
        &self.datas[(offset - self.lo) as usize]
    }

    /// Generator at orbit offset (defined for `lo..hi`).
    fn gen(&self, offset: i64) -> &DMatrix<f64> {
        &self.gens[(offset - self.lo) as usize]
    }
}

fn collect_orbit_data(
    sys: &CocycleSystem,
    x: &Point,
    data: &OseledetsData,
    p: &RegularBlockParams,
    lo: i64,
    hi: i64,
    with_splitting: bool,
) -> Result<OrbitData, BlockError> {
    let mut points = Vec::with_capacity((hi - lo + 1) as usize);
    if lo < 0 {
        let back = cocycle::orbit_backward(sys, x, (-lo) as usize)?;
        points.extend(back.into_iter().rev());
    }
    points.extend(cocycle::orbit_forward(sys, x, (hi + 1) as usize));
    let mut datas = Vec::with_capacity(points.len());
    let mut gens = Vec::with_capacity(points.len());
    for (idx, pt) in points.iter().enumerate() {
        let offset = lo + idx as i64;
        gens.push(sys.generator_at(pt));
        if offset == 0 {
            datas.push(data.clone());
            continue;
        }
        let d = if with_splitting {
            oseledets::splitting(sys, pt, p.estimator_horizon, &p.spectrum)?
        } else {
            let flags = oseledets::forward_filtration(sys, pt, p.estimator_horizon, &p.spectrum)?;
            OseledetsData {
                at: pt.clone(),
                spectrum: p.spectrum.clone(),
                flags,
                splitting: None,
            }
        };
        datas.push(d);
    }
    Ok(OrbitData { lo, datas, gens })
}

/// Membership test in the non-invertible form, driven by the forward flags
/// of `data`.
pub fn membership_noninvertible(
    sys: &CocycleSystem,
    x: &Point,
    data: &OseledetsData,
    p: &RegularBlockParams,
) -> Result<BlockMembership, BlockError> {
    let k = p.spectrum.len();
    if data.flags.len() != k {
        return Err(BlockError::InvalidParams(
            "data flags do not match spectrum".into(),
        ));
    }
    let h = p.horizon as i64;
    let chi = p.spectrum.exponents();
    let (eps, ell) = (p.eps, p.ell as f64);
    let orbit = collect_orbit_data(sys, x, data, p, 0, 2 * h, false)?;
    let mut tracker = SlackTracker::new();
    for m in 0..=h {
        for i in 1..=k {
            let chi_i = chi[i - 1];
            let flag_m = &orbit.data(m).flags[i - 1];
            // first family: upper bound along the flag
            let mut prod = LogScaled::new(DMatrix::identity(flag_m.dim(), flag_m.dim()));
            for n in 0..=h {
                let (log_smax, _) = prod.log_sigma_extremes();
                tracker.record(
                    ell.ln() + (chi_i + eps) * n as f64 + eps * m as f64 - log_smax,
                    ClauseId::FlagUpper { i, m, n },
                );
                if n < h {
                    let step = restricted_step(
                        orbit.gen(m + n),
                        &orbit.data(m + n).flags[i - 1],
                        &orbit.data(m + n + 1).flags[i - 1],
                    );
                    prod.mul_left(&step);
                }
            }
            // sharp family on (Aᵐ F^{i−1})⊥ ∩ Aᵐ F^i, expressed in the
            // moving flag frame so the two-sided extremes stay resolvable
            let sharp = if i == 1 {
                flag_m.clone()
            } else {
                grassmann::grassmann_intersect(&orbit.data(m).flags[i - 2].complement(), flag_m)?
            };
            let coords = flag_m.frame().transpose() * sharp.frame();
            let mut prod = LogScaled::new(coords);
            for n in 0..=h {
                let (log_smax, log_smin) = prod.log_sigma_extremes();
                tracker.record(
                    ell.ln() + (chi_i + eps) * n as f64 + eps * m as f64 - log_smax,
                    ClauseId::PerpUpper { i, m, n },
                );
                tracker.record(
                    log_smin - (-ell.ln() + (chi_i - eps) * n as f64 - eps * m as f64),
                    ClauseId::PerpLower { i, m, n },
                );
                if n < h {
                    let step = restricted_step(
                        orbit.gen(m + n),
                        &orbit.data(m + n).flags[i - 1],
                        &orbit.data(m + n + 1).flags[i - 1],
                    );
                    prod.mul_left(&step);
                }
            }
        }
    }
    Ok(tracker.finish(x.clone()))
}

/// Membership test in the invertible form: two-sided growth along each
/// `Aᵐ(x)E^i` for `|m|, |n| ≤ horizon` with `n` of both signs, plus the
/// subset angle condition. Exhaustive subset enumeration is limited to
/// `k ≤ 12`.
pub fn membership_invertible(
    sys: &CocycleSystem,
    x: &Point,
    data: &OseledetsData,
    p: &RegularBlockParams,
) -> Result<BlockMembership, BlockError> {
    let k = p.spectrum.len();
    let splitting = data
        .splitting
        .as_ref()
        .ok_or_else(|| BlockError::InvalidParams("data has no splitting".into()))?;
    if splitting.len() != k {
        return Err(BlockError::InvalidParams(
            "splitting does not match spectrum".into(),
        ));
    }
    if k > 12 {
        return Err(BlockError::SubsetBlowup { k });
    }
    if !sys.invertible() {
        return Err(BlockError::Cocycle(CocycleError::NotInvertible));
    }
    let h = p.horizon as i64;
    let chi = p.spectrum.exponents();
    let (eps, ell) = (p.eps, p.ell as f64);
    let orbit = collect_orbit_data(sys, x, data, p, -2 * h, 2 * h, true)?;
    let split_at = |offset: i64, i: usize| -> &Subspace {
        &orbit.data(offset).splitting.as_ref().expect("splitting")[i]
    };
    let inv_gen = |offset: i64| -> Result<DMatrix<f64>, BlockError> {
        orbit
            .gen(offset)
            .clone()
            .try_inverse()
            .ok_or_else(|| BlockError::InvalidParams("singular generator".into()))
    };

    let mut tracker = SlackTracker::new();
    for m in -h..=h {
        let am = m.unsigned_abs() as f64;
        for i in 1..=k {
            let chi_i = chi[i - 1];
            let dim_i = p.spectrum.multiplicities()[i - 1];
            // forward sweep: n ≥ 0
            let mut prod = LogScaled::new(DMatrix::identity(dim_i, dim_i));
            for n in 0..=h {
                let (log_smax, log_smin) = prod.log_sigma_extremes();
                tracker.record(
                    ell.ln() + (chi_i + eps) * n as f64 + eps * am - log_smax,
                    ClauseId::SplitUpper { i, m, n },
                );
                tracker.record(
                    log_smin - (-ell.ln() + (chi_i - eps) * n as f64 - eps * am),
                    ClauseId::SplitLower { i, m, n },
                );
                if n < h {
                    let step = restricted_step(
                        orbit.gen(m + n),
                        split_at(m + n, i - 1),
                        split_at(m + n + 1, i - 1),
                    );
                    prod.mul_left(&step);
                }
            }
            // backward sweep: n ≤ 0, with the inverted-rate bounds
            // ℓ⁻¹ e^{(χ_i+ε)n − ε|m|} ≤ ‖Aⁿ(x_m)v‖ ≤ ℓ e^{(χ_i−ε)n + ε|m|}
            let mut prod = LogScaled::new(DMatrix::identity(dim_i, dim_i));
            for j in 0..=h {
                let n = -j;
                let (log_smax, log_smin) = prod.log_sigma_extremes();
                tracker.record(
                    ell.ln() + (chi_i - eps) * n as f64 + eps * am - log_smax,
                    ClauseId::SplitUpper { i, m, n },
                );
                tracker.record(
                    log_smin - (-ell.ln() + (chi_i + eps) * n as f64 - eps * am),
                    ClauseId::SplitLower { i, m, n },
                );
                if j < h {
                    let step = restricted_step(
                        &inv_gen(m - j - 1)?,
                        split_at(m - j, i - 1),
                        split_at(m - j - 1, i - 1),
                    );
                    prod.mul_left(&step);
                }
            }
        }
        // angle condition over proper subsets, deduplicated by fixing E¹'s
        // side (the condition is symmetric in I and its complement)
        if k >= 2 {
            for subset in 0..(1u32 << (k - 1)) {
                let mask = (subset << 1) | 1;
                if mask == (1 << k) - 1 {
                    continue;
                }
                let mut in_i: Option<Subspace> = None;
                let mut out_i: Option<Subspace> = None;
                for i in 0..k {
                    let target = if mask & (1 << i) != 0 {
                        &mut in_i
                    } else {
                        &mut out_i
                    };
                    *target = Some(match target.take() {
                        None => split_at(m, i).clone(),
                        Some(acc) => acc.direct_sum(split_at(m, i))?,
                    });
                }
                let cos = grassmann::max_pair_cosine(&in_i.unwrap(), &out_i.unwrap())?;
                let bound = 1.0 - (-eps * am).exp() / ell;
                tracker.record(bound - cos, ClauseId::Angle { subset: mask, n: m });
            }
        }
    }
    Ok(tracker.finish(x.clone()))
}

/// Checks the derived exponential norm bound `‖Aⁿ(x_m)‖ ≤ ℓ L^{|n|} e^{ε|m|}`
/// over the tested window (both time signs when the base is invertible).
/// Evaluated in log scale through the QR cascade, so long horizons do not
/// overflow.
pub fn norm_growth_check(
    sys: &CocycleSystem,
    x: &Point,
    p: &RegularBlockParams,
) -> Result<BoundReport, BlockError> {
    let h = p.horizon as i64;
    let (eps, ell) = (p.eps, p.ell as f64);
    let log_l = p.l_bound.ln();
    let m_range: Vec<i64> = if sys.invertible() {
        (-h..=h).collect()
    } else {
        (0..=h).collect()
    };
    let mut worst: Option<(f64, f64, f64, i64, i64)> = None;
    let mut record = |slack: f64, log_bound: f64, log_meas: f64, m: i64, n: i64| {
        if worst.is_none_or(|(s, ..)| slack < s) {
            worst = Some((slack, log_bound, log_meas, m, n));
        }
    };
    for &m in &m_range {
        let mut x_m = x.clone();
        if m >= 0 {
            for _ in 0..m {
                x_m = sys.step(&x_m);
            }
        } else {
            for _ in 0..(-m) {
                x_m = sys.inverse_step(&x_m)?;
            }
        }
        // forward sweep n = 0..h
        let d = sys.dim();
        let mut prod = LogScaled::new(DMatrix::identity(d, d));
        let mut cur = x_m.clone();
        for n in 0..=h {
            let (log_smax, _) = prod.log_sigma_extremes();
            let log_bound = ell.ln() + log_l * n as f64 + eps * m.unsigned_abs() as f64;
            record(log_bound - log_smax, log_bound, log_smax, m, n);
            if n < h {
                prod.mul_left(&sys.generator_at(&cur));
                cur = sys.step(&cur);
            }
        }
        if sys.invertible() {
            let mut prod = LogScaled::new(DMatrix::identity(d, d));
            let mut cur = x_m.clone();
            for j in 0..=h {
                if j > 0 {
                    let (log_smax, _) = prod.log_sigma_extremes();
                    let log_bound = ell.ln() + log_l * j as f64 + eps * m.unsigned_abs() as f64;
                    record(log_bound - log_smax, log_bound, log_smax, m, -j);
                }
                if j < h {
                    cur = sys.inverse_step(&cur)?;
                    let inv = sys
                        .generator_at(&cur)
                        .try_inverse()
                        .ok_or_else(|| BlockError::InvalidParams("singular generator".into()))?;
                    prod.mul_left(&inv);
                }
            }
        }
    }
    let (slack, log_bound, log_meas, m, n) = worst.expect("nonempty range");
    let mut report = BoundReport::evaluate(
        log_bound,
        log_meas,
        format!("norm growth bound, worst at (m, n) = ({m}, {n}), log scale"),
    );
    report.passed = slack >= SLACK_TOL;
    Ok(report)
}

/// Membership verdicts for a batch of sample points, with the empirical
/// passing fraction (the finite-sample stand-in for the block's measure).
/// Per-sample tests run in parallel; results keep input order. Samples whose
/// Oseledets data or membership test cannot be resolved numerically are
/// counted as non-members rather than surfacing an error.
pub struct BlockSummary {
    pub results: Vec<(Point, BlockMembership)>,
    pub passing_fraction: f64,
}

pub fn build_block<F>(
    sys: &CocycleSystem,
    samples: &[Point],
    data_fn: F,
    p: &RegularBlockParams,
) -> Result<BlockSummary, BlockError>
where
    F: Fn(&Point) -> Result<OseledetsData, OseledetsError> + Sync,
{
    use rayon::prelude::*;
    if samples.is_empty() {
        return Err(BlockError::InvalidParams("no samples supplied".into()));
    }
    let not_member = |pt: &Point| BlockMembership {
        point: pt.clone(),
        passed: false,
        worst_violation: f64::NEG_INFINITY,
        failing_clause: None,
    };
    let results: Vec<(Point, BlockMembership)> = samples
        .par_iter()
        .map(|pt| {
            let membership = match data_fn(pt) {
                Ok(data) => {
                    let res = if sys.invertible() && data.splitting.is_some() {
                        membership_invertible(sys, pt, &data, p)
                    } else {
                        membership_noninvertible(sys, pt, &data, p)
                    };
                    res.unwrap_or_else(|_| not_member(pt))
                }
                Err(_) => not_member(pt),
            };
            (pt.clone(), membership)
        })
        .collect();
    let passing = results.iter().filter(|(_, m)| m.passed).count();
    let passing_fraction = passing as f64 / results.len() as f64;
    Ok(BlockSummary {
        results,
        passing_fraction,
    })
}

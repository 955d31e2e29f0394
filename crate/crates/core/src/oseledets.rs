//! Lyapunov spectra, Oseledets filtrations and splittings.
//!
//! Exponents come from the standard QR-update cascade: orthonormalize the
//! running product one generator at a time and average the log diagonal of
//! the triangular factors. Filtrations come from the same cascade applied to
//! the transposed generators in reversed orbit order, which factors
//! `Aⁿ(x)ᵀ = G·R̃` with `R̃` upper triangular and severely graded; the right
//! singular subspaces of `Aⁿ(x)` then agree with column groups of `G` up to
//! `O(e^{−n·gap})`, so the flag
//!
//! ```text
//! F^i = { v : lim (1/n) log‖Aⁿ(x) v‖ ≤ χ_i }
//! ```
//!
//! is read off as the span of the trailing columns. The invertible-case
//! splitting intersects the forward flag with the flag of the time-reversed
//! cocycle: `E^i = F^i ∩ G^i`, where `G^i` is the backward flag member of
//! complementary dimension `d − dim F^{i−1}`, i.e. the `(k−i+1)`-th member
//! of the reversed cocycle's own increasing flag.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cocycle::{self, CocycleError, CocycleSystem, Point};
use crate::grassmann::{self, GrassmannError, Subspace};
use crate::linalg;

#[derive(Debug, Error, Clone)]
pub enum OseledetsError {
    #[error(
        "horizon too short: drift residual {residual:.3e} exceeds gap_tol/2 = {half_gap_tol:.3e}"
    )]
    HorizonTooShort { residual: f64, half_gap_tol: f64 },
    #[error("exponent separation failure: {0}")]
    SeparationFailure(String),
    #[error("operation requires an invertible base")]
    NotInvertible,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// A computed Lyapunov spectrum: distinct exponents `χ₁ < ⋯ < χ_k` with
/// multiplicities summing to the cocycle dimension.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Spectrum {
    exponents: Vec<f64>,
    multiplicities: Vec<usize>,
    horizon: usize,
    residual: f64,
    gap_tol: f64,
    /// `(1/n) log|det Aⁿ(x)|`, accumulated through LU determinants,
    /// independent of the QR path.
    det_rate: f64,
}

impl Spectrum {
    pub fn from_parts(
        exponents: Vec<f64>,
        multiplicities: Vec<usize>,
        horizon: usize,
        residual: f64,
        gap_tol: f64,
    ) -> Result<Spectrum, OseledetsError> {
        if exponents.is_empty() || exponents.len() != multiplicities.len() {
            return Err(OseledetsError::InvalidSpectrum(
                "exponents and multiplicities must be nonempty and aligned".into(),
            ));
        }
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OseledetsError::InvalidSpectrum(
                "exponents must be strictly increasing".into(),
            ));
        }
        if multiplicities.contains(&0) {
            return Err(OseledetsError::InvalidSpectrum(
                "multiplicities must be positive".into(),
            ));
        }
        let det_rate = exponents
            .iter()
            .zip(&multiplicities)
            .map(|(c, &m)| c * m as f64)
            .sum();
        Ok(Spectrum {
            exponents,
            multiplicities,
            horizon,
            residual,
            gap_tol,
            det_rate,
        })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn gap_tol(&self) -> f64 {
        self.gap_tol
    }

    pub fn det_rate(&self) -> f64 {
        self.det_rate
    }

    /// Minimum spectral gap ε₀; infinite for a single exponent.
    pub fn min_gap(&self) -> f64 {
        self.exponents
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Cumulative flag dimension `dim F^i = Σ_{j≤i} m_j` (1-based `i`).
    pub fn flag_dim(&self, i: usize) -> usize {
        self.multiplicities[..i].iter().sum()
    }

    /// Defect of the determinant identity `Σ χ_i m_i = (1/n) log|det Aⁿ|`.
    pub fn det_identity_defect(&self) -> f64 {
        let sum: f64 = self
            .exponents
            .iter()
            .zip(&self.multiplicities)
            .map(|(c, &m)| c * m as f64)
            .sum();
        (sum - self.det_rate).abs()
    }

    /// The spectrum of the time-reversed cocycle: negated exponents in
    /// reversed order, multiplicities reversed.
    pub fn reversed(&self) -> Spectrum {
        let exponents: Vec<f64> = self.exponents.iter().rev().map(|c| -c).collect();
        let multiplicities: Vec<usize> = self.multiplicities.iter().rev().copied().collect();
        let det_rate = -self.det_rate;
        Spectrum {
            exponents,
            multiplicities,
            horizon: self.horizon,
            residual: self.residual,
            gap_tol: self.gap_tol,
            det_rate,
        }
    }
}

/// Exponents, forward flags, and (when available) the Oseledets splitting at
/// one base point.
#[derive(Debug, Clone)]
pub struct OseledetsData {
    pub at: Point,
    pub spectrum: Spectrum,
    /// Forward filtration `F¹ ⊂ ⋯ ⊂ F^k`.
    pub flags: Vec<Subspace>,
    /// Splitting `E¹, …, E^k` for invertible systems.
    pub splitting: Option<Vec<Subspace>>,
}

impl OseledetsData {
    /// Largest violation of the structural invariants: flag nesting, flag
    /// dimensions, and (when the splitting is present) the flag relation
    /// `F^j = ⊕_{i≤j} E^i`.
    pub fn structural_defect(&self) -> Result<f64, OseledetsError> {
        let mut worst: f64 = 0.0;
        let k = self.spectrum.len();
        for i in 0..k {
            if self.flags[i].dim() != self.spectrum.flag_dim(i + 1) {
                return Err(OseledetsError::InvalidSpectrum(format!(
                    "flag {} has dimension {} instead of {}",
                    i + 1,
                    self.flags[i].dim(),
                    self.spectrum.flag_dim(i + 1)
                )));
            }
            if i + 1 < k {
                worst = worst.max(self.flags[i].containment_residual(&self.flags[i + 1]));
            }
        }
        if let Some(es) = &self.splitting {
            let mut acc: Option<Subspace> = None;
            for (i, e) in es.iter().enumerate() {
                acc = Some(match acc {
                    None => e.clone(),
                    Some(prev) => prev.direct_sum(e)?,
                });
                let sum = acc.as_ref().unwrap();
                worst = worst.max(grassmann::subspace_distance(sum, &self.flags[i])?);
            }
        }
        Ok(worst)
    }
}

/// Default spectrum horizon: `n` with `n · mingap ≥ 30` when the gap is
/// known, else 2000.
pub fn default_horizon(min_gap: Option<f64>) -> usize {
    match min_gap {
        Some(g) if g > 0.0 && g.is_finite() => ((30.0 / g).ceil() as usize).clamp(64, 20_000),
        _ => 2000,
    }
}

struct Cascade {
    q: DMatrix<f64>,
    /// Per-column log growth rates, time-averaged after a quarter-length
    /// burn-in so alignment transients do not bias the estimates.
    rates: Vec<f64>,
    drift: f64,
    det_rate: f64,
}

/// QR-update cascade over `n` matrices. Tracks per-column log rates over the
/// window `(n/2, n]`, the exponent drift over the trailing quarter of the
/// run, and the LU-determinant rate over the same window (a route through
/// the products independent of the QR diagonal). The long burn-in absorbs
/// alignment transients, which can last `log(1/angle)/gap` steps when the
/// identity start sits close to a contracting direction.
fn qr_cascade(
    mats: impl Iterator<Item = DMatrix<f64>>,
    d: usize,
    n: usize,
) -> Result<Cascade, OseledetsError> {
    let burn = n / 2;
    let window = (n - burn) as f64;
    let mut q = DMatrix::identity(d, d);
    let mut log_sums = vec![0.0_f64; d];
    let mut burn_sums = vec![0.0_f64; d];
    let mut det_sum = 0.0;
    let drift_start = (3 * n) / 4;
    let mut snapshots: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut count = 0usize;
    for (t, m) in mats.enumerate() {
        if t >= burn {
            det_sum += m.determinant().abs().ln();
        }
        let (next_q, r) = linalg::qr_positive(&(&m * &q));
        q = next_q;
        for j in 0..d {
            let rjj = r[(j, j)];
            if rjj <= 0.0 {
                return Err(OseledetsError::InvalidSpectrum(format!(
                    "degenerate triangular pivot at step {t}"
                )));
            }
            log_sums[j] += rjj.ln();
        }
        count = t + 1;
        if count == burn {
            burn_sums.copy_from_slice(&log_sums);
        }
        if count >= drift_start.max(burn + 1) && count < n {
            snapshots.push((count, log_sums.clone()));
        }
    }
    if count != n {
        return Err(OseledetsError::InvalidSpectrum(format!(
            "expected {n} matrices, saw {count}"
        )));
    }
    let rates: Vec<f64> = (0..d)
        .map(|j| (log_sums[j] - burn_sums[j]) / window)
        .collect();
    let mut drift: f64 = 0.0;
    for (t, sums) in &snapshots {
        let len = (*t - burn) as f64;
        for j in 0..d {
            drift = drift.max(((sums[j] - burn_sums[j]) / len - rates[j]).abs());
        }
    }
    Ok(Cascade {
        q,
        rates,
        drift,
        det_rate: det_sum / window,
    })
}

/// Lyapunov spectrum at `x` over horizon `n`, clustering raw rates into
/// groups separated by at least `gap_tol`.
pub fn lyapunov_spectrum(
    sys: &CocycleSystem,
    x: &Point,
    n: usize,
    gap_tol: f64,
) -> Result<Spectrum, OseledetsError> {
    if n < 8 {
        return Err(OseledetsError::InvalidSpectrum(format!(
            "horizon {n} too small, need at least 8"
        )));
    }
    if gap_tol <= 0.0 {
        return Err(OseledetsError::InvalidSpectrum(format!(
            "gap_tol must be positive, got {gap_tol}"
        )));
    }
    let d = sys.dim();
    let mut cur = x.clone();
    let mats = std::iter::from_fn(|| {
        let a = sys.generator_at(&cur);
        cur = sys.step(&cur);
        Some(a)
    })
    .take(n);
    let cascade = qr_cascade(mats, d, n)?;
    if cascade.drift > gap_tol / 2.0 {
        return Err(OseledetsError::HorizonTooShort {
            residual: cascade.drift,
            half_gap_tol: gap_tol / 2.0,
        });
    }
    let mut rates = cascade.rates;
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // greedy merge of sorted raw rates under gap_tol
    let mut exponents = Vec::new();
    let mut multiplicities = Vec::new();
    let mut group = vec![rates[0]];
    for &r in &rates[1..] {
        if r - group.last().unwrap() < gap_tol {
            group.push(r);
        } else {
            exponents.push(group.iter().sum::<f64>() / group.len() as f64);
            multiplicities.push(group.len());
            group = vec![r];
        }
    }
    exponents.push(group.iter().sum::<f64>() / group.len() as f64);
    multiplicities.push(group.len());
    Ok(Spectrum {
        exponents,
        multiplicities,
        horizon: n,
        residual: cascade.drift.max(1e-12),
        gap_tol,
        det_rate: cascade.det_rate,
    })
}

/// Core of the filtration estimator: the adjoint cascade over a forward
/// orbit, returning the orthonormal column matrix `G` of `Aⁿ(x)ᵀ = G·R̃`
/// with columns sorted by realized growth rate, largest first. Sorting
/// matters for systems whose invariant directions are exactly aligned with
/// the identity start, where the cascade never reorders on its own.
fn adjoint_cascade(
    sys: &CocycleSystem,
    x: &Point,
    n: usize,
) -> Result<(DMatrix<f64>, Vec<f64>), OseledetsError> {
    let d = sys.dim();
    let orbit = cocycle::orbit_forward(sys, x, n);
    let mats = orbit.iter().rev().map(|p| sys.generator_at(p).transpose());
    let cascade = qr_cascade(mats, d, n)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| cascade.rates[b].partial_cmp(&cascade.rates[a]).unwrap());
    let mut g = DMatrix::zeros(d, d);
    let mut rates = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        g.set_column(dst, &cascade.q.column(src));
        rates.push(cascade.rates[src]);
    }
    Ok((g, rates))
}

fn filtration_from_cascade(
    sys: &CocycleSystem,
    x: &Point,
    n: usize,
    spectrum: &Spectrum,
) -> Result<Vec<Subspace>, OseledetsError> {
    let d = sys.dim();
    let k = spectrum.len();
    if spectrum.dim() != d {
        return Err(OseledetsError::InvalidSpectrum(format!(
            "spectrum dimension {} does not match cocycle dimension {d}",
            spectrum.dim()
        )));
    }
    if k == 1 {
        return Err(OseledetsError::SeparationFailure(
            "single exponent cluster: no gap to separate".into(),
        ));
    }
    let min_gap = spectrum.min_gap();
    if (n as f64 * min_gap).exp() <= 1e3 {
        return Err(OseledetsError::SeparationFailure(format!(
            "horizon {n} too short for gap {min_gap:.4}: need exp(n·gap) > 1e3"
        )));
    }
    let (g, rates) = adjoint_cascade(sys, x, n)?;
    // rates are descending; group boundaries must realize the spectrum's
    // multiplicities with gaps of at least gap_tol.
    let mut boundaries = Vec::new();
    let mut acc = 0;
    for &m in spectrum.multiplicities().iter().rev() {
        acc += m;
        boundaries.push(acc);
    }
    for &b in &boundaries[..boundaries.len() - 1] {
        let gap = rates[b - 1] - rates[b];
        if gap < spectrum.gap_tol() {
            return Err(OseledetsError::SeparationFailure(format!(
                "singular-value log-rates at boundary {b} separated by {gap:.4e} < gap_tol {:.4e}",
                spectrum.gap_tol()
            )));
        }
    }
    // sanity: realized group means should sit near the claimed exponents
    let mut start = 0;
    for (rev_idx, &m) in spectrum.multiplicities().iter().rev().enumerate() {
        let chi = spectrum.exponents()[k - 1 - rev_idx];
        let mean: f64 = rates[start..start + m].iter().sum::<f64>() / m as f64;
        if (mean - chi).abs() > spectrum.gap_tol().max(10.0 * spectrum.residual()) {
            return Err(OseledetsError::SeparationFailure(format!(
                "cascade rate {mean:.6} does not match spectrum exponent {chi:.6}"
            )));
        }
        start += m;
    }
    let mut flags = Vec::with_capacity(k);
    for i in 1..=k {
        let di = spectrum.flag_dim(i);
        let frame = g.columns(d - di, di).into_owned();
        flags.push(Subspace::from_orthonormal_frame(frame));
    }
    Ok(flags)
}

/// Forward Oseledets filtration `F¹ ⊂ ⋯ ⊂ F^k` at `x`, approximated by the
/// trailing right-singular subspaces of `Aⁿ(x)` computed through the adjoint
/// QR cascade.
pub fn forward_filtration(
    sys: &CocycleSystem,
    x: &Point,
    n: usize,
    spectrum: &Spectrum,
) -> Result<Vec<Subspace>, OseledetsError> {
    filtration_from_cascade(sys, x, n, spectrum)
}

/// Filtration of the time-reversed cocycle at `x`, indexed so that the
/// `(k−i+1)`-th member has the complementary dimension `d − dim F^{i−1}` and
/// intersects the forward flag `F^i` exactly in `E^i`.
pub fn backward_filtration(
    sys: &CocycleSystem,
    x: &Point,
    n: usize,
    spectrum: &Spectrum,
) -> Result<Vec<Subspace>, OseledetsError> {
    if !sys.invertible() {
        return Err(OseledetsError::NotInvertible);
    }
    let reversed = sys.reversed()?;
    filtration_from_cascade(&reversed, x, n, &spectrum.reversed())
}

/// Full Oseledets data at `x`: forward flags plus the splitting
/// `E^i = F^i ∩ G^i` from intersecting forward and backward flags.
pub fn splitting(
    sys: &CocycleSystem,
    x: &Point,
    n: usize,
    spectrum: &Spectrum,
) -> Result<OseledetsData, OseledetsError> {
    let flags = forward_filtration(sys, x, n, spectrum)?;
    let backward = backward_filtration(sys, x, n, spectrum)?;
    let k = spectrum.len();
    let mut es = Vec::with_capacity(k);
    for i in 0..k {
        let e = grassmann::grassmann_intersect(&flags[i], &backward[k - 1 - i])?;
        if e.dim() != spectrum.multiplicities()[i] {
            return Err(OseledetsError::Grassmann(
                GrassmannError::NotGeneralPosition {
                    expected: spectrum.multiplicities()[i],
                    found: e.dim(),
                },
            ));
        }
        es.push(e);
    }
    Ok(OseledetsData {
        at: x.clone(),
        spectrum: spectrum.clone(),
        flags,
        splitting: Some(es),
    })
}

/// One-step equivariance defect of a computed splitting: the distance
/// between `A(x)·E^i_x` (re-orthonormalized) and `E^i_{f(x)}` computed
/// directly at the image point.
pub fn equivariance_defect(
    sys: &CocycleSystem,
    data: &OseledetsData,
    n: usize,
) -> Result<Vec<f64>, OseledetsError> {
    let es = data
        .splitting
        .as_ref()
        .ok_or(OseledetsError::NotInvertible)?;
    let fx = sys.step(&data.at);
    let image = splitting(sys, &fx, n, &data.spectrum)?;
    let a = sys.generator_at(&data.at);
    let mut defects = Vec::with_capacity(es.len());
    for (e, e_next) in es.iter().zip(image.splitting.as_ref().unwrap()) {
        let pushed = e.map(&a);
        defects.push(grassmann::subspace_distance(&pushed, e_next)?);
    }
    Ok(defects)
}

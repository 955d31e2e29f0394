//! Linear cocycles over a Lipschitz base map.
//!
//! A [`CocycleSystem`] bundles the base dynamics `f`, a metric on the base, a
//! matrix generator `A(x)`, and the regularity metadata `(c₀, ν, L)` used by
//! the iterate-Hölder estimates. Iteration follows the products
//!
//! ```text
//! Aⁿ(x)  = A(f^{n−1}x) ⋯ A(f x) A(x),        A⁰(x) = Id,
//! A⁻ⁿ(x) = A(f⁻ⁿx)⁻¹ ⋯ A(f⁻¹x)⁻¹            (invertible base only).
//! ```
//!
//! The matrix norm throughout is the operator (spectral) norm. Raw products
//! are guarded against overflow past `1e300`; long-horizon work must go
//! through the orthogonalized paths in [`crate::oseledets`].

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::BoundReport;
use crate::linalg;

/// Norm ceiling past which raw matrix products report [`CocycleError::Overflow`].
pub const OVERFLOW_LIMIT: f64 = 1e300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("negative iterates require an invertible base")]
    NotInvertible,
    #[error("partial product norm exceeded 1e300 at step {at_step}; use an orthogonalized path")]
    Overflow { at_step: i64 },
    #[error("domain error: {0}")]
    DomainError(String),
}

/// A state of one of the bundled base systems.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// Coordinates on the torus `[0,1)^m`.
    Torus(DVector<f64>),
    /// A point of a one-sided shift space, realized as a periodic symbol
    /// word read from `cursor`.
    Shift { word: Arc<Vec<u8>>, cursor: usize },
}

impl Point {
    pub fn torus(coords: &[f64]) -> Point {
        Point::Torus(DVector::from_iterator(
            coords.len(),
            coords.iter().map(|c| c.rem_euclid(1.0)),
        ))
    }

    pub fn shift(word: Vec<u8>) -> Point {
        Point::Shift {
            word: Arc::new(word),
            cursor: 0,
        }
    }

    /// Symbol at offset `i ≥ 0` from the cursor (shift points only).
    pub fn symbol(&self, i: usize) -> Option<u8> {
        match self {
            Point::Shift { word, cursor } => Some(word[(cursor + i) % word.len()]),
            _ => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Torus(v) => {
                write!(f, "(")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c:.6}")?;
                }
                write!(f, ")")
            }
            Point::Shift { word, cursor } => {
                let shown: String = (0..word.len().min(12))
                    .map(|i| char::from(b'0' + word[(cursor + i) % word.len()]))
                    .collect();
                write!(f, "[{shown}…]")
            }
        }
    }
}

type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
type Metric = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;
type Generator = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Point + Send + Sync>;

/// A linear cocycle over a Lipschitz base transformation.
///
/// Values are immutable after construction and cheap to clone; the closures
/// are deterministic and side-effect free, so a system may be shared across
/// threads freely.
#[derive(Clone)]
pub struct CocycleSystem {
    dim: usize,
    invertible: bool,
    lipschitz_l: f64,
    holder_c0: f64,
    holder_nu: f64,
    label: String,
    step: PointMap,
    inverse_step: Option<PointMap>,
    metric: Metric,
    generator: Generator,
    sampler: Sampler,
}

impl fmt::Debug for CocycleSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocycleSystem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("invertible", &self.invertible)
            .field("lipschitz_l", &self.lipschitz_l)
            .field("holder_c0", &self.holder_c0)
            .field("holder_nu", &self.holder_nu)
            .finish()
    }
}

pub struct CocycleBuilder {
    sys: CocycleSystem,
}

impl CocycleSystem {
    /// Starts a builder for a system of cocycle dimension `dim`.
    ///
    /// `lipschitz_l` is the constant `L` of the iterate-Hölder lemma: it must
    /// bound both the Lipschitz constant of the base step and the growth
    /// `‖Aⁿ(x)‖^{1/n}` of the cocycle. `(holder_c0, holder_nu)` is the Hölder
    /// pair of the generator in the system's base metric.
    #[allow(clippy::too_many_arguments)]
    pub fn builder(
        dim: usize,
        label: impl Into<String>,
        lipschitz_l: f64,
        holder_c0: f64,
        holder_nu: f64,
        step: impl Fn(&Point) -> Point + Send + Sync + 'static,
        metric: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
        generator: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> CocycleBuilder {
        CocycleBuilder {
            sys: CocycleSystem {
                dim,
                invertible: false,
                lipschitz_l,
                holder_c0,
                holder_nu,
                label: label.into(),
                step: Arc::new(step),
                inverse_step: None,
                metric: Arc::new(metric),
                generator: Arc::new(generator),
                sampler: Arc::new(|_| Point::torus(&[0.0])),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn invertible(&self) -> bool {
        self.invertible
    }

    pub fn lipschitz_l(&self) -> f64 {
        self.lipschitz_l
    }

    pub fn holder_c0(&self) -> f64 {
        self.holder_c0
    }

    pub fn holder_nu(&self) -> f64 {
        self.holder_nu
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn step(&self, x: &Point) -> Point {
        (self.step)(x)
    }

    pub fn inverse_step(&self, x: &Point) -> Result<Point, CocycleError> {
        match &self.inverse_step {
            Some(inv) => Ok(inv(x)),
            None => Err(CocycleError::NotInvertible),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        (self.metric)(x, y)
    }

    pub fn generator_at(&self, x: &Point) -> DMatrix<f64> {
        (self.generator)(x)
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        (self.sampler)(rng)
    }

    /// The time-reversed system `x ↦ f⁻¹x` with generator `A(f⁻¹x)⁻¹`, whose
    /// forward products realize `A⁻ⁿ(x)`.
    pub fn reversed(&self) -> Result<CocycleSystem, CocycleError> {
        let inv = self
            .inverse_step
            .clone()
            .ok_or(CocycleError::NotInvertible)?;
        let generator = self.generator.clone();
        let inv_for_gen = inv.clone();
        let rev_gen: Generator = Arc::new(move |x: &Point| {
            let pre = inv_for_gen(x);
            generator(&pre)
                .try_inverse()
                .expect("generator must be invertible")
        });
        Ok(CocycleSystem {
            dim: self.dim,
            invertible: true,
            lipschitz_l: self.lipschitz_l,
            holder_c0: self.holder_c0,
            holder_nu: self.holder_nu,
            label: format!("{} (reversed)", self.label),
            step: inv.clone(),
            inverse_step: Some(self.step.clone()),
            metric: self.metric.clone(),
            generator: rev_gen,
            sampler: self.sampler.clone(),
        })
    }

    /// Spot-checks the construction invariants on sampled points: metric
    /// symmetry and zero diagonal, generator determinants, and (when
    /// invertible) `step ∘ inverse_step = id` to metric tolerance `1e-10`.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<(), CocycleError> {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point> = (0..samples.max(2)).map(|_| self.sample(&mut rng)).collect();
        for (i, x) in pts.iter().enumerate() {
            if self.distance(x, x).abs() > 1e-12 {
                return Err(CocycleError::DomainError(
                    "metric is nonzero on the diagonal".into(),
                ));
            }
            let a = self.generator_at(x);
            let det = a.determinant();
            if det.abs() <= 1e-14 {
                return Err(CocycleError::DomainError(format!(
                    "generator determinant {det:.3e} too close to zero"
                )));
            }
            if self.invertible {
                let fwd = self.step(x);
                let back = self.inverse_step(&fwd)?;
                if self.distance(x, &back) > 1e-10 {
                    return Err(CocycleError::DomainError(
                        "step and inverse_step do not compose to the identity".into(),
                    ));
                }
            }
            for y in pts.iter().skip(i + 1) {
                let dxy = self.distance(x, y);
                let dyx = self.distance(y, x);
                if (dxy - dyx).abs() > 1e-12 * dxy.max(1.0) || dxy < 0.0 {
                    return Err(CocycleError::DomainError(
                        "metric is not symmetric and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl CocycleBuilder {
    pub fn invertible(
        mut self,
        inverse_step: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        self.sys.invertible = true;
        self.sys.inverse_step = Some(Arc::new(inverse_step));
        self
    }

    pub fn sampler(
        mut self,
        sampler: impl Fn(&mut ChaCha8Rng) -> Point + Send + Sync + 'static,
    ) -> Self {
        self.sys.sampler = Arc::new(sampler);
        self
    }

    pub fn build(self) -> CocycleSystem {
        self.sys
    }
}

/// The forward orbit segment `x, f(x), …, f^{len−1}(x)`.
pub fn orbit_forward(sys: &CocycleSystem, x: &Point, len: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(len);
    let mut cur = x.clone();
    for _ in 0..len {
        let next = sys.step(&cur);
        pts.push(cur);
        cur = next;
    }
    pts
}

/// The backward orbit segment `f⁻¹(x), …, f^{−len}(x)`.
pub fn orbit_backward(
    sys: &CocycleSystem,
    x: &Point,
    len: usize,
) -> Result<Vec<Point>, CocycleError> {
    let mut pts = Vec::with_capacity(len);
    let mut cur = x.clone();
    for _ in 0..len {
        cur = sys.inverse_step(&cur)?;
        pts.push(cur.clone());
    }
    Ok(pts)
}

/// The `n`-fold cocycle product `Aⁿ(x)`, for `n` of either sign.
pub fn iterate(sys: &CocycleSystem, x: &Point, n: i64) -> Result<DMatrix<f64>, CocycleError> {
    let d = sys.dim();
    let mut product = DMatrix::identity(d, d);
    if n >= 0 {
        let mut cur = x.clone();
        for step in 0..n {
            product = sys.generator_at(&cur) * product;
            if linalg::max_abs(&product) > OVERFLOW_LIMIT {
                return Err(CocycleError::Overflow { at_step: step + 1 });
            }
            cur = sys.step(&cur);
        }
    } else {
        if !sys.invertible() {
            return Err(CocycleError::NotInvertible);
        }
        let mut cur = x.clone();
        for step in 0..(-n) {
            cur = sys.inverse_step(&cur)?;
            let inv = sys
                .generator_at(&cur)
                .try_inverse()
                .ok_or_else(|| CocycleError::DomainError("singular generator".into()))?;
            product = inv * product;
            if linalg::max_abs(&product) > OVERFLOW_LIMIT {
                return Err(CocycleError::Overflow {
                    at_step: -(step + 1),
                });
            }
        }
    }
    Ok(product)
}

/// The constant `c₁ = max{e^ε, L^{1+ν}, 1 + c₀}` bounding the Hölder constant
/// of the iterate `Aⁿ` by `c₁ⁿ`.
pub fn holder_iterate_constant(c0: f64, nu: f64, l: f64, eps: f64) -> Result<f64, CocycleError> {
    if c0 <= 0.0 {
        return Err(CocycleError::DomainError(format!("need c0 > 0, got {c0}")));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(CocycleError::DomainError(format!(
            "need nu in (0,1], got {nu}"
        )));
    }
    if l < 1.0 {
        return Err(CocycleError::DomainError(format!("need L >= 1, got {l}")));
    }
    if eps < 0.0 {
        return Err(CocycleError::DomainError(format!(
            "need eps >= 0, got {eps}"
        )));
    }
    Ok(eps.exp().max(l.powf(1.0 + nu)).max(1.0 + c0))
}

/// Checks `‖Aⁿ(x) − Aⁿ(y)‖ ≤ c₁ⁿ d(x, y)^ν` for every supplied pair and all
/// `1 ≤ n ≤ n_max`, with `c₁` taken at `ε = 0` from the system's declared
/// `(c₀, ν, L)`. The report carries the worst margin `rhs − lhs`.
pub fn verify_iterate_holder(
    sys: &CocycleSystem,
    pairs: &[(Point, Point)],
    n_max: usize,
) -> Result<BoundReport, CocycleError> {
    if n_max == 0 {
        return Err(CocycleError::DomainError("need n_max >= 1".into()));
    }
    let c1 = holder_iterate_constant(sys.holder_c0(), sys.holder_nu(), sys.lipschitz_l(), 0.0)?;
    let mut worst: Option<(f64, f64, usize)> = None; // (margin, bound, n)
    let mut all_pass = true;
    for (idx, (x, y)) in pairs.iter().enumerate() {
        let d = sys.distance(x, y);
        if d <= 0.0 {
            return Err(CocycleError::DomainError(format!(
                "pair {idx} has non-positive base distance {d}"
            )));
        }
        let d_nu = d.powf(sys.holder_nu());
        let mut px = DMatrix::identity(sys.dim(), sys.dim());
        let mut py = px.clone();
        let mut cx = x.clone();
        let mut cy = y.clone();
        let mut rhs = d_nu;
        for n in 1..=n_max {
            px = sys.generator_at(&cx) * px;
            py = sys.generator_at(&cy) * py;
            if linalg::max_abs(&px).max(linalg::max_abs(&py)) > OVERFLOW_LIMIT {
                return Err(CocycleError::Overflow { at_step: n as i64 });
            }
            cx = sys.step(&cx);
            cy = sys.step(&cy);
            rhs *= c1;
            let lhs = linalg::opnorm(&(&px - &py));
            let margin = rhs - lhs;
            if lhs > rhs * (1.0 + 1e-9) {
                all_pass = false;
            }
            if worst.is_none_or(|(m, _, _)| margin < m) {
                worst = Some((margin, rhs, n));
            }
        }
    }
    let (margin, bound, n) = worst.unwrap_or((0.0, 0.0, 0));
    let mut report = BoundReport::evaluate(
        bound,
        bound - margin,
        format!(
            "iterate Hölder check on {} pairs up to n = {n_max}, worst at n = {n}, c1 = {c1:.6}",
            pairs.len()
        ),
    );
    report.passed = all_pass;
    Ok(report)
}

//! Bundled example systems with known ground truth.
//!
//! Each constructor returns a [`CocycleSystem`] whose regularity metadata
//! `(c₀, ν, L)` is derived analytically, so the iterate-Hölder checks can be
//! run against honest constants:
//!
//! * torus bases (cat map, doubling, rotation) carry the Euclidean
//!   minimum-image metric, under which a linear toral map has Lipschitz
//!   constant equal to its largest singular value;
//! * one-sided shift spaces carry `d(x, y) = 2^{−(first disagreement)}`,
//!   under which the shift is 2-Lipschitz and a generator depending only on
//!   the first symbol is `(max pairwise ‖M_i − M_j‖, 1)`-Hölder;
//! * Hölder scalar fields are lacunary cosine sums on the torus and
//!   `Σ s_k 2^{−νk}` on shift spaces, both with closed-form ν-Hölder
//!   constants.
//!
//! The constant `L` stored on a system is the one required by the
//! iterate-Hölder lemma: it bounds the base Lipschitz constant *and* the
//! per-step growth `sup‖A(x)‖`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cocycle::{CocycleSystem, Point};
use crate::linalg;

#[derive(Debug, Error, Clone)]
pub enum SystemError {
    #[error("invalid system spec: {0}")]
    InvalidSpec(String),
}

/// Base dynamics for constant-generator torus systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    /// Hyperbolic toral automorphism `[[2,1],[1,1]]` on T²; invertible.
    CatMap,
    /// Angle doubling on the circle; non-invertible.
    Doubling,
    /// Irrational rotation on the circle; invertible isometry.
    Rotation,
}

/// Specification of a bundled system; the unit serialized in experiment
/// config files.
#[derive(Debug, Clone)]
pub enum SystemSpec {
    /// Constant generator over a torus base.
    Constant {
        matrix: DMatrix<f64>,
        base: BaseKind,
    },
    /// The cat map with its own derivative as generator.
    CatMap,
    /// Constant generator over the doubling map.
    Doubling { matrix: DMatrix<f64> },
    /// Generator locally constant on the first symbol of a one-sided shift.
    ShiftIid {
        matrices: Vec<DMatrix<f64>>,
        seed: u64,
    },
    /// `D·R(ρ·θ(x))` over a one-sided shift with the ν-Hölder field
    /// `θ(x) = Σ s_k 2^{−νk}`.
    ShiftHolder {
        diag: DVector<f64>,
        rho: f64,
        nu: f64,
        alphabet: u8,
        seed: u64,
    },
    /// `D·R(ρ·θ(x))` over the cat map with a lacunary cosine field θ of
    /// exact Hölder exponent ν.
    PerturbedDiagonal {
        diag: DVector<f64>,
        rho: f64,
        nu: f64,
        seed: u64,
    },
    /// Time-τ discretization of the block-diagonal linear flow with the
    /// given continuous-time rates.
    LinearFlow { rates: DVector<f64>, tau: f64 },
}

impl SystemSpec {
    /// Exact Lyapunov exponents with multiplicity where a closed form
    /// exists, sorted ascending.
    pub fn analytic_exponents(&self) -> Option<Vec<f64>> {
        let from_matrix = |m: &DMatrix<f64>| {
            let mut xs: Vec<f64> = m
                .clone()
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm().ln())
                .collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs
        };
        match self {
            SystemSpec::Constant { matrix, .. } | SystemSpec::Doubling { matrix } => {
                Some(from_matrix(matrix))
            }
            SystemSpec::CatMap => Some(from_matrix(&cat_matrix())),
            SystemSpec::PerturbedDiagonal { diag, rho, .. } if *rho == 0.0 => {
                let mut xs: Vec<f64> = diag.iter().map(|d| d.abs().ln()).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Some(xs)
            }
            SystemSpec::LinearFlow { rates, tau } => {
                let mut xs: Vec<f64> = rates.iter().map(|r| r * tau).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Some(xs)
            }
            _ => None,
        }
    }
}

pub fn cat_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])
}

/// Euclidean minimum-image metric on the torus `[0,1)^m`.
pub fn torus_metric(x: &Point, y: &Point) -> f64 {
    match (x, y) {
        (Point::Torus(a), Point::Torus(b)) => {
            assert_eq!(a.len(), b.len(), "torus points of mixed dimension");
            let mut sum = 0.0;
            for i in 0..a.len() {
                let diff = (a[i] - b[i]).rem_euclid(1.0);
                let circ = diff.min(1.0 - diff);
                sum += circ * circ;
            }
            sum.sqrt()
        }
        _ => panic!("torus metric applied to non-torus points"),
    }
}

/// One-sided shift metric `2^{−(first index of disagreement)}`; zero for
/// identical periodic sequences.
pub fn shift_metric(x: &Point, y: &Point) -> f64 {
    match (x, y) {
        (
            Point::Shift {
                word: wx,
                cursor: cx,
            },
            Point::Shift {
                word: wy,
                cursor: cy,
            },
        ) => {
            let horizon = lcm(wx.len(), wy.len()).min(1 << 20);
            for i in 0..horizon {
                if wx[(cx + i) % wx.len()] != wy[(cy + i) % wy.len()] {
                    return 0.5_f64.powi(i as i32);
                }
            }
            0.0
        }
        _ => panic!("shift metric applied to non-shift points"),
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(mut a: usize, mut b: usize) -> usize {
        while b != 0 {
            let t = b;
            b = a % b;
            a = t;
        }
        a
    }
    a / gcd(a, b) * b
}

fn rotation2(angle: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()])
}

/// A lacunary cosine field on the torus with exact ν-Hölder control:
///
/// ```text
/// θ(x) = Σ_j a_j cos(2π m_j·x + φ_j),   a_j = ‖m_j‖^{−ν},
/// ```
///
/// with dyadic frequencies `m_j`. From `|cos u − cos v| ≤ min(|u−v|, 2)` and
/// `min(u, 2) ≤ 2^{1−ν} u^ν` one gets the closed-form Hölder constant
/// `c_θ = 2^{1−ν} (2π)^ν Σ_j a_j ‖m_j‖^ν = 2^{1−ν} (2π)^ν J`.
#[derive(Debug, Clone)]
struct TorusHolderField {
    freqs: Vec<DVector<f64>>,
    amps: Vec<f64>,
    phases: Vec<f64>,
}

impl TorusHolderField {
    fn new(torus_dim: usize, nu: f64, levels: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut freqs = Vec::with_capacity(levels);
        let mut amps = Vec::with_capacity(levels);
        let mut phases = Vec::with_capacity(levels);
        for j in 0..levels {
            let scale = 2.0_f64.powi(j as i32);
            let dir = DVector::from_fn(torus_dim, |i, _| if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            let freq = scale * dir;
            amps.push(freq.norm().powf(-nu));
            phases.push(rng.gen::<f64>() * std::f64::consts::TAU);
            freqs.push(freq);
        }
        TorusHolderField {
            freqs,
            amps,
            phases,
        }
    }

    fn eval(&self, x: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for j in 0..self.freqs.len() {
            s += self.amps[j]
                * (std::f64::consts::TAU * self.freqs[j].dot(x) + self.phases[j]).cos();
        }
        s
    }

    fn holder_constant(&self, nu: f64) -> f64 {
        let sum: f64 = self
            .freqs
            .iter()
            .zip(&self.amps)
            .map(|(m, a)| a * m.norm().powf(nu))
            .sum();
        2.0_f64.powf(1.0 - nu) * std::f64::consts::TAU.powf(nu) * sum
    }
}

fn torus_step(matrix: DMatrix<f64>) -> impl Fn(&Point) -> Point {
    move |p| match p {
        Point::Torus(v) => Point::Torus((&matrix * v).map(|c| c.rem_euclid(1.0))),
        other => other.clone(),
    }
}

fn torus_translation(offset: f64) -> impl Fn(&Point) -> Point {
    move |p| match p {
        Point::Torus(v) => Point::Torus(v.map(|c| (c + offset).rem_euclid(1.0))),
        other => other.clone(),
    }
}

fn torus_sampler(dim: usize) -> impl Fn(&mut ChaCha8Rng) -> Point {
    move |rng| Point::Torus(DVector::from_fn(dim, |_, _| rng.gen::<f64>()))
}

const SHIFT_WORD_LEN: usize = 4096;

fn shift_sampler(alphabet: u8) -> impl Fn(&mut ChaCha8Rng) -> Point {
    move |rng| {
        let word: Vec<u8> = (0..SHIFT_WORD_LEN)
            .map(|_| rng.gen_range(0..alphabet))
            .collect();
        Point::shift(word)
    }
}

fn shift_step(p: &Point) -> Point {
    match p {
        Point::Shift { word, cursor } => Point::Shift {
            word: word.clone(),
            cursor: (cursor + 1) % word.len(),
        },
        other => other.clone(),
    }
}

/// A pair of shift points agreeing on exactly `agree` leading symbols, for
/// Hölder experiments: base distance `2^{−agree}` by construction.
pub fn shift_pair_with_agreement(
    alphabet: u8,
    agree: usize,
    rng: &mut ChaCha8Rng,
) -> (Point, Point) {
    assert!(agree < SHIFT_WORD_LEN);
    let x: Vec<u8> = (0..SHIFT_WORD_LEN)
        .map(|_| rng.gen_range(0..alphabet))
        .collect();
    let mut y = x.clone();
    for item in y.iter_mut().skip(agree) {
        *item = rng.gen_range(0..alphabet);
    }
    // force disagreement exactly at index `agree`
    y[agree] = (x[agree] + 1 + rng.gen_range(0..alphabet.max(2) - 1)) % alphabet.max(2);
    (Point::shift(x), Point::shift(y))
}

/// Displaces a torus point by distance `r` in a random direction; exact in
/// the minimum-image metric for `r < 1/2`.
pub fn torus_offset(x: &Point, r: f64, rng: &mut ChaCha8Rng) -> Point {
    match x {
        Point::Torus(v) => {
            let dir = loop {
                let cand = DVector::from_fn(v.len(), |_, _| rng.gen::<f64>() * 2.0 - 1.0);
                let n = cand.norm();
                if n > 1e-6 {
                    break cand / n;
                }
            };
            Point::Torus((v + r * dir).map(|c| c.rem_euclid(1.0)))
        }
        other => other.clone(),
    }
}

type BaseStep = Box<dyn Fn(&Point) -> Point + Send + Sync>;

/// (step, inverse step, torus dimension, Lipschitz constant)
fn base_dynamics(base: BaseKind) -> (BaseStep, Option<BaseStep>, usize, f64) {
    match base {
        BaseKind::CatMap => {
            let m = cat_matrix();
            let lip = linalg::opnorm(&m);
            let inv = m.clone().try_inverse().unwrap();
            (
                Box::new(torus_step(m)),
                Some(Box::new(torus_step(inv))),
                2,
                lip,
            )
        }
        BaseKind::Doubling => {
            let m = DMatrix::from_element(1, 1, 2.0);
            (Box::new(torus_step(m)), None, 1, 2.0)
        }
        BaseKind::Rotation => {
            let omega = 0.754_877_666_246_693_f64;
            (
                Box::new(torus_translation(omega)),
                Some(Box::new(torus_translation(-omega))),
                1,
                1.0,
            )
        }
    }
}

fn check_invertible_matrix(m: &DMatrix<f64>, what: &str) -> Result<(), SystemError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(SystemError::InvalidSpec(format!(
            "{what} must be square and nonempty"
        )));
    }
    if m.determinant().abs() <= 1e-14 {
        return Err(SystemError::InvalidSpec(format!(
            "{what} must be invertible"
        )));
    }
    Ok(())
}

fn constant_over_base(
    matrix: DMatrix<f64>,
    base: BaseKind,
    label: String,
) -> Result<CocycleSystem, SystemError> {
    check_invertible_matrix(&matrix, "generator matrix")?;
    let (step, inverse, torus_dim, base_lip) = base_dynamics(base);
    let dim = matrix.nrows();
    let l = base_lip.max(linalg::opnorm(&matrix)).max(1.0);
    let gen = matrix.clone();
    let builder = CocycleSystem::builder(
        dim,
        label,
        l,
        1e-9,
        1.0,
        move |p| step(p),
        torus_metric,
        move |_| gen.clone(),
    )
    .sampler(torus_sampler(torus_dim));
    Ok(match inverse {
        Some(inv) => builder.invertible(move |p| inv(p)).build(),
        None => builder.build(),
    })
}

/// Builds the [`CocycleSystem`] described by a [`SystemSpec`], with
/// spot-check validation of the construction invariants.
pub fn make_system(spec: &SystemSpec) -> Result<CocycleSystem, SystemError> {
    let sys = match spec {
        SystemSpec::Constant { matrix, base } => constant_over_base(
            matrix.clone(),
            *base,
            format!("constant generator over {base:?}"),
        )?,
        SystemSpec::CatMap => {
            constant_over_base(cat_matrix(), BaseKind::CatMap, "cat map derivative".into())?
        }
        SystemSpec::Doubling { matrix } => constant_over_base(
            matrix.clone(),
            BaseKind::Doubling,
            "constant generator over doubling".into(),
        )?,
        SystemSpec::ShiftIid { matrices, seed } => {
            if matrices.len() < 2 || matrices.len() > 255 {
                return Err(SystemError::InvalidSpec(
                    "shift_iid needs between 2 and 255 matrices".into(),
                ));
            }
            let dim = matrices[0].nrows();
            for (i, m) in matrices.iter().enumerate() {
                check_invertible_matrix(m, &format!("matrix {i}"))?;
                if m.nrows() != dim {
                    return Err(SystemError::InvalidSpec(
                        "shift_iid matrices must share a dimension".into(),
                    ));
                }
            }
            // locally constant on the first symbol: Hölder with ν = 1 and
            // c0 = max pairwise distance in the 2^{-n} metric
            let mut c0: f64 = 0.0;
            let mut sup_norm: f64 = 1.0;
            for (i, a) in matrices.iter().enumerate() {
                sup_norm = sup_norm.max(linalg::opnorm(a));
                for b in matrices.iter().skip(i + 1) {
                    c0 = c0.max(linalg::opnorm(&(a - b)));
                }
            }
            let c0 = c0.max(1e-12);
            let mats = matrices.clone();
            let alphabet = matrices.len() as u8;
            let _ = seed;
            CocycleSystem::builder(
                dim,
                "iid shift cocycle",
                2.0_f64.max(sup_norm),
                c0,
                1.0,
                shift_step,
                shift_metric,
                move |p| {
                    let s = p.symbol(0).expect("shift point") as usize;
                    mats[s % mats.len()].clone()
                },
            )
            .sampler(shift_sampler(alphabet))
            .build()
        }
        SystemSpec::ShiftHolder {
            diag,
            rho,
            nu,
            alphabet,
            seed,
        } => {
            if diag.len() != 2 {
                return Err(SystemError::InvalidSpec(
                    "shift_holder uses a 2x2 rotated diagonal generator".into(),
                ));
            }
            if !(*nu > 0.0 && *nu <= 1.0) || *rho < 0.0 || *alphabet < 2 {
                return Err(SystemError::InvalidSpec(
                    "need nu in (0,1], rho >= 0, alphabet >= 2".into(),
                ));
            }
            let d_mat = DMatrix::from_diagonal(diag);
            check_invertible_matrix(&d_mat, "diagonal")?;
            let d_norm = linalg::opnorm(&d_mat);
            // θ(x) = Σ_k s_k 2^{−νk}: agreeing to index m pins the tail, so
            // |θ(x) − θ(y)| ≤ (K−1)/(1−2^{−ν}) d(x,y)^ν
            let c_theta = (*alphabet as f64 - 1.0) / (1.0 - 2.0_f64.powf(-nu));
            let c0 = (d_norm * rho * c_theta).max(1e-12);
            let terms = ((40.0 / nu).ceil() as usize).min(2048);
            let (rho_c, nu_c) = (*rho, *nu);
            let _ = seed;
            CocycleSystem::builder(
                2,
                "Hölder shift cocycle",
                2.0_f64.max(d_norm),
                c0,
                *nu,
                shift_step,
                shift_metric,
                move |p| {
                    let mut theta = 0.0;
                    for k in 0..terms {
                        theta += p.symbol(k).expect("shift point") as f64
                            * 2.0_f64.powf(-nu_c * k as f64);
                    }
                    &d_mat * rotation2(rho_c * theta)
                },
            )
            .sampler(shift_sampler(*alphabet))
            .build()
        }
        SystemSpec::PerturbedDiagonal {
            diag,
            rho,
            nu,
            seed,
        } => {
            if diag.len() != 2 {
                return Err(SystemError::InvalidSpec(
                    "perturbed_diagonal uses a 2x2 rotated diagonal generator".into(),
                ));
            }
            if !(*nu > 0.0 && *nu <= 1.0) || *rho < 0.0 {
                return Err(SystemError::InvalidSpec(
                    "need nu in (0,1], rho >= 0".into(),
                ));
            }
            let d_mat = DMatrix::from_diagonal(diag);
            check_invertible_matrix(&d_mat, "diagonal")?;
            let d_norm = linalg::opnorm(&d_mat);
            let field = TorusHolderField::new(2, *nu, 18, *seed);
            let c0 = (d_norm * rho * field.holder_constant(*nu)).max(1e-12);
            let (step, inverse, torus_dim, base_lip) = base_dynamics(BaseKind::CatMap);
            let (rho_c, _nu_c) = (*rho, *nu);
            CocycleSystem::builder(
                2,
                "perturbed diagonal over cat map",
                base_lip.max(d_norm).max(1.0),
                c0,
                *nu,
                move |p| step(p),
                torus_metric,
                move |p| match p {
                    Point::Torus(v) => &d_mat * rotation2(rho_c * field.eval(v)),
                    _ => unreachable!("torus system"),
                },
            )
            .sampler(torus_sampler(torus_dim))
            .invertible({
                let inv = inverse.expect("cat map is invertible");
                move |p| inv(p)
            })
            .build()
        }
        SystemSpec::LinearFlow { rates, tau } => flow_time_map(rates, *tau)?,
    };
    sys.validate(8, 0xB10C)
        .map_err(|e| SystemError::InvalidSpec(format!("construction self-check failed: {e}")))?;
    Ok(sys)
}

/// Time-τ discretization of the linear flow with block exponential rates:
/// the cocycle `x ↦ exp(τ·diag(rates))` over an ergodic circle rotation.
/// Per-step Lyapunov exponents are exactly `τ·rates`; the label records the
/// time rescaling.
pub fn flow_time_map(rates: &DVector<f64>, tau: f64) -> Result<CocycleSystem, SystemError> {
    if tau <= 0.0 || tau.is_nan() {
        return Err(SystemError::InvalidSpec(format!("need tau > 0, got {tau}")));
    }
    if rates.is_empty() {
        return Err(SystemError::InvalidSpec("need at least one rate".into()));
    }
    let gen = DMatrix::from_diagonal(&rates.map(|r| (tau * r).exp()));
    constant_over_base(
        gen,
        BaseKind::Rotation,
        format!("linear flow sampled at tau = {tau}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{iterate, verify_iterate_holder};
    use crate::oseledets::lyapunov_spectrum;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use rand::SeedableRng;

    const CAT_L: f64 = 2.618_033_988_749_895; // (3+√5)/2

    #[test]
    fn constant_over_cat_metadata() {
        let spec = SystemSpec::Constant {
            matrix: DMatrix::from_diagonal(&dvector![2.0, 0.5]),
            base: BaseKind::CatMap,
        };
        let sys = make_system(&spec).unwrap();
        assert!(sys.invertible());
        assert_abs_diff_eq!(sys.lipschitz_l(), CAT_L, epsilon = 1e-12);
    }

    #[test]
    fn doubling_metadata() {
        let spec = SystemSpec::Doubling {
            matrix: DMatrix::from_diagonal(&dvector![2.0, 0.5]),
        };
        let sys = make_system(&spec).unwrap();
        assert!(!sys.invertible());
        assert_abs_diff_eq!(sys.lipschitz_l(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn shift_iid_c0_from_pairwise_distance() {
        let spec = SystemSpec::ShiftIid {
            matrices: vec![DMatrix::from_diagonal(&dvector![2.0, 0.5]), rotation2(0.3)],
            seed: 1,
        };
        let sys = make_system(&spec).unwrap();
        let expected =
            linalg::opnorm(&(DMatrix::from_diagonal(&dvector![2.0, 0.5]) - rotation2(0.3)));
        assert_abs_diff_eq!(sys.holder_c0(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.holder_nu(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(make_system(&SystemSpec::LinearFlow {
            rates: dvector![-1.0, 1.0],
            tau: 0.0
        })
        .is_err());
        assert!(make_system(&SystemSpec::Constant {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            base: BaseKind::CatMap,
        })
        .is_err());
        assert!(make_system(&SystemSpec::PerturbedDiagonal {
            diag: dvector![4.0, 0.25],
            rho: 0.01,
            nu: 1.5,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn flow_time_map_rescales_exponents() {
        for tau in [0.5, 1.0, 2.0] {
            let sys = flow_time_map(&dvector![-1.0, 1.0], tau).unwrap();
            let x = Point::torus(&[0.2]);
            let s = lyapunov_spectrum(&sys, &x, 128, 0.05).unwrap();
            assert_abs_diff_eq!(s.exponents()[0], -tau, epsilon = 1e-10);
            assert_abs_diff_eq!(s.exponents()[1], tau, epsilon = 1e-10);
        }
    }

    #[test]
    fn shift_metric_is_two_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for agree in [0usize, 1, 3, 8] {
            let (x, y) = shift_pair_with_agreement(2, agree, &mut rng);
            let d = shift_metric(&x, &y);
            assert_abs_diff_eq!(d, 0.5_f64.powi(agree as i32), epsilon = 1e-15);
            let (sx, sy) = (shift_step(&x), shift_step(&y));
            assert!(shift_metric(&sx, &sy) <= 2.0 * d * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ground_truth_exponents_recovered() {
        let specs = [
            SystemSpec::Constant {
                matrix: DMatrix::from_diagonal(&dvector![2.0, 0.5]),
                base: BaseKind::CatMap,
            },
            SystemSpec::PerturbedDiagonal {
                diag: dvector![4.0, 0.25],
                rho: 0.0,
                nu: 0.5,
                seed: 3,
            },
            SystemSpec::LinearFlow {
                rates: dvector![-1.0, 1.0],
                tau: 1.0,
            },
        ];
        for spec in specs {
            let sys = make_system(&spec).unwrap();
            let x = match spec {
                SystemSpec::LinearFlow { .. } => Point::torus(&[0.1]),
                _ => Point::torus(&[0.21, 0.47]),
            };
            let s = lyapunov_spectrum(&sys, &x, 256, 0.05).unwrap();
            let truth = spec.analytic_exponents().unwrap();
            assert_eq!(s.dim(), truth.len());
            let mut measured = Vec::new();
            for (chi, m) in s.exponents().iter().zip(s.multiplicities()) {
                for _ in 0..*m {
                    measured.push(*chi);
                }
            }
            for (a, b) in measured.iter().zip(&truth) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn bundled_systems_pass_iterate_holder() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let torus_pairs: Vec<(Point, Point)> = (0..40)
            .map(|_| {
                let x = Point::Torus(DVector::from_fn(2, |_, _| rng.gen::<f64>()));
                let y = torus_offset(&x, 10.0_f64.powf(-rng.gen_range(1.0..6.0)), &mut rng);
                (x, y)
            })
            .collect();
        let shift_pairs: Vec<(Point, Point)> = (0..40)
            .map(|_| shift_pair_with_agreement(2, rng.gen_range(0..16), &mut rng))
            .collect();
        let cases: Vec<(SystemSpec, &[(Point, Point)])> = vec![
            (SystemSpec::CatMap, &torus_pairs),
            (
                SystemSpec::Constant {
                    matrix: DMatrix::from_diagonal(&dvector![2.0, 0.5]),
                    base: BaseKind::CatMap,
                },
                &torus_pairs,
            ),
            (
                SystemSpec::PerturbedDiagonal {
                    diag: dvector![4.0, 0.25],
                    rho: 0.01,
                    nu: 0.5,
                    seed: 7,
                },
                &torus_pairs,
            ),
            (
                SystemSpec::ShiftIid {
                    matrices: vec![DMatrix::from_diagonal(&dvector![2.0, 0.5]), rotation2(0.3)],
                    seed: 1,
                },
                &shift_pairs,
            ),
            (
                SystemSpec::ShiftHolder {
                    diag: dvector![2.0, 0.5],
                    rho: 0.05,
                    nu: 0.5,
                    alphabet: 2,
                    seed: 2,
                },
                &shift_pairs,
            ),
        ];
        for (spec, pairs) in cases {
            let sys = make_system(&spec).unwrap();
            let rep = verify_iterate_holder(&sys, pairs, 10).unwrap();
            assert!(rep.passed, "iterate-Hölder failed for {spec:?}: {rep:?}");
        }
    }

    #[test]
    fn iid_rotations_single_zero_cluster() {
        let spec = SystemSpec::ShiftIid {
            matrices: vec![rotation2(0.3), rotation2(0.7)],
            seed: 4,
        };
        let sys = make_system(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = sys.sample(&mut rng);
        let s = lyapunov_spectrum(&sys, &x, 256, 0.05).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.multiplicities(), &[2]);
        assert!(s.exponents()[0].abs() < 1e-12);
    }

    #[test]
    fn doubling_and_flow_pass_iterate_holder() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let circle_pairs: Vec<(Point, Point)> = (0..40)
            .map(|_| {
                let x = Point::torus(&[rng.gen::<f64>()]);
                let y = torus_offset(&x, 10.0_f64.powf(-rng.gen_range(1.0..6.0)), &mut rng);
                (x, y)
            })
            .collect();
        for spec in [
            SystemSpec::Doubling {
                matrix: DMatrix::from_diagonal(&dvector![4.0, 0.25]),
            },
            SystemSpec::LinearFlow {
                rates: dvector![-1.0, 1.0],
                tau: 1.0,
            },
        ] {
            let sys = make_system(&spec).unwrap();
            let rep = verify_iterate_holder(&sys, &circle_pairs, 10).unwrap();
            assert!(rep.passed, "iterate-Hölder failed for {spec:?}");
        }
    }

    #[test]
    fn shift_iid_exhaustive_words_holder() {
        // every pair of length-8 words, exact metric, n up to 8: the product
        // over the cylinder structure is checked exhaustively
        let m0 = DMatrix::from_diagonal(&dvector![2.0, 0.5]);
        let m1 = rotation2(0.3);
        let spec = SystemSpec::ShiftIid {
            matrices: vec![m0.clone(), m1.clone()],
            seed: 1,
        };
        let sys = make_system(&spec).unwrap();
        let c1 = crate::cocycle::holder_iterate_constant(
            sys.holder_c0(),
            sys.holder_nu(),
            sys.lipschitz_l(),
            0.0,
        )
        .unwrap();
        let words: Vec<Vec<u8>> = (0..256u16)
            .map(|w| (0..8).map(|b| ((w >> b) & 1) as u8).collect())
            .collect();
        let products: Vec<Vec<DMatrix<f64>>> = words
            .iter()
            .map(|w| {
                let mut acc = DMatrix::identity(2, 2);
                let mut out = Vec::with_capacity(8);
                for &s in w {
                    acc = if s == 0 { &m0 * &acc } else { &m1 * &acc };
                    out.push(acc.clone());
                }
                out
            })
            .collect();
        for (i, wi) in words.iter().enumerate() {
            for (j, wj) in words.iter().enumerate().skip(i + 1) {
                let first_diff = wi.iter().zip(wj).position(|(a, b)| a != b).unwrap();
                let d = 0.5_f64.powi(first_diff as i32);
                for n in 1..=8 {
                    let lhs = linalg::opnorm(&(&products[i][n - 1] - &products[j][n - 1]));
                    let rhs = c1.powi(n as i32) * d;
                    assert!(
                        lhs <= rhs * (1.0 + 1e-9),
                        "word pair ({i},{j}) at n={n}: {lhs} > {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn perturbed_diagonal_generator_is_holder() {
        // direct check of ‖A(x) − A(y)‖ ≤ c0 d(x,y)^ν on random pairs
        let spec = SystemSpec::PerturbedDiagonal {
            diag: dvector![4.0, 0.25],
            rho: 0.01,
            nu: 0.5,
            seed: 7,
        };
        let sys = make_system(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x = Point::Torus(DVector::from_fn(2, |_, _| rng.gen::<f64>()));
            let y = torus_offset(&x, 10.0_f64.powf(-rng.gen_range(0.5..8.0)), &mut rng);
            let lhs = linalg::opnorm(&(sys.generator_at(&x) - sys.generator_at(&y)));
            let rhs = sys.holder_c0() * sys.distance(&x, &y).powf(sys.holder_nu());
            assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn iterate_on_shift_uses_first_symbols() {
        let m0 = DMatrix::from_diagonal(&dvector![2.0, 0.5]);
        let m1 = rotation2(0.3);
        let spec = SystemSpec::ShiftIid {
            matrices: vec![m0.clone(), m1.clone()],
            seed: 1,
        };
        let sys = make_system(&spec).unwrap();
        let x = Point::shift(vec![0, 1, 1, 0, 1, 0, 0, 1]);
        let expected = &m1 * &(&m1 * &m0);
        let got = iterate(&sys, &x, 3).unwrap();
        assert!((got - expected).norm() < 1e-12);
    }
}

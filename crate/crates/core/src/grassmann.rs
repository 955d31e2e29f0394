//! Geometry of linear subspaces of ℝ^d: orthonormal frames, the sup/min
//! subspace distance, principal-angle cosines, graph maps onto orthogonal
//! complements, and transverse intersections.
//!
//! A subspace is stored as a `d×k` frame with orthonormal columns. All
//! distances and angles are computed through singular values of frame
//! products, which is the principal-angle formulation of the literal
//! sup-of-distances definition
//!
//! ```text
//! dist(E, F) = max{ sup_{‖v‖=1, v∈E} dist(v, F),  sup_{‖v‖=1, v∈F} dist(v, E) }.
//! ```
//!
//! For equal dimensions this equals the sine of the largest principal angle;
//! the test suite cross-checks the singular-value route against a grid-search
//! evaluation of the sup/min definition.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;

/// Singular values below this threshold count as zero in rank and
/// transversality decisions.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrassmannError {
    #[error("input vectors are rank deficient (numerical rank {rank} < {count})")]
    RankDeficient { rank: usize, count: usize },
    #[error("ambient dimensions differ: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error(
        "subspaces are not transverse: projection onto the base along its complement is singular"
    )]
    NotTransverse,
    #[error("subspaces are not complementary (dim {dim_e} + dim {dim_f} vs ambient {ambient}, or nontrivial intersection)")]
    NotComplementary {
        dim_e: usize,
        dim_f: usize,
        ambient: usize,
    },
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("subspace pair is not in general position: intersection dimension {found} != expected {expected}")]
    NotGeneralPosition { expected: usize, found: usize },
}

/// A k-dimensional linear subspace of ℝ^d, held as a `d×k` orthonormal frame.
///
/// `dim() == 0` is permitted only as the distinguished certificate returned
/// by [`grassmann_intersect`] for transverse pairs with trivial intersection;
/// the public constructors require at least one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    /// Builds a subspace from a frame whose columns are already orthonormal
    /// to within `1e-12`; re-orthonormalizes silently below that.
    pub fn from_orthonormal_frame(frame: DMatrix<f64>) -> Self {
        let k = frame.ncols();
        debug_assert!(k <= frame.nrows());
        let gram_defect = (frame.transpose() * &frame - DMatrix::identity(k, k)).norm();
        let frame = if gram_defect > 1e-12 && k > 0 {
            linalg::orthonormalize_columns(&frame)
        } else {
            frame
        };
        Subspace { frame }
    }

    /// Coordinate subspace spanned by the listed axes.
    pub fn coordinate(ambient: usize, axes: &[usize]) -> Self {
        let mut frame = DMatrix::zeros(ambient, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            frame[(a, j)] = 1.0;
        }
        Subspace { frame }
    }

    /// Span of a single vector.
    pub fn line(v: &DVector<f64>) -> Result<Self, GrassmannError> {
        orthonormalize(std::slice::from_ref(v))
    }

    /// The zero-dimensional certificate subspace.
    pub fn trivial(ambient: usize) -> Self {
        Subspace {
            frame: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Subspace {
        Subspace {
            frame: linalg::orthonormal_complement(&self.frame),
        }
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.frame * (self.frame.transpose() * v)
    }

    /// Distance from a vector to the subspace, `min_{w∈E} ‖v − w‖`.
    pub fn dist_to(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Image under an invertible matrix, re-orthonormalized.
    pub fn map(&self, a: &DMatrix<f64>) -> Subspace {
        if self.dim() == 0 {
            return self.clone();
        }
        Subspace {
            frame: linalg::orthonormalize_columns(&(a * &self.frame)),
        }
    }

    /// Direct sum with another subspace of the same ambient space. The caller
    /// guarantees transversality; the result is the orthonormalized span.
    pub fn direct_sum(&self, other: &Subspace) -> Result<Subspace, GrassmannError> {
        check_ambient(self, other)?;
        let d = self.ambient_dim();
        let k = self.dim() + other.dim();
        let mut stacked = DMatrix::zeros(d, k);
        stacked.columns_mut(0, self.dim()).copy_from(&self.frame);
        stacked
            .columns_mut(self.dim(), other.dim())
            .copy_from(&other.frame);
        let rank = count_above(&stacked.clone().svd(false, false).singular_values, RANK_TOL);
        if rank < k {
            return Err(GrassmannError::RankDeficient { rank, count: k });
        }
        Ok(Subspace {
            frame: linalg::orthonormalize_columns(&stacked),
        })
    }

    /// Residual of containment in `other`: the largest distance from a unit
    /// vector of `self` to `other`. Zero iff `self ⊆ other`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        directed_distance(self, other)
    }
}

/// A linear map `L: E → E⊥` whose graph `{u + Lu : u ∈ E}` realizes a nearby
/// subspace. `‖L‖` sandwiches the subspace distance:
/// `‖L‖/√(1+‖L‖²) ≤ dist(E, F) ≤ ‖L‖`.
#[derive(Debug, Clone)]
pub struct GraphMap {
    base: Subspace,
    complement: Subspace,
    /// L in the orthonormal coordinates of (base, complement): `(d−k)×k`.
    map_matrix: DMatrix<f64>,
    operator_norm: f64,
}

impl GraphMap {
    pub fn base(&self) -> &Subspace {
        &self.base
    }

    pub fn complement(&self) -> &Subspace {
        &self.complement
    }

    pub fn map_matrix(&self) -> &DMatrix<f64> {
        &self.map_matrix
    }

    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    /// Reconstructs the graph `{u + Lu : u ∈ E}` as a subspace.
    pub fn graph(&self) -> Subspace {
        let k = self.base.dim();
        let d = self.base.ambient_dim();
        let mut cols = DMatrix::zeros(d, k);
        let lifted = self.complement.frame() * &self.map_matrix;
        for j in 0..k {
            let g = self.base.frame().column(j) + lifted.column(j);
            cols.set_column(j, &g);
        }
        Subspace::from_orthonormal_frame(linalg::orthonormalize_columns(&cols))
    }
}

fn check_ambient(e: &Subspace, f: &Subspace) -> Result<(), GrassmannError> {
    if e.ambient_dim() != f.ambient_dim() {
        return Err(GrassmannError::AmbientMismatch {
            left: e.ambient_dim(),
            right: f.ambient_dim(),
        });
    }
    Ok(())
}

fn count_above(sv: &nalgebra::DVector<f64>, tol: f64) -> usize {
    sv.iter().filter(|&&s| s > tol).count()
}

/// Gram–Schmidt by QR: builds a [`Subspace`] from linearly independent
/// vectors.
pub fn orthonormalize(vectors: &[DVector<f64>]) -> Result<Subspace, GrassmannError> {
    if vectors.is_empty() {
        return Err(GrassmannError::RankDeficient { rank: 0, count: 0 });
    }
    let d = vectors[0].len();
    let k = vectors.len();
    if k > d {
        return Err(GrassmannError::RankDeficient {
            rank: d.min(k),
            count: k,
        });
    }
    let mut m = DMatrix::zeros(d, k);
    for (j, v) in vectors.iter().enumerate() {
        if v.len() != d {
            return Err(GrassmannError::AmbientMismatch {
                left: d,
                right: v.len(),
            });
        }
        m.set_column(j, v);
    }
    // Rank test with the looser 1e-10 tolerance relative to the largest
    // column scale, so nearly-dependent inputs are rejected before QR.
    let sv = m.clone().svd(false, false).singular_values;
    let scale = sv[0].max(1e-300);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * scale.max(1.0)).count();
    if rank < k {
        return Err(GrassmannError::RankDeficient { rank, count: k });
    }
    Ok(Subspace {
        frame: linalg::orthonormalize_columns(&m),
    })
}

/// `sup_{‖v‖=1, v∈E} dist(v, F)` through principal angles, computed as the
/// largest singular value of the projection of E's frame onto F⊥. This form
/// stays accurate for nearly-equal subspaces, where `sqrt(1 − σ_min²)` would
/// lose half the significant digits.
fn directed_distance(e: &Subspace, f: &Subspace) -> f64 {
    let residual = e.frame() - f.frame() * (f.frame().transpose() * e.frame());
    linalg::opnorm(&residual).min(1.0)
}

/// Distance between two subspaces: the symmetric max of the two directed
/// sups. Symmetric, in `[0, 1]`, and zero exactly on equal subspaces of equal
/// dimension.
pub fn subspace_distance(e: &Subspace, f: &Subspace) -> Result<f64, GrassmannError> {
    check_ambient(e, f)?;
    if e.dim() == 0 && f.dim() == 0 {
        return Ok(0.0);
    }
    if e.dim() == 0 || f.dim() == 0 {
        return Ok(1.0);
    }
    Ok(directed_distance(e, f).max(directed_distance(f, e)))
}

/// The linear map `L: E → E⊥` whose graph equals `F`, for transverse `F` of
/// the same dimension. Fails with [`GrassmannError::NotTransverse`] when `F`
/// meets `E⊥`.
pub fn graph_map(e: &Subspace, f: &Subspace) -> Result<GraphMap, GrassmannError> {
    check_ambient(e, f)?;
    if e.dim() != f.dim() {
        return Err(GrassmannError::NotComplementary {
            dim_e: e.dim(),
            dim_f: f.dim(),
            ambient: e.ambient_dim(),
        });
    }
    let complement = e.complement();
    // F's columns split as f_j = E a_j + E⊥ b_j; the graph exists iff the
    // E-component map a is invertible, and then L = b ∘ a⁻¹.
    let a = e.frame().transpose() * f.frame();
    let b = complement.frame().transpose() * f.frame();
    if linalg::sigma_min_as_map(&a) < RANK_TOL {
        return Err(GrassmannError::NotTransverse);
    }
    let a_inv = a.try_inverse().ok_or(GrassmannError::NotTransverse)?;
    let map_matrix = b * a_inv;
    let operator_norm = linalg::opnorm(&map_matrix);
    Ok(GraphMap {
        base: e.clone(),
        complement,
        map_matrix,
        operator_norm,
    })
}

fn check_complementary(e: &Subspace, f: &Subspace) -> Result<(), GrassmannError> {
    check_ambient(e, f)?;
    let d = e.ambient_dim();
    let not_comp = || GrassmannError::NotComplementary {
        dim_e: e.dim(),
        dim_f: f.dim(),
        ambient: d,
    };
    if e.dim() + f.dim() != d || e.dim() == 0 || f.dim() == 0 {
        return Err(not_comp());
    }
    let mut stacked = DMatrix::zeros(d, d);
    stacked.columns_mut(0, e.dim()).copy_from(e.frame());
    stacked.columns_mut(e.dim(), f.dim()).copy_from(f.frame());
    if linalg::sigma_min_as_map(&stacked) < RANK_TOL {
        return Err(not_comp());
    }
    Ok(())
}

/// Largest `|⟨v, w⟩|` over unit `v ∈ E`, `w ∈ F`: the cosine of the minimal
/// principal angle between complementary subspaces.
pub fn max_pair_cosine(e: &Subspace, f: &Subspace) -> Result<f64, GrassmannError> {
    check_complementary(e, f)?;
    let m = e.frame().transpose() * f.frame();
    Ok(linalg::opnorm(&m).min(1.0))
}

/// Decomposition of `u = v + w` along complementary `E ⊕ F`, with the
/// component-size ratio `max(‖v‖, ‖w‖)/‖u‖` and the angle-controlled bound
/// `max(‖v‖, ‖w‖) ≤ ‖u‖ / (1 − cos∠(E, F))` it must satisfy.
#[derive(Debug, Clone)]
pub struct ComponentBound {
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub ratio: f64,
    pub bound: f64,
}

pub fn component_norm_bound(
    e: &Subspace,
    f: &Subspace,
    u: &DVector<f64>,
) -> Result<ComponentBound, GrassmannError> {
    check_complementary(e, f)?;
    let norm_u = u.norm();
    if norm_u == 0.0 {
        return Err(GrassmannError::ZeroVector);
    }
    let d = e.ambient_dim();
    if u.len() != d {
        return Err(GrassmannError::AmbientMismatch {
            left: d,
            right: u.len(),
        });
    }
    let mut stacked = DMatrix::zeros(d, d);
    stacked.columns_mut(0, e.dim()).copy_from(e.frame());
    stacked.columns_mut(e.dim(), f.dim()).copy_from(f.frame());
    let coeffs = stacked
        .lu()
        .solve(u)
        .ok_or(GrassmannError::NotComplementary {
            dim_e: e.dim(),
            dim_f: f.dim(),
            ambient: d,
        })?;
    let v = e.frame() * coeffs.rows(0, e.dim()).into_owned();
    let w = f.frame() * coeffs.rows(e.dim(), f.dim()).into_owned();
    let ratio = v.norm().max(w.norm()) / norm_u;
    let cos = max_pair_cosine(e, f)?;
    let bound = 1.0 / (1.0 - cos).max(f64::MIN_POSITIVE);
    debug_assert!(ratio <= bound * (1.0 + 1e-9) || cos > 1.0 - 1e-12);
    Ok(ComponentBound { v, w, ratio, bound })
}

/// Intersection of two subspaces in general position, as the null space of
/// the stacked complement constraints. The expected dimension is
/// `r = dim V₊ + dim V₋ − d`; when `r = 0` the distinguished
/// zero-dimensional certificate [`Subspace::trivial`] is returned.
pub fn grassmann_intersect(
    vplus: &Subspace,
    vminus: &Subspace,
) -> Result<Subspace, GrassmannError> {
    check_ambient(vplus, vminus)?;
    let d = vplus.ambient_dim();
    let (kp, km) = (vplus.dim(), vminus.dim());
    if kp + km < d {
        return Err(GrassmannError::NotGeneralPosition {
            expected: 0,
            found: kp.min(km),
        });
    }
    let r = kp + km - d;
    // x lies in both spaces iff it is orthogonal to both complements; the
    // stacked constraint matrix has at least an r-dimensional null space,
    // and general position means not more.
    let cp = vplus.complement();
    let cm = vminus.complement();
    let rows = (d - kp) + (d - km);
    if rows == 0 {
        // both spaces are the whole ambient space
        return Ok(Subspace::from_orthonormal_frame(DMatrix::identity(d, d)));
    }
    let mut constraints = DMatrix::zeros(rows, d);
    constraints
        .rows_mut(0, d - kp)
        .copy_from(&cp.frame().transpose());
    constraints
        .rows_mut(d - kp, d - km)
        .copy_from(&cm.frame().transpose());
    let svd = constraints.clone().svd(false, true);
    let sv = &svd.singular_values;
    let found_null = d - count_above(sv, RANK_TOL);
    if found_null != r {
        return Err(GrassmannError::NotGeneralPosition {
            expected: r,
            found: found_null,
        });
    }
    if r == 0 {
        return Ok(Subspace::trivial(d));
    }
    // Null space = complement of the row space, which the thin right factor
    // spans with orthonormal rows.
    let vt = svd.v_t.expect("requested right singular vectors");
    let row_space = Subspace::from_orthonormal_frame(vt.transpose());
    let null = row_space.complement();
    debug_assert_eq!(null.dim(), r);
    Ok(null)
}

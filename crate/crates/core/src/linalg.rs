//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`. The
//! validated wrappers [`HermitianOperator`], [`DensityMatrix`] and
//! [`Subspace`] carry their tolerances with them so that downstream code can
//! rely on the invariants without re-checking.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::SpectralData;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative eigenvalue clustering tolerance, applied as `tol * (1 + |λ|)`.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;
/// Singular values below `tol * σ_max` count as zero.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;

const SYMMETRY_REL_TOL: f64 = 1e-12;
const EIG_MAX_ITER: usize = 10_000;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn basis_vector(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = C64::new(1.0, 0.0);
    v
}

/// `|u⟩⟨v|`
pub fn ket_bra(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().sum()
}

/// Frobenius norm.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.norm()
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Trace norm `‖A‖₁` of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
}

/// Hermitian part `(A + A†)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if is_finite(a) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() == a.ncols() && a.nrows() > 0 {
        Ok(a.nrows())
    } else {
        Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

pub fn ensure_dim(a: &CMatrix, d: usize) -> Result<()> {
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("{d}x{d}"),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorisation.
pub fn vec_col(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_col`] for a `d x d` matrix.
pub fn unvec(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Eigenvalues of a Hermitian matrix in ascending order. Only the Hermitian
/// part of `a` is used.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn is_diagonal(a: &CMatrix) -> bool {
    let (r, c) = a.shape();
    (0..c).all(|j| (0..r).all(|i| i == j || a[(i, j)] == C64::new(0.0, 0.0)))
}

/// A square matrix equal to its adjoint within `symmetry_tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
    symmetry_tol: f64,
}

impl HermitianOperator {
    /// Validates with the default tolerance `1e-12 · max|A_ij|`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let tol = SYMMETRY_REL_TOL * max_abs(&matrix);
        Self::with_tol(matrix, tol)
    }

    pub fn with_tol(matrix: CMatrix, symmetry_tol: f64) -> Result<Self> {
        ensure_square(&matrix)?;
        ensure_finite(&matrix)?;
        let deviation = max_abs(&(&matrix - matrix.adjoint()));
        if deviation > symmetry_tol {
            return Err(Error::NotHermitian {
                deviation,
                tol: symmetry_tol,
            });
        }
        Ok(Self {
            matrix: hermitian_part(&matrix),
            symmetry_tol,
        })
    }

    /// Takes the Hermitian part of `matrix` without checking it.
    pub fn from_hermitian_part(matrix: &CMatrix) -> Result<Self> {
        ensure_square(matrix)?;
        ensure_finite(matrix)?;
        Ok(Self {
            matrix: hermitian_part(matrix),
            symmetry_tol: SYMMETRY_REL_TOL * max_abs(matrix),
        })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(d, d),
            symmetry_tol: 0.0,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: identity(d),
            symmetry_tol: 0.0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn symmetry_tol(&self) -> f64 {
        self.symmetry_tol
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `‖p² − p‖_F`, zero for an orthogonal projection.
    pub fn projection_defect(&self) -> f64 {
        frobenius(&(&self.matrix * &self.matrix - &self.matrix))
    }
}

/// Row-major nested `[re, im]` pairs, the serialised matrix layout.
pub fn to_pair_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn from_pair_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: format!("{c} entries per row"),
            found: "ragged rows".into(),
        });
    }
    let m = CMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
    ensure_finite(&m)?;
    Ok(m)
}

/// A Hermitian, trace-one, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    trace_tol: f64,
    psd_tol: f64,
}

pub const DEFAULT_TRACE_TOL: f64 = 1e-10;
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, DEFAULT_TRACE_TOL, DEFAULT_PSD_TOL)
    }

    pub fn with_tolerances(matrix: CMatrix, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        let op = HermitianOperator::with_tol(matrix.clone(), 1e-12_f64.max(SYMMETRY_REL_TOL * max_abs(&matrix)))?;
        let tr = trace(op.matrix()).re;
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from one")));
        }
        let min = op.min_eigenvalue();
        if min < -psd_tol {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e} is negative")));
        }
        Ok(Self {
            op,
            trace_tol,
            psd_tol,
        })
    }

    /// Divides by the trace first.
    pub fn normalized(matrix: CMatrix) -> Result<Self> {
        ensure_finite(&matrix)?;
        let tr = trace(&matrix).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("cannot normalise a matrix with trace {tr}")));
        }
        Self::new(matrix / C64::new(tr, 0.0))
    }

    /// `|u⟩⟨u| / ‖u‖²`
    pub fn pure(u: &CVector) -> Result<Self> {
        let n2 = u.norm_squared();
        if !(n2 > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(ket_bra(u, u) / C64::new(n2, 0.0))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let m = identity(d) / C64::new(d as f64, 0.0);
        Self {
            op: HermitianOperator {
                matrix: m,
                symmetry_tol: 0.0,
            },
            trace_tol: DEFAULT_TRACE_TOL,
            psd_tol: DEFAULT_PSD_TOL,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn hermitian(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_matrix(self) -> CMatrix {
        self.op.into_matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        0.5 * trace_norm_hermitian(&(self.matrix() - other.matrix()))
    }
}

/// A subspace given by an orthonormal column basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
    tol: f64,
}

impl Subspace {
    /// `basis` must have orthonormal columns (checked against `max(tol, 1e-12)`).
    pub fn new(basis: CMatrix, tol: f64) -> Result<Self> {
        ensure_finite(&basis)?;
        if basis.ncols() > basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: format!("at most {} columns", basis.nrows()),
                found: format!("{}", basis.ncols()),
            });
        }
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let dev = max_abs(&(gram - identity(k)));
        if dev > tol.max(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "subspace basis is not orthonormal (deviation {dev:.3e})"
            )));
        }
        Ok(Self { basis, tol })
    }

    pub fn full(d: usize) -> Self {
        Self {
            basis: identity(d),
            tol: DEFAULT_KERNEL_TOL,
        }
    }

    pub fn empty(d: usize) -> Self {
        Self {
            basis: CMatrix::zeros(d, 0),
            tol: DEFAULT_KERNEL_TOL,
        }
    }

    /// Orthonormal basis of the column span of `vectors`.
    pub fn span_of(vectors: &CMatrix, rel_tol: f64) -> Result<Self> {
        range(vectors, rel_tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn projector(&self) -> HermitianOperator {
        projector(self)
    }

    pub fn complement(&self) -> Result<Subspace> {
        if self.dim() == 0 {
            return Ok(Subspace::full(self.ambient_dim()));
        }
        kernel(&self.basis.adjoint(), self.tol.max(DEFAULT_KERNEL_TOL))
    }

    /// Largest distance of a unit vector of `other` from `self`.
    pub fn containment_deviation(&self, other: &Subspace) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let residual = other.basis() - self.projector().matrix() * other.basis();
        residual
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `‖P_self − P_other‖_F`; zero iff the spans coincide.
    pub fn span_distance(&self, other: &Subspace) -> f64 {
        frobenius(&(self.projector().matrix() - other.projector().matrix()))
    }

    /// Distance of `v` from the subspace, relative to `‖v‖`.
    pub fn distance_of(&self, v: &CVector) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        (v - self.projector().matrix() * v).norm() / n
    }
}

/// Orthogonal projector `B B†` onto `s`.
pub fn projector(s: &Subspace) -> HermitianOperator {
    let p = s.basis() * s.basis().adjoint();
    HermitianOperator {
        matrix: hermitian_part(&p),
        symmetry_tol: 0.0,
    }
}

fn svd(a: CMatrix, compute_u: bool, compute_v: bool) -> Result<SVD<C64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(a, compute_u, compute_v, f64::EPSILON, EIG_MAX_ITER).ok_or(Error::NoConvergence("singular value decomposition"))
}

/// Null space of `a`: right singular vectors whose singular value is at most
/// `rel_tol · σ_max`. The zero matrix has the whole space as kernel.
pub fn kernel(a: &CMatrix, rel_tol: f64) -> Result<Subspace> {
    ensure_finite(a)?;
    let (m, n) = a.shape();
    if n == 0 {
        return Ok(Subspace::empty(0));
    }
    if a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(Subspace {
            basis: identity(n),
            tol: rel_tol,
        });
    }
    // Pad to square so that the full right singular basis is returned.
    let work = if m < n {
        let mut p = CMatrix::zeros(n, n);
        p.rows_mut(0, m).copy_from(a);
        p
    } else {
        a.clone()
    };
    let dec = svd(work, false, true)?;
    let v_t = dec.v_t.as_ref().expect("requested V");
    let s = &dec.singular_values;
    let threshold = rel_tol * s.max();
    let cols: Vec<CVector> = (0..s.len())
        .filter(|&i| s[i] <= threshold)
        .map(|i| v_t.row(i).adjoint())
        .collect();
    let basis = if cols.is_empty() {
        CMatrix::zeros(n, 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    Ok(Subspace { basis, tol: rel_tol })
}

/// Column space of `a`: left singular vectors with singular value above
/// `rel_tol · σ_max`.
pub fn range(a: &CMatrix, rel_tol: f64) -> Result<Subspace> {
    ensure_finite(a)?;
    let m = a.nrows();
    if a.ncols() == 0 || a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(Subspace {
            basis: CMatrix::zeros(m, 0),
            tol: rel_tol,
        });
    }
    let dec = svd(a.clone(), true, false)?;
    let u = dec.u.as_ref().expect("requested U");
    let s = &dec.singular_values;
    let threshold = rel_tol * s.max();
    let cols: Vec<CVector> = (0..s.len())
        .filter(|&i| s[i] > threshold)
        .map(|i| u.column(i).into_owned())
        .collect();
    let basis = if cols.is_empty() {
        CMatrix::zeros(m, 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    Ok(Subspace { basis, tol: rel_tol })
}

/// Range of an orthogonal projector, read off as the eigenvectors with
/// eigenvalue above ½. Unlike [`range`] this needs no relative threshold, so
/// a projector that vanishes up to rounding gives the zero subspace.
pub fn projector_range(p: &HermitianOperator) -> Result<Subspace> {
    let defect = p.projection_defect();
    if defect > 1e-8 {
        return Err(Error::InvalidParameter(format!("not a projector (‖P² − P‖ = {defect:.3e})")));
    }
    let d = p.dim();
    let eig = p.matrix().clone().symmetric_eigen();
    let cols: Vec<CVector> = (0..d)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let basis = if cols.is_empty() {
        CMatrix::zeros(d, 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    Subspace::new(basis, 1e-10)
}

/// Intersection as the kernel of `Σ_i (I − Π_i)`.
pub fn intersect(subspaces: &[Subspace]) -> Result<Subspace> {
    let first = subspaces
        .first()
        .ok_or_else(|| Error::InvalidParameter("intersection of an empty family".into()))?;
    let d = first.ambient_dim();
    let mut sum = CMatrix::zeros(d, d);
    let mut tol: f64 = 0.0;
    for s in subspaces {
        if s.ambient_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: format!("ambient dimension {d}"),
                found: format!("{}", s.ambient_dim()),
            });
        }
        sum += identity(d) - s.projector().matrix();
        tol = tol.max(s.tol());
    }
    kernel(&sum, if tol > 0.0 { tol } else { DEFAULT_KERNEL_TOL })
}

/// Hilbert–Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a.nrows(), a.ncols()),
            found: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    Ok(a.dotc(b))
}

pub fn is_psd(a: &HermitianOperator, tol: f64) -> bool {
    a.min_eigenvalue() >= -tol
}

/// Spectral decomposition with eigenvalues merged when they lie within
/// `cluster_tol · (1 + |λ|)` of their neighbour.
pub fn hermitian_eig(a: &HermitianOperator, cluster_tol: f64) -> Result<SpectralData> {
    let m = a.matrix();
    let d = m.nrows();
    let (values, vectors): (Vec<f64>, CMatrix) = if is_diagonal(m) {
        (m.diagonal().iter().map(|z| z.re).collect(), identity(d))
    } else {
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
            .ok_or(Error::NoConvergence("Hermitian eigensolver"))?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        if let Some(last) = clusters.last_mut() {
            let prev = values[*last.last().unwrap()];
            if (values[idx] - prev).abs() <= cluster_tol * (1.0 + values[idx].abs()) {
                last.push(idx);
                continue;
            }
        }
        clusters.push(vec![idx]);
    }

    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut bases = Vec::with_capacity(clusters.len());
    for cluster in &clusters {
        let mean = cluster.iter().map(|&i| values[i]).sum::<f64>() / cluster.len() as f64;
        eigenvalues.push(mean);
        let cols: Vec<CVector> = cluster.iter().map(|&i| vectors.column(i).into_owned()).collect();
        bases.push(CMatrix::from_columns(&cols));
    }
    Ok(SpectralData::from_bases(eigenvalues, bases, cluster_tol, m.clone()))
}

/// Random complex matrix with entries uniform in the unit square.
pub fn random_matrix<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let g = random_matrix(rng, d, d);
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    DensityMatrix::new(hermitian_part(&(m / c64(tr, 0.0)))).expect("G G† is a valid state")
}

/// Random density matrix supported on `s` (full rank inside `s`).
pub fn random_density_on<R: rand::Rng + ?Sized>(rng: &mut R, s: &Subspace) -> Result<DensityMatrix> {
    if s.dim() == 0 {
        return Err(Error::Support("cannot place a state on the zero subspace".into()));
    }
    let g = random_matrix(rng, s.dim(), s.dim());
    let inner = &g * g.adjoint();
    let m = s.basis() * inner * s.basis().adjoint();
    DensityMatrix::normalized(hermitian_part(&m))
}

/// Random unit vector inside `s`.
pub fn random_unit_vector_in<R: rand::Rng + ?Sized>(rng: &mut R, s: &Subspace) -> Result<CVector> {
    if s.dim() == 0 {
        return Err(Error::Support("the zero subspace has no unit vectors".into()));
    }
    let coeffs = random_matrix(rng, s.dim(), 1).column(0).into_owned();
    let v = s.basis() * coeffs;
    let n = v.norm();
    Ok(v / c64(n, 0.0))
}

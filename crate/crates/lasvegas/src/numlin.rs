//! Dense complex linear algebra: Hermitian spectra, singular values, Gram
//! matrices, unitary completion of Gram-matched collections and PSD helpers.
//!
//! Every tolerance check scales the tolerance by `max(1, ‖A‖_max)`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-9;
pub const EIG_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// Pivots whose remaining norm falls below this (relative) level are treated
/// as linearly dependent during Gram matching.
const RANK_CUTOFF: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entry modulus; 0 for empty matrices.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn tol_scale(a: &ComplexMatrix) -> f64 {
    max_abs(a).max(1.0)
}

/// A square matrix equal to its adjoint within `HERMITIAN_TOL`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        Self::with_tol(a, HERMITIAN_TOL)
    }

    pub fn with_tol(a: ComplexMatrix, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvariantViolation(format!(
                "hermitian matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvariantViolation("non-finite entry".into()));
        }
        let dev = max_abs(&(&a - a.adjoint()));
        if dev > tol * tol_scale(&a) {
            return Err(Error::InvariantViolation(format!(
                "matrix is not hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(Self::symmetrize(a))
    }

    /// Replaces `a` by `(a + a*)/2` without checking.
    pub(crate) fn symmetrize(a: ComplexMatrix) -> Self {
        let s = (&a + a.adjoint()).scale(0.5);
        HermitianMatrix(s)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n, n))
    }

    /// Real symmetric matrix given row-major.
    pub fn from_real(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape(format!("expected {} entries, got {}", n * n, data.len())));
        }
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| re(data[i * n + j])))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), ComplexMatrix::zeros(0, 0));
        }
        let eig = nalgebra::linalg::SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    pub fn neg(&self) -> Self {
        HermitianMatrix(-self.0.clone())
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// A square matrix with `‖U*U − I‖_max ≤ UNITARY_TOL`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        Self::with_tol(a, UNITARY_TOL)
    }

    pub fn with_tol(a: ComplexMatrix, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvariantViolation(format!(
                "unitary matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let dev = max_abs(&(a.adjoint() * &a - ComplexMatrix::identity(n, n)));
        if !(dev <= tol) {
            return Err(Error::InvariantViolation(format!(
                "matrix is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(UnitaryMatrix(a))
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix(ComplexMatrix::identity(n, n))
    }

    /// Diagonal unitary from phases.
    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let n = entries.len();
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { C64::new(0.0, 0.0) }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }
}

impl Deref for UnitaryMatrix {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Largest eigenvalue of a Hermitian matrix (0 for the empty matrix).
pub fn lambda_max(h: &HermitianMatrix) -> f64 {
    h.eigenvalues().last().copied().unwrap_or(0.0)
}

/// Smallest eigenvalue (0 for the empty matrix).
pub fn lambda_min(h: &HermitianMatrix) -> f64 {
    h.eigenvalues().first().copied().unwrap_or(0.0)
}

/// Checks hermiticity, then returns the largest eigenvalue.
pub fn lambda_max_checked(a: &ComplexMatrix) -> Result<f64> {
    Ok(lambda_max(&HermitianMatrix::new(a.clone())?))
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if max_abs(a) == 0.0 {
        return 0.0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    sv.iter().fold(0.0, |m: f64, &s| m.max(s))
}

/// Top singular value with unit vectors `u`, `v` such that `a v = σ u`.
pub fn top_singular_triple(a: &ComplexMatrix) -> Result<(f64, ComplexVector, ComplexVector)> {
    if a.nrows() == 0 || a.ncols() == 0 || max_abs(a) == 0.0 {
        return Err(Error::DegenerateInput("zero matrix has no top singular triple".into()));
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let mut best = 0;
    for i in 1..sv.len() {
        if sv[i] > sv[best] {
            best = i;
        }
    }
    let u = svd.u.as_ref().expect("u requested").column(best).into_owned();
    let v = svd.v_t.as_ref().expect("v_t requested").row(best).adjoint();
    Ok((sv[best], u, v))
}

/// `G[x, y] = ⟨vec_x, vec_y⟩`, conjugate-linear in the first argument.
pub fn gram(vectors: &[ComplexVector]) -> Result<HermitianMatrix> {
    if let Some(first) = vectors.first() {
        let d = first.len();
        if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::Shape(format!("gram: vector of length {} among length {d}", bad.len())));
        }
    }
    let n = vectors.len();
    let g = ComplexMatrix::from_fn(n, n, |x, y| vectors[x].dotc(&vectors[y]));
    Ok(HermitianMatrix::symmetrize(g))
}

fn orthogonalize(basis: &[ComplexVector], w: &mut ComplexVector) {
    for _ in 0..2 {
        for q in basis {
            let p = q.dotc(w);
            w.axpy(-p, q, C64::new(1.0, 0.0));
        }
    }
}

/// Extends an orthonormal family to an orthonormal basis of `C^d`, picking at
/// each step the canonical vector with the largest component outside the span.
fn complete_basis(mut basis: Vec<ComplexVector>, d: usize) -> Vec<ComplexVector> {
    while basis.len() < d {
        let mut best: Option<(f64, ComplexVector)> = None;
        for i in 0..d {
            let mut w = ComplexVector::zeros(d);
            w[i] = C64::new(1.0, 0.0);
            orthogonalize(&basis, &mut w);
            let n = w.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, w));
            }
        }
        let (n, w) = best.expect("dimension is positive");
        basis.push(w.unscale(n));
    }
    basis
}

fn columns_to_matrix(cols: &[ComplexVector], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, cols.len(), |i, j| cols[j][i])
}

/// A unitary `U` with `U src_x ≈ dst_x` for every `x`, assuming the two
/// collections have the same Gram matrix.
///
/// Pivoted Gram-Schmidt on `src` fixes an order; `dst` is orthonormalised in
/// the same order, both bases are completed with canonical vectors, and the
/// completed bases are matched.
pub fn unitary_from_gram_match(
    src: &[ComplexVector],
    dst: &[ComplexVector],
    tol: f64,
) -> Result<UnitaryMatrix> {
    if src.len() != dst.len() {
        return Err(Error::Shape(format!("{} source vectors vs {} targets", src.len(), dst.len())));
    }
    let d = match src.first() {
        Some(v) => v.len(),
        None => return Err(Error::DegenerateInput("empty vector collections".into())),
    };
    if src.iter().chain(dst.iter()).any(|v| v.len() != d) {
        return Err(Error::Shape("all vectors must share one dimension".into()));
    }
    let gs = gram(src)?;
    let gd = gram(dst)?;
    let diff = max_abs(&(gs.matrix() - gd.matrix()));
    let allowed = tol * tol_scale(gs.matrix());
    if diff > allowed {
        return Err(Error::GramMismatch { diff, tol: allowed });
    }

    let norm_scale = src.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    let cutoff = RANK_CUTOFF * norm_scale;
    let mut rem: Vec<ComplexVector> = src.to_vec();
    let mut q_src: Vec<ComplexVector> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (j, r) in rem.iter().enumerate() {
            if pivots.contains(&j) {
                continue;
            }
            let n = r.norm();
            if best.is_none_or(|(_, bn)| n > bn) {
                best = Some((j, n));
            }
        }
        let Some((j, n)) = best else { break };
        if n <= cutoff || q_src.len() == d {
            break;
        }
        let mut q = rem[j].unscale(n);
        orthogonalize(&q_src, &mut q);
        let qn = q.norm();
        q.unscale_mut(qn);
        for r in rem.iter_mut() {
            let p = q.dotc(r);
            r.axpy(-p, &q, C64::new(1.0, 0.0));
        }
        q_src.push(q);
        pivots.push(j);
    }

    let mut q_dst: Vec<ComplexVector> = Vec::with_capacity(pivots.len());
    for &j in &pivots {
        let mut w = dst[j].clone();
        orthogonalize(&q_dst, &mut w);
        let n = w.norm();
        if n > 0.0 {
            q_dst.push(w.unscale(n));
        } else {
            let filled = complete_basis(q_dst.clone(), q_dst.len() + 1);
            q_dst.push(filled.last().cloned().expect("one vector added"));
        }
    }

    let full_src = complete_basis(q_src, d);
    let full_dst = complete_basis(q_dst, d);
    let qs = columns_to_matrix(&full_src, d);
    let qd = columns_to_matrix(&full_dst, d);
    UnitaryMatrix::new(qd * qs.adjoint())
}

/// Spectral data of a PSD matrix.
#[derive(Clone, Debug)]
pub struct PsdFactors {
    pub min_eig: f64,
    pub sqrt: ComplexMatrix,
    pub pinv_sqrt: ComplexMatrix,
}

/// Square root and pseudo-inverse square root; eigenvalues in
/// `[−PSD_TOL, 0)` are clamped to zero.
pub fn psd_utilities(h: &HermitianMatrix) -> Result<PsdFactors> {
    let n = h.dim();
    let scale = tol_scale(h.matrix());
    let (vals, vecs) = h.eigen();
    let min_eig = vals.first().copied().unwrap_or(0.0);
    if min_eig < -PSD_TOL * scale {
        return Err(Error::NotPsd(min_eig));
    }
    let mut sq = ComplexMatrix::zeros(n, n);
    let mut pinv = ComplexMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let col = vecs.column(k);
        let outer = col * col.adjoint();
        let lam = lam.max(0.0);
        sq += outer.scale(lam.sqrt());
        if lam > PSD_TOL * scale {
            pinv += outer.scale(1.0 / lam.sqrt());
        }
    }
    Ok(PsdFactors { min_eig, sqrt: sq, pinv_sqrt: pinv })
}

/// `|Σ‖v_j‖² − Σ_j ‖Σ_i α_{ij} v_i‖²|` for a `d × d` unitary `(α_{ij})`.
pub fn parallelogram_residual(vectors: &[ComplexVector], u: &UnitaryMatrix) -> Result<f64> {
    let d = vectors.len();
    if u.dim() != d {
        return Err(Error::Shape(format!("{d} vectors but a {}x{} unitary", u.dim(), u.dim())));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let len = vectors[0].len();
    if vectors.iter().any(|v| v.len() != len) {
        return Err(Error::Shape("vectors differ in length".into()));
    }
    let lhs: f64 = vectors.iter().map(|v| v.norm_squared()).sum();
    let mut rhs = 0.0;
    for j in 0..d {
        let mut w = ComplexVector::zeros(len);
        for (i, v) in vectors.iter().enumerate() {
            w.axpy(u[(i, j)], v, C64::new(1.0, 0.0));
        }
        rhs += w.norm_squared();
    }
    Ok((lhs - rhs).abs())
}

/// A square array of equally shaped blocks indexed by label pairs.
#[derive(Clone, Debug)]
pub struct BlockFamily {
    n: usize,
    rows: usize,
    cols: usize,
    blocks: Vec<ComplexMatrix>,
}

impl BlockFamily {
    pub fn from_fn(n: usize, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Result<Self> {
        let mut blocks = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                let b = f(x, y);
                if b.nrows() != rows || b.ncols() != cols {
                    return Err(Error::Shape(format!(
                        "block ({x},{y}) is {}x{}, expected {rows}x{cols}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                blocks.push(b);
            }
        }
        Ok(BlockFamily { n, rows, cols, blocks })
    }

    /// Scalar family (1×1 blocks) from an `n × n` matrix.
    pub fn scalar(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("scalar family needs a square matrix".into()));
        }
        Self::from_fn(m.nrows(), 1, 1, |x, y| ComplexMatrix::from_element(1, 1, m[(x, y)]))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn block_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, x: usize, y: usize) -> &ComplexMatrix {
        &self.blocks[x * self.n + y]
    }
}

/// `Γ∘Δ`: the block matrix whose `(x, y)` block is `Γ[x, y]·Δ_{xy}`.
pub fn block_hadamard(gamma: &HermitianMatrix, delta: &BlockFamily) -> Result<HermitianMatrix> {
    let n = gamma.dim();
    if delta.len() != n {
        return Err(Error::Shape(format!("Γ is {n}x{n} but Δ is indexed by {} labels", delta.len())));
    }
    let (r, cdim) = delta.block_shape();
    if r != cdim {
        return Err(Error::Shape("Δ blocks must be square".into()));
    }
    for x in 0..n {
        for y in x..n {
            let a = delta.get(x, y);
            let b = delta.get(y, x);
            let dev = max_abs(&(a - b.adjoint()));
            if dev > HERMITIAN_TOL * tol_scale(a).max(tol_scale(b)) {
                return Err(Error::InvariantViolation(format!(
                    "Δ family is not symmetric at ({x},{y}): deviation {dev:.3e}"
                )));
            }
        }
    }
    let mut out = ComplexMatrix::zeros(n * r, n * r);
    for x in 0..n {
        for y in 0..n {
            let g = gamma[(x, y)];
            if g == C64::new(0.0, 0.0) {
                continue;
            }
            let b = delta.get(x, y);
            for i in 0..r {
                for j in 0..r {
                    out[(x * r + i, y * r + j)] = g * b[(i, j)];
                }
            }
        }
    }
    Ok(HermitianMatrix::symmetrize(out))
}

/// Entrywise product `Γ∘E` for a scalar matrix `E`.
pub fn hadamard(gamma: &HermitianMatrix, e: &HermitianMatrix) -> Result<HermitianMatrix> {
    if gamma.dim() != e.dim() {
        return Err(Error::Shape(format!("Γ is {}x{}, E is {}x{}", gamma.dim(), gamma.dim(), e.dim(), e.dim())));
    }
    Ok(HermitianMatrix::symmetrize(gamma.matrix().component_mul(e.matrix())))
}

/// Direct sum of square matrices.
pub fn direct_sum(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// Kronecker product.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Least-squares solution `X` of `X A = B` using the pseudo-inverse of `A`
/// with singular values below `rank_tol · σ_max` dropped.
pub fn solve_right_pinv(a: &ComplexMatrix, b: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    if a.nrows() == 0 || a.ncols() == 0 {
        return ComplexMatrix::zeros(b.nrows(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut pinv = ComplexMatrix::zeros(a.ncols(), a.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rank_tol * smax.max(1.0) && s > 0.0 {
            let vk = vt.row(k).adjoint();
            let uk = u.column(k);
            pinv += (vk * uk.adjoint()).unscale(s);
        }
    }
    b * pinv
}

/// Orthonormal basis of the column span of `a` (singular values above `rank_tol`).
pub fn column_span(a: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    if a.nrows() == 0 || a.ncols() == 0 {
        return ComplexMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rank_tol * smax.max(1.0) && svd.singular_values[k] > 0.0)
        .collect();
    ComplexMatrix::from_fn(a.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

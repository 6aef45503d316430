//! Feasible solutions of the unidirectional relative γ₂ problem, dual
//! certificates, bidirectional conversions and linear consistency.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    problem_gram_gap as problem_gap, BlockVector, ComplexityProfile, OracleFamily, OracleKind, StateConversionProblem,
    SubspaceConversionProblem,
};
use crate::numlin::{
    block_hadamard, column_span, direct_sum, hadamard, kron, lambda_max, max_abs, solve_right_pinv,
    top_singular_triple, BlockFamily, ComplexMatrix, ComplexVector, HermitianMatrix, C64,
};
use crate::sim::{check_state_conversion, total_query_with, QueryAlgorithm};

/// Oracles closer than this in max-norm are treated as equal.
pub const CLASS_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for least-squares fits and spans.
pub const RANK_TOL: f64 = 1e-9;
/// Denominators at or below this make the single-oracle bound infinite.
pub const EPS_DIV: f64 = 1e-12;

/// Vectors `v_x ∈ M ⊗ W`, one per label in problem order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSolution {
    w_dim: usize,
    vectors: Vec<BlockVector>,
}

impl FeasibleSolution {
    pub fn new(vectors: Vec<BlockVector>) -> Result<Self> {
        let w_dim = vectors.first().map_or(0, |v| v.w_dim());
        if let Some(first) = vectors.first() {
            let dims = first.block_dims();
            if vectors.iter().any(|v| v.w_dim() != w_dim || v.block_dims() != dims) {
                return Err(Error::Shape("all v_x must share w_dim and block dimensions".into()));
            }
        }
        Ok(FeasibleSolution { w_dim, vectors })
    }

    pub fn zeros(labels: usize, block_dims: &[usize], w_dim: usize) -> Self {
        FeasibleSolution { w_dim, vectors: vec![BlockVector::zeros(block_dims, w_dim); labels] }
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    pub fn vectors(&self) -> &[BlockVector] {
        &self.vectors
    }

    pub fn vector(&self, x: usize) -> &BlockVector {
        &self.vectors[x]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn into_vectors(self) -> Vec<BlockVector> {
        self.vectors
    }

    /// Rows `dnorm_sq(v_x)`.
    pub fn profile_values(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(BlockVector::dnorm_sq).collect()
    }

    /// `c·v_x` for every label.
    pub fn scale(&self, c: C64) -> FeasibleSolution {
        FeasibleSolution { w_dim: self.w_dim, vectors: self.vectors.iter().map(|v| v.scale(c)).collect() }
    }

    /// `v_x ⊕ v′_x` along `W`.
    pub fn concat(&self, other: &FeasibleSolution) -> Result<FeasibleSolution> {
        if self.len() != other.len() {
            return Err(Error::Shape("solutions have different label counts".into()));
        }
        let vectors = self.vectors.iter().zip(&other.vectors).map(|(a, b)| a.concat_w(b)).collect::<Result<Vec<_>>>()?;
        FeasibleSolution::new(vectors)
    }

    fn check_against(&self, fam: &OracleFamily) -> Result<()> {
        if self.len() != fam.len() {
            return Err(Error::Shape(format!("{} vectors for {} labels", self.len(), fam.len())));
        }
        if self.vectors.iter().any(|v| v.block_dims() != fam.block_dims()) {
            return Err(Error::Shape("solution blocks do not match the oracle blocks".into()));
        }
        Ok(())
    }
}

/// Per-label maps `V_x : 𝒦_x → M ⊗ W` as `(dim M · w_dim) × dim 𝒦_x`
/// matrices whose columns are flattened block vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSolution {
    pub block_dims: Vec<usize>,
    pub w_dim: usize,
    pub maps: Vec<ComplexMatrix>,
}

impl OperatorSolution {
    pub fn new(block_dims: Vec<usize>, w_dim: usize, maps: Vec<ComplexMatrix>) -> Result<Self> {
        let m: usize = block_dims.iter().sum();
        if maps.iter().any(|v| v.nrows() != m * w_dim) {
            return Err(Error::Shape(format!("operator rows must equal dim M · w_dim = {}", m * w_dim)));
        }
        Ok(OperatorSolution { block_dims, w_dim, maps })
    }
}

/// A Hermitian `Γ` on the label set.
#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub gamma: HermitianMatrix,
}

/// `max_{x,y} |E_xy − ⟨v_x, (Δ_xy ⊗ I_W) v_y⟩|` for an arbitrary `Δ` family on
/// the whole of `M`.
pub fn residual_with_deltas(vectors: &[BlockVector], e: &ComplexMatrix, deltas: &BlockFamily) -> Result<f64> {
    let n = vectors.len();
    if e.nrows() != n || e.ncols() != n || deltas.len() != n {
        return Err(Error::Shape("gap, Δ family and solution disagree on the label count".into()));
    }
    let stacked: Vec<ComplexMatrix> = vectors.iter().map(BlockVector::stacked).collect();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let d = deltas.get(x, y);
            if d.ncols() != stacked[y].nrows() || d.nrows() != stacked[x].nrows() {
                return Err(Error::Shape("Δ blocks do not match the solution".into()));
            }
            let val = stacked[x].dotc(&(d * &stacked[y]));
            worst = worst.max((e[(x, y)] - val).norm());
        }
    }
    Ok(worst)
}

/// `⟨u_x, (Δ_xy ⊗ I) w_y⟩` using the oracles directly.
fn oracle_form(fam: &OracleFamily, u: &[BlockVector], w: &[BlockVector]) -> Result<ComplexMatrix> {
    let n = fam.len();
    let ou: Vec<BlockVector> = (0..n).map(|x| u[x].apply_blocks(fam.blocks(x))).collect::<Result<_>>()?;
    let ow: Vec<BlockVector> = (0..n).map(|x| w[x].apply_blocks(fam.blocks(x))).collect::<Result<_>>()?;
    Ok(ComplexMatrix::from_fn(n, n, |x, y| u[x].inner(&w[y]) - ou[x].inner(&ow[y])))
}

/// Largest violation of `⟨ξ_x,ξ_y⟩ − ⟨τ_x,τ_y⟩ = ⟨v_x, ((I − O_x*O_y) ⊗ I_W) v_y⟩`.
pub fn residual(sol: &FeasibleSolution, p: &StateConversionProblem) -> Result<f64> {
    sol.check_against(&p.oracles)?;
    let e = problem_gap(p);
    let lhs = oracle_form(&p.oracles, &sol.vectors, &sol.vectors)?;
    Ok(max_abs(&(e.matrix() - lhs)))
}

pub fn objective_profile(sol: &FeasibleSolution, labels: &[String]) -> Result<ComplexityProfile> {
    ComplexityProfile::new(labels.to_vec(), sol.profile_values())
}

/// `v_x = ⊕_t Q_t(𝒜, O_x)ξ_x` for an algorithm that solves `p` within `tol`.
pub fn extract(algo: &QueryAlgorithm, p: &StateConversionProblem, tol: f64) -> Result<FeasibleSolution> {
    let report = check_state_conversion(algo, p, tol)?;
    if !report.pass {
        return Err(Error::NotASolution(report.max_error()));
    }
    let vectors = (0..p.len())
        .map(|x| total_query_with(algo, &p.oracles.operator(x), &p.xi[x]))
        .collect::<Result<Vec<_>>>()?;
    FeasibleSolution::new(vectors)
}

/// `V_x = (⊕_t Q_t(𝒜, O_x)) K_x` for every label of a subspace problem.
pub fn extract_operator(algo: &QueryAlgorithm, sp: &SubspaceConversionProblem) -> Result<OperatorSolution> {
    let w_dim = algo.queries() * algo.embedding().b_dim;
    let mut maps = Vec::with_capacity(sp.bases.len());
    for (x, basis) in sp.bases.iter().enumerate() {
        let o = sp.oracles.operator(x);
        let mut cols = Vec::with_capacity(basis.ncols());
        for j in 0..basis.ncols() {
            cols.push(total_query_with(algo, &o, &basis.column(j).into_owned())?.flatten());
        }
        maps.push(ComplexMatrix::from_fn(sp.oracles.m_dim() * w_dim, cols.len(), |i, j| cols[j][i]));
    }
    OperatorSolution::new(sp.oracles.block_dims().to_vec(), w_dim, maps)
}

/// Spectral quantities of a dual certificate.
#[derive(Clone, Debug, Serialize)]
pub struct DualReport {
    /// `λ_max(Γ ∘ E)` with `E = G_ξ − G_τ`.
    pub lam_e: f64,
    /// `λ_max(Γ ∘ Δ⁽ⁱ⁾)` per oracle block.
    pub lam_delta: Vec<f64>,
    /// `λ_max(Γ ∘ Δ)` for the whole oracle, which is the maximum over blocks.
    pub lam_delta_total: f64,
    /// `max(λ_max(Γ∘E), 0) / λ_max(Γ∘Δ)`; `+∞` when the denominator vanishes.
    pub bound: f64,
    pub infinite: bool,
}

impl DualReport {
    /// `Σ_i max(λ_max(Γ∘Δ⁽ⁱ⁾), 0) · max_x P[x][i]`.
    pub fn tradeoff_rhs(&self, profile: &ComplexityProfile) -> f64 {
        self.lam_delta
            .iter()
            .enumerate()
            .map(|(i, &l)| l.max(0.0) * if i < profile.num_blocks() { profile.column_max(i) } else { 0.0 })
            .sum()
    }

    /// Whether `λ_max(Γ∘E) ≤ Σ_i λ_max(Γ∘Δ⁽ⁱ⁾)·max_x P[x][i] + tol`.
    pub fn tradeoff_ok(&self, profile: &ComplexityProfile, tol: f64) -> bool {
        self.lam_e <= self.tradeoff_rhs(profile) + tol
    }
}

pub fn dual_bound(cert: &DualCertificate, p: &StateConversionProblem) -> Result<DualReport> {
    let gamma = &cert.gamma;
    if gamma.dim() != p.len() {
        return Err(Error::Shape(format!("Γ is {}x{} for {} labels", gamma.dim(), gamma.dim(), p.len())));
    }
    let lam_e = lambda_max(&hadamard(gamma, &problem_gap(p))?);
    let lam_delta = (0..p.oracles.num_blocks())
        .map(|i| block_hadamard(gamma, &p.oracles.delta_block_family(i)).map(|h| lambda_max(&h)))
        .collect::<Result<Vec<_>>>()?;
    let lam_delta_total = lam_delta.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let (bound, infinite) = if lam_delta_total <= EPS_DIV {
        if lam_e <= EPS_DIV {
            (0.0, false)
        } else {
            (f64::INFINITY, true)
        }
    } else {
        (lam_e.max(0.0) / lam_delta_total, false)
    };
    Ok(DualReport { lam_e, lam_delta, lam_delta_total, bound, infinite })
}

/// The same problem with every oracle block `O⁽ⁱ⁾` replaced by `O⁽ⁱ⁾ ⊕ O⁽ⁱ⁾*`.
pub fn lift_bidirectional(p: &StateConversionProblem) -> Result<StateConversionProblem> {
    let fam = &p.oracles;
    if fam.kind() != OracleKind::Unitary {
        return Err(Error::Kind("bidirectional lifting needs unitary oracles".into()));
    }
    let dims = fam.block_dims().iter().map(|d| 2 * d).collect();
    let ops = (0..fam.len())
        .map(|x| fam.blocks(x).iter().map(|o| direct_sum(&[o.clone(), o.adjoint()])).collect())
        .collect();
    let lifted = OracleFamily::new(fam.labels().to_vec(), dims, ops, OracleKind::Unitary)?;
    StateConversionProblem::new(lifted, p.k_dim, p.xi.clone(), p.tau.clone())
}

/// `max_{x,y} |e_xy − ⟨u_x, (Δ_xy ⊗ I) v_y⟩|` for a bidirectional pair.
pub fn bidirectional_residual(u: &[BlockVector], v: &[BlockVector], p: &StateConversionProblem) -> Result<f64> {
    if u.len() != p.len() || v.len() != p.len() {
        return Err(Error::Shape("one vector per label required".into()));
    }
    if u.iter().chain(v).any(|b| b.block_dims() != p.oracles.block_dims()) || u.iter().zip(v).any(|(a, b)| a.w_dim() != b.w_dim()) {
        return Err(Error::Shape("pair does not match the oracle blocks".into()));
    }
    let form = oracle_form(&p.oracles, u, v)?;
    Ok(max_abs(&(problem_gap(p).matrix() - form)))
}

/// `ṽ_x = ((u_x + v_x) ⊕ (O_x u_x − O_x v_x)) / 2`, feasible for the lifted problem.
pub fn bidir_to_unidir(u: &[BlockVector], v: &[BlockVector], p: &StateConversionProblem, tol: f64) -> Result<FeasibleSolution> {
    let r = bidirectional_residual(u, v, p)?;
    if r > tol {
        return Err(Error::NotFeasible(r));
    }
    let fam = &p.oracles;
    let mut out = Vec::with_capacity(p.len());
    for x in 0..p.len() {
        let mut blocks = Vec::with_capacity(fam.num_blocks());
        for (i, o) in fam.blocks(x).iter().enumerate() {
            let (ub, vb) = (u[x].block(i), v[x].block(i));
            let top = (ub + vb).scale(0.5);
            let bottom = (o * (ub - vb)).scale(0.5);
            let mut blk = ComplexMatrix::zeros(2 * ub.nrows(), ub.ncols());
            blk.rows_mut(0, ub.nrows()).copy_from(&top);
            blk.rows_mut(ub.nrows(), ub.nrows()).copy_from(&bottom);
            blocks.push(blk);
        }
        out.push(BlockVector::from_blocks(blocks)?);
    }
    FeasibleSolution::new(out)
}

/// `u_x = ṽ′_x ⊕ O_x*ṽ″_x`, `v_x = ṽ′_x ⊕ (−O_x*ṽ″_x)` along `W`, from a
/// solution of the lifted problem.
pub fn unidir_to_bidir(
    sol: &FeasibleSolution,
    p: &StateConversionProblem,
    tol: f64,
) -> Result<(Vec<BlockVector>, Vec<BlockVector>)> {
    let lifted = lift_bidirectional(p)?;
    let r = residual(sol, &lifted)?;
    if r > tol {
        return Err(Error::NotFeasible(r));
    }
    let fam = &p.oracles;
    let (mut us, mut vs) = (Vec::with_capacity(p.len()), Vec::with_capacity(p.len()));
    for x in 0..p.len() {
        let (mut ub, mut vb) = (Vec::new(), Vec::new());
        for (i, o) in fam.blocks(x).iter().enumerate() {
            let d = o.nrows();
            let blk = sol.vector(x).block(i);
            let first = blk.rows(0, d).into_owned();
            let back = o.adjoint() * blk.rows(d, d);
            let w = blk.ncols();
            let mut a = ComplexMatrix::zeros(d, 2 * w);
            let mut b = ComplexMatrix::zeros(d, 2 * w);
            a.columns_mut(0, w).copy_from(&first);
            a.columns_mut(w, w).copy_from(&back);
            b.columns_mut(0, w).copy_from(&first);
            b.columns_mut(w, w).copy_from(&(-back));
            ub.push(a);
            vb.push(b);
        }
        us.push(BlockVector::from_blocks(ub)?);
        vs.push(BlockVector::from_blocks(vb)?);
    }
    Ok((us, vs))
}

/// A solution for the gap `e` and the family `Δ` (on the whole of `M`) that
/// spends one fresh `W` coordinate on each pair `x < y` with `e_xy ≠ 0`.
pub fn feasible_from_offdiagonal(e: &HermitianMatrix, deltas: &BlockFamily, block_dims: &[usize]) -> Result<FeasibleSolution> {
    let n = e.dim();
    let m: usize = block_dims.iter().sum();
    if deltas.len() != n || deltas.block_shape() != (m, m) {
        return Err(Error::Shape("Δ family does not match the gap matrix and block dimensions".into()));
    }
    let scale = max_abs(e.matrix()).max(1.0);
    for x in 0..n {
        if e[(x, x)].norm() > 1e-12 * scale || max_abs(deltas.get(x, x)) > 1e-12 {
            return Err(Error::InvariantViolation(format!("diagonal entry {x} of the gap or of Δ is nonzero")));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .filter(|&(x, y)| e[(x, y)].norm() > 0.0)
        .collect();
    let w = pairs.len();
    let mut stacked = vec![ComplexMatrix::zeros(m, w); n];
    for (col, &(x, y)) in pairs.iter().enumerate() {
        let exy = e[(x, y)];
        if max_abs(deltas.get(x, y)) <= 1e-12 {
            return Err(Error::Inconsistent(format!("gap entry ({x},{y}) is nonzero where Δ vanishes")));
        }
        let (sigma, u, v) = top_singular_triple(deltas.get(x, y))?;
        let r = exy.norm().sqrt();
        let s = sigma.sqrt();
        stacked[x].set_column(col, &(u * C64::new(r / s, 0.0)));
        stacked[y].set_column(col, &(v * (exy / C64::new(r * s, 0.0))));
    }
    let vectors = stacked.iter().map(|s| BlockVector::from_stacked(block_dims, s)).collect::<Result<Vec<_>>>()?;
    FeasibleSolution::new(vectors)
}

fn states_matrix(states: &[&ComplexVector]) -> ComplexMatrix {
    let k = states.first().map_or(0, |s| s.len());
    ComplexMatrix::from_fn(k, states.len(), |i, j| states[j][i])
}

fn class_fit_residual(sol: &FeasibleSolution, p: &StateConversionProblem, class: &[usize]) -> f64 {
    let xi: Vec<&ComplexVector> = class.iter().map(|&x| &p.xi[x]).collect();
    let flat: Vec<ComplexVector> = class.iter().map(|&x| sol.vector(x).flatten()).collect();
    let vs = ComplexMatrix::from_fn(flat.first().map_or(0, |f| f.len()), class.len(), |i, j| flat[j][i]);
    let a = states_matrix(&xi);
    let fit = solve_right_pinv(&a, &vs, RANK_TOL);
    max_abs(&(fit * a - &vs)) / max_abs(&vs).max(1.0)
}

/// Whether each oracle class admits a linear `V_O` with `v_x = V_O ξ_x`.
pub fn consistency_check(sol: &FeasibleSolution, p: &StateConversionProblem, tol: f64) -> bool {
    p.oracles
        .classes(CLASS_TOL)
        .iter()
        .filter(|c| c.len() > 1)
        .all(|c| class_fit_residual(sol, p, c) <= tol)
}

/// Projects each inconsistent oracle class onto the span of
/// `(Δ_{x,y} ⊗ I_W) v_y` for `y` outside the class and the range of
/// `(I − O*O) ⊗ I_W`. The result stays feasible, becomes consistent and its
/// total squared norm per label does not grow; for a single oracle block the
/// profile is dominated entrywise.
pub fn pareto_project(sol: &FeasibleSolution, p: &StateConversionProblem, tol: f64) -> Result<FeasibleSolution> {
    let fam = &p.oracles;
    if fam.kind() == OracleKind::General {
        return Err(Error::Kind("projection needs contraction oracles".into()));
    }
    let r = residual(sol, p)?;
    if r > tol {
        return Err(Error::NotFeasible(r));
    }
    let mut vectors = sol.vectors.clone();
    let dims = fam.block_dims().to_vec();
    let w = sol.w_dim;
    let m = fam.m_dim();
    for class in fam.classes(CLASS_TOL) {
        if class.len() < 2 {
            continue;
        }
        let current = FeasibleSolution { w_dim: w, vectors: vectors.clone() };
        if class_fit_residual(&current, p, &class) <= tol {
            continue;
        }
        let x0 = class[0];
        let mut cols: Vec<ComplexVector> = Vec::new();
        for y in (0..fam.len()).filter(|y| !class.contains(y)) {
            let dv = fam.delta(x0, y) * vectors[y].stacked();
            cols.push(BlockVector::from_stacked(&dims, &dv)?.flatten());
        }
        let o = fam.operator(x0);
        let defect = ComplexMatrix::identity(m, m) - o.adjoint() * &o;
        let range = column_span(&defect, RANK_TOL);
        let lifted = kron(&range, &ComplexMatrix::identity(w, w));
        for j in 0..lifted.ncols() {
            cols.push(lifted.column(j).into_owned());
        }
        let q = if cols.is_empty() {
            ComplexMatrix::zeros(m * w, 0)
        } else {
            column_span(&ComplexMatrix::from_fn(m * w, cols.len(), |i, j| cols[j][i]), RANK_TOL)
        };
        let proj = &q * q.adjoint();
        for &x in &class {
            let flat = &proj * vectors[x].flatten();
            vectors[x] = BlockVector::from_flat(&dims, w, &flat)?;
        }
    }
    FeasibleSolution::new(vectors)
}

/// `max_{x,y} ‖K_x*K_y − T_x*T_y − V_x*((I − O_x*O_y) ⊗ I_W)V_y‖_max`.
pub fn subspace_residual(vsol: &OperatorSolution, sp: &SubspaceConversionProblem) -> Result<f64> {
    let fam = &sp.oracles;
    if vsol.maps.len() != fam.len() || vsol.block_dims != fam.block_dims() {
        return Err(Error::Shape("operator solution does not match the problem".into()));
    }
    let id_w = ComplexMatrix::identity(vsol.w_dim, vsol.w_dim);
    let mut worst = 0.0f64;
    for x in 0..fam.len() {
        if vsol.maps[x].ncols() != sp.bases[x].ncols() {
            return Err(Error::Shape(format!("V_{x} has the wrong number of columns")));
        }
        for y in 0..fam.len() {
            let lhs = sp.bases[x].adjoint() * &sp.bases[y] - sp.maps[x].adjoint() * &sp.maps[y];
            let rhs = vsol.maps[x].adjoint() * kron(&fam.delta(x, y), &id_w) * &vsol.maps[y];
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

/// `V_x ξ` for `ξ ∈ 𝒦_x`, given in the coordinates of `𝒦`.
pub fn restrict_to_state(
    vsol: &OperatorSolution,
    sp: &SubspaceConversionProblem,
    x: usize,
    xi: &ComplexVector,
    tol: f64,
) -> Result<BlockVector> {
    let basis = sp.bases.get(x).ok_or_else(|| Error::Label(format!("label index {x} out of range")))?;
    if xi.len() != basis.nrows() {
        return Err(Error::Shape(format!("state of length {} in 𝒦 of dimension {}", xi.len(), basis.nrows())));
    }
    let coef = basis.adjoint() * xi;
    let dist = (xi - basis * &coef).norm();
    if dist > tol * xi.norm().max(1.0) {
        return Err(Error::Subspace(dist));
    }
    BlockVector::from_flat(&vsol.block_dims, vsol.w_dim, &(&vsol.maps[x] * coef))
}

//! Compiling feasible solutions into query algorithms.
//!
//! [`compile_approx`] is the catalyst construction: a workspace `𝒦⊗𝒥 ⊕ 𝒱`
//! with a `T`-dimensional register `𝒥` and `𝒱 ≅ M ⊗ W`, in which every query
//! sees `v_x/√T`. [`compile_exact_posdef`] wraps it between two Gram-matching
//! unitaries when both Gram matrices are positive definite, and
//! [`compile_exact`] chains four such pieces through positive-definite
//! intermediate Gram matrices.

use std::sync::Arc;

use serde::Serialize;

use crate::adversary::{feasible_from_offdiagonal, residual, FeasibleSolution, CLASS_TOL};
use crate::compose::{invert, relocate, slice, AlgorithmBuilder};
use crate::error::{Error, Result};
use crate::model::{BlockVector, ComplexityProfile, OracleKind, StateConversionProblem};
use crate::numlin::{
    gram, lambda_min, max_abs, psd_utilities, re, tol_scale, unitary_from_gram_match, ComplexMatrix, ComplexVector,
    HermitianMatrix, UnitaryMatrix,
};
use crate::sim::{check_state_conversion, final_state_with, las_vegas_profile, las_vegas_with, Factor, QueryAlgorithm, QueryEmbedding, Step};

/// Required smallest eigenvalue of a Gram matrix treated as positive definite.
pub const POSDEF_MARGIN: f64 = 1e-8;
/// Number of halvings allowed in each ε schedule.
pub const MAX_ITER: usize = 30;

fn check_feasible(p: &StateConversionProblem, sol: &FeasibleSolution, tol: f64) -> Result<f64> {
    let r = residual(sol, p)?;
    let allowed = tol * tol_scale(p.gram_xi().matrix()).max(tol_scale(p.gram_tau().matrix()));
    if r > allowed {
        return Err(Error::NotFeasible(r));
    }
    Ok(r)
}

fn max_total(sol: &FeasibleSolution) -> f64 {
    sol.vectors().iter().map(BlockVector::norm_sq).fold(0.0, f64::max)
}

fn concat(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    ComplexVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn padded(v: &ComplexVector, n: usize) -> ComplexVector {
    let mut out = ComplexVector::zeros(n);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// `F ⊗ I_K` with `F|0⟩ = T^{-1/2} Σ_j |j⟩`, as `k` reflectors on the
/// coordinates `j·k + a`.
fn spread_factors(k: usize, t: usize) -> Vec<Factor> {
    if t <= 1 {
        return Vec::new();
    }
    let amp = 1.0 / (t as f64).sqrt();
    let mut w = ComplexVector::from_element(t, re(-amp));
    w[0] += re(1.0);
    (0..k)
        .map(|a| Factor::reflector((0..t).map(|j| j * k + a).collect(), w.clone()).expect("w is nonzero"))
        .collect()
}

/// Output of [`compile_approx`].
#[derive(Clone, Debug)]
pub struct ApproxCompilation {
    pub algorithm: QueryAlgorithm,
    /// `ξ_x ⊕ v_x/√T` in workspace coordinates.
    pub xi_plus: Vec<ComplexVector>,
    /// `τ_x ⊕ v_x/√T` in workspace coordinates.
    pub tau_plus: Vec<ComplexVector>,
    pub queries: usize,
}

impl ApproxCompilation {
    /// The exactly solved problem `ξ⁺ ↦ τ⁺` with `𝒦` the whole workspace.
    pub fn plus_problem(&self, p: &StateConversionProblem) -> Result<StateConversionProblem> {
        StateConversionProblem::new(p.oracles.clone(), self.algorithm.h_dim(), self.xi_plus.clone(), self.tau_plus.clone())
    }
}

/// The `T`-query algorithm transforming `ξ_x ⊕ v_x/√T ↦ τ_x ⊕ v_x/√T`.
///
/// Workspace: coordinate `j·k + a` holds `|a⟩ ⊗ |j⟩` of `𝒦⊗𝒥` and coordinate
/// `kT + r·w + c` holds `|r⟩ ⊗ |c⟩` of `𝒱 = M ⊗ W`.
pub fn compile_approx(p: &StateConversionProblem, sol: &FeasibleSolution, t: usize, tol: f64) -> Result<ApproxCompilation> {
    if t == 0 {
        return Err(Error::Range("compile_approx needs at least one query".into()));
    }
    let r = check_feasible(p, sol, tol)?;
    let fam = &p.oracles;
    let (k, m, w) = (p.k_dim, fam.m_dim(), sol.w_dim());
    let v_len = m * w;
    let h = k * t + v_len;
    let flat: Vec<ComplexVector> = sol.vectors().iter().map(BlockVector::flatten).collect();
    let src: Vec<ComplexVector> = (0..p.len())
        .map(|x| {
            let vp = sol.vector(x).apply_blocks(fam.blocks(x)).expect("shapes checked").flatten();
            concat(&vp, &p.xi[x])
        })
        .collect();
    let dst: Vec<ComplexVector> = (0..p.len()).map(|x| concat(&flat[x], &p.tau[x])).collect();
    let u = if src.first().is_some_and(|v| !v.is_empty()) {
        unitary_from_gram_match(&src, &dst, (10.0 * r).max(1e-12))?
    } else {
        UnitaryMatrix::identity(v_len + k)
    };
    let u = Arc::new(u);
    let v_coords: Vec<usize> = (k * t..h).collect();
    let spread = spread_factors(k, t);
    let mut steps = vec![Step { factors: spread.clone() }];
    for s in 1..=t {
        let mut coords = v_coords.clone();
        coords.extend((0..k).map(|a| (s - 1) * k + a));
        let mut factors = vec![Factor::local_shared(coords, u.clone())?];
        if s == t {
            factors.extend(spread.iter().cloned());
        }
        steps.push(Step { factors });
    }
    let embedding = QueryEmbedding { b_dim: w, c_dim: k * t, layout: v_coords.iter().copied().chain(0..k * t).collect() };
    let algorithm = QueryAlgorithm::new(h, steps, embedding, fam.block_dims().to_vec())?;
    let scale = re(1.0 / (t as f64).sqrt());
    let plus = |states: &[ComplexVector]| -> Vec<ComplexVector> {
        (0..p.len())
            .map(|x| {
                let mut out = ComplexVector::zeros(h);
                out.rows_mut(0, k).copy_from(&states[x]);
                out.rows_mut(k * t, v_len).copy_from(&(&flat[x] * scale));
                out
            })
            .collect()
    };
    Ok(ApproxCompilation { xi_plus: plus(&p.xi), tau_plus: plus(&p.tau), algorithm, queries: t })
}

/// Output of [`run_plain`].
#[derive(Clone, Debug)]
pub struct PlainCompilation {
    pub algorithm: QueryAlgorithm,
    pub queries: usize,
    /// `‖𝒜(O_x)ξ_x − τ_x‖` with both sides zero-padded to the workspace.
    pub errors: Vec<f64>,
}

/// Catalyst algorithm run on the unperturbed `ξ_x`, with `T = ⌈4L/ε²⌉`.
pub fn run_plain(p: &StateConversionProblem, sol: &FeasibleSolution, eps: f64, tol: f64) -> Result<PlainCompilation> {
    if p.oracles.kind() == OracleKind::General {
        return Err(Error::Kind("run_plain needs contraction oracles".into()));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Range(format!("ε must be positive, got {eps}")));
    }
    let r = check_feasible(p, sol, tol)?;
    let l = max_total(sol);
    let t = (4.0 * l / (eps * eps)).ceil() as usize;
    let algorithm = if t == 0 {
        zero_query_match(p, (10.0 * r).max(1e-12))?
    } else {
        compile_approx(p, sol, t, tol)?.algorithm
    };
    let errors = conversion_errors(&algorithm, p)?;
    Ok(PlainCompilation { queries: algorithm.queries(), algorithm, errors })
}

fn conversion_errors(algo: &QueryAlgorithm, p: &StateConversionProblem) -> Result<Vec<f64>> {
    Ok(check_state_conversion(algo, p, f64::INFINITY)?.errors)
}

/// A 0-query algorithm on `𝒦` mapping `ξ_x ↦ τ_x`, which exists when the
/// Gram matrices agree.
fn zero_query_match(p: &StateConversionProblem, tol: f64) -> Result<QueryAlgorithm> {
    let k = p.k_dim;
    let u = if k == 0 { UnitaryMatrix::identity(0) } else { unitary_from_gram_match(&p.xi, &p.tau, tol)? };
    let h = k.max(1);
    let mut builder = AlgorithmBuilder::new(h, p.oracles.block_dims().to_vec(), QueryEmbedding::trivial(h, p.oracles.m_dim()));
    if k > 0 {
        builder.push_factors([Factor::local((0..k).collect(), u)?]);
    }
    builder.finish()
}

/// Output of [`compile_exact_posdef`].
#[derive(Clone, Debug)]
pub struct PosdefCompilation {
    pub algorithm: QueryAlgorithm,
    /// Number of catalyst steps `T`.
    pub steps: usize,
}

fn min_eig_shifted(g: &HermitianMatrix, gv: &HermitianMatrix, t: usize) -> f64 {
    let shifted = HermitianMatrix::symmetrize(g.matrix() - gv.matrix().unscale(t as f64));
    lambda_min(&shifted)
}

/// Exact conversion when `G_ξ ≻ 0` and `G_τ ≻ 0`: the catalyst algorithm for
/// the shifted states with Gram matrices `G − G_v/T`, between two unitaries.
pub fn compile_exact_posdef(p: &StateConversionProblem, sol: &FeasibleSolution, tol: f64) -> Result<PosdefCompilation> {
    let r = check_feasible(p, sol, tol)?;
    let (gx, gt) = (p.gram_xi(), p.gram_tau());
    let worst = lambda_min(&gx).min(lambda_min(&gt));
    if worst < POSDEF_MARGIN {
        return Err(Error::NotPosDef(worst));
    }
    let flat: Vec<ComplexVector> = sol.vectors().iter().map(BlockVector::flatten).collect();
    let gv = gram(&flat)?;
    let ok = |t: usize| {
        min_eig_shifted(&gx, &gv, t) >= POSDEF_MARGIN / 2.0 && min_eig_shifted(&gt, &gv, t) >= POSDEF_MARGIN / 2.0
    };
    let mut hi = 1usize;
    while !ok(hi) {
        if hi > 1 << 40 {
            return Err(Error::NotPosDef(worst));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = hi;
    let n = p.len();
    let root = |g: &HermitianMatrix| -> Result<Vec<ComplexVector>> {
        let s = psd_utilities(&HermitianMatrix::symmetrize(g.matrix() - gv.matrix().unscale(t as f64)))?.sqrt;
        Ok((0..n).map(|x| s.column(x).into_owned()).collect())
    };
    let inner = StateConversionProblem::new(p.oracles.clone(), n, root(&gx)?, root(&gt)?)?;
    let approx = compile_approx(&inner, sol, t, tol)?;
    let k = p.k_dim;
    let h = approx.algorithm.h_dim().max(k);
    let v_start = n * t;
    let mut coords: Vec<usize> = (0..k.max(n)).collect();
    coords.extend((v_start..approx.algorithm.h_dim()).filter(|&c| c >= k.max(n)));
    let over = |vec: &ComplexVector| -> ComplexVector {
        ComplexVector::from_iterator(coords.len(), coords.iter().map(|&c| if c < vec.len() { vec[c] } else { re(0.0) }))
    };
    let match_tol = (10.0 * r).max(1e-12);
    let pre = unitary_from_gram_match(&p.xi.iter().map(&over).collect::<Vec<_>>(), &approx.xi_plus.iter().map(&over).collect::<Vec<_>>(), match_tol)?;
    let post = unitary_from_gram_match(&approx.tau_plus.iter().map(&over).collect::<Vec<_>>(), &p.tau.iter().map(&over).collect::<Vec<_>>(), match_tol)?;
    let identity: Vec<usize> = (0..approx.algorithm.h_dim()).collect();
    let placed = relocate(&approx.algorithm, h, &identity)?;
    let mut builder = AlgorithmBuilder::new(h, p.oracles.block_dims().to_vec(), placed.embedding().clone());
    builder.push_factors([Factor::local(coords.clone(), pre)?]);
    builder.push_algorithm(&placed, &(0..h).collect::<Vec<_>>())?;
    builder.push_factors([Factor::local(coords, post)?]);
    Ok(PosdefCompilation { algorithm: builder.finish()?, steps: t })
}

/// One attempt of an ε schedule.
#[derive(Clone, Debug, Serialize)]
pub struct EpsTrial {
    pub eps: f64,
    /// The quantity compared against its threshold.
    pub value: f64,
    pub accepted: bool,
}

/// Diagnostics of [`compile_exact`].
#[derive(Clone, Debug, Serialize)]
pub struct ExactReport {
    pub queries: usize,
    pub errors: Vec<f64>,
    pub profile: ComplexityProfile,
    /// Which construction was used: `"identity"`, `"posdef"` or `"chain"`.
    pub route: String,
    /// Mixing weight of the chain, 0 for the other routes.
    pub eps: f64,
    pub eps_trace: Vec<EpsTrial>,
    pub eps_b_trace: Vec<EpsTrial>,
    pub eps_e_trace: Vec<EpsTrial>,
    pub kappa: f64,
}

/// Output of [`compile_exact`].
#[derive(Clone, Debug)]
pub struct ExactCompilation {
    pub algorithm: QueryAlgorithm,
    pub report: ExactReport,
}

/// Householder reflectors `H_1, …, H_n` (each given by its first coordinate and
/// vector) with `H_n ⋯ H_1 [c_1 ⋯ c_n]` upper triangular, together with the
/// compressed columns (first `n` coordinates).
fn householder_compress(cols: &[ComplexVector]) -> (Vec<(usize, ComplexVector)>, Vec<ComplexVector>) {
    let n = cols.len();
    let h = cols.first().map_or(0, |c| c.len());
    let mut a = ComplexMatrix::from_fn(h, n, |i, j| cols[j][i]);
    let mut refl = Vec::new();
    for j in 0..n.min(h) {
        let x = a.view((j, j), (h - j, 1)).column(0).into_owned();
        let nx = x.norm();
        if nx <= 1e-300 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { re(1.0) };
        let mut w = x;
        w[0] += phase * nx;
        let wn = w.norm();
        w.unscale_mut(wn);
        let mut block = a.view_mut((j, 0), (h - j, n));
        let proj = w.adjoint() * &block;
        block -= (&w * proj) * re(2.0);
        refl.push((j, w));
    }
    let compressed = (0..n).map(|x| ComplexVector::from_fn(n, |i, _| if i < h { a[(i, x)] } else { re(0.0) })).collect();
    (refl, compressed)
}

fn reflector_factors(refl: &[(usize, ComplexVector)], offset: usize, h: usize) -> Vec<Factor> {
    refl.iter()
        .map(|(j, w)| Factor::reflector((offset + j..offset + h).collect(), w.clone()).expect("unit vector"))
        .collect()
}

/// `𝓑`: run_plain towards `μ`, shrinking ε until the achieved Gram matrix has
/// smallest eigenvalue at least `kappa`.
fn push_to_posdef(
    p: &StateConversionProblem,
    m_target: &HermitianMatrix,
    tol: f64,
    kappa: f64,
    trace: &mut Vec<EpsTrial>,
) -> Result<(QueryAlgorithm, Vec<ComplexVector>)> {
    let n = p.len();
    let kb = p.k_dim.max(n);
    let mut gap = p.gram_xi().into_inner() - m_target.matrix();
    for x in 0..n {
        gap[(x, x)] = re(0.0);
        for y in 0..n {
            if p.oracles.same_oracle(x, y, CLASS_TOL) {
                gap[(x, y)] = re(0.0);
            }
        }
    }
    let gap = HermitianMatrix::symmetrize(gap);
    let sol = feasible_from_offdiagonal(&gap, &p.oracles.delta_family(), p.oracles.block_dims())?;
    let mu = psd_utilities(m_target)?.sqrt;
    let xi: Vec<ComplexVector> = p.xi.iter().map(|v| padded(v, kb)).collect();
    let tau: Vec<ComplexVector> = (0..n).map(|x| padded(&mu.column(x).into_owned(), kb)).collect();
    let sub = StateConversionProblem::new(p.oracles.clone(), kb, xi, tau)?;
    let scale = p.xi.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut eps = 0.5 * scale;
    for _ in 0..=MAX_ITER {
        let plain = run_plain(&sub, &sol, eps, tol)?;
        let outs = (0..n)
            .map(|x| final_state_with(&plain.algorithm, &p.oracles.operator(x), &sub.xi[x]))
            .collect::<Result<Vec<_>>>()?;
        let achieved = lambda_min(&gram(&outs)?);
        let accepted = achieved >= kappa;
        trace.push(EpsTrial { eps, value: achieved, accepted });
        if accepted {
            return Ok((plain.algorithm, outs));
        }
        eps /= 2.0;
    }
    Err(Error::BudgetExceeded(format!("no positive definite intermediate Gram matrix within {MAX_ITER} halvings")))
}

/// Exact conversion with `|L_x − ‖v_x‖²| ≤ δ` per block, for unitary oracles
/// whose classes of equal oracles have linearly independent `ξ_x`.
///
/// Labels with `ξ_x = 0` are left out of the construction; every algorithm
/// maps them to `0` with complexity `0`.
pub fn compile_exact(p: &StateConversionProblem, sol: &FeasibleSolution, delta: f64, tol: f64) -> Result<ExactCompilation> {
    if p.oracles.kind() != OracleKind::Unitary {
        return Err(Error::Kind("exact compilation needs unitary oracles".into()));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Range(format!("δ must be positive, got {delta}")));
    }
    let r = check_feasible(p, sol, tol)?;
    let finish = |algorithm: QueryAlgorithm, route: &str, eps: f64, traces: [Vec<EpsTrial>; 3], kappa: f64| -> Result<ExactCompilation> {
        let errors = conversion_errors(&algorithm, p)?;
        let profile = las_vegas_profile(&algorithm, p)?;
        let [eps_trace, eps_b_trace, eps_e_trace] = traces;
        let report = ExactReport {
            queries: algorithm.queries(),
            errors,
            profile,
            route: route.into(),
            eps,
            eps_trace,
            eps_b_trace,
            eps_e_trace,
            kappa,
        };
        Ok(ExactCompilation { algorithm, report })
    };
    let no_traces = || [Vec::new(), Vec::new(), Vec::new()];

    if max_total(sol) <= 1e-24 {
        let algo = zero_query_match(p, (10.0 * r).max(1e-12))?;
        return finish(algo, "identity", 0.0, no_traces(), 0.0);
    }
    let (gx, gt) = (p.gram_xi(), p.gram_tau());
    if lambda_min(&gx) >= POSDEF_MARGIN && lambda_min(&gt) >= POSDEF_MARGIN {
        let pd = compile_exact_posdef(p, sol, tol)?;
        return finish(pd.algorithm, "posdef", 0.0, no_traces(), 0.0);
    }

    let active: Vec<usize> = (0..p.len()).filter(|&x| p.xi[x].norm() > 1e-12).collect();
    if active.is_empty() {
        let algo = zero_query_match(p, (10.0 * r).max(1e-12))?;
        return finish(algo, "identity", 0.0, no_traces(), 0.0);
    }
    let q = p.select(&active);
    let qsol = FeasibleSolution::new(active.iter().map(|&x| sol.vector(x).clone()).collect())?;
    let n = q.len();
    let k = q.k_dim;
    let fam = &q.oracles;
    let dims = fam.block_dims().to_vec();

    let gqx = q.gram_xi();
    let m_mat = HermitianMatrix::symmetrize(ComplexMatrix::from_fn(n, n, |x, y| {
        if fam.same_oracle(x, y, CLASS_TOL) {
            gqx[(x, y)]
        } else {
            re(0.0)
        }
    }));
    let m_min = lambda_min(&m_mat);
    if m_min < POSDEF_MARGIN {
        return Err(Error::IndependenceViolation(format!(
            "states within a class of equal oracles are linearly dependent (smallest eigenvalue {m_min:.3e})"
        )));
    }
    let kappa = m_min / 2.0;

    let mut eps_b_trace = Vec::new();
    let (alg_b, outs_b) = push_to_posdef(&q, &m_mat, tol, kappa, &mut eps_b_trace)?;
    let adj = StateConversionProblem::new(fam.adjoint_family(), k, q.tau.clone(), q.xi.clone())?;
    let mut eps_e_trace = Vec::new();
    let (alg_e, outs_e) = push_to_posdef(&adj, &m_mat, tol, kappa, &mut eps_e_trace)?;

    let (refl_b, beta_hat) = householder_compress(&outs_b);
    let (refl_e, eps_hat) = householder_compress(&outs_e);

    let mut gap_c = gram(&beta_hat)?.into_inner() - gram(&eps_hat)?.into_inner();
    for x in 0..n {
        for y in 0..n {
            if x == y || fam.same_oracle(x, y, CLASS_TOL) {
                gap_c[(x, y)] = re(0.0);
            }
        }
    }
    let sol_c = feasible_from_offdiagonal(&HermitianMatrix::symmetrize(gap_c), &fam.delta_family(), &dims)?;
    let prob_c = StateConversionProblem::new(fam.clone(), n, beta_hat.clone(), eps_hat.clone())?;
    let alg_c = compile_exact_posdef(&prob_c, &sol_c, tol.max(1e-9))?.algorithm;

    let row_max = |algo: &QueryAlgorithm, prob: &StateConversionProblem, states: &[ComplexVector]| -> Result<Vec<Vec<f64>>> {
        (0..n).map(|x| las_vegas_with(algo, &prob.oracles.operator(x), &states[x])).collect()
    };
    let l_b = row_max(&alg_b, &q, &q.xi)?;
    let l_c = row_max(&alg_c, &prob_c, &beta_hat)?;
    let l_e = row_max(&alg_e, &adj, &adj.xi)?;
    let norms: Vec<Vec<f64>> = qsol.profile_values();
    let mut eps = 0.25;
    let mut eps_trace = Vec::new();
    let mut chosen = None;
    for _ in 0..=MAX_ITER {
        let mut worst = 0.0f64;
        for x in 0..n {
            for i in 0..dims.len() {
                worst = worst.max(eps * (l_b[x][i] + l_c[x][i] + l_e[x][i] + norms[x][i]));
            }
        }
        let accepted = worst <= delta && eps * kappa >= POSDEF_MARGIN;
        eps_trace.push(EpsTrial { eps, value: worst, accepted });
        if accepted {
            chosen = Some(eps);
            break;
        }
        eps /= 2.0;
    }
    let eps = chosen.ok_or_else(|| Error::BudgetExceeded(format!("overhead exceeds δ = {delta} after {MAX_ITER} halvings")))?;

    let (c, s) = ((1.0 - eps).sqrt(), eps.sqrt());
    let xi_d: Vec<ComplexVector> = (0..n).map(|x| concat(&(&q.xi[x] * re(c)), &(&eps_hat[x] * re(s)))).collect();
    let tau_d: Vec<ComplexVector> = (0..n).map(|x| concat(&(&q.tau[x] * re(c)), &(&eps_hat[x] * re(s)))).collect();
    let prob_d = StateConversionProblem::new(fam.clone(), k + n, xi_d, tau_d)?;
    let alg_d = compile_exact_posdef(&prob_d, &qsol.scale(re(c)), tol)?.algorithm;

    let inv_e = invert(&alg_e);
    let subs = [slice(&alg_b), slice(&alg_c), slice(&alg_d), slice(&inv_e)];
    let aux = [alg_b.h_dim(), alg_c.h_dim(), alg_d.h_dim().saturating_sub(k), inv_e.h_dim(), k].into_iter().max().unwrap_or(k);
    let h = k + aux;
    let shifted = |a: &QueryAlgorithm| -> Vec<usize> { (0..a.h_dim()).map(|c| k + c).collect() };
    let maps = [shifted(&subs[0]), shifted(&subs[1]), (0..subs[2].h_dim()).collect(), shifted(&subs[3])];
    let slot: Option<Vec<usize>> = subs
        .iter()
        .zip(&maps)
        .find(|(a, _)| a.queries() > 0)
        .map(|(a, map)| a.embedding().slot().iter().map(|&c| map[c]).collect());
    let mut builder = match &slot {
        Some(slot) => AlgorithmBuilder::with_slot(h, dims.clone(), slot, 1),
        None => AlgorithmBuilder::new(h, dims.clone(), QueryEmbedding::trivial(h, fam.m_dim())),
    };
    let rot = Arc::new(UnitaryMatrix::new(ComplexMatrix::from_row_slice(2, 2, &[re(c), re(-s), re(s), re(c)]))?);
    let rotations: Vec<Factor> = (0..k).map(|a| Factor::local_shared(vec![a, k + a], rot.clone())).collect::<Result<_>>()?;
    builder.push_factors(rotations.iter().cloned());
    builder.push_algorithm(&subs[0], &maps[0])?;
    builder.push_factors(reflector_factors(&refl_b, k, alg_b.h_dim()));
    builder.push_algorithm(&subs[1], &maps[1])?;
    builder.push_algorithm(&subs[2], &maps[2])?;
    builder.push_factors(reflector_factors(&refl_e, k, alg_e.h_dim()).into_iter().rev());
    builder.push_algorithm(&subs[3], &maps[3])?;
    builder.push_factors(rotations.iter().rev().map(Factor::inverse));
    let algorithm = builder.finish()?;
    finish(algorithm, "chain", eps, [eps_trace, eps_b_trace, eps_e_trace], kappa)
}

/// `(‖v_x‖²)` rows as a profile, for comparison with measured ones.
pub fn target_profile(p: &StateConversionProblem, sol: &FeasibleSolution) -> Result<ComplexityProfile> {
    ComplexityProfile::new(p.labels().to_vec(), sol.profile_values())
}

/// Largest entrywise gap between two profiles.
pub fn profile_gap(a: &ComplexityProfile, b: &ComplexityProfile) -> f64 {
    a.max_abs_diff(b)
}

/// `max_x ‖𝒜(O_x)ξ_x − τ_x‖` (padded), used by callers to confirm exactness.
pub fn max_conversion_error(algo: &QueryAlgorithm, p: &StateConversionProblem) -> Result<f64> {
    Ok(conversion_errors(algo, p)?.into_iter().fold(0.0, f64::max))
}

/// `‖M − M′‖_max` helper for diagnostics.
pub fn gram_distance(a: &[ComplexVector], b: &[ComplexVector]) -> Result<f64> {
    Ok(max_abs(&(gram(a)?.into_inner() - gram(b)?.into_inner())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::extract;
    use crate::model::OracleFamily;
    use crate::numlin::{c, C64};
    use crate::random;
    use crate::sim::{query_input_with, state_before_query_with};
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(seed)
    }

    fn scalar(z: C64) -> ComplexMatrix {
        ComplexMatrix::from_element(1, 1, z)
    }

    fn cvec(e: &[C64]) -> ComplexVector {
        ComplexVector::from_column_slice(e)
    }

    /// `ξ_0 = ξ_1 = |0⟩`, `⟨τ_0, τ_1⟩ = 0`, `O_0 = 1`, `O_1 = −1`, with the
    /// symmetric boundary solution `v_0 = v_1 = 1/√2`.
    fn flip_instance() -> (StateConversionProblem, FeasibleSolution) {
        let fam = OracleFamily::single_block(vec!["0".into(), "1".into()], vec![scalar(re(1.0)), scalar(re(-1.0))], OracleKind::Unitary).unwrap();
        let e0 = cvec(&[re(1.0), re(0.0)]);
        let e1 = cvec(&[re(0.0), re(1.0)]);
        let p = StateConversionProblem::new(fam, 2, vec![e0.clone(), e0.clone()], vec![e0, e1]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sol = FeasibleSolution::new(vec![
            BlockVector::from_blocks(vec![scalar(re(h))]).unwrap(),
            BlockVector::from_blocks(vec![scalar(re(h))]).unwrap(),
        ])
        .unwrap();
        (p, sol)
    }

    #[test]
    fn zero_solution_identity() {
        let mut r = rng(1);
        let fam = random::unitary_family(&mut r, 2, &[1]);
        let xi: Vec<_> = (0..2).map(|_| random::unit_vector(&mut r, 2)).collect();
        let p = StateConversionProblem::new(fam, 2, xi.clone(), xi).unwrap();
        let sol = FeasibleSolution::zeros(2, &[1], 0);
        let a = compile_approx(&p, &sol, 3, 1e-9).unwrap();
        let pp = a.plus_problem(&p).unwrap();
        assert!(check_state_conversion(&a.algorithm, &pp, 1e-12).unwrap().pass);
        for x in 0..2 {
            assert!((a.xi_plus[x].rows(0, 2) - &p.xi[x]).norm() < 1e-15);
        }
        let plain = run_plain(&p, &sol, 0.1, 1e-9).unwrap();
        assert_eq!(plain.queries, 0);
        assert!(plain.errors.iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn catalyst_is_processed_every_step() {
        let (p, sol) = flip_instance();
        let t = 5;
        let a = compile_approx(&p, &sol, t, 1e-9).unwrap();
        let pp = a.plus_problem(&p).unwrap();
        assert!(check_state_conversion(&a.algorithm, &pp, 1e-12).unwrap().pass);
        for x in 0..2 {
            let o = p.oracles.operator(x);
            for s in 1..=t {
                let q = query_input_with(&a.algorithm, &o, s, &a.xi_plus[x]).unwrap();
                let expect = sol.vector(x).scale(re(1.0 / (t as f64).sqrt()));
                assert!((q.flatten() - expect.flatten()).norm() < 1e-12);
                let st = state_before_query_with(&a.algorithm, &o, s, &a.xi_plus[x]).unwrap();
                assert!((st.rows(2 * t, 1)[0] - expect.flatten()[0]).norm() < 1e-12);
            }
            let lv = las_vegas_with(&a.algorithm, &o, &a.xi_plus[x]).unwrap();
            assert!((lv[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_infeasible_and_general() {
        let (p, sol) = flip_instance();
        let bad = sol.scale(re(0.5));
        assert!(matches!(compile_approx(&p, &bad, 4, 1e-9), Err(Error::NotFeasible(_))));
        let fam = OracleFamily::single_block(vec!["0".into(), "1".into()], vec![scalar(re(2.0)), scalar(re(-1.0))], OracleKind::General).unwrap();
        let q = StateConversionProblem::new(fam, 2, p.xi.clone(), p.xi.clone()).unwrap();
        let zero = FeasibleSolution::zeros(2, &[1], 0);
        assert!(matches!(run_plain(&q, &zero, 0.1, 1e-9), Err(Error::Kind(_))));
    }

    #[test]
    fn plain_error_and_query_count() {
        let (p, sol) = flip_instance();
        let a = run_plain(&p, &sol, 0.1, 1e-9).unwrap();
        assert_eq!(a.queries, 200);
        assert!(a.errors.iter().all(|&e| e <= 0.1));
        let b = run_plain(&p, &sol, 0.05, 1e-9).unwrap();
        assert_eq!(b.queries, 800);
    }

    #[test]
    fn posdef_identity_grams() {
        let e0 = cvec(&[re(1.0), re(0.0)]);
        let e1 = cvec(&[re(0.0), re(1.0)]);
        let fam = OracleFamily::single_block(vec!["0".into(), "1".into()], vec![scalar(re(1.0)), scalar(c(0.0, 1.0))], OracleKind::Unitary).unwrap();
        let p = StateConversionProblem::new(fam, 2, vec![e0.clone(), e1.clone()], vec![e1, e0]).unwrap();
        let sol = FeasibleSolution::zeros(2, &[1], 0);
        let pd = compile_exact_posdef(&p, &sol, 1e-9).unwrap();
        assert_eq!(pd.steps, 1);
        assert!(check_state_conversion(&pd.algorithm, &p, 1e-12).unwrap().pass);
    }

    #[test]
    fn posdef_rejects_rank_deficient() {
        let (p, sol) = flip_instance();
        assert!(matches!(compile_exact_posdef(&p, &sol, 1e-9), Err(Error::NotPosDef(_))));
    }

    #[test]
    fn posdef_random_extracted() {
        let mut r = rng(3);
        let shape = random::InstanceShape { labels: 2, block_dims: vec![2], b_dim: 1, c_dim: 1, queries: 2 };
        let inst = random::solved_instance(&mut r, &shape);
        let sol = extract(&inst.algorithm, &inst.problem, 1e-9).unwrap();
        let pd = compile_exact_posdef(&inst.problem, &sol, 1e-9).unwrap();
        assert!(check_state_conversion(&pd.algorithm, &inst.problem, 1e-9).unwrap().pass);
        let prof = las_vegas_profile(&pd.algorithm, &inst.problem).unwrap();
        assert!(prof.max_abs_diff(&target_profile(&inst.problem, &sol).unwrap()) < 1e-9);
    }

    #[test]
    fn exact_chain_on_flip_instance() {
        let (p, sol) = flip_instance();
        let out = compile_exact(&p, &sol, 0.2, 1e-9).unwrap();
        assert_eq!(out.report.route, "chain");
        assert!(out.report.errors.iter().all(|&e| e < 1e-8), "{:?}", out.report.errors);
        let target = target_profile(&p, &sol).unwrap();
        assert!(out.report.profile.max_abs_diff(&target) <= 0.2);
    }

    #[test]
    fn exact_identity_shortcut() {
        let mut r = rng(5);
        let fam = random::unitary_family(&mut r, 3, &[1]);
        let xi: Vec<_> = (0..3).map(|_| random::unit_vector(&mut r, 2)).collect();
        let p = StateConversionProblem::new(fam, 2, xi.clone(), xi).unwrap();
        let out = compile_exact(&p, &FeasibleSolution::zeros(3, &[1], 2), 0.05, 1e-9).unwrap();
        assert_eq!(out.report.route, "identity");
        assert_eq!(out.report.queries, 0);
    }

    #[test]
    fn householder_compresses() {
        let mut r = rng(6);
        let cols: Vec<_> = (0..3).map(|_| random::vector(&mut r, 7)).collect();
        let (refl, comp) = householder_compress(&cols);
        let mut st: Vec<C64> = cols[1].iter().copied().collect();
        for f in reflector_factors(&refl, 0, 7) {
            f.apply(&mut st);
        }
        assert!(st[3..].iter().all(|z| z.norm() < 1e-12));
        for i in 0..3 {
            assert!((st[i] - comp[1][i]).norm() < 1e-12);
        }
        assert!(gram_distance(&cols, &comp).unwrap() < 1e-12);
    }
}

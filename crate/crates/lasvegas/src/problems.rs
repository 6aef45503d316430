//! Worked problems: the two-label family, Boolean function evaluation in the
//! phase, and unitary permutation inversion.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::adversary::{dual_bound, DualCertificate, FeasibleSolution};
use crate::error::{Error, Result};
use crate::model::{BlockVector, OracleFamily, OracleKind, StateConversionProblem};
use crate::numlin::{re, spectral_norm, top_singular_triple, BlockFamily, ComplexMatrix, ComplexVector, HermitianMatrix, UnitaryMatrix, C64};

/// Two labels with unit states `⟨ξ₀,ξ₁⟩ = a` and `⟨τ₀,τ₁⟩ = b`.
#[derive(Clone, Debug)]
pub struct TwoLabel {
    pub problem: StateConversionProblem,
    /// `|a − b| / ‖O₀ − O₁‖`: every feasible `(w₀, w₁)` has `√(w₀w₁) ≥ bound`.
    pub bound: f64,
    a: C64,
    b: C64,
}

fn unit_pair(a: C64) -> (ComplexVector, ComplexVector) {
    let rest = (1.0 - a.norm_sqr()).max(0.0).sqrt();
    (ComplexVector::from_column_slice(&[re(1.0), re(0.0)]), ComplexVector::from_column_slice(&[a, re(rest)]))
}

pub fn two_label(a: C64, b: C64, o0: &UnitaryMatrix, o1: &UnitaryMatrix) -> Result<TwoLabel> {
    for (name, z) in [("a", a), ("b", b)] {
        if !(z.norm() <= 1.0 + 1e-12) {
            return Err(Error::Range(format!("|{name}| must be at most 1, got {}", z.norm())));
        }
    }
    if o0.dim() != o1.dim() {
        return Err(Error::Shape(format!("oracles are {}- and {}-dimensional", o0.dim(), o1.dim())));
    }
    let diff = spectral_norm(&(o0.matrix() - o1.matrix()));
    let gap = (a - b).norm();
    let bound = if diff <= 1e-12 {
        if gap > 1e-12 {
            return Err(Error::Infeasible(format!("equal oracles but ⟨ξ₀,ξ₁⟩ − ⟨τ₀,τ₁⟩ = {gap:.3e}")));
        }
        0.0
    } else {
        gap / diff
    };
    let fam = OracleFamily::single_block(vec!["0".into(), "1".into()], vec![o0.matrix().clone(), o1.matrix().clone()], OracleKind::Unitary)?;
    let (x0, x1) = unit_pair(a);
    let (t0, t1) = unit_pair(b);
    let problem = StateConversionProblem::new(fam, 2, vec![x0, x1], vec![t0, t1])?;
    Ok(TwoLabel { problem, bound, a, b })
}

impl TwoLabel {
    /// The solution with `‖v₀‖² = w₀` and `‖v₁‖² = bound²/w₀`, built from the
    /// top singular pair of `I − O₀*O₁`.
    pub fn boundary_solution(&self, w0: f64) -> Result<FeasibleSolution> {
        let d = self.problem.oracles.m_dim();
        let gap = self.a - self.b;
        if gap.norm() <= 1e-12 {
            return Ok(FeasibleSolution::zeros(2, &[d], 1));
        }
        if !(w0 > 0.0) || !w0.is_finite() {
            return Err(Error::Range(format!("w₀ must be positive, got {w0}")));
        }
        let w1 = self.bound * self.bound / w0;
        let delta = self.problem.oracles.delta(0, 1);
        let (_, u, v) = top_singular_triple(&delta)?;
        let phase = (gap / gap.norm()).conj();
        let col = |vec: ComplexVector| ComplexMatrix::from_column_slice(d, 1, vec.as_slice());
        let v0 = BlockVector::from_blocks(vec![col(u * (phase * w0.sqrt()))])?;
        let v1 = BlockVector::from_blocks(vec![col(v * re(w1.sqrt()))])?;
        FeasibleSolution::new(vec![v0, v1])
    }

    /// Best dual value over `Γ(θ) = [[0, e^{iθ}], [e^{−iθ}, 0]]` on a grid of
    /// `steps` angles.
    pub fn dual_scan(&self, steps: usize) -> Result<f64> {
        dual_scan(&self.problem, steps.max(1), |t| {
            let g = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t);
            HermitianMatrix::new(ComplexMatrix::from_row_slice(2, 2, &[re(0.0), g, g.conj(), re(0.0)]))
        })
    }
}

/// Largest finite dual bound over `Γ(t)` for `t` on an even grid of `[0, 1]`.
pub fn dual_scan(p: &StateConversionProblem, steps: usize, gamma: impl Fn(f64) -> Result<HermitianMatrix>) -> Result<f64> {
    let mut best = 0.0f64;
    for j in 0..=steps {
        let t = j as f64 / steps as f64;
        let report = dual_bound(&DualCertificate { gamma: gamma(t)? }, p)?;
        if !report.infinite {
            best = best.max(report.bound);
        }
    }
    Ok(best)
}

/// Boolean function `f : Dom → {0,1}` evaluated in the phase with `n`
/// one-dimensional oracles `O⁽ʲ⁾_x = (−1)^{x_j}`.
///
/// The stored `problem` has gap `2·1_{f(x)≠f(y)}` and `Δ⁽ʲ⁾ = 2·1_{x_j≠y_j}`.
/// [`BooleanProblem::gap`] and [`BooleanProblem::delta_family`] return both
/// divided by 2; feasible solutions and dual ratios are the same for either.
#[derive(Clone, Debug)]
pub struct BooleanProblem {
    pub n: usize,
    /// Inputs as integers; bit `j` of the label string is `(x >> (n−1−j)) & 1`.
    pub domain: Vec<usize>,
    pub values: Vec<bool>,
    pub problem: StateConversionProblem,
}

pub const MAX_BOOLEAN_VARS: usize = 12;

fn bit(x: usize, n: usize, j: usize) -> bool {
    (x >> (n - 1 - j)) & 1 == 1
}

pub fn boolean_problem(n: usize, domain: &[usize], f: impl Fn(usize) -> bool) -> Result<BooleanProblem> {
    if n == 0 || n > MAX_BOOLEAN_VARS {
        return Err(Error::Range(format!("n must be in 1..={MAX_BOOLEAN_VARS}, got {n}")));
    }
    if domain.is_empty() {
        return Err(Error::DegenerateInput("empty domain".into()));
    }
    if let Some(&x) = domain.iter().find(|&&x| x >> n != 0) {
        return Err(Error::Range(format!("input {x} has more than {n} bits")));
    }
    let labels: Vec<String> = domain.iter().map(|&x| (0..n).map(|j| if bit(x, n, j) { '1' } else { '0' }).collect()).collect();
    let ops = domain
        .iter()
        .map(|&x| (0..n).map(|j| ComplexMatrix::from_element(1, 1, re(if bit(x, n, j) { -1.0 } else { 1.0 }))).collect())
        .collect();
    let fam = OracleFamily::new(labels, vec![1; n], ops, OracleKind::Unitary)?;
    let values: Vec<bool> = domain.iter().map(|&x| f(x)).collect();
    let xi = vec![ComplexVector::from_element(1, re(1.0)); domain.len()];
    let tau = values.iter().map(|&v| ComplexVector::from_element(1, re(if v { -1.0 } else { 1.0 }))).collect();
    let problem = StateConversionProblem::new(fam, 1, xi, tau)?;
    Ok(BooleanProblem { n, domain: domain.to_vec(), values, problem })
}

impl BooleanProblem {
    /// `1_{f(x)≠f(y)}`.
    pub fn gap(&self) -> HermitianMatrix {
        let m = self.values.len();
        HermitianMatrix::symmetrize(ComplexMatrix::from_fn(m, m, |x, y| re(f64::from(u8::from(self.values[x] != self.values[y])))))
    }

    /// `⊕_j 1_{x_j≠y_j}` as `n × n` diagonal blocks.
    pub fn delta_family(&self) -> BlockFamily {
        let (d, n) = (&self.domain, self.n);
        BlockFamily::from_fn(d.len(), n, n, |x, y| {
            ComplexMatrix::from_fn(n, n, |i, j| if i == j && bit(d[x], n, i) != bit(d[y], n, i) { re(1.0) } else { re(0.0) })
        })
        .expect("square blocks")
    }

    /// Best dual bound over `Γ(t)` supported on `f`-sensitive neighbours, with
    /// weight `cos(πt/2)` when bit 0 flips and `sin(πt/2)` for any other bit.
    pub fn sensitivity_scan(&self, steps: usize) -> Result<f64> {
        let (d, n) = (&self.domain, self.n);
        let flips = |x: usize, y: usize| -> Option<usize> {
            let diff = d[x] ^ d[y];
            (diff.count_ones() == 1 && self.values[x] != self.values[y]).then(|| (0..n).find(|&j| bit(d[x], n, j) != bit(d[y], n, j)).unwrap_or(0))
        };
        dual_scan(&self.problem, steps.max(1), |t| {
            let (c, s) = ((t * std::f64::consts::FRAC_PI_2).cos(), (t * std::f64::consts::FRAC_PI_2).sin());
            let m = d.len();
            HermitianMatrix::new(ComplexMatrix::from_fn(m, m, |x, y| match flips(x, y) {
                Some(0) => re(c),
                Some(_) => re(s),
                None => re(0.0),
            }))
        })
    }
}

/// Named functions for demos: `or`, `and`, `parity`, `majority`.
pub fn named_function(name: &str) -> Result<fn(usize, usize) -> bool> {
    Ok(match name {
        "or" => |x, _| x != 0,
        "and" => |x, n| x == (1 << n) - 1,
        "parity" => |x, _| x.count_ones() % 2 == 1,
        "majority" => |x, n| 2 * x.count_ones() as usize > n,
        other => return Err(Error::Parse(format!("unknown function `{other}`"))),
    })
}

/// Permutations of `{0, …, n−1}` stored as `p[i] = π(i)`; element `i` stands
/// for `i + 1`, so the distinguished element `1` is index 0.
pub type Permutation = Vec<usize>;

/// The cycle word `(1, π(1), π²(1), …)` if `π` is a single `n`-cycle.
fn cycle_word(p: &[usize]) -> Result<Vec<usize>> {
    let n = p.len();
    if n == 0 {
        return Err(Error::NotACycle("empty permutation".into()));
    }
    let mut seen = vec![false; n];
    let mut word = Vec::with_capacity(n);
    let mut cur = 0;
    for _ in 0..n {
        if cur >= n || seen[cur] {
            return Err(Error::NotACycle(format!("{p:?}")));
        }
        seen[cur] = true;
        word.push(cur);
        cur = p[cur];
    }
    if cur != 0 {
        return Err(Error::NotACycle(format!("{p:?}")));
    }
    Ok(word)
}

/// All single `n`-cycles, ordered lexicographically by cycle word.
pub fn single_cycles(n: usize) -> Vec<Permutation> {
    fn rec(word: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        let n = used.len();
        if word.len() == n {
            let mut p = vec![0; n];
            for i in 0..n {
                p[word[i]] = word[(i + 1) % n];
            }
            out.push(p);
            return;
        }
        for e in 1..n {
            if !used[e] {
                used[e] = true;
                word.push(e);
                rec(word, used, out);
                word.pop();
                used[e] = false;
            }
        }
    }
    if n == 0 {
        return Vec::new();
    }
    let mut used = vec![false; n];
    used[0] = true;
    let mut out = Vec::new();
    rec(&mut vec![0], &mut used, &mut out);
    out
}

/// The pair `(k, ℓ)` with `1 ≤ k < ℓ < n` (1-based word positions) such that
/// `σ` is `π` with the segment `p_{k+1} … p_ℓ` moved to the end of the cycle.
pub fn relation_witness(pi: &[usize], sigma: &[usize]) -> Result<Option<(usize, usize)>> {
    let p = cycle_word(pi)?;
    let q = cycle_word(sigma)?;
    if p.len() != q.len() {
        return Err(Error::NotACycle(format!("cycles of lengths {} and {}", p.len(), q.len())));
    }
    let n = p.len();
    let Some(k) = (0..n).find(|&i| p[i] != q[i]) else {
        return Ok(None);
    };
    let j = p.iter().position(|&e| e == q[k]).expect("same element set");
    if j <= k || j >= n {
        return Ok(None);
    }
    let moved = p[..k].iter().chain(&p[j..]).chain(&p[k..j]);
    if moved.zip(&q).all(|(a, b)| a == b) {
        Ok(Some((k, j)))
    } else {
        Ok(None)
    }
}

/// Whether `π` and `σ` are related.
pub fn relation_check(pi: &[usize], sigma: &[usize]) -> Result<bool> {
    Ok(relation_witness(pi, sigma)?.is_some())
}

/// `max √(R_i C_j)` over nonzero entries of a matrix with entries `0, ±1`.
pub fn spalek_bound(a: &ComplexMatrix) -> Result<f64> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if z.im != 0.0 || !(z.re == 0.0 || z.re == 1.0 || z.re == -1.0) {
                return Err(Error::EntryDomain(i, j));
            }
        }
    }
    Ok(spalek_real(&a.map(|z| z.re)))
}

fn spalek_real(a: &DMatrix<f64>) -> f64 {
    let rows: Vec<usize> = a.row_iter().map(|r| r.iter().filter(|&&v| v != 0.0).count()).collect();
    let cols: Vec<usize> = a.column_iter().map(|c| c.iter().filter(|&&v| v != 0.0).count()).collect();
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != 0.0 {
                best = best.max(((rows[i] * cols[j]) as f64).sqrt());
            }
        }
    }
    best
}

/// Spectral quantities of the permutation inversion certificate.
#[derive(Clone, Debug, Serialize)]
pub struct PermReport {
    pub n: usize,
    pub cycles: usize,
    pub lambda_gamma: f64,
    pub lambda_neg_gamma: f64,
    pub norm_gamma_delta_prime: f64,
    pub lambda_gamma_delta_dblprime: f64,
    pub lambda_gamma_delta: f64,
    pub spalek: f64,
    /// `λ_max(Γ∘E)/λ_max(Γ∘Δ)` with `τ_π = |π⁻¹(1)⟩`.
    pub ratio: f64,
}

/// Unitary permutation inversion restricted to single `n`-cycles.
#[derive(Clone, Debug)]
pub struct PermInversion {
    pub n: usize,
    pub cycles: Vec<Permutation>,
    /// `Γ[π,σ] = 1` for related pairs.
    pub gamma: HermitianMatrix,
    witnesses: Vec<Option<(usize, usize)>>,
    words: Vec<Vec<usize>>,
    pub report: PermReport,
}

pub const PERM_RANGE: std::ops::RangeInclusive<usize> = 3..=7;

fn inverse_of_one(p: &[usize]) -> usize {
    p.iter().position(|&v| v == 0).expect("permutation")
}

fn lambda_max_real(a: DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(a).eigenvalues;
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

pub fn perm_inversion(n: usize) -> Result<PermInversion> {
    if !PERM_RANGE.contains(&n) {
        return Err(Error::Range(format!("n must be in {PERM_RANGE:?}, got {n}")));
    }
    let cycles = single_cycles(n);
    let words: Vec<Vec<usize>> = cycles.iter().map(|p| cycle_word(p)).collect::<Result<_>>()?;
    let m = cycles.len();
    let mut witnesses = vec![None; m * m];
    for a in 0..m {
        for b in 0..m {
            witnesses[a * m + b] = relation_witness(&cycles[a], &cycles[b])?;
        }
    }
    let gamma_real = DMatrix::from_fn(m, m, |a, b| f64::from(u8::from(witnesses[a * m + b].is_some())));
    let gamma = HermitianMatrix::new(gamma_real.map(re))?;
    let mut inst = PermInversion { n, cycles, gamma, witnesses, words, report: empty_report(n, m) };
    inst.report = inst.compute_report(&gamma_real);
    Ok(inst)
}

fn empty_report(n: usize, m: usize) -> PermReport {
    PermReport {
        n,
        cycles: m,
        lambda_gamma: 0.0,
        lambda_neg_gamma: 0.0,
        norm_gamma_delta_prime: 0.0,
        lambda_gamma_delta_dblprime: 0.0,
        lambda_gamma_delta: 0.0,
        spalek: 0.0,
        ratio: 0.0,
    }
}

impl PermInversion {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn witness(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        self.witnesses[a * self.len() + b]
    }

    /// `O_π|i⟩ = |π(i)⟩`.
    pub fn oracle(&self, a: usize) -> ComplexMatrix {
        let p = &self.cycles[a];
        ComplexMatrix::from_fn(self.n, self.n, |i, j| if p[j] == i { re(1.0) } else { re(0.0) })
    }

    /// `Δ_{πσ} = I − O_π*O_σ`.
    pub fn delta(&self, a: usize, b: usize) -> ComplexMatrix {
        ComplexMatrix::identity(self.n, self.n) - self.oracle(a).adjoint() * self.oracle(b)
    }

    /// `Δ″_{πσ}`: for related pairs the single `−1` at row `p_n`, column `p_ℓ`;
    /// zero otherwise.
    pub fn delta_dblprime(&self, a: usize, b: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        if let Some((_, l)) = self.witness(a, b) {
            let w = &self.words[a];
            out[(w[self.n - 1], w[l - 1])] = re(-1.0);
        }
        out
    }

    /// `Δ′ = Δ − Δ″`.
    pub fn delta_prime(&self, a: usize, b: usize) -> ComplexMatrix {
        self.delta(a, b) - self.delta_dblprime(a, b)
    }

    pub fn delta_family(&self) -> BlockFamily {
        BlockFamily::from_fn(self.len(), self.n, self.n, |a, b| self.delta(a, b)).expect("square blocks")
    }

    pub fn delta_prime_family(&self) -> BlockFamily {
        BlockFamily::from_fn(self.len(), self.n, self.n, |a, b| self.delta_prime(a, b)).expect("square blocks")
    }

    pub fn delta_dblprime_family(&self) -> BlockFamily {
        BlockFamily::from_fn(self.len(), self.n, self.n, |a, b| self.delta_dblprime(a, b)).expect("square blocks")
    }

    /// `Γ∘D` as a real matrix indexed by `(π, i) ↦ π·n + i`.
    fn gamma_times(&self, block: impl Fn(usize, usize) -> ComplexMatrix) -> DMatrix<f64> {
        let (m, n) = (self.len(), self.n);
        let mut out = DMatrix::zeros(m * n, m * n);
        for a in 0..m {
            for b in 0..m {
                if self.witness(a, b).is_none() {
                    continue;
                }
                let d = block(a, b);
                for i in 0..n {
                    for j in 0..n {
                        out[(a * n + i, b * n + j)] = d[(i, j)].re;
                    }
                }
            }
        }
        out
    }

    /// `Γ∘Δ′` with entries in `{0, ±1}`.
    pub fn gamma_delta_prime(&self) -> ComplexMatrix {
        self.gamma_times(|a, b| self.delta_prime(a, b)).map(re)
    }

    /// The output gap `E[π,σ] = 1 − ⟨τ_π, τ_σ⟩` for `τ_π = |π⁻¹(1)⟩`.
    pub fn exact_output_gap(&self) -> HermitianMatrix {
        let m = self.len();
        let targets: Vec<usize> = self.cycles.iter().map(|p| inverse_of_one(p)).collect();
        HermitianMatrix::symmetrize(ComplexMatrix::from_fn(m, m, |a, b| re(if targets[a] == targets[b] { 0.0 } else { 1.0 })))
    }

    fn compute_report(&self, gamma: &DMatrix<f64>) -> PermReport {
        let m = self.len();
        let (lambda_gamma, min_gamma) = lambda_max_real(gamma.clone());
        let gd_prime = self.gamma_times(|a, b| self.delta_prime(a, b));
        let spalek = spalek_real(&gd_prime);
        let (pmax, pmin) = lambda_max_real(gd_prime);
        let (lambda_dbl, _) = lambda_max_real(self.gamma_times(|a, b| self.delta_dblprime(a, b)));
        let (lambda_delta, _) = lambda_max_real(self.gamma_times(|a, b| self.delta(a, b)));
        let e = self.exact_output_gap();
        let ge = DMatrix::from_fn(m, m, |a, b| gamma[(a, b)] * e[(a, b)].re);
        let (lambda_e, _) = lambda_max_real(ge);
        PermReport {
            n: self.n,
            cycles: m,
            lambda_gamma,
            lambda_neg_gamma: -min_gamma,
            norm_gamma_delta_prime: pmax.abs().max(pmin.abs()),
            lambda_gamma_delta_dblprime: lambda_dbl,
            lambda_gamma_delta: lambda_delta,
            spalek,
            ratio: lambda_e / lambda_delta,
        }
    }

    /// The state conversion problem `|0⟩ ↦ τ_π` on the single-cycle labels.
    pub fn problem(&self, tau: Vec<ComplexVector>) -> Result<StateConversionProblem> {
        let labels = self.cycles.iter().map(|p| p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")).collect();
        let fam = OracleFamily::single_block(labels, (0..self.len()).map(|a| self.oracle(a)).collect(), OracleKind::Unitary)?;
        let k = tau.first().map_or(0, |t| t.len()).max(1);
        let mut e0 = ComplexVector::zeros(k);
        e0[0] = re(1.0);
        StateConversionProblem::new(fam, k, vec![e0; self.len()], tau)
    }

    /// `τ_π = |π⁻¹(1)⟩` in `ℂⁿ`.
    pub fn exact_outputs(&self) -> Vec<ComplexVector> {
        self.cycles
            .iter()
            .map(|p| {
                let mut v = ComplexVector::zeros(self.n);
                v[inverse_of_one(p)] = re(1.0);
                v
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::residual;
    use crate::numlin::{lambda_max, spectral_norm};

    fn pm(sign: f64) -> UnitaryMatrix {
        UnitaryMatrix::new(ComplexMatrix::from_element(1, 1, re(sign))).unwrap()
    }

    #[test]
    fn two_label_bound_and_boundary() {
        let t = two_label(re(1.0), re(0.0), &pm(1.0), &pm(-1.0)).unwrap();
        assert!((t.bound - 0.5).abs() < 1e-15);
        let sol = t.boundary_solution(0.5).unwrap();
        assert!(residual(&sol, &t.problem).unwrap() <= 1e-12);
        let prof = sol.profile_values();
        assert!((prof[0][0] - 0.5).abs() < 1e-12 && (prof[1][0] - 0.5).abs() < 1e-12);
        let skew = t.boundary_solution(0.2).unwrap();
        assert!(residual(&skew, &t.problem).unwrap() <= 1e-12);
        assert!((skew.profile_values()[1][0] - 1.25).abs() < 1e-12);
        assert!(t.dual_scan(16).unwrap() >= 0.5 - 1e-9);
    }

    #[test]
    fn two_label_complex_and_degenerate() {
        let o0 = UnitaryMatrix::diagonal(&[re(1.0), re(1.0)]).unwrap();
        let o1 = UnitaryMatrix::diagonal(&[C64::from_polar(1.0, 0.7), re(-1.0)]).unwrap();
        let t = two_label(C64::new(0.3, 0.4), C64::new(-0.2, 0.1), &o0, &o1).unwrap();
        let sol = t.boundary_solution(1.7).unwrap();
        assert!(residual(&sol, &t.problem).unwrap() <= 1e-12);
        let same = two_label(re(0.5), re(0.5), &pm(1.0), &pm(-1.0)).unwrap();
        assert_eq!(same.bound, 0.0);
        assert_eq!(residual(&same.boundary_solution(1.0).unwrap(), &same.problem).unwrap(), 0.0);
        assert!(matches!(two_label(re(1.0), re(0.0), &pm(1.0), &pm(1.0)), Err(Error::Infeasible(_))));
        assert!(matches!(two_label(re(1.5), re(0.0), &pm(1.0), &pm(-1.0)), Err(Error::Range(_))));
    }

    #[test]
    fn boolean_identity_and_or() {
        let id = boolean_problem(1, &[0, 1], |x| x == 1).unwrap();
        assert_eq!(id.gap()[(0, 1)], re(1.0));
        assert_eq!(id.delta_family().get(0, 1)[(0, 0)], re(1.0));
        let full = crate::model::problem_gram_gap(&id.problem);
        assert_eq!(full[(0, 1)], re(2.0));
        let f = named_function("or").unwrap();
        let or2 = boolean_problem(2, &[0, 1, 2, 3], |x| f(x, 2)).unwrap();
        assert_eq!(or2.problem.labels(), ["00", "01", "10", "11"]);
        let best = dual_scan(&or2.problem, 64, |t| {
            let (c, s) = ((t * std::f64::consts::FRAC_PI_2).cos(), (t * std::f64::consts::FRAC_PI_2).sin());
            let mut g = ComplexMatrix::zeros(4, 4);
            g[(0, 1)] = re(c);
            g[(1, 0)] = re(c);
            g[(0, 2)] = re(s);
            g[(2, 0)] = re(s);
            HermitianMatrix::new(g)
        })
        .unwrap();
        assert!((best - 2f64.sqrt()).abs() < 1e-9, "{best}");
        assert!((or2.sensitivity_scan(64).unwrap() - 2f64.sqrt()).abs() < 1e-9);
        let konst = boolean_problem(2, &[0, 3], |_| true).unwrap();
        assert!(max_abs_h(&konst.gap()) == 0.0);
        assert!(matches!(boolean_problem(2, &[], |_| true), Err(Error::DegenerateInput(_))));
    }

    fn max_abs_h(h: &HermitianMatrix) -> f64 {
        crate::numlin::max_abs(h.matrix())
    }

    #[test]
    fn relation_basics() {
        let c3 = single_cycles(3);
        assert_eq!(c3.len(), 2);
        assert!(relation_check(&c3[0], &c3[1]).unwrap());
        assert!(!relation_check(&c3[0], &c3[0]).unwrap());
        assert!(matches!(relation_check(&[1, 0, 2], &c3[0]), Err(Error::NotACycle(_))));
        let c5 = single_cycles(5);
        for a in &c5 {
            let related: Vec<_> = c5.iter().filter(|b| relation_check(a, b).unwrap()).collect();
            assert_eq!(related.len(), 6);
            for b in related {
                assert!(relation_check(b, a).unwrap());
                assert_ne!(inverse_of_one(a), inverse_of_one(b));
            }
        }
    }

    #[test]
    fn delta_pattern_for_related_pairs() {
        let inst = perm_inversion(5).unwrap();
        for a in 0..inst.len() {
            for b in 0..inst.len() {
                let Some((k, l)) = inst.witness(a, b) else { continue };
                let w = &inst.words[a];
                let idx = [w[k - 1], w[l - 1], w[4]];
                let pattern = [[1.0, 0.0, -1.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]];
                let d = inst.delta(a, b);
                let mut expect = ComplexMatrix::zeros(5, 5);
                for i in 0..3 {
                    for j in 0..3 {
                        expect[(idx[i], idx[j])] = re(pattern[i][j]);
                    }
                }
                assert_eq!(d, expect);
            }
        }
    }

    #[test]
    fn small_reports() {
        let r3 = perm_inversion(3).unwrap();
        assert_eq!(r3.gamma.matrix(), &ComplexMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]));
        assert!((r3.report.lambda_gamma - 1.0).abs() < 1e-12);
        let r4 = perm_inversion(4).unwrap();
        assert!((r4.report.lambda_gamma - 3.0).abs() < 1e-9);
        assert!(r4.report.lambda_neg_gamma <= 2.0 + 1e-9);
        let gd = r4.gamma_delta_prime();
        assert!(spectral_norm(&gd) <= spalek_bound(&gd).unwrap() + 1e-9);
        let full = crate::numlin::block_hadamard(&r4.gamma, &r4.delta_family()).unwrap();
        assert!((lambda_max(&full) - r4.report.lambda_gamma_delta).abs() < 1e-9);
        assert!(matches!(perm_inversion(2), Err(Error::Range(_))));
    }

    #[test]
    fn spalek_cases() {
        assert_eq!(spalek_bound(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        let mut one = ComplexMatrix::zeros(2, 3);
        one[(1, 2)] = re(-1.0);
        assert_eq!(spalek_bound(&one).unwrap(), 1.0);
        one[(0, 0)] = re(0.5);
        assert_eq!(spalek_bound(&one), Err(Error::EntryDomain(0, 0)));
    }

    #[test]
    fn bounded_error_outputs_give_gamma_fraction() {
        let inst = perm_inversion(4).unwrap();
        let c = 2.0 * 2f64.sqrt() / 3.0;
        let m = inst.len();
        let tau: Vec<ComplexVector> = inst
            .cycles
            .iter()
            .map(|p| {
                let mut v = ComplexVector::zeros(inst.n + 1);
                v[0] = re(c.sqrt());
                v[1 + inverse_of_one(p)] = re((1.0 - c).sqrt());
                v
            })
            .collect();
        let u = ComplexVector::from_element(m, re(1.0 / (m as f64).sqrt()));
        let e = ComplexMatrix::from_fn(m, m, |a, b| re(1.0) - tau[a].dotc(&tau[b]));
        let ge = inst.gamma.matrix().component_mul(&e);
        let val = u.dotc(&(ge * &u)).re;
        assert!(val >= (1.0 - c) * inst.report.lambda_gamma - 1e-9);
        let g = inst.gamma.matrix() + ComplexMatrix::identity(m, m) * re((inst.n - 2) as f64);
        assert!(crate::numlin::lambda_min(&HermitianMatrix::new(g).unwrap()) >= -1e-9);
        let _ = inst.problem(inst.exact_outputs()).unwrap();
    }
}

//! Query algorithms `U_T Õ U_{T−1} ⋯ Õ U_0`, partial executions and Las Vegas
//! complexities.
//!
//! Each `U_t` is stored as a [`Step`]: a product of sparse unitary factors
//! acting on few coordinates. A dense `U_t` is a single [`Factor::Local`] over
//! all coordinates.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BlockVector, ComplexityProfile, OracleFamily, StateConversionProblem};
use crate::numlin::{spectral_norm, ComplexMatrix, ComplexVector, UnitaryMatrix, C64};

/// One sparse unitary factor.
#[derive(Clone, Debug)]
pub enum Factor {
    /// `matrix` on the listed coordinates, identity elsewhere.
    Local { coords: Vec<usize>, matrix: Arc<UnitaryMatrix> },
    /// Householder reflection `I − 2ww*` (with `‖w‖ = 1`) on the listed coordinates.
    Reflector { coords: Vec<usize>, w: ComplexVector },
    /// Moves the amplitude at `from` to `to` for each `(from, to)` pair.
    Permute(Vec<(usize, usize)>),
}

fn check_distinct(coords: &[usize]) -> Result<()> {
    let mut sorted = coords.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Shape("factor coordinates must be distinct".into()));
    }
    Ok(())
}

impl Factor {
    pub fn local(coords: Vec<usize>, matrix: UnitaryMatrix) -> Result<Factor> {
        Self::local_shared(coords, Arc::new(matrix))
    }

    pub fn local_shared(coords: Vec<usize>, matrix: Arc<UnitaryMatrix>) -> Result<Factor> {
        if matrix.dim() != coords.len() {
            return Err(Error::Shape(format!("{}x{} matrix on {} coordinates", matrix.dim(), matrix.dim(), coords.len())));
        }
        check_distinct(&coords)?;
        Ok(Factor::Local { coords, matrix })
    }

    /// A dense unitary on coordinates `0..n`.
    pub fn dense(u: UnitaryMatrix) -> Factor {
        let n = u.dim();
        Factor::Local { coords: (0..n).collect(), matrix: Arc::new(u) }
    }

    pub fn reflector(coords: Vec<usize>, w: ComplexVector) -> Result<Factor> {
        if w.len() != coords.len() {
            return Err(Error::Shape("reflector vector length differs from coordinate count".into()));
        }
        check_distinct(&coords)?;
        let n = w.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateInput("reflector vector must be nonzero".into()));
        }
        Ok(Factor::Reflector { coords, w: w.unscale(n) })
    }

    pub fn permutation(moves: Vec<(usize, usize)>) -> Result<Factor> {
        let mut from: Vec<usize> = moves.iter().map(|m| m.0).collect();
        let mut to: Vec<usize> = moves.iter().map(|m| m.1).collect();
        from.sort_unstable();
        to.sort_unstable();
        if from != to || from.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Shape("permutation moves must be a bijection on their support".into()));
        }
        Ok(Factor::Permute(moves))
    }

    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Factor::Local { coords, .. } | Factor::Reflector { coords, .. } => coords.iter().copied().max(),
            Factor::Permute(m) => m.iter().map(|p| p.0.max(p.1)).max(),
        }
    }

    pub fn apply(&self, state: &mut [C64]) {
        match self {
            Factor::Local { coords, matrix } => {
                let x = ComplexVector::from_iterator(coords.len(), coords.iter().map(|&c| state[c]));
                let y = matrix.matrix() * x;
                for (k, &c) in coords.iter().enumerate() {
                    state[c] = y[k];
                }
            }
            Factor::Reflector { coords, w } => {
                let mut p = C64::new(0.0, 0.0);
                for (k, &c) in coords.iter().enumerate() {
                    p += w[k].conj() * state[c];
                }
                let p2 = p * 2.0;
                for (k, &c) in coords.iter().enumerate() {
                    state[c] -= w[k] * p2;
                }
            }
            Factor::Permute(moves) => {
                let vals: Vec<C64> = moves.iter().map(|&(f, _)| state[f]).collect();
                for (&(_, t), v) in moves.iter().zip(vals) {
                    state[t] = v;
                }
            }
        }
    }

    pub fn inverse(&self) -> Factor {
        match self {
            Factor::Local { coords, matrix } => {
                Factor::Local { coords: coords.clone(), matrix: Arc::new(matrix.adjoint()) }
            }
            Factor::Reflector { .. } => self.clone(),
            Factor::Permute(m) => Factor::Permute(m.iter().map(|&(f, t)| (t, f)).collect()),
        }
    }

    /// The same factor with every coordinate `c` renamed to `map(c)`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Factor {
        match self {
            Factor::Local { coords, matrix } => {
                Factor::Local { coords: coords.iter().map(|&c| map(c)).collect(), matrix: matrix.clone() }
            }
            Factor::Reflector { coords, w } => {
                Factor::Reflector { coords: coords.iter().map(|&c| map(c)).collect(), w: w.clone() }
            }
            Factor::Permute(m) => Factor::Permute(m.iter().map(|&(f, t)| (map(f), map(t))).collect()),
        }
    }
}

/// The unitary `U_t`: factors applied in order (first factor acts first).
#[derive(Clone, Debug, Default)]
pub struct Step {
    pub factors: Vec<Factor>,
}

impl Step {
    pub fn identity() -> Step {
        Step { factors: Vec::new() }
    }

    pub fn dense(u: UnitaryMatrix) -> Step {
        Step { factors: vec![Factor::dense(u)] }
    }

    pub fn apply(&self, state: &mut [C64]) {
        for f in &self.factors {
            f.apply(state);
        }
    }

    pub fn inverse(&self) -> Step {
        Step { factors: self.factors.iter().rev().map(Factor::inverse).collect() }
    }

    pub fn relabel(&self, map: impl Fn(usize) -> usize + Copy) -> Step {
        Step { factors: self.factors.iter().map(|f| f.relabel(map)).collect() }
    }

    pub fn then(mut self, other: &Step) -> Step {
        self.factors.extend(other.factors.iter().cloned());
        self
    }

    /// Dense `h × h` matrix of this step.
    pub fn to_dense(&self, h: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(h, h);
        for j in 0..h {
            let mut col: Vec<C64> = m.column(j).iter().copied().collect();
            self.apply(&mut col);
            m.set_column(j, &ComplexVector::from_vec(col));
        }
        m
    }
}

/// How `(M ⊗ B) ⊕ C` sits inside the workspace: coordinate `layout[m·b_dim + b]`
/// hosts `|m⟩ ⊗ |b⟩`, and `layout[dim M · b_dim ..]` are the skipped coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryEmbedding {
    pub b_dim: usize,
    pub c_dim: usize,
    pub layout: Vec<usize>,
}

impl QueryEmbedding {
    /// Identity layout: the query block occupies the leading coordinates.
    pub fn standard(m_dim: usize, b_dim: usize, c_dim: usize) -> QueryEmbedding {
        QueryEmbedding { b_dim, c_dim, layout: (0..m_dim * b_dim + c_dim).collect() }
    }

    /// Embedding used by algorithms without queries.
    pub fn trivial(h_dim: usize, m_dim: usize) -> QueryEmbedding {
        if h_dim >= m_dim {
            QueryEmbedding::standard(m_dim, 1, h_dim - m_dim)
        } else {
            QueryEmbedding::standard(m_dim, 0, h_dim)
        }
    }

    pub fn slot_len(&self) -> usize {
        self.layout.len() - self.c_dim
    }

    pub fn slot(&self) -> &[usize] {
        &self.layout[..self.slot_len()]
    }

    fn validate(&self, h_dim: usize, m_dim: usize) -> Result<()> {
        if m_dim * self.b_dim + self.c_dim != h_dim {
            return Err(Error::Shape(format!(
                "embedding {}·{} + {} does not fill a workspace of dimension {h_dim}",
                m_dim, self.b_dim, self.c_dim
            )));
        }
        if self.layout.len() != h_dim {
            return Err(Error::Shape("layout length must equal h_dim".into()));
        }
        let mut seen = vec![false; h_dim];
        for &c in &self.layout {
            if c >= h_dim || seen[c] {
                return Err(Error::Shape("layout is not a permutation of the workspace coordinates".into()));
            }
            seen[c] = true;
        }
        Ok(())
    }
}

/// `𝒜(O) = U_T Õ U_{T−1} ⋯ U_1 Õ U_0`.
#[derive(Clone, Debug)]
pub struct QueryAlgorithm {
    h_dim: usize,
    steps: Vec<Step>,
    embedding: QueryEmbedding,
    oracle_block_dims: Vec<usize>,
}

impl QueryAlgorithm {
    pub fn new(h_dim: usize, steps: Vec<Step>, embedding: QueryEmbedding, oracle_block_dims: Vec<usize>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Shape("an algorithm needs at least U_0".into()));
        }
        if oracle_block_dims.is_empty() || oracle_block_dims.contains(&0) {
            return Err(Error::Shape("oracle block dimensions must be positive".into()));
        }
        let m: usize = oracle_block_dims.iter().sum();
        embedding.validate(h_dim, m)?;
        for (t, s) in steps.iter().enumerate() {
            for f in &s.factors {
                if f.max_coord().is_some_and(|c| c >= h_dim) {
                    return Err(Error::Shape(format!("U_{t} touches a coordinate outside the workspace")));
                }
            }
        }
        Ok(QueryAlgorithm { h_dim, steps, embedding, oracle_block_dims })
    }

    /// From dense unitaries `U_0..U_T`.
    pub fn from_unitaries(
        h_dim: usize,
        unitaries: Vec<UnitaryMatrix>,
        embedding: QueryEmbedding,
        oracle_block_dims: Vec<usize>,
    ) -> Result<Self> {
        if let Some(u) = unitaries.iter().find(|u| u.dim() != h_dim) {
            return Err(Error::Shape(format!("{}x{} unitary in a workspace of dimension {h_dim}", u.dim(), u.dim())));
        }
        Self::new(h_dim, unitaries.into_iter().map(Step::dense).collect(), embedding, oracle_block_dims)
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn embedding(&self) -> &QueryEmbedding {
        &self.embedding
    }

    pub fn oracle_block_dims(&self) -> &[usize] {
        &self.oracle_block_dims
    }

    pub fn m_dim(&self) -> usize {
        self.oracle_block_dims.iter().sum()
    }

    /// Number of queries `T`.
    pub fn queries(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_sliced(&self) -> bool {
        self.embedding.b_dim == 1
    }

    /// Dense `U_t`.
    pub fn unitary(&self, t: usize) -> ComplexMatrix {
        self.steps[t].to_dense(self.h_dim)
    }

    fn check_oracle(&self, o: &ComplexMatrix) -> Result<()> {
        let m = self.m_dim();
        if o.nrows() != m || o.ncols() != m {
            return Err(Error::Shape(format!("oracle is {}x{}, algorithm expects {m}x{m}", o.nrows(), o.ncols())));
        }
        Ok(())
    }

    fn check_family(&self, fam: &OracleFamily) -> Result<()> {
        if fam.block_dims() != self.oracle_block_dims.as_slice() {
            return Err(Error::Shape(format!(
                "oracle blocks {:?} do not match the algorithm's {:?}",
                fam.block_dims(),
                self.oracle_block_dims
            )));
        }
        Ok(())
    }

    fn padded(&self, xi: &ComplexVector) -> Result<Vec<C64>> {
        if xi.len() > self.h_dim {
            return Err(Error::Shape(format!("state of length {} exceeds workspace {}", xi.len(), self.h_dim)));
        }
        let mut st = vec![C64::new(0.0, 0.0); self.h_dim];
        st[..xi.len()].copy_from_slice(xi.as_slice());
        Ok(st)
    }

    fn gather_slot(&self, st: &[C64]) -> ComplexMatrix {
        let b = self.embedding.b_dim;
        ComplexMatrix::from_fn(self.m_dim(), b, |m, j| st[self.embedding.layout[m * b + j]])
    }

    fn query(&self, o: &ComplexMatrix, st: &mut [C64]) -> ComplexMatrix {
        let b = self.embedding.b_dim;
        let x = self.gather_slot(st);
        if b > 0 {
            let y = o * &x;
            for m in 0..self.m_dim() {
                for j in 0..b {
                    st[self.embedding.layout[m * b + j]] = y[(m, j)];
                }
            }
        }
        x
    }

    /// Runs up to `S_{t_stop} ξ`, reporting each query input.
    fn drive(
        &self,
        o: &ComplexMatrix,
        xi: &ComplexVector,
        t_stop: usize,
        mut on_query: impl FnMut(usize, ComplexMatrix),
    ) -> Result<Vec<C64>> {
        self.check_oracle(o)?;
        let mut st = self.padded(xi)?;
        self.steps[0].apply(&mut st);
        for s in 1..t_stop {
            let x = self.query(o, &mut st);
            on_query(s, x);
            self.steps[s].apply(&mut st);
        }
        Ok(st)
    }

    fn check_t(&self, t: usize, upper: usize) -> Result<()> {
        if t < 1 || t > upper {
            return Err(Error::Range(format!("query index {t} outside 1..={upper}")));
        }
        Ok(())
    }
}

/// Partial-execution data: every query input plus the final state.
#[derive(Clone, Debug)]
pub struct QueryRecord {
    pub queries: Vec<BlockVector>,
    pub final_state: ComplexVector,
}

/// `𝒜(O)` as a dense matrix.
pub fn apply_with(algo: &QueryAlgorithm, o: &ComplexMatrix) -> Result<ComplexMatrix> {
    algo.check_oracle(o)?;
    let h = algo.h_dim;
    let mut out = ComplexMatrix::zeros(h, h);
    for j in 0..h {
        let mut e = ComplexVector::zeros(h);
        e[j] = C64::new(1.0, 0.0);
        let col = final_state_with(algo, o, &e)?;
        out.set_column(j, &col);
    }
    Ok(out)
}

pub fn apply(algo: &QueryAlgorithm, fam: &OracleFamily, x: &str) -> Result<ComplexMatrix> {
    algo.check_family(fam)?;
    apply_with(algo, &fam.operator(fam.index_of(x)?))
}

/// `𝒜(O)ξ`; `ξ` shorter than the workspace is zero-padded.
pub fn final_state_with(algo: &QueryAlgorithm, o: &ComplexMatrix, xi: &ComplexVector) -> Result<ComplexVector> {
    let st = algo.drive(o, xi, algo.queries() + 1, |_, _| {})?;
    Ok(ComplexVector::from_vec(st))
}

pub fn final_state(algo: &QueryAlgorithm, fam: &OracleFamily, x: &str, xi: &ComplexVector) -> Result<ComplexVector> {
    algo.check_family(fam)?;
    final_state_with(algo, &fam.operator(fam.index_of(x)?), xi)
}

/// `S_t ξ` for `1 ≤ t ≤ T + 1`.
pub fn state_before_query_with(algo: &QueryAlgorithm, o: &ComplexMatrix, t: usize, xi: &ComplexVector) -> Result<ComplexVector> {
    algo.check_t(t, algo.queries() + 1)?;
    Ok(ComplexVector::from_vec(algo.drive(o, xi, t, |_, _| {})?))
}

pub fn state_before_query(
    algo: &QueryAlgorithm,
    fam: &OracleFamily,
    x: &str,
    t: usize,
    xi: &ComplexVector,
) -> Result<ComplexVector> {
    algo.check_family(fam)?;
    state_before_query_with(algo, &fam.operator(fam.index_of(x)?), t, xi)
}

/// `Q_t ξ = Π S_t ξ` with `w_dim = b_dim`, for `1 ≤ t ≤ T`.
pub fn query_input_with(algo: &QueryAlgorithm, o: &ComplexMatrix, t: usize, xi: &ComplexVector) -> Result<BlockVector> {
    algo.check_t(t, algo.queries())?;
    let st = algo.drive(o, xi, t, |_, _| {})?;
    BlockVector::from_stacked(&algo.oracle_block_dims, &algo.gather_slot(&st))
}

pub fn query_input(algo: &QueryAlgorithm, fam: &OracleFamily, x: &str, t: usize, xi: &ComplexVector) -> Result<BlockVector> {
    algo.check_family(fam)?;
    query_input_with(algo, &fam.operator(fam.index_of(x)?), t, xi)
}

/// `Σ_t ‖Q_t ξ‖²` per oracle block.
pub fn las_vegas_with(algo: &QueryAlgorithm, o: &ComplexMatrix, xi: &ComplexVector) -> Result<Vec<f64>> {
    let dims = &algo.oracle_block_dims;
    let mut acc = vec![0.0; dims.len()];
    algo.drive(o, xi, algo.queries() + 1, |_, x| {
        let mut off = 0;
        for (i, &d) in dims.iter().enumerate() {
            acc[i] += x.rows(off, d).norm_squared();
            off += d;
        }
    })?;
    Ok(acc)
}

pub fn las_vegas(algo: &QueryAlgorithm, fam: &OracleFamily, x: &str, xi: &ComplexVector) -> Result<Vec<f64>> {
    algo.check_family(fam)?;
    las_vegas_with(algo, &fam.operator(fam.index_of(x)?), xi)
}

/// `⊕_t Q_t ξ` along `W`; `w_dim = T · b_dim`.
pub fn total_query_with(algo: &QueryAlgorithm, o: &ComplexMatrix, xi: &ComplexVector) -> Result<BlockVector> {
    let b = algo.embedding.b_dim;
    let t_total = algo.queries();
    let mut stacked = ComplexMatrix::zeros(algo.m_dim(), t_total * b);
    algo.drive(o, xi, t_total + 1, |s, x| {
        stacked.columns_mut((s - 1) * b, b).copy_from(&x);
    })?;
    BlockVector::from_stacked(&algo.oracle_block_dims, &stacked)
}

pub fn total_query(algo: &QueryAlgorithm, fam: &OracleFamily, x: &str, xi: &ComplexVector) -> Result<BlockVector> {
    algo.check_family(fam)?;
    total_query_with(algo, &fam.operator(fam.index_of(x)?), xi)
}

pub fn record_with(algo: &QueryAlgorithm, o: &ComplexMatrix, xi: &ComplexVector) -> Result<QueryRecord> {
    let dims = algo.oracle_block_dims.clone();
    let mut queries = Vec::with_capacity(algo.queries());
    let st = algo.drive(o, xi, algo.queries() + 1, |_, x| {
        queries.push(BlockVector::from_stacked(&dims, &x).expect("slot matches block dims"));
    })?;
    Ok(QueryRecord { queries, final_state: ComplexVector::from_vec(st) })
}

/// `sup_{ξ ∈ span(basis), ‖ξ‖ = 1} L(𝒜, O, ξ)` per block.
pub fn subspace_las_vegas_with(algo: &QueryAlgorithm, o: &ComplexMatrix, basis: &ComplexMatrix) -> Result<Vec<f64>> {
    let r = basis.ncols();
    let dims = algo.oracle_block_dims.clone();
    let mut cols: Vec<BlockVector> = Vec::with_capacity(r);
    for j in 0..r {
        cols.push(total_query_with(algo, o, &basis.column(j).into_owned())?);
    }
    let w = algo.queries() * algo.embedding.b_dim;
    let mut out = Vec::with_capacity(dims.len());
    for (i, &d) in dims.iter().enumerate() {
        let mat = ComplexMatrix::from_fn(d * w, r, |k, j| cols[j].block(i)[(k / w, k % w)]);
        let n = spectral_norm(&mat);
        out.push(n * n);
    }
    Ok(out)
}

/// Rows `L(𝒜, O_x, ξ_x)` for every label of `p`.
pub fn las_vegas_profile(algo: &QueryAlgorithm, p: &StateConversionProblem) -> Result<ComplexityProfile> {
    algo.check_family(&p.oracles)?;
    let rows = (0..p.len())
        .map(|x| las_vegas_with(algo, &p.oracles.operator(x), &p.xi[x]))
        .collect::<Result<Vec<_>>>()?;
    ComplexityProfile::new(p.labels().to_vec(), rows)
}

/// Per-label `‖𝒜(O_x)ξ_x − τ_x‖` with `𝒦` as the leading coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct ConversionReport {
    pub labels: Vec<String>,
    pub errors: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl ConversionReport {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

pub fn check_state_conversion(algo: &QueryAlgorithm, p: &StateConversionProblem, tol: f64) -> Result<ConversionReport> {
    algo.check_family(&p.oracles)?;
    if p.k_dim > algo.h_dim {
        return Err(Error::Shape(format!("k_dim {} exceeds workspace {}", p.k_dim, algo.h_dim)));
    }
    let mut errors = Vec::with_capacity(p.len());
    for x in 0..p.len() {
        let out = final_state_with(algo, &p.oracles.operator(x), &p.xi[x])?;
        let mut target = ComplexVector::zeros(algo.h_dim);
        target.rows_mut(0, p.k_dim).copy_from(&p.tau[x]);
        errors.push((out - target).norm());
    }
    let pass = errors.iter().all(|&e| e <= tol);
    Ok(ConversionReport { labels: p.labels().to_vec(), errors, tol, pass })
}

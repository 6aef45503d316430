//! Building algorithms from algorithms: inversion, slicing, extensions,
//! sequential and functional composition, direct sums and tensor products.

use crate::error::{Error, Result};
use crate::sim::{Factor, QueryAlgorithm, QueryEmbedding, Step};

/// Layout whose query block is `slot` followed by the remaining coordinates in
/// increasing order.
fn layout_from_slot(slot: &[usize], h: usize, b_dim: usize) -> QueryEmbedding {
    let mut used = vec![false; h];
    for &c in slot {
        used[c] = true;
    }
    let mut layout = slot.to_vec();
    layout.extend((0..h).filter(|&c| !used[c]));
    QueryEmbedding { b_dim, c_dim: h - slot.len(), layout }
}

/// Assembles an algorithm from pieces that share one oracle space. Pieces
/// with a different query layout are conjugated by a coordinate permutation.
#[derive(Clone, Debug)]
pub struct AlgorithmBuilder {
    h_dim: usize,
    block_dims: Vec<usize>,
    embedding: QueryEmbedding,
    steps: Vec<Step>,
}

impl AlgorithmBuilder {
    pub fn new(h_dim: usize, block_dims: Vec<usize>, embedding: QueryEmbedding) -> Self {
        AlgorithmBuilder { h_dim, block_dims, embedding, steps: vec![Step::identity()] }
    }

    /// Builder whose query block sits at `slot` (length `dim M · b_dim`).
    pub fn with_slot(h_dim: usize, block_dims: Vec<usize>, slot: &[usize], b_dim: usize) -> Self {
        let emb = layout_from_slot(slot, h_dim, b_dim);
        Self::new(h_dim, block_dims, emb)
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn embedding(&self) -> &QueryEmbedding {
        &self.embedding
    }

    pub fn queries(&self) -> usize {
        self.steps.len() - 1
    }

    /// Appends oracle-independent factors to the pending unitary.
    pub fn push_factors(&mut self, factors: impl IntoIterator<Item = Factor>) {
        self.steps.last_mut().expect("at least one step").factors.extend(factors);
    }

    /// Appends `algo`, whose coordinate `c` is placed at `coord_map[c]`.
    pub fn push_algorithm(&mut self, algo: &QueryAlgorithm, coord_map: &[usize]) -> Result<()> {
        if algo.oracle_block_dims() != self.block_dims.as_slice() {
            return Err(Error::Shape("oracle spaces differ".into()));
        }
        if coord_map.len() != algo.h_dim() {
            return Err(Error::Shape("coordinate map must cover the whole workspace".into()));
        }
        let mut seen = vec![false; self.h_dim];
        for &c in coord_map {
            if c >= self.h_dim || seen[c] {
                return Err(Error::Shape("coordinate map must be injective into the workspace".into()));
            }
            seen[c] = true;
        }
        if algo.queries() == 0 {
            let s = algo.steps()[0].relabel(|c| coord_map[c]);
            self.push_factors(s.factors);
            return Ok(());
        }
        if algo.embedding().b_dim != self.embedding.b_dim {
            return Err(Error::Shape(format!(
                "query multiplicity {} differs from {} (slice first)",
                algo.embedding().b_dim,
                self.embedding.b_dim
            )));
        }
        let slot_alg: Vec<usize> = algo.embedding().slot().iter().map(|&c| coord_map[c]).collect();
        let slot_glob = self.embedding.slot().to_vec();
        let mut pi: Vec<usize> = (0..self.h_dim).collect();
        let mut in_a = vec![false; self.h_dim];
        let mut in_g = vec![false; self.h_dim];
        for (&a, &g) in slot_alg.iter().zip(&slot_glob) {
            pi[a] = g;
            in_a[a] = true;
            in_g[g] = true;
        }
        let g_only: Vec<usize> = slot_glob.iter().copied().filter(|&g| !in_a[g]).collect();
        let a_only: Vec<usize> = slot_alg.iter().copied().filter(|&a| !in_g[a]).collect();
        for (&g, &a) in g_only.iter().zip(&a_only) {
            pi[g] = a;
        }
        let moves: Vec<(usize, usize)> = (0..self.h_dim).filter(|&c| pi[c] != c).map(|c| (c, pi[c])).collect();
        if !moves.is_empty() {
            self.push_factors([Factor::Permute(moves.clone())]);
        }
        let map = |c: usize| pi[coord_map[c]];
        for (t, s) in algo.steps().iter().enumerate() {
            if t > 0 {
                self.steps.push(Step::identity());
            }
            self.push_factors(s.relabel(map).factors);
        }
        if !moves.is_empty() {
            self.push_factors([Factor::Permute(moves.iter().map(|&(f, t)| (t, f)).collect())]);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<QueryAlgorithm> {
        QueryAlgorithm::new(self.h_dim, self.steps, self.embedding, self.block_dims)
    }
}

/// The inverse algorithm: `U_0* Õ U_1* ⋯ Õ U_T*`.
pub fn invert(algo: &QueryAlgorithm) -> QueryAlgorithm {
    let steps = algo.steps().iter().rev().map(Step::inverse).collect();
    QueryAlgorithm::new(algo.h_dim(), steps, algo.embedding().clone(), algo.oracle_block_dims().to_vec())
        .expect("inverse keeps shapes")
}

fn collapse(algo: &QueryAlgorithm) -> QueryAlgorithm {
    let mut s = Step::identity();
    for st in algo.steps() {
        s = s.then(st);
    }
    QueryAlgorithm::new(
        algo.h_dim(),
        vec![s],
        QueryEmbedding::trivial(algo.h_dim(), algo.m_dim()),
        algo.oracle_block_dims().to_vec(),
    )
    .expect("same workspace")
}

/// Rewrites each query `O ⊗ I_d` as `d` queries `O ⊕ I`.
pub fn slice(algo: &QueryAlgorithm) -> QueryAlgorithm {
    let emb = algo.embedding();
    let d = emb.b_dim;
    if d == 1 {
        return algo.clone();
    }
    if d == 0 || algo.queries() == 0 {
        return collapse(algo);
    }
    let m = algo.m_dim();
    let slot: Vec<usize> = (0..m).map(|i| emb.layout[i * d]).collect();
    let new_emb = layout_from_slot(&slot, algo.h_dim(), 1);
    let swap = |j: usize| -> Vec<Factor> {
        if j == 0 {
            return Vec::new();
        }
        let mut moves = Vec::with_capacity(2 * m);
        for i in 0..m {
            let (a, b) = (emb.layout[i * d + j], emb.layout[i * d]);
            moves.push((a, b));
            moves.push((b, a));
        }
        vec![Factor::Permute(moves)]
    };
    let steps_in = algo.steps();
    let mut steps = Vec::with_capacity(algo.queries() * d + 1);
    let mut cur = steps_in[0].clone();
    for st in &steps_in[1..] {
        for j in 0..d {
            cur.factors.extend(swap(j));
            steps.push(cur);
            cur = Step { factors: swap(j) };
        }
        cur.factors.extend(st.factors.iter().cloned());
    }
    steps.push(cur);
    QueryAlgorithm::new(algo.h_dim(), steps, new_emb, algo.oracle_block_dims().to_vec()).expect("slicing keeps shapes")
}

/// Places `algo` into a workspace of dimension `h_dim`, its coordinate `c`
/// going to `coord_map[c]`; the new coordinates are left untouched.
pub fn relocate(algo: &QueryAlgorithm, h_dim: usize, coord_map: &[usize]) -> Result<QueryAlgorithm> {
    if coord_map.len() != algo.h_dim() || coord_map.iter().any(|&c| c >= h_dim) {
        return Err(Error::Shape("coordinate map does not fit the target workspace".into()));
    }
    let emb = algo.embedding();
    let slot: Vec<usize> = emb.slot().iter().map(|&c| coord_map[c]).collect();
    let new_emb = if algo.queries() == 0 {
        QueryEmbedding::trivial(h_dim, algo.m_dim())
    } else {
        layout_from_slot(&slot, h_dim, emb.b_dim)
    };
    let steps = algo.steps().iter().map(|s| s.relabel(|c| coord_map[c])).collect();
    QueryAlgorithm::new(h_dim, steps, new_emb, algo.oracle_block_dims().to_vec())
}

/// `𝒜 ⊕ I` on `𝓗 ⊕ 𝓗′` with `dim 𝓗′ = extra_dim`.
pub fn extend_workspace(algo: &QueryAlgorithm, extra_dim: usize) -> QueryAlgorithm {
    let map: Vec<usize> = (0..algo.h_dim()).collect();
    relocate(algo, algo.h_dim() + extra_dim, &map).expect("identity map fits")
}

/// `I ⊕ 𝒜` on `𝓗′ ⊕ 𝓗` with `dim 𝓗′ = extra_dim`.
pub fn prepend_workspace(algo: &QueryAlgorithm, extra_dim: usize) -> QueryAlgorithm {
    let map: Vec<usize> = (0..algo.h_dim()).map(|c| c + extra_dim).collect();
    relocate(algo, algo.h_dim() + extra_dim, &map).expect("shifted map fits")
}

/// The same algorithm for oracles `O ⊕ O″`, where the new oracle blocks are
/// appended after the old ones. Unsliced input is sliced first.
pub fn extend_input(algo: &QueryAlgorithm, new_block_dims: &[usize]) -> Result<QueryAlgorithm> {
    let old = algo.oracle_block_dims();
    if new_block_dims.len() < old.len() || &new_block_dims[..old.len()] != old {
        return Err(Error::Shape(format!("{new_block_dims:?} does not extend {old:?}")));
    }
    if new_block_dims.contains(&0) {
        return Err(Error::Shape("block dimensions must be positive".into()));
    }
    let m_new: usize = new_block_dims.iter().sum();
    let extra = m_new - algo.m_dim();
    let sliced = slice(algo);
    let h = sliced.h_dim() + extra;
    let emb = if sliced.queries() == 0 {
        QueryEmbedding::trivial(h, m_new)
    } else {
        let mut slot = sliced.embedding().slot().to_vec();
        slot.extend(sliced.h_dim()..h);
        layout_from_slot(&slot, h, 1)
    };
    QueryAlgorithm::new(h, sliced.steps().to_vec(), emb, new_block_dims.to_vec())
}

fn check_same_oracles(a: &QueryAlgorithm, b: &QueryAlgorithm) -> Result<()> {
    if a.oracle_block_dims() != b.oracle_block_dims() {
        return Err(Error::Shape(format!(
            "oracle blocks {:?} and {:?} differ",
            a.oracle_block_dims(),
            b.oracle_block_dims()
        )));
    }
    Ok(())
}

fn base_embedding(first: &QueryAlgorithm, second: &QueryAlgorithm, second_map: &[usize], h: usize) -> QueryEmbedding {
    if first.queries() > 0 {
        layout_from_slot(first.embedding().slot(), h, first.embedding().b_dim)
    } else if second.queries() > 0 {
        let slot: Vec<usize> = second.embedding().slot().iter().map(|&c| second_map[c]).collect();
        layout_from_slot(&slot, h, second.embedding().b_dim)
    } else {
        QueryEmbedding::trivial(h, first.m_dim())
    }
}

/// `𝓑 * 𝒜`: run `a`, then `b`, on one workspace.
pub fn sequential(b: &QueryAlgorithm, a: &QueryAlgorithm) -> Result<QueryAlgorithm> {
    if a.h_dim() != b.h_dim() {
        return Err(Error::Shape(format!("workspaces {} and {} differ", a.h_dim(), b.h_dim())));
    }
    check_same_oracles(a, b)?;
    let h = a.h_dim();
    let id: Vec<usize> = (0..h).collect();
    if a.queries() > 0 && b.queries() > 0 && a.embedding().b_dim != b.embedding().b_dim {
        return Err(Error::Shape("query multiplicities differ (slice first)".into()));
    }
    let emb = base_embedding(a, b, &id, h);
    let mut builder = AlgorithmBuilder::new(h, a.oracle_block_dims().to_vec(), emb);
    builder.push_algorithm(a, &id)?;
    builder.push_algorithm(b, &id)?;
    builder.finish()
}

fn unify(a: &QueryAlgorithm, b: &QueryAlgorithm) -> (QueryAlgorithm, QueryAlgorithm) {
    if a.queries() > 0 && b.queries() > 0 && a.embedding().b_dim != b.embedding().b_dim {
        (slice(a), slice(b))
    } else {
        (a.clone(), b.clone())
    }
}

/// `𝒜 ⊕ 𝓑` on `𝓗 ⊕ 𝓗′`, implemented as `(I ⊕ 𝓑) * (𝒜 ⊕ I)`.
pub fn direct_sum(a: &QueryAlgorithm, b: &QueryAlgorithm) -> Result<QueryAlgorithm> {
    check_same_oracles(a, b)?;
    let (a, b) = unify(a, b);
    let h = a.h_dim() + b.h_dim();
    let map_a: Vec<usize> = (0..a.h_dim()).collect();
    let map_b: Vec<usize> = (0..b.h_dim()).map(|c| c + a.h_dim()).collect();
    let emb = base_embedding(&a, &b, &map_b, h);
    let mut builder = AlgorithmBuilder::new(h, a.oracle_block_dims().to_vec(), emb);
    builder.push_algorithm(&a, &map_a)?;
    builder.push_algorithm(&b, &map_b)?;
    builder.finish()
}

/// `𝒜 ∘ 𝓑`: every query of the sliced `a` is replaced by a run of `b`, whose
/// workspace is `a`'s oracle space.
pub fn functional_compose(a: &QueryAlgorithm, b: &QueryAlgorithm) -> Result<QueryAlgorithm> {
    if a.queries() > 0 && a.embedding().b_dim != 1 {
        return Err(Error::NotSliced(a.embedding().b_dim));
    }
    if b.h_dim() != a.m_dim() {
        return Err(Error::Shape(format!(
            "inner workspace {} must equal the outer oracle space {}",
            b.h_dim(),
            a.m_dim()
        )));
    }
    let h = a.h_dim();
    let a_slot: Vec<usize> = if a.queries() > 0 {
        a.embedding().slot().to_vec()
    } else {
        (0..a.m_dim()).collect()
    };
    if a.queries() == 0 {
        return QueryAlgorithm::new(
            h,
            a.steps().to_vec(),
            QueryEmbedding::trivial(h, b.m_dim()),
            b.oracle_block_dims().to_vec(),
        );
    }
    let emb = if b.queries() > 0 {
        let slot: Vec<usize> = b.embedding().slot().iter().map(|&c| a_slot[c]).collect();
        layout_from_slot(&slot, h, b.embedding().b_dim)
    } else {
        QueryEmbedding::trivial(h, b.m_dim())
    };
    let lift = |s: &Step| s.relabel(|c| a_slot[c]);
    let a_steps = a.steps();
    let b_steps = b.steps();
    let mut steps = Vec::new();
    let mut pending = a_steps[0].clone();
    for a_st in &a_steps[1..] {
        pending = pending.then(&lift(&b_steps[0]));
        for b_st in &b_steps[1..] {
            steps.push(pending);
            pending = lift(b_st);
        }
        pending = pending.then(a_st);
    }
    steps.push(pending);
    QueryAlgorithm::new(h, steps, emb, b.oracle_block_dims().to_vec())
}

/// `𝒜 ⊗ I_{𝓗′}` with `dim 𝓗′ = h_other`; coordinate `(i, j)` is `i·h_other + j`.
pub fn tensor_with_identity(a: &QueryAlgorithm, h_other: usize) -> Result<QueryAlgorithm> {
    if h_other == 0 {
        return Err(Error::Shape("tensor factor must have positive dimension".into()));
    }
    let emb = a.embedding();
    let (m, b) = (a.m_dim(), emb.b_dim);
    let h = a.h_dim() * h_other;
    let mut layout = Vec::with_capacity(h);
    for mi in 0..m {
        for beta in 0..b {
            for j in 0..h_other {
                layout.push(emb.layout[mi * b + beta] * h_other + j);
            }
        }
    }
    for &c in &emb.layout[m * b..] {
        for j in 0..h_other {
            layout.push(c * h_other + j);
        }
    }
    let steps = a
        .steps()
        .iter()
        .map(|s| Step {
            factors: (0..h_other)
                .flat_map(|j| s.factors.iter().map(move |f| f.relabel(|c| c * h_other + j)))
                .collect(),
        })
        .collect();
    let new_emb = QueryEmbedding { b_dim: b * h_other, c_dim: emb.c_dim * h_other, layout };
    QueryAlgorithm::new(h, steps, new_emb, a.oracle_block_dims().to_vec())
}

/// `I_{𝓗} ⊗ 𝓑` with `dim 𝓗 = h_other`; coordinate `(i, j)` is `i·dim 𝓗_b + j`.
pub fn identity_tensor(h_other: usize, b: &QueryAlgorithm) -> Result<QueryAlgorithm> {
    if h_other == 0 {
        return Err(Error::Shape("tensor factor must have positive dimension".into()));
    }
    let emb = b.embedding();
    let (m, bd, hb) = (b.m_dim(), emb.b_dim, b.h_dim());
    let h = h_other * hb;
    let mut layout = Vec::with_capacity(h);
    for mi in 0..m {
        for i in 0..h_other {
            for beta in 0..bd {
                layout.push(i * hb + emb.layout[mi * bd + beta]);
            }
        }
    }
    for i in 0..h_other {
        for &c in &emb.layout[m * bd..] {
            layout.push(i * hb + c);
        }
    }
    let steps = b
        .steps()
        .iter()
        .map(|s| Step {
            factors: (0..h_other)
                .flat_map(|i| s.factors.iter().map(move |f| f.relabel(|c| i * hb + c)))
                .collect(),
        })
        .collect();
    let new_emb = QueryEmbedding { b_dim: h_other * bd, c_dim: h_other * emb.c_dim, layout };
    QueryAlgorithm::new(h, steps, new_emb, b.oracle_block_dims().to_vec())
}

/// `𝒜 ⊗ 𝓑` on `𝓗 ⊗ 𝓗′`, implemented as `(I ⊗ 𝓑) * (𝒜 ⊗ I)`.
pub fn tensor(a: &QueryAlgorithm, b: &QueryAlgorithm) -> Result<QueryAlgorithm> {
    check_same_oracles(a, b)?;
    let left = tensor_with_identity(a, b.h_dim())?;
    let right = identity_tensor(a.h_dim(), b)?;
    let (left, right) = unify(&left, &right);
    sequential(&right, &left)
}

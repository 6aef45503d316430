//! Oracle families, block vectors and conversion problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::{
    direct_sum, gram, max_abs, spectral_norm, BlockFamily, ComplexMatrix, ComplexVector, HermitianMatrix,
    UnitaryMatrix, C64, PSD_TOL, UNITARY_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Unitary,
    Contraction,
    General,
}

/// Labelled input oracles `O_x = O_x⁽¹⁾ ⊕ ⋯ ⊕ O_x⁽ˢ⁾`.
#[derive(Clone, Debug)]
pub struct OracleFamily {
    labels: Vec<String>,
    block_dims: Vec<usize>,
    operators: Vec<Vec<ComplexMatrix>>,
    kind: OracleKind,
}

impl OracleFamily {
    pub fn new(
        labels: Vec<String>,
        block_dims: Vec<usize>,
        operators: Vec<Vec<ComplexMatrix>>,
        kind: OracleKind,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::DegenerateInput("oracle family has no labels".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvariantViolation(format!("duplicate label `{l}`")));
            }
        }
        if operators.len() != labels.len() {
            return Err(Error::Shape(format!("{} labels but {} operator lists", labels.len(), operators.len())));
        }
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::Shape("block dimensions must be a non-empty list of positive counts".into()));
        }
        for (x, ops) in operators.iter().enumerate() {
            if ops.len() != block_dims.len() {
                return Err(Error::Shape(format!("label `{}` has {} blocks, expected {}", labels[x], ops.len(), block_dims.len())));
            }
            for (i, o) in ops.iter().enumerate() {
                let d = block_dims[i];
                if o.nrows() != d || o.ncols() != d {
                    return Err(Error::Shape(format!(
                        "block {i} of label `{}` is {}x{}, expected {d}x{d}",
                        labels[x],
                        o.nrows(),
                        o.ncols()
                    )));
                }
                if o.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvariantViolation("non-finite oracle entry".into()));
                }
                match kind {
                    OracleKind::Unitary => {
                        UnitaryMatrix::new(o.clone()).map_err(|_| {
                            Error::Kind(format!("block {i} of label `{}` is not unitary", labels[x]))
                        })?;
                    }
                    OracleKind::Contraction => {
                        if spectral_norm(o) > 1.0 + PSD_TOL {
                            return Err(Error::Kind(format!("block {i} of label `{}` is not a contraction", labels[x])));
                        }
                    }
                    OracleKind::General => {}
                }
            }
        }
        Ok(OracleFamily { labels, block_dims, operators, kind })
    }

    /// One block per label.
    pub fn single_block(labels: Vec<String>, operators: Vec<ComplexMatrix>, kind: OracleKind) -> Result<Self> {
        let d = operators.first().map_or(0, |o| o.nrows());
        Self::new(labels, vec![d], operators.into_iter().map(|o| vec![o]).collect(), kind)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn m_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::Label(label.to_string()))
    }

    pub fn block(&self, x: usize, i: usize) -> &ComplexMatrix {
        &self.operators[x][i]
    }

    pub fn blocks(&self, x: usize) -> &[ComplexMatrix] {
        &self.operators[x]
    }

    /// The full operator `O_x` on `M`.
    pub fn operator(&self, x: usize) -> ComplexMatrix {
        direct_sum(&self.operators[x])
    }

    /// The family of adjoints `O_x*`.
    pub fn adjoint_family(&self) -> OracleFamily {
        OracleFamily {
            labels: self.labels.clone(),
            block_dims: self.block_dims.clone(),
            operators: self.operators.iter().map(|ops| ops.iter().map(|o| o.adjoint()).collect()).collect(),
            kind: self.kind,
        }
    }

    /// Restriction to the labels at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> OracleFamily {
        OracleFamily {
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            block_dims: self.block_dims.clone(),
            operators: indices.iter().map(|&i| self.operators[i].clone()).collect(),
            kind: self.kind,
        }
    }

    /// `Δ⁽ⁱ⁾_{xy} = I − O_x⁽ⁱ⁾* O_y⁽ⁱ⁾`.
    pub fn delta_block(&self, x: usize, y: usize, i: usize) -> ComplexMatrix {
        let d = self.block_dims[i];
        ComplexMatrix::identity(d, d) - self.operators[x][i].adjoint() * &self.operators[y][i]
    }

    /// `Δ_{xy} = I − O_x* O_y` on the whole of `M`.
    pub fn delta(&self, x: usize, y: usize) -> ComplexMatrix {
        let blocks: Vec<_> = (0..self.num_blocks()).map(|i| self.delta_block(x, y, i)).collect();
        direct_sum(&blocks)
    }

    pub fn delta_family(&self) -> BlockFamily {
        let m = self.m_dim();
        BlockFamily::from_fn(self.len(), m, m, |x, y| self.delta(x, y)).expect("shapes are consistent")
    }

    pub fn delta_block_family(&self, i: usize) -> BlockFamily {
        let d = self.block_dims[i];
        BlockFamily::from_fn(self.len(), d, d, |x, y| self.delta_block(x, y, i)).expect("shapes are consistent")
    }

    /// Whether `O_x` and `O_y` agree within `tol` in max-norm.
    pub fn same_oracle(&self, x: usize, y: usize, tol: f64) -> bool {
        self.operators[x]
            .iter()
            .zip(&self.operators[y])
            .all(|(a, b)| max_abs(&(a - b)) <= tol)
    }

    /// Labels grouped by identical oracles, in order of first appearance.
    pub fn classes(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for x in 0..self.len() {
            match classes.iter_mut().find(|c| self.same_oracle(c[0], x, tol)) {
                Some(c) => c.push(x),
                None => classes.push(vec![x]),
            }
        }
        classes
    }
}

/// A vector of `M ⊗ W`, stored per block as a `block_dims[i] × w_dim` matrix
/// whose columns are indexed by `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    blocks: Vec<ComplexMatrix>,
    w_dim: usize,
}

impl BlockVector {
    pub fn zeros(block_dims: &[usize], w_dim: usize) -> Self {
        BlockVector { blocks: block_dims.iter().map(|&d| ComplexMatrix::zeros(d, w_dim)).collect(), w_dim }
    }

    pub fn from_blocks(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let w_dim = blocks.first().map_or(0, |b| b.ncols());
        if blocks.iter().any(|b| b.ncols() != w_dim) {
            return Err(Error::Shape("blocks of a BlockVector must share w_dim".into()));
        }
        Ok(BlockVector { blocks, w_dim })
    }

    /// Splits the rows of an `m × w` matrix by `block_dims`.
    pub fn from_stacked(block_dims: &[usize], stacked: &ComplexMatrix) -> Result<Self> {
        let m: usize = block_dims.iter().sum();
        if stacked.nrows() != m {
            return Err(Error::Shape(format!("{} rows, expected {m}", stacked.nrows())));
        }
        let mut off = 0;
        let blocks = block_dims
            .iter()
            .map(|&d| {
                let b = stacked.rows(off, d).into_owned();
                off += d;
                b
            })
            .collect();
        Ok(BlockVector { blocks, w_dim: stacked.ncols() })
    }

    /// Inverse of [`BlockVector::flatten`].
    pub fn from_flat(block_dims: &[usize], w_dim: usize, flat: &ComplexVector) -> Result<Self> {
        let m: usize = block_dims.iter().sum();
        if flat.len() != m * w_dim {
            return Err(Error::Shape(format!("flat vector has length {}, expected {}", flat.len(), m * w_dim)));
        }
        let stacked = ComplexMatrix::from_fn(m, w_dim, |r, c| flat[r * w_dim + c]);
        Self::from_stacked(block_dims, &stacked)
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &ComplexMatrix {
        &self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Rows of all blocks stacked into one `m × w` matrix.
    pub fn stacked(&self) -> ComplexMatrix {
        let m: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut out = ComplexMatrix::zeros(m, self.w_dim);
        let mut off = 0;
        for b in &self.blocks {
            out.rows_mut(off, b.nrows()).copy_from(b);
            off += b.nrows();
        }
        out
    }

    /// Coordinates in `M ⊗ W`, `M`-index major.
    pub fn flatten(&self) -> ComplexVector {
        let s = self.stacked();
        let (m, w) = (s.nrows(), s.ncols());
        ComplexVector::from_fn(m * w, |k, _| s[(k / w, k % w)])
    }

    pub fn dnorm_sq(&self) -> Vec<f64> {
        dnorm_sq(self)
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    /// `⟨self, other⟩` on `M ⊗ W`.
    pub fn inner(&self, other: &BlockVector) -> C64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dotc(b)).sum()
    }

    pub fn scale(&self, a: C64) -> BlockVector {
        BlockVector { blocks: self.blocks.iter().map(|b| b * a).collect(), w_dim: self.w_dim }
    }

    pub fn add(&self, other: &BlockVector) -> Result<BlockVector> {
        self.check_same_shape(other)?;
        Ok(BlockVector {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
            w_dim: self.w_dim,
        })
    }

    pub fn sub(&self, other: &BlockVector) -> Result<BlockVector> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    fn check_same_shape(&self, other: &BlockVector) -> Result<()> {
        if self.w_dim != other.w_dim || self.block_dims() != other.block_dims() {
            return Err(Error::Shape("block vectors differ in shape".into()));
        }
        Ok(())
    }

    /// `u ⊕ w` along the `W` axis.
    pub fn concat_w(&self, other: &BlockVector) -> Result<BlockVector> {
        if self.block_dims() != other.block_dims() {
            return Err(Error::Shape("block dimensions differ".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let mut out = ComplexMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
                out.columns_mut(0, a.ncols()).copy_from(a);
                out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
                out
            })
            .collect();
        Ok(BlockVector { blocks, w_dim: self.w_dim + other.w_dim })
    }

    /// Zero-pads `W` to `w_dim` coordinates.
    pub fn pad_w(&self, w_dim: usize) -> Result<BlockVector> {
        if w_dim < self.w_dim {
            return Err(Error::Shape(format!("cannot pad w_dim {} down to {w_dim}", self.w_dim)));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut out = ComplexMatrix::zeros(b.nrows(), w_dim);
                out.columns_mut(0, b.ncols()).copy_from(b);
                out
            })
            .collect();
        Ok(BlockVector { blocks, w_dim })
    }

    /// Blockwise `(O⁽ⁱ⁾ ⊗ I_W) v⁽ⁱ⁾`.
    pub fn apply_blocks(&self, ops: &[ComplexMatrix]) -> Result<BlockVector> {
        if ops.len() != self.blocks.len() {
            return Err(Error::Shape(format!("{} operators for {} blocks", ops.len(), self.blocks.len())));
        }
        let mut blocks = Vec::with_capacity(ops.len());
        for (o, b) in ops.iter().zip(&self.blocks) {
            if o.ncols() != b.nrows() {
                return Err(Error::Shape("operator does not match block dimension".into()));
            }
            blocks.push(o * b);
        }
        Ok(BlockVector { blocks, w_dim: self.w_dim })
    }
}

/// Per-block squared norms `‖v⁽ⁱ⁾‖²`.
pub fn dnorm_sq(v: &BlockVector) -> Vec<f64> {
    v.blocks.iter().map(|b| b.norm_squared()).collect()
}

/// `(O_x ⊗ I_W) v`.
pub fn apply_oracle(fam: &OracleFamily, x: &str, v: &BlockVector) -> Result<BlockVector> {
    let ix = fam.index_of(x)?;
    if v.block_dims() != fam.block_dims() {
        return Err(Error::Shape("block vector does not match the oracle blocks".into()));
    }
    v.apply_blocks(fam.blocks(ix))
}

/// The task `ξ_x ↦ τ_x` on input oracle `O_x`.
#[derive(Clone, Debug)]
pub struct StateConversionProblem {
    pub oracles: OracleFamily,
    pub k_dim: usize,
    pub xi: Vec<ComplexVector>,
    pub tau: Vec<ComplexVector>,
}

impl StateConversionProblem {
    pub fn new(oracles: OracleFamily, k_dim: usize, xi: Vec<ComplexVector>, tau: Vec<ComplexVector>) -> Result<Self> {
        let n = oracles.len();
        if xi.len() != n || tau.len() != n {
            return Err(Error::Shape(format!("{n} labels but {} ξ and {} τ vectors", xi.len(), tau.len())));
        }
        if let Some(bad) = xi.iter().chain(tau.iter()).find(|v| v.len() != k_dim) {
            return Err(Error::Shape(format!("state of length {} in a problem with k_dim {k_dim}", bad.len())));
        }
        if xi.iter().chain(tau.iter()).flat_map(|v| v.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvariantViolation("non-finite state entry".into()));
        }
        Ok(StateConversionProblem { oracles, k_dim, xi, tau })
    }

    pub fn len(&self) -> usize {
        self.oracles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oracles.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        self.oracles.labels()
    }

    pub fn gram_xi(&self) -> HermitianMatrix {
        gram(&self.xi).expect("states share k_dim")
    }

    pub fn gram_tau(&self) -> HermitianMatrix {
        gram(&self.tau).expect("states share k_dim")
    }

    /// Restriction to the labels at `indices`.
    pub fn select(&self, indices: &[usize]) -> StateConversionProblem {
        StateConversionProblem {
            oracles: self.oracles.select(indices),
            k_dim: self.k_dim,
            xi: indices.iter().map(|&i| self.xi[i].clone()).collect(),
            tau: indices.iter().map(|&i| self.tau[i].clone()).collect(),
        }
    }
}

/// `G_ξ − G_τ`.
pub fn problem_gram_gap(p: &StateConversionProblem) -> HermitianMatrix {
    HermitianMatrix::symmetrize(p.gram_xi().matrix() - p.gram_tau().matrix())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceKind {
    Isometric,
    Contraction,
}

/// The task of implementing `T_x` on the subspace `𝒦_x` given by an
/// orthonormal basis. Both `bases[x]` and `maps[x]` are `k_dim × dim 𝒦_x`.
#[derive(Clone, Debug)]
pub struct SubspaceConversionProblem {
    pub oracles: OracleFamily,
    pub k_dim: usize,
    pub bases: Vec<ComplexMatrix>,
    pub maps: Vec<ComplexMatrix>,
    pub kind: SubspaceKind,
}

impl SubspaceConversionProblem {
    pub fn new(
        oracles: OracleFamily,
        k_dim: usize,
        bases: Vec<ComplexMatrix>,
        maps: Vec<ComplexMatrix>,
        kind: SubspaceKind,
    ) -> Result<Self> {
        let n = oracles.len();
        if bases.len() != n || maps.len() != n {
            return Err(Error::Shape(format!("{n} labels but {} bases and {} maps", bases.len(), maps.len())));
        }
        for (b, t) in bases.iter().zip(&maps) {
            if b.nrows() != k_dim || t.nrows() != k_dim || b.ncols() != t.ncols() {
                return Err(Error::Shape("basis and map must both be k_dim × dim 𝒦_x".into()));
            }
            let r = b.ncols();
            if max_abs(&(b.adjoint() * b - ComplexMatrix::identity(r, r))) > UNITARY_TOL {
                return Err(Error::InvariantViolation("subspace basis is not orthonormal".into()));
            }
            let tt = t.adjoint() * t;
            match kind {
                SubspaceKind::Isometric => {
                    if max_abs(&(tt - ComplexMatrix::identity(r, r))) > UNITARY_TOL {
                        return Err(Error::InvariantViolation("map is not isometric on its subspace".into()));
                    }
                }
                SubspaceKind::Contraction => {
                    if spectral_norm(t) > 1.0 + PSD_TOL {
                        return Err(Error::InvariantViolation("map is not a contraction".into()));
                    }
                }
            }
        }
        Ok(SubspaceConversionProblem { oracles, k_dim, bases, maps, kind })
    }
}

/// Per-label, per-block Las Vegas complexities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ComplexityProfile {
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::Shape("one row per label required".into()));
        }
        let s = values.first().map_or(0, |r| r.len());
        if values.iter().any(|r| r.len() != s) {
            return Err(Error::Shape("rows of a complexity profile must have equal length".into()));
        }
        if values.iter().flatten().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvariantViolation("profile entries must be finite and nonnegative".into()));
        }
        Ok(ComplexityProfile { labels, values })
    }

    pub fn num_blocks(&self) -> usize {
        self.values.first().map_or(0, |r| r.len())
    }

    /// `max_x P[x][i]`.
    pub fn column_max(&self, i: usize) -> f64 {
        self.values.iter().map(|r| r[i]).fold(0.0, f64::max)
    }

    /// `max_x Σ_i P[x][i]`.
    pub fn max_total(&self) -> f64 {
        self.values.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexityProfile) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

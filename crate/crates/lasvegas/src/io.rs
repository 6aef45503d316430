//! JSON documents.
//!
//! A complex number is `[re, im]`, a vector is an array of complex numbers and
//! a matrix is an array of rows. Per-label data is keyed by label in label
//! order. Floats are written in shortest round-trip form, so parsing a written
//! document reproduces every value bit for bit.
//!
//! An algorithm's unitaries are either dense matrices or
//! `{"factors": [...]}` with `{"local": {"coords", "matrix"}}`,
//! `{"reflector": {"coords", "w"}}` and `{"permute": [[from, to], ...]}`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::adversary::{DualCertificate, FeasibleSolution};
use crate::error::{Error, Result};
use crate::model::{BlockVector, ComplexityProfile, OracleFamily, OracleKind, StateConversionProblem};
use crate::numlin::{c, ComplexMatrix, ComplexVector, HermitianMatrix, UnitaryMatrix};
use crate::sim::{Factor, QueryAlgorithm, QueryEmbedding, Step};

pub type ComplexDoc = [f64; 2];
pub type VectorDoc = Vec<ComplexDoc>;
pub type MatrixDoc = Vec<Vec<ComplexDoc>>;

pub fn vector_doc(v: &ComplexVector) -> VectorDoc {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_doc(d: &VectorDoc) -> ComplexVector {
    ComplexVector::from_iterator(d.len(), d.iter().map(|z| c(z[0], z[1])))
}

pub fn matrix_doc(m: &ComplexMatrix) -> MatrixDoc {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_doc(d: &MatrixDoc) -> Result<ComplexMatrix> {
    let rows = d.len();
    let cols = d.first().map_or(0, Vec::len);
    if d.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("matrix rows have different lengths".into()));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| c(d[i][j][0], d[i][j][1])))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OracleFamilyDoc {
    pub block_dims: Vec<usize>,
    pub kind: OracleKind,
    /// Per label, one matrix per block.
    pub operators: IndexMap<String, Vec<MatrixDoc>>,
}

impl OracleFamilyDoc {
    pub fn from_family(f: &OracleFamily) -> Self {
        let operators = (0..f.len()).map(|x| (f.labels()[x].clone(), f.blocks(x).iter().map(matrix_doc).collect())).collect();
        OracleFamilyDoc { block_dims: f.block_dims().to_vec(), kind: f.kind(), operators }
    }

    pub fn to_family(&self) -> Result<OracleFamily> {
        let ops = self
            .operators
            .values()
            .map(|blocks| blocks.iter().map(matrix_from_doc).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        OracleFamily::new(self.operators.keys().cloned().collect(), self.block_dims.clone(), ops, self.kind)
    }
}

/// An inline oracle family or a path to one (relative to the problem file).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OracleSource {
    Inline(OracleFamilyDoc),
    Path(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemDoc {
    pub oracles: OracleSource,
    pub k_dim: usize,
    pub xi: IndexMap<String, VectorDoc>,
    pub tau: IndexMap<String, VectorDoc>,
}

impl ProblemDoc {
    pub fn from_problem(p: &StateConversionProblem) -> Self {
        let per_label = |vs: &[ComplexVector]| p.labels().iter().cloned().zip(vs.iter().map(vector_doc)).collect();
        ProblemDoc {
            oracles: OracleSource::Inline(OracleFamilyDoc::from_family(&p.oracles)),
            k_dim: p.k_dim,
            xi: per_label(&p.xi),
            tau: per_label(&p.tau),
        }
    }

    /// Builds the problem; `base` resolves a relative oracle path.
    pub fn to_problem(&self, base: Option<&Path>) -> Result<StateConversionProblem> {
        let fam = match &self.oracles {
            OracleSource::Inline(doc) => doc.to_family()?,
            OracleSource::Path(path) => {
                let full = base.map_or_else(|| PathBuf::from(path), |b| b.join(path));
                let doc: OracleFamilyDoc = from_json(&read(&full)?)?;
                doc.to_family()?
            }
        };
        let states = |map: &IndexMap<String, VectorDoc>, name: &str| -> Result<Vec<ComplexVector>> {
            if map.len() != fam.len() {
                return Err(Error::Shape(format!("{name} has {} entries for {} labels", map.len(), fam.len())));
            }
            fam.labels()
                .iter()
                .map(|l| map.get(l).map(vector_from_doc).ok_or_else(|| Error::Label(format!("{name}: {l}"))))
                .collect()
        };
        let xi = states(&self.xi, "xi")?;
        let tau = states(&self.tau, "tau")?;
        StateConversionProblem::new(fam, self.k_dim, xi, tau)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum FactorDoc {
    Local { coords: Vec<usize>, matrix: MatrixDoc },
    Reflector { coords: Vec<usize>, w: VectorDoc },
    Permute(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum UnitaryDoc {
    Dense(MatrixDoc),
    Factors { factors: Vec<FactorDoc> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EmbeddingDoc {
    pub b_dim: usize,
    pub c_dim: usize,
    pub layout: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AlgorithmDoc {
    pub h_dim: usize,
    pub embedding: EmbeddingDoc,
    pub unitaries: Vec<UnitaryDoc>,
    pub oracle_block_dims: Vec<usize>,
}

fn factor_doc(f: &Factor) -> FactorDoc {
    match f {
        Factor::Local { coords, matrix } => FactorDoc::Local { coords: coords.clone(), matrix: matrix_doc(matrix.matrix()) },
        Factor::Reflector { coords, w } => FactorDoc::Reflector { coords: coords.clone(), w: vector_doc(w) },
        Factor::Permute(m) => FactorDoc::Permute(m.clone()),
    }
}

fn factor_from_doc(d: &FactorDoc) -> Result<Factor> {
    match d {
        FactorDoc::Local { coords, matrix } => Factor::local(coords.clone(), UnitaryMatrix::new(matrix_from_doc(matrix)?)?),
        FactorDoc::Reflector { coords, w } => Factor::reflector(coords.clone(), vector_from_doc(w)),
        FactorDoc::Permute(m) => Factor::permutation(m.clone()),
    }
}

impl AlgorithmDoc {
    pub fn from_algorithm(a: &QueryAlgorithm) -> Self {
        let h = a.h_dim();
        let unitaries = a
            .steps()
            .iter()
            .map(|s| match s.factors.as_slice() {
                [Factor::Local { coords, matrix }] if coords.iter().copied().eq(0..h) => UnitaryDoc::Dense(matrix_doc(matrix.matrix())),
                fs => UnitaryDoc::Factors { factors: fs.iter().map(factor_doc).collect() },
            })
            .collect();
        let e = a.embedding();
        AlgorithmDoc {
            h_dim: h,
            embedding: EmbeddingDoc { b_dim: e.b_dim, c_dim: e.c_dim, layout: e.layout.clone() },
            unitaries,
            oracle_block_dims: a.oracle_block_dims().to_vec(),
        }
    }

    pub fn to_algorithm(&self) -> Result<QueryAlgorithm> {
        let steps = self
            .unitaries
            .iter()
            .map(|u| match u {
                UnitaryDoc::Dense(m) => {
                    let m = matrix_from_doc(m)?;
                    if m.nrows() != self.h_dim {
                        return Err(Error::Shape(format!("{}x{} unitary in a workspace of dimension {}", m.nrows(), m.ncols(), self.h_dim)));
                    }
                    Ok(Step { factors: vec![Factor::Local { coords: (0..self.h_dim).collect(), matrix: Arc::new(UnitaryMatrix::new(m)?) }] })
                }
                UnitaryDoc::Factors { factors } => Ok(Step { factors: factors.iter().map(factor_from_doc).collect::<Result<_>>()? }),
            })
            .collect::<Result<Vec<_>>>()?;
        let e = &self.embedding;
        let emb = QueryEmbedding { b_dim: e.b_dim, c_dim: e.c_dim, layout: e.layout.clone() };
        QueryAlgorithm::new(self.h_dim, steps, emb, self.oracle_block_dims.clone())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionDoc {
    pub w_dim: usize,
    /// Per label, one `d_i × w_dim` matrix per oracle block.
    pub vectors: IndexMap<String, Vec<MatrixDoc>>,
}

impl SolutionDoc {
    pub fn from_solution(sol: &FeasibleSolution, labels: &[String]) -> Self {
        let vectors = labels.iter().cloned().zip(sol.vectors().iter().map(|v| v.blocks().iter().map(matrix_doc).collect())).collect();
        SolutionDoc { w_dim: sol.w_dim(), vectors }
    }

    /// Vectors in the order of `labels`.
    pub fn to_solution(&self, labels: &[String]) -> Result<FeasibleSolution> {
        if self.vectors.len() != labels.len() {
            return Err(Error::Shape(format!("solution has {} labels, problem has {}", self.vectors.len(), labels.len())));
        }
        let vectors = labels
            .iter()
            .map(|l| {
                let blocks = self.vectors.get(l).ok_or_else(|| Error::Label(l.clone()))?;
                let blocks = blocks.iter().map(matrix_from_doc).collect::<Result<Vec<_>>>()?;
                if blocks.iter().any(|b| b.ncols() != self.w_dim) {
                    return Err(Error::Shape(format!("label `{l}` has blocks with width other than w_dim = {}", self.w_dim)));
                }
                BlockVector::from_blocks(blocks)
            })
            .collect::<Result<Vec<_>>>()?;
        FeasibleSolution::new(vectors)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CertificateDoc {
    pub gamma: MatrixDoc,
}

impl CertificateDoc {
    pub fn from_certificate(cert: &DualCertificate) -> Self {
        CertificateDoc { gamma: matrix_doc(cert.gamma.matrix()) }
    }

    pub fn to_certificate(&self) -> Result<DualCertificate> {
        Ok(DualCertificate { gamma: HermitianMatrix::new(matrix_from_doc(&self.gamma)?)? })
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialise")
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn load_problem(path: &Path) -> Result<StateConversionProblem> {
    let doc: ProblemDoc = from_json(&read(path)?)?;
    doc.to_problem(path.parent())
}

pub fn load_algorithm(path: &Path) -> Result<QueryAlgorithm> {
    from_json::<AlgorithmDoc>(&read(path)?)?.to_algorithm()
}

pub fn load_solution(path: &Path, labels: &[String]) -> Result<FeasibleSolution> {
    from_json::<SolutionDoc>(&read(path)?)?.to_solution(labels)
}

pub fn load_certificate(path: &Path) -> Result<DualCertificate> {
    from_json::<CertificateDoc>(&read(path)?)?.to_certificate()
}

pub fn load_profile(path: &Path) -> Result<ComplexityProfile> {
    let p: ComplexityProfile = from_json(&read(path)?)?;
    ComplexityProfile::new(p.labels, p.values)
}

/// `label,block,value` rows (blocks numbered from 0).
pub fn profile_csv(p: &ComplexityProfile) -> String {
    let mut out = String::from("label,block,value\n");
    for (l, row) in p.labels.iter().zip(&p.values) {
        for (i, v) in row.iter().enumerate() {
            out.push_str(&format!("{l},{i},{v:?}\n"));
        }
    }
    out
}

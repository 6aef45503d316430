//! Random instances for tests, fuzzing and demos.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{OracleFamily, OracleKind, StateConversionProblem};
use crate::numlin::{ComplexMatrix, ComplexVector, HermitianMatrix, UnitaryMatrix, C64};
use crate::sim::{final_state_with, QueryAlgorithm, QueryEmbedding, Step};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b) / 2f64.sqrt()
}

pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    let v = vector(rng, n);
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase correction).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> UnitaryMatrix {
    if n == 0 {
        return UnitaryMatrix::identity(0);
    }
    let qr = matrix(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        } else {
            C64::new(0.0, 0.0)
        }
    });
    UnitaryMatrix::new(q * phases).expect("QR factor is unitary")
}

/// A random strict contraction with spectral norm `scale < 1`.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> ComplexMatrix {
    let a = matrix(rng, n, n);
    let norm = crate::numlin::spectral_norm(&a);
    a * C64::new(scale / norm, 0.0)
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let a = matrix(rng, n, n);
    HermitianMatrix::new((&a + a.adjoint()) * C64::new(0.5, 0.0)).expect("symmetrised")
}

/// A random algorithm with dense Haar unitaries and a random layout.
pub fn algorithm<R: Rng + ?Sized>(rng: &mut R, block_dims: &[usize], b_dim: usize, c_dim: usize, t: usize) -> QueryAlgorithm {
    let m: usize = block_dims.iter().sum();
    let h = m * b_dim + c_dim;
    let mut layout: Vec<usize> = (0..h).collect();
    layout.shuffle(rng);
    let steps = (0..=t).map(|_| Step::dense(haar_unitary(rng, h))).collect();
    QueryAlgorithm::new(h, steps, QueryEmbedding { b_dim, c_dim, layout }, block_dims.to_vec()).expect("consistent shapes")
}

pub fn unitary_family<R: Rng + ?Sized>(rng: &mut R, labels: usize, block_dims: &[usize]) -> OracleFamily {
    let names = (0..labels).map(|x| x.to_string()).collect();
    let ops = (0..labels)
        .map(|_| block_dims.iter().map(|&d| haar_unitary(rng, d).into_inner()).collect())
        .collect();
    OracleFamily::new(names, block_dims.to_vec(), ops, OracleKind::Unitary).expect("unitary blocks")
}

/// A problem solved by a random algorithm: `𝒦 = 𝓗`, random `ξ_x`,
/// `τ_x := 𝒜(O_x)ξ_x`.
#[derive(Clone, Debug)]
pub struct SolvedInstance {
    pub algorithm: QueryAlgorithm,
    pub problem: StateConversionProblem,
}

pub struct InstanceShape {
    pub labels: usize,
    pub block_dims: Vec<usize>,
    pub b_dim: usize,
    pub c_dim: usize,
    pub queries: usize,
}

impl InstanceShape {
    /// Sizes drawn from the small ranges used by the round-trip suite:
    /// at most 4 labels, at most 2 blocks, `dim M ≤ 3`, workspace at most 3.
    pub fn small<R: Rng + ?Sized>(rng: &mut R) -> InstanceShape {
        let labels = rng.gen_range(2..=4);
        let block_dims = if rng.gen_bool(0.5) {
            vec![rng.gen_range(1..=3)]
        } else if rng.gen_bool(0.5) {
            vec![1, 1]
        } else {
            vec![1, 2]
        };
        let m: usize = block_dims.iter().sum();
        let c_dim = rng.gen_range(0..=3 - m);
        InstanceShape { labels, block_dims, b_dim: 1, c_dim, queries: rng.gen_range(1..=5) }
    }
}

pub fn solved_instance<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> SolvedInstance {
    let algo = algorithm(rng, &shape.block_dims, shape.b_dim, shape.c_dim, shape.queries);
    let fam = unitary_family(rng, shape.labels, &shape.block_dims);
    let h = algo.h_dim();
    let xi: Vec<ComplexVector> = (0..shape.labels).map(|_| unit_vector(rng, h)).collect();
    let tau = (0..shape.labels)
        .map(|x| final_state_with(&algo, &fam.operator(x), &xi[x]).expect("shapes agree"))
        .collect();
    let problem = StateConversionProblem::new(fam, h, xi, tau).expect("shapes agree");
    SolvedInstance { algorithm: algo, problem }
}

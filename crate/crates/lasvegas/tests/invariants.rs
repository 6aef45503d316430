use lasvegas::adversary::{
    dual_bound, extract, objective_profile, pareto_project, residual, DualCertificate, FeasibleSolution,
};
use lasvegas::compose::{invert, sequential};
use lasvegas::io::{from_json, to_json, AlgorithmDoc, ProblemDoc, SolutionDoc};
use lasvegas::model::BlockVector;
use lasvegas::numlin::{c, max_abs, parallelogram_residual, ComplexMatrix};
use lasvegas::random::{self, InstanceShape};
use lasvegas::sim::{apply_with, final_state_with, las_vegas_with};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn las_vegas_scales_quadratically(seed in any::<u64>(), re_c in -2.0f64..2.0, im_c in -2.0f64..2.0) {
        let mut r = rng(seed);
        let a = random::algorithm(&mut r, &[1, 2], 1, 1, 2);
        let o = random::unitary_family(&mut r, 1, &[1, 2]).operator(0);
        let xi = random::vector(&mut r, a.h_dim());
        let s = c(re_c, im_c);
        let base = las_vegas_with(&a, &o, &xi).unwrap();
        let scaled = las_vegas_with(&a, &o, &(&xi * s)).unwrap();
        let expect: Vec<f64> = base.iter().map(|v| v * s.norm_sqr()).collect();
        prop_assert!(close(&scaled, &expect, 1e-10));
    }

    #[test]
    fn parallelogram_for_haar_mixing(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let u = random::haar_unitary(&mut r, d);
        let vs: Vec<_> = (0..d).map(|_| random::vector(&mut r, 4)).collect();
        prop_assert!(parallelogram_residual(&vs, &u).unwrap() <= 1e-10);
    }

    #[test]
    fn sequential_profiles_add(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random::algorithm(&mut r, &[1], 1, 1, 2);
        let b = random::algorithm(&mut r, &[1], 1, 1, 1);
        let o = random::unitary_family(&mut r, 1, &[1]).operator(0);
        let xi = random::unit_vector(&mut r, a.h_dim());
        let lhs = las_vegas_with(&sequential(&b, &a).unwrap(), &o, &xi).unwrap();
        let mid = final_state_with(&a, &o, &xi).unwrap();
        let rhs: Vec<f64> = las_vegas_with(&a, &o, &xi).unwrap().iter()
            .zip(las_vegas_with(&b, &o, &mid).unwrap()).map(|(x, y)| x + y).collect();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn inverse_undoes_algorithm(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random::algorithm(&mut r, &[2], 1, 1, 3);
        let o = random::unitary_family(&mut r, 1, &[2]).operator(0);
        let forward = apply_with(&a, &o).unwrap();
        let back = apply_with(&invert(&a), &o.adjoint()).unwrap();
        let id = ComplexMatrix::identity(a.h_dim(), a.h_dim());
        prop_assert!(max_abs(&(back * forward - id)) <= 1e-10);
    }

    #[test]
    fn extracted_solutions_are_feasible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = InstanceShape::small(&mut r);
        let inst = random::solved_instance(&mut r, &shape);
        let sol = extract(&inst.algorithm, &inst.problem, 1e-9).unwrap();
        prop_assert!(residual(&sol, &inst.problem).unwrap() <= 1e-10);
    }

    #[test]
    fn weak_duality_holds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = InstanceShape::small(&mut r);
        let inst = random::solved_instance(&mut r, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9).unwrap();
        let report = dual_bound(&DualCertificate { gamma: random::hermitian(&mut r, p.len()) }, p).unwrap();
        let profile = objective_profile(&sol, p.labels()).unwrap();
        prop_assert!(report.tradeoff_ok(&profile, 1e-7));
    }

    #[test]
    fn feasible_profiles_are_upward_closed(seed in any::<u64>(), extra in proptest::collection::vec(0.0f64..3.0, 4)) {
        let mut r = rng(seed);
        let shape = InstanceShape::small(&mut r);
        let inst = random::solved_instance(&mut r, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9).unwrap();
        let n = p.len();
        let dims = p.oracles.block_dims().to_vec();
        // One private workspace column per label adds mass without touching the constraints.
        let pad: Vec<BlockVector> = (0..n).map(|x| {
            let blocks = dims.iter().map(|&d| {
                let mut m = ComplexMatrix::zeros(d, n);
                m[(0, x)] = c(extra[x % extra.len()].sqrt(), 0.0);
                m
            }).collect();
            BlockVector::from_blocks(blocks).unwrap()
        }).collect();
        let bigger = sol.concat(&FeasibleSolution::new(pad).unwrap()).unwrap();
        prop_assert!(residual(&bigger, p).unwrap() <= 1e-10);
        for (x, (lo, hi)) in sol.profile_values().iter().zip(bigger.profile_values()).enumerate() {
            let add = extra[x % extra.len()];
            prop_assert!(lo.iter().zip(&hi).all(|(a, b)| (b - a - add).abs() <= 1e-10));
        }
    }

    #[test]
    fn pareto_projection_stays_feasible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = InstanceShape::small(&mut r);
        let inst = random::solved_instance(&mut r, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9).unwrap();
        let proj = pareto_project(&sol, p, 1e-9).unwrap();
        prop_assert!(residual(&proj, p).unwrap() <= 1e-9);
        let before: f64 = sol.profile_values().iter().flatten().sum();
        let after: f64 = proj.profile_values().iter().flatten().sum();
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn json_round_trips_exactly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = InstanceShape::small(&mut r);
        let inst = random::solved_instance(&mut r, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9).unwrap();

        let pdoc = ProblemDoc::from_problem(p);
        let pback: ProblemDoc = from_json(&to_json(&pdoc)).unwrap();
        prop_assert_eq!(to_json(&pdoc), to_json(&pback));
        let p2 = pback.to_problem(None).unwrap();
        prop_assert_eq!(&p2.xi, &p.xi);
        prop_assert_eq!(&p2.tau, &p.tau);

        let adoc = AlgorithmDoc::from_algorithm(&inst.algorithm);
        let a2 = from_json::<AlgorithmDoc>(&to_json(&adoc)).unwrap().to_algorithm().unwrap();
        let o = p.oracles.operator(0);
        prop_assert_eq!(apply_with(&a2, &o).unwrap(), apply_with(&inst.algorithm, &o).unwrap());

        let sdoc = SolutionDoc::from_solution(&sol, p.labels());
        let s2 = from_json::<SolutionDoc>(&to_json(&sdoc)).unwrap().to_solution(p.labels()).unwrap();
        prop_assert_eq!(s2.profile_values(), sol.profile_values());
    }
}

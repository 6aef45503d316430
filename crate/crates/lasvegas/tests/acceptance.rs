//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::time::{Duration, Instant};

use lasvegas::adversary::{
    bidir_to_unidir, bidirectional_residual, dual_bound, extract, lift_bidirectional, objective_profile, residual,
    unidir_to_bidir, DualCertificate, FeasibleSolution,
};
use lasvegas::compose::{functional_compose, invert, sequential, slice};
use lasvegas::model::{BlockVector, OracleFamily, StateConversionProblem};
use lasvegas::numlin::{c, max_abs, re, ComplexMatrix, ComplexVector, UnitaryMatrix};
use lasvegas::problems::{perm_inversion, two_label, TwoLabel};
use lasvegas::random::{self, InstanceShape};
use lasvegas::sim::{
    apply_with, check_state_conversion, final_state_with, las_vegas_profile, las_vegas_with, query_input_with,
    subspace_las_vegas_with,
};
use lasvegas::synth::{compile_approx, compile_exact, run_plain};
use lasvegas::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn pm(sign: f64) -> UnitaryMatrix {
    UnitaryMatrix::new(ComplexMatrix::from_element(1, 1, re(sign))).expect("±1 is unitary")
}

fn flip_pair(b: lasvegas::numlin::C64) -> TwoLabel {
    two_label(re(1.0), b, &pm(1.0), &pm(-1.0)).expect("valid two-label instance")
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
}

fn round_trip() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    let (mut worst_res, mut worst_prof, mut worst_approx, mut worst_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..25 {
        let shape = InstanceShape::small(&mut rng);
        let inst = random::solved_instance(&mut rng, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9)?;
        worst_res = worst_res.max(residual(&sol, p)?);
        let measured = las_vegas_profile(&inst.algorithm, p)?;
        let objective = objective_profile(&sol, p.labels())?;
        worst_prof = worst_prof.max(measured.max_abs_diff(&objective));
        let approx = compile_approx(p, &sol, 64, 1e-9)?;
        let plus = approx.plus_problem(p)?;
        worst_approx = worst_approx.max(las_vegas_profile(&approx.algorithm, &plus)?.max_abs_diff(&objective));
        worst_err = worst_err.max(check_state_conversion(&approx.algorithm, &plus, 1e-9)?.max_error());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_res <= 1e-10 && worst_prof <= 1e-12 && worst_approx <= 1e-9 && worst_err <= 1e-9 && secs < 10.0;
    Ok(outcome(
        pass,
        format!(
            "residual {worst_res:.2e}, extracted-vs-simulated {worst_prof:.2e}, approx profile {worst_approx:.2e}, conversion error {worst_err:.2e}, {secs:.2}s"
        ),
    ))
}

fn t_independence() -> Result<Outcome> {
    let inst = flip_pair(re(0.0));
    let p = &inst.problem;
    let sol = inst.boundary_solution(0.5)?;
    let totals: Vec<f64> = sol.vectors().iter().map(BlockVector::norm_sq).collect();
    let mut profiles = Vec::new();
    let mut worst_shift = 0.0f64;
    for t in [16, 64, 256] {
        let a = compile_approx(p, &sol, t, 1e-9)?;
        profiles.push(las_vegas_profile(&a.algorithm, &a.plus_problem(p)?)?.values);
        for x in 0..p.len() {
            let mut padded = ComplexVector::zeros(a.algorithm.h_dim());
            padded.rows_mut(0, p.k_dim).copy_from(&p.xi[x]);
            let shift = (&a.xi_plus[x] - padded).norm();
            worst_shift = worst_shift.max((shift - (totals[x] / t as f64).sqrt()).abs());
        }
    }
    let spread = max_diff(&profiles[0], &profiles[1]).max(max_diff(&profiles[0], &profiles[2]));
    let target = max_diff(&profiles[0], &sol.profile_values());
    let pass = spread <= 1e-9 && target <= 1e-9 && worst_shift <= 1e-12;
    Ok(outcome(pass, format!("profile spread {spread:.2e}, vs w {target:.2e}, |‖ξ⁺−ξ‖ − √(L/T)| {worst_shift:.2e}")))
}

fn plain_error() -> Result<Outcome> {
    let inst = flip_pair(re(0.0));
    let sol = inst.boundary_solution(0.5)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let run = run_plain(&inst.problem, &sol, eps, 1e-9)?;
        let err = run.errors.iter().copied().fold(0.0, f64::max);
        pass &= err <= eps;
        parts.push(format!("ε={eps}: T={} error {err:.4}", run.queries));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn two_label_numbers() -> Result<Outcome> {
    let inst = flip_pair(re(0.0));
    let sol = inst.boundary_solution(0.5)?;
    let res = residual(&sol, &inst.problem)?;
    let scan = inst.dual_scan(64)?;
    let pass = (inst.bound - 0.5).abs() <= 1e-15 && res <= 1e-12 && scan >= 0.5 - 1e-6;
    Ok(outcome(pass, format!("bound {}, boundary residual {res:.2e}, best scanned Γ {scan:.9}", inst.bound)))
}

fn impossibility_guard() -> Result<Outcome> {
    let inst = flip_pair(c(0.0, 1.0));
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let sol = inst.boundary_solution(w)?;
    let res = residual(&sol, &inst.problem)?;
    let objective_ok = res <= 1e-12 && max_diff(&sol.profile_values(), &[vec![w], vec![w]]) <= 1e-12;
    let mut pass = objective_ok;
    let mut parts = vec![format!("objective (1/√2, 1/√2) residual {res:.2e}")];
    for delta in [0.2, 0.05] {
        let out = compile_exact(&inst.problem, &sol, delta, 1e-9)?;
        let err = out.report.errors.iter().copied().fold(0.0, f64::max);
        let sum: f64 = out.report.profile.values.iter().map(|r| r[0]).sum();
        let margin = sum - 2f64.sqrt();
        pass &= err <= 1e-8 && margin > 0.0;
        parts.push(format!("δ={delta}: L₀+L₁−√2 = {margin:.3e}, error {err:.1e}"));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn exact_compilation() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(606);
    let (mut worst_err, mut worst_gap) = (0.0f64, 0.0f64);
    let mut chains = 0;
    for i in 0..10 {
        let labels = rng.gen_range(2..=4);
        let block_dims = if rng.gen_bool(0.5) { vec![1] } else { vec![1, 1] };
        let m: usize = block_dims.iter().sum();
        let c_dim = if i % 2 == 0 { 0 } else { 1 };
        let shape = InstanceShape { labels, block_dims, b_dim: 1, c_dim: c_dim.max(usize::from(m + c_dim < 2)), queries: rng.gen_range(1..=3) };
        let inst = random::solved_instance(&mut rng, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9)?;
        let out = compile_exact(p, &sol, 0.05, 1e-9)?;
        chains += usize::from(out.report.route == "chain");
        worst_err = worst_err.max(out.report.errors.iter().copied().fold(0.0, f64::max));
        worst_gap = worst_gap.max(max_diff(&out.report.profile.values, &sol.profile_values()));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_err <= 1e-8 && worst_gap <= 0.05 && secs < 60.0;
    Ok(outcome(pass, format!("error {worst_err:.2e}, |L − ‖v‖²| {worst_gap:.2e}, {chains}/10 via the chain, {secs:.1}s")))
}

fn composition_suite() -> Result<Outcome> {
    let mut rng = StdRng::seed_from_u64(707);
    let dims = [1usize, 2];
    let mut checks = Vec::new();

    // Sequential additivity.
    let a = random::algorithm(&mut rng, &dims, 1, 2, 2);
    let b = random::algorithm(&mut rng, &dims, 1, 2, 3);
    let o = random::unitary_family(&mut rng, 1, &dims).operator(0);
    let xi = random::unit_vector(&mut rng, a.h_dim());
    let ba = sequential(&b, &a)?;
    let mid = final_state_with(&a, &o, &xi)?;
    let lhs = las_vegas_with(&ba, &o, &xi)?;
    let rhs: Vec<f64> = las_vegas_with(&b, &o, &mid)?.iter().zip(las_vegas_with(&a, &o, &xi)?).map(|(p, q)| p + q).collect();
    checks.push(("sequential", max_diff(&[lhs], &[rhs]), 1e-12));

    // Slicing.
    let wide = random::algorithm(&mut rng, &dims, 2, 1, 2);
    let sliced = slice(&wide);
    let xi = random::unit_vector(&mut rng, wide.h_dim());
    let action = max_abs(&(apply_with(&wide, &o)? - apply_with(&sliced, &o)?));
    let prof = max_diff(&[las_vegas_with(&wide, &o, &xi)?], &[las_vegas_with(&sliced, &o, &xi)?]);
    checks.push(("slicing", action.max(prof), 1e-10));

    // Inversion.
    let tau = final_state_with(&a, &o, &random::unit_vector(&mut rng, a.h_dim()))?;
    let xi = {
        let inv = invert(&a);
        final_state_with(&inv, &o.adjoint(), &tau)?
    };
    let inv = max_diff(&[las_vegas_with(&invert(&a), &o.adjoint(), &tau)?], &[las_vegas_with(&a, &o, &xi)?]);
    checks.push(("inversion", inv, 1e-12));

    // Parallelogram identity, d = 3.
    let u = random::haar_unitary(&mut rng, 3);
    let states: Vec<ComplexVector> = (0..3).map(|_| random::vector(&mut rng, a.h_dim())).collect();
    let total = |vs: &[ComplexVector]| -> Result<f64> {
        let mut s = 0.0;
        for v in vs {
            s += las_vegas_with(&a, &o, v)?.iter().sum::<f64>();
        }
        Ok(s)
    };
    let mixed: Vec<ComplexVector> = (0..3)
        .map(|j| (0..3).fold(ComplexVector::zeros(a.h_dim()), |acc, i| acc + &states[i] * u[(i, j)]))
        .collect();
    checks.push(("parallelogram", (total(&states)? - total(&mixed)?).abs(), 1e-9));

    // Functional composition.
    let inner = random::algorithm(&mut rng, &dims, 1, 1, 2);
    let outer = random::algorithm(&mut rng, &[inner.h_dim()], 1, 2, 3);
    let composed = functional_compose(&outer, &inner)?;
    let xi = random::unit_vector(&mut rng, outer.h_dim());
    let inner_op = apply_with(&inner, &o)?;
    let mut expect = vec![0.0; dims.len()];
    for t in 1..=outer.queries() {
        let q = query_input_with(&outer, &inner_op, t, &xi)?.flatten();
        for (e, v) in expect.iter_mut().zip(las_vegas_with(&inner, &o, &q)?) {
            *e += v;
        }
    }
    let action = max_abs(&(apply_with(&composed, &o)? - apply_with(&outer, &inner_op)?));
    let comp = max_diff(&[las_vegas_with(&composed, &o, &xi)?], &[expect]);
    checks.push(("functional", comp.max(action), 1e-10));

    // Product bound on instances where every query lies in the inner subspace.
    let fam = random::unitary_family(&mut rng, 3, &dims);
    let mut excess = f64::NEG_INFINITY;
    for x in 0..fam.len() {
        let ox = fam.operator(x);
        let outer_oracle = apply_with(&inner, &ox)?;
        let xi = random::unit_vector(&mut rng, outer.h_dim());
        let la: f64 = las_vegas_with(&outer, &outer_oracle, &xi)?.iter().sum();
        let lb = subspace_las_vegas_with(&inner, &ox, &ComplexMatrix::identity(inner.h_dim(), inner.h_dim()))?;
        let lab = las_vegas_with(&composed, &ox, &xi)?;
        for (v, bound) in lab.iter().zip(&lb) {
            excess = excess.max(v - la * bound);
        }
    }
    checks.push(("product bound excess", excess.max(0.0), 1e-9));

    let pass = checks.iter().all(|(_, v, tol)| *v <= *tol);
    let detail = checks.iter().map(|(n, v, _)| format!("{n} {v:.1e}")).collect::<Vec<_>>().join(", ");
    Ok(outcome(pass, detail))
}

fn bidirectionality() -> Result<Outcome> {
    let mut rng = StdRng::seed_from_u64(808);
    let (mut worst_res, mut worst_rel) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let labels = rng.gen_range(2..=4);
        let dims = if rng.gen_bool(0.5) { vec![1] } else { vec![1, 1] };
        let fam = random::unitary_family(&mut rng, labels, &dims);
        let base = StateConversionProblem::new(fam, 1, vec![ComplexVector::zeros(1); labels], vec![ComplexVector::zeros(1); labels])?;
        let lifted_fam = lift_bidirectional(&base)?.oracles;
        let lifted_dims: Vec<usize> = lifted_fam.block_dims().to_vec();
        let queries = rng.gen_range(1..=3);
        let algo = random::algorithm(&mut rng, &lifted_dims, 1, 1, queries);
        let h = algo.h_dim();
        let xi: Vec<ComplexVector> = (0..labels).map(|_| random::unit_vector(&mut rng, h)).collect();
        let tau = (0..labels).map(|x| final_state_with(&algo, &lifted_fam.operator(x), &xi[x])).collect::<Result<Vec<_>>>()?;
        let p = StateConversionProblem::new(OracleFamily::clone(&base.oracles), h, xi, tau)?;
        let lifted = lift_bidirectional(&p)?;
        // (c) ⇒ (b)
        let tilde = extract(&algo, &lifted, 1e-9)?;
        let (u, v) = unidir_to_bidir(&tilde, &p, 1e-9)?;
        worst_res = worst_res.max(bidirectional_residual(&u, &v, &p)?);
        for x in 0..labels {
            let t = tilde.vector(x).dnorm_sq();
            worst_rel = worst_rel.max(max_diff(&[u[x].dnorm_sq(), v[x].dnorm_sq()], &[t.clone(), t]));
        }
        // (a) ⇒ (c), from an unbalanced pair.
        let s = 1.7;
        let ua: Vec<BlockVector> = u.iter().map(|b| b.scale(re(s))).collect();
        let va: Vec<BlockVector> = v.iter().map(|b| b.scale(re(1.0 / s))).collect();
        worst_res = worst_res.max(bidirectional_residual(&ua, &va, &p)?);
        let back: FeasibleSolution = bidir_to_unidir(&ua, &va, &p, 1e-9)?;
        worst_res = worst_res.max(residual(&back, &lifted)?);
        for x in 0..labels {
            let avg: Vec<f64> = ua[x].dnorm_sq().iter().zip(va[x].dnorm_sq()).map(|(a, b)| (a + b) / 2.0).collect();
            worst_rel = worst_rel.max(max_diff(&[back.vector(x).dnorm_sq()], &[avg]));
        }
    }
    let pass = worst_res <= 1e-10 && worst_rel <= 1e-10;
    Ok(outcome(pass, format!("residual {worst_res:.2e}, objective relation {worst_rel:.2e}")))
}

fn permutation_inversion() -> Result<Outcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    for n in 3..=5usize {
        let inst = perm_inversion(n)?;
        let r = &inst.report;
        let nf = n as f64;
        let gd = inst.gamma_delta_prime();
        let norm = lasvegas::numlin::spectral_norm(&gd);
        let ok = (r.lambda_gamma - (nf - 1.0) * (nf - 2.0) / 2.0).abs() <= 1e-9
            && r.lambda_neg_gamma <= nf - 2.0 + 1e-9
            && (r.lambda_gamma_delta_dblprime - r.lambda_neg_gamma).abs() <= 1e-9
            && norm <= r.spalek + 1e-9
            && r.spalek <= 2.0 * nf.powf(1.5) + 1e-6
            && r.ratio > 0.0;
        pass &= ok;
        ratios.push(r.ratio);
        parts.push(format!("n={n}: λ(Γ)={:.3} λ(Γ∘Δ)={:.3} ratio {:.4}", r.lambda_gamma, r.lambda_gamma_delta, r.ratio));
    }
    pass &= ratios.windows(2).all(|w| w[1] >= w[0]);
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    parts.push(format!("{secs:.2}s"));
    Ok(outcome(pass, parts.join("; ")))
}

fn weak_duality() -> Result<Outcome> {
    let mut rng = StdRng::seed_from_u64(1010);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..200 {
        let shape = InstanceShape::small(&mut rng);
        let inst = random::solved_instance(&mut rng, &shape);
        let p = &inst.problem;
        let sol = extract(&inst.algorithm, p, 1e-9)?;
        let gamma = random::hermitian(&mut rng, p.len());
        let report = dual_bound(&DualCertificate { gamma }, p)?;
        let profile = objective_profile(&sol, p.labels())?;
        let gap = report.lam_e - report.tradeoff_rhs(&profile);
        worst = worst.max(gap);
        violations += usize::from(!report.tradeoff_ok(&profile, 1e-7));
    }
    Ok(outcome(violations == 0, format!("{violations} violations, max λ(Γ∘E) − rhs = {worst:.3e}")))
}

type Criterion = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("adversary = Las Vegas round trip", round_trip),
        ("T-independence of the catalyst algorithm", t_independence),
        ("plain run error at most ε", plain_error),
        ("two-label bound and boundary solution", two_label_numbers),
        ("exact algorithms exceed √2 on G₁ ↦ G_i", impossibility_guard),
        ("exact compilation of random problems", exact_compilation),
        ("composition identities", composition_suite),
        ("bidirectional conversions", bidirectionality),
        ("permutation inversion spectra", permutation_inversion),
        ("weak duality fuzz", weak_duality),
    ];
    let mut failed = 0;
    let mut total = Duration::ZERO;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        total += start.elapsed();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2}: {name}: {}", i + 1, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), total.as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

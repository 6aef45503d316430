//! `lasvegas` command-line front end.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lasvegas::adversary::{dual_bound, extract, objective_profile, residual};
use lasvegas::io::{self, AlgorithmDoc, ProblemDoc, SolutionDoc};
use lasvegas::model::ComplexityProfile;
use lasvegas::numlin::{ComplexMatrix, UnitaryMatrix};
use lasvegas::problems::{boolean_problem, named_function, perm_inversion, two_label};
use lasvegas::random::{self, InstanceShape};
use lasvegas::sim::{check_state_conversion, las_vegas_profile};
use lasvegas::synth::{compile_approx, compile_exact, run_plain};
use lasvegas::Error;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

use report::{Report, Rows};

#[derive(Parser, Debug)]
#[command(name = "lasvegas", version, about = "Las Vegas query complexity and adversary bounds")]
struct Cli {
    /// Numerical tolerance for feasibility and solution checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for randomised commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an algorithm on a problem: final errors and Las Vegas profile.
    Simulate(Inputs),
    /// Extract the adversary feasible solution of an algorithm.
    Extract {
        #[command(flatten)]
        inputs: Inputs,
        /// Where to write the solution document.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a feasible solution into an algorithm.
    Synth(SynthArgs),
    /// Evaluate a dual certificate, optionally checking a profile against it.
    Dual {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        gamma: PathBuf,
        /// Complexity profile (JSON) to test against the trade-off inequality.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Write a random problem together with an algorithm that solves it.
    Generate {
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long, default_value_t = 2)]
        queries: usize,
        /// Directory receiving `problem.json` and `algorithm.json`.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Worked examples.
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(long)]
    algorithm: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Approx,
    Plain,
    Exact,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Number of queries for `approx`.
    #[arg(long = "T", default_value_t = 64)]
    t: usize,
    /// Target error for `plain`.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Allowed profile slack for `exact`.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Where to write the algorithm document.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the catalysed problem solved by an `approx` algorithm.
    #[arg(long)]
    problem_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Demo {
    /// Two unit states with overlap `a` mapped to overlap `b`, oracles ±1.
    TwoLabel {
        /// Complex number as `re` or `re,im`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        a: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        b: Complex64,
        /// Workspace for the two-label instance and boundary solution.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Boolean function evaluation in the phase.
    Boolean {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        steps: usize,
    },
    /// Spectral quantities of the permutation-inversion certificate.
    PermInv {
        #[arg(long)]
        n: usize,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [r] => Ok(Complex64::new(num(r)?, 0.0)),
        [r, i] => Ok(Complex64::new(num(r)?, num(i)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Lib(Error::Parse(_)) => 2,
            CliError::Lib(Error::Shape(_) | Error::Label(_)) => 3,
            CliError::Lib(Error::NotASolution(_) | Error::NotFeasible(_)) => 4,
            CliError::Lib(Error::BudgetExceeded(_)) => 5,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn profile_rows(rows: &mut Rows, p: &ComplexityProfile) {
    for (l, vals) in p.labels.iter().zip(&p.values) {
        for (i, v) in vals.iter().enumerate() {
            rows.push(l, i.to_string(), *v);
        }
    }
}

fn error_rows(rows: &mut Rows, labels: &[String], errors: &[f64]) {
    for (l, e) in labels.iter().zip(errors) {
        rows.push(l, "error", *e);
    }
}

fn simulate(cli: &Cli, inputs: &Inputs) -> CliResult<Report> {
    let p = io::load_problem(&inputs.problem)?;
    let algo = io::load_algorithm(&inputs.algorithm)?;
    let conv = check_state_conversion(&algo, &p, cli.tol)?;
    let profile = las_vegas_profile(&algo, &p)?;
    let mut rows = Rows::default();
    profile_rows(&mut rows, &profile);
    error_rows(&mut rows, p.labels(), &conv.errors);
    let json = json!({ "queries": algo.queries(), "errors": conv.errors, "solves": conv.pass, "profile": profile });
    Ok(Report { json, rows })
}

fn extract_cmd(cli: &Cli, inputs: &Inputs, out: Option<&Path>) -> CliResult<Report> {
    let p = io::load_problem(&inputs.problem)?;
    let algo = io::load_algorithm(&inputs.algorithm)?;
    let sol = extract(&algo, &p, cli.tol)?;
    let res = residual(&sol, &p)?;
    let profile = objective_profile(&sol, p.labels())?;
    let doc = SolutionDoc::from_solution(&sol, p.labels());
    if let Some(path) = out {
        write_file(path, &io::to_json(&doc))?;
    }
    let mut rows = Rows::default();
    profile_rows(&mut rows, &profile);
    rows.push("residual", "", res);
    let mut json = json!({ "residual": res, "profile": profile });
    if out.is_none() {
        json["solution"] = serde_json::to_value(&doc).expect("solution serialises");
    }
    Ok(Report { json, rows })
}

fn synth(cli: &Cli, args: &SynthArgs) -> CliResult<Report> {
    let p = io::load_problem(&args.problem)?;
    let sol = io::load_solution(&args.solution, p.labels())?;
    let mut rows = Rows::default();
    let (algorithm, json) = match args.mode {
        Mode::Approx => {
            let out = compile_approx(&p, &sol, args.t, cli.tol)?;
            let plus = out.plus_problem(&p)?;
            let conv = check_state_conversion(&out.algorithm, &plus, cli.tol)?;
            let profile = las_vegas_profile(&out.algorithm, &plus)?;
            if let Some(path) = &args.problem_out {
                write_file(path, &io::to_json(&ProblemDoc::from_problem(&plus)))?;
            }
            profile_rows(&mut rows, &profile);
            error_rows(&mut rows, p.labels(), &conv.errors);
            let json = json!({ "mode": "approx", "queries": out.queries, "errors": conv.errors, "profile": profile });
            (out.algorithm, json)
        }
        Mode::Plain => {
            let out = run_plain(&p, &sol, args.eps, cli.tol)?;
            let profile = las_vegas_profile(&out.algorithm, &p)?;
            profile_rows(&mut rows, &profile);
            error_rows(&mut rows, p.labels(), &out.errors);
            let json = json!({ "mode": "plain", "eps": args.eps, "queries": out.queries, "errors": out.errors, "profile": profile });
            (out.algorithm, json)
        }
        Mode::Exact => {
            let out = compile_exact(&p, &sol, args.delta, cli.tol)?;
            profile_rows(&mut rows, &out.report.profile);
            error_rows(&mut rows, p.labels(), &out.report.errors);
            let mut json = serde_json::to_value(&out.report).expect("report serialises");
            json["mode"] = json!("exact");
            (out.algorithm, json)
        }
    };
    let mut json = json;
    let doc = AlgorithmDoc::from_algorithm(&algorithm);
    match &args.out {
        Some(path) => write_file(path, &io::to_json(&doc))?,
        None => json["algorithm"] = serde_json::to_value(&doc).expect("algorithm serialises"),
    }
    Ok(Report { json, rows })
}

fn dual(problem: &Path, gamma: &Path, profile: Option<&Path>, cli: &Cli) -> CliResult<Report> {
    let p = io::load_problem(problem)?;
    let cert = io::load_certificate(gamma)?;
    let r = dual_bound(&cert, &p)?;
    let mut rows = Rows::default();
    rows.push("lam_e", "", r.lam_e);
    for (i, l) in r.lam_delta.iter().enumerate() {
        rows.push("lam_delta", i.to_string(), *l);
    }
    rows.push("bound", "", r.bound);
    let mut json = json!({
        "lam_e": r.lam_e,
        "lam_delta": r.lam_delta,
        "lam_delta_total": r.lam_delta_total,
        "bound": if r.infinite { json!("inf") } else { json!(r.bound) },
        "infinite": r.infinite,
        "vacuous": r.lam_e <= 0.0,
    });
    if let Some(path) = profile {
        let prof = io::load_profile(path)?;
        if prof.labels != p.labels() {
            return Err(Error::Label(format!("profile labels {:?} differ from problem labels", prof.labels)).into());
        }
        let rhs = r.tradeoff_rhs(&prof);
        let ok = r.tradeoff_ok(&prof, cli.tol);
        rows.push("tradeoff_rhs", "", rhs);
        rows.push("tradeoff_ok", "", f64::from(u8::from(ok)));
        json["tradeoff_rhs"] = json!(rhs);
        json["tradeoff_ok"] = json!(ok);
    }
    Ok(Report { json, rows })
}

fn generate(cli: &Cli, labels: usize, queries: usize, out_dir: &Path) -> CliResult<Report> {
    if labels == 0 {
        return Err(Error::DegenerateInput("at least one label is required".into()).into());
    }
    let mut rng = StdRng::seed_from_u64(cli.seed);
    let shape = InstanceShape { labels, block_dims: vec![1, 1], b_dim: 1, c_dim: 1, queries };
    let inst = random::solved_instance(&mut rng, &shape);
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(out_dir.to_path_buf(), e))?;
    let problem = out_dir.join("problem.json");
    let algorithm = out_dir.join("algorithm.json");
    write_file(&problem, &io::to_json(&ProblemDoc::from_problem(&inst.problem)))?;
    write_file(&algorithm, &io::to_json(&AlgorithmDoc::from_algorithm(&inst.algorithm)))?;
    let json = json!({ "problem": problem, "algorithm": algorithm, "labels": inst.problem.labels() });
    Ok(Report { json, rows: Rows::default() })
}

fn sign(s: f64) -> UnitaryMatrix {
    UnitaryMatrix::new(ComplexMatrix::from_element(1, 1, Complex64::new(s, 0.0))).expect("±1 is unitary")
}

fn demo(d: &Demo) -> CliResult<Report> {
    let mut rows = Rows::default();
    let json = match d {
        Demo::TwoLabel { a, b, out_dir } => {
            let inst = two_label(*a, *b, &sign(1.0), &sign(-1.0))?;
            let scan = inst.dual_scan(64)?;
            rows.push("bound", "", inst.bound);
            rows.push("dual_scan", "", scan);
            let mut json = json!({ "a": [a.re, a.im], "b": [b.re, b.im], "bound": inst.bound, "dual_scan": scan });
            if inst.bound > 0.0 {
                let sol = inst.boundary_solution(inst.bound)?;
                let res = residual(&sol, &inst.problem)?;
                let profile = objective_profile(&sol, inst.problem.labels())?;
                profile_rows(&mut rows, &profile);
                json["boundary_residual"] = json!(res);
                json["boundary_profile"] = json!(profile);
                if let Some(dir) = out_dir {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
                    write_file(&dir.join("problem.json"), &io::to_json(&ProblemDoc::from_problem(&inst.problem)))?;
                    write_file(&dir.join("solution.json"), &io::to_json(&SolutionDoc::from_solution(&sol, inst.problem.labels())))?;
                }
            }
            json
        }
        Demo::Boolean { function, n, steps } => {
            let f = named_function(function)?;
            let n = *n;
            if n == 0 || n > lasvegas::problems::MAX_BOOLEAN_VARS {
                return Err(Error::Range(format!("n must be in 1..={}", lasvegas::problems::MAX_BOOLEAN_VARS)).into());
            }
            let domain: Vec<usize> = (0..1usize << n).collect();
            let bp = boolean_problem(n, &domain, |x| f(x, n))?;
            let best = bp.sensitivity_scan(*steps)?;
            rows.push("dual_scan", "", best);
            json!({ "fn": function, "n": n, "labels": bp.problem.labels(), "values": bp.values, "dual_scan": best })
        }
        Demo::PermInv { n } => {
            let inst = perm_inversion(*n)?;
            let r = &inst.report;
            for (name, v) in [
                ("lambda_gamma", r.lambda_gamma),
                ("lambda_neg_gamma", r.lambda_neg_gamma),
                ("norm_gamma_delta_prime", r.norm_gamma_delta_prime),
                ("lambda_gamma_delta_dblprime", r.lambda_gamma_delta_dblprime),
                ("lambda_gamma_delta", r.lambda_gamma_delta),
                ("spalek", r.spalek),
                ("ratio", r.ratio),
            ] {
                rows.push(name, "", v);
            }
            serde_json::to_value(r).expect("report serialises")
        }
    };
    Ok(Report { json, rows })
}

fn run(cli: &Cli) -> CliResult<Report> {
    match &cli.command {
        Command::Simulate(inputs) => simulate(cli, inputs),
        Command::Extract { inputs, out } => extract_cmd(cli, inputs, out.as_deref()),
        Command::Synth(args) => synth(cli, args),
        Command::Dual { problem, gamma, profile } => dual(problem, gamma, profile.as_deref(), cli),
        Command::Generate { labels, queries, out_dir } => generate(cli, *labels, *queries, out_dir),
        Command::Demo(d) => demo(d),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render(cli.format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_complex("1").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(parse_complex("0, -1").unwrap(), Complex64::new(0.0, -1.0));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(CliError::from(Error::Parse("x".into())).code(), 2);
        assert_eq!(CliError::from(Error::Shape("x".into())).code(), 3);
        assert_eq!(CliError::from(Error::NotASolution(1.0)).code(), 4);
        assert_eq!(CliError::from(Error::NotFeasible(1.0)).code(), 4);
        assert_eq!(CliError::from(Error::BudgetExceeded("x".into())).code(), 5);
        assert_eq!(CliError::from(Error::NotPsd(-1.0)).code(), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use junta_adversary::adversary::{brute_force_bound, LearningProblem, Mode};
use junta_adversary::cgt::verify_cgt;
use junta_adversary::error::Error;
use junta_adversary::halfmaj::{
    growth_check, inner_identity_check, lambda_family, maj_positive_adv, nonadaptive_overlap, odd_overlap_limit,
    overlap_row, verify_constraints, CertMode, GrowthTable,
};
use junta_adversary::johnson::{all_projectors, projector_sum_check};
use junta_adversary::krawtchouk::{center_completeness, check_reflection_symmetry, gram_deviation, kraw_basis};
use junta_adversary::quadrature::DEFAULT_NODES;
use junta_adversary::theorem4::{feasible, maximize_bound, PGrid};
use junta_adversary::weights::WeightSet;
use serde::Serialize;
use serde_json::{json, Value};

const SCHEMA_VERSION: &str = "1.0";
const THREADS_ENV: &str = "JUNTA_ADV_THREADS";

#[derive(Parser)]
#[command(name = "junta-adv", version, about = "Adversary bounds and dual certificates for learning symmetric juntas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized Krawtchouk basis with orthonormality and symmetry checks.
    Kraw {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Johnson scheme projectors: completeness, orthogonality, idempotence, ranks.
    Johnson {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Limiting program optimum `max_i d_i` for a weight set.
    Bound {
        #[arg(long)]
        k: usize,
        /// `or`, `exact-half`, `majority` or `custom:<w1,w2,..>`.
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 65)]
        p_grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Group-testing dual certificate at finite `n`.
    CertCgt {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact-half trace-norm certificate at `k`; CSV is the growth table up to `k`.
    CertHalf {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Majority trace-norm certificate at `k`; CSV is the growth table up to `k`.
    CertMaj {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also report the positive-weight construction at distance scale `d`.
        #[arg(long)]
        d: Option<usize>,
        /// Ground set size for the positive-weight construction; defaults to `4k`.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Finite-`n` search over trace-free symmetric adversaries (`k <= 3`).
    Brute {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Non-adaptive overlap probability over every `|S|`.
    Overlap {
        #[arg(long)]
        k: usize,
        /// Ground set size; defaults to `4k`.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kraw { .. } => "kraw",
            Command::Johnson { .. } => "johnson",
            Command::Bound { .. } => "bound",
            Command::CertCgt { .. } => "cert-cgt",
            Command::CertHalf { .. } => "cert-half",
            Command::CertMaj { .. } => "cert-maj",
            Command::Brute { .. } => "brute",
            Command::Overlap { .. } => "overlap",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Command::Kraw { output, .. }
            | Command::Johnson { output, .. }
            | Command::Bound { output, .. }
            | Command::CertCgt { output, .. }
            | Command::CertHalf { output, .. }
            | Command::CertMaj { output, .. }
            | Command::Brute { output, .. }
            | Command::Overlap { output, .. } => output,
        }
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Outcome {
    verified: bool,
    result: Value,
    table: Table,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: &'static str,
    command: &'a str,
    verified: bool,
    result: &'a Value,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::DimensionMismatch { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Runtime(e.to_string()))
}

/// Fixed-precision decimal with trailing zeros removed.
fn num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn growth_rows(table: &GrowthTable) -> Table {
    Table {
        header: vec!["k", "g", "ratio"],
        rows: table.rows.iter().map(|r| vec![r.k.to_string(), num(r.g), num(r.ratio)]).collect(),
    }
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if !(tol.is_finite() && tol > 0.0) {
        return usage(format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

fn kraw(k: usize, p: f64, tol: f64) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    let basis = kraw_basis(k, p)?;
    let gram = gram_deviation(&basis);
    let mut verified = gram <= tol;
    let mut symmetry = Value::Null;
    if p == 0.5 {
        let reflection = (0..=k).map(|l| check_reflection_symmetry(k, l)).collect::<Result<Vec<_>, _>>()?;
        let reflection_max = reflection.into_iter().fold(0.0, f64::max);
        let completeness = (center_completeness(k)? - 1.0).abs();
        verified &= reflection_max <= tol && completeness <= tol;
        symmetry = json!({ "reflection_max_deviation": reflection_max, "center_completeness_deviation": completeness });
    }
    let rows = basis
        .iter()
        .flat_map(|v| v.entries.iter().enumerate().map(move |(x, e)| vec![v.t.to_string(), x.to_string(), num(*e)]))
        .collect();
    let vectors: Vec<&Vec<f64>> = basis.iter().map(|v| &v.entries).collect();
    Ok(Outcome {
        verified,
        result: json!({ "m": k, "p": p, "vectors": vectors, "gram_deviation": gram, "symmetry": symmetry, "tolerance": tol }),
        table: Table { header: vec!["t", "x", "value"], rows },
    })
}

fn johnson(n: usize, k: usize, tol: f64) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    let report = projector_sum_check(n, k)?;
    let projectors = all_projectors(n, k)?;
    let per_t: Vec<Value> = projectors
        .iter()
        .map(|p| json!({ "t": p.t, "trace": p.trace(), "expected_rank": p.expected_rank(), "idempotence": p.idempotence_error() }))
        .collect();
    let rows = projectors
        .iter()
        .map(|p| vec![p.t.to_string(), num(p.trace()), p.expected_rank().to_string(), num(p.idempotence_error())])
        .collect();
    let verified = [report.completeness, report.cross, report.idempotence, report.trace].iter().all(|&e| e <= tol);
    let mut result = to_value(&report)?;
    result["n"] = json!(n);
    result["k"] = json!(k);
    result["projectors"] = json!(per_t);
    result["tolerance"] = json!(tol);
    Ok(Outcome { verified, result, table: Table { header: vec!["t", "trace", "expected_rank", "idempotence"], rows } })
}

fn bound(k: usize, weights: &str, p_grid: usize, tol: f64) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    let ws = WeightSet::parse(weights, k)?;
    let grid = PGrid::chebyshev(p_grid)?;
    let report = maximize_bound(&ws, &grid, tol)?;
    let d = junta_adversary::adversary::DList::new(report.d.clone())?;
    let check = feasible(&d, &ws, &grid, tol)?;
    let rows = report.d.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]).collect();
    let mut result = to_value(&report)?;
    result["feasibility"] = to_value(&check)?;
    Ok(Outcome { verified: check.feasible, result, table: Table { header: vec!["i", "d"], rows } })
}

fn cert_cgt(n: usize, k: usize, nodes: usize, tol: f64) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    let report = verify_cgt(n, k, nodes, tol)?;
    let table = Table {
        header: vec!["n", "k", "max_pair_deviation", "max_diag", "pi_sqrt_k"],
        rows: vec![vec![
            n.to_string(),
            k.to_string(),
            format!("{:e}", report.max_pair_deviation),
            num(report.max_diag),
            num(report.pi_sqrt_k),
        ]],
    };
    Ok(Outcome { verified: report.feasible, result: to_value(&report)?, table })
}

fn certificate_summary(k: usize, mode: CertMode, tol: f64) -> Result<(bool, Value), Failure> {
    let family = lambda_family(k, mode)?;
    let residuals = verify_constraints(&family, tol)?;
    let value = json!({
        "k": k,
        "mode": mode,
        "objective": family.objective,
        "seed_trace_norm": family.seed_trace_norm,
        "recursion_bound": family.recursion_bound,
        "residuals": to_value(&residuals)?,
    });
    Ok((residuals.feasible, value))
}

fn cert_half(k: usize, tol: f64) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    if k == 0 {
        return usage("k must be at least 1");
    }
    let (mut verified, mut result) = certificate_summary(k, CertMode::ExactHalf, tol)?;
    let identity = inner_identity_check(k)?;
    verified &= identity.max_deviation <= tol && identity.sum_deviation <= tol;
    let growth = growth_check(CertMode::ExactHalf, k)?;
    result["inner_identity"] = to_value(&identity)?;
    result["growth"] = to_value(&growth)?;
    Ok(Outcome { verified, result, table: growth_rows(&growth) })
}

fn cert_maj(k: usize, tol: f64, d: Option<usize>, n: Option<usize>) -> Result<Outcome, Failure> {
    check_tol(tol)?;
    if k == 0 {
        return usage("k must be at least 1");
    }
    let (mode, mut verified, mut result) = if k.is_multiple_of(2) {
        let (ok, value) = certificate_summary(k, CertMode::MajorityEven, tol)?;
        let combined = value["objective"].clone();
        let mut value = value;
        value["combined_bound"] = combined;
        (CertMode::MajorityEven, ok, value)
    } else {
        let (mut ok, mut value) = certificate_summary(k, CertMode::MajorityOddDiff, tol)?;
        let diff = value["objective"].as_f64().unwrap_or(f64::NAN);
        let mut combined = diff;
        if k >= 3 {
            let (even_ok, even) = certificate_summary(k - 1, CertMode::MajorityEven, tol)?;
            ok &= even_ok;
            combined += even["objective"].as_f64().unwrap_or(f64::NAN);
            value["even_certificate"] = even;
        }
        value["overlap_limit"] = json!(odd_overlap_limit(k)?);
        value["combined_bound"] = json!(combined);
        (CertMode::MajorityOddDiff, ok, value)
    };
    if let Some(d) = d {
        let n = n.unwrap_or(4 * k);
        let adv = maj_positive_adv(n, k, d)?;
        verified &= adv.min_pair_ratio.is_finite() && adv.min_pair_ratio > 0.0;
        result["positive_adversary"] = to_value(&adv)?;
    } else if n.is_some() {
        return usage("--n is only used together with --d");
    }
    let growth = growth_check(mode, k)?;
    result["growth"] = to_value(&growth)?;
    Ok(Outcome { verified, result, table: growth_rows(&growth) })
}

fn brute(n: usize, k: usize, weights: &str, resolution: usize) -> Result<Outcome, Failure> {
    let ws = WeightSet::parse(weights, k)?;
    let problem = LearningProblem::new(n, k, ws, Mode::ExactK)?;
    if n > 16 {
        return usage(format!("brute force needs n <= 16, got {n}"));
    }
    let report = brute_force_bound(&problem, resolution)?;
    let rows = report.d.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]).collect();
    let verified = report.objective.is_finite();
    let mut result = to_value(&report)?;
    result["resolution"] = json!(resolution);
    Ok(Outcome { verified, result, table: Table { header: vec!["i", "d"], rows } })
}

fn overlap(k: usize, n: Option<usize>) -> Result<Outcome, Failure> {
    let n = n.unwrap_or(4 * k);
    let row = overlap_row(n, k)?;
    let probs = (0..=n).map(|s| nonadaptive_overlap(n, k, s)).collect::<Result<Vec<_>, _>>()?;
    let verified = probs.iter().all(|p| (0.0..=1.0).contains(p));
    let rows = probs.iter().enumerate().map(|(s, p)| vec![s.to_string(), num(*p)]).collect();
    let mut result = to_value(&row)?;
    result["probabilities"] = json!(probs);
    Ok(Outcome { verified, result, table: Table { header: vec!["s_size", "probability"], rows } })
}

fn dispatch(command: &Command) -> Result<Outcome, Failure> {
    match *command {
        Command::Kraw { k, p, tol, .. } => kraw(k, p, tol),
        Command::Johnson { n, k, tol, .. } => johnson(n, k, tol),
        Command::Bound { k, ref weights, p_grid, tol, .. } => bound(k, weights, p_grid, tol),
        Command::CertCgt { n, k, nodes, tol, .. } => cert_cgt(n, k, nodes, tol),
        Command::CertHalf { k, tol, .. } => cert_half(k, tol),
        Command::CertMaj { k, tol, d, n, .. } => cert_maj(k, tol, d, n),
        Command::Brute { n, k, ref weights, resolution, .. } => brute(n, k, weights, resolution),
        Command::Overlap { k, n, .. } => overlap(k, n),
    }
}

fn render(command: &str, format: Format, outcome: &Outcome) -> Result<String, Failure> {
    match format {
        Format::Json => {
            let envelope = Envelope { schema_version: SCHEMA_VERSION, command, verified: outcome.verified, result: &outcome.result };
            serde_json::to_string_pretty(&envelope)
                .map(|s| s + "\n")
                .map_err(|e| Failure::Runtime(e.to_string()))
        }
        Format::Csv => {
            let mut out = outcome.table.header.join(",");
            out.push('\n');
            for row in &outcome.table.rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => return usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    configure_threads()?;
    let outcome = dispatch(&cli.command)?;
    let output = cli.command.output();
    let text = render(cli.command.name(), output.format, &outcome)?;
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    Ok(outcome.verified)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("junta-adv: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("junta-adv: {}: verification failed", cli.command.name());
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("junta-adv: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("junta-adv: {msg}");
            ExitCode::from(1)
        }
    }
}

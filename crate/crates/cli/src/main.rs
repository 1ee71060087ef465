use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlsc::assignment::{CyclicAssignment, ParamError, SystemParams};
use dlsc::costs::{cost_table, write_csv, Sweep};
use dlsc::example1;
use dlsc::field::{FieldModulus, DEFAULT_Q};
use dlsc::simulator::{exhaustive_stragglers, SchemeKind, SimConfig, SimError, SimulationReport};
use dlsc::verify::{
    check_dimension_ladder, check_lemma1, check_lemma2, check_lemma3, monotonicity_in_q,
    Lemma2Params, LemmaReport, MonotonicityCheck, VerifyError, DEFAULT_BUDGET,
};
use serde::Serialize;

const EXIT_GOLDEN: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_REGIME: u8 = 3;
const EXIT_GUARD: u8 = 4;
const EXIT_BUDGET: u8 = 5;

/// Decentralized linearly separable computation: cost tables, protocol
/// simulation and lemma checks over a prime field.
///
/// Exit codes: 0 ok, 1 golden mismatch, 2 usage, 3 unsupported regime,
/// 4 scenario guard, 5 failure budget exceeded.
#[derive(Parser, Debug)]
#[command(name = "dlsc", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DLSC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form communication costs over one swept parameter.
    CostTable(CostTableArgs),
    /// Run the protocol over every straggler pattern and report failures
    /// and measured cost.
    Simulate(SimulateArgs),
    /// Empirical full-rank and dimension checks.
    VerifyLemmas(VerifyArgs),
    /// Replay the worked K = N = 4, Nr = 3, Kc = 4 example with its fixed
    /// coding vectors.
    Example1(Example1Args),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepAxis {
    /// Kc = 1..=K at fixed Nr.
    Kc,
    /// Nr = 1..=N at fixed Kc.
    Nr,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SchemeArg {
    Auto,
    NullSpace,
    RecoverAll,
}

impl From<SchemeArg> for SchemeKind {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Auto => SchemeKind::Auto,
            SchemeArg::NullSpace => SchemeKind::NullSpace,
            SchemeArg::RecoverAll => SchemeKind::RecoverAll,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LemmaArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Ladder,
    All,
}

#[derive(Args, Debug)]
struct CostTableArgs {
    /// Number of datasets.
    #[arg(long = "K")]
    k: usize,
    /// Number of workers.
    #[arg(long = "N")]
    n: usize,
    /// Responding workers; required for `--sweep kc`.
    #[arg(long = "Nr")]
    n_r: Option<usize>,
    /// Demanded combinations; required for `--sweep nr`.
    #[arg(long = "Kc")]
    k_c: Option<usize>,
    /// Parameter to sweep.
    #[arg(long)]
    sweep: SweepAxis,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "Nr")]
    n_r: usize,
    #[arg(long = "Kc")]
    k_c: usize,
    /// Prime field size.
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: u64,
    /// Symbols per message.
    #[arg(long = "L", default_value_t = 4)]
    l: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Master seed.
    #[arg(long, env = "DLSC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// `json` writes the full report; `csv` one row per responding set.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Round K up to a multiple of N with empty datasets.
    #[arg(long)]
    pad: bool,
    /// Check every (Nr - 1)-subset of helpers at non-responders.
    #[arg(long)]
    strict: bool,
    /// Run even when there are more than 10^6 straggler patterns.
    #[arg(long)]
    force: bool,
    /// Include every broadcast payload in the report.
    #[arg(long)]
    transcript: bool,
    #[arg(long, value_enum, default_value = "auto")]
    scheme: SchemeArg,
    /// Highest tolerated per-worker error rate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: f64,
    /// Also write the dataset assignment as JSON.
    #[arg(long)]
    dump_assignment: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long = "K", default_value_t = 4)]
    k: usize,
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    #[arg(long = "Nr", default_value_t = 3)]
    n_r: usize,
    #[arg(long = "Kc", default_value_t = 4)]
    k_c: usize,
    #[arg(long, default_value_t = DEFAULT_Q)]
    q: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = "DLSC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    lemma: LemmaArg,
    /// Subset size for lemma 3 (default: every size 1..=Nr).
    #[arg(long)]
    l: Option<usize>,
    /// With `--lemma 2`: ambient dimension.
    #[arg(long, default_value_t = 6)]
    ambient: usize,
    /// With `--lemma 2`: dimension of S.
    #[arg(long, default_value_t = 4)]
    dim_s: usize,
    /// With `--lemma 2`: dimension of the intersection of S and T.
    #[arg(long, default_value_t = 2)]
    dim_cap: usize,
    /// With `--lemma 2`: number of vectors drawn from S.
    #[arg(long, default_value_t = 3)]
    draws: usize,
    /// Highest tolerated violation rate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: f64,
    /// Also compare the lemma 1 rate against this smaller field.
    #[arg(long)]
    compare_q: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Example1Args {
    /// Field for the replay.
    #[arg(long, default_value_t = 101)]
    q: u64,
    /// Seed for the random messages.
    #[arg(long, env = "DLSC_SEED", default_value_t = 0)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ParamError> for Failure {
    fn from(e: ParamError) -> Self {
        Failure::new(EXIT_USAGE, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_USAGE, format!("i/o error: {e}"))
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::Regime(_) => EXIT_REGIME,
            SimError::Guard { .. } => EXIT_GUARD,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        let code = match e {
            VerifyError::Regime(_) => EXIT_REGIME,
            VerifyError::Dimensions(_) => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

fn field(q: u64) -> Result<FieldModulus, Failure> {
    FieldModulus::new(q).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

/// Write via a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match output {
        Some(path) => write_atomic(path, bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn cost_table_cmd(args: CostTableArgs) -> Result<(), Failure> {
    let sweep = match args.sweep {
        SweepAxis::Kc => {
            let n_r = args
                .n_r
                .ok_or_else(|| Failure::new(EXIT_USAGE, "--sweep kc needs --Nr"))?;
            Sweep::over_demand_count(args.k, args.n, n_r)
        }
        SweepAxis::Nr => {
            let k_c = args
                .k_c
                .ok_or_else(|| Failure::new(EXIT_USAGE, "--sweep nr needs --Kc"))?;
            Sweep::over_responders(args.k, args.n, k_c)
        }
    };
    let points = cost_table(&sweep)?;
    let bytes = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&points, &mut buf).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            buf
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "K": p.k, "N": p.n, "Nr": p.n_r, "Kc": p.k_c,
                        "R_dec": p.r_dec.to_string(),
                        "R_cec": p.r_cec.to_string(),
                        "R_cyc_star": p.r_cyc_star.to_string(),
                    })
                })
                .collect();
            json_bytes(&rows)
        }
    };
    emit(args.output.as_deref(), &bytes)?;
    Ok(())
}

fn scenario_csv(report: &SimulationReport) -> Vec<u8> {
    let mut out = String::from("A,symbols,failures\n");
    for c in &report.measured_cost_symbols {
        let failures = report
            .decode_failures
            .iter()
            .filter(|f| f.responding == c.responding)
            .count();
        let a: Vec<String> = c.responding.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{},{},{}\n", a.join(" "), c.symbols, failures));
    }
    out.into_bytes()
}

fn simulate_cmd(args: SimulateArgs) -> Result<(), Failure> {
    let q = field(args.q)?;
    let params = if args.pad {
        SystemParams::with_padding(args.k, args.n, args.n_r, args.k_c, q, args.l)?
    } else {
        SystemParams::new(args.k, args.n, args.n_r, args.k_c, q, args.l)?
    };
    if let Some(path) = &args.dump_assignment {
        write_atomic(path, &json_bytes(&CyclicAssignment::new(params).dump()))?;
    }
    let config = SimConfig {
        trials: args.trials,
        master_seed: args.seed,
        scheme: args.scheme.into(),
        strict: args.strict,
        force: args.force,
        transcript: args.transcript,
    };
    let report = exhaustive_stragglers(&params, &config)?;
    let bytes = match args.format {
        Format::Json => json_bytes(&report),
        Format::Csv => scenario_csv(&report),
    };
    emit(args.output.as_deref(), &bytes)?;
    eprintln!(
        "{} scheme: {} scenarios, {} decode failures, R = {}, max error rate {}",
        report.scheme,
        report.scenarios_checked,
        report.decode_failures.len(),
        report.worst_case_cost_r,
        report.max_error_rate
    );
    if !report.within_budget(args.budget) {
        let mut seeds: Vec<u64> = report.decode_failures.iter().map(|f| f.seed).collect();
        seeds.dedup();
        let shown = seeds.len().min(10);
        let more = if seeds.len() > shown {
            format!(" and {} more (see the report)", seeds.len() - shown)
        } else {
            String::new()
        };
        return Err(Failure::new(
            EXIT_BUDGET,
            format!(
                "error rate {} exceeds budget {}; failing trial seeds: {:?}{more}",
                report.max_error_rate,
                args.budget,
                &seeds[..shown]
            ),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct LemmaBundle {
    suites: Vec<LemmaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotonicity: Option<MonotonicityCheck>,
    passed: bool,
}

fn verify_cmd(args: VerifyArgs) -> Result<(), Failure> {
    let q = field(args.q)?;
    let params = SystemParams::new(args.k, args.n, args.n_r, args.k_c, q, 4)?;
    let wants = |l: LemmaArg| args.lemma == l || args.lemma == LemmaArg::All;
    let mut suites = Vec::new();
    if wants(LemmaArg::One) {
        suites.push(check_lemma1(&params, args.trials, args.seed, args.budget)?);
    }
    if wants(LemmaArg::Two) {
        let dims = Lemma2Params {
            ambient: args.ambient,
            dim_s: args.dim_s,
            dim_s_cap_t: args.dim_cap,
            s: args.draws,
        };
        suites.push(check_lemma2(dims, q, args.trials, args.seed)?);
    }
    if wants(LemmaArg::Three) {
        suites.push(check_lemma3(
            &params,
            args.l,
            args.trials,
            args.seed,
            args.budget,
        )?);
    }
    if wants(LemmaArg::Ladder) {
        suites.push(check_dimension_ladder(
            &params,
            args.trials,
            args.seed,
            args.budget,
        )?);
    }
    let monotonicity = match args.compare_q {
        Some(low) => Some(monotonicity_in_q(
            &params,
            field(low)?,
            args.trials,
            args.seed,
        )?),
        None => None,
    };
    let passed = suites.iter().all(|s| s.passed);
    let bundle = LemmaBundle {
        suites,
        monotonicity,
        passed,
    };
    emit(args.output.as_deref(), &json_bytes(&bundle))?;

    for s in &bundle.suites {
        let rate = s
            .observed_rate
            .map_or("undefined".to_string(), |r| r.to_string());
        let status = if !s.passed {
            "FAIL"
        } else if s.informational {
            "INFO"
        } else {
            "PASS"
        };
        eprintln!(
            "{status} {:?}: {} violations / {} trials (rate {rate})",
            s.lemma, s.violations, s.trials
        );
    }
    if bundle.suites.iter().any(|s| s.informational) {
        eprintln!(
            "warning: q = {} is small; lemma 1, 3 and ladder rates are informational only",
            q.q()
        );
    }
    if let Some(m) = &bundle.monotonicity {
        if m.flagged {
            eprintln!(
                "warning: q = {} failed more often than q = {}",
                m.high_q, m.low_q
            );
        }
    }
    if !passed {
        let seeds: Vec<String> = bundle
            .suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| format!("{:?}: {:?}", s.lemma, s.violation_seeds))
            .collect();
        return Err(Failure::new(
            EXIT_BUDGET,
            format!("violation budget exceeded; seeds {}", seeds.join("; ")),
        ));
    }
    Ok(())
}

fn example1_cmd(args: Example1Args) -> Result<(), Failure> {
    let q = field(args.q)?;
    let checks =
        example1::replay(q, args.seed).map_err(|e| Failure::new(EXIT_GOLDEN, e.to_string()))?;
    let mut out = io::stdout().lock();
    for c in &checks {
        writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::new(
            EXIT_GOLDEN,
            format!("{failed} golden checks failed"),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::CostTable(a) => cost_table_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::VerifyLemmas(a) => verify_cmd(a),
        Command::Example1(a) => example1_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

use std::fs;
use std::io::Write;
use std::path::Path;

use cpamm::harness::{check_lemmas, check_trace, gen_trace, CheckReport, GenConfig, LemmaOptions};
use cpamm::{
    gain, networth, replay, solve_arbitrage, AccountId, ConstProd, Error, MintedId, PriceOracle,
    Rational, State, TokenId, Trace,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::args::{ArbArgs, CheckArgs, Command, GenArgs, GenFlags, LemmasArgs, ReplayArgs};

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or unparsable input. Exit code 2.
    Usage(String),
    /// Input parsed but failed validation, or a property was violated.
    /// Exit code 1; the value goes to standard error.
    Invalid(Value),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invalid(_) => 1,
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn invalid(kind: &str, detail: impl ToString) -> Failure {
    Failure::Invalid(json!({ "error": kind, "detail": detail.to_string() }))
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Usage(format!("write failed: {e}"))
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_failure(path: &Path, e: Error) -> Failure {
    Failure::Usage(format!("cannot parse {}: {e}", path.display()))
}

fn load_trace(path: &Path) -> std::result::Result<Trace, Failure> {
    Trace::from_jsonl(&read(path)?).map_err(|e| parse_failure(path, e))
}

fn load_oracle(path: &Path) -> std::result::Result<PriceOracle, Failure> {
    PriceOracle::from_json(&read(path)?).map_err(|e| parse_failure(path, e))
}

fn load_state(path: &Path) -> std::result::Result<State, Failure> {
    State::from_json(read(path)?.trim()).map_err(|e| parse_failure(path, e))
}

/// Config file (or defaults) with flag overrides applied.
fn gen_config(flags: &GenFlags) -> std::result::Result<GenConfig, Failure> {
    let mut cfg = match &flags.config {
        Some(path) => serde_json::from_str::<GenConfig>(&read(path)?)
            .map_err(|e| Failure::Usage(format!("cannot parse {}: {e}", path.display())))?,
        None => GenConfig::default(),
    };
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = flags.steps {
        cfg.n_steps = steps;
    }
    if let Some(accounts) = flags.accounts {
        cfg.n_accounts = accounts;
    }
    if let Some(tokens) = flags.tokens {
        cfg.n_tokens = tokens;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Runs `f` on a dedicated pool when a job count is given.
fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> std::result::Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn line(out: &mut dyn Write, v: &Value) -> Outcome {
    writeln!(out, "{v}").map_err(io_failure)
}

/// Adds `<key>_approx` next to each listed exact field.
fn add_approx(obj: &mut Map<String, Value>, fields: &[(&str, &Rational)], digits: Option<usize>) {
    if let Some(d) = digits {
        for (key, v) in fields {
            obj.insert(
                format!("{key}_approx"),
                Value::String(v.to_decimal_string(d)),
            );
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Replay(a) => run_replay(a, out),
        Command::Gen(a) => run_gen(a, out),
        Command::Arb(a) => run_arb(a, out),
        Command::Check(a) => run_check(a, out),
        Command::Lemmas(a) => run_lemmas(a, out),
    }
}

fn run_replay(args: ReplayArgs, out: &mut dyn Write) -> Outcome {
    let trace = load_trace(&args.trace)?;
    let oracle = args.oracle.as_deref().map(load_oracle).transpose()?;
    if args.gain.is_some() && oracle.is_none() {
        return Err(Failure::Usage("--gain needs --oracle".into()));
    }
    let states = replay(&trace, &ConstProd).map_err(|e| match e {
        Error::StepInvalid { index, cause } => Failure::Invalid(json!({
            "error": "step_invalid",
            "step": index + 1,
            "detail": cause.to_string(),
        })),
        other => invalid("invalid_initial_state", other),
    })?;

    if let (Some(account), Some(o)) = (args.gain, oracle.as_ref()) {
        let a = AccountId(account);
        let mut sum = Rational::zero();
        for (i, (pair, tx)) in states.windows(2).zip(&trace.steps).enumerate() {
            let g = gain(a, o, &pair[0], &pair[1]).map_err(|e| invalid("valuation", e))?;
            let mut obj = Map::new();
            obj.insert("step".into(), json!(i + 1));
            obj.insert("kind".into(), json!(tx.kind()));
            obj.insert("gain".into(), json!(g));
            add_approx(&mut obj, &[("gain", &g)], args.decimals);
            line(out, &Value::Object(obj))?;
            sum = sum + g;
        }
        let first = states.first().expect("initial state");
        let last = states.last().expect("initial state");
        let before = networth(first, a, o).map_err(|e| invalid("valuation", e))?;
        let after = networth(last, a, o).map_err(|e| invalid("valuation", e))?;
        let total = after.into_rational() - before.into_rational();
        if sum != total {
            return Err(Failure::Invalid(json!({
                "error": "gain_mismatch",
                "sum": sum,
                "total": total,
            })));
        }
        let mut obj = Map::new();
        obj.insert("account".into(), json!(a));
        obj.insert("total".into(), json!(total));
        add_approx(&mut obj, &[("total", &total)], args.decimals);
        return line(out, &Value::Object(obj));
    }

    if args.all {
        for s in &states {
            writeln!(out, "{}", s.to_json()).map_err(io_failure)?;
        }
    } else {
        writeln!(out, "{}", states.last().expect("initial state").to_json()).map_err(io_failure)?;
    }
    Ok(())
}

fn run_gen(args: GenArgs, out: &mut dyn Write) -> Outcome {
    let cfg = gen_config(&args.gen)?;
    let trace = gen_trace(&cfg).map_err(|e| invalid("generation", e))?;
    let text = trace.to_jsonl();
    match args.out {
        Some(path) => fs::write(&path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(io_failure),
    }
}

/// `a-b` in either order.
fn parse_pool(text: &str) -> std::result::Result<MintedId, Failure> {
    let bad = |why: String| Failure::Usage(format!("bad --pool {text:?}: {why}"));
    let (a, b) = text
        .split_once('-')
        .ok_or_else(|| bad("expected two token ids joined by '-'".into()))?;
    let a: u64 = a.trim().parse().map_err(|e| bad(format!("{e}")))?;
    let b: u64 = b.trim().parse().map_err(|e| bad(format!("{e}")))?;
    MintedId::new(TokenId(a), TokenId(b)).map_err(|e| bad(e.to_string()))
}

fn run_arb(args: ArbArgs, out: &mut dyn Write) -> Outcome {
    let state = load_state(&args.state)?;
    let oracle = load_oracle(&args.oracle)?;
    let pool = parse_pool(&args.pool)?;
    let sol = solve_arbitrage(&state, AccountId(args.account), &oracle, pool)
        .map_err(|e| invalid("arbitrage", e))?;
    let value = match sol {
        None => Value::Null,
        Some(sol) => {
            let mut value = serde_json::to_value(&sol).expect("solution serializes");
            if let Value::Object(obj) = &mut value {
                add_approx(
                    obj,
                    &[
                        ("x", sol.x.as_rational()),
                        ("y", sol.y.as_rational()),
                        ("gain", &sol.gain),
                        ("post_ratio", sol.post_ratio.as_rational()),
                    ],
                    args.decimals,
                );
            }
            value
        }
    };
    line(out, &value)
}

/// Prints the report and its summary; violations also go to standard error.
fn finish_report(report: CheckReport, out: &mut dyn Write) -> Outcome {
    line(out, &json!(report))?;
    writeln!(out, "{}", report.summary()).map_err(io_failure)?;
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::Invalid(
            json!({ "error": "violations", "violations": report.violations }),
        ))
    }
}

fn run_check(args: CheckArgs, out: &mut dyn Write) -> Outcome {
    if let Some(path) = &args.trace {
        let trace = load_trace(path)?;
        return finish_report(check_trace(&trace, &ConstProd), out);
    }
    let cfg = gen_config(&args.gen)?;
    let traces = args.traces;
    let mut report = with_jobs(args.jobs, || {
        (0..traces as u64)
            .into_par_iter()
            .map(|i| {
                let trace = gen_trace(&cfg.derived(i))?;
                Ok(check_trace(&trace, &ConstProd))
            })
            .collect::<cpamm::Result<Vec<CheckReport>>>()
    })?
    .map_err(|e| invalid("generation", e))?
    .into_iter()
    .fold(CheckReport::default(), |mut acc, r| {
        acc.merge(r);
        acc
    });
    if args.lemmas {
        let oracle = load_oracle(args.oracle.as_deref().expect("clap requires --oracle"))?;
        let opts = LemmaOptions {
            n_traces: traces,
            oracle: Some(oracle),
            ..LemmaOptions::default()
        };
        let lemmas = with_jobs(args.jobs, || check_lemmas(&cfg, &opts))?
            .map_err(|e| invalid("lemmas", e))?;
        report.merge(lemmas);
    }
    finish_report(report, out)
}

fn run_lemmas(args: LemmasArgs, out: &mut dyn Write) -> Outcome {
    let cfg = gen_config(&args.gen)?;
    let oracle = args.oracle.as_deref().map(load_oracle).transpose()?;
    let opts = LemmaOptions {
        n_traces: args.traces,
        swaps_per_trace: args.swaps,
        grid_points: args.grid,
        oracle,
    };
    let report = with_jobs(args.jobs, || check_lemmas(&cfg, &opts))?.map_err(|e| match e {
        Error::InvalidConfig(msg) => Failure::Usage(msg),
        other => invalid("lemmas", other),
    })?;
    finish_report(report, out)
}

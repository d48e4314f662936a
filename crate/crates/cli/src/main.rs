//! `rns`: conversions, single channel operations, verification sweeps and
//! dynamic-range reports for the complex-channel residue model.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};

use rns_core::alu::{self, WordLuts};
use rns_core::forward::{forward_std, ChannelResidue};
use rns_core::oracle::{OracleContext, SweepKind, SweepMode};
use rns_core::report::{dr_table, DrReport, JSON_SAFE_LIMIT};
use rns_core::residue::parse_descriptors;
use rns_core::reverse::{ncrt_plan, ncrt_reverse};
use rns_core::verify::{self, Unit};
use rns_core::{ChannelSign, ComplexChannelResidue, FreshOperand, ModuliSet, Params, RnsError};

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "rns", version, about = "Modulo-(2^2n+1) arithmetic on two conjugate n-bit complex channels")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Channel width n.
    #[arg(long, global = true, default_value_t = 5)]
    n: u32,

    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for random sweeps.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads for sweeps (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Dump intermediate datapath words.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert an integer to residues or residues back to an integer.
    Convert {
        /// Moduli set, e.g. `f:n=2`, `f:n=5,p=2` or `7,9,16,g3`.
        #[arg(long)]
        set: String,

        #[arg(long, conflicts_with = "reverse", required_unless_present = "reverse")]
        forward: Option<String>,

        /// Comma-separated residues, one per channel.
        #[arg(long)]
        reverse: Option<String>,
    },

    /// Run one channel operation and cross-check it against the oracle.
    Op {
        op: OpKind,
        x: u64,
        y: u64,

        #[arg(long, value_enum, default_value_t = SignArg::Minus)]
        sign: SignArg,
    },

    /// Sweep a unit against the oracle.
    Verify {
        unit: String,

        #[arg(long, conflicts_with = "random")]
        exhaustive: bool,

        #[arg(long)]
        random: bool,

        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },

    /// Dynamic range of one or more moduli sets.
    Dr {
        #[arg(required = true)]
        sets: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OpKind {
    Add,
    Mul,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Minus,
    Plus,
}

impl From<SignArg> for ChannelSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Minus => ChannelSign::Minus,
            SignArg::Plus => ChannelSign::Plus,
        }
    }
}

/// How a command ended when it did not fail outright.
enum Outcome {
    Pass,
    Mismatch,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, RnsError> {
    let g = &cli.global;
    match &cli.command {
        Command::Convert { set, forward, reverse } => convert(g, set, forward.as_deref(), reverse.as_deref()),
        Command::Op { op, x, y, sign } => op_cmd(g, *op, *x, *y, (*sign).into()),
        Command::Verify {
            unit,
            exhaustive: _,
            random,
            samples,
        } => verify_cmd(g, unit, *random, *samples),
        Command::Dr { sets } => dr_cmd(g, sets),
    }
}

/// Integer as a JSON number when every reader can hold it exactly.
fn num(v: u64) -> Value {
    if v < JSON_SAFE_LIMIT {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn big(v: &BigUint) -> Value {
    match u64::try_from(v) {
        Ok(small) => num(small),
        Err(_) => json!(v.to_string()),
    }
}

fn parse_big(s: &str) -> Result<BigUint, RnsError> {
    s.trim().replace('_', "").parse().map_err(|_| RnsError::Parse {
        input: s.to_owned(),
        reason: "expected a non-negative decimal integer".into(),
    })
}

fn convert(g: &Global, set: &str, forward: Option<&str>, reverse: Option<&str>) -> Result<Outcome, RnsError> {
    let set = ModuliSet::build(parse_descriptors(set)?)?;
    if let Some(z) = forward {
        let z = parse_big(z)?;
        let residues = forward_std(&z, &set)?;
        let values: Vec<u64> = residues.iter().map(ChannelResidue::value).collect();
        if g.json {
            let channels: Vec<Value> = set
                .channels()
                .iter()
                .zip(&residues)
                .map(|(c, r)| match r {
                    ChannelResidue::Plain(v) => json!({ "channel": c.to_string(), "residue": num(*v) }),
                    ChannelResidue::Complex { minus, .. } => json!({
                        "channel": c.to_string(),
                        "residue": num(r.value()),
                        "real": num(minus.real),
                        "imag": num(minus.imag),
                        "zero": minus.zero,
                    }),
                })
                .collect();
            println!(
                "{}",
                json!({ "set": set.to_string(), "z": big(&z), "residues": values.iter().copied().map(num).collect::<Vec<_>>(), "channels": channels })
            );
        } else {
            let parts: Vec<String> = values.iter().map(u64::to_string).collect();
            println!("[{}]", parts.join(", "));
        }
        return Ok(Outcome::Pass);
    }

    let list = reverse.unwrap_or_default();
    let residues = list
        .split(',')
        .map(parse_big)
        .collect::<Result<Vec<_>, _>>()?;
    if residues.len() != set.len() {
        return Err(RnsError::DimensionMismatch {
            expected: set.len(),
            actual: residues.len(),
        });
    }
    for (r, c) in residues.iter().zip(set.channels()) {
        if *r >= BigUint::from(c.modulus()) {
            return Err(RnsError::OutOfRange {
                what: "residue",
                value: format!("{r} on channel {c}"),
                max: (c.modulus() - 1).to_string(),
            });
        }
    }
    let plan = ncrt_plan(&set)?;
    let z = ncrt_reverse(&residues, &plan)?;
    if g.json {
        println!("{}", json!({ "set": set.to_string(), "residues": residues.iter().map(big).collect::<Vec<_>>(), "z": big(&z) }));
    } else {
        println!("{z}");
    }
    Ok(Outcome::Pass)
}

fn fields(s: &ComplexChannelResidue) -> Value {
    json!({ "r": num(s.r), "borrow": s.borrow, "i": num(s.i), "carry": s.carry })
}

fn op_cmd(g: &Global, op: OpKind, x: u64, y: u64, sign: ChannelSign) -> Result<Outcome, RnsError> {
    let params = Params::channel(g.n)?;
    let luts = WordLuts::new(params);
    let ctx = OracleContext::new(params.n());
    let xf = FreshOperand::from_value(x, sign, &params)?;

    let (name, result, conjugate, oracle, trace) = match op {
        OpKind::Add => {
            let acc = ComplexChannelResidue::from_value(y, sign, &params)?;
            let t = alu::add_fresh_with(&xf, &acc, &luts);
            let c = alu::add_fresh_with(&xf.with_sign(sign.conjugate()), &acc.with_sign(sign.conjugate()), &luts);
            let trace = json!({
                "accumulator": fields(&acc),
                "real_sum": num(t.real_sum),
                "imag_sum": num(t.imag_sum),
            });
            ("add", t.result, c.result, ctx.add(x, y), trace)
        }
        OpKind::Mul => {
            let yf = FreshOperand::from_value(y, sign, &params)?;
            let t = alu::mul_with(&xf, &yf, &luts);
            let c = alu::mul_with(&xf.with_sign(sign.conjugate()), &yf.with_sign(sign.conjugate()), &luts);
            let trace = serde_json::to_value(t.stages).expect("trace serialises");
            ("mul", t.product, c.product, ctx.mul(x, y), trace)
        }
    };

    let phi = result.value(&params);
    let coherent = conjugate == result.with_sign(sign.conjugate());
    let matched = phi == oracle && coherent;

    if g.json {
        let mut out = json!({
            "op": name,
            "n": params.n(),
            "x": num(x),
            "y": num(y),
            "channel": sign.to_string(),
            "result": fields(&result),
            "phi": num(phi),
            "oracle": num(oracle),
            "conjugate_identical": coherent,
            "match": matched,
        });
        if g.trace {
            out["trace"] = trace;
        }
        println!("{out}");
    } else {
        println!("{name} {x} {y} on {sign} (n={})", params.n());
        if g.trace {
            println!("  trace: {trace}");
        }
        println!(
            "  result: r={} borrow={} i={} carry={}",
            result.r,
            u8::from(result.borrow),
            result.i,
            u8::from(result.carry)
        );
        println!(
            "  phi = {phi}, oracle {oracle}, {}",
            if matched { "match" } else { "MISMATCH" }
        );
        if !coherent {
            println!("  conjugate channel disagrees: {conjugate:?}");
        }
    }
    Ok(if matched { Outcome::Pass } else { Outcome::Mismatch })
}

fn verify_cmd(g: &Global, unit: &str, random: bool, samples: u64) -> Result<Outcome, RnsError> {
    let unit: Unit = unit.parse()?;
    let params = Params::channel(g.n)?;
    let mode = if random {
        SweepMode::Random {
            samples,
            seed: g.seed,
        }
    } else {
        SweepMode::Exhaustive
    };
    let workers = g
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let report = verify::run(unit, params, &mode, workers)?;
    if g.json {
        println!("{}", serde_json::to_string(&report).expect("report serialises"));
    } else {
        let seed = report.seed.map(|s| format!(", seed {s}")).unwrap_or_default();
        println!(
            "{} n={} {}{seed}: {} cases, {} failures ({:.3} s)",
            report.unit,
            report.n,
            match report.mode {
                SweepKind::Exhaustive => "exhaustive",
                SweepKind::Random => "random",
            },
            report.cases, report.failures, report.wall_time_s
        );
        if let Some(c) = &report.counterexample {
            println!("  first counterexample #{}: {}", c.index, c.input);
            println!("  expected {}, got {}", c.expected, c.actual);
        }
    }
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Mismatch })
}

fn dr_cmd(g: &Global, sets: &[String]) -> Result<Outcome, RnsError> {
    let reports = sets
        .iter()
        .map(|s| DrReport::analyze(&parse_descriptors(s)?))
        .collect::<Result<Vec<_>, _>>()?;
    if g.json {
        println!("{}", serde_json::to_string(&reports).expect("report serialises"));
    } else {
        print!("{}", dr_table(&reports));
        if g.trace {
            for r in reports.iter().filter(|r| !r.stage_levels.is_empty()).take(1) {
                println!("complex-channel multiplier stages:");
                for s in &r.stage_levels {
                    match &s.delay {
                        Some(d) => println!("  {} [{d}]", s.stage),
                        None => println!("  {}", s.stage),
                    }
                }
            }
        }
    }
    Ok(Outcome::Pass)
}

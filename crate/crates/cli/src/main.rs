//! `infodist`: evaluate measurements and generate the trade-off datasets.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use infodist::correlation::{
    coefficient_range_curves, gamma_boundary, scatter_dataset, sigma_for,
};
use infodist::improver::{improve, improvability, DEFAULT_CONV_TOL, DEFAULT_MAX_ITER};
use infodist::oracle::{
    brute_force_steepest, finite_difference_gradients, haar_report, region_membership_check,
    Sense, Target,
};
use infodist::{
    angle_set, canonicalize, gradients, outcome_probability, parse_lambdas, presets, Error,
    Measurement, Pair,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_REJECTION: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "infodist", version, about = "Information/disturbance trade-off of a single measurement outcome")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metrics, degeneracy profile, boundary angles and all cosines.
    Eval(EvalArgs),
    /// Normalized changes (Δg, Δd) for random admissible modifications.
    Scatter(ScatterArgs),
    /// Γ boundary arcs and the Σ ellipse.
    Region(RegionArgs),
    /// (G, C⁺⁺) along the fundamental families.
    Range(RangeArgs),
    /// Iterative improvement along g⁺ + d⁺.
    Improve(ImproveArgs),
    /// Numerical cross-checks of the closed forms.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct Input {
    /// Singular values, comma separated (any order).
    #[arg(long = "lambda", allow_hyphen_values = true, conflicts_with = "preset")]
    lambda: Option<String>,
    /// Named archetype for the selected pair (d = 4).
    #[arg(long)]
    preset: Option<String>,
    /// Expected dimension; checked against --lambda.
    #[arg(long = "d")]
    d: Option<usize>,
    /// Divide by the largest value when it exceeds 1.
    #[arg(long)]
    rescale: bool,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write data here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PairArg {
    Gf,
    Gr,
}

impl From<PairArg> for Pair {
    fn from(p: PairArg) -> Pair {
        match p {
            PairArg::Gf => Pair::Gf,
            PairArg::Gr => Pair::Gr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    Formulas,
    Gradients,
    Directions,
    Region,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = PairArg::Gf)]
    pair: PairArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScatterArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = PairArg::Gf)]
    pair: PairArg,
    /// Norm of each modification.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 250)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = PairArg::Gf)]
    pair: PairArg,
    /// Points on the Σ polyline.
    #[arg(long, default_value_t = 256)]
    count: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct RangeArgs {
    #[arg(long = "d", default_value_t = 4)]
    d: usize,
    #[arg(long, value_enum, default_value_t = PairArg::Gf)]
    pair: PairArg,
    /// Grid points per family.
    #[arg(long, default_value_t = 101)]
    count: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ImproveArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = PairArg::Gf)]
    pair: PairArg,
    /// Step length.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_CONV_TOL)]
    conv_tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value_t = Check::Formulas)]
    check: Check,
    #[arg(long, value_enum, default_value_t = PairArg::Gf)]
    pair: PairArg,
    /// Monte Carlo states, search directions or audited points.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

/// `eval` output. Field names are part of the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvalReport {
    d: usize,
    lambdas: Vec<f64>,
    #[serde(rename = "G")]
    g: f64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "R")]
    r: f64,
    p: f64,
    n1: usize,
    nd: usize,
    n0: usize,
    cos_theta_g: f64,
    cos_theta_f: f64,
    cos_theta_r: f64,
    #[serde(rename = "C_GF")]
    c_gf: f64,
    #[serde(rename = "C_GR")]
    c_gr: f64,
    #[serde(rename = "C_GF_pp")]
    c_gf_pp: f64,
    #[serde(rename = "C_GF_mp")]
    c_gf_mp: f64,
    #[serde(rename = "C_GF_pm")]
    c_gf_pm: f64,
    #[serde(rename = "C_GF_mm")]
    c_gf_mm: f64,
    #[serde(rename = "C_GR_pp")]
    c_gr_pp: f64,
    #[serde(rename = "C_GR_mp")]
    c_gr_mp: f64,
    #[serde(rename = "C_GR_pm")]
    c_gr_pm: f64,
    #[serde(rename = "C_GR_mm")]
    c_gr_mm: f64,
    improvability_gf: f64,
    improvability_gr: f64,
}

fn eval_report(m: &Measurement) -> EvalReport {
    let t = m.metrics();
    let prof = m.profile();
    let a = angle_set(m);
    EvalReport {
        d: m.dim(),
        lambdas: m.lambdas().to_vec(),
        g: t.g,
        f: t.f,
        r: t.r,
        p: outcome_probability(m),
        n1: prof.n1,
        nd: prof.nd,
        n0: prof.n0,
        cos_theta_g: a.cos_theta_g,
        cos_theta_f: a.cos_theta_f,
        cos_theta_r: a.cos_theta_r,
        c_gf: a.c_gf,
        c_gr: a.c_gr,
        c_gf_pp: a.c_gf_pp,
        c_gf_mp: a.c_gf_mp,
        c_gf_pm: a.c_gf_pm,
        c_gf_mm: a.c_gf_mm,
        c_gr_pp: a.c_gr_pp,
        c_gr_mp: a.c_gr_mp,
        c_gr_pm: a.c_gr_pm,
        c_gr_mm: a.c_gr_mm,
        improvability_gf: improvability(m, Pair::Gf),
        improvability_gr: improvability(m, Pair::Gr),
    }
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn measurement(input: &Input, pair: Pair) -> Result<Measurement, Error> {
    let m = match (&input.lambda, &input.preset) {
        (Some(text), _) => canonicalize(&parse_lambdas(text)?, input.rescale)?,
        (None, Some(name)) => presets::find(pair, name)?.measurement(),
        (None, None) => {
            return Err(Error::Parse("one of --lambda or --preset is required".into()));
        }
    };
    if let Some(d) = input.d {
        if d != m.dim() {
            return Err(Error::Precondition(format!(
                "--d {d} does not match {} singular values",
                m.dim()
            )));
        }
    }
    Ok(m)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<(String, Option<PathBuf>), Error> {
    match command {
        Command::Eval(args) => {
            let m = measurement(&args.input, args.pair.into())?;
            let report = eval_report(&m);
            let text = match args.format {
                Format::Json => json(&report),
                Format::Csv => {
                    let value = serde_json::to_value(&report).expect("serializable");
                    let mut s = String::from("key,value\n");
                    for (k, v) in value.as_object().expect("object") {
                        let v = match v {
                            serde_json::Value::Array(xs) => xs
                                .iter()
                                .map(|x| num(x.as_f64().unwrap_or(f64::NAN)))
                                .collect::<Vec<_>>()
                                .join(" "),
                            serde_json::Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap()),
                            other => other.to_string(),
                        };
                        writeln!(s, "{k},{v}").unwrap();
                    }
                    s
                }
            };
            Ok((text, args.out))
        }
        Command::Scatter(args) => {
            let pair = args.pair.into();
            let m = measurement(&args.input, pair)?;
            let points = scatter_dataset(&m, pair, args.count, args.eps, args.seed)?;
            let text = match args.output.format {
                Format::Json => json(&points),
                Format::Csv => {
                    let mut s = String::from("index,dg,dd\n");
                    for (i, p) in points.iter().enumerate() {
                        writeln!(s, "{i},{},{}", num(p.dg), num(p.dd)).unwrap();
                    }
                    s
                }
            };
            Ok((text, args.output.out))
        }
        Command::Region(args) => {
            let pair = args.pair.into();
            let m = measurement(&args.input, pair)?;
            let arcs = gamma_boundary(&m, pair);
            let sigma = sigma_for(&m, pair, args.count);
            let text = match args.output.format {
                Format::Json => json(&serde_json::json!({ "arcs": arcs, "sigma": sigma })),
                Format::Csv => {
                    let mut s = String::from("segment,t,x,y\n");
                    for arc in &arcs {
                        for &(t, x, y) in &arc.points {
                            writeln!(s, "{},{},{},{}", arc.segment, num(t), num(x), num(y)).unwrap();
                        }
                    }
                    let n = sigma.points.len().max(2) - 1;
                    for (j, &(x, y)) in sigma.points.iter().enumerate() {
                        writeln!(s, "sigma,{},{},{}", num(j as f64 / n as f64), num(x), num(y)).unwrap();
                    }
                    s
                }
            };
            Ok((text, args.output.out))
        }
        Command::Range(args) => {
            let rows = coefficient_range_curves(args.d, args.pair.into(), args.count)?;
            let text = match args.output.format {
                Format::Json => json(&rows),
                Format::Csv => {
                    let mut s = String::from("family,param,G,C\n");
                    for r in &rows {
                        writeln!(s, "{},{},{},{}", r.family, num(r.param), num(r.g), num(r.c)).unwrap();
                    }
                    s
                }
            };
            Ok((text, args.output.out))
        }
        Command::Improve(args) => {
            let pair = args.pair.into();
            let m = measurement(&args.input, pair)?;
            let run = improve(&m, pair, args.eps, args.max_iter, args.conv_tol)?;
            let text = match args.output.format {
                Format::Json => json(&run),
                Format::Csv => {
                    let mut s = String::from("iter");
                    for i in 1..=m.dim() {
                        write!(s, ",lambda{i}").unwrap();
                    }
                    s.push_str(",G,D,improvability,nd,events\n");
                    for r in &run {
                        write!(s, "{}", r.iteration).unwrap();
                        for x in &r.lambdas {
                            write!(s, ",{}", num(*x)).unwrap();
                        }
                        let events: Vec<_> = r.events.iter().map(|e| e.token()).collect();
                        writeln!(
                            s,
                            ",{},{},{},{},{}",
                            num(r.metric_g),
                            num(r.metric_d),
                            num(r.improvability),
                            r.nd,
                            events.join("|")
                        )
                        .unwrap();
                    }
                    s
                }
            };
            Ok((text, args.output.out))
        }
        Command::Oracle(args) => {
            let pair = args.pair.into();
            let m = measurement(&args.input, pair)?;
            let text = oracle(&m, pair, &args)?;
            Ok((text, args.output.out))
        }
    }
}

fn oracle(m: &Measurement, pair: Pair, args: &OracleArgs) -> Result<String, Error> {
    let format = args.output.format;
    let mut s = String::new();
    match args.check {
        Check::Formulas => {
            let rows = haar_report(m, args.samples, args.seed)?;
            if format == Format::Json {
                return Ok(json(&rows));
            }
            s.push_str("quantity,closed_form,mc_value,std_error,z_score\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.quantity,
                    num(r.closed_form),
                    num(r.mc_value),
                    num(r.std_error),
                    num(r.z_score)
                )
                .unwrap();
            }
        }
        Check::Gradients => {
            let fd = finite_difference_gradients(m, args.eps)?;
            let an = gradients(m);
            let rows: Vec<_> = [("G", &an.grad_g, &fd[0]), ("F", &an.grad_f, &fd[1]), ("R", &an.grad_r, &fd[2])]
                .into_iter()
                .flat_map(|(q, a, f)| {
                    a.iter().zip(f.iter()).enumerate().map(move |(i, (x, y))| {
                        serde_json::json!({
                            "quantity": q, "index": i + 1, "analytic": x,
                            "finite_difference": y, "abs_error": (x - y).abs(),
                        })
                    })
                })
                .collect();
            if format == Format::Json {
                return Ok(json(&rows));
            }
            s.push_str("quantity,index,analytic,finite_difference,abs_error\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    r["quantity"].as_str().unwrap(),
                    r["index"],
                    num(r["analytic"].as_f64().unwrap()),
                    num(r["finite_difference"].as_f64().unwrap()),
                    num(r["abs_error"].as_f64().unwrap())
                )
                .unwrap();
            }
        }
        Check::Directions => {
            let dirs = usize::try_from(args.samples).unwrap_or(usize::MAX);
            let mut rows = Vec::new();
            let mut seed = args.seed;
            for target in [Target::G, Target::F, Target::R] {
                for sense in [Sense::Ascent, Sense::Descent] {
                    let r = brute_force_steepest(m, target, sense, dirs, seed)?;
                    seed = seed.wrapping_add(1);
                    rows.push((target, sense, r));
                }
            }
            if format == Format::Json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(t, sn, r)| serde_json::json!({ "target": t, "sense": sn, "search": r }))
                    .collect();
                return Ok(json(&v));
            }
            s.push_str("target,sense,analytic_change,best_sampled_change,alignment\n");
            for (t, sn, r) in &rows {
                let sense = match sn {
                    Sense::Ascent => "ascent",
                    Sense::Descent => "descent",
                };
                writeln!(
                    s,
                    "{t},{sense},{},{},{}",
                    num(r.analytic_change),
                    num(r.best_change),
                    num(r.alignment())
                )
                .unwrap();
            }
        }
        Check::Region => {
            let points = usize::try_from(args.samples).unwrap_or(usize::MAX);
            let r = region_membership_check(m, pair, points, args.seed)?;
            if format == Format::Json {
                return Ok(json(&r));
            }
            s.push_str("pair,points,outside_gamma,outside_sigma,vertices,vertices_outside_sigma,max_joint_gap\n");
            writeln!(
                s,
                "{pair},{},{},{},{},{},{}",
                r.points,
                r.outside_gamma,
                r.outside_sigma,
                r.vertices,
                r.vertices_outside_sigma,
                num(r.max_joint_gap)
            )
            .unwrap();
        }
    }
    Ok(s)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::RejectionBudget { .. } => EXIT_REJECTION,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok((text, None)) => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Ok((text, Some(path))) => match fs::write(&path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                ExitCode::FAILURE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use bcz_core::bcz::{r_minus_khat_bounds_check, theta_series, StepRecord};
use bcz_core::exact::{parse_rational, to_f64};
use bcz_core::excursion::{build_excursion_with, energy, energy_khat, BuildOptions};
use bcz_core::experiments::equidist::equidistribution_check;
use bcz_core::experiments::probe::{condition_probe_alpha, ProbeConfig};
use bcz_core::experiments::sweep::{
    run_sweep, Grid, OutputFormat, SweepConfig, SweepFunction, SweepMode,
};
use bcz_core::experiments::verify::{verify_all_with, VerifyOptions};
use bcz_core::functions::{g_lambda, khat_minus_three, PointFunction};
use bcz_core::{
    farey_length, farey_stream, iota_series, Error, FareyPoint, ModuliPoint, StepFunction,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bcz",
    version,
    about = "Exact experiments with the BCZ map on the Farey triangle"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Print JSON instead of plain text.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Print CSV where the command has tabular output.
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads.
    #[arg(long = "parallel", global = true, default_value_t = 1)]
    parallel: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// List F(n).
    Farey { n: u64 },
    /// Iterate T from (a_num/den, b_num/den).
    Orbit {
        a_num: i64,
        b_num: i64,
        den: i64,
        steps: u64,
    },
    /// θ series of the orbit of (1/n, 1).
    Theta { n: u64 },
    /// ι series of F(n).
    Iota { n: u64 },
    /// The excursion with endpoints a₀ = a, a_s = b.
    Excursion {
        a: String,
        b: String,
        /// Also check interior depth, the length bound and the coprime-pair count.
        #[arg(long)]
        verify_interior: bool,
    },
    /// E(f; a, b).
    Energy {
        a: String,
        b: String,
        /// `khat` (meaning k̂ − 3) or `g-lambda=<λ>`.
        #[arg(long, default_value = "khat")]
        function: String,
    },
    /// Exact per-n values and an exponent fit.
    Sweep {
        /// theta_sum, iota_sum, f_n or energy_diagonal.
        #[arg(long)]
        mode: String,
        /// `geom:<start>:<end>:<ratio>` or a comma-separated list.
        #[arg(long, default_value = "geom:32:2048:1.5")]
        grid: String,
        /// r, khat, g-lambda=<λ> or step:<spec>; defaults to the mode's own.
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave rows with smaller n out of the fit.
        #[arg(long, default_value_t = 30)]
        drop_below: u64,
    },
    /// Excursion averages of a step function against its exact integral.
    Equidist {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        /// `x0,x1,y0,y1,value;…`
        #[arg(long = "f")]
        f: String,
        #[arg(long, default_value = "64,128,256,512,1024")]
        grid: String,
    },
    /// Smallest α with |ζ_s| < C₁((a₀/a_s)^α + (a_s/a₀)^α) on sampled excursions.
    Probe {
        /// `khat` (meaning k̂ − 3) or `g-lambda=<λ>`.
        #[arg(long, default_value = "khat")]
        function: String,
        #[arg(long, default_value_t = 500)]
        samples: u64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 50)]
        max_den: i64,
    },
    /// Sample −1 <= R − k̂ < 2 and the per-case intervals.
    Bounds {
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Run the invariant suite up to n_max.
    Verify {
        #[arg(long)]
        n_max: u64,
        #[arg(long, default_value_t = 20_000)]
        random_points: u64,
        #[arg(long, hide = true, num_args = 0..=1, default_missing_value = "1", allow_negative_numbers = true)]
        mutate_itinerary: Option<i64>,
    },
}

enum Failure {
    Usage(String),
    Violation(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation { check, witness } => Failure::Violation(json!({
                "error": "invariant_violation",
                "check": check,
                "witness": witness,
            })),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    rayon_threads(cli.global.parallel);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(w)) => {
            eprintln!("{}", serde_json::to_string_pretty(&w).expect("json"));
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn rayon_threads(k: usize) {
    // Only fails if a global pool already exists, which never happens here.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(k.max(1))
        .build_global();
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn rational(s: &str) -> Result<bcz_core::Rational, Failure> {
    Ok(parse_rational(s)?)
}

fn point_function(spec: &str) -> Result<Box<dyn PointFunction>, Failure> {
    match spec.parse::<SweepFunction>()? {
        SweepFunction::Khat => Ok(Box::new(khat_minus_three)),
        SweepFunction::GLambda { lambda } => Ok(Box::new(g_lambda(lambda))),
        SweepFunction::Custom { step } => Ok(Box::new(step)),
        SweepFunction::R => Err(Failure::Usage(
            "R is not mean-zero; use khat or g-lambda=<λ>".into(),
        )),
    }
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Farey { n } => {
            let a_n = farey_length(*n)?.a_n;
            let terms: Vec<String> = farey_stream(*n)?
                .map(|f| format!("{}/{}", f.p, f.q))
                .collect();
            if g.json {
                print_json(&json!({ "n": n, "A_n": a_n, "terms": terms }));
            } else {
                println!("A_n = {a_n}");
                println!("{}", terms.join(" "));
            }
        }
        Command::Orbit {
            a_num,
            b_num,
            den,
            steps,
        } => {
            let mut p = FareyPoint::in_triangle(*a_num, *b_num, *den)?;
            let mut rows = Vec::new();
            for i in 0..=*steps {
                let rec = StepRecord::at(p);
                rows.push(json!({
                    "i": i,
                    "a": p.a().to_string(),
                    "b": p.b().to_string(),
                    "k": rec.k,
                    "k_t": rec.k_t,
                    "k_hat": rec.k_hat.to_rational().to_string(),
                    "R": rec.r.to_string(),
                }));
                p = bcz_core::bcz_step(&p)?.0;
            }
            emit_table(g, &rows, &["i", "a", "b", "k", "k_t", "k_hat", "R"]);
        }
        Command::Theta { n } => {
            let s = theta_series(*n)?;
            let terms: Vec<String> = s.terms.iter().map(|t| t.to_string()).collect();
            let summary = json!({
                "n": n,
                "A_n": s.len(),
                "abs_sum": s.abs_sum().to_string(),
                "terminal": s.last().map(|t| t.to_string()),
            });
            series_output(g, summary, &terms);
        }
        Command::Iota { n } => {
            let s = iota_series(*n)?;
            let terms: Vec<String> = s.terms.iter().map(|t| t.to_string()).collect();
            let summary = json!({
                "n": n,
                "A_n": s.len(),
                "abs_sum": s.abs_sum().to_string(),
                "terminal": s.last().map(|t| t.to_string()),
            });
            series_output(g, summary, &terms);
        }
        Command::Excursion {
            a,
            b,
            verify_interior,
        } => {
            let m = ModuliPoint::new(rational(a)?, rational(b)?)?;
            let opts = BuildOptions {
                verify: *verify_interior,
                ..BuildOptions::default()
            };
            let e = build_excursion_with(&m, &opts)?;
            let st = e.stats();
            let out = json!({
                "a": m.a().to_string(),
                "b": m.b().to_string(),
                "length": e.length(),
                "start": e.start().to_string(),
                "zeta_1": st.zeta_1.to_string(),
                "zeta_s_minus_1": st.zeta_s_minus_1.to_string(),
                "zeta_s": st.zeta_s.to_string(),
                "energy": st.energy.to_string(),
                "x_coordinates": e.points().filter(|p| p.len() <= 200).map(|p| {
                    p.iter().map(|q| q.a().to_string()).collect::<Vec<_>>()
                }),
            });
            if g.json {
                print_json(&out);
            } else {
                for (k, v) in out.as_object().expect("object") {
                    if !v.is_null() {
                        println!("{k}: {}", plain(v));
                    }
                }
            }
        }
        Command::Energy { a, b, function } => {
            let m = ModuliPoint::new(rational(a)?, rational(b)?)?;
            let value = if function == "khat" {
                energy_khat(&m)?.to_rational()
            } else {
                energy(point_function(function)?.as_ref(), &m)?
            };
            if g.json {
                print_json(
                    &json!({ "a": a, "b": b, "function": function, "energy": value.to_string() }),
                );
            } else {
                println!("{value}");
            }
        }
        Command::Sweep {
            mode,
            grid,
            function,
            out,
            drop_below,
        } => {
            let mode: SweepMode = mode.parse()?;
            let grid: Grid = grid.parse()?;
            let mut cfg = SweepConfig::new(mode, &grid)?;
            cfg.function = function.as_deref().map(str::parse).transpose()?;
            cfg.output_path = out.clone();
            cfg.format = if g.json {
                Some(OutputFormat::Json)
            } else if g.csv {
                Some(OutputFormat::Csv)
            } else {
                None
            };
            cfg.parallelism = g.parallel;
            cfg.drop_below = *drop_below;
            let report = run_sweep(&cfg)?;
            if out.is_none() {
                let text = if g.json {
                    report.to_json_string()?
                } else {
                    report.to_csv_string()?
                };
                print!("{text}");
            } else {
                match &report.fit {
                    Some(f) => println!(
                        "exponent {:.6}  intercept {:.6}  max_residual {:.3e}  ({} rows fitted)",
                        f.exponent,
                        f.intercept,
                        f.max_residual,
                        f.points.len()
                    ),
                    None => println!("fewer than two rows with n >= {drop_below}; no fit"),
                }
            }
        }
        Command::Equidist { p, q, f, grid } => {
            let step = StepFunction::parse(f)?;
            let ns = grid.parse::<Grid>()?.values()?;
            let report = equidistribution_check(&step, *p, *q, &ns)?;
            if g.json {
                print_json(&serde_json::to_value(&report).expect("json"));
            } else {
                println!(
                    "integral {} = {:.6}",
                    report.integral, report.integral_float
                );
                for r in &report.rows {
                    println!(
                        "n = {:>6}  value {:.6}  error {:.3e}",
                        r.n, r.value_float, r.error
                    );
                }
            }
        }
        Command::Probe {
            function,
            samples,
            c1,
            max_den,
        } => {
            let f = point_function(function)?;
            let cfg = ProbeConfig {
                seed: g.seed,
                max_den: *max_den,
                c1: *c1,
                ..ProbeConfig::default()
            };
            let r = condition_probe_alpha(f.as_ref(), *samples, &cfg)?;
            if g.json {
                print_json(&serde_json::to_value(&r).expect("json"));
            } else {
                println!(
                    "alpha {:.3}  C1 {}  violations {}  (samples {}, max ratio {:.1})",
                    r.alpha, r.c1, r.violations, r.samples, r.max_ratio
                );
            }
        }
        Command::Bounds { samples } => {
            let r = r_minus_khat_bounds_check(*samples, g.seed)?;
            if g.json {
                print_json(&serde_json::to_value(&r).expect("json"));
            } else {
                println!(
                    "R - khat in [{}, {}] over {} samples",
                    r.global_min, r.global_max, r.samples
                );
                for b in &r.buckets {
                    println!(
                        "(k, kT) = ({}, {}): {:>8} samples, [{:.4}, {:.4}]",
                        b.k,
                        b.k_t,
                        b.count,
                        to_f64(&b.min),
                        to_f64(&b.max)
                    );
                }
            }
        }
        Command::Verify {
            n_max,
            random_points,
            mutate_itinerary,
        } => {
            let opts = VerifyOptions {
                itinerary_offset: mutate_itinerary.unwrap_or(0),
                random_points: *random_points,
                seed: g.seed,
                ..VerifyOptions::new(*n_max)
            };
            let summary = verify_all_with(&opts)?;
            if g.json {
                print_json(&serde_json::to_value(&summary).expect("json"));
            } else {
                for c in &summary.checks {
                    let status = if c.passed() { "ok" } else { "FAILED" };
                    println!("{:<22} {:>8} cases  {status}", c.name, c.cases);
                }
            }
            if !summary.passed {
                let witnesses: Vec<Value> = summary
                    .failed_checks()
                    .map(|c| json!({ "check": c.name, "failures": c.failures, "witnesses": c.witnesses }))
                    .collect();
                return Err(Failure::Violation(
                    json!({ "error": "invariant_violation", "failed": witnesses }),
                ));
            }
        }
    }
    Ok(())
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(plain).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

fn series_output(g: &Global, mut summary: Value, terms: &[String]) {
    if g.json {
        summary["terms"] = json!(terms);
        print_json(&summary);
    } else {
        for (k, v) in summary.as_object().expect("object") {
            println!("{k}: {}", plain(v));
        }
        println!("{}", terms.join(" "));
    }
}

fn emit_table(g: &Global, rows: &[Value], columns: &[&str]) {
    if g.json {
        print_json(&json!(rows));
        return;
    }
    let sep = if g.csv { "," } else { "\t" };
    println!("{}", columns.join(sep));
    for r in rows {
        let cells: Vec<String> = columns.iter().map(|c| plain(&r[*c])).collect();
        println!("{}", cells.join(sep));
    }
}

//! `mtoi` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a scan or check finds an invariant
//! violation, 2 on usage or configuration errors. Reports go to standard
//! output as JSON with an embedded run manifest; CSV goes to `--out` when
//! given.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mtoi_core::bounds::{dof_sweep, gap_report, geometric_powers};
use mtoi_core::io::{parse_config, report_json, sim_layer_csv, sweep_csv, RunManifest};
use mtoi_core::lattice::{
    exact_leakage, exhaustive_carry_check, NestedLatticePair, Observation, RationalDithers,
    DEFAULT_MAX_STATES,
};
use mtoi_core::layering::{check_alignment, LayerPlan};
use mtoi_core::rng::{stream_rng, DEFAULT_SEED};
use mtoi_core::scan::{gap_scan, GapCase};
use mtoi_core::sim::{end_to_end_report, SimOptions, DEFAULT_MARGIN};
use mtoi_core::{ChannelConfig, Exec, GaussianNoiseSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mtoi",
    version,
    about = "Secrecy bounds and lattice simulation for the many-to-one interference channel"
)]
struct Cli {
    /// Record the wall-clock time in the manifest. Breaks byte-identical
    /// reruns.
    #[arg(long, global = true)]
    timestamp: bool,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form lower and upper bounds for one configuration.
    Bounds {
        /// Config file, or inline JSON.
        #[arg(short, long)]
        config: String,
    },
    /// Layer delimiters and the per-layer power matrix.
    Layers {
        #[arg(short, long)]
        config: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Bounds along a common-power sweep `P = base^e`.
    Sweep {
        #[arg(short, long)]
        config: String,
        #[arg(long, default_value_t = 2.0)]
        base: f64,
        #[arg(long, default_value_t = 10.0)]
        exp_min: f64,
        #[arg(long, default_value_t = 40.0)]
        exp_max: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Write the CSV here and print a slope summary instead.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst constant-gap excess over random configurations.
    GapScan {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        case: u8,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short = 'K', long = "K", default_value_t = 3)]
        k: usize,
    },
    /// Exact leakage of the aligned lattice sum by enumeration.
    Leakage {
        #[arg(long)]
        q: u32,
        #[arg(short = 'N', long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(short = 'K', long = "K", default_value_t = 3)]
        k: usize,
        /// Dithers are drawn on the grid `(1/D) Z^N`; 1 gives integer dithers.
        #[arg(long, default_value_t = 1)]
        dither_grid: i64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: u128,
    },
    /// Monte Carlo run of the layered scheme at every receiver.
    Simulate {
        #[arg(short, long)]
        config: String,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        shards: usize,
        #[arg(short = 'N', long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_variance: f64,
        /// Per-layer CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status with the text destined for standard output and standard
/// error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Outcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

struct Ctx {
    timestamp: bool,
    exec: Exec,
}

impl Ctx {
    fn manifest<T: Serialize>(&self, command: &str, input: &T, seed: Option<u64>) -> RunManifest {
        let m = RunManifest::new(command, input, seed);
        if self.timestamp {
            m.stamped()
        } else {
            m
        }
    }
}

fn load(source: &str) -> Result<ChannelConfig, Outcome> {
    parse_config(source).map_err(Outcome::usage)
}

fn write_out(path: &PathBuf, text: &str) -> Result<(), Outcome> {
    std::fs::write(path, text)
        .map_err(|e| Outcome::usage(format!("cannot write {}: {e}", path.display())))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(text)
            };
        }
    };
    let ctx = Ctx {
        timestamp: cli.timestamp,
        exec: if cli.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        },
    };
    match dispatch(&ctx, cli.command) {
        Ok(o) | Err(o) => o,
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<Outcome, Outcome> {
    match command {
        Command::Bounds { config } => {
            let c = load(&config)?;
            let report = gap_report(&c);
            Ok(Outcome::ok(report_json(
                &report,
                &ctx.manifest("bounds", &c, None),
            )))
        }
        Command::Layers { config, format } => {
            let c = load(&config)?;
            let plan = LayerPlan::new(&c);
            let alignment = check_alignment(&plan);
            let code = if alignment.aligned && alignment.feasible {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            };
            let stdout = match format {
                Format::Table => plan.to_table(),
                Format::Json => {
                    let payload = json!({ "plan": plan.to_json(), "alignment": alignment });
                    report_json(&payload, &ctx.manifest("layers", &c, None))
                }
            };
            Ok(Outcome {
                code,
                stdout,
                stderr: String::new(),
            })
        }
        Command::Sweep {
            config,
            base,
            exp_min,
            exp_max,
            step,
            out,
        } => {
            let c = load(&config)?;
            let powers = geometric_powers(base, exp_min, exp_max, step);
            let est = dof_sweep(&c, &powers).map_err(Outcome::usage)?;
            let csv = sweep_csv(&est.points);
            match out {
                None => Ok(Outcome::ok(csv)),
                Some(path) => {
                    write_out(&path, &csv)?;
                    let payload = json!({
                        "points": est.points.len(),
                        "fit_points": est.fit_points,
                        "lower_slope": est.lower_slope,
                        "upper_slope": est.upper_slope,
                    });
                    let input = json!({ "config": c, "base": base, "exp_min": exp_min, "exp_max": exp_max, "step": step });
                    Ok(Outcome::ok(report_json(
                        &payload,
                        &ctx.manifest("sweep", &input, None),
                    )))
                }
            }
        }
        Command::GapScan {
            case,
            trials,
            seed,
            k,
        } => {
            let case =
                GapCase::from_number(case).ok_or_else(|| Outcome::usage("case must be 1 or 2"))?;
            if k < 3 {
                return Err(Outcome::usage(format!(
                    "K = {k} is not supported, need K >= 3"
                )));
            }
            let report = gap_scan(case, k, trials, seed, ctx.exec);
            let input = json!({ "case": case, "K": k, "trials": trials });
            let code = if report.violations == 0 {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            };
            Ok(Outcome {
                code,
                stdout: report_json(&report, &ctx.manifest("gap-scan", &input, Some(seed))),
                stderr: String::new(),
            })
        }
        Command::Leakage {
            q,
            dim,
            k,
            dither_grid,
            seed,
            max_states,
        } => {
            let pair = NestedLatticePair::new(dim, q).map_err(Outcome::usage)?;
            if dither_grid < 1 {
                return Err(Outcome::usage("dither grid must be at least 1"));
            }
            let dithers = RationalDithers::random(&pair, k, dither_grid, &mut stream_rng(seed, 0));
            let sum = exact_leakage(&pair, k, &dithers, Observation::Sum, max_states, ctx.exec)
                .map_err(Outcome::usage)?;
            let modsum = exact_leakage(
                &pair,
                k,
                &dithers,
                Observation::ModSum,
                max_states,
                ctx.exec,
            )
            .map_err(Outcome::usage)?;
            let carry =
                exhaustive_carry_check(&pair, k, max_states, ctx.exec).map_err(Outcome::usage)?;
            let ok = sum.leakage_bits <= sum.bound_bits + 1e-12
                && modsum.leakage_bits.abs() <= 1e-12
                && carry.exact == carry.tuples
                && carry.t_max <= carry.t_bound;
            let payload = json!({
                "leakage_bits": sum.leakage_bits,
                "bound_bits": sum.bound_bits,
                "mod_sum_leakage_bits": modsum.leakage_bits,
                "T_max": carry.t_max,
                "T_bound": carry.t_bound,
                "carry_exact": carry.exact,
                "states": sum.states,
                "dithers": dithers,
            });
            let input = json!({ "q": q, "N": dim, "K": k, "dither_grid": dither_grid });
            Ok(Outcome {
                code: if ok { EXIT_OK } else { EXIT_VIOLATION },
                stdout: report_json(&payload, &ctx.manifest("leakage", &input, Some(seed))),
                stderr: String::new(),
            })
        }
        Command::Simulate {
            config,
            margin,
            trials,
            seed,
            shards,
            dim,
            noise_variance,
            out,
        } => {
            let c = load(&config)?;
            let noise = GaussianNoiseSpec::new(noise_variance).ok_or_else(|| {
                Outcome::usage(format!(
                    "noise variance {noise_variance} must be finite and non-negative"
                ))
            })?;
            let opts = SimOptions {
                margin,
                trials,
                seed,
                shards,
                dim,
                noise,
                exec: ctx.exec,
            };
            let result = end_to_end_report(&c, &opts).map_err(Outcome::usage)?;
            if let Some(path) = &out {
                write_out(path, &sim_layer_csv(&result))?;
            }
            let input = json!({ "config": c, "margin": margin, "trials": trials, "shards": shards, "N": dim, "noise_variance": noise_variance });
            Ok(Outcome::ok(report_json(
                &result,
                &ctx.manifest("simulate", &input, Some(seed)),
            )))
        }
    }
}

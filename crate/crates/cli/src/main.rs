use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use rscavity::error::Error;
use rscavity_cli::{commands, selftest, with_thread_pool};

/// Replica-symmetric analysis of sparse random k-SAT: thresholds, population
/// dynamics, exact counting and cross-validation experiments.
#[derive(Parser)]
#[command(name = "rscavity", version, about)]
struct Cli {
    /// Worker threads (also RSCAVITY_THREADS); results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PopArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Population size.
    #[arg(long, default_value_t = 1_000_000)]
    pop: usize,
    #[arg(long, default_value_t = 25)]
    iters: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solved thresholds for one or more clause widths.
    Thresholds {
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Inclusive range `lo..hi` overriding --k.
        #[arg(long, value_parser = parse_range)]
        all_k: Option<(usize, usize)>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// The k = 2..5 threshold table at four decimals.
    Table1,
    /// Bethe free entropy against the moment bounds on a density grid.
    Figure1 {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        d_min: f64,
        #[arg(long, default_value_t = 1.2)]
        d_max: f64,
        #[arg(long, default_value_t = 0.2)]
        step: f64,
        #[arg(long, default_value_t = 100_000)]
        pop: usize,
        #[arg(long, default_value_t = 25)]
        iters: u32,
        #[arg(long, default_value_t = 100_000)]
        mc: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Iterate the BP operator and dump the final population (raw f64 +
    /// JSON sidecar next to it).
    Popdyn {
        #[command(flatten)]
        args: PopArgs,
    },
    /// Bethe estimate from a dumped population file.
    Bethe {
        /// Raw little-endian f64 population dump.
        #[arg(long)]
        pop: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 1_000_000)]
        mc: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Exact satisfying-assignment count of a DIMACS file.
    Count {
        #[arg(long)]
        cnf: PathBuf,
        /// Deduplicate repeated literals instead of rejecting the clause.
        #[arg(long)]
        lenient: bool,
    },
    /// Exact-counting check of the free-entropy prediction with a
    /// finite-size trend.
    Verify {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 20)]
        n: u32,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        pop: usize,
        #[arg(long, default_value_t = 25)]
        iters: u32,
        #[arg(long, default_value_t = 100_000)]
        mc: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Pure literal pursuit tools.
    #[command(subcommand)]
    Pulp(PulpCommand),
    /// Tree experiments.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Gibbs-uniqueness experiments.
    #[command(subcommand)]
    Uniq(UniqCommand),
    /// Aizenman-Sims-Starr increment estimate from coupled exact counts.
    Increment {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 18)]
        n: u32,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Run every invariant suite; exit code 4 on failure.
    Selftest {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PulpCommand {
    /// Run the closure algorithm on a DIMACS file with assumed literals.
    Run {
        #[arg(long)]
        cnf: PathBuf,
        /// Comma-separated DIMACS literals, e.g. "-1,4".
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        assume: String,
    },
    /// Literal heights of every variable.
    Heights {
        #[arg(long)]
        cnf: PathBuf,
    },
    /// Monte Carlo height-tail against the analytic iterate.
    Tail {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 4)]
        h_max: u32,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum TreeCommand {
    /// BP-vs-exact root marginal on one sampled tree.
    Marginal {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Mean gap between conditioned and unconditioned root marginals per
    /// depth.
    BoundaryGap {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum UniqCommand {
    /// Empirical contraction ratio of the typed operator under coupled
    /// randomness.
    Contraction {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 100_000)]
        pop: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected lo..hi")?;
    let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err("empty range".into());
    }
    Ok((lo, hi))
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) => 2,
        Error::ResourceCap { .. } => 3,
        Error::Unsatisfiable | Error::Internal(_) => 4,
    }
}

fn emit(out: Option<&PathBuf>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> rscavity::Result<u8> {
    match &cli.command {
        Command::Thresholds { k, all_k, format } => {
            let ks: Vec<usize> = match all_k {
                Some((lo, hi)) => (*lo..=*hi).collect(),
                None => vec![*k],
            };
            let payload = match format.as_str() {
                "csv" => commands::thresholds_csv(&ks)?,
                "json" => commands::thresholds_json(&ks)?,
                other => return Err(Error::invalid(format!("unknown format {other:?}"))),
            };
            emit(cli.out.as_ref(), &payload)?;
        }
        Command::Table1 => emit(cli.out.as_ref(), &commands::table1_csv()?)?,
        Command::Figure1 {
            k,
            d_min,
            d_max,
            step,
            pop,
            iters,
            mc,
            seed,
        } => {
            let payload =
                commands::figure1_csv(*k, *d_min, *d_max, *step, *pop, *iters, *mc, *seed)?;
            emit(cli.out.as_ref(), &payload)?;
        }
        Command::Popdyn { args } => {
            let (raw, sidecar) =
                commands::popdyn_run(args.d, args.k, args.pop, args.iters, args.seed)?;
            let path = cli
                .out
                .clone()
                .ok_or_else(|| Error::invalid("popdyn needs --out <file> for the raw dump"))?;
            std::fs::write(&path, &raw)?;
            let sidecar_path = path.with_extension("json");
            std::fs::write(&sidecar_path, sidecar)?;
            eprintln!(
                "wrote {} samples to {} (sidecar {})",
                args.pop,
                path.display(),
                sidecar_path.display()
            );
        }
        Command::Bethe {
            pop,
            k,
            d,
            mc,
            seed,
        } => {
            let payload = commands::bethe_from_file(pop, *d, *k, *mc, *seed)?;
            emit(cli.out.as_ref(), &payload)?;
        }
        Command::Count { cnf, lenient } => {
            emit(cli.out.as_ref(), &commands::count_cmd(cnf, !lenient)?)?;
        }
        Command::Verify {
            k,
            d,
            n,
            samples,
            pop,
            iters,
            mc,
            seed,
        } => {
            let payload = commands::verify_cmd(*d, *k, *n, *samples, *pop, *iters, *mc, *seed)?;
            emit(cli.out.as_ref(), &payload)?;
        }
        Command::Pulp(sub) => match sub {
            PulpCommand::Run { cnf, assume } => {
                emit(cli.out.as_ref(), &commands::pulp_run_cmd(cnf, assume)?)?;
            }
            PulpCommand::Heights { cnf } => {
                emit(cli.out.as_ref(), &commands::pulp_heights_cmd(cnf)?)?;
            }
            PulpCommand::Tail {
                k,
                d,
                h_max,
                depth,
                trials,
                seed,
            } => {
                let payload = commands::pulp_tail_csv(*d, *k, *h_max, *depth, *trials, *seed)?;
                emit(cli.out.as_ref(), &payload)?;
            }
        },
        Command::Tree(sub) => match sub {
            TreeCommand::Marginal { k, d, depth, seed } => {
                emit(
                    cli.out.as_ref(),
                    &commands::tree_marginal_cmd(*d, *k, *depth, *seed)?,
                )?;
            }
            TreeCommand::BoundaryGap {
                k,
                d,
                depth,
                trials,
                seed,
            } => {
                let payload = commands::boundary_gap_csv(*d, *k, *depth, *trials, *seed)?;
                emit(cli.out.as_ref(), &payload)?;
            }
        },
        Command::Uniq(UniqCommand::Contraction {
            k,
            d,
            pop,
            trials,
            seed,
        }) => {
            let payload = commands::contraction_cmd(*d, *k, *pop, *trials, *seed)?;
            emit(cli.out.as_ref(), &payload)?;
        }
        Command::Increment {
            k,
            d,
            n,
            samples,
            seed,
        } => {
            let payload = commands::increment_cmd(*d, *k, *n, *samples, *seed)?;
            emit(cli.out.as_ref(), &payload)?;
        }
        Command::Selftest { seed } => {
            let (report, ok) = selftest::selftest_report(*seed)?;
            emit(cli.out.as_ref(), &report)?;
            if !ok {
                return Ok(4);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("RSCAVITY_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    let started = Instant::now();
    let result = with_thread_pool(threads, || run(&cli));
    eprintln!("wall time: {} ms", started.elapsed().as_millis());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

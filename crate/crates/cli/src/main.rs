use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bisp_core::analysis::{extract_system, MetricsAccumulator};
use bisp_core::bench::{self, BenchReport, CHECK_COUNT};
use bisp_core::explicit_system::{extend_system, verify_system, ExplicitSystem, DEFAULT_TOL};
use bisp_core::graphs::{
    gen_complete, gen_erdos_renyi, gen_powerlaw, gen_star, read_assignments, write_assignments,
    write_edge_list, AssignmentReader, EdgeReader,
};
use bisp_core::layered_sampler::{plan_layout, Base};
use bisp_core::partitioner::{
    assign_parallel, BispPartitioner, EdgePartitioner, GridPartitioner, Mode, PartitionError,
    RandomPartitioner,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Streaming vertex-cut edge partitioning.
#[derive(Debug, Parser)]
#[command(name = "bisp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Show the layout used for N partitions.
    Plan {
        #[arg(long)]
        partitions: usize,
        /// Emit the layout as JSON.
        #[arg(long)]
        json: bool,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Write a synthetic edge list.
    Gen {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        nodes: u64,
        /// Edge count (er and powerlaw).
        #[arg(long)]
        edges: Option<u64>,
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        /// Power-law exponent.
        #[arg(long, default_value_t = 2.2)]
        alpha: f64,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Assign each edge of an edge list to a partition (TSV: src, dst, partition).
    Partition {
        #[arg(long)]
        partitions: usize,
        #[arg(long, value_enum, default_value_t = Algo::Bisp)]
        algo: Algo,
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        #[arg(long, default_value = "hash")]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value = "-")]
        input: String,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Sizes, imbalance and replication factors of a partitioned edge list.
    Metrics {
        #[arg(long)]
        partitions: usize,
        #[arg(long, default_value = "-")]
        input: String,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Recover the explicit system behind a partitioning of the complete graph.
    Extract {
        #[arg(long)]
        nodes: u64,
        #[arg(long)]
        partitions: usize,
        #[arg(long, default_value = "-")]
        input: String,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Explicit systems as JSON.
    System {
        #[command(subcommand)]
        action: SystemAction,
    },
    /// Run the experiment grid and emit one JSON report.
    Bench {
        /// Run only the given check (repeatable).
        #[arg(long = "check", value_parser = clap::value_parser!(u8).range(1..=CHECK_COUNT as i64))]
        checks: Vec<u8>,
        #[arg(long, default_value = "-")]
        output: String,
    },
}

#[derive(Debug, Subcommand)]
enum SystemAction {
    /// Report validity, intersection and balance.
    Verify {
        #[arg(long, default_value = "-")]
        input: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// The explicit system of the layout for N partitions.
    Materialize {
        #[arg(long)]
        partitions: usize,
        #[arg(long, default_value = "-")]
        output: String,
    },
    /// Add a block of new elements.
    Extend {
        #[arg(long)]
        block: usize,
        #[arg(long, default_value = "-")]
        input: String,
        #[arg(long, default_value = "-")]
        output: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Complete,
    Er,
    Powerlaw,
    Star,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Bisp,
    Random,
    Grid,
}

/// Bad flags or flag combinations; exits with 1 instead of 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("{s:?} is not a decimal or 0x-prefixed hex u64"))
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| usage(format!("{what} needs an explicit --seed")))
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>> {
    if path == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file = File::open(path).with_context(|| format!("opening {path}"))?;
    Ok(Box::new(BufReader::new(file)))
}

fn open_output(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).with_context(|| format!("creating {path}"))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn write_json<T: serde::Serialize>(path: &str, value: &T) -> Result<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_system(path: &str) -> Result<ExplicitSystem> {
    let system = serde_json::from_reader(open_input(path)?).context("reading system JSON")?;
    Ok(system)
}

fn partitioner(
    partitions: usize,
    algo: Algo,
    seed: Option<u64>,
    mode: Mode,
) -> Result<Box<dyn EdgePartitioner>> {
    if partitions == 0 {
        return Err(usage("--partitions must be positive"));
    }
    let as_usage = |e: PartitionError| usage(e.to_string());
    Ok(match algo {
        Algo::Bisp => {
            let layout = plan_layout(partitions)?;
            Box::new(BispPartitioner::new(
                layout,
                require_seed(seed, "bisp")?,
                mode,
            ))
        }
        Algo::Random => Box::new(
            RandomPartitioner::new(partitions, require_seed(seed, "random")?).map_err(as_usage)?,
        ),
        Algo::Grid => Box::new(
            GridPartitioner::new(partitions, require_seed(seed, "grid")?).map_err(as_usage)?,
        ),
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Plan {
            partitions,
            json,
            output,
        } => {
            if partitions == 0 {
                return Err(usage("--partitions must be positive"));
            }
            let layout = plan_layout(partitions)?;
            if json {
                return write_json(&output, &layout.to_json());
            }
            let base = match layout.base() {
                Base::Plane { q } => format!("plane q={q} ({} elements)", layout.n0()),
                Base::Cyclic { n0, t } => format!("cyclic intervals of {t} on {n0}"),
            };
            let mut out = open_output(&output)?;
            writeln!(out, "partitions:  {partitions}")?;
            writeln!(out, "base:        {base}")?;
            writeln!(out, "blocks:      {:?}", layout.blocks())?;
            writeln!(out, "cardinality: {}", layout.cardinality())?;
            out.flush()?;
        }
        Command::Gen {
            model,
            nodes,
            edges,
            seed,
            alpha,
            output,
        } => {
            let need_edges = || edges.ok_or_else(|| usage("this model needs --edges"));
            let out = open_output(&output)?;
            match model {
                Model::Complete => write_edge_list(out, gen_complete(nodes))?,
                Model::Star => write_edge_list(out, gen_star(nodes))?,
                Model::Er => {
                    let (m, seed) = (need_edges()?, require_seed(seed, "er")?);
                    if nodes == 0 {
                        return Err(usage("--nodes must be positive"));
                    }
                    write_edge_list(out, gen_erdos_renyi(nodes, m, seed))?
                }
                Model::Powerlaw => {
                    let (m, seed) = (need_edges()?, require_seed(seed, "powerlaw")?);
                    if nodes == 0 || alpha <= 1.0 {
                        return Err(usage("powerlaw needs --nodes > 0 and --alpha > 1"));
                    }
                    write_edge_list(out, gen_powerlaw(nodes, m, alpha, seed))?
                }
            }
        }
        Command::Partition {
            partitions,
            algo,
            seed,
            mode,
            threads,
            input,
            output,
        } => {
            let p = partitioner(partitions, algo, seed, mode)?;
            let reader = EdgeReader::new(open_input(&input)?);
            let mut out = open_output(&output)?;
            if threads <= 1 {
                for (i, edge) in reader.enumerate() {
                    let a = p.assignment(i as u64, edge?);
                    writeln!(out, "{}\t{}\t{}", a.src, a.dst, a.partition)?;
                }
                out.flush()?;
            } else {
                let edges = reader.collect::<Result<Vec<_>, _>>()?;
                write_assignments(out, assign_parallel(p.as_ref(), &edges, threads))?;
            }
        }
        Command::Metrics {
            partitions,
            input,
            output,
        } => {
            let mut acc = MetricsAccumulator::new(partitions).map_err(|e| usage(e.to_string()))?;
            for a in AssignmentReader::new(open_input(&input)?) {
                acc.add(&a?)?;
            }
            write_json(&output, &acc.finish()?.to_json())?;
        }
        Command::Extract {
            nodes,
            partitions,
            input,
            output,
        } => {
            if partitions == 0 {
                return Err(usage("--partitions must be positive"));
            }
            let assignments = read_assignments(open_input(&input)?)?;
            let (system, report) = extract_system(&assignments, nodes, partitions)?;
            eprintln!(
                "extracted {} sets: intersecting {}, cardinality {}, epsilon {:.6}",
                system.family().len(),
                report.intersecting,
                report.cardinality,
                report.epsilon
            );
            write_json(&output, &system)?;
        }
        Command::System { action } => match action {
            SystemAction::Verify { input, tol, output } => {
                if tol.is_nan() || tol < 0.0 {
                    return Err(usage("--tol must be nonnegative"));
                }
                let system = read_system(&input)?;
                write_json(&output, &verify_system(&system, tol)?)?;
            }
            SystemAction::Materialize { partitions, output } => {
                if partitions == 0 {
                    return Err(usage("--partitions must be positive"));
                }
                write_json(&output, &plan_layout(partitions)?.materialize()?)?;
            }
            SystemAction::Extend {
                block,
                input,
                output,
            } => {
                let system = read_system(&input)?;
                write_json(&output, &extend_system(&system, block)?)?;
            }
        },
        Command::Bench { checks, output } => {
            let report = if checks.is_empty() {
                bench::run_all()
            } else {
                BenchReport {
                    checks: checks
                        .iter()
                        .map(|&id| bench::run_check(id as usize))
                        .collect(),
                    cardinality_table: bench::cardinality_table(1000),
                }
            };
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                eprintln!(
                    "{:>2} {status} [{:.2}s] {}: {}",
                    c.id, c.seconds, c.name, c.detail
                );
            }
            write_json(&output, &report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_accept_decimal_and_hex() {
        assert_eq!(parse_seed("42"), Ok(42));
        assert_eq!(parse_seed("0xff"), Ok(255));
        assert_eq!(parse_seed("0XFF"), Ok(255));
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0xzz").is_err());
    }

    #[test]
    fn command_line_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "bisp",
            "partition",
            "--partitions",
            "7",
            "--seed",
            "0x10",
            "--mode",
            "rng",
        ])
        .unwrap();
        match cli.command {
            Command::Partition {
                seed,
                mode,
                threads,
                ..
            } => {
                assert_eq!((seed, mode, threads), (Some(16), Mode::Rng, 1));
            }
            other => panic!("{other:?}"),
        }
        assert!(
            Cli::try_parse_from(["bisp", "partition", "--partitions", "7", "--mode", "fast"])
                .is_err()
        );
    }
}

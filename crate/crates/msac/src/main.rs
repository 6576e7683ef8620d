//! Command-line front end: encode/decode against a side-information file,
//! sample synthetic sources, and run the rate benchmarks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use msac::analysis::{reports_to_csv, reports_to_table, run_rate_benchmark, RateReport};
use msac::container::{
    decode, encode_auto, encode_general, encode_pure, general_description_of, pure_description_of,
    Message, Mode,
};
use msac::seqcore::BitSeq;
use msac::simulate::{generate, SourceParams};
use msac::Error;

#[derive(Parser)]
#[command(
    name = "msac",
    about = "Compresses a binary sequence given a related, mis-synchronized reference sequence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a source file against a side-information file
    Encode {
        /// Source sequence (raw bit file)
        x: PathBuf,
        /// Side-information sequence (raw bit file)
        y: PathBuf,
        /// Output message file
        out: PathBuf,
        /// Codec mode
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Print the decoded edit description and size breakdown
        #[arg(long, short)]
        verbose: bool,
    },
    /// Decode a message file using the side-information
    Decode {
        /// Message file
        msg: PathBuf,
        /// Side-information sequence (raw bit file)
        y: PathBuf,
        /// Output source file
        out: PathBuf,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Sample a synthetic (source, side-information) pair
    Simulate(SimulateArgs),
    /// Rate benchmarks
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Pure,
    General,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output prefix; writes PREFIX.x, PREFIX.y and PREFIX.params
    prefix: PathBuf,
    /// Length of the latent common sequence
    #[arg(long)]
    n: usize,
    /// Bias of the latent Bernoulli source
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Substitution (bit-flip) probability
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    /// Deletion probability on the source side
    #[arg(long, default_value_t = 0.0)]
    dx: f64,
    /// Deletion probability on the side-information side
    #[arg(long, default_value_t = 0.0)]
    dy: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Compare description methods at one operating point
    Compare {
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.01)]
        d: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
    /// Sweep the deletion rate
    Sweep {
        /// Comma-separated deletion rates
        #[arg(long, value_delimiter = ',', default_value = "0.005,0.01,0.02")]
        d: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Corruption { .. }
                | Error::InvalidParams(_)
                | Error::NotSubsequence
                | Error::LengthMismatch { .. }
                | Error::CountExceedsExtent { .. }
                | Error::Io(_) => 3,
                _ => 4,
            };
            ExitCode::from(code)
        }
    }
}

fn read_bits(path: &Path) -> msac::Result<BitSeq> {
    let mut r = BufReader::new(File::open(path)?);
    BitSeq::read_raw(&mut r)
}

fn write_bits(path: &Path, bits: &BitSeq) -> msac::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    bits.write_raw(&mut w)?;
    Ok(w.flush()?)
}

fn print_description(m: &Message, y: &BitSeq) -> msac::Result<()> {
    eprintln!(
        "mode: {}",
        match m.mode {
            Mode::Pure => "pure-deletion",
            Mode::General => "general",
        }
    );
    eprintln!("source length: {} bits", m.x_length);
    eprintln!("payload: {} bits", m.payload_bits());
    match m.mode {
        Mode::Pure => {
            let desc = pure_description_of(m, y)?;
            eprintln!("deletions: {}", desc.total_deletions());
            for (l_minus_1, list) in desc.counts.iter().enumerate() {
                let nonzero = list.iter().filter(|&&v| v > 0).count();
                eprintln!(
                    "  extent {}: {} runs, {} with deletions",
                    l_minus_1 + 1,
                    list.len(),
                    nonzero
                );
            }
        }
        Mode::General => {
            let g = general_description_of(m, y)?;
            eprintln!(
                "insertions: {} ({} run-extending, {} run-breaking, {} in bursts)",
                g.ins.total_insertions(),
                g.ins.extend_counts.iter().map(|&c| c as usize).sum::<usize>(),
                g.ins.break_flags.iter().filter(|&&f| f).count(),
                g.ins.bursts.iter().map(|b| b.content.len()).sum::<usize>()
            );
            eprintln!("substitutions: {}", g.sub.mask.count_ones());
            eprintln!("deletions: {}", g.del.total_deletions());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> msac::Result<()> {
    match cli.command {
        Command::Encode {
            x,
            y,
            out,
            mode,
            verbose,
        } => {
            let x = read_bits(&x)?;
            let y = read_bits(&y)?;
            let m = match mode {
                ModeArg::Auto => encode_auto(&x, &y)?,
                ModeArg::Pure => encode_pure(&x, &y)?,
                ModeArg::General => encode_general(&x, &y)?,
            };
            std::fs::write(&out, m.to_bytes())?;
            if verbose {
                print_description(&m, &y)?;
            }
            Ok(())
        }
        Command::Decode {
            msg,
            y,
            out,
            verbose,
        } => {
            let bytes = std::fs::read(&msg)?;
            let y = read_bits(&y)?;
            let m = Message::from_bytes(&bytes)?;
            let x = decode(&m, &y)?;
            write_bits(&out, &x)?;
            if verbose {
                print_description(&m, &y)?;
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let params = SourceParams {
                n: args.n,
                p: args.p,
                q: args.q,
                d_x: args.dx,
                d_y: args.dy,
                seed: args.seed,
            };
            let inst = generate(&params)?;
            write_bits(&args.prefix.with_extension("x"), &inst.x)?;
            write_bits(&args.prefix.with_extension("y"), &inst.y)?;
            let mut f = BufWriter::new(File::create(args.prefix.with_extension("params"))?);
            writeln!(f, "n={}", params.n)?;
            writeln!(f, "p={}", params.p)?;
            writeln!(f, "q={}", params.q)?;
            writeln!(f, "dx={}", params.d_x)?;
            writeln!(f, "dy={}", params.d_y)?;
            writeln!(f, "seed={}", params.seed)?;
            writeln!(f, "x_len={}", inst.x.len())?;
            writeln!(f, "y_len={}", inst.y.len())?;
            f.flush()?;
            Ok(())
        }
        Command::Bench(bench) => {
            let (reports, format) = match bench {
                BenchCommand::Compare {
                    n,
                    p,
                    d,
                    trials,
                    seed,
                    format,
                } => (vec![run_rate_benchmark(n, p, d, trials, seed)?], format),
                BenchCommand::Sweep {
                    d,
                    n,
                    p,
                    trials,
                    seed,
                    format,
                } => {
                    let mut reports: Vec<RateReport> = Vec::new();
                    for (i, &di) in d.iter().enumerate() {
                        reports.push(run_rate_benchmark(
                            n,
                            p,
                            di,
                            trials,
                            seed.wrapping_add(1000 * i as u64),
                        )?);
                    }
                    (reports, format)
                }
            };
            match format {
                FormatArg::Table => print!("{}", reports_to_table(&reports)),
                FormatArg::Csv => print!("{}", reports_to_csv(&reports)),
            }
            Ok(())
        }
    }
}

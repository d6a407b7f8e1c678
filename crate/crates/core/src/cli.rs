//! Command-line front end. `run` returns the process exit code.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{read_csv, render_tables, run_bench, write_csv, BenchConfig};
use crate::bnb::{solve_with, BnbOptions};
use crate::cuts::CutFamily;
use crate::error::{Error, Result};
use crate::generate::generate_pardalos;
use crate::instance::{brute_force_with_limit, BqpInstance, Sense};
use crate::io::{read_instance, write_instance};
use crate::pipeline::{prepare, BnbMethod, PipelineOptions};
use crate::relax::{cutting_plane, RelaxOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_LIMIT: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "bqpref",
    version,
    about = "Reformulate and solve 0-1 quadratic programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SenseArg {
    Min,
    Max,
}

impl From<SenseArg> for Sense {
    fn from(s: SenseArg) -> Self {
        match s {
            SenseArg::Min => Sense::Min,
            SenseArg::Max => Sense::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RelaxArg {
    Sdp,
    Sdprlt,
    Sdprlttri,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read an instance and print a summary.
    Parse {
        file: PathBuf,
        /// Defaults to max for `.sparse` files, min otherwise.
        #[arg(long, value_enum)]
        sense: Option<SenseArg>,
    },
    /// Write a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Root relaxation value.
    Bound {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "sdp")]
        relax: RelaxArg,
        /// Cutting-plane rounds; defaults to 2 with McCormick cuts only, 9 with triangles.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        viol_tol: f64,
        #[arg(long, value_enum)]
        sense: Option<SenseArg>,
    },
    /// Write a reformulation as JSON.
    Reform {
        file: PathBuf,
        #[arg(long)]
        method: BnbMethod,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        sense: Option<SenseArg>,
    },
    /// Branch-and-bound on a reformulation.
    Solve {
        file: PathBuf,
        #[arg(long)]
        method: BnbMethod,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        node_limit: Option<usize>,
        #[arg(long, value_enum)]
        sense: Option<SenseArg>,
    },
    /// Run a TOML experiment and write CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render text tables from a bench CSV.
    Tables { csv: PathBuf },
}

fn load(file: &std::path::Path, sense: Option<SenseArg>) -> Result<BqpInstance> {
    read_instance(file, sense.map(Sense::from))
}

fn sense_label(inst: &BqpInstance) -> &'static str {
    match inst.meta.sense_original {
        Sense::Min => "min",
        Sense::Max => "max",
    }
}

/// Objective in the sense the file was written in.
fn original(inst: &BqpInstance, v: f64) -> f64 {
    match inst.meta.sense_original {
        Sense::Min => v,
        // + 0.0 turns -0 into 0
        Sense::Max => -v + 0.0,
    }
}

fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Parse { file, sense } => {
            let inst = load(&file, sense)?;
            let n = inst.n();
            let nnz = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .filter(|&(i, j)| inst.q()[(i, j)] != 0.0)
                .count();
            println!("name      {}", inst.meta.name);
            println!("sense     {}", sense_label(&inst));
            println!("n         {n}");
            println!("products  {nnz}");
            println!(
                "density   {:.4}",
                if n > 1 {
                    2.0 * nnz as f64 / (n * (n - 1)) as f64
                } else {
                    0.0
                }
            );
            if let Ok(best) = brute_force_with_limit(&inst, 20) {
                println!("optimum   {}", original(&inst, best.value));
                let bits: String = best.x.iter().map(|b| char::from(b'0' + b)).collect();
                println!("argopt    {bits}");
            }
        }
        Command::Gen {
            n,
            density,
            seed,
            output,
        } => {
            let inst = generate_pardalos(n, density, seed)?;
            std::fs::write(&output, write_instance(&inst))?;
            println!("wrote {}", output.display());
        }
        Command::Bound {
            file,
            relax,
            iters,
            viol_tol,
            sense,
        } => {
            let inst = load(&file, sense)?.normalize_diagonal();
            let (families, default_iters): (&[CutFamily], usize) = match relax {
                RelaxArg::Sdp => (&[], 0),
                RelaxArg::Sdprlt => (&[CutFamily::McCormick], 2),
                RelaxArg::Sdprlttri => (&[CutFamily::McCormick, CutFamily::Triangle], 9),
            };
            let opts = RelaxOptions {
                viol_tol,
                ..RelaxOptions::default()
            };
            let run = cutting_plane(&inst, families, iters.unwrap_or(default_iters), &opts)?;
            for (k, v) in run.history.iter().enumerate() {
                println!("round {k}  {:.9}", v);
            }
            println!("cuts      {}", run.pool.len());
            println!("bound     {:.9}", run.solution.value);
        }
        Command::Reform {
            file,
            method,
            output,
            sense,
        } => {
            let inst = load(&file, sense)?;
            let p = prepare(&inst, method, &PipelineOptions::default())?;
            std::fs::write(&output, p.reform.to_json())?;
            println!("relaxation {:.9}", p.sdp_value());
            println!("wrote {}", output.display());
        }
        Command::Solve {
            file,
            method,
            tol,
            time_limit,
            node_limit,
            sense,
        } => {
            let inst = load(&file, sense)?;
            let opts = BnbOptions {
                rel_tol: tol,
                node_limit,
                time_limit: time_limit.map(Duration::from_secs_f64),
                ..BnbOptions::default()
            };
            let rep = solve_with(&inst, method, &PipelineOptions::default(), &opts)?;
            let r = &rep.result;
            let bits: String = r.solution.iter().map(|b| char::from(b'0' + b)).collect();
            println!("status     {}", r.status);
            println!("value      {}", original(&inst, r.value));
            println!("solution   {bits}");
            println!("root bound {:.9}", original(&inst, r.root_bound));
            println!("nodes      {}", r.node_count);
            println!("gap        {:.3e}", r.final_rel_gap);
            println!(
                "time       {:.3}s (pre {:.3}s, search {:.3}s)",
                rep.time_total_s, rep.time_pre_s, rep.time_bnb_s
            );
            if r.status.hit_limit() {
                return Ok(EXIT_LIMIT);
            }
        }
        Command::Bench { config, output } => {
            let cfg = BenchConfig::load(&config)?;
            let rows = run_bench(&cfg)?;
            let text = write_csv(&rows)?;
            match output.or_else(|| cfg.output.map(|p| cfg.base_dir.join(p))) {
                Some(path) => {
                    std::fs::write(&path, text)?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => print!("{text}"),
            }
        }
        Command::Tables { csv } => {
            let rows = read_csv(&std::fs::read_to_string(csv)?)?;
            print!("{}", render_tables(&rows));
        }
    }
    Ok(EXIT_OK)
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) | Error::Numerics(_) | Error::UndefinedGap => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

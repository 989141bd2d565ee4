use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use levelset_quad::assemble::{threads_from_env, with_threads};
use levelset_quad::builtins::{builtin, oracle};
use levelset_quad::harness::{self, Format, Mode, RunConfig};
use levelset_quad::{QuadError, Result};

/// High-order quadrature over level-set curves, surfaces and regions.
#[derive(Parser)]
#[command(name = "quad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate once on one mesh.
    Run {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: Output,
        /// Write the displaced mesh to this file.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
    },
    /// Run a refinement study and report observed orders.
    Convergence {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Refinement study of a built-in test problem.
    Builtin {
        id: String,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Override the default quadrature order.
        #[arg(long)]
        q: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Recompute the reference value of a built-in problem without a closed form.
    Oracle { id: String },
}

#[derive(Args)]
struct Problem {
    #[arg(long, value_parser = ["2", "3"])]
    dim: String,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    levelset: String,
    #[arg(long, default_value = "1")]
    integrand: String,
    /// Box bounds "x0,x1,y0,y1[,z0,z1]".
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    bounds: Vec<f64>,
    #[arg(long)]
    q: usize,
    #[arg(long, default_value_t = 0.25)]
    c: f64,
    #[arg(long, allow_hyphen_values = true)]
    exact: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Curve,
    Surface,
    Region,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

impl Output {
    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

impl Problem {
    fn config(&self, n: usize) -> RunConfig {
        RunConfig {
            dim: self.dim.parse().expect("restricted by clap"),
            mode: match self.mode {
                ModeArg::Curve => Mode::Curve,
                ModeArg::Surface => Mode::Surface,
                ModeArg::Region => Mode::Region,
            },
            levelset: self.levelset.clone(),
            integrand: self.integrand.clone(),
            bounds: self.bounds.clone(),
            n,
            q: self.q,
            c: self.c,
            exact: self.exact,
        }
    }
}

fn study(config: &RunConfig, n_list: &[usize], output: &Output) -> Result<()> {
    let report = harness::convergence(config, n_list)?;
    harness::emit(&report, output.format(), output.out.as_deref())?;
    match report.median_order() {
        Some(m) => eprintln!("median observed order: {m:.2}"),
        None => eprintln!("median observed order: n/a"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            problem,
            n,
            output,
            dump_mesh,
        } => {
            let config = problem.config(n);
            if let Some(path) = dump_mesh {
                harness::dump_mesh(&config, BufWriter::new(File::create(path)?))?;
            }
            let result = harness::run(&config)?;
            match &output.out {
                Some(p) => harness::write_run(&result, output.format(), BufWriter::new(File::create(p)?))?,
                None => harness::write_run(&result, output.format(), std::io::stdout().lock())?,
            }
            eprintln!("wall time: {:.3} s", result.wall_time);
            Ok(())
        }
        Command::Convergence {
            problem,
            n_list,
            output,
        } => {
            let n = n_list.first().copied().unwrap_or(1);
            study(&problem.config(n), &n_list, &output)
        }
        Command::Builtin { id, n_list, q, output } => {
            let t = builtin(&id)?;
            let config = RunConfig {
                q: q.unwrap_or(t.config.q),
                ..t.config.clone()
            };
            eprintln!("{}: {}", t.id, t.description);
            study(&config, n_list.as_deref().unwrap_or(&t.n_list), &output)
        }
        Command::Oracle { id } => {
            let t = builtin(&id)?;
            let entry = oracle(&id)?;
            let frozen = t.reference.value();
            println!("{}", serde_json::to_string_pretty(&entry).map_err(QuadError::from)?);
            eprintln!("difference from stored value: {:.3e}", entry.value - frozen);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = threads_from_env().and_then(|threads| with_threads(threads, || execute(cli)));
    match outcome.and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

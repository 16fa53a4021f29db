use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tetraqg::error::Error;
use tetraqg::suites::{cmd_compute, cmd_verify, Status, SuiteConfig};

#[derive(Parser)]
#[command(name = "tetraqg", about = "Tetrahedron-equation R matrices and generalized quantum group checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite
    Verify {
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compute one R matrix block or 3D element
    Compute {
        /// rmatrix-trace | rmatrix-boundary | rmatrix-solver | threed-element
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// Case selector: tetrahedron kind, identity name or example name
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value = "1/2")]
    qroot: String,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// l,m or a sum vector
    #[arg(long)]
    sector: Option<String>,
    #[arg(long)]
    truncation: Option<i64>,
    #[arg(long, default_value_t = 256)]
    precision: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    cutoff: Option<i64>,
    #[arg(long)]
    s: Option<u8>,
    #[arg(long)]
    t: Option<u8>,
    /// a,b,c,i,j,k for threed-element
    #[arg(long)]
    index: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here
    #[arg(long)]
    json: Option<String>,
    /// Write the matrix dump here instead of stdout
    #[arg(long)]
    dump: Option<String>,
}

impl Opts {
    fn config(self, suite: &str) -> SuiteConfig {
        SuiteConfig {
            suite: suite.into(),
            name: self.name,
            family: self.family,
            eps: self.eps,
            qroot: self.qroot,
            z: self.z,
            x: self.x,
            y: self.y,
            sector: self.sector,
            truncation: self.truncation,
            precision: self.precision,
            tol: self.tol,
            cutoff: self.cutoff,
            s: self.s,
            t: self.t,
            index: self.index,
            seed: self.seed,
            json: self.json,
            dump: self.dump,
        }
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("{e}");
    match e {
        Error::Solver(_) => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn write(path: &str, body: &str) -> Result<(), ExitCode> {
    std::fs::write(path, body).map_err(|e| {
        eprintln!("cannot write {path}: {e}");
        ExitCode::from(2)
    })
}

fn run() -> Result<ExitCode, ExitCode> {
    match Cli::parse().cmd {
        Cmd::Verify { suite, opts } => {
            let cfg = opts.config(&suite);
            let rep = cmd_verify(&cfg).map_err(fail)?;
            for c in &rep.cases {
                let tag = match c.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Skipped => "skip",
                };
                let msg = c.message.as_deref().map(|m| format!("  ({m})")).unwrap_or_default();
                println!("{tag:4}  {:<48} residual {:>10}  {:>7} ms{msg}", c.name, c.residual, c.time_ms);
            }
            println!("{}: {}", rep.suite, if rep.passed() { "pass" } else { "fail" });
            if let Some(p) = &cfg.json {
                write(p, &rep.to_json())?;
            }
            Ok(ExitCode::from(if rep.passed() { 0 } else { 1 }))
        }
        Cmd::Compute { kind, opts } => {
            let cfg = opts.config("compute");
            let out = cmd_compute(&kind, &cfg).map_err(fail)?;
            match &cfg.dump {
                Some(p) => write(p, &out)?,
                None => println!("{out}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    run().unwrap_or_else(|c| c)
}

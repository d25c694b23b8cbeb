use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use surfhead::commands::{cmd_deform, cmd_fit, cmd_interp_demo, cmd_render, Context, Outcome};
use surfhead::io::RunConfig;
use surfhead::selftest::{self, SelftestOptions};
use surfhead::{Error, Result};

#[derive(Parser)]
#[command(name = "surfhead", version, about = "Mesh-rigged 2D Gaussian surfels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deform surfels into a posed mesh and write diagnostics.
    Deform(Common),
    /// Render color, depth, normal and transmittance buffers.
    Render(Common),
    /// Interpolation and stretch comparison on built-in scenes.
    InterpDemo(Common),
    /// Fit surfel parameters to a target image.
    Fit(Common),
    /// Run the seeded property suites.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; SURFHEAD_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, hide = true)]
    mutate_inverse_transpose: bool,
}

impl Common {
    fn context(&self, needs_config: bool) -> Result<Context> {
        match &self.config {
            Some(p) => Context::load(p, self.out.clone(), self.seed),
            None if needs_config => Err(Error::Config("--config is required".into())),
            None => Ok(Context::new(RunConfig::default(), self.out.clone(), self.seed)),
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("SURFHEAD_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("SURFHEAD_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn report(o: Outcome) {
    println!("{}", o.summary);
    for f in o.files {
        println!("  wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = match &cli.command {
        Command::Deform(c) | Command::Render(c) | Command::InterpDemo(c) | Command::Fit(c) | Command::Selftest(c) => c,
    };
    if let Some(n) = thread_count(common.threads)? {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Deform(c) => report(cmd_deform(&c.context(true)?)?.0),
        Command::Render(c) => report(cmd_render(&c.context(true)?)?.0),
        Command::InterpDemo(c) => report(cmd_interp_demo(&c.context(false)?)?.0),
        Command::Fit(c) => report(cmd_fit(&c.context(true)?)?.0),
        Command::Selftest(c) => {
            let ctx = c.context(false)?;
            let r = selftest::run(&SelftestOptions {
                seed: ctx.config.seed,
                mutate_inverse_transpose: c.mutate_inverse_transpose,
            });
            print!("{}", r.render());
            if !r.all_passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

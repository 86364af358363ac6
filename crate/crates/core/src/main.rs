use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rp_entropy::harness::{self, config, Command, ExitStatus, Overrides};
use rp_entropy::positivity::SearchTarget;

#[derive(Parser)]
#[command(name = "rp-entropy", version, about = "Reflection positivity checks for Renyi entropies")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random sweep of the integer-n Gram inequalities.
    GramSweep(Common),
    /// Counterexample search for the entropy and infinite-divisibility cases.
    Search(Common),
    /// Free-fermion correlator identities and half-line divisibility witnesses.
    Fermion(Common),
    /// Spectral (K0 kernel) fits, decay rates, power laws and derivative signs.
    Kl(Common),
    /// Two-interval conformal inequalities for a cross-ratio function.
    Cft(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    IntegerN,
    EntropyN1,
    SchurSFraction,
}

#[derive(Args)]
struct Common {
    /// JSON config for the subcommand; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = harness::OUT_DIR_ENV, default_value = "rp-entropy-out")]
    out: PathBuf,
    /// Trials, instances, configurations or pairs, depending on the command.
    #[arg(long)]
    trials: Option<u64>,
    /// Comma list of `D` or `AxB` entries.
    #[arg(long)]
    dims: Option<String>,
    /// Comma list of λ values.
    #[arg(long)]
    lambda: Option<String>,
    /// Comma list of Renyi indices (`inf` allowed where meaningful).
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Search target (search only).
    #[arg(long, value_enum)]
    target: Option<Target>,
}

fn overrides(c: &Common) -> rp_entropy::Result<Overrides> {
    Ok(Overrides {
        seed: c.seed,
        trials: c.trials,
        dims: c.dims.clone(),
        lambdas: c.lambda.as_deref().map(|s| config::parse_list(s, "--lambda")).transpose()?,
        ns: c.n.as_deref().map(|s| config::parse_list(s, "--n")).transpose()?,
        tolerance: c.tolerance,
        target: c.target.map(|t| match t {
            Target::IntegerN => SearchTarget::IntegerN,
            Target::EntropyN1 => SearchTarget::EntropyN1,
            Target::SchurSFraction => SearchTarget::SchurSFraction,
        }),
    })
}

fn run(command: Command, c: &Common) -> rp_entropy::Result<ExitStatus> {
    let o = overrides(c)?;
    let output = harness::execute(command, c.config.as_deref(), &o, c.jobs)?;
    let files = harness::write_outputs(&c.out, &output, c.jobs)?;
    println!("{}: {} (report {})", output.command, if output.passed { "PASS" } else { "FAIL" }, files.report.display());
    Ok(output.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::Config.code() as u8 } else { 0 });
        }
    };
    let (command, common) = match &cli.command {
        Cmd::GramSweep(c) => (Command::GramSweep, c),
        Cmd::Search(c) => (Command::Search, c),
        Cmd::Fermion(c) => (Command::Fermion, c),
        Cmd::Kl(c) => (Command::Kl, c),
        Cmd::Cft(c) => (Command::Cft, c),
    };
    let status = match run(command, common) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::for_error(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}

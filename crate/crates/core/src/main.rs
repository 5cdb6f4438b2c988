use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use fuzzy_spectral::acceptance;
use fuzzy_spectral::cli::config::parse_overrides;
use fuzzy_spectral::cli::{RunConfig, Runner};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Verb {
    Spectrum,
    Action,
    Calculus,
    Mk,
    Verify,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Spectrum => "spectrum",
            Verb::Action => "action",
            Verb::Calculus => "calculus",
            Verb::Mk => "mk",
            Verb::Verify => "verify",
        }
    }
}

/// Spectra, functional calculus, spectral actions and MK distances for
/// fuzzy-torus Dirac operators.
///
/// Settings come from the defaults, then the TOML file given by --config,
/// then dotted overrides such as `--n_list=4,8 --function.kind=bump
/// --function.center=0 --function.radius=0.5 --mk.seed=3`.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    verb: Verb,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted overrides, `--key=value` or `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn run(cli: &Cli) -> fuzzy_spectral::Result<Outcome> {
    let mut overrides = parse_overrides(&cli.overrides)?;
    // `--config` after the first override lands in the trailing list.
    let mut file = cli.config.clone();
    if let Some(pos) = overrides.iter().position(|(k, _)| k == "config") {
        file = Some(PathBuf::from(overrides.remove(pos).1));
    }
    let config = RunConfig::load(file.as_deref(), &overrides)?;
    let runner = Runner::new(config)?;
    let mut outcome = Outcome::Ok;
    let mut sections = |b: &mut fuzzy_spectral::cli::ResultBundle| -> fuzzy_spectral::Result<()> {
        match cli.verb {
            Verb::Spectrum => b.spectrum = Some(runner.cmd_spectrum()?),
            Verb::Action => b.action = Some(runner.cmd_action()?),
            Verb::Calculus => {
                let c = runner.cmd_calculus()?;
                if c.rows.iter().any(|r| !r.within_eps) {
                    outcome = Outcome::VerificationFailed;
                }
                b.calculus = Some(c);
            }
            Verb::Mk => b.mk = Some(runner.cmd_mk()?),
            Verb::Verify => {
                let results = acceptance::run_all();
                for r in &results {
                    println!("{}", r.line());
                }
                if results.iter().any(|r| !r.passed) {
                    outcome = Outcome::VerificationFailed;
                }
                b.verify = Some(results);
            }
        }
        Ok(())
    };
    let mut bundle = runner.bundle(cli.verb.name());
    sections(&mut bundle)?;
    // Cache hits are only known after the work ran.
    bundle.metadata.cache = runner.bundle(cli.verb.name()).metadata.cache;
    for path in bundle.write_to(&runner.config().output_dir)? {
        log::info!("wrote {}", path.display());
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use markov_redaction::audit::{exact_leakage_capped, format_output};
use markov_redaction::experiments::{
    build, example1, fmt_f64, influence_curve, redaction_profile, utility_curve, write_atomic,
    SweepMechanism, SweepSpec,
};
use markov_redaction::mechanisms::{read_mechanism_file, write_mechanism_file, MechanismFile};
use markov_redaction::utility::monte_carlo_utility;
use markov_redaction::{
    exact_utility, Error, MarkovModel, MechanismKind, NumericalSearch, DEFAULT_ENUMERATION_CAP,
};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "markov-redaction",
    version,
    about = "Design and audit local redaction mechanisms for Markov-correlated records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    n: usize,
    /// Private record index (1-based).
    #[arg(long)]
    p: usize,
}

impl ModelArgs {
    fn model(&self) -> Result<MarkovModel, Error> {
        MarkovModel::new(self.n, self.alpha, self.beta)
    }
}

#[derive(Args, Clone)]
struct SplitArgs {
    #[arg(long, requires = "eps_right")]
    eps_left: Option<f64>,
    #[arg(long, requires = "eps_left")]
    eps_right: Option<f64>,
}

impl SplitArgs {
    fn split(&self) -> Option<(f64, f64)> {
        self.eps_left.zip(self.eps_right)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise influence of the private record on every other record.
    InfluenceCurve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t_from: Option<usize>,
        #[arg(long)]
        t_to: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Utility of every construction over a grid of budgets.
    UtilityCurve {
        #[command(flatten)]
        model: ModelArgs,
        /// Budgets to sweep; defaults to 60 log-spaced points over [0.05, 6].
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[command(flatten)]
        split: SplitArgs,
        /// One of dim-ub, mq, mq-lb, 3r-relaxation, 3r-numerical; repeatable.
        #[arg(long)]
        mechanism: Vec<SweepMechanism>,
        #[arg(long, default_value_t = markov_redaction::mechanisms::DEFAULT_GRID_STEPS)]
        grid_steps: usize,
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Redaction probabilities per record for the chosen constructions.
    RedactionProfile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        split: SplitArgs,
        /// One of mq, 3r-relaxation, 3r-numerical; repeatable.
        #[arg(long)]
        mechanism: Vec<MechanismKind>,
        #[arg(long, default_value_t = markov_redaction::mechanisms::DEFAULT_GRID_STEPS)]
        grid_steps: usize,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Builds one mechanism and writes it as a mechanism file.
    Design {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        mechanism: MechanismKind,
        #[arg(long, default_value_t = markov_redaction::mechanisms::DEFAULT_GRID_STEPS)]
        grid_steps: usize,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact leakage of a mechanism file; fails when it exceeds --eps.
    Audit {
        file: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Exact and Monte-Carlo utility of a mechanism file.
    Utility {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reproduces the two-record worked example.
    Example1,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            })
        }
    }
}

fn search(grid_steps: usize, cap: usize) -> NumericalSearch {
    NumericalSearch { grid_steps, cap }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::InfluenceCurve {
            model,
            t_from,
            t_to,
            out,
        } => {
            let m = model.model()?;
            let table = influence_curve(&m, model.p, t_from.unwrap_or(1), t_to.unwrap_or(m.n()))?;
            emit(out.as_deref(), &table.to_csv()?)?;
        }
        Command::UtilityCurve {
            model,
            eps,
            split,
            mechanism,
            grid_steps,
            trials,
            seed,
            cap,
            out,
        } => {
            let mut spec = SweepSpec::new(model.model()?, model.p);
            if !eps.is_empty() {
                spec.eps_grid = eps;
            }
            if !mechanism.is_empty() {
                spec.mechanisms = mechanism;
            }
            spec.split = split.split();
            spec.search = search(grid_steps, cap);
            spec.trials = trials;
            spec.seed = seed;
            emit(out.as_deref(), &utility_curve(&spec)?.to_csv()?)?;
        }
        Command::RedactionProfile {
            model,
            eps,
            split,
            mechanism,
            grid_steps,
            cap,
            out,
        } => {
            let kinds = if mechanism.is_empty() {
                vec![
                    MechanismKind::Mq,
                    MechanismKind::ThreeRRelaxation,
                    MechanismKind::ThreeRNumerical,
                ]
            } else {
                mechanism
            };
            let m = model.model()?;
            let table = redaction_profile(
                &m,
                model.p,
                eps,
                &kinds,
                split.split(),
                &search(grid_steps, cap),
            )?;
            emit(out.as_deref(), &table.to_csv()?)?;
        }
        Command::Design {
            model,
            eps,
            split,
            mechanism,
            grid_steps,
            cap,
            out,
        } => {
            let m = model.model()?;
            let mech = build(
                &m,
                model.p,
                eps,
                mechanism,
                split.split(),
                &search(grid_steps, cap),
            )?;
            let file = MechanismFile::new(m, mech)?;
            match out {
                Some(path) => write_mechanism_file(&path, &file)?,
                None => emit(None, &file.to_text())?,
            }
        }
        Command::Audit { file, eps, cap } => {
            let f = read_mechanism_file(&file)?;
            let report = exact_leakage_capped(&f.model, &f.mechanism, cap)?;
            println!("leakage: {}", fmt_f64(report.leakage));
            println!("witness: {}", format_output(&report.witness));
            println!("outputs: {}", report.outputs_enumerated);
            if let Some((l, r)) = report.per_side {
                println!("left: {}", fmt_f64(l));
                println!("right: {}", fmt_f64(r));
            }
            if let Some(eps) = eps {
                let pass = report.passes(eps);
                println!("eps: {}", fmt_f64(eps));
                println!("result: {}", if pass { "pass" } else { "fail" });
                if !pass {
                    return Ok(EXIT_FAIL);
                }
            }
        }
        Command::Utility { file, trials, seed } => {
            let f = read_mechanism_file(&file)?;
            let exact = exact_utility(&f.model, &f.mechanism)?;
            println!("exact: {}", fmt_f64(exact.exact));
            if trials > 0 {
                let mc = monte_carlo_utility(&f.model, &f.mechanism, trials, seed)?
                    .monte_carlo
                    .ok_or_else(|| Error::Domain("missing estimate".into()))?;
                println!("estimate: {}", fmt_f64(mc.estimate));
                println!("standard_error: {}", fmt_f64(mc.standard_error));
                println!("trials: {}", mc.trials);
                println!("seed: {}", mc.seed);
            }
        }
        Command::Example1 => {
            let report = example1()?;
            for c in &report.checks {
                println!(
                    "{} {}: expected {} got {}",
                    if c.pass { "ok  " } else { "FAIL" },
                    c.name,
                    fmt_f64(c.expected),
                    fmt_f64(c.actual)
                );
            }
            if !report.passes() {
                return Ok(EXIT_FAIL);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_limit() { EXIT_LIMIT } else { EXIT_USAGE })
        }
    }
}

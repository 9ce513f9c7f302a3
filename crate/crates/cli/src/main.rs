use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sqcurv::config::{parse_tolerance_overrides, RunConfig};
use sqcurv::report::OutputFormat;
use sqcurv::runner::{build_family, evaluate_point, format_point, run_verify_built};
use sqcurv_core::finsler::SquareMetric;

#[derive(Parser)]
#[command(
    name = "sqcurv",
    version,
    about = "Numerical verification of curvature identities for square Finsler metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a family and check every residual row against its tolerance.
    Verify(VerifyArgs),
    /// Evaluate curvature and residual rows at a single point and direction.
    Curvature(CurvatureArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// euclidean-parallel | space-form | square-scalar | square-constant | custom
    #[arg(long, required_unless_present = "config")]
    family: Option<String>,
    /// Chart dimension (2..=6)
    #[arg(long)]
    dim: Option<usize>,
    /// Curvature parameter (space-form, square-scalar)
    #[arg(long)]
    mu: Option<f64>,
    /// Scale parameter (square-scalar)
    #[arg(long)]
    k: Option<f64>,
    /// Constant vector, comma separated (use --a=-0.1,0.2 for negatives)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    /// Sign of the constant-curvature form: plus | minus
    #[arg(long)]
    sign: Option<String>,
    /// TOML config file; file values override flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Number of sample points
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling ball as a fraction of the chart radius
    #[arg(long)]
    radius: Option<f64>,
    /// Tolerance overrides: name=value, comma separated
    #[arg(long)]
    tol: Option<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | text
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Base point x, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Vec<f64>,
    /// Direction y, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Vec<f64>,
}

fn assemble_config(args: &FamilyArgs) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(name) = &args.family {
        config.family = name.parse()?;
    }
    if let Some(dim) = args.dim {
        config.dim = dim;
    }
    config.mu = args.mu;
    config.k = args.k;
    config.a = args.a.clone();
    if let Some(sign) = &args.sign {
        config.sign_plus = match sign.as_str() {
            "plus" => true,
            "minus" => false,
            other => bail!("sign must be `plus` or `minus`, got `{other}`"),
        };
    }
    if let Some(path) = &args.config {
        sqcurv::config::apply_config_file(&mut config, path)?;
    }
    Ok(config)
}

fn run_verify_command(args: &VerifyArgs) -> Result<ExitCode> {
    let mut config = assemble_config(&args.family)?;
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(radius) = args.radius {
        config.radius = radius;
    }
    if let Some(tol) = &args.tol {
        for (name, value) in parse_tolerance_overrides(tol)? {
            config.tolerances.insert(name, value);
        }
    }
    // A config file overrides flags, so reapply it last.
    if let Some(path) = &args.family.config {
        sqcurv::config::apply_config_file(&mut config, path)?;
    }
    let format: OutputFormat = args.format.parse()?;

    let built = build_family(&config)?;
    let report = run_verify_built(&config, &built)?;
    let rendered = report.render(format)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &rendered)
                .with_context(|| format!("writing report to {}", path.display()))?;
            print!("{}", report.to_text());
        }
        None => print!("{rendered}"),
    }
    Ok(if report.summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_curvature_command(args: &CurvatureArgs) -> Result<ExitCode> {
    let mut config = assemble_config(&args.family)?;
    if args.point.len() != config.dim || args.direction.len() != config.dim {
        // Infer the dimension from the point when no --dim was given.
        if args.dim_unset() && args.point.len() == args.direction.len() {
            config.dim = args.point.len();
        } else {
            bail!(
                "--point and --direction must both have {} entries",
                config.dim
            );
        }
    }
    let built = build_family(&config)?;
    let metric = SquareMetric::new(built.alpha.clone(), built.beta.clone())?;
    let eval = evaluate_point(&built, &metric, config.mu, &args.point, &args.direction)?;
    print!("{}", format_point(&eval, &args.point, &args.direction));
    Ok(ExitCode::SUCCESS)
}

impl CurvatureArgs {
    fn dim_unset(&self) -> bool {
        self.family.dim.is_none()
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify(args) => run_verify_command(args),
        Command::Curvature(args) => run_curvature_command(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

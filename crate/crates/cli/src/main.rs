use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use phiclust::indices::{ChVariant, DEFAULT_BOOTSTRAPS};
use phiclust::io::read_csv_path;
use phiclust::membership::DEFAULT_THRESHOLD;
use phiclust::report::{analyze, AnalyzeOptions};
use phiclust::rng::DEFAULT_SEED;
use phiclust::selection::DEFAULT_K_MAX;
use phiclust::simulate::{builtin_scenario, builtin_scenarios, run_study, Method, ScenarioSpec, StudyConfig};
use phiclust::{apply_threshold, complete_linkage, cut, membership_for, squared_distance_matrix, Error, Result};

#[derive(Parser)]
#[command(name = "phiclust", version, about = "Degree-of-membership cluster validity and cluster-number selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every criterion for k = 1..kmax on a numeric CSV.
    Analyze {
        /// Input CSV, one observation per row. A non-numeric first line is a header.
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: usize,
        /// Threshold the membership matrix before computing delta_T.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAPS)]
        bootstraps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ChArg::Standard)]
        ch: ChArg,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the degree-of-membership matrix of the k-cluster complete-linkage cut.
    Membership {
        csv: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
    },
    /// Run the seeded simulation study and tally the selected k per method.
    Simulate {
        /// Built-in scenario names, or "all". Ignored when --spec is given.
        scenarios: Vec<String>,
        /// JSON file with one scenario object or an array of them.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of replicates.
        #[arg(short = 'R', long = "replicates", alias = "R", default_value_t = 100)]
        replicates: usize,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAPS)]
        bootstraps: usize,
        /// Override the Gaussian standard deviation of every mixture scenario.
        #[arg(long)]
        sd: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = ChArg::Standard)]
        ch: ChArg,
        /// Comma-separated method ids (gap-unif, gap-pca, silhouette, ch, phi, phi-threshold).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Directory for <scenario>.csv and <scenario>.json. Without it the
        /// CSV tallies go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in simulation scenarios as JSON.
    Scenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChArg {
    Standard,
    AsPrinted,
}

impl From<ChArg> for ChVariant {
    fn from(c: ChArg) -> Self {
        match c {
            ChArg::Standard => ChVariant::Standard,
            ChArg::AsPrinted => ChVariant::AsPrinted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze {
            csv,
            kmax,
            threshold,
            bootstraps,
            seed,
            ch,
            format,
            out,
        } => {
            let input = read_csv_path(&csv)?;
            let options = AnalyzeOptions {
                k_max: kmax,
                threshold,
                bootstraps,
                seed,
                ch_variant: ch.into(),
            };
            eprintln!("seed: {seed}");
            let report = analyze(&input.dataset, Some(csv.display().to_string()), &options)?;
            let text = match format {
                ReportFormat::Json => report.to_json()? + "\n",
                ReportFormat::Csv => report.to_csv(),
            };
            emit(out.as_deref(), &text)
        }
        Command::Membership {
            csv,
            k,
            threshold,
            format,
        } => {
            let input = read_csv_path(&csv)?;
            let dm = squared_distance_matrix(&input.dataset);
            let tree = complete_linkage(&dm)?;
            let mut mm = membership_for(&dm, &cut(&tree, k)?)?;
            if let Some(t) = threshold {
                mm = apply_threshold(&mm, t)?;
            }
            let text = match format {
                TableFormat::Text => mm.render_table(),
                TableFormat::Json => serde_json::to_string_pretty(&mm)? + "\n",
            };
            emit(None, &text)
        }
        Command::Simulate {
            scenarios,
            spec,
            replicates,
            kmax,
            seed,
            bootstraps,
            sd,
            threshold,
            ch,
            methods,
            out,
        } => {
            let mut specs = match spec {
                Some(path) => load_specs(&path)?,
                None => resolve_scenarios(&scenarios)?,
            };
            if let Some(sd) = sd {
                specs = specs.iter().map(|s| s.with_sd(sd)).collect();
            }
            let methods = match methods {
                Some(ids) => ids.iter().map(|id| id.trim().parse()).collect::<Result<Vec<Method>>>()?,
                None => Method::ALL.to_vec(),
            };
            let config = StudyConfig {
                replicates,
                k_max: kmax,
                seed,
                bootstraps,
                threshold,
                ch_variant: ch.into(),
            };
            eprintln!("seed: {seed}");
            let tables = run_study(&specs, &methods, &config)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    for table in &tables {
                        let name = &table.scenario.name;
                        fs::write(dir.join(format!("{name}.csv")), table.to_csv())?;
                        fs::write(dir.join(format!("{name}.json")), table.to_json()? + "\n")?;
                        info!("wrote {name}.csv and {name}.json to {}", dir.display());
                    }
                    Ok(())
                }
                None => {
                    let mut text = String::new();
                    for table in &tables {
                        text.push_str(&format!("# {}\n", table.scenario.name));
                        text.push_str(&table.to_csv());
                    }
                    emit(None, &text)
                }
            }
        }
        Command::Scenarios => emit(None, &(serde_json::to_string_pretty(&builtin_scenarios())? + "\n")),
    }
}

fn resolve_scenarios(names: &[String]) -> Result<Vec<ScenarioSpec>> {
    if names.is_empty() {
        return Err(Error::InvalidInput("name at least one scenario, \"all\", or pass --spec".into()));
    }
    if names.iter().any(|n| n == "all") {
        return Ok(builtin_scenarios());
    }
    names
        .iter()
        .map(|n| {
            builtin_scenario(n).ok_or_else(|| {
                let known: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
                Error::InvalidInput(format!("unknown scenario '{n}' (known: {})", known.join(", ")))
            })
        })
        .collect()
}

fn load_specs(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let specs = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    Ok(specs)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

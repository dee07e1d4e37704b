//! `glc`: command-line front end. Every command runs against the workbench
//! service, either the one named by `--server` or a private in-process one.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use glc_api::{ExportQuery, JobResult, JobSpec, JobState, LayoutQuery, PolicySpec, PurityQuery, RulesQuery, SdgRequest};
use glc_client::{Client, ClientError};
use glc_core::eval::{render_report, ClassifierKind, EvalConfig, ReportFormat};
use glc_core::pipeline::PipelineConfig;
use glc_core::sdg::SdgStrategy;
use glc_core::{CaseId, GlcKind};
use glc_service::{spawn_local, ServiceConfig};

const POLL: Duration = Duration::from_millis(100);

#[derive(Parser)]
#[command(name = "glc", version, about = "GLC visual analytics workbench")]
struct Cli {
    /// Service URL. Without it a private in-process service is started.
    #[arg(long, global = true, env = "GLC_SERVER")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Min-max normalize a table and write it back out.
    Normalize { input: PathBuf, output: PathBuf },
    /// Render a GLC layout as SVG and/or geometry JSON.
    Layout(LayoutArgs),
    /// List purity regions.
    Purity {
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        min_support: usize,
        /// Print CSV instead of a table.
        #[arg(long)]
        csv: bool,
        /// Also list the cases left visible once pure cases are hidden.
        #[arg(long)]
        hide_pure: bool,
    },
    /// Induce interval rules and report their confusion matrix.
    Rules {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        min_purity: f64,
        #[arg(long, default_value_t = 3)]
        min_support: usize,
    },
    /// Generate synthetic cases and write the extended table.
    Sdg(SdgArgs),
    /// Monte-Carlo cross-validation of the default classifiers.
    Eval(EvalArgs),
    /// Run the automatic generation loop from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(clap::Args)]
struct LayoutArgs {
    input: PathBuf,
    #[arg(long, default_value = "pc")]
    kind: GlcKind,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Attribute order, 0-based and comma separated.
    #[arg(long)]
    order: Option<String>,
    /// Attributes to invert, 0-based and comma separated.
    #[arg(long)]
    invert: Option<String>,
    /// DCC arc coefficients, comma separated.
    #[arg(long)]
    coeff: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    curvature: Option<f64>,
    #[arg(long)]
    pair_gap: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    SingleShift,
    DuplicateShift,
    InBoundsUniform,
    InBoundsProportional,
    OutOfBounds,
    Unbounded,
}

#[derive(clap::Args)]
struct SdgArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    strategy: Strategy,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    case_id: Option<u64>,
    /// 0-based attribute index.
    #[arg(long)]
    coordinate: Option<usize>,
    /// Shift in normalized units; duplicate_shift takes a comma list.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report quality metrics with this neighbour count.
    #[arg(long)]
    quality: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    train: PathBuf,
    /// Exploration table; defaults to the real cases of the training table.
    #[arg(long)]
    explore: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    cycles: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Classifier names, comma separated.
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<ClassifierKind>>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
}

#[derive(Deserialize)]
struct PipelineFile {
    input: PathBuf,
    output: Option<PathBuf>,
    log: Option<PathBuf>,
    config: PipelineConfig,
    policy: PolicySpec,
}

/// A problem with the command line or its inputs, as opposed to a failure
/// while running.
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(message: impl Into<String>) -> anyhow::Error {
    Invalid(message.into()).into()
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<Invalid>().is_some()
                || e.downcast_ref::<ClientError>().is_some_and(ClientError::is_client_error);
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

async fn connect(server: Option<String>) -> Result<Client> {
    let base = match server {
        Some(url) => url,
        None => {
            let config = ServiceConfig::default();
            let addr = spawn_local(&config).await.context("starting local service")?;
            format!("http://{addr}")
        }
    };
    Ok(Client::new(base))
}

async fn upload(client: &Client, path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let file_name = path.file_name().map_or("dataset".into(), |n| n.to_string_lossy().into_owned());
    let info = client
        .create_session(bytes, &file_name, Some(&file_name))
        .await
        .with_context(|| format!("loading {}", path.display()))?;
    Ok(info.id)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

async fn run(cli: Cli) -> Result<()> {
    if let Command::Layout(args) = &cli.command {
        if args.svg.is_none() && args.json.is_none() {
            return Err(invalid("layout needs --svg and/or --json"));
        }
    }
    let client = connect(cli.server).await?;
    match cli.command {
        Command::Normalize { input, output } => {
            let id = upload(&client, &input).await?;
            let csv = client.export(&id, &ExportQuery::default()).await?;
            write(&output, csv)
        }
        Command::Layout(args) => layout(&client, args).await,
        Command::Purity {
            input,
            min_support,
            csv,
            hide_pure,
        } => {
            let id = upload(&client, &input).await?;
            let query = PurityQuery {
                version: None,
                min_support: Some(min_support),
                hide_pure,
            };
            let res = client.purity(&id, &query).await?;
            if csv {
                print!("{}", res.report.to_csv());
            } else {
                println!("{:<10} {:>8} {:>8}  {:<20} {:>7} {:>7}", "attribute", "lo", "hi", "class", "purity", "support");
                for r in &res.report.regions {
                    println!(
                        "{:<10} {:>8.4} {:>8.4}  {:<20} {:>7.3} {:>7}",
                        format!("x{}", r.coordinate + 1),
                        r.lo,
                        r.hi,
                        r.dominant_class,
                        r.purity,
                        r.support
                    );
                }
                println!("low-purity cases: {}", res.report.lp_case_ids.len());
            }
            if hide_pure {
                let ids: Vec<String> = res.visible.iter().map(ToString::to_string).collect();
                eprintln!("visible cases ({}): {}", ids.len(), ids.join(","));
            }
            Ok(())
        }
        Command::Rules {
            input,
            min_purity,
            min_support,
        } => {
            let id = upload(&client, &input).await?;
            let query = RulesQuery {
                version: None,
                min_purity: Some(min_purity),
                min_support: Some(min_support),
            };
            let res = client.rules(&id, &query).await?;
            println!("{}", res.text);
            print!("{}", res.confusion.to_csv());
            Ok(())
        }
        Command::Sdg(args) => sdg(&client, args).await,
        Command::Eval(args) => eval(&client, args).await,
        Command::Pipeline { config } => pipeline(&client, &config).await,
    }
}

async fn layout(client: &Client, args: LayoutArgs) -> Result<()> {
    let id = upload(client, &args.input).await?;
    let query = LayoutQuery {
        kind: Some(args.kind),
        version: None,
        order: args.order,
        invert: args.invert,
        coeff: args.coeff,
        radius: args.radius,
        curvature: args.curvature,
        pair_gap: args.pair_gap,
        format: None,
    };
    if let Some(path) = &args.svg {
        write(path, client.layout_svg(&id, &query).await?)?;
    }
    if let Some(path) = &args.json {
        let geometry = client.layout(&id, &query).await?;
        write(path, serde_json::to_string_pretty(&geometry)?)?;
    }
    Ok(())
}

fn require<T>(value: Option<T>, flag: &str, strategy: &str) -> Result<T> {
    value.ok_or_else(|| invalid(format!("{strategy} needs --{flag}")))
}

fn strategy(args: &SdgArgs) -> Result<SdgStrategy> {
    let name = args.strategy.to_possible_value().expect("named").get_name().to_string();
    let class = || require(args.class.clone(), "class", &name);
    let count = || require(args.count, "count", &name);
    let deltas = || -> Result<Vec<f64>> {
        glc_api::parse_list(&require(args.delta.clone(), "delta", &name)?).map_err(invalid)
    };
    Ok(match args.strategy {
        Strategy::SingleShift => {
            let delta = deltas()?;
            let [delta] = delta[..] else {
                return Err(invalid("single-shift takes one --delta value"));
            };
            SdgStrategy::SingleShift {
                case_id: CaseId(require(args.case_id, "case-id", &name)?),
                coordinate: require(args.coordinate, "coordinate", &name)?,
                delta,
            }
        }
        Strategy::DuplicateShift => SdgStrategy::DuplicateShift { delta: deltas()? },
        Strategy::InBoundsUniform => SdgStrategy::InBoundsUniform {
            class: class()?,
            count: count()?,
        },
        Strategy::InBoundsProportional => SdgStrategy::InBoundsProportional {
            class: class()?,
            count: count()?,
        },
        Strategy::OutOfBounds => SdgStrategy::OutOfBounds {
            class: class()?,
            coordinate: require(args.coordinate, "coordinate", &name)?,
            lo: require(args.lo, "lo", &name)?,
            hi: require(args.hi, "hi", &name)?,
            count: count()?,
        },
        Strategy::Unbounded => SdgStrategy::Unbounded { count: count()? },
    })
}

async fn sdg(client: &Client, args: SdgArgs) -> Result<()> {
    let strategy = strategy(&args)?;
    let id = upload(client, &args.input).await?;
    let res = client
        .sdg(
            &id,
            &SdgRequest {
                strategy,
                seed: args.seed,
                commit: true,
                expected_version: Some(0),
                quality_k: args.quality,
            },
        )
        .await?;
    let version = res.session.as_ref().map(|s| s.version);
    let export = ExportQuery {
        version,
        denormalize: true,
        provenance: true,
    };
    write(&args.out, client.export(&id, &export).await?)?;
    eprintln!("generated {} cases", res.batch.cases.len());
    if let Some(q) = res.quality {
        println!(
            "alpha_precision={} beta_recall={} authenticity={}",
            q.alpha_precision, q.beta_recall, q.authenticity
        );
    }
    Ok(())
}

async fn finished(client: &Client, id: &str) -> Result<JobResult> {
    let status = client.wait_for_job(id, POLL).await?;
    match status.state {
        JobState::Done => status.result.ok_or_else(|| anyhow!("job {id} finished without a result")),
        JobState::Failed => bail!("job {id} failed: {}", status.error.unwrap_or_default()),
        _ => Err(invalid(format!("job {id} is waiting for an interactive decision"))),
    }
}

async fn eval(client: &Client, args: EvalArgs) -> Result<()> {
    let name = |p: &Path| p.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned());
    let train = upload(client, &args.train).await?;
    let exploration_session = match &args.explore {
        Some(path) => Some(upload(client, path).await?),
        None => None,
    };
    let explore_name = args.explore.as_deref().map_or_else(|| name(&args.train), name);
    let config = EvalConfig::new(args.cycles, args.folds, args.seed).named(name(&args.train), explore_name);
    let spec = JobSpec::Eval {
        session: train,
        version: None,
        exploration_version: None,
        exploration_session,
        config,
        classifiers: args.classifiers.unwrap_or_else(ClassifierKind::defaults),
    };
    let job = client.submit_job(&spec).await?;
    let JobResult::Eval { report } = finished(client, &job.id).await? else {
        bail!("job {} returned a pipeline result", job.id);
    };
    let format = match args.format {
        OutputFormat::Text => ReportFormat::Text,
        OutputFormat::Csv => ReportFormat::Csv,
        OutputFormat::Json => ReportFormat::Json,
    };
    let text = render_report(&report, format)?;
    match &args.report {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_pipeline_file(path: &Path) -> Result<PipelineFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    let mut file: PipelineFile = parsed.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    file.input = base.join(&file.input);
    file.output = file.output.map(|p| base.join(p));
    file.log = file.log.map(|p| base.join(p));
    Ok(file)
}

async fn pipeline(client: &Client, path: &Path) -> Result<()> {
    let file = read_pipeline_file(path)?;
    if matches!(file.policy, PolicySpec::Interactive) {
        return Err(invalid("the command line runs automatic policies only"));
    }
    let session = upload(client, &file.input).await?;
    let spec = JobSpec::Pipeline {
        session: session.clone(),
        version: None,
        config: file.config,
        policy: file.policy,
    };
    let job = client.submit_job(&spec).await?;
    let JobResult::Pipeline { log, version } = finished(client, &job.id).await? else {
        bail!("job {} returned an eval result", job.id);
    };
    if let Some(out) = &file.output {
        let export = ExportQuery {
            version: Some(version),
            denormalize: true,
            provenance: true,
        };
        write(out, client.export(&session, &export).await?)?;
    }
    if let Some(out) = &file.log {
        write(out, serde_json::to_string_pretty(&log)?)?;
    }
    let last = log.versions.last();
    println!(
        "termination: {:?}; {} steps; {} cases ({} synthetic)",
        log.termination,
        log.records.len(),
        last.map_or(0, |v| v.cases),
        last.map_or(0, |v| v.synthetic)
    );
    Ok(())
}

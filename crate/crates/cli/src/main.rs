use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand, ValueEnum};
use fedmv::data::{
    load_dataset, load_sequences, read_manifest, save_dataset, save_sequences, Manifest, MultiViewDataset,
};
use fedmv::eval::config::CONFIG_KEYS;
use fedmv::eval::{
    compute_metrics, concat_views, load_model, load_source, run_experiment, save_model, write_embeddings,
    DataSource, MetricsReport, Mode, Model, RunConfig, Source,
};
use fedmv::mvl::write_trace_csv;
use fedmv::{Error, Matrix, RngSeed};

#[derive(Parser)]
#[command(name = "fedmv", version, about = "Federated multi-view learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset directory.
    GenData {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write its report, models and traces.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a saved model on a dataset directory.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1)]
        positive_class: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a report file.
    Report {
        input: PathBuf,
        /// Print the full CSV instead of the table.
        #[arg(long)]
        csv: bool,
    },
    /// Write per-sample embeddings with a label column.
    ExportEmbeddings {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = EmbeddingKind::Consensus)]
        kind: EmbeddingKind,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EmbeddingKind {
    /// Test-phase consensus scores, one column per class.
    Consensus,
    /// Encoder features (sequence data) or raw features, all views side by side.
    Features,
}

/// `--config FILE` plus one `--<key>` flag per configuration key; flags win.
#[derive(Clone, Debug, Default)]
struct ConfigArgs {
    file: Option<PathBuf>,
    overrides: Vec<(String, String)>,
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

impl FromArgMatches for ConfigArgs {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let mut out = ConfigArgs {
            file: m.get_one::<PathBuf>("config").cloned(),
            overrides: Vec::new(),
        };
        for key in CONFIG_KEYS {
            if let Some(v) = m.get_one::<String>(key) {
                out.overrides.push((key.to_string(), v.clone()));
            }
        }
        Ok(out)
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl Args for ConfigArgs {
    fn augment_args(cmd: Command) -> Command {
        let mut cmd = cmd.arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key=value configuration file"),
        );
        for key in CONFIG_KEYS {
            let mut arg = Arg::new(key)
                .long(flag_name(key))
                .value_name("VALUE")
                .action(ArgAction::Set)
                .help(format!("Override `{key}`"));
            if key == "grid" {
                arg = arg.num_args(0..=1).default_missing_value("true");
            }
            cmd = cmd.arg(arg);
        }
        cmd
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

fn config_failure(error: Error) -> Failure {
    Failure { code: 2, error }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = if matches!(error, Error::Config { .. }) { 2 } else { 3 };
        Failure { code, error }
    }
}

fn resolve_config(args: &ConfigArgs, adjust: impl FnOnce(&mut RunConfig)) -> Result<RunConfig, Failure> {
    let mut manifest = match &args.file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| config_failure(Error::config("config", format!("{}: {e}", path.display()))))?;
            Manifest::parse(&text, path).map_err(config_failure)?
        }
        None => Manifest::default(),
    };
    for (k, v) in &args.overrides {
        manifest.set(k, v);
    }
    let mut cfg = RunConfig::default();
    for (k, v) in &manifest.entries {
        cfg.set(k, v).map_err(config_failure)?;
    }
    adjust(&mut cfg);
    cfg.validate().map_err(config_failure)?;
    Ok(cfg)
}

fn gen_data(args: &ConfigArgs, out: &Path) -> Result<(), Failure> {
    let cfg = resolve_config(args, |cfg| {
        if cfg.data == DataSource::Sequences && !cfg.mode.is_sequential() {
            cfg.mode = Mode::Sfed;
        }
    })?;
    if matches!(cfg.data, DataSource::Path(_)) {
        return Err(config_failure(Error::config("data", "gen-data needs a generate:<kind> source")));
    }
    fs::create_dir_all(out).map_err(Error::from)?;
    match load_source(&cfg, RngSeed(cfg.seed))? {
        Source::Views(d) => {
            save_dataset(&d, out)?;
            println!("wrote {} samples, {} views to {}", d.num_samples(), d.num_views(), out.display());
        }
        Source::Clients(c) => {
            save_sequences(&c, out)?;
            println!("wrote {} sequence clients to {}", c.len(), out.display());
        }
    }
    Ok(())
}

fn train(args: &ConfigArgs, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = resolve_config(args, |_| {})?;
    let result = run_experiment(&cfg)?;
    print!("{}", result.report.render_table());
    let Some(out) = out else { return Ok(()) };
    fs::create_dir_all(out).map_err(Error::from)?;
    result.report.write_csv(&out.join("report.csv"))?;
    fs::write(out.join("config.txt"), cfg.to_manifest().render()).map_err(Error::from)?;
    for (r, rep) in result.repeats.iter().enumerate() {
        if let Some(model) = &rep.model {
            save_model(model, &out.join("models").join(format!("r{r}")))?;
        }
        if !rep.trace.is_empty() {
            fs::create_dir_all(out.join("traces")).map_err(Error::from)?;
            write_trace_csv(&out.join("traces").join(format!("trace_r{r}.csv")), &rep.trace)?;
        }
    }
    println!("wrote {}", out.join("report.csv").display());
    Ok(())
}

/// Multi-view datasets to score: the dataset itself, or the encoder features
/// of every sequence client.
fn scoring_sets(model: &Model, data: &Path) -> fedmv::Result<Vec<MultiViewDataset>> {
    match read_manifest(data)?.get("kind") {
        Some("sequences") => load_sequences(data)?.iter().map(|c| model.embed(c)).collect(),
        _ => Ok(vec![load_dataset(data)?]),
    }
}

fn evaluate(model_dir: &Path, data: &Path, positive: usize, out: Option<&Path>) -> Result<(), Failure> {
    let model = load_model(model_dir)?;
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for set in scoring_sets(&model, data)? {
        pred.extend(model.predict(&set)?);
        truth.extend_from_slice(set.labels().classes());
    }
    let metrics = compute_metrics(&pred, &truth, positive)?;
    let provenance = vec![
        ("model".to_string(), model_dir.display().to_string()),
        ("data".to_string(), data.display().to_string()),
        ("positive_class".to_string(), positive.to_string()),
    ];
    let report = MetricsReport::new(format!("evaluate-{}", model.mode), provenance, &[metrics]);
    print!("{}", report.render_table());
    let c = metrics.confusion;
    println!("confusion: tp={} fp={} tn={} fn={}", c.tp, c.fp, c.tn, c.fn_);
    if let Some(out) = out {
        report.write_csv(out)?;
    }
    Ok(())
}

fn vstack(parts: &[Matrix]) -> Matrix {
    let cols = parts.first().map_or(0, Matrix::cols);
    let data: Vec<f64> = parts.iter().flat_map(|m| m.data().iter().copied()).collect();
    Matrix::new(data.len() / cols.max(1), cols, data).expect("equal widths")
}

fn export_embeddings(model_dir: &Path, data: &Path, out: &Path, kind: EmbeddingKind) -> Result<(), Failure> {
    let model = load_model(model_dir)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for set in scoring_sets(&model, data)? {
        rows.push(match kind {
            EmbeddingKind::Consensus => model.scores(&set)?,
            EmbeddingKind::Features => concat_views(set.views()),
        });
        labels.extend_from_slice(set.labels().classes());
    }
    let x = vstack(&rows);
    write_embeddings(out, &x, &labels)?;
    println!("wrote {} rows x {} columns to {}", x.rows(), x.cols() + 1, out.display());
    Ok(())
}

fn report(input: &Path, csv: bool) -> Result<(), Failure> {
    let r = MetricsReport::read_csv(input)?;
    if csv {
        print!("{}", r.render_csv());
    } else {
        print!("{}", r.render_table());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::GenData { cfg, out } => gen_data(&cfg, &out),
        Cmd::Train { cfg, out } => train(&cfg, out.as_deref()),
        Cmd::Evaluate {
            model,
            data,
            positive_class,
            out,
        } => evaluate(&model, &data, positive_class, out.as_deref()),
        Cmd::Report { input, csv } => report(&input, csv),
        Cmd::ExportEmbeddings { model, data, out, kind } => export_embeddings(&model, &data, &out, kind),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}

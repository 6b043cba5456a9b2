use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stance_cli::error::{CliError, Code, Result, Stage};
use stance_cli::pipeline::{cmd_evaluate, cmd_fit, cmd_predict, cmd_preprocess, cmd_report, cmd_train};
use stance_cli::PipelineConfig;
use stance_core::corpus::{write_stances, StanceRow};

#[derive(Parser)]
#[command(name = "stance", version, about = "Headline/body stance detection pipeline")]
struct Cli {
    /// Master seed for every randomized stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-reproducible runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize joined pairs and print them as TSV.
    Preprocess {
        #[arg(long)]
        bodies: PathBuf,
        #[arg(long)]
        stances: PathBuf,
        /// Stance file has no Stance column.
        #[arg(long)]
        unlabeled: bool,
        /// Output file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit TF-IDF and the latent space and write a bundle without a network.
    Fit(PipelineArgs),
    /// Run the full pipeline and write a bundle.
    Train(PipelineArgs),
    /// Score a labeled split with a trained bundle.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        bodies: PathBuf,
        #[arg(long)]
        stances: PathBuf,
        /// Write the machine-readable report here.
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Write predictions as a `Headline,Body ID,Stance` CSV.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Classify one headline/body pair.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        headline: String,
        #[arg(long)]
        body: String,
    },
    /// Print the report and training history archived in a bundle.
    Report {
        #[arg(long)]
        bundle: PathBuf,
    },
}

/// Every option takes the same text form as the config file.
#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    bodies: Option<String>,
    #[arg(long)]
    stances: Option<String>,
    #[arg(long)]
    bundle: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    #[arg(long)]
    pilot_cap: Option<String>,
    /// Fixed retained rank (skips the elbow), or `none`.
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    svd_power_iterations: Option<String>,
    #[arg(long)]
    svd_max_power_iterations: Option<String>,
    #[arg(long)]
    svd_tolerance: Option<String>,
    /// scm_only | concat | concat_scm
    #[arg(long)]
    feature_mode: Option<String>,
    /// Comma-separated `units:activation` list.
    #[arg(long)]
    layers: Option<String>,
    /// true | false
    #[arg(long)]
    transfer: Option<String>,
    #[arg(long)]
    transfer_head: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    /// sgd | adam
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    fine_tune_batch_size: Option<String>,
    #[arg(long)]
    fine_tune_epochs: Option<String>,
    #[arg(long)]
    fine_tune_learning_rate: Option<String>,
    #[arg(long)]
    fine_tune_optimizer: Option<String>,
    /// Inverse-frequency class weights: true | false
    #[arg(long)]
    class_weights: Option<String>,
    /// Patience in epochs, or `none`.
    #[arg(long)]
    early_stop: Option<String>,
}

impl PipelineArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 23] {
        [
            ("bodies", &self.bodies),
            ("stances", &self.stances),
            ("bundle", &self.bundle),
            ("k-max", &self.k_max),
            ("pilot-cap", &self.pilot_cap),
            ("rank", &self.rank),
            ("svd-power-iterations", &self.svd_power_iterations),
            ("svd-max-power-iterations", &self.svd_max_power_iterations),
            ("svd-tolerance", &self.svd_tolerance),
            ("feature-mode", &self.feature_mode),
            ("layers", &self.layers),
            ("transfer", &self.transfer),
            ("transfer-head", &self.transfer_head),
            ("batch-size", &self.batch_size),
            ("epochs", &self.epochs),
            ("learning-rate", &self.learning_rate),
            ("optimizer", &self.optimizer),
            ("fine-tune-batch-size", &self.fine_tune_batch_size),
            ("fine-tune-epochs", &self.fine_tune_epochs),
            ("fine-tune-learning-rate", &self.fine_tune_learning_rate),
            ("fine-tune-optimizer", &self.fine_tune_optimizer),
            ("class-weights", &self.class_weights),
            ("early-stop", &self.early_stop),
        ]
    }
}

fn effective_config(cli: &Cli, args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    for (key, value) in args.overrides() {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn create(path: &Path, stage: Stage) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(stage, path, e))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Preprocess {
            bodies,
            stances,
            unlabeled,
            out: path,
        } => {
            let mut sink: Box<dyn Write> = match path {
                Some(p) => Box::new(create(p, Stage::Preprocess)?),
                None => Box::new(&mut out),
            };
            cmd_preprocess(bodies, stances, !unlabeled, &mut sink)?;
            sink.flush().map_err(|e| CliError::new(Code::Io, Stage::Preprocess, e))?;
        }
        Command::Fit(args) => {
            cmd_fit(&effective_config(&cli, args)?, &mut out)?;
        }
        Command::Train(args) => {
            let bundle = cmd_train(&effective_config(&cli, args)?, &mut out)?;
            if let Some(report) = &bundle.report {
                let _ = writeln!(out, "\ntraining-set evaluation\n{}", report.render_table());
            }
        }
        Command::Evaluate {
            bundle,
            bodies,
            stances,
            report_out,
            predictions,
        } => {
            let eval = cmd_evaluate(bundle, bodies, stances)?;
            let _ = write!(out, "{}", eval.report.render_table());
            if let Some(path) = report_out {
                std::fs::write(path, eval.report.to_text()).map_err(|e| CliError::io(Stage::Evaluate, path, e))?;
            }
            if let Some(path) = predictions {
                let rows: Vec<StanceRow> = eval
                    .pairs
                    .iter()
                    .zip(&eval.predictions)
                    .map(|(p, &s)| StanceRow {
                        headline: p.headline.clone(),
                        body_id: p.body_id,
                        stance: Some(s),
                    })
                    .collect();
                write_stances(&rows, create(path, Stage::Evaluate)?)
                    .map_err(|e| CliError::new(Code::Io, Stage::Evaluate, e))?;
            }
        }
        Command::Predict { bundle, headline, body } => {
            let p = cmd_predict(bundle, headline, body)?;
            let probs: Vec<String> = p.probabilities.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "stance = {}", p.stance);
            let _ = writeln!(out, "probabilities = {}", probs.join(" "));
            let _ = writeln!(out, "scm = {}", p.scm);
        }
        Command::Report { bundle } => {
            let (bundle, report) = cmd_report(bundle)?;
            for stage in &bundle.history {
                if let Some(last) = stage.history.epochs.last() {
                    let _ = writeln!(
                        out,
                        "{}: {} epochs, final loss {:.6}, categorical_accuracy {:.4}",
                        stage.stage,
                        stage.history.epochs.len(),
                        last.loss,
                        last.categorical_accuracy
                    );
                }
            }
            let _ = write!(out, "{}", report.render_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("{}", CliError::new(Code::Usage, Stage::Config, first));
            return ExitCode::from(Code::Usage.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code.exit_code() as u8)
        }
    }
}

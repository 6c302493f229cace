use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gln::config::{ExperimentConfig, PRESETS};
use gln::experiment::{self, RunManifest, CHECKPOINT_FILE, DATASET_FILE};
use gln::loss::BalanceMode;

/// Train and evaluate graph structure predictors.
#[derive(Parser, Debug)]
#[command(name = "gln", version)]
struct Cli {
    /// Directory that relative output directories are resolved against.
    #[arg(long, env = "GLN_OUTPUT_ROOT", default_value = ".", global = true)]
    output_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset (NDJSON) and its summary.
    Gen {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train on the training split and write a checkpoint and loss trace.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        inputs: Inputs,
        /// Suppress per-epoch progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Train and evaluate one model per depth.
    DepthSweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        inputs: Inputs,
        /// Comma-separated depths.
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<usize>>,
    },
    /// Evaluate a checkpoint from random initial structures.
    Robustness {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        inputs: Inputs,
        /// Comma-separated proportions of all node pairs connected in the
        /// initial adjacency; 0 is the identity start.
        #[arg(long, value_delimiter = ',')]
        proportions: Option<Vec<f64>>,
        /// Evaluations averaged per proportion.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Train the loss-term ablation variants.
    Ablation {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        inputs: Inputs,
        /// Comma-separated subset of HED, HED+Reg, IoU, IoU+Reg, IoU+HED,
        /// IoU+HED+Reg (default: all six).
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
    },
    /// Print the predicted edge list of one dataset sample as CSV.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        inputs: Inputs,
        /// Index of the sample in the dataset file.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory; defaults to the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig {
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Configuration source plus per-key overrides. Flags win over the file.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Named preset.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML configuration, or a `*.manifest.json` to reuse its configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (relative to the output root).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    kernels: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    psi1: Option<f64>,
    #[arg(long)]
    psi2: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// `paper_literal` or `hed_standard`.
    #[arg(long, value_parser = parse_balance)]
    balance_mode: Option<BalanceMode>,
    /// Sets the data, init and shuffle seeds to s, s+1 and s+2.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seed_data: Option<u64>,
    #[arg(long)]
    seed_init: Option<u64>,
    #[arg(long)]
    seed_shuffle: Option<u64>,
}

#[derive(Args, Debug)]
struct Inputs {
    /// Dataset file; defaults to `dataset.ndjson` in the output directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Checkpoint file; defaults to `checkpoint.json` in the output directory.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

fn parse_balance(s: &str) -> Result<BalanceMode, String> {
    match s {
        "paper_literal" => Ok(BalanceMode::PaperLiteral),
        "hed_standard" => Ok(BalanceMode::HedStandard),
        _ => Err(format!("expected `paper_literal` or `hed_standard`, got `{s}`")),
    }
}

impl RunArgs {
    fn base(&self) -> Result<ExperimentConfig> {
        match (&self.preset, &self.config) {
            (Some(name), _) => ExperimentConfig::preset(name)
                .with_context(|| format!("available presets: {}", PRESETS.join(", "))),
            (None, Some(path)) if path.extension().is_some_and(|e| e == "json") => {
                Ok(RunManifest::load(path).with_context(|| format!("reading {}", path.display()))?.config)
            }
            (None, Some(path)) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display())),
            (None, None) => Ok(ExperimentConfig::preset("community-c2")?),
        }
    }

    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = self.base()?;
        if let Some(v) = self.samples {
            c.dataset.set_samples(v);
        }
        set(&mut c.model.hidden, self.hidden);
        set(&mut c.model.layers, self.layers);
        set(&mut c.model.kernels, self.kernels);
        set(&mut c.model.epsilon, self.epsilon);
        if self.learning_rate.is_some() {
            c.train.learning_rate = self.learning_rate;
        }
        if self.epochs.is_some() {
            c.train.epochs = self.epochs;
        }
        set(&mut c.train.train_fraction, self.train_fraction);
        set(&mut c.loss.psi1, self.psi1);
        set(&mut c.loss.psi2, self.psi2);
        set(&mut c.loss.weight_decay, self.weight_decay);
        set(&mut c.loss.balance_mode, self.balance_mode);
        if let Some(s) = self.seed {
            c.seeds.data = s;
            c.seeds.init = s.wrapping_add(1);
            c.seeds.shuffle = s.wrapping_add(2);
        }
        set(&mut c.seeds.data, self.seed_data);
        set(&mut c.seeds.init, self.seed_init);
        set(&mut c.seeds.shuffle, self.seed_shuffle);
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Inputs {
    fn dataset(&self, out: &Path) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| out.join(DATASET_FILE))
    }

    fn checkpoint(&self, out: &Path) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| out.join(CHECKPOINT_FILE))
    }
}

fn print_file(path: &Path) -> Result<()> {
    print!("{}", std::fs::read_to_string(path)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.output_root;
    let out_of = |c: &ExperimentConfig| root.join(&c.output_dir);
    match cli.command {
        Command::Gen { run } => {
            let c = run.config()?;
            let out = out_of(&c);
            let g = experiment::cmd_gen(&c, &out)?;
            println!("{}", serde_json::to_string_pretty(&g.summary)?);
            eprintln!("wrote {}", g.dataset.display());
        }
        Command::Train { run, inputs, quiet } => {
            let c = run.config()?;
            let out = out_of(&c);
            let t = experiment::cmd_train(&c, &inputs.dataset(&out), &out, |e| {
                if !quiet {
                    eprintln!(
                        "epoch {:>4}  loss {:.6}  edge {:.6}  dice {:.6}",
                        e.epoch, e.mean_total, e.mean_edge, e.mean_dice
                    );
                }
            })?;
            eprintln!("wrote {} and {}", t.checkpoint.display(), t.loss_csv.display());
        }
        Command::Eval { run, inputs } => {
            let c = run.config()?;
            let out = out_of(&c);
            let e = experiment::cmd_eval(&c, &inputs.checkpoint(&out), &inputs.dataset(&out), &out)?;
            print_file(&e.report)?;
        }
        Command::DepthSweep { run, inputs, depths } => {
            let mut c = run.config()?;
            set(&mut c.sweep.depths, depths);
            c.validate()?;
            let out = out_of(&c);
            experiment::cmd_depth_sweep(&c, &inputs.dataset(&out), &out)?;
            print_file(&out.join(experiment::DEPTH_FILE))?;
        }
        Command::Robustness {
            run,
            inputs,
            proportions,
            runs,
        } => {
            let mut c = run.config()?;
            set(&mut c.sweep.proportions, proportions);
            set(&mut c.sweep.runs, runs);
            c.validate()?;
            let out = out_of(&c);
            experiment::cmd_robustness(&c, &inputs.checkpoint(&out), &inputs.dataset(&out), &out)?;
            print_file(&out.join(experiment::ROBUSTNESS_FILE))?;
        }
        Command::Ablation { run, inputs, variants } => {
            let mut c = run.config()?;
            set(&mut c.sweep.ablation_variants, variants);
            c.validate()?;
            let out = out_of(&c);
            experiment::cmd_ablation(&c, &inputs.dataset(&out), &out)?;
            print_file(&out.join(experiment::ABLATION_FILE))?;
        }
        Command::Predict {
            run,
            inputs,
            index,
            output,
        } => {
            let c = run.config()?;
            let out = out_of(&c);
            let csv = experiment::cmd_predict(&inputs.checkpoint(&out), &inputs.dataset(&out), index)?;
            match output {
                Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::Replay { manifest, out } => {
            let m = RunManifest::load(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            m.verify_inputs()?;
            let out = out.map_or_else(|| out_of(&m.config), |o| root.join(o));
            let input = |i: usize| -> Result<PathBuf> {
                Ok(m.inputs.get(i).context("manifest lists too few inputs")?.path.clone())
            };
            let c = &m.config;
            match m.command.as_str() {
                "gen" => drop(experiment::cmd_gen(c, &out)?),
                "train" => drop(experiment::cmd_train(c, &input(0)?, &out, |_| {})?),
                "eval" => drop(experiment::cmd_eval(c, &input(0)?, &input(1)?, &out)?),
                "depth-sweep" => drop(experiment::cmd_depth_sweep(c, &input(0)?, &out)?),
                "robustness" => drop(experiment::cmd_robustness(c, &input(0)?, &input(1)?, &out)?),
                "ablation" => drop(experiment::cmd_ablation(c, &input(0)?, &out)?),
                other => bail!("manifest records unknown command `{other}`"),
            }
            eprintln!("replayed `{}` into {}", m.command, out.display());
        }
        Command::ShowConfig { run } => print!("{}", run.config()?.resolved().to_toml()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `rpnet` command line.
//!
//! Exit codes: 0 success, 1 runtime failure (e.g. divergent training),
//! 2 usage or configuration error, 3 ingestion or file-format error,
//! 4 verification failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::featurize::{extract_features, read_features, write_features, SignatureMode};
use crate::graph_io::{generate_synthetic, parse_tu_dataset_with_summary, write_tu_dataset, SyntheticKind};
use crate::model::{Ablation, RpnetConfig};
use crate::train::{cross_validate, TrainConfig};
use crate::{verify, Error, FeatureDataset64, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rpnet", version, about = "Graph classification from return-probability persistence diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a TU-format dataset and write an RPFEAT01 feature file.
    Extract {
        /// Directory holding `<name>_A.txt`, `<name>_graph_indicator.txt`, `<name>_graph_labels.txt`.
        #[arg(long)]
        data: PathBuf,
        /// Dataset file prefix; defaults to the directory name.
        #[arg(long)]
        name: Option<String>,
        /// Number of scales K.
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// `return_prob` or `degree`.
        #[arg(long, default_value = "return_prob")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Cross-validate on a feature file.
    Cv {
        #[command(flatten)]
        run: RunArgs,
        /// Per-fold CSV report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Cross-validate the full model and its three ablations.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the built-in correctness suites.
    Verify {
        /// Fewer random cases.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic dataset in TU format.
    Synth {
        /// `cycles_vs_paths` or `density_pair`.
        #[arg(long, default_value = "cycles_vs_paths")]
        kind: String,
        /// Graphs per class.
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 10)]
        min_size: usize,
        #[arg(long, default_value_t = 20)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "SYNTH")]
        name: String,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    features: PathBuf,
    /// Initial learning rate, in [0.001, 0.01].
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Folds trained in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) | Error::Config(_) => EXIT_USAGE,
        Error::Ingestion { .. }
        | Error::Format { .. }
        | Error::VersionMismatch(_)
        | Error::Truncated(_)
        | Error::Checksum { .. }
        | Error::Io(_) => EXIT_INPUT,
        Error::State(_) | Error::NonFinite(_) => EXIT_RUNTIME,
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {value:?} for {key}")))
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|w| parse(key, w.trim())).collect()
}

/// Applies one `section.key=value` override.
pub fn apply_override(model: &mut RpnetConfig, train: &mut TrainConfig, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not of the form section.key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    match key {
        "model.encoder_widths" => model.encoder_widths = parse_widths(key, value)?,
        "model.decoder_widths" => model.decoder_widths = parse_widths(key, value)?,
        "model.head_widths" => model.head_widths = parse_widths(key, value)?,
        "model.norm" => model.norm = value.parse()?,
        "model.dropout" => model.dropout = parse(key, value)?,
        "model.activation" => model.activation = value.parse()?,
        "model.diagram_pool" => model.diagram_pool = value.parse()?,
        "model.use_onehot_input" => model.use_onehot_input = parse(key, value)?,
        "model.use_onehot_concat" => model.use_onehot_concat = parse(key, value)?,
        "train.max_epochs" => train.max_epochs = parse(key, value)?,
        "train.patience" => train.patience = parse(key, value)?,
        "train.initial_lr" => train.initial_lr = parse(key, value)?,
        "train.lr_decay" => train.lr_decay = parse(key, value)?,
        "train.decay_every" => train.decay_every = parse(key, value)?,
        "train.max_decays" => train.max_decays = parse(key, value)?,
        "train.batch_size" => train.batch_size = parse(key, value)?,
        "train.folds" => train.folds = parse(key, value)?,
        "train.seed" => train.seed = parse(key, value)?,
        _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
    }
    Ok(())
}

fn configs(run: &RunArgs, features: &FeatureDataset64) -> Result<(RpnetConfig, TrainConfig)> {
    let mut model = RpnetConfig::new(features.scales(), features.num_classes());
    let mut train = TrainConfig::default();
    for o in &run.overrides {
        apply_override(&mut model, &mut train, o)?;
    }
    if let Some(lr) = run.lr {
        train.initial_lr = lr;
    }
    if let Some(seed) = run.seed {
        train.seed = seed;
    }
    model.validate()?;
    train.validate()?;
    Ok((model, train))
}

fn extract(data: &Path, name: Option<String>, k: usize, mode: &str, out: &Path, jobs: usize) -> Result<()> {
    let mode: SignatureMode = mode.parse()?;
    if k == 0 {
        return Err(Error::arg("--k must be at least 1"));
    }
    if ![1, 2, 4, 8].contains(&k) {
        eprintln!("note: K = {k} is outside the usual {{1, 2, 4, 8}}");
    }
    let name = match name {
        Some(n) => n,
        None => data
            .file_name()
            .and_then(|s| s.to_str())
            .map(str::to_owned)
            .ok_or_else(|| Error::arg("cannot infer the dataset name; pass --name"))?,
    };
    let (ds, summary) = parse_tu_dataset_with_summary(data, &name)?;
    eprintln!("{summary}");
    let features: FeatureDataset64 = extract_features(&ds, k, mode, jobs)?;
    write_features(&features, out)?;
    println!(
        "wrote {} graphs, K = {}, L = {}, C = {} to {}",
        features.len(),
        features.scales(),
        features.slots(),
        features.num_classes(),
        out.display()
    );
    Ok(())
}

fn cv(run: &RunArgs, report: Option<&Path>) -> Result<()> {
    let features: FeatureDataset64 = read_features(&run.features)?;
    let (model, train) = configs(run, &features)?;
    let result = cross_validate(&features, &model, &train, run.jobs)?;
    if let Some(path) = report {
        result.write(path)?;
    } else {
        print!("{}", result.to_csv());
    }
    println!("{}", result.summary_line());
    Ok(())
}

fn ablate(run: &RunArgs) -> Result<()> {
    let features: FeatureDataset64 = read_features(&run.features)?;
    let (model, train) = configs(run, &features)?;
    let mut rows = vec![("full", model.clone())];
    rows.extend(Ablation::ALL.iter().map(|&a| (a.name(), model.ablation_variant(a))));
    println!("{:<12} {:>8} {:>8}", "variant", "mean", "std");
    for (name, config) in rows {
        let r = cross_validate(&features, &config, &train, run.jobs)?;
        println!("{name:<12} {:>8.4} {:>8.4}", r.mean, r.std);
    }
    Ok(())
}

fn synth(kind: &str, per_class: usize, sizes: (usize, usize), seed: u64, out: &Path, name: &str) -> Result<()> {
    let kind: SyntheticKind = kind.parse()?;
    let ds = generate_synthetic(kind, per_class, sizes, seed)?;
    std::fs::create_dir_all(out)?;
    write_tu_dataset(&ds, out, name)?;
    println!("wrote {} graphs to {}", ds.len(), out.display());
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Extract { data, name, k, mode, out, jobs } => extract(&data, name, k, &mode, &out, jobs),
        Command::Cv { run, report } => cv(&run, report.as_deref()),
        Command::Ablate { run } => ablate(&run),
        Command::Verify { quick, seed } => {
            let reports = verify::run_suites(quick, seed);
            for r in &reports {
                println!("{r}");
            }
            if reports.iter().all(verify::SuiteReport::passed) {
                return EXIT_OK;
            }
            eprintln!("verification failed");
            return EXIT_VERIFY;
        }
        Command::Synth { kind, per_class, min_size, max_size, seed, out, name } => {
            synth(&kind, per_class, (min_size, max_size), seed, &out, &name)
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let mut m = RpnetConfig::new(4, 2);
        let mut t = TrainConfig::default();
        apply_override(&mut m, &mut t, "model.encoder_widths=32,16,8").unwrap();
        apply_override(&mut m, &mut t, "train.initial_lr = 0.005").unwrap();
        apply_override(&mut m, &mut t, "model.norm=batch").unwrap();
        apply_override(&mut m, &mut t, "model.head_widths=").unwrap();
        assert_eq!(m.encoder_widths, vec![32, 16, 8]);
        assert_eq!(t.initial_lr, 0.005);
        assert_eq!(m.norm, crate::NormKind::Batch);
        assert!(m.head_widths.is_empty());
        for bad in ["model.depth=3", "train.patience", "train.patience=x", "model.norm=group"] {
            let e = apply_override(&mut m, &mut t, bad).unwrap_err();
            assert_eq!(exit_code(&e), EXIT_USAGE, "{bad}");
        }
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["rpnet"]), EXIT_USAGE);
        assert_eq!(run(["rpnet", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["rpnet", "cv"]), EXIT_USAGE);
        assert_eq!(run(["rpnet", "--help"]), EXIT_OK);
    }
}

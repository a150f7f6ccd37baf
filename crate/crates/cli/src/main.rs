use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use regex::Regex;
use speechaug::align::{
    build_factor_table, default_silence_labels, parse_ctm_with, partition_stats, speaker_stats,
    FactorTable, SpeakerPattern,
};
use speechaug::model::{
    gradient_check, save_params, train_sat, GradCheckOptions, LhucMode, LhucPlacement, MtlWeights,
    NetworkConfig, SyntheticCorpus, SyntheticSpec, TrainOptions,
};
use speechaug::pipeline::{
    build_plan, read_manifest, read_plan, run_plan, summarize, write_manifest, write_plan,
    MethodParams, PipelineConfig, UtteranceRecord,
};
use speechaug::speed::{speed_perturb, ResamplerParams, SpeedFactor};
use speechaug::vtlp::{vtlp_perturb, WarpSpec, DEFAULT_BOUNDARY_HZ};
use speechaug::wsola::{tempo_perturb, TempoFactor, WsolaParams};
use speechaug::{read_wav, write_wav, AudioBuffer};

#[derive(Parser)]
#[command(name = "speechaug", version, about = "Speech data augmentation for disordered speech")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    input: PathBuf,
    output: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Warp the frequency axis of one file.
    Vtlp {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_BOUNDARY_HZ)]
        boundary_hz: f64,
    },
    /// Change the tempo of one file without changing its pitch.
    Tempo {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        factor: f64,
        #[arg(long, default_value_t = 32.0)]
        frame_ms: f64,
        #[arg(long, default_value_t = 8.0)]
        tolerance_ms: f64,
    },
    /// Resample one file so it plays `factor` times faster.
    Speed {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        factor: f64,
    },
    /// Build a job plan from a manifest and a config file.
    Plan {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the plan path in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Execute a plan.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Where to write the manifest of produced files.
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },
    /// Print hours per group and per method for one or more manifests.
    Summarize {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
    /// Compute speaker-dependent tempo factors from a CTM alignment.
    Factors {
        #[arg(long)]
        ctm: PathBuf,
        /// Writes to stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Regex whose first capture group is the speaker id.
        #[arg(long)]
        speaker_regex: Option<String>,
        /// Speakers matching this regex are controls.
        #[arg(long, default_value = "^C")]
        control_regex: String,
    },
    /// Toy acoustic model on synthetic data.
    #[command(subcommand)]
    Model(ModelCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum LhucArg {
    Off,
    Frozen,
    Sat,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Before,
    After,
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Train on a seeded synthetic multi-speaker corpus.
    Train {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        speakers: usize,
        #[arg(long, default_value_t = 10)]
        batches_per_speaker: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = LhucArg::Sat)]
        lhuc: LhucArg,
        #[arg(long, value_enum, default_value_t = PlacementArg::Before)]
        placement: PlacementArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
}

fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: PipelineConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

fn single_file(io: &Io, f: impl FnOnce(&AudioBuffer) -> speechaug::Result<AudioBuffer>) -> Result<()> {
    let input = read_wav(&io.input)?;
    let output = f(&input)?;
    write_wav(&output, &io.output)?;
    eprintln!(
        "{} -> {}: {:.3} s -> {:.3} s",
        io.input.display(),
        io.output.display(),
        input.duration_seconds(),
        output.duration_seconds()
    );
    Ok(())
}

fn cmd_plan(config: &Path, output: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(config)?;
    let manifest = read_manifest(&cfg.manifest)?;
    let table = cfg.factor_table.as_ref().map(FactorTable::read).transpose()?;
    let dys_set = cfg.dys_set();
    let plan = build_plan(
        &manifest,
        cfg.method,
        dys_set.as_ref(),
        table.as_ref(),
        cfg.ctl_multiplicity,
    )?;
    let Some(out) = output.or(cfg.plan) else {
        bail!("no plan path: pass --output or set `plan` in the config");
    };
    write_plan(&out, &plan)?;
    eprintln!("{} jobs -> {}", plan.len(), out.display());
    Ok(())
}

fn cmd_run(
    config: Option<PathBuf>,
    plan: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
    manifest_out: Option<PathBuf>,
) -> Result<bool> {
    let cfg = config.as_deref().map(load_config).transpose()?;
    let params = match &cfg {
        Some(c) => c.method_params()?,
        None => MethodParams::default(),
    };
    let plan_path = plan
        .or_else(|| cfg.as_ref().and_then(|c| c.plan.clone()))
        .context("no plan: pass --plan or set `plan` in the config")?;
    let out_dir = output_dir
        .or_else(|| cfg.as_ref().and_then(|c| c.output_dir.clone()))
        .context("no output directory: pass --output-dir or set `output_dir` in the config")?;
    let workers = workers.or(cfg.as_ref().map(|c| c.workers)).unwrap_or(1);
    let jobs = read_plan(&plan_path)?;
    let report = run_plan(&jobs, &params, &out_dir, workers)?;
    if let Some(path) = manifest_out {
        write_manifest(&path, &report.records)?;
    }
    for f in &report.failures {
        eprintln!("FAILED {}: {}", f.output_id, f.error);
    }
    eprintln!(
        "{} of {} jobs succeeded",
        report.records.len(),
        jobs.len()
    );
    Ok(report.is_success())
}

fn cmd_summarize(manifests: &[PathBuf]) -> Result<()> {
    let mut records: Vec<UtteranceRecord> = Vec::new();
    for m in manifests {
        records.extend(read_manifest(m)?);
    }
    println!("{}", serde_json::to_string_pretty(&summarize(&records))?);
    Ok(())
}

fn cmd_factors(
    ctm: &Path,
    output: Option<PathBuf>,
    speaker_regex: Option<String>,
    control_regex: &str,
) -> Result<()> {
    let pattern = match speaker_regex {
        Some(re) => SpeakerPattern::regex(&re)?,
        None => SpeakerPattern::default(),
    };
    let control = Regex::new(control_regex).context("bad --control-regex")?;
    let segments = parse_ctm_with(ctm, &pattern)?;
    let stats = speaker_stats(&segments, &default_silence_labels());
    let (ctl, dys) = partition_stats(stats, |s| control.is_match(s));
    let table = build_factor_table(&ctl, &dys)?;
    eprintln!(
        "reference mean phone duration {:.6} s from {} control speakers",
        table.reference_duration,
        ctl.len()
    );
    match output {
        Some(path) => table.write(&path)?,
        None => print!("{}", table.to_tsv()),
    }
    Ok(())
}

fn cmd_model(cmd: ModelCommand) -> Result<()> {
    match cmd {
        ModelCommand::Train {
            seed,
            speakers,
            batches_per_speaker,
            epochs,
            learning_rate,
            lambda,
            lhuc,
            placement,
            output,
        } => {
            let mut corpus = SyntheticCorpus::new(SyntheticSpec {
                seed,
                ..Default::default()
            });
            let mut batches = Vec::new();
            for s in 0..speakers {
                let gains = corpus.random_gains(0.7);
                batches.extend(corpus.batches(&format!("S{s:02}"), &gains, batches_per_speaker));
            }
            let config = NetworkConfig {
                lhuc_placement: match placement {
                    PlacementArg::Before => LhucPlacement::BeforeBatchNorm,
                    PlacementArg::After => LhucPlacement::AfterBatchNorm,
                },
                ..NetworkConfig::toy(corpus.input_dim())
            };
            let options = TrainOptions {
                epochs,
                learning_rate,
                weights: MtlWeights::new(lambda)?,
                lhuc: match lhuc {
                    LhucArg::Off => LhucMode::Off,
                    LhucArg::Frozen => LhucMode::Frozen,
                    LhucArg::Sat => LhucMode::Sat,
                },
                seed,
                ..Default::default()
            };
            let outcome = train_sat(&batches, &config, &options)?;
            for (e, loss) in outcome.epoch_losses.iter().enumerate() {
                println!("epoch {:>3}  loss {loss:.6}", e + 1);
            }
            println!("LHUC updates: {}", outcome.lhuc_updates.len());
            if let Some(path) = output {
                save_params(&outcome.params, &path)?;
                eprintln!("model -> {}", path.display());
            }
        }
        ModelCommand::Gradcheck { seed, lambda } => {
            let report = gradient_check(
                &NetworkConfig::toy(24),
                &GradCheckOptions {
                    seed,
                    weights: MtlWeights::new(lambda)?,
                    ..Default::default()
                },
            )?;
            println!(
                "checked {} parameters and {} LHUC entries; max relative error {:.3e} (LHUC {:.3e})",
                report.n_params_checked,
                report.n_lhuc_checked,
                report.max_relative_error,
                report.max_lhuc_relative_error
            );
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Vtlp {
            io,
            alpha,
            boundary_hz,
        } => {
            let spec = WarpSpec::new(alpha, boundary_hz)?;
            single_file(&io, |b| vtlp_perturb(b, &spec))?;
        }
        Command::Tempo {
            io,
            factor,
            frame_ms,
            tolerance_ms,
        } => {
            let factor = TempoFactor::new(factor)?;
            single_file(&io, |b| {
                let params = WsolaParams::from_ms(b.sample_rate_hz(), frame_ms, tolerance_ms)?;
                tempo_perturb(b, factor, &params)
            })?;
        }
        Command::Speed { io, factor } => {
            let factor = SpeedFactor::new(factor)?;
            single_file(&io, |b| speed_perturb(b, factor, &ResamplerParams::default()))?;
        }
        Command::Plan { config, output } => cmd_plan(&config, output)?,
        Command::Run {
            config,
            plan,
            output_dir,
            workers,
            manifest_out,
        } => return cmd_run(config, plan, output_dir, workers, manifest_out),
        Command::Summarize { manifests } => cmd_summarize(&manifests)?,
        Command::Factors {
            ctm,
            output,
            speaker_regex,
            control_regex,
        } => cmd_factors(&ctm, output, speaker_regex, &control_regex)?,
        Command::Model(cmd) => cmd_model(cmd)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

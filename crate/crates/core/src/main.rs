use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use opgan::config::RunConfig;
use opgan::corruption::{
    build_dataset, load_clean_dir, write_toy_corpus, ArtifactBank, DatasetComposition, DatasetOptions, SkippedFile,
    ToyCorpusSpec, DEFAULT_SDR_MAX, DEFAULT_SDR_MIN,
};
use opgan::error::{Error, Result};
use opgan::manifest::{Condition, Manifest, Split};
use opgan::metrics::{evaluate_set, restored_path_for, write_csv_summary, Metric};
use opgan::models::Network;
use opgan::trainer::{restore, train_from_manifest, Checkpoint};
use opgan::wav::{read_wav, write_wav};
use opgan::SEGMENT_LEN;

/// Reference sizes of the published models, in parameters.
const REF_G_PARAMS: usize = 977_000;
const REF_D_PARAMS: usize = 133_000;
const REF_TOTAL_PARAMS: usize = 1_110_000;

#[derive(Parser)]
#[command(name = "opgan", version, about = "Blind audio restoration with operational GANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic toy corpus (clean speech-like audio, RIRs, mixtures).
    Synth(SynthArgs),
    /// Build a corrupted dataset and its manifest from clean audio.
    Corrupt(CorruptArgs),
    /// Train a generator/discriminator pair on a manifest.
    Train(TrainArgs),
    /// Restore one WAV file, or every corrupted file of a manifest split.
    Restore(RestoreArgs),
    /// Score restored files against the clean references of a manifest.
    Eval(EvalArgs),
    /// Print model shapes, parameter counts and inference speed.
    Info(InfoArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 12)]
    clean_files: usize,
    /// Length of each clean file in samples.
    #[arg(long, default_value_t = SEGMENT_LEN)]
    clean_len: usize,
    #[arg(long, default_value_t = 4)]
    rirs: usize,
    #[arg(long, default_value_t = 4)]
    mixtures: usize,
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    clean_dir: PathBuf,
    #[arg(long)]
    rir_dir: Option<PathBuf>,
    #[arg(long)]
    mixture_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// `timit`, `gtzan`, or entries like `all:4,awgn:2,val.all:2`.
    #[arg(long, default_value = "timit")]
    composition: String,
    #[arg(long, default_value_t = DEFAULT_SDR_MIN, allow_negative_numbers = true)]
    sdr_min: f64,
    #[arg(long, default_value_t = DEFAULT_SDR_MAX, allow_negative_numbers = true)]
    sdr_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for best.ckpt, last.ckpt and train_log.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct RestoreArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long = "in", requires = "out", conflicts_with = "manifest")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, requires = "out_dir")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Split to restore when reading a manifest.
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    restored_dir: PathBuf,
    #[arg(long, default_value = "sdr,segsnr,fwssnr,stoi")]
    metrics: String,
    /// JSON report path; a CSV summary is written next to it.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Sample rate used for the timing input when the checkpoint records none.
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
}

fn report_skipped(skipped: &[SkippedFile]) {
    for s in skipped {
        warn!("skipping {}: {}", s.path.display(), s.reason);
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = ToyCorpusSpec {
        clean_files: a.clean_files,
        clean_len: a.clean_len,
        rirs: a.rirs,
        mixtures: a.mixtures,
        sample_rate: a.sample_rate,
        seed: a.seed,
        ..ToyCorpusSpec::default()
    };
    write_toy_corpus(&a.out_dir, &spec)?;
    println!(
        "wrote {} clean files, {} RIRs and {} mixtures under {}",
        a.clean_files,
        a.rirs,
        a.mixtures,
        a.out_dir.display()
    );
    Ok(())
}

fn cmd_corrupt(a: CorruptArgs) -> Result<()> {
    let comp = DatasetComposition::parse(&a.composition)?;
    let (corpus, mut skipped) = load_clean_dir(&a.clean_dir)?;
    let (bank, bank_skipped) =
        ArtifactBank::load(a.rir_dir.as_deref(), a.mixture_dir.as_deref(), corpus.sample_rate, SEGMENT_LEN)?;
    let files_seen = corpus.files_seen + bank.rirs.len() + bank.mixtures.len() + bank_skipped.len();
    skipped.extend(bank_skipped);
    report_skipped(&skipped);
    let sample_rate = corpus
        .sample_rate
        .or(bank.sample_rate)
        .ok_or_else(|| Error::Config(format!("no readable WAV files in {}", a.clean_dir.display())))?;
    let opts = DatasetOptions {
        sdr_min: a.sdr_min,
        sdr_max: a.sdr_max,
        ..DatasetOptions::new(a.seed, sample_rate)
    };
    let summary = build_dataset(&corpus, &bank, &comp, &opts, &a.out_dir)?;
    println!("manifest: {}", summary.manifest_path.display());
    for split in Split::ALL {
        let counts: Vec<String> = Condition::ALL
            .iter()
            .map(|&c| format!("{c}={}", summary.count(split, c)))
            .collect();
        println!("{split:>5}: {}", counts.join(" "));
    }
    println!("SDR histogram (dB):");
    for (lo, n) in summary.sdr_histogram() {
        println!("  [{lo:+.0}, {:+.0}) {n}", lo + 2.0);
    }
    if skipped.len() * 10 > files_seen {
        return Err(Error::Input(format!("{} of {files_seen} input files were skipped", skipped.len())));
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut rc = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        rc.train.seed = s;
    }
    if let Some(n) = a.max_iterations {
        rc.train.max_iterations = n;
    }
    let manifest_path = a
        .manifest
        .or(rc.manifest)
        .ok_or_else(|| Error::Config("no manifest given (--manifest or `manifest` in the config)".into()))?;
    let out = a
        .out
        .or(rc.train.checkpoint_dir.clone())
        .or(rc.out_dir)
        .ok_or_else(|| Error::Config("no output directory given (--out or `checkpoint_dir` in the config)".into()))?;
    rc.train.validate()?;
    let manifest = Manifest::read(&manifest_path)?;
    let outcome = train_from_manifest(&manifest, &rc.train, |e| {
        let val = e.val_sdr.map(|v| format!(" val_sdr={v:.3}")).unwrap_or_default();
        info!(
            "iter {} d={:.4} adv={:.4} td={:.5} fd={:.4} total={:.4} ({:.2}s){val}",
            e.iteration, e.losses.d_loss, e.losses.g_adv, e.losses.loss_td, e.losses.loss_fd, e.losses.total, e.seconds
        );
    })?;
    outcome.write(&out)?;
    println!("baseline validation SDR: {:.3} dB", outcome.baseline_val_sdr);
    println!("final validation SDR:    {:.3} dB", outcome.last_val_sdr);
    println!(
        "best validation SDR:     {:.3} dB (iteration {})",
        outcome.best_val_sdr, outcome.best_iteration
    );
    println!("checkpoints and log written to {}", out.display());
    Ok(())
}

fn restore_file(ckpt: &Checkpoint, g: &opgan::models::Generator, input: &Path, output: &Path) -> Result<()> {
    let wav = read_wav(input)?;
    if let Some(rate) = ckpt.sample_rate {
        if rate != wav.sample_rate {
            warn!(
                "{} is at {} Hz but the model was trained at {rate} Hz",
                input.display(),
                wav.sample_rate
            );
        }
    }
    let y = restore(&wav.samples, g)?;
    write_wav(output, wav.sample_rate, &y)
}

fn cmd_restore(a: RestoreArgs) -> Result<()> {
    let ckpt = Checkpoint::read(&a.checkpoint)?;
    let g = ckpt.generator()?;
    match (a.input, a.out, a.manifest, a.out_dir) {
        (Some(input), Some(out), None, _) => {
            restore_file(&ckpt, &g, &input, &out)?;
            println!("restored {} -> {}", input.display(), out.display());
        }
        (None, _, Some(manifest), Some(out_dir)) => {
            let split: Split = a.split.parse()?;
            let m = Manifest::read(&manifest)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let mut n = 0;
            for r in m.split(split) {
                restore_file(&ckpt, &g, &m.resolve(&r.corrupted_path), &restored_path_for(r, &out_dir))?;
                n += 1;
            }
            println!("restored {n} {split} files into {}", out_dir.display());
        }
        _ => return Err(Error::Config("give either --in/--out or --manifest/--out-dir".into())),
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let metrics = Metric::parse_list(&a.metrics)?;
    let split = a.split.as_deref().map(str::parse).transpose()?;
    let manifest = Manifest::read(&a.manifest)?;
    let report = evaluate_set(&manifest, &a.restored_dir, &metrics, split)?;
    report.write_json(&a.report)?;
    let csv = a.report.with_extension("csv");
    write_csv_summary(&report, &csv)?;
    for s in &report.summary {
        println!(
            "{:>5} {:>7} n={:<5} corrupted={:>8.3} restored={:>8.3}",
            s.split.as_str(),
            s.metric.name(),
            s.count,
            s.corrupted_mean,
            s.restored_mean
        );
    }
    println!("report: {} and {}", a.report.display(), csv.display());
    if report.failed > 0 {
        for i in report.items.iter().filter(|i| i.error.is_some()) {
            warn!("{}: {}", i.restored_path.display(), i.error.as_deref().unwrap_or_default());
        }
        return Err(Error::Input(format!("{} item(s) could not be scored", report.failed)));
    }
    Ok(())
}

fn pct_diff(n: usize, reference: usize) -> f64 {
    100.0 * (n as f64 - reference as f64) / reference as f64
}

fn cmd_info(a: InfoArgs) -> Result<()> {
    let ckpt = Checkpoint::read(&a.checkpoint)?;
    let g = ckpt.generator()?;
    println!("order Q: {}", ckpt.order);
    if let Some(r) = ckpt.sample_rate {
        println!("training sample rate: {r} Hz");
    }
    for p in &ckpt.params.arrays {
        println!("  {:<18} {:?}", p.name, p.dims);
    }
    let (gp, dp) = (ckpt.generator_params(), ckpt.discriminator_params());
    println!("generator params:     {gp} ({:+.1}% vs {REF_G_PARAMS})", pct_diff(gp, REF_G_PARAMS));
    println!("discriminator params: {dp} ({:+.1}% vs {REF_D_PARAMS})", pct_diff(dp, REF_D_PARAMS));
    println!(
        "total params:         {} ({:+.1}% vs {REF_TOTAL_PARAMS})",
        gp + dp,
        pct_diff(gp + dp, REF_TOTAL_PARAMS)
    );
    debug_assert_eq!(gp, g.param_count());

    let rate = ckpt.sample_rate.unwrap_or(a.sample_rate) as usize;
    let x: Vec<f32> = (0..rate).map(|i| (i as f32 * 0.05).sin() * 0.5).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let ms = pool.install(|| -> Result<f64> {
        for _ in 0..2 {
            restore(&x, &g)?;
        }
        let start = Instant::now();
        for _ in 0..a.runs.max(1) {
            std::hint::black_box(restore(&x, &g)?);
        }
        Ok(start.elapsed().as_secs_f64() * 1e3 / a.runs.max(1) as f64)
    })?;
    println!("restore time: {ms:.1} ms per second of audio (single thread, {} runs)", a.runs.max(1));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Corrupt(a) => cmd_corrupt(a),
        Command::Train(a) => cmd_train(a),
        Command::Restore(a) => cmd_restore(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Info(a) => cmd_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

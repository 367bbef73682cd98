//! `blindmod` command-line tool.
//!
//! Settings resolve as defaults, then the `--config` TOML file, then flags.
//! Signals and frames are stored in the IQFR container; see the README for
//! the byte layout.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use blindmod::dataharness::{self, iqfr::UNLABELED, Dataset, IqFrames};
use blindmod::lstm::{self, checkpoint, ModelSidecar};
use blindmod::pipeline::{self, PipelineConfig};
use blindmod::sigsynth::{generate_rf, ModulationScheme};
use blindmod::{Network, Weight};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "blindmod", version, about = "Blind carrier estimation and LSTM modulation recognition")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesise an RF capture and write it as a one-frame IQFR file.
    Synth(Opts),
    /// Estimate bandwidth, carrier and oversampling rate of a capture.
    Estimate(InputOpts),
    /// Convert a capture to baseband and write its frames.
    Convert(InputOpts),
    /// Generate a labelled dataset directory.
    MakeDataset(Opts),
    /// Train a model on a dataset directory.
    Train(InputOpts),
    /// Evaluate a model on a dataset's test partition.
    Eval(InputOpts),
    /// Classify a capture: estimate, convert and classify.
    Pipeline(InputOpts),
    /// Time single-frame inference.
    Bench(BenchOpts),
}

#[derive(Args, Debug, Clone, Default)]
struct Opts {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long = "snr-db", value_name = "F", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, value_name = "NAME")]
    scheme: Option<ModulationScheme>,
    #[arg(long = "symbol-rate", value_name = "F")]
    symbol_rate: Option<f64>,
    #[arg(long, value_name = "F")]
    rolloff: Option<f64>,
    #[arg(long, value_name = "F")]
    carrier: Option<f64>,
    #[arg(long, value_name = "N")]
    nfft: Option<usize>,
    #[arg(long, value_name = "N")]
    decim: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    #[arg(long = "dump-spectrum", value_name = "PATH")]
    dump_spectrum: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "N")]
    batch: Option<usize>,
    #[arg(long, value_name = "F")]
    lr: Option<f64>,
}

#[derive(Args, Debug)]
struct InputOpts {
    /// Input file or dataset directory.
    input: PathBuf,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug)]
struct BenchOpts {
    /// Dataset directory supplying the frames; synthetic frames otherwise.
    input: Option<PathBuf>,
    #[command(flatten)]
    opts: Opts,
}

impl Opts {
    /// Defaults, then the config file, then flags. `--rolloff` sets both the
    /// synthesis roll-off and the estimator's assumption.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
            c.train.seed = v;
        }
        if let Some(v) = self.snr_db {
            c.synth.params.snr_db = v;
            c.dataset.grid.snr_db = vec![v];
        }
        if let Some(v) = self.scheme {
            c.synth.scheme = v;
        }
        if let Some(v) = self.symbol_rate {
            c.synth.params.symbol_rate = v;
        }
        if let Some(v) = self.rolloff {
            c.synth.params.rolloff = v;
            c.estimator.rolloff = v;
        }
        if let Some(v) = self.carrier {
            c.synth.params.carrier = v;
            c.dataset.grid.carrier = v;
        }
        if let Some(v) = self.nfft {
            c.estimator.n_fft = v;
        }
        if let Some(v) = self.decim {
            c.converter.decimation = v;
        }
        if let Some(v) = &self.model {
            c.paths.model = v.clone();
        }
        if let Some(v) = self.epochs {
            c.train.epochs = v;
        }
        if let Some(v) = self.batch {
            c.train.batch_size = v;
        }
        if let Some(v) = self.lr {
            c.train.learning_rate = v;
        }
        Ok(c)
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required")
    }
}

fn class_names(classes: &[ModulationScheme]) -> Vec<String> {
    classes.iter().map(|s| s.name().to_string()).collect()
}

fn read_signal(path: &Path, cfg: &PipelineConfig) -> Result<blindmod::Signal> {
    let f = IqFrames::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(f.to_signal(cfg.synth.params.sample_rate))
}

fn load_model(cfg: &PipelineConfig) -> Result<(Network, Vec<String>)> {
    let path = &cfg.paths.model;
    let (net, side) =
        checkpoint::load_model::<Weight>(path).with_context(|| format!("reading model {}", path.display()))?;
    let names = match side {
        Some(s) => s.classes,
        None => class_names(&cfg.dataset.classes),
    };
    Ok((net, names))
}

fn synth(o: &Opts) -> Result<()> {
    let cfg = o.resolve()?;
    let s = &cfg.synth;
    let x = generate_rf::<f64>(s.scheme, &s.params, s.samples, cfg.seed)?;
    IqFrames::from_signal(&x, s.scheme.label() as u16).save(o.out()?)?;
    println!("wrote {} samples of {} to {}", x.len(), s.scheme, o.out()?.display());
    Ok(())
}

fn estimate(i: &InputOpts) -> Result<()> {
    let cfg = i.opts.resolve()?;
    let x = read_signal(&i.input, &cfg)?;
    let (est, spec) = pipeline::estimate(&x, &cfg)?;
    if let Some(p) = &i.opts.dump_spectrum {
        spec.write_csv(BufWriter::new(File::create(p)?))?;
    }
    println!("bandwidth   {:.6}", est.bandwidth);
    println!("carrier     {:.6}", est.carrier);
    println!("symbol_rate {:.6}", est.symbol_rate);
    println!("sps         {:.4}", est.sps);
    println!(
        "band        bins {}..={} (noise floor {:.2} dB, peak {:.2} dB)",
        est.band.band_start, est.band.band_end, est.band.noise_floor_db, est.band.peak_db
    );
    Ok(())
}

fn convert(i: &InputOpts) -> Result<()> {
    let cfg = i.opts.resolve()?;
    let input = IqFrames::load(&i.input).with_context(|| format!("reading {}", i.input.display()))?;
    let x = input.to_signal(cfg.synth.params.sample_rate);
    let (est, _) = pipeline::estimate(&x, &cfg)?;
    let frames = pipeline::convert(&x, &est, &cfg)?;
    let label = input.labels.first().copied().unwrap_or(UNLABELED);
    let n = frames.len_of(ndarray::Axis(0));
    let out = IqFrames {
        frames: frames.mapv(|v| v as f32),
        labels: vec![label; n],
    };
    out.save(i.opts.out()?)?;
    println!("wrote {n} frames of {} to {}", cfg.converter.frame_len, i.opts.out()?.display());
    Ok(())
}

fn make_dataset(o: &Opts) -> Result<()> {
    let cfg = o.resolve()?;
    let dir = o.out.clone().unwrap_or(cfg.paths.dataset_dir.clone());
    let d = dataharness::generate_dataset(&cfg.manifest())?;
    d.save(&dir)?;
    let split = d.manifest.split.as_ref().expect("generation computes the split");
    let pe = d.manifest.pe_report();
    println!(
        "wrote {} frames ({} signals) to {}",
        d.frames.count(),
        d.manifest.signals.len(),
        dir.display()
    );
    println!("split       {}/{}/{}", split.train.len(), split.val.len(), split.test.len());
    println!(
        "estimation  {} of {} signals outside tolerance (carrier {}, bandwidth {})",
        pe.misses, pe.signals, pe.carrier_misses, pe.bandwidth_misses
    );
    if !d.manifest.failures.is_empty() {
        println!("failures    {} (listed in the manifest)", d.manifest.failures.len());
    }
    Ok(())
}

fn train(i: &InputOpts) -> Result<()> {
    let cfg = i.opts.resolve()?;
    let model = i.opts.out.clone().unwrap_or(cfg.paths.model.clone());
    let d = Dataset::load(&i.input).with_context(|| format!("reading dataset {}", i.input.display()))?;
    let (tr, va, te) = d.partitions()?;
    let (net, history) = lstm::train_with(&tr, Some(&va), &cfg.train, |e| {
        println!(
            "epoch {:>3} loss {:.4} acc {:.4} val_loss {:.4} val_acc {:.4}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            e.val_loss.unwrap_or(f64::NAN),
            e.val_accuracy.unwrap_or(f64::NAN)
        );
    })?;
    let ev = lstm::evaluate(&net, &te)?;
    println!("test accuracy {:.4}", ev.accuracy);
    let side = ModelSidecar {
        classes: class_names(&d.manifest.classes),
        config: cfg.train,
        history,
        test: Some(ev),
    };
    checkpoint::save_model(&model, &net, &side)?;
    println!("wrote {}", model.display());
    Ok(())
}

fn eval(i: &InputOpts) -> Result<()> {
    let cfg = i.opts.resolve()?;
    let (net, names) = load_model(&cfg)?;
    let d = Dataset::load(&i.input).with_context(|| format!("reading dataset {}", i.input.display()))?;
    let (_, _, te) = d.partitions()?;
    let ev = lstm::evaluate(&net, &te)?;
    println!("accuracy {:.4} ({} frames)", ev.accuracy, ev.total);
    print!("{:>8}", "");
    for n in &names {
        print!("{n:>8}");
    }
    println!("{:>9}", "acc");
    for (k, row) in ev.confusion.iter().enumerate() {
        print!("{:>8}", names[k]);
        for v in row {
            print!("{v:>8}");
        }
        println!("{:>9.4}", ev.per_class_accuracy()[k]);
    }
    Ok(())
}

fn run_pipeline(i: &InputOpts) -> Result<()> {
    let cfg = i.opts.resolve()?;
    let (net, names) = load_model(&cfg)?;
    let x = read_signal(&i.input, &cfg)?;
    let out = pipeline::run(&x, &net, &names, &cfg)?;
    println!("{} {:.4}", out.classification.label, out.classification.probability);
    Ok(())
}

fn bench(b: &BenchOpts) -> Result<()> {
    let cfg = b.opts.resolve()?;
    let (net, _) = load_model(&cfg)?;
    let frames = match &b.input {
        Some(dir) => {
            let d = Dataset::load(dir).with_context(|| format!("reading dataset {}", dir.display()))?;
            d.partitions()?.2.frames
        }
        None => {
            let x = generate_rf::<f64>(cfg.synth.scheme, &cfg.synth.params, cfg.synth.samples, cfg.seed)?;
            let (est, _) = pipeline::estimate(&x, &cfg)?;
            pipeline::convert(&x, &est, &cfg)?.mapv(|v| v as f32)
        }
    };
    let report = dataharness::benchmark_inference(&net, frames.view(), 10)?;
    println!("{report}");
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("BLINDMOD_THREADS") {
        let n: usize = v.parse().with_context(|| format!("BLINDMOD_THREADS={v} is not a count"))?;
        if n == 0 {
            bail!("BLINDMOD_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Synth(o) => synth(o),
        Command::Estimate(i) => estimate(i),
        Command::Convert(i) => convert(i),
        Command::MakeDataset(o) => make_dataset(o),
        Command::Train(i) => train(i),
        Command::Eval(i) => eval(i),
        Command::Pipeline(i) => run_pipeline(i),
        Command::Bench(b) => bench(b),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

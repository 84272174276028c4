use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use nclf_core::algebra::{decompose as split_tensor, CubicalTensor, SymmetryComponents};
use nclf_core::data::load_movielens;
use nclf_core::evaluation::{cross_validate, CvProtocol, FoldMetrics, GridPoint};
use nclf_core::models::io::{read_model, write_model};
use nclf_core::models::logistic;
use nclf_core::reproduce::{run_benchmarks, Benchmark};
use nclf_core::{estimate_biases, init_params, sgd_train, LatentModel, ModelShape};
use serde::Serialize;

use crate::config::{resolve, RunConfig, DATA_ROOT_VAR};
use crate::CliError;

fn load_config(path: &Path, needs_dataset: bool) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::load(path)?;
    cfg.validate(needs_dataset)?;
    let cfg = cfg.effective()?;
    eprint!("# effective configuration\n{}", cfg.to_toml());
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn print_config(path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(path)?;
    cfg.validate(false)?;
    print!("{}", cfg.effective()?.to_toml());
    Ok(())
}

pub fn train(path: &Path, model_out: Option<PathBuf>, log_out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_config(path, true)?;
    let model_out = model_out
        .or(cfg.output.model.clone())
        .ok_or_else(|| CliError::Config("output.model: required for train".into()))?;
    let log_out = log_out.or(cfg.output.log.clone());
    let data = cfg.load_dataset()?;
    let dims = data.dims();
    println!("loaded {} events, dims {dims:?}", data.len());

    let shape = cfg.model.shape()?;
    let mut model = init_params(shape, dims, cfg.train.seed, cfg.train.init_scale)?;
    *model.biases_mut() = estimate_biases(dims, &data.events)?;
    let report = sgd_train(&mut model, &data.events, &cfg.train, None)?;

    if let Some(log) = log_out {
        let mut w = create(&log)?;
        for r in &report.epochs {
            serde_json::to_writer(&mut w, r).map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    let mut w = create(&model_out)?;
    write_model(&model, &mut w)?;
    w.flush()?;
    if let Some(last) = report.epochs.last() {
        println!(
            "{shape}: {} epochs, final mean log-loss {:.5}, {:.2} s",
            report.epochs.len(),
            last.train_loss,
            report.wall_time.as_secs_f64()
        );
    }
    println!("model written to {}", model_out.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalRecord {
    model: String,
    events: usize,
    #[serde(flatten)]
    metrics: FoldMetrics,
}

pub fn evaluate(path: &Path, model_in: Option<PathBuf>, metrics_out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_config(path, true)?;
    let model_in = model_in
        .or(cfg.output.model.clone())
        .ok_or_else(|| CliError::Config("output.model: a model file is required".into()))?;
    let model = read_model(
        File::open(&model_in).map_err(|e| CliError::Config(format!("model {}: {e}", model_in.display())))?,
    )?;
    let data = cfg.load_dataset()?;
    if model.dims() != data.dims() {
        return Err(CliError::Mismatch(format!(
            "model has dims {:?}, dataset has {:?}",
            model.dims(),
            data.dims()
        )));
    }
    let (probs, labels): (Vec<f64>, Vec<bool>) = data
        .events
        .iter()
        .map(|e| {
            let (i, j, k) = e.index();
            model.predict_logodds(i, j, k).map(|t| (logistic(t), e.y))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    let metrics = FoldMetrics::compute(&probs, &labels)?;
    println!("{:<24} {:>7} {:>7} {:>7}", "Model", "AUC", "L1", "L2");
    println!(
        "{:<24} {:>7.4} {:>7.4} {:>7.4}",
        model.shape().to_string(),
        metrics.auc,
        metrics.l1,
        metrics.l2
    );
    if let Some(out) = metrics_out.or(cfg.output.metrics.clone()) {
        let record = EvalRecord {
            model: model.shape().to_string(),
            events: data.len(),
            metrics,
        };
        write_json(&out, &record)?;
    }
    Ok(())
}

pub fn cv(path: &Path, metrics_out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), CliError> {
    let cfg = load_config(path, true)?;
    let data = cfg.load_dataset()?;
    let shape = cfg.model.shape()?;
    let grid: Vec<GridPoint> = if shape == ModelShape::Bias {
        vec![GridPoint { shape, lambda: 0.0 }]
    } else {
        cfg.cv
            .lambda_grid
            .iter()
            .map(|&lambda| GridPoint { shape, lambda })
            .collect()
    };
    let mut protocol = cfg.cv.protocol();
    if let Some(j) = jobs {
        protocol.jobs = j;
    }
    let out = cross_validate(&data, &grid, &cfg.train, &protocol)?;
    for (p, auc) in &out.selection {
        println!("lambda {:<10} selection AUC {auc:.4}", p.lambda);
    }
    let m = &out.summary;
    println!("chosen lambda {}", out.chosen.lambda);
    println!(
        "{:<24} {:>7} {:>6} {:>7} {:>6} {:>7} {:>6}",
        "Model", "AUC", "dAUC", "L1", "dL1", "L2", "dL2"
    );
    println!(
        "{:<24} {:>7.4} {:>6.0} {:>7.4} {:>6.0} {:>7.4} {:>6.0}",
        shape.to_string(),
        m.auc,
        m.d_auc * 1e4,
        m.l1,
        m.d_l1 * 1e4,
        m.l2,
        m.d_l2 * 1e4
    );
    if let Some(p) = metrics_out.or(cfg.output.metrics.clone()) {
        write_json(&p, &out)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct ReproduceArgs {
    /// MovieLens 1M ratings file; defaults to `$NCLF_DATA_ROOT/ml-1m/ratings.dat`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Optional run config; its `train` and `cv` sections are used.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// 25 measurement folds and all nine selection folds instead of the
    /// five-fold desk protocol.
    #[arg(long)]
    paper_protocol: bool,
    /// Keep this fraction of events (smoke runs).
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Rank of the A term in primitive NCLF.
    #[arg(long, default_value_t = 1)]
    primitive_a_rank: usize,
    /// Writes the table as JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

pub fn reproduce(args: ReproduceArgs) -> Result<(), CliError> {
    let cfg = match &args.config {
        Some(p) => load_config(p, false)?,
        None => RunConfig::default().effective()?,
    };
    let path = match args.data {
        Some(p) => p,
        None => match std::env::var_os(DATA_ROOT_VAR) {
            Some(_) => resolve(Path::new("ml-1m/ratings.dat")),
            None => {
                return Err(CliError::Config(format!(
                    "data: pass --data or set {DATA_ROOT_VAR} to a directory containing ml-1m/ratings.dat"
                )))
            }
        },
    };
    if !path.is_file() {
        return Err(CliError::Config(format!("data: {} does not exist", path.display())));
    }
    let mut data = load_movielens(&path)?;
    let (pos, neg) = data.label_counts();
    println!("loaded {} events ({pos} positive, {neg} negative), dims {:?}", data.len(), data.dims());
    if let Some(rate) = args.subsample {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(CliError::Config(format!("subsample: must lie in (0, 1], got {rate}")));
        }
        data = nclf_core::data::subsample(&data, rate, cfg.train.seed)?;
        println!("subsampled to {} events", data.len());
    }
    let mut protocol = if args.paper_protocol {
        CvProtocol::default()
    } else {
        CvProtocol::desk()
    };
    protocol.seed = cfg.cv.seed;
    protocol.jobs = args.jobs.unwrap_or(cfg.cv.jobs);
    let table = run_benchmarks(
        &data,
        &Benchmark::ALL,
        &cfg.cv.lambda_grid,
        &cfg.train,
        &protocol,
        args.primitive_a_rank,
        |row| {
            eprintln!(
                "{}: AUC {:.4} at lambda {}",
                row.benchmark.label(),
                row.outcome.summary.auc,
                row.outcome.chosen.lambda
            )
        },
    )?;
    let title = format!(
        "MovieLens 1M, {}-fold measurement (standard errors x 1e4)",
        protocol.measurement_folds
    );
    print!("{}", table.render(&title));
    if let Some(p) = args.metrics {
        write_json(&p, &table)?;
    }
    Ok(())
}

fn read_tensor(input: &Path) -> Result<CubicalTensor, CliError> {
    let mut text = String::new();
    if input == Path::new("-") {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        File::open(input)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| CliError::Config(format!("input {}: {e}", input.display())))?;
    }
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| CliError::Config("input: empty".into()))?
        .parse()
        .map_err(|_| CliError::Config("input: first token must be the side length n".into()))?;
    let values = tokens
        .enumerate()
        .map(|(ix, t)| {
            t.parse::<f64>()
                .map_err(|_| CliError::Config(format!("input: value {} ({t:?}) is not a number", ix + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n * n * n {
        return Err(CliError::Config(format!(
            "input: expected {} values for n = {n}, found {}",
            n * n * n,
            values.len()
        )));
    }
    CubicalTensor::new(n, values).map_err(|e| CliError::Config(format!("input: {e}")))
}

pub fn decompose(input: &Path) -> Result<(), CliError> {
    let t = read_tensor(input)?;
    let parts = split_tensor(&t).map_err(|e| CliError::Config(format!("input: {e}")))?;
    let n = t.side();
    let mut out = std::io::stdout().lock();
    for (name, part) in SymmetryComponents::NAMES.iter().zip(parts.as_array()) {
        writeln!(out, "{name}")?;
        for i in 0..n {
            writeln!(out, "  i = {i}")?;
            for j in 0..n {
                let row: Vec<String> = (0..n).map(|k| format!("{:>11.5}", part.get(i, j, k))).collect();
                writeln!(out, "  {}", row.join(""))?;
            }
        }
    }
    Ok(())
}

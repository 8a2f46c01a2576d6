use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use persgrad::classifiers::{classification_report, cross_validate};
use persgrad::flow::{evolve, write_loss_trace_csv, FlowConfig, LossKind};
use persgrad::ingest::{write_embeddings, TweetRecord};
use persgrad::persistence::{persistence_entropy, vr_persistence_with_budget, PersistenceDiagram};
use persgrad::pipeline::{FeatureMode, FittedPipeline, PipelineConfig};
use persgrad::stats::{derive_seed, mean, std_dev};
use persgrad::synth::{blob_dataset, synth_scenario};
use persgrad::timeseries::{
    bucketize, pad_with_background, run_detector, series_correlation, Detector, OracleDetector,
    StreamItem,
};
use persgrad::{pairwise_distances, Error, LabeledDataset, ModelSpec, PointCloud};
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::data;
use crate::output::OutputDir;
use crate::Failure;

pub fn train(o: &Overrides, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(o)?;
    let records = data::load(&cfg.data)?;
    let ds = records.labeled()?;
    let pipeline = FittedPipeline::fit(&ds, &cfg.pipeline(), cfg.seed())?;
    let report = classification_report(&ds.labels, &pipeline.predict(&ds.cloud)?)?;

    let mut dir = OutputDir::create(out)?;
    dir.write("model.json", pipeline.to_json()?)?;
    dir.write("report.txt", report.to_string())?;
    dir.write_json("report.json", &report)?;
    dir.finish("train", &cfg, &records.sources)?;
    println!("training-set report ({} records)\n\n{report}", ds.len());
    Ok(())
}

pub fn evaluate(o: &Overrides, model: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(o)?;
    let pipeline = FittedPipeline::load(model)?;
    let records = data::load(&cfg.data)?;
    let ds = records.labeled()?;
    if pipeline.model.feature_dim != ds.cloud.dim() {
        return Err(Failure::config(format!(
            "model expects {}-dimensional inputs, data is {}-dimensional",
            pipeline.model.feature_dim,
            ds.cloud.dim()
        )));
    }
    let pred = pipeline.predict(&ds.cloud)?;
    let report = classification_report(&ds.labels, &pred)?;

    let mut csv = String::from("id,label,predicted\n");
    for ((id, l), p) in records.ids.iter().zip(&ds.labels).zip(&pred) {
        let _ = writeln!(csv, "{id},{l},{p}");
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("report.txt", report.to_string())?;
    dir.write_json("report.json", &report)?;
    dir.write("predictions.csv", csv)?;
    let mut inputs = vec![model.to_owned()];
    inputs.extend(records.sources);
    dir.finish("evaluate", &cfg, &inputs)?;
    println!("{report}");
    Ok(())
}

#[derive(Serialize)]
struct CrossvalSummary {
    folds: usize,
    mean_accuracy: f64,
    std_accuracy: f64,
    fold_accuracies: Vec<f64>,
}

pub fn crossval(o: &Overrides, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(o)?;
    let records = data::load(&cfg.data)?;
    let ds = records.labeled()?;
    let cv = cross_validate(&ds, &cfg.pipeline(), cfg.folds, cfg.seed())?;

    let mut csv = String::from("fold,accuracy,size\n");
    for (f, (a, n)) in cv.fold_accuracies.iter().zip(&cv.fold_sizes).enumerate() {
        let _ = writeln!(csv, "{f},{a},{n}");
    }
    let summary = CrossvalSummary {
        folds: cfg.folds,
        mean_accuracy: cv.mean(),
        std_accuracy: cv.std_dev(),
        fold_accuracies: cv.fold_accuracies.clone(),
    };
    let mut dir = OutputDir::create(out)?;
    dir.write("folds.csv", csv)?;
    dir.write_json("crossval.json", &summary)?;
    dir.finish("crossval", &cfg, &records.sources)?;
    println!(
        "{}-fold accuracy {:.4} +- {:.4} ({})",
        cfg.folds,
        summary.mean_accuracy,
        summary.std_accuracy,
        cv.fold_accuracies
            .iter()
            .map(|a| format!("{a:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

#[derive(Serialize)]
struct Correlation {
    windows: usize,
    nonempty_windows: usize,
    pearson_r: f64,
}

pub fn timeseries(o: &Overrides, model: Option<&Path>, oracle: bool, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(o)?;
    let seed = cfg.seed();
    let mut inputs: Vec<PathBuf> = Vec::new();

    let detector: Box<dyn Detector> = match (model, oracle) {
        (Some(_), true) => return Err(Failure::config("pass either --model or --oracle, not both")),
        (Some(path), false) => {
            inputs.push(path.to_owned());
            Box::new(FittedPipeline::load(path)?)
        }
        (None, true) => Box::new(OracleDetector),
        (None, false) => return Err(Failure::config("timeseries needs --model <file> or --oracle")),
    };

    let items = if cfg.data.tweets.is_some() {
        let records = data::load(&cfg.data)?;
        inputs.extend(records.sources.iter().cloned());
        records.stream_items()?
    } else {
        let s = &cfg.synth;
        let ds = synth_scenario(&s.shape, s.windows, s.per_window, &s.generator, &cfg.window, derive_seed(seed, 20))?;
        StreamItem::from_dataset(&ds, "s")
    };
    let mut windows = bucketize(&items, &cfg.window, derive_seed(seed, 21))?;

    if let Some(target) = cfg.timeseries.pad_to {
        let pool_cfg = cfg
            .timeseries
            .background
            .as_ref()
            .ok_or_else(|| Failure::config("timeseries.pad_to needs a [timeseries.background] pool"))?;
        let pool_records = data::load(pool_cfg)?;
        inputs.extend(pool_records.sources.iter().cloned());
        let pool: Vec<StreamItem> = (0..pool_records.ids.len())
            .map(|i| StreamItem {
                id: pool_records.ids[i].clone(),
                timestamp: pool_records.timestamps[i],
                label: pool_records.labels[i].unwrap_or(0),
                vector: pool_records.cloud.point(i).to_vec(),
            })
            .collect();
        windows = windows
            .iter()
            .map(|w| pad_with_background(w, &pool, target, cfg.window.bucket_seconds, derive_seed(seed, 22)))
            .collect::<Result<_, Error>>()?;
    }

    let series = run_detector(&windows, detector.as_ref())?;
    let mut csv = Vec::new();
    series.write_csv(&mut csv).map_err(|e| Failure::config(e.to_string()))?;
    let mut dir = OutputDir::create(out)?;
    dir.write("ratio_series.csv", csv)?;
    let r = series_correlation(&series);
    if let Ok(r) = r {
        dir.write_json(
            "correlation.json",
            &Correlation {
                windows: series.len(),
                nonempty_windows: series.counts.iter().filter(|&&c| c > 0).count(),
                pearson_r: r,
            },
        )?;
    }
    dir.finish("timeseries", &cfg, &inputs)?;
    for i in 0..series.len() {
        println!(
            "window {:>3}  true {:.3}  predicted {:.3}  n={}",
            i, series.true_ratio[i], series.predicted_ratio[i], series.counts[i]
        );
    }
    println!("pearson r = {:.4}", r?);
    Ok(())
}

fn tweet_lines(ds: &LabeledDataset, ids: &[String]) -> Result<String, Failure> {
    let mut text = String::new();
    for (i, id) in ids.iter().enumerate() {
        let rec = TweetRecord {
            id: id.clone(),
            text: String::new(),
            created_at: ds.timestamps.as_ref().map(|t| t[i]),
            label: Some(ds.labels[i]),
        };
        text.push_str(&serde_json::to_string(&rec).map_err(Error::from)?);
        text.push('\n');
    }
    Ok(text)
}

fn write_dataset(dir: &mut OutputDir, name: &str, ds: &LabeledDataset) -> Result<(), Failure> {
    let ids: Vec<String> = (0..ds.len()).map(|i| format!("{name}-{i}")).collect();
    dir.write(&format!("{name}.ndjson"), tweet_lines(ds, &ids)?)?;
    let csv = format!("{name}.csv");
    write_embeddings(&dir.path(&csv), &ids, &ds.cloud)?;
    dir.record(&csv);
    Ok(())
}

pub fn synth(o: &Overrides, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(o)?;
    let s = &cfg.synth;
    let seed = cfg.seed();
    let train = blob_dataset(&s.generator, s.n_event, s.n_background, derive_seed(seed, 30))?;
    let shifted = s.generator.shifted(&vec![s.eval_shift; s.generator.dim()]);
    let eval = blob_dataset(&shifted, s.n_event, s.n_background, derive_seed(seed, 31))?;
    let stream = synth_scenario(&s.shape, s.windows, s.per_window, &s.generator, &cfg.window, derive_seed(seed, 32))?;

    let mut dir = OutputDir::create(out)?;
    write_dataset(&mut dir, "train", &train)?;
    write_dataset(&mut dir, "eval", &eval)?;
    write_dataset(&mut dir, "stream", &stream)?;
    dir.finish("synth", &cfg, &[])?;
    println!(
        "wrote train ({}), eval ({}) and stream ({} in {} windows) to {}",
        train.len(),
        eval.len(),
        stream.len(),
        s.windows,
        out.display()
    );
    Ok(())
}

pub fn benchmark(o: &Overrides, out: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(o)?;
    let b = &cfg.benchmark;
    if b.kinds.is_empty() || b.sizes.is_empty() {
        return Err(Failure::config("benchmark needs at least one model kind and one size"));
    }
    if b.sizes.iter().any(|&n| n < 4) {
        return Err(Failure::config("benchmark sizes must be at least 4"));
    }
    let specs: Vec<ModelSpec> = b
        .kinds
        .iter()
        .map(|k| ModelSpec::from_short_name(k))
        .collect::<Result<_, Error>>()?;
    let losses = [
        ("topo", FlowConfig { loss: LossKind::default(), ..cfg.flow.clone() }),
        ("vanilla", FlowConfig { loss: LossKind::VanillaBarycenter, ..cfg.flow.clone() }),
    ];

    let mut csv = String::from("model,loss,n,repeats,mean_seconds,std_seconds\n");
    let mut table = format!("{:<18}", "seconds");
    for n in &b.sizes {
        let _ = write!(table, " {:>16}", format!("n={n}"));
    }
    table.push('\n');
    for spec in &specs {
        for (loss_name, flow) in &losses {
            let _ = write!(table, "{:<18}", format!("{} ({loss_name})", spec.short_name()));
            for &n in &b.sizes {
                let ds = blob_dataset(&cfg.synth.generator, n / 2, n - n / 2, derive_seed(cfg.seed(), 40 + n as u64))?;
                let pcfg = PipelineConfig {
                    features: FeatureMode::Displacement(flow.clone()),
                    model: spec.clone(),
                    balance: false,
                };
                let mut secs = Vec::with_capacity(b.repeats.max(1));
                for _ in 0..b.repeats.max(1) {
                    let t = Instant::now();
                    FittedPipeline::fit(&ds, &pcfg, cfg.seed())?;
                    secs.push(t.elapsed().as_secs_f64());
                }
                let (m, sd) = (mean(&secs), std_dev(&secs));
                let _ = writeln!(csv, "{},{loss_name},{n},{},{m:.6},{sd:.6}", spec.short_name(), secs.len());
                let _ = write!(table, " {:>16}", format!("{m:.3} +- {sd:.3}"));
            }
            table.push('\n');
        }
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("benchmark.csv", csv)?;
    dir.finish("benchmark", &cfg, &[])?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct DimSummary {
    dim: usize,
    finite_bars: usize,
    infinite_bars: usize,
    entropy: f64,
    entropy_degenerate: bool,
}

fn summarize(diag: &PersistenceDiagram, max_dim: usize) -> Vec<DimSummary> {
    (0..=max_dim)
        .map(|dim| {
            let e = persistence_entropy(diag, dim);
            DimSummary {
                dim,
                finite_bars: diag.finite_in_dim(dim).count(),
                infinite_bars: diag.num_infinite(dim),
                entropy: e.value,
                entropy_degenerate: e.degenerate,
            }
        })
        .collect()
}

fn diagram_csv(diag: &PersistenceDiagram) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    diag.write_csv(&mut buf).map_err(|e| Failure::config(e.to_string()))?;
    Ok(buf)
}

pub fn diagram_dump(o: &Overrides, max_dim: Option<usize>, after_flow: bool, out: &Path) -> Result<(), Failure> {
    let mut cfg = RunConfig::resolve(o)?;
    if let Some(d) = max_dim {
        cfg.diagram_max_dim = d;
    }
    let records = data::load(&cfg.data)?;
    let max_dim = cfg.diagram_max_dim;
    let diagram = |cloud: &PointCloud| {
        vr_persistence_with_budget(&pairwise_distances(cloud), max_dim, cfg.flow.simplex_budget)
    };
    let before = diagram(&records.cloud)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("diagram.csv", diagram_csv(&before)?)?;
    let mut summary = serde_json::Map::new();
    summary.insert("points".into(), records.cloud.len().into());
    summary.insert("before".into(), serde_json::to_value(summarize(&before, max_dim)).map_err(Error::from)?);
    if after_flow {
        let flow = evolve(&records.cloud, &cfg.flow)?;
        let after = diagram(&flow.evolved)?;
        dir.write("diagram_evolved.csv", diagram_csv(&after)?)?;
        let mut trace = Vec::new();
        write_loss_trace_csv(&mut trace, &flow.loss_trace).map_err(|e| Failure::config(e.to_string()))?;
        dir.write("loss_trace.csv", trace)?;
        summary.insert("after".into(), serde_json::to_value(summarize(&after, max_dim)).map_err(Error::from)?);
    }
    dir.write_json("summary.json", &summary)?;
    dir.finish("diagram-dump", &cfg, &records.sources)?;
    for d in summarize(&before, max_dim) {
        println!(
            "H{}: {} finite, {} infinite, entropy {:.4}",
            d.dim, d.finite_bars, d.infinite_bars, d.entropy
        );
    }
    Ok(())
}

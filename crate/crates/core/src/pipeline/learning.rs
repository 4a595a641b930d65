use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::StudyConfig;
use super::model::SweepRecord;
use super::sweep::{write_atomic, write_text};
use crate::error::{Error, Result};
use crate::geometry::ShapeFamily;
use crate::learn::{evaluate, split_dataset, train_rbf, Dataset, EvalReport, RbfModel, Sample, Split};

pub fn learn_dir(out: &Path, family: ShapeFamily) -> PathBuf {
    out.join("learn").join(family.as_str())
}

/// Signatures as network inputs with `n` as the target, in record order.
pub fn dataset_from_records(family: ShapeFamily, records: &[SweepRecord]) -> Result<Dataset> {
    let rows = records
        .iter()
        .map(|r| Sample {
            features: r.signature().features().to_vec(),
            target: r.n as f64,
        })
        .collect();
    Dataset::new(family, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub model_id: String,
    pub n: u32,
    pub split: Split,
    pub predicted: f64,
}

#[derive(Debug, Clone)]
pub struct LearningOutcome {
    pub family: ShapeFamily,
    pub seed: u64,
    pub model: RbfModel,
    pub train: EvalReport,
    pub test: EvalReport,
    pub predictions: Vec<Prediction>,
}

/// Split with `seed`, train on the training part and evaluate both parts.
pub fn run_learning(cfg: &StudyConfig, family: ShapeFamily, records: &[SweepRecord], seed: u64) -> Result<LearningOutcome> {
    let data = split_dataset(&dataset_from_records(family, records)?, seed, cfg.split)?;
    let train = data.part(Split::Train);
    let test = data.part(Split::Test);
    let model = train_rbf(&train, &cfg.rbf)?;
    let predictions = records
        .iter()
        .zip(&data.rows)
        .zip(&data.split)
        .map(|((r, s), &split)| Prediction {
            model_id: r.model_id.clone(),
            n: r.n,
            split,
            predicted: model.predict(&s.features),
        })
        .collect();
    Ok(LearningOutcome {
        family,
        seed,
        train: evaluate(&model, &train),
        test: evaluate(&model, &test),
        model,
        predictions,
    })
}

fn report_csv<W: Write>(rows: &[(String, &EvalReport)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(EvalReport::CSV_HEADER)?;
    for (name, r) in rows {
        wr.write_record(r.csv_record(name))?;
    }
    wr.flush().map_err(|e| Error::format("report csv", e.to_string()))?;
    Ok(())
}

/// Writes `model.txt`, `report.csv`, `report.txt` and `predictions.csv`.
pub fn write_learning(out: &Path, o: &LearningOutcome) -> Result<()> {
    let dir = learn_dir(out, o.family);
    write_atomic(&dir.join("model.txt"), |w| o.model.write(w))?;
    write_atomic(&dir.join("report.csv"), |w| {
        report_csv(&[("train".to_string(), &o.train), ("test".to_string(), &o.test)], w)
    })?;
    let text = format!(
        "{} sweep, split seed {}\n\n[train]\n{}\n\n[test]\n{}\n",
        o.family, o.seed, o.train, o.test
    );
    write_text(&dir.join("report.txt"), &text)?;
    write_atomic(&dir.join("predictions.csv"), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["model_id", "n", "split", "predicted"])?;
        for p in &o.predictions {
            let split = match p.split {
                Split::Train => "train",
                Split::Test => "test",
            };
            wr.write_record([p.model_id.clone(), p.n.to_string(), split.to_string(), format!("{:?}", p.predicted)])?;
        }
        wr.flush().map_err(|e| Error::format("predictions csv", e.to_string()))?;
        Ok(())
    })
}

/// Test-split reports for each seed, followed by their mean.
pub fn seed_study(cfg: &StudyConfig, family: ShapeFamily, records: &[SweepRecord]) -> Result<(Vec<(u64, EvalReport)>, EvalReport)> {
    let per_seed = cfg
        .eval_seeds
        .iter()
        .map(|&s| run_learning(cfg, family, records, s).map(|o| (s, o.test)))
        .collect::<Result<Vec<_>>>()?;
    let k = per_seed.len().max(1) as f64;
    let avg = |f: fn(&EvalReport) -> f64| per_seed.iter().map(|(_, r)| f(r)).sum::<f64>() / k;
    let mean = EvalReport {
        count: per_seed.first().map(|(_, r)| r.count).unwrap_or(0),
        rmse: avg(|r| r.rmse),
        mse: avg(|r| r.mse),
        mean_err: avg(|r| r.mean_err),
        variance: avg(|r| r.variance),
        std: avg(|r| r.std),
        rounded_accuracy: avg(|r| r.rounded_accuracy),
        rank_correlation: avg(|r| r.rank_correlation),
    };
    Ok((per_seed, mean))
}

pub fn write_seed_study(out: &Path, family: ShapeFamily, per_seed: &[(u64, EvalReport)], mean: &EvalReport) -> Result<()> {
    let mut rows: Vec<(String, &EvalReport)> = per_seed.iter().map(|(s, r)| (format!("test_seed_{s}"), r)).collect();
    rows.push(("test_mean".to_string(), mean));
    write_atomic(&learn_dir(out, family).join("seeds.csv"), |w| report_csv(&rows, w))
}

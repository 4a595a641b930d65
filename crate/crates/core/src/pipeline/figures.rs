//! Figure data as CSV plus an SVG rendered from that CSV alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use super::config::StudyConfig;
use super::model::{model_id, SweepRecord};
use super::sweep::{dataset_path, model_dir, read_records, write_text};
use crate::error::{Error, Result};
use crate::fem::{Axis, SliceGrid, SlicePlane};
use crate::geometry::ShapeFamily;
use crate::learn::{coefficient_stats, BoxStats, Normalizer};
use crate::plot::{box_chart, heatmap, line_chart, Series};
use crate::signature::FourierSignature;

/// Kinds of figure, each with its own CSV layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// `family,n,T_max`
    TmaxVsN,
    /// `n,x_mm,T_celsius`
    Profiles,
    /// `x_mm,z_mm,T_celsius`
    Contour,
    /// `coefficient,min,q1,median,q3,max`
    BoxPlot,
}

fn parse_rows(csv_text: &str) -> Result<Vec<csv::StringRecord>> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    rd.records().map(|r| r.map_err(Error::from)).collect()
}

fn num(rec: &csv::StringRecord, k: usize) -> Result<f64> {
    rec.get(k)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("figure csv", format!("bad number in column {k} of {rec:?}")))
}

/// Renders the SVG for a figure from its CSV text.
pub fn render_svg(kind: FigureKind, title: &str, csv_text: &str) -> Result<String> {
    let rows = parse_rows(csv_text)?;
    match kind {
        FigureKind::TmaxVsN | FigureKind::Profiles => {
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            let mut order: Vec<String> = Vec::new();
            for r in &rows {
                let (name, x, y) = match kind {
                    FigureKind::TmaxVsN => (r.get(0).unwrap_or("").to_string(), num(r, 1)?, num(r, 2)?),
                    _ => (format!("n = {}", r.get(0).unwrap_or("")), num(r, 1)?, num(r, 2)?),
                };
                if !series.contains_key(&name) {
                    order.push(name.clone());
                }
                series.entry(name).or_default().push((x, y));
            }
            let series: Vec<Series> = order
                .into_iter()
                .map(|name| Series {
                    points: series[&name].clone(),
                    name,
                })
                .collect();
            Ok(match kind {
                FigureKind::TmaxVsN => line_chart(title, "number of sides / wings", "maximum surface temperature (°C)", &series),
                _ => line_chart(title, "x (mm)", "surface temperature (°C)", &series),
            })
        }
        FigureKind::Contour => {
            let grid = SliceGrid::read_csv(
                SlicePlane {
                    axis: Axis::Y,
                    offset: f64::NAN,
                },
                csv_text.as_bytes(),
            )?;
            Ok(heatmap(title, &grid))
        }
        FigureKind::BoxPlot => {
            let boxes = rows
                .iter()
                .map(|r| {
                    Ok((
                        r.get(0).unwrap_or("").to_string(),
                        BoxStats {
                            min: num(r, 1)?,
                            q1: num(r, 2)?,
                            median: num(r, 3)?,
                            q3: num(r, 4)?,
                            max: num(r, 5)?,
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(box_chart(title, "normalised value", &boxes))
        }
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(header)?;
    for r in rows {
        wr.write_record(&r)?;
    }
    let bytes = wr.into_inner().map_err(|e| Error::format("figure csv", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::format("figure csv", e.to_string()))
}

struct Pending {
    stem: String,
    kind: FigureKind,
    title: String,
    csv: String,
}

/// Five-number summaries of the ten coefficients after mapping each one to
/// `[-1, 1]` over the whole sweep.
pub fn normalized_box_stats(records: &[SweepRecord]) -> Result<Vec<(String, BoxStats)>> {
    let feats: Vec<[f64; 10]> = records.iter().map(|r| r.signature().features()).collect();
    let norm = Normalizer::fit(feats.iter().map(|f| f.as_slice()))?;
    let scaled: Vec<Vec<f64>> = feats.iter().map(|f| norm.apply(f)).collect();
    FourierSignature::FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = scaled.iter().map(|r| r[k]).collect();
            Ok((name.to_string(), coefficient_stats(&col)?))
        })
        .collect()
}

/// Reads sweep artifacts and writes every figure CSV and SVG under
/// `<out>/figures`. Nothing is written unless all inputs are present.
pub fn make_figures(cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    let out = &cfg.output_dir;
    let expected = cfg.sweep.values();
    let mut missing = Vec::new();
    let mut datasets: Vec<(ShapeFamily, Vec<SweepRecord>)> = Vec::new();
    for family in ShapeFamily::ALL {
        let path = dataset_path(out, family);
        let records = if path.is_file() { read_records(&path)? } else { Vec::new() };
        let have: Vec<u32> = records.iter().map(|r| r.n).collect();
        for &n in &expected {
            if !have.contains(&n) {
                missing.push(model_id(family, n));
            }
        }
        for &n in &cfg.figure_models {
            if expected.contains(&n) && have.contains(&n) {
                let dir = model_dir(out, family, n);
                for f in ["profile.csv", "slice.csv"] {
                    if !dir.join(f).is_file() {
                        missing.push(format!("{}/{f}", model_id(family, n)));
                    }
                }
            }
        }
        datasets.push((family, records));
    }
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }

    let mut pending = Vec::new();
    let mut tmax_rows = Vec::new();
    for (family, records) in &datasets {
        for r in records {
            tmax_rows.push(vec![family.to_string(), r.n.to_string(), format!("{:?}", r.t_max)]);
        }
    }
    pending.push(Pending {
        stem: "tmax_vs_n".into(),
        kind: FigureKind::TmaxVsN,
        title: "Maximum surface temperature against side / wing count".into(),
        csv: csv_text(&["family", "n", "T_max"], tmax_rows)?,
    });

    for (family, records) in &datasets {
        let mut profile_rows = Vec::new();
        for &n in cfg.figure_models.iter().filter(|n| expected.contains(n)) {
            let dir = model_dir(out, *family, n);
            let text = fs::read_to_string(dir.join("profile.csv")).map_err(|e| Error::io(dir.join("profile.csv"), e))?;
            for r in parse_rows(&text)? {
                profile_rows.push(vec![n.to_string(), r.get(0).unwrap_or("").into(), r.get(1).unwrap_or("").into()]);
            }
            let slice_path = dir.join("slice.csv");
            let slice = fs::read_to_string(&slice_path).map_err(|e| Error::io(&slice_path, e))?;
            pending.push(Pending {
                stem: format!("contour_{}", model_id(*family, n)),
                kind: FigureKind::Contour,
                title: format!("Mid cross-section temperature, {family} n = {n}"),
                csv: slice,
            });
        }
        pending.push(Pending {
            stem: format!("profiles_{family}"),
            kind: FigureKind::Profiles,
            title: format!("Top-surface temperature along the centre line, {family}"),
            csv: csv_text(&["n", "x_mm", "T_celsius"], profile_rows)?,
        });

        let boxes = normalized_box_stats(records)?;
        pending.push(Pending {
            stem: format!("boxplot_{family}"),
            kind: FigureKind::BoxPlot,
            title: format!("Normalised Fourier coefficients, {family}"),
            csv: csv_text(
                &["coefficient", "min", "q1", "median", "q3", "max"],
                boxes.iter().map(|(name, b)| {
                    vec![
                        name.clone(),
                        format!("{:?}", b.min),
                        format!("{:?}", b.q1),
                        format!("{:?}", b.median),
                        format!("{:?}", b.q3),
                        format!("{:?}", b.max),
                    ]
                }),
            )?,
        });
    }

    let dir = out.join("figures");
    let mut written = Vec::new();
    for p in &pending {
        let svg = render_svg(p.kind, &p.title, &p.csv)?;
        let csv_path = dir.join(format!("{}.csv", p.stem));
        let svg_path = dir.join(format!("{}.svg", p.stem));
        write_text(&csv_path, &p.csv)?;
        write_text(&svg_path, &svg)?;
        written.push(csv_path);
        written.push(svg_path);
    }

    for (family, records) in &datasets {
        let path = dir.join(format!("coefficients_{family}.csv"));
        let rows = FourierSignature::FEATURE_NAMES
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let col: Vec<f64> = records.iter().map(|r| r.signature().features()[k]).collect();
                let b = coefficient_stats(&col)?;
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                Ok(vec![
                    name.to_string(),
                    format!("{:?}", b.min),
                    format!("{:?}", b.median),
                    format!("{:?}", b.max),
                    format!("{mean:?}"),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        write_text(&path, &csv_text(&["coefficient", "min", "median", "max", "mean"], rows)?)?;
        written.push(path);
    }
    Ok(written)
}

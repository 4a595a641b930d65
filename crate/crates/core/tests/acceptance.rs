//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermotact::fem::{solve_heat, PointLocator, ThermalParams};
use thermotact::geometry::{point_in_polygon, Polygon2D, ShapeFamily, TissueDims};
use thermotact::learn::error_metrics;
use thermotact::mesh::{build_mesh, RefinementSpec, TetMesh};
use thermotact::pipeline::{
    learn_family, mesh_study, prepare_thermal, read_records, run_learning, run_sweep, run_sweep_model, seed_study,
    dataset_path, MeshStudySpec, StudyConfig, SweepRecord,
};
use thermotact::signature::{fit_fourier4, FourierSignature, SurfaceProfile};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

/// Two complete `sweep` + `learn` runs of the default study.
struct Study {
    cfg: StudyConfig,
    thermal: ThermalParams,
    records: BTreeMap<ShapeFamily, Vec<SweepRecord>>,
    second_out: PathBuf,
    first_run_secs: f64,
    _dirs: [tempfile::TempDir; 2],
}

fn run_study(out: &Path) -> (StudyConfig, ThermalParams, f64) {
    let cfg = StudyConfig {
        output_dir: out.to_path_buf(),
        ..StudyConfig::default()
    };
    let start = Instant::now();
    let thermal = prepare_thermal(&cfg).expect("calibration");
    for family in ShapeFamily::ALL {
        let o = run_sweep(&cfg, &thermal, family, 0).expect("sweep");
        assert!(o.failures.is_empty(), "{family} failures: {:?}", o.failures);
    }
    let secs = start.elapsed().as_secs_f64();
    for family in ShapeFamily::ALL {
        learn_family(&cfg, family).expect("learn");
    }
    (cfg, thermal, secs)
}

impl Study {
    fn new() -> Self {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (cfg, thermal, first_run_secs) = run_study(a.path());
        run_study(b.path());
        let records = ShapeFamily::ALL
            .into_iter()
            .map(|f| (f, read_records(&dataset_path(&cfg.output_dir, f)).unwrap()))
            .collect();
        Study {
            cfg,
            thermal,
            records,
            second_out: b.path().to_path_buf(),
            first_run_secs,
            _dirs: [a, b],
        }
    }

    fn t_max(&self, family: ShapeFamily) -> Vec<(u32, f64)> {
        self.records[&family].iter().map(|r| (r.n, r.t_max)).collect()
    }

    fn all_records(&self) -> impl Iterator<Item = &SweepRecord> {
        self.records.values().flatten()
    }
}

// ---------------------------------------------------------------------------
// 1. slab surrogate

/// Uniform source everywhere, insulated sides: the exact solution of
/// `-k T'' = q`, `T(0) = t_bottom`, `-k T'(L) = h (T(L) - t_ambient)`, z in m.
fn slab_exact(p: &ThermalParams, depth_m: f64, z_m: f64) -> f64 {
    let (k, q, h, l) = (p.k_tissue, p.q_tumor, p.h_top, depth_m);
    let slope = (q * l * (1.0 + h * l / (2.0 * k)) - h * (p.t_bottom - p.t_ambient)) / (k + h * l);
    p.t_bottom + slope * z_m - q * z_m * z_m / (2.0 * k)
}

fn slab_mesh(nz: usize) -> TetMesh {
    let dims = TissueDims::new(20.0, 10.0, 25.0).unwrap();
    let geom = thermotact::geometry::GeometrySpec::empty(dims).unwrap();
    let mut mesh = build_mesh(&geom, &RefinementSpec::uniform(4, 2, nz)).unwrap();
    mesh.occupancy = (0..mesh.tet_count()).map(|e| [mesh.tet_volume(e) / 4.0; 4]).collect();
    mesh
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let p = ThermalParams {
        q_tumor: 2.0e3,
        ..ThermalParams::default()
    };
    let depth = 25.0;
    let mut nodal = Vec::new();
    let mut field = Vec::new();
    let mut range = 0.0;
    for nz in [4, 8, 16] {
        let mesh = slab_mesh(nz);
        let (t, _) = solve_heat(&mesh, &p).unwrap();
        let exact: Vec<f64> = mesh.nodes.iter().map(|n| slab_exact(&p, depth * 1e-3, n[2] * 1e-3)).collect();
        let (lo, hi) = (1..=200)
            .map(|i| slab_exact(&p, depth * 1e-3, depth * 1e-3 * i as f64 / 200.0))
            .chain([p.t_bottom])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        range = hi - lo;
        nodal.push(exact.iter().zip(&t.values).map(|(e, v)| (e - v).abs()).fold(0.0, f64::max));
        // between nodes along a vertical line off the grid planes
        let loc = PointLocator::new(&mesh);
        let worst = (0..=500)
            .map(|i| {
                let z = depth * i as f64 / 500.0;
                let v = loc.interpolate(&t, [7.3, 4.1, z]).unwrap();
                (v - slab_exact(&p, depth * 1e-3, z * 1e-3)).abs()
            })
            .fold(0.0, f64::max);
        field.push(worst);
    }
    let secs = start.elapsed().as_secs_f64();
    let finest = nodal[2].max(field[2]) / range;
    let monotone = field.windows(2).all(|w| w[1] < w[0]);
    verdict(
        finest <= 0.005 && monotone && secs <= 60.0,
        format!(
            "range {range:.4} °C; max nodal error / range {:.2e} {:.2e} {:.2e}; max field error / range {:.2e} {:.2e} {:.2e}; {secs:.1} s",
            nodal[0] / range,
            nodal[1] / range,
            nodal[2] / range,
            field[0] / range,
            field[1] / range,
            field[2] / range
        ),
    )
}

// ---------------------------------------------------------------------------

fn criterion_2(s: &Study) -> Verdict {
    let run = run_sweep_model(&s.cfg, &s.thermal, ShapeFamily::RegularPolygon, 10).unwrap();
    let b = run.balance;
    let err = b.relative_error();
    verdict(
        err <= 0.005,
        format!(
            "generated {:.6e} W, top {:.6e} W, bottom {:.6e} W, relative error {err:.2e}",
            b.generated, b.top_outflow, b.bottom_outflow
        ),
    )
}

fn criterion_3(s: &Study) -> Verdict {
    let levels = s.cfg.mesh_study.levels[..2].to_vec();
    let mut ok = true;
    let mut parts = Vec::new();
    for family in ShapeFamily::ALL {
        let spec = MeshStudySpec {
            family,
            n: 10,
            levels: levels.clone(),
            tolerance: 0.01,
        };
        let r = mesh_study(&s.cfg, &s.thermal, &spec).unwrap();
        ok &= r.differences[0] < 0.01;
        parts.push(format!(
            "{family}-10 {} -> {} elements: {:.3e}",
            r.levels[0].elements, r.levels[1].elements, r.differences[0]
        ));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_4(s: &Study) -> Verdict {
    const JITTER: f64 = 0.005;
    let poly = s.t_max(ShapeFamily::RegularPolygon);
    let star = s.t_max(ShapeFamily::StarPolygon);
    let mut problems = Vec::new();
    for (family, curve, step_limit) in [("polygon", &poly, 0.02), ("star", &star, 0.01)] {
        let drops: Vec<u32> = curve.windows(2).filter(|w| w[1].1 < w[0].1 - JITTER).map(|w| w[1].0).collect();
        if !drops.is_empty() {
            problems.push(format!("{family} decreases at n = {drops:?}"));
        }
        let big = curve
            .windows(2)
            .filter(|w| w[0].0 > 20)
            .map(|w| (w[1].1 - w[0].1).abs())
            .fold(0.0, f64::max);
        if big >= step_limit {
            problems.push(format!("{family} step {big:.4} °C for n > 20"));
        }
    }
    let below: Vec<u32> = poly
        .iter()
        .zip(&star)
        .filter(|(p, q)| q.1 < p.1 - JITTER)
        .map(|(p, _)| p.0)
        .collect();
    if !below.is_empty() {
        let (n, worst) = poly
            .iter()
            .zip(&star)
            .map(|(p, q)| (p.0, q.1 - p.1))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        problems.push(format!(
            "star below polygon at {} of {} n (first n = {}, worst {worst:.4} °C at n = {n})",
            below.len(),
            poly.len(),
            below[0]
        ));
    }
    let summary = format!(
        "polygon {:.4} -> {:.4}, star {:.4} -> {:.4}",
        poly[0].1,
        poly.last().unwrap().1,
        star[0].1,
        star.last().unwrap().1
    );
    if problems.is_empty() {
        verdict(true, summary)
    } else {
        verdict(false, format!("{summary}; {}", problems.join("; ")))
    }
}

fn criterion_5(s: &Study) -> Verdict {
    let poly = s.t_max(ShapeFamily::RegularPolygon);
    let star = s.t_max(ShapeFamily::StarPolygon);
    let at = |c: &[(u32, f64)], n: u32| c.iter().find(|r| r.0 == n).unwrap().1;
    let checks = [
        ("polygon n=3", at(&poly, 3), 29.7, 1e-6),
        ("polygon n=100", at(&poly, 100), 30.5, 0.4),
        ("star n=3", at(&star, 3), 30.3, 0.4),
        ("star n=100", at(&star, 100), 30.8, 0.4),
    ];
    let ok = checks.iter().all(|(_, v, target, tol)| (v - target).abs() <= *tol);
    let detail = checks
        .iter()
        .map(|(name, v, target, tol)| format!("{name} {v:.4} (want {target} ± {tol})"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(ok, format!("t_ambient {:.4} °C; {detail}", s.thermal.t_ambient))
}

fn criterion_6(s: &Study) -> Verdict {
    let worst_fit = s.all_records().map(|r| r.fit_rmse_rel).fold(0.0, f64::max);
    let count = s.all_records().count();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_rec: f64 = 0.0;
    for _ in 0..20 {
        let truth = FourierSignature {
            a0: rng.gen_range(25.0..32.0),
            a: std::array::from_fn(|k| rng.gen_range(-1.0..1.0) / (k + 1) as f64),
            b: std::array::from_fn(|k| rng.gen_range(-1.0..1.0) / (k + 1) as f64),
            w: rng.gen_range(42.0..62.0),
            fit_rmse_rel: 0.0,
        };
        let xs: Vec<f64> = (0..121).map(|i| 0.12 * i as f64 / 120.0).collect();
        // direct evaluation of the generating series
        let ts: Vec<f64> = xs
            .iter()
            .map(|&x| {
                truth.a0
                    + (0..4)
                        .map(|k| {
                            let arg = (k + 1) as f64 * truth.w * x;
                            truth.a[k] * arg.cos() + truth.b[k] * arg.sin()
                        })
                        .sum::<f64>()
            })
            .collect();
        let fit = fit_fourier4(&SurfaceProfile::new(xs, ts).unwrap()).unwrap();
        for (got, want) in fit.features().iter().zip(truth.features()) {
            worst_rec = worst_rec.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    verdict(
        count == 196 && worst_fit < 0.01 && worst_rec <= 1e-6,
        format!("{count} models, worst fit_rmse_rel {worst_fit:.3e}; synthetic recovery worst error {worst_rec:.2e}"),
    )
}

fn criterion_7(s: &Study) -> Verdict {
    let (w_lo, w_hi) = s
        .all_records()
        .map(|r| r.w)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), w| (a.min(w), b.max(w)));
    let not_dominant: Vec<&str> = s
        .all_records()
        .filter(|r| {
            let others = [r.a2, r.a3, r.a4, r.b1, r.b2, r.b3, r.b4];
            others.iter().any(|c| c.abs() >= r.a1.abs())
        })
        .map(|r| r.model_id.as_str())
        .collect();
    let a1: Vec<f64> = s.all_records().map(|r| r.a1).collect();
    verdict(
        (50.0..=55.0).contains(&w_lo) && (50.0..=55.0).contains(&w_hi) && not_dominant.is_empty(),
        format!(
            "w in [{w_lo:.4}, {w_hi:.4}] rad/m; a1 in [{:.4}, {:.4}]; a1 not dominant in {} models",
            a1.iter().cloned().fold(f64::INFINITY, f64::min),
            a1.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            not_dominant.len()
        ),
    )
}

fn criterion_8(s: &Study) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for family in ShapeFamily::ALL {
        let o = run_learning(&s.cfg, family, &s.records[&family], s.cfg.seed).unwrap();
        ok &= o.train.rmse < 1e-8;
        parts.push(format!("{family} train RMSE {:.3e}", o.train.rmse));
    }
    verdict(ok, format!("width {}, ridge {:e}: {}", s.cfg.rbf.width, s.cfg.rbf.ridge, parts.join(", ")))
}

fn criterion_9(s: &Study) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for family in ShapeFamily::ALL {
        let (_, mean) = seed_study(&s.cfg, family, &s.records[&family]).unwrap();
        ok &= mean.rounded_accuracy >= 0.9 && mean.rank_correlation > 0.95;
        parts.push(format!(
            "{family} accuracy {:.3}, rank correlation {:.3}, RMSE {:.3e}",
            mean.rounded_accuracy, mean.rank_correlation, mean.rmse
        ));
    }
    verdict(ok, format!("mean over seeds {:?}: {}", s.cfg.eval_seeds, parts.join("; ")))
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let (mut worst_rmse, mut worst_decomp, mut worst_direct): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let len = rng.gen_range(2..200);
        let shift = rng.gen_range(-5.0..5.0);
        let scale = 10f64.powf(rng.gen_range(-6.0..3.0));
        let e: Vec<f64> = (0..len).map(|_| scale * (shift + rng.gen_range(-1.0..1.0))).collect();
        let r = error_metrics(&e);
        let direct = e.iter().map(|x| x * x).sum::<f64>() / len as f64;
        worst_rmse = worst_rmse.max(rel(r.rmse * r.rmse, r.mse));
        worst_decomp = worst_decomp.max(rel(r.mse, r.variance + r.mean_err * r.mean_err));
        worst_direct = worst_direct.max(rel(r.mse, direct));
    }
    verdict(
        worst_rmse <= 1e-12 && worst_decomp <= 1e-12 && worst_direct <= 1e-12,
        format!("worst relative: RMSE²/MSE {worst_rmse:.1e}, σ²+μ² {worst_decomp:.1e}, direct MSE {worst_direct:.1e}"),
    )
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Winding number by summed signed angles.
fn winding(p: [f64; 2], v: &[[f64; 2]]) -> i64 {
    let n = v.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let (ax, ay) = (a[0] - p[0], a[1] - p[1]);
            let (bx, by) = (b[0] - p[0], b[1] - p[1]);
            (ax * by - ay * bx).atan2(ax * bx + ay * by)
        })
        .sum();
    (total / (2.0 * PI)).round() as i64
}

fn criterion_11() -> Verdict {
    let cfg = StudyConfig::default();
    let mut worst_area: f64 = 0.0;
    let mut shapes: BTreeMap<ShapeFamily, Vec<Polygon2D>> = BTreeMap::new();
    for family in ShapeFamily::ALL {
        for n in cfg.sweep.values() {
            let poly = cfg.shape(family, n).base_polygon().unwrap();
            let area = shoelace(poly.vertices()).abs();
            worst_area = worst_area.max((area - cfg.tumor.base_area).abs() / cfg.tumor.base_area);
            shapes.entry(family).or_default().push(poly);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = BTreeMap::new();
    for (family, polys) in &shapes {
        let mut bad = 0;
        for _ in 0..10_000 {
            let poly = &polys[rng.gen_range(0..polys.len())];
            let r = 1.2 * poly.max_radius();
            let p = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
            if point_in_polygon(p, poly) != (winding(p, poly.vertices()) != 0) {
                bad += 1;
            }
        }
        mismatches.insert(*family, bad);
    }
    verdict(
        worst_area <= 1e-9 && mismatches.values().all(|&b| b == 0),
        format!("196 polygons, worst relative area error {worst_area:.1e}; point-in-polygon mismatches {mismatches:?}"),
    )
}

fn csv_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_12(s: &Study) -> Verdict {
    let a = &s.cfg.output_dir;
    let b = &s.second_out;
    let files = csv_files(a);
    let same_set = files == csv_files(b);
    let differing: Vec<String> = files
        .iter()
        .filter(|f| fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    verdict(
        same_set && differing.is_empty() && !files.is_empty(),
        format!("{} CSV files compared, {} differ {:?}", files.len(), differing.len(), differing),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, v: Verdict| {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{tag}] {name}: {}", v.detail);
        if !v.passed {
            failed += 1;
        }
    };
    report(1, "slab surrogate", criterion_1());
    report(10, "metric identities", criterion_10());
    report(11, "geometry oracles", criterion_11());

    let study = Study::new();
    println!(
        "calibration and 196 sweep solves: {:.1} s (budget 1800 s)",
        study.first_run_secs
    );
    report(2, "energy balance", criterion_2(&study));
    report(3, "mesh independence", criterion_3(&study));
    report(4, "monotonicity and saturation", criterion_4(&study));
    report(5, "calibrated levels", criterion_5(&study));
    report(6, "Fourier fit quality", criterion_6(&study));
    report(7, "signature plausibility", criterion_7(&study));
    report(8, "RBF training", criterion_8(&study));
    report(9, "generalisation", criterion_9(&study));
    report(12, "determinism", criterion_12(&study));

    if failed > 0 {
        println!("{failed} of 12 criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}

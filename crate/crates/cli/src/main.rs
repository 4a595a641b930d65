use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use thermotact::geometry::ShapeFamily;
use thermotact::mesh::{build_mesh_with_focus, mesh_quality, write_mesh, RefinementSpec, TetMesh};
use thermotact::pipeline::{
    self, make_figures, model_dir, prepare_thermal, run_mesh_study, run_sweep, run_sweep_model, write_model_artifacts,
    StudyConfig, SweepOutcome,
};
use thermotact::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser)]
#[command(name = "thermotact", version, about = "Tumour morphology from surface temperature: FEM sweeps, signatures and RBF regression")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// JSON study configuration; missing fields take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for the train/test split
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Grid as nx,ny,nz,local_factor
    #[arg(long, global = true, value_delimiter = ',')]
    refinement: Option<Vec<usize>>,

    /// Fixed ambient temperature in °C; disables calibration
    #[arg(long, global = true)]
    t_ambient: Option<f64>,

    /// Skip the compression pre-load
    #[arg(long, global = true)]
    no_compression: bool,

    /// Gaussian width of the RBF network (normalised units)
    #[arg(long, global = true)]
    width: Option<f64>,

    /// Ridge term added to the kernel diagonal
    #[arg(long, global = true)]
    ridge: Option<f64>,

    /// Sweep range as start,step,end
    #[arg(long, global = true, value_delimiter = ',')]
    sweep: Option<Vec<u32>>,
}

#[derive(Args, Clone, Copy)]
struct ModelArgs {
    /// polygon or star
    #[arg(long, default_value = "polygon")]
    family: ShapeFamily,

    /// Side or wing count
    #[arg(long, short)]
    n: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Write the base polygon as CSV
    Geometry {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file (stdout if omitted)
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Build, export or inspect a mesh
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Solve one model and write its artifacts
    Solve {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run a whole sweep family, resuming completed models
    Sweep {
        #[arg(long)]
        family: ShapeFamily,
    },
    /// Mesh-independence study
    MeshStudy,
    /// Train and evaluate the RBF network on sweep datasets
    Learn {
        /// Only this family (both if omitted)
        #[arg(long)]
        family: Option<ShapeFamily>,
    },
    /// Render figure CSVs and SVGs from existing artifacts
    Figures,
    /// Calibration, both sweeps, mesh study, learning and figures
    All,
}

#[derive(Subcommand)]
enum MeshAction {
    /// Build the mesh and print its size
    Build {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Write the mesh in the plain-text exchange format
    Export {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        file: PathBuf,
    },
    /// Print element quality statistics as JSON
    Quality {
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn load_config(o: &GlobalOpts) -> Result<StudyConfig> {
    let mut cfg = match &o.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(out) = &o.out {
        cfg.output_dir = out.clone();
    }
    if let Some(r) = &o.refinement {
        if r.len() != 4 {
            bail!("--refinement takes nx,ny,nz,local_factor");
        }
        cfg.refinement = RefinementSpec {
            nx: r[0],
            ny: r[1],
            nz: r[2],
            local_factor: r[3],
        };
    }
    if let Some(t) = o.t_ambient {
        cfg.thermal.t_ambient = t;
        cfg.calibration = None;
    }
    if o.no_compression {
        cfg.compression = false;
    }
    if let Some(w) = o.width {
        cfg.rbf.width = w;
    }
    if let Some(r) = o.ridge {
        cfg.rbf.ridge = r;
    }
    if let Some(s) = &o.sweep {
        if s.len() != 3 {
            bail!("--sweep takes start,step,end");
        }
        cfg.sweep.start = s[0];
        cfg.sweep.step = s[1];
        cfg.sweep.end = s[2];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep_mesh(cfg: &StudyConfig, m: ModelArgs) -> Result<TetMesh> {
    let geom = cfg.geometry(m.family, m.n)?;
    Ok(build_mesh_with_focus(&geom, &cfg.refinement, Some(cfg.refinement_envelope()?))?)
}

fn report_sweep(o: &SweepOutcome) -> Option<u8> {
    println!(
        "{}: {} models ({} solved, {} reused), {} failed",
        o.family,
        o.records.len(),
        o.solved,
        o.skipped,
        o.failures.len()
    );
    for (id, e) in &o.failures {
        eprintln!("  {id}: {e}");
    }
    match (o.failures.is_empty(), o.solver_failure) {
        (true, _) => None,
        (false, true) => Some(EXIT_SOLVER),
        (false, false) => Some(EXIT_INCOMPLETE),
    }
}

fn sweep_family(cfg: &StudyConfig, family: ShapeFamily, workers: usize) -> Result<Option<u8>> {
    let thermal = prepare_thermal(cfg)?;
    println!("t_ambient = {:.6} °C", thermal.t_ambient);
    let start = Instant::now();
    let outcome = run_sweep(cfg, &thermal, family, workers)?;
    println!("sweep took {:.1} s", start.elapsed().as_secs_f64());
    Ok(report_sweep(&outcome))
}

fn learn(cfg: &StudyConfig, family: ShapeFamily) -> Result<()> {
    let o = pipeline::learn_family(cfg, family)?;
    println!("{family} (seed {})\n[train]\n{}\n[test]\n{}", o.seed, o.train, o.test);
    Ok(())
}

fn run(cli: Cli) -> Result<Option<u8>> {
    let cfg = load_config(&cli.opts)?;
    let workers = cli.opts.workers;
    match cli.command {
        Command::Geometry { model, file } => {
            let poly = cfg.shape(model.family, model.n).base_polygon()?;
            match file {
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    poly.write_csv(BufWriter::new(f))?;
                }
                None => poly.write_csv(io::stdout().lock())?,
            }
        }
        Command::Mesh { action } => match action {
            MeshAction::Build { model } => {
                let mesh = sweep_mesh(&cfg, model)?;
                println!(
                    "{} nodes, {} tets, {} boundary faces, tumour volume {:.3} mm^3 (labelled {:.3})",
                    mesh.node_count(),
                    mesh.tet_count(),
                    mesh.faces.len(),
                    mesh.tumor_overlap_volume(),
                    mesh.tumor_labeled_volume()
                );
            }
            MeshAction::Export { model, file } => {
                let mesh = sweep_mesh(&cfg, model)?;
                let f = File::create(&file).with_context(|| format!("creating {}", file.display()))?;
                let mut w = BufWriter::new(f);
                write_mesh(&mesh, &mut w)?;
                w.flush()?;
            }
            MeshAction::Quality { model } => {
                let mesh = sweep_mesh(&cfg, model)?;
                println!("{}", serde_json::to_string_pretty(&mesh_quality(&mesh))?);
            }
        },
        Command::Solve { model } => {
            {
                let thermal = prepare_thermal(&cfg)?;
                let run = run_sweep_model(&cfg, &thermal, model.family, model.n)?;
                let dir = model_dir(&cfg.output_dir, model.family, model.n);
                write_model_artifacts(&dir, &run)?;
                let r = &run.record;
                println!(
                    "{}: T_max {:.6} °C at x = {:.2} mm, w = {:.4}, fit rmse {:.2e}, energy error {:.2e}, {} PCG iterations, {:.2} s",
                    r.model_id,
                    r.t_max,
                    r.x_max * 1e3,
                    r.w,
                    r.fit_rmse_rel,
                    run.balance.relative_error(),
                    run.stats.iterations,
                    run.wall_time
                );
                println!("artifacts in {}", dir.display());
            }
        }
        Command::Sweep { family } => return sweep_family(&cfg, family, workers),
        Command::MeshStudy => {
            {
                let thermal = prepare_thermal(&cfg)?;
                let report = run_mesh_study(&cfg, &thermal, &cfg.mesh_study)?;
                for (k, l) in report.levels.iter().enumerate() {
                    println!("level {}: {} elements, T_max {:.6} °C", k + 1, l.elements, l.t_max);
                }
                println!(
                    "max relative change {:?} (tolerance {}): {}",
                    report.differences,
                    report.tolerance,
                    if report.passed { "independent" } else { "not independent" }
                );
            }
        }
        Command::Learn { family } => {
            for f in family.map(|f| vec![f]).unwrap_or(ShapeFamily::ALL.to_vec()) {
                learn(&cfg, f)?;
            }
        }
        Command::Figures => {
            let written = make_figures(&cfg)?;
            println!("wrote {} files under {}", written.len(), cfg.output_dir.join("figures").display());
        }
        Command::All => {
            pipeline::write_config(&cfg, &cfg.output_dir)?;
            let mut status = None;
            for family in ShapeFamily::ALL {
                if let Some(code) = sweep_family(&cfg, family, workers)? {
                    status = status.max(Some(code));
                }
            }
            if status.is_some() {
                return Ok(status);
            }
            run_mesh_study(&cfg, &prepare_thermal(&cfg)?, &cfg.mesh_study)?;
            for family in ShapeFamily::ALL {
                learn(&cfg, family)?;
            }
            let written = make_figures(&cfg)?;
            println!("wrote {} figure files", written.len());
        }
    }
    Ok(None)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_solver_failure() => EXIT_SOLVER,
        Some(Error::MissingArtifacts(_) | Error::DatasetSize { .. }) => EXIT_INCOMPLETE,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let workers = cli.opts.workers;
    match thermotact::par::with_workers(workers, || run(cli)) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fcm::eval::{self, Metric, SpecificityOptions};
use fcm::io;
use fcm::representation::{angle_histogram, relative_rotation_angles};
use fcm::statistics::{self, frechet_mean, pga, unbiased_reference, MEAN_MAX_ITER, MEAN_TOL};
use fcm::synthetic::{self, Centerline, CohortParams};
use fcm::{
    build_reference, encode, geodesic, load_mesh_auto, save_mesh, DistanceParams, FcmError, ReconstructOptions,
    Reconstructor, ReferencePrecomp, Result, ShapeRep, TriangleMesh,
};

#[derive(Parser)]
#[command(name = "fcm", version, about = "Fundamental coordinate model shape analysis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, env = "FCM_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Weight between rotation and stretch terms of the distance
    #[arg(long, global = true, default_value_t = fcm::representation::DEFAULT_OMEGA)]
    omega: f64,
    /// Relative energy decrease at which the solver stops
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureKind {
    Fcm,
    Pdm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticKind {
    /// Straight and helical pipe pair
    Pipes,
    /// Two labelled ellipsoid families
    Cohort,
    /// Open cylinder and hemisphere patch
    Open,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a mesh against a reference
    Encode {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a mesh from a representation
    Reconstruct {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Energy report JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Meshes along the geodesic between two shapes
    Interpolate {
        #[arg(long)]
        reference: PathBuf,
        from: PathBuf,
        to: PathBuf,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fréchet mean of a cohort
    Mean {
        #[arg(long)]
        reference: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_rep: PathBuf,
        #[arg(long)]
        out_mesh: PathBuf,
        /// Rounds of re-centering the reference on the mean
        #[arg(long, default_value_t = 0)]
        rebias: usize,
    },
    /// Principal geodesic analysis of a cohort
    Pga {
        #[arg(long)]
        reference: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        coefficients: Option<PathBuf>,
    },
    /// Shape from explicit mode coefficients
    Synthesize {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coefficients: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_rep: Option<PathBuf>,
    },
    /// Random shapes from the model
    Sample {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Near-isometric planar layout of an open surface
    Flatten {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-vertex values, one per line, written as a fourth OBJ column
        #[arg(long)]
        scalars: Option<PathBuf>,
    },
    /// Model coefficients of a cohort as CSV
    Features {
        #[arg(long, value_enum, default_value = "fcm")]
        kind: FeatureKind,
        /// Reference mesh (fcm features)
        #[arg(long)]
        reference: Option<PathBuf>,
        /// PGA model JSON (fcm features)
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Leading modes to keep (default: enough for 99% of the variance)
        #[arg(long)]
        modes: Option<usize>,
        /// Keep only these two modes (1-based, e.g. `1,3`), for 2D projections
        #[arg(long, value_delimiter = ',', conflicts_with = "modes")]
        mode_pair: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo cross-validated linear SVM accuracy curve
    Classify {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = eval::DEFAULT_DRAWS)]
        draws: usize,
        #[arg(long, default_value_t = eval::svm::DEFAULT_REG)]
        reg: f64,
        #[arg(long, value_delimiter = ',', default_values_t = eval::DEFAULT_SHARES)]
        shares: Vec<f64>,
        /// Classifier trained on all rows
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Compactness, specificity and generalization curves
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_modes: usize,
        #[arg(long, default_value_t = eval::metrics::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value = "fcm")]
        metric: Metric,
    },
    /// Histogram of relative transition-rotation angles between two shapes
    Diagnose {
        from: PathBuf,
        to: PathBuf,
        /// Defaults to the first shape
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 24)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write seeded synthetic data sets
    GenSynthetic {
        #[arg(value_enum)]
        kind: SyntheticKind,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 60)]
        per_family: usize,
        #[arg(long, default_value_t = 7)]
        freq: usize,
    },
}

fn reference_from(path: &Path) -> Result<ReferencePrecomp> {
    build_reference(load_mesh_auto(path)?)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn encode_all(reference: &ReferencePrecomp, inputs: &[PathBuf]) -> Result<Vec<ShapeRep>> {
    use rayon::prelude::*;
    inputs
        .par_iter()
        .map(|p| Ok(encode(reference, &load_mesh_auto(p)?)?.0))
        .collect()
}

fn numbered(dir: &Path, prefix: &str, k: usize) -> PathBuf {
    dir.join(format!("{prefix}_{k:03}.obj"))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let params = DistanceParams::new(g.omega)?;
    let opts = ReconstructOptions {
        tol: g.tol,
        max_iter: g.max_iter,
        ..ReconstructOptions::default()
    };
    match cli.command {
        Command::Encode { reference, input, out } => {
            let r = reference_from(&reference)?;
            let (rep, _) = encode(&r, &load_mesh_auto(&input)?)?;
            io::save_rep(&out, &rep, Some(g.omega))
        }
        Command::Reconstruct { reference, input, out, report } => {
            let r = reference_from(&reference)?;
            let rec = Reconstructor::new(&r)?.solve(&io::load_rep(&input)?, &opts)?;
            save_mesh(&rec.mesh, &out)?;
            match report {
                Some(p) => io::write_json(&p, &rec.report),
                None => Ok(()),
            }
        }
        Command::Interpolate { reference, from, to, steps, out_dir } => {
            if steps < 2 {
                return Err(FcmError::InvalidArgument("interpolation needs at least 2 steps".into()));
            }
            let r = reference_from(&reference)?;
            let reps = encode_all(&r, &[from, to])?;
            let solver = Reconstructor::new(&r)?;
            fs::create_dir_all(&out_dir)?;
            for k in 0..steps {
                let s = geodesic(&reps[0], &reps[1], k as f64 / (steps - 1) as f64)?;
                let mesh = solver.solve(&s, &opts)?.mesh;
                save_mesh(&mesh, numbered(&out_dir, "interp", k))?;
            }
            Ok(())
        }
        Command::Mean { reference, inputs, out_rep, out_mesh, rebias } => {
            let meshes = inputs.iter().map(load_mesh_auto).collect::<Result<Vec<_>>>()?;
            let base = unbiased_reference(&load_mesh_auto(&reference)?, &meshes, rebias, &opts)?;
            let mesh = Reconstructor::new(&base.reference)?.solve(&base.mean, &opts)?.mesh;
            io::save_rep(&out_rep, &base.mean, Some(g.omega))?;
            save_mesh(&mesh, &out_mesh)?;
            if rebias > 0 {
                save_mesh(&base.mean_mesh, out_mesh.with_file_name(format!("{}_reference.obj", stem(&out_mesh))))?;
            }
            Ok(())
        }
        Command::Pga { reference, inputs, out, coefficients } => {
            let r = reference_from(&reference)?;
            let reps = encode_all(&r, &inputs)?;
            let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
            let model = pga(&r, &reps, &mu, params)?;
            io::save_pga(&out, &model)?;
            if let Some(p) = coefficients {
                let rows = eval::fcm_features(&model, &reps, None)?;
                let names: Vec<String> = inputs.iter().map(|p| stem(p)).collect();
                io::write_coefficients(io::create(&p)?, &names, &rows)?;
            }
            Ok(())
        }
        Command::Synthesize { reference, model, coefficients, out, out_rep } => {
            let r = reference_from(&reference)?;
            let m = io::load_pga(&model, &r)?;
            let s = statistics::synthesize(&m, &coefficients)?;
            save_mesh(&Reconstructor::new(&r)?.solve(&s, &opts)?.mesh, &out)?;
            match out_rep {
                Some(p) => io::save_rep(&p, &s, Some(m.params.omega())),
                None => Ok(()),
            }
        }
        Command::Sample { reference, model, count, modes, out_dir } => {
            let r = reference_from(&reference)?;
            let m = io::load_pga(&model, &r)?;
            let m = m.truncated(modes.unwrap_or(m.mode_count()).min(m.mode_count()));
            let solver = Reconstructor::new(&r)?;
            fs::create_dir_all(&out_dir)?;
            for (k, s) in statistics::sample(&m, g.seed, count)?.iter().enumerate() {
                save_mesh(&solver.solve(s, &opts)?.mesh, numbered(&out_dir, "sample", k))?;
            }
            Ok(())
        }
        Command::Flatten { input, out, report, scalars } => {
            let r = reference_from(&input)?;
            let f = fcm::flatten::flatten(&r, &opts)?;
            let values = match scalars {
                Some(p) => {
                    let v = fs::read_to_string(&p)?
                        .lines()
                        .enumerate()
                        .filter(|(_, l)| !l.trim().is_empty())
                        .map(|(i, l)| {
                            l.trim().parse::<f64>().map_err(|e| FcmError::Parse {
                                line: i + 1,
                                message: e.to_string(),
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    if v.len() != f.mesh.vertex_count() {
                        return Err(FcmError::InvalidArgument(format!(
                            "{} scalars for {} vertices",
                            v.len(),
                            f.mesh.vertex_count()
                        )));
                    }
                    Some(v)
                }
                None => None,
            };
            fs::write(&out, fcm::mesh::obj_string(&f.mesh, values.as_deref()))?;
            match report {
                Some(p) => io::write_json(&p, &f.report),
                None => Ok(()),
            }
        }
        Command::Features { kind, reference, model, inputs, modes, mode_pair, out } => {
            let names: Vec<String> = inputs.iter().map(|p| stem(p)).collect();
            let pair = match mode_pair.as_deref() {
                None => None,
                Some(&[a, b]) if a >= 1 && b >= 1 => Some((a - 1, b - 1)),
                Some(_) => return Err(FcmError::InvalidArgument("--mode-pair takes two 1-based mode numbers".into())),
            };
            let modes = pair.map(|(a, b)| a.max(b) + 1).or(modes);
            let rows = match kind {
                FeatureKind::Fcm => {
                    let (Some(reference), Some(model)) = (reference, model) else {
                        return Err(FcmError::InvalidArgument("fcm features need --reference and --model".into()));
                    };
                    let r = reference_from(&reference)?;
                    let m = io::load_pga(&model, &r)?;
                    let k = modes.unwrap_or_else(|| eval::modes_for_variance(&m.variances, eval::DEFAULT_FEATURE_VARIANCE));
                    eval::fcm_features(&m, &encode_all(&r, &inputs)?, Some(k))?
                }
                FeatureKind::Pdm => {
                    let meshes = inputs.iter().map(load_mesh_auto).collect::<Result<Vec<TriangleMesh>>>()?;
                    let m = eval::pdm_fit(&meshes)?;
                    let k = modes.unwrap_or_else(|| eval::modes_for_variance(&m.variances, eval::DEFAULT_FEATURE_VARIANCE));
                    eval::pdm_features(&m, &meshes, Some(k))?
                }
            };
            let rows = match pair {
                Some((a, b)) => rows
                    .iter()
                    .map(|r| match (r.get(a), r.get(b)) {
                        (Some(&x), Some(&y)) => Ok(vec![x, y]),
                        _ => Err(FcmError::InvalidArgument(format!("model has only {} modes", r.len()))),
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => rows,
            };
            io::write_coefficients(io::create(&out)?, &names, &rows)
        }
        Command::Classify { features, labels, out, draws, reg, shares, model_out } => {
            let (names, rows) = io::read_coefficients(io::open(&features)?)?;
            let (label_names, y) = io::read_labels(io::open(&labels)?)?;
            if names != label_names {
                return Err(FcmError::InvalidArgument("feature and label files list different shapes".into()));
            }
            let curve = eval::accuracy_curve(&rows, &y, &shares, draws, reg, g.seed)?;
            io::write_accuracy_curve(io::create(&out)?, &curve)?;
            match model_out {
                Some(p) => io::save_classifier(&p, &eval::train_svm(&rows, &y, reg)?),
                None => Ok(()),
            }
        }
        Command::Metrics { reference, inputs, out, max_modes, samples, metric } => {
            let r = reference_from(&reference)?;
            let reps = encode_all(&r, &inputs)?;
            let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
            let model = pga(&r, &reps, &mu, params)?;
            let spec = SpecificityOptions {
                samples,
                seed: g.seed,
                metric,
                reconstruct: opts.clone(),
            };
            let report = eval::metrics_report(&r, &model, &reps, max_modes, &spec)?;
            io::write_metrics(io::create(&out)?, &report)
        }
        Command::Diagnose { from, to, reference, bins, out } => {
            let r = reference_from(reference.as_ref().unwrap_or(&from))?;
            let reps = encode_all(&r, &[from, to])?;
            let angles = relative_rotation_angles(&reps[0], &reps[1])?;
            let max = angles.iter().copied().fold(0.0, f64::max);
            let hist = angle_histogram(&angles, bins);
            match out {
                Some(p) => io::write_histogram(io::create(&p)?, &hist)?,
                None => io::write_histogram(std::io::stdout().lock(), &hist)?,
            }
            eprintln!("max relative angle {}", fcm::mesh::fmt_f64(max));
            Ok(())
        }
        Command::GenSynthetic { kind, out_dir, per_family, freq } => {
            fs::create_dir_all(&out_dir)?;
            match kind {
                SyntheticKind::Pipes => {
                    save_mesh(&synthetic::pipe(Centerline::Straight), out_dir.join("pipe_cyl.obj"))?;
                    save_mesh(&synthetic::pipe(Centerline::Helix), out_dir.join("pipe_helix.obj"))
                }
                SyntheticKind::Open => {
                    save_mesh(&synthetic::open_cylinder(32, 12, 1.0, 2.0), out_dir.join("cylinder.obj"))?;
                    save_mesh(
                        &synthetic::hemisphere_patch(12, 1.0, std::f64::consts::FRAC_PI_2),
                        out_dir.join("hemisphere.obj"),
                    )
                }
                SyntheticKind::Cohort => {
                    let p = CohortParams {
                        freq,
                        per_family,
                        ..CohortParams::default()
                    };
                    let c = synthetic::ellipsoid_families(&p, g.seed);
                    save_mesh(&c.template, out_dir.join("template.obj"))?;
                    let mut names = Vec::new();
                    for (k, m) in c.meshes.iter().enumerate() {
                        let name = format!("shape_{k:03}");
                        save_mesh(m, out_dir.join(format!("{name}.obj")))?;
                        names.push(name);
                    }
                    io::write_labels(io::create(&out_dir.join("labels.csv"))?, &names, &c.labels)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[argument]: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

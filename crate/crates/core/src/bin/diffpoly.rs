//! Command-line front end: graph and signal generation, inference,
//! projection, ranking, polytope grids and the experiment runner.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use diffpoly::experiments::grid::{polytope_grid, GridRequest};
use diffpoly::experiments::{draw_graph, run_to_dir, ExperimentConfig, ExperimentKind, GraphFamily, SampleCount};
use diffpoly::graphmodels::{diffusion_operator, AdjacencyMatrix};
use diffpoly::matcore::{eig_sym, matrix_csv_string, read_matrix_csv, Eigenbasis};
use diffpoly::metrics::{diff_simple, diff_sparse, edge_score, mepre, metric_row};
use diffpoly::polytope::{build_constraints, reconstruct};
use diffpoly::seeding::stream;
use diffpoly::select::{hypothesis_test, normalize_candidate, polytope_program, project_candidate, solve, Strategy};
use diffpoly::signals::{generate_observations, sample_covariance, streaming_covariance, DiffusionCounts};
use diffpoly::{DiffusionOperator, ObservationSet, SourceDistribution, SymMatrix};

#[derive(Parser)]
#[command(name = "diffpoly", version, about = "Diffusion-matrix polytopes from stationary graph signals")]
struct Cli {
    /// Master seed (experiments: overrides the config's).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: current directory, or the config's out_dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Trial count for experiments.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Membership tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a graph; writes adjacency.csv and diffusion.csv.
    GenGraph {
        #[arg(long, default_value = "rg")]
        model: GraphFamily,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.6)]
        radius: f64,
        #[arg(long, default_value_t = 0.3)]
        probability: f64,
    },
    /// Diffuse random signals on an operator; writes observations.csv, or
    /// covariance.csv with --covariance-only.
    GenSignals {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        counts: CountArgs,
        #[arg(long, default_value = "uniform")]
        source: SourceDistribution,
        #[arg(long)]
        covariance_only: bool,
    },
    /// Select an operator from the polytope by linear programming.
    Infer {
        #[arg(long)]
        strategy: Strategy,
        #[command(flatten)]
        input: BasisInput,
        /// Ground-truth operator; prints metric rows and writes roc.csv.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also write the LP (objective and constraint rows) as CSV.
        #[arg(long)]
        dump_problem: bool,
    },
    /// Project a candidate matrix onto the polytope.
    Project {
        #[arg(long)]
        candidate: PathBuf,
        #[command(flatten)]
        input: BasisInput,
        /// Divide the candidate by its largest eigenvalue first.
        #[arg(long)]
        normalize: bool,
    },
    /// Rank every matrix CSV in a directory by projection distance.
    Rank {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        signals: PathBuf,
    },
    /// Membership grid of a 3-vertex polytope, optionally overlaid with
    /// sample-covariance repetitions.
    Grid {
        /// 3×3 adjacency CSV; a random dense one is drawn from --seed if absent.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        repetitions: usize,
        /// Signals per repetition, or `inf` for the exact basis.
        #[arg(long, default_value = "1000")]
        m: SampleCount,
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 5)]
        k_max: u32,
    },
    /// Run a named experiment.
    Experiment {
        name: ExperimentKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Permit sample counts above 10^5.
        #[arg(long)]
        allow_large_m: bool,
    },
}

#[derive(Args)]
struct CountArgs {
    #[arg(long, default_value_t = 1)]
    k_min: u32,
    #[arg(long, default_value_t = 10)]
    k_max: u32,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BasisInput {
    /// Observation CSV; its sample covariance supplies the basis.
    #[arg(long)]
    signals: Option<PathBuf>,
    /// Covariance matrix CSV.
    #[arg(long)]
    covariance: Option<PathBuf>,
}

impl BasisInput {
    fn basis(&self) -> Result<Eigenbasis> {
        if let Some(path) = &self.signals {
            return Ok(sample_covariance(&read_observations(path)?)?.basis);
        }
        let path = self.covariance.as_ref().expect("clap enforces one input");
        Ok(eig_sym(&read_matrix(path)?)?)
    }
}

fn read_matrix(path: &Path) -> Result<SymMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_matrix_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn read_observations(path: &Path) -> Result<ObservationSet> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ObservationSet::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn vector_csv(header: &str, values: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for v in values {
        s.push_str(&format!("{v:.16e}\n"));
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let seed = cli.seed.unwrap_or(1);
    match cli.command {
        Command::GenGraph { model, n, radius, probability } => {
            let mut rng = stream(seed, "gen-graph", &[]);
            let w = draw_graph(model, n, radius, probability, &mut rng)?;
            let t = diffusion_operator(&w)?;
            write_file(&out, "adjacency.csv", &matrix_csv_string(&w.w))?;
            write_file(&out, "diffusion.csv", &matrix_csv_string(&t.t))?;
            println!("{}: {} edges, {} rejected draws", w.model, w.edge_count(), w.rejections);
        }
        Command::GenSignals { operator, m, counts, source, covariance_only } => {
            let t = DiffusionOperator::from_matrix(read_matrix(&operator)?)?.t;
            let counts = DiffusionCounts::new(counts.k_min, counts.k_max)?;
            let mut rng = stream(seed, "gen-signals", &[]);
            if covariance_only {
                let cov = streaming_covariance(&t, m, counts, source, &mut rng)?;
                write_file(&out, "covariance.csv", &matrix_csv_string(&cov.sigma))?;
            } else {
                let obs = generate_observations(&t, m, counts, source, &mut rng)?;
                fs::create_dir_all(&out)?;
                let mut w = BufWriter::new(File::create(out.join("observations.csv"))?);
                obs.write_csv(&mut w)?;
                w.flush()?;
            }
        }
        Command::Infer { strategy, input, truth, dump_problem } => {
            let basis = input.basis()?;
            let c = build_constraints(&basis);
            if dump_problem {
                let objective = match strategy {
                    Strategy::Simple => vec![1.0; c.n()],
                    Strategy::Sparse => diffpoly::select::sparse_objective(&c),
                };
                let lp = polytope_program(&c, objective.clone());
                write_file(&out, "objective.csv", &vector_csv("objective", &lp.objective))?;
                write_file(&out, "constraints.csv", &c.to_csv())?;
            }
            let sel = solve(&c, strategy)?;
            let t_hat = reconstruct(&basis, &sel.lam)?;
            write_file(&out, "lambda.csv", &vector_csv("lambda", sel.lam.values()))?;
            write_file(&out, "inferred.csv", &matrix_csv_string(&t_hat))?;
            println!("objective,{:.16e}", sel.objective);
            println!("iterations,{}", sel.iterations);
            if sel.is_degenerate() {
                println!("degenerate,{} (optimum may not be unique)", sel.degenerate_directions);
            }
            if let Some(path) = truth {
                let t = read_matrix(&path)?;
                let score = edge_score(&t, &t_hat)?;
                for (name, value) in [
                    ("mepre", mepre(&t, &t_hat)?),
                    ("diff_simple", diff_simple(&t, &t_hat)?),
                    ("diff_sparse", diff_sparse(&t, &t_hat)?),
                    ("precision", score.precision),
                    ("recall", score.recall),
                    ("f_measure", score.f_measure),
                ] {
                    println!("{}", metric_row(name, value, &[("strategy", format!("{strategy:?}").to_lowercase())]));
                }
                write_file(&out, "roc.csv", &score.roc_csv())?;
            }
        }
        Command::Project { candidate, input, normalize } => {
            let basis = input.basis()?;
            let mut t_m = read_matrix(&candidate)?;
            if normalize {
                t_m = normalize_candidate(&t_m)?;
            }
            let c = build_constraints(&basis);
            let result = project_candidate(&c, &t_m)?;
            write_file(&out, "projection.csv", &result.to_csv())?;
            println!("distance,{:.16e}", result.distance);
            if !result.converged {
                log::warn!("projection stopped before convergence but satisfies the constraints");
            }
        }
        Command::Rank { candidates, signals } => {
            let mut files: Vec<PathBuf> = fs::read_dir(&candidates)
                .with_context(|| format!("listing {}", candidates.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            let matrices = files.iter().map(|p| read_matrix(p)).collect::<Result<Vec<_>>>()?;
            let obs = read_observations(&signals)?;
            let ranking = hypothesis_test(&matrices, &obs)?;
            let mut s = String::from("rank,candidate,distance,converged,error\n");
            for (rank, e) in ranking.iter().enumerate() {
                let name = files[e.index].file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
                match &e.outcome {
                    Ok(p) => s.push_str(&format!("{},{name},{:.16e},{},\n", rank + 1, p.distance, p.converged)),
                    Err(err) => s.push_str(&format!("{},{name},,,{}\n", rank + 1, err.to_string().replace(',', ";"))),
                }
            }
            write_file(&out, "ranking.csv", &s)?;
            print!("{s}");
        }
        Command::Grid { matrix, step, repetitions, m, k_min, k_max } => {
            let w = match matrix {
                Some(path) => AdjacencyMatrix::new(read_matrix(&path)?)?,
                None => draw_graph(GraphFamily::Uniform, 3, 0.0, 0.0, &mut stream(seed, "grid-graph", &[]))?,
            };
            let req = GridRequest {
                w,
                step,
                tolerance: cli.tolerance.unwrap_or(diffpoly::polytope::DEFAULT_TOLERANCE),
                repetitions,
                m,
                counts: DiffusionCounts::new(k_min, k_max)?,
                source: SourceDistribution::Uniform,
                seed,
            };
            let grid = polytope_grid(&req)?;
            write_file(&out, "grid.csv", &grid.to_csv())?;
            println!("truth,{},{}", grid.truth.0, grid.truth.1);
        }
        Command::Experiment { name, config, allow_large_m } => {
            let mut cfg = match &config {
                Some(path) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    ExperimentConfig::parse(&text)?
                }
                None => ExperimentConfig::defaults(name),
            };
            if cfg.experiment != name {
                bail!(diffpoly::Error::InvalidInput(format!(
                    "config describes {} but {} was requested",
                    cfg.experiment, name
                )));
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(t) = cli.trials {
                cfg.trials = t;
            }
            if let Some(t) = cli.tolerance {
                cfg.tolerance = t;
            }
            if let Some(d) = cli.out_dir {
                cfg.out_dir = d;
            }
            cfg.allow_large_m |= allow_large_m;
            let (output, files) = run_to_dir(&cfg)?;
            print!("{}", output.summary_csv());
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<diffpoly::Error>()) {
        Some(e) if e.is_solver_failure() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line driver: `bench run` writes a result table, `bench verify`
//! runs the verification sweep and `bench svg` draws a coarsening pattern.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hcurl_amg::bench::{
    build_problem, csv_string, dump_coarsening_svg, init_thread_pool_from_env, run_verification,
    write_csv_file, CoarseningPattern, ExperimentConfig, Family, MuLayout, VerifyConfig,
};
use hcurl_amg::multilevel::Method;
use hcurl_amg::splitting::{build_algebraic_splitting, build_refinement_splitting, DEFAULT_THETA};
use hcurl_amg::verify;

#[derive(Parser)]
#[command(
    name = "bench",
    about = "AMG experiments for edge-element curl-curl systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iteration counts and operator complexities per refinement level.
    Run {
        #[arg(long, default_value = "uniform")]
        family: Family,
        /// Refinement levels, e.g. `2..5` or `1,3,4`.
        #[arg(long, default_value = "2..5")]
        levels: String,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value = "geo,ref,alg", value_delimiter = ',')]
        methods: Vec<Method>,
        /// Fine level plus a single coarse level.
        #[arg(long)]
        two_grid: bool,
        /// Coarsest mesh for the delaunay family.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        mu: Option<MuLayout>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        max_levels: usize,
        #[arg(long, default_value_t = 32)]
        min_coarse: usize,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        /// Output file; the table goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural checks on the verification problems.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt every splitting with a second path through one node.
        #[arg(long)]
        inject_double_path: bool,
        /// Coarsest mesh for the unstructured case.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Also write the reports as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// SVG of the exterior paths and coarse nodes on the finest mesh.
    Svg {
        #[arg(long, default_value = "uniform")]
        family: Family,
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value = "alg")]
        method: Method,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_levels(s: &str) -> Result<Vec<u32>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u32 = b
            .trim_start_matches('=')
            .trim()
            .parse()
            .map_err(|e| format!("{e}"))?;
        if a > b {
            return Err(format!("empty level range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|e| format!("{e}")))
        .collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> hcurl_amg::Result<ExitCode> {
    init_thread_pool_from_env()?;
    match cli.command {
        Command::Run {
            family,
            levels,
            beta,
            tol,
            methods,
            two_grid,
            mesh,
            mu,
            seed,
            max_levels,
            min_coarse,
            theta,
            out,
        } => {
            let config = ExperimentConfig {
                family,
                levels: parse_levels(&levels).map_err(hcurl_amg::Error::InvalidArgument)?,
                beta,
                tol,
                methods,
                two_grid_only: two_grid,
                mesh_file: mesh,
                mu_layout: mu,
                seed,
                max_levels,
                min_coarse,
                theta,
                ..ExperimentConfig::default()
            };
            let rows = hcurl_amg::bench::run_experiment(&config)?;
            for row in &rows {
                for (m, r) in &row.results {
                    if let Some(e) = &r.error {
                        eprintln!("L={} {m}: {e}", row.refinement_level);
                    }
                }
            }
            match out {
                Some(path) => write_csv_file(&rows, path)?,
                None => print!("{}", csv_string(&rows)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            seed,
            inject_double_path,
            mesh,
            csv,
        } => {
            let config = VerifyConfig {
                seed,
                inject_double_path,
                mesh_file: mesh,
                ..VerifyConfig::default()
            };
            let reports = run_verification(&config)?;
            for r in &reports {
                println!("{r}");
            }
            if let Some(path) = csv {
                verify::write_csv(&reports, std::fs::File::create(path)?)?;
            }
            let failed = reports.iter().filter(|r| r.failed()).count();
            println!("{} checks, {failed} failed", reports.len());
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Svg {
            family,
            level,
            method,
            mesh,
            beta,
            out,
        } => {
            let config = ExperimentConfig {
                family,
                beta,
                mesh_file: mesh,
                ..ExperimentConfig::default()
            };
            let problem = build_problem(&config, level)?;
            let sys = &problem.system;
            let pattern = match method {
                Method::Alg => {
                    let alg = build_algebraic_splitting(&sys.a, &sys.gradient, DEFAULT_THETA)?;
                    CoarseningPattern::from_algebraic(sys, problem.finest(), &alg)
                }
                Method::Ref if level > 0 => {
                    let d = problem.meshes.depth();
                    let split = build_refinement_splitting(
                        &problem.meshes.meshes()[d - 1],
                        problem.finest(),
                        &problem.meshes.maps()[d - 1],
                        &sys.free_edges,
                        sys.ndofs(),
                    )?;
                    CoarseningPattern::from_refinement(&split)
                }
                _ => {
                    return Err(hcurl_amg::Error::InvalidArgument(format!(
                        "no splitting to draw for method {method} at level {level}"
                    )))
                }
            };
            dump_coarsening_svg(problem.finest(), &pattern, &out)?;
            println!(
                "{}: {} paths, {} coarse nodes, {} mesh edges",
                out.display(),
                pattern.paths.len(),
                pattern.coarse.len(),
                problem.finest().num_edges()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

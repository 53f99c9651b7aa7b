use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fanatic_core::fanmeasure::{sample_mixture, sector_masses, MeasureCloud};
use fanatic_core::pipeline::{bordism_table, verify_fan2, verify_fan3, Report};
use fanatic_core::solver::{
    explore_3fan_2measures, solve_2fan_3measures, ExploreRequest, SolveRequest, DEFAULT_BUDGET,
};
use fanatic_core::{MeasureError, PipelineError, SolveError};

const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "fanatic",
    version,
    about = "Equivariant test-map checks and fan partitions of measures on the sphere"
)]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FANATIC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the 2-fan test map and its singular set for odd n.
    VerifyFan2 {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        p: u32,
        /// Integer base vector of the polygon, "x,y".
        #[arg(long, default_value = "1,0", value_parser = parse_v0)]
        v0: [i64; 2],
    },
    /// Check the 3-fan test map for alpha = (p,q,r)/n.
    VerifyFan3 {
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = parse_parts)]
        alpha: [u32; 3],
    },
    /// Abelianizations of Q4n for n up to max-n.
    BordismTable {
        #[arg(long)]
        max_n: u32,
    },
    /// Find a 2-fan cutting three measures in proportions s : t.
    Solve {
        #[arg(long)]
        mu1: PathBuf,
        #[arg(long)]
        mu2: PathBuf,
        #[arg(long)]
        mu3: PathBuf,
        #[arg(long, value_parser = parse_split)]
        alpha: (f64, f64),
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Also write the solution JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a 3-fan cutting two measures in proportions p : q : r (exploratory).
    #[command(name = "explore-3fan")]
    Explore3Fan {
        #[arg(long)]
        mu1: PathBuf,
        #[arg(long)]
        mu2: PathBuf,
        #[arg(long, value_parser = parse_parts)]
        alpha: [u32; 3],
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Write a seeded mixture cloud in the measure JSON format.
    SampleMeasure {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        blobs: usize,
        #[arg(long, default_value_t = 0.35)]
        spread: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_v0(s: &str) -> Result<[i64; 2], String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(format!("expected x,y, got {s:?}")),
    }
}

fn parse_parts(s: &str) -> Result<[u32; 3], String> {
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [p, q, r] if *p > 0 && *q > 0 && *r > 0 => Ok([*p, *q, *r]),
        [_, _, _] => Err("entries must be positive".into()),
        _ => Err(format!("expected p,q,r, got {s:?}")),
    }
}

fn parse_split(s: &str) -> Result<(f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b] if *a > 0.0 && *b > 0.0 && (a + b - 1.0).abs() <= 1e-9 => Ok((*a, *b)),
        [a, b] => Err(format!("{a} + {b} must be positive parts summing to 1")),
        _ => Err(format!("expected s,t, got {s:?}")),
    }
}

#[derive(Debug)]
enum CliError {
    Io(PathBuf, std::io::Error),
    Measure(PathBuf, MeasureError),
    Solve(SolveError),
    Pipeline(PipelineError),
    Threads(String),
    Invalid(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Measure(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Solve(e) => write!(f, "{e}"),
            CliError::Pipeline(e) => write!(f, "{e}"),
            CliError::Threads(e) => write!(f, "threads: {e}"),
            CliError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

fn load(path: &Path) -> Result<MeasureCloud, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
    MeasureCloud::from_json(&text).map_err(|e| CliError::Measure(path.into(), e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.into(), e))
}

fn print_report(report: &Report, json: bool) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("report serializes")
        );
        return;
    }
    let params: Vec<String> = report
        .parameters
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    println!("{} {}", report.command, params.join(" "));
    for c in &report.checks {
        let tag = match (c.informational, c.passed) {
            (true, _) => "info",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        print!("  [{tag}] {}: {}", c.name, c.detail);
        if let Some(w) = &c.witness {
            print!(" (witness: {w})");
        }
        println!();
    }
    for key in [
        "class",
        "label_constant",
        "subspace_stabilizer",
        "objective",
        "evaluations",
    ] {
        if let Some(v) = report.data.get(key) {
            println!("  {key}: {v}");
        }
    }
    println!(
        "  verdict: {}",
        if report.passed() {
            "all checks pass"
        } else {
            "some checks failed"
        }
    );
}

fn verdict(report: &Report) -> u8 {
    if report.passed() {
        0
    } else {
        EXIT_CHECK
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Threads("must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let json = cli.json;
    match cli.command {
        Command::VerifyFan2 { n, p, v0 } => {
            let report = verify_fan2(n, p, v0).map_err(CliError::Pipeline)?;
            print_report(&report, json);
            Ok(verdict(&report))
        }
        Command::VerifyFan3 { n, alpha } => {
            let parts = alpha.map(|x| x as usize);
            let report = verify_fan3(n, parts).map_err(CliError::Pipeline)?;
            print_report(&report, json);
            Ok(verdict(&report))
        }
        Command::BordismTable { max_n } => {
            let (report, rows) = bordism_table(max_n).map_err(CliError::Pipeline)?;
            if json {
                print_report(&report, true);
            } else {
                println!("{:>4}  {:<10} scope", "n", "Ab(Q4n)");
                for r in rows {
                    let scope = if r.in_scope {
                        "odd n"
                    } else {
                        "even n, outside the fan results"
                    };
                    println!("{:>4}  {:<10} {scope}", r.n, r.group);
                }
            }
            Ok(verdict(&report))
        }
        Command::Solve {
            mu1,
            mu2,
            mu3,
            alpha,
            tol,
            seed,
            budget,
            out,
        } => {
            let measures = vec![load(&mu1)?, load(&mu2)?, load(&mu3)?];
            let mut req = SolveRequest::new(measures, alpha);
            if let Some(t) = tol {
                req.tolerance = t;
            }
            req.seed = seed;
            req.budget = budget;
            let result = solve_2fan_3measures(&req).map_err(CliError::Solve)?;

            let mut report = Report::new("solve");
            report.param("alpha", [alpha.0, alpha.1]);
            report.param("tolerance", req.tolerance);
            report.param("seed", seed);
            report.param("budget", budget);
            let recomputed: Vec<f64> = sector_masses(&result.fan, &req.measures)
                .map_err(|e| CliError::Solve(e.into()))?
                .masses
                .iter()
                .map(|m| (m[0] - alpha.0).abs())
                .collect();
            report.check(
                "residuals_recomputed",
                recomputed == result.residuals,
                "residuals agree with an independent sector-mass evaluation",
                Some(format!("{recomputed:?} vs {:?}", result.residuals)),
            );
            report.check(
                "converged",
                result.converged,
                format!(
                    "max residual {:.3e} against tolerance {:.3e}",
                    result.objective, result.tolerance
                ),
                Some(format!(
                    "residuals {:?} after {} evaluations",
                    result.residuals, result.evaluations
                )),
            );
            report.datum("objective", result.objective);
            report.datum("evaluations", result.evaluations);
            report.datum("solution", &result);
            if let Some(path) = out {
                write(
                    &path,
                    &serde_json::to_string_pretty(&result).expect("result serializes"),
                )?;
            }
            print_report(&report, json);
            Ok(
                if !report.get("residuals_recomputed").is_some_and(|c| c.passed) {
                    EXIT_CHECK
                } else if result.converged {
                    0
                } else {
                    EXIT_BUDGET
                },
            )
        }
        Command::Explore3Fan {
            mu1,
            mu2,
            alpha,
            tol,
            seed,
            budget,
        } => {
            let measures = vec![load(&mu1)?, load(&mu2)?];
            let mut req = ExploreRequest::from_parts(measures, alpha).map_err(CliError::Solve)?;
            if let Some(t) = tol {
                req.tolerance = t;
            }
            req.seed = seed;
            req.budget = budget;
            let result = explore_3fan_2measures(&req).map_err(CliError::Solve)?;
            let mut report = Report::new("explore-3fan");
            report.param("alpha", alpha);
            report.param("tolerance", req.tolerance);
            report.param("seed", seed);
            report.param("budget", budget);
            report.note(
                "exploratory",
                true,
                "no existence theorem covers this case; a miss is a legitimate outcome",
            );
            report.note(
                "converged",
                result.converged,
                format!(
                    "best residual {:.3e} against tolerance {:.3e}",
                    result.objective, result.tolerance
                ),
            );
            report.datum("exploratory", true);
            report.datum("objective", result.objective);
            report.datum("evaluations", result.evaluations);
            report.datum("solution", &result);
            print_report(&report, json);
            Ok(0)
        }
        Command::SampleMeasure {
            seed,
            points,
            blobs,
            spread,
            out,
        } => {
            if points == 0 || !(spread.is_finite() && spread >= 0.0) {
                return Err(CliError::Invalid(
                    "need at least one point and a finite, non-negative spread".into(),
                ));
            }
            let text = sample_mixture(seed, points, blobs, spread).to_json();
            match out {
                Some(path) => write(&path, &text)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

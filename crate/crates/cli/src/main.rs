//! Batch front-end: config ingestion, command dispatch, table and report
//! emission.
//!
//! Exit codes: 0 success, 2 validation error, 3 unconverged result (the
//! artifact is still written, flagged), 1 anything else.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::RunConfig;
use orbitdet::{
    convergence_report, det_coefficient_partials, det_series, enumerate_fixed_points,
    linear_response_from, srb_average, trace_b, trace_table, ulam_response_fd, Observable,
    TraceData, TrigMapFamily, UlamModel, Weight,
};
use output::{fmt_float, OutDir};

#[derive(Parser)]
#[command(name = "orbitdet", version, about = "Invariant-measure averages and linear response for expanding circle maps via periodic-orbit determinants")]
struct Cli {
    /// Run configuration (JSON)
    #[arg(long, global = true, default_value = "orbitdet.json")]
    config: PathBuf,

    /// Output directory for artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = all cores); results are identical for any count
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Truncation order of the determinant series
    #[arg(long, global = true)]
    n_max: Option<usize>,

    /// Base parameter value
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau: Option<f64>,

    /// Ulam oracle resolution
    #[arg(long, global = true)]
    bins: Option<usize>,

    /// Finite-difference step of the Ulam response oracle
    #[arg(long, global = true)]
    fd_step: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate Fix(T^n) and write them as CSV
    PeriodicPoints {
        /// Period n
        #[arg(long)]
        period: u32,
    },
    /// Per-n traces (b, bu, btau, butau) at the re-based parameter
    Traces,
    /// Determinant coefficients and their partials
    DetCoeffs,
    /// Smallest determinant zero and the topological pressure
    Pressure {
        /// Weight entering the traces
        #[arg(long, value_enum, default_value_t = WeightKind::Srb)]
        weight: WeightKind,
        /// Tilt of the SRB weight
        #[arg(long, allow_hyphen_values = true)]
        u: Option<f64>,
    },
    /// SRB average of the observable at the base parameter
    SrbAverage,
    /// Linear response of the SRB average at the base parameter
    LinearResponse,
    /// Determinant method against the Ulam oracle, side by side
    OracleCompare,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKind {
    /// -u g - log T'
    Srb,
    /// zero weight (counts periodic points; pressure = topological entropy)
    Zero,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<orbitdet::Error> for Failure {
    fn from(e: orbitdet::Error) -> Self {
        use orbitdet::Error::*;
        let code = match e {
            BadDegree { .. } | EmptyTauDomain { .. } | TauOutsideDomain { .. }
            | NotExpanding { .. } | PeriodTooLarge { .. } | GridTooCoarse { .. }
            | BadBinCount { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

/// Effective parameters after CLI overrides.
struct Params {
    n_max: usize,
    tau: f64,
    u: f64,
    bins: usize,
    fd_step: f64,
    enum_cap: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = RunConfig::parse(&text).map_err(Failure::validation)?;
    let family = cfg.family().map_err(Failure::validation)?;
    let observable = cfg.observable().map_err(Failure::validation)?;

    let params = Params {
        n_max: cli.n_max.unwrap_or(cfg.defaults.n_max),
        tau: cli.tau.unwrap_or(cfg.defaults.tau),
        u: cfg.defaults.u,
        bins: cli.bins.unwrap_or(cfg.defaults.bins),
        fd_step: cli.fd_step.unwrap_or(cfg.defaults.fd_step),
        enum_cap: cfg.defaults.enum_cap,
    };
    let workers = cli.workers.unwrap_or(cfg.defaults.workers);

    let out = OutDir::create(&cli.out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })?;
    pool.install(|| dispatch(cli, &family, &observable, &params, &out))
}

fn dispatch(
    cli: &Cli,
    family: &TrigMapFamily,
    observable: &Observable,
    p: &Params,
    out: &OutDir,
) -> Result<u8, Failure> {
    match &cli.command {
        Command::PeriodicPoints { period } => {
            let set = enumerate_fixed_points(family, p.tau, *period, p.enum_cap)?;
            let degree = family.degree();
            let path = out.write_csv(
                "periodic_points.csv",
                "itinerary,x,residual",
                set.points.iter().map(|r| {
                    format!(
                        "{},{},{}",
                        fmt_itinerary(&r.itinerary, degree),
                        fmt_float(r.x),
                        fmt_float(r.residual)
                    )
                }),
            )?;
            println!(
                "periodic-points: n={} tau={} count={}",
                period,
                p.tau,
                set.points.len()
            );
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::Traces => {
            let rebased = family.rebase(p.tau)?;
            let table = trace_table(&rebased, observable, p.n_max as u32, p.enum_cap)?;
            let path = out.write_csv(
                "traces.csv",
                "n,b,bu,btau,butau",
                table.iter().enumerate().map(|(i, row)| {
                    format!(
                        "{},{},{},{},{}",
                        i + 1,
                        fmt_float(row.b),
                        fmt_float(row.bu),
                        fmt_float(row.btau),
                        fmt_float(row.butau)
                    )
                }),
            )?;
            println!("traces: n_max={} tau={}", p.n_max, p.tau);
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::DetCoeffs => {
            let series = det_series(family, observable, p.tau, p.n_max, p.enum_cap)?;
            let path = out.write_csv(
                "det_coeffs.csv",
                "n,a,au,atau,autau",
                (0..=series.n_max).map(|n| {
                    format!(
                        "{},{},{},{},{}",
                        n,
                        fmt_float(series.a[n]),
                        fmt_float(series.au[n]),
                        fmt_float(series.atau[n]),
                        fmt_float(series.autau[n])
                    )
                }),
            )?;
            println!("det-coeffs: n_max={} tau={}", p.n_max, p.tau);
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::Pressure { weight, u } => {
            let u = u.unwrap_or(p.u);
            let zero = Observable::zero();
            let rows: Vec<TraceData> = (1..=p.n_max as u32)
                .map(|n| {
                    let w = match weight {
                        WeightKind::Srb => Weight::Srb { observable, u },
                        WeightKind::Zero => Weight::Raw(&zero),
                    };
                    trace_b(family, p.tau, w, n, p.enum_cap).map(|b| TraceData {
                        b,
                        bu: 0.0,
                        btau: 0.0,
                        butau: 0.0,
                    })
                })
                .collect::<orbitdet::Result<_>>()?;
            let series = det_coefficient_partials(&rows, p.n_max);
            let zero_loc = series.find_smallest_zero()?;

            #[derive(Serialize)]
            struct PressureOut {
                z_star: f64,
                pressure: f64,
            }
            let path = out.write_json(
                "pressure.json",
                &PressureOut {
                    z_star: zero_loc.z_star,
                    pressure: zero_loc.pressure,
                },
            )?;
            println!(
                "pressure: z_star={} pressure={}",
                fmt_float(zero_loc.z_star),
                fmt_float(zero_loc.pressure)
            );
            println!("wrote {}", path.display());
            Ok(0)
        }

        Command::SrbAverage => {
            let result = srb_average(family, observable, p.tau, p.n_max, p.enum_cap)?;
            let path = out.write_json("srb_average.json", &result)?;
            println!(
                "srb-average: {}{}",
                fmt_float(result.srb_average),
                if result.converged { "" } else { "  [UNCONVERGED]" }
            );
            println!("wrote {}", path.display());
            Ok(if result.converged { 0 } else { 3 })
        }

        Command::LinearResponse => {
            let series = det_series(family, observable, p.tau, p.n_max, p.enum_cap)?;
            let result = linear_response_from(&series, p.tau)?;
            let report = convergence_report(&series);
            let json_path = out.write_json("linear_response.json", &result)?;
            let csv_path = out.write_csv(
                "convergence.csv",
                "n,d,dz,du,dtau,dtauz,dutau",
                report.rows.iter().map(|r| {
                    format!(
                        "{},{},{},{},{},{},{}",
                        r.n,
                        fmt_float(r.d),
                        fmt_float(r.dz),
                        fmt_float(r.du),
                        fmt_float(r.dtau),
                        fmt_float(r.dtauz),
                        fmt_float(r.dutau)
                    )
                }),
            )?;
            println!(
                "linear-response: {}{}",
                fmt_float(result.linear_response.unwrap_or(f64::NAN)),
                if result.converged { "" } else { "  [UNCONVERGED]" }
            );
            println!("wrote {}", json_path.display());
            println!("wrote {}", csv_path.display());
            Ok(if result.converged { 0 } else { 3 })
        }

        Command::OracleCompare => {
            let det_avg = srb_average(family, observable, p.tau, p.n_max, p.enum_cap)?;
            let ulam_avg = UlamModel::build(family, p.tau, p.bins)?.srb_average(observable)?;

            let rebased = family.rebase(p.tau)?;
            let series = det_series(family, observable, p.tau, p.n_max, p.enum_cap)?;
            let det_resp = linear_response_from(&series, p.tau)?;
            let ulam_resp = ulam_response_fd(&rebased, observable, p.fd_step, p.bins)?;

            #[derive(Serialize)]
            struct Pair {
                determinant: f64,
                ulam: f64,
                abs_diff: f64,
            }
            #[derive(Serialize)]
            struct CompareOut {
                tau: f64,
                n_max: usize,
                bins: usize,
                fd_step: f64,
                converged: bool,
                srb_average: Pair,
                linear_response: Pair,
            }
            let converged = det_avg.converged && det_resp.converged;
            let resp = det_resp.linear_response.unwrap_or(f64::NAN);
            let report = CompareOut {
                tau: p.tau,
                n_max: p.n_max,
                bins: p.bins,
                fd_step: p.fd_step,
                converged,
                srb_average: Pair {
                    determinant: det_avg.srb_average,
                    ulam: ulam_avg,
                    abs_diff: (det_avg.srb_average - ulam_avg).abs(),
                },
                linear_response: Pair {
                    determinant: resp,
                    ulam: ulam_resp,
                    abs_diff: (resp - ulam_resp).abs(),
                },
            };
            let path = out.write_json("oracle_compare.json", &report)?;
            println!(
                "oracle-compare: srb diff={} response diff={}{}",
                fmt_float(report.srb_average.abs_diff),
                fmt_float(report.linear_response.abs_diff),
                if converged { "" } else { "  [UNCONVERGED]" }
            );
            println!("wrote {}", path.display());
            Ok(if converged { 0 } else { 3 })
        }
    }
}

fn fmt_itinerary(digits: &[u8], degree: u32) -> String {
    if degree <= 10 {
        digits.iter().map(|d| (b'0' + d) as char).collect()
    } else {
        digits
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

//! `helmcsg` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 a solve
//! did not converge.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helmcsg::experiments::{
    record_stem, run, write_record, ExperimentConfig, Metric, Mode, Precondition, RunRecord, Sweep,
};
use helmcsg::Error;

#[derive(Parser)]
#[command(
    name = "helmcsg",
    version,
    about = "CSG-preconditioned Helmholtz experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete and continuous Laplacian spectra with triangle corners and branch point.
    Spectrum(Common),
    /// Spectra of the CSG-preconditioned 1D operator over a k sweep.
    PrecondSpectrum(Common),
    /// Predicted and detected branch points over a doubling schedule of n.
    BranchPoint(BranchArgs),
    /// Critical wave numbers k1, k2 and k_b.
    TableCriticalk(Common),
    /// Iteration counts over a k sweep.
    Sweep(Common),
    /// One solve at a single wave number.
    Solve(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "R")]
    big_r: Option<f64>,
    #[arg(long)]
    theta_gamma: Option<f64>,
    #[arg(long)]
    theta_beta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Defaults to n/4.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<f64>,
    /// a:b:step
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    mg_levels: Option<usize>,
    #[arg(long)]
    smoother_steps: Option<usize>,
    /// none, csg-exact or csg-mg
    #[arg(long)]
    precond: Option<String>,
    #[arg(long)]
    dims: Option<usize>,
    /// Path stem of the CSV files and JSON sidecar.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BranchArgs {
    #[command(flatten)]
    common: Common,
    /// Largest n of the schedule.
    #[arg(long)]
    n_max: Option<usize>,
    /// Largest n at which the branch point is also detected.
    #[arg(long)]
    detect_n_max: Option<usize>,
}

fn build_config(mode: Mode, a: &Common) -> Result<ExperimentConfig, Error> {
    let mut c = match &a.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    c.mode = mode;
    if let Some(v) = a.r {
        c.r = v;
    }
    if let Some(v) = a.big_r {
        c.big_r = v;
    }
    if let Some(v) = a.theta_gamma {
        c.theta_gamma = v;
    }
    if a.theta_beta.is_some() {
        c.theta_beta = a.theta_beta;
    }
    if let Some(v) = a.n {
        c.n = v;
    }
    if a.m.is_some() {
        c.m = a.m;
    }
    match (a.k, &a.k_range) {
        (Some(_), Some(_)) => return Err(Error::Config("use either --k or --k-range".into())),
        (Some(k), None) => c.sweep = Sweep::List(vec![k]),
        (None, Some(s)) => c.sweep = s.parse()?,
        (None, None) => {}
    }
    if let Some(v) = a.tol {
        c.tol = v;
    }
    if let Some(v) = a.max_iter {
        c.max_iter = v;
    }
    if a.mg_levels.is_some() {
        c.mg_levels = a.mg_levels;
    }
    if let Some(v) = a.smoother_steps {
        c.smoother_steps = v;
    }
    if let Some(p) = &a.precond {
        c.precond = p.parse::<Precondition>()?;
    }
    if let Some(d) = a.dims {
        c.dims = d;
    }
    if a.out.is_some() {
        c.out = a.out.clone();
    }
    Ok(c)
}

fn config_for(cmd: &Command) -> Result<ExperimentConfig, Error> {
    match cmd {
        Command::Spectrum(a) => build_config(Mode::Spectrum, a),
        Command::PrecondSpectrum(a) => build_config(Mode::PrecondSpectrum, a),
        Command::BranchPoint(b) => {
            let mut c = build_config(Mode::BranchPoint, &b.common)?;
            if let Some(v) = b.n_max {
                c.n_max = v;
            }
            if let Some(v) = b.detect_n_max {
                c.detect_n_max = v;
            }
            Ok(c)
        }
        Command::TableCriticalk(a) => build_config(Mode::TableCriticalk, a),
        Command::Sweep(a) => {
            let c = build_config(Mode::KSweep1d, a)?;
            let mode = match c.dims {
                1 => Mode::KSweep1d,
                2 => Mode::KSweep2d,
                d => return Err(Error::Config(format!("dims must be 1 or 2, got {d}"))),
            };
            Ok(ExperimentConfig { mode, ..c })
        }
        Command::Solve(a) => build_config(Mode::Solve, a),
    }
}

fn metric(m: Metric) -> String {
    match m {
        Metric::None => "-".into(),
        other => other.to_string(),
    }
}

fn print_summary(rec: &RunRecord) {
    for r in &rec.k_rows {
        let its = r.iterations.map_or("-".into(), |v| v.to_string());
        let conv = r.converged.map_or("-".into(), |v| v.to_string());
        println!(
            "k={} iterations={} converged={} avg_rate={} kappa_discrete={} kappa_continuous={}",
            r.k,
            its,
            conv,
            metric(r.avg_rate),
            metric(r.kappa_discrete),
            metric(r.kappa_continuous)
        );
    }
    for r in &rec.branch_rows {
        println!(
            "n={} m={} W={} |t_b| predicted={} detected={}",
            r.n,
            r.m,
            r.lambert_w,
            r.predicted_abs,
            metric(r.detected_abs)
        );
    }
    for r in &rec.table_rows {
        println!(
            "n={} k1={} k2={:.1} k_b={} tabulated={}",
            r.n,
            r.k1,
            r.k2,
            metric(r.kb),
            metric(r.kb_published)
        );
    }
    if !rec.eigen_rows.is_empty() {
        let mut sources: Vec<&str> = vec![];
        for r in &rec.eigen_rows {
            if !sources.contains(&r.source.as_str()) {
                sources.push(&r.source);
            }
        }
        for s in sources {
            let count = rec.eigen_rows.iter().filter(|r| r.source == s).count();
            println!("{s}: {count} values");
        }
    }
    for n in &rec.notes {
        println!("note: {n}");
    }
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) | Error::InvalidDomain(_) | Error::InvalidArgument(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match config_for(&cli.command).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let rec = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    print_summary(&rec);
    if let Some(out) = &config.out {
        match write_record(&rec, &record_stem(out)) {
            Ok(files) => {
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
            Err(e) => {
                eprintln!("error writing output: {e}");
                return ExitCode::from(1);
            }
        }
    }
    if !rec.all_converged() {
        eprintln!("solver did not converge for every wave number");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

//! Experiment drivers: spectra, wave-number sweeps, branch-point scaling
//! and the critical wave-number table, with CSV/JSON run records.
//!
//! A record is written as a set of CSV files sharing a path stem plus one
//! JSON sidecar holding the config, timings and notes. CSV rows carry no
//! timing data so identical configs give byte-identical CSV files.

use std::f64::consts::FRAC_PI_6;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{dense_eigenvalues, BandLu, DenseLu};
use crate::error::{Error, Result};
use crate::grid::{build_csg_grid, build_ecs_grid, EcsDomain};
use crate::krylov::{fgmres, gmres, gmres_right, KrylovOptions, SolveLog};
use crate::multigrid::{Dims, MgHierarchy, MgOptions};
use crate::operators::{
    assemble_helmholtz_1d, assemble_helmholtz_2d, assemble_neg_laplacian_1d, point_source_rhs,
    ComplexSparseMatrix,
};
use crate::spectral::{
    condition_number, continuous_laplacian_eigs, detect_branch_point,
    discrete_preconditioned_spectrum, lambert_w, precond_eigs_exact, precond_eigs_naive,
    predict_branch_point, DomainPair, SpectrumSource,
};

/// Largest matrix order handed to the dense eigensolver by the drivers.
pub const DENSE_CAP: usize = 4096;

/// Interior counts of the critical wave-number table.
pub const TABLE_NS: [usize; 8] = [16, 32, 64, 128, 256, 512, 1024, 2048];

/// Published `k_b` row for `TABLE_NS` with `R = 1.25`, `theta_gamma = pi/6`.
pub const PUBLISHED_KB: [f64; 8] = [12.8, 13.8, 20.3, 26.2, 35.7, 40.6, 50.0, 53.1];

/// Relative tolerance of the `k_b` comparison against [`PUBLISHED_KB`].
pub const KB_TOLERANCE: f64 = 0.25;

/// `k_b` quoted alongside the iteration and condition-number plots at
/// `n = 64`, which differs from the tabulated 20.3.
pub const QUOTED_KB_N64: f64 = 17.9327;

const DEFAULT_THETA_BETA: f64 = 0.18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Spectrum,
    PrecondSpectrum,
    BranchPoint,
    #[serde(rename = "k-sweep-1d")]
    KSweep1d,
    #[serde(rename = "k-sweep-2d")]
    KSweep2d,
    Solve,
    TableCriticalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precondition {
    None,
    #[default]
    CsgExact,
    CsgMg,
}

impl FromStr for Precondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "csg-exact" => Ok(Self::CsgExact),
            "csg-mg" => Ok(Self::CsgMg),
            _ => Err(Error::Config(format!("unknown preconditioner '{s}'"))),
        }
    }
}

/// Wave numbers to visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep::List(vec![])
    }
}

impl Sweep {
    /// Expands the sweep; range points are `start + i * step`, inclusive of
    /// `stop` up to rounding.
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Sweep::List(v) => {
                if v.iter().any(|k| !k.is_finite()) {
                    return Err(Error::Config("non-finite wave number in sweep".into()));
                }
                Ok(v.clone())
            }
            Sweep::Range { start, stop, step } => {
                if step.is_nan()
                    || *step <= 0.0
                    || !start.is_finite()
                    || !stop.is_finite()
                    || stop < start
                {
                    return Err(Error::Config(format!("bad k range {start}:{stop}:{step}")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

impl FromStr for Sweep {
    type Err = Error;

    /// Parses `a:b:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("k range must be a:b:step, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let sweep = Sweep::Range {
            start: v[0],
            stop: v[1],
            step: v[2],
        };
        sweep.values()?;
        Ok(sweep)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub theta_gamma: f64,
    /// `None` picks 0 for Laplacian modes and 0.18 for preconditioned ones.
    pub theta_beta: Option<f64>,
    pub n: usize,
    /// Defaults to `max(n / 4, 1)`.
    pub m: Option<usize>,
    pub sweep: Sweep,
    pub tol: f64,
    pub max_iter: usize,
    pub mg_levels: Option<usize>,
    pub smoother_steps: usize,
    pub precond: Precondition,
    pub dims: usize,
    /// Eigenvalue count for continuous preconditioned spectra.
    pub eig_count: usize,
    /// Largest `n` of the branch-point doubling schedule.
    pub n_max: usize,
    /// Largest `n` for which the branch point is also detected.
    pub detect_n_max: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Spectrum,
            r: 1.0,
            big_r: 1.25,
            theta_gamma: FRAC_PI_6,
            theta_beta: None,
            n: 64,
            m: None,
            sweep: Sweep::default(),
            tol: 1e-6,
            max_iter: 500,
            mg_levels: None,
            smoother_steps: 3,
            precond: Precondition::default(),
            dims: 1,
            eig_count: 80,
            n_max: 1 << 13,
            detect_n_max: 1 << 10,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or((self.n / 4).max(1))
    }

    fn preconditioned(&self) -> bool {
        matches!(
            self.mode,
            Mode::PrecondSpectrum | Mode::KSweep1d | Mode::KSweep2d | Mode::Solve
        )
    }

    pub fn theta_beta(&self) -> f64 {
        self.theta_beta.unwrap_or(if self.preconditioned() {
            DEFAULT_THETA_BETA
        } else {
            0.0
        })
    }

    fn needs_sweep(&self) -> bool {
        matches!(
            self.mode,
            Mode::PrecondSpectrum | Mode::KSweep1d | Mode::KSweep2d | Mode::Solve
        )
    }

    /// The ECS domain (theta_beta dropped).
    pub fn ecs_domain(&self) -> Result<EcsDomain> {
        EcsDomain::ecs(self.r, self.big_r, self.theta_gamma, self.n, self.m())
    }

    /// The domain with theta_beta applied.
    pub fn domain(&self) -> Result<EcsDomain> {
        EcsDomain::csg(
            self.r,
            self.big_r,
            self.theta_gamma,
            self.theta_beta(),
            self.n,
            self.m(),
        )
    }

    pub fn domain_pair(&self) -> Result<DomainPair> {
        DomainPair::new(self.ecs_domain()?, self.theta_beta())
    }

    pub fn dims(&self) -> Result<Dims> {
        match self.mode {
            Mode::KSweep1d => Ok(Dims::One),
            Mode::KSweep2d => Ok(Dims::Two),
            _ => Dims::from_count(self.dims)
                .map_err(|_| Error::Config(format!("dims must be 1 or 2, got {}", self.dims))),
        }
    }

    pub fn krylov(&self) -> KrylovOptions {
        KrylovOptions {
            max_iter: self.max_iter,
            rel_tol: self.tol,
            ..KrylovOptions::default()
        }
    }

    pub fn multigrid(&self) -> MgOptions {
        MgOptions {
            levels: self.mg_levels,
            smoother_steps: self.smoother_steps,
            ..MgOptions::default()
        }
    }

    pub fn wave_numbers(&self) -> Result<Vec<f64>> {
        self.sweep.values()
    }

    /// Checks every field the selected mode uses. Failures are
    /// [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if self.smoother_steps == 0 {
            return Err(Error::Config("smoother_steps must be >= 1".into()));
        }
        if self.eig_count == 0 {
            return Err(Error::Config("eig_count must be >= 1".into()));
        }
        self.domain().map_err(cfg)?;
        self.dims()?;
        if self.needs_sweep() {
            let ks = self.wave_numbers()?;
            if ks.is_empty() {
                return Err(Error::Config("wave-number sweep is empty".into()));
            }
            if ks.iter().any(|&k| k <= 0.0) {
                return Err(Error::Config("wave numbers must be > 0".into()));
            }
        }
        if self.mode == Mode::BranchPoint && self.n_max < self.n {
            return Err(Error::Config(format!(
                "n_max {} below n {}",
                self.n_max, self.n
            )));
        }
        Ok(())
    }
}

/// A derived number, or the reason it is absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    /// Not computed because the problem exceeded the dense cap.
    Skipped,
    /// Not meaningful for this row.
    None,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Option<f64>> for Metric {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Metric::None, Metric::Value)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v}"),
            Metric::Skipped => f.write_str("skipped"),
            Metric::None => Ok(()),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "" => Ok(Metric::None),
            "skipped" => Ok(Metric::Skipped),
            v => v
                .parse()
                .map(Metric::Value)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// One wave number of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub avg_rate: Metric,
    pub true_residual: Metric,
    pub kappa_discrete: Metric,
    pub kappa_continuous: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub k: Option<f64>,
    pub source: String,
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

impl EigenRow {
    fn new(k: Option<f64>, source: &str, index: usize, z: C64) -> Self {
        Self {
            k,
            source: source.to_string(),
            index,
            re: z.re,
            im: z.im,
        }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub n: usize,
    pub m: usize,
    pub c: f64,
    pub lambert_w: f64,
    pub predicted_abs: f64,
    pub detected_abs: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    pub kb: Metric,
    pub kb_published: Metric,
    pub kb_within_tolerance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub residual: f64,
}

/// Environment echo kept out of the CSV rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub version: String,
    pub started_unix: f64,
    pub os: String,
}

impl RunHeader {
    fn now() -> Self {
        let started_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix,
            os: std::env::consts::OS.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub header: RunHeader,
    pub k_rows: Vec<KRow>,
    /// Wall time in seconds, one per entry of `k_rows`.
    pub wall_times: Vec<f64>,
    pub eigen_rows: Vec<EigenRow>,
    pub branch_rows: Vec<BranchRow>,
    pub table_rows: Vec<TableRow>,
    pub history: Vec<HistoryRow>,
    pub notes: Vec<String>,
}

impl RunRecord {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            header: RunHeader::now(),
            k_rows: vec![],
            wall_times: vec![],
            eigen_rows: vec![],
            branch_rows: vec![],
            table_rows: vec![],
            history: vec![],
            notes: vec![],
        }
    }

    /// Eigenvalues with the given source label, in row order.
    pub fn eigenvalues(&self, source: &str) -> Vec<C64> {
        self.eigen_rows
            .iter()
            .filter(|r| r.source == source)
            .map(EigenRow::value)
            .collect()
    }

    /// True when every solve in the record converged.
    pub fn all_converged(&self) -> bool {
        self.k_rows.iter().all(|r| r.converged != Some(false))
    }
}

/// Dispatches on `config.mode`.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    match config.mode {
        Mode::Spectrum => run_spectrum(config),
        Mode::PrecondSpectrum => run_precond_spectrum(config),
        Mode::BranchPoint => run_branch_scaling(config),
        Mode::KSweep1d | Mode::KSweep2d => run_k_sweep(config),
        Mode::Solve => solve(config),
        Mode::TableCriticalk => run_table_criticalk(config),
    }
}

fn push_eigs(rec: &mut RunRecord, k: Option<f64>, source: &str, eigs: &[C64]) {
    rec.eigen_rows.extend(
        eigs.iter()
            .enumerate()
            .map(|(i, z)| EigenRow::new(k, source, i, *z)),
    );
}

/// Sorts by modulus, then argument, so rows do not depend on solver order.
fn sorted(mut eigs: Vec<C64>) -> Vec<C64> {
    eigs.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    eigs
}

/// Discrete and continuous Laplacian spectra, triangle corners and the
/// branch point.
pub fn run_spectrum(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rec = RunRecord::new(config);
    let domain = config.domain()?;
    let grid = build_csg_grid(&domain)?;
    let order = grid.unknowns();
    push_eigs(
        &mut rec,
        None,
        SpectrumSource::Continuous.as_str(),
        &continuous_laplacian_eigs(&domain, order)?,
    );
    let h = grid.spacings[0];
    let corners = [
        C64::new(0.0, 0.0),
        4.0 / (h * h),
        4.0 / (grid.h_gamma * grid.h_gamma),
    ];
    push_eigs(&mut rec, None, "corner", &corners);
    let predicted = predict_branch_point(&domain);
    if let Some(bp) = predicted {
        push_eigs(&mut rec, None, "branch-predicted", &[bp.t_b]);
    }
    if order > DENSE_CAP {
        rec.notes.push(format!(
            "discrete spectrum skipped: order {order} exceeds dense cap {DENSE_CAP}"
        ));
        return Ok(rec);
    }
    let l = assemble_neg_laplacian_1d(&grid)?;
    let eig = dense_eigenvalues(&l.to_dense())?;
    if !eig.all_converged() {
        rec.notes
            .push("dense eigensolver did not converge for every eigenvalue".into());
    }
    let disc = sorted(eig.eigenvalues);
    push_eigs(&mut rec, None, SpectrumSource::Discrete.as_str(), &disc);
    if predicted.is_some() {
        if let Some(t) = detect_branch_point(&disc, &domain).t_b() {
            push_eigs(&mut rec, None, "branch-detected", &[t]);
        }
    }
    if domain.theta_beta > 0.0 {
        let args: Vec<f64> = disc.iter().map(|z| z.arg()).collect();
        let lo = args.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = args.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let above = args.iter().filter(|&&a| a > 0.0).count();
        rec.notes.push(format!(
            "arg statistics: min {lo:.6}, max {hi:.6}, {above} of {} eigenvalues above the real axis",
            args.len()
        ));
    }
    Ok(rec)
}

/// Continuous (exact and naive) and discrete spectra of the CSG
/// preconditioned 1D operator for every wave number of the sweep.
pub fn run_precond_spectrum(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rec = RunRecord::new(config);
    let pair = config.domain_pair()?;
    let order = pair.ecs.unknowns();
    for k in config.wave_numbers()? {
        let start = Instant::now();
        let exact = precond_eigs_exact(&pair, k, config.eig_count)?;
        push_eigs(
            &mut rec,
            Some(k),
            SpectrumSource::PreconditionedExact.as_str(),
            &exact,
        );
        let naive = precond_eigs_naive(&pair, k, config.eig_count)?;
        push_eigs(
            &mut rec,
            Some(k),
            SpectrumSource::PreconditionedNaive.as_str(),
            &naive,
        );
        let kappa_discrete = if order <= DENSE_CAP {
            let disc = sorted(discrete_preconditioned_spectrum(&pair, k)?);
            push_eigs(
                &mut rec,
                Some(k),
                SpectrumSource::PreconditionedDiscrete.as_str(),
                &disc,
            );
            Metric::from(condition_number(&disc).ok())
        } else {
            Metric::Skipped
        };
        rec.k_rows.push(KRow {
            k,
            iterations: None,
            converged: None,
            avg_rate: Metric::None,
            true_residual: Metric::None,
            kappa_discrete,
            kappa_continuous: Metric::from(condition_number(&exact).ok()),
        });
        rec.wall_times.push(start.elapsed().as_secs_f64());
    }
    Ok(rec)
}

/// Solves `H u = f` for the point source `f` with the configured
/// preconditioning.
pub fn solve_point_source(
    pair: &DomainPair,
    k: f64,
    dims: Dims,
    precond: Precondition,
    krylov: &KrylovOptions,
    mg: &MgOptions,
) -> Result<(Vec<C64>, SolveLog)> {
    let ecs_grid = build_ecs_grid(&pair.ecs)?;
    let b = point_source_rhs(&ecs_grid, dims.count())?;
    let h = helmholtz(&ecs_grid, k, dims)?;
    let x0 = vec![C64::new(0.0, 0.0); b.len()];
    match precond {
        Precondition::None => gmres(&h, &b, &x0, krylov),
        Precondition::CsgExact => {
            let m = helmholtz(&build_csg_grid(&pair.csg)?, k, dims)?;
            let lu = BandLu::from_sparse(&m)?;
            gmres_right(&h, &lu, &b, &x0, krylov)
        }
        Precondition::CsgMg => {
            let mg = MgHierarchy::build(&pair.csg, k, dims, mg)?;
            fgmres(&h, &mg, &b, krylov)
        }
    }
}

fn helmholtz(grid: &crate::grid::ContourGrid, k: f64, dims: Dims) -> Result<ComplexSparseMatrix> {
    match dims {
        Dims::One => Ok(assemble_helmholtz_1d(grid, k)?.to_sparse()),
        Dims::Two => assemble_helmholtz_2d(grid, k),
    }
}

/// Dense condition number of `M^{-1} H`, or `Skipped` past the cap.
fn kappa_discrete(pair: &DomainPair, k: f64, dims: Dims) -> Result<Metric> {
    let order = pair.ecs.unknowns().pow(dims.count() as u32);
    if order > DENSE_CAP {
        return Ok(Metric::Skipped);
    }
    let eigs = match dims {
        Dims::One => discrete_preconditioned_spectrum(pair, k)?,
        Dims::Two => {
            let h = assemble_helmholtz_2d(&build_ecs_grid(&pair.ecs)?, k)?.to_dense();
            let m = assemble_helmholtz_2d(&build_csg_grid(&pair.csg)?, k)?.to_dense();
            dense_eigenvalues(&DenseLu::factor(&m)?.solve_matrix(&h))?.eigenvalues
        }
    };
    Ok(Metric::from(condition_number(&eigs).ok()))
}

/// Iteration counts and condition numbers over the wave-number sweep.
/// Rows follow the sweep order.
pub fn run_k_sweep(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rec = RunRecord::new(config);
    let pair = config.domain_pair()?;
    let dims = config.dims()?;
    let krylov = config.krylov();
    let mg = config.multigrid();
    for k in config.wave_numbers()? {
        let start = Instant::now();
        let (_, log) = solve_point_source(&pair, k, dims, config.precond, &krylov, &mg)?;
        let (kd, kc) = if config.precond == Precondition::None {
            (Metric::None, Metric::None)
        } else {
            let kc = match dims {
                Dims::One => Metric::from(
                    condition_number(&precond_eigs_exact(&pair, k, config.eig_count)?).ok(),
                ),
                Dims::Two => Metric::None,
            };
            (kappa_discrete(&pair, k, dims)?, kc)
        };
        rec.k_rows.push(KRow {
            k,
            iterations: Some(log.iterations),
            converged: Some(log.converged),
            avg_rate: Metric::Value(log.avg_rate),
            true_residual: Metric::Value(log.true_relative_residual),
            kappa_discrete: kd,
            kappa_continuous: kc,
        });
        rec.wall_times.push(start.elapsed().as_secs_f64());
    }
    Ok(rec)
}

/// Single solve at the first wave number of the sweep, with its residual
/// history.
pub fn solve(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rec = RunRecord::new(config);
    let pair = config.domain_pair()?;
    let k = config.wave_numbers()?[0];
    let start = Instant::now();
    let (_, log) = solve_point_source(
        &pair,
        k,
        config.dims()?,
        config.precond,
        &config.krylov(),
        &config.multigrid(),
    )?;
    rec.history = log
        .residual_norms
        .iter()
        .enumerate()
        .map(|(iteration, &residual)| HistoryRow {
            iteration,
            residual,
        })
        .collect();
    rec.k_rows.push(KRow {
        k,
        iterations: Some(log.iterations),
        converged: Some(log.converged),
        avg_rate: Metric::Value(log.avg_rate),
        true_residual: Metric::Value(log.true_relative_residual),
        kappa_discrete: Metric::None,
        kappa_continuous: Metric::None,
    });
    rec.wall_times.push(start.elapsed().as_secs_f64());
    Ok(rec)
}

/// `n, 2n, 4n, ...` up to `n_max`.
pub fn doubling_schedule(n: usize, n_max: usize) -> Vec<usize> {
    std::iter::successors(Some(n), |&v| v.checked_mul(2))
        .take_while(|&v| v <= n_max)
        .collect()
}

/// Predicted and (up to `detect_n_max`) detected branch points along a
/// doubling schedule of grid sizes, with `m = n / 4`.
pub fn run_branch_scaling(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rec = RunRecord::new(config);
    for n in doubling_schedule(config.n, config.n_max) {
        let m = (n / 4).max(1);
        let domain = EcsDomain::ecs(config.r, config.big_r, config.theta_gamma, n, m)?;
        let Some(bp) = predict_branch_point(&domain) else {
            return Err(Error::Config("branch point needs theta_gamma > 0".into()));
        };
        let detected_abs = if n <= config.detect_n_max && domain.unknowns() <= DENSE_CAP {
            let l = assemble_neg_laplacian_1d(&build_ecs_grid(&domain)?)?;
            let eigs = dense_eigenvalues(&l.to_dense())?.eigenvalues;
            Metric::from(detect_branch_point(&eigs, &domain).t_b().map(|t| t.norm()))
        } else {
            Metric::Skipped
        };
        rec.branch_rows.push(BranchRow {
            n,
            m,
            c: bp.c,
            lambert_w: lambert_w(bp.c)?,
            predicted_abs: bp.t_b.norm(),
            detected_abs,
        });
    }
    Ok(rec)
}

/// Critical wave numbers `k1 = 2n / r`, `k2 = 2 sqrt(2) n / r` and
/// `k_b = sqrt(|t_b|)` for [`TABLE_NS`].
pub fn run_table_criticalk(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rec = RunRecord::new(config);
    let reference = config.r == 1.0 && config.big_r == 1.25 && config.theta_gamma == FRAC_PI_6;
    for (i, &n) in TABLE_NS.iter().enumerate() {
        let domain = EcsDomain::ecs(config.r, config.big_r, config.theta_gamma, n, n / 4)?;
        let kb = predict_branch_point(&domain).map(|b| b.critical_wave_number());
        let published = reference.then_some(PUBLISHED_KB[i]);
        let within = match (kb, published) {
            (Some(kb), Some(p)) => Some((kb - p).abs() <= KB_TOLERANCE * p),
            _ => None,
        };
        let h = config.r / n as f64;
        rec.table_rows.push(TableRow {
            n,
            k1: 2.0 / h,
            k2: 2.0 * 2f64.sqrt() / h,
            kb: Metric::from(kb),
            kb_published: Metric::from(published),
            kb_within_tolerance: within,
        });
    }
    if reference {
        let kb64 = rec.table_rows[2].kb.value().unwrap_or(f64::NAN);
        rec.notes.push(format!(
            "k_b at n=64: tabulated 20.3, quoted 17.9327 next to the iteration plots, Lambert-W prediction {kb64:.4}; \
             the two published values disagree with each other and with the prediction"
        ));
        let misses: Vec<String> = rec
            .table_rows
            .iter()
            .filter(|r| r.kb_within_tolerance == Some(false))
            .map(|r| r.n.to_string())
            .collect();
        if !misses.is_empty() {
            rec.notes.push(format!(
                "k_b outside +-{:.0}% of the tabulated row for n = {}",
                KB_TOLERANCE * 100.0,
                misses.join(", ")
            ));
        }
        rec.notes
            .push("tabulated k1 at n=512 reads 1048; 2n = 1024".into());
    }
    Ok(rec)
}

fn csv_path(stem: &Path, part: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(format!(".{part}.csv"));
    PathBuf::from(s)
}

/// Sidecar path for the record stored at `stem`.
pub fn sidecar_path(stem: &Path) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Strips a trailing `.csv` or `.json` so `--out run.csv` and `--out run`
/// name the same record.
pub fn record_stem(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        if path.exists() {
            std::fs::remove_file(path)?;
        }
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: ExperimentConfig,
    header: RunHeader,
    wall_times: Vec<f64>,
    notes: Vec<String>,
}

/// Writes the non-empty row tables as `<stem>.<part>.csv` and the sidecar
/// as `<stem>.json`. Returns the files written.
pub fn write_record(rec: &RunRecord, stem: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut written = vec![];
    let mut part = |name: &str, empty: bool| {
        let p = csv_path(stem, name);
        if !empty {
            written.push(p.clone());
        }
        p
    };
    write_rows(&part("k", rec.k_rows.is_empty()), &rec.k_rows)?;
    write_rows(&part("eigs", rec.eigen_rows.is_empty()), &rec.eigen_rows)?;
    write_rows(
        &part("branch", rec.branch_rows.is_empty()),
        &rec.branch_rows,
    )?;
    write_rows(&part("table", rec.table_rows.is_empty()), &rec.table_rows)?;
    write_rows(&part("history", rec.history.is_empty()), &rec.history)?;
    let side = Sidecar {
        config: rec.config.clone(),
        header: rec.header.clone(),
        wall_times: rec.wall_times.clone(),
        notes: rec.notes.clone(),
    };
    let p = sidecar_path(stem);
    std::fs::write(&p, serde_json::to_string_pretty(&side)?)?;
    written.push(p);
    Ok(written)
}

/// Inverse of [`write_record`].
pub fn read_record(stem: &Path) -> Result<RunRecord> {
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(stem))?)?;
    Ok(RunRecord {
        config: side.config,
        header: side.header,
        k_rows: read_rows(&csv_path(stem, "k"))?,
        wall_times: side.wall_times,
        eigen_rows: read_rows(&csv_path(stem, "eigs"))?,
        branch_rows: read_rows(&csv_path(stem, "branch"))?,
        table_rows: read_rows(&csv_path(stem, "table"))?,
        history: read_rows(&csv_path(stem, "history"))?,
        notes: side.notes,
    })
}

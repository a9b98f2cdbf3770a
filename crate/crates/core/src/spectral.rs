//! Closed-form and semi-analytic spectra.
//!
//! * continuous Laplacian and Helmholtz eigenvalues on the ECS contour,
//! * exact eigenvalues of the continuous CSG-preconditioned operator and
//!   the wave-number independent curve they lie on,
//! * the naive linear-fractional approximation of the same spectrum,
//! * the discrete eigenvalue condition `F(t)` of the Shortley-Weller
//!   operator, and
//! * prediction and detection of the branch point where the discrete
//!   spectrum leaves the continuous ray.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::{dense_eigenvalues, DenseLu};
use crate::error::{Error, Result};
use crate::grid::{build_csg_grid, build_ecs_grid, EcsDomain};
use crate::operators::{assemble_helmholtz_1d, assemble_neg_laplacian_1d};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative ray distance above which an eigenvalue counts as off the
/// smooth-mode ray in [`detect_branch_point`].
pub const DEFAULT_BRANCH_THRESHOLD: f64 = 0.05;

/// Consecutive exceedances required by [`detect_branch_point`].
pub const BRANCH_CONFIRMATIONS: usize = 2;

/// The ECS domain of the Helmholtz problem and the CSG domain of its
/// preconditioner. Both share `r`, `R`, `theta_gamma`, `n` and `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainPair {
    pub ecs: EcsDomain,
    pub csg: EcsDomain,
}

impl DomainPair {
    pub fn new(ecs: EcsDomain, theta_beta: f64) -> Result<Self> {
        if ecs.theta_beta != 0.0 {
            return Err(Error::InvalidDomain(
                "the ECS domain must have theta_beta = 0".into(),
            ));
        }
        let csg = ecs.with_theta_beta(theta_beta);
        csg.validate()?;
        Ok(Self { ecs, csg })
    }

    pub fn beta(&self) -> C64 {
        self.csg.beta()
    }

    pub fn gamma(&self) -> C64 {
        self.ecs.gamma()
    }

    /// `eta = gamma (R / r - 1)`.
    pub fn eta(&self) -> C64 {
        self.gamma() * (self.ecs.big_r / self.ecs.r - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    Continuous,
    Discrete,
    PreconditionedExact,
    PreconditionedNaive,
    PreconditionedDiscrete,
}

impl SpectrumSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumSource::Continuous => "continuous",
            SpectrumSource::Discrete => "discrete",
            SpectrumSource::PreconditionedExact => "preconditioned-exact",
            SpectrumSource::PreconditionedNaive => "preconditioned-naive",
            SpectrumSource::PreconditionedDiscrete => "preconditioned-discrete",
        }
    }
}

/// A computed spectrum plus derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub source: SpectrumSource,
    pub branch_point: Option<C64>,
    pub rho_b: Option<f64>,
    pub condition_number: Option<f64>,
}

impl SpectrumReport {
    /// Wraps `eigenvalues`, filling in the condition number when defined.
    pub fn new(eigenvalues: Vec<C64>, source: SpectrumSource) -> Self {
        let condition_number = condition_number(&eigenvalues).ok();
        Self {
            eigenvalues,
            source,
            branch_point: None,
            rho_b: None,
            condition_number,
        }
    }

    pub fn with_branch_point(mut self, bp: Option<BranchPoint>) -> Self {
        self.branch_point = bp.map(|b| b.t_b);
        self.rho_b = bp.map(|b| b.rho_b);
        self
    }
}

/// `lambda_j = (j pi / R_z)^2`, `j = 1..=count`.
pub fn continuous_laplacian_eigs(domain: &EcsDomain, count: usize) -> Result<Vec<C64>> {
    continuous_helmholtz_eigs(domain, 0.0, count)
}

/// `lambda_j(k) = (j pi / R_z)^2 - k^2`.
pub fn continuous_helmholtz_eigs(domain: &EcsDomain, k: f64, count: usize) -> Result<Vec<C64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let rz = domain.r_z();
    Ok((1..=count)
        .map(|j| {
            let w = j as f64 * PI / rz;
            w * w - k * k
        })
        .collect())
}

fn check_wave_number(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "wave number must be > 0, got {k}"
        )));
    }
    Ok(())
}

/// `s_j = (j pi / k - gamma (R - r)) / r`.
pub fn exact_s(pair: &DomainPair, k: f64, j: usize) -> C64 {
    let d = &pair.ecs;
    (j as f64 * PI / k - pair.gamma() * (d.big_r - d.r)) / d.r
}

fn mu_of_s(s: C64, beta: C64) -> C64 {
    let s2 = s * s;
    (s2 - ONE) / (s2 / (beta * beta) - ONE)
}

/// Eigenvalues `mu_j = (s_j^2 - 1) / (s_j^2 / beta^2 - 1)` of the continuous
/// CSG-preconditioned Helmholtz operator, `j = 1..=count`.
pub fn precond_eigs_exact(pair: &DomainPair, k: f64, count: usize) -> Result<Vec<C64>> {
    check_wave_number(k)?;
    let beta = pair.beta();
    Ok((1..=count)
        .map(|j| mu_of_s(exact_s(pair, k, j), beta))
        .collect())
}

/// Approximation assuming shared eigenvectors between the two domains.
pub fn precond_eigs_naive(pair: &DomainPair, k: f64, count: usize) -> Result<Vec<C64>> {
    check_wave_number(k)?;
    let rz2 = pair.ecs.r_z().powi(2);
    let rt2 = pair.csg.r_z_csg().powi(2);
    Ok((1..=count)
        .map(|j| {
            let w = (j as f64 * PI / k).powi(2);
            rt2 / rz2 * (w - rz2) / (w - rt2)
        })
        .collect())
}

/// Radius of the circle carrying the naive eigenvalues, the image of the
/// real line under `w -> (Rt^2 / Rz^2) (w - Rz^2) / (w - Rt^2)`.
pub fn naive_circle_radius(pair: &DomainPair) -> f64 {
    let rz2 = pair.ecs.r_z().powi(2);
    let rt2 = pair.csg.r_z_csg().powi(2);
    rt2.norm() / rz2.norm() * ((rz2 - rt2) / (2.0 * rt2.im)).norm()
}

/// Small-angle form `(|Rt^2| / |Rz^2|) |(Rz - Rt) / (2 Im Rt)|` of
/// [`naive_circle_radius`]; it drops the factor `|Rz + Rt| / (2 Re Rt)`.
pub fn naive_circle_radius_approx(pair: &DomainPair) -> f64 {
    let rz = pair.ecs.r_z();
    let rt = pair.csg.r_z_csg();
    rt.powi(2).norm() / rz.powi(2).norm() * ((rz - rt) / (2.0 * rt.im)).norm()
}

/// Lower end `-Re(eta)` of the curve parameter.
pub fn curve_parameter_start(pair: &DomainPair) -> f64 {
    -pair.eta().re
}

/// Curve parameter of `mu_j` for wave number `k`: `Re(s_j)`.
pub fn curve_parameter(pair: &DomainPair, k: f64, j: usize) -> f64 {
    exact_s(pair, k, j).re
}

/// Point of the preconditioned-eigenvalue curve at real parameter `t`.
pub fn curve_point(pair: &DomainPair, t: f64) -> C64 {
    mu_of_s(t - I * pair.eta().im, pair.beta())
}

/// Samples the curve at each `t`; parameters below `-Re(eta)` are rejected.
pub fn parametric_curve(pair: &DomainPair, t_samples: &[f64]) -> Result<Vec<C64>> {
    let t0 = curve_parameter_start(pair);
    t_samples
        .iter()
        .map(|&t| {
            if t < t0 - 1e-12 {
                Err(Error::InvalidArgument(format!(
                    "curve parameter {t} below start {t0}"
                )))
            } else {
                Ok(curve_point(pair, t))
            }
        })
        .collect()
}

fn stable_tan(z: C64) -> C64 {
    if z.im > 20.0 {
        I
    } else if z.im < -20.0 {
        -I
    } else {
        z.tan()
    }
}

fn half_acos(x: C64) -> C64 {
    0.5 * x.acos()
}

/// Product form of the eigenvalue condition, free of poles.
pub fn discrete_eig_condition_product(t: C64, h: f64, gamma_ratio: C64, n: usize, m: usize) -> C64 {
    let (p, q) = pq(t, h, gamma_ratio);
    let (nn, mm) = (2.0 * n as f64, 2.0 * m as f64);
    (nn * p).sin() * (mm * q).cos() * q.cos() + p.cos() * (nn * p).cos() * (mm * q).sin()
}

fn pq(t: C64, h: f64, gamma_ratio: C64) -> (C64, C64) {
    let h2 = h * h;
    let p = half_acos(ONE - t * h2 / 2.0);
    let q = half_acos(ONE - t * gamma_ratio * gamma_ratio * h2 / 2.0);
    (p, q)
}

/// `F(t) = tan(2n p) / tan(2m q) + cos p / cos q` with
/// `p = acos(1 - t h^2 / 2) / 2`, `q = acos(1 - t g^2 h^2 / 2) / 2` and
/// `g = h_gamma / h`. Near poles of the quotient form the product form is
/// returned instead.
pub fn discrete_eig_condition(t: C64, h: f64, gamma_ratio: C64, n: usize, m: usize) -> C64 {
    const POLE: f64 = 1e-12;
    let (p, q) = pq(t, h, gamma_ratio);
    let (nn, mm) = (2.0 * n as f64, 2.0 * m as f64);
    let tan_q = stable_tan(mm * q);
    let cos_q = q.cos();
    let tan_p = stable_tan(nn * p);
    let near_pole = tan_q.norm() < POLE || cos_q.norm() < POLE || !tan_p.is_finite();
    let f = tan_p / tan_q + p.cos() / cos_q;
    if near_pole || !f.is_finite() {
        discrete_eig_condition_product(t, h, gamma_ratio, n, m)
    } else {
        f
    }
}

/// Grid-ratio `h_gamma / h` of an ECS domain.
pub fn grid_ratio(domain: &EcsDomain) -> C64 {
    let h = domain.r / domain.n as f64;
    (domain.big_r - domain.r) * domain.gamma() / domain.m as f64 / h
}

/// Secant refinement of a root of the product-form condition near `t0`.
pub fn refine_eigenvalue_root(t0: C64, domain: &EcsDomain) -> Option<C64> {
    let h = domain.r / domain.n as f64;
    let g = grid_ratio(domain);
    let f = |t: C64| discrete_eig_condition_product(t, h, g, domain.n, domain.m);
    let scale = t0.norm().max(1.0);
    let mut a = t0;
    let mut b = t0 * (1.0 + 1e-7) + 1e-9 * scale;
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..100 {
        let d = fb - fa;
        if d.norm() == 0.0 {
            break;
        }
        let c = b - fb * (b - a) / d;
        if !c.is_finite() {
            return None;
        }
        a = b;
        fa = fb;
        b = c;
        fb = f(b);
        if (b - a).norm() <= 1e-14 * scale {
            return Some(b);
        }
    }
    ((b - a).norm() <= 1e-9 * scale).then_some(b)
}

/// Principal branch of the Lambert-W function for `c >= 0`, by Halley
/// iteration from `log(1 + c)`.
pub fn lambert_w(c: f64) -> Result<f64> {
    if c.is_nan() || c < 0.0 || c.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "lambert_w needs a finite c >= 0, got {c}"
        )));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let mut w = c.ln_1p();
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - c;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

/// Predicted branch point of the discrete Laplacian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Argument of the Lambert-W function.
    pub c: f64,
    pub rho_b: f64,
    pub t_b: C64,
}

impl BranchPoint {
    /// `k_b = sqrt(|t_b|)`.
    pub fn critical_wave_number(&self) -> f64 {
        self.t_b.norm().sqrt()
    }
}

/// Lambert-W argument `c = 4 n Im(R_z) |sqrt((R - r)/(R_z - R)) / R_z|`.
pub fn branch_argument(domain: &EcsDomain) -> f64 {
    let rz = domain.r_z();
    let ratio = C64::new(domain.big_r - domain.r, 0.0) / (rz - domain.big_r);
    4.0 * domain.n as f64 * rz.im * (ratio.sqrt() / rz).norm()
}

/// Branch point `t_b = (rho_b / R_z)^2` with
/// `rho_b = |R_z|^2 / (r Im R_z) * W(c)`. `None` without complex scaling.
pub fn predict_branch_point(domain: &EcsDomain) -> Option<BranchPoint> {
    let rz = domain.r_z();
    if rz.im <= 0.0 {
        return None;
    }
    let c = branch_argument(domain);
    let w = lambert_w(c).ok()?;
    let rho_b = rz.norm_sqr() / (domain.r * rz.im) * w;
    let t = rho_b / rz;
    Some(BranchPoint {
        c,
        rho_b,
        t_b: t * t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BranchDetection {
    Found {
        t_b: C64,
        /// Position in the `|t|`-sorted spectrum.
        index: usize,
    },
    NotFound,
}

impl BranchDetection {
    pub fn t_b(&self) -> Option<C64> {
        match self {
            BranchDetection::Found { t_b, .. } => Some(*t_b),
            BranchDetection::NotFound => None,
        }
    }
}

/// Distance of `t` from the ray `(rho / R_z)^2`, `rho > 0`, divided by `|t|`.
pub fn relative_ray_distance(t: C64, r_z: C64) -> f64 {
    let dir = C64::from_polar(1.0, -2.0 * r_z.arg());
    let rot = t * dir.conj();
    let tn = t.norm();
    if tn == 0.0 {
        return 0.0;
    }
    if rot.re >= 0.0 {
        rot.im.abs() / tn
    } else {
        1.0
    }
}

/// First eigenvalue, in order of `|t|`, that starts a run of
/// [`BRANCH_CONFIRMATIONS`] eigenvalues off the smooth-mode ray.
pub fn detect_branch_point(eigs: &[C64], domain: &EcsDomain) -> BranchDetection {
    detect_branch_point_with(eigs, domain, DEFAULT_BRANCH_THRESHOLD)
}

pub fn detect_branch_point_with(
    eigs: &[C64],
    domain: &EcsDomain,
    threshold: f64,
) -> BranchDetection {
    if eigs.len() < 3 {
        return BranchDetection::NotFound;
    }
    let rz = domain.r_z();
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let off: Vec<bool> = sorted
        .iter()
        .map(|t| relative_ray_distance(*t, rz) > threshold)
        .collect();
    (0..=sorted.len() - BRANCH_CONFIRMATIONS)
        .find(|&i| off[i..i + BRANCH_CONFIRMATIONS].iter().all(|&o| o))
        .map_or(BranchDetection::NotFound, |index| BranchDetection::Found {
            t_b: sorted[index],
            index,
        })
}

/// `max |mu| / min |mu|`.
pub fn condition_number(eigs: &[C64]) -> Result<f64> {
    if eigs.is_empty() {
        return Err(Error::InvalidArgument(
            "condition number of an empty spectrum".into(),
        ));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in eigs {
        let a = z.norm();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if lo == 0.0 {
        return Err(Error::InvalidArgument(
            "spectrum contains a zero eigenvalue".into(),
        ));
    }
    Ok(hi / lo)
}

/// Eigenvalues of `-L_h` on `domain` (ECS or CSG), by dense eigensolve.
pub fn discrete_laplacian_spectrum(domain: &EcsDomain) -> Result<Vec<C64>> {
    let grid = build_csg_grid(domain)?;
    let l = assemble_neg_laplacian_1d(&grid)?;
    let e = dense_eigenvalues(&l.to_dense())?;
    Ok(e.eigenvalues)
}

/// Eigenvalues of `M_h^{-1} H_h` for the 1D problem, with `M_h` the CSG
/// Helmholtz matrix, formed explicitly.
pub fn discrete_preconditioned_spectrum(pair: &DomainPair, k: f64) -> Result<Vec<C64>> {
    let h = assemble_helmholtz_1d(&build_ecs_grid(&pair.ecs)?, k)?.to_dense();
    let m = assemble_helmholtz_1d(&build_csg_grid(&pair.csg)?, k)?.to_dense();
    let prod = DenseLu::factor(&m)?.solve_matrix(&h);
    Ok(dense_eigenvalues(&prod)?.eigenvalues)
}

//! Exterior-complex-scaled domains and their discrete complex grids.
//!
//! A domain is the real interval `[0, R]` split at `r`. The exterior part
//! `(r, R]` is rotated into the complex plane by `theta_gamma`; for the
//! complex-stretched-grid (CSG) preconditioner the interior `[0, r]` is
//! rotated as well, by `theta_beta`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};

/// Geometric description of a complex-stretched 1D domain.
///
/// Angles are kept in radians; the unit factors `beta` and `gamma` are
/// derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcsDomain {
    /// Length of the real interior region.
    pub r: f64,
    /// Total real extent, `R > r`.
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Exterior scaling angle.
    pub theta_gamma: f64,
    /// Interior scaling angle; zero for a plain ECS domain.
    pub theta_beta: f64,
    /// Number of interior intervals.
    pub n: usize,
    /// Number of exterior intervals.
    pub m: usize,
}

impl EcsDomain {
    /// Plain ECS domain (`theta_beta = 0`), validated.
    pub fn ecs(r: f64, big_r: f64, theta_gamma: f64, n: usize, m: usize) -> Result<Self> {
        Self::csg(r, big_r, theta_gamma, 0.0, n, m)
    }

    /// CSG domain with an interior rotation, validated.
    pub fn csg(
        r: f64,
        big_r: f64,
        theta_gamma: f64,
        theta_beta: f64,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        let d = Self {
            r,
            big_r,
            theta_gamma,
            theta_beta,
            n,
            m,
        };
        d.validate()?;
        Ok(d)
    }

    /// Check the domain invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDomain(msg));
        if !(self.r.is_finite() && self.big_r.is_finite()) {
            return bad("r and R must be finite".into());
        }
        if !(0.0 < self.r && self.r < self.big_r) {
            return bad(format!(
                "need 0 < r < R, got r={}, R={}",
                self.r, self.big_r
            ));
        }
        if !(0.0 <= self.theta_beta
            && self.theta_beta <= self.theta_gamma
            && self.theta_gamma < FRAC_PI_4)
        {
            return bad(format!(
                "need 0 <= theta_beta <= theta_gamma < pi/4, got theta_beta={}, theta_gamma={}",
                self.theta_beta, self.theta_gamma
            ));
        }
        if self.n < 2 {
            return bad(format!("need n >= 2, got {}", self.n));
        }
        if self.m < 1 {
            return bad(format!("need m >= 1, got {}", self.m));
        }
        Ok(())
    }

    /// Same geometry with a different grid resolution.
    pub fn with_counts(&self, n: usize, m: usize) -> Self {
        Self { n, m, ..*self }
    }

    /// Same geometry and counts with the interior rotation replaced.
    pub fn with_theta_beta(&self, theta_beta: f64) -> Self {
        Self {
            theta_beta,
            ..*self
        }
    }

    pub fn gamma(&self) -> C64 {
        C64::from_polar(1.0, self.theta_gamma)
    }

    pub fn beta(&self) -> C64 {
        C64::from_polar(1.0, self.theta_beta)
    }

    /// Complex end point of the ECS contour, `r + (R - r) gamma`.
    pub fn r_z(&self) -> C64 {
        self.r + (self.big_r - self.r) * self.gamma()
    }

    /// Complex end point of the CSG contour, `r beta + (R - r) gamma`.
    pub fn r_z_csg(&self) -> C64 {
        self.r * self.beta() + (self.big_r - self.r) * self.gamma()
    }

    /// Number of interior unknowns of the discretized problem, `n + m - 1`.
    pub fn unknowns(&self) -> usize {
        self.n + self.m - 1
    }
}

/// Realized complex grid points and spacings on an [`EcsDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    /// `z_0 .. z_{n+m}`.
    pub points: Vec<C64>,
    /// `h_j = z_{j+1} - z_j`.
    pub spacings: Vec<C64>,
    /// Real interior spacing `r / n`.
    pub h: f64,
    /// Complex exterior spacing `(R - r) gamma / m`.
    pub h_gamma: C64,
    /// Complex end point of the contour.
    pub r_z_end: C64,
    /// Number of interior intervals.
    pub n: usize,
    /// Number of exterior intervals.
    pub m: usize,
}

impl ContourGrid {
    /// Number of interior unknowns, `n + m - 1`.
    pub fn unknowns(&self) -> usize {
        self.spacings.len() - 1
    }
}

/// Build the ECS grid; `theta_beta` must be zero.
pub fn build_ecs_grid(domain: &EcsDomain) -> Result<ContourGrid> {
    if domain.theta_beta != 0.0 {
        return Err(Error::InvalidDomain(format!(
            "build_ecs_grid requires theta_beta = 0, got {}; use build_csg_grid",
            domain.theta_beta
        )));
    }
    build_csg_grid(domain)
}

/// Build the grid on the complex stretched domain. With `theta_beta = 0`
/// this is exactly the ECS grid.
pub fn build_csg_grid(domain: &EcsDomain) -> Result<ContourGrid> {
    domain.validate()?;
    let EcsDomain { r, big_r, n, m, .. } = *domain;
    let h = r / n as f64;
    let h_int = h * domain.beta();
    let h_gamma = (big_r - r) * domain.gamma() / m as f64;
    // Interior end point is r*beta; for beta = 1 it is exactly r.
    let z_r = if domain.theta_beta == 0.0 {
        C64::new(r, 0.0)
    } else {
        r * domain.beta()
    };

    let mut points = Vec::with_capacity(n + m + 1);
    for j in 0..=n {
        points.push(if j == n { z_r } else { j as f64 * h_int });
    }
    for j in 1..=m {
        points.push(z_r + j as f64 * h_gamma);
    }
    let mut spacings = Vec::with_capacity(n + m);
    spacings.extend(std::iter::repeat_n(h_int, n));
    spacings.extend(std::iter::repeat_n(h_gamma, m));

    Ok(ContourGrid {
        points,
        spacings,
        h,
        h_gamma,
        r_z_end: z_r + (big_r - r) * domain.gamma(),
        n,
        m,
    })
}

//! The Lehto integral `∫_A |μ(y)| / |y − x₀|² dy` over a round annulus
//! centred at its singular point.
//!
//! In log-polar coordinates `y = x₀ + e^u e^{iθ}` the measure
//! `dy / |y − x₀|²` becomes `du dθ`, so the integrand is just `|μ|` on the
//! rectangle `[log r₁, log r₂] × [0, 2π)`. That rectangle is integrated with
//! the midpoint rule, doubling both directions until two successive levels
//! agree to the requested tolerance.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::Dilatation;
use crate::map::{fd_dilatation, PlanarMap};
use crate::modulus::{bounding_annuli, AnnulusSpec, DEFAULT_CIRCLE_SAMPLES};
use crate::{Complex, Error, Result};

/// Refinement stops once a level would exceed this many cells.
pub const MAX_CELLS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LehtoEstimate {
    pub value: f64,
    /// `|I_finest − I_previous|`.
    pub abs_error: f64,
    pub cells: usize,
    /// `abs_error ≤ tol` was reached before the cell cap.
    pub converged: bool,
}

fn midpoint_sum<D: Dilatation + ?Sized>(mu: &D, a: &AnnulusSpec, nu: usize, nt: usize) -> f64 {
    let u0 = a.r1.ln();
    let du = a.modulus() / nu as f64;
    let dt = TAU / nt as f64;
    let total: f64 = (0..nu)
        .into_par_iter()
        .map(|i| {
            let rho = (u0 + (i as f64 + 0.5) * du).exp();
            (0..nt)
                .map(|j| mu.mu(a.center + Complex::from_polar(rho, (j as f64 + 0.5) * dt)).norm())
                .sum::<f64>()
        })
        .sum();
    total * du * dt
}

/// Integrate `|μ(y)|/|y − x₀|²` over `a`. When the cell cap is hit before the
/// tolerance, the finest estimate comes back with `converged = false`.
pub fn lehto_integral<D: Dilatation + ?Sized>(mu: &D, a: &AnnulusSpec, tol: f64) -> Result<LehtoEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    AnnulusSpec::new(a.center, a.r1, a.r2)?;
    let mut nu = ((a.modulus() * 8.0).ceil() as usize).max(8);
    let mut nt = 32;
    let mut value = midpoint_sum(mu, a, nu, nt);
    let mut abs_error = f64::INFINITY;
    while nu * nt * 4 <= MAX_CELLS {
        nu *= 2;
        nt *= 2;
        let next = midpoint_sum(mu, a, nu, nt);
        abs_error = (next - value).abs();
        value = next;
        if abs_error <= tol {
            return Ok(LehtoEstimate { value, abs_error, cells: nu * nt, converged: true });
        }
    }
    Ok(LehtoEstimate { value, abs_error, cells: nu * nt, converged: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LehtoCheckConfig {
    pub tol: f64,
    pub circle_samples: usize,
    /// Allowance for boundary sampling when comparing the two sides.
    pub slack: f64,
    pub seed: u64,
}

impl Default for LehtoCheckConfig {
    fn default() -> Self {
        LehtoCheckConfig { tol: 1e-4, circle_samples: DEFAULT_CIRCLE_SAMPLES, slack: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LehtoReport {
    /// Range of `|M(f(A)) − M(A)|` allowed by the sandwich `M(E) ≤ M(f(A)) ≤ M(D)`.
    pub lhs: [f64; 2],
    /// `C(K)` times the Lehto integral.
    pub rhs: f64,
    pub integral: LehtoEstimate,
    pub consistent: bool,
    /// Largest `|μ_fd − μ|` over the finite-difference spot checks.
    pub mu_spot_error: f64,
}

/// Compare the modulus gap of `f` on `a` with `ck` times the Lehto integral.
/// The comparison is one-sided: consistent when the smallest admissible gap
/// does not exceed the right-hand side.
pub fn lehto_check<M, D>(f: &M, mu: &D, a: &AnnulusSpec, ck: f64, cfg: &LehtoCheckConfig) -> Result<LehtoReport>
where
    M: PlanarMap + ?Sized,
    D: Dilatation + ?Sized,
{
    if !(ck >= 0.0 && ck.is_finite()) {
        return Err(Error::invalid(format!("C(K) = {ck} must be a non-negative number")));
    }
    let ba = bounding_annuli(f, a, cfg.circle_samples)?;
    let lower_m = ba.e()?.modulus();
    let upper_m = ba.modulus_d();
    let m = a.modulus();
    let lo = if m < lower_m {
        lower_m - m
    } else if m > upper_m {
        m - upper_m
    } else {
        0.0
    };
    let hi = (upper_m - m).abs().max((lower_m - m).abs());
    let integral = lehto_integral(mu, a, cfg.tol)?;
    let rhs = ck * integral.value;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mu_spot_error = 0.0f64;
    let h = 1e-5 * a.r1.max(1e-3);
    for _ in 0..16 {
        let rho = a.r1 * (a.r2 / a.r1).powf(rng.random::<f64>());
        let z = a.center + Complex::from_polar(rho, TAU * rng.random::<f64>());
        if let Some(m_fd) = fd_dilatation(f, z, h) {
            mu_spot_error = mu_spot_error.max((m_fd - mu.mu(z)).norm());
        }
    }
    Ok(LehtoReport {
        lhs: [lo, hi],
        rhs,
        integral,
        consistent: lo <= rhs + cfg.slack,
        mu_spot_error,
    })
}

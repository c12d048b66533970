//! Extension of a circle homeomorphism to the closed unit disk.
//!
//! A boundary map `e^{iθ} ↦ e^{iγ(θ)}` is extended by interpolating the
//! angle linearly in the radius:
//!
//! ```text
//! F(r e^{iθ}) = r · e^{i(r γ(θ) + (1 − r) θ)}
//! ```
//!
//! so `F` keeps every circle `|z| = r` and is the identity near the origin
//! to first order. Its Beltrami coefficient has the closed form
//!
//! ```text
//! μ_F = e^{2iθ} · [r(1 − γ′) + i r(γ − θ)] / [2 − r(1 − γ′) + i r(γ − θ)].
//! ```

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

/// `γ(θ) = θ + Σ aₖ sin kθ + bₖ(1 − cos kθ)`, `k = 1, 2, …`.
///
/// The lift satisfies `γ(θ + 2π) = γ(θ) + 2π` and `γ(0) = 0` by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CircleHomeo {
    Fourier {
        #[serde(default)]
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
    },
}

impl CircleHomeo {
    pub fn identity() -> Self {
        CircleHomeo::Fourier { a: Vec::new(), b: Vec::new() }
    }

    pub fn fourier(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("Fourier coefficients must be finite"));
        }
        Ok(CircleHomeo::Fourier { a, b })
    }

    /// Trigonometric interpolant of samples `γ(2πj/n) − 2πj/n`,
    /// `j = 0..n`. The interpolant is shifted so that `γ(0) = 0`; the Nyquist
    /// mode is dropped.
    pub fn from_samples(periodic_part: &[f64]) -> Result<Self> {
        let n = periodic_part.len();
        if n < 4 {
            return Err(Error::invalid(format!("need at least 4 samples of γ, got {n}")));
        }
        if periodic_part.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples of γ must be finite"));
        }
        let mut buf: Vec<Complex> = periodic_part.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let kmax = (n - 1) / 2;
        let mut a = Vec::with_capacity(kmax);
        let mut b = Vec::with_capacity(kmax);
        for c in &buf[1..=kmax] {
            // p(θ) ⊃ αₖ cos kθ + βₖ sin kθ with αₖ = 2 Re ĉₖ/n, βₖ = −2 Im ĉₖ/n
            let alpha = 2.0 * c.re / n as f64;
            let beta = -2.0 * c.im / n as f64;
            a.push(beta);
            b.push(-alpha);
        }
        CircleHomeo::fourier(a, b)
    }

    fn coeffs(&self) -> (&[f64], &[f64]) {
        match self {
            CircleHomeo::Fourier { a, b } => (a, b),
        }
    }

    /// `γ(θ) − θ`.
    pub fn periodic_part(&self, theta: f64) -> f64 {
        let (a, b) = self.coeffs();
        let mut s = 0.0;
        for (k, &ak) in a.iter().enumerate() {
            s += ak * ((k + 1) as f64 * theta).sin();
        }
        for (k, &bk) in b.iter().enumerate() {
            s += bk * (1.0 - ((k + 1) as f64 * theta).cos());
        }
        s
    }

    pub fn gamma(&self, theta: f64) -> f64 {
        theta + self.periodic_part(theta)
    }

    pub fn gamma_prime(&self, theta: f64) -> f64 {
        let (a, b) = self.coeffs();
        let mut s = 1.0;
        for (k, &ak) in a.iter().enumerate() {
            let k = (k + 1) as f64;
            s += ak * k * (k * theta).cos();
        }
        for (k, &bk) in b.iter().enumerate() {
            let k = (k + 1) as f64;
            s += bk * k * (k * theta).sin();
        }
        s
    }
}

fn polar(z: Complex) -> (f64, f64) {
    (z.norm(), z.im.atan2(z.re))
}

fn check_closed_disk(r: f64) -> Result<()> {
    if r > 1.0 || !r.is_finite() {
        return Err(Error::invalid(format!("extension is defined on the closed unit disk, got |z| = {r}")));
    }
    Ok(())
}

/// `F(r e^{iθ}) = r e^{i(rγ(θ) + (1 − r)θ)}` on the closed unit disk.
pub fn extend_f(h: &CircleHomeo, z: Complex) -> Result<Complex> {
    let (r, theta) = polar(z);
    check_closed_disk(r)?;
    Ok(eval_unchecked(h, r, theta))
}

fn eval_unchecked(h: &CircleHomeo, r: f64, theta: f64) -> Complex {
    if r == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    Complex::from_polar(r, theta + r * h.periodic_part(theta))
}

fn mu_raw(h: &CircleHomeo, r: f64, theta: f64) -> Complex {
    let p = r * (1.0 - h.gamma_prime(theta));
    let q = r * h.periodic_part(theta);
    Complex::new(p, q) / Complex::new(2.0 - p, q) * Complex::from_polar(1.0, 2.0 * theta)
}

/// Beltrami coefficient of the extension. `|μ_F| ≥ 1` means the recipe does
/// not give a quasiconformal map at `z` and is reported as an error.
pub fn mu_f(h: &CircleHomeo, z: Complex) -> Result<Complex> {
    let (r, theta) = polar(z);
    check_closed_disk(r)?;
    if r == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    let mu = mu_raw(h, r, theta);
    if !(mu.norm() < 1.0) {
        return Err(Error::NotUniformlyElliptic(mu.norm()));
    }
    Ok(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    /// Every circle is mapped onto itself by a strictly increasing angle.
    pub is_homeo: bool,
    pub sup_mu: f64,
    /// Fitted exponent of `max |μ_F(z + δ) − μ_F(z)|` against `|δ|`.
    pub holder_eps: f64,
    /// Extreme values of `|F(z) − F(w)|/|z − w|` over random pairs.
    pub lipschitz_min: f64,
    pub lipschitz_max: f64,
    /// Fitted exponent of `max_θ |μ_F(r e^{iθ})|` against `r` as `r → 0`.
    pub origin_rate: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Scan the extension of `h` on a polar grid with `grid_n` radii and angles.
pub fn validate_extension(h: &CircleHomeo, grid_n: usize) -> Result<ExtensionReport> {
    if grid_n < 8 {
        return Err(Error::invalid(format!("grid size {grid_n} is too small")));
    }
    let thetas: Vec<f64> = (0..=grid_n).map(|j| TAU * j as f64 / grid_n as f64).collect();
    let phases: Vec<f64> = thetas.iter().map(|&t| h.periodic_part(t)).collect();

    // The angle rγ + (1 − r)θ is affine in r, so monotonicity at r = 1 and
    // r = 0 covers every circle; the derivative test catches dips between
    // samples.
    let mut is_homeo = thetas.iter().all(|&t| h.gamma_prime(t) > 0.0);
    for r in [1.0, 0.5] {
        let angle = |k: usize| thetas[k] + r * phases[k];
        is_homeo &= (0..grid_n).all(|k| angle(k + 1) > angle(k));
        is_homeo &= ((angle(grid_n) - angle(0)) - TAU).abs() < 1e-9;
    }

    let mut sup_mu = 0.0f64;
    for i in 1..grid_n {
        let r = i as f64 / grid_n as f64;
        for &t in &thetas[..grid_n] {
            sup_mu = sup_mu.max(mu_raw(h, r, t).norm());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probes: Vec<Complex> = (0..64)
        .map(|_| Complex::from_polar(0.05 + 0.85 * rng.random::<f64>(), TAU * rng.random::<f64>()))
        .collect();
    let deltas: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
    let mut log_d = Vec::new();
    let mut log_diff = Vec::new();
    for &d in &deltas {
        let mut worst = 0.0f64;
        for (k, &z) in probes.iter().enumerate() {
            let w = z + Complex::from_polar(d, k as f64);
            let (r0, t0) = polar(z);
            let (r1, t1) = polar(w);
            worst = worst.max((mu_raw(h, r1, t1) - mu_raw(h, r0, t0)).norm());
        }
        if worst > 0.0 {
            log_d.push(d.ln());
            log_diff.push(worst.ln());
        }
    }
    let holder_eps = if log_d.len() >= 2 { fit_slope(&log_d, &log_diff) } else { 1.0 };

    let radii: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
    let mut log_r = Vec::new();
    let mut log_mu = Vec::new();
    for &r in &radii {
        let m = thetas[..grid_n].iter().map(|&t| mu_raw(h, r, t).norm()).fold(0.0, f64::max);
        if m > 0.0 {
            log_r.push(r.ln());
            log_mu.push(m.ln());
        }
    }
    let origin_rate = if log_r.len() >= 2 { fit_slope(&log_r, &log_mu) } else { f64::INFINITY };

    let mut lipschitz_min = f64::INFINITY;
    let mut lipschitz_max = 0.0f64;
    for _ in 0..4000 {
        let z = Complex::from_polar(rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
        let w = Complex::from_polar(rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
        let (rz, tz) = polar(z);
        let (rw, tw) = polar(w);
        let ratio = (eval_unchecked(h, rz, tz) - eval_unchecked(h, rw, tw)).norm() / (z - w).norm();
        if ratio.is_finite() {
            lipschitz_min = lipschitz_min.min(ratio);
            lipschitz_max = lipschitz_max.max(ratio);
        }
    }

    Ok(ExtensionReport { is_homeo, sup_mu, holder_eps, lipschitz_min, lipschitz_max, origin_rate })
}

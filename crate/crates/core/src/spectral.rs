//! Spectral kernels on square periodic grids.
//!
//! With `ξ = k_x + i k_y`, the Wirtinger derivatives act as
//! `∂̄ ↔ iξ/2` and `∂ ↔ i ξ̄/2`. The plane singular integral sending `∂̄h`
//! to `∂h` is therefore the unimodular multiplier `ξ̄/ξ`, and the periodic
//! solution of `∂̄P = h` is `P̂ = −2i ĥ/ξ`. Both multipliers vanish at
//! `ξ = 0`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::ComplexGrid;
use crate::{Complex, Error, Result};

const ROWS_PER_TASK: usize = 16;

/// Forward/inverse 2-D transforms and the two multipliers for an `n × n`
/// grid of period `period` in both directions.
pub struct SpectralPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    beurling: Vec<Complex>,
    cauchy: Vec<Complex>,
}

impl SpectralPlan {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::invalid(format!("spectral grid of size {n} is too small")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid("spectral period must be positive"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k: Vec<f64> = (0..n)
            .map(|m| {
                let f = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                std::f64::consts::TAU * f / period
            })
            .collect();
        let mut beurling = vec![Complex::new(0.0, 0.0); n * n];
        let mut cauchy = vec![Complex::new(0.0, 0.0); n * n];
        for (j, &ky) in k.iter().enumerate() {
            for (i, &kx) in k.iter().enumerate() {
                if i == 0 && j == 0 {
                    continue;
                }
                let xi = Complex::new(kx, ky);
                beurling[j * n + i] = xi.conj() / xi;
                cauchy[j * n + i] = Complex::new(0.0, -2.0) / xi;
            }
        }
        Ok(SpectralPlan { n, forward, inverse, beurling, cauchy })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [Complex], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        data.par_chunks_mut(n * ROWS_PER_TASK).for_each(|rows| fft.process(rows));
        let mut t = transpose(data, n);
        t.par_chunks_mut(n * ROWS_PER_TASK).for_each(|rows| fft.process(rows));
        transpose_into(&t, data, n);
    }

    pub fn forward(&self, data: &mut [Complex]) {
        self.transform(data, &self.forward);
    }

    /// Normalised inverse transform.
    pub fn inverse(&self, data: &mut [Complex]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    fn apply(&self, data: &mut [Complex], multiplier: &[Complex]) {
        assert_eq!(data.len(), self.n * self.n, "grid size does not match the plan");
        self.forward(data);
        data.par_iter_mut().zip(multiplier.par_iter()).for_each(|(z, m)| *z *= m);
        self.inverse(data);
    }

    /// Apply the multiplier `ξ̄/ξ` in place.
    pub fn beurling_in_place(&self, data: &mut [Complex]) {
        self.apply(data, &self.beurling);
    }

    /// Periodic, mean-free solution of `∂̄P = h`, in place. The mean of `h`
    /// is discarded.
    pub fn cauchy_in_place(&self, data: &mut [Complex]) {
        self.apply(data, &self.cauchy);
    }
}

fn transpose(data: &[Complex], n: usize) -> Vec<Complex> {
    let mut out = vec![Complex::new(0.0, 0.0); n * n];
    transpose_into(data, &mut out, n);
    out
}

fn transpose_into(src: &[Complex], dst: &mut [Complex], n: usize) {
    dst.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * n + j];
        }
    });
}

fn plan_for(g: &ComplexGrid) -> Result<SpectralPlan> {
    if g.nx != g.ny {
        return Err(Error::invalid(format!("spectral grid must be square, got {}x{}", g.nx, g.ny)));
    }
    let h = g.dx();
    if ((g.dy() - h) / h).abs() > 1e-12 {
        return Err(Error::invalid("spectral grid must have equal spacing in x and y"));
    }
    SpectralPlan::new(g.nx, g.nx as f64 * h)
}

/// The plane singular integral with multiplier `ξ̄/ξ`, treating `g` as one
/// period of a periodic function. Accuracy degrades when `g` reaches the
/// edges of the grid; see [`boundary_energy_fraction`].
pub fn singular_transform(g: &ComplexGrid) -> Result<ComplexGrid> {
    let plan = plan_for(g)?;
    let mut data = g.data.clone();
    plan.beurling_in_place(&mut data);
    Ok(ComplexGrid { data, ..g.clone() })
}

/// Periodic mean-free solution of `∂̄P = g`.
pub fn periodic_cauchy(g: &ComplexGrid) -> Result<ComplexGrid> {
    let plan = plan_for(g)?;
    let mut data = g.data.clone();
    plan.cauchy_in_place(&mut data);
    Ok(ComplexGrid { data, ..g.clone() })
}

/// Share of `Σ|g|²` carried by nodes within `n/16` of the grid edge.
pub fn boundary_energy_fraction(g: &ComplexGrid) -> f64 {
    let band = (g.nx.min(g.ny) / 16).max(1);
    let mut total = 0.0;
    let mut edge = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let e = g.at(i, j).norm_sqr();
            total += e;
            if i < band || j < band || i >= g.nx - band || j >= g.ny - band {
                edge += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

//! Principal solution of the Beltrami equation on a grid.
//!
//! For compactly supported `μ` with `‖μ‖∞ < 1` the principal solution is
//! `Φ = z + C h`, where `C` is the Cauchy transform and `h = ∂̄Φ` solves
//! `h = μ·S h + μ` with `S` the unimodular singular integral. The fixed point
//! is found by Neumann iteration; each step costs two FFTs.
//!
//! The periodic grid cannot represent the `T/z` tail of `C h` directly, so
//! the total mass of `h` is carried by a Gaussian whose Cauchy transform is
//! known in closed form, and only the mean-free remainder goes through the
//! spectral solve.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::DilatationField;
use crate::grid::{self, ComplexGrid, Rect};
use crate::map::PlanarMap;
use crate::spectral::{boundary_energy_fraction, SpectralPlan};
use crate::{Complex, Error, Result};

/// Magic prefix of a `.qcmap` file.
pub const MAP_MAGIC: &[u8; 8] = b"QCMAP1\0\0";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Nodes per side; a power of two, at least 64.
    pub grid_n: usize,
    /// Ratio of the grid half-width to the support half-width, at least 2.
    pub pad_factor: f64,
    /// Stop when `‖h_{m+1} − h_m‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// `μ` is averaged over `supersample²` points per cell. `1` samples
    /// at the nodes only.
    pub supersample: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { grid_n: 512, pad_factor: 4.0, tol: 1e-10, max_iter: 500, supersample: 4 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 64 || !self.grid_n.is_power_of_two() {
            return Err(Error::invalid(format!("grid_n = {} must be a power of two >= 64", self.grid_n)));
        }
        if !(self.pad_factor >= 2.0 && self.pad_factor.is_finite()) {
            return Err(Error::invalid(format!("pad_factor = {} must be >= 2", self.pad_factor)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iter == 0 || self.supersample == 0 {
            return Err(Error::invalid("max_iter and supersample must be positive"));
        }
        Ok(())
    }
}

/// Samples of a map on a node grid, with the far-field rule
/// `Φ(z) ≈ z + T/(z − z_c)` outside the box (`z_c` the box center).
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub values: ComplexGrid,
    pub tail: Complex,
}

impl GridMap {
    /// Sample `f` on the nodes of `bbox`.
    pub fn sample<M: PlanarMap + ?Sized>(f: &M, nx: usize, ny: usize, bbox: Rect, tail: Complex) -> Self {
        GridMap { values: ComplexGrid::from_fn(nx, ny, bbox, |z| f.eval(z)), tail }
    }

    pub fn bbox(&self) -> Rect {
        self.values.bbox
    }

    /// Bilinear inside the box, `z + T/(z − z_c)` outside.
    pub fn eval(&self, z: Complex) -> Complex {
        match self.values.bilinear(z) {
            Some(w) => w,
            None => z + self.tail / (z - self.values.bbox.center()),
        }
    }

    /// Spot check that `pairs` random distinct nodes have images at least
    /// `1e-9` apart.
    pub fn spot_check_injective(&self, pairs: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = self.values.data.len();
        (0..pairs).all(|_| {
            let a = rng.random_range(0..len);
            let b = rng.random_range(0..len);
            a == b || (self.values.data[a] - self.values.data[b]).norm() > 1e-9
        })
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        grid::write_header(w, MAP_MAGIC, self.values.nx, self.values.ny)?;
        for v in self.values.bbox.to_array() {
            grid::write_f64(w, v)?;
        }
        grid::write_f64(w, self.tail.re)?;
        grid::write_f64(w, self.tail.im)?;
        grid::write_samples(w, &self.values.data)
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let (nx, ny) = grid::read_header(r, MAP_MAGIC)?;
        let mut b = [0.0; 4];
        for v in &mut b {
            *v = grid::read_f64(r)?;
        }
        let bbox = Rect::from_array(b).map_err(|e| Error::Format(e.to_string()))?;
        let tail = Complex::new(grid::read_f64(r)?, grid::read_f64(r)?);
        let data = grid::read_samples(r, nx * ny)?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after the sample block".into()));
        }
        Ok(GridMap { values: ComplexGrid::new(nx, ny, bbox, data)?, tail })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        GridMap::read(&mut BufReader::new(File::open(path)?))
    }
}

impl PlanarMap for GridMap {
    fn eval(&self, z: Complex) -> Complex {
        GridMap::eval(self, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    /// `‖h_{m+1} − h_m‖∞` per iteration.
    pub residual_history: Vec<f64>,
    pub tail: [f64; 2],
    /// Share of `Σ|μ|²` near the grid edge; large values mean the padding
    /// is too small.
    pub boundary_energy_fraction: f64,
    pub grid_spacing: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub map: GridMap,
    pub stats: SolveStats,
}

/// Node grid used by [`solve_principal`]: `n` nodes per side with spacing
/// `2·half/n`, starting at `center − half`.
fn solver_grid(field: &DilatationField, cfg: &SolverConfig) -> Result<Rect> {
    let support = if field.is_zero() {
        Rect::square(Complex::new(0.0, 0.0), 1.0)
    } else {
        field.support_bbox().ok_or_else(|| {
            Error::SupportTooLarge("unbounded support; truncate the field with a radius".into())
        })?
    };
    let center = support.center();
    let mut half = 0.5 * cfg.pad_factor * support.width().max(support.height());
    if half <= 0.0 {
        half = 1.0;
    }
    let h = 2.0 * half / cfg.grid_n as f64;
    let lo = center - Complex::new(half, half);
    let hi = lo + Complex::new((cfg.grid_n - 1) as f64 * h, (cfg.grid_n - 1) as f64 * h);
    Ok(Rect::new(lo.re, lo.im, hi.re, hi.im))
}

fn sample_field(field: &DilatationField, bbox: Rect, n: usize, supersample: usize) -> Vec<Complex> {
    let h = bbox.width() / (n - 1) as f64;
    let offsets: Vec<f64> = (0..supersample)
        .map(|a| ((a as f64 + 0.5) / supersample as f64 - 0.5) * h)
        .collect();
    let weight = 1.0 / (supersample * supersample) as f64;
    let mut out = vec![Complex::new(0.0, 0.0); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let y = bbox.ymin + j as f64 * h;
        for (i, v) in row.iter_mut().enumerate() {
            let x = bbox.xmin + i as f64 * h;
            let mut acc = Complex::new(0.0, 0.0);
            for &dy in &offsets {
                for &dx in &offsets {
                    acc += field.evaluate(Complex::new(x + dx, y + dy));
                }
            }
            *v = acc * weight;
        }
    });
    out
}

fn sup_diff(a: &[Complex], b: &[Complex]) -> f64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| (x - y).norm()).reduce(|| 0.0, f64::max)
}

/// Compute the principal solution `Φ(z) = z + O(1/z)` for `field`.
pub fn solve_principal(field: &DilatationField, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    field.validate()?;
    let n = cfg.grid_n;
    let bbox = solver_grid(field, cfg)?;
    let h = bbox.width() / (n - 1) as f64;
    let plan = SpectralPlan::new(n, n as f64 * h)?;

    let mu = sample_field(field, bbox, n, cfg.supersample);
    let mu_grid = ComplexGrid::new(n, n, bbox, mu)?;
    let edge = boundary_energy_fraction(&mu_grid);
    if edge > 0.01 {
        return Err(Error::SupportTooLarge(format!(
            "{:.1}% of |μ|² lies near the grid edge",
            100.0 * edge
        )));
    }
    let mu = mu_grid.data;

    // h_{m+1} = μ·S h_m + μ, starting from h_0 = 0
    let mut h_cur = vec![Complex::new(0.0, 0.0); n * n];
    let mut work = vec![Complex::new(0.0, 0.0); n * n];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        work.copy_from_slice(&h_cur);
        plan.beurling_in_place(&mut work);
        work.par_iter_mut().zip(mu.par_iter()).for_each(|(w, m)| *w = m * *w + m);
        let res = sup_diff(&work, &h_cur);
        std::mem::swap(&mut h_cur, &mut work);
        history.push(res);
        if !res.is_finite() {
            break;
        }
        if res <= cfg.tol {
            converged = true;
            break;
        }
    }
    let residual = history.last().copied().unwrap_or(0.0);
    if !converged {
        return Err(Error::NotConverged { iterations: history.len(), residual });
    }

    // mass of h goes to a Gaussian at the box center
    let zc = bbox.center();
    let cell = h * h;
    let mass: Complex = h_cur.par_iter().copied().sum::<Complex>() * cell;
    let half = 0.5 * n as f64 * h;
    let sigma = half / 8.0;
    let gauss = |z: Complex| (-(z - zc).norm_sqr() / (sigma * sigma)).exp() / (PI * sigma * sigma);
    let gauss_cauchy = |z: Complex| {
        let d = z - zc;
        let r2 = d.norm_sqr();
        if r2 < 1e-300 {
            Complex::new(0.0, 0.0)
        } else {
            // (1 − e^{−r²/σ²}) / (π d), written to keep precision near the center
            -(-r2 / (sigma * sigma)).exp_m1() / (PI * d)
        }
    };
    let node = |k: usize| Complex::new(bbox.xmin + (k % n) as f64 * h, bbox.ymin + (k / n) as f64 * h);
    work.par_iter_mut().enumerate().for_each(|(k, w)| *w = h_cur[k] - mass * gauss(node(k)));
    plan.cauchy_in_place(&mut work);
    let values: Vec<Complex> = work
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let z = node(k);
            z + p + mass * gauss_cauchy(z)
        })
        .collect();
    let tail = mass / PI;
    let map = GridMap { values: ComplexGrid::new(n, n, bbox, values)?, tail };
    let stats = SolveStats {
        iterations: history.len(),
        residual,
        residual_history: history,
        tail: [tail.re, tail.im],
        boundary_energy_fraction: edge,
        grid_spacing: h,
    };
    Ok(Solution { map, stats })
}

/// Finite-difference Beltrami coefficient of a grid map at interior nodes.
#[derive(Debug, Clone)]
pub struct FdDilatation {
    pub values: ComplexGrid,
    /// `false` on the boundary ring and where `|∂Φ| < 1e-8`.
    pub valid: Vec<bool>,
}

/// Central-difference `∂̄Φ / ∂Φ` at every interior node.
pub fn finite_difference_mu(gm: &GridMap) -> FdDilatation {
    let g = &gm.values;
    let (nx, ny) = (g.nx, g.ny);
    let (hx, hy) = (g.dx(), g.dy());
    let mut values = vec![Complex::new(0.0, 0.0); nx * ny];
    let mut valid = vec![false; nx * ny];
    values
        .par_chunks_mut(nx)
        .zip(valid.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(j, (vrow, okrow))| {
            if j == 0 || j == ny - 1 {
                return;
            }
            for i in 1..nx - 1 {
                let fx = (g.at(i + 1, j) - g.at(i - 1, j)) / (2.0 * hx);
                let fy = (g.at(i, j + 1) - g.at(i, j - 1)) / (2.0 * hy);
                let dz = (fx - Complex::i() * fy) * 0.5;
                let dzbar = (fx + Complex::i() * fy) * 0.5;
                if dz.norm() >= 1e-8 {
                    vrow[i] = dzbar / dz;
                    okrow[i] = true;
                }
            }
        });
    FdDilatation { values: ComplexGrid { data: values, ..g.clone() }, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_maps::DiskMap;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { grid_n: 100, ..Default::default() },
            SolverConfig { grid_n: 32, ..Default::default() },
            SolverConfig { pad_factor: 1.5, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn zero_field_gives_identity_in_one_iteration() {
        let cfg = SolverConfig { grid_n: 64, ..Default::default() };
        let sol = solve_principal(&DilatationField::zero(), &cfg).unwrap();
        assert_eq!(sol.stats.iterations, 1);
        assert_eq!(sol.map.tail, Complex::new(0.0, 0.0));
        let g = &sol.map.values;
        for j in 0..g.ny {
            for i in 0..g.nx {
                assert!((g.at(i, j) - g.node(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unbounded_support_is_rejected() {
        let f = DilatationField::sector(Complex::new(0.3, 0.0), 1.0, 0.0, None).unwrap();
        let cfg = SolverConfig { grid_n: 64, ..Default::default() };
        assert!(matches!(solve_principal(&f, &cfg), Err(Error::SupportTooLarge(_))));
    }

    #[test]
    fn identity_grid_interpolates_exactly() {
        let bbox = Rect::new(-2.0, -1.0, 2.0, 3.0);
        let gm = GridMap::sample(&|z: Complex| z, 17, 9, bbox, Complex::new(0.0, 0.0));
        for z in [Complex::new(0.123, 2.71), Complex::new(-2.0, -1.0), Complex::new(5.0, 5.0)] {
            assert!((gm.eval(z) - z).norm() < 1e-13);
        }
        let fd = finite_difference_mu(&gm);
        for (v, ok) in fd.values.data.iter().zip(&fd.valid) {
            if *ok {
                assert!(v.norm() < 1e-12);
            }
        }
        assert!(gm.spot_check_injective(1000, 3));
    }

    #[test]
    fn fd_mu_of_sampled_fc() {
        let f = DiskMap::new(Complex::new(0.3, 0.0)).unwrap();
        let n = 161;
        let gm = GridMap::sample(&f, n, n, Rect::new(-2.0, -2.0, 2.0, 2.0), f.c);
        let fd = finite_difference_mu(&gm);
        let h = gm.values.dx();
        for j in 0..n {
            for i in 0..n {
                if !fd.valid[j * n + i] {
                    continue;
                }
                let z = gm.values.node(i, j);
                let dist = (z.norm() - 1.0).abs();
                if dist < 2.0 * h {
                    continue;
                }
                let expect = if z.norm() < 1.0 { 0.3 } else { 0.0 };
                assert!((fd.values.at(i, j) - Complex::new(expect, 0.0)).norm() < 0.02, "at {z}");
            }
        }
    }

    #[test]
    fn grid_map_file_round_trip() {
        let f = DiskMap::new(Complex::new(0.2, -0.1)).unwrap();
        let gm = GridMap::sample(&f, 12, 7, Rect::new(-1.5, -1.0, 1.5, 2.0), f.c);
        let mut buf = Vec::new();
        gm.write(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"QCMAP1\0\0");
        assert_eq!(buf.len(), 8 + 8 + 4 * 8 + 2 * 8 + 12 * 7 * 16);
        let back = GridMap::read(&mut buf.as_slice()).unwrap();
        assert_eq!(back, gm);
        buf.push(0);
        assert!(GridMap::read(&mut buf.as_slice()).is_err());
        assert!(GridMap::read(&mut &buf[..40]).is_err());
    }
}

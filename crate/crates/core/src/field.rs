//! Dilatation fields (Beltrami coefficients).
//!
//! A field is a declarative description of `μ`: constant on a disk, constant
//! on a sector, bilinearly interpolated samples with Hölder metadata, or a
//! composite of members with disjoint supports. Fields are immutable once
//! validated and can be evaluated concurrently.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{self, ComplexGrid, Rect};
use crate::{arg_2pi, complex_pair, Complex, Error, Result};

/// Magic prefix of a `mu.bin` sample file.
pub const FIELD_MAGIC: &[u8; 8] = b"QCFLD1\0\0";

/// Anything that can be evaluated as a Beltrami coefficient.
pub trait Dilatation: Sync {
    fn mu(&self, z: Complex) -> Complex;
}

impl<F: Fn(Complex) -> Complex + Sync> Dilatation for F {
    fn mu(&self, z: Complex) -> Complex {
        self(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DilatationField {
    /// `c` on the closed disk `|z − center| ≤ radius`, zero outside.
    DiskConstant { c: Complex, center: Complex, radius: f64 },
    /// `c` on the sector `{0 ≤ arg(z e^{−iβ}) < θ₀}` (optionally cut off at
    /// `|z| ≤ radius`), zero outside.
    SectorConstant { c: Complex, theta0: f64, beta: f64, radius: Option<f64> },
    HolderGrid(HolderGrid),
    Composite(Vec<DilatationField>),
}

/// Node samples with a support mask and declared Hölder data
/// `|μ(x) − μ(y)| ≤ C|x − y|^ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderGrid {
    pub samples: ComplexGrid,
    /// One flag per node, same layout as `samples.data`.
    pub mask: Vec<bool>,
    pub epsilon: f64,
    pub holder_c: f64,
}

impl HolderGrid {
    pub fn new(samples: ComplexGrid, mask: Vec<bool>, epsilon: f64, holder_c: f64) -> Result<Self> {
        if mask.len() != samples.data.len() {
            return Err(Error::invalid("mask length does not match the sample grid"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("Hölder exponent {epsilon} not in (0, 1]")));
        }
        if !(holder_c > 0.0 && holder_c.is_finite()) {
            return Err(Error::invalid(format!("Hölder constant {holder_c} must be positive")));
        }
        Ok(HolderGrid { samples, mask, epsilon, holder_c })
    }

    /// Grid whose mask is the whole box.
    pub fn full(samples: ComplexGrid, epsilon: f64, holder_c: f64) -> Result<Self> {
        let mask = vec![true; samples.data.len()];
        HolderGrid::new(samples, mask, epsilon, holder_c)
    }

    /// Mask keeps only the nodes with a non-zero sample.
    pub fn nonzero(samples: ComplexGrid, epsilon: f64, holder_c: f64) -> Result<Self> {
        let mask = samples.data.iter().map(|z| *z != Complex::new(0.0, 0.0)).collect();
        HolderGrid::new(samples, mask, epsilon, holder_c)
    }

    fn masked(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.samples.nx + i]
    }

    /// Boundary cells (any corner masked) count as inside.
    pub fn contains(&self, z: Complex) -> bool {
        match self.samples.locate(z) {
            Some((i, j, _, _)) => {
                self.masked(i, j) || self.masked(i + 1, j) || self.masked(i, j + 1) || self.masked(i + 1, j + 1)
            }
            None => false,
        }
    }

    /// Bilinear interpolation restricted to masked corners. Weights of
    /// masked corners are renormalised, so the value is always a convex
    /// combination of samples.
    pub fn evaluate(&self, z: Complex) -> Complex {
        let Some((i, j, s, t)) = self.samples.locate(z) else {
            return Complex::new(0.0, 0.0);
        };
        let corners = [
            (i, j, (1.0 - s) * (1.0 - t)),
            (i + 1, j, s * (1.0 - t)),
            (i, j + 1, (1.0 - s) * t),
            (i + 1, j + 1, s * t),
        ];
        let mut acc = Complex::new(0.0, 0.0);
        let mut wsum = 0.0;
        let mut any = false;
        for &(a, b, w) in &corners {
            if self.masked(a, b) {
                any = true;
                acc += self.samples.at(a, b) * w;
                wsum += w;
            }
        }
        if !any {
            return Complex::new(0.0, 0.0);
        }
        if wsum > 0.0 {
            acc / wsum
        } else {
            // z sits exactly on an unmasked corner of a boundary cell; fall
            // back to the nearest masked corner.
            let &(a, b, _) = corners
                .iter()
                .filter(|(a, b, _)| self.masked(*a, *b))
                .min_by(|x, y| {
                    let dx = (self.samples.node(x.0, x.1) - z).norm_sqr();
                    let dy = (self.samples.node(y.0, y.1) - z).norm_sqr();
                    dx.total_cmp(&dy)
                })
                .unwrap();
            self.samples.at(a, b)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples
            .data
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(z, _)| z.norm())
            .fold(0.0, f64::max)
    }

    /// Write the samples in the `mu.bin` layout.
    pub fn write_samples(&self, w: &mut impl Write) -> Result<()> {
        grid::write_header(w, FIELD_MAGIC, self.samples.nx, self.samples.ny)?;
        grid::write_samples(w, &self.samples.data)
    }

    pub fn save_samples(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_samples(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Read a `mu.bin` block: magic, `nx`, `ny`, then `nx·ny` interleaved pairs.
pub fn read_field_samples(r: &mut impl Read) -> Result<(usize, usize, Vec<Complex>)> {
    let (nx, ny) = grid::read_header(r, FIELD_MAGIC)?;
    let data = grid::read_samples(r, nx * ny)?;
    Ok((nx, ny, data))
}

impl DilatationField {
    pub fn zero() -> Self {
        DilatationField::Composite(Vec::new())
    }

    pub fn disk(c: Complex, center: Complex, radius: f64) -> Result<Self> {
        let f = DilatationField::DiskConstant { c, center, radius };
        f.validate()?;
        Ok(f)
    }

    pub fn unit_disk(c: Complex) -> Result<Self> {
        Self::disk(c, Complex::new(0.0, 0.0), 1.0)
    }

    pub fn sector(c: Complex, theta0: f64, beta: f64, radius: Option<f64>) -> Result<Self> {
        let f = DilatationField::SectorConstant { c, theta0, beta, radius };
        f.validate()?;
        Ok(f)
    }

    pub fn composite(members: Vec<DilatationField>) -> Result<Self> {
        let f = DilatationField::Composite(members);
        f.validate()?;
        Ok(f)
    }

    /// Check `‖μ‖∞ < 1`, finiteness and (for composites) disjoint supports.
    pub fn validate(&self) -> Result<()> {
        match self {
            DilatationField::DiskConstant { c, center, radius } => {
                if !(crate::is_finite(*c) && crate::is_finite(*center)) {
                    return Err(Error::invalid("non-finite disk field"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!("disk radius {radius} must be positive")));
                }
            }
            DilatationField::SectorConstant { c, theta0, beta, radius } => {
                if !(crate::is_finite(*c) && beta.is_finite()) {
                    return Err(Error::invalid("non-finite sector field"));
                }
                if !(*theta0 > 0.0 && *theta0 < TAU) {
                    return Err(Error::invalid(format!("sector opening {theta0} not in (0, 2π)")));
                }
                if let Some(r) = radius {
                    if !(*r > 0.0 && r.is_finite()) {
                        return Err(Error::invalid(format!("sector radius {r} must be positive")));
                    }
                }
            }
            DilatationField::HolderGrid(g) => {
                if g.mask.len() != g.samples.data.len() {
                    return Err(Error::invalid("mask length does not match the sample grid"));
                }
            }
            DilatationField::Composite(members) => {
                for m in members {
                    m.validate()?;
                }
                self.check_disjoint(256)?;
            }
        }
        let k = self.sup_norm();
        if !(k < 1.0) {
            return Err(Error::NotUniformlyElliptic(k));
        }
        Ok(())
    }

    fn check_disjoint(&self, n: usize) -> Result<()> {
        let DilatationField::Composite(members) = self else {
            return Ok(());
        };
        if members.len() < 2 {
            return Ok(());
        }
        // unbounded members are probed on a window around the bounded ones
        let window = members
            .iter()
            .filter_map(|m| m.support_bbox())
            .reduce(|a, b| a.union(&b))
            .unwrap_or(Rect::square(Complex::new(0.0, 0.0), 4.0));
        let pad = 0.05 * window.width().max(window.height());
        let window = Rect::new(window.xmin - pad, window.ymin - pad, window.xmax + pad, window.ymax + pad);
        for j in 0..n {
            for i in 0..n {
                let z = Complex::new(
                    window.xmin + (i as f64 + 0.5) * window.width() / n as f64,
                    window.ymin + (j as f64 + 0.5) * window.height() / n as f64,
                );
                if members.iter().filter(|m| m.contains(z)).count() > 1 {
                    return Err(Error::invalid(format!("composite supports overlap near {z}")));
                }
            }
        }
        Ok(())
    }

    /// `sup |μ|` over the support.
    pub fn sup_norm(&self) -> f64 {
        match self {
            DilatationField::DiskConstant { c, .. } | DilatationField::SectorConstant { c, .. } => c.norm(),
            DilatationField::HolderGrid(g) => g.sup_norm(),
            DilatationField::Composite(ms) => ms.iter().map(|m| m.sup_norm()).fold(0.0, f64::max),
        }
    }

    /// Closed support membership (boundary points count as inside).
    pub fn contains(&self, z: Complex) -> bool {
        match self {
            DilatationField::DiskConstant { center, radius, .. } => (z - center).norm() <= *radius,
            DilatationField::SectorConstant { theta0, beta, radius, .. } => {
                if let Some(r) = radius {
                    if z.norm() > *r {
                        return false;
                    }
                }
                if z == Complex::new(0.0, 0.0) {
                    return true;
                }
                arg_2pi(z * Complex::from_polar(1.0, -beta)) < *theta0
            }
            DilatationField::HolderGrid(g) => g.contains(z),
            DilatationField::Composite(ms) => ms.iter().any(|m| m.contains(z)),
        }
    }

    /// `μ(z)`; zero outside the support.
    pub fn evaluate(&self, z: Complex) -> Complex {
        match self {
            DilatationField::DiskConstant { c, .. } | DilatationField::SectorConstant { c, .. } => {
                if self.contains(z) {
                    *c
                } else {
                    Complex::new(0.0, 0.0)
                }
            }
            DilatationField::HolderGrid(g) => g.evaluate(z),
            DilatationField::Composite(ms) => ms
                .iter()
                .find(|m| m.contains(z))
                .map(|m| m.evaluate(z))
                .unwrap_or_default(),
        }
    }

    /// Bounding box of the support, `None` when the support is unbounded.
    pub fn support_bbox(&self) -> Option<Rect> {
        match self {
            DilatationField::DiskConstant { center, radius, .. } => Some(Rect::square(*center, *radius)),
            DilatationField::SectorConstant { radius, .. } => {
                radius.map(|r| Rect::square(Complex::new(0.0, 0.0), r))
            }
            DilatationField::HolderGrid(g) => Some(g.samples.bbox),
            DilatationField::Composite(ms) => {
                let mut out: Option<Rect> = None;
                for m in ms {
                    let b = m.support_bbox()?;
                    out = Some(match out {
                        Some(o) => o.union(&b),
                        None => b,
                    });
                }
                out
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0
    }

    /// Sample random pairs in the support and report the worst excess of
    /// `|μ(x) − μ(y)|` over `C|x − y|^ε`. Composite members are checked
    /// separately, since Hölder continuity is only claimed on each piece.
    pub fn holder_check(&self, pair_count: usize, seed: u64) -> Result<HolderReport> {
        let grids: Vec<&HolderGrid> = match self {
            DilatationField::HolderGrid(g) => vec![g],
            DilatationField::Composite(ms) if !ms.is_empty() => ms
                .iter()
                .map(|m| match m {
                    DilatationField::HolderGrid(g) => Ok(g),
                    _ => Err(Error::NoHolderMetadata),
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::NoHolderMetadata),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        let mut tested = 0;
        for (k, g) in grids.iter().enumerate() {
            let share = pair_count / grids.len() + usize::from(k < pair_count % grids.len());
            for n in 0..share {
                let Some(x) = sample_in(g, &mut rng, |_| true) else { break };
                let y = if n % 2 == 0 {
                    sample_in(g, &mut rng, |_| true)
                } else {
                    // short-range partner on a log-uniform scale
                    let lo = 0.25 * g.samples.dx().min(g.samples.dy());
                    let hi = g.samples.bbox.width().max(g.samples.bbox.height());
                    let mut found = None;
                    for _ in 0..32 {
                        let r = lo * (hi / lo).powf(rng.random::<f64>());
                        let y = x + Complex::from_polar(r, TAU * rng.random::<f64>());
                        if g.contains(y) {
                            found = Some(y);
                            break;
                        }
                    }
                    found
                };
                let Some(y) = y else { continue };
                let d = (x - y).norm();
                let excess = (g.evaluate(x) - g.evaluate(y)).norm() - g.holder_c * d.powf(g.epsilon);
                worst = worst.max(excess);
                tested += 1;
            }
        }
        if tested == 0 {
            return Err(Error::invalid("could not sample any pair inside the support"));
        }
        Ok(HolderReport { max_violation: worst, pairs: tested })
    }
}

fn sample_in(g: &HolderGrid, rng: &mut ChaCha8Rng, accept: impl Fn(Complex) -> bool) -> Option<Complex> {
    let b = g.samples.bbox;
    for _ in 0..10_000 {
        let z = Complex::new(
            b.xmin + b.width() * rng.random::<f64>(),
            b.ymin + b.height() * rng.random::<f64>(),
        );
        if g.contains(z) && accept(z) {
            return Some(z);
        }
    }
    None
}

impl Dilatation for DilatationField {
    fn mu(&self, z: Complex) -> Complex {
        self.evaluate(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// `max(|μ(x) − μ(y)| − C|x − y|^ε)`; `≤ 0` means consistent.
    pub max_violation: f64,
    pub pairs: usize,
}

/// How a `holder_grid` JSON spec builds its support mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Every node of the box is in the support.
    #[default]
    All,
    /// Only nodes with a non-zero sample.
    Nonzero,
}

fn default_radius() -> f64 {
    1.0
}

/// JSON form of a field, as read by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    DiskConstant {
        #[serde(with = "complex_pair")]
        c: Complex,
        #[serde(with = "complex_pair", default)]
        center: Complex,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    SectorConstant {
        #[serde(with = "complex_pair")]
        c: Complex,
        theta0: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    HolderGrid {
        bbox: [f64; 4],
        n: [u32; 2],
        epsilon: f64,
        holder_c: f64,
        data_file: String,
        #[serde(default)]
        mask: MaskMode,
    },
    Composite {
        members: Vec<FieldSpec>,
    },
}

impl FieldSpec {
    /// Build the field; `data_file` paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<DilatationField> {
        let field = match self {
            FieldSpec::DiskConstant { c, center, radius } => DilatationField::DiskConstant {
                c: *c,
                center: *center,
                radius: *radius,
            },
            FieldSpec::SectorConstant { c, theta0, beta, radius } => DilatationField::SectorConstant {
                c: *c,
                theta0: *theta0,
                beta: *beta,
                radius: *radius,
            },
            FieldSpec::HolderGrid { bbox, n, epsilon, holder_c, data_file, mask } => {
                let path = base_dir.join(data_file);
                let mut r = BufReader::new(File::open(&path)?);
                let (nx, ny, data) = read_field_samples(&mut r)?;
                if [nx as u32, ny as u32] != *n {
                    return Err(Error::Format(format!(
                        "{} holds a {nx}x{ny} grid but the field file says {}x{}",
                        path.display(),
                        n[0],
                        n[1]
                    )));
                }
                let samples = ComplexGrid::new(nx, ny, Rect::from_array(*bbox)?, data)?;
                let g = match mask {
                    MaskMode::All => HolderGrid::full(samples, *epsilon, *holder_c)?,
                    MaskMode::Nonzero => HolderGrid::nonzero(samples, *epsilon, *holder_c)?,
                };
                DilatationField::HolderGrid(g)
            }
            FieldSpec::Composite { members } => DilatationField::Composite(
                members.iter().map(|m| m.build(base_dir)).collect::<Result<_>>()?,
            ),
        };
        field.validate()?;
        Ok(field)
    }

    /// Parse a JSON spec file and build the field it describes.
    pub fn load(path: impl AsRef<Path>) -> Result<(FieldSpec, DilatationField)> {
        let path = path.as_ref();
        let spec: FieldSpec = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let field = spec.build(base)?;
        Ok((spec, field))
    }
}

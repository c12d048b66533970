//! Uniform node grids of complex samples and the little-endian binary
//! helpers shared by the field and grid-map file formats.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Rect { xmin, ymin, xmax, ymax }
    }

    /// Square of half-width `half` around `center`.
    pub fn square(center: Complex, half: f64) -> Self {
        Rect::new(center.re - half, center.im - half, center.re + half, center.im + half)
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        let r = Rect::new(a[0], a[1], a[2], a[3]);
        if !(a.iter().all(|v| v.is_finite()) && r.xmin < r.xmax && r.ymin < r.ymax) {
            return Err(Error::invalid(format!("degenerate bounding box {a:?}")));
        }
        Ok(r)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn center(&self) -> Complex {
        Complex::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    pub fn contains(&self, z: Complex) -> bool {
        z.re >= self.xmin && z.re <= self.xmax && z.im >= self.ymin && z.im <= self.ymax
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &Rect) -> Rect {
        Rect::new(
            self.xmin.min(other.xmin),
            self.ymin.min(other.ymin),
            self.xmax.max(other.xmax),
            self.ymax.max(other.ymax),
        )
    }

    /// `true` when `other` lies inside `self`.
    pub fn encloses(&self, other: &Rect) -> bool {
        other.xmin >= self.xmin
            && other.xmax <= self.xmax
            && other.ymin >= self.ymin
            && other.ymax <= self.ymax
    }
}

/// Samples on the nodes of a uniform grid. Node `(i, j)` sits at
/// `xmin + i·dx + i(ymin + j·dy)` with `dx = width/(nx−1)`; storage is
/// row-major with rows of increasing imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub nx: usize,
    pub ny: usize,
    pub bbox: Rect,
    pub data: Vec<Complex>,
}

impl ComplexGrid {
    pub fn new(nx: usize, ny: usize, bbox: Rect, data: Vec<Complex>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
        }
        if data.len() != nx * ny {
            return Err(Error::invalid(format!(
                "grid data has {} samples, expected {}",
                data.len(),
                nx * ny
            )));
        }
        Ok(ComplexGrid { nx, ny, bbox, data })
    }

    /// Fill a grid by evaluating `f` at every node.
    pub fn from_fn(nx: usize, ny: usize, bbox: Rect, f: impl Fn(Complex) -> Complex) -> Self {
        let (dx, dy) = (bbox.width() / (nx - 1) as f64, bbox.height() / (ny - 1) as f64);
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(Complex::new(bbox.xmin + i as f64 * dx, bbox.ymin + j as f64 * dy)));
            }
        }
        ComplexGrid { nx, ny, bbox, data }
    }

    pub fn dx(&self) -> f64 {
        self.bbox.width() / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.bbox.height() / (self.ny - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> Complex {
        Complex::new(
            self.bbox.xmin + i as f64 * self.dx(),
            self.bbox.ymin + j as f64 * self.dy(),
        )
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex {
        self.data[j * self.nx + i]
    }

    /// Cell containing `z` and the fractional offsets inside it, or `None`
    /// when `z` is outside the box.
    pub fn locate(&self, z: Complex) -> Option<(usize, usize, f64, f64)> {
        if !self.bbox.contains(z) {
            return None;
        }
        let u = (z.re - self.bbox.xmin) / self.dx();
        let v = (z.im - self.bbox.ymin) / self.dy();
        let i = (u.floor() as usize).min(self.nx - 2);
        let j = (v.floor() as usize).min(self.ny - 2);
        Some((i, j, u - i as f64, v - j as f64))
    }

    /// Bilinear interpolation; `None` outside the box.
    pub fn bilinear(&self, z: Complex) -> Option<Complex> {
        let (i, j, s, t) = self.locate(z)?;
        let a = self.at(i, j);
        let b = self.at(i + 1, j);
        let c = self.at(i, j + 1);
        let d = self.at(i + 1, j + 1);
        Some(a * ((1.0 - s) * (1.0 - t)) + b * (s * (1.0 - t)) + c * ((1.0 - s) * t) + d * (s * t))
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn write_header(w: &mut impl Write, magic: &[u8; 8], nx: usize, ny: usize) -> Result<()> {
    w.write_all(magic)?;
    let nx = u32::try_from(nx).map_err(|_| Error::Format("nx exceeds u32".into()))?;
    let ny = u32::try_from(ny).map_err(|_| Error::Format("ny exceeds u32".into()))?;
    w.write_all(&nx.to_le_bytes())?;
    w.write_all(&ny.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_header(r: &mut impl Read, magic: &[u8; 8]) -> Result<(usize, usize)> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let nx = read_u32(r)? as usize;
    let ny = read_u32(r)? as usize;
    Ok((nx, ny))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn write_samples(w: &mut impl Write, data: &[Complex]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 16);
    for z in data {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_samples(r: &mut impl Read, count: usize) -> Result<Vec<Complex>> {
    let mut buf = vec![0u8; count * 16];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated sample block: {e}")))?;
    let data: Vec<Complex> = buf
        .chunks_exact(16)
        .map(|c| {
            Complex::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    if data.iter().any(|z| !crate::is_finite(*z)) {
        return Err(Error::Format("non-finite sample".into()));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let bbox = Rect::new(-1.0, -2.0, 3.0, 1.0);
        let f = |z: Complex| Complex::new(2.0, -1.0) * z + Complex::new(0.5, 0.25);
        let g = ComplexGrid::from_fn(9, 7, bbox, f);
        for z in [Complex::new(0.13, -0.71), Complex::new(3.0, 1.0), Complex::new(-1.0, -2.0)] {
            assert!((g.bilinear(z).unwrap() - f(z)).norm() < 1e-13);
        }
        assert!(g.bilinear(Complex::new(3.01, 0.0)).is_none());
    }

    #[test]
    fn header_rejects_wrong_magic() {
        let mut buf = Vec::new();
        write_header(&mut buf, b"QCFLD1\0\0", 4, 5).unwrap();
        assert_eq!(read_header(&mut buf.as_slice(), b"QCFLD1\0\0").unwrap(), (4, 5));
        assert!(matches!(
            read_header(&mut buf.as_slice(), b"QCMAP1\0\0"),
            Err(Error::Format(_))
        ));
    }
}

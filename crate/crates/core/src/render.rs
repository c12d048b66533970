//! Pictures of a map: reference curves in the domain are pushed through the
//! map and drawn as polylines into a binary PPM image.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::grid::Rect;
use crate::map::PlanarMap;
use crate::{Complex, Error, Result};

const GRID_COLOR: [u8; 3] = [150, 150, 150];
const UNIT_CIRCLE_COLOR: [u8; 3] = [210, 30, 30];
const CIRCLE_COLOR: [u8; 3] = [240, 140, 0];
const SECTOR_COLOR: [u8; 3] = [30, 60, 210];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    GridLine,
    UnitCircle,
    Circle,
    SectorEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub color: [u8; 3],
    pub points: Vec<Complex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorEdges {
    pub theta0: f64,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Region of the domain covered by the reference grid, and the viewport
    /// of the picture.
    pub window: Rect,
    pub width: usize,
    pub height: usize,
    /// Lines of the reference grid in each direction.
    pub grid_lines: usize,
    /// Points per reference curve.
    pub curve_samples: usize,
    pub sector: Option<SectorEdges>,
}

impl RenderConfig {
    pub fn new(window: Rect, width: usize, height: usize) -> Self {
        RenderConfig { window, width, height, grid_lines: 11, curve_samples: 1024, sector: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.window.width() > 0.0 && self.window.height() > 0.0) {
            return Err(Error::invalid("render window must have positive extent"));
        }
        if self.width < 2 || self.height < 2 || self.width > 16384 || self.height > 16384 {
            return Err(Error::invalid(format!("image size {}x{} is out of range", self.width, self.height)));
        }
        if self.grid_lines < 2 || self.curve_samples < 2 {
            return Err(Error::invalid("need at least 2 grid lines and 2 samples per curve"));
        }
        Ok(())
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Reference curves: the grid over the window, circles of radius 0.5, 1
/// and 2 about the origin, and the sector edges on log-spaced radii.
pub fn reference_curves(cfg: &RenderConfig) -> Vec<Curve> {
    let w = cfg.window;
    let n = cfg.curve_samples;
    let ts: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let mut curves = Vec::new();
    for l in 0..cfg.grid_lines {
        let s = l as f64 / (cfg.grid_lines - 1) as f64;
        let x = lerp(w.xmin, w.xmax, s);
        let y = lerp(w.ymin, w.ymax, s);
        curves.push(Curve {
            kind: CurveKind::GridLine,
            color: GRID_COLOR,
            points: ts.iter().map(|&t| Complex::new(x, lerp(w.ymin, w.ymax, t))).collect(),
        });
        curves.push(Curve {
            kind: CurveKind::GridLine,
            color: GRID_COLOR,
            points: ts.iter().map(|&t| Complex::new(lerp(w.xmin, w.xmax, t), y)).collect(),
        });
    }
    for (r, kind, color) in [
        (0.5, CurveKind::Circle, CIRCLE_COLOR),
        (2.0, CurveKind::Circle, CIRCLE_COLOR),
        (1.0, CurveKind::UnitCircle, UNIT_CIRCLE_COLOR),
    ] {
        curves.push(Curve { kind, color, points: ts.iter().map(|&t| Complex::from_polar(r, TAU * t)).collect() });
    }
    if let Some(s) = cfg.sector {
        let corners = [
            Complex::new(w.xmin, w.ymin),
            Complex::new(w.xmin, w.ymax),
            Complex::new(w.xmax, w.ymin),
            Complex::new(w.xmax, w.ymax),
        ];
        let r_max = corners.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let r_min = r_max * 1e-4;
        for angle in [s.beta, s.beta + s.theta0] {
            let points = ts
                .iter()
                .map(|&t| Complex::from_polar(r_min * (r_max / r_min).powf(t), angle))
                .collect();
            curves.push(Curve { kind: CurveKind::SectorEdge, color: SECTOR_COLOR, points });
        }
    }
    curves
}

/// Push every curve through `f`.
pub fn trace<M: PlanarMap + ?Sized>(f: &M, curves: &[Curve]) -> Vec<Curve> {
    curves
        .iter()
        .map(|c| Curve { kind: c.kind, color: c.color, points: c.points.iter().map(|&z| f.eval(z)).collect() })
        .collect()
}

/// A white RGB raster.
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> Self {
        Canvas { width, height, pixels: vec![255; width * height * 3] }
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let k = 3 * (y as usize * self.width + x as usize);
        self.pixels[k..k + 3].copy_from_slice(&color);
    }

    /// DDA line between pixel-space points.
    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), color: [u8; 3]) {
        let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            self.put(lerp(a.0, b.0, t).round() as i64, lerp(a.1, b.1, t).round() as i64, color);
        }
    }

    pub fn write_ppm(&self, w: &mut impl Write) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 32);
        self.write_ppm(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

/// Draw traced curves into the viewport `cfg.window`. Segments whose
/// endpoints are not finite, or that jump across more than a quarter of the
/// picture, are skipped so branch cuts do not smear lines across the image.
pub fn draw(curves: &[Curve], cfg: &RenderConfig) -> Canvas {
    let mut canvas = Canvas::new(cfg.width, cfg.height);
    let w = cfg.window;
    let sx = (cfg.width - 1) as f64 / w.width();
    let sy = (cfg.height - 1) as f64 / w.height();
    let to_px = |z: Complex| ((z.re - w.xmin) * sx, (w.ymax - z.im) * sy);
    let max_jump = cfg.width.max(cfg.height) as f64 / 4.0;
    // grid first so the highlighted curves stay on top
    let mut order: Vec<&Curve> = curves.iter().filter(|c| c.kind == CurveKind::GridLine).collect();
    order.extend(curves.iter().filter(|c| c.kind != CurveKind::GridLine));
    for c in order {
        for seg in c.points.windows(2) {
            if !(crate::is_finite(seg[0]) && crate::is_finite(seg[1])) {
                continue;
            }
            let (a, b) = (to_px(seg[0]), to_px(seg[1]));
            if (a.0 - b.0).abs().max((a.1 - b.1).abs()) > max_jump {
                continue;
            }
            // far off-screen segments would cost a long DDA for nothing
            let off = |p: (f64, f64)| p.0 < -max_jump || p.1 < -max_jump || p.0 > cfg.width as f64 + max_jump
                || p.1 > cfg.height as f64 + max_jump;
            if off(a) && off(b) {
                continue;
            }
            canvas.line(a, b, c.color);
        }
    }
    canvas
}

/// Reference curves of `cfg` pushed through `f` and drawn.
pub fn render<M: PlanarMap + ?Sized>(f: &M, cfg: &RenderConfig) -> Result<Canvas> {
    cfg.validate()?;
    Ok(draw(&trace(f, &reference_curves(cfg)), cfg))
}

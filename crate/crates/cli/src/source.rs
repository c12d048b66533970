//! Map sources named on the command line.

use std::path::Path;

use qcmap::closed_maps::{DiskMap, SectorMap};
use qcmap::field::FieldSpec;
use qcmap::{Complex, DilatationField, Error, GridMap, PlanarMap, Result};

pub enum MapSource {
    Identity,
    Disk(DiskMap),
    Sector(SectorMap),
    Grid(Box<GridMap>),
}

impl PlanarMap for MapSource {
    fn eval(&self, z: Complex) -> Complex {
        match self {
            MapSource::Identity => z,
            MapSource::Disk(m) => m.eval(z),
            MapSource::Sector(m) => m.eval(z),
            MapSource::Grid(m) => m.eval(z),
        }
    }
}

impl MapSource {
    /// Accepts `builtin:identity`, `builtin:fc:<re>[,<im>]`,
    /// `builtin:fangle:<re>[,<im>]:<theta0>` or a path to a `.qcmap` file.
    pub fn parse(spec: &str) -> Result<Self> {
        let Some(rest) = spec.strip_prefix("builtin:") else {
            return Ok(MapSource::Grid(Box::new(GridMap::load(spec)?)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        match parts.as_slice() {
            ["identity"] => Ok(MapSource::Identity),
            ["fc", c] => Ok(MapSource::Disk(DiskMap::new(parse_complex(c)?)?)),
            ["fangle", c, theta0] => {
                let theta0 = parse_real(theta0, "theta0")?;
                Ok(MapSource::Sector(SectorMap::new(parse_complex(c)?, theta0)?))
            }
            _ => Err(Error::InvalidInput(format!("unknown builtin map `{spec}`"))),
        }
    }

    /// The dilatation of a builtin map, or the field file given alongside a
    /// grid map.
    pub fn field(&self, field_path: Option<&Path>) -> Result<DilatationField> {
        if let Some(p) = field_path {
            return Ok(FieldSpec::load(p)?.1);
        }
        match self {
            MapSource::Identity => Ok(DilatationField::zero()),
            MapSource::Disk(m) => Ok(m.field()),
            MapSource::Sector(m) => Ok(m.field()),
            MapSource::Grid(_) => Err(Error::invalid("a .qcmap source needs --field for its dilatation")),
        }
    }
}

pub fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidInput(format!("{what}: `{s}` is not a finite number")))
}

/// `re,im` or a bare real part.
pub fn parse_complex(s: &str) -> Result<Complex> {
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex::new(parse_real(re, "real part")?, parse_real(im, "imaginary part")?)),
        None => Ok(Complex::new(parse_real(s, "real part")?, 0.0)),
    }
}

/// Comma-separated list of exactly `N` reals.
pub fn parse_reals<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s.split(',').map(|t| parse_real(t, what)).collect::<Result<_>>()?;
    v.try_into()
        .map_err(|_| Error::InvalidInput(format!("{what}: expected {N} comma-separated numbers, got `{s}`")))
}

/// `grid:<n>:<s>` for an `n × n` grid over `[−s, s]²`, or a `;`-separated
/// list of `re,im` points.
pub fn parse_centers(spec: &str) -> Result<Vec<Complex>> {
    if let Some(rest) = spec.strip_prefix("grid:") {
        let (n, s) = rest
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("centers `{spec}`: expected grid:<n>:<half-width>")))?;
        let n: usize = n
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::InvalidInput(format!("centers `{spec}`: bad grid size")))?;
        let s = parse_real(s, "grid half-width")?;
        let coord = |k: usize| if n == 1 { 0.0 } else { -s + 2.0 * s * k as f64 / (n - 1) as f64 };
        return Ok((0..n).flat_map(|j| (0..n).map(move |i| Complex::new(coord(i), coord(j)))).collect());
    }
    let pts: Vec<Complex> = spec.split(';').filter(|t| !t.trim().is_empty()).map(parse_complex).collect::<Result<_>>()?;
    if pts.is_empty() {
        return Err(Error::invalid("no centers given"));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        assert!(matches!(MapSource::parse("builtin:identity").unwrap(), MapSource::Identity));
        match MapSource::parse("builtin:fc:0.5").unwrap() {
            MapSource::Disk(m) => assert_eq!(m.c, Complex::new(0.5, 0.0)),
            _ => panic!(),
        }
        match MapSource::parse("builtin:fangle:0.3,-0.1:1.5").unwrap() {
            MapSource::Sector(m) => assert_eq!((m.c, m.theta0), (Complex::new(0.3, -0.1), 1.5)),
            _ => panic!(),
        }
        assert!(MapSource::parse("builtin:fc:1.0").is_err());
        assert!(MapSource::parse("builtin:warp").is_err());
        assert!(MapSource::parse("builtin:fangle:0.1:7.0").is_err());
    }

    #[test]
    fn centers() {
        let g = parse_centers("grid:3:1").unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.contains(&Complex::new(0.0, 0.0)) && g.contains(&Complex::new(-1.0, 1.0)));
        assert_eq!(parse_centers("0,0; 1,-2").unwrap(), vec![Complex::new(0.0, 0.0), Complex::new(1.0, -2.0)]);
        assert!(parse_centers("grid:0:1").is_err());
        assert!(parse_centers("").is_err());
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_complex("0.3,0.2").unwrap(), Complex::new(0.3, 0.2));
        assert!(parse_complex("nan").is_err());
        assert_eq!(parse_reals::<4>("-2,-2,2,2", "window").unwrap(), [-2.0, -2.0, 2.0, 2.0]);
        assert!(parse_reals::<4>("1,2,3", "window").is_err());
    }
}

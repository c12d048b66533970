//! Numerical quasiconformal mapping.
//!
//! The crate is organised around a handful of pieces:
//!
//! * [`field`]: Beltrami coefficients (dilatation fields) as declarative,
//!   serializable specifications.
//! * [`closed_maps`]: exact bi-Lipschitz solutions for constant dilatation on
//!   the unit disk (`f_c`) and on a sector (the logarithmic spiral map), the
//!   allowability predicates and the dilatation composition rule.
//! * [`solver`]: the principal solution `z + O(1/z)` of a compactly supported
//!   Beltrami equation, sampled on a grid.
//! * [`modulus`]: annulus moduli, bounding annuli of images and the
//!   modulus-gap bi-Lipschitz certifier.
//! * [`lehto`]: quadrature of the Lehto integral.
//! * [`extension`]: the radial-angular extension of a circle homeomorphism to
//!   the closed disk together with its dilatation.
//! * [`render`]: PPM rendering of reference curves pushed through a map.

pub mod closed_maps;
pub mod error;
pub mod extension;
pub mod field;
pub mod grid;
pub mod lehto;
pub mod map;
pub mod modulus;
pub mod render;
pub mod solver;
pub mod spectral;

pub use num_complex::Complex64 as Complex;

pub use closed_maps::{compose_dilatation, DiskMap, SectorMap};
pub use error::{Error, Result};
pub use field::DilatationField;
pub use map::PlanarMap;
pub use modulus::{AnnulusSpec, CertificateReport};
pub use solver::{GridMap, SolverConfig};

/// Serde adapter storing a complex number as a `[re, im]` pair.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Argument of `z` normalised to `[0, 2π)`.
pub fn arg_2pi(z: Complex) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        let w = a + std::f64::consts::TAU;
        // -0.0 style rounding can land exactly on 2π
        if w >= std::f64::consts::TAU {
            0.0
        } else {
            w
        }
    } else {
        a
    }
}

pub(crate) fn is_finite(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

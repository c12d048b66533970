//! Maps of the plane and finite-difference Wirtinger derivatives.

use crate::Complex;

/// A map of the plane that can be evaluated pointwise.
pub trait PlanarMap: Sync {
    fn eval(&self, z: Complex) -> Complex;
}

impl<F: Fn(Complex) -> Complex + Sync> PlanarMap for F {
    fn eval(&self, z: Complex) -> Complex {
        self(z)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Identity;

impl PlanarMap for Identity {
    fn eval(&self, z: Complex) -> Complex {
        z
    }
}

/// `z ↦ scale·z + shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: Complex,
    pub shift: Complex,
}

impl PlanarMap for Similarity {
    fn eval(&self, z: Complex) -> Complex {
        self.scale * z + self.shift
    }
}

/// `outer ∘ inner`.
#[derive(Debug, Clone, Copy)]
pub struct Compose<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: PlanarMap, B: PlanarMap> PlanarMap for Compose<A, B> {
    fn eval(&self, z: Complex) -> Complex {
        self.outer.eval(self.inner.eval(z))
    }
}

/// Central-difference Wirtinger derivatives `(∂f, ∂̄f)` at `z` with step `h`.
pub fn fd_wirtinger<M: PlanarMap + ?Sized>(f: &M, z: Complex, h: f64) -> (Complex, Complex) {
    let fx = (f.eval(z + Complex::new(h, 0.0)) - f.eval(z - Complex::new(h, 0.0))) / (2.0 * h);
    let fy = (f.eval(z + Complex::new(0.0, h)) - f.eval(z - Complex::new(0.0, h))) / (2.0 * h);
    let i = Complex::i();
    ((fx - i * fy) * 0.5, (fx + i * fy) * 0.5)
}

/// Finite-difference Beltrami coefficient `∂̄f / ∂f`; `None` when `|∂f|`
/// is below `1e-8`.
pub fn fd_dilatation<M: PlanarMap + ?Sized>(f: &M, z: Complex, h: f64) -> Option<Complex> {
    let (dz, dzbar) = fd_wirtinger(f, z, h);
    if dz.norm() < 1e-8 {
        None
    } else {
        Some(dzbar / dz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wirtinger_of_real_linear_map() {
        let a = Complex::new(1.5, -0.2);
        let b = Complex::new(0.3, 0.4);
        let f = move |z: Complex| a * z + b * z.conj();
        let (dz, dzbar) = fd_wirtinger(&f, Complex::new(0.7, -1.1), 1e-3);
        assert!((dz - a).norm() < 1e-12);
        assert!((dzbar - b).norm() < 1e-12);
        assert!((fd_dilatation(&f, Complex::new(0.0, 0.0), 1e-3).unwrap() - b / a).norm() < 1e-12);
    }

    #[test]
    fn compose_applies_inner_first() {
        let m = Compose {
            outer: Similarity { scale: Complex::new(2.0, 0.0), shift: Complex::new(0.0, 0.0) },
            inner: Similarity { scale: Complex::new(1.0, 0.0), shift: Complex::new(1.0, 0.0) },
        };
        assert_eq!(m.eval(Complex::new(0.0, 0.0)), Complex::new(2.0, 0.0));
    }
}

//! Explicit quasiconformal solutions for constant dilatation.
//!
//! * [`DiskMap`]: the principal solution for `c·χ_𝔻`, equal to `z + c z̄` on
//!   the closed unit disk and `z + c/z` outside. It is bi-Lipschitz with
//!   constants `1 ∓ |c|`.
//! * [`SectorMap`]: the solution for `c` on the sector `0 ≤ arg z < θ₀` and
//!   `0` elsewhere. The plane is cut along `ℝ⁺`, the two sides are glued with
//!   the multiplier `λ(c, θ₀)`, and the result maps the sector onto a
//!   logarithmic spiral. It is bi-Lipschitz iff `Re λ = 1`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::field::DilatationField;
use crate::map::PlanarMap;
use crate::{arg_2pi, complex_pair, Complex, Error, Result};

/// Default tolerance for allowability of closed-form data.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Default tolerance for allowability of grid-derived data.
pub const GRID_TOL: f64 = 1e-3;

fn check_c(c: Complex) -> Result<()> {
    if !crate::is_finite(c) {
        return Err(Error::invalid("non-finite dilatation"));
    }
    if c.norm() >= 1.0 {
        return Err(Error::NotUniformlyElliptic(c.norm()));
    }
    Ok(())
}

/// `f_c`: the principal solution for constant dilatation `c` on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskMap {
    #[serde(with = "complex_pair")]
    pub c: Complex,
}

impl DiskMap {
    pub fn new(c: Complex) -> Result<Self> {
        check_c(c)?;
        Ok(DiskMap { c })
    }

    pub fn identity() -> Self {
        DiskMap { c: Complex::new(0.0, 0.0) }
    }

    pub fn eval(&self, z: Complex) -> Complex {
        if z.norm_sqr() <= 1.0 {
            z + self.c * z.conj()
        } else {
            z + self.c / z
        }
    }

    /// Inverse of [`DiskMap::eval`].
    ///
    /// Inside the image ellipse the real-linear system `z + c z̄ = w` is
    /// solved directly; outside, `z² − wz + c = 0` has exactly one root of
    /// modulus above one.
    pub fn inverse(&self, w: Complex) -> Result<Complex> {
        if self.c == Complex::new(0.0, 0.0) {
            return Ok(w);
        }
        let (inner, outer) = self.inverse_candidates(w);
        if inner.norm_sqr() <= 1.0 {
            return Ok(inner);
        }
        if outer.norm_sqr() >= 1.0 {
            return Ok(outer);
        }
        // both candidates sit on the wrong side of the circle; only rounding
        // on the ellipse itself can cause that
        let tol = 1e-9 * (1.0 + w.norm());
        if (inner - outer).norm() <= tol || inner.norm() - 1.0 <= tol || 1.0 - outer.norm() <= tol {
            Ok(self.inverse_nearest(w))
        } else {
            Err(Error::AmbiguousInverse(w))
        }
    }

    /// Infallible inverse: the valid branch, or the candidate closest to the
    /// unit circle when rounding leaves neither valid.
    pub fn inverse_nearest(&self, w: Complex) -> Complex {
        let (inner, outer) = self.inverse_candidates(w);
        if inner.norm_sqr() <= 1.0 {
            inner
        } else if outer.norm_sqr() >= 1.0 {
            outer
        } else if inner.norm() - 1.0 <= 1.0 - outer.norm() {
            inner
        } else {
            outer
        }
    }

    fn inverse_candidates(&self, w: Complex) -> (Complex, Complex) {
        let c = self.c;
        let inner = (w - c * w.conj()) / (1.0 - c.norm_sqr());
        let disc = (w * w - 4.0 * c).sqrt();
        let (r1, r2) = ((w + disc) * 0.5, (w - disc) * 0.5);
        let outer = if r1.norm_sqr() >= r2.norm_sqr() { r1 } else { r2 };
        (inner, outer)
    }

    /// Bi-Lipschitz constants `(1 − |c|, 1 + |c|)`.
    pub fn lipschitz_bounds(&self) -> (f64, f64) {
        (1.0 - self.c.norm(), 1.0 + self.c.norm())
    }

    pub fn field(&self) -> DilatationField {
        DilatationField::DiskConstant { c: self.c, center: Complex::new(0.0, 0.0), radius: 1.0 }
    }
}

impl PlanarMap for DiskMap {
    fn eval(&self, z: Complex) -> Complex {
        DiskMap::eval(self, z)
    }
}

/// Principal solution for `c` on the disk `|z − center| ≤ radius`:
/// `center + radius·f_c((z − center)/radius)`, again `z + O(1/z)` at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledDiskMap {
    pub inner: DiskMap,
    pub center: Complex,
    pub radius: f64,
}

impl ScaledDiskMap {
    pub fn new(c: Complex, center: Complex, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("disk radius must be positive"));
        }
        Ok(ScaledDiskMap { inner: DiskMap::new(c)?, center, radius })
    }
}

impl PlanarMap for ScaledDiskMap {
    fn eval(&self, z: Complex) -> Complex {
        self.center + self.inner.eval((z - self.center) / self.radius) * self.radius
    }
}

/// The sector construction for constant `c` on `0 ≤ arg z < θ₀`.
///
/// `R e^{iθ₁} = (e^{iθ₀} + c e^{−iθ₀})/(1 + c)` is the image of `e^{iθ₀}`
/// under the sector part of the map, `a = R e^{iθ₁}/e^{iθ₀}` the rotation
/// used on the complement, and `λ = 2πi / (log R + i(2π + θ₁ − θ₀))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorMap {
    #[serde(with = "complex_pair")]
    pub c: Complex,
    pub theta0: f64,
    /// `R`, exposed raw for auditing.
    pub r: f64,
    /// `θ₁ ∈ [0, 2π)`, exposed raw for auditing.
    pub theta1: f64,
    #[serde(with = "complex_pair")]
    pub a: Complex,
    #[serde(with = "complex_pair")]
    pub lambda: Complex,
}

impl SectorMap {
    pub fn new(c: Complex, theta0: f64) -> Result<Self> {
        sector_invariants(c, theta0)
    }

    /// `f₁`: real-linear on the sector, a rotation-dilation elsewhere,
    /// together with the continuous lift of its argument.
    fn f1_with_lift(&self, z: Complex) -> (Complex, f64) {
        let phi = arg_2pi(z);
        if phi < self.theta0 {
            let w = (z + self.c * z.conj()) / (1.0 + self.c);
            (w, arg_2pi(w))
        } else {
            (self.a * z, self.theta1 - self.theta0 + phi)
        }
    }

    /// `f_∠(z) = exp(λ · log f₁(z))` with the logarithm taken along the
    /// continuous lift of `arg f₁` that starts at 0 on the positive axis.
    /// `f_∠(0) = 0` by continuity.
    pub fn eval(&self, z: Complex) -> Complex {
        if z == Complex::new(0.0, 0.0) {
            return z;
        }
        let (w, lift) = self.f1_with_lift(z);
        (self.lambda * Complex::new(w.norm().ln(), lift)).exp()
    }

    pub fn is_allowable(&self, tol: f64) -> bool {
        (self.lambda.re - 1.0).abs() <= tol
    }

    pub fn field(&self) -> DilatationField {
        DilatationField::SectorConstant { c: self.c, theta0: self.theta0, beta: 0.0, radius: None }
    }
}

impl PlanarMap for SectorMap {
    fn eval(&self, z: Complex) -> Complex {
        SectorMap::eval(self, z)
    }
}

/// Compute `R`, `θ₁`, `a` and `λ` for the sector map.
pub fn sector_invariants(c: Complex, theta0: f64) -> Result<SectorMap> {
    check_c(c)?;
    if !(theta0 > 0.0 && theta0 < TAU) {
        return Err(Error::invalid(format!("sector opening {theta0} not in (0, 2π)")));
    }
    let e0 = Complex::from_polar(1.0, theta0);
    let q = (e0 + c * e0.conj()) / (1.0 + c);
    let r = q.norm();
    let theta1 = arg_2pi(q);
    let a = q / e0;
    let lambda = Complex::new(0.0, TAU) / Complex::new(r.ln(), TAU + theta1 - theta0);
    Ok(SectorMap { c, theta0, r, theta1, a, lambda })
}

/// `λ(c, θ₀)`.
pub fn lambda(c: Complex, theta0: f64) -> Result<Complex> {
    Ok(sector_invariants(c, theta0)?.lambda)
}

/// `c` is allowable for the sector of opening `θ₀` iff `Re λ(c, θ₀) = 1`.
pub fn is_allowable_sector(c: Complex, theta0: f64, tol: f64) -> Result<bool> {
    Ok(sector_invariants(c, theta0)?.is_allowable(tol))
}

/// Allowability at a corner of opening `απ` whose first arc leaves the
/// corner in direction `β`: the rotated value `c·e^{−2iβ}` must be
/// allowable for the sector of opening `απ`.
pub fn allowable_for_corner(c: Complex, alpha: f64, beta: f64, tol: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::invalid(format!("corner opening {alpha} not in (0, 2)")));
    }
    is_allowable_sector(c * Complex::from_polar(1.0, -2.0 * beta), alpha * PI, tol)
}

/// Dilatation of `f₁ ∘ f₂⁻¹` at `f₂(z)`, given `μ₁ = μ_{f₁}(z)`,
/// `μ₂ = μ_{f₂}(z)` and `arg ∂f₂(z)`.
pub fn compose_dilatation(mu1: Complex, mu2: Complex, arg_df2: f64) -> Complex {
    (mu1 - mu2) / (1.0 - mu1 * mu2.conj()) * Complex::from_polar(1.0, 2.0 * arg_df2)
}

/// Points of `{c ∈ 𝔻 : Re λ(c, θ₀) = 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Locus {
    pub theta0: f64,
    /// Set when every `c ∈ 𝔻` is allowable (the half-plane case).
    pub whole_disk: bool,
    /// `c = 0` first, then roots ordered by ray angle and radius.
    pub points: Vec<[f64; 2]>,
}

/// Trace the allowable locus by root-finding `Re λ − 1` along `samples`
/// rays `c = t e^{iφ}`. The trivial root `c = 0` is always included; rays
/// without a further root contribute nothing.
pub fn allowable_locus(theta0: f64, samples: usize) -> Result<Locus> {
    if !(theta0 > 0.0 && theta0 < TAU) {
        return Err(Error::invalid(format!("sector opening {theta0} not in (0, 2π)")));
    }
    if (theta0 - PI).abs() <= 1e-12 {
        return Ok(Locus { theta0, whole_disk: true, points: Vec::new() });
    }
    const SCAN: usize = 512;
    const T_LO: f64 = 1e-6;
    const T_HI: f64 = 1.0 - 1e-9;
    let mut points = vec![[0.0, 0.0]];
    for k in 0..samples {
        let dir = Complex::from_polar(1.0, TAU * k as f64 / samples as f64);
        let g = |t: f64| lambda(dir * t, theta0).map(|l| l.re - 1.0).unwrap_or(f64::NAN);
        let mut t_prev = T_LO;
        let mut g_prev = g(t_prev);
        for s in 1..=SCAN {
            let t = T_LO + (T_HI - T_LO) * s as f64 / SCAN as f64;
            let gt = g(t);
            if g_prev.is_finite() && gt.is_finite() && (g_prev == 0.0 || g_prev.signum() != gt.signum()) {
                let root = bisect(&g, t_prev, t);
                let c = dir * root;
                if (g(root)).abs() <= 1e-10 {
                    points.push([c.re, c.im]);
                }
            }
            t_prev = t;
            g_prev = gt;
        }
    }
    Ok(Locus { theta0, whole_disk: false, points })
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    if glo.abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::fd_dilatation;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn fc_examples() {
        let f = DiskMap::new(c(0.5, 0.0)).unwrap();
        assert!((f.eval(c(2.0, 0.0)) - c(2.25, 0.0)).norm() < 1e-15);
        // both branches agree on the circle
        let i = c(0.0, 1.0);
        assert!((i + 0.5 * i.conj() - c(0.0, 0.5)).norm() < 1e-15);
        assert!((i + 0.5 / i - c(0.0, 0.5)).norm() < 1e-15);
        assert!((f.eval(i) - c(0.0, 0.5)).norm() < 1e-15);
        assert!((f.inverse(c(2.25, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
        let id = DiskMap::identity();
        assert_eq!(id.eval(c(0.3, 7.0)), c(0.3, 7.0));
        assert_eq!(id.inverse(c(0.3, 7.0)).unwrap(), c(0.3, 7.0));
    }

    #[test]
    fn fc_rejects_closed_disk_boundary() {
        assert!(DiskMap::new(c(0.6, 0.8)).is_err());
    }

    #[test]
    fn lambda_examples() {
        let s = sector_invariants(c(0.0, 0.0), 1.234).unwrap();
        assert!((s.r - 1.0).abs() < 1e-15);
        assert!((s.theta1 - 1.234).abs() < 1e-15);
        assert!((s.lambda - c(1.0, 0.0)).norm() < 1e-15);

        let s = sector_invariants(c(0.3, 0.2), PI).unwrap();
        assert!((s.lambda - c(1.0, 0.0)).norm() < 1e-12);

        // frozen from 40-digit arithmetic
        let s = sector_invariants(c(0.5, 0.0), FRAC_PI_2).unwrap();
        assert!((s.r - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.theta1 - FRAC_PI_2).abs() < 1e-15);
        assert!((s.lambda - c(0.970_334_568_354_465_1, -0.169_662_588_129_554_9)).norm() < 1e-13);
    }

    #[test]
    fn allowability_predicates() {
        assert!(is_allowable_sector(c(0.0, 0.0), PI / 3.0, 1e-12).unwrap());
        assert!(is_allowable_sector(c(0.3, 0.2), PI, 1e-12).unwrap());
        assert!(!is_allowable_sector(c(0.5, 0.0), FRAC_PI_2, 1e-3).unwrap());

        for beta in [0.0, 0.4, 2.0] {
            assert!(allowable_for_corner(c(0.7, -0.1), 1.0, beta, 1e-12).unwrap());
        }
        let tol = 1e-6;
        assert_eq!(
            allowable_for_corner(c(0.5, 0.0), 0.5, PI / 4.0, tol).unwrap(),
            is_allowable_sector(c(0.0, -0.5), FRAC_PI_2, tol).unwrap()
        );
        assert!(allowable_for_corner(c(0.1, 0.0), 2.0, 0.0, tol).is_err());
        assert!(allowable_for_corner(c(0.1, 0.0), 0.0, 0.0, tol).is_err());
    }

    #[test]
    fn corner_rotation_matches_sector_lambda() {
        let rotated = c(0.5, 0.0) * Complex::from_polar(1.0, -FRAC_PI_2);
        assert!((rotated - c(0.0, -0.5)).norm() < 1e-15);
        // Re λ(−0.5i, π/2) from 40-digit arithmetic
        assert!((lambda(c(0.0, -0.5), FRAC_PI_2).unwrap().re - 0.871_396_196_860_498_5).abs() < 1e-13);
    }

    #[test]
    fn compose_examples() {
        let m = c(0.3, -0.4);
        assert_eq!(compose_dilatation(m, m, 1.1), c(0.0, 0.0));
        assert!((compose_dilatation(m, c(0.0, 0.0), 0.0) - m).norm() < 1e-15);
        assert!((compose_dilatation(c(0.5, 0.0), c(0.2, 0.0), 0.0) - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fangle_examples() {
        let id = SectorMap::new(c(0.0, 0.0), 2.0).unwrap();
        for z in [c(0.3, 0.4), c(-2.0, 0.1), c(0.5, -0.5)] {
            assert!((id.eval(z) - z).norm() < 1e-14);
        }
        let s = SectorMap::new(c(0.5, 0.0), FRAC_PI_2).unwrap();
        assert!((s.eval(c(1.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.eval(c(0.0, 0.0)), c(0.0, 0.0));
        for r in [0.5, 1.0, 2.0] {
            let above = s.eval(Complex::from_polar(r, 1e-9));
            let below = s.eval(Complex::from_polar(r, TAU - 1e-9));
            assert!((above - below).norm() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn fangle_sewn_when_theta1_exceeds_theta0() {
        // θ₁ > θ₀ here, so the lift of arg f₁ passes 2π before the cut
        let s = SectorMap::new(c(0.0, -0.5), FRAC_PI_2).unwrap();
        assert!(s.theta1 > s.theta0);
        for r in [0.1, 1.0, 3.0] {
            let above = s.eval(Complex::from_polar(r, 1e-10));
            let below = s.eval(Complex::from_polar(r, TAU - 1e-10));
            assert!((above - below).norm() < 1e-7);
        }
        // continuity across the sector edge
        let e = Complex::from_polar(0.7, FRAC_PI_2);
        let inside = s.eval(e * Complex::from_polar(1.0, -1e-10));
        assert!((inside - s.eval(e)).norm() < 1e-7);
    }

    #[test]
    fn fangle_dilatation_inside_and_outside_sector() {
        let cc = c(0.3, 0.2);
        let s = SectorMap::new(cc, 2.0).unwrap();
        let inside = Complex::from_polar(0.8, 1.0);
        let outside = Complex::from_polar(0.8, 4.0);
        assert!((fd_dilatation(&s, inside, 1e-5).unwrap() - cc).norm() < 1e-6);
        assert!(fd_dilatation(&s, outside, 1e-5).unwrap().norm() < 1e-6);
    }

    #[test]
    fn fangle_log_modulus_is_affine_in_log_radius() {
        let s = SectorMap::new(c(0.5, 0.0), FRAC_PI_2).unwrap();
        for theta in [0.3, 1.0, 2.5, 5.0] {
            let base = s.eval(Complex::from_polar(1.0, theta)).norm().ln();
            for r in [1e-6, 1e-3, 0.5, 7.0] {
                let lhs = s.eval(Complex::from_polar(r, theta)).norm().ln() - s.lambda.re * r.ln();
                assert!((lhs - base).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn locus_contains_origin_and_only_allowable_points() {
        let locus = allowable_locus(FRAC_PI_2, 90).unwrap();
        assert!(!locus.whole_disk);
        assert_eq!(locus.points[0], [0.0, 0.0]);
        assert!(locus.points.len() > 1);
        for p in &locus.points {
            let cc = c(p[0], p[1]);
            assert!(cc.norm() < 1.0);
            assert!(is_allowable_sector(cc, FRAC_PI_2, 1e-9).unwrap());
        }
        let half = allowable_locus(PI, 10).unwrap();
        assert!(half.whole_disk);
        assert!(allowable_locus(0.0, 10).is_err());
        assert!(allowable_locus(TAU, 10).is_err());
    }
}

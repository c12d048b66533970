use std::f64::consts::TAU;

use proptest::prelude::*;

use qcmap::closed_maps::{DiskMap, SectorMap};
use qcmap::map::{Compose, Identity, PlanarMap, Similarity};
use qcmap::modulus::{bounding_annuli, certify_bilipschitz, decompose_modulus_gap, AnnulusSpec, CertifyConfig};
use qcmap::{Complex, DilatationField};

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn annulus() -> impl Strategy<Value = AnnulusSpec> {
    (-2.0..2.0f64, -2.0..2.0f64, -3.0..0.5f64, 0.05..6.0f64)
        .prop_map(|(x, y, e, m)| AnnulusSpec::new(c(x, y), 10f64.powf(e), 10f64.powf(e) * m.exp()).unwrap())
}

fn gap(f: &(impl PlanarMap + ?Sized), a: &AnnulusSpec) -> (f64, f64) {
    let ba = bounding_annuli(f, a, 1024).unwrap();
    (ba.modulus_e() - a.modulus(), ba.modulus_d() - a.modulus())
}

#[test]
fn conformal_outside_support_has_vanishing_gap() {
    let fc = DiskMap::new(c(0.5, 0.0)).unwrap();
    // the center must be fixed too: f(z₀) − z₀ would otherwise show up as a
    // translation of size |c| against the image circles
    let cfg = CertifyConfig { r_min_factor: 40.0, r_max_factor: 4000.0, ..Default::default() };
    let centers = [c(0.0, 0.0)];
    let rep = certify_bilipschitz(&fc, &fc.field(), &centers, 10, 1e-3, &cfg).unwrap();
    assert!(rep.sup_gap < 1e-3, "sup gap {}", rep.sup_gap);
    assert!(rep.skipped.is_empty());
}

#[test]
fn more_circle_samples_change_extremes_by_at_most_the_arc_error() {
    let f = SectorMap::new(c(0.5, 0.0), 2.0).unwrap();
    let a = AnnulusSpec::new(c(0.2, 0.1), 0.3, 1.7).unwrap();
    let coarse = bounding_annuli(&f, &a, 256).unwrap();
    let fine = bounding_annuli(&f, &a, 1024).unwrap();
    // the map is Lipschitz with a modest constant on this annulus
    let lip = 4.0;
    for (x, y, r) in [
        (coarse.rho1, fine.rho1, a.r1),
        (coarse.big_r1, fine.big_r1, a.r1),
        (coarse.rho2, fine.rho2, a.r2),
        (coarse.big_r2, fine.big_r2, a.r2),
    ] {
        assert!((x - y).abs() <= lip * TAU * r / 256.0);
    }
    // refining can only widen the sampled range
    assert!(fine.rho1 <= coarse.rho1 && fine.big_r2 >= coarse.big_r2);
}

#[test]
fn nothing_certified_when_every_annulus_overlaps() {
    let squash = |z: Complex| c(z.re * 50.0, z.im);
    let cfg = CertifyConfig { r_min_factor: 0.1, r_max_factor: 0.8, ..Default::default() };
    let err = certify_bilipschitz(&squash, &DilatationField::zero(), &[c(0.0, 0.0), c(1.0, 0.0)], 3, 1.0, &cfg);
    assert!(matches!(err, Err(qcmap::Error::NothingCertified)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_sandwich_contains_the_modulus(a in annulus()) {
        let (lo, hi) = gap(&Identity, &a);
        prop_assert!(lo <= 1e-12 && hi >= -1e-12);
        prop_assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);
    }

    #[test]
    fn separated_sandwiches_are_ordered(a in annulus(), k in 0.0..0.9f64, t in 0.0..TAU) {
        let fc = DiskMap::new(Complex::from_polar(k, t)).unwrap();
        let ba = bounding_annuli(&fc, &a, 512).unwrap();
        prop_assert!(ba.modulus_e() <= ba.modulus_d());
        let cap = 2.0 * ((1.0 + k) / (1.0 - k)).ln();
        prop_assert!(ba.modulus_d() - ba.modulus_e() <= cap + 1e-9);
    }

    #[test]
    fn gaps_are_invariant_under_similarities(
        a in annulus(),
        s in 0.1..10.0f64, p in 0.0..TAU, k in 0..1024usize, bx in -3.0..3.0f64, by in -3.0..3.0f64,
    ) {
        let fc = DiskMap::new(c(0.4, -0.3)).unwrap();
        let sim = Similarity { scale: Complex::from_polar(s, p), shift: c(bx, by) };
        // post-composition: same annulus, similar image
        let post = Compose { outer: sim, inner: fc };
        let (l0, h0) = gap(&fc, &a);
        let (l1, h1) = gap(&post, &a);
        prop_assert!((l0 - l1).abs() < 1e-10 && (h0 - h1).abs() < 1e-10);
        // pre-composition: the map z ↦ f(sim⁻¹ z) on the moved annulus; the
        // rotation must keep the circle samples on the same angles
        let sim = Similarity { scale: Complex::from_polar(s, TAU * k as f64 / 1024.0), shift: c(bx, by) };
        let inv = Similarity { scale: 1.0 / sim.scale, shift: -sim.shift / sim.scale };
        let pre = Compose { outer: fc, inner: inv };
        let moved = AnnulusSpec::new(sim.eval(a.center), a.r1 * s, a.r2 * s).unwrap();
        let (l2, h2) = gap(&pre, &moved);
        prop_assert!((l0 - l2).abs() < 1e-9 && (h0 - h2).abs() < 1e-9);
    }

    #[test]
    fn decomposition_bounds_the_gap(a in annulus(), k in 0.05..0.6f64) {
        let fc = DiskMap::new(c(k, 0.0)).unwrap();
        let f = SectorMap::new(c(k, 0.0), 2.0).unwrap();
        if let Ok(d) = decompose_modulus_gap(&f, &fc, &a, 512) {
            prop_assert!(d.gap <= d.t1 + d.t2 + d.t3 + 1e-12);
        }
    }
}

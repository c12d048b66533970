//! Annulus moduli and the modulus-gap certifier.
//!
//! The image of a round annulus `A = A(z₀, r₁, r₂)` is not round, so its
//! modulus is never computed directly. Instead the extreme image radii on
//! each boundary circle give round annuli around `f(z₀)`:
//!
//! ```text
//! ρ₁ = min_{|z−z₀|=r₁} |f(z) − f(z₀)|      R₁ = max over the same circle
//! ρ₂ = min_{|z−z₀|=r₂} |f(z) − f(z₀)|      R₂ = max over the same circle
//! B = A(ρ₁, ρ₂)   C = A(R₁, R₂)   D = A(ρ₁, R₂)   E = A(R₁, ρ₂)
//! ```
//!
//! When `R₁ < ρ₂`, `E ⊂ f(A) ⊂ D`, so `M(E) ≤ M(f(A)) ≤ M(D)` by
//! monotonicity. The certifier bounds `|M(f(A)) − M(A)|` over a family of
//! annuli with this sandwich and compares the supremum against `N`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_maps::DiskMap;
use crate::field::DilatationField;
use crate::map::PlanarMap;
use crate::{complex_pair, Complex, Error, Result};

/// Default number of equispaced samples per boundary circle.
pub const DEFAULT_CIRCLE_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    #[serde(with = "complex_pair")]
    pub center: Complex,
    pub r1: f64,
    pub r2: f64,
}

impl AnnulusSpec {
    pub fn new(center: Complex, r1: f64, r2: f64) -> Result<Self> {
        if !(crate::is_finite(center) && r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(Error::invalid(format!("annulus radii must satisfy 0 < r1 < r2 < ∞, got {r1}, {r2}")));
        }
        Ok(AnnulusSpec { center, r1, r2 })
    }

    /// `log(r₂/r₁)`.
    pub fn modulus(&self) -> f64 {
        (self.r2 / self.r1).ln()
    }
}

/// `M(A) = log(r₂/r₁)`.
pub fn modulus(a: &AnnulusSpec) -> f64 {
    a.modulus()
}

/// Extreme image radii of the two boundary circles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingAnnuli {
    pub rho1: f64,
    pub rho2: f64,
    #[serde(rename = "R1")]
    pub big_r1: f64,
    #[serde(rename = "R2")]
    pub big_r2: f64,
    #[serde(with = "complex_pair")]
    pub image_center: Complex,
    /// `R₁ < ρ₂`: the inner image circle lies strictly inside the outer one.
    pub separated: bool,
}

impl BoundingAnnuli {
    fn annulus(&self, r1: f64, r2: f64) -> Result<AnnulusSpec> {
        AnnulusSpec::new(self.image_center, r1, r2)
    }

    pub fn b(&self) -> Result<AnnulusSpec> {
        self.annulus(self.rho1, self.rho2)
    }

    pub fn c(&self) -> Result<AnnulusSpec> {
        self.annulus(self.big_r1, self.big_r2)
    }

    pub fn d(&self) -> Result<AnnulusSpec> {
        self.annulus(self.rho1, self.big_r2)
    }

    pub fn e(&self) -> Result<AnnulusSpec> {
        if !self.separated {
            return Err(self.not_separated());
        }
        self.annulus(self.big_r1, self.rho2)
    }

    /// `M(D) = log(R₂/ρ₁)`.
    pub fn modulus_d(&self) -> f64 {
        (self.big_r2 / self.rho1).ln()
    }

    /// `M(E) = log(ρ₂/R₁)`; negative when not separated.
    pub fn modulus_e(&self) -> f64 {
        (self.rho2 / self.big_r1).ln()
    }

    fn not_separated(&self) -> Error {
        Error::NotSeparated { r1_max: self.big_r1, rho2: self.rho2 }
    }
}

fn circle_extremes<M: PlanarMap + ?Sized>(f: &M, center: Complex, image_center: Complex, r: f64, n: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 0..n {
        let z = center + Complex::from_polar(r, TAU * k as f64 / n as f64);
        let d = (f.eval(z) - image_center).norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Sample both boundary circles of `a` under `f` and build the bounding
/// annuli. Separation is reported in the result rather than as an error.
pub fn bounding_annuli<M: PlanarMap + ?Sized>(f: &M, a: &AnnulusSpec, circle_samples: usize) -> Result<BoundingAnnuli> {
    if circle_samples < 64 {
        return Err(Error::invalid(format!("need at least 64 circle samples, got {circle_samples}")));
    }
    let image_center = f.eval(a.center);
    let (rho1, big_r1) = circle_extremes(f, a.center, image_center, a.r1, circle_samples);
    let (rho2, big_r2) = circle_extremes(f, a.center, image_center, a.r2, circle_samples);
    if !(rho1 > 0.0 && rho1.is_finite() && big_r2.is_finite()) {
        return Err(Error::invalid("map collapses a boundary circle onto the image center"));
    }
    Ok(BoundingAnnuli { rho1, rho2, big_r1, big_r2, image_center, separated: big_r1 < rho2 })
}

/// Quasisymmetry control function `η(t) = scale · max(t^K, t^{1/K})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasisymmetryBound {
    pub k: f64,
    pub scale: f64,
}

impl QuasisymmetryBound {
    pub fn new(k: f64, scale: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::invalid(format!("distortion K = {k} must be >= 1")));
        }
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("η(1) = {scale} must be >= 1")));
        }
        Ok(QuasisymmetryBound { k, scale })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.scale * t.powf(self.k).max(t.powf(1.0 / self.k))
    }

    pub fn eta_at_one(&self) -> f64 {
        self.scale
    }

    /// `C_K = 2 log η(1)`, the bound on `M(D) − M(E)`.
    pub fn ck(&self) -> f64 {
        2.0 * self.scale.ln()
    }
}

/// Conservative global bound `η_K(t) = 16^K · max(t^K, t^{1/K})`.
pub fn default_eta(k: f64) -> Result<QuasisymmetryBound> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::invalid(format!("distortion K = {k} must be >= 1")));
    }
    QuasisymmetryBound::new(k, 16f64.powf(k))
}

/// Distortion `K = (1 + k)/(1 − k)` for `k = ‖μ‖∞`.
pub fn distortion_of(field: &DilatationField) -> f64 {
    let k = field.sup_norm();
    (1.0 + k) / (1.0 - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBounds {
    /// `M(E)`, a lower bound for `M(f(A))`.
    pub lower: f64,
    /// `M(D)`, an upper bound for `M(f(A))`.
    pub upper: f64,
    /// `M(D) − M(E)`.
    pub sandwich_width: f64,
    pub ck: f64,
    pub within_ck: bool,
}

/// Bounds on `M(f(A))` from the sandwich, and the width check against `C_K`.
pub fn modulus_gap_bounds(ba: &BoundingAnnuli, qs: &QuasisymmetryBound, a: &AnnulusSpec) -> Result<GapBounds> {
    if !ba.separated {
        return Err(ba.not_separated());
    }
    debug_assert!(a.modulus() > 0.0);
    let lower = ba.modulus_e();
    let upper = ba.modulus_d();
    let width = upper - lower;
    Ok(GapBounds { lower, upper, sandwich_width: width, ck: qs.ck(), within_ck: width <= qs.ck() })
}

/// Worst case of `|M(f(A)) − M(A)|` over the sandwich interval.
fn worst_gap(lower: f64, upper: f64, m: f64) -> f64 {
    (upper - m).abs().max((lower - m).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub circle_samples: usize,
    /// Smallest radius as a multiple of `diam(testSet)`.
    pub r_min_factor: f64,
    /// Largest radius as a multiple of `diam(testSet)`.
    pub r_max_factor: f64,
    /// Random pairs for the Lipschitz-ratio diagnostic, on top of all pairs
    /// of test points.
    pub lipschitz_pairs: usize,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            circle_samples: DEFAULT_CIRCLE_SAMPLES,
            r_min_factor: 1e-4,
            r_max_factor: 4.0,
            lipschitz_pairs: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGap {
    pub annulus: AnnulusSpec,
    pub modulus: f64,
    /// `M(E)`.
    pub image_lower: f64,
    /// `M(D)`.
    pub image_upper: f64,
    pub gap: f64,
    pub within_ck: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkippedAnnulus {
    pub annulus: AnnulusSpec,
    #[serde(rename = "R1")]
    pub big_r1: f64,
    pub rho2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub annuli_tested: usize,
    pub gaps: Vec<AnnulusGap>,
    pub skipped: Vec<SkippedAnnulus>,
    pub sup_gap: f64,
    pub lipschitz: LipschitzStats,
    /// Distortion `K` derived from `‖μ‖∞`.
    pub distortion: f64,
    pub ck: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl CertificateReport {
    /// Gaps of the annuli centered at `center`, as `(M(A), gap)` pairs.
    pub fn gaps_at(&self, center: Complex) -> Vec<(f64, f64)> {
        self.gaps
            .iter()
            .filter(|g| (g.annulus.center - center).norm() <= 1e-12 * (1.0 + center.norm()))
            .map(|g| (g.modulus, g.gap))
            .collect()
    }
}

fn diameter(points: &[Complex]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Annuli around one center: radii on the grid `r_min·e^k`, all pairs of
/// grid radii ordered by modulus then inner radius, thinned evenly to
/// `count`.
pub fn annulus_family(center: Complex, r_min: f64, r_max: f64, count: usize) -> Vec<AnnulusSpec> {
    let steps = (r_max / r_min).ln().floor() as usize;
    let radii: Vec<f64> = (0..=steps).map(|k| r_min * (k as f64).exp()).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..radii.len() {
        for j in i + 1..radii.len() {
            pairs.push((i, j));
        }
    }
    pairs.sort_by_key(|&(i, j)| (j - i, i));
    let chosen: Vec<(usize, usize)> = if count == 0 {
        Vec::new()
    } else if pairs.len() <= count {
        pairs
    } else if count == 1 {
        vec![pairs[pairs.len() - 1]]
    } else {
        (0..count)
            .map(|k| pairs[((k * (pairs.len() - 1)) as f64 / (count - 1) as f64).round() as usize])
            .collect()
    };
    chosen
        .into_iter()
        .map(|(i, j)| AnnulusSpec { center, r1: radii[i], r2: radii[j] })
        .collect()
}

/// Certify the modulus-gap criterion `|M(f(A)) − M(A)| ≤ N` over
/// log-spaced annuli centered at the test points.
pub fn certify_bilipschitz<M: PlanarMap + ?Sized>(
    f: &M,
    mu: &DilatationField,
    test_set: &[Complex],
    annuli_per_center: usize,
    bound: f64,
    cfg: &CertifyConfig,
) -> Result<CertificateReport> {
    if test_set.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    if !(bound >= 0.0) {
        return Err(Error::invalid(format!("bound N = {bound} must be non-negative")));
    }
    if !(cfg.r_min_factor > 0.0 && cfg.r_min_factor < cfg.r_max_factor) {
        return Err(Error::invalid("radius range factors must satisfy 0 < min < max"));
    }
    let distortion = distortion_of(mu);
    let qs = default_eta(distortion)?;
    let mut diam = diameter(test_set);
    if diam == 0.0 {
        diam = 1.0;
    }
    let tasks: Vec<AnnulusSpec> = test_set
        .iter()
        .flat_map(|&c| annulus_family(c, cfg.r_min_factor * diam, cfg.r_max_factor * diam, annuli_per_center))
        .collect();
    let outcomes: Vec<Result<std::result::Result<AnnulusGap, SkippedAnnulus>>> = tasks
        .par_iter()
        .map(|a| {
            let ba = bounding_annuli(f, a, cfg.circle_samples)?;
            if !ba.separated {
                return Ok(Err(SkippedAnnulus { annulus: *a, big_r1: ba.big_r1, rho2: ba.rho2 }));
            }
            let gb = modulus_gap_bounds(&ba, &qs, a)?;
            let m = a.modulus();
            Ok(Ok(AnnulusGap {
                annulus: *a,
                modulus: m,
                image_lower: gb.lower,
                image_upper: gb.upper,
                gap: worst_gap(gb.lower, gb.upper, m),
                within_ck: gb.within_ck,
            }))
        })
        .collect();
    let mut gaps = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o? {
            Ok(g) => gaps.push(g),
            Err(s) => skipped.push(s),
        }
    }
    if gaps.is_empty() {
        return Err(Error::NothingCertified);
    }
    let sup_gap = gaps.iter().map(|g| g.gap).fold(0.0, f64::max);
    let lipschitz = lipschitz_ratios(f, test_set, diam, cfg);
    Ok(CertificateReport {
        annuli_tested: gaps.len(),
        gaps,
        skipped,
        sup_gap,
        lipschitz,
        distortion,
        ck: qs.ck(),
        bound,
        verdict: if sup_gap <= bound { Verdict::Pass } else { Verdict::Fail },
    })
}

/// `|f(x) − f(y)|/|x − y|` over all pairs of test points and over random
/// pairs `x` near a test point, `y = x + r e^{iφ}` with `r` log-uniform in
/// `[r_min, diam]`.
fn lipschitz_ratios<M: PlanarMap + ?Sized>(f: &M, test_set: &[Complex], diam: f64, cfg: &CertifyConfig) -> LipschitzStats {
    let mut pairs = Vec::new();
    for (i, a) in test_set.iter().enumerate() {
        for b in &test_set[i + 1..] {
            if a != b {
                pairs.push((*a, *b));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r_lo = cfg.r_min_factor * diam;
    for _ in 0..cfg.lipschitz_pairs {
        let base = test_set[rng.random_range(0..test_set.len())];
        let x = base + Complex::from_polar(diam * 0.25 * rng.random::<f64>(), TAU * rng.random::<f64>());
        let r = r_lo * (diam / r_lo).powf(rng.random::<f64>());
        let y = x + Complex::from_polar(r, TAU * rng.random::<f64>());
        pairs.push((x, y));
    }
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| (f.eval(*x) - f.eval(*y)).norm() / (x - y).norm())
        .collect();
    LipschitzStats {
        count: ratios.len(),
        min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max: ratios.iter().copied().fold(0.0, f64::max),
    }
}

/// Terms of the triangle decomposition of the gap through `f̃ = f ∘ f_c⁻¹`
/// and the inner bounding annulus `E` of `f_c(A)`.
///
/// Every modulus estimate is the sandwich interval, and each term is the
/// largest distance between its two intervals. That makes
/// `gap ≤ t1 + t2 + t3` hold for the certifier's worst-case gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDecomposition {
    /// Between the estimates of `M(f(A))` and `M(f̃(E))`.
    pub t1: f64,
    /// Between the estimate of `M(f̃(E))` and `M(E)`.
    pub t2: f64,
    /// `|M(E) − M(A)|`.
    pub t3: f64,
    /// Worst-case `|M(f(A)) − M(A)|`, as reported by the certifier.
    pub gap: f64,
    pub e: AnnulusSpec,
}

fn interval_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1 - b.0).abs().max((b.1 - a.0).abs()).max((a.0 - b.0).abs()).max((a.1 - b.1).abs())
}

pub fn decompose_modulus_gap<M: PlanarMap + ?Sized>(
    f: &M,
    fc: &DiskMap,
    a: &AnnulusSpec,
    circle_samples: usize,
) -> Result<GapDecomposition> {
    let m_a = a.modulus();
    let fc_ba = bounding_annuli(fc, a, circle_samples)?;
    let e = fc_ba.e()?;
    let m_e = e.modulus();

    let f_ba = bounding_annuli(f, a, circle_samples)?;
    if !f_ba.separated {
        return Err(f_ba.not_separated());
    }
    let i_fa = (f_ba.modulus_e(), f_ba.modulus_d());

    let f_tilde = |w: Complex| f.eval(fc.inverse_nearest(w));
    let ft_ba = bounding_annuli(&f_tilde, &e, circle_samples)?;
    if !ft_ba.separated {
        return Err(ft_ba.not_separated());
    }
    let i_fte = (ft_ba.modulus_e(), ft_ba.modulus_d());

    Ok(GapDecomposition {
        t1: interval_distance(i_fa, i_fte),
        t2: interval_distance(i_fte, (m_e, m_e)),
        t3: (m_e - m_a).abs(),
        gap: worst_gap(i_fa.0, i_fa.1, m_a),
        e,
    })
}

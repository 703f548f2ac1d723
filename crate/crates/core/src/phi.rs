//! The scalar profile function of an (alpha,beta)-metric, with two
//! derivatives, and certification of the regularity inequality
//! phi(s) - s phi'(s) + (b^2 - s^2) phi''(s) > 0 on |s| <= b.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Guard radius around a declared singular point of phi.
const SINGULAR_EPS: f64 = 1e-12;

/// Sentinel stored when the positivity domain is unbounded.
pub const B0_INFINITE_SENTINEL: f64 = 1e12;

/// Value and first two derivatives of phi at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum PhiKind {
    Randers,
    Kropina,
    Matsumoto,
    Series { coeffs: Vec<f64>, b0: f64 },
}

/// A candidate profile function phi on (-b0, b0), together with its
/// certified metadata.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    kind: PhiKind,
    b0: f64,
    b0_finite: bool,
    injective: bool,
    /// False only for kropina: representable, never a regular metric.
    regular_candidate: bool,
}

impl PhiFunction {
    /// Randers profile phi(s) = 1 + s on (-1, 1).
    pub fn randers() -> Self {
        Self {
            kind: PhiKind::Randers,
            b0: 1.0,
            b0_finite: true,
            injective: true,
            regular_candidate: true,
        }
    }

    /// Kropina profile phi(s) = 1/s; singular at s = 0, treated per branch.
    /// Flagged non-regular permanently.
    pub fn kropina() -> Self {
        Self {
            kind: PhiKind::Kropina,
            b0: B0_INFINITE_SENTINEL,
            b0_finite: false,
            injective: true,
            regular_candidate: false,
        }
    }

    /// Matsumoto profile phi(s) = 1/(1 - s) on (-1, 1).
    pub fn matsumoto() -> Self {
        Self {
            kind: PhiKind::Matsumoto,
            b0: 1.0,
            b0_finite: true,
            injective: true,
            regular_candidate: true,
        }
    }

    /// Power series phi(s) = sum_k coeffs[k] s^k on (-b0, b0).
    /// Injectivity is certified by a 1001-point monotonicity sample.
    pub fn series(coeffs: Vec<f64>, b0: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) || !(b0 > 0.0) {
            return Err(CoreError::NonFinite);
        }
        let mut phi = Self {
            kind: PhiKind::Series { coeffs, b0 },
            b0,
            b0_finite: true,
            injective: false,
            regular_candidate: true,
        };
        phi.injective = phi.injectivity_check(1001);
        Ok(phi)
    }

    pub fn from_kind(kind: &PhiKind) -> Result<Self> {
        match kind {
            PhiKind::Randers => Ok(Self::randers()),
            PhiKind::Kropina => Ok(Self::kropina()),
            PhiKind::Matsumoto => Ok(Self::matsumoto()),
            PhiKind::Series { coeffs, b0 } => Self::series(coeffs.clone(), *b0),
        }
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PhiKind::Randers => "randers",
            PhiKind::Kropina => "kropina",
            PhiKind::Matsumoto => "matsumoto",
            PhiKind::Series { .. } => "series",
        }
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn b0_finite(&self) -> bool {
        self.b0_finite
    }

    pub fn injective(&self) -> bool {
        self.injective
    }

    /// False iff the profile can never define a regular Finsler metric
    /// (kropina's singular hyperplane).
    pub fn regular_candidate(&self) -> bool {
        self.regular_candidate
    }

    pub fn is_singular_at(&self, s: f64) -> bool {
        match self.kind {
            PhiKind::Kropina => s.abs() <= SINGULAR_EPS,
            PhiKind::Matsumoto => (s - 1.0).abs() <= SINGULAR_EPS,
            _ => false,
        }
    }

    /// phi, phi', phi'' at s. The closed forms are evaluated wherever they
    /// are defined; the domain radius b0 only bounds admissibility.
    pub fn eval(&self, s: f64) -> Result<PhiJet> {
        if self.is_singular_at(s) {
            return Err(CoreError::PhiSingular { s });
        }
        match &self.kind {
            PhiKind::Randers => Ok(PhiJet {
                value: 1.0 + s,
                d1: 1.0,
                d2: 0.0,
            }),
            PhiKind::Kropina => {
                let inv = 1.0 / s;
                Ok(PhiJet {
                    value: inv,
                    d1: -inv * inv,
                    d2: 2.0 * inv * inv * inv,
                })
            }
            PhiKind::Matsumoto => {
                let inv = 1.0 / (1.0 - s);
                Ok(PhiJet {
                    value: inv,
                    d1: inv * inv,
                    d2: 2.0 * inv * inv * inv,
                })
            }
            PhiKind::Series { coeffs, .. } => {
                // Horner for the value; term-wise analytic derivatives.
                let mut value = 0.0;
                for &c in coeffs.iter().rev() {
                    value = value * s + c;
                }
                let mut d1 = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
                    d1 = d1 * s + c * k as f64;
                }
                let mut d2 = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(2).rev() {
                    d2 = d2 * s + c * (k * (k - 1)) as f64;
                }
                Ok(PhiJet { value, d1, d2 })
            }
        }
    }

    /// Sampling radius used for certification grids.
    fn sample_radius(&self) -> f64 {
        if self.b0_finite {
            0.999 * self.b0
        } else {
            1.0
        }
    }

    /// Strict monotonicity of phi over `samples` grid points, per
    /// continuous branch.
    pub fn injectivity_check(&self, samples: usize) -> bool {
        assert!(samples >= 2);
        let r = self.sample_radius();
        let branches: Vec<(f64, f64)> = if matches!(self.kind, PhiKind::Kropina) {
            vec![(1e-3, r), (-r, -1e-3)]
        } else {
            vec![(-r, r)]
        };
        let mut increasing = true;
        let mut decreasing = true;
        for (lo, hi) in branches {
            let mut prev: Option<f64> = None;
            for k in 0..samples {
                let s = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
                let jet = match self.eval(s) {
                    Ok(j) => j,
                    Err(_) => continue,
                };
                if let Some(p) = prev {
                    if jet.value <= p {
                        increasing = false;
                    }
                    if jet.value >= p {
                        decreasing = false;
                    }
                }
                prev = Some(jet.value);
            }
        }
        increasing || decreasing
    }

    /// Max relative mismatch between analytic derivatives and central
    /// finite differences at `samples` seeded points.
    pub fn derivative_consistency(&self, samples: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let r = 0.9 * self.sample_radius();
        let mut worst: f64 = 0.0;
        let mut tried = 0;
        while tried < samples {
            let s: f64 = rng.gen_range(-r..r);
            // step scaled to the distance from declared singular points,
            // else truncation error blows up in the 1/s-type profiles
            let dist = match self.kind {
                PhiKind::Kropina => s.abs(),
                PhiKind::Matsumoto => (1.0 - s).abs(),
                _ => 1.0 + s.abs(),
            };
            if dist < 1e-3 {
                continue;
            }
            let h = 1e-5 * dist;
            let (c, p, m) = match (self.eval(s), self.eval(s + h), self.eval(s - h)) {
                (Ok(c), Ok(p), Ok(m)) => (c, p, m),
                _ => continue,
            };
            tried += 1;
            let fd1 = (p.value - m.value) / (2.0 * h);
            let fd2 = (p.d1 - m.d1) / (2.0 * h);
            worst = worst.max((fd1 - c.d1).abs() / (1.0 + c.d1.abs()));
            worst = worst.max((fd2 - c.d2).abs() / (1.0 + c.d2.abs()));
        }
        worst
    }
}

/// min over |s| <= b of phi - s phi' + (b^2 - s^2) phi'', on a 2048-point
/// grid with golden-section refinement in the bracketing cell.
///
/// A positive return certifies the regularity inequality at this b up to
/// grid resolution. A singular point of phi inside the strip is an error,
/// distinct from a negative margin.
pub fn regularity_margin(phi: &PhiFunction, b: f64) -> Result<f64> {
    if !(b >= 0.0) || b >= phi.b0() {
        return Err(CoreError::BOutOfRange { b, b0: phi.b0() });
    }
    let expr = |s: f64| -> Result<f64> {
        let jet = phi.eval(s)?;
        Ok(jet.value - s * jet.d1 + (b * b - s * s) * jet.d2)
    };
    if phi.is_singular_at(0.0) {
        // the strip always contains s = 0
        return Err(CoreError::SingularInStrip { b });
    }
    if b == 0.0 {
        return expr(0.0);
    }
    const GRID: usize = 2048;
    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    let mut values = Vec::with_capacity(GRID + 1);
    for k in 0..=GRID {
        let s = -b + 2.0 * b * k as f64 / GRID as f64;
        let v = match expr(s) {
            Ok(v) => v,
            Err(_) => return Err(CoreError::SingularInStrip { b }),
        };
        values.push(v);
        if v < best {
            best = v;
            best_idx = k;
        }
    }
    // golden-section refinement in the cell around the grid minimum
    let cell = 2.0 * b / GRID as f64;
    let mut lo = -b + cell * best_idx.saturating_sub(1) as f64;
    let mut hi = (-b + cell * (best_idx + 1) as f64).min(b);
    let inv_gold = 0.618_033_988_749_894_8;
    let mut x1 = hi - inv_gold * (hi - lo);
    let mut x2 = lo + inv_gold * (hi - lo);
    let mut f1 = expr(x1)?;
    let mut f2 = expr(x2)?;
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_gold * (hi - lo);
            f1 = expr(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_gold * (hi - lo);
            f2 = expr(x2)?;
        }
    }
    Ok(best.min(f1).min(f2))
}

/// Largest b in [0, b0) below which the regularity margin stays positive,
/// found by a 512-point outer scan plus bisection to width `tol`.
///
/// The returned value is always a certified-positive endpoint, so it
/// under-approximates the true bound by at most `tol`.
pub fn max_admissible_b(phi: &PhiFunction, tol: f64) -> Result<f64> {
    assert!(tol > 0.0);
    let b0 = phi.b0();
    const SCAN: usize = 512;
    let mut last_good: Option<f64> = None;
    let mut first_bad: Option<f64> = None;
    for k in 0..SCAN {
        let b = b0 * k as f64 / SCAN as f64;
        match regularity_margin(phi, b) {
            Ok(m) if m > 0.0 => last_good = Some(b),
            Ok(_) | Err(CoreError::SingularInStrip { .. }) => {
                first_bad = Some(b);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let Some(mut lo) = last_good else {
        return Err(CoreError::NonRegular);
    };
    let mut hi = match first_bad {
        Some(b) => b,
        // margin positive across the whole scan: the bound is b0 itself
        None => return Ok(b0 - tol.min(b0 * 0.5)),
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match regularity_margin(phi, mid) {
            Ok(m) if m > 0.0 => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn randers_jet_is_affine() {
        let phi = PhiFunction::randers();
        let jet = phi.eval(0.3).unwrap();
        assert_abs_diff_eq!(jet.value, 1.3, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn matsumoto_jet_at_0_4() {
        let phi = PhiFunction::matsumoto();
        let jet = phi.eval(0.4).unwrap();
        assert_abs_diff_eq!(jet.value, 5.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(jet.d1, 25.0 / 9.0, epsilon = 1e-13);
        assert_abs_diff_eq!(jet.d2, 250.0 / 27.0, epsilon = 1e-13);
    }

    #[test]
    fn kropina_singular_at_origin() {
        let phi = PhiFunction::kropina();
        assert!(matches!(
            phi.eval(0.0),
            Err(CoreError::PhiSingular { .. })
        ));
        assert!(!phi.regular_candidate());
    }

    #[test]
    fn randers_margin_is_one() {
        let phi = PhiFunction::randers();
        for b in [0.0, 0.2, 0.5, 0.9, 0.999] {
            assert_abs_diff_eq!(regularity_margin(&phi, b).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn matsumoto_margin_matches_analytic_worst_case() {
        // margin(b) = (1 - 3s + 2b^2)/(1-s)^3 minimized at s = b
        let phi = PhiFunction::matsumoto();
        let m = regularity_margin(&phi, 0.4).unwrap();
        assert_abs_diff_eq!(m, 0.12 / 0.216, epsilon = 1e-4);
        let neg = regularity_margin(&phi, 0.6).unwrap();
        assert_abs_diff_eq!(neg, -0.08 / 0.064, epsilon = 1e-4);
        assert!(neg < 0.0);
    }

    #[test]
    fn margin_out_of_range_rejected() {
        let phi = PhiFunction::randers();
        assert!(matches!(
            regularity_margin(&phi, 1.0),
            Err(CoreError::BOutOfRange { .. })
        ));
    }

    #[test]
    fn margin_at_b_zero_is_phi_at_zero() {
        let phi = PhiFunction::matsumoto();
        assert_abs_diff_eq!(regularity_margin(&phi, 0.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn margin_continuous_in_b() {
        for phi in [PhiFunction::randers(), PhiFunction::matsumoto()] {
            for b in [0.1, 0.3, 0.45] {
                let m0 = regularity_margin(&phi, b).unwrap();
                let m1 = regularity_margin(&phi, b + 1e-6).unwrap();
                assert!((m0 - m1).abs() <= 1e-3, "{}: {m0} vs {m1}", phi.kind_name());
            }
        }
    }

    #[test]
    fn admissible_bounds() {
        assert_abs_diff_eq!(
            max_admissible_b(&PhiFunction::randers(), 1e-6).unwrap(),
            1.0,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            max_admissible_b(&PhiFunction::matsumoto(), 1e-6).unwrap(),
            0.5,
            epsilon = 1e-4
        );
        assert!(matches!(
            max_admissible_b(&PhiFunction::kropina(), 1e-6),
            Err(CoreError::NonRegular)
        ));
    }

    #[test]
    fn injectivity_samples() {
        assert!(PhiFunction::randers().injectivity_check(1001));
        assert!(PhiFunction::matsumoto().injectivity_check(1001));
        assert!(PhiFunction::kropina().injectivity_check(1001));
        let even = PhiFunction::series(vec![1.0, 0.0, 1.0], 0.9).unwrap();
        assert!(!even.injectivity_check(1001));
        assert!(!even.injective());
    }

    #[test]
    fn derivative_consistency_of_builtins() {
        for phi in [
            PhiFunction::randers(),
            PhiFunction::kropina(),
            PhiFunction::matsumoto(),
            PhiFunction::series(vec![1.0, 0.5, 0.25, -0.125], 0.8).unwrap(),
        ] {
            let worst = phi.derivative_consistency(100, 7);
            assert!(worst <= 1e-6, "{}: {worst:.3e}", phi.kind_name());
        }
    }

    #[test]
    fn series_matches_horner_oracle() {
        let phi = PhiFunction::series(vec![2.0, -1.0, 0.5, 0.25], 1.0).unwrap();
        let s = 0.3;
        let jet = phi.eval(s).unwrap();
        let v = 2.0 - s + 0.5 * s * s + 0.25 * s * s * s;
        let d1 = -1.0 + s + 0.75 * s * s;
        let d2 = 1.0 + 1.5 * s;
        assert_abs_diff_eq!(jet.value, v, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d1, d1, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.d2, d2, epsilon = 1e-15);
    }
}

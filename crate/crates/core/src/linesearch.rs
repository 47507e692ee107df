//! Comparison-driven line minimization: bracket construction by symmetric
//! doubling, then golden-section shrinking.
//!
//! The only information source is a line comparison `cmp(u, v)` returning
//! `sign(g(u) - g(v))` for the line function `g`. For `cmp(y, z) = -1`
//! (i.e. `g(y) < g(z)`) the golden-section loop moves the right endpoint,
//! which is the branch orientation that actually contracts toward the
//! minimizer; the opposite orientation diverges on `g(z) = z^2` over
//! `[-1, 1]`.

use crate::{Error, Result};

/// `sign(g(u) - g(v))` for the line function under search.
pub type LineCmp<'a> = dyn FnMut(f64, f64) -> Result<i8> + 'a;

/// Interval `[lo, hi]` certified to contain a line minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Endpoint doublings performed during construction.
    pub expansions: u32,
    /// Comparison-oracle calls consumed.
    pub comparisons: u64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

const MAX_EXPANSIONS: u32 = 200;

/// Builds a bracket around a minimizer of a convex line function by
/// symmetric doubling from `[-eta0, eta0]`.
///
/// The interval is accepted once both endpoints compare `>=` the midpoint:
/// for a convex line that certifies the global minimizer lies inside. A
/// side whose endpoint is strictly below the midpoint doubles away from
/// zero. Lines with no minimizer (e.g. monotone) exhaust the expansion cap.
pub fn bracket_minimum(cmp: &mut LineCmp, eta0: f64) -> Result<Bracket> {
    if !(eta0 > 0.0) {
        return Err(Error::InvalidParameter("bracket_minimum: eta0 must be > 0".into()));
    }
    let mut lo = -eta0;
    let mut hi = eta0;
    let mut expansions = 0u32;
    let mut comparisons = 0u64;
    loop {
        let mid = 0.5 * (lo + hi);
        let left = cmp(lo, mid)?;
        let right = cmp(hi, mid)?;
        comparisons += 2;
        // Ties count as certified: equal values at an endpoint and the
        // midpoint of a convex line already pin a minimizer inside.
        let left_ok = left >= 0;
        let right_ok = right >= 0;
        if left_ok && right_ok {
            return Ok(Bracket {
                lo,
                hi,
                expansions,
                comparisons,
            });
        }
        if !left_ok {
            lo *= 2.0;
            expansions += 1;
        }
        if !right_ok {
            hi *= 2.0;
            expansions += 1;
        }
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BracketingFailed {
                expansions,
                reason: "line appears unbounded below (no interior minimizer found)".into(),
            });
        }
    }
}

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    /// Midpoint of the final interval.
    pub point: f64,
    /// Width of the final interval (`<= eps_hat`).
    pub width: f64,
    /// Comparison-oracle calls: exactly one per shrink.
    pub comparisons: u64,
}

/// Golden-section minimization of a unimodal line on `[a, b]` down to
/// interval width `eps_hat`, using one comparison per iteration.
///
/// Interior probes sit at `a + (1-rho)(b-a)` and `a + rho(b-a)` with
/// `rho = (sqrt(5)-1)/2`; the surviving probe is reused, so each shrink
/// multiplies the width by exactly `rho` and costs one comparison. For a
/// unimodal line the returned point is within `eps_hat` of the true
/// minimizer. Ties take the left-advance branch, which keeps a minimizer
/// inside either way.
pub fn golden_ratio_min(cmp: &mut LineCmp, a: f64, b: f64, eps_hat: f64) -> Result<GoldenResult> {
    if !(eps_hat > 0.0) {
        return Err(Error::InvalidParameter("golden_ratio_min: eps_hat must be > 0".into()));
    }
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "golden_ratio_min: need a < b, got [{a}, {b}]"
        )));
    }
    let rho = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = a;
    let mut b = b;
    let mut y = a + (1.0 - rho) * (b - a);
    let mut z = a + rho * (b - a);
    let mut comparisons = 0u64;
    while b - a > eps_hat {
        comparisons += 1;
        if cmp(y, z)? == -1 {
            b = z;
            z = y;
            y = a + (1.0 - rho) * (b - a);
        } else {
            a = y;
            y = z;
            z = a + rho * (b - a);
        }
    }
    Ok(GoldenResult {
        point: 0.5 * (a + b),
        width: b - a,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmp_of(g: impl Fn(f64) -> f64) -> impl FnMut(f64, f64) -> Result<i8> {
        move |u, v| {
            let (gu, gv) = (g(u), g(v));
            Ok(if gu > gv {
                1
            } else if gu < gv {
                -1
            } else {
                0
            })
        }
    }

    #[test]
    fn bracket_accepts_interior_minimizer_immediately() {
        let mut cmp = cmp_of(|z| (z - 0.3) * (z - 0.3));
        let br = bracket_minimum(&mut cmp, 1.0).unwrap();
        assert_eq!((br.lo, br.hi), (-1.0, 1.0));
        assert_eq!(br.expansions, 0);
    }

    #[test]
    fn bracket_doubles_toward_far_minimizer() {
        let mut cmp = cmp_of(|z| (z - 5.0) * (z - 5.0));
        let br = bracket_minimum(&mut cmp, 1.0).unwrap();
        assert_eq!((br.lo, br.hi), (-1.0, 8.0));
        assert_eq!(br.expansions, 3);
        assert!(br.lo <= 5.0 && 5.0 <= br.hi);
    }

    #[test]
    fn bracket_fails_on_monotone_line() {
        let mut cmp = cmp_of(|z| z);
        let err = bracket_minimum(&mut cmp, 1.0).unwrap_err();
        assert!(matches!(err, Error::BracketingFailed { .. }));
    }

    #[test]
    fn bracket_handles_constant_line() {
        let mut cmp = cmp_of(|_| 0.0);
        let br = bracket_minimum(&mut cmp, 1.0).unwrap();
        assert_eq!(br.expansions, 0);
    }

    #[test]
    fn golden_finds_quarter() {
        let mut cmp = cmp_of(|z| (z - 0.25) * (z - 0.25));
        let r = golden_ratio_min(&mut cmp, 0.0, 1.0, 1e-4).unwrap();
        assert!((r.point - 0.25).abs() <= 1e-4);
        assert!(r.width <= 1e-4);
    }

    #[test]
    fn golden_symmetric_quadratic() {
        let mut cmp = cmp_of(|z| z * z);
        let r = golden_ratio_min(&mut cmp, -1.0, 1.0, 1e-6).unwrap();
        assert!(r.point.abs() <= 1e-6);
    }

    #[test]
    fn golden_comparison_count_matches_shrink_rate() {
        // ceil(log((b-a)/eps) / log(phi)) for [0,1], eps = 1e-3 is 15.
        let mut cmp = cmp_of(|z| (z - 0.7) * (z - 0.7));
        let r = golden_ratio_min(&mut cmp, 0.0, 1.0, 1e-3).unwrap();
        let phi = (5.0f64.sqrt() + 1.0) / 2.0;
        let predicted = (1000.0f64.ln() / phi.ln()).ceil() as i64;
        assert_eq!(predicted, 15);
        assert!((r.comparisons as i64 - predicted).unsigned_abs() <= 1);
    }

    #[test]
    fn golden_shrinks_by_rho_each_iteration() {
        // Recover interval widths from the probe pair: z - y = (2 rho - 1) w.
        let rho = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut probes: Vec<(f64, f64)> = Vec::new();
        let g = |z: f64| (z - 0.37) * (z - 0.37);
        let mut cmp = |u: f64, v: f64| -> Result<i8> {
            probes.push((u, v));
            let (gu, gv) = (g(u), g(v));
            Ok(if gu > gv {
                1
            } else if gu < gv {
                -1
            } else {
                0
            })
        };
        golden_ratio_min(&mut cmp, 0.0, 1.0, 1e-8).unwrap();
        let widths: Vec<f64> = probes.iter().map(|(y, z)| (z - y) / (2.0 * rho - 1.0)).collect();
        for w in widths.windows(2) {
            assert!((w[1] - rho * w[0]).abs() <= 1e-12, "shrink {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn golden_value_accuracy_on_quadratic_lines() {
        // f(result) - min <= (L0_line / 2) * eps_hat^2 on quadratic lines.
        for (alpha, m) in [(1.0, 0.25), (4.0, 0.6), (0.5, 0.9)] {
            let g = move |z: f64| 0.5 * alpha * (z - m) * (z - m);
            let eps_hat = 1e-4;
            let mut cmp = cmp_of(g);
            let r = golden_ratio_min(&mut cmp, 0.0, 1.0, eps_hat).unwrap();
            assert!(g(r.point) <= 0.5 * alpha * eps_hat * eps_hat);
        }
    }

    #[test]
    fn golden_rejects_bad_inputs() {
        let mut cmp = cmp_of(|z| z * z);
        assert!(golden_ratio_min(&mut cmp, 0.0, 1.0, 0.0).is_err());
        assert!(golden_ratio_min(&mut cmp, 1.0, 0.0, 1e-3).is_err());
    }
}

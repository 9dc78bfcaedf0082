//! Scalar numerics shared by the analytic modules: binary entropy, its
//! inverse on the lower branch, and a bracketing bisection solver.

use crate::error::{Error, Result};

/// Distance from the unit interval that is silently absorbed by clamping.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// Default bisection tolerance on the bracket width.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;

/// Validates a probability, clamping excursions of at most [`BOUNDARY_GUARD`].
pub fn probability(name: &'static str, x: f64) -> Result<f64> {
    if x.is_nan() || x < -BOUNDARY_GUARD || x > 1.0 + BOUNDARY_GUARD {
        return Err(Error::Domain {
            name,
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Validates an efficiency ratio in (0, 1].
pub fn dem_ratio(name: &'static str, eta: f64) -> Result<f64> {
    if eta.is_nan() || eta <= 0.0 || eta > 1.0 + BOUNDARY_GUARD {
        return Err(Error::Domain {
            name,
            value: eta,
            domain: "(0, 1]",
        });
    }
    Ok(eta.min(1.0))
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let x = probability("entropy argument", x)?;
    Ok(entropy_unchecked(x))
}

#[inline]
pub(crate) fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let y = 1.0 - x;
    -(x * x.log2() + y * y.log2())
}

/// Returns the unique `x` in `[0, 1/2]` with `h(x) = y`.
pub fn binary_entropy_inverse(y: f64) -> Result<f64> {
    let y = probability("entropy value", y)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (lo, hi) = bisect(
        |x| entropy_unchecked(x) - y,
        Bracket::with_tol(0.0, 0.5, 1e-15)?,
    )?;
    Ok(0.5 * (lo + hi))
}

/// A search interval for [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        Self::with_tol(lo, hi, DEFAULT_TOL)
    }

    pub fn with_tol(lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain {
                name: "bracket",
                value: hi - lo,
                domain: "lo < hi, finite",
            });
        }
        if !(tol > 0.0) {
            return Err(Error::Domain {
                name: "tol",
                value: tol,
                domain: "(0, inf)",
            });
        }
        Ok(Self { lo, hi, tol })
    }
}

/// Locates a sign change of `f` inside `bracket` by plain bisection and
/// returns the midpoint of the final interval.
pub fn find_root<F>(f: F, bracket: Bracket) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = bisect(f, bracket)?;
    Ok(0.5 * (lo + hi))
}

/// Bisection returning the terminal interval. `f` has opposite (or zero)
/// signs at the two returned endpoints.
pub fn bisect<F>(f: F, bracket: Bracket) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let Bracket { mut lo, mut hi, tol } = bracket;
    let flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() || flo * fhi > 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    if flo == 0.0 {
        return Ok((lo, lo));
    }
    if fhi == 0.0 {
        return Ok((hi, hi));
    }
    let lo_negative = flo < 0.0;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval no longer representable
            return Ok((lo, hi));
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, mid));
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence("bisection"))
}

/// Evenly spaced samples `lo, lo + step, ...` up to `hi` inclusive. Values
/// are rounded to 12 decimals so that decimal grids print cleanly.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain {
            name: "grid",
            value: step,
            domain: "lo <= hi, step > 0",
        });
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Golden-section search for a minimum of `f` on `[a, b]`; returns the
/// best abscissa seen and its value.
pub fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, iterations: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_reference_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
        // mpmath, 30 digits: 0.499915958164527997
        assert_abs_diff_eq!(binary_entropy(0.11).unwrap(), 0.499915958164528, epsilon = 1e-14);
    }

    #[test]
    fn entropy_domain() {
        assert!(matches!(binary_entropy(-0.01), Err(Error::Domain { .. })));
        assert!(matches!(binary_entropy(1.5), Err(Error::Domain { .. })));
        assert!(binary_entropy(f64::NAN).is_err());
        assert_eq!(binary_entropy(1.0 + 1e-13).unwrap(), 0.0);
    }

    #[test]
    fn entropy_symmetric_and_increasing() {
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let x = i as f64 * 1e-4;
            let hx = binary_entropy(x).unwrap();
            assert_abs_diff_eq!(hx, binary_entropy(1.0 - x).unwrap(), epsilon = 1e-14);
            if x <= 0.5 {
                assert!(hx > prev, "not increasing at {x}");
                prev = hx;
            }
        }
    }

    #[test]
    fn inverse_reference_values() {
        assert_eq!(binary_entropy_inverse(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy_inverse(1.0).unwrap(), 0.5);
        // mpmath bisection: 0.110027864438359551
        assert_abs_diff_eq!(binary_entropy_inverse(0.5).unwrap(), 0.11002786443835955, epsilon = 1e-12);
        assert!(binary_entropy_inverse(1.2).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        for i in 0..=500 {
            let x = i as f64 / 1000.0;
            let y = binary_entropy(x).unwrap();
            assert_abs_diff_eq!(binary_entropy_inverse(y).unwrap(), x, epsilon = 1e-10);
        }
    }

    #[test]
    fn root_examples() {
        let b = Bracket::new(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(find_root(|x| x - 0.3, b).unwrap(), 0.3, epsilon = 1e-10);
        let half = Bracket::new(0.0, 0.5).unwrap();
        let r = find_root(|e| entropy_unchecked(e) - 0.5, half).unwrap();
        assert_abs_diff_eq!(r, binary_entropy_inverse(0.5).unwrap(), epsilon = 1e-10);
        assert!(matches!(
            find_root(|x| x * x + 1.0, b),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn bisect_keeps_sign_change() {
        let f = |x: f64| (x - 0.123_456_7).powi(3);
        let (lo, hi) = bisect(f, Bracket::new(-1.0, 2.0).unwrap()).unwrap();
        assert!(f(lo) * f(hi) <= 0.0);
        assert!(hi - lo <= DEFAULT_TOL);
    }

    #[test]
    fn bracket_validation() {
        assert!(Bracket::new(1.0, 0.0).is_err());
        assert!(Bracket::with_tol(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.7).powi(2) + 2.0, 0.0, 3.0, 80);
        assert_abs_diff_eq!(x, 0.7, epsilon = 1e-7);
        assert_abs_diff_eq!(fx, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn grid_is_clean() {
        let g = grid(0.005, 0.25, 0.005).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g[21], 0.11);
        assert_eq!(*g.last().unwrap(), 0.25);
    }
}

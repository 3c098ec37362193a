use serde::Serialize;

use crate::error::{Error, Result};

/// One point of the complementary cumulative degree distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcdfPoint {
    pub k: u64,
    /// Fraction of observations `>= k`.
    pub p: f64,
}

/// `P(K >= k)` at each distinct observed degree, ascending in `k`.
pub fn ccdf(degrees: &[u64]) -> Result<Vec<CcdfPoint>> {
    if degrees.is_empty() {
        return Err(Error::Empty("degree list"));
    }
    if degrees.contains(&0) {
        return Err(Error::invalid("ccdf expects positive degrees"));
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let k = sorted[i];
        out.push(CcdfPoint {
            k,
            p: (sorted.len() - i) as f64 / n,
        });
        while i < sorted.len() && sorted[i] == k {
            i += 1;
        }
    }
    Ok(out)
}

/// Discrete power-law fit `P(k) ~ k^-alpha` for `k >= xmin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Maximum-likelihood exponent of the discrete (zeta) distribution.
    pub alpha: f64,
    /// Closed-form approximation `1 + n / sum ln(x / (xmin - 1/2))`.
    pub alpha_approx: f64,
    pub xmin: u64,
    pub n_tail: usize,
    /// `(alpha - 1) / sqrt(n_tail)`.
    pub sigma: f64,
}

/// Hurwitz zeta `sum_{k>=0} (q + k)^-s` for `s > 1`, `q > 0`.
///
/// Direct sum of the first terms, then Euler-Maclaurin for the remainder.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const N: usize = 12;
    // B_2j / (2j)!
    const B: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    let mut sum: f64 = (0..N).map(|k| (q + k as f64).powf(-s)).sum();
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // term j: B_2j/(2j)! * s(s+1)...(s+2j-2) * a^(-s-2j+1)
    let mut rising = s;
    let mut apow = a.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * rising * apow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        apow /= a * a;
    }
    sum
}

/// Fits the tail `x >= xmin` of a positive integer sample.
pub fn fit_power_law(degrees: &[u64], xmin: u64) -> Result<PowerLawFit> {
    if xmin == 0 {
        return Err(Error::invalid("xmin must be positive"));
    }
    let tail: Vec<f64> = degrees
        .iter()
        .filter(|&&d| d >= xmin)
        .map(|&d| d as f64)
        .collect();
    let n_tail = tail.len();
    if n_tail < 2 {
        return Err(Error::degenerate(format!(
            "power-law fit needs at least 2 observations >= {xmin}, found {n_tail}"
        )));
    }
    let n = n_tail as f64;
    let x0 = xmin as f64;
    let mut sorted = tail.clone();
    sorted.sort_by(f64::total_cmp);
    let sum_ln: f64 = sorted.iter().map(|x| x.ln()).sum();
    let sum_ln_shift: f64 = sorted.iter().map(|x| (x / (x0 - 0.5)).ln()).sum();
    let alpha_approx = 1.0 + n / sum_ln_shift;
    if sorted[0] == sorted[n_tail - 1] && sorted[0] == x0 {
        return Err(Error::degenerate(
            "every tail observation equals xmin; exponent unbounded",
        ));
    }

    // negative log-likelihood, convex in alpha
    let nll = |a: f64| a * sum_ln + n * hurwitz_zeta(a, x0).ln();
    let (mut lo, mut hi) = (1.0 + 1e-6, (2.0 * alpha_approx).max(4.0));
    while nll(hi * 1.5) < nll(hi) && hi < 1e3 {
        hi *= 1.5;
    }
    hi *= 1.5;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (nll(c), nll(d));
    while hi - lo > 1e-10 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = nll(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = nll(d);
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(PowerLawFit {
        alpha,
        alpha_approx,
        xmin,
        n_tail,
        sigma: (alpha - 1.0) / n.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ccdf_fixtures() {
        let c = ccdf(&[1, 1, 2, 3]).unwrap();
        assert_eq!(
            c,
            [
                CcdfPoint { k: 1, p: 1.0 },
                CcdfPoint { k: 2, p: 0.5 },
                CcdfPoint { k: 3, p: 0.25 }
            ]
        );
        assert_eq!(ccdf(&[5, 5, 5]).unwrap(), [CcdfPoint { k: 5, p: 1.0 }]);
        assert!(ccdf(&[]).is_err());
        assert!(ccdf(&[0, 1]).is_err());
    }

    #[test]
    fn zeta_reference_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((hurwitz_zeta(2.0, 1.0) - pi2 / 6.0).abs() < 1e-13);
        assert!((hurwitz_zeta(4.0, 1.0) - pi2 * pi2 / 90.0).abs() < 1e-13);
        // zeta(2, 3) = pi^2/6 - 1 - 1/4
        assert!((hurwitz_zeta(2.0, 3.0) - (pi2 / 6.0 - 1.25)).abs() < 1e-13);
        // zeta(3) Apery
        assert!((hurwitz_zeta(3.0, 1.0) - 1.2020569031595942).abs() < 1e-13);
        // near the pole: direct partial sum + integral tail as an independent check
        let s = 1.1;
        let direct: f64 = (1..200_000).map(|k| (k as f64).powf(-s)).sum::<f64>()
            + (199_999.5f64).powf(1.0 - s) / (s - 1.0);
        assert!((hurwitz_zeta(s, 1.0) - direct).abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_tiny_tail() {
        assert!(fit_power_law(&[1, 2, 3, 10], 10).is_err());
        assert!(fit_power_law(&[3, 3, 3], 3).is_err());
        assert!(fit_power_law(&[1, 2], 0).is_err());
    }

    #[test]
    fn fit_reports_sigma() {
        let f = fit_power_law(&[1, 1, 1, 2, 2, 3, 5, 9], 1).unwrap();
        assert_eq!(f.n_tail, 8);
        assert!((f.sigma - (f.alpha - 1.0) / 8f64.sqrt()).abs() < 1e-15);
        assert!(f.alpha > 1.0);
    }

    #[test]
    fn fit_is_stationary_point_of_likelihood() {
        let xs = [2u64, 2, 2, 3, 3, 4, 5, 7, 11, 30];
        let f = fit_power_law(&xs, 2).unwrap();
        let ll = |a: f64| {
            -a * xs.iter().map(|&x| (x as f64).ln()).sum::<f64>()
                - xs.len() as f64 * hurwitz_zeta(a, 2.0).ln()
        };
        assert!(ll(f.alpha) >= ll(f.alpha + 1e-4));
        assert!(ll(f.alpha) >= ll(f.alpha - 1e-4));
    }

    proptest! {
        #[test]
        fn ccdf_is_monotone(xs in proptest::collection::vec(1u64..50, 1..100)) {
            let c = ccdf(&xs).unwrap();
            prop_assert_eq!(c[0].p, 1.0);
            prop_assert!(c.windows(2).all(|w| w[0].k < w[1].k && w[0].p > w[1].p));
        }

        #[test]
        fn fit_permutation_invariant(mut xs in proptest::collection::vec(1u64..60, 3..60)) {
            prop_assume!(xs.iter().any(|&x| x > 1));
            let a = fit_power_law(&xs, 1).unwrap();
            xs.reverse();
            let b = fit_power_law(&xs, 1).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

//! Tail probabilities for the normal, chi-square(1), the 50-50
//! chi-square(1)/chi-square(0) boundary mixture, the binomial, and the
//! Chebyshev bound.
//!
//! Every function returns a [`TailProb`] which carries the natural log of the
//! probability next to the probability itself, so that tails far below the
//! smallest normal `f64` stay usable.

use core::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Threshold above which the normal tail is evaluated through the
/// continued fraction for `erfcx` instead of `erfc`.
const NORMAL_CF_SWITCH: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProb {
    pub p: f64,
    pub log_p: f64,
}

impl TailProb {
    pub const ONE: TailProb = TailProb { p: 1.0, log_p: 0.0 };
    pub const ZERO: TailProb = TailProb {
        p: 0.0,
        log_p: f64::NEG_INFINITY,
    };

    pub fn from_log(log_p: f64) -> Self {
        let log_p = if log_p > 0.0 { 0.0 } else { log_p };
        TailProb {
            p: libm::exp(log_p),
            log_p,
        }
    }

    pub fn from_prob(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        TailProb { p, log_p: libm::log(p) }
    }

    /// `log10(p)`, handy for reporting tails that underflow.
    pub fn log10(&self) -> f64 {
        self.log_p / core::f64::consts::LN_10
    }

    fn halved(self) -> Self {
        TailProb {
            p: 0.5 * self.p,
            log_p: self.log_p - LN_2,
        }
    }

    fn doubled(self) -> Self {
        TailProb {
            p: (2.0 * self.p).min(1.0),
            log_p: (self.log_p + LN_2).min(0.0),
        }
    }
}

/// Scaled complementary error function `exp(x²)·erfc(x)` for large `x`,
/// by backward evaluation of the Laplace continued fraction.
fn erfcx_large(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=60).rev() {
        t = x + (k as f64 * 0.5) / t;
    }
    1.0 / (libm::sqrt(PI) * t)
}

/// Upper tail `P(Z ≥ z)` of the standard normal.
pub fn normal_sf(z: f64) -> TailProb {
    if z.is_nan() {
        return TailProb { p: f64::NAN, log_p: f64::NAN };
    }
    if z == f64::INFINITY {
        return TailProb::ZERO;
    }
    if z < 0.0 {
        let q = normal_sf(-z).p;
        return TailProb {
            p: 1.0 - q,
            log_p: libm::log1p(-q),
        };
    }
    let x = z * core::f64::consts::FRAC_1_SQRT_2;
    if z < NORMAL_CF_SWITCH {
        TailProb::from_prob(0.5 * libm::erfc(x))
    } else {
        TailProb::from_log(-0.5 * z * z + libm::log(erfcx_large(x)) - LN_2)
    }
}

/// Upper tail of chi-square with one degree of freedom: `2·P(Z ≥ √w)`.
pub fn chisq1_sf(w: f64) -> Result<TailProb> {
    if !(w >= 0.0) {
        return Err(Error::Domain {
            what: "chi-square statistic",
            value: w,
        });
    }
    Ok(normal_sf(libm::sqrt(w)).doubled())
}

/// Upper tail of the 50-50 mixture of chi-square(1) and a point mass at 0,
/// the null distribution of the Wilks statistic on a single boundary facet.
pub fn wilks_mixture_sf(w: f64) -> Result<TailProb> {
    let tail = chisq1_sf(w)?;
    if w == 0.0 {
        return Ok(TailProb::ONE);
    }
    Ok(tail.halved())
}

/// Chebyshev's conservative bound `min(1, 1/z²)`.
pub fn chebyshev_p(z: f64) -> Result<TailProb> {
    if !(z > 0.0) {
        return Err(Error::Domain { what: "z for Chebyshev bound", value: z });
    }
    if z <= 1.0 {
        return Ok(TailProb::ONE);
    }
    Ok(TailProb {
        p: 1.0 / (z * z),
        log_p: -2.0 * libm::log(z),
    })
}

/// `log(n!) - log(sqrt(2πn) (n/e)^n)`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|k| libm::log(k as f64)).sum();
        return ln_fact - (nf + 0.5) * libm::log(nf) + nf - LN_SQRT_2PI;
    }
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x log(x/m) + m - x`, evaluated by series near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if libm::fabs(x - m) < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * libm::log(x / m) + m - x
    }
}

/// Log of the binomial probability mass, via the saddle-point expansion
/// so that accuracy is relative rather than absolute for large `n`.
pub(crate) fn binom_log_pmf(x: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if x == 0 {
        return n as f64 * libm::log1p(-p);
    }
    if x == n {
        return n as f64 * libm::log(p);
    }
    let (xf, nf) = (x as f64, n as f64);
    let yf = (n - x) as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(yf, nf * q);
    let lf = libm::log(2.0 * PI) + libm::log(xf) + libm::log1p(-xf / nf);
    lc - 0.5 * lf
}

/// `log Σ exp(terms)` with the terms visited from smallest to largest.
/// `terms` must be ordered largest first.
fn log_sum_descending(terms: &[f64]) -> f64 {
    let top = terms[0];
    let s: f64 = terms.iter().rev().map(|&l| libm::exp(l - top)).sum();
    top + libm::log(s)
}

/// Upper binomial tail `P(X ≥ k)` for `X ~ Bin(n, p)`.
pub fn binom_sf(n: u64, p: f64, k: u64) -> Result<TailProb> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { what: "binomial success probability", value: p });
    }
    if k > n + 1 {
        return Err(Error::Domain { what: "binomial threshold", value: k as f64 });
    }
    if k == 0 {
        return Ok(TailProb::ONE);
    }
    if k == n + 1 {
        return Ok(TailProb::ZERO);
    }
    // Terms far below the leading one (relative 1e-22) cannot matter.
    const CUTOFF: f64 = 50.0;
    let mode = libm::floor(((n + 1) as f64) * p) as u64;
    let mut terms = alloc::vec::Vec::new();
    if k > mode {
        // terms decrease from k upward
        for j in k..=n {
            let l = binom_log_pmf(j, n, p);
            if !terms.is_empty() && l < terms[0] - CUTOFF {
                break;
            }
            terms.push(l);
        }
        Ok(TailProb::from_log(log_sum_descending(&terms)))
    } else {
        // complement: P(X ≤ k-1), terms decrease from k-1 downward
        for j in (0..k).rev() {
            let l = binom_log_pmf(j, n, p);
            if !terms.is_empty() && l < terms[0] - CUTOFF {
                break;
            }
            terms.push(l);
        }
        let lower = libm::exp(log_sum_descending(&terms));
        Ok(TailProb {
            p: 1.0 - lower,
            log_p: libm::log1p(-lower),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn normal_center_and_quoted_tails() {
        assert_eq!(normal_sf(0.0).p, 0.5);
        assert!(rel(normal_sf(2.07284).p, 0.0190936) < 1e-5);
        // full-precision NIST naive z → quoted p
        assert!(rel(normal_sf(5.879064).p, 2.062969e-09) < 1e-5);
    }

    #[test]
    fn normal_matches_high_precision_values() {
        // mpmath, 40 digits
        let cases = [
            (1.0, 0.15865525393145705),
            (-3.0, 0.9986501019683699),
            (8.0, 6.220960574271784e-16),
            (20.0, 2.7536241186062337e-89),
            (24.9, 3.7200792751087554e-137),
            (25.1, 2.4866601882523463e-139),
        ];
        for (z, want) in cases {
            let got = normal_sf(z);
            assert!(rel(got.p, want) < 1e-12, "z={z}: {} vs {want}", got.p);
        }
        // log domain far out, where p underflows
        let l = normal_sf(38.0).log_p;
        assert!(rel(l, -726.5572160188201) < 1e-12, "{l}");
        let l = normal_sf(100.0).log_p;
        assert!(rel(l, -5005.524208694205) < 1e-12, "{l}");
    }

    #[test]
    fn normal_continuous_across_switch() {
        let below = normal_sf(NORMAL_CF_SWITCH - 1e-9).log_p;
        let above = normal_sf(NORMAL_CF_SWITCH).log_p;
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn chisq1_values() {
        assert_eq!(chisq1_sf(0.0).unwrap().p, 1.0);
        assert!(rel(chisq1_sf(1.0).unwrap().p, 0.31731050786291415) < 1e-12);
        assert!(matches!(chisq1_sf(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn wilks_mixture_values() {
        assert_eq!(wilks_mixture_sf(0.0).unwrap(), TailProb::ONE);
        let w = 57.19689;
        let m = wilks_mixture_sf(w).unwrap();
        assert!(rel(m.p, 0.5 * chisq1_sf(w).unwrap().p) < 1e-15);
        assert!(rel(m.p, 1.971474e-14) < 1e-5);
        assert!(wilks_mixture_sf(-0.1).is_err());
    }

    #[test]
    fn chebyshev_values() {
        let p = chebyshev_p(17.5).unwrap().p;
        assert_eq!(p, 1.0 / 306.25);
        assert_eq!(chebyshev_p(1.0).unwrap().p, 1.0);
        assert!((chebyshev_p(10.0).unwrap().p - 0.01).abs() < 1e-17);
        assert!(chebyshev_p(0.0).is_err());
        assert!(chebyshev_p(-2.0).is_err());
    }

    #[test]
    fn binom_small_exact() {
        let t = binom_sf(10, 0.5, 8).unwrap();
        assert!(rel(t.p, 56.0 / 1024.0) < 1e-13);
        assert_eq!(binom_sf(10, 0.3, 0).unwrap(), TailProb::ONE);
        assert_eq!(binom_sf(10, 0.3, 11).unwrap().p, 0.0);
        assert!(binom_sf(10, 1.0, 3).is_err());
        assert!(binom_sf(10, 0.0, 3).is_err());
        assert!(binom_sf(10, 0.5, 12).is_err());
    }

    #[test]
    fn binom_bell_game_tail() {
        // exact rational value of P(X >= 1357), X ~ Bin(1649, 3/4)
        let t = binom_sf(1649, 0.75, 1357).unwrap();
        assert!(rel(t.p, 8.042942862791471e-13) < 1e-10, "{}", t.p);
    }

    #[test]
    fn stirlerr_switch_is_smooth() {
        // table/series hand-off
        for n in [14_u64, 15, 16, 17, 35, 36, 80, 81, 500, 501] {
            let direct: f64 = (2..=n).map(|k| (k as f64).ln()).sum::<f64>()
                - (n as f64 + 0.5) * (n as f64).ln()
                + n as f64
                - LN_SQRT_2PI;
            assert!((stirlerr(n) - direct).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn tailprob_log_agrees() {
        for z in [-5.0, -1.0, 0.3, 4.0, 12.0, 30.0] {
            let t = normal_sf(z);
            if t.p > 1e-300 {
                assert!(rel(libm::exp(t.log_p), t.p) < 1e-12);
            }
        }
    }
}

use bell_core::dist::{binom_sf, chebyshev_p, chisq1_sf, normal_sf, wilks_mixture_sf};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

/// `num/den` as f64 with full relative precision, whatever the magnitudes.
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 { (num << shift as usize) / den } else { num / (den << (-shift) as usize) };
    q.to_f64().unwrap() * 2f64.powi(-shift as i32)
}

/// Exact `P(X ≥ k)` for `X ~ Bin(n, a/b)` by summing integer terms.
fn exact_tail(n: u64, a: u64, b: u64, k: u64) -> f64 {
    let (a, rest) = (BigUint::from(a), BigUint::from(b - a));
    let mut coef = BigUint::one();
    let mut tail = BigUint::zero();
    for j in 0..=n {
        if j >= k {
            tail += &coef * a.pow(j as u32) * rest.pow((n - j) as u32);
        }
        coef = coef * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    ratio_to_f64(&tail, &BigUint::from(b).pow(n as u32))
}

/// Forward summation of the pmf from 0 up to `k − 1`, as a float.
fn forward_lower(n: u64, p: f64, k: u64) -> f64 {
    // (1-p)^n can be subnormal; carry a 2^600 scale to keep full precision
    const SCALE: f64 = 600.0;
    let mut term = (n as f64 * (1.0 - p).ln() + SCALE * std::f64::consts::LN_2).exp();
    let mut sum = 0.0;
    for j in 0..k {
        sum += term;
        term *= (n - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
    }
    sum * 2f64.powi(-(SCALE as i32))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn zhang_tail_is_exact() {
    let want = exact_tail(1649, 3, 4, 1357);
    let got = binom_sf(1649, 0.75, 1357).unwrap();
    assert!(rel(got.p, want) < 1e-10, "{} vs {want}", got.p);
    assert!(rel(got.log_p, want.ln()) < 1e-12);
    // one more win is the next term down
    let next = exact_tail(1649, 3, 4, 1358);
    assert!(rel(binom_sf(1649, 0.75, 1358).unwrap().p, next) < 1e-10);
}

#[test]
fn binomial_tail_against_exact_sums() {
    for (n, a, b) in [(10, 1, 2), (37, 1, 3), (200, 3, 4), (500, 7, 10), (2000, 1, 2)] {
        for k in (0..=n + 1).step_by(((n / 13) as usize).max(1)) {
            let want = exact_tail(n, a, b, k);
            let got = binom_sf(n, a as f64 / b as f64, k).unwrap().p;
            if want == 0.0 {
                assert_eq!(got, 0.0);
            } else {
                assert!(rel(got, want) < 1e-10, "n={n} p={a}/{b} k={k}: {got} vs {want}");
            }
        }
    }
    assert!(rel(binom_sf(10, 0.5, 8).unwrap().p, 56.0 / 1024.0) < 1e-14);
}

#[test]
fn large_n_tail_is_finite_and_monotone() {
    let n = 10_000_000;
    let mut last = 1.0;
    for k in [0, 7_000_000, 7_499_000, 7_500_000, 7_502_000, 7_510_000, 8_000_000, n] {
        let t = binom_sf(n, 0.75, k).unwrap();
        assert!(t.log_p.is_finite(), "k={k}");
        assert!(t.p <= last);
        last = t.p;
    }
}

proptest! {
    #[test]
    fn tail_plus_forward_lower_is_one(n in 1u64..300, p in 0.05f64..0.95, frac in 0.0f64..1.0) {
        let k = ((n + 1) as f64 * frac) as u64;
        let upper = binom_sf(n, p, k).unwrap().p;
        let lower = forward_lower(n, p, k);
        prop_assert!((upper + lower - 1.0).abs() < 1e-10, "{} + {}", upper, lower);
    }

    #[test]
    fn tail_nonincreasing_in_k(n in 1u64..2000, p in 0.01f64..0.99, k in 0u64..2000) {
        let k = k.min(n);
        prop_assert!(binom_sf(n, p, k + 1).unwrap().p <= binom_sf(n, p, k).unwrap().p);
    }

    #[test]
    fn normal_symmetry(z in -8.0f64..8.0) {
        prop_assert!((normal_sf(z).p + normal_sf(-z).p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chisq1_is_two_sided_normal(z in -37.0f64..37.0) {
        let c = chisq1_sf(z * z).unwrap();
        let n = normal_sf(z.abs());
        prop_assert!(((c.log_p - n.log_p - std::f64::consts::LN_2) / n.log_p.abs().max(1.0)).abs() < 1e-12);
        if n.p > 1e-300 {
            prop_assert!(rel(c.p, 2.0 * n.p) < 1e-12);
            prop_assert!(rel(c.log_p.exp(), c.p) < 1e-12);
        }
    }

    #[test]
    fn normal_monotone(a in -38.0f64..38.0, b in -38.0f64..38.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(normal_sf(hi).log_p <= normal_sf(lo).log_p);
    }
}

#[test]
fn reference_points() {
    assert_eq!(wilks_mixture_sf(0.0).unwrap().p, 1.0);
    assert!(rel(chisq1_sf(1.0).unwrap().p, 0.3173105078629141) < 1e-12);
    assert_eq!(chebyshev_p(1.0).unwrap().p, 1.0);
    assert!(rel(chebyshev_p(17.5).unwrap().p, 1.0 / 306.25) < 1e-15);
    assert!(normal_sf(38.0).log_p.is_finite());
}

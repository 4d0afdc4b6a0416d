//! Sums over the zeta (Zipf, offset 1) family.
//!
//! `p(k) = (k + 1)^{-s} / zeta(s)` for `k >= 0`. All sums are split into a
//! direct part over `x = k + 1 < N` and an Euler-Maclaurin tail
//! `int_N^inf f + f(N)/2 - f'(N)/12`. For `f(x) = x^{-s} (ln x)^j` the
//! second derivative is single-signed on `[N, inf)` once `N` is large, so
//! the remainder is bounded by `|f'(N)| / 12`.

use std::f64::consts::LN_2;

use crate::sum::CompensatedSum;

const DIRECT_TERMS: u64 = 10_000;

/// `int_a^inf x^{-s} (ln x)^j dx` for `j` in `0..=2`, `a >= 1`, `s > 1`.
pub(crate) fn tail_integral(j: u32, s: f64, a: f64) -> f64 {
    let t = s - 1.0;
    let l = a.ln();
    let base = a.powf(-t);
    match j {
        0 => base / t,
        1 => base * (l / t + 1.0 / (t * t)),
        2 => base * (l * l / t + 2.0 * l / (t * t) + 2.0 / (t * t * t)),
        _ => unreachable!("only j <= 2 is used"),
    }
}

fn term(j: u32, s: f64, x: f64) -> f64 {
    x.powf(-s) * x.ln().powi(j as i32)
}

fn term_derivative(j: u32, s: f64, x: f64) -> f64 {
    let l = x.ln();
    let lead = if j == 0 { 0.0 } else { j as f64 * l.powi(j as i32 - 1) };
    x.powf(-s - 1.0) * (lead - s * l.powi(j as i32))
}

/// `sum_{x >= 1} x^{-s} (ln x)^j` for `j = 0, 1, 2`, with error bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ZetaSums {
    pub s: f64,
    pub sums: [f64; 3],
    pub errs: [f64; 3],
}

impl ZetaSums {
    pub fn new(s: f64) -> Self {
        let n = DIRECT_TERMS as f64;
        let mut sums = [0.0; 3];
        let mut errs = [0.0; 3];
        for j in 0..3u32 {
            let mut acc = CompensatedSum::new();
            for x in 1..DIRECT_TERMS {
                acc.add(term(j, s, x as f64));
            }
            let d = term_derivative(j, s, n);
            acc.add(tail_integral(j, s, n));
            acc.add(term(j, s, n) / 2.0);
            acc.add(-d / 12.0);
            sums[j as usize] = acc.value();
            errs[j as usize] = d.abs() / 12.0 + sums[j as usize].abs() * 4.0 * f64::EPSILON;
        }
        ZetaSums { s, sums, errs }
    }

    pub fn zeta(&self) -> f64 {
        self.sums[0]
    }

    pub fn mass(&self, k: u64) -> f64 {
        ((k + 1) as f64).powf(-self.s) / self.zeta()
    }

    /// Entropy in bits and its error bound.
    pub fn entropy(&self) -> (f64, f64) {
        let z = self.zeta();
        let l = z.ln();
        let s = self.s;
        let value = (s * self.sums[1] / z + l) / LN_2;
        let err = (s * self.errs[1] / z + (s * self.sums[1] / (z * z) + 1.0 / z) * self.errs[0]) / LN_2;
        (value, err)
    }

    /// `sum p (log2 p)^2` in bits^2 and its error bound.
    pub fn log_moment(&self) -> (f64, f64) {
        let z = self.zeta();
        let l = z.ln();
        let s = self.s;
        let [s0, s1, s2] = self.sums;
        let [e0, e1, e2] = self.errs;
        let nats2 = (s * s * s2 + 2.0 * s * l * s1 + l * l * s0) / z;
        let err_nats2 = (s * s * e2 + 2.0 * s * l.abs() * e1 + l * l * e0) / z + nats2 * e0 / z * 3.0;
        (nats2 / (LN_2 * LN_2), err_nats2 / (LN_2 * LN_2))
    }

    /// Upper bound on the mass of symbols `k > cut`.
    pub fn tail_mass_bound(&self, cut: u64) -> f64 {
        tail_integral(0, self.s, (cut + 1) as f64) / self.zeta()
    }

    /// Upper bound on `sum_{k > cut} -p(k) log2 p(k)`. Needs `cut >= 2`.
    pub fn tail_entropy_bound(&self, cut: u64) -> f64 {
        debug_assert!(cut >= 2);
        let a = (cut + 1) as f64;
        let z = self.zeta();
        (self.s * tail_integral(1, self.s, a) + z.ln() * tail_integral(0, self.s, a)) / (z * LN_2)
    }

    /// Smallest cut `K >= 7` whose tail bound is at most `tail_eps`.
    pub fn truncation_point(&self, tail_eps: f64) -> u64 {
        let t = self.s - 1.0;
        let x = (tail_eps * t * self.zeta()).powf(-1.0 / t);
        let mut k = if x.is_finite() && x < 1e18 { (x.ceil() as u64).saturating_sub(1) } else { u64::MAX / 2 };
        k = k.max(7);
        while k > 7 && self.tail_mass_bound(k - 1) <= tail_eps {
            k -= 1;
        }
        while self.tail_mass_bound(k) > tail_eps {
            k += 1;
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_two_is_pi_squared_over_six() {
        let z = ZetaSums::new(2.0);
        let exact = std::f64::consts::PI.powi(2) / 6.0;
        assert!((z.zeta() - exact).abs() < 1e-12, "{}", z.zeta() - exact);
        assert!(z.errs[0] < 1e-11);
    }

    #[test]
    fn zeta_four_is_pi_fourth_over_ninety() {
        let z = ZetaSums::new(4.0);
        let exact = std::f64::consts::PI.powi(4) / 90.0;
        assert!((z.zeta() - exact).abs() < 1e-14);
    }

    #[test]
    fn tail_integrals_match_quadrature() {
        // trapezoid on a log grid as an independent check
        for &(j, s, a) in &[(0u32, 2.5f64, 3.0f64), (1, 2.5, 3.0), (2, 3.0, 10.0), (1, 1.5, 8.0)] {
            let mut acc = 0.0;
            let (u0, u1, steps) = (a.ln(), 400.0f64, 400_000);
            let h = (u1 - u0) / steps as f64;
            for i in 0..=steps {
                let u = u0 + h * i as f64;
                let x = u.exp();
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                acc += w * term(j, s, x) * x;
            }
            acc *= h;
            let closed = tail_integral(j, s, a);
            assert!((acc - closed).abs() < 1e-6 * closed, "j={j} s={s} a={a}: {acc} vs {closed}");
        }
    }

    #[test]
    fn entropy_matches_long_direct_sum() {
        let z = ZetaSums::new(3.0);
        let (h, err) = z.entropy();
        let mut acc = CompensatedSum::new();
        for k in 0..2_000_000u64 {
            let p = z.mass(k);
            acc.add(-p * p.log2());
        }
        // direct sum misses a tail of order 1e-11
        assert!((h - acc.value()).abs() < 1e-9, "{h} vs {}", acc.value());
        assert!(err < 1e-9);
    }

    #[test]
    fn truncation_point_is_minimal() {
        let z = ZetaSums::new(3.5);
        let k = z.truncation_point(1e-9);
        assert!(z.tail_mass_bound(k) <= 1e-9);
        assert!(z.tail_mass_bound(k - 1) > 1e-9);
    }
}

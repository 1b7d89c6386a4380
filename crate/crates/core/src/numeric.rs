//! Numerically careful building blocks shared by the analytic models.
//!
//! The binomial mass function follows Loader's saddle-point formulation
//! (deviance `bd0` plus the Stirling remainder `stirlerr`), which keeps full
//! relative precision for trial counts in the hundreds of thousands where a
//! `lgamma` difference would lose five or six digits.

use std::f64::consts::PI;

/// `ln(n!) - (n + 1/2) ln n + n - ln sqrt(2 pi)` for n = 0..=15.
///
/// Entry 0 is unused; `stirlerr` is only evaluated for n >= 1.
#[allow(clippy::excessive_precision)]
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_26,
    0.041_340_695_955_409_294,
    0.027_677_925_684_998_34,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_193,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_77,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_53,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

/// Stirling-series remainder of `ln(n!)`.
fn stirlerr(n: u64) -> f64 {
    if n < 16 {
        return STIRLERR_TABLE[n as usize];
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let n = n as f64;
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x / m) + m - x`, evaluated without cancellation
/// when `x` is close to `m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Binomial mass `C(n, k) p^k (1-p)^(n-k)`.
///
/// `0^0` is taken as 1, so `p = 0` and `p = 1` give point masses.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n == 0 {
        return 1.0;
    }
    let q = 1.0 - p;
    if k == 0 {
        return (n as f64 * (-p).ln_1p()).exp();
    }
    if k == n {
        return (n as f64 * p.ln()).exp();
    }
    let nf = n as f64;
    let kf = k as f64;
    let lc = stirlerr(n)
        - stirlerr(k)
        - stirlerr(n - k)
        - bd0(kf, nf * p)
        - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `(1 - x)^power` through `exp(power * ln(1 - x))`; exact at the endpoints.
pub fn one_minus_pow(x: f64, power: f64) -> f64 {
    if power == 0.0 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    (power * (-x).ln_1p()).exp()
}

/// `1 - (1 - x)^power`, accurate when the result is tiny.
pub fn one_minus_one_minus_pow(x: f64, power: f64) -> f64 {
    if power == 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    -(power * (-x).ln_1p()).exp_m1()
}

/// Binomial coefficient as an f64, exact for the small arguments used in
/// occupancy sums.
pub fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Integer-valued `ln C(n, k)` by direct summation. Only used for small k.
#[cfg(test)]
fn ln_choose_small(n: u64, k: u64) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stirlerr_series_matches_table_at_boundary() {
        // The series is accurate well before the table ends.
        let n = 15.0_f64;
        let nn = n * n;
        let series = (1.0 / 12.0
            - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / 1188.0 / nn) / nn) / nn)
                / nn)
            / n;
        assert_relative_eq!(series, STIRLERR_TABLE[15], max_relative = 1e-13);
    }

    #[test]
    fn pmf_small_cases_are_exact() {
        assert_relative_eq!(binomial_pmf(1, 2, 0.5), 0.5, max_relative = 1e-15);
        assert_relative_eq!(binomial_pmf(0, 2, 0.5), 0.25, max_relative = 1e-15);
        assert_relative_eq!(binomial_pmf(3, 10, 0.3), 0.266_827_932, max_relative = 1e-9);
        assert_eq!(binomial_pmf(0, 5, 0.0), 1.0);
        assert_eq!(binomial_pmf(2, 2, 1.0), 1.0);
        assert_eq!(binomial_pmf(3, 2, 0.4), 0.0);
    }

    #[test]
    fn pmf_against_direct_product_for_small_k() {
        for &(n, k, p) in &[(40_u64, 3_u64, 0.01), (1000, 2, 1e-4), (60, 5, 0.2)] {
            let direct = (ln_choose_small(n, k)
                + k as f64 * f64::ln(p)
                + (n - k) as f64 * (-p).ln_1p())
            .exp();
            assert_relative_eq!(binomial_pmf(k, n, p), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn pmf_normalizes_for_large_n() {
        for &(n, p) in &[(10_000_u64, 1.59e-4), (100_000, 7.5e-4), (5_000, 0.3)] {
            let total: f64 = (0..=n).map(|k| binomial_pmf(k, n, p)).sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn power_helpers() {
        assert_eq!(one_minus_pow(1.0, 3.0), 0.0);
        assert_eq!(one_minus_pow(0.3, 0.0), 1.0);
        assert_relative_eq!(one_minus_pow(0.5, 3.0), 0.125, max_relative = 1e-15);
        assert_relative_eq!(
            one_minus_one_minus_pow(1e-9, 2.0),
            2e-9 - 1e-18,
            max_relative = 1e-12
        );
    }

    #[test]
    fn choose_values() {
        assert_eq!(choose(4, 2), 6.0);
        assert_eq!(choose(10, 0), 1.0);
        assert_eq!(choose(3, 5), 0.0);
        assert_eq!(choose(30, 15), 155_117_520.0);
    }
}

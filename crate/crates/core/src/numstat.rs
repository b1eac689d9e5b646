//! Distribution tails, the normal quantile, and a seeded normal generator.
//!
//! Tail probabilities go through the regularized incomplete beta (Student t,
//! Fisher F) and the regularized upper incomplete gamma (χ²).

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("degrees of freedom must be positive, got {0}")]
    DegreesOfFreedom(f64),
    #[error("statistic must be non-negative, got {0}")]
    NegativeStatistic(f64),
    #[error("probability must lie strictly between 0 and 1, got {0}")]
    Probability(f64),
    #[error("argument is not a finite number")]
    NotFinite,
}

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

fn check_df(df: f64) -> Result<(), DomainError> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(DomainError::DegreesOfFreedom(df))
    }
}

/// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let ln_front = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series for P, then complement
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        1.0 - sum * libm::exp(ln_front)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let i = i as f64;
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        libm::exp(ln_front) * h
    }
}

/// Two-sided Student t tail `P(|T_df| ≥ |t|)`.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64, DomainError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(DomainError::NotFinite);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    Ok(regularized_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0))
}

/// Upper F tail `P(F_{df1,df2} ≥ f)`.
pub fn f_upper_p(f: f64, df1: f64, df2: f64) -> Result<f64, DomainError> {
    check_df(df1)?;
    check_df(df2)?;
    if f.is_nan() {
        return Err(DomainError::NotFinite);
    }
    if f < 0.0 {
        return Err(DomainError::NegativeStatistic(f));
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let x = df2 / (df2 + df1 * f);
    Ok(regularized_beta(df2 / 2.0, df1 / 2.0, x).clamp(0.0, 1.0))
}

/// Upper χ² tail `P(χ²_df ≥ x)`.
pub fn chisq_upper_p(x: f64, df: f64) -> Result<f64, DomainError> {
    check_df(df)?;
    if x.is_nan() {
        return Err(DomainError::NotFinite);
    }
    if x < 0.0 {
        return Err(DomainError::NegativeStatistic(x));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(regularized_gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 − Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `Φ⁻¹(p)`, Wichura's AS 241 (PPND16) rational approximations.
pub fn normal_quantile(p: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DomainError::Probability(p));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2_509.080_928_730_122_7 * r + 33_430.575_583_588_128) * r
            + 67_265.770_927_008_700)
            * r
            + 45_921.953_931_549_871)
            * r
            + 13_731.693_765_509_461)
            * r
            + 1_971.590_950_306_551_3)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5_226.495_278_852_545_5 * r + 28_729.085_735_721_943) * r
            + 39_307.895_800_092_710)
            * r
            + 21_213.794_301_586_595)
            * r
            + 5_394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_911)
            * r
            + 1.0;
        return Ok(num / den);
    }
    let r0 = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(r0));
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545_4)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_132_6e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358_1e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    Ok(if q < 0.0 { -val } else { val })
}

/// 64-bit xorshift* generator. Cloning forks the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
    spare: Option<u64>,
}

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        // splitmix64 scramble so small seeds give well-mixed, nonzero states
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        if z == 0 {
            z = 0x2545_F491_4F6C_DD1D;
        }
        Self {
            state: z,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One standard-normal deviate (Box–Muller, pairs cached).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(bits) = self.spare.take() {
            return f64::from_bits(bits);
        }
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(2.0 * PI * u2);
        self.spare = Some((r * s).to_bits());
        r * c
    }
}

/// `n` standard-normal deviates from `rng`.
pub fn rng_normal(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.next_normal()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_tail_matches_printed_coefficient_table() {
        let p = t_two_sided_p(-6.827, 4.0).unwrap();
        assert!((p - 0.00241).abs() < 1e-5, "{p}");
        let p = t_two_sided_p(22.224, 4.0).unwrap();
        assert!((p / 2.43e-5 - 1.0).abs() < 0.02, "{p}");
        assert_eq!(t_two_sided_p(0.0, 3.0).unwrap(), 1.0);
        assert!(t_two_sided_p(1.0, 0.0).is_err());
    }

    #[test]
    fn f_tail() {
        let p = f_upper_p(46.61, 1.0, 4.0).unwrap();
        assert!((p - 0.002407).abs() < 1e-5, "{p}");
        assert_eq!(f_upper_p(0.0, 2.0, 5.0).unwrap(), 1.0);
        assert!(f_upper_p(-1.0, 1.0, 1.0).is_err());
        let t = 2.5_f64;
        let a = f_upper_p(t * t, 1.0, 7.0).unwrap();
        let b = t_two_sided_p(t, 7.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn chisq_tail() {
        let p = chisq_upper_p(11.618, 1.0).unwrap();
        assert!((p - 0.0006532).abs() < 1e-6, "{p}");
        assert_eq!(chisq_upper_p(0.0, 3.0).unwrap(), 1.0);
        // df = 2 is exp(-x/2)
        let p = chisq_upper_p(3.0, 2.0).unwrap();
        assert!((p - libm::exp(-1.5)).abs() < 1e-14);
        assert!((p - 0.22313).abs() < 1e-5);
        assert!(chisq_upper_p(-0.5, 1.0).is_err());
    }

    #[test]
    fn quantile_basics() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z = normal_quantile(0.975).unwrap();
        assert!((z - 1.959964).abs() < 1e-6);
        let a = normal_quantile(0.1).unwrap();
        let b = normal_quantile(0.9).unwrap();
        assert!((a + b).abs() < 1e-15);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn rng_is_deterministic_and_empty_on_zero() {
        let mut r = Rng::seed_from(1);
        assert!(rng_normal(&mut r, 0).is_empty());
        let a = rng_normal(&mut Rng::seed_from(42), 100);
        let b = rng_normal(&mut Rng::seed_from(42), 100);
        assert_eq!(a, b);
        let c = rng_normal(&mut Rng::seed_from(43), 100);
        assert_ne!(a, c);
    }

    #[test]
    fn clone_forks_stream() {
        let mut a = Rng::seed_from(9);
        a.next_normal();
        let mut b = a.clone();
        assert_eq!(a.next_normal(), b.next_normal());
        assert_eq!(a.next_u64(), b.next_u64());
    }
}

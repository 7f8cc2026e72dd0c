//! Modified Bessel functions of the second kind.
//!
//! `K_0` and `K_1` use the ascending series for `z <= 2` and a Chebyshev
//! expansion of `exp(z) sqrt(z) K_nu(z)` in `t = 4/z - 1` beyond. Other
//! integer orders use the upward recurrence; non-integer orders integrate
//! `int_0^inf exp(-z cosh t) cosh(nu t) dt` with the trapezoid rule, which
//! converges geometrically for this integrand.
#![allow(clippy::excessive_precision)]

use crate::error::{PmcError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const K0_CHEB: [f64; 26] = [
    1.220_151_541_032_977_7,
    -0.031_448_101_311_964_5,
    0.001_569_883_885_730_053_4,
    -0.000_128_495_495_816_278_03,
    1.394_981_371_887_649_9e-5,
    -1.831_755_522_719_119_5e-6,
    2.766_813_639_445_015e-7,
    -4.660_489_897_687_947_7e-8,
    8.574_034_017_414_226e-9,
    -1.697_534_509_389_061_5e-9,
    3.577_397_281_400_328_4e-10,
    -7.957_489_244_477_397e-11,
    1.855_949_114_954_926_6e-11,
    -4.514_597_883_374_519e-12,
    1.140_340_588_207_344_2e-12,
    -2.980_096_923_148_178_4e-13,
    8.032_890_775_068_374e-14,
    -2.227_513_326_746_296_4e-14,
    6.340_076_476_276_646e-15,
    -1.848_593_377_920_907_2e-15,
    5.512_055_999_404_333e-16,
    -1.678_231_125_754_900_6e-16,
    5.210_391_777_643_554e-17,
    -1.647_580_593_984_263_3e-17,
    5.300_433_771_177_336e-18,
    -1.733_171_200_582_1e-18,
];

const K1_CHEB: [f64; 26] = [
    1.360_313_095_242_221_3,
    0.103_923_736_576_817_24,
    -0.002_857_816_859_622_779_4,
    0.000_195_215_518_471_351_63,
    -1.936_197_974_166_083e-5,
    2.406_484_947_837_217e-6,
    -3.501_960_603_087_812_5e-7,
    5.741_084_125_450_049e-8,
    -1.034_576_246_567_809_7e-8,
    2.015_049_755_197_034_6e-9,
    -4.190_354_759_341_925_6e-10,
    9.218_315_187_605_314e-11,
    -2.129_967_838_427_791e-11,
    5.139_639_673_482_343_5e-12,
    -1.289_173_960_949_822_9e-12,
    3.348_419_666_052_243e-13,
    -8.976_705_182_010_146e-14,
    2.477_154_424_219_598_7e-14,
    -7.019_837_089_214_769e-15,
    2.038_703_166_239_861e-15,
    -6.057_047_270_643_018e-16,
    1.838_093_575_243_045_4e-16,
    -5.689_462_849_193_648e-17,
    1.794_051_047_886_357_3e-17,
    -5.756_744_482_073_302e-18,
    1.877_865_190_162_326_7e-18,
];

#[inline]
fn clenshaw(coeffs: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + coeffs[0]
}

/// `exp(z) sqrt(z) K_nu(z)` for `z >= 2`, `nu` in {0, 1}.
#[inline]
fn scaled_large(coeffs: &[f64], z: f64) -> f64 {
    clenshaw(coeffs, 4.0 / z - 1.0)
}

/// Ascending series for `0 < z <= 2`.
fn k0_small(z: f64) -> f64 {
    let y = 0.25 * z * z;
    let log_term = (0.5 * z).ln() + EULER_GAMMA;
    let (mut term, mut harmonic) = (1.0, 0.0);
    let (mut i0, mut rest) = (1.0, 0.0);
    for k in 1..40 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        rest += harmonic * term;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -log_term * i0 + rest
}

fn k1_small(z: f64) -> f64 {
    let y = 0.25 * z * z;
    let ln_half = (0.5 * z).ln();
    // digamma(k+1) + digamma(k+2) = 2 H_k + 1/(k+1) - 2 gamma
    let mut term = 1.0; // y^k / (k! (k+1)!)
    let mut harmonic = 0.0;
    let mut i1_sum = term;
    let mut psi_sum = (1.0 - 2.0 * EULER_GAMMA) * term;
    for k in 1..40 {
        let kf = k as f64;
        term *= y / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        i1_sum += term;
        psi_sum += (2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA) * term;
        if term < 1e-18 * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * z * i1_sum;
    1.0 / z + ln_half * i1 - 0.25 * z * psi_sum
}

fn check_arg(z: f64) -> Result<()> {
    if z > 0.0 && !z.is_nan() {
        Ok(())
    } else {
        Err(PmcError::Domain(format!("Bessel K needs z > 0, got {z}")))
    }
}

#[inline]
fn k0_unchecked(z: f64) -> f64 {
    if z <= 2.0 {
        k0_small(z)
    } else {
        (-z).exp() * scaled_large(&K0_CHEB, z) / z.sqrt()
    }
}

#[inline]
fn k1_unchecked(z: f64) -> f64 {
    if z <= 2.0 {
        k1_small(z)
    } else {
        (-z).exp() * scaled_large(&K1_CHEB, z) / z.sqrt()
    }
}

pub fn bessel_k0(z: f64) -> Result<f64> {
    check_arg(z)?;
    Ok(k0_unchecked(z))
}

pub fn bessel_k1(z: f64) -> Result<f64> {
    check_arg(z)?;
    Ok(k1_unchecked(z))
}

/// `ln K_0(z)`, finite for every finite `z > 0`.
#[inline]
pub(crate) fn ln_k0_unchecked(z: f64) -> f64 {
    if z <= 2.0 {
        k0_small(z).ln()
    } else if z == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        scaled_large(&K0_CHEB, z).ln() - z - 0.5 * z.ln()
    }
}

pub fn ln_bessel_k0(z: f64) -> Result<f64> {
    check_arg(z)?;
    Ok(ln_k0_unchecked(z))
}

/// `ln K_nu(z)` and the exponent shift used, for the quadrature path.
fn ln_k_quadrature(nu: f64, z: f64) -> f64 {
    // exp(-z (cosh t - 1)) cosh(nu t); the factor exp(-z) is restored below.
    let h = 0.02;
    let f = |t: f64| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut sum = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let v = f(k as f64 * h);
        sum += v;
        if v < 1e-18 * sum || k > 200_000 {
            break;
        }
        k += 1;
    }
    (sum * h).ln() - z
}

/// `ln K_nu(z)` for real `nu` (`K_{-nu} = K_nu`) and `z > 0`.
pub fn ln_bessel_k(nu: f64, z: f64) -> Result<f64> {
    check_arg(z)?;
    if !nu.is_finite() {
        return Err(PmcError::Domain(format!(
            "Bessel order must be finite, got {nu}"
        )));
    }
    let nu = nu.abs();
    if nu == 0.0 {
        return Ok(ln_k0_unchecked(z));
    }
    if nu.fract() != 0.0 || nu > 50.0 {
        return Ok(ln_k_quadrature(nu, z));
    }
    let n = nu as usize;
    if z > 2.0 {
        // Upward recurrence on the scaled values exp(z) K_n(z).
        let mut prev = scaled_large(&K0_CHEB, z);
        let mut cur = scaled_large(&K1_CHEB, z);
        for j in 1..n {
            let next = prev + 2.0 * j as f64 / z * cur;
            prev = cur;
            cur = next;
        }
        return Ok(cur.ln() - z - 0.5 * z.ln());
    }
    let mut prev = k0_small(z);
    let mut cur = k1_small(z);
    for j in 1..n {
        let next = prev + 2.0 * j as f64 / z * cur;
        prev = cur;
        cur = next;
    }
    Ok(cur.ln())
}

/// `K_nu(z)`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    check_arg(z)?;
    let a = nu.abs();
    if a == 0.0 {
        return Ok(k0_unchecked(z));
    }
    if a == 1.0 {
        return Ok(k1_unchecked(z));
    }
    ln_bessel_k(nu, z).map(f64::exp)
}

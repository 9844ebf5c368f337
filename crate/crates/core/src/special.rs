//! Special functions backing the kernel families: the modified Bessel
//! function of the second kind for real order, the Hurwitz zeta function and
//! Gauss-Legendre rules.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;

/// Taylor coefficients of 1/Γ(z) around z = 0 (starting with the z¹ term).
const RECIP_GAMMA: [f64; 17] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
];

/// Returns (1/Γ(1+u), 1/Γ(1-u), gam1, gam2) for |u| <= 1/2, where
/// gam1 = (1/Γ(1-u) - 1/Γ(1+u)) / (2u) and gam2 = (1/Γ(1-u) + 1/Γ(1+u)) / 2.
fn temme_gammas(u: f64) -> (f64, f64, f64, f64) {
    if u.abs() < 0.1 {
        // even/odd split of the 1/Γ(1±u) series
        let u2 = u * u;
        let mut even = 0.0;
        let mut odd = 0.0;
        let mut pow = 1.0;
        for k in 0..(RECIP_GAMMA.len() / 2) {
            even += RECIP_GAMMA[2 * k] * pow;
            odd += RECIP_GAMMA[2 * k + 1] * pow;
            pow *= u2;
        }
        let gampl = even + u * odd;
        let gammi = even - u * odd;
        (gampl, gammi, -odd, even)
    } else {
        let gampl = 1.0 / gamma(1.0 + u);
        let gammi = 1.0 / gamma(1.0 - u);
        (
            gampl,
            gammi,
            (gammi - gampl) / (2.0 * u),
            0.5 * (gammi + gampl),
        )
    }
}

/// Temme's series for (K_u(x), K_{u+1}(x)), |u| <= 1/2, 0 < x <= 2.
fn temme_series(u: f64, x: f64) -> Result<(f64, f64)> {
    let (gampl, gammi, gam1, gam2) = temme_gammas(u);
    let x2 = 0.5 * x;
    let pimu = PI * u;
    let fact = if pimu.abs() < f64::EPSILON {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -x2.ln();
    let e = u * d;
    let fact2 = if e.abs() < f64::EPSILON {
        1.0
    } else {
        e.sinh() / e
    };
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let e = e.exp();
    let mut p = 0.5 * e / gampl;
    let mut q = 0.5 / (e * gammi);
    let mut c = 1.0;
    let d = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - u * u);
        c *= d / fi;
        p /= fi - u;
        q /= fi + u;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * f64::EPSILON {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(Error::Numerical(
        "Temme series for K_nu did not converge".into(),
    ))
}

/// Steed's continued fraction for (K_u(x), K_{u+1}(x)), x > 2.
fn steed_cf2(u: f64, x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - u * u;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            let k_u = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
            let k_u1 = k_u * (u + x + 0.5 - a1 * h) / x;
            return Ok((k_u, k_u1));
        }
    }
    Err(Error::Numerical(
        "continued fraction for K_nu did not converge".into(),
    ))
}

/// Modified Bessel function of the second kind K_ν(x) for real ν and x > 0.
///
/// The order is split as ν = n + u with |u| <= 1/2. K_u and K_{u+1} come from
/// Temme's series when x <= 2 and from Steed's continued fraction otherwise;
/// forward recurrence in the order (stable for K) then reaches ν.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() || !nu.is_finite() {
        return Err(Error::Numerical(format!(
            "K_nu undefined at nu = {nu}, x = {x}"
        )));
    }
    // K_{-ν} = K_ν
    let nu = nu.abs();
    let n = nu.round();
    let u = nu - n;
    let (mut prev, mut cur) = if x <= 2.0 {
        temme_series(u, x)?
    } else {
        steed_cf2(u, x)?
    };
    for k in 1..=(n as usize) {
        let next = 2.0 * (u + k as f64) * cur / x + prev;
        prev = cur;
        cur = next;
    }
    Ok(prev)
}

const BERNOULLI_OVER_FACT: [f64; 6] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
];

/// Hurwitz zeta ζ(s, a) = Σ_{k>=0} (a+k)^{-s} for s > 1, a > 0 via
/// Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const N: usize = 24;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (a + k as f64).powf(-s);
    }
    let t = a + N as f64;
    sum += t.powf(1.0 - s) / (s - 1.0) + 0.5 * t.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) times t^{-s-2j+1}
    let mut rising = s;
    let mut tpow = t.powf(-s - 1.0);
    for (j, coeff) in BERNOULLI_OVER_FACT.iter().enumerate() {
        sum += coeff * rising * tpow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        tpow /= t * t;
    }
    sum
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    let nf = order as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..order {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

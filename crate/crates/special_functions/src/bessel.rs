//! `K_nu(x)` through Temme's series for small arguments and Steed's
//! continued fraction otherwise, both on the fractional order in
//! [-1/2, 1/2), followed by forward recurrence carried as ratios so that
//! nothing overflows for large orders or tiny arguments.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::SpecialFunctionError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-17;
const MAX_ITER: usize = 20_000;
const SERIES_SWITCH: f64 = 2.0;
const ZETA_TERMS: usize = 64;

/// `ln K_order(x)`.
pub fn log_bessel_k(order: f64, x: f64) -> Result<f64, SpecialFunctionError> {
    check(order, x)?;
    Ok(eval(order.abs(), x).log_k)
}

/// `K_{order+1}(x) / K_order(x)`.
pub fn bessel_k_ratio(order: f64, x: f64) -> Result<f64, SpecialFunctionError> {
    check(order, x)?;
    if order >= 0.0 {
        return Ok(eval(order, x).ratio);
    }
    let m = -order;
    if m >= 1.0 {
        Ok(1.0 / eval(m - 1.0, x).ratio)
    } else {
        Ok((eval(1.0 - m, x).log_k - eval(m, x).log_k).exp())
    }
}

fn check(order: f64, x: f64) -> Result<(), SpecialFunctionError> {
    if !order.is_finite() {
        return Err(SpecialFunctionError::NonFiniteOrder(order));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialFunctionError::NonPositiveArgument(x));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct KEval {
    log_k: f64,
    /// K_{nu+1}(x) / K_nu(x)
    ratio: f64,
}

fn eval(nu: f64, x: f64) -> KEval {
    debug_assert!(nu >= 0.0);
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut log_k, mut ratio) = if mu == -0.5 {
        (0.5 * (PI / (2.0 * x)).ln() - x, 1.0)
    } else if x <= SERIES_SWITCH {
        let (k_mu, k_mu1) = temme(mu, x);
        (k_mu.ln(), k_mu1 / k_mu)
    } else {
        steed(mu, x)
    };
    let steps = nl as usize;
    for i in 1..=steps {
        log_k += ratio.ln();
        ratio = 2.0 * (mu + i as f64) / x + 1.0 / ratio;
    }
    KEval { log_k, ratio }
}

/// `(K_mu(x), K_{mu+1}(x))` for |mu| <= 1/2 and x <= 2.
fn temme(mu: f64, x: f64) -> (f64, f64) {
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu == 0.0 { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e == 0.0 { 1.0 } else { e.sinh() / e };
    let g = gamma_terms(mu);
    let mut ff = fact * (g.gam1 * e.cosh() + g.gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / g.gampl;
    let mut q = 0.5 / (ee * g.gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// `(ln K_mu(x), K_{mu+1}(x)/K_mu(x))` for |mu| <= 1/2 and x > 2.
fn steed(mu: f64, x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut c = a1;
    let mut q = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let log_k = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
    let ratio = (mu + x + 0.5 - h) / x;
    (log_k, ratio)
}

struct GammaTerms {
    gam1: f64,
    gam2: f64,
    gampl: f64,
    gammi: f64,
}

/// Temme's auxiliary gamma combinations from the Maclaurin series of
/// `ln(1/Gamma(1+z))`, split into odd and even parts so that the difference
/// quotient in `gam1` never cancels.
fn gamma_terms(mu: f64) -> GammaTerms {
    let z = zeta_table();
    let mut odd_over_mu = EULER_GAMMA;
    let mut even = 0.0;
    let mu2 = mu * mu;
    let mut pow = 1.0;
    for k in 2..ZETA_TERMS {
        pow *= mu;
        let term = z[k] * pow * mu / k as f64;
        if k % 2 == 0 {
            even -= term;
        } else {
            odd_over_mu += z[k] * pow / k as f64;
        }
        if pow.abs() < 1e-30 && mu2 < 1.0 {
            break;
        }
    }
    let odd = odd_over_mu * mu;
    let sinhc = if odd == 0.0 { 1.0 } else { odd.sinh() / odd };
    let scale = even.exp();
    GammaTerms {
        gam1: -scale * odd_over_mu * sinhc,
        gam2: scale * odd.cosh(),
        gampl: (even + odd).exp(),
        gammi: (even - odd).exp(),
    }
}

/// Riemann zeta at the integers 0..ZETA_TERMS (entries 0 and 1 unused),
/// by Euler-Maclaurin summation.
fn zeta_table() -> &'static [f64; ZETA_TERMS] {
    static TABLE: OnceLock<[f64; ZETA_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; ZETA_TERMS];
        for (k, slot) in t.iter_mut().enumerate().skip(2) {
            *slot = zeta(k as f64);
        }
        t
    })
}

fn zeta(s: f64) -> f64 {
    const N: f64 = 16.0;
    // B_{2j} / (2j)!
    const B: [f64; 7] = [
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 24.0,
        1.0 / 42.0 / 720.0,
        -1.0 / 30.0 / 40_320.0,
        5.0 / 66.0 / 3_628_800.0,
        -691.0 / 2730.0 / 479_001_600.0,
        7.0 / 6.0 / 87_178_291_200.0,
    ];
    let mut sum: f64 = (1..16).rev().map(|n| (n as f64).powf(-s)).sum();
    sum += N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    let mut rising = s;
    let mut npow = N.powf(-s - 1.0);
    for (j, bj) in B.iter().enumerate() {
        sum += bj * rising * npow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        npow /= N * N;
    }
    sum
}

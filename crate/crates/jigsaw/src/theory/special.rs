//! Special functions needed by the critical constants: Poisson tail
//! exponents, gamma, zeta, and the dilogarithm. Pure-real, dependency-free,
//! so the closed forms can cross-check the quadrature route and vice versa.

use super::TheoryError;

/// `ln(k!)` by direct summation; exact to f64 rounding for the small
/// arguments used here.
pub fn ln_factorial(k: u32) -> f64 {
    (2..=k as u64).map(|i| (i as f64).ln()).sum()
}

/// `ln C(m, i)` for small `i`.
pub fn ln_choose(m: u64, i: u64) -> f64 {
    debug_assert!(i <= m);
    (1..=i)
        .map(|j| ((m - i + j) as f64).ln() - (j as f64).ln())
        .sum()
}

/// `g_sigma(x) = -log P(Poisson(x) >= sigma)`, stable across the whole
/// domain: a direct tail series where the tail is small (small `x`) and a
/// `log1p` of the complementary sum where it is near one (large `x`).
pub fn g_sigma(sigma: u32, x: f64) -> Result<f64, TheoryError> {
    if sigma < 1 {
        return Err(TheoryError("g_sigma requires sigma >= 1".into()));
    }
    if !(x > 0.0) {
        return Err(TheoryError(format!("g_sigma requires x > 0, got {x}")));
    }
    let s = sigma as f64;
    if x < s {
        // P(Poisson >= sigma) = e^-x x^sigma / sigma! * S,
        // S = sum_j x^j / ((sigma+1)...(sigma+j)); ratios < 1 here.
        let mut term = 1.0;
        let mut total = 1.0;
        let mut j = 1u32;
        loop {
            term *= x / (s + j as f64);
            total += term;
            if term < total * 1e-17 || j > 10_000 {
                break;
            }
            j += 1;
        }
        let ln_tail = -x + s * x.ln() - ln_factorial(sigma) + total.ln();
        Ok(-ln_tail)
    } else {
        // Complementary sum e^-x sum_{i<sigma} x^i/i! is bounded away from 1.
        let mut below = 0.0;
        let mut ln_term = -x; // ln of e^-x x^i / i! at i = 0
        for i in 0..sigma {
            if i > 0 {
                ln_term += x.ln() - (i as f64).ln();
            }
            below += ln_term.exp();
        }
        Ok(-(-below).ln_1p())
    }
}

/// Lanczos approximation (g = 7, 9 coefficients, the GSL set), with the
/// reflection formula below 1/2.
pub fn gamma(x: f64) -> f64 {
    const P: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    const PI: f64 = std::f64::consts::PI;
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = P[0];
        for (i, &p) in P.iter().enumerate().skip(1) {
            acc += p / (x + i as f64);
        }
        let w = x + 7.5;
        (2.0 * PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * acc
    }
}

/// Riemann zeta for `s > 1` by Borwein's alternating-series acceleration.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta implemented for s > 1 only");
    let n = 56usize;
    // d_k = n * sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!), built by recurrence.
    let mut d = vec![0.0f64; n + 1];
    let mut t = 1.0 / n as f64;
    let mut partial = t;
    d[0] = n as f64 * partial;
    for j in 1..=n {
        t *= 4.0 * (n + j - 1) as f64 * (n - j + 1) as f64 / ((2 * j) as f64 * (2 * j - 1) as f64);
        partial += t;
        d[j] = n as f64 * partial;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 0..n {
        sum += sign * (d[k] - d[n]) / ((k + 1) as f64).powf(s);
        sign = -sign;
    }
    let eta = -sum / d[n];
    eta / (1.0 - (2.0f64).powf(1.0 - s))
}

/// Dilogarithm on `[0, 1]`.
pub fn dilog(x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "dilog implemented on [0,1]");
    const PI2_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    if x == 1.0 {
        return PI2_6;
    }
    if x > 0.5 {
        return PI2_6 - x.ln() * (1.0 - x).ln() - dilog(1.0 - x);
    }
    let mut term = x;
    let mut total = x;
    let mut k = 2u64;
    while term.abs() > 1e-18 && k < 10_000 {
        term *= x;
        total += term / (k * k) as f64;
        k += 1;
    }
    total
}

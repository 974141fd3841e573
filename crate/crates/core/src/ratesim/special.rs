//! Error function, imaginary error function and the modified Bessel function `I_0`.

use std::f64::consts::PI;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `erf(x)`. Power series below `|x| = 3`, continued fraction for `erfc` above.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        // erf x = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term > sum * 1e-17 {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
        }
        FRAC_2_SQRT_PI * (-x2).exp() * sum
    } else {
        1.0 - erfc_large(x)
    }
}

/// `erfc(x) = 1 - erf(x)`, without cancellation for large `x`.
pub fn erfc(x: f64) -> f64 {
    if x >= 3.0 {
        erfc_large(x)
    } else {
        1.0 - erf(x)
    }
}

/// `erfc(x)` for `x >= 3` by modified Lentz evaluation of
/// `e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
fn erfc_large(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// `erfi(x) = -i erf(ix)`. Overflows to infinity past `|x| ≈ 26.6`; see [`erfi_scaled`].
pub fn erfi(x: f64) -> f64 {
    if x.abs() > 5.0 {
        return erfi_scaled(x) * (x * x).exp();
    }
    // 2/sqrt(pi) sum x^{2n+1} / (n! (2n+1)); every term is positive for x > 0.
    let x2 = x * x;
    let mut power = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        power *= x2 / n;
        let term = power / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `e^{-x^2} erfi(x)`, finite for every `x`. Terms are formed in log space.
pub fn erfi_scaled(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let ln_x = ax.ln();
    let x2 = ax * ax;
    // Terms peak near n = x^2; sum outward from n = 0 until they vanish past the peak.
    let mut ln_fact = 0.0;
    let mut sum = 0.0;
    let mut n = 0u64;
    loop {
        let nf = n as f64;
        if n > 0 {
            ln_fact += nf.ln();
        }
        let ln_term = (2.0 * nf + 1.0) * ln_x - ln_fact - (2.0 * nf + 1.0).ln() - x2;
        let term = ln_term.exp();
        sum += term;
        if nf > x2 && term <= sum * 1e-17 {
            break;
        }
        n += 1;
    }
    FRAC_2_SQRT_PI * sum * x.signum()
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 50.0 {
        i0_series(ax)
    } else {
        i0_scaled_asymptotic(ax) * ax.exp()
    }
}

/// `e^{-|x|} I_0(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 50.0 {
        i0_series(ax) * (-ax).exp()
    } else {
        i0_scaled_asymptotic(ax)
    }
}

fn i0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
    }
}

/// `e^{-x} I_0(x) ~ 1/sqrt(2 pi x) sum ((2k-1)!!)^2 / (k! 8^k x^k)`, for large `x`.
fn i0_scaled_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

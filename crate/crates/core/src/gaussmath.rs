//! Scalar Gaussian special functions and truncated-moment closed forms.
//!
//! The standard-normal CDF is evaluated from first principles: a
//! non-alternating power series on |x| <= 3 and the Mills-ratio continued
//! fraction in the tails. Both pieces are elementary and are checked against
//! direct quadrature of the density in the test suite. The truncated moments
//! E[max(y,0)] and E[max(y,0)^2] of a Gaussian y ~ N(mu, sigma^2) are the
//! workhorses of the weighted constraint reformulations.

use crate::error::{CoreError, Result};

/// 1 / sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.3989422804014326779;

/// Most negative exponent fed to `exp` before clamping to zero output.
const EXP_UNDERFLOW: f64 = -745.0;

/// A scalar Gaussian N(mu, sigma^2). `sigma == 0` is the degenerate
/// deterministic case and is accepted; the moment functions handle it by
/// explicit limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauss1D {
    pub mu: f64,
    pub sigma: f64,
}

impl Gauss1D {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() {
            return Err(CoreError::Domain(format!(
                "Gauss1D parameters must be finite, got mu={mu}, sigma={sigma}"
            )));
        }
        if sigma < 0.0 {
            return Err(CoreError::Domain(format!(
                "Gauss1D sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }
}

/// Standard normal density with an underflow clamp on the exponent.
pub fn std_pdf(x: f64) -> f64 {
    let e = -0.5 * x * x;
    if e < EXP_UNDERFLOW {
        0.0
    } else {
        INV_SQRT_2PI * e.exp()
    }
}

/// Standard normal CDF.
///
/// |x| <= 3 uses Phi(x) = 1/2 + pdf(x) * sum_{n>=0} x^(2n+1) / (2n+1)!!,
/// the tails use the Mills-ratio continued fraction
/// Q(x) = pdf(x) / (x + 1/(x + 2/(x + 3/(x + ...)))).
pub fn std_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 40.0 {
        return 1.0;
    }
    if x < -40.0 {
        return 0.0;
    }
    if x.abs() <= 3.0 {
        0.5 + std_pdf(x) * cdf_core_series(x)
    } else if x > 0.0 {
        1.0 - tail_cf(x)
    } else {
        tail_cf(-x)
    }
}

/// sum_{n>=0} x^(2n+1) / (1*3*5*...*(2n+1)); odd in x.
fn cdf_core_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= x2 / (2 * n + 1) as f64;
        sum += term;
        if term.abs() <= sum.abs() * 1e-18 {
            break;
        }
    }
    sum
}

/// Upper tail Q(x) = P[Z > x] for x > 3 via the Laplace continued fraction
/// for the Mills ratio, evaluated with the modified Lentz algorithm.
fn tail_cf(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..=300 {
        let a = n as f64;
        // continued fraction step: b_n = x, a_n = n
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 2e-16 {
            break;
        }
    }
    std_pdf(x) / f
}

/// Upper tail Q(x) = P[Z > x] for x >= 0, with full relative precision in
/// the far tail.
fn upper_tail(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x > 3.0 {
        tail_cf(x)
    } else {
        0.5 - std_pdf(x) * cdf_core_series(x)
    }
}

/// Standard normal quantile: the x with `std_cdf(x) = q`.
///
/// Solved in whichever tail keeps full relative precision (the quantile of
/// q > 1/2 is the negated quantile of 1-q), seeded with the classical
/// rational tail approximation and polished by Newton steps safeguarded by
/// a bisection bracket.
pub fn std_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(CoreError::Domain(format!(
            "quantile argument must lie in (0,1), got {q}"
        )));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let (qc, sign) = if q > 0.5 { (1.0 - q, 1.0) } else { (q, -1.0) };

    // Abramowitz & Stegun 26.2.22 upper-tail seed (|err| < 4.5e-4): y > 0
    // with Q(y) ~ qc.
    let t = (-2.0 * qc.ln()).sqrt();
    let mut y = t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
    y = y.clamp(1e-12, 40.9);

    // Q is decreasing: keep a bracket with Q(lo) >= qc >= Q(hi)
    let mut lo = 0.0f64;
    let mut hi = 41.0f64;
    for _ in 0..80 {
        let f = upper_tail(y) - qc;
        if f.abs() <= 4.0 * f64::EPSILON * qc {
            break;
        }
        if f > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let dens = std_pdf(y);
        let y_new = if dens > 0.0 { y + f / dens } else { f64::NAN };
        let y_next = if y_new.is_finite() && y_new > lo && y_new < hi {
            y_new
        } else {
            0.5 * (lo + hi)
        };
        if (y_next - y).abs() <= f64::EPSILON * (1.0 + y.abs()) {
            y = y_next;
            break;
        }
        y = y_next;
    }
    Ok(sign * y)
}

/// E[max(y, 0)] for y ~ N(mu, sigma^2):
/// mu*Phi(mu/sigma) + sigma*pdf(mu/sigma). For sigma = 0 this degenerates to
/// max(mu, 0).
pub fn trunc_mean(g: Gauss1D) -> f64 {
    if g.sigma == 0.0 {
        return g.mu.max(0.0);
    }
    let z = g.mu / g.sigma;
    g.mu * std_cdf(z) + g.sigma * std_pdf(z)
}

/// E[max(y, 0)^2] for y ~ N(mu, sigma^2):
/// (mu^2 + sigma^2)*Phi(mu/sigma) + mu*sigma*pdf(mu/sigma). For sigma = 0
/// this degenerates to max(mu, 0)^2.
pub fn trunc_second_moment(g: Gauss1D) -> f64 {
    if g.sigma == 0.0 {
        let m = g.mu.max(0.0);
        return m * m;
    }
    let z = g.mu / g.sigma;
    ((g.mu * g.mu + g.sigma * g.sigma) * std_cdf(z) + g.mu * g.sigma * std_pdf(z)).max(0.0)
}

/// Partial derivatives (d/dmu, d/dsigma) of `trunc_mean`. The cross terms
/// cancel, leaving (Phi(z), pdf(z)) with z = mu/sigma.
pub fn trunc_mean_grad(g: Gauss1D) -> Result<(f64, f64)> {
    if g.sigma <= 0.0 {
        return Err(CoreError::Degenerate(
            "trunc_mean_grad requires sigma > 0".into(),
        ));
    }
    let z = g.mu / g.sigma;
    Ok((std_cdf(z), std_pdf(z)))
}

/// Partial derivatives (d/dmu, d/dsigma) of `trunc_second_moment`:
/// (2*mu*Phi(z) + 2*sigma*pdf(z), 2*sigma*Phi(z)) with z = mu/sigma.
pub fn trunc_second_moment_grad(g: Gauss1D) -> Result<(f64, f64)> {
    if g.sigma <= 0.0 {
        return Err(CoreError::Degenerate(
            "trunc_second_moment_grad requires sigma > 0".into(),
        ));
    }
    let z = g.mu / g.sigma;
    let phi = std_pdf(z);
    let cdf = std_cdf(z);
    Ok((2.0 * g.mu * cdf + 2.0 * g.sigma * phi, 2.0 * cdf * g.sigma))
}

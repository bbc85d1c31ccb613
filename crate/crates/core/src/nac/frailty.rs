//! Frailty samplers for outer (root) and inner (nested) generators.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use statrs::function::gamma::ln_gamma;

use super::families::Family;

/// Positive stable variable with Laplace transform `exp(-t^alpha)`, by
/// Kanter's representation.
pub(crate) fn stable<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u: f64 = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin().powf(alpha / (1.0 - alpha)) * ((1.0 - alpha) * u).sin()
        / u.sin().powf(1.0 / (1.0 - alpha));
    (a / e).powf((1.0 - alpha) / alpha)
}

/// Log-series variable `P(V = k) = p^k / (-k ln(1 - p))`, where
/// `ln(1 - p) = log_q`. Kemp's algorithm.
pub(crate) fn log_series<R: Rng>(log_q: f64, rng: &mut R) -> f64 {
    let p = -log_q.exp_m1();
    let v: f64 = rng.random();
    if v > p {
        return 1.0;
    }
    let q = -(log_q * rng.random::<f64>()).exp_m1();
    if v < q * q {
        let k = (1.0 + v.ln() / q.ln()).floor();
        if k.is_finite() && k >= 1.0 {
            k
        } else {
            1.0
        }
    } else if v > q {
        1.0
    } else {
        2.0
    }
}

/// `ln P(V > n)` for Sibuya(alpha).
fn sibuya_log_tail(alpha: f64, n: f64) -> f64 {
    ln_gamma(n + 1.0 - alpha) - ln_gamma(1.0 - alpha) - ln_gamma(n + 1.0)
}

const SIBUYA_EXACT_LIMIT: f64 = 1e6;

/// Sibuya variable with Laplace transform `1 - (1 - e^{-t})^alpha`, by
/// inversion of its tail `Γ(n + 1 - α) / (Γ(1 - α) n!)`.
pub(crate) fn sibuya<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let w: f64 = rng.random();
    // P(V > 1) = 1 - alpha.
    if w >= 1.0 - alpha {
        return 1.0;
    }
    let log_w = w.ln();
    // Asymptotic inverse of n^(-α) / Γ(1 - α) = w. Far in the tail the
    // log-gamma differences lose precision and the asymptote is used as is.
    let x = (w * statrs::function::gamma::gamma(1.0 - alpha)).powf(-1.0 / alpha);
    if !(x < SIBUYA_EXACT_LIMIT) {
        return x.ceil().min(f64::MAX);
    }
    let guess = x.floor();
    // Smallest n >= 1 with P(V > n) <= w.
    let mut n = guess.max(1.0);
    while n > 1.0 && sibuya_log_tail(alpha, n - 1.0) <= log_w {
        n -= 1.0;
    }
    while sibuya_log_tail(alpha, n) > log_w {
        n += 1.0;
    }
    n
}

/// Frailty of an outer (root) generator.
pub(crate) fn outer<R: Rng>(family: Family, theta: f64, rng: &mut R) -> f64 {
    match family {
        Family::Clayton => Gamma::new(1.0 / theta, 1.0).unwrap().sample(rng),
        Family::Gumbel => stable(1.0 / theta, rng),
        Family::Frank => log_series(-theta, rng),
        Family::Joe => sibuya(1.0 / theta, rng),
        Family::Independence => 1.0,
    }
}

/// Largest integer frailty handled by summation in the Joe inner sampler;
/// above it the sum is replaced by its stable limit.
const JOE_SUM_LIMIT: f64 = 10_000.0;

/// Frailty of a child generator with parameter `theta1` given the parent's
/// frailty `v0` and parameter `theta0`, both of the same family. Its
/// Laplace transform is `exp(-v0 ψ0⁻¹(ψ1(t)))`.
pub(crate) fn inner<R: Rng>(family: Family, theta0: f64, theta1: f64, v0: f64, rng: &mut R) -> f64 {
    let alpha = theta0 / theta1;
    match family {
        Family::Independence => 1.0,
        Family::Gumbel => v0.powf(1.0 / alpha) * stable(alpha, rng),
        Family::Clayton => tilted_stable(alpha, v0, rng),
        Family::Frank => {
            let c1 = -(-theta1).exp_m1();
            let mut total = 0.0;
            for _ in 0..v0.round() as u64 {
                loop {
                    let k = sibuya(alpha, rng);
                    if k == 1.0 || rng.random::<f64>() < c1.powf(k - 1.0) {
                        total += k;
                        break;
                    }
                }
            }
            total
        }
        Family::Joe => {
            if v0 > JOE_SUM_LIMIT && alpha < 1.0 {
                v0.powf(1.0 / alpha) * stable(alpha, rng)
            } else {
                (0..v0.round() as u64).map(|_| sibuya(alpha, rng)).sum()
            }
        }
    }
}

/// Exponentially tilted stable variable with Laplace transform
/// `exp(-v0 ((1 + t)^alpha - 1))`, as a sum of `m` pieces each drawn by
/// rejection from a stable proposal.
fn tilted_stable<R: Rng>(alpha: f64, v0: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return v0;
    }
    let m = v0.round().max(1.0);
    let scale = (v0 / m).powf(1.0 / alpha);
    let mut total = 0.0;
    for _ in 0..m as u64 {
        loop {
            let s = scale * stable(alpha, rng);
            if rng.random::<f64>() <= (-s).exp() {
                total += s;
                break;
            }
        }
    }
    total
}

//! One-parameter Archimedean generator families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::quad::tanh_sinh;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Clayton,
    Gumbel,
    Frank,
    Joe,
    Independence,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
        Family::Independence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
            Family::Independence => "independence",
        }
    }

    /// Smallest admissible parameter; `θ` must exceed it strictly for
    /// Clayton and Frank and may equal it for Gumbel and Joe.
    fn theta_floor(self) -> f64 {
        match self {
            Family::Clayton | Family::Frank => 0.0,
            Family::Gumbel | Family::Joe => 1.0,
            Family::Independence => f64::NEG_INFINITY,
        }
    }

    pub fn check_theta(self, theta: f64) -> Result<()> {
        let ok = match self {
            Family::Clayton | Family::Frank => theta > 0.0,
            Family::Gumbel | Family::Joe => theta >= 1.0,
            Family::Independence => true,
        };
        if ok && theta.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("θ = {theta} is not admissible for {self}")))
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family `{s}`")))
    }
}

/// `ln(1 - e^{-x})` for `x > 0`.
fn log1mexp(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// Generator `ψ(t)`.
pub(crate) fn psi_raw(family: Family, theta: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    match family {
        Family::Clayton => (1.0 + t).powf(-1.0 / theta),
        Family::Gumbel => (-t.powf(1.0 / theta)).exp(),
        Family::Frank => {
            let x = -(-theta).exp_m1() * (-t).exp();
            if x < 0.5 {
                -(-x).ln_1p() / theta
            } else {
                // 1 - x = 1 - e^{-t} + e^{-θ-t}, without cancellation.
                -(-(-t).exp_m1() + (-theta - t).exp()).ln() / theta
            }
        }
        Family::Joe => 1.0 - (-(-t).exp_m1()).powf(1.0 / theta),
        Family::Independence => (-t).exp(),
    }
}

/// Inverse generator `ψ⁻¹(u)`.
pub(crate) fn psi_inv_raw(family: Family, theta: f64, u: f64) -> f64 {
    let v = match family {
        Family::Clayton => u.powf(-theta) - 1.0,
        Family::Gumbel => (-u.ln()).powf(theta),
        Family::Frank => log1mexp(theta) - log1mexp(theta * u),
        Family::Joe => -(-(1.0 - u).powf(theta)).ln_1p(),
        Family::Independence => -u.ln(),
    };
    v.max(0.0)
}

/// `φ(t) / φ'(t)` for `φ = ψ⁻¹`, given `t` and `1 - t`.
fn kendall_ratio(family: Family, theta: f64, t: f64, one_minus_t: f64) -> f64 {
    match family {
        Family::Clayton => (t.powf(theta + 1.0) - t) / theta,
        Family::Gumbel => t * t.ln() / theta,
        Family::Frank => {
            if t < 0.5 {
                let ln_r = log1mexp(theta * t) - log1mexp(theta);
                return ln_r * (theta * t).exp_m1() / theta;
            }
            // Near t = 1, ln r is ln1p(x) with x = e^{-θt} expm1(-θ(1-t)) / c,
            // and x expm1(θt) = -expm1(-θt) expm1(-θ(1-t)) / c.
            let c = -(-theta).exp_m1();
            let x = (-theta * t).exp() * (-theta * one_minus_t).exp_m1() / c;
            let ln1p_ratio = if x == 0.0 { 1.0 } else { x.ln_1p() / x };
            ln1p_ratio * -(-theta * t).exp_m1() * (-theta * one_minus_t).exp_m1() / (c * theta)
        }
        Family::Joe => {
            let ln_omt = if t < 0.5 { (-t).ln_1p() } else { one_minus_t.ln() };
            let s = (theta * ln_omt).exp();
            let oms = -(theta * ln_omt).exp_m1();
            if s < 1e-300 {
                -one_minus_t / theta
            } else {
                let ln_oms = if s < 0.5 { (-s).ln_1p() } else { oms.ln() };
                ln_oms * oms * one_minus_t / (theta * s)
            }
        }
        Family::Independence => t * t.ln(),
    }
}

/// Kendall's tau of the family at `θ`: `1 + 4 ∫ φ/φ'` over (0, 1).
/// Clayton uses its closed form `θ / (θ + 2)`.
pub fn theta_to_tau(family: Family, theta: f64) -> Result<f64> {
    family.check_theta(theta)?;
    Ok(match family {
        Family::Clayton => theta / (theta + 2.0),
        Family::Independence => 0.0,
        Family::Gumbel | Family::Joe if theta == 1.0 => 0.0,
        _ => (1.0 + 4.0 * tanh_sinh(|t, s| kendall_ratio(family, theta, t, s))).clamp(0.0, 1.0),
    })
}

/// Inverse of [`theta_to_tau`]. Clayton uses `θ = 2 / (1/τ - 1)`; the other
/// families bisect on a geometrically grown bracket.
pub fn tau_to_theta(family: Family, tau: f64) -> Result<f64> {
    if family == Family::Independence {
        return if tau == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InvalidParameter("independence has τ = 0".into()))
        };
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("τ = {tau} must lie in (0, 1)")));
    }
    if family == Family::Clayton {
        return Ok(2.0 / (1.0 / tau - 1.0));
    }
    let floor = family.theta_floor();
    let mut lo = floor;
    let mut hi = floor + 1.0;
    while theta_to_tau(family, hi)? < tau {
        lo = hi;
        hi = floor + 2.0 * (hi - floor);
        if hi > 1e12 {
            return Err(Error::InvalidParameter(format!("τ = {tau} out of numerical range for {family}")));
        }
    }
    // Frank is undefined at θ = 0, where τ tends to 0.
    let tau_at = |theta: f64| -> Result<f64> {
        if theta <= floor {
            Ok(0.0)
        } else {
            theta_to_tau(family, theta)
        }
    };
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if tau_at(mid)? < tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frank_tau_simpson(theta: f64) -> f64 {
        // Debye function D1 by composite Simpson.
        let m = 20_000;
        let h = theta / m as f64;
        let f = |x: f64| if x == 0.0 { 1.0 } else { x / x.exp_m1() };
        let mut s = f(0.0) + f(theta);
        for i in 1..m {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let d1 = s * h / 3.0 / theta;
        1.0 - 4.0 / theta * (1.0 - d1)
    }

    fn joe_tau_series(theta: f64) -> f64 {
        let mut s = 0.0;
        for k in 1..2_000_000u64 {
            let k = k as f64;
            s += 1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0));
        }
        1.0 - 4.0 * s
    }

    #[test]
    fn clayton_closed_forms() {
        assert_eq!(tau_to_theta(Family::Clayton, 0.5).unwrap(), 2.0);
        assert!((tau_to_theta(Family::Clayton, 0.8).unwrap() - 8.0).abs() < 1e-12);
        assert!((psi_raw(Family::Clayton, 2.0, 3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn numeric_integral_matches_closed_forms() {
        for theta in [1.5, 2.0, 4.0, 10.0] {
            let g = theta_to_tau(Family::Gumbel, theta).unwrap();
            assert!((g - (1.0 - 1.0 / theta)).abs() < 1e-12, "gumbel {theta}");
            let j = theta_to_tau(Family::Joe, theta).unwrap();
            assert!((j - joe_tau_series(theta)).abs() < 1e-6, "joe {theta} {j} {}", joe_tau_series(theta));
        }
        for theta in [0.5, 2.0, 5.0, 20.0] {
            let f = theta_to_tau(Family::Frank, theta).unwrap();
            assert!((f - frank_tau_simpson(theta)).abs() < 1e-10, "frank {theta}");
        }
        // Clayton's integral agrees with its closed form.
        let num = 1.0 + 4.0 * tanh_sinh(|t, s| kendall_ratio(Family::Clayton, 3.0, t, s));
        assert!((num - 0.6).abs() < 1e-12);
    }

    #[test]
    fn maps_are_inverse() {
        for family in [Family::Clayton, Family::Gumbel, Family::Frank, Family::Joe] {
            for i in 1..20 {
                let tau = i as f64 * 0.05;
                let theta = tau_to_theta(family, tau).unwrap();
                assert!((theta_to_tau(family, theta).unwrap() - tau).abs() < 1e-9, "{family} {tau} {theta} {}", theta_to_tau(family, theta).unwrap());
            }
        }
        assert!((tau_to_theta(Family::Gumbel, 0.5).unwrap() - 2.0).abs() < 1e-9);
        assert!(tau_to_theta(Family::Gumbel, 1.0).is_err());
        assert!(tau_to_theta(Family::Frank, 0.0).is_err());
        assert!(tau_to_theta(Family::Independence, 0.0).is_ok());
    }

    #[test]
    fn generators_are_decreasing_convex_and_invertible() {
        for family in Family::ALL {
            let thetas: &[f64] = match family {
                Family::Clayton => &[0.3, 2.0, 8.0],
                Family::Frank => &[0.5, 5.0, 30.0],
                _ => &[1.0, 1.7, 6.0],
            };
            for &theta in thetas {
                assert_eq!(psi_raw(family, theta, 0.0), 1.0);
                assert!(psi_raw(family, theta, 1e30) < 1e-2, "{family} {theta}");
                let grid: Vec<f64> = (0..200).map(|i| 0.05 * i as f64).collect();
                let vals: Vec<f64> = grid.iter().map(|&t| psi_raw(family, theta, t)).collect();
                for w in vals.windows(3) {
                    assert!(w[1] <= w[0]);
                    assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
                }
                for u in [1e-6, 0.1, 0.5, 0.9, 0.999, 1.0] {
                    let back = psi_raw(family, theta, psi_inv_raw(family, theta, u));
                    assert!((back - u).abs() < 1e-12, "{family} {theta} {u}");
                }
            }
        }
    }

    #[test]
    fn family_names() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!(serde_json::to_string(&Family::Joe).unwrap(), "\"joe\"");
    }
}

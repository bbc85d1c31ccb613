//! Kendall's tau and the empirical Kendall distribution.

use super::ranks::{dense_ranks, Fenwick};
use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(Error::InvalidData(format!(
            "need at least {min} observations, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Counts strict inversions of `v` while sorting it.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if v[j] < v[i] {
                    buf[k] = v[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (hi - j)].copy_from_slice(&v[j..hi]);
            lo = hi;
        }
        v.copy_from_slice(buf);
        width *= 2;
    }
    swaps
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in 1..sorted.len() {
        if sorted[w] == sorted[w - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's tau-a: `(concordant - discordant) / C(n, 2)`; tied pairs count
/// as neither. Runs in O(n log n) by counting inversions.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as u64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let n1 = tied_pairs(&xs);
    let mut n3 = 0u64;
    let mut run = 1u64;
    for w in 1..order.len() {
        let (a, b) = (order[w - 1], order[w]);
        if x[a] == x[b] && y[a] == y[b] {
            run += 1;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    n3 += run * (run - 1) / 2;

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; ys.len()];
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys);

    let diff = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    Ok(diff as f64 / n0 as f64)
}

/// Pseudo-Kendall scores `W_i = #{j : x_j < x_i, y_j < y_i} / (n - 1)`, in
/// input order.
pub fn kendall_scores(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_pair(x, y, 2)?;
    let n = x.len();
    let (yr, m) = dense_ranks(y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut bit = Fenwick::new(m);
    let mut w = vec![0.0; n];
    let scale = 1.0 / (n as f64 - 1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            w[i] = bit.count_below(yr[i]) as f64 * scale;
        }
        for &i in &order[start..end] {
            bit.add(yr[i]);
        }
        start = end;
    }
    Ok(w)
}

/// Sorted pseudo-Kendall scores; its step CDF estimates the Kendall
/// distribution of the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct KendallDistribution {
    w: Vec<f64>,
}

impl KendallDistribution {
    pub fn from_scores(mut w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidData("empty Kendall distribution".into()));
        }
        if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidData("Kendall scores must lie in [0, 1]".into()));
        }
        w.sort_by(f64::total_cmp);
        Ok(KendallDistribution { w })
    }

    pub fn scores(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Proportion of scores `<= t`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.w.partition_point(|&v| v <= t) as f64 / self.w.len() as f64
    }
}

pub fn empirical_kendall_distribution(x: &[f64], y: &[f64]) -> Result<KendallDistribution> {
    KendallDistribution::from_scores(kendall_scores(x, y)?)
}

/// Exact `integral_0^1 (sum_m c_m F_m(t))^2 dt` where `F_m` is the
/// empirical CDF of the sorted sample `parts[m].0` and `c_m = parts[m].1`.
pub fn integrate_squared_combination(parts: &[(&[f64], f64)]) -> f64 {
    let mut events: Vec<(f64, usize)> = Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum());
    for (m, &(sample, _)) in parts.iter().enumerate() {
        events.extend(sample.iter().map(|&w| (w.clamp(0.0, 1.0), m)));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Counts are kept exactly so that the value is recomputed, not
    // accumulated; this keeps the result symmetric under reordering.
    let mut counts = vec![0usize; parts.len()];
    let value = |counts: &[usize]| -> f64 {
        parts
            .iter()
            .zip(counts)
            .map(|(&(sample, coef), &c)| coef * c as f64 / sample.len() as f64)
            .sum()
    };
    let mut v = 0.0;
    let mut t = 0.0;
    let mut total = 0.0;
    let mut idx = 0;
    while idx < events.len() {
        let p = events[idx].0;
        total += v * v * (p - t);
        t = p;
        while idx < events.len() && events[idx].0 == p {
            counts[events[idx].1] += 1;
            idx += 1;
        }
        v = value(&counts);
    }
    total + v * v * (1.0 - t)
}

/// Cramér–von Mises type distance `integral_0^1 (K_a - K_b)^2 dt` between two
/// empirical Kendall distributions.
pub fn kendall_dist_distance(a: &KendallDistribution, b: &KendallDistribution) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidData("empty Kendall distribution".into()));
    }
    Ok(integrate_squared_combination(&[(&a.w, 1.0), (&b.w, -1.0)]))
}

/// Antiderivative of `K(t) = t - t ln t`.
fn k_indep_int(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let l = t.ln();
    0.75 * t * t - 0.5 * t * t * l
}

/// Antiderivative of `K(t)^2`.
fn k_indep_sq_int(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let l = t.ln();
    let t3 = t * t * t;
    t3 / 3.0 - 2.0 * (t3 * l / 3.0 - t3 / 9.0) + (t3 * l * l / 3.0 - 2.0 * t3 * l / 9.0 + 2.0 * t3 / 27.0)
}

/// Kendall distribution of two independent variables.
#[cfg(test)]
pub(crate) fn k_indep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t - t * t.ln()
    }
}

/// Cramér–von Mises distance between the empirical Kendall distribution of
/// `(x, y)` and the independence Kendall distribution `t - t ln t`.
pub fn independence_deviation(x: &[f64], y: &[f64]) -> Result<f64> {
    let dist = empirical_kendall_distribution(x, y)?;
    Ok(deviation_from_independence(&dist))
}

pub(crate) fn deviation_from_independence(dist: &KendallDistribution) -> f64 {
    let w = &dist.w;
    let n = w.len() as f64;
    let mut total = 0.0;
    let mut t = 0.0;
    let mut count = 0usize;
    let mut idx = 0;
    let piece = |a: f64, b: f64, c: f64| {
        if b > a {
            c * c * (b - a) - 2.0 * c * (k_indep_int(b) - k_indep_int(a)) + (k_indep_sq_int(b) - k_indep_sq_int(a))
        } else {
            0.0
        }
    };
    while idx < w.len() {
        let p = w[idx];
        total += piece(t, p, count as f64 / n);
        t = p;
        while idx < w.len() && w[idx] == p {
            count += 1;
            idx += 1;
        }
    }
    total + piece(t, 1.0, count as f64 / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn tau_examples() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let t = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn tau_with_ties_matches_pair_count() {
        // Ties count as neither concordant nor discordant.
        let x = [1.0, 1.0, 2.0, 3.0, 3.0, 4.0];
        let y = [2.0, 1.0, 2.0, 5.0, 5.0, 0.0];
        let mut s = 0i64;
        for i in 0..6 {
            for j in i + 1..6 {
                let p: f64 = (x[i] - x[j]) * (y[i] - y[j]);
                s += p.signum() as i64 * i64::from(p != 0.0);
            }
        }
        assert_eq!(kendall_tau(&x, &y).unwrap(), s as f64 / 15.0);
    }

    #[test]
    fn scores_examples() {
        let w = kendall_scores(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(w, vec![0.0, 0.5, 1.0]);
        let w = kendall_scores(&[0.1, 0.2, 0.3], &[0.3, 0.2, 0.1]).unwrap();
        assert_eq!(w, vec![0.0; 3]);
        let w = kendall_scores(&[0.5, 0.5, 0.7], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn scores_are_symmetric_in_coordinates() {
        let mut rng = crate::seed::rng(3);
        let x: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let a = empirical_kendall_distribution(&x, &y).unwrap();
        let b = empirical_kendall_distribution(&y, &x).unwrap();
        assert_eq!(kendall_dist_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn comonotone_vs_countermonotone_distance() {
        // K_a jumps by 1/3 at 0, 0.5, 1; K_b is 1 from 0 onwards.
        // integral = (2/3)^2 * 0.5 + (1/3)^2 * 0.5.
        let a = KendallDistribution::from_scores(vec![0.0, 0.5, 1.0]).unwrap();
        let b = KendallDistribution::from_scores(vec![0.0, 0.0, 0.0]).unwrap();
        let expected = 0.5 * 4.0 / 9.0 + 0.5 / 9.0;
        assert!((kendall_dist_distance(&a, &b).unwrap() - expected).abs() < 1e-15);
        assert_eq!(kendall_dist_distance(&a, &b).unwrap(), kendall_dist_distance(&b, &a).unwrap());
        assert_eq!(kendall_dist_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn independence_deviation_matches_quadrature() {
        let dist = KendallDistribution::from_scores(vec![0.0, 0.1, 0.1, 0.35, 0.8]).unwrap();
        let m = 400_000;
        let h = 1.0 / m as f64;
        let quad: f64 = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                (dist.cdf(t) - k_indep(t)).powi(2) * h
            })
            .sum();
        assert!((deviation_from_independence(&dist) - quad).abs() < 1e-7);
    }

    #[test]
    fn deviation_vanishes_on_own_quantiles() {
        let n = 2000;
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let target = (i as f64 + 0.5) / n as f64;
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if k_indep(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect();
        let dist = KendallDistribution::from_scores(w).unwrap();
        assert!(deviation_from_independence(&dist) < 1e-6);
    }

    #[test]
    fn comonotone_deviation_converges() {
        let mut prev = 0.0;
        for n in [5, 20, 100, 1000] {
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            prev = independence_deviation(&x, &x).unwrap();
            assert!(prev > 0.03);
        }
        // Limit: uniform K(t) = t against t - t ln t, integral of (t ln t)^2 = 2/27.
        assert!((prev - 2.0 / 27.0).abs() < 1e-3);
    }
}

//! Hoeffding's D statistic with the usual tie corrections.

use super::ranks::{average_ranks, dense_ranks, Fenwick};
use crate::error::{Error, Result};

/// Hoeffding's D, scaled so that perfect monotone dependence without ties
/// gives 1. Requires at least 5 observations.
pub fn hoeffding_d(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 5 {
        return Err(Error::InvalidData(format!(
            "Hoeffding's D needs at least 5 observations, got {n}"
        )));
    }
    let r = average_ranks(x);
    let s = average_ranks(y);
    let q = bivariate_ranks(x, y);
    Ok(combine(&r, &s, &q))
}

fn combine(r: &[f64], s: &[f64], q: &[f64]) -> f64 {
    let n = r.len() as f64;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut d3 = 0.0;
    for i in 0..r.len() {
        d1 += (q[i] - 1.0) * (q[i] - 2.0);
        d2 += (r[i] - 1.0) * (r[i] - 2.0) * (s[i] - 1.0) * (s[i] - 2.0);
        d3 += (r[i] - 2.0) * (s[i] - 2.0) * (q[i] - 1.0);
    }
    30.0 * ((n - 2.0) * (n - 3.0) * d1 + d2 - 2.0 * (n - 2.0) * d3)
        / (n * (n - 1.0) * (n - 2.0) * (n - 3.0) * (n - 4.0))
}

/// `Q_i = 1 + #{x_j < x_i, y_j < y_i} + (#{x_j = x_i, y_j < y_i} + #{x_j < x_i, y_j = y_i}) / 2
///  + #{j != i : x_j = x_i, y_j = y_i} / 4`.
fn bivariate_ranks(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let (yr, m) = dense_ranks(y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(yr[a].cmp(&yr[b])));
    let mut bit = Fenwick::new(m);
    let mut q = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // The group is sorted by y rank, so runs of equal y are contiguous.
        let mut a = start;
        while a < end {
            let mut b = a + 1;
            while b < end && yr[order[b]] == yr[order[a]] {
                b += 1;
            }
            let rank = yr[order[a]];
            let below = bit.count_below(rank) as f64;
            let same_y = (bit.count_below(rank + 1) - bit.count_below(rank)) as f64;
            let same_x_below = (a - start) as f64;
            let both = (b - a - 1) as f64;
            for &i in &order[a..b] {
                q[i] = 1.0 + below + 0.5 * (same_x_below + same_y) + 0.25 * both;
            }
            a = b;
        }
        for &i in &order[start..end] {
            bit.add(yr[i]);
        }
        start = end;
    }
    q
}

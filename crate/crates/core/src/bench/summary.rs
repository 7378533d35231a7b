use serde::Serialize;

use super::grid::ResultRow;

/// Mean, standard error and quartiles of one column over a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnStats {
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl ColumnStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: n,
            mean,
            std_error: (var / n as f64).sqrt(),
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
        })
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub family: String,
    pub d_kl_nats: f64,
    pub d_inf_nats: f64,
    pub n_modes: u32,
    pub t_extra_bits: Option<u32>,
    pub errors: usize,
    pub steps: Option<ColumnStats>,
    pub depth: Option<ColumnStats>,
    pub payload_bits: Option<ColumnStats>,
    pub kl_bias_estimate: Option<ColumnStats>,
}

fn same_cell(a: &ResultRow, b: &ResultRow) -> bool {
    a.algorithm == b.algorithm
        && a.family == b.family
        && a.d_kl_nats.to_bits() == b.d_kl_nats.to_bits()
        && a.d_inf_nats.to_bits() == b.d_inf_nats.to_bits()
        && a.n_modes == b.n_modes
        && a.t_extra_bits == b.t_extra_bits
}

/// Groups rows by cell, keeping first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|g| same_cell(g[0], row)) {
            Some(g) => g.push(row),
            None => groups.push(vec![row]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let col = |f: fn(&ResultRow) -> Option<f64>| {
                ColumnStats::from_values(&g.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let first = g[0];
            CellSummary {
                algorithm: first.algorithm.clone(),
                family: first.family.clone(),
                d_kl_nats: first.d_kl_nats,
                d_inf_nats: first.d_inf_nats,
                n_modes: first.n_modes,
                t_extra_bits: first.t_extra_bits,
                errors: g.iter().filter(|r| r.error.is_some()).count(),
                steps: col(|r| r.steps),
                depth: col(|r| r.depth),
                payload_bits: col(|r| r.payload_bits),
                kl_bias_estimate: col(|r| r.kl_bias_estimate),
            }
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}


/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    KsResult {
        statistic,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * statistic),
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#![allow(dead_code)]

use astar_rec::distributions::{Distribution1D, PairSpec};
use astar_rec::isokl::{gaussian_from_kl_dinf, gaussian_from_mean_kl, max_kl_for_dinf};
use astar_rec::randomness::{keyed_uniform, DrawSlot, StreamKey};
use std::f64::consts::LN_2;

/// `n` independent draws from `d`, reproducible from `seed`.
pub fn draws(d: &Distribution1D, n: usize, seed: u64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            d.inv_cdf(keyed_uniform(StreamKey::new(seed, i, DrawSlot::Sample)))
                .unwrap()
        })
        .collect()
}

/// Gaussian target against `N(0, 1)` with KL `k` and D∞ `r` (nats).
pub fn pair_kr(k: f64, r: f64) -> PairSpec {
    let (mu, s2) = gaussian_from_kl_dinf(k, r).unwrap();
    PairSpec::new(
        Distribution1D::gaussian(mu, s2).unwrap(),
        Distribution1D::standard_normal(),
    )
    .unwrap()
}

/// Gaussian target with D∞ `r` and half the largest KL that D∞ allows.
pub fn pair_at_dinf(r: f64) -> PairSpec {
    pair_kr(0.5 * max_kl_for_dinf(r), r)
}

/// Zero-mean Gaussian target against `N(0, 1)` with KL of `bits` bits.
pub fn centered_pair(bits: f64) -> PairSpec {
    let s2 = gaussian_from_mean_kl(0.0, 1.0, 0.0, bits * LN_2).unwrap();
    PairSpec::new(
        Distribution1D::gaussian(0.0, s2).unwrap(),
        Distribution1D::standard_normal(),
    )
    .unwrap()
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// KL(Q || P) by quadrature of `q log(q / p)` over `[a, b]`.
pub fn numeric_kl(q: &Distribution1D, p: &Distribution1D, a: f64, b: f64) -> f64 {
    simpson(
        |x| {
            let lq = q.log_pdf(x);
            if lq == f64::NEG_INFINITY {
                0.0
            } else {
                lq.exp() * (lq - p.log_pdf(x))
            }
        },
        a,
        b,
        200_000,
    )
}

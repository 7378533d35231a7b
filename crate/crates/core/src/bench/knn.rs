use crate::error::{Error, Result};

/// Smallest distance used when two points coincide.
pub const DISTANCE_JITTER: f64 = 1e-12;

/// Distance from `x` to its `k`-th nearest neighbour in `sorted`, optionally
/// skipping the element at `skip` (the point itself).
fn kth_distance(sorted: &[f64], x: f64, k: usize, skip: Option<usize>) -> f64 {
    let pos = match skip {
        Some(i) => i,
        None => sorted.partition_point(|&v| v < x),
    };
    // left walks down from pos - 1, right walks up from pos (or pos + 1 when skipping)
    let mut left = pos as isize - 1;
    let mut right = if skip.is_some() { pos + 1 } else { pos };
    let mut d = f64::NAN;
    for _ in 0..k {
        let dl = if left >= 0 {
            x - sorted[left as usize]
        } else {
            f64::INFINITY
        };
        let dr = if right < sorted.len() {
            sorted[right] - x
        } else {
            f64::INFINITY
        };
        if dl <= dr {
            d = dl;
            left -= 1;
        } else {
            d = dr;
            right += 1;
        }
    }
    d
}

/// One-dimensional k-nearest-neighbour estimate of `D_KL(P || Q)` in nats from
/// samples of `P` and `Q`.
///
/// `(1/n) sum_i ln(nu_k(x_i) / rho_k(x_i)) + ln(m / (n - 1))`, with `rho_k` the
/// k-NN distance within `samples_p` (self excluded) and `nu_k` the k-NN distance
/// into `samples_q`. `k` must be below `n - 1` and `m - 1`. Zero distances from duplicates are replaced by
/// [`DISTANCE_JITTER`] and logged. The estimate can be negative.
pub fn knn_kl_estimate(samples_p: &[f64], samples_q: &[f64], k: usize) -> Result<f64> {
    let (n, m) = (samples_p.len(), samples_q.len());
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    // with k = n - 1 every point's neighbourhood is the whole rest of the sample
    if k + 1 >= n || k + 1 >= m {
        return Err(Error::Domain(format!(
            "k = {k} needs more than {} points per sample, got {n} and {m}",
            k + 1
        )));
    }
    if samples_p.iter().chain(samples_q).any(|v| !v.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let mut p = samples_p.to_vec();
    let mut q = samples_q.to_vec();
    p.sort_by(f64::total_cmp);
    q.sort_by(f64::total_cmp);

    let mut jittered = 0usize;
    let mut sum = 0.0;
    for (i, &x) in p.iter().enumerate() {
        let mut rho = kth_distance(&p, x, k, Some(i));
        let mut nu = kth_distance(&q, x, k, None);
        if rho == 0.0 {
            rho = DISTANCE_JITTER;
            jittered += 1;
        }
        if nu == 0.0 {
            nu = DISTANCE_JITTER;
            jittered += 1;
        }
        sum += (nu / rho).ln();
    }
    if jittered > 0 {
        log::warn!("knn_kl_estimate: {jittered} zero distances replaced by {DISTANCE_JITTER}");
    }
    Ok(sum / n as f64 + (m as f64 / (n as f64 - 1.0)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_kth(points: &[f64], x: f64, k: usize, skip: Option<usize>) -> f64 {
        let mut d: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, &v)| (v - x).abs())
            .collect();
        d.sort_by(f64::total_cmp);
        d[k - 1]
    }

    #[test]
    fn kth_distance_matches_brute_force() {
        let pts: Vec<f64> = (0..40)
            .map(|i| ((i * 37 % 41) as f64 * 0.713).sin() * 3.0)
            .collect();
        let mut sorted = pts.clone();
        sorted.sort_by(f64::total_cmp);
        for k in 1..6 {
            for (i, &x) in sorted.iter().enumerate() {
                assert_eq!(
                    kth_distance(&sorted, x, k, Some(i)),
                    brute_kth(&sorted, x, k, Some(i))
                );
            }
            for x in [-4.0, -0.3, 0.0, 1.7, 5.0] {
                assert_eq!(
                    kth_distance(&sorted, x, k, None),
                    brute_kth(&sorted, x, k, None)
                );
            }
        }
    }

    #[test]
    fn guards() {
        let a = [0.0, 1.0, 2.0];
        assert!(knn_kl_estimate(&a, &a, 0).is_err());
        assert!(knn_kl_estimate(&a, &a, a.len()).is_err());
        assert!(knn_kl_estimate(&a, &a, a.len() - 1).is_err());
        assert!(knn_kl_estimate(&a, &a, a.len() - 2).is_ok());
        assert!(knn_kl_estimate(&a, &a[..2], 1).is_err());
    }

    #[test]
    fn duplicates_are_jittered() {
        let p = [0.0, 0.0, 1.0, 2.0];
        let q = [0.0, 0.5, 1.5, 3.0];
        assert!(knn_kl_estimate(&p, &q, 1).unwrap().is_finite());
    }
}

//! Experiment harness: estimator calibration, CSV schema, reproducibility and
//! the documented grid behaviours.

mod common;

use astar_rec::bench::*;
use astar_rec::distributions::Distribution1D;
use std::path::PathBuf;

fn gaussian(mean: f64) -> Distribution1D {
    Distribution1D::gaussian(mean, 1.0).unwrap()
}

fn mean_estimate(shift: f64, n: usize, repeats: u64) -> f64 {
    let total: f64 = (0..repeats)
        .map(|r| {
            let p = common::draws(&gaussian(shift), n, 2 * r);
            let q = common::draws(&gaussian(0.0), n, 2 * r + 1);
            knn_kl_estimate(&p, &q, 1).unwrap()
        })
        .sum();
    total / repeats as f64
}

#[test]
fn knn_null_estimate_is_near_zero() {
    let m = mean_estimate(0.0, 1000, 100);
    assert!(m.abs() <= 0.05, "{m}");
}

#[test]
fn knn_recovers_known_divergences() {
    // N(sqrt(2K), 1) against N(0, 1) has KL K
    for k in [0.0f64, 0.25, 0.5, 1.0] {
        let m = mean_estimate((2.0 * k).sqrt(), 5000, 100);
        assert!((m - k).abs() <= 0.1, "K={k}: {m}");
    }
}

#[test]
fn knn_guard_rejects_degenerate_k() {
    let p = common::draws(&gaussian(0.0), 10, 1);
    assert!(knn_kl_estimate(&p, &p, 8).unwrap().is_finite());
    assert!(knn_kl_estimate(&p, &p, 9).is_err());
    assert!(knn_kl_estimate(&p, &p, 10).is_err());
}

#[test]
fn csv_header_is_stable() {
    assert_eq!(
        CSV_HEADER,
        "algorithm,family,d_kl_nats,d_inf_nats,n_modes,t_extra_bits,trial_index,steps,depth,payload_bits,kl_bias_estimate,error"
    );
    let cfg = ExperimentConfig::new(
        vec![Algorithm::AdStar],
        vec![CellSpec::Uniform { d_kl_nats: 1.0 }],
        3,
    );
    let mut out = Vec::new();
    write_csv(&run_runtime_grid(&cfg).unwrap(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(text.lines().count(), 4);
    let mut empty = Vec::new();
    write_csv(&[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
}

fn csv_with_threads(cfg: &ExperimentConfig, threads: usize, bias: bool) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let rows = if bias {
            run_bias_grid(cfg)
        } else {
            run_runtime_grid(cfg)
        }
        .unwrap();
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        out
    })
}

#[test]
fn output_is_independent_of_thread_count() {
    let mut cfg = ExperimentConfig::new(
        vec![
            Algorithm::AsStar,
            Algorithm::AdStar,
            Algorithm::Pfr,
            Algorithm::Dad,
            Algorithm::Mrc,
        ],
        vec![
            CellSpec::Gaussian {
                d_kl_nats: 0.8,
                d_inf_nats: 2.0,
            },
            CellSpec::Mixture {
                d_inf_nats: 1.0,
                n_modes: 3,
            },
        ],
        50,
    );
    cfg.seed = 17;
    assert_eq!(
        csv_with_threads(&cfg, 1, false),
        csv_with_threads(&cfg, 4, false)
    );
    cfg.bias_repeats = 3;
    cfg.batch_size = 20;
    assert_eq!(
        csv_with_threads(&cfg, 1, true),
        csv_with_threads(&cfg, 3, true)
    );
}

#[test]
fn identical_pair_takes_one_step() {
    let mut cfg = ExperimentConfig::new(
        vec![
            Algorithm::AsStar,
            Algorithm::AdStar,
            Algorithm::Pfr,
            Algorithm::Dad,
        ],
        vec![
            CellSpec::Uniform { d_kl_nats: 0.0 },
            CellSpec::Gaussian {
                d_kl_nats: 0.0,
                d_inf_nats: 0.0,
            },
        ],
        200,
    );
    cfg.extra_bits = vec![0, 3];
    for row in run_runtime_grid(&cfg).unwrap() {
        assert_eq!(row.steps, Some(1.0), "{row:?}");
    }
}

#[test]
fn pfr_steps_at_dinf_ln4() {
    let r = 4f64.ln();
    let cfg = ExperimentConfig::new(
        vec![Algorithm::Pfr],
        vec![CellSpec::Gaussian {
            d_kl_nats: 0.5 * astar_rec::isokl::max_kl_for_dinf(r),
            d_inf_nats: r,
        }],
        1000,
    );
    let s = &summarize(&run_runtime_grid(&cfg).unwrap())[0];
    let m = s.steps.unwrap().mean;
    assert!((2.0..=8.0).contains(&m), "{m}");
}

#[test]
fn failed_trials_are_recorded_and_the_run_continues() {
    let mut cfg = ExperimentConfig::new(
        vec![Algorithm::Pfr, Algorithm::AdStar],
        vec![CellSpec::Uniform { d_kl_nats: 5.0 }],
        20,
    );
    cfg.pfr_max_steps = 2;
    let rows = run_runtime_grid(&cfg).unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows
        .iter()
        .filter(|r| r.algorithm == "pfr")
        .any(|r| r.error.is_some() && r.steps.is_none()));
    assert!(rows
        .iter()
        .filter(|r| r.algorithm == "ad_star")
        .all(|r| r.error.is_none()));
}

#[test]
fn pfr_is_skipped_beyond_its_dinf_limit() {
    let mut cfg = ExperimentConfig::new(
        vec![Algorithm::Pfr],
        vec![CellSpec::Uniform { d_kl_nats: 3.0 }],
        5,
    );
    cfg.pfr_max_dinf_nats = 2.0;
    assert!(run_runtime_grid(&cfg).unwrap().is_empty());
}

#[test]
fn bias_of_identical_pair_is_estimator_noise() {
    let mut cfg = ExperimentConfig::new(
        vec![Algorithm::Dad, Algorithm::Mrc],
        vec![CellSpec::Uniform { d_kl_nats: 0.0 }],
        1,
    );
    cfg.extra_bits = vec![0, 2];
    cfg.bias_repeats = 30;
    for s in summarize(&run_bias_grid(&cfg).unwrap()) {
        let b = s.kl_bias_estimate.unwrap();
        assert!(b.mean.abs() <= 3.0 * b.std_error + 0.02, "{s:?}");
    }
}

#[test]
fn mode_sweep_holds_dinf_fixed() {
    let cells = [1, 2, 5, 9]
        .iter()
        .map(|&m| CellSpec::Mixture {
            d_inf_nats: 1.5,
            n_modes: m,
        })
        .collect();
    let rows = run_mode_sweep(&ExperimentConfig::new(vec![Algorithm::AdStar], cells, 10)).unwrap();
    for row in &rows {
        assert!((row.d_inf_nats - 1.5).abs() < 1e-12, "{row:?}");
        assert!((row.d_kl_nats - 1.5).abs() < 1e-12, "{row:?}");
    }
    let mixed = ExperimentConfig::new(
        vec![Algorithm::AdStar],
        vec![CellSpec::Uniform { d_kl_nats: 1.0 }],
        1,
    );
    assert!(run_mode_sweep(&mixed).is_err());
}

#[test]
fn config_validation() {
    let ok = r#"{"algorithms":["ad_star"],"cells":[{"family":"uniform","d_kl_nats":1.0}]}"#;
    let cfg = ExperimentConfig::from_json(ok).unwrap();
    assert_eq!(
        (cfg.trials, cfg.extra_bits.clone(), cfg.batch_size),
        (1, vec![2], 100)
    );
    for bad in [
        r#"{"algorithms":[],"cells":[{"family":"uniform","d_kl_nats":1.0}]}"#,
        r#"{"algorithms":["ad_star"],"cells":[]}"#,
        r#"{"algorithms":["ad_star"],"cells":[{"family":"uniform","d_kl_nats":1.0}],"trials":0}"#,
        r#"{"algorithms":["ad_star"],"cells":[{"family":"gaussian","d_kl_nats":3.0,"d_inf_nats":1.0}]}"#,
        r#"{"algorithms":["ad_star"],"cells":[{"family":"uniform","d_kl_nats":1.0}],"version":2}"#,
        r#"{"algorithms":["ad_star"],"cells":[{"family":"uniform","d_kl_nats":1.0}],"bogus":1}"#,
    ] {
        assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut grids = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if text.contains("\"algorithms\"") {
            ExperimentConfig::from_json(&text)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            grids += 1;
        }
    }
    assert!(grids >= 5);
}

#[test]
fn shrinkage_report_examples() {
    let dy = verify_shrinkage(astar_rec::PartitionKind::Dyadic, 4, 1000, 0).unwrap();
    assert_eq!(dy.depths[3].mean_mass, 0.125);
    let ss = verify_shrinkage(astar_rec::PartitionKind::SampleSplit, 6, 5000, 0).unwrap();
    assert_eq!(ss.depths[0].mean_mass, 1.0);
    assert!(ss.passed, "{ss:?}");
}

#[test]
fn dad_bias_falls_with_extra_bits_for_reference_pair() {
    // N(0, 0.25) against N(0, 1)
    let kl = 0.5 * (0.25 - 1.0 - 0.25f64.ln());
    let mut cfg = ExperimentConfig::new(
        vec![Algorithm::Dad],
        vec![CellSpec::GaussianCentered { d_kl_nats: kl }],
        1,
    );
    cfg.extra_bits = vec![0, 1, 2, 3, 4];
    cfg.bias_repeats = 50;
    cfg.seed = 4;
    let cells = summarize(&run_bias_grid(&cfg).unwrap());
    let bias: Vec<_> = cells.iter().map(|c| c.kl_bias_estimate.unwrap()).collect();
    for w in bias.windows(2) {
        assert!(
            w[1].mean <= w[0].mean + 2.0 * w[0].std_error.hypot(w[1].std_error),
            "{bias:?}"
        );
    }
    assert!(
        bias[4].mean.abs() <= 3.0 * bias[4].std_error + 0.02,
        "{bias:?}"
    );
}

#[test]
fn dad_bias_with_many_extra_bits_matches_exact_control() {
    let r = 2.0;
    let cell = CellSpec::Gaussian {
        d_kl_nats: 0.9 * astar_rec::isokl::max_kl_for_dinf(r),
        d_inf_nats: r,
    };
    let mut cfg = ExperimentConfig::new(vec![Algorithm::Dad, Algorithm::AdStar], vec![cell], 1);
    cfg.extra_bits = vec![8];
    cfg.bias_repeats = 50;
    cfg.seed = 21;
    let cells = summarize(&run_bias_grid(&cfg).unwrap());
    let dad = cells
        .iter()
        .find(|c| c.algorithm == "dad")
        .unwrap()
        .kl_bias_estimate
        .unwrap();
    let exact = cells
        .iter()
        .find(|c| c.algorithm == "ad_star")
        .unwrap()
        .kl_bias_estimate
        .unwrap();
    assert!(
        (dad.mean - exact.mean).abs() <= 3.0 * dad.std_error.hypot(exact.std_error),
        "{dad:?} {exact:?}"
    );
}

#[test]
fn single_mode_is_fastest_for_tree_searches() {
    let cells = [1, 2, 4, 8, 16]
        .iter()
        .map(|&m| CellSpec::Mixture {
            d_inf_nats: 3.0,
            n_modes: m,
        })
        .collect();
    let cfg = ExperimentConfig::new(vec![Algorithm::AsStar, Algorithm::AdStar], cells, 500);
    let cells = summarize(&run_mode_sweep(&cfg).unwrap());
    for alg in ["as_star", "ad_star"] {
        let steps: Vec<f64> = cells
            .iter()
            .filter(|c| c.algorithm == alg)
            .map(|c| c.steps.unwrap().mean)
            .collect();
        assert!(steps[1..].iter().all(|&s| s > steps[0]), "{alg}: {steps:?}");
    }
}

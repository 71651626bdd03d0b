use aris_core::channels::{mmw_matrix, rayleigh_matrix, sample_cn, MmwParams, RngSeed};
use aris_core::linalg::CMatrix;

#[test]
fn mmwave_second_moment_matches_path_count() {
    let (rx, tx, clusters, subpaths, var) = (6, 4, 3, 4, 2.0);
    let params = MmwParams::new(clusters, subpaths, var, 30.0);
    let draws = 10_000;
    let total: f64 = (0..draws)
        .map(|i| mmw_matrix::<f64>(rx, tx, &params, RngSeed(3).derive(&[i])).unwrap().norm_squared())
        .sum();
    let expected = (rx * tx * clusters * subpaths) as f64 * var;
    let mean = total / draws as f64;
    assert!((mean / expected - 1.0).abs() < 0.03, "mean {mean}, expected {expected}");
}

#[test]
fn rayleigh_entries_have_gaussian_kurtosis() {
    let mut rng = RngSeed(17).rng();
    let n = 1_000_000;
    let (mut m2, mut m4) = (0.0, 0.0);
    for _ in 0..n {
        let re = sample_cn::<f64, _>(&mut rng, 1.0).re;
        m2 += re * re;
        m4 += re.powi(4);
    }
    let (m2, m4) = (m2 / n as f64, m4 / n as f64);
    assert!((m2 - 0.5).abs() < 0.01, "variance {m2}");
    let kurtosis = m4 / (m2 * m2);
    assert!((kurtosis - 3.0).abs() < 0.1, "kurtosis {kurtosis}");
}

#[test]
fn rayleigh_power_scales_with_variance() {
    let a: CMatrix<f64> = rayleigh_matrix(200, 200, 1.0, RngSeed(5)).unwrap();
    let b: CMatrix<f64> = rayleigh_matrix(200, 200, 10.0, RngSeed(5)).unwrap();
    assert!((a.norm_squared() / 40_000.0 - 1.0).abs() < 0.02);
    assert!((b.norm_squared() / a.norm_squared() - 10.0).abs() < 1e-9);
}

#[test]
fn generators_are_deterministic_per_seed() {
    let p = MmwParams::tx_to_ris(2, 3, 1.0);
    let a: CMatrix<f64> = mmw_matrix(8, 4, &p, RngSeed(1)).unwrap();
    let b: CMatrix<f64> = mmw_matrix(8, 4, &p, RngSeed(1)).unwrap();
    let c: CMatrix<f64> = mmw_matrix(8, 4, &p, RngSeed(2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let single: CMatrix<f32> = mmw_matrix(8, 4, &p, RngSeed(1)).unwrap();
    assert!((single[(3, 2)].re as f64 - a[(3, 2)].re).abs() < 1e-4);
}

#[test]
fn mmwave_rejects_empty_geometry() {
    assert!(mmw_matrix::<f64>(0, 4, &MmwParams::tx_to_rx(1, 1, 1.0), RngSeed(0)).is_err());
    assert!(mmw_matrix::<f64>(4, 4, &MmwParams::tx_to_rx(0, 1, 1.0), RngSeed(0)).is_err());
}

mod common;

use common::{t_cdf_quadrature, t_quantile_quadrature, welch_textbook};
use mamnet::eval::{confidence_interval, student_t_cdf, student_t_quantile, welch_t_test};
use mamnet::numerics::Rng;

#[test]
fn t_cdf_matches_quadrature() {
    for &df in &[1.0, 2.0, 3.5, 4.0, 9.0, 30.0] {
        for &t in &[-6.0, -2.0, -0.3, 0.0, 0.7, 1.5, 4.3027, 12.0] {
            let got = student_t_cdf(t, df);
            let want = t_cdf_quadrature(t, df);
            assert!((got - want).abs() < 1e-9, "df {df} t {t}: {got} vs {want}");
        }
    }
}

#[test]
fn t_quantile_matches_numeric_inversion() {
    for &df in &[1.0, 2.0, 4.0, 7.3, 19.0] {
        for &p in &[0.6, 0.9, 0.975, 0.995] {
            let got = student_t_quantile(p, df);
            let want = t_quantile_quadrature(p, df);
            assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "df {df} p {p}: {got} vs {want}");
        }
    }
}

#[test]
fn ci_of_one_two_three() {
    let ci = confidence_interval(&[1.0, 2.0, 3.0], 0.95).unwrap();
    let half = t_quantile_quadrature(0.975, 2.0) / 3f64.sqrt();
    assert!((ci.mean - 2.0).abs() < 1e-12);
    assert!((ci.half_width() - 2.484).abs() < 1e-3);
    assert!((ci.half_width() - half).abs() < 1e-6);
}

#[test]
fn welch_matches_textbook_on_random_pairs() {
    let mut rng = Rng::new(2024);
    assert_pair(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]);
    for _ in 0..100 {
        let na = 2 + rng.below(10);
        let nb = 2 + rng.below(10);
        let (ma, sa) = (rng.uniform(-2.0, 2.0), rng.uniform(0.1, 3.0));
        let (mb, sb) = (rng.uniform(-2.0, 2.0), rng.uniform(0.1, 3.0));
        let a: Vec<f64> = (0..na).map(|_| ma + sa * rng.normal()).collect();
        let b: Vec<f64> = (0..nb).map(|_| mb + sb * rng.normal()).collect();
        assert_pair(&a, &b);
    }
}

fn assert_pair(a: &[f64], b: &[f64]) {
    let got = welch_t_test(a, b).unwrap();
    let (t, df, p) = welch_textbook(a, b);
    assert!((got.t - t).abs() < 1e-6 * t.abs().max(1.0), "t {} vs {t}", got.t);
    assert!((got.df - df).abs() < 1e-6 * df.max(1.0), "df {} vs {df}", got.df);
    assert!((got.p - p).abs() < 1e-6, "p {} vs {p}", got.p);
}

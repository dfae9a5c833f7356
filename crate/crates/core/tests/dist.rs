use halfnormal::dist::*;
use halfnormal::rng::RngSeed;
use halfnormal::specfun::{half_min_constant, norm_cdf, QuadratureSpec};

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / k).abs().max(((i + 1) as f64 / k - f).abs())
        })
        .fold(0.0, f64::max)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
    (m, (v / k).sqrt())
}

#[test]
fn standardized_draws_pass_ks() {
    let p = HalfNormalParams::new(-2.0, 3.0).unwrap();
    let y = sample(&p, 100_000, RngSeed(1)).unwrap();
    let z: Vec<f64> = y.values().iter().map(|v| (v + 2.0) / 3.0).collect();
    let d = ks_statistic(z, |x| 2.0 * norm_cdf(x) - 1.0);
    assert!(d < 1.63 / (1e5f64).sqrt(), "KS = {d}");
}

#[test]
fn sample_mean_in_clt_band() {
    let y = sample(&HalfNormalParams::standard(), 1_000_000, RngSeed(2)).unwrap();
    let (mu, var) = mean_var(&HalfNormalParams::standard());
    assert!((y.mean() - mu).abs() < 4.0 * (var / 1e6).sqrt());
}

#[test]
fn moments_match_monte_carlo() {
    let p = HalfNormalParams::new(5.0, 2.0).unwrap();
    let (mu, var) = mean_var(&p);
    let y = sample(&p, 1_000_000, RngSeed(3)).unwrap();
    let k = 1e6;
    assert!((y.mean() - mu).abs() < 4.0 * (var / k).sqrt());
    // Var(S²) ≈ (μ₄ − σ⁴)/k; μ₄ of |Z| is 3, so bound it generously by 3η⁴
    let var_se = (3.0 * 16.0 / k).sqrt();
    assert!((y.variance() - var).abs() < 4.0 * var_se);
}

#[test]
fn expected_minimum_is_xi_plus_eta_c_n() {
    let p = HalfNormalParams::new(10.0, 4.0).unwrap();
    for n in [5usize, 20] {
        let mins: Vec<f64> = (0..20_000u64)
            .map(|r| sample(&p, n, RngSeed(1000 + r)).unwrap().min())
            .collect();
        let (m, se) = mean_and_se(&mins);
        let c = half_min_constant(n as u32, &QuadratureSpec::default()).unwrap();
        assert!((m - (10.0 + 4.0 * c)).abs() < 4.0 * se, "n = {n}: {m}");
    }
}

#[test]
fn bivariate_normal_correlation_and_marginal() {
    let pairs = sample_bivariate_normal(0.5, 1_000_000, RngSeed(4)).unwrap();
    let k = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let r = sxy / (sxx * syy).sqrt();
    assert!((r - 0.5).abs() < 4.0 / k.sqrt(), "r = {r}");
    let first: Vec<f64> = pairs.iter().take(100_000).map(|p| p.0).collect();
    assert!(ks_statistic(first, norm_cdf) < 1.63 / (1e5f64).sqrt());
}

#[test]
fn cdf_and_pdf_agree() {
    let p = HalfNormalParams::new(1.0, 2.0).unwrap();
    // trapezoid integral of the pdf against the cdf
    let (a, b, steps) = (1.0, 6.0, 200_000);
    let h = (b - a) / steps as f64;
    let mut acc = 0.5 * (pdf(&p, a) + pdf(&p, b));
    for i in 1..steps {
        acc += pdf(&p, a + i as f64 * h);
    }
    assert!((acc * h - cdf(&p, b)).abs() < 1e-9);
    assert_eq!(cdf(&p, 0.5), 0.0);
}

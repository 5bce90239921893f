use jps_core::linear_model::{
    build_outcome_row, fit_ols, fit_ols_pruned, normal_density, DesignSpec, Matrix, OutcomeVariant, Term,
};
use jps_core::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("c{j}")).collect()
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Matrix, Vec<f64>) {
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        for j in 0..p {
            data.push(if j == p - 1 { 1.0 } else { rng.gen_range(-2.0..2.0) });
        }
    }
    let y = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    (Matrix::from_row_major(n, p, data).unwrap(), y)
}

fn normal_equations(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let xm = DMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j));
    let ym = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let xty = xm.transpose() * ym;
    xtx.cholesky().unwrap().solve(&xty).iter().copied().collect()
}

#[test]
fn matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(20..200);
        let p = rng.gen_range(2..8);
        let (x, y) = random_problem(&mut rng, n, p);
        let fit = fit_ols(&x, &y, &names(p)).unwrap();
        for (a, b) in fit.coefficients.iter().zip(normal_equations(&x, &y)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn residuals_are_orthogonal_to_design() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (x, y) = random_problem(&mut rng, 300, 6);
    let fit = fit_ols(&x, &y, &names(6)).unwrap();
    let resid: Vec<f64> = (0..x.rows()).map(|i| y[i] - fit.predict(x.row(i))).collect();
    for j in 0..x.cols() {
        let dot: f64 = (0..x.rows()).map(|i| x.get(i, j) * resid[i]).sum();
        assert!(dot.abs() < 1e-9);
    }
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    assert!((fit.rss - rss).abs() < 1e-9 * rss);
    assert!((fit.sigma - (rss / 300.0).sqrt()).abs() < 1e-12);
}

#[test]
fn exact_recovery_without_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (x, _) = random_problem(&mut rng, 40, 4);
    let beta = [0.5, -1.25, 2.0, 3.0];
    let y: Vec<f64> = (0..40)
        .map(|i| x.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum())
        .collect();
    let fit = fit_ols(&x, &y, &names(4)).unwrap();
    for (a, b) in fit.coefficients.iter().zip(&beta) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(fit.rss < 1e-20);
}

#[test]
fn singular_design_names_columns() {
    let rows: Vec<[f64; 3]> = (0..10).map(|i| [i as f64, 2.0 * i as f64, 1.0]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let y: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 + 1.0).collect();
    let terms = vec!["a".to_string(), "b".to_string(), "const".to_string()];
    match fit_ols(&x, &y, &terms) {
        Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["b".to_string()]),
        other => panic!("expected singular design, got {other:?}"),
    }
    let (fit, dropped) = fit_ols_pruned(&x, &y, &terms).unwrap();
    assert_eq!(dropped, vec!["b".to_string()]);
    assert!((fit.coefficient("a").unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn too_few_rows() {
    let x = Matrix::from_rows(&[[1.0, 2.0, 1.0], [2.0, 1.0, 1.0]]).unwrap();
    assert!(matches!(
        fit_ols(&x, &[1.0, 2.0], &names(3)),
        Err(Error::InsufficientRows { .. })
    ));
}

#[test]
fn outcome_designs_have_expected_shape() {
    let with = DesignSpec::outcome(OutcomeVariant::WithInterference);
    assert_eq!(with.width(), 16);
    let without = DesignSpec::outcome(OutcomeVariant::WithoutInterference);
    assert_eq!(without.width(), 8);
    let mut row = Vec::new();
    build_outcome_row(2.0, 3.0, 0.5, 0.25, OutcomeVariant::WithInterference, &mut row);
    assert_eq!(
        row,
        vec![2.0, 4.0, 8.0, 0.5, 0.25, 0.125, 1.0, 3.0, 9.0, 27.0, 0.25, 0.0625, 0.015625, 0.75, 6.0, 1.0]
    );
    let lookup_z = [2.0];
    let lookup_g = [3.0];
    let lookup_phi = [0.5];
    let lookup_l = [0.25];
    let built = with
        .build(1, |name| match name {
            "z" => Some(&lookup_z[..]),
            "g" => Some(&lookup_g[..]),
            "phi" => Some(&lookup_phi[..]),
            "lambda" => Some(&lookup_l[..]),
            _ => None,
        })
        .unwrap();
    assert_eq!(built.row(0), &row[..]);
}

#[test]
fn duplicate_terms_are_rejected() {
    assert!(DesignSpec::new(vec![Term::raw("a"), Term::raw("a")], true).is_err());
}

#[test]
fn density_integrates_to_one() {
    let (mean, sd) = (0.7, 1.3);
    let (lo, hi, m) = (mean - 12.0 * sd, mean + 12.0 * sd, 20_000);
    let h = (hi - lo) / m as f64;
    // Composite Simpson.
    let mut total = normal_density(lo, mean, sd).unwrap() + normal_density(hi, mean, sd).unwrap();
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * normal_density(lo + i as f64 * h, mean, sd).unwrap();
    }
    assert!((total * h / 3.0 - 1.0).abs() < 1e-12);
    assert!(normal_density(0.0, 0.0, 0.0).is_err());
}

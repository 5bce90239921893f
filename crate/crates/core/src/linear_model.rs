//! Gaussian linear models: least squares by Householder QR, normal
//! densities, and design-row construction for the treatment and outcome
//! models.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{abs, compensated_sum, exp, sqrt};

/// A column is treated as linearly dependent when its diagonal factor falls
/// below this fraction of the largest one (columns are unit-normalized first).
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            data.extend(keep.iter().map(|&j| self.get(i, j)));
        }
        Self {
            rows: self.rows,
            cols: keep.len(),
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Raw,
    Square,
    Cube,
    Interaction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub kind: TermKind,
    pub operands: Vec<String>,
}

impl Term {
    pub fn raw(name: &str) -> Self {
        Self {
            kind: TermKind::Raw,
            operands: alloc::vec![name.into()],
        }
    }

    pub fn square(name: &str) -> Self {
        Self {
            kind: TermKind::Square,
            operands: alloc::vec![name.into()],
        }
    }

    pub fn cube(name: &str) -> Self {
        Self {
            kind: TermKind::Cube,
            operands: alloc::vec![name.into()],
        }
    }

    pub fn interaction(a: &str, b: &str) -> Self {
        Self {
            kind: TermKind::Interaction,
            operands: alloc::vec![a.into(), b.into()],
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            TermKind::Raw => self.operands[0].clone(),
            TermKind::Square => format!("{}^2", self.operands[0]),
            TermKind::Cube => format!("{}^3", self.operands[0]),
            TermKind::Interaction => self.operands.join("*"),
        }
    }

    fn eval(&self, values: &[f64]) -> f64 {
        match self.kind {
            TermKind::Raw => values[0],
            TermKind::Square => values[0] * values[0],
            TermKind::Cube => values[0] * values[0] * values[0],
            TermKind::Interaction => values.iter().product(),
        }
    }
}

pub const INTERCEPT_NAME: &str = "const";

/// Ordered term list; the intercept, when present, is the last column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    pub terms: Vec<Term>,
    pub intercept: bool,
}

impl DesignSpec {
    pub fn new(terms: Vec<Term>, intercept: bool) -> Result<Self> {
        let spec = Self { terms, intercept };
        let names = spec.column_names();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateTerm(name.clone()));
            }
        }
        for t in &spec.terms {
            let arity_ok = match t.kind {
                TermKind::Interaction => t.operands.len() >= 2,
                _ => t.operands.len() == 1,
            };
            if !arity_ok {
                return Err(Error::InvalidArgument("term arity"));
            }
        }
        Ok(spec)
    }

    /// Raw columns followed by an intercept.
    pub fn linear(columns: &[String]) -> Result<Self> {
        Self::new(columns.iter().map(|c| Term::raw(c)).collect(), true)
    }

    /// Outcome-model term list for the given variant.
    pub fn outcome(variant: OutcomeVariant) -> Self {
        let mut terms = alloc::vec![
            Term::raw("z"),
            Term::square("z"),
            Term::cube("z"),
            Term::raw("phi"),
            Term::square("phi"),
            Term::cube("phi"),
            Term::interaction("z", "phi"),
        ];
        if variant == OutcomeVariant::WithInterference {
            terms.extend([
                Term::raw("g"),
                Term::square("g"),
                Term::cube("g"),
                Term::raw("lambda"),
                Term::square("lambda"),
                Term::cube("lambda"),
                Term::interaction("g", "lambda"),
                Term::interaction("z", "g"),
            ]);
        }
        Self {
            terms,
            intercept: true,
        }
    }

    pub fn width(&self) -> usize {
        self.terms.len() + usize::from(self.intercept)
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.terms.iter().map(Term::name).collect();
        if self.intercept {
            names.push(INTERCEPT_NAME.to_string());
        }
        names
    }

    /// Builds the `n x width` design from named columns.
    pub fn build<'a, F>(&self, n: usize, lookup: F) -> Result<Matrix>
    where
        F: Fn(&str) -> Option<&'a [f64]>,
    {
        let mut operand_cols: Vec<Vec<&'a [f64]>> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut cols = Vec::with_capacity(t.operands.len());
            for op in &t.operands {
                let col = lookup(op).ok_or_else(|| Error::MissingCovariate(op.clone()))?;
                if col.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        actual: col.len(),
                    });
                }
                cols.push(col);
            }
            operand_cols.push(cols);
        }
        let width = self.width();
        let mut m = Matrix::zeros(n, width);
        let mut buf = Vec::new();
        for i in 0..n {
            for (j, (t, cols)) in self.terms.iter().zip(&operand_cols).enumerate() {
                buf.clear();
                buf.extend(cols.iter().map(|c| c[i]));
                m.set(i, j, t.eval(&buf));
            }
            if self.intercept {
                m.set(i, width - 1, 1.0);
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeVariant {
    WithInterference,
    WithoutInterference,
}

impl OutcomeVariant {
    pub fn width(self) -> usize {
        match self {
            Self::WithInterference => 16,
            Self::WithoutInterference => 8,
        }
    }
}

/// Outcome design row, in the same column order as [`DesignSpec::outcome`]:
/// `[z, z², z³, φ, φ², φ³, zφ, g, g², g³, λ, λ², λ³, gλ, zg, 1]` with
/// interference, `[z, z², z³, φ, φ², φ³, zφ, 1]` without.
pub fn build_outcome_row(
    z: f64,
    g: f64,
    phi: f64,
    lambda: f64,
    variant: OutcomeVariant,
    row: &mut Vec<f64>,
) {
    row.clear();
    row.extend_from_slice(&[z, z * z, z * z * z, phi, phi * phi, phi * phi * phi, z * phi]);
    if variant == OutcomeVariant::WithInterference {
        row.extend_from_slice(&[
            g,
            g * g,
            g * g * g,
            lambda,
            lambda * lambda,
            lambda * lambda * lambda,
            g * lambda,
            z * g,
        ]);
    }
    row.push(1.0);
}

/// Gaussian density.
pub fn normal_density(x: f64, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Domain("normal density needs sd > 0"));
    }
    let u = (x - mean) / sd;
    Ok(exp(-0.5 * u * u) / (sd * sqrt(2.0 * PI)))
}

/// Least-squares fit with maximum-likelihood residual scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Conventional standard errors, using the `n - p` residual variance.
    pub std_errors: Vec<f64>,
    /// `sqrt(RSS / n)`.
    pub sigma: f64,
    pub n: usize,
    pub rss: f64,
}

impl LinearFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.coefficients.len());
        dot(&self.coefficients, row)
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ordinary least squares via Householder QR on unit-normalized columns.
///
/// Fails with [`Error::SingularDesign`] naming every column whose diagonal
/// factor is below [`RANK_TOLERANCE`] relative to the largest.
pub fn fit_ols(design: &Matrix, response: &[f64], terms: &[String]) -> Result<LinearFit> {
    let (n, p) = (design.rows(), design.cols());
    if response.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: response.len(),
        });
    }
    if terms.len() != p {
        return Err(Error::LengthMismatch {
            expected: p,
            actual: terms.len(),
        });
    }
    if n < p || p == 0 {
        return Err(Error::InsufficientRows { rows: n, cols: p });
    }
    if design.data.iter().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares input"));
    }

    // Column-major working copy, each column scaled to unit norm.
    let mut norms = Vec::with_capacity(p);
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut zero_cols = Vec::new();
    for j in 0..p {
        let col = design.column(j);
        let norm = sqrt(compensated_sum(col.iter().map(|v| v * v)));
        if norm == 0.0 {
            zero_cols.push(terms[j].clone());
        }
        let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        a.push(col.iter().map(|v| v * inv).collect());
        norms.push(norm);
    }
    if !zero_cols.is_empty() {
        return Err(Error::SingularDesign { columns: zero_cols });
    }

    let mut qty = response.to_vec();
    let mut diag = alloc::vec![0.0; p];
    for k in 0..p {
        let alpha = {
            let s = sqrt(compensated_sum(a[k][k..].iter().map(|v| v * v)));
            if a[k][k] > 0.0 {
                -s
            } else {
                s
            }
        };
        diag[k] = alpha;
        if alpha == 0.0 {
            continue;
        }
        // Householder vector v = x - alpha e1, stored in a[k][k..].
        a[k][k] -= alpha;
        let vnorm2 = compensated_sum(a[k][k..].iter().map(|v| v * v));
        if vnorm2 == 0.0 {
            continue;
        }
        let (head, tail) = a.split_at_mut(k + 1);
        let v = &head[k][k..];
        for col in tail.iter_mut() {
            let s = 2.0 * dot(v, &col[k..]) / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(v) {
                *c -= s * vi;
            }
        }
        let s = 2.0 * dot(v, &qty[k..]) / vnorm2;
        for (c, vi) in qty[k..].iter_mut().zip(v) {
            *c -= s * vi;
        }
    }

    let largest = diag.iter().fold(0.0f64, |m, d| m.max(abs(*d)));
    let singular: Vec<String> = (0..p)
        .filter(|&j| abs(diag[j]) < RANK_TOLERANCE * largest)
        .map(|j| terms[j].clone())
        .collect();
    if !singular.is_empty() {
        return Err(Error::SingularDesign { columns: singular });
    }

    // R[i][j] = a[j][i] for i < j, diag on the diagonal.
    let r = |i: usize, j: usize| if i == j { diag[i] } else { a[j][i] };
    let mut scaled = alloc::vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc -= r(i, j) * scaled[j];
        }
        scaled[i] = acc / r(i, i);
    }
    let coefficients: Vec<f64> = scaled.iter().zip(&norms).map(|(b, s)| b / s).collect();

    let rss = compensated_sum((0..n).map(|i| {
        let e = response[i] - dot(design.row(i), &coefficients);
        e * e
    }));

    // diag((R^T R)^-1) = row norms of R^-1, then undo the column scaling.
    let mut rinv = alloc::vec![0.0; p * p];
    for j in 0..p {
        rinv[j * p + j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let mut acc = 0.0;
            for m in i + 1..=j {
                acc += r(i, m) * rinv[m * p + j];
            }
            rinv[i * p + j] = -acc / r(i, i);
        }
    }
    let s2 = if n > p { rss / (n - p) as f64 } else { f64::NAN };
    let std_errors = (0..p)
        .map(|i| {
            let row = &rinv[i * p..(i + 1) * p];
            sqrt(s2 * row.iter().map(|v| v * v).sum::<f64>()) / norms[i]
        })
        .collect();

    Ok(LinearFit {
        terms: terms.to_vec(),
        coefficients,
        std_errors,
        sigma: sqrt(rss / n as f64),
        n,
        rss,
    })
}

/// Like [`fit_ols`], but drops columns flagged as linearly dependent and
/// refits. Returns the fit over the kept columns and the dropped names.
pub fn fit_ols_pruned(
    design: &Matrix,
    response: &[f64],
    terms: &[String],
) -> Result<(LinearFit, Vec<String>)> {
    let mut keep: Vec<usize> = (0..design.cols()).collect();
    let mut dropped = Vec::new();
    loop {
        let sub = design.select_columns(&keep);
        let names: Vec<String> = keep.iter().map(|&j| terms[j].clone()).collect();
        match fit_ols(&sub, response, &names) {
            Ok(fit) => return Ok((fit, dropped)),
            Err(Error::SingularDesign { columns }) => {
                // Drop only the last flagged column; earlier ones may recover.
                let Some(bad) = columns.last() else {
                    return Err(Error::SingularDesign { columns });
                };
                let pos = names.iter().rposition(|n| n == bad).unwrap();
                dropped.push(names[pos].clone());
                keep.remove(pos);
                if keep.is_empty() {
                    return Err(Error::SingularDesign { columns: dropped });
                }
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn exact_interpolation() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 1.0]]).unwrap();
        let fit = fit_ols(&x, &[1.0, 3.0], &names(2)).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-14);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-14);
        assert!(fit.rss < 1e-28);
        assert!(fit.sigma < 1e-14);
    }

    #[test]
    fn orthogonal_response_gives_zero_slope() {
        // Centered regressor, response symmetric about it.
        let x = Matrix::from_rows(&[[-1.0, 1.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let fit = fit_ols(&x, &[2.0, 5.0, 2.0], &names(2)).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-14);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_design_names_column() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 1.0], [2.0, 4.0, 1.0], [3.0, 6.0, 1.0], [4.0, 8.0, 1.0]])
            .unwrap();
        let terms = vec!["a".to_string(), "twice_a".to_string(), "const".to_string()];
        match fit_ols(&x, &[1.0, 2.0, 3.0, 5.0], &terms) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec!["twice_a"]),
            other => panic!("{other:?}"),
        }
        let (fit, dropped) = fit_ols_pruned(&x, &[1.0, 2.0, 3.0, 5.0], &terms).unwrap();
        assert_eq!(dropped, vec!["twice_a"]);
        assert_eq!(fit.terms, vec!["a", "const"]);
    }

    #[test]
    fn zero_column_is_singular() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            fit_ols(&x, &[1.0, 2.0, 3.0], &names(2)),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            fit_ols(&x, &[1.0], &names(2)),
            Err(Error::InsufficientRows { .. })
        ));
    }

    #[test]
    fn simple_regression_standard_error() {
        // y = 1 + 2x + e on x = 0..4 with residuals (0.1, -0.1, 0, 0.1, -0.1):
        // slope se = sqrt(s2 / Sxx), s2 = RSS / (n - 2).
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let e = [0.1, -0.1, 0.0, 0.1, -0.1];
        let rows: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 1.0]).collect();
        let y: Vec<f64> = xs.iter().zip(e).map(|(x, e)| 1.0 + 2.0 * x + e).collect();
        let fit = fit_ols(&Matrix::from_rows(&rows).unwrap(), &y, &names(2)).unwrap();
        let xbar = 2.0;
        let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        let se = (fit.rss / 3.0 / sxx).sqrt();
        assert!((fit.std_errors[0] - se).abs() < 1e-12);
        assert!((fit.sigma - (fit.rss / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn density_constants() {
        let peak = normal_density(0.0, 0.0, 1.0).unwrap();
        assert!((peak - 0.398942280401).abs() < 1e-9);
        let one_sd = normal_density(1.0, 0.0, 1.0).unwrap();
        assert!((one_sd - 0.241970724519).abs() < 1e-9);
        let (a, b) = (
            normal_density(1.75, 1.0, 0.7).unwrap(),
            normal_density(0.25, 1.0, 0.7).unwrap(),
        );
        assert_eq!(a, b);
        assert!(normal_density(0.0, 0.0, 0.0).is_err());
        assert!(normal_density(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn outcome_rows() {
        let mut row = Vec::new();
        build_outcome_row(0.0, 0.0, 0.0, 0.0, OutcomeVariant::WithInterference, &mut row);
        assert_eq!(row.len(), 16);
        assert!(row[..15].iter().all(|&v| v == 0.0));
        assert_eq!(row[15], 1.0);

        build_outcome_row(1.0, 2.0, 0.0, 0.0, OutcomeVariant::WithInterference, &mut row);
        let names = DesignSpec::outcome(OutcomeVariant::WithInterference).column_names();
        let at = |name: &str| row[names.iter().position(|n| n == name).unwrap()];
        assert_eq!(at("z*g"), 2.0);
        assert_eq!(at("g^3"), 8.0);

        build_outcome_row(1.0, 2.0, 0.5, 0.5, OutcomeVariant::WithoutInterference, &mut row);
        assert_eq!(row.len(), 8);
    }

    #[test]
    fn design_spec_matches_direct_row_builder() {
        for variant in [OutcomeVariant::WithInterference, OutcomeVariant::WithoutInterference] {
            let spec = DesignSpec::outcome(variant);
            assert_eq!(spec.width(), variant.width());
            let z = [0.3, 1.7];
            let g = [2.0, -0.4];
            let phi = [0.11, 0.25];
            let lambda = [0.9, 0.05];
            let m = spec
                .build(2, |name| match name {
                    "z" => Some(&z[..]),
                    "g" => Some(&g[..]),
                    "phi" => Some(&phi[..]),
                    "lambda" => Some(&lambda[..]),
                    _ => None,
                })
                .unwrap();
            let mut row = Vec::new();
            for i in 0..2 {
                build_outcome_row(z[i], g[i], phi[i], lambda[i], variant, &mut row);
                assert_eq!(m.row(i), row.as_slice());
            }
        }
    }

    #[test]
    fn design_spec_rejects_duplicates_and_unknown_columns() {
        assert!(matches!(
            DesignSpec::new(vec![Term::raw("x"), Term::raw("x")], true),
            Err(Error::DuplicateTerm(_))
        ));
        let spec = DesignSpec::new(vec![Term::raw("x")], true).unwrap();
        assert!(matches!(
            spec.build(1, |_| None),
            Err(Error::MissingCovariate(_))
        ));
    }
}

//! Diagonal-covariance Gaussian mixtures fitted by EM, used to augment small
//! ordinal record corpora.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, OrdinalSchema, Provenance};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const VARIANCE_FLOOR: f64 = 1e-4;

/// Components whose weight falls below this are re-seeded.
pub const DEGENERATE_WEIGHT: f64 = 1e-8;

pub const GMM_FORMAT: &str = "routekd-gmm";
pub const GMM_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel<T> {
    weights: Vec<T>,
    means: Vec<Vec<T>>,
    variances: Vec<Vec<T>>,
}

/// How EM stopped, with the mean log-likelihood after initialization and after
/// every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct EmReport {
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Iteration numbers (1-based) at which a collapsed component was re-seeded.
    /// The likelihood may drop across those iterations.
    pub reseeded_at: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl<T: Scalar> GmmModel<T> {
    pub fn new(weights: Vec<T>, means: Vec<Vec<T>>, variances: Vec<Vec<T>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || variances.len() != k {
            return Err(Error::invalid("mixture needs matching, nonempty weights, means and variances"));
        }
        let d = means[0].len();
        if d == 0 || means.iter().chain(&variances).any(|v| v.len() != d) {
            return Err(Error::shape("every mean and variance vector must share one dimension"));
        }
        if weights.iter().any(|w| !(w.as_f64() >= 0.0)) {
            return Err(Error::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        let floor = T::of(VARIANCE_FLOOR);
        if variances.iter().flatten().any(|v| !(*v >= floor) || !v.is_finite()) {
            return Err(Error::invalid("variances must be finite and at least the floor"));
        }
        if means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(Error::invalid("means must be finite"));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<T>] {
        &self.variances
    }

    fn check_data(&self, data: &Matrix<T>) -> Result<()> {
        if data.cols() != self.dim() {
            return Err(Error::shape(format!(
                "data has {} columns, mixture has dimension {}",
                data.cols(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `ln(w_c) + ln N(x | mu_c, diag(var_c))` for every component.
    fn component_log_densities(&self, x: &[T], out: &mut [T]) {
        let half_ln_2pi = T::of(0.5 * (2.0 * PI).ln());
        let half = T::of(0.5);
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = self.weights[c].ln();
            for ((&xi, &m), &v) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                let d = xi - m;
                acc -= half_ln_2pi + half * v.ln() + half * d * d / v;
            }
            *o = acc;
        }
    }

    /// Mean per-record log density.
    pub fn log_likelihood(&self, data: &Matrix<T>) -> Result<T> {
        self.check_data(data)?;
        if data.rows() == 0 {
            return Err(Error::invalid("log-likelihood of no data"));
        }
        let mut buf = vec![T::zero(); self.k()];
        let mut total = T::zero();
        for x in data.iter_rows() {
            self.component_log_densities(x, &mut buf);
            total += log_sum_exp(&buf);
        }
        Ok(total / T::of(data.rows() as f64))
    }

    /// Posterior component probabilities, one row per record.
    pub fn responsibilities(&self, data: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_data(data)?;
        Ok(self.e_step(data).0)
    }

    fn e_step(&self, data: &Matrix<T>) -> (Matrix<T>, T) {
        let mut resp = Matrix::zeros(data.rows(), self.k());
        let mut total = T::zero();
        for (r, x) in data.iter_rows().enumerate() {
            let row = resp.row_mut(r);
            self.component_log_densities(x, row);
            let lse = log_sum_exp(row);
            total += lse;
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
        }
        (resp, total / T::of(data.rows().max(1) as f64))
    }

    /// Free parameters: `k - 1` weights plus a mean and variance per dimension
    /// per component.
    pub fn parameter_count(&self) -> usize {
        self.k() - 1 + 2 * self.k() * self.dim()
    }

    /// Bayesian information criterion; lower is better.
    pub fn bic(&self, data: &Matrix<T>) -> Result<f64> {
        let n = data.rows() as f64;
        let ll = self.log_likelihood(data)?.as_f64() * n;
        Ok(-2.0 * ll + self.parameter_count() as f64 * n.ln())
    }

    /// Raw Gaussian draws and the component each came from.
    pub fn sample_points<R: Rng>(&self, n: usize, rng: &mut R) -> (Matrix<T>, Vec<usize>) {
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        let mut comps = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut c = self.k() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w.as_f64();
                if u < acc {
                    c = i;
                    break;
                }
            }
            comps.push(c);
            for j in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                data.push(self.means[c][j] + self.variances[c][j].sqrt() * T::of(z));
            }
        }
        (Matrix::from_vec(n, d, data).expect("sized buffer"), comps)
    }
}

fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let s: T = v.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

fn column_moments<T: Scalar>(data: &Matrix<T>) -> (Vec<T>, Vec<T>) {
    let n = T::of(data.rows() as f64);
    let mean: Vec<T> = data.column_sums().into_iter().map(|s| s / n).collect();
    let mut var = vec![T::zero(); data.cols()];
    for x in data.iter_rows() {
        for ((v, &xi), &m) in var.iter_mut().zip(x).zip(&mean) {
            *v += (xi - m) * (xi - m);
        }
    }
    let floor = T::of(VARIANCE_FLOOR);
    (mean, var.into_iter().map(|v| (v / n).max(floor)).collect())
}

/// k-means++ style seeding: the first mean is a uniformly chosen record, each
/// further mean a record drawn with probability proportional to its squared
/// variance-scaled distance from the closest mean so far.
fn seed_means<T: Scalar, R: Rng>(data: &Matrix<T>, k: usize, scale: &[T], rng: &mut R) -> Vec<Vec<T>> {
    let n = data.rows();
    let mut means = vec![data.row(rng.random_range(0..n)).to_vec()];
    let mut nearest = vec![f64::INFINITY; n];
    while means.len() < k {
        let last = means.last().expect("nonempty");
        for (r, x) in data.iter_rows().enumerate() {
            let d: f64 = x
                .iter()
                .zip(last)
                .zip(scale)
                .map(|((&a, &b), &s)| ((a - b) * (a - b) / s).as_f64())
                .sum();
            nearest[r] = nearest[r].min(d);
        }
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    u < acc
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        means.push(data.row(pick).to_vec());
    }
    means
}

/// Fits a `k`-component diagonal mixture by EM.
///
/// Stops once an iteration improves the mean log-likelihood by less than `tol`
/// or after `max_iter` iterations.
pub fn fit_em<T: Scalar>(data: &Matrix<T>, k: usize, config: &EmConfig) -> Result<(GmmModel<T>, EmReport)> {
    if k == 0 {
        return Err(Error::invalid("mixture needs at least one component"));
    }
    if data.rows() < k {
        return Err(Error::invalid(format!(
            "cannot fit {k} components to {} records",
            data.rows()
        )));
    }
    if data.cols() == 0 {
        return Err(Error::shape("data has no columns"));
    }
    data.ensure_finite("mixture data")?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (_, global_var) = column_moments(data);
    let means = seed_means(data, k, &global_var, &mut rng);
    let mut model = GmmModel {
        weights: vec![T::one() / T::of(k as f64); k],
        means,
        variances: vec![global_var.clone(); k],
    };

    let (mut resp, mut ll) = model.e_step(data);
    let mut report = EmReport {
        log_likelihoods: vec![ll.as_f64()],
        iterations: 0,
        converged: false,
        reseeded_at: Vec::new(),
    };
    for iter in 1..=config.max_iter {
        let reseeded = m_step(&mut model, data, &resp, &global_var, &mut rng);
        if reseeded {
            report.reseeded_at.push(iter);
        }
        let (r, next) = model.e_step(data);
        resp = r;
        report.log_likelihoods.push(next.as_f64());
        report.iterations = iter;
        let gain = (next - ll).as_f64();
        ll = next;
        if !reseeded && gain < config.tol {
            report.converged = true;
            break;
        }
    }
    Ok((model, report))
}

/// Weighted maximum-likelihood update. Returns whether a collapsed component
/// had to be re-seeded.
fn m_step<T: Scalar, R: Rng>(
    model: &mut GmmModel<T>,
    data: &Matrix<T>,
    resp: &Matrix<T>,
    global_var: &[T],
    rng: &mut R,
) -> bool {
    let n = T::of(data.rows() as f64);
    let d = data.cols();
    let floor = T::of(VARIANCE_FLOOR);
    let mass = resp.column_sums();
    let mut reseeded = false;
    for c in 0..model.k() {
        let w = mass[c] / n;
        if w.as_f64() < DEGENERATE_WEIGHT {
            log::warn!("mixture component {c} collapsed (weight {w}); re-seeding from a random record");
            model.means[c] = data.row(rng.random_range(0..data.rows())).to_vec();
            model.variances[c] = global_var.to_vec();
            model.weights[c] = T::of(DEGENERATE_WEIGHT);
            reseeded = true;
            continue;
        }
        model.weights[c] = w;
        let mut mean = vec![T::zero(); d];
        for (x, r) in data.iter_rows().zip(resp.iter_rows()) {
            let g = r[c];
            for (m, &xi) in mean.iter_mut().zip(x) {
                *m += g * xi;
            }
        }
        for m in mean.iter_mut() {
            *m /= mass[c];
        }
        let mut var = vec![T::zero(); d];
        for (x, r) in data.iter_rows().zip(resp.iter_rows()) {
            let g = r[c];
            for ((v, &xi), &m) in var.iter_mut().zip(x).zip(&mean) {
                *v += g * (xi - m) * (xi - m);
            }
        }
        for v in var.iter_mut() {
            *v = (*v / mass[c]).max(floor);
        }
        model.means[c] = mean;
        model.variances[c] = var;
    }
    let total: T = model.weights.iter().copied().sum();
    for w in model.weights.iter_mut() {
        *w /= total;
    }
    reseeded
}

/// Fits every `k` in `ks` and keeps the model with the lowest BIC
/// (ties go to the smaller `k`). Returns the model, its `k`, and all BIC values.
pub fn select_k_by_bic<T: Scalar>(
    data: &Matrix<T>,
    ks: impl IntoIterator<Item = usize>,
    config: &EmConfig,
) -> Result<(GmmModel<T>, usize, Vec<(usize, f64)>)> {
    let mut best: Option<(GmmModel<T>, usize, f64)> = None;
    let mut scores = Vec::new();
    for k in ks {
        if k > data.rows() {
            break;
        }
        let (m, _) = fit_em(data, k, config)?;
        let bic = m.bic(data)?;
        scores.push((k, bic));
        if best.as_ref().is_none_or(|(_, _, b)| bic < *b) {
            best = Some((m, k, bic));
        }
    }
    let (m, k, _) = best.ok_or_else(|| Error::invalid("no candidate component count fits the data"))?;
    Ok((m, k, scores))
}

/// Draws `n` records: a component by weight, a diagonal Gaussian vector, then
/// ordinal coordinates rounded and every coordinate clipped into the schema.
pub fn sample(model: &GmmModel<f64>, n: usize, schema: &OrdinalSchema, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least one"));
    }
    if model.dim() != schema.width() {
        return Err(Error::shape(format!(
            "mixture dimension {} does not match schema width {}",
            model.dim(),
            schema.width()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut points, _) = model.sample_points(n, &mut rng);
    let mut records = Vec::with_capacity(n);
    for r in 0..n {
        let p = points.row_mut(r);
        schema.snap(p);
        records.push(schema.to_record(p)?);
    }
    Ok(Dataset::new(records, Provenance::Vr))
}

/// Record matrix in the schema's column order.
pub fn records_to_matrix(ds: &Dataset) -> Matrix<f64> {
    let rows: Vec<Vec<f64>> = ds.records.iter().map(OrdinalSchema::to_point).collect();
    if rows.is_empty() {
        return Matrix::zeros(0, 13);
    }
    Matrix::from_rows(&rows).expect("uniform rows")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmDocument {
    pub format: String,
    pub version: u32,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl<T: Scalar> GmmModel<T> {
    pub fn to_document(&self) -> GmmDocument {
        let widen = |v: &Vec<T>| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        GmmDocument {
            format: GMM_FORMAT.to_owned(),
            version: GMM_VERSION,
            weights: self.weights.iter().map(|w| w.as_f64()).collect(),
            means: self.means.iter().map(widen).collect(),
            variances: self.variances.iter().map(widen).collect(),
        }
    }

    pub fn from_document(doc: &GmmDocument) -> Result<Self> {
        if doc.format != GMM_FORMAT || doc.version != GMM_VERSION {
            return Err(Error::invalid(format!("unsupported mixture {} v{}", doc.format, doc.version)));
        }
        let narrow = |v: &Vec<f64>| v.iter().map(|&x| T::of(x)).collect::<Vec<_>>();
        Self::new(
            doc.weights.iter().map(|&w| T::of(w)).collect(),
            doc.means.iter().map(narrow).collect(),
            doc.variances.iter().map(narrow).collect(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(&serde_json::from_str(&s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Distribution;

    fn column(v: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn standard_normal_at_its_mean() {
        let m = GmmModel::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        let ll = m.log_likelihood(&column(&[0.0])).unwrap();
        assert!((ll - (-0.5 * (2.0 * PI).ln())).abs() < 1e-15);
        assert!((ll + 0.91893853320467274178).abs() < 1e-15);
    }

    #[test]
    fn duplicated_component_matches_single() {
        let one = GmmModel::<f64>::new(vec![1.0], vec![vec![1.0, -2.0]], vec![vec![0.5, 2.0]]).unwrap();
        let two = GmmModel::new(
            vec![0.5, 0.5],
            vec![vec![1.0, -2.0]; 2],
            vec![vec![0.5, 2.0]; 2],
        )
        .unwrap();
        let data = Matrix::from_rows(&[[0.0, 0.0], [1.0, -2.0], [3.0, 1.5], [-4.0, 2.0]]).unwrap();
        let a = one.log_likelihood(&data).unwrap();
        let b = two.log_likelihood(&data).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_matches_naive_density_sum() {
        let m = GmmModel::new(
            vec![0.2, 0.5, 0.3],
            vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![-1.5, 0.5]],
            vec![vec![1.0, 0.5], vec![0.3, 2.0], vec![1.5, 1.0]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<[f64; 2]> = (0..10)
            .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let data = Matrix::from_rows(&pts).unwrap();
        // plain product of Gaussian densities, summed over components, no logs until the end
        let mut naive = 0.0;
        for p in &pts {
            let mut dens = 0.0;
            for c in 0..3 {
                let mut g = m.weights()[c];
                for j in 0..2 {
                    let v = m.variances()[c][j];
                    let d = p[j] - m.means()[c][j];
                    g *= (-d * d / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
                }
                dens += g;
            }
            naive += dens.ln();
        }
        naive /= 10.0;
        assert!((m.log_likelihood(&data).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn single_component_is_the_sample_moments() {
        let v = [1.0, 4.0, 2.5, -1.0, 7.0, 3.5];
        let (m, _) = fit_em(&column(&v), 1, &EmConfig::default()).unwrap();
        let mean = v.iter().sum::<f64>() / 6.0;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 6.0;
        assert!((m.means()[0][0] - mean).abs() < 1e-12);
        assert!((m.variances()[0][0] - var).abs() < 1e-12);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn infinite_tolerance_runs_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<f64> = (0..200).map(|i| rng.random::<f64>() + (i % 3) as f64 * 4.0).collect();
        let cfg = EmConfig {
            max_iter: 100,
            tol: f64::INFINITY,
            seed: 3,
        };
        let (_, report) = fit_em(&column(&pts), 3, &cfg).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.log_likelihoods.len(), 2);
        assert!(report.log_likelihoods[1] >= report.log_likelihoods[0]);
    }

    #[test]
    fn recovers_a_planted_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let pts: Vec<f64> = (0..5_000)
            .map(|_| {
                let shift = if rng.random::<bool>() { 5.0 } else { 0.0 };
                shift + normal.sample(&mut rng)
            })
            .collect();
        let cfg = EmConfig {
            max_iter: 500,
            tol: 1e-10,
            seed: 7,
        };
        let (m, report) = fit_em(&column(&pts), 2, &cfg).unwrap();
        let mut mu: Vec<f64> = m.means().iter().map(|v| v[0]).collect();
        mu.sort_by(f64::total_cmp);
        assert!(mu[0].abs() < 0.1, "{mu:?}");
        assert!((mu[1] - 5.0).abs() < 0.1, "{mu:?}");
        for w in report.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }
    }

    #[test]
    fn rejects_too_many_components() {
        assert!(fit_em(&column(&[1.0, 2.0]), 3, &EmConfig::default()).is_err());
        assert!(fit_em(&column(&[1.0, 2.0]), 0, &EmConfig::default()).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let pts: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let cfg = EmConfig { seed: 5, ..EmConfig::default() };
        let (a, ra) = fit_em(&column(&pts), 4, &cfg).unwrap();
        let (b, rb) = fit_em(&column(&pts), 4, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn bic_prefers_the_true_component_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normal = rand_distr::Normal::new(0.0, 0.5).unwrap();
        let pts: Vec<f64> = (0..900).map(|i| (i % 3) as f64 * 6.0 + normal.sample(&mut rng)).collect();
        let (_, k, scores) = select_k_by_bic(&column(&pts), 1..=6, &EmConfig::default()).unwrap();
        assert_eq!(k, 3, "{scores:?}");
    }

    #[test]
    fn degenerate_model_samples_its_rounded_mean() {
        let schema = OrdinalSchema::driving_records(13.9, 31.7).unwrap();
        let mean = vec![2.0, 1.0, 2.0, 1.0, 2.0, 3.0, 1.0, 4.0, 2.0, 5.0, 3.0, 18.9, 2.0];
        let m = GmmModel::new(vec![1.0], vec![mean.clone()], vec![vec![VARIANCE_FLOOR; 13]]).unwrap();
        let ds = sample(&m, 500, &schema, 1).unwrap();
        for r in &ds.records {
            let p = OrdinalSchema::to_point(r);
            assert_eq!(&p[..11], &mean[..11]);
            assert_eq!(p[12], mean[12]);
            assert!((p[11] - 18.9).abs() < 0.1);
        }
    }

    #[test]
    fn sampling_clips_to_the_schema() {
        let schema = OrdinalSchema::driving_records(13.9, 31.7).unwrap();
        let mut mean = vec![1.0; 13];
        mean[0] = 7.0;
        mean[11] = 100.0;
        let m = GmmModel::new(vec![1.0], vec![mean], vec![vec![1.0; 13]]).unwrap();
        let ds = sample(&m, 1_000, &schema, 4).unwrap();
        assert!(ds.records.iter().all(|r| r.traffic == 3 && r.travel_time == 31.7));
    }

    #[test]
    fn component_frequencies_follow_weights() {
        let m = GmmModel::new(
            vec![0.2, 0.3, 0.5],
            vec![vec![0.0], vec![10.0], vec![20.0]],
            vec![vec![1.0]; 3],
        )
        .unwrap();
        let (_, comps) = m.sample_points(10_000, &mut ChaCha8Rng::seed_from_u64(6));
        for (c, w) in [0.2, 0.3, 0.5].iter().enumerate() {
            let f = comps.iter().filter(|&&x| x == c).count() as f64 / 10_000.0;
            assert!((f - w).abs() < 0.02, "component {c}: {f}");
        }
    }

    #[test]
    fn document_round_trip() {
        let m = GmmModel::new(
            vec![0.25, 0.75],
            vec![vec![1.0 / 3.0, 2.0], vec![-0.1, 1e-7]],
            vec![vec![0.5, 1e-4], vec![2.0, 3.0]],
        )
        .unwrap();
        let json = serde_json::to_string(&m.to_document()).unwrap();
        let back = GmmModel::<f64>::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(GmmModel::new(vec![0.5, 0.6], vec![vec![0.0]; 2], vec![vec![1.0]; 2]).is_err());
        assert!(GmmModel::new(vec![1.0], vec![vec![0.0]], vec![vec![1e-6]]).is_err());
        assert!(GmmModel::new(vec![1.0], vec![vec![0.0, 1.0]], vec![vec![1.0]]).is_err());
        let m = GmmModel::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        assert!(matches!(m.log_likelihood(&Matrix::zeros(2, 3)), Err(Error::Shape(_))));
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::DrivingRecord;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::NUM_FEATURES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Stated-choice records after mixture augmentation.
    Vr,
    /// Records sampled from the aggregate baseline model.
    Basic,
    /// Generated stand-in for the raw stated-choice corpus.
    SyntheticVr,
}

/// An ordered collection of driving records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<DrivingRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(records: Vec<DrivingRecord>, provenance: Provenance) -> Self {
        Self {
            records,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::invalid(format!("record {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(DrivingRecord::label).collect()
    }

    /// Empirical exit shares.
    pub fn exit_frequencies(&self) -> Result<[f64; 4]> {
        if self.is_empty() {
            return Err(Error::invalid("empty dataset has no exit frequencies"));
        }
        let mut counts = [0u64; 4];
        for r in &self.records {
            counts[r.label()] += 1;
        }
        Ok(counts.map(|c| c as f64 / self.len() as f64))
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            records: indices.iter().map(|&i| self.records[i]).collect(),
            provenance: self.provenance,
        }
    }

    /// Seeded shuffle, then the first `floor(n * train_fraction)` records train
    /// and the rest test.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let (train, test) = split_indices(self.len(), train_fraction, seed)?;
        Ok((self.subset(&train), self.subset(&test)))
    }
}

pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} records")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (n as f64 * train_fraction).floor() as usize;
    let test = idx.split_off(cut);
    Ok((idx, test))
}

/// Standardizes travel time with statistics taken from a training split.
/// Contextual codes pass through as raw ordinals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub travel_time_mean: f64,
    pub travel_time_std: f64,
}

impl FeatureScaler {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("cannot fit a scaler on an empty split"));
        }
        let n = train.len() as f64;
        let mean = train.records.iter().map(|r| r.travel_time).sum::<f64>() / n;
        let var = train
            .records
            .iter()
            .map(|r| (r.travel_time - mean).powi(2))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        Ok(Self {
            travel_time_mean: mean,
            // a constant column stays centred but unscaled
            travel_time_std: if std > 0.0 { std } else { 1.0 },
        })
    }

    pub fn identity() -> Self {
        Self {
            travel_time_mean: 0.0,
            travel_time_std: 1.0,
        }
    }

    /// `[traffic, ..., financial, standardized travel time]` and the zero-based label.
    pub fn encode(&self, record: &DrivingRecord) -> Result<([f64; NUM_FEATURES], usize)> {
        record.validate()?;
        let mut f = [0.0; NUM_FEATURES];
        for (slot, c) in f.iter_mut().zip(record.codes()) {
            *slot = f64::from(c);
        }
        f[11] = (record.travel_time - self.travel_time_mean) / self.travel_time_std;
        Ok((f, record.label()))
    }

    /// Inverse of [`FeatureScaler::encode`].
    pub fn decode(&self, features: &[f64], label: usize) -> Result<DrivingRecord> {
        if features.len() != NUM_FEATURES || label > 3 {
            return Err(Error::shape("encoded record must have 12 features and a label below 4"));
        }
        let mut codes = [0u8; 11];
        for (c, &v) in codes.iter_mut().zip(features) {
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                return Err(Error::invalid(format!("{v} is not a category code")));
            }
            *c = v as u8;
        }
        let t = features[11] * self.travel_time_std + self.travel_time_mean;
        let r = DrivingRecord::from_codes(codes, t, label as u8 + 1);
        r.validate()?;
        Ok(r)
    }

    pub fn encode_dataset<T: Scalar>(&self, ds: &Dataset) -> Result<Encoded<T>> {
        let mut data = Vec::with_capacity(ds.len() * NUM_FEATURES);
        let mut labels = Vec::with_capacity(ds.len());
        for (i, r) in ds.records.iter().enumerate() {
            let (f, l) = self
                .encode(r)
                .map_err(|e| Error::invalid(format!("record {i}: {e}")))?;
            data.extend(f.iter().map(|&v| T::of(v)));
            labels.push(l);
        }
        Ok(Encoded {
            features: Matrix::from_vec(ds.len(), NUM_FEATURES, data)?,
            labels,
        })
    }
}

/// Model-ready features and zero-based labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded<T> {
    pub features: Matrix<T>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> Encoded<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn batch(&self, indices: &[usize]) -> (Matrix<T>, Vec<usize>) {
        (
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

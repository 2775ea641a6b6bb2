use serde::{Deserialize, Serialize};

use super::record::{DrivingRecord, CONTEXT_VARIABLES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    /// Integer codes `1..=max`.
    Ordinal { max: u8 },
    Continuous { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Column layout of a record in ordinal space: the eleven contextual codes,
/// travel time, then the chosen exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalSchema {
    pub columns: Vec<Column>,
}

pub const TRAVEL_TIME_COLUMN: usize = 11;
pub const CHOICE_COLUMN: usize = 12;

impl OrdinalSchema {
    /// Schema for driving records whose travel time lies in `[min, max]`.
    pub fn driving_records(travel_min: f64, travel_max: f64) -> Result<Self> {
        if !(travel_min > 0.0 && travel_min <= travel_max && travel_max.is_finite()) {
            return Err(Error::invalid(format!(
                "bad travel-time range [{travel_min}, {travel_max}]"
            )));
        }
        let mut columns: Vec<Column> = CONTEXT_VARIABLES
            .iter()
            .map(|&(name, max)| Column {
                name: name.to_owned(),
                kind: ColumnKind::Ordinal { max },
            })
            .collect();
        columns.push(Column {
            name: "travel_time".to_owned(),
            kind: ColumnKind::Continuous {
                min: travel_min,
                max: travel_max,
            },
        });
        columns.push(Column {
            name: "choice".to_owned(),
            kind: ColumnKind::Ordinal { max: 4 },
        });
        Ok(Self { columns })
    }

    /// Spans the given travel times.
    pub fn for_travel_times(times: &[f64; 4]) -> Result<Self> {
        let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::driving_records(lo, hi)
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Rounds ordinal coordinates to the nearest code and clips every
    /// coordinate into its range.
    pub fn snap(&self, point: &mut [f64]) {
        for (v, col) in point.iter_mut().zip(&self.columns) {
            *v = match col.kind {
                ColumnKind::Ordinal { max } => v.round().clamp(1.0, f64::from(max)),
                ColumnKind::Continuous { min, max } => v.clamp(min, max),
            };
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.width()
            && point.iter().zip(&self.columns).all(|(&v, col)| match col.kind {
                ColumnKind::Ordinal { max } => v.fract() == 0.0 && v >= 1.0 && v <= f64::from(max),
                ColumnKind::Continuous { min, max } => v >= min && v <= max,
            })
    }

    /// Converts a snapped point in the driving-record layout into a record.
    pub fn to_record(&self, point: &[f64]) -> Result<DrivingRecord> {
        if !self.is_driving_layout() || point.len() != self.width() {
            return Err(Error::shape("point does not follow the driving-record layout"));
        }
        let mut codes = [0u8; 11];
        for (c, &v) in codes.iter_mut().zip(point) {
            *c = v as u8;
        }
        let r = DrivingRecord::from_codes(codes, point[TRAVEL_TIME_COLUMN], point[CHOICE_COLUMN] as u8);
        r.validate()?;
        Ok(r)
    }

    pub fn to_point(record: &DrivingRecord) -> Vec<f64> {
        let mut p: Vec<f64> = record.codes().iter().map(|&c| f64::from(c)).collect();
        p.push(record.travel_time);
        p.push(f64::from(record.choice));
        p
    }

    fn is_driving_layout(&self) -> bool {
        self.width() == 13
            && self.columns[..11]
                .iter()
                .zip(CONTEXT_VARIABLES)
                .all(|(c, (name, max))| c.name == name && c.kind == ColumnKind::Ordinal { max })
            && matches!(self.columns[TRAVEL_TIME_COLUMN].kind, ColumnKind::Continuous { .. })
            && self.columns[CHOICE_COLUMN].kind == ColumnKind::Ordinal { max: 4 }
    }
}

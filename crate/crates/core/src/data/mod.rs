//! Route-choice records: schema, generators, encoding, splitting and CSV.

mod baseline;
mod csv_io;
mod dataset;
mod generate;
mod record;
mod schema;

pub use baseline::{
    baseline_distribution, real_probabilities, BaselineTransform, ExitProbabilities, ALPHA_B,
};
pub use csv_io::{load_csv, read_csv, save_csv, write_csv, CSV_HEADER};
pub use dataset::{split_indices, Dataset, Encoded, FeatureScaler, Provenance};
pub use generate::{
    generate_synthetic_vr, sample_basic_data, ChoiceCoefficients, Scenario, ScenarioSpec,
    SCENARIO_SPEC_VERSION, URGENCY_CUTOFF, URGENCY_SCALE,
};
pub use record::{
    DrivingRecord, ABSENT, CONTEXT_VARIABLES, DEFAULT_TRAVEL_TIMES, TRAFFIC_HEAVY, TRAFFIC_MEDIUM,
    TRAFFIC_NORMAL,
};
pub use schema::{Column, ColumnKind, OrdinalSchema, CHOICE_COLUMN, TRAVEL_TIME_COLUMN};

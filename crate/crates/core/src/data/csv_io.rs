//! CSV persistence for driving records.

use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{Dataset, Provenance};
use super::record::{DrivingRecord, CONTEXT_VARIABLES};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "traffic",
    "urgency",
    "social_impact",
    "age",
    "gender",
    "race",
    "education",
    "employment",
    "concern",
    "familiarity",
    "financial",
    "travel_time",
    "choice",
];

fn parse_err(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        column: column.to_owned(),
        message: message.into(),
    }
}

/// Writes the header and one line per record, `\n`-terminated.
pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::invalid(format!("csv write failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &ds.records {
        let mut fields: Vec<String> = r.codes().iter().map(u8::to_string).collect();
        // `Display` for f64 prints the shortest string that parses back exactly
        fields.push(r.travel_time.to_string());
        fields.push(r.choice.to_string());
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Parses records, validating each against the schema. Rows are numbered from 1
/// (the first line after the header).
pub fn read_csv<R: Read>(input: R, provenance: Provenance) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(0, "header", e.to_string()))?
        .clone();
    let mut index = [0usize; 13];
    for (slot, name) in index.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| parse_err(0, name, "missing column"))?;
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| parse_err(row_no, "*", e.to_string()))?;
        let cell = |col: usize| -> Result<&str> {
            row.get(index[col])
                .map(str::trim)
                .ok_or_else(|| parse_err(row_no, CSV_HEADER[col], "missing cell"))
        };
        let mut codes = [0u8; 11];
        for (k, (name, max)) in CONTEXT_VARIABLES.iter().enumerate() {
            let v: u8 = cell(k)?
                .parse()
                .map_err(|_| parse_err(row_no, name, format!("`{}` is not a code", cell(k).unwrap_or(""))))?;
            if v > *max {
                return Err(parse_err(row_no, name, format!("code {v} is outside 0..={max}")));
            }
            codes[k] = v;
        }
        let travel_time: f64 = cell(11)?
            .parse()
            .map_err(|_| parse_err(row_no, "travel_time", "not a number"))?;
        if !(travel_time > 0.0) || !travel_time.is_finite() {
            return Err(parse_err(row_no, "travel_time", format!("{travel_time} is not a positive time")));
        }
        let choice: u8 = cell(12)?
            .parse()
            .map_err(|_| parse_err(row_no, "choice", "not an exit code"))?;
        if !(1..=4).contains(&choice) {
            return Err(parse_err(row_no, "choice", format!("exit {choice} is outside 1..=4")));
        }
        records.push(DrivingRecord::from_codes(codes, travel_time, choice));
    }
    Ok(Dataset::new(records, provenance))
}

pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(f))
}

pub fn load_csv(path: &Path, provenance: Provenance) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(f), provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_vr, ScenarioSpec};

    fn to_string(ds: &Dataset) -> String {
        let mut buf = Vec::new();
        write_csv(ds, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trips_a_generated_corpus() {
        let ds = generate_synthetic_vr(&ScenarioSpec::default(), 41, 3).unwrap();
        let text = to_string(&ds);
        assert!(text.starts_with(&(CSV_HEADER.join(",") + "\n")));
        assert!(!text.contains('\r'));
        let back = read_csv(text.as_bytes(), Provenance::SyntheticVr).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn header_only_file_is_empty() {
        let text = CSV_HEADER.join(",") + "\n";
        let ds = read_csv(text.as_bytes(), Provenance::Basic).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn out_of_range_code_names_row_and_column() {
        let text = format!(
            "{}\n1,1,1,1,1,1,1,1,1,1,1,13.9,4\n9,1,1,1,1,1,1,1,1,1,1,13.9,4\n",
            CSV_HEADER.join(",")
        );
        match read_csv(text.as_bytes(), Provenance::Vr) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "traffic");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn fifth_exit_and_junk_are_rejected() {
        let h = CSV_HEADER.join(",");
        let fifth = format!("{h}\n1,1,1,1,1,1,1,1,1,1,1,13.9,5\n");
        assert!(matches!(
            read_csv(fifth.as_bytes(), Provenance::Vr),
            Err(Error::Parse { ref column, .. }) if column == "choice"
        ));
        let junk = format!("{h}\n1,1,x,1,1,1,1,1,1,1,1,13.9,1\n");
        assert!(matches!(
            read_csv(junk.as_bytes(), Provenance::Vr),
            Err(Error::Parse { row: 1, ref column, .. }) if column == "social_impact"
        ));
        let missing = "traffic,urgency\n1,1\n";
        assert!(matches!(
            read_csv(missing.as_bytes(), Provenance::Vr),
            Err(Error::Parse { row: 0, ref column, .. }) if column == "social_impact"
        ));
    }
}

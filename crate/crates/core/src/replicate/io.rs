//! Participant-level CSV files.
//!
//! Schema: `participant_id,condition,aid_sequence,final_aid,estimate,task_id`.
//! `aid_sequence` joins aids with `;` and is empty for control rows;
//! `final_aid` is the last aid viewed or `none`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{EstimateSample, TreatmentCondition, NO_AID};

pub const SAMPLE_HEADER: [&str; 6] = [
    "participant_id",
    "condition",
    "aid_sequence",
    "final_aid",
    "estimate",
    "task_id",
];

fn ingest_error(line: u64, column: &str, reason: impl Into<String>) -> Error {
    Error::Ingest {
        line,
        column: column.to_string(),
        reason: reason.into(),
    }
}

/// Reads and validates a sample file.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<EstimateSample>> {
    parse_samples(File::open(path)?)
}

/// Parses samples from any reader. Line numbers in errors are 1-based and
/// count the header.
pub fn parse_samples<R: Read>(reader: R) -> Result<Vec<EstimateSample>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| ingest_error(1, "header", e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names != SAMPLE_HEADER {
        return Err(ingest_error(
            1,
            "header",
            format!("expected `{}`, found `{}`", SAMPLE_HEADER.join(","), names.join(",")),
        ));
    }

    let mut samples = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            ingest_error(line, "record", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");

        let condition: TreatmentCondition = field(1)
            .parse()
            .map_err(|_| ingest_error(line, "condition", format!("unknown condition `{}`", field(1))))?;
        let aid_sequence: Vec<String> = if field(2).is_empty() {
            Vec::new()
        } else {
            field(2).split(';').map(str::to_string).collect()
        };
        let final_aid = match field(3) {
            NO_AID => None,
            "" => {
                return Err(ingest_error(
                    line,
                    "final_aid",
                    "empty; use `none` when no aid was viewed",
                ))
            }
            aid => Some(aid.to_string()),
        };
        let estimate: f64 = field(4)
            .parse()
            .map_err(|_| ingest_error(line, "estimate", format!("`{}` is not a number", field(4))))?;
        let task_id = field(5);
        if task_id.is_empty() {
            return Err(ingest_error(line, "task_id", "empty"));
        }
        if field(0).is_empty() {
            return Err(ingest_error(line, "participant_id", "empty"));
        }

        let sample = EstimateSample {
            participant_id: field(0).to_string(),
            condition,
            aid_sequence,
            final_aid,
            estimate,
            task_id: task_id.to_string(),
        };
        sample
            .validate()
            .map_err(|e| ingest_error(line, "aid_sequence", e.to_string()))?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Writes samples in the ingestion schema. Estimates use the shortest
/// representation that round-trips.
pub fn write_samples<W: Write>(writer: W, samples: &[EstimateSample]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SAMPLE_HEADER)?;
    for s in samples {
        csv.write_record([
            s.participant_id.as_str(),
            s.condition.as_str(),
            &s.aid_sequence.join(";"),
            s.final_aid.as_deref().unwrap_or(NO_AID),
            &format!("{:?}", s.estimate),
            s.task_id.as_str(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "participant_id,condition,aid_sequence,final_aid,estimate,task_id
p1,control,,none,5.5,cpi
p2,assigned,fed,fed,6.1,cpi
p3,multiple_choice,fed;model,model,7,cpi
";

    #[test]
    fn reads_well_formed_file() {
        let s = parse_samples(GOOD.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].aid_sequence, vec!["fed", "model"]);
        assert_eq!(s[0].final_aid, None);
    }

    #[test]
    fn control_with_aid_is_rejected() {
        let bad = GOOD.replace("p1,control,,none", "p1,control,fed,fed");
        match parse_samples(bad.as_bytes()) {
            Err(Error::Ingest { line, reason, .. }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("control"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_line_and_column() {
        let bad = GOOD.replace("6.1", "six");
        assert!(matches!(
            parse_samples(bad.as_bytes()),
            Err(Error::Ingest { line: 3, ref column, .. }) if column == "estimate"
        ));
        let bad = GOOD.replace("p3,multiple_choice,fed;model,model", "p3,multiple_choice,fed;model,fed");
        assert!(matches!(
            parse_samples(bad.as_bytes()),
            Err(Error::Ingest { line: 4, .. })
        ));
        let bad = GOOD.replace("participant_id", "id");
        assert!(matches!(
            parse_samples(bad.as_bytes()),
            Err(Error::Ingest { line: 1, .. })
        ));
    }

    #[test]
    fn round_trip() {
        let s = parse_samples(GOOD.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &s).unwrap();
        assert_eq!(parse_samples(buf.as_slice()).unwrap(), s);
    }
}

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AnnotationTable, AnnotationValue, RawValueRef, Scale, TableBuilder};

pub const LONG_COLUMNS: [&str; 6] = ["replication", "item", "rater_slot", "label", "value", "scale"];

pub fn parse_long_csv(path: impl AsRef<Path>) -> Result<AnnotationTable> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_long_csv_reader(std::io::BufReader::new(file))
}

pub fn parse_long_csv_reader(reader: impl Read) -> Result<AnnotationTable> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut index = [0usize; 6];
    for (slot, name) in LONG_COLUMNS.iter().enumerate() {
        index[slot] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::HeaderMismatch((*name).to_owned()))?;
    }

    let mut builder = TableBuilder::new(BTreeMap::new());
    let mut record = csv::StringRecord::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => return Err(malformed(e)),
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let [rep, item, slot, label, value, scale] = [0, 1, 2, 3, 4, 5].map(field);
        for (name, v) in [("replication", rep), ("item", item), ("rater_slot", slot), ("label", label), ("value", value)] {
            if v.is_empty() {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("empty `{name}`"),
                });
            }
        }
        let scale: Scale = scale.parse().map_err(|e: String| Error::MalformedRow { line, message: e })?;
        builder.declare_scale(label, scale, Some(line))?;
        let parsed = match scale {
            Scale::Categorical => RawValueRef::Category(value),
            Scale::Interval => RawValueRef::Score(value.parse().map_err(|_| Error::ValueParseError {
                line,
                column: "value".into(),
                value: value.to_owned(),
            })?),
        };
        builder.push(rep, item, slot, label, parsed, Some(line))?;
    }
    builder.build()
}

fn malformed(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. } => Error::MalformedRow {
            line,
            message: e.to_string(),
        },
        _ => Error::Csv(e),
    }
}

/// Serializes a table in the long format; [`parse_long_csv_reader`] reads it back unchanged.
pub fn write_long_csv(table: &AnnotationTable) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(LONG_COLUMNS)?;
    for r in table.records() {
        let label = table.label_info(r.label);
        let value = match r.value {
            AnnotationValue::Categorical(c) => label.categories[c as usize].clone(),
            AnnotationValue::Interval(v) => format!("{v}"),
        };
        out.write_record([
            table.replication_name(r.replication),
            table.item_name(r.item),
            table.slot_name(r.slot),
            &label.name,
            &value,
            label.scale.as_str(),
        ])?;
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotationTable, RawValueRef, Scale, TableBuilder};

/// How rater slots appear in a wide file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum SlotLayout {
    /// One row per item; the cell for (slot, label) sits in the column named
    /// by `template` with `{slot}` and `{label}` substituted. A template of
    /// `"{slot}_{label}"` with slots `Rater_1`, `Rater_2` reads `Rater_1_awe`.
    Columns {
        names: Vec<String>,
        #[serde(default = "default_template")]
        template: String,
    },
    /// One row per (item, slot); `column` holds the slot name and each label
    /// column holds that slot's value.
    Rows { column: String },
}

fn default_template() -> String {
    "{slot}_{label}".to_owned()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "WideLabelDef")]
pub struct WideLabel {
    pub id: String,
    /// Column token used in the file; defaults to `id`.
    pub column: String,
    pub scale: Scale,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WideLabelDef {
    Name(String),
    Full {
        id: String,
        column: Option<String>,
        scale: Option<Scale>,
    },
}

impl From<WideLabelDef> for WideLabel {
    fn from(def: WideLabelDef) -> Self {
        match def {
            WideLabelDef::Name(id) => WideLabel {
                column: id.clone(),
                id,
                scale: Scale::Categorical,
            },
            WideLabelDef::Full { id, column, scale } => WideLabel {
                column: column.unwrap_or_else(|| id.clone()),
                id,
                scale: scale.unwrap_or(Scale::Categorical),
            },
        }
    }
}

/// Column mapping for a wide annotation file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WideSchemaSpec {
    pub item_column: String,
    /// Column naming each row's replication.
    #[serde(default)]
    pub replication_column: Option<String>,
    /// Fixed replication tag for every row (used when there is no column).
    #[serde(default)]
    pub replication: Option<String>,
    pub slots: SlotLayout,
    /// Label columns. When empty, labels are read off the header: every
    /// column matching the first slot's template (column layout), or every
    /// column other than the item, replication and slot columns (row layout),
    /// becomes a categorical label.
    #[serde(default)]
    pub labels: Vec<WideLabel>,
}

impl WideSchemaSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Overrides the scale of `label`; unknown labels are an error.
    pub fn set_scale(&mut self, label: &str, scale: Scale) -> Result<()> {
        let entry = self
            .labels
            .iter_mut()
            .find(|l| l.id == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))?;
        entry.scale = scale;
        Ok(())
    }

    fn label_scales(&self) -> BTreeMap<String, Scale> {
        self.labels.iter().map(|l| (l.id.clone(), l.scale)).collect()
    }

    /// Fills in `labels` from a header when none were declared.
    pub fn resolve_labels<'h>(&self, header: impl IntoIterator<Item = &'h str>) -> Result<WideSchemaSpec> {
        if !self.labels.is_empty() {
            return Ok(self.clone());
        }
        let mut names: Vec<String> = Vec::new();
        match &self.slots {
            SlotLayout::Columns { names: slots, template } => {
                let first = slots.first().ok_or_else(|| Error::Schema("no slots declared".into()))?;
                let pattern = template.replace("{slot}", first);
                let (prefix, suffix) = pattern
                    .split_once("{label}")
                    .ok_or_else(|| Error::Schema("slot template lacks `{label}`".into()))?;
                for h in header {
                    if let Some(label) = h.strip_prefix(prefix).and_then(|rest| rest.strip_suffix(suffix)) {
                        if !label.is_empty() {
                            names.push(label.to_owned());
                        }
                    }
                }
            }
            SlotLayout::Rows { column } => {
                let reserved = [Some(&self.item_column), self.replication_column.as_ref(), Some(column)];
                names.extend(header.into_iter().filter(|h| !reserved.contains(&Some(&h.to_string()))).map(str::to_owned));
            }
        }
        if names.is_empty() {
            return Err(Error::Schema("no label columns found in the header".into()));
        }
        let mut spec = self.clone();
        spec.labels = names
            .into_iter()
            .map(|n| WideLabel {
                id: n.clone(),
                column: n,
                scale: Scale::Categorical,
            })
            .collect();
        Ok(spec)
    }
}

pub fn parse_wide_csv(path: impl AsRef<Path>, spec: &WideSchemaSpec) -> Result<AnnotationTable> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_wide_csv_reader(std::io::BufReader::new(file), spec)
}

enum Replication {
    Column(usize),
    Fixed(String),
}

pub fn parse_wide_csv_reader(reader: impl Read, spec: &WideSchemaSpec) -> Result<AnnotationTable> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let spec = &spec.resolve_labels(headers.iter())?;
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::HeaderMismatch(name.to_owned()))
    };
    let item_col = find(&spec.item_column)?;
    let replication = match (&spec.replication_column, &spec.replication) {
        (Some(c), _) => Replication::Column(find(c)?),
        (None, Some(tag)) => Replication::Fixed(tag.clone()),
        (None, None) => {
            return Err(Error::Schema(
                "schema needs `replication_column` or a fixed `replication` tag".into(),
            ))
        }
    };
    // (slot name or None for row layout, label index, column index)
    let mut cells: Vec<(Option<usize>, usize, usize)> = Vec::new();
    let slot_col = match &spec.slots {
        SlotLayout::Columns { names, template } => {
            for (s, slot) in names.iter().enumerate() {
                for (l, label) in spec.labels.iter().enumerate() {
                    let column = template.replace("{slot}", slot).replace("{label}", &label.column);
                    cells.push((Some(s), l, find(&column)?));
                }
            }
            None
        }
        SlotLayout::Rows { column } => {
            for (l, label) in spec.labels.iter().enumerate() {
                cells.push((None, l, find(&label.column)?));
            }
            Some(find(column)?)
        }
    };

    let mut builder = TableBuilder::new(spec.label_scales());
    let mut record = csv::StringRecord::new();
    let mut token = String::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                return Err(Error::MalformedRow {
                    line,
                    message: e.to_string(),
                });
            }
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let item = &record[item_col];
        if item.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: format!("empty `{}`", spec.item_column),
            });
        }
        let rep = match &replication {
            Replication::Column(c) => &record[*c],
            Replication::Fixed(tag) => tag.as_str(),
        };
        if rep.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty replication".into(),
            });
        }
        let row_slot = slot_col.map(|c| &record[c]);
        for &(slot, l, col) in &cells {
            let cell = &record[col];
            if cell.is_empty() {
                continue;
            }
            let label = &spec.labels[l];
            let slot_name = match (slot, &spec.slots, row_slot) {
                (Some(s), SlotLayout::Columns { names, .. }, _) => names[s].as_str(),
                (None, _, Some(name)) if !name.is_empty() => name,
                _ => {
                    return Err(Error::MalformedRow {
                        line,
                        message: "empty slot".into(),
                    })
                }
            };
            let number: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::ValueParseError {
                    line,
                    column: headers[col].to_owned(),
                    value: cell.to_owned(),
                }
            })?;
            let value = match label.scale {
                Scale::Categorical => {
                    token.clear();
                    if number.fract() == 0.0 && number.abs() < 1e15 {
                        token.push_str(&format!("{}", number as i64));
                    } else {
                        token.push_str(cell);
                    }
                    RawValueRef::Category(&token)
                }
                Scale::Interval => RawValueRef::Score(number),
            };
            builder.push(rep, item, slot_name, &label.id, value, Some(line))?;
        }
    }
    builder.build()
}

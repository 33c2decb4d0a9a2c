//! Annotation records, the validated [`AnnotationTable`], and the per-item
//! sufficient statistics every reliability metric is computed from.
//!
//! A table stores `(replication, item, rater slot, label, value)` records.
//! Rater slots are anonymous placeholders: within one replication, slots are
//! only used to tell two annotations on the same item apart and to identify
//! which annotations came from "different raters" for chance agreement.
//!
//! All names are interned and re-sorted on [`TableBuilder::build`], so a table
//! (and every statistic derived from it) does not depend on the order in which
//! records were supplied.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement scale of a label. Selects the disagreement function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Categorical,
    Interval,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Categorical => "categorical",
            Scale::Interval => "interval",
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "categorical" | "nominal" | "binary" => Ok(Scale::Categorical),
            "interval" => Ok(Scale::Interval),
            other => Err(format!("unknown scale `{other}`")),
        }
    }
}

/// A single annotation after interning. Categorical values index into the
/// label's category list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnnotationValue {
    Categorical(u32),
    Interval(f64),
}

impl AnnotationValue {
    pub fn scale(&self) -> Scale {
        match self {
            AnnotationValue::Categorical(_) => Scale::Categorical,
            AnnotationValue::Interval(_) => Scale::Interval,
        }
    }
}

/// Un-interned annotation value as it appears in input data.
#[derive(Clone, Debug, PartialEq)]
pub enum RawValue {
    Category(String),
    Score(f64),
}

impl RawValue {
    pub fn as_ref(&self) -> RawValueRef<'_> {
        match self {
            RawValue::Category(c) => RawValueRef::Category(c),
            RawValue::Score(s) => RawValueRef::Score(*s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RawValueRef<'a> {
    Category(&'a str),
    Score(f64),
}

impl RawValueRef<'_> {
    fn scale(&self) -> Scale {
        match self {
            RawValueRef::Category(_) => Scale::Categorical,
            RawValueRef::Score(_) => Scale::Interval,
        }
    }
}

/// One input record.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub replication: String,
    pub item: String,
    pub rater_slot: String,
    pub label: String,
    pub value: RawValue,
}

impl RawRecord {
    pub fn new(
        replication: impl Into<String>,
        item: impl Into<String>,
        rater_slot: impl Into<String>,
        label: impl Into<String>,
        value: RawValue,
    ) -> Self {
        Self {
            replication: replication.into(),
            item: item.into(),
            rater_slot: rater_slot.into(),
            label: label.into(),
            value,
        }
    }
}

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_newtype!(
    /// Index into [`AnnotationTable::replications`].
    ReplicationId
);
id_newtype!(
    /// Index into [`AnnotationTable::items`].
    ItemId
);
id_newtype!(
    /// Index into [`AnnotationTable::slots`].
    SlotId
);
id_newtype!(
    /// Index into [`AnnotationTable::labels`].
    LabelId
);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub replication: ReplicationId,
    pub item: ItemId,
    pub slot: SlotId,
    pub label: LabelId,
    pub value: AnnotationValue,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelInfo {
    pub name: String,
    pub scale: Scale,
    /// Category tokens in index order (empty for interval labels).
    pub categories: Vec<String>,
}

#[derive(Default)]
struct Interner {
    map: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.map.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.map.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    /// Sorted names and the old-index -> new-index map.
    fn canonicalize(self, numeric_aware: bool) -> (Vec<String>, Vec<u32>) {
        let mut order: Vec<u32> = (0..self.names.len() as u32).collect();
        let numeric: Option<Vec<f64>> = if numeric_aware {
            self.names.iter().map(|n| n.trim().parse::<f64>().ok()).collect()
        } else {
            None
        };
        match &numeric {
            Some(nums) => order.sort_by(|&a, &b| {
                nums[a as usize]
                    .total_cmp(&nums[b as usize])
                    .then_with(|| self.names[a as usize].cmp(&self.names[b as usize]))
            }),
            None => order.sort_by(|&a, &b| self.names[a as usize].cmp(&self.names[b as usize])),
        }
        let mut remap = vec![0u32; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut names = self.names;
        let sorted = order
            .iter()
            .map(|&old| std::mem::take(&mut names[old as usize]))
            .collect();
        (sorted, remap)
    }
}

/// Incremental, validating constructor for [`AnnotationTable`].
pub struct TableBuilder {
    scales: BTreeMap<String, Scale>,
    replications: Interner,
    items: Interner,
    slots: Interner,
    labels: Interner,
    label_scales: Vec<Scale>,
    categories: Vec<Interner>,
    records: Vec<Record>,
    seen: HashMap<(u32, u32, u32, u32), Option<usize>>,
}

impl TableBuilder {
    pub fn new(label_scales: BTreeMap<String, Scale>) -> Self {
        Self {
            scales: label_scales,
            replications: Interner::default(),
            items: Interner::default(),
            slots: Interner::default(),
            labels: Interner::default(),
            label_scales: Vec::new(),
            categories: Vec::new(),
            records: Vec::new(),
            seen: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Declares a label's scale while building; a conflicting redeclaration
    /// is a [`Error::ScaleMismatch`].
    pub fn declare_scale(&mut self, label: &str, scale: Scale, line: Option<usize>) -> Result<()> {
        match self.scales.get(label) {
            Some(&existing) if existing != scale => Err(Error::ScaleMismatch {
                label: label.to_owned(),
                detail: format!(
                    "declared {scale}{} but previously {existing}",
                    line.map(|l| format!(" at line {l}")).unwrap_or_default()
                ),
            }),
            Some(_) => Ok(()),
            None => {
                self.scales.insert(label.to_owned(), scale);
                Ok(())
            }
        }
    }

    /// Adds a record. `line` is the source line, used in error messages.
    pub fn push(
        &mut self,
        replication: &str,
        item: &str,
        slot: &str,
        label: &str,
        value: RawValueRef<'_>,
        line: Option<usize>,
    ) -> Result<()> {
        let label_id = match self.labels.map.get(label) {
            Some(&id) => id,
            None => {
                let scale = *self
                    .scales
                    .get(label)
                    .ok_or_else(|| Error::UnknownLabel(label.to_owned()))?;
                let id = self.labels.intern(label);
                self.label_scales.push(scale);
                self.categories.push(Interner::default());
                id
            }
        };
        let scale = self.label_scales[label_id as usize];
        if value.scale() != scale {
            let shown = match value {
                RawValueRef::Category(c) => format!("category `{c}`"),
                RawValueRef::Score(s) => format!("score {s}"),
            };
            return Err(Error::ScaleMismatch {
                label: label.to_owned(),
                detail: format!(
                    "{shown} on (replication={replication}, item={item}, slot={slot}){} but the label is {scale}",
                    line.map(|l| format!(" at line {l}")).unwrap_or_default()
                ),
            });
        }
        let value = match value {
            RawValueRef::Category(c) => {
                AnnotationValue::Categorical(self.categories[label_id as usize].intern(c))
            }
            RawValueRef::Score(s) => {
                if !s.is_finite() {
                    return Err(Error::ScaleMismatch {
                        label: label.to_owned(),
                        detail: format!("non-finite score on item {item}"),
                    });
                }
                AnnotationValue::Interval(s)
            }
        };
        let rep = self.replications.intern(replication);
        let item_id = self.items.intern(item);
        let slot_id = self.slots.intern(slot);
        if let Some(first) = self.seen.insert((rep, item_id, slot_id, label_id), line) {
            return Err(Error::DuplicateKey {
                replication: replication.to_owned(),
                item: item.to_owned(),
                slot: slot.to_owned(),
                label: label.to_owned(),
                first_line: first,
                second_line: line,
            });
        }
        self.records.push(Record {
            replication: ReplicationId(rep),
            item: ItemId(item_id),
            slot: SlotId(slot_id),
            label: LabelId(label_id),
            value,
        });
        Ok(())
    }

    pub fn build(self) -> Result<AnnotationTable> {
        if self.records.is_empty() {
            return Err(Error::EmptyTable);
        }
        let (replications, rep_map) = self.replications.canonicalize(false);
        let (items, item_map) = self.items.canonicalize(false);
        let (slots, slot_map) = self.slots.canonicalize(false);
        let (label_names, label_map) = self.labels.canonicalize(false);

        let mut category_maps = Vec::with_capacity(self.categories.len());
        let mut labels: Vec<Option<LabelInfo>> = vec![None; label_names.len()];
        for (old, cats) in self.categories.into_iter().enumerate() {
            let (names, remap) = cats.canonicalize(true);
            let new = label_map[old] as usize;
            labels[new] = Some(LabelInfo {
                name: label_names[new].clone(),
                scale: self.label_scales[old],
                categories: names,
            });
            category_maps.push(remap);
        }
        let labels: Vec<LabelInfo> = labels.into_iter().map(|l| l.expect("every label remapped")).collect();

        let mut records: Vec<Record> = self
            .records
            .into_iter()
            .map(|r| Record {
                replication: ReplicationId(rep_map[r.replication.index()]),
                item: ItemId(item_map[r.item.index()]),
                slot: SlotId(slot_map[r.slot.index()]),
                label: LabelId(label_map[r.label.index()]),
                value: match r.value {
                    AnnotationValue::Categorical(c) => {
                        AnnotationValue::Categorical(category_maps[r.label.index()][c as usize])
                    }
                    v => v,
                },
            })
            .collect();
        records.sort_unstable_by_key(|r| (r.label, r.replication, r.item, r.slot));

        Ok(AnnotationTable {
            replications,
            items,
            slots,
            labels,
            records,
        })
    }
}

/// Validated long-format annotation store. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationTable {
    replications: Vec<String>,
    items: Vec<String>,
    slots: Vec<String>,
    labels: Vec<LabelInfo>,
    /// Sorted by (label, replication, item, slot).
    records: Vec<Record>,
}

/// Builds a table from owned records, rejecting duplicates and scale violations.
pub fn build_table(
    records: impl IntoIterator<Item = RawRecord>,
    label_scales: BTreeMap<String, Scale>,
) -> Result<AnnotationTable> {
    let mut builder = TableBuilder::new(label_scales);
    for r in records {
        builder.push(&r.replication, &r.item, &r.rater_slot, &r.label, r.value.as_ref(), None)?;
    }
    builder.build()
}

impl AnnotationTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn replications(&self) -> &[String] {
        &self.replications
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn labels(&self) -> &[LabelInfo] {
        &self.labels
    }

    pub fn replication_name(&self, id: ReplicationId) -> &str {
        &self.replications[id.index()]
    }

    pub fn item_name(&self, id: ItemId) -> &str {
        &self.items[id.index()]
    }

    pub fn slot_name(&self, id: SlotId) -> &str {
        &self.slots[id.index()]
    }

    pub fn label_info(&self, id: LabelId) -> &LabelInfo {
        &self.labels[id.index()]
    }

    pub fn label_id(&self, name: &str) -> Result<LabelId> {
        self.labels
            .binary_search_by(|l| l.name.as_str().cmp(name))
            .map(|i| LabelId(i as u32))
            .map_err(|_| Error::UnknownLabel(name.to_owned()))
    }

    pub fn replication_id(&self, name: &str) -> Result<ReplicationId> {
        self.replications
            .binary_search_by(|r| r.as_str().cmp(name))
            .map(|i| ReplicationId(i as u32))
            .map_err(|_| Error::UnknownReplication(name.to_owned()))
    }

    /// Records for one (label, replication), sorted by (item, slot).
    pub fn records_for(&self, label: LabelId, replication: ReplicationId) -> &[Record] {
        let start = self
            .records
            .partition_point(|r| (r.label, r.replication) < (label, replication));
        let end = self
            .records
            .partition_point(|r| (r.label, r.replication) <= (label, replication));
        &self.records[start..end]
    }

    /// Number of distinct items carrying at least one record.
    pub fn annotated_item_count(&self) -> usize {
        let mut seen = vec![false; self.items.len()];
        for r in &self.records {
            seen[r.item.index()] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Renders a value back to its input token.
    pub fn render_value(&self, label: LabelId, value: AnnotationValue) -> String {
        match value {
            AnnotationValue::Categorical(c) => self.labels[label.index()].categories[c as usize].clone(),
            AnnotationValue::Interval(s) => format!("{s}"),
        }
    }

    /// Iterates records with their names resolved.
    pub fn raw_records(&self) -> impl Iterator<Item = RawRecord> + '_ {
        self.records.iter().map(|r| {
            let label = &self.labels[r.label.index()];
            RawRecord {
                replication: self.replications[r.replication.index()].clone(),
                item: self.items[r.item.index()].clone(),
                rater_slot: self.slots[r.slot.index()].clone(),
                label: label.name.clone(),
                value: match r.value {
                    AnnotationValue::Categorical(c) => {
                        RawValue::Category(label.categories[c as usize].clone())
                    }
                    AnnotationValue::Interval(s) => RawValue::Score(s),
                },
            }
        })
    }

    /// Declared scale of every label, as accepted by [`build_table`].
    pub fn label_scales(&self) -> BTreeMap<String, Scale> {
        self.labels.iter().map(|l| (l.name.clone(), l.scale)).collect()
    }
}

/// Per-item moments for one label within one replication.
#[derive(Clone, Debug, PartialEq)]
pub enum ItemSummary {
    /// Count of annotations per category index.
    Categorical(Vec<u32>),
    Interval { sum: f64, sum_sq: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotValue {
    pub slot: SlotId,
    pub value: AnnotationValue,
}

/// Sufficient statistics for one item. `annotations` keeps the slot of each
/// value, which chance-agreement and split-half computations need.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemStats {
    pub item: ItemId,
    pub count: u32,
    pub summary: ItemSummary,
    pub annotations: Vec<SlotValue>,
}

impl ItemStats {
    pub fn from_values(item: ItemId, scale: Scale, n_categories: usize, annotations: Vec<SlotValue>) -> Self {
        let summary = match scale {
            Scale::Categorical => {
                let mut counts = vec![0u32; n_categories];
                for a in &annotations {
                    if let AnnotationValue::Categorical(c) = a.value {
                        counts[c as usize] += 1;
                    }
                }
                ItemSummary::Categorical(counts)
            }
            Scale::Interval => {
                let (mut sum, mut sum_sq) = (0.0, 0.0);
                for a in &annotations {
                    if let AnnotationValue::Interval(v) = a.value {
                        sum += v;
                        sum_sq += v * v;
                    }
                }
                ItemSummary::Interval { sum, sum_sq }
            }
        };
        Self {
            item,
            count: annotations.len() as u32,
            summary,
            annotations,
        }
    }
}

/// Per-item statistics for one label within one replication, sorted by item.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelItemStats {
    pub label: String,
    pub replication: String,
    pub scale: Scale,
    pub categories: Vec<String>,
    /// Number of distinct slots in the source table; slot ids are below this.
    pub n_slots: usize,
    pub items: Vec<ItemStats>,
}

impl LabelItemStats {
    pub fn total_annotations(&self) -> usize {
        self.items.iter().map(|i| i.count as usize).sum()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Collects per-item statistics for `label` within `replication`.
pub fn item_stats(table: &AnnotationTable, label: &str, replication: &str) -> Result<LabelItemStats> {
    let label_id = table.label_id(label)?;
    let rep_id = table.replication_id(replication)?;
    Ok(item_stats_by_id(table, label_id, rep_id))
}

pub fn item_stats_by_id(table: &AnnotationTable, label: LabelId, replication: ReplicationId) -> LabelItemStats {
    let info = table.label_info(label);
    let records = table.records_for(label, replication);
    let n_categories = info.categories.len();
    let items = records
        .chunk_by(|a, b| a.item == b.item)
        .map(|chunk| {
            let annotations = chunk
                .iter()
                .map(|r| SlotValue {
                    slot: r.slot,
                    value: r.value,
                })
                .collect();
            ItemStats::from_values(chunk[0].item, info.scale, n_categories, annotations)
        })
        .collect();
    LabelItemStats {
        label: info.name.clone(),
        replication: table.replication_name(replication).to_owned(),
        scale: info.scale,
        categories: info.categories.clone(),
        n_slots: table.slots().len(),
        items,
    }
}

/// Two replications' statistics for one label, aligned on the items
/// annotated in both.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedLabelView {
    pub label: String,
    pub x_replication: String,
    pub y_replication: String,
    pub scale: Scale,
    pub categories: Vec<String>,
    pub n_slots: usize,
    pub x: Vec<ItemStats>,
    pub y: Vec<ItemStats>,
}

impl PairedLabelView {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    /// Total annotations in X over retained items.
    pub fn total_x(&self) -> usize {
        self.x.iter().map(|i| i.count as usize).sum()
    }

    pub fn total_y(&self) -> usize {
        self.y.iter().map(|i| i.count as usize).sum()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.x.iter().map(|i| i.item)
    }

    /// The same view with X and Y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            label: self.label.clone(),
            x_replication: self.y_replication.clone(),
            y_replication: self.x_replication.clone(),
            scale: self.scale,
            categories: self.categories.clone(),
            n_slots: self.n_slots,
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// The X side restricted to the paired items, as standalone stats.
    pub fn x_stats(&self) -> LabelItemStats {
        self.side_stats(&self.x_replication, &self.x)
    }

    pub fn y_stats(&self) -> LabelItemStats {
        self.side_stats(&self.y_replication, &self.y)
    }

    fn side_stats(&self, replication: &str, items: &[ItemStats]) -> LabelItemStats {
        LabelItemStats {
            label: self.label.clone(),
            replication: replication.to_owned(),
            scale: self.scale,
            categories: self.categories.clone(),
            n_slots: self.n_slots,
            items: items.to_vec(),
        }
    }
}

/// Aligns two replications of one label on their common items.
///
/// Items without annotations on either side are dropped from both.
pub fn pair_views(table: &AnnotationTable, label: &str, x: &str, y: &str) -> Result<PairedLabelView> {
    let x_stats = item_stats(table, label, x)?;
    let y_stats = item_stats(table, label, y)?;
    pair_stats(x_stats, y_stats)
}

/// Aligns two stats collections for the same label.
pub fn pair_stats(x: LabelItemStats, y: LabelItemStats) -> Result<PairedLabelView> {
    if x.label != y.label || x.scale != y.scale || x.categories != y.categories {
        return Err(Error::ScaleMismatch {
            label: x.label.clone(),
            detail: format!("cannot pair stats of label `{}` with label `{}`", x.label, y.label),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut yi = y.items.into_iter().peekable();
    for xe in x.items {
        while yi.peek().is_some_and(|ye| ye.item < xe.item) {
            yi.next();
        }
        if yi.peek().is_some_and(|ye| ye.item == xe.item) {
            let ye = yi.next().expect("peeked");
            if xe.count > 0 && ye.count > 0 {
                xs.push(xe);
                ys.push(ye);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::EmptyIntersection {
            label: x.label,
            x: x.replication,
            y: y.replication,
        });
    }
    Ok(PairedLabelView {
        label: x.label,
        x_replication: x.replication,
        y_replication: y.replication,
        scale: x.scale,
        categories: x.categories,
        n_slots: x.n_slots.max(y.n_slots),
        x: xs,
        y: ys,
    })
}

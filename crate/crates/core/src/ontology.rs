//! Slot-based domain definitions and the flat coordinate systems built on them.
//!
//! An ontology document is TOML with five top-level keys:
//!
//! ```toml
//! name = "toy"
//! requestable = ["phone", "addr"]
//! methods = ["none", "byconstraints", "byalternatives", "finished"]
//!
//! [informable]            # slot -> ordered value list
//! food = ["chinese", "indian"]
//! area = ["north", "south"]
//!
//! [[entities]]            # one table per database record
//! food = "chinese"
//! area = "north"
//! ```
//!
//! Key order inside `[informable]` fixes the slot order, and list order fixes
//! the value order. Every vector handed to an agent is laid out by these
//! orderings, so they never change after loading.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOY: &str = include_str!("../ontologies/toy.toml");
const DSTC2_LIKE: &str = include_str!("../ontologies/dstc2-like.toml");
const DSTC3_LIKE: &str = include_str!("../ontologies/dstc3-like.toml");

/// Names accepted by [`builtin_ontology`].
pub const BUILTIN_NAMES: [&str; 3] = ["toy", "dstc2-like", "dstc3-like"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformableSlot {
    pub name: String,
    pub values: Vec<String>,
}

/// A database record; `values[i]` indexes into the value list of informable slot `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    name: String,
    informable: Vec<InformableSlot>,
    requestable: Vec<String>,
    methods: Vec<String>,
    entities: Vec<Entity>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OntologyDocument {
    name: String,
    requestable: Vec<String>,
    methods: Vec<String>,
    informable: IndexMap<String, Vec<String>>,
    #[serde(default)]
    entities: Vec<IndexMap<String, String>>,
}

fn check_unique<'a>(what: &str, names: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if n.trim().is_empty() {
            return Err(Error::InvalidOntology(format!("empty {what} name")));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidOntology(format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}

impl Ontology {
    fn from_document(doc: OntologyDocument) -> Result<Self> {
        if doc.name.trim().is_empty() {
            return Err(Error::InvalidOntology("empty ontology name".into()));
        }
        if doc.informable.is_empty() {
            return Err(Error::InvalidOntology("no informable slots".into()));
        }
        if doc.methods.is_empty() {
            return Err(Error::InvalidOntology("no methods".into()));
        }
        check_unique("informable slot", doc.informable.keys())?;
        check_unique("requestable slot", doc.requestable.iter())?;
        check_unique("method", doc.methods.iter())?;
        let mut informable = Vec::with_capacity(doc.informable.len());
        for (slot, values) in doc.informable {
            if values.len() < 2 {
                return Err(Error::InvalidOntology(format!(
                    "informable slot `{slot}` needs at least 2 values"
                )));
            }
            check_unique(&format!("value of slot `{slot}`"), values.iter())?;
            informable.push(InformableSlot { name: slot, values });
        }

        let mut entities = Vec::with_capacity(doc.entities.len());
        for (i, record) in doc.entities.iter().enumerate() {
            for key in record.keys() {
                if !informable.iter().any(|s| &s.name == key) {
                    return Err(Error::InvalidOntology(format!(
                        "entity {i} references unknown slot `{key}`"
                    )));
                }
            }
            let mut values = Vec::with_capacity(informable.len());
            for slot in &informable {
                let v = record.get(&slot.name).ok_or_else(|| {
                    Error::InvalidOntology(format!("entity {i} has no value for slot `{}`", slot.name))
                })?;
                let idx = slot.values.iter().position(|x| x == v).ok_or_else(|| {
                    Error::InvalidOntology(format!(
                        "entity {i} uses value `{v}` which is not in slot `{}`",
                        slot.name
                    ))
                })?;
                values.push(idx);
            }
            entities.push(Entity { values });
        }

        Ok(Ontology { name: doc.name, informable, requestable: doc.requestable, methods: doc.methods, entities })
    }

    fn to_document(&self) -> OntologyDocument {
        OntologyDocument {
            name: self.name.clone(),
            requestable: self.requestable.clone(),
            methods: self.methods.clone(),
            informable: self.informable.iter().map(|s| (s.name.clone(), s.values.clone())).collect(),
            entities: self
                .entities
                .iter()
                .map(|e| {
                    self.informable
                        .iter()
                        .zip(&e.values)
                        .map(|(s, &v)| (s.name.clone(), s.values[v].clone()))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_document()).expect("ontology document is always serializable")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        load_ontology(&std::fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn informable(&self) -> &[InformableSlot] {
        &self.informable
    }

    pub fn requestable(&self) -> &[String] {
        &self.requestable
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn slot_index(&self, slot: &str) -> Option<usize> {
        self.informable.iter().position(|s| s.name == slot)
    }

    pub fn value_index(&self, slot: usize, value: &str) -> Option<usize> {
        self.informable[slot].values.iter().position(|v| v == value)
    }

    pub fn request_index(&self, slot: &str) -> Option<usize> {
        self.requestable.iter().position(|s| s == slot)
    }

    pub fn method_index(&self, method: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == method)
    }

    /// Value name of informable slot `slot` for entity `entity`.
    pub fn entity_value(&self, entity: usize, slot: usize) -> &str {
        &self.informable[slot].values[self.entities[entity].values[slot]]
    }

    /// Attribute string reported when the system informs `slot` about `entity`.
    ///
    /// Informable slots report the database value; other requestable slots
    /// get a synthetic per-entity string.
    pub fn entity_attribute(&self, entity: usize, slot: &str) -> String {
        match self.slot_index(slot) {
            Some(s) => self.entity_value(entity, s).to_string(),
            None => format!("{slot}-of-{}", entity_name(entity)),
        }
    }

    pub fn goal_dim(&self) -> usize {
        self.informable.iter().map(|s| s.values.len()).sum()
    }
}

/// Canonical reference string for entity `i`, carried by offer/inform acts.
pub fn entity_name(i: usize) -> String {
    format!("e{i}")
}

pub fn parse_entity_name(s: &str) -> Option<usize> {
    s.strip_prefix('e')?.parse().ok()
}

pub fn load_ontology(document: &str) -> Result<Ontology> {
    let doc: OntologyDocument = toml::from_str(document).map_err(|e| Error::OntologyParse(e.to_string()))?;
    Ontology::from_document(doc)
}

pub fn builtin_ontology(name: &str) -> Result<Ontology> {
    let text = match name {
        "toy" => TOY,
        "dstc2-like" => DSTC2_LIKE,
        "dstc3-like" => DSTC3_LIKE,
        other => return Err(Error::UnknownOntology(other.to_string())),
    };
    load_ontology(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotType {
    Goal,
    Request,
    Method,
}

impl SlotType {
    pub const ALL: [SlotType; 3] = [SlotType::Goal, SlotType::Request, SlotType::Method];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotType::Goal => "goal",
            SlotType::Request => "request",
            SlotType::Method => "method",
        }
    }
}

/// One coordinate of a flat index: `(slot, Some(value))` for goal pairs,
/// `(slot, None)` for requestable slots and `(method, None)` for methods.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexEntry {
    pub slot: String,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatIndex {
    slot_type: SlotType,
    entries: Vec<IndexEntry>,
    /// Goal indices: one contiguous range per informable slot. Other kinds: a single range.
    groups: Vec<Range<usize>>,
    lookup: HashMap<IndexEntry, usize>,
}

impl FlatIndex {
    pub fn slot_type(&self) -> SlotType {
        self.slot_type
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn position(&self, slot: &str, value: Option<&str>) -> Option<usize> {
        let key = IndexEntry { slot: slot.to_string(), value: value.map(str::to_string) };
        self.lookup.get(&key).copied()
    }
}

pub fn flat_index(ontology: &Ontology, slot_type: SlotType) -> FlatIndex {
    let mut entries = Vec::new();
    let mut groups = Vec::new();
    match slot_type {
        SlotType::Goal => {
            for slot in &ontology.informable {
                let start = entries.len();
                entries.extend(
                    slot.values.iter().map(|v| IndexEntry { slot: slot.name.clone(), value: Some(v.clone()) }),
                );
                groups.push(start..entries.len());
            }
        }
        SlotType::Request => {
            entries.extend(ontology.requestable.iter().map(|s| IndexEntry { slot: s.clone(), value: None }));
            groups.push(0..entries.len());
        }
        SlotType::Method => {
            entries.extend(ontology.methods.iter().map(|m| IndexEntry { slot: m.clone(), value: None }));
            groups.push(0..entries.len());
        }
    }
    let lookup = entries.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    FlatIndex { slot_type, entries, groups, lookup }
}

/// The three indices of one ontology, built once and shared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indices {
    pub goal: FlatIndex,
    pub request: FlatIndex,
    pub method: FlatIndex,
}

impl Indices {
    pub fn new(ontology: &Ontology) -> Self {
        Indices {
            goal: flat_index(ontology, SlotType::Goal),
            request: flat_index(ontology, SlotType::Request),
            method: flat_index(ontology, SlotType::Method),
        }
    }

    pub fn get(&self, slot_type: SlotType) -> &FlatIndex {
        match slot_type {
            SlotType::Goal => &self.goal,
            SlotType::Request => &self.request,
            SlotType::Method => &self.method,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY_DOC: &str = r#"
name = "mini"
requestable = ["phone"]
methods = ["byconstraints", "finished"]

[informable]
food = ["chinese", "indian"]

[[entities]]
food = "chinese"

[[entities]]
food = "indian"
"#;

    #[test]
    fn loads_minimal_document_in_order() {
        let o = load_ontology(TOY_DOC).unwrap();
        assert_eq!(o.name(), "mini");
        assert_eq!(o.informable()[0].name, "food");
        assert_eq!(o.informable()[0].values, vec!["chinese", "indian"]);
        assert_eq!(o.requestable(), ["phone"]);
        assert_eq!(o.methods(), ["byconstraints", "finished"]);
        assert_eq!(o.entities().len(), 2);
        assert_eq!(o.entity_value(1, 0), "indian");
    }

    #[test]
    fn rejects_unknown_entity_value() {
        let doc = TOY_DOC.replace("food = \"indian\"\n", "food = \"thai\"\n");
        let err = load_ontology(&doc).unwrap_err().to_string();
        assert!(err.contains("thai"), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_small_slots() {
        let dup = TOY_DOC.replace("[\"chinese\", \"indian\"]", "[\"chinese\", \"chinese\"]");
        assert!(load_ontology(&dup).unwrap_err().to_string().contains("chinese"));
        let small = TOY_DOC.replace("[\"chinese\", \"indian\"]", "[\"chinese\"]");
        assert!(load_ontology(&small).is_err());
        let dup_method = TOY_DOC.replace("\"finished\"]", "\"byconstraints\"]");
        assert!(load_ontology(&dup_method).unwrap_err().to_string().contains("byconstraints"));
        assert!(matches!(load_ontology("name = ").unwrap_err(), Error::OntologyParse(_)));
    }

    #[test]
    fn builtin_sizes() {
        let d2 = builtin_ontology("dstc2-like").unwrap();
        assert_eq!(d2.informable().len(), 4);
        assert_eq!(d2.requestable().len(), 8);
        let d3 = builtin_ontology("dstc3-like").unwrap();
        assert_eq!(d3.informable().len(), 8);
        assert_eq!(d3.requestable().len(), 12);
        let toy = builtin_ontology("toy").unwrap();
        assert_eq!(toy.informable().len(), 2);
        assert_eq!(toy.requestable().len(), 2);
        assert!(matches!(builtin_ontology("dstc4"), Err(Error::UnknownOntology(_))));
    }

    #[test]
    fn toy_goal_index_order() {
        let toy = builtin_ontology("toy").unwrap();
        let idx = flat_index(&toy, SlotType::Goal);
        let pairs: Vec<_> =
            idx.entries().iter().map(|e| (e.slot.as_str(), e.value.as_deref().unwrap())).collect();
        assert_eq!(pairs, [("food", "chinese"), ("food", "indian"), ("area", "north"), ("area", "south")]);
        assert_eq!(idx.groups(), &[0..2, 2..4]);
        assert_eq!(idx.position("area", Some("north")), Some(2));
        assert_eq!(idx, flat_index(&toy, SlotType::Goal));
    }

    #[test]
    fn request_and_method_dimensions() {
        let d2 = builtin_ontology("dstc2-like").unwrap();
        assert_eq!(flat_index(&d2, SlotType::Request).dimension(), 8);
        assert_eq!(flat_index(&d2, SlotType::Method).dimension(), d2.methods().len());
    }

    #[test]
    fn serialization_round_trips() {
        for name in BUILTIN_NAMES {
            let o = builtin_ontology(name).unwrap();
            assert_eq!(load_ontology(&o.to_toml()).unwrap(), o);
        }
        let o = load_ontology(TOY_DOC).unwrap();
        assert_eq!(load_ontology(&o.to_toml()).unwrap(), o);
    }

    #[test]
    fn every_entity_value_is_valid() {
        for name in BUILTIN_NAMES {
            let o = builtin_ontology(name).unwrap();
            for e in o.entities() {
                for (s, &v) in e.values.iter().enumerate() {
                    assert!(v < o.informable()[s].values.len());
                }
            }
        }
    }
}

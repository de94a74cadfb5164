//! The method registry: providers publish descriptors, clients look them up
//! and query them.
//!
//! Persistence is an append-only line journal. Every publish appends
//! `P <record-xml>` and every removal `R <id>`, fsynced before the call
//! returns, so the in-memory map is always the replay of the journal and a
//! crash-restart reconstructs exactly the pre-crash record set. Service ids
//! are monotone (`s-1`, `s-2`, ...) and never reused: replay tracks the
//! highest id ever published, including ids that were later removed.
//!
//! Reads are freely concurrent; publish and remove serialize through the
//! single writer lock, which totally orders the journal.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::descriptor::{
    parse_descriptor_element, serialize_descriptor_element, MethodServiceDescriptor,
};
use crate::retrieval::{rank, Candidate, QuerySpec, RetrievalError, SimilarityScore, SynonymTable};
use crate::xml::{parse_document, to_compact_string, XmlElement};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("duplicate service: {name}@{version} is already published")]
    DuplicateService { name: String, version: String },
    #[error("storage failure: {0}")]
    StorageFailure(#[from] std::io::Error),
    #[error("not found: no record with id '{0}'")]
    NotFound(String),
    #[error("empty query: at least one criterion is required")]
    EmptyQuery,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("corrupt journal at line {line}: {reason}")]
    CorruptJournal { line: usize, reason: String },
}

/// A published descriptor with its registry-assigned identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryRecord {
    pub service_id: String,
    pub descriptor: MethodServiceDescriptor,
    /// UTC seconds at publication.
    pub published_at: u64,
    pub provider_label: String,
}

// ---------------------------------------------------------------------------
// Record XML
// ---------------------------------------------------------------------------

/// Builds the `moa:Record` element wrapping the descriptor.
pub fn serialize_record_element(record: &RegistryRecord) -> XmlElement {
    XmlElement::new("moa:Record")
        .attr("id", &record.service_id)
        .attr("provider", &record.provider_label)
        .attr("published_at", record.published_at.to_string())
        .child(serialize_descriptor_element(&record.descriptor))
}

/// Full record document, as served by the lookup endpoint.
pub fn serialize_record(record: &RegistryRecord) -> String {
    crate::xml::to_document_string(&serialize_record_element(record))
}

/// Parses a `moa:Record` document.
pub fn parse_record(text: &str) -> Result<RegistryRecord, RegistryError> {
    let root =
        parse_document(text).map_err(|e| RegistryError::InvalidDescriptor(e.message))?;
    parse_record_element(&root)
}

fn parse_record_element(root: &XmlElement) -> Result<RegistryRecord, RegistryError> {
    let invalid = |msg: String| RegistryError::InvalidDescriptor(msg);
    if root.name != "moa:Record" {
        return Err(invalid(format!("expected moa:Record, found <{}>", root.name)));
    }
    let attr = |key: &str| {
        root.get_attr(key)
            .map(str::to_string)
            .ok_or_else(|| invalid(format!("moa:Record is missing '{key}'")))
    };
    let service_id = attr("id")?;
    let provider_label = attr("provider")?;
    let published_at: u64 = attr("published_at")?
        .parse()
        .map_err(|_| invalid("published_at is not an integer".into()))?;
    let descriptor_el = root
        .first_child("moa:MethodService")
        .ok_or_else(|| invalid("moa:Record has no moa:MethodService".into()))?;
    let descriptor = parse_descriptor_element(descriptor_el)
        .map_err(|e| invalid(e.to_string()))?;
    Ok(RegistryRecord {
        service_id,
        descriptor,
        published_at,
        provider_label,
    })
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

struct StoreInner {
    records: BTreeMap<String, RegistryRecord>,
    next_id: u64,
    journal: File,
}

/// Journal-backed registry store. Shared across server threads via `Arc`.
pub struct RegistryStore {
    inner: RwLock<StoreInner>,
    journal_path: PathBuf,
}

impl RegistryStore {
    /// Opens the store, creating the journal if absent and replaying it
    /// otherwise. A line that does not replay cleanly fails the open with
    /// its 1-based line number.
    pub fn open(journal_path: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let journal_path = journal_path.into();
        let mut journal = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&journal_path)?;

        let mut records = BTreeMap::new();
        let mut max_id = 0u64;
        journal.rewind()?;
        for (idx, line) in BufReader::new(&journal).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            replay_line(&line, &mut records, &mut max_id).map_err(|reason| {
                RegistryError::CorruptJournal {
                    line: idx + 1,
                    reason,
                }
            })?;
        }

        Ok(Self {
            inner: RwLock::new(StoreInner {
                records,
                next_id: max_id + 1,
                journal,
            }),
            journal_path,
        })
    }

    pub fn journal_path(&self) -> &Path {
        &self.journal_path
    }

    /// Publishes a descriptor. The record is durable in the journal before
    /// the new id is returned. Re-publishing an already-present
    /// name+version pair is rejected; publish a new version instead.
    pub fn publish(
        &self,
        descriptor: MethodServiceDescriptor,
        provider_label: &str,
    ) -> Result<String, RegistryError> {
        let mut inner = self.inner.write().expect("registry lock poisoned");
        if inner.records.values().any(|r| {
            r.descriptor.service_name == descriptor.service_name
                && r.descriptor.version == descriptor.version
        }) {
            return Err(RegistryError::DuplicateService {
                name: descriptor.service_name,
                version: descriptor.version,
            });
        }
        let service_id = format!("s-{}", inner.next_id);
        let record = RegistryRecord {
            service_id: service_id.clone(),
            descriptor,
            published_at: now_seconds(),
            provider_label: provider_label.to_string(),
        };
        let line = format!("P {}\n", to_compact_string(&serialize_record_element(&record)));
        inner.journal.write_all(line.as_bytes())?;
        inner.journal.sync_data()?;
        inner.next_id += 1;
        inner.records.insert(service_id.clone(), record);
        Ok(service_id)
    }

    /// Returns the record for an id.
    pub fn lookup(&self, service_id: &str) -> Result<RegistryRecord, RegistryError> {
        self.inner
            .read()
            .expect("registry lock poisoned")
            .records
            .get(service_id)
            .cloned()
            .ok_or_else(|| RegistryError::NotFound(service_id.to_string()))
    }

    /// Removes a record; the removal is journaled before it takes effect in
    /// memory. The id is never reused.
    pub fn remove(&self, service_id: &str) -> Result<(), RegistryError> {
        let mut inner = self.inner.write().expect("registry lock poisoned");
        if !inner.records.contains_key(service_id) {
            return Err(RegistryError::NotFound(service_id.to_string()));
        }
        let line = format!("R {service_id}\n");
        inner.journal.write_all(line.as_bytes())?;
        inner.journal.sync_data()?;
        inner.records.remove(service_id);
        Ok(())
    }

    /// Every current record, ordered by service id.
    pub fn all_records(&self) -> Vec<RegistryRecord> {
        self.inner
            .read()
            .expect("registry lock poisoned")
            .records
            .values()
            .cloned()
            .collect()
    }

    /// Resolves a `name@version` reference to its record.
    pub fn find_by_reference(&self, name: &str, version: &str) -> Option<RegistryRecord> {
        self.inner
            .read()
            .expect("registry lock poisoned")
            .records
            .values()
            .find(|r| r.descriptor.service_name == name && r.descriptor.version == version)
            .cloned()
    }

    /// Ranked query. Classification filters are hard filters applied before
    /// scoring; results come back best-first with the registry tie rule
    /// (published_at ascending, then id) already applied by the ranker.
    pub fn query(
        &self,
        query: &QuerySpec,
        synonyms: &SynonymTable,
    ) -> Result<Vec<(RegistryRecord, SimilarityScore)>, RegistryError> {
        if query.is_empty() {
            return Err(RegistryError::EmptyQuery);
        }
        for (attr, value) in &query.classification_filters {
            let spec = crate::descriptor::framework_attribute(attr).ok_or_else(|| {
                RegistryError::InvalidQuery(format!("unknown framework attribute '{attr}'"))
            })?;
            if !spec.values.contains(&value.as_str()) {
                return Err(RegistryError::InvalidQuery(format!(
                    "value '{value}' is outside the domain of '{attr}'"
                )));
            }
        }

        let inner = self.inner.read().expect("registry lock poisoned");
        let survivors: Vec<&RegistryRecord> = inner
            .records
            .values()
            .filter(|r| {
                query
                    .classification_filters
                    .iter()
                    .all(|(attr, value)| r.descriptor.classification.matches(attr, value))
            })
            .collect();

        let ranked = rank(
            query,
            survivors.iter().map(|r| Candidate {
                service_id: &r.service_id,
                published_at: r.published_at,
                descriptor: &r.descriptor,
            }),
            synonyms,
        )
        .map_err(|e| match e {
            RetrievalError::InvalidIntention(msg) => RegistryError::InvalidQuery(msg),
            RetrievalError::MetamodelMismatch(a, b) => {
                RegistryError::InvalidQuery(format!("metamodel mismatch: {a} vs {b}"))
            }
        })?;

        Ok(ranked
            .into_iter()
            .map(|r| {
                let record = survivors
                    .iter()
                    .find(|s| s.service_id == r.candidate.service_id)
                    .expect("ranked candidate comes from survivors");
                ((*record).clone(), r.score)
            })
            .collect())
    }
}

fn replay_line(
    line: &str,
    records: &mut BTreeMap<String, RegistryRecord>,
    max_id: &mut u64,
) -> Result<(), String> {
    match line.split_once(' ') {
        Some(("P", xml)) => {
            let record = parse_record(xml).map_err(|e| e.to_string())?;
            let numeric = record
                .service_id
                .strip_prefix("s-")
                .and_then(|n| n.parse::<u64>().ok())
                .ok_or_else(|| format!("malformed service id '{}'", record.service_id))?;
            *max_id = (*max_id).max(numeric);
            if records.insert(record.service_id.clone(), record).is_some() {
                return Err("publish event for an id that is already live".into());
            }
            Ok(())
        }
        Some(("R", id)) => {
            if records.remove(id.trim()).is_none() {
                return Err(format!("remove event for unknown id '{}'", id.trim()));
            }
            Ok(())
        }
        _ => Err("line is neither 'P <xml>' nor 'R <id>'".into()),
    }
}

fn now_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("system clock before the epoch")
        .as_secs()
}

// ---------------------------------------------------------------------------
// Query and results XML
// ---------------------------------------------------------------------------

/// One entry of a ranked result list as it crosses the wire. Scores travel
/// with three decimals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultEntry {
    pub service_id: String,
    pub service_name: String,
    pub version: String,
    pub score: String,
}

/// Renders a score the way the wire and the CLI print it.
pub fn format_score(value: f64) -> String {
    format!("{value:.3}")
}

/// Builds the `moa:Query` document for a query spec.
pub fn serialize_query(query: &QuerySpec) -> String {
    let mut root = XmlElement::new("moa:Query");
    if let Some(text) = &query.intention_text {
        root = root.child(XmlElement::new("moa:Intention").text_content(text));
    }
    for (scope, keywords) in [
        ("paradigm", &query.paradigm_keywords),
        ("process", &query.process_keywords),
    ] {
        for keyword in keywords {
            root = root.child(
                XmlElement::new("moa:Keyword")
                    .attr("scope", scope)
                    .text_content(keyword),
            );
        }
    }
    if let Some(shape) = &query.product_shape {
        let mut el = XmlElement::new("moa:ProductShape").attr("metamodel", &shape.metamodel_name);
        for c in &shape.constraints {
            el = el.child(
                XmlElement::new("moa:Requires")
                    .attr("kind", c.kind_token())
                    .attr("min", c.min().to_string()),
            );
        }
        root = root.child(el);
    }
    for (attr, value) in &query.classification_filters {
        root = root.child(
            XmlElement::new("moa:Where")
                .attr("attr", attr)
                .attr("value", value),
        );
    }
    crate::xml::to_document_string(&root)
}

/// Parses a `moa:Query` document.
pub fn parse_query(text: &str) -> Result<QuerySpec, RegistryError> {
    let invalid = |msg: String| RegistryError::InvalidQuery(msg);
    let root = parse_document(text).map_err(|e| invalid(e.message))?;
    if root.name != "moa:Query" {
        return Err(invalid(format!("expected moa:Query, found <{}>", root.name)));
    }
    let mut query = QuerySpec::default();
    for child in &root.children {
        match child.name.as_str() {
            "moa:Intention" => {
                if query.intention_text.is_some() {
                    return Err(invalid("more than one moa:Intention".into()));
                }
                query.intention_text = Some(child.text.clone());
            }
            "moa:Keyword" => {
                let scope = child
                    .get_attr("scope")
                    .ok_or_else(|| invalid("moa:Keyword is missing 'scope'".into()))?;
                match scope {
                    "paradigm" => query.paradigm_keywords.push(child.text.clone()),
                    "process" => query.process_keywords.push(child.text.clone()),
                    other => return Err(invalid(format!("unknown keyword scope '{other}'"))),
                }
            }
            "moa:ProductShape" => {
                let metamodel = child
                    .get_attr("metamodel")
                    .ok_or_else(|| invalid("moa:ProductShape is missing 'metamodel'".into()))?;
                let mut shape = crate::descriptor::ProductSignature::none(metamodel);
                for req in child.children_named("moa:Requires") {
                    let kind = req
                        .get_attr("kind")
                        .ok_or_else(|| invalid("moa:Requires is missing 'kind'".into()))?;
                    let min: usize = req
                        .get_attr("min")
                        .ok_or_else(|| invalid("moa:Requires is missing 'min'".into()))?
                        .parse()
                        .map_err(|_| invalid("moa:Requires min is not an integer".into()))?;
                    let constraint = match kind {
                        "HAS_CLASS" => crate::descriptor::ShapeConstraint::HasClass { min },
                        "HAS_ASSOCIATION" => {
                            crate::descriptor::ShapeConstraint::HasAssociation { min }
                        }
                        other => return Err(invalid(format!("unknown constraint kind '{other}'"))),
                    };
                    shape.constraints.push(constraint);
                }
                query.product_shape = Some(shape);
            }
            "moa:Where" => {
                let attr = child
                    .get_attr("attr")
                    .ok_or_else(|| invalid("moa:Where is missing 'attr'".into()))?;
                let value = child
                    .get_attr("value")
                    .ok_or_else(|| invalid("moa:Where is missing 'value'".into()))?;
                query
                    .classification_filters
                    .push((attr.to_string(), value.to_string()));
            }
            other => return Err(invalid(format!("unexpected element <{other}> in moa:Query"))),
        }
    }
    Ok(query)
}

/// Builds the ranked `moa:Results` document.
pub fn serialize_results(results: &[(RegistryRecord, SimilarityScore)]) -> String {
    let root = XmlElement::new("moa:Results").children(results.iter().map(|(record, score)| {
        XmlElement::new("moa:Result")
            .attr("id", &record.service_id)
            .attr("name", &record.descriptor.service_name)
            .attr("version", &record.descriptor.version)
            .attr("score", format_score(score.value))
    }));
    crate::xml::to_document_string(&root)
}

/// Parses a `moa:Results` document into its entries.
pub fn parse_results(text: &str) -> Result<Vec<ResultEntry>, RegistryError> {
    let invalid = |msg: String| RegistryError::InvalidQuery(msg);
    let root = parse_document(text).map_err(|e| invalid(e.message))?;
    if root.name != "moa:Results" {
        return Err(invalid(format!("expected moa:Results, found <{}>", root.name)));
    }
    root.children_named("moa:Result")
        .map(|entry| {
            let attr = |key: &str| {
                entry
                    .get_attr(key)
                    .map(str::to_string)
                    .ok_or_else(|| invalid(format!("moa:Result is missing '{key}'")))
            };
            Ok(ResultEntry {
                service_id: attr("id")?,
                service_name: attr("name")?,
                version: attr("version")?,
                score: attr("score")?,
            })
        })
        .collect()
}

// Escape hatch for crates embedding the store behind the wire API.
pub use crate::descriptor::DescriptorError;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::parse_descriptor;

    fn descriptor(name: &str, version: &str) -> MethodServiceDescriptor {
        let base = crate::services::objectify_descriptor("http://127.0.0.1:1/invoke");
        let text = crate::descriptor::serialize_descriptor(&base)
            .replace("name=\"Objectify\"", &format!("name=\"{name}\""))
            .replace("version=\"1.0\"", &format!("version=\"{version}\""));
        parse_descriptor(&text).unwrap()
    }

    fn temp_store() -> (tempfile::TempDir, RegistryStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = RegistryStore::open(dir.path().join("registry.journal")).unwrap();
        (dir, store)
    }

    #[test]
    fn publish_then_lookup_round_trips() {
        let (_dir, store) = temp_store();
        let d = descriptor("Objectify", "1.0");
        let id = store.publish(d.clone(), "tests").unwrap();
        let record = store.lookup(&id).unwrap();
        assert_eq!(record.descriptor, d);
        assert_eq!(record.provider_label, "tests");
    }

    #[test]
    fn duplicate_name_version_is_rejected_but_new_version_is_not() {
        let (_dir, store) = temp_store();
        store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
        assert!(matches!(
            store.publish(descriptor("Objectify", "1.0"), "t"),
            Err(RegistryError::DuplicateService { .. })
        ));
        let second = store.publish(descriptor("Objectify", "1.1"), "t").unwrap();
        assert_eq!(store.all_records().len(), 2);
        assert!(store.lookup(&second).is_ok());
    }

    #[test]
    fn remove_then_lookup_is_not_found_and_second_remove_fails() {
        let (_dir, store) = temp_store();
        let id = store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
        store.remove(&id).unwrap();
        assert!(matches!(store.lookup(&id), Err(RegistryError::NotFound(_))));
        assert!(matches!(store.remove(&id), Err(RegistryError::NotFound(_))));
        assert!(matches!(
            store.lookup("nonexistent"),
            Err(RegistryError::NotFound(_))
        ));
    }

    #[test]
    fn restart_replays_to_the_same_record_set() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("registry.journal");
        let before;
        {
            let store = RegistryStore::open(&path).unwrap();
            store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
            let id = store.publish(descriptor("RenameClass", "1.0"), "t").unwrap();
            store.publish(descriptor("Identity", "1.0"), "t").unwrap();
            store.remove(&id).unwrap();
            before = store.all_records();
        }
        let reopened = RegistryStore::open(&path).unwrap();
        assert_eq!(reopened.all_records(), before);
        assert_eq!(before.len(), 2);
    }

    #[test]
    fn ids_are_monotone_and_never_reused_across_restarts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("registry.journal");
        let removed_id;
        {
            let store = RegistryStore::open(&path).unwrap();
            removed_id = store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
            store.remove(&removed_id).unwrap();
        }
        let store = RegistryStore::open(&path).unwrap();
        let next = store.publish(descriptor("Objectify", "2.0"), "t").unwrap();
        assert_ne!(next, removed_id);
        let n = |id: &str| id[2..].parse::<u64>().unwrap();
        assert!(n(&next) > n(&removed_id));
    }

    #[test]
    fn corrupt_journal_reports_the_offending_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("registry.journal");
        {
            let store = RegistryStore::open(&path).unwrap();
            store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
        }
        std::fs::OpenOptions::new()
            .append(true)
            .open(&path)
            .unwrap()
            .write_all(b"garbage line\n")
            .unwrap();
        match RegistryStore::open(&path) {
            Err(RegistryError::CorruptJournal { line, .. }) => assert_eq!(line, 2),
            Err(other) => panic!("expected CorruptJournal, got {other:?}"),
            Ok(_) => panic!("corrupt journal was accepted"),
        }
    }

    #[test]
    fn query_rejects_empty_and_unknown_filters() {
        let (_dir, store) = temp_store();
        store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
        let syn = SynonymTable::builtin();
        assert!(matches!(
            store.query(&QuerySpec::default(), &syn),
            Err(RegistryError::EmptyQuery)
        ));
        let bad_attr = QuerySpec {
            classification_filters: vec![("mood".into(), "sunny".into())],
            ..QuerySpec::default()
        };
        assert!(matches!(
            store.query(&bad_attr, &syn),
            Err(RegistryError::InvalidQuery(_))
        ));
    }

    #[test]
    fn classification_filters_are_hard() {
        let (_dir, store) = temp_store();
        store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
        let syn = SynonymTable::builtin();
        // built-ins are tagged assembly_without_overlapping, not agile
        let q = QuerySpec {
            classification_filters: vec![("construction_technique".into(), "agile".into())],
            ..QuerySpec::default()
        };
        assert!(store.query(&q, &syn).unwrap().is_empty());
        let q = QuerySpec {
            classification_filters: vec![(
                "construction_technique".into(),
                "assembly_without_overlapping".into(),
            )],
            ..QuerySpec::default()
        };
        assert_eq!(store.query(&q, &syn).unwrap().len(), 1);
    }

    #[test]
    fn intention_query_ranks_best_first() {
        let (_dir, store) = temp_store();
        store.publish(descriptor("Objectify", "1.0"), "t").unwrap();
        store.publish(descriptor("RenameClass", "1.0"), "t").unwrap();
        // RenameClass here still carries the objectify intention text; give
        // the real services distinct intentions through the service module.
        let syn = SynonymTable::builtin();
        let q = QuerySpec {
            intention_text: Some("objectify relationship".into()),
            ..QuerySpec::default()
        };
        let results = store.query(&q, &syn).unwrap();
        assert_eq!(results.len(), 2);
        assert!(results[0].1.value >= results[1].1.value);
        assert!(results[0].1.value == 1.0);
    }

    #[test]
    fn record_xml_round_trips() {
        let record = RegistryRecord {
            service_id: "s-7".into(),
            descriptor: descriptor("Objectify", "1.0"),
            published_at: 1_700_000_000,
            provider_label: "demo provider".into(),
        };
        let reparsed = parse_record(&serialize_record(&record)).unwrap();
        assert_eq!(reparsed, record);
    }
}

//! The method-fragment comparison framework as executable vocabulary.
//!
//! Thirteen attributes organised in four views, each with a closed value
//! domain. Services carry one value set per attribute as classification
//! metadata; registry queries filter on it. The same vocabulary also exists
//! as an XML fixture (`urn:moa:framework:1`) whose loader lives here, so
//! tests can check the two encodings against each other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::xml::{parse_document, XmlElement};

use super::DescriptorError;

/// The four views attributes are grouped under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    Objective,
    Usage,
    Subject,
    Process,
}

impl View {
    pub fn token(self) -> &'static str {
        match self {
            View::Objective => "objective",
            View::Usage => "usage",
            View::Subject => "subject",
            View::Process => "process",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One framework attribute: its view, closed value domain, and whether a
/// service may carry several values for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameworkAttribute {
    pub name: &'static str,
    pub view: View,
    pub values: &'static [&'static str],
    pub multi_valued: bool,
}

/// The full vocabulary, in canonical (view, attribute) order.
pub fn framework_attributes() -> &'static [FrameworkAttribute] {
    &FRAMEWORK_ATTRIBUTES
}

/// Looks up one attribute by name.
pub fn framework_attribute(name: &str) -> Option<&'static FrameworkAttribute> {
    FRAMEWORK_ATTRIBUTES.iter().find(|a| a.name == name)
}

static FRAMEWORK_ATTRIBUTES: [FrameworkAttribute; 13] = [
    FrameworkAttribute {
        name: "interoperability",
        view: View::Objective,
        values: &[
            "internal",
            "external_same_environment",
            "external_different_environments",
        ],
        multi_valued: false,
    },
    FrameworkAttribute {
        name: "interactivity",
        view: View::Objective,
        values: &["manual", "assisted", "automated"],
        multi_valued: false,
    },
    FrameworkAttribute {
        name: "covered_way",
        view: View::Usage,
        values: &["thinking", "modeling", "working", "supporting"],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "tools_implementation",
        view: View::Usage,
        values: &[
            "storage",
            "manipulation",
            "operating",
            "retrieval",
            "construction",
        ],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "level",
        view: View::Subject,
        values: &["intentional", "structural", "operational"],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "perspective",
        view: View::Subject,
        values: &["process_focused", "product_focused", "producer_focused"],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "recursion",
        view: View::Subject,
        values: &["true", "false"],
        multi_valued: false,
    },
    FrameworkAttribute {
        name: "abstraction_level",
        view: View::Subject,
        values: &["meta_meta_model", "meta_model", "model", "schema"],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "formalism",
        view: View::Subject,
        values: &["conceptual", "technical"],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "decomposition_principle",
        view: View::Process,
        values: &[
            "tree_decomposition",
            "by_intentions",
            "by_goals",
            "inheritance_instantiation",
            "not_specified",
        ],
        multi_valued: true,
    },
    FrameworkAttribute {
        name: "retrieval_principle",
        view: View::Process,
        values: &[
            "request",
            "similarity_measure",
            "request_by_goal",
            "request_by_endeavour",
            "semantic_similarity",
            "request_by_paradigms_intentions_processes_products",
            "not_specified",
        ],
        multi_valued: false,
    },
    FrameworkAttribute {
        name: "matching_with_situation",
        view: View::Process,
        values: &[
            "project_characterisation",
            "requirements_map",
            "by_goal_analysis",
            "by_goal_and_actor",
            "by_goal_actor_process_product_ontologies",
            "not_specified",
        ],
        multi_valued: false,
    },
    FrameworkAttribute {
        name: "construction_technique",
        view: View::Process,
        values: &[
            "assembly",
            "extension",
            "reduction",
            "agile",
            "assembly_without_overlapping",
            "not_specified",
        ],
        multi_valued: true,
    },
];

// ---------------------------------------------------------------------------
// Classification metadata
// ---------------------------------------------------------------------------

/// Per-service values over the framework: one non-empty value set per
/// attribute, every member inside the attribute's domain, single-valued
/// attributes holding exactly one member. Construction enforces all of it,
/// so a held value is always domain-valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationMetadata {
    values: BTreeMap<String, BTreeSet<String>>,
}

impl ClassificationMetadata {
    /// Builds classification metadata from (attribute, value set) pairs.
    /// Every framework attribute must appear exactly once.
    pub fn new<I, S>(entries: I) -> Result<Self, DescriptorError>
    where
        I: IntoIterator<Item = (S, BTreeSet<String>)>,
        S: Into<String>,
    {
        let mut values: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (name, set) in entries {
            let name = name.into();
            let attr = framework_attribute(&name).ok_or_else(|| {
                DescriptorError::DomainViolation(format!("unknown framework attribute '{name}'"))
            })?;
            if set.is_empty() {
                return Err(DescriptorError::DomainViolation(format!(
                    "attribute '{name}' has no value"
                )));
            }
            if !attr.multi_valued && set.len() != 1 {
                return Err(DescriptorError::DomainViolation(format!(
                    "attribute '{name}' takes exactly one value"
                )));
            }
            for v in &set {
                if !attr.values.contains(&v.as_str()) {
                    return Err(DescriptorError::DomainViolation(format!(
                        "value '{v}' is outside the domain of '{name}' \
                         (legal: {})",
                        attr.values.join(", ")
                    )));
                }
            }
            if values.insert(name.clone(), set).is_some() {
                return Err(DescriptorError::DomainViolation(format!(
                    "attribute '{name}' given twice"
                )));
            }
        }
        for attr in &FRAMEWORK_ATTRIBUTES {
            if !values.contains_key(attr.name) {
                return Err(DescriptorError::DomainViolation(format!(
                    "attribute '{}' is missing",
                    attr.name
                )));
            }
        }
        Ok(Self { values })
    }

    /// Parses `(attribute, space-separated tokens)` pairs, as they appear in
    /// descriptor XML.
    pub fn from_tokens<'a, I>(entries: I) -> Result<Self, DescriptorError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        Self::new(entries.into_iter().map(|(name, tokens)| {
            (
                name,
                tokens
                    .split_whitespace()
                    .map(str::to_string)
                    .collect::<BTreeSet<String>>(),
            )
        }))
    }

    pub fn get(&self, attribute: &str) -> Option<&BTreeSet<String>> {
        self.values.get(attribute)
    }

    /// True when the attribute's value set contains `value`.
    pub fn matches(&self, attribute: &str, value: &str) -> bool {
        self.values
            .get(attribute)
            .is_some_and(|set| set.contains(value))
    }

    /// Entries in canonical framework order.
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &BTreeSet<String>)> {
        FRAMEWORK_ATTRIBUTES.iter().map(move |attr| {
            (
                attr.name,
                self.values.get(attr.name).expect("complete by construction"),
            )
        })
    }

    /// The self-characterization carried by the built-in services.
    pub fn default_service_classification() -> Self {
        Self::from_tokens([
            ("interoperability", "external_different_environments"),
            ("interactivity", "automated"),
            ("covered_way", "thinking modeling working supporting"),
            (
                "tools_implementation",
                "storage manipulation operating retrieval construction",
            ),
            ("level", "intentional structural operational"),
            ("perspective", "process_focused product_focused"),
            ("recursion", "true"),
            ("abstraction_level", "meta_meta_model meta_model model schema"),
            ("formalism", "conceptual technical"),
            ("decomposition_principle", "by_intentions"),
            (
                "retrieval_principle",
                "request_by_paradigms_intentions_processes_products",
            ),
            ("matching_with_situation", "not_specified"),
            ("construction_technique", "assembly_without_overlapping"),
        ])
        .expect("built-in classification is domain-valid")
    }
}

// ---------------------------------------------------------------------------
// Framework fixture
// ---------------------------------------------------------------------------

/// The framework vocabulary plus the method-service column, as loaded from
/// the XML fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameworkFixture {
    pub attributes: Vec<FixtureAttribute>,
    /// (attribute name, value set) per cell of the method-service column.
    pub method_service_column: Vec<(String, BTreeSet<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureAttribute {
    pub view: String,
    pub name: String,
    pub values: Vec<String>,
    pub multi_valued: bool,
}

impl FrameworkFixture {
    /// Checks the fixture against the compiled-in vocabulary: same views,
    /// attributes, order, domains and cardinality, and a domain-valid
    /// method-service cell for every attribute.
    pub fn verify_against_vocabulary(&self) -> Result<(), String> {
        if self.attributes.len() != FRAMEWORK_ATTRIBUTES.len() {
            return Err(format!(
                "fixture has {} attributes, vocabulary has {}",
                self.attributes.len(),
                FRAMEWORK_ATTRIBUTES.len()
            ));
        }
        for (got, want) in self.attributes.iter().zip(&FRAMEWORK_ATTRIBUTES) {
            if got.name != want.name {
                return Err(format!(
                    "attribute order mismatch: fixture '{}', vocabulary '{}'",
                    got.name, want.name
                ));
            }
            if got.view != want.view.token() {
                return Err(format!("attribute '{}' is under view '{}'", got.name, got.view));
            }
            if got.values != want.values {
                return Err(format!("value domain mismatch for '{}'", got.name));
            }
            if got.multi_valued != want.multi_valued {
                return Err(format!("cardinality mismatch for '{}'", got.name));
            }
        }
        let mut seen = BTreeSet::new();
        for (attr, set) in &self.method_service_column {
            let spec = framework_attribute(attr)
                .ok_or_else(|| format!("column cell for unknown attribute '{attr}'"))?;
            if !seen.insert(attr.clone()) {
                return Err(format!("column has two cells for '{attr}'"));
            }
            if set.is_empty() {
                return Err(format!("column cell for '{attr}' is empty"));
            }
            if !spec.multi_valued && set.len() != 1 {
                return Err(format!("column cell for '{attr}' takes exactly one value"));
            }
            for v in set {
                if !spec.values.contains(&v.as_str()) {
                    return Err(format!("column value '{v}' outside domain of '{attr}'"));
                }
            }
        }
        if seen.len() != FRAMEWORK_ATTRIBUTES.len() {
            return Err(format!(
                "column covers {} of {} attributes",
                seen.len(),
                FRAMEWORK_ATTRIBUTES.len()
            ));
        }
        Ok(())
    }

    pub fn column_cell(&self, attribute: &str) -> Option<&BTreeSet<String>> {
        self.method_service_column
            .iter()
            .find(|(a, _)| a == attribute)
            .map(|(_, s)| s)
    }
}

/// Namespace URI accepted for an optional `xmlns:moa` on fixture roots.
pub const FRAMEWORK_NAMESPACE: &str = "urn:moa:framework:1";

/// Canonical serialization of a framework fixture; inverse of
/// [`load_framework_fixture`].
pub fn serialize_framework_fixture(fixture: &FrameworkFixture) -> String {
    let mut root = XmlElement::new("moa:Framework");
    let mut current_view: Option<(&str, XmlElement)> = None;
    for attr in &fixture.attributes {
        let attr_el = XmlElement::new("moa:Attribute")
            .attr("name", &attr.name)
            .attr("cardinality", if attr.multi_valued { "multi" } else { "single" })
            .children(
                attr.values
                    .iter()
                    .map(|v| XmlElement::new("moa:Value").attr("token", v)),
            );
        match &mut current_view {
            Some((view, el)) if *view == attr.view => {
                el.children.push(attr_el);
            }
            _ => {
                if let Some((_, el)) = current_view.take() {
                    root.children.push(el);
                }
                current_view = Some((
                    attr.view.as_str(),
                    XmlElement::new("moa:View").attr("name", &attr.view).child(attr_el),
                ));
            }
        }
    }
    if let Some((_, el)) = current_view.take() {
        root.children.push(el);
    }

    let column = XmlElement::new("moa:Column").attr("fragment", "method_service").children(
        fixture.method_service_column.iter().map(|(attr, values)| {
            XmlElement::new("moa:Cell")
                .attr("attribute", attr)
                .attr("values", values.iter().cloned().collect::<Vec<_>>().join(" "))
        }),
    );
    root.children.push(column);
    crate::xml::to_document_string(&root)
}

/// Loads the comparison-framework fixture.
pub fn load_framework_fixture(text: &str) -> Result<FrameworkFixture, DescriptorError> {
    let root = parse_document(text).map_err(|e| DescriptorError::MalformedXml(e.message))?;
    if root.name != "moa:Framework" {
        return Err(DescriptorError::SchemaViolation(format!(
            "expected root element moa:Framework, found <{}>",
            root.name
        )));
    }
    if let Some(ns) = root.get_attr("xmlns:moa") {
        if ns != FRAMEWORK_NAMESPACE {
            return Err(DescriptorError::SchemaViolation(format!(
                "unexpected namespace '{ns}'"
            )));
        }
    }

    let mut attributes = Vec::new();
    let mut method_service_column = Vec::new();
    for child in &root.children {
        match child.name.as_str() {
            "moa:View" => {
                let view = required(child, "name")?;
                for attr_el in child.children_named("moa:Attribute") {
                    attributes.push(parse_fixture_attribute(attr_el, &view)?);
                }
            }
            "moa:Column" => {
                let fragment = required(child, "fragment")?;
                if fragment != "method_service" {
                    return Err(DescriptorError::SchemaViolation(format!(
                        "unexpected column fragment '{fragment}'"
                    )));
                }
                for cell in child.children_named("moa:Cell") {
                    let attr = required(cell, "attribute")?;
                    let values: BTreeSet<String> = required(cell, "values")?
                        .split_whitespace()
                        .map(str::to_string)
                        .collect();
                    method_service_column.push((attr, values));
                }
            }
            other => {
                return Err(DescriptorError::SchemaViolation(format!(
                    "unexpected element <{other}> under moa:Framework"
                )))
            }
        }
    }
    Ok(FrameworkFixture {
        attributes,
        method_service_column,
    })
}

fn parse_fixture_attribute(
    el: &XmlElement,
    view: &str,
) -> Result<FixtureAttribute, DescriptorError> {
    let name = required(el, "name")?;
    let cardinality = required(el, "cardinality")?;
    let multi_valued = match cardinality.as_str() {
        "single" => false,
        "multi" => true,
        other => {
            return Err(DescriptorError::SchemaViolation(format!(
                "unknown cardinality '{other}' on attribute '{name}'"
            )))
        }
    };
    let values = el
        .children_named("moa:Value")
        .map(|v| required(v, "token"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FixtureAttribute {
        view: view.to_string(),
        name,
        values,
        multi_valued,
    })
}

fn required(el: &XmlElement, key: &str) -> Result<String, DescriptorError> {
    el.get_attr(key).map(str::to_string).ok_or_else(|| {
        DescriptorError::SchemaViolation(format!(
            "<{}> is missing required attribute '{key}'",
            el.name
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_has_thirteen_attributes_in_four_views() {
        assert_eq!(FRAMEWORK_ATTRIBUTES.len(), 13);
        for view in [View::Objective, View::Usage, View::Subject, View::Process] {
            assert!(FRAMEWORK_ATTRIBUTES.iter().any(|a| a.view == view));
        }
    }

    #[test]
    fn default_classification_is_domain_valid() {
        let c = ClassificationMetadata::default_service_classification();
        assert!(c.matches("interactivity", "automated"));
        assert!(c.matches("construction_technique", "assembly_without_overlapping"));
        assert!(!c.matches("construction_technique", "agile"));
    }

    #[test]
    fn every_legal_value_is_accepted_and_one_illegal_per_attribute_rejected() {
        let base = ClassificationMetadata::default_service_classification();
        for attr in framework_attributes() {
            for legal in attr.values {
                let mut entries: Vec<(String, BTreeSet<String>)> = base
                    .entries()
                    .map(|(n, s)| (n.to_string(), s.clone()))
                    .collect();
                let slot = entries.iter_mut().find(|(n, _)| n == attr.name).unwrap();
                slot.1 = BTreeSet::from([legal.to_string()]);
                ClassificationMetadata::new(entries).unwrap_or_else(|e| {
                    panic!("legal value '{legal}' for '{}' rejected: {e}", attr.name)
                });
            }
            let mut entries: Vec<(String, BTreeSet<String>)> = base
                .entries()
                .map(|(n, s)| (n.to_string(), s.clone()))
                .collect();
            let slot = entries.iter_mut().find(|(n, _)| n == attr.name).unwrap();
            slot.1 = BTreeSet::from(["telepathic".to_string()]);
            assert!(
                matches!(
                    ClassificationMetadata::new(entries),
                    Err(DescriptorError::DomainViolation(_))
                ),
                "illegal value accepted for '{}'",
                attr.name
            );
        }
    }

    #[test]
    fn missing_attribute_is_rejected() {
        let base = ClassificationMetadata::default_service_classification();
        let entries: Vec<(String, BTreeSet<String>)> = base
            .entries()
            .skip(1)
            .map(|(n, s)| (n.to_string(), s.clone()))
            .collect();
        assert!(matches!(
            ClassificationMetadata::new(entries),
            Err(DescriptorError::DomainViolation(_))
        ));
    }

    #[test]
    fn single_valued_attributes_reject_sets() {
        let base = ClassificationMetadata::default_service_classification();
        let mut entries: Vec<(String, BTreeSet<String>)> = base
            .entries()
            .map(|(n, s)| (n.to_string(), s.clone()))
            .collect();
        let slot = entries
            .iter_mut()
            .find(|(n, _)| n == "interactivity")
            .unwrap();
        slot.1 = BTreeSet::from(["manual".to_string(), "automated".to_string()]);
        assert!(matches!(
            ClassificationMetadata::new(entries),
            Err(DescriptorError::DomainViolation(_))
        ));
    }
}

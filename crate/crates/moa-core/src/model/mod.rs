//! Class-diagram products and their interchange format.
//!
//! The metamodel is a fixed MOF-lite tower: the meta-meta level is hard-coded
//! in [`Metamodel`], the meta level is the class-diagram metamodel returned
//! by [`class_diagram_metamodel`], and the model level is [`ModelDocument`]
//! instances flowing between services as `.ximodel` files.
//!
//! The processing pipeline is:
//!
//! ```text
//! text --parse_model--> ModelDocument --instantiate--> ObjectGraph
//!                            ^                             |
//!                            +---------generate-----------+
//! ModelDocument --serialize_model--> canonical text
//! ```
//!
//! Serialization is canonical (classes before associations, insertion order
//! within each section, fixed attribute order, LF endings), so canonical
//! documents round-trip byte-for-byte.

mod graph;
mod parse;
mod serialize;

pub use graph::{
    generate, instantiate, AssociationId, AssociationNode, ClassId, ClassNode, GraphEnd,
    ObjectGraph,
};
pub use parse::{parse_model, parse_model_element};
pub use serialize::{serialize_model, serialize_model_element};

use std::fmt;

use thiserror::Error;

/// Namespace URI accepted for an optional `xmlns:moa` on `.ximodel` roots.
pub const MODEL_NAMESPACE: &str = "urn:moa:ximodel:1";

/// File extension for model documents.
pub const MODEL_FILE_EXTENSION: &str = "ximodel";

// ---------------------------------------------------------------------------
// Metamodel (the fixed meta level)
// ---------------------------------------------------------------------------

/// The element kinds a class-diagram model is built from. Exactly these four
/// exist; there are no extension kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Class,
    Attribute,
    Association,
    AssociationEnd,
}

/// A metamodel: its name, the element kinds it admits and the structural
/// rules its instances must satisfy (enforced by [`validate_model`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metamodel {
    pub name: &'static str,
    pub element_kinds: [ElementKind; 4],
    pub rules: &'static [RuleId],
}

/// The single metamodel of this crate. Every attribute belongs to exactly
/// one class (or association), every association has exactly two ends, and
/// each end references exactly one class.
pub fn class_diagram_metamodel() -> &'static Metamodel {
    static METAMODEL: Metamodel = Metamodel {
        name: "classdiagram",
        element_kinds: [
            ElementKind::Class,
            ElementKind::Attribute,
            ElementKind::Association,
            ElementKind::AssociationEnd,
        ],
        rules: &[
            RuleId::ValidIdentifier,
            RuleId::DuplicateName,
            RuleId::DanglingReference,
        ],
    };
    &METAMODEL
}

// ---------------------------------------------------------------------------
// Model-level types
// ---------------------------------------------------------------------------

/// Multiplicity of an association end. The end's multiplicity constrains,
/// for each instance of the opposite end's class, how many instances of this
/// end's class may be linked to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Multiplicity {
    /// `1`
    One,
    /// `0..1`
    Optional,
    /// `0..*`
    Many,
    /// `1..*`
    AtLeastOne,
}

/// Token outside the four legal multiplicity values.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid multiplicity token '{token}': expected one of 1, 0..1, 0..*, 1..*")]
pub struct InvalidMultiplicity {
    pub token: String,
}

impl Multiplicity {
    pub const ALL: [Multiplicity; 4] = [
        Multiplicity::One,
        Multiplicity::Optional,
        Multiplicity::Many,
        Multiplicity::AtLeastOne,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Multiplicity::One => "1",
            Multiplicity::Optional => "0..1",
            Multiplicity::Many => "0..*",
            Multiplicity::AtLeastOne => "1..*",
        }
    }

    pub fn from_token(token: &str) -> Result<Self, InvalidMultiplicity> {
        match token {
            "1" => Ok(Multiplicity::One),
            "0..1" => Ok(Multiplicity::Optional),
            "0..*" => Ok(Multiplicity::Many),
            "1..*" => Ok(Multiplicity::AtLeastOne),
            other => Err(InvalidMultiplicity {
                token: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Scalar type of a class or association attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    String,
    Integer,
    Boolean,
}

impl ScalarType {
    pub const ALL: [ScalarType; 3] = [ScalarType::String, ScalarType::Integer, ScalarType::Boolean];

    pub fn token(self) -> &'static str {
        match self {
            ScalarType::String => "string",
            ScalarType::Integer => "integer",
            ScalarType::Boolean => "boolean",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "string" => Some(ScalarType::String),
            "integer" => Some(ScalarType::Integer),
            "boolean" => Some(ScalarType::Boolean),
            _ => None,
        }
    }
}

/// A named, typed attribute owned by a class or an association.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub scalar_type: ScalarType,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, scalar_type: ScalarType) -> Self {
        Self {
            name: name.into(),
            scalar_type,
        }
    }
}

/// A class with its attributes. Attribute names are unique within the class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
}

impl ClassDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            attributes: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, scalar_type: ScalarType) -> Self {
        self.attributes.push(AttributeDef::new(name, scalar_type));
        self
    }
}

/// One end of a binary association.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationEnd {
    pub class_ref: String,
    pub multiplicity: Multiplicity,
    pub role: Option<String>,
}

impl AssociationEnd {
    pub fn new(class_ref: impl Into<String>, multiplicity: Multiplicity) -> Self {
        Self {
            class_ref: class_ref.into(),
            multiplicity,
            role: None,
        }
    }

    pub fn with_role(mut self, role: impl Into<String>) -> Self {
        self.role = Some(role.into());
        self
    }
}

/// A binary association. Self-associations (both ends on the same class)
/// are legal model content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationDef {
    pub name: String,
    pub end_a: AssociationEnd,
    pub end_b: AssociationEnd,
    pub attributes: Vec<AttributeDef>,
}

impl AssociationDef {
    pub fn new(name: impl Into<String>, end_a: AssociationEnd, end_b: AssociationEnd) -> Self {
        Self {
            name: name.into(),
            end_a,
            end_b,
            attributes: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, scalar_type: ScalarType) -> Self {
        self.attributes.push(AttributeDef::new(name, scalar_type));
        self
    }
}

/// A class-diagram model: the product exchanged between method services.
///
/// Class names are unique among classes, association names among
/// associations (the two namespaces are independent), and every association
/// end resolves to a class of the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub model_name: String,
    pub classes: Vec<ClassDef>,
    pub associations: Vec<AssociationDef>,
}

impl ModelDocument {
    pub fn new(model_name: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            classes: Vec::new(),
            associations: Vec::new(),
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn association(&self, name: &str) -> Option<&AssociationDef> {
        self.associations.iter().find(|a| a.name == name)
    }
}

// ---------------------------------------------------------------------------
// Errors and validation
// ---------------------------------------------------------------------------

/// Errors raised by model parsing and instantiation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("validation failed: {0}")]
    ValidationFailed(ValidationReport),
}

/// Identifier of a structural rule checked by [`validate_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    ValidIdentifier,
    DuplicateName,
    DanglingReference,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleId::ValidIdentifier => "ValidIdentifier",
            RuleId::DuplicateName => "DuplicateName",
            RuleId::DanglingReference => "DanglingReference",
        };
        f.write_str(s)
    }
}

/// One rule violation: which rule, where, and what was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: RuleId,
    pub path: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.path, self.detail)
    }
}

/// Outcome of validating a document; empty means every invariant holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: RuleId, path: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            rule,
            path: path.into(),
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// True for names of the form `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks every structural invariant of a document. Violations are data,
/// not errors: the report is empty iff the document is valid.
pub fn validate_model(doc: &ModelDocument) -> ValidationReport {
    let mut report = ValidationReport::default();
    let model_path = format!("Model[{}]", doc.model_name);

    check_identifier(&mut report, &doc.model_name, &model_path, "model name");

    let mut class_names: Vec<&str> = Vec::new();
    for class in &doc.classes {
        let path = format!("{model_path}/Class[{}]", class.name);
        check_identifier(&mut report, &class.name, &path, "class name");
        if class_names.contains(&class.name.as_str()) {
            report.push(
                RuleId::DuplicateName,
                &path,
                format!("class '{}' is defined more than once", class.name),
            );
        } else {
            class_names.push(&class.name);
        }
        check_attributes(&mut report, &class.attributes, &path);
    }

    let mut assoc_names: Vec<&str> = Vec::new();
    for assoc in &doc.associations {
        let path = format!("{model_path}/Association[{}]", assoc.name);
        check_identifier(&mut report, &assoc.name, &path, "association name");
        if assoc_names.contains(&assoc.name.as_str()) {
            report.push(
                RuleId::DuplicateName,
                &path,
                format!("association '{}' is defined more than once", assoc.name),
            );
        } else {
            assoc_names.push(&assoc.name);
        }
        for (label, end) in [("End[0]", &assoc.end_a), ("End[1]", &assoc.end_b)] {
            let end_path = format!("{path}/{label}");
            if !class_names.contains(&end.class_ref.as_str()) {
                report.push(
                    RuleId::DanglingReference,
                    &end_path,
                    format!("end references unknown class '{}'", end.class_ref),
                );
            }
            if let Some(role) = &end.role {
                check_identifier(&mut report, role, &end_path, "role");
            }
        }
        check_attributes(&mut report, &assoc.attributes, &path);
    }

    report
}

fn check_identifier(report: &mut ValidationReport, name: &str, path: &str, what: &str) {
    if !is_identifier(name) {
        report.push(
            RuleId::ValidIdentifier,
            path,
            format!("{what} '{name}' is not a valid identifier"),
        );
    }
}

fn check_attributes(report: &mut ValidationReport, attributes: &[AttributeDef], owner_path: &str) {
    let mut seen: Vec<&str> = Vec::new();
    for attr in attributes {
        let path = format!("{owner_path}/Attribute[{}]", attr.name);
        check_identifier(report, &attr.name, &path, "attribute name");
        if seen.contains(&attr.name.as_str()) {
            report.push(
                RuleId::DuplicateName,
                &path,
                format!("attribute '{}' is defined more than once", attr.name),
            );
        } else {
            seen.push(&attr.name);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_doc() -> ModelDocument {
        ModelDocument {
            model_name: "PersonCompany".into(),
            classes: vec![
                ClassDef::new("Person").with_attribute("name", ScalarType::String),
                ClassDef::new("Company").with_attribute("name", ScalarType::String),
            ],
            associations: vec![AssociationDef::new(
                "WorksFor",
                AssociationEnd::new("Person", Multiplicity::Many),
                AssociationEnd::new("Company", Multiplicity::One),
            )],
        }
    }

    #[test]
    fn valid_document_yields_empty_report() {
        assert!(validate_model(&two_class_doc()).is_empty());
    }

    #[test]
    fn duplicate_class_name_is_one_violation() {
        let mut doc = two_class_doc();
        doc.classes.push(ClassDef::new("Person"));
        let report = validate_model(&doc);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, RuleId::DuplicateName);
        assert!(report.violations[0].path.contains("Class[Person]"));
    }

    #[test]
    fn dangling_end_reference_is_reported() {
        let mut doc = two_class_doc();
        doc.associations[0].end_b.class_ref = "Ghost".into();
        let report = validate_model(&doc);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, RuleId::DanglingReference);
    }

    #[test]
    fn class_and_association_namespaces_are_independent() {
        let mut doc = two_class_doc();
        doc.classes.push(ClassDef::new("WorksFor"));
        assert!(validate_model(&doc).is_empty());
    }

    #[test]
    fn only_the_four_multiplicity_tokens_parse() {
        for m in Multiplicity::ALL {
            assert_eq!(Multiplicity::from_token(m.token()), Ok(m));
        }
        for bad in ["5..7", "0", "*", "1..1", "", "0..2", "many", " 1"] {
            let err = Multiplicity::from_token(bad).unwrap_err();
            assert_eq!(err.token, bad);
        }
    }

    #[test]
    fn identifier_rule() {
        for good in ["a", "_x", "Person", "a1_b2"] {
            assert!(is_identifier(good), "{good}");
        }
        for bad in ["", "1a", "a-b", "a b", "é", "a.b"] {
            assert!(!is_identifier(bad), "{bad}");
        }
    }

    #[test]
    fn metamodel_is_fixed() {
        let mm = class_diagram_metamodel();
        assert_eq!(mm.name, "classdiagram");
        assert_eq!(mm.element_kinds.len(), 4);
    }
}

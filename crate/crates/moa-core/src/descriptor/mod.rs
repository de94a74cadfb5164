//! Two-part descriptors of method services.
//!
//! A method service combines a descriptor part with an implementation part;
//! this module is the descriptor part. Its semantic half documents the
//! service through four sub-parts (intention, paradigm, process, product)
//! and is what retrieval works on. Its operational half lists the invokable
//! operations, their message kinds and the endpoint. Every service
//! additionally carries classification metadata over the comparison
//! framework vocabulary in [`framework`], which registry queries can filter
//! on.

mod framework;
mod intention;
mod xml;

pub use framework::{
    framework_attribute, framework_attributes, load_framework_fixture,
    serialize_framework_fixture, ClassificationMetadata, FixtureAttribute, FrameworkAttribute,
    FrameworkFixture, View,
};
pub use intention::{normalize_intention, Intention};
pub(crate) use intention::normalize_token;
pub use xml::{
    parse_descriptor, parse_descriptor_element, serialize_descriptor, serialize_descriptor_element,
};

use thiserror::Error;

use crate::model::ModelDocument;

/// Namespace URI accepted for an optional `xmlns:moa` on descriptor roots.
pub const DESCRIPTOR_NAMESPACE: &str = "urn:moa:descriptor:1";

/// File extension for descriptor documents (`NAME.msd.xml`).
pub const DESCRIPTOR_FILE_EXTENSION: &str = "msd.xml";

/// Errors raised while parsing or assembling descriptors.
#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("intention text is empty")]
    EmptyIntention,
    #[error("intention '{0}' has no target: at least a verb and a target are required")]
    MissingTarget(String),
}

// ---------------------------------------------------------------------------
// Product signatures
// ---------------------------------------------------------------------------

/// One lower-bound constraint on the shape of a product model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeConstraint {
    HasClass { min: usize },
    HasAssociation { min: usize },
}

impl ShapeConstraint {
    pub fn kind_token(self) -> &'static str {
        match self {
            ShapeConstraint::HasClass { .. } => "HAS_CLASS",
            ShapeConstraint::HasAssociation { .. } => "HAS_ASSOCIATION",
        }
    }

    pub fn min(self) -> usize {
        match self {
            ShapeConstraint::HasClass { min } | ShapeConstraint::HasAssociation { min } => min,
        }
    }
}

/// Names a metamodel and the shape a product must have. An empty constraint
/// list is the NONE predicate, satisfied by every document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSignature {
    pub metamodel_name: String,
    pub constraints: Vec<ShapeConstraint>,
}

impl ProductSignature {
    /// The NONE predicate for the given metamodel.
    pub fn none(metamodel_name: impl Into<String>) -> Self {
        Self {
            metamodel_name: metamodel_name.into(),
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, constraint: ShapeConstraint) -> Self {
        self.constraints.push(constraint);
        self
    }

    /// The strongest signature a concrete document satisfies: its actual
    /// element counts as lower bounds.
    pub fn of_document(doc: &ModelDocument) -> Self {
        Self {
            metamodel_name: crate::model::class_diagram_metamodel().name.to_string(),
            constraints: vec![
                ShapeConstraint::HasClass {
                    min: doc.classes.len(),
                },
                ShapeConstraint::HasAssociation {
                    min: doc.associations.len(),
                },
            ],
        }
    }
}

// ---------------------------------------------------------------------------
// Descriptor parts
// ---------------------------------------------------------------------------

/// The way-of-thinking / way-of-working documentation of a service plus its
/// product contract. All four sub-parts are mandatory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticDescriptor {
    pub intention: Intention,
    pub paradigm: String,
    pub process_description: Vec<String>,
    pub product_in: ProductSignature,
    pub product_out: ProductSignature,
}

/// One invokable operation. Input and output messages are always of kind
/// PRODUCT (a model document); parameters are declared by name and bound to
/// string values at invoke time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationDef {
    pub name: String,
    pub input_params: Vec<String>,
    pub output_params: Vec<String>,
}

/// The machine-readable half: operations and where to invoke them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationalDescriptor {
    pub endpoint: String,
    pub operations: Vec<OperationDef>,
}

impl OperationalDescriptor {
    pub fn operation<'a>(&'a self, name: &str) -> Option<&'a OperationDef> {
        self.operations.iter().find(|op| op.name == name)
    }
}

/// Complete descriptor of one method service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodServiceDescriptor {
    pub service_name: String,
    pub version: String,
    pub semantic: SemanticDescriptor,
    pub operational: OperationalDescriptor,
    pub classification: ClassificationMetadata,
}

impl MethodServiceDescriptor {
    /// `name@version`, the reference form used by processes and the CLI.
    pub fn reference(&self) -> String {
        format!("{}@{}", self.service_name, self.version)
    }
}

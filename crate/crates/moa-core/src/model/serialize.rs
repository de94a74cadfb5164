//! Canonical serialization of model documents.
//!
//! Canonical form: declaration line, classes before associations, each
//! section in document insertion order, attributes in schema order
//! (`name`, then `type` / `class`, `multiplicity`, `role`), two-space
//! indentation, LF endings. Parsing canonical output reproduces the
//! document exactly, and serializing a parsed canonical file reproduces
//! its bytes.

use crate::xml::{to_document_string, XmlElement};

use super::{AssociationDef, AssociationEnd, AttributeDef, ClassDef, ModelDocument};

/// Serializes a valid document to canonical `.ximodel` text.
///
/// The document is expected to satisfy the structural invariants
/// (see `validate_model`); serialization itself cannot fail.
pub fn serialize_model(doc: &ModelDocument) -> String {
    to_document_string(&serialize_model_element(doc))
}

/// Builds the `moa:Model` element tree, for embedding into envelopes.
pub fn serialize_model_element(doc: &ModelDocument) -> XmlElement {
    XmlElement::new("moa:Model")
        .attr("name", &doc.model_name)
        .children(doc.classes.iter().map(class_element))
        .children(doc.associations.iter().map(association_element))
}

fn class_element(class: &ClassDef) -> XmlElement {
    XmlElement::new("moa:Class")
        .attr("name", &class.name)
        .children(class.attributes.iter().map(attribute_element))
}

fn association_element(assoc: &AssociationDef) -> XmlElement {
    XmlElement::new("moa:Association")
        .attr("name", &assoc.name)
        .child(end_element(&assoc.end_a))
        .child(end_element(&assoc.end_b))
        .children(assoc.attributes.iter().map(attribute_element))
}

fn end_element(end: &AssociationEnd) -> XmlElement {
    let mut el = XmlElement::new("moa:End")
        .attr("class", &end.class_ref)
        .attr("multiplicity", end.multiplicity.token());
    if let Some(role) = &end.role {
        el = el.attr("role", role);
    }
    el
}

fn attribute_element(attr: &AttributeDef) -> XmlElement {
    XmlElement::new("moa:Attribute")
        .attr("name", &attr.name)
        .attr("type", attr.scalar_type.token())
}

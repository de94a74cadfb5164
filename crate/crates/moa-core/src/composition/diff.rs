//! Structural diff between two model documents.
//!
//! A [`ChangeSet`] records what a transformation did in terms of element
//! identifiers (the model name, class names, association names, attribute
//! paths). Change sets drive the parallel merge: they are replayable
//! against the base document, and their touched-identifier sets decide
//! whether two branches overlap.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{AssociationDef, ClassDef, ModelDocument};

/// Identifier of one model element, the unit of overlap detection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ElementId {
    Model,
    Class(String),
    Association(String),
    ClassAttribute { class: String, attribute: String },
    AssociationAttribute { association: String, attribute: String },
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::Model => write!(f, "model"),
            ElementId::Class(name) => write!(f, "class:{name}"),
            ElementId::Association(name) => write!(f, "assoc:{name}"),
            ElementId::ClassAttribute { class, attribute } => {
                write!(f, "class:{class}.attr:{attribute}")
            }
            ElementId::AssociationAttribute {
                association,
                attribute,
            } => write!(f, "assoc:{association}.attr:{attribute}"),
        }
    }
}

/// One replayable change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Change {
    RenamedModel(String),
    AddedClass(ClassDef),
    RemovedClass(String),
    /// The class exists in both documents but differs; carries the revised
    /// definition.
    ModifiedClass(ClassDef),
    AddedAssociation(AssociationDef),
    RemovedAssociation(String),
    ModifiedAssociation(AssociationDef),
}

/// The difference between a base document and a revised one, together with
/// every element identifier it touches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub changes: Vec<Change>,
    touched: BTreeSet<ElementId>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// Every identifier this change set touches. Modified elements
    /// contribute their own identifier plus one per changed attribute.
    pub fn touched(&self) -> &BTreeSet<ElementId> {
        &self.touched
    }

    /// Replays the changes onto a base document. Removals and
    /// modifications keep the base element order; additions are appended
    /// sorted by name, so applying several disjoint change sets yields the
    /// same document whatever the order.
    pub(crate) fn apply_to(&self, doc: &mut ModelDocument) {
        for change in &self.changes {
            match change {
                Change::RenamedModel(name) => doc.model_name = name.clone(),
                Change::RemovedClass(name) => doc.classes.retain(|c| c.name != *name),
                Change::ModifiedClass(def) => {
                    if let Some(slot) = doc.classes.iter_mut().find(|c| c.name == def.name) {
                        *slot = def.clone();
                    }
                }
                Change::AddedClass(def) => {
                    let at = doc
                        .classes
                        .iter()
                        .position(|c| c.name > def.name)
                        .unwrap_or(doc.classes.len());
                    doc.classes.insert(at, def.clone());
                }
                Change::RemovedAssociation(name) => doc.associations.retain(|a| a.name != *name),
                Change::ModifiedAssociation(def) => {
                    if let Some(slot) = doc.associations.iter_mut().find(|a| a.name == def.name) {
                        *slot = def.clone();
                    }
                }
                Change::AddedAssociation(def) => {
                    let at = doc
                        .associations
                        .iter()
                        .position(|a| a.name > def.name)
                        .unwrap_or(doc.associations.len());
                    doc.associations.insert(at, def.clone());
                }
            }
        }
    }
}

/// Computes the structural diff from `base` to `revised`. Deterministic:
/// the change list follows base order for removals/modifications and
/// revised order for additions.
pub fn change_set(base: &ModelDocument, revised: &ModelDocument) -> ChangeSet {
    let mut cs = ChangeSet::default();

    if base.model_name != revised.model_name {
        cs.changes
            .push(Change::RenamedModel(revised.model_name.clone()));
        cs.touched.insert(ElementId::Model);
    }

    for class in &base.classes {
        match revised.class(&class.name) {
            None => {
                cs.changes.push(Change::RemovedClass(class.name.clone()));
                cs.touched.insert(ElementId::Class(class.name.clone()));
            }
            Some(new) if new != class => {
                cs.changes.push(Change::ModifiedClass(new.clone()));
                cs.touched.insert(ElementId::Class(class.name.clone()));
                for attr in attribute_diff(&class.attributes, &new.attributes) {
                    cs.touched.insert(ElementId::ClassAttribute {
                        class: class.name.clone(),
                        attribute: attr,
                    });
                }
            }
            Some(_) => {}
        }
    }
    for class in &revised.classes {
        if base.class(&class.name).is_none() {
            cs.changes.push(Change::AddedClass(class.clone()));
            cs.touched.insert(ElementId::Class(class.name.clone()));
        }
    }

    for assoc in &base.associations {
        match revised.association(&assoc.name) {
            None => {
                cs.changes
                    .push(Change::RemovedAssociation(assoc.name.clone()));
                cs.touched.insert(ElementId::Association(assoc.name.clone()));
            }
            Some(new) if new != assoc => {
                cs.changes.push(Change::ModifiedAssociation(new.clone()));
                cs.touched.insert(ElementId::Association(assoc.name.clone()));
                for attr in attribute_diff(&assoc.attributes, &new.attributes) {
                    cs.touched.insert(ElementId::AssociationAttribute {
                        association: assoc.name.clone(),
                        attribute: attr,
                    });
                }
            }
            Some(_) => {}
        }
    }
    for assoc in &revised.associations {
        if base.association(&assoc.name).is_none() {
            cs.changes.push(Change::AddedAssociation(assoc.clone()));
            cs.touched.insert(ElementId::Association(assoc.name.clone()));
        }
    }

    cs
}

fn attribute_diff(
    base: &[crate::model::AttributeDef],
    revised: &[crate::model::AttributeDef],
) -> Vec<String> {
    let mut names = Vec::new();
    for attr in base {
        match revised.iter().find(|a| a.name == attr.name) {
            None => names.push(attr.name.clone()),
            Some(new) if new != attr => names.push(attr.name.clone()),
            Some(_) => {}
        }
    }
    for attr in revised {
        if !base.iter().any(|a| a.name == attr.name) {
            names.push(attr.name.clone());
        }
    }
    names
}

//! In-memory resolved form of a model document.
//!
//! Name references are replaced by arena indices so that transformations
//! manipulate objects, not strings. `generate` walks the arena back into a
//! document; `generate(instantiate(d))` reproduces `d` exactly.

use super::{
    validate_model, AssociationDef, AssociationEnd, AttributeDef, ClassDef, ModelDocument,
    ModelError, Multiplicity,
};

/// Index of a class node within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassId(usize);

/// Index of an association node within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AssociationId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassNode {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
}

/// Association end holding a direct class reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphEnd {
    pub class: ClassId,
    pub multiplicity: Multiplicity,
    pub role: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationNode {
    pub name: String,
    pub end_a: GraphEnd,
    pub end_b: GraphEnd,
    pub attributes: Vec<AttributeDef>,
}

/// Object graph over class and association nodes. Association ends hold
/// [`ClassId`]s, so class renames propagate without reference fixups.
///
/// Class nodes are never removed (no built-in transformation needs it), so
/// `ClassId`s stay valid for the life of the graph. Associations may be
/// removed and appended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectGraph {
    model_name: String,
    classes: Vec<ClassNode>,
    associations: Vec<AssociationNode>,
}

impl ObjectGraph {
    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    /// Total node count: one node per class plus one per association.
    pub fn node_count(&self) -> usize {
        self.classes.len() + self.associations.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = (ClassId, &ClassNode)> {
        self.classes.iter().enumerate().map(|(i, c)| (ClassId(i), c))
    }

    pub fn associations(&self) -> impl Iterator<Item = (AssociationId, &AssociationNode)> {
        self.associations
            .iter()
            .enumerate()
            .map(|(i, a)| (AssociationId(i), a))
    }

    pub fn class(&self, id: ClassId) -> &ClassNode {
        &self.classes[id.0]
    }

    pub fn class_mut(&mut self, id: ClassId) -> &mut ClassNode {
        &mut self.classes[id.0]
    }

    pub fn association(&self, id: AssociationId) -> &AssociationNode {
        &self.associations[id.0]
    }

    pub fn class_by_name(&self, name: &str) -> Option<ClassId> {
        self.classes
            .iter()
            .position(|c| c.name == name)
            .map(ClassId)
    }

    pub fn association_by_name(&self, name: &str) -> Option<AssociationId> {
        self.associations
            .iter()
            .position(|a| a.name == name)
            .map(AssociationId)
    }

    pub fn add_class(&mut self, node: ClassNode) -> ClassId {
        self.classes.push(node);
        ClassId(self.classes.len() - 1)
    }

    pub fn add_association(&mut self, node: AssociationNode) -> AssociationId {
        self.associations.push(node);
        AssociationId(self.associations.len() - 1)
    }

    /// Removes the named association and returns its node. Later
    /// `AssociationId`s are invalidated by the removal; `ClassId`s are not.
    pub fn remove_association(&mut self, name: &str) -> Option<AssociationNode> {
        let idx = self.associations.iter().position(|a| a.name == name)?;
        Some(self.associations.remove(idx))
    }
}

/// Resolves a valid document into an object graph. Fails with
/// `ValidationFailed` when the document violates any invariant.
pub fn instantiate(doc: &ModelDocument) -> Result<ObjectGraph, ModelError> {
    let report = validate_model(doc);
    if !report.is_empty() {
        return Err(ModelError::ValidationFailed(report));
    }

    let classes: Vec<ClassNode> = doc
        .classes
        .iter()
        .map(|c| ClassNode {
            name: c.name.clone(),
            attributes: c.attributes.clone(),
        })
        .collect();

    let resolve = |name: &str| -> ClassId {
        ClassId(
            doc.classes
                .iter()
                .position(|c| c.name == name)
                .expect("validated reference resolves"),
        )
    };

    let associations = doc
        .associations
        .iter()
        .map(|a| AssociationNode {
            name: a.name.clone(),
            end_a: resolve_end(&a.end_a, resolve(&a.end_a.class_ref)),
            end_b: resolve_end(&a.end_b, resolve(&a.end_b.class_ref)),
            attributes: a.attributes.clone(),
        })
        .collect();

    Ok(ObjectGraph {
        model_name: doc.model_name.clone(),
        classes,
        associations,
    })
}

fn resolve_end(end: &AssociationEnd, class: ClassId) -> GraphEnd {
    GraphEnd {
        class,
        multiplicity: end.multiplicity,
        role: end.role.clone(),
    }
}

/// Walks a graph back into a document. Inverse of [`instantiate`] on valid
/// input.
pub fn generate(graph: &ObjectGraph) -> ModelDocument {
    ModelDocument {
        model_name: graph.model_name.clone(),
        classes: graph
            .classes
            .iter()
            .map(|c| ClassDef {
                name: c.name.clone(),
                attributes: c.attributes.clone(),
            })
            .collect(),
        associations: graph
            .associations
            .iter()
            .map(|a| AssociationDef {
                name: a.name.clone(),
                end_a: unresolve_end(graph, &a.end_a),
                end_b: unresolve_end(graph, &a.end_b),
                attributes: a.attributes.clone(),
            })
            .collect(),
    }
}

fn unresolve_end(graph: &ObjectGraph, end: &GraphEnd) -> AssociationEnd {
    AssociationEnd {
        class_ref: graph.class(end.class).name.clone(),
        multiplicity: end.multiplicity,
        role: end.role.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_model;
    use super::*;

    #[test]
    fn empty_model_has_zero_nodes() {
        let doc = ModelDocument::new("Empty");
        let graph = instantiate(&doc).unwrap();
        assert_eq!(graph.node_count(), 0);
        assert_eq!(generate(&graph), doc);
    }

    #[test]
    fn two_class_model_has_three_nodes_with_resolved_ends() {
        let text = r#"<moa:Model name="M">
  <moa:Class name="Person"/>
  <moa:Class name="Company"/>
  <moa:Association name="WorksFor">
    <moa:End class="Person" multiplicity="0..*"/>
    <moa:End class="Company" multiplicity="1"/>
  </moa:Association>
</moa:Model>"#;
        let doc = parse_model(text).unwrap();
        let graph = instantiate(&doc).unwrap();
        assert_eq!(graph.node_count(), 3);
        let (_, assoc) = graph.associations().next().unwrap();
        assert_eq!(graph.class(assoc.end_a.class).name, "Person");
        assert_eq!(graph.class(assoc.end_b.class).name, "Company");
        assert_eq!(generate(&graph), doc);
    }

    #[test]
    fn self_association_resolves_both_ends_to_the_same_node() {
        let text = r#"<moa:Model name="M">
  <moa:Class name="A"/>
  <moa:Association name="Knows">
    <moa:End class="A" multiplicity="0..*"/>
    <moa:End class="A" multiplicity="0..*"/>
  </moa:Association>
</moa:Model>"#;
        let doc = parse_model(text).unwrap();
        let graph = instantiate(&doc).unwrap();
        let (_, assoc) = graph.associations().next().unwrap();
        assert_eq!(assoc.end_a.class, assoc.end_b.class);
        assert_eq!(generate(&graph), doc);
    }

    #[test]
    fn invalid_document_is_rejected() {
        let mut doc = ModelDocument::new("M");
        doc.associations.push(AssociationDef::new(
            "R",
            AssociationEnd::new("Ghost", Multiplicity::One),
            AssociationEnd::new("Ghost", Multiplicity::One),
        ));
        assert!(matches!(
            instantiate(&doc),
            Err(ModelError::ValidationFailed(_))
        ));
    }
}

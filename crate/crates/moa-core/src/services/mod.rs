//! The implementation part: built-in method services and the host that
//! serves them through the invoke envelope protocol.
//!
//! Every service runs the same five-stage pipeline over its product:
//! parse the incoming document, instantiate it into an object graph,
//! transform the graph, generate the output document, serialize it. The
//! transformations work on the graph (objects and direct references), not
//! on the XML text.
//!
//! Built-ins:
//! - `objectify` — replaces a named association by a class plus two linking
//!   associations, preserving instance populations (each former link
//!   corresponds to exactly one object of the new class).
//! - `rename_class` — renames a class and every end referencing it.
//! - `identity` — returns the input unchanged; the unit of composition.

mod envelope;
mod host;

pub use envelope::{
    parse_invoke, parse_response, serialize_fault, serialize_invoke, serialize_result,
    FaultCode, FaultEnvelope, InvokeEnvelope,
};
pub use host::{handle_invoke, InvokeOutcome, ServiceHost, Stage};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::descriptor::{
    ClassificationMetadata, MethodServiceDescriptor, OperationDef, OperationalDescriptor,
    ProductSignature, SemanticDescriptor, ShapeConstraint,
};
use crate::model::{
    generate, instantiate, is_identifier, AssociationNode, ClassNode, GraphEnd, ModelDocument,
    ModelError, Multiplicity, ObjectGraph,
};

/// Contract violations of the built-in transformations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ServiceError {
    #[error("association '{0}' not found")]
    AssociationNotFound(String),
    #[error("class '{0}' not found")]
    ClassNotFound(String),
    #[error("name collision: '{0}' already exists")]
    NameCollision(String),
    #[error("association '{0}' is a self-association, which objectify does not support")]
    SelfAssociationUnsupported(String),
    #[error("missing parameter '{0}'")]
    MissingParameter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid product: {0}")]
    InvalidProduct(String),
}

impl From<ModelError> for ServiceError {
    fn from(e: ModelError) -> Self {
        ServiceError::InvalidProduct(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Built-in operations
// ---------------------------------------------------------------------------

/// The operations the runtime can bind a descriptor's operation names to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinOp {
    Objectify,
    RenameClass,
    Identity,
}

impl BuiltinOp {
    /// Resolves a descriptor operation name to its implementation.
    pub fn by_operation_name(name: &str) -> Option<Self> {
        match name {
            "objectify" => Some(BuiltinOp::Objectify),
            "rename_class" => Some(BuiltinOp::RenameClass),
            "identity" => Some(BuiltinOp::Identity),
            _ => None,
        }
    }

    pub fn operation_name(self) -> &'static str {
        match self {
            BuiltinOp::Objectify => "objectify",
            BuiltinOp::RenameClass => "rename_class",
            BuiltinOp::Identity => "identity",
        }
    }

    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            BuiltinOp::Objectify => &["association"],
            BuiltinOp::RenameClass => &["old_name", "new_name"],
            BuiltinOp::Identity => &[],
        }
    }

    /// The transform stage: mutates the instantiated graph in place.
    pub fn apply_to_graph(
        self,
        graph: &mut ObjectGraph,
        params: &BTreeMap<String, String>,
    ) -> Result<(), ServiceError> {
        let param = |key: &str| {
            params
                .get(key)
                .map(String::as_str)
                .ok_or_else(|| ServiceError::MissingParameter(key.to_string()))
        };
        match self {
            BuiltinOp::Objectify => objectify_graph(graph, param("association")?),
            BuiltinOp::RenameClass => rename_class_graph(graph, param("old_name")?, param("new_name")?),
            BuiltinOp::Identity => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// Objectify
// ---------------------------------------------------------------------------

/// Turns association `R` between classes `A` and `B` into a class.
///
/// The output replaces `R` by a class named `R` carrying `R`'s attributes,
/// linked to the former participants by `R_A` (between `A` and `R`) and
/// `R_B` (between `B` and `R`). On each new association the participant end
/// gets multiplicity 1 (every `R`-object involves exactly one participant);
/// the `R`-side end of `R_A` inherits the multiplicity and role of `R`'s
/// `B` end (how many links each `A` had), and the `R`-side end of `R_B`
/// inherits those of `R`'s `A` end. Everything else is unchanged. Valid
/// instance populations of the two schemas are in bijection, each former
/// link corresponding to one `R`-object.
pub fn objectify(doc: &ModelDocument, association_name: &str) -> Result<ModelDocument, ServiceError> {
    run_transform(doc, |graph| objectify_graph(graph, association_name))
}

fn objectify_graph(graph: &mut ObjectGraph, association_name: &str) -> Result<(), ServiceError> {
    let assoc_id = graph
        .association_by_name(association_name)
        .ok_or_else(|| ServiceError::AssociationNotFound(association_name.to_string()))?;
    let assoc = graph.association(assoc_id).clone();

    if assoc.end_a.class == assoc.end_b.class {
        return Err(ServiceError::SelfAssociationUnsupported(assoc.name));
    }
    if graph.class_by_name(&assoc.name).is_some() {
        return Err(ServiceError::NameCollision(assoc.name));
    }
    let participant_a = graph.class(assoc.end_a.class).name.clone();
    let participant_b = graph.class(assoc.end_b.class).name.clone();
    let link_a_name = format!("{}_{}", assoc.name, participant_a);
    let link_b_name = format!("{}_{}", assoc.name, participant_b);
    for name in [&link_a_name, &link_b_name] {
        if graph.association_by_name(name).is_some() {
            return Err(ServiceError::NameCollision(name.clone()));
        }
    }

    graph.remove_association(&assoc.name);
    let objectified = graph.add_class(ClassNode {
        name: assoc.name.clone(),
        attributes: assoc.attributes.clone(),
    });
    graph.add_association(AssociationNode {
        name: link_a_name,
        end_a: GraphEnd {
            class: assoc.end_a.class,
            multiplicity: Multiplicity::One,
            role: None,
        },
        end_b: GraphEnd {
            class: objectified,
            multiplicity: assoc.end_b.multiplicity,
            role: assoc.end_b.role.clone(),
        },
        attributes: Vec::new(),
    });
    graph.add_association(AssociationNode {
        name: link_b_name,
        end_a: GraphEnd {
            class: assoc.end_b.class,
            multiplicity: Multiplicity::One,
            role: None,
        },
        end_b: GraphEnd {
            class: objectified,
            multiplicity: assoc.end_a.multiplicity,
            role: assoc.end_a.role.clone(),
        },
        attributes: Vec::new(),
    });
    Ok(())
}

// ---------------------------------------------------------------------------
// Rename / identity
// ---------------------------------------------------------------------------

/// Renames a class; association ends follow automatically because the graph
/// holds direct references.
pub fn rename_class(
    doc: &ModelDocument,
    old_name: &str,
    new_name: &str,
) -> Result<ModelDocument, ServiceError> {
    run_transform(doc, |graph| rename_class_graph(graph, old_name, new_name))
}

fn rename_class_graph(
    graph: &mut ObjectGraph,
    old_name: &str,
    new_name: &str,
) -> Result<(), ServiceError> {
    if !is_identifier(new_name) {
        return Err(ServiceError::InvalidParameter(format!(
            "'{new_name}' is not a valid class name"
        )));
    }
    let id = graph
        .class_by_name(old_name)
        .ok_or_else(|| ServiceError::ClassNotFound(old_name.to_string()))?;
    if old_name != new_name && graph.class_by_name(new_name).is_some() {
        return Err(ServiceError::NameCollision(new_name.to_string()));
    }
    graph.class_mut(id).name = new_name.to_string();
    Ok(())
}

/// Returns the input unchanged (after a full pipeline round-trip, like any
/// other service).
pub fn identity_service(doc: &ModelDocument) -> Result<ModelDocument, ServiceError> {
    run_transform(doc, |_| Ok(()))
}

fn run_transform(
    doc: &ModelDocument,
    transform: impl FnOnce(&mut ObjectGraph) -> Result<(), ServiceError>,
) -> Result<ModelDocument, ServiceError> {
    let mut graph = instantiate(doc)?;
    transform(&mut graph)?;
    Ok(generate(&graph))
}

// ---------------------------------------------------------------------------
// Built-in descriptors
// ---------------------------------------------------------------------------

/// Descriptor for the objectify service hosted at `endpoint`.
pub fn objectify_descriptor(endpoint: &str) -> MethodServiceDescriptor {
    builtin_descriptor(
        "Objectify",
        "Objectify a relationship",
        "object-oriented schema refinement",
        &[
            "locate the named association",
            "replace the association by a class carrying its attributes",
            "link the new class to both former participants",
        ],
        ProductSignature::none("classdiagram")
            .with_constraint(ShapeConstraint::HasAssociation { min: 1 }),
        ProductSignature::none("classdiagram").with_constraint(ShapeConstraint::HasClass { min: 1 }),
        BuiltinOp::Objectify,
        endpoint,
    )
}

/// Descriptor for the rename service hosted at `endpoint`.
pub fn rename_class_descriptor(endpoint: &str) -> MethodServiceDescriptor {
    builtin_descriptor(
        "RenameClass",
        "Rename a class",
        "schema refactoring by renaming",
        &[
            "locate the class by its current name",
            "rename it and update every association end that references it",
        ],
        ProductSignature::none("classdiagram").with_constraint(ShapeConstraint::HasClass { min: 1 }),
        ProductSignature::none("classdiagram").with_constraint(ShapeConstraint::HasClass { min: 1 }),
        BuiltinOp::RenameClass,
        endpoint,
    )
}

/// Descriptor for the identity service hosted at `endpoint`.
pub fn identity_descriptor(endpoint: &str) -> MethodServiceDescriptor {
    builtin_descriptor(
        "Identity",
        "Copy a model",
        "structural preservation",
        &["return the input model unchanged"],
        ProductSignature::none("classdiagram"),
        ProductSignature::none("classdiagram"),
        BuiltinOp::Identity,
        endpoint,
    )
}

/// All three built-in descriptors.
pub fn builtin_descriptors(endpoint: &str) -> Vec<MethodServiceDescriptor> {
    vec![
        objectify_descriptor(endpoint),
        rename_class_descriptor(endpoint),
        identity_descriptor(endpoint),
    ]
}

#[allow(clippy::too_many_arguments)]
fn builtin_descriptor(
    name: &str,
    intention: &str,
    paradigm: &str,
    steps: &[&str],
    product_in: ProductSignature,
    product_out: ProductSignature,
    op: BuiltinOp,
    endpoint: &str,
) -> MethodServiceDescriptor {
    MethodServiceDescriptor {
        service_name: name.to_string(),
        version: "1.0".into(),
        semantic: SemanticDescriptor {
            intention: crate::descriptor::normalize_intention(intention)
                .expect("built-in intentions normalize"),
            paradigm: paradigm.to_string(),
            process_description: steps.iter().map(|s| s.to_string()).collect(),
            product_in,
            product_out,
        },
        operational: OperationalDescriptor {
            endpoint: endpoint.to_string(),
            operations: vec![OperationDef {
                name: op.operation_name().to_string(),
                input_params: op.required_params().iter().map(|p| p.to_string()).collect(),
                output_params: Vec::new(),
            }],
        },
        classification: ClassificationMetadata::default_service_classification(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_model, serialize_model, validate_model};

    fn person_company() -> ModelDocument {
        parse_model(
            r#"<moa:Model name="PersonCompany">
  <moa:Class name="Person">
    <moa:Attribute name="name" type="string"/>
  </moa:Class>
  <moa:Class name="Company">
    <moa:Attribute name="name" type="string"/>
  </moa:Class>
  <moa:Association name="WorksFor">
    <moa:End class="Person" multiplicity="0..*"/>
    <moa:End class="Company" multiplicity="1"/>
    <moa:Attribute name="since" type="integer"/>
  </moa:Association>
</moa:Model>"#,
        )
        .unwrap()
    }

    #[test]
    fn objectify_person_company_matches_the_derived_golden() {
        let out = objectify(&person_company(), "WorksFor").unwrap();
        let expected = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<moa:Model name=\"PersonCompany\">\n\
\x20 <moa:Class name=\"Person\">\n\
\x20   <moa:Attribute name=\"name\" type=\"string\"/>\n\
\x20 </moa:Class>\n\
\x20 <moa:Class name=\"Company\">\n\
\x20   <moa:Attribute name=\"name\" type=\"string\"/>\n\
\x20 </moa:Class>\n\
\x20 <moa:Class name=\"WorksFor\">\n\
\x20   <moa:Attribute name=\"since\" type=\"integer\"/>\n\
\x20 </moa:Class>\n\
\x20 <moa:Association name=\"WorksFor_Person\">\n\
\x20   <moa:End class=\"Person\" multiplicity=\"1\"/>\n\
\x20   <moa:End class=\"WorksFor\" multiplicity=\"1\"/>\n\
\x20 </moa:Association>\n\
\x20 <moa:Association name=\"WorksFor_Company\">\n\
\x20   <moa:End class=\"Company\" multiplicity=\"1\"/>\n\
\x20   <moa:End class=\"WorksFor\" multiplicity=\"0..*\"/>\n\
\x20 </moa:Association>\n\
</moa:Model>\n";
        assert_eq!(serialize_model(&out), expected);
    }

    #[test]
    fn objectify_migrates_association_attributes() {
        let out = objectify(&person_company(), "WorksFor").unwrap();
        let objectified = out.class("WorksFor").unwrap();
        assert_eq!(objectified.attributes.len(), 1);
        assert_eq!(objectified.attributes[0].name, "since");
        // and the linking associations carry none
        assert!(out.association("WorksFor_Person").unwrap().attributes.is_empty());
        assert!(out.association("WorksFor_Company").unwrap().attributes.is_empty());
    }

    #[test]
    fn objectify_preserves_roles_on_the_objectified_side() {
        let mut doc = person_company();
        doc.associations[0].end_a.role = Some("employee".into());
        doc.associations[0].end_b.role = Some("employer".into());
        let out = objectify(&doc, "WorksFor").unwrap();
        let link_a = out.association("WorksFor_Person").unwrap();
        let link_b = out.association("WorksFor_Company").unwrap();
        assert_eq!(link_a.end_a.role, None);
        assert_eq!(link_a.end_b.role.as_deref(), Some("employer"));
        assert_eq!(link_b.end_a.role, None);
        assert_eq!(link_b.end_b.role.as_deref(), Some("employee"));
    }

    #[test]
    fn objectify_error_paths() {
        assert!(matches!(
            objectify(&person_company(), "Ghost"),
            Err(ServiceError::AssociationNotFound(_))
        ));

        let mut with_collision = person_company();
        with_collision.classes.push(crate::model::ClassDef::new("WorksFor"));
        assert!(matches!(
            objectify(&with_collision, "WorksFor"),
            Err(ServiceError::NameCollision(_))
        ));

        let self_assoc = parse_model(
            r#"<moa:Model name="M">
  <moa:Class name="A"/>
  <moa:Association name="Knows">
    <moa:End class="A" multiplicity="0..*"/>
    <moa:End class="A" multiplicity="0..*"/>
  </moa:Association>
</moa:Model>"#,
        )
        .unwrap();
        assert!(matches!(
            objectify(&self_assoc, "Knows"),
            Err(ServiceError::SelfAssociationUnsupported(_))
        ));
    }

    #[test]
    fn objectify_rejects_link_name_collisions() {
        let mut doc = person_company();
        doc.associations.push(crate::model::AssociationDef::new(
            "WorksFor_Person",
            crate::model::AssociationEnd::new("Person", Multiplicity::Many),
            crate::model::AssociationEnd::new("Company", Multiplicity::Many),
        ));
        assert!(matches!(
            objectify(&doc, "WorksFor"),
            Err(ServiceError::NameCollision(name)) if name == "WorksFor_Person"
        ));
    }

    #[test]
    fn objectify_output_validates() {
        let out = objectify(&person_company(), "WorksFor").unwrap();
        assert!(validate_model(&out).is_empty());
    }

    #[test]
    fn rename_updates_association_ends() {
        let out = rename_class(&person_company(), "Person", "Human").unwrap();
        assert!(out.class("Human").is_some());
        assert!(out.class("Person").is_none());
        assert_eq!(out.associations[0].end_a.class_ref, "Human");
        assert!(validate_model(&out).is_empty());
    }

    #[test]
    fn rename_error_paths_and_involution() {
        assert!(matches!(
            rename_class(&person_company(), "Ghost", "X"),
            Err(ServiceError::ClassNotFound(_))
        ));
        assert!(matches!(
            rename_class(&person_company(), "Person", "Company"),
            Err(ServiceError::NameCollision(_))
        ));
        assert!(matches!(
            rename_class(&person_company(), "Person", "9bad"),
            Err(ServiceError::InvalidParameter(_))
        ));
        let there = rename_class(&person_company(), "Person", "Human").unwrap();
        let back = rename_class(&there, "Human", "Person").unwrap();
        assert_eq!(back, person_company());
    }

    #[test]
    fn identity_returns_inputs_unchanged() {
        for text in [
            "<moa:Model name=\"Empty\"/>",
            "<moa:Model name=\"M\"><moa:Class name=\"A\"/></moa:Model>",
        ] {
            let doc = parse_model(text).unwrap();
            assert_eq!(identity_service(&doc).unwrap(), doc);
        }
        assert_eq!(identity_service(&person_company()).unwrap(), person_company());
    }

    #[test]
    fn population_bijection_holds_for_the_worksfor_schema() {
        // Independent semantic check on the running example, instance bound
        // 3 per class. A population assigns each (person, company) pair a
        // link or not; the schema constraints are: per person exactly one
        // company (end_b multiplicity 1), any number of persons per company
        // (end_a 0..*). In the objectified schema a population is a set of
        // WorksFor objects, each linked to exactly one person and one
        // company, no two objects sharing the same pair. Valid populations
        // must correspond one-to-one.
        let out = objectify(&person_company(), "WorksFor").unwrap();
        let link_a = out.association("WorksFor_Person").unwrap();
        let link_b = out.association("WorksFor_Company").unwrap();

        for persons in 0..=3usize {
            for companies in 0..=3usize {
                let pairs: Vec<(usize, usize)> = (0..persons)
                    .flat_map(|p| (0..companies).map(move |c| (p, c)))
                    .collect();
                let mut original_count = 0u64;
                let mut transformed_count = 0u64;
                for mask in 0u32..(1 << pairs.len()) {
                    let links: Vec<(usize, usize)> = pairs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &pc)| pc)
                        .collect();
                    // Original: per person exactly 1 company.
                    let original_ok = (0..persons)
                        .all(|p| links.iter().filter(|(lp, _)| *lp == p).count() == 1);
                    if original_ok {
                        original_count += 1;
                    }
                    // Transformed: read the constraints off the output
                    // schema. Each WorksFor object is one distinct pair, so
                    // the per-participant object counts equal the link
                    // counts, checked against the output multiplicities.
                    let per_person_objects =
                        |p: usize| links.iter().filter(|(lp, _)| *lp == p).count();
                    let per_company_objects =
                        |c: usize| links.iter().filter(|(_, lc)| *lc == c).count();
                    let admits = |m: Multiplicity, n: usize| match m {
                        Multiplicity::One => n == 1,
                        Multiplicity::Optional => n <= 1,
                        Multiplicity::Many => true,
                        Multiplicity::AtLeastOne => n >= 1,
                    };
                    let transformed_ok = (0..persons)
                        .all(|p| admits(link_a.end_b.multiplicity, per_person_objects(p)))
                        && (0..companies)
                            .all(|c| admits(link_b.end_b.multiplicity, per_company_objects(c)));
                    if transformed_ok {
                        transformed_count += 1;
                    }
                    assert_eq!(
                        original_ok, transformed_ok,
                        "population {links:?} valid in one schema but not the other"
                    );
                }
                assert_eq!(original_count, transformed_count);
            }
        }
    }

    #[test]
    fn builtin_descriptors_parse_and_round_trip() {
        for d in builtin_descriptors("http://127.0.0.1:9301/invoke") {
            let text = crate::descriptor::serialize_descriptor(&d);
            let reparsed = crate::descriptor::parse_descriptor(&text).unwrap();
            assert_eq!(reparsed, d);
        }
    }
}

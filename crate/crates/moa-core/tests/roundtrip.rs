//! Property tests: randomized documents and descriptors survive their
//! round trips, and instantiate/generate are mutually inverse.

use std::collections::BTreeSet;

use proptest::prelude::*;

use moa_core::descriptor::{
    parse_descriptor, serialize_descriptor, ClassificationMetadata, FrameworkAttribute,
    Intention, MethodServiceDescriptor, OperationDef, OperationalDescriptor, ProductSignature,
    SemanticDescriptor, ShapeConstraint,
};
use moa_core::model::{
    generate, instantiate, parse_model, serialize_model, validate_model, AssociationDef,
    AssociationEnd, ClassDef, ModelDocument, Multiplicity, ScalarType,
};

// ---------------------------------------------------------------------------
// Model strategies
// ---------------------------------------------------------------------------

fn arb_multiplicity() -> impl Strategy<Value = Multiplicity> {
    prop_oneof![
        Just(Multiplicity::One),
        Just(Multiplicity::Optional),
        Just(Multiplicity::Many),
        Just(Multiplicity::AtLeastOne),
    ]
}

fn arb_scalar() -> impl Strategy<Value = ScalarType> {
    prop_oneof![
        Just(ScalarType::String),
        Just(ScalarType::Integer),
        Just(ScalarType::Boolean),
    ]
}

fn arb_attributes() -> impl Strategy<Value = Vec<moa_core::model::AttributeDef>> {
    proptest::collection::vec(arb_scalar(), 0..4).prop_map(|types| {
        types
            .into_iter()
            .enumerate()
            .map(|(i, t)| moa_core::model::AttributeDef::new(format!("attr{i}"), t))
            .collect()
    })
}

prop_compose! {
    fn arb_model()(
        class_count in 0usize..6,
        attr_sets in proptest::collection::vec(arb_attributes(), 6),
        assoc_specs in proptest::collection::vec(
            (0usize..6, 0usize..6, arb_multiplicity(), arb_multiplicity(),
             proptest::option::of("[a-z]{1,6}"), arb_attributes()),
            0..5
        ),
    ) -> ModelDocument {
        let classes: Vec<ClassDef> = (0..class_count)
            .map(|i| ClassDef { name: format!("Class{i}"), attributes: attr_sets[i].clone() })
            .collect();
        let associations: Vec<AssociationDef> = if class_count == 0 {
            Vec::new()
        } else {
            assoc_specs
                .into_iter()
                .enumerate()
                .map(|(i, (a, b, ma, mb, role, attrs))| AssociationDef {
                    name: format!("Assoc{i}"),
                    end_a: AssociationEnd {
                        class_ref: format!("Class{}", a % class_count),
                        multiplicity: ma,
                        role,
                    },
                    end_b: AssociationEnd::new(format!("Class{}", b % class_count), mb),
                    attributes: attrs,
                })
                .collect()
        };
        ModelDocument { model_name: "Generated".into(), classes, associations }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn generated_models_are_valid(doc in arb_model()) {
        prop_assert!(validate_model(&doc).is_empty());
    }

    #[test]
    fn parse_inverts_serialize(doc in arb_model()) {
        let text = serialize_model(&doc);
        prop_assert_eq!(parse_model(&text).unwrap(), doc);
    }

    #[test]
    fn canonical_serialization_is_idempotent(doc in arb_model()) {
        let once = serialize_model(&doc);
        let twice = serialize_model(&parse_model(&once).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn generate_inverts_instantiate(doc in arb_model()) {
        let graph = instantiate(&doc).unwrap();
        prop_assert_eq!(graph.node_count(), doc.classes.len() + doc.associations.len());
        prop_assert_eq!(generate(&graph), doc);
    }
}

// ---------------------------------------------------------------------------
// Descriptor strategies
// ---------------------------------------------------------------------------

fn arb_word() -> impl Strategy<Value = String> {
    "[a-z]{2,8}".prop_filter("stop words excluded", |w| {
        !["a", "an", "the", "of", "into", "from", "to"].contains(&w.as_str())
    })
}

fn arb_intention() -> impl Strategy<Value = Intention> {
    (arb_word(), arb_word(), proptest::collection::vec(arb_word(), 0..3)).prop_map(
        |(verb, target, quals)| {
            let raw = std::iter::once(verb)
                .chain(std::iter::once(target))
                .chain(quals)
                .collect::<Vec<_>>()
                .join(" ");
            moa_core::descriptor::normalize_intention(&raw).expect("generated intentions normalize")
        },
    )
}

fn arb_text() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-zA-Z0-9<>&\"]{1,8}", 1..6).prop_map(|words| words.join(" "))
}

fn arb_signature() -> impl Strategy<Value = ProductSignature> {
    proptest::collection::vec(
        (any::<bool>(), 0usize..4),
        0..3,
    )
    .prop_map(|constraints| ProductSignature {
        metamodel_name: "classdiagram".into(),
        constraints: constraints
            .into_iter()
            .map(|(is_class, min)| {
                if is_class {
                    ShapeConstraint::HasClass { min }
                } else {
                    ShapeConstraint::HasAssociation { min }
                }
            })
            .collect(),
    })
}

fn arb_classification() -> impl Strategy<Value = ClassificationMetadata> {
    let picks: Vec<BoxedStrategy<(String, BTreeSet<String>)>> =
        moa_core::descriptor::framework_attributes()
            .iter()
            .map(|attr: &FrameworkAttribute| {
                let name = attr.name.to_string();
                let values: Vec<String> = attr.values.iter().map(|v| v.to_string()).collect();
                if attr.multi_valued {
                    let len = values.len();
                    proptest::collection::btree_set(0..len, 1..=len)
                        .prop_map(move |idxs| {
                            (
                                name.clone(),
                                idxs.into_iter().map(|i| values[i].clone()).collect(),
                            )
                        })
                        .boxed()
                } else {
                    let len = values.len();
                    (0..len)
                        .prop_map(move |i| {
                            (name.clone(), BTreeSet::from([values[i].clone()]))
                        })
                        .boxed()
                }
            })
            .collect();
    picks.prop_map(|entries| ClassificationMetadata::new(entries).expect("within domain"))
}

prop_compose! {
    fn arb_descriptor()(
        name in "[A-Z][a-zA-Z0-9]{0,10}",
        version in "[0-9]\\.[0-9]",
        intention in arb_intention(),
        paradigm in arb_text(),
        steps in proptest::collection::vec(arb_text(), 1..4),
        product_in in arb_signature(),
        product_out in arb_signature(),
        port in 1024u16..,
        op_count in 1usize..3,
        param_counts in proptest::collection::vec(0usize..3, 3),
        classification in arb_classification(),
    ) -> MethodServiceDescriptor {
        let operations = (0..op_count).map(|i| OperationDef {
            name: format!("op{i}"),
            input_params: (0..param_counts[i]).map(|p| format!("param{p}")).collect(),
            output_params: Vec::new(),
        }).collect();
        MethodServiceDescriptor {
            service_name: name,
            version,
            semantic: SemanticDescriptor {
                intention,
                paradigm,
                process_description: steps,
                product_in,
                product_out,
            },
            operational: OperationalDescriptor {
                endpoint: format!("http://127.0.0.1:{port}/invoke"),
                operations,
            },
            classification,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn descriptor_parse_inverts_serialize(d in arb_descriptor()) {
        let text = serialize_descriptor(&d);
        let reparsed = parse_descriptor(&text)
            .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(reparsed, d);
    }
}

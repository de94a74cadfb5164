//! Regenerates the fixture corpus under `fixtures/`.
//!
//! All files are emitted through the canonical serializers, so the
//! committed corpus round-trips byte-identically by construction.
//!
//! Usage: `cargo run -p moa-core --example generate_fixtures -- <fixtures-dir>`

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use moa_core::composition::parse_process;
use moa_core::descriptor::{
    framework_attributes, serialize_descriptor, serialize_framework_fixture, FixtureAttribute,
    FrameworkFixture,
};
use moa_core::model::{
    serialize_model, AssociationDef, AssociationEnd, ClassDef, ModelDocument, Multiplicity,
    ScalarType,
};
use moa_core::services::{identity_descriptor, objectify_descriptor, rename_class_descriptor};

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures".to_string());
    let root = Path::new(&root);
    for sub in ["models", "descriptors", "processes", "framework"] {
        fs::create_dir_all(root.join(sub)).expect("create fixture directories");
    }

    for (name, doc) in models() {
        write(root.join("models").join(format!("{name}.ximodel")), serialize_model(&doc));
    }

    write(
        root.join("descriptors").join("objectify.msd.xml"),
        serialize_descriptor(&objectify_descriptor("http://127.0.0.1:9301/invoke")),
    );
    write(
        root.join("descriptors").join("rename_class.msd.xml"),
        serialize_descriptor(&rename_class_descriptor("http://127.0.0.1:9302/invoke")),
    );
    write(
        root.join("descriptors").join("identity.msd.xml"),
        serialize_descriptor(&identity_descriptor("http://127.0.0.1:9303/invoke")),
    );

    for (name, text) in processes() {
        // normalize through the parser so committed files are canonical
        let process = parse_process(&text).expect(name);
        write(
            root.join("processes").join(format!("{name}.mproc.xml")),
            moa_core::composition::serialize_process(&process),
        );
    }

    write(
        root.join("framework").join("comparison_framework.xml"),
        framework_fixture_xml(),
    );

    write(
        root.join("synonyms.txt"),
        "# one synonym set per line\nobjectify reify nest\n".to_string(),
    );

    println!("fixtures written to {}", root.display());
}

fn write(path: impl AsRef<Path>, content: String) {
    fs::write(path.as_ref(), content).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()));
    println!("  {}", path.as_ref().display());
}

fn class(name: &str, attrs: &[(&str, ScalarType)]) -> ClassDef {
    let mut c = ClassDef::new(name);
    for (attr, ty) in attrs {
        c = c.with_attribute(*attr, *ty);
    }
    c
}

fn assoc(
    name: &str,
    a: (&str, Multiplicity, Option<&str>),
    b: (&str, Multiplicity, Option<&str>),
    attrs: &[(&str, ScalarType)],
) -> AssociationDef {
    let mut end_a = AssociationEnd::new(a.0, a.1);
    if let Some(role) = a.2 {
        end_a = end_a.with_role(role);
    }
    let mut end_b = AssociationEnd::new(b.0, b.1);
    if let Some(role) = b.2 {
        end_b = end_b.with_role(role);
    }
    let mut assoc = AssociationDef::new(name, end_a, end_b);
    for (attr, ty) in attrs {
        assoc = assoc.with_attribute(*attr, *ty);
    }
    assoc
}

fn model(name: &str, classes: Vec<ClassDef>, associations: Vec<AssociationDef>) -> ModelDocument {
    ModelDocument {
        model_name: name.to_string(),
        classes,
        associations,
    }
}

fn models() -> Vec<(&'static str, ModelDocument)> {
    use Multiplicity::{AtLeastOne, Many, One, Optional};
    use ScalarType::{Boolean, Integer, String as Str};
    vec![
        ("empty", model("Empty", vec![], vec![])),
        (
            "single_class",
            model("SingleClass", vec![class("Thing", &[])], vec![]),
        ),
        (
            "attribute_types",
            model(
                "AttributeTypes",
                vec![class(
                    "Sample",
                    &[("label", Str), ("count", Integer), ("active", Boolean)],
                )],
                vec![],
            ),
        ),
        (
            "person_company",
            model(
                "PersonCompany",
                vec![
                    class("Person", &[("name", Str)]),
                    class("Company", &[("name", Str)]),
                ],
                vec![assoc(
                    "WorksFor",
                    ("Person", Many, None),
                    ("Company", One, None),
                    &[("since", Integer)],
                )],
            ),
        ),
        (
            "self_association",
            model(
                "SelfAssociation",
                vec![class("Node", &[("label", Str)])],
                vec![assoc("Knows", ("Node", Many, None), ("Node", Many, None), &[])],
            ),
        ),
        (
            "all_multiplicities",
            model(
                "AllMultiplicities",
                vec![class("A", &[]), class("B", &[]), class("C", &[])],
                vec![
                    assoc("ROne", ("A", One, None), ("B", One, None), &[]),
                    assoc("ROpt", ("A", Optional, None), ("B", Optional, None), &[]),
                    assoc("RMany", ("B", Many, None), ("C", Many, None), &[]),
                    assoc("RSome", ("A", AtLeastOne, None), ("C", AtLeastOne, None), &[]),
                ],
            ),
        ),
        (
            "roles",
            model(
                "Roles",
                vec![class("Employee", &[]), class("Department", &[])],
                vec![assoc(
                    "AssignedTo",
                    ("Employee", Many, Some("member")),
                    ("Department", One, Some("home")),
                    &[],
                )],
            ),
        ),
        (
            "association_attributes",
            model(
                "AssociationAttributes",
                vec![class("Student", &[]), class("Course", &[])],
                vec![assoc(
                    "Enrolled",
                    ("Student", Many, None),
                    ("Course", Many, None),
                    &[("grade", Str), ("credits", Integer), ("passed", Boolean)],
                )],
            ),
        ),
        (
            "library",
            model(
                "Library",
                vec![
                    class("Book", &[("title", Str), ("isbn", Str)]),
                    class("Author", &[("name", Str)]),
                    class("Member", &[("name", Str), ("card", Integer)]),
                ],
                vec![
                    assoc("WrittenBy", ("Book", Many, None), ("Author", AtLeastOne, None), &[]),
                    assoc(
                        "Borrowed",
                        ("Book", Many, None),
                        ("Member", Optional, None),
                        &[("due", Str)],
                    ),
                ],
            ),
        ),
        (
            "orders",
            model(
                "Orders",
                vec![
                    class("Order", &[("number", Integer)]),
                    class("Product", &[("sku", Str), ("price", Integer)]),
                ],
                vec![assoc(
                    "Contains",
                    ("Order", Many, None),
                    ("Product", AtLeastOne, None),
                    &[("quantity", Integer)],
                )],
            ),
        ),
        (
            "unlinked_classes",
            model(
                "UnlinkedClasses",
                vec![class("Alpha", &[]), class("Beta", &[]), class("Gamma", &[])],
                vec![],
            ),
        ),
        (
            "school",
            model(
                "School",
                vec![
                    class("Teacher", &[("name", Str)]),
                    class("Course", &[("code", Str)]),
                    class("Room", &[("number", Integer)]),
                ],
                vec![
                    assoc("Teaches", ("Teacher", One, None), ("Course", Many, None), &[]),
                    assoc("HeldIn", ("Course", Many, None), ("Room", One, None), &[]),
                ],
            ),
        ),
        (
            "social",
            model(
                "Social",
                vec![
                    class("User", &[("handle", Str)]),
                    class("Post", &[("body", Str), ("pinned", Boolean)]),
                ],
                vec![
                    assoc("Follows", ("User", Many, None), ("User", Many, None), &[]),
                    assoc("Wrote", ("User", One, None), ("Post", Many, None), &[]),
                ],
            ),
        ),
        (
            "hospital",
            model(
                "Hospital",
                vec![
                    class("Patient", &[("name", Str)]),
                    class("Doctor", &[("name", Str)]),
                    class("Ward", &[("floor", Integer)]),
                ],
                vec![
                    assoc(
                        "TreatedBy",
                        ("Patient", Many, Some("caseload")),
                        ("Doctor", AtLeastOne, Some("physician")),
                        &[],
                    ),
                    assoc("AdmittedTo", ("Patient", Many, None), ("Ward", Optional, None), &[]),
                ],
            ),
        ),
        (
            "airline",
            model(
                "Airline",
                vec![
                    class("Flight", &[("code", Str)]),
                    class("Airport", &[("iata", Str)]),
                    class("Aircraft", &[("tail", Str)]),
                ],
                vec![
                    assoc("DepartsFrom", ("Flight", Many, None), ("Airport", One, None), &[]),
                    assoc("ArrivesAt", ("Flight", Many, None), ("Airport", One, None), &[]),
                    assoc("OperatedBy", ("Flight", Many, None), ("Aircraft", Optional, None), &[]),
                ],
            ),
        ),
        (
            "project_team",
            model(
                "ProjectTeam",
                vec![
                    class("Project", &[("title", Str), ("budget", Integer)]),
                    class("Engineer", &[("name", Str)]),
                ],
                vec![assoc(
                    "StaffedBy",
                    ("Project", Many, None),
                    ("Engineer", AtLeastOne, None),
                    &[("allocation", Integer)],
                )],
            ),
        ),
        (
            "warehouse",
            model(
                "Warehouse",
                vec![
                    class("Shelf", &[("aisle", Integer)]),
                    class("Item", &[("sku", Str), ("fragile", Boolean)]),
                ],
                vec![assoc("Stores", ("Shelf", Optional, None), ("Item", Many, None), &[])],
            ),
        ),
        (
            "blog",
            model(
                "Blog",
                vec![
                    class("Article", &[("slug", Str)]),
                    class("Comment", &[("body", Str)]),
                    class("Tag", &[("label", Str)]),
                ],
                vec![
                    assoc("CommentOn", ("Comment", Many, None), ("Article", One, None), &[]),
                    assoc("TaggedWith", ("Article", Many, None), ("Tag", Many, None), &[]),
                ],
            ),
        ),
        (
            "payroll",
            model(
                "Payroll",
                vec![
                    class("Employee", &[("name", Str), ("salary", Integer)]),
                    class("Account", &[("iban", Str)]),
                ],
                vec![assoc("PaidInto", ("Employee", One, None), ("Account", One, None), &[])],
            ),
        ),
        (
            "university",
            model(
                "University",
                vec![
                    class("Faculty", &[("name", Str)]),
                    class("Department", &[("name", Str)]),
                    class("Chair", &[("name", Str)]),
                ],
                vec![
                    assoc("PartOf", ("Department", Many, None), ("Faculty", One, None), &[]),
                    assoc("Holds", ("Department", One, None), ("Chair", Many, None), &[]),
                ],
            ),
        ),
        (
            "network",
            model(
                "Network",
                vec![
                    class("Host", &[("address", Str)]),
                    class("Switch", &[("ports", Integer)]),
                ],
                vec![assoc(
                    "PluggedInto",
                    ("Host", Many, Some("downlink")),
                    ("Switch", One, Some("uplink")),
                    &[("port", Integer)],
                )],
            ),
        ),
    ]
}

fn processes() -> Vec<(&'static str, String)> {
    vec![
        (
            "objectify_worksfor",
            r#"<moa:Process name="objectify_worksfor">
  <moa:Invoke service="Objectify@1.0" operation="objectify">
    <moa:Param name="association" value="WorksFor"/>
  </moa:Invoke>
</moa:Process>"#
                .to_string(),
        ),
        (
            "objectify_then_rename",
            r#"<moa:Process name="objectify_then_rename">
  <moa:Seq>
    <moa:Invoke service="Objectify@1.0" operation="objectify">
      <moa:Param name="association" value="WorksFor"/>
    </moa:Invoke>
    <moa:Invoke service="RenameClass@1.0" operation="rename_class">
      <moa:Param name="new_name" value="Employment"/>
      <moa:Param name="old_name" value="WorksFor"/>
    </moa:Invoke>
  </moa:Seq>
</moa:Process>"#
                .to_string(),
        ),
        (
            "seq_par_pipeline",
            r#"<moa:Process name="seq_par_pipeline">
  <moa:Seq>
    <moa:Invoke service="Objectify@1.0" operation="objectify">
      <moa:Param name="association" value="WorksFor"/>
    </moa:Invoke>
    <moa:Par>
      <moa:Branch>
        <moa:Invoke service="RenameClass@1.0" operation="rename_class">
          <moa:Param name="new_name" value="Human"/>
          <moa:Param name="old_name" value="Person"/>
        </moa:Invoke>
      </moa:Branch>
      <moa:Branch>
        <moa:Invoke service="RenameClass@1.0" operation="rename_class">
          <moa:Param name="new_name" value="Employer"/>
          <moa:Param name="old_name" value="Company"/>
        </moa:Invoke>
      </moa:Branch>
    </moa:Par>
  </moa:Seq>
</moa:Process>"#
                .to_string(),
        ),
        (
            "conflicting_renames",
            r#"<moa:Process name="conflicting_renames">
  <moa:Par>
    <moa:Branch>
      <moa:Invoke service="RenameClass@1.0" operation="rename_class">
        <moa:Param name="new_name" value="Human"/>
        <moa:Param name="old_name" value="Person"/>
      </moa:Invoke>
    </moa:Branch>
    <moa:Branch>
      <moa:Invoke service="RenameClass@1.0" operation="rename_class">
        <moa:Param name="new_name" value="Individual"/>
        <moa:Param name="old_name" value="Person"/>
      </moa:Invoke>
    </moa:Branch>
  </moa:Par>
</moa:Process>"#
                .to_string(),
        ),
    ]
}

/// The comparison framework with the method-service column as printed in
/// its source table.
fn framework_fixture_xml() -> String {
    let column: Vec<(&str, &str)> = vec![
        ("interoperability", "external_different_environments"),
        ("interactivity", "assisted"),
        ("covered_way", "thinking modeling working"),
        ("tools_implementation", "storage retrieval construction"),
        ("level", "intentional structural operational"),
        ("perspective", "process_focused product_focused"),
        ("recursion", "false"),
        ("abstraction_level", "meta_meta_model meta_model model"),
        ("formalism", "technical"),
        ("decomposition_principle", "not_specified"),
        ("retrieval_principle", "semantic_similarity"),
        (
            "matching_with_situation",
            "by_goal_actor_process_product_ontologies",
        ),
        ("construction_technique", "assembly_without_overlapping"),
    ];

    let fixture = FrameworkFixture {
        attributes: framework_attributes()
            .iter()
            .map(|attr| FixtureAttribute {
                view: attr.view.token().to_string(),
                name: attr.name.to_string(),
                values: attr.values.iter().map(|v| v.to_string()).collect(),
                multi_valued: attr.multi_valued,
            })
            .collect(),
        method_service_column: column
            .iter()
            .map(|(attr, values)| {
                (
                    attr.to_string(),
                    values
                        .split_whitespace()
                        .map(str::to_string)
                        .collect::<BTreeSet<String>>(),
                )
            })
            .collect(),
    };
    fixture
        .verify_against_vocabulary()
        .expect("generated fixture agrees with the vocabulary");
    serialize_framework_fixture(&fixture)
}

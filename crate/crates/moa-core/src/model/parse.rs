//! Parsing of `.ximodel` documents.

use crate::xml::{parse_document, XmlElement};

use super::{
    validate_model, AssociationDef, AssociationEnd, AttributeDef, ClassDef, ModelDocument,
    ModelError, Multiplicity, RuleId, ScalarType, MODEL_NAMESPACE,
};

/// Parses XML text in the `.ximodel` schema into a validated document.
pub fn parse_model(text: &str) -> Result<ModelDocument, ModelError> {
    let root = parse_document(text).map_err(|e| ModelError::MalformedXml(e.message))?;
    parse_model_element(&root)
}

/// Parses an already-built `moa:Model` element (e.g. one embedded in an
/// invoke envelope) into a validated document.
pub fn parse_model_element(root: &XmlElement) -> Result<ModelDocument, ModelError> {
    if root.name != "moa:Model" {
        return Err(ModelError::SchemaViolation(format!(
            "expected root element moa:Model, found <{}>",
            root.name
        )));
    }
    require_no_text(root)?;
    let mut doc = ModelDocument::new(required_attr(root, "name")?);
    check_attrs(root, &["name"], true)?;

    for child in &root.children {
        match child.name.as_str() {
            "moa:Class" => doc.classes.push(parse_class(child)?),
            "moa:Association" => doc.associations.push(parse_association(child)?),
            other => {
                return Err(ModelError::SchemaViolation(format!(
                    "unexpected element <{other}> under moa:Model"
                )))
            }
        }
    }

    let report = validate_model(&doc);
    if let Some(v) = report.violations.first() {
        return Err(match v.rule {
            RuleId::DuplicateName => ModelError::DuplicateName(v.to_string()),
            RuleId::DanglingReference => ModelError::DanglingReference(v.to_string()),
            RuleId::ValidIdentifier => ModelError::SchemaViolation(v.to_string()),
        });
    }
    Ok(doc)
}

fn parse_class(el: &XmlElement) -> Result<ClassDef, ModelError> {
    require_no_text(el)?;
    check_attrs(el, &["name"], false)?;
    let mut class = ClassDef::new(required_attr(el, "name")?);
    for child in &el.children {
        match child.name.as_str() {
            "moa:Attribute" => class.attributes.push(parse_attribute(child)?),
            other => {
                return Err(ModelError::SchemaViolation(format!(
                    "unexpected element <{other}> under moa:Class"
                )))
            }
        }
    }
    Ok(class)
}

fn parse_association(el: &XmlElement) -> Result<AssociationDef, ModelError> {
    require_no_text(el)?;
    check_attrs(el, &["name"], false)?;
    let name = required_attr(el, "name")?;
    let mut ends: Vec<AssociationEnd> = Vec::new();
    let mut attributes: Vec<AttributeDef> = Vec::new();
    for child in &el.children {
        match child.name.as_str() {
            "moa:End" => ends.push(parse_end(child)?),
            "moa:Attribute" => attributes.push(parse_attribute(child)?),
            other => {
                return Err(ModelError::SchemaViolation(format!(
                    "unexpected element <{other}> under moa:Association"
                )))
            }
        }
    }
    if ends.len() != 2 {
        return Err(ModelError::SchemaViolation(format!(
            "association '{name}' has {} ends, exactly 2 required",
            ends.len()
        )));
    }
    let end_b = ends.pop().expect("two ends");
    let end_a = ends.pop().expect("two ends");
    Ok(AssociationDef {
        name,
        end_a,
        end_b,
        attributes,
    })
}

fn parse_end(el: &XmlElement) -> Result<AssociationEnd, ModelError> {
    require_no_text(el)?;
    check_attrs(el, &["class", "multiplicity", "role"], false)?;
    if !el.children.is_empty() {
        return Err(ModelError::SchemaViolation(
            "moa:End does not take child elements".into(),
        ));
    }
    let class_ref = required_attr_named(el, "class")?;
    let token = required_attr_named(el, "multiplicity")?;
    let multiplicity = Multiplicity::from_token(&token)
        .map_err(|e| ModelError::SchemaViolation(e.to_string()))?;
    Ok(AssociationEnd {
        class_ref,
        multiplicity,
        role: el.get_attr("role").map(str::to_string),
    })
}

fn parse_attribute(el: &XmlElement) -> Result<AttributeDef, ModelError> {
    require_no_text(el)?;
    check_attrs(el, &["name", "type"], false)?;
    if !el.children.is_empty() {
        return Err(ModelError::SchemaViolation(
            "moa:Attribute does not take child elements".into(),
        ));
    }
    let name = required_attr(el, "name")?;
    let type_token = required_attr_named(el, "type")?;
    let scalar_type = ScalarType::from_token(&type_token).ok_or_else(|| {
        ModelError::SchemaViolation(format!(
            "unknown attribute type '{type_token}': expected string, integer or boolean"
        ))
    })?;
    Ok(AttributeDef { name, scalar_type })
}

fn required_attr(el: &XmlElement, key: &str) -> Result<String, ModelError> {
    required_attr_named(el, key)
}

fn required_attr_named(el: &XmlElement, key: &str) -> Result<String, ModelError> {
    el.get_attr(key).map(str::to_string).ok_or_else(|| {
        ModelError::SchemaViolation(format!("<{}> is missing required attribute '{key}'", el.name))
    })
}

fn require_no_text(el: &XmlElement) -> Result<(), ModelError> {
    if el.text.trim().is_empty() {
        Ok(())
    } else {
        Err(ModelError::SchemaViolation(format!(
            "<{}> does not take text content",
            el.name
        )))
    }
}

fn check_attrs(el: &XmlElement, allowed: &[&str], is_root: bool) -> Result<(), ModelError> {
    for (key, value) in &el.attrs {
        if allowed.contains(&key.as_str()) {
            continue;
        }
        if is_root && key == "xmlns:moa" {
            if value != MODEL_NAMESPACE {
                return Err(ModelError::SchemaViolation(format!(
                    "unexpected namespace '{value}', expected {MODEL_NAMESPACE}"
                )));
            }
            continue;
        }
        return Err(ModelError::SchemaViolation(format!(
            "unexpected attribute '{key}' on <{}>",
            el.name
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_empty_model() {
        let doc = parse_model("<moa:Model name=\"Empty\"/>").unwrap();
        assert_eq!(doc.model_name, "Empty");
        assert!(doc.classes.is_empty());
        assert!(doc.associations.is_empty());
    }

    #[test]
    fn two_class_document_field_by_field() {
        let text = r#"<?xml version="1.0" encoding="UTF-8"?>
<moa:Model name="PersonCompany">
  <moa:Class name="Person">
    <moa:Attribute name="name" type="string"/>
  </moa:Class>
  <moa:Class name="Company"/>
  <moa:Association name="WorksFor">
    <moa:End class="Person" multiplicity="0..*"/>
    <moa:End class="Company" multiplicity="1"/>
    <moa:Attribute name="since" type="integer"/>
  </moa:Association>
</moa:Model>
"#;
        let doc = parse_model(text).unwrap();
        assert_eq!(doc.model_name, "PersonCompany");
        assert_eq!(doc.classes.len(), 2);
        assert_eq!(doc.classes[0].name, "Person");
        assert_eq!(doc.classes[0].attributes[0].name, "name");
        assert_eq!(doc.classes[0].attributes[0].scalar_type, ScalarType::String);
        assert_eq!(doc.classes[1].name, "Company");
        assert_eq!(doc.associations.len(), 1);
        let assoc = &doc.associations[0];
        assert_eq!(assoc.name, "WorksFor");
        assert_eq!(assoc.end_a.class_ref, "Person");
        assert_eq!(assoc.end_a.multiplicity, Multiplicity::Many);
        assert_eq!(assoc.end_b.class_ref, "Company");
        assert_eq!(assoc.end_b.multiplicity, Multiplicity::One);
        assert_eq!(assoc.attributes[0].name, "since");
        assert_eq!(assoc.attributes[0].scalar_type, ScalarType::Integer);
    }

    #[test]
    fn dangling_reference_fails() {
        let text = r#"<moa:Model name="M">
  <moa:Class name="Person"/>
  <moa:Association name="R">
    <moa:End class="Person" multiplicity="1"/>
    <moa:End class="Ghost" multiplicity="1"/>
  </moa:Association>
</moa:Model>"#;
        assert!(matches!(
            parse_model(text),
            Err(ModelError::DanglingReference(_))
        ));
    }

    #[test]
    fn schema_violations() {
        // unknown element
        assert!(matches!(
            parse_model("<moa:Model name=\"M\"><moa:Thing/></moa:Model>"),
            Err(ModelError::SchemaViolation(_))
        ));
        // unknown attribute
        assert!(matches!(
            parse_model("<moa:Model name=\"M\" color=\"red\"/>"),
            Err(ModelError::SchemaViolation(_))
        ));
        // missing required field
        assert!(matches!(
            parse_model("<moa:Model/>"),
            Err(ModelError::SchemaViolation(_))
        ));
        // bad multiplicity token
        let text = r#"<moa:Model name="M"><moa:Class name="A"/>
  <moa:Association name="R">
    <moa:End class="A" multiplicity="5..7"/>
    <moa:End class="A" multiplicity="1"/>
  </moa:Association></moa:Model>"#;
        assert!(matches!(
            parse_model(text),
            Err(ModelError::SchemaViolation(_))
        ));
        // one end only
        let text = r#"<moa:Model name="M"><moa:Class name="A"/>
  <moa:Association name="R"><moa:End class="A" multiplicity="1"/></moa:Association></moa:Model>"#;
        assert!(matches!(
            parse_model(text),
            Err(ModelError::SchemaViolation(_))
        ));
    }

    #[test]
    fn duplicate_names_fail() {
        let text = r#"<moa:Model name="M">
  <moa:Class name="Person"/>
  <moa:Class name="Person"/>
</moa:Model>"#;
        assert!(matches!(
            parse_model(text),
            Err(ModelError::DuplicateName(_))
        ));
    }

    #[test]
    fn not_xml_is_malformed() {
        assert!(matches!(
            parse_model("this is not xml"),
            Err(ModelError::MalformedXml(_))
        ));
    }

    #[test]
    fn optional_namespace_is_accepted_but_checked() {
        assert!(parse_model(
            "<moa:Model xmlns:moa=\"urn:moa:ximodel:1\" name=\"M\"/>"
        )
        .is_ok());
        assert!(matches!(
            parse_model("<moa:Model xmlns:moa=\"urn:other:1\" name=\"M\"/>"),
            Err(ModelError::SchemaViolation(_))
        ));
    }
}

//! Parsing and canonical serialization of `.msd.xml` descriptor documents.

use crate::xml::{parse_document, to_document_string, XmlElement};

use super::{
    normalize_intention, ClassificationMetadata, DescriptorError, MethodServiceDescriptor,
    OperationDef, OperationalDescriptor, ProductSignature, SemanticDescriptor, ShapeConstraint,
    DESCRIPTOR_NAMESPACE,
};

/// Parses descriptor XML into a validated [`MethodServiceDescriptor`].
pub fn parse_descriptor(text: &str) -> Result<MethodServiceDescriptor, DescriptorError> {
    let root = parse_document(text).map_err(|e| DescriptorError::MalformedXml(e.message))?;
    parse_descriptor_element(&root)
}

/// Parses an already-built `moa:MethodService` element, e.g. one embedded
/// in a registry record.
pub fn parse_descriptor_element(
    root: &XmlElement,
) -> Result<MethodServiceDescriptor, DescriptorError> {
    if root.name != "moa:MethodService" {
        return Err(DescriptorError::SchemaViolation(format!(
            "expected root element moa:MethodService, found <{}>",
            root.name
        )));
    }
    if let Some(ns) = root.get_attr("xmlns:moa") {
        if ns != DESCRIPTOR_NAMESPACE {
            return Err(DescriptorError::SchemaViolation(format!(
                "unexpected namespace '{ns}', expected {DESCRIPTOR_NAMESPACE}"
            )));
        }
    }
    let service_name = required(root, "name")?;
    let version = required(root, "version")?;
    if !crate::model::is_identifier(&service_name) {
        return Err(DescriptorError::SchemaViolation(format!(
            "service name '{service_name}' is not a valid identifier"
        )));
    }
    if version.trim().is_empty() {
        return Err(DescriptorError::SchemaViolation("version is empty".into()));
    }

    let semantic = parse_semantic(single_child(root, "moa:Semantic")?)?;
    let operational = parse_operational(single_child(root, "moa:Operational")?)?;
    let classification = parse_classification(single_child(root, "moa:Classification")?)?;

    Ok(MethodServiceDescriptor {
        service_name,
        version,
        semantic,
        operational,
        classification,
    })
}

fn parse_semantic(el: &XmlElement) -> Result<SemanticDescriptor, DescriptorError> {
    let intention_text = &single_child(el, "moa:Intention")?.text;
    let intention = normalize_intention(intention_text)?;

    let paradigm = single_child(el, "moa:Paradigm")?.text.clone();
    if paradigm.is_empty() {
        return Err(DescriptorError::SchemaViolation(
            "moa:Paradigm has no text".into(),
        ));
    }

    let process = single_child(el, "moa:Process")?;
    let process_description: Vec<String> = process
        .children_named("moa:Step")
        .map(|s| s.text.clone())
        .collect();
    if process_description.is_empty() || process_description.iter().any(String::is_empty) {
        return Err(DescriptorError::SchemaViolation(
            "moa:Process needs at least one non-empty moa:Step".into(),
        ));
    }

    Ok(SemanticDescriptor {
        intention,
        paradigm,
        process_description,
        product_in: parse_signature(single_child(el, "moa:ProductIn")?)?,
        product_out: parse_signature(single_child(el, "moa:ProductOut")?)?,
    })
}

fn parse_signature(el: &XmlElement) -> Result<ProductSignature, DescriptorError> {
    let metamodel_name = required(el, "metamodel")?;
    let mut sig = ProductSignature::none(metamodel_name);
    for req in el.children_named("moa:Requires") {
        let kind = required(req, "kind")?;
        let min: usize = required(req, "min")?.parse().map_err(|_| {
            DescriptorError::SchemaViolation(format!(
                "moa:Requires min must be a non-negative integer, got '{}'",
                req.get_attr("min").unwrap_or_default()
            ))
        })?;
        let constraint = match kind.as_str() {
            "HAS_CLASS" => ShapeConstraint::HasClass { min },
            "HAS_ASSOCIATION" => ShapeConstraint::HasAssociation { min },
            other => {
                return Err(DescriptorError::SchemaViolation(format!(
                    "unknown shape constraint kind '{other}'"
                )))
            }
        };
        sig.constraints.push(constraint);
    }
    Ok(sig)
}

fn parse_operational(el: &XmlElement) -> Result<OperationalDescriptor, DescriptorError> {
    let endpoint = required(el, "endpoint")?;
    let mut operations = Vec::new();
    for op_el in el.children_named("moa:Operation") {
        let name = required(op_el, "name")?;
        if operations.iter().any(|o: &OperationDef| o.name == name) {
            return Err(DescriptorError::SchemaViolation(format!(
                "operation '{name}' declared twice"
            )));
        }
        operations.push(OperationDef {
            name,
            input_params: parse_message(single_child(op_el, "moa:Input")?)?,
            output_params: parse_message(single_child(op_el, "moa:Output")?)?,
        });
    }
    if operations.is_empty() {
        return Err(DescriptorError::SchemaViolation(
            "moa:Operational declares no operations".into(),
        ));
    }
    Ok(OperationalDescriptor {
        endpoint,
        operations,
    })
}

fn parse_message(el: &XmlElement) -> Result<Vec<String>, DescriptorError> {
    let message = required(el, "message")?;
    if message != "PRODUCT" {
        return Err(DescriptorError::SignatureMismatch(format!(
            "<{}> declares message kind '{message}', only PRODUCT messages exist",
            el.name
        )));
    }
    let mut params = Vec::new();
    for p in el.children_named("moa:Param") {
        let name = required(p, "name")?;
        if params.contains(&name) {
            return Err(DescriptorError::SchemaViolation(format!(
                "parameter '{name}' declared twice"
            )));
        }
        params.push(name);
    }
    Ok(params)
}

fn parse_classification(el: &XmlElement) -> Result<ClassificationMetadata, DescriptorError> {
    ClassificationMetadata::from_tokens(
        el.attrs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )
}

fn single_child<'a>(el: &'a XmlElement, name: &str) -> Result<&'a XmlElement, DescriptorError> {
    let mut matches = el.children_named(name);
    let first = matches.next().ok_or_else(|| {
        DescriptorError::SchemaViolation(format!("<{}> is missing <{name}>", el.name))
    })?;
    if matches.next().is_some() {
        return Err(DescriptorError::SchemaViolation(format!(
            "<{}> has more than one <{name}>",
            el.name
        )));
    }
    Ok(first)
}

fn required(el: &XmlElement, key: &str) -> Result<String, DescriptorError> {
    el.get_attr(key).map(str::to_string).ok_or_else(|| {
        DescriptorError::SchemaViolation(format!(
            "<{}> is missing required attribute '{key}'",
            el.name
        ))
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Serializes a descriptor to canonical `.msd.xml` text. Parsing the output
/// reproduces the descriptor exactly.
pub fn serialize_descriptor(d: &MethodServiceDescriptor) -> String {
    to_document_string(&serialize_descriptor_element(d))
}

/// Builds the `moa:MethodService` element tree.
pub fn serialize_descriptor_element(d: &MethodServiceDescriptor) -> XmlElement {
    XmlElement::new("moa:MethodService")
        .attr("name", &d.service_name)
        .attr("version", &d.version)
        .child(semantic_element(&d.semantic))
        .child(operational_element(&d.operational))
        .child(classification_element(&d.classification))
}

fn semantic_element(s: &SemanticDescriptor) -> XmlElement {
    XmlElement::new("moa:Semantic")
        .child(XmlElement::new("moa:Intention").text_content(&s.intention.raw_text))
        .child(XmlElement::new("moa:Paradigm").text_content(&s.paradigm))
        .child(
            XmlElement::new("moa:Process").children(
                s.process_description
                    .iter()
                    .map(|step| XmlElement::new("moa:Step").text_content(step)),
            ),
        )
        .child(signature_element("moa:ProductIn", &s.product_in))
        .child(signature_element("moa:ProductOut", &s.product_out))
}

fn signature_element(name: &str, sig: &ProductSignature) -> XmlElement {
    XmlElement::new(name)
        .attr("metamodel", &sig.metamodel_name)
        .children(sig.constraints.iter().map(|c| {
            XmlElement::new("moa:Requires")
                .attr("kind", c.kind_token())
                .attr("min", c.min().to_string())
        }))
}

fn operational_element(o: &OperationalDescriptor) -> XmlElement {
    XmlElement::new("moa:Operational")
        .attr("endpoint", &o.endpoint)
        .children(o.operations.iter().map(|op| {
            XmlElement::new("moa:Operation")
                .attr("name", &op.name)
                .child(message_element("moa:Input", &op.input_params))
                .child(message_element("moa:Output", &op.output_params))
        }))
}

fn message_element(name: &str, params: &[String]) -> XmlElement {
    XmlElement::new(name).attr("message", "PRODUCT").children(
        params
            .iter()
            .map(|p| XmlElement::new("moa:Param").attr("name", p)),
    )
}

fn classification_element(c: &ClassificationMetadata) -> XmlElement {
    let mut el = XmlElement::new("moa:Classification");
    for (name, set) in c.entries() {
        let joined = set.iter().cloned().collect::<Vec<_>>().join(" ");
        el = el.attr(name, joined);
    }
    el
}

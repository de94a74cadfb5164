//! The invoke envelope: how products and operations travel between client
//! and service.
//!
//! Requests wrap an operation name, string parameters and the product
//! model; responses are either a result envelope wrapping the transformed
//! product or a fault envelope with a closed code set. Faults are
//! application data, never transport errors.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{parse_model, parse_model_element, serialize_model_element, ModelDocument};
use crate::xml::{parse_document, to_document_string, XmlElement};

/// A service invocation: operation, parameter bindings, input product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvokeEnvelope {
    pub operation: String,
    pub params: BTreeMap<String, String>,
    pub product: ModelDocument,
}

/// Closed fault vocabulary of the invoke protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultCode {
    SchemaViolation,
    PreconditionFailed,
    UnknownOperation,
    InternalError,
}

impl FaultCode {
    pub fn token(self) -> &'static str {
        match self {
            FaultCode::SchemaViolation => "SchemaViolation",
            FaultCode::PreconditionFailed => "PreconditionFailed",
            FaultCode::UnknownOperation => "UnknownOperation",
            FaultCode::InternalError => "InternalError",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "SchemaViolation" => Some(FaultCode::SchemaViolation),
            "PreconditionFailed" => Some(FaultCode::PreconditionFailed),
            "UnknownOperation" => Some(FaultCode::UnknownOperation),
            "InternalError" => Some(FaultCode::InternalError),
            _ => None,
        }
    }
}

/// An application fault raised by a service host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultEnvelope {
    pub code: FaultCode,
    pub message: String,
    pub detail: Option<String>,
}

impl FaultEnvelope {
    pub fn new(code: FaultCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

impl fmt::Display for FaultEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.token(), self.message)?;
        if let Some(detail) = &self.detail {
            write!(f, " ({detail})")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Request side
// ---------------------------------------------------------------------------

/// Parses an invoke request. Anything unusable comes back as a
/// `SchemaViolation` fault, so the host can answer every request.
pub fn parse_invoke(body: &str) -> Result<InvokeEnvelope, FaultEnvelope> {
    let fault = |msg: String| FaultEnvelope::new(FaultCode::SchemaViolation, msg);
    let root = parse_document(body).map_err(|e| fault(e.message))?;
    if root.name != "moa:Invoke" {
        return Err(fault(format!("expected moa:Invoke, found <{}>", root.name)));
    }
    let operation = root
        .get_attr("operation")
        .ok_or_else(|| fault("moa:Invoke is missing 'operation'".into()))?
        .to_string();

    let mut params = BTreeMap::new();
    for p in root.children_named("moa:Param") {
        let name = p
            .get_attr("name")
            .ok_or_else(|| fault("moa:Param is missing 'name'".into()))?;
        let value = p
            .get_attr("value")
            .ok_or_else(|| fault(format!("moa:Param '{name}' is missing 'value'")))?;
        if params.insert(name.to_string(), value.to_string()).is_some() {
            return Err(fault(format!("parameter '{name}' bound twice")));
        }
    }

    let product_el = root
        .first_child("moa:Product")
        .ok_or_else(|| fault("moa:Invoke has no moa:Product".into()))?;
    let product = parse_product(product_el).map_err(|msg| fault(msg))?;

    Ok(InvokeEnvelope {
        operation,
        params,
        product,
    })
}

/// A product either nests the model element directly or carries the model
/// document as escaped text.
fn parse_product(el: &XmlElement) -> Result<ModelDocument, String> {
    if let Some(model_el) = el.children.first() {
        if el.children.len() > 1 {
            return Err("moa:Product holds more than one element".into());
        }
        return parse_model_element(model_el).map_err(|e| e.to_string());
    }
    if !el.text.is_empty() {
        return parse_model(&el.text).map_err(|e| e.to_string());
    }
    Err("moa:Product is empty".into())
}

/// Serializes an invoke request.
pub fn serialize_invoke(env: &InvokeEnvelope) -> String {
    let mut root = XmlElement::new("moa:Invoke").attr("operation", &env.operation);
    for (name, value) in &env.params {
        root = root.child(
            XmlElement::new("moa:Param")
                .attr("name", name)
                .attr("value", value),
        );
    }
    root = root.child(XmlElement::new("moa:Product").child(serialize_model_element(&env.product)));
    to_document_string(&root)
}

// ---------------------------------------------------------------------------
// Response side
// ---------------------------------------------------------------------------

/// Serializes a success response wrapping the output product.
pub fn serialize_result(product: &ModelDocument) -> String {
    let root = XmlElement::new("moa:Result")
        .child(XmlElement::new("moa:Product").child(serialize_model_element(product)));
    to_document_string(&root)
}

/// Serializes a fault response.
pub fn serialize_fault(fault: &FaultEnvelope) -> String {
    let mut root = XmlElement::new("moa:Fault")
        .attr("code", fault.code.token())
        .attr("message", &fault.message);
    if let Some(detail) = &fault.detail {
        root = root.attr("detail", detail);
    }
    to_document_string(&root)
}

/// Client-side parsing of a response body: a result, a fault, or (outer
/// error) something that is not an envelope at all.
pub fn parse_response(body: &str) -> Result<Result<ModelDocument, FaultEnvelope>, String> {
    let root = parse_document(body).map_err(|e| e.message)?;
    match root.name.as_str() {
        "moa:Result" => {
            let product_el = root
                .first_child("moa:Product")
                .ok_or("moa:Result has no moa:Product")?;
            let product = parse_product(product_el)?;
            Ok(Ok(product))
        }
        "moa:Fault" => {
            let code_token = root.get_attr("code").ok_or("moa:Fault is missing 'code'")?;
            let code = FaultCode::from_token(code_token)
                .ok_or_else(|| format!("unknown fault code '{code_token}'"))?;
            let message = root
                .get_attr("message")
                .ok_or("moa:Fault is missing 'message'")?
                .to_string();
            Ok(Err(FaultEnvelope {
                code,
                message,
                detail: root.get_attr("detail").map(str::to_string),
            }))
        }
        other => Err(format!("expected moa:Result or moa:Fault, found <{other}>")),
    }
}

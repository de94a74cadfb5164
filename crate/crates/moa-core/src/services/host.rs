//! Dispatch of invoke envelopes onto built-in operations.
//!
//! A host binds one descriptor's operations to their implementations and
//! answers every request with a result or fault envelope, recording which
//! pipeline stages ran. The stage trace is how the five processing steps
//! stay observable from the outside.

use std::collections::BTreeMap;
use std::fmt;

use crate::descriptor::MethodServiceDescriptor;
use crate::model::{generate, instantiate};

use super::envelope::{
    parse_invoke, serialize_fault, serialize_result, FaultCode, FaultEnvelope, InvokeEnvelope,
};
use super::{BuiltinOp, ServiceError};

/// The five pipeline stages every invocation passes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Instantiate,
    Transform,
    Generate,
    Serialize,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Parse,
        Stage::Instantiate,
        Stage::Transform,
        Stage::Generate,
        Stage::Serialize,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Instantiate => "instantiate",
            Stage::Transform => "transform",
            Stage::Generate => "generate",
            Stage::Serialize => "serialize",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Outcome of one invocation: the response body to send, whether it is a
/// fault, and the stages that completed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvokeOutcome {
    pub response_xml: String,
    pub is_fault: bool,
    pub stages: Vec<Stage>,
}

impl InvokeOutcome {
    pub fn stage_tokens(&self) -> String {
        self.stages
            .iter()
            .map(|s| s.token())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// One hosted service: a descriptor whose operations are bound to built-in
/// implementations.
#[derive(Debug, Clone)]
pub struct ServiceHost {
    descriptor: MethodServiceDescriptor,
    bindings: BTreeMap<String, BuiltinOp>,
}

impl ServiceHost {
    /// Binds every operation the descriptor declares. Fails when an
    /// operation has no built-in implementation.
    pub fn new(descriptor: MethodServiceDescriptor) -> Result<Self, String> {
        let mut bindings = BTreeMap::new();
        for op in &descriptor.operational.operations {
            let builtin = BuiltinOp::by_operation_name(&op.name).ok_or_else(|| {
                format!(
                    "operation '{}' of service '{}' has no implementation",
                    op.name, descriptor.service_name
                )
            })?;
            bindings.insert(op.name.clone(), builtin);
        }
        Ok(Self {
            descriptor,
            bindings,
        })
    }

    pub fn descriptor(&self) -> &MethodServiceDescriptor {
        &self.descriptor
    }

    /// Answers a raw request body. Total: every input, however malformed,
    /// produces a response envelope.
    pub fn handle_invoke_text(&self, body: &str) -> InvokeOutcome {
        let mut stages = Vec::new();
        match self.run_pipeline(body, &mut stages) {
            Ok(response_xml) => InvokeOutcome {
                response_xml,
                is_fault: false,
                stages,
            },
            Err(fault) => InvokeOutcome {
                response_xml: serialize_fault(&fault),
                is_fault: true,
                stages,
            },
        }
    }

    fn run_pipeline(
        &self,
        body: &str,
        stages: &mut Vec<Stage>,
    ) -> Result<String, FaultEnvelope> {
        let envelope = parse_invoke(body)?;
        stages.push(Stage::Parse);

        let builtin = *self.bindings.get(&envelope.operation).ok_or_else(|| {
            FaultEnvelope::new(
                FaultCode::UnknownOperation,
                format!(
                    "service '{}' has no operation '{}'",
                    self.descriptor.service_name, envelope.operation
                ),
            )
        })?;

        let mut graph = instantiate(&envelope.product)
            .map_err(|e| FaultEnvelope::new(FaultCode::SchemaViolation, e.to_string()))?;
        stages.push(Stage::Instantiate);

        builtin
            .apply_to_graph(&mut graph, &envelope.params)
            .map_err(|e| fault_for(&e))?;
        stages.push(Stage::Transform);

        let output = generate(&graph);
        stages.push(Stage::Generate);

        let response = serialize_result(&output);
        stages.push(Stage::Serialize);
        Ok(response)
    }
}

/// Dispatches an already-parsed envelope. Stage observability and raw-text
/// totality live in [`ServiceHost::handle_invoke_text`]; this is the typed
/// convenience over it.
pub fn handle_invoke(
    host: &ServiceHost,
    envelope: &InvokeEnvelope,
) -> Result<InvokeEnvelope, FaultEnvelope> {
    let outcome = host.handle_invoke_text(&super::envelope::serialize_invoke(envelope));
    match super::envelope::parse_response(&outcome.response_xml) {
        Ok(Ok(product)) => Ok(InvokeEnvelope {
            operation: envelope.operation.clone(),
            params: envelope.params.clone(),
            product,
        }),
        Ok(Err(fault)) => Err(fault),
        Err(msg) => Err(FaultEnvelope::new(FaultCode::InternalError, msg)),
    }
}

fn fault_for(error: &ServiceError) -> FaultEnvelope {
    let code = match error {
        ServiceError::InvalidProduct(_) => FaultCode::SchemaViolation,
        ServiceError::AssociationNotFound(_)
        | ServiceError::ClassNotFound(_)
        | ServiceError::NameCollision(_)
        | ServiceError::SelfAssociationUnsupported(_)
        | ServiceError::MissingParameter(_)
        | ServiceError::InvalidParameter(_) => FaultCode::PreconditionFailed,
    };
    FaultEnvelope::new(code, error.to_string())
}

#[cfg(test)]
mod tests {
    use super::super::envelope::parse_response;
    use super::super::{objectify, objectify_descriptor};
    use super::*;
    use crate::model::parse_model;
    use std::collections::BTreeMap;

    fn host() -> ServiceHost {
        ServiceHost::new(objectify_descriptor("http://127.0.0.1:9301/invoke")).unwrap()
    }

    fn objectify_request() -> String {
        super::super::envelope::serialize_invoke(&InvokeEnvelope {
            operation: "objectify".into(),
            params: BTreeMap::from([("association".into(), "WorksFor".into())]),
            product: person_company(),
        })
    }

    fn person_company() -> crate::model::ModelDocument {
        parse_model(
            "<moa:Model name=\"M\"><moa:Class name=\"Person\"/><moa:Class name=\"Company\"/>\
             <moa:Association name=\"WorksFor\">\
             <moa:End class=\"Person\" multiplicity=\"0..*\"/>\
             <moa:End class=\"Company\" multiplicity=\"1\"/>\
             </moa:Association></moa:Model>",
        )
        .unwrap()
    }

    #[test]
    fn well_formed_request_returns_the_transformed_product() {
        let outcome = host().handle_invoke_text(&objectify_request());
        assert!(!outcome.is_fault);
        assert_eq!(outcome.stages, Stage::ALL);
        let product = parse_response(&outcome.response_xml).unwrap().unwrap();
        assert_eq!(product, objectify(&person_company(), "WorksFor").unwrap());
    }

    #[test]
    fn unknown_operation_faults() {
        let body = objectify_request().replace("operation=\"objectify\"", "operation=\"frobnicate\"");
        let outcome = host().handle_invoke_text(&body);
        assert!(outcome.is_fault);
        let fault = parse_response(&outcome.response_xml).unwrap().unwrap_err();
        assert_eq!(fault.code, FaultCode::UnknownOperation);
    }

    #[test]
    fn non_xml_product_faults_with_schema_violation() {
        let body = "<moa:Invoke operation=\"objectify\">\
                    <moa:Param name=\"association\" value=\"WorksFor\"/>\
                    <moa:Product>this is { not xml</moa:Product></moa:Invoke>";
        let outcome = host().handle_invoke_text(body);
        assert!(outcome.is_fault);
        let fault = parse_response(&outcome.response_xml).unwrap().unwrap_err();
        assert_eq!(fault.code, FaultCode::SchemaViolation);
        assert!(outcome.stages.is_empty());
    }

    #[test]
    fn contract_violations_fault_with_precondition_failed() {
        // missing parameter
        let body = objectify_request().replace(
            "<moa:Param name=\"association\" value=\"WorksFor\"/>",
            "",
        );
        let outcome = host().handle_invoke_text(&body);
        let fault = parse_response(&outcome.response_xml).unwrap().unwrap_err();
        assert_eq!(fault.code, FaultCode::PreconditionFailed);

        // association that does not exist
        let body = objectify_request().replace("value=\"WorksFor\"", "value=\"Ghost\"");
        let outcome = host().handle_invoke_text(&body);
        let fault = parse_response(&outcome.response_xml).unwrap().unwrap_err();
        assert_eq!(fault.code, FaultCode::PreconditionFailed);
        // parse and instantiate ran; transform did not complete
        assert_eq!(outcome.stages, vec![Stage::Parse, Stage::Instantiate]);
    }

    #[test]
    fn responses_are_deterministic() {
        let body = objectify_request();
        let h = host();
        let first = h.handle_invoke_text(&body);
        let second = h.handle_invoke_text(&body);
        assert_eq!(first, second);
    }

    #[test]
    fn typed_dispatch_matches_the_doc_level_transformations() {
        let env = InvokeEnvelope {
            operation: "objectify".into(),
            params: BTreeMap::from([("association".into(), "WorksFor".into())]),
            product: person_company(),
        };
        let out = handle_invoke(&host(), &env).unwrap();
        assert_eq!(out.product, objectify(&person_company(), "WorksFor").unwrap());
    }

    #[test]
    fn descriptor_operation_without_implementation_is_rejected() {
        let mut d = objectify_descriptor("http://127.0.0.1:9301/invoke");
        d.operational.operations[0].name = "transmogrify".into();
        assert!(ServiceHost::new(d).is_err());
    }

    #[test]
    fn fuzzed_bodies_always_get_an_envelope_back() {
        let h = host();
        let mut corpus: Vec<String> = vec![
            String::new(),
            "<".into(),
            "<>".into(),
            "<moa:Invoke".into(),
            "<moa:Invoke operation=\"objectify\"><moa:Product/></moa:Invoke>".into(),
            "\u{0}\u{1}\u{2}".into(),
            "<moa:Invoke operation=\"\u{e9}\"/>".into(),
            "<a><b></a></b>".into(),
        ];
        // deterministic pseudo-random truncations and mutations of a valid body
        let valid = objectify_request();
        let mut seed = 0x243F_6A88_85A3_08D3u64;
        for _ in 0..200 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let cut = (seed >> 33) as usize % valid.len();
            let mut s: String = valid.chars().take(cut).collect();
            if seed % 3 == 0 {
                s.push('<');
            }
            corpus.push(s);
        }
        for body in &corpus {
            let outcome = h.handle_invoke_text(body);
            if outcome.is_fault {
                let fault = parse_response(&outcome.response_xml).unwrap().unwrap_err();
                assert!(FaultCode::from_token(fault.code.token()).is_some());
            }
        }
    }
}

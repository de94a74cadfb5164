//! Client side of the wire APIs: registry operations, provider calls, and
//! the invoker that lets the process engine drive remote services.

use std::collections::BTreeMap;
use std::time::Duration;

use thiserror::Error;

use moa_core::composition::{InvokeError, InvokeSuccess, ResolvedService, ServiceInvoker, ServiceRef};
use moa_core::model::ModelDocument;
use moa_core::registry::{parse_record, parse_results, RegistryRecord, ResultEntry};
use moa_core::retrieval::QuerySpec;
use moa_core::services::{parse_response, serialize_invoke, FaultEnvelope, InvokeEnvelope};
use moa_core::xml::parse_document;

use crate::{PROVIDER_LABEL_HEADER, STAGE_TRACE_HEADER};

#[derive(Debug, Error)]
pub enum ClientError {
    /// The remote side could not be reached or broke off mid-transfer.
    #[error("transport error: {0}")]
    Transport(String),
    /// The API answered with an error status and an error body.
    #[error("{code}: {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
    },
    /// The response did not follow the wire protocol.
    #[error("protocol error: {0}")]
    Protocol(String),
}

fn agent() -> ureq::Agent {
    ureq::Agent::new_with_config(
        ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build(),
    )
}

struct HttpResponse {
    status: u16,
    body: String,
    stage_header: Option<String>,
}

fn post(agent: &ureq::Agent, url: &str, body: &str, headers: &[(&str, &str)]) -> Result<HttpResponse, ClientError> {
    let mut request = agent
        .post(url)
        .header("Content-Type", "application/xml; charset=utf-8");
    for (name, value) in headers {
        request = request.header(*name, *value);
    }
    let mut response = request
        .send(body)
        .map_err(|e| ClientError::Transport(e.to_string()))?;
    read_response(&mut response)
}

fn get(agent: &ureq::Agent, url: &str) -> Result<HttpResponse, ClientError> {
    let mut response = agent
        .get(url)
        .call()
        .map_err(|e| ClientError::Transport(e.to_string()))?;
    read_response(&mut response)
}

fn read_response(response: &mut ureq::http::Response<ureq::Body>) -> Result<HttpResponse, ClientError> {
    let status = response.status().as_u16();
    let stage_header = response
        .headers()
        .get(STAGE_TRACE_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string);
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| ClientError::Transport(e.to_string()))?;
    Ok(HttpResponse {
        status,
        body,
        stage_header,
    })
}

/// Maps an error-status body (`<moa:Error code message/>`) to [`ClientError::Api`].
fn api_error(response: HttpResponse) -> ClientError {
    match parse_document(&response.body) {
        Ok(el) if el.name == "moa:Error" => ClientError::Api {
            status: response.status,
            code: el.get_attr("code").unwrap_or("Error").to_string(),
            message: el.get_attr("message").unwrap_or_default().to_string(),
        },
        _ => ClientError::Api {
            status: response.status,
            code: format!("Http{}", response.status),
            message: response.body,
        },
    }
}

// ---------------------------------------------------------------------------
// Registry client
// ---------------------------------------------------------------------------

/// Talks to a registry's wire API.
pub struct RegistryClient {
    base_url: String,
    agent: ureq::Agent,
}

impl RegistryClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base_url = base_url.into();
        while base_url.ends_with('/') {
            base_url.pop();
        }
        Self {
            base_url,
            agent: agent(),
        }
    }

    /// Publishes descriptor XML; returns the assigned service id.
    pub fn publish(&self, descriptor_xml: &str, provider_label: &str) -> Result<String, ClientError> {
        let response = post(
            &self.agent,
            &format!("{}/services", self.base_url),
            descriptor_xml,
            &[(PROVIDER_LABEL_HEADER, provider_label)],
        )?;
        if response.status != 201 {
            return Err(api_error(response));
        }
        let el = parse_document(&response.body).map_err(|e| ClientError::Protocol(e.message))?;
        if el.name != "moa:Published" {
            return Err(ClientError::Protocol(format!(
                "expected moa:Published, got <{}>",
                el.name
            )));
        }
        el.get_attr("id")
            .map(str::to_string)
            .ok_or_else(|| ClientError::Protocol("moa:Published without id".into()))
    }

    /// Fetches a record by service id.
    pub fn lookup(&self, service_id: &str) -> Result<RegistryRecord, ClientError> {
        parse_record(&self.lookup_raw(service_id)?)
            .map_err(|e| ClientError::Protocol(e.to_string()))
    }

    /// Fetches the raw record XML by service id.
    pub fn lookup_raw(&self, service_id: &str) -> Result<String, ClientError> {
        let response = get(
            &self.agent,
            &format!("{}/services/{}", self.base_url, service_id),
        )?;
        if response.status != 200 {
            return Err(api_error(response));
        }
        Ok(response.body)
    }

    /// Resolves `name@version` to its record.
    pub fn find_by_reference(&self, name: &str, version: &str) -> Result<RegistryRecord, ClientError> {
        let response = get(
            &self.agent,
            &format!("{}/services?name={name}&version={version}", self.base_url),
        )?;
        if response.status != 200 {
            return Err(api_error(response));
        }
        parse_record(&response.body).map_err(|e| ClientError::Protocol(e.to_string()))
    }

    /// Removes a record.
    pub fn remove(&self, service_id: &str) -> Result<(), ClientError> {
        let mut response = self
            .agent
            .delete(format!("{}/services/{}", self.base_url, service_id))
            .call()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let response = read_response(&mut response)?;
        if response.status != 204 {
            return Err(api_error(response));
        }
        Ok(())
    }

    /// Runs a ranked query.
    pub fn query(&self, query: &QuerySpec) -> Result<Vec<ResultEntry>, ClientError> {
        let response = post(
            &self.agent,
            &format!("{}/services/query", self.base_url),
            &moa_core::registry::serialize_query(query),
            &[],
        )?;
        if response.status != 200 {
            return Err(api_error(response));
        }
        parse_results(&response.body).map_err(|e| ClientError::Protocol(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Provider client
// ---------------------------------------------------------------------------

/// Talks to one provider.
pub struct ProviderClient {
    agent: ureq::Agent,
}

impl Default for ProviderClient {
    fn default() -> Self {
        Self::new()
    }
}

impl ProviderClient {
    pub fn new() -> Self {
        Self { agent: agent() }
    }

    /// Fetches the provider's descriptor file, byte-identical.
    pub fn fetch_descriptor(&self, provider_base_url: &str) -> Result<String, ClientError> {
        let base = provider_base_url.trim_end_matches('/');
        let response = get(&self.agent, &format!("{base}/descriptor"))?;
        if response.status != 200 {
            return Err(api_error(response));
        }
        Ok(response.body)
    }

    /// Posts an invoke envelope to an endpoint; returns the response
    /// product (or the service's fault) plus the reported stages.
    pub fn invoke(
        &self,
        endpoint: &str,
        envelope: &InvokeEnvelope,
    ) -> Result<(Result<ModelDocument, FaultEnvelope>, Vec<String>), ClientError> {
        let response = post(&self.agent, endpoint, &serialize_invoke(envelope), &[])?;
        if response.status != 200 {
            return Err(api_error(response));
        }
        let stages = response
            .stage_header
            .as_deref()
            .map(|h| h.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect())
            .unwrap_or_default();
        let outcome = parse_response(&response.body).map_err(ClientError::Protocol)?;
        Ok((outcome, stages))
    }
}

// ---------------------------------------------------------------------------
// Remote invoker for the process engine
// ---------------------------------------------------------------------------

/// [`ServiceInvoker`] that resolves references against a registry and calls
/// the providers named in the resolved descriptors.
pub struct HttpInvoker {
    registry: RegistryClient,
    provider: ProviderClient,
}

impl HttpInvoker {
    pub fn new(registry_base_url: impl Into<String>) -> Self {
        Self {
            registry: RegistryClient::new(registry_base_url),
            provider: ProviderClient::new(),
        }
    }
}

impl ServiceInvoker for HttpInvoker {
    fn resolve(&self, service: &ServiceRef) -> Result<ResolvedService, InvokeError> {
        let record = match service {
            ServiceRef::NameVersion { name, version } => {
                self.registry.find_by_reference(name, version)
            }
            ServiceRef::Id(id) => self.registry.lookup(id),
        }
        .map_err(|e| match e {
            ClientError::Api { .. } => InvokeError::Unresolved(format!("{service}: {e}")),
            other => InvokeError::Transport(other.to_string()),
        })?;
        Ok(ResolvedService {
            service_id: record.service_id,
            descriptor: record.descriptor,
        })
    }

    fn invoke(
        &self,
        service: &ResolvedService,
        operation: &str,
        params: &BTreeMap<String, String>,
        input: &ModelDocument,
    ) -> Result<InvokeSuccess, InvokeError> {
        let envelope = InvokeEnvelope {
            operation: operation.to_string(),
            params: params.clone(),
            product: input.clone(),
        };
        let (outcome, stages) = self
            .provider
            .invoke(&service.descriptor.operational.endpoint, &envelope)
            .map_err(|e| match e {
                ClientError::Transport(msg) => InvokeError::Transport(msg),
                other => InvokeError::Protocol(other.to_string()),
            })?;
        match outcome {
            Ok(output) => Ok(InvokeSuccess { output, stages }),
            Err(fault) => Err(InvokeError::Fault {
                code: fault.code.token().to_string(),
                message: fault.message,
            }),
        }
    }
}

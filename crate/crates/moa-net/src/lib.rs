//! HTTP transport for the method-oriented architecture.
//!
//! Three actors talk over this layer: providers host services behind the
//! invoke endpoint, the registry serves the publish/lookup/query API, and
//! clients (the CLI, the process executor) drive both. All bodies are XML;
//! application faults ride 200 responses, transport status codes are for
//! the API itself.

mod client;
mod provider_server;
mod registry_server;

pub use client::{ClientError, HttpInvoker, ProviderClient, RegistryClient};
pub use provider_server::ProviderServer;
pub use registry_server::RegistryServer;

/// Response header carrying the pipeline stages an invocation completed.
pub const STAGE_TRACE_HEADER: &str = "moa-stage-trace";

/// Request header naming the publishing provider.
pub const PROVIDER_LABEL_HEADER: &str = "moa-provider-label";

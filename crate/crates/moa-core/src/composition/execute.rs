//! Process execution: resolve each invocation at execution time, pipe
//! sequences, fan out parallel branches and merge their outputs.

use std::collections::BTreeMap;
use std::time::Instant;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{serialize_model, ModelDocument};
use crate::services::{handle_invoke, InvokeEnvelope, ServiceHost};

use super::merge::{merge_parallel, MergeConflict};
use super::validate::{LocalDirectory, ResolvedService, ServiceDirectory};
use super::{path_string, Block, MethodProcess, ServiceRef};

/// Errors an invoker can raise for one invocation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvokeError {
    #[error("service '{0}' cannot be resolved")]
    Unresolved(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("service fault {code}: {message}")]
    Fault { code: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Successful invocation: the output product plus the pipeline stages the
/// service reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvokeSuccess {
    pub output: ModelDocument,
    pub stages: Vec<String>,
}

/// Executes single invocations on behalf of the process engine. `Sync`
/// because parallel branches may run concurrently.
pub trait ServiceInvoker: Sync {
    fn resolve(&self, service: &ServiceRef) -> Result<ResolvedService, InvokeError>;

    fn invoke(
        &self,
        service: &ResolvedService,
        operation: &str,
        params: &BTreeMap<String, String>,
        input: &ModelDocument,
    ) -> Result<InvokeSuccess, InvokeError>;
}

/// Errors of a process execution.
#[derive(Debug, Error)]
pub enum ExecuteError {
    #[error("invocation failed at {step_path}: {cause}")]
    InvocationFailure { step_path: String, cause: String },
    #[error("service fault at {step_path}: {code}: {message}")]
    ServiceFault {
        step_path: String,
        code: String,
        message: String,
    },
    #[error("merge conflict at {step_path}: {conflict}")]
    MergeConflict {
        step_path: String,
        conflict: MergeConflict,
    },
}

/// One completed invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step_path: String,
    pub service_id: String,
    pub operation: String,
    pub input_digest: String,
    pub output_digest: String,
    pub duration_ms: u64,
    pub stages: Vec<String>,
}

/// Ordered record of every completed invocation, one entry per invoke leaf
/// executed, in deterministic (branch-order) sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
}

impl ExecutionTrace {
    /// Renders the trace in its line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "step={} service={} op={} in={} out={} duration_ms={} stages={}\n",
                e.step_path,
                e.service_id,
                e.operation,
                e.input_digest,
                e.output_digest,
                e.duration_ms,
                e.stages.join(",")
            ));
        }
        out
    }
}

/// Digest of a document's canonical serialization.
pub(crate) fn document_digest(doc: &ModelDocument) -> String {
    let bytes = serialize_model(doc);
    format!("sha256:{}", hex::encode(Sha256::digest(bytes.as_bytes())))
}

/// Runs a process on an input document.
///
/// Sequences pipe each output into the next input. Parallel blocks hand
/// every branch the same input, run the branches (possibly concurrently),
/// and merge the outputs under the no-overlapping rule. Service references
/// resolve at execution time, so the freshest published version wins.
pub fn execute(
    process: &MethodProcess,
    input: &ModelDocument,
    invoker: &dyn ServiceInvoker,
) -> Result<(ModelDocument, ExecutionTrace), ExecuteError> {
    let mut trace = ExecutionTrace::default();
    let output = run_block(&process.root, &mut Vec::new(), input, invoker, &mut trace)?;
    Ok((output, trace))
}

fn run_block(
    block: &Block,
    path: &mut Vec<usize>,
    input: &ModelDocument,
    invoker: &dyn ServiceInvoker,
    trace: &mut ExecutionTrace,
) -> Result<ModelDocument, ExecuteError> {
    match block {
        Block::Invoke(step) => {
            let here = path_string(path);
            let failure = |cause: String| ExecuteError::InvocationFailure {
                step_path: here.clone(),
                cause,
            };
            let service = invoker
                .resolve(&step.service)
                .map_err(|e| failure(e.to_string()))?;
            let started = Instant::now();
            let outcome = invoker
                .invoke(&service, &step.operation, &step.params, input)
                .map_err(|e| match e {
                    InvokeError::Fault { code, message } => ExecuteError::ServiceFault {
                        step_path: here.clone(),
                        code,
                        message,
                    },
                    other => failure(other.to_string()),
                })?;
            trace.entries.push(TraceEntry {
                step_path: here,
                service_id: service.service_id,
                operation: step.operation.clone(),
                input_digest: document_digest(input),
                output_digest: document_digest(&outcome.output),
                duration_ms: started.elapsed().as_millis() as u64,
                stages: outcome.stages,
            });
            Ok(outcome.output)
        }
        Block::Seq(children) => {
            let mut doc = input.clone();
            for (i, child) in children.iter().enumerate() {
                path.push(i);
                let result = run_block(child, path, &doc, invoker, trace);
                path.pop();
                doc = result?;
            }
            Ok(doc)
        }
        Block::Par(branches) => {
            let here = path_string(path);
            // Branches run concurrently on the same input; traces and
            // errors are collected in branch order so the outcome is
            // deterministic regardless of scheduling.
            let results: Vec<Result<(ModelDocument, ExecutionTrace), ExecuteError>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = branches
                        .iter()
                        .enumerate()
                        .map(|(i, branch)| {
                            let mut branch_path = path.clone();
                            branch_path.push(i);
                            let input = input.clone();
                            scope.spawn(move || {
                                let mut branch_trace = ExecutionTrace::default();
                                run_block(branch, &mut branch_path, &input, invoker, &mut branch_trace)
                                    .map(|doc| (doc, branch_trace))
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("branch thread does not panic"))
                        .collect()
                });

            let mut outputs = Vec::with_capacity(results.len());
            for result in results {
                let (doc, branch_trace) = result?;
                trace.entries.extend(branch_trace.entries);
                outputs.push(doc);
            }
            merge_parallel(input, &outputs).map_err(|conflict| ExecuteError::MergeConflict {
                step_path: here,
                conflict,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// In-process invoker
// ---------------------------------------------------------------------------

/// Invoker backed by in-process [`ServiceHost`]s: full envelope round trips
/// without a network. The execution backend for tests and local runs.
pub struct HostInvoker {
    directory: LocalDirectory,
    hosts: Vec<ServiceHost>,
}

impl HostInvoker {
    pub fn new() -> Self {
        Self {
            directory: LocalDirectory::new(),
            hosts: Vec::new(),
        }
    }

    /// Hosts a descriptor; its operations must map to built-ins.
    pub fn host(&mut self, descriptor: crate::descriptor::MethodServiceDescriptor) -> Result<String, String> {
        let host = ServiceHost::new(descriptor.clone())?;
        let id = self.directory.add(descriptor);
        self.hosts.push(host);
        Ok(id)
    }

    pub fn directory(&self) -> &LocalDirectory {
        &self.directory
    }
}

impl Default for HostInvoker {
    fn default() -> Self {
        Self::new()
    }
}

impl ServiceInvoker for HostInvoker {
    fn resolve(&self, service: &ServiceRef) -> Result<ResolvedService, InvokeError> {
        self.directory
            .resolve(service)
            .ok_or_else(|| InvokeError::Unresolved(service.to_string()))
    }

    fn invoke(
        &self,
        service: &ResolvedService,
        operation: &str,
        params: &BTreeMap<String, String>,
        input: &ModelDocument,
    ) -> Result<InvokeSuccess, InvokeError> {
        let host = self
            .hosts
            .iter()
            .find(|h| {
                h.descriptor().service_name == service.descriptor.service_name
                    && h.descriptor().version == service.descriptor.version
            })
            .ok_or_else(|| InvokeError::Unresolved(service.service_id.clone()))?;
        let envelope = InvokeEnvelope {
            operation: operation.to_string(),
            params: params.clone(),
            product: input.clone(),
        };
        match handle_invoke(host, &envelope) {
            Ok(out) => Ok(InvokeSuccess {
                output: out.product,
                stages: crate::services::Stage::ALL
                    .iter()
                    .map(|s| s.token().to_string())
                    .collect(),
            }),
            Err(fault) => Err(InvokeError::Fault {
                code: fault.code.token().to_string(),
                message: fault.message,
            }),
        }
    }
}

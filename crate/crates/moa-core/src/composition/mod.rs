//! The method-process language and its engine.
//!
//! A process aggregates service invocations in sequence and in parallel;
//! those are the only two composition forms. Sequencing pipes each output
//! into the next input. Parallel blocks give every branch the same input
//! and merge the branch outputs afterwards — but only assembly without
//! overlapping is admitted: branches whose change sets touch a common model
//! element are rejected loudly instead of being merged by precedence.

mod diff;
mod execute;
mod merge;
mod validate;

pub use diff::{change_set, Change, ChangeSet, ElementId};
pub use execute::{
    execute, ExecuteError, ExecutionTrace, HostInvoker, InvokeError, InvokeSuccess,
    ServiceInvoker, TraceEntry,
};
pub use merge::{merge_parallel, MergeConflict};
pub use validate::{
    validate_process, LocalDirectory, ProcessReport, ProcessRule, ProcessViolation,
    ResolvedService, ServiceDirectory,
};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::xml::{parse_document, to_document_string, XmlElement};

/// Namespace URI accepted for an optional `xmlns:moa` on process roots.
pub const PROCESS_NAMESPACE: &str = "urn:moa:process:1";

/// File extension for process documents (`NAME.mproc.xml`).
pub const PROCESS_FILE_EXTENSION: &str = "mproc.xml";

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("process has no steps")]
    EmptyProcess,
}

/// Reference to a published service, either by name+version or by id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ServiceRef {
    NameVersion { name: String, version: String },
    Id(String),
}

impl fmt::Display for ServiceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceRef::NameVersion { name, version } => write!(f, "{name}@{version}"),
            ServiceRef::Id(id) => write!(f, "id:{id}"),
        }
    }
}

/// One service invocation inside a process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvokeStep {
    pub service: ServiceRef,
    pub operation: String,
    pub params: BTreeMap<String, String>,
}

/// A process block: sequence, parallel branches, or a single invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Seq(Vec<Block>),
    Par(Vec<Block>),
    Invoke(InvokeStep),
}

impl Block {
    /// Number of invoke leaves under this block.
    pub fn invoke_count(&self) -> usize {
        match self {
            Block::Invoke(_) => 1,
            Block::Seq(children) | Block::Par(children) => {
                children.iter().map(Block::invoke_count).sum()
            }
        }
    }
}

/// A named composition of method services.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodProcess {
    pub name: String,
    pub root: Block,
}

/// Renders a block path (`/`, `/0`, `/0/1`, ...).
pub(crate) fn path_string(indices: &[usize]) -> String {
    if indices.is_empty() {
        "/".to_string()
    } else {
        indices
            .iter()
            .map(|i| format!("/{i}"))
            .collect::<String>()
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses a `.mproc.xml` document.
pub fn parse_process(text: &str) -> Result<MethodProcess, ProcessError> {
    let root = parse_document(text).map_err(|e| ProcessError::MalformedXml(e.message))?;
    if root.name != "moa:Process" {
        return Err(ProcessError::SchemaViolation(format!(
            "expected root element moa:Process, found <{}>",
            root.name
        )));
    }
    if let Some(ns) = root.get_attr("xmlns:moa") {
        if ns != PROCESS_NAMESPACE {
            return Err(ProcessError::SchemaViolation(format!(
                "unexpected namespace '{ns}'"
            )));
        }
    }
    let name = root
        .get_attr("name")
        .ok_or_else(|| ProcessError::SchemaViolation("moa:Process is missing 'name'".into()))?
        .to_string();
    let blocks: Vec<&XmlElement> = root.children.iter().collect();
    match blocks.as_slice() {
        [] => Err(ProcessError::EmptyProcess),
        [single] => Ok(MethodProcess {
            name,
            root: parse_block(single)?,
        }),
        _ => Err(ProcessError::SchemaViolation(
            "moa:Process takes exactly one block; wrap several steps in moa:Seq".into(),
        )),
    }
}

fn parse_block(el: &XmlElement) -> Result<Block, ProcessError> {
    match el.name.as_str() {
        "moa:Seq" => {
            let children = el
                .children
                .iter()
                .map(parse_block)
                .collect::<Result<Vec<_>, _>>()?;
            if children.is_empty() {
                return Err(ProcessError::SchemaViolation("moa:Seq has no steps".into()));
            }
            Ok(Block::Seq(children))
        }
        "moa:Par" => {
            let branches = el
                .children
                .iter()
                .map(|branch| {
                    if branch.name != "moa:Branch" {
                        return Err(ProcessError::SchemaViolation(format!(
                            "moa:Par takes moa:Branch children, found <{}>",
                            branch.name
                        )));
                    }
                    match branch.children.as_slice() {
                        [block] => parse_block(block),
                        _ => Err(ProcessError::SchemaViolation(
                            "moa:Branch wraps exactly one block".into(),
                        )),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            if branches.len() < 2 {
                return Err(ProcessError::SchemaViolation(
                    "moa:Par needs at least two branches".into(),
                ));
            }
            Ok(Block::Par(branches))
        }
        "moa:Invoke" => parse_invoke_step(el).map(Block::Invoke),
        other => Err(ProcessError::SchemaViolation(format!(
            "unexpected element <{other}> in a process block"
        ))),
    }
}

fn parse_invoke_step(el: &XmlElement) -> Result<InvokeStep, ProcessError> {
    let service = match (el.get_attr("service"), el.get_attr("id")) {
        (Some(reference), None) => {
            let (name, version) = reference.split_once('@').ok_or_else(|| {
                ProcessError::SchemaViolation(format!(
                    "service reference '{reference}' is not NAME@VERSION"
                ))
            })?;
            if name.is_empty() || version.is_empty() {
                return Err(ProcessError::SchemaViolation(format!(
                    "service reference '{reference}' is not NAME@VERSION"
                )));
            }
            ServiceRef::NameVersion {
                name: name.to_string(),
                version: version.to_string(),
            }
        }
        (None, Some(id)) => ServiceRef::Id(id.to_string()),
        (Some(_), Some(_)) => {
            return Err(ProcessError::SchemaViolation(
                "moa:Invoke takes either 'service' or 'id', not both".into(),
            ))
        }
        (None, None) => {
            return Err(ProcessError::SchemaViolation(
                "moa:Invoke needs a 'service' or 'id' attribute".into(),
            ))
        }
    };
    let operation = el
        .get_attr("operation")
        .ok_or_else(|| ProcessError::SchemaViolation("moa:Invoke is missing 'operation'".into()))?
        .to_string();
    let mut params = BTreeMap::new();
    for p in el.children_named("moa:Param") {
        let name = p.get_attr("name").ok_or_else(|| {
            ProcessError::SchemaViolation("moa:Param is missing 'name'".into())
        })?;
        let value = p.get_attr("value").ok_or_else(|| {
            ProcessError::SchemaViolation(format!("moa:Param '{name}' is missing 'value'"))
        })?;
        if params.insert(name.to_string(), value.to_string()).is_some() {
            return Err(ProcessError::SchemaViolation(format!(
                "parameter '{name}' bound twice"
            )));
        }
    }
    for child in &el.children {
        if child.name != "moa:Param" {
            return Err(ProcessError::SchemaViolation(format!(
                "unexpected element <{}> under moa:Invoke",
                child.name
            )));
        }
    }
    Ok(InvokeStep {
        service,
        operation,
        params,
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical serialization; `parse_process` of the output reproduces the
/// process, and canonical files round-trip byte-identically.
pub fn serialize_process(process: &MethodProcess) -> String {
    let root = XmlElement::new("moa:Process")
        .attr("name", &process.name)
        .child(block_element(&process.root));
    to_document_string(&root)
}

fn block_element(block: &Block) -> XmlElement {
    match block {
        Block::Seq(children) => {
            XmlElement::new("moa:Seq").children(children.iter().map(block_element))
        }
        Block::Par(branches) => XmlElement::new("moa:Par").children(
            branches
                .iter()
                .map(|b| XmlElement::new("moa:Branch").child(block_element(b))),
        ),
        Block::Invoke(step) => {
            let mut el = XmlElement::new("moa:Invoke");
            el = match &step.service {
                ServiceRef::NameVersion { name, version } => {
                    el.attr("service", format!("{name}@{version}"))
                }
                ServiceRef::Id(id) => el.attr("id", id),
            };
            el.attr("operation", &step.operation).children(
                step.params.iter().map(|(name, value)| {
                    XmlElement::new("moa:Param")
                        .attr("name", name)
                        .attr("value", value)
                }),
            )
        }
    }
}

//! Static validation of a process against a view of the registry.

use std::collections::BTreeMap;
use std::fmt;

use crate::descriptor::{MethodServiceDescriptor, ProductSignature};
use crate::retrieval::shape_satisfies;

use super::{path_string, Block, MethodProcess, ServiceRef};

/// What a service reference resolves to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedService {
    pub service_id: String,
    pub descriptor: MethodServiceDescriptor,
}

/// A view of published services, enough to resolve process references.
pub trait ServiceDirectory {
    fn resolve(&self, service: &ServiceRef) -> Option<ResolvedService>;
}

/// In-memory directory for local execution and tests.
#[derive(Debug, Clone, Default)]
pub struct LocalDirectory {
    services: Vec<ResolvedService>,
}

impl LocalDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, descriptor: MethodServiceDescriptor) -> String {
        let service_id = format!("local-{}", self.services.len() + 1);
        self.services.push(ResolvedService {
            service_id: service_id.clone(),
            descriptor,
        });
        service_id
    }
}

impl ServiceDirectory for LocalDirectory {
    fn resolve(&self, service: &ServiceRef) -> Option<ResolvedService> {
        self.services
            .iter()
            .find(|s| match service {
                ServiceRef::NameVersion { name, version } => {
                    s.descriptor.service_name == *name && s.descriptor.version == *version
                }
                ServiceRef::Id(id) => s.service_id == *id,
            })
            .cloned()
    }
}

impl ServiceDirectory for crate::registry::RegistryStore {
    fn resolve(&self, service: &ServiceRef) -> Option<ResolvedService> {
        let record = match service {
            ServiceRef::NameVersion { name, version } => self.find_by_reference(name, version)?,
            ServiceRef::Id(id) => self.lookup(id).ok()?,
        };
        Some(ResolvedService {
            service_id: record.service_id,
            descriptor: record.descriptor,
        })
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessRule {
    UnresolvedService,
    UnknownOperation,
    UndeclaredParameter,
    ShapeIncompatibility,
    MetamodelMismatch,
}

impl fmt::Display for ProcessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProcessRule::UnresolvedService => "UnresolvedService",
            ProcessRule::UnknownOperation => "UnknownOperation",
            ProcessRule::UndeclaredParameter => "UndeclaredParameter",
            ProcessRule::ShapeIncompatibility => "ShapeIncompatibility",
            ProcessRule::MetamodelMismatch => "MetamodelMismatch",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessViolation {
    pub rule: ProcessRule,
    pub path: String,
    pub detail: String,
}

impl fmt::Display for ProcessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.path, self.detail)
    }
}

/// Validation outcome: violations block execution, notes do not (parallel
/// blocks are noted for their runtime overlap check).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessReport {
    pub violations: Vec<ProcessViolation>,
    pub notes: Vec<String>,
}

impl ProcessReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: ProcessRule, path: &str, detail: impl Into<String>) {
        self.violations.push(ProcessViolation {
            rule,
            path: path.to_string(),
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ProcessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Statically checks a process: every reference resolves, every operation
/// exists (with only declared parameters bound), and along each sequence
/// the produced shape satisfies the next consumer's required shape.
/// Parallel blocks pass the static check and are noted for the runtime
/// overlap check; their output shape is unknown statically, so chaining
/// after them is not shape-checked.
pub fn validate_process(process: &MethodProcess, directory: &dyn ServiceDirectory) -> ProcessReport {
    let mut report = ProcessReport::default();
    let mut resolved: BTreeMap<String, ResolvedService> = BTreeMap::new();
    resolve_block(&process.root, &mut Vec::new(), directory, &mut resolved, &mut report);
    chase_block(&process.root, &mut Vec::new(), &resolved, &mut report);
    report
}

fn resolve_block(
    block: &Block,
    path: &mut Vec<usize>,
    directory: &dyn ServiceDirectory,
    resolved: &mut BTreeMap<String, ResolvedService>,
    report: &mut ProcessReport,
) {
    match block {
        Block::Invoke(step) => {
            let here = path_string(path);
            match directory.resolve(&step.service) {
                None => {
                    report.push(
                        ProcessRule::UnresolvedService,
                        &here,
                        format!("service '{}' is not published", step.service),
                    );
                }
                Some(service) => {
                    match service.descriptor.operational.operation(&step.operation) {
                        None => report.push(
                            ProcessRule::UnknownOperation,
                            &here,
                            format!(
                                "service '{}' has no operation '{}'",
                                step.service, step.operation
                            ),
                        ),
                        Some(op) => {
                            for param in step.params.keys() {
                                if !op.input_params.contains(param) {
                                    report.push(
                                        ProcessRule::UndeclaredParameter,
                                        &here,
                                        format!(
                                            "operation '{}' does not declare parameter '{param}'",
                                            step.operation
                                        ),
                                    );
                                }
                            }
                        }
                    }
                    resolved.insert(here, service);
                }
            }
        }
        Block::Seq(children) => {
            for (i, child) in children.iter().enumerate() {
                path.push(i);
                resolve_block(child, path, directory, resolved, report);
                path.pop();
            }
        }
        Block::Par(branches) => {
            report.notes.push(format!(
                "parallel block at {}: branch overlap is checked at runtime",
                path_string(path)
            ));
            for (i, branch) in branches.iter().enumerate() {
                path.push(i);
                resolve_block(branch, path, directory, resolved, report);
                path.pop();
            }
        }
    }
}

/// Signature of what flows out of a block, when statically known.
fn exit_signature<'a>(
    block: &Block,
    path: &mut Vec<usize>,
    resolved: &'a BTreeMap<String, ResolvedService>,
) -> Option<(&'a ProductSignature, String)> {
    match block {
        Block::Invoke(_) => {
            let here = path_string(path);
            resolved
                .get(&here)
                .map(|s| (&s.descriptor.semantic.product_out, here))
        }
        Block::Seq(children) => {
            let last = children.len() - 1;
            path.push(last);
            let sig = exit_signature(&children[last], path, resolved);
            path.pop();
            sig
        }
        Block::Par(_) => None,
    }
}

/// Signatures every entry point of a block requires of its input.
fn entry_signatures<'a>(
    block: &Block,
    path: &mut Vec<usize>,
    resolved: &'a BTreeMap<String, ResolvedService>,
    out: &mut Vec<(&'a ProductSignature, String)>,
) {
    match block {
        Block::Invoke(_) => {
            let here = path_string(path);
            if let Some(s) = resolved.get(&here) {
                out.push((&s.descriptor.semantic.product_in, here));
            }
        }
        Block::Seq(children) => {
            path.push(0);
            entry_signatures(&children[0], path, resolved, out);
            path.pop();
        }
        Block::Par(branches) => {
            for (i, branch) in branches.iter().enumerate() {
                path.push(i);
                entry_signatures(branch, path, resolved, out);
                path.pop();
            }
        }
    }
}

fn chase_block(
    block: &Block,
    path: &mut Vec<usize>,
    resolved: &BTreeMap<String, ResolvedService>,
    report: &mut ProcessReport,
) {
    match block {
        Block::Invoke(_) => {}
        Block::Seq(children) => {
            for (i, child) in children.iter().enumerate() {
                path.push(i);
                chase_block(child, path, resolved, report);
                path.pop();
            }
            for i in 1..children.len() {
                path.push(i - 1);
                let produced = exit_signature(&children[i - 1], path, resolved);
                path.pop();
                let Some((out_sig, from)) = produced else {
                    continue;
                };
                let mut consumers = Vec::new();
                path.push(i);
                entry_signatures(&children[i], path, resolved, &mut consumers);
                path.pop();
                for (in_sig, at) in consumers {
                    match shape_satisfies(out_sig, in_sig) {
                        Err(_) => report.push(
                            ProcessRule::MetamodelMismatch,
                            &at,
                            format!(
                                "step {from} produces metamodel '{}', consumer expects '{}'",
                                out_sig.metamodel_name, in_sig.metamodel_name
                            ),
                        ),
                        Ok(false) => report.push(
                            ProcessRule::ShapeIncompatibility,
                            &at,
                            format!(
                                "output shape of step {from} does not guarantee the required input shape"
                            ),
                        ),
                        Ok(true) => {}
                    }
                }
            }
        }
        Block::Par(branches) => {
            for (i, branch) in branches.iter().enumerate() {
                path.push(i);
                chase_block(branch, path, resolved, report);
                path.pop();
            }
        }
    }
}

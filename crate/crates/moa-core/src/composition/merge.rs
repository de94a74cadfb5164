//! Merging of parallel branch outputs: assembly without overlapping.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{validate_model, ModelDocument};

use super::diff::{change_set, ElementId};

/// Two or more branches changed a common model element; the merge refuses
/// to pick a winner.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("merge conflict on {}", identifiers.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", "))]
pub struct MergeConflict {
    pub identifiers: BTreeSet<ElementId>,
}

/// Merges the outputs of parallel branches that all started from `input`.
///
/// Each branch output is reduced to its change set against the input; if
/// any two change sets touch a common element identifier the merge fails
/// with exactly those identifiers. Otherwise all change sets are applied to
/// the input. The result does not depend on branch order: kept elements
/// stay in input order and added elements are inserted in name order.
pub fn merge_parallel(
    input: &ModelDocument,
    branch_outputs: &[ModelDocument],
) -> Result<ModelDocument, MergeConflict> {
    assert!(
        branch_outputs.len() >= 2,
        "parallel blocks have at least two branches"
    );
    let change_sets: Vec<_> = branch_outputs
        .iter()
        .map(|out| change_set(input, out))
        .collect();

    let mut contested: BTreeSet<ElementId> = BTreeSet::new();
    for (i, a) in change_sets.iter().enumerate() {
        for b in change_sets.iter().skip(i + 1) {
            contested.extend(a.touched().intersection(b.touched()).cloned());
        }
    }
    if !contested.is_empty() {
        return Err(MergeConflict {
            identifiers: contested,
        });
    }

    let mut merged = input.clone();
    for cs in &change_sets {
        cs.apply_to(&mut merged);
    }

    // Disjoint identifier sets can still interact through references (one
    // branch removes a class another branch's new association points at).
    // That is overlap in effect, reported with the identifiers involved.
    let report = validate_model(&merged);
    if !report.is_empty() {
        let identifiers = change_sets
            .iter()
            .flat_map(|cs| cs.touched().iter().cloned())
            .collect();
        return Err(MergeConflict { identifiers });
    }
    Ok(merged)
}

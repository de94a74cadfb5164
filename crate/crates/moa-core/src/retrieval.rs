//! Scoring and ranking of candidate services against a query.
//!
//! Retrieval is a weighted lexical similarity over normalized intentions,
//! with a flat synonym table standing in for ontology-based matching. The
//! weights are verb 0.5, target 0.3, qualifiers 0.1, keywords 0.1; when a
//! component is not populated by the query (no keywords, or no intention at
//! all) the weights renormalize over the populated ones, so a perfect match
//! on everything the query asked for scores exactly 1.0.
//!
//! Product-shape constraints gate the score multiplicatively: a candidate
//! whose input contract is not satisfied scores 0 no matter how well its
//! intention matches.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::descriptor::{
    normalize_intention, normalize_token, Intention, MethodServiceDescriptor, ProductSignature,
    ShapeConstraint,
};

const VERB_WEIGHT: f64 = 0.5;
const TARGET_WEIGHT: f64 = 0.3;
const QUALIFIER_WEIGHT: f64 = 0.1;
const KEYWORD_WEIGHT: f64 = 0.1;

/// Score a verb or target contributes when the two tokens share a synonym
/// set without being equal.
const SYNONYM_SCORE: f64 = 0.8;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("metamodel mismatch: '{0}' vs '{1}'")]
    MetamodelMismatch(String, String),
    #[error("query intention is not usable: {0}")]
    InvalidIntention(String),
}

// ---------------------------------------------------------------------------
// Synonym table
// ---------------------------------------------------------------------------

/// Flat synonym sets, one per line of `synonyms.txt` (space-separated
/// tokens; blank lines and `#` comments ignored).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    sets: Vec<BTreeSet<String>>,
}

impl SynonymTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The seeded table: objectification, reification and nesting name the
    /// same transformation.
    pub fn builtin() -> Self {
        Self::parse("objectify reify nest")
    }

    pub fn parse(text: &str) -> Self {
        let sets = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|line| {
                line.split_whitespace()
                    .map(normalize_token)
                    .filter(|t| !t.is_empty())
                    .collect::<BTreeSet<String>>()
            })
            .filter(|set| set.len() >= 2)
            .collect();
        Self { sets }
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// True when some synonym set contains both tokens.
    pub fn same_set(&self, a: &str, b: &str) -> bool {
        self.sets.iter().any(|s| s.contains(a) && s.contains(b))
    }
}

// ---------------------------------------------------------------------------
// Query and score types
// ---------------------------------------------------------------------------

/// A retrieval query. At least one criterion must be populated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuerySpec {
    pub intention_text: Option<String>,
    pub paradigm_keywords: Vec<String>,
    pub process_keywords: Vec<String>,
    pub product_shape: Option<ProductSignature>,
    /// attribute name -> required value; hard filters, applied before scoring.
    pub classification_filters: Vec<(String, String)>,
}

impl QuerySpec {
    pub fn is_empty(&self) -> bool {
        self.intention_text.is_none()
            && self.paradigm_keywords.is_empty()
            && self.process_keywords.is_empty()
            && self.product_shape.is_none()
            && self.classification_filters.is_empty()
    }
}

/// Per-intention component scores, each in [0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentionComponents {
    pub verb_score: f64,
    pub target_score: f64,
    pub qualifier_score: f64,
}

/// A similarity score with its component breakdown. `value` is the weighted
/// sum of the populated components, renormalized so the weights of the
/// populated components sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub intention: Option<IntentionComponents>,
    pub keyword_score: Option<f64>,
    pub value: f64,
}

impl SimilarityScore {
    fn combine(intention: Option<IntentionComponents>, keyword_score: Option<f64>) -> Self {
        let mut numerator = 0.0;
        let mut weight = 0.0;
        if let Some(ic) = intention {
            numerator += VERB_WEIGHT * ic.verb_score
                + TARGET_WEIGHT * ic.target_score
                + QUALIFIER_WEIGHT * ic.qualifier_score;
            weight += VERB_WEIGHT + TARGET_WEIGHT + QUALIFIER_WEIGHT;
        }
        if let Some(k) = keyword_score {
            numerator += KEYWORD_WEIGHT * k;
            weight += KEYWORD_WEIGHT;
        }
        let value = if weight > 0.0 { numerator / weight } else { 0.0 };
        Self {
            intention,
            keyword_score,
            value,
        }
    }

    fn gated(self, open: bool) -> Self {
        if open {
            self
        } else {
            Self { value: 0.0, ..self }
        }
    }
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Similarity of two intentions, symmetric in its arguments.
///
/// Verb and target score 1 when equal, [`SYNONYM_SCORE`] when a synonym set
/// contains both, 0 otherwise. Qualifiers score their Jaccard similarity,
/// with two empty sets counting as 1.
pub fn intention_similarity(
    a: &Intention,
    b: &Intention,
    synonyms: &SynonymTable,
) -> SimilarityScore {
    let components = IntentionComponents {
        verb_score: token_similarity(&a.verb, &b.verb, synonyms),
        target_score: token_similarity(&a.target, &b.target, synonyms),
        qualifier_score: jaccard(&a.qualifiers, &b.qualifiers),
    };
    SimilarityScore::combine(Some(components), None)
}

fn token_similarity(a: &str, b: &str, synonyms: &SynonymTable) -> f64 {
    if a == b {
        1.0
    } else if synonyms.same_set(a, b) {
        SYNONYM_SCORE
    } else {
        0.0
    }
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(&b).count() as f64;
    let union = a.union(&b).count() as f64;
    intersection / union
}

/// True when every constraint required is implied by the constraints the
/// document shape declares (a required lower bound k is implied by a
/// declared lower bound >= k; a bound of 0 is implied by anything). The
/// empty requirement (NONE) is satisfied by every shape.
pub fn shape_satisfies(
    doc_shape: &ProductSignature,
    required: &ProductSignature,
) -> Result<bool, RetrievalError> {
    if doc_shape.metamodel_name != required.metamodel_name {
        return Err(RetrievalError::MetamodelMismatch(
            doc_shape.metamodel_name.clone(),
            required.metamodel_name.clone(),
        ));
    }
    Ok(required.constraints.iter().all(|req| {
        let declared = declared_min(doc_shape, req);
        declared >= req.min()
    }))
}

fn declared_min(shape: &ProductSignature, like: &ShapeConstraint) -> usize {
    shape
        .constraints
        .iter()
        .filter(|c| c.kind_token() == like.kind_token())
        .map(|c| c.min())
        .max()
        .unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

/// One candidate for ranking: its descriptor plus the publication metadata
/// that breaks score ties.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub service_id: &'a str,
    pub published_at: u64,
    pub descriptor: &'a MethodServiceDescriptor,
}

/// A scored candidate, as returned by [`rank`].
#[derive(Debug, Clone, Copy)]
pub struct RankedCandidate<'a> {
    pub candidate: Candidate<'a>,
    pub score: SimilarityScore,
}

/// Scores every candidate against the query and sorts descending.
///
/// Candidates are expected to be pre-filtered by classification hard
/// filters. Ties are broken by `published_at` ascending, then `service_id`
/// lexicographic, so the ordering is total and independent of input order.
/// A query product shape that a candidate's input contract does not accept
/// (including a different metamodel) gates that candidate's score to 0.
pub fn rank<'a>(
    query: &QuerySpec,
    candidates: impl IntoIterator<Item = Candidate<'a>>,
    synonyms: &SynonymTable,
) -> Result<Vec<RankedCandidate<'a>>, RetrievalError> {
    let query_intention = match &query.intention_text {
        Some(text) => Some(
            normalize_intention(text)
                .map_err(|e| RetrievalError::InvalidIntention(e.to_string()))?,
        ),
        None => None,
    };

    let mut ranked: Vec<RankedCandidate<'a>> = candidates
        .into_iter()
        .map(|candidate| {
            let intention = query_intention.as_ref().map(|qi| {
                intention_similarity(qi, &candidate.descriptor.semantic.intention, synonyms)
                    .intention
                    .expect("intention similarity populates intention components")
            });
            let keyword = keyword_score(query, candidate.descriptor);
            let gate = match &query.product_shape {
                Some(shape) => shape_satisfies(shape, &candidate.descriptor.semantic.product_in)
                    .unwrap_or(false),
                None => true,
            };
            RankedCandidate {
                candidate,
                score: SimilarityScore::combine(intention, keyword).gated(gate),
            }
        })
        .collect();

    ranked.sort_by(|a, b| {
        b.score
            .value
            .total_cmp(&a.score.value)
            .then_with(|| a.candidate.published_at.cmp(&b.candidate.published_at))
            .then_with(|| a.candidate.service_id.cmp(b.candidate.service_id))
    });
    Ok(ranked)
}

/// Fraction of query keywords found in the candidate's scoped free text.
/// None when the query carries no keywords.
fn keyword_score(query: &QuerySpec, descriptor: &MethodServiceDescriptor) -> Option<f64> {
    let total = query.paradigm_keywords.len() + query.process_keywords.len();
    if total == 0 {
        return None;
    }
    let paradigm_tokens = text_tokens(&descriptor.semantic.paradigm);
    let process_tokens: BTreeSet<String> = descriptor
        .semantic
        .process_description
        .iter()
        .flat_map(|s| text_tokens(s))
        .collect();
    let hits = query
        .paradigm_keywords
        .iter()
        .filter(|k| paradigm_tokens.contains(&normalize_token(k)))
        .count()
        + query
            .process_keywords
            .iter()
            .filter(|k| process_tokens.contains(&normalize_token(k)))
            .count();
    Some(hits as f64 / total as f64)
}

fn text_tokens(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{
        ClassificationMetadata, OperationDef, OperationalDescriptor, SemanticDescriptor,
    };

    fn intention(text: &str) -> Intention {
        normalize_intention(text).unwrap()
    }

    fn descriptor(
        name: &str,
        intention_text: &str,
        product_in: ProductSignature,
    ) -> MethodServiceDescriptor {
        MethodServiceDescriptor {
            service_name: name.to_string(),
            version: "1.0".into(),
            semantic: SemanticDescriptor {
                intention: intention(intention_text),
                paradigm: "object-oriented schema refinement".into(),
                process_description: vec!["transform the input model".into()],
                product_in,
                product_out: ProductSignature::none("classdiagram"),
            },
            operational: OperationalDescriptor {
                endpoint: "http://127.0.0.1:1/invoke".into(),
                operations: vec![OperationDef {
                    name: "op".into(),
                    input_params: vec![],
                    output_params: vec![],
                }],
            },
            classification: ClassificationMetadata::default_service_classification(),
        }
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let syn = SynonymTable::builtin();
        for text in ["Objectify a relationship", "Rename the class safely now"] {
            let i = intention(text);
            let s = intention_similarity(&i, &i, &syn);
            assert_eq!(s.value, 1.0);
        }
    }

    #[test]
    fn synonym_verbs_score_exactly_by_the_formula() {
        let syn = SynonymTable::builtin();
        let a = intention("objectify relationship");
        let b = intention("reify relationship");
        let s = intention_similarity(&a, &b, &syn);
        let ic = s.intention.unwrap();
        assert_eq!(ic.verb_score, 0.8);
        assert_eq!(ic.target_score, 1.0);
        assert_eq!(ic.qualifier_score, 1.0);
        let expected = (0.5 * 0.8 + 0.3 * 1.0 + 0.1 * 1.0) / 0.9;
        assert!((s.value - expected).abs() < 1e-12);
    }

    #[test]
    fn disjoint_intentions_score_only_the_empty_qualifier_component() {
        let syn = SynonymTable::builtin();
        let a = intention("objectify relationship");
        let b = intention("rename class");
        let s = intention_similarity(&a, &b, &syn);
        let ic = s.intention.unwrap();
        assert_eq!(ic.verb_score, 0.0);
        assert_eq!(ic.target_score, 0.0);
        assert_eq!(ic.qualifier_score, 1.0);
        let expected = (0.1 * 1.0) / 0.9;
        assert!((s.value - expected).abs() < 1e-12);
    }

    #[test]
    fn similarity_is_symmetric() {
        let syn = SynonymTable::parse("objectify reify nest\nrename relabel");
        let intentions = [
            intention("objectify a relationship"),
            intention("reify relationship quickly"),
            intention("rename class safely"),
            intention("relabel class"),
        ];
        for a in &intentions {
            for b in &intentions {
                let ab = intention_similarity(a, b, &syn).value;
                let ba = intention_similarity(b, a, &syn).value;
                assert_eq!(ab, ba);
            }
        }
    }

    #[test]
    fn shape_satisfaction() {
        let none = ProductSignature::none("classdiagram");
        let needs_assoc = ProductSignature::none("classdiagram")
            .with_constraint(ShapeConstraint::HasAssociation { min: 1 });
        let two_classes = ProductSignature::none("classdiagram")
            .with_constraint(ShapeConstraint::HasClass { min: 2 })
            .with_constraint(ShapeConstraint::HasAssociation { min: 0 });

        assert!(shape_satisfies(&none, &none).unwrap());
        assert!(shape_satisfies(&two_classes, &none).unwrap());
        assert!(!shape_satisfies(&none, &needs_assoc).unwrap());
        assert!(!shape_satisfies(&two_classes, &needs_assoc).unwrap());
        assert!(shape_satisfies(
            &two_classes,
            &ProductSignature::none("classdiagram")
                .with_constraint(ShapeConstraint::HasClass { min: 2 })
        )
        .unwrap());
        assert!(matches!(
            shape_satisfies(&none, &ProductSignature::none("statechart")),
            Err(RetrievalError::MetamodelMismatch(_, _))
        ));
    }

    #[test]
    fn document_counts_satisfy_shapes() {
        use crate::model::parse_model;
        let doc = parse_model(
            "<moa:Model name=\"M\"><moa:Class name=\"Person\"/><moa:Class name=\"Company\"/></moa:Model>",
        )
        .unwrap();
        let doc_shape = ProductSignature::of_document(&doc);
        let needs_two = ProductSignature::none("classdiagram")
            .with_constraint(ShapeConstraint::HasClass { min: 2 });
        let needs_assoc = ProductSignature::none("classdiagram")
            .with_constraint(ShapeConstraint::HasAssociation { min: 1 });
        assert!(shape_satisfies(&doc_shape, &needs_two).unwrap());
        assert!(!shape_satisfies(&doc_shape, &needs_assoc).unwrap());
    }

    #[test]
    fn ranking_of_three_services_matches_hand_computed_scores() {
        let syn = SynonymTable::builtin();
        let objectify = descriptor(
            "Objectify",
            "Objectify a relationship",
            ProductSignature::none("classdiagram"),
        );
        let reify = descriptor(
            "Reify",
            "Reify a relationship",
            ProductSignature::none("classdiagram"),
        );
        let rename = descriptor(
            "RenameClass",
            "Rename a class",
            ProductSignature::none("classdiagram"),
        );
        let query = QuerySpec {
            intention_text: Some("objectify relationship".into()),
            ..QuerySpec::default()
        };
        let candidates = vec![
            Candidate {
                service_id: "s-3",
                published_at: 30,
                descriptor: &rename,
            },
            Candidate {
                service_id: "s-1",
                published_at: 10,
                descriptor: &objectify,
            },
            Candidate {
                service_id: "s-2",
                published_at: 20,
                descriptor: &reify,
            },
        ];
        let ranked = rank(&query, candidates, &syn).unwrap();
        let names: Vec<&str> = ranked
            .iter()
            .map(|r| r.candidate.descriptor.service_name.as_str())
            .collect();
        assert_eq!(names, ["Objectify", "Reify", "RenameClass"]);
        assert_eq!(ranked[0].score.value, 1.0);
        assert!((ranked[1].score.value - 0.8 / 0.9).abs() < 1e-12);
        assert!((ranked[2].score.value - 0.1 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn failing_shape_gates_score_to_zero() {
        let syn = SynonymTable::builtin();
        let objectify = descriptor(
            "Objectify",
            "Objectify a relationship",
            ProductSignature::none("classdiagram")
                .with_constraint(ShapeConstraint::HasAssociation { min: 1 }),
        );
        let query = QuerySpec {
            intention_text: Some("objectify relationship".into()),
            product_shape: Some(
                ProductSignature::none("classdiagram")
                    .with_constraint(ShapeConstraint::HasClass { min: 2 }),
            ),
            ..QuerySpec::default()
        };
        let ranked = rank(
            &query,
            vec![Candidate {
                service_id: "s-1",
                published_at: 1,
                descriptor: &objectify,
            }],
            &syn,
        )
        .unwrap();
        assert_eq!(ranked[0].score.value, 0.0);
        // components are still reported
        assert_eq!(ranked[0].score.intention.unwrap().verb_score, 1.0);
    }

    #[test]
    fn keyword_only_query_scores_by_keywords_alone() {
        let syn = SynonymTable::empty();
        let d = descriptor(
            "Objectify",
            "Objectify a relationship",
            ProductSignature::none("classdiagram"),
        );
        let query = QuerySpec {
            paradigm_keywords: vec!["schema".into(), "missing".into()],
            ..QuerySpec::default()
        };
        let ranked = rank(
            &query,
            vec![Candidate {
                service_id: "s-1",
                published_at: 1,
                descriptor: &d,
            }],
            &syn,
        )
        .unwrap();
        // one of two keywords hits; keyword is the only populated component
        assert!((ranked[0].score.value - 0.5).abs() < 1e-12);
        assert!(ranked[0].score.intention.is_none());
    }

    #[test]
    fn rank_order_is_independent_of_input_permutation() {
        let syn = SynonymTable::builtin();
        let descriptors: Vec<MethodServiceDescriptor> = (0..6)
            .map(|i| {
                descriptor(
                    &format!("Svc{i}"),
                    if i % 2 == 0 {
                        "objectify relationship"
                    } else {
                        "reify relationship"
                    },
                    ProductSignature::none("classdiagram"),
                )
            })
            .collect();
        let ids: Vec<String> = (0..6).map(|i| format!("s-{i}")).collect();
        let make = |order: &[usize]| {
            order
                .iter()
                .map(|&i| Candidate {
                    service_id: &ids[i],
                    published_at: 100, // identical timestamps force the id tie-break
                    descriptor: &descriptors[i],
                })
                .collect::<Vec<_>>()
        };
        let query = QuerySpec {
            intention_text: Some("objectify relationship".into()),
            ..QuerySpec::default()
        };
        let baseline: Vec<String> = rank(&query, make(&[0, 1, 2, 3, 4, 5]), &syn)
            .unwrap()
            .iter()
            .map(|r| r.candidate.service_id.to_string())
            .collect();
        for order in [[5, 4, 3, 2, 1, 0], [2, 0, 5, 1, 4, 3], [1, 3, 5, 0, 2, 4]] {
            let permuted: Vec<String> = rank(&query, make(&order), &syn)
                .unwrap()
                .iter()
                .map(|r| r.candidate.service_id.to_string())
                .collect();
            assert_eq!(permuted, baseline);
        }
    }
}

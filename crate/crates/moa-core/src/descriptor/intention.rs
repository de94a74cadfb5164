//! Intention statements and their normal form.
//!
//! Services are decomposed and retrieved by intention, so intentions get a
//! fixed normal form that similarity scoring can work on: a lowercase verb,
//! a lowercase target, and optional qualifier tokens, extracted positionally
//! after stop-word and punctuation removal.

use super::DescriptorError;

/// Stop-words removed before positional assignment of verb and target.
const STOP_WORDS: [&str; 7] = ["a", "an", "the", "of", "into", "from", "to"];

/// A normalized intention. `raw_text` keeps the original statement for
/// documentation; scoring uses only the normalized fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intention {
    pub verb: String,
    pub target: String,
    pub qualifiers: Vec<String>,
    pub raw_text: String,
}

impl Intention {
    /// The canonical reconstruction `"verb target qualifier..."`.
    /// Normalizing this string yields the same intention back.
    pub fn normalized_text(&self) -> String {
        let mut out = format!("{} {}", self.verb, self.target);
        for q in &self.qualifiers {
            out.push(' ');
            out.push_str(q);
        }
        out
    }
}

/// Normalizes a free-text intention statement.
///
/// Tokens are lowercased and stripped to `[a-z0-9_]`; stop-words and tokens
/// emptied by stripping are dropped. The first remaining token is the verb,
/// the second the target, the rest qualifiers.
pub fn normalize_intention(raw: &str) -> Result<Intention, DescriptorError> {
    if raw.trim().is_empty() {
        return Err(DescriptorError::EmptyIntention);
    }
    let tokens: Vec<String> = raw
        .split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty() && !STOP_WORDS.contains(&t.as_str()))
        .collect();
    if tokens.len() < 2 {
        return Err(DescriptorError::MissingTarget(raw.trim().to_string()));
    }
    let mut iter = tokens.into_iter();
    Ok(Intention {
        verb: iter.next().expect("checked length"),
        target: iter.next().expect("checked length"),
        qualifiers: iter.collect(),
        raw_text: raw.trim().to_string(),
    })
}

/// Lowercases a token and strips everything outside `[a-z0-9_]`. Also used
/// by keyword matching so that query keywords and descriptor text agree on
/// the token alphabet.
pub(crate) fn normalize_token(token: &str) -> String {
    token
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_')
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objectify_a_relationship() {
        let i = normalize_intention("Objectify a relationship").unwrap();
        assert_eq!(i.verb, "objectify");
        assert_eq!(i.target, "relationship");
        assert!(i.qualifiers.is_empty());
        assert_eq!(i.raw_text, "Objectify a relationship");
    }

    #[test]
    fn trailing_tokens_become_qualifiers() {
        let i = normalize_intention("Rename the class safely").unwrap();
        assert_eq!(i.verb, "rename");
        assert_eq!(i.target, "class");
        assert_eq!(i.qualifiers, vec!["safely"]);
    }

    #[test]
    fn single_content_token_is_missing_target() {
        assert!(matches!(
            normalize_intention("Refactor"),
            Err(DescriptorError::MissingTarget(_))
        ));
        // stop-words do not count as content
        assert!(matches!(
            normalize_intention("Refactor the"),
            Err(DescriptorError::MissingTarget(_))
        ));
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            normalize_intention("   "),
            Err(DescriptorError::EmptyIntention)
        ));
    }

    #[test]
    fn punctuation_is_stripped() {
        let i = normalize_intention("Objectify: a relationship!").unwrap();
        assert_eq!(i.verb, "objectify");
        assert_eq!(i.target, "relationship");
    }

    #[test]
    fn normalization_is_idempotent_on_its_reconstruction() {
        for raw in [
            "Objectify a relationship",
            "Rename the class safely and QUICKLY",
            "move attribute from class to class2",
        ] {
            let first = normalize_intention(raw).unwrap();
            let second = normalize_intention(&first.normalized_text()).unwrap();
            assert_eq!(second.verb, first.verb);
            assert_eq!(second.target, first.target);
            assert_eq!(second.qualifiers, first.qualifiers);
            assert_eq!(second.raw_text, first.normalized_text());
        }
    }
}

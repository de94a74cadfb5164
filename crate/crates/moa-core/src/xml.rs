//! Minimal XML layer shared by every wire and file format in the crate.
//!
//! All formats here are small, attribute-heavy dialects with a fixed `moa:`
//! prefix, no mixed content and no external entities, so documents are
//! modelled as a plain [`XmlElement`] tree. Parsing is done with `quick-xml`;
//! serialization is a canonical printer of our own: fixed attribute order
//! (the order the builder supplied), two-space indentation, LF line endings,
//! self-closing empty elements, and newlines inside text or attribute values
//! escaped as character references so that serialized documents never
//! contain a literal newline except between elements. That last rule is what
//! lets the registry journal store one document per line.
//!
//! The `moa:` prefix is part of the element name, not a bound namespace. An
//! `xmlns:moa` attribute is tolerated on any root element at parse time but
//! never emitted.

use std::borrow::Cow;
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

/// Error raised for input that is not well-formed XML or not element-tree
/// shaped (mixed content, DTDs, unknown entities).
#[derive(Debug, Error)]
#[error("malformed XML: {message}")]
pub struct XmlError {
    pub message: String,
}

impl XmlError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// One XML element: name (prefix included verbatim), attributes in document
/// order, and either child elements or text content, never both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlElement {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<XmlElement>,
    pub text: String,
}

impl XmlElement {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            attrs: Vec::new(),
            children: Vec::new(),
            text: String::new(),
        }
    }

    pub fn attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((key.into(), value.into()));
        self
    }

    pub fn child(mut self, child: XmlElement) -> Self {
        self.children.push(child);
        self
    }

    pub fn children(mut self, children: impl IntoIterator<Item = XmlElement>) -> Self {
        self.children.extend(children);
        self
    }

    pub fn text_content(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    /// Value of the named attribute, if present.
    pub fn get_attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// All child elements with the given name, in document order.
    pub fn children_named<'el: 'it, 'n: 'it, 'it>(
        &'el self,
        name: &'n str,
    ) -> impl Iterator<Item = &'el XmlElement> + 'it {
        self.children.iter().filter(move |c| c.name == name)
    }

    /// The single child with the given name, or None.
    pub fn first_child(&self, name: &str) -> Option<&XmlElement> {
        self.children.iter().find(|c| c.name == name)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses a complete XML document (optional declaration plus one root
/// element) into an element tree.
pub fn parse_document(input: &str) -> Result<XmlElement, XmlError> {
    let mut reader = Reader::from_str(input);
    let mut stack: Vec<XmlElement> = Vec::new();
    let mut root: Option<XmlElement> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| XmlError::new(format!("{e} at byte {}", reader.buffer_position())))?;
        match event {
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) => {}
            Event::DocType(_) => {
                return Err(XmlError::new("DOCTYPE declarations are not accepted"));
            }
            Event::Start(start) => {
                if root.is_some() && stack.is_empty() {
                    return Err(XmlError::new("content after the root element"));
                }
                stack.push(element_from_start(&start)?);
            }
            Event::Empty(start) => {
                if root.is_some() && stack.is_empty() {
                    return Err(XmlError::new("content after the root element"));
                }
                let el = element_from_start(&start)?;
                attach(&mut stack, &mut root, el)?;
            }
            Event::End(_) => {
                // quick-xml has already verified the name matches the opener.
                let mut el = stack.pop().ok_or_else(|| XmlError::new("unmatched end tag"))?;
                // Leading/trailing whitespace in text content is formatting,
                // not data; whitespace-only runs between child elements are
                // dropped entirely.
                let trimmed = el.text.trim();
                if trimmed.len() != el.text.len() {
                    el.text = trimmed.to_string();
                }
                if !el.text.is_empty() && !el.children.is_empty() {
                    return Err(XmlError::new(format!(
                        "element <{}> mixes text and child elements",
                        el.name
                    )));
                }
                attach(&mut stack, &mut root, el)?;
            }
            Event::Text(t) => {
                let decoded = t
                    .xml_content(quick_xml::XmlVersion::Implicit1_0)
                    .map_err(|e| XmlError::new(e.to_string()))?;
                push_text(&mut stack, &decoded)?;
            }
            Event::CData(c) => {
                let decoded = c.decode().map_err(|e| XmlError::new(e.to_string()))?;
                push_text(&mut stack, &decoded)?;
            }
            Event::GeneralRef(r) => {
                let resolved = resolve_reference(&r)?;
                push_text(&mut stack, &resolved)?;
            }
            Event::Eof => break,
        }
    }

    if !stack.is_empty() {
        return Err(XmlError::new("unexpected end of document inside an element"));
    }
    root.ok_or_else(|| XmlError::new("document has no root element"))
}

fn element_from_start(start: &BytesStart<'_>) -> Result<XmlElement, XmlError> {
    let name = String::from_utf8(start.name().as_ref().to_vec())
        .map_err(|_| XmlError::new("element name is not UTF-8"))?;
    let mut el = XmlElement::new(name);
    for attr in start.attributes() {
        let attr = attr.map_err(|e| XmlError::new(e.to_string()))?;
        let key = String::from_utf8(attr.key.as_ref().to_vec())
            .map_err(|_| XmlError::new("attribute name is not UTF-8"))?;
        let value = attr
            .normalized_value(quick_xml::XmlVersion::Implicit1_0)
            .map_err(|e| XmlError::new(e.to_string()))?
            .into_owned();
        if el.attrs.iter().any(|(k, _)| *k == key) {
            return Err(XmlError::new(format!(
                "duplicate attribute '{key}' on <{}>",
                el.name
            )));
        }
        el.attrs.push((key, value));
    }
    Ok(el)
}

fn attach(
    stack: &mut [XmlElement],
    root: &mut Option<XmlElement>,
    el: XmlElement,
) -> Result<(), XmlError> {
    match stack.last_mut() {
        Some(parent) => {
            parent.children.push(el);
            Ok(())
        }
        None => {
            if root.is_some() {
                return Err(XmlError::new("more than one root element"));
            }
            *root = Some(el);
            Ok(())
        }
    }
}

fn push_text(stack: &mut [XmlElement], text: &str) -> Result<(), XmlError> {
    match stack.last_mut() {
        Some(el) => {
            el.text.push_str(text);
            Ok(())
        }
        None => {
            if text.trim().is_empty() {
                Ok(())
            } else {
                Err(XmlError::new("text content outside the root element"))
            }
        }
    }
}

fn resolve_reference(r: &quick_xml::events::BytesRef<'_>) -> Result<String, XmlError> {
    if let Some(ch) = r
        .resolve_char_ref()
        .map_err(|e| XmlError::new(e.to_string()))?
    {
        return Ok(ch.to_string());
    }
    let name = r.decode().map_err(|e| XmlError::new(e.to_string()))?;
    let ch = match name.as_ref() {
        "lt" => '<',
        "gt" => '>',
        "amp" => '&',
        "apos" => '\'',
        "quot" => '"',
        other => return Err(XmlError::new(format!("unknown entity '&{other};'"))),
    };
    Ok(ch.to_string())
}

// ---------------------------------------------------------------------------
// Canonical printing
// ---------------------------------------------------------------------------

const XML_DECLARATION: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>";

/// Prints a full canonical document: declaration line, indented element
/// tree, LF endings, trailing newline.
pub fn to_document_string(root: &XmlElement) -> String {
    let mut out = String::new();
    out.push_str(XML_DECLARATION);
    out.push('\n');
    write_element(&mut out, root, 0, false);
    out.push('\n');
    out
}

/// Prints the element on a single line with no declaration; used for
/// journal entries and embedded payloads.
pub fn to_compact_string(root: &XmlElement) -> String {
    let mut out = String::new();
    write_element(&mut out, root, 0, true);
    out
}

fn write_element(out: &mut String, el: &XmlElement, depth: usize, compact: bool) {
    debug_assert!(
        el.text.is_empty() || el.children.is_empty(),
        "mixed content cannot be serialized"
    );
    let pad = if compact { 0 } else { depth * 2 };
    let _ = write!(out, "{:pad$}<{}", "", el.name);
    for (k, v) in &el.attrs {
        let _ = write!(out, " {}=\"{}\"", k, escape_attr(v));
    }
    if el.children.is_empty() && el.text.is_empty() {
        out.push_str("/>");
    } else if el.children.is_empty() {
        let _ = write!(out, ">{}</{}>", escape_text(&el.text), el.name);
    } else {
        out.push('>');
        for child in &el.children {
            if !compact {
                out.push('\n');
            }
            write_element(out, child, depth + 1, compact);
        }
        if !compact {
            out.push('\n');
            let _ = write!(out, "{:pad$}", "");
        }
        let _ = write!(out, "</{}>", el.name);
    }
}

fn escape_attr(value: &str) -> Cow<'_, str> {
    escape_with(value, |c, out| match c {
        '&' => out.push_str("&amp;"),
        '<' => out.push_str("&lt;"),
        '>' => out.push_str("&gt;"),
        '"' => out.push_str("&quot;"),
        '\n' => out.push_str("&#10;"),
        '\r' => out.push_str("&#13;"),
        '\t' => out.push_str("&#9;"),
        c => out.push(c),
    })
}

fn escape_text(value: &str) -> Cow<'_, str> {
    escape_with(value, |c, out| match c {
        '&' => out.push_str("&amp;"),
        '<' => out.push_str("&lt;"),
        '>' => out.push_str("&gt;"),
        '\n' => out.push_str("&#10;"),
        '\r' => out.push_str("&#13;"),
        c => out.push(c),
    })
}

fn escape_with(value: &str, emit: fn(char, &mut String)) -> Cow<'_, str> {
    if value
        .chars()
        .all(|c| !matches!(c, '&' | '<' | '>' | '"' | '\n' | '\r' | '\t'))
    {
        return Cow::Borrowed(value);
    }
    let mut out = String::with_capacity(value.len() + 8);
    for c in value.chars() {
        emit(c, &mut out);
    }
    Cow::Owned(out)
}

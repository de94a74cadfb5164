//! Core library for a method-oriented architecture: method services that
//! transform class-diagram models, described by two-part descriptors,
//! published to a registry, retrieved by intention similarity and composed
//! into sequence/parallel processes.
//!
//! The crate is organised around the product and the actors that handle it:
//!
//! - [`model`] — the class-diagram metamodel, the `.ximodel` interchange
//!   format and the parse / instantiate / generate / serialize pipeline.
//! - [`descriptor`] — semantic + operational descriptors of method services
//!   and the classification vocabulary they are tagged with.
//! - [`registry`] — journal-backed store that assigns service ids and
//!   answers queries.
//! - [`retrieval`] — intention similarity scoring and candidate ranking.
//! - [`composition`] — the method-process language (Seq/Par/Invoke), static
//!   validation, structural diff/merge and the executor.
//! - [`services`] — built-in transformations (objectify, rename_class,
//!   identity) and the invoke envelope protocol they are served through.
//! - [`scenario`] — loader for the fixture corpus used by tests and the
//!   tutorial flow.
//!
//! Everything in this crate is transport-agnostic; HTTP lives elsewhere.

pub mod composition;
pub mod descriptor;
pub mod model;
pub mod registry;
pub mod retrieval;
pub mod scenario;
pub mod services;
pub mod xml;

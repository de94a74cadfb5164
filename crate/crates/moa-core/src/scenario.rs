//! Loader for the fixture corpus under `fixtures/`: model documents,
//! the built-in service descriptors, process definitions, the comparison
//! framework table and the synonym table. Tests and the tutorial flow all
//! read the corpus through this module, and the hygiene checks require
//! every committed fixture to parse and to round-trip byte-identically.

use std::path::{Path, PathBuf};

use crate::composition::{parse_process, MethodProcess};
use crate::descriptor::{
    load_framework_fixture, parse_descriptor, FrameworkFixture, MethodServiceDescriptor,
};
use crate::model::{parse_model, ModelDocument};
use crate::retrieval::SynonymTable;

/// One fixture file with its raw bytes and parsed form.
#[derive(Debug, Clone)]
pub struct Fixture<T> {
    pub path: PathBuf,
    pub text: String,
    pub parsed: T,
}

/// The whole corpus.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub models: Vec<Fixture<ModelDocument>>,
    pub descriptors: Vec<Fixture<MethodServiceDescriptor>>,
    pub processes: Vec<Fixture<MethodProcess>>,
    pub framework: Fixture<FrameworkFixture>,
    pub synonyms: Fixture<SynonymTable>,
}

impl FixtureSet {
    /// Loads and parses everything under the fixture root. Any file that
    /// fails its parser fails the load.
    pub fn load(root: &Path) -> Result<Self, String> {
        let models = load_dir(&root.join("models"), "ximodel", |text| {
            parse_model(text).map_err(|e| e.to_string())
        })?;
        let descriptors = load_dir(&root.join("descriptors"), "xml", |text| {
            parse_descriptor(text).map_err(|e| e.to_string())
        })?;
        let processes = load_dir(&root.join("processes"), "xml", |text| {
            parse_process(text).map_err(|e| e.to_string())
        })?;
        let framework_path = root.join("framework").join("comparison_framework.xml");
        let framework_text = read(&framework_path)?;
        let framework = Fixture {
            parsed: load_framework_fixture(&framework_text)
                .map_err(|e| format!("{}: {e}", framework_path.display()))?,
            path: framework_path,
            text: framework_text,
        };
        let synonyms_path = root.join("synonyms.txt");
        let synonyms_text = read(&synonyms_path)?;
        let synonyms = Fixture {
            parsed: SynonymTable::parse(&synonyms_text),
            path: synonyms_path,
            text: synonyms_text,
        };
        Ok(Self {
            models,
            descriptors,
            processes,
            framework,
            synonyms,
        })
    }

    pub fn model(&self, stem: &str) -> Option<&Fixture<ModelDocument>> {
        self.models.iter().find(|f| {
            f.path
                .file_stem()
                .is_some_and(|n| n.to_string_lossy() == stem)
        })
    }

    pub fn descriptor(&self, service_name: &str) -> Option<&Fixture<MethodServiceDescriptor>> {
        self.descriptors
            .iter()
            .find(|f| f.parsed.service_name == service_name)
    }
}

fn load_dir<T>(
    dir: &Path,
    extension: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Vec<Fixture<T>>, String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == extension))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = read(&path)?;
            let parsed = parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(Fixture { path, text, parsed })
        })
        .collect()
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

//! Corpus data model: document records, the three-level subject taxonomy,
//! department aliases, label inventories and deterministic splits.

mod labels;
mod records;
mod split;
mod taxonomy;

use std::path::PathBuf;

use thiserror::Error;

pub use labels::LabelSet;
pub use records::{load_corpus_manifest, parse_dims, DocumentRecord, PageDims};
pub use split::{stratified_split, stratified_split_by, SplitParts};
pub use taxonomy::{
    load_taxonomy, map_department, normalize_alias, AliasTable, CategoryPath, Taxonomy,
    TaxonomyNode,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("taxonomy structure error at '{node}': {message}")]
    Structure { node: String, message: String },
    #[error("department is empty")]
    EmptyDepartment,
    #[error("unmapped department '{0}'")]
    UnmappedDepartment(String),
    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),
    #[error("label '{label}' has {count} instance(s); stratification needs at least 2")]
    Stratification { label: String, count: usize },
    #[error("train fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("invalid document record '{doc_id}': {message}")]
    InvalidRecord { doc_id: String, message: String },
}

impl CorpusError {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        CorpusError::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

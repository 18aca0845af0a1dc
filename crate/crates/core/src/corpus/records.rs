use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageDims {
    pub width: f64,
    pub height: f64,
}

/// One source document. Construction enforces `page_count >= 1`, one
/// dimension pair per page, and strictly positive dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    doc_id: String,
    page_count: u32,
    page_dims: Vec<PageDims>,
    metadata: BTreeMap<String, String>,
}

impl DocumentRecord {
    pub fn new(
        doc_id: impl Into<String>,
        page_count: u32,
        page_dims: Vec<PageDims>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, CorpusError> {
        let doc_id = doc_id.into();
        let invalid = |message: String| CorpusError::InvalidRecord {
            doc_id: doc_id.clone(),
            message,
        };
        if doc_id.trim().is_empty() {
            return Err(invalid("empty doc_id".into()));
        }
        if page_count == 0 {
            return Err(invalid("page_count must be at least 1".into()));
        }
        if page_dims.len() != page_count as usize {
            return Err(invalid(format!(
                "{} page dimension entries for {} pages",
                page_dims.len(),
                page_count
            )));
        }
        if let Some(i) = page_dims
            .iter()
            .position(|d| !(d.width > 0.0 && d.height > 0.0 && d.width.is_finite() && d.height.is_finite()))
        {
            return Err(invalid(format!("page {} has nonpositive dimensions", i + 1)));
        }
        Ok(DocumentRecord {
            doc_id,
            page_count,
            page_dims,
            metadata,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn page_count(&self) -> u32 {
        self.page_count
    }

    pub fn page_dims(&self) -> &[PageDims] {
        &self.page_dims
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn department(&self) -> Option<&str> {
        self.metadata.get("department").map(String::as_str)
    }
}

/// Parses a `.dims` file: one `width height` pair per line.
pub fn parse_dims(text: &str, source_name: &str) -> Result<Vec<PageDims>, CorpusError> {
    let mut dims = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [w, h] => w.parse::<f64>().ok().zip(h.parse::<f64>().ok()),
            _ => None,
        };
        let (width, height) = parsed.ok_or_else(|| {
            CorpusError::parse(source_name, i + 1, "expected `width height`")
        })?;
        dims.push(PageDims { width, height });
    }
    Ok(dims)
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    doc_id: String,
    department: String,
    page_count: u32,
}

/// Loads a `doc_id,department,page_count` CSV. Page dimensions are read from
/// `<doc_id>.dims` next to the manifest.
pub fn load_corpus_manifest(path: impl AsRef<Path>) -> Result<Vec<DocumentRecord>, CorpusError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::parse(&name, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "department", "page_count"] {
        return Err(CorpusError::parse(
            &name,
            1,
            "expected header `doc_id,department,page_count`",
        ));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
        let row = row.map_err(|e| CorpusError::parse(&name, i + 2, e.to_string()))?;
        let dims_path = dir.join(format!("{}.dims", row.doc_id));
        let text = std::fs::read_to_string(&dims_path).map_err(|e| CorpusError::io(&dims_path, e))?;
        let dims = parse_dims(&text, &dims_path.display().to_string())?;
        let mut metadata = BTreeMap::new();
        metadata.insert("department".to_string(), row.department);
        records.push(DocumentRecord::new(row.doc_id, row.page_count, dims, metadata)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(n: usize) -> Vec<PageDims> {
        vec![
            PageDims {
                width: 612.0,
                height: 792.0
            };
            n
        ]
    }

    #[test]
    fn record_invariants() {
        assert!(DocumentRecord::new("d", 2, dims(2), BTreeMap::new()).is_ok());
        assert!(DocumentRecord::new("d", 0, vec![], BTreeMap::new()).is_err());
        assert!(DocumentRecord::new("d", 3, dims(2), BTreeMap::new()).is_err());
        let mut bad = dims(2);
        bad[1].height = 0.0;
        assert!(DocumentRecord::new("d", 2, bad, BTreeMap::new()).is_err());
    }

    #[test]
    fn manifest_with_dims() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("corpus.csv"),
            "doc_id,department,page_count\netd1,Computer Science,2\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("etd1.dims"), "612 792\n1224 1584\n").unwrap();
        let recs = load_corpus_manifest(dir.path().join("corpus.csv")).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].department(), Some("Computer Science"));
        assert_eq!(recs[0].page_dims()[1].width, 1224.0);
    }

    #[test]
    fn dims_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("corpus.csv"),
            "doc_id,department,page_count\netd1,History,3\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("etd1.dims"), "612 792\n").unwrap();
        assert!(matches!(
            load_corpus_manifest(dir.path().join("corpus.csv")),
            Err(CorpusError::InvalidRecord { .. })
        ));
    }

    #[test]
    fn bad_dims_line() {
        let err = parse_dims("612 792\n612\n", "x.dims").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }
}

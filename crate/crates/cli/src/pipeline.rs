use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context as _, Result};
use etdchap::corpus::{
    load_corpus_manifest, load_taxonomy, map_department, AliasTable, DocumentRecord, LabelSet,
    Taxonomy,
};
use etdchap::layout::{
    assemble_pages, filter_blocks_with_stats, parse_layout_file, parse_ocr_dump, FilterPolicy,
    RegionLabel,
};
use etdchap::llm::{EmbeddingProvider, HttpEmbeddingProvider, LocalTrigramProvider};
use etdchap::segment::{load_manifests, SegmentManifest};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::failure::{fail, Failure, TagExt};

/// Loaded corpus, taxonomy and a worker pool bounded by `--jobs`.
pub struct Context {
    pub cfg: PipelineConfig,
    pub docs: Vec<DocumentRecord>,
    pub taxonomy: Taxonomy,
    pub aliases: AliasTable,
    pool: rayon::ThreadPool,
}

pub struct PageTexts {
    pub texts: Vec<String>,
    pub dropped_lines: BTreeMap<RegionLabel, usize>,
}

/// One row of `text/index.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub doc_id: String,
    pub segment: String,
    pub page_start: u32,
    pub page_end: u32,
    pub source: String,
    pub file: String,
}

impl SegmentRef {
    pub fn is_chapter(&self) -> bool {
        self.segment.starts_with("chapter")
    }

    pub fn key(&self) -> (String, String) {
        (self.doc_id.clone(), self.segment.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRow {
    pub doc_id: String,
    pub segment: String,
    pub label: String,
    pub part: String,
}

#[derive(Deserialize)]
struct TruthRow {
    doc_id: String,
    segment: String,
    label: String,
}

pub const INDEX_FILE: &str = "text/index.csv";
pub const MODEL_FILE: &str = "model/model.json";
pub const SPLIT_FILE: &str = "model/split.csv";

impl Context {
    pub fn load(cfg: PipelineConfig, jobs: usize) -> Result<Self> {
        let docs = load_corpus_manifest(&cfg.paths.corpus).context("loading corpus manifest")?;
        let mut seen = HashSet::new();
        for d in &docs {
            if !seen.insert(d.doc_id()) {
                bail!("corpus manifest lists '{}' twice", d.doc_id());
            }
        }
        let taxonomy = load_taxonomy(&cfg.paths.taxonomy).context("loading taxonomy")?;
        let aliases = match &cfg.paths.aliases {
            Some(p) => AliasTable::load(p, &taxonomy).context("loading aliases")?,
            None => AliasTable::from_taxonomy(&taxonomy),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .tag(Failure::Config, "cannot start worker pool")?;
        Ok(Context {
            cfg,
            docs,
            taxonomy,
            aliases,
            pool,
        })
    }

    /// Order-preserving parallel map on the bounded pool.
    pub fn par_map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    pub fn output(&self, rel: &str) -> PathBuf {
        self.cfg.paths.output_dir.join(rel)
    }

    pub fn doc(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.docs.iter().find(|d| d.doc_id() == doc_id)
    }

    fn required_dir<'a>(&self, key: &str, dir: &'a Option<PathBuf>) -> Result<&'a Path> {
        dir.as_deref()
            .ok_or_else(|| fail(Failure::Config, format!("{key} is not set")))
    }

    /// Reading-ordered text of every page, filtered when `policy` is given
    /// and a layout directory is configured.
    pub fn page_texts(&self, doc: &DocumentRecord, policy: Option<&FilterPolicy>) -> Result<PageTexts> {
        let ocr_dir = self.required_dir("paths.ocr_dir", &self.cfg.paths.ocr_dir)?;
        let ocr_path = ocr_dir.join(format!("{}.json", doc.doc_id()));
        let mut blocks = parse_ocr_dump(&ocr_path)
            .with_context(|| format!("document '{}': {}", doc.doc_id(), ocr_path.display()))?;
        let mut dropped_lines = BTreeMap::new();
        if let (Some(policy), Some(layout_dir)) = (policy, &self.cfg.paths.layout_dir) {
            let layout_path = layout_dir.join(format!("{}.txt", doc.doc_id()));
            let regions = parse_layout_file(&layout_path)
                .with_context(|| format!("document '{}': {}", doc.doc_id(), layout_path.display()))?;
            let outcome = filter_blocks_with_stats(&blocks, &regions, Some(doc.page_dims()), policy)
                .with_context(|| format!("document '{}'", doc.doc_id()))?;
            blocks = outcome.blocks;
            dropped_lines = outcome.dropped_lines;
        }
        let mut pages = assemble_pages(&blocks);
        if let Some((&p, _)) = pages.range(doc.page_count() + 1..).next() {
            bail!(
                "document '{}': OCR dump has page {p} but the corpus lists {} pages",
                doc.doc_id(),
                doc.page_count()
            );
        }
        let texts = (1..=doc.page_count())
            .map(|p| pages.remove(&p).unwrap_or_default())
            .collect();
        Ok(PageTexts { texts, dropped_lines })
    }

    pub fn manual_manifests(&self) -> Result<BTreeMap<String, SegmentManifest>> {
        let Some(path) = &self.cfg.paths.segments else {
            return Ok(BTreeMap::new());
        };
        let mut out = BTreeMap::new();
        for m in load_manifests(path).context("loading segment manifests")? {
            out.insert(m.doc_id.clone(), m);
        }
        Ok(out)
    }

    pub fn department_label(&self, doc: &DocumentRecord) -> Result<String> {
        let dept = doc.department().unwrap_or_default();
        let path = map_department(dept, &self.taxonomy, &self.aliases)
            .with_context(|| format!("document '{}'", doc.doc_id()))?;
        Ok(path.level3)
    }

    /// Ground truth for every known segment: the truth file when configured,
    /// otherwise the document's department mapped onto the taxonomy.
    pub fn truth(&self, segments: &[(String, String)]) -> Result<HashMap<(String, String), String>> {
        let labels = self.label_set()?;
        let mut out = HashMap::new();
        if let Some(path) = &self.cfg.paths.truth {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(path)
                .with_context(|| format!("reading {}", path.display()))?;
            for (i, row) in rdr.deserialize::<TruthRow>().enumerate() {
                let row = row.with_context(|| format!("{}:{}", path.display(), i + 2))?;
                if labels.index_of(&row.label).is_none() {
                    bail!("{}:{}: label '{}' is not a taxonomy leaf", path.display(), i + 2, row.label);
                }
                out.insert((row.doc_id, row.segment), row.label);
            }
            return Ok(out);
        }
        let mut by_doc = HashMap::new();
        for (doc_id, segment) in segments {
            if !by_doc.contains_key(doc_id) {
                let doc = self
                    .doc(doc_id)
                    .ok_or_else(|| anyhow!("document '{doc_id}' is not in the corpus manifest"))?;
                by_doc.insert(doc_id.clone(), self.department_label(doc)?);
            }
            out.insert((doc_id.clone(), segment.clone()), by_doc[doc_id].clone());
        }
        Ok(out)
    }

    pub fn label_set(&self) -> Result<Arc<LabelSet>> {
        Ok(Arc::new(self.taxonomy.label_set().context("taxonomy labels")?))
    }

    pub fn embedding_provider(&self) -> Box<dyn EmbeddingProvider> {
        match &self.cfg.backends.embedding {
            Some(e) => Box::new(HttpEmbeddingProvider {
                endpoint: e.endpoint.http(),
                provider_id: e.provider_id.clone(),
                retry: e.endpoint.retry,
            }),
            None => Box::new(LocalTrigramProvider),
        }
    }

    pub fn segment_index(&self) -> Result<Vec<SegmentRef>> {
        let path = self.output(INDEX_FILE);
        let mut rdr = csv::Reader::from_path(&path)
            .with_context(|| format!("reading {} (run `extract` first)", path.display()))?;
        rdr.deserialize()
            .collect::<Result<Vec<SegmentRef>, _>>()
            .with_context(|| format!("parsing {}", path.display()))
    }

    /// Chapter segments with their text, in index order.
    pub fn chapters(&self) -> Result<Vec<(SegmentRef, String)>> {
        let dir = self.output("text");
        self.segment_index()?
            .into_iter()
            .filter(SegmentRef::is_chapter)
            .map(|r| {
                let path = dir.join(&r.file);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Ok((r, text))
            })
            .collect()
    }

    pub fn split_rows(&self) -> Result<Option<Vec<SplitRow>>> {
        let path = self.output(SPLIT_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let mut rdr = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<SplitRow>, _>>()
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok(Some(rows))
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

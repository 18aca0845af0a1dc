use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, LabelSet};

/// Full path to a taxonomy leaf plus the leaf's subject code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoryPath {
    pub level1: String,
    pub level2: String,
    pub level3: String,
    pub subject_code: String,
}

impl fmt::Display for CategoryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} > {} > {} ({})",
            self.level1, self.level2, self.level3, self.subject_code
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyNode {
    pub name: String,
    /// Present on leaves only.
    pub subject_code: Option<String>,
    pub children: Vec<TaxonomyNode>,
}

impl TaxonomyNode {
    fn branch(name: &str) -> Self {
        TaxonomyNode {
            name: name.to_string(),
            subject_code: None,
            children: Vec::new(),
        }
    }

    fn child_mut(&mut self, name: &str) -> Option<&mut TaxonomyNode> {
        self.children.iter_mut().find(|c| c.name == name)
    }
}

/// Three-level subject category tree. Every leaf sits at depth 3 and carries
/// a subject code; sibling names are unique.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Taxonomy {
    roots: Vec<TaxonomyNode>,
}

const TAXONOMY_DEPTH: usize = 3;

impl Taxonomy {
    /// Parses the tab-separated leaf-per-line format:
    /// `level1<TAB>level2<TAB>level3<TAB>subject_code`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::parse_named(text, "<taxonomy>")
    }

    fn parse_named(text: &str, source_name: &str) -> Result<Self, CorpusError> {
        let mut taxonomy = Taxonomy::default();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
                return Err(CorpusError::parse(
                    source_name,
                    line_no,
                    format!("field {} is empty", pos + 1),
                ));
            }
            match fields.len() {
                4 => {}
                n if n < 4 => {
                    let node = fields.join(" > ");
                    let message = if n == TAXONOMY_DEPTH {
                        "leaf at depth 3 has no subject code".to_string()
                    } else {
                        format!("node at depth {n} has no children; leaves must sit at depth 3")
                    };
                    return Err(CorpusError::Structure { node, message });
                }
                n => {
                    return Err(CorpusError::Structure {
                        node: fields[..n - 1].join(" > "),
                        message: format!("node at depth {} exceeds depth 3", n - 1),
                    });
                }
            }
            taxonomy.insert(CategoryPath {
                level1: fields[0].to_string(),
                level2: fields[1].to_string(),
                level3: fields[2].to_string(),
                subject_code: fields[3].to_string(),
            })?;
        }
        Ok(taxonomy)
    }

    pub fn from_paths<I>(paths: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = CategoryPath>,
    {
        let mut taxonomy = Taxonomy::default();
        for path in paths {
            taxonomy.insert(path)?;
        }
        Ok(taxonomy)
    }

    fn insert(&mut self, path: CategoryPath) -> Result<(), CorpusError> {
        for (name, depth) in [(&path.level1, 1), (&path.level2, 2), (&path.level3, 3)] {
            if name.trim().is_empty() {
                return Err(CorpusError::Structure {
                    node: path.to_string(),
                    message: format!("empty name at depth {depth}"),
                });
            }
        }
        if path.subject_code.trim().is_empty() {
            return Err(CorpusError::Structure {
                node: path.level3.clone(),
                message: "leaf at depth 3 has no subject code".into(),
            });
        }
        if self.roots.iter().all(|r| r.name != path.level1) {
            self.roots.push(TaxonomyNode::branch(&path.level1));
        }
        let l1 = self
            .roots
            .iter_mut()
            .find(|r| r.name == path.level1)
            .expect("inserted above");
        if l1.child_mut(&path.level2).is_none() {
            l1.children.push(TaxonomyNode::branch(&path.level2));
        }
        let l2 = l1.child_mut(&path.level2).expect("inserted above");
        if l2.child_mut(&path.level3).is_some() {
            return Err(CorpusError::Structure {
                node: format!("{} > {} > {}", path.level1, path.level2, path.level3),
                message: "duplicate sibling name".into(),
            });
        }
        l2.children.push(TaxonomyNode {
            name: path.level3,
            subject_code: Some(path.subject_code),
            children: Vec::new(),
        });
        Ok(())
    }

    pub fn roots(&self) -> &[TaxonomyNode] {
        &self.roots
    }

    /// Leaves in tree order.
    pub fn leaves(&self) -> Vec<CategoryPath> {
        let mut out = Vec::new();
        for l1 in &self.roots {
            for l2 in &l1.children {
                for l3 in &l2.children {
                    out.push(CategoryPath {
                        level1: l1.name.clone(),
                        level2: l2.name.clone(),
                        level3: l3.name.clone(),
                        subject_code: l3.subject_code.clone().unwrap_or_default(),
                    });
                }
            }
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.roots
            .iter()
            .flat_map(|r| &r.children)
            .map(|l2| l2.children.len())
            .sum()
    }

    pub fn contains(&self, path: &CategoryPath) -> bool {
        self.roots
            .iter()
            .find(|r| r.name == path.level1)
            .and_then(|r| r.children.iter().find(|c| c.name == path.level2))
            .and_then(|l2| l2.children.iter().find(|c| c.name == path.level3))
            .is_some_and(|leaf| leaf.subject_code.as_deref() == Some(path.subject_code.as_str()))
    }

    /// All leaves whose level-3 name equals `level3` after alias normalization.
    pub fn find_leaves(&self, level3: &str) -> Vec<CategoryPath> {
        let wanted = normalize_alias(level3);
        self.leaves()
            .into_iter()
            .filter(|p| normalize_alias(&p.level3) == wanted)
            .collect()
    }

    /// Leaf names in tree order as a label inventory.
    pub fn label_set(&self) -> Result<LabelSet, CorpusError> {
        LabelSet::new(self.leaves().into_iter().map(|p| p.level3))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for p in self.leaves() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                p.level1, p.level2, p.level3, p.subject_code
            ));
        }
        out
    }
}

pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<Taxonomy, CorpusError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let name = path.display().to_string();
    let text = std::str::from_utf8(&bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        CorpusError::parse(&name, line, "invalid UTF-8")
    })?;
    Taxonomy::parse_named(text, &name)
}

/// Canonical alias key: trimmed, internal whitespace collapsed, lowercased.
pub fn normalize_alias(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Department-name lookup onto taxonomy leaves. Exact match on normalized
/// keys only; leaf names act as their own aliases when unambiguous.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    entries: HashMap<String, CategoryPath>,
}

#[derive(Debug, Deserialize)]
struct AliasRow {
    alias: String,
    level3: String,
}

impl AliasTable {
    pub fn from_taxonomy(taxonomy: &Taxonomy) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let leaves = taxonomy.leaves();
        for leaf in &leaves {
            *counts.entry(normalize_alias(&leaf.level3)).or_default() += 1;
        }
        let entries = leaves
            .into_iter()
            .filter_map(|leaf| {
                let key = normalize_alias(&leaf.level3);
                (counts[&key] == 1).then_some((key, leaf))
            })
            .collect();
        AliasTable { entries }
    }

    /// Reads an `alias,level3` CSV on top of the taxonomy's identity aliases.
    pub fn from_csv<R: Read>(reader: R, taxonomy: &Taxonomy) -> Result<Self, CorpusError> {
        Self::from_csv_named(reader, taxonomy, "<aliases>")
    }

    fn from_csv_named<R: Read>(
        reader: R,
        taxonomy: &Taxonomy,
        source_name: &str,
    ) -> Result<Self, CorpusError> {
        let mut table = AliasTable::from_taxonomy(taxonomy);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| CorpusError::parse(source_name, 1, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["alias", "level3"] {
            return Err(CorpusError::parse(
                source_name,
                1,
                "expected header `alias,level3`",
            ));
        }
        for (i, row) in rdr.deserialize::<AliasRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| CorpusError::parse(source_name, line, e.to_string()))?;
            let key = normalize_alias(&row.alias);
            if key.is_empty() {
                return Err(CorpusError::parse(source_name, line, "empty alias"));
            }
            let mut matches = taxonomy.find_leaves(&row.level3);
            let leaf = match matches.len() {
                1 => matches.remove(0),
                0 => {
                    return Err(CorpusError::parse(
                        source_name,
                        line,
                        format!("unknown leaf '{}'", row.level3),
                    ))
                }
                _ => {
                    return Err(CorpusError::parse(
                        source_name,
                        line,
                        format!("leaf name '{}' is ambiguous", row.level3),
                    ))
                }
            };
            if let Some(existing) = table.entries.get(&key) {
                if *existing != leaf {
                    return Err(CorpusError::parse(
                        source_name,
                        line,
                        format!("alias '{}' already maps to '{}'", row.alias, existing.level3),
                    ));
                }
            }
            table.entries.insert(key, leaf);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
        Self::from_csv_named(file, taxonomy, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn map_department(&self, department: &str) -> Result<CategoryPath, CorpusError> {
        let key = normalize_alias(department);
        if key.is_empty() {
            return Err(CorpusError::EmptyDepartment);
        }
        self.entries
            .get(&key)
            .cloned()
            .ok_or_else(|| CorpusError::UnmappedDepartment(department.to_string()))
    }
}

/// Resolves a department string to its taxonomy leaf through `aliases`.
pub fn map_department(
    department: &str,
    taxonomy: &Taxonomy,
    aliases: &AliasTable,
) -> Result<CategoryPath, CorpusError> {
    let path = aliases.map_department(department)?;
    debug_assert!(taxonomy.contains(&path));
    if !taxonomy.contains(&path) {
        return Err(CorpusError::UnmappedDepartment(department.to_string()));
    }
    Ok(path)
}

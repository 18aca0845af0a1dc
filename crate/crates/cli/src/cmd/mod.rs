pub mod classify;
pub mod evaluate;
pub mod extract;
pub mod prompt;
pub mod report;
pub mod segment;
pub mod train;

use std::collections::HashSet;

use anyhow::{bail, Result};
use clap::ValueEnum;

use crate::pipeline::{Context, SegmentRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelKind {
    Single,
    #[value(name = "two_level")]
    TwoLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    All,
    /// Held-out chapters from the last `train` run.
    Test,
}

/// The chapters in `subset`, in index order.
pub fn select<'a>(
    ctx: &Context,
    chapters: &'a [(SegmentRef, String)],
    subset: Subset,
) -> Result<Vec<&'a (SegmentRef, String)>> {
    match subset {
        Subset::All => Ok(chapters.iter().collect()),
        Subset::Test => {
            let Some(rows) = ctx.split_rows()? else {
                bail!("--subset test needs the split written by `train`");
            };
            let test: HashSet<(String, String)> = rows
                .into_iter()
                .filter(|r| r.part == "test")
                .map(|r| (r.doc_id, r.segment))
                .collect();
            Ok(chapters.iter().filter(|(r, _)| test.contains(&r.key())).collect())
        }
    }
}

//! Chapter-level subject classification for long scholarly documents:
//! OCR/layout fusion, chapter segmentation, native and remote classifiers,
//! prompt-driven labeling and evaluation.

pub mod backend;
pub mod classify;
pub mod corpus;
pub mod eval;
pub mod layout;
pub mod llm;
pub mod records;
pub mod segment;

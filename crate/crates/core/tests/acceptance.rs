//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use etdchap::classify::{
    build_vocabulary, calibrate, featurize, predict_scores, to_single, to_topk, train_linear_ovr,
    Calibration, Prediction, ScoreVector, TrainConfig,
};
use etdchap::corpus::{load_taxonomy, stratified_split, LabelSet, PageDims};
use etdchap::eval::{
    auc, confusion, confusion_from_labels, precision_recall_f1, roc_curve, similarity_histogram,
    topk_accuracy,
};
use etdchap::layout::{
    assemble_text, filter_blocks, parse_layout_file, parse_ocr_dump, FilterPolicy,
};
use etdchap::llm::{parse_two_level, EmbeddingProvider, LabelIndex, LocalTrigramProvider};
use etdchap::segment::{ManifestEntry, SegmentLabel, SegmentManifest};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {id:>2} {:<4} {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

#[test]
fn c01_metrics_match_brute_force() {
    let start = Instant::now();
    let classes: Vec<String> = (0..6).map(|i| format!("class{i}")).collect();
    let ls = Arc::new(LabelSet::new(classes.clone()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = Vec::new();
    for fixture_no in 0..200 {
        let n = rng.random_range(1..=150);
        let truth: Vec<&str> = (0..n).map(|_| classes[rng.random_range(0..6)].as_str()).collect();
        let pred: Vec<&str> = truth
            .iter()
            .map(|&t| {
                if rng.random_bool(0.55) {
                    t
                } else {
                    classes[rng.random_range(0..6)].as_str()
                }
            })
            .collect();
        let m = precision_recall_f1(&confusion_from_labels(&pred, &truth, &ls).unwrap());

        let mut per_class = Vec::new();
        for c in &classes {
            let tp = (0..n).filter(|&i| pred[i] == c && truth[i] == c).count() as f64;
            let predicted = (0..n).filter(|&i| pred[i] == c).count() as f64;
            let actual = (0..n).filter(|&i| truth[i] == c).count() as f64;
            let p = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let r = if actual > 0.0 { tp / actual } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            per_class.push((p, r, f));
        }
        let correct = (0..n).filter(|&i| pred[i] == truth[i]).count() as f64;
        let accuracy = correct / n as f64;
        let mean = |k: usize| {
            per_class
                .iter()
                .map(|t| [t.0, t.1, t.2][k])
                .sum::<f64>()
                / 6.0
        };

        let mut ok = close(m.accuracy, accuracy)
            && close(m.macro_avg.precision, mean(0))
            && close(m.macro_avg.recall, mean(1))
            && close(m.macro_avg.f1, mean(2));
        for (got, want) in m.per_class.iter().zip(&per_class) {
            ok &= close(got.precision, want.0) && close(got.recall, want.1) && close(got.f1, want.2);
        }
        if !ok {
            mismatches.push(fixture_no);
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(5);
    report(
        1,
        "metrics oracle equivalence",
        ok,
        &format!("200 fixtures, {} mismatches, {elapsed:.2?}", mismatches.len()),
    );
    assert!(ok, "mismatching fixtures: {mismatches:?}");
}

#[test]
fn c02_roc_auc() {
    let start = Instant::now();
    // constant scorer: every threshold admits everything at once
    let truth: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
    let diagonal = auc(&roc_curve(&vec![0.5; 100], &truth).unwrap());

    let scores: Vec<f64> = truth.iter().map(|&t| if t { 0.9 } else { 0.1 }).collect();
    let perfect = auc(&roc_curve(&scores, &truth).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let truth: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let scores: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let random = auc(&roc_curve(&scores, &truth).unwrap());

    // Mann-Whitney oracle on a subsample
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..2000).partition(|&i| truth[i]);
    let mut wins = 0.0;
    for &p in &pos {
        for &q in &neg {
            wins += match scores[p].partial_cmp(&scores[q]).unwrap() {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    let oracle = wins / (pos.len() * neg.len()) as f64;
    let sub = auc(&roc_curve(&scores[..2000], &truth[..2000]).unwrap());

    let elapsed = start.elapsed();
    let ok = diagonal == 0.5
        && perfect == 1.0
        && (0.45..=0.55).contains(&random)
        && close(sub, oracle)
        && elapsed < Duration::from_secs(10);
    report(
        2,
        "ROC/AUC",
        ok,
        &format!("diagonal {diagonal}, separable {perfect}, independent {random:.4}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn c03_topk_dominance() {
    let labels: Vec<String> = (0..47).map(|i| format!("label{i:02}")).collect();
    let ls = Arc::new(LabelSet::new(labels.clone()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut singles = Vec::new();
    let mut tops = Vec::new();
    let mut truth = Vec::new();
    let mut set_mismatch = 0;
    for _ in 0..1000 {
        let raw: Vec<f64> = (0..47).map(|_| rng.random_range(-4.0..4.0)).collect();
        let t = rng.random_range(0..47);
        truth.push(labels[t].clone());
        let raw_v = ScoreVector::new(Arc::clone(&ls), raw.clone(), Calibration::RawMargin).unwrap();
        let sig = calibrate(&raw_v, Calibration::Sigmoid).unwrap();
        singles.push(to_single(&sig).unwrap());
        let top = to_topk(&sig, 3).unwrap();

        let mut order: Vec<usize> = (0..47).collect();
        for i in 0..47 {
            for j in i + 1..47 {
                if raw[order[j]] > raw[order[i]] {
                    order.swap(i, j);
                }
            }
        }
        let oracle: BTreeSet<&str> = order[..3].iter().map(|&i| labels[i].as_str()).collect();
        let got: BTreeSet<&str> = match &top {
            Prediction::Topk { labels } => labels.iter().map(|l| l.label.as_str()).collect(),
            other => panic!("{other:?}"),
        };
        if got != oracle {
            set_mismatch += 1;
        }
        tops.push(top);
    }
    let top1 = precision_recall_f1(&confusion(&singles, &truth, &ls).unwrap()).accuracy;
    let top3 = topk_accuracy(&tops, &truth).unwrap();
    let ok = top3 >= top1 && set_mismatch == 0;
    report(
        3,
        "top-k dominance",
        ok,
        &format!("top-1 {top1:.3}, top-3 {top3:.3}, {set_mismatch} set mismatches over 1000 vectors"),
    );
    assert!(ok);
}

#[test]
fn c04_histogram_fidelity() {
    let target = [334usize, 352, 199, 96, 141];
    let mut values = Vec::new();
    for (b, &n) in target.iter().enumerate() {
        let lo = b as f64 * 0.2;
        for i in 0..n {
            // spread inside the bin, touching the lower edge
            values.push(lo + 0.2 * i as f64 / n as f64);
        }
    }
    let h = similarity_histogram(&values).unwrap();
    let ok = h.counts == target && h.at_or_above_cut == 237 && h.total == 1122;
    report(
        4,
        "histogram fidelity",
        ok,
        &format!("counts {:?}, at or above 0.6: {}", h.counts, h.at_or_above_cut),
    );
    assert!(ok);
}

const DROP_REGION_TEXT: [&str; 9] = [
    "Marrowgate Thesis Draft",
    "Quillonby Press Page one",
    "Quillonby Press Page two",
    "Quillonby Press Page three",
    "Vexilloid axis plot",
    "Fig Brindlecup sample map",
    "Zorbquat kappa lambda theta",
    "Marrowgate",
    "Quillonby",
];

fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[test]
fn c05_fusion_soundness() {
    let blocks = parse_ocr_dump(fixture("fusion_ocr.json")).unwrap();
    let regions = parse_layout_file(fixture("fusion_layout.txt")).unwrap();
    let dims: Vec<PageDims> = vec![PageDims { width: 1224.0, height: 1584.0 }; 3];
    let drop: BTreeSet<String> = DROP_REGION_TEXT.iter().flat_map(|t| tokens(t)).collect();

    let kept = filter_blocks(&blocks, &regions, Some(&dims), &FilterPolicy::default()).unwrap();
    let text = assemble_text(&kept);
    let leaked: Vec<String> = tokens(&text).intersection(&drop).cloned().collect();
    let golden = std::fs::read_to_string(fixture("fusion_golden.txt")).unwrap();

    let all = filter_blocks(&blocks, &regions, Some(&dims), &FilterPolicy::keep_all()).unwrap();
    let unfiltered = tokens(&assemble_text(&all));
    let missing: Vec<&String> = drop.iter().filter(|t| !unfiltered.contains(*t)).collect();

    let ok = leaked.is_empty() && missing.is_empty() && text == golden;
    report(
        5,
        "fusion soundness",
        ok,
        &format!(
            "{} drop-region tokens leaked when filtering, {} of {} missing without filtering, golden match {}",
            leaked.len(),
            missing.len(),
            drop.len(),
            text == golden
        ),
    );
    assert!(ok, "leaked {leaked:?}, missing {missing:?}\n{text}");
}

fn brute_force_partition(entries: &[(u32, u32)], page_count: u32) -> bool {
    let mut pages = Vec::new();
    for &(s, e) in entries {
        if s == 0 || s > e {
            return false;
        }
        pages.extend(s..=e);
    }
    pages == (1..=page_count).collect::<Vec<_>>()
}

#[test]
fn c06_segmentation_validity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut disagreements = 0;
    let mut accepted = 0;
    for _ in 0..500 {
        let page_count = rng.random_range(1..=40u32);
        let n_chapters = rng.random_range(0..=6u32);
        let mut labels = vec![SegmentLabel::Front];
        labels.extend((1..=n_chapters).map(SegmentLabel::Chapter));
        if rng.random_bool(0.5) {
            labels.push(SegmentLabel::References);
        }
        if rng.random_bool(0.3) {
            labels.push(SegmentLabel::Appendix);
        }

        let mut ranges = Vec::new();
        if rng.random_bool(0.5) && labels.len() as u32 <= page_count {
            let mut cuts: Vec<u32> = (2..=page_count).collect();
            cuts.shuffle(&mut rng);
            let mut cuts: Vec<u32> = cuts[..labels.len() - 1].to_vec();
            cuts.sort_unstable();
            let mut start = 1;
            for &c in &cuts {
                ranges.push((start, c - 1));
                start = c;
            }
            ranges.push((start, page_count));
            // occasionally nudge one boundary
            if rng.random_bool(0.4) {
                let i = rng.random_range(0..ranges.len());
                let r: &mut (u32, u32) = &mut ranges[i];
                match rng.random_range(0..4) {
                    0 => r.0 = r.0.saturating_sub(1),
                    1 => r.0 += 1,
                    2 => r.1 = r.1.saturating_sub(1),
                    _ => r.1 += 1,
                }
            }
        } else {
            for _ in &labels {
                let a = rng.random_range(0..=page_count + 1);
                let b = rng.random_range(0..=page_count + 1);
                ranges.push((a.min(b), a.max(b)));
            }
        }

        let manifest = SegmentManifest {
            doc_id: "doc".into(),
            entries: labels
                .iter()
                .zip(&ranges)
                .map(|(&label, &(page_start, page_end))| ManifestEntry { label, page_start, page_end })
                .collect(),
        };
        let valid = manifest.validate(page_count).is_ok();
        let oracle = brute_force_partition(&ranges, page_count);
        accepted += usize::from(oracle);
        if valid != oracle {
            disagreements += 1;
        }
    }
    let ok = disagreements == 0 && accepted > 50 && accepted < 450;
    report(
        6,
        "segmentation validity",
        ok,
        &format!("500 manifests, {accepted} partitions, {disagreements} disagreements"),
    );
    assert!(ok);
}

fn synthetic_corpus(seed: u64) -> Vec<(String, String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    for c in 0..10 {
        let vocab: Vec<String> = (0..25).map(|w| format!("c{c}term{w}")).collect();
        for d in 0..50 {
            let words: Vec<&str> = (0..40).map(|_| vocab[rng.random_range(0..vocab.len())].as_str()).collect();
            docs.push((format!("doc{c}_{d}"), format!("class{c}"), words.join(" ")));
        }
    }
    docs
}

fn train_and_score(seed: u64) -> (f64, Vec<Vec<f64>>) {
    let docs = synthetic_corpus(7);
    let text_of: HashMap<&str, &str> = docs.iter().map(|d| (d.0.as_str(), d.2.as_str())).collect();
    let pairs: Vec<(String, String)> = docs.iter().map(|d| (d.0.clone(), d.1.clone())).collect();
    let split = stratified_split(&pairs, 0.8, seed).unwrap();
    let ls = Arc::new(LabelSet::new((0..10).map(|c| format!("class{c}"))).unwrap());

    let train_text: Vec<&str> = split.train.iter().map(|p| text_of[p.0.as_str()]).collect();
    let vocab = build_vocabulary(&train_text, 1, 10_000).unwrap();
    let x: Vec<_> = train_text.iter().map(|t| featurize(t, &vocab)).collect();
    let y: Vec<&str> = split.train.iter().map(|p| p.1.as_str()).collect();
    let config = TrainConfig { seed, ..TrainConfig::default() };
    let model = train_linear_ovr(&x, &y, Arc::clone(&ls), &config).unwrap();

    let predicted: Vec<String> = split
        .test
        .iter()
        .map(|p| {
            let s = predict_scores(&model, &featurize(text_of[p.0.as_str()], &vocab)).unwrap();
            ls.get(s.argmax().unwrap()).unwrap().to_string()
        })
        .collect();
    let truth: Vec<&str> = split.test.iter().map(|p| p.1.as_str()).collect();
    let m = precision_recall_f1(&confusion_from_labels(&predicted, &truth, &ls).unwrap());
    (m.macro_avg.f1, model.weights().to_vec())
}

#[test]
fn c07_native_classifier_sanity() {
    let start = Instant::now();
    let (f1, weights) = train_and_score(42);
    let (f1_again, weights_again) = train_and_score(42);
    let elapsed = start.elapsed();
    let deterministic = f1 == f1_again && weights == weights_again;
    let ok = f1 >= 0.9 && deterministic && elapsed < Duration::from_secs(60);
    report(
        7,
        "native classifier sanity",
        ok,
        &format!("held-out macro-F1 {f1:.4}, deterministic {deterministic}, {elapsed:.2?} for two runs"),
    );
    assert!(ok);
}

#[test]
fn c08_split_arithmetic() {
    let taxonomy = load_taxonomy(fixture("taxonomy_47.tsv")).unwrap();
    let leaves = taxonomy.leaves();
    let records: Vec<(String, String)> = leaves
        .iter()
        .flat_map(|leaf| (0..200).map(move |i| (format!("{}-{i}", leaf.subject_code), leaf.level3.clone())))
        .collect();
    let split = stratified_split(&records, 0.8, 42).unwrap();
    let per_label_ok = leaves.iter().all(|leaf| {
        split.train.iter().filter(|r| r.1 == leaf.level3).count() == 160
            && split.test.iter().filter(|r| r.1 == leaf.level3).count() == 40
    });
    let ok = leaves.len() == 47
        && records.len() == 9400
        && split.train.len() == 7520
        && split.test.len() == 1880
        && per_label_ok;
    report(
        8,
        "split arithmetic",
        ok,
        &format!(
            "{} leaves, {} records, {} train / {} test",
            leaves.len(),
            records.len(),
            split.train.len(),
            split.test.len()
        ),
    );
    assert!(ok);
}

const CATEGORY_MARKERS: [&str; 7] = [
    "Category:",
    "category:",
    "CATEGORY:",
    "**Category:**",
    "Category :",
    "**Category**:",
    "- Category:",
];
const SUBCATEGORY_MARKERS: [&str; 7] = [
    "Subcategory:",
    "Sub-category:",
    "Sub category:",
    "SUBCATEGORY:",
    "**Subcategory:**",
    "sub-category :",
    "- Subcategory:",
];
const PREAMBLES: [&str; 4] = [
    "",
    "Sure! ",
    "I classified the text into the following category and subcategory:\n",
    "Here is my answer.\n\n",
];

fn render_answer(rng: &mut ChaCha8Rng, category: &str, subcategory: &str) -> String {
    let cat = CATEGORY_MARKERS[rng.random_range(0..CATEGORY_MARKERS.len())];
    let sub = SUBCATEGORY_MARKERS[rng.random_range(0..SUBCATEGORY_MARKERS.len())];
    let wrap = |rng: &mut ChaCha8Rng, v: &str| match rng.random_range(0..3) {
        0 => v.to_string(),
        1 => format!("\"{v}\""),
        _ => format!("{v}."),
    };
    let (c, s) = (wrap(rng, category), wrap(rng, subcategory));
    let sep = ["\n", " ", "\n\n"][rng.random_range(0..3)];
    let body = if rng.random_bool(0.8) {
        format!("{cat} {c}{sep}{sub} {s}")
    } else {
        format!("{sub} {s}\n{cat} {c}")
    };
    format!("{}{body}", PREAMBLES[rng.random_range(0..PREAMBLES.len())])
}

#[test]
fn c09_two_level_parsing() {
    let one_line = "Based on the content you provided, I would categorize your text under \
                  \"Electrical and Computer Engineering\" This field encompasses the study of \
                  electrical and computer engineering topics, including the theory, design, and \
                  application of electronic";
    let multi_line = "I classified the text into the following category and subcategory:\n\
                  Category: Electrical and Computer Engineering\n\
                  Subcategory: Materials Science and Engineering";
    let a = parse_two_level(one_line).unwrap();
    let b = parse_two_level(multi_line).unwrap();
    let samples_ok = a.category == "Electrical and Computer Engineering"
        && b.category == "Electrical and Computer Engineering"
        && b.subcategory == "Materials Science and Engineering";

    let taxonomy = load_taxonomy(fixture("taxonomy_47.tsv")).unwrap();
    let leaves = taxonomy.leaves();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let leaf = &leaves[rng.random_range(0..leaves.len())];
        let raw = render_answer(&mut rng, &leaf.level2, &leaf.level3);
        match parse_two_level(&raw) {
            Ok(t) if t.category == leaf.level2 && t.subcategory == leaf.level3 => {}
            other => failures.push((raw, format!("{other:?}"))),
        }
    }
    let ok = samples_ok && failures.is_empty();
    report(
        9,
        "two-level parsing",
        ok,
        &format!("printed samples ok {samples_ok}, {} of 100 marker variants failed", failures.len()),
    );
    assert!(ok, "{failures:#?}");
}

fn oracle_trigram_vector(text: &str) -> Vec<f64> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let padded = format!(" {} ", cleaned.split_whitespace().collect::<Vec<_>>().join(" "));
    let chars: Vec<char> = padded.chars().collect();
    let mut v = vec![0.0; 1024];
    for w in chars.windows(3) {
        let gram: String = w.iter().collect();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in gram.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        v[(h % 1024) as usize] += 1.0;
    }
    v
}

fn oracle_cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

#[test]
fn c10_label_normalization() {
    let taxonomy = load_taxonomy(fixture("taxonomy_47.tsv")).unwrap();
    let names: Vec<String> = taxonomy.leaves().into_iter().map(|l| l.level3).collect();
    let provider = LocalTrigramProvider;
    let index = LabelIndex::new(&provider, &names).unwrap();
    let cases = [
        ("linguistic science", "linguistics"),
        ("political science and international relations", "political science"),
    ];
    let mut details = Vec::new();
    let mut ok = names.len() == 47 && provider.provider_id() == "local-trigram-1024";
    for (query, expected) in cases {
        let (i, score) = index.best(query).unwrap();
        let q = oracle_trigram_vector(query);
        let sims: Vec<f64> = names.iter().map(|n| oracle_cosine(&q, &oracle_trigram_vector(n))).collect();
        let best = (0..sims.len()).fold(0, |b, j| if sims[j] > sims[b] { j } else { b });
        let case_ok = names[i] == expected && names[best] == expected && (score - sims[best]).abs() < 1e-9;
        ok &= case_ok;
        details.push(format!("'{query}' -> '{}' ({score:.3})", names[i]));
    }
    report(10, "label normalization", ok, &details.join(", "));
    assert!(ok);
}

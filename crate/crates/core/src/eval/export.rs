use std::io::Write;

use super::{EvalError, Metrics, RocCurve, SimilarityHistogram};

/// `class,precision,recall,f1` rows, then `macro` and `micro` summary rows.
pub fn write_class_csv<W: Write>(out: W, metrics: &Metrics) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "precision", "recall", "f1"])?;
    for m in &metrics.per_class {
        w.write_record([
            m.label.clone(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
        ])?;
    }
    for (name, a) in [("macro", metrics.macro_avg), ("micro", metrics.micro_avg)] {
        w.write_record([
            name.to_string(),
            a.precision.to_string(),
            a.recall.to_string(),
            a.f1.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `fpr,tpr,threshold` rows; the opening point's threshold is written `inf`.
pub fn write_roc_csv<W: Write>(out: W, curve: &RocCurve) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in &curve.points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `bin_low,bin_high,count` rows.
pub fn write_histogram_csv<W: Write>(out: W, hist: &SimilarityHistogram) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_low", "bin_high", "count"])?;
    for (b, count) in hist.counts.iter().enumerate() {
        w.write_record([
            format!("{:.1}", hist.edges[b]),
            format!("{:.1}", hist.edges[b + 1]),
            count.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{roc_curve, similarity_histogram};

    #[test]
    fn histogram_csv() {
        let h = similarity_histogram(&[0.1, 0.9]).unwrap();
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "bin_low,bin_high,count\n0.0,0.2,1\n0.2,0.4,0\n0.4,0.6,0\n0.6,0.8,0\n0.8,1.0,1\n"
        );
    }

    #[test]
    fn roc_csv() {
        let c = roc_curve(&[0.9, 0.1], &[true, false]).unwrap();
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &c).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "fpr,tpr,threshold\n0,0,inf\n0,1,0.9\n1,1,0.1\n"
        );
    }
}

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::predictors::{LabeledScoreSource, SymmetricChannelSpec};
use crate::prob::{derive_seed, rng_from_seed, sample_symbol, CategoricalDist, LogCondStats, SimRng};

/// Row sums may deviate from one by at most this much.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Precomputed model outputs: one probability vector over the `M` labels
/// per sample, plus the true label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreDataset {
    pub probs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub m_classes: usize,
}

impl ScoreDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Plug-in moments of `log P(Y|X)` from the true-label probabilities.
    pub fn plug_in_stats(&self) -> Result<LogCondStats> {
        let p: Vec<f64> = self.probs.iter().zip(&self.labels).map(|(r, &y)| r[y]).collect();
        LogCondStats::from_label_probs(&p)
    }

    /// Rows drawn from the symmetric channel with a uniform input; each row
    /// holds the true `P(.|x)`.
    pub fn sample_symmetric(spec: &SymmetricChannelSpec, rows: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let m = spec.m_classes;
        let mut probs = Vec::with_capacity(rows);
        let mut labels = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            let x = rng.random_range(0..m);
            let mut row = vec![spec.label_prob(false); m];
            row[x] = spec.label_prob(true);
            labels.push(sample_symbol(&CategoricalDist::from_weights(&row)?, &mut rng));
            probs.push(row);
        }
        Ok(Self {
            probs,
            labels,
            m_classes: m,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io {
            path: "<scores>".into(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.m_classes).map(|i| format!("p_{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(io)?;
        for (row, y) in self.probs.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|p| format!("{p:?}")).collect();
            rec.push(y.to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<scores>".into(),
            message: e.to_string(),
        })
    }
}

/// Draws rows uniformly with replacement; scores are `1 - p`.
impl LabeledScoreSource for ScoreDataset {
    fn label_count(&self) -> usize {
        self.m_classes
    }

    fn draw(&self, rng: &mut SimRng) -> (Vec<f64>, usize) {
        let i = rng.random_range(0..self.len());
        (self.probs[i].iter().map(|p| 1.0 - p).collect(), self.labels[i])
    }
}

pub fn load_scores_csv(path: &Path) -> Result<ScoreDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_scores_csv(file, &path.display().to_string())
}

/// Parses the score-CSV format `p_0,...,p_{M-1},label`. `source` names the
/// input in error messages; line numbers are 1-based and count the header.
pub fn parse_scores_csv<R: Read>(input: R, source: &str) -> Result<ScoreDataset> {
    let err = |line: u64, message: String| Error::Parse {
        path: source.into(),
        line: line as usize,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let m = cols.len().saturating_sub(1);
    if m < 2 || cols[m] != "label" || cols[..m].iter().enumerate().any(|(i, c)| *c != format!("p_{i}")) {
        return Err(err(1, "header must be p_0,...,p_{M-1},label with M >= 2".into()));
    }
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != m + 1 {
            return Err(err(line, format!("expected {} fields, found {}", m + 1, rec.len())));
        }
        let mut row = Vec::with_capacity(m);
        for (i, f) in rec.iter().take(m).enumerate() {
            let p: f64 = f
                .trim()
                .parse()
                .map_err(|_| err(line, format!("p_{i}: cannot parse {f:?}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(line, format!("p_{i} = {p} outside [0, 1]")));
            }
            row.push(p);
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(err(line, format!("probabilities sum to {sum}")));
        }
        let y: usize = rec[m]
            .trim()
            .parse()
            .map_err(|_| err(line, format!("label: cannot parse {:?}", &rec[m])))?;
        if y >= m {
            return Err(err(line, format!("label {y} not below {m}")));
        }
        probs.push(row);
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(ScoreDataset {
        probs,
        labels,
        m_classes: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_rows() {
        let d = parse_scores_csv("p_0,p_1,p_2,label\n0.5,0.25,0.25,0\n0.1,0.1,0.8,2\n".as_bytes(), "t").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.m_classes, 3);
        assert_eq!(d.labels, vec![0, 2]);
    }

    #[test]
    fn bad_row_sum_reports_line() {
        let e = parse_scores_csv("p_0,p_1,label\n0.5,0.5,1\n0.25,0.25,0\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn rejects_bad_header_and_label() {
        assert!(parse_scores_csv("a,b,label\n0.5,0.5,0\n".as_bytes(), "t").is_err());
        let e = parse_scores_csv("p_0,p_1,label\n0.5,0.5,2\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_scores_csv("p_0,p_1,label\n0.5,x,0\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn csv_roundtrip() {
        let spec = SymmetricChannelSpec::new(0.1, 4).unwrap();
        let d = ScoreDataset::sample_symmetric(&spec, 50, 3).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(parse_scores_csv(buf.as_slice(), "t").unwrap(), d);
    }
}

//! Pairwise Pearson correlation between channels over shared materials.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::Dataset;

/// Pearson r, or `None` with fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    /// Channel labels in registry order.
    pub labels: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
    pub overlap: Vec<Vec<usize>>,
}

/// Correlations on transformed values; the diagonal holds each channel's
/// material count.
pub fn pearson_matrix(dataset: &Dataset) -> CorrelationMatrix {
    let n = dataset.registry().len();
    let mut by_channel: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); n];
    for rec in dataset.records() {
        by_channel[rec.channel].insert(rec.material_id.as_str(), dataset.transformed(rec));
    }
    let mut r = vec![vec![None; n]; n];
    let mut overlap = vec![vec![0; n]; n];
    for i in 0..n {
        for j in i..n {
            let (xs, ys): (Vec<f64>, Vec<f64>) = by_channel[i]
                .iter()
                .filter_map(|(m, &x)| by_channel[j].get(m).map(|&y| (x, y)))
                .unzip();
            let value = if i == j {
                (xs.len() >= 2 && pearson(&xs, &ys).is_some()).then_some(1.0)
            } else {
                pearson(&xs, &ys)
            };
            r[i][j] = value;
            r[j][i] = value;
            overlap[i][j] = xs.len();
            overlap[j][i] = xs.len();
        }
    }
    CorrelationMatrix {
        labels: dataset.registry().channels().iter().map(|c| c.key()).collect(),
        r,
        overlap,
    }
}

impl CorrelationMatrix {
    /// Square CSV with a `channel` header column; undefined entries are `NA`.
    pub fn r_csv(&self) -> String {
        self.csv(|i, j| match self.r[i][j] {
            Some(v) => format!("{v}"),
            None => "NA".into(),
        })
    }

    pub fn overlap_csv(&self) -> String {
        self.csv(|i, j| self.overlap[i][j].to_string())
    }

    fn csv(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let mut out = String::from("channel");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for j in 0..self.labels.len() {
                let _ = write!(out, ",{}", cell(i, j));
            }
            out.push('\n');
        }
        out
    }
}

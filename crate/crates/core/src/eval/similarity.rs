use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::graph::NodeLabelMap;

/// Tolerance under which two coordinates count as equal for Hamming.
pub const HAMMING_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Cosine,
    Jaccard,
    Hamming,
    /// Hamming over vectors binarized at the per-dimension median.
    Binham,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Cosine, Metric::Jaccard, Metric::Hamming, Metric::Binham];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Jaccard => "jaccard",
            Metric::Hamming => "hamming",
            Metric::Binham => "binham",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown metric {s:?}, expected cosine|jaccard|hamming|binham")))
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(0.0, 1.0)
}

/// Weighted Jaccard `sum min / sum max`; two all-zero vectors are identical.
pub fn jaccard(u: &[f64], v: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        num += a.min(b);
        den += a.max(b);
    }
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Fraction of coordinates equal within [`HAMMING_EPSILON`].
pub fn hamming(u: &[f64], v: &[f64]) -> f64 {
    let equal = u.iter().zip(v).filter(|(a, b)| (*a - *b).abs() <= HAMMING_EPSILON).count();
    equal as f64 / u.len() as f64
}

/// Hamming over bits `x_k >= threshold_k`.
pub fn binarized_hamming(u: &[f64], v: &[f64], thresholds: &[f64]) -> f64 {
    let equal = u
        .iter()
        .zip(v)
        .zip(thresholds)
        .filter(|((a, b), t)| (**a >= **t) == (**b >= **t))
        .count();
    equal as f64 / u.len() as f64
}

/// Similarity of two embedding vectors. `thresholds` (per-dimension medians)
/// is required by [`Metric::Binham`] and ignored otherwise.
pub fn similarity(u: &[f64], v: &[f64], metric: Metric, thresholds: Option<&[f64]>) -> Result<f64> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::domain(format!("cannot compare vectors of sizes {} and {}", u.len(), v.len())));
    }
    Ok(match metric {
        Metric::Cosine => cosine(u, v),
        Metric::Jaccard => jaccard(u, v),
        Metric::Hamming => hamming(u, v),
        Metric::Binham => {
            let t = thresholds.ok_or_else(|| Error::domain("binham needs per-dimension medians"))?;
            if t.len() != u.len() {
                return Err(Error::domain("threshold and vector sizes differ"));
            }
            binarized_hamming(u, v, t)
        }
    })
}

/// Median of every dimension over all nodes of the embedding.
pub fn dimension_medians(space: &EmbeddingSpace) -> Vec<f64> {
    let n = space.node_count();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); space.dimension_count()];
    for i in 0..n {
        for &(j, v) in space.sparse_row(i) {
            columns[j].push(v);
        }
    }
    columns
        .into_iter()
        .map(|mut col| {
            col.resize(n, 0.0);
            col.sort_by(f64::total_cmp);
            match n {
                0 => 0.0,
                _ if n % 2 == 1 => col[n / 2],
                _ => (col[n / 2 - 1] + col[n / 2]) / 2.0,
            }
        })
        .collect()
}

/// A metric bound to one embedding, with medians precomputed for binham.
#[derive(Clone, Debug)]
pub struct Kernel<'a> {
    space: &'a EmbeddingSpace,
    metric: Metric,
    thresholds: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    pub fn new(space: &'a EmbeddingSpace, metric: Metric) -> Self {
        let thresholds = (metric == Metric::Binham).then(|| dimension_medians(space));
        Kernel { space, metric, thresholds }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn score(&self, a: usize, b: usize) -> Result<f64> {
        similarity(&self.space.row(a), &self.space.row(b), self.metric, self.thresholds.as_deref())
    }
}

/// Writes the `n x n` similarity matrix with a header of labels, tab-separated.
pub fn write_kernel_matrix<W: Write>(space: &EmbeddingSpace, labels: &NodeLabelMap, metric: Metric, mut out: W) -> Result<()> {
    let kernel = Kernel::new(space, metric);
    writeln!(out, "\t{}", labels.labels().join("\t"))?;
    for a in 0..space.node_count() {
        let mut line = labels.label(a).to_string();
        for b in 0..space.node_count() {
            line.push_str(&format!("\t{:.6}", kernel.score(a, b)?));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn all(u: &[f64], v: &[f64], t: &[f64]) -> [f64; 4] {
        Metric::ALL.map(|m| similarity(u, v, m, Some(t)).unwrap())
    }

    #[test]
    fn identical_and_orthogonal() {
        let u = [0.3, 0.7];
        assert_eq!(all(&u, &u, &[0.5, 0.5]), [1.0, 1.0, 1.0, 1.0]);
        let (a, b) = ([1.0, 0.0], [0.0, 1.0]);
        assert_eq!(cosine(&a, &b), 0.0);
        assert_eq!(jaccard(&a, &b), 0.0);
        assert_eq!(hamming(&a, &b), 0.0);
    }

    #[test]
    fn fractional_vectors() {
        let (u, v) = ([0.75, 0.25], [1.0, 0.0]);
        assert_relative_eq!(jaccard(&u, &v), 0.6, epsilon = 1e-15);
        assert_relative_eq!(cosine(&u, &v), 0.75 / 0.625f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(cosine(&u, &v), 0.948683, epsilon = 1e-6);
    }

    #[test]
    fn zero_vectors() {
        let z = [0.0, 0.0];
        assert_eq!(cosine(&z, &z), 0.0);
        assert_eq!(jaccard(&z, &z), 1.0);
        assert_eq!(hamming(&z, &z), 1.0);
    }

    #[test]
    fn mismatched_dimensions() {
        assert!(similarity(&[1.0], &[1.0, 0.0], Metric::Cosine, None).is_err());
        assert!(similarity(&[1.0], &[1.0], Metric::Binham, None).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("euclid".parse::<Metric>().is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_symmetric(
            pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..12)
        ) {
            let u: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let v: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let t: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            let forward = all(&u, &v, &t);
            let backward = all(&v, &u, &t);
            for (f, b) in forward.iter().zip(&backward) {
                prop_assert!((0.0..=1.0).contains(f));
                prop_assert!((f - b).abs() <= 1e-15);
            }
            if u.iter().any(|&x| x > 0.0) {
                for s in all(&u, &u, &t) {
                    prop_assert!((s - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}

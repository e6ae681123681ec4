use std::collections::HashMap;

use crate::error::{Error, Result};

struct Joint {
    n: f64,
    cells: HashMap<(u32, u32), usize>,
    classes: HashMap<u32, usize>,
    clusters: HashMap<u32, usize>,
}

fn joint(labels: &[u32], clusters: &[u32]) -> Result<Joint> {
    if labels.len() != clusters.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: clusters.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let mut j = Joint {
        n: labels.len() as f64,
        cells: HashMap::new(),
        classes: HashMap::new(),
        clusters: HashMap::new(),
    };
    for (&a, &b) in labels.iter().zip(clusters) {
        *j.cells.entry((a, b)).or_default() += 1;
        *j.classes.entry(a).or_default() += 1;
        *j.clusters.entry(b).or_default() += 1;
    }
    Ok(j)
}

// Sums run over sorted keys so the result does not depend on hash order.
fn sorted<K: Ord + Copy>(m: &HashMap<K, usize>) -> Vec<(K, usize)> {
    let mut v: Vec<_> = m.iter().map(|(k, c)| (*k, *c)).collect();
    v.sort_unstable_by_key(|e| e.0);
    v
}

/// Mutual information (natural log) of the empirical joint distribution of
/// class labels and cluster ids.
pub fn mutual_information(labels: &[u32], clusters: &[u32]) -> Result<f64> {
    let j = joint(labels, clusters)?;
    let mi: f64 = sorted(&j.cells)
        .into_iter()
        .map(|((a, b), c)| {
            let p = c as f64 / j.n;
            let pa = j.classes[&a] as f64 / j.n;
            let pb = j.clusters[&b] as f64 / j.n;
            p * (p / (pa * pb)).ln()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// `1 - H(class | cluster) / H(class)`, and 1 when every point has the same
/// class.
pub fn homogeneity(labels: &[u32], clusters: &[u32]) -> Result<f64> {
    let j = joint(labels, clusters)?;
    let h_class: f64 = sorted(&j.classes)
        .into_iter()
        .map(|(_, c)| {
            let p = c as f64 / j.n;
            -p * p.ln()
        })
        .sum();
    if h_class <= 0.0 {
        return Ok(1.0);
    }
    let h_cond: f64 = sorted(&j.cells)
        .into_iter()
        .map(|((_, b), c)| {
            let p = c as f64 / j.n;
            -p * (c as f64 / j.clusters[&b] as f64).ln()
        })
        .sum();
    Ok((1.0 - h_cond / h_class).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mi_examples() {
        let mi = mutual_information(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert!((mi - 2f64.ln()).abs() < 1e-15);
        assert_eq!(mutual_information(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(mutual_information(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-15);
        assert!(matches!(
            mutual_information(&[0, 1], &[0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn homogeneity_examples() {
        assert_eq!(homogeneity(&[0, 0, 1, 1], &[0, 0, 1, 2]).unwrap(), 1.0);
        assert_eq!(homogeneity(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
        let h13 = 3f64.ln() - 2.0 / 3.0 * 2f64.ln();
        let expected = 1.0 - 0.75 * h13 / 2f64.ln();
        let got = homogeneity(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.3113).abs() < 1e-4);
        assert_eq!(homogeneity(&[4, 4, 4], &[0, 1, 2]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn relabeling_clusters_changes_nothing(
            pairs in prop::collection::vec((0u32..4, 0u32..5), 1..60),
            shift in 1u32..100,
        ) {
            let labels: Vec<u32> = pairs.iter().map(|p| p.0).collect();
            let clusters: Vec<u32> = pairs.iter().map(|p| p.1).collect();
            // an injective relabeling that also reverses the order of ids
            let relabeled: Vec<u32> = clusters.iter().map(|c| (10 - c) * shift).collect();
            let mi = mutual_information(&labels, &clusters).unwrap();
            let h = homogeneity(&labels, &clusters).unwrap();
            prop_assert!(mi >= 0.0);
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!((mi - mutual_information(&labels, &relabeled).unwrap()).abs() < 1e-12);
            prop_assert!((h - homogeneity(&labels, &relabeled).unwrap()).abs() < 1e-12);
        }
    }
}

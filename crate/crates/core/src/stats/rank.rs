use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest sample for which the p-value enumerates every permutation.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;
const TIE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationConfig {
    /// Monte-Carlo draws used when `n` exceeds [`EXACT_PERMUTATION_MAX_N`].
    pub draws: usize,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            draws: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactPermutation,
    MonteCarlo,
}

impl PValueMethod {
    pub fn name(self) -> &'static str {
        match self {
            PValueMethod::ExactPermutation => "exact_permutation",
            PValueMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    /// Two-sided permutation p-value.
    pub p_value: f64,
    pub n: usize,
    pub method: PValueMethod,
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn centered(v: &[f64]) -> (Vec<f64>, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - m).collect();
    let ss = c.iter().map(|x| x * x).sum();
    (c, ss)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Spearman rank correlation with a two-sided permutation p-value, using
/// default permutation settings.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    spearman_with(x, y, &PermutationConfig::default())
}

pub fn spearman_with(x: &[f64], y: &[f64], cfg: &PermutationConfig) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooShort { n, min: 3 });
    }
    let (cx, sx) = centered(&fractional_ranks(x));
    let (cy, sy) = centered(&fractional_ranks(y));
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let scale = (sx * sy).sqrt();
    let rho = (dot(&cx, &cy) / scale).clamp(-1.0, 1.0);
    let threshold = dot(&cx, &cy).abs() - TIE_SLACK * scale;
    let extreme = |perm: &[f64]| dot(&cx, perm).abs() >= threshold;

    let (p_value, method) = if n <= EXACT_PERMUTATION_MAX_N {
        let (hits, total) = exact_count(&cy, &extreme);
        (hits as f64 / total as f64, PValueMethod::ExactPermutation)
    } else {
        if cfg.draws == 0 {
            return Err(Error::InvalidConfig("permutation test needs at least one draw".into()));
        }
        let hits: usize = (0..cfg.draws as u64)
            .into_par_iter()
            .map(|draw| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(draw);
                let mut perm = cy.clone();
                perm.shuffle(&mut rng);
                usize::from(extreme(&perm))
            })
            .sum();
        (
            (hits + 1) as f64 / (cfg.draws + 1) as f64,
            PValueMethod::MonteCarlo,
        )
    };
    Ok(Correlation {
        rho,
        p_value,
        n,
        method,
    })
}

/// Heap's algorithm over all `n!` orderings.
fn exact_count(values: &[f64], extreme: &dyn Fn(&[f64]) -> bool) -> (usize, usize) {
    let mut a = values.to_vec();
    let n = a.len();
    let mut c = vec![0usize; n];
    let mut hits = usize::from(extreme(&a));
    let mut total = 1;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            hits += usize::from(extreme(&a));
            total += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    (hits, total)
}

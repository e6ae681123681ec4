//! Ball covers: partitions of a dataset into disjoint balls `{u} ∪ (r-1)-NN(u)`.
//!
//! These are test oracles for the link between point-NSM and clustering-NSM.
//! Exhaustive enumeration is exponential and restricted to small instances;
//! [`sample_ball_covers`] draws covers from larger instances made of small,
//! mutually isolated blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::neighbors::NeighborTable;
use crate::partition::{Clustering, WeightScheme};
use crate::stability::measures::{ball, clustering_nsm, point_nsm};

/// Largest dataset accepted by [`enumerate_ball_covers`].
pub const MAX_ENUMERATION_POINTS: usize = 24;
const MAX_COVERS: usize = 1 << 20;
const MAX_GROUPED_EVALUATIONS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BallCover {
    /// Ball centers, ascending.
    pub centers: Vec<usize>,
    /// The induced partition; cluster `i` is the ball around `centers[i]`.
    pub clusters: Vec<Vec<usize>>,
}

impl BallCover {
    /// The cover as a clustering with equal weights.
    pub fn to_clustering(&self, m: usize) -> Result<Clustering> {
        Clustering::from_groups(&self.clusters, m)?.with_weights(WeightScheme::Uniform)
    }
}

fn check_instance(nn: &NeighborTable, r: usize) -> Result<usize> {
    let m = nn.rows();
    if r < 2 {
        return Err(Error::RadiusTooSmall(r));
    }
    if r - 1 > nn.k() {
        return Err(Error::RadiusTooLarge {
            radius: r,
            needed: r - 1,
            k: nn.k(),
        });
    }
    if m % r != 0 {
        return Err(Error::InvalidConfig(format!(
            "radius {r} does not divide the {m} points"
        )));
    }
    Ok(m)
}

fn make_cover(nn: &NeighborTable, r: usize, mut centers: Vec<usize>) -> Result<BallCover> {
    centers.sort_unstable();
    let clusters = centers
        .iter()
        .map(|&c| {
            let mut b = ball(nn, c, r)?;
            b.sort_unstable();
            Ok(b)
        })
        .collect::<Result<_>>()?;
    Ok(BallCover { centers, clusters })
}

/// Every selection of `m / r` centers whose balls are pairwise disjoint and
/// cover all points. Distinct selections that induce the same partition are
/// listed separately. An empty list means no cover exists.
pub fn enumerate_ball_covers(nn: &NeighborTable, r: usize) -> Result<Vec<BallCover>> {
    let m = check_instance(nn, r)?;
    if m > MAX_ENUMERATION_POINTS {
        return Err(Error::TooLarge {
            size: m,
            max: MAX_ENUMERATION_POINTS,
        });
    }
    let balls: Vec<Vec<usize>> = (0..m).map(|u| ball(nn, u, r)).collect::<Result<_>>()?;
    selections(&balls)?
        .into_iter()
        .map(|c| make_cover(nn, r, c))
        .collect()
}

/// Center selections tiling `0..balls.len()`, where `balls[u]` is the ball
/// around `u` in local ids.
fn selections(balls: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let m = balls.len();
    debug_assert!(m <= MAX_ENUMERATION_POINTS);
    let masks: Vec<u32> = balls
        .iter()
        .map(|b| b.iter().fold(0u32, |acc, &v| acc | (1 << v)))
        .collect();
    let full = (1u32 << m) - 1;
    let mut found = Vec::new();
    search(&masks, full, 0, &mut Vec::new(), &mut found)?;
    Ok(found)
}

fn search(
    masks: &[u32],
    full: u32,
    covered: u32,
    stack: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) -> Result<()> {
    if covered == full {
        if found.len() >= MAX_COVERS {
            return Err(Error::TooLarge {
                size: found.len() + 1,
                max: MAX_COVERS,
            });
        }
        found.push(stack.clone());
        return Ok(());
    }
    let p = (!covered).trailing_zeros();
    for (c, &mask) in masks.iter().enumerate() {
        if mask & (1 << p) != 0 && mask & covered == 0 {
            stack.push(c);
            search(masks, full, covered | mask, stack, found)?;
            stack.pop();
        }
    }
    Ok(())
}

/// Draws `count` center selections uniformly at random among all valid ones.
///
/// Points are grouped into components linked by ball membership. Every ball
/// lies inside one component, so a cover is an independent choice of one
/// tiling per component; each component's tilings are enumerated exactly,
/// which requires components of at most [`MAX_ENUMERATION_POINTS`] points.
pub fn sample_ball_covers(
    nn: &NeighborTable,
    r: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<BallCover>> {
    let m = check_instance(nn, r)?;
    let balls: Vec<Vec<usize>> = (0..m).map(|u| ball(nn, u, r)).collect::<Result<_>>()?;
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for b in &balls {
        for &v in &b[1..] {
            let (a, c) = (find(&mut parent, b[0]), find(&mut parent, v));
            if a != c {
                parent[a.max(c)] = a.min(c);
            }
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for u in 0..m {
        let root = find(&mut parent, u);
        if slot[root] == usize::MAX {
            slot[root] = components.len();
            components.push(Vec::new());
        }
        components[slot[root]].push(u);
    }
    let mut tilings = Vec::with_capacity(components.len());
    for comp in &components {
        if comp.len() > MAX_ENUMERATION_POINTS {
            return Err(Error::TooLarge {
                size: comp.len(),
                max: MAX_ENUMERATION_POINTS,
            });
        }
        let local = |g: usize| comp.binary_search(&g).expect("ball stays in its component");
        let local_balls: Vec<Vec<usize>> = comp
            .iter()
            .map(|&u| balls[u].iter().map(|&v| local(v)).collect())
            .collect();
        let found = selections(&local_balls)?;
        if found.is_empty() {
            return Err(Error::NoCoverExists);
        }
        tilings.push(found);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut centers = Vec::with_capacity(m / r);
            for (comp, options) in components.iter().zip(&tilings) {
                let pick = &options[rng.random_range(0..options.len())];
                centers.extend(pick.iter().map(|&c| comp[c]));
            }
            make_cover(nn, r, centers)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedCoverReport {
    /// Balls merged into each cluster.
    pub group_size: usize,
    pub num_clusters: usize,
    /// Mean clustering-NSM over every cover and every grouping of its balls.
    pub expected_grouped_nsm: f64,
    /// `expected_grouped_nsm >= mean_point_nsm`.
    pub general_bound_holds: bool,
    /// `expected_grouped_nsm >= center_weighted_point_nsm`.
    pub weighted_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverExpectationReport {
    pub radius: usize,
    pub num_covers: usize,
    pub balls_per_cover: usize,
    /// Point-NSM averaged uniformly over all points.
    pub mean_point_nsm: f64,
    /// Clustering-NSM (equal weights) averaged uniformly over center selections.
    pub expected_cover_nsm: f64,
    /// Point-NSM weighted by how often each point is a center.
    pub center_weighted_point_nsm: f64,
    /// `expected_cover_nsm - mean_point_nsm`.
    pub gap: f64,
    /// `expected_cover_nsm - center_weighted_point_nsm`.
    pub weighted_gap: f64,
    /// Every point is a center in the same number of covers.
    pub centers_exchangeable: bool,
    pub grouped: Option<GroupedCoverReport>,
}

/// Enumerates all ball covers and compares expected cover clustering-NSM with
/// mean point-NSM. When `group_size` is set, also merges the balls of each
/// cover into clusters of `group_size` balls in every possible way and checks
/// that the expected clustering-NSM stays at or above mean point-NSM.
pub fn verify_cover_expectation(
    nn: &NeighborTable,
    r: usize,
    group_size: Option<usize>,
) -> Result<CoverExpectationReport> {
    let covers = enumerate_ball_covers(nn, r)?;
    if covers.is_empty() {
        return Err(Error::NoCoverExists);
    }
    let m = nn.rows();
    let balls = m / r;
    let pnsm: Vec<f64> = (0..m).map(|u| point_nsm(nn, u, r)).collect::<Result<_>>()?;
    let mean_point_nsm = pnsm.iter().sum::<f64>() / m as f64;

    let mut center_count = vec![0usize; m];
    let mut cover_sum = 0.0;
    for cover in &covers {
        cover_sum += clustering_nsm(nn, &cover.to_clustering(m)?)?;
        for &c in &cover.centers {
            center_count[c] += 1;
        }
    }
    let n = covers.len() as f64;
    let expected_cover_nsm = cover_sum / n;
    let center_weighted_point_nsm = center_count
        .iter()
        .zip(&pnsm)
        .map(|(&cnt, p)| cnt as f64 * p)
        .sum::<f64>()
        / (n * balls as f64);
    let centers_exchangeable = center_count.windows(2).all(|w| w[0] == w[1]);

    let grouped = match group_size {
        None => None,
        Some(g) => {
            if g < 2 || balls % g != 0 {
                return Err(Error::InvalidConfig(format!(
                    "cannot group {balls} balls into clusters of {g}"
                )));
            }
            let groupings = ball_groupings(balls, g);
            if groupings.len().saturating_mul(covers.len()) > MAX_GROUPED_EVALUATIONS {
                return Err(Error::TooLarge {
                    size: groupings.len().saturating_mul(covers.len()),
                    max: MAX_GROUPED_EVALUATIONS,
                });
            }
            let mut total = 0.0;
            for cover in &covers {
                let mut per_cover = 0.0;
                for grouping in &groupings {
                    let clusters: Vec<Vec<usize>> = grouping
                        .iter()
                        .map(|grp| grp.iter().flat_map(|&b| cover.clusters[b].iter().copied()).collect())
                        .collect();
                    let c = Clustering::from_groups(&clusters, m)?
                        .with_weights(WeightScheme::Uniform)?;
                    per_cover += clustering_nsm(nn, &c)?;
                }
                total += per_cover / groupings.len() as f64;
            }
            let expected = total / n;
            Some(GroupedCoverReport {
                group_size: g,
                num_clusters: balls / g,
                expected_grouped_nsm: expected,
                general_bound_holds: expected >= mean_point_nsm - 1e-12,
                weighted_bound_holds: expected >= center_weighted_point_nsm - 1e-12,
            })
        }
    };

    Ok(CoverExpectationReport {
        radius: r,
        num_covers: covers.len(),
        balls_per_cover: balls,
        mean_point_nsm,
        expected_cover_nsm,
        center_weighted_point_nsm,
        gap: expected_cover_nsm - mean_point_nsm,
        weighted_gap: expected_cover_nsm - center_weighted_point_nsm,
        centers_exchangeable,
        grouped,
    })
}

/// All ways to split `0..n` into unordered groups of `g`.
fn ball_groupings(n: usize, g: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(rest: Vec<usize>, g: usize, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let first = rest[0];
        let others = &rest[1..];
        for combo in combinations(others, g - 1) {
            let mut group = vec![first];
            group.extend(&combo);
            let remaining: Vec<usize> = others.iter().copied().filter(|x| !combo.contains(x)).collect();
            acc.push(group);
            rec(remaining, g, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec((0..n).collect(), g, &mut Vec::new(), &mut out);
    out
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut tail in combinations(&items[i + 1..], k - 1) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

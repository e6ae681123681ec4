//! Seeded synthetic datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::metric::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthSpec {
    /// Isotropic Gaussian blobs. Centers are drawn so that two of them are
    /// `separation` apart on average; points scatter around them with
    /// per-coordinate standard deviation `sigma`.
    GaussianMixture {
        components: usize,
        per_component: usize,
        sigma: f64,
        separation: f64,
        dim: usize,
    },
    /// `groups` clusters of exactly `radius` points, each inside a unit ball;
    /// consecutive ball centers are `separation + 2` apart along the first
    /// axis, so points of different groups are at least `separation` apart.
    BallCover {
        groups: usize,
        radius: usize,
        separation: f64,
        dim: usize,
    },
    /// Points on a line at the given coordinates.
    Line { positions: Vec<f32> },
    /// Uniform on the unit cube.
    UniformNoise { points: usize, dim: usize },
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: Dataset,
    /// Generating component or group of every point, when there is one.
    pub labels: Option<Vec<u32>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParams(msg.into())
}

fn check_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(bad(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(bad(format!("{name} must be finite and non-negative, got {v}")));
    }
    Ok(())
}

/// Generates a dataset; the same spec and seed always give the same bytes.
pub fn synth(spec: &SynthSpec, metric: Metric, seed: u64) -> Result<Synthetic> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, labels) = match spec {
        SynthSpec::GaussianMixture {
            components,
            per_component,
            sigma,
            separation,
            dim,
        } => {
            check_count("components", *components)?;
            check_count("per_component", *per_component)?;
            check_count("dim", *dim)?;
            check_nonneg("sigma", *sigma)?;
            check_nonneg("separation", *separation)?;
            let spread = separation / (2.0 * *dim as f64).sqrt();
            let centers: Vec<Vec<f64>> = (0..*components)
                .map(|_| (0..*dim).map(|_| spread * gauss(&mut rng)).collect())
                .collect();
            let mut values = Vec::with_capacity(components * per_component * dim);
            let mut labels = Vec::with_capacity(components * per_component);
            for (c, center) in centers.iter().enumerate() {
                for _ in 0..*per_component {
                    values.extend(center.iter().map(|x| (x + sigma * gauss(&mut rng)) as f32));
                    labels.push(c as u32);
                }
            }
            (Matrix::new(values, *dim)?, Some(labels))
        }
        SynthSpec::BallCover {
            groups,
            radius,
            separation,
            dim,
        } => {
            check_count("groups", *groups)?;
            check_count("radius", *radius)?;
            check_count("dim", *dim)?;
            check_nonneg("separation", *separation)?;
            let mut values = Vec::with_capacity(groups * radius * dim);
            let mut labels = Vec::with_capacity(groups * radius);
            for g in 0..*groups {
                let offset = g as f64 * (separation + 2.0);
                for _ in 0..*radius {
                    let p = in_unit_ball(&mut rng, *dim);
                    values.extend(p.iter().enumerate().map(|(i, x)| {
                        (if i == 0 { x + offset } else { *x }) as f32
                    }));
                    labels.push(g as u32);
                }
            }
            (Matrix::new(values, *dim)?, Some(labels))
        }
        SynthSpec::Line { positions } => {
            if positions.iter().any(|p| !p.is_finite()) {
                return Err(bad("positions must be finite"));
            }
            (Matrix::new(positions.clone(), 1)?, None)
        }
        SynthSpec::UniformNoise { points, dim } => {
            check_count("points", *points)?;
            check_count("dim", *dim)?;
            let values = (0..points * dim).map(|_| rng.random::<f32>()).collect();
            (Matrix::new(values, *dim)?, None)
        }
    };
    if points.len() < 2 {
        return Err(bad("a dataset needs at least two points"));
    }
    Ok(Synthetic {
        data: Dataset::new(points, metric)?,
        labels,
    })
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn in_unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let r = rng.random::<f64>().powf(1.0 / dim as f64);
            return dir.iter().map(|x| x / norm * r).collect();
        }
    }
}

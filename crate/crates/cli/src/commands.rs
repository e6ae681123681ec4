use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::json;

use nsm::baselines::{db_index, dunn_with, DbWeighting, DunnConfig, DunnFlavor};
use nsm::io::{
    self, assignment_from_table, read_assignment, read_fvecs, read_ivecs, read_neighbors,
    write_assignment, write_csv, write_fvecs, write_ivecs, write_json, write_neighbors,
    AssignmentLayout, IdTable, RunMetadata, SynthSpec,
};
use nsm::ivf::IvfIndex;
use nsm::kmeans::{default_num_clusters, kmeans_run, KMeansConfig, KMeansVariant};
use nsm::neighbors::{approximate_1nn, exact_knn, exact_knn_queries, ApproxConfig};
use nsm::protocol::{correlation_row, run_protocol, CorrelationRow, ProtocolConfig};
use nsm::stability::{clustering_nsm, point_nsm_distribution};
use nsm::stats::{measure_direction, PermutationConfig};
use nsm::{Dataset, Error, Metric, NeighborTable};

/// A failed command: machine-readable code, message and exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "Usage".into(),
            message: message.into(),
            exit_code: 2,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.code, "message": self.message }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: e.code().into(),
            message: e.to_string(),
            exit_code: e.class().exit_code(),
        }
    }
}

type Res = Result<(), Failure>;

fn load(path: &Path, metric: Metric) -> Result<Dataset, Failure> {
    Ok(Dataset::new(read_fvecs(path)?, metric)?)
}

/// `1,2,8`, `1..4` (inclusive) or a mix of both.
fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.parse().map_err(|_| format!("bad range `{part}`"))?;
            let b: usize = b.trim_start_matches('=').parse().map_err(|_| format!("bad range `{part}`"))?;
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad number `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_names(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

// synth

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthKind {
    GaussianMixture,
    BallCover,
    Line,
    UniformNoise,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 10)]
    components: usize,
    #[arg(long, default_value_t = 100)]
    per_component: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 4.0)]
    separation: f64,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    groups: usize,
    /// Points per group for ball covers.
    #[arg(long, default_value_t = 3)]
    radius: usize,
    /// Comma-separated coordinates for `line`.
    #[arg(long, default_value = "0,1,2,3")]
    positions: String,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Generating component of every point, one per record.
    #[arg(long)]
    labels: Option<PathBuf>,
}

pub fn synth(a: SynthArgs) -> Res {
    let spec = match a.kind {
        SynthKind::GaussianMixture => SynthSpec::GaussianMixture {
            components: a.components,
            per_component: a.per_component,
            sigma: a.sigma,
            separation: a.separation,
            dim: a.dim,
        },
        SynthKind::BallCover => SynthSpec::BallCover {
            groups: a.groups,
            radius: a.radius,
            separation: a.separation,
            dim: a.dim,
        },
        SynthKind::Line => SynthSpec::Line {
            positions: a
                .positions
                .split(',')
                .map(|p| p.trim().parse::<f32>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::usage(format!("bad positions `{}`", a.positions)))?,
        },
        SynthKind::UniformNoise => SynthSpec::UniformNoise {
            points: a.points,
            dim: a.dim,
        },
    };
    let s = io::synth(&spec, a.metric, a.seed)?;
    if let Some(path) = &a.labels {
        let Some(labels) = &s.labels else {
            return Err(Failure::usage("this kind has no labels"));
        };
        write_ivecs(
            path,
            &IdTable {
                values: labels.clone(),
                width: 1,
            },
        )?;
    }
    write_fvecs(&a.out, s.data.points())?;
    Ok(())
}

// knn

#[derive(Args)]
pub struct KnnArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long)]
    k: usize,
    /// Search these rows against the data instead of the data itself.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Clustering-based approximate 1-NN (4 sqrt(m) clusters, 10 probes).
    #[arg(long)]
    approx: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn knn(a: KnnArgs) -> Res {
    let data = load(&a.data, a.metric)?;
    let table = match (&a.queries, a.approx) {
        (Some(_), true) => return Err(Failure::usage("--approx works on the data itself, not on --queries")),
        (None, true) => {
            if a.k != 1 {
                return Err(Failure::usage("--approx produces a 1-NN table; use --k 1"));
            }
            approximate_1nn(&data, &ApproxConfig::with_seed(a.seed))?
        }
        (Some(q), false) => exact_knn_queries(&data, &read_fvecs(q)?, a.k)?,
        (None, false) => exact_knn(&data, a.k)?,
    };
    write_neighbors(&a.out, &table)?;
    Ok(())
}

// cluster

#[derive(Clone, Copy, ValueEnum)]
pub enum Algo {
    Kmeans,
    Spherical,
}

#[derive(Args)]
pub struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long, value_enum, default_value = "kmeans")]
    algo: Algo,
    #[arg(long, conflicts_with = "t")]
    clusters: Option<usize>,
    /// Cluster count as `round(t * sqrt(m))`.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Assignment, one cluster id per record.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    centroids: Option<PathBuf>,
}

pub fn cluster(a: ClusterArgs) -> Res {
    let data = load(&a.data, a.metric)?;
    let l = match a.clusters {
        Some(l) => l,
        None => default_num_clusters(data.len(), a.t.unwrap_or(1.0)),
    };
    let variant = match a.algo {
        Algo::Kmeans => KMeansVariant::Standard,
        Algo::Spherical => KMeansVariant::Spherical,
    };
    let run = kmeans_run(&data, &KMeansConfig::new(variant, l, a.iters, a.seed))?;
    if let (Some(path), Some(c)) = (&a.centroids, run.clustering.centroids()) {
        write_fvecs(path, c)?;
    }
    write_assignment(&a.out, &run.clustering, AssignmentLayout::PerPoint)?;
    println!(
        "{}",
        json!({
            "clusters": l,
            "iterations_run": run.iterations_run,
            "converged": run.converged,
            "objective": run.objective.last(),
        })
    );
    Ok(())
}

// quality

#[derive(Clone, Copy, ValueEnum)]
pub enum Flavor {
    SingleLinkage,
    CentroidLinkage,
}

#[derive(Args)]
pub struct QualityArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long)]
    assign: PathBuf,
    /// Neighbor table; computed exactly when omitted.
    #[arg(long)]
    nn: Option<PathBuf>,
    /// The table lists each point as its own first neighbor.
    #[arg(long)]
    nn_includes_self: bool,
    /// Any of nsm, dunn, db, db-weighted.
    #[arg(long, default_value = "nsm")]
    measures: String,
    #[arg(long, value_enum, default_value = "single-linkage")]
    dunn_flavor: Flavor,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn quality(a: QualityArgs) -> Res {
    let data = load(&a.data, a.metric)?;
    let c = read_assignment(&a.assign, None, None)?;
    let measures = parse_names(&a.measures);
    let nn: Option<NeighborTable> = match &a.nn {
        Some(p) => Some(read_neighbors(p, a.nn_includes_self)?),
        None if measures.iter().any(|m| m == "nsm") => Some(exact_knn(&data, 1)?),
        None => None,
    };
    let dunn = DunnConfig {
        flavor: match a.dunn_flavor {
            Flavor::SingleLinkage => DunnFlavor::SingleLinkage,
            Flavor::CentroidLinkage => DunnFlavor::CentroidLinkage,
        },
        seed: a.seed,
        ..DunnConfig::default()
    };
    let mut values = serde_json::Map::new();
    for m in &measures {
        let v = match m.as_str() {
            "nsm" => clustering_nsm(nn.as_ref().expect("table loaded for nsm"), &c)?,
            "dunn" => dunn_with(&data, &c, &dunn, nn.as_ref())?.value,
            "db" => db_index(&data, &c, DbWeighting::Uniform)?,
            "db-weighted" | "db_weighted" => db_index(&data, &c, DbWeighting::BySize)?,
            other => return Err(Error::UnknownMeasure(other.into()).into()),
        };
        values.insert(m.replace('-', "_"), json!(v));
    }
    let meta = RunMetadata::new(
        Some(a.seed),
        json!({
            "data": a.data, "metric": a.metric, "assign": a.assign, "nn": a.nn,
            "measures": measures, "dunn_flavor": dunn.flavor,
        }),
    );
    write_json(
        &a.out,
        &json!({ "metadata": meta, "points": data.len(), "clusters": c.num_clusters(), "measures": values }),
    )?;
    Ok(())
}

// point-nsm

#[derive(Args)]
pub struct PointNsmArgs {
    /// Needed when --nn is omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long)]
    nn: Option<PathBuf>,
    #[arg(long)]
    nn_includes_self: bool,
    #[arg(long)]
    radius: usize,
    #[arg(long, default_value_t = 0.05)]
    sample: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `mean` and any `qA` lower quantiles, printed as JSON.
    #[arg(long, default_value = "mean,q0.1")]
    stats: String,
    /// Per-point values.
    #[arg(long)]
    out: PathBuf,
}

pub fn point_nsm(a: PointNsmArgs) -> Res {
    let nn = match (&a.nn, &a.data) {
        (Some(p), _) => read_neighbors(p, a.nn_includes_self)?,
        (None, Some(d)) => exact_knn(&load(d, a.metric)?, a.radius.saturating_sub(1).max(1))?,
        (None, None) => return Err(Failure::usage("give --nn or --data")),
    };
    let mut levels = Vec::new();
    let stats = parse_names(&a.stats);
    for s in &stats {
        if s == "mean" {
            continue;
        }
        let level = s
            .strip_prefix('q')
            .and_then(|q| q.parse::<f64>().ok())
            .ok_or_else(|| Failure::usage(format!("unknown statistic `{s}`")))?;
        levels.push(level);
    }
    let dist = point_nsm_distribution(&nn, a.radius, a.sample, a.seed, &levels)?;
    let rows: Vec<PointRow> = dist
        .ids
        .iter()
        .zip(&dist.values)
        .map(|(&id, &point_nsm)| PointRow { id, point_nsm })
        .collect();
    write_csv(&a.out, &rows)?;
    let mut summary = serde_json::Map::new();
    summary.insert("n".into(), json!(dist.values.len()));
    for s in &stats {
        if s == "mean" {
            summary.insert("mean".into(), json!(dist.mean));
        } else {
            let level: f64 = s[1..].parse().expect("checked above");
            summary.insert(s.clone(), json!(dist.quantile(level)));
        }
    }
    println!("{}", serde_json::Value::Object(summary));
    Ok(())
}

#[derive(serde::Serialize)]
struct PointRow {
    id: usize,
    point_nsm: f64,
}

// ivf-eval

#[derive(Args)]
pub struct IvfEvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long)]
    queries: PathBuf,
    /// Exact neighbors of every query, at least max(k) per row.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    assign: PathBuf,
    /// Routing centroids; cluster means when omitted.
    #[arg(long)]
    centroids: Option<PathBuf>,
    #[arg(long, default_value = "5,10")]
    k: String,
    /// Probe counts, e.g. `1..8` (inclusive) or `1,2,4`.
    #[arg(long, default_value = "1")]
    nprobe: String,
    #[arg(long)]
    out: PathBuf,
}

pub fn ivf_eval(a: IvfEvalArgs) -> Res {
    let data = load(&a.data, a.metric)?;
    let queries = read_fvecs(&a.queries)?;
    let gt = read_ivecs(&a.gt)?;
    let gt = NeighborTable::imported_queries(gt.values, gt.width, data.len())?;
    let mut c = read_assignment(&a.assign, None, None)?;
    if let Some(p) = &a.centroids {
        c = c.with_centroids(read_fvecs(p)?)?;
    }
    let index = IvfIndex::build(&data, &c)?;
    let k = parse_list(&a.k).map_err(Failure::usage)?;
    let probes = parse_list(&a.nprobe).map_err(Failure::usage)?;
    let rows = index.evaluate(&queries, &gt, &k, &probes)?;
    write_csv(&a.out, &rows)?;
    Ok(())
}

// correlate

#[derive(Args)]
pub struct CorrelateArgs {
    /// CSV with a header row.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value = "accuracy")]
    x: String,
    /// Measure column, named as in run tables (nsm, dunn, db, ...); db and
    /// db_weighted are negated.
    #[arg(long)]
    y: String,
    /// Columns whose values split the table into separate correlations.
    #[arg(long, default_value = "dataset,k,nprobe")]
    group_by: String,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn number(row: &BTreeMap<String, String>, col: &str) -> Result<Option<f64>, Failure> {
    let Some(v) = row.get(col) else {
        return Err(Error::Format(format!("no column `{col}`")).into());
    };
    if v.is_empty() {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| Error::Format(format!("column `{col}`: `{v}` is not a number")).into())
}

pub fn correlate(a: CorrelateArgs) -> Res {
    measure_direction(&a.y)?;
    let rows: Vec<BTreeMap<String, String>> = io::read_csv(&a.table)?;
    let keys: Vec<String> = parse_names(&a.group_by)
        .into_iter()
        .filter(|c| rows.first().is_some_and(|r| r.contains_key(c)))
        .collect();
    let mut groups: BTreeMap<Vec<String>, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &rows {
        let (Some(x), Some(y)) = (number(r, &a.x)?, number(r, &a.y)?) else {
            continue;
        };
        let key = keys.iter().map(|c| r[c].clone()).collect();
        let g = groups.entry(key).or_default();
        g.0.push(x);
        g.1.push(y);
    }
    let perm = PermutationConfig {
        draws: a.draws,
        seed: a.seed,
    };
    let mut out: Vec<CorrelationRow> = Vec::new();
    for (key, (x, y)) in groups {
        let mut row = correlation_row(&x, &y, &a.y, &perm)?;
        row.target = a.x.clone();
        for (col, v) in keys.iter().zip(&key) {
            match col.as_str() {
                "dataset" => row.dataset = v.clone(),
                "k" => row.k = v.parse().ok(),
                "nprobe" => row.nprobe = v.parse().ok(),
                _ => {}
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::Empty.into());
    }
    write_csv(&a.out, &out)?;
    Ok(())
}

// protocol

#[derive(Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Dataset name in the reports; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Query rows; otherwise queries are held out of the data.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    held_out: usize,
    /// Class label per point, for mutual information and homogeneity.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, default_value = "5,10")]
    k: String,
    /// Probe counts; defaults to 1.
    #[arg(long, conflicts_with = "sweep")]
    nprobe: Option<String>,
    /// Probe 1..=ceil(0.05 L) and L.
    #[arg(long)]
    sweep: bool,
    /// Skip the approximate-neighbor NSM.
    #[arg(long)]
    no_approx: bool,
    #[arg(long, value_enum, default_value = "single-linkage")]
    dunn_flavor: Flavor,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
}

pub fn protocol(a: ProtocolArgs) -> Res {
    let data = load(&a.data, a.metric)?;
    let queries = a.queries.as_deref().map(read_fvecs).transpose()?;
    let labels = match &a.labels {
        Some(p) => Some(assignment_from_table(&read_ivecs(p)?, None)?),
        None => None,
    };
    let name = a.name.clone().unwrap_or_else(|| {
        a.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    });
    let defaults = ProtocolConfig::default();
    let cfg = ProtocolConfig {
        seed: a.seed,
        cluster_factor: a.t,
        num_clusters: a.clusters,
        ks: parse_list(&a.k).map_err(Failure::usage)?,
        nprobe: match &a.nprobe {
            Some(p) => parse_list(p).map_err(Failure::usage)?,
            None => Vec::new(),
        },
        sweep: a.sweep,
        held_out_queries: a.held_out,
        approximate: (!a.no_approx).then(|| ApproxConfig::with_seed(a.seed)),
        dunn: DunnConfig {
            flavor: match a.dunn_flavor {
                Flavor::SingleLinkage => DunnFlavor::SingleLinkage,
                Flavor::CentroidLinkage => DunnFlavor::CentroidLinkage,
            },
            seed: a.seed,
            ..defaults.dunn.clone()
        },
        permutation: PermutationConfig {
            draws: a.draws,
            seed: a.seed,
        },
        ..defaults
    };
    let out = run_protocol(&name, &data, queries.as_ref(), labels.as_deref(), &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    write_csv(a.out.join("runs.csv"), &out.runs)?;
    write_csv(a.out.join("pairs.csv"), &out.pairs())?;
    write_csv(a.out.join("correlations.csv"), &out.correlations)?;
    let meta = RunMetadata::new(
        Some(a.seed),
        json!({
            "data": a.data, "metric": a.metric, "queries": a.queries, "labels": a.labels,
            "protocol": cfg,
        }),
    );
    write_json(
        a.out.join("report.json"),
        &json!({
            "metadata": meta,
            "dataset": out.dataset,
            "base_points": out.base_points,
            "queries": out.queries,
            "held_out": out.held_out,
            "num_clusters": out.num_clusters,
            "nprobe": out.nprobe,
            "correlations": out.correlations,
            "measure_errors": out.measure_errors,
        }),
    )?;
    Ok(())
}

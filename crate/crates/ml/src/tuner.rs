//! MLP hyperparameter space, (sub)grid search with a resumable journal,
//! accuracy/MSE banding and top-k reports.
//!
//! Enumeration order, outermost first: architecture (depth ascending, then
//! layer sizes lexicographically with the first hidden layer most
//! significant, sizes in the order listed), activation, solver, alpha, tol.

use crate::mlp::{architecture_string, Activation, MlpConfig, Solver};
use crate::model::{fit_and_report, ModelSpec};
use crate::{invalid, Dataset, Result, TrainReport};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub min_layers: usize,
    pub max_layers: usize,
    pub neurons: Vec<usize>,
    /// only architectures with the same width in every hidden layer
    pub uniform_only: bool,
    pub activations: Vec<Activation>,
    pub solvers: Vec<Solver>,
    pub alphas: Vec<f64>,
    pub tols: Vec<f64>,
}

impl SearchSpace {
    /// The 702,900-configuration space of the reference study.
    pub fn standard() -> SearchSpace {
        SearchSpace {
            min_layers: 1,
            max_layers: 5,
            neurons: vec![5, 10, 15, 20, 25],
            uniform_only: false,
            activations: vec![Activation::Sigmoid, Activation::Relu, Activation::Tanh],
            solvers: vec![Solver::Sgd, Solver::Adam, Solver::Adadelta],
            alphas: vec![0.01, 0.05, 0.001, 0.0001],
            tols: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        }
    }

    /// 25 uniform architectures (1–5 layers of 5–25 neurons) with every
    /// other hyperparameter taken from `base`.
    pub fn uniform(base: &MlpConfig) -> SearchSpace {
        SearchSpace {
            uniform_only: true,
            activations: vec![base.activation],
            solvers: vec![base.solver],
            alphas: vec![base.alpha],
            tols: vec![base.tol],
            ..SearchSpace::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_layers == 0 || self.min_layers > self.max_layers {
            return Err(invalid("layer range must satisfy 1 <= min <= max"));
        }
        if self.neurons.is_empty()
            || self.neurons.contains(&0)
            || self.activations.is_empty()
            || self.solvers.is_empty()
            || self.alphas.is_empty()
            || self.tols.is_empty()
        {
            return Err(invalid(
                "every hyperparameter axis needs at least one positive value",
            ));
        }
        Ok(())
    }

    fn archs_at_depth(&self, d: usize) -> u64 {
        if self.uniform_only {
            self.neurons.len() as u64
        } else {
            (self.neurons.len() as u64).pow(d as u32)
        }
    }

    pub fn n_architectures(&self) -> u64 {
        (self.min_layers..=self.max_layers)
            .map(|d| self.archs_at_depth(d))
            .sum()
    }

    fn n_per_architecture(&self) -> u64 {
        (self.activations.len() * self.solvers.len() * self.alphas.len() * self.tols.len()) as u64
    }

    /// Closed-form size of the space.
    pub fn count(&self) -> u64 {
        self.n_architectures() * self.n_per_architecture()
    }

    pub fn architecture(&self, mut a: u64) -> Vec<usize> {
        let k = self.neurons.len() as u64;
        for d in self.min_layers..=self.max_layers {
            let n = self.archs_at_depth(d);
            if a < n {
                if self.uniform_only {
                    return vec![self.neurons[a as usize]; d];
                }
                let mut layers = vec![0; d];
                for slot in layers.iter_mut().rev() {
                    *slot = self.neurons[(a % k) as usize];
                    a /= k;
                }
                return layers;
            }
            a -= n;
        }
        panic!("architecture index out of range");
    }

    /// Configuration number `index` in enumeration order; fields outside the
    /// space come from `base`.
    pub fn config_at(&self, index: u64, base: &MlpConfig) -> MlpConfig {
        assert!(
            index < self.count(),
            "index {index} outside space of {}",
            self.count()
        );
        let mut i = index;
        let mut take = |n: usize| {
            let r = (i % n as u64) as usize;
            i /= n as u64;
            r
        };
        let tol = self.tols[take(self.tols.len())];
        let alpha = self.alphas[take(self.alphas.len())];
        let solver = self.solvers[take(self.solvers.len())];
        let activation = self.activations[take(self.activations.len())];
        MlpConfig {
            hidden_layers: self.architecture(i),
            activation,
            solver,
            alpha,
            tol,
            ..base.clone()
        }
    }

    /// Every configuration exactly once, lazily.
    pub fn iter<'a>(&'a self, base: &'a MlpConfig) -> impl Iterator<Item = MlpConfig> + 'a {
        (0..self.count()).map(move |i| self.config_at(i, base))
    }
}

/// Closed-form count and lazy iterator over `space`.
pub fn enumerate_space<'a>(
    space: &'a SearchSpace,
    base: &'a MlpConfig,
) -> (u64, impl Iterator<Item = MlpConfig> + 'a) {
    (space.count(), space.iter(base))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    Full,
    RandomSample { n: usize, seed: u64 },
}

/// Space indices a budget selects, ascending.
pub fn select_indices(space: &SearchSpace, budget: Budget) -> Vec<u64> {
    let total = space.count();
    match budget {
        Budget::Full => (0..total).collect(),
        Budget::RandomSample { n, seed } => {
            let n = n.min(total as usize);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<u64> = sample(&mut rng, total as usize, n)
                .into_iter()
                .map(|i| i as u64)
                .collect();
            v.sort_unstable();
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ok { report: TrainReport },
    Failed { reason: String },
}

/// One journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord {
    pub hash: String,
    pub index: u64,
    pub config: MlpConfig,
    pub n_params: usize,
    pub outcome: Outcome,
}

impl TuneRecord {
    pub fn report(&self) -> Option<&TrainReport> {
        match &self.outcome {
            Outcome::Ok { report } => Some(report),
            Outcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// 1-based
    pub rank: usize,
    pub record: TuneRecord,
}

pub fn config_hash(cfg: &MlpConfig) -> String {
    fgm_core::content_hash(
        serde_json::to_string(cfg)
            .expect("config serializes")
            .as_bytes(),
    )
}

/// Weights and biases of an MLP with the given widths.
pub fn parameter_count(n_in: usize, hidden: &[usize], n_out: usize) -> usize {
    let mut sizes = vec![n_in];
    sizes.extend_from_slice(hidden);
    sizes.push(n_out);
    sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

/// Accuracy descending, then MSE ascending, then fewer parameters, then
/// space index; failed runs last, by index.
pub fn rank_order(a: &TuneRecord, b: &TuneRecord) -> Ordering {
    match (a.report(), b.report()) {
        (Some(ra), Some(rb)) => rb
            .accuracy
            .total_cmp(&ra.accuracy)
            .then(ra.mse.total_cmp(&rb.mse))
            .then(a.n_params.cmp(&b.n_params))
            .then(a.index.cmp(&b.index)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    }
}

pub fn rank(mut records: Vec<TuneRecord>) -> Vec<TuneResult> {
    records.sort_by(rank_order);
    records
        .into_iter()
        .enumerate()
        .map(|(i, record)| TuneResult {
            rank: i + 1,
            record,
        })
        .collect()
}

fn train_one(index: u64, cfg: MlpConfig, train: &Dataset, test: &Dataset) -> TuneRecord {
    let n_params = parameter_count(train.n_inputs(), &cfg.hidden_layers, train.n_targets());
    let outcome = match fit_and_report(&ModelSpec::Mlp(cfg.clone()), train, test) {
        Ok((_, ev)) => Outcome::Ok { report: ev.report },
        Err(e) => Outcome::Failed {
            reason: e.to_string(),
        },
    };
    TuneRecord {
        hash: config_hash(&cfg),
        index,
        config: cfg,
        n_params,
        outcome,
    }
}

/// Records already in a journal, keyed by config hash. A torn final line
/// from an interrupted run is ignored.
pub fn read_journal(path: &Path) -> std::io::Result<HashMap<String, TuneRecord>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    for line in f.lines() {
        let line = line?;
        if let Ok(r) = serde_json::from_str::<TuneRecord>(&line) {
            out.insert(r.hash.clone(), r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SearchOptions<'a> {
    pub workers: usize,
    pub journal: Option<&'a Path>,
    /// stop after this many new trainings (for tests of resumption)
    pub limit: Option<usize>,
}

impl Default for SearchOptions<'_> {
    fn default() -> Self {
        Self {
            workers: 1,
            journal: None,
            limit: None,
        }
    }
}

/// Train every selected configuration on `train`, score on `test`, rank.
/// Completed configurations found in the journal are reused, new ones are
/// appended to it in index order by this thread alone.
pub fn grid_search(
    space: &SearchSpace,
    base: &MlpConfig,
    train: &Dataset,
    test: &Dataset,
    budget: Budget,
    opts: &SearchOptions<'_>,
) -> Result<Vec<TuneResult>> {
    space.validate()?;
    base.validate()?;
    let mut done = match opts.journal {
        Some(p) => read_journal(p)?,
        None => HashMap::new(),
    };
    let selected: Vec<(u64, MlpConfig)> = select_indices(space, budget)
        .into_iter()
        .map(|i| (i, space.config_at(i, base)))
        .collect();
    let mut pending: Vec<&(u64, MlpConfig)> = selected
        .iter()
        .filter(|(_, c)| !done.contains_key(&config_hash(c)))
        .collect();
    if let Some(l) = opts.limit {
        pending.truncate(l);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    let mut journal = match opts.journal {
        Some(p) => {
            let torn = std::fs::read(p).is_ok_and(|b| b.last().is_some_and(|&c| c != b'\n'));
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)?;
            if torn {
                // finish the partial line so the next record starts cleanly
                writeln!(f)?;
            }
            Some(f)
        }
        None => None,
    };
    for chunk in pending.chunks(4 * opts.workers.max(1)) {
        let recs: Vec<TuneRecord> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(i, c)| train_one(*i, c.clone(), train, test))
                .collect()
        });
        for r in recs {
            if let Some(f) = journal.as_mut() {
                writeln!(
                    f,
                    "{}",
                    serde_json::to_string(&r).expect("record serializes")
                )?;
            }
            done.insert(r.hash.clone(), r);
        }
        if let Some(f) = journal.as_mut() {
            f.flush()?;
        }
    }
    let records = selected
        .iter()
        .filter_map(|(i, c)| {
            done.get(&config_hash(c)).map(|r| TuneRecord {
                index: *i,
                ..r.clone()
            })
        })
        .collect();
    Ok(rank(records))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub configs: u64,
    /// mean wall-clock training time of the probe configurations
    pub seconds_per_config: f64,
    pub workers: usize,
}

impl CostEstimate {
    pub fn total_seconds(&self) -> f64 {
        self.configs as f64 * self.seconds_per_config / self.workers.max(1) as f64
    }
}

/// Time `probes` randomly drawn configurations and extrapolate to every
/// configuration the budget selects.
pub fn estimate_cost(
    space: &SearchSpace,
    base: &MlpConfig,
    train: &Dataset,
    test: &Dataset,
    budget: Budget,
    probes: usize,
    workers: usize,
) -> Result<CostEstimate> {
    space.validate()?;
    let configs = match budget {
        Budget::Full => space.count(),
        Budget::RandomSample { n, .. } => (n as u64).min(space.count()),
    };
    let picks = select_indices(
        space,
        Budget::RandomSample {
            n: probes.max(1),
            seed: 0,
        },
    );
    let start = std::time::Instant::now();
    for &i in &picks {
        train_one(i, space.config_at(i, base), train, test);
    }
    Ok(CostEstimate {
        configs,
        seconds_per_config: start.elapsed().as_secs_f64() / picks.len() as f64,
        workers,
    })
}

/// 0 is the worst band, 4 the best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Bands {
    pub accuracy: u8,
    pub mse: u8,
}

pub const ACCURACY_BAND_EDGES: [f64; 4] = [50.0, 60.0, 80.0, 90.0];
pub const MSE_BAND_EDGES: [f64; 4] = [0.01, 0.005, 0.001, 0.0005];

/// Values on a band edge go to the better band.
pub fn classify_bands(accuracy: f64, mse: f64) -> Bands {
    let a = ACCURACY_BAND_EDGES
        .iter()
        .filter(|&&e| accuracy >= e)
        .count();
    let m = MSE_BAND_EDGES.iter().filter(|&&e| mse <= e).count();
    Bands {
        accuracy: a as u8,
        mse: m as u8,
    }
}

pub fn accuracy_band_label(b: u8) -> &'static str {
    ["<50", "50-60", "60-80", "80-90", ">=90"][b.min(4) as usize]
}

pub fn mse_band_label(b: u8) -> &'static str {
    [
        ">0.01",
        "0.005-0.01",
        "0.001-0.005",
        "0.0005-0.001",
        "<=0.0005",
    ][b.min(4) as usize]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopRow {
    pub rank: usize,
    pub layers: usize,
    pub configuration: String,
    pub activation: Activation,
    pub solver: Solver,
    pub alpha: f64,
    pub tol: f64,
    pub accuracy: f64,
    pub mse: f64,
}

/// Best `k` successful results (fewer if there are fewer).
pub fn report_top_k(results: &[TuneResult], k: usize) -> Vec<TopRow> {
    results
        .iter()
        .filter_map(|r| r.record.report().map(|rep| (r, rep)))
        .take(k)
        .map(|(r, rep)| {
            let c = &r.record.config;
            TopRow {
                rank: r.rank,
                layers: c.hidden_layers.len(),
                configuration: architecture_string(&c.hidden_layers),
                activation: c.activation,
                solver: c.solver,
                alpha: c.alpha,
                tol: c.tol,
                accuracy: rep.accuracy,
                mse: rep.mse,
            }
        })
        .collect()
}

const TOP_HEADER: [&str; 9] = [
    "rank",
    "hidden_layers",
    "configuration",
    "activation",
    "solver",
    "alpha",
    "tol",
    "accuracy",
    "mse",
];

fn row_fields(r: &TopRow) -> [String; 9] {
    [
        r.rank.to_string(),
        r.layers.to_string(),
        r.configuration.clone(),
        r.activation.to_string(),
        r.solver.to_string(),
        r.alpha.to_string(),
        r.tol.to_string(),
        format!("{:.2}", r.accuracy),
        format!("{:.4}", r.mse),
    ]
}

pub fn render_top_csv(rows: &[TopRow]) -> String {
    let mut s = TOP_HEADER.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&row_fields(r).join(","));
        s.push('\n');
    }
    s
}

pub fn render_top_text(rows: &[TopRow]) -> String {
    let cells: Vec<[String; 9]> = rows.iter().map(row_fields).collect();
    let widths: Vec<usize> = (0..9)
        .map(|c| {
            cells
                .iter()
                .map(|r| r[c].len())
                .chain(std::iter::once(TOP_HEADER[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut s = String::new();
    let line = |s: &mut String, f: &dyn Fn(usize) -> String| {
        let parts: Vec<String> = (0..9)
            .map(|c| format!("{:>w$}", f(c), w = widths[c]))
            .collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut s, &|c| TOP_HEADER[c].to_string());
    for r in &cells {
        line(&mut s, &|c| r[c].clone());
    }
    s
}

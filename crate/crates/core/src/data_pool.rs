//! Datasets, pool partitioning and the simulated labelling oracle.
//!
//! Example ids are dense indices into the [`Dataset`]. A [`PoolState`] splits
//! the non-test ids into a labeled set and an unlabeled set, and the
//! [`Oracle`] hands out hidden labels one query at a time.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// A labelled example set with dense ids `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    num_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major features. Class names default to the
    /// class indices.
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        let class_names = (0..num_classes).map(|c| c.to_string()).collect();
        Self::with_names(dim, features, labels, class_names, None)
    }

    pub fn with_names(
        dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("feature dimension must be positive".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::Validation(format!(
                "{} feature values do not fill {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite feature value in example {}",
                i / dim
            )));
        }
        let num_classes = class_names.len();
        if num_classes < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 classes, found {num_classes}"
            )));
        }
        let mut seen = vec![false; num_classes];
        for (id, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::Validation(format!(
                    "example {id} has label {y} but only {num_classes} classes exist"
                )));
            }
            seen[y] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!("class {c} has no examples")));
        }
        let feature_names =
            feature_names.unwrap_or_else(|| (0..dim).map(|j| format!("x{j}")).collect());
        if feature_names.len() != dim {
            return Err(Error::Validation("feature name count differs from dim".into()));
        }
        Ok(Dataset {
            dim,
            num_classes,
            features,
            labels,
            class_names,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Feature row of example `id`. Panics on an out-of-range id; use
    /// [`Dataset::check_id`] on untrusted input.
    pub fn row(&self, id: usize) -> &[f64] {
        &self.features[id * self.dim..(id + 1) * self.dim]
    }

    pub fn label(&self, id: usize) -> usize {
        self.labels[id]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_name(&self, class: usize) -> &str {
        &self.class_names[class]
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownId(id))
        }
    }

    /// Ids grouped by class, each group ascending.
    pub fn ids_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes];
        for (id, &y) in self.labels.iter().enumerate() {
            groups[y].push(id);
        }
        groups
    }

    /// Writes the dataset as CSV: feature columns, then a `label` column
    /// holding class names. Floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        w.write_record(&header)?;
        for id in 0..self.len() {
            let mut record: Vec<String> = self.row(id).iter().map(|v| format!("{v:?}")).collect();
            record.push(self.class_names[self.labels[id]].clone());
            w.write_record(&record)?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Loads a CSV dataset with a header row, numeric feature columns and a
/// final label column. Labels become dense class indices by first appearance.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let columns = header.len();
    if columns < 2 {
        return Err(Error::Schema {
            line: 1,
            expected: 2,
            found: columns,
        });
    }
    let dim = columns - 1;
    let feature_names: Vec<String> = header.iter().take(dim).map(str::to_string).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut class_names = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns {
            return Err(Error::Schema {
                line,
                expected: columns,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().take(dim).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {} value {field:?} is not a number", j + 1),
            })?;
            features.push(v);
        }
        let name = &record[dim];
        let next = class_names.len();
        let y = *class_index.entry(name.to_string()).or_insert_with(|| {
            class_names.push(name.to_string());
            next
        });
        labels.push(y);
    }
    if class_names.len() < 2 {
        return Err(Error::Validation(format!(
            "dataset needs at least 2 classes, found {}",
            class_names.len()
        )));
    }
    Dataset::with_names(dim, features, labels, class_names, Some(feature_names))
}

/// Isotropic Gaussian clusters, each assigned to a class.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub per_cluster: usize,
    pub dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub class_of_cluster: Vec<usize>,
    pub spread: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }

    /// Two well separated classes at (-10, 0) and (10, 0).
    pub fn two_gaussian(per_cluster: usize, seed: u64) -> Self {
        SyntheticSpec {
            per_cluster,
            dim: 2,
            centers: vec![vec![-10.0, 0.0], vec![10.0, 0.0]],
            class_of_cluster: vec![0, 1],
            spread: 0.5,
            seed,
        }
    }

    /// Three clusters: class 0 at the origin, class 1 split between (4, 0)
    /// and (-2, 4). A model fit to the origin and one class-1 cluster puts
    /// the other class-1 cluster confidently on the wrong side, well away
    /// from the boundary, yet all three are linearly separable.
    pub fn hidden_cluster(per_cluster: usize, seed: u64) -> Self {
        SyntheticSpec {
            per_cluster,
            dim: 2,
            centers: vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![-2.0, 4.0]],
            class_of_cluster: vec![0, 1, 1],
            spread: 0.5,
            seed,
        }
    }

    /// `k` clusters evenly spaced on a circle of radius 10 in the first two
    /// coordinates, classes alternating. `k = 2` and `k = 3` give the
    /// two-Gaussian and hidden-cluster layouts instead.
    pub fn with_clusters(k: usize, per_cluster: usize, dim: usize, seed: u64) -> Self {
        match (k, dim) {
            (2, 2) => Self::two_gaussian(per_cluster, seed),
            (3, 2) => Self::hidden_cluster(per_cluster, seed),
            _ => {
                let centers = (0..k)
                    .map(|i| {
                        let angle = std::f64::consts::TAU * i as f64 / k.max(1) as f64;
                        let mut c = vec![0.0; dim];
                        c[0] = 10.0 * angle.cos();
                        if dim > 1 {
                            c[1] = 10.0 * angle.sin();
                        }
                        c
                    })
                    .collect();
                SyntheticSpec {
                    per_cluster,
                    dim,
                    centers,
                    class_of_cluster: (0..k).map(|i| i % 2).collect(),
                    spread: 0.5,
                    seed,
                }
            }
        }
    }
}

/// Draws `per_cluster` examples around each center, cluster by cluster.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.centers.is_empty() {
        return Err(Error::Validation("synthetic spec has zero clusters".into()));
    }
    if spec.per_cluster == 0 {
        return Err(Error::Validation("per_cluster must be at least 1".into()));
    }
    if !(spec.spread > 0.0 && spec.spread.is_finite()) {
        return Err(Error::Validation(format!(
            "spread must be positive, got {}",
            spec.spread
        )));
    }
    if spec.class_of_cluster.len() != spec.centers.len() {
        return Err(Error::Validation(format!(
            "{} clusters but {} class assignments",
            spec.centers.len(),
            spec.class_of_cluster.len()
        )));
    }
    if let Some(i) = spec.centers.iter().position(|c| c.len() != spec.dim) {
        return Err(Error::Validation(format!(
            "center {i} has length {}, expected {}",
            spec.centers[i].len(),
            spec.dim
        )));
    }
    let noise = Normal::new(0.0, spec.spread).map_err(|e| Error::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.per_cluster * spec.centers.len();
    let mut features = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for (center, &class) in spec.centers.iter().zip(&spec.class_of_cluster) {
        for _ in 0..spec.per_cluster {
            features.extend(center.iter().map(|c| c + noise.sample(&mut rng)));
            labels.push(class);
        }
    }
    Dataset::new(spec.dim, features, labels)
}

/// Labeled/unlabeled partition of the pool ids, plus the query history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    labeled: BTreeSet<usize>,
    unlabeled: BTreeSet<usize>,
    query_log: Vec<(usize, usize)>,
}

impl PoolState {
    pub fn new(labeled: BTreeSet<usize>, unlabeled: BTreeSet<usize>) -> Result<Self> {
        if let Some(id) = labeled.intersection(&unlabeled).next() {
            return Err(Error::Validation(format!(
                "example {id} is both labeled and unlabeled"
            )));
        }
        Ok(PoolState {
            labeled,
            unlabeled,
            query_log: Vec::new(),
        })
    }

    pub fn labeled(&self) -> &BTreeSet<usize> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn labeled_ids(&self) -> Vec<usize> {
        self.labeled.iter().copied().collect()
    }

    pub fn unlabeled_ids(&self) -> Vec<usize> {
        self.unlabeled.iter().copied().collect()
    }

    /// All pool ids (L ∪ U), ascending.
    pub fn pool_ids(&self) -> Vec<usize> {
        self.labeled.union(&self.unlabeled).copied().collect()
    }

    pub fn pool_size(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    /// `(iteration, id)` pairs in query order, iterations counting from 1.
    pub fn query_log(&self) -> &[(usize, usize)] {
        &self.query_log
    }

    pub fn was_queried(&self, id: usize) -> bool {
        self.labeled.contains(&id)
    }
}

/// Simulated labelling oracle backed by the dataset's own labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Oracle {
    hidden: BTreeMap<usize, usize>,
    query_count: usize,
    budget: Option<usize>,
}

impl Oracle {
    pub fn new(hidden: BTreeMap<usize, usize>, budget: Option<usize>) -> Self {
        Oracle {
            hidden,
            query_count: 0,
            budget,
        }
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn set_budget(&mut self, budget: Option<usize>) {
        self.budget = budget;
    }

    pub fn remaining(&self) -> Option<usize> {
        self.budget.map(|b| b.saturating_sub(self.query_count))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub seed: u64,
    pub init_labeled_per_class: usize,
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            seed: 0,
            init_labeled_per_class: 1,
            test_fraction: 0.2,
        }
    }
}

/// Stratified split into test ids and a pool whose labeled set starts with
/// `init_labeled_per_class` ids per class. The oracle holds the hidden labels
/// of every unlabeled pool id.
pub fn split_pool(
    dataset: &Dataset,
    cfg: &SplitConfig,
    budget: Option<usize>,
) -> Result<(PoolState, Vec<usize>, Oracle)> {
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "test_fraction must lie in (0, 1), got {}",
            cfg.test_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut test = Vec::new();
    let mut labeled = BTreeSet::new();
    let mut unlabeled = BTreeSet::new();
    for (class, mut ids) in dataset.ids_by_class().into_iter().enumerate() {
        ids.shuffle(&mut rng);
        let n_test = (cfg.test_fraction * ids.len() as f64).round() as usize;
        let available = ids.len() - n_test;
        if available < cfg.init_labeled_per_class {
            return Err(Error::Validation(format!(
                "class {class} has {available} pool examples after the test split, \
                 {} short of init_labeled_per_class = {}",
                cfg.init_labeled_per_class - available,
                cfg.init_labeled_per_class
            )));
        }
        test.extend_from_slice(&ids[..n_test]);
        let rest = &ids[n_test..];
        labeled.extend(rest[..cfg.init_labeled_per_class].iter().copied());
        unlabeled.extend(rest[cfg.init_labeled_per_class..].iter().copied());
    }
    test.sort_unstable();
    let hidden = unlabeled.iter().map(|&id| (id, dataset.label(id))).collect();
    let pool = PoolState::new(labeled, unlabeled)?;
    Ok((pool, test, Oracle::new(hidden, budget)))
}

/// Moves `id` from U to L and returns its hidden label.
pub fn query_oracle(pool: &mut PoolState, oracle: &mut Oracle, id: usize) -> Result<usize> {
    if pool.labeled.contains(&id) {
        return Err(Error::DuplicateQuery(id));
    }
    if !pool.unlabeled.contains(&id) {
        return Err(Error::UnknownId(id));
    }
    if let Some(budget) = oracle.budget {
        if oracle.query_count >= budget {
            return Err(Error::BudgetExhausted { budget });
        }
    }
    let label = *oracle.hidden.get(&id).ok_or(Error::UnknownId(id))?;
    pool.unlabeled.remove(&id);
    pool.labeled.insert(id);
    oracle.query_count += 1;
    pool.query_log.push((oracle.query_count, id));
    Ok(label)
}

//! K-fold cross-validation of pattern cohesion and parameter sweeps.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClientId, DependencyMatrix};
use crate::layering::{
    epsilon_dbscan, epsilon_schedule, mine_with_schedule, MiningConfig, MiningResult, Pattern,
};
use crate::metrics::{self, puc_indexed, PatternMetrics, INFORMATIVE_THRESHOLD};
use crate::simindex::UsageVector;
use crate::{Error, Result};

/// Assignment of clients to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    clients: Vec<ClientId>,
    // fold index per client position
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn clients(&self) -> &[ClientId] {
        &self.clients
    }

    pub fn fold_of(&self, client: usize) -> usize {
        self.assignment[client]
    }

    /// Client positions held out in `fold`, ascending.
    pub fn validation(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// Client positions used for training in `fold`, ascending.
    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle followed by round-robin assignment, so fold sizes differ
/// by at most one.
pub fn make_folds(clients: &[ClientId], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(alloc::format!(
            "k must be at least 2, got {k}"
        )));
    }
    if clients.len() < k {
        return Err(Error::InvalidConfig(alloc::format!(
            "{} clients cannot fill {k} folds",
            clients.len()
        )));
    }
    let mut order: Vec<usize> = (0..clients.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = alloc::vec![0; clients.len()];
    for (rank, &client) in order.iter().enumerate() {
        assignment[client] = rank % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        clients: clients.to_vec(),
        assignment,
    })
}

/// Indices of patterns with at least one member library used by at least
/// one of `validation` clients.
pub fn eligible_patterns(
    patterns: &[Pattern],
    validation: &BTreeSet<ClientId>,
    m: &DependencyMatrix,
) -> Result<BTreeSet<usize>> {
    let mask = metrics::scope_mask(m, validation)?;
    let mut out = BTreeSet::new();
    for (i, p) in patterns.iter().enumerate() {
        let libs = m.library_indices(p.members())?;
        if libs
            .iter()
            .any(|&l| m.usage(l).intersection_count(&mask) > 0)
        {
            out.insert(i);
        }
    }
    Ok(out)
}

/// Mining output of one fold, on the training clients only.
#[derive(Debug, Clone)]
pub struct FoldMining {
    pub fold: usize,
    /// Full matrix restricted to training clients, unused libraries dropped.
    pub training: DependencyMatrix,
    pub mining: MiningResult,
}

/// Mines every fold. Folds whose training matrix has no libraries are
/// skipped with a warning and come back as `None`.
pub fn mine_folds(
    m: &DependencyMatrix,
    cfg: &MiningConfig,
    plan: &FoldPlan,
) -> Result<Vec<Option<FoldMining>>> {
    cfg.validate()?;
    let run = |fold: usize| -> Result<Option<FoldMining>> {
        let training = m
            .restrict_clients(&plan.training(fold))
            .drop_unused_libraries();
        if training.is_empty() {
            log::warn!("fold {fold}: empty training matrix, run skipped");
            return Ok(None);
        }
        let mining = epsilon_dbscan(&training, cfg)?;
        Ok(Some(FoldMining {
            fold,
            training,
            mining,
        }))
    };

    #[cfg(feature = "parallel")]
    let runs: Vec<Result<Option<FoldMining>>> = {
        use rayon::prelude::*;
        (0..plan.k).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<Option<FoldMining>>> = (0..plan.k).map(run).collect();

    runs.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PucStats {
    pub avg: f64,
    pub max: f64,
    pub stddev: f64,
}

impl PucStats {
    fn of(values: &[f64]) -> Option<Self> {
        metrics::summary(values).map(|(avg, max, stddev)| PucStats { avg, max, stddev })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternEval {
    pub members: Vec<crate::LibraryId>,
    pub metrics: PatternMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub fold: usize,
    pub training_clients: usize,
    pub validation_clients: usize,
    pub pattern_count: usize,
    pub eligible_count: usize,
    /// Over all patterns of the run.
    pub training: Option<PucStats>,
    /// Over eligible patterns only.
    pub validation: Option<PucStats>,
    pub avg_consistency: Option<f64>,
    pub precision: Option<f64>,
    pub patterns: Vec<PatternEval>,
}

/// Means over runs of the per-run values; runs where a value is undefined
/// do not contribute to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvAggregate {
    pub avg_eligible_count: f64,
    pub avg_puc_training: Option<f64>,
    pub avg_puc_validation: Option<f64>,
    pub avg_max_puc_training: Option<f64>,
    pub avg_max_puc_validation: Option<f64>,
    pub avg_stddev_puc_training: Option<f64>,
    pub avg_stddev_puc_validation: Option<f64>,
    pub avg_consistency: Option<f64>,
    pub avg_precision: Option<f64>,
}

impl CvAggregate {
    pub fn from_runs(runs: &[CvRun]) -> Self {
        let over = |f: &dyn Fn(&CvRun) -> Option<f64>| metrics::mean(runs.iter().filter_map(f));
        CvAggregate {
            avg_eligible_count: metrics::mean(runs.iter().map(|r| r.eligible_count as f64))
                .unwrap_or(0.0),
            avg_puc_training: over(&|r| r.training.map(|s| s.avg)),
            avg_puc_validation: over(&|r| r.validation.map(|s| s.avg)),
            avg_max_puc_training: over(&|r| r.training.map(|s| s.max)),
            avg_max_puc_validation: over(&|r| r.validation.map(|s| s.max)),
            avg_stddev_puc_training: over(&|r| r.training.map(|s| s.stddev)),
            avg_stddev_puc_validation: over(&|r| r.validation.map(|s| s.stddev)),
            avg_consistency: over(&|r| r.avg_consistency),
            avg_precision: over(&|r| r.precision),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub runs: Vec<CvRun>,
    pub skipped: Vec<usize>,
    pub aggregate: CvAggregate,
}

/// Mines each fold on its training clients and scores the patterns in the
/// training and validation contexts.
pub fn cross_validate(
    m: &DependencyMatrix,
    cfg: &MiningConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let plan = make_folds(m.clients(), k, seed)?;
    let folds = mine_folds(m, cfg, &plan)?;
    evaluate_folds(m, &plan, &folds)
}

/// Scores already-mined folds; see [`cross_validate`].
pub fn evaluate_folds(
    m: &DependencyMatrix,
    plan: &FoldPlan,
    folds: &[Option<FoldMining>],
) -> Result<CvReport> {
    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for (fold, mined) in folds.iter().enumerate() {
        match mined {
            Some(f) => runs.push(evaluate_run(m, plan, f)?),
            None => skipped.push(fold),
        }
    }
    Ok(CvReport {
        k: plan.k,
        seed: plan.seed,
        aggregate: CvAggregate::from_runs(&runs),
        runs,
        skipped,
    })
}

fn evaluate_run(m: &DependencyMatrix, plan: &FoldPlan, f: &FoldMining) -> Result<CvRun> {
    let train_pos = plan.training(f.fold);
    let valid_pos = plan.validation(f.fold);
    let train_mask = UsageVector::from_indices(m.client_count(), train_pos.iter().copied());
    let valid_mask = UsageVector::from_indices(m.client_count(), valid_pos.iter().copied());

    let mut patterns = Vec::with_capacity(f.mining.patterns.len());
    for p in &f.mining.patterns {
        let libs = m.library_indices(p.members())?;
        // every member has a training client by construction
        let puc_t = puc_indexed(&libs, m, Some(&train_mask)).unwrap_or(0.0);
        let puc_v = puc_indexed(&libs, m, Some(&valid_mask));
        patterns.push(PatternEval {
            members: p.members().to_vec(),
            metrics: PatternMetrics::new(puc_t, puc_v, INFORMATIVE_THRESHOLD),
        });
    }

    let training: Vec<f64> = patterns.iter().map(|p| p.metrics.puc_training).collect();
    let eligible: Vec<&PatternEval> = patterns.iter().filter(|p| p.metrics.eligible).collect();
    let validation: Vec<f64> = eligible
        .iter()
        .filter_map(|p| p.metrics.puc_validation)
        .collect();
    let eligible_ids: BTreeSet<usize> = (0..patterns.len())
        .filter(|&i| patterns[i].metrics.eligible)
        .collect();
    let informative_ids: BTreeSet<usize> = (0..patterns.len())
        .filter(|&i| patterns[i].metrics.informative)
        .collect();

    Ok(CvRun {
        fold: f.fold,
        training_clients: train_pos.len(),
        validation_clients: valid_pos.len(),
        pattern_count: patterns.len(),
        eligible_count: eligible.len(),
        training: PucStats::of(&training),
        validation: PucStats::of(&validation),
        avg_consistency: metrics::mean(eligible.iter().filter_map(|p| p.metrics.consistency)),
        precision: metrics::precision(&eligible_ids, &informative_ids),
        patterns,
    })
}

/// Source of wall-clock readings for sweeps; the core crate has no clock.
pub trait Clock {
    /// Seconds since an arbitrary origin.
    fn now(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub max_epsilon: f64,
    pub library_count: usize,
    pub pattern_count: usize,
    pub noise_count: usize,
    pub avg_puc: Option<f64>,
    pub avg_pattern_size: Option<f64>,
    pub avg_clients_per_pattern: Option<f64>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

fn sweep_row(
    m: &DependencyMatrix,
    r: &MiningResult,
    max_epsilon: f64,
    secs: f64,
) -> Result<SweepRow> {
    let mut pucs = Vec::with_capacity(r.patterns.len());
    for p in &r.patterns {
        let libs = m.library_indices(p.members())?;
        pucs.extend(puc_indexed(&libs, m, None));
    }
    Ok(SweepRow {
        max_epsilon,
        library_count: m.library_count(),
        pattern_count: r.patterns.len(),
        noise_count: r.noise.len(),
        avg_puc: metrics::mean(pucs),
        avg_pattern_size: metrics::mean(r.patterns.iter().map(|p| p.len() as f64)),
        avg_clients_per_pattern: metrics::mean(
            r.patterns
                .iter()
                .map(|p| p.root().vector().cardinality() as f64),
        ),
        wall_time_secs: secs,
    })
}

/// One mining run per `max_epsilon` value (ascending) with a shared step.
///
/// A value at or below zero yields an empty schedule: nothing clusters.
pub fn sweep_max_epsilon<C: Clock>(
    m: &DependencyMatrix,
    epsilons: &[f64],
    step: f64,
    min_pts: usize,
    clock: &C,
) -> Result<SweepReport> {
    if epsilons.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "sweep epsilons must be ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &max_epsilon in epsilons {
        let cfg = MiningConfig {
            max_epsilon,
            epsilon_step: step,
            min_pts,
        };
        if max_epsilon >= step {
            cfg.validate()?;
        } else if step <= 0.0 || min_pts < 2 || max_epsilon < 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "invalid sweep point max_epsilon={max_epsilon} step={step} min_pts={min_pts}"
            )));
        }
        let start = clock.now();
        let r = mine_with_schedule(m, cfg, &epsilon_schedule(max_epsilon, step))?;
        let secs = clock.now() - start;
        rows.push(sweep_row(m, &r, max_epsilon, secs)?);
    }
    Ok(SweepReport { rows })
}

/// Mines nested random library subsets of the given (ascending) sizes.
pub fn sweep_dataset_size<C: Clock>(
    m: &DependencyMatrix,
    sizes: &[usize],
    cfg: &MiningConfig,
    seed: u64,
    clock: &C,
) -> Result<SweepReport> {
    cfg.validate()?;
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "dataset sizes must be ascending".into(),
        ));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s > m.library_count()) {
        return Err(Error::InvalidConfig(alloc::format!(
            "size {s} exceeds library count {}",
            m.library_count()
        )));
    }
    let mut order: Vec<usize> = (0..m.library_count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let subset = nested_subset(&order, size);
        let sub = m.restrict_libraries(&subset);
        let start = clock.now();
        let r = epsilon_dbscan(&sub, cfg)?;
        let secs = clock.now() - start;
        rows.push(sweep_row(&sub, &r, cfg.max_epsilon, secs)?);
    }
    Ok(SweepReport { rows })
}

/// First `size` libraries of a shuffled order, back in matrix order.
pub fn nested_subset(order: &[usize], size: usize) -> Vec<usize> {
    let mut subset = order[..size].to_vec();
    subset.sort_unstable();
    subset
}

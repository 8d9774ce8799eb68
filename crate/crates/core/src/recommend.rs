//! Pattern-based library recommendation and its ranking evaluation.
//!
//! Given libraries a client already uses, every mined pattern touching them
//! contributes its other members as candidates. A candidate scores its best
//! usage similarity to any reference library.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DependencyMatrix, LibraryId};
use crate::evaluation::{FoldMining, FoldPlan};
use crate::layering::MiningResult;
use crate::simindex::{usim, UsageVector};
use crate::{Error, Result};

/// Which library set selects patterns and serves as the scoring reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecommendMode {
    /// Select and score against the held-out ground truth, as in the
    /// original evaluation protocol. The ground truth leaks into the
    /// ranking, so this is only useful to replicate reported numbers.
    Faithful,
    /// Select and score against the libraries the client already uses.
    #[default]
    HoldoutSafe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// Candidates by descending score, ties by ascending id.
    pub ranked: Vec<(LibraryId, f64)>,
    pub seed: BTreeSet<LibraryId>,
}

impl Recommendation {
    /// 1-based rank of the first library in `relevant`.
    pub fn first_hit(&self, relevant: &BTreeSet<LibraryId>) -> Option<usize> {
        self.ranked
            .iter()
            .position(|(l, _)| relevant.contains(l))
            .map(|p| p + 1)
    }
}

/// Highest usage similarity between `candidate` and any reference library.
pub fn rec_score(
    candidate: &LibraryId,
    reference: &BTreeSet<LibraryId>,
    m: &DependencyMatrix,
) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let c = m
        .usage_of(candidate)
        .ok_or_else(|| Error::UnknownLibrary(candidate.as_str().into()))?;
    let refs = m
        .library_indices(reference)?
        .into_iter()
        .map(|i| m.usage(i))
        .collect::<Vec<_>>();
    Ok(best_similarity(c, &refs))
}

fn best_similarity(candidate: &UsageVector, refs: &[&UsageVector]) -> f64 {
    refs.iter().map(|r| usim(candidate, r)).fold(0.0, f64::max)
}

/// Ranks members of patterns that intersect the selection set.
///
/// In [`RecommendMode::Faithful`] the selection and reference set is
/// `ground_truth`, which is then required. Seed libraries are never
/// recommended. Reference libraries missing from `m` are ignored for
/// scoring. At most `k` entries are returned.
pub fn recommend(
    seed: &BTreeSet<LibraryId>,
    ground_truth: Option<&BTreeSet<LibraryId>>,
    mining: &MiningResult,
    m: &DependencyMatrix,
    k: usize,
    mode: RecommendMode,
) -> Result<Recommendation> {
    if seed.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let selection = match mode {
        RecommendMode::HoldoutSafe => seed,
        RecommendMode::Faithful => ground_truth.ok_or_else(|| {
            Error::InvalidConfig("faithful mode needs the ground-truth set".into())
        })?,
    };

    let mut pool: BTreeSet<&LibraryId> = BTreeSet::new();
    for p in &mining.patterns {
        if p.members().iter().any(|l| selection.contains(l)) {
            pool.extend(p.members().iter().filter(|l| !seed.contains(*l)));
        }
    }

    let refs: Vec<&UsageVector> = selection.iter().filter_map(|l| m.usage_of(l)).collect();
    let mut ranked: Vec<(LibraryId, f64)> = pool
        .into_iter()
        .map(|l| {
            let score = m.usage_of(l).map_or(0.0, |v| best_similarity(v, &refs));
            (l.clone(), score)
        })
        .collect();
    sort_ranked(&mut ranked);
    ranked.truncate(k);
    Ok(Recommendation {
        ranked,
        seed: seed.clone(),
    })
}

/// Descending score, ties by ascending library id.
pub fn sort_ranked(ranked: &mut [(LibraryId, f64)]) {
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingEval {
    /// `(k, recall@k)` for ascending `k`.
    pub recall_at_k: Vec<(usize, f64)>,
    pub mrr: f64,
    /// Systems evaluated (the recall denominator).
    pub system_count: usize,
    /// Validation systems with fewer than two libraries.
    pub skipped: usize,
}

/// Half split of one validation system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldOut {
    pub client: usize,
    pub retained: BTreeSet<LibraryId>,
    pub dropped: BTreeSet<LibraryId>,
}

/// Seeded split of a client's libraries: the first `ceil(n/2)` after a
/// shuffle are retained, the rest dropped. Each client draws from its own
/// ChaCha stream so the split does not depend on evaluation order.
pub fn split_half(
    libs: &[LibraryId],
    client: usize,
    seed: u64,
) -> (BTreeSet<LibraryId>, BTreeSet<LibraryId>) {
    let mut shuffled = libs.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(client as u64);
    shuffled.shuffle(&mut rng);
    let keep = shuffled.len().div_ceil(2);
    let dropped = shuffled.split_off(keep);
    (
        shuffled.into_iter().collect(),
        dropped.into_iter().collect(),
    )
}

/// Drop-half ranking evaluation with an arbitrary recommender.
///
/// `rank` receives the fold index and the split and returns a ranked list.
/// A system is a hit at `k` when any dropped library appears in the top `k`;
/// its reciprocal rank uses the first dropped library anywhere in the list
/// and is 0 when none appears.
pub fn eval_ranking_with<F>(
    m: &DependencyMatrix,
    plan: &FoldPlan,
    folds: &[usize],
    ks: &[usize],
    seed: u64,
    mut rank: F,
) -> Result<RankingEval>
where
    F: FnMut(usize, &HeldOut) -> Result<Vec<LibraryId>>,
{
    let mut ks: Vec<usize> = ks.iter().copied().filter(|&k| k > 0).collect();
    ks.sort_unstable();
    ks.dedup();
    let rows = m.client_rows();
    let mut hits = alloc::vec![0usize; ks.len()];
    let mut rr_sum = 0.0;
    let mut systems = 0usize;
    let mut skipped = 0usize;

    for &fold in folds {
        for client in plan.validation(fold) {
            let libs: Vec<LibraryId> = rows[client]
                .iter()
                .map(|&l| m.libraries()[l].clone())
                .collect();
            if libs.len() < 2 {
                skipped += 1;
                continue;
            }
            let (retained, dropped) = split_half(&libs, client, seed);
            let held = HeldOut {
                client,
                retained,
                dropped,
            };
            let ranked = rank(fold, &held)?;
            systems += 1;
            if let Some(r) = ranked
                .iter()
                .position(|l| held.dropped.contains(l))
                .map(|p| p + 1)
            {
                rr_sum += 1.0 / r as f64;
                for (h, &k) in hits.iter_mut().zip(&ks) {
                    if r <= k {
                        *h += 1;
                    }
                }
            }
        }
    }

    let ratio = |x: f64| {
        if systems == 0 {
            0.0
        } else {
            x / systems as f64
        }
    };
    Ok(RankingEval {
        recall_at_k: ks
            .iter()
            .zip(&hits)
            .map(|(&k, &h)| (k, ratio(h as f64)))
            .collect(),
        mrr: ratio(rr_sum),
        system_count: systems,
        skipped,
    })
}

/// Drop-half evaluation of pattern-based recommendation over mined folds.
///
/// Similarities are computed on each fold's training matrix.
pub fn eval_ranking(
    plan: &FoldPlan,
    m: &DependencyMatrix,
    folds: &[Option<FoldMining>],
    ks: &[usize],
    seed: u64,
    mode: RecommendMode,
) -> Result<RankingEval> {
    let mined: Vec<&FoldMining> = folds.iter().flatten().collect();
    let fold_ids: Vec<usize> = mined.iter().map(|f| f.fold).collect();
    eval_ranking_with(m, plan, &fold_ids, ks, seed, |fold, held| {
        let f = mined
            .iter()
            .find(|f| f.fold == fold)
            .expect("fold was mined");
        let rec = recommend(
            &held.retained,
            Some(&held.dropped),
            &f.mining,
            &f.training,
            usize::MAX,
            mode,
        )?;
        Ok(rec.ranked.into_iter().map(|(l, _)| l).collect())
    })
}

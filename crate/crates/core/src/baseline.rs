//! Comparison baseline: association rules from closed frequent itemsets
//! plus user-based k-nearest-neighbor collaborative filtering.
//!
//! Frequent itemsets come from a level-wise Apriori search where each
//! candidate's support is the popcount of the AND of its members' usage
//! vectors. Closed itemsets are then filtered by definition and rules are
//! enumerated from every closed itemset.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::corpus::{DependencyMatrix, LibraryId};
use crate::recommend::{sort_ranked, Recommendation};
use crate::simindex::UsageVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub minsup: f64,
    pub minconf: f64,
    pub neighbors: usize,
    /// Longest itemset explored; `None` explores all lengths.
    pub max_itemset_len: Option<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            minsup: 0.002,
            minconf: 0.8,
            neighbors: 25,
            max_itemset_len: Some(4),
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        check_ratio("minsup", self.minsup)?;
        check_ratio("minconf", self.minconf)?;
        if self.neighbors == 0 {
            return Err(Error::InvalidConfig("neighbors must be at least 1".into()));
        }
        if self.max_itemset_len == Some(0) {
            return Err(Error::InvalidConfig(
                "max itemset length must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_ratio(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!(
            "{name} must be in (0, 1], got {v}"
        )))
    }
}

/// An itemset with its absolute count and relative support.
#[derive(Debug, Clone, PartialEq)]
pub struct Itemset {
    /// Sorted ascending by id.
    pub items: Vec<LibraryId>,
    pub count: usize,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationRule {
    pub antecedent: Vec<LibraryId>,
    pub consequent: Vec<LibraryId>,
    pub support: f64,
    pub confidence: f64,
}

/// Smallest client count whose share of `n` reaches `minsup`.
fn min_count(minsup: f64, n: usize) -> usize {
    (libm::ceil(minsup * n as f64 - 1e-9) as usize).max(1)
}

/// All itemsets with support at least `minsup`.
pub fn mine_frequent_itemsets(m: &DependencyMatrix, minsup: f64) -> Result<Vec<Itemset>> {
    mine_frequent_itemsets_up_to(m, minsup, None)
}

/// Apriori, optionally stopping after itemsets of length `max_len`.
///
/// Output is ordered by length, then lexicographically by item ids.
pub fn mine_frequent_itemsets_up_to(
    m: &DependencyMatrix,
    minsup: f64,
    max_len: Option<usize>,
) -> Result<Vec<Itemset>> {
    check_ratio("minsup", minsup)?;
    let n = m.client_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let threshold = min_count(minsup, n);

    // Work on columns ordered by library id so joins produce sorted itemsets.
    let mut cols: Vec<usize> = (0..m.library_count()).collect();
    cols.sort_by(|&a, &b| m.libraries()[a].cmp(&m.libraries()[b]));

    let mut level: Vec<(Vec<usize>, UsageVector)> = cols
        .iter()
        .filter(|&&c| m.usage(c).cardinality() >= threshold)
        .map(|&c| (alloc::vec![c], m.usage(c).clone()))
        .collect();
    // rank of each column in id order, for joins
    let mut rank = alloc::vec![0usize; m.library_count()];
    for (r, &c) in cols.iter().enumerate() {
        rank[c] = r;
    }

    let mut all: Vec<Vec<usize>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut len = 1;
    while !level.is_empty() {
        for (items, tids) in &level {
            all.push(items.clone());
            counts.push(tids.cardinality());
        }
        if max_len.is_some_and(|l| len >= l) {
            break;
        }
        let known: BTreeSet<&[usize]> = level.iter().map(|(i, _)| i.as_slice()).collect();
        let mut next = Vec::new();
        for a in 0..level.len() {
            for b in (a + 1)..level.len() {
                let (ia, ta) = &level[a];
                let (ib, tb) = &level[b];
                if ia[..len - 1] != ib[..len - 1] {
                    break;
                }
                // levels are sorted by rank, so the new last item ranks highest
                let mut cand = ia.clone();
                cand.push(ib[len - 1]);
                let all_subsets_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<usize> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &c)| c)
                        .collect();
                    known.contains(sub.as_slice())
                });
                if !all_subsets_frequent {
                    continue;
                }
                let tids = ta.and(tb);
                if tids.cardinality() >= threshold {
                    next.push((cand, tids));
                }
            }
        }
        next.sort_by(|a, b| cmp_by_rank(&a.0, &b.0, &rank));
        level = next;
        len += 1;
    }

    let out: Vec<Itemset> = all
        .into_iter()
        .zip(counts)
        .map(|(items, count)| Itemset {
            items: items.iter().map(|&c| m.libraries()[c].clone()).collect(),
            count,
            support: count as f64 / n as f64,
        })
        .collect();
    debug_assert!(
        downward_closed(&out),
        "apriori output is not downward closed"
    );
    Ok(out)
}

fn cmp_by_rank(a: &[usize], b: &[usize], rank: &[usize]) -> core::cmp::Ordering {
    a.iter().map(|&c| rank[c]).cmp(b.iter().map(|&c| rank[c]))
}

/// Every proper subset (one item removed) of each itemset is present.
pub fn downward_closed(itemsets: &[Itemset]) -> bool {
    let present: BTreeSet<&[LibraryId]> = itemsets.iter().map(|s| s.items.as_slice()).collect();
    itemsets.iter().filter(|s| s.items.len() > 1).all(|s| {
        (0..s.items.len()).all(|skip| {
            let sub: Vec<LibraryId> = s
                .items
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, l)| l.clone())
                .collect();
            present.contains(sub.as_slice())
        })
    })
}

/// Itemsets with no proper superset of equal support.
///
/// Expects the complete frequent set: if a superset of equal support
/// exists, one with exactly one more item does too, so only those are
/// checked.
pub fn closed_itemsets(frequent: &[Itemset]) -> Vec<Itemset> {
    let index: BTreeMap<&[LibraryId], usize> = frequent
        .iter()
        .enumerate()
        .map(|(i, s)| (s.items.as_slice(), i))
        .collect();
    let mut open = alloc::vec![false; frequent.len()];
    for sup in frequent {
        for skip in 0..sup.items.len() {
            let sub: Vec<LibraryId> = sup
                .items
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, l)| l.clone())
                .collect();
            if let Some(&i) = index.get(sub.as_slice()) {
                if frequent[i].count == sup.count {
                    open[i] = true;
                }
            }
        }
    }
    frequent
        .iter()
        .zip(open)
        .filter(|(_, o)| !o)
        .map(|(s, _)| s.clone())
        .collect()
}

fn is_subset(small: &[LibraryId], big: &[LibraryId]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.by_ref().any(|y| y == x))
}

/// Rules `X -> Y` with `X ∪ Y` closed and confidence at least `minconf`.
///
/// The support of an antecedent is recovered from its closure, the
/// highest-support closed superset. Rules are sorted by antecedent, then
/// consequent.
pub fn generate_rules(closed: &[Itemset], minconf: f64) -> Result<Vec<AssociationRule>> {
    check_ratio("minconf", minconf)?;
    let support_of = |x: &[LibraryId]| -> Option<(usize, f64)> {
        closed
            .iter()
            .filter(|c| is_subset(x, &c.items))
            .map(|c| (c.count, c.support))
            .max_by_key(|&(count, _)| count)
    };
    let mut rules = Vec::new();
    for z in closed.iter().filter(|z| z.items.len() >= 2) {
        let k = z.items.len();
        assert!(k < 64, "itemset too long for rule enumeration");
        for mask in 1u64..((1u64 << k) - 1) {
            let (x, y): (Vec<_>, Vec<_>) = z
                .items
                .iter()
                .enumerate()
                .partition(|&(i, _)| mask & (1 << i) != 0);
            let x: Vec<LibraryId> = x.into_iter().map(|(_, l)| l.clone()).collect();
            let y: Vec<LibraryId> = y.into_iter().map(|(_, l)| l.clone()).collect();
            let Some((x_count, _)) = support_of(&x) else {
                continue;
            };
            let confidence = z.count as f64 / x_count as f64;
            if confidence + 1e-12 >= minconf {
                rules.push(AssociationRule {
                    antecedent: x,
                    consequent: y,
                    support: z.support,
                    confidence,
                });
            }
        }
    }
    rules.sort_by(|a, b| {
        a.antecedent
            .cmp(&b.antecedent)
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    rules.dedup_by(|a, b| a.antecedent == b.antecedent && a.consequent == b.consequent);
    Ok(rules)
}

/// Jaccard similarity between the target library set and each client,
/// votes from the `neighbors` most similar clients, normalized by their
/// total similarity. Every library outside the target gets a score.
pub fn knn_cf_scores(
    target: &BTreeSet<LibraryId>,
    m: &DependencyMatrix,
    neighbors: usize,
) -> Result<BTreeMap<LibraryId, f64>> {
    if target.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if neighbors == 0 {
        return Err(Error::InvalidConfig("neighbors must be at least 1".into()));
    }
    let known: Vec<usize> = target.iter().filter_map(|l| m.library_index(l)).collect();
    let rows = m.client_rows();
    let mut sims: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let inter = known
                .iter()
                .filter(|l| row.binary_search(l).is_ok())
                .count();
            let union = target.len() + row.len() - inter;
            (
                c,
                if union == 0 {
                    0.0
                } else {
                    inter as f64 / union as f64
                },
            )
        })
        .filter(|&(_, s)| s > 0.0)
        .collect();
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sims.truncate(neighbors);

    let total: f64 = sims.iter().map(|&(_, s)| s).sum();
    let mut votes = alloc::vec![0.0; m.library_count()];
    for &(c, s) in &sims {
        for &l in &rows[c] {
            votes[l] += s;
        }
    }
    Ok(m.libraries()
        .iter()
        .zip(votes)
        .filter(|(l, _)| !target.contains(*l))
        .map(|(l, v)| (l.clone(), if total > 0.0 { v / total } else { 0.0 }))
        .collect())
}

/// Flat patterns: the item union of each rule, deduplicated, sorted.
pub fn baseline_patterns(rules: &[AssociationRule]) -> Vec<Vec<LibraryId>> {
    let set: BTreeSet<Vec<LibraryId>> = rules
        .iter()
        .map(|r| {
            let mut items: Vec<LibraryId> =
                r.antecedent.iter().chain(&r.consequent).cloned().collect();
            items.sort();
            items.dedup();
            items
        })
        .collect();
    set.into_iter().collect()
}

/// Combined baseline ranking: each candidate scores the larger of its best
/// applicable rule confidence and its neighbor vote.
pub fn baseline_recommend(
    target: &BTreeSet<LibraryId>,
    rules: &[AssociationRule],
    m: &DependencyMatrix,
    neighbors: usize,
    k: usize,
) -> Result<Recommendation> {
    let mut scores = knn_cf_scores(target, m, neighbors)?;
    for r in rules {
        if r.antecedent.iter().all(|l| target.contains(l)) {
            for l in r.consequent.iter().filter(|l| !target.contains(*l)) {
                let s = scores.entry(l.clone()).or_insert(0.0);
                *s = s.max(r.confidence);
            }
        }
    }
    let mut ranked: Vec<(LibraryId, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
    sort_ranked(&mut ranked);
    ranked.truncate(k);
    Ok(Recommendation {
        ranked,
        seed: target.clone(),
    })
}

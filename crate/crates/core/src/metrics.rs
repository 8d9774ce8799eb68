//! Pattern usage cohesion (PUC) and the measures derived from it.
//!
//! PUC of a pattern `p` is the mean, over every client using at least one
//! library of `p`, of the fraction of `p`'s libraries that client uses. A
//! pattern whose libraries are always used together scores exactly 1.

use alloc::collections::BTreeSet;
use alloc::vec;

use crate::corpus::{ClientId, DependencyMatrix, LibraryId};
use crate::simindex::UsageVector;
use crate::{Error, Result};

/// PUC above which a pattern counts as informative (strict comparison).
pub const INFORMATIVE_THRESHOLD: f64 = 0.75;

/// PUC of `pattern` over the clients in `scope` (all clients when `None`).
///
/// Returns `Ok(None)` when no in-scope client uses any pattern library; the
/// cohesion is undefined there, not zero.
pub fn puc(
    pattern: &[LibraryId],
    m: &DependencyMatrix,
    scope: Option<&BTreeSet<ClientId>>,
) -> Result<Option<f64>> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    let libs = m.library_indices(pattern)?;
    let mask = match scope {
        Some(clients) => Some(scope_mask(m, clients)?),
        None => None,
    };
    Ok(puc_indexed(&libs, m, mask.as_ref()))
}

/// Client mask for a set of client ids.
pub fn scope_mask<'a, I>(m: &DependencyMatrix, clients: I) -> Result<UsageVector>
where
    I: IntoIterator<Item = &'a ClientId>,
{
    let mut mask = UsageVector::zeros(m.client_count());
    for c in clients {
        let i = m
            .client_index(c)
            .ok_or_else(|| Error::UnknownClient(c.as_str().into()))?;
        mask.insert(i);
    }
    Ok(mask)
}

/// PUC over library columns, optionally restricted to a client mask.
/// Repeated columns count once.
pub fn puc_indexed(
    libs: &[usize],
    m: &DependencyMatrix,
    scope: Option<&UsageVector>,
) -> Option<f64> {
    let libs: BTreeSet<usize> = libs.iter().copied().collect();
    if libs.is_empty() {
        return None;
    }
    let mut used = vec![0usize; m.client_count()];
    for &li in &libs {
        for ci in m.usage(li).iter_ones() {
            if scope.is_none_or(|s| s.contains(ci)) {
                used[ci] += 1;
            }
        }
    }
    let (clients, total) = used
        .iter()
        .filter(|&&u| u > 0)
        .fold((0usize, 0usize), |(n, t), &u| (n + 1, t + u));
    if clients == 0 {
        return None;
    }
    Some(total as f64 / (clients * libs.len()) as f64)
}

/// `1 - |training - validation|`.
pub fn consistency(puc_training: f64, puc_validation: f64) -> f64 {
    1.0 - libm::fabs(puc_training - puc_validation)
}

pub fn is_informative(puc: f64, threshold: f64) -> bool {
    puc > threshold
}

/// Share of eligible patterns that are also informative; `None` when nothing
/// is eligible.
pub fn precision<T: Ord>(eligible: &BTreeSet<T>, informative: &BTreeSet<T>) -> Option<f64> {
    if eligible.is_empty() {
        return None;
    }
    let hits = eligible.intersection(informative).count();
    Some(hits as f64 / eligible.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMetrics {
    pub puc_training: f64,
    pub puc_validation: Option<f64>,
    pub consistency: Option<f64>,
    /// PUC above the threshold in every context that was measured.
    pub informative: bool,
    /// A validation PUC exists, i.e. some validation client uses the pattern.
    pub eligible: bool,
}

impl PatternMetrics {
    pub fn new(puc_training: f64, puc_validation: Option<f64>, threshold: f64) -> Self {
        let informative = is_informative(puc_training, threshold)
            && puc_validation.is_none_or(|v| is_informative(v, threshold));
        PatternMetrics {
            puc_training,
            puc_validation,
            consistency: puc_validation.map(|v| consistency(puc_training, v)),
            informative,
            eligible: puc_validation.is_some(),
        }
    }
}

/// Average of the defined values, `None` if there are none.
pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (n, sum) = values
        .into_iter()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

/// Mean, maximum and population standard deviation.
pub(crate) fn summary(values: &[f64]) -> Option<(f64, f64, f64)> {
    let avg = mean(values.iter().copied())?;
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let var = values.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / values.len() as f64;
    Some((avg, max, libm::sqrt(var)))
}

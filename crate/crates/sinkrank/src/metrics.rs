//! Ranking metrics and the paired significance test.
//!
//! A query's rank is the rank of its best-scoring relevant item under
//! optimistic tie-breaking: `1 + #{items strictly above it}`. Recall@K
//! is the fraction of judged queries with rank ≤ K. All aggregate
//! metrics are computed from integer totals with a single final
//! division, so they are exactly invariant to query order.
//!
//! Significance between two systems is a paired two-sided randomization
//! test on per-query hit indicators: each pair is swapped with
//! probability one half, and the observed absolute difference of hit
//! counts is compared to the randomized distribution. The statistic is
//! an integer sum, which makes the test exactly symmetric in its
//! arguments.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::rng::{self, tag};
use rand_core::RngCore;

/// Relevance judgments: query index mapped to a non-empty, sorted,
/// deduplicated set of relevant item indices. Queries absent from the
/// map are unjudged and are skipped by [`compute_metrics`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    relevant: BTreeMap<usize, Vec<usize>>,
}

impl GroundTruth {
    /// Build from (query, relevant items) pairs. Repeated query ids are
    /// merged; item lists are sorted and deduplicated; empty lists are
    /// rejected.
    pub fn from_pairs<I, J>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, J)>,
        J: IntoIterator<Item = usize>,
    {
        let mut relevant: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (q, items) in pairs {
            relevant.entry(q).or_default().extend(items);
        }
        for (q, items) in &mut relevant {
            items.sort_unstable();
            items.dedup();
            if items.is_empty() {
                return Err(Error::GroundTruth(format!(
                    "query {q} has an empty relevance set"
                )));
            }
        }
        if relevant.is_empty() {
            return Err(Error::GroundTruth("no relevance judgments given".to_string()));
        }
        Ok(Self { relevant })
    }

    /// The identity matching over `n` queries: query `i` relevant to item `i`.
    pub fn diagonal(n: usize) -> Self {
        Self {
            relevant: (0..n).map(|i| (i, vec![i])).collect(),
        }
    }

    /// Check all indices fit a matrix of the given shape.
    pub fn validate_for(&self, n_rows: usize, n_cols: usize) -> Result<()> {
        for (&q, items) in &self.relevant {
            if q >= n_rows {
                return Err(Error::GroundTruth(format!(
                    "query index {q} out of range for {n_rows} queries"
                )));
            }
            if let Some(&bad) = items.iter().find(|&&i| i >= n_cols) {
                return Err(Error::GroundTruth(format!(
                    "item index {bad} (query {q}) out of range for {n_cols} items"
                )));
            }
        }
        Ok(())
    }

    /// Relevant items for a query, if judged. Sorted ascending.
    pub fn relevant(&self, query: usize) -> Option<&[usize]> {
        self.relevant.get(&query).map(|v| v.as_slice())
    }

    /// Judged query indices in ascending order.
    pub fn queries(&self) -> impl Iterator<Item = usize> + '_ {
        self.relevant.keys().copied()
    }

    /// Number of judged queries.
    pub fn n_judged(&self) -> usize {
        self.relevant.len()
    }

    /// Iterate (query, items) in ascending query order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.relevant.iter().map(|(&q, v)| (q, v.as_slice()))
    }

    /// Swap the roles of queries and items: `(q, i)` relevant becomes
    /// `(i, q)` relevant. Used when evaluating the transposed matrix.
    pub fn invert(&self) -> Result<Self> {
        Self::from_pairs(
            self.relevant
                .iter()
                .flat_map(|(&q, items)| items.iter().map(move |&i| (i, [q]))),
        )
    }
}

/// Aggregate retrieval metrics for one (matrix, ground truth) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// K mapped to Recall@K, the fraction of judged queries ranking a
    /// relevant item at K or better.
    pub recall_at: BTreeMap<usize, f64>,
    /// Median of per-query ranks; mean of the two middle values for an
    /// even count, so it can end in .5.
    pub median_rank: f64,
    /// Arithmetic mean of per-query ranks.
    pub mean_rank: f64,
    /// Rank of the best relevant item for each judged query, in
    /// ascending query order.
    pub per_query_rank: Vec<usize>,
}

/// Rank of the best-scoring relevant item within one scores row, with
/// optimistic tie-breaking: ties with non-relevant items do not worsen
/// the rank.
pub fn rank_of_best_relevant(scores_row: &[f64], relevant: &[usize]) -> Result<usize> {
    if relevant.is_empty() {
        return Err(Error::GroundTruth(
            "cannot rank against an empty relevance set".to_string(),
        ));
    }
    let mut best = f64::NEG_INFINITY;
    for &i in relevant {
        let s = *scores_row.get(i).ok_or_else(|| {
            Error::GroundTruth(format!(
                "relevant item index {i} out of range for {} items",
                scores_row.len()
            ))
        })?;
        if s > best {
            best = s;
        }
    }
    let above = scores_row.iter().filter(|&&s| s > best).count();
    Ok(1 + above)
}

/// Compute ranks and aggregate metrics for every judged query.
pub fn compute_metrics(
    a: &SimilarityMatrix,
    gt: &GroundTruth,
    ks: &[usize],
) -> Result<MetricsReport> {
    gt.validate_for(a.n_rows(), a.n_cols())?;
    if ks.is_empty() {
        return Err(Error::Input("at least one K is required".to_string()));
    }
    if let Some(&bad) = ks.iter().find(|&&k| k == 0) {
        return Err(Error::Input(format!("K values must be positive, got {bad}")));
    }
    let mut per_query_rank = Vec::with_capacity(gt.n_judged());
    for (q, items) in gt.iter() {
        per_query_rank.push(rank_of_best_relevant(a.row(q), items)?);
    }
    Ok(report_from_ranks(&per_query_rank, ks))
}

/// Build a [`MetricsReport`] from precomputed per-query ranks.
///
/// Counts and sums are integers; each metric involves exactly one
/// floating-point division, so reports are bit-stable under query
/// reordering.
pub fn report_from_ranks(per_query_rank: &[usize], ks: &[usize]) -> MetricsReport {
    let n = per_query_rank.len();
    debug_assert!(n > 0);
    let mut recall_at = BTreeMap::new();
    for &k in ks {
        let hits = per_query_rank.iter().filter(|&&r| r <= k).count();
        recall_at.insert(k, hits as f64 / n as f64);
    }
    let total: u64 = per_query_rank.iter().map(|&r| r as u64).sum();
    let mean_rank = total as f64 / n as f64;
    let mut sorted = per_query_rank.to_vec();
    sorted.sort_unstable();
    let median_rank = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    MetricsReport {
        recall_at,
        median_rank,
        mean_rank,
        per_query_rank: per_query_rank.to_vec(),
    }
}

/// Paired two-sided randomization test on hit indicators at rank
/// cutoff `k`.
///
/// Pairs `(ranks_a[i], ranks_b[i])` come from the same query scored by
/// two systems. Under the null the labels are exchangeable, so each
/// pair's indicator difference keeps or flips its sign with probability
/// one half. `p = (1 + #extreme) / (1 + iterations)` where an iteration
/// is extreme when its |sum of signed differences| reaches the observed
/// one. Deterministic given `seed`; exactly symmetric in `a` and `b`.
pub fn paired_significance(
    ranks_a: &[usize],
    ranks_b: &[usize],
    k: usize,
    iterations: u64,
    seed: u64,
) -> Result<f64> {
    if ranks_a.len() != ranks_b.len() {
        return Err(Error::Input(format!(
            "paired rank lists differ in length: {} vs {}",
            ranks_a.len(),
            ranks_b.len()
        )));
    }
    if ranks_a.is_empty() {
        return Err(Error::Input("paired rank lists are empty".to_string()));
    }
    if k == 0 {
        return Err(Error::Input("rank cutoff k must be positive".to_string()));
    }
    if iterations < 1000 {
        return Err(Error::Config(format!(
            "randomization test needs at least 1000 iterations, got {iterations}"
        )));
    }
    let diffs: Vec<i64> = ranks_a
        .iter()
        .zip(ranks_b)
        .map(|(&ra, &rb)| i64::from(ra <= k) - i64::from(rb <= k))
        .collect();
    let observed: i64 = diffs.iter().sum::<i64>().abs();

    let mut extreme: u64 = 0;
    for t in 0..iterations {
        // One stream per iteration keyed by (seed, t): results do not
        // depend on execution order, per the determinism contract.
        let mut rng = rng::stream(seed, &[tag::SIGNIFICANCE, t]);
        let mut bits = 0u64;
        let mut left = 0u32;
        let mut sum: i64 = 0;
        for &d in &diffs {
            if left == 0 {
                bits = rng.next_u64();
                left = 64;
            }
            let sign = if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
            left -= 1;
            sum += sign * d;
        }
        if sum.abs() >= observed {
            extreme += 1;
        }
    }
    Ok((1 + extreme) as f64 / (1 + iterations) as f64)
}

//! Evaluation protocols.
//!
//! Three regimes:
//!
//! * **Full test set** ([`evaluate_full`]): transform the whole
//!   queries-by-items matrix, then score. This is the standard (and
//!   strictly speaking unrealistic) setting in which postprocessing
//!   sees every test query at once.
//! * **Single query** ([`single_query_eval`]): each test query is
//!   scored from a pseudo-test matrix containing only that query plus
//!   `m - 1` training queries sampled from a pool, so the transform
//!   never sees other test queries. Metrics are averaged over
//!   resamples of the pseudo-test set at the metric level.
//! * **Direction handling** ([`transpose_direction`]): the same matrix
//!   evaluated items-to-queries via transposition and ground-truth
//!   inversion.
//!
//! The single-query path reads test rows through the [`RowSource`]
//! trait, which lets tests audit exactly which rows are touched: the
//! isolation contract is that scoring query `q` never reads any other
//! test query's row.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::SimilarityMatrix;
use crate::metrics::{
    compute_metrics, rank_of_best_relevant, GroundTruth, MetricsReport,
};
use crate::rng::{self, tag};
use crate::transforms::{self, TransformConfig};

/// Default number of training-pool rows staged for pseudo-test sampling.
pub const DEFAULT_POOL_SIZE: usize = 5000;
/// Default pseudo-test size m (the test query plus m-1 sampled queries).
pub const DEFAULT_SAMPLE_SIZE: usize = 1000;
/// Default number of pseudo-test resamples to average over.
pub const DEFAULT_RESAMPLES: usize = 3;

/// Configuration of the pseudo-test construction.
///
/// `sample_size` is the symbol m: the pseudo-test matrix has m rows,
/// the test query at row 0 plus m-1 rows drawn without replacement
/// from a pool of `pool_size` training-query rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseudoTestConfig {
    pub pool_size: usize,
    pub sample_size: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for PseudoTestConfig {
    fn default() -> Self {
        Self {
            pool_size: DEFAULT_POOL_SIZE,
            sample_size: DEFAULT_SAMPLE_SIZE,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

impl PseudoTestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::Config(format!(
                "sample size m must be at least 2 (one test query plus one sampled query), got {}",
                self.sample_size
            )));
        }
        if self.sample_size - 1 > self.pool_size {
            return Err(Error::Config(format!(
                "sample size m = {} needs m-1 = {} pool rows, but the pool has only {}",
                self.sample_size,
                self.sample_size - 1,
                self.pool_size
            )));
        }
        if self.resamples == 0 {
            return Err(Error::Config("resamples must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Read-only access to test-query rows.
///
/// [`single_query_eval_on`] is generic over this trait so a test can
/// substitute an access-logging double and verify the isolation
/// contract; production code uses [`SimilarityMatrix`] directly.
pub trait RowSource {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];
}

impl RowSource for SimilarityMatrix {
    fn n_rows(&self) -> usize {
        SimilarityMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        SimilarityMatrix::n_cols(self)
    }

    fn row(&self, i: usize) -> &[f64] {
        SimilarityMatrix::row(self, i)
    }
}

/// Transform the full matrix with `tcfg`, then compute metrics.
pub fn evaluate_full(
    a: &SimilarityMatrix,
    gt: &GroundTruth,
    tcfg: &TransformConfig,
    ks: &[usize],
) -> Result<MetricsReport> {
    let transformed = transforms::apply(tcfg, a)?;
    compute_metrics(&transformed, gt, ks)
}

/// Build one pseudo-test matrix: `test_row` at row 0, then
/// `sample_size - 1` pool rows drawn without replacement, keyed by
/// `(cfg.seed, resample_index)`.
///
/// Every consumer given the same `(seed, resample_index)` receives the
/// identical matrix, so competing transforms are compared on the same
/// pseudo-test sets.
pub fn build_pseudo_test(
    test_row: &[f64],
    train_pool: &SimilarityMatrix,
    cfg: &PseudoTestConfig,
    resample_index: u64,
) -> Result<SimilarityMatrix> {
    cfg.validate()?;
    if train_pool.n_rows() != cfg.pool_size {
        return Err(Error::Config(format!(
            "pool is declared as {} rows but the training matrix has {}",
            cfg.pool_size,
            train_pool.n_rows()
        )));
    }
    if test_row.len() != train_pool.n_cols() {
        return Err(Error::Dimension(format!(
            "test row has {} items but the training pool has {}",
            test_row.len(),
            train_pool.n_cols()
        )));
    }
    let mut rng = rng::stream(cfg.seed, &[tag::PSEUDO_SAMPLE, resample_index]);
    let picks = rng::sample_without_replacement(&mut rng, cfg.pool_size, cfg.sample_size - 1);
    let mut data = Vec::with_capacity(cfg.sample_size * train_pool.n_cols());
    data.extend_from_slice(test_row);
    for &r in &picks {
        data.extend_from_slice(train_pool.row(r));
    }
    SimilarityMatrix::new(cfg.sample_size, train_pool.n_cols(), data)
}

/// Single-query evaluation over a [`SimilarityMatrix`] of test scores.
pub fn single_query_eval(
    test: &SimilarityMatrix,
    gt: &GroundTruth,
    train_pool: &SimilarityMatrix,
    tcfg: &TransformConfig,
    pcfg: &PseudoTestConfig,
    ks: &[usize],
) -> Result<MetricsReport> {
    single_query_eval_on(test, gt, train_pool, tcfg, pcfg, ks)
}

/// Single-query evaluation over any [`RowSource`].
///
/// For each judged query `q` and resample `t`, a pseudo-test matrix is
/// built (sampling keyed by `(seed, q, t)`), transformed, and row 0 —
/// the test query's reranked scores — is ranked against `q`'s relevant
/// items. Only row `q` of `test` is read while scoring `q`.
///
/// Aggregation follows the protocol's wording "metrics averaged over
/// resamples": Recall@K and mean rank are computed from integer totals
/// pooled over all (query, resample) pairs, and the median rank is the
/// mean of per-resample medians. `per_query_rank` holds the
/// resample-0 ranks, which downstream significance tests pair across
/// systems.
pub fn single_query_eval_on<S: RowSource + ?Sized>(
    test: &S,
    gt: &GroundTruth,
    train_pool: &SimilarityMatrix,
    tcfg: &TransformConfig,
    pcfg: &PseudoTestConfig,
    ks: &[usize],
) -> Result<MetricsReport> {
    tcfg.validate()?;
    pcfg.validate()?;
    gt.validate_for(test.n_rows(), test.n_cols())?;
    if ks.is_empty() {
        return Err(Error::Input("at least one K is required".to_string()));
    }
    if let Some(&bad) = ks.iter().find(|&&k| k == 0) {
        return Err(Error::Input(format!("K values must be positive, got {bad}")));
    }
    if train_pool.n_cols() != test.n_cols() {
        return Err(Error::Dimension(format!(
            "test matrix has {} items but the training pool has {}",
            test.n_cols(),
            train_pool.n_cols()
        )));
    }

    let n = gt.n_judged();
    let mut ranks_by_resample: Vec<Vec<usize>> =
        vec![Vec::with_capacity(n); pcfg.resamples];
    for (q, relevant) in gt.iter() {
        // The only read of a test row while scoring q: row q itself.
        let test_row = test.row(q);
        let per_query = PseudoTestConfig {
            seed: rng::derive(pcfg.seed, &[tag::QUERY, q as u64]),
            ..*pcfg
        };
        for (t, ranks) in ranks_by_resample.iter_mut().enumerate() {
            let pseudo = build_pseudo_test(test_row, train_pool, &per_query, t as u64)?;
            let transformed = transforms::apply(tcfg, &pseudo)?;
            ranks.push(rank_of_best_relevant(transformed.row(0), relevant)?);
        }
    }

    let resamples = pcfg.resamples;
    let denom = (resamples * n) as f64;
    let mut recall_at = BTreeMap::new();
    for &k in ks {
        let hits: usize = ranks_by_resample
            .iter()
            .map(|ranks| ranks.iter().filter(|&&r| r <= k).count())
            .sum();
        recall_at.insert(k, hits as f64 / denom);
    }
    let total: u64 = ranks_by_resample
        .iter()
        .flat_map(|ranks| ranks.iter())
        .map(|&r| r as u64)
        .sum();
    let mean_rank = total as f64 / denom;
    let median_sum: f64 = ranks_by_resample
        .iter()
        .map(|ranks| {
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            if n % 2 == 1 {
                sorted[n / 2] as f64
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
            }
        })
        .sum();
    let median_rank = median_sum / resamples as f64;

    Ok(MetricsReport {
        recall_at,
        median_rank,
        mean_rank,
        per_query_rank: ranks_by_resample.swap_remove(0),
    })
}

/// Evaluate the opposite retrieval direction: transpose the matrix and
/// invert the ground truth (item j relevant to query i becomes query j
/// relevant to item i).
pub fn transpose_direction(
    a: &SimilarityMatrix,
    gt: &GroundTruth,
) -> Result<(SimilarityMatrix, GroundTruth)> {
    gt.validate_for(a.n_rows(), a.n_cols())?;
    Ok((a.transpose(), gt.invert()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::transforms::Method;
    use rand_core::RngCore;
    use std::cell::RefCell;

    fn random_matrix(seed: u64, rows: usize, cols: usize) -> SimilarityMatrix {
        let mut rng = stream(seed, &[888]);
        let data = (0..rows * cols)
            .map(|_| 2.0 * (rng.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0 - 1.0)
            .collect();
        SimilarityMatrix::new(rows, cols, data).unwrap()
    }

    fn pcfg(pool: usize, m: usize, resamples: usize, seed: u64) -> PseudoTestConfig {
        PseudoTestConfig {
            pool_size: pool,
            sample_size: m,
            resamples,
            seed,
        }
    }

    #[test]
    fn pseudo_test_config_validation() {
        assert!(pcfg(10, 2, 1, 0).validate().is_ok());
        assert!(matches!(pcfg(10, 1, 1, 0).validate(), Err(Error::Config(_))));
        assert!(matches!(pcfg(3, 5, 1, 0).validate(), Err(Error::Config(_))));
        assert!(matches!(pcfg(10, 5, 0, 0).validate(), Err(Error::Config(_))));
    }

    #[test]
    fn build_pseudo_test_places_test_row_first() {
        let pool = random_matrix(1, 8, 5);
        let test = random_matrix(2, 1, 5);
        let m = build_pseudo_test(test.row(0), &pool, &pcfg(8, 4, 1, 3), 0).unwrap();
        assert_eq!(m.n_rows(), 4);
        assert_eq!(m.n_cols(), 5);
        assert_eq!(m.row(0), test.row(0));
        for i in 1..4 {
            assert!(
                (0..8).any(|p| pool.row(p) == m.row(i)),
                "row {i} not found in pool"
            );
        }
    }

    #[test]
    fn build_pseudo_test_exhaustive_sample_includes_whole_pool() {
        let pool = random_matrix(4, 6, 3);
        let test = random_matrix(5, 1, 3);
        let m = build_pseudo_test(test.row(0), &pool, &pcfg(6, 7, 1, 11), 2).unwrap();
        assert_eq!(m.row(0), test.row(0));
        for p in 0..6 {
            assert!(
                (1..7).any(|i| m.row(i) == pool.row(p)),
                "pool row {p} missing from exhaustive sample"
            );
        }
    }

    #[test]
    fn build_pseudo_test_is_deterministic_and_resample_sensitive() {
        let pool = random_matrix(6, 500, 4);
        let test = random_matrix(7, 1, 4);
        let cfg = pcfg(500, 5, 1, 42);
        let a = build_pseudo_test(test.row(0), &pool, &cfg, 3).unwrap();
        let b = build_pseudo_test(test.row(0), &pool, &cfg, 3).unwrap();
        assert_eq!(a, b);

        let mut differing = 0;
        for trial in 0..100u64 {
            let x = build_pseudo_test(test.row(0), &pool, &cfg, 2 * trial).unwrap();
            let y = build_pseudo_test(test.row(0), &pool, &cfg, 2 * trial + 1).unwrap();
            if x != y {
                differing += 1;
            }
        }
        assert!(differing >= 99, "only {differing}/100 resample pairs differ");
    }

    #[test]
    fn build_pseudo_test_rejects_mismatched_inputs() {
        let pool = random_matrix(8, 8, 5);
        let test = random_matrix(9, 1, 5);
        // declared pool size disagrees with the matrix
        assert!(matches!(
            build_pseudo_test(test.row(0), &pool, &pcfg(9, 4, 1, 0), 0),
            Err(Error::Config(_))
        ));
        // sample larger than pool allows
        assert!(matches!(
            build_pseudo_test(test.row(0), &pool, &pcfg(8, 10, 1, 0), 0),
            Err(Error::Config(_))
        ));
        // gallery width mismatch
        let wide = random_matrix(10, 1, 6);
        assert!(matches!(
            build_pseudo_test(wide.row(0), &pool, &pcfg(8, 4, 1, 0), 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn evaluate_full_identity_equals_plain_metrics() {
        let a = random_matrix(11, 9, 9);
        let gt = GroundTruth::diagonal(9);
        let full = evaluate_full(&a, &gt, &TransformConfig::identity(), &[1, 5]).unwrap();
        let plain = compute_metrics(&a, &gt, &[1, 5]).unwrap();
        assert_eq!(full, plain);
    }

    #[test]
    fn evaluate_full_single_row_behavior() {
        let a = random_matrix(12, 1, 20);
        let gt = GroundTruth::from_pairs(vec![(0usize, vec![7usize])]).unwrap();
        let id = evaluate_full(&a, &gt, &TransformConfig::identity(), &[1, 5]).unwrap();

        // DSL's column prior over a single query is all-ones, so it
        // reduces to a plain (monotone) row softmax: metrics carry over.
        let dsl = evaluate_full(&a, &gt, &TransformConfig::dual_softmax(100.0), &[1, 5]).unwrap();
        assert_eq!(id.per_query_rank, dsl.per_query_rank);
        assert_eq!(id.recall_at, dsl.recall_at);

        // Sinkhorn's column normalization collapses singleton columns,
        // so one query row becomes exactly uniform and every rank is 1
        // under optimistic tie-breaking — regardless of the input.
        let sk_matrix = transforms::apply(&TransformConfig::sinkhorn(0.05, 20), &a).unwrap();
        let uniform = -(20f64.ln());
        for &v in sk_matrix.data() {
            assert!((v - uniform).abs() <= 1e-12, "{v} vs {uniform}");
        }
        let sk = evaluate_full(&a, &gt, &TransformConfig::sinkhorn(0.05, 20), &[1, 5]).unwrap();
        assert_eq!(sk.per_query_rank, vec![1]);
        assert_eq!(sk.recall_at[&1], 1.0);
    }

    #[test]
    fn single_query_identity_is_invariant_to_pseudo_config() {
        let test = random_matrix(13, 10, 15);
        let pool = random_matrix(14, 40, 15);
        let gt = GroundTruth::diagonal(10);
        let id = TransformConfig::identity();
        let full = evaluate_full(&test, &gt, &id, &[1, 5, 10]).unwrap();
        for cfg in [
            pcfg(40, 5, 1, 0),
            pcfg(40, 41, 3, 99),
            pcfg(40, 2, 7, 5),
        ] {
            let r = single_query_eval(&test, &gt, &pool, &id, &cfg, &[1, 5, 10]).unwrap();
            assert_eq!(r, full, "identity run differs under {cfg:?}");
        }
    }

    #[test]
    fn single_query_smallest_m_runs() {
        let test = random_matrix(15, 3, 6);
        let pool = random_matrix(16, 4, 6);
        let gt = GroundTruth::diagonal(3);
        let r = single_query_eval(
            &test,
            &gt,
            &pool,
            &TransformConfig::sinkhorn(0.05, 5),
            &pcfg(4, 2, 2, 1),
            &[1, 3],
        )
        .unwrap();
        assert_eq!(r.per_query_rank.len(), 3);
        assert!(r.recall_at[&1] >= 0.0 && r.recall_at[&1] <= 1.0);
        assert!(r.recall_at[&1] <= r.recall_at[&3]);
    }

    #[test]
    fn single_query_is_deterministic() {
        let test = random_matrix(17, 6, 12);
        let pool = random_matrix(18, 30, 12);
        let gt = GroundTruth::diagonal(6);
        let tc = TransformConfig::sinkhorn(0.05, 10);
        let cfg = pcfg(30, 8, 3, 77);
        let a = single_query_eval(&test, &gt, &pool, &tc, &cfg, &[1, 5]).unwrap();
        let b = single_query_eval(&test, &gt, &pool, &tc, &cfg, &[1, 5]).unwrap();
        assert_eq!(a, b);
        let c = single_query_eval(
            &test,
            &gt,
            &pool,
            &tc,
            &pcfg(30, 8, 3, 78),
            &[1, 5],
        )
        .unwrap();
        assert_ne!(a.per_query_rank, c.per_query_rank, "seed should matter");
    }

    #[test]
    fn transforms_are_row_permutation_equivariant() {
        let a = random_matrix(19, 7, 11);
        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let permuted = a.select_rows(&perm).unwrap();
        for tc in [
            TransformConfig::dual_softmax(100.0),
            TransformConfig::sinkhorn(0.05, 20),
        ] {
            let direct = transforms::apply(&tc, &a).unwrap();
            let roundabout = transforms::apply(&tc, &permuted).unwrap();
            for (pos, &orig) in perm.iter().enumerate() {
                for (x, y) in roundabout.row(pos).iter().zip(direct.row(orig)) {
                    assert!(
                        (x - y).abs() <= 1e-12,
                        "{tc:?} row {orig}: {x} vs {y}"
                    );
                }
            }
        }
    }

    /// Full-pool consistency: when each query's pseudo-test contains
    /// every test row exactly once, single-query ranks must equal the
    /// full-evaluation ranks (row-permutation equivariance).
    #[test]
    fn single_query_exhaustive_pool_matches_full_eval() {
        let n = 12;
        let test = random_matrix(20, n, n);
        let gt = GroundTruth::diagonal(n);
        for tc in [
            TransformConfig::dual_softmax(100.0),
            TransformConfig::sinkhorn(0.05, 20),
        ] {
            let full = evaluate_full(&test, &gt, &tc, &[1]).unwrap();
            let mut single_ranks = Vec::with_capacity(n);
            for q in 0..n {
                let others: Vec<usize> = (0..n).filter(|&i| i != q).collect();
                let pool = test.select_rows(&others).unwrap();
                let one_row = test.select_rows(&[q]).unwrap();
                let one_gt = GroundTruth::from_pairs(vec![(0usize, vec![q])]).unwrap();
                let r = single_query_eval(
                    &one_row,
                    &one_gt,
                    &pool,
                    &tc,
                    &pcfg(n - 1, n, 1, 5),
                    &[1],
                )
                .unwrap();
                single_ranks.push(r.per_query_rank[0]);
            }
            assert_eq!(single_ranks, full.per_query_rank, "{tc:?}");
        }
    }

    /// Access-logging double for the isolation contract.
    struct LoggingSource<'a> {
        inner: &'a SimilarityMatrix,
        log: RefCell<Vec<usize>>,
    }

    impl RowSource for LoggingSource<'_> {
        fn n_rows(&self) -> usize {
            self.inner.n_rows()
        }

        fn n_cols(&self) -> usize {
            self.inner.n_cols()
        }

        fn row(&self, i: usize) -> &[f64] {
            self.log.borrow_mut().push(i);
            self.inner.row(i)
        }
    }

    #[test]
    fn single_query_reads_only_the_query_under_evaluation() {
        let test = random_matrix(21, 8, 10);
        let pool = random_matrix(22, 20, 10);
        let gt = GroundTruth::from_pairs(vec![
            (1usize, vec![1usize]),
            (4, vec![4]),
            (6, vec![0, 6]),
        ])
        .unwrap();
        let source = LoggingSource {
            inner: &test,
            log: RefCell::new(Vec::new()),
        };
        for method in [Method::DualSoftmax, Method::Sinkhorn, Method::Identity] {
            source.log.borrow_mut().clear();
            let tc = TransformConfig {
                method,
                temperature: if method == Method::Sinkhorn { 0.05 } else { 100.0 },
                sinkhorn_steps: 5,
            };
            single_query_eval_on(&source, &gt, &pool, &tc, &pcfg(20, 6, 3, 1), &[1])
                .unwrap();
            assert_eq!(
                *source.log.borrow(),
                vec![1, 4, 6],
                "{method:?} touched unexpected test rows"
            );
        }
    }

    #[test]
    fn transpose_direction_involutes_and_inverts() {
        let a = random_matrix(23, 2, 3);
        let gt = GroundTruth::from_pairs(vec![(0usize, vec![2usize]), (1, vec![0, 2])]).unwrap();
        let (at, gti) = transpose_direction(&a, &gt).unwrap();
        assert_eq!(at.n_rows(), 3);
        assert_eq!(at.entry(2, 1), a.entry(1, 2));
        assert_eq!(gti.relevant(2), Some(&[0usize, 1][..]));
        let (back, gt_back) = transpose_direction(&at, &gti).unwrap();
        assert_eq!(back, a);
        assert_eq!(gt_back, gt);

        let square = random_matrix(24, 4, 4);
        let diag = GroundTruth::diagonal(4);
        let (_, gtd) = transpose_direction(&square, &diag).unwrap();
        assert_eq!(gtd, diag);
    }
}

//! Random tableaux under the uniform measure.
//!
//! Growth is Markov in the unrestricted count `U_k`, so the number of ways to
//! complete a partial tableau depends only on `(k, U_k)`. [`UChainTable`]
//! holds those counts exactly and [`sample_uniform`] draws each step with
//! probability proportional to the completions it leaves, which makes the
//! result exactly uniform.
//!
//! [`sample_weighted`] instead picks one of the `2^(U+1)` children uniformly
//! at every step and corrects with an importance weight, which costs O(n)
//! per sample and needs no table.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_cap, Error, Result};
use crate::stats::{StatRecord, Statistic};
use crate::tableau::{ColumnFill, Entry, GrowthHistory, Tableau};

pub const DEFAULT_MAX_CHAIN: usize = 300;

/// `counts[k][u]`: completions to size `n` from step `k` with `U_k = u`.
#[derive(Debug, Clone)]
pub struct UChainTable {
    n: usize,
    counts: Vec<Vec<BigUint>>,
    binomial: Vec<Vec<BigUint>>,
}

/// Pascal's triangle up to row `n`.
fn pascal(n: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![BigUint::one(); i + 1];
        for j in 1..i {
            row[j] = &rows[i - 1][j - 1] + &rows[i - 1][j];
        }
        rows.push(row);
    }
    rows
}

impl UChainTable {
    pub fn build(n: usize) -> Result<Self> {
        Self::build_with_cap(n, DEFAULT_MAX_CHAIN)
    }

    pub fn build_with_cap(n: usize, max: usize) -> Result<Self> {
        check_cap("chain length", n, max)?;
        let binomial = pascal(n);
        let mut counts: Vec<Vec<BigUint>> = vec![Vec::new(); n + 1];
        counts[n] = vec![BigUint::one(); n + 1];
        for k in (0..n).rev() {
            let next = &counts[k + 1];
            let row = (0..=k)
                .map(|u| {
                    let mut total = next[u + 1].clone();
                    for j in 0..=u {
                        total += west_bucket_size(&binomial, u, j) * &next[1 + j];
                    }
                    total
                })
                .collect();
            counts[k] = row;
        }
        Ok(UChainTable {
            n,
            counts,
            binomial,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Completions from step `k` with `u` unrestricted rows.
    pub fn count(&self, k: usize, u: usize) -> &BigUint {
        &self.counts[k][u]
    }

    /// Total number of tableaux of size `n`.
    pub fn total(&self) -> &BigUint {
        &self.counts[0][0]
    }

    fn choose(&self, n: usize, k: usize) -> BigUint {
        self.binomial[n].get(k).cloned().unwrap_or_default()
    }
}

/// West children of a `u`-row parent that end with `1 + j` unrestricted rows.
fn west_bucket_size(binomial: &[Vec<BigUint>], u: usize, j: usize) -> BigUint {
    let c = &binomial[u][j];
    if j == u {
        c * 2u32 - 1u32
    } else {
        c * 2u32
    }
}

/// The `rank`-th subset (lexicographic) of `size` elements out of `m`,
/// as membership bits.
fn unrank_subset(table: &UChainTable, m: usize, mut size: usize, mut rank: BigUint) -> Vec<bool> {
    let mut bits = Vec::with_capacity(m);
    for p in 0..m {
        if size == 0 {
            bits.push(false);
            continue;
        }
        let with_p = table.choose(m - p - 1, size - 1);
        if rank < with_p {
            bits.push(true);
            size -= 1;
        } else {
            rank -= with_p;
            bits.push(false);
        }
    }
    bits
}

/// The `index`-th fill (in a fixed order) among the west fills of a `u`-row
/// parent that leave `1 + j` unrestricted rows.
///
/// The first `C(u, j)` fills put a 1 in the diagonal cell and 1s in `j` of
/// the `u` rows. The rest have a diagonal 0 with the first 1 in row `g`;
/// rows above it stay unrestricted, so `j + 1 - g` of the `u - g` rows below
/// it must hold a 1.
fn decode_bucket_fill(table: &UChainTable, u: usize, j: usize, mut index: BigUint) -> ColumnFill {
    let head = table.choose(u, j);
    if index < head {
        let mut bits = vec![true];
        bits.extend(unrank_subset(table, u, j, index));
        return ColumnFill::new(bits);
    }
    index -= head;
    for g in 1..=(j + 1).min(u) {
        let group = table.choose(u - g, j + 1 - g);
        if index < group {
            let mut bits = vec![false; g];
            bits.push(true);
            bits.extend(unrank_subset(table, u - g, j + 1 - g, index));
            return ColumnFill::new(bits);
        }
        index -= group;
    }
    unreachable!("index exceeds bucket size")
}

/// Exactly uniform growth history of size `table.n()`.
pub fn sample_uniform_history<R: Rng + ?Sized>(table: &UChainTable, rng: &mut R) -> GrowthHistory {
    let n = table.n;
    let mut entries = Vec::with_capacity(n);
    let mut u = 0;
    for k in 0..n {
        let next = &table.counts[k + 1];
        let mut r = rng.gen_biguint_below(&table.counts[k][u]);

        if r < next[u + 1] {
            entries.push(Entry::South);
            u += 1;
            continue;
        }
        r -= &next[u + 1];

        let mut chosen = None;
        for j in 0..=u {
            let weight = &next[1 + j];
            let block = west_bucket_size(&table.binomial, u, j) * weight;
            if r < block {
                chosen = Some((j, r / weight));
                break;
            }
            r -= block;
        }
        let (j, index) = chosen.expect("draw below the completion count");
        entries.push(Entry::West(decode_bucket_fill(table, u, j, index)));
        u = 1 + j;
    }
    GrowthHistory::new(entries)
}

pub fn sample_uniform<R: Rng + ?Sized>(table: &UChainTable, rng: &mut R) -> Tableau {
    Tableau::realize(sample_uniform_history(table, rng)).expect("sampled histories are valid")
}

/// One draw of the importance sampler.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    pub history: GrowthHistory,
    pub log_weight: f64,
}

impl WeightedSample {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Grows `n` steps, choosing uniformly among the `2^(U+1)` children each
/// time (the all-zero bit pattern stands for the south child). The weight
/// `prod_k 2^(U_{k-1}+1) / (2k)` is the ratio of the uniform probability to
/// the proposal probability and is accumulated in log space.
pub fn sample_weighted_history<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> WeightedSample {
    let mut entries = Vec::with_capacity(n);
    let mut u = 0usize;
    let mut log_weight = 0.0;
    for k in 1..=n {
        let len = u + 1;
        log_weight += len as f64 * std::f64::consts::LN_2 - ((2 * k) as f64).ln();
        let bits = random_bits(rng, len);
        if bits.iter().any(|&b| b) {
            let fill = ColumnFill::new(bits);
            u = fill.resulting_unrestricted();
            entries.push(Entry::West(fill));
        } else {
            entries.push(Entry::South);
            u += 1;
        }
    }
    WeightedSample {
        history: GrowthHistory::new(entries),
        log_weight,
    }
}

pub fn sample_weighted<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> (Tableau, f64) {
    let s = sample_weighted_history(n, rng);
    let w = s.weight();
    (
        Tableau::realize(s.history).expect("sampled histories are valid"),
        w,
    )
}

fn random_bits<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> Vec<bool> {
    let mut bits = Vec::with_capacity(len);
    while bits.len() < len {
        let word = rng.next_u64();
        let take = (len - bits.len()).min(64);
        bits.extend((0..take).map(|i| (word >> i) & 1 == 1));
    }
    bits
}

/// Exact `E[w^2]` of the importance weight under the proposal, which equals
/// the mean weight under the uniform measure. `1 / E[w^2]` is the expected
/// effective sample size per draw.
pub fn weight_second_moment(n: usize) -> Result<BigRational> {
    check_cap("chain length", n, DEFAULT_MAX_CHAIN)?;
    let binomial = pascal(n);
    // sums[u]: sum over prefixes ending at U = u of prod 2^(U_{k-1}+1).
    let mut sums = vec![BigUint::one()];
    for k in 0..n {
        let mut next = vec![BigUint::default(); k + 2];
        for (u, s) in sums.iter().enumerate() {
            let f = s << (u + 1);
            next[u + 1] += &f;
            for j in 0..=u {
                next[1 + j] += &f * west_bucket_size(&binomial, u, j);
            }
        }
        sums = next;
    }
    let total: BigUint = sums.iter().sum();
    let count = (1..=n).fold(BigUint::one(), |acc, k| acc * (2 * k));
    Ok(BigRational::new(
        BigInt::from(total),
        BigInt::from(&count * &count),
    ))
}

/// The RNG for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sufficient statistics of a self-normalized importance-sampling run for
/// one statistic. Merging is plain addition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightedSums {
    pub samples: u64,
    pub w: f64,
    pub w2: f64,
    pub wx: f64,
    pub w2x: f64,
    pub w2x2: f64,
}

impl WeightedSums {
    pub fn add(&mut self, w: f64, x: f64) {
        self.samples += 1;
        self.w += w;
        self.w2 += w * w;
        self.wx += w * x;
        self.w2x += w * w * x;
        self.w2x2 += w * w * x * x;
    }

    pub fn merge(&mut self, other: &WeightedSums) {
        self.samples += other.samples;
        self.w += other.w;
        self.w2 += other.w2;
        self.wx += other.wx;
        self.w2x += other.w2x;
        self.w2x2 += other.w2x2;
    }

    pub fn mean(&self) -> f64 {
        self.wx / self.w
    }

    /// Delta-method standard error of the self-normalized mean.
    pub fn std_error(&self) -> f64 {
        let mu = self.mean();
        let var = (self.w2x2 - 2.0 * mu * self.w2x + mu * mu * self.w2) / (self.w * self.w);
        var.max(0.0).sqrt()
    }

    pub fn ess(&self) -> f64 {
        self.w * self.w / self.w2
    }

    pub fn mean_weight(&self) -> f64 {
        self.w / self.samples as f64
    }

    /// Standard error of the mean weight.
    pub fn weight_std_error(&self) -> f64 {
        let n = self.samples as f64;
        let mean = self.mean_weight();
        let var = (self.w2 / n - mean * mean) * n / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub statistic: Statistic,
    pub n: usize,
    pub num_samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub effective_sample_size: f64,
    pub mean_weight: f64,
    pub weight_std_error: f64,
}

impl EstimateReport {
    fn from_sums(statistic: Statistic, n: usize, seed: u64, sums: &WeightedSums) -> Self {
        EstimateReport {
            statistic,
            n,
            num_samples: sums.samples,
            seed,
            mean: sums.mean(),
            std_error: sums.std_error(),
            effective_sample_size: sums.ess(),
            mean_weight: sums.mean_weight(),
            weight_std_error: sums.weight_std_error(),
        }
    }
}

/// Self-normalized importance-sampling estimate of one statistic.
pub fn estimate(
    n: usize,
    statistic: Statistic,
    num_samples: u64,
    seed: u64,
) -> Result<EstimateReport> {
    Ok(estimate_many(n, &[statistic], num_samples, seed, 1)?.remove(0))
}

/// Estimates several statistics from one set of draws, split over `streams`
/// independent RNG streams that run on the rayon pool. Output depends only
/// on the arguments, not on the thread count.
pub fn estimate_many(
    n: usize,
    statistics: &[Statistic],
    num_samples: u64,
    seed: u64,
    streams: u64,
) -> Result<Vec<EstimateReport>> {
    if n == 0 {
        return Err(Error::Domain("estimate needs n >= 1".into()));
    }
    check_sampling_args(num_samples, streams)?;
    check_cap("sample size", n, DEFAULT_MAX_CHAIN)?;

    let per_stream = |s: u64| num_samples / streams + u64::from(s < num_samples % streams);
    let parts: Vec<Vec<WeightedSums>> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s);
            let mut sums = vec![WeightedSums::default(); statistics.len()];
            for _ in 0..per_stream(s) {
                let draw = sample_weighted_history(n, &mut rng);
                let w = draw.weight();
                let record = StatRecord::from_history(&draw.history);
                for (acc, stat) in sums.iter_mut().zip(statistics) {
                    acc.add(w, stat.of(&record) as f64);
                }
            }
            sums
        })
        .collect();
    Ok(pool(n, statistics, seed, &parts))
}

/// Plain Monte Carlo means from the exact uniform sampler, with the same
/// stream layout as [`estimate_many`]. Weights are all 1.
pub fn estimate_uniform(
    n: usize,
    statistics: &[Statistic],
    num_samples: u64,
    seed: u64,
    streams: u64,
) -> Result<Vec<EstimateReport>> {
    check_sampling_args(num_samples, streams)?;
    let table = UChainTable::build(n)?;
    let per_stream = |s: u64| num_samples / streams + u64::from(s < num_samples % streams);
    let parts: Vec<Vec<WeightedSums>> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s);
            let mut sums = vec![WeightedSums::default(); statistics.len()];
            for _ in 0..per_stream(s) {
                let record = StatRecord::from_history(&sample_uniform_history(&table, &mut rng));
                for (acc, stat) in sums.iter_mut().zip(statistics) {
                    acc.add(1.0, stat.of(&record) as f64);
                }
            }
            sums
        })
        .collect();
    Ok(pool(n, statistics, seed, &parts))
}

fn check_sampling_args(num_samples: u64, streams: u64) -> Result<()> {
    if num_samples < 2 {
        return Err(Error::Domain("estimate needs at least 2 samples".into()));
    }
    if streams == 0 || streams > num_samples {
        return Err(Error::Domain(format!(
            "stream count {streams} must be in 1..={num_samples}"
        )));
    }
    Ok(())
}

fn pool(n: usize, statistics: &[Statistic], seed: u64, parts: &[Vec<WeightedSums>]) -> Vec<EstimateReport> {
    let mut total = vec![WeightedSums::default(); statistics.len()];
    for part in parts {
        for (acc, p) in total.iter_mut().zip(part) {
            acc.merge(p);
        }
    }
    statistics
        .iter()
        .zip(&total)
        .map(|(&stat, sums)| EstimateReport::from_sums(stat, n, seed, sums))
        .collect()
}

/// Lossy conversion used in reports.
pub fn biguint_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{children, expected_count};
    use std::collections::{BTreeMap, HashSet};

    #[test]
    fn chain_table_small() {
        assert_eq!(UChainTable::build(1).unwrap().total(), &BigUint::from(2u32));
        let t2 = UChainTable::build(2).unwrap();
        assert_eq!(t2.total(), &BigUint::from(8u32));
        assert_eq!(t2.count(1, 1), &BigUint::from(4u32));
        assert_eq!(UChainTable::build(7).unwrap().total(), &BigUint::from(645_120u32));
        assert!(matches!(UChainTable::build(301), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn chain_table_matches_count_to_fifty() {
        for n in 0..=50 {
            let t = UChainTable::build(n).unwrap();
            assert_eq!(
                t.total().to_string(),
                expected_count(n).to_string(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn bucket_decoding_covers_children_exactly() {
        // For parents with u = 0..=4, decoding every index of every bucket
        // must reproduce the west children, each exactly once.
        let table = UChainTable::build(6).unwrap();
        for parent in ["", "S", "SS", "SSS", "SSSS"] {
            let parent: Tableau = parent.parse().unwrap();
            let u = parent.unrestricted();
            let expected: HashSet<ColumnFill> = children(&parent)
                .children
                .iter()
                .filter_map(|c| c.history().entries().last().unwrap().fill().cloned())
                .collect();
            let mut decoded = HashSet::new();
            for j in 0..=u {
                let size = west_bucket_size(&table.binomial, u, j).to_u64().unwrap();
                for i in 0..size {
                    let fill = decode_bucket_fill(&table, u, j, BigUint::from(i));
                    assert_eq!(fill.len(), u + 1);
                    assert_eq!(fill.resulting_unrestricted(), 1 + j);
                    assert!(decoded.insert(fill));
                }
            }
            assert_eq!(decoded, expected);
        }
    }

    #[test]
    fn uniform_sampler_size_one_and_two() {
        let mut rng = stream_rng(11, 0);
        let table = UChainTable::build(2).unwrap();
        let mut counts = BTreeMap::new();
        for _ in 0..80_000 {
            *counts
                .entry(sample_uniform_history(&table, &mut rng).to_string())
                .or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 8);
        for (k, c) in counts {
            // Binomial(80000, 1/8): sd ~ 93.5.
            assert!((c as f64 - 10_000.0).abs() < 500.0, "{k}: {c}");
        }
    }

    #[test]
    fn weighted_sampler_weights() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            assert!((sample_weighted_history(1, &mut rng).weight() - 1.0).abs() < 1e-12);
            assert!((sample_weighted_history(2, &mut rng).weight() - 1.0).abs() < 1e-12);
            let s = sample_weighted_history(3, &mut rng);
            let u2 = s.history.unrestricted_trace().unwrap()[1];
            let expected = if u2 == 1 { 2.0 / 3.0 } else { 4.0 / 3.0 };
            assert!((s.weight() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = estimate_many(5, &[Statistic::Rows], 1000, 42, 4).unwrap();
        let b = estimate_many(5, &[Statistic::Rows], 1000, 42, 4).unwrap();
        assert_eq!(a, b);
        let table = UChainTable::build(5).unwrap();
        let (mut r1, mut r2) = (stream_rng(9, 1), stream_rng(9, 1));
        for _ in 0..20 {
            assert_eq!(
                sample_uniform_history(&table, &mut r1),
                sample_uniform_history(&table, &mut r2)
            );
        }
    }

    #[test]
    fn estimate_rows_at_two() {
        let r = estimate(2, Statistic::Rows, 100_000, 5).unwrap();
        assert!((r.mean - 0.75).abs() < 4.0 * r.std_error, "{r:?}");
        assert!(r.effective_sample_size <= r.num_samples as f64 + 1e-6);
        assert!(r.std_error >= 0.0);
    }

    #[test]
    fn weight_second_moment_small() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(weight_second_moment(0).unwrap(), q(1, 1));
        assert_eq!(weight_second_moment(2).unwrap(), q(1, 1));
        assert_eq!(weight_second_moment(3).unwrap(), q(10, 9));
    }

    #[test]
    fn weighted_estimates_match_brute_at_six() {
        use crate::enumerate::brute_expectation;
        let reports = estimate_many(6, &Statistic::ALL, 200_000, 21, 4).unwrap();
        for r in reports {
            let exact = crate::expect::to_f64(&brute_expectation(6, r.statistic).unwrap().mean);
            assert!((r.mean - exact).abs() < 4.0 * r.std_error, "{r:?} vs {exact}");
            assert!((r.mean_weight - 1.0).abs() < 4.0 * r.weight_std_error, "{r:?}");
        }
    }

    #[test]
    fn uniform_estimate_at_five() {
        let r = estimate_uniform(5, &[Statistic::Rows], 50_000, 3, 4).unwrap().remove(0);
        assert!((r.mean - 1.5).abs() < 4.0 * r.std_error, "{r:?}");
        assert_eq!(r.mean_weight, 1.0);
        assert!((r.effective_sample_size - 50_000.0).abs() < 1e-6);
    }

    #[test]
    fn estimate_rejects_bad_arguments() {
        assert!(matches!(estimate(3, Statistic::Rows, 1, 0), Err(Error::Domain(_))));
        assert!(matches!(estimate(0, Statistic::Rows, 10, 0), Err(Error::Domain(_))));
    }
}

//! Exhaustive depth-first enumeration of all tableaux of a given size.
//!
//! Tableaux are grown one step at a time. From a tableau with `U`
//! unrestricted rows there are exactly `2^(U+1)` extensions: one south step
//! and one west step per nonzero fill of the `U + 1` free cells. Nothing is
//! materialized: a [`Visitor`] sees each leaf as a borrowed [`Node`] and
//! accumulates whatever it needs. Visit order is fixed: south child first,
//! then west children by ascending fill value (position 1 as the most
//! significant bit).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_cap, Error, Result};
use crate::stats::{pair_counts, StatRecord, Statistic};
use crate::tableau::{ColumnFill, Entry, GrowthHistory, Step, Tableau};

pub const DEFAULT_MAX_SIZE: usize = 8;

/// Fills are packed into a `u64`, so sizes stay below this regardless of the
/// configured cap.
const HARD_MAX_SIZE: usize = 62;

/// A column fill packed into an integer; position 1 is the most significant
/// of the `len` low bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FillMask {
    pub len: u32,
    pub bits: u64,
}

impl FillMask {
    pub fn topmost_one(self) -> usize {
        debug_assert!(self.bits != 0);
        (self.len - (63 - self.bits.leading_zeros())) as usize
    }

    pub fn resulting_unrestricted(self) -> usize {
        let g = self.topmost_one();
        let ones = self.bits.count_ones() as usize;
        if g == 1 {
            ones
        } else {
            ones + g - 2
        }
    }

    pub fn to_fill(self) -> ColumnFill {
        ColumnFill::new(
            (0..self.len)
                .rev()
                .map(|shift| (self.bits >> shift) & 1 == 1)
                .collect(),
        )
    }
}

/// A borrowed view of one tableau during enumeration.
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    pub steps: &'a [Step],
    pub fills: &'a [Option<FillMask>],
    pub u_trace: &'a [usize],
}

impl Node<'_> {
    pub fn size(&self) -> usize {
        self.steps.len()
    }

    pub fn unrestricted(&self) -> usize {
        self.u_trace.last().copied().unwrap_or(0)
    }

    /// Unrestricted count after `k` steps (`U_0 = 0`).
    pub fn unrestricted_at(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            self.u_trace[k - 1]
        }
    }

    pub fn rows_in_prefix(&self, k: usize) -> usize {
        self.steps[..k].iter().filter(|&&s| s == Step::South).count()
    }

    /// `G_k` for step `k` (1-based), `None` on south steps.
    pub fn topmost_one(&self, k: usize) -> Option<usize> {
        self.fills[k - 1].map(FillMask::topmost_one)
    }

    pub fn history(&self) -> GrowthHistory {
        GrowthHistory::new(
            self.fills
                .iter()
                .map(|f| match f {
                    None => Entry::South,
                    Some(mask) => Entry::West(mask.to_fill()),
                })
                .collect(),
        )
    }

    pub fn stats(&self) -> StatRecord {
        let [ss, ww, sw, ws] = pair_counts(self.steps);
        let g_trace: Vec<Option<usize>> = self
            .fills
            .iter()
            .map(|f| f.map(FillMask::topmost_one))
            .collect();
        let rows = self.rows_in_prefix(self.size());
        StatRecord {
            n: self.size(),
            rows,
            columns: self.size() - rows,
            unrestricted: self.unrestricted(),
            diagonal_ones: g_trace.iter().filter(|g| **g == Some(1)).count(),
            ss_pairs: ss,
            ww_pairs: ww,
            sw_pairs: sw,
            ws_pairs: ws,
            g_trace,
        }
    }
}

pub trait Visitor {
    fn visit(&mut self, node: &Node<'_>);
}

impl<F: FnMut(&Node<'_>)> Visitor for F {
    fn visit(&mut self, node: &Node<'_>) {
        self(node)
    }
}

/// Accumulators that can be combined across enumeration subtrees.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

#[derive(Debug, Clone, Default)]
struct Walker {
    steps: Vec<Step>,
    fills: Vec<Option<FillMask>>,
    u_trace: Vec<usize>,
}

impl Walker {
    fn node(&self) -> Node<'_> {
        Node {
            steps: &self.steps,
            fills: &self.fills,
            u_trace: &self.u_trace,
        }
    }

    fn push(&mut self, fill: Option<FillMask>, u: usize) {
        self.steps
            .push(if fill.is_some() { Step::West } else { Step::South });
        self.fills.push(fill);
        self.u_trace.push(u);
    }

    fn pop(&mut self) {
        self.steps.pop();
        self.fills.pop();
        self.u_trace.pop();
    }

    fn walk<V: Visitor + ?Sized>(&mut self, target: usize, visitor: &mut V) -> u64 {
        if self.steps.len() == target {
            visitor.visit(&self.node());
            return 1;
        }
        let u = self.u_trace.last().copied().unwrap_or(0);
        let mut count = 0;

        self.push(None, u + 1);
        count += self.walk(target, visitor);
        self.pop();

        let len = u as u32 + 1;
        for bits in 1..(1u64 << len) {
            let mask = FillMask { len, bits };
            self.push(Some(mask), mask.resulting_unrestricted());
            count += self.walk(target, visitor);
            self.pop();
        }
        count
    }
}

fn check_size(n: usize, max_size: usize) -> Result<()> {
    check_cap("tableau size", n, max_size.min(HARD_MAX_SIZE))
}

/// Fails with `ResourceCap` if `n` exceeds the default enumeration cap.
pub fn check_enumeration_size(n: usize) -> Result<()> {
    check_size(n, DEFAULT_MAX_SIZE)
}

/// Visits every tableau of size `n` (default cap) and returns their count.
pub fn enumerate_all<V: Visitor + ?Sized>(n: usize, visitor: &mut V) -> Result<u64> {
    enumerate_with_cap(n, DEFAULT_MAX_SIZE, visitor)
}

pub fn enumerate_with_cap<V: Visitor + ?Sized>(
    n: usize,
    max_size: usize,
    visitor: &mut V,
) -> Result<u64> {
    check_size(n, max_size)?;
    Ok(Walker::default().walk(n, visitor))
}

/// Splits the enumeration at depth two and runs the subtrees on the current
/// rayon pool. Each subtree gets a fresh accumulator from `make`; results
/// are merged in visit order, so exact totals do not depend on scheduling.
pub fn enumerate_parallel<V, F>(n: usize, max_size: usize, make: F) -> Result<(u64, V)>
where
    V: Visitor + Merge + Send,
    F: Fn() -> V + Sync,
{
    check_size(n, max_size)?;
    let depth = n.min(2);
    let mut prefixes = Vec::new();
    Walker::default().walk(depth, &mut |node: &Node<'_>| {
        prefixes.push(Walker {
            steps: node.steps.to_vec(),
            fills: node.fills.to_vec(),
            u_trace: node.u_trace.to_vec(),
        })
    });
    let parts: Vec<(u64, V)> = prefixes
        .into_par_iter()
        .map(|mut prefix| {
            let mut visitor = make();
            let count = prefix.walk(n, &mut visitor);
            (count, visitor)
        })
        .collect();

    let mut total = 0;
    let mut merged = make();
    for (count, part) in parts {
        total += count;
        merged.merge(part);
    }
    Ok((total, merged))
}

/// All extensions of a tableau by one step, in enumeration order.
#[derive(Debug, Clone)]
pub struct ParentGroup {
    pub parent: Tableau,
    pub children: Vec<Tableau>,
}

pub fn children(parent: &Tableau) -> ParentGroup {
    let u = parent.unrestricted();
    let len = u + 1;
    let mut kids = Vec::with_capacity(1 << len);
    kids.push(parent.extend(Entry::South).expect("south step always extends"));
    for bits in 1..(1u64 << len) {
        let fill = FillMask {
            len: len as u32,
            bits,
        }
        .to_fill();
        kids.push(
            parent
                .extend(Entry::West(fill))
                .expect("nonzero fill of the right length"),
        );
    }
    ParentGroup {
        parent: parent.clone(),
        children: kids,
    }
}

/// Number of children of `parent` by their unrestricted count.
pub fn child_histogram(parent: &Tableau) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for child in children(parent).children {
        *hist.entry(child.unrestricted()).or_insert(0) += 1;
    }
    hist
}

/// Integer sums of every [`Statistic`] over the visited tableaux.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatTotals {
    pub count: u64,
    sums: [u64; 8],
}

impl StatTotals {
    pub fn total(&self, statistic: Statistic) -> u64 {
        let i = Statistic::ALL.iter().position(|&s| s == statistic).unwrap();
        self.sums[i]
    }

    pub fn mean(&self, statistic: Statistic) -> BigRational {
        ratio(self.total(statistic) as u128, self.count)
    }

    pub fn add(&mut self, record: &StatRecord) {
        self.count += 1;
        for (sum, stat) in self.sums.iter_mut().zip(Statistic::ALL) {
            *sum += stat.of(record) as u64;
        }
    }
}

impl Visitor for StatTotals {
    fn visit(&mut self, node: &Node<'_>) {
        self.add(&node.stats());
    }
}

impl Merge for StatTotals {
    fn merge(&mut self, other: Self) {
        self.count += other.count;
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            *a += b;
        }
    }
}

/// Position-indexed events on the border and the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionEvent {
    /// Step `k` is south.
    South,
    /// Step `k` is west.
    West,
    /// Steps `k-1` and `k` are both south.
    SouthPair,
    /// Steps `k-1` and `k` are both west.
    WestPair,
    /// Step `k` is west with a 1 in its diagonal cell (`G_k = 1`).
    TopmostOneFirst,
}

impl PositionEvent {
    pub const ALL: [PositionEvent; 5] = [
        PositionEvent::South,
        PositionEvent::West,
        PositionEvent::SouthPair,
        PositionEvent::WestPair,
        PositionEvent::TopmostOneFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PositionEvent::South => "south",
            PositionEvent::West => "west",
            PositionEvent::SouthPair => "south_pair",
            PositionEvent::WestPair => "west_pair",
            PositionEvent::TopmostOneFirst => "g_first",
        }
    }

    /// Smallest position at which the event is defined.
    pub fn min_k(self) -> usize {
        match self {
            PositionEvent::SouthPair | PositionEvent::WestPair => 2,
            _ => 1,
        }
    }

    fn holds(self, node: &Node<'_>, k: usize) -> bool {
        let s = node.steps;
        match self {
            PositionEvent::South => s[k - 1] == Step::South,
            PositionEvent::West => s[k - 1] == Step::West,
            PositionEvent::SouthPair => s[k - 2] == Step::South && s[k - 1] == Step::South,
            PositionEvent::WestPair => s[k - 2] == Step::West && s[k - 1] == Step::West,
            PositionEvent::TopmostOneFirst => node.topmost_one(k) == Some(1),
        }
    }
}

/// Event counts per position over all tableaux of one size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionTotals {
    pub n: usize,
    pub count: u64,
    counts: Vec<[u64; 5]>,
}

impl PositionTotals {
    pub fn new(n: usize) -> Self {
        PositionTotals {
            n,
            count: 0,
            counts: vec![[0; 5]; n],
        }
    }

    pub fn hits(&self, event: PositionEvent, k: usize) -> Result<u64> {
        if k < event.min_k() || k > self.n {
            return Err(Error::IndexOutOfRange { k, n: self.n });
        }
        let e = PositionEvent::ALL.iter().position(|&x| x == event).unwrap();
        Ok(self.counts[k - 1][e])
    }

    pub fn probability(&self, event: PositionEvent, k: usize) -> Result<BigRational> {
        Ok(ratio(self.hits(event, k)? as u128, self.count))
    }
}

impl Visitor for PositionTotals {
    fn visit(&mut self, node: &Node<'_>) {
        self.count += 1;
        for k in 1..=self.n {
            for (slot, event) in self.counts[k - 1].iter_mut().zip(PositionEvent::ALL) {
                if k >= event.min_k() && event.holds(node, k) {
                    *slot += 1;
                }
            }
        }
    }
}

impl Merge for PositionTotals {
    fn merge(&mut self, other: Self) {
        self.count += other.count;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

pub fn position_table(n: usize) -> Result<PositionTotals> {
    let mut totals = PositionTotals::new(n);
    enumerate_all(n, &mut totals)?;
    Ok(totals)
}

/// Exact fraction of tableaux of size `n` with `event` at position `k`.
pub fn per_position_probability(n: usize, event: PositionEvent, k: usize) -> Result<BigRational> {
    if k < event.min_k() || k > n {
        return Err(Error::IndexOutOfRange { k, n });
    }
    position_table(n)?.probability(event, k)
}

/// Exact mean of a statistic under the uniform measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteReport {
    pub n: usize,
    pub statistic: Statistic,
    pub total: BigInt,
    pub count: BigInt,
    pub mean: BigRational,
}

pub fn brute_expectation(n: usize, statistic: Statistic) -> Result<BruteReport> {
    let mut totals = StatTotals::default();
    enumerate_all(n, &mut totals)?;
    Ok(BruteReport {
        n,
        statistic,
        total: BigInt::from(totals.total(statistic)),
        count: BigInt::from(totals.count),
        mean: totals.mean(statistic),
    })
}

/// Exact mean of an integer-valued function of the tableau.
pub fn brute_mean<F>(n: usize, f: F) -> Result<BigRational>
where
    F: Fn(&Node<'_>) -> u128,
{
    let mut total: u128 = 0;
    let count = enumerate_all(n, &mut |node: &Node<'_>| total += f(node))?;
    Ok(ratio(total, count))
}

/// `E_m[a^{U_m}]` by enumeration.
pub fn brute_u_moment(m: usize, a: u64) -> Result<BigRational> {
    brute_mean(m, |node| (a as u128).pow(node.unrestricted() as u32))
}

/// Functions of the first `m - 1` steps used to test the change of measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixStatistic {
    One,
    Rows,
    Unrestricted,
}

impl PrefixStatistic {
    pub const ALL: [PrefixStatistic; 3] = [
        PrefixStatistic::One,
        PrefixStatistic::Rows,
        PrefixStatistic::Unrestricted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrefixStatistic::One => "one",
            PrefixStatistic::Rows => "rows",
            PrefixStatistic::Unrestricted => "unrestricted",
        }
    }

    fn eval(self, node: &Node<'_>, prefix: usize) -> u128 {
        match self {
            PrefixStatistic::One => 1,
            PrefixStatistic::Rows => node.rows_in_prefix(prefix) as u128,
            PrefixStatistic::Unrestricted => node.unrestricted_at(prefix) as u128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Compares `E_m[X a^{U_m}]` with `(a/m) E_{m-1}[X (a+1)^{U_{m-1}}]`, both
/// by enumeration, for `X` a function of the first `m - 1` steps.
pub fn measure_identity_check(m: usize, a: u64, x: PrefixStatistic) -> Result<IdentityCheck> {
    if m == 0 {
        return Err(Error::Domain("measure identity needs m >= 1".into()));
    }
    if a == 0 {
        return Err(Error::Domain("a must be a positive integer".into()));
    }
    let a128 = a as u128;
    let lhs = brute_mean(m, |node| {
        x.eval(node, m - 1) * a128.pow(node.unrestricted() as u32)
    })?;
    let inner = brute_mean(m - 1, |node| {
        x.eval(node, m - 1) * (a128 + 1).pow(node.unrestricted() as u32)
    })?;
    let rhs = BigRational::new(BigInt::from(a), BigInt::from(m)) * inner;
    Ok(IdentityCheck { lhs, rhs })
}

fn ratio(total: u128, count: u64) -> BigRational {
    if count == 0 {
        return BigRational::zero();
    }
    BigRational::new(BigInt::from(total), BigInt::from(count))
}

/// `2^n n!`, the number of tableaux of size `n`.
pub fn expected_count(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(2 * k))
}

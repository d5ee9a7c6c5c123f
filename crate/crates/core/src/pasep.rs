//! Tableau types as PASEP states, and a small exclusion-process engine.
//!
//! A border maps to a doubled, palindromic chain: the second half carries
//! the steps in order (south = occupied, west = empty) and the first half is
//! its mirror image.
//!
//! States are indexed by reading the sites as a binary number with site 1 as
//! the most significant bit, so `format!("{idx:0m$b}")` is the site string.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{check_cap, Error, Result};
use crate::sample::stream_rng;
use crate::tableau::{BorderPath, Step};

pub const MAX_DENSE_SITES: usize = 12;
pub const MAX_SIMULATED_SITES: usize = 20;

const FILLED: char = '•';
const EMPTY: char = '∘';

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PasepState(Vec<bool>);

impl PasepState {
    pub fn new(sites: Vec<bool>) -> Self {
        PasepState(sites)
    }

    pub fn sites(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_palindrome(&self) -> bool {
        self.0.iter().eq(self.0.iter().rev())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn from_index(index: usize, m: usize) -> Self {
        PasepState((0..m).map(|i| (index >> (m - 1 - i)) & 1 == 1).collect())
    }

    /// Sites as `0`/`1`.
    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for PasepState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0
            .iter()
            .try_for_each(|&b| write!(f, "{}", if b { FILLED } else { EMPTY }))
    }
}

/// Accepts `•`/`1` for occupied and `∘`/`0` for empty sites.
impl FromStr for PasepState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                FILLED | '1' => Ok(true),
                EMPTY | '0' => Ok(false),
                _ => Err(Error::Parse {
                    position: i,
                    message: format!("unexpected site {ch:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(PasepState)
    }
}

pub fn border_to_state(path: &BorderPath) -> PasepState {
    let half: Vec<bool> = path.steps().iter().map(|&s| s == Step::South).collect();
    let mut sites: Vec<bool> = half.iter().rev().copied().collect();
    sites.extend(half);
    PasepState(sites)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OccupancySummary {
    pub filled: usize,
    pub filled_pairs: usize,
    pub empty_pairs: usize,
}

pub fn occupancy_summary(state: &PasepState) -> OccupancySummary {
    let sites = state.sites();
    let pairs = |want: bool| sites.windows(2).filter(|w| w[0] == want && w[1] == want).count();
    OccupancySummary {
        filled: sites.iter().filter(|&&b| b).count(),
        filled_pairs: pairs(true),
        empty_pairs: pairs(false),
    }
}

/// Entry rate `alpha` at site 1, exit rate `beta` at the last site, left-hop
/// rate `q`; right hops have rate 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PasepParams {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
}

impl PasepParams {
    pub fn new(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        let p = PasepParams { alpha, beta, q };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("q", self.q)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be a finite rate >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Outgoing transitions `(target, rate)` from `state` on `m` sites.
fn transitions(state: usize, m: usize, p: &PasepParams, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let bit = |site: usize| 1usize << (m - site); // site is 1-based
    let occupied = |site: usize| state & bit(site) != 0;

    if !occupied(1) && p.alpha > 0.0 {
        out.push((state | bit(1), p.alpha));
    }
    if occupied(m) && p.beta > 0.0 {
        out.push((state & !bit(m), p.beta));
    }
    for i in 1..m {
        let swapped = state ^ bit(i) ^ bit(i + 1);
        match (occupied(i), occupied(i + 1)) {
            (true, false) => out.push((swapped, 1.0)),
            (false, true) if p.q > 0.0 => out.push((swapped, p.q)),
            _ => {}
        }
    }
}

/// Dense generator over the `2^m` states.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub m: usize,
    pub matrix: DMatrix<f64>,
}

impl RateMatrix {
    pub fn states(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

pub fn build_generator(m: usize, params: &PasepParams) -> Result<RateMatrix> {
    if m == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    check_cap("site count", m, MAX_DENSE_SITES)?;
    params.check()?;
    let size = 1usize << m;
    let mut matrix = DMatrix::zeros(size, size);
    let mut out = Vec::new();
    for s in 0..size {
        transitions(s, m, params, &mut out);
        let mut total = 0.0;
        for &(t, rate) in &out {
            matrix[(s, t)] += rate;
            total += rate;
        }
        matrix[(s, s)] = -total;
    }
    Ok(RateMatrix { m, matrix })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stationary {
    pub m: usize,
    pub probabilities: Vec<f64>,
    /// `max_j |(pi Q)_j|`.
    pub residual: f64,
}

impl Stationary {
    /// Probability that each site is occupied.
    pub fn site_marginals(&self) -> Vec<f64> {
        let mut marg = vec![0.0; self.m];
        for (idx, &p) in self.probabilities.iter().enumerate() {
            for (site, slot) in marg.iter_mut().enumerate() {
                if (idx >> (self.m - 1 - site)) & 1 == 1 {
                    *slot += p;
                }
            }
        }
        marg
    }
}

const RESIDUAL_TOLERANCE: f64 = 1e-10;

fn residual(q: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    (q.transpose() * pi).amax()
}

/// Solves `pi Q = 0`, `sum(pi) = 1` directly, falling back to power
/// iteration on the uniformized chain if the direct solution is not clean.
pub fn stationary(m: usize, params: &PasepParams) -> Result<Stationary> {
    if params.alpha <= 0.0 || params.beta <= 0.0 {
        return Err(Error::NotErgodic);
    }
    let gen = build_generator(m, params)?;
    let q = &gen.matrix;
    let size = gen.states();

    let mut system = q.transpose();
    system.row_mut(size - 1).fill(1.0);
    let mut rhs = DVector::zeros(size);
    rhs[size - 1] = 1.0;

    let direct = system.lu().solve(&rhs).filter(|pi| {
        pi.iter().all(|&p| p > -1e-12) && residual(q, pi) < RESIDUAL_TOLERANCE
    });
    let pi = match direct {
        Some(pi) => pi,
        None => power_iteration(q)?,
    };

    let mut pi = pi.map(|p| p.max(0.0));
    let total = pi.sum();
    pi /= total;
    let res = residual(q, &pi);
    if res.is_nan() || res >= RESIDUAL_TOLERANCE {
        return Err(Error::SolverFailure(format!("residual {res:e} after solve")));
    }
    Ok(Stationary {
        m,
        probabilities: pi.iter().copied().collect(),
        residual: res,
    })
}

fn power_iteration(q: &DMatrix<f64>) -> Result<DVector<f64>> {
    let size = q.nrows();
    let rate = (0..size).map(|i| -q[(i, i)]).fold(0.0, f64::max) * 1.05;
    let step = DMatrix::identity(size, size) + q / rate;
    let step_t = step.transpose();
    let mut pi = DVector::from_element(size, 1.0 / size as f64);
    for _ in 0..200_000 {
        let next = &step_t * &pi;
        let change = (&next - &pi).amax();
        pi = next;
        if change < 1e-12 {
            return Ok(pi);
        }
    }
    Err(Error::SolverFailure("power iteration did not converge".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub m: usize,
    pub horizon: f64,
    pub seed: u64,
    pub events: u64,
    /// Time-averaged occupancy per site.
    pub occupancy: Vec<f64>,
    /// Batch-means standard error of each occupancy.
    pub occupancy_std_error: Vec<f64>,
    /// Number of times each state was entered (the start state counts once).
    pub visit_counts: Vec<u64>,
}

const BATCHES: usize = 40;

/// Event-by-event simulation from the empty state up to `horizon`.
pub fn simulate(m: usize, params: &PasepParams, horizon: f64, seed: u64) -> Result<SimulationReport> {
    if m == 0 {
        return Err(Error::Domain("need at least one site".into()));
    }
    check_cap("site count", m, MAX_SIMULATED_SITES)?;
    params.check()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }

    let mut rng = stream_rng(seed, 0);
    let batch_len = horizon / BATCHES as f64;
    let mut batch_time = vec![vec![0.0; m]; BATCHES];
    let mut visit_counts = vec![0u64; 1 << m];
    let mut out = Vec::new();

    let mut state = 0usize;
    let mut t = 0.0;
    let mut events = 0u64;
    visit_counts[state] += 1;

    let mut credit = |state: usize, from: f64, to: f64| {
        let mut a = from;
        while a < to {
            let b_idx = ((a / batch_len) as usize).min(BATCHES - 1);
            let b_end = if b_idx == BATCHES - 1 { to } else { ((b_idx + 1) as f64 * batch_len).min(to) };
            let dt = b_end - a;
            for (site, slot) in batch_time[b_idx].iter_mut().enumerate() {
                if (state >> (m - 1 - site)) & 1 == 1 {
                    *slot += dt;
                }
            }
            a = b_end;
        }
    };

    while t < horizon {
        transitions(state, m, params, &mut out);
        let total: f64 = out.iter().map(|&(_, r)| r).sum();
        if total <= 0.0 {
            credit(state, t, horizon);
            break;
        }
        let dt = -(1.0 - rng.gen::<f64>()).ln() / total;
        let end = (t + dt).min(horizon);
        credit(state, t, end);
        t += dt;
        if t >= horizon {
            break;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut next = out[out.len() - 1].0;
        for &(target, rate) in &out {
            if pick < rate {
                next = target;
                break;
            }
            pick -= rate;
        }
        state = next;
        events += 1;
        visit_counts[state] += 1;
    }

    let batch_means: Vec<Vec<f64>> = batch_time
        .iter()
        .map(|b| b.iter().map(|x| x / batch_len).collect())
        .collect();
    let mut occupancy = vec![0.0; m];
    let mut occupancy_std_error = vec![0.0; m];
    for site in 0..m {
        let xs: Vec<f64> = batch_means.iter().map(|b| b[site]).collect();
        let mean = xs.iter().sum::<f64>() / BATCHES as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        occupancy[site] = mean;
        occupancy_std_error[site] = (var / BATCHES as f64).sqrt();
    }

    Ok(SimulationReport {
        m,
        horizon,
        seed,
        events,
        occupancy,
        occupancy_std_error,
        visit_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, beta: f64, q: f64) -> PasepParams {
        PasepParams::new(alpha, beta, q).unwrap()
    }

    #[test]
    fn border_mapping_examples() {
        let path: BorderPath = "SWWS".parse().unwrap();
        assert_eq!(border_to_state(&path).to_string(), "•∘∘••∘∘•");
        assert_eq!(border_to_state(&"SSS".parse().unwrap()).to_string(), "••••••");
        assert_eq!(border_to_state(&"W".parse().unwrap()).to_string(), "∘∘");
        assert!(border_to_state(&BorderPath::default()).is_empty());
        let s = border_to_state(&"SWW".parse().unwrap());
        assert_eq!(s.to_string(), "∘∘••∘∘");
        assert!(s.is_palindrome());
    }

    #[test]
    fn occupancy_examples() {
        let s: PasepState = "•∘∘••∘∘•".parse().unwrap();
        assert_eq!(
            occupancy_summary(&s),
            OccupancySummary { filled: 4, filled_pairs: 1, empty_pairs: 2 }
        );
        let empty: PasepState = "0000".parse().unwrap();
        assert_eq!(
            occupancy_summary(&empty),
            OccupancySummary { filled: 0, filled_pairs: 0, empty_pairs: 3 }
        );
    }

    #[test]
    fn state_index_round_trip() {
        let s: PasepState = "1011".parse().unwrap();
        assert_eq!(s.index(), 0b1011);
        assert_eq!(PasepState::from_index(0b1011, 4), s);
        assert_eq!(s.bitstring(), "1011");
    }

    #[test]
    fn generator_single_site() {
        let g = build_generator(1, &params(2.0, 3.0, 0.5)).unwrap();
        assert_eq!(g.matrix, DMatrix::from_row_slice(2, 2, &[-2.0, 2.0, 3.0, -3.0]));
    }

    #[test]
    fn generator_two_sites_no_left_hops() {
        let g = build_generator(2, &params(1.5, 0.7, 0.0)).unwrap();
        // •∘ is index 0b10: only the right hop to ∘• (0b01) is possible.
        let row: Vec<f64> = g.matrix.row(0b10).iter().copied().collect();
        assert_eq!(row, vec![0.0, 1.0, -1.0, 0.0]);
        assert!(g.max_row_sum() < 1e-15);
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        for m in 1..=6 {
            let g = build_generator(m, &params(0.3, 1.7, 0.45)).unwrap();
            assert!(g.max_row_sum() < 1e-12);
            for (i, row) in g.matrix.row_iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if i != j {
                        assert!(v >= 0.0);
                    }
                }
            }
        }
        assert!(matches!(
            build_generator(13, &params(1.0, 1.0, 1.0)),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn stationary_single_site() {
        let st = stationary(1, &params(2.0, 1.0, 0.3)).unwrap();
        assert!((st.probabilities[1] - 2.0 / 3.0).abs() < 1e-10);
        let st = stationary(1, &params(1.0, 1.0, 0.0)).unwrap();
        assert!((st.probabilities[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_is_a_distribution() {
        for m in 1..=5 {
            let st = stationary(m, &params(1.0, 0.6, 0.5)).unwrap();
            assert!(st.residual < 1e-10);
            assert!(st.probabilities.iter().all(|&p| p >= 0.0));
            assert!((st.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(stationary(2, &params(0.0, 1.0, 1.0)), Err(Error::NotErgodic));
        assert_eq!(stationary(2, &params(1.0, 0.0, 1.0)), Err(Error::NotErgodic));
    }

    #[test]
    fn power_iteration_agrees_with_direct_solve() {
        let p = params(0.8, 1.3, 0.25);
        let direct = stationary(3, &p).unwrap();
        let gen = build_generator(3, &p).unwrap();
        let pi = power_iteration(&gen.matrix).unwrap();
        let pi = &pi / pi.sum();
        for (a, b) in direct.probabilities.iter().zip(pi.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn simulation_rejects_bad_horizon() {
        let p = params(1.0, 1.0, 0.5);
        assert!(matches!(simulate(2, &p, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(simulate(2, &p, -3.0, 1), Err(Error::Domain(_))));
        assert!(matches!(simulate(2, &p, f64::NAN, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn simulation_single_site_half_occupied() {
        let r = simulate(1, &params(1.0, 1.0, 0.0), 50_000.0, 17).unwrap();
        assert!((r.occupancy[0] - 0.5).abs() < 4.0 * r.occupancy_std_error[0], "{r:?}");
        assert_eq!(r, simulate(1, &params(1.0, 1.0, 0.0), 50_000.0, 17).unwrap());
        assert_eq!(r.visit_counts.iter().sum::<u64>(), r.events + 1);
    }
}

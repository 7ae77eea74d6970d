//! Single-site Glauber dynamics: simulation and exact spectral analysis.
//!
//! Two step rules are implemented and proved equal by the test suite rather
//! than by fiat: the three-case hardcore rule (pick a vertex; occupied
//! vertices fall out with probability `1/(1+lambda)`, unblocked empty
//! vertices fill with probability `lambda/(1+lambda)`, blocked vertices do
//! nothing) and the generic subset rule driven by a weight table. At desk
//! scale the full transition matrix and its spectrum are exact, so spectral
//! gaps, stationarity and mixing bounds are certified rather than sampled.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{DistributionTable, HardcoreModel, Pinning};
use crate::gen;
use crate::linalg;

/// Cap on the explicit state space.
pub const STATE_CAP: usize = 1 << 20;

/// A running hardcore Glauber chain with a seeded, splittable stream.
#[derive(Clone, Debug)]
pub struct GlauberChain {
    lambda: f64,
    n: usize,
    neighbor_mask: Vec<u32>,
    state: u32,
    rng: ChaCha12Rng,
    steps: u64,
}

impl GlauberChain {
    /// Starts from the empty set on stream 0 of `seed`.
    pub fn new(model: &HardcoreModel, seed: u64) -> Self {
        Self::with_stream(model, seed, 0)
    }

    /// Starts from the empty set on an explicit stream id (for parallel
    /// ensembles off one seed).
    pub fn with_stream(model: &HardcoreModel, seed: u64, stream: u64) -> Self {
        let n = model.graph.n();
        let mut neighbor_mask = vec![0u32; n];
        for &(u, v) in model.graph.edges() {
            neighbor_mask[u] |= 1 << v;
            neighbor_mask[v] |= 1 << u;
        }
        GlauberChain {
            lambda: model.lambda,
            n,
            neighbor_mask,
            state: 0,
            rng: gen::rng_stream(seed, stream),
            steps: 0,
        }
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One transition of the three-case hardcore rule.
    pub fn step(&mut self) -> u32 {
        let v = self.rng.gen_range(0..self.n);
        let coin: f64 = self.rng.gen();
        let bit = 1u32 << v;
        if self.state & bit != 0 {
            if coin < 1.0 / (1.0 + self.lambda) {
                self.state &= !bit;
            }
        } else if self.neighbor_mask[v] & self.state == 0
            && coin < self.lambda / (1.0 + self.lambda)
        {
            self.state |= bit;
        }
        self.steps += 1;
        self.state
    }

    pub fn run(&mut self, steps: u64) -> u32 {
        for _ in 0..steps {
            self.step();
        }
        self.state
    }
}

/// A Glauber chain driven by an explicit weight table (generic subset rule).
#[derive(Clone, Debug)]
pub struct TableChain {
    table: DistributionTable,
    state: u32,
    rng: ChaCha12Rng,
    steps: u64,
    /// transitions where both completions had zero weight (state kept)
    pub stuck_events: u64,
}

impl TableChain {
    /// Starts from the first support state.
    pub fn new(table: DistributionTable, seed: u64) -> Self {
        let state = table.support()[0].0;
        TableChain {
            table,
            state,
            rng: gen::rng_stream(seed, 0),
            steps: 0,
            stuck_events: 0,
        }
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// One transition of the generic subset rule: resample a uniformly
    /// random element proportionally to the two completion weights.
    pub fn step(&mut self) -> u32 {
        let n = self.table.ground();
        let v = self.rng.gen_range(0..n);
        let coin: f64 = self.rng.gen();
        let bit = 1u32 << v;
        let w_out = self.table.weight(self.state & !bit);
        let w_in = self.table.weight(self.state | bit);
        if w_out + w_in <= 0.0 {
            self.stuck_events += 1;
        } else if coin < w_out / (w_out + w_in) {
            self.state &= !bit;
        } else {
            self.state |= bit;
        }
        self.steps += 1;
        self.state
    }
}

/// Exact transition matrix of the three-case hardcore rule over the
/// independent sets of the model.
pub fn hardcore_kernel_matrix(m: &HardcoreModel) -> Result<(Vec<u32>, DMatrix<f64>)> {
    let table = DistributionTable::enumerate_hardcore(m, &Pinning::empty())?;
    let states: Vec<u32> = table.support().iter().map(|&(s, _)| s).collect();
    if states.len() > STATE_CAP {
        return Err(Error::CapExceeded {
            what: "chain states",
            needed: states.len(),
            cap: STATE_CAP,
        });
    }
    let n = m.graph.n();
    let nf = n as f64;
    let lambda = m.lambda;
    let mut neighbor_mask = vec![0u32; n];
    for &(u, v) in m.graph.edges() {
        neighbor_mask[u] |= 1 << v;
        neighbor_mask[v] |= 1 << u;
    }
    let mut p = DMatrix::zeros(states.len(), states.len());
    let index = |s: u32| states.binary_search(&s).expect("closed under single flips");
    for (si, &s) in states.iter().enumerate() {
        for v in 0..n {
            let bit = 1u32 << v;
            if s & bit != 0 {
                let q = 1.0 / (1.0 + lambda);
                p[(si, index(s & !bit))] += q / nf;
                p[(si, si)] += (1.0 - q) / nf;
            } else if neighbor_mask[v] & s == 0 {
                let q = lambda / (1.0 + lambda);
                p[(si, index(s | bit))] += q / nf;
                p[(si, si)] += (1.0 - q) / nf;
            } else {
                p[(si, si)] += 1.0 / nf;
            }
        }
    }
    Ok((states, p))
}

/// Exact transition matrix of the generic subset rule over the support of a
/// weight table.
pub fn generic_kernel_matrix(t: &DistributionTable) -> Result<(Vec<u32>, DMatrix<f64>)> {
    let states: Vec<u32> = t.support().iter().map(|&(s, _)| s).collect();
    if states.len() > STATE_CAP {
        return Err(Error::CapExceeded {
            what: "chain states",
            needed: states.len(),
            cap: STATE_CAP,
        });
    }
    let n = t.ground();
    let nf = n as f64;
    let mut p = DMatrix::zeros(states.len(), states.len());
    for (si, &s) in states.iter().enumerate() {
        for v in 0..n {
            let bit = 1u32 << v;
            let out_state = s & !bit;
            let in_state = s | bit;
            let w_out = t.weight(out_state);
            let w_in = t.weight(in_state);
            let denom = w_out + w_in;
            if denom <= 0.0 {
                p[(si, si)] += 1.0 / nf;
                continue;
            }
            if w_out > 0.0 {
                let ti = states.binary_search(&out_state).expect("support state");
                p[(si, ti)] += w_out / denom / nf;
            }
            if w_in > 0.0 {
                let ti = states.binary_search(&in_state).expect("support state");
                p[(si, ti)] += w_in / denom / nf;
            }
        }
    }
    Ok((states, p))
}

/// Exact spectrum record of a Glauber chain.
#[derive(Clone, Debug)]
pub struct ChainSpectrum {
    pub states: Vec<u32>,
    pub matrix: DMatrix<f64>,
    pub stationary: DVector<f64>,
    /// sorted descending
    pub eigenvalues: Vec<f64>,
    /// second-largest absolute eigenvalue
    pub lambda_star: f64,
    /// `1 - lambda_2`
    pub gap: f64,
}

impl ChainSpectrum {
    pub fn state_index(&self, state: u32) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    pub fn reversibility_deviation(&self) -> f64 {
        linalg::reversibility_deviation(&self.matrix, &self.stationary)
    }
}

/// Builds the exact chain spectrum from a weight table (generic rule).
pub fn exact_chain_spectrum(t: &DistributionTable) -> Result<ChainSpectrum> {
    let (states, matrix) = generic_kernel_matrix(t)?;
    let stationary =
        DVector::from_iterator(states.len(), t.support().iter().map(|&(_, w)| w / t.total()));
    let eigenvalues = linalg::reversible_spectrum(&matrix, &stationary)?;
    if (eigenvalues[0] - 1.0).abs() > 1e-10 {
        return Err(Error::Eigensolver(format!(
            "top chain eigenvalue {} is not 1",
            eigenvalues[0]
        )));
    }
    let lambda_star = if eigenvalues.len() >= 2 {
        eigenvalues[1]
            .abs()
            .max(eigenvalues.last().unwrap().abs())
    } else {
        0.0
    };
    let gap = if eigenvalues.len() >= 2 {
        1.0 - eigenvalues[1]
    } else {
        1.0
    };
    Ok(ChainSpectrum {
        states,
        matrix,
        stationary,
        eigenvalues,
        lambda_star,
        gap,
    })
}

/// The relaxation-time mixing bound `1/(1 - lambda*) * log(1/(eps pi(start)))`
/// (clamped at zero).
pub fn mixing_time_bound(spec: &ChainSpectrum, start: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if spec.lambda_star >= 1.0 - 1e-12 {
        return Err(Error::InvalidParameter(
            "chain has no spectral gap (lambda* = 1)".into(),
        ));
    }
    let pi0 = spec.stationary[start];
    Ok(((1.0 / (eps * pi0)).ln() / (1.0 - spec.lambda_star)).max(0.0))
}

/// The same bound with the stationary mass of the empty set replaced by its
/// worst case `(1 + lambda)^{-n}` (usable without knowing the partition
/// function).
pub fn mixing_time_bound_from_empty(
    m: &HardcoreModel,
    spec: &ChainSpectrum,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if spec.lambda_star >= 1.0 - 1e-12 {
        return Err(Error::InvalidParameter(
            "chain has no spectral gap (lambda* = 1)".into(),
        ));
    }
    let n = m.graph.n() as f64;
    let pi_floor = (1.0 + m.lambda).powf(-n);
    Ok(((1.0 / (eps * pi_floor)).ln() / (1.0 - spec.lambda_star)).max(0.0))
}

/// Exact total-variation distance to stationarity after `0..=horizon` steps
/// from `start`, by repeated vector-matrix products.
pub fn tv_distance_curve(spec: &ChainSpectrum, start: usize, horizon: usize) -> Vec<f64> {
    let size = spec.states.len();
    let mut dist = DVector::zeros(size);
    dist[start] = 1.0;
    let mut curve = Vec::with_capacity(horizon + 1);
    curve.push(linalg::tv_distance(&dist, &spec.stationary));
    for _ in 0..horizon {
        dist = spec.matrix.transpose() * dist;
        curve.push(linalg::tv_distance(&dist, &spec.stationary));
    }
    curve
}

/// First step at which the exact TV curve drops to `eps` (None if not
/// within the horizon).
pub fn tv_mixing_time(spec: &ChainSpectrum, start: usize, eps: f64, horizon: usize) -> Option<usize> {
    tv_distance_curve(spec, start, horizon)
        .iter()
        .position(|&d| d <= eps)
}

/// Sampler statistics: set-size histogram and per-vertex frequencies with
/// their standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct SampleStats {
    pub seed: u64,
    pub burn_in: u64,
    pub count: usize,
    /// steps between retained samples (10 sweeps)
    pub thin: u64,
    pub size_histogram: Vec<u64>,
    pub vertex_frequency: Vec<f64>,
    pub standard_error: Vec<f64>,
}

/// Runs the hardcore chain and reports empirical occupation statistics.
///
/// Samples are taken every `10 n` steps after the burn-in, which at desk
/// scale (spectral gaps well above `1/(10 n)`) makes consecutive samples
/// effectively independent, so the reported standard errors are honest.
pub fn sample_independent_sets(
    m: &HardcoreModel,
    burn_in: u64,
    count: usize,
    seed: u64,
) -> SampleStats {
    let n = m.graph.n();
    let thin = 10 * n as u64;
    let mut chain = GlauberChain::new(m, seed);
    chain.run(burn_in);
    let mut size_histogram = vec![0u64; n + 1];
    let mut hits = vec![0u64; n];
    for _ in 0..count {
        chain.run(thin);
        let s = chain.state();
        size_histogram[s.count_ones() as usize] += 1;
        for (v, h) in hits.iter_mut().enumerate() {
            if s & (1 << v) != 0 {
                *h += 1;
            }
        }
    }
    let vertex_frequency: Vec<f64> = hits.iter().map(|&h| h as f64 / count as f64).collect();
    let standard_error = vertex_frequency
        .iter()
        .map(|&p| (p * (1.0 - p) / count as f64).sqrt())
        .collect();
    SampleStats {
        seed,
        burn_in,
        count,
        thin,
        size_histogram,
        vertex_frequency,
        standard_error,
    }
}

/// Empirical distribution of a single step from `start` over `draws`
/// seeded trials; used to validate the simulated kernel against the exact
/// matrix row.
pub fn empirical_step_distribution(
    m: &HardcoreModel,
    start: u32,
    draws: usize,
    seed: u64,
) -> Result<Vec<(u32, f64)>> {
    let mut counts: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
    for i in 0..draws {
        let mut chain = GlauberChain::with_stream(m, seed, i as u64);
        chain.state = start;
        let next = chain.step();
        *counts.entry(next).or_insert(0) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(s, c)| (s, c as f64 / draws as f64))
        .collect())
}

//! Pairwise influence matrices and spectral-independence profiles.
//!
//! For a distribution over subsets, the signed pairwise influence of `i` on
//! `j` is `Pr[j | i] - Pr[j | not i]`; the matrix of these values (zero
//! diagonal) has real eigenvalues, and its largest eigenvalue over the
//! distribution and all its conditionings is the quantity every spectral
//! bound in this crate is built from.
//!
//! Eigenvalues of the non-symmetric influence matrix are computed by the
//! robust route: reconstruct the pair walk it embeds into, symmetrize that
//! walk by its stationary measure, run a symmetric eigensolver, strip the
//! trivial eigenvalues, and rescale. A shifted power iteration and a
//! covariance-similarity route are provided as independent cross-checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{DistributionTable, Pinning, Spin};
use crate::gen;
use crate::linalg;

/// Ground-set cap for the exhaustive conditioning sweep (3^n pinnings).
pub const EXHAUSTIVE_PROFILE_CAP: usize = 14;

/// Signed pairwise influence matrix restricted to the free elements.
#[derive(Clone, Debug)]
pub struct InfluenceMatrix {
    free: Vec<usize>,
    entries: DMatrix<f64>,
    /// Marginal `Pr[i]` per free element, in `free` order.
    marginals: Vec<f64>,
}

impl InfluenceMatrix {
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// Entry by position in the free list.
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.entries[(a, b)]
    }

    /// Entry by original element ids; `None` when either is not free.
    pub fn entry_by_element(&self, i: usize, j: usize) -> Option<f64> {
        let a = self.free.iter().position(|&x| x == i)?;
        let b = self.free.iter().position(|&x| x == j)?;
        Some(self.entries[(a, b)])
    }
}

/// Builds the influence matrix of `t` conditioned on `pin`.
///
/// Elements that become deterministic under the pinning are excluded from
/// the free set (their conditionals are undefined); the matrix is indexed by
/// the surviving free elements only.
pub fn influence_matrix(t: &DistributionTable, pin: &Pinning) -> Result<InfluenceMatrix> {
    let cond = if pin.is_empty() {
        t.clone()
    } else {
        t.condition(pin)?
    };
    influence_matrix_of(&cond)
}

/// Influence matrix of a table taken as-is (free elements of the table).
pub fn influence_matrix_of(cond: &DistributionTable) -> Result<InfluenceMatrix> {
    let free = cond.free_elements();
    let k = free.len();
    let total = cond.total();

    // single-pass accumulation of single and pairwise in-mass
    let mut s1 = vec![0.0f64; k];
    let mut s2 = vec![0.0f64; k * k];
    let pos: Vec<Option<usize>> = {
        let mut v = vec![None; cond.ground()];
        for (a, &i) in free.iter().enumerate() {
            v[i] = Some(a);
        }
        v
    };
    for &(mask, w) in cond.support() {
        let mut members = Vec::with_capacity(mask.count_ones() as usize);
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            if let Some(a) = pos[v] {
                members.push(a);
            }
            rest &= rest - 1;
        }
        for &a in &members {
            s1[a] += w;
            for &b in &members {
                s2[a * k + b] += w;
            }
        }
    }

    let mut entries = DMatrix::zeros(k, k);
    let mut marginals = Vec::with_capacity(k);
    for a in 0..k {
        marginals.push(s1[a] / total);
    }
    for a in 0..k {
        let in_a = s1[a];
        let out_a = total - s1[a];
        debug_assert!(in_a > 0.0 && out_a > 0.0, "free element must be non-deterministic");
        for b in 0..k {
            if a == b {
                continue;
            }
            let joint = s2[a * k + b];
            let p_given_in = joint / in_a;
            let p_given_out = (s1[b] - joint) / out_a;
            entries[(a, b)] = p_given_in - p_given_out;
        }
    }
    Ok(InfluenceMatrix {
        free,
        entries,
        marginals,
    })
}

/// Reconstructs the pair walk the influence matrix embeds into.
///
/// Literal layout: indices `0..k` are the "in" literals, `k..2k` the "out"
/// literals. Entries use `Pr[j-lit | i-lit] / (k - 1)`; the conditionals are
/// recovered from the matrix and its marginals.
fn pair_walk_from(psi: &InfluenceMatrix) -> (DMatrix<f64>, DVector<f64>) {
    let k = psi.dim();
    let kk = (k - 1) as f64;
    let mut p = DMatrix::zeros(2 * k, 2 * k);
    let pr = &psi.marginals;
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            // Pr[b | a] = Pr[b] + Pr[not a] * Psi(a, b)
            let p_in_in = pr[b] + (1.0 - pr[a]) * psi.entries[(a, b)];
            let p_out_in = pr[b] - pr[a] * psi.entries[(a, b)];
            p[(a, b)] = p_in_in / kk;
            p[(a, k + b)] = (1.0 - p_in_in) / kk;
            p[(k + a, b)] = p_out_in / kk;
            p[(k + a, k + b)] = (1.0 - p_out_in) / kk;
        }
    }
    let mut pi = DVector::zeros(2 * k);
    for a in 0..k {
        pi[a] = pr[a] / k as f64;
        pi[k + a] = (1.0 - pr[a]) / k as f64;
    }
    (p, pi)
}

/// Full real spectrum of the influence matrix, sorted descending.
///
/// Symmetrized pair-walk eigensolve with the trivial eigenvalues stripped:
/// one eigenvalue `1` and `k - 1` copies of `-1/(k-1)` are removed, and the
/// remaining `k` values are scaled by `k - 1`.
pub fn influence_spectrum(psi: &InfluenceMatrix) -> Result<Vec<f64>> {
    let k = psi.dim();
    if k == 0 {
        return Ok(vec![]);
    }
    if k == 1 {
        return Ok(vec![0.0]);
    }
    let (p, pi) = pair_walk_from(psi);
    let mut ev = linalg::reversible_spectrum(&p, &pi)?;
    // strip the top eigenvalue 1
    if (ev[0] - 1.0).abs() > 1e-7 {
        return Err(Error::Eigensolver(format!(
            "top pair-walk eigenvalue is {}, expected 1",
            ev[0]
        )));
    }
    ev.remove(0);
    // strip k-1 copies of -1/(k-1), nearest first
    let trivial = -1.0 / (k as f64 - 1.0);
    for _ in 0..k - 1 {
        let (idx, dev) = ev
            .iter()
            .enumerate()
            .map(|(i, &e)| (i, (e - trivial).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("nonempty");
        if dev > 1e-6 {
            return Err(Error::Eigensolver(format!(
                "missing trivial eigenvalue {trivial}: nearest is off by {dev}"
            )));
        }
        ev.remove(idx);
    }
    let mut out: Vec<f64> = ev.into_iter().map(|e| e * (k as f64 - 1.0)).collect();
    out.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(out)
}

/// Largest eigenvalue of the influence matrix.
pub fn lambda_max_influence(psi: &InfluenceMatrix) -> Result<f64> {
    Ok(influence_spectrum(psi)?.first().copied().unwrap_or(0.0))
}

/// Independent spectrum route: the influence matrix plus the identity is
/// similar to the correlation matrix `D^{-1/2} C D^{-1/2}` (C = covariance,
/// D = its diagonal), which is symmetric. Used to cross-check the pair-walk
/// route; sorted descending.
pub fn influence_spectrum_covariance(psi: &InfluenceMatrix) -> Result<Vec<f64>> {
    let k = psi.dim();
    if k == 0 {
        return Ok(vec![]);
    }
    let var: Vec<f64> = psi.marginals.iter().map(|&p| p * (1.0 - p)).collect();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        m[(a, a)] = 1.0;
        for b in 0..k {
            if a != b {
                m[(a, b)] = psi.entries[(a, b)] * (var[a] / var[b]).sqrt();
            }
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    let mut ev = linalg::symmetric_eigenvalues(&sym)?;
    for e in &mut ev {
        *e -= 1.0;
    }
    Ok(ev)
}

/// Shifted power iteration on `Psi + k I`; cross-check for the top eigenvalue.
pub fn lambda_max_power_iteration(psi: &InfluenceMatrix, iters: usize) -> f64 {
    let k = psi.dim();
    if k < 2 {
        return 0.0;
    }
    let shift = k as f64;
    let mut v = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    // deterministic perturbation to avoid starting orthogonal to the top space
    for i in 0..k {
        v[i] += 1e-3 * ((i % 7) as f64 - 3.0);
    }
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let mut w = psi.entries() * &v;
        w += shift * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return -shift;
        }
        w /= norm;
        est = norm;
        v = w;
    }
    est - shift
}

/// `min(max absolute row sum, max absolute column sum)`; always an upper
/// bound for the largest eigenvalue.
pub fn rowsum_bound(psi: &InfluenceMatrix) -> f64 {
    let k = psi.dim();
    let mut row_max: f64 = 0.0;
    let mut col_max: f64 = 0.0;
    for a in 0..k {
        let r: f64 = (0..k).map(|b| psi.entries[(a, b)].abs()).sum();
        let c: f64 = (0..k).map(|b| psi.entries[(b, a)].abs()).sum();
        row_max = row_max.max(r);
        col_max = col_max.max(c);
    }
    row_max.min(col_max)
}

/// Largest absolute column sum `max_j sum_i |Psi(i, j)|` (total influence on
/// an element).
pub fn max_abs_column_sum(psi: &InfluenceMatrix) -> f64 {
    let k = psi.dim();
    (0..k)
        .map(|b| (0..k).map(|a| psi.entries[(a, b)].abs()).sum())
        .fold(0.0, f64::max)
}

/// Conditioning sweep mode for [`spectral_profile`].
#[derive(Clone, Copy, Debug)]
pub enum ProfileMode {
    /// All `3^n` pinnings; exact profile. Capped at `n <= 14`.
    Exhaustive,
    /// Random consistent pinnings per level; yields a lower bound.
    Sampled { samples: usize, seed: u64 },
}

/// Spectral-independence profile: for each conditioning depth `k`, the
/// largest influence eigenvalue over all (or sampled) size-`k` pinnings,
/// with the pinning attaining it.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralProfile {
    pub n: usize,
    pub etas: Vec<f64>,
    #[serde(serialize_with = "serialize_witnesses")]
    pub witnesses: Vec<Option<Pinning>>,
    pub exhaustive: bool,
}

fn serialize_witnesses<S: serde::Serializer>(
    w: &[Option<Pinning>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(w.len()))?;
    for item in w {
        let text = item.as_ref().map(witness_string);
        seq.serialize_element(&text)?;
    }
    seq.end()
}

fn witness_string(p: &Pinning) -> String {
    let parts: Vec<String> = p
        .iter()
        .map(|(v, s)| format!("{v}{}", if s == Spin::In { "+" } else { "-" }))
        .collect();
    if parts.is_empty() {
        "(none)".to_string()
    } else {
        parts.join(",")
    }
}

impl SpectralProfile {
    /// `eta_k <= n - k - 1` cap check; returns the largest violation.
    pub fn cap_violation(&self) -> f64 {
        self.etas
            .iter()
            .enumerate()
            .map(|(k, &eta)| eta - (self.n - k - 1) as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Decodes a base-3 pinning code (element 0 = most significant digit, digit
/// 0 free / 1 in / 2 out).
fn pinning_from_code(mut code: u64, n: usize) -> Pinning {
    let mut digits = vec![0u8; n];
    for i in (0..n).rev() {
        digits[i] = (code % 3) as u8;
        code /= 3;
    }
    digits
        .iter()
        .enumerate()
        .filter_map(|(v, &d)| match d {
            1 => Some((v, Spin::In)),
            2 => Some((v, Spin::Out)),
            _ => None,
        })
        .collect()
}

fn pinned_count(mut code: u64) -> usize {
    let mut k = 0;
    while code > 0 {
        if code % 3 != 0 {
            k += 1;
        }
        code /= 3;
    }
    k
}

/// Largest influence eigenvalue of `t | pin`, with the crate's conventions:
/// zero when fewer than two free elements survive, `None` when the pinning
/// has zero mass.
fn eta_of_pinning(t: &DistributionTable, pin: &Pinning) -> Option<f64> {
    let cond = if pin.is_empty() {
        t.clone()
    } else {
        t.condition(pin).ok()?
    };
    let psi = influence_matrix_of(&cond).ok()?;
    if psi.dim() < 2 {
        return Some(0.0);
    }
    lambda_max_influence(&psi).ok()
}

/// Computes the spectral-independence profile of `t`.
pub fn spectral_profile(t: &DistributionTable, mode: ProfileMode) -> Result<SpectralProfile> {
    let n = t.ground();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "profile needs a ground set of at least 2".into(),
        ));
    }
    let levels = n - 1; // k = 0..=n-2
    match mode {
        ProfileMode::Exhaustive => {
            if n > EXHAUSTIVE_PROFILE_CAP {
                return Err(Error::CapExceeded {
                    what: "exhaustive pinning sweep",
                    needed: n,
                    cap: EXHAUSTIVE_PROFILE_CAP,
                });
            }
            let codes = 3u64.pow(n as u32);
            // per-level (eta, witness code), reduced by (larger eta, then smaller code)
            let best = (0..codes)
                .into_par_iter()
                .fold(
                    || vec![(f64::NEG_INFINITY, u64::MAX); levels],
                    |mut acc, code| {
                        let k = pinned_count(code);
                        if k < levels {
                            let pin = pinning_from_code(code, n);
                            if let Some(eta) = eta_of_pinning(t, &pin) {
                                let slot = &mut acc[k];
                                if eta > slot.0 || (eta == slot.0 && code < slot.1) {
                                    *slot = (eta, code);
                                }
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![(f64::NEG_INFINITY, u64::MAX); levels],
                    |mut a, b| {
                        for (sa, sb) in a.iter_mut().zip(b) {
                            if sb.0 > sa.0 || (sb.0 == sa.0 && sb.1 < sa.1) {
                                *sa = sb;
                            }
                        }
                        a
                    },
                );
            let mut etas = Vec::with_capacity(levels);
            let mut witnesses = Vec::with_capacity(levels);
            for (eta, code) in best {
                if eta == f64::NEG_INFINITY {
                    etas.push(0.0);
                    witnesses.push(None);
                } else {
                    etas.push(eta.max(0.0)); // eta may dip below zero only via float noise
                    witnesses.push(Some(pinning_from_code(code, n)));
                }
            }
            let profile = SpectralProfile {
                n,
                etas,
                witnesses,
                exhaustive: true,
            };
            Ok(profile)
        }
        ProfileMode::Sampled { samples, seed } => {
            let mut rng = gen::rng(seed);
            let mut etas = vec![0.0f64; levels];
            let mut witnesses: Vec<Option<Pinning>> = vec![None; levels];
            // level 0 is the unconditioned table
            if let Some(e) = eta_of_pinning(t, &Pinning::empty()) {
                etas[0] = e;
                witnesses[0] = Some(Pinning::empty());
            }
            for _ in 0..samples {
                if levels < 2 {
                    break;
                }
                let k = rng.gen_range(1..levels);
                // draw k distinct elements and random sides
                let mut chosen: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    chosen.swap(i, j);
                }
                chosen.truncate(k);
                let pin: Pinning = chosen
                    .into_iter()
                    .map(|v| {
                        let s = if rng.gen::<bool>() { Spin::In } else { Spin::Out };
                        (v, s)
                    })
                    .collect();
                if let Some(eta) = eta_of_pinning(t, &pin) {
                    if eta > etas[k] {
                        etas[k] = eta;
                        witnesses[k] = Some(pin);
                    }
                }
            }
            Ok(SpectralProfile {
                n,
                etas,
                witnesses,
                exhaustive: false,
            })
        }
    }
}

/// The product-formula lower bound on the Glauber spectral gap:
/// `(1/n) * prod_k (1 - eta_k / (n - k - 1))`, clamped at zero.
pub fn main_theorem_gap_bound(profile: &SpectralProfile) -> f64 {
    let n = profile.n;
    let mut prod = 1.0 / n as f64;
    for (k, &eta) in profile.etas.iter().enumerate() {
        let denom = (n - k - 1) as f64;
        let factor = 1.0 - eta / denom;
        if factor <= 0.0 {
            return 0.0;
        }
        prod *= factor;
    }
    prod
}

//! Walks on the partite complex of a subset distribution.
//!
//! A distribution over subsets of `[n]` induces a pure `n`-partite complex
//! whose maximal faces are the full in/out assignments on the support. The
//! complex itself is never materialized: the two walks the theory needs are
//! built directly from conditional probabilities.
//!
//! * the pair walk on literals (the 1-skeleton walk of a link), whose
//!   spectrum is the influence-matrix spectrum plus known trivial values;
//! * the down-up walk on maximal faces, which is exactly the single-site
//!   Glauber dynamics.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{DistributionTable, Pinning};
use crate::influence::{self, InfluenceMatrix};
use crate::linalg;
use crate::tol;

/// State cap for the explicit down-up walk matrix.
pub const STATE_CAP: usize = 1 << 20;

/// Ground-set cap for the exhaustive face sweep in the local-to-global check.
pub const LOCAL_TO_GLOBAL_CAP: usize = 12;

/// The pair walk over literals of the free elements of a conditioned table.
///
/// Literal layout: indices `0..k` are "in" literals of the free elements (in
/// free-list order), `k..2k` the matching "out" literals.
#[derive(Clone, Debug)]
pub struct PartiteLinkWalk {
    pub pinning: Pinning,
    pub free: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub stationary: DVector<f64>,
}

impl PartiteLinkWalk {
    pub fn dim(&self) -> usize {
        2 * self.free.len()
    }

    /// Largest deviation from row-stochasticity.
    pub fn stochastic_deviation(&self) -> f64 {
        linalg::row_stochastic_deviation(&self.matrix)
    }

    /// Largest detailed-balance violation against the stationary measure.
    pub fn reversibility_deviation(&self) -> f64 {
        linalg::reversibility_deviation(&self.matrix, &self.stationary)
    }

    /// Largest transition weight between the two literals of one element
    /// (exactly zero by partiteness).
    pub fn partiteness_deviation(&self) -> f64 {
        let k = self.free.len();
        (0..k)
            .map(|a| {
                self.matrix[(a, k + a)]
                    .abs()
                    .max(self.matrix[(k + a, a)].abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the pair walk of `t | pin` over the surviving free elements.
///
/// Entries are `Pr[lit_b | lit_a] / (k - 1)` for literals of distinct
/// elements; the stationary measure is `Pr[lit] / k`.
pub fn build_link_walk(t: &DistributionTable, pin: &Pinning) -> Result<PartiteLinkWalk> {
    let cond = if pin.is_empty() {
        t.clone()
    } else {
        t.condition(pin)?
    };
    let free = cond.free_elements();
    let k = free.len();
    if k < 2 {
        return Err(Error::FewerThanTwoFree);
    }
    let kf = k as f64;
    let denom = kf - 1.0;
    let mut p = DMatrix::zeros(2 * k, 2 * k);
    let mut pi = DVector::zeros(2 * k);
    for (a, &i) in free.iter().enumerate() {
        let pr_i = cond.marginal(i);
        pi[a] = pr_i / kf;
        pi[k + a] = (1.0 - pr_i) / kf;
        for (b, &j) in free.iter().enumerate() {
            if a == b {
                continue;
            }
            let joint = cond.joint(i, j);
            let pr_j = cond.marginal(j);
            let in_in = joint / pr_i;
            let out_in = (pr_j - joint) / (1.0 - pr_i);
            p[(a, b)] = in_in / denom;
            p[(a, k + b)] = (1.0 - in_in) / denom;
            p[(k + a, b)] = out_in / denom;
            p[(k + a, k + b)] = (1.0 - out_in) / denom;
        }
    }
    Ok(PartiteLinkWalk {
        pinning: pin.clone(),
        free,
        matrix: p,
        stationary: pi,
    })
}

/// Second-largest eigenvalue of a pair walk (symmetrized eigensolve).
pub fn link_second_eigenvalue(walk: &PartiteLinkWalk) -> Result<f64> {
    let ev = linalg::reversible_spectrum(&walk.matrix, &walk.stationary)?;
    Ok(ev[1])
}

/// Outcome of the pair-walk spectrum identity comparison: the walk spectrum
/// against the influence spectrum scaled by `1/(k-1)` plus the trivial
/// values (`k-1` copies of `-1/(k-1)` and one `1`).
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumIdentityReport {
    pub free_count: usize,
    pub walk_spectrum: Vec<f64>,
    pub expected_spectrum: Vec<f64>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Checks the spectrum identity for the unconditioned table.
///
/// The influence side is computed by the covariance route, fully independent
/// of the pair-walk construction being verified.
pub fn spectrum_identity_check(t: &DistributionTable) -> Result<SpectrumIdentityReport> {
    let walk = build_link_walk(t, &Pinning::empty())?;
    let k = walk.free.len();
    let lhs = linalg::reversible_spectrum(&walk.matrix, &walk.stationary)?;

    let psi = influence::influence_matrix(t, &Pinning::empty())?;
    let psi_spec = influence::influence_spectrum_covariance(&psi)?;
    let denom = k as f64 - 1.0;
    let mut rhs: Vec<f64> = psi_spec.iter().map(|e| e / denom).collect();
    rhs.extend(std::iter::repeat_n(-1.0 / denom, k - 1));
    rhs.push(1.0);
    rhs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());

    let max_deviation = linalg::multiset_deviation(&lhs, &rhs);
    Ok(SpectrumIdentityReport {
        free_count: k,
        walk_spectrum: lhs,
        expected_spectrum: rhs,
        max_deviation,
        pass: max_deviation < tol::SPECTRUM,
    })
}

/// The trivial-eigenvalue decomposition of a pair walk.
///
/// `Q` shifts away the top eigenvalue, `M` additionally zeroes the per-part
/// indicator eigenvectors; `M` then has the block form `[[A, -A], [B, -B]]`
/// with `A - B` equal to the scaled influence matrix.
#[derive(Clone, Debug)]
pub struct TrivialDecomposition {
    pub q: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Largest deviation of `M` from the `[[A, -A], [B, -B]]` block form.
    pub block_deviation: f64,
    /// Largest entrywise deviation of `A - B` from `Psi / (k-1)`.
    pub psi_deviation: f64,
    /// Largest residual of `Q 1^i = -(1/(k-1)) 1^i` over the indicators.
    pub q_eigvec_deviation: f64,
    /// Largest residual of `M 1^i = 0` over the indicators.
    pub m_kernel_deviation: f64,
}

impl TrivialDecomposition {
    pub fn pass(&self) -> bool {
        self.block_deviation < tol::MASS
            && self.psi_deviation < tol::MASS
            && self.q_eigvec_deviation < 1e-10
            && self.m_kernel_deviation < 1e-10
    }
}

/// Materializes the decomposition for the unconditioned table.
pub fn trivial_decomposition(t: &DistributionTable) -> Result<TrivialDecomposition> {
    let walk = build_link_walk(t, &Pinning::empty())?;
    let k = walk.free.len();
    let kf = k as f64;
    let denom = kf - 1.0;
    let p = &walk.matrix;
    let pi = &walk.stationary;

    let ones = DVector::from_element(2 * k, 1.0);
    let q = p - (kf / denom) * &ones * pi.transpose();
    let mut m = q.clone();
    for i in 0..k {
        let mut indicator = DVector::zeros(2 * k);
        indicator[i] = 1.0;
        indicator[k + i] = 1.0;
        let mut pi_i = DVector::zeros(2 * k);
        pi_i[i] = pi[i];
        pi_i[k + i] = pi[k + i];
        m += (kf / denom) * indicator * pi_i.transpose();
    }

    // blocks from their defining conditional-probability formulas
    let cond = t.clone();
    let free = &walk.free;
    let mut a = DMatrix::zeros(k, k);
    let mut b = DMatrix::zeros(k, k);
    for (ai, &i) in free.iter().enumerate() {
        let pr_i = cond.marginal(i);
        for (bj, &j) in free.iter().enumerate() {
            if ai == bj {
                continue;
            }
            let joint = cond.joint(i, j);
            let pr_j = cond.marginal(j);
            a[(ai, bj)] = (joint / pr_i - pr_j) / denom;
            b[(ai, bj)] = ((pr_j - joint) / (1.0 - pr_i) - pr_j) / denom;
        }
    }

    let mut block_deviation: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            block_deviation = block_deviation
                .max((m[(i, j)] - a[(i, j)]).abs())
                .max((m[(i, k + j)] + a[(i, j)]).abs())
                .max((m[(k + i, j)] - b[(i, j)]).abs())
                .max((m[(k + i, k + j)] + b[(i, j)]).abs());
        }
    }

    let psi = influence::influence_matrix(t, &Pinning::empty())?;
    let mut psi_deviation: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let expected = psi.entries()[(i, j)] / denom;
            psi_deviation = psi_deviation.max((a[(i, j)] - b[(i, j)] - expected).abs());
        }
    }

    let mut q_eigvec_deviation: f64 = 0.0;
    let mut m_kernel_deviation: f64 = 0.0;
    for i in 0..k {
        let mut indicator = DVector::zeros(2 * k);
        indicator[i] = 1.0;
        indicator[k + i] = 1.0;
        let qv = &q * &indicator + &indicator / denom;
        q_eigvec_deviation = q_eigvec_deviation.max(qv.amax());
        let mv = &m * &indicator;
        m_kernel_deviation = m_kernel_deviation.max(mv.amax());
    }

    Ok(TrivialDecomposition {
        q,
        m,
        a,
        b,
        block_deviation,
        psi_deviation,
        q_eigvec_deviation,
        m_kernel_deviation,
    })
}

/// The down-up walk on maximal faces (full assignments on the support).
#[derive(Clone, Debug)]
pub struct DownUpWalk {
    pub states: Vec<u32>,
    pub matrix: DMatrix<f64>,
    pub stationary: DVector<f64>,
}

impl DownUpWalk {
    pub fn state_index(&self, mask: u32) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }

    pub fn stationary_deviation(&self) -> f64 {
        let projected = self.matrix.transpose() * &self.stationary;
        (projected - &self.stationary).amax()
    }

    pub fn min_self_loop(&self) -> f64 {
        (0..self.states.len())
            .map(|i| self.matrix[(i, i)])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the explicit down-up walk of `t`: remove a uniformly random
/// element of the assignment, re-add it proportionally to the face weights.
/// This is exactly the single-site Glauber dynamics on the support.
pub fn build_down_up_walk(t: &DistributionTable) -> Result<DownUpWalk> {
    if t.support_size() > STATE_CAP {
        return Err(Error::CapExceeded {
            what: "down-up walk states",
            needed: t.support_size(),
            cap: STATE_CAP,
        });
    }
    let n = t.ground();
    let states: Vec<u32> = t.support().iter().map(|&(m, _)| m).collect();
    let size = states.len();
    let mut p = DMatrix::zeros(size, size);
    let nf = n as f64;
    for (si, &s) in states.iter().enumerate() {
        for v in 0..n {
            let bit = 1u32 << v;
            let without = s & !bit;
            let with = s | bit;
            let w_without = t.weight(without);
            let w_with = t.weight(with);
            let denom = w_without + w_with;
            debug_assert!(denom > 0.0, "current state always has positive weight");
            let target = if s & bit != 0 { without } else { with };
            let w_target = if s & bit != 0 { w_without } else { w_with };
            let stay = denom - w_target;
            p[(si, si)] += stay / (nf * denom);
            if let Ok(ti) = states.binary_search(&target) {
                p[(si, ti)] += w_target / (nf * denom);
            }
            // a zero-weight flip target contributes to no motion at all:
            // the chain resamples the current value with probability 1
        }
    }
    let stationary =
        DVector::from_iterator(size, t.support().iter().map(|&(_, w)| w / t.total()));
    Ok(DownUpWalk {
        states,
        matrix: p,
        stationary,
    })
}

/// Outcome of the local-to-global comparison: the down-up walk's second
/// eigenvalue against `1 - (1/n) prod_k (1 - alpha_k)` where `alpha_k` is
/// the worst link second-eigenvalue over faces of size `k`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalToGlobalReport {
    pub alphas: Vec<f64>,
    pub lambda2: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Exhaustively checks the local-to-global bound for `t` (`n <= 12`).
pub fn local_to_global_check(t: &DistributionTable) -> Result<LocalToGlobalReport> {
    let n = t.ground();
    if n > LOCAL_TO_GLOBAL_CAP {
        return Err(Error::CapExceeded {
            what: "local-to-global sweep",
            needed: n,
            cap: LOCAL_TO_GLOBAL_CAP,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("need a ground set of at least 2".into()));
    }
    // alpha_k = max over size-k pinnings of the link second eigenvalue;
    // links with fewer than two free elements contribute zero.
    let mut alphas = vec![0.0f64; n - 1];
    let codes = 3u64.pow(n as u32);
    for code in 0..codes {
        let pin = pinning_from_code(code, n);
        let k = pin.len();
        if k > n - 2 {
            continue;
        }
        let walk = match build_link_walk(t, &pin) {
            Ok(w) => w,
            Err(Error::FewerThanTwoFree) | Err(Error::ZeroMass(_)) => continue,
            Err(e) => return Err(e),
        };
        let l2 = link_second_eigenvalue(&walk)?;
        if l2 > alphas[k] {
            alphas[k] = l2;
        }
    }
    let walk = build_down_up_walk(t)?;
    let ev = linalg::reversible_spectrum(&walk.matrix, &walk.stationary)?;
    let lambda2 = ev[1];
    let mut prod = 1.0 / n as f64;
    for &a in &alphas {
        prod *= 1.0 - a;
    }
    let bound = 1.0 - prod;
    Ok(LocalToGlobalReport {
        alphas,
        lambda2,
        bound,
        slack: bound - lambda2,
        pass: lambda2 <= bound + tol::INEQ_SLACK,
    })
}

fn pinning_from_code(mut code: u64, n: usize) -> Pinning {
    use crate::exact::Spin;
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

/// Convenience: the conditional identity `lambda_2(P_tau) * (k - 1) =
/// lambda_max(Psi_{mu|tau})`, as a deviation.
pub fn conditional_identity_deviation(
    t: &DistributionTable,
    pin: &Pinning,
) -> Result<Option<f64>> {
    let walk = match build_link_walk(t, pin) {
        Ok(w) => w,
        Err(Error::FewerThanTwoFree) => return Ok(None),
        Err(e) => return Err(e),
    };
    let k = walk.free.len() as f64;
    let l2 = link_second_eigenvalue(&walk)?;
    let psi = influence::influence_matrix(t, pin)?;
    let lm = crate::influence::lambda_max_influence(&psi)?;
    Ok(Some((l2 * (k - 1.0) - lm).abs()))
}

/// One-stop access to the influence matrix used by reports.
pub fn influence_of(t: &DistributionTable) -> Result<InfluenceMatrix> {
    influence::influence_matrix(t, &Pinning::empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{HardcoreModel, Spin};
    use crate::gen;
    use crate::graph::Graph;
    use approx::assert_relative_eq;

    fn k2_table(lambda: f64) -> DistributionTable {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let m = HardcoreModel::new(g, lambda).unwrap();
        DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap()
    }

    #[test]
    fn product_walk_entries() {
        let t = gen::product_fair(2);
        let w = build_link_walk(&t, &Pinning::empty()).unwrap();
        // with independent fair coins every allowed transition is 1/2
        assert_relative_eq!(w.matrix[(0, 1)], 0.5);
        assert_relative_eq!(w.matrix[(0, 3)], 0.5);
        assert_eq!(w.matrix[(0, 2)], 0.0); // partiteness: in-0 never steps to out-0
        assert!(w.stochastic_deviation() < 1e-14);
        assert!(w.partiteness_deviation() == 0.0);
    }

    #[test]
    fn k2_walk_blocks_adjacent_in() {
        let w = build_link_walk(&k2_table(1.0), &Pinning::empty()).unwrap();
        // in-literal of 0 cannot move to in-literal of 1
        assert_eq!(w.matrix[(0, 1)], 0.0);
        assert!(w.reversibility_deviation() < 1e-14);
        let l2 = link_second_eigenvalue(&w).unwrap();
        assert_relative_eq!(l2, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn spectrum_identity_on_examples() {
        for t in [
            k2_table(1.0),
            gen::product_fair(4),
            gen::half_half(4),
            gen::uniform_k_subsets(5, 2),
        ] {
            let rep = spectrum_identity_check(&t).unwrap();
            assert!(rep.pass, "deviation {}", rep.max_deviation);
        }
    }

    #[test]
    fn product_walk_full_spectrum() {
        // n=4 product: spectrum {1, 0 x4, -1/3 x3}
        let t = gen::product_fair(4);
        let rep = spectrum_identity_check(&t).unwrap();
        let s = &rep.walk_spectrum;
        assert_relative_eq!(s[0], 1.0, epsilon = 1e-10);
        for &v in &s[1..5] {
            assert!(v.abs() < 1e-10);
        }
        for &v in &s[5..8] {
            assert_relative_eq!(v, -1.0 / 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn half_half_walk_second_eigenvalue_is_one() {
        let t = gen::half_half(4);
        let w = build_link_walk(&t, &Pinning::empty()).unwrap();
        let l2 = link_second_eigenvalue(&w).unwrap();
        assert_relative_eq!(l2, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn decomposition_identities() {
        for t in [
            k2_table(1.0),
            gen::product_fair(3),
            gen::uniform_k_subsets(4, 2),
        ] {
            let d = trivial_decomposition(&t).unwrap();
            assert!(d.pass(), "block {} psi {} q {} m {}",
                d.block_deviation, d.psi_deviation, d.q_eigvec_deviation, d.m_kernel_deviation);
        }
    }

    #[test]
    fn product_decomposition_blocks_vanish() {
        let d = trivial_decomposition(&gen::product_fair(3)).unwrap();
        assert!(d.a.amax() < 1e-14);
        assert!(d.b.amax() < 1e-14);
    }

    #[test]
    fn k2_decomposition_matches_influence() {
        let d = trivial_decomposition(&k2_table(1.0)).unwrap();
        // k = 2: A - B = Psi
        let diff = &d.a - &d.b;
        assert_relative_eq!(diff[(0, 1)], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn down_up_walk_is_glauber_on_k2() {
        let t = k2_table(1.0);
        let w = build_down_up_walk(&t).unwrap();
        assert_eq!(w.states, vec![0b00, 0b01, 0b10]);
        // from the empty set: add either vertex with probability 1/4
        let empty = w.state_index(0b00).unwrap();
        assert_relative_eq!(w.matrix[(empty, empty)], 0.5);
        assert_relative_eq!(w.matrix[(empty, 1)], 0.25);
        assert_relative_eq!(w.matrix[(empty, 2)], 0.25);
        assert!(w.stationary_deviation() < 1e-14);
        assert!(w.min_self_loop() > 0.0);
    }

    #[test]
    fn down_up_single_free_element_mixes_in_one_step() {
        let t = gen::product_odds(1, 2.0);
        let w = build_down_up_walk(&t).unwrap();
        let ev = linalg::reversible_spectrum(&w.matrix, &w.stationary).unwrap();
        assert_relative_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert!(ev[1].abs() < 1e-12);
    }

    #[test]
    fn down_up_stationary_demo_graph() {
        let g = gen::twin_triangles();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        let w = build_down_up_walk(&t).unwrap();
        assert!(w.stationary_deviation() < 1e-12);
        assert!(linalg::reversibility_deviation(&w.matrix, &w.stationary) < 1e-12);
    }

    #[test]
    fn local_to_global_examples() {
        // product: alphas all zero, lambda2 = bound = 1 - 1/n exactly
        let rep = local_to_global_check(&gen::product_fair(3)).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.lambda2, 1.0 - 1.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(rep.bound, 1.0 - 1.0 / 3.0, epsilon = 1e-10);

        let rep = local_to_global_check(&k2_table(1.0)).unwrap();
        assert!(rep.pass);

        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let m = HardcoreModel::new(g, 0.5).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        let rep = local_to_global_check(&t).unwrap();
        assert!(rep.pass, "slack {}", rep.slack);
    }

    #[test]
    fn conditional_identity_holds_under_pinnings() {
        let g = gen::twin_triangles();
        let m = HardcoreModel::new(g, 1.5).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        for pin in [
            Pinning::empty(),
            Pinning::single(0, Spin::Out),
            Pinning::single(3, Spin::In),
            [(1, Spin::Out), (4, Spin::Out)].into_iter().collect(),
        ] {
            if let Some(dev) = conditional_identity_deviation(&t, &pin).unwrap() {
                assert!(dev < 1e-9, "pin {pin:?}: deviation {dev}");
            }
        }
    }
}

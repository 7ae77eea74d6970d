//! Tree recurrences, uniqueness thresholds, and decay certificates.
//!
//! The occupation odds of a tree root satisfy `R = lambda * prod 1/(R_u +
//! 1)` over its children. On the regular tree this collapses to the
//! univariate map `f_d(R) = lambda / (R + 1)^d` with a unique fixed point;
//! how strongly `|f_d'| < 1` at that fixed point (the uniqueness gap)
//! governs every decay rate in this module:
//!
//! * worst-case envelopes for the root odds as a function of boundary depth
//!   and their geometric contraction;
//! * the potential-function change of variables `K = phi(R)`, `phi(R) =
//!   2 log(sqrt(R) + sqrt(R+1))`, under which one recursion step contracts
//!   gradients by `sqrt(1 - delta)`;
//! * per-level pseudoinfluence decay certificates on concrete trees;
//! * closed forms for adjacent-pair influence on the infinite regular tree
//!   (general two-spin parameters) with finite-truncation checks.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{DistributionTable, HardcoreModel, Pinning, Spin};
use crate::gen;
use crate::graph::{Graph, RootedTree};
use crate::influence;
use crate::ratio::Ratio;
use crate::saw::{self, BoundaryMode, TreeHardcore};
use crate::tol;

/// Two-spin tree-recursion parameters. Hardcore is `beta = 0, gamma = 1`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TreeRecursionParams {
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Arity `d` of the univariate recursion (`Delta - 1` on the regular tree).
    pub arity: usize,
}

impl TreeRecursionParams {
    pub fn new(lambda: f64, beta: f64, gamma: f64, arity: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        if !(beta >= 0.0) || !(gamma > 0.0) {
            return Err(Error::InvalidParameter(
                "need beta >= 0 and gamma > 0".into(),
            ));
        }
        if beta > gamma {
            return Err(Error::InvalidParameter("need beta <= gamma".into()));
        }
        if arity < 1 {
            return Err(Error::InvalidParameter("arity must be >= 1".into()));
        }
        Ok(TreeRecursionParams {
            lambda,
            beta,
            gamma,
            arity,
        })
    }

    pub fn hardcore(lambda: f64, arity: usize) -> Result<Self> {
        Self::new(lambda, 0.0, 1.0, arity)
    }

    /// `f(R) = lambda ((beta R + 1) / (R + gamma))^d`.
    pub fn f(&self, r: f64) -> f64 {
        self.lambda * ((self.beta * r + 1.0) / (r + self.gamma)).powi(self.arity as i32)
    }

    /// `f'(R) = d (beta gamma - 1) / ((beta R + 1)(R + gamma)) * f(R)`.
    pub fn f_prime(&self, r: f64) -> f64 {
        self.arity as f64 * (self.beta * self.gamma - 1.0)
            / ((self.beta * r + 1.0) * (r + self.gamma))
            * self.f(r)
    }
}

/// The hardcore tree recursion `lambda * prod 1/(R_u + 1)` over child odds.
pub fn tree_recurrence_value(lambda: f64, child_ratios: &[Ratio]) -> f64 {
    let mut r = lambda;
    for &c in child_ratios {
        r *= c.recursion_factor();
    }
    r
}

/// The unique fixed point of the (antiferromagnetic, `beta gamma <= 1`)
/// univariate recursion, by bisection to `1e-12` residual.
pub fn fixed_point(p: &TreeRecursionParams) -> f64 {
    // f is nonincreasing, so g(R) = f(R) - R is strictly decreasing and
    // changes sign on [0, f(0)].
    let mut lo = 0.0f64;
    let mut hi = p.f(0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval has collapsed to machine precision
        }
        let g = p.f(mid) - mid;
        if g > 0.0 {
            lo = mid;
        } else if g < 0.0 {
            hi = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

/// The critical fugacity `(Delta-1)^(Delta-1) / (Delta-2)^Delta` of the
/// regular tree of degree `Delta >= 3`.
pub fn critical_lambda(delta_max_degree: usize) -> Result<f64> {
    if delta_max_degree < 3 {
        return Err(Error::InvalidParameter(
            "critical fugacity needs max degree >= 3".into(),
        ));
    }
    let d = delta_max_degree as f64;
    Ok((d - 1.0).powf(d - 1.0) / (d - 2.0).powf(d))
}

/// Result of the uniqueness-gap computation.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Uniqueness {
    /// `|f_d'(fixed point)| <= 1 - gap` for every arity `1 <= d < Delta`.
    Unique { gap: f64 },
    /// Some arity reaches derivative magnitude `worst >= 1`.
    NotUnique { worst: f64 },
}

impl Uniqueness {
    pub fn gap(&self) -> Option<f64> {
        match *self {
            Uniqueness::Unique { gap } => Some(gap),
            Uniqueness::NotUnique { .. } => None,
        }
    }
}

/// Gap to the uniqueness boundary: `1 - max_{1 <= d < Delta} |f_d'(R_d)|`
/// for the hardcore recursion at fugacity `lambda`.
pub fn uniqueness_gap(lambda: f64, delta_max_degree: usize) -> Result<Uniqueness> {
    if delta_max_degree < 2 {
        return Err(Error::InvalidParameter("need max degree >= 2".into()));
    }
    let mut worst: f64 = 0.0;
    for d in 1..delta_max_degree {
        let p = TreeRecursionParams::hardcore(lambda, d)?;
        let r = fixed_point(&p);
        worst = worst.max(p.f_prime(r).abs());
    }
    let gap = 1.0 - worst;
    if gap > 0.0 {
        Ok(Uniqueness::Unique { gap })
    } else {
        Ok(Uniqueness::NotUnique { worst })
    }
}

/// The largest fugacity that is unique for degree `d + 1` with gap `delta`:
/// `(d/(d-1+delta))^d * (1-delta)/(d-1+delta)`. At `delta = 0` this is the
/// critical fugacity for degree `d + 1`.
pub fn gapped_threshold(delta: f64, d_plus_1: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter("need 0 <= delta < 1".into()));
    }
    if d_plus_1 < 3 {
        return Err(Error::InvalidParameter("need degree >= 3".into()));
    }
    let d = (d_plus_1 - 1) as f64;
    Ok((d / (d - 1.0 + delta)).powf(d) * (1.0 - delta) / (d - 1.0 + delta))
}

/// Worst-case odds envelope `(R_min, R_max)` at boundary depth `ell` for
/// trees of maximum degree `Delta`.
///
/// Depth 1 is `(0, lambda)`, depth 2 is `(lambda/(1+lambda)^Delta, lambda)`,
/// and deeper envelopes alternate the worst-case arity-`(Delta-1)` map over
/// the interval (a monotone, nested iteration).
pub fn rmin_rmax_envelope(lambda: f64, delta_max_degree: usize, ell: usize) -> Result<(f64, f64)> {
    if ell < 1 {
        return Err(Error::InvalidParameter("level must be >= 1".into()));
    }
    if delta_max_degree < 2 {
        return Err(Error::InvalidParameter("need max degree >= 2".into()));
    }
    if ell == 1 {
        return Ok((0.0, lambda));
    }
    let d = delta_max_degree as i32;
    let mut m = lambda / (1.0 + lambda).powi(d);
    let mut big = lambda;
    let inner = TreeRecursionParams::hardcore(lambda, delta_max_degree - 1)?;
    for _ in 2..ell {
        let new_m = inner.f(big);
        let new_big = inner.f(m);
        m = new_m;
        big = new_big;
    }
    Ok((m, big))
}

/// `eta* = (R_max(2)/R_min(2)) * |R_max(2) - R_min(2)|`, the constant in
/// the envelope contraction bound.
pub fn eta_star(lambda: f64, delta_max_degree: usize) -> Result<f64> {
    let (m, big) = rmin_rmax_envelope(lambda, delta_max_degree, 2)?;
    Ok((big / m) * (big - m))
}

/// The envelope contraction bound `sqrt(1-delta)^(ell-2) * eta*`.
///
/// Fails when `lambda` is not unique for the degree with at least gap
/// `delta`.
pub fn ssm_envelope_bound(
    lambda: f64,
    delta_max_degree: usize,
    delta: f64,
    ell: usize,
) -> Result<f64> {
    if ell < 2 {
        return Err(Error::InvalidParameter("bound applies from level 2".into()));
    }
    match uniqueness_gap(lambda, delta_max_degree)? {
        Uniqueness::Unique { gap } if gap >= delta - 1e-12 => {}
        _ => {
            return Err(Error::NotUnique(format!(
                "lambda {lambda} does not have uniqueness gap {delta} at degree {delta_max_degree}"
            )))
        }
    }
    Ok((1.0 - delta).sqrt().powi(ell as i32 - 2) * eta_star(lambda, delta_max_degree)?)
}

/// One row of the envelope contraction comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SsmRow {
    pub level: usize,
    pub measured_gap: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Measures the envelope gap against the contraction bound for levels
/// `2..=ell_max`, using the gap certified by [`uniqueness_gap`].
pub fn ssm_envelope_check(
    lambda: f64,
    delta_max_degree: usize,
    ell_max: usize,
) -> Result<Vec<SsmRow>> {
    let delta = uniqueness_gap(lambda, delta_max_degree)?
        .gap()
        .ok_or_else(|| Error::NotUnique(format!("lambda {lambda} is not unique")))?;
    let mut rows = Vec::new();
    for ell in 2..=ell_max {
        let (m, big) = rmin_rmax_envelope(lambda, delta_max_degree, ell)?;
        let bound = ssm_envelope_bound(lambda, delta_max_degree, delta, ell)?;
        let measured = big - m;
        rows.push(SsmRow {
            level: ell,
            measured_gap: measured,
            bound,
            pass: measured <= bound + tol::INEQ_SLACK,
        });
    }
    Ok(rows)
}

/// The potential function `phi(R) = 2 log(sqrt(R) + sqrt(R+1))` and its
/// derivative `Phi(R) = 1/sqrt(R(R+1))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PotentialFunction;

impl PotentialFunction {
    pub fn phi(&self, r: f64) -> f64 {
        2.0 * r.sqrt().asinh()
    }

    /// `phi'`; decreasing and positive on `(0, inf)`.
    pub fn phi_deriv(&self, r: f64) -> f64 {
        1.0 / (r * (r + 1.0)).sqrt()
    }

    pub fn phi_inverse(&self, y: f64) -> f64 {
        let s = (0.5 * y).sinh();
        s * s
    }
}

/// Sampling plan for the gradient-norm sweep.
#[derive(Clone, Copy, Debug)]
pub struct GridPlan {
    /// symmetric vectors per arity, coordinates log-spaced over the range
    pub symmetric_points: usize,
    /// random log-uniform vectors per arity
    pub random_points: usize,
    pub seed: u64,
    pub log10_min: f64,
    pub log10_max: f64,
}

impl Default for GridPlan {
    fn default() -> Self {
        GridPlan {
            symmetric_points: 30_000,
            random_points: 20_000,
            seed: 0x1dea1,
            log10_min: -6.0,
            log10_max: 6.0,
        }
    }
}

/// Outcome of the gradient-contraction sweep.
#[derive(Clone, Debug, Serialize)]
pub struct IdealDecayReport {
    pub delta: f64,
    pub target: f64,
    pub max_norm: f64,
    pub points: usize,
    pub pass: bool,
}

/// L1 norm of the gradient of `phi ∘ F ∘ phi^{-1}` at the point with child
/// odds `rs`, for the hardcore recursion. Closed form:
/// `sqrt(F/(F+1)) * sum_u sqrt(R_u/(R_u+1))`.
pub fn potential_gradient_norm(lambda: f64, rs: &[f64]) -> f64 {
    let mut f = lambda;
    for &r in rs {
        f /= 1.0 + r;
    }
    let s: f64 = rs.iter().map(|&r| (r / (1.0 + r)).sqrt()).sum();
    (f / (1.0 + f)).sqrt() * s
}

/// Sweeps the gradient norm over a dense grid of child-odds vectors for
/// every arity below `delta_max_degree` and compares the maximum against
/// `sqrt(1 - delta)`. The result is a sampled maximum, not a proof of the
/// supremum.
pub fn ideal_decay_check(
    lambda: f64,
    delta_max_degree: usize,
    plan: &GridPlan,
) -> Result<IdealDecayReport> {
    let delta = uniqueness_gap(lambda, delta_max_degree)?
        .gap()
        .ok_or_else(|| Error::NotUnique(format!("lambda {lambda} is not unique")))?;
    let target = (1.0 - delta).sqrt();
    let mut max_norm: f64 = 0.0;
    let mut points = 0usize;
    let mut rng = gen::rng(plan.seed);
    let span = plan.log10_max - plan.log10_min;
    for arity in 1..delta_max_degree {
        // symmetric log-spaced sweep
        for i in 0..plan.symmetric_points {
            let t = i as f64 / (plan.symmetric_points - 1) as f64;
            let r = 10f64.powf(plan.log10_min + span * t);
            let rs = vec![r; arity];
            max_norm = max_norm.max(potential_gradient_norm(lambda, &rs));
            points += 1;
        }
        // random vectors
        for _ in 0..plan.random_points {
            let rs: Vec<f64> = (0..arity)
                .map(|_| 10f64.powf(plan.log10_min + span * rng.gen::<f64>()))
                .collect();
            max_norm = max_norm.max(potential_gradient_norm(lambda, &rs));
            points += 1;
        }
        // corners of the sweep box and of the depth-2 envelope
        let (m2, big2) = rmin_rmax_envelope(lambda, delta_max_degree, 2)?;
        let corners = [
            10f64.powf(plan.log10_min),
            10f64.powf(plan.log10_max),
            m2.max(1e-300),
            big2,
        ];
        let mut idx = vec![0usize; arity];
        loop {
            let rs: Vec<f64> = idx.iter().map(|&i| corners[i]).collect();
            max_norm = max_norm.max(potential_gradient_norm(lambda, &rs));
            points += 1;
            let mut pos = 0;
            loop {
                if pos == arity {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < corners.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == arity {
                break;
            }
        }
    }
    Ok(IdealDecayReport {
        delta,
        target,
        max_norm,
        points,
        pass: max_norm <= target + tol::INEQ_SLACK,
    })
}

/// `(1 + 2 eta)^(Delta + 1)`, the factor relating the true per-level
/// contraction to the ideal one when envelopes at the previous level are
/// `eta`-close. Requires `0 <= eta <= 1/2`.
pub fn true_to_ideal_factor(eta: f64, delta_max_degree: usize) -> Result<f64> {
    if !(0.0..=0.5).contains(&eta) {
        return Err(Error::InvalidParameter("need 0 <= eta <= 1/2".into()));
    }
    Ok((1.0 + 2.0 * eta).powi(delta_max_degree as i32 + 1))
}

/// The scalar inequality behind the true-to-ideal factor:
/// `1/((x+1) - eta) <= (1 + 2 eta)/(x+1)` for `x >= 0`, `eta <= 1/2`.
pub fn shifted_reciprocal_bound_holds(x: f64, eta: f64) -> bool {
    1.0 / ((x + 1.0) - eta) <= (1.0 + 2.0 * eta) / (x + 1.0) + 1e-15
}

/// One level of a pseudoinfluence decay ledger.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LedgerRow {
    pub level: usize,
    pub sum_r: f64,
    pub sum_k: f64,
    pub rmin: f64,
    pub rmax: f64,
    /// `sum_r(level) / max_child sum_r(level - 1)`; absent when the
    /// denominator vanishes (vacuous level).
    pub ratio: Option<f64>,
    /// asserted bound on the ratio (or on the raw sum at level 1)
    pub bound: f64,
    /// recorded geometric target `sqrt(1 - delta)` beyond the settling depth
    pub target: Option<f64>,
    pub pass: bool,
}

/// Per-level pseudoinfluence sums with decay-rate certificates.
#[derive(Clone, Debug, Serialize)]
pub struct DecayLedger {
    pub lambda: f64,
    pub delta_max_degree: usize,
    pub settle_depth: usize,
    pub rows: Vec<LedgerRow>,
}

impl DecayLedger {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// CSV rendering: `level, sum_R, sum_K, ratio, bound, pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,sum_R,sum_K,ratio,bound,pass\n");
        for row in &self.rows {
            let ratio = row
                .ratio
                .map(|r| format!("{r:.16e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{},{:.16e},{}\n",
                row.level, row.sum_r, row.sum_k, ratio, row.bound, row.pass
            ));
        }
        out
    }
}

/// Default settling depth when none is configured: `ceil(4 / delta)`.
pub fn default_settle_depth(delta: f64) -> usize {
    (4.0 / delta).ceil() as usize
}

/// Builds the decay ledger of a tree up to `max_ell` levels.
///
/// Level 1 asserts the raw sum against `deg(root) * lambda` (each first
/// level term is at most `lambda`); deeper levels assert the one-level
/// ratio against `(Delta - 1) * lambda` and, beyond `settle_depth`, record
/// the geometric target `sqrt(1 - delta)` next to the measured ratio.
pub fn level_decay_certificate(
    tm: &TreeHardcore,
    max_ell: usize,
    settle_depth: Option<usize>,
) -> Result<DecayLedger> {
    let lambda = tm.lambda;
    let degree = tm.max_degree().max(2);
    let delta = uniqueness_gap(lambda, degree)?.gap();
    let ell0 = settle_depth.unwrap_or_else(|| delta.map_or(usize::MAX, default_settle_depth));
    let root = tm.tree.root();
    let root_degree = tm.tree.children(root).len();

    let mut rows = Vec::new();
    for ell in 1..=max_ell {
        let (sum_r, sum_k) = saw::level_rk_sums(tm, root, ell, BoundaryMode::VertexBoundary)?;
        let (rmin, rmax) = rmin_rmax_envelope(lambda, degree, ell)?;
        if ell == 1 {
            let bound = root_degree as f64 * lambda;
            rows.push(LedgerRow {
                level: ell,
                sum_r,
                sum_k,
                rmin,
                rmax,
                ratio: None,
                bound,
                target: None,
                pass: sum_r <= bound + tol::INEQ_SLACK,
            });
            continue;
        }
        let mut denom: f64 = 0.0;
        for &u in tm.tree.children(root) {
            if tm.labels[u].is_some() {
                continue;
            }
            let (du, _) = saw::level_rk_sums(tm, u, ell - 1, BoundaryMode::VertexBoundary)?;
            denom = denom.max(du);
        }
        let bound = (degree as f64 - 1.0) * lambda;
        let ratio = (denom > 0.0).then(|| sum_r / denom);
        let target = (ell > ell0).then(|| delta.map(|d| (1.0 - d).sqrt())).flatten();
        let pass = match ratio {
            Some(r) => r <= bound + tol::INEQ_SLACK,
            None => sum_r <= tol::ABS_FLOOR, // vacuous level must also be empty above
        };
        rows.push(LedgerRow {
            level: ell,
            sum_r,
            sum_k,
            rmin,
            rmax,
            ratio,
            bound,
            target,
            pass,
        });
    }
    Ok(DecayLedger {
        lambda,
        delta_max_degree: degree,
        settle_depth: ell0,
        rows,
    })
}

/// Closed-form adjacent-pair influence on the infinite regular tree, with
/// the recursion derivative at the fixed point. Requires uniqueness
/// (`|f'(fixed point)| < 1`).
pub fn infinite_tree_influence(p: &TreeRecursionParams) -> Result<(f64, f64)> {
    let r = fixed_point(p);
    let fp = p.f_prime(r);
    if fp.abs() >= 1.0 {
        return Err(Error::NotUnique(format!(
            "derivative magnitude {} at the fixed point",
            fp.abs()
        )));
    }
    let edge = (p.beta * p.gamma - 1.0) * r / ((p.beta * r + 1.0) * (r + p.gamma));
    Ok((edge, fp))
}

/// Eigenvalue bounds for the influence matrix on the infinite regular tree
/// with uniqueness gap `delta`:
/// `Delta/(Delta-1) * (1/(delta(2-delta)) - 1)` below and
/// `Delta/(Delta-1) * (1/delta - 1)` above.
pub fn infinite_tree_lambda_max_bounds(delta: f64, delta_max_degree: usize) -> Result<(f64, f64)> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidParameter("need 0 < delta < 1".into()));
    }
    if delta_max_degree < 2 {
        return Err(Error::InvalidParameter("need degree >= 2".into()));
    }
    let q = delta_max_degree as f64 / (delta_max_degree as f64 - 1.0);
    let lower = q * (1.0 / (delta * (2.0 - delta)) - 1.0);
    let upper = q * (1.0 / delta - 1.0);
    Ok((lower, upper))
}

/// Finite-truncation check of the infinite-tree column sum.
///
/// Builds the depth-`depth` tree whose root has `Delta` children and whose
/// internal vertices have `Delta - 1`, gives the leaves effective activity
/// equal to the fixed-point odds (which reproduces the infinite tree's
/// conditionals exactly at every interior vertex), measures
/// `sum_v |Psi(v, root)|`, and compares against the truncated geometric
/// closed form `Delta/(Delta-1) * sum_k |f'(fixed)|^k`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncationReport {
    pub measured: f64,
    pub closed_form: f64,
    pub deviation: f64,
    pub pass: bool,
}

pub fn truncated_influence_check(
    delta_max_degree: usize,
    lambda: f64,
    depth: usize,
) -> Result<TruncationReport> {
    if delta_max_degree < 3 {
        return Err(Error::InvalidParameter("need degree >= 3".into()));
    }
    let p = TreeRecursionParams::hardcore(lambda, delta_max_degree - 1)?;
    let rhat = fixed_point(&p);
    let fp_abs = p.f_prime(rhat).abs();

    let tree = RootedTree::regular_rooted_tree(delta_max_degree, delta_max_degree - 1, depth)?;
    let g = tree.to_graph();
    let mut acts = vec![lambda; tree.node_count()];
    for v in 0..tree.node_count() {
        if tree.depth(v) == depth {
            acts[v] = rhat;
        }
    }
    let mut measured = 0.0;
    for v in 1..tree.node_count() {
        let pin_in = Pinning::single(v, Spin::In);
        let pin_out = Pinning::single(v, Spin::Out);
        let (_, p_in) = crate::exact::tree_partition_dp_weighted(&g, &acts, &pin_in, 0)?;
        let (_, p_out) = crate::exact::tree_partition_dp_weighted(&g, &acts, &pin_out, 0)?;
        measured += (p_in - p_out).abs();
    }
    let ratio = delta_max_degree as f64 / (delta_max_degree as f64 - 1.0);
    let closed_form: f64 = ratio * (1..=depth).map(|k| fp_abs.powi(k as i32)).sum::<f64>();
    let deviation = (measured - closed_form).abs();
    Ok(TruncationReport {
        measured,
        closed_form,
        deviation,
        pass: deviation < 1e-6,
    })
}

/// Outcome of the path-product identity comparison on a tree model.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductPropertyReport {
    pub psi_uv: f64,
    pub psi_uw: f64,
    pub psi_wv: f64,
    pub deviation: f64,
    pub pass: bool,
}

/// Checks `Psi(u, v) = Psi(u, w) Psi(w, v)` by exact enumeration on a tree
/// model, where `w` lies on the unique `u`-`v` path.
pub fn tree_product_property_check(
    m: &HardcoreModel,
    u: usize,
    w: usize,
    v: usize,
) -> Result<ProductPropertyReport> {
    if !m.graph.is_forest() {
        return Err(Error::NotAForest);
    }
    if u == v || u == w || w == v {
        return Err(Error::InvalidParameter(
            "vertices must be pairwise distinct".into(),
        ));
    }
    let duv = m
        .graph
        .shortest_path_distance(u, v)?
        .ok_or_else(|| Error::InvalidParameter("u and v are disconnected".into()))?;
    let duw = m
        .graph
        .shortest_path_distance(u, w)?
        .ok_or_else(|| Error::InvalidParameter("u and w are disconnected".into()))?;
    let dwv = m
        .graph
        .shortest_path_distance(w, v)?
        .ok_or_else(|| Error::InvalidParameter("w and v are disconnected".into()))?;
    if duw + dwv != duv {
        return Err(Error::InvalidParameter(format!(
            "vertex {w} is not on the path from {u} to {v}"
        )));
    }
    let table = DistributionTable::enumerate_hardcore(m, &Pinning::empty())?;
    let psi = influence::influence_matrix(&table, &Pinning::empty())?;
    let lookup = |a: usize, b: usize| -> Result<f64> {
        psi.entry_by_element(a, b).ok_or_else(|| {
            Error::InvalidParameter(format!("element {a} or {b} is deterministic"))
        })
    };
    let psi_uv = lookup(u, v)?;
    let psi_uw = lookup(u, w)?;
    let psi_wv = lookup(w, v)?;
    let deviation = (psi_uv - psi_uw * psi_wv).abs();
    Ok(ProductPropertyReport {
        psi_uv,
        psi_uw,
        psi_wv,
        deviation,
        pass: deviation < 1e-10,
    })
}

/// Convenience for reports: `graph` accessor used by the CLI to build tree
/// models out of loaded graphs.
pub fn tree_model_from_graph(g: &Graph, root: usize, lambda: f64) -> Result<TreeHardcore> {
    if !g.is_forest() {
        return Err(Error::NotAForest);
    }
    g.check_vertex(root)?;
    let mut parent = vec![None; g.n()];
    let mut seen = vec![false; g.n()];
    seen[root] = true;
    let mut stack = vec![root];
    let mut order = vec![root];
    while let Some(x) = stack.pop() {
        for &y in g.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                stack.push(y);
                order.push(y);
            }
        }
    }
    if order.len() != g.n() {
        return Err(Error::InvalidParameter(
            "tree model requires a connected tree".into(),
        ));
    }
    let tree = RootedTree::from_parents(root, parent)?;
    TreeHardcore::from_tree(&tree, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recurrence_edge_cases() {
        assert_relative_eq!(tree_recurrence_value(1.5, &[]), 1.5);
        assert_relative_eq!(tree_recurrence_value(1.5, &[Ratio::Finite(0.0)]), 1.5);
        assert_relative_eq!(
            tree_recurrence_value(4.0, &[Ratio::Finite(1.0), Ratio::Finite(1.0)]),
            1.0
        );
        assert_relative_eq!(tree_recurrence_value(2.0, &[Ratio::Infinite]), 0.0);
    }

    #[test]
    fn fixed_point_values() {
        let p = TreeRecursionParams::hardcore(1.0, 1).unwrap();
        let r = fixed_point(&p);
        assert_relative_eq!(r, (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-12);
        assert!((p.f(r) - r).abs() < 1e-12);

        // critical point for degree 3 at lambda = 4
        let p = TreeRecursionParams::hardcore(4.0, 2).unwrap();
        let r = fixed_point(&p);
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.f_prime(r).abs(), 1.0, epsilon = 1e-10);

        // tiny fugacity: fixed point goes to zero
        let p = TreeRecursionParams::hardcore(1e-9, 2).unwrap();
        assert!(fixed_point(&p) < 1e-8);
    }

    #[test]
    fn f_is_strictly_decreasing() {
        let p = TreeRecursionParams::hardcore(2.3, 3).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..100 {
            let r = i as f64 * 0.1;
            let v = p.f(r);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn critical_lambda_values() {
        assert_relative_eq!(critical_lambda(3).unwrap(), 4.0);
        assert_relative_eq!(critical_lambda(4).unwrap(), 27.0 / 16.0);
        // approaches e/(degree - 2) for large degree
        let v = critical_lambda(100).unwrap();
        let approx_form = std::f64::consts::E / 98.0;
        assert!((v - approx_form).abs() / approx_form < 0.05);
        assert!(critical_lambda(2).is_err());
        // at most 4 for every degree
        for d in 3..30 {
            assert!(critical_lambda(d).unwrap() <= 4.0);
        }
    }

    #[test]
    fn uniqueness_gap_values() {
        // boundary: lambda = 4 at degree 3 is exactly critical
        match uniqueness_gap(4.0, 3).unwrap() {
            Uniqueness::NotUnique { worst } => assert_relative_eq!(worst, 1.0, epsilon = 1e-9),
            Uniqueness::Unique { gap } => panic!("expected boundary, got gap {gap}"),
        }
        let gap = uniqueness_gap(1.0, 3).unwrap().gap().unwrap();
        assert_relative_eq!(gap, 0.36465560765603866, epsilon = 1e-9);
        let gap = uniqueness_gap(1e-6, 3).unwrap().gap().unwrap();
        assert!(gap > 0.999);
        // inside the uniqueness region for several degrees
        for degree in 3..=8 {
            for eps in [0.01, 0.1, 0.5] {
                let lambda = critical_lambda(degree).unwrap() * (1.0 - eps);
                assert!(
                    uniqueness_gap(lambda, degree).unwrap().gap().is_some(),
                    "degree {degree} eps {eps}"
                );
            }
        }
    }

    #[test]
    fn gapped_threshold_values() {
        assert_relative_eq!(gapped_threshold(0.0, 3).unwrap(), 4.0);
        assert_relative_eq!(gapped_threshold(0.0, 4).unwrap(), 27.0 / 16.0);
        assert_relative_eq!(gapped_threshold(0.5, 3).unwrap(), 16.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn gapped_threshold_round_trip() {
        for d in 2..=7usize {
            for i in 1..=9 {
                let delta = i as f64 / 10.0;
                let lambda = gapped_threshold(delta, d + 1).unwrap();
                let gap = uniqueness_gap(lambda, d + 1).unwrap().gap().unwrap_or(0.0);
                assert!(
                    gap >= delta - 1e-9,
                    "d {d} delta {delta}: recovered gap {gap}"
                );
            }
        }
    }

    #[test]
    fn envelope_values_and_nesting() {
        let (m1, b1) = rmin_rmax_envelope(1.0, 2, 1).unwrap();
        assert_eq!((m1, b1), (0.0, 1.0));
        let (m2, b2) = rmin_rmax_envelope(1.0, 2, 2).unwrap();
        assert_relative_eq!(m2, 0.25);
        assert_relative_eq!(b2, 1.0);
        for degree in 2..=6 {
            for lambda in [0.4, 1.0, 2.0] {
                let mut prev = rmin_rmax_envelope(lambda, degree, 2).unwrap();
                for ell in 3..=12 {
                    let cur = rmin_rmax_envelope(lambda, degree, ell).unwrap();
                    assert!(cur.0 >= prev.0 - 1e-15, "min must not decrease");
                    assert!(cur.1 <= prev.1 + 1e-15, "max must not increase");
                    assert!(cur.0 <= cur.1);
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn eta_star_values() {
        assert_relative_eq!(eta_star(1.0, 2).unwrap(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(eta_star(1.0, 3).unwrap(), 7.0, epsilon = 1e-12);
        assert!(eta_star(1e-8, 3).unwrap() < 1e-6);
    }

    #[test]
    fn potential_function_shape() {
        let phi = PotentialFunction;
        assert_relative_eq!(phi.phi(0.0), 0.0);
        // strictly increasing, derivative decreasing
        let mut last = -1.0;
        let mut last_deriv = f64::INFINITY;
        for i in 1..200 {
            let r = i as f64 * 0.05;
            let v = phi.phi(r);
            assert!(v > last);
            last = v;
            let d = phi.phi_deriv(r);
            assert!(d > 0.0 && d < last_deriv);
            last_deriv = d;
        }
        for i in 0..100 {
            let y = i as f64 * 0.07;
            assert!((phi.phi(phi.phi_inverse(y)) - y).abs() < 1e-10);
        }
    }

    #[test]
    fn ssm_bound_base_case() {
        let lambda = 1.0;
        let delta = uniqueness_gap(lambda, 3).unwrap().gap().unwrap();
        let bound = ssm_envelope_bound(lambda, 3, delta, 2).unwrap();
        assert_relative_eq!(bound, eta_star(lambda, 3).unwrap());
        let (m, b) = rmin_rmax_envelope(lambda, 3, 2).unwrap();
        assert!(b - m <= bound);
        assert!(ssm_envelope_bound(4.0, 3, 0.1, 5).is_err());
    }

    #[test]
    fn ssm_check_degree3() {
        let rows = ssm_envelope_check(1.0, 3, 30).unwrap();
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn ideal_decay_small_plans() {
        let plan = GridPlan {
            symmetric_points: 2_000,
            random_points: 2_000,
            ..GridPlan::default()
        };
        let rep = ideal_decay_check(1.0, 3, &plan).unwrap();
        assert!(rep.pass, "max {} target {}", rep.max_norm, rep.target);
        assert_relative_eq!(rep.target, (1.0 - rep.delta).sqrt());
        // tiny fugacity: gradient norm nearly zero everywhere
        let rep = ideal_decay_check(1e-6, 3, &plan).unwrap();
        assert!(rep.max_norm < 1e-2);
    }

    #[test]
    fn true_to_ideal_values() {
        assert_relative_eq!(true_to_ideal_factor(0.0, 3).unwrap(), 1.0);
        assert_relative_eq!(true_to_ideal_factor(0.5, 3).unwrap(), 16.0);
        assert!(true_to_ideal_factor(0.6, 3).is_err());
        // scalar inequality at the equality corner
        assert!(shifted_reciprocal_bound_holds(0.0, 0.5));
    }

    #[test]
    fn scalar_bound_grid() {
        for xi in 0..=1000 {
            let x = xi as f64 * 0.1;
            for ei in 0..=100 {
                let eta = ei as f64 * 0.005;
                assert!(shifted_reciprocal_bound_holds(x, eta), "x {x} eta {eta}");
            }
        }
    }

    #[test]
    fn ledger_binary_tree() {
        let t = RootedTree::complete_ary_tree(2, 4).unwrap();
        let tm = TreeHardcore::from_tree(&t, 1.0).unwrap();
        let ledger = level_decay_certificate(&tm, 4, None).unwrap();
        assert!(ledger.all_pass());
        assert_eq!(ledger.delta_max_degree, 3);
        for row in &ledger.rows[1..] {
            let r = row.ratio.expect("complete tree has nonvacuous levels");
            assert!(r <= 2.0 + 1e-9, "level {} ratio {r}", row.level);
        }
        let csv = ledger.to_csv();
        assert!(csv.starts_with("level,"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn ledger_path() {
        let t = RootedTree::complete_ary_tree(1, 5).unwrap();
        let tm = TreeHardcore::from_tree(&t, 0.8).unwrap();
        let ledger = level_decay_certificate(&tm, 5, Some(2)).unwrap();
        assert!(ledger.all_pass());
        for row in &ledger.rows[1..] {
            assert!(row.ratio.unwrap() <= 0.8 + 1e-9);
        }
        // far below threshold: measured ratios decay below 1 beyond small levels
        assert!(ledger.rows[4].ratio.unwrap() < 1.0);
        assert!(ledger.rows[4].target.is_some());
    }

    #[test]
    fn infinite_tree_influence_values() {
        // critical point: edge influence -1/2, derivative -1
        let p = TreeRecursionParams::hardcore(4.0, 2).unwrap();
        assert!(infinite_tree_influence(&p).is_err());

        let p = TreeRecursionParams::hardcore(1.0, 2).unwrap();
        let (edge, fp) = infinite_tree_influence(&p).unwrap();
        let rhat = fixed_point(&p);
        assert_relative_eq!(edge, -rhat / (1.0 + rhat), epsilon = 1e-12);
        assert_relative_eq!(edge, -0.3176721961, epsilon = 1e-9);
        assert_relative_eq!(fp, 2.0 * edge, epsilon = 1e-12);

        // unit product of edge activities: influence vanishes
        let p = TreeRecursionParams::new(1.0, 1.0, 1.0, 2).unwrap();
        let (edge, fp) = infinite_tree_influence(&p).unwrap();
        assert_relative_eq!(edge, 0.0);
        assert_relative_eq!(fp, 0.0);
    }

    #[test]
    fn infinite_tree_bounds_values() {
        let (lo, hi) = infinite_tree_lambda_max_bounds(0.5, 3).unwrap();
        assert_relative_eq!(lo, 0.5, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.5, epsilon = 1e-12);
        let (lo, hi) = infinite_tree_lambda_max_bounds(0.999999, 3).unwrap();
        assert!(lo < 1e-5 && hi < 1e-5);
        assert!(infinite_tree_lambda_max_bounds(0.0, 3).is_err());
    }

    #[test]
    fn truncation_matches_closed_form() {
        let rep = truncated_influence_check(3, 1.0, 4).unwrap();
        assert!(rep.pass, "measured {} closed {}", rep.measured, rep.closed_form);
    }

    #[test]
    fn product_property_path3() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        let rep = tree_product_property_check(&m, 0, 1, 2).unwrap();
        assert!(rep.pass, "deviation {}", rep.deviation);
        // K2 conditionals: Pr[1|0] = 0, Pr[1|not 0] = 1/2 scaled into path-3
        assert!(rep.psi_uw < 0.0 && rep.psi_wv < 0.0 && rep.psi_uv > 0.0);
        // degenerate triple rejected
        assert!(tree_product_property_check(&m, 0, 0, 2).is_err());
        // off-path rejected
        let g = Graph::new(4, vec![(0, 1), (1, 2), (1, 3)]).unwrap();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        assert!(tree_product_property_check(&m, 0, 3, 2).is_err());
    }
}

//! Discrete p-energy minimization, condenser capacities, refinement
//! studies, null-capacity trends and the p-parabolicity test.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};
use crate::grid::{EnergyKernel, GridDomain, GridSpec, NodeState, ScalarField};
use crate::quadrature::{self, QuadOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Stop when the max-norm of the gradient over free nodes is below
    /// `tol_rel` times the initial energy.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Regularization for `p < 2`.
    pub eps: f64,
    /// Number of ×0.1 reductions of `eps` after the first convergence.
    pub anneal_steps: usize,
    pub policy: ExecPolicy,
    /// Starting values for free nodes, indexed like the lattice.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_rel: 1e-8,
            max_iter: 100_000,
            eps: 1e-8,
            anneal_steps: 2,
            policy: ExecPolicy::default(),
            initial: None,
        }
    }
}

impl SolveOptions {
    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: ScalarField,
    /// Unregularized p-energy of the result.
    pub energy: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting with the initial field.
    pub energy_history: Vec<f64>,
    pub grad_norm: f64,
    pub tol: f64,
}

fn dot(policy: ExecPolicy, a: &[f64], b: &[f64]) -> f64 {
    exec::sum_indexed(policy, a.len(), |i| a[i] * b[i])
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes the discrete p-energy with pinned values held fixed, by
/// Jacobi-preconditioned nonlinear conjugate gradients with a secant step
/// and Armijo backtracking. For `p < 2` the integrand is regularized and the
/// regularization annealed.
pub fn minimize_energy(g: &GridDomain, p: f64, states: Vec<NodeState>, opts: &SolveOptions) -> Result<SolveReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("exponent p must exceed 1, got {p}")));
    }
    let lat = g.shared_lattice();
    if states.len() != lat.len() {
        return Err(Error::InvalidInput("node state vector does not match the lattice".into()));
    }
    let pinned: Vec<f64> = states
        .iter()
        .filter_map(|s| match s {
            NodeState::Pinned(v) => Some(*v),
            _ => None,
        })
        .collect();
    if pinned.is_empty() {
        return Err(Error::InvalidInput("at least one node must be pinned".into()));
    }
    if pinned.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("pinned values must be finite".into()));
    }
    let lo = pinned.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pinned.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let free: Vec<usize> = (0..states.len()).filter(|&i| states[i] == NodeState::Free).collect();
    let start = |i: usize| match &opts.initial {
        Some(v) => v[i].clamp(lo, hi),
        None => 0f64.clamp(lo, hi),
    };
    if opts.initial.as_ref().is_some_and(|v| v.len() != states.len()) {
        return Err(Error::InvalidInput("initial field does not match the lattice".into()));
    }
    let mut u: Vec<f64> = states
        .iter()
        .enumerate()
        .map(|(i, s)| match s {
            NodeState::Pinned(v) => *v,
            NodeState::Free => start(i),
            NodeState::Absent => 0.0,
        })
        .collect();

    let cells = g.active_cells(&states);
    let policy = opts.policy;
    let eps_schedule: Vec<f64> = if p < 2.0 {
        (0..=opts.anneal_steps).map(|k| opts.eps * 0.1f64.powi(k as i32)).collect()
    } else {
        vec![0.0]
    };
    let mut kernel = EnergyKernel::new(g, &cells, p, eps_schedule[0], policy);
    let mut energy = kernel.energy(&u);
    let mut history = vec![energy];
    let tol = opts.tol_rel * energy;
    let nf = free.len();
    let mut iterations = 0;
    let mut grad = vec![0.0; nf];
    let mut scratch = Vec::new();
    let mut grad_norm = 0.0;

    for (stage, &eps) in eps_schedule.iter().enumerate() {
        if stage > 0 {
            let change = kernel.eps_change(&u, eps);
            kernel.set_eps(eps);
            energy += change.min(0.0);
            history.push(energy);
        }
        if nf == 0 {
            break;
        }
        kernel.gradient(&u, &free, &mut grad, &mut scratch);
        grad_norm = max_abs(&grad);
        let mut diag = vec![0.0; nf];
        let refresh_diag = |u: &[f64], diag: &mut [f64]| {
            kernel.hessian_diagonal(u, &free, diag);
            let floor = 1e-12 * max_abs(diag).max(f64::MIN_POSITIVE);
            for d in diag.iter_mut() {
                *d = d.max(floor);
            }
        };
        refresh_diag(&u, &mut diag);
        let mut z = vec![0.0; nf];
        let mut z_prev = vec![0.0; nf];
        let mut grad_prev = vec![0.0; nf];
        let mut dir = vec![0.0; nf];
        let mut full_dir = vec![0.0; u.len()];
        let mut trial = u.clone();
        let mut grad_trial = vec![0.0; nf];
        let mut alpha_prev = 1.0;
        let mut restart = true;

        while grad_norm > tol {
            if iterations >= opts.max_iter {
                return Err(Error::NoConvergence {
                    iterations,
                    grad_norm,
                    tol,
                });
            }
            for j in 0..nf {
                z[j] = grad[j] / diag[j];
            }
            let beta = if restart {
                0.0
            } else {
                let num = exec::sum_indexed(policy, nf, |j| z[j] * (grad[j] - grad_prev[j]));
                let den = dot(policy, &z_prev, &grad_prev);
                if den > 0.0 { (num / den).max(0.0) } else { 0.0 }
            };
            for j in 0..nf {
                dir[j] = -z[j] + beta * dir[j];
            }
            let mut slope = dot(policy, &grad, &dir);
            if slope >= 0.0 {
                for j in 0..nf {
                    dir[j] = -z[j];
                }
                slope = dot(policy, &grad, &dir);
            }
            for (j, &i) in free.iter().enumerate() {
                full_dir[i] = dir[j];
            }

            // Secant estimate of the minimizer along the direction; exact
            // for quadratic energies.
            let alpha_t = alpha_prev;
            for (j, &i) in free.iter().enumerate() {
                trial[i] = u[i] + alpha_t * dir[j];
            }
            kernel.gradient(&trial, &free, &mut grad_trial, &mut scratch);
            let slope_t = dot(policy, &grad_trial, &dir);
            let mut alpha = if slope_t > slope {
                (alpha_t * slope / (slope - slope_t)).min(16.0 * alpha_t)
            } else {
                16.0 * alpha_t
            };

            let mut accepted = None;
            for _ in 0..80 {
                let change = kernel.step_change(&u, &full_dir, alpha);
                if change <= 1e-4 * alpha * slope && change < 0.0 {
                    accepted = Some(change);
                    break;
                }
                alpha *= 0.5;
            }
            let Some(change) = accepted else {
                if !restart {
                    restart = true;
                    continue;
                }
                // No representable decrease left along steepest descent.
                break;
            };
            for (j, &i) in free.iter().enumerate() {
                u[i] += alpha * dir[j];
                full_dir[i] = 0.0;
            }
            energy += change;
            history.push(energy);
            iterations += 1;
            alpha_prev = alpha;
            std::mem::swap(&mut grad_prev, &mut grad);
            std::mem::swap(&mut z_prev, &mut z);
            kernel.gradient(&u, &free, &mut grad, &mut scratch);
            grad_norm = max_abs(&grad);
            if p != 2.0 {
                refresh_diag(&u, &mut diag);
            }
            restart = iterations % nf.max(50) == 0;
        }
        if grad_norm > tol && grad_norm > 1e3 * tol.max(f64::MIN_POSITIVE) {
            return Err(Error::NoConvergence {
                iterations,
                grad_norm,
                tol,
            });
        }
    }

    // Projection onto the range of the pinned data never raises the energy.
    for &i in &free {
        u[i] = u[i].clamp(lo, hi);
    }
    let field = ScalarField {
        lattice: lat,
        values: u,
        states,
    };
    let energy = crate::grid::p_energy(&field, g, p);
    Ok(SolveReport {
        field,
        energy,
        iterations,
        energy_history: history,
        grad_norm,
        tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub h: f64,
    pub iterations: usize,
    pub energy_history: Vec<f64>,
    /// `(h, value)` from coarse to fine, when part of a refinement study.
    pub refinement_chain: Option<Vec<(f64, f64)>>,
}

/// `cap_p(K, Ω)` on the grid: energy of the minimizer that is 1 on `K` and
/// 0 outside Ω.
pub fn variational_capacity(g: &GridDomain, p: f64, opts: &SolveOptions) -> Result<CapacityEstimate> {
    if !g.has_k() {
        return Err(Error::InvalidInput("the condenser plate K contains no grid node".into()));
    }
    let r = minimize_energy(g, p, g.condenser_states(), opts)?;
    Ok(CapacityEstimate {
        value: r.energy,
        h: g.h(),
        iterations: r.iterations,
        energy_history: r.energy_history,
        refinement_chain: None,
    })
}

/// Capacities of the same condenser at each spacing in `hs` (coarse to
/// fine). Every estimate carries the chain.
pub fn capacity_chain(spec: &GridSpec, hs: &[f64], p: f64, opts: &SolveOptions) -> Result<Vec<CapacityEstimate>> {
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("refinement spacings must strictly decrease".into()));
    }
    let mut out = Vec::with_capacity(hs.len());
    for &h in hs {
        out.push(variational_capacity(&spec.build(h)?, p, opts)?);
    }
    let chain: Vec<(f64, f64)> = out.iter().map(|c| (c.h, c.value)).collect();
    for c in &mut out {
        c.refinement_chain = Some(chain.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    TrendZero,
    TrendPositive,
    Inconclusive,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::TrendZero => "TrendZero",
            Trend::TrendPositive => "TrendPositive",
            Trend::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendOptions {
    /// Largest per-refinement ratio accepted as geometric decay.
    pub rho: f64,
    /// Relative change allowed in a stabilized chain.
    pub stable: f64,
    /// Values below this count as zero.
    pub floor: f64,
    /// Smallest ratio of successive increments of `1/value` accepted as
    /// logarithmic decay.
    pub reciprocal_ratio: f64,
}

impl Default for TrendOptions {
    fn default() -> Self {
        TrendOptions {
            rho: 0.8,
            stable: 0.05,
            floor: 1e-9,
            reciprocal_ratio: 0.7,
        }
    }
}

/// Reads a capacity refinement chain `(h, value)`, coarse to fine.
///
/// Decay to zero is recognized either as geometric decay (every ratio at
/// most `rho`) or as logarithmic decay: values strictly decreasing while
/// `1/value` grows by increments that do not shrink, which is how point
/// capacities vanish when `p = n`.
pub fn null_capacity_trend(chain: &[(f64, f64)], opts: &TrendOptions) -> Trend {
    if chain.len() < 3 || chain.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Trend::Inconclusive;
    }
    let v: Vec<f64> = chain.iter().map(|c| c.1).collect();
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Trend::Inconclusive;
    }
    if v.iter().all(|&x| x <= opts.floor) {
        return Trend::TrendZero;
    }
    if v.windows(2).all(|w| w[1] <= opts.rho * w[0]) {
        return Trend::TrendZero;
    }
    if v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|&x| x > 0.0) {
        let inc: Vec<f64> = v.windows(2).map(|w| 1.0 / w[1] - 1.0 / w[0]).collect();
        if inc.windows(2).all(|d| d[1] >= opts.reciprocal_ratio * d[0]) {
            return Trend::TrendZero;
        }
    }
    let m = v.len();
    let close = |a: f64, b: f64| (a - b).abs() <= opts.stable * a.abs().max(b.abs());
    if v[m - 1] > opts.floor && close(v[m - 1], v[m - 2]) && close(v[m - 2], v[m - 3]) {
        return Trend::TrendPositive;
    }
    Trend::Inconclusive
}

/// `μ(B(0, r))` as a function of the radius.
#[derive(Clone)]
pub enum BallGrowth {
    /// `c · r^d`.
    PowerLaw { c: f64, d: f64 },
    /// `c · r^d · ln(e + r)^k`.
    LogPower { c: f64, d: f64, k: f64 },
    Closed(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for BallGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallGrowth::PowerLaw { c, d } => write!(f, "PowerLaw {{ c: {c}, d: {d} }}"),
            BallGrowth::LogPower { c, d, k } => write!(f, "LogPower {{ c: {c}, d: {d}, k: {k} }}"),
            BallGrowth::Closed(_) => f.write_str("Closed(..)"),
        }
    }
}

impl BallGrowth {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            BallGrowth::PowerLaw { c, d } => c * r.powf(*d),
            BallGrowth::LogPower { c, d, k } => c * r.powf(*d) * (std::f64::consts::E + r).ln().powf(*k),
            BallGrowth::Closed(f) => f(r),
        }
    }

    fn check(&self) -> Result<()> {
        if let BallGrowth::PowerLaw { c, d } | BallGrowth::LogPower { c, d, .. } = self {
            if !(*c > 0.0 && *d > 0.0) {
                return Err(Error::InvalidInput(format!("ball growth needs c > 0 and d > 0, got c={c}, d={d}")));
            }
        }
        let mut prev = 0.0;
        for j in -20..=60 {
            let v = self.eval(2f64.powi(j));
            if !(v > 0.0 && v.is_finite()) || v < prev {
                return Err(Error::InvalidInput(format!(
                    "ball growth must be positive and nondecreasing, fails at r = 2^{j}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parabolicity {
    Parabolic,
    Hyperbolic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolicityReport {
    pub verdict: Parabolicity,
    pub rule: &'static str,
    /// `∫_{2^j}^{2^{j+1}} (r/μ(B(0,r)))^{1/(p-1)} dr`, when computed.
    pub blocks: Vec<f64>,
}

/// Number of dyadic blocks examined for closed-form growths.
pub const PARABOLICITY_BLOCKS: usize = 48;

/// Decides divergence of `∫^∞ (r/μ(B(0,r)))^{1/(p-1)} dr` (parabolic)
/// versus convergence (hyperbolic). Power and log-power growths are decided
/// from their exponents; closed forms from dyadic block integrals.
pub fn parabolicity(growth: &BallGrowth, p: f64) -> Result<ParabolicityReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("exponent p must exceed 1, got {p}")));
    }
    growth.check()?;
    let symbolic = |parabolic: bool, rule| {
        Ok(ParabolicityReport {
            verdict: if parabolic { Parabolicity::Parabolic } else { Parabolicity::Hyperbolic },
            rule,
            blocks: Vec::new(),
        })
    };
    match growth {
        BallGrowth::PowerLaw { d, .. } => return symbolic(p >= *d, "power-law-exponent"),
        // At p = d the integrand is r^{-1} ln(r)^{-k/(p-1)}.
        BallGrowth::LogPower { d, k, .. } => return symbolic(p > *d || (p == *d && *k <= p - 1.0), "log-power-exponent"),
        BallGrowth::Closed(_) => {}
    }
    let q = 1.0 / (p - 1.0);
    let f = |r: f64| (r / growth.eval(r)).powf(q);
    let opts = QuadOptions::default().with_abs_tol(0.0);
    let blocks = (0..PARABOLICITY_BLOCKS)
        .map(|j| {
            let a = 2f64.powi(j as i32);
            // Substituting r = a·e^t keeps every block on the same scale.
            let g = |t: f64| {
                let r = a * t.exp();
                f(r) * r
            };
            quadrature::adaptive(&g, 0.0, std::f64::consts::LN_2, &opts).map(|e| e.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = blocks.len();
    let tail = &blocks[m - 12..];
    let (verdict, rule) = if tail.windows(2).all(|w| w[1] <= 0.9 * w[0]) {
        (Parabolicity::Hyperbolic, "dyadic-blocks-geometric-decay")
    } else if blocks[m - 1] >= 2f64.powf(-0.25) * blocks[m / 2] {
        (Parabolicity::Parabolic, "dyadic-blocks-bounded-below")
    } else {
        (Parabolicity::Inconclusive, "dyadic-blocks-slow-decay")
    };
    Ok(ParabolicityReport { verdict, rule, blocks })
}

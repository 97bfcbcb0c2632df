//! p-harmonic Dirichlet solves on grid domains and numerical experiments
//! on them: maximum principle, Harnack ratios, removability of node sets
//! under refinement, limits at punctures and the quasiminimizer inequality.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{minimize_energy, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{EnergyKernel, GridDomain, GridSpec, NodeState, ScalarField, Shape};

/// Boundary data for grid solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryData {
    Const { c: f64 },
    /// `gradient · x + offset`.
    Affine { gradient: Vec<f64>, offset: f64 },
}

impl BoundaryData {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryData::Const { c } => *c,
            BoundaryData::Affine { gradient, offset } => offset + gradient.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
        }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self {
            BoundaryData::Affine { gradient, .. } if gradient.len() != n => Err(Error::InvalidInput(format!(
                "affine boundary data needs {n} gradient components"
            ))),
            _ => Ok(()),
        }
    }
}

/// Discrete p-harmonic function with the given values on the exterior ring
/// of Ω.
pub fn dirichlet_solve(g: &GridDomain, p: f64, boundary: &dyn Fn(&[f64]) -> f64, opts: &SolveOptions) -> Result<SolveReport> {
    minimize_energy(g, p, g.dirichlet_states(boundary), opts)
}

/// Relative tolerance of the principle checks, scaled by the value range.
pub const PRINCIPLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipleCheck {
    pub pass: bool,
    /// The field is constant within tolerance.
    pub constant: bool,
    /// Extreme value over free nodes and over pinned nodes.
    pub free_extreme: f64,
    pub pinned_extreme: f64,
    /// Where the extreme over all present nodes is attained.
    pub location: Vec<f64>,
}

fn principle_check(u: &ScalarField, sign: f64) -> PrincipleCheck {
    let mut free_ext = f64::NEG_INFINITY;
    let mut pinned_ext = f64::NEG_INFINITY;
    let mut best = (f64::NEG_INFINITY, 0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in u.present() {
        let v = u.values[i];
        lo = lo.min(v);
        hi = hi.max(v);
        let s = sign * v;
        match u.states[i] {
            NodeState::Free => free_ext = free_ext.max(s),
            NodeState::Pinned(_) => pinned_ext = pinned_ext.max(s),
            NodeState::Absent => {}
        }
        if s > best.0 {
            best = (s, i);
        }
    }
    let tol = PRINCIPLE_TOL * (1.0 + (hi - lo).abs().max(hi.abs()));
    let constant = hi - lo <= tol;
    PrincipleCheck {
        pass: constant || free_ext <= pinned_ext + tol,
        constant,
        free_extreme: sign * free_ext,
        pinned_extreme: sign * pinned_ext,
        location: u.lattice.point(best.1),
    }
}

/// The maximum over free nodes does not exceed the maximum over pinned
/// nodes, unless the field is constant.
pub fn max_principle_check(u: &ScalarField) -> PrincipleCheck {
    principle_check(u, 1.0)
}

pub fn min_principle_check(u: &ScalarField) -> PrincipleCheck {
    principle_check(u, -1.0)
}

/// `sup_B u / inf_B u` over the nodes of the closed ball `B`, which must
/// satisfy `6B ⊂ Ω`. Returns `∞` when the infimum is not positive.
pub fn harnack_ratio(u: &ScalarField, g: &GridDomain, center: &[f64], radius: f64) -> Result<f64> {
    let lat = g.lattice();
    if center.len() != lat.dimension() || !(radius > 0.0) {
        return Err(Error::InvalidInput("ball needs a centre of the grid dimension and a positive radius".into()));
    }
    let big = 6.0 * radius;
    let hi = lat.hi();
    if (0..lat.dimension()).any(|k| center[k] - big <= lat.lo()[k] || center[k] + big >= hi[k]) {
        return Err(Error::BallTooLarge { radius });
    }
    let mut x = vec![0.0; lat.dimension()];
    let dist = |x: &[f64]| x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut range = 0f64;
    for i in 0..lat.len() {
        lat.point_into(i, &mut x);
        let d = dist(&x);
        if d <= big && !g.omega()[i] {
            return Err(Error::BallTooLarge { radius });
        }
        if u.states[i].is_present() {
            range = range.max(u.values[i].abs());
        }
        if d <= radius && u.states[i].is_present() {
            sup = sup.max(u.values[i]);
            inf = inf.min(u.values[i]);
        }
    }
    if !sup.is_finite() {
        return Err(Error::InvalidInput("the ball contains no grid node".into()));
    }
    if inf <= PRINCIPLE_TOL * range.max(1.0) {
        return Ok(f64::INFINITY);
    }
    Ok(sup / inf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentVerdict {
    RemovableConsistent,
    Obstructed,
    Inconclusive,
}

impl fmt::Display for ExperimentVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentVerdict::RemovableConsistent => "RemovableConsistent",
            ExperimentVerdict::Obstructed => "Obstructed",
            ExperimentVerdict::Inconclusive => "Inconclusive",
        })
    }
}

/// Decision thresholds for refinement chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRule {
    /// Largest per-refinement factor counted as shrinking.
    pub contraction: f64,
    /// Values at or below this count as zero.
    pub floor: f64,
    /// Largest relative change over the last refinement counted as stable.
    pub stable: f64,
}

impl ChainRule {
    pub fn for_solver(opts: &SolveOptions) -> Self {
        ChainRule {
            contraction: 0.8,
            floor: 10.0 * opts.tol_rel,
            stable: 0.1,
        }
    }

    pub fn classify(&self, values: &[f64]) -> ExperimentVerdict {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return ExperimentVerdict::Inconclusive;
        }
        if values.iter().all(|&v| v <= self.floor) {
            return ExperimentVerdict::RemovableConsistent;
        }
        if values.windows(2).all(|w| w[1] <= self.floor || w[1] <= self.contraction * w[0]) {
            return ExperimentVerdict::RemovableConsistent;
        }
        let m = values.len();
        let (a, b) = (values[m - 2], values[m - 1]);
        if b > self.floor && (b - a).abs() <= self.stable * a.max(b) {
            return ExperimentVerdict::Obstructed;
        }
        ExperimentVerdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub quantity: String,
    /// `(h, value)`, coarse to fine.
    pub rows: Vec<(f64, f64)>,
    pub verdict: ExperimentVerdict,
}

impl Chain {
    fn new(quantity: &str, rows: Vec<(f64, f64)>, rule: &ChainRule) -> Self {
        let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
        Chain {
            quantity: quantity.to_string(),
            verdict: rule.classify(&values),
            rows,
        }
    }

    /// `value(h) / value(h/2)` for each refinement.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[0].1 / w[1].1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub grid: GridSpec,
    /// Closed node set inside Ω.
    pub e: Shape,
    pub p: f64,
    pub boundary: BoundaryData,
    /// Spacings, coarse to fine.
    pub levels: Vec<f64>,
    /// Value for the variant with `E` pinned.
    #[serde(default)]
    pub e_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    /// `sup |u_Ω - u_{Ω∖E}|` over the nodes of `Ω ∖ E`.
    pub removed: Chain,
    /// `sup |u_Ω - u_pinned|` over the nodes of `Ω ∖ E`, when `E` is also
    /// solved pinned to `e_value`.
    pub pinned: Option<Chain>,
    /// Oscillation of `u_{Ω∖E}` over the annulus `2h ≤ |x - x_E| ≤ 4h`
    /// around the centroid of `E`.
    pub oscillation: Vec<(f64, f64)>,
    pub rule: ChainRule,
    pub solver_tol_rel: f64,
}

impl ExperimentReport {
    /// The pinned chain when present, the removed chain otherwise.
    pub fn primary(&self) -> &Chain {
        self.pinned.as_ref().unwrap_or(&self.removed)
    }

    /// `(h, value, oscillation, verdict)` rows of the primary chain.
    pub fn csv_rows(&self) -> Vec<(f64, f64, f64, ExperimentVerdict)> {
        let c = self.primary();
        c.rows
            .iter()
            .zip(&self.oscillation)
            .map(|(&(h, v), &(_, o))| (h, v, o, c.verdict))
            .collect()
    }
}

struct Level {
    h: f64,
    removed: f64,
    pinned: Option<f64>,
    oscillation: f64,
}

fn sup_difference(a: &ScalarField, b: &ScalarField) -> f64 {
    b.free().map(|i| (a.values[i] - b.values[i]).abs()).fold(0.0, f64::max)
}

fn run_level(spec: &ExperimentSpec, h: f64, opts: &SolveOptions) -> Result<Level> {
    let g = spec.grid.build(h)?;
    let lat = g.lattice();
    spec.boundary.check(lat.dimension())?;
    let e = spec.e.mask(lat, true)?;
    if e.iter().zip(g.omega()).any(|(&ei, &oi)| ei && !oi) {
        return Err(Error::InvalidInput(format!("E is not contained in Ω at h = {h}")));
    }
    let f = |x: &[f64]| spec.boundary.eval(x);
    let full_states = g.dirichlet_states(&f);
    let full = minimize_energy(&g, spec.p, full_states.clone(), opts)?.field;
    let with_e = |s: NodeState| {
        full_states
            .iter()
            .zip(&e)
            .map(|(&st, &ei)| if ei { s } else { st })
            .collect::<Vec<_>>()
    };
    let removed = minimize_energy(&g, spec.p, with_e(NodeState::Absent), opts)?.field;
    let pinned = match spec.e_value {
        Some(v) => Some(sup_difference(&full, &minimize_energy(&g, spec.p, with_e(NodeState::Pinned(v)), opts)?.field)),
        None => None,
    };
    let centroid = {
        let mut c = vec![0.0; lat.dimension()];
        let mut count = 0f64;
        for i in (0..lat.len()).filter(|&i| e[i]) {
            for (ck, xk) in c.iter_mut().zip(lat.point(i)) {
                *ck += xk;
            }
            count += 1.0;
        }
        c.iter_mut().for_each(|v| *v /= count.max(1.0));
        c
    };
    Ok(Level {
        h,
        removed: sup_difference(&full, &removed),
        pinned,
        oscillation: annulus_oscillation(&removed, &centroid, 2.0 * h, 4.0 * h).unwrap_or(f64::NAN),
    })
}

/// Solves on Ω, on `Ω ∖ E` with `E` removed from the grid (its neighbours
/// see a free internal boundary), and optionally with `E` pinned, at every
/// refinement level; compares the solutions on `Ω ∖ E`.
pub fn removability_experiment(spec: &ExperimentSpec, opts: &SolveOptions) -> Result<ExperimentReport> {
    if spec.levels.is_empty() || spec.levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("experiment levels must be nonempty and strictly decreasing".into()));
    }
    let levels = exec::map_slice(opts.policy, &spec.levels, |&h| run_level(spec, h, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rule = ChainRule::for_solver(opts);
    let removed = Chain::new("sup_abs_difference_removed", levels.iter().map(|l| (l.h, l.removed)).collect(), &rule);
    let pinned = spec.e_value.map(|_| {
        Chain::new(
            "sup_abs_difference_pinned",
            levels.iter().map(|l| (l.h, l.pinned.unwrap_or(f64::NAN))).collect(),
            &rule,
        )
    });
    Ok(ExperimentReport {
        removed,
        pinned,
        oscillation: levels.iter().map(|l| (l.h, l.oscillation)).collect(),
        rule,
        solver_tol_rel: opts.tol_rel,
    })
}

/// `max - min` of `u` over present nodes with `r_in ≤ |x - x0| ≤ r_out`.
pub fn annulus_oscillation(u: &ScalarField, x0: &[f64], r_in: f64, r_out: f64) -> Option<f64> {
    let lat = &u.lattice;
    let mut x = vec![0.0; lat.dimension()];
    let slack = 1e-9 * lat.h();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in u.present() {
        lat.point_into(i, &mut x);
        let r = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if r >= r_in - slack && r <= r_out + slack {
            lo = lo.min(u.values[i]);
            hi = hi.max(u.values[i]);
        }
    }
    (hi >= lo).then_some(hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PunctureProbe {
    /// `(h, oscillation over 2h ≤ |x - x0| ≤ 4h)`, in the given order.
    pub rows: Vec<(f64, f64)>,
    /// Mean of the values on the finest annulus.
    pub limit_estimate: f64,
    /// Oscillation strictly decreases along the chain.
    pub decreasing: bool,
}

/// Oscillation of fields around `x0` over annuli that shrink with the grid
/// spacing; fields are ordered coarse to fine.
pub fn puncture_limit_probe(fields: &[ScalarField], x0: &[f64]) -> Result<PunctureProbe> {
    let mut rows = Vec::with_capacity(fields.len());
    for u in fields {
        let h = u.lattice.h();
        let osc = annulus_oscillation(u, x0, 2.0 * h, 4.0 * h)
            .ok_or_else(|| Error::InvalidInput(format!("no nodes on the probe annulus at h = {h}")))?;
        rows.push((h, osc));
    }
    let last = fields
        .last()
        .ok_or_else(|| Error::InvalidInput("puncture probe needs at least one field".into()))?;
    let h = last.lattice.h();
    let mut x = vec![0.0; last.lattice.dimension()];
    let (mut sum, mut count) = (0.0, 0.0);
    for i in last.present() {
        last.lattice.point_into(i, &mut x);
        let r = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if r >= 2.0 * h * (1.0 - 1e-9) && r <= 4.0 * h * (1.0 + 1e-9) {
            sum += last.values[i];
            count += 1.0;
        }
    }
    Ok(PunctureProbe {
        decreasing: rows.len() >= 2 && rows.windows(2).all(|w| w[1].1 < w[0].1),
        limit_estimate: sum / count,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QminReport {
    pub trials: usize,
    pub failures: usize,
    /// Smallest `(Q·E_loc(u + φ) - E_loc(u)) / E(u)` over the trials.
    pub worst_margin: f64,
    pub pass: bool,
}

/// Relative slack allowed by the quasiminimizer spot-check.
pub const QMIN_SLACK: f64 = 1e-9;

/// Checks `E_loc(u) ≤ Q·E_loc(u + φ)` for random bumps `φ` supported on
/// free nodes, with energies taken over the cells the bump touches.
pub fn qmin_spot_check(u: &ScalarField, g: &GridDomain, p: f64, q: f64, trials: usize, seed: u64) -> Result<QminReport> {
    let free: Vec<usize> = u.free().collect();
    if free.is_empty() {
        return Err(Error::InvalidInput("the field has no free nodes to perturb".into()));
    }
    let lat = g.lattice();
    let cells = g.active_cells(&u.states);
    let mut active = vec![false; lat.len()];
    for &c in &cells {
        active[c] = true;
    }
    let kernel = EnergyKernel::new(g, &cells, p, 0.0, exec::ExecPolicy::Sequential);
    let total = kernel.energy(&u.values);
    let (lo, hi) = u.present().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), i| (a.min(u.values[i]), b.max(u.values[i])));
    let scale = 0.1 * (hi - lo).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    let n = lat.dimension();
    let mut pert = u.values.clone();
    for _ in 0..trials {
        let centre = free[rng.gen_range(0..free.len())];
        let radius = rng.gen_range(1..=4) as f64;
        let amp = rng.gen_range(-1.0..1.0) * scale;
        let cx: Vec<f64> = lat.point(centre);
        let mut support = Vec::new();
        let reach = radius as usize;
        // Nodes of the bounding cube around the centre.
        let mut offsets = vec![0usize; n];
        'cube: loop {
            let mut idx = 0;
            let mut inside = true;
            for k in 0..n {
                let c = lat.coord(centre, k) as isize + offsets[k] as isize - reach as isize;
                if c < 0 || c >= lat.dims()[k] as isize {
                    inside = false;
                }
                idx += c.max(0) as usize * lat.strides()[k];
            }
            if inside && u.states[idx] == NodeState::Free {
                let d2: f64 = lat.point(idx).iter().zip(&cx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (lat.h() * lat.h());
                if d2 < radius * radius {
                    let bump = (1.0 - d2 / (radius * radius)).powi(2);
                    support.push((idx, amp * bump));
                }
            }
            for k in 0..n {
                offsets[k] += 1;
                if offsets[k] <= 2 * reach {
                    continue 'cube;
                }
                offsets[k] = 0;
            }
            break;
        }
        let mut local: Vec<usize> = support
            .iter()
            .flat_map(|&(i, _)| lat.cells_touching(i).filter(|&c| active[c]).collect::<Vec<_>>())
            .collect();
        local.sort_unstable();
        local.dedup();
        let before = kernel.energy_on(&local, &u.values);
        for &(i, v) in &support {
            pert[i] = u.values[i] + v;
        }
        let after = kernel.energy_on(&local, &pert);
        for &(i, _) in &support {
            pert[i] = u.values[i];
        }
        let margin = (q * after - before) / total.max(f64::MIN_POSITIVE);
        worst = worst.min(margin);
        if margin < -QMIN_SLACK {
            failures += 1;
        }
    }
    Ok(QminReport {
        trials,
        failures,
        worst_margin: worst,
        pass: failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridWeight;
    use approx::assert_relative_eq;

    fn disc(h: f64) -> GridDomain {
        GridSpec {
            lo: vec![-1.25, -1.25],
            hi: vec![1.25, 1.25],
            omega: Shape::disc(vec![0.0, 0.0], 1.0),
            k: None,
            weight: GridWeight::unweighted(),
        }
        .build(h)
        .unwrap()
    }

    #[test]
    fn constant_and_linear_data() {
        let g = disc(1.0 / 16.0);
        let r = dirichlet_solve(&g, 2.0, &|_| 2.5, &SolveOptions::default()).unwrap();
        assert!(r.field.present().all(|i| r.field.values[i] == 2.5));
        assert!(max_principle_check(&r.field).constant);
        let opts = SolveOptions {
            tol_rel: 1e-13,
            ..Default::default()
        };
        let r = dirichlet_solve(&g, 2.0, &|x| x[0] - 0.5 * x[1], &opts).unwrap();
        for i in r.field.free() {
            let x = g.lattice().point(i);
            assert_relative_eq!(r.field.values[i], x[0] - 0.5 * x[1], epsilon = 1e-10);
        }
        for p in [1.5, 3.0] {
            let r = dirichlet_solve(&g, p, &|x| x[0], &SolveOptions::default()).unwrap();
            for i in r.field.free() {
                assert_relative_eq!(r.field.values[i], g.lattice().point(i)[0], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn annulus_solution_and_principles() {
        let g = GridSpec::ball_condenser(2, 0.25, 1.0).build(1.0 / 32.0).unwrap();
        let r = minimize_energy(&g, 2.0, g.condenser_states(), &SolveOptions::default()).unwrap();
        let max = max_principle_check(&r.field);
        assert!(max.pass && !max.constant);
        let rr = max.location.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rr <= 0.25 + 1e-9);
        assert!(min_principle_check(&r.field).pass);
        let mut worst = 0f64;
        for i in r.field.free() {
            let x = g.lattice().point(i);
            let rad = (x[0] * x[0] + x[1] * x[1]).sqrt();
            worst = worst.max((r.field.values[i] - rad.ln() / 0.25f64.ln()).abs());
        }
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn spike_fails_max_principle() {
        let g = disc(0.25);
        let mut u = ScalarField::from_fn(&g, &|x| x[0]);
        let i = g.lattice().nearest(&[0.0, 0.0]).unwrap();
        u.values[i] = 5.0;
        let c = max_principle_check(&u);
        assert!(!c.pass);
        assert_eq!(c.location, vec![0.0, 0.0]);
    }

    #[test]
    fn harnack_examples() {
        let g = disc(1.0 / 32.0);
        let u = ScalarField::from_fn(&g, &|_| 3.0);
        assert_eq!(harnack_ratio(&u, &g, &[0.0, 0.0], 0.1).unwrap(), 1.0);
        assert!(matches!(harnack_ratio(&u, &g, &[0.0, 0.0], 0.2), Err(Error::BallTooLarge { .. })));
        let v = ScalarField::from_fn(&g, &|x| x[0].abs());
        assert_eq!(harnack_ratio(&v, &g, &[0.0, 0.0], 0.1).unwrap(), f64::INFINITY);
        let w = ScalarField::from_fn(&g, &|x| 2.0 + x[0]);
        let a = harnack_ratio(&w, &g, &[0.0, 0.0], 0.1).unwrap();
        let mut w2 = w.clone();
        w2.values.iter_mut().for_each(|v| *v *= 7.0);
        assert_relative_eq!(a, harnack_ratio(&w2, &g, &[0.0, 0.0], 0.1).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn empty_e_gives_zero_difference() {
        let spec = ExperimentSpec {
            grid: GridSpec {
                lo: vec![-1.25, -1.25],
                hi: vec![1.25, 1.25],
                omega: Shape::disc(vec![0.0, 0.0], 1.0),
                k: None,
                weight: GridWeight::unweighted(),
            },
            e: Shape::Union { parts: vec![] },
            p: 2.0,
            boundary: BoundaryData::Affine {
                gradient: vec![1.0, 0.0],
                offset: 0.0,
            },
            levels: vec![0.25, 0.125],
            e_value: None,
        };
        let r = removability_experiment(&spec, &SolveOptions::default()).unwrap();
        assert!(r.removed.rows.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(r.removed.verdict, ExperimentVerdict::RemovableConsistent);
    }

    #[test]
    fn chain_rule_cases() {
        let rule = ChainRule::for_solver(&SolveOptions::default());
        assert_eq!(rule.classify(&[0.1, 0.05, 0.025]), ExperimentVerdict::RemovableConsistent);
        assert_eq!(rule.classify(&[0.9, 0.95, 0.97]), ExperimentVerdict::Obstructed);
        assert_eq!(rule.classify(&[0.1, 0.09, 0.05]), ExperimentVerdict::Inconclusive);
        assert_eq!(rule.classify(&[0.1]), ExperimentVerdict::Inconclusive);
    }

    #[test]
    fn puncture_probe_controls() {
        let fields: Vec<ScalarField> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|&h| ScalarField::from_fn(&disc(h), &|_| 1.0))
            .collect();
        let r = puncture_limit_probe(&fields, &[0.0, 0.0]).unwrap();
        assert!(r.rows.iter().all(|&(_, o)| o == 0.0));
        assert_eq!(r.limit_estimate, 1.0);
        let angular: Vec<ScalarField> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|&h| ScalarField::from_fn(&disc(h), &|x| x[1].atan2(x[0])))
            .collect();
        let r = puncture_limit_probe(&angular, &[0.0, 0.0]).unwrap();
        assert!(!r.decreasing);
        assert!(r.rows.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12));
    }

    #[test]
    fn qmin_holds_for_minimizer_and_fails_for_bad_field() {
        let g = disc(1.0 / 16.0);
        let r = dirichlet_solve(&g, 2.0, &|x| x[0] * x[1], &SolveOptions::default()).unwrap();
        let rep = qmin_spot_check(&r.field, &g, 2.0, 1.0, 100, 7).unwrap();
        assert!(rep.pass, "{rep:?}");
        let bad = ScalarField::from_fn(&g, &|x| (9.0 * x[0]).sin());
        let rep = qmin_spot_check(&bad, &g, 2.0, 1.0, 100, 7).unwrap();
        assert!(!rep.pass);
    }
}

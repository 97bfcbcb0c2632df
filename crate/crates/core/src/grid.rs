//! Uniform node lattices, domain masks, cell weights and the discrete
//! p-energy with its gradient.
//!
//! A cell is identified with its lowest corner `c`. Its energy uses forward
//! differences `g_k = (u(c + e_k) - u(c)) / h`, so only the `n + 1` stencil
//! nodes `c, c + e_1, …, c + e_n` enter. A cell takes part in a solve when
//! all of its stencil nodes are present.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecPolicy};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    lo: Vec<f64>,
    h: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Lattice {
    /// Nodes `lo + i·h` covering the box `[lo, hi]`; each side must be a
    /// whole number of steps.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, h: f64) -> Result<Self> {
        let n = lo.len();
        if !(2..=MAX_DIM).contains(&n) || hi.len() != n {
            return Err(Error::InvalidInput(format!(
                "grid dimension must be between 2 and {MAX_DIM} with matching box corners"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        let mut dims = Vec::with_capacity(n);
        for k in 0..n {
            let steps = (hi[k] - lo[k]) / h;
            let r = steps.round();
            if !(r >= 2.0) || (steps - r).abs() > 1e-6 * r.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "box side {} .. {} is not a whole number (≥ 2) of steps {h}",
                    lo[k], hi[k]
                )));
            }
            dims.push(r as usize + 1);
        }
        let mut strides = vec![1; n];
        for k in 1..n {
            strides[k] = strides[k - 1] * dims[k - 1];
        }
        if strides[n - 1].checked_mul(dims[n - 1]).is_none_or(|len| len > u32::MAX as usize) {
            return Err(Error::InvalidInput("grid too large".into()));
        }
        Ok(Lattice { lo, h, dims, strides })
    }

    /// Cube `[-half, half]^n`.
    pub fn cube(n: usize, half: f64, h: f64) -> Result<Self> {
        Self::new(vec![-half; n], vec![half; n], h)
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.dims).map(|(l, d)| l + (d - 1) as f64 * self.h).collect()
    }

    pub fn len(&self) -> usize {
        self.strides[self.dims.len() - 1] * self.dims[self.dims.len() - 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `idx` along `axis`, as a lattice index.
    pub fn coord(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.dims[axis]
    }

    pub fn point_into(&self, idx: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(self.dims.len()) {
            *o = self.lo[k] + self.coord(idx, k) as f64 * self.h;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dims.len()];
        self.point_into(idx, &mut x);
        x
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Node closest to `x`, if `x` lies in the box.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for k in 0..self.dims.len() {
            let t = ((x[k] - self.lo[k]) / self.h).round();
            if !(t >= 0.0 && t <= (self.dims[k] - 1) as f64) {
                return None;
            }
            idx += t as usize * self.strides[k];
        }
        Some(idx)
    }

    /// Whether node `idx` is the lower corner of a cell.
    pub fn is_corner(&self, idx: usize) -> bool {
        (0..self.dims.len()).all(|k| self.coord(idx, k) + 1 < self.dims[k])
    }

    pub fn on_boundary(&self, idx: usize) -> bool {
        (0..self.dims.len()).any(|k| {
            let c = self.coord(idx, k);
            c == 0 || c + 1 == self.dims[k]
        })
    }

    /// Stencil nodes of the cell with corner `c`: `c` then `c + e_k`.
    pub fn stencil(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(c).chain(self.strides.iter().map(move |s| c + s))
    }

    /// All `2^n` vertices of the cell with corner `c`.
    pub fn vertices(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.dims.len();
        (0..1usize << n).map(move |mask| c + (0..n).filter(|k| mask >> k & 1 == 1).map(|k| self.strides[k]).sum::<usize>())
    }

    /// Corners of the cells whose stencil contains node `idx`.
    pub fn cells_touching(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let own = self.is_corner(idx).then_some(idx);
        let lower = (0..self.dims.len()).filter_map(move |k| {
            (self.coord(idx, k) > 0)
                .then(|| idx - self.strides[k])
                .filter(|&c| self.is_corner(c))
        });
        own.into_iter().chain(lower)
    }

    fn centre_into(&self, c: usize, out: &mut [f64]) {
        self.point_into(c, out);
        for o in out.iter_mut().take(self.dims.len()) {
            *o += 0.5 * self.h;
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Region description evaluated on lattice nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Euclidean ball.
    Disc { center: Vec<f64>, radius: f64 },
    /// Axis-aligned box; a zero-thickness box is a segment or face.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// The lattice node nearest to `at`.
    Point { at: Vec<f64> },
    Union { parts: Vec<Shape> },
    Difference { base: std::boxed::Box<Shape>, minus: std::boxed::Box<Shape> },
}

impl Shape {
    pub fn disc(center: Vec<f64>, radius: f64) -> Self {
        Shape::Disc { center, radius }
    }

    pub fn point(at: Vec<f64>) -> Self {
        Shape::Point { at }
    }

    pub fn rect(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Shape::Box { lo, hi }
    }

    pub fn minus(self, other: Shape) -> Self {
        Shape::Difference {
            base: std::boxed::Box::new(self),
            minus: std::boxed::Box::new(other),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("{what} has the wrong dimension for a {n}-d grid")));
        match self {
            Shape::Disc { center, radius } => {
                if center.len() != n {
                    return bad("disc centre");
                }
                if !(*radius >= 0.0) {
                    return Err(Error::InvalidInput(format!("disc radius must be nonnegative, got {radius}")));
                }
            }
            Shape::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return bad("box corner");
                }
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Err(Error::InvalidInput("box corners out of order".into()));
                }
            }
            Shape::Point { at } => {
                if at.len() != n {
                    return bad("point");
                }
            }
            Shape::Union { parts } => {
                for s in parts {
                    s.check(n)?;
                }
            }
            Shape::Difference { base, minus } => {
                base.check(n)?;
                minus.check(n)?;
            }
        }
        Ok(())
    }

    /// Node mask; `closed` selects the closed (boundary included) or open
    /// reading of the region.
    pub fn mask(&self, lattice: &Lattice, closed: bool) -> Result<Vec<bool>> {
        self.check(lattice.dimension())?;
        Ok(self.mask_unchecked(lattice, closed))
    }

    fn mask_unchecked(&self, lattice: &Lattice, closed: bool) -> Vec<bool> {
        let tol = 1e-9 * lattice.h();
        let n = lattice.dimension();
        let by_point = |pred: &dyn Fn(&[f64]) -> bool| {
            let mut x = vec![0.0; n];
            (0..lattice.len())
                .map(|i| {
                    lattice.point_into(i, &mut x);
                    pred(&x)
                })
                .collect::<Vec<bool>>()
        };
        match self {
            Shape::Disc { center, radius } => by_point(&|x| {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let r = norm(&d);
                if closed {
                    r <= radius + tol
                } else {
                    r < radius - tol
                }
            }),
            Shape::Box { lo, hi } => by_point(&|x| {
                (0..n).all(|k| {
                    if closed {
                        x[k] >= lo[k] - tol && x[k] <= hi[k] + tol
                    } else {
                        x[k] > lo[k] + tol && x[k] < hi[k] - tol
                    }
                })
            }),
            Shape::Point { at } => {
                let mut m = vec![false; lattice.len()];
                if let Some(i) = lattice.nearest(at) {
                    m[i] = true;
                }
                m
            }
            Shape::Union { parts } => {
                let mut m = vec![false; lattice.len()];
                for s in parts {
                    for (a, b) in m.iter_mut().zip(s.mask_unchecked(lattice, closed)) {
                        *a |= b;
                    }
                }
                m
            }
            Shape::Difference { base, minus } => {
                let mut m = base.mask_unchecked(lattice, closed);
                for (a, b) in m.iter_mut().zip(minus.mask_unchecked(lattice, !closed)) {
                    *a &= !b;
                }
                m
            }
        }
    }
}

/// Weight sampled at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridWeight {
    Const { c: f64 },
    /// `|x|^alpha`.
    Pow { alpha: f64 },
    /// Piecewise-constant raster over the lattice box, axis 0 fastest.
    Raster { dims: Vec<usize>, values: Vec<f64> },
}

impl Default for GridWeight {
    fn default() -> Self {
        GridWeight::Const { c: 1.0 }
    }
}

impl GridWeight {
    pub fn unweighted() -> Self {
        Self::default()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, GridWeight::Const { .. }) || matches!(self, GridWeight::Pow { alpha } if *alpha == 0.0)
    }

    /// One sample per node index; zero where the node is not a cell corner.
    pub fn sample(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        let n = lattice.dimension();
        if let GridWeight::Raster { dims, values } = self {
            let expect: usize = dims.iter().product();
            if dims.len() != n || values.len() != expect || expect == 0 {
                return Err(Error::InvalidInput(format!(
                    "raster needs {n} axis sizes and as many values as their product"
                )));
            }
        }
        let lo = lattice.lo().to_vec();
        let hi = lattice.hi();
        let mut x = vec![0.0; n];
        let mut out = vec![0.0; lattice.len()];
        for (c, o) in out.iter_mut().enumerate() {
            if !lattice.is_corner(c) {
                continue;
            }
            lattice.centre_into(c, &mut x);
            let w = match self {
                GridWeight::Const { c } => *c,
                GridWeight::Pow { alpha } => norm(&x).powf(*alpha),
                GridWeight::Raster { dims, values } => {
                    let mut j = 0;
                    let mut stride = 1;
                    for k in 0..n {
                        let t = ((x[k] - lo[k]) / (hi[k] - lo[k]) * dims[k] as f64).floor() as usize;
                        j += t.min(dims[k] - 1) * stride;
                        stride *= dims[k];
                    }
                    values[j]
                }
            };
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "weight must be positive and finite, got {w} at {x:?}"
                )));
            }
            *o = w;
        }
        Ok(out)
    }
}

/// Role of a node in one solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NodeState {
    #[default]
    Absent,
    Free,
    Pinned(f64),
}

impl NodeState {
    pub fn is_present(self) -> bool {
        !matches!(self, NodeState::Absent)
    }
}

/// Lattice with Ω, the condenser plate `K` and cell weights.
#[derive(Debug, Clone)]
pub struct GridDomain {
    lattice: Arc<Lattice>,
    omega: Vec<bool>,
    k: Vec<bool>,
    weights: Vec<f64>,
}

impl GridDomain {
    /// `omega` and `k` are node masks; `weights` holds one positive sample
    /// per cell corner. `K` may be empty for domains only used in
    /// Dirichlet solves.
    pub fn new(lattice: Lattice, omega: Vec<bool>, k: Vec<bool>, weights: Vec<f64>) -> Result<Self> {
        let len = lattice.len();
        if omega.len() != len || k.len() != len || weights.len() != len {
            return Err(Error::InvalidInput("mask or weight length does not match the lattice".into()));
        }
        if !omega.iter().any(|&b| b) {
            return Err(Error::InvalidInput("Ω contains no grid node".into()));
        }
        for i in 0..len {
            if k[i] && !omega[i] {
                return Err(Error::InvalidInput(format!("K node {:?} is not in Ω", lattice.point(i))));
            }
            if omega[i] && lattice.on_boundary(i) {
                return Err(Error::InvalidInput(format!(
                    "Ω node {:?} lies on the grid box; enlarge the box",
                    lattice.point(i)
                )));
            }
            if lattice.is_corner(i) && !(weights[i] > 0.0 && weights[i].is_finite()) {
                return Err(Error::InvalidInput(format!("cell weight at {:?} is not positive", lattice.point(i))));
            }
        }
        Ok(GridDomain {
            lattice: Arc::new(lattice),
            omega,
            k,
            weights,
        })
    }

    /// Ω read open, `K` read closed.
    pub fn from_shapes(lattice: Lattice, omega: &Shape, k: Option<&Shape>, weight: &GridWeight) -> Result<Self> {
        let om = omega.mask(&lattice, false)?;
        let km = match k {
            Some(s) => s.mask(&lattice, true)?,
            None => vec![false; lattice.len()],
        };
        let w = weight.sample(&lattice)?;
        Self::new(lattice, om, km, w)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn shared_lattice(&self) -> Arc<Lattice> {
        self.lattice.clone()
    }

    pub fn h(&self) -> f64 {
        self.lattice.h()
    }

    pub fn dimension(&self) -> usize {
        self.lattice.dimension()
    }

    pub fn omega(&self) -> &[bool] {
        &self.omega
    }

    pub fn k(&self) -> &[bool] {
        &self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn has_k(&self) -> bool {
        self.k.iter().any(|&b| b)
    }

    /// Non-Ω stencil nodes of cells having a vertex in Ω.
    pub fn exterior_ring(&self) -> Vec<bool> {
        let lat = &self.lattice;
        let mut ring = vec![false; lat.len()];
        for c in 0..lat.len() {
            if lat.is_corner(c) && lat.vertices(c).any(|j| self.omega[j]) {
                for j in lat.stencil(c) {
                    if !self.omega[j] {
                        ring[j] = true;
                    }
                }
            }
        }
        ring
    }

    /// Ω free, exterior ring pinned to `f`.
    pub fn dirichlet_states(&self, f: &dyn Fn(&[f64]) -> f64) -> Vec<NodeState> {
        let ring = self.exterior_ring();
        let mut x = vec![0.0; self.dimension()];
        (0..self.lattice.len())
            .map(|i| {
                if self.omega[i] {
                    NodeState::Free
                } else if ring[i] {
                    self.lattice.point_into(i, &mut x);
                    NodeState::Pinned(f(&x))
                } else {
                    NodeState::Absent
                }
            })
            .collect()
    }

    /// `K` pinned to 1, the rest of Ω free, exterior ring pinned to 0.
    pub fn condenser_states(&self) -> Vec<NodeState> {
        let mut s = self.dirichlet_states(&|_| 0.0);
        for (st, &kk) in s.iter_mut().zip(&self.k) {
            if kk {
                *st = NodeState::Pinned(1.0);
            }
        }
        s
    }

    /// Cell corners whose stencil nodes are all present.
    pub fn active_cells(&self, states: &[NodeState]) -> Vec<usize> {
        let lat = &self.lattice;
        (0..lat.len())
            .filter(|&c| lat.is_corner(c) && lat.stencil(c).all(|j| states[j].is_present()))
            .collect()
    }
}

/// Grid scenario: box, Ω, optional plate `K` and weight, built at any
/// spacing that divides the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub omega: Shape,
    #[serde(default)]
    pub k: Option<Shape>,
    #[serde(default)]
    pub weight: GridWeight,
}

impl GridSpec {
    /// Concentric balls `K = B̄(0, inner)`, `Ω = B(0, outer)` in a cube
    /// with a margin of a quarter of the outer radius.
    pub fn ball_condenser(n: usize, inner: f64, outer: f64) -> Self {
        let half = 1.25 * outer;
        GridSpec {
            lo: vec![-half; n],
            hi: vec![half; n],
            omega: Shape::disc(vec![0.0; n], outer),
            k: Some(Shape::disc(vec![0.0; n], inner)),
            weight: GridWeight::unweighted(),
        }
    }

    pub fn build(&self, h: f64) -> Result<GridDomain> {
        let lat = Lattice::new(self.lo.clone(), self.hi.clone(), h)?;
        GridDomain::from_shapes(lat, &self.omega, self.k.as_ref(), &self.weight)
    }
}

/// Node values together with the node roles they were solved under.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub lattice: Arc<Lattice>,
    pub values: Vec<f64>,
    pub states: Vec<NodeState>,
}

impl ScalarField {
    /// `f` sampled on Ω and its exterior ring.
    pub fn from_fn(g: &GridDomain, f: &dyn Fn(&[f64]) -> f64) -> Self {
        let states = g.dirichlet_states(f);
        Self::sample(g, states, f)
    }

    /// `f` sampled at the present nodes of `states`; pinned nodes keep their
    /// pinned values.
    pub fn sample(g: &GridDomain, states: Vec<NodeState>, f: &dyn Fn(&[f64]) -> f64) -> Self {
        let lat = g.shared_lattice();
        let mut x = vec![0.0; lat.dimension()];
        let values = states
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                NodeState::Absent => 0.0,
                NodeState::Pinned(v) => *v,
                NodeState::Free => {
                    lat.point_into(i, &mut x);
                    f(&x)
                }
            })
            .collect();
        ScalarField { lattice: lat, values, states }
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        let i = self.lattice.nearest(x)?;
        self.states[i].is_present().then(|| self.values[i])
    }

    /// Indices of present nodes.
    pub fn present(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().enumerate().filter(|(_, s)| s.is_present()).map(|(i, _)| i)
    }

    pub fn free(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().enumerate().filter(|(_, s)| matches!(s, NodeState::Free)).map(|(i, _)| i)
    }
}

/// Discrete p-energy `Σ w_c h^n |∇_h u|^p` over the cells whose stencil
/// nodes are all present in `u`.
pub fn p_energy(u: &ScalarField, g: &GridDomain, p: f64) -> f64 {
    let active = g.active_cells(&u.states);
    EnergyKernel::new(g, &active, p, 0.0, ExecPolicy::default()).energy(&u.values)
}

/// `(s + ds)^q - s^q` without cancellation when `|ds| ≪ s`.
fn power_change(s: f64, ds: f64, q: f64) -> f64 {
    if ds.abs() <= s {
        s.powf(q) * (q * (ds / s).max(-1.0).ln_1p()).exp_m1()
    } else {
        (s + ds).max(0.0).powf(q) - s.powf(q)
    }
}

/// Cellwise p-energy machinery over a fixed set of active cells, with the
/// integrand regularized to `(|g|² + ε²)^{p/2}`.
pub struct EnergyKernel<'a> {
    lattice: &'a Lattice,
    weights: &'a [f64],
    cells: &'a [usize],
    /// Position of each corner in `cells`, `u32::MAX` if inactive.
    slot: Vec<u32>,
    p: f64,
    eps2: f64,
    policy: ExecPolicy,
}

impl<'a> EnergyKernel<'a> {
    pub fn new(g: &'a GridDomain, cells: &'a [usize], p: f64, eps: f64, policy: ExecPolicy) -> Self {
        let mut slot = vec![u32::MAX; g.lattice().len()];
        for (j, &c) in cells.iter().enumerate() {
            slot[c] = j as u32;
        }
        EnergyKernel {
            lattice: g.lattice(),
            weights: g.weights(),
            cells,
            slot,
            p,
            eps2: eps * eps,
            policy,
        }
    }

    pub fn set_eps(&mut self, eps: f64) {
        self.eps2 = eps * eps;
    }

    pub fn cells(&self) -> &[usize] {
        self.cells
    }

    fn grad_into(&self, c: usize, u: &[f64], g: &mut [f64; MAX_DIM]) -> f64 {
        let inv_h = 1.0 / self.lattice.h;
        let mut s = self.eps2;
        for (k, &st) in self.lattice.strides.iter().enumerate() {
            g[k] = (u[c + st] - u[c]) * inv_h;
            s += g[k] * g[k];
        }
        s
    }

    fn density(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            s
        } else {
            s.powf(0.5 * self.p)
        }
    }

    fn cell_energy(&self, c: usize, u: &[f64]) -> f64 {
        let mut g = [0.0; MAX_DIM];
        let s = self.grad_into(c, u, &mut g);
        self.weights[c] * self.volume() * self.density(s)
    }

    fn volume(&self) -> f64 {
        self.lattice.h.powi(self.lattice.dimension() as i32)
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        exec::sum_indexed(self.policy, self.cells.len(), |j| self.cell_energy(self.cells[j], u))
    }

    /// Energy restricted to the given cells (corners must be active).
    pub fn energy_on(&self, corners: &[usize], u: &[f64]) -> f64 {
        corners.iter().map(|&c| self.cell_energy(c, u)).sum()
    }

    /// `energy(new) - energy(old)`, summed cell by cell so that small
    /// changes are not lost to cancellation.
    pub fn energy_change(&self, old: &[f64], new: &[f64]) -> f64 {
        exec::sum_indexed(self.policy, self.cells.len(), |j| {
            let c = self.cells[j];
            self.cell_energy(c, new) - self.cell_energy(c, old)
        })
    }

    /// `energy(u + αd) - energy(u)` computed from the increments `αd`
    /// directly, accurate even when the change is far below the rounding
    /// level of the total energy.
    pub fn step_change(&self, u: &[f64], d: &[f64], alpha: f64) -> f64 {
        let inv_h = 1.0 / self.lattice.h;
        let half_p = 0.5 * self.p;
        exec::sum_indexed(self.policy, self.cells.len(), |j| {
            let c = self.cells[j];
            let mut s = self.eps2;
            let mut ds = 0.0;
            for &st in &self.lattice.strides {
                let g = (u[c + st] - u[c]) * inv_h;
                let dg = alpha * (d[c + st] - d[c]) * inv_h;
                s += g * g;
                ds += dg * (2.0 * g + dg);
            }
            let w = self.weights[c] * self.volume();
            if self.p == 2.0 {
                w * ds
            } else {
                w * power_change(s, ds, half_p)
            }
        })
    }

    /// Energy change at fixed `u` when the regularization moves from the
    /// current `ε` to `eps`.
    pub fn eps_change(&self, u: &[f64], eps: f64) -> f64 {
        let half_p = 0.5 * self.p;
        let new2 = eps * eps;
        exec::sum_indexed(self.policy, self.cells.len(), |j| {
            let c = self.cells[j];
            let mut g = [0.0; MAX_DIM];
            let s = self.grad_into(c, u, &mut g);
            let ds = new2 - self.eps2;
            self.weights[c] * self.volume() * power_change(s, ds, half_p)
        })
    }

    /// Per-cell fluxes `∂E/∂u(c + e_k)`, `n` per active cell; with
    /// `curvature`, also the Hessian diagonal entries for the `n + 1`
    /// stencil nodes.
    fn fluxes(&self, u: &[f64], flux: &mut [f64], curvature: Option<&mut [f64]>) {
        let n = self.lattice.dimension();
        let p = self.p;
        let h = self.lattice.h;
        let scale = self.volume() / h;
        exec::fill_blocks(self.policy, flux, n, |j, out| {
            let c = self.cells[j];
            let mut g = [0.0; MAX_DIM];
            let s = self.grad_into(c, u, &mut g);
            let a = self.weights[c] * scale * p * if p == 2.0 { 1.0 } else { s.powf(0.5 * p - 1.0) };
            for k in 0..n {
                out[k] = a * g[k];
            }
        });
        if let Some(curv) = curvature {
            let vol = self.volume() / (h * h);
            exec::fill_blocks(self.policy, curv, n + 1, |j, out| {
                let c = self.cells[j];
                let mut g = [0.0; MAX_DIM];
                let s = self.grad_into(c, u, &mut g);
                let a = self.weights[c] * vol * p;
                if p == 2.0 {
                    out[0] = a * n as f64;
                    out[1..].fill(a);
                } else if s > 0.0 {
                    let base = s.powf(0.5 * p - 1.0);
                    let sum: f64 = g[..n].iter().sum();
                    out[0] = a * base * (n as f64 + (p - 2.0) * sum * sum / s);
                    for k in 0..n {
                        out[k + 1] = a * base * (1.0 + (p - 2.0) * g[k] * g[k] / s);
                    }
                } else {
                    out.fill(0.0);
                }
            });
        }
    }

    /// Gathers per-cell quantities onto node `i`: `corner(block)` for the
    /// cell cornered at `i`, `side(block, k)` for the cell cornered at
    /// `i - e_k`.
    fn gather(&self, i: usize, width: usize, buf: &[f64], corner: impl Fn(&[f64]) -> f64, side: impl Fn(&[f64], usize) -> f64) -> f64 {
        let lat = self.lattice;
        let mut acc = 0.0;
        let own = self.slot[i];
        if own != u32::MAX {
            let o = own as usize * width;
            acc += corner(&buf[o..o + width]);
        }
        for (k, &st) in lat.strides.iter().enumerate() {
            if lat.coord(i, k) > 0 {
                let sl = self.slot[i - st];
                if sl != u32::MAX {
                    let o = sl as usize * width;
                    acc += side(&buf[o..o + width], k);
                }
            }
        }
        acc
    }

    /// Energy gradient at the nodes listed in `nodes`, written to `out`
    /// (same length as `nodes`). `scratch` must hold `n · cells` values.
    pub fn gradient(&self, u: &[f64], nodes: &[usize], out: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.lattice.dimension();
        scratch.resize(self.cells.len() * n, 0.0);
        self.fluxes(u, scratch, None);
        let flux = &scratch[..];
        exec::fill_indexed(self.policy, out, |j| {
            self.gather(nodes[j], n, flux, |b| -b.iter().sum::<f64>(), |b, k| b[k])
        });
    }

    /// Hessian diagonal at `nodes`.
    pub fn hessian_diagonal(&self, u: &[f64], nodes: &[usize], out: &mut [f64]) {
        let n = self.lattice.dimension();
        let mut flux = vec![0.0; self.cells.len() * n];
        let mut curv = vec![0.0; self.cells.len() * (n + 1)];
        self.fluxes(u, &mut flux, Some(&mut curv));
        exec::fill_indexed(self.policy, out, |j| self.gather(nodes[j], n + 1, &curv, |b| b[0], |b, k| b[k + 1]));
    }
}

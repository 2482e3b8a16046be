//! Logarithmic radial meshes and three-point radial operators.
//!
//! Nodes are geometrically spaced on `[r_min, 1]` and on `[1, r_max]`, so
//! `r = 1` is always a node. Stencils come from local quadratic
//! interpolation on the non-uniform mesh and are exact on quadratics.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance on radial monotonicity of solver output.
pub const MONOTONICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    unit_index: usize,
    origin: bool,
}

impl RadialGrid {
    /// Piecewise-geometric mesh on `[r_min, r_max]` with `count` nodes and
    /// an exact node at 1. Intervals are split between the two sides in
    /// proportion to their decades.
    pub fn build(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min < 1.0 && r_max > 1.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < r_min < 1 < r_max, got r_min = {r_min}, r_max = {r_max}"
            )));
        }
        if count < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {count}")));
        }
        let intervals = count - 1;
        let share = (1.0 / r_min).ln() / (r_max / r_min).ln();
        let inner = ((intervals as f64 * share).round() as usize).clamp(1, intervals - 1);
        let outer = intervals - inner;

        let mut nodes = Vec::with_capacity(count);
        let ln_min = r_min.ln();
        for k in 0..inner {
            nodes.push((ln_min * (1.0 - k as f64 / inner as f64)).exp());
        }
        nodes[0] = r_min;
        let unit_index = nodes.len();
        nodes.push(1.0);
        let ln_max = r_max.ln();
        for k in 1..outer {
            nodes.push((ln_max * k as f64 / outer as f64).exp());
        }
        nodes.push(r_max);
        Ok(Self { nodes, unit_index, origin: false })
    }

    /// Mesh on the closed ball `[0, r_max]`: uniform on `[0, r_core]` with the
    /// spacing of the first geometric cell, then `build(r_core, r_max, count)`.
    pub fn ball(r_core: f64, r_max: f64, count: usize) -> Result<Self> {
        let outer = Self::build(r_core, r_max, count)?;
        let h = outer.nodes[1] - outer.nodes[0];
        let cells = (r_core / h).ceil().max(1.0) as usize;
        let mut nodes: Vec<f64> = (0..cells).map(|k| r_core * k as f64 / cells as f64).collect();
        nodes.extend_from_slice(&outer.nodes);
        Ok(Self {
            unit_index: outer.unit_index + cells,
            nodes,
            origin: true,
        })
    }

    /// Rebuilds a grid from stored radii (e.g. a trajectory CSV).
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {}", nodes.len())));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        let origin = nodes[0] == 0.0;
        if nodes[0] < 0.0 {
            return Err(Error::InvalidGrid("negative radius".into()));
        }
        let unit_index = nodes
            .iter()
            .position(|&r| r == 1.0)
            .ok_or_else(|| Error::InvalidGrid("grid has no node at r = 1".into()))?;
        Ok(Self { nodes, unit_index, origin })
    }

    /// Inserts the midpoint of every cell (geometric midpoint for `r > 0`),
    /// giving `2N - 1` nodes that contain the old ones at even indices.
    pub fn refine(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            let mid = if w[0] > 0.0 { (w[0] * w[1]).sqrt() } else { 0.5 * w[1] };
            nodes.push(mid);
        }
        nodes.push(*self.nodes.last().unwrap());
        Self {
            nodes,
            unit_index: 2 * self.unit_index,
            origin: self.origin,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }
    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
    /// Index of the node at `r = 1`.
    pub fn unit_index(&self) -> usize {
        self.unit_index
    }
    /// True for ball meshes whose first node is the origin.
    pub fn has_origin(&self) -> bool {
        self.origin
    }

    /// Indices of nodes in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i] >= lo && self.nodes[i] <= hi).collect()
    }

    /// The innermost decade `[r_0, 10 r_0]` (first positive node) minus the
    /// boundary node and the `skip` nodes next to it.
    pub fn inner_decade(&self, skip: usize) -> Vec<usize> {
        let first = if self.origin { 1 } else { 0 };
        let r0 = self.nodes[first];
        self.window(r0, 10.0 * r0 * (1.0 + 1e-12))
            .into_iter()
            .filter(|&i| i > first + skip)
            .collect()
    }

    /// The outermost decade `[r_max/10, r_max]` minus the boundary node and
    /// the `skip` nodes next to it.
    pub fn outer_decade(&self, skip: usize) -> Vec<usize> {
        let last = self.len() - 1;
        let r1 = self.r_max();
        self.window(0.1 * r1 * (1.0 - 1e-12), r1)
            .into_iter()
            .filter(|&i| i + skip < last)
            .collect()
    }
}

/// Positive profile sampled on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("field value at node {i} is not positive and finite")));
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `f` at every node.
    pub fn sample(grid: Arc<RadialGrid>, time: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values, time)
    }

    /// Largest relative increase `(u_{i+1} - u_i)_+ / u_i` between neighbours.
    pub fn max_radial_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / w[0]).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn is_radially_nonincreasing(&self, rel_tol: f64) -> bool {
        self.max_radial_increase() <= rel_tol
    }
}

/// Three-point coefficients `(lower, diag, upper)` of `f'' + (n-1) f'/r`
/// for every node. Boundary rows are zero except the origin row of a ball
/// mesh, which uses the symmetric limit `Δf(0) = n f''(0)` with a mirrored
/// ghost node.
#[derive(Debug, Clone)]
pub struct LaplacianStencil {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LaplacianStencil {
    pub fn new(grid: &RadialGrid, dim: f64) -> Self {
        let r = grid.nodes();
        let len = r.len();
        let mut lower = vec![0.0; len];
        let mut diag = vec![0.0; len];
        let mut upper = vec![0.0; len];
        for i in 1..len - 1 {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            let s = hm + hp;
            let k = (dim - 1.0) / r[i];
            lower[i] = (2.0 - k * hp) / (hm * s);
            upper[i] = (2.0 + k * hm) / (hp * s);
            diag[i] = (-2.0 + k * (hp - hm)) / (hm * hp);
        }
        if grid.has_origin() {
            let h = r[1];
            diag[0] = -2.0 * dim / (h * h);
            upper[0] = 2.0 * dim / (h * h);
        }
        Self { lower, diag, upper }
    }

    /// Applies row `i` to `f`; `i` must be an interior node (or the origin row).
    #[inline]
    pub fn apply_row(&self, f: &[f64], i: usize) -> f64 {
        let mut acc = self.diag[i] * f[i] + self.upper[i] * f[i + 1];
        if i > 0 {
            acc += self.lower[i] * f[i - 1];
        }
        acc
    }

    /// Sum of absolute row contributions; the rounding scale of `apply_row`.
    #[inline]
    pub fn row_magnitude(&self, f: &[f64], i: usize) -> f64 {
        let mut acc = (self.diag[i] * f[i]).abs() + (self.upper[i] * f[i + 1]).abs();
        if i > 0 {
            acc += (self.lower[i] * f[i - 1]).abs();
        }
        acc
    }
}

/// `f'' + (n-1) f'/r` at the interior nodes `1..N-1` (length `N - 2`).
pub fn radial_laplacian_values(grid: &RadialGrid, dim: f64, f: &[f64]) -> Vec<f64> {
    let st = LaplacianStencil::new(grid, dim);
    (1..grid.len() - 1).map(|i| st.apply_row(f, i)).collect()
}

/// [`radial_laplacian_values`] of a field.
pub fn radial_laplacian(f: &RadialField, dim: f64) -> Vec<f64> {
    radial_laplacian_values(&f.grid, dim, &f.values)
}

/// Centered first derivative at interior nodes (length `N - 2`).
pub fn radial_gradient_values(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    (1..r.len() - 1)
        .map(|i| {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            (hm * hm * f[i + 1] - hp * hp * f[i - 1] + (hp * hp - hm * hm) * f[i]) / (hm * hp * (hm + hp))
        })
        .collect()
}

pub fn radial_gradient(f: &RadialField) -> Vec<f64> {
    radial_gradient_values(&f.grid, &f.values)
}

/// Second derivative `f''` at interior nodes (length `N - 2`).
pub fn radial_second_derivative_values(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    (1..r.len() - 1)
        .map(|i| {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            let s = hm + hp;
            2.0 * (f[i + 1] / (hp * s) - f[i] / (hm * hp) + f[i - 1] / (hm * s))
        })
        .collect()
}

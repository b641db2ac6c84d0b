//! Structured triangulations of the unit square.
//!
//! Nodes are numbered lexicographically by `(row, column)`, so node
//! `row * (n + 1) + col` sits at `(col / n, row / n)`. Every square cell is
//! split along its bottom-left to top-right diagonal, which makes the meshes
//! for `n` and `k * n` nested.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl Mesh {
    /// Uniform triangulation of `(0,1)^2` with `n` cells per side.
    pub fn structured(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("mesh subdivision count must be at least 1"));
        }
        let side = n + 1;
        let h = 1.0 / n as f64;
        let mut nodes = Vec::with_capacity(side * side);
        let mut boundary = Vec::with_capacity(side * side);
        for row in 0..side {
            for col in 0..side {
                nodes.push([col as f64 * h, row as f64 * h]);
                boundary.push(row == 0 || col == 0 || row == n || col == n);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for row in 0..n {
            for col in 0..n {
                let v00 = row * side + col;
                let v10 = v00 + 1;
                let v01 = v00 + side;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let mut interior_index = vec![None; nodes.len()];
        let mut interior_nodes = Vec::new();
        for (node, on_boundary) in boundary.iter().enumerate() {
            if !on_boundary {
                interior_index[node] = Some(interior_nodes.len());
                interior_nodes.push(node);
            }
        }
        Ok(Mesh {
            n,
            nodes,
            triangles,
            boundary,
            interior_index,
            interior_nodes,
        })
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Compacted interior index of a node, `None` on the boundary.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Number of displacement unknowns (two components per interior node).
    pub fn displacement_dofs(&self) -> usize {
        2 * self.interior_count()
    }

    pub fn pressure_dofs(&self) -> usize {
        self.interior_count()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Scatter an interior vector into a full nodal vector, zero on the boundary.
    pub fn expand_scalar(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.node_count()];
        for (k, &node) in self.interior_nodes.iter().enumerate() {
            full[node] = interior[k];
        }
        full
    }

    pub fn restrict_scalar(&self, full: &[f64]) -> Vec<f64> {
        self.interior_nodes.iter().map(|&node| full[node]).collect()
    }

    /// Split an interleaved interior displacement vector into two full nodal
    /// component vectors.
    pub fn expand_vector(&self, interior: &[f64]) -> [Vec<f64>; 2] {
        let mut ux = vec![0.0; self.node_count()];
        let mut uy = vec![0.0; self.node_count()];
        for (k, &node) in self.interior_nodes.iter().enumerate() {
            ux[node] = interior[2 * k];
            uy[node] = interior[2 * k + 1];
        }
        [ux, uy]
    }

    pub fn restrict_vector(&self, ux: &[f64], uy: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.displacement_dofs());
        for &node in &self.interior_nodes {
            out.push(ux[node]);
            out.push(uy[node]);
        }
        out
    }

    /// Nodal interpolant of a scalar function on interior nodes.
    pub fn interpolate_scalar(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.interior_nodes.iter().map(|&node| f(self.nodes[node])).collect()
    }

    /// Nodal interpolant of a vector field on interior nodes, interleaved.
    pub fn interpolate_vector(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.displacement_dofs());
        for &node in &self.interior_nodes {
            let v = f(self.nodes[node]);
            out.push(v[0]);
            out.push(v[1]);
        }
        out
    }

    fn refinement_ratio(&self, fine: &Mesh) -> Result<usize> {
        if fine.n % self.n != 0 {
            return Err(Error::invalid(format!(
                "meshes are not nested: fine n = {} is not a multiple of coarse n = {}",
                fine.n, self.n
            )));
        }
        Ok(fine.n / self.n)
    }
}

/// P1 interpolation of a full nodal vector on `coarse` onto the nodes of `fine`.
pub fn prolong(coarse: &Mesh, fine: &Mesh, coarse_values: &[f64]) -> Result<Vec<f64>> {
    let ratio = coarse.refinement_ratio(fine)?;
    if coarse_values.len() != coarse.node_count() {
        return Err(Error::invalid(format!(
            "expected {} coarse nodal values, got {}",
            coarse.node_count(),
            coarse_values.len()
        )));
    }
    let nc = coarse.n;
    let cside = nc + 1;
    let fside = fine.n + 1;
    let r = ratio as f64;
    let mut out = Vec::with_capacity(fine.node_count());
    for frow in 0..fside {
        let (row, eta) = cell_coordinate(frow, ratio, nc);
        for fcol in 0..fside {
            let (col, xi) = cell_coordinate(fcol, ratio, nc);
            let v00 = coarse_values[row * cside + col];
            let v10 = coarse_values[row * cside + col + 1];
            let v01 = coarse_values[(row + 1) * cside + col];
            let v11 = coarse_values[(row + 1) * cside + col + 1];
            let (xi, eta) = (xi as f64 / r, eta as f64 / r);
            let value = if xi >= eta {
                v00 + xi * (v10 - v00) + eta * (v11 - v10)
            } else {
                v00 + eta * (v01 - v00) + xi * (v11 - v01)
            };
            out.push(value);
        }
    }
    Ok(out)
}

// Coarse cell index and integer offset (in fine steps) of a fine grid line.
fn cell_coordinate(fine_index: usize, ratio: usize, coarse_n: usize) -> (usize, usize) {
    let cell = fine_index / ratio;
    if cell == coarse_n {
        (coarse_n - 1, ratio)
    } else {
        (cell, fine_index % ratio)
    }
}

/// Prolongation of interior scalar vectors between nested meshes.
pub fn prolong_interior_scalar(coarse: &Mesh, fine: &Mesh, values: &[f64]) -> Result<Vec<f64>> {
    let full = prolong(coarse, fine, &coarse.expand_scalar(values))?;
    Ok(fine.restrict_scalar(&full))
}

/// Prolongation of interleaved interior displacement vectors between nested meshes.
pub fn prolong_interior_vector(coarse: &Mesh, fine: &Mesh, values: &[f64]) -> Result<Vec<f64>> {
    let [ux, uy] = coarse.expand_vector(values);
    let fx = prolong(coarse, fine, &ux)?;
    let fy = prolong(coarse, fine, &uy)?;
    Ok(fine.restrict_vector(&fx, &fy))
}

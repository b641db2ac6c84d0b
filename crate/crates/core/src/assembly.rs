//! Assembly of the P1 operators for the elasticity form `a`, the pressure
//! mass form `c`, the coupling form `d` and the permeability form `b(u; ., .)`,
//! plus the load vectors.
//!
//! Displacement unknowns are interleaved per interior node
//! (`2k` for the x-component, `2k + 1` for y); pressure unknowns follow the
//! interior node numbering of the mesh. Boundary rows and columns are dropped,
//! which is exact for homogeneous Dirichlet data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::permeability::PermeabilityModel;
use crate::sparse::SparseOperator;

/// Physical coefficients of the Biot system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    /// Lame coefficient lambda.
    pub lambda: f64,
    /// Lame coefficient mu (shear modulus).
    pub mu: f64,
    /// Biot-Willis coupling coefficient.
    pub alpha: f64,
    /// Biot modulus M.
    pub biot_modulus: f64,
    /// Mobility scale kappa0 / nu; multiplies the permeability law.
    pub mobility_scale: f64,
    pub permeability: PermeabilityModel,
}

impl Coefficients {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::InvalidArgument(msg)) };
        check(self.lambda.is_finite() && self.lambda >= 0.0, format!("lambda must be >= 0, got {}", self.lambda))?;
        check(self.mu.is_finite() && self.mu > 0.0, format!("mu must be > 0, got {}", self.mu))?;
        check(self.alpha.is_finite() && self.alpha >= 0.0, format!("alpha must be >= 0, got {}", self.alpha))?;
        check(
            self.biot_modulus.is_finite() && self.biot_modulus > 0.0,
            format!("biot_modulus must be > 0, got {}", self.biot_modulus),
        )?;
        check(
            self.mobility_scale.is_finite() && self.mobility_scale > 0.0,
            format!("mobility_scale must be > 0, got {}", self.mobility_scale),
        )?;
        self.permeability.validate()
    }

    /// `kappa(s) / nu`
    pub fn mobility(&self, dilatation: f64) -> f64 {
        self.mobility_scale * self.permeability.eval(dilatation)
    }
}

/// Area and constant basis gradients of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

pub fn element_geometry(mesh: &Mesh, t: usize) -> ElementGeometry {
    let p = mesh.triangle_vertices(t);
    let twice_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grads[i] = [(p[j][1] - p[k][1]) / twice_area, (p[k][0] - p[j][0]) / twice_area];
    }
    ElementGeometry { area: 0.5 * twice_area, grads }
}

fn grad_dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Which pressure rows are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rows {
    Interior,
    Full,
}

fn pressure_dof(mesh: &Mesh, node: usize, rows: Rows) -> Option<usize> {
    match rows {
        Rows::Interior => mesh.interior_index(node),
        Rows::Full => Some(node),
    }
}

fn pressure_size(mesh: &Mesh, rows: Rows) -> usize {
    match rows {
        Rows::Interior => mesh.pressure_dofs(),
        Rows::Full => mesh.node_count(),
    }
}

fn assemble_scalar(
    mesh: &Mesh,
    rows: Rows,
    mut local: impl FnMut(usize, &ElementGeometry) -> [[f64; 3]; 3],
) -> SparseOperator {
    let size = pressure_size(mesh, rows);
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geom = element_geometry(mesh, t);
        let ke = local(t, &geom);
        for i in 0..3 {
            let Some(r) = pressure_dof(mesh, tri[i], rows) else { continue };
            for j in 0..3 {
                if let Some(c) = pressure_dof(mesh, tri[j], rows) {
                    triplets.push((r, c, ke[i][j]));
                }
            }
        }
    }
    SparseOperator::from_triplets(size, size, &triplets).expect("dof indices are in range")
}

fn local_stiffness(geom: &ElementGeometry, factor: f64) -> [[f64; 3]; 3] {
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = factor * geom.area * grad_dot(geom.grads[i], geom.grads[j]);
        }
    }
    ke
}

fn local_mass(geom: &ElementGeometry, factor: f64) -> [[f64; 3]; 3] {
    let mut ke = [[0.0; 3]; 3];
    for (i, row) in ke.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = factor * geom.area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
        }
    }
    ke
}

/// Elasticity operator `A` for `a(u, v) = (sigma(u), eps(v))`.
pub fn assemble_elasticity(mesh: &Mesh, coeffs: &Coefficients) -> SparseOperator {
    let (lambda, mu) = (coeffs.lambda, coeffs.mu);
    let ndof = mesh.displacement_dofs();
    let mut triplets = Vec::with_capacity(36 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geom = element_geometry(mesh, t);
        for i in 0..3 {
            let Some(ri) = mesh.interior_index(tri[i]) else { continue };
            for j in 0..3 {
                let Some(cj) = mesh.interior_index(tri[j]) else { continue };
                let (gi, gj) = (geom.grads[i], geom.grads[j]);
                let gg = grad_dot(gi, gj);
                for a in 0..2 {
                    for b in 0..2 {
                        let delta = if a == b { gg } else { 0.0 };
                        let value = geom.area * (mu * (delta + gj[a] * gi[b]) + lambda * gi[a] * gj[b]);
                        triplets.push((2 * ri + a, 2 * cj + b, value));
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(ndof, ndof, &triplets).expect("dof indices are in range")
}

/// Consistent pressure mass matrix `C`, scaled by `1/M`.
pub fn assemble_pressure_mass(mesh: &Mesh, coeffs: &Coefficients) -> SparseOperator {
    let scale = 1.0 / coeffs.biot_modulus;
    assemble_scalar(mesh, Rows::Interior, |_, g| local_mass(g, scale))
}

/// `C` on all nodes, boundary included.
pub fn assemble_pressure_mass_full(mesh: &Mesh, coeffs: &Coefficients) -> SparseOperator {
    let scale = 1.0 / coeffs.biot_modulus;
    assemble_scalar(mesh, Rows::Full, |_, g| local_mass(g, scale))
}

/// Unscaled P1 mass matrix on interior nodes.
pub fn assemble_mass(mesh: &Mesh) -> SparseOperator {
    assemble_scalar(mesh, Rows::Interior, |_, g| local_mass(g, 1.0))
}

/// Unit Laplace stiffness `(grad p, grad q)` on interior nodes.
pub fn assemble_laplace(mesh: &Mesh) -> SparseOperator {
    assemble_scalar(mesh, Rows::Interior, |_, g| local_stiffness(g, 1.0))
}

fn assemble_coupling_rows(mesh: &Mesh, coeffs: &Coefficients, rows: Rows) -> SparseOperator {
    let nrows = pressure_size(mesh, rows);
    let mut triplets = Vec::with_capacity(18 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geom = element_geometry(mesh, t);
        // int phi_i over the element
        let weight = coeffs.alpha * geom.area / 3.0;
        for &node_i in tri {
            let Some(r) = pressure_dof(mesh, node_i, rows) else { continue };
            for (j, &node_j) in tri.iter().enumerate() {
                let Some(cj) = mesh.interior_index(node_j) else { continue };
                for b in 0..2 {
                    triplets.push((r, 2 * cj + b, weight * geom.grads[j][b]));
                }
            }
        }
    }
    SparseOperator::from_triplets(nrows, mesh.displacement_dofs(), &triplets).expect("dof indices are in range")
}

/// Coupling operator `D` with `q^T D u = d(u, q) = (alpha div u, q)`.
pub fn assemble_coupling(mesh: &Mesh, coeffs: &Coefficients) -> SparseOperator {
    assemble_coupling_rows(mesh, coeffs, Rows::Interior)
}

/// `D` with a row for every node, boundary included.
pub fn assemble_coupling_full(mesh: &Mesh, coeffs: &Coefficients) -> SparseOperator {
    assemble_coupling_rows(mesh, coeffs, Rows::Full)
}

/// Elementwise constant divergence of a P1 displacement field.
pub fn element_divergence(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| element_divergence_at(mesh, t, tri, u))
        .collect()
}

fn element_divergence_at(mesh: &Mesh, t: usize, tri: &[usize; 3], u: &[f64]) -> f64 {
    let geom = element_geometry(mesh, t);
    let mut div = 0.0;
    for (j, &node) in tri.iter().enumerate() {
        if let Some(k) = mesh.interior_index(node) {
            div += geom.grads[j][0] * u[2 * k] + geom.grads[j][1] * u[2 * k + 1];
        }
    }
    div
}

/// Permeability stiffness `B(u)` for `b(u; p, q) = (kappa(div u)/nu grad p, grad q)`,
/// with `kappa` evaluated once per element at the exact elementwise divergence.
pub fn assemble_permeability_stiffness(mesh: &Mesh, coeffs: &Coefficients, u: &[f64]) -> Result<SparseOperator> {
    if u.len() != mesh.displacement_dofs() {
        return Err(Error::invalid(format!(
            "displacement vector has length {}, expected {}",
            u.len(),
            mesh.displacement_dofs()
        )));
    }
    Ok(assemble_scalar(mesh, Rows::Interior, |t, g| {
        let div = element_divergence_at(mesh, t, &mesh.triangles()[t], u);
        local_stiffness(g, coeffs.mobility(div))
    }))
}

/// Reusable sparsity pattern of the interior P1 scalar stiffness; refills
/// values of `B(u)` without re-sorting.
#[derive(Debug, Clone)]
pub struct StiffnessPattern {
    op: SparseOperator,
    slots: Vec<[Option<usize>; 9]>,
    geometry: Vec<ElementGeometry>,
}

impl StiffnessPattern {
    pub fn new(mesh: &Mesh) -> Self {
        let op = assemble_laplace(mesh);
        let mut slots = Vec::with_capacity(mesh.triangles().len());
        let mut geometry = Vec::with_capacity(mesh.triangles().len());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let mut s = [None; 9];
            for i in 0..3 {
                for j in 0..3 {
                    if let (Some(r), Some(c)) = (mesh.interior_index(tri[i]), mesh.interior_index(tri[j])) {
                        s[3 * i + j] = op.position(r, c);
                    }
                }
            }
            slots.push(s);
            geometry.push(element_geometry(mesh, t));
        }
        StiffnessPattern { op, slots, geometry }
    }

    /// `sum_T weights[T] * K_T` over the shared pattern.
    pub fn weighted(&self, weights: &[f64]) -> SparseOperator {
        let mut out = self.op.clone();
        let values = out.values_mut();
        values.iter_mut().for_each(|v| *v = 0.0);
        for ((slots, geom), &w) in self.slots.iter().zip(&self.geometry).zip(weights) {
            let ke = local_stiffness(geom, w);
            for i in 0..3 {
                for j in 0..3 {
                    if let Some(k) = slots[3 * i + j] {
                        values[k] += ke[i][j];
                    }
                }
            }
        }
        out
    }

    pub fn permeability_stiffness(&self, mesh: &Mesh, coeffs: &Coefficients, u: &[f64]) -> SparseOperator {
        let weights: Vec<f64> = element_divergence(mesh, u).into_iter().map(|s| coeffs.mobility(s)).collect();
        self.weighted(&weights)
    }
}

// Edge midpoints in barycentric coordinates; the rule weights each by area/3
// and is exact for quadratics.
const MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

fn midpoint_rule(mesh: &Mesh, t: usize, mut visit: impl FnMut(Point, &[f64; 3], f64)) {
    let p = mesh.triangle_vertices(t);
    let weight = mesh.signed_area(t) / 3.0;
    for bary in &MIDPOINTS {
        let x = [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ];
        visit(x, bary, weight);
    }
}

/// Displacement load `(f(., t), v)` on interior dofs.
pub fn assemble_load_v(mesh: &Mesh, f: &dyn Fn(Point, f64) -> [f64; 2], t: f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.displacement_dofs()];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        midpoint_rule(mesh, e, |x, bary, w| {
            let fx = f(x, t);
            for (i, &node) in tri.iter().enumerate() {
                if let Some(k) = mesh.interior_index(node) {
                    load[2 * k] += w * fx[0] * bary[i];
                    load[2 * k + 1] += w * fx[1] * bary[i];
                }
            }
        });
    }
    load
}

fn assemble_load_scalar(mesh: &Mesh, g: &dyn Fn(Point, f64) -> f64, t: f64, rows: Rows) -> Vec<f64> {
    let mut load = vec![0.0; pressure_size(mesh, rows)];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        midpoint_rule(mesh, e, |x, bary, w| {
            let gx = g(x, t);
            for (i, &node) in tri.iter().enumerate() {
                if let Some(k) = pressure_dof(mesh, node, rows) {
                    load[k] += w * gx * bary[i];
                }
            }
        });
    }
    load
}

/// Pressure load `(g(., t), q)` on interior dofs.
pub fn assemble_load_q(mesh: &Mesh, g: &dyn Fn(Point, f64) -> f64, t: f64) -> Vec<f64> {
    assemble_load_scalar(mesh, g, t, Rows::Interior)
}

/// Pressure load on all nodes, boundary included.
pub fn assemble_load_q_full(mesh: &Mesh, g: &dyn Fn(Point, f64) -> f64, t: f64) -> Vec<f64> {
    assemble_load_scalar(mesh, g, t, Rows::Full)
}

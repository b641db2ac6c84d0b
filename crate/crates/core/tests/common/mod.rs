//! Dense reference assembly and finite-difference strong-form residuals,
//! written independently of the library code and shared by test targets.
#![allow(dead_code)]

use nalgebra::DMatrix;
use poro_core::forcing::Experiment;
use poro_core::{Coefficients, SparseOperator};

pub type Tri = [[f64; 2]; 3];

/// Nodes of cell (i, j) on an n x n grid, split by the lower-left to upper-right diagonal.
pub fn cells(n: usize) -> Vec<([usize; 3], Tri)> {
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let pt = |i: usize, j: usize| [i as f64 * h, j as f64 * h];
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            out.push((
                [id(i, j), id(i + 1, j), id(i + 1, j + 1)],
                [pt(i, j), pt(i + 1, j), pt(i + 1, j + 1)],
            ));
            out.push((
                [id(i, j), id(i + 1, j + 1), id(i, j + 1)],
                [pt(i, j), pt(i + 1, j + 1), pt(i, j + 1)],
            ));
        }
    }
    out
}

/// Barycentric gradients from the inverse of the 3x3 Vandermonde matrix.
pub fn gradients(t: &Tri) -> (f64, [[f64; 2]; 3]) {
    let v = DMatrix::from_row_slice(3, 3, &[
        1.0, t[0][0], t[0][1],
        1.0, t[1][0], t[1][1],
        1.0, t[2][0], t[2][1],
    ]);
    let area = v.determinant().abs() / 2.0;
    let inv = v.try_inverse().unwrap();
    // column k of inv holds the coefficients (c, a, b) of basis function k
    let g = [0, 1, 2].map(|k| [inv[(1, k)], inv[(2, k)]]);
    (area, g)
}

pub fn basis_at(t: &Tri, x: [f64; 2]) -> [f64; 3] {
    let det = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
    let l1 = ((x[0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (x[1] - t[0][1])) / det;
    let l2 = ((t[1][0] - t[0][0]) * (x[1] - t[0][1]) - (x[0] - t[0][0]) * (t[1][1] - t[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Edge-midpoint quadrature (exact for quadratics).
pub fn midpoints(t: &Tri) -> [[f64; 2]; 3] {
    let m = |a: usize, b: usize| [(t[a][0] + t[b][0]) / 2.0, (t[a][1] + t[b][1]) / 2.0];
    [m(0, 1), m(1, 2), m(2, 0)]
}

pub fn is_boundary(n: usize, node: usize) -> bool {
    let (i, j) = (node % (n + 1), node / (n + 1));
    i == 0 || j == 0 || i == n || j == n
}

pub fn interior_map(n: usize) -> Vec<Option<usize>> {
    let mut next = 0;
    (0..(n + 1) * (n + 1))
        .map(|k| {
            if is_boundary(n, k) {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect()
}

pub fn dense(op: &SparseOperator) -> DMatrix<f64> {
    DMatrix::from_row_slice(op.nrows(), op.ncols(), &op.to_dense())
}

pub fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64, what: &str) {
    assert_eq!(a.shape(), b.shape(), "{what}: shape");
    let diff = (a - b).abs().max();
    assert!(diff <= tol, "{what}: max entry difference {diff:e}");
}

/// Voigt form: strain-displacement matrix and the isotropic material matrix.
pub fn elasticity_oracle(n: usize, c: &Coefficients) -> DMatrix<f64> {
    let map = interior_map(n);
    let ni = map.iter().flatten().count();
    let mut a = DMatrix::zeros(2 * ni, 2 * ni);
    let e = DMatrix::from_row_slice(3, 3, &[
        c.lambda + 2.0 * c.mu, c.lambda, 0.0,
        c.lambda, c.lambda + 2.0 * c.mu, 0.0,
        0.0, 0.0, c.mu,
    ]);
    for (nodes, t) in cells(n) {
        let (area, g) = gradients(&t);
        let mut b = DMatrix::zeros(3, 6);
        for k in 0..3 {
            b[(0, 2 * k)] = g[k][0];
            b[(1, 2 * k + 1)] = g[k][1];
            b[(2, 2 * k)] = g[k][1];
            b[(2, 2 * k + 1)] = g[k][0];
        }
        let ke = b.transpose() * &e * &b * area;
        for r in 0..6 {
            let Some(ir) = map[nodes[r / 2]] else { continue };
            for s in 0..6 {
                let Some(is) = map[nodes[s / 2]] else { continue };
                a[(2 * ir + r % 2, 2 * is + s % 2)] += ke[(r, s)];
            }
        }
    }
    a
}

/// Scalar form `int w(x) (phi_i phi_j)` or `int w grad phi_i . grad phi_j`, by quadrature.
pub fn scalar_oracle(n: usize, full: bool, local: impl Fn(&Tri, usize, usize) -> f64) -> DMatrix<f64> {
    let map = interior_map(n);
    let dof = |k: usize| if full { Some(k) } else { map[k] };
    let size = if full { (n + 1) * (n + 1) } else { map.iter().flatten().count() };
    let mut m = DMatrix::zeros(size, size);
    for (nodes, t) in cells(n) {
        for a in 0..3 {
            let Some(r) = dof(nodes[a]) else { continue };
            for b in 0..3 {
                let Some(s) = dof(nodes[b]) else { continue };
                m[(r, s)] += local(&t, a, b);
            }
        }
    }
    m
}

pub fn mass_local(t: &Tri, a: usize, b: usize) -> f64 {
    let (area, _) = gradients(t);
    midpoints(t).iter().map(|x| {
        let phi = basis_at(t, *x);
        phi[a] * phi[b] * area / 3.0
    }).sum()
}

pub fn coupling_oracle(n: usize, c: &Coefficients, full: bool) -> DMatrix<f64> {
    let map = interior_map(n);
    let ni = map.iter().flatten().count();
    let rows = if full { (n + 1) * (n + 1) } else { ni };
    let mut d = DMatrix::zeros(rows, 2 * ni);
    for (nodes, t) in cells(n) {
        let (area, g) = gradients(&t);
        for a in 0..3 {
            let r = if full { Some(nodes[a]) } else { map[nodes[a]] };
            let Some(r) = r else { continue };
            // int phi_a = area / 3 by the midpoint rule
            let int_phi: f64 = midpoints(&t).iter().map(|x| basis_at(&t, *x)[a] * area / 3.0).sum();
            for b in 0..3 {
                let Some(s) = map[nodes[b]] else { continue };
                for comp in 0..2 {
                    d[(r, 2 * s + comp)] += c.alpha * g[b][comp] * int_phi;
                }
            }
        }
    }
    d
}

pub fn divergence(n: usize, t_nodes: &[usize; 3], t: &Tri, u: &[f64]) -> f64 {
    let map = interior_map(n);
    let (_, g) = gradients(t);
    (0..3)
        .filter_map(|k| map[t_nodes[k]].map(|i| g[k][0] * u[2 * i] + g[k][1] * u[2 * i + 1]))
        .sum()
}

pub fn permeability_oracle(n: usize, c: &Coefficients, u: &[f64]) -> DMatrix<f64> {
    let map = interior_map(n);
    let ni = map.iter().flatten().count();
    let mut b = DMatrix::zeros(ni, ni);
    for (nodes, t) in cells(n) {
        let (area, g) = gradients(&t);
        let k = c.mobility_scale * c.permeability.eval(divergence(n, &nodes, &t, u));
        for a in 0..3 {
            let Some(r) = map[nodes[a]] else { continue };
            for bb in 0..3 {
                let Some(s) = map[nodes[bb]] else { continue };
                b[(r, s)] += k * area * (g[a][0] * g[bb][0] + g[a][1] * g[bb][1]);
            }
        }
    }
    b
}

/// Load vector `(w, phi_i)` on interior nodes by the edge-midpoint rule.
pub fn scalar_load_oracle(n: usize, w: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let map = interior_map(n);
    let mut load = vec![0.0; map.iter().flatten().count()];
    for (nodes, t) in cells(n) {
        let (area, _) = gradients(&t);
        for a in 0..3 {
            if let Some(r) = map[nodes[a]] {
                load[r] += midpoints(&t).iter().map(|x| w(*x) * basis_at(&t, *x)[a] * area / 3.0).sum::<f64>();
            }
        }
    }
    load
}

/// Displacement load with interleaved components.
pub fn vector_load_oracle(n: usize, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let first = scalar_load_oracle(n, |x| f(x)[0]);
    let second = scalar_load_oracle(n, |x| f(x)[1]);
    first.iter().zip(&second).flat_map(|(a, b)| [*a, *b]).collect()
}

pub const H: f64 = 1e-4;

pub fn dx(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], axis: usize) -> f64 {
    let mut a = x;
    let mut b = x;
    a[axis] += H;
    b[axis] -= H;
    (f(a) - f(b)) / (2.0 * H)
}

/// Five-point second derivative along one axis.
pub fn dxx(f: impl Fn([f64; 2]) -> f64, x: [f64; 2], axis: usize) -> f64 {
    let mut a = x;
    let mut b = x;
    a[axis] += H;
    b[axis] -= H;
    (f(a) - 2.0 * f(x) + f(b)) / (H * H)
}

pub fn mixed(f: impl Fn([f64; 2]) -> f64, x: [f64; 2]) -> f64 {
    let at = |sx: f64, sy: f64| f([x[0] + sx * H, x[1] + sy * H]);
    (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * H * H)
}

pub fn residuals(e: &Experiment, x: [f64; 2], t: f64) -> ([f64; 2], f64) {
    let c: Coefficients = e.coefficients;
    let exact = e.data.exact.as_ref().unwrap();
    let u = |y: [f64; 2], c_: usize| (exact.u)(y, t)[c_];
    let p = |y: [f64; 2]| (exact.p)(y, t);

    // -div sigma(u) + alpha grad p, with sigma = 2 mu eps(u) + lambda div(u) I
    let mut strong_f = [0.0; 2];
    for i in 0..2 {
        let j = 1 - i;
        let lap = dxx(|y| u(y, i), x, 0) + dxx(|y| u(y, i), x, 1);
        let grad_div = dxx(|y| u(y, i), x, i) + mixed(|y| u(y, j), x);
        strong_f[i] = -c.mu * lap - (c.lambda + c.mu) * grad_div + c.alpha * dx(p, x, i);
    }
    let f = (e.data.f)(x, t);

    // d/dt (alpha div u + p / M) - div(kappa(div u)/nu grad p)
    let div_at = |y: [f64; 2], s: f64| {
        dx(|z| (exact.u)(z, s)[0], y, 0) + dx(|z| (exact.u)(z, s)[1], y, 1)
    };
    let storage = |s: f64| c.alpha * div_at(x, s) + (exact.p)(x, s) / c.biot_modulus;
    let dt = (storage(t + H) - storage(t - H)) / (2.0 * H);
    let flux = |y: [f64; 2], axis: usize| c.mobility(div_at(y, t)) * dx(p, y, axis);
    let div_flux = dx(|y| flux(y, 0), x, 0) + dx(|y| flux(y, 1), x, 1);
    let strong_g = dt - div_flux;
    let g = (e.data.g)(x, t);

    ([strong_f[0] - f[0], strong_f[1] - f[1]], strong_g - g)
}


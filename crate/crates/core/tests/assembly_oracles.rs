//! Assembled operators against a dense, element-by-element reference
//! assembly written independently of the library code.

use nalgebra::{DMatrix, SymmetricEigen};
use poro_core::assembly::{
    assemble_coupling, assemble_coupling_full, assemble_elasticity, assemble_laplace, assemble_load_q, assemble_load_v,
    assemble_load_q_full, assemble_pressure_mass, assemble_pressure_mass_full, assemble_permeability_stiffness,
};
use poro_core::forcing::experiment_42_coefficients;
use poro_core::{Coefficients, Mesh, PermeabilityModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::*;

fn coefficients() -> Coefficients {
    Coefficients { lambda: 1.7, mu: 0.6, alpha: 0.8, biot_modulus: 2.5, mobility_scale: 1.3, ..experiment_42_coefficients() }
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

#[test]
fn operators_match_dense_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = coefficients();
    for n in [1usize, 2, 4] {
        let mesh = Mesh::structured(n).unwrap();
        assert_close(&dense(&assemble_elasticity(&mesh, &c)), &elasticity_oracle(n, &c), 1e-12, "A");
        let mass = scalar_oracle(n, false, |t, a, b| mass_local(t, a, b) / c.biot_modulus);
        assert_close(&dense(&assemble_pressure_mass(&mesh, &c)), &mass, 1e-12, "C");
        let mass_full = scalar_oracle(n, true, |t, a, b| mass_local(t, a, b) / c.biot_modulus);
        assert_close(&dense(&assemble_pressure_mass_full(&mesh, &c)), &mass_full, 1e-12, "C full");
        assert_close(&dense(&assemble_coupling(&mesh, &c)), &coupling_oracle(n, &c, false), 1e-12, "D");
        assert_close(&dense(&assemble_coupling_full(&mesh, &c)), &coupling_oracle(n, &c, true), 1e-12, "D full");
        for _ in 0..3 {
            let u = random_vector(&mut rng, mesh.displacement_dofs(), 0.6);
            let b = assemble_permeability_stiffness(&mesh, &c, &u).unwrap();
            assert_close(&dense(&b), &permeability_oracle(n, &c, &u), 1e-12, "B(u)");
        }
    }
}

#[test]
fn laplace_interior_row_on_two_by_two_grid() {
    let mesh = Mesh::structured(2).unwrap();
    let l = assemble_laplace(&mesh);
    assert_eq!(l.nrows(), 1);
    assert!((l.get(0, 0) - 4.0).abs() < 1e-14);

    // the axis and diagonal neighbour couplings show up on the full n = 4 grid
    let mesh = Mesh::structured(4).unwrap();
    let l = assemble_laplace(&mesh);
    let centre = mesh.interior_index(2 * 5 + 2).unwrap();
    let idx = |i: usize, j: usize| mesh.interior_index(j * 5 + i).unwrap();
    assert!((l.get(centre, centre) - 4.0).abs() < 1e-14);
    for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
        assert!((l.get(centre, idx(i, j)) + 1.0).abs() < 1e-14);
    }
    for (i, j) in [(1, 1), (3, 3), (1, 3), (3, 1)] {
        assert!(l.get(centre, idx(i, j)).abs() < 1e-14);
    }
}

#[test]
fn operators_are_symmetric_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let c = coefficients();
    for n in [2usize, 3, 4] {
        let mesh = Mesh::structured(n).unwrap();
        let u = random_vector(&mut rng, mesh.displacement_dofs(), 0.6);
        let ops = [
            ("A", assemble_elasticity(&mesh, &c)),
            ("C", assemble_pressure_mass(&mesh, &c)),
            ("B", assemble_permeability_stiffness(&mesh, &c, &u).unwrap()),
        ];
        for (name, op) in ops {
            let m = dense(&op);
            assert!((&m - m.transpose()).abs().max() <= 1e-12, "{name} symmetry on n = {n}");
            assert!(min_eigenvalue(&m) > 0.0, "{name} definiteness on n = {n}");
        }
    }
}

#[test]
fn mass_and_divergence_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in [1usize, 2, 4] {
        let mesh = Mesh::structured(n).unwrap();
        let c = coefficients();
        let total: f64 = assemble_pressure_mass_full(&mesh, &c).values().iter().sum();
        assert!((total - 1.0 / c.biot_modulus).abs() < 1e-12);
        let d = assemble_coupling_full(&mesh, &c);
        for _ in 0..20 {
            let u = random_vector(&mut rng, mesh.displacement_dofs(), 1.0);
            let s: f64 = d.mul_vec(&u).iter().sum();
            assert!(s.abs() < 1e-12, "1^T D u = {s:e}");
        }
        let g: f64 = assemble_load_q_full(&mesh, &|_, _| 1.0, 0.0).iter().sum();
        assert!((g - 1.0).abs() < 1e-12);
    }
}

#[test]
fn load_vector_matches_quadrature_oracle() {
    for n in [2usize, 4] {
        let mesh = Mesh::structured(n).unwrap();
        let g = |x: [f64; 2]| x[0] * x[0] - 3.0 * x[1] + (5.0 * x[0]).sin();
        let oracle = scalar_load_oracle(n, g);
        let load = assemble_load_q(&mesh, &|x, _| g(x), 0.0);
        assert!(load.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-12));
        let f = |x: [f64; 2]| [x[1].exp(), x[0] * x[1]];
        let oracle = vector_load_oracle(n, f);
        let load = assemble_load_v(&mesh, &|x, _| f(x), 0.0);
        assert!(load.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn linear_in_coefficients() {
    let mesh = Mesh::structured(4).unwrap();
    let c = coefficients();
    let doubled = Coefficients { lambda: 2.0 * c.lambda, mu: 2.0 * c.mu, alpha: 2.0 * c.alpha, ..c };
    let a1 = dense(&assemble_elasticity(&mesh, &c));
    let a2 = dense(&assemble_elasticity(&mesh, &doubled));
    assert_close(&a2, &(a1 * 2.0), 1e-12, "A scaling");
    let d1 = dense(&assemble_coupling(&mesh, &c));
    let d2 = dense(&assemble_coupling(&mesh, &doubled));
    assert_close(&d2, &(d1 * 2.0), 1e-12, "D scaling");
    let m1 = Coefficients { biot_modulus: 1.0, ..c };
    let m2 = Coefficients { biot_modulus: 2.0, ..c };
    let c1 = assemble_pressure_mass(&mesh, &m1);
    let c2 = assemble_pressure_mass(&mesh, &m2);
    for (a, b) in c1.values().iter().zip(c2.values()) {
        assert_eq!(*a, 2.0 * b);
    }
}

#[test]
fn permeability_form_bounds_and_dependence() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mesh = Mesh::structured(4).unwrap();
    let c = coefficients();
    let laplace = assemble_laplace(&mesh);
    let (lo, hi) = c.permeability.bounds();
    for _ in 0..100 {
        let u = random_vector(&mut rng, mesh.displacement_dofs(), 2.0);
        let p = random_vector(&mut rng, mesh.pressure_dofs(), 1.0);
        let b = assemble_permeability_stiffness(&mesh, &c, &u).unwrap();
        let ratio = b.quadratic_form(&p) / laplace.quadratic_form(&p);
        assert!(ratio >= c.mobility_scale * lo * (1.0 - 1e-12) && ratio <= c.mobility_scale * hi * (1.0 + 1e-12));
    }

    let zero = vec![0.0; mesh.displacement_dofs()];
    let b0 = dense(&assemble_permeability_stiffness(&mesh, &c, &zero).unwrap());
    assert_close(&b0, &(dense(&laplace) * c.mobility(0.0)), 1e-12, "B(0)");

    let constant = Coefficients { permeability: PermeabilityModel::Constant { kappa: 2.0 }, ..c };
    let u = random_vector(&mut rng, mesh.displacement_dofs(), 1.0);
    let bc = dense(&assemble_permeability_stiffness(&mesh, &constant, &u).unwrap());
    assert_close(&bc, &(dense(&laplace) * 2.0 * c.mobility_scale), 1e-12, "constant B");
}

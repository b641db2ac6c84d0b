use poro_core::mesh::{prolong, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Evaluates the P1 function with nodal values `v` at `x` by searching the
/// containing triangle and solving for barycentric coordinates.
fn barycentric_eval(mesh: &Mesh, v: &[f64], x: [f64; 2]) -> f64 {
    for tri in mesh.triangles() {
        let [a, b, c] = tri.map(|k| mesh.nodes()[k]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        let l0 = 1.0 - l1 - l2;
        if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
            return l0 * v[tri[0]] + l1 * v[tri[1]] + l2 * v[tri[2]];
        }
    }
    panic!("point {x:?} outside the mesh")
}

#[test]
fn counts_and_areas() {
    for (n, nodes, tris, boundary) in [(1, 4, 2, 4), (2, 9, 8, 8), (4, 25, 32, 16), (7, 64, 98, 28)] {
        let mesh = Mesh::structured(n).unwrap();
        assert_eq!(mesh.node_count(), nodes);
        assert_eq!(mesh.triangles().len(), tris);
        assert_eq!(mesh.boundary_mask().iter().filter(|b| **b).count(), boundary);
        assert_eq!(mesh.interior_count(), nodes - boundary);
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for t in 0..tris {
            let a = mesh.signed_area(t);
            assert!((a - h * h / 2.0).abs() < 1e-15);
            total += a;
        }
        assert!((total - 1.0).abs() < 1e-13);
    }
    assert!(Mesh::structured(0).is_err());
}

#[test]
fn prolongation_reproduces_linears_and_zero() {
    let coarse = Mesh::structured(1).unwrap();
    let fine = Mesh::structured(2).unwrap();
    let zero = prolong(&coarse, &fine, &[0.0; 4]).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
    let x: Vec<f64> = coarse.nodes().iter().map(|p| p[0]).collect();
    let out = prolong(&coarse, &fine, &x).unwrap();
    for (v, p) in out.iter().zip(fine.nodes()) {
        assert!((v - p[0]).abs() < 1e-15);
    }
}

#[test]
fn prolongation_matches_barycentric_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (nc, nf) in [(2, 4), (2, 8), (3, 9), (4, 16)] {
        let coarse = Mesh::structured(nc).unwrap();
        let fine = Mesh::structured(nf).unwrap();
        let v = random(&mut rng, coarse.node_count());
        let out = prolong(&coarse, &fine, &v).unwrap();
        for (value, x) in out.iter().zip(fine.nodes()) {
            assert!((value - barycentric_eval(&coarse, &v, *x)).abs() < 1e-14);
        }
    }
}

#[test]
fn prolongation_is_linear_and_restricts_to_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let coarse = Mesh::structured(4).unwrap();
    let fine = Mesh::structured(12).unwrap();
    for _ in 0..20 {
        let v = random(&mut rng, coarse.node_count());
        let w = random(&mut rng, coarse.node_count());
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let combo: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let lhs = prolong(&coarse, &fine, &combo).unwrap();
        let pv = prolong(&coarse, &fine, &v).unwrap();
        let pw = prolong(&coarse, &fine, &w).unwrap();
        for i in 0..lhs.len() {
            assert!((lhs[i] - (a * pv[i] + b * pw[i])).abs() < 1e-13);
        }
        for (k, x) in coarse.nodes().iter().enumerate() {
            let (col, row) = ((x[0] * 12.0).round() as usize, (x[1] * 12.0).round() as usize);
            assert_eq!(pv[row * 13 + col], v[k]);
        }
    }
}

#[test]
fn non_nested_pairs_are_rejected() {
    let coarse = Mesh::structured(3).unwrap();
    let fine = Mesh::structured(4).unwrap();
    assert!(prolong(&coarse, &fine, &vec![0.0; coarse.node_count()]).is_err());
    assert!(prolong(&fine, &coarse, &vec![0.0; fine.node_count()]).is_err());
    assert!(prolong(&coarse, &Mesh::structured(6).unwrap(), &[0.0; 3]).is_err());
}

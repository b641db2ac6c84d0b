//! Right-hand sides, initial data and coefficient sets of the three benchmark
//! problems: a network-permeability consolidation problem on Boise sandstone
//! data (`ex41`), a Kozeny-Carman problem with a manufactured solution
//! (`ex42`) and a quadratic-permeability problem with a tunable coupling
//! coefficient (`ex43`).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::Coefficients;
use crate::mesh::Point;
use crate::permeability::PermeabilityModel;

pub type ScalarFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type InitialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: VectorFn,
    pub p: ScalarFn,
}

/// Load `f`, fluid source `g`, initial pressure and (optionally) the exact pair.
#[derive(Clone)]
pub struct ProblemData {
    pub f: VectorFn,
    pub g: ScalarFn,
    pub p0: InitialFn,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData").field("exact", &self.exact.is_some()).finish_non_exhaustive()
    }
}

impl ProblemData {
    pub fn zero() -> Self {
        ProblemData {
            f: Arc::new(|_, _| [0.0, 0.0]),
            g: Arc::new(|_, _| 0.0),
            p0: Arc::new(|_| 0.0),
            exact: Some(ExactSolution { u: Arc::new(|_, _| [0.0, 0.0]), p: Arc::new(|_, _| 0.0) }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: &'static str,
    pub coefficients: Coefficients,
    pub final_time: f64,
    pub data: ProblemData,
}

/// Network-inspired permeability on Boise sandstone coefficients.
pub fn experiment_41() -> Experiment {
    let coefficients = Coefficients {
        lambda: 7.826e8,
        mu: 1.826e9,
        alpha: 0.85,
        biot_modulus: 7e9,
        mobility_scale: 8e-10,
        permeability: PermeabilityModel::NetworkInspired { kappa0: 1.0, rho0: 0.4, rho_hat: 0.2, delta: 0.01 },
    };
    let data = ProblemData {
        f: Arc::new(|_, _| [0.0, 0.0]),
        g: Arc::new(|x, t| 30.0 * (PI * x[0]).sin() * (-t).exp()),
        p0: Arc::new(|x| 50.0 * (1.0 - x[0]) * x[0] * (1.0 - x[1]) * x[1]),
        exact: None,
    };
    Experiment { name: "ex41", coefficients, final_time: 1.0, data }
}

pub fn experiment_42_coefficients() -> Coefficients {
    Coefficients {
        lambda: 1.0,
        mu: 1.0,
        alpha: 1.0,
        biot_modulus: 1.0,
        mobility_scale: 1.0,
        permeability: PermeabilityModel::KozenyCarman { kappa0: 1.0, rho0: 0.5, c_s: -0.75, upper_s: 0.75 },
    }
}

/// Kozeny-Carman problem with exact solution
/// `p = t sin(pi x) sin(pi y)`, `u = exp(-t)/6 [1, 1] sin(pi x) sin(pi y)`.
pub fn experiment_42() -> Experiment {
    experiment_42_with(experiment_42_coefficients())
}

/// The manufactured problem for arbitrary coefficients; `f` and `g` follow
/// from substituting the exact pair into the strong form.
pub fn experiment_42_with(coefficients: Coefficients) -> Experiment {
    let c = coefficients;
    let f: VectorFn = Arc::new(move |x, t| {
        let w = (-t).exp() / 6.0;
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let s = sx * sy;
        let cc = cx * cy;
        // -div sigma(u) = -mu lap u - (lambda + mu) grad div u
        let shear = 2.0 * PI * PI * c.mu * w * s;
        let grad_div = w * PI * PI * (cc - s);
        [
            shear - (c.lambda + c.mu) * grad_div + c.alpha * t * PI * cx * sy,
            shear - (c.lambda + c.mu) * grad_div + c.alpha * t * PI * sx * cy,
        ]
    });
    let g: ScalarFn = Arc::new(move |x, t| {
        let w = (-t).exp() / 6.0;
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let s = sx * sy;
        let cc = cx * cy;
        let (dsx, dsy) = (PI * cx * sy, PI * sx * cy);
        let dilatation = w * (dsx + dsy);
        let grad_dilatation = [w * PI * PI * (cc - s), w * PI * PI * (cc - s)];
        let grad_p = [t * dsx, t * dsy];
        let lap_p = -2.0 * PI * PI * t * s;
        let mobility = c.mobility(dilatation);
        let mobility_slope = c.mobility_scale * c.permeability.derivative(dilatation);
        let flux_div =
            mobility * lap_p + mobility_slope * (grad_dilatation[0] * grad_p[0] + grad_dilatation[1] * grad_p[1]);
        -c.alpha * w * (dsx + dsy) + s / c.biot_modulus - flux_div
    });
    let exact = ExactSolution {
        u: Arc::new(|x, t| {
            let v = (-t).exp() / 6.0 * (PI * x[0]).sin() * (PI * x[1]).sin();
            [v, v]
        }),
        p: Arc::new(|x, t| t * (PI * x[0]).sin() * (PI * x[1]).sin()),
    };
    Experiment {
        name: "ex42",
        coefficients,
        final_time: 1.0,
        data: ProblemData { f, g, p0: Arc::new(|_| 0.0), exact: Some(exact) },
    }
}

/// Quadratic clamped permeability, spatially constant source and zero
/// initial pressure.
pub fn experiment_43(alpha: f64) -> Experiment {
    let coefficients = Coefficients {
        lambda: 1.0,
        mu: 1.0,
        alpha,
        biot_modulus: 1.0,
        mobility_scale: 1.0,
        permeability: PermeabilityModel::QuadraticClamped { kappa0: 1.0, rho0: 0.4, c_s: 0.01, upper_s: 0.75 },
    };
    let data = ProblemData {
        f: Arc::new(|_, _| [0.0, 0.0]),
        g: Arc::new(|_, t| 5.0 * (0.5 * PI * t).cos() + (0.5 * PI * t).sin()),
        p0: Arc::new(|_| 0.0),
        exact: None,
    };
    Experiment { name: "ex43", coefficients, final_time: 1.0, data }
}

//! Discrete norms, error measurement and convergence rates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_elasticity, assemble_laplace, assemble_mass, assemble_pressure_mass, Coefficients};
use crate::error::{Error, Result};
use crate::forcing::ExactSolution;
use crate::mesh::{prolong_interior_scalar, prolong_interior_vector, Mesh};
use crate::sparse::SparseOperator;
use crate::stepper::{State, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "A_norm")]
    A,
    #[serde(rename = "C_norm")]
    C,
    #[serde(rename = "V_norm")]
    V,
    #[serde(rename = "Q_norm")]
    Q,
    #[serde(rename = "HV_norm")]
    HV,
    #[serde(rename = "HQ_norm")]
    HQ,
    #[serde(rename = "Triple")]
    Triple,
}

impl NormKind {
    pub const ALL: [NormKind; 7] =
        [NormKind::A, NormKind::C, NormKind::V, NormKind::Q, NormKind::HV, NormKind::HQ, NormKind::Triple];

    pub fn on_displacement(self) -> bool {
        matches!(self, NormKind::A | NormKind::V | NormKind::HV)
    }

    pub fn on_pressure(self) -> bool {
        matches!(self, NormKind::C | NormKind::Q | NormKind::HQ)
    }
}

/// Argument of [`Norms::norm`].
#[derive(Debug, Clone, Copy)]
pub enum Field<'a> {
    Displacement(&'a [f64]),
    Pressure(&'a [f64]),
    Pair(&'a [f64], &'a [f64]),
}

/// Gram matrices of all norms on one mesh.
#[derive(Debug, Clone)]
pub struct Norms<'m> {
    mesh: &'m Mesh,
    elasticity: SparseOperator,
    pressure_mass: SparseOperator,
    laplace: SparseOperator,
    mass: SparseOperator,
}

fn sqrt_form(q: f64) -> f64 {
    // roundoff can push a tiny quadratic form below zero
    q.max(0.0).sqrt()
}

fn component(u: &[f64], c: usize) -> Vec<f64> {
    u.iter().skip(c).step_by(2).copied().collect()
}

impl<'m> Norms<'m> {
    pub fn new(mesh: &'m Mesh, coeffs: &Coefficients) -> Result<Self> {
        coeffs.validate()?;
        Ok(Norms {
            mesh,
            elasticity: assemble_elasticity(mesh, coeffs),
            pressure_mass: assemble_pressure_mass(mesh, coeffs),
            laplace: assemble_laplace(mesh),
            mass: assemble_mass(mesh),
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    fn check(&self, len: usize, expected: usize, what: &str) -> Result<()> {
        if len == expected {
            Ok(())
        } else {
            Err(Error::invalid(format!("{what} vector has length {len}, expected {expected}")))
        }
    }

    fn componentwise(&self, op: &SparseOperator, u: &[f64]) -> f64 {
        (0..2).map(|c| op.quadratic_form(&component(u, c))).sum()
    }

    pub fn displacement_norm(&self, kind: NormKind, u: &[f64]) -> Result<f64> {
        self.check(u.len(), self.mesh.displacement_dofs(), "displacement")?;
        let q = match kind {
            NormKind::A => self.elasticity.quadratic_form(u),
            NormKind::V => self.componentwise(&self.laplace, u),
            NormKind::HV => self.componentwise(&self.mass, u),
            other => return Err(Error::invalid(format!("{other:?} is not a displacement norm"))),
        };
        Ok(sqrt_form(q))
    }

    pub fn pressure_norm(&self, kind: NormKind, p: &[f64]) -> Result<f64> {
        self.check(p.len(), self.mesh.pressure_dofs(), "pressure")?;
        let q = match kind {
            NormKind::C => self.pressure_mass.quadratic_form(p),
            NormKind::Q => self.laplace.quadratic_form(p),
            NormKind::HQ => self.mass.quadratic_form(p),
            other => return Err(Error::invalid(format!("{other:?} is not a pressure norm"))),
        };
        Ok(sqrt_form(q))
    }

    /// `|||(u, p)|||^2 = ||u||_a^2 + ||p||_c^2`
    pub fn triple(&self, u: &[f64], p: &[f64]) -> Result<f64> {
        let a = self.displacement_norm(NormKind::A, u)?;
        let c = self.pressure_norm(NormKind::C, p)?;
        Ok((a * a + c * c).sqrt())
    }

    pub fn norm(&self, kind: NormKind, field: Field) -> Result<f64> {
        match (kind, field) {
            (NormKind::Triple, Field::Pair(u, p)) => self.triple(u, p),
            (k, Field::Displacement(u)) if k.on_displacement() => self.displacement_norm(k, u),
            (k, Field::Pressure(p)) if k.on_pressure() => self.pressure_norm(k, p),
            (k, Field::Pair(u, _)) if k.on_displacement() => self.displacement_norm(k, u),
            (k, Field::Pair(_, p)) if k.on_pressure() => self.pressure_norm(k, p),
            (k, _) => Err(Error::invalid(format!("{k:?} cannot be applied to this field"))),
        }
    }
}

/// One-shot norm evaluation.
pub fn norm(mesh: &Mesh, coeffs: &Coefficients, kind: NormKind, field: Field) -> Result<f64> {
    Norms::new(mesh, coeffs)?.norm(kind, field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormError {
    pub absolute: f64,
    /// `absolute / norm(exact)`; zero when both vanish, `None` when only the
    /// exact norm does.
    pub relative: Option<f64>,
}

impl NormError {
    pub fn new(absolute: f64, exact_norm: f64) -> Self {
        let relative = if exact_norm > 0.0 {
            Some(absolute / exact_norm)
        } else if absolute == 0.0 {
            Some(0.0)
        } else {
            None
        };
        NormError { absolute, relative }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub time: f64,
    pub displacement: BTreeMap<NormKind, NormError>,
    pub pressure: BTreeMap<NormKind, NormError>,
    pub triple: Option<NormError>,
    /// `(int_0^T ||P - p||_Q^2 dt)^{1/2}` with `P` the piecewise-constant
    /// reconstruction taking the right endpoint value on each step.
    pub time_integrated_q: Option<NormError>,
    pub wall_time: f64,
    pub picard_mean: Option<f64>,
    pub picard_max: Option<usize>,
}

impl ErrorReport {
    /// Relative error for `kind`, looking in the matching field.
    pub fn relative(&self, kind: NormKind) -> Option<f64> {
        self.entry(kind).and_then(|e| e.relative)
    }

    pub fn entry(&self, kind: NormKind) -> Option<&NormError> {
        if kind == NormKind::Triple {
            self.triple.as_ref()
        } else if kind.on_displacement() {
            self.displacement.get(&kind)
        } else {
            self.pressure.get(&kind)
        }
    }

    fn with_run_stats(mut self, traj: &Trajectory) -> Self {
        self.wall_time = traj.report.wall_time;
        self.picard_mean = traj.report.picard_mean;
        self.picard_max = traj.report.picard_max;
        self
    }
}

fn state_at(traj: &Trajectory, t: f64) -> Result<&State> {
    traj.states
        .iter()
        .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::invalid(format!("trajectory has no state at t = {t}")))
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Errors of a discrete state against a reference state living on the same
/// mesh, in the requested norms.
pub fn compare_states(norms: &Norms, state: &State, reference: &State, kinds: &[NormKind]) -> Result<ErrorReport> {
    let du = difference(&state.u, &reference.u);
    let dp = difference(&state.p, &reference.p);
    let mut report = ErrorReport { time: state.t, ..Default::default() };
    for &kind in kinds {
        if kind == NormKind::Triple {
            report.triple = Some(NormError::new(norms.triple(&du, &dp)?, norms.triple(&reference.u, &reference.p)?));
        } else if kind.on_displacement() {
            let e = NormError::new(norms.displacement_norm(kind, &du)?, norms.displacement_norm(kind, &reference.u)?);
            report.displacement.insert(kind, e);
        } else {
            let e = NormError::new(norms.pressure_norm(kind, &dp)?, norms.pressure_norm(kind, &reference.p)?);
            report.pressure.insert(kind, e);
        }
    }
    Ok(report)
}

fn interpolate_exact(mesh: &Mesh, exact: &ExactSolution, t: f64) -> State {
    State {
        u: mesh.interpolate_vector(|x| (exact.u)(x, t)),
        p: mesh.interpolate_scalar(|x| (exact.p)(x, t)),
        t,
    }
}

// 5-point Gauss-Legendre rule on [0, 1]
const GAUSS_NODES: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// Errors of `traj` at time `t` against the nodal interpolant of the exact
/// pair. The time-integrated Q error is added when `kinds` contains
/// [`NormKind::Q`] and `t` is the final state.
pub fn error_vs_manufactured(
    norms: &Norms,
    traj: &Trajectory,
    exact: &ExactSolution,
    t: f64,
    kinds: &[NormKind],
) -> Result<ErrorReport> {
    let mesh = norms.mesh();
    let state = state_at(traj, t)?;
    let reference = interpolate_exact(mesh, exact, state.t);
    let mut report = compare_states(norms, state, &reference, kinds)?;
    if kinds.contains(&NormKind::Q) && std::ptr::eq(state, traj.last()) && traj.states.len() > 1 {
        let (mut err2, mut ref2) = (0.0, 0.0);
        for pair in traj.states.windows(2) {
            let (t0, t1) = (pair[0].t, pair[1].t);
            let dt = t1 - t0;
            for (xi, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let p = mesh.interpolate_scalar(|x| (exact.p)(x, t0 + xi * dt));
                let e = norms.pressure_norm(NormKind::Q, &difference(&pair[1].p, &p))?;
                let r = norms.pressure_norm(NormKind::Q, &p)?;
                err2 += w * dt * e * e;
                ref2 += w * dt * r * r;
            }
        }
        report.time_integrated_q = Some(NormError::new(err2.sqrt(), ref2.sqrt()));
    }
    Ok(report.with_run_stats(traj))
}

fn prolong_state(coarse: &Mesh, fine: &Mesh, state: &State) -> Result<State> {
    Ok(State {
        u: prolong_interior_vector(coarse, fine, &state.u)?,
        p: prolong_interior_scalar(coarse, fine, &state.p)?,
        t: state.t,
    })
}

/// Errors of a coarse run against a reference run on a nested finer mesh,
/// at the final time of the coarse run. The coarse states are prolonged to
/// the reference mesh and all norms are taken there. With [`NormKind::Q`]
/// requested, the time-integrated error of the two piecewise-constant
/// pressure reconstructions is computed exactly on the reference time grid.
pub fn error_vs_reference(
    coarse: &Trajectory,
    reference: &Trajectory,
    coarse_mesh: &Mesh,
    ref_norms: &Norms,
    kinds: &[NormKind],
) -> Result<ErrorReport> {
    let fine = ref_norms.mesh();
    let last = coarse.last();
    let ref_state = state_at(reference, last.t)?;
    let prolonged = prolong_state(coarse_mesh, fine, last)?;
    let mut report = compare_states(ref_norms, &prolonged, ref_state, kinds)?;

    if kinds.contains(&NormKind::Q) && coarse.states.len() > 1 {
        let times: Vec<f64> = coarse.states.iter().map(|s| s.t).collect();
        for &t in &times {
            state_at(reference, t)?;
        }
        let mut pressures = Vec::with_capacity(coarse.states.len());
        for s in &coarse.states {
            pressures.push(prolong_interior_scalar(coarse_mesh, fine, &s.p)?);
        }
        let (mut err2, mut ref2) = (0.0, 0.0);
        let mut k = 1;
        for pair in reference.states.windows(2) {
            let (t0, t1) = (pair[0].t, pair[1].t);
            if t1 > last.t + 1e-12 {
                break;
            }
            while k + 1 < times.len() && times[k] < t1 - 1e-12 {
                k += 1;
            }
            let e = ref_norms.pressure_norm(NormKind::Q, &difference(&pressures[k], &pair[1].p))?;
            let r = ref_norms.pressure_norm(NormKind::Q, &pair[1].p)?;
            err2 += (t1 - t0) * e * e;
            ref2 += (t1 - t0) * r * r;
        }
        report.time_integrated_q = Some(NormError::new(err2.sqrt(), ref2.sqrt()));
    }
    Ok(report.with_run_stats(coarse))
}

/// Observed orders `log2(e_k / e_{k+1})` for successively halved parameters.
pub fn convergence_order(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::invalid("at least two error levels are needed"));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::invalid(format!("errors must be positive and finite, got {bad}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Weak-coupling ratio `alpha^2 M / mu` and whether it is at most one.
pub fn coupling_diagnostic(coeffs: &Coefficients) -> Result<(f64, bool)> {
    if !(coeffs.mu > 0.0 && coeffs.biot_modulus > 0.0) {
        return Err(Error::invalid("coupling diagnostic needs mu > 0 and M > 0"));
    }
    let ratio = coeffs.alpha * coeffs.alpha * coeffs.biot_modulus / coeffs.mu;
    Ok((ratio, ratio <= 1.0))
}

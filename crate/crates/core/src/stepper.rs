//! Time stepping on an equidistant grid `t_n = n tau`.
//!
//! Three paths share the same spatial operators:
//!
//! - [`Scheme::SemiExplicit`]: the elasticity equation sees the pressure of
//!   the previous step, so a step is one solve with the (cached) elasticity
//!   factor followed by one SPD solve with `C + tau B(u^n)`.
//! - [`Scheme::ImplicitPicard`]: implicit Euler; the nonlinear step is
//!   resolved by freezing the permeability at the previous Picard iterate and
//!   solving the coupled block system until the nonlinear residual drops
//!   below the tolerance or the iteration cap is hit.
//! - [`Scheme::DelayImplicit`]: implicit Euler for the system whose
//!   elasticity equation carries the pressure delayed by `tau`, started from
//!   a history function on `[-tau, 0]`. It is assembled and solved along a
//!   separate code path and reproduces the semi-explicit trajectory.

use std::sync::Arc;
use std::time::Instant;

use faer::sparse::linalg::solvers::SymbolicLlt;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_coupling, assemble_elasticity, assemble_load_q, assemble_load_v, assemble_permeability_stiffness,
    assemble_pressure_mass, Coefficients, StiffnessPattern,
};
use crate::error::{Error, Result};
use crate::forcing::ProblemData;
use crate::linsolve::{equilibration, scaled_relative_residual, BlockFactor, BlockSymbolic, SpdFactor, DEFAULT_TOL};
use crate::mesh::Mesh;
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiExplicit,
    ImplicitPicard,
    DelayImplicit,
}

/// Pressure history on `[-tau, 0]` for the delay path, returning interior
/// pressure vectors.
pub type HistoryFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub tau: f64,
    pub final_time: f64,
    pub picard_max: usize,
    pub picard_tol: f64,
    pub linear_tol: f64,
    pub history: Option<HistoryFn>,
}

impl std::fmt::Debug for StepperConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StepperConfig")
            .field("scheme", &self.scheme)
            .field("tau", &self.tau)
            .field("final_time", &self.final_time)
            .field("picard_max", &self.picard_max)
            .field("picard_tol", &self.picard_tol)
            .field("linear_tol", &self.linear_tol)
            .field("history", &self.history.is_some())
            .finish()
    }
}

impl StepperConfig {
    pub fn new(scheme: Scheme, tau: f64, final_time: f64) -> Self {
        StepperConfig {
            scheme,
            tau,
            final_time,
            picard_max: 10,
            picard_tol: 1e-9,
            linear_tol: DEFAULT_TOL,
            history: None,
        }
    }

    pub fn semi_explicit(tau: f64, final_time: f64) -> Self {
        Self::new(Scheme::SemiExplicit, tau, final_time)
    }

    pub fn implicit_picard(tau: f64, final_time: f64, picard_max: usize, picard_tol: f64) -> Self {
        StepperConfig { picard_max, picard_tol, ..Self::new(Scheme::ImplicitPicard, tau, final_time) }
    }

    pub fn delay_implicit(tau: f64, final_time: f64, history: Option<HistoryFn>) -> Self {
        StepperConfig { history, ..Self::new(Scheme::DelayImplicit, tau, final_time) }
    }

    /// Number of steps `N = T / tau`; rejects non-integral ratios.
    pub fn steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(Error::invalid(format!("final time must be >= 0, got {}", self.final_time)));
        }
        let ratio = self.final_time / self.tau;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::invalid(format!(
                "T / tau = {} / {} = {ratio} is not an integer",
                self.final_time, self.tau
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<usize> {
        let n = self.steps()?;
        if self.scheme == Scheme::ImplicitPicard && self.picard_max == 0 {
            return Err(Error::invalid("picard_max must be at least 1"));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return Err(Error::invalid(format!("picard_tol must lie in (0, 1), got {}", self.picard_tol)));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return Err(Error::invalid(format!("linear_tol must lie in (0, 1), got {}", self.linear_tol)));
        }
        Ok(n)
    }
}

/// Interior displacement and pressure coefficients at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Block solves performed (0 for the decoupled schemes).
    pub picard_iterations: usize,
    pub final_picard_residual: Option<f64>,
    pub wall_time: f64,
    pub factorization_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub steps: usize,
    pub picard_mean: Option<f64>,
    pub picard_max: Option<usize>,
    pub max_final_residual: Option<f64>,
    /// Wall-clock seconds of the stepping loop.
    pub wall_time: f64,
    pub factorizations: usize,
    pub step_reports: Vec<StepReport>,
}

impl RunReport {
    fn from_steps(scheme: Scheme, step_reports: Vec<StepReport>, wall_time: f64, extra_factorizations: usize) -> Self {
        let steps = step_reports.len();
        let factorizations = extra_factorizations + step_reports.iter().map(|s| s.factorization_count).sum::<usize>();
        let (picard_mean, picard_max, max_final_residual) = if scheme == Scheme::ImplicitPicard && steps > 0 {
            let total: usize = step_reports.iter().map(|s| s.picard_iterations).sum();
            (
                Some(total as f64 / steps as f64),
                step_reports.iter().map(|s| s.picard_iterations).max(),
                step_reports.iter().filter_map(|s| s.final_picard_residual).reduce(f64::max),
            )
        } else {
            (None, None, None)
        };
        RunReport { steps, picard_mean, picard_max, max_final_residual, wall_time, factorizations, step_reports }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub report: RunReport,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("a trajectory holds at least the initial state")
    }
}

/// Time-independent operators of one mesh and coefficient set.
#[derive(Debug, Clone)]
pub struct Discretization<'m> {
    pub mesh: &'m Mesh,
    pub coeffs: Coefficients,
    pub elasticity: SparseOperator,
    pub mass: SparseOperator,
    pub coupling: SparseOperator,
    pub coupling_t: SparseOperator,
    pattern: StiffnessPattern,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh, coeffs: &Coefficients) -> Result<Self> {
        coeffs.validate()?;
        let coupling = assemble_coupling(mesh, coeffs);
        Ok(Discretization {
            mesh,
            coeffs: *coeffs,
            elasticity: assemble_elasticity(mesh, coeffs),
            mass: assemble_pressure_mass(mesh, coeffs),
            coupling_t: coupling.transpose(),
            coupling,
            pattern: StiffnessPattern::new(mesh),
        })
    }

    pub fn permeability_stiffness(&self, u: &[f64]) -> SparseOperator {
        self.pattern.permeability_stiffness(self.mesh, &self.coeffs, u)
    }

    pub fn initial_pressure(&self, data: &ProblemData) -> Vec<f64> {
        self.mesh.interpolate_scalar(|x| (data.p0)(x))
    }

    pub fn loads(&self, data: &ProblemData, t: f64) -> (Vec<f64>, Vec<f64>) {
        (assemble_load_v(self.mesh, &*data.f, t), assemble_load_q(self.mesh, &*data.g, t))
    }

    /// Implicit Euler block operator `[A, -D^T; D, C + tau B(u)]`.
    pub fn block_operator(&self, u: &[f64], tau: f64) -> Result<SparseOperator> {
        let pressure_block = self.mass.add_scaled(&self.permeability_stiffness(u), tau)?;
        SparseOperator::block(&self.elasticity, &self.coupling_t.scaled(-1.0), &self.coupling, &pressure_block)
    }

    /// Right-hand side `(F^n, tau G^n + D u^{n-1} + C p^{n-1})` of the implicit step.
    pub fn implicit_rhs(&self, prev: &State, load_u: &[f64], load_p: &[f64], tau: f64) -> Vec<f64> {
        let du = self.coupling.mul_vec(&prev.u);
        let cp = self.mass.mul_vec(&prev.p);
        let mut rhs = load_u.to_vec();
        rhs.extend(load_p.iter().zip(du.iter().zip(&cp)).map(|(g, (a, b))| tau * g + a + b));
        rhs
    }
}

/// Consistent initial displacement: `A u0 = F(0) + D^T p0`.
pub fn initial_displacement(disc: &Discretization, p0: &[f64], load_u0: &[f64], tol: f64) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = load_u0.iter().zip(disc.coupling_t.mul_vec(p0)).map(|(f, d)| f + d).collect();
    crate::linsolve::solve_spd(&disc.elasticity, &rhs, tol)
}

fn concat(u: &[f64], p: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(u.len() + p.len());
    x.extend_from_slice(u);
    x.extend_from_slice(p);
    x
}

/// Relative residual of the implicit Euler step for a candidate state,
/// measured in the diagonally equilibrated norm of the block operator
/// assembled at that state.
pub fn implicit_residual(
    disc: &Discretization,
    prev: &State,
    next: &State,
    load_u: &[f64],
    load_p: &[f64],
    tau: f64,
) -> Result<f64> {
    let k = disc.block_operator(&next.u, tau)?;
    let rhs = disc.implicit_rhs(prev, load_u, load_p, tau);
    Ok(block_residual(&k, &rhs, &concat(&next.u, &next.p)))
}

fn block_residual(k: &SparseOperator, rhs: &[f64], x: &[f64]) -> f64 {
    let kx = k.mul_vec(x);
    let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, a)| b - a).collect();
    scaled_relative_residual(&equilibration(k), &r, rhs)
}

/// Stateful stepper holding factorization caches across steps of one run.
pub struct Stepper<'d, 'm> {
    disc: &'d Discretization<'m>,
    linear_tol: f64,
    elasticity: Option<SpdFactor>,
    pressure_symbolic: Option<SymbolicLlt<usize>>,
    block_symbolic: Option<BlockSymbolic>,
    displacement_factorizations: usize,
}

impl<'d, 'm> Stepper<'d, 'm> {
    pub fn new(disc: &'d Discretization<'m>, linear_tol: f64) -> Self {
        Stepper {
            disc,
            linear_tol,
            elasticity: None,
            pressure_symbolic: None,
            block_symbolic: None,
            displacement_factorizations: 0,
        }
    }

    /// Factorizations of the elasticity operator performed so far (at most one).
    pub fn displacement_factorizations(&self) -> usize {
        self.displacement_factorizations
    }

    fn elasticity_factor(&mut self) -> Result<&SpdFactor> {
        if self.elasticity.is_none() {
            self.elasticity = Some(SpdFactor::new(&self.disc.elasticity)?);
            self.displacement_factorizations += 1;
        }
        Ok(self.elasticity.as_ref().expect("just initialised"))
    }

    /// One semi-explicit step from `prev` to `prev.t + tau`, given the loads
    /// at the new time.
    pub fn semi_explicit_step(
        &mut self,
        prev: &State,
        load_u: &[f64],
        load_p: &[f64],
        tau: f64,
    ) -> Result<(State, StepReport)> {
        let start = Instant::now();
        let disc = self.disc;
        let tol = self.linear_tol;

        let lagged = disc.coupling_t.mul_vec(&prev.p);
        let rhs_u: Vec<f64> = load_u.iter().zip(&lagged).map(|(f, d)| f + d).collect();
        let u = self.elasticity_factor()?.solve(&rhs_u, tol)?;

        let b = disc.permeability_stiffness(&u);
        let pressure_op = disc.mass.add_scaled(&b, tau)?;
        let du: Vec<f64> = u.iter().zip(&prev.u).map(|(a, b)| a - b).collect();
        let d_du = disc.coupling.mul_vec(&du);
        let cp = disc.mass.mul_vec(&prev.p);
        let rhs_p: Vec<f64> = (0..cp.len()).map(|i| tau * load_p[i] + cp[i] - d_du[i]).collect();
        let (factor, symbolic) = SpdFactor::with_symbolic(&pressure_op, self.pressure_symbolic.as_ref())?;
        self.pressure_symbolic = Some(symbolic);
        let p = factor.solve(&rhs_p, tol)?;

        let report = StepReport {
            picard_iterations: 0,
            final_picard_residual: None,
            wall_time: start.elapsed().as_secs_f64(),
            factorization_count: 1,
        };
        Ok((State { u, p, t: prev.t + tau }, report))
    }

    /// One implicit Euler step resolved by Picard iteration. Hitting the
    /// iteration cap is not an error; the report carries the final residual.
    pub fn implicit_picard_step(
        &mut self,
        prev: &State,
        load_u: &[f64],
        load_p: &[f64],
        tau: f64,
        picard_max: usize,
        picard_tol: f64,
    ) -> Result<(State, StepReport)> {
        if picard_max == 0 {
            return Err(Error::invalid("picard_max must be at least 1"));
        }
        let start = Instant::now();
        let disc = self.disc;
        let rhs = disc.implicit_rhs(prev, load_u, load_p, tau);
        let nu = disc.mesh.displacement_dofs();

        // system frozen at u^n_0 = u^{n-1}
        let mut k = disc.block_operator(&prev.u, tau)?;
        let mut x = concat(&prev.u, &prev.p);
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        while iterations < picard_max {
            let (factor, symbolic) = BlockFactor::with_symbolic(&k, nu, self.block_symbolic.as_ref())?;
            self.block_symbolic = Some(symbolic);
            x = factor.solve(&rhs, self.linear_tol)?;
            iterations += 1;
            k = disc.block_operator(&x[..nu], tau)?;
            residual = block_residual(&k, &rhs, &x);
            if residual <= picard_tol {
                break;
            }
        }
        let report = StepReport {
            picard_iterations: iterations,
            final_picard_residual: Some(residual),
            wall_time: start.elapsed().as_secs_f64(),
            factorization_count: iterations,
        };
        let p = x.split_off(nu);
        Ok((State { u: x, p, t: prev.t + tau }, report))
    }
}

/// Runs the configured scheme over `[0, T]`, starting from the consistent
/// initial state. Wall time covers the stepping loop only.
pub fn run(disc: &Discretization, cfg: &StepperConfig, data: &ProblemData) -> Result<Trajectory> {
    if cfg.scheme == Scheme::DelayImplicit {
        return delay_implicit_run(disc, cfg, data);
    }
    let steps = cfg.validate()?;
    let p0 = disc.initial_pressure(data);
    let (load_u0, _) = disc.loads(data, 0.0);
    let u0 = initial_displacement(disc, &p0, &load_u0, cfg.linear_tol)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(State { u: u0, p: p0, t: 0.0 });

    let mut stepper = Stepper::new(disc, cfg.linear_tol);
    let mut reports = Vec::with_capacity(steps);
    let start = Instant::now();
    for n in 1..=steps {
        let t = n as f64 * cfg.tau;
        let (load_u, load_p) = disc.loads(data, t);
        let prev = states.last().expect("non-empty");
        let (mut next, report) = match cfg.scheme {
            Scheme::SemiExplicit => stepper.semi_explicit_step(prev, &load_u, &load_p, cfg.tau)?,
            Scheme::ImplicitPicard => {
                stepper.implicit_picard_step(prev, &load_u, &load_p, cfg.tau, cfg.picard_max, cfg.picard_tol)?
            }
            Scheme::DelayImplicit => unreachable!("dispatched above"),
        };
        next.t = t;
        states.push(next);
        reports.push(report);
    }
    let wall_time = start.elapsed().as_secs_f64();
    let report = RunReport::from_steps(cfg.scheme, reports, wall_time, stepper.displacement_factorizations());
    Ok(Trajectory { states, report })
}

/// Constant history `Phi = p0`.
pub fn constant_history(p0: Vec<f64>) -> HistoryFn {
    Arc::new(move |_| p0.clone())
}

fn check_history(history: &HistoryFn, p0: &[f64], tau: f64) -> Result<()> {
    let scale = p0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (label, t) in [("Phi(-tau)", -tau), ("Phi(0)", 0.0)] {
        let phi = history(t);
        if phi.len() != p0.len() {
            return Err(Error::invalid(format!("{label} has length {}, expected {}", phi.len(), p0.len())));
        }
        let gap = phi.iter().zip(p0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if gap > 1e-12 * scale {
            return Err(Error::invalid(format!("history must satisfy {label} = p0, deviation {gap:e}")));
        }
    }
    Ok(())
}

/// Implicit Euler for the delay system; the elasticity equation at `t_n`
/// sees the pressure at `t_n - tau`, read from the history on `[-tau, 0]`
/// or from the stored trajectory.
pub fn delay_implicit_run(disc: &Discretization, cfg: &StepperConfig, data: &ProblemData) -> Result<Trajectory> {
    let steps = cfg.validate()?;
    let mesh = disc.mesh;
    let coeffs = &disc.coeffs;
    let tau = cfg.tau;
    let p0 = mesh.interpolate_scalar(|x| (data.p0)(x));
    let history = cfg.history.clone().unwrap_or_else(|| constant_history(p0.clone()));
    check_history(&history, &p0, tau)?;

    // separate operator copies and factorizations from the semi-explicit path
    let elasticity = assemble_elasticity(mesh, coeffs);
    let coupling = assemble_coupling(mesh, coeffs);
    let mass = assemble_pressure_mass(mesh, coeffs);
    let elasticity_factor = SpdFactor::new(&elasticity)?;

    let delayed_pressure = |t: f64, states: &[State]| -> Vec<f64> {
        if t <= 0.0 {
            history(t.max(-tau))
        } else {
            let level = (t / tau).round() as usize;
            states[level].p.clone()
        }
    };
    let displacement = |t: f64, states: &[State]| -> Result<Vec<f64>> {
        let delayed = delayed_pressure(t - tau, states);
        let mut rhs = vec![0.0; elasticity.nrows()];
        // D^T q accumulated row by row of D
        for i in 0..coupling.nrows() {
            for (j, v) in coupling.row(i) {
                rhs[j] += v * delayed[i];
            }
        }
        let f = assemble_load_v(mesh, &*data.f, t);
        rhs.iter_mut().zip(&f).for_each(|(r, fi)| *r += fi);
        elasticity_factor.solve(&rhs, cfg.linear_tol)
    };

    let mut states: Vec<State> = Vec::with_capacity(steps + 1);
    let u0 = displacement(0.0, &states)?;
    states.push(State { u: u0, p: history(0.0), t: 0.0 });

    let start = Instant::now();
    let mut reports = Vec::with_capacity(steps);
    for n in 1..=steps {
        let step_start = Instant::now();
        let t = n as f64 * tau;
        let u = displacement(t, &states)?;
        let prev = &states[n - 1];
        // (C / tau + B(u)) p = g + C p_prev / tau - D (u - u_prev) / tau
        let b = assemble_permeability_stiffness(mesh, coeffs, &u)?;
        let op = b.add_scaled(&mass, 1.0 / tau)?;
        let g = assemble_load_q(mesh, &*data.g, t);
        let cp = mass.mul_vec(&prev.p);
        let du_new = coupling.mul_vec(&u);
        let du_old = coupling.mul_vec(&prev.u);
        let rhs: Vec<f64> = (0..g.len()).map(|i| g[i] + (cp[i] - (du_new[i] - du_old[i])) / tau).collect();
        let p = SpdFactor::new(&op)?.solve(&rhs, cfg.linear_tol)?;
        states.push(State { u, p, t });
        reports.push(StepReport {
            picard_iterations: 0,
            final_picard_residual: None,
            wall_time: step_start.elapsed().as_secs_f64(),
            factorization_count: 1,
        });
    }
    let wall_time = start.elapsed().as_secs_f64();
    Ok(Trajectory { states, report: RunReport::from_steps(Scheme::DelayImplicit, reports, wall_time, 1) })
}

/// Largest admissible step size from the heuristic stability bound
/// `tau < c_a c_b / (2 L_b^2 |p|^2)` with `c_a = mu`, `c_b = kappa_minus / nu`
/// and `L_b = L_kappa / nu`. `None` means no restriction (linear permeability).
pub fn tau_bound_diagnostic(coeffs: &Coefficients, p_bound: f64) -> Result<Option<f64>> {
    if !(p_bound > 0.0 && p_bound.is_finite()) {
        return Err(Error::invalid(format!("pressure bound must be positive, got {p_bound}")));
    }
    let lipschitz = coeffs.mobility_scale * coeffs.permeability.lipschitz_constant();
    if lipschitz == 0.0 {
        return Ok(None);
    }
    let c_a = coeffs.mu;
    let c_b = coeffs.mobility_scale * coeffs.permeability.bounds().0;
    Ok(Some(c_a * c_b / (2.0 * lipschitz * lipschitz * p_bound * p_bound)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::{experiment_42, experiment_43};
    use crate::permeability::PermeabilityModel;

    #[test]
    fn step_count_validation() {
        assert_eq!(StepperConfig::semi_explicit(0.25, 1.0).steps().unwrap(), 4);
        assert_eq!(StepperConfig::semi_explicit(0.25, 0.0).steps().unwrap(), 0);
        assert!(StepperConfig::semi_explicit(0.3, 1.0).steps().is_err());
        assert!(StepperConfig::semi_explicit(0.0, 1.0).steps().is_err());
        assert!(StepperConfig::implicit_picard(0.5, 1.0, 0, 1e-9).validate().is_err());
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let mesh = Mesh::structured(4).unwrap();
        let e = experiment_42();
        let disc = Discretization::new(&mesh, &e.coefficients).unwrap();
        let traj = run(&disc, &StepperConfig::semi_explicit(0.5, 0.0), &e.data).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.report.steps, 0);
    }

    #[test]
    fn zero_data_stays_zero() {
        let mesh = Mesh::structured(4).unwrap();
        let mut coeffs = experiment_43(1.0).coefficients;
        coeffs.permeability = PermeabilityModel::Constant { kappa: 1.0 };
        let disc = Discretization::new(&mesh, &coeffs).unwrap();
        let data = ProblemData::zero();
        for cfg in [
            StepperConfig::semi_explicit(0.25, 1.0),
            StepperConfig::implicit_picard(0.25, 1.0, 3, 1e-9),
            StepperConfig::delay_implicit(0.25, 1.0, None),
        ] {
            let traj = run(&disc, &cfg, &data).unwrap();
            assert_eq!(traj.states.len(), 5);
            assert!(traj.states.iter().all(|s| s.u.iter().chain(&s.p).all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn picard_cap_is_enforced() {
        let mesh = Mesh::structured(4).unwrap();
        let e = experiment_42();
        let disc = Discretization::new(&mesh, &e.coefficients).unwrap();
        let traj = run(&disc, &StepperConfig::implicit_picard(0.25, 1.0, 1, 1e-14), &e.data).unwrap();
        assert!(traj.report.step_reports.iter().all(|s| s.picard_iterations == 1 && s.factorization_count == 1));
    }

    #[test]
    fn semi_explicit_cost_structure() {
        let mesh = Mesh::structured(4).unwrap();
        let e = experiment_42();
        let disc = Discretization::new(&mesh, &e.coefficients).unwrap();
        let traj = run(&disc, &StepperConfig::semi_explicit(0.125, 1.0), &e.data).unwrap();
        assert!(traj.report.step_reports.iter().all(|s| s.factorization_count == 1));
        // one pressure factorization per step plus the single elasticity factor
        assert_eq!(traj.report.factorizations, 8 + 1);
        assert!(traj.report.picard_mean.is_none());
    }

    #[test]
    fn tau_bound_structure() {
        let e = experiment_42();
        let t1 = tau_bound_diagnostic(&e.coefficients, 1.0).unwrap().unwrap();
        let t2 = tau_bound_diagnostic(&e.coefficients, 2.0).unwrap().unwrap();
        assert!((t1 / t2 - 4.0).abs() < 1e-12);
        let mut linear = e.coefficients;
        linear.permeability = PermeabilityModel::Constant { kappa: 1.0 };
        assert_eq!(tau_bound_diagnostic(&linear, 1.0).unwrap(), None);
        assert!(tau_bound_diagnostic(&linear, 0.0).is_err());
    }

    #[test]
    fn bad_history_rejected() {
        let mesh = Mesh::structured(3).unwrap();
        let e = experiment_42();
        let disc = Discretization::new(&mesh, &e.coefficients).unwrap();
        let n = mesh.pressure_dofs();
        let history: HistoryFn = Arc::new(move |t| vec![t; n]);
        let cfg = StepperConfig::delay_implicit(0.5, 1.0, Some(history));
        assert!(matches!(run(&disc, &cfg, &e.data), Err(Error::InvalidArgument(_))));
    }
}

//! Proximal gradient descent: a gradient step on the smooth objective
//! followed by the exact projection onto the continuity constraint.

mod kkt;
mod projection;

use std::time::Instant;

use serde::Serialize;

pub use kkt::{kkt_residual, weighted_gradient, KktResidual};
pub use projection::{time_operator, ProjectionOperator};

use crate::cost::{check_density, objective, CostBreakdown, CostSpec};
use crate::error::{DomainError, SolveError};
use crate::field::{staggered_density, DensityField, FluxField, VertexSeries};
use crate::mesh::Mesh;
use crate::scalar::{dot, Scalar};

/// Armijo constant for the backtracking line search.
pub const ARMIJO_CONSTANT: f64 = 1e-4;
/// Maximum number of step halvings per iteration.
pub const MAX_HALVINGS: usize = 30;
/// A line-search trial may shrink the staggered density of a triangle by at
/// most this factor, keeping iterates away from the `ρ̄ = 0` boundary.
pub const BOUNDARY_FRACTION: f64 = 0.5;
/// Largest tolerated `|M·n| / |M|` after an update, raised to rounding level
/// for scalar types coarser than `f64`.
pub const TANGENCY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T> {
    pub iterations: usize,
    pub step_size: T,
    pub line_search: bool,
    /// Record a KKT sample every this many iterations (0 disables periodic samples).
    pub log_every: usize,
    /// Stop early once the largest KKT norm drops to this value.
    pub tolerance: Option<T>,
    /// Run every parallel section on a single thread.
    pub deterministic: bool,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            iterations: 500,
            step_size: T::lit(1e-2),
            line_search: false,
            log_every: 50,
            tolerance: None,
            deterministic: false,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.step_size > T::zero() && self.step_size.is_finite()) {
            return Err(SolveError::Options(format!("step size must be positive, got {}", self.step_size)));
        }
        if let Some(tol) = self.tolerance {
            if !(tol >= T::zero()) {
                return Err(SolveError::Options(format!("tolerance must be nonnegative, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktSample {
    pub iteration: usize,
    pub density: f64,
    pub flux: f64,
    pub continuity: f64,
    pub max: f64,
    pub min: f64,
}

impl KktSample {
    fn new<T: Scalar>(iteration: usize, r: &KktResidual<T>) -> Self {
        Self {
            iteration,
            density: r.density.to_f64_lossy(),
            flux: r.flux.to_f64_lossy(),
            continuity: r.continuity.to_f64_lossy(),
            max: r.max().to_f64_lossy(),
            min: r.min().to_f64_lossy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationBudget,
    Tolerance,
    /// Backtracking found no acceptable step.
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// Objective after initialization (entry 0) and after every iteration.
    pub objective_trace: Vec<f64>,
    pub costs: CostBreakdown<f64>,
    pub kkt: KktSample,
    pub kkt_trace: Vec<KktSample>,
    pub min_density: f64,
    pub iterations: usize,
    pub final_step_size: f64,
    pub stop_reason: StopReason,
    pub precompute_seconds: f64,
    pub iteration_seconds: f64,
}

impl SolveReport {
    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            precompute_seconds: 0.0,
            iteration_seconds: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub density: DensityField<T>,
    pub flux: FluxField<T>,
    pub report: SolveReport,
}

/// `(P, M) − η ∇Y(P, M)`, with the gradient taken in the same area- and
/// time-weighted inner products that define the projection.
pub fn gradient_step<T: Scalar>(
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    p: &DensityField<T>,
    m: &FluxField<T>,
    eta: T,
) -> Result<(VertexSeries<T>, FluxField<T>), DomainError> {
    let (gp, gm) = weighted_gradient(mesh, spec, p, m)?;
    Ok(step_with(p, m, &gp, &gm, eta))
}

fn step_with<T: Scalar>(
    p: &DensityField<T>,
    m: &FluxField<T>,
    gp: &VertexSeries<T>,
    gm: &FluxField<T>,
    eta: T,
) -> (VertexSeries<T>, FluxField<T>) {
    let mut ph = p.steps().clone();
    ph.axpy(-eta, gp);
    let mut mh = m.clone();
    mh.axpy(-eta, gm);
    (ph, mh)
}

/// `⟨g, x⁺ − x⟩` in the weighted geometry, i.e. the directional derivative.
fn directional<T: Scalar>(
    mesh: &Mesh<T>,
    gp: &VertexSeries<T>,
    gm: &FluxField<T>,
    p0: &DensityField<T>,
    p1: &DensityField<T>,
    m0: &FluxField<T>,
    m1: &FluxField<T>,
) -> T {
    let h = mesh.num_vertices();
    let s = mesh.num_triangles();
    let va = mesh.vertex_areas();
    let ta = mesh.triangle_areas();
    let dp: T = gp
        .as_slice()
        .iter()
        .zip(p0.steps().as_slice().iter().zip(p1.steps().as_slice()))
        .enumerate()
        .map(|(i, (g, (a, b)))| va[i % h] * *g * (*b - *a))
        .sum();
    let dm: T = gm
        .as_slice()
        .iter()
        .zip(m0.as_slice().iter().zip(m1.as_slice()))
        .enumerate()
        .map(|(j, (g, (a, b)))| ta[j % s] * dot(*g, [b[0] - a[0], b[1] - a[1], b[2] - a[2]]))
        .sum();
    (dp + dm) / T::from_count(gp.num_steps())
}

/// Fraction-to-boundary test: no triangle above the floor loses more than
/// `1 − BOUNDARY_FRACTION` of its staggered density in one step.
fn keeps_interior<T: Scalar>(mesh: &Mesh<T>, spec: &CostSpec<T>, old: &[Vec<T>], p: &DensityField<T>) -> bool {
    let Ok(new) = staggered_density(mesh, p, spec.averaging) else {
        return false;
    };
    let tau = T::lit(BOUNDARY_FRACTION);
    old.iter().flatten().zip(new.iter().flatten()).all(|(a, b)| *a <= spec.density_floor || *b >= tau * *a)
}

fn check_finite<T: Scalar>(c: &CostBreakdown<T>, iteration: usize) -> Result<(), SolveError> {
    for (term, v) in [("dynamic", c.dynamic), ("interaction", c.interaction), ("terminal", c.terminal)] {
        if !v.is_finite() {
            return Err(SolveError::NonFinite {
                term,
                value: v.to_f64_lossy(),
                iteration,
            });
        }
    }
    Ok(())
}

fn breakdown_f64<T: Scalar>(c: &CostBreakdown<T>) -> CostBreakdown<f64> {
    CostBreakdown {
        total: c.total.to_f64_lossy(),
        dynamic: c.dynamic.to_f64_lossy(),
        interaction: c.interaction.to_f64_lossy(),
        terminal: c.terminal.to_f64_lossy(),
    }
}

/// Builds the projection operator and runs [`pgd_solve_with`].
pub fn pgd_solve<T: Scalar>(
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    initial: &[T],
    n: usize,
    options: &SolverOptions<T>,
) -> Result<Solution<T>, SolveError> {
    run_in_pool(options.deterministic, || {
        let start = Instant::now();
        let op = ProjectionOperator::build(mesh, n)?;
        let precompute = start.elapsed().as_secs_f64();
        let mut sol = solve_inner(&op, mesh, spec, initial, options)?;
        sol.report.precompute_seconds = precompute;
        Ok(sol)
    })
}

/// Proximal gradient descent with a prebuilt projection operator.
///
/// Starts from `P(·, t_k) = P₀`, `M = 0` (projected), then alternates a
/// gradient step with the projection for the configured iteration budget.
pub fn pgd_solve_with<T: Scalar>(
    op: &ProjectionOperator<T>,
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    initial: &[T],
    options: &SolverOptions<T>,
) -> Result<Solution<T>, SolveError> {
    run_in_pool(options.deterministic, || solve_inner(op, mesh, spec, initial, options))
}

fn run_in_pool<R: Send>(deterministic: bool, f: impl FnOnce() -> R + Send) -> R {
    if deterministic {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    } else {
        f()
    }
}

fn solve_inner<T: Scalar>(
    op: &ProjectionOperator<T>,
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    initial: &[T],
    options: &SolverOptions<T>,
) -> Result<Solution<T>, SolveError> {
    options.validate()?;
    spec.validate(mesh)?;
    check_density("initial density", mesh, initial)?;
    let n = op.num_steps();
    let domain = |iteration: usize| move |source: DomainError| SolveError::Domain { iteration, source };

    let start = Instant::now();
    let (mut p, mut m) = op.project(
        mesh,
        &VertexSeries::repeated(initial, n),
        &FluxField::zeros(mesh.num_triangles(), n),
        initial,
    );
    let mut cost = objective(mesh, spec, &p, &m).map_err(domain(0))?;
    check_finite(&cost, 0)?;
    let mut trace = vec![cost.total.to_f64_lossy()];
    let mut kkt = kkt_residual(op, mesh, spec, &p, &m).map_err(domain(0))?;
    let mut kkt_trace = vec![KktSample::new(0, &kkt)];
    let mut min_density = p.steps().min_value();
    let mut eta = options.step_size;
    let mut stop = StopReason::IterationBudget;
    let mut done = 0;
    let armijo = T::lit(ARMIJO_CONSTANT);

    let converged = |k: &KktResidual<T>| options.tolerance.is_some_and(|tol| k.max() <= tol);

    if converged(&kkt) {
        stop = StopReason::Tolerance;
    } else {
        for iteration in 1..=options.iterations {
            let (gp, gm) = weighted_gradient(mesh, spec, &p, &m).map_err(domain(iteration))?;
            let accepted = if options.line_search {
                let mut trial_eta = (eta * T::lit(2.0)).min(options.step_size);
                let mut found = None;
                let rho = staggered_density(mesh, &p, spec.averaging).map_err(domain(iteration))?;
                for _ in 0..=MAX_HALVINGS {
                    let (ph, mh) = step_with(&p, &m, &gp, &gm, trial_eta);
                    let (pn, mn) = op.project(mesh, &ph, &mh, initial);
                    if !keeps_interior(mesh, spec, &rho, &pn) {
                        trial_eta *= T::lit(0.5);
                        continue;
                    }
                    if let Ok(c) = objective(mesh, spec, &pn, &mn) {
                        let slope = directional(mesh, &gp, &gm, &p, &pn, &m, &mn);
                        if c.total.is_finite() && c.total <= cost.total + armijo * slope {
                            found = Some((pn, mn, c));
                            break;
                        }
                    }
                    trial_eta *= T::lit(0.5);
                }
                if found.is_some() {
                    eta = trial_eta;
                }
                found
            } else {
                let (ph, mh) = step_with(&p, &m, &gp, &gm, eta);
                let (pn, mn) = op.project(mesh, &ph, &mh, initial);
                let c = objective(mesh, spec, &pn, &mn).map_err(domain(iteration))?;
                check_finite(&c, iteration)?;
                Some((pn, mn, c))
            };

            let Some((pn, mn, c)) = accepted else {
                stop = StopReason::LineSearchStalled;
                break;
            };
            let fraction = mn.max_normal_fraction(mesh);
            if fraction > T::lit(TANGENCY_TOLERANCE).max(T::lit(64.0) * T::epsilon()) {
                return Err(SolveError::Tangency {
                    iteration,
                    fraction: fraction.to_f64_lossy(),
                });
            }
            p = pn;
            m = mn;
            cost = c;
            done = iteration;
            trace.push(cost.total.to_f64_lossy());
            min_density = min_density.min(p.steps().min_value());

            let last = iteration == options.iterations;
            let sample = iteration == 1 || last || (options.log_every > 0 && iteration % options.log_every == 0);
            if sample || options.tolerance.is_some() {
                kkt = kkt_residual(op, mesh, spec, &p, &m).map_err(domain(iteration))?;
                if sample {
                    kkt_trace.push(KktSample::new(iteration, &kkt));
                }
                if converged(&kkt) {
                    if !sample {
                        kkt_trace.push(KktSample::new(iteration, &kkt));
                    }
                    stop = StopReason::Tolerance;
                    break;
                }
            }
        }
    }
    if kkt_trace.last().map(|s| s.iteration) != Some(done) {
        kkt = kkt_residual(op, mesh, spec, &p, &m).map_err(domain(done))?;
        kkt_trace.push(KktSample::new(done, &kkt));
    }

    let report = SolveReport {
        objective_trace: trace,
        costs: breakdown_f64(&cost),
        kkt: KktSample::new(done, &kkt),
        kkt_trace,
        min_density: min_density.to_f64_lossy(),
        iterations: done,
        final_step_size: eta.to_f64_lossy(),
        stop_reason: stop,
        precompute_seconds: 0.0,
        iteration_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Solution {
        density: p,
        flux: m,
        report,
    })
}

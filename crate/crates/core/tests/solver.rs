mod common;

use common::*;
use mfg_core::field::{continuity_residual, vertex_time_norm};
use mfg_core::mesh::make_icosphere;
use mfg_core::solver::StopReason;
use mfg_core::{
    gradient_step, kkt_residual, pgd_solve, pgd_solve_with, CostSpec, DensityField, FluxField, Interaction, Mesh,
    ProjectionOperator, Scalar, SolveError, SolverOptions, Terminal,
};

/// Gaussian bump around `center` on top of a uniform background, unit mass.
fn bump<T: Scalar>(mesh: &Mesh<T>, center: [f64; 3], width: f64, background: f64) -> Vec<T> {
    let raw: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|v| {
            let d2: f64 = (0..3).map(|i| (v[i].to_f64_lossy() - center[i]).powi(2)).sum();
            (-d2 / (width * width)).exp()
        })
        .collect();
    let areas: Vec<f64> = mesh.vertex_areas().iter().map(|a| a.to_f64_lossy()).collect();
    let bump_mass: f64 = raw.iter().zip(&areas).map(|(x, a)| x * a).sum();
    let total: f64 = areas.iter().sum();
    raw.iter()
        .map(|x| T::lit((1.0 - background) * x / bump_mass + background / total))
        .collect()
}

fn transport_spec(mesh: &Mesh<f64>) -> (Vec<f64>, CostSpec<f64>) {
    let initial = bump(mesh, [1.0, 0.0, 0.0], 0.5, 0.5);
    let target = bump(mesh, [0.0, 0.0, 1.0], 0.5, 0.5);
    (initial, CostSpec::new(Interaction::Vanilla, Terminal::KullbackLeibler { weight: 1.0, target }))
}

fn options(iterations: usize, line_search: bool) -> SolverOptions<f64> {
    SolverOptions {
        iterations,
        step_size: 0.02,
        line_search,
        log_every: 1,
        tolerance: None,
        deterministic: true,
    }
}

#[test]
fn stationary_problem_is_a_fixpoint() {
    let mesh = icosphere(2);
    let initial = uniform_density(&mesh);
    let spec = CostSpec::new(Interaction::Vanilla, Terminal::Quadratic { weight: 10.0, target: initial.clone() });
    let opts = SolverOptions { tolerance: Some(1e-8), ..options(50, false) };
    let sol = pgd_solve(&mesh, &spec, &initial, 6, &opts).unwrap();
    assert_eq!(sol.report.iterations, 0);
    assert_eq!(sol.report.stop_reason, StopReason::Tolerance);
    assert!(sol.report.costs.total.abs() <= 1e-12);
    let k = sol.report.kkt;
    assert!(k.density <= 1e-8 && k.flux <= 1e-8 && k.continuity <= 1e-8, "{k:?}");
}

#[test]
fn line_search_never_increases_the_objective() {
    let mesh = icosphere(2);
    let (initial, spec) = transport_spec(&mesh);
    let opts = SolverOptions { step_size: 0.5, ..options(40, true) };
    let sol = pgd_solve(&mesh, &spec, &initial, 5, &opts).unwrap();
    let trace = &sol.report.objective_trace;
    assert!(trace.len() > 2);
    for (k, w) in trace.windows(2).enumerate() {
        assert!(w[1] <= w[0], "objective rose at iteration {}: {} -> {}", k + 1, w[0], w[1]);
    }
    assert!(sol.report.final_step_size <= 0.5);
}

#[test]
fn every_iterate_is_feasible_and_tangent() {
    let mesh = icosphere(2);
    let (initial, spec) = transport_spec(&mesh);
    let n = 5;
    let op = ProjectionOperator::build(&mesh, n).unwrap();
    for iterations in [1, 7, 30] {
        let sol = pgd_solve_with(&op, &mesh, &spec, &initial, &options(iterations, false)).unwrap();
        assert!(sol.report.kkt_trace.iter().all(|s| s.continuity <= 1e-8));
        assert!(vertex_time_norm(&mesh, &continuity_residual(&mesh, &sol.density, &sol.flux)) <= 1e-8);
        for k in 0..=n {
            assert!((mesh.mass(sol.density.at(k)) - 1.0).abs() <= 1e-8);
        }
        assert!(sol.flux.max_normal_fraction(&mesh) <= 1e-10);
    }
}

#[test]
fn kkt_residue_drops_by_an_order_of_magnitude() {
    let mesh = icosphere(2);
    let (initial, spec) = transport_spec(&mesh);
    let sol = pgd_solve(&mesh, &spec, &initial, 5, &SolverOptions { log_every: 50, ..options(400, true) }).unwrap();
    let trace = &sol.report.kkt_trace;
    let first = trace.iter().find(|s| s.iteration == 1).unwrap().max;
    let last = trace.last().unwrap();
    assert_eq!(last.iteration, 400);
    assert!(last.max <= 0.1 * first, "{} vs {first}", last.max);
}

#[test]
fn deterministic_runs_are_identical() {
    let mesh = icosphere(2);
    let (initial, spec) = transport_spec(&mesh);
    let opts = options(25, true);
    let a = pgd_solve(&mesh, &spec, &initial, 4, &opts).unwrap();
    let b = pgd_solve(&mesh, &spec, &initial, 4, &opts).unwrap();
    assert_eq!(a.report.without_timing(), b.report.without_timing());
    assert_eq!(a.density.steps().as_slice(), b.density.steps().as_slice());
    assert_eq!(a.flux.as_slice(), b.flux.as_slice());
}

#[test]
fn zero_step_is_the_identity() {
    let mesh = icosphere(1);
    let (initial, spec) = transport_spec(&mesh);
    let op = ProjectionOperator::build(&mesh, 3).unwrap();
    let mut r = rng(5);
    let (p, m) = op.project(&mesh, &random_series(&mesh, 3, &mut r, 0.05, 0.1), &random_flux(&mesh, 3, &mut r, 0.01), &initial);
    let (ph, mh) = gradient_step(&mesh, &spec, &p, &m, 0.0).unwrap();
    assert_eq!(ph.as_slice(), p.steps().as_slice());
    assert_eq!(mh.as_slice(), m.as_slice());
}

#[test]
fn kkt_of_the_initial_iterate_is_feasible() {
    let mesh = icosphere(1);
    let (initial, spec) = transport_spec(&mesh);
    let op = ProjectionOperator::build(&mesh, 3).unwrap();
    let p = DensityField::constant(initial.clone(), 3);
    let m = FluxField::zeros(mesh.num_triangles(), 3);
    let k = kkt_residual(&op, &mesh, &spec, &p, &m).unwrap();
    assert!(k.continuity <= 1e-12);
    assert!(k.max() > 0.0 && k.min() <= k.max());
}

#[test]
fn bad_inputs_are_reported() {
    let mesh = icosphere(1);
    let (initial, spec) = transport_spec(&mesh);
    let zero_step = SolverOptions { step_size: 0.0, ..options(5, false) };
    assert!(matches!(pgd_solve(&mesh, &spec, &initial, 3, &zero_step), Err(SolveError::Options(_))));
    assert!(matches!(pgd_solve(&mesh, &spec, &initial, 0, &options(5, false)), Err(SolveError::Options(_))));

    let mut negative = initial.clone();
    negative[0] = -1.0;
    assert!(matches!(pgd_solve(&mesh, &spec, &negative, 3, &options(5, false)), Err(SolveError::Spec(_))));

    let short = CostSpec::new(Interaction::Vanilla, Terminal::Quadratic { weight: 1.0, target: vec![1.0; 3] });
    assert!(matches!(pgd_solve(&mesh, &short, &initial, 3, &options(5, false)), Err(SolveError::Spec(_))));
}

#[test]
fn runs_in_single_precision() {
    let mesh = make_icosphere::<f32>(2, 1.0);
    let initial = bump::<f32>(&mesh, [1.0, 0.0, 0.0], 0.5, 0.5);
    let target = bump::<f32>(&mesh, [0.0, 0.0, 1.0], 0.5, 0.5);
    let spec = CostSpec::new(Interaction::Entropy { weight: 0.1 }, Terminal::KullbackLeibler { weight: 1.0, target });
    let opts = SolverOptions::<f32> {
        iterations: 50,
        step_size: 0.02,
        ..SolverOptions::default()
    };
    let sol = pgd_solve(&mesh, &spec, &initial, 4, &opts).unwrap();
    let trace = &sol.report.kkt_trace;
    assert!(trace.last().unwrap().max < trace[0].max);
    assert!((mesh.mass(sol.density.terminal()) - 1.0).abs() <= 1e-4);
}

//! The discrete objective: quadratic kinetic energy on staggered steps,
//! running interaction on interior central steps, and a terminal cost.
//!
//! ```text
//! Y(P, M) = (1/n) Σ_{k=1..n} Σ_j A_T(j) |M(j, t_{k-1/2})|² / (2 ρ̄(j, t_{k-1/2}))
//!         + (1/n) Σ_{k=1..n-1} F(P(·, t_k))
//!         + F_T(P(·, t_n))
//! ```
//!
//! `ρ̄` is floored at `density_floor` before use in both the value and the
//! gradient; with `M = 0` the floored term is exactly zero, which is the
//! usual convention for empty cells.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DomainError, SpecError};
use crate::field::{staggered_density, Averaging, DensityField, FluxField, VertexSeries};
use crate::mesh::{Kernel, Mesh};
use crate::scalar::{dot, Scalar};

pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-8;
pub const DEFAULT_CONGESTION_OFFSET: f64 = 1e-4;

/// Running interaction cost `F(P(·, t))`.
#[derive(Debug, Clone)]
pub enum Interaction<T> {
    Vanilla,
    /// `w Σ_i A_V(i) P(i) B(i)`.
    Obstacle { weight: T, indicator: Vec<T> },
    /// `w Σ_i A_V(i) P(i) log P(i)`.
    Entropy { weight: T },
    /// `w Σ_i A_V(i) √(P(i) + offset)`.
    Congestion { weight: T, offset: T },
    /// `w · ½ Pᵀ A_V K A_V P`.
    Nonlocal { weight: T, kernel: Arc<Kernel<T>> },
    /// `w · ½ Σ_j A_T(j) |∇P(T_j)|²`, the nonlocal cost with the Laplacian kernel
    /// evaluated through the sparse gradient instead of a dense matrix.
    Dirichlet { weight: T },
}

/// Terminal cost `F_T(P(·, t_n))`.
#[derive(Debug, Clone)]
pub enum Terminal<T> {
    /// `w Σ_i A_V(i) (P(i) - P₁(i))²`.
    Quadratic { weight: T, target: Vec<T> },
    /// `w Σ_i A_V(i) P(i) log(P(i) / P₁(i))`.
    KullbackLeibler { weight: T, target: Vec<T> },
    /// `w Σ_i A_V(i) P(i) B_T(i)`.
    ObstacleRegion { weight: T, indicator: Vec<T> },
}

#[derive(Debug, Clone)]
pub struct CostSpec<T> {
    pub interaction: Interaction<T>,
    pub terminal: Terminal<T>,
    pub averaging: Averaging,
    pub density_floor: T,
}

impl<T: Scalar> CostSpec<T> {
    pub fn new(interaction: Interaction<T>, terminal: Terminal<T>) -> Self {
        Self {
            interaction,
            terminal,
            averaging: Averaging::Arithmetic,
            density_floor: T::lit(DEFAULT_DENSITY_FLOOR),
        }
    }

    pub fn validate(&self, mesh: &Mesh<T>) -> Result<(), SpecError> {
        let h = mesh.num_vertices();
        if !(self.density_floor > T::zero()) {
            return Err(SpecError::Invalid {
                field: "density_floor",
                reason: "must be positive".into(),
            });
        }
        match &self.interaction {
            Interaction::Vanilla => {}
            Interaction::Obstacle { weight, indicator } => {
                check_weight("interaction.weight", *weight)?;
                check_indicator("interaction.indicator", indicator, h)?;
            }
            Interaction::Entropy { weight } | Interaction::Dirichlet { weight } => {
                check_weight("interaction.weight", *weight)?
            }
            Interaction::Congestion { weight, offset } => {
                check_weight("interaction.weight", *weight)?;
                if !(*offset > T::zero()) {
                    return Err(SpecError::Invalid {
                        field: "interaction.offset",
                        reason: "must be positive".into(),
                    });
                }
            }
            Interaction::Nonlocal { weight, kernel } => {
                check_weight("interaction.weight", *weight)?;
                if kernel.size() != h {
                    return Err(SpecError::Length {
                        field: "interaction.kernel",
                        expected: h,
                        got: kernel.size(),
                    });
                }
            }
        }
        match &self.terminal {
            Terminal::Quadratic { weight, target } | Terminal::KullbackLeibler { weight, target } => {
                check_weight("terminal.weight", *weight)?;
                check_density("terminal.target", mesh, target)?;
            }
            Terminal::ObstacleRegion { weight, indicator } => {
                check_weight("terminal.weight", *weight)?;
                check_indicator("terminal.indicator", indicator, h)?;
            }
        }
        Ok(())
    }
}

fn check_weight<T: Scalar>(field: &'static str, w: T) -> Result<(), SpecError> {
    if w.is_finite() && w >= T::zero() {
        Ok(())
    } else {
        Err(SpecError::BadWeight {
            field,
            value: w.to_f64_lossy(),
        })
    }
}

fn check_indicator<T: Scalar>(field: &'static str, b: &[T], h: usize) -> Result<(), SpecError> {
    if b.len() != h {
        return Err(SpecError::Length {
            field,
            expected: h,
            got: b.len(),
        });
    }
    match b.iter().position(|v| !(*v >= T::zero() && *v <= T::one())) {
        Some(index) => Err(SpecError::Indicator {
            field,
            index,
            value: b[index].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

/// A valid density: nonnegative entries with `Σ A_V P = 1` to `1e-8`, or to
/// rounding level in scalar types too coarse for that.
pub fn check_density<T: Scalar>(field: &'static str, mesh: &Mesh<T>, p: &[T]) -> Result<(), SpecError> {
    if p.len() != mesh.num_vertices() {
        return Err(SpecError::Length {
            field,
            expected: mesh.num_vertices(),
            got: p.len(),
        });
    }
    if let Some(i) = p.iter().position(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(SpecError::NotADensity {
            field,
            reason: format!("entry {i} is {}", p[i]),
        });
    }
    let mass = mesh.mass(p);
    let tol = T::lit(1e-8).max(T::lit(64.0) * T::epsilon());
    if (mass - T::one()).abs() > tol {
        return Err(SpecError::NotADensity {
            field,
            reason: format!("mass is {mass}, expected 1"),
        });
    }
    Ok(())
}

/// Objective value split into its three parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown<T> {
    pub total: T,
    pub dynamic: T,
    pub interaction: T,
    pub terminal: T,
}

/// Negative entries are rejected; zero is allowed.
fn require_nonnegative<T: Scalar>(what: &'static str, p: &[T]) -> Result<(), DomainError> {
    match p.iter().position(|v| *v < T::zero()) {
        Some(index) => Err(DomainError::Negative {
            what,
            index,
            value: p[index].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

fn xlogx<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * x.ln()
    }
}

/// `F(P)` for one central-step slice.
pub fn interaction_value<T: Scalar>(mesh: &Mesh<T>, interaction: &Interaction<T>, p: &[T]) -> Result<T, DomainError> {
    let a = mesh.vertex_areas();
    Ok(match interaction {
        Interaction::Vanilla => T::zero(),
        Interaction::Obstacle { weight, indicator } => {
            *weight * p.iter().zip(a).zip(indicator).map(|((x, w), b)| *w * *x * *b).sum::<T>()
        }
        Interaction::Entropy { weight } => {
            require_nonnegative("entropy interaction", p)?;
            *weight * p.iter().zip(a).map(|(x, w)| *w * xlogx(*x)).sum::<T>()
        }
        Interaction::Congestion { weight, offset } => {
            if let Some(index) = p.iter().position(|x| !(*x + *offset > T::zero())) {
                return Err(DomainError::NonPositive {
                    what: "congestion interaction (density + offset)",
                    index,
                    value: (p[index] + *offset).to_f64_lossy(),
                });
            }
            *weight * p.iter().zip(a).map(|(x, w)| *w * (*x + *offset).sqrt()).sum::<T>()
        }
        Interaction::Nonlocal { weight, kernel } => *weight * kernel.quadratic_form(mesh, p),
        Interaction::Dirichlet { weight } => {
            let g = mesh.gradient(p);
            *weight * T::lit(0.5) * mesh.triangle_inner(&g, &g)
        }
    })
}

/// `∂F/∂P(i)` for one slice (plain partial derivatives, not area-normalized).
pub fn interaction_gradient<T: Scalar>(
    mesh: &Mesh<T>,
    interaction: &Interaction<T>,
    p: &[T],
    floor: T,
) -> Result<Vec<T>, DomainError> {
    let a = mesh.vertex_areas();
    Ok(match interaction {
        Interaction::Vanilla => vec![T::zero(); p.len()],
        Interaction::Obstacle { weight, indicator } => {
            a.iter().zip(indicator).map(|(w, b)| *weight * *w * *b).collect()
        }
        Interaction::Entropy { weight } => {
            require_nonnegative("entropy interaction", p)?;
            p.iter()
                .zip(a)
                .map(|(x, w)| *weight * *w * (x.max(floor).ln() + T::one()))
                .collect()
        }
        Interaction::Congestion { weight, offset } => {
            if let Some(index) = p.iter().position(|x| !(*x + *offset > T::zero())) {
                return Err(DomainError::NonPositive {
                    what: "congestion interaction (density + offset)",
                    index,
                    value: (p[index] + *offset).to_f64_lossy(),
                });
            }
            let half = T::lit(0.5);
            p.iter()
                .zip(a)
                .map(|(x, w)| *weight * *w * half / (*x + *offset).sqrt())
                .collect()
        }
        Interaction::Nonlocal { weight, kernel } => {
            kernel.weighted_apply(mesh, p).into_iter().map(|v| *weight * v).collect()
        }
        Interaction::Dirichlet { weight } => {
            // ∂/∂P ½ Σ A_T |∇P|² = S P = -A_V ∇·∇P
            let div = mesh.divergence(&mesh.gradient(p));
            div.iter().zip(a).map(|(d, w)| -*weight * *w * *d).collect()
        }
    })
}

/// `F_T(P)` for the terminal slice.
pub fn terminal_value<T: Scalar>(mesh: &Mesh<T>, terminal: &Terminal<T>, p: &[T], floor: T) -> Result<T, DomainError> {
    let a = mesh.vertex_areas();
    Ok(match terminal {
        Terminal::Quadratic { weight, target } => {
            *weight
                * p.iter()
                    .zip(target)
                    .zip(a)
                    .map(|((x, y), w)| *w * (*x - *y) * (*x - *y))
                    .sum::<T>()
        }
        Terminal::KullbackLeibler { weight, target } => {
            require_nonnegative("kl terminal", p)?;
            let mut acc = T::zero();
            for (i, ((x, y), w)) in p.iter().zip(target).zip(a).enumerate() {
                if *x == T::zero() {
                    continue;
                }
                if *y <= T::zero() {
                    if *x > floor {
                        return Err(DomainError::UnsupportedTarget {
                            index: i,
                            value: x.to_f64_lossy(),
                        });
                    }
                    continue;
                }
                acc += *w * *x * (*x / *y).ln();
            }
            *weight * acc
        }
        Terminal::ObstacleRegion { weight, indicator } => {
            *weight * p.iter().zip(a).zip(indicator).map(|((x, w), b)| *w * *x * *b).sum::<T>()
        }
    })
}

pub fn terminal_gradient<T: Scalar>(
    mesh: &Mesh<T>,
    terminal: &Terminal<T>,
    p: &[T],
    floor: T,
) -> Result<Vec<T>, DomainError> {
    let a = mesh.vertex_areas();
    Ok(match terminal {
        Terminal::Quadratic { weight, target } => {
            let two = T::lit(2.0);
            p.iter()
                .zip(target)
                .zip(a)
                .map(|((x, y), w)| two * *weight * *w * (*x - *y))
                .collect()
        }
        Terminal::KullbackLeibler { weight, target } => {
            require_nonnegative("kl terminal", p)?;
            let mut g = Vec::with_capacity(p.len());
            for (i, ((x, y), w)) in p.iter().zip(target).zip(a).enumerate() {
                if *y <= T::zero() {
                    if *x > floor {
                        return Err(DomainError::UnsupportedTarget {
                            index: i,
                            value: x.to_f64_lossy(),
                        });
                    }
                    g.push(T::zero());
                } else {
                    g.push(*weight * *w * ((x.max(floor) / *y).ln() + T::one()));
                }
            }
            g
        }
        Terminal::ObstacleRegion { weight, indicator } => {
            a.iter().zip(indicator).map(|(w, b)| *weight * *w * *b).collect()
        }
    })
}

/// `(1/n) Σ_k Σ_j A_T(j) |M|² / (2 ρ̄)` with `ρ̄` floored.
pub fn dynamic_value<T: Scalar>(
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    p: &DensityField<T>,
    m: &FluxField<T>,
) -> Result<T, DomainError> {
    let rho = staggered_density(mesh, p, spec.averaging)?;
    let n = p.num_steps();
    let two = T::lit(2.0);
    let per_step: Vec<T> = (0..n)
        .into_par_iter()
        .map(|k| {
            m.slice(k)
                .iter()
                .zip(&rho[k])
                .zip(mesh.triangle_areas())
                .map(|((mj, r), a)| *a * dot(*mj, *mj) / (two * r.max(spec.density_floor)))
                .sum::<T>()
        })
        .collect();
    Ok(per_step.into_iter().sum::<T>() / T::from_count(n))
}

/// `(1/n) Σ_{k=1..n-1} F(P(·, t_k))`.
pub fn running_interaction<T: Scalar>(
    mesh: &Mesh<T>,
    interaction: &Interaction<T>,
    p: &DensityField<T>,
) -> Result<T, DomainError> {
    let n = p.num_steps();
    let per_step: Vec<T> = (1..n)
        .into_par_iter()
        .map(|k| interaction_value(mesh, interaction, p.at(k)))
        .collect::<Result<_, _>>()?;
    Ok(per_step.into_iter().sum::<T>() / T::from_count(n))
}

pub fn objective<T: Scalar>(
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    p: &DensityField<T>,
    m: &FluxField<T>,
) -> Result<CostBreakdown<T>, DomainError> {
    let dynamic = dynamic_value(mesh, spec, p, m)?;
    let interaction = running_interaction(mesh, &spec.interaction, p)?;
    let terminal = terminal_value(mesh, &spec.terminal, p.terminal(), spec.density_floor)?;
    Ok(CostBreakdown {
        total: dynamic + interaction + terminal,
        dynamic,
        interaction,
        terminal,
    })
}

/// Partial derivatives of the objective with respect to every free density
/// entry `P(i, t_k)`, `k = 1..n`, and every flux component.
pub fn objective_gradient<T: Scalar>(
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    p: &DensityField<T>,
    m: &FluxField<T>,
) -> Result<(VertexSeries<T>, FluxField<T>), DomainError> {
    let (h, s, n) = (mesh.num_vertices(), mesh.num_triangles(), p.num_steps());
    let inv_n = T::one() / T::from_count(n);
    let rho = staggered_density(mesh, p, spec.averaging)?;
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let mut grad_m = FluxField::zeros(s, n);
    // d(dynamic)/d(ρ̄) per staggered step and triangle
    let mut grad_rho = vec![vec![T::zero(); s]; n];
    grad_m
        .as_mut_slice()
        .par_chunks_mut(s)
        .zip(grad_rho.par_iter_mut())
        .enumerate()
        .for_each(|(k, (gm, gr))| {
            for (j, (mj, r)) in m.slice(k).iter().zip(&rho[k]).enumerate() {
                let a = mesh.triangle_areas()[j];
                let rf = r.max(spec.density_floor);
                let c = inv_n * a / rf;
                gm[j] = [c * mj[0], c * mj[1], c * mj[2]];
                gr[j] = -inv_n * a * dot(*mj, *mj) / (two * rf * rf);
            }
        });

    // chain rule through ρ̄ = ½W(P_k) + ½W(P_{k-1}) and the per-slice costs
    let slices: Vec<Vec<T>> = (1..=n)
        .into_par_iter()
        .map(|c| -> Result<Vec<T>, DomainError> {
            let pc = p.at(c);
            let mut g = vec![T::zero(); h];
            // central step c touches staggered steps c (index c-1) and c+1 (index c)
            for k in [c - 1, c].into_iter().filter(|&k| k < n) {
                for (j, tri) in mesh.triangles().iter().enumerate() {
                    let w = spec.averaging.partials([pc[tri[0]], pc[tri[1]], pc[tri[2]]]);
                    let gr = grad_rho[k][j];
                    for a in 0..3 {
                        g[tri[a]] += half * gr * w[a];
                    }
                }
            }
            if c < n {
                let gi = interaction_gradient(mesh, &spec.interaction, pc, spec.density_floor)?;
                for (x, y) in g.iter_mut().zip(gi) {
                    *x += inv_n * y;
                }
            } else {
                let gt = terminal_gradient(mesh, &spec.terminal, pc, spec.density_floor)?;
                for (x, y) in g.iter_mut().zip(gt) {
                    *x += y;
                }
            }
            Ok(g)
        })
        .collect::<Result<_, _>>()?;
    let grad_p = VertexSeries::from_vec(h, n, slices.concat());
    Ok((grad_p, grad_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{laplacian_kernel, make_icosphere};
    use approx::assert_relative_eq;

    fn triangle() -> Mesh<f64> {
        Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn unit_density(m: &Mesh<f64>) -> Vec<f64> {
        vec![1.0 / m.total_area(); m.num_vertices()]
    }

    #[test]
    fn zero_at_stationary_target() {
        let m = make_icosphere::<f64>(1, 1.0);
        let p0 = unit_density(&m);
        let spec = CostSpec::new(
            Interaction::Vanilla,
            Terminal::Quadratic {
                weight: 5.0,
                target: p0.clone(),
            },
        );
        let p = DensityField::constant(p0, 3);
        let flux = FluxField::zeros(m.num_triangles(), 3);
        let c = objective(&m, &spec, &p, &flux).unwrap();
        assert_eq!(c.total, 0.0);
        let (gp, gm) = objective_gradient(&m, &spec, &p, &flux).unwrap();
        assert!(gp.as_slice().iter().all(|v| *v == 0.0));
        assert!(gm.as_slice().iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn single_triangle_dynamic_value_and_flux_gradient() {
        let m = triangle();
        // ρ̄ = 1 needs P ≡ 1 (not a unit-mass density; only the formula matters here)
        let p = DensityField::constant(vec![1.0; 3], 1);
        let flux = FluxField::from_vec(1, 1, vec![[1.0, 0.0, 0.0]]);
        let spec = CostSpec::new(
            Interaction::Vanilla,
            Terminal::ObstacleRegion {
                weight: 0.0,
                indicator: vec![0.0; 3],
            },
        );
        let c = objective(&m, &spec, &p, &flux).unwrap();
        assert_relative_eq!(c.dynamic, 0.25);
        let (_, gm) = objective_gradient(&m, &spec, &p, &flux).unwrap();
        assert_relative_eq!(gm.slice(0)[0][0], 0.5);
        assert_eq!(gm.slice(0)[0][1], 0.0);
    }

    #[test]
    fn interaction_examples() {
        let m = make_icosphere::<f64>(1, 1.0);
        let p = unit_density(&m);
        assert_eq!(interaction_value(&m, &Interaction::Vanilla, &p).unwrap(), 0.0);

        let nl = Interaction::Nonlocal {
            weight: 1.0,
            kernel: Arc::new(Kernel::constant(m.num_vertices(), 0.8)),
        };
        assert_relative_eq!(interaction_value(&m, &nl, &p).unwrap(), 0.4, max_relative = 1e-12);

        let area = m.total_area();
        let ent = interaction_value(&m, &Interaction::Entropy { weight: 1.0 }, &p).unwrap();
        assert_relative_eq!(ent, (1.0 / area).ln(), max_relative = 1e-12);
    }

    #[test]
    fn dirichlet_equals_laplacian_kernel() {
        let m = make_icosphere::<f64>(1, 1.0);
        let p: Vec<f64> = (0..m.num_vertices()).map(|i| 1.0 + 0.5 * (i as f64).cos()).collect();
        let k = Arc::new(laplacian_kernel(&m));
        let a = interaction_value(&m, &Interaction::Dirichlet { weight: 2.0 }, &p).unwrap();
        let b = interaction_value(&m, &Interaction::Nonlocal { weight: 2.0, kernel: k.clone() }, &p).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
        let ga = interaction_gradient(&m, &Interaction::Dirichlet { weight: 2.0 }, &p, 1e-8).unwrap();
        let gb = interaction_gradient(&m, &Interaction::Nonlocal { weight: 2.0, kernel: k }, &p, 1e-8).unwrap();
        for (x, y) in ga.iter().zip(&gb) {
            assert_relative_eq!(*x, *y, epsilon = 1e-10);
        }
    }

    #[test]
    fn terminal_examples() {
        let m = make_icosphere::<f64>(1, 1.0);
        let p1 = unit_density(&m);
        let q = Terminal::Quadratic {
            weight: 3.0,
            target: p1.clone(),
        };
        let kl = Terminal::KullbackLeibler {
            weight: 3.0,
            target: p1.clone(),
        };
        assert_eq!(terminal_value(&m, &q, &p1, 1e-8).unwrap(), 0.0);
        assert!(terminal_value(&m, &kl, &p1, 1e-8).unwrap().abs() < 1e-14);

        let mut p = p1.clone();
        p[4] += 0.1;
        let a = m.vertex_areas()[4];
        assert_relative_eq!(terminal_value(&m, &q, &p, 1e-8).unwrap(), 3.0 * a * 0.01, max_relative = 1e-12);
    }

    #[test]
    fn kl_rejects_unsupported_target() {
        let m = make_icosphere::<f64>(0, 1.0);
        let mut target = unit_density(&m);
        target[2] = 0.0;
        let kl = Terminal::KullbackLeibler { weight: 1.0, target };
        let p = unit_density(&m);
        assert!(matches!(
            terminal_value(&m, &kl, &p, 1e-8),
            Err(DomainError::UnsupportedTarget { index: 2, .. })
        ));
    }

    #[test]
    fn entropy_rejects_negative_density() {
        let m = make_icosphere::<f64>(0, 1.0);
        let mut p = unit_density(&m);
        p[5] = -1e-3;
        assert!(matches!(
            interaction_value(&m, &Interaction::Entropy { weight: 1.0 }, &p),
            Err(DomainError::Negative { index: 5, .. })
        ));
    }

    #[test]
    fn validate_catches_bad_specs() {
        let m = make_icosphere::<f64>(0, 1.0);
        let good = unit_density(&m);
        let bad_weight = CostSpec::new(
            Interaction::Entropy { weight: -1.0 },
            Terminal::Quadratic {
                weight: 1.0,
                target: good.clone(),
            },
        );
        assert!(matches!(bad_weight.validate(&m), Err(SpecError::BadWeight { .. })));
        let bad_target = CostSpec::new(
            Interaction::Vanilla,
            Terminal::Quadratic {
                weight: 1.0,
                target: vec![1.0; 12],
            },
        );
        assert!(matches!(bad_target.validate(&m), Err(SpecError::NotADensity { .. })));
        let bad_mask = CostSpec::new(
            Interaction::Obstacle {
                weight: 1.0,
                indicator: vec![2.0; 12],
            },
            Terminal::Quadratic { weight: 1.0, target: good },
        );
        assert!(matches!(bad_mask.validate(&m), Err(SpecError::Indicator { .. })));
    }
}

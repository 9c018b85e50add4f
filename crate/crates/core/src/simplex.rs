//! Derivative-free Nelder-Mead minimisation.

use std::cmp::Ordering;

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct NelderMead {
    pub max_iterations: usize,
    /// Stop once the simplex's relative spread (in objective values or in
    /// coordinates) falls below this.
    pub rel_tol: f64,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn order(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

impl NelderMead {
    fn spread_small(&self, simplex: &[(Vec<f64>, f64)]) -> bool {
        let best = simplex[0].1;
        let worst = simplex[simplex.len() - 1].1;
        if !worst.is_finite() {
            return false;
        }
        if worst - best <= self.rel_tol * best.abs() {
            return true;
        }
        let origin = &simplex[0].0;
        simplex[1..].iter().all(|(x, _)| {
            x.iter()
                .zip(origin)
                .all(|(a, b)| (a - b).abs() <= self.rel_tol * b.abs().max(1e-12))
        })
    }

    /// Minimises `f` from `x0`, building the initial simplex by stepping
    /// `steps[i]` along each axis.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        x0: &[f64],
        steps: &[f64],
    ) -> Minimum {
        let n = x0.len();
        assert_eq!(n, steps.len());
        if n == 0 {
            return Minimum {
                x: Vec::new(),
                f: sanitize(f(&[])),
                iterations: 0,
                converged: true,
            };
        }
        let mut eval = |x: &[f64]| sanitize(f(x));

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += steps[i];
            let fx = eval(&x);
            simplex.push((x, fx));
        }

        let mut iterations = 0;
        loop {
            simplex.sort_by(order);
            if self.spread_small(&simplex) {
                break;
            }
            if iterations >= self.max_iterations {
                let best = simplex.swap_remove(0);
                return Minimum {
                    x: best.0,
                    f: best.1,
                    iterations,
                    converged: false,
                };
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |coef: f64, from: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(from)
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let worst = simplex[n].0.clone();
            let f_worst = simplex[n].1;
            let f_best = simplex[0].1;
            let f_second = simplex[n - 1].1;

            let reflected = along(REFLECT, &worst);
            let f_reflected = eval(&reflected);
            if f_reflected < f_best {
                let expanded = along(EXPAND, &worst);
                let f_expanded = eval(&expanded);
                simplex[n] = if f_expanded < f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
                continue;
            }
            if f_reflected < f_second {
                simplex[n] = (reflected, f_reflected);
                continue;
            }
            let (contracted, f_contracted) = if f_reflected < f_worst {
                let x = along(CONTRACT, &worst);
                let fx = eval(&x);
                (x, fx)
            } else {
                let x = along(-CONTRACT, &worst);
                let fx = eval(&x);
                (x, fx)
            };
            if f_contracted < f_worst.min(f_reflected) {
                simplex[n] = (contracted, f_contracted);
                continue;
            }
            let best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, v)| b + SHRINK * (v - b))
                    .collect();
                let fx = eval(&x);
                *vertex = (x, fx);
            }
        }
        let best = simplex.swap_remove(0);
        Minimum {
            x: best.0,
            f: best.1,
            iterations,
            converged: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver() -> NelderMead {
        NelderMead {
            max_iterations: 10_000,
            rel_tol: 1e-12,
        }
    }

    #[test]
    fn quadratic_bowl() {
        let m = solver().minimize(
            |x| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        assert!(m.converged);
        assert!(
            (m.x[0] - 3.0).abs() < 1e-5 && (m.x[1] + 1.0).abs() < 1e-5,
            "{m:?}"
        );
    }

    #[test]
    fn rosenbrock() {
        let m = solver().minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
        );
        assert!(
            (m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4,
            "{m:?}"
        );
    }

    #[test]
    fn infeasible_region_is_avoided() {
        let m = solver().minimize(
            |x| {
                if x[0] < 0.5 {
                    f64::NAN
                } else {
                    (x[0] - 0.5).powi(2) + 1.0
                }
            },
            &[2.0],
            &[0.5],
        );
        assert!(m.x[0] >= 0.5 && (m.f - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let m = NelderMead {
            max_iterations: 3,
            rel_tol: 1e-15,
        }
        .minimize(|x| x[0] * x[0] + x[1] * x[1], &[5.0, 5.0], &[1.0, 1.0]);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }
}

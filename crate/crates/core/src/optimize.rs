//! Derivative-free minimization used by the curve fitter.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Converged once every vertex lies within `x_tol` (per coordinate,
    /// scaled by the initial step) of the best vertex ...
    pub x_tol: f64,
    /// ... or the objective spread is below `f_tol` relative while the
    /// simplex is within `sqrt(x_tol)`.
    pub f_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 20_000,
            x_tol: 1e-12,
            f_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// The initial simplex is `x0` plus one vertex offset by `steps[i]` along each
/// axis. Deterministic: ties are resolved by vertex order.
pub fn nelder_mead<F>(mut objective: F, x0: &[f64], steps: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert_eq!(steps.len(), dim, "one step per coordinate");
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for (i, &step) in steps.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

    let scale: Vec<f64> = steps.iter().map(|s| s.abs().max(f64::MIN_POSITIVE)).collect();
    let mut converged = false;

    while evaluations < opts.max_evaluations {
        // order vertices best to worst, stable for determinism
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[dim];
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).zip(&scale).map(|((a, b), s)| (a - b).abs() / s))
            .fold(0.0_f64, f64::max);
        let f_spread = (worst - best).abs();
        let flat = f_spread <= opts.f_tol * best.abs() && x_spread <= opts.x_tol.sqrt();
        if x_spread <= opts.x_tol || flat {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let f_r = eval(&reflected, &mut evaluations);
        if f_r < values[0] {
            let expanded = along(2.0);
            let f_e = eval(&expanded, &mut evaluations);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[dim] {
            let c = along(0.5);
            let f = eval(&c, &mut evaluations);
            (c, f)
        } else {
            let c = along(-0.5);
            let f = eval(&c, &mut evaluations);
            (c, f)
        };
        if f_c < values[dim].min(f_r) {
            simplex[dim] = contracted;
            values[dim] = f_c;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&shrunk, &mut evaluations);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], &[0.1, 0.1], SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let r = nelder_mead(|x| (x[0] - 3.5).powi(2), &[0.0], &[1.0], SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 3.5).abs() < 1e-9);
    }

    #[test]
    fn reports_budget_exhaustion() {
        let opts = SimplexOptions {
            max_evaluations: 10,
            ..SimplexOptions::default()
        };
        let r = nelder_mead(|x| (x[0] - 3.5).powi(2), &[0.0], &[1.0], opts);
        assert!(!r.converged);
        assert!(r.evaluations >= 10);
    }
}

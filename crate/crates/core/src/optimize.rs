//! Derivative-free simplex minimizer (Nelder-Mead).
//!
//! Both fit objectives are smooth but their gradients are tedious and
//! the problems are tiny (3 to ~31 dimensions), so a plain simplex
//! with the standard reflect / expand / contract / shrink moves is the
//! whole story. Out-of-bounds penalties arrive as `f64::INFINITY`
//! objective values and sort to the worst vertex naturally.

/// Stopping rules. The search declares convergence when the function
/// spread across the simplex and the coordinate spread around the best
/// vertex are both below their tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            x_tolerance: 1e-8,
            f_tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Reflection / expansion / contraction / shrink coefficients
/// (the classical 1, 2, 1/2, 1/2 choice).
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `f` starting from `x0`, with the initial simplex built by
/// stepping `steps[i]` along each coordinate. `steps` must be nonzero
/// and the same length as `x0`.
///
/// NaN objective values are treated as `+inf` so a stray domain
/// violation cannot poison the ordering.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0, "cannot optimize over zero dimensions");
    assert_eq!(steps.len(), n, "one step per coordinate");
    assert!(steps.iter().all(|s| *s != 0.0 && s.is_finite()), "steps must be finite and nonzero");

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| -> f64 {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex: x0 plus one step along each axis.
    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    vertices.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| eval(v)).collect();

    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;

        // Order vertices best-to-worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        // Convergence: simplex collapsed in both value and position.
        let f_spread = values[worst] - values[best];
        let x_spread = vertices
            .iter()
            .flat_map(|v| v.iter().zip(&vertices[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if f_spread.abs() <= opts.f_tolerance && x_spread <= opts.x_tolerance {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (vi, v) in vertices.iter().enumerate() {
            if vi == worst {
                continue;
            }
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let blend = |from: &[f64], coeff: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coeff * (c - w))
                .collect()
        };

        let reflected = blend(&vertices[worst], REFLECT);
        let f_reflected = eval(&reflected);

        if f_reflected < values[best] {
            // Promising direction: try stretching further.
            let expanded = blend(&vertices[worst], EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                vertices[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            vertices[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            // Contract, outside or inside depending on whether the
            // reflection at least beat the worst vertex.
            let (candidate, f_candidate) = if f_reflected < values[worst] {
                let c = blend(&vertices[worst], CONTRACT);
                let fc = eval(&c);
                (c, fc)
            } else {
                let c = blend(&vertices[worst], -CONTRACT);
                let fc = eval(&c);
                (c, fc)
            };
            if f_candidate < values[worst].min(f_reflected) {
                vertices[worst] = candidate;
                values[worst] = f_candidate;
            } else {
                // Total failure this round: shrink everything toward
                // the best vertex.
                let best_vertex = vertices[best].clone();
                for (vi, v) in vertices.iter_mut().enumerate() {
                    if vi == best {
                        continue;
                    }
                    for (x, b) in v.iter_mut().zip(&best_vertex) {
                        *x = b + SHRINK * (*x - b);
                    }
                    values[vi] = eval(v);
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty simplex");
    SimplexOutcome {
        x: vertices[best].clone(),
        value: values[best],
        iterations,
        evaluations,
        converged,
    }
}

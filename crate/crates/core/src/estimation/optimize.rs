//! Derivative-free bounded minimization.
//!
//! A Nelder-Mead simplex with boundary clamping drives all the nonlinear
//! regressions. Every candidate vertex is clamped into the box before
//! evaluation; a run converges when the simplex diameter drops below 1e-8 or
//! stops after 2000 iterations. Multi-start searches seed their start points
//! from a Halton sequence over the box, so identical seeds give bit-identical
//! results.

use super::EstimationError;

const DIAMETER_TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 2000;

/// Outcome of one bounded minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when every start hit the iteration cap before the simplex
    /// collapsed; the best point found so far is still reported.
    pub converged: bool,
    pub starts: usize,
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

fn simplex_diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

struct NelderMead<'a, F: FnMut(&[f64]) -> f64> {
    f: F,
    bounds: &'a [(f64, f64)],
    evaluations: usize,
}

impl<'a, F: FnMut(&[f64]) -> f64> NelderMead<'a, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    fn run(&mut self, start: &[f64]) -> (Vec<f64>, f64, usize, bool) {
        let dim = start.len();
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        let mut x0 = start.to_vec();
        clamp(&mut x0, self.bounds);
        simplex.push(x0.clone());
        for j in 0..dim {
            let (lo, hi) = self.bounds[j];
            let step = 0.05 * (hi - lo);
            let mut v = x0.clone();
            // step inward when the start sits on the upper bound
            v[j] = if v[j] + step <= hi { v[j] + step } else { v[j] - step };
            clamp(&mut v, self.bounds);
            simplex.push(v);
        }
        let mut scores: Vec<f64> = simplex.iter().map(|v| self.eval(v)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
            let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
            let rescored: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
            simplex = reordered;
            scores = rescored;

            if simplex_diameter(&simplex) < DIAMETER_TOLERANCE {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
                .collect();
            let worst = simplex[dim].clone();
            let f_best = scores[0];
            let f_second_worst = scores[dim - 1];

            let mut reflected: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + alpha * (c - w))
                .collect();
            clamp(&mut reflected, self.bounds);
            let f_reflected = self.eval(&reflected);

            if f_reflected < f_best {
                let mut expanded: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + gamma * (r - c))
                    .collect();
                clamp(&mut expanded, self.bounds);
                let f_expanded = self.eval(&expanded);
                if f_expanded < f_reflected {
                    simplex[dim] = expanded;
                    scores[dim] = f_expanded;
                } else {
                    simplex[dim] = reflected;
                    scores[dim] = f_reflected;
                }
                continue;
            }
            if f_reflected < f_second_worst {
                simplex[dim] = reflected;
                scores[dim] = f_reflected;
                continue;
            }

            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            clamp(&mut contracted, self.bounds);
            let f_contracted = self.eval(&contracted);
            if f_contracted < scores[dim] {
                simplex[dim] = contracted;
                scores[dim] = f_contracted;
                continue;
            }

            let best = simplex[0].clone();
            for i in 1..=dim {
                let mut v: Vec<f64> = best
                    .iter()
                    .zip(&simplex[i])
                    .map(|(b, x)| b + sigma * (x - b))
                    .collect();
                clamp(&mut v, self.bounds);
                scores[i] = self.eval(&v);
                simplex[i] = v;
            }
        }

        let best_index = (0..scores.len())
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .expect("simplex is nonempty");
        (simplex[best_index].clone(), scores[best_index], iterations, converged)
    }
}

/// Minimize `f` over a box via Nelder-Mead from each start, keeping the best
/// result and polishing it with one restart.
pub fn minimize_bounded(
    mut f: impl FnMut(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    starts: &[Vec<f64>],
) -> Result<MinimizeResult, EstimationError> {
    if starts.is_empty() {
        return Err(EstimationError::DomainError("need at least one start point".into()));
    }
    if bounds.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo >= hi) {
        return Err(EstimationError::DomainError("bounds must be finite with lo < hi".into()));
    }
    let mut nm = NelderMead { f: &mut f, bounds, evaluations: 0 };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut total_iterations = 0;
    for start in starts {
        let (x, fx, iters, converged) = nm.run(start);
        total_iterations += iters;
        let better = best.as_ref().is_none_or(|(_, b, _)| fx < *b);
        if better {
            best = Some((x, fx, converged));
        }
    }
    let (x, fx, converged) = best.expect("at least one start ran");
    // restart polish from the winner
    let (x2, fx2, iters2, converged2) = nm.run(&x);
    total_iterations += iters2;
    let (x, fx, converged) = if fx2 < fx { (x2, fx2, converged2) } else { (x, fx, converged) };
    Ok(MinimizeResult {
        x,
        fx,
        iterations: total_iterations,
        evaluations: nm.evaluations,
        converged,
        starts: starts.len(),
    })
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const HALTON_BASES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Quasi-random start points inside the box: a Halton sequence offset by the
/// seed. Deterministic given (bounds, n, seed).
pub fn halton_starts(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let offset = (seed % 8191) as usize;
    (0..n)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(d, (lo, hi))| lo + (hi - lo) * halton(i + 1 + offset, HALTON_BASES[d % 8]))
                .collect()
        })
        .collect()
}

/// Golden-section search for a one-dimensional minimum on `[lo, hi]`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iterations: usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum_found() {
        let result = minimize_bounded(
            |x| (x[0] - 2.0).powi(2),
            &[(0.0, 5.0)],
            &[vec![4.9]],
        )
        .unwrap();
        assert!(result.converged);
        assert!((result.x[0] - 2.0).abs() < 1e-6, "x = {:?}", result.x);
    }

    #[test]
    fn minimum_on_boundary_is_clamped() {
        let result = minimize_bounded(
            |x| (x[0] + 1.0).powi(2),
            &[(0.0, 5.0)],
            &[vec![3.0]],
        )
        .unwrap();
        assert!((result.x[0] - 0.0).abs() < 1e-6);
    }

    #[test]
    fn multistart_escapes_local_basin() {
        // two basins: local at x ~ 2.2, global at x ~ -1.7 (shifted quartic)
        let f = |x: &[f64]| {
            let t = x[0];
            t.powi(4) - 2.0 * t.powi(2) + 0.3 * t + 0.05 * (t - 2.0).powi(2)
        };
        let starts = halton_starts(&[(-3.0, 3.0)], 8, 7);
        let result = minimize_bounded(f, &[(-3.0, 3.0)], &starts).unwrap();
        assert!(result.x[0] < 0.0, "found {:?}", result.x);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = golden_section(|x| (x - 0.1).powi(2), 0.0, 1000.0, 120);
        assert!((x - 0.1).abs() < 1e-6, "x = {x}");
    }

    #[test]
    fn halton_starts_are_deterministic_and_inside() {
        let bounds = [(0.2, 1.5), (0.3, 2.0)];
        let a = halton_starts(&bounds, 16, 42);
        let b = halton_starts(&bounds, 16, 42);
        assert_eq!(a, b);
        assert_ne!(a, halton_starts(&bounds, 16, 43));
        for start in &a {
            for (v, (lo, hi)) in start.iter().zip(&bounds) {
                assert!(lo <= v && v <= hi);
            }
        }
    }

    #[test]
    fn rosenbrock_two_dim() {
        let f = |x: &[f64]| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        };
        let starts = halton_starts(&[(-2.0, 2.0), (-2.0, 2.0)], 8, 1);
        let result = minimize_bounded(f, &[(-2.0, 2.0), (-2.0, 2.0)], &starts).unwrap();
        assert!((result.x[0] - 1.0).abs() < 1e-4 && (result.x[1] - 1.0).abs() < 1e-4);
    }
}

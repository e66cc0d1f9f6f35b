//! Derivative-free local minimization (adaptive Nelder-Mead).
//!
//! Coefficients follow the dimension-adaptive choice of Gao and Han, which
//! behaves much better than the textbook constants past ~10 parameters. After
//! the simplex collapses the search restarts from the best vertex with a fresh
//! simplex, and stops once a restart no longer improves the value.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct NelderMead<T> {
    pub max_iterations: usize,
    /// Simplex diameter (max-norm distance to the best vertex) at which a pass stops.
    pub step_tolerance: T,
    /// Spread of simplex values at which a pass stops.
    pub value_tolerance: T,
    pub initial_step: T,
    pub max_restarts: usize,
}

#[derive(Debug, Clone)]
pub struct LocalMinimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    /// False when the iteration budget ran out before the tolerances were met.
    pub converged: bool,
}

impl<T: Scalar> NelderMead<T> {
    pub fn new(max_iterations: usize, step_tolerance: T, value_tolerance: T) -> Self {
        Self {
            max_iterations,
            step_tolerance,
            value_tolerance,
            initial_step: T::lit(0.1),
            max_restarts: 4,
        }
    }

    pub fn with_initial_step(mut self, step: T) -> Self {
        self.initial_step = step;
        self
    }

    pub fn minimize<F>(&self, f: &mut F, x0: &[T]) -> LocalMinimum<T>
    where
        F: FnMut(&[T]) -> T,
    {
        let n = x0.len();
        let mut best_x = x0.to_vec();
        let mut best_v = eval(f, &best_x);
        let mut iterations = 0;
        let mut step = self.initial_step;
        let mut converged = false;
        for restart in 0..=self.max_restarts {
            let budget = self.max_iterations.saturating_sub(iterations);
            if budget == 0 {
                converged = false;
                break;
            }
            let pass = self.pass(f, &best_x, best_v, step, budget);
            iterations += pass.iterations;
            let improvement = best_v - pass.value;
            if pass.value < best_v {
                best_x = pass.x;
                best_v = pass.value;
            }
            converged = pass.converged;
            if !pass.converged {
                break;
            }
            // A restart that cannot improve confirms the minimum.
            if restart > 0 && improvement <= self.value_tolerance {
                break;
            }
            step = (self.initial_step * T::lit(0.1)).max(self.step_tolerance * T::lit(1e3));
            if n == 0 {
                break;
            }
        }
        LocalMinimum {
            x: best_x,
            value: best_v,
            iterations,
            converged,
        }
    }

    fn pass<F>(&self, f: &mut F, x0: &[T], v0: T, step: T, budget: usize) -> LocalMinimum<T>
    where
        F: FnMut(&[T]) -> T,
    {
        let n = x0.len();
        let nf = T::from_usize_lossy(n.max(1));
        let alpha = T::one();
        let beta = T::one() + T::lit(2.0) / nf;
        let gamma = T::lit(0.75) - T::lit(0.5) / nf;
        let delta = T::one() - T::one() / nf;

        let mut pts: Vec<Vec<T>> = Vec::with_capacity(n + 1);
        let mut vals: Vec<T> = Vec::with_capacity(n + 1);
        pts.push(x0.to_vec());
        vals.push(v0);
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] = p[i] + step;
            vals.push(eval(f, &p));
            pts.push(p);
        }

        let mut order: Vec<usize> = (0..=n).collect();
        let mut centroid = vec![T::zero(); n];
        let mut trial = vec![T::zero(); n];
        let mut trial2 = vec![T::zero(); n];
        let mut iterations = 0;
        let mut converged = false;

        while iterations < budget {
            order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
            let best = order[0];
            let worst = order[n];
            let second_worst = order[n.saturating_sub(1)];

            let spread = vals[worst] - vals[best];
            let diameter = pts
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&pts[best])
                        .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
                })
                .fold(T::zero(), T::max);
            if (spread.is_finite() && spread <= self.value_tolerance * T::lit(1e-3)) || diameter <= self.step_tolerance
            {
                converged = true;
                break;
            }
            iterations += 1;

            for c in centroid.iter_mut() {
                *c = T::zero();
            }
            for &k in &order[..n] {
                for (c, &x) in centroid.iter_mut().zip(&pts[k]) {
                    *c = *c + x;
                }
            }
            for c in centroid.iter_mut() {
                *c = *c / nf;
            }

            // reflection
            for j in 0..n {
                trial[j] = centroid[j] + alpha * (centroid[j] - pts[worst][j]);
            }
            let vr = eval(f, &trial);
            if vr < vals[best] {
                for j in 0..n {
                    trial2[j] = centroid[j] + beta * (trial[j] - centroid[j]);
                }
                let ve = eval(f, &trial2);
                if ve < vr {
                    pts[worst].copy_from_slice(&trial2);
                    vals[worst] = ve;
                } else {
                    pts[worst].copy_from_slice(&trial);
                    vals[worst] = vr;
                }
                continue;
            }
            if vr < vals[second_worst] {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = vr;
                continue;
            }
            // contraction
            let outside = vr < vals[worst];
            for j in 0..n {
                trial2[j] = if outside {
                    centroid[j] + gamma * (trial[j] - centroid[j])
                } else {
                    centroid[j] - gamma * (centroid[j] - pts[worst][j])
                };
            }
            let vc = eval(f, &trial2);
            if (outside && vc <= vr) || (!outside && vc < vals[worst]) {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = vc;
                continue;
            }
            // shrink toward the best vertex
            let anchor = pts[best].clone();
            for k in 0..=n {
                if k == best {
                    continue;
                }
                for j in 0..n {
                    pts[k][j] = anchor[j] + delta * (pts[k][j] - anchor[j]);
                }
                vals[k] = eval(f, &pts[k]);
            }
        }

        let best = (0..=n)
            .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        LocalMinimum {
            x: pts[best].clone(),
            value: vals[best],
            iterations,
            converged,
        }
    }
}

#[inline]
fn eval<T: Scalar, F: FnMut(&[T]) -> T>(f: &mut F, x: &[T]) -> T {
    let v = f(x);
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

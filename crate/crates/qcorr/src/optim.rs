//! Derivative-free minimization used by every optimized measure.
//!
//! The contract is the same everywhere: a coarse uniform grid over the
//! search box picks candidate basins, Nelder-Mead refines the best few grid
//! points, and the whole call stays under a fixed evaluation budget.
//! Maximization is done by minimizing the negated objective at call sites.

/// One search axis; grid points sit at cell centers `lo + (i+1/2)w`.
#[derive(Debug, Clone, Copy)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn cell(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.cell()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StagedOptions {
    /// How many of the best grid points seed a Nelder-Mead run.
    pub refine_starts: usize,
    /// Convergence threshold on the simplex objective spread.
    pub ftol: f64,
    /// Total evaluation budget for grid plus refinement.
    pub budget: usize,
}

impl Default for StagedOptions {
    fn default() -> Self {
        Self {
            refine_starts: 5,
            ftol: 1e-10,
            budget: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Grid stage plus Nelder-Mead refinement; returns the best point found.
pub fn staged_minimize<F>(mut f: F, axes: &[GridAxis], opts: &StagedOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dims = axes.len();
    let grid_total: usize = axes.iter().map(|a| a.count).product();
    let mut evals = 0usize;

    // Keep the `refine_starts` best grid points in first-seen order on ties.
    let mut best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(opts.refine_starts + 1);
    let mut x = vec![0.0; dims];
    for flat in 0..grid_total {
        let mut rem = flat;
        for (k, axis) in axes.iter().enumerate().rev() {
            x[k] = axis.point(rem % axis.count);
            rem /= axis.count;
        }
        let v = f(&x);
        evals += 1;
        let pos = best.partition_point(|(bv, _)| *bv <= v);
        if pos < opts.refine_starts {
            best.insert(pos, (v, x.clone()));
            best.truncate(opts.refine_starts);
        }
    }

    let steps: Vec<f64> = axes.iter().map(|a| a.cell()).collect();
    let mut overall = OptimResult {
        x: best[0].1.clone(),
        value: best[0].0,
        evals,
        converged: false,
    };
    let mut all_converged = true;
    for (_, start) in &best {
        if evals >= opts.budget {
            all_converged = false;
            break;
        }
        let run = nelder_mead(&mut f, start, &steps, opts.ftol, opts.budget - evals);
        evals += run.evals;
        all_converged &= run.converged;
        if run.value < overall.value {
            overall.x = run.x;
            overall.value = run.value;
        }
    }
    overall.evals = evals;
    overall.converged = all_converged;
    overall
}

/// Nelder-Mead simplex minimization (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2) with restarts.
///
/// A single simplex descent stops when the simplex objective spread drops
/// below `ftol` or the simplex collapses geometrically. The search then
/// restarts from the best point with a fresh full-size simplex; objectives
/// that are flat along some direction (common for angle parameterizations
/// at the poles) can collapse the simplex into the flat subspace, and a
/// restart is the standard escape. The search converges when a restart
/// cycle no longer improves the best value by more than `ftol`, and always
/// respects `max_evals`.
pub fn nelder_mead<F>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    ftol: f64,
    max_evals: usize,
) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |pt: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(pt)
    };

    let mut anchor = x0.to_vec();
    let mut anchor_val = f64::INFINITY;
    let mut prev_cycle_val: Option<f64> = None;
    let mut converged = false;

    'cycles: loop {
        if evals + n + 1 > max_evals {
            break;
        }
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(anchor.clone());
        for i in 0..n {
            let mut v = anchor.clone();
            v[i] += step[i];
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex
            .iter()
            .map(|v| eval(v, &mut evals))
            .collect();

        let cycle_done = loop {
            // Sort simplex by objective, best first.
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread_small = values[n] - values[0] < ftol;
            let diameter = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if spread_small && diameter < 1e-6 {
                break true;
            }
            if diameter < 1e-13 {
                break true;
            }
            if evals >= max_evals {
                break false;
            }
            if spread_small {
                // Equal values on a wide simplex mean a flat or symmetric
                // direction, not a minimum; shrink to break the degeneracy.
                for i in 1..=n {
                    for k in 0..n {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = eval(&simplex[i].clone(), &mut evals);
                }
                continue;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let reflected: Vec<f64> = (0..n)
                .map(|k| centroid[k] + (centroid[k] - worst[k]))
                .collect();
            let fr = eval(&reflected, &mut evals);

            if fr < values[0] {
                let expanded: Vec<f64> = (0..n)
                    .map(|k| centroid[k] + 2.0 * (reflected[k] - centroid[k]))
                    .collect();
                let fe = eval(&expanded, &mut evals);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
            } else {
                let (target, ft_bound) = if fr < values[n] {
                    (&reflected, fr)
                } else {
                    (&worst, values[n])
                };
                let contracted: Vec<f64> = (0..n)
                    .map(|k| centroid[k] + 0.5 * (target[k] - centroid[k]))
                    .collect();
                let fc = eval(&contracted, &mut evals);
                if fc < ft_bound {
                    simplex[n] = contracted;
                    values[n] = fc;
                } else {
                    // Shrink toward the best vertex.
                    for i in 1..=n {
                        for k in 0..n {
                            simplex[i][k] =
                                simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                        }
                        values[i] = eval(&simplex[i].clone(), &mut evals);
                    }
                }
            }
        };

        if values[0] < anchor_val {
            anchor = simplex[0].clone();
            anchor_val = values[0];
        }
        if !cycle_done {
            break 'cycles; // budget exhausted mid-descent
        }
        if let Some(prev) = prev_cycle_val {
            if prev - anchor_val <= ftol {
                converged = true;
                break 'cycles;
            }
        }
        prev_cycle_val = Some(anchor_val);
    }

    OptimResult {
        x: anchor,
        value: anchor_val,
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_minimizes_shifted_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 1.25).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let r = nelder_mead(&mut f, &[0.0, 0.0], &[0.3, 0.3], 1e-12, 10_000);
        assert!(r.converged);
        assert!((r.x[0] - 1.25).abs() < 1e-5);
        assert!((r.x[1] + 0.5).abs() < 1e-5);
        assert!(r.value < 1e-9);
    }

    #[test]
    fn nelder_mead_handles_four_dimensions() {
        let mut f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| (v - i as f64).powi(2))
                .sum::<f64>()
        };
        let r = nelder_mead(&mut f, &[0.5; 4], &[0.2; 4], 1e-12, 50_000);
        assert!(r.value < 1e-8);
    }

    #[test]
    fn staged_search_finds_global_basin_among_local_ones() {
        // Two Gaussian wells; the deeper one is the global minimum.
        let f = |x: &[f64]| {
            let well = |cx: f64, cy: f64, depth: f64| {
                -depth * (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 0.05).exp()
            };
            well(2.2, 5.1, 1.0) + well(0.7, 1.3, 0.8)
        };
        let axes = [
            GridAxis {
                lo: 0.0,
                hi: std::f64::consts::PI,
                count: 64,
            },
            GridAxis {
                lo: 0.0,
                hi: 2.0 * std::f64::consts::PI,
                count: 64,
            },
        ];
        let r = staged_minimize(f, &axes, &StagedOptions::default());
        assert!((r.value + 1.0).abs() < 1e-9, "value {}", r.value);
        assert!((r.x[0] - 2.2).abs() < 1e-4);
        assert!((r.x[1] - 5.1).abs() < 1e-4);
        assert!(r.converged);
    }

    #[test]
    fn budget_is_respected() {
        let mut calls = 0usize;
        let f = |x: &[f64]| {
            // Interior mutability not needed; count via closure capture.
            x.iter().map(|v| v.sin()).sum::<f64>()
        };
        let axes = [
            GridAxis {
                lo: 0.0,
                hi: 1.0,
                count: 8,
            },
            GridAxis {
                lo: 0.0,
                hi: 1.0,
                count: 8,
            },
        ];
        let counted = |x: &[f64]| {
            calls += 1;
            f(x)
        };
        let r = staged_minimize(counted, &axes, &StagedOptions {
            refine_starts: 3,
            ftol: 1e-10,
            budget: 100,
        });
        assert!(r.evals <= 100);
        assert_eq!(calls, r.evals);
    }
}

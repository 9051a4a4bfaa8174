//! Exhaustive grid search over small instances, used to check the solver.

use crate::error::{ModelError, Result};
use crate::optimizer::problem::{
    block_coefficients, block_violation, budget_violation, AggregationDecision, Constraints, EpochState,
    FEASIBILITY_TOL,
};

/// Largest decision dimension the grid search accepts.
pub const MAX_ORACLE_DIMENSION: usize = 6;

/// Best feasible grid point and its objective, or `None` when no grid point
/// is feasible.
///
/// Every objective coefficient is non-negative, so a partial assignment
/// whose objective (with the remaining coordinates at zero) already matches
/// the incumbent cannot improve on it; such points are skipped without a
/// feasibility check. The result is the same as checking every point.
pub fn brute_force_oracle(
    state: &EpochState,
    constraints: &Constraints,
    grid_step: f64,
) -> Result<Option<(AggregationDecision, f64)>> {
    let dim = state.dimension();
    if dim > MAX_ORACLE_DIMENSION {
        return Err(ModelError::DimensionTooLarge(dim));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(ModelError::InvalidParameter("grid step must lie in (0, 0.5]".into()));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let value = |i: usize| (i as f64 / steps as f64).min(1.0);

    // Flat layout per block: sensors then LMU; blocks in order. Costs are
    // computed in the same layout as the decision's flatten().
    let n_sensors = state.n_sensors();
    let mut coef = vec![0.0; dim];
    let offsets = state.sensor_offsets();
    for (b, w) in state.wbans.iter().enumerate() {
        let (obj, _) = block_coefficients(state, w);
        let n = w.sensors.len();
        coef[offsets[b]..offsets[b] + n].copy_from_slice(&obj[..n]);
        coef[n_sensors + b] = obj[n];
    }
    // Coordinates the model pins: retired sensors stay silent and, with
    // Phase II fixed, every LMU forwards in full.
    let mut lo = vec![0usize; dim];
    let mut hi = vec![steps; dim];
    for (b, w) in state.wbans.iter().enumerate() {
        for (j, s) in w.sensors.iter().enumerate() {
            if !s.alive {
                hi[offsets[b] + j] = 0;
            }
        }
        if state.phase2_fixed {
            lo[n_sensors + b] = steps;
        }
    }
    let last = dim - 1;
    let mut idx = lo.clone();
    let mut z = vec![0.0; dim];
    let mut best: Option<(Vec<f64>, f64)> = None;

    let feasible = |z: &[f64]| {
        let mut total = 0.0;
        for (b, w) in state.wbans.iter().enumerate() {
            let x = &z[offsets[b]..offsets[b] + w.sensors.len()];
            let (worst, spend) = block_violation(state, w, x, z[n_sensors + b], constraints);
            if worst > FEASIBILITY_TOL {
                return false;
            }
            total += spend;
        }
        budget_violation(total, constraints) <= FEASIBILITY_TOL
    };

    loop {
        for (zj, ij) in z.iter_mut().zip(&idx).take(last) {
            *zj = value(*ij);
        }
        let prefix: f64 = coef[..last].iter().zip(&z[..last]).map(|(c, v)| c * v).sum();
        if best.as_ref().is_none_or(|(_, f)| prefix < *f) {
            for i in lo[last]..=hi[last] {
                z[last] = value(i);
                let f = prefix + coef[last] * z[last];
                if best.as_ref().is_some_and(|(_, b)| f >= *b) {
                    break;
                }
                if feasible(&z) {
                    best = Some((z.clone(), f));
                    break;
                }
            }
        }
        // Odometer over every coordinate except the last.
        let mut k = last;
        loop {
            if k == 0 {
                return Ok(best.map(|(z, _)| {
                    let d = AggregationDecision::from_flat(state, &z);
                    let f = crate::optimizer::problem::objective(&d, state);
                    (d, f)
                }));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] <= hi[k] {
                break;
            }
            idx[k] = lo[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::problem::fixtures::{simple_state, tradeoff_state};
    use crate::optimizer::solve::{solve, SolverParams};

    fn c() -> Constraints {
        Constraints { cost_budget: 10.0, delay_floor: 0.0, energy_floor: 0.0, service_floor: 0.9 }
    }

    #[test]
    fn one_sensor_optimum() {
        let s = simple_state(1, 1e6);
        let (d, f) = brute_force_oracle(&s, &c(), 0.01).unwrap().unwrap();
        assert!((d.phase1_fraction[0] - 0.9).abs() < 1e-9);
        assert!((d.phase2_fraction[0] - 0.9).abs() < 1e-9);
        let r = solve(&s, &c(), &SolverParams::default()).unwrap();
        assert!((r.objective - f).abs() <= 1e-9 * f);
    }

    #[test]
    fn two_sensors_match_solver() {
        let s = tradeoff_state();
        for budget in [0.0089, 0.009, 1.0] {
            let cons = Constraints { cost_budget: budget, ..c() };
            let (_, f) = brute_force_oracle(&s, &cons, 0.01).unwrap().unwrap();
            let r = solve(&s, &cons, &SolverParams::default()).unwrap();
            assert!(r.feasible);
            assert!(r.objective <= f * 1.02, "{} vs {f}", r.objective);
        }
    }

    #[test]
    fn unconstrained_is_all_zero() {
        let s = simple_state(2, 1e6);
        let cons = Constraints { service_floor: 0.0, ..c() };
        let (d, f) = brute_force_oracle(&s, &cons, 0.01).unwrap().unwrap();
        assert!(d.flatten().iter().all(|v| *v == 0.0));
        assert_eq!(f, 0.0);
    }

    #[test]
    fn rejects_large_dimension() {
        let s = simple_state(6, 1e6);
        assert!(matches!(brute_force_oracle(&s, &c(), 0.01), Err(ModelError::DimensionTooLarge(7))));
    }

    #[test]
    fn infeasible_returns_none() {
        let s = simple_state(1, 1e6);
        let cons = Constraints { energy_floor: 2.0, ..c() };
        assert!(brute_force_oracle(&s, &cons, 0.1).unwrap().is_none());
    }
}

//! Lagrangian dual ascent on the shared cost budget.
//!
//! The budget is the only constraint coupling WBANs. Relaxing it with a
//! multiplier `λ ≥ 0` splits the epoch problem into independent per-WBAN
//! linear programs with prices `c + λ·p`, each solved exactly. The dual
//! function
//!
//! ```text
//! g(λ) = Σ_b min_{z_b ∈ P_b} (c_b + λ p_b)·z_b − λ·budget
//! ```
//!
//! is concave and piecewise linear. While the budget is exceeded, λ grows
//! geometrically; once the optimum is bracketed, cutting-plane probes (with
//! bisection as a fallback) close in on it. Primal points come from block
//! minimizers and, when the budget binds, from the convex combination of a
//! bracketing pair that spends exactly the budget.

use crate::error::Result;
use crate::lp::{LinearProgram, LpStatus};
use crate::optimizer::problem::{
    block_coefficients, max_violation, objective, AggregationDecision, Constraints, EpochState, WbanState,
    FEASIBILITY_TOL,
};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub max_iterations: usize,
    /// Relative dual-gap tolerance.
    pub tolerance: f64,
    pub step_0: f64,
    pub execution: Execution,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { max_iterations: 5000, tolerance: 1e-4, step_0: 1.0, execution: Execution::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualIterate {
    pub multiplier: f64,
    pub dual_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub decision: AggregationDecision,
    pub objective: f64,
    pub budget_multiplier: f64,
    /// Row multipliers of each block LP at the final budget price.
    pub local_multipliers: Vec<Vec<f64>>,
    pub dual_gap: f64,
    pub feasible: bool,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<DualIterate>,
    /// Per-WBAN flag: the applied decision breaks at least one constraint.
    pub violated: Vec<bool>,
    pub max_violation: f64,
}

impl SolveReport {
    /// Budget multiplier followed by every block's row multipliers.
    pub fn multipliers(&self) -> Vec<f64> {
        std::iter::once(self.budget_multiplier)
            .chain(self.local_multipliers.iter().flatten().copied())
            .collect()
    }
}

/// Row-normalized block LP. Variables: the block's sensor fractions, then
/// its LMU fraction.
pub(crate) struct BlockLp {
    pub lp: LinearProgram,
    pub obj: Vec<f64>,
    pub cost: Vec<f64>,
}

fn push_scaled(lp: &mut LinearProgram, mut row: Vec<f64>, mut rhs: f64) {
    let scale = row.iter().map(|v| v.abs()).fold(rhs.abs(), f64::max).max(f64::MIN_POSITIVE);
    let scale = if scale.is_finite() { scale } else { 1.0 };
    row.iter_mut().for_each(|v| *v /= scale);
    rhs /= scale;
    lp.push_row(row, rhs);
}

pub(crate) fn build_block(state: &EpochState, w: &WbanState, c: &Constraints, with_service: bool) -> BlockLp {
    let n = w.sensors.len();
    let (obj, cost) = block_coefficients(state, w);
    // Zero-cost coordinates tie; nudge them toward the larger fraction.
    let tie = 1e-12 * obj.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let tied: Vec<f64> = obj.iter().map(|o| o - tie).collect();
    let lower: Vec<f64> = (0..=n).map(|j| if j == n && state.phase2_fixed { 1.0 } else { 0.0 }).collect();
    let upper: Vec<f64> =
        w.sensors.iter().map(|s| if s.alive { 1.0 } else { 0.0 }).chain(std::iter::once(1.0)).collect();
    let mut lp = LinearProgram::new(tied, lower, upper);
    let floor = c.energy_floor / state.energy_scaling;
    let base = w.phase2_base();
    let arrivals: Vec<f64> = w.sensors.iter().map(|s| s.expected_arrival()).collect();

    for (j, s) in w.sensors.iter().enumerate().filter(|(_, s)| s.alive) {
        let mut row = vec![0.0; n + 1];
        row[j] = s.volume * s.tx_energy_per_bit;
        push_scaled(&mut lp, row, s.energy_residual - floor * s.energy_initial);
    }
    let mut lmu_energy: Vec<f64> = arrivals.iter().map(|a| a * w.lmu.rx_energy_per_bit).collect();
    lmu_energy.push(base * w.lmu.tx_energy_per_bit);
    push_scaled(&mut lp, lmu_energy, w.lmu.energy_residual - floor * w.lmu.energy_initial);

    let queue_row = || {
        let mut r = arrivals.clone();
        r.push(-base);
        r
    };
    if !state.phase2_fixed {
        let conservation: Vec<f64> = queue_row().into_iter().map(|v| -v).collect();
        push_scaled(&mut lp, conservation, w.lmu.occupancy);
    } else if with_service && base > 0.0 && c.service_floor > 0.0 {
        // The LMU forwards whatever it holds, so the service floor falls on
        // Phase I arrivals.
        let mut r: Vec<f64> = arrivals.iter().map(|a| -a).collect();
        r.push(0.0);
        push_scaled(&mut lp, r, w.lmu.occupancy - c.service_floor * base);
    }
    push_scaled(&mut lp, queue_row(), w.lmu.buffer_total - w.lmu.occupancy);
    let cap = c.queue_cap(w);
    if cap.is_finite() {
        push_scaled(&mut lp, queue_row(), cap - w.lmu.occupancy);
    }
    if with_service && base > 0.0 && c.service_floor > 0.0 {
        let mut r = vec![0.0; n + 1];
        r[n] = -1.0;
        lp.push_row(r, -c.service_floor);
    }
    BlockLp { lp, obj, cost }
}

struct BlockSolution {
    z: Vec<f64>,
    duals: Vec<f64>,
    feasible: bool,
}

fn solve_block(block: &BlockLp, price: f64) -> BlockSolution {
    let mut lp = block.lp.clone();
    for (c, p) in lp.cost.iter_mut().zip(&block.cost) {
        *c += price * p;
    }
    let s = lp.solve();
    BlockSolution { feasible: s.status == LpStatus::Optimal, z: s.z, duals: s.duals }
}

/// Minimizes the largest normalized row violation of a block:
/// `min t  s.t.  A z − t ≤ b`.
pub(crate) fn min_max_violation(block: &BlockLp) -> (f64, Vec<f64>) {
    let n = block.lp.n_vars();
    // Among minimizers of the violation, prefer the cheaper decision.
    let total: f64 = block.obj.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut cost: Vec<f64> = block.obj.iter().map(|v| 1e-6 * v / total).collect();
    cost.push(1.0);
    let mut lower = block.lp.lower.clone();
    lower.push(0.0);
    let mut upper = block.lp.upper.clone();
    upper.push(1e6);
    let mut lp = LinearProgram::new(cost, lower, upper);
    for (row, b) in block.lp.rows.iter().zip(&block.lp.rhs) {
        let mut r = row.clone();
        r.push(-1.0);
        lp.push_row(r, *b);
    }
    let s = lp.solve();
    let t = s.z[n];
    (t, s.z[..n].to_vec())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assemble(state: &EpochState, blocks: &[Vec<f64>]) -> AggregationDecision {
    let mut p1 = Vec::with_capacity(state.n_sensors());
    let mut p2 = Vec::with_capacity(state.wbans.len());
    for z in blocks {
        let n = z.len() - 1;
        p1.extend_from_slice(&z[..n]);
        p2.push(z[n]);
    }
    AggregationDecision { phase1_fraction: p1, phase2_fraction: p2 }
}

struct Evaluation {
    zs: Vec<Vec<f64>>,
    duals: Vec<Vec<f64>>,
    primal: f64,
    spend: f64,
    dual_value: f64,
}

fn evaluate(blocks: &[BlockLp], price: f64, budget: f64, exec: Execution) -> Evaluation {
    let sols = par::map(exec, blocks, |b| solve_block(b, price));
    let mut primal = 0.0;
    let mut spend = 0.0;
    let mut lagr = 0.0;
    for (b, s) in blocks.iter().zip(&sols) {
        let f = dot(&b.obj, &s.z);
        let p = dot(&b.cost, &s.z);
        primal += f;
        spend += p;
        lagr += f + price * p;
    }
    Evaluation {
        zs: sols.iter().map(|s| s.z.clone()).collect(),
        duals: sols.into_iter().map(|s| s.duals).collect(),
        primal,
        spend,
        dual_value: lagr - price * budget,
    }
}

/// Solves one epoch's aggregation problem.
pub fn solve(state: &EpochState, constraints: &Constraints, params: &SolverParams) -> Result<SolveReport> {
    constraints.validate()?;
    let exec = params.execution;
    let blocks: Vec<BlockLp> = par::map(exec, &state.wbans, |w| build_block(state, w, constraints, true));
    let budget = constraints.cost_budget;

    // Local feasibility of every block, then of the shared budget.
    let base = par::map(exec, &blocks, |b| solve_block(b, 0.0));
    let mut block_ok: Vec<bool> = base.iter().map(|s| s.feasible).collect();
    let mut block_z: Vec<Vec<f64>> = base.iter().map(|s| s.z.clone()).collect();
    for (i, b) in blocks.iter().enumerate() {
        if !block_ok[i] {
            let (t, z) = min_max_violation(b);
            if t <= FEASIBILITY_TOL {
                block_ok[i] = true;
                block_z[i] = z;
            }
        }
    }
    let all_ok = block_ok.iter().all(|ok| *ok);
    if all_ok && base.iter().all(|s| s.feasible) {
        let spend: f64 = blocks.iter().zip(&base).map(|(b, s)| dot(&b.cost, &s.z)).sum();
        if spend <= budget {
            // The budget is slack at λ = 0: block optima are globally optimal.
            let primal: f64 = blocks.iter().zip(&base).map(|(b, s)| dot(&b.obj, &s.z)).sum();
            let decision = assemble(state, &block_z);
            let max_v = max_violation(&decision, state, constraints);
            return Ok(SolveReport {
                objective: objective(&decision, state),
                budget_multiplier: 0.0,
                local_multipliers: base.into_iter().map(|s| s.duals).collect(),
                dual_gap: 0.0,
                feasible: max_v <= FEASIBILITY_TOL,
                converged: true,
                iterations: 1,
                trace: vec![DualIterate { multiplier: 0.0, dual_value: primal }],
                violated: per_block_violated(&decision, state, constraints),
                max_violation: max_v,
                decision,
            });
        }
    }
    // Cheapest point of every block: proves the budget reachable and seeds
    // the primal incumbent.
    let cheapest: Vec<Option<Vec<f64>>> = if all_ok {
        par::map(exec, &blocks, |b| {
            let mut lp = b.lp.clone();
            lp.cost = b.cost.clone();
            let s = lp.solve();
            (s.status == LpStatus::Optimal).then_some(s.z)
        })
    } else {
        Vec::new()
    };
    let min_spend: f64 = if all_ok {
        blocks.iter().zip(&cheapest).map(|(b, z)| z.as_ref().map_or(f64::INFINITY, |z| dot(&b.cost, z))).sum()
    } else {
        f64::INFINITY
    };
    if !(min_spend.is_finite() && min_spend <= budget * (1.0 + 1e-9) + 1e-15) {
        return Ok(fallback(state, constraints, &blocks, &block_ok, &block_z, exec));
    }
    let cheapest: Vec<Vec<f64>> = cheapest.into_iter().flatten().collect();

    let mut trace = Vec::new();
    let mut lambda = 0.0f64;
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_primal: f64 = blocks.iter().zip(&cheapest).map(|(b, z)| dot(&b.obj, z)).sum();
    let mut best_z: Option<Vec<Vec<f64>>> = Some(cheapest);
    let mut best_duals: Vec<Vec<f64>> = Vec::new();
    let mut best_lambda = 0.0;
    let mut lo: Option<(f64, Evaluation)> = None;
    let mut hi: Option<(f64, Evaluation)> = None;
    let scale = budget.abs().max(1e-12);
    // Multiplier scale: objective per unit of spend.
    let lambda_0 = {
        let obj: f64 = blocks.iter().flat_map(|b| &b.obj).map(|v| v.abs()).sum();
        let cost: f64 = blocks.iter().flat_map(|b| &b.cost).map(|v| v.abs()).sum();
        params.step_0 * if cost > 0.0 { obj / cost } else { 1.0 }
    };
    let mut iterations = 0;
    let mut converged = false;

    let probe = |lam: f64,
                 trace: &mut Vec<DualIterate>,
                 lo: &mut Option<(f64, Evaluation)>,
                 hi: &mut Option<(f64, Evaluation)>,
                 best_dual: &mut f64| {
        let ev = evaluate(&blocks, lam, budget, exec);
        trace.push(DualIterate { multiplier: lam, dual_value: ev.dual_value });
        *best_dual = best_dual.max(ev.dual_value);
        let over = ev.spend - budget;
        if ev.spend <= budget * (1.0 + 1e-12) {
            if hi.as_ref().is_none_or(|(l, _)| lam <= *l) {
                *hi = Some((lam, ev));
            }
        } else if lo.as_ref().is_none_or(|(l, _)| lam >= *l) {
            *lo = Some((lam, ev));
        }
        over
    };

    for k in 1..=params.max_iterations.max(1) {
        iterations = k;
        let over = probe(lambda, &mut trace, &mut lo, &mut hi, &mut best_dual);

        if let Some((l, e)) = &hi {
            if e.primal < best_primal {
                best_primal = e.primal;
                best_z = Some(e.zs.clone());
                best_duals = e.duals.clone();
                best_lambda = *l;
            }
        }
        let mut next = None;
        if let (Some((l_lo, e_lo)), Some((l_hi, e_hi))) = (&lo, &hi) {
            let denom = e_lo.spend - e_hi.spend;
            if denom > 0.0 {
                let theta = ((budget - e_hi.spend) / denom).clamp(0.0, 1.0);
                let zs: Vec<Vec<f64>> = e_lo
                    .zs
                    .iter()
                    .zip(&e_hi.zs)
                    .map(|(a, b)| a.iter().zip(b).map(|(p, q)| theta * p + (1.0 - theta) * q).collect())
                    .collect();
                let f: f64 = blocks.iter().zip(&zs).map(|(b, z)| dot(&b.obj, z)).sum();
                if f < best_primal {
                    best_primal = f;
                    best_z = Some(zs);
                    best_duals = e_hi.duals.clone();
                    best_lambda = *l_hi;
                }
                // Cutting plane: where the two bracketing pieces of g meet.
                let cross = (e_hi.primal - e_lo.primal) / denom;
                next = Some(if cross > *l_lo && cross < *l_hi { cross } else { 0.5 * (l_lo + l_hi) });
            }
        }

        let gap = best_primal - best_dual;
        if best_primal.is_finite() && gap <= params.tolerance * best_primal.abs().max(1e-300) {
            converged = true;
            break;
        }
        lambda = match (next, &lo, &hi) {
            (Some(l), _, _) if l != lambda => l,
            (Some(_), Some((l_lo, _)), Some((l_hi, _))) => 0.5 * (l_lo + l_hi),
            // Still overspending: grow geometrically until the budget holds.
            (_, Some(_), None) => {
                if lambda == 0.0 {
                    lambda_0
                } else if lambda < f64::MAX / 4.0 {
                    2.0 * lambda
                } else {
                    break;
                }
            }
            _ => {
                let step = params.step_0 / (k as f64).sqrt();
                (lambda + step * over / scale).max(0.0)
            }
        };
    }

    if best_duals.is_empty() {
        // The cheapest point stayed the incumbent; report the multipliers
        // of the last probe that met the budget, or of the last probe.
        let (l, ev) = match (&hi, &lo) {
            (Some((l, e)), _) | (None, Some((l, e))) => (*l, e),
            (None, None) => unreachable!("at least one probe ran"),
        };
        best_lambda = l;
        best_duals = ev.duals.clone();
    }
    let zs = best_z.unwrap_or(block_z);
    let decision = assemble(state, &zs);
    let obj = objective(&decision, state);
    let max_v = max_violation(&decision, state, constraints);
    let feasible = max_v <= FEASIBILITY_TOL;
    let violated = per_block_violated(&decision, state, constraints);
    Ok(SolveReport {
        decision,
        objective: obj,
        budget_multiplier: best_lambda,
        local_multipliers: best_duals,
        dual_gap: (obj - best_dual).max(0.0),
        feasible,
        converged,
        iterations,
        trace,
        violated,
        max_violation: max_v,
    })
}

fn per_block_violated(d: &AggregationDecision, state: &EpochState, c: &Constraints) -> Vec<bool> {
    let v = crate::optimizer::problem::violations(d, state, c);
    let budget_bad = v[state.wbans.len()] > FEASIBILITY_TOL;
    v[..state.wbans.len()].iter().map(|x| *x > FEASIBILITY_TOL || budget_bad).collect()
}

/// Decision applied when no feasible point exists: the service floor is
/// dropped first; a block still infeasible takes its min-max-violation
/// point. When only the budget is out of reach, critical WBANs keep their
/// own optimum and the rest fall back to their cheapest point.
fn fallback(
    state: &EpochState,
    c: &Constraints,
    blocks: &[BlockLp],
    block_ok: &[bool],
    block_z: &[Vec<f64>],
    exec: Execution,
) -> SolveReport {
    let idx: Vec<usize> = (0..blocks.len()).collect();
    let zs: Vec<Vec<f64>> = par::map(exec, &idx, |&i| {
        let w = &state.wbans[i];
        if block_ok[i] {
            if w.critical {
                return block_z[i].clone();
            }
            let mut lp = blocks[i].lp.clone();
            lp.cost = blocks[i].cost.clone();
            let s = lp.solve();
            return if s.status == LpStatus::Optimal { s.z } else { block_z[i].clone() };
        }
        let relaxed = build_block(state, w, c, false);
        let s = solve_block(&relaxed, 0.0);
        if s.feasible {
            s.z
        } else {
            min_max_violation(&relaxed).1
        }
    });
    let decision = assemble(state, &zs);
    let obj = objective(&decision, state);
    let violated = per_block_violated(&decision, state, c);
    SolveReport {
        objective: obj,
        budget_multiplier: 0.0,
        local_multipliers: blocks.iter().map(|b| vec![0.0; b.lp.rows.len()]).collect(),
        dual_gap: 0.0,
        feasible: false,
        converged: false,
        iterations: 0,
        trace: Vec::new(),
        max_violation: max_violation(&decision, state, c),
        violated,
        decision,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::problem::fixtures::{simple_state, tradeoff_state};
    use crate::optimizer::problem::is_feasible;

    fn loose() -> Constraints {
        Constraints { cost_budget: 10.0, delay_floor: 0.0, energy_floor: 0.0, service_floor: 0.9 }
    }

    #[test]
    fn service_floor_binds_phase2() {
        let s = simple_state(1, 1e6);
        let r = solve(&s, &loose(), &SolverParams::default()).unwrap();
        assert!(r.feasible);
        assert!((r.decision.phase2_fraction[0] - 0.9).abs() < 1e-9);
        // Phase I only has to cover what Phase II forwards.
        assert!((r.decision.phase1_fraction[0] - 0.9).abs() < 1e-9);
        assert!(r.dual_gap <= 1e-4 * r.objective);
        assert!(r.multipliers().iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn energy_floor_above_scaling_is_infeasible() {
        let s = simple_state(2, 1e6);
        let c = Constraints { energy_floor: 1.5, ..loose() };
        let r = solve(&s, &c, &SolverParams::default()).unwrap();
        assert!(!r.feasible);
        assert!(r.violated.iter().all(|v| *v));
        assert!(r.decision.is_valid());
    }

    #[test]
    fn unconstrained_is_all_zero() {
        let s = simple_state(2, 1e6);
        let c = Constraints { service_floor: 0.0, ..loose() };
        let r = solve(&s, &c, &SolverParams::default()).unwrap();
        assert!(r.decision.flatten().iter().all(|v| *v == 0.0));
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn binding_budget_is_met_exactly() {
        let mut s = tradeoff_state();
        s.wbans.push(s.wbans[0].clone());
        s.wbans[1].critical = true;
        let c = Constraints { cost_budget: 0.0178, ..loose() };
        let free = solve(&s, &loose(), &SolverParams::default()).unwrap();
        let r = solve(&s, &c, &SolverParams::default()).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!(r.converged);
        assert!(is_feasible(&r.decision, &s, &c));
        assert!(r.budget_multiplier > 0.0);
        assert!(r.objective > free.objective);
        for it in &r.trace {
            assert!(it.multiplier >= 0.0);
            assert!(it.dual_value <= r.objective * (1.0 + 1e-9));
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let s = simple_state(3, 7e5);
        let a = solve(&s, &loose(), &SolverParams::default()).unwrap();
        let b = solve(&s, &loose(), &SolverParams::default()).unwrap();
        assert_eq!(a, b);
    }
}

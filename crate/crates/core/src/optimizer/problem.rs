//! The per-epoch aggregation problem: state snapshot, decision, objective and
//! an independent constraint checker.
//!
//! Decision variables are one Phase I fraction per sensor and one Phase II
//! fraction per LMU. Everything the objective and constraints need scales
//! linearly with those fractions:
//!
//! * sensor `s` transmits `x_s · v_s` bits, of which `x_s · v_s · (1 - L_s)`
//!   are expected to reach the LMU;
//! * the LMU forwards `y · B` bits, where `B = min(occupancy + Σ expected
//!   arrivals, processing capacity)` is fixed at decision time.

use crate::error::{ModelError, Result};
use crate::model::{delay_weight, DelayBreakdown};

/// Feasibility tolerance on normalized violations.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorState {
    /// Buffered bits available to send this epoch.
    pub volume: f64,
    pub loss: f64,
    /// Sum of the sensor's quality weights.
    pub weight: f64,
    /// J/bit at the current link distance.
    pub tx_energy_per_bit: f64,
    pub energy_residual: f64,
    pub energy_initial: f64,
    /// False for sensors that must not transmit (dead or retired at the
    /// energy floor); their energy row is not enforced.
    pub alive: bool,
}

impl SensorState {
    pub fn expected_arrival(&self) -> f64 {
        self.volume * (1.0 - self.loss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmuState {
    pub occupancy: f64,
    pub buffer_total: f64,
    /// Bits the LMU can aggregate in one epoch.
    pub capacity: f64,
    /// bits/s
    pub service_rate: f64,
    pub loss: f64,
    pub weight: f64,
    pub tx_energy_per_bit: f64,
    pub rx_energy_per_bit: f64,
    pub energy_residual: f64,
    pub energy_initial: f64,
    /// Propagation, transmission and aggregation delay; queueing is derived.
    pub base_delay: DelayBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WbanState {
    pub sensors: Vec<SensorState>,
    pub lmu: LmuState,
    pub critical: bool,
}

impl WbanState {
    pub fn expected_arrivals(&self, x: &[f64]) -> f64 {
        self.sensors.iter().zip(x).map(|(s, xs)| s.expected_arrival() * xs).sum()
    }

    /// Volume the LMU could forward at full Phase II aggregation.
    pub fn phase2_base(&self) -> f64 {
        let full: f64 = self.sensors.iter().filter(|s| s.alive).map(SensorState::expected_arrival).sum();
        (self.lmu.occupancy + full).min(self.lmu.capacity).max(0.0)
    }

    pub fn base_delay_sum(&self) -> f64 {
        let d = &self.lmu.base_delay;
        d.propagation + d.transmission + d.aggregation
    }

    /// Bits left queued at the LMU after applying `(x, y)`.
    pub fn queue_after(&self, x: &[f64], y: f64) -> f64 {
        self.lmu.occupancy + self.expected_arrivals(x) - y * self.phase2_base()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochState {
    pub wbans: Vec<WbanState>,
    pub price_intra: f64,
    pub price_inter: f64,
    /// Cost units per quality-weighted bit.
    pub c_units: f64,
    pub energy_scaling: f64,
    /// Phase II is not optimized; every LMU forwards at fraction 1.
    pub phase2_fixed: bool,
}

impl EpochState {
    pub fn n_sensors(&self) -> usize {
        self.wbans.iter().map(|w| w.sensors.len()).sum()
    }

    pub fn dimension(&self) -> usize {
        self.n_sensors() + self.wbans.len()
    }

    /// Offset of each WBAN's first sensor in the flattened Phase I vector.
    pub fn sensor_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.wbans.len());
        let mut acc = 0;
        for w in &self.wbans {
            off.push(acc);
            acc += w.sensors.len();
        }
        off
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    /// Per-epoch aggregation cost threshold.
    pub cost_budget: f64,
    pub delay_floor: f64,
    pub energy_floor: f64,
    /// Minimum forwarded share of the LMU's processable volume.
    pub service_floor: f64,
}

impl Default for Constraints {
    fn default() -> Self {
        Self { cost_budget: 1.0, delay_floor: 0.5, energy_floor: 0.1, service_floor: 0.9 }
    }
}

impl Constraints {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.cost_budget, self.delay_floor, self.energy_floor, self.service_floor];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParameter("constraints must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.service_floor) {
            return Err(ModelError::InvalidParameter("service floor outside [0,1]".into()));
        }
        if self.cost_budget < 0.0 {
            return Err(ModelError::InvalidParameter("cost budget must be non-negative".into()));
        }
        Ok(())
    }

    /// Largest LMU queue (bits) compatible with the delay floor.
    pub fn queue_cap(&self, w: &WbanState) -> f64 {
        if self.delay_floor <= 0.0 {
            f64::INFINITY
        } else if self.delay_floor >= 1.0 {
            0.0
        } else {
            w.lmu.service_rate * w.base_delay_sum() * (1.0 - self.delay_floor) / self.delay_floor
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationDecision {
    pub phase1_fraction: Vec<f64>,
    pub phase2_fraction: Vec<f64>,
}

impl AggregationDecision {
    pub fn uniform(state: &EpochState, value: f64) -> Self {
        Self {
            phase1_fraction: vec![value; state.n_sensors()],
            phase2_fraction: vec![value; state.wbans.len()],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.phase1_fraction.iter().chain(&self.phase2_fraction).all(|f| (0.0..=1.0).contains(f))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.phase1_fraction.iter().chain(&self.phase2_fraction).copied().collect()
    }

    pub fn from_flat(state: &EpochState, z: &[f64]) -> Self {
        let n = state.n_sensors();
        Self { phase1_fraction: z[..n].to_vec(), phase2_fraction: z[n..].to_vec() }
    }
}

/// Objective and budget-row coefficients of one WBAN block, ordered as the
/// sensors' Phase I fractions followed by the LMU's Phase II fraction.
pub fn block_coefficients(state: &EpochState, w: &WbanState) -> (Vec<f64>, Vec<f64>) {
    let base = w.phase2_base();
    let mut obj = Vec::with_capacity(w.sensors.len() + 1);
    let mut cost = Vec::with_capacity(w.sensors.len() + 1);
    for s in &w.sensors {
        obj.push((state.c_units * s.weight + state.price_intra) * s.volume);
        cost.push(state.price_intra * s.volume);
    }
    obj.push((state.c_units * w.lmu.weight + state.price_inter) * base);
    cost.push(state.price_inter * base);
    (obj, cost)
}

/// Quality term, intra cost and inter cost of a decision for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveParts {
    pub zeta: f64,
    pub cost_intra: f64,
    pub cost_inter: f64,
}

impl ObjectiveParts {
    pub fn total(&self, c_units: f64) -> f64 {
        c_units * self.zeta + self.cost_intra + self.cost_inter
    }
}

pub fn objective_parts(decision: &AggregationDecision, state: &EpochState) -> ObjectiveParts {
    let offsets = state.sensor_offsets();
    let mut parts = ObjectiveParts::default();
    for (b, w) in state.wbans.iter().enumerate() {
        let x = &decision.phase1_fraction[offsets[b]..offsets[b] + w.sensors.len()];
        let y = decision.phase2_fraction[b];
        let forwarded = y * w.phase2_base();
        for (s, xs) in w.sensors.iter().zip(x) {
            let sent = xs * s.volume;
            parts.zeta += s.weight * sent;
            parts.cost_intra += state.price_intra * sent;
        }
        parts.zeta += w.lmu.weight * forwarded;
        parts.cost_inter += state.price_inter * forwarded;
    }
    parts
}

/// Σ_t U_t for a single-epoch horizon.
pub fn objective(decision: &AggregationDecision, state: &EpochState) -> f64 {
    objective_parts(decision, state).total(state.c_units)
}

/// Largest normalized constraint violation of one WBAN block under
/// `(x, y)`, and the block's contribution to the shared budget.
pub fn block_violation(state: &EpochState, w: &WbanState, x: &[f64], y: f64, c: &Constraints) -> (f64, f64) {
    let scaling = state.energy_scaling;
    let base = w.phase2_base();
    let mut worst: f64 = 0.0;
    let mut spend = 0.0;

    for (s, xs) in w.sensors.iter().zip(x) {
        spend += state.price_intra * xs * s.volume;
        if !s.alive {
            // Retired sensors only have to stay silent.
            worst = worst.max(*xs);
            continue;
        }
        let spent = xs * s.volume * s.tx_energy_per_bit;
        let left = s.energy_residual - spent;
        let ew = scaling * left / s.energy_initial;
        worst = worst.max(c.energy_floor - ew);
    }

    let arrivals = w.expected_arrivals(x);
    let forwarded = y * base;
    let lmu_spent = arrivals * w.lmu.rx_energy_per_bit + forwarded * w.lmu.tx_energy_per_bit;
    let lmu_ew = scaling * (w.lmu.energy_residual - lmu_spent) / w.lmu.energy_initial;
    worst = worst.max(c.energy_floor - lmu_ew);

    let available = w.lmu.occupancy + arrivals;
    // With Phase II fixed the LMU forwards in full, or whatever it holds.
    let moved = if state.phase2_fixed {
        worst = worst.max(1.0 - y);
        forwarded.min(available)
    } else {
        worst = worst.max((forwarded - available) / available.max(1.0));
        forwarded
    };
    let queue = available - moved;
    worst = worst.max((queue - w.lmu.buffer_total) / w.lmu.buffer_total);

    if c.delay_floor > 0.0 {
        let d = &w.lmu.base_delay;
        let breakdown = DelayBreakdown::new(
            d.propagation,
            d.transmission,
            d.aggregation,
            queue.max(0.0) / w.lmu.service_rate,
        );
        let dw = delay_weight(&breakdown).unwrap_or(0.0);
        worst = worst.max(c.delay_floor - dw);
    }
    if base > 0.0 {
        worst = worst.max(c.service_floor - moved / base);
    }
    spend += state.price_inter * forwarded;
    (worst, spend)
}

/// Normalized violation of the shared cost budget.
pub fn budget_violation(total_cost: f64, c: &Constraints) -> f64 {
    if c.cost_budget > 0.0 {
        (total_cost - c.cost_budget) / c.cost_budget
    } else {
        total_cost
    }
}

/// Largest normalized constraint violation of each WBAN block (index
/// `wbans.len()` holds the shared budget), computed from physical
/// quantities rather than from the solver's row matrix.
pub fn violations(decision: &AggregationDecision, state: &EpochState, c: &Constraints) -> Vec<f64> {
    let offsets = state.sensor_offsets();
    let mut out = Vec::with_capacity(state.wbans.len() + 1);
    let mut total_cost = 0.0;
    for (b, w) in state.wbans.iter().enumerate() {
        let x = &decision.phase1_fraction[offsets[b]..offsets[b] + w.sensors.len()];
        let (worst, spend) = block_violation(state, w, x, decision.phase2_fraction[b], c);
        total_cost += spend;
        out.push(worst);
    }
    out.push(budget_violation(total_cost, c));
    out
}

pub fn max_violation(decision: &AggregationDecision, state: &EpochState, c: &Constraints) -> f64 {
    violations(decision, state, c).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_feasible(decision: &AggregationDecision, state: &EpochState, c: &Constraints) -> bool {
    max_violation(decision, state, c) <= FEASIBILITY_TOL
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// One WBAN, lossless, energy-rich, `n` sensors of `volume` bits each.
    pub fn simple_state(n: usize, volume: f64) -> EpochState {
        let sensors = (0..n)
            .map(|_| SensorState {
                volume,
                loss: 0.0,
                weight: 3.0,
                tx_energy_per_bit: 1e-9,
                energy_residual: 100.0,
                energy_initial: 100.0,
                alive: true,
            })
            .collect();
        EpochState {
            wbans: vec![WbanState {
                sensors,
                lmu: LmuState {
                    occupancy: 0.0,
                    buffer_total: 1e9,
                    capacity: 1e9,
                    service_rate: 1e9,
                    loss: 0.0,
                    weight: 3.0,
                    tx_energy_per_bit: 1e-9,
                    rx_energy_per_bit: 1e-9,
                    energy_residual: 100.0,
                    energy_initial: 100.0,
                    base_delay: DelayBreakdown::new(0.0, 1.0, 1.0, 0.0),
                },
                critical: false,
            }],
            price_intra: 2e-9,
            price_inter: 4e-9,
            c_units: 1e-9,
            energy_scaling: 1.0,
            phase2_fixed: false,
        }
    }
    /// Lossy low-weight sensor against a clean high-weight one: the
    /// objective prefers the first, the budget the second, so a budget in
    /// (0.0088, 0.0091) binds.
    pub fn tradeoff_state() -> EpochState {
        let mut s = simple_state(2, 1e6);
        s.wbans[0].sensors[0].weight = 0.5;
        s.wbans[0].sensors[0].loss = 0.5;
        s.wbans[0].sensors[1].weight = 4.0;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::simple_state;
    use super::*;

    #[test]
    fn zero_decision_has_zero_objective() {
        let s = simple_state(3, 1e6);
        assert_eq!(objective(&AggregationDecision::uniform(&s, 0.0), &s), 0.0);
    }

    #[test]
    fn full_decision_composes_quality_and_cost() {
        // One sensor, 1e6 bits, weights summing to 1.75 on both hops.
        let mut s = simple_state(1, 1e6);
        s.wbans[0].sensors[0].weight = 1.75;
        s.wbans[0].lmu.weight = 1.75;
        let d = AggregationDecision::uniform(&s, 1.0);
        let parts = objective_parts(&d, &s);
        assert!((parts.zeta - 3.5e6).abs() < 1e-6);
        assert!((parts.cost_intra + parts.cost_inter - 0.006).abs() < 1e-15);
        let expected = 1e-9 * 3.5e6 + 0.006;
        assert!((objective(&d, &s) - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn monotone_in_each_fraction() {
        let s = simple_state(3, 2e5);
        let mut d = AggregationDecision::uniform(&s, 0.3);
        let base = objective(&d, &s);
        for i in 0..3 {
            d.phase1_fraction[i] = 0.8;
            assert!(objective(&d, &s) >= base);
        }
        d.phase2_fraction[0] = 0.9;
        assert!(objective(&d, &s) >= base);
    }

    #[test]
    fn checker_flags_service_and_energy() {
        let s = simple_state(1, 1e6);
        let c = Constraints { cost_budget: 10.0, delay_floor: 0.0, energy_floor: 0.0, service_floor: 0.9 };
        let mut d = AggregationDecision::uniform(&s, 1.0);
        assert!(is_feasible(&d, &s, &c));
        d.phase2_fraction[0] = 0.5;
        assert!(!is_feasible(&d, &s, &c));
        let starving = Constraints { energy_floor: 1.5, ..c };
        assert!(!is_feasible(&AggregationDecision::uniform(&s, 0.0), &s, &starving));
    }
}

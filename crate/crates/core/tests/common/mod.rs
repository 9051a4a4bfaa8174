#![allow(dead_code)]

use std::path::PathBuf;

use deba::model::DelayBreakdown;
use deba::optimizer::{AggregationDecision, Constraints, EpochState, LmuState, SensorState, WbanState};
use rand::Rng;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

pub fn random_wban<R: Rng>(rng: &mut R, n_sensors: usize) -> WbanState {
    let sensors = (0..n_sensors)
        .map(|_| SensorState {
            volume: rng.random_range(1e4..2e5),
            loss: rng.random_range(0.0..0.3),
            weight: rng.random_range(0.5..3.0),
            tx_energy_per_bit: rng.random_range(1.7e-8..2.5e-8),
            energy_residual: rng.random_range(0.05..0.5),
            energy_initial: 0.5,
            alive: rng.random::<f64>() > 0.1,
        })
        .collect();
    let capacity = rng.random_range(1e5..5e5);
    WbanState {
        sensors,
        lmu: LmuState {
            occupancy: rng.random_range(0.0..2e5),
            buffer_total: rng.random_range(3e5..1e6),
            capacity,
            service_rate: capacity,
            loss: rng.random_range(0.0..0.3),
            weight: rng.random_range(0.5..3.0),
            tx_energy_per_bit: rng.random_range(1.7e-8..3e-8),
            rx_energy_per_bit: 3.61e-8,
            energy_residual: rng.random_range(0.02..4.0),
            energy_initial: 4.0,
            base_delay: DelayBreakdown::new(1e-6, 0.1, rng.random_range(0.5..4.0), 0.0),
        },
        critical: rng.random::<f64>() > 0.5,
    }
}

pub fn random_state<R: Rng>(rng: &mut R, n_wbans: usize, max_sensors: usize) -> EpochState {
    EpochState {
        wbans: (0..n_wbans)
            .map(|_| {
                let n = rng.random_range(1..=max_sensors);
                random_wban(rng, n)
            })
            .collect(),
        price_intra: 2e-9,
        price_inter: 4e-9,
        c_units: 1e-9,
        energy_scaling: 1.0,
        phase2_fixed: rng.random::<f64>() < 0.2,
    }
}

/// Limits drawn so that some instances are slack, some binding and some
/// infeasible. The budget is a fraction of the all-ones spend; the floors
/// are two-decimal values, like those in a configuration file.
pub fn random_constraints<R: Rng>(rng: &mut R, state: &EpochState) -> Constraints {
    let ones = AggregationDecision::uniform(state, 1.0);
    let parts = deba::optimizer::objective_parts(&ones, state);
    let full_spend = parts.cost_intra + parts.cost_inter;
    Constraints {
        cost_budget: full_spend * rng.random_range(0.5..1.1),
        delay_floor: rng.random_range(0..=60) as f64 / 100.0,
        energy_floor: rng.random_range(0..=30) as f64 / 100.0,
        service_floor: rng.random_range(30..=95) as f64 / 100.0,
    }
}

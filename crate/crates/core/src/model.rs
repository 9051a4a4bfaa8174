//! Domain entities and the quality-weighted aggregation formulas.
//!
//! Every function here is pure. The three quality weights (delay, energy,
//! buffer) are summed and multiplied by a traffic volume to give the
//! per-epoch quality term that enters the optimizer objective.

use crate::error::{ModelError, Result};

/// Planar coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorKind {
    Ecg,
    Eeg,
    Emg,
    Motion,
    Glucose,
}

impl SensorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensorKind::Ecg => "ECG",
            SensorKind::Eeg => "EEG",
            SensorKind::Emg => "EMG",
            SensorKind::Motion => "Motion",
            SensorKind::Glucose => "Glucose",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ecg" => Some(SensorKind::Ecg),
            "eeg" => Some(SensorKind::Eeg),
            "emg" => Some(SensorKind::Emg),
            "motion" => Some(SensorKind::Motion),
            "glucose" => Some(SensorKind::Glucose),
            _ => None,
        }
    }
}

/// Battery state shared by sensors and LMUs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyState {
    pub initial: f64,
    pub residual: f64,
    pub alive: bool,
}

impl EnergyState {
    pub fn full(initial: f64) -> Self {
        Self { initial, residual: initial, alive: initial > 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: usize,
    pub kind: SensorKind,
    /// Body-local offset from the WBAN origin, meters.
    pub position: Point,
    /// bits/s
    pub data_rate: f64,
    pub buffer_total: f64,
    pub buffer_occupied: f64,
    pub energy: EnergyState,
}

/// Local Managing Unit: the per-WBAN hub.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmu {
    pub id: usize,
    pub position: Point,
    pub buffer_total: f64,
    pub buffer_occupied: f64,
    pub energy: EnergyState,
    /// Aggregation processing rate, bits/s.
    pub service_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wban {
    pub id: usize,
    pub sensors: Vec<SensorNode>,
    pub lmu: Lmu,
    pub criticality: f64,
    /// Field-level position, meters.
    pub position: Point,
    pub velocity: Point,
    pub group: usize,
    pub mobile: bool,
    pub alpha_intra: f64,
    pub alpha_inter: f64,
}

impl Wban {
    pub fn is_critical(&self) -> bool {
        self.criticality > 0.5
    }

    pub fn alive(&self) -> bool {
        self.lmu.energy.alive
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub id: usize,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityWeights {
    pub delay_weight: f64,
    pub energy_weight: f64,
    pub buffer_weight: f64,
    pub scaling_factor: f64,
}

impl QualityWeights {
    pub fn new(delay: f64, energy: f64, buffer: f64, scaling: f64) -> Result<Self> {
        let w = Self {
            delay_weight: delay,
            energy_weight: energy,
            buffer_weight: buffer,
            scaling_factor: scaling,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.delay_weight, self.energy_weight, self.buffer_weight, self.scaling_factor];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Domain("quality weights must be finite"));
        }
        if !(0.0..=1.0).contains(&self.delay_weight) || !(0.0..=1.0).contains(&self.buffer_weight) {
            return Err(ModelError::Domain("delay/buffer weight outside [0,1]"));
        }
        if self.energy_weight < 0.0 || self.energy_weight > self.scaling_factor {
            return Err(ModelError::Domain("energy weight outside [0, scaling]"));
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.delay_weight + self.energy_weight + self.buffer_weight
    }
}

/// Delay components in seconds. `total` is kept as a field so callers can
/// detect an inconsistent breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayBreakdown {
    pub propagation: f64,
    pub transmission: f64,
    pub aggregation: f64,
    pub queueing: f64,
    pub total: f64,
}

impl DelayBreakdown {
    pub fn new(propagation: f64, transmission: f64, aggregation: f64, queueing: f64) -> Self {
        Self {
            propagation,
            transmission,
            aggregation,
            queueing,
            total: propagation + transmission + aggregation + queueing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosState {
    /// bits/epoch
    pub required: f64,
    pub present: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub gamma: f64,
    pub chunk_cost: f64,
    pub chunk_size: f64,
    pub price_intra: f64,
    pub price_inter: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { gamma: 1.0, chunk_cost: 0.01, chunk_size: 1e6, price_intra: 2e-9, price_inter: 4e-9 }
    }
}

impl CostParams {
    /// Number of chunks needed to carry `volume` bits.
    pub fn chunks_for(&self, volume: f64) -> u64 {
        if volume <= 0.0 {
            0
        } else {
            (volume / self.chunk_size).ceil() as u64
        }
    }
}

/// Share of the total delay that is not queueing. An idle link (all
/// components zero) scores 1.
pub fn delay_weight(d: &DelayBreakdown) -> Result<f64> {
    let parts = [d.propagation, d.transmission, d.aggregation, d.queueing];
    if parts.iter().any(|v| *v < 0.0 || !v.is_finite()) || d.total < 0.0 {
        return Err(ModelError::Domain("delay components must be finite and non-negative"));
    }
    let numerator = d.propagation + d.transmission + d.aggregation;
    if d.total == 0.0 {
        if parts.iter().any(|v| *v > 0.0) {
            return Err(ModelError::ZeroTotal);
        }
        return Ok(1.0);
    }
    Ok((numerator / d.total).clamp(0.0, 1.0))
}

pub fn energy_weight(energy_residual: f64, energy_initial: f64, scaling: f64) -> Result<f64> {
    if energy_initial <= 0.0 {
        return Err(ModelError::Domain("initial energy must be positive"));
    }
    if scaling <= 0.0 {
        return Err(ModelError::Domain("scaling factor must be positive"));
    }
    if energy_residual < 0.0 || energy_residual > energy_initial {
        return Err(ModelError::Domain("residual energy outside [0, initial]"));
    }
    Ok(scaling * energy_residual / energy_initial)
}

pub fn buffer_weight(buffer_total: f64, buffer_occupied: f64) -> Result<f64> {
    if buffer_total <= 0.0 {
        return Err(ModelError::Domain("buffer size must be positive"));
    }
    if buffer_occupied < 0.0 || buffer_occupied > buffer_total {
        return Err(ModelError::Domain("buffer occupancy outside [0, total]"));
    }
    Ok((buffer_total - buffer_occupied) / buffer_total)
}

/// One sensor link as seen by the traffic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficLink {
    pub connected: bool,
    /// bits/s
    pub rate: f64,
    pub loss: f64,
}

/// Offered traffic of one WBAN over an epoch: accumulated traffic plus the
/// loss-thinned generation of every connected link.
pub fn aggregated_traffic(links: &[TrafficLink], base_traffic: f64, epoch_length: f64) -> Result<f64> {
    let mut total = 0.0;
    for link in links {
        if !(0.0..=1.0).contains(&link.loss) {
            return Err(ModelError::Domain("loss probability outside [0,1]"));
        }
        if link.connected {
            total += base_traffic + link.rate * epoch_length * (1.0 - link.loss);
        }
    }
    Ok(total)
}

pub fn quality_term(weights: &QualityWeights, traffic: f64) -> f64 {
    weights.sum() * traffic
}

pub fn aggregation_function(weights: &[QualityWeights], traffic: &[f64]) -> Result<f64> {
    if weights.len() != traffic.len() {
        return Err(ModelError::LengthMismatch { expected: weights.len(), got: traffic.len() });
    }
    Ok(weights.iter().zip(traffic).map(|(w, z)| quality_term(w, *z)).sum())
}

/// Chunk-priced aggregation cost with a uniform per-chunk price.
pub fn aggregation_cost(params: &CostParams, chunk_counts: &[u64], agg_values: &[f64]) -> Result<f64> {
    if chunk_counts.len() != agg_values.len() {
        return Err(ModelError::LengthMismatch { expected: chunk_counts.len(), got: agg_values.len() });
    }
    Ok(chunk_counts
        .iter()
        .zip(agg_values)
        .map(|(k, f)| params.gamma * params.chunk_cost * (*k as f64) * f)
        .sum())
}

/// Relative QoS shortfall summed over epochs, scaled by the aggregation cost.
/// Over-provisioned epochs contribute zero.
pub fn qos_deficit(qos: &[QosState], cost: f64) -> Result<f64> {
    let mut ratio = 0.0;
    for q in qos {
        if q.required <= 0.0 {
            return Err(ModelError::Domain("required QoS must be positive"));
        }
        ratio += ((q.required - q.present) / q.required).max(0.0);
    }
    Ok(ratio * cost)
}

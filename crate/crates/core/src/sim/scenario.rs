use crate::channel::RadioParams;
use crate::error::ConfigError;
use crate::mobility::MobilityParams;
use crate::model::{CostParams, Point, SensorKind};
use crate::optimizer::{Constraints, SolverParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Phase I optimized; LMUs forward everything they can.
    DebaP1,
    DebaP1P2,
    NoOpt,
    GreedyBaseline,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::DebaP1, Mode::DebaP1P2, Mode::NoOpt, Mode::GreedyBaseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::DebaP1 => "deba-p1",
            Mode::DebaP1P2 => "deba-p1p2",
            Mode::NoOpt => "no-opt",
            Mode::GreedyBaseline => "greedy",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn optimized(self) -> bool {
        matches!(self, Mode::DebaP1 | Mode::DebaP1P2)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSpec {
    pub kind: SensorKind,
    /// bits/s
    pub data_rate: f64,
    /// Body-local position in centimeters.
    pub position_cm: Point,
}

impl SensorSpec {
    pub const fn new(kind: SensorKind, data_rate: f64, x_cm: f64, y_cm: f64) -> Self {
        Self { kind, data_rate, position_cm: Point::new(x_cm, y_cm) }
    }
}

/// The eight body sensors of the reference WBAN.
pub fn default_sensor_table() -> Vec<SensorSpec> {
    use SensorKind::*;
    vec![
        SensorSpec::new(Ecg, 71e3, 15.0, 78.0),
        SensorSpec::new(Motion, 35e3, 20.0, 52.0),
        SensorSpec::new(Eeg, 43.2e3, 57.0, 90.0),
        SensorSpec::new(Glucose, 1.6e3, 44.0, 108.0),
        SensorSpec::new(Emg, 100e3, 17.0, 99.0),
        SensorSpec::new(Emg, 100e3, 22.0, 120.0),
        SensorSpec::new(Motion, 35e3, 34.0, 0.0),
        SensorSpec::new(Motion, 35e3, 50.0, 0.0),
    ]
}

/// Link quality and capacity for both hops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// m
    pub intra_reference_distance: f64,
    pub intra_outage_scale: f64,
    /// bits/s
    pub intra_rate: f64,
    /// m
    pub inter_reference_distance: f64,
    pub inter_outage_scale: f64,
    /// bits/s
    pub inter_rate: f64,
    pub shadowing_sigma_db: f64,
    /// Outage-scale multiplier for WBANs that move.
    pub mobile_outage_multiplier: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            intra_reference_distance: 1.0,
            intra_outage_scale: 0.1,
            intra_rate: 971.4e3,
            inter_reference_distance: 1000.0,
            inter_outage_scale: 0.1,
            inter_rate: 10e6,
            shadowing_sigma_db: 4.0,
            mobile_outage_multiplier: 1.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmuParams {
    pub energy: f64,
    pub buffer: f64,
    /// Aggregation throughput, bits/s.
    pub service_rate: f64,
    pub position_cm: Point,
}

impl Default for LmuParams {
    fn default() -> Self {
        Self { energy: 4.0, buffer: 4e6, service_rate: 256e3, position_cm: Point::new(35.0, 60.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_wbans: usize,
    pub sensors_per_wban: usize,
    pub n_bs: usize,
    /// s
    pub duration: f64,
    /// s
    pub epoch_length: f64,
    /// bits
    pub packet_size: f64,
    /// packets/s
    pub packet_rate: f64,
    /// Sensor `k` of every WBAN uses entry `k % len`.
    pub sensor_table: Vec<SensorSpec>,
    pub sensor_buffer: f64,
    pub sensor_energy: f64,
    pub lmu: LmuParams,
    pub radio: RadioParams,
    pub links: LinkParams,
    pub mobility: MobilityParams,
    pub costs: CostParams,
    pub constraints: Constraints,
    pub solver: SolverParams,
    /// Cost units per quality-weighted bit.
    pub c_units: f64,
    /// Upper end of the energy weight.
    pub energy_scaling: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            n_wbans: 400,
            sensors_per_wban: 8,
            n_bs: 15,
            duration: 3600.0,
            epoch_length: 1.0,
            packet_size: 1e6,
            packet_rate: 6.0,
            sensor_table: default_sensor_table(),
            sensor_buffer: 8e6,
            sensor_energy: 0.5,
            lmu: LmuParams::default(),
            radio: RadioParams::default(),
            links: LinkParams::default(),
            mobility: MobilityParams::default(),
            costs: CostParams::default(),
            constraints: Constraints::default(),
            solver: SolverParams::default(),
            c_units: 1e-9,
            energy_scaling: 1.0,
            mode: Mode::DebaP1P2,
            seed: 1,
        }
    }
}

impl Scenario {
    /// 40 WBANs, 5 base stations, 300 one-second epochs.
    pub fn desk_scale() -> Self {
        Self { n_wbans: 40, n_bs: 5, duration: 300.0, ..Self::default() }
    }

    pub fn epochs(&self) -> usize {
        (self.duration / self.epoch_length).round() as usize
    }

    /// Sets the run length to `epochs` epochs.
    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.duration = epochs as f64 * self.epoch_length;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Validation(m.to_string()));
        if self.n_wbans == 0 {
            return bad("n_wbans must be at least 1");
        }
        if self.sensors_per_wban == 0 {
            return bad("sensors_per_wban must be at least 1");
        }
        if self.n_bs == 0 {
            return bad("n_bs must be at least 1");
        }
        if self.sensor_table.is_empty() {
            return bad("sensor table must not be empty");
        }
        if !(self.epoch_length > 0.0 && self.epoch_length.is_finite()) {
            return bad("epoch_length_s must be positive");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration_s must be positive");
        }
        let ratio = self.duration / self.epoch_length;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad("duration_s must be a multiple of epoch_length_s");
        }
        let positive = [
            ("packet_size_bits", self.packet_size),
            ("packet_rate", self.packet_rate),
            ("sensor_buffer_bits", self.sensor_buffer),
            ("sensor_energy_j", self.sensor_energy),
            ("lmu.energy_j", self.lmu.energy),
            ("lmu.buffer_bits", self.lmu.buffer),
            ("lmu.service_rate_bps", self.lmu.service_rate),
            ("radio.intra_reference_m", self.links.intra_reference_distance),
            ("radio.inter_reference_m", self.links.inter_reference_distance),
            ("radio.intra_rate_bps", self.links.intra_rate),
            ("radio.inter_rate_bps", self.links.inter_rate),
            ("energy_scaling", self.energy_scaling),
            ("costs.chunk_size_bits", self.costs.chunk_size),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        let non_negative = [
            ("radio.intra_outage_scale", self.links.intra_outage_scale),
            ("radio.inter_outage_scale", self.links.inter_outage_scale),
            ("radio.shadowing_sigma_db", self.links.shadowing_sigma_db),
            ("radio.mobile_outage_multiplier", self.links.mobile_outage_multiplier),
            ("costs.price_intra", self.costs.price_intra),
            ("costs.price_inter", self.costs.price_inter),
            ("costs.gamma", self.costs.gamma),
            ("costs.chunk_cost", self.costs.chunk_cost),
            ("c_units", self.c_units),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        for (k, s) in self.sensor_table.iter().enumerate() {
            if !(s.data_rate > 0.0 && s.data_rate.is_finite()) {
                return bad(&format!("sensor.{k}.rate_bps must be positive"));
            }
            if !(s.position_cm.x.is_finite() && s.position_cm.y.is_finite()) {
                return bad(&format!("sensor.{k} position must be finite"));
            }
        }
        self.radio.validate().map_err(ConfigError::Validation)?;
        self.mobility.validate().map_err(ConfigError::Validation)?;
        self.constraints.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
        if self.solver.max_iterations == 0 {
            return bad("solver.max_iterations must be at least 1");
        }
        if !(self.solver.tolerance > 0.0 && self.solver.step_0 > 0.0) {
            return bad("solver tolerance and step_0 must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Scenario::default().validate().unwrap();
        Scenario::desk_scale().validate().unwrap();
        assert_eq!(Scenario::default().epochs(), 3600);
        assert_eq!(Scenario::desk_scale().with_epochs(7).epochs(), 7);
    }

    #[test]
    fn rejects_zero_counts_and_ragged_duration() {
        let s = Scenario { n_wbans: 0, ..Scenario::default() };
        assert!(s.validate().is_err());
        let s = Scenario { duration: 10.5, ..Scenario::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn modes_round_trip() {
        for m in Mode::ALL {
            assert_eq!(Mode::parse(m.as_str()), Some(m));
        }
        assert_eq!(Mode::parse("ddml"), None);
    }
}

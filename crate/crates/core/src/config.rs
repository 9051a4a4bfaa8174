//! Flat `key = value` scenario files.
//!
//! Blank lines and `#` comments are ignored. Keys are grouped by prefix
//! (`radio.`, `mobility.`, `costs.`, `constraints.`, `solver.`, `lmu.`,
//! `sensor.K.`); anything not listed in [`KEYS`] is rejected. Missing keys
//! keep their defaults. A file that mentions any `sensor.K.*` key replaces
//! the whole sensor table, so every entry `0..n` must be given in full.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ConfigError, Error};
use crate::model::{Point, SensorKind};
use crate::sim::{Mode, Scenario, SensorSpec};

enum Slot<'a> {
    F64(&'a mut f64),
    Usize(&'a mut usize),
    U64(&'a mut u64),
    Mode(&'a mut Mode),
}

/// Every scalar key, in serialization order.
pub const KEYS: &[&str] = &[
    "n_wbans",
    "sensors_per_wban",
    "n_bs",
    "duration_s",
    "epoch_length_s",
    "packet_size_bits",
    "packet_rate",
    "sensor_buffer_bits",
    "sensor_energy_j",
    "c_units",
    "energy_scaling",
    "mode",
    "seed",
    "lmu.energy_j",
    "lmu.buffer_bits",
    "lmu.service_rate_bps",
    "lmu.x_cm",
    "lmu.y_cm",
    "radio.e_tx",
    "radio.e_rx",
    "radio.e_amp",
    "radio.alpha_intra_min",
    "radio.alpha_intra_max",
    "radio.alpha_inter_min",
    "radio.alpha_inter_max",
    "radio.tx_power_mobile_w",
    "radio.tx_power_static_w",
    "radio.intra_reference_m",
    "radio.intra_outage_scale",
    "radio.intra_rate_bps",
    "radio.inter_reference_m",
    "radio.inter_outage_scale",
    "radio.inter_rate_bps",
    "radio.shadowing_sigma_db",
    "radio.mobile_outage_multiplier",
    "mobility.area_x_m",
    "mobility.area_y_m",
    "mobility.v_min",
    "mobility.v_max",
    "mobility.group_count",
    "mobility.group_radius_m",
    "mobility.update_interval_s",
    "mobility.heading_persistence",
    "mobility.static_fraction",
    "costs.gamma",
    "costs.chunk_cost",
    "costs.chunk_size_bits",
    "costs.price_intra",
    "costs.price_inter",
    "constraints.cost_budget",
    "constraints.delay_floor",
    "constraints.energy_floor",
    "constraints.service_floor",
    "solver.max_iterations",
    "solver.tolerance",
    "solver.step_0",
];

fn slot<'a>(sc: &'a mut Scenario, key: &str) -> Option<Slot<'a>> {
    use Slot::*;
    Some(match key {
        "n_wbans" => Usize(&mut sc.n_wbans),
        "sensors_per_wban" => Usize(&mut sc.sensors_per_wban),
        "n_bs" => Usize(&mut sc.n_bs),
        "duration_s" => F64(&mut sc.duration),
        "epoch_length_s" => F64(&mut sc.epoch_length),
        "packet_size_bits" => F64(&mut sc.packet_size),
        "packet_rate" => F64(&mut sc.packet_rate),
        "sensor_buffer_bits" => F64(&mut sc.sensor_buffer),
        "sensor_energy_j" => F64(&mut sc.sensor_energy),
        "c_units" => F64(&mut sc.c_units),
        "energy_scaling" => F64(&mut sc.energy_scaling),
        "mode" => Mode(&mut sc.mode),
        "seed" => U64(&mut sc.seed),
        "lmu.energy_j" => F64(&mut sc.lmu.energy),
        "lmu.buffer_bits" => F64(&mut sc.lmu.buffer),
        "lmu.service_rate_bps" => F64(&mut sc.lmu.service_rate),
        "lmu.x_cm" => F64(&mut sc.lmu.position_cm.x),
        "lmu.y_cm" => F64(&mut sc.lmu.position_cm.y),
        "radio.e_tx" => F64(&mut sc.radio.e_tx),
        "radio.e_rx" => F64(&mut sc.radio.e_rx),
        "radio.e_amp" => F64(&mut sc.radio.e_amp),
        "radio.alpha_intra_min" => F64(&mut sc.radio.alpha_intra_min),
        "radio.alpha_intra_max" => F64(&mut sc.radio.alpha_intra_max),
        "radio.alpha_inter_min" => F64(&mut sc.radio.alpha_inter_min),
        "radio.alpha_inter_max" => F64(&mut sc.radio.alpha_inter_max),
        "radio.tx_power_mobile_w" => F64(&mut sc.radio.tx_power_mobile),
        "radio.tx_power_static_w" => F64(&mut sc.radio.tx_power_static),
        "radio.intra_reference_m" => F64(&mut sc.links.intra_reference_distance),
        "radio.intra_outage_scale" => F64(&mut sc.links.intra_outage_scale),
        "radio.intra_rate_bps" => F64(&mut sc.links.intra_rate),
        "radio.inter_reference_m" => F64(&mut sc.links.inter_reference_distance),
        "radio.inter_outage_scale" => F64(&mut sc.links.inter_outage_scale),
        "radio.inter_rate_bps" => F64(&mut sc.links.inter_rate),
        "radio.shadowing_sigma_db" => F64(&mut sc.links.shadowing_sigma_db),
        "radio.mobile_outage_multiplier" => F64(&mut sc.links.mobile_outage_multiplier),
        "mobility.area_x_m" => F64(&mut sc.mobility.area_x),
        "mobility.area_y_m" => F64(&mut sc.mobility.area_y),
        "mobility.v_min" => F64(&mut sc.mobility.v_min),
        "mobility.v_max" => F64(&mut sc.mobility.v_max),
        "mobility.group_count" => Usize(&mut sc.mobility.group_count),
        "mobility.group_radius_m" => F64(&mut sc.mobility.group_radius),
        "mobility.update_interval_s" => F64(&mut sc.mobility.update_interval),
        "mobility.heading_persistence" => F64(&mut sc.mobility.heading_persistence),
        "mobility.static_fraction" => F64(&mut sc.mobility.static_fraction),
        "costs.gamma" => F64(&mut sc.costs.gamma),
        "costs.chunk_cost" => F64(&mut sc.costs.chunk_cost),
        "costs.chunk_size_bits" => F64(&mut sc.costs.chunk_size),
        "costs.price_intra" => F64(&mut sc.costs.price_intra),
        "costs.price_inter" => F64(&mut sc.costs.price_inter),
        "constraints.cost_budget" => F64(&mut sc.constraints.cost_budget),
        "constraints.delay_floor" => F64(&mut sc.constraints.delay_floor),
        "constraints.energy_floor" => F64(&mut sc.constraints.energy_floor),
        "constraints.service_floor" => F64(&mut sc.constraints.service_floor),
        "solver.max_iterations" => Usize(&mut sc.solver.max_iterations),
        "solver.tolerance" => F64(&mut sc.solver.tolerance),
        "solver.step_0" => F64(&mut sc.solver.step_0),
        _ => return None,
    })
}

#[derive(Default)]
struct PartialSensor {
    kind: Option<SensorKind>,
    rate: Option<f64>,
    x: Option<f64>,
    y: Option<f64>,
}

fn parse_f64(v: &str, line: usize) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::Parse { line, msg: format!("expected a finite number, got `{v}`") })
}

fn parse_int<T: std::str::FromStr>(v: &str, line: usize) -> Result<T, ConfigError> {
    v.parse::<T>()
        .map_err(|_| ConfigError::Parse { line, msg: format!("expected a non-negative integer, got `{v}`") })
}

/// Parses and validates scenario text.
pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
    let mut sc = Scenario::default();
    let mut seen = BTreeMap::new();
    let mut sensors: BTreeMap<usize, (usize, PartialSensor)> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, msg: "expected `key = value`".into() });
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(ConfigError::Parse { line, msg: format!("`{key}` already set on line {prev}") });
        }

        if let Some(rest) = key.strip_prefix("sensor.") {
            let (idx, field) = rest
                .split_once('.')
                .and_then(|(k, f)| k.parse::<usize>().ok().map(|k| (k, f)))
                .ok_or_else(|| ConfigError::Parse { line, msg: format!("malformed sensor key `{key}`") })?;
            let entry = &mut sensors.entry(idx).or_insert_with(|| (line, PartialSensor::default())).1;
            match field {
                "kind" => {
                    entry.kind = Some(SensorKind::parse(value).ok_or_else(|| ConfigError::Parse {
                        line,
                        msg: format!("unknown sensor kind `{value}`"),
                    })?)
                }
                "rate_bps" => entry.rate = Some(parse_f64(value, line)?),
                "x_cm" => entry.x = Some(parse_f64(value, line)?),
                "y_cm" => entry.y = Some(parse_f64(value, line)?),
                _ => return Err(ConfigError::Parse { line, msg: format!("unknown key `{key}`") }),
            }
            continue;
        }

        match slot(&mut sc, key) {
            Some(Slot::F64(f)) => *f = parse_f64(value, line)?,
            Some(Slot::Usize(u)) => *u = parse_int(value, line)?,
            Some(Slot::U64(u)) => *u = parse_int(value, line)?,
            Some(Slot::Mode(m)) => {
                *m = Mode::parse(value).ok_or_else(|| ConfigError::Parse {
                    line,
                    msg: format!("unknown mode `{value}` (deba-p1, deba-p1p2, no-opt, greedy)"),
                })?
            }
            None => return Err(ConfigError::Parse { line, msg: format!("unknown key `{key}`") }),
        }
    }

    if !sensors.is_empty() {
        let mut table = Vec::with_capacity(sensors.len());
        for (expected, (idx, (line, p))) in sensors.into_iter().enumerate() {
            if idx != expected {
                return Err(ConfigError::Parse { line, msg: format!("sensor.{expected} is missing") });
            }
            match (p.kind, p.rate, p.x, p.y) {
                (Some(kind), Some(rate), Some(x), Some(y)) => {
                    table.push(SensorSpec { kind, data_rate: rate, position_cm: Point::new(x, y) })
                }
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        msg: format!("sensor.{idx} needs kind, rate_bps, x_cm and y_cm"),
                    })
                }
            }
        }
        sc.sensor_table = table;
    }
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse(&text)?)
}

/// Writes every key; floats use the shortest representation that reads
/// back to the same value.
pub fn serialize(sc: &Scenario) -> String {
    let mut sc = sc.clone();
    let mut out = String::new();
    for key in KEYS {
        let value = match slot(&mut sc, key).expect("every listed key has a slot") {
            Slot::F64(f) => format!("{:?}", *f),
            Slot::Usize(u) => u.to_string(),
            Slot::U64(u) => u.to_string(),
            Slot::Mode(m) => m.as_str().to_string(),
        };
        let _ = writeln!(out, "{key} = {value}");
    }
    for (k, s) in sc.sensor_table.iter().enumerate() {
        let _ = writeln!(out, "sensor.{k}.kind = {}", s.kind.as_str());
        let _ = writeln!(out, "sensor.{k}.rate_bps = {:?}", s.data_rate);
        let _ = writeln!(out, "sensor.{k}.x_cm = {:?}", s.position_cm.x);
        let _ = writeln!(out, "sensor.{k}.y_cm = {:?}", s.position_cm.y);
    }
    out
}

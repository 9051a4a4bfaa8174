//! Epoch loop: mobility, generation, decision, Phase I, Phase II, metrics.
//!
//! Every random draw comes from a ChaCha8 stream keyed by (seed, epoch,
//! WBAN, purpose), so the per-WBAN work can run on any number of threads
//! and still produce bit-identical reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{can_afford, drain, link_loss_probability, tx_energy_per_bit, ChannelModel};
use crate::error::{Error, ModelError};
use crate::mobility::{init_positions, step, MobilityState};
use crate::model::{
    buffer_weight, delay_weight, energy_weight, BaseStation, DelayBreakdown, EnergyState, Lmu, Point,
    SensorNode, Wban,
};
use crate::optimizer::{
    solve, AggregationDecision, EpochState, LmuState, SensorState, SolverParams, WbanState,
};
use crate::par::{self, Execution};
use crate::sim::scenario::{Mode, Scenario};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Metrics of one epoch, summed over WBANs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochReport {
    pub epoch: usize,
    pub zeta: f64,
    pub cost_intra: f64,
    pub cost_inter: f64,
    pub cost_total: f64,
    pub objective: f64,
    /// bits
    pub traffic_generated: f64,
    /// bits delivered at base stations
    pub traffic_served: f64,
    /// J
    pub energy_consumed: f64,
    /// s
    pub mean_aggregation_delay: f64,
    pub wbans_alive: usize,
    pub constraint_violations: usize,
}

/// Bit flow between the two hops of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochFlow {
    pub overflow_dropped: f64,
    /// Bits transmitted by sensors.
    pub sent: f64,
    /// Bits accepted into LMU buffers.
    pub delivered_to_lmu: f64,
    pub lmu_dropped: f64,
    /// Bits transmitted by LMUs.
    pub forwarded: f64,
}

/// Invariant breaches found while running. All zero on a healthy run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InvariantLog {
    pub energy_increase: usize,
    pub energy_accounting: usize,
    pub conservation: usize,
    pub negative_buffer: usize,
}

impl InvariantLog {
    pub fn total(&self) -> usize {
        self.energy_increase + self.energy_accounting + self.conservation + self.negative_buffer
    }

    fn merge(&mut self, o: &InvariantLog) {
        self.energy_increase += o.energy_increase;
        self.energy_accounting += o.energy_accounting;
        self.conservation += o.conservation;
        self.negative_buffer += o.negative_buffer;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub mode: Mode,
    pub seed: u64,
    pub reports: Vec<EpochReport>,
    pub flows: Vec<EpochFlow>,
    pub invariants: InvariantLog,
}

#[derive(Clone, Copy)]
enum Stream {
    Init = 1,
    Mobility = 2,
    Channel = 3,
    Transfer = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, epoch: usize, wban: usize, purpose: Stream) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for v in [epoch as u64, wban as u64, purpose as u64] {
        h = splitmix(h ^ v);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Per-WBAN snapshot taken after generation, before the decision.
struct Prepared {
    /// LMU alive at the start of the epoch.
    alive: bool,
    /// Takes part in the decision.
    active: bool,
    generated: f64,
    overflow: f64,
    state: WbanState,
}

#[derive(Default)]
struct Outcome {
    flow: EpochFlow,
    served: f64,
    energy: f64,
    zeta: f64,
    cost_intra: f64,
    cost_inter: f64,
    delay: f64,
    invariants: InvariantLog,
}

struct World {
    wbans: Vec<Wban>,
    stations: Vec<BaseStation>,
    mobility: MobilityState,
}

fn build_world(sc: &Scenario) -> World {
    let mut rng = stream(sc.seed, 0, 0, Stream::Init);
    let mobility = init_positions(&sc.mobility, sc.n_wbans, &mut rng);
    let stations = (0..sc.n_bs)
        .map(|id| BaseStation {
            id,
            position: Point::new(
                rng.random::<f64>() * sc.mobility.area_x,
                rng.random::<f64>() * sc.mobility.area_y,
            ),
        })
        .collect();
    let r = &sc.radio;
    let wbans = (0..sc.n_wbans)
        .map(|id| {
            let sensors = (0..sc.sensors_per_wban)
                .map(|k| {
                    let spec = sc.sensor_table[k % sc.sensor_table.len()];
                    SensorNode {
                        id: k,
                        kind: spec.kind,
                        position: Point::new(spec.position_cm.x / 100.0, spec.position_cm.y / 100.0),
                        data_rate: spec.data_rate,
                        buffer_total: sc.sensor_buffer,
                        buffer_occupied: 0.0,
                        energy: EnergyState::full(sc.sensor_energy),
                    }
                })
                .collect();
            let group = mobility.membership[id];
            Wban {
                id,
                sensors,
                lmu: Lmu {
                    id,
                    position: Point::new(sc.lmu.position_cm.x / 100.0, sc.lmu.position_cm.y / 100.0),
                    buffer_total: sc.lmu.buffer,
                    buffer_occupied: 0.0,
                    energy: EnergyState::full(sc.lmu.energy),
                    service_rate: sc.lmu.service_rate,
                },
                criticality: rng.random::<f64>(),
                position: mobility.positions[id],
                velocity: Point::default(),
                group,
                mobile: mobility.groups[group].mobile,
                alpha_intra: rng.random_range(r.alpha_intra_min..=r.alpha_intra_max),
                alpha_inter: rng.random_range(r.alpha_inter_min..=r.alpha_inter_max),
            }
        })
        .collect();
    World { wbans, stations, mobility }
}

fn nearest_station(stations: &[BaseStation], p: &Point) -> f64 {
    stations.iter().map(|b| b.position.distance(p)).fold(f64::INFINITY, f64::min)
}

fn total_energy(w: &Wban) -> f64 {
    w.lmu.energy.residual + w.sensors.iter().map(|s| s.energy.residual).sum::<f64>()
}

/// Generates this epoch's traffic and snapshots what the decision needs.
fn prepare(sc: &Scenario, epoch: usize, idx: usize, w: &mut Wban, stations: &[BaseStation]) -> Prepared {
    let t = sc.epoch_length;
    let mut rng = stream(sc.seed, epoch, idx, Stream::Channel);
    let active = w.alive();
    let mut generated = 0.0;
    let mut overflow = 0.0;
    if active {
        for s in w.sensors.iter_mut().filter(|s| s.energy.alive) {
            let volume = (sc.packet_rate * t * sc.packet_size).min(s.data_rate * t);
            let accepted = volume.min(s.buffer_total - s.buffer_occupied).max(0.0);
            s.buffer_occupied += accepted;
            generated += volume;
            overflow += volume - accepted;
        }
    }

    let links = &sc.links;
    let mut intra = ChannelModel::rayleigh(links.intra_reference_distance, links.intra_outage_scale);
    let mut inter = ChannelModel::log_normal(
        links.inter_reference_distance,
        links.inter_outage_scale,
        links.shadowing_sigma_db,
    );
    if w.mobile {
        intra = intra.with_scale_multiplier(links.mobile_outage_multiplier);
        inter = inter.with_scale_multiplier(links.mobile_outage_multiplier);
    }
    let bs_distance = nearest_station(stations, &w.position);
    let floor = sc.constraints.energy_floor;
    let retire = sc.mode.optimized();
    let quality = |e: &EnergyState, total: f64, occupied: f64, d: &DelayBreakdown| {
        energy_weight(e.residual, e.initial, sc.energy_scaling).unwrap_or(0.0)
            + buffer_weight(total, occupied.min(total)).unwrap_or(0.0)
            + delay_weight(d).unwrap_or(0.0)
    };
    let above_floor = |e: &EnergyState| {
        !retire || energy_weight(e.residual, e.initial, sc.energy_scaling).is_ok_and(|ew| ew > floor)
    };

    let sensors = w
        .sensors
        .iter()
        .map(|s| {
            let d = s.position.distance(&w.lmu.position);
            let volume = s.buffer_occupied.min(links.intra_rate * t);
            let delay = DelayBreakdown::new(
                d / SPEED_OF_LIGHT,
                sc.packet_size / links.intra_rate,
                0.0,
                s.buffer_occupied / links.intra_rate,
            );
            let alive = active && s.energy.alive && above_floor(&s.energy);
            SensorState {
                volume: if alive { volume } else { 0.0 },
                loss: link_loss_probability(&intra, d, w.alpha_intra, &mut rng),
                weight: quality(&s.energy, s.buffer_total, s.buffer_occupied, &delay),
                tx_energy_per_bit: tx_energy_per_bit(d, &sc.radio, w.alpha_intra),
                energy_residual: s.energy.residual,
                energy_initial: s.energy.initial,
                alive,
            }
        })
        .collect();

    let lmu = &w.lmu;
    let base_delay = DelayBreakdown::new(
        bs_distance / SPEED_OF_LIGHT,
        sc.packet_size / links.inter_rate,
        sc.packet_size / lmu.service_rate,
        0.0,
    );
    let queued = DelayBreakdown::new(
        base_delay.propagation,
        base_delay.transmission,
        base_delay.aggregation,
        lmu.buffer_occupied / lmu.service_rate,
    );
    let state = WbanState {
        sensors,
        lmu: LmuState {
            occupancy: lmu.buffer_occupied,
            buffer_total: lmu.buffer_total,
            capacity: lmu.service_rate.min(links.inter_rate) * t,
            service_rate: lmu.service_rate,
            loss: link_loss_probability(&inter, bs_distance, w.alpha_inter, &mut rng),
            weight: quality(&lmu.energy, lmu.buffer_total, lmu.buffer_occupied, &queued),
            // Amplifier distance is measured in units of the inter reference distance.
            tx_energy_per_bit: tx_energy_per_bit(
                bs_distance / links.inter_reference_distance,
                &sc.radio,
                w.alpha_inter,
            ),
            rx_energy_per_bit: sc.radio.e_rx,
            energy_residual: lmu.energy.residual,
            energy_initial: lmu.energy.initial,
            base_delay,
        },
        critical: w.is_critical(),
    };
    // An LMU retires once its energy above the floor cannot carry one more
    // epoch at full capacity; the service floor would be unreachable.
    let l = &state.lmu;
    let headroom = l.energy_residual - floor * l.energy_initial / sc.energy_scaling;
    let lmu_ready = !retire || headroom >= l.capacity * (l.rx_energy_per_bit + l.tx_energy_per_bit);
    Prepared { alive: active, active: active && lmu_ready, generated, overflow, state }
}

/// Spends `amount` from `e` if it can; otherwise the battery browns out and
/// the node dies. Returns the joules removed and whether the action ran.
fn spend(e: &mut EnergyState, amount: f64) -> (f64, bool) {
    if can_afford(e, amount) {
        (drain(e, amount), true)
    } else if e.alive {
        let left = e.residual;
        (drain(e, left), false)
    } else {
        (0.0, false)
    }
}

fn execute(
    sc: &Scenario,
    epoch: usize,
    idx: usize,
    w: &mut Wban,
    prep: &Prepared,
    x: &[f64],
    y: f64,
) -> Outcome {
    let mut out = Outcome::default();
    let before: Vec<f64> =
        w.sensors.iter().map(|s| s.energy.residual).chain(std::iter::once(w.lmu.energy.residual)).collect();
    let energy_before = total_energy(w);
    let mut rng = stream(sc.seed, epoch, idx, Stream::Transfer);
    let t = sc.epoch_length;
    let st = &prep.state;
    let (pi, pe) = (sc.costs.price_intra, sc.costs.price_inter);

    // Phase I
    for ((s, ss), xs) in w.sensors.iter_mut().zip(&st.sensors).zip(x) {
        let send = (xs * ss.volume).min(s.buffer_occupied);
        if send <= 0.0 || !s.energy.alive || !w.lmu.energy.alive {
            continue;
        }
        let (e, ok) = spend(&mut s.energy, send * ss.tx_energy_per_bit);
        out.energy += e;
        if !ok {
            continue;
        }
        let (e, ok) = spend(&mut w.lmu.energy, send * st.lmu.rx_energy_per_bit);
        out.energy += e;
        s.buffer_occupied -= send;
        out.flow.sent += send;
        out.cost_intra += pi * send;
        out.zeta += ss.weight * send;
        let lost = rng.random::<f64>() < ss.loss;
        if !ok || lost {
            continue;
        }
        let lmu = &mut w.lmu;
        let accepted = send.min(lmu.buffer_total - lmu.buffer_occupied).max(0.0);
        lmu.buffer_occupied += accepted;
        out.flow.delivered_to_lmu += accepted;
        out.flow.lmu_dropped += send - accepted;
    }

    // Phase II
    let lmu = &mut w.lmu;
    let fwd = (y * st.phase2_base()).min(lmu.buffer_occupied).max(0.0);
    if fwd > 0.0 && lmu.energy.alive {
        let (e, ok) = spend(&mut lmu.energy, fwd * st.lmu.tx_energy_per_bit);
        out.energy += e;
        if ok {
            lmu.buffer_occupied -= fwd;
            out.flow.forwarded += fwd;
            out.cost_inter += pe * fwd;
            out.zeta += st.lmu.weight * fwd;
            if rng.random::<f64>() >= st.lmu.loss {
                out.served += fwd;
            }
        }
    }
    if lmu.energy.alive {
        let idle = if w.mobile { sc.radio.tx_power_mobile } else { sc.radio.tx_power_static };
        out.energy += drain(&mut lmu.energy, idle * t);
    }

    let d = &st.lmu.base_delay;
    out.delay = d.propagation + d.transmission + d.aggregation + w.lmu.buffer_occupied / w.lmu.service_rate;

    let after: Vec<f64> =
        w.sensors.iter().map(|s| s.energy.residual).chain(std::iter::once(w.lmu.energy.residual)).collect();
    out.invariants.energy_increase = before.iter().zip(&after).filter(|(b, a)| a > b).count();
    let drained = energy_before - total_energy(w);
    if (drained - out.energy).abs() > 1e-9 * energy_before.max(1.0) {
        out.invariants.energy_accounting = 1;
    }
    let negative = w.sensors.iter().any(|s| s.buffer_occupied < -1e-6)
        || w.lmu.buffer_occupied < -1e-6
        || w.lmu.buffer_occupied > w.lmu.buffer_total * (1.0 + 1e-12);
    out.invariants.negative_buffer = negative as usize;
    out
}

/// One fraction per node: 1 while the node's energy weight exceeds 0.2,
/// 0.5 once it falls below.
pub fn greedy_baseline_decision(state: &EpochState) -> AggregationDecision {
    let rule = |residual: f64, initial: f64| {
        let ew = energy_weight(residual.clamp(0.0, initial), initial, state.energy_scaling).unwrap_or(0.0);
        if ew > 0.2 {
            1.0
        } else {
            0.5
        }
    };
    AggregationDecision {
        phase1_fraction: state
            .wbans
            .iter()
            .flat_map(|w| w.sensors.iter().map(|s| rule(s.energy_residual, s.energy_initial)))
            .collect(),
        phase2_fraction: state
            .wbans
            .iter()
            .map(|w| rule(w.lmu.energy_residual, w.lmu.energy_initial))
            .collect(),
    }
}

/// Moves every WBAN through one epoch of mobility and collects the state
/// the decision is made on. `active` lists the WBANs in that state.
fn observe(
    sc: &Scenario,
    epoch: usize,
    world: &mut World,
    exec: Execution,
) -> (Vec<Prepared>, Vec<usize>, EpochState) {
    let steps = (sc.epoch_length / sc.mobility.update_interval).round().max(1.0) as usize;
    let dt = sc.epoch_length / steps as f64;
    let mut mob_rng = stream(sc.seed, epoch, 0, Stream::Mobility);
    for _ in 0..steps {
        step(&mut world.mobility, &sc.mobility, dt, &mut mob_rng);
    }
    for (w, (p, v)) in
        world.wbans.iter_mut().zip(world.mobility.positions.iter().zip(&world.mobility.velocities))
    {
        w.position = *p;
        w.velocity = *v;
    }

    let stations = &world.stations;
    let preps = par::map_mut(exec, &mut world.wbans, |i, w| prepare(sc, epoch, i, w, stations));
    let active: Vec<usize> = (0..preps.len()).filter(|i| preps[*i].active).collect();
    let state = EpochState {
        wbans: active.iter().map(|i| preps[*i].state.clone()).collect(),
        price_intra: sc.costs.price_intra,
        price_inter: sc.costs.price_inter,
        c_units: sc.c_units,
        energy_scaling: sc.energy_scaling,
        phase2_fixed: sc.mode == Mode::DebaP1,
    };
    (preps, active, state)
}

/// The optimizer input of a scenario's first epoch.
pub fn first_epoch_state(sc: &Scenario) -> Result<EpochState, Error> {
    sc.validate()?;
    let mut world = build_world(sc);
    Ok(observe(sc, 0, &mut world, Execution::Sequential).2)
}

/// Runs the scenario to completion, or until every WBAN is dead.
pub fn run(sc: &Scenario, exec: Execution) -> Result<RunOutput, Error> {
    sc.validate()?;
    let mut world = build_world(sc);
    let solver = SolverParams { execution: exec, ..sc.solver };
    let n_epochs = sc.epochs();
    let mut reports = Vec::with_capacity(n_epochs);
    let mut flows = Vec::with_capacity(n_epochs);
    let mut invariants = InvariantLog::default();
    let (mut cum_generated, mut cum_delivered, mut cum_served) = (0.0, 0.0, 0.0);

    for epoch in 0..n_epochs {
        let (preps, active, epoch_state) = observe(sc, epoch, &mut world, exec);
        let mut violations = 0;
        let decision = match sc.mode {
            Mode::DebaP1 | Mode::DebaP1P2 => {
                let report = solve(&epoch_state, &sc.constraints, &solver)?;
                violations = report.violated.iter().filter(|v| **v).count();
                report.decision
            }
            Mode::NoOpt => AggregationDecision::uniform(&epoch_state, 1.0),
            Mode::GreedyBaseline => greedy_baseline_decision(&epoch_state),
        };
        if !decision.is_valid() {
            return Err(ModelError::Domain("decision fraction outside [0,1]").into());
        }

        // Scatter the decision back onto every WBAN; idle WBANs get zeros.
        let mut plan: Vec<(Vec<f64>, f64)> =
            preps.iter().map(|p| (vec![0.0; p.state.sensors.len()], 0.0)).collect();
        let offsets = epoch_state.sensor_offsets();
        for (b, &i) in active.iter().enumerate() {
            let n = preps[i].state.sensors.len();
            plan[i] =
                (decision.phase1_fraction[offsets[b]..offsets[b] + n].to_vec(), decision.phase2_fraction[b]);
        }
        let outcomes = par::map_mut(exec, &mut world.wbans, |i, w| {
            execute(sc, epoch, i, w, &preps[i], &plan[i].0, plan[i].1)
        });

        let mut r = EpochReport { epoch, constraint_violations: violations, ..Default::default() };
        let mut flow = EpochFlow::default();
        let mut delay_sum = 0.0;
        let mut delay_n = 0usize;
        for ((o, p), w) in outcomes.iter().zip(&preps).zip(&world.wbans) {
            r.zeta += o.zeta;
            r.cost_intra += o.cost_intra;
            r.cost_inter += o.cost_inter;
            r.traffic_generated += p.generated;
            r.traffic_served += o.served;
            r.energy_consumed += o.energy;
            flow.overflow_dropped += p.overflow;
            flow.sent += o.flow.sent;
            flow.delivered_to_lmu += o.flow.delivered_to_lmu;
            flow.lmu_dropped += o.flow.lmu_dropped;
            flow.forwarded += o.flow.forwarded;
            invariants.merge(&o.invariants);
            if p.alive {
                delay_sum += o.delay;
                delay_n += 1;
            }
            if w.alive() {
                r.wbans_alive += 1;
            }
        }
        r.cost_total = r.cost_intra + r.cost_inter;
        r.objective = sc.c_units * r.zeta + r.cost_total;
        r.mean_aggregation_delay = if delay_n > 0 { delay_sum / delay_n as f64 } else { 0.0 };

        cum_generated += r.traffic_generated;
        cum_delivered += flow.delivered_to_lmu;
        cum_served += r.traffic_served;
        let slack = 1e-9 * cum_generated.max(1.0);
        if cum_served > cum_delivered + slack || cum_delivered > cum_generated + slack {
            invariants.conservation += 1;
        }
        if r.energy_consumed < 0.0 {
            invariants.energy_increase += 1;
        }
        let done = r.wbans_alive == 0;
        reports.push(r);
        flows.push(flow);
        if done {
            break;
        }
    }
    Ok(RunOutput { mode: sc.mode, seed: sc.seed, reports, flows, invariants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SensorKind;
    use crate::sim::scenario::SensorSpec;

    fn tiny(mode: Mode) -> Scenario {
        Scenario { n_wbans: 6, n_bs: 2, mode, ..Scenario::desk_scale().with_epochs(20) }
    }

    #[test]
    fn lossless_single_sensor_is_fully_served() {
        let mut sc = Scenario {
            n_wbans: 1,
            sensors_per_wban: 1,
            n_bs: 1,
            mode: Mode::NoOpt,
            sensor_table: vec![SensorSpec::new(SensorKind::Ecg, 6e6, 15.0, 78.0)],
            sensor_energy: 1e6,
            ..Scenario::default().with_epochs(1)
        };
        sc.lmu.energy = 1e6;
        sc.lmu.service_rate = 1e9;
        sc.lmu.buffer = 1e9;
        sc.links.intra_outage_scale = 0.0;
        sc.links.inter_outage_scale = 0.0;
        sc.links.intra_rate = 1e9;
        let out = run(&sc, Execution::Sequential).unwrap();
        assert_eq!(out.reports.len(), 1);
        assert_eq!(out.reports[0].traffic_generated, 6e6);
        assert_eq!(out.reports[0].traffic_served, 6e6);
    }

    #[test]
    fn parallel_matches_sequential() {
        for mode in Mode::ALL {
            let sc = tiny(mode);
            assert_eq!(run(&sc, Execution::Sequential).unwrap(), run(&sc, Execution::Parallel).unwrap());
        }
    }

    #[test]
    fn invariants_hold_on_small_runs() {
        for mode in Mode::ALL {
            let out = run(&tiny(mode), Execution::Parallel).unwrap();
            assert_eq!(out.invariants.total(), 0, "{mode}: {:?}", out.invariants);
            for r in &out.reports {
                assert!(r.energy_consumed >= 0.0);
                assert_eq!(r.cost_total, r.cost_intra + r.cost_inter);
            }
        }
    }

    #[test]
    fn greedy_rule() {
        let mut s = crate::optimizer::problem::fixtures::simple_state(2, 1e6);
        assert!(greedy_baseline_decision(&s).flatten().iter().all(|v| *v == 1.0));
        s.wbans[0].sensors[1].energy_residual = 10.0;
        let d = greedy_baseline_decision(&s);
        assert_eq!(d.phase1_fraction, vec![1.0, 0.5]);
        assert!(d.is_valid());
    }

    #[test]
    fn rejects_invalid_scenario() {
        let sc = Scenario { n_wbans: 0, ..Scenario::default() };
        assert!(matches!(run(&sc, Execution::Sequential), Err(Error::Config(_))));
    }
}

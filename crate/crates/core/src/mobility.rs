//! Reference-point group mobility for whole WBANs.
//!
//! Sensors ride the body frame, so only WBAN (field-level) positions move;
//! intra-BAN geometry is untouched by a step.

use std::f64::consts::TAU;

use rand::Rng;

use crate::model::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub area_x: f64,
    pub area_y: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub group_count: usize,
    pub group_radius: f64,
    pub update_interval: f64,
    pub heading_persistence: f64,
    /// Share of groups that never move (static WBANs).
    pub static_fraction: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            area_x: 3500.0,
            area_y: 3500.0,
            v_min: 1.5,
            v_max: 2.5,
            group_count: 20,
            group_radius: 10.0,
            update_interval: 1.0,
            heading_persistence: 0.8,
            static_fraction: 0.25,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.area_x > 0.0 && self.area_y > 0.0) {
            return Err("mobility area must be positive".into());
        }
        if !(self.v_min > 0.0 && self.v_min <= self.v_max) {
            return Err("mobility speeds must satisfy 0 < v_min <= v_max".into());
        }
        if self.group_count == 0 {
            return Err("mobility.group_count must be at least 1".into());
        }
        if self.group_radius.is_nan() || self.group_radius <= 0.0 {
            return Err("mobility.group_radius must be positive".into());
        }
        if self.update_interval.is_nan() || self.update_interval <= 0.0 {
            return Err("mobility.update_interval must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.heading_persistence) || !(0.0..=1.0).contains(&self.static_fraction) {
            return Err("mobility probabilities must lie in [0,1]".into());
        }
        Ok(())
    }

    fn static_groups(&self) -> usize {
        (self.static_fraction * self.group_count as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub reference: Point,
    pub heading: f64,
    pub speed: f64,
    pub mobile: bool,
    /// Path length travelled by the reference point in the last step.
    pub last_displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    pub groups: Vec<Group>,
    pub membership: Vec<usize>,
    pub offsets: Vec<Point>,
    pub positions: Vec<Point>,
    pub velocities: Vec<Point>,
}

impl MobilityState {
    pub fn group_of(&self, wban: usize) -> &Group {
        &self.groups[self.membership[wban]]
    }
}

fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * TAU;
    Point::new(r * theta.cos(), r * theta.sin())
}

/// Folds `v` back into [0, max]; returns the folded value and whether the
/// direction flipped an odd number of times.
fn reflect(mut v: f64, max: f64) -> (f64, bool) {
    let mut flipped = false;
    while v < 0.0 || v > max {
        if v < 0.0 {
            v = -v;
        } else {
            v = 2.0 * max - v;
        }
        flipped = !flipped;
    }
    (v, flipped)
}

fn clamp_to_area(p: Point, params: &MobilityParams) -> Point {
    Point::new(reflect(p.x, params.area_x).0, reflect(p.y, params.area_y).0)
}

/// Round-robin group assignment with uniformly placed reference points.
pub fn init_positions<R: Rng + ?Sized>(
    params: &MobilityParams,
    n_wbans: usize,
    rng: &mut R,
) -> MobilityState {
    let n_static = params.static_groups();
    let groups: Vec<Group> = (0..params.group_count)
        .map(|g| {
            let reference =
                Point::new(rng.random::<f64>() * params.area_x, rng.random::<f64>() * params.area_y);
            let mobile = g < params.group_count - n_static;
            Group {
                reference,
                heading: rng.random::<f64>() * TAU,
                speed: if mobile { rng.random_range(params.v_min..=params.v_max) } else { 0.0 },
                mobile,
                last_displacement: 0.0,
            }
        })
        .collect();
    let membership: Vec<usize> = (0..n_wbans).map(|i| i % params.group_count).collect();
    let offsets: Vec<Point> = (0..n_wbans).map(|_| uniform_in_disc(rng, params.group_radius)).collect();
    let positions = membership
        .iter()
        .zip(&offsets)
        .map(|(g, o)| {
            let r = groups[*g].reference;
            clamp_to_area(Point::new(r.x + o.x, r.y + o.y), params)
        })
        .collect();
    MobilityState { groups, membership, offsets, positions, velocities: vec![Point::default(); n_wbans] }
}

/// Advances every mobile group by `dt` seconds.
pub fn step<R: Rng + ?Sized>(state: &mut MobilityState, params: &MobilityParams, dt: f64, rng: &mut R) {
    assert!(dt > 0.0, "mobility step requires dt > 0");
    for g in state.groups.iter_mut() {
        if !g.mobile {
            g.last_displacement = 0.0;
            continue;
        }
        if rng.random::<f64>() >= params.heading_persistence {
            g.heading = rng.random::<f64>() * TAU;
        }
        g.speed = rng.random_range(params.v_min..=params.v_max);
        let dist = g.speed * dt;
        let (x, fx) = reflect(g.reference.x + dist * g.heading.cos(), params.area_x);
        let (y, fy) = reflect(g.reference.y + dist * g.heading.sin(), params.area_y);
        let (mut hx, mut hy) = (g.heading.cos(), g.heading.sin());
        if fx {
            hx = -hx;
        }
        if fy {
            hy = -hy;
        }
        g.heading = hy.atan2(hx);
        g.reference = Point::new(x, y);
        g.last_displacement = dist;
    }
    let jitter = 0.1 * params.group_radius;
    for i in 0..state.positions.len() {
        let g = &state.groups[state.membership[i]];
        if g.mobile {
            let j = uniform_in_disc(rng, jitter);
            let mut o = Point::new(state.offsets[i].x + j.x, state.offsets[i].y + j.y);
            let r = o.x.hypot(o.y);
            if r > params.group_radius {
                o = Point::new(o.x * params.group_radius / r, o.y * params.group_radius / r);
            }
            state.offsets[i] = o;
        }
        let next = clamp_to_area(
            Point::new(g.reference.x + state.offsets[i].x, g.reference.y + state.offsets[i].y),
            params,
        );
        let prev = state.positions[i];
        state.velocities[i] = Point::new((next.x - prev.x) / dt, (next.y - prev.y) / dt);
        state.positions[i] = next;
    }
}

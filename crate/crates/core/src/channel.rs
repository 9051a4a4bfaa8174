//! Per-bit radio energy accounting and fading-derived link loss.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::EnergyState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// J/bit
    pub e_tx: f64,
    /// J/bit
    pub e_rx: f64,
    /// J/bit/m^alpha
    pub e_amp: f64,
    pub alpha_intra_min: f64,
    pub alpha_intra_max: f64,
    pub alpha_inter_min: f64,
    pub alpha_inter_max: f64,
    /// W
    pub tx_power_mobile: f64,
    /// W
    pub tx_power_static: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            e_tx: 16.7e-9,
            e_rx: 36.1e-9,
            e_amp: 1.97e-9,
            alpha_intra_min: 2.0,
            alpha_intra_max: 3.2,
            alpha_inter_min: 3.5,
            alpha_inter_max: 4.0,
            tx_power_mobile: 55e-9,
            tx_power_static: 12e-9,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("e_tx", self.e_tx),
            ("e_rx", self.e_rx),
            ("e_amp", self.e_amp),
            ("tx_power_mobile", self.tx_power_mobile),
            ("tx_power_static", self.tx_power_static),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("radio.{name} must be positive"));
            }
        }
        let in_range = |lo: f64, hi: f64, a: f64, b: f64| lo <= a && a <= b && b <= hi;
        if !in_range(2.0, 3.2, self.alpha_intra_min, self.alpha_intra_max) {
            return Err("radio.alpha_intra range must lie within [2, 3.2]".into());
        }
        if !in_range(3.5, 4.0, self.alpha_inter_min, self.alpha_inter_max) {
            return Err("radio.alpha_inter range must lie within [3.5, 4]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    RayleighIntra,
    LogNormalInter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub reference_distance: f64,
    /// Outage scale at the reference distance.
    pub outage_scale: f64,
    pub shadowing_sigma_db: f64,
}

impl ChannelModel {
    pub fn rayleigh(reference_distance: f64, outage_scale: f64) -> Self {
        Self { kind: ChannelKind::RayleighIntra, reference_distance, outage_scale, shadowing_sigma_db: 0.0 }
    }

    pub fn log_normal(reference_distance: f64, outage_scale: f64, sigma_db: f64) -> Self {
        Self {
            kind: ChannelKind::LogNormalInter,
            reference_distance,
            outage_scale,
            shadowing_sigma_db: sigma_db,
        }
    }

    pub fn with_scale_multiplier(mut self, m: f64) -> Self {
        self.outage_scale *= m;
        self
    }
}

/// First-order radio model: electronics plus distance-dependent amplifier.
pub fn tx_energy(bits: f64, distance: f64, params: &RadioParams, alpha: f64) -> f64 {
    bits * tx_energy_per_bit(distance, params, alpha)
}

pub fn tx_energy_per_bit(distance: f64, params: &RadioParams, alpha: f64) -> f64 {
    params.e_tx + params.e_amp * distance.powf(alpha)
}

pub fn rx_energy(bits: f64, params: &RadioParams) -> f64 {
    bits * params.e_rx
}

/// Mean outage probability 1 - exp(-κ (d/d0)^α).
pub fn mean_outage(model: &ChannelModel, distance: f64, alpha: f64) -> f64 {
    if distance <= 0.0 {
        return 0.0;
    }
    let x = model.outage_scale * (distance / model.reference_distance).powf(alpha);
    (-(-x).exp_m1()).clamp(0.0, 1.0)
}

/// Outage with a fixed log-normal shadowing draw (in dB).
pub fn outage_with_shadowing(model: &ChannelModel, distance: f64, alpha: f64, shadow_db: f64) -> f64 {
    let base = mean_outage(model, distance, alpha);
    match model.kind {
        ChannelKind::RayleighIntra => base,
        ChannelKind::LogNormalInter => (base * 10f64.powf(shadow_db / 10.0)).clamp(0.0, 1.0),
    }
}

/// Loss probability for one link. Log-normal links draw their shadowing
/// term from `rng`; Rayleigh links do not touch it.
pub fn link_loss_probability<R: Rng + ?Sized>(
    model: &ChannelModel,
    distance: f64,
    alpha: f64,
    rng: &mut R,
) -> f64 {
    match model.kind {
        ChannelKind::RayleighIntra => mean_outage(model, distance, alpha),
        ChannelKind::LogNormalInter => {
            let shadow = if model.shadowing_sigma_db > 0.0 {
                Normal::new(0.0, model.shadowing_sigma_db).expect("sigma is finite and positive").sample(rng)
            } else {
                0.0
            };
            outage_with_shadowing(model, distance, alpha, shadow)
        }
    }
}

/// Removes up to `amount` joules; returns what was actually removed.
pub fn drain(state: &mut EnergyState, amount: f64) -> f64 {
    let before = state.residual;
    state.residual = (state.residual - amount.max(0.0)).max(0.0);
    if state.residual == 0.0 {
        state.alive = false;
    }
    before - state.residual
}

/// True when the node can power `amount` joules in full.
pub fn can_afford(state: &EnergyState, amount: f64) -> bool {
    state.alive && state.residual >= amount
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn tx_rx_examples() {
        let p = RadioParams::default();
        assert!(rel(tx_energy(1e6, 1.0, &p, 2.0), 18.67e-3) < 1e-12);
        assert_eq!(tx_energy(0.0, 3.0, &p, 2.0), 0.0);
        assert!(rel(tx_energy(1e6, 0.0, &p, 2.5), 1e6 * p.e_tx) < 1e-12);
        assert!(rel(rx_energy(1e6, &p), 36.1e-3) < 1e-12);
        assert_eq!(rx_energy(0.0, &p), 0.0);
        assert_eq!(rx_energy(2e6, &p), 2.0 * rx_energy(1e6, &p));
    }

    #[test]
    fn loss_examples() {
        let m = ChannelModel::rayleigh(1.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(link_loss_probability(&m, 0.0, 2.0, &mut rng), 0.0);
        let l = link_loss_probability(&m, 1.0, 2.0, &mut rng);
        assert!(rel(l, 1.0 - (-0.1f64).exp()) < 1e-12);
        assert!((l - 0.0952).abs() < 1e-4);
    }

    #[test]
    fn log_normal_is_seed_deterministic() {
        let m = ChannelModel::log_normal(100.0, 0.1, 4.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..16).map(|_| link_loss_probability(&m, 150.0, 3.7, &mut rng).to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn drain_examples() {
        let mut e = EnergyState::full(0.5);
        drain(&mut e, 0.01867);
        assert!(rel(e.residual, 0.48133) < 1e-12);
        let before = e;
        drain(&mut e, 0.0);
        assert_eq!(e, before);
        let removed = drain(&mut e, 10.0);
        assert_eq!(e.residual, 0.0);
        assert!(!e.alive);
        assert_eq!(removed, before.residual);
        assert!(!can_afford(&e, 0.0));
    }

    proptest! {
        #[test]
        fn loss_bounded_and_monotone(
            d1 in 0.0f64..3000.0, d2 in 0.0f64..3000.0,
            a1 in 2.0f64..4.0, a2 in 2.0f64..4.0,
            shadow in -12.0f64..12.0,
        ) {
            let m = ChannelModel::log_normal(100.0, 0.1, 4.0);
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let ln = outage_with_shadowing(&m, near, a1, shadow);
            let lf = outage_with_shadowing(&m, far, a1, shadow);
            prop_assert!((0.0..=1.0).contains(&ln) && (0.0..=1.0).contains(&lf));
            prop_assert!(ln <= lf);
            let (alo, ahi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let beyond = m.reference_distance + far;
            prop_assert!(mean_outage(&m, beyond, alo) <= mean_outage(&m, beyond, ahi));
        }

        #[test]
        fn energy_linear_and_never_negative(
            bits in 0.0f64..1e8, d in 0.0f64..2.0, alpha in 2.0f64..3.2,
            amounts in prop::collection::vec(0.0f64..0.2, 0..20),
        ) {
            let p = RadioParams::default();
            let one = tx_energy(bits, d, &p, alpha);
            prop_assert!(rel(tx_energy(2.0 * bits, d, &p, alpha), 2.0 * one) < 1e-12 || bits == 0.0);
            let mut e = EnergyState::full(0.5);
            let mut prev = e.residual;
            for a in amounts {
                drain(&mut e, a);
                prop_assert!(e.residual <= prev && e.residual >= 0.0);
                prop_assert_eq!(e.alive, e.residual > 0.0);
                prev = e.residual;
            }
        }
    }
}

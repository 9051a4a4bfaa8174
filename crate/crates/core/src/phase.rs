//! Phase I (sensor to LMU) and Phase II (LMU to base station) aggregation
//! components and their prices.
//!
//! The network is one-hop in both phases, so each sensor row of the intra
//! adjacency and each LMU row of the inter adjacency holds at most one
//! connection. [`Topology`] stores that single column index per row instead
//! of a dense 0/1 matrix; [`Topology::intra`] and [`Topology::inter`] give
//! the indicator view.

use crate::error::{ModelError, Result};
use crate::model::CostParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// LMU index each sensor is attached to, `None` when disconnected.
    pub sensor_lmu: Vec<Option<usize>>,
    /// Base station each LMU is associated with this epoch.
    pub lmu_bs: Vec<Option<usize>>,
    pub intra_loss: Vec<f64>,
    pub inter_loss: Vec<f64>,
    /// Optional real-valued resolution multiplier per sensor (1.0 by default).
    pub resolution: Vec<f64>,
    pub n_lmus: usize,
    pub n_bs: usize,
}

impl Topology {
    pub fn new(
        sensor_lmu: Vec<Option<usize>>,
        lmu_bs: Vec<Option<usize>>,
        n_lmus: usize,
        n_bs: usize,
    ) -> Result<Self> {
        if lmu_bs.len() != n_lmus {
            return Err(ModelError::Dimension(format!(
                "{} LMU associations for {n_lmus} LMUs",
                lmu_bs.len()
            )));
        }
        if sensor_lmu.iter().flatten().any(|j| *j >= n_lmus) {
            return Err(ModelError::Dimension("sensor attached to unknown LMU".into()));
        }
        if lmu_bs.iter().flatten().any(|j| *j >= n_bs) {
            return Err(ModelError::Dimension("LMU associated with unknown BS".into()));
        }
        let n_sensors = sensor_lmu.len();
        Ok(Self {
            intra_loss: vec![0.0; n_sensors],
            inter_loss: vec![0.0; n_lmus],
            resolution: vec![1.0; n_sensors],
            sensor_lmu,
            lmu_bs,
            n_lmus,
            n_bs,
        })
    }

    pub fn with_losses(mut self, intra: Vec<f64>, inter: Vec<f64>) -> Result<Self> {
        if intra.len() != self.sensor_lmu.len() || inter.len() != self.n_lmus {
            return Err(ModelError::Dimension("loss vector length".into()));
        }
        if intra.iter().chain(&inter).any(|l| !(0.0..=1.0).contains(l)) {
            return Err(ModelError::Domain("loss probability outside [0,1]"));
        }
        self.intra_loss = intra;
        self.inter_loss = inter;
        Ok(self)
    }

    pub fn n_sensors(&self) -> usize {
        self.sensor_lmu.len()
    }

    /// Intra-BAN indicator G_ij.
    pub fn intra(&self, sensor: usize, lmu: usize) -> u8 {
        u8::from(self.sensor_lmu[sensor] == Some(lmu))
    }

    /// Inter-BAN indicator O_ij.
    pub fn inter(&self, lmu: usize, bs: usize) -> u8 {
        u8::from(self.lmu_bs[lmu] == Some(bs))
    }
}

/// Per-link volumes and their row/column sums for one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseComponents {
    /// Volume on each source's link (X_ij or Z_ij for its single j).
    pub link: Vec<f64>,
    /// Per-source total (I_i or J_i).
    pub per_source: Vec<f64>,
    /// Per-sink total.
    pub per_sink: Vec<f64>,
}

/// Intra-BAN components X = G·V, aggregated per LMU.
pub fn phase1_components(topo: &Topology, sensor_volumes: &[f64]) -> Result<PhaseComponents> {
    if sensor_volumes.len() != topo.n_sensors() {
        return Err(ModelError::Dimension(format!(
            "{} volumes for {} sensors",
            sensor_volumes.len(),
            topo.n_sensors()
        )));
    }
    if sensor_volumes.iter().any(|v| *v < 0.0) {
        return Err(ModelError::Domain("volumes must be non-negative"));
    }
    let mut link = vec![0.0; sensor_volumes.len()];
    let mut per_sink = vec![0.0; topo.n_lmus];
    for (i, v) in sensor_volumes.iter().enumerate() {
        if let Some(j) = topo.sensor_lmu[i] {
            let x = topo.resolution[i] * v;
            link[i] = x;
            per_sink[j] += x;
        }
    }
    Ok(PhaseComponents { per_source: link.clone(), link, per_sink })
}

/// Inter-BAN components Z = O·F.
pub fn phase2_components(topo: &Topology, lmu_volumes: &[f64]) -> Result<PhaseComponents> {
    if lmu_volumes.len() != topo.n_lmus {
        return Err(ModelError::Dimension(format!("{} volumes for {} LMUs", lmu_volumes.len(), topo.n_lmus)));
    }
    if lmu_volumes.iter().any(|v| *v < 0.0) {
        return Err(ModelError::Domain("volumes must be non-negative"));
    }
    let mut link = vec![0.0; lmu_volumes.len()];
    let mut per_sink = vec![0.0; topo.n_bs];
    for (i, f) in lmu_volumes.iter().enumerate() {
        if let Some(j) = topo.lmu_bs[i] {
            link[i] = *f;
            per_sink[j] += f;
        }
    }
    Ok(PhaseComponents { per_source: link.clone(), link, per_sink })
}

pub fn phase1_cost(price_intra: f64, intra_component: f64) -> f64 {
    price_intra * intra_component
}

pub fn phase2_cost(price_inter: f64, inter_component: f64) -> f64 {
    price_inter * inter_component
}

pub fn total_cost(params: &CostParams, intra: &[f64], inter: &[f64]) -> f64 {
    intra.iter().map(|i| phase1_cost(params.price_intra, *i)).sum::<f64>()
        + inter.iter().map(|j| phase2_cost(params.price_inter, *j)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn phase1_examples() {
        let t = Topology::new(vec![Some(0)], vec![Some(0)], 1, 1).unwrap();
        let c = phase1_components(&t, &[1e6]).unwrap();
        assert_eq!(c.link, vec![1e6]);
        assert_eq!(c.per_sink, vec![1e6]);
        assert_eq!(t.intra(0, 0), 1);

        let off = Topology::new(vec![None, None], vec![Some(0)], 1, 1).unwrap();
        assert_eq!(phase1_components(&off, &[1e6, 5.0]).unwrap().per_sink, vec![0.0]);

        let two = Topology::new(vec![Some(0), Some(0)], vec![Some(0)], 1, 1).unwrap();
        assert_eq!(phase1_components(&two, &[1e6, 2e6]).unwrap().per_sink, vec![3e6]);
        assert!(phase1_components(&two, &[1e6]).is_err());
    }

    #[test]
    fn phase2_examples() {
        let t = Topology::new(vec![], vec![Some(0)], 1, 1).unwrap();
        assert_eq!(phase2_components(&t, &[5e5]).unwrap().per_source, vec![5e5]);
        let off = Topology::new(vec![], vec![None], 1, 1).unwrap();
        assert_eq!(phase2_components(&off, &[5e5]).unwrap().per_source, vec![0.0]);
        let shared = Topology::new(vec![], vec![Some(0), Some(0)], 2, 1).unwrap();
        assert_eq!(phase2_components(&shared, &[1e6, 1e6]).unwrap().per_sink, vec![2e6]);
        assert!(Topology::new(vec![], vec![Some(3)], 1, 2).is_err());
    }

    #[test]
    fn cost_examples() {
        assert!(rel(phase1_cost(2e-9, 1e6), 0.002) < 1e-12);
        assert_eq!(phase1_cost(2e-9, 0.0), 0.0);
        assert_eq!(phase1_cost(2e-9, 2e6), 2.0 * phase1_cost(2e-9, 1e6));
        assert!(rel(phase2_cost(4e-9, 1e6), 0.004) < 1e-12);
        assert_eq!(phase2_cost(4e-9, 0.0), 0.0);
        assert_eq!(phase2_cost(0.0, 1e9), 0.0);
        let p = CostParams::default();
        assert!(rel(total_cost(&p, &[1e6], &[1e6]), 0.006) < 1e-12);
        assert_eq!(total_cost(&p, &[], &[]), 0.0);
        let n = 7;
        let many = total_cost(&p, &vec![1e6; n], &vec![1e6; n]);
        assert!(rel(many, n as f64 * 0.006) < 1e-12);
    }

    proptest! {
        #[test]
        fn adjacency_never_creates_volume(
            vols in prop::collection::vec(0.0f64..1e7, 1..12),
            mask in prop::collection::vec(any::<bool>(), 12),
        ) {
            let links = vols.iter().enumerate().map(|(i, _)| mask[i].then_some(0)).collect();
            let t = Topology::new(links, vec![Some(0)], 1, 1).unwrap();
            let c = phase1_components(&t, &vols).unwrap();
            prop_assert!(c.per_sink[0] <= vols.iter().sum::<f64>() * (1.0 + 1e-12));
            let f = phase2_components(&t, &c.per_sink).unwrap();
            prop_assert!(f.per_sink[0] <= c.per_sink[0]);
        }

        #[test]
        fn total_cost_reassociates(
            intra in prop::collection::vec(0.0f64..1e7, 0..10),
            inter in prop::collection::vec(0.0f64..1e7, 0..10),
            scale in 0.0f64..50.0,
        ) {
            let p = CostParams::default();
            let sum: f64 = intra.iter().map(|i| phase1_cost(p.price_intra, *i)).sum::<f64>()
                + inter.iter().map(|j| phase2_cost(p.price_inter, *j)).sum::<f64>();
            prop_assert_eq!(total_cost(&p, &intra, &inter), sum);
            let si: Vec<f64> = intra.iter().map(|v| v * scale).collect();
            let sj: Vec<f64> = inter.iter().map(|v| v * scale).collect();
            let scaled = total_cost(&p, &si, &sj);
            prop_assert!((scaled - scale * sum).abs() <= 1e-9 * scaled.abs().max(1e-12));
        }
    }
}

use crate::error::{Error, ModelError};
use crate::par::{self, Execution};
use crate::sim::engine::{run, EpochReport, RunOutput};
use crate::sim::scenario::Scenario;

/// Totals and means over a run's epoch reports.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub epochs: usize,
    pub zeta: f64,
    pub cost_intra: f64,
    pub cost_inter: f64,
    pub cost_total: f64,
    pub objective: f64,
    pub traffic_generated: f64,
    pub traffic_served: f64,
    pub energy_consumed: f64,
    /// Mean over epochs with at least one live WBAN.
    pub mean_aggregation_delay: f64,
    pub mean_wbans_alive: f64,
    /// Σ over epochs of live WBANs.
    pub wban_epochs: usize,
    pub constraint_violations: usize,
}

impl Summary {
    /// Aggregation cost per live WBAN-epoch.
    pub fn cost_per_wban_epoch(&self) -> f64 {
        if self.wban_epochs == 0 {
            0.0
        } else {
            self.cost_total / self.wban_epochs as f64
        }
    }
}

pub fn summarize(reports: &[EpochReport]) -> Result<Summary, ModelError> {
    if reports.is_empty() {
        return Err(ModelError::InvalidParameter("cannot summarize an empty run".into()));
    }
    let mut s = Summary { epochs: reports.len(), ..Default::default() };
    let mut delay_sum = 0.0;
    let mut delay_n = 0usize;
    for r in reports {
        s.zeta += r.zeta;
        s.cost_intra += r.cost_intra;
        s.cost_inter += r.cost_inter;
        s.cost_total += r.cost_total;
        s.objective += r.objective;
        s.traffic_generated += r.traffic_generated;
        s.traffic_served += r.traffic_served;
        s.energy_consumed += r.energy_consumed;
        s.wban_epochs += r.wbans_alive;
        s.constraint_violations += r.constraint_violations;
        if r.wbans_alive > 0 {
            delay_sum += r.mean_aggregation_delay;
            delay_n += 1;
        }
    }
    s.mean_wbans_alive = s.wban_epochs as f64 / reports.len() as f64;
    s.mean_aggregation_delay = if delay_n > 0 { delay_sum / delay_n as f64 } else { 0.0 };
    Ok(s)
}

/// Percent improvement of `candidate` over `baseline` where smaller is better.
pub fn reduction_pct(baseline: f64, candidate: f64) -> f64 {
    if baseline == 0.0 {
        if candidate == 0.0 {
            0.0
        } else {
            -100.0 * candidate.signum()
        }
    } else {
        100.0 * (baseline - candidate) / baseline.abs()
    }
}

/// Percent improvement of `candidate` over `baseline` where larger is better.
pub fn gain_pct(baseline: f64, candidate: f64) -> f64 {
    -reduction_pct(baseline, candidate)
}

/// Paired comparison of two runs on the same seed. Positive numbers mean
/// the candidate is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub energy_reduction_pct: f64,
    pub traffic_served_gain_pct: f64,
    pub cost_reduction_pct: f64,
    pub cost_per_wban_epoch_reduction_pct: f64,
    pub delay_reduction_pct: f64,
    pub objective_reduction_pct: f64,
}

pub fn improvement(baseline: &Summary, candidate: &Summary) -> Improvement {
    Improvement {
        energy_reduction_pct: reduction_pct(baseline.energy_consumed, candidate.energy_consumed),
        traffic_served_gain_pct: gain_pct(baseline.traffic_served, candidate.traffic_served),
        cost_reduction_pct: reduction_pct(baseline.cost_total, candidate.cost_total),
        cost_per_wban_epoch_reduction_pct: reduction_pct(
            baseline.cost_per_wban_epoch(),
            candidate.cost_per_wban_epoch(),
        ),
        delay_reduction_pct: reduction_pct(baseline.mean_aggregation_delay, candidate.mean_aggregation_delay),
        objective_reduction_pct: reduction_pct(baseline.objective, candidate.objective),
    }
}

/// Runs independent scenarios, in parallel when allowed. Each run itself is
/// sequential, so results do not depend on scheduling.
pub fn run_batch(scenarios: &[Scenario], exec: Execution) -> Vec<Result<RunOutput, Error>> {
    par::map(exec, scenarios, |sc| run(sc, Execution::Sequential))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(epoch: usize) -> EpochReport {
        EpochReport {
            epoch,
            zeta: 2.0,
            cost_intra: 0.25,
            cost_inter: 0.5,
            cost_total: 0.75,
            objective: 0.75 + 2e-9,
            traffic_generated: 10.0,
            traffic_served: 8.0,
            energy_consumed: 0.125,
            mean_aggregation_delay: 3.0,
            wbans_alive: 4,
            constraint_violations: 0,
        }
    }

    #[test]
    fn single_epoch_summary_equals_epoch() {
        let r = report(0);
        let s = summarize(&[r]).unwrap();
        assert_eq!(s.epochs, 1);
        assert_eq!(s.cost_total, r.cost_total);
        assert_eq!(s.traffic_served, r.traffic_served);
        assert_eq!(s.energy_consumed, r.energy_consumed);
        assert_eq!(s.mean_aggregation_delay, r.mean_aggregation_delay);
        assert_eq!(s.mean_wbans_alive, 4.0);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn improvement_against_self_is_zero() {
        let s = summarize(&[report(0), report(1)]).unwrap();
        let i = improvement(&s, &s);
        assert_eq!(i.energy_reduction_pct, 0.0);
        assert_eq!(i.traffic_served_gain_pct, 0.0);
        assert_eq!(i.delay_reduction_pct, 0.0);
    }

    #[test]
    fn percentages() {
        assert_eq!(reduction_pct(200.0, 150.0), 25.0);
        assert_eq!(gain_pct(200.0, 250.0), 25.0);
    }
}

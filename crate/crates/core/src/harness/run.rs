use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Scenario;
use super::output;
use super::stats::Quartiles;
use crate::error::{Error, Result};
use crate::pso::{self, repair, BeamwidthVector, SwarmConfig, TracePoint};
use crate::scheduling::{build_weights, Mac};
use crate::topology::{self, Role, Topology};
use crate::welfare::{RateReport, WelfareEvaluator};

/// Seed of Monte Carlo run `run` derived from the scenario seed (SplitMix64).
pub fn run_seed(base: u64, run: usize) -> u64 {
    let mut z = base.wrapping_add((run as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub best_fitness: f64,
    pub infeasible_evaluations: usize,
    pub evaluations: usize,
    pub trace: Vec<TracePoint<f64>>,
    pub initial: RateReport<f64>,
    #[serde(rename = "final")]
    pub final_: RateReport<f64>,
    pub best_beamwidths: BeamwidthVector<f64>,
}

/// Per-iteration statistics across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Quartiles of best-so-far welfare per UE, Gbit/s.
    pub per_ue_gbps: Quartiles,
    /// Median best-so-far welfare, bit/s.
    pub best_gamma: f64,
    /// Median of the best current-position welfare, bit/s.
    pub current_gamma: f64,
    /// Median of the population mean welfare, bit/s.
    pub mean_gamma: f64,
}

/// Initial vs optimized value of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub initial: f64,
    /// Median over runs.
    #[serde(rename = "final")]
    pub final_: f64,
    pub percent: f64,
}

impl Delta {
    /// Percent change of a linear quantity.
    pub fn linear(initial: f64, final_: f64) -> Self {
        Self {
            initial,
            final_,
            percent: 100.0 * (final_ - initial) / initial,
        }
    }

    /// Values in dB(m); percent change of the underlying power. Unchanged
    /// values give 0 even at zero power.
    pub fn power_db(initial: f64, final_: f64) -> Self {
        let percent = if final_ == initial {
            0.0
        } else {
            100.0 * (10f64.powf((final_ - initial) / 10.0) - 1.0)
        };
        Self {
            initial,
            final_,
            percent,
        }
    }
}

/// Interference, SINR and throughput deltas. Interference percent is in
/// linear power; SINR percent is on the dB values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Mean interference at anchor receivers, dBm.
    pub interference_dbm: Option<Delta>,
    /// Mean SINR at anchor receivers, dB.
    pub sinr_db: Option<Delta>,
    /// Welfare per UE, Gbit/s.
    pub throughput_gbps: Delta,
    pub all_interference_dbm: Delta,
    pub all_sinr_db: Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub name: String,
    pub digest: String,
    pub scenario: Scenario,
    pub effective_aues: usize,
    pub effective_cues: usize,
    /// TDMA slots averaged per evaluation.
    pub slots: u64,
    pub summary: Summary,
    pub trace: Vec<TraceRow>,
    pub runs: Vec<RunRecord>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub topology: Option<Topology<f64>>,
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    Quartiles::of(&v).median
}

/// Builds the topology once and runs `monte_carlo_runs` independent swarms
/// on it with derived seeds.
pub fn run_scenario(scenario: &Scenario) -> Result<RunResult> {
    scenario.validate()?;
    let started = Instant::now();
    let params = scenario.radio;
    let topo = scenario
        .topology
        .build(&params, scenario.swarm.initial_beamwidth)?;
    let violations = topology::validate(&topo);
    if !violations.is_empty() {
        return Err(Error::Config(format!(
            "generated topology violates {violations:?}"
        )));
    }
    let weights = build_weights(&topo, scenario.mac);
    let eval = WelfareEvaluator::with_max_slots(&topo, &weights, &params, scenario.max_slots)?;

    let start = repair(
        &BeamwidthVector::uniform(&topo, scenario.swarm.initial_beamwidth),
        &topo,
        &params,
    );
    let initial = eval.evaluate(&start)?;

    let runs: Vec<RunRecord> = (0..scenario.monte_carlo_runs)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(scenario.swarm.seed, run);
            let cfg = SwarmConfig {
                seed,
                ..scenario.swarm.clone()
            };
            let opt = pso::optimize(&eval, &cfg)?;
            Ok(RunRecord {
                run,
                seed,
                best_fitness: opt.best_fitness,
                infeasible_evaluations: opt.infeasible_evaluations,
                evaluations: opt.evaluations,
                trace: opt.trace,
                initial: initial.clone(),
                final_: eval.evaluate(&opt.best)?,
                best_beamwidths: opt.best,
            })
        })
        .collect::<Result<_>>()?;

    let ues = topo.ue_count() as f64;
    let trace = (0..=scenario.swarm.iterations)
        .map(|it| {
            let per_ue: Vec<f64> = runs.iter().map(|r| r.trace[it].best / ues / 1e9).collect();
            TraceRow {
                iteration: it,
                per_ue_gbps: Quartiles::of(&per_ue),
                best_gamma: median(runs.iter().map(|r| r.trace[it].best)),
                current_gamma: median(runs.iter().map(|r| r.trace[it].current)),
                mean_gamma: median(runs.iter().map(|r| r.trace[it].mean)),
            }
        })
        .collect();

    let finals = |f: &dyn Fn(&RateReport<f64>) -> f64| median(runs.iter().map(|r| f(&r.final_)));
    let anchor_delta = |pick: fn(&RateReport<f64>) -> Option<f64>, linear_power: bool| {
        let init = pick(&initial)?;
        let vals: Option<Vec<f64>> = runs.iter().map(|r| pick(&r.final_)).collect();
        let fin = median(vals?.into_iter());
        Some(if linear_power {
            Delta::power_db(init, fin)
        } else {
            Delta::linear(init, fin)
        })
    };
    let summary = Summary {
        interference_dbm: anchor_delta(|r| r.mean_interference_dbm, true),
        sinr_db: anchor_delta(|r| r.mean_sinr_db, false),
        throughput_gbps: Delta::linear(initial.mean_per_ue / 1e9, finals(&|r| r.mean_per_ue / 1e9)),
        all_interference_dbm: Delta::power_db(
            initial.all_interference_dbm,
            finals(&|r| r.all_interference_dbm),
        ),
        all_sinr_db: Delta::linear(initial.all_sinr_db, finals(&|r| r.all_sinr_db)),
    };

    Ok(RunResult {
        name: scenario.label(),
        digest: scenario.digest(),
        scenario: scenario.clone(),
        effective_aues: topo.ids_with_role(Role::Aue).count(),
        effective_cues: topo.ids_with_role(Role::Cue).count(),
        slots: eval.slots(),
        summary,
        trace,
        runs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        topology: Some(topo),
    })
}

/// Outcome of one sweep cell.
#[derive(Debug)]
pub struct SweepEntry {
    pub name: String,
    pub mac: Mac,
    pub nominal_aues: usize,
    pub result: Result<RunResult>,
}

/// Runs every scenario, writing `out/<name>/` for each success and
/// `out/summary.csv` over all of them. A failing scenario does not stop the
/// rest.
pub fn sweep(scenarios: &[Scenario], out: &Path) -> Result<Vec<SweepEntry>> {
    if scenarios.is_empty() {
        return Err(Error::Usage("sweep needs at least one scenario".into()));
    }
    let mut entries = Vec::with_capacity(scenarios.len());
    for (i, s) in scenarios.iter().enumerate() {
        let mut name = s.label();
        if scenarios[..i].iter().any(|p| p.label() == name) {
            name = format!("{name}-{i}");
        }
        let result = run_scenario(s).and_then(|r| {
            output::write_run(&r, &out.join(&name))?;
            Ok(r)
        });
        entries.push(SweepEntry {
            name,
            mac: s.mac,
            nominal_aues: s.topology.nominal_aues,
            result,
        });
    }
    output::write_summary_csv(&entries, &out.join("summary.csv"))?;
    Ok(entries)
}

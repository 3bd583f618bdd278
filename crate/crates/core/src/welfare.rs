//! Per-node rates and network welfare.
//!
//! Link rates are computed slot by slot with that slot's active set and
//! averaged over the scheduling cycle, a silent slot counting as zero. MAC
//! weights then scale the averaged rates:
//!
//! * direct CUE: `w_scbs_cue * R(scbs, m)`
//! * relayed CUE: `w_aue_cue * min(R(scbs, n) / 2, R(n, m) / 2)`
//! * anchor: `w_scbs_aue * R(scbs, n)`
//! * SCBS: sum of its direct CUE and anchor terms; welfare is the sum over SCBSs.
//!
//! [`WelfareEvaluator`] caches geometry once per topology so the swarm can call
//! it thousands of times. [`system_welfare`] is the one-shot convenience.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pso::BeamwidthVector;
use crate::radio::{self, RadioParams};
use crate::scalar::{self, Scalar};
use crate::scheduling::{Mac, ScheduleWeights};
use crate::topology::{LinkKind, NodeId, Role, Topology};

/// Upper bound on TDMA slots simulated per evaluation when the joint cycle is
/// longer. The window is never shorter than the longest anchor cycle. Rates
/// are the mean over the window's active slots times the link's exact duty
/// cycle, which equals the full-cycle average whenever the window covers it.
pub const DEFAULT_MAX_SLOTS: u64 = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport<S> {
    pub per_cue: BTreeMap<NodeId, S>,
    pub per_aue: BTreeMap<NodeId, S>,
    pub per_scbs: BTreeMap<NodeId, S>,
    /// Network welfare, bit/s.
    pub gamma: S,
    pub mean_per_ue: S,
    /// Mean interference at anchor receivers, dBm. `None` without anchors.
    pub mean_interference_dbm: Option<S>,
    /// Mean SINR at anchor receivers, dB.
    pub mean_sinr_db: Option<S>,
    /// Same averages over every active receiver.
    pub all_interference_dbm: S,
    pub all_sinr_db: S,
    /// Cycle-averaged rate of each link, in link order.
    pub link_rates: Vec<S>,
}

/// Geometry of one (interfering link, victim link) pair.
#[derive(Debug, Clone, Copy)]
struct Coupling<S> {
    /// `p_z * g_c` toward the victim receiver; zero when excluded.
    power_path: S,
    /// |deviation| of the victim receiver from the interferer's boresight.
    tx_dev: S,
    /// |deviation| of the interferer from the victim's boresight.
    rx_dev: S,
}

/// Cached evaluation of welfare for one topology, schedule and radio setup.
#[derive(Debug, Clone)]
pub struct WelfareEvaluator<'a, S> {
    topology: &'a Topology<S>,
    weights: &'a ScheduleWeights<S>,
    params: RadioParams<S>,
    slots: u64,
    /// `p_i * g_c` on each link.
    signal_path: Vec<S>,
    /// Row-major `[victim][interferer]`.
    coupling: Vec<Coupling<S>>,
    /// Slots each link is on within the window.
    on_count: Vec<u64>,
    /// Long-run fraction of slots each link is on.
    duty: Vec<S>,
}

impl<'a, S: Scalar> WelfareEvaluator<'a, S> {
    pub fn new(
        topology: &'a Topology<S>,
        weights: &'a ScheduleWeights<S>,
        params: &RadioParams<S>,
    ) -> Result<Self> {
        Self::with_max_slots(topology, weights, params, DEFAULT_MAX_SLOTS)
    }

    pub fn with_max_slots(
        topology: &'a Topology<S>,
        weights: &'a ScheduleWeights<S>,
        params: &RadioParams<S>,
        max_slots: u64,
    ) -> Result<Self> {
        if weights.link_count() != topology.links.len() {
            return Err(Error::Config(format!(
                "schedule covers {} links but topology has {}",
                weights.link_count(),
                topology.links.len()
            )));
        }
        let n = topology.links.len();
        let mut signal_path = Vec::with_capacity(n);
        for l in &topology.links {
            let tx = topology.node(l.tx);
            let rx = topology.node(l.rx);
            let path = radio::channel_gain(scalar::distance(tx.position, rx.position), params)?;
            signal_path.push(scalar::dbm_to_watts(tx.tx_power_dbm) * path);
        }

        let mut coupling = Vec::with_capacity(n * n);
        for victim in &topology.links {
            let rx_pos = topology.node(victim.rx).position;
            for other in &topology.links {
                let z = topology.node(other.tx);
                if other.tx == victim.tx || other.tx == victim.rx {
                    coupling.push(Coupling {
                        power_path: S::zero(),
                        tx_dev: S::zero(),
                        rx_dev: S::zero(),
                    });
                    continue;
                }
                let path = radio::channel_gain(scalar::distance(z.position, rx_pos), params)?;
                let tx_dev = scalar::wrap_degrees(
                    scalar::bearing_degrees(z.position, rx_pos) - other.tx_boresight,
                )
                .abs();
                let rx_dev = scalar::wrap_degrees(
                    scalar::bearing_degrees(rx_pos, z.position) - victim.rx_boresight,
                )
                .abs();
                coupling.push(Coupling {
                    power_path: scalar::dbm_to_watts(z.tx_power_dbm) * path,
                    tx_dev,
                    rx_dev,
                });
            }
        }

        let longest = weights
            .anchors
            .iter()
            .map(|a| a.cycle_len() as u64)
            .max()
            .unwrap_or(1);
        let slots = weights.cycle_length().min(max_slots.max(longest));
        let mut on_count = vec![0u64; n];
        for s in 0..slots {
            for i in weights.active_at(s) {
                on_count[i] += 1;
            }
        }

        let mut duty = vec![S::one(); n];
        if weights.strategy == Mac::Tdma {
            for a in &weights.anchors {
                let share = S::one() / S::count(a.cycle_len());
                duty[a.backhaul] = share;
                for &i in &a.d2d {
                    duty[i] = share;
                }
            }
        }

        Ok(Self {
            topology,
            weights,
            params: *params,
            slots,
            signal_path,
            coupling,
            on_count,
            duty,
        })
    }

    /// Slots averaged per evaluation.
    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn topology(&self) -> &Topology<S> {
        self.topology
    }

    pub fn params(&self) -> &RadioParams<S> {
        &self.params
    }

    fn check(&self, beams: &BeamwidthVector<S>) -> Result<()> {
        let expected = self.topology.dimension();
        if beams.len() != expected || beams.link_count() != self.topology.links.len() {
            return Err(Error::Dimension {
                expected,
                actual: beams.len(),
            });
        }
        Ok(())
    }

    /// Network welfare only; what the swarm maximizes.
    pub fn gamma(&self, beams: &BeamwidthVector<S>) -> Result<S> {
        Ok(self.evaluate_inner(beams, false)?.gamma)
    }

    pub fn evaluate(&self, beams: &BeamwidthVector<S>) -> Result<RateReport<S>> {
        self.evaluate_inner(beams, true)
    }

    fn evaluate_inner(&self, beams: &BeamwidthVector<S>, full: bool) -> Result<RateReport<S>> {
        self.check(beams)?;
        let topo = self.topology;
        let n = topo.links.len();
        let g = self.params.sidelobe_gain;

        let tx_main: Vec<S> = (0..n)
            .map(|i| radio::mainlobe_gain(beams.tx(i), g))
            .collect();
        let rx_width: Vec<S> = topo.links.iter().map(|l| beams.rx(l.rx)).collect();
        let rx_main: Vec<S> = rx_width
            .iter()
            .map(|&w| radio::mainlobe_gain(w, g))
            .collect();
        let delay: Vec<S> = topo
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| {
                radio::alignment_delay(
                    beams.tx(i),
                    rx_width[i],
                    l.tx_sector_width,
                    l.rx_sector_width,
                    self.params.pilot_ratio,
                )
            })
            .collect::<Result<_>>()?;
        let signal: Vec<S> = (0..n)
            .map(|i| self.signal_path[i] * tx_main[i] * rx_main[i])
            .collect();

        // Victims we need rates for. D2D links never enter the welfare sum.
        let wanted: Vec<bool> = topo
            .links
            .iter()
            .map(|l| full || l.kind != LinkKind::D2d)
            .collect();

        let half = S::lit(0.5);
        let term = |victim: usize, other: usize| -> S {
            let c = &self.coupling[victim * n + other];
            if c.power_path == S::zero() {
                return S::zero();
            }
            let gt = if c.tx_dev <= beams.tx(other) * half {
                tx_main[other]
            } else {
                g
            };
            let gr = if c.rx_dev <= rx_width[victim] * half {
                rx_main[victim]
            } else {
                g
            };
            c.power_path * gt * gr
        };

        let noise = self.params.noise_power();
        let mut rate_sum = vec![S::zero(); n];
        let mut interf_all = S::zero();
        let mut sinr_all = S::zero();
        let mut count_all = 0usize;
        let mut interf_anchor = S::zero();
        let mut sinr_anchor = S::zero();
        let mut count_anchor = 0usize;

        let mut per_slot = |victim: usize, interference: S| {
            let sinr = signal[victim] / (interference + noise);
            rate_sum[victim] = rate_sum[victim]
                + radio::effective_rate(delay[victim], sinr, self.params.bandwidth);
            if full {
                interf_all = interf_all + interference;
                sinr_all = sinr_all + sinr;
                count_all += 1;
                if topo.node(topo.links[victim].rx).role == Role::Aue {
                    interf_anchor = interf_anchor + interference;
                    sinr_anchor = sinr_anchor + sinr;
                    count_anchor += 1;
                }
            }
        };

        match self.weights.strategy {
            Mac::AllOn => {
                // Group interferers by transmitter; links are sorted by tx.
                let mut groups: Vec<(usize, usize)> = Vec::new();
                let mut start = 0;
                for i in 1..=n {
                    if i == n || topo.links[i].tx != topo.links[start].tx {
                        groups.push((start, i));
                        start = i;
                    }
                }
                for victim in (0..n).filter(|&v| wanted[v]) {
                    let mut total = S::zero();
                    for &(a, b) in &groups {
                        let mut worst = S::zero();
                        for other in a..b {
                            worst = worst.max(term(victim, other));
                        }
                        total = total + worst;
                    }
                    per_slot(victim, total);
                }
            }
            Mac::Tdma => {
                let always = &self.weights.always_on;
                let anchors = &self.weights.anchors;
                // Strongest always-on SCBS link toward each victim.
                let direct_max: Vec<S> = (0..n)
                    .map(|v| {
                        if wanted[v] {
                            always.iter().fold(S::zero(), |m, &i| m.max(term(v, i)))
                        } else {
                            S::zero()
                        }
                    })
                    .collect();
                let mut current = vec![0usize; anchors.len()];
                for s in 0..self.slots {
                    for (k, a) in anchors.iter().enumerate() {
                        current[k] = a.link_at(s);
                    }
                    let victims = always.iter().copied().chain(current.iter().copied());
                    for victim in victims.filter(|&v| wanted[v]) {
                        let mut scbs = direct_max[victim];
                        let mut total = S::zero();
                        for (k, &link) in current.iter().enumerate() {
                            if link == anchors[k].backhaul {
                                scbs = scbs.max(term(victim, link));
                            } else {
                                total = total + term(victim, link);
                            }
                        }
                        per_slot(victim, total + scbs);
                    }
                }
            }
        }

        let link_rates: Vec<S> = (0..n)
            .map(|i| {
                if self.on_count[i] == 0 || !wanted[i] {
                    S::zero()
                } else {
                    rate_sum[i] / S::lit(self.on_count[i] as f64) * self.duty[i]
                }
            })
            .collect();

        let w = self.weights;
        let mut per_cue = BTreeMap::new();
        let mut per_aue = BTreeMap::new();
        let mut per_scbs: BTreeMap<NodeId, S> = BTreeMap::new();
        for (i, link) in topo.links.iter().enumerate() {
            match link.kind {
                LinkKind::I2dDirect => {
                    let r = w.scbs_cue.get(&link.rx).copied().unwrap_or(S::zero()) * link_rates[i];
                    per_cue.insert(link.rx, r);
                    let e = per_scbs.entry(link.tx).or_insert(S::zero());
                    *e = *e + r;
                }
                LinkKind::I2dBackhaul => {
                    let r = w.scbs_aue.get(&link.rx).copied().unwrap_or(S::zero()) * link_rates[i];
                    per_aue.insert(link.rx, r);
                    let e = per_scbs.entry(link.tx).or_insert(S::zero());
                    *e = *e + r;
                }
                LinkKind::D2d if full => {
                    let backhaul = topo.link_into(link.tx).expect("anchor has a backhaul");
                    let weight = w.relay_weight(link.tx, link.rx).unwrap_or(S::zero());
                    let r = weight * (link_rates[backhaul] * half).min(link_rates[i] * half);
                    per_cue.insert(link.rx, r);
                }
                LinkKind::D2d => {}
            }
        }
        for s in topo.ids_with_role(Role::Scbs) {
            per_scbs.entry(s).or_insert(S::zero());
        }
        let gamma = per_scbs.values().fold(S::zero(), |acc, &v| acc + v);
        let ues = topo.ue_count().max(1);

        let mean = |sum: S, count: usize| sum / S::count(count.max(1));
        Ok(RateReport {
            per_cue,
            per_aue,
            per_scbs,
            gamma,
            mean_per_ue: gamma / S::count(ues),
            mean_interference_dbm: (count_anchor > 0)
                .then(|| scalar::watts_to_dbm(mean(interf_anchor, count_anchor))),
            mean_sinr_db: (count_anchor > 0)
                .then(|| scalar::linear_to_db(mean(sinr_anchor, count_anchor))),
            all_interference_dbm: scalar::watts_to_dbm(mean(interf_all, count_all)),
            all_sinr_db: scalar::linear_to_db(mean(sinr_all, count_all)),
            link_rates,
        })
    }
}

/// Rates and welfare of `topology` at `beams` under `weights`.
pub fn system_welfare<S: Scalar>(
    topology: &Topology<S>,
    weights: &ScheduleWeights<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<RateReport<S>> {
    WelfareEvaluator::new(topology, weights, params)?.evaluate(beams)
}

/// Cycle-averaged rate of the link into `ue`.
fn rate_into<S: Scalar>(report: &RateReport<S>, topology: &Topology<S>, ue: NodeId) -> Result<S> {
    topology
        .link_into(ue)
        .map(|i| report.link_rates[i])
        .ok_or_else(|| Error::Domain(format!("{ue} has no serving link")))
}

/// Rate delivered to CUE `m`.
pub fn cue_rate<S: Scalar>(
    m: NodeId,
    topology: &Topology<S>,
    weights: &ScheduleWeights<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<S> {
    if topology.nodes.get(m.0).map(|n| n.role) != Some(Role::Cue) {
        return Err(Error::Domain(format!("{m} is not a CUE")));
    }
    let report = system_welfare(topology, weights, beams, params)?;
    let server = topology.serving_node(m).expect("CUE has a server");
    if topology.node(server).role == Role::Scbs {
        let w = weights.scbs_cue.get(&m).copied().unwrap_or(S::zero());
        Ok(w * rate_into(&report, topology, m)?)
    } else {
        let w = weights.relay_weight(server, m).unwrap_or(S::zero());
        let half = S::lit(0.5);
        let backhaul = rate_into(&report, topology, server)?;
        let d2d = rate_into(&report, topology, m)?;
        Ok(w * (backhaul * half).min(d2d * half))
    }
}

/// Backhaul rate credited to anchor `n`.
pub fn aue_rate<S: Scalar>(
    n: NodeId,
    topology: &Topology<S>,
    weights: &ScheduleWeights<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<S> {
    if topology.nodes.get(n.0).map(|n| n.role) != Some(Role::Aue) {
        return Err(Error::Domain(format!("{n} is not an anchor")));
    }
    let report = system_welfare(topology, weights, beams, params)?;
    let w = weights.scbs_aue.get(&n).copied().unwrap_or(S::zero());
    Ok(w * rate_into(&report, topology, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::build_weights;
    use crate::topology::{associate, deploy, select_aues, Node};

    fn node(id: usize, x: f64, y: f64, role: Role) -> Node<f64> {
        Node {
            id: NodeId(id),
            position: [x, y],
            role,
            tx_power_dbm: if role == Role::Scbs { 30.0 } else { 15.0 },
        }
    }

    fn relay_line() -> Topology<f64> {
        let nodes = vec![
            node(0, 50.0, 50.0, Role::Scbs),
            node(1, 30.0, 50.0, Role::Cue),
            node(2, 10.0, 52.0, Role::Cue),
            node(3, 50.0, 60.0, Role::Cue),
        ];
        associate(&nodes, &[NodeId(1)], 100.0, &RadioParams::default())
    }

    #[test]
    fn single_direct_link_welfare_is_its_rate() {
        let p = RadioParams::default();
        let nodes = vec![
            node(0, 50.0, 50.0, Role::Scbs),
            node(1, 20.0, 30.0, Role::Cue),
        ];
        let topo = associate(&nodes, &[], 100.0, &p);
        let beams = BeamwidthVector::uniform(&topo, 3.0);
        let w = build_weights(&topo, Mac::AllOn);
        let report = system_welfare(&topo, &w, &beams, &p).unwrap();
        let expect = radio::link_rate(0, &[0], &topo, &beams, &p).unwrap();
        assert!((report.gamma - expect).abs() <= 1e-9 * expect);
        assert_eq!(report.mean_per_ue, report.gamma);
        assert!(report.mean_interference_dbm.is_none());
    }

    #[test]
    fn matches_reference_per_slot_rates() {
        let p = RadioParams::default();
        let nodes = deploy(25, 100.0_f64, 8).unwrap();
        let aues = select_aues(&nodes, 4, 100.0, &p, 3.0).unwrap();
        let topo = associate(&nodes, &aues, 100.0, &p);
        let mut beams = BeamwidthVector::uniform(&topo, 3.0);
        for (k, v) in beams.values_mut().iter_mut().enumerate() {
            *v = 3.0 + (k % 7) as f64 * 2.5;
        }
        for mac in [Mac::AllOn, Mac::Tdma] {
            let w = build_weights(&topo, mac);
            let eval = WelfareEvaluator::with_max_slots(&topo, &w, &p, u64::MAX).unwrap();
            let report = eval.evaluate(&beams).unwrap();
            let mut sums = vec![0.0; topo.links.len()];
            let mut counts = vec![0usize; topo.links.len()];
            for (_, active) in w.active_sets(u64::MAX) {
                for &i in &active {
                    sums[i] += radio::link_rate(i, &active, &topo, &beams, &p).unwrap();
                    counts[i] += 1;
                }
            }
            let cycle = w.cycle_length() as f64;
            for i in 0..topo.links.len() {
                assert!(counts[i] > 0);
                let r = sums[i] / cycle;
                assert!(
                    (report.link_rates[i] - r).abs() <= 1e-9 * r,
                    "{mac} link {i}: {} vs {r}",
                    report.link_rates[i]
                );
            }
        }
    }

    #[test]
    fn gamma_sums_scbs_terms() {
        let p = RadioParams::default();
        let topo = relay_line();
        let beams = BeamwidthVector::uniform(&topo, 5.0);
        for mac in [Mac::AllOn, Mac::Tdma] {
            let w = build_weights(&topo, mac);
            let r = system_welfare(&topo, &w, &beams, &p).unwrap();
            let direct = r.per_cue[&NodeId(3)];
            let anchor = r.per_aue[&NodeId(1)];
            assert!((r.gamma - (direct + anchor)).abs() <= 1e-6);
            assert_eq!(r.per_scbs[&NodeId(0)], r.gamma);
            assert!((r.mean_per_ue - r.gamma / 3.0).abs() <= 1e-6);
            assert!(r
                .per_cue
                .values()
                .chain(r.per_aue.values())
                .all(|&v| v >= 0.0));
            // relayed CUE capped at half its backhaul
            assert!(r.per_cue[&NodeId(2)] <= anchor / 2.0 + 1e-6);
        }
    }

    #[test]
    fn per_node_helpers_agree_with_report() {
        let p = RadioParams::default();
        let topo = relay_line();
        let beams = BeamwidthVector::uniform(&topo, 4.0);
        let w = build_weights(&topo, Mac::Tdma);
        let r = system_welfare(&topo, &w, &beams, &p).unwrap();
        assert_eq!(
            cue_rate(NodeId(2), &topo, &w, &beams, &p).unwrap(),
            r.per_cue[&NodeId(2)]
        );
        assert_eq!(
            cue_rate(NodeId(3), &topo, &w, &beams, &p).unwrap(),
            r.per_cue[&NodeId(3)]
        );
        assert_eq!(
            aue_rate(NodeId(1), &topo, &w, &beams, &p).unwrap(),
            r.per_aue[&NodeId(1)]
        );
        assert!(cue_rate(NodeId(1), &topo, &w, &beams, &p).is_err());
        assert!(aue_rate(NodeId(3), &topo, &w, &beams, &p).is_err());
    }

    #[test]
    fn relayed_rate_applies_weight_to_min_half() {
        let p = RadioParams::default();
        let topo = relay_line();
        let beams = BeamwidthVector::uniform(&topo, 6.0);
        let w = build_weights(&topo, Mac::Tdma);
        let r = system_welfare(&topo, &w, &beams, &p).unwrap();
        let bh = r.link_rates[topo.link_into(NodeId(1)).unwrap()];
        let d2d = r.link_rates[topo.link_into(NodeId(2)).unwrap()];
        let expect = 0.5 * (bh / 2.0).min(d2d / 2.0);
        assert!((r.per_cue[&NodeId(2)] - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = RadioParams::default();
        let topo = relay_line();
        let w = build_weights(&topo, Mac::AllOn);
        let other = associate(
            &[
                node(0, 50.0, 50.0, Role::Scbs),
                node(1, 1.0, 1.0, Role::Cue),
            ],
            &[],
            100.0,
            &p,
        );
        let beams = BeamwidthVector::uniform(&other, 3.0);
        assert!(matches!(
            system_welfare(&topo, &w, &beams, &p),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn gamma_only_path_agrees() {
        let p = RadioParams::default();
        let nodes = deploy(40, 100.0_f64, 3).unwrap();
        let aues = select_aues(&nodes, 6, 100.0, &p, 3.0).unwrap();
        let topo = associate(&nodes, &aues, 100.0, &p);
        let beams = BeamwidthVector::uniform(&topo, 7.0);
        for mac in [Mac::AllOn, Mac::Tdma] {
            let w = build_weights(&topo, mac);
            let eval = WelfareEvaluator::new(&topo, &w, &p).unwrap();
            assert_eq!(
                eval.gamma(&beams).unwrap(),
                eval.evaluate(&beams).unwrap().gamma
            );
        }
    }

    #[test]
    fn f32_tracks_f64() {
        let p64 = RadioParams::<f64>::default();
        let topo64 = relay_line();
        let beams64 = BeamwidthVector::uniform(&topo64, 5.0);
        let g64 = system_welfare(&topo64, &build_weights(&topo64, Mac::Tdma), &beams64, &p64)
            .unwrap()
            .gamma;

        let p32 = RadioParams::<f32>::default();
        let nodes32: Vec<Node<f32>> = topo64
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id,
                position: [n.position[0] as f32, n.position[1] as f32],
                role: Role::Cue,
                tx_power_dbm: n.tx_power_dbm as f32,
            })
            .enumerate()
            .map(|(i, mut n)| {
                if i == 0 {
                    n.role = Role::Scbs;
                }
                n
            })
            .collect();
        let topo32 = associate(&nodes32, &[NodeId(1)], 100.0, &p32);
        let beams32 = BeamwidthVector::uniform(&topo32, 5.0);
        let g32 = system_welfare(&topo32, &build_weights(&topo32, Mac::Tdma), &beams32, &p32)
            .unwrap()
            .gamma;
        assert!(((g32 as f64) - g64).abs() <= 1e-4 * g64);
    }
}

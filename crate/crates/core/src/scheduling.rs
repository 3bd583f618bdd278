//! MAC weights and per-slot active link sets.
//!
//! The SCBS behaves like a multi-beam (MU-MIMO) transmitter and keeps every
//! direct link on in every slot. Under TDMA an anchor serving `c` CUEs cycles
//! through `c + 1` turns: one per CUE, then one turn in which it only listens
//! to its backhaul. Anchors run their cycles independently with aligned turn
//! indices, so the joint pattern repeats every `lcm(c_n + 1)` slots.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{LinkKind, NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mac {
    #[serde(rename = "tdma")]
    Tdma,
    #[serde(rename = "all-on")]
    AllOn,
}

impl fmt::Display for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mac::Tdma => "tdma",
            Mac::AllOn => "all-on",
        })
    }
}

impl FromStr for Mac {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tdma" => Ok(Mac::Tdma),
            "all-on" | "allon" | "all_on" => Ok(Mac::AllOn),
            other => Err(Error::Config(format!("unknown MAC strategy {other:?}"))),
        }
    }
}

/// Turn table of one anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTurns {
    pub aue: NodeId,
    /// Backhaul link into the anchor.
    pub backhaul: usize,
    /// D2D links in CUE id order; turn `k < len` transmits `d2d[k]`.
    pub d2d: Vec<usize>,
}

impl AnchorTurns {
    pub fn cycle_len(&self) -> usize {
        self.d2d.len() + 1
    }

    /// Link used in `slot`: a D2D link, or the backhaul on the listen turn.
    pub fn link_at(&self, slot: u64) -> usize {
        let turn = (slot % self.cycle_len() as u64) as usize;
        self.d2d.get(turn).copied().unwrap_or(self.backhaul)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleWeights<S> {
    pub strategy: Mac,
    /// SCBS weight per direct CUE.
    pub scbs_cue: BTreeMap<NodeId, S>,
    /// SCBS weight per anchor.
    pub scbs_aue: BTreeMap<NodeId, S>,
    /// Anchor weight per relayed CUE, keyed by anchor then CUE.
    pub aue_cue: BTreeMap<NodeId, BTreeMap<NodeId, S>>,
    /// Fraction of slots an anchor spends receiving its backhaul.
    pub aue_receive_share: BTreeMap<NodeId, S>,
    /// SCBS direct links, on in every slot.
    pub always_on: Vec<usize>,
    pub anchors: Vec<AnchorTurns>,
    link_count: usize,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Builds MAC weights and turn tables for `topology`.
pub fn build_weights<S: Scalar>(topology: &Topology<S>, strategy: Mac) -> ScheduleWeights<S> {
    let mut scbs_cue = BTreeMap::new();
    let mut scbs_aue = BTreeMap::new();
    let mut aue_cue = BTreeMap::new();
    let mut aue_receive_share = BTreeMap::new();
    let mut always_on = Vec::new();
    let mut anchors = Vec::new();

    for (i, link) in topology.links.iter().enumerate() {
        match link.kind {
            LinkKind::I2dDirect => {
                scbs_cue.insert(link.rx, S::one());
                always_on.push(i);
            }
            LinkKind::I2dBackhaul => {
                scbs_aue.insert(link.rx, S::one());
            }
            LinkKind::D2d => {}
        }
    }

    for aue in topology.aues() {
        let backhaul = topology
            .link_into(aue)
            .expect("every anchor has a backhaul link");
        let d2d: Vec<usize> = topology
            .links_from(aue)
            .filter(|&i| topology.links[i].kind == LinkKind::D2d)
            .collect();
        let share = match strategy {
            Mac::AllOn => S::one(),
            Mac::Tdma => S::one() / S::count(d2d.len() + 1),
        };
        aue_cue.insert(
            aue,
            d2d.iter().map(|&i| (topology.links[i].rx, share)).collect(),
        );
        aue_receive_share.insert(aue, share);
        anchors.push(AnchorTurns { aue, backhaul, d2d });
    }

    ScheduleWeights {
        strategy,
        scbs_cue,
        scbs_aue,
        aue_cue,
        aue_receive_share,
        always_on,
        anchors,
        link_count: topology.links.len(),
    }
}

impl<S: Scalar> ScheduleWeights<S> {
    /// Slots after which the joint pattern repeats. Saturates at `u64::MAX`.
    pub fn cycle_length(&self) -> u64 {
        match self.strategy {
            Mac::AllOn => 1,
            Mac::Tdma => self.anchors.iter().fold(1u64, |acc, a| {
                let m = a.cycle_len() as u64;
                (acc / gcd(acc, m)).saturating_mul(m)
            }),
        }
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    /// Sorted link indices transmitting in `slot`.
    pub fn active_links(&self, slot: i64) -> Result<Vec<usize>> {
        if slot < 0 {
            return Err(Error::Domain(format!("slot index {slot} is negative")));
        }
        Ok(self.active_at(slot as u64))
    }

    pub(crate) fn active_at(&self, slot: u64) -> Vec<usize> {
        if self.strategy == Mac::AllOn {
            return (0..self.link_count).collect();
        }
        let mut out = self.always_on.clone();
        out.extend(self.anchors.iter().map(|a| a.link_at(slot)));
        out.sort_unstable();
        out
    }

    /// Active sets for the first `min(cycle_length, limit)` slots.
    pub fn active_sets(&self, limit: u64) -> Vec<(u64, Vec<usize>)> {
        (0..self.cycle_length().min(limit))
            .map(|s| (s, self.active_at(s)))
            .collect()
    }

    /// Anchor weight on the relay link toward `cue`.
    pub fn relay_weight(&self, aue: NodeId, cue: NodeId) -> Option<S> {
        self.aue_cue.get(&aue).and_then(|m| m.get(&cue)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::RadioParams;
    use crate::topology::{associate, Node, Role};

    fn node(id: usize, x: f64, y: f64, role: Role) -> Node<f64> {
        Node {
            id: NodeId(id),
            position: [x, y],
            role,
            tx_power_dbm: 15.0,
        }
    }

    /// SCBS at the centre, anchor 1 with one client, anchor 2 with two, and a
    /// direct CUE.
    fn two_anchor_topology() -> Topology<f64> {
        let nodes = vec![
            node(0, 50.0, 50.0, Role::Scbs),
            node(1, 30.0, 50.0, Role::Cue),
            node(2, 70.0, 50.0, Role::Cue),
            node(3, 10.0, 50.0, Role::Cue),
            node(4, 90.0, 45.0, Role::Cue),
            node(5, 90.0, 55.0, Role::Cue),
            node(6, 50.0, 55.0, Role::Cue),
        ];
        associate(
            &nodes,
            &[NodeId(1), NodeId(2)],
            100.0,
            &RadioParams::default(),
        )
    }

    #[test]
    fn mac_parsing() {
        assert_eq!("tdma".parse::<Mac>().unwrap(), Mac::Tdma);
        assert_eq!("all-on".parse::<Mac>().unwrap(), Mac::AllOn);
        assert!("aloha".parse::<Mac>().is_err());
        assert_eq!(serde_json::to_string(&Mac::AllOn).unwrap(), "\"all-on\"");
    }

    #[test]
    fn all_on_weights_are_one() {
        let topo = two_anchor_topology();
        let w = build_weights(&topo, Mac::AllOn);
        assert!(w
            .scbs_cue
            .values()
            .chain(w.scbs_aue.values())
            .all(|&v| v == 1.0));
        assert!(w
            .aue_cue
            .values()
            .flat_map(|m| m.values())
            .all(|&v| v == 1.0));
        let all: Vec<usize> = (0..topo.links.len()).collect();
        for slot in [0, 1, 7, 1000] {
            assert_eq!(w.active_links(slot).unwrap(), all);
        }
        assert_eq!(w.cycle_length(), 1);
    }

    #[test]
    fn tdma_weights_split_turns() {
        let topo = two_anchor_topology();
        let w = build_weights(&topo, Mac::Tdma);
        assert_eq!(w.relay_weight(NodeId(1), NodeId(3)), Some(0.5));
        assert_eq!(w.relay_weight(NodeId(2), NodeId(4)), Some(1.0 / 3.0));
        assert_eq!(w.aue_receive_share[&NodeId(2)], 1.0 / 3.0);
        assert!(w
            .scbs_cue
            .values()
            .chain(w.scbs_aue.values())
            .all(|&v| v == 1.0));
        assert_eq!(w.cycle_length(), 6);
    }

    #[test]
    fn tdma_three_client_anchor() {
        let nodes = vec![
            node(0, 50.0, 50.0, Role::Scbs),
            node(1, 20.0, 50.0, Role::Cue),
            node(2, 10.0, 50.0, Role::Cue),
            node(3, 15.0, 60.0, Role::Cue),
            node(4, 15.0, 40.0, Role::Cue),
        ];
        let topo = associate(&nodes, &[NodeId(1)], 100.0, &RadioParams::default());
        let w = build_weights(&topo, Mac::Tdma);
        let weights: Vec<f64> = w.aue_cue[&NodeId(1)].values().copied().collect();
        assert_eq!(weights, vec![0.25; 3]);
    }

    #[test]
    fn half_duplex_alternation() {
        let topo = two_anchor_topology();
        let w = build_weights(&topo, Mac::Tdma);
        let backhaul = topo.link_index(NodeId(0), NodeId(1)).unwrap();
        let d2d = topo.link_index(NodeId(1), NodeId(3)).unwrap();
        let s0 = w.active_links(0).unwrap();
        assert!(s0.contains(&d2d) && !s0.contains(&backhaul));
        let s1 = w.active_links(1).unwrap();
        assert!(s1.contains(&backhaul) && !s1.contains(&d2d));
    }

    #[test]
    fn modular_turns_at_slot_five() {
        let topo = two_anchor_topology();
        let w = build_weights(&topo, Mac::Tdma);
        let s5 = w.active_links(5).unwrap();
        // 5 mod 2 = 1 and 5 mod 3 = 2: both anchors are in their receive turn
        assert!(s5.contains(&topo.link_index(NodeId(0), NodeId(1)).unwrap()));
        assert!(s5.contains(&topo.link_index(NodeId(0), NodeId(2)).unwrap()));
        assert!(topo
            .links_from(NodeId(1))
            .chain(topo.links_from(NodeId(2)))
            .all(|i| !s5.contains(&i)));
        // direct link always on
        assert!(s5.contains(&topo.link_index(NodeId(0), NodeId(6)).unwrap()));
    }

    #[test]
    fn negative_slot_rejected() {
        let w = build_weights(&two_anchor_topology(), Mac::Tdma);
        assert!(matches!(w.active_links(-1), Err(Error::Domain(_))));
    }

    #[test]
    fn no_anchor_means_single_slot_cycle() {
        let nodes = vec![
            node(0, 50.0, 50.0, Role::Scbs),
            node(1, 10.0, 10.0, Role::Cue),
        ];
        let topo = associate(&nodes, &[], 100.0, &RadioParams::default());
        let w = build_weights(&topo, Mac::Tdma);
        assert_eq!(w.cycle_length(), 1);
        assert_eq!(w.active_links(3).unwrap(), vec![0]);
    }
}

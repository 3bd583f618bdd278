//! Node deployment, anchor selection and the association graph.
//!
//! One SCBS sits at the centre of a square. UEs are scattered uniformly. A
//! subset of UEs with the best SCBS link quality become anchor UEs (AUEs) and
//! relay traffic over D2D links; every other UE is a client (CUE) served by
//! whichever of the SCBS and the AUEs is closest.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pso::BeamwidthVector;
use crate::radio::{self, RadioParams};
use crate::scalar::{self, Scalar};

pub const SCBS_POWER_DBM: f64 = 30.0;
pub const UE_POWER_DBM: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Scbs,
    Aue,
    Cue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node<S> {
    pub id: NodeId,
    /// Metres.
    pub position: [S; 2],
    pub role: Role,
    pub tx_power_dbm: S,
}

impl<S: Scalar> Node<S> {
    pub fn is_ue(&self) -> bool {
        self.role != Role::Scbs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// SCBS straight to a CUE.
    I2dDirect,
    /// SCBS to an anchor.
    I2dBackhaul,
    /// Anchor to one of its CUEs.
    D2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link<S> {
    pub tx: NodeId,
    pub rx: NodeId,
    pub kind: LinkKind,
    pub tx_sector_width: S,
    pub rx_sector_width: S,
    /// Bearing of the receiver seen from the transmitter, degrees.
    pub tx_boresight: S,
    /// Bearing of the transmitter seen from the receiver, degrees.
    pub rx_boresight: S,
}

impl<S: Scalar> Link<S> {
    pub fn between(tx: &Node<S>, rx: &Node<S>, kind: LinkKind, sector_width: S) -> Self {
        Self {
            tx: tx.id,
            rx: rx.id,
            kind,
            tx_sector_width: sector_width,
            rx_sector_width: sector_width,
            tx_boresight: scalar::bearing_degrees(tx.position, rx.position),
            rx_boresight: scalar::bearing_degrees(rx.position, tx.position),
        }
    }
}

/// Deployment and association knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig<S> {
    /// Total nodes including the SCBS.
    pub node_count: usize,
    /// Side of the deployment square, metres.
    pub side: S,
    pub seed: u64,
    pub nominal_aues: usize,
    /// Only UEs this close to the SCBS may become anchors, metres.
    pub coverage_radius: S,
    pub scbs_power_dbm: S,
    pub ue_power_dbm: S,
}

impl<S: Scalar> Default for TopologyConfig<S> {
    fn default() -> Self {
        Self {
            node_count: 100,
            side: S::lit(100.0),
            seed: 1,
            nominal_aues: 5,
            coverage_radius: S::lit(100.0),
            scbs_power_dbm: S::lit(SCBS_POWER_DBM),
            ue_power_dbm: S::lit(UE_POWER_DBM),
        }
    }
}

impl<S: Scalar> TopologyConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Config(format!(
                "node_count must be at least 2, got {}",
                self.node_count
            )));
        }
        if !(self.side > S::zero()) || !self.side.is_finite() {
            return Err(Error::Config(format!(
                "side must be positive, got {}",
                self.side
            )));
        }
        if !(self.coverage_radius >= S::zero()) {
            return Err(Error::Config("coverage_radius must be non-negative".into()));
        }
        if !self.scbs_power_dbm.is_finite() || !self.ue_power_dbm.is_finite() {
            return Err(Error::Config("transmit powers must be finite".into()));
        }
        Ok(())
    }

    /// Deploys, selects anchors and associates.
    pub fn build(&self, params: &RadioParams<S>, initial_beamwidth: S) -> Result<Topology<S>> {
        self.validate()?;
        let mut nodes = deploy(self.node_count, self.side, self.seed)?;
        for n in &mut nodes {
            n.tx_power_dbm = match n.role {
                Role::Scbs => self.scbs_power_dbm,
                _ => self.ue_power_dbm,
            };
        }
        let aues = select_aues(
            &nodes,
            self.nominal_aues,
            self.coverage_radius,
            params,
            initial_beamwidth,
        )?;
        Ok(associate(&nodes, &aues, self.coverage_radius, params))
    }
}

/// Places the SCBS (id 0) at the centre of a `side` x `side` square and
/// `node_count - 1` UEs uniformly at random. UEs start out as CUEs.
pub fn deploy<S: Scalar>(node_count: usize, side: S, seed: u64) -> Result<Vec<Node<S>>> {
    if node_count < 2 {
        return Err(Error::Config(format!(
            "node_count must be at least 2, got {node_count}"
        )));
    }
    if !(side > S::zero()) || !side.is_finite() {
        return Err(Error::Config(format!("side must be positive, got {side}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = side / S::lit(2.0);
    let mut nodes = Vec::with_capacity(node_count);
    nodes.push(Node {
        id: NodeId(0),
        position: [half, half],
        role: Role::Scbs,
        tx_power_dbm: S::lit(SCBS_POWER_DBM),
    });
    for id in 1..node_count {
        let x = S::lit(rng.gen::<f64>()) * side;
        let y = S::lit(rng.gen::<f64>()) * side;
        nodes.push(Node {
            id: NodeId(id),
            position: [x, y],
            role: Role::Cue,
            tx_power_dbm: S::lit(UE_POWER_DBM),
        });
    }
    Ok(nodes)
}

fn single_scbs<S: Scalar>(nodes: &[Node<S>]) -> Result<&Node<S>> {
    let mut it = nodes.iter().filter(|n| n.role == Role::Scbs);
    match (it.next(), it.next()) {
        (Some(s), None) => Ok(s),
        _ => Err(Error::Config("exactly one SCBS is required".into())),
    }
}

fn check_ids<S: Scalar>(nodes: &[Node<S>]) -> Result<()> {
    match nodes.iter().enumerate().find(|(i, n)| n.id.0 != *i) {
        Some((i, n)) => Err(Error::Config(format!(
            "node ids must equal their index; position {i} holds {}",
            n.id
        ))),
        None => Ok(()),
    }
}

/// Picks the `nominal` UEs inside SCBS coverage whose SCBS link has the best
/// SINR with every candidate link active at `initial_beamwidth`. Ties go to the
/// lower id. Returned ids are sorted.
pub fn select_aues<S: Scalar>(
    nodes: &[Node<S>],
    nominal: usize,
    coverage_radius: S,
    params: &RadioParams<S>,
    initial_beamwidth: S,
) -> Result<Vec<NodeId>> {
    check_ids(nodes)?;
    let scbs = single_scbs(nodes)?;
    let eligible: Vec<&Node<S>> = nodes
        .iter()
        .filter(|n| n.is_ue() && scalar::distance(n.position, scbs.position) <= coverage_radius)
        .collect();
    if nominal > eligible.len() {
        return Err(Error::Infeasible {
            requested: nominal,
            eligible: eligible.len(),
        });
    }
    if nominal == 0 {
        return Ok(Vec::new());
    }

    let links: Vec<Link<S>> = eligible
        .iter()
        .map(|ue| Link::between(scbs, ue, LinkKind::I2dDirect, params.sector_width))
        .collect();
    let candidates = Topology {
        nodes: nodes.to_vec(),
        scbs: scbs.id,
        links,
        assoc_i2d: Vec::new(),
        assoc_d2d: Vec::new(),
        coverage_radius,
    };
    let beams = BeamwidthVector::uniform(&candidates, initial_beamwidth);
    let active: Vec<usize> = (0..candidates.links.len()).collect();
    let mut scored = Vec::with_capacity(active.len());
    for (i, link) in candidates.links.iter().enumerate() {
        scored.push((
            radio::sinr(i, &active, &candidates, &beams, params)?,
            link.rx,
        ));
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut picked: Vec<NodeId> = scored.into_iter().take(nominal).map(|(_, id)| id).collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Nearest candidate to `ue`; `candidates` is ordered by tie priority.
fn nearest<S: Scalar>(nodes: &[Node<S>], ue: NodeId, candidates: &[NodeId]) -> NodeId {
    let pos = nodes[ue.0].position;
    let mut best = candidates[0];
    let mut best_d = scalar::distance(pos, nodes[best.0].position);
    for &c in &candidates[1..] {
        let d = scalar::distance(pos, nodes[c.0].position);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Builds the association graph. Each CUE attaches to the closest of the SCBS
/// and the anchors (ties to the SCBS, then the lower id). Anchors left without
/// clients revert to CUEs and are attached in a single second pass.
pub fn associate<S: Scalar>(
    nodes: &[Node<S>],
    aue_ids: &[NodeId],
    coverage_radius: S,
    params: &RadioParams<S>,
) -> Topology<S> {
    let scbs = single_scbs(nodes).expect("deployment has one SCBS").id;
    let mut aues: Vec<NodeId> = aue_ids.to_vec();
    aues.sort_unstable();
    aues.dedup();
    let is_nominal = |id: NodeId| aues.binary_search(&id).is_ok();

    let mut candidates = vec![scbs];
    candidates.extend(&aues);
    let mut server: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for n in nodes.iter().filter(|n| n.is_ue() && !is_nominal(n.id)) {
        server.insert(n.id, nearest(nodes, n.id, &candidates));
    }

    let (effective, reverted): (Vec<NodeId>, Vec<NodeId>) =
        aues.iter().partition(|a| server.values().any(|s| s == *a));
    let mut candidates = vec![scbs];
    candidates.extend(&effective);
    for &r in &reverted {
        server.insert(r, nearest(nodes, r, &candidates));
    }

    let mut out_nodes = nodes.to_vec();
    for n in out_nodes.iter_mut().filter(|n| n.is_ue()) {
        n.role = if effective.binary_search(&n.id).is_ok() {
            Role::Aue
        } else {
            Role::Cue
        };
    }

    let sector = params.sector_width;
    let mut links = Vec::with_capacity(server.len() + effective.len());
    let mut assoc_i2d = Vec::new();
    let mut assoc_d2d = Vec::new();
    for &a in &effective {
        assoc_i2d.push((scbs, a));
        links.push(Link::between(
            &out_nodes[scbs.0],
            &out_nodes[a.0],
            LinkKind::I2dBackhaul,
            sector,
        ));
    }
    for (&cue, &srv) in &server {
        if srv == scbs {
            assoc_i2d.push((scbs, cue));
            links.push(Link::between(
                &out_nodes[scbs.0],
                &out_nodes[cue.0],
                LinkKind::I2dDirect,
                sector,
            ));
        } else {
            assoc_d2d.push((scbs, srv, cue));
            links.push(Link::between(
                &out_nodes[srv.0],
                &out_nodes[cue.0],
                LinkKind::D2d,
                sector,
            ));
        }
    }
    links.sort_by_key(|l| (l.tx, l.rx));
    assoc_i2d.sort_unstable();
    assoc_d2d.sort_unstable();

    Topology {
        nodes: out_nodes,
        scbs,
        links,
        assoc_i2d,
        assoc_d2d,
        coverage_radius,
    }
}

/// A finalized network. Links are sorted by `(tx, rx)` and node ids equal
/// their index in `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology<S> {
    pub nodes: Vec<Node<S>>,
    pub scbs: NodeId,
    pub links: Vec<Link<S>>,
    /// `(scbs, ue)` pairs: direct CUEs and anchors.
    pub assoc_i2d: Vec<(NodeId, NodeId)>,
    /// `(scbs, aue, cue)` triples for relayed CUEs.
    pub assoc_d2d: Vec<(NodeId, NodeId, NodeId)>,
    pub coverage_radius: S,
}

impl<S: Scalar> Topology<S> {
    pub fn node(&self, id: NodeId) -> &Node<S> {
        &self.nodes[id.0]
    }

    /// Length of the beamwidth decision vector: one transmit width per link
    /// and one receive width per node.
    pub fn dimension(&self) -> usize {
        self.links.len() + self.nodes.len()
    }

    pub fn ids_with_role(&self, role: Role) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .filter(move |n| n.role == role)
            .map(|n| n.id)
    }

    pub fn aues(&self) -> Vec<NodeId> {
        self.ids_with_role(Role::Aue).collect()
    }

    pub fn cues(&self) -> Vec<NodeId> {
        self.ids_with_role(Role::Cue).collect()
    }

    pub fn ue_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_ue()).count()
    }

    /// Index of the link delivering traffic to `rx`.
    pub fn link_into(&self, rx: NodeId) -> Option<usize> {
        self.links.iter().position(|l| l.rx == rx)
    }

    pub fn link_index(&self, tx: NodeId, rx: NodeId) -> Option<usize> {
        self.links
            .binary_search_by(|l| (l.tx, l.rx).cmp(&(tx, rx)))
            .ok()
    }

    /// Indices of links transmitted by `tx`, in link order.
    pub fn links_from(&self, tx: NodeId) -> impl Iterator<Item = usize> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.tx == tx)
            .map(|(i, _)| i)
    }

    /// CUEs relayed by anchor `aue`, sorted by id.
    pub fn served_cues(&self, aue: NodeId) -> Vec<NodeId> {
        self.assoc_d2d
            .iter()
            .filter(|(_, n, _)| *n == aue)
            .map(|&(_, _, m)| m)
            .collect()
    }

    /// CUEs the SCBS serves directly.
    pub fn direct_cues(&self, scbs: NodeId) -> Vec<NodeId> {
        self.assoc_i2d
            .iter()
            .filter(|(l, k)| *l == scbs && self.node(*k).role == Role::Cue)
            .map(|&(_, k)| k)
            .collect()
    }

    /// Anchors attached to `scbs`.
    pub fn anchors_of(&self, scbs: NodeId) -> Vec<NodeId> {
        self.assoc_i2d
            .iter()
            .filter(|(l, k)| *l == scbs && self.node(*k).role == Role::Aue)
            .map(|&(_, k)| k)
            .collect()
    }

    /// Node that delivers traffic to `ue`.
    pub fn serving_node(&self, ue: NodeId) -> Option<NodeId> {
        self.link_into(ue).map(|i| self.links[i].tx)
    }

    pub fn export(&self) -> TopologyExport {
        TopologyExport {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    x: n.position[0].as_f64(),
                    y: n.position[1].as_f64(),
                    role: n.role,
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkRecord {
                    tx: l.tx,
                    rx: l.rx,
                    kind: l.kind,
                })
                .collect(),
            assoc_i2d: self.assoc_i2d.clone(),
            assoc_d2d: self.assoc_d2d.clone(),
        }
    }
}

/// `topology.json` schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyExport {
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
    pub assoc_i2d: Vec<(NodeId, NodeId)>,
    pub assoc_d2d: Vec<(NodeId, NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub tx: NodeId,
    pub rx: NodeId,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Every CUE has exactly one association, direct or relayed.
    CueSingleAssociation,
    /// Every anchor hangs off exactly one SCBS.
    AnchorSingleScbs,
    /// Every SCBS serves at least one UE.
    ScbsServesUe,
    /// Every anchor relays at least one CUE.
    AnchorServesCue,
    /// Association flags are 0/1: no repeated entries.
    BinaryAssociation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub nodes: Vec<NodeId>,
}

/// Lists every violated association constraint, one entry per constraint
/// with the offending node ids.
pub fn validate<S: Scalar>(topology: &Topology<S>) -> Vec<Violation> {
    let mut i2d_count: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut d2d_as_cue: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut d2d_as_aue: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut scbs_load: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &(l, k) in &topology.assoc_i2d {
        *i2d_count.entry(k).or_default() += 1;
        *scbs_load.entry(l).or_default() += 1;
    }
    for &(l, n, m) in &topology.assoc_d2d {
        *d2d_as_cue.entry(m).or_default() += 1;
        *d2d_as_aue.entry(n).or_default() += 1;
        *scbs_load.entry(l).or_default() += 1;
    }
    let count = |map: &BTreeMap<NodeId, usize>, id| map.get(&id).copied().unwrap_or(0);

    let mut out = Vec::new();
    let mut push = |constraint, nodes: Vec<NodeId>| {
        if !nodes.is_empty() {
            out.push(Violation { constraint, nodes });
        }
    };

    push(
        Constraint::CueSingleAssociation,
        topology
            .ids_with_role(Role::Cue)
            .filter(|&m| count(&i2d_count, m) + count(&d2d_as_cue, m) != 1)
            .collect(),
    );
    push(
        Constraint::AnchorSingleScbs,
        topology
            .ids_with_role(Role::Aue)
            .filter(|&n| count(&i2d_count, n) != 1)
            .collect(),
    );
    push(
        Constraint::ScbsServesUe,
        topology
            .ids_with_role(Role::Scbs)
            .filter(|&l| count(&scbs_load, l) == 0)
            .collect(),
    );
    push(
        Constraint::AnchorServesCue,
        topology
            .ids_with_role(Role::Aue)
            .filter(|&n| count(&d2d_as_aue, n) == 0)
            .collect(),
    );

    let mut repeated = Vec::new();
    let mut seen_i2d = std::collections::BTreeSet::new();
    for e in &topology.assoc_i2d {
        if !seen_i2d.insert(*e) {
            repeated.push(e.1);
        }
    }
    let mut seen_d2d = std::collections::BTreeSet::new();
    for e in &topology.assoc_d2d {
        if !seen_d2d.insert(*e) {
            repeated.push(e.2);
        }
    }
    repeated.sort_unstable();
    repeated.dedup();
    push(Constraint::BinaryAssociation, repeated);
    out
}

//! Brute-force reference evaluator shared by the integration tests.
//!
//! Written from the model equations with plain loops. It only reads node
//! positions, powers and roles plus the link list from the library; geometry,
//! gains, the TDMA cycle and all averaging are recomputed here.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaybeam::radio::RadioParams;
use relaybeam::topology::{associate, Node, Topology};
use relaybeam::{Mac, NodeId, Role};

const C: f64 = 299_792_458.0;

pub struct Reference {
    /// Cycle-averaged rate of every link, bit/s.
    pub link_rates: Vec<f64>,
    pub gamma: f64,
    /// Rate delivered to each UE, indexed by node id (0 for the SCBS).
    pub node_rates: Vec<f64>,
    pub slots: u64,
}

fn wrap(deg: f64) -> f64 {
    let mut d = deg % 360.0;
    if d > 180.0 {
        d -= 360.0;
    }
    if d <= -180.0 {
        d += 360.0;
    }
    d
}

fn bearing(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0]).to_degrees()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn gain(width_deg: f64, deviation_deg: f64, sidelobe: f64) -> f64 {
    let phi = width_deg * PI / 180.0;
    if wrap(deviation_deg).abs() <= width_deg / 2.0 {
        (2.0 * PI - (2.0 * PI - phi) * sidelobe) / phi
    } else {
        sidelobe
    }
}

fn path(d: f64, p: &RadioParams<f64>) -> f64 {
    let lambda = C / p.frequency;
    (lambda / (4.0 * PI * d)).powi(2) * d.powf(-(p.path_loss_exponent - 2.0))
}

fn watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Evaluates `topo` at raw beamwidths `beams` (link transmit widths, then one
/// receive width per node id) over one full scheduling cycle.
pub fn evaluate(topo: &Topology<f64>, beams: &[f64], mac: Mac, p: &RadioParams<f64>) -> Reference {
    let nl = topo.links.len();
    let tx_w = |i: usize| beams[i];
    let rx_w = |node: usize| beams[nl + node];
    let role = |id: NodeId| topo.nodes[id.0].role;

    let direct: Vec<usize> = (0..nl)
        .filter(|&i| role(topo.links[i].tx) == Role::Scbs && role(topo.links[i].rx) == Role::Cue)
        .collect();
    // (backhaul, d2d links in client id order) per anchor
    let mut anchors: Vec<(usize, Vec<usize>)> = Vec::new();
    for n in topo.nodes.iter().filter(|n| n.role == Role::Aue) {
        let bh = (0..nl)
            .find(|&i| topo.links[i].rx == n.id && role(topo.links[i].tx) == Role::Scbs)
            .expect("anchor backhaul");
        let mut d2d: Vec<usize> = (0..nl).filter(|&i| topo.links[i].tx == n.id).collect();
        d2d.sort_by_key(|&i| topo.links[i].rx);
        anchors.push((bh, d2d));
    }

    let cycle: u64 = match mac {
        Mac::AllOn => 1,
        Mac::Tdma => anchors
            .iter()
            .map(|(_, d)| d.len() as u64 + 1)
            .fold(1, |a, m| a / gcd(a, m) * m),
    };

    let noise = watts(p.noise_density_dbm) * p.bandwidth;
    let mut sums = vec![0.0; nl];
    for s in 0..cycle {
        let active: Vec<usize> = match mac {
            Mac::AllOn => (0..nl).collect(),
            Mac::Tdma => {
                let mut a = direct.clone();
                for (bh, d2d) in &anchors {
                    let turn = (s % (d2d.len() as u64 + 1)) as usize;
                    a.push(if turn < d2d.len() { d2d[turn] } else { *bh });
                }
                a
            }
        };
        for &v in &active {
            let link = &topo.links[v];
            let tx = &topo.nodes[link.tx.0];
            let rx = &topo.nodes[link.rx.0];
            let rx_bore = bearing(rx.position, tx.position);
            let tx_bore = bearing(tx.position, rx.position);
            let signal = watts(tx.tx_power_dbm)
                * gain(
                    tx_w(v),
                    bearing(tx.position, rx.position) - tx_bore,
                    p.sidelobe_gain,
                )
                * path(dist(tx.position, rx.position), p)
                * gain(rx_w(rx.id.0), 0.0, p.sidelobe_gain);

            let mut interference = 0.0;
            for z in &topo.nodes {
                if z.id == tx.id || z.id == rx.id {
                    continue;
                }
                let mut worst: f64 = 0.0;
                for &o in &active {
                    let other = &topo.links[o];
                    if other.tx != z.id {
                        continue;
                    }
                    let target = &topo.nodes[other.rx.0];
                    let o_bore = bearing(z.position, target.position);
                    let contrib = watts(z.tx_power_dbm)
                        * gain(
                            tx_w(o),
                            bearing(z.position, rx.position) - o_bore,
                            p.sidelobe_gain,
                        )
                        * path(dist(z.position, rx.position), p)
                        * gain(
                            rx_w(rx.id.0),
                            bearing(rx.position, z.position) - rx_bore,
                            p.sidelobe_gain,
                        );
                    worst = worst.max(contrib);
                }
                interference += worst;
            }

            let sinr = signal / (noise + interference);
            let tau = link.tx_sector_width * link.rx_sector_width / (tx_w(v) * rx_w(rx.id.0))
                * p.pilot_ratio;
            sums[v] += (1.0 - tau).max(0.0) * p.bandwidth * (1.0 + sinr).log2();
        }
    }
    let link_rates: Vec<f64> = sums.iter().map(|s| s / cycle as f64).collect();

    let mut node_rates = vec![0.0; topo.nodes.len()];
    let mut gamma = 0.0;
    for &i in &direct {
        node_rates[topo.links[i].rx.0] = link_rates[i];
        gamma += link_rates[i];
    }
    for (bh, d2d) in &anchors {
        node_rates[topo.links[*bh].rx.0] = link_rates[*bh];
        gamma += link_rates[*bh];
        let w = match mac {
            Mac::AllOn => 1.0,
            Mac::Tdma => 1.0 / (d2d.len() as f64 + 1.0),
        };
        for &d in d2d {
            node_rates[topo.links[d].rx.0] = w * (link_rates[*bh] / 2.0).min(link_rates[d] / 2.0);
        }
    }
    Reference {
        link_rates,
        gamma,
        node_rates,
        slots: cycle,
    }
}

/// Random network of `n` nodes in a `side` metre square with up to `n - 2`
/// nominal anchors. The SCBS may land anywhere.
pub fn random_network(seed: u64, n: usize, side: f64, p: &RadioParams<f64>) -> Topology<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<Node<f64>> = (0..n)
        .map(|i| Node {
            id: NodeId(i),
            position: [rng.gen::<f64>() * side, rng.gen::<f64>() * side],
            role: if i == 0 { Role::Scbs } else { Role::Cue },
            tx_power_dbm: if i == 0 {
                30.0
            } else {
                rng.gen_range(5.0..20.0)
            },
        })
        .collect();
    let anchors: Vec<NodeId> = (1..n)
        .filter(|_| rng.gen_bool(0.7))
        .map(NodeId)
        .take(n.saturating_sub(2))
        .collect();
    associate(&nodes, &anchors, side * 2.0, p)
}

/// Random widths in `[min, sector]` for every component of `topo`.
pub fn random_beams(seed: u64, topo: &Topology<f64>, p: &RadioParams<f64>) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..topo.links.len() + topo.nodes.len())
        .map(|_| rng.gen_range(p.min_beamwidth..=p.sector_width))
        .collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

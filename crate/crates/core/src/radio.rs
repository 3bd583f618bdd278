//! Physical layer: ideal sector antennas, free-space style path gain,
//! beam alignment overhead, SINR under the physical interference model and
//! the resulting effective link rate.
//!
//! Angles are in degrees at every public boundary. Powers are in watts
//! unless the name says `dbm`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pso::BeamwidthVector;
use crate::scalar::{self, Scalar};
use crate::topology::{NodeId, Topology};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams<S> {
    /// Carrier frequency, Hz.
    pub frequency: S,
    /// Channel bandwidth, Hz.
    pub bandwidth: S,
    /// Thermal noise density, dBm/Hz.
    pub noise_density_dbm: S,
    pub path_loss_exponent: S,
    /// Linear gain outside the main lobe.
    pub sidelobe_gain: S,
    /// Pilot duration over slot duration.
    pub pilot_ratio: S,
    /// Narrowest beam the arrays can form, degrees.
    pub min_beamwidth: S,
    /// Sector-level width applied at both ends of every link, degrees.
    pub sector_width: S,
}

impl<S: Scalar> Default for RadioParams<S> {
    fn default() -> Self {
        Self {
            frequency: S::lit(60e9),
            bandwidth: S::lit(1.2e9),
            noise_density_dbm: S::lit(-174.0),
            path_loss_exponent: S::lit(2.0),
            sidelobe_gain: S::lit(0.05),
            pilot_ratio: S::lit(1e-2),
            min_beamwidth: S::lit(3.0),
            sector_width: S::lit(20.0),
        }
    }
}

impl<S: Scalar> RadioParams<S> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("radio: {what}")));
        if !(self.frequency > S::zero()) {
            return bad("frequency must be positive");
        }
        if !(self.bandwidth > S::zero()) {
            return bad("bandwidth must be positive");
        }
        if !self.noise_density_dbm.is_finite() {
            return bad("noise density must be finite");
        }
        if !(self.path_loss_exponent > S::zero()) {
            return bad("path loss exponent must be positive");
        }
        if !(self.sidelobe_gain >= S::zero() && self.sidelobe_gain < S::one()) {
            return bad("sidelobe gain must lie in [0, 1)");
        }
        if !(self.pilot_ratio > S::zero() && self.pilot_ratio < S::one()) {
            return bad("pilot ratio must lie in (0, 1)");
        }
        if !(self.min_beamwidth > S::zero()
            && self.min_beamwidth <= self.sector_width
            && self.sector_width <= S::lit(360.0))
        {
            return bad("need 0 < min_beamwidth <= sector_width <= 360");
        }
        Ok(())
    }

    pub fn wavelength(&self) -> S {
        S::lit(SPEED_OF_LIGHT) / self.frequency
    }

    /// Noise power over the whole channel, watts.
    pub fn noise_power(&self) -> S {
        scalar::dbm_to_watts(self.noise_density_dbm) * self.bandwidth
    }

    pub fn noise_power_dbm(&self) -> S {
        scalar::watts_to_dbm(self.noise_power())
    }
}

/// Gain inside the main lobe of an ideal sector antenna of width `beamwidth`
/// degrees. Radiated power is conserved: `gain * w + sidelobe * (2pi - w) = 2pi`.
#[inline]
pub fn mainlobe_gain<S: Scalar>(beamwidth: S, sidelobe: S) -> S {
    let two_pi = S::TAU();
    let w = beamwidth.to_radians();
    (two_pi - (two_pi - w) * sidelobe) / w
}

/// Directivity of an ideal sector antenna at angular offset `deviation` from
/// boresight.
pub fn antenna_gain<S: Scalar>(beamwidth: S, deviation: S, sidelobe: S) -> Result<S> {
    if !(beamwidth > S::zero() && beamwidth <= S::lit(360.0)) {
        return Err(Error::Domain(format!(
            "beamwidth {beamwidth} outside (0, 360] degrees"
        )));
    }
    Ok(sector_gain(beamwidth, deviation, sidelobe))
}

/// Unchecked [`antenna_gain`] for validated beamwidths.
#[inline]
pub(crate) fn sector_gain<S: Scalar>(beamwidth: S, deviation: S, sidelobe: S) -> S {
    if scalar::wrap_degrees(deviation).abs() <= beamwidth / S::lit(2.0) {
        mainlobe_gain(beamwidth, sidelobe)
    } else {
        sidelobe
    }
}

/// Linear path gain at `distance` metres, referenced to free space at 1 m.
pub fn channel_gain<S: Scalar>(distance: S, params: &RadioParams<S>) -> Result<S> {
    if !(distance > S::zero()) {
        return Err(Error::Domain(format!(
            "distance {distance} must be positive"
        )));
    }
    let free = params.wavelength() / (S::lit(4.0) * S::PI());
    let excess = distance.powf(-(params.path_loss_exponent - S::lit(2.0)));
    Ok((free / distance).powi(2) * excess)
}

/// Beam-level search time as a fraction of the slot. Can exceed one.
pub fn alignment_delay<S: Scalar>(
    tx_beamwidth: S,
    rx_beamwidth: S,
    tx_sector: S,
    rx_sector: S,
    pilot_ratio: S,
) -> Result<S> {
    for (name, w) in [
        ("tx beamwidth", tx_beamwidth),
        ("rx beamwidth", rx_beamwidth),
        ("tx sector", tx_sector),
        ("rx sector", rx_sector),
    ] {
        if !(w > S::zero()) {
            return Err(Error::Domain(format!("{name} {w} must be positive")));
        }
    }
    Ok(tx_sector * rx_sector / (tx_beamwidth * rx_beamwidth) * pilot_ratio)
}

/// Smallest beamwidth product that keeps the alignment inside one slot.
pub fn beamwidth_product_bound<S: Scalar>(tx_sector: S, rx_sector: S, pilot_ratio: S) -> S {
    pilot_ratio * tx_sector * rx_sector
}

/// Shannon rate over the part of the slot left after alignment. Zero when the
/// alignment eats the whole slot.
#[inline]
pub fn effective_rate<S: Scalar>(delay_fraction: S, sinr: S, bandwidth: S) -> S {
    let usable = (S::one() - delay_fraction).max(S::zero());
    usable * bandwidth * sinr.ln_1p() / S::LN_2()
}

/// Aggregate interference power (watts) at `rx` while it listens on
/// `serving_link`. Every other active transmitter contributes its strongest
/// active link toward `rx`. The receiver itself is never an interferer.
pub fn interference_at<S: Scalar>(
    rx: NodeId,
    serving_link: usize,
    active_links: &[usize],
    topology: &Topology<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<S> {
    let serving = &topology.links[serving_link];
    let rx_pos = topology.node(rx).position;
    let rx_width = beams.rx(rx);
    let g = params.sidelobe_gain;

    let mut transmitters: Vec<NodeId> = active_links
        .iter()
        .map(|&i| topology.links[i].tx)
        .filter(|&z| z != serving.tx && z != rx)
        .collect();
    transmitters.sort_unstable();
    transmitters.dedup();

    let mut total = S::zero();
    for z in transmitters {
        let tx_node = topology.node(z);
        let power = scalar::dbm_to_watts(tx_node.tx_power_dbm);
        let path = channel_gain(scalar::distance(tx_node.position, rx_pos), params)?;
        let rx_dev = scalar::bearing_degrees(rx_pos, tx_node.position) - serving.rx_boresight;
        let rx_gain = antenna_gain(rx_width, rx_dev, g)?;
        let mut worst = S::zero();
        for &i in active_links.iter().filter(|&&i| topology.links[i].tx == z) {
            let link = &topology.links[i];
            let tx_dev = scalar::bearing_degrees(tx_node.position, rx_pos) - link.tx_boresight;
            let tx_gain = antenna_gain(beams.tx(i), tx_dev, g)?;
            worst = worst.max(power * tx_gain * path * rx_gain);
        }
        total = total + worst;
    }
    Ok(total)
}

/// Received signal power (watts) on a link with both ends aligned.
pub fn signal_power<S: Scalar>(
    link: usize,
    topology: &Topology<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<S> {
    let l = &topology.links[link];
    let tx = topology.node(l.tx);
    let rx = topology.node(l.rx);
    let g = params.sidelobe_gain;
    let path = channel_gain(scalar::distance(tx.position, rx.position), params)?;
    Ok(scalar::dbm_to_watts(tx.tx_power_dbm)
        * antenna_gain(beams.tx(link), S::zero(), g)?
        * path
        * antenna_gain(beams.rx(l.rx), S::zero(), g)?)
}

pub fn sinr<S: Scalar>(
    link: usize,
    active_links: &[usize],
    topology: &Topology<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<S> {
    let rx = topology.links[link].rx;
    let signal = signal_power(link, topology, beams, params)?;
    let interference = interference_at(rx, link, active_links, topology, beams, params)?;
    Ok(signal / (interference + params.noise_power()))
}

/// Effective rate (bit/s) of `link` while `active_links` transmit.
pub fn link_rate<S: Scalar>(
    link: usize,
    active_links: &[usize],
    topology: &Topology<S>,
    beams: &BeamwidthVector<S>,
    params: &RadioParams<S>,
) -> Result<S> {
    let l = &topology.links[link];
    let delay = alignment_delay(
        beams.tx(link),
        beams.rx(l.rx),
        l.tx_sector_width,
        l.rx_sector_width,
        params.pilot_ratio,
    )?;
    let sinr = sinr(link, active_links, topology, beams, params)?;
    Ok(effective_rate(delay, sinr, params.bandwidth))
}

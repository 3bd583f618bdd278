use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pso::SwarmConfig;
use crate::radio::RadioParams;
use crate::scheduling::Mac;
use crate::topology::TopologyConfig;
use crate::welfare::DEFAULT_MAX_SLOTS;

/// One simulated network and how to optimize it. Loaded from TOML:
///
/// ```toml
/// name = "n5-tdma"
/// mac = "tdma"
/// monte_carlo_runs = 10
///
/// [topology]
/// node_count = 100
/// nominal_aues = 5
///
/// [radio]
/// sector_width = 20.0
///
/// [swarm]
/// particles = 30
/// iterations = 200
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    pub mac: Mac,
    pub monte_carlo_runs: usize,
    /// Cap on TDMA slots averaged per welfare evaluation.
    pub max_slots: u64,
    pub topology: TopologyConfig<f64>,
    pub radio: RadioParams<f64>,
    pub swarm: SwarmConfig<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: None,
            mac: Mac::Tdma,
            monte_carlo_runs: 10,
            max_slots: DEFAULT_MAX_SLOTS,
            topology: TopologyConfig::default(),
            radio: RadioParams::default(),
            swarm: SwarmConfig::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.monte_carlo_runs == 0 {
            return Err(Error::Config("monte_carlo_runs must be at least 1".into()));
        }
        if self.max_slots == 0 {
            return Err(Error::Config("max_slots must be at least 1".into()));
        }
        self.topology.validate()?;
        self.radio.validate()?;
        self.swarm.validate()
    }

    /// Name used for result directories.
    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("n{}-{}", self.topology.nominal_aues, self.mac))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Command-line overrides; set fields win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mac: Option<Mac>,
    pub nominal_aues: Option<usize>,
    pub runs: Option<usize>,
    pub particles: Option<usize>,
    pub iterations: Option<usize>,
    pub inertia: Option<f64>,
    pub cognitive: Option<f64>,
    pub social: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) {
        if let Some(m) = self.mac {
            scenario.mac = m;
        }
        if let Some(n) = self.nominal_aues {
            scenario.topology.nominal_aues = n;
        }
        if let Some(r) = self.runs {
            scenario.monte_carlo_runs = r;
        }
        let sw = &mut scenario.swarm;
        if let Some(p) = self.particles {
            sw.particles = p;
        }
        if let Some(i) = self.iterations {
            sw.iterations = i;
        }
        if let Some(v) = self.inertia {
            sw.inertia = v;
        }
        if let Some(v) = self.cognitive {
            sw.cognitive = v;
        }
        if let Some(v) = self.social {
            sw.social = v;
        }
        if let Some(s) = self.seed {
            sw.seed = s;
        }
    }
}

/// Sweep description: a base scenario crossed with anchor densities and MAC
/// strategies.
///
/// ```toml
/// nominal_aues = [5, 10, 20]
/// macs = ["tdma", "all-on"]
/// base_config = "scenario.toml"   # optional, relative to the grid file
///
/// [base.swarm]                     # optional inline base instead
/// iterations = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridFile {
    pub base_config: Option<PathBuf>,
    pub base: Option<Scenario>,
    pub nominal_aues: Vec<usize>,
    pub macs: Vec<Mac>,
}

impl Default for GridFile {
    fn default() -> Self {
        Self {
            base_config: None,
            base: None,
            nominal_aues: vec![5, 10, 20],
            macs: vec![Mac::Tdma, Mac::AllOn],
        }
    }
}

impl GridFile {
    /// Expands the grid; `dir` resolves a relative `base_config`.
    pub fn scenarios(&self, dir: &Path) -> Result<Vec<Scenario>> {
        let base = match (&self.base_config, &self.base) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "grid sets both base_config and [base]".into(),
                ))
            }
            (Some(p), None) => Scenario::from_file(&dir.join(p))?,
            (None, Some(b)) => b.clone(),
            (None, None) => Scenario::default(),
        };
        let mut out = Vec::new();
        for &n in &self.nominal_aues {
            for &mac in &self.macs {
                let mut s = base.clone();
                s.topology.nominal_aues = n;
                s.mac = mac;
                s.name = Some(format!("n{n}-{mac}"));
                s.validate()?;
                out.push(s);
            }
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let grid: GridFile = toml::from_str(&text)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((grid, dir))
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::newton_schulz::NsConfig;
use crate::asset::Region;
use crate::error::{Error, Result};

/// How many sweeps of each kind to run, in order body, finger, global.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Sweeps over non-finger joints.
    pub body: usize,
    /// Sweeps over `finger_*` joints only.
    pub finger: usize,
    /// Sweeps over every joint.
    pub global: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            body: 2,
            finger: 1,
            global: 1,
        }
    }
}

impl Schedule {
    pub const NONE: Schedule = Schedule {
        body: 0,
        finger: 0,
        global: 0,
    };

    pub fn total(&self) -> usize {
        self.body + self.finger + self.global
    }
}

/// Parses `body:2,finger:1,global:1`; omitted keys are zero.
impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Schedule::NONE;
        for (key, value) in parse_pairs(s)? {
            let n: usize = value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("schedule count '{value}' for '{key}'")))?;
            match key {
                "body" => out.body = n,
                "finger" => out.finger = n,
                "global" => out.global = n,
                _ => return Err(Error::InvalidConfig(format!("unknown schedule key '{key}'"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "body:{},finger:{},global:{}", self.body, self.finger, self.global)
    }
}

fn parse_pairs(s: &str) -> Result<Vec<(&str, &str)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once(':')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::InvalidConfig(format!("expected key:value, got '{p}'")))
        })
        .collect()
}

/// Per-region multipliers on the refinement loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionWeights {
    pub body: f64,
    pub hands: f64,
    pub feet: f64,
    pub head: f64,
}

impl Default for RegionWeights {
    fn default() -> Self {
        Self {
            body: 1.0,
            hands: 1.0,
            feet: 1.0,
            head: 1.0,
        }
    }
}

impl RegionWeights {
    pub fn get(&self, r: Region) -> f64 {
        match r {
            Region::Body => self.body,
            Region::Hands => self.hands,
            Region::Feet => self.feet,
            Region::Head => self.head,
        }
    }

    pub fn set(&mut self, r: Region, w: f64) {
        match r {
            Region::Body => self.body = w,
            Region::Hands => self.hands = w,
            Region::Feet => self.feet = w,
            Region::Head => self.head = w,
        }
    }

    /// One weight per vertex; unlabelled meshes count as body.
    pub fn per_vertex(&self, regions: Option<&[Region]>, vertex_count: usize) -> Vec<f64> {
        match regions {
            Some(r) => r.iter().map(|&r| self.get(r)).collect(),
            None => vec![self.body; vertex_count],
        }
    }
}

/// Parses `hands:5,feet:2`; omitted regions keep weight 1.
impl FromStr for RegionWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = RegionWeights::default();
        for (key, value) in parse_pairs(s)? {
            let region = Region::parse(key).ok_or_else(|| Error::InvalidConfig(format!("unknown region '{key}'")))?;
            let w: f64 = value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("region weight '{value}' for '{key}'")))?;
            out.set(region, w);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Skeleton-fit initialization only.
    Init,
    /// Initialization followed by hierarchical inverse LBS.
    Analytical,
    /// Analytical result refined by gradient descent through FK and LBS.
    Autograd,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "init" | "init_only" => Ok(Mode::Init),
            "analytical" => Ok(Mode::Analytical),
            "autograd" | "analytical+autograd" => Ok(Mode::Autograd),
            _ => Err(Error::InvalidConfig(format!("unknown inversion mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutogradConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub region_weights: RegionWeights,
    /// A run that never improves on its start and ends above both
    /// `DIVERGENCE_FACTOR ×` the starting loss and this floor (m²) is
    /// reported as diverged. The floor keeps near-exact warm starts, whose
    /// loss sits at rounding level, from being flagged for harmless jitter.
    pub divergence_floor: f64,
    /// Permit starting from the bind pose. Cold starts are known to land in
    /// poor local minima.
    pub allow_cold_start: bool,
}

impl Default for AutogradConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            step_size: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            region_weights: RegionWeights::default(),
            divergence_floor: 1e-6,
            allow_cold_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub mode: Mode,
    pub schedule: Schedule,
    /// Minimum skinning mass over a joint's subtree for a vertex to take
    /// part in that joint's solve.
    pub tau: f64,
    /// Exponent on the joint's own skinning weight used to weight samples in
    /// its cross-covariance (0 weights the whole selection uniformly).
    pub own_weight_power: f64,
    pub newton_schulz: NsConfig,
    pub autograd: AutogradConfig,
    /// Include the rig's correctives net when re-posing (refinement loss and
    /// reported residuals). The analytical sweeps model plain LBS either way.
    pub correctives: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Analytical,
            schedule: Schedule::default(),
            tau: 0.5,
            own_weight_power: 8.0,
            newton_schulz: NsConfig::default(),
            autograd: AutogradConfig::default(),
            correctives: true,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("tau", self.tau)?;
        unit("newton_schulz.tolerance", self.newton_schulz.tolerance)?;
        if !(self.own_weight_power >= 0.0 && self.own_weight_power.is_finite()) {
            return Err(Error::InvalidConfig(format!("own_weight_power must be ≥ 0, got {}", self.own_weight_power)));
        }
        let a = &self.autograd;
        unit("autograd.beta1", a.beta1)?;
        unit("autograd.beta2", a.beta2)?;
        if !(a.step_size > 0.0 && a.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!("autograd.step_size must be positive, got {}", a.step_size)));
        }
        if !(a.epsilon > 0.0) {
            return Err(Error::InvalidConfig("autograd.epsilon must be positive".into()));
        }
        for r in Region::ALL {
            let w = a.region_weights.get(r);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!("region weight for {} must be ≥ 0, got {w}", r.name())));
            }
        }
        Ok(())
    }
}

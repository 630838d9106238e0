//! Humanoid skeleton layout: bones as straight segments grouped into
//! collinear chains, one capsule per chain.

use crate::geom::{Mat3, Vec3};

use super::{IdentityScales, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ChainKind {
    Torso,
    Arm,
    Leg,
    Finger,
}

#[derive(Debug, Clone)]
pub(crate) struct Bone {
    pub name: String,
    pub parent: Option<usize>,
    pub head: Vec3,
    pub tail: Vec3,
    /// Capsule radius at the bone head.
    pub radius: f64,
    pub chain: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub kind: ChainKind,
    pub bones: Vec<usize>,
    pub end_radius: f64,
    /// Bind rotation shared by the chain; its x axis runs along the chain.
    pub frame: Mat3,
    /// Axial distance from the chain start past which vertices are labeled
    /// as hands / feet / head.
    pub region_start: Option<f64>,
    /// Cap depth per unit cap radius. Equals stretch / girth, so stretching
    /// moves the caps with the bones and girth only moves vertices away
    /// from the axis.
    pub cap_depth: f64,
}

impl Chain {
    pub fn start(&self, bones: &[Bone]) -> Vec3 {
        bones[self.bones[0]].head
    }

    pub fn dir(&self) -> Vec3 {
        self.frame.column(0).into_owned()
    }

    pub fn bone_lengths(&self, bones: &[Bone]) -> Vec<f64> {
        self.bones.iter().map(|&b| (bones[b].tail - bones[b].head).norm()).collect()
    }

    pub fn radii(&self, bones: &[Bone]) -> Vec<f64> {
        let mut r: Vec<f64> = self.bones.iter().map(|&b| bones[b].radius).collect();
        r.push(self.end_radius);
        r
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub bones: Vec<Bone>,
    pub chains: Vec<Chain>,
}

// axis frames with exact entries
fn frame_up() -> Mat3 {
    Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}
fn frame_down() -> Mat3 {
    Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}
fn frame_left() -> Mat3 {
    Mat3::identity()
}
fn frame_right() -> Mat3 {
    Mat3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0)
}

const PELVIS_HEIGHT: f64 = 1.0;
const SHOULDER_DROP: f64 = 0.07;
const SHOULDER_HALF_WIDTH: f64 = 0.19;
const FINGER_SPACING: f64 = 0.02;
const HIP_HALF_WIDTH: f64 = 0.09;
const HIP_DROP: f64 = 0.05;

struct Builder {
    bones: Vec<Bone>,
    chains: Vec<Chain>,
}

impl Builder {
    /// Append a chain of bones, each `lengths[i]` long, starting at `start`.
    #[allow(clippy::too_many_arguments)]
    fn chain(
        &mut self,
        kind: ChainKind,
        names: Vec<String>,
        first_parent: Option<usize>,
        start: Vec3,
        frame: Mat3,
        lengths: &[f64],
        radii: &[f64],
        end_radius: f64,
        region_start: Option<f64>,
        cap_depth: f64,
    ) -> Vec<usize> {
        let dir: Vec3 = frame.column(0).into_owned();
        let chain = self.chains.len();
        let mut head = start;
        let mut ids = Vec::new();
        for (i, name) in names.into_iter().enumerate() {
            let tail = head + dir * lengths[i];
            let parent = if i == 0 { first_parent } else { Some(ids[i - 1]) };
            ids.push(self.bones.len());
            self.bones.push(Bone {
                name,
                parent,
                head,
                tail,
                radius: radii[i],
                chain,
            });
            head = tail;
        }
        self.chains.push(Chain {
            kind,
            bones: ids.clone(),
            end_radius,
            frame,
            region_start,
            cap_depth,
        });
        ids
    }
}

fn subdivided(base: &str, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| if i == 0 { base.to_string() } else { format!("{base}_{i}") })
        .collect()
}

fn split(length: f64, n: usize) -> Vec<f64> {
    vec![length / n as f64; n]
}

/// Linear radius profile sampled at `n` stations.
fn taper(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if n == 1 { from } else { from + (to - from) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub(crate) fn build(cfg: &SynthConfig, s: &IdentityScales) -> Layout {
    let mut b = Builder {
        bones: Vec::new(),
        chains: Vec::new(),
    };
    let g = s.girth;
    let len = &cfg.lengths;

    // torso: pelvis + torso joints (+ head) in one capsule
    let t = cfg.torso_joints;
    let mut names = vec!["pelvis".to_string()];
    names.extend(match t {
        2 => vec!["spine".to_string(), "chest".to_string()],
        _ => (0..t).map(|i| format!("spine_{i}")).collect(),
    });
    let mut lengths = split(len.torso * s.torso, t + 1);
    let mut radii: Vec<f64> = taper(0.14, 0.15, t + 1).into_iter().map(|r| r * g).collect();
    let mut end_radius = 0.13 * g;
    let mut head_start = None;
    if cfg.head {
        names.push("head".into());
        lengths.push(len.head * s.torso);
        radii.push(0.06 * g);
        end_radius = 0.09 * g;
        head_start = Some(len.torso * s.torso);
    }
    let torso = b.chain(
        ChainKind::Torso,
        names,
        None,
        Vec3::new(0.0, PELVIS_HEIGHT, 0.0),
        frame_up(),
        &lengths,
        &radii,
        end_radius,
        head_start,
        s.torso / g,
    );
    let pelvis = torso[0];
    let shoulder_parent = torso[t];
    let neck_y = PELVIS_HEIGHT + len.torso * s.torso;

    let sub = cfg.limb_subdivision;
    let sides = [("l", 1.0, frame_left()), ("r", -1.0, frame_right())];
    let mut forearm_tips = Vec::new();
    for &(side, sign, frame) in sides.iter().take(cfg.arms) {
        let mut names = subdivided(&format!("{side}_upperarm"), sub);
        names.extend(subdivided(&format!("{side}_forearm"), sub));
        let mut lengths = split(len.upperarm * s.arms, sub);
        lengths.extend(split(len.forearm * s.arms, sub));
        let mut radii = taper(0.05, 0.045, sub);
        radii.extend(taper(0.04, 0.035, sub));
        let radii: Vec<f64> = radii.into_iter().map(|r| r * g).collect();
        let start = Vec3::new(sign * SHOULDER_HALF_WIDTH, neck_y - SHOULDER_DROP * s.torso, 0.0);
        let ids = b.chain(
            ChainKind::Arm,
            names,
            Some(shoulder_parent),
            start,
            frame,
            &lengths,
            &radii,
            0.03 * g,
            Some((len.upperarm + len.forearm - len.hand) * s.arms),
            s.arms / g,
        );
        forearm_tips.push((side, frame, *ids.last().unwrap()));
    }

    for &(side, sign, _) in sides.iter().take(cfg.legs) {
        let mut names = subdivided(&format!("{side}_thigh"), sub);
        names.extend(subdivided(&format!("{side}_shin"), sub));
        let mut lengths = split(len.thigh * s.legs, sub);
        lengths.extend(split(len.shin * s.legs, sub));
        let mut radii = taper(0.075, 0.06, sub);
        radii.extend(taper(0.05, 0.045, sub));
        let radii: Vec<f64> = radii.into_iter().map(|r| r * g).collect();
        b.chain(
            ChainKind::Leg,
            names,
            Some(pelvis),
            Vec3::new(sign * HIP_HALF_WIDTH, PELVIS_HEIGHT - HIP_DROP, 0.0),
            frame_down(),
            &lengths,
            &radii,
            0.04 * g,
            Some((len.thigh + len.shin - len.foot) * s.legs),
            s.legs / g,
        );
    }

    let (nf, np) = (cfg.fingers_per_hand, cfg.phalanges);
    for &(side, frame, parent) in &forearm_tips {
        let tip = b.bones[parent].tail;
        for f in 0..nf {
            let z = (f as f64 - (nf as f64 - 1.0) / 2.0) * FINGER_SPACING;
            let names = if np == 1 {
                vec![format!("finger_{side}_{f}")]
            } else {
                (0..np).map(|p| format!("finger_{side}_{f}_{p}")).collect()
            };
            let radii: Vec<f64> = taper(0.008, 0.007, np).into_iter().map(|r| r * g).collect();
            b.chain(
                ChainKind::Finger,
                names,
                Some(parent),
                tip + Vec3::new(0.0, 0.0, z),
                frame,
                &split(len.finger * s.arms, np),
                &radii,
                0.006 * g,
                Some(0.0),
                s.arms / g,
            );
        }
    }
    Layout {
        bones: b.bones,
        chains: b.chains,
    }
}

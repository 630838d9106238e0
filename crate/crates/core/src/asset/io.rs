//! On-disk format: a JSON manifest plus raw little-endian blobs.
//!
//! Geometry, weights and network parameters are stored as `f32`, indices as
//! `i32`. Blob paths in the manifest are relative to the manifest's
//! directory. Motion files are a JSON header plus an `f64` frame blob.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pose::{LocalRotations, MotionSequence, PoseFrame, RotationEncoding};
use super::{Mesh, Region, RigAsset, Skeleton, SkinningWeights};
use crate::animation::{CorrectivesNet, CorrectivesParts};
use crate::error::{Error, Result};
use crate::fit::JointRegressor;
use crate::geom::{is_rotation, orthonormality_error, project_to_rotation, Mat3, Rigid, Vec3};
use crate::topo::Correspondence;

pub const FORMAT_VERSION: u32 = 1;
pub const MOTION_VERSION: u32 = 1;
/// Bind rotations further than this from orthonormal are rejected; closer
/// ones are re-projected onto SO(3) to undo `f32` rounding.
const STORED_ROTATION_SLACK: f64 = 1e-5;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    #[serde(default)]
    unit_scale: Option<f64>,
    /// Scale the payload was originally authored in (payload is in meters
    /// when this is present).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_unit_scale: Option<f64>,
    mesh: MeshEntry,
    skeleton: SkeletonEntry,
    weights: CsrEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    correctives: Option<CorrectivesEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    correspondences: Vec<CorrespondenceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regressor: Option<CsrEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeshEntry {
    vertices_blob: String,
    faces_blob: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regions_blob: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SkeletonEntry {
    names: Vec<String>,
    /// `-1` marks the root.
    parents: Vec<i64>,
    bind_rotations_blob: String,
    bind_translations_blob: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsrEntry {
    offsets_blob: String,
    indices_blob: String,
    values_blob: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct CorrectivesEntry {
    C: usize,
    stage1_weights_blob: String,
    stage1_bias_blob: String,
    stage2_weights_blob: String,
    stage2_bias_blob: String,
    mask_offsets_blob: String,
    masks_blob: String,
    subtract_rest: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct CorrespondenceEntry {
    source_id: String,
    source_vertex_count: usize,
    source_faces_blob: String,
    faces_blob: String,
    bary_blob: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unmatched_blob: Option<String>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedAsset(msg.into())
}

fn read_bytes(dir: &Path, name: &str, width: usize) -> Result<Vec<u8>> {
    if name.is_empty() || Path::new(name).is_absolute() {
        return Err(malformed(format!("invalid blob path '{name}'")));
    }
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => malformed(format!("missing blob '{name}'")),
        _ => Error::io(&path, e),
    })?;
    if bytes.len() % width != 0 {
        return Err(malformed(format!("blob '{name}' length {} is not a multiple of {width}", bytes.len())));
    }
    Ok(bytes)
}

fn read_f32(dir: &Path, name: &str) -> Result<Vec<f32>> {
    Ok(read_bytes(dir, name, 4)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_i32(dir: &Path, name: &str) -> Result<Vec<i32>> {
    Ok(read_bytes(dir, name, 4)?
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_index(dir: &Path, name: &str) -> Result<Vec<u32>> {
    read_i32(dir, name)?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| malformed(format!("negative index in '{name}'"))))
        .collect()
}

fn write_blob(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn f32_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(|v| (v as f32).to_le_bytes()).collect()
}

fn i32_bytes(values: impl IntoIterator<Item = i64>) -> Result<Vec<u8>> {
    values
        .into_iter()
        .map(|v| {
            i32::try_from(v)
                .map(|x| x.to_le_bytes())
                .map_err(|_| Error::ValidationFailure(format!("index {v} does not fit in 32 bits")))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.concat())
}

fn vec3s(flat: &[f32], scale: f64, what: &str) -> Result<Vec<Vec3>> {
    if flat.len() % 3 != 0 {
        return Err(malformed(format!("{what} blob is not a multiple of 3 floats")));
    }
    Ok(flat
        .chunks_exact(3)
        .map(|c| {
            let v = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64);
            if scale == 1.0 {
                v
            } else {
                v * scale
            }
        })
        .collect())
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("rig.json")
    } else {
        path.to_path_buf()
    }
}

/// Load and fully validate a rig. `path` is the manifest or its directory.
pub fn load_rig(path: impl AsRef<Path>) -> Result<RigAsset> {
    let path = manifest_path(path.as_ref());
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| malformed(format!("{}: {e}", path.display())))?;
    if m.version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported format version {}", m.version)));
    }
    let scale = m.unit_scale.ok_or(Error::UnitMissing)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::ValidationFailure(format!("unit scale {scale} is not positive")));
    }
    let dir = path.parent().unwrap_or(Path::new("."));

    // mesh
    let vertices = vec3s(&read_f32(dir, &m.mesh.vertices_blob)?, scale, "vertex")?;
    let face_idx = read_index(dir, &m.mesh.faces_blob)?;
    if face_idx.len() % 3 != 0 {
        return Err(malformed("face blob is not a multiple of 3 indices"));
    }
    let faces: Vec<[u32; 3]> = face_idx.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let regions = match &m.mesh.regions_blob {
        Some(name) => Some(
            read_i32(dir, name)?
                .into_iter()
                .map(|c| Region::from_code(c).ok_or_else(|| malformed(format!("unknown region code {c}"))))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let mesh = Mesh::new(vertices, faces, regions)?;

    // skeleton
    let s = &m.skeleton;
    let jc = s.names.len();
    let parents = s
        .parents
        .iter()
        .map(|&p| match p {
            -1 => Ok(None),
            p if p >= 0 => Ok(Some(p as usize)),
            p => Err(malformed(format!("parent index {p}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let rots = read_f32(dir, &s.bind_rotations_blob)?;
    let trans = vec3s(&read_f32(dir, &s.bind_translations_blob)?, scale, "bind translation")?;
    if rots.len() != jc * 9 || trans.len() != jc {
        return Err(malformed(format!("bind blobs do not hold {jc} joints")));
    }
    let bind = rots
        .chunks_exact(9)
        .zip(&trans)
        .map(|(r, t)| Rigid::new(stored_rotation(r), *t))
        .collect();
    let skeleton = Skeleton::new(s.names.clone(), parents, bind)?;

    // weights
    let weights = SkinningWeights::from_csr(
        read_i32(dir, &m.weights.offsets_blob)?.into_iter().map(|v| v.max(0) as usize).collect(),
        read_index(dir, &m.weights.indices_blob)?,
        read_f32(dir, &m.weights.values_blob)?.into_iter().map(f64::from).collect(),
        jc,
    )?;

    let mut rig = RigAsset::new(mesh, skeleton, weights, m.declared_unit_scale.unwrap_or(scale))?;

    if let Some(c) = &m.correctives {
        let net = CorrectivesNet::from_parts(CorrectivesParts {
            joint_count: jc,
            channels: c.C,
            vertex_count: rig.vertex_count(),
            w1: read_f32(dir, &c.stage1_weights_blob)?,
            b1: read_f32(dir, &c.stage1_bias_blob)?,
            mask_offsets: read_i32(dir, &c.mask_offsets_blob)?.into_iter().map(|v| v.max(0) as usize).collect(),
            mask_vertices: read_index(dir, &c.masks_blob)?,
            w2: read_f32(dir, &c.stage2_weights_blob)?,
            b2: read_f32(dir, &c.stage2_bias_blob)?,
            subtract_rest: c.subtract_rest,
        })?;
        rig = rig.with_correctives(net)?;
    }
    for c in &m.correspondences {
        rig = rig.with_correspondence(read_correspondence(dir, c)?)?;
    }
    if let Some(r) = &m.regressor {
        let reg = JointRegressor::from_csr(
            read_i32(dir, &r.offsets_blob)?.into_iter().map(|v| v.max(0) as usize).collect(),
            read_index(dir, &r.indices_blob)?,
            read_f32(dir, &r.values_blob)?.into_iter().map(f64::from).collect(),
            rig.vertex_count(),
        )?;
        rig = rig.with_regressor(reg)?;
    }
    Ok(rig)
}

fn read_correspondence(dir: &Path, c: &CorrespondenceEntry) -> Result<Correspondence> {
    let sf = read_index(dir, &c.source_faces_blob)?;
    if sf.len() % 3 != 0 {
        return Err(malformed("source face blob is not a multiple of 3"));
    }
    let bary = read_f32(dir, &c.bary_blob)?;
    if bary.len() % 4 != 0 {
        return Err(malformed("barycentric blob is not a multiple of 4"));
    }
    let unmatched = match &c.unmatched_blob {
        Some(name) => Some(read_i32(dir, name)?.into_iter().map(|v| v != 0).collect()),
        None => None,
    };
    Correspondence::from_parts(
        c.source_id.clone(),
        sf.chunks_exact(3).map(|v| [v[0], v[1], v[2]]).collect(),
        c.source_vertex_count,
        read_index(dir, &c.faces_blob)?,
        bary.chunks_exact(4)
            .map(|b| [b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64])
            .collect(),
        unmatched,
    )
}

/// Row-major `f32` rotation; re-projected when rounding broke orthonormality.
fn stored_rotation(r: &[f32]) -> Mat3 {
    let m = Mat3::from_fn(|i, j| r[3 * i + j] as f64);
    if is_rotation(&m, super::skeleton::ROTATION_TOL) || orthonormality_error(&m) > STORED_ROTATION_SLACK {
        // exact, or too far off to be rounding: leave it to skeleton validation
        m
    } else {
        project_to_rotation(&m)
    }
}

/// Write `rig` as `<path>` (manifest) plus `<stem>.<part>.bin` blobs beside
/// it. The payload is written in meters; values are rounded to `f32`.
pub fn save_rig(rig: &RigAsset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name")))?
        .to_string();
    let blob = |part: &str| format!("{stem}.{part}.bin");

    let mesh = rig.mesh();
    write_blob(dir, &blob("vertices"), &f32_bytes(mesh.vertices().iter().flat_map(|v| [v.x, v.y, v.z])))?;
    write_blob(dir, &blob("faces"), &i32_bytes(mesh.faces().iter().flatten().map(|&i| i as i64))?)?;
    let regions_blob = match mesh.regions() {
        Some(r) => {
            write_blob(dir, &blob("regions"), &i32_bytes(r.iter().map(|x| x.code() as i64))?)?;
            Some(blob("regions"))
        }
        None => None,
    };

    let skel = rig.skeleton();
    write_blob(
        dir,
        &blob("bind_rotations"),
        &f32_bytes(skel.bind().iter().flat_map(|t| (0..9).map(move |i| t.rotation[(i / 3, i % 3)]))),
    )?;
    write_blob(
        dir,
        &blob("bind_translations"),
        &f32_bytes(skel.bind().iter().flat_map(|t| [t.translation.x, t.translation.y, t.translation.z])),
    )?;

    let w = rig.weights();
    let weights = write_csr(dir, &stem, "weights", w.offsets(), w.joint_indices(), w.values())?;

    let correctives = match rig.correctives() {
        Some(net) => {
            let p = net.to_parts();
            let f = |v: &[f32]| -> Vec<u8> { v.iter().flat_map(|x| x.to_le_bytes()).collect() };
            write_blob(dir, &blob("correctives_w1"), &f(&p.w1))?;
            write_blob(dir, &blob("correctives_b1"), &f(&p.b1))?;
            write_blob(dir, &blob("correctives_w2"), &f(&p.w2))?;
            write_blob(dir, &blob("correctives_b2"), &f(&p.b2))?;
            write_blob(dir, &blob("correctives_mask_offsets"), &i32_bytes(p.mask_offsets.iter().map(|&v| v as i64))?)?;
            write_blob(dir, &blob("correctives_masks"), &i32_bytes(p.mask_vertices.iter().map(|&v| v as i64))?)?;
            Some(CorrectivesEntry {
                C: p.channels,
                stage1_weights_blob: blob("correctives_w1"),
                stage1_bias_blob: blob("correctives_b1"),
                stage2_weights_blob: blob("correctives_w2"),
                stage2_bias_blob: blob("correctives_b2"),
                mask_offsets_blob: blob("correctives_mask_offsets"),
                masks_blob: blob("correctives_masks"),
                subtract_rest: p.subtract_rest,
            })
        }
        None => None,
    };

    let mut correspondences = Vec::new();
    for (i, (id, c)) in rig.correspondences().iter().enumerate() {
        correspondences.push(write_correspondence(dir, &format!("{stem}.corr{i}"), id, c)?);
    }

    let regressor = match rig.regressor() {
        Some(r) => Some(write_csr(dir, &stem, "regressor", r.offsets(), r.vertex_indices(), r.weights())?),
        None => None,
    };

    let manifest = Manifest {
        version: FORMAT_VERSION,
        unit_scale: Some(1.0),
        declared_unit_scale: (rig.unit_scale() != 1.0).then_some(rig.unit_scale()),
        mesh: MeshEntry {
            vertices_blob: blob("vertices"),
            faces_blob: blob("faces"),
            regions_blob,
        },
        skeleton: SkeletonEntry {
            names: skel.names().to_vec(),
            parents: skel.parents().iter().map(|p| p.map_or(-1, |p| p as i64)).collect(),
            bind_rotations_blob: blob("bind_rotations"),
            bind_translations_blob: blob("bind_translations"),
        },
        weights,
        correctives,
        correspondences,
        regressor,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Blobs are named `<stem>_<part>.bin`.
fn write_correspondence(dir: &Path, stem: &str, id: &str, c: &Correspondence) -> Result<CorrespondenceEntry> {
    let part = |s: &str| format!("{stem}_{s}.bin");
    write_blob(dir, &part("source_faces"), &i32_bytes(c.source_faces().iter().flatten().map(|&v| v as i64))?)?;
    write_blob(dir, &part("faces"), &i32_bytes(c.face_index().iter().map(|&v| v as i64))?)?;
    write_blob(dir, &part("bary"), &f32_bytes(c.bary().iter().flatten().copied()))?;
    let unmatched_blob = match c.unmatched() {
        Some(u) => {
            write_blob(dir, &part("unmatched"), &i32_bytes(u.iter().map(|&b| b as i64))?)?;
            Some(part("unmatched"))
        }
        None => None,
    };
    Ok(CorrespondenceEntry {
        source_id: id.to_string(),
        source_vertex_count: c.source_vertex_count(),
        source_faces_blob: part("source_faces"),
        faces_blob: part("faces"),
        bary_blob: part("bary"),
        unmatched_blob,
    })
}

fn write_csr(dir: &Path, stem: &str, name: &str, offsets: &[usize], idx: &[u32], vals: &[f64]) -> Result<CsrEntry> {
    let e = CsrEntry {
        offsets_blob: format!("{stem}.{name}_offsets.bin"),
        indices_blob: format!("{stem}.{name}_indices.bin"),
        values_blob: format!("{stem}.{name}_values.bin"),
    };
    write_blob(dir, &e.offsets_blob, &i32_bytes(offsets.iter().map(|&v| v as i64))?)?;
    write_blob(dir, &e.indices_blob, &i32_bytes(idx.iter().map(|&v| v as i64))?)?;
    write_blob(dir, &e.values_blob, &f32_bytes(vals.iter().copied()))?;
    Ok(e)
}

#[derive(Debug, Serialize, Deserialize)]
struct MotionHeader {
    version: u32,
    fps: f64,
    encoding: RotationEncoding,
    joint_count: usize,
    #[serde(default = "default_true")]
    joint_orient: bool,
    frame_count: usize,
    frames_blob: String,
}

fn default_true() -> bool {
    true
}

/// Write a motion header (`path`) and its `<stem>.frames.bin` blob.
///
/// Each frame stores `J × width` rotation values followed by the root
/// translation, all as little-endian `f64` so the round trip is exact.
pub fn save_motion(seq: &MotionSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("motion");
    let blob = format!("{stem}.frames.bin");
    let mut bytes = Vec::new();
    for f in &seq.frames {
        f.check_joint_count(seq.joint_count)?;
        if f.rotations.encoding() != seq.encoding {
            return Err(Error::EncodingMismatch("frame encoding differs from sequence encoding".into()));
        }
        for v in f.rotations.to_flat().into_iter().chain(f.root_translation.iter().copied()) {
            bytes.extend(v.to_le_bytes());
        }
    }
    write_blob(dir, &blob, &bytes)?;
    let header = MotionHeader {
        version: MOTION_VERSION,
        fps: seq.fps,
        encoding: seq.encoding,
        joint_count: seq.joint_count,
        joint_orient: seq.joint_orient,
        frame_count: seq.frames.len(),
        frames_blob: blob,
    };
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_motion(path: impl AsRef<Path>) -> Result<MotionSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let h: MotionHeader = serde_json::from_str(&text).map_err(|e| Error::MalformedMotion(e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let bytes = fs::read(dir.join(&h.frames_blob)).map_err(|e| Error::io(dir.join(&h.frames_blob), e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::MalformedMotion("frame blob is not a whole number of f64 values".into()));
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let per_frame = if h.frame_count == 0 {
        0
    } else {
        if values.len() % h.frame_count != 0 {
            return Err(Error::MalformedMotion("frame blob size does not divide by frame count".into()));
        }
        values.len() / h.frame_count
    };
    let width = h.encoding.width();
    if h.frame_count > 0 && (per_frame < 3 || (per_frame - 3) % width != 0) {
        return Err(Error::MalformedMotion(format!("frame record of {per_frame} values")));
    }
    let found = if h.frame_count > 0 { (per_frame - 3) / width } else { h.joint_count };
    if found != h.joint_count {
        return Err(Error::JointCountMismatch {
            expected: h.joint_count,
            found,
        });
    }
    let mut frames = Vec::with_capacity(h.frame_count);
    for rec in values.chunks_exact(per_frame.max(1)).take(h.frame_count) {
        let (rot, t) = rec.split_at(per_frame - 3);
        frames.push(PoseFrame {
            rotations: LocalRotations::from_flat(h.encoding, rot)?,
            root_translation: Vec3::new(t[0], t[1], t[2]),
            joint_orient: h.joint_orient,
        });
    }
    let mut seq = MotionSequence::new(h.fps, h.encoding, h.joint_count, frames)?;
    seq.joint_orient = h.joint_orient;
    Ok(seq)
}

/// Write a standalone correspondence: `path` (conventionally
/// `<source_id>.corr.json`) plus blobs beside it.
pub fn save_correspondence(corr: &Correspondence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("corr");
    let stem = name.strip_suffix(".json").unwrap_or(name);
    let entry = write_correspondence(dir, stem, corr.source_id(), corr)?;
    let text = serde_json::to_string_pretty(&entry).expect("entry serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_correspondence(path: impl AsRef<Path>) -> Result<Correspondence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entry: CorrespondenceEntry = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    read_correspondence(path.parent().unwrap_or(Path::new(".")), &entry)
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexAnimationHeader {
    version: u32,
    frame_count: usize,
    vertex_count: usize,
    positions_blob: String,
}

/// Write posed vertex frames: a JSON header plus `<stem>.positions.bin`
/// holding `frames × vertices × 3` little-endian `f64` (meters).
pub fn save_vertex_animation(frames: &[Vec<Vec3>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("frames");
    let vertex_count = frames.first().map_or(0, Vec::len);
    let mut bytes = Vec::with_capacity(frames.len() * vertex_count * 24);
    for f in frames {
        if f.len() != vertex_count {
            return Err(Error::SizeMismatch {
                what: "frame vertices",
                expected: vertex_count,
                found: f.len(),
            });
        }
        for v in f.iter().flat_map(|p| p.iter()) {
            bytes.extend(v.to_le_bytes());
        }
    }
    let header = VertexAnimationHeader {
        version: MOTION_VERSION,
        frame_count: frames.len(),
        vertex_count,
        positions_blob: format!("{stem}.positions.bin"),
    };
    write_blob(dir, &header.positions_blob, &bytes)?;
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_vertex_animation(path: impl AsRef<Path>) -> Result<Vec<Vec<Vec3>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let h: VertexAnimationHeader = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let bytes = read_bytes(dir, &h.positions_blob, 8)?;
    if bytes.len() != h.frame_count * h.vertex_count * 24 {
        return Err(malformed(format!(
            "positions blob holds {} bytes, header implies {}",
            bytes.len(),
            h.frame_count * h.vertex_count * 24
        )));
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(values
        .chunks_exact((h.vertex_count * 3).max(1))
        .take(h.frame_count)
        .map(|f| f.chunks_exact(3).map(|p| Vec3::new(p[0], p[1], p[2])).collect())
        .collect())
}

/// Parse a Wavefront OBJ (positions and faces only). Polygons are
/// fan-triangulated; texture/normal indices are ignored.
pub fn parse_obj(text: &str, unit_scale: f64) -> Result<Mesh> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| malformed(format!("obj line {}: {e}", ln + 1)))?;
                if c.len() != 3 {
                    return Err(malformed(format!("obj line {}: vertex needs 3 coordinates", ln + 1)));
                }
                verts.push(Vec3::new(c[0], c[1], c[2]) * unit_scale);
            }
            Some("f") => {
                let idx = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|_| malformed(format!("obj line {}: bad index '{tok}'", ln + 1)))?;
                        let n = verts.len() as i64;
                        let r = if i < 0 { n + i } else { i - 1 };
                        if r < 0 || r >= n {
                            return Err(malformed(format!("obj line {}: index {i} out of range", ln + 1)));
                        }
                        Ok(r as u32)
                    })
                    .collect::<Result<Vec<u32>>>()?;
                if idx.len() < 3 {
                    return Err(malformed(format!("obj line {}: face needs 3 vertices", ln + 1)));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Mesh::new(verts, faces, None)
}

pub fn load_obj(path: impl AsRef<Path>, unit_scale: f64) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, unit_scale)
}

pub fn obj_string(vertices: &[Vec3], faces: &[[u32; 3]]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(vertices.len() * 40 + faces.len() * 24);
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_obj(vertices: &[Vec3], faces: &[[u32; 3]], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, obj_string(vertices, faces)).map_err(|e| Error::io(path, e))
}

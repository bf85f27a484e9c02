//! Training checkpoints.
//!
//! `ckpt_{step}.bin` layout: the magic `RSIMCKPT`, a little-endian `u32`
//! format version, a `u64` header length, the JSON header, every parameter
//! group as `values, m, v` in `f32`, the pooled frames of both image pools,
//! and finally the SHA-256 of everything before it. `ckpt_{step}.json` is a
//! human-readable sidecar echoing the configuration and the file digest.

use std::fs;
use std::path::{Path, PathBuf};

use radarsim_core::models::{GroupId, ModelConfig, ModelParameters, Networks, ParamGroup};
use radarsim_core::nn::AdamState;
use radarsim_core::polargrid::PolarGridSpec;
use radarsim_core::rng::Rng;
use radarsim_core::trainer::{AblationSpec, ImagePool, TrainConfig, TrainState};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frames::{decode_f32, encode_f32, write_atomic};

const MAGIC: &[u8; 8] = b"RSIMCKPT";
const VERSION: u32 = 1;

/// How latent noise was drawn while training.
pub const NOISE_POLICY: &str = "eps and kappa drawn independently for every generator application";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub ablation: AblationSpec,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub grid: PolarGridSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupHeader {
    id: GroupId,
    len: usize,
    adam_t: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PoolHeader {
    capacity: usize,
    frames: usize,
    rng: Rng,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    step: u64,
    setup: RunSetup,
    noise_policy: String,
    groups: Vec<GroupHeader>,
    pool_x: PoolHeader,
    pool_w: PoolHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub step: u64,
    pub file: String,
    pub sha256: String,
    pub noise_policy: String,
    pub setup: RunSetup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub setup: RunSetup,
    pub state: TrainState,
}

pub fn checkpoint_name(step: u64) -> String {
    format!("ckpt_{step}.bin")
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn pool_header(p: &ImagePool) -> PoolHeader {
    PoolHeader {
        capacity: p.capacity(),
        frames: p.len(),
        rng: p.rng().clone(),
    }
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let params = &ckpt.state.params;
    let header = Header {
        step: params.step,
        setup: ckpt.setup.clone(),
        noise_policy: NOISE_POLICY.into(),
        groups: GroupId::ALL
            .iter()
            .map(|&id| {
                let g = params.group(id);
                GroupHeader {
                    id,
                    len: g.len(),
                    adam_t: g.adam.t,
                }
            })
            .collect(),
        pool_x: pool_header(&ckpt.state.pool_x),
        pool_w: pool_header(&ckpt.state.pool_w),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for id in GroupId::ALL {
        let g = params.group(id);
        for block in [&g.values, &g.adam.m, &g.adam.v] {
            out.extend(encode_f32(block));
        }
    }
    for pool in [&ckpt.state.pool_x, &ckpt.state.pool_w] {
        for frame in pool.stored() {
            out.extend(encode_f32(frame));
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::corrupt(self.path, "truncated"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(decode_f32(self.take(n * 4)?).expect("multiple of four"))
    }
}

/// Parses and verifies a checkpoint against the networks it claims to fit.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 12 + 32 {
        return Err(Error::corrupt(path, "truncated"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::corrupt(path, "checksum mismatch"));
    }
    let mut r = Reader { bytes: body, at: 0, path };
    if r.take(8)? != MAGIC {
        return Err(Error::corrupt(path, "not a checkpoint"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::corrupt(path, format!("unsupported version {version}")));
    }
    let len = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(r.take(len)?).map_err(|e| Error::corrupt(path, e.to_string()))?;
    let setup = header.setup;
    let nets = Networks::new(setup.model, setup.grid)?;
    if header.groups.len() != GroupId::ALL.len() {
        return Err(Error::corrupt(path, "wrong number of parameter groups"));
    }
    let mut groups = Vec::new();
    for (gh, id) in header.groups.iter().zip(GroupId::ALL) {
        if gh.id != id || gh.len != nets.layout_len(id) {
            return Err(Error::corrupt(path, format!("group {} does not fit the networks", id.name())));
        }
        let values = r.floats(gh.len)?;
        let m = r.floats(gh.len)?;
        let v = r.floats(gh.len)?;
        groups.push(ParamGroup {
            values,
            adam: AdamState { m, v, t: gh.adam_t },
        });
    }
    let cells = setup.grid.cells();
    let mut pools = Vec::new();
    for ph in [&header.pool_x, &header.pool_w] {
        if ph.frames > ph.capacity {
            return Err(Error::corrupt(path, "pool over capacity"));
        }
        let frames = (0..ph.frames).map(|_| r.floats(cells)).collect::<Result<Vec<_>>>()?;
        pools.push(ImagePool::from_parts(ph.capacity, frames, ph.rng.clone()));
    }
    if r.at != body.len() {
        return Err(Error::corrupt(path, "trailing bytes"));
    }
    let mut g = groups.into_iter();
    let params = ModelParameters {
        theta_x: g.next().unwrap(),
        theta_w: g.next().unwrap(),
        beta_x: g.next().unwrap(),
        beta_w: g.next().unwrap(),
        alpha: g.next().unwrap(),
        step: header.step,
    };
    let pool_w = pools.pop().unwrap();
    let pool_x = pools.pop().unwrap();
    Ok(Checkpoint {
        setup,
        state: TrainState { params, pool_x, pool_w },
    })
}

/// Writes `ckpt_{step}.bin` and its sidecar into `dir`; returns the binary's path.
pub fn save(dir: &Path, ckpt: &Checkpoint) -> Result<PathBuf> {
    let step = ckpt.state.params.step;
    let name = checkpoint_name(step);
    let bytes = encode(ckpt);
    let path = dir.join(&name);
    write_atomic(&path, &bytes)?;
    let sidecar = Sidecar {
        step,
        file: name,
        sha256: hex(&Sha256::digest(&bytes)),
        noise_policy: NOISE_POLICY.into(),
        setup: ckpt.setup.clone(),
    };
    let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    write_atomic(&path.with_extension("json"), &json)?;
    Ok(path)
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// The checkpoint with the highest step in `dir` not beyond `max_step`.
pub fn latest(dir: &Path, max_step: u64) -> Result<Option<(u64, PathBuf)>> {
    let rd = match fs::read_dir(dir) {
        Ok(rd) => rd,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(step) = name
            .to_str()
            .and_then(|n| n.strip_prefix("ckpt_"))
            .and_then(|n| n.strip_suffix(".bin"))
            .and_then(|n| n.parse::<u64>().ok())
        else {
            continue;
        };
        if step <= max_step && best.as_ref().is_none_or(|(b, _)| step > *b) {
            best = Some((step, entry.path()));
        }
    }
    Ok(best)
}

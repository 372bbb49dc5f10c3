//! Versioned binary checkpoint container.
//!
//! Layout: magic "LMQC", format version (u32 LE), header length (u32 LE), a
//! JSON header describing mode, step, objective chain and per-network
//! architecture, then each network's parameter and optimizer arrays as
//! little-endian f64, and finally a CRC-32 over everything before it.
//! Round-trips are bit-exact.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lexi_morl_core::qfunc::{CnnQ, MlpQ, ParamNet};
use lexi_morl_core::select::ObjectiveChain;
use lexi_morl_core::train::{ArchDescriptor, CheckpointView, MorlAgents, SorlAgent, TrainMode};
use serde::{Deserialize, Serialize};

const MAGIC: &[u8; 4] = b"LMQC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    mode: TrainMode,
    step: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    chain: Option<ObjectiveChain>,
    nets: Vec<NetHeader>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetHeader {
    name: String,
    arch: ArchDescriptor,
    param_len: u64,
    opt_len: u64,
}

#[derive(Debug, Clone)]
pub struct OwnedNet {
    pub name: String,
    pub arch: ArchDescriptor,
    pub params: Vec<f64>,
    pub opt_sq: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub mode: TrainMode,
    pub step: u64,
    pub chain: Option<ObjectiveChain>,
    pub nets: Vec<OwnedNet>,
}

pub fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

pub fn to_bytes(view: &CheckpointView<'_>, chain: Option<&ObjectiveChain>) -> Result<Vec<u8>> {
    let header = Header {
        mode: view.mode,
        step: view.step as u64,
        chain: chain.cloned(),
        nets: view
            .nets
            .iter()
            .map(|n| NetHeader {
                name: n.name.to_string(),
                arch: n.arch.clone(),
                param_len: n.params.len() as u64,
                opt_len: n.opt_sq.len() as u64,
            })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(header_json.len() + 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for n in &view.nets {
        for v in n.params {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in n.opt_sq {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn write(path: &Path, view: &CheckpointView<'_>, chain: Option<&ObjectiveChain>) -> Result<()> {
    let bytes = to_bytes(view, chain)?;
    fs::write(path, bytes).with_context(|| format!("cannot write checkpoint {}", path.display()))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 16 {
        bail!("checkpoint truncated: {} bytes", bytes.len());
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32(body);
    if stored != computed {
        bail!("checkpoint checksum mismatch: stored {stored:08x}, computed {computed:08x}");
    }
    if &body[0..4] != MAGIC {
        bail!("not a checkpoint file (bad magic)");
    }
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != VERSION {
        bail!("unsupported checkpoint version {version}");
    }
    let header_len = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let header_end = 12 + header_len;
    if body.len() < header_end {
        bail!("checkpoint header truncated");
    }
    let header: Header =
        serde_json::from_slice(&body[12..header_end]).context("checkpoint header")?;

    let mut cursor = header_end;
    let mut nets = Vec::with_capacity(header.nets.len());
    for nh in &header.nets {
        let read_vec = |cursor: &mut usize, len: u64| -> Result<Vec<f64>> {
            let n = len as usize;
            let need = n * 8;
            if body.len() < *cursor + need {
                bail!("checkpoint payload truncated in {}", nh.name);
            }
            let mut v = Vec::with_capacity(n);
            for i in 0..n {
                let at = *cursor + i * 8;
                v.push(f64::from_le_bytes(body[at..at + 8].try_into().unwrap()));
            }
            *cursor += need;
            Ok(v)
        };
        let params = read_vec(&mut cursor, nh.param_len)?;
        let opt_sq = read_vec(&mut cursor, nh.opt_len)?;
        nets.push(OwnedNet { name: nh.name.clone(), arch: nh.arch.clone(), params, opt_sq });
    }
    if cursor != body.len() {
        bail!("checkpoint has {} trailing bytes", body.len() - cursor);
    }
    Ok(Checkpoint { mode: header.mode, step: header.step, chain: header.chain, nets })
}

pub fn read(path: &Path) -> Result<Checkpoint> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    from_bytes(&bytes).with_context(|| format!("checkpoint {}", path.display()))
}

impl Checkpoint {
    fn build_net(arch: &ArchDescriptor, params: &[f64]) -> Result<NetKind> {
        Ok(match arch {
            ArchDescriptor::Cnn { grid_h, grid_w, extra_inputs } => {
                let mut net = CnnQ::new(*grid_h, *grid_w, *extra_inputs, 0)?;
                if net.num_params() != params.len() {
                    bail!(
                        "architecture expects {} parameters, checkpoint has {}",
                        net.num_params(),
                        params.len()
                    );
                }
                net.params_mut().copy_from_slice(params);
                NetKind::Cnn(net)
            }
            ArchDescriptor::Mlp { input_len } => {
                let mut net = MlpQ::new(*input_len, 0)?;
                if net.num_params() != params.len() {
                    bail!(
                        "architecture expects {} parameters, checkpoint has {}",
                        net.num_params(),
                        params.len()
                    );
                }
                net.params_mut().copy_from_slice(params);
                NetKind::Mlp(net)
            }
        })
    }

    fn net(&self, name: &str) -> Result<&OwnedNet> {
        self.nets
            .iter()
            .find(|n| n.name == name)
            .with_context(|| format!("checkpoint has no '{name}' network"))
    }

    /// Rebuild the evaluation policy stored in this checkpoint.
    pub fn into_policy(&self) -> Result<lexi_morl_core::eval::Policy> {
        match self.mode {
            TrainMode::Morl => {
                let safety_net = self.net("safety")?;
                let speed_net = self.net("speed")?;
                let NetKind::Cnn(safety) = Self::build_net(&safety_net.arch, &safety_net.params)?
                else {
                    bail!("safety network must be convolutional");
                };
                let NetKind::Mlp(speed) = Self::build_net(&speed_net.arch, &speed_net.params)?
                else {
                    bail!("speed network must be an MLP");
                };
                let chain = self
                    .chain
                    .clone()
                    .context("checkpoint carries no objective chain")?;
                Ok(lexi_morl_core::eval::Policy::Morl(MorlAgents { safety, speed, chain }))
            }
            TrainMode::Sorl => {
                let net = self.net("sorl")?;
                let NetKind::Cnn(cnn) = Self::build_net(&net.arch, &net.params)? else {
                    bail!("baseline network must be convolutional");
                };
                Ok(lexi_morl_core::eval::Policy::Sorl(SorlAgent { net: cnn }))
            }
        }
    }
}

enum NetKind {
    Cnn(CnnQ),
    Mlp(MlpQ),
}

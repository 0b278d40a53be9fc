//! Versioned binary policy artifacts.
//!
//! `solve` stores one solved sensing policy per sweep point; `run` loads
//! the file and matches each point by sweep value and model hash, so a
//! policy can never silently drive a model it was not solved for.
//!
//! Layout (little endian): magic `CGVDPOL\0`, format version, horizon,
//! channel count, grid resolution, per-channel state counts, then one entry
//! per sweep point: sweep flag/value, 32-byte model hash, the value table
//! (f64) and the policy table (one byte per decision).

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use cogvid_core::rd::{BetaGrid, RdParams};
use cogvid_core::sensing::ChannelEnv;
use cogvid_core::solver::{
    solution_from_parts, BeliefGrid, PolicySolution, SenseDecision, SolverError,
};

const MAGIC: &[u8; 8] = b"CGVDPOL\0";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot access policy artifact {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("not a policy artifact (bad magic)")]
    BadMagic,
    #[error("unsupported policy artifact version {found} (expected {VERSION})")]
    Version { found: u32 },
    #[error("corrupt policy artifact: {0}")]
    Corrupt(String),
    #[error("policy artifact solved for a different model (sweep value {sweep_value:?})")]
    HashMismatch { sweep_value: Option<f64> },
    #[error("policy artifact has no entry for sweep value {value:?}")]
    MissingEntry { value: Option<f64> },
    #[error("policy horizon {policy} does not match configured horizon {config}")]
    HorizonMismatch { policy: usize, config: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One solved sweep point.
#[derive(Debug, Clone)]
pub struct ArtifactEntry {
    pub sweep_value: Option<f64>,
    pub model_hash: [u8; 32],
    pub solution: PolicySolution,
}

/// The solve product for a whole experiment.
#[derive(Debug, Clone)]
pub struct PolicyArtifact {
    pub horizon: usize,
    pub resolution: usize,
    pub entries: Vec<ArtifactEntry>,
}

impl PolicyArtifact {
    /// Entry matching a sweep value bit-for-bit.
    pub fn entry_for(&self, sweep_value: Option<f64>) -> Option<&ArtifactEntry> {
        self.entries
            .iter()
            .find(|e| match (e.sweep_value, sweep_value) {
                (None, None) => true,
                (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
                _ => false,
            })
    }
}

/// Canonical hash of everything the solver consumed: channel models,
/// sensor operating points, estimation noise, rate-distortion constants,
/// the rate grid, penalty, horizon, and grid resolution.
pub fn model_hash(
    envs: &[ChannelEnv],
    rd: &RdParams,
    beta_grid: &BetaGrid,
    penalty: f64,
    horizon: usize,
    resolution: usize,
) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"cogvid-model-v1");
    h.update((horizon as u64).to_le_bytes());
    h.update((resolution as u64).to_le_bytes());
    h.update(penalty.to_le_bytes());
    for v in [rd.target_rate, rd.ds0, rd.ds1, rd.eta, rd.a, rd.b, rd.efd] {
        h.update(v.to_le_bytes());
    }
    h.update((beta_grid.values().len() as u64).to_le_bytes());
    for &v in beta_grid.values() {
        h.update(v.to_le_bytes());
    }
    h.update((envs.len() as u64).to_le_bytes());
    for env in envs {
        h.update((env.model.state_count() as u64).to_le_bytes());
        for &g in &env.model.gains {
            h.update(g.to_le_bytes());
        }
        for &p in &env.model.loss {
            h.update(p.to_le_bytes());
        }
        for &a in env.model.transition.entries() {
            h.update(a.to_le_bytes());
        }
        h.update(env.sensor.epsilon.to_le_bytes());
        h.update(env.sensor.delta.to_le_bytes());
        h.update(env.kernel.sigma().to_le_bytes());
    }
    h.finalize().into()
}

pub fn save_policy(path: impl AsRef<Path>, artifact: &PolicyArtifact) -> Result<(), ArtifactError> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| ArtifactError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    let mut buf: Vec<u8> = Vec::new();
    encode(artifact, &mut buf);
    std::fs::write(path, buf).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<PolicyArtifact, ArtifactError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

fn encode(artifact: &PolicyArtifact, out: &mut Vec<u8>) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(artifact.horizon as u32).to_le_bytes());
    let n_channels = artifact
        .entries
        .first()
        .map(|e| e.solution.n_channels)
        .unwrap_or(0);
    out.extend_from_slice(&(n_channels as u32).to_le_bytes());
    out.extend_from_slice(&(artifact.resolution as u32).to_le_bytes());
    if let Some(first) = artifact.entries.first() {
        for g in &first.solution.grids {
            out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(artifact.entries.len() as u32).to_le_bytes());
    for e in &artifact.entries {
        out.push(e.sweep_value.is_some() as u8);
        out.extend_from_slice(&e.sweep_value.unwrap_or(0.0).to_le_bytes());
        out.extend_from_slice(&e.model_hash);
        for &v in e.solution.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for d in e.solution.policy.data() {
            out.push(d.code());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ArtifactError> {
        if self.pos + n > self.bytes.len() {
            return Err(ArtifactError::Corrupt("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ArtifactError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ArtifactError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8, ArtifactError> {
        Ok(self.take(1)?[0])
    }
}

fn decode(bytes: &[u8]) -> Result<PolicyArtifact, ArtifactError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(ArtifactError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ArtifactError::Version { found: version });
    }
    let horizon = r.u32()? as usize;
    let n_channels = r.u32()? as usize;
    let resolution = r.u32()? as usize;
    if horizon == 0 || n_channels == 0 || n_channels > 16 {
        return Err(ArtifactError::Corrupt("implausible header".into()));
    }
    let mut dims = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        dims.push(r.u32()? as usize);
    }
    let n_entries = r.u32()? as usize;

    let grids_template: Vec<BeliefGrid> = dims
        .iter()
        .map(|&d| BeliefGrid::new(resolution, d))
        .collect::<Result<_, _>>()?;
    let joint: usize = grids_template.iter().map(|g| g.len()).product();

    let mut entries = Vec::with_capacity(n_entries);
    for _ in 0..n_entries {
        let has_sweep = r.u8()? != 0;
        let raw = r.f64()?;
        let sweep_value = has_sweep.then_some(raw);
        let mut model_hash = [0u8; 32];
        model_hash.copy_from_slice(r.take(32)?);
        let mut value_data = Vec::with_capacity(horizon * joint);
        for _ in 0..horizon * joint {
            value_data.push(r.f64()?);
        }
        let mut policy_data = Vec::with_capacity(horizon * joint);
        for _ in 0..horizon * joint {
            policy_data.push(SenseDecision::from_code(r.u8()?));
        }
        let solution = solution_from_parts(
            n_channels,
            horizon,
            grids_template.clone(),
            value_data,
            policy_data,
        )?;
        entries.push(ArtifactEntry {
            sweep_value,
            model_hash,
            solution,
        });
    }
    if r.pos != bytes.len() {
        return Err(ArtifactError::Corrupt("trailing bytes".into()));
    }
    Ok(PolicyArtifact {
        horizon,
        resolution,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogvid_core::channel::{build_transition, ChannelModel};
    use cogvid_core::sensing::SensorDesign;
    use cogvid_core::solver::{solve_finite_horizon, SolverParams};

    fn tiny_solution() -> (Vec<ChannelEnv>, PolicySolution) {
        let a = build_transition(2, 0.9, 0.1, 0.5).unwrap();
        let model = ChannelModel::new(vec![1.0], vec![0.1], a, 1.0e6, 0.1).unwrap();
        let env = ChannelEnv::new(model, SensorDesign::new(0.4, 0.064).unwrap(), 0.1).unwrap();
        let envs = vec![env];
        let sol = solve_finite_horizon(
            &envs,
            &RdParams::default(),
            &BetaGrid::percent(),
            &SolverParams {
                horizon: 3,
                resolution: 5,
                penalty: 500.0,
                ..Default::default()
            },
        )
        .unwrap();
        (envs, sol)
    }

    #[test]
    fn save_load_round_trip() {
        let (envs, sol) = tiny_solution();
        let hash = model_hash(
            &envs,
            &RdParams::default(),
            &BetaGrid::percent(),
            500.0,
            3,
            5,
        );
        let artifact = PolicyArtifact {
            horizon: 3,
            resolution: 5,
            entries: vec![ArtifactEntry {
                sweep_value: Some(0.25),
                model_hash: hash,
                solution: sol.clone(),
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.bin");
        save_policy(&path, &artifact).unwrap();
        let back = load_policy(&path).unwrap();
        assert_eq!(back.horizon, 3);
        let entry = back.entry_for(Some(0.25)).unwrap();
        assert_eq!(entry.model_hash, hash);
        assert_eq!(entry.solution, sol);
        assert!(back.entry_for(Some(0.26)).is_none());
        assert!(back.entry_for(None).is_none());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"not a policy").unwrap();
        assert!(matches!(load_policy(&path), Err(ArtifactError::BadMagic)));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let (envs, sol) = tiny_solution();
        let hash = model_hash(
            &envs,
            &RdParams::default(),
            &BetaGrid::percent(),
            500.0,
            3,
            5,
        );
        let artifact = PolicyArtifact {
            horizon: 3,
            resolution: 5,
            entries: vec![ArtifactEntry {
                sweep_value: None,
                model_hash: hash,
                solution: sol,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.bin");
        save_policy(&path, &artifact).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 7);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_policy(&path), Err(ArtifactError::Corrupt(_))));
    }

    #[test]
    fn hash_is_sensitive_to_the_model() {
        let (envs, _) = tiny_solution();
        let rd = RdParams::default();
        let grid = BetaGrid::percent();
        let h1 = model_hash(&envs, &rd, &grid, 500.0, 3, 5);
        let h2 = model_hash(&envs, &rd, &grid, 501.0, 3, 5);
        let mut rd2 = rd.clone();
        rd2.eta = 1.5;
        let h3 = model_hash(&envs, &rd2, &grid, 500.0, 3, 5);
        assert_ne!(h1, h2);
        assert_ne!(h1, h3);
        assert_eq!(h1, model_hash(&envs, &rd, &grid, 500.0, 3, 5));
    }
}

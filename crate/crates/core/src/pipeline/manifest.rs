//! Sweepouts on disk: a TOML manifest next to one `PGRID1` file per slice.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{MapSlice, TargetManifold};
use crate::periodic::PGrid;
use crate::sweepout::{EndpointKind, Sweepout};

pub const MANIFEST_FILE: &str = "manifest.toml";
const FORMAT: &str = "minmax-tori sweepout 1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub target: TargetManifold,
    pub endpoints: [EndpointKind; 2],
    pub slices: Vec<SliceEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceEntry {
    pub time: f64,
    /// `[Re τ, Im τ]`
    pub mark: [f64; 2],
    pub file: String,
}

/// Writes the manifest and `slice_NNNN.pgrid` files into `dir`.
pub fn save_sweepout(s: &Sweepout, target: &TargetManifold, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut slices = Vec::with_capacity(s.len());
    for (k, (u, &t)) in s.slices.iter().zip(&s.times).enumerate() {
        let file = format!("slice_{k:04}.pgrid");
        u.to_pgrid().write(&dir.join(&file))?;
        let tau = u.tau();
        slices.push(SliceEntry { time: t, mark: [tau.re, tau.im], file });
    }
    let manifest = Manifest { format: FORMAT.into(), target: target.clone(), endpoints: s.endpoints, slices };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

pub fn load_sweepout(dir: &Path) -> Result<(Sweepout, TargetManifold)> {
    let path = dir.join(MANIFEST_FILE);
    let bad = |message: String| Error::Format { path: path.clone(), message };
    let text = fs::read_to_string(&path)?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if manifest.format != FORMAT {
        return Err(bad(format!("unsupported format `{}`", manifest.format)));
    }
    manifest.target.validate()?;
    let mut slices = Vec::with_capacity(manifest.slices.len());
    for entry in &manifest.slices {
        let grid = PGrid::read(&dir.join(&entry.file))?;
        if [grid.tau.re, grid.tau.im] != entry.mark {
            return Err(bad(format!("mark of {} disagrees with the manifest", entry.file)));
        }
        slices.push(MapSlice::from_pgrid(&grid)?);
    }
    let mut s = Sweepout::new(slices, manifest.endpoints)?;
    s.times = manifest.slices.iter().map(|e| e.time).collect();
    s.validate(&manifest.target)?;
    Ok((s, manifest.target))
}

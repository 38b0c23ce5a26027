use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vdmkit::npy::{self, Precision};
use vdmkit::{FeatureMatrix, Manifest};

use crate::UsageError;

/// On-disk float width for written arrays.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionArg {
    F32,
    #[default]
    F64,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        }
    }
}

/// Unwraps an argument that may come from either the command line or the
/// config file.
pub fn required<'a, T>(v: &'a Option<T>, flag: &str) -> anyhow::Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| UsageError(format!("missing required argument --{flag}")).into())
}

/// Reads a feature set: a `.json` path is a manifest whose relative file
/// paths resolve against its own directory, anything else an NPY array.
pub fn load_features(path: &Path) -> anyhow::Result<FeatureMatrix> {
    let is_manifest = path.extension().and_then(|e| e.to_str()) == Some("json");
    if is_manifest {
        let manifest = Manifest::load(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        manifest
            .load_features(base)
            .with_context(|| format!("loading features listed in {}", path.display()))
    } else {
        npy::read_array(path).with_context(|| format!("reading {}", path.display()))
    }
}

pub fn write_features(m: &FeatureMatrix, path: &Path, precision: PrecisionArg) -> anyhow::Result<()> {
    npy::write_array(m, path, precision.into())
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

//! Versioned binary container for fitted reducers.
//!
//! Layout (little-endian):
//!
//! ```text
//! "VDMK" | version u32 | tag u32 | ndims u32 | dims u64 × ndims
//!        | nvalues u64 | values f64 × nvalues
//! ```
//!
//! Non-numeric metadata (class labels, architecture, hyperparameters) lives
//! in a JSON sidecar next to the binary file, named `<file>.json`.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ae::{AeArchitecture, AeModel, AeTrainConfig, Dense, TrainStats};
use super::lda::{lda_transform, LdaModel};
use super::pca::{pca_transform, PcaModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const MAGIC: &[u8; 4] = b"VDMK";
pub const VERSION: u32 = 1;

const TAG_PCA: u32 = 1;
const TAG_LDA: u32 = 2;
const TAG_AE: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum ReducerModel {
    Pca(PcaModel),
    Lda(LdaModel),
    Ae(AeModel),
}

impl ReducerModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ReducerModel::Pca(_) => "pca",
            ReducerModel::Lda(_) => "lda",
            ReducerModel::Ae(_) => "ae",
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            ReducerModel::Pca(m) => m.in_dim(),
            ReducerModel::Lda(m) => m.in_dim(),
            ReducerModel::Ae(m) => m.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            ReducerModel::Pca(m) => m.out_dim(),
            ReducerModel::Lda(m) => m.out_dim(),
            ReducerModel::Ae(m) => m.bottleneck(),
        }
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            ReducerModel::Pca(m) => pca_transform(m, x),
            ReducerModel::Lda(m) => lda_transform(m, x),
            ReducerModel::Ae(m) => super::ae::ae_encode(m, x),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    kind: String,
    version: u32,
    #[serde(default)]
    meta: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct AeMeta {
    architecture: AeArchitecture,
    config: AeTrainConfig,
    seed: u64,
    train_stats: Option<TrainStats>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn row_major(m: &DMatrix<f64>, out: &mut Vec<f64>) {
    for r in m.row_iter() {
        out.extend(r.iter());
    }
}

pub fn save_model(model: &ReducerModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut values = Vec::new();
    let (tag, dims, meta) = match model {
        ReducerModel::Pca(m) => {
            values.extend(m.mean.iter());
            row_major(&m.components, &mut values);
            values.extend(m.explained_variance.iter());
            values.extend(m.explained_variance_ratio.iter());
            (TAG_PCA, vec![m.in_dim(), m.out_dim()], json!({}))
        }
        ReducerModel::Lda(m) => {
            values.extend(m.mean.iter());
            row_major(&m.scalings, &mut values);
            values.extend(m.eigenvalues.iter());
            (
                TAG_LDA,
                vec![m.in_dim(), m.out_dim()],
                json!({ "classes": m.classes }),
            )
        }
        ReducerModel::Ae(m) => {
            for l in &m.layers {
                row_major(&l.weight, &mut values);
                values.extend(l.bias.iter());
            }
            let meta = AeMeta {
                architecture: m.architecture.clone(),
                config: m.config,
                seed: m.seed,
                train_stats: m.train_stats.clone(),
            };
            (
                TAG_AE,
                vec![m.in_dim(), m.bottleneck(), m.layers.len()],
                serde_json::to_value(meta)?,
            )
        }
    };
    let mut bytes = Vec::with_capacity(32 + dims.len() * 8 + values.len() * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&tag.to_le_bytes());
    bytes.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in &dims {
        bytes.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    bytes.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in &values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let io = |source, p: &Path| Error::IoAt {
        path: p.to_path_buf(),
        source,
    };
    std::fs::write(path, bytes).map_err(|e| io(e, path))?;
    let side = Sidecar {
        kind: model.kind().into(),
        version: VERSION,
        meta,
    };
    let sp = sidecar_path(path);
    std::fs::write(&sp, serde_json::to_string_pretty(&side)?).map_err(|e| io(e, &sp))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("model file is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

struct Values {
    data: Vec<f64>,
    pos: usize,
}

impl Values {
    fn vector(&mut self, n: usize) -> Result<DVector<f64>> {
        Ok(DVector::from_row_slice(self.slice(n)?))
    }

    fn matrix(&mut self, r: usize, c: usize) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(r, c, self.slice(r * c)?))
    }

    fn slice(&mut self, n: usize) -> Result<&[f64]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("model payload shorter than its dimensions".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Format("model payload longer than its dimensions".into()));
        }
        Ok(())
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ReducerModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::IoAt {
        path: path.to_path_buf(),
        source,
    })?;
    let sp = sidecar_path(path);
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(&sp).map_err(|source| {
        Error::IoAt {
            path: sp.clone(),
            source,
        }
    })?)?;

    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a VDMK model file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let tag = r.u32()?;
    let ndims = r.u32()? as usize;
    if ndims > 16 {
        return Err(Error::Format("implausible dimension count".into()));
    }
    let dims = (0..ndims)
        .map(|_| r.u64().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let nvalues = r.u64()? as usize;
    let raw = r.take(nvalues.checked_mul(8).ok_or_else(|| Error::Format("bad length".into()))?)?;
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after model payload".into()));
    }
    let mut v = Values { data, pos: 0 };
    let expected_kind = match tag {
        TAG_PCA => "pca",
        TAG_LDA => "lda",
        TAG_AE => "ae",
        _ => return Err(Error::Format(format!("unknown model tag {tag}"))),
    };
    if side.kind != expected_kind {
        return Err(Error::Format(format!(
            "sidecar describes a {} model but the file holds {expected_kind}",
            side.kind
        )));
    }
    let need = |n: usize| -> Result<()> {
        if dims.len() != n {
            return Err(Error::Format(format!("expected {n} dims, found {}", dims.len())));
        }
        Ok(())
    };
    let model = match tag {
        TAG_PCA => {
            need(2)?;
            let (d, k) = (dims[0], dims[1]);
            ReducerModel::Pca(PcaModel {
                mean: v.vector(d)?,
                components: v.matrix(k, d)?,
                explained_variance: v.vector(k)?,
                explained_variance_ratio: v.vector(k)?,
            })
        }
        TAG_LDA => {
            need(2)?;
            let (d, k) = (dims[0], dims[1]);
            let classes: Vec<i64> = serde_json::from_value(side.meta["classes"].clone())?;
            ReducerModel::Lda(LdaModel {
                mean: v.vector(d)?,
                scalings: v.matrix(k, d)?,
                eigenvalues: v.vector(k)?,
                classes,
            })
        }
        _ => {
            need(3)?;
            let meta: AeMeta = serde_json::from_value(side.meta)?;
            let shapes = meta.architecture.layer_shapes();
            if meta.architecture.in_dim != dims[0] || shapes.len() != dims[2] {
                return Err(Error::Format("sidecar architecture does not match model".into()));
            }
            let layers = shapes
                .into_iter()
                .map(|(fan_in, fan_out)| {
                    Ok(Dense {
                        weight: v.matrix(fan_out, fan_in)?,
                        bias: v.vector(fan_out)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ReducerModel::Ae(AeModel {
                architecture: meta.architecture,
                layers,
                train_stats: meta.train_stats,
                config: meta.config,
                seed: meta.seed,
            })
        }
    };
    v.finish()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::LabeledFeatures;
    use crate::reduce::{lda_fit, pca_fit, AePlan};

    fn data() -> FeatureMatrix {
        FeatureMatrix::new(40, 3, (0..120).map(|i| ((i * 37) % 11) as f64 * 0.3).collect()).unwrap()
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let x = data();
        let labels = (0..40).map(|i| (i % 3) as i64).collect();
        let models = [
            ReducerModel::Pca(pca_fit(&x, 2).unwrap()),
            ReducerModel::Lda(lda_fit(&LabeledFeatures::new(x.clone(), labels).unwrap(), 2).unwrap()),
            ReducerModel::Ae(AeModel::init(AeArchitecture::new(12, AePlan::I3d).unwrap(), 4)),
        ];
        for (i, m) in models.iter().enumerate() {
            let p = dir.path().join(format!("m{i}.vdmk"));
            save_model(m, &p).unwrap();
            assert_eq!(&load_model(&p).unwrap(), m);
            let bytes = std::fs::read(&p).unwrap();
            assert_eq!(&bytes[..4], b"VDMK");
        }
    }

    #[test]
    fn rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.vdmk");
        save_model(&ReducerModel::Pca(pca_fit(&data(), 2).unwrap()), &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_model(&p), Err(Error::Format(_))));
        bytes[0] = b'X';
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_model(&p), Err(Error::Format(_))));
    }
}

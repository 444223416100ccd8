//! Receiver checkpoints: a JSON manifest line describing every model,
//! followed by all parameters as little-endian `f32`.
//!
//! Blob order per model: feature-norm mean and scale, then each layer
//! (shared, communication, sensing) as weights (row-major, out × in), bias
//! and, with batch-norm, γ, β, running mean and running variance. Adam
//! moments follow when the manifest records a step count.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer};
use super::model::{AdamState, FeatureNorm, LossWeights, MlpModel};
use super::receiver::{NnReceiver, ReceiverKind};
use crate::waveform::FrameConfig;
use crate::{Error, Result};

pub const CHECKPOINT_SCHEMA: &str = "thz-isac-checkpoint/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Shared,
    Comm,
    Sense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchNormManifest {
    pub momentum: f32,
    pub eps: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerManifest {
    pub branch: Branch,
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub batchnorm: Option<BatchNormManifest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub input: usize,
    pub weights: LossWeights,
    pub layers: Vec<LayerManifest>,
    pub adam_step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub kind: ReceiverKind,
    pub frame: FrameConfig,
    pub r_max: f64,
    pub v_max: f64,
    pub h_scale: f64,
    pub level1: Option<ModelManifest>,
    pub groups: Vec<ModelManifest>,
}

fn model_manifest(m: &MlpModel<f32>) -> ModelManifest {
    let tagged = m
        .shared
        .iter()
        .map(|l| (Branch::Shared, l))
        .chain(m.comm.iter().map(|l| (Branch::Comm, l)))
        .chain(m.sense.iter().map(|l| (Branch::Sense, l)));
    ModelManifest {
        input: m.input_width(),
        weights: m.weights,
        layers: tagged
            .map(|(branch, l)| LayerManifest {
                branch,
                inputs: l.inputs(),
                outputs: l.outputs(),
                activation: l.activation,
                batchnorm: l.batchnorm.as_ref().map(|bn| BatchNormManifest {
                    momentum: bn.momentum,
                    eps: bn.eps,
                }),
            })
            .collect(),
        adam_step: m.adam.as_ref().map(|a| a.step),
    }
}

fn push_model(out: &mut Vec<f32>, m: &MlpModel<f32>) {
    out.extend(m.norm.mean.iter());
    out.extend(m.norm.scale.iter());
    for l in m.layers() {
        out.extend(l.weights.iter());
        out.extend(l.bias.iter());
        if let Some(bn) = &l.batchnorm {
            for t in [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var] {
                out.extend(t.iter());
            }
        }
    }
    if let Some(a) = &m.adam {
        for (m, v) in a.m.iter().zip(&a.v) {
            out.extend(m);
            out.extend(v);
        }
    }
}

struct Cursor<'a> {
    values: &'a [f32],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Option<&[f32]> {
        let s = self.values.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn array(&mut self, n: usize) -> Option<Array1<f32>> {
        self.take(n).map(|s| Array1::from(s.to_vec()))
    }
}

fn read_model(man: &ModelManifest, cur: &mut Cursor) -> Option<MlpModel<f32>> {
    let norm = FeatureNorm {
        mean: cur.array(man.input)?,
        scale: cur.array(man.input)?,
    };
    let (mut shared, mut comm, mut sense) = (Vec::new(), Vec::new(), Vec::new());
    for lm in &man.layers {
        let mut l = DenseLayer::<f32>::zeros(lm.inputs, lm.outputs, lm.activation, lm.batchnorm.is_some());
        l.weights = Array2::from_shape_vec((lm.outputs, lm.inputs), cur.take(lm.outputs * lm.inputs)?.to_vec()).ok()?;
        l.bias = cur.array(lm.outputs)?;
        if let (Some(bn), Some(bm)) = (&mut l.batchnorm, &lm.batchnorm) {
            bn.gamma = cur.array(lm.outputs)?;
            bn.beta = cur.array(lm.outputs)?;
            bn.running_mean = cur.array(lm.outputs)?;
            bn.running_var = cur.array(lm.outputs)?;
            bn.momentum = bm.momentum;
            bn.eps = bm.eps;
        }
        match lm.branch {
            Branch::Shared => shared.push(l),
            Branch::Comm => comm.push(l),
            Branch::Sense => sense.push(l),
        }
    }
    let mut model = MlpModel {
        norm,
        shared,
        comm,
        sense,
        weights: man.weights,
        adam: None,
    };
    if let Some(step) = man.adam_step {
        let sizes: Vec<usize> = model.layers_mut().flat_map(|l| l.params_mut()).map(|p| p.len()).collect();
        let (mut m, mut v) = (Vec::new(), Vec::new());
        for n in sizes {
            m.push(cur.take(n)?.to_vec());
            v.push(cur.take(n)?.to_vec());
        }
        model.adam = Some(AdamState { step, m, v });
    }
    Some(model)
}

impl NnReceiver {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            schema: CHECKPOINT_SCHEMA.into(),
            kind: self.kind,
            frame: self.frame.clone(),
            r_max: self.r_max,
            v_max: self.v_max,
            h_scale: self.h_scale,
            level1: self.level1.as_ref().map(model_manifest),
            groups: self.groups.iter().map(model_manifest).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let manifest = serde_json::to_string(&self.manifest()).map_err(|e| Error::Format {
            path: path.into(),
            msg: e.to_string(),
        })?;
        let mut values = Vec::new();
        for m in self.level1.iter().chain(&self.groups) {
            push_model(&mut values, m);
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{manifest}").map_err(|e| Error::io(path, e))?;
        for v in values {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let fmt = |msg: String| Error::Format { path: path.into(), msg };
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        let man: Manifest = serde_json::from_str(line.trim_end()).map_err(|e| fmt(e.to_string()))?;
        if man.schema != CHECKPOINT_SCHEMA {
            return Err(fmt(format!("unknown schema {:?}", man.schema)));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() % 4 != 0 {
            return Err(fmt("parameter blob is not a whole number of f32 values".into()));
        }
        let values: Vec<f32> = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        let mut cur = Cursor { values: &values, pos: 0 };
        let short = || fmt("parameter blob shorter than the manifest".into());
        let level1 = match &man.level1 {
            Some(m) => Some(read_model(m, &mut cur).ok_or_else(short)?),
            None => None,
        };
        let groups = man
            .groups
            .iter()
            .map(|m| read_model(m, &mut cur).ok_or_else(short))
            .collect::<Result<Vec<_>>>()?;
        if cur.pos != values.len() {
            return Err(fmt(format!("{} trailing values after the last model", values.len() - cur.pos)));
        }
        let rx = NnReceiver {
            kind: man.kind,
            frame: man.frame,
            r_max: man.r_max,
            v_max: man.v_max,
            h_scale: man.h_scale,
            level1,
            groups,
        };
        rx.validate().map_err(|e| fmt(e.to_string()))?;
        Ok(rx)
    }
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use figuresdf_core::assembly::Skeleton;
use figuresdf_core::Vec3;

use crate::metrics::{pck, rmse_mm, PCK_THRESHOLD_MM};
use crate::model::{MlpModel, DEFAULT_DROPOUT};
use crate::normalize::{normalize_pose, NormStats, PoseSample};
use crate::projection::{attach_depths, Joints3};
use crate::train::{train, TrainConfig};
use crate::{PoseLiftError, INPUT_WIDTH, NUM_JOINTS, PELVIS};

const MAGIC: &[u8; 4] = b"PLFT";
const VERSION: u32 = 2;
const TENSORS: usize = 36;

/// A trained network with the input and target statistics it was trained
/// on. The network predicts standardized canonical depths.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseLifter {
    pub model: MlpModel,
    pub stats: NormStats,
    pub targets: NormStats<NUM_JOINTS>,
}

fn samples_of(skeletons: &[Skeleton]) -> Result<Vec<PoseSample>, PoseLiftError> {
    skeletons.iter().map(|s| PoseSample::from_joints3d(s.joints())).collect()
}

impl PoseLifter {
    /// Fits statistics on the training skeletons' projections and trains a
    /// fresh network of the given hidden width.
    pub fn fit(skeletons: &[Skeleton], hidden: usize, cfg: &TrainConfig) -> Result<(PoseLifter, Vec<f64>), PoseLiftError> {
        let samples = samples_of(skeletons)?;
        let raw: Vec<[f64; INPUT_WIDTH]> = samples.iter().map(|s| s.centered_input()).collect();
        let (stats, constant) = NormStats::fit(&raw)?;
        if !constant.is_empty() {
            log::info!("constant input dimensions {constant:?} keep unit scale");
        }
        let inputs = Array2::from_shape_fn((raw.len(), INPUT_WIDTH), |(i, d)| (raw[i][d] - stats.mean[d]) / stats.std[d]);
        let depths: Vec<[f64; NUM_JOINTS]> = samples.iter().map(|s| s.canonical_depths()).collect();
        let (targets, _) = NormStats::fit(&depths)?;
        let y = Array2::from_shape_fn((depths.len(), NUM_JOINTS), |(i, j)| targets.apply(&depths[i])[j]);
        let mut model = MlpModel::new(INPUT_WIDTH, hidden, NUM_JOINTS, cfg.dropout, cfg.seed)?;
        let log = train(&mut model, &inputs, &y, cfg)?;
        Ok((PoseLifter { model, stats, targets }, log))
    }

    /// Pelvis-relative depths in the units of each sample; the pelvis is 0.
    pub fn predict(&self, samples: &[PoseSample]) -> Result<Vec<[f64; NUM_JOINTS]>, PoseLiftError> {
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        let x = Array2::from_shape_fn((samples.len(), INPUT_WIDTH), |(i, d)| normalize_pose(&samples[i], &self.stats)[d]);
        let out = self.model.predict(&x)?;
        Ok(samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let canonical = self.targets.invert(&std::array::from_fn(|j| out[[i, j]]));
                let mut d: [f64; NUM_JOINTS] = canonical.map(|v| s.from_canonical(v));
                d[PELVIS] = 0.0;
                d
            })
            .collect())
    }

    /// 2D joints with predicted depths.
    pub fn lift(&self, sample: &PoseSample) -> Result<Joints3, PoseLiftError> {
        let depths = self.predict(std::slice::from_ref(sample))?.remove(0);
        Ok(attach_depths(&sample.joints2d, &depths))
    }

    /// Magic `PLFT`, version, then every tensor as rank, dims and values,
    /// all little endian with values in binary32. The network tensors come
    /// first, then input mean and std, then target mean and std.
    pub fn write(&self, mut w: impl Write) -> Result<(), PoseLiftError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let mut tensors = self.model.tensors();
        tensors.push((vec![INPUT_WIDTH], self.stats.mean.to_vec()));
        tensors.push((vec![INPUT_WIDTH], self.stats.std.to_vec()));
        tensors.push((vec![NUM_JOINTS], self.targets.mean.to_vec()));
        tensors.push((vec![NUM_JOINTS], self.targets.std.to_vec()));
        for (shape, data) in tensors {
            w.write_all(&(shape.len() as u32).to_le_bytes())?;
            for d in shape {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            for v in data {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<PoseLifter, PoseLiftError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(PoseLiftError::Format("missing PLFT magic".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(PoseLiftError::Format(format!("unsupported version {version}")));
        }
        let mut tensors = Vec::new();
        while cur.pos < bytes.len() {
            let rank = cur.u32()? as usize;
            if rank == 0 || rank > 2 {
                return Err(PoseLiftError::Format(format!("tensor {} has rank {rank}", tensors.len())));
            }
            let shape = (0..rank).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let n = shape.iter().product::<usize>();
            let data = (0..n).map(|_| cur.f32().map(f64::from)).collect::<Result<Vec<_>, _>>()?;
            tensors.push((shape, data));
        }
        if tensors.len() != TENSORS {
            return Err(PoseLiftError::Format(format!("expected {TENSORS} tensors, got {}", tensors.len())));
        }
        let stats_part = tensors.split_off(TENSORS - 4);
        let stats = NormStats { mean: vector(&stats_part[0])?, std: vector(&stats_part[1])? };
        let targets = NormStats { mean: vector(&stats_part[2])?, std: vector(&stats_part[3])? };
        if !stats.std.iter().chain(&targets.std).all(|&s| s > 0.0) {
            return Err(PoseLiftError::Format("standard deviations must be positive".into()));
        }
        let model = MlpModel::from_tensors(&tensors, DEFAULT_DROPOUT)?;
        if model.input_width() != INPUT_WIDTH || model.output_width() != NUM_JOINTS {
            return Err(PoseLiftError::Format("network is not 42 -> 21".into()));
        }
        Ok(PoseLifter { model, stats, targets })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PoseLiftError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PoseLifter, PoseLiftError> {
        PoseLifter::read(BufReader::new(File::open(path)?))
    }
}

fn vector<const N: usize>((shape, data): &(Vec<usize>, Vec<f64>)) -> Result<[f64; N], PoseLiftError> {
    if shape.as_slice() != [N] {
        return Err(PoseLiftError::Format(format!("normalization statistics have shape {shape:?}, expected [{N}]")));
    }
    Ok(std::array::from_fn(|d| data[d]))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PoseLiftError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(PoseLiftError::Format("file is truncated".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, PoseLiftError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32, PoseLiftError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Scores of a lifter and of the all-zero depth baseline on held-out
/// skeletons. Errors are measured on pelvis-relative 3D joints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    pub rmse_mm: f64,
    pub pck: f64,
    pub baseline_rmse_mm: f64,
    pub baseline_pck: f64,
}

pub fn evaluate(lifter: &PoseLifter, skeletons: &[Skeleton]) -> Result<EvalReport, PoseLiftError> {
    let samples = samples_of(skeletons)?;
    let pred = lifter.predict(&samples)?;
    let mut truth_d = Vec::new();
    let mut pred_d = Vec::new();
    let mut truth_3 = Vec::new();
    let mut pred_3: Vec<Vec3> = Vec::new();
    let mut zero_3: Vec<Vec3> = Vec::new();
    for (s, p) in samples.iter().zip(&pred) {
        truth_d.extend_from_slice(&s.depths);
        pred_d.extend_from_slice(p);
        truth_3.extend(attach_depths(&s.joints2d, &s.depths));
        pred_3.extend(attach_depths(&s.joints2d, p));
        zero_3.extend(attach_depths(&s.joints2d, &[0.0; NUM_JOINTS]));
    }
    let zeros = vec![0.0; truth_d.len()];
    Ok(EvalReport {
        samples: samples.len(),
        rmse_mm: rmse_mm(&pred_d, &truth_d)?,
        pck: pck(&pred_3, &truth_3, PCK_THRESHOLD_MM)?,
        baseline_rmse_mm: rmse_mm(&zeros, &truth_d)?,
        baseline_pck: pck(&zero_3, &truth_3, PCK_THRESHOLD_MM)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic_poses, RotationRanges};

    fn tiny() -> PoseLifter {
        let skeletons: Vec<Skeleton> =
            generate_synthetic_poses(16, 1, &RotationRanges::default()).unwrap().into_iter().map(|(s, _)| s).collect();
        let cfg = TrainConfig { epochs: 2, batch_size: 8, ..TrainConfig::default() };
        PoseLifter::fit(&skeletons, 8, &cfg).unwrap().0
    }

    #[test]
    fn file_round_trip_is_single_precision() {
        let lifter = tiny();
        let mut buf = Vec::new();
        lifter.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PLFT");
        let back = PoseLifter::read(&buf[..]).unwrap();
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
        for (a, b) in back.stats.mean.iter().zip(&lifter.stats.mean) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn pelvis_target_keeps_unit_scale() {
        let lifter = tiny();
        assert_eq!((lifter.targets.mean[PELVIS], lifter.targets.std[PELVIS]), (0.0, 1.0));
        assert!(lifter.targets.std.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(PoseLifter::read(&b"PLFX\x01\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        tiny().write(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(PoseLifter::read(&buf[..]).is_err());
    }

    #[test]
    fn predictions_pin_pelvis() {
        let lifter = tiny();
        let s = PoseSample::from_joints3d(Skeleton::canonical().joints()).unwrap();
        let lifted = lifter.lift(&s).unwrap();
        assert_eq!(lifted[PELVIS].z, 0.0);
        assert_eq!(lifted[3].x, s.joints2d[3].x);
    }

    #[test]
    fn baseline_of_flat_poses_is_perfect() {
        let lifter = tiny();
        let flat = Skeleton::canonical().transformed(|p| Vec3::new(p.x, p.y, 0.0));
        let r = evaluate(&lifter, &[flat]).unwrap();
        assert_eq!(r.baseline_rmse_mm, 0.0);
        assert_eq!(r.baseline_pck, 100.0);
    }
}

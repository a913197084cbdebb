use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use figuresdf_core::assembly::Skeleton;
use figuresdf_core::Vec3;

use crate::{PoseLiftError, NUM_JOINTS};

#[derive(Serialize, Deserialize)]
struct Record {
    joints3d: Vec<[f64; 3]>,
}

/// One JSON object per line: `{"joints3d": [[x, y, z], ...]}` with the 21
/// joints in skeleton order. Blank lines are skipped.
pub fn read_dataset(reader: impl BufRead) -> Result<Vec<Skeleton>, PoseLiftError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| PoseLiftError::Dataset { line: i + 1, msg };
        let rec: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        if rec.joints3d.len() != NUM_JOINTS {
            return Err(err(format!("expected {NUM_JOINTS} joints, got {}", rec.joints3d.len())));
        }
        let joints: [Vec3; NUM_JOINTS] = std::array::from_fn(|j| Vec3::from(rec.joints3d[j]));
        out.push(Skeleton::from_joints(joints).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn write_dataset(mut w: impl Write, skeletons: &[Skeleton]) -> Result<(), PoseLiftError> {
    for s in skeletons {
        let rec = Record { joints3d: s.joints().iter().map(|p| [p.x, p.y, p.z]).collect() };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Skeleton>, PoseLiftError> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn save_dataset(path: impl AsRef<Path>, skeletons: &[Skeleton]) -> Result<(), PoseLiftError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, skeletons)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = vec![Skeleton::canonical(), Skeleton::canonical().transformed(|p| p * 2.0)];
        let mut buf = Vec::new();
        write_dataset(&mut buf, &s).unwrap();
        assert_eq!(read_dataset(&buf[..]).unwrap(), s);
    }

    #[test]
    fn reports_line() {
        let text = "\n{\"joints3d\": [[0,0,0]]}\n";
        match read_dataset(text.as_bytes()) {
            Err(PoseLiftError::Dataset { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}

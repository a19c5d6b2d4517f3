//! Mask file format.
//!
//! ```text
//! magic         "LTMK"
//! version       u32 = 1
//! n_layers      u32
//! shapes        (rows u32, cols u32) × n_layers
//! task_id       u8 (0 = ctr, 1 = cvr)
//! pruning_round u32
//! payloads      per layer: bit length u64, then ceil(len / 8) bytes,
//!               row-major, least significant bit first, zero padding
//! ```

use std::fs;
use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::masking::mask::{MaskLayer, TaskMask};
use crate::task::Task;

pub const MASK_MAGIC: &[u8; 4] = b"LTMK";
pub const MASK_VERSION: u32 = 1;

pub fn serialize_mask(mask: &TaskMask) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(MASK_MAGIC);
    w.u32(MASK_VERSION);
    w.len_u32(mask.layers().len())?;
    for l in mask.layers() {
        w.len_u32(l.rows())?;
        w.len_u32(l.cols())?;
    }
    w.u8(mask.task.index() as u8);
    w.u32(mask.pruning_round);
    for l in mask.layers() {
        w.u64(l.len() as u64);
        for chunk in l.bits().chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << i));
            w.u8(byte);
        }
    }
    Ok(w.finish())
}

pub fn deserialize_mask(bytes: &[u8]) -> Result<TaskMask> {
    let mut r = Reader::new(bytes, "mask");
    if r.take(4)? != MASK_MAGIC {
        return Err(Error::format("mask: bad magic"));
    }
    let version = r.u32()?;
    if version != MASK_VERSION {
        return Err(Error::format(format!("mask: unsupported version {version}")));
    }
    let n_layers = r.usize32()?;
    if n_layers > r.remaining() / 8 {
        return Err(Error::format("mask: layer count exceeds file size"));
    }
    let shapes = (0..n_layers)
        .map(|_| Ok((r.usize32()?, r.usize32()?)))
        .collect::<Result<Vec<_>>>()?;
    let task = Task::from_index(r.u8()? as usize).ok_or_else(|| Error::format("mask: bad task id"))?;
    let round = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers);
    for (i, &(rows, cols)) in shapes.iter().enumerate() {
        let len = r.u64()?;
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::format("mask: layer shape overflows"))?;
        if len != expected as u64 {
            return Err(Error::format(format!(
                "mask: layer {i} length field {len} does not match shape {rows}x{cols}"
            )));
        }
        let payload = r.take(expected.div_ceil(8))?;
        let bits: Vec<bool> = (0..expected).map(|k| payload[k / 8] >> (k % 8) & 1 == 1).collect();
        if expected % 8 != 0 && payload[expected / 8] >> (expected % 8) != 0 {
            return Err(Error::format(format!("mask: layer {i} has nonzero padding bits")));
        }
        layers.push(MaskLayer::from_bits(rows, cols, bits)?);
    }
    r.finish()?;
    Ok(TaskMask::new(layers, task, round))
}

pub fn save_mask(mask: &TaskMask, path: &Path) -> Result<()> {
    fs::write(path, serialize_mask(mask)?)?;
    Ok(())
}

pub fn load_mask(path: &Path) -> Result<TaskMask> {
    deserialize_mask(&fs::read(path)?)
}

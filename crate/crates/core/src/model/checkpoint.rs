//! Binary checkpoint format.
//!
//! ```text
//! magic   "LTCK"
//! version u32 = 1
//! config  n_fields u32, cardinalities u64 × n_fields, embedding_dim u32,
//!         n_mlp u32, mlp_dims u32 × n_mlp, n_tower u32, tower_dims u32 × n_tower,
//!         cross_kind u8, sharing_mode u8
//! params  every block in declaration order, f64 little-endian
//! flag    u8: 1 if the rewind snapshot follows, else 0
//! [snapshot blocks, same layout as params]
//! ```

use std::fs;
use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::model::config::{CrossKind, ModelConfig, SharingMode};
use crate::model::network::Model;
use crate::model::params::ModelParams;
use crate::nn::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LTCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_config(w: &mut Writer, c: &ModelConfig) -> Result<()> {
    w.len_u32(c.field_cardinalities.len())?;
    for &card in &c.field_cardinalities {
        w.u64(card as u64);
    }
    w.len_u32(c.embedding_dim)?;
    w.len_u32(c.mlp_dims.len())?;
    for &d in &c.mlp_dims {
        w.len_u32(d)?;
    }
    w.len_u32(c.tower_dims.len())?;
    for &d in &c.tower_dims {
        w.len_u32(d)?;
    }
    w.u8(c.cross_kind.code());
    w.u8(c.sharing_mode.code());
    Ok(())
}

fn decode_config(r: &mut Reader<'_>) -> Result<ModelConfig> {
    let n_fields = r.usize32()?;
    let field_cardinalities = (0..n_fields).map(|_| r.u64().map(|v| v as usize)).collect::<Result<_>>()?;
    let embedding_dim = r.usize32()?;
    let n = r.usize32()?;
    let mlp_dims = (0..n).map(|_| r.usize32()).collect::<Result<_>>()?;
    let n = r.usize32()?;
    let tower_dims = (0..n).map(|_| r.usize32()).collect::<Result<_>>()?;
    let cross_kind = CrossKind::from_code(r.u8()?).ok_or_else(|| Error::format("unknown cross kind code"))?;
    let sharing_mode =
        SharingMode::from_code(r.u8()?).ok_or_else(|| Error::format("unknown sharing mode code"))?;
    let config = ModelConfig {
        field_cardinalities,
        embedding_dim,
        mlp_dims,
        tower_dims,
        cross_kind,
        sharing_mode,
    };
    config
        .validate()
        .map_err(|e| Error::format(format!("checkpoint config invalid: {e}")))?;
    Ok(config)
}

fn write_blocks<T: Scalar>(w: &mut Writer, p: &ModelParams<T>) {
    for (_, block) in p.blocks() {
        for &v in block {
            w.f64(v.to_f64_lossy());
        }
    }
}

fn read_blocks<T: Scalar>(r: &mut Reader<'_>, config: &ModelConfig) -> Result<ModelParams<T>> {
    let mut p = ModelParams::<T>::skeleton(config)?;
    for (_, block) in p.blocks_mut() {
        for v in block.iter_mut() {
            *v = T::of(r.f64()?);
        }
    }
    Ok(p)
}

pub fn encode_checkpoint<T: Scalar>(model: &Model<T>) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    encode_config(&mut w, model.config())?;
    write_blocks(&mut w, &model.params);
    match model.init_snapshot() {
        Some(s) => {
            w.u8(1);
            write_blocks(&mut w, s);
        }
        None => w.u8(0),
    }
    Ok(w.finish())
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Model<T>> {
    let mut r = Reader::new(bytes, "checkpoint");
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint: bad magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(format!("checkpoint: unsupported version {version}")));
    }
    let config = decode_config(&mut r)?;
    let params = read_blocks(&mut r, &config)?;
    let snapshot = match r.u8()? {
        0 => None,
        1 => Some(read_blocks(&mut r, &config)?),
        other => return Err(Error::format(format!("checkpoint: bad snapshot flag {other}"))),
    };
    r.finish()?;
    Model::from_parts(config, params, snapshot)
}

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(model)?)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Model<T>> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::RngSeed;

    #[test]
    fn round_trip_with_snapshot() {
        for mode in SharingMode::ALL {
            let cfg = ModelConfig::desk(vec![3, 4], 2, mode);
            let mut m: Model<f64> = Model::new(cfg, RngSeed(5)).unwrap();
            m.freeze_snapshot().unwrap();
            m.params.weights[0].as_mut_slice()[3] = -0.0;
            let bytes = encode_checkpoint(&m).unwrap();
            let back: Model<f64> = decode_checkpoint(&bytes).unwrap();
            assert!(back.params.bit_identical(&m.params));
            assert!(back.init_snapshot().unwrap().bit_identical(m.init_snapshot().unwrap()));
            assert_eq!(back.config(), m.config());
            assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let cfg = ModelConfig::desk(vec![3], 2, SharingMode::SingleTask);
        let m: Model<f64> = Model::new(cfg, RngSeed(5)).unwrap();
        let bytes = encode_checkpoint(&m).unwrap();
        assert_eq!(&bytes[..4], b"LTCK");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes()); // one field
        assert_eq!(&bytes[12..20], &3u64.to_le_bytes());
        // magic+version 8, fields 4+8, dim 4, mlp 4+5·4, towers 4, kinds 2
        let header = 8 + 12 + 4 + 24 + 4 + 2;
        assert_eq!(bytes.len(), header + m.params.num_params() * 8 + 1);
        assert_eq!(*bytes.last().unwrap(), 0);
    }

    #[test]
    fn corrupt_inputs_fail() {
        let cfg = ModelConfig::desk(vec![3], 2, SharingMode::SingleTask);
        let m: Model<f64> = Model::new(cfg, RngSeed(5)).unwrap();
        let bytes = encode_checkpoint(&m).unwrap();
        assert!(decode_checkpoint::<f64>(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint::<f64>(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode_checkpoint::<f64>(&long).is_err());
    }

    #[test]
    fn f32_model_round_trips_exactly() {
        let cfg = ModelConfig::desk(vec![3, 2], 2, SharingMode::ConnectionShare);
        let m: Model<f32> = Model::new(cfg, RngSeed(9)).unwrap();
        let back: Model<f32> = decode_checkpoint(&encode_checkpoint(&m).unwrap()).unwrap();
        assert_eq!(back.params, m.params);
    }
}

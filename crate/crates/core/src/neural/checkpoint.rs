//! Binary checkpoint: magic, format version, JSON model spec, then every
//! parameter buffer in declared order as little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use super::model::{Model, ModelSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RPLYCKPT";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &Model, mut w: W) -> Result<()> {
    let spec = serde_json::to_vec(&model.spec)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.len() as u64).to_le_bytes())?;
    w.write_all(&spec)?;
    w.write_all(&(model.param_count() as u64).to_le_bytes())?;
    for p in model.params() {
        for v in p {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::Checkpoint("file too short".into()))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v).map_err(|_| Error::Checkpoint("missing version".into()))?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let spec_len = read_u64(&mut r)? as usize;
    let mut spec = vec![0u8; spec_len];
    r.read_exact(&mut spec).map_err(|_| Error::Checkpoint("truncated spec".into()))?;
    let spec: ModelSpec = serde_json::from_slice(&spec).map_err(|e| Error::Checkpoint(format!("bad spec: {e}")))?;
    let mut model = Model::new(spec, 0)?;
    let count = read_u64(&mut r)? as usize;
    if count != model.param_count() {
        return Err(Error::Checkpoint(format!("spec implies {} parameters, file has {count}", model.param_count())));
    }
    let mut b = [0u8; 8];
    for p in model.params_mut() {
        for x in p.iter_mut() {
            r.read_exact(&mut b).map_err(|_| Error::Checkpoint("truncated parameters".into()))?;
            *x = f64::from_le_bytes(b);
        }
    }
    Ok(model)
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_checkpoint(model, std::io::BufWriter::new(f))
}

pub fn load(path: &Path) -> Result<Model> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

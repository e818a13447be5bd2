//! Binary weight-file format.
//!
//! Layout (all integers little-endian):
//!
//!   magic  "ORGN"                        4 bytes
//!   format version                       u32
//!   config length                        u32
//!   config as JSON                       <length> bytes
//!   per parameter tensor, in canonical parameter order:
//!     ndim                               u32
//!     dims                               ndim x u32
//!     data                               product(dims) x f64
//!   per block: batch-norm running mean and variance (as tensors),
//!     then an initialized flag           u8
//!
//! The format carries no timestamps, so saving the same model twice
//! produces byte-identical files, and a save/load round trip restores the
//! model bit for bit (running statistics included).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, OrigiNet};
use crate::nn::BatchNormState;
use crate::tensor::Tensor;

const MAGIC: [u8; 4] = *b"ORGN";
const VERSION: u32 = 1;

fn write_tensor(w: &mut impl Write, t: &Tensor) -> Result<()> {
    w.write_all(&(t.ndim() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("weight file is truncated".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_tensor(r: &mut impl Read, expected_shape: &[usize], what: &str) -> Result<Tensor> {
    let ndim = read_u32(r)? as usize;
    if ndim == 0 || ndim > 8 {
        return Err(Error::Format(format!("implausible tensor rank {ndim} for {what}")));
    }
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(read_u32(r)? as usize);
    }
    if shape != expected_shape {
        return Err(Error::config(
            what,
            format!("stored shape {:?} does not match expected {:?}", shape, expected_shape),
        ));
    }
    let len: usize = shape.iter().product();
    let mut data = vec![0.0f64; len];
    let mut b = [0u8; 8];
    for v in &mut data {
        read_exact(r, &mut b)?;
        *v = f64::from_le_bytes(b);
    }
    Tensor::from_vec(&shape, data)
}

pub fn save_weights(model: &OrigiNet, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let config = serde_json::to_vec(&model.config)
        .map_err(|e| Error::Format(format!("could not encode config: {e}")))?;
    w.write_all(&(config.len() as u32).to_le_bytes())?;
    w.write_all(&config)?;
    for t in model.param_refs() {
        write_tensor(&mut w, t)?;
    }
    for block in &model.blocks {
        let channels = block.gamma.len();
        let mean = Tensor::from_vec(&[channels], block.bn_state.running_mean.clone())?;
        let var = Tensor::from_vec(&[channels], block.bn_state.running_var.clone())?;
        write_tensor(&mut w, &mean)?;
        write_tensor(&mut w, &var)?;
        w.write_all(&[u8::from(block.bn_state.initialized)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<OrigiNet> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}; not a weight file",
            magic
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported weight format version {version} (expected {VERSION})"
        )));
    }
    let config_len = read_u32(&mut r)? as usize;
    if config_len > 1 << 20 {
        return Err(Error::Format(format!("implausible config length {config_len}")));
    }
    let mut config_bytes = vec![0u8; config_len];
    read_exact(&mut r, &mut config_bytes)?;
    let config: ModelConfig = serde_json::from_slice(&config_bytes)
        .map_err(|e| Error::Format(format!("could not parse embedded config: {e}")))?;
    config.validate()?;

    let mut model = OrigiNet::zeroed(&config)?;
    let names = model.param_names();
    let shapes: Vec<Vec<usize>> =
        model.param_refs().iter().map(|t| t.shape().to_vec()).collect();
    for ((param, name), shape) in model.param_refs_mut().into_iter().zip(&names).zip(&shapes) {
        *param = read_tensor(&mut r, shape, name)?;
    }
    for (i, block) in model.blocks.iter_mut().enumerate() {
        let channels = block.gamma.len();
        let mean = read_tensor(&mut r, &[channels], &format!("block{i}.running_mean"))?;
        let var = read_tensor(&mut r, &[channels], &format!("block{i}.running_var"))?;
        let mut flag = [0u8; 1];
        read_exact(&mut r, &mut flag)?;
        block.bn_state = BatchNormState {
            running_mean: mean.data().to_vec(),
            running_var: var.data().to_vec(),
            initialized: flag[0] != 0,
        };
    }
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(model),
        _ => Err(Error::Format("trailing bytes after weight data".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::nn::Mode;

    fn tiny_net() -> OrigiNet {
        let cfg = ModelConfig {
            input_size: 8,
            block_depths: vec![4],
            fc_width: 4,
            num_classes: 2,
            ..Default::default()
        };
        OrigiNet::build(&cfg, 77).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.orgn");
        let mut net = tiny_net();
        // Populate running stats so they participate in the round trip.
        let batch = Tensor::filled(&[2, 1, 8, 8], 0.25);
        let (_, cache) = net.forward(&batch, Mode::Train).unwrap();
        net.apply_bn_states(cache.bn_states());

        save_weights(&net, &path).unwrap();
        let loaded = load_weights(&path).unwrap();
        for (a, b) in net.param_refs().iter().zip(loaded.param_refs()) {
            assert_eq!(a.data(), b.data());
        }
        let probe = Tensor::filled(&[1, 1, 8, 8], 0.7);
        let (pa, _) = net.forward(&probe, Mode::Eval).unwrap();
        let (pb, _) = loaded.forward(&probe, Mode::Eval).unwrap();
        assert_eq!(pa.data(), pb.data());
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.orgn"), dir.path().join("b.orgn"));
        let net = tiny_net();
        save_weights(&net, &p1).unwrap();
        save_weights(&net, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.orgn");
        let net = tiny_net();
        save_weights(&net, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_weights(&path).unwrap_err(), Error::Format(_)));
    }

    #[test]
    fn garbage_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.orgn");
        std::fs::write(&path, b"JUNKJUNKJUNK").unwrap();
        assert!(matches!(load_weights(&path).unwrap_err(), Error::Format(_)));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_weights(Path::new("/nonexistent/net.orgn")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}

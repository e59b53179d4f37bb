//! Portable binary model files.
//!
//! Layout (version `VUBM1`): the 5-byte magic, four little-endian `u32`
//! dimensions (input, hidden, latent, classes), then every parameter as a
//! little-endian `f64` in flat order: enc_w1 row-major, enc_b1, enc_w2,
//! enc_b2, head_w, head_b. Round-trips are exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::net::{Dims, Model};

pub const MODEL_MAGIC: &[u8; 5] = b"VUBM1";

pub fn model_to_bytes(model: &Model<f64>) -> Vec<u8> {
    let d = model.dims;
    let mut out = Vec::with_capacity(5 + 16 + model.param_count() * 8);
    out.extend_from_slice(MODEL_MAGIC);
    for dim in [d.d_in, d.hidden, d.latent, d.n_classes] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &p in model.iter_flat() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model<f64>> {
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, len: usize| -> Result<&[u8]> {
        if *cursor + len > bytes.len() {
            return Err(Error::ModelFormat("unexpected end of file".into()));
        }
        let s = &bytes[*cursor..*cursor + len];
        *cursor += len;
        Ok(s)
    };
    let magic = take(&mut cursor, 5)?;
    if magic != MODEL_MAGIC {
        return Err(Error::ModelFormat(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(MODEL_MAGIC)
        )));
    }
    let read_dim = |cursor: &mut usize| -> Result<usize> {
        let b = take(cursor, 4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    };
    let d_in = read_dim(&mut cursor)?;
    let hidden = read_dim(&mut cursor)?;
    let latent = read_dim(&mut cursor)?;
    let n_classes = read_dim(&mut cursor)?;
    if d_in == 0 || hidden == 0 || latent == 0 || n_classes == 0 {
        return Err(Error::ModelFormat("zero dimension in header".into()));
    }
    let dims = Dims {
        d_in,
        hidden,
        latent,
        n_classes,
    };
    let read_f64 = |cursor: &mut usize| -> Result<f64> {
        let b = take(cursor, 8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    };
    let read_vec = |cursor: &mut usize, len: usize| -> Result<Vec<f64>> {
        (0..len).map(|_| read_f64(cursor)).collect()
    };
    let read_mat = |cursor: &mut usize, rows: usize, cols: usize| -> Result<Matrix<f64>> {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, read_f64(cursor)?);
            }
        }
        Ok(m)
    };
    let enc_w1 = read_mat(&mut cursor, hidden, d_in)?;
    let enc_b1 = read_vec(&mut cursor, hidden)?;
    let enc_w2 = read_mat(&mut cursor, 2 * latent, hidden)?;
    let enc_b2 = read_vec(&mut cursor, 2 * latent)?;
    let head_w = read_mat(&mut cursor, n_classes, latent)?;
    let head_b = read_vec(&mut cursor, n_classes)?;
    if cursor != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes",
            bytes.len() - cursor
        )));
    }
    Ok(Model {
        dims,
        enc_w1,
        enc_b1,
        enc_w2,
        enc_b2,
        head_w,
        head_b,
    })
}

pub fn save_model(model: &Model<f64>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model<f64>> {
    model_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::init_model;

    #[test]
    fn round_trip_is_bitwise_exact() {
        let m: Model<f64> = init_model(5, 7, 3, 4, 99).unwrap();
        let bytes = model_to_bytes(&m);
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let m: Model<f64> = init_model(2, 2, 1, 2, 0).unwrap();
        let mut bytes = model_to_bytes(&m);

        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(
            model_from_bytes(&wrong_magic),
            Err(Error::ModelFormat(_))
        ));

        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(Error::ModelFormat(_))
        ));

        let mut padded = model_to_bytes(&m);
        padded.extend_from_slice(&[0u8; 4]);
        assert!(matches!(
            model_from_bytes(&padded),
            Err(Error::ModelFormat(_))
        ));
    }
}

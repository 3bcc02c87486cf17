use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Decoder, DecoderModel, Dense, NeuralError};
use crate::mesh::{expect_magic, read_str, read_u64, write_str};

const MODEL_MAGIC: &[u8; 4] = b"ADEC";

fn write_f64s<W: Write>(out: &mut W, values: impl Iterator<Item = f64>) -> std::io::Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(input: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    input.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl DecoderModel {
    /// Little-endian layout: magic `ADEC`, u64 latent dimension, u64 layer
    /// count + 1, u64 layer widths, then per layer the row-major weight
    /// matrix followed by the bias, then u64 code count and per code a
    /// length-prefixed id and its f64 entries.
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), NeuralError> {
        out.write_all(MODEL_MAGIC)?;
        out.write_all(&(self.latent_dim as u64).to_le_bytes())?;
        let sizes = self.net.sizes();
        out.write_all(&(sizes.len() as u64).to_le_bytes())?;
        for s in &sizes {
            out.write_all(&(*s as u64).to_le_bytes())?;
        }
        for layer in &self.net.layers {
            write_f64s(&mut out, layer.weight.iter().copied())?;
            write_f64s(&mut out, layer.bias.iter().copied())?;
        }
        out.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        for (id, row) in self.ids.iter().zip(self.latents.rows()) {
            write_str(&mut out, id)?;
            write_f64s(&mut out, row.iter().copied())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self, NeuralError> {
        expect_magic(&mut input, MODEL_MAGIC)?;
        let l = read_u64(&mut input)? as usize;
        let n_sizes = read_u64(&mut input)? as usize;
        if !(2..=64).contains(&n_sizes) {
            return Err(NeuralError::Format(format!("implausible layer count {n_sizes}")));
        }
        let sizes: Vec<usize> = (0..n_sizes).map(|_| read_u64(&mut input).map(|v| v as usize)).collect::<Result<_, _>>()?;
        if sizes.iter().any(|&s| s == 0 || s > 1 << 16) {
            return Err(NeuralError::Format(format!("implausible layer sizes {sizes:?}")));
        }
        let mut layers = Vec::with_capacity(n_sizes - 1);
        for w in sizes.windows(2) {
            let weight = Array2::from_shape_vec((w[1], w[0]), read_f64s(&mut input, w[0] * w[1])?).expect("length matches shape");
            let bias = Array1::from(read_f64s(&mut input, w[1])?);
            layers.push(Dense { weight, bias });
        }
        let count = read_u64(&mut input)? as usize;
        if count > 1 << 24 {
            return Err(NeuralError::Format(format!("implausible code count {count}")));
        }
        let mut ids = Vec::with_capacity(count);
        let mut flat = Vec::with_capacity(count * l);
        for _ in 0..count {
            ids.push(read_str(&mut input)?);
            flat.extend(read_f64s(&mut input, l)?);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(NeuralError::Format("trailing bytes after latent table".into()));
        }
        let latents = Array2::from_shape_vec((count, l), flat).expect("length matches shape");
        Self::from_parts(Decoder { layers }, ids, latents)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        Self::read(BufReader::new(fs::File::open(path)?))
    }
}

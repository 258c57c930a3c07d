//! Binary weight format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   b"MLPW"
//! version u32                       (currently 1)
//! layers  u32
//! per layer: input_width u32, output_width u32, activation u8
//! params  u64                       (total parameter count, checked on load)
//! data    params x f64              (per layer: weights row-major, then biases)
//! ```
//!
//! Save followed by load reproduces the network bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, LayerSpec, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MLPW";
const VERSION: u32 = 1;

pub fn save_mlp<W: Write>(net: &Mlp, out: &mut W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let specs = net.specs();
    out.write_all(&(specs.len() as u32).to_le_bytes())?;
    for spec in specs.iter() {
        out.write_all(&(spec.input_width as u32).to_le_bytes())?;
        out.write_all(&(spec.output_width as u32).to_le_bytes())?;
        out.write_all(&[spec.activation.tag()])?;
    }
    out.write_all(&(net.parameter_count() as u64).to_le_bytes())?;
    for k in 0..specs.len() {
        for &w in net.layer_weights(k) {
            out.write_all(&w.to_le_bytes())?;
        }
        for &b in net.layer_biases(k) {
            out.write_all(&b.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_mlp<R: Read>(input: &mut R) -> Result<Mlp> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("bad magic; not a weight file"));
    }
    let version = read_u32(input)?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported version {version}")));
    }
    let n_layers = read_u32(input)? as usize;
    if n_layers == 0 {
        return Err(Error::format("zero layers"));
    }
    let mut specs = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let input_width = read_u32(input)? as usize;
        let output_width = read_u32(input)? as usize;
        let mut tag = [0u8; 1];
        input.read_exact(&mut tag)?;
        let activation = Activation::from_tag(tag[0])
            .ok_or_else(|| Error::format(format!("unknown activation tag {}", tag[0])))?;
        specs.push(LayerSpec::new(input_width, output_width, activation));
    }
    let declared = read_u64(input)? as usize;
    let expected: usize = specs
        .iter()
        .map(|s| s.input_width * s.output_width + s.output_width)
        .sum();
    if declared != expected {
        return Err(Error::format(format!(
            "parameter count {declared} does not match layer specs ({expected})"
        )));
    }

    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    for spec in &specs {
        let mut w = Vec::with_capacity(spec.input_width * spec.output_width);
        for _ in 0..spec.input_width * spec.output_width {
            w.push(read_f64(input)?);
        }
        let mut b = Vec::with_capacity(spec.output_width);
        for _ in 0..spec.output_width {
            b.push(read_f64(input)?);
        }
        weights.push(w);
        biases.push(b);
    }
    Mlp::from_parts(&specs, weights, biases)
}

pub fn save_mlp_file<P: AsRef<Path>>(net: &Mlp, path: P) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    save_mlp(net, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_mlp_file<P: AsRef<Path>>(path: P) -> Result<Mlp> {
    let mut input = BufReader::new(File::open(path)?);
    load_mlp(&mut input)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

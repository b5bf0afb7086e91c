//! Self-describing binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset 0   magic  b"GFTBCKP1"            (8 bytes)
//! offset 8   header_len: u32               (4 bytes)
//! offset 12  header: UTF-8 key=value lines (header_len bytes)
//! then       tensor data: f64 LE, row-major, in header order
//! ```
//!
//! The header carries every model-config field, the RNG seed, the Adam
//! step count, and one `tensor=<name>:<rows>x<cols>` line per tensor. The
//! tensor list is the parameter order of [`ModelParams::tensors`] followed
//! by the Adam first and second moments (`adam_m_<i>`, `adam_v_<i>`).
//! Decoding validates the header against the config before touching the
//! data section, so a hostile file cannot request absurd allocations.

use ndarray::Array2;

use crate::basis::{BasisFamily, BasisKind};
use crate::error::{CoreError, Result};
use crate::model::{AdamState, FilterActivation, ModelConfig, ModelParams};

const MAGIC: &[u8; 8] = b"GFTBCKP1";
const MAX_DIM: usize = 1 << 20;
const MAX_HEADER: usize = 1 << 20;

pub fn encode_checkpoint(config: &ModelConfig, params: &ModelParams) -> Vec<u8> {
    let mut header = String::new();
    header.push_str(&format!("input_dim={}\n", config.input_dim));
    header.push_str(&format!("hidden_dim={}\n", config.hidden_dim));
    header.push_str(&format!("num_classes={}\n", config.num_classes));
    header.push_str(&format!("order={}\n", config.order));
    header.push_str(&format!("basis={}\n", config.basis.family));
    header.push_str(&format!("rescaled={}\n", u8::from(config.basis.rescaled)));
    header.push_str(&format!("filter_layers={}\n", config.filter_layers));
    header.push_str(&format!("activation={}\n", config.activation));
    header.push_str(&format!("dropout_input={}\n", config.dropout_input));
    header.push_str(&format!("dropout_hidden={}\n", config.dropout_hidden));
    header.push_str(&format!("lambda_ew={}\n", config.lambda_ew));
    match config.clip_logits {
        Some(b) => header.push_str(&format!("clip_logits={b}\n")),
        None => header.push_str("clip_logits=none\n"),
    }
    header.push_str(&format!("ew_on_raw={}\n", u8::from(config.ew_on_raw_features)));
    header.push_str(&format!("seed={}\n", config.seed));
    header.push_str(&format!("adam_step={}\n", params.adam.step));

    let mut tensors: Vec<(String, &Array2<f64>)> = params
        .tensor_names()
        .into_iter()
        .zip(params.tensors())
        .collect();
    for (i, m) in params.adam.m.iter().enumerate() {
        tensors.push((format!("adam_m_{i}"), m));
    }
    for (i, v) in params.adam.v.iter().enumerate() {
        tensors.push((format!("adam_v_{i}"), v));
    }
    for (name, t) in &tensors {
        header.push_str(&format!("tensor={name}:{}x{}\n", t.nrows(), t.ncols()));
    }

    let mut out = Vec::with_capacity(12 + header.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for (_, t) in &tensors {
        for v in t.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn fail(msg: impl Into<String>) -> CoreError {
    CoreError::Checkpoint(msg.into())
}

struct Header {
    fields: Vec<(String, String)>,
    tensors: Vec<(String, usize, usize)>,
}

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| fail(format!("missing header field '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| fail(format!("field '{key}' has an invalid value")))
    }
}

fn parse_header(text: &str) -> Result<Header> {
    let mut fields = Vec::new();
    let mut tensors = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail(format!("header line {} has no '='", lineno + 1)))?;
        if key == "tensor" {
            let (name, dims) = value
                .split_once(':')
                .ok_or_else(|| fail(format!("tensor line {} has no ':'", lineno + 1)))?;
            let (r, c) = dims
                .split_once('x')
                .ok_or_else(|| fail(format!("tensor line {} has no 'x'", lineno + 1)))?;
            let rows: usize = r.parse().map_err(|_| fail("bad tensor rows"))?;
            let cols: usize = c.parse().map_err(|_| fail("bad tensor cols"))?;
            if rows == 0 || cols == 0 || rows > MAX_DIM || cols > MAX_DIM {
                return Err(fail(format!("tensor '{name}' has unreasonable shape {rows}x{cols}")));
            }
            tensors.push((name.to_string(), rows, cols));
        } else {
            fields.push((key.to_string(), value.to_string()));
        }
    }
    Ok(Header { fields, tensors })
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelConfig, ModelParams)> {
    if bytes.len() < 12 {
        return Err(fail("file too short"));
    }
    if &bytes[0..8] != MAGIC {
        return Err(fail("bad magic"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if header_len > MAX_HEADER || 12 + header_len > bytes.len() {
        return Err(fail("header length out of range"));
    }
    let header_text = std::str::from_utf8(&bytes[12..12 + header_len])
        .map_err(|_| fail("header is not valid UTF-8"))?;
    let header = parse_header(header_text)?;

    let family: BasisFamily = header
        .get("basis")?
        .parse()
        .map_err(|e: String| fail(e))?;
    let rescaled: u8 = header.parse("rescaled")?;
    let activation: FilterActivation = header
        .get("activation")?
        .parse()
        .map_err(|e: String| fail(e))?;
    let clip = match header.get("clip_logits")? {
        "none" => None,
        v => Some(v.parse::<f64>().map_err(|_| fail("bad clip_logits"))?),
    };
    let ew_raw: u8 = header.parse("ew_on_raw")?;
    let config = ModelConfig {
        input_dim: header.parse("input_dim")?,
        hidden_dim: header.parse("hidden_dim")?,
        num_classes: header.parse("num_classes")?,
        order: header.parse("order")?,
        basis: BasisKind {
            family,
            rescaled: rescaled != 0,
        },
        filter_layers: header.parse("filter_layers")?,
        activation,
        dropout_input: header.parse("dropout_input")?,
        dropout_hidden: header.parse("dropout_hidden")?,
        lambda_ew: header.parse("lambda_ew")?,
        clip_logits: clip,
        ew_on_raw_features: ew_raw != 0,
        seed: header.parse("seed")?,
    };
    config.validate().map_err(|e| fail(format!("config invalid: {e}")))?;
    if config.input_dim > MAX_DIM || config.hidden_dim > MAX_DIM || config.num_classes > MAX_DIM {
        return Err(fail("config dimensions out of range"));
    }
    let adam_step: u64 = header.parse("adam_step")?;

    // Expected tensor manifest, derived from the (validated) config.
    let layers = config.filter_layers;
    let mut expected: Vec<(String, usize, usize)> = Vec::new();
    expected.push(("w_in".into(), config.input_dim, config.hidden_dim));
    for l in 0..layers {
        expected.push((format!("theta{l}"), config.order + 1, 1));
    }
    for l in 0..layers {
        expected.push((format!("w_mid{l}"), config.hidden_dim, config.hidden_dim));
    }
    expected.push(("w_out".into(), config.hidden_dim, config.num_classes));
    let param_count = expected.len();
    for i in 0..param_count {
        let (_, r, c) = expected[i];
        expected.push((format!("adam_m_{i}"), r, c));
    }
    for i in 0..param_count {
        let (_, r, c) = expected[i];
        expected.push((format!("adam_v_{i}"), r, c));
    }

    if header.tensors != expected {
        return Err(fail("tensor manifest does not match the config"));
    }

    let total_floats: usize = expected
        .iter()
        .try_fold(0usize, |acc, (_, r, c)| {
            r.checked_mul(*c).and_then(|n| acc.checked_add(n))
        })
        .ok_or_else(|| fail("tensor sizes overflow"))?;
    let data = &bytes[12 + header_len..];
    let expected_bytes = total_floats
        .checked_mul(8)
        .ok_or_else(|| fail("tensor sizes overflow"))?;
    if data.len() != expected_bytes {
        return Err(fail(format!(
            "data section has {} bytes, expected {expected_bytes}",
            data.len()
        )));
    }

    let mut offset = 0usize;
    let mut read_tensor = |rows: usize, cols: usize| -> Array2<f64> {
        let count = rows * cols;
        let mut vals = Vec::with_capacity(count);
        for i in 0..count {
            let start = offset + i * 8;
            vals.push(f64::from_le_bytes(data[start..start + 8].try_into().unwrap()));
        }
        offset += count * 8;
        Array2::from_shape_vec((rows, cols), vals).expect("validated shape")
    };

    let w_in = read_tensor(config.input_dim, config.hidden_dim);
    let thetas: Vec<Array2<f64>> = (0..layers)
        .map(|_| read_tensor(config.order + 1, 1))
        .collect();
    let w_mid: Vec<Array2<f64>> = (0..layers)
        .map(|_| read_tensor(config.hidden_dim, config.hidden_dim))
        .collect();
    let w_out = read_tensor(config.hidden_dim, config.num_classes);
    let m: Vec<Array2<f64>> = expected[..param_count]
        .to_vec()
        .iter()
        .map(|(_, r, c)| read_tensor(*r, *c))
        .collect();
    let v: Vec<Array2<f64>> = expected[..param_count]
        .to_vec()
        .iter()
        .map(|(_, r, c)| read_tensor(*r, *c))
        .collect();

    Ok((
        config,
        ModelParams {
            w_in,
            thetas,
            w_mid,
            w_out,
            adam: AdamState {
                m,
                v,
                step: adam_step,
            },
        },
    ))
}

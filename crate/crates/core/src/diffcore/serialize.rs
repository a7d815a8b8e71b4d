//! Checkpoint container: a UTF-8 manifest followed by a little-endian `f32` blob.
//!
//! ```text
//! stackptr-ckpt/1
//! seed	<u64>
//! <caller header lines>
//! tensor	<name>	<d0>x<d1>...	<byte offset>	<value count>
//! blob	<byte length>
//! <raw bytes>
//! ```
//!
//! Fields are tab-separated; names and header values are escaped with
//! [`escape`]. Values are narrowed to `f32` on write, so a store that was
//! itself loaded from a checkpoint serializes to identical bytes.

use super::tensor::{ParameterStore, Tensor};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "stackptr-ckpt/1";

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(Error::Checkpoint(format!("bad escape sequence \\{other:?}")));
            }
        }
    }
    Ok(out)
}

pub fn write_archive(header: &[String], params: &ParameterStore) -> Vec<u8> {
    let mut manifest = String::new();
    manifest.push_str(FORMAT_VERSION);
    manifest.push('\n');
    manifest.push_str(&format!("seed\t{}\n", params.rng_seed));
    for line in header {
        manifest.push_str(line);
        manifest.push('\n');
    }
    let mut blob = Vec::with_capacity(params.num_scalars() * 4);
    for (_, name, tensor) in params.iter() {
        let dims: Vec<String> = tensor.shape().iter().map(usize::to_string).collect();
        manifest.push_str(&format!(
            "tensor\t{}\t{}\t{}\t{}\n",
            escape(name),
            dims.join("x"),
            blob.len(),
            tensor.len()
        ));
        for v in tensor.values() {
            blob.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    manifest.push_str(&format!("blob\t{}\n", blob.len()));
    let mut out = manifest.into_bytes();
    out.extend_from_slice(&blob);
    out
}

/// Parses an archive into its caller header lines and parameters.
pub fn read_archive(bytes: &[u8]) -> Result<(Vec<String>, ParameterStore)> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Result<String> {
        let rest = &bytes[*pos..];
        let end = rest
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| Error::Checkpoint("truncated manifest".into()))?;
        *pos += end + 1;
        String::from_utf8(rest[..end].to_vec())
            .map_err(|_| Error::Checkpoint("manifest is not UTF-8".into()))
    };

    let version = next_line(&mut pos)?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format {version:?}")));
    }
    let seed_line = next_line(&mut pos)?;
    let seed = seed_line
        .strip_prefix("seed\t")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| Error::Checkpoint(format!("bad seed line {seed_line:?}")))?;

    let mut header = Vec::new();
    let mut specs = Vec::new();
    let blob_len = loop {
        let line = next_line(&mut pos)?;
        if let Some(rest) = line.strip_prefix("blob\t") {
            break rest
                .parse::<usize>()
                .map_err(|_| Error::Checkpoint(format!("bad blob line {line:?}")))?;
        } else if let Some(rest) = line.strip_prefix("tensor\t") {
            let fields: Vec<&str> = rest.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Checkpoint(format!("bad tensor line {line:?}")));
            }
            let bad = || Error::Checkpoint(format!("bad tensor line {line:?}"));
            let shape = fields[1]
                .split('x')
                .map(|d| d.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            let offset = fields[2].parse::<usize>().map_err(|_| bad())?;
            let count = fields[3].parse::<usize>().map_err(|_| bad())?;
            specs.push((unescape(fields[0])?, shape, offset, count));
        } else {
            header.push(line);
        }
    };

    let blob = &bytes[pos..];
    if blob.len() != blob_len {
        return Err(Error::Checkpoint(format!(
            "blob holds {} bytes, manifest declares {blob_len}",
            blob.len()
        )));
    }
    let mut params = ParameterStore::new(seed);
    for (name, shape, offset, count) in specs {
        let end = offset + count * 4;
        if end > blob.len() {
            return Err(Error::Checkpoint(format!("tensor {name} overruns blob")));
        }
        let values = blob[offset..end]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        let tensor = Tensor::new(shape, values).map_err(|e| Error::Checkpoint(format!("{name}: {e}")))?;
        params.insert(name, tensor)?;
    }
    Ok((header, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_stable() {
        let mut params = ParameterStore::new(11);
        params
            .insert("encoder.w", Tensor::new(vec![2, 2], vec![0.1, -2.5, 3.0, 1e-3]).unwrap())
            .unwrap();
        params.insert("odd\tname", Tensor::scalar(7.0)).unwrap();
        let header = vec!["config\tseed\t11".to_string()];
        let bytes = write_archive(&header, &params);
        let (h, loaded) = read_archive(&bytes).unwrap();
        assert_eq!(h, header);
        assert_eq!(loaded.rng_seed, 11);
        assert_eq!(loaded.by_name("odd\tname").unwrap().values(), &[7.0]);
        assert_eq!(write_archive(&h, &loaded), bytes);
    }

    #[test]
    fn escape_round_trip() {
        let s = "a\\b\tc\nd";
        assert_eq!(unescape(&escape(s)).unwrap(), s);
    }

    #[test]
    fn rejects_wrong_version() {
        assert!(read_archive(b"other/1\nseed\t0\nblob\t0\n").is_err());
    }
}

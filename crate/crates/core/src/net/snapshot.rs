//! Plain-text tensor snapshots.
//!
//! ```text
//! shape 2 2
//! 0 0 1 2
//! 0 1 -3 4
//! 1 0 0 1
//! 1 1 5 1
//! ```
//!
//! A header line, then one `row col num den` line per entry in decimal.
//! Lines may come in any order; every entry must appear exactly once.

use super::inference::ModelWeights;
use super::tensor::RationalTensor;
use crate::error::{HaloError, Result};
use crate::exact::Rational;
use num_bigint::BigInt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

pub fn write_tensor(t: &RationalTensor, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "shape {} {}", t.rows(), t.cols())?;
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            let q = t.get(r, c);
            writeln!(out, "{r} {c} {} {}", q.numer(), q.denom())?;
        }
    }
    Ok(())
}

pub fn read_tensor(input: impl BufRead) -> Result<RationalTensor> {
    let mut lines = input.lines().enumerate();
    let err = |line: usize, msg: &str| HaloError::Parse(format!("line {}: {msg}", line + 1));
    let (rows, cols) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(HaloError::Parse("missing shape header".into()));
        };
        let line = line.map_err(|e| err(i, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["shape", r, c] => {
                let r = r.parse::<usize>().map_err(|_| err(i, "bad row count"))?;
                let c = c.parse::<usize>().map_err(|_| err(i, "bad column count"))?;
                break (r, c);
            }
            _ => return Err(err(i, "expected `shape rows cols`")),
        }
    };
    let mut slots: Vec<Option<Rational>> = vec![None; rows * cols];
    for (i, line) in lines {
        let line = line.map_err(|e| err(i, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let [r, c, n, d] = f.as_slice() else {
            return Err(err(i, "expected `row col num den`"));
        };
        let r = r.parse::<usize>().map_err(|_| err(i, "bad row index"))?;
        let c = c.parse::<usize>().map_err(|_| err(i, "bad column index"))?;
        if r >= rows || c >= cols {
            return Err(err(i, "index outside the declared shape"));
        }
        let n = BigInt::from_str(n).map_err(|_| err(i, "bad numerator"))?;
        let d = BigInt::from_str(d).map_err(|_| err(i, "bad denominator"))?;
        let q = Rational::new(n, d).map_err(|_| err(i, "zero denominator"))?;
        let slot = &mut slots[r * cols + c];
        if slot.is_some() {
            return Err(err(i, "duplicate entry"));
        }
        *slot = Some(q);
    }
    let data = slots
        .into_iter()
        .enumerate()
        .map(|(k, q)| q.ok_or_else(|| HaloError::Parse(format!("entry ({}, {}) missing", k / cols, k % cols))))
        .collect::<Result<Vec<_>>>()?;
    RationalTensor::new(rows, cols, data)
}

const WEIGHT_FILES: [&str; 7] = ["embed", "pos", "wq", "wk", "w1", "w2", "w_vocab"];

/// One `<name>.txt` file per tensor in `dir`.
pub fn save_weights(w: &ModelWeights, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tensors = [&w.embed, &w.pos, &w.wq, &w.wk, &w.w1, &w.w2, &w.w_vocab];
    for (name, t) in WEIGHT_FILES.iter().zip(tensors) {
        let f = std::fs::File::create(dir.join(format!("{name}.txt")))?;
        let mut out = std::io::BufWriter::new(f);
        write_tensor(t, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

pub fn load_weights(dir: &Path) -> Result<ModelWeights> {
    let mut loaded = Vec::with_capacity(WEIGHT_FILES.len());
    for name in WEIGHT_FILES {
        let path = dir.join(format!("{name}.txt"));
        let f = std::fs::File::open(&path)
            .map_err(|e| HaloError::Parse(format!("{}: {e}", path.display())))?;
        let t = read_tensor(std::io::BufReader::new(f))
            .map_err(|e| HaloError::Parse(format!("{}: {e}", path.display())))?;
        loaded.push(t);
    }
    let mut it = loaded.into_iter();
    let mut next = || it.next().expect("one tensor per file");
    Ok(ModelWeights {
        embed: next(),
        pos: next(),
        wq: next(),
        wk: next(),
        w1: next(),
        w2: next(),
        w_vocab: next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::inference::InferenceConfig;

    #[test]
    fn round_trip_is_bit_exact() {
        let t = RationalTensor::new(2, 2, vec![
            Rational::ratio(1, 2),
            Rational::from_parts(BigInt::from(-6), BigInt::from(8)),
            Rational::ratio(0, 1),
            Rational::ratio(5, 1),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_tensor(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("shape 2 2\n0 0 1 2\n0 1 -6 8\n"));
        let back = read_tensor(&buf[..]).unwrap();
        assert!(back.identical(&t));
    }

    #[test]
    fn malformed_input_names_the_line() {
        for (text, needle) in [
            ("", "missing shape"),
            ("shape 1 1\n0 0 1\n", "line 2"),
            ("shape 1 1\n0 0 1 0\n", "zero denominator"),
            ("shape 1 1\n1 0 1 1\n", "outside"),
            ("shape 1 2\n0 0 1 1\n", "missing"),
            ("shape 1 1\n0 0 1 1\n0 0 1 1\n", "duplicate"),
        ] {
            let e = read_tensor(text.as_bytes()).unwrap_err().to_string();
            assert!(e.contains(needle), "{text:?}: {e}");
        }
    }

    #[test]
    fn weights_round_trip_through_a_directory() {
        let cfg = InferenceConfig {
            d_model: 4,
            d_ff: 4,
            vocab: 3,
            max_seq: 2,
            ..InferenceConfig::default()
        };
        let w = ModelWeights::random(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_weights(&w, dir.path()).unwrap();
        let back = load_weights(dir.path()).unwrap();
        assert!(back.w1.identical(&w.w1) && back.w_vocab.identical(&w.w_vocab));
        assert_eq!(back, w);
    }
}

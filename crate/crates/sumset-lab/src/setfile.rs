//! Text format for materialized sets.
//!
//! Line 1 `alphabet <|X|>`, line 2 `n <n>`, then either `indices` with one
//! decimal point index per line, or `hexbits` with the whole bitset as hex,
//! least-significant index first (index 4k is bit 0 of the k-th hex char).
//! Writing and parsing round-trip bit-exactly.

use crate::error::{Error, Result};
use crate::tensor::TensorSet;

/// Sets up to this many points are written as `indices`, larger ones as
/// `hexbits`. Any fixed rule keeps the writer deterministic.
const INDICES_CUTOFF: u64 = 64;

pub fn write_set_file(e: &TensorSet) -> String {
    let mut out = format!("alphabet {}\nn {}\n", e.alphabet(), e.n());
    if e.len() <= INDICES_CUTOFF {
        out.push_str("indices\n");
        for p in e.iter() {
            out.push_str(&p.to_string());
            out.push('\n');
        }
    } else {
        out.push_str("hexbits\n");
        let size = e.space_size();
        let nibbles = size.div_ceil(4);
        let mut line = String::with_capacity(nibbles as usize);
        for k in 0..nibbles {
            let mut v = 0u32;
            for b in 0..4 {
                let idx = 4 * k + b;
                if idx < size && e.contains(idx) {
                    v |= 1 << b;
                }
            }
            line.push(char::from_digit(v, 16).unwrap());
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn parse_set_file(text: &str) -> Result<TensorSet> {
    let mut lines = text.lines();
    let alphabet = parse_header(lines.next(), "alphabet")?;
    let n = parse_header(lines.next(), "n")?;
    let mode = lines
        .next()
        .map(str::trim)
        .ok_or_else(|| Error::Parse("missing section line (`indices` or `hexbits`)".into()))?;

    let mut set = TensorSet::empty(alphabet as usize, n as usize)?;
    match mode {
        "indices" => {
            for line in lines {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let p: u64 = line
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad point index {line:?}")))?;
                if p >= set.space_size() {
                    return Err(Error::Parse(format!(
                        "point index {p} out of range {}",
                        set.space_size()
                    )));
                }
                if set.contains(p) {
                    return Err(Error::Parse(format!("duplicate point index {p}")));
                }
                set.insert(p);
            }
        }
        "hexbits" => {
            let hex = lines
                .next()
                .map(str::trim)
                .ok_or_else(|| Error::Parse("missing hexbits line".into()))?;
            let size = set.space_size();
            let nibbles = size.div_ceil(4);
            if hex.len() as u64 != nibbles {
                return Err(Error::Parse(format!(
                    "hexbits has {} chars, expected {nibbles}",
                    hex.len()
                )));
            }
            for (k, c) in hex.chars().enumerate() {
                let v = c
                    .to_digit(16)
                    .ok_or_else(|| Error::Parse(format!("bad hex char {c:?}")))?;
                for b in 0..4 {
                    if v >> b & 1 == 1 {
                        let idx = 4 * k as u64 + b;
                        if idx >= size {
                            return Err(Error::Parse(format!(
                                "hexbits sets bit {idx} beyond size {size}"
                            )));
                        }
                        set.insert(idx);
                    }
                }
            }
            if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
                return Err(Error::Parse(format!("unexpected trailing line {extra:?}")));
            }
        }
        other => {
            return Err(Error::Parse(format!(
                "expected `indices` or `hexbits`, got {other:?}"
            )));
        }
    }
    Ok(set)
}

fn parse_header(line: Option<&str>, key: &str) -> Result<u64> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = line
        .trim()
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected `{key} <value>`, got {line:?}")))?;
    rest.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value in {line:?}")))
}

pub fn read_set_file(path: &std::path::Path) -> Result<TensorSet> {
    parse_set_file(&std::fs::read_to_string(path)?)
}

pub fn save_set_file(path: &std::path::Path, e: &TensorSet) -> Result<()> {
    std::fs::write(path, write_set_file(e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_round_trip() {
        let e = TensorSet::from_points(3, 2, &[0, 4, 8]).unwrap();
        let text = write_set_file(&e);
        assert_eq!(text, "alphabet 3\nn 2\nindices\n0\n4\n8\n");
        assert_eq!(parse_set_file(&text).unwrap(), e);

        let empty = TensorSet::empty(2, 1).unwrap();
        assert_eq!(parse_set_file(&write_set_file(&empty)).unwrap(), empty);
    }

    #[test]
    fn hexbits_round_trip() {
        let full = TensorSet::full(2, 7).unwrap();
        let text = write_set_file(&full);
        assert_eq!(text, format!("alphabet 2\nn 7\nhexbits\n{}\n", "f".repeat(32)));
        assert_eq!(parse_set_file(&text).unwrap(), full);

        let mut e = TensorSet::full(3, 4).unwrap();
        e.remove(0);
        e.remove(77);
        assert_eq!(parse_set_file(&write_set_file(&e)).unwrap(), e);
    }

    #[test]
    fn hexbits_least_significant_index_first() {
        let e = parse_set_file("alphabet 2\nn 2\nhexbits\n5\n").unwrap();
        assert_eq!(e.iter().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(parse_set_file("alphabet 2\nn 2\nindices\n4\n").is_err());
        assert!(parse_set_file("alphabet 2\nn 2\nindices\n1\n1\n").is_err());
        assert!(parse_set_file("alphabet 2\nn 2\nhexbits\nff\n").is_err());
        assert!(parse_set_file("alphabet 2\nn 2\nhexbits\ng\n").is_err());
        assert!(parse_set_file("alphabet 2\nn 2\nbits\n").is_err());
        assert!(parse_set_file("n 2\nalphabet 2\nindices\n").is_err());
        assert!(parse_set_file("alphabet 2\n").is_err());
    }

    #[test]
    fn hexbits_size_not_multiple_of_four() {
        // Z_3^1 has 3 points; one hex char, top bit out of range.
        let e = parse_set_file("alphabet 3\nn 1\nhexbits\n5\n").unwrap();
        assert_eq!(e.iter().collect::<Vec<_>>(), vec![0, 2]);
        assert!(parse_set_file("alphabet 3\nn 1\nhexbits\n8\n").is_err());
    }
}

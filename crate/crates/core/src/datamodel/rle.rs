//! Row-major run-length text encoding for binary masks.
//!
//! A mask is written as space-separated decimal run lengths that alternate
//! between unset and set pixels, always starting with the unset run (which may
//! be `0`). `"2 3 1"` on a 6-pixel frame means two unset, three set, one unset.

use crate::error::{bail, Result};

pub fn encode(bits: &[bool]) -> String {
    let mut runs: Vec<usize> = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    // a trailing empty unset run only appears for zero-length input
    let parts: Vec<String> = runs.iter().map(|r| r.to_string()).collect();
    parts.join(" ")
}

/// Decode into exactly `len` pixels.
pub fn decode(text: &str, len: usize) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(len);
    let mut value = false;
    for tok in text.split_ascii_whitespace() {
        let run: usize = match tok.parse() {
            Ok(r) => r,
            Err(_) => bail!(Format, "run length {tok:?} is not a non-negative integer"),
        };
        if out.len() + run > len {
            bail!(Format, "run lengths exceed mask size {len}");
        }
        out.extend(std::iter::repeat_n(value, run));
        value = !value;
    }
    if out.len() != len {
        bail!(Format, "run lengths cover {} pixels, mask has {len}", out.len());
    }
    Ok(out)
}

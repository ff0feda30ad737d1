use std::path::Path;

use anyhow::{bail, Context, Result};
use sparsefit::montecarlo::builtin_distribution;
use sparsefit::{CountVector, ProbVector};

/// Splits a vector file into tokens. Entries may be separated by commas,
/// semicolons or whitespace; `#` starts a comment.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().flat_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("");
        line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(move |t| (i + 1, t))
    })
}

pub fn parse_counts(text: &str) -> Result<CountVector> {
    let counts = tokens(text)
        .map(|(line, t)| {
            t.parse::<u64>()
                .with_context(|| format!("line {line}: `{t}` is not a nonnegative integer count"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CountVector::new(counts)?)
}

/// Nonnegative weights, normalized to sum to one.
pub fn parse_weights(text: &str) -> Result<ProbVector> {
    let weights = tokens(text)
        .map(|(line, t)| match t.parse::<f64>() {
            Ok(w) if w.is_finite() && w >= 0.0 => Ok(w),
            _ => bail!("line {line}: `{t}` is not a nonnegative weight"),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbVector::from_weights(&weights)?)
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn utf8(bytes: &[u8], path: &Path) -> Result<String> {
    String::from_utf8(bytes.to_vec()).with_context(|| format!("{} is not UTF-8", path.display()))
}

/// A built-in distribution name (`f1`..`f4`) or a weights file.
pub fn distribution(spec: &str) -> Result<(ProbVector, Vec<u8>)> {
    if let Ok(p) = builtin_distribution(spec) {
        return Ok((p, spec.as_bytes().to_vec()));
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("`{spec}` is neither a built-in distribution (f1..f4) nor a readable file");
    }
    let bytes = read(path)?;
    let p = parse_weights(&utf8(&bytes, path)?).with_context(|| format!("in {spec}"))?;
    Ok((p, bytes))
}

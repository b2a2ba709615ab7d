//! Finite joint sources, the three example families, and block sampling.

use std::fmt;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Joint pmf over `X x Y`, stored row-major (x-major).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return domain(format!("alphabet sizes must be at least 2, got {nx}x{ny}"));
        }
        if nx > 255 || ny > 255 {
            return domain("alphabet sizes above 255 are not supported");
        }
        if probs.len() != nx * ny {
            return domain(format!(
                "expected {} probabilities, got {}",
                nx * ny,
                probs.len()
            ));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return domain(format!(
                "probabilities must be finite and non-negative, got {p}"
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { nx, ny, probs })
    }

    /// Builds from rows indexed by x.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return domain("ragged probability matrix");
        }
        Self::new(nx, ny, rows.concat())
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    /// Row-major probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.p(x, y)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|y| (0..self.nx).map(|x| self.p(x, y)).sum())
            .collect()
    }

    /// The same source with the roles of X and Y exchanged.
    pub fn transposed(&self) -> JointPmf {
        let mut probs = Vec::with_capacity(self.probs.len());
        for y in 0..self.ny {
            for x in 0..self.nx {
                probs.push(self.p(x, y));
            }
        }
        JointPmf {
            nx: self.ny,
            ny: self.nx,
            probs,
        }
    }
}

impl fmt::Display for JointPmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 0..self.nx {
            let row: Vec<String> = (0..self.ny).map(|y| format!("{}", self.p(x, y))).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Doubly symmetric binary source with crossover `p`.
pub fn make_dsbs(p: f64) -> Result<JointPmf> {
    if !(0.0..=0.5).contains(&p) {
        return domain(format!("dsbs needs p in [0, 1/2], got {p}"));
    }
    let d = (1.0 - p) / 2.0;
    let o = p / 2.0;
    JointPmf::new(2, 2, vec![d, o, o, d])
}

/// Uniform X through a Z-channel that flips 1 to 0 with probability `delta`.
pub fn make_zchannel(delta: f64) -> Result<JointPmf> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("zchannel needs delta in (0, 1), got {delta}"));
    }
    JointPmf::new(2, 2, vec![0.5, 0.0, delta / 2.0, (1.0 - delta) / 2.0])
}

/// `P(0,0) = 1 - 3p`, the other three cells `p`.
pub fn make_asymmetric(p: f64) -> Result<JointPmf> {
    let ok = (p > 0.0 && p < 0.25) || (p > 0.25 && p < 1.0 / 3.0);
    if !ok {
        return domain(format!("asym needs p in (0, 1/4) or (1/4, 1/3), got {p}"));
    }
    JointPmf::new(2, 2, vec![1.0 - 3.0 * p, p, p, p])
}

/// Parses `dsbs:p=<f>`, `zchannel:delta=<f>`, `asym:p=<f>` or `custom:<path>`.
///
/// A custom CSV holds one row per x value; a single line with a square
/// number of entries is read as a square matrix.
pub fn parse_source(desc: &str) -> Result<JointPmf> {
    let (kind, rest) = desc
        .split_once(':')
        .ok_or_else(|| Error::Domain(format!("malformed source descriptor `{desc}`")))?;
    match kind {
        "dsbs" => make_dsbs(param(rest, "p")?),
        "zchannel" => make_zchannel(param(rest, "delta")?),
        "asym" => make_asymmetric(param(rest, "p")?),
        "custom" => read_custom(Path::new(rest)),
        _ => domain(format!("unknown source family `{kind}`")),
    }
}

fn param(rest: &str, key: &str) -> Result<f64> {
    let (k, v) = rest
        .split_once('=')
        .ok_or_else(|| Error::Domain(format!("expected `{key}=<value>`, got `{rest}`")))?;
    if k.trim() != key {
        return domain(format!("expected parameter `{key}`, got `{k}`"));
    }
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Domain(format!("`{v}` is not a number")))
}

fn read_custom(path: &Path) -> Result<JointPmf> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("`{s}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() == 1 {
        let flat = rows.pop().unwrap_or_default();
        let side = (flat.len() as f64).sqrt().round() as usize;
        if side * side != flat.len() {
            return domain("single-line custom pmf must have a square number of entries");
        }
        return JointPmf::new(side, side, flat);
    }
    JointPmf::from_rows(&rows)
}

/// A reproducible sequence of block pairs `(X_k, Y_k)`, `k = 1..`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceStream {
    pub seed: u64,
    pub n: usize,
    /// `x[k-1]` is block `k`.
    pub x: Vec<Vec<u8>>,
    pub y: Vec<Vec<u8>>,
}

impl SourceStream {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Symbols of blocks `lo..=hi` (1-based) on one side, concatenated.
    pub fn window_x(&self, lo: usize, hi: usize) -> Vec<u8> {
        self.x[lo - 1..hi].concat()
    }

    pub fn window_y(&self, lo: usize, hi: usize) -> Vec<u8> {
        self.y[lo - 1..hi].concat()
    }
}

/// Draws `count` i.i.d. block pairs of length `n`.
pub fn sample_blocks(pmf: &JointPmf, n: usize, count: usize, seed: u64) -> Result<SourceStream> {
    if n == 0 || count == 0 {
        return domain("n and count must be positive");
    }
    let mut cdf = Vec::with_capacity(pmf.probs.len());
    let mut acc = 0.0;
    for &p in &pmf.probs {
        acc += p;
        cdf.push(acc);
    }
    // Guard against rounding in the last cumulative value.
    let last = pmf
        .probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(pmf.probs.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(count);
    let mut y = Vec::with_capacity(count);
    for _ in 0..count {
        let mut bx = Vec::with_capacity(n);
        let mut by = Vec::with_capacity(n);
        for _ in 0..n {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let idx = cdf.iter().position(|&c| u < c).unwrap_or(last).min(last);
            bx.push((idx / pmf.ny) as u8);
            by.push((idx % pmf.ny) as u8);
        }
        x.push(bx);
        y.push(by);
    }
    Ok(SourceStream { seed, n, x, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dsbs_entries() {
        let p = make_dsbs(0.11).unwrap();
        let want = [0.445, 0.055, 0.055, 0.445];
        for (a, b) in p.probs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let p0 = make_dsbs(0.0).unwrap();
        assert_eq!(p0.probs(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(make_dsbs(0.5).unwrap().probs(), &[0.25; 4]);
        assert!(make_dsbs(0.51).is_err());
        assert!(make_dsbs(-0.1).is_err());
    }

    #[test]
    fn zchannel_entries() {
        let z = make_zchannel(0.6).unwrap();
        let want = [0.5, 0.0, 0.3, 0.2];
        for (a, b) in z.probs().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(make_zchannel(0.5).unwrap().probs(), &[0.5, 0.0, 0.25, 0.25]);
        for d in [0.1, 0.3, 0.9] {
            assert_eq!(make_zchannel(d).unwrap().p(0, 1), 0.0);
        }
        assert!(make_zchannel(0.0).is_err());
        assert!(make_zchannel(1.0).is_err());
    }

    #[test]
    fn asymmetric_entries() {
        let a = make_asymmetric(0.1).unwrap();
        for (v, w) in a.probs().iter().zip([0.7, 0.1, 0.1, 0.1]) {
            assert!((v - w).abs() < 1e-15);
        }
        let b = make_asymmetric(0.3).unwrap();
        for (v, w) in b.probs().iter().zip([0.1, 0.3, 0.3, 0.3]) {
            assert!((v - w).abs() < 1e-15);
        }
        assert!(make_asymmetric(0.25).is_err());
        assert!(make_asymmetric(0.0).is_err());
        assert!(make_asymmetric(1.0 / 3.0).is_err());
    }

    #[test]
    fn invalid_pmfs_rejected() {
        assert!(JointPmf::new(1, 2, vec![0.5, 0.5]).is_err());
        assert!(JointPmf::new(2, 2, vec![0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(JointPmf::new(2, 2, vec![0.25, 0.25, 0.25, 0.2]).is_err());
        assert!(JointPmf::new(2, 2, vec![0.25; 3]).is_err());
    }

    #[test]
    fn descriptors() {
        assert_eq!(
            parse_source("dsbs:p=0.11").unwrap(),
            make_dsbs(0.11).unwrap()
        );
        assert_eq!(
            parse_source("zchannel:delta=0.6").unwrap(),
            make_zchannel(0.6).unwrap()
        );
        assert_eq!(
            parse_source("asym:p=0.1").unwrap(),
            make_asymmetric(0.1).unwrap()
        );
        assert!(parse_source("dsbs:q=0.1").is_err());
        assert!(parse_source("gauss:s=1").is_err());
        assert!(parse_source("dsbs").is_err());
    }

    #[test]
    fn point_mass_gives_zero_blocks() {
        let pmf = JointPmf::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = sample_blocks(&pmf, 16, 5, 9).unwrap();
        assert!(s.x.iter().chain(&s.y).all(|b| b.iter().all(|&v| v == 0)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let pmf = make_dsbs(0.2).unwrap();
        let a = sample_blocks(&pmf, 7, 11, 42).unwrap();
        let b = sample_blocks(&pmf, 7, 11, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_blocks(&pmf, 7, 11, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_frequencies() {
        let pmf = make_dsbs(0.5).unwrap();
        let s = sample_blocks(&pmf, 1000, 1, 5).unwrap();
        let mut counts = [0usize; 4];
        for (a, b) in s.x[0].iter().zip(&s.y[0]) {
            counts[(*a as usize) * 2 + *b as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1000.0 - 0.25).abs() < 0.05);
        }
    }

    #[test]
    fn zero_cells_never_sampled() {
        let pmf = make_zchannel(0.4).unwrap();
        let s = sample_blocks(&pmf, 500, 4, 1).unwrap();
        for (bx, by) in s.x.iter().zip(&s.y) {
            for (a, b) in bx.iter().zip(by) {
                assert!(!(*a == 0 && *b == 1));
            }
        }
    }
}

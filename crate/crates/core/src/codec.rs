//! Seeded random binning and the backtracking suffix-entropy decoder.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hasher;

use siphasher::sip128::{Hasher128, SipHasher13};

use crate::error::{domain, Error, Result};
use crate::info_measures::{conditional_entropy_from_counts, entropy_from_counts};
use crate::source_model::SourceStream;
use crate::stream_schedule::{BinFamily, BlockRange, Schedule, Stage};

/// Default bound on enumerated candidates per stage.
pub const DEFAULT_CAP: u64 = 1 << 24;

/// Scores closer than this are treated as equal.
pub const SCORE_TOL: f64 = 1e-12;

/// Which encoder: X (first source) or Y (second source).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    X,
    Y,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::X => "X",
            Side::Y => "Y",
        })
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Shared-seed binning maps `f_tau` (X side, `n1` bins) and `g_tau`
/// (Y side, `n2` bins).
///
/// A window is hashed with keyed SipHash-1-3 (128-bit output) and reduced
/// modulo the bin count. When the bin count is at least the number of
/// possible windows, a keyed affine bijection is used instead so that each
/// bin holds at most one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinningCode {
    seed: u64,
    n1: u64,
    n2: u64,
    n: usize,
    nx: usize,
    ny: usize,
    schedule: Schedule,
}

impl BinningCode {
    pub fn new(
        seed: u64,
        n1: u64,
        n2: u64,
        n: usize,
        nx: usize,
        ny: usize,
        schedule: Schedule,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return domain("bin counts must be at least 1");
        }
        if n == 0 {
            return domain("block length must be positive");
        }
        if !(2..=255).contains(&nx) || !(2..=255).contains(&ny) {
            return domain("alphabet sizes must lie in [2, 255]");
        }
        Ok(Self {
            seed,
            n1,
            n2,
            n,
            nx,
            ny,
            schedule,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn bins(&self, side: Side) -> u64 {
        match side {
            Side::X => self.n1,
            Side::Y => self.n2,
        }
    }

    pub fn alphabet(&self, side: Side) -> usize {
        match side {
            Side::X => self.nx,
            Side::Y => self.ny,
        }
    }

    fn keys(&self, side: Side) -> (u64, u64) {
        let tag = match side {
            Side::X => 0x5846_5F74_6175_0001,
            Side::Y => 0x5946_5F74_6175_0002,
        };
        (self.seed, splitmix64(self.seed ^ tag))
    }

    /// Bin of `window` (symbols of `encode_window(tau)`, concatenated).
    pub fn bin(&self, side: Side, tau: usize, window: &[u8]) -> Result<u64> {
        if tau < 1 {
            return domain("encoder index must be at least 1");
        }
        let want = self.schedule.window_of(tau).len() * self.n;
        if window.len() != want {
            return domain(format!(
                "window for index {tau} must hold {want} symbols, got {}",
                window.len()
            ));
        }
        let a = self.alphabet(side);
        if let Some(s) = window.iter().find(|&&s| s as usize >= a) {
            return domain(format!("symbol {s} outside alphabet of size {a}"));
        }
        Ok(self.bin_raw(side, tau, window))
    }

    pub(crate) fn bin_raw(&self, side: Side, tau: usize, window: &[u8]) -> u64 {
        let nb = self.bins(side);
        if nb == 1 {
            return 0;
        }
        let (k0, k1) = self.keys(side);
        let a = self.alphabet(side) as u128;
        let space = u32::try_from(window.len())
            .ok()
            .and_then(|len| a.checked_pow(len));
        match space {
            Some(space) if space <= nb as u128 => {
                let mut h = SipHasher13::new_with_keys(k0, k1);
                h.write_u64(tau as u64);
                h.write_u64(window.len() as u64);
                h.write_u8(0xA7);
                let c = h.finish128();
                let mut mul = 1 + c.h1 % (nb - 1);
                while gcd(mul, nb) != 1 {
                    mul = 1 + mul % (nb - 1);
                }
                let idx = window.iter().fold(0u128, |acc, &s| acc * a + s as u128);
                ((mul as u128 * idx + c.h2 as u128) % nb as u128) as u64
            }
            _ => {
                let mut h = SipHasher13::new_with_keys(k0, k1);
                h.write_u64(tau as u64);
                h.write_u64(window.len() as u64);
                h.write(window);
                (h.finish128().as_u128() % nb as u128) as u64
            }
        }
    }
}

/// Codewords `(M1_tau, M2_tau)` for `tau = 1..=upto`; entry `tau-1`.
pub fn encode_stream(
    code: &BinningCode,
    stream: &SourceStream,
    upto: usize,
) -> Result<Vec<(u64, u64)>> {
    if stream.len() < upto {
        return domain(format!("stream has {} blocks, need {upto}", stream.len()));
    }
    if stream.n != code.n {
        return domain("stream block length differs from the code's");
    }
    (1..=upto)
        .map(|tau| {
            let w = code.schedule.window_of(tau);
            let m1 = code.bin(Side::X, tau, &stream.window_x(w.lo, w.hi))?;
            let m2 = code.bin(Side::Y, tau, &stream.window_y(w.lo, w.hi))?;
            Ok((m1, m2))
        })
        .collect()
}

/// A weighted suffix-entropy value with the difference indices it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuffixScore {
    pub l: usize,
    pub m: usize,
    pub value: f64,
}

// Scores of flattened symbol windows with W blocks of n symbols each.
pub(crate) struct Scorer {
    n: usize,
    w: usize,
    nx: usize,
    ny: usize,
    counts: Vec<u32>,
    tmp: Vec<u32>,
}

impl Scorer {
    pub(crate) fn new(n: usize, w: usize, nx: usize, ny: usize) -> Self {
        Self {
            n,
            w,
            nx,
            ny,
            counts: vec![0; nx * ny],
            tmp: vec![0; nx * ny],
        }
    }

    fn fill(&mut self, xs: &[u8], ys: &[u8], from: usize, to: usize) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for i in from * self.n..to * self.n {
            self.counts[xs[i] as usize * self.ny + ys[i] as usize] += 1;
        }
    }

    fn joint(&mut self, xs: &[u8], ys: &[u8], from: usize, to: usize) -> f64 {
        self.fill(xs, ys, from, to);
        entropy_from_counts(&self.counts)
    }

    fn cond_x(&mut self, xs: &[u8], ys: &[u8], from: usize, to: usize) -> f64 {
        self.fill(xs, ys, from, to);
        conditional_entropy_from_counts(&self.counts, self.nx, self.ny)
    }

    fn cond_y(&mut self, xs: &[u8], ys: &[u8], from: usize, to: usize) -> f64 {
        self.fill(xs, ys, from, to);
        for x in 0..self.nx {
            for y in 0..self.ny {
                self.tmp[y * self.nx + x] = self.counts[x * self.ny + y];
            }
        }
        conditional_entropy_from_counts(&self.tmp, self.ny, self.nx)
    }

    /// `l`, `m` are 0-based block offsets; `None` means no difference on
    /// that side, which reduces to the `l == m` branch at the other index.
    pub(crate) fn score(
        &mut self,
        xs: &[u8],
        ys: &[u8],
        l: Option<usize>,
        m: Option<usize>,
    ) -> f64 {
        let (l, m) = match (l, m) {
            (Some(l), Some(m)) => (l, m),
            (Some(l), None) => (l, l),
            (None, Some(m)) => (m, m),
            (None, None) => (0, 0),
        };
        let w = self.w;
        if l == m {
            self.joint(xs, ys, l, w)
        } else if l < m {
            let span = (w - l) as f64;
            let a = (m - l) as f64 / span;
            let b = (w - m) as f64 / span;
            a * self.cond_x(xs, ys, l, m) + b * self.joint(xs, ys, m, w)
        } else {
            let span = (w - m) as f64;
            let a = (l - m) as f64 / span;
            let b = (w - l) as f64 / span;
            a * self.cond_y(xs, ys, m, l) + b * self.joint(xs, ys, l, w)
        }
    }
}

/// Weighted empirical suffix entropy of blocks `a..=b` from offsets `l`, `m`
/// (absolute block indices). `x_blocks[0]` is block `a`.
pub fn suffix_entropy(
    l: usize,
    m: usize,
    a: usize,
    b: usize,
    x_blocks: &[Vec<u8>],
    y_blocks: &[Vec<u8>],
) -> Result<SuffixScore> {
    if a > b || l < a || m < a || l > b || m > b {
        return domain(format!("need a <= l, m <= b, got a={a} b={b} l={l} m={m}"));
    }
    let w = b - a + 1;
    if x_blocks.len() != w || y_blocks.len() != w {
        return domain(format!("expected {w} blocks per side"));
    }
    let n = x_blocks[0].len();
    if n == 0 || x_blocks.iter().chain(y_blocks).any(|blk| blk.len() != n) {
        return domain("blocks must share a positive length");
    }
    let xs = x_blocks.concat();
    let ys = y_blocks.concat();
    let nx = *xs.iter().max().unwrap_or(&0) as usize + 1;
    let ny = *ys.iter().max().unwrap_or(&0) as usize + 1;
    let mut sc = Scorer::new(n, w, nx, ny);
    let value = sc.score(&xs, &ys, Some(l - a), Some(m - a));
    Ok(SuffixScore { l, m, value })
}

/// First differing block on each side (0-based offsets into the slices).
pub fn first_difference(
    true_x: &[Vec<u8>],
    true_y: &[Vec<u8>],
    cand_x: &[Vec<u8>],
    cand_y: &[Vec<u8>],
) -> (Option<usize>, Option<usize>) {
    let fd = |a: &[Vec<u8>], b: &[Vec<u8>]| a.iter().zip(b).position(|(p, q)| p != q);
    (fd(true_x, cand_x), fd(true_y, cand_y))
}

/// Per-stage decoding record.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub family: BinFamily,
    pub targets: BlockRange,
    pub codewords: BlockRange,
    /// log2 of the unconstrained joint candidate count.
    pub space_log2: f64,
    pub x_survivors: u64,
    pub y_survivors: u64,
    /// Joint candidates satisfying every bin and prefix constraint.
    pub survivors: u64,
    /// Winning target blocks (x then y), when a winner exists.
    pub winner: Option<(Vec<Vec<u8>>, Vec<Vec<u8>>)>,
    pub winner_score: Option<f64>,
    pub error: bool,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodeTrace {
    pub stages: Vec<StageTrace>,
}

/// Decoder output for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub k: usize,
    /// `(X_k, Y_k)` estimate; `None` on decoding failure.
    pub estimate: Option<(Vec<u8>, Vec<u8>)>,
    pub trace: DecodeTrace,
}

struct SideSpace {
    vals: usize,
    // symbols of each block value, n per value
    syms: Vec<u8>,
}

impl SideSpace {
    fn new(alphabet: usize, n: usize, cap: u64, label: &str) -> Result<Self> {
        let vals = (alphabet as u64)
            .checked_pow(n as u32)
            .filter(|v| *v <= cap)
            .ok_or_else(|| Error::CapExceeded {
                stage: label.to_string(),
                required: (alphabet as u64).saturating_pow(n as u32),
                cap,
            })? as usize;
        let mut syms = vec![0u8; vals * n];
        for v in 0..vals {
            let mut r = v;
            for i in (0..n).rev() {
                syms[v * n + i] = (r % alphabet) as u8;
                r /= alphabet;
            }
        }
        Ok(Self { vals, syms })
    }

    fn block(&self, v: u32, n: usize) -> &[u8] {
        &self.syms[v as usize * n..(v as usize + 1) * n]
    }
}

struct Enumerator<'a> {
    code: &'a BinningCode,
    side: Side,
    stage: &'a Stage,
    cws: &'a [u64],
    space: &'a SideSpace,
    cap: u64,
    nodes: u64,
    buf: Vec<u8>,
    assign: Vec<u32>,
    out: Vec<u32>,
    label: &'a str,
}

impl Enumerator<'_> {
    fn run(&mut self, depth: usize) -> Result<()> {
        let n = self.code.n;
        let free = self.stage.free();
        let blk = free.lo + depth;
        let off = (blk - self.stage.window.lo) * n;
        for v in 0..self.space.vals as u32 {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::CapExceeded {
                    stage: self.label.to_string(),
                    required: self.nodes,
                    cap: self.cap,
                });
            }
            self.buf[off..off + n].copy_from_slice(self.space.block(v, n));
            if self.stage.codewords.contains(blk) {
                let w = self.code.schedule.window_of(blk);
                debug_assert!(w.lo >= self.stage.window.lo);
                let lo = (w.lo - self.stage.window.lo) * n;
                let bin = self.code.bin_raw(self.side, blk, &self.buf[lo..off + n]);
                if bin != self.cws[blk - 1] {
                    continue;
                }
            }
            self.assign[depth] = v;
            if depth + 1 == free.len() {
                self.out.extend_from_slice(&self.assign);
            } else {
                self.run(depth + 1)?;
            }
        }
        Ok(())
    }
}

fn stage_label(stage: &Stage) -> String {
    format!(
        "{} targets {} codewords {}",
        stage.family, stage.targets, stage.codewords
    )
}

type Estimates = HashMap<usize, (Vec<u8>, Vec<u8>)>;

struct StageResult {
    trace: StageTrace,
    commit: Option<Vec<(usize, Vec<u8>, Vec<u8>)>>,
}

struct Cands<'a> {
    xc: &'a [u32],
    yc: &'a [u32],
    cy: usize,
    wlen: usize,
    n: usize,
    sx: &'a SideSpace,
    sy: &'a SideSpace,
    scorer: Scorer,
    bx: Vec<u8>,
    by: Vec<u8>,
}

impl Cands<'_> {
    fn xrow(&self, c: usize) -> &[u32] {
        let i = c / self.cy;
        &self.xc[i * self.wlen..(i + 1) * self.wlen]
    }

    fn yrow(&self, c: usize) -> &[u32] {
        let i = c % self.cy;
        &self.yc[i * self.wlen..(i + 1) * self.wlen]
    }

    fn score(&mut self, c: usize, l: Option<usize>, m: Option<usize>) -> f64 {
        let (i, j) = (c / self.cy, c % self.cy);
        self.bx.clear();
        self.by.clear();
        for d in 0..self.wlen {
            self.bx
                .extend_from_slice(self.sx.block(self.xc[i * self.wlen + d], self.n));
            self.by
                .extend_from_slice(self.sy.block(self.yc[j * self.wlen + d], self.n));
        }
        self.scorer.score(&self.bx, &self.by, l, m)
    }

    /// Whether `w` weakly beats every other candidate at their pairwise
    /// first differences, and which candidates tie with it. Stops at the
    /// first loss.
    fn check(&mut self, w: usize, total: usize) -> (bool, Vec<usize>) {
        let wl = self.wlen;
        let mut table = vec![f64::NAN; (wl + 1) * (wl + 1)];
        for l in 0..=wl {
            for m in 0..=wl {
                if l < wl || m < wl {
                    table[l * (wl + 1) + m] =
                        self.score(w, (l < wl).then_some(l), (m < wl).then_some(m));
                }
            }
        }
        let fd = |a: &[u32], b: &[u32]| a.iter().zip(b).position(|(p, q)| p != q);
        let mut ties = Vec::new();
        for c in 0..total {
            if c == w {
                continue;
            }
            let l = fd(self.xrow(w), self.xrow(c));
            let m = fd(self.yrow(w), self.yrow(c));
            let sw = table[l.unwrap_or(wl) * (wl + 1) + m.unwrap_or(wl)];
            let sc = self.score(c, l, m);
            if sw > sc + SCORE_TOL {
                return (false, ties);
            }
            if sc <= sw + SCORE_TOL {
                ties.push(c);
            }
        }
        (true, ties)
    }
}

fn run_stage(
    code: &BinningCode,
    stage: &Stage,
    codewords: &[(u64, u64)],
    est: &Estimates,
    cap: u64,
    spaces: (&SideSpace, &SideSpace),
) -> Result<StageResult> {
    let n = code.n;
    let label = stage_label(stage);
    let free = stage.free();
    let wlen = free.len();
    let mut prefix_x = Vec::new();
    let mut prefix_y = Vec::new();
    for b in stage.prefix().iter() {
        let (ex, ey) = est
            .get(&b)
            .ok_or_else(|| Error::Domain(format!("{label}: block {b} has no estimate")))?;
        prefix_x.extend_from_slice(ex);
        prefix_y.extend_from_slice(ey);
    }
    let enumerate = |side: Side, prefix: &[u8], space: &SideSpace| -> Result<Vec<u32>> {
        let cws: Vec<u64> = codewords
            .iter()
            .map(|c| if side == Side::X { c.0 } else { c.1 })
            .collect();
        let mut buf = vec![0u8; stage.window.len() * n];
        buf[..prefix.len()].copy_from_slice(prefix);
        let mut e = Enumerator {
            code,
            side,
            stage,
            cws: &cws,
            space,
            cap,
            nodes: 0,
            buf,
            assign: vec![0; wlen],
            out: Vec::new(),
            label: &label,
        };
        e.run(0)?;
        Ok(e.out)
    };
    let xc = enumerate(Side::X, &prefix_x, spaces.0)?;
    let yc = enumerate(Side::Y, &prefix_y, spaces.1)?;
    let cx = xc.len() / wlen;
    let cy = yc.len() / wlen;
    let joint = (cx as u64).saturating_mul(cy as u64);
    if joint > cap {
        return Err(Error::CapExceeded {
            stage: label,
            required: joint,
            cap,
        });
    }
    let space_log2 = (wlen * n) as f64 * ((code.nx as f64).log2() + (code.ny as f64).log2());
    let mut trace = StageTrace {
        family: stage.family,
        targets: stage.targets,
        codewords: stage.codewords,
        space_log2,
        x_survivors: cx as u64,
        y_survivors: cy as u64,
        survivors: joint,
        winner: None,
        winner_score: None,
        error: true,
        tie: false,
    };
    if joint == 0 {
        return Ok(StageResult {
            trace,
            commit: None,
        });
    }

    let ntarget = stage.targets.len();
    let mut cs = Cands {
        xc: &xc,
        yc: &yc,
        cy,
        wlen,
        n,
        sx: spaces.0,
        sy: spaces.1,
        scorer: Scorer::new(n, wlen, code.nx, code.ny),
        bx: Vec::new(),
        by: Vec::new(),
    };
    let joint = joint as usize;
    let full: Vec<f64> = (0..joint).map(|c| cs.score(c, Some(0), Some(0))).collect();
    let mut order: Vec<usize> = (0..joint).collect();
    order.sort_by(|&a, &b| full[a].total_cmp(&full[b]).then(a.cmp(&b)));

    let mut found = None;
    for &w in &order {
        let (dom, ties) = cs.check(w, joint);
        if dom {
            found = Some((w, ties));
            break;
        }
    }
    let Some((first, ties)) = found else {
        return Ok(StageResult {
            trace,
            commit: None,
        });
    };
    // Lexicographically smallest dominant candidate; every dominant one ties with `first`.
    let mut winner = first;
    let mut winner_ties = ties.clone();
    for &c in ties.iter().filter(|&&c| c < first) {
        let (dom, t) = cs.check(c, joint);
        if dom && c < winner {
            winner = c;
            winner_ties = t;
        }
    }
    let xrow = |i: usize| &xc[i * wlen..(i + 1) * wlen];
    let yrow = |i: usize| &yc[i * wlen..(i + 1) * wlen];
    let (wx, wy) = (xrow(winner / cy), yrow(winner % cy));
    let tie = winner_ties.iter().any(|&c| {
        xrow(c / cy)[..ntarget] != wx[..ntarget] || yrow(c % cy)[..ntarget] != wy[..ntarget]
    });
    let to_blocks = |rows: &[u32], space: &SideSpace| -> Vec<Vec<u8>> {
        rows[..ntarget]
            .iter()
            .map(|&v| space.block(v, n).to_vec())
            .collect()
    };
    let tx = to_blocks(wx, spaces.0);
    let ty = to_blocks(wy, spaces.1);
    trace.winner_score = Some(full[winner]);
    trace.tie = tie;
    trace.error = tie;
    let commit = (!tie).then(|| {
        stage
            .targets
            .iter()
            .zip(tx.iter().zip(&ty))
            .map(|(b, (x, y))| (b, x.clone(), y.clone()))
            .collect()
    });
    trace.winner = Some((tx, ty));
    Ok(StageResult { trace, commit })
}

/// Decodes block `k` at time `T_k` from codewords `1..=T_k`
/// (`codewords[tau-1]`).
pub fn decode_block(
    code: &BinningCode,
    codewords: &[(u64, u64)],
    k: usize,
    cap: u64,
) -> Result<DecodeOutcome> {
    let plan = code.schedule.decode_plan(k)?;
    if codewords.len() < plan.decode_time {
        return domain(format!(
            "decoding block {k} needs {} codewords, got {}",
            plan.decode_time,
            codewords.len()
        ));
    }
    let sx = SideSpace::new(code.nx, code.n, cap, "block alphabet X")?;
    let sy = SideSpace::new(code.ny, code.n, cap, "block alphabet Y")?;
    let mut est = Estimates::new();
    let mut trace = DecodeTrace::default();
    for stage in &plan.stages {
        let r = run_stage(code, stage, codewords, &est, cap, (&sx, &sy))?;
        trace.stages.push(r.trace);
        match r.commit {
            Some(c) => {
                for (b, x, y) in c {
                    est.insert(b, (x, y));
                }
            }
            None => {
                return Ok(DecodeOutcome {
                    k,
                    estimate: None,
                    trace,
                })
            }
        }
    }
    let estimate = est.remove(&k);
    Ok(DecodeOutcome { k, estimate, trace })
}

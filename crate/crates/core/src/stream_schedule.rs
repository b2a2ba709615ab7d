//! Truncated-memory bookkeeping: schedule functions, encode windows and the
//! backtracking decode plan.

use std::fmt;

use crate::error::{domain, Result};

/// Inclusive range of 1-based block (or codeword) indices. Empty when
/// `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockRange {
    pub lo: usize,
    pub hi: usize,
}

impl BlockRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> usize {
        if self.hi >= self.lo {
            self.hi - self.lo + 1
        } else {
            0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, k: usize) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl fmt::Display for BlockRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{}]", self.lo, self.hi)
    }
}

/// Buffer sizes `psi` (max) and `omega` (min) and decoding delay `delay`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    psi: usize,
    omega: usize,
    delay: usize,
}

impl Schedule {
    pub fn new(psi: usize, omega: usize, delay: usize) -> Result<Self> {
        if delay < 1 {
            return domain("delay must be at least 1");
        }
        if omega < delay {
            return domain(format!(
                "need omega >= delay, got omega={omega}, delay={delay}"
            ));
        }
        if psi <= 2 * omega {
            return domain(format!("need psi > 2*omega, got psi={psi}, omega={omega}"));
        }
        Ok(Self { psi, omega, delay })
    }

    /// `psi = ceil(n^{1/2+delta})` raised until `psi > 2*omega`, and
    /// `omega = 2*delay`.
    pub fn asymptotic(n: usize, delay: usize, delta: f64) -> Result<Self> {
        if n == 0 || !(0.0..0.5).contains(&delta) {
            return domain("need n >= 1 and delta in [0, 1/2)");
        }
        let omega = 2 * delay;
        let raw = (n as f64).powf(0.5 + delta);
        // drop float fuzz such as 999.9999999999998 before rounding up
        let mut psi = (raw - 1e-9 * raw).ceil() as usize;
        psi = psi.max(2 * omega + 1);
        Self::new(psi, omega, delay)
    }

    pub fn psi(&self) -> usize {
        self.psi
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    fn period(&self) -> usize {
        self.psi - self.omega + 1
    }

    pub fn alpha(&self, q: usize) -> usize {
        self.period() * q + self.omega
    }

    pub fn beta(&self, q: usize) -> usize {
        self.period() * (q + 1) + self.omega - 1
    }

    pub fn t(&self, q: usize) -> usize {
        self.period() * q + 1
    }

    pub fn s_range(&self, q: usize) -> BlockRange {
        BlockRange::new(self.alpha(q), self.beta(q))
    }

    /// The `q` with `k` in `S(q)`; `None` for `k < omega`.
    pub fn q_of(&self, k: usize) -> Option<usize> {
        if k < self.omega {
            None
        } else {
            Some((k - self.omega) / self.period())
        }
    }

    /// Decoding time `T_k = k + T - 1`.
    pub fn decode_time(&self, k: usize) -> usize {
        k + self.delay - 1
    }

    /// `lambda_k = min(T_k, beta_q)`.
    pub fn lambda(&self, k: usize) -> Option<usize> {
        self.q_of(k).map(|q| self.decode_time(k).min(self.beta(q)))
    }

    /// Blocks the encoder at time `k` maps to its codeword.
    pub fn encode_window(&self, k: usize) -> Result<BlockRange> {
        if k < 1 {
            return domain("block index must be at least 1");
        }
        Ok(self.window_of(k))
    }

    pub(crate) fn window_of(&self, k: usize) -> BlockRange {
        if k <= self.psi {
            return BlockRange::new(1, k);
        }
        // k > psi >= beta_0 so q >= 1
        let q = (k - self.omega) / self.period();
        BlockRange::new(self.t(q), k)
    }

    /// Buffer contents after block `k` arrives; the buffer is the window.
    pub fn buffer_contents(&self, k: usize) -> Result<BlockRange> {
        self.encode_window(k)
    }

    /// Number of encoder indices whose window covers block `k`.
    pub fn codewords_per_block(&self, k: usize) -> Result<usize> {
        if k < 1 {
            return domain("block index must be at least 1");
        }
        let mut count = 0;
        let mut tau = k;
        loop {
            let w = self.window_of(tau);
            if w.lo > k {
                break;
            }
            count += 1;
            tau += 1;
        }
        Ok(count)
    }

    /// Stage list for decoding block `k` at time `T_k`.
    pub fn decode_plan(&self, k: usize) -> Result<DecodePlan> {
        if k < 1 {
            return domain("block index must be at least 1");
        }
        let tk = self.decode_time(k);
        let q = self.q_of(k);
        let mut stages = Vec::new();
        match q {
            Some(q) if q >= 2 => {
                let (tp, ap, bp) = (self.t(q - 1), self.alpha(q - 1), self.beta(q - 1));
                let (tq, aq, bq) = (self.t(q), self.alpha(q), self.beta(q));
                let lam = tk.min(bq);
                stages.push(Stage::new(BinFamily::B1, tp, ap, tp, ap, bp));
                for j in ap + 1..tq {
                    stages.push(Stage::new(BinFamily::B2, j, j, tp, j, bp));
                }
                for j in tq..=bp {
                    stages.push(Stage::new(BinFamily::B3, j, j, tp, j, lam));
                }
                if tk <= bq {
                    for j in aq..=k {
                        stages.push(Stage::new(BinFamily::B4, j, j, tq, j, tk));
                    }
                } else {
                    let tn = self.t(q + 1);
                    for j in aq..tn.min(k + 1) {
                        stages.push(Stage::new(BinFamily::B5, j, j, tq, j, bq));
                    }
                    for j in tn..=k {
                        stages.push(Stage::new(BinFamily::B6, j, j, tq, j, tk));
                    }
                }
            }
            _ => {
                for j in 1..=k {
                    stages.push(Stage::new(BinFamily::Init, j, j, 1, j, tk));
                }
            }
        }
        Ok(DecodePlan {
            k,
            decode_time: tk,
            q,
            stages,
        })
    }
}

/// Which bin definition a stage uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinFamily {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    /// Initialization-phase specialization (k < omega or q < 2).
    Init,
}

impl fmt::Display for BinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BinFamily::B1 => "B1",
            BinFamily::B2 => "B2",
            BinFamily::B3 => "B3",
            BinFamily::B4 => "B4",
            BinFamily::B5 => "B5",
            BinFamily::B6 => "B6",
            BinFamily::Init => "INIT",
        };
        f.write_str(s)
    }
}

/// One decoding step. Blocks `[window.lo, targets.lo-1]` come from earlier
/// estimates; blocks `[targets.lo, window.hi]` are free; codewords
/// `[codewords.lo, codewords.hi]` constrain the free blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub family: BinFamily,
    pub targets: BlockRange,
    pub window: BlockRange,
    pub codewords: BlockRange,
}

impl Stage {
    fn new(
        family: BinFamily,
        t_lo: usize,
        t_hi: usize,
        anchor: usize,
        cw_lo: usize,
        cw_hi: usize,
    ) -> Self {
        Self {
            family,
            targets: BlockRange::new(t_lo, t_hi),
            window: BlockRange::new(anchor, cw_hi),
            codewords: BlockRange::new(cw_lo, cw_hi),
        }
    }

    pub fn prefix(&self) -> BlockRange {
        BlockRange::new(self.window.lo, self.targets.lo - 1)
    }

    pub fn free(&self) -> BlockRange {
        BlockRange::new(self.targets.lo, self.window.hi)
    }
}

/// Ordered stages for one target block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodePlan {
    pub k: usize,
    pub decode_time: usize,
    pub q: Option<usize>,
    pub stages: Vec<Stage>,
}

/// Blocks decoded by a group of stages and the union of their codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageGroup {
    pub blocks: BlockRange,
    pub codewords: BlockRange,
}

impl DecodePlan {
    /// Three-step view for `q >= 2`: blocks before `t_q`, blocks
    /// `[t_q, k-1]`, then block `k`.
    pub fn coarse_groups(&self, sched: &Schedule) -> Vec<StageGroup> {
        let Some(q) = self.q.filter(|q| *q >= 2) else {
            return Vec::new();
        };
        let tq = sched.t(q);
        let spans: [(usize, usize); 3] =
            [(sched.t(q - 1), tq - 1), (tq, self.k - 1), (self.k, self.k)];
        spans
            .iter()
            .filter(|(lo, hi)| lo <= hi)
            .map(|&(lo, hi)| {
                let members: Vec<&Stage> = self
                    .stages
                    .iter()
                    .filter(|s| s.targets.lo >= lo && s.targets.hi <= hi)
                    .collect();
                let cw_lo = members.iter().map(|s| s.codewords.lo).min().unwrap_or(lo);
                let cw_hi = members.iter().map(|s| s.codewords.hi).max().unwrap_or(hi);
                StageGroup {
                    blocks: BlockRange::new(lo, hi),
                    codewords: BlockRange::new(cw_lo, cw_hi),
                }
            })
            .collect()
    }

    /// Every prerequisite block is produced by an earlier stage.
    pub fn prerequisites_closed(&self) -> bool {
        let mut done: Vec<usize> = Vec::new();
        for s in &self.stages {
            if !s.prefix().iter().all(|b| done.contains(&b)) {
                return false;
            }
            done.extend(s.targets.iter());
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> Schedule {
        Schedule::new(8, 3, 2).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        assert!(Schedule::new(5, 3, 2).is_err());
        assert!(Schedule::new(6, 3, 2).is_err());
        assert!(Schedule::new(7, 3, 4).is_err());
        assert!(Schedule::new(7, 3, 0).is_err());
        assert!(Schedule::new(7, 3, 3).is_ok());
    }

    #[test]
    fn schedule_functions() {
        let s = fig();
        assert_eq!((s.alpha(1), s.beta(1), s.t(1)), (9, 14, 7));
        assert_eq!(s.s_range(1), BlockRange::new(9, 14));
        assert_eq!((s.alpha(0), s.t(0)), (3, 1));
        for q in 0..50 {
            assert_eq!(s.beta(q) + 1, s.alpha(q + 1));
            assert_eq!(s.alpha(q), 6 * q + 3);
            assert_eq!(s.beta(q), 6 * q + 8);
            assert_eq!(s.t(q), 6 * q + 1);
        }
    }

    #[test]
    fn windows() {
        let s = fig();
        assert_eq!(s.encode_window(9).unwrap(), BlockRange::new(7, 9));
        assert_eq!(s.encode_window(5).unwrap(), BlockRange::new(1, 5));
        assert_eq!(s.encode_window(16).unwrap(), BlockRange::new(13, 16));
        assert_eq!(s.buffer_contents(16).unwrap(), BlockRange::new(13, 16));
        assert!(s.encode_window(0).is_err());
        for q in 1..10 {
            assert_eq!(s.window_of(s.alpha(q)).len(), s.omega());
        }
    }

    #[test]
    fn codeword_counts() {
        let s = fig();
        assert_eq!(s.codewords_per_block(7).unwrap(), 8);
        assert_eq!(s.codewords_per_block(6).unwrap(), 3);
        for k in 1..=80 {
            let c = s.codewords_per_block(k).unwrap();
            assert!((3..=8).contains(&c), "k={k} c={c}");
        }
    }

    #[test]
    fn figure_plan() {
        let s = fig();
        let p = s.decode_plan(16).unwrap();
        assert_eq!(p.decode_time, 17);
        assert_eq!(p.stages[0].family, BinFamily::B1);
        assert_eq!(p.stages[0].targets, BlockRange::new(7, 9));
        assert_eq!(p.stages[0].codewords, BlockRange::new(9, 14));
        assert_eq!(p.stages[0].targets.lo, s.t(1));
        assert_eq!(p.stages[0].codewords.len(), s.psi() - s.omega() + 1);
        let g = p.coarse_groups(&s);
        assert_eq!(
            g,
            vec![
                StageGroup {
                    blocks: BlockRange::new(7, 12),
                    codewords: BlockRange::new(9, 14)
                },
                StageGroup {
                    blocks: BlockRange::new(13, 15),
                    codewords: BlockRange::new(13, 17)
                },
                StageGroup {
                    blocks: BlockRange::new(16, 16),
                    codewords: BlockRange::new(16, 17)
                },
            ]
        );
        assert!(p.prerequisites_closed());
    }

    #[test]
    fn split_at_next_period() {
        // T_k > beta_q once the delay pushes past the period boundary
        let s = Schedule::new(8, 3, 3).unwrap();
        let p = s.decode_plan(20).unwrap();
        let fams: Vec<BinFamily> = p.stages.iter().map(|s| s.family).collect();
        assert!(fams.contains(&BinFamily::B5));
        assert!(fams.contains(&BinFamily::B6));
        assert!(!fams.contains(&BinFamily::B4));
        let b6 = p.stages.iter().find(|s| s.family == BinFamily::B6).unwrap();
        assert_eq!(b6.targets.lo, s.t(3));
        assert_eq!(b6.codewords.hi, 22);
    }

    #[test]
    fn plain_slepian_wolf() {
        let s = Schedule::new(3, 1, 1).unwrap();
        let p = s.decode_plan(1).unwrap();
        assert_eq!(p.stages.len(), 1);
        assert_eq!(p.stages[0].codewords, BlockRange::new(1, 1));
        assert_eq!(p.stages[0].family, BinFamily::Init);
        assert!(s.decode_plan(0).is_err());
    }

    #[test]
    fn asymptotic_helper() {
        let s = Schedule::asymptotic(100_000, 2, 0.1).unwrap();
        assert_eq!(s.psi(), 1000);
        assert_eq!(s.omega(), 4);
        let s = Schedule::asymptotic(4, 3, 0.1).unwrap();
        assert_eq!(s.psi(), 13);
    }
}

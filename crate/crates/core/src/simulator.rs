//! Monte Carlo estimation of per-block error rates.
//!
//! Reported `nu_hat` values are finite-n diagnostics. The moderate
//! deviations constants are limits as n grows and are not expected to
//! match at the block lengths exhaustive decoding allows.

use std::time::Instant;

use rayon::prelude::*;

use crate::codec::{decode_block, encode_stream, splitmix64, BinningCode, DEFAULT_CAP};
use crate::error::{domain, Result};
use crate::info_measures::{check_positive_dispersions, profile};
use crate::md_analysis::BoundaryTarget;
use crate::source_model::{sample_blocks, JointPmf};
use crate::stream_schedule::Schedule;

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_964;

/// How bin counts are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSpec {
    /// Bin counts given directly.
    Bins { n1: u64, n2: u64 },
    /// Rates in nats per symbol, `N = round(exp(n R))`.
    Rates { rx: f64, ry: f64 },
    /// `R = R* + theta xi` with `xi = n^{-t}`.
    Md { target: BoundaryTarget, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub pmf: JointPmf,
    pub n: usize,
    pub schedule: Schedule,
    pub rates: RateSpec,
    /// Number of decoded blocks L.
    pub blocks: usize,
    pub trials: usize,
    pub seed: u64,
    pub cap: u64,
}

impl SimConfig {
    pub fn new(
        pmf: JointPmf,
        n: usize,
        schedule: Schedule,
        rates: RateSpec,
        blocks: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            pmf,
            n,
            schedule,
            rates,
            blocks,
            trials,
            seed,
            cap: DEFAULT_CAP,
        }
    }

    /// `xi_n` when MD-parameterized.
    pub fn xi(&self) -> Option<f64> {
        match self.rates {
            RateSpec::Md { t, .. } => Some((self.n as f64).powf(-t)),
            _ => None,
        }
    }

    /// Bin counts `(N1, N2)`.
    pub fn bin_counts(&self) -> Result<(u64, u64)> {
        let to_bins = |r: f64| -> Result<u64> {
            let v = (self.n as f64 * r).exp().round();
            if !(v >= 1.0) || v >= u64::MAX as f64 {
                return domain(format!("rate {r} gives a bin count outside [1, 2^64)"));
            }
            Ok(v as u64)
        };
        match self.rates {
            RateSpec::Bins { n1, n2 } => {
                if n1 == 0 || n2 == 0 {
                    return domain("bin counts must be at least 1");
                }
                Ok((n1, n2))
            }
            RateSpec::Rates { rx, ry } => Ok((to_bins(rx)?, to_bins(ry)?)),
            RateSpec::Md { target, t } => {
                if !(t > 0.0 && t < 0.5) {
                    return domain(format!("xi exponent must lie in (0, 1/2), got {t}"));
                }
                let xi = (self.n as f64).powf(-t);
                Ok((
                    to_bins(target.rx + target.theta1 * xi)?,
                    to_bins(target.ry + target.theta2 * xi)?,
                ))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.blocks == 0 || self.trials == 0 {
            return domain("n, blocks and trials must be positive");
        }
        if matches!(self.rates, RateSpec::Md { .. })
            && !check_positive_dispersions(&profile(&self.pmf))
        {
            return domain("moderate-deviations rates need positive dispersions");
        }
        self.bin_counts()?;
        Ok(())
    }
}

/// Error statistics for one block index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStat {
    pub k: usize,
    pub errors: u64,
    pub trials: u64,
    pub eps_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n1: u64,
    pub n2: u64,
    pub per_block: Vec<BlockStat>,
    pub sup_eps: f64,
    /// Wilson interval of the block attaining the supremum.
    pub sup_ci: (f64, f64),
    /// `-ln(sup eps) / (n xi^2)`; present when MD-parameterized and
    /// `sup eps > 0`.
    pub nu_hat: Option<f64>,
    pub wall_secs: f64,
    pub mean_survivors: f64,
    pub max_survivors: u64,
}

/// Wilson score interval.
pub fn wilson(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

struct TrialOut {
    errors: Vec<bool>,
    survivors_sum: u64,
    stages: u64,
    survivors_max: u64,
}

fn run_trial(cfg: &SimConfig, n1: u64, n2: u64, i: u64) -> Result<TrialOut> {
    let trial_seed = cfg.seed ^ i;
    let source_seed = splitmix64(trial_seed ^ 0x736F_7572_6365);
    let code_seed = splitmix64(trial_seed ^ 0x636F_6465);
    let total = cfg.blocks + cfg.schedule.delay() - 1;
    let stream = sample_blocks(&cfg.pmf, cfg.n, total, source_seed)?;
    let code = BinningCode::new(
        code_seed,
        n1,
        n2,
        cfg.n,
        cfg.pmf.nx(),
        cfg.pmf.ny(),
        cfg.schedule,
    )?;
    let cw = encode_stream(&code, &stream, total)?;
    let mut out = TrialOut {
        errors: Vec::with_capacity(cfg.blocks),
        survivors_sum: 0,
        stages: 0,
        survivors_max: 0,
    };
    for k in 1..=cfg.blocks {
        let tk = cfg.schedule.decode_time(k);
        let d = decode_block(&code, &cw[..tk], k, cfg.cap)?;
        for s in &d.trace.stages {
            out.survivors_sum += s.survivors;
            out.survivors_max = out.survivors_max.max(s.survivors);
            out.stages += 1;
        }
        let ok = d
            .estimate
            .is_some_and(|(x, y)| x == stream.x[k - 1] && y == stream.y[k - 1]);
        out.errors.push(!ok);
    }
    Ok(out)
}

/// Runs all trials on the current rayon pool.
pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (n1, n2) = cfg.bin_counts()?;
    let results: Vec<Result<TrialOut>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, n1, n2, i))
        .collect();
    let mut counts = vec![0u64; cfg.blocks];
    let (mut ssum, mut stages, mut smax) = (0u64, 0u64, 0u64);
    for r in results {
        let t = r?;
        for (c, e) in counts.iter_mut().zip(&t.errors) {
            *c += *e as u64;
        }
        ssum += t.survivors_sum;
        stages += t.stages;
        smax = smax.max(t.survivors_max);
    }
    let trials = cfg.trials as u64;
    let per_block: Vec<BlockStat> = counts
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let (ci_lo, ci_hi) = wilson(e, trials);
            BlockStat {
                k: i + 1,
                errors: e,
                trials,
                eps_hat: e as f64 / trials as f64,
                ci_lo,
                ci_hi,
            }
        })
        .collect();
    let sup = per_block
        .iter()
        .max_by(|a, b| a.eps_hat.total_cmp(&b.eps_hat).then(b.k.cmp(&a.k)))
        .copied();
    let sup_eps = sup.map_or(0.0, |s| s.eps_hat);
    let sup_ci = sup.map_or((0.0, 1.0), |s| (s.ci_lo, s.ci_hi));
    let nu_hat = cfg
        .xi()
        .filter(|_| sup_eps > 0.0)
        .map(|xi| -sup_eps.ln() / (cfg.n as f64 * xi * xi));
    Ok(SimReport {
        n1,
        n2,
        per_block,
        sup_eps,
        sup_ci,
        nu_hat,
        wall_secs: start.elapsed().as_secs_f64(),
        mean_survivors: if stages > 0 {
            ssum as f64 / stages as f64
        } else {
            0.0
        },
        max_survivors: smax,
    })
}

/// Like [`run`] on a dedicated pool with `jobs` workers.
pub fn run_with_jobs(cfg: &SimConfig, jobs: usize) -> Result<SimReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| crate::error::Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| run(cfg))
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub n1: u64,
    pub n2: u64,
    pub delay: usize,
    pub sup_eps: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

fn row(label: String, delay: usize, r: &SimReport) -> SweepRow {
    SweepRow {
        label,
        n1: r.n1,
        n2: r.n2,
        delay,
        sup_eps: r.sup_eps,
        ci_lo: r.sup_ci.0,
        ci_hi: r.sup_ci.1,
    }
}

/// `sup_k eps_hat` at each rate point, other settings from `cfg`.
pub fn rate_sweep(cfg: &SimConfig, grid: &[RateSpec]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&rates| {
            let c = SimConfig {
                rates,
                ..cfg.clone()
            };
            let r = run(&c)?;
            Ok(row(format!("{:?}", rates), c.schedule.delay(), &r))
        })
        .collect()
}

/// `sup_k eps_hat` for each delay with `omega = 2T` and `psi` from `cfg`.
pub fn delay_sweep(cfg: &SimConfig, delays: &[usize]) -> Result<Vec<SweepRow>> {
    delays
        .iter()
        .map(|&t| {
            let schedule = Schedule::new(cfg.schedule.psi(), 2 * t, t)?;
            let c = SimConfig {
                schedule,
                ..cfg.clone()
            };
            let r = run(&c)?;
            Ok(row(format!("T={t}"), t, &r))
        })
        .collect()
}

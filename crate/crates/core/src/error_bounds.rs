//! Union bound on the block decoding error probability, evaluated in log
//! space.

use crate::codec::Side;
use crate::error::{domain, Result};
use crate::exponents::GallagerCurves;
use crate::source_model::JointPmf;
use crate::stream_schedule::Schedule;

/// Everything the bound depends on besides the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub schedule: Schedule,
    /// Rates in nats per symbol.
    pub rx: f64,
    pub ry: f64,
    pub nx: usize,
    pub ny: usize,
    /// Target block; must lie in `S(q)` with `q >= 2`.
    pub k: usize,
}

impl BoundInputs {
    pub fn new(
        pmf: &JointPmf,
        n: usize,
        schedule: Schedule,
        rx: f64,
        ry: f64,
        k: usize,
    ) -> Result<Self> {
        if n == 0 {
            return domain("n must be positive");
        }
        if !(rx >= 0.0 && ry >= 0.0 && rx.is_finite() && ry.is_finite()) {
            return domain("rates must be finite and non-negative");
        }
        let inputs = Self {
            n,
            schedule,
            rx,
            ry,
            nx: pmf.nx(),
            ny: pmf.ny(),
            k,
        };
        inputs.q()?;
        Ok(inputs)
    }

    pub fn q(&self) -> Result<usize> {
        match self.schedule.q_of(self.k) {
            Some(q) if q >= 2 => Ok(q),
            _ => domain(format!("block {} is not in S(q) with q >= 2", self.k)),
        }
    }

    /// Whether `T_k > beta_q`, the regime with families 5 and 6.
    pub fn split_regime(&self) -> bool {
        let q = self.q().unwrap_or(2);
        self.schedule.decode_time(self.k) > self.schedule.beta(q)
    }

    /// `ln(2 Psi^2 (n Psi + 1)^{7|X||Y|})`.
    pub fn log_prefactor(&self) -> f64 {
        let psi = self.schedule.psi() as f64;
        (2.0 * psi * psi).ln() + 7.0 * (self.nx * self.ny) as f64 * (self.n as f64 * psi + 1.0).ln()
    }
}

/// Rates seen by blocks `l`, `m` when only part of their codewords count:
/// `(R^l_X, R^m_Y, kappa_l, zeta_m)`.
pub fn truncated_rates(
    schedule: &Schedule,
    q: usize,
    l: usize,
    m: usize,
    rx: f64,
    ry: f64,
) -> Result<(f64, f64, f64, f64)> {
    if q < 1 {
        return domain("q must be at least 1");
    }
    let (lo, hi) = (schedule.t(q - 1), schedule.alpha(q - 1));
    if !(lo..=hi).contains(&l) || !(lo..=hi).contains(&m) {
        return domain(format!(
            "l and m must lie in [{lo}, {hi}], got l={l}, m={m}"
        ));
    }
    let span = (schedule.psi() - schedule.omega() + 1) as f64;
    let beta = schedule.beta(q - 1);
    let fl = span / (beta - l + 1) as f64;
    let fm = span / (beta - m + 1) as f64;
    let kappa = (1.0 - fl) * rx;
    let zeta = (1.0 - fm) * ry;
    Ok((rx - kappa, ry - zeta, kappa, zeta))
}

/// One family's contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyTerm {
    pub family: u8,
    pub log_bound: f64,
    /// Number of blocks multiplying `n` in the exponent.
    pub span: usize,
    /// Exponent per symbol (the smaller of the two for family 1).
    pub exponent: f64,
    /// Set for family 4, which is outside the analyzed regime.
    pub extrapolated: bool,
}

impl FamilyTerm {
    pub fn value(&self) -> f64 {
        self.log_bound.exp()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

pub fn family_bound(pmf: &JointPmf, family: u8, inputs: &BoundInputs) -> Result<FamilyTerm> {
    family_bound_with(&GallagerCurves::new(pmf), family, inputs)
}

pub(crate) fn family_bound_with(
    curves: &GallagerCurves,
    family: u8,
    inp: &BoundInputs,
) -> Result<FamilyTerm> {
    let q = inp.q()?;
    let s = &inp.schedule;
    let nf = inp.n as f64;
    let pre = inp.log_prefactor();
    let simple = |span: usize, extrapolated: bool| {
        let e = curves.min_both(inp.rx, inp.ry);
        FamilyTerm {
            family,
            log_bound: pre - nf * span as f64 * e,
            span,
            exponent: e,
            extrapolated,
        }
    };
    match family {
        1 => {
            let span = s.psi() - s.omega() + 1;
            let lo = s.t(q - 1);
            // Exponents are non-decreasing in both rates and the truncated
            // rates grow with l and m, so the worst pair is l = m = t_{q-1}.
            let (rl, rm, _, _) = truncated_rates(s, q, lo, lo, inp.rx, inp.ry)?;
            let e1 = curves.min_both(rl, rm);
            let e2 = curves
                .min_exponent_over_gamma(Side::X, rl, inp.ry)
                .value
                .min(curves.min_exponent_over_gamma(Side::Y, inp.rx, rm).value);
            let w = nf * span as f64;
            Ok(FamilyTerm {
                family,
                log_bound: log_add(pre - w * e1, pre - w * e2),
                span,
                exponent: e1.min(e2),
                extrapolated: false,
            })
        }
        2 | 5 => {
            if family == 5 && !inp.split_regime() {
                return domain("family 5 needs T_k > beta_q");
            }
            Ok(simple(s.omega(), false))
        }
        3 => Ok(simple(s.psi() - s.omega() + 2, false)),
        4 => {
            if inp.split_regime() {
                return domain("family 4 needs T_k <= beta_q");
            }
            Ok(simple(s.delay(), true))
        }
        6 => {
            if !inp.split_regime() {
                return domain("family 6 needs T_k > beta_q");
            }
            Ok(simple(s.delay(), false))
        }
        _ => domain(format!("unknown error family {family}")),
    }
}

/// Per-family terms and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundBreakdown {
    pub terms: Vec<FamilyTerm>,
    pub log_total: f64,
}

impl BoundBreakdown {
    /// The total as a probability bound, clamped to [0, 1].
    pub fn total_clamped(&self) -> f64 {
        self.log_total.exp().min(1.0)
    }

    /// Family with the largest term.
    pub fn dominant(&self) -> Option<&FamilyTerm> {
        self.terms
            .iter()
            .max_by(|a, b| a.log_bound.total_cmp(&b.log_bound))
    }
}

pub fn total_bound(pmf: &JointPmf, inputs: &BoundInputs) -> Result<BoundBreakdown> {
    let curves = GallagerCurves::new(pmf);
    let families: &[u8] = if inputs.split_regime() {
        &[1, 2, 3, 5, 6]
    } else {
        &[1, 2, 3, 4]
    };
    let terms = families
        .iter()
        .map(|&f| family_bound_with(&curves, f, inputs))
        .collect::<Result<Vec<_>>>()?;
    let log_total = terms
        .iter()
        .fold(f64::NEG_INFINITY, |acc, t| log_add(acc, t.log_bound));
    Ok(BoundBreakdown { terms, log_total })
}

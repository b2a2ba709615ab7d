//! Gallager-form source-coding exponents and their scalar optimizations.

use crate::codec::Side;
use crate::info_measures::profile;
use crate::optimize::{golden_max, golden_min};
use crate::source_model::JointPmf;

/// Optimizer tolerance in rho and gamma.
pub const OPT_TOL: f64 = 1e-10;

/// Precomputed logs of a pmf for fast evaluation of the three Gallager
/// functions. Read-only after construction.
#[derive(Debug, Clone)]
pub struct GallagerCurves {
    // (P(x,y), ln P(x,y)) over the support
    joint: Vec<(f64, f64)>,
    // per y: P_Y(y) and (P(x|y), ln P(x|y)) over the support
    cond_x: Vec<(f64, Vec<(f64, f64)>)>,
    cond_y: Vec<(f64, Vec<(f64, f64)>)>,
}

fn conditional_table(pmf: &JointPmf, given_y: bool) -> Vec<(f64, Vec<(f64, f64)>)> {
    let (outer, inner) = if given_y {
        (pmf.ny(), pmf.nx())
    } else {
        (pmf.nx(), pmf.ny())
    };
    let cell = |o: usize, i: usize| if given_y { pmf.p(i, o) } else { pmf.p(o, i) };
    (0..outer)
        .filter_map(|o| {
            let marg: f64 = (0..inner).map(|i| cell(o, i)).sum();
            if marg <= 0.0 {
                return None;
            }
            let terms = (0..inner)
                .map(|i| cell(o, i) / marg)
                .filter(|&q| q > 0.0)
                .map(|q| (q, q.ln()))
                .collect();
            Some((marg, terms))
        })
        .collect()
}

// ln sum_i q_i^s for a distribution q, accurate when s is near 1.
fn log_power_sum(terms: &[(f64, f64)], s: f64) -> f64 {
    let d: f64 = terms
        .iter()
        .map(|&(q, lq)| q * ((s - 1.0) * lq).exp_m1())
        .sum();
    d.ln_1p()
}

impl GallagerCurves {
    pub fn new(pmf: &JointPmf) -> Self {
        let joint = pmf
            .probs()
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| (p, p.ln()))
            .collect();
        Self {
            joint,
            cond_x: conditional_table(pmf, true),
            cond_y: conditional_table(pmf, false),
        }
    }

    /// `E_XY(rho) = (1+rho) ln sum P^{1/(1+rho)}`; defined for `rho > -1`.
    pub fn e_xy(&self, rho: f64) -> f64 {
        (1.0 + rho) * log_power_sum(&self.joint, 1.0 / (1.0 + rho))
    }

    /// `E_{X|Y}(rho)`.
    pub fn e_x_given_y(&self, rho: f64) -> f64 {
        Self::e_cond(&self.cond_x, rho)
    }

    /// `E_{Y|X}(rho)`.
    pub fn e_y_given_x(&self, rho: f64) -> f64 {
        Self::e_cond(&self.cond_y, rho)
    }

    fn e_cond(table: &[(f64, Vec<(f64, f64)>)], rho: f64) -> f64 {
        let s = 1.0 / (1.0 + rho);
        let d: f64 = table
            .iter()
            .map(|(w, terms)| w * ((1.0 + rho) * log_power_sum(terms, s)).exp_m1())
            .sum();
        d.ln_1p()
    }

    fn e_cond_side(&self, side: Side, rho: f64) -> f64 {
        match side {
            Side::X => self.e_x_given_y(rho),
            Side::Y => self.e_y_given_x(rho),
        }
    }

    /// The concave objective whose maximum over rho is the exponent.
    pub fn objective(&self, side: Side, rx: f64, ry: f64, gamma: f64, rho: f64) -> f64 {
        let own = match side {
            Side::X => rx,
            Side::Y => ry,
        };
        gamma * (rho * own - self.e_cond_side(side, rho))
            + (1.0 - gamma) * (rho * (rx + ry) - self.e_xy(rho))
    }

    /// `E_X(R_X, R_Y, gamma)` for `Side::X`, `E_Y` for `Side::Y`.
    pub fn exponent(&self, side: Side, rx: f64, ry: f64, gamma: f64) -> f64 {
        let (_, v) = golden_max(
            |r| self.objective(side, rx, ry, gamma, r),
            0.0,
            1.0,
            OPT_TOL,
        );
        v.max(0.0)
    }

    /// Infimum over gamma in [0, 1] of the exponent, with the minimizer.
    pub fn min_exponent_over_gamma(&self, side: Side, rx: f64, ry: f64) -> GammaMin {
        let (gamma, value) = golden_min(|g| self.exponent(side, rx, ry, g), 0.0, 1.0, OPT_TOL);
        GammaMin { value, gamma }
    }

    /// `min{inf_gamma E_X, inf_gamma E_Y}`.
    pub fn min_both(&self, rx: f64, ry: f64) -> f64 {
        self.min_exponent_over_gamma(Side::X, rx, ry)
            .value
            .min(self.min_exponent_over_gamma(Side::Y, rx, ry).value)
    }
}

/// Result of the gamma minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMin {
    pub value: f64,
    pub gamma: f64,
}

pub fn e_xy(pmf: &JointPmf, rho: f64) -> f64 {
    GallagerCurves::new(pmf).e_xy(rho)
}

pub fn e_x_given_y(pmf: &JointPmf, rho: f64) -> f64 {
    GallagerCurves::new(pmf).e_x_given_y(rho)
}

pub fn e_y_given_x(pmf: &JointPmf, rho: f64) -> f64 {
    GallagerCurves::new(pmf).e_y_given_x(rho)
}

pub fn exponent_x(pmf: &JointPmf, rx: f64, ry: f64, gamma: f64) -> f64 {
    GallagerCurves::new(pmf).exponent(Side::X, rx, ry, gamma)
}

pub fn exponent_y(pmf: &JointPmf, rx: f64, ry: f64, gamma: f64) -> f64 {
    GallagerCurves::new(pmf).exponent(Side::Y, rx, ry, gamma)
}

pub fn min_exponent_over_gamma(pmf: &JointPmf, side: Side, rx: f64, ry: f64) -> GammaMin {
    GallagerCurves::new(pmf).min_exponent_over_gamma(side, rx, ry)
}

/// Finite-difference derivatives at rho = 0 against entropies and
/// varentropies, plus the smallest sampled second derivative on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    /// Absolute errors `|E'(0) - H|` for (joint, x|y, y|x).
    pub first: [f64; 3],
    /// Absolute errors `|E''(0) - V|` for (joint, x|y, y|x).
    pub second: [f64; 3],
    /// Smallest sampled `E''(rho)` over the three functions.
    pub min_second: f64,
}

pub const FD_STEP: f64 = 1e-5;

pub fn derivative_checks(pmf: &JointPmf) -> DerivativeReport {
    let c = GallagerCurves::new(pmf);
    let pr = profile(pmf);
    let h = FD_STEP;
    let fs: [&dyn Fn(f64) -> f64; 3] =
        [&|r| c.e_xy(r), &|r| c.e_x_given_y(r), &|r| c.e_y_given_x(r)];
    let hs = [pr.h_joint, pr.h_x_given_y, pr.h_y_given_x];
    let vs = [pr.v_joint, pr.v_x_given_y, pr.v_y_given_x];
    let mut first = [0.0; 3];
    let mut second = [0.0; 3];
    let mut min_second = f64::INFINITY;
    for i in 0..3 {
        let f = fs[i];
        let (fp, f0, fm) = (f(h), f(0.0), f(-h));
        first[i] = ((fp - fm) / (2.0 * h) - hs[i]).abs();
        second[i] = ((fp - 2.0 * f0 + fm) / (h * h) - vs[i]).abs();
        // coarser step: round-off dominates at 1e-5 for the convexity scan
        let hh = 1e-3;
        for k in 0..=100 {
            let r = k as f64 / 100.0;
            let d2 = (f(r + hh) - 2.0 * f(r) + f(r - hh)) / (hh * hh);
            min_second = min_second.min(d2);
        }
    }
    DerivativeReport {
        first,
        second,
        min_second,
    }
}

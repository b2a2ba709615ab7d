//! Moderate-deviations constants, gain-region classification and the
//! small-xi limit check.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::exponents::GallagerCurves;
use crate::info_measures::{profile, SourceProfile, DISPERSION_EPS};
use crate::source_model::{make_asymmetric, make_dsbs, make_zchannel, JointPmf};

/// Tolerance for boundary equalities when validating a target.
pub const CASE_TOL: f64 = 1e-9;

/// Boundary case of the rate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// `R_X = H(X|Y)`, `R_Y > H(Y)`.
    I,
    /// Corner `R_X = H(X|Y)`, `R_Y = H(Y)`.
    II,
    /// Interior of the sum-rate face.
    III,
    /// Corner `R_X = H(X)`, `R_Y = H(Y|X)`.
    IV,
    /// `R_X > H(X)`, `R_Y = H(Y|X)`.
    V,
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" => Ok(Case::I),
            "ii" => Ok(Case::II),
            "iii" => Ok(Case::III),
            "iv" => Ok(Case::IV),
            "v" => Ok(Case::V),
            _ => domain(format!("unknown case `{s}`, expected i, ii, iii, iv or v")),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
            Case::IV => "iv",
            Case::V => "v",
        })
    }
}

impl Case {
    // the case seen after exchanging X and Y
    fn mirrored(self) -> Case {
        match self {
            Case::I => Case::V,
            Case::II => Case::IV,
            Case::III => Case::III,
            Case::IV => Case::II,
            Case::V => Case::I,
        }
    }
}

/// A boundary rate pair, its case, and the approach direction theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTarget {
    pub case: Case,
    pub rx: f64,
    pub ry: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl BoundaryTarget {
    /// Validates the rates and direction against the profile.
    pub fn new(
        p: &SourceProfile,
        case: Case,
        rx: f64,
        ry: f64,
        theta1: f64,
        theta2: f64,
    ) -> Result<Self> {
        let t = Self {
            case,
            rx,
            ry,
            theta1,
            theta2,
        };
        t.validate(p)?;
        Ok(t)
    }

    /// Picks the boundary rates for `case`: corner points for (ii)/(iv),
    /// a margin of 0.1 nats off the corner for (i)/(v), and the midpoint of
    /// the sum-rate face for (iii).
    pub fn canonical(p: &SourceProfile, case: Case, theta1: f64, theta2: f64) -> Result<Self> {
        let (rx, ry) = match case {
            Case::I => (p.h_x_given_y, p.h_y + 0.1),
            Case::II => (p.h_x_given_y, p.h_y),
            Case::III => {
                let rx = 0.5 * (p.h_x_given_y + p.h_x);
                (rx, p.h_joint - rx)
            }
            Case::IV => (p.h_x, p.h_y_given_x),
            Case::V => (p.h_x + 0.1, p.h_y_given_x),
        };
        Self::new(p, case, rx, ry, theta1, theta2)
    }

    fn mirrored(&self) -> BoundaryTarget {
        BoundaryTarget {
            case: self.case.mirrored(),
            rx: self.ry,
            ry: self.rx,
            theta1: self.theta2,
            theta2: self.theta1,
        }
    }

    fn validate(&self, p: &SourceProfile) -> Result<()> {
        if ![self.rx, self.ry, self.theta1, self.theta2]
            .iter()
            .all(|v| v.is_finite())
        {
            return domain("rates and theta must be finite");
        }
        match self.case {
            Case::IV | Case::V => return self.mirrored().validate(&p.swapped()),
            _ => {}
        }
        let near = |a: f64, b: f64| (a - b).abs() <= CASE_TOL;
        let (t1, t2) = (self.theta1, self.theta2);
        let ok_rates = match self.case {
            Case::I => near(self.rx, p.h_x_given_y) && self.ry > p.h_y + CASE_TOL,
            Case::II => near(self.rx, p.h_x_given_y) && near(self.ry, p.h_y),
            Case::III => {
                near(self.rx + self.ry, p.h_joint)
                    && self.rx > p.h_x_given_y + CASE_TOL
                    && self.ry > p.h_y_given_x + CASE_TOL
            }
            Case::IV | Case::V => unreachable!(),
        };
        if !ok_rates {
            return domain(format!(
                "rates ({}, {}) do not match case ({})",
                self.rx, self.ry, self.case
            ));
        }
        let ok_theta = match self.case {
            Case::I => t1 > 0.0,
            Case::II => t1 > 0.0 && t1 + t2 > 0.0,
            Case::III => t1 + t2 > 0.0,
            Case::IV | Case::V => unreachable!(),
        };
        if !ok_theta {
            return domain(format!(
                "theta ({t1}, {t2}) is outside the feasible set of case ({})",
                self.case
            ));
        }
        Ok(())
    }
}

fn need_positive(v: f64, what: &str) -> Result<f64> {
    if v > DISPERSION_EPS {
        Ok(v)
    } else {
        domain(format!("{what} dispersion is zero"))
    }
}

/// `f(gamma) = (theta1 + (1-gamma) theta2)^2 / (2 (gamma Vc + (1-gamma) Vj))`.
pub fn f_gamma(vc: f64, vj: f64, theta1: f64, theta2: f64, gamma: f64) -> f64 {
    let num = theta1 + (1.0 - gamma) * theta2;
    num * num / (2.0 * (gamma * vc + (1.0 - gamma) * vj))
}

fn minimize_f(vc: f64, vj: f64, theta1: f64, theta2: f64) -> (f64, f64) {
    let mut best = (f_gamma(vc, vj, theta1, theta2, 1.0), 1.0);
    let f0 = f_gamma(vc, vj, theta1, theta2, 0.0);
    if f0 < best.0 {
        best = (f0, 0.0);
    }
    if theta2 != 0.0 && vj != vc {
        let g = -theta1 / theta2 + (vc + vj) / (vj - vc);
        if g > 0.0 && g < 1.0 {
            let v = f_gamma(vc, vj, theta1, theta2, g);
            if v < best.0 {
                best = (v, g);
            }
        }
    }
    best
}

/// Minimum of `f` over gamma in [0, 1] with `Vc = V(X|Y)`, `Vj = V(XY)`.
/// Returns `(value, gamma_star)`.
pub fn minimize_f_over_gamma(p: &SourceProfile, theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    let vc = need_positive(p.v_x_given_y, "conditional")?;
    let vj = need_positive(p.v_joint, "joint")?;
    if !(theta1 > 0.0 && theta1 + theta2 > 0.0) {
        return domain("theta must satisfy theta1 > 0 and theta1 + theta2 > 0");
    }
    Ok(minimize_f(vc, vj, theta1, theta2))
}

fn constant(p: &SourceProfile, t: &BoundaryTarget, streaming: bool) -> Result<f64> {
    t.validate(p)?;
    if matches!(t.case, Case::IV | Case::V) {
        return constant(&p.swapped(), &t.mirrored(), streaming);
    }
    let (t1, t2) = (t.theta1, t.theta2);
    Ok(match t.case {
        Case::I => t1 * t1 / (2.0 * need_positive(p.v_x_given_y, "conditional")?),
        Case::III => (t1 + t2).powi(2) / (2.0 * need_positive(p.v_joint, "joint")?),
        Case::II => {
            let vc = need_positive(p.v_x_given_y, "conditional")?;
            let vj = need_positive(p.v_joint, "joint")?;
            let joint = (t1 + t2).powi(2) / (2.0 * vj);
            let first = if streaming {
                minimize_f(vc, vj, t1, t2).0
            } else {
                t1 * t1 / (2.0 * vc)
            };
            first.min(joint)
        }
        Case::IV | Case::V => unreachable!(),
    })
}

/// Non-streaming constant for the target.
pub fn nu_nonstreaming(p: &SourceProfile, t: &BoundaryTarget) -> Result<f64> {
    constant(p, t, false)
}

/// Achievable streaming constant with delay `delay`.
pub fn nu_streaming_lower(p: &SourceProfile, t: &BoundaryTarget, delay: usize) -> Result<f64> {
    if delay < 1 {
        return domain("delay must be at least 1");
    }
    Ok(delay as f64 * constant(p, t, true)?)
}

/// Limit of the normalized exponent, `nu_streaming_lower / T`.
#[allow(non_snake_case)]
pub fn L_constant(p: &SourceProfile, t: &BoundaryTarget) -> Result<f64> {
    constant(p, t, true)
}

/// Two decoders with delays `t1`, `t2`: the smaller delay governs.
pub fn nu_two_delays(p: &SourceProfile, t: &BoundaryTarget, t1: usize, t2: usize) -> Result<f64> {
    nu_streaming_lower(p, t, t1.min(t2))
}

/// Point-to-point streaming constant, with or without side information.
pub fn nu_point_to_point(p: &SourceProfile, delay: usize, with_side_info: bool) -> Result<f64> {
    if delay < 1 {
        return domain("delay must be at least 1");
    }
    let v = if with_side_info {
        need_positive(p.v_x_given_y, "conditional")?
    } else {
        need_positive(p.v_x, "marginal")?
    };
    Ok(delay as f64 / (2.0 * v))
}

/// Outcome of the gain-region test for a direction in case (ii).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainVerdict {
    pub holds_gain_t: bool,
    pub g1: f64,
    pub g2: f64,
    pub ratio: f64,
    /// `"g1"`, `"g2"` or `"none"`.
    pub binding: &'static str,
}

/// `(g1, g2)` of a profile.
pub fn g_values(p: &SourceProfile) -> Result<(f64, f64)> {
    let vc = p.v_x_given_y;
    let vj = p.v_joint;
    if vc <= 0.0 {
        return domain("conditional dispersion must be positive");
    }
    let g1 = (vj - vc) / (2.0 * vc);
    let g2 = ((vj / vc).sqrt() - 1.0).min((vj - vc) / (vj + vc));
    Ok((g1, g2))
}

pub fn gain_region(p: &SourceProfile, theta1: f64, theta2: f64) -> Result<GainVerdict> {
    if !(theta1 > 0.0 && theta1 + theta2 > 0.0) {
        return domain("theta must satisfy theta1 > 0 and theta1 + theta2 > 0");
    }
    let (g1, g2) = g_values(p)?;
    let ratio = theta2 / theta1;
    let (holds, binding) = if ratio >= g1 {
        (true, "g1")
    } else if ratio > -1.0 && ratio <= g2 {
        (true, "g2")
    } else {
        (false, "none")
    };
    Ok(GainVerdict {
        holds_gain_t: holds,
        g1,
        g2,
        ratio,
        binding,
    })
}

/// The three example source families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFamily {
    Dsbs,
    ZChannel,
    Asymmetric,
}

impl SourceFamily {
    pub fn make(self, param: f64) -> Result<JointPmf> {
        match self {
            SourceFamily::Dsbs => make_dsbs(param),
            SourceFamily::ZChannel => make_zchannel(param),
            SourceFamily::Asymmetric => make_asymmetric(param),
        }
    }

    /// Accepts a bare family name or a full descriptor such as `asym:p=0.1`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.split(':').next().unwrap_or("") {
            "dsbs" => Ok(SourceFamily::Dsbs),
            "zchannel" => Ok(SourceFamily::ZChannel),
            "asym" => Ok(SourceFamily::Asymmetric),
            other => domain(format!("`{other}` is not a parametric family")),
        }
    }
}

/// One row of a g-curve table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GRow {
    pub param: f64,
    pub g1: f64,
    pub g2: f64,
}

pub fn g_curves(family: SourceFamily, grid: &[f64]) -> Result<Vec<GRow>> {
    grid.iter()
        .map(|&param| {
            let (g1, g2) = g_values(&profile(&family.make(param)?))?;
            Ok(GRow { param, g1, g2 })
        })
        .collect()
}

/// `lo, lo+step, ...` up to `hi` (inclusive within half a step).
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return domain("grid needs step > 0 and hi >= lo");
    }
    let count = ((hi - lo) / step + 0.5).floor() as usize + 1;
    if count > 1_000_000 {
        return domain("grid is too large");
    }
    // rounded so that 0.1 + 0.05 prints as 0.15
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// One xi point of the limit check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub xi: f64,
    /// `min{inf E_X, inf E_Y} / xi^2` at the backed-off rates.
    pub ratio: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub l_constant: f64,
    pub rows: Vec<LimitRow>,
    /// Relative error at the smallest xi is below 5%.
    pub within_5pct: bool,
    /// Relative error shrinks along the xi sequence.
    pub monotone: bool,
}

pub const LIMIT_XIS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Normalized exponents at `R* + theta xi` for shrinking `xi`, compared
/// with `L_constant`.
pub fn md_limit_check(pmf: &JointPmf, t: &BoundaryTarget) -> Result<LimitReport> {
    let p = profile(pmf);
    let l = L_constant(&p, t)?;
    let curves = GallagerCurves::new(pmf);
    let rows: Vec<LimitRow> = LIMIT_XIS
        .iter()
        .map(|&xi| {
            let rx = t.rx + t.theta1 * xi;
            let ry = t.ry + t.theta2 * xi;
            let ratio = curves.min_both(rx, ry) / (xi * xi);
            LimitRow {
                xi,
                ratio,
                rel_err: (ratio - l).abs() / l,
            }
        })
        .collect();
    let within_5pct = rows.last().is_some_and(|r| r.rel_err < 0.05);
    let monotone = rows.windows(2).all(|w| w[1].rel_err <= w[0].rel_err + 1e-9);
    Ok(LimitReport {
        l_constant: l,
        rows,
        within_5pct,
        monotone,
    })
}

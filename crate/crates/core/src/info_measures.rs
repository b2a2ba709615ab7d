//! Entropies and varentropies (natural log units).

use crate::error::{domain, Result};
use crate::source_model::JointPmf;

/// Threshold for treating a dispersion as positive.
pub const DISPERSION_EPS: f64 = 1e-12;

/// All measures of a source, in nats and nats squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceProfile {
    pub h_joint: f64,
    pub h_x_given_y: f64,
    pub h_y_given_x: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub v_joint: f64,
    pub v_x_given_y: f64,
    pub v_y_given_x: f64,
    /// Marginal varentropies, used by the point-to-point constants.
    pub v_x: f64,
    pub v_y: f64,
}

impl SourceProfile {
    /// Named rows in a fixed order, for tabular output.
    pub fn rows(&self) -> [(&'static str, f64); 10] {
        [
            ("H_joint", self.h_joint),
            ("H_x_given_y", self.h_x_given_y),
            ("H_y_given_x", self.h_y_given_x),
            ("H_x", self.h_x),
            ("H_y", self.h_y),
            ("V_joint", self.v_joint),
            ("V_x_given_y", self.v_x_given_y),
            ("V_y_given_x", self.v_y_given_x),
            ("V_x", self.v_x),
            ("V_y", self.v_y),
        ]
    }

    /// Profile of the source with X and Y exchanged.
    pub fn swapped(&self) -> SourceProfile {
        SourceProfile {
            h_joint: self.h_joint,
            h_x_given_y: self.h_y_given_x,
            h_y_given_x: self.h_x_given_y,
            h_x: self.h_y,
            h_y: self.h_x,
            v_joint: self.v_joint,
            v_x_given_y: self.v_y_given_x,
            v_y_given_x: self.v_x_given_y,
            v_x: self.v_y,
            v_y: self.v_x,
        }
    }
}

// Mean and variance of -log q under weights w, skipping zero weights.
fn mean_var<I>(items: I) -> (f64, f64)
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mean: f64 = items
        .clone()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, q)| -w * q.ln())
        .sum();
    let var: f64 = items
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, q)| {
            let d = -q.ln() - mean;
            w * d * d
        })
        .sum();
    (mean, var)
}

pub fn profile(pmf: &JointPmf) -> SourceProfile {
    let (nx, ny) = (pmf.nx(), pmf.ny());
    let px = pmf.marginal_x();
    let py = pmf.marginal_y();
    let cells = move || (0..nx).flat_map(move |x| (0..ny).map(move |y| (x, y)));

    let (h_joint, v_joint) = mean_var(cells().map(|(x, y)| (pmf.p(x, y), pmf.p(x, y))));
    let (h_x_given_y, v_x_given_y) =
        mean_var(cells().map(|(x, y)| (pmf.p(x, y), pmf.p(x, y) / py[y])));
    let (h_y_given_x, v_y_given_x) =
        mean_var(cells().map(|(x, y)| (pmf.p(x, y), pmf.p(x, y) / px[x])));
    let (h_x, v_x) = mean_var(px.iter().map(|&p| (p, p)));
    let (h_y, v_y) = mean_var(py.iter().map(|&p| (p, p)));

    SourceProfile {
        h_joint,
        h_x_given_y,
        h_y_given_x,
        h_x,
        h_y,
        v_joint,
        v_x_given_y,
        v_y_given_x,
        v_x,
        v_y,
    }
}

pub fn check_positive_dispersions(p: &SourceProfile) -> bool {
    p.v_joint > DISPERSION_EPS && p.v_x_given_y > DISPERSION_EPS && p.v_y_given_x > DISPERSION_EPS
}

/// Binary entropy in nats.
pub fn h_b(p: f64) -> f64 {
    let t = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    t(p) + t(1.0 - p)
}

/// Entropy of a type given by counts.
pub fn entropy_from_counts(counts: &[u32]) -> f64 {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let s: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * c.ln()
        })
        .sum();
    (t.ln() - s / t).max(0.0)
}

/// `H(T_{x|y} | T_y)` from row-major joint counts.
pub fn conditional_entropy_from_counts(joint: &[u32], nx: usize, ny: usize) -> f64 {
    let total: u32 = joint.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut s = 0.0;
    for y in 0..ny {
        let cy: u32 = (0..nx).map(|x| joint[x * ny + y]).sum();
        if cy == 0 {
            continue;
        }
        let cyf = cy as f64;
        for x in 0..nx {
            let c = joint[x * ny + y];
            if c > 0 {
                let c = c as f64;
                s += c * (cyf / c).ln();
            }
        }
    }
    (s / total as f64).max(0.0)
}

/// Joint empirical entropy and conditional empirical entropy of x given y.
pub fn empirical_entropy(x: &[u8], y: &[u8]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return domain(format!("block lengths differ: {} vs {}", x.len(), y.len()));
    }
    if x.is_empty() {
        return domain("empty blocks");
    }
    let nx = *x.iter().max().unwrap_or(&0) as usize + 1;
    let ny = *y.iter().max().unwrap_or(&0) as usize + 1;
    let mut joint = vec![0u32; nx * ny];
    for (a, b) in x.iter().zip(y) {
        joint[*a as usize * ny + *b as usize] += 1;
    }
    Ok((
        entropy_from_counts(&joint),
        conditional_entropy_from_counts(&joint, nx, ny),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_model::{make_asymmetric, make_dsbs, make_zchannel, sample_blocks};
    use std::f64::consts::LN_2;

    #[test]
    fn dsbs_closed_forms() {
        for p in [0.01, 0.11, 0.3, 0.49] {
            let pr = profile(&make_dsbs(p).unwrap());
            assert!((pr.h_joint - (LN_2 + h_b(p))).abs() < 1e-12);
            assert!((pr.v_joint - pr.v_x_given_y).abs() < 1e-12);
            assert!((pr.h_x - LN_2).abs() < 1e-12);
            assert!(pr.v_x.abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_pair() {
        let pr = profile(&make_dsbs(0.5).unwrap());
        assert!((pr.h_joint - 2.0 * LN_2).abs() < 1e-12);
        assert!(pr.v_joint.abs() < 1e-15);
        assert!(!check_positive_dispersions(&pr));
    }

    #[test]
    fn positive_dispersions() {
        assert!(check_positive_dispersions(&profile(
            &make_dsbs(0.11).unwrap()
        )));
        assert!(check_positive_dispersions(&profile(
            &make_asymmetric(0.1).unwrap()
        )));
    }

    #[test]
    fn chain_rule_and_bounds() {
        for pmf in [
            make_dsbs(0.2).unwrap(),
            make_zchannel(0.3).unwrap(),
            make_asymmetric(0.05).unwrap(),
        ] {
            let pr = profile(&pmf);
            assert!((pr.h_joint - pr.h_y - pr.h_x_given_y).abs() < 1e-10);
            assert!((pr.h_joint - pr.h_x - pr.h_y_given_x).abs() < 1e-10);
            assert!(pr.h_x_given_y <= pr.h_x + 1e-12);
            assert!(pr.h_joint <= pr.h_x + pr.h_y + 1e-12);
        }
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(
            empirical_entropy(&[0, 0, 0], &[0, 0, 0]).unwrap(),
            (0.0, 0.0)
        );
        let (hj, hc) = empirical_entropy(&[0, 1], &[0, 1]).unwrap();
        assert!((hj - LN_2).abs() < 1e-15);
        assert!(hc.abs() < 1e-15);
        let (hj, hc) = empirical_entropy(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((hj - 4f64.ln()).abs() < 1e-15);
        assert!((hc - LN_2).abs() < 1e-15);
        assert!(empirical_entropy(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn empirical_converges() {
        let pmf = make_zchannel(0.6).unwrap();
        let pr = profile(&pmf);
        let s = sample_blocks(&pmf, 10_000, 1, 77).unwrap();
        let (hj, hc) = empirical_entropy(&s.x[0], &s.y[0]).unwrap();
        assert!((hj - pr.h_joint).abs() < 0.05);
        assert!((hc - pr.h_x_given_y).abs() < 0.05);
    }
}

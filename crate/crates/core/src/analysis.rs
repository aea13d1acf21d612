//! Computations tying the three routes together: Hellmann-Feynman
//! consistency, continuous eigenvalue curves W_nu(alpha), the placement of
//! truncation solutions on those curves, and the convergence tables.

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::{self, polynomial_wavefunction};
use crate::model::ScaledModel;
use crate::precision::{format_sig, parse_exact, Precision};
use crate::ritz::{self, BasisSpec, ConvergenceOptions};

/// Default central-difference step for dW/dalpha.
pub const DEFAULT_HF_STEP: f64 = 1e-3;
/// Default alpha spacing of sweeps.
pub const DEFAULT_SWEEP_STEP: f64 = 0.05;
/// Default basis size of sweeps.
pub const DEFAULT_SWEEP_BASIS: usize = 20;
/// |W_Ritz - W_truncation| accepted as "the curve passes through the point".
pub const OVERLAY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfReport {
    pub l: f64,
    pub alpha: f64,
    pub level: usize,
    /// Central difference [W(alpha+h) - W(alpha-h)] / 2h.
    pub lhs: f64,
    /// -<1/xi>.
    pub rhs: f64,
    pub abs_diff: f64,
    pub step: f64,
    pub basis_size: usize,
    pub w: f64,
}

/// Compares the numerical slope of W_level(alpha) with -<1/xi>.
///
/// The basis size is the one at which the levels up to `level` converge at
/// `alpha`; the stencil points reuse it, so both sides refer to the same
/// variational problem.
pub fn hellmann_feynman_check(
    l: f64,
    alpha: &Float,
    level: usize,
    step: f64,
    richardson: bool,
    prec: Precision,
) -> Result<HfReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {step}")));
    }
    let bits = prec.bits();
    let alpha = Float::with_val(bits, alpha);
    let model = ScaledModel::with_alpha(l, alpha.clone())?;
    let center = ritz::converged_spectrum(&model, level + 2, prec, ConvergenceOptions::default())?;
    let size = center.size;
    let prec = center.precision;
    let basis = BasisSpec::new(l, size, prec)?;

    let w_at = |a: Float| -> Result<Float> {
        let m = ScaledModel::with_alpha(l, a)?;
        Ok(ritz::ritz_spectrum(&m, size, prec)?.eigenvalues[level].clone())
    };
    let slope = |h: f64| -> Result<Float> {
        let hf = Float::with_val(prec.bits(), h);
        let up = w_at(Float::with_val(prec.bits(), &alpha + &hf))?;
        let down = w_at(Float::with_val(prec.bits(), &alpha - &hf))?;
        Ok((up - down) / (hf * 2u32))
    };
    let mut lhs = slope(step)?;
    if richardson {
        let half = slope(step / 2.0)?;
        lhs = (half * 4u32 - lhs) / 3u32;
    }
    let rhs = -ritz::expectation_inverse_xi(&center, level, &basis)?;
    let report = HfReport {
        l,
        alpha: alpha.to_f64(),
        level,
        lhs: lhs.to_f64(),
        rhs: rhs.to_f64(),
        abs_diff: Float::with_val(bits, &lhs - &rhs).abs().to_f64(),
        step,
        basis_size: size,
        w: center.eigenvalues[level].to_f64(),
    };
    if !(report.lhs < 0.0 && report.rhs < 0.0) {
        return Err(Error::CheckFailure(format!(
            "eigenvalue slope must be negative: dW/dalpha = {}, -<1/xi> = {}",
            report.lhs, report.rhs
        )));
    }
    Ok(report)
}

/// W_level(alpha) sampled on an ascending alpha grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub l: f64,
    pub level: usize,
    pub basis_size: usize,
    /// (alpha, W) with alpha strictly increasing.
    pub samples: Vec<(f64, f64)>,
}

impl SpectrumCurve {
    pub fn alpha_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, alpha: f64) -> Option<f64> {
        let k = self.samples.partition_point(|&(a, _)| a < alpha);
        if k == 0 {
            return (self.samples[0].0 == alpha).then_some(self.samples[0].1);
        }
        if k == self.samples.len() {
            return None;
        }
        let (a0, w0) = self.samples[k - 1];
        let (a1, w1) = self.samples[k];
        Some(w0 + (w1 - w0) * (alpha - a0) / (a1 - a0))
    }

    pub fn value_at_sample(&self, alpha: f64) -> Option<f64> {
        self.samples.iter().find(|&&(a, _)| a == alpha).map(|&(_, w)| w)
    }
}

/// The alpha grid alpha_min + k step, k = 0..=K, where K rounds
/// (alpha_max - alpha_min) / step.
pub fn alpha_grid(alpha_min: f64, alpha_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!("sweep step must be positive, got {step}")));
    }
    if !(alpha_max > alpha_min) || !alpha_min.is_finite() || !alpha_max.is_finite() {
        return Err(Error::invalid("sweep needs alpha_min < alpha_max"));
    }
    let k = ((alpha_max - alpha_min) / step).round() as usize;
    Ok((0..=k)
        .map(|i| {
            let a = alpha_min + i as f64 * step;
            // print-stable grid values, e.g. 0.35 rather than 0.35000000000000003
            (a * 1e12).round() / 1e12
        })
        .collect())
}

/// Ritz eigenvalues at fixed basis size over an alpha grid, tracked by
/// sorted index, one curve per level. Runs on the current rayon pool.
pub fn spectrum_sweep(
    l: f64,
    alpha_min: f64,
    alpha_max: f64,
    step: f64,
    levels: usize,
    basis_size: usize,
    prec: Precision,
) -> Result<Vec<SpectrumCurve>> {
    if levels == 0 || levels > basis_size {
        return Err(Error::invalid(format!(
            "need 1 <= levels <= basis size, got {levels} levels for N = {basis_size}"
        )));
    }
    let grid = alpha_grid(alpha_min, alpha_max, step)?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&a| {
            let m = ScaledModel::with_alpha(l, parse_exact(&format!("{a}"), prec)?)?;
            let r = ritz::ritz_spectrum(&m, basis_size, prec)?;
            Ok(r.eigenvalues[..levels].iter().map(Float::to_f64).collect())
        })
        .collect::<Result<_>>()?;
    let curves: Vec<SpectrumCurve> = (0..levels)
        .map(|nu| SpectrumCurve {
            l,
            level: nu,
            basis_size,
            samples: grid.iter().zip(&rows).map(|(&a, w)| (a, w[nu])).collect(),
        })
        .collect();
    for c in &curves {
        if let Some(w) = c.samples.windows(2).find(|w| !(w[1].1 < w[0].1)) {
            return Err(Error::CheckFailure(format!(
                "level {} does not decrease between alpha = {} (W = {}) and alpha = {} (W = {})",
                c.level, w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub n: u32,
    /// 1-based index among the family's ascending roots.
    pub root_index: usize,
    pub alpha: f64,
    /// Root printed at full precision.
    pub alpha_exact: String,
    pub w_truncation: f64,
    /// Level whose interpolated sweep curve is closest to the point.
    pub nearest_curve: Option<usize>,
    pub curve_gap: f64,
    /// Levels of the direct Ritz solve at the root within the overlay tolerance.
    pub matched_levels: Vec<usize>,
    pub ritz_gap: f64,
    /// Nodes of the polynomial eigenfunction on (0, inf).
    pub nodes: usize,
    /// Truncation points of all families n <= n_max sharing this alpha.
    pub points_on_vertical: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayReport {
    pub l: f64,
    pub n_max: u32,
    pub points: Vec<OverlayPoint>,
    /// (n, level) for truncation points at alpha = 0.
    pub zero_alpha_ladder: Vec<(u32, usize)>,
    pub isolated: bool,
}

/// Places every truncation point (alpha_{n,l}^(i), 2n + 2|l| + 2), n <= n_max,
/// on the sweep curves and confirms it by a direct Ritz solve at the root.
///
/// At each nonzero root exactly one truncation point and exactly one level
/// must match; at alpha = 0 the even-n points reproduce the oscillator
/// ladder level by level.
pub fn truncation_overlay(
    l: f64,
    n_max: u32,
    sweep: &[SpectrumCurve],
    prec: Precision,
) -> Result<OverlayReport> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let first = sweep
        .first()
        .ok_or_else(|| Error::invalid("overlay needs at least one sweep curve"))?;
    let (lo, hi) = first.alpha_range();
    let basis_size = first.basis_size.max(n_max as usize + 2);

    let families = (1..=n_max)
        .map(|n| frobenius::truncation_solutions_with(l, n, prec))
        .collect::<Result<Vec<_>>>()?;
    let tol = prec.ten_pow_neg((prec.digits / 2) as i32);

    let mut points = Vec::new();
    for sol in &families {
        for (i, root) in sol.alpha_roots.iter().enumerate() {
            let a = root.to_f64();
            if a < lo || a > hi {
                return Err(Error::invalid(format!(
                    "sweep [{lo}, {hi}] does not cover root alpha = {a} of family n = {}",
                    sol.n
                )));
            }
            let w_trunc = sol.w_fixed.to_f64();
            let (nearest_curve, curve_gap) = sweep
                .iter()
                .filter_map(|c| c.interpolate(a).map(|w| (c.level, (w - w_trunc).abs())))
                .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .map_or((None, f64::INFINITY), |(lv, g)| (Some(lv), g));

            let model = ScaledModel::with_alpha(l, root.clone())?;
            let direct = ritz::ritz_spectrum(&model, basis_size, prec)?;
            let gaps: Vec<f64> = direct
                .eigenvalues
                .iter()
                .map(|w| Float::with_val(64, w - &sol.w_fixed).abs().to_f64())
                .collect();
            let matched_levels: Vec<usize> = gaps
                .iter()
                .enumerate()
                .filter(|(_, g)| **g < OVERLAY_TOLERANCE)
                .map(|(k, _)| k)
                .collect();
            let ritz_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
            let nodes = polynomial_wavefunction(sol, i + 1)?.node_count();
            let points_on_vertical = families
                .iter()
                .flat_map(|f| f.alpha_roots.iter())
                .filter(|r| Float::with_val(prec.bits(), *r - root).abs() < tol)
                .count();
            points.push(OverlayPoint {
                n: sol.n,
                root_index: i + 1,
                alpha: a,
                alpha_exact: format_sig(root, prec.digits as usize),
                w_truncation: w_trunc,
                nearest_curve,
                curve_gap,
                matched_levels,
                ritz_gap,
                nodes,
                points_on_vertical,
            });
        }
    }

    let mut zero_alpha_ladder = Vec::new();
    for p in &points {
        let is_zero = p.alpha == 0.0;
        if p.matched_levels.len() != 1 {
            return Err(Error::CheckFailure(format!(
                "truncation point (alpha = {}, W = {}) matches {} levels",
                p.alpha,
                p.w_truncation,
                p.matched_levels.len()
            )));
        }
        let level = p.matched_levels[0];
        if p.nodes != level {
            return Err(Error::CheckFailure(format!(
                "truncation point (alpha = {}, W = {}) sits on level {level} but its eigenfunction has {} nodes",
                p.alpha, p.w_truncation, p.nodes
            )));
        }
        if p.nearest_curve.is_some_and(|c| c != level) && level < sweep.len() {
            return Err(Error::CheckFailure(format!(
                "sweep curve {} and direct solve (level {level}) disagree at alpha = {}",
                p.nearest_curve.unwrap(),
                p.alpha
            )));
        }
        if is_zero {
            zero_alpha_ladder.push((p.n, level));
        } else if p.points_on_vertical != 1 {
            return Err(Error::CheckFailure(format!(
                "{} truncation points share alpha = {}",
                p.points_on_vertical, p.alpha
            )));
        }
    }
    // alpha = 0: W^(n) = 2(2 nu + |l| + 1) with nu = n/2
    for &(n, level) in &zero_alpha_ladder {
        if 2 * level != n as usize {
            return Err(Error::CheckFailure(format!(
                "alpha = 0 point of family n = {n} landed on level {level}, not the oscillator level {}",
                n / 2
            )));
        }
    }
    let isolated = points
        .iter()
        .filter(|p| p.alpha != 0.0)
        .all(|p| p.points_on_vertical == 1);
    Ok(OverlayReport {
        l,
        n_max,
        points,
        zero_alpha_ladder,
        isolated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NegativeOnset {
    /// W_0(lo) >= 0 > W_0(hi) with lo, hi adjacent samples.
    Bracket { lo: f64, hi: f64, w_lo: f64, w_hi: f64 },
    NotFound { alpha_min: f64, alpha_max: f64, negative_at_start: bool },
}

/// Grid interval in which the ground level changes sign.
pub fn negative_onset(sweep: &[SpectrumCurve]) -> Result<NegativeOnset> {
    let ground = sweep
        .iter()
        .find(|c| c.level == 0)
        .ok_or_else(|| Error::invalid("sweep has no ground-level curve"))?;
    let (alpha_min, alpha_max) = ground.alpha_range();
    match ground.samples.iter().position(|&(_, w)| w < 0.0) {
        Some(0) => Ok(NegativeOnset::NotFound {
            alpha_min,
            alpha_max,
            negative_at_start: true,
        }),
        Some(k) => {
            let (lo, w_lo) = ground.samples[k - 1];
            let (hi, w_hi) = ground.samples[k];
            Ok(NegativeOnset::Bracket { lo, hi, w_lo, w_hi })
        }
        None => Ok(NegativeOnset::NotFound {
            alpha_min,
            alpha_max,
            negative_at_start: false,
        }),
    }
}

/// Printed convergence tables for l = 0: rows of (N, W_0..W_3) with blank
/// cells for N < 4.
pub struct PublishedTable {
    pub which: u8,
    pub alpha: &'static str,
    pub rows: &'static [(usize, &'static [&'static str])],
}

pub const TABLE_1: PublishedTable = PublishedTable {
    which: 1,
    alpha: "-sqrt2",
    rows: &[
        (2, &["4.000000000", "10.49997602"]),
        (3, &["4.000000000", "7.751061995", "19.88102859"]),
        (4, &["4.000000000", "7.694010921", "11.97562584", "33.92039998"]),
        (5, &["4.000000000", "7.693979367", "11.51212379", "17.05520450"]),
        (6, &["4.000000000", "7.693978905", "11.50604696", "15.46896992"]),
        (7, &["4.000000000", "7.693978892", "11.50604243", "15.37652840"]),
        (8, &["4.000000000", "7.693978891", "11.50604238", "15.37592761"]),
        (9, &["4.000000000", "7.693978891", "11.50604238", "15.37592718"]),
        (10, &["4.000000000", "7.693978891", "11.50604238", "15.37592718"]),
    ],
};

pub const TABLE_2: PublishedTable = PublishedTable {
    which: 2,
    alpha: "sqrt2",
    rows: &[
        (2, &["-1.180391283", "4.000000000"]),
        (3, &["-1.401182256", "4.000000000", "9.284143096"]),
        (4, &["-1.449885589", "4.000000000", "8.345259771", "17.66452696"]),
        (5, &["-1.458156835", "4.000000000", "8.344361267", "12.69095166"]),
        (6, &["-1.459389344", "4.000000000", "8.344349784", "12.53313315"]),
        (7, &["-1.459560848", "4.000000000", "8.344349442", "12.53290257"]),
        (8, &["-1.459583736", "4.000000000", "8.344349427", "12.53290132"]),
        (9, &["-1.459586704", "4.000000000", "8.344349427", "12.53290130"]),
        (10, &["-1.459587081", "4.000000000", "8.344349427", "12.53290130"]),
        (11, &["-1.459587128", "4.000000000", "8.344349427", "12.53290130"]),
        (12, &["-1.459587134", "4.000000000", "8.344349427", "12.53290130"]),
        (13, &["-1.459587134", "4.000000000", "8.344349427", "12.53290130"]),
    ],
};

pub fn published_table(which: u8) -> Result<&'static PublishedTable> {
    match which {
        1 => Ok(&TABLE_1),
        2 => Ok(&TABLE_2),
        _ => Err(Error::invalid(format!("no table {which}; choose 1 or 2"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub level: usize,
    pub printed: String,
    pub computed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub cells: Vec<TableCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub which: u8,
    pub l: f64,
    pub alpha: String,
    pub rows: Vec<TableRow>,
    pub mismatches: usize,
}

impl TableReport {
    pub fn pass(&self) -> bool {
        self.mismatches == 0
    }
}

/// Recomputes every printed cell at its basis size and compares after
/// rounding to the printed significant digits.
pub fn reproduce_table(which: u8, prec: Precision) -> Result<TableReport> {
    let table = published_table(which)?;
    let alpha = parse_exact(table.alpha, prec)?;
    let model = ScaledModel::with_alpha(0.0, alpha)?;
    let sizes: Vec<usize> = table.rows.iter().map(|r| r.0).collect();
    let study = ritz::convergence_study(&model, &sizes, 4, prec)?;
    let mut rows = Vec::with_capacity(sizes.len());
    let mut mismatches = 0;
    for (&(n, printed), result) in table.rows.iter().zip(&study.results) {
        // a row has exactly min(N, 4) entries; the rest are blank
        if printed.len() != n.min(4) {
            return Err(Error::CheckFailure(format!("table row N = {n} has {} cells", printed.len())));
        }
        let cells = printed
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let sig = significant_digits(p);
                let computed = format_sig(&result.eigenvalues[k], sig);
                let pass = computed == *p;
                if !pass {
                    mismatches += 1;
                }
                TableCell {
                    level: k,
                    printed: (*p).to_string(),
                    computed,
                    pass,
                }
            })
            .collect();
        rows.push(TableRow { n, cells });
    }
    Ok(TableReport {
        which,
        l: 0.0,
        alpha: table.alpha.to_string(),
        rows,
        mismatches,
    })
}

/// Significant digits of a printed decimal such as "-1.180391283" or "4.000000000".
pub fn significant_digits(printed: &str) -> usize {
    let digits: String = printed.chars().filter(char::is_ascii_digit).collect();
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        1
    } else {
        trimmed.len()
    }
}

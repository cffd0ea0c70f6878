//! Weyl sums `S_N(alpha) = (1/N) sum_{n<N} f(sigma^n x) e^{-2 pi i alpha n}`,
//! grid scans for eigenvalues, and eigenfunction continuity diagnostics.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ergodic::{orbit_values, Observable};
use crate::error::{Error, Result};
use crate::point::{CirclePoint, Point};
use crate::systems::System;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylSumResult {
    pub alpha: f64,
    pub modulus: f64,
    pub phase: f64,
    pub n: u64,
    pub observable: String,
    pub start: String,
}

/// Terms per block; each block starts from an exact phase and advances by
/// complex rotation, keeping the drift below `1e-13`.
const BLOCK: usize = 512;

/// Direct sum over precomputed orbit values at a fixed-point frequency;
/// blocks are reduced in index order.
fn direct_sum(values: &[Complex64], alpha: CirclePoint) -> Complex64 {
    let step = Complex64::cis(-TAU * alpha.phase());
    let partial: Vec<Complex64> = values
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, chunk)| {
            let mut w = Complex64::cis(-TAU * alpha.times((b * BLOCK) as i64).phase());
            let mut acc = Complex64::new(0.0, 0.0);
            for v in chunk {
                acc += v * w;
                w *= step;
            }
            acc
        })
        .collect();
    partial.iter().sum::<Complex64>() / values.len() as f64
}

/// Exact-phase Weyl sum; `alpha` is reduced mod 1 in 64-bit fixed point.
pub fn weyl_sum_at(sys: &dyn System, f: &Observable, x: &Point, alpha: CirclePoint, n: u64) -> Result<WeylSumResult> {
    if n == 0 {
        return Err(Error::invalid("Weyl sums need N >= 1"));
    }
    let values = orbit_values(sys, f, x, 0, n)?;
    let s = direct_sum(&values, alpha);
    Ok(WeylSumResult {
        alpha: alpha.phase(),
        modulus: s.norm(),
        phase: s.arg(),
        n,
        observable: f.label().to_string(),
        start: x.describe(),
    })
}

pub fn weyl_sum(sys: &dyn System, f: &Observable, x: &Point, alpha: f64, n: u64) -> Result<WeylSumResult> {
    weyl_sum_at(sys, f, x, CirclePoint::from_f64(alpha.rem_euclid(1.0)), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub alpha: f64,
    pub modulus: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub observable: String,
    pub n: u64,
    pub resolution: u64,
    /// Regular grid `j/M`, then refinement and seed points.
    pub grid: Vec<GridValue>,
    pub peaks: Vec<GridValue>,
    pub threshold: f64,
    /// Median modulus over the regular grid.
    pub median: f64,
    /// Median modulus over grid points farther than `2/M` from every peak.
    pub off_peak_median: f64,
    /// Empirical variance of `f` along the orbit.
    pub variance: f64,
}

impl SpectrumScan {
    pub fn csv(&self) -> String {
        let mut out = String::from("alpha,modulus,phase\n");
        for g in &self.grid {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", g.alpha, g.modulus, g.phase));
        }
        out
    }

    /// Largest modulus among points within `radius` of `alpha` on the circle.
    pub fn peak_near(&self, alpha: f64, radius: f64) -> Option<GridValue> {
        self.peaks
            .iter()
            .filter(|p| circle_gap(p.alpha, alpha) <= radius)
            .copied()
            .max_by(|a, b| a.modulus.total_cmp(&b.modulus))
    }

    /// `sum |peak|^2 - variance` over peaks away from `alpha = 0`, whose
    /// peak is the mean; nonpositive up to estimation error.
    pub fn parseval_excess(&self) -> f64 {
        let step = 1.0 / self.resolution as f64;
        self.peaks
            .iter()
            .filter(|p| circle_gap(p.alpha, 0.0) >= step)
            .map(|p| p.modulus * p.modulus)
            .sum::<f64>()
            - self.variance
    }
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Circle distance from `a` to the nearest of `sorted` (ascending in `[0, 1)`).
fn nearest_gap(sorted: &[f64], a: f64) -> f64 {
    if sorted.is_empty() {
        return f64::INFINITY;
    }
    let i = sorted.partition_point(|&p| p < a);
    let after = sorted[i % sorted.len()];
    let before = sorted[(i + sorted.len() - 1) % sorted.len()];
    circle_gap(a, after).min(circle_gap(a, before))
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Weyl sums on the grid `j/M` via one FFT of the orbit folded mod `M`.
pub fn grid_weyl_sums(values: &[Complex64], resolution: usize) -> Vec<Complex64> {
    let mut folded = vec![Complex64::new(0.0, 0.0); resolution];
    for (n, v) in values.iter().enumerate() {
        folded[n % resolution] += v;
    }
    FftPlanner::new().plan_fft_forward(resolution).process(&mut folded);
    let scale = 1.0 / values.len() as f64;
    folded.iter().map(|s| s * scale).collect()
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Explicit threshold; `None` uses `max(5 * median, floor)`.
    pub threshold: Option<f64>,
    /// Lower bound for the automatic threshold, relative to the observable bound.
    pub floor: f64,
    /// Dyadic seeds `k / 2^m` for `m <= dyadic_depth`; 0 disables seeding.
    pub dyadic_depth: u32,
    /// Refinement points per peak on `[alpha - 1/M, alpha + 1/M]`.
    pub refine: usize,
    /// Only the strongest grid peaks are refined.
    pub max_refined: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            threshold: None,
            floor: 1e-3,
            dyadic_depth: 0,
            refine: 32,
            max_refined: 16,
        }
    }
}

/// Grid scan at `j/M`, peaks as local maxima above the threshold, each
/// refined by direct sums, plus dyadic seeds when requested.
pub fn eigenvalue_scan(
    sys: &dyn System,
    f: &Observable,
    x: &Point,
    resolution: u64,
    n: u64,
    options: &ScanOptions,
) -> Result<SpectrumScan> {
    if !(4..=1 << 26).contains(&resolution) {
        return Err(Error::invalid("grid resolution must lie in 4..=2^26"));
    }
    if n == 0 {
        return Err(Error::invalid("Weyl sums need N >= 1"));
    }
    let values = orbit_values(sys, f, x, 0, n)?;
    let m = resolution as usize;
    let sums = grid_weyl_sums(&values, m);
    let mut grid: Vec<GridValue> = sums
        .iter()
        .enumerate()
        .map(|(j, s)| GridValue {
            alpha: j as f64 / m as f64,
            modulus: s.norm(),
            phase: s.arg(),
        })
        .collect();
    let med = median(grid.iter().map(|g| g.modulus).collect());
    let threshold = options.threshold.unwrap_or((5.0 * med).max(options.floor * f.bound()));
    let at = |alpha: f64| -> GridValue {
        let s = direct_sum(&values, CirclePoint::from_f64(alpha.rem_euclid(1.0)));
        GridValue {
            alpha: alpha.rem_euclid(1.0),
            modulus: s.norm(),
            phase: s.arg(),
        }
    };
    let mut local_max: Vec<usize> = (0..m)
        .filter(|&j| {
            let c = grid[j].modulus;
            c >= threshold && c > grid[(j + m - 1) % m].modulus && c >= grid[(j + 1) % m].modulus
        })
        .collect();
    local_max.sort_by(|&a, &b| grid[b].modulus.total_cmp(&grid[a].modulus).then(a.cmp(&b)));
    let step = 1.0 / m as f64;
    let refined: Vec<(GridValue, Vec<GridValue>)> = local_max
        .par_iter()
        .enumerate()
        .map(|(rank, &j)| {
            if rank >= options.max_refined {
                return (grid[j], Vec::new());
            }
            let center = grid[j].alpha;
            let pts: Vec<GridValue> = (0..=options.refine)
                .map(|i| at(center - step + 2.0 * step * i as f64 / options.refine.max(1) as f64))
                .collect();
            let best = pts
                .iter()
                .chain(std::iter::once(&grid[j]))
                .copied()
                .max_by(|a, b| a.modulus.total_cmp(&b.modulus))
                .expect("nonempty");
            (best, pts)
        })
        .collect();
    let mut peaks: Vec<GridValue> = Vec::new();
    for (best, pts) in refined {
        peaks.push(best);
        grid.extend(pts);
    }
    if options.dyadic_depth > 0 {
        let seeds: Vec<f64> = (1..=options.dyadic_depth)
            .flat_map(|d| (1..1u64 << d).step_by(2).map(move |k| k as f64 / (1u64 << d) as f64))
            .collect();
        let seeded: Vec<GridValue> = seeds.par_iter().map(|&a| at(a)).collect();
        for s in seeded {
            if s.modulus >= threshold && !peaks.iter().any(|p| circle_gap(p.alpha, s.alpha) < step) {
                peaks.push(s);
            }
            grid.push(s);
        }
    }
    peaks.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let peak_alphas: Vec<f64> = peaks.iter().map(|p| p.alpha).collect();
    let off_peak_median = median(
        grid[..m]
            .iter()
            .filter(|g| nearest_gap(&peak_alphas, g.alpha) > 2.0 * step)
            .map(|g| g.modulus)
            .collect(),
    );
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let variance = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / values.len() as f64;
    Ok(SpectrumScan {
        observable: f.label().to_string(),
        n,
        resolution,
        grid,
        peaks,
        threshold,
        median: med,
        off_peak_median,
        variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityPoint {
    pub distance: f64,
    pub difference: f64,
}

/// Rows `(d(x, y), |phi(x) - phi(y)|)` sorted by decreasing distance, with
/// `phi` the Weyl-sum eigenfunction estimate at `alpha`.
pub fn eigenfunction_continuity_check(
    sys: &dyn System,
    f: &Observable,
    alpha: f64,
    pairs: &[(Point, Point)],
    n: u64,
    horizon: u64,
) -> Result<Vec<ContinuityPoint>> {
    let a = CirclePoint::from_f64(alpha.rem_euclid(1.0));
    let phi = |p: &Point| -> Result<Complex64> { Ok(direct_sum(&orbit_values(sys, f, p, 0, n)?, a)) };
    let mut rows = pairs
        .iter()
        .map(|(x, y)| {
            Ok(ContinuityPoint {
                distance: sys.distance(x, y, horizon)?.value,
                difference: (phi(x)? - phi(y)?).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.distance.total_cmp(&a.distance));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{Periodic, RotationNumber, SymbolicPoint};
    use crate::systems::{catalog, RotationSystem, SubshiftSystem};

    fn one() -> Observable {
        Observable::constant(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn constant_observable_sums() {
        let sys = RotationSystem::new(RotationNumber::golden_default());
        let x = sys.sample(0).unwrap();
        assert!((weyl_sum(&sys, &one(), &x, 0.0, 100).unwrap().modulus - 1.0).abs() < 1e-15);
        assert!(weyl_sum(&sys, &one(), &x, 0.5, 101).unwrap().modulus <= 1.0 / 101.0 + 1e-15);
    }

    #[test]
    fn exact_rotation_eigenfunction() {
        let alpha = RotationNumber::golden_default();
        let sys = RotationSystem::new(alpha.clone());
        let x = sys.sample(3).unwrap();
        for n in [1u64, 17, 1000] {
            let w = weyl_sum_at(&sys, &Observable::character(1), &x, alpha.phase, n).unwrap();
            assert!((w.modulus - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_grid_matches_direct_sums() {
        let sys = catalog::period_doubling(0).unwrap();
        let x = sys.sample(0).unwrap();
        let values = orbit_values(sys.as_ref(), &Observable::sign(), &x, 0, 1000).unwrap();
        for m in [64usize, 1024, 4096] {
            let fast = grid_weyl_sums(&values, m);
            for j in (0..m).step_by(m / 32) {
                let direct = direct_sum(&values, CirclePoint::from_f64(j as f64 / m as f64));
                assert!((fast[j] - direct).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn nearest_gap_wraps() {
        let peaks = [0.1, 0.5, 0.95];
        for a in [0.0, 0.02, 0.3, 0.5, 0.7, 0.99] {
            let brute = peaks.iter().map(|&p| circle_gap(a, p)).fold(f64::INFINITY, f64::min);
            assert_eq!(nearest_gap(&peaks, a), brute, "{a}");
        }
        assert_eq!(nearest_gap(&[], 0.3), f64::INFINITY);
    }

    #[test]
    fn blocked_sum_matches_per_term_phases() {
        let values: Vec<Complex64> = (0..20_000u64)
            .map(|n| Complex64::new((n.wrapping_mul(0x9e37_79b9) >> 7 & 1) as f64, (n % 3) as f64))
            .collect();
        for alpha in [0.0, 0.5, 0.3819660112501051, 1e-7, 0.999] {
            let a = CirclePoint::from_f64(alpha);
            let exact: Complex64 = values
                .iter()
                .enumerate()
                .map(|(n, v)| v * Complex64::cis(-TAU * a.times(n as i64).phase()))
                .sum::<Complex64>()
                / values.len() as f64;
            assert!((direct_sum(&values, a) - exact).norm() < 1e-12, "{alpha}");
        }
    }

    #[test]
    fn constant_system_has_only_the_zero_peak() {
        let x = SymbolicPoint::from_source(Periodic::constant(2, 1).unwrap());
        let sys = SubshiftSystem::new("constant", vec![x.clone()], 0).unwrap();
        let scan = eigenvalue_scan(&sys, &Observable::coordinate(), &Point::Symbolic(x), 256, 4096, &ScanOptions::default())
            .unwrap();
        assert_eq!(scan.peaks.len(), 1);
        assert_eq!(scan.peaks[0].alpha, 0.0);
    }

    #[test]
    fn period_doubling_half_peak() {
        let sys = catalog::period_doubling(0).unwrap();
        let x = sys.sample(0).unwrap();
        let opts = ScanOptions {
            dyadic_depth: 6,
            ..ScanOptions::default()
        };
        let scan = eigenvalue_scan(sys.as_ref(), &Observable::sign(), &x, 1 << 10, 1 << 14, &opts).unwrap();
        let p = scan.peak_near(0.5, 1e-9).unwrap();
        assert!(p.modulus >= 1.0 / 3.0);
        assert!(scan.parseval_excess() <= 1e-9 + 1e-2);
    }

    #[test]
    fn rotation_eigenfunction_is_lipschitz() {
        let sys = RotationSystem::new(RotationNumber::golden_default());
        let pairs: Vec<(Point, Point)> = (0..5)
            .map(|k| {
                let a = CirclePoint::from_f64(0.2);
                (Point::Circle(a), Point::Circle(a + CirclePoint::from_f64(0.1 / (k + 1) as f64)))
            })
            .collect();
        let rows = eigenfunction_continuity_check(
            &sys,
            &Observable::character(1),
            RotationNumber::golden_default().value(),
            &pairs,
            500,
            64,
        )
        .unwrap();
        for r in &rows {
            assert!(r.difference <= TAU * r.distance + 1e-9);
        }
        assert!(rows.windows(2).all(|w| w[0].distance >= w[1].distance));
    }

    #[test]
    fn shift_changes_modulus_by_a_boundary_term() {
        let sys = catalog::thue_morse(0).unwrap();
        let x = sys.sample(0).unwrap();
        let sx = sys.act(&crate::GroupElement::z(1), &x).unwrap();
        let n = 4096;
        for alpha in [0.1, 1.0 / 3.0, 0.77] {
            let a = weyl_sum(sys.as_ref(), &Observable::sign(), &x, alpha, n).unwrap();
            let b = weyl_sum(sys.as_ref(), &Observable::sign(), &sx, alpha, n).unwrap();
            assert!((a.modulus - b.modulus).abs() <= 2.0 / n as f64 + 1e-12);
            assert!(a.modulus <= 1.0);
        }
    }
}

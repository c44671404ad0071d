//! W/T parameter sweeps: branch-tracked spectra, the cubic shift fit,
//! avoided-crossing location, and the Landau-Zener ramp analysis.

use crate::eig::{lowest_k, AffineOp, EigenResult};
use crate::error::{Error, Result};
use crate::fock::SectorBasis;
use crate::model::{ModelParams, SparseHamiltonian};
use serde::Serialize;

/// A sweep specification: W/T values, fixed remaining couplings, how many
/// states to track, and the solver controls.
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub w_values: Vec<f64>,
    /// Remaining couplings; the `w` field is overridden per grid point.
    pub base: ModelParams,
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
}

impl SweepGrid {
    pub fn from_range(lo: f64, hi: f64, step: f64, base: ModelParams, k: usize, tol: f64, seed: u64) -> Result<SweepGrid> {
        if !(step > 0.0) || hi < lo {
            return Err(Error::Domain(format!("invalid grid {lo}:{hi}:{step}")));
        }
        let mut w_values = Vec::new();
        let n = ((hi - lo) / step).round() as usize;
        for i in 0..=n {
            let w = lo + step * i as f64;
            if w <= hi + 1e-9 {
                w_values.push(w);
            }
        }
        SweepGrid::from_values(w_values, base, k, tol, seed)
    }

    pub fn from_values(w_values: Vec<f64>, base: ModelParams, k: usize, tol: f64, seed: u64) -> Result<SweepGrid> {
        if w_values.is_empty() {
            return Err(Error::Domain("empty sweep grid".into()));
        }
        if w_values.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Domain("sweep grid must be strictly increasing".into()));
        }
        Ok(SweepGrid {
            w_values,
            base,
            k,
            tol,
            seed,
        })
    }
}

/// One solved grid point. `branch[b]` is the index (into the ascending
/// eigenvalue list) of the state continuing branch `b` from the previous
/// point, matched by maximal overlap.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub w: f64,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    pub branch: Vec<usize>,
    /// |overlap| with the previous point's matched state (1.0 at the first point).
    pub overlap: Vec<f64>,
    /// Per-point solver failure, with best-effort energies retained.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub k: usize,
}

impl SweepResult {
    /// Energy of tracked branch `b` at point `i`.
    pub fn branch_energy(&self, i: usize, b: usize) -> f64 {
        let p = &self.points[i];
        p.energies[p.branch[b]]
    }
}

/// Run the sweep. The Hamiltonian is assembled once as a fixed part plus a
/// W-coefficient part sharing the basis; each grid point solves the affine
/// combination. `on_point` sees each point while its eigenvectors are alive.
pub fn run_sweep(
    grid: &SweepGrid,
    basis: &SectorBasis,
    mut on_point: impl FnMut(&SweepPoint, &EigenResult),
) -> Result<SweepResult> {
    if grid.k < 1 {
        return Err(Error::Domain("sweep needs k >= 1".into()));
    }
    let fixed = SparseHamiltonian::build(&grid.base.with_w(0.0), basis)?;
    let w_unit = ModelParams {
        t: 0.0,
        u_plus: 0.0,
        u_minus: 0.0,
        u: 0.0,
        so_fwd: 0.0,
        so_bwd: 0.0,
        w: 1.0,
    };
    let wcoef = SparseHamiltonian::build(&w_unit, basis)?;

    let mut points = Vec::with_capacity(grid.w_values.len());
    let mut prev: Option<Vec<Vec<f64>>> = None; // previous vectors in branch order
    for &w in &grid.w_values {
        let op = AffineOp {
            fixed: &fixed,
            scaled: &wcoef,
            factor: w,
        };
        let (eig, error) = match lowest_k(&op, grid.k, grid.tol, grid.seed) {
            Ok(r) => (r, None),
            Err(Error::Convergence { message, best }) => (*best, Some(message)),
            Err(e) => return Err(e),
        };
        let kk = eig.eigenvalues.len();
        let (branch, overlap) = match &prev {
            None => ((0..kk).collect::<Vec<_>>(), vec![1.0; kk]),
            Some(pv) => match_branches(pv, &eig.eigenvectors),
        };
        let point = SweepPoint {
            w,
            energies: eig.eigenvalues.clone(),
            residuals: eig.residuals.clone(),
            branch,
            overlap,
            error,
        };
        on_point(&point, &eig);
        prev = Some(
            point
                .branch
                .iter()
                .map(|&i| eig.eigenvectors[i].clone())
                .collect(),
        );
        points.push(point);
    }
    Ok(SweepResult { points, k: grid.k })
}

/// Greedy maximal-|overlap| assignment of current states to branches; ties
/// broken by energy order (stable sort on equal overlaps).
fn match_branches(prev: &[Vec<f64>], cur: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let nb = prev.len().min(cur.len());
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (b, pv) in prev.iter().enumerate().take(nb) {
        for (i, cv) in cur.iter().enumerate() {
            let o: f64 = pv.iter().zip(cv).map(|(a, c)| a * c).sum();
            pairs.push((b, i, o.abs()));
        }
    }
    pairs.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .unwrap()
            .then(x.0.cmp(&y.0))
            .then(x.1.cmp(&y.1))
    });
    let mut branch = vec![usize::MAX; cur.len()];
    let mut overlap = vec![0.0; cur.len()];
    let mut used_b = vec![false; nb];
    let mut used_i = vec![false; cur.len()];
    for (b, i, o) in pairs {
        if !used_b[b] && !used_i[i] {
            used_b[b] = true;
            used_i[i] = true;
            branch[b] = i;
            overlap[b] = o;
        }
    }
    // branches beyond the previous count (k grew) map by energy order
    let mut spare: Vec<usize> = (0..cur.len()).filter(|i| !used_i[*i]).collect();
    spare.sort_unstable();
    for b in nb..cur.len() {
        branch[b] = spare.remove(0);
        overlap[b] = 0.0;
    }
    (branch, overlap)
}

/// Least-squares cubic through the per-point mean of the four lowest
/// energies, used to shift the plotted spectrum toward zero.
#[derive(Clone, Debug, Serialize)]
pub struct CubicFit {
    /// (c3, c2, c1, c0) of c3 x^3 + c2 x^2 + c1 x + c0.
    pub coeffs: [f64; 4],
    pub residual_rms: f64,
}

impl CubicFit {
    pub fn eval(&self, x: f64) -> f64 {
        ((self.coeffs[0] * x + self.coeffs[1]) * x + self.coeffs[2]) * x + self.coeffs[3]
    }
}

pub fn cubic_shift_fit(sweep: &SweepResult) -> Result<CubicFit> {
    let pts: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .filter(|p| p.error.is_none())
        .map(|p| {
            if p.energies.len() < 4 {
                Err(Error::Domain(
                    "cubic shift fit needs at least 4 states per point".into(),
                ))
            } else {
                Ok((p.w, p.energies[..4].iter().sum::<f64>() / 4.0))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 8 {
        return Err(Error::Domain(format!(
            "cubic shift fit needs at least 8 points, got {}",
            pts.len()
        )));
    }
    let coeffs = polyfit(&pts, 3)?;
    let mut ss = 0.0;
    for &(x, y) in &pts {
        let f = ((coeffs[0] * x + coeffs[1]) * x + coeffs[2]) * x + coeffs[3];
        ss += (y - f) * (y - f);
    }
    Ok(CubicFit {
        coeffs: [coeffs[0], coeffs[1], coeffs[2], coeffs[3]],
        residual_rms: (ss / pts.len() as f64).sqrt(),
    })
}

/// Least-squares polynomial fit, coefficients from highest degree down.
fn polyfit(pts: &[(f64, f64)], degree: usize) -> Result<Vec<f64>> {
    let n = pts.len();
    if n < degree + 1 {
        return Err(Error::Domain(format!(
            "{n} points cannot determine a degree-{degree} fit"
        )));
    }
    let mut a = nalgebra::DMatrix::zeros(n, degree + 1);
    let mut b = nalgebra::DVector::zeros(n);
    for (r, &(x, y)) in pts.iter().enumerate() {
        let mut p = 1.0;
        for c in (0..=degree).rev() {
            a[(r, c)] = p;
            p *= x;
        }
        b[r] = y;
    }
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Domain(format!("rank-deficient fit: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Linear least-squares slope over (x, y) pairs.
fn linear_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::Domain(
            "slope window holds fewer than 2 grid points".into(),
        ));
    }
    let c = polyfit(pts, 1)?;
    Ok(c[0])
}

/// Windows (in units of W/T, relative to W*) used for the diabatic slope
/// fits: each side fits over [inner, outer] away from W*, just outside the
/// central mixing region (whose half-width is roughly gap / slope difference).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeWindows {
    pub inner: f64,
    pub outer: f64,
}

impl Default for SlopeWindows {
    fn default() -> Self {
        SlopeWindows {
            inner: 0.25,
            outer: 0.75,
        }
    }
}

/// An avoided crossing between two sorted levels: refined location, minimal
/// gap, and the diabatic slopes read off the lower level on either side of
/// W* (left of W* the lower level follows one diabatic line, right of W*
/// the other, so the two window fits recover both crossing lines).
#[derive(Clone, Debug, Serialize)]
pub struct CrossingReport {
    /// Crossing location, units of |T|.
    pub w_star: f64,
    /// Minimal level separation E_hi - E_lo at W*, units of |T|.
    pub gap: f64,
    /// Diabatic slopes dE/dW (dimensionless) from the lower level fitted
    /// over the window left of W* and right of W* respectively.
    pub slope_left: f64,
    pub slope_right: f64,
    pub level_lo: usize,
    pub level_hi: usize,
}

impl CrossingReport {
    pub fn slope_diff(&self) -> f64 {
        (self.slope_right - self.slope_left).abs()
    }
}

/// Interior minimum of the sorted-level gap E_hi - E_lo with parabolic
/// refinement between grid points. Errors when no interior local minimum
/// exists.
fn gap_minimum(sweep: &SweepResult, level_lo: usize, level_hi: usize) -> Result<(f64, f64)> {
    let n = sweep.points.len();
    if n < 3 {
        return Err(Error::Domain("gap search needs at least 3 grid points".into()));
    }
    let gap =
        |i: usize| sweep.points[i].energies[level_hi] - sweep.points[i].energies[level_lo];
    let mut best: Option<usize> = None;
    for i in 1..n - 1 {
        if gap(i) <= gap(i - 1) && gap(i) <= gap(i + 1) {
            match best {
                Some(b) if gap(b) <= gap(i) => {}
                _ => best = Some(i),
            }
        }
    }
    let i = best.ok_or_else(|| {
        Error::NotFound("no interior gap minimum between the requested levels".into())
    })?;
    // parabola through the three bracketing points
    let (x0, x1, x2) = (
        sweep.points[i - 1].w,
        sweep.points[i].w,
        sweep.points[i + 1].w,
    );
    let (y0, y1, y2) = (gap(i - 1), gap(i), gap(i + 1));
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv <= 0.0 {
        return Ok((x1, y1));
    }
    // vertex of the interpolating parabola
    let a = curv;
    let b = d01 - a * (x0 + x1);
    let c = y0 - a * x0 * x0 - b * x0;
    let wv = -b / (2.0 * a);
    let gv = (a * wv * wv + b * wv + c).max(0.0);
    Ok((wv, gv))
}

/// Locate the avoided crossing between two sorted levels: the interior
/// minimum of their gap (parabolically refined) plus the diabatic slopes of
/// the lower level fitted over windows on both sides of W*. Higher sorted
/// levels are not useful slope witnesses here: spectator states slide
/// through the upper index near a real crossing, while the lower level
/// follows one diabatic line on each side by construction.
pub fn find_avoided_crossing(
    sweep: &SweepResult,
    level_lo: usize,
    level_hi: usize,
    windows: &SlopeWindows,
) -> Result<CrossingReport> {
    if level_lo >= sweep.k || level_hi >= sweep.k || level_lo >= level_hi {
        return Err(Error::Domain(format!(
            "levels ({level_lo}, {level_hi}) not covered by a k={} sweep",
            sweep.k
        )));
    }
    if !(windows.inner > 0.0) || windows.outer <= windows.inner {
        return Err(Error::Domain(format!(
            "slope windows need 0 < inner < outer, got ({}, {})",
            windows.inner, windows.outer
        )));
    }
    let (w_star, gap) = gap_minimum(sweep, level_lo, level_hi)?;

    let collect = |side_left: bool| -> Vec<(f64, f64)> {
        sweep
            .points
            .iter()
            .filter(|p| {
                let d = p.w - w_star;
                if side_left {
                    d >= -windows.outer && d <= -windows.inner
                } else {
                    d >= windows.inner && d <= windows.outer
                }
            })
            .map(|p| (p.w, p.energies[level_lo]))
            .collect()
    };
    let slope_left = linear_slope(&collect(true))?;
    let slope_right = linear_slope(&collect(false))?;

    Ok(CrossingReport {
        w_star,
        gap,
        slope_left,
        slope_right,
        level_lo,
        level_hi,
    })
}

/// Refinement controls for the crossing search: a finer grid of the given
/// step within +-window of the coarse gap minimum.
#[derive(Clone, Copy, Debug)]
pub struct RefineOpts {
    pub window: f64,
    pub step: f64,
}

impl Default for RefineOpts {
    fn default() -> Self {
        RefineOpts {
            window: 1.0,
            step: 0.025,
        }
    }
}

/// Coarse sweep to bracket the gap minimum, then a refined sweep around it.
/// W*, the gap, and the slope windows all come from the refined grid, so the
/// refinement window must leave room for the outer slope window.
pub fn locate_crossing(
    grid: &SweepGrid,
    basis: &SectorBasis,
    level_lo: usize,
    level_hi: usize,
    windows: &SlopeWindows,
    refine: &RefineOpts,
    mut on_point: impl FnMut(&SweepPoint, &EigenResult),
) -> Result<(SweepResult, SweepResult, CrossingReport)> {
    if refine.window < windows.outer {
        return Err(Error::Domain(format!(
            "refinement window {} cannot hold the outer slope window {}",
            refine.window, windows.outer
        )));
    }
    let coarse = run_sweep(grid, basis, &mut on_point)?;
    if level_lo >= coarse.k || level_hi >= coarse.k || level_lo >= level_hi {
        return Err(Error::Domain(format!(
            "levels ({level_lo}, {level_hi}) not covered by a k={} sweep",
            coarse.k
        )));
    }
    let (w_coarse, _) = gap_minimum(&coarse, level_lo, level_hi)?;

    let fine_grid = SweepGrid::from_range(
        w_coarse - refine.window,
        w_coarse + refine.window,
        refine.step,
        grid.base,
        grid.k,
        grid.tol,
        grid.seed,
    )?;
    let fine = run_sweep(&fine_grid, basis, &mut on_point)?;
    let report = find_avoided_crossing(&fine, level_lo, level_hi, windows)?;
    Ok((coarse, fine, report))
}

/// Landau-Zener analysis of a crossing at a physical tunneling scale.
/// All energies are quoted in h*Hz, ramp rates in h*Hz/s.
#[derive(Clone, Debug, Serialize)]
pub struct LandauZenerReport {
    pub t_phys_hz: f64,
    pub delta_phys_hz: f64,
    pub slope_diff: f64,
    /// Ramp rate at which the adiabatic transition probability is 1/2.
    pub critical_rate_hz_per_s: f64,
    pub rates: Vec<RatePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatePoint {
    pub rate_hz_per_s: f64,
    pub gamma: f64,
    pub probability: f64,
}

/// P = 1 - exp(-2 pi Gamma) with Gamma = Delta^2 / hbar / (4 |s2 - s1| dW/dt).
/// With every energy in h*Hz the hbar/h = 1/(2 pi) conversion folds into
/// Gamma = 2 pi Delta^2 / (4 |s2 - s1| rate).
pub fn landau_zener(
    crossing: &CrossingReport,
    t_phys_hz: f64,
    rates: &[f64],
) -> Result<LandauZenerReport> {
    if crossing.gap <= 0.0 {
        return Err(Error::Domain(
            "degenerate crossing: zero gap admits no Landau-Zener analysis".into(),
        ));
    }
    if !(t_phys_hz > 0.0) {
        return Err(Error::Domain("physical tunneling scale must be positive".into()));
    }
    let slope_diff = crossing.slope_diff();
    if slope_diff == 0.0 {
        return Err(Error::Domain("diabatic branches have equal slopes".into()));
    }
    let delta_phys = crossing.gap * t_phys_hz;
    // Gamma * rate is constant for a fixed crossing
    let gamma_rate = 2.0 * std::f64::consts::PI * delta_phys * delta_phys / (4.0 * slope_diff);
    let gamma_crit = std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI);
    let critical_rate = gamma_rate / gamma_crit;
    let mut points = Vec::with_capacity(rates.len());
    for &rate in rates {
        if !(rate > 0.0) {
            return Err(Error::Domain(format!("ramp rate {rate} must be positive")));
        }
        let gamma = gamma_rate / rate;
        let probability = 1.0 - (-2.0 * std::f64::consts::PI * gamma).exp();
        points.push(RatePoint {
            rate_hz_per_s: rate,
            gamma,
            probability,
        });
    }
    Ok(LandauZenerReport {
        t_phys_hz,
        delta_phys_hz: delta_phys,
        slope_diff,
        critical_rate_hz_per_s: critical_rate,
        rates: points,
    })
}

//! Band structure of periodic Schrödinger operators.
//!
//! For a period-`n` potential the spectrum is `{E : |psi(E)| <= 2}` where
//! `psi` is the trace of the monodromy. It consists of `n` bands whose edges
//! are the eigenvalues of the periodic (`psi = 2`) and antiperiodic
//! (`psi = -2`) `n x n` problems. Sorting all `2n` of these eigenvalues gives
//! `e_0 <= e_1 <= ... <= e_{2n-1}` and band `k` is `[e_{2k}, e_{2k+1}]`.
//!
//! Edges are located by bisection on the integer-valued count of periodic
//! plus antiperiodic eigenvalues below `E`, obtained from LDLᵀ inertia. The
//! count is backward stable, so edges stay accurate even when bands are
//! exponentially thin and the monodromy product has lost every digit of
//! `psi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cocycle::{monodromy, step_matrix, transfer_scaled, Mat2, ScaledMat2};
use crate::intervals::IntervalSet;
use crate::odometer::Potential;
use crate::quad;
use crate::{Error, Result};

/// Tolerances used by [`compute_bands_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandOptions {
    /// Absolute width at which bisection of an edge stops.
    pub root_tol: f64,
    /// Consecutive band edges closer than this are candidates for touching.
    pub touch_tol: f64,
    /// Entrywise tolerance for recognizing a monodromy of `±id`.
    pub identity_tol: f64,
    /// Maximum bisection depth before an isolation error.
    pub max_depth: u32,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self {
            root_tol: 1e-12,
            touch_tol: 1e-9,
            identity_tol: 1e-6,
            max_depth: 200,
        }
    }
}

/// Closure of one connected component of `{|psi| < 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub touches_prev: bool,
    pub touches_next: bool,
}

impl Band {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Spectrum of `lambda * v` as an ordered list of bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDescription {
    pub period: usize,
    pub lambda: f64,
    /// Exactly `period` bands in increasing order.
    pub bands: Vec<Band>,
    /// Sum of band lengths.
    pub measure: f64,
    /// Number of connected components after merging touching bands.
    pub component_count: usize,
    /// Indices `k` where bands `k` and `k + 1` nearly meet but the monodromy
    /// is not `±id`; these are kept as separate components.
    pub near_touches: Vec<usize>,
    pub options: BandOptions,
}

impl SpectrumDescription {
    /// The spectrum as a union of closed intervals.
    pub fn as_set(&self) -> IntervalSet {
        IntervalSet::from_intervals(self.bands.iter().map(|b| (b.lo, b.hi)).collect())
    }

    /// Components, merging only bands flagged as touching.
    pub fn components(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.component_count);
        for b in &self.bands {
            match out.last_mut() {
                Some(last) if b.touches_prev => last.1 = b.hi,
                _ => out.push((b.lo, b.hi)),
            }
        }
        out
    }

    /// Lengths of the gaps between consecutive components.
    pub fn gap_lengths(&self) -> Vec<f64> {
        self.components().windows(2).map(|w| w[1].0 - w[0].1).collect()
    }

    /// Smallest gap, or `None` for a single component.
    pub fn min_gap(&self) -> Option<f64> {
        self.gap_lengths().into_iter().reduce(f64::min)
    }

    /// Allowance on `measure`: each reported edge lies within `root_tol` of
    /// the true one, so bands narrower than that are not resolved.
    pub fn measure_tolerance(&self) -> f64 {
        2.0 * self.period as f64 * self.options.root_tol
    }

    pub fn max_band_length(&self) -> f64 {
        self.bands.iter().map(Band::length).fold(0.0, f64::max)
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.bands.iter().any(|b| b.lo <= energy && energy <= b.hi)
    }

    /// Band edges in order, `2 * period` values.
    pub fn edges(&self) -> Vec<f64> {
        self.bands.iter().flat_map(|b| [b.lo, b.hi]).collect()
    }
}

/// `psi(E)`, the trace of the monodromy.
pub fn discriminant(energy: f64, v: &Potential) -> f64 {
    monodromy(energy, v).trace()
}

const PIVMIN: f64 = 1.5e-154;

#[inline]
fn guard(d: f64) -> f64 {
    if d.abs() < PIVMIN {
        PIVMIN
    } else {
        d
    }
}

/// Number of periodic plus antiperiodic eigenvalues strictly below `energy`.
///
/// Equivalently the number of band edges below `energy`: 0 below the
/// spectrum, `2n` above it, odd exactly in the interior of a band.
pub fn edge_count(w: &Potential, energy: f64) -> usize {
    let v = w.values();
    let n = v.len();
    if n == 1 {
        return usize::from(v[0] + 2.0 - energy < 0.0) + usize::from(v[0] - 2.0 - energy < 0.0);
    }
    // LDL^T of H - E in site order; the corner bond fills in the last column.
    // Pivots do not depend on the boundary sign, only the fill-in does.
    let last = n - 1;
    let mut neg = 0usize;
    let mut d = v[0] - energy;
    let neighbor = if last == 1 { 1.0 } else { 0.0 };
    let (mut c_per, mut c_anti) = (1.0 + neighbor, -1.0 + neighbor);
    let (mut z_per, mut z_anti) = (v[last] - energy, v[last] - energy);
    for i in 0..last {
        d = guard(d);
        neg += usize::from(d < 0.0);
        let inv = 1.0 / d;
        z_per -= c_per * c_per * inv;
        z_anti -= c_anti * c_anti * inv;
        if i + 1 < last {
            let bond = if i + 2 == last { 1.0 } else { 0.0 };
            c_per = bond - c_per * inv;
            c_anti = bond - c_anti * inv;
            d = v[i + 1] - energy - inv;
        }
    }
    2 * neg + usize::from(z_per < 0.0) + usize::from(z_anti < 0.0)
}

struct Isolator<'a> {
    w: &'a Potential,
    tol: f64,
    max_depth: u32,
    edges: Vec<f64>,
}

impl Isolator<'_> {
    fn run(&mut self, lo: f64, hi: f64, c_lo: usize, c_hi: usize, depth: u32) -> Result<()> {
        if c_lo == c_hi {
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= self.tol || !(lo < mid && mid < hi) {
            self.edges.extend(std::iter::repeat(mid).take(c_hi - c_lo));
            return Ok(());
        }
        if depth >= self.max_depth {
            return Err(Error::Isolation {
                lo,
                hi,
                reason: format!("no convergence after {depth} bisections"),
            });
        }
        let mut c_mid = edge_count(self.w, mid);
        if c_mid < c_lo || c_mid > c_hi {
            if hi - lo > 1e-6 * (1.0 + mid.abs()) {
                return Err(Error::Isolation {
                    lo,
                    hi,
                    reason: format!("edge count {c_mid} outside [{c_lo}, {c_hi}]"),
                });
            }
            // rounding noise in a tiny interval
            c_mid = c_mid.clamp(c_lo, c_hi);
        }
        self.run(lo, mid, c_lo, c_mid, depth + 1)?;
        self.run(mid, hi, c_mid, c_hi, depth + 1)
    }
}

/// All `2n` band edges of `w` in increasing order (with multiplicity).
pub fn band_edges(w: &Potential, tol: f64, max_depth: u32) -> Result<Vec<f64>> {
    let n = w.period();
    // Irregular offsets keep bisection midpoints away from the exact
    // rational energies where symmetric potentials have zero pivots.
    let lo = w.min() - 2.5 - 0.013_971_245_3;
    let hi = w.max() + 2.5 + 0.029_107_811_9;
    let (c_lo, c_hi) = (edge_count(w, lo), edge_count(w, hi));
    if c_lo != 0 || c_hi != 2 * n {
        return Err(Error::Isolation {
            lo,
            hi,
            reason: format!("window holds edge counts {c_lo}..{c_hi}, expected 0..{}", 2 * n),
        });
    }
    let mut iso = Isolator {
        w,
        tol,
        max_depth,
        edges: Vec::with_capacity(2 * n),
    };
    iso.run(lo, hi, 0, 2 * n, 0)?;
    Ok(iso.edges)
}

fn is_plus_minus_identity(m: &Mat2, tol: f64) -> bool {
    m.max_abs_diff(&Mat2::IDENTITY) <= tol || m.max_abs_diff(&Mat2::IDENTITY.scale(-1.0)) <= tol
}

pub fn compute_bands(v: &Potential, lambda: f64) -> Result<SpectrumDescription> {
    compute_bands_with(v, lambda, &BandOptions::default())
}

/// Spectrum of `lambda * v`.
///
/// Negative couplings reuse the positive one: conjugating by `(-1)^n` maps
/// the operator with potential `-v` to minus the one with `v`, so
/// `Sigma(-v) = -Sigma(v)`.
pub fn compute_bands_with(v: &Potential, lambda: f64, opts: &BandOptions) -> Result<SpectrumDescription> {
    if lambda < 0.0 {
        let pos = compute_bands_with(v, -lambda, opts)?;
        let n = pos.period;
        return Ok(SpectrumDescription {
            lambda,
            bands: pos
                .bands
                .iter()
                .rev()
                .map(|b| Band {
                    lo: -b.hi,
                    hi: -b.lo,
                    touches_prev: b.touches_next,
                    touches_next: b.touches_prev,
                })
                .collect(),
            near_touches: pos.near_touches.iter().rev().map(|&k| n - 2 - k).collect(),
            ..pos
        });
    }
    let lv = v.scaled(lambda);
    let n = lv.period();
    let edges = band_edges(&lv, opts.root_tol, opts.max_depth)?;
    let mut bands: Vec<Band> = edges
        .chunks_exact(2)
        .map(|e| Band {
            lo: e[0],
            hi: e[1],
            touches_prev: false,
            touches_next: false,
        })
        .collect();
    let mut near_touches = Vec::new();
    for k in 0..n.saturating_sub(1) {
        let (a, b) = (bands[k].hi, bands[k + 1].lo);
        if b - a < opts.touch_tol {
            let mid = 0.5 * (a + b);
            if is_plus_minus_identity(&monodromy(mid, &lv), opts.identity_tol) {
                bands[k].hi = mid;
                bands[k + 1].lo = mid;
                bands[k].touches_next = true;
                bands[k + 1].touches_prev = true;
            } else {
                near_touches.push(k);
            }
        }
    }
    let measure = bands.iter().map(Band::length).sum();
    let component_count = n - bands.iter().filter(|b| b.touches_next).count();
    Ok(SpectrumDescription {
        period: n,
        lambda,
        bands,
        measure,
        component_count,
        near_touches,
        options: *opts,
    })
}

pub fn spectrum_measure(v: &Potential, lambda: f64) -> Result<f64> {
    Ok(compute_bands(v, lambda)?.measure)
}

/// Hausdorff distance between the spectra of `lambda * v` and `lambda * w`.
pub fn spectrum_hausdorff_distance(v: &Potential, w: &Potential, lambda: f64) -> Result<f64> {
    let a = compute_bands(v, lambda)?.as_set();
    let b = compute_bands(w, lambda)?.as_set();
    Ok(a.hausdorff(&b))
}

/// Matrix `B` in SL(2,R) with `B M B^-1` a rotation, for elliptic `M`.
///
/// Built from the complex eigenvector of `M`; `None` unless `|tr M| < 2`.
pub fn rotation_conjugator(m: &Mat2) -> Option<Mat2> {
    let half = 0.5 * m.trace();
    let s2 = 1.0 - half * half;
    if !(s2 > 0.0) {
        return None;
    }
    let s = s2.sqrt();
    // columns (x, y) with M (x + iy) = e^{i phi} (x + iy)
    let p = if m.b.abs() >= m.c.abs() {
        Mat2::new(m.b, 0.0, 0.5 * (m.d - m.a), s)
    } else {
        Mat2::new(0.5 * (m.a - m.d), s, m.c, 0.0)
    };
    let det = p.det();
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut p = p.scale(1.0 / det.abs().sqrt());
    if det < 0.0 {
        // use the conjugate eigenvector
        p.b = -p.b;
        p.d = -p.d;
    }
    Some(p.adjugate())
}

/// `b̂(E) = (1/(4 pi n)) sum_i ||B(i)||_HS^2` for `E` inside a band.
pub fn ids_density(energy: f64, v: &Potential) -> Result<f64> {
    ids_density_raw(energy, v)
        .ok_or_else(|| Error::Domain(format!("energy {energy} is not in the open interior of a band")))
}

/// Density, or `None` when the monodromy is not numerically elliptic.
fn ids_density_raw(energy: f64, v: &Potential) -> Option<f64> {
    let n = v.period();
    let mono = monodromy(energy, v);
    if !(mono.trace().abs() < 2.0 - 1e-12) {
        return None;
    }
    let b0 = rotation_conjugator(&mono)?;
    // B(i) = R B(0) A_i^-1 for some rotation R
    let mut a = Mat2::IDENTITY;
    let mut total = 0.0;
    for i in 0..n {
        total += (b0 * a.adjugate()).hs_norm_sq();
        a = step_matrix(energy, v.at(i as i64)) * a;
    }
    let dens = total / (4.0 * PI * n as f64);
    dens.is_finite().then_some(dens)
}

const IDS_TOL_PER_BAND: f64 = 1e-7;
const IDS_MAX_PANELS: usize = 4000;

/// Integral of the density over `[band.lo, upto]` with square-root
/// substitutions at both edges.
fn band_integral(band: &Band, upto: f64, v: &Potential) -> Result<f64> {
    let (lo, hi) = (band.lo, band.hi);
    if upto <= lo || hi <= lo {
        return Ok(0.0);
    }
    let upto = upto.min(hi);
    let mid = 0.5 * (lo + hi);
    let dens = |e: f64| ids_density_raw(e, v).unwrap_or(0.0);
    let left = |s: f64| 2.0 * s * dens(lo + s * s);
    let right = |s: f64| 2.0 * s * dens(hi - s * s);
    let mut total = quad::integrate(left, 0.0, (upto.min(mid) - lo).sqrt(), IDS_TOL_PER_BAND, IDS_MAX_PANELS)?;
    if upto > mid {
        total += quad::integrate(
            right,
            (hi - upto).sqrt(),
            (hi - mid).sqrt(),
            IDS_TOL_PER_BAND,
            IDS_MAX_PANELS,
        )?;
    }
    Ok(total)
}

/// Integrated density of states `N(E)`.
pub fn ids(energy: f64, v: &Potential) -> Result<f64> {
    let spec = compute_bands(v, 1.0)?;
    let mut total = 0.0;
    for band in &spec.bands {
        if energy <= band.lo {
            break;
        }
        total += band_integral(band, energy, v)?;
    }
    Ok(total)
}

/// Integral of the density over each band (each should be `1/n`).
pub fn ids_band_increments(v: &Potential) -> Result<Vec<f64>> {
    let spec = compute_bands(v, 1.0)?;
    spec.bands.iter().map(|b| band_integral(b, b.hi, v)).collect()
}

/// Where to look for large transfer-matrix norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormGrid {
    /// Interior energies sampled per band.
    pub samples_per_band: usize,
    /// Largest step count `k`; defaults to the period.
    pub k_max: Option<usize>,
    /// Starting sites `x`; defaults to one full period.
    pub sites: Option<Vec<i64>>,
}

impl Default for NormGrid {
    fn default() -> Self {
        Self {
            samples_per_band: 16,
            k_max: None,
            sites: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Pass,
    Fail,
}

/// Outcome of checking `measure <= 4 pi n / C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBoundReport {
    /// `ln C` with `C` the smallest, over sampled in-band energies, of the
    /// largest `||A_k(x)||` over the grid.
    pub log_certified_c: f64,
    /// `4 pi n / C`.
    pub bound: f64,
    pub measured: f64,
    /// Allowance for edge error, `2n` root tolerances.
    pub slack: f64,
    pub status: BoundStatus,
    /// No `C > 1` was certified, so the bound is the trivial `4 pi n`.
    pub trivial: bool,
    pub energies_sampled: usize,
}

impl NormBoundReport {
    pub fn certified_c(&self) -> f64 {
        self.log_certified_c.exp()
    }

    pub fn passed(&self) -> bool {
        self.status == BoundStatus::Pass
    }
}

/// Largest `ln ||A_k(x)||` over `x` in `sites` and `1 <= k <= k_max`.
pub fn max_log_norm(energy: f64, v: &Potential, sites: &[i64], k_max: usize) -> f64 {
    let mut best = 0.0f64;
    for &x in sites {
        let mut acc = ScaledMat2 {
            mat: Mat2::IDENTITY,
            log_scale: 0.0,
        };
        for k in 0..k_max {
            acc.mat = step_matrix(energy, v.at(x + k as i64)) * acc.mat;
            if (k + 1) % crate::cocycle::RENORM_INTERVAL == 0 {
                let m = acc.mat.max_abs();
                acc.mat = acc.mat.scale(1.0 / m);
                acc.log_scale += m.ln();
            }
            best = best.max(acc.log_norm());
        }
    }
    best
}

pub fn verify_norm_measure_bound(v: &Potential, lambda: f64, grid: &NormGrid) -> Result<NormBoundReport> {
    let spec = compute_bands(v, lambda)?;
    Ok(norm_measure_bound_for(&spec, &v.scaled(lambda), grid))
}

/// Same as [`verify_norm_measure_bound`] for an already computed spectrum of
/// the (already scaled) potential `lv`.
pub fn norm_measure_bound_for(spec: &SpectrumDescription, lv: &Potential, grid: &NormGrid) -> NormBoundReport {
    let n = lv.period();
    let k_max = grid.k_max.unwrap_or(n).max(1);
    let default_sites: Vec<i64>;
    let sites = match &grid.sites {
        Some(s) if !s.is_empty() => s.as_slice(),
        _ => {
            default_sites = (0..n as i64).collect();
            &default_sites
        }
    };
    let samples = grid.samples_per_band.max(1);
    let mut log_c = f64::INFINITY;
    let mut count = 0;
    for band in &spec.bands {
        for j in 0..samples {
            let e = band.lo + (j as f64 + 0.5) / samples as f64 * band.length();
            log_c = log_c.min(max_log_norm(e, lv, sites, k_max));
            count += 1;
        }
    }
    let log_c = log_c.max(0.0);
    let bound = 4.0 * PI * n as f64 * (-log_c).exp();
    let slack = 2.0 * n as f64 * spec.options.root_tol;
    let status = if spec.measure <= bound + slack {
        BoundStatus::Pass
    } else {
        BoundStatus::Fail
    };
    NormBoundReport {
        log_certified_c: log_c,
        bound,
        measured: spec.measure,
        slack,
        status,
        trivial: log_c <= 1e-12,
        energies_sampled: count,
    }
}

/// `ln ||A_k(x)||` with renormalization; convenience for certificates.
pub fn log_transfer_norm(energy: f64, v: &Potential, k: usize, x: i64) -> f64 {
    transfer_scaled(energy, v, k, x).log_norm()
}

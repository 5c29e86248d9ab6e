//! Transversality of the staircase factorization: which `t` keep the
//! expanded image of every good block away from the next contracted direction.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2};

use serde::{Deserialize, Serialize};

use super::induction::{all_indices, build_block_potential, staircase_member, InductionParams};
use crate::cocycle::{expanded_input_angle, transfer_scaled, Direction, ScaledMat2};
use crate::odometer::Potential;
use crate::{Error, Result};

/// Largest `||B_hat||` for which the tangent identity is numerically resolvable.
pub const TAN_CHECK_MAX_SIGMA: f64 = 1e4;
/// Relative tolerance of the tangent identity.
pub const TAN_CHECK_TOL: f64 = 1e-6;

/// Choice of `c` in the good-block threshold `||B_i|| >= e^{c r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub ln_c: f64,
    pub c: f64,
    /// False when `r` is too small for the four-fold logarithm window and
    /// the window `[-m ln 2, 0]` with width `ln 2` is used instead.
    pub literal: bool,
    pub window: (f64, f64),
    pub width: f64,
    /// Excluded intervals `(ln ln ||B_i|| - ln r, ... + width]`.
    pub excluded: Vec<(f64, f64)>,
}

fn ln4(r: f64) -> Option<(f64, f64)> {
    let l3 = r.ln().ln().ln();
    let l4 = l3.ln();
    (l3 > 0.0 && l4 > 0.0).then_some((l3, l4))
}

/// Picks `ln c` in the window outside every excluded interval: the
/// midpoint of the longest omitted piece.
pub fn choose_cutoff(log_norms: &[f64], r: usize) -> Cutoff {
    let m = log_norms.len().max(1) as f64;
    let rf = r as f64;
    let (window, width, literal) = match ln4(rf) {
        Some((l3, l4)) => ((-m * l3, -m * l3 + m * l4), l4, true),
        None => ((-m * LN_2, 0.0), LN_2, false),
    };
    let mut excluded: Vec<(f64, f64)> = log_norms
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| {
            let lo = l.ln() - rf.ln();
            (lo, lo + width)
        })
        .collect();
    excluded.sort_by(|a, b| a.0.total_cmp(&b.0));

    // sweep the closed window, intervals are open on the left and closed on the right
    let (a, b) = window;
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |lo: f64, hi: f64, lo_closed: bool| {
        let valid = hi > lo || (hi == lo && lo_closed);
        if valid && best.map_or(true, |(bl, bh)| hi - lo > bh - bl) {
            best = Some((lo, hi));
        }
    };
    let mut cur = a;
    let mut cur_closed = true;
    for &(lo, hi) in &excluded {
        if hi < cur || (hi == cur && !cur_closed) {
            continue;
        }
        if lo >= cur {
            consider(cur, lo.min(b), cur_closed);
        }
        if hi >= cur {
            cur = hi;
            cur_closed = false;
        }
        if cur > b {
            break;
        }
    }
    if cur <= b {
        consider(cur, b, cur_closed);
    }
    let ln_c = match best {
        Some((lo, hi)) => 0.5 * (lo + hi),
        // the pigeonhole argument rules this out; keep the left end
        None => a,
    };
    Cutoff {
        ln_c,
        c: ln_c.exp(),
        literal,
        window,
        width,
        excluded,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NicenessStatus {
    /// No block exceeds the cutoff; `t` is vacuously very nice.
    NoGoodBlocks,
    Classified,
}

/// `tan(theta) tan(theta') ||B_hat||^2` for a test vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TanCheck {
    pub sigma: f64,
    pub ratio: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiceEntry {
    /// 0-based run index of the good block.
    pub run: usize,
    pub log_sigma: f64,
    /// Angle between `C_hat_j u_j` and `s_{j+1}`.
    pub angle: f64,
    /// `None` when `B_hat_j` is too close to conformal to have directions.
    pub nice: Option<bool>,
    pub tan_check: Option<TanCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NicenessReport {
    pub energy: f64,
    pub lambda: f64,
    pub threshold: f64,
    pub cutoff: Cutoff,
    /// `ln ||B_i||` per run.
    pub log_norms: Vec<f64>,
    pub good: Vec<usize>,
    pub entries: Vec<NiceEntry>,
    pub status: NicenessStatus,
    pub very_nice: bool,
}

impl NicenessReport {
    pub fn tan_checks_ok(&self) -> bool {
        self.entries.iter().all(|e| e.tan_check.map_or(true, |c| c.ok))
    }
}

struct Geometry {
    contracted: Direction,
    expanded_image: Direction,
    log_sigma: f64,
}

fn geometry(m: &ScaledMat2) -> Geometry {
    let e = expanded_input_angle(&m.mat);
    Geometry {
        contracted: Direction::new(e + FRAC_PI_2),
        expanded_image: Direction::of_vector(m.mat.apply(Direction::new(e).unit())),
        log_sigma: m.log_norm(),
    }
}

fn tan_check(m: &ScaledMat2, g: &Geometry) -> Option<TanCheck> {
    let sigma = g.log_sigma.exp();
    if sigma > TAN_CHECK_MAX_SIGMA || g.log_sigma <= 1e-12 {
        return None;
    }
    let theta = FRAC_PI_3;
    let z = Direction::new(g.contracted.angle() + theta);
    let image = Direction::of_vector(m.mat.apply(z.unit()));
    let theta_prime = image.angle_to(&g.expanded_image);
    let ratio = theta.tan() * theta_prime.tan() * sigma * sigma;
    Some(TanCheck {
        sigma,
        ratio,
        ok: (ratio - 1.0).abs() <= TAN_CHECK_TOL,
    })
}

/// Classifies `w^t` at one energy and coupling using the factorization
/// `A_{n_K} = C_m B_m ... C_1 B_1` read off the blocks of `wt`.
pub fn classify_niceness(
    wt: &Potential,
    params: &InductionParams,
    energy: f64,
    lambda: f64,
    angle_exponent: f64,
) -> Result<NicenessReport> {
    params.validate()?;
    if wt.period() != params.n_big {
        return Err(Error::Parameter(format!(
            "potential has period {}, layout expects {}",
            wt.period(),
            params.n_big
        )));
    }
    let lw = wt.scaled(lambda);
    let n_k = params.n_k;
    let m = params.m;
    let b: Vec<ScaledMat2> = (0..m)
        .map(|i| transfer_scaled(energy, &lw, params.repeats(i) * n_k, (params.partition[i] * n_k) as i64))
        .collect();
    let c: Vec<ScaledMat2> = (0..m)
        .map(|i| transfer_scaled(energy, &lw, n_k, ((params.partition[i + 1] - 1) * n_k) as i64))
        .collect();
    let log_norms: Vec<f64> = b.iter().map(ScaledMat2::log_norm).collect();
    let cutoff = choose_cutoff(&log_norms, params.r);
    let threshold = (params.r as f64).powf(-angle_exponent);
    let good: Vec<usize> = (0..m).filter(|&i| log_norms[i] >= cutoff.c * params.r as f64).collect();
    if good.is_empty() {
        return Ok(NicenessReport {
            energy,
            lambda,
            threshold,
            cutoff,
            log_norms,
            good,
            entries: Vec::new(),
            status: NicenessStatus::NoGoodBlocks,
            very_nice: true,
        });
    }

    // B_hat_j = B_{i_j} D_j, D_j the runs strictly between the previous good
    // block and this one, cyclically for j = 1
    let d = good.len();
    let mut b_hat = Vec::with_capacity(d);
    for (j, &i) in good.iter().enumerate() {
        let prev = good[(j + d - 1) % d];
        let mut acc = ScaledMat2::IDENTITY;
        let mut k = (prev + 1) % m;
        while k != i {
            acc = c[k] * (b[k] * acc);
            k = (k + 1) % m;
        }
        b_hat.push(b[i] * acc);
    }
    let geo: Vec<Geometry> = b_hat.iter().map(geometry).collect();
    let mut entries = Vec::with_capacity(d);
    for j in 0..d {
        let g = &geo[j];
        let next = &geo[(j + 1) % d];
        let pushed = Direction::of_vector(c[good[j]].mat.apply(g.expanded_image.unit()));
        let angle = pushed.angle_to(&next.contracted);
        let degenerate = g.log_sigma <= 1e-12 || next.log_sigma <= 1e-12;
        entries.push(NiceEntry {
            run: good[j],
            log_sigma: g.log_sigma,
            angle,
            nice: (!degenerate).then_some(angle >= threshold),
            tan_check: tan_check(&b_hat[j], g),
        });
    }
    let very_nice = entries.iter().all(|e| e.nice == Some(true));
    Ok(NicenessReport {
        energy,
        lambda,
        threshold,
        cutoff,
        log_norms,
        good,
        entries,
        status: NicenessStatus::Classified,
        very_nice,
    })
}

/// Classification of every `t` in `{0..r-1}^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NicenessCensus {
    pub params: InductionParams,
    pub energy: f64,
    pub lambda: f64,
    pub angle_exponent: f64,
    pub rows: Vec<(Vec<usize>, NicenessReport)>,
    pub not_very_nice: usize,
    /// `m r^{m-1}`.
    pub bound: usize,
}

impl NicenessCensus {
    pub fn holds(&self) -> bool {
        self.not_very_nice <= self.bound
    }

    /// One line per `t`: the tuple, the angle at each good block, the flag.
    pub fn to_csv(&self) -> String {
        let d = self.rows.first().map_or(0, |(_, r)| r.entries.len());
        let mut out = String::from("t");
        for j in 1..=d {
            out.push_str(&format!(",angle_{j}"));
        }
        out.push_str(",very_nice\n");
        for (t, rep) in &self.rows {
            let tuple: Vec<String> = t.iter().map(usize::to_string).collect();
            out.push_str(&tuple.join(" "));
            for e in &rep.entries {
                out.push_str(&format!(",{:?}", e.angle));
            }
            out.push_str(&format!(",{}\n", rep.very_nice));
        }
        out
    }
}

/// Builds the block potential of `members` and classifies every staircase index.
pub fn niceness_census(
    members: &[Potential],
    params: &InductionParams,
    energy: f64,
    lambda: f64,
    angle_exponent: f64,
) -> Result<NicenessCensus> {
    let base = build_block_potential(members, params)?;
    let mut rows = Vec::new();
    let mut not_very_nice = 0;
    for t in all_indices(params.r, params.m) {
        let wt = staircase_member(&base, params, &t)?;
        let rep = classify_niceness(&wt, params, energy, lambda, angle_exponent)?;
        if !rep.very_nice {
            not_very_nice += 1;
        }
        rows.push((t, rep));
    }
    Ok(NicenessCensus {
        params: params.clone(),
        energy,
        lambda,
        angle_exponent,
        rows,
        not_very_nice,
        bound: params.m * params.r.pow(params.m as u32 - 1),
    })
}

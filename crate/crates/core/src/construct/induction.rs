//! Block potentials built from long repetitions of each member, their
//! staircase perturbations, and the measure certificate that comes with them.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{energy_grid, lyapunov_drift, Drift, Overrides};
use crate::bands::{compute_bands, norm_measure_bound_for, NormBoundReport, NormGrid};
use crate::cocycle::lyapunov_family_unchecked;
use crate::odometer::{Family, Potential};
use crate::{Error, Result};

/// Below this amplitude the staircase is lost in rounding of `O(1)` potentials.
/// `2^-400`.
pub const AMP_UNDERFLOW: f64 = 3.872_591_914_849_318e-121;

/// Layout of a block potential of period `n_big` made of `m` members of
/// period `n_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionParams {
    pub n_k: usize,
    pub n_big: usize,
    pub m: usize,
    /// Repetitions per member, `floor(n_big / (m n_k))`.
    pub r: usize,
    pub amp_exponent: f64,
    /// Staircase step; `r^-amp_exponent` unless capped.
    pub amp: f64,
    /// `order[i]` is the family index laid down in the `i`-th run of blocks.
    pub order: Vec<usize>,
    /// Block boundaries `j_0 = 0 < j_1 < ... < j_m = n_big / n_k`.
    pub partition: Vec<usize>,
}

impl InductionParams {
    /// Members in family order; the first `J - m r` runs get one extra block.
    pub fn new(n_k: usize, n_big: usize, m: usize, amp_exponent: f64) -> Result<Self> {
        if m == 0 || n_k == 0 {
            return Err(Error::Parameter("need at least one member of positive period".into()));
        }
        if n_big % n_k != 0 {
            return Err(Error::Divisibility {
                period: n_k,
                target: n_big,
            });
        }
        let blocks = n_big / n_k;
        let r = blocks / m;
        if r < 2 {
            return Err(Error::Parameter(format!(
                "period {n_big} leaves r = {r} repetitions of {m} members of period {n_k}; need r >= 2"
            )));
        }
        let extra = blocks - m * r;
        let mut partition = vec![0];
        for i in 0..m {
            let step = if i < extra { r + 1 } else { r };
            partition.push(partition[i] + step);
        }
        let params = Self {
            n_k,
            n_big,
            m,
            r,
            amp_exponent,
            amp: (r as f64).powf(-amp_exponent),
            order: (0..m).collect(),
            partition,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_amp(mut self, amp: f64) -> Self {
        self.amp = amp;
        self
    }

    pub fn with_partition(mut self, partition: Vec<usize>) -> Result<Self> {
        self.partition = partition;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.partition;
        if p.len() != self.m + 1 || p[0] != 0 || p[self.m] * self.n_k != self.n_big {
            return Err(Error::Parameter(format!(
                "partition {p:?} must run from 0 to {} in {} steps",
                self.n_big / self.n_k,
                self.m
            )));
        }
        for w in p.windows(2) {
            if w[1] < w[0] + self.r || w[1] > w[0] + self.r + 1 {
                return Err(Error::Parameter(format!(
                    "partition {p:?}: step {} is not r = {} or r + 1",
                    w[1].saturating_sub(w[0]),
                    self.r
                )));
            }
        }
        let mut seen = self.order.clone();
        seen.sort_unstable();
        if seen != (0..self.m).collect::<Vec<_>>() {
            return Err(Error::Parameter(format!("order {:?} is not a permutation", self.order)));
        }
        Ok(())
    }

    /// Block `I_j` holds sites `j n_k ..= (j + 1) n_k - 1`; returns the
    /// run `i` (0-based) with `j_i <= j < j_{i+1}`.
    pub fn run_of_block(&self, j: usize) -> usize {
        self.partition[1..].partition_point(|&end| end <= j)
    }

    /// Repeated (unperturbed) blocks in run `i`: `j_{i+1} - j_i - 1`.
    pub fn repeats(&self, i: usize) -> usize {
        self.partition[i + 1] - self.partition[i] - 1
    }

    /// Blocks that carry the staircase: the last block of every run.
    pub fn stair_blocks(&self) -> Vec<usize> {
        self.partition[1..].iter().map(|&e| e - 1).collect()
    }

    /// Spread of the staircase family.
    pub fn diameter(&self) -> f64 {
        self.amp * (self.r - 1) as f64
    }
}

/// Runs of `members[order[i]]` laid down block by block.
pub fn build_block_potential(members: &[Potential], params: &InductionParams) -> Result<Potential> {
    params.validate()?;
    if members.len() != params.m {
        return Err(Error::Parameter(format!(
            "{} members given for {} runs",
            members.len(),
            params.m
        )));
    }
    let embedded = members
        .iter()
        .map(|w| w.embed(params.n_k))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(params.n_big);
    for l in 0..params.n_big {
        let i = params.run_of_block(l / params.n_k);
        values.push(embedded[params.order[i]].values()[l % params.n_k]);
    }
    Potential::new(values)
}

/// `w^t`: the block potential with `amp * t_i` added on the last block of run `i`.
pub fn staircase_member(base: &Potential, params: &InductionParams, t: &[usize]) -> Result<Potential> {
    if t.len() != params.m || t.iter().any(|&ti| ti >= params.r) {
        return Err(Error::Parameter(format!(
            "staircase index {t:?} outside {{0..{}}}^{}",
            params.r, params.m
        )));
    }
    let mut values = base.values().to_vec();
    for (i, &block) in params.stair_blocks().iter().enumerate() {
        let add = params.amp * t[i] as f64;
        for v in &mut values[block * params.n_k..(block + 1) * params.n_k] {
            *v += add;
        }
    }
    Potential::new(values)
}

fn decode_index(mut code: u128, r: usize, m: usize) -> Vec<usize> {
    (0..m)
        .map(|_| {
            let d = (code % r as u128) as usize;
            code /= r as u128;
            d
        })
        .collect()
}

/// All `t` in `{0..r-1}^m`, first coordinate fastest.
pub fn all_indices(r: usize, m: usize) -> Vec<Vec<usize>> {
    let total = r.pow(m as u32) as u128;
    (0..total).map(|code| decode_index(code, r, m)).collect()
}

/// `t = 0`, `t = (r-1, ..., r-1)`, and the rest drawn without replacement.
pub fn capped_indices(r: usize, m: usize, cap: usize, seed: u64) -> Vec<Vec<usize>> {
    let total = (r as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if cap as u128 >= total {
        return all_indices(r, m);
    }
    let last = total - 1;
    let mut picked = BTreeSet::from([0, last]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while picked.len() < cap {
        picked.insert(rng.gen_range(1..last));
    }
    let mut picked: Vec<u128> = picked.into_iter().collect();
    if cap < 2 {
        picked.truncate(cap.max(1));
    }
    picked.into_iter().map(|c| decode_index(c, r, m)).collect()
}

pub fn build_staircase_family(base: &Potential, params: &InductionParams) -> Result<Family> {
    build_staircase_subfamily(base, params, &all_indices(params.r, params.m))
}

pub fn build_staircase_subfamily(base: &Potential, params: &InductionParams, ts: &[Vec<usize>]) -> Result<Family> {
    Family::new(
        ts.iter()
            .map(|t| staircase_member(base, params, t))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Member measures against `4 pi n_K e^{-delta m (r-1) n_k^2}` at one coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCheck {
    pub lambda: f64,
    /// `delta` with `min_E L(E, lambda W) >= delta m n_k` on the grid.
    pub delta: f64,
    pub grid_min_lyapunov: f64,
    pub certified: bool,
    pub explicit_bound: f64,
    /// `e^{-delta n_K / 2}`, reported after the explicit bound.
    pub weak_bound: f64,
    pub measures: Vec<f64>,
    pub explicit_ok: Option<bool>,
    pub weak_ok: Option<bool>,
    /// Norm route for each member: sites at the run starts, `k <= (r-1) n_k`.
    pub norm_reports: Vec<NormBoundReport>,
}

/// Everything [`lemma_induction`] checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductionCertificate {
    pub params: InductionParams,
    pub indices: Vec<Vec<usize>>,
    pub drift: Drift,
    pub diameter: f64,
    pub diameter_target: f64,
    pub diameter_ok: bool,
    pub measure_checks: Vec<MeasureCheck>,
    pub amp_underflow: bool,
    pub overrides: Overrides,
}

impl InductionCertificate {
    /// Whether every applicable measure check passed.
    pub fn measures_ok(&self) -> bool {
        self.measure_checks.iter().all(|c| c.explicit_ok != Some(false))
    }
}

/// What to certify: couplings, the grid, and `delta` per coupling
/// (`None` derives it from the grid minimum).
#[derive(Clone, Debug, PartialEq)]
pub struct InductionRequest {
    pub lambdas: Vec<f64>,
    pub deltas: Vec<Option<f64>>,
    /// Energy window and step for drift.
    pub drift_energy_max: f64,
}

/// Builds the staircase family `W_K` of period `n_big` from `family`
/// (period dividing `n_k`) and certifies it.
pub fn lemma_induction(
    family: &Family,
    n_k: usize,
    n_big: usize,
    request: &InductionRequest,
    overrides: &Overrides,
    amp_cap: Option<f64>,
) -> Result<(Family, InductionCertificate)> {
    if n_k < 2 {
        return Err(Error::Parameter(format!("block period must be at least 2, got {n_k}")));
    }
    if n_k % family.period() != 0 {
        return Err(Error::Divisibility {
            period: family.period(),
            target: n_k,
        });
    }
    let mut params = InductionParams::new(n_k, n_big, family.len(), overrides.amp_exponent)?;
    if let Some(cap) = amp_cap {
        params.amp = params.amp.min(cap);
    }
    let base = build_block_potential(family.members(), &params)?;
    let indices = match overrides.staircase_cap {
        Some(cap) => capped_indices(params.r, params.m, cap, overrides.seed),
        None => all_indices(params.r, params.m),
    };
    let out = build_staircase_subfamily(&base, &params, &indices)?;

    let drift = lyapunov_drift(
        &out,
        family,
        &request.lambdas,
        request.drift_energy_max,
        overrides.drift_energy_step,
    );
    let diameter = out.diameter();
    let diameter_target = (n_big as f64).powf(-overrides.diameter_exponent);

    let mut measure_checks = Vec::new();
    for (li, &lambda) in request.lambdas.iter().enumerate() {
        let delta_given = request.deltas.get(li).copied().flatten();
        measure_checks.push(measure_check(family, &out, &params, lambda, delta_given, overrides)?);
    }

    let cert = InductionCertificate {
        amp_underflow: params.amp < AMP_UNDERFLOW * family.sup_norm().max(1.0),
        diameter_ok: diameter <= diameter_target,
        params,
        indices,
        drift,
        diameter,
        diameter_target,
        measure_checks,
        overrides: overrides.clone(),
    };
    Ok((out, cert))
}

fn grid_min_lyapunov(family: &Family, lambda: f64, step: f64) -> f64 {
    let window = super::large_energy_threshold(family, lambda);
    energy_grid(-window, window, step)
        .into_iter()
        .map(|e| lyapunov_family_unchecked(e, lambda, family))
        .fold(1.0, f64::min)
}

fn measure_check(
    family: &Family,
    out: &Family,
    params: &InductionParams,
    lambda: f64,
    delta_given: Option<f64>,
    o: &Overrides,
) -> Result<MeasureCheck> {
    let mnk = (params.m * params.n_k) as f64;
    let grid_min = grid_min_lyapunov(family, lambda, o.energy_step);
    let delta = delta_given.unwrap_or(grid_min / mnk);
    let certified = delta > 0.0 && grid_min >= delta * mnk;
    let rn = ((params.r - 1) * params.n_k) as f64;
    let explicit_bound = 4.0 * PI * params.n_big as f64 * (-delta * params.m as f64 * rn * params.n_k as f64).exp();
    let weak_bound = (-delta * params.n_big as f64 / 2.0).exp();

    let grid = NormGrid {
        samples_per_band: o.norm_samples_per_band,
        k_max: Some((params.r - 1) * params.n_k),
        sites: Some(
            params.partition[..params.m]
                .iter()
                .map(|&j| (j * params.n_k) as i64)
                .collect(),
        ),
    };
    let mut measures = Vec::new();
    let mut norm_reports = Vec::new();
    let mut slack = 0.0f64;
    for w in out.members() {
        let spec = compute_bands(w, lambda)?;
        slack = slack.max(2.0 * params.n_big as f64 * spec.options.root_tol);
        measures.push(spec.measure);
        norm_reports.push(norm_measure_bound_for(&spec, &w.scaled(lambda), &grid));
    }
    let (explicit_ok, weak_ok) = if certified {
        (
            Some(measures.iter().all(|&x| x <= explicit_bound + slack)),
            Some(measures.iter().all(|&x| x <= weak_bound + slack)),
        )
    } else {
        (None, None)
    };
    Ok(MeasureCheck {
        lambda,
        delta,
        grid_min_lyapunov: grid_min,
        certified,
        explicit_bound,
        weak_bound,
        measures,
        explicit_ok,
        weak_ok,
        norm_reports,
    })
}

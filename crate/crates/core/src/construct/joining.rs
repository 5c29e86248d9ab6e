//! One joining step (start family, then staircase family in a smaller ball)
//! and the nested-ball iteration built from it.

use serde::{Deserialize, Serialize};

use super::induction::{
    build_block_potential, lemma_induction, InductionCertificate, InductionParams, InductionRequest,
};
use super::start::{large_energy_minimum, lemma_start, StartLevelReport};
use super::{lambda_samples, lyapunov_drift, lyapunov_minimum, Drift, LyapunovMinimum, Overrides};
use crate::bands::compute_bands;
use crate::odometer::{Ball, Family, Potential, Schedule};
use crate::{Error, Result};

/// `|L(E, lambda W') - L(E, lambda W)| < 1/M` on `|E| <= M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftItem {
    pub drift: Drift,
    pub threshold: f64,
    pub pass: bool,
}

/// `L(E, lambda W') > delta` for all sampled couplings and energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundItem {
    pub minimum: Vec<LyapunovMinimum>,
    /// Smallest `L` sampled beyond `||lambda w|| + 4`, which should be at least 1.
    pub large_energy_min: f64,
    pub delta: f64,
    pub pass: bool,
}

/// Measure of `Sigma(lambda w)` for every `w` in the new ball, bounded by
/// the center measure widened by the radius on each component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureItem {
    pub lambda: f64,
    pub center_measure: f64,
    pub components: usize,
    pub bound: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureItem {
    pub center_distance: f64,
    pub radius: f64,
    pub outer_radius: f64,
    pub pass: bool,
}

/// Everything one joining step checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoiningCertificate {
    pub m_nominal: f64,
    /// Coupling window bound actually sampled (nominal, capped by the overrides).
    pub m_operational: f64,
    pub lambdas: Vec<f64>,
    pub start: StartLevelReport,
    /// Grid minimum of `L(E, lambda W~)` per coupling; `delta` is half the smallest.
    pub start_minimum: Vec<LyapunovMinimum>,
    pub delta: f64,
    pub induction: InductionCertificate,
    pub item_drift: DriftItem,
    pub item_lower_bound: LowerBoundItem,
    pub item_measure: Vec<MeasureItem>,
    /// `2 radius <= 1/M`.
    pub diameter_ok: bool,
    pub closure: ClosureItem,
    pub family_in_ball: bool,
    /// Ball radius the staircase amplitude was capped to reach.
    pub radius_target: f64,
}

impl JoiningCertificate {
    pub fn measure_ok(&self) -> bool {
        self.diameter_ok && self.item_measure.iter().all(|m| m.pass)
    }

    pub fn passed(&self) -> bool {
        self.item_drift.pass
            && self.item_lower_bound.pass
            && self.measure_ok()
            && self.closure.pass
            && self.family_in_ball
            && self.induction.measures_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoiningOutcome {
    pub ball: Ball,
    pub family: Family,
    pub delta: f64,
    pub certificate: JoiningCertificate,
}

/// Smallest level above `above` whose period gives at least `min_r`
/// repetitions of `m` members of period `n_k`.
fn induction_level(schedule: &Schedule, above: usize, n_k: usize, m: usize, min_r: usize) -> Result<usize> {
    (above + 1..schedule.len())
        .find(|&lv| {
            let n = schedule.period(lv).unwrap_or(0);
            n % n_k == 0 && n / (m * n_k) >= min_r.max(2)
        })
        .ok_or_else(|| {
            Error::Schedule(format!(
                "no level above {above} holds {min_r} repetitions of {m} members of period {n_k}"
            ))
        })
}

/// Builds `W'` inside a ball `B'` whose closure lies in `ball`, with the
/// three properties of a joining step certified at coupling bound `m`.
pub fn lemma_joining(
    family: &Family,
    ball: &Ball,
    m: f64,
    schedule: &Schedule,
    overrides: &Overrides,
) -> Result<JoiningOutcome> {
    if !(m >= 1.0) {
        return Err(Error::Parameter(format!("coupling bound must be at least 1, got {m}")));
    }
    let m_op = overrides.operational_m(m);
    let lambdas = lambda_samples(m_op, overrides.lambda_samples);
    let level = schedule
        .first_level_where(family.period(), |_| true)
        .ok_or_else(|| Error::Schedule(format!("period {} is not in the schedule", family.period())))?;

    let start = lemma_start(family, ball, level, schedule, m_op, 1, overrides)?;
    let tilde = start.first().family.clone();
    let start_report = start.first().report.clone();
    let start_minimum: Vec<LyapunovMinimum> = lambdas
        .iter()
        .map(|&l| lyapunov_minimum(&tilde, l, overrides.energy_step))
        .collect();
    let grid_min = start_minimum.iter().map(|x| x.min).fold(f64::INFINITY, f64::min);
    if !(grid_min > 0.0) {
        return Err(Error::Construction(format!(
            "start family has grid minimum {grid_min} of the Lyapunov exponent"
        )));
    }
    let delta = (grid_min / 2.0).min(0.5);

    let n_k = tilde.period();
    let tilde_level = schedule
        .level_of(n_k)
        .ok_or_else(|| Error::Schedule(format!("period {n_k} is not in the schedule")))?;
    let first = induction_level(schedule, tilde_level, n_k, tilde.len(), overrides.min_repetitions)?;
    let last = (first + overrides.level_advance).min(schedule.len() - 1);
    let mut big = first;
    loop {
        let attempt = join_at_level(
            family,
            ball,
            m,
            m_op,
            &lambdas,
            &tilde,
            &start_report,
            &start_minimum,
            delta,
            big,
            schedule,
            overrides,
        )?;
        let next = (big + 1..=last).find(|&lv| schedule.period(lv).is_some_and(|n| n % n_k == 0));
        match next {
            Some(lv) if !attempt.certificate.item_lower_bound.pass => big = lv,
            _ => return Ok(attempt),
        }
    }
}

/// Induction at level `big` followed by the joining checks.
#[allow(clippy::too_many_arguments)]
fn join_at_level(
    family: &Family,
    ball: &Ball,
    m: f64,
    m_op: f64,
    lambdas: &[f64],
    tilde: &Family,
    start_report: &StartLevelReport,
    start_minimum: &[LyapunovMinimum],
    delta: f64,
    big: usize,
    schedule: &Schedule,
    overrides: &Overrides,
) -> Result<JoiningOutcome> {
    let n_k = tilde.period();
    let n_big = schedule.period(big).expect("level from schedule");
    let params = InductionParams::new(n_k, n_big, tilde.len(), overrides.amp_exponent)?;

    // the center does not depend on the amplitude, so the radius can be
    // chosen from its spectra
    let center = build_block_potential(tilde.members(), &params)?;
    let center_distance = ball.center.sup_distance(&center);
    let closure_budget = 0.5 * (ball.radius - center_distance);
    if !(closure_budget > 0.0) {
        return Err(Error::Construction(format!(
            "block potential lies {center_distance} from the center of a ball of radius {}",
            ball.radius
        )));
    }
    let mut center_specs = Vec::new();
    for &l in lambdas {
        center_specs.push(compute_bands(&center, l)?);
    }
    let mut radius_target = (0.5 / m).min(closure_budget);
    for (spec, &l) in center_specs.iter().zip(lambdas) {
        let room = 1.0 / m_op - spec.measure;
        if room > 0.0 {
            radius_target = radius_target.min(0.5 * room / (2.0 * spec.component_count as f64 * l.abs()));
        }
    }
    let factor = overrides.ball_radius_factor;
    let amp_cap = radius_target / (factor * (params.r - 1) as f64);

    let request = InductionRequest {
        lambdas: lambdas.to_vec(),
        deltas: vec![Some(delta / (tilde.len() * n_k) as f64); lambdas.len()],
        drift_energy_max: m_op,
    };
    let (out, induction) = lemma_induction(tilde, n_k, n_big, &request, overrides, Some(amp_cap))?;
    let radius = factor * out.diameter();
    let new_ball = Ball::new(center.clone(), radius)?;

    let drift = lyapunov_drift(&out, family, lambdas, m_op, overrides.drift_energy_step);
    let item_drift = DriftItem {
        pass: drift.sup < 1.0 / m_op,
        threshold: 1.0 / m_op,
        drift,
    };
    let minimum: Vec<LyapunovMinimum> = lambdas
        .iter()
        .map(|&l| lyapunov_minimum(&out, l, overrides.energy_step))
        .collect();
    let large_energy_min = large_energy_minimum(&out, lambdas);
    let item_lower_bound = LowerBoundItem {
        pass: minimum.iter().all(|x| x.min > delta) && large_energy_min >= 1.0,
        minimum,
        large_energy_min,
        delta,
    };
    let item_measure = center_specs
        .iter()
        .zip(lambdas)
        .map(|(spec, &l)| {
            let bound = spec.measure + 2.0 * spec.component_count as f64 * l.abs() * radius;
            MeasureItem {
                lambda: l,
                center_measure: spec.measure,
                components: spec.component_count,
                bound,
                threshold: 1.0 / m_op,
                pass: bound <= 1.0 / m_op,
            }
        })
        .collect();
    let closure = ClosureItem {
        center_distance,
        radius,
        outer_radius: ball.radius,
        pass: new_ball.closure_within(ball),
    };
    let certificate = JoiningCertificate {
        m_nominal: m,
        m_operational: m_op,
        lambdas: lambdas.to_vec(),
        start: start_report.clone(),
        start_minimum: start_minimum.to_vec(),
        delta,
        induction,
        item_drift,
        item_lower_bound,
        item_measure,
        diameter_ok: 2.0 * radius <= 1.0 / m_op,
        closure,
        family_in_ball: new_ball.contains_family(&out),
        radius_target,
    };
    Ok(JoiningOutcome {
        ball: new_ball,
        family: out,
        delta,
        certificate,
    })
}

/// One stage of the nested-ball iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCertificate {
    pub stage: usize,
    pub ball: Ball,
    pub family: Family,
    pub delta: f64,
    pub eps: f64,
    /// `min(eps, delta) / 10`.
    pub eps_next: f64,
    /// Largest item-3 bound over the sampled couplings.
    pub measure_bound: f64,
    pub lyap_lower: Vec<LyapunovMinimum>,
    pub lyap_drift: f64,
    pub probe_lambda: f64,
    /// Spectrum measure of the ball center at the probe coupling.
    pub probe_measure: f64,
    /// The probe measure is exact up to this allowance for edge placement.
    pub probe_tolerance: f64,
    pub joining: JoiningCertificate,
    pub overrides: Overrides,
}

impl StageCertificate {
    pub fn passed(&self) -> bool {
        self.joining.passed()
    }

    pub fn period(&self) -> usize {
        self.family.period()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateOutcome {
    pub initial_ball: Ball,
    pub eps_1: f64,
    pub stages: Vec<StageCertificate>,
    /// Center of the last ball.
    pub w_infinity: Potential,
    /// Distance from `w_infinity` to the limit is below this.
    pub error_bound: f64,
    pub failure: Option<String>,
}

impl IterateOutcome {
    pub fn probe_measures(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.probe_measure).collect()
    }

    /// Each stage's probe measure lies strictly below the previous one even
    /// after widening both by their tolerances.
    pub fn strictly_decreasing(&self) -> bool {
        self.stages
            .windows(2)
            .all(|p| p[1].probe_measure + p[1].probe_tolerance < p[0].probe_measure - p[0].probe_tolerance)
    }

    pub fn all_passed(&self) -> bool {
        self.failure.is_none() && self.stages.iter().all(StageCertificate::passed)
    }
}

/// Applies [`lemma_joining`] `depth` times with `M_i = 1 / eps_i` and
/// `eps_{i+1} = min(eps_i, delta_i) / 10`.
///
/// A failing certificate item does not stop the iteration; an error in a
/// construction does, and the completed stages are returned with it.
pub fn iterate_scheme(
    ball: &Ball,
    family: &Family,
    eps_1: f64,
    depth: usize,
    schedule: &Schedule,
    probe_lambda: f64,
    overrides: &Overrides,
) -> Result<IterateOutcome> {
    if depth == 0 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    if !(eps_1 > 0.0 && eps_1 <= 1.0) {
        return Err(Error::Parameter(format!("eps_1 must lie in (0, 1], got {eps_1}")));
    }
    if probe_lambda == 0.0 {
        return Err(Error::Parameter("probe coupling must be non-zero".into()));
    }
    if !ball.contains_family(family) {
        return Err(Error::Parameter("initial family is not inside the initial ball".into()));
    }
    let mut stages = Vec::new();
    let mut current_ball = ball.clone();
    let mut current = family.clone();
    let mut eps = eps_1;
    let mut failure = None;
    for stage in 1..=depth {
        let step = match lemma_joining(&current, &current_ball, 1.0 / eps, schedule, overrides) {
            Ok(step) => step,
            Err(e) => {
                failure = Some(format!("stage {stage}: {e}"));
                break;
            }
        };
        let probe = compute_bands(&step.ball.center, probe_lambda)?;
        let eps_next = eps.min(step.delta) / 10.0;
        let cert = &step.certificate;
        stages.push(StageCertificate {
            stage,
            ball: step.ball.clone(),
            family: step.family.clone(),
            delta: step.delta,
            eps,
            eps_next,
            measure_bound: cert.item_measure.iter().map(|x| x.bound).fold(0.0, f64::max),
            lyap_lower: cert.item_lower_bound.minimum.clone(),
            lyap_drift: cert.item_drift.drift.sup,
            probe_lambda,
            probe_measure: probe.measure,
            probe_tolerance: probe.measure_tolerance(),
            joining: step.certificate,
            overrides: overrides.clone(),
        });
        current_ball = step.ball;
        current = step.family;
        eps = eps_next;
    }
    Ok(IterateOutcome {
        initial_ball: ball.clone(),
        eps_1,
        w_infinity: current_ball.center.clone(),
        error_bound: current_ball.radius,
        stages,
        failure,
    })
}

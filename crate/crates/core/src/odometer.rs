//! Odometer model of a Cantor group and the algebra of periodic potentials.
//!
//! The group is only ever touched through its finite quotients `Z/n_k`, so a
//! [`Schedule`] is just the tower of periods `n_1 | n_2 | ...`. A potential in
//! `P_k` is a real sequence of period `n_k`; embedding into `P_K` repeats it.

use std::fmt::Write as _;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tower of finite quotient periods `n_0 < n_1 < ...` with `n_k | n_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    periods: Vec<usize>,
}

impl Schedule {
    pub fn new(periods: Vec<usize>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::Schedule("schedule must have at least one level".into()));
        }
        if periods[0] == 0 {
            return Err(Error::Schedule("periods must be positive".into()));
        }
        for (k, pair) in periods.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(Error::Schedule(format!(
                    "periods must increase strictly (level {} has {} after {})",
                    k + 1,
                    pair[1],
                    pair[0]
                )));
            }
            if pair[1] % pair[0] != 0 {
                return Err(Error::Schedule(format!(
                    "period {} at level {} is not a multiple of {}",
                    pair[1],
                    k + 1,
                    pair[0]
                )));
            }
        }
        Ok(Self { periods })
    }

    /// `n_k = 2^k` for `k = 0..=max_level`.
    pub fn dyadic(max_level: u32) -> Self {
        Self {
            periods: (0..=max_level).map(|k| 1usize << k).collect(),
        }
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn period(&self, level: usize) -> Option<usize> {
        self.periods.get(level).copied()
    }

    pub fn level_of(&self, period: usize) -> Option<usize> {
        self.periods.iter().position(|&p| p == period)
    }

    /// Smallest level whose period is a multiple of `period` and satisfies `pred`.
    pub fn first_level_where(&self, period: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
        self.periods.iter().position(|&n| n % period == 0 && pred(n))
    }

    /// Averages `v` (which must live at a deeper level) over the cosets of the
    /// subgroup `X_level`, yielding a potential of period `n_level`.
    pub fn convolve(&self, v: &Potential, level: usize) -> Result<Potential> {
        let big = self
            .level_of(v.period())
            .ok_or_else(|| Error::Schedule(format!("period {} is not in the schedule", v.period())))?;
        if level >= big {
            return Err(Error::Schedule(format!(
                "target level {level} is not below the level {big} of the potential"
            )));
        }
        v.average_to_period(self.periods[level])
    }
}

/// A real-valued periodic sequence, stored over one period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPotential("period must be at least 1".into()));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidPotential(format!("value at site {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(period: usize) -> Self {
        Self::constant(0.0, period)
    }

    pub fn constant(c: f64, period: usize) -> Self {
        assert!(period >= 1, "period must be at least 1");
        Self {
            values: vec![c; period],
        }
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at an arbitrary integer site.
    #[inline]
    pub fn at(&self, site: i64) -> f64 {
        let n = self.values.len() as i64;
        self.values[site.rem_euclid(n) as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The same sequence viewed with period `period`.
    pub fn embed(&self, period: usize) -> Result<Self> {
        let n = self.period();
        if period == 0 || period % n != 0 {
            return Err(Error::Divisibility {
                period: n,
                target: period,
            });
        }
        let values = (0..period).map(|i| self.values[i % n]).collect();
        Ok(Self { values })
    }

    /// Coset average `v^Y(i) = mean_m v(i + m * target)` for `target | period`.
    pub fn average_to_period(&self, target: usize) -> Result<Self> {
        let n = self.period();
        if target == 0 || n % target != 0 {
            return Err(Error::Divisibility {
                period: target,
                target: n,
            });
        }
        let copies = n / target;
        let values = (0..target)
            .map(|i| (0..copies).map(|m| self.values[i + m * target]).sum::<f64>() / copies as f64)
            .collect();
        Ok(Self { values })
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| lambda * x).collect(),
        }
    }

    /// Adds a constant to every site.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x + c).collect(),
        }
    }

    /// `w(i) = v(i + s)`.
    pub fn rotated(&self, s: usize) -> Self {
        let n = self.period();
        Self {
            values: (0..n).map(|i| self.values[(i + s) % n]).collect(),
        }
    }

    /// Copy with `delta` added at one site of the stored period.
    pub fn with_site_added(&self, site: usize, delta: f64) -> Self {
        let mut values = self.values.clone();
        values[site] += delta;
        Self { values }
    }

    /// Sup distance as sequences on `Z` (computed over the lcm of the periods).
    pub fn sup_distance(&self, other: &Potential) -> f64 {
        let n = self.period().lcm(&other.period());
        (0..n as i64).fold(0.0, |m, i| m.max((self.at(i) - other.at(i)).abs()))
    }

    /// Two-line text form: the period, then the values.
    ///
    /// Values use the shortest decimal that round-trips, so
    /// `from_text(to_text(v)) == v` bit for bit.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.period());
        for (i, x) in self.values.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x:?}");
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing period line".into()))?;
        let period: usize = header
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad period {header:?}: {e}")))?;
        let values = lines
            .flat_map(str::split_whitespace)
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != period {
            return Err(Error::Parse(format!(
                "declared period {period} but found {} values",
                values.len()
            )));
        }
        Self::new(values)
    }
}

/// Sup distance between two potentials.
pub fn sup_distance(v: &Potential, w: &Potential) -> f64 {
    v.sup_distance(w)
}

/// Finite multiset of periodic potentials sharing one period.
///
/// Members are embedded into the lcm of their periods on construction.
/// Repetitions are kept and count towards [`Family::len`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    members: Vec<Potential>,
}

impl Family {
    pub fn new(members: Vec<Potential>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let period = members.iter().fold(1usize, |acc, m| acc.lcm(&m.period()));
        let members = members
            .into_iter()
            .map(|m| m.embed(period))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members })
    }

    pub fn singleton(v: Potential) -> Self {
        Self { members: vec![v] }
    }

    pub fn members(&self) -> &[Potential] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Potential> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn period(&self) -> usize {
        self.members[0].period()
    }

    /// Largest sup norm among the members.
    pub fn sup_norm(&self) -> f64 {
        self.members.iter().fold(0.0, |m, v| m.max(v.sup_norm()))
    }

    /// Largest pairwise sup distance.
    pub fn diameter(&self) -> f64 {
        let mut diam = 0.0f64;
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                diam = diam.max(a.sup_distance(b));
            }
        }
        diam
    }
}

/// Open sup-norm ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Potential,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Potential, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::Parameter(format!(
                "ball radius must be finite and >= 0, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, v: &Potential) -> bool {
        self.center.sup_distance(v) < self.radius
    }

    pub fn contains_family(&self, fam: &Family) -> bool {
        fam.members().iter().all(|m| self.contains(m))
    }

    /// Distance from the center to the farthest family member.
    pub fn reach(&self, fam: &Family) -> f64 {
        fam.members()
            .iter()
            .fold(0.0, |m, v| m.max(self.center.sup_distance(v)))
    }

    /// Whether the closure of `self` lies inside the open ball `outer`.
    pub fn closure_within(&self, outer: &Ball) -> bool {
        self.center.sup_distance(&outer.center) + self.radius < outer.radius
    }
}

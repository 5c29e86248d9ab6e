//! Transfer-matrix cocycle of the Schrödinger equation `H u = E u`.
//!
//! One step is `S_i = [[E - v(i), -1], [1, 0]]`, mapping `(u_i, u_{i-1})` to
//! `(u_{i+1}, u_i)`. The `n`-step matrix is `A_n(x) = S_{x+n-1} ... S_x`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::odometer::{Family, Potential};
use crate::{Error, Result};

/// Long products are rescaled to unit norm this often.
pub const RENORM_INTERVAL: usize = 32;

/// Row-major real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Self::new(x, 0.0, 0.0, y)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Operator 2-norm (largest singular value), closed form.
    pub fn norm(&self) -> f64 {
        let p = (self.a + self.d).hypot(self.b - self.c);
        let q = (self.a - self.d).hypot(self.b + self.c);
        0.5 * (p + q)
    }

    /// Squared Hilbert–Schmidt norm.
    pub fn hs_norm_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    /// General inverse; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Adjugate, which is the inverse for determinant-one matrices.
    pub fn adjugate(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn apply(&self, z: [f64; 2]) -> [f64; 2] {
        [self.a * z[0] + self.b * z[1], self.c * z[0] + self.d * z[1]]
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    #[inline]
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// `exp(log_scale) * mat`, for products whose entries would overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMat2 {
    pub mat: Mat2,
    pub log_scale: f64,
}

impl ScaledMat2 {
    pub const IDENTITY: ScaledMat2 = ScaledMat2 {
        mat: Mat2::IDENTITY,
        log_scale: 0.0,
    };

    pub fn from_mat(mat: Mat2) -> Self {
        let mut out = Self { mat, log_scale: 0.0 };
        out.renormalize();
        out
    }

    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.mat.norm().ln()
    }

    /// The plain matrix; entries may overflow for large `log_scale`.
    pub fn to_mat(&self) -> Mat2 {
        self.mat.scale(self.log_scale.exp())
    }

    /// `ln |trace|` and the sign of the trace.
    pub fn log_abs_trace(&self) -> (f64, f64) {
        let t = self.mat.trace();
        (self.log_scale + t.abs().ln(), t.signum())
    }

    /// Trace as a float (may be infinite).
    pub fn trace(&self) -> f64 {
        if self.log_scale == 0.0 {
            self.mat.trace()
        } else {
            self.mat.trace() * self.log_scale.exp()
        }
    }

    fn renormalize(&mut self) {
        let n = self.mat.max_abs();
        if n > 0.0 && n.is_finite() {
            self.mat = self.mat.scale(1.0 / n);
            self.log_scale += n.ln();
        }
    }
}

impl Mul for ScaledMat2 {
    type Output = ScaledMat2;

    fn mul(self, r: ScaledMat2) -> ScaledMat2 {
        let mut out = ScaledMat2 {
            mat: self.mat * r.mat,
            log_scale: self.log_scale + r.log_scale,
        };
        out.renormalize();
        out
    }
}

#[inline]
pub fn step_matrix(energy: f64, v: f64) -> Mat2 {
    Mat2::new(energy - v, -1.0, 1.0, 0.0)
}

/// Left-multiplies `m` by the step matrix, without building it.
#[inline]
fn step(energy: f64, v: f64, m: Mat2) -> Mat2 {
    let e = energy - v;
    Mat2 {
        a: e * m.a - m.c,
        b: e * m.b - m.d,
        c: m.a,
        d: m.b,
    }
}

/// `A_n(x) = S_{x+n-1} ... S_x`; `transfer(.., 0, ..)` is the identity.
pub fn transfer(energy: f64, v: &Potential, n: usize, x: i64) -> Mat2 {
    let mut m = Mat2::IDENTITY;
    for i in 0..n as i64 {
        m = step(energy, v.at(x + i), m);
    }
    m
}

/// Like [`transfer`] but rescaled every [`RENORM_INTERVAL`] steps.
pub fn transfer_scaled(energy: f64, v: &Potential, n: usize, x: i64) -> ScaledMat2 {
    let mut acc = ScaledMat2 {
        mat: Mat2::IDENTITY,
        log_scale: 0.0,
    };
    for i in 0..n {
        acc.mat = step(energy, v.at(x + i as i64), acc.mat);
        if (i + 1) % RENORM_INTERVAL == 0 {
            acc.renormalize();
        }
    }
    acc
}

/// Transfer matrix over one period starting at site 0.
pub fn monodromy(energy: f64, v: &Potential) -> Mat2 {
    transfer(energy, v, v.period(), 0)
}

pub fn monodromy_scaled(energy: f64, v: &Potential) -> ScaledMat2 {
    transfer_scaled(energy, v, v.period(), 0)
}

/// `ln` of the spectral radius of an SL(2,R) matrix from `ln |trace|`.
///
/// Zero when `|trace| <= 2` (elliptic or parabolic).
pub fn log_spectral_radius(log_abs_trace: f64) -> f64 {
    if !(log_abs_trace > std::f64::consts::LN_2) {
        return 0.0;
    }
    if log_abs_trace < 300.0 {
        (0.5 * log_abs_trace.exp()).acosh()
    } else {
        // acosh(x) = ln(2x) - O(x^-2)
        log_abs_trace
    }
}

/// Lyapunov exponent of a periodic potential, `(1/n) ln rho(monodromy)`.
pub fn lyapunov_periodic(energy: f64, v: &Potential) -> f64 {
    let mono = monodromy_scaled(energy, v);
    let (lt, _) = mono.log_abs_trace();
    log_spectral_radius(lt) / v.period() as f64
}

/// Multiplicity-weighted mean of `lyapunov_periodic(E, lambda * w)` over `W`.
pub fn lyapunov_family(energy: f64, lambda: f64, family: &Family) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(lyapunov_family_unchecked(energy, lambda, family))
}

pub(crate) fn lyapunov_family_unchecked(energy: f64, lambda: f64, family: &Family) -> f64 {
    let total: f64 = family
        .members()
        .iter()
        .map(|w| lyapunov_scaled(energy, lambda, w))
        .sum();
    total / family.len() as f64
}

/// `lyapunov_periodic(E, lambda * w)` without materializing `lambda * w`.
pub fn lyapunov_scaled(energy: f64, lambda: f64, w: &Potential) -> f64 {
    let mut acc = ScaledMat2 {
        mat: Mat2::IDENTITY,
        log_scale: 0.0,
    };
    for (i, &x) in w.values().iter().enumerate() {
        acc.mat = step(energy, lambda * x, acc.mat);
        if (i + 1) % RENORM_INTERVAL == 0 {
            acc.renormalize();
        }
    }
    let (lt, _) = acc.log_abs_trace();
    log_spectral_radius(lt) / w.period() as f64
}

/// Haar average of `2^-k ln ||A_{2^k}(x)||` over the starting site.
///
/// With `samples >= period` every site of one period is used and the sequence
/// in `k` is exactly non-increasing; otherwise `samples` evenly spaced sites
/// are used.
pub fn subadditive_average(energy: f64, v: &Potential, k: u32, samples: usize) -> f64 {
    let n = v.period();
    let steps = 1usize << k;
    let sites: Vec<i64> = if samples >= n {
        (0..n as i64).collect()
    } else {
        let samples = samples.max(1);
        (0..samples).map(|i| (i * n / samples) as i64).collect()
    };
    let total: f64 = sites
        .iter()
        .map(|&x| transfer_scaled(energy, v, steps, x).log_norm())
        .sum();
    total / (sites.len() as f64 * steps as f64)
}

/// A point of the projective line, stored as an angle in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction(f64);

impl Direction {
    pub fn new(angle: f64) -> Self {
        let mut a = angle.rem_euclid(PI);
        if a >= PI {
            a = 0.0;
        }
        Self(a)
    }

    pub fn horizontal() -> Self {
        Self(0.0)
    }

    pub fn vertical() -> Self {
        Self(FRAC_PI_2)
    }

    pub fn of_vector(z: [f64; 2]) -> Self {
        Self::new(z[1].atan2(z[0]))
    }

    pub fn angle(&self) -> f64 {
        self.0
    }

    pub fn unit(&self) -> [f64; 2] {
        let (s, c) = self.0.sin_cos();
        [c, s]
    }

    /// Unoriented angle in `[0, pi/2]`.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(PI - d)
    }
}

/// Settings for [`argument_derivative`].
#[derive(Clone, Copy, Debug)]
pub struct DerivativeOptions {
    pub step: f64,
    /// Relative disagreement between one-sided quotients that triggers
    /// Richardson extrapolation.
    pub disagreement: f64,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        Self {
            step: 1e-6,
            disagreement: 0.1,
        }
    }
}

/// Signed angle from `p` to `q`.
fn turn(p: [f64; 2], q: [f64; 2]) -> f64 {
    let cross = p[0] * q[1] - p[1] * q[0];
    let dot = p[0] * q[0] + p[1] * q[1];
    cross.atan2(dot)
}

/// `d/dE arg(A_n(E) z)` by finite differences (transfer starts at site 0).
pub fn argument_derivative(energy: f64, v: &Potential, n: usize, z: Direction) -> f64 {
    argument_derivative_with(energy, v, n, z, DerivativeOptions::default())
}

pub fn argument_derivative_with(energy: f64, v: &Potential, n: usize, z: Direction, opts: DerivativeOptions) -> f64 {
    let u = z.unit();
    let image = |e: f64| transfer(e, v, n, 0).apply(u);
    let h = opts.step;
    let mid = image(energy);
    let plus = image(energy + h);
    let minus = image(energy - h);
    let forward = turn(mid, plus) / h;
    let backward = turn(minus, mid) / h;
    let central = turn(minus, plus) / (2.0 * h);
    let scale = forward.abs().max(backward.abs());
    if scale == 0.0 || (forward - backward).abs() <= opts.disagreement * scale {
        return central;
    }
    let half = 0.5 * h;
    let central_half = turn(image(energy - half), image(energy + half)) / (2.0 * half);
    (4.0 * central_half - central) / 3.0
}

/// Singular-value geometry of an SL(2,R) matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularDirections {
    /// Most contracted input direction.
    pub contracted: Direction,
    /// Image of the most expanded input direction.
    pub expanded_image: Direction,
    /// Most expanded input direction.
    pub expanded: Direction,
    /// `||M||`, at least 1.
    pub sigma: f64,
    /// Set when `sigma` is within `1e-12` of 1 (conformal, directions undefined).
    pub degenerate: bool,
}

pub(crate) fn expanded_input_angle(m: &Mat2) -> f64 {
    // eigenvector of M^T M for the larger eigenvalue
    let p = m.a * m.a + m.c * m.c;
    let s = m.b * m.b + m.d * m.d;
    let q = m.a * m.b + m.c * m.d;
    0.5 * (2.0 * q).atan2(p - s)
}

pub fn singular_directions(m: &Mat2) -> Result<SingularDirections> {
    if !m.is_finite() {
        return Err(Error::Conditioning("matrix has non-finite entries".into()));
    }
    let sigma = m.norm();
    if !sigma.is_finite() || sigma > 1e150 {
        return Err(Error::Conditioning(format!(
            "norm {sigma:e} overflows the condition estimate"
        )));
    }
    let det = m.det();
    if (det - 1.0).abs() > 1e-6 * sigma * sigma {
        return Err(Error::Conditioning(format!("determinant {det} is not 1")));
    }
    if sigma - 1.0 <= 1e-12 {
        return Ok(SingularDirections {
            contracted: Direction::horizontal(),
            expanded_image: Direction::horizontal(),
            expanded: Direction::horizontal(),
            sigma: sigma.max(1.0),
            degenerate: true,
        });
    }
    let expanded = Direction::new(expanded_input_angle(m));
    // the contracted direction of M is the expanded direction of M^{-T}
    let contracted = Direction::new(expanded_input_angle(&m.adjugate().transpose()));
    let expanded_image = Direction::of_vector(m.apply(expanded.unit()));
    Ok(SingularDirections {
        contracted,
        expanded_image,
        expanded,
        sigma,
        degenerate: false,
    })
}

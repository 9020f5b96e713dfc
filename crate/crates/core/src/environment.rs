//! Arena geometry, analytic intensity fields, noisy sensing and reflecting walls.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resolution of the midpoint rule used for the ground-truth mean.
pub const GROUND_TRUTH_GRID: usize = 512;

/// A 2D point or displacement. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArenaRepr", into = "ArenaRepr")]
pub struct Arena {
    width: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
struct ArenaRepr {
    width: f64,
    height: f64,
}

impl TryFrom<ArenaRepr> for Arena {
    type Error = Error;
    fn try_from(r: ArenaRepr) -> Result<Self> {
        Arena::new(r.width, r.height)
    }
}

impl From<Arena> for ArenaRepr {
    fn from(a: Arena) -> Self {
        ArenaRepr {
            width: a.width,
            height: a.height,
        }
    }
}

impl Arena {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(Error::Config(format!(
                "arena dimensions must be positive and finite, got {width} x {height}"
            )));
        }
        Ok(Arena { width, height })
    }

    pub fn square(side: f64) -> Result<Self> {
        Arena::new(side, side)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Closed-bounds membership test.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    /// Maps fractional coordinates in `[0,1]^2` onto the arena.
    pub fn at_fraction(&self, f: Vec2) -> Vec2 {
        Vec2::new(f.x * self.width, f.y * self.height)
    }

    fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(0.0, 0.0),
            Vec2::new(self.width, 0.0),
            Vec2::new(0.0, self.height),
            Vec2::new(self.width, self.height),
        ]
    }

    fn check(&self, x: Vec2) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "position ({}, {}) outside arena [0, {}] x [0, {}]",
                x.x, x.y, self.width, self.height
            )))
        }
    }
}

/// One isotropic Gaussian bump of a multi-peak field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// Fractional position inside the arena.
    pub center: Vec2,
    pub height: f64,
    /// Standard deviation as a fraction of the shorter arena side.
    pub width: f64,
}

/// Shape of the static intensity field.
///
/// Cone and multi-peak centers are given as fractions of the arena so the same
/// shape can be reused across arena sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldShape {
    /// `peak - slope * |x - center|`. Without an explicit slope, it is chosen so
    /// the arena minimum is exactly zero.
    Cone {
        peak: f64,
        center: Vec2,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
    },
    /// Sum of Gaussian bumps.
    MultiPeak { bumps: Vec<Bump> },
    /// `offset + gradient . x` in absolute coordinates.
    Plane { offset: f64, gradient: Vec2 },
}

impl FieldShape {
    pub fn default_cone() -> Self {
        FieldShape::Cone {
            peak: 1.0,
            center: Vec2::new(0.75, 0.75),
            slope: None,
        }
    }

    pub fn default_multi_peak() -> Self {
        FieldShape::MultiPeak {
            bumps: vec![
                Bump {
                    center: Vec2::new(0.25, 0.7),
                    height: 1.0,
                    width: 0.12,
                },
                Bump {
                    center: Vec2::new(0.7, 0.3),
                    height: 0.7,
                    width: 0.1,
                },
                Bump {
                    center: Vec2::new(0.78, 0.8),
                    height: 0.5,
                    width: 0.08,
                },
            ],
        }
    }

    pub fn constant(c: f64) -> Self {
        FieldShape::Plane {
            offset: c,
            gradient: Vec2::ZERO,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = match self {
            FieldShape::Cone {
                peak,
                center,
                slope,
            } => peak.is_finite() && center.is_finite() && slope.is_none_or(f64::is_finite),
            FieldShape::MultiPeak { bumps } => bumps.iter().all(|b| {
                b.center.is_finite() && b.height.is_finite() && b.width.is_finite() && b.width > 0.0
            }),
            FieldShape::Plane { offset, gradient } => offset.is_finite() && gradient.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid field shape {self:?}")))
        }
    }
}

impl Default for FieldShape {
    fn default() -> Self {
        FieldShape::default_cone()
    }
}

/// Field shape plus the sensing noise coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub shape: FieldShape,
    pub sigma: f64,
}

/// Arena average of the noise-free field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub z_gt: f64,
}

impl FieldSpec {
    pub fn new(shape: FieldShape, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
        }
        shape.validate()?;
        Ok(FieldSpec { shape, sigma })
    }

    /// Noise-free intensity `g(x)`.
    pub fn intensity_at(&self, arena: &Arena, x: Vec2) -> Result<f64> {
        arena.check(x)?;
        Ok(self.eval(arena, x))
    }

    /// `g(x) + sigma * n` with `n` a standard-normal draw.
    ///
    /// The normal variate is drawn even when `sigma == 0` so random streams stay
    /// aligned between noisy and noise-free configurations.
    pub fn sense<R: Rng + ?Sized>(&self, arena: &Arena, x: Vec2, rng: &mut R) -> Result<f64> {
        arena.check(x)?;
        Ok(self.sense_unchecked(arena, x, rng))
    }

    pub(crate) fn sense_unchecked<R: Rng + ?Sized>(
        &self,
        arena: &Arena,
        x: Vec2,
        rng: &mut R,
    ) -> f64 {
        let n: f64 = rng.sample(StandardNormal);
        self.eval(arena, x) + self.sigma * n
    }

    pub fn ground_truth_mean(&self, arena: &Arena) -> GroundTruth {
        GroundTruth {
            z_gt: midpoint_mean(arena, GROUND_TRUTH_GRID, |p| self.eval(arena, p)),
        }
    }

    pub(crate) fn eval(&self, arena: &Arena, x: Vec2) -> f64 {
        match &self.shape {
            FieldShape::Cone {
                peak,
                center,
                slope,
            } => {
                let c = arena.at_fraction(*center);
                let s = slope.unwrap_or_else(|| {
                    let far = arena
                        .corners()
                        .iter()
                        .map(|k| k.distance(c))
                        .fold(0.0, f64::max);
                    if far > 0.0 {
                        peak / far
                    } else {
                        0.0
                    }
                });
                peak - s * x.distance(c)
            }
            FieldShape::MultiPeak { bumps } => {
                let side = arena.width().min(arena.height());
                bumps
                    .iter()
                    .map(|b| {
                        let c = arena.at_fraction(b.center);
                        let w = b.width * side;
                        b.height * (-(x - c).norm_sq() / (2.0 * w * w)).exp()
                    })
                    .sum()
            }
            FieldShape::Plane { offset, gradient } => offset + gradient.x * x.x + gradient.y * x.y,
        }
    }
}

/// Midpoint-rule average of `f` over the arena on an `n x n` grid.
pub fn midpoint_mean(arena: &Arena, n: usize, f: impl Fn(Vec2) -> f64) -> f64 {
    let dx = arena.width() / n as f64;
    let dy = arena.height() / n as f64;
    let mut total = 0.0;
    for j in 0..n {
        let y = (j as f64 + 0.5) * dy;
        let mut row = 0.0;
        for i in 0..n {
            row += f(Vec2::new((i as f64 + 0.5) * dx, y));
        }
        total += row;
    }
    total / (n * n) as f64
}

/// Moves `x` by `step`, folding any overshoot back specularly at each wall.
pub fn reflect_step(arena: &Arena, x: Vec2, step: Vec2) -> Vec2 {
    Vec2::new(
        fold(x.x + step.x, arena.width()),
        fold(x.y + step.y, arena.height()),
    )
}

fn fold(mut v: f64, hi: f64) -> f64 {
    // Repeated folding handles steps longer than the arena side.
    loop {
        if v < 0.0 {
            v = -v;
        } else if v > hi {
            v = 2.0 * hi - v;
        } else {
            return v;
        }
    }
}

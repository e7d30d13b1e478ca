//! Benchmark initial conditions on the unit square.
//!
//! The tanh profiles use `C = |(x, y) − center|` and the interface width
//! `√2·ρ`. Maze and cells are fixed geometric constructions built from the
//! same profile.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::grid::{Field, GridSpec};

/// Interface thickness `ε_m = h·m / (2√2·atanh(0.9))`, spanning roughly `m` cells.
pub fn eps_m(h: f64, m: u32) -> Result<f64> {
    if !(h > 0.0) {
        return Err(domain(format!("mesh size must be positive, got {h}")));
    }
    if m == 0 {
        return Err(domain("m must be at least 1"));
    }
    Ok(h * f64::from(m) / (2.0 * SQRT_2 * 0.9f64.atanh()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    pub rho: f64,
    pub center: (f64, f64),
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            rho: 0.012,
            center: (0.5, 0.5),
        }
    }
}

impl ShapeParams {
    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(domain(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }

    fn radius(&self, x: f64, y: f64) -> f64 {
        (x - self.center.0).hypot(y - self.center.1)
    }

    /// `tanh(s / (√2ρ))` for a signed distance `s` (positive inside).
    fn profile(&self, s: f64) -> f64 {
        (s / (SQRT_2 * self.rho)).tanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Sierra,
    Star,
    Circle,
    Torus,
    Maze,
    Cells,
}

impl Shape {
    pub const ALL: [Shape; 6] = [
        Shape::Sierra,
        Shape::Star,
        Shape::Circle,
        Shape::Torus,
        Shape::Maze,
        Shape::Cells,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Sierra => "sierra",
            Shape::Star => "star",
            Shape::Circle => "circle",
            Shape::Torus => "torus",
            Shape::Maze => "maze",
            Shape::Cells => "cells",
        }
    }

    pub fn generate(self, spec: &GridSpec, params: &ShapeParams) -> Result<Field> {
        params.validate()?;
        Ok(match self {
            Shape::Sierra => sierra(spec),
            Shape::Star => Field::from_fn(*spec, |x, y| star_value(params, x, y)),
            Shape::Circle => Field::from_fn(*spec, |x, y| params.profile(0.25 - params.radius(x, y))),
            Shape::Torus => Field::from_fn(*spec, |x, y| {
                let r = params.radius(x, y);
                -1.0 + params.profile(0.4 - r) - params.profile(0.3 - r)
            }),
            Shape::Maze => Field::from_fn(*spec, |x, y| params.profile(maze_signed_distance(x, y))),
            Shape::Cells => Field::from_fn(*spec, |x, y| {
                CELLS
                    .iter()
                    .map(|&(cx, cy, r)| params.profile(r - (x - cx).hypot(y - cy)))
                    .fold(f64::NEG_INFINITY, f64::max)
            }),
        })
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|shape| shape.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| domain(format!("unknown shape '{s}'")))
    }
}

/// `cos(2πx)·cos(2πy)`
pub fn sierra(spec: &GridSpec) -> Field {
    Field::from_fn(*spec, sierra_value)
}

pub fn sierra_value(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).cos() * (2.0 * PI * y).cos()
}

fn star_value(p: &ShapeParams, x: f64, y: f64) -> f64 {
    let (dx, dy) = (x - p.center.0, y - p.center.1);
    let mut theta = (dy / dx).atan();
    if x <= p.center.0 {
        theta += PI;
    }
    p.profile(0.25 + 0.1 * (6.0 * theta).cos() - dx.hypot(dy))
}

/// Three discs `(cx, cy, radius)`.
const CELLS: [(f64, f64, f64); 3] = [(0.3, 0.3, 0.12), (0.7, 0.4, 0.10), (0.45, 0.7, 0.14)];

/// Corridor strips `(x0, x1, y0, y1)`, 0.1 wide, winding inwards from the
/// lower-left corner as a rectangular spiral with 0.1 gaps between turns.
const MAZE_STRIPS: [(f64, f64, f64, f64); 8] = [
    (0.1, 0.9, 0.1, 0.2),
    (0.8, 0.9, 0.1, 0.9),
    (0.1, 0.9, 0.8, 0.9),
    (0.1, 0.2, 0.3, 0.9),
    (0.1, 0.7, 0.3, 0.4),
    (0.6, 0.7, 0.3, 0.7),
    (0.3, 0.7, 0.6, 0.7),
    (0.3, 0.4, 0.5, 0.7),
];

fn rect_signed_distance(x: f64, y: f64, (x0, x1, y0, y1): (f64, f64, f64, f64)) -> f64 {
    let dx = (x0 - x).max(x - x1);
    let dy = (y0 - y).max(y - y1);
    if dx <= 0.0 && dy <= 0.0 {
        // inside: distance to the nearest edge
        -dx.max(dy)
    } else {
        -dx.max(0.0).hypot(dy.max(0.0))
    }
}

fn maze_signed_distance(x: f64, y: f64) -> f64 {
    MAZE_STRIPS
        .iter()
        .map(|&r| rect_signed_distance(x, y, r))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// I.i.d. `U[-1, 1]` node values from a ChaCha8 stream seeded with `seed`.
pub fn random_uniform(spec: &GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_uniform_with(spec, &mut rng)
}

pub fn random_uniform_with<R: Rng + ?Sized>(spec: &GridSpec, rng: &mut R) -> Field {
    Field::from_index_fn(*spec, |_, _| rng.gen_range(-1.0..=1.0))
}

//! Explicit finite-difference steppers for the heat, Fisher and Allen–Cahn
//! equations, `φ_t = α Δφ + R(φ)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::grid::{map_stencil, Field};
use crate::trajectory::{advance, rollout, Stepper, Trajectory};

/// Reaction term family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationKind {
    Heat,
    Fisher,
    AllenCahn,
}

impl EquationKind {
    pub const ALL: [EquationKind; 3] = [EquationKind::Heat, EquationKind::Fisher, EquationKind::AllenCahn];

    /// Two-letter table label.
    pub fn label(self) -> &'static str {
        match self {
            EquationKind::Heat => "HE",
            EquationKind::Fisher => "FE",
            EquationKind::AllenCahn => "AC",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EquationKind::Heat => "heat",
            EquationKind::Fisher => "fisher",
            EquationKind::AllenCahn => "ac",
        }
    }

    /// Coefficients of the benchmark problems: α = 1 and β = 0, 100, 6944.
    pub fn default_params(self) -> EquationParams {
        let beta = match self {
            EquationKind::Heat => 0.0,
            EquationKind::Fisher => 100.0,
            EquationKind::AllenCahn => 6944.0,
        };
        EquationParams {
            kind: self,
            alpha: 1.0,
            beta,
        }
    }

    /// Polynomial order a network layer needs to express one step of this equation.
    pub fn poly_order(self) -> usize {
        match self {
            EquationKind::Heat => 0,
            EquationKind::Fisher => 2,
            EquationKind::AllenCahn => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            EquationKind::Heat => 0,
            EquationKind::Fisher => 1,
            EquationKind::AllenCahn => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EquationKind::Heat),
            1 => Some(EquationKind::Fisher),
            2 => Some(EquationKind::AllenCahn),
            _ => None,
        }
    }
}

impl fmt::Display for EquationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "heat" | "he" => Ok(EquationKind::Heat),
            "fisher" | "fe" | "fisher-kpp" => Ok(EquationKind::Fisher),
            "ac" | "allen-cahn" | "allencahn" | "allen_cahn" => Ok(EquationKind::AllenCahn),
            other => Err(domain(format!("unknown equation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    kind: EquationKind,
    alpha: f64,
    beta: f64,
}

impl EquationParams {
    pub fn new(kind: EquationKind, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(domain(format!("diffusion coefficient must be positive, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(domain(format!("reaction coefficient must be non-negative, got {beta}")));
        }
        if kind == EquationKind::Heat && beta != 0.0 {
            return Err(domain("the heat equation has no reaction term (beta must be 0)"));
        }
        Ok(Self { kind, alpha, beta })
    }

    pub fn kind(&self) -> EquationKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepping {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeStepping {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { dt, n_steps })
    }

    /// Number of steps of size `dt` reaching `t_final`; `t_final` must be a
    /// multiple of `dt` up to rounding.
    pub fn to_time(dt: f64, t_final: f64) -> Result<Self> {
        let n_steps = steps_to_reach(dt, t_final)?;
        Self::new(dt, n_steps)
    }
}

pub(crate) fn steps_to_reach(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time step must be positive, got {dt}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(domain(format!("final time must be non-negative, got {t_final}")));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-6 * dt {
        return Err(domain(format!("final time {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Largest stable explicit step for the 2D heat stencil, `h² / (4α)`.
///
/// The reaction term does not enter the bound.
pub fn stability_threshold(h: f64, alpha: f64) -> Result<f64> {
    if !(h > 0.0) || !(alpha > 0.0) {
        return Err(domain(format!(
            "h and alpha must be positive (h = {h}, alpha = {alpha})"
        )));
    }
    Ok(h * h / (4.0 * alpha))
}

#[inline]
pub fn reaction(kind: EquationKind, beta: f64, phi: f64) -> f64 {
    match kind {
        EquationKind::Heat => 0.0,
        EquationKind::Fisher => beta * (phi - phi * phi),
        EquationKind::AllenCahn => beta * (phi - phi * phi * phi),
    }
}

/// One forward-Euler step `φ + dt (α Δ_h φ + R(φ))`.
pub fn fdm_step(f: &Field, eq: &EquationParams, dt: f64) -> Field {
    let h = f.spec().h();
    let inv_h2 = 1.0 / (h * h);
    let (kind, alpha, beta) = (eq.kind, eq.alpha, eq.beta);
    let values = map_stencil(f, |n| {
        let lap = (n.east + n.west + n.north + n.south - 4.0 * n.center) * inv_h2;
        n.center + dt * (alpha * lap + reaction(kind, beta, n.center))
    });
    Field::from_values(*f.spec(), values).expect("stencil output matches grid")
}

/// [`Stepper`] wrapping [`fdm_step`] with a fixed time step.
#[derive(Debug, Clone, Copy)]
pub struct FdmStepper {
    pub eq: EquationParams,
    pub dt: f64,
}

impl Stepper for FdmStepper {
    fn step(&self, f: &Field) -> Field {
        fdm_step(f, &self.eq, self.dt)
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}

/// Repeated [`fdm_step`], recording every `record_every`-th field (and the last).
pub fn fdm_rollout(f0: &Field, eq: &EquationParams, stepping: TimeStepping, record_every: usize) -> Trajectory {
    rollout(
        &FdmStepper {
            eq: *eq,
            dt: stepping.dt,
        },
        f0,
        stepping.n_steps,
        record_every,
    )
}

/// Ratio between the working step and the step of the fine reference solution.
pub const REFERENCE_REFINEMENT: f64 = 100.0;

/// Field at `t_final` computed with the fine step `dt_s / 100`.
///
/// A blow-up here is an error; the reference must be stable.
pub fn reference_solution(f0: &Field, eq: &EquationParams, t_final: f64, dt_s: f64) -> Result<Field> {
    let dt = dt_s / REFERENCE_REFINEMENT;
    let n = steps_to_reach(dt, t_final)?;
    advance(&FdmStepper { eq: *eq, dt }, f0, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::trajectory::BLOW_UP_BOUND;

    fn unit(n: usize) -> GridSpec {
        GridSpec::unit_square(n).unwrap()
    }

    #[test]
    fn threshold_values() {
        assert_eq!(stability_threshold(1.0 / 100.0, 1.0).unwrap(), 2.5e-5);
        assert_eq!(stability_threshold(1.0, 1.0).unwrap(), 0.25);
        assert_eq!(stability_threshold(1.0 / 100.0, 2.0).unwrap(), 1.25e-5);
        assert!(stability_threshold(0.0, 1.0).is_err());
        assert!(stability_threshold(0.01, -1.0).is_err());
    }

    #[test]
    fn reaction_terms() {
        assert_eq!(reaction(EquationKind::AllenCahn, 6944.0, 1.0), 0.0);
        assert_eq!(reaction(EquationKind::AllenCahn, 6944.0, -1.0), 0.0);
        assert_eq!(reaction(EquationKind::Fisher, 100.0, 0.5), 25.0);
        assert_eq!(reaction(EquationKind::Heat, 0.0, 0.7), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(EquationParams::new(EquationKind::Heat, 1.0, 1.0).is_err());
        assert!(EquationParams::new(EquationKind::Fisher, 0.0, 1.0).is_err());
        assert!(EquationParams::new(EquationKind::Fisher, 1.0, -1.0).is_err());
        assert!(EquationParams::new(EquationKind::AllenCahn, 1.0, 6944.0).is_ok());
    }

    #[test]
    fn constant_fields_are_fixed_points() {
        let one = Field::constant(unit(10), 1.0);
        assert_eq!(fdm_step(&one, &EquationKind::Heat.default_params(), 1e-3), one);
        for beta in [0.5, 100.0, 6944.0] {
            let ac = EquationParams::new(EquationKind::AllenCahn, 1.0, beta).unwrap();
            assert_eq!(fdm_step(&one, &ac, 2e-5), one);
        }
    }

    #[test]
    fn impulse_heat_step() {
        let spec = GridSpec::with_mesh_size(5, 5, 1.0).unwrap();
        let mut f = Field::zeros(spec);
        f.set(2, 2, 1.0);
        let out = fdm_step(&f, &EquationKind::Heat.default_params(), 0.1);
        assert!((out.get(2, 2) - 0.6).abs() < 1e-15);
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert!((out.get(i, j) - 0.1).abs() < 1e-15);
        }
        assert_eq!(out.get(0, 0), 0.0);
    }

    #[test]
    fn empty_rollout_keeps_initial_field() {
        let f0 = Field::from_fn(unit(8), |x, y| x * y);
        let traj = fdm_rollout(
            &f0,
            &EquationKind::Heat.default_params(),
            TimeStepping::new(1e-5, 0).unwrap(),
            1,
        );
        assert_eq!(traj.snapshots().len(), 1);
        assert_eq!(traj.snapshots()[0].field, f0);
        assert!(traj.blow_up().is_none());
    }

    #[test]
    fn unstable_heat_step_blows_up() {
        let spec = unit(20);
        let f0 = Field::from_fn(spec, |x, y| (6.0 * x).sin() + y);
        let dt = 3.0 * stability_threshold(spec.h(), 1.0).unwrap();
        let traj = fdm_rollout(
            &f0,
            &EquationKind::Heat.default_params(),
            TimeStepping::new(dt, 500).unwrap(),
            10,
        );
        let step = traj.blow_up().expect("should blow up");
        assert!(step < 500);
        assert!(traj.last().field.max_abs() > BLOW_UP_BOUND || !traj.last().field.is_finite());
    }

    #[test]
    fn reference_at_zero_time_is_initial() {
        let f0 = Field::from_fn(unit(6), |x, _| x);
        let r = reference_solution(&f0, &EquationKind::Fisher.default_params(), 0.0, 2e-5).unwrap();
        assert_eq!(r, f0);
    }

    #[test]
    fn reference_preserves_constants() {
        let zero = Field::zeros(unit(6));
        let one = Field::constant(unit(6), 1.0);
        for kind in EquationKind::ALL {
            let eq = kind.default_params();
            assert_eq!(reference_solution(&zero, &eq, 1e-4, 2e-5).unwrap(), zero);
            if kind != EquationKind::Heat {
                assert_eq!(reference_solution(&one, &eq, 1e-4, 2e-5).unwrap(), one);
            }
        }
    }

    #[test]
    fn reference_rejects_off_grid_time() {
        let f0 = Field::zeros(unit(6));
        assert!(reference_solution(&f0, &EquationKind::Heat.default_params(), 1.5e-7, 2e-5).is_err());
    }

    #[test]
    fn step_count_rounding() {
        assert_eq!(steps_to_reach(2e-5, 0.006).unwrap(), 300);
        assert_eq!(steps_to_reach(6e-5, 0.006).unwrap(), 100);
        assert_eq!(steps_to_reach(2e-7, 0.006).unwrap(), 30000);
        assert_eq!(steps_to_reach(6e-5, 0.003).unwrap(), 50);
    }
}

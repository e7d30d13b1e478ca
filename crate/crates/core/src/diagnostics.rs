//! Error metrics, the discrete Allen–Cahn energy, and the error-table harness.

use std::fmt::Write as _;

use crate::error::{domain, Result};
use crate::fcnn::{DeepFcnn, FcnnStepper};
use crate::fdm::{reference_solution, steps_to_reach, EquationKind, EquationParams, FdmStepper};
use crate::grid::{Field, GridSpec};
use crate::initcond::{Shape, ShapeParams};
use crate::trajectory::{advance, Trajectory};
use crate::Error;

/// `‖φ − φ_ref‖₂ / ‖φ_ref‖₂`
pub fn relative_l2(phi: &Field, phi_ref: &Field) -> Result<f64> {
    phi_ref.check_same_dims(phi)?;
    let denom = phi_ref.norm_l2();
    if !(denom > 0.0) {
        return Err(domain("reference field has zero norm"));
    }
    let num: f64 = phi
        .values()
        .iter()
        .zip(phi_ref.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(num.sqrt() / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub eps: f64,
}

impl EnergyParams {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(domain(format!("interface thickness must be positive, got {eps}")));
        }
        Ok(Self { eps })
    }
}

/// Double-well potential `¼(φ² − 1)²`.
pub fn double_well(phi: f64) -> f64 {
    let s = phi * phi - 1.0;
    0.25 * s * s
}

/// `Σ [F(φ)/ε² + ½|∇_h φ|²] h²` with forward differences on interior edges.
///
/// Edges leading into the ghost ring have zero difference under the Neumann
/// condition and are skipped.
pub fn discrete_energy(phi: &Field, p: &EnergyParams) -> f64 {
    let (nx, ny) = phi.dims();
    let h = phi.spec().h();
    let inv_eps2 = 1.0 / (p.eps * p.eps);
    let mut potential = 0.0;
    let mut gradient = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let v = phi.get(i, j);
            potential += double_well(v) * inv_eps2;
            if i + 1 < nx {
                let d = phi.get(i + 1, j) - v;
                gradient += d * d;
            }
            if j + 1 < ny {
                let d = phi.get(i, j + 1) - v;
                gradient += d * d;
            }
        }
    }
    // (d/h)² · h² = d²
    potential * h * h + 0.5 * gradient
}

/// `E(φ(t)) / E(φ(0))` for every snapshot.
pub fn normalized_energy_series(traj: &Trajectory, p: &EnergyParams) -> Result<Vec<f64>> {
    let e0 = discrete_energy(&traj.first().field, p);
    if !(e0 > 0.0) {
        return Err(domain("initial energy is zero; cannot normalize"));
    }
    Ok(traj
        .snapshots()
        .iter()
        .map(|s| discrete_energy(&s.field, p) / e0)
        .collect())
}

/// `(min, max)` per snapshot.
pub fn minmax_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.snapshots()
        .iter()
        .map(|s| (s.field.min(), s.field.max()))
        .collect()
}

/// `step,time,energy,normalized_energy,min,max` for every snapshot.
pub fn energy_csv(traj: &Trajectory, p: &EnergyParams) -> Result<String> {
    let series = normalized_energy_series(traj, p)?;
    let mut out = String::from("step,time,energy,normalized_energy,min,max\n");
    for (s, norm) in traj.snapshots().iter().zip(series) {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            s.step,
            s.time,
            discrete_energy(&s.field, p),
            norm,
            s.field.min(),
            s.field.max()
        );
    }
    Ok(out)
}

/// Settings shared by every cell of the error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableConfig {
    pub spec: GridSpec,
    pub shape_params: ShapeParams,
    pub dt_s: f64,
    pub dt_l: f64,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            spec: GridSpec::unit_square(100).expect("valid grid"),
            shape_params: ShapeParams::default(),
            dt_s: 2e-5,
            dt_l: 6e-5,
        }
    }
}

/// Evaluation time of a table cell: 0.003 for Fisher/torus, 0.006 otherwise.
pub fn table_time(kind: EquationKind, shape: Shape) -> f64 {
    match (kind, shape) {
        (EquationKind::Fisher, Shape::Torus) => 0.003,
        _ => 0.006,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LargeStepStatus {
    BlownUp { step: usize },
    Finite { error: f64 },
}

impl LargeStepStatus {
    pub fn is_blown_up(&self) -> bool {
        matches!(self, LargeStepStatus::BlownUp { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub kind: EquationKind,
    pub shape: Shape,
    pub t: f64,
    /// Network with `dt_L`; `None` when no model was supplied.
    pub fcnn_error: Option<f64>,
    pub fdm_dts_error: f64,
    pub fdm_dtl: LargeStepStatus,
    pub reference_min: f64,
    pub reference_max: f64,
}

/// Relative error of the network after `t / dt_L` applications; an error
/// if its rollout blows up.
pub fn fcnn_error(model: &DeepFcnn, f0: &Field, reference: &Field, dt_l: f64, t: f64) -> Result<f64> {
    let n = steps_to_reach(dt_l, t)?;
    let out = advance(&FcnnStepper { model, dt: dt_l }, f0, n)?;
    relative_l2(&out, reference)
}

pub fn table_cell(eq: &EquationParams, shape: Shape, model: Option<&DeepFcnn>, cfg: &TableConfig) -> Result<TableRow> {
    let t = table_time(eq.kind(), shape);
    let f0 = shape.generate(&cfg.spec, &cfg.shape_params)?;
    let reference = reference_solution(&f0, eq, t, cfg.dt_s)?;

    let small = advance(&FdmStepper { eq: *eq, dt: cfg.dt_s }, &f0, steps_to_reach(cfg.dt_s, t)?)?;
    let fdm_dts_error = relative_l2(&small, &reference)?;

    let fdm_dtl = match advance(&FdmStepper { eq: *eq, dt: cfg.dt_l }, &f0, steps_to_reach(cfg.dt_l, t)?) {
        Ok(f) => LargeStepStatus::Finite {
            error: relative_l2(&f, &reference)?,
        },
        Err(Error::BlowUp { step }) => LargeStepStatus::BlownUp { step },
        Err(e) => return Err(e),
    };

    let fcnn_error = model.map(|m| fcnn_error(m, &f0, &reference, cfg.dt_l, t)).transpose()?;

    Ok(TableRow {
        kind: eq.kind(),
        shape,
        t,
        fcnn_error,
        fdm_dts_error,
        fdm_dtl,
        reference_min: reference.min(),
        reference_max: reference.max(),
    })
}

/// Every `(equation, shape)` cell in order; `models` are matched to
/// equations by [`DeepFcnn::kind`].
pub fn table1_harness(
    equations: &[EquationParams],
    shapes: &[Shape],
    models: &[DeepFcnn],
    cfg: &TableConfig,
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::with_capacity(equations.len() * shapes.len());
    for eq in equations {
        let model = models.iter().find(|m| m.kind() == eq.kind());
        for &shape in shapes {
            rows.push(table_cell(eq, shape, model, cfg)?);
        }
    }
    Ok(rows)
}

/// `equation,shape,t,fcnn_dtL_error,fdm_dts_error,fdm_dtL_status`
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("equation,shape,t,fcnn_dtL_error,fdm_dts_error,fdm_dtL_status\n");
    for r in rows {
        let fcnn = r.fcnn_error.map(|e| format!("{e:.4e}")).unwrap_or_default();
        let status = match r.fdm_dtl {
            LargeStepStatus::BlownUp { step } => format!("blowup@{step}"),
            LargeStepStatus::Finite { error } => format!("finite:{error:.4e}"),
        };
        let _ = writeln!(
            out,
            "{},{},{},{fcnn},{:.4e},{status}",
            r.kind.label(),
            r.shape,
            r.t,
            r.fdm_dts_error
        );
    }
    out
}

//! Time stepping loop, blow-up detection and trajectory export.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{write_fsn1, write_pgm, Field, PgmScale};
use crate::io::write_atomic;

/// A solution counts as blown up once any `|φ|` exceeds this or turns non-finite.
pub const BLOW_UP_BOUND: f64 = 1e6;

pub fn is_blown_up(f: &Field) -> bool {
    f.values().iter().any(|v| !(v.abs() <= BLOW_UP_BOUND))
}

/// One-step map `φ(t) -> φ(t + dt)`.
pub trait Stepper {
    fn step(&self, f: &Field) -> Field;
    fn dt(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    snapshots: Vec<Snapshot>,
    blow_up: Option<usize>,
}

impl Trajectory {
    /// Wraps an existing list of snapshots (must be non-empty).
    pub fn from_snapshots(dt: f64, snapshots: Vec<Snapshot>, blow_up: Option<usize>) -> Self {
        assert!(!snapshots.is_empty(), "a trajectory holds at least its initial field");
        Self { dt, snapshots, blow_up }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Step index at which the blow-up bound was first exceeded.
    pub fn blow_up(&self) -> Option<usize> {
        self.blow_up
    }

    pub fn first(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("non-empty")
    }

    /// Snapshot recorded at exactly `step`, if any.
    pub fn at_step(&self, step: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.step == step)
    }

    /// Writes `step_<n>.fsn` per snapshot plus `index.csv`
    /// (`step,time,max,min,blown_up`). With `pgm` set, also `step_<n>.pgm`.
    pub fn export(&self, dir: &Path, pgm: Option<PgmScale>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut index = String::from("step,time,max,min,blown_up\n");
        for s in &self.snapshots {
            write_atomic(&dir.join(format!("step_{}.fsn", s.step)), |w| write_fsn1(&s.field, w))?;
            if let Some(scale) = pgm {
                write_atomic(&dir.join(format!("step_{}.pgm", s.step)), |w| {
                    write_pgm(&s.field, scale, w)
                })?;
            }
            let blown = self.blow_up == Some(s.step);
            let _ = writeln!(
                index,
                "{},{:e},{:e},{:e},{}",
                s.step,
                s.time,
                s.field.max(),
                s.field.min(),
                u8::from(blown)
            );
        }
        write_atomic(&dir.join("index.csv"), |w| Ok(w.write_all(index.as_bytes())?))
    }
}

/// Runs `n_steps` steps from `f0`, keeping step 0, every `record_every`-th
/// step and the final one. Stops at the first blown-up field, which is kept.
pub fn rollout<S: Stepper + ?Sized>(stepper: &S, f0: &Field, n_steps: usize, record_every: usize) -> Trajectory {
    let record_every = record_every.max(1);
    let dt = stepper.dt();
    let mut snapshots = vec![Snapshot {
        step: 0,
        time: 0.0,
        field: f0.clone(),
    }];
    let mut current = f0.clone();
    let mut blow_up = None;
    for step in 1..=n_steps {
        current = stepper.step(&current);
        let blown = is_blown_up(&current);
        if blown || step % record_every == 0 || step == n_steps {
            snapshots.push(Snapshot {
                step,
                time: step as f64 * dt,
                field: current.clone(),
            });
        }
        if blown {
            blow_up = Some(step);
            break;
        }
    }
    Trajectory { dt, snapshots, blow_up }
}

/// Final field after `n_steps`, or [`Error::BlowUp`].
pub fn advance<S: Stepper + ?Sized>(stepper: &S, f0: &Field, n_steps: usize) -> Result<Field> {
    let mut current = f0.clone();
    for step in 1..=n_steps {
        current = stepper.step(&current);
        if is_blown_up(&current) {
            return Err(Error::BlowUp { step });
        }
    }
    Ok(current)
}

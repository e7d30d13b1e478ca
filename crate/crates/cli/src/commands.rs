use std::path::Path;

use deepfcnn::diagnostics::{self, EnergyParams, TableConfig};
use deepfcnn::fcnn::{load_model, save_model, DeepFcnn, FcnnStepper};
use deepfcnn::fdm::{stability_threshold, FdmStepper};
use deepfcnn::grid::{read_fsn1, write_fsn1, write_pgm, PgmScale};
use deepfcnn::initcond::{eps_m, random_uniform, ShapeParams};
use deepfcnn::io::write_atomic;
use deepfcnn::training::{self, InitMode, TargetStep, TrainConfig};
use deepfcnn::trajectory::{rollout, Trajectory};
use deepfcnn::{EquationKind, EquationParams, Error, Field, GridSpec, Result, Shape, TimeStepping};

use crate::{EnergyArgs, EquationArgs, Init, Method, ShapesArgs, SimulateArgs, TableArgs, Target, TrainArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_BLOW_UP: u8 = 3;

fn usage(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn equation(args: &EquationArgs, fallback: Option<EquationKind>) -> Result<EquationParams> {
    let kind = match (&args.eq, fallback) {
        (Some(s), _) => s.parse()?,
        (None, Some(k)) => k,
        (None, None) => return Err(usage("--eq is required")),
    };
    let defaults = kind.default_params();
    EquationParams::new(
        kind,
        args.alpha.unwrap_or(defaults.alpha()),
        args.beta.unwrap_or(defaults.beta()),
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn train(a: TrainArgs) -> Result<u8> {
    let eq = equation(&a.equation, None)?;
    let kind = eq.kind();
    if let Some(order) = a.poly_order {
        if order != kind.poly_order() {
            return Err(usage(format!(
                "{kind} networks use polynomial order {}, got --poly-order {order}",
                kind.poly_order()
            )));
        }
    }
    let spec = GridSpec::unit_square(a.grid.n)?;
    let cfg = TrainConfig {
        k: a.k,
        dt_s: a.dt_s,
        dt_l: a.dt_l.unwrap_or(a.k as f64 * a.dt_s),
        epsilon: a.epsilon,
        max_iters: a.max_iters,
        adam: training::AdamConfig {
            learning_rate: a.lr,
            ..Default::default()
        },
        depth: a.depth,
        init: match a.init {
            Init::Uniform => InitMode::default(),
            Init::Fdm => InitMode::FdmEquivalent,
        },
        target: match a.target {
            Target::Coarse => TargetStep::Coarse,
            Target::Fine => TargetStep::Fine,
        },
        seed: a.seed,
    };
    let pair = training::make_training_pair(&eq, &spec, &cfg, a.seed)?;
    let model = training::init_model(&eq, spec.h(), &cfg)?;
    let outcome = training::train(model, std::slice::from_ref(&pair), &cfg)?;

    save_model(&outcome.model, &a.out)?;
    let log = a.log.unwrap_or_else(|| a.out.with_file_name("train_log.csv"));
    write_text(&log, &outcome.log_csv())?;
    eprintln!(
        "{} updates, final loss {:e} ({})",
        outcome.updates,
        outcome.final_loss(),
        if outcome.converged {
            "converged"
        } else {
            "not converged"
        }
    );
    Ok(if outcome.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn initial_field(spec: &GridSpec, shape: &str, input: Option<&Path>) -> Result<Field> {
    match input {
        Some(path) => read_fsn1(std::fs::File::open(path)?),
        None => shape.parse::<Shape>()?.generate(spec, &ShapeParams::default()),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<u8> {
    let spec = GridSpec::unit_square(a.grid.n)?;
    let f0 = initial_field(&spec, &a.shape, a.input.as_deref())?;
    let h = f0.spec().h();
    let pgm = Some(if a.pgm_fixed { PgmScale::UNIT } else { PgmScale::Auto });

    let (traj, stability_expected): (Trajectory, bool) = match a.method {
        Method::Fdm => {
            let eq = equation(&a.equation, None)?;
            let dt = a.dt.unwrap_or(2e-5);
            let stepping = TimeStepping::to_time(dt, a.t)?;
            let traj = rollout(&FdmStepper { eq, dt }, &f0, stepping.n_steps, a.record_every);
            (traj, dt <= stability_threshold(h, eq.alpha())?)
        }
        Method::Fcnn => {
            let path = a.model.as_deref().ok_or_else(|| usage("--method fcnn needs --model"))?;
            let model = load_model(path)?;
            if let Some(eq) = &a.equation.eq {
                let kind: EquationKind = eq.parse()?;
                if kind != model.kind() {
                    return Err(usage(format!("model was trained for {}, not {kind}", model.kind())));
                }
            }
            let dt = a.dt.unwrap_or(6e-5);
            let stepping = TimeStepping::to_time(dt, a.t)?;
            (
                rollout(
                    &FcnnStepper { model: &model, dt },
                    &f0,
                    stepping.n_steps,
                    a.record_every,
                ),
                true,
            )
        }
    };
    traj.export(&a.out, pgm)?;
    match traj.blow_up() {
        Some(step) => {
            eprintln!("blow-up at step {step}");
            Ok(if stability_expected { EXIT_BLOW_UP } else { EXIT_OK })
        }
        None => Ok(EXIT_OK),
    }
}

fn split_list<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect()
}

pub fn table1(a: TableArgs) -> Result<u8> {
    let kinds: Vec<EquationKind> = split_list(&a.eqs)?;
    let shapes: Vec<Shape> = split_list(&a.shapes)?;
    let mut models: Vec<DeepFcnn> = Vec::new();
    for (kind, path) in [
        (EquationKind::Heat, &a.model_heat),
        (EquationKind::Fisher, &a.model_fisher),
        (EquationKind::AllenCahn, &a.model_ac),
    ] {
        if let Some(path) = path {
            let model = load_model(path)?;
            if model.kind() != kind {
                return Err(usage(format!(
                    "{} holds a {} model, expected {kind}",
                    path.display(),
                    model.kind()
                )));
            }
            models.push(model);
        }
    }
    let cfg = TableConfig {
        spec: GridSpec::unit_square(a.grid.n)?,
        dt_s: a.dt_s,
        dt_l: a.dt_l,
        ..TableConfig::default()
    };
    let equations: Vec<EquationParams> = kinds.iter().map(|k| k.default_params()).collect();
    let rows = diagnostics::table1_harness(&equations, &shapes, &models, &cfg)?;
    let csv = diagnostics::table_csv(&rows);
    write_text(&a.out, &csv)?;
    print!("{csv}");
    Ok(EXIT_OK)
}

/// Times at which the energy command saves surface images.
const SURF_TIMES: [f64; 4] = [0.0, 0.0018, 0.003, 0.006];

fn energy_outputs(traj: &Trajectory, p: &EnergyParams, dir: &Path, prefix: &str) -> Result<()> {
    write_text(
        &dir.join(format!("{prefix}_energy.csv")),
        &diagnostics::energy_csv(traj, p)?,
    )?;
    let mut minmax = String::from("step,time,min,max\n");
    for (s, (lo, hi)) in traj.snapshots().iter().zip(diagnostics::minmax_series(traj)) {
        minmax.push_str(&format!("{},{:e},{:e},{:e}\n", s.step, s.time, lo, hi));
    }
    write_text(&dir.join(format!("{prefix}_minmax.csv")), &minmax)?;
    for t in SURF_TIMES {
        let step = (t / traj.dt()).round() as usize;
        if let Some(s) = traj.at_step(step) {
            write_atomic(&dir.join(format!("{prefix}_t{t}.pgm")), |w| {
                write_pgm(&s.field, PgmScale::UNIT, w)
            })?;
            write_atomic(&dir.join(format!("{prefix}_t{t}.fsn")), |w| write_fsn1(&s.field, w))?;
        }
    }
    Ok(())
}

pub fn energy(a: EnergyArgs) -> Result<u8> {
    let spec = GridSpec::unit_square(a.grid.n)?;
    let eq = EquationKind::AllenCahn.default_params();
    let p = EnergyParams::new(eps_m(spec.h(), a.m)?)?;
    let f0 = random_uniform(&spec, a.seed);
    std::fs::create_dir_all(&a.out)?;

    let mut code = EXIT_OK;
    let stepping = TimeStepping::to_time(a.dt_s, a.t)?;
    let fdm = rollout(&FdmStepper { eq, dt: a.dt_s }, &f0, stepping.n_steps, 1);
    energy_outputs(&fdm, &p, &a.out, "fdm")?;
    if fdm.blow_up().is_some() && a.dt_s <= stability_threshold(spec.h(), eq.alpha())? {
        code = EXIT_BLOW_UP;
    }

    if let Some(path) = &a.model {
        let model = load_model(path)?;
        if model.kind() != EquationKind::AllenCahn {
            return Err(usage(format!("energy needs an Allen–Cahn model, got {}", model.kind())));
        }
        let stepping = TimeStepping::to_time(a.dt_l, a.t)?;
        let net = rollout(
            &FcnnStepper {
                model: &model,
                dt: a.dt_l,
            },
            &f0,
            stepping.n_steps,
            1,
        );
        energy_outputs(&net, &p, &a.out, "fcnn")?;
        let series = diagnostics::normalized_energy_series(&net, &p)?;
        eprintln!("fcnn normalized energy at t = {}: {:e}", a.t, series.last().unwrap());
        if net.blow_up().is_some() {
            code = EXIT_BLOW_UP;
        }
    }
    Ok(code)
}

pub fn shapes(a: ShapesArgs) -> Result<u8> {
    let spec = GridSpec::unit_square(a.grid.n)?;
    let params = ShapeParams {
        rho: a.rho,
        ..ShapeParams::default()
    };
    for shape in Shape::ALL {
        let f = shape.generate(&spec, &params)?;
        write_atomic(&a.out.join(format!("{shape}.fsn")), |w| write_fsn1(&f, w))?;
        write_atomic(&a.out.join(format!("{shape}.pgm")), |w| {
            write_pgm(&f, PgmScale::UNIT, w)
        })?;
    }
    Ok(EXIT_OK)
}

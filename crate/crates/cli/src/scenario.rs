//! Validation and execution of scenarios.
//!
//! `prepare` turns a parsed config into fully built inputs (matrices,
//! schedules, states) so that every input problem surfaces before anything
//! is written. `execute` runs the numerics and returns in-memory tables.

use nhtdse_core::anyon::{quench_compare, AnyonChainSpec};
use nhtdse_core::biortho::eig_biortho;
use nhtdse_core::evolve::{evolve, EvolveOptions};
use nhtdse_core::geomphase::{adiabatic_phase_check, exchange_phase, TraceFamily, TraceSpec};
use nhtdse_core::integrator::IntegratorOptions;
use nhtdse_core::linalg::{c, expectation, is_hermitian, json, phase_insensitive_distance, try_inverse};
use nhtdse_core::models::{piecewise_constant, random_state, SimilaritySchedule};
use nhtdse_core::quench::{lrb_probe, quench_operator, LatticeModelSpec};
use nhtdse_core::schedule::HamiltonianSchedule;
use nhtdse_core::tdse::{w_tilde_of, SnapshotOptions};
use nhtdse_core::{ComplexMatrix, ComplexVector, Error, TdseVariant};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{
    CompareConfig, GeomphaseConfig, IntegratorConfig, Kind, LrbConfig, MatrixRows, ModelConfig,
    QuenchConfig, ScenarioConfig, StateConfig,
};

/// Why a scenario did not complete.
#[derive(Debug)]
pub enum Failure {
    /// Bad input; nothing is written.
    Invalid(String),
    /// The numerics failed on valid input.
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::NonFinite => {
                Failure::Invalid(e.to_string())
            }
            other => Failure::Numerical(other),
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Invalid(msg.into()))
}

pub struct Table {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Value,
}

struct TimeEvolution {
    schedule: HamiltonianSchedule,
    psi0: ComplexVector,
    opts: EvolveOptions,
}

enum Prepared {
    Evolve(TimeEvolution, TdseVariant),
    Compare(TimeEvolution, Vec<TdseVariant>),
    Quench {
        w_minus: ComplexMatrix,
        w_plus: ComplexMatrix,
        psi: ComplexVector,
    },
    Lrb {
        spec: LatticeModelSpec,
        psi0: ComplexVector,
        t_q: f64,
        opts: EvolveOptions,
    },
    Geomphase {
        families: Vec<(TraceFamily, TraceSpec)>,
        adiabatic: Option<(TraceFamily, TraceSpec, f64)>,
        opts: EvolveOptions,
    },
    Anyon(AnyonChainSpec),
}

pub struct Scenario {
    pub config: ScenarioConfig,
    prepared: Prepared,
}

impl Scenario {
    pub fn prepare(config: ScenarioConfig) -> Result<Self, Failure> {
        let opts = evolve_options(&config.integrator)?;
        let seed = config.seed;
        let prepared = match config.kind {
            Kind::Evolve => {
                let e = config.evolve.as_ref().expect("section checked at parse time");
                Prepared::Evolve(time_evolution(e.clone().into(), &opts, seed)?, e.variant)
            }
            Kind::CompareTdse => {
                let cmp = config.compare_tdse.as_ref().expect("section checked at parse time");
                compare(cmp, &opts, seed)?
            }
            Kind::Quench => prepare_quench(config.quench.as_ref().expect("section checked at parse time"), seed)?,
            Kind::LrbProbe => prepare_lrb(config.lrb_probe.as_ref().expect("section checked at parse time"), &opts, seed)?,
            Kind::Geomphase => {
                prepare_geomphase(config.geomphase.as_ref().expect("section checked at parse time"), &opts)?
            }
            Kind::AnyonQuench => {
                let spec = config
                    .anyon_quench
                    .as_ref()
                    .expect("section checked at parse time")
                    .spec()
                    .map_err(Failure::Invalid)?;
                spec.validate()?;
                Prepared::Anyon(spec)
            }
        };
        Ok(Self { config, prepared })
    }

    /// Recasts an `evolve` or `compare-tdse` scenario as a comparison over
    /// all variants (or the configured ones).
    pub fn prepare_comparison(mut config: ScenarioConfig) -> Result<Self, Failure> {
        let cmp: CompareConfig = match config.kind {
            Kind::CompareTdse => config.compare_tdse.clone().expect("section checked at parse time"),
            Kind::Evolve => config.evolve.take().expect("section checked at parse time").into(),
            other => return invalid(format!("compare needs an evolve or compare-tdse config, got {}", other.as_str())),
        };
        config.kind = Kind::CompareTdse;
        config.compare_tdse = Some(cmp);
        Self::prepare(config)
    }

    pub fn execute(&self) -> Result<Outcome, Error> {
        match &self.prepared {
            Prepared::Evolve(te, variant) => run_evolve(te, *variant),
            Prepared::Compare(te, variants) => run_compare(te, variants),
            Prepared::Quench { w_minus, w_plus, psi } => run_quench(w_minus, w_plus, psi),
            Prepared::Lrb { spec, psi0, t_q, opts } => run_lrb(spec, psi0, *t_q, opts),
            Prepared::Geomphase {
                families,
                adiabatic,
                opts,
            } => run_geomphase(families, adiabatic.as_ref(), opts),
            Prepared::Anyon(spec) => run_anyon(spec),
        }
    }
}

fn evolve_options(cfg: &IntegratorConfig) -> Result<EvolveOptions, Failure> {
    let integrator = IntegratorOptions {
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step: cfg.max_step,
        fixed_step: cfg.fixed_step,
        ..IntegratorOptions::default()
    };
    integrator.validate()?;
    for (name, v) in [
        ("damping_step", cfg.damping_step),
        ("derivative_step", cfg.derivative_step),
        ("defect_tol", cfg.defect_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("integrator.{name} must be positive"));
        }
    }
    Ok(EvolveOptions {
        integrator,
        snapshot: SnapshotOptions {
            derivative_step: cfg.derivative_step,
            defect_tol: cfg.defect_tol,
        },
        damping_step: cfg.damping_step,
        ..EvolveOptions::default()
    })
}

fn matrix(rows: &MatrixRows, what: &str) -> Result<ComplexMatrix, Failure> {
    let m = json::from_pairs(rows).map_err(|e| Failure::Invalid(format!("{what}: {e}")))?;
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return invalid(format!("{what} must be a non-empty square matrix"));
    }
    Ok(m)
}

fn schedule(model: &ModelConfig, t_span: [f64; 2], seed: u64) -> Result<HamiltonianSchedule, Failure> {
    let span = (t_span[0], t_span[1]);
    if !(span.0.is_finite() && span.1.is_finite() && span.1 > span.0) {
        return invalid("t_span must be finite and increasing");
    }
    let s = match model {
        ModelConfig::Constant { h } => HamiltonianSchedule::constant(matrix(h, "model.h")?, span)?,
        ModelConfig::Driven { h0, h1, frequency } => {
            let (h0, h1) = (matrix(h0, "model.h0")?, matrix(h1, "model.h1")?);
            if h0.nrows() != h1.nrows() {
                return invalid("model.h0 and model.h1 differ in size");
            }
            if !frequency.is_finite() {
                return invalid("model.frequency must be finite");
            }
            let w = *frequency;
            HamiltonianSchedule::smooth(h0.nrows(), span, move |t| &h0 + &h1 * c((w * t).sin(), 0.0))?
        }
        ModelConfig::Piecewise { pieces, quench_times } => {
            let ms = pieces
                .iter()
                .enumerate()
                .map(|(k, p)| matrix(p, &format!("model.pieces[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            piecewise_constant(ms, span, quench_times.clone())?
        }
        ModelConfig::DiagonalDecay(m) => m.schedule(span)?,
        ModelConfig::GainLossDimer(d) => d.schedule(span)?,
        ModelConfig::Similarity { dim } => {
            if !(1..=64).contains(dim) {
                return invalid("model.dim must lie in [1, 64]");
            }
            SimilaritySchedule::seeded(*dim, seed).schedule(span)?
        }
    };
    Ok(s)
}

fn state(cfg: &StateConfig, h0: &ComplexMatrix, defect_tol: f64, seed: u64) -> Result<ComplexVector, Failure> {
    let dim = h0.nrows();
    let psi = match cfg {
        StateConfig::Amplitudes { values } => {
            if values.len() != dim {
                return invalid(format!("state has {} amplitudes, model has dimension {dim}", values.len()));
            }
            ComplexVector::from_iterator(dim, values.iter().map(|&[re, im]| c(re, im)))
        }
        // Offset so the state and a random model drawn from the same seed
        // are independent streams.
        StateConfig::Random => random_state(dim, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed)),
        StateConfig::Eigenstate { level } => {
            if *level >= dim {
                return invalid(format!("state.level {level} out of range for dimension {dim}"));
            }
            eig_biortho(h0, defect_tol)?.right(*level)
        }
    };
    if !psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return invalid("state amplitudes must be finite");
    }
    if psi.norm() == 0.0 {
        return invalid("state must be non-zero");
    }
    Ok(psi)
}

fn time_evolution(cfg: CompareConfig, opts: &EvolveOptions, seed: u64) -> Result<TimeEvolution, Failure> {
    if cfg.samples == 0 {
        return invalid("samples must be at least 1");
    }
    let schedule = schedule(&cfg.model, cfg.t_span, seed)?;
    let h0 = schedule.hamiltonian(cfg.t_span[0])?;
    let psi0 = state(&cfg.state, &h0, opts.snapshot.defect_tol, seed)?;
    let opts = opts.clone().with_uniform_output(cfg.t_span[0], cfg.t_span[1], cfg.samples);
    Ok(TimeEvolution { schedule, psi0, opts })
}

fn compare(cfg: &CompareConfig, opts: &EvolveOptions, seed: u64) -> Result<Prepared, Failure> {
    if cfg.variants.len() < 2 {
        return invalid("compare-tdse needs at least two variants");
    }
    let mut seen = cfg.variants.clone();
    seen.sort_by_key(|v| v.as_str());
    seen.dedup();
    if seen.len() != cfg.variants.len() {
        return invalid("compare-tdse variants must be distinct");
    }
    Ok(Prepared::Compare(time_evolution(cfg.clone(), opts, seed)?, cfg.variants.clone()))
}

fn prepare_quench(cfg: &QuenchConfig, seed: u64) -> Result<Prepared, Failure> {
    let defect_tol = nhtdse_core::biortho::DEFAULT_DEFECT_TOL;
    let (w_minus, w_plus, h_minus) = match (&cfg.h_minus, &cfg.h_plus, &cfg.w_minus, &cfg.w_plus) {
        (Some(hm), Some(hp), None, None) => {
            let (hm, hp) = (matrix(hm, "quench.h_minus")?, matrix(hp, "quench.h_plus")?);
            if hm.nrows() != hp.nrows() {
                return invalid("quench.h_minus and quench.h_plus differ in size");
            }
            let wm = w_tilde_of(&eig_biortho(&hm, defect_tol)?);
            let wp = w_tilde_of(&eig_biortho(&hp, defect_tol)?);
            (wm, wp, Some(hm))
        }
        (None, None, Some(wm), Some(wp)) => {
            let (wm, wp) = (matrix(wm, "quench.w_minus")?, matrix(wp, "quench.w_plus")?);
            if wm.nrows() != wp.nrows() {
                return invalid("quench.w_minus and quench.w_plus differ in size");
            }
            for (name, w) in [("w_minus", &wm), ("w_plus", &wp)] {
                // Complex Cholesky never fails on indefinite input, so test the spectrum.
                if !is_hermitian(w, 1e-12 * w.norm().max(1.0)) || w.clone().symmetric_eigenvalues().min() <= 0.0 {
                    return invalid(format!("quench.{name} must be hermitian positive-definite"));
                }
            }
            (wm, wp, None)
        }
        _ => return invalid("quench needs either h_minus and h_plus, or w_minus and w_plus"),
    };
    let psi = match (&cfg.state, &h_minus) {
        (StateConfig::Eigenstate { .. }, None) => {
            return invalid("an eigenstate needs h_minus; with metrics give amplitudes or a random state")
        }
        (s, Some(h)) => state(s, h, defect_tol, seed)?,
        (s, None) => state(s, &ComplexMatrix::identity(w_minus.nrows(), w_minus.nrows()), defect_tol, seed)?,
    };
    quench_operator(&w_minus, &w_plus)?;
    Ok(Prepared::Quench { w_minus, w_plus, psi })
}

fn prepare_lrb(cfg: &LrbConfig, opts: &EvolveOptions, seed: u64) -> Result<Prepared, Failure> {
    let hoppings = match (&cfg.hopping, &cfg.hoppings) {
        (Some(h), None) => vec![*h; cfg.sites.saturating_sub(1)],
        (None, Some(list)) => list.clone(),
        _ => return invalid("lrb_probe needs exactly one of `hopping` or `hoppings`"),
    };
    let spec = LatticeModelSpec {
        sites: cfg.sites,
        onsite: cfg.onsite.iter().map(|&[re, im]| c(re, im)).collect(),
        hoppings,
        quench_edit: cfg.edit,
    };
    spec.validate()?;
    if !(cfg.t_q >= 0.0 && cfg.t_q.is_finite()) {
        return invalid("lrb_probe.t_q must be non-negative");
    }
    let h = spec.pre_hamiltonian();
    let psi0 = state(&cfg.state, &h, opts.snapshot.defect_tol, seed)?;
    Ok(Prepared::Lrb {
        spec,
        psi0,
        t_q: cfg.t_q,
        opts: opts.clone(),
    })
}

fn prepare_geomphase(cfg: &GeomphaseConfig, opts: &EvolveOptions) -> Result<Prepared, Failure> {
    if cfg.families.is_empty() {
        return invalid("geomphase.families is empty");
    }
    if cfg.steps < nhtdse_core::geomphase::MIN_STEPS {
        return invalid(format!("geomphase.steps must be at least {}", nhtdse_core::geomphase::MIN_STEPS));
    }
    let families = cfg
        .families
        .iter()
        .map(|f| {
            let trace = f.trace(cfg.steps);
            trace.validate()?;
            Ok((*f, trace))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let adiabatic = match &cfg.adiabatic {
        Some(a) => {
            if !(a.rate > 0.0 && a.rate.is_finite()) {
                return invalid("geomphase.adiabatic.rate must be positive");
            }
            let trace = a.family.trace(cfg.steps);
            trace.validate()?;
            Some((a.family, trace, a.rate))
        }
        None => None,
    };
    Ok(Prepared::Geomphase {
        families,
        adiabatic,
        opts: opts.clone(),
    })
}

fn csv_table(name: &str, header: &[String], rows: &[Vec<String>]) -> Result<Table, Error> {
    let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
    Ok(Table {
        name: name.into(),
        bytes,
    })
}

fn buffer<F: FnOnce(&mut Vec<u8>) -> Result<(), Error>>(name: &str, write: F) -> Result<Table, Error> {
    let mut bytes = Vec::new();
    write(&mut bytes)?;
    Ok(Table {
        name: name.into(),
        bytes,
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

/// Configured states live in the right space; the left-space equation
/// starts from `W̃(t0)|Ψ(t0)⟩`.
fn initial_vector(te: &TimeEvolution, variant: TdseVariant) -> Result<ComplexVector, Error> {
    if !variant.is_left_space() {
        return Ok(te.psi0.clone());
    }
    let (t0, _) = te.schedule.t_span();
    let basis = eig_biortho(&te.schedule.hamiltonian(t0)?, te.opts.snapshot.defect_tol)?;
    Ok(w_tilde_of(&basis) * &te.psi0)
}

fn run_evolve(te: &TimeEvolution, variant: TdseVariant) -> Result<Outcome, Error> {
    let traj = evolve(variant, &te.schedule, &initial_vector(te, variant)?, &te.opts)?;
    let table = buffer("trajectory.csv", |out| traj.write_csv(out))?;
    let last = traj.final_sample();
    Ok(Outcome {
        tables: vec![table],
        results: json!({
            "variant": variant.as_str(),
            "unitarity_drift": traj.unitarity_drift,
            "final_time": last.t(),
            "final_populations": last.populations,
            "accepted_steps": traj.accepted_steps(),
            "rejected_steps": traj.rejected_steps(),
            "quench_times": traj.quenches.iter().map(|q| q.t_q).collect::<Vec<_>>(),
        }),
    })
}

/// Final state mapped back to the right space and normalized.
fn right_space_state(traj: &nhtdse_core::Trajectory) -> Result<ComplexVector, Error> {
    let last = traj.final_sample();
    let psi = if traj.variant.is_left_space() {
        try_inverse(last.metric.w_tilde())? * &last.state.psi
    } else {
        last.state.psi.clone()
    };
    let n = psi.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok(psi / c(n, 0.0))
}

fn run_compare(te: &TimeEvolution, variants: &[TdseVariant]) -> Result<Outcome, Error> {
    let reference = right_space_state(&evolve(TdseVariant::NewNH, &te.schedule, &te.psi0, &te.opts)?)?;
    let dim = te.psi0.len();
    let mut header = vec!["variant".to_string(), "drift".to_string()];
    header.extend((0..dim).map(|n| format!("c2_{n}")));
    header.push("distance_to_new_nh".into());
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &v in variants {
        let traj = evolve(v, &te.schedule, &initial_vector(te, v)?, &te.opts)?;
        let distance = phase_insensitive_distance(&right_space_state(&traj)?, &reference);
        let pops = traj.final_sample().populations.clone();
        let mut row = vec![v.as_str().to_string(), fmt(traj.unitarity_drift)];
        row.extend(pops.iter().map(|&p| fmt(p)));
        row.push(fmt(distance));
        rows.push(row);
        summary.push(json!({
            "variant": v.as_str(),
            "unitarity_drift": traj.unitarity_drift,
            "final_populations": pops,
            "distance_to_new_nh": distance,
        }));
    }
    Ok(Outcome {
        tables: vec![csv_table("compare.csv", &header, &rows)?],
        results: json!({ "variants": summary }),
    })
}

fn run_quench(w_minus: &ComplexMatrix, w_plus: &ComplexMatrix, psi: &ComplexVector) -> Result<Outcome, Error> {
    let event = quench_operator(w_minus, w_plus)?;
    let d = event.defects();
    let psi_plus = &event.l * psi;
    let n = event.dim();
    let op_rows: Vec<Vec<String>> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            vec![
                i.to_string(),
                j.to_string(),
                fmt(event.l[(i, j)].re),
                fmt(event.l[(i, j)].im),
                fmt(event.u[(i, j)].re),
                fmt(event.u[(i, j)].im),
            ]
        })
        .collect();
    let header: Vec<String> = ["i", "j", "re_l", "im_l", "re_u", "im_u"].map(String::from).to_vec();
    let state_rows: Vec<Vec<String>> = (0..n)
        .map(|i| vec![i.to_string(), fmt(psi[i].re), fmt(psi[i].im), fmt(psi_plus[i].re), fmt(psi_plus[i].im)])
        .collect();
    let state_header: Vec<String> = ["i", "re_before", "im_before", "re_after", "im_after"].map(String::from).to_vec();
    let identity = ComplexMatrix::identity(n, n);
    Ok(Outcome {
        tables: vec![
            csv_table("operator.csv", &header, &op_rows)?,
            csv_table("state.csv", &state_header, &state_rows)?,
        ],
        results: json!({
            "conservation_defect": d.conservation,
            "exchange_defect": d.exchange,
            "unitarity_defect": d.unitarity,
            "distance_from_identity": (&event.l - identity).norm(),
            "metric_norm_before": expectation(psi, w_minus).re,
            "metric_norm_after": expectation(&psi_plus, w_plus).re,
        }),
    })
}

fn run_lrb(spec: &LatticeModelSpec, psi0: &ComplexVector, t_q: f64, opts: &EvolveOptions) -> Result<Outcome, Error> {
    let profile = lrb_probe(spec, psi0, t_q, opts)?;
    let table = buffer("lrb.csv", |out| profile.write_csv(out))?;
    let far = spec.sites / 4;
    Ok(Outcome {
        tables: vec![table],
        results: json!({
            "t_q": t_q,
            "far_distance": far,
            "max_delta_psi": profile.max_delta_psi(),
            "max_delta_psi_far": profile.max_delta_psi_beyond(far),
            "max_delta_density": profile.max_delta_density(),
            "conservation_defect": profile.event.defects().conservation,
        }),
    })
}

fn run_geomphase(
    families: &[(TraceFamily, TraceSpec)],
    adiabatic: Option<&(TraceFamily, TraceSpec, f64)>,
    opts: &EvolveOptions,
) -> Result<Outcome, Error> {
    let header: Vec<String> = [
        "family",
        "params",
        "classification",
        "gamma_1",
        "gamma_2",
        "gamma_total",
        "gamma_total_over_pi",
        "error_estimate",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (family, trace) in families {
        let r = exchange_phase(trace)?;
        let class = serde_json::to_value(r.path_classification).expect("enum serializes");
        rows.push(vec![
            family.name().to_string(),
            family.params(),
            class.as_str().unwrap_or_default().to_string(),
            fmt(r.gamma_1),
            fmt(r.gamma_2),
            fmt(r.gamma_total),
            fmt(r.gamma_total / std::f64::consts::PI),
            format!("{:.6e}", r.discretization_error_estimate),
        ]);
        summary.push(json!({
            "family": family.name(),
            "params": family.params(),
            "classification": class,
            "gamma_1": r.gamma_1,
            "gamma_2": r.gamma_2,
            "gamma_total": r.gamma_total,
            "deviation_from_pi": r.deviation_from_pi(),
            "error_estimate": r.discretization_error_estimate,
        }));
    }
    let adiabatic = match adiabatic {
        Some((family, trace, rate)) => {
            let a = adiabatic_phase_check(trace, *rate, opts)?;
            json!({
                "family": family.name(),
                "params": family.params(),
                "rate": rate,
                "extracted": a.extracted,
                "predicted": a.predicted,
                "difference": a.difference,
                "leakage": a.leakage,
            })
        }
        None => Value::Null,
    };
    Ok(Outcome {
        tables: vec![csv_table("phases.csv", &header, &rows)?],
        results: json!({ "traces": summary, "adiabatic": adiabatic }),
    })
}

fn run_anyon(spec: &AnyonChainSpec) -> Result<Outcome, Error> {
    let cmp = quench_compare(spec)?;
    let correlations = buffer("correlations.csv", |out| cmp.write_correlation_csv(out))?;
    let momentum = buffer("momentum.csv", |out| cmp.write_momentum_csv(out))?;
    Ok(Outcome {
        tables: vec![correlations, momentum],
        results: json!({
            "kappa": spec.kappa,
            "max_change": cmp.max_change(),
            "max_far_field_change": cmp.max_far_field_change(),
            "max_density_change": cmp.max_density_change(),
            "max_nk_change": cmp.max_nk_change(),
        }),
    })
}

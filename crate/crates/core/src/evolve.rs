//! Time evolution across piecewise-smooth schedules.
//!
//! Each smooth piece is integrated with the adaptive DOPRI5 scheme. At a
//! declared quench the state jumps through the quench operator (for the
//! metric-aware variants) and the damping integrals restart from the
//! quench time.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::biortho::eig_biortho;
use crate::error::{check_dim, Error, Result};
use crate::integrator::{integrate, DenseStep, IntegratorOptions, StepStats};
use crate::linalg::{expectation, try_inverse, ComplexMatrix, ComplexVector};
use crate::metric::{components, left_components, DampingAccumulator, MetricState, WaveState};
use crate::quench::{quench_operator_at, QuenchEvent};
use crate::schedule::HamiltonianSchedule;
use crate::tdse::{rhs, w_tilde_inverse_of, w_tilde_of, MetricSnapshot, SnapshotOptions, TdseVariant};

/// Default largest panel of the damping quadrature.
pub const DEFAULT_DAMPING_STEP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub integrator: IntegratorOptions,
    pub snapshot: SnapshotOptions,
    /// Sample times, strictly increasing inside the schedule's span. Empty
    /// means one sample per accepted step.
    pub output_times: Vec<f64>,
    /// Largest trapezoid panel for the damping integrals.
    pub damping_step: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default(),
            snapshot: SnapshotOptions::default(),
            output_times: Vec::new(),
            damping_step: DEFAULT_DAMPING_STEP,
        }
    }
}

impl EvolveOptions {
    pub fn with_output_times(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    /// `n + 1` equally spaced samples on `[t0, t1]`.
    pub fn with_uniform_output(self, t0: f64, t1: f64, n: usize) -> Self {
        let n = n.max(1);
        let times = (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect();
        self.with_output_times(times)
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub state: WaveState,
    pub metric: MetricState,
    /// Normalized components `|c_n|²`.
    pub populations: Vec<f64>,
    /// `⟨Ψ|W̃|Ψ⟩` (right space) or `⟨Φ|W̃⁻¹|Φ⟩` (left space).
    pub metric_norm: f64,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub variant: TdseVariant,
    pub samples: Vec<Sample>,
    /// `max_t |N(t) − N(t0)| / N(t0)` over all accepted steps, where `N` is
    /// the metric norm.
    pub unitarity_drift: f64,
    pub stats: StepStats,
    pub quenches: Vec<QuenchEvent>,
}

impl Trajectory {
    pub fn accepted_steps(&self) -> usize {
        self.stats.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.stats.rejected
    }

    pub fn final_state(&self) -> &WaveState {
        &self.samples.last().expect("trajectory has at least one sample").state
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::t).collect()
    }

    /// CSV columns: `t`, `re_psi_i`, `im_psi_i` per component, `c2_n` per
    /// state, `drift` (relative change of the metric norm at the sample).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
        let dim = self.samples.first().map_or(0, |s| s.state.dim());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for i in 0..dim {
            header.push(format!("re_psi_{i}"));
            header.push(format!("im_psi_{i}"));
        }
        header.extend((0..dim).map(|n| format!("c2_{n}")));
        header.push("drift".into());
        w.write_record(&header).map_err(io)?;
        let n0 = self.samples.first().map_or(1.0, |s| s.metric_norm);
        for s in &self.samples {
            let mut row = vec![format!("{:.17e}", s.t())];
            for z in s.state.psi.iter() {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            row.extend(s.populations.iter().map(|p| format!("{p:.17e}")));
            row.push(format!("{:.17e}", (s.metric_norm - n0) / n0));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let samples: Vec<Value> = self
            .samples
            .iter()
            .map(|s| {
                json!({
                    "t": s.t(),
                    "psi": s.state.psi.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "populations": s.populations,
                    "damping": s.metric.damping(),
                    "metric_norm": s.metric_norm,
                })
            })
            .collect();
        json!({
            "variant": self.variant.as_str(),
            "unitarity_drift": self.unitarity_drift,
            "accepted_steps": self.stats.accepted,
            "rejected_steps": self.stats.rejected,
            "rhs_evaluations": self.stats.evaluations,
            "quench_times": self.quenches.iter().map(|q| q.t_q).collect::<Vec<_>>(),
            "samples": samples,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct DriftTracker {
    reference: f64,
    max_relative: f64,
}

impl DriftTracker {
    fn observe(&mut self, value: f64) {
        let rel = (value - self.reference).abs() / self.reference;
        if rel > self.max_relative || rel.is_nan() {
            self.max_relative = rel;
        }
    }
}

struct Driver<'a> {
    variant: TdseVariant,
    schedule: &'a HamiltonianSchedule,
    opts: &'a EvolveOptions,
}

impl Driver<'_> {
    fn basis_at(&self, piece: usize, t: f64) -> Result<crate::biortho::BiorthoBasis> {
        eig_biortho(&self.schedule.piece_hamiltonian(piece, t)?, self.opts.snapshot.defect_tol)
    }

    fn metric_norm(&self, psi: &ComplexVector, piece: usize, t: f64) -> Result<f64> {
        let basis = self.basis_at(piece, t)?;
        let m = if self.variant.is_left_space() {
            w_tilde_inverse_of(&basis)
        } else {
            w_tilde_of(&basis)
        };
        Ok(expectation(psi, &m).re)
    }

    /// Advances the damping accumulator to `t` in panels no wider than the
    /// configured damping step.
    fn advance_damping(&self, acc: &mut DampingAccumulator, piece: usize, t: f64) -> Result<()> {
        let span = t - acc.time();
        if !(span > 0.0) {
            return Ok(());
        }
        let panels = (span / self.opts.damping_step).ceil().max(1.0) as usize;
        let start = acc.time();
        for k in 1..=panels {
            let s = if k == panels { t } else { start + span * k as f64 / panels as f64 };
            let basis = self.basis_at(piece, s)?;
            acc.advance(s, &basis)?;
        }
        Ok(())
    }

    fn sample(&self, psi: ComplexVector, t: f64, piece: usize, acc: &DampingAccumulator) -> Result<Sample> {
        let mut acc = acc.clone();
        self.advance_damping(&mut acc, piece, t)?;
        let metric = acc.metric_state()?;
        let (populations, _) = if self.variant.is_left_space() {
            left_components(&psi, &metric)?
        } else {
            components(&psi, &metric)?
        };
        let metric_norm = self.metric_norm(&psi, piece, t)?;
        Ok(Sample {
            state: WaveState::new(psi, t),
            metric,
            populations,
            metric_norm,
        })
    }

    /// State after the quench at `t_q` between pieces `piece` and `piece + 1`.
    fn jump(&self, psi: &ComplexVector, piece: usize, t_q: f64) -> Result<(ComplexVector, QuenchEvent)> {
        let w_minus = w_tilde_of(&self.basis_at(piece, t_q)?);
        let w_plus = w_tilde_of(&self.basis_at(piece + 1, t_q)?);
        let event = quench_operator_at(t_q, &w_minus, &w_plus)?;
        let out = match self.variant {
            TdseVariant::NewNH | TdseVariant::Gong => &event.l * psi,
            TdseVariant::LeftNH => &w_plus * &event.l * try_inverse(&w_minus)? * psi,
            TdseVariant::Standard | TdseVariant::Wieser => psi.clone(),
        };
        Ok((out, event))
    }
}

fn validate_inputs(schedule: &HamiltonianSchedule, psi0: &ComplexVector, opts: &EvolveOptions) -> Result<()> {
    check_dim(schedule.dim(), psi0.len())?;
    if psi0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if psi0.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    opts.integrator.validate()?;
    if !(opts.damping_step > 0.0 && opts.damping_step.is_finite()) {
        return Err(Error::InvalidInput("damping step must be positive".into()));
    }
    let (t0, t1) = schedule.t_span();
    let mut prev = f64::NEG_INFINITY;
    for &t in &opts.output_times {
        if !(t >= t0 && t <= t1 && t > prev) {
            return Err(Error::InvalidInput(format!(
                "output times must increase strictly inside [{t0}, {t1}] (got {t})"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Evolves `psi0` under `variant` over the whole span of `schedule`.
///
/// For the left-space variant `psi0` is the left-space state `|Ψ⟩⟩`.
pub fn evolve(
    variant: TdseVariant,
    schedule: &HamiltonianSchedule,
    psi0: &ComplexVector,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    validate_inputs(schedule, psi0, opts)?;
    let driver = Driver {
        variant,
        schedule,
        opts,
    };
    let (t_start, t_end) = schedule.t_span();
    let every_step = opts.output_times.is_empty();
    let mut samples: Vec<Sample> = Vec::new();
    let mut quenches = Vec::new();
    let mut stats = StepStats::default();

    let reference = driver.metric_norm(psi0, 0, t_start)?;
    if !(reference > 0.0) {
        return Err(Error::ZeroState);
    }
    let mut drift = DriftTracker {
        reference,
        max_relative: 0.0,
    };
    let mut psi = psi0.clone();
    let mut next_output = 0usize;

    for piece in 0..schedule.num_pieces() {
        let (a, b) = schedule.segment(piece);
        let last_piece = piece + 1 == schedule.num_pieces();
        if piece > 0 {
            let (jumped, event) = driver.jump(&psi, piece - 1, a)?;
            log::debug!("quench at t = {a}: defects {:?}", event.defects());
            psi = jumped;
            quenches.push(event);
            drift.observe(driver.metric_norm(&psi, piece, a)?);
        }
        let mut acc = DampingAccumulator::new(a, driver.basis_at(piece, a)?);

        // Samples at the start of the piece (post-jump at a quench).
        if every_step {
            samples.push(driver.sample(psi.clone(), a, piece, &acc)?);
        } else {
            while next_output < opts.output_times.len() && opts.output_times[next_output] <= a {
                samples.push(driver.sample(psi.clone(), a, piece, &acc)?);
                next_output += 1;
            }
        }

        let rhs_fn = |t: f64, y: &ComplexVector| -> Result<ComplexVector> {
            let snap = MetricSnapshot::for_piece(variant, schedule, piece, t, opts.snapshot)?;
            rhs(variant, &snap, y)
        };
        let on_step = |step: &DenseStep, y_new: &ComplexVector| -> Result<()> {
            let t1 = step.t1();
            drift.observe(driver.metric_norm(y_new, piece, t1)?);
            if every_step {
                if last_piece || t1 < b {
                    driver.advance_damping(&mut acc, piece, t1)?;
                    samples.push(driver.sample(y_new.clone(), t1, piece, &acc)?);
                }
            } else {
                while next_output < opts.output_times.len() {
                    let ts = opts.output_times[next_output];
                    let inside = ts <= t1 && (ts < b || last_piece);
                    if !inside {
                        break;
                    }
                    let y = if ts == t1 { y_new.clone() } else { step.eval(ts) };
                    samples.push(driver.sample(y, ts, piece, &acc)?);
                    next_output += 1;
                }
                driver.advance_damping(&mut acc, piece, t1)?;
            }
            Ok(())
        };
        psi = integrate(rhs_fn, a, b, psi, &opts.integrator, &mut stats, on_step)?;
        log::debug!(
            "{variant}: piece {piece} on [{a}, {b}] done, {} accepted / {} rejected steps",
            stats.accepted,
            stats.rejected
        );
    }
    debug_assert!(every_step || next_output == opts.output_times.len());
    let _ = t_end;

    Ok(Trajectory {
        variant,
        samples,
        unitarity_drift: drift.max_relative,
        stats,
        quenches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftRightReport {
    /// `max_t ‖W̃(t)|Ψ(t)⟩ − |Ψ(t)⟩⟩‖`, relative to `‖|Ψ(t0)⟩⟩‖`.
    pub max_discrepancy: f64,
    /// Largest difference between `|c_n|²` read from `|Ψ⟩` and from
    /// `W̃|Ψ⟩` expanded in the left space, at the same instant.
    pub max_component_discrepancy: f64,
    /// Largest difference between the `|c_n|²` of the two independent runs.
    pub max_evolved_component_discrepancy: f64,
}

/// Evolves `|Ψ⟩` with the right-space equation and `|Ψ⟩⟩ = W̃|Ψ⟩` with the
/// left-space equation independently on `[t0, t1]` and compares them at the
/// output times (101 uniform samples when none are given).
pub fn check_left_right_symmetry(
    schedule: &HamiltonianSchedule,
    psi0: &ComplexVector,
    t1: f64,
    opts: &EvolveOptions,
) -> Result<LeftRightReport> {
    let (t0, end) = schedule.t_span();
    let schedule = if t1 < end { schedule.truncated(t1)? } else { schedule.clone() };
    let opts = if opts.output_times.is_empty() {
        opts.clone().with_uniform_output(t0, schedule.t_span().1, 100)
    } else {
        opts.clone()
    };
    let w0 = w_tilde_of(&eig_biortho(&schedule.hamiltonian(t0)?, opts.snapshot.defect_tol)?);
    let phi0 = &w0 * psi0;
    let right = evolve(TdseVariant::NewNH, &schedule, psi0, &opts)?;
    let left = evolve(TdseVariant::LeftNH, &schedule, &phi0, &opts)?;
    let scale = phi0.norm();
    let mut report = LeftRightReport {
        max_discrepancy: 0.0,
        max_component_discrepancy: 0.0,
        max_evolved_component_discrepancy: 0.0,
    };
    for (r, l) in right.samples.iter().zip(&left.samples) {
        let phi = r.metric.w_tilde() * &r.state.psi;
        let d = (&phi - &l.state.psi).norm() / scale;
        report.max_discrepancy = report.max_discrepancy.max(d);
        let (mirrored, _) = left_components(&phi, &r.metric)?;
        for ((a, b), m) in r.populations.iter().zip(&l.populations).zip(&mirrored) {
            report.max_component_discrepancy = report.max_component_discrepancy.max((a - m).abs());
            report.max_evolved_component_discrepancy = report.max_evolved_component_discrepancy.max((a - b).abs());
        }
    }
    Ok(report)
}

/// Propagator `exp(−iHt)` of a constant matrix, by scaling and squaring
/// with a Taylor kernel. Used as a reference for piecewise-constant runs.
pub fn constant_propagator(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let a = h * num_complex::Complex64::new(0.0, -t);
    let norm = a.norm().max(1e-300);
    let squarings = (norm.log2().ceil() + 4.0).max(0.0) as u32;
    let scaled = &a / num_complex::Complex64::new(2f64.powi(squarings as i32), 0.0);
    let n = h.nrows();
    let mut term = ComplexMatrix::identity(n, n);
    let mut sum = ComplexMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / num_complex::Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, from_real_rows, identity};

    fn sigma_x() -> ComplexMatrix {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn up() -> ComplexVector {
        ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn hermitian_rabi_flip() {
        let s = HamiltonianSchedule::constant(sigma_x(), (0.0, std::f64::consts::PI)).unwrap();
        let traj = evolve(TdseVariant::NewNH, &s, &up(), &EvolveOptions::default()).unwrap();
        let psi = &traj.final_state().psi;
        // exp(−iσx π/2)·(1,0) = (0, −i); at π the state returns to −(1,0).
        let expected = constant_propagator(&sigma_x(), std::f64::consts::PI) * up();
        assert!((psi - &expected).norm() < 1e-8, "{psi}");
        assert!((expected[0] + c(1.0, 0.0)).norm() < 1e-12);
        assert!(traj.unitarity_drift < 1e-9);
    }

    #[test]
    fn propagator_matches_closed_form() {
        let u = constant_propagator(&sigma_x(), 0.7);
        let expected = identity(2) * c(0.7f64.cos(), 0.0) - sigma_x() * c(0.0, 0.7f64.sin());
        assert!((u - expected).norm() < 1e-13);
        let d = diag(&[c(1.0, -0.5), c(-2.0, 0.3)]);
        let u = constant_propagator(&d, 1.3);
        assert!((u[(0, 0)] - (c(1.0, -0.5) * c(0.0, -1.3)).exp()).norm() < 1e-13);
    }

    #[test]
    fn output_times_are_honoured() {
        let s = HamiltonianSchedule::constant(sigma_x(), (0.0, 2.0)).unwrap();
        let opts = EvolveOptions::default().with_output_times(vec![0.0, 0.25, 1.0, 2.0]);
        let traj = evolve(TdseVariant::Standard, &s, &up(), &opts).unwrap();
        assert_eq!(traj.times(), vec![0.0, 0.25, 1.0, 2.0]);
        for smp in &traj.samples {
            let expected = constant_propagator(&sigma_x(), smp.t()) * up();
            assert!((&smp.state.psi - expected).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = HamiltonianSchedule::constant(sigma_x(), (0.0, 1.0)).unwrap();
        let zero = ComplexVector::zeros(2);
        assert!(matches!(evolve(TdseVariant::NewNH, &s, &zero, &Default::default()), Err(Error::ZeroState)));
        let three = ComplexVector::from_element(3, c(1.0, 0.0));
        assert!(matches!(
            evolve(TdseVariant::NewNH, &s, &three, &Default::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let opts = EvolveOptions::default().with_output_times(vec![0.5, 0.2]);
        assert!(evolve(TdseVariant::NewNH, &s, &up(), &opts).is_err());
    }

    #[test]
    fn jordan_block_schedule_is_reported_defective() {
        let s = HamiltonianSchedule::constant(from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]), (0.0, 1.0)).unwrap();
        assert!(matches!(
            evolve(TdseVariant::NewNH, &s, &up(), &Default::default()),
            Err(Error::Defective { .. })
        ));
    }

    #[test]
    fn quench_applies_operator_and_restarts_damping() {
        use crate::schedule::HamiltonianFn;
        use std::sync::Arc;
        let h1 = from_real_rows(&[&[1.0, 0.8], &[0.0, -1.0]]);
        let h2 = from_real_rows(&[&[1.0, 0.0], &[0.3, -1.0]]);
        let (p1, p2) = (h1.clone(), h2.clone());
        let s = HamiltonianSchedule::piecewise(
            2,
            (0.0, 2.0),
            vec![1.0],
            vec![
                Arc::new(move |_t: f64| p1.clone()) as HamiltonianFn,
                Arc::new(move |_t: f64| p2.clone()) as HamiltonianFn,
            ],
        )
        .unwrap();
        let opts = EvolveOptions::default().with_output_times(vec![0.0, 1.0, 2.0]);
        let traj = evolve(TdseVariant::NewNH, &s, &up(), &opts).unwrap();
        assert_eq!(traj.quenches.len(), 1);
        assert!(traj.unitarity_drift < 1e-8, "{}", traj.unitarity_drift);
        // The sample at the quench time is post-jump.
        let w2 = w_tilde_of(&eig_biortho(&h2, 1e-8).unwrap());
        let at_q = &traj.samples[1];
        assert!((expectation(&at_q.state.psi, &w2).re - traj.samples[0].metric_norm).abs() < 1e-8);
        assert!(at_q.metric.damping().iter().all(|d| *d == 0.0));
    }
}

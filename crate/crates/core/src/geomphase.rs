//! Geometric phases of adiabatically exchanged two-level eigenstates.
//!
//! The right state of level 1 sits at Bloch angles `(θ, φ)` and its left
//! partner at `(θ', φ')`:
//!
//! ```text
//! |1⟩  = (cos θ/2, sin θ/2 e^{iφ}) / A
//! |1⟩⟩ = (cos θ'/2, sin θ'/2 e^{iφ'})
//! A    = cos θ/2 cos θ'/2 + sin θ/2 sin θ'/2 e^{i(φ−φ')}
//! ```
//!
//! Level 2 uses the substitution `(θ, φ, θ', φ') → (π−θ', φ'+π, π−θ, φ+π)`,
//! which makes it biorthogonal to level 1. An exchange trace moves level 1
//! onto level 2's starting point; level 2 then follows the image trace back
//! onto level 1. The phase rate is
//! `γ̇_n = i[⟨n|W̃|ṅ⟩ + ½⟨n|dW̃/ds|n⟩]`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolveOptions};
use crate::linalg::{c, ComplexMatrix, ComplexVector};
use crate::schedule::HamiltonianSchedule;
use crate::tdse::TdseVariant;

/// Smallest accepted `|A|`.
pub const MIN_OVERLAP: f64 = 1e-6;

/// Fewest trapezoid panels accepted for an exchange trace.
pub const MIN_STEPS: usize = 1000;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = wrap_phase(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Biorthonormal pair of two-level eigenstates built from Bloch angles.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochStates {
    pub right: [ComplexVector; 2],
    pub left: [ComplexVector; 2],
    /// Normalizers of level 1 and level 2.
    pub normalizers: [Complex64; 2],
}

impl BlochStates {
    /// Right vectors as matrix columns.
    pub fn right_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.right)
    }

    /// Left kets `|n⟩⟩` as matrix columns.
    pub fn left_ket_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.left)
    }

    /// `|1⟩E₁⟨⟨1| + |2⟩E₂⟨⟨2|`
    pub fn hamiltonian(&self, e1: Complex64, e2: Complex64) -> ComplexMatrix {
        &self.right[0] * self.left[0].adjoint() * e1 + &self.right[1] * self.left[1].adjoint() * e2
    }
}

fn bloch_vector(theta: f64, phi: f64) -> ComplexVector {
    let (s, co) = (0.5 * theta).sin_cos();
    ComplexVector::from_vec(vec![c(co, 0.0), Complex64::from_polar(s, phi)])
}

fn bloch_vector_derivative(theta: f64, phi: f64, dtheta: f64, dphi: f64) -> ComplexVector {
    let (s, co) = (0.5 * theta).sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    ComplexVector::from_vec(vec![c(-0.5 * s * dtheta, 0.0), e * c(0.5 * co * dtheta, s * dphi)])
}

fn level_two_angles(theta: f64, phi: f64, theta_p: f64, phi_p: f64) -> (f64, f64, f64, f64) {
    (PI - theta_p, phi_p + PI, PI - theta, phi + PI)
}

fn make_pair(theta: f64, phi: f64, theta_p: f64, phi_p: f64) -> Result<(ComplexVector, ComplexVector, Complex64)> {
    let v = bloch_vector(theta, phi);
    let u = bloch_vector(theta_p, phi_p);
    let a = u.dotc(&v);
    if !(a.norm() > MIN_OVERLAP) {
        return Err(Error::DegenerateOverlap { overlap: a.norm() });
    }
    Ok((v / a, u, a))
}

pub fn bloch_states(theta: f64, phi: f64, theta_p: f64, phi_p: f64) -> Result<BlochStates> {
    let (r1, l1, a1) = make_pair(theta, phi, theta_p, phi_p)?;
    let (t2, f2, t2p, f2p) = level_two_angles(theta, phi, theta_p, phi_p);
    let (r2, l2, a2) = make_pair(t2, f2, t2p, f2p)?;
    Ok(BlochStates {
        right: [r1, r2],
        left: [l1, l2],
        normalizers: [a1, a2],
    })
}

/// `γ̇_n = Re i[⟨n|W̃|ṅ⟩ + ½⟨n|dW̃/ds|n⟩]` for every column `n` of `right`.
pub fn geometric_phase_increment(
    right: &ComplexMatrix,
    right_dot: &ComplexMatrix,
    w_tilde: &ComplexMatrix,
    w_tilde_dot: &ComplexMatrix,
) -> Vec<f64> {
    (0..right.ncols())
        .map(|n| {
            let r = right.column(n);
            let dr = right_dot.column(n);
            let first = r.dotc(&(w_tilde * dr));
            let second = r.dotc(&(w_tilde_dot * r)) * 0.5;
            (Complex64::i() * (first + second)).re
        })
        .collect()
}

/// `γ̇_n = Re (i/2)[⟨⟨n|ṅ⟩ + ⟨n|ṅ⟩⟩]` from right vectors and left kets.
pub fn geometric_phase_increment_biorthogonal(
    right: &ComplexMatrix,
    right_dot: &ComplexMatrix,
    left: &ComplexMatrix,
    left_dot: &ComplexMatrix,
) -> Vec<f64> {
    (0..right.ncols())
        .map(|n| {
            let z = left.column(n).dotc(&right_dot.column(n)) + right.column(n).dotc(&left_dot.column(n));
            (Complex64::i() * z * 0.5).re
        })
        .collect()
}

/// The same rate computed in the left space, where `|n⟩⟩` carries the
/// metric `W̃⁻¹`: `γ̇_n = Re i[⟨⟨n|W̃⁻¹|ṅ⟩⟩ + ½⟨⟨n|d(W̃⁻¹)/ds|n⟩⟩]`.
pub fn geometric_phase_increment_left(
    left: &ComplexMatrix,
    left_dot: &ComplexMatrix,
    w_tilde_inv: &ComplexMatrix,
    w_tilde_inv_dot: &ComplexMatrix,
) -> Vec<f64> {
    geometric_phase_increment(left, left_dot, w_tilde_inv, w_tilde_inv_dot)
}

/// Circular detour inserted into a path: the point leaves the base trace,
/// runs once around a circle of angular radius `radius` and rejoins it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detour {
    pub radius: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_center() -> f64 {
    0.5
}

fn default_width() -> f64 {
    0.4
}

/// Path on the Bloch sphere:
/// `θ(s) = θ₀ + (θ₁ − θ₀)s + b sin πs`, `φ(s) = φ₀ + Δφ s`, plus an optional
/// detour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpherePath {
    pub theta_start: f64,
    pub theta_end: f64,
    #[serde(default)]
    pub theta_bulge: f64,
    #[serde(default)]
    pub phi_start: f64,
    pub phi_sweep: f64,
    #[serde(default)]
    pub detour: Option<Detour>,
}

impl SpherePath {
    /// Equator from `φ = 0` to `φ = π`.
    pub fn equator() -> Self {
        Self {
            theta_start: 0.5 * PI,
            theta_end: 0.5 * PI,
            theta_bulge: 0.0,
            phi_start: 0.0,
            phi_sweep: PI,
            detour: None,
        }
    }

    fn base_theta(&self, s: f64) -> f64 {
        self.theta_start + (self.theta_end - self.theta_start) * s + self.theta_bulge * (PI * s).sin()
    }

    /// `(θ, φ, dθ/ds, dφ/ds)` at `s`.
    pub fn angles(&self, s: f64) -> (f64, f64, f64, f64) {
        let mut theta = self.base_theta(s);
        let mut dtheta = self.theta_end - self.theta_start + self.theta_bulge * PI * (PI * s).cos();
        let mut phi = self.phi_start + self.phi_sweep * s;
        let mut dphi = self.phi_sweep;
        if let Some(d) = self.detour {
            let x = (s - (d.center - 0.5 * d.width)) / d.width;
            if x > 0.0 && x < 1.0 {
                // α runs 0 → 2π with vanishing speed at both ends.
                let alpha = TAU * x - (TAU * x).sin();
                let dalpha = TAU * (1.0 - (TAU * x).cos()) / d.width;
                let stretch = 1.0 / self.base_theta(d.center).sin().max(1e-3);
                theta += d.radius * (1.0 - alpha.cos());
                dtheta += d.radius * alpha.sin() * dalpha;
                phi += d.radius * stretch * alpha.sin();
                dphi += d.radius * stretch * alpha.cos() * dalpha;
            }
        }
        (theta, phi, dtheta, dphi)
    }

    pub fn has_loop(&self) -> bool {
        self.detour.is_some_and(|d| d.radius != 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathClass {
    NoLoop,
    Loop,
}

/// Exchange trace of level 1: right path, left path and the (constant)
/// eigenvalues used when a Hamiltonian is rebuilt from the states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    pub right: SpherePath,
    pub left: SpherePath,
    pub e1: Complex64,
    pub e2: Complex64,
    pub steps: usize,
    /// Reparameterization `s → s + w sin(2πs)/2π`; monotone for `|w| < 1`.
    #[serde(default)]
    pub warp: f64,
}

impl TraceSpec {
    pub fn new(right: SpherePath, left: SpherePath) -> Self {
        Self {
            right,
            left,
            e1: c(-2.5, 0.0),
            e2: c(2.5, 0.0),
            steps: 4000,
            warp: 0.0,
        }
    }

    /// Coinciding left and right traces.
    pub fn hermitian(path: SpherePath) -> Self {
        Self::new(path, path)
    }

    pub fn classification(&self) -> PathClass {
        if self.right.has_loop() || self.left.has_loop() {
            PathClass::Loop
        } else {
            PathClass::NoLoop
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::InvalidInput(format!(
                "exchange traces need at least {MIN_STEPS} steps (got {})",
                self.steps
            )));
        }
        if !(self.warp.abs() < 1.0) {
            return Err(Error::InvalidInput("warp must satisfy |w| < 1".into()));
        }
        for d in [self.right.detour, self.left.detour].into_iter().flatten() {
            let (lo, hi) = (d.center - 0.5 * d.width, d.center + 0.5 * d.width);
            if !(d.width > 0.0 && lo >= 0.0 && hi <= 1.0) {
                return Err(Error::InvalidInput("detour window must lie inside [0, 1]".into()));
            }
        }
        // Level 1 must end where level 2 starts.
        let (t0, f0, _, _) = self.right.angles(0.0);
        let (tp0, fp0, _, _) = self.left.angles(0.0);
        let (t1, f1, _, _) = self.right.angles(1.0);
        let (tp1, fp1, _, _) = self.left.angles(1.0);
        let (t2, f2, t2p, f2p) = level_two_angles(t0, f0, tp0, fp0);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        let close_angle = |a: f64, b: f64| wrap_signed(a - b).abs() < 1e-9;
        if !(close(t1, t2) && close(tp1, t2p) && close_angle(f1, f2) && close_angle(fp1, f2p)) {
            return Err(Error::InvalidInput(
                "trace does not carry level 1 onto level 2's starting point".into(),
            ));
        }
        Ok(())
    }

    fn warped(&self, s: f64) -> (f64, f64) {
        (s + self.warp * (TAU * s).sin() / TAU, 1.0 + self.warp * (TAU * s).cos())
    }

    /// Bloch states of both levels at `s`.
    pub fn states_at(&self, s: f64) -> Result<BlochStates> {
        let (u, _) = self.warped(s);
        let (t, f, _, _) = self.right.angles(u);
        let (tp, fp, _, _) = self.left.angles(u);
        bloch_states(t, f, tp, fp)
    }

    /// States and their `s`-derivatives at `s`.
    pub fn node(&self, s: f64) -> Result<TraceNode> {
        let (u, du) = self.warped(s);
        let (t, f, dt, df) = self.right.angles(u);
        let (tp, fp, dtp, dfp) = self.left.angles(u);
        let (dt, df, dtp, dfp) = (dt * du, df * du, dtp * du, dfp * du);
        let one = pair_with_derivative((t, f, dt, df), (tp, fp, dtp, dfp))?;
        let two = pair_with_derivative((PI - tp, fp + PI, -dtp, dfp), (PI - t, f + PI, -dt, df))?;
        Ok(TraceNode {
            right: ComplexMatrix::from_columns(&[one.0, two.0]),
            right_dot: ComplexMatrix::from_columns(&[one.1, two.1]),
            left: ComplexMatrix::from_columns(&[one.2, two.2]),
            left_dot: ComplexMatrix::from_columns(&[one.3, two.3]),
        })
    }

    /// Hamiltonian `|1⟩E₁⟨⟨1| + |2⟩E₂⟨⟨2|` at `s`.
    pub fn hamiltonian(&self, s: f64) -> Result<ComplexMatrix> {
        Ok(self.states_at(s)?.hamiltonian(self.e1, self.e2))
    }
}

type Angles = (f64, f64, f64, f64);

fn pair_with_derivative(
    right: Angles,
    left: Angles,
) -> Result<(ComplexVector, ComplexVector, ComplexVector, ComplexVector)> {
    let v = bloch_vector(right.0, right.1);
    let dv = bloch_vector_derivative(right.0, right.1, right.2, right.3);
    let u = bloch_vector(left.0, left.1);
    let du = bloch_vector_derivative(left.0, left.1, left.2, left.3);
    let a = u.dotc(&v);
    if !(a.norm() > MIN_OVERLAP) {
        return Err(Error::DegenerateOverlap { overlap: a.norm() });
    }
    let da = du.dotc(&v) + u.dotc(&dv);
    let r = &v / a;
    let dr = &dv / a - &v * (da / (a * a));
    Ok((r, dr, u, du))
}

/// Right vectors, left kets and their derivatives at one point of a trace.
#[derive(Debug, Clone)]
pub struct TraceNode {
    pub right: ComplexMatrix,
    pub right_dot: ComplexMatrix,
    pub left: ComplexMatrix,
    pub left_dot: ComplexMatrix,
}

impl TraceNode {
    pub fn w_tilde(&self) -> ComplexMatrix {
        &self.left * self.left.adjoint()
    }

    pub fn w_tilde_dot(&self) -> ComplexMatrix {
        &self.left_dot * self.left.adjoint() + &self.left * self.left_dot.adjoint()
    }

    pub fn w_tilde_inv(&self) -> ComplexMatrix {
        &self.right * self.right.adjoint()
    }

    pub fn w_tilde_inv_dot(&self) -> ComplexMatrix {
        &self.right_dot * self.right.adjoint() + &self.right * self.right_dot.adjoint()
    }

    /// Phase rates from the metric form.
    pub fn rates(&self) -> Vec<f64> {
        geometric_phase_increment(&self.right, &self.right_dot, &self.w_tilde(), &self.w_tilde_dot())
    }

    pub fn rates_biorthogonal(&self) -> Vec<f64> {
        geometric_phase_increment_biorthogonal(&self.right, &self.right_dot, &self.left, &self.left_dot)
    }

    pub fn rates_left_space(&self) -> Vec<f64> {
        geometric_phase_increment_left(&self.left, &self.left_dot, &self.w_tilde_inv(), &self.w_tilde_inv_dot())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseResult {
    /// Phase of level 1 including its closure onto level 2, in `[0, 2π)`.
    pub gamma_1: f64,
    pub gamma_2: f64,
    /// `gamma_1 + gamma_2` in `[0, 2π)`.
    pub gamma_total: f64,
    pub path_classification: PathClass,
    /// `|γ(steps) − γ(steps/2)| / 3`, the trapezoid error estimate of the
    /// reported total.
    pub discretization_error_estimate: f64,
    /// Unwrapped open-path integrals of the two phase rates.
    pub open_path: [f64; 2],
    /// Closure phases `arg⟨⟨m(0)|n(1)⟩`.
    pub closure: [f64; 2],
}

impl PhaseResult {
    /// Signed distance of the total from `π`, in `(−π, π]`.
    pub fn deviation_from_pi(&self) -> f64 {
        wrap_signed(self.gamma_total - PI)
    }
}

fn integrate_rates(trace: &TraceSpec, steps: usize) -> Result<[f64; 2]> {
    let h = 1.0 / steps as f64;
    let mut total = [0.0; 2];
    let mut prev = trace.node(0.0)?.rates();
    for k in 1..=steps {
        let next = trace.node(k as f64 * h)?.rates();
        for n in 0..2 {
            total[n] += 0.5 * h * (prev[n] + next[n]);
        }
        prev = next;
    }
    Ok(total)
}

fn closure_phases(trace: &TraceSpec) -> Result<[f64; 2]> {
    let start = trace.states_at(0.0)?;
    let end = trace.states_at(1.0)?;
    let chi = |n: usize, m: usize| start.left[m].dotc(&end.right[n]).arg();
    Ok([chi(0, 1), chi(1, 0)])
}

/// Total geometric phase of the exchange along `trace`.
pub fn exchange_phase(trace: &TraceSpec) -> Result<PhaseResult> {
    trace.validate()?;
    let fine = integrate_rates(trace, trace.steps)?;
    let coarse = integrate_rates(trace, trace.steps / 2)?;
    let closure = closure_phases(trace)?;
    let g1 = fine[0] + closure[0];
    let g2 = fine[1] + closure[1];
    let total_fine = g1 + g2;
    let total_coarse = coarse[0] + coarse[1] + closure[0] + closure[1];
    Ok(PhaseResult {
        gamma_1: wrap_phase(g1),
        gamma_2: wrap_phase(g2),
        gamma_total: wrap_phase(total_fine),
        path_classification: trace.classification(),
        discretization_error_estimate: (total_fine - total_coarse).abs() / 3.0,
        open_path: fine,
        closure,
    })
}

/// Named trace families for configs and tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceFamily {
    /// Coinciding traces along the equator.
    GreatCircle,
    /// Coinciding traces from `θ₀` to `π − θ₀`.
    HermitianSweep { theta_start: f64 },
    /// Coinciding equatorial traces bulging towards a pole.
    HermitianBulge { bulge: f64 },
    /// Coinciding equatorial traces with a detour on both.
    HermitianLoop { radius: f64 },
    /// Coinciding equatorial traces with a non-uniform speed.
    HermitianWarped { warp: f64 },
    /// Right trace on the equator, left trace bulging by `bulge`.
    NhNoLoop { bulge: f64 },
    /// As `nh-no-loop`, with a detour of angular radius `radius` on the left
    /// trace.
    NhLoop { bulge: f64, radius: f64 },
}

impl TraceFamily {
    pub fn name(&self) -> &'static str {
        match self {
            TraceFamily::GreatCircle => "great-circle",
            TraceFamily::HermitianSweep { .. } => "hermitian-sweep",
            TraceFamily::HermitianBulge { .. } => "hermitian-bulge",
            TraceFamily::HermitianLoop { .. } => "hermitian-loop",
            TraceFamily::HermitianWarped { .. } => "hermitian-warped",
            TraceFamily::NhNoLoop { .. } => "nh-no-loop",
            TraceFamily::NhLoop { .. } => "nh-loop",
        }
    }

    /// Parameter list as `key=value` pairs joined by `;`.
    pub fn params(&self) -> String {
        match *self {
            TraceFamily::GreatCircle => String::new(),
            TraceFamily::HermitianSweep { theta_start } => format!("theta_start={theta_start}"),
            TraceFamily::HermitianBulge { bulge } => format!("bulge={bulge}"),
            TraceFamily::HermitianLoop { radius } => format!("radius={radius}"),
            TraceFamily::HermitianWarped { warp } => format!("warp={warp}"),
            TraceFamily::NhNoLoop { bulge } => format!("bulge={bulge}"),
            TraceFamily::NhLoop { bulge, radius } => format!("bulge={bulge};radius={radius}"),
        }
    }

    pub fn trace(&self, steps: usize) -> TraceSpec {
        let eq = SpherePath::equator();
        let mut spec = match *self {
            TraceFamily::GreatCircle => TraceSpec::hermitian(eq),
            TraceFamily::HermitianSweep { theta_start } => TraceSpec::hermitian(SpherePath {
                theta_start,
                theta_end: PI - theta_start,
                ..eq
            }),
            TraceFamily::HermitianBulge { bulge } => TraceSpec::hermitian(SpherePath {
                theta_bulge: bulge,
                ..eq
            }),
            TraceFamily::HermitianLoop { radius } => TraceSpec::hermitian(SpherePath {
                detour: Some(Detour {
                    radius,
                    center: default_center(),
                    width: default_width(),
                }),
                ..eq
            }),
            TraceFamily::HermitianWarped { warp } => TraceSpec {
                warp,
                ..TraceSpec::hermitian(eq)
            },
            TraceFamily::NhNoLoop { bulge } => TraceSpec::new(
                eq,
                SpherePath {
                    theta_bulge: bulge,
                    ..eq
                },
            ),
            TraceFamily::NhLoop { bulge, radius } => TraceSpec::new(
                eq,
                SpherePath {
                    theta_bulge: bulge,
                    detour: Some(Detour {
                        radius,
                        center: default_center(),
                        width: default_width(),
                    }),
                    ..eq
                },
            ),
        };
        spec.steps = steps;
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub family: String,
    pub params: String,
    pub gamma_total: f64,
    pub error_estimate: f64,
}

/// Exchange phases for a list of families.
pub fn phase_table(families: &[TraceFamily], steps: usize) -> Result<Vec<PhaseRow>> {
    families
        .iter()
        .map(|f| {
            let r = exchange_phase(&f.trace(steps))?;
            Ok(PhaseRow {
                family: f.name().into(),
                params: f.params(),
                gamma_total: r.gamma_total,
                error_estimate: r.discretization_error_estimate,
            })
        })
        .collect()
}

/// CSV with header `family,params,gamma_total,error_estimate`.
pub fn write_phase_table<W: Write>(rows: &[PhaseRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["family", "params", "gamma_total", "error_estimate"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.family.clone(),
            r.params.clone(),
            format!("{:.15e}", r.gamma_total),
            format!("{:.6e}", r.error_estimate),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticCheck {
    /// Open-path phase of level 1 extracted from the evolved state.
    pub extracted: f64,
    /// Open-path phase of level 1 from the phase rate.
    pub predicted: f64,
    /// `|extracted − predicted|`, wrapped.
    pub difference: f64,
    /// Population leaked out of level 1, `|⟨⟨2|ψ⟩|/|⟨⟨1|ψ⟩|` at the end.
    pub leakage: f64,
}

/// Evolves level 1 under the right-space metric-aware equation with the
/// trace traversed at speed `rate` (total time `1/rate`) and compares the
/// phase left after removing the dynamical part `−Re E₁ T` with the
/// integrated phase rate.
pub fn adiabatic_phase_check(trace: &TraceSpec, rate: f64, opts: &EvolveOptions) -> Result<AdiabaticCheck> {
    trace.validate()?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidInput("rate must be positive".into()));
    }
    let duration = 1.0 / rate;
    let spec = *trace;
    let schedule = HamiltonianSchedule::smooth(2, (0.0, duration), move |t| {
        spec.hamiltonian((t * rate).clamp(-0.5, 1.5))
            .expect("trace overlap was validated along [0, 1]")
    })?;
    // Fail early (instead of panicking inside the schedule) on a degenerate overlap.
    for k in 0..=trace.steps {
        trace.states_at(k as f64 / trace.steps as f64)?;
    }
    let start = trace.states_at(0.0)?;
    let end = trace.states_at(1.0)?;
    let opts = opts.clone().with_output_times(vec![0.0, duration]);
    let traj = evolve(TdseVariant::NewNH, &schedule, &start.right[0], &opts)?;
    let psi = &traj.final_state().psi;
    let amp = end.left[0].dotc(psi);
    let extracted = wrap_signed(amp.arg() + trace.e1.re * duration);
    let predicted = wrap_signed(integrate_rates(trace, trace.steps)?[0]);
    Ok(AdiabaticCheck {
        extracted,
        predicted,
        difference: wrap_signed(extracted - predicted).abs(),
        leakage: end.left[1].dotc(psi).norm() / amp.norm(),
    })
}

//! Dormand–Prince 5(4) embedded Runge–Kutta pair for complex state vectors,
//! with the standard fourth-order continuous extension for dense output.

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexVector};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b − b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Steps below this size abort with `StepSizeUnderflow`.
    pub min_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Disables error control: the interval is cut into equal steps no
    /// longer than this.
    pub fixed_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            max_step: 0.5,
            min_step: 1e-12,
            initial_step: None,
            max_steps: 1_000_000,
            fixed_step: None,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.rtol) && positive(self.atol) && positive(self.max_step) && self.min_step >= 0.0) {
            return Err(Error::InvalidInput("integrator tolerances and step bounds must be positive".into()));
        }
        if let Some(h) = self.fixed_step {
            if !positive(h) {
                return Err(Error::InvalidInput("fixed step must be positive".into()));
            }
        }
        Ok(())
    }

    /// Same options with both tolerances multiplied by `factor`.
    pub fn scaled_tolerances(mut self, factor: f64) -> Self {
        self.rtol *= factor;
        self.atol *= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// An accepted step `[t0, t0 + h]` with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [ComplexVector; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at `t` inside the step.
    pub fn eval(&self, t: f64) -> ComplexVector {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        let inner = r4 + r5 * c(theta1, 0.0);
        let inner = r3 + inner * c(theta, 0.0);
        let inner = r2 + inner * c(theta1, 0.0);
        r1 + inner * c(theta, 0.0)
    }
}

fn axpy(y: &ComplexVector, h: f64, terms: &[(f64, &ComplexVector)]) -> ComplexVector {
    let mut out = y.clone();
    for &(a, k) in terms {
        if a != 0.0 {
            out.axpy(c(h * a, 0.0), k, c(1.0, 0.0));
        }
    }
    out
}

fn error_norm(err: &ComplexVector, y0: &ComplexVector, y1: &ComplexVector, opts: &IntegratorOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, calling `on_step` after every
/// accepted step with the dense step and the new state. Returns the final
/// state.
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: ComplexVector,
    opts: &IntegratorOptions,
    stats: &mut StepStats,
    mut on_step: S,
) -> Result<ComplexVector>
where
    F: FnMut(f64, &ComplexVector) -> Result<ComplexVector>,
    S: FnMut(&DenseStep, &ComplexVector) -> Result<()>,
{
    opts.validate()?;
    if !(t1 > t0) {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    stats.evaluations += 1;

    let (mut h, fixed) = match opts.fixed_step {
        Some(hf) => {
            let n = (span / hf).ceil().max(1.0);
            (span / n, true)
        }
        None => (
            opts.initial_step
                .unwrap_or_else(|| initial_step(&mut f, t, &y, &k1, opts, stats))
                .min(opts.max_step)
                .min(span),
            false,
        ),
    };
    let mut last_rejected = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        steps += 1;
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if !fixed && h < opts.min_step && !last {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        let y2 = axpy(&y, h, &[(A21, &k1)]);
        let k2 = f(t + C2 * h, &y2)?;
        let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + C3 * h, &y3)?;
        let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + C4 * h, &y4)?;
        let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + C5 * h, &y5)?;
        let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t1 } else { t + h };
        let k6 = f(t_new, &y6)?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t_new, &y_new)?;
        stats.evaluations += 6;

        let err_vec = axpy(
            &ComplexVector::zeros(y.len()),
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = if fixed { 0.0 } else { error_norm(&err_vec, &y, &y_new, opts) };
        if !err.is_finite() {
            h *= FAC_MIN;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            let ydiff = &y_new - &y;
            let bspl = &k1 * c(h, 0.0) - &ydiff;
            let dense = DenseStep {
                t0: t,
                h,
                rcont: [
                    y.clone(),
                    ydiff.clone(),
                    bspl.clone(),
                    &ydiff - &k7 * c(h, 0.0) - &bspl,
                    axpy(
                        &ComplexVector::zeros(y.len()),
                        h,
                        &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
                    ),
                ],
            };
            stats.accepted += 1;
            on_step(&dense, &y_new)?;
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                return Ok(y);
            }
            if !fixed {
                let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
                h = (h * fac).min(opts.max_step);
            }
            last_rejected = false;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            h *= fac;
        }
    }
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &ComplexVector,
    f0: &ComplexVector,
    opts: &IntegratorOptions,
    stats: &mut StepStats,
) -> f64
where
    F: FnMut(f64, &ComplexVector) -> Result<ComplexVector>,
{
    let scaled = |v: &ComplexVector| error_norm(v, y, y, opts);
    let d0 = scaled(y);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.max_step);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let Ok(f1) = f(t + h0, &y1) else {
        return h0;
    };
    stats.evaluations += 1;
    let d2 = scaled(&(f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

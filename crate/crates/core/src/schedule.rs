//! Piecewise-smooth time-dependent Hamiltonians.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{is_finite, ComplexMatrix};

pub type HamiltonianFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// `H(t)` on `[t0, t1]`, smooth between declared quench times.
///
/// Each piece is a smooth function that may be evaluated slightly outside
/// its own interval; finite differences at piece edges rely on that. At a
/// quench time the schedule is right-continuous.
#[derive(Clone)]
pub struct HamiltonianSchedule {
    dim: usize,
    t_span: (f64, f64),
    quench_times: Vec<f64>,
    pieces: Vec<HamiltonianFn>,
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSchedule")
            .field("dim", &self.dim)
            .field("t_span", &self.t_span)
            .field("quench_times", &self.quench_times)
            .finish()
    }
}

impl HamiltonianSchedule {
    pub fn smooth<F>(dim: usize, t_span: (f64, f64), f: F) -> Result<Self>
    where
        F: Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self::piecewise(dim, t_span, Vec::new(), vec![Arc::new(f) as HamiltonianFn])
    }

    pub fn constant(h: ComplexMatrix, t_span: (f64, f64)) -> Result<Self> {
        let dim = h.nrows();
        Self::smooth(dim, t_span, move |_| h.clone())
    }

    /// `pieces[k]` is active on `[quench_times[k-1], quench_times[k])`.
    pub fn piecewise(
        dim: usize,
        t_span: (f64, f64),
        quench_times: Vec<f64>,
        pieces: Vec<HamiltonianFn>,
    ) -> Result<Self> {
        let (t0, t1) = t_span;
        if dim == 0 {
            return Err(Error::InvalidInput("schedule dimension must be positive".into()));
        }
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::InvalidInput(format!("invalid time span [{t0}, {t1}]")));
        }
        if pieces.len() != quench_times.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} quench times need {} pieces, got {}",
                quench_times.len(),
                quench_times.len() + 1,
                pieces.len()
            )));
        }
        let mut prev = t0;
        for &q in &quench_times {
            if !(q > prev && q < t1) {
                return Err(Error::InvalidInput(format!(
                    "quench times must be sorted and strictly inside the span (got {q})"
                )));
            }
            prev = q;
        }
        let schedule = Self {
            dim,
            t_span,
            quench_times,
            pieces,
        };
        for k in 0..schedule.pieces.len() {
            let (a, _) = schedule.segment(k);
            schedule.piece_hamiltonian(k, a)?;
        }
        Ok(schedule)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_span(&self) -> (f64, f64) {
        self.t_span
    }

    pub fn quench_times(&self) -> &[f64] {
        &self.quench_times
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Interval `[start, end]` of piece `k`.
    pub fn segment(&self, k: usize) -> (f64, f64) {
        let start = if k == 0 { self.t_span.0 } else { self.quench_times[k - 1] };
        let end = self.quench_times.get(k).copied().unwrap_or(self.t_span.1);
        (start, end)
    }

    /// Index of the piece active at `t` (right-continuous at quenches).
    pub fn piece_index(&self, t: f64) -> usize {
        self.quench_times.partition_point(|&q| q <= t)
    }

    /// Evaluates piece `k`'s smooth extension at `t`.
    pub fn piece_hamiltonian(&self, k: usize, t: f64) -> Result<ComplexMatrix> {
        let h = (self.pieces[k])(t);
        if h.nrows() != self.dim || h.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: h.nrows().max(h.ncols()),
            });
        }
        if !is_finite(&h) {
            return Err(Error::NonFinite);
        }
        Ok(h)
    }

    pub fn hamiltonian(&self, t: f64) -> Result<ComplexMatrix> {
        self.piece_hamiltonian(self.piece_index(t), t)
    }

    /// The schedule restricted to `[t_span.0, t1]`.
    pub fn truncated(&self, t1: f64) -> Result<Self> {
        let keep = self.quench_times.partition_point(|&q| q < t1);
        Self::piecewise(
            self.dim,
            (self.t_span.0, t1),
            self.quench_times[..keep].to_vec(),
            self.pieces[..=keep].to_vec(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, identity};

    #[test]
    fn piece_lookup_is_right_continuous() {
        let s = HamiltonianSchedule::piecewise(
            1,
            (0.0, 3.0),
            vec![1.0, 2.0],
            (0..3)
                .map(|k| Arc::new(move |_t: f64| diag(&[c(k as f64, 0.0)])) as HamiltonianFn)
                .collect(),
        )
        .unwrap();
        assert_eq!(s.piece_index(0.5), 0);
        assert_eq!(s.piece_index(1.0), 1);
        assert_eq!(s.piece_index(2.5), 2);
        assert_eq!(s.hamiltonian(2.0).unwrap()[(0, 0)], c(2.0, 0.0));
        assert_eq!(s.segment(1), (1.0, 2.0));
        let t = s.truncated(1.5).unwrap();
        assert_eq!(t.quench_times(), &[1.0]);
        assert_eq!(t.num_pieces(), 2);
    }

    #[test]
    fn rejects_bad_quench_times_and_shapes() {
        let piece = || Arc::new(|_t: f64| identity(2)) as HamiltonianFn;
        assert!(HamiltonianSchedule::piecewise(2, (0.0, 1.0), vec![1.0], vec![piece(), piece()]).is_err());
        assert!(HamiltonianSchedule::piecewise(2, (0.0, 1.0), vec![], vec![piece(), piece()]).is_err());
        assert!(HamiltonianSchedule::piecewise(3, (0.0, 1.0), vec![], vec![piece()]).is_err());
        assert!(HamiltonianSchedule::smooth(2, (1.0, 1.0), |_| identity(2)).is_err());
    }
}

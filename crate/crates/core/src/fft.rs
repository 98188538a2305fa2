//! Unitary 2D Fourier transform between position and momentum samples.
//!
//! Convention: `psi_hat(p) = (2*pi)^(-1) * integral exp(-i p.x) psi(x) dx`
//! in two dimensions, discretized on the periodic grid. Position samples
//! sit at `x_j = -L/2 + j*dx`, momentum samples at `p_k = dp * s(k)` in
//! standard FFT ordering with `s(k) = k` for `k < n/2` and `k - n`
//! otherwise. With these conventions the axis phases reduce to `(-1)^k`
//! and the whole map is exactly unitary on the discrete inner product.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use crate::exec;

static PLANS: LazyLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = PLANS.lock().unwrap();
    plans
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            planner.plan_fft(len, dir)
        })
        .clone()
}

/// Direction of the unitary transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// position -> momentum
    Forward,
    /// momentum -> position
    Inverse,
}

/// Transform an `n x n` row-major field in place.
///
/// `length` is the box side `L`. The input is interpreted as position
/// samples for `Forward` and momentum samples for `Inverse`.
pub fn transform_2d(samples: &mut Vec<Complex64>, n: usize, length: f64, direction: Direction) {
    assert_eq!(samples.len(), n * n);
    let dx = length / n as f64;
    let dp = 2.0 * std::f64::consts::PI / length;
    // Per-axis scale; two axes give the full (2*pi)^(-1) normalization.
    let scale = match direction {
        Direction::Forward => dx / (2.0 * std::f64::consts::PI).sqrt(),
        Direction::Inverse => dp / (2.0 * std::f64::consts::PI).sqrt(),
    };
    let plan = plan(n, matches!(direction, Direction::Forward));

    transform_rows(samples, n, &plan, scale, direction);
    transpose(samples, n);
    transform_rows(samples, n, &plan, scale, direction);
    transpose(samples, n);
}

fn transform_rows(
    samples: &mut [Complex64],
    n: usize,
    plan: &Arc<dyn Fft<f64>>,
    scale: f64,
    direction: Direction,
) {
    exec::for_each_row(samples, n, |_i, row| {
        match direction {
            Direction::Forward => {
                plan.process(row);
                for (k, v) in row.iter_mut().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    *v *= scale * sign;
                }
            }
            Direction::Inverse => {
                for (k, v) in row.iter_mut().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    *v *= sign;
                }
                plan.process(row);
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
        }
    });
}

fn transpose(samples: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            samples.swap(i * n + j, j * n + i);
        }
    }
}

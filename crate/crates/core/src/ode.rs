//! Dormand–Prince 5(4) integration for autonomous right-hand sides.
//!
//! Callers integrate one constant-input segment at a time, so a step never
//! straddles a switching instant.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t:.6e}")]
    NonFinite { t: f64 },
    #[error("exceeded {max_steps} steps at t = {t:.6e}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("right-hand side failed at t = {t:.6e}: {message}")]
    Rhs { t: f64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 200_000,
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self::with_tol(1e-10)
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights (same as the last row of A, FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// B5 minus the embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
/// One DP5 step from `y` with step `h`. Writes the 5th-order solution into
/// `out` and returns the scaled RMS error estimate.
fn step<F>(
    rhs: &F,
    y: &[f64],
    h: f64,
    t: f64,
    k: &mut [Vec<f64>; 7],
    tmp: &mut [f64],
    out: &mut [f64],
    opts: &OdeOptions,
) -> Result<f64, OdeError>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), String>,
{
    let n = y.len();
    let call =
        |x: &[f64], dst: &mut [f64]| rhs(x, dst).map_err(|message| OdeError::Rhs { t, message });
    call(y, &mut k[0])?;
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, a) in A[s].iter().enumerate().take(s) {
                acc += a * k[j][i];
            }
            tmp[i] = y[i] + h * acc;
        }
        call(tmp, &mut k[s])?;
    }
    let mut err2 = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        let mut e = 0.0;
        for s in 0..7 {
            acc += B5[s] * k[s][i];
            e += E[s] * k[s][i];
        }
        out[i] = y[i] + h * acc;
        let scale = opts.atol + opts.rtol * y[i].abs().max(out[i].abs());
        let r = h * e / scale;
        err2 += r * r;
    }
    Ok((err2 / n.max(1) as f64).sqrt())
}

/// Adaptive integration of `ẏ = rhs(y)` for `duration ≥ 0` time units.
///
/// `on_step(t, y)` is called after every accepted step (t relative to the
/// start), including the final one at `t = duration`.
pub fn integrate<F, S>(
    rhs: F,
    y0: &[f64],
    duration: f64,
    opts: &OdeOptions,
    mut on_step: S,
) -> Result<Vec<f64>, OdeError>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), String>,
    S: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if duration <= 0.0 {
        return Ok(y);
    }
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut out = vec![0.0; n];

    // Initial step guess from the derivative scale.
    rhs(&y, &mut k[0]).map_err(|message| OdeError::Rhs { t: 0.0, message })?;
    let d0 = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let d1 = k[0].iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let mut h = if d1 > 0.0 {
        (0.01 * (d0 + opts.atol.max(1e-12)) / d1).max(1e-6 * duration)
    } else {
        duration
    }
    .min(duration);

    let mut t = 0.0;
    let mut steps = 0usize;
    let h_floor = 1e-15 * duration.max(1.0);
    while t < duration {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        let last = t + h >= duration * (1.0 - 1e-14);
        let h_try = if last { duration - t } else { h };
        let err = step(&rhs, &y, h_try, t, &mut k, &mut tmp, &mut out, opts)?;
        steps += 1;
        if !err.is_finite() || out.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h < h_floor {
                return Err(OdeError::NonFinite { t });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { duration } else { t + h_try };
            y.copy_from_slice(&out);
            on_step(t, &y);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = h_try * factor;
        } else {
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < h_floor {
                return Err(OdeError::StepUnderflow { t, h });
            }
        }
    }
    Ok(y)
}

/// Fixed-step DP5 (5th-order solution, no error control).
pub fn integrate_fixed<F>(
    rhs: F,
    y0: &[f64],
    duration: f64,
    steps: usize,
) -> Result<Vec<f64>, OdeError>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), String>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut out = vec![0.0; n];
    let h = duration / steps as f64;
    let opts = OdeOptions::default();
    for s in 0..steps {
        step(&rhs, &y, h, s as f64 * h, &mut k, &mut tmp, &mut out, &opts)?;
        y.copy_from_slice(&out);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(y: &[f64], dy: &mut [f64]) -> Result<(), String> {
        dy[0] = -y[0];
        Ok(())
    }

    #[test]
    fn exponential_decay() {
        let y = integrate(decay, &[1.0], 1.0, &OdeOptions::with_tol(1e-10), |_, _| {}).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn reports_every_step_and_ends_on_duration() {
        let mut times = Vec::new();
        integrate(decay, &[1.0], 0.3, &OdeOptions::default(), |t, _| {
            times.push(t)
        })
        .unwrap();
        assert_eq!(*times.last().unwrap(), 0.3);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fixed_step_order() {
        let exact = (-1.0f64).exp();
        let e1 = (integrate_fixed(decay, &[1.0], 1.0, 4).unwrap()[0] - exact).abs();
        let e2 = (integrate_fixed(decay, &[1.0], 1.0, 8).unwrap()[0] - exact).abs();
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn finite_time_blow_up_is_reported() {
        // ẏ = y², y(0) = 1 escapes at t = 1.
        let r = integrate(
            |y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            &[1.0],
            2.0,
            &OdeOptions::with_tol(1e-8),
            |_, _| {},
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_duration_is_identity() {
        assert_eq!(
            integrate(decay, &[2.5], 0.0, &OdeOptions::default(), |_, _| {}).unwrap(),
            vec![2.5]
        );
    }
}

//! Piecewise-constant-input integration and the sampled-data closed loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{norm, random_on_sphere, SystemDef};
use crate::exec::{self, Execution};
use crate::ode::{self, OdeError, OdeOptions};
use crate::symexpr::EvalError;
use crate::synth::{synthesize, ControlSchedule, SynthParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("segment {segment}: {source}")]
    Ode { segment: usize, source: OdeError },
    #[error("state has {got} coordinates, system has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Dense solution: integrator steps plus every segment boundary. `u[i]` is
/// the input in force on the step ending at `t[i]` (the first segment's
/// value for `t[0] = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub u: Vec<f64>,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrates `ẋ = f(x) + u(t)·g(x)` over the schedule, one segment at a
/// time, with mixed absolute/relative per-step error `tol`.
pub fn integrate(
    sys: &SystemDef,
    x0: &[f64],
    schedule: &ControlSchedule,
    tol: f64,
) -> Result<Trajectory, SimError> {
    if x0.len() != sys.dim() {
        return Err(SimError::Dimension {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    let opts = OdeOptions::with_tol(tol);
    let first_u = schedule.segments()[0].value;
    let mut traj = Trajectory {
        t: vec![0.0],
        states: vec![x0.to_vec()],
        u: vec![first_u],
    };
    let mut t0 = 0.0;
    let mut x = x0.to_vec();
    for (i, seg) in schedule.segments().iter().enumerate() {
        let u = seg.value;
        let rhs = |y: &[f64], dy: &mut [f64]| sys.rhs_into(y, u, dy).map_err(|e| e.to_string());
        let mut record = |t: f64, y: &[f64]| {
            traj.t.push(t0 + t);
            traj.states.push(y.to_vec());
            traj.u.push(u);
        };
        x = ode::integrate(rhs, &x, seg.duration, &opts, &mut record)
            .map_err(|source| SimError::Ode { segment: i, source })?;
        t0 += seg.duration;
        if let Some(last) = traj.t.last_mut() {
            *last = t0;
        }
    }
    Ok(traj)
}

/// Sampling partition `T1 = 0 < T2 < …` up to a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum PartitionRule {
    Uniform { delta: f64 },
    Random { min: f64, max: f64, seed: u64 },
    Explicit { times: Vec<f64> },
}

impl PartitionRule {
    /// Sample instants in `[0, horizon]`; the last interval is truncated at
    /// the horizon.
    pub fn instants(&self, horizon: f64) -> Result<Vec<f64>, SimError> {
        let bad = |m: String| Err(SimError::Precondition(m));
        if !(horizon > 0.0) {
            return bad(format!("horizon must be positive, got {horizon}"));
        }
        let mut out = vec![0.0];
        match self {
            PartitionRule::Uniform { delta } => {
                if !(*delta > 0.0) {
                    return bad(format!("uniform step must be positive, got {delta}"));
                }
                let n = (horizon / delta - 1e-9).ceil() as usize;
                out.extend((1..=n).map(|k| (k as f64 * delta).min(horizon)));
            }
            PartitionRule::Random { min, max, seed } => {
                if !(*min > 0.0 && max >= min) {
                    return bad(format!(
                        "random bounds must satisfy 0 < min <= max, got [{min}, {max}]"
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut t = 0.0;
                while t < horizon {
                    let d = if max > min {
                        rng.gen_range(*min..=*max)
                    } else {
                        *min
                    };
                    t = (t + d).min(horizon);
                    out.push(t);
                }
            }
            PartitionRule::Explicit { times } => {
                if times.first() != Some(&0.0) {
                    return bad("explicit partition must start at 0".into());
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("explicit partition must be strictly increasing".into());
                }
                out = times.iter().copied().filter(|t| *t <= horizon).collect();
                if *out.last().unwrap() < horizon {
                    out.push(horizon);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopParams {
    pub partition: PartitionRule,
    pub horizon: f64,
    /// Operating ball radius `R`.
    pub radius: f64,
    pub convergence_radius: f64,
    /// Defaults to `1e3·R` when `None`.
    pub divergence_bound: Option<f64>,
    pub synth: SynthParams,
    /// Keep the dense trajectory (needed for CSV export).
    pub keep_dense: bool,
}

impl LoopParams {
    pub fn new(partition: PartitionRule, horizon: f64, radius: f64) -> Self {
        Self {
            partition,
            horizon,
            radius,
            convergence_radius: 1e-2,
            divergence_bound: None,
            synth: SynthParams::default(),
            keep_dense: false,
        }
    }

    pub fn divergence_bound(&self) -> f64 {
        self.divergence_bound.unwrap_or(1e3 * self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum Termination {
    Horizon,
    Converged,
    Diverged,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub schedule: ControlSchedule,
    pub v_max: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTrajectory {
    pub samples: Vec<f64>,
    pub sample_states: Vec<Vec<f64>>,
    pub sample_v: Vec<f64>,
    pub intervals: Vec<Interval>,
    pub dense: Option<Trajectory>,
    pub termination: Termination,
    /// Peak `|x(t)|` over the dense solution.
    pub peak_norm: f64,
    /// Smallest `V(x(T_i)) − V(x(T_{i+1}))` over intervals that started
    /// outside the convergence radius.
    pub min_decrease: Option<f64>,
}

impl SampledTrajectory {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn convergence_time(&self) -> Option<f64> {
        self.converged().then(|| *self.samples.last().unwrap())
    }

    /// CSV rows `t, x1..xn, u, V` from the dense solution.
    pub fn csv_rows(&self, sys: &SystemDef) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["t".to_string()];
        header.extend((1..=sys.dim()).map(|i| format!("x{i}")));
        header.push("u".into());
        header.push("V".into());
        let rows = match &self.dense {
            Some(d) => {
                d.t.iter()
                    .zip(&d.states)
                    .zip(&d.u)
                    .map(|((t, x), u)| {
                        let mut row = vec![t.to_string()];
                        row.extend(x.iter().map(|c| c.to_string()));
                        row.push(u.to_string());
                        row.push(sys.v_at(x).map(|v| v.to_string()).unwrap_or_default());
                        row
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        (header, rows)
    }
}

/// Runs the sampled-data loop: at every sample outside the convergence
/// radius, requests a decrease witness with cap equal to the interval
/// length and applies it (zero-padded to the interval).
pub fn run_closed_loop(
    sys: &SystemDef,
    x0: &[f64],
    params: &LoopParams,
) -> Result<SampledTrajectory, SimError> {
    if x0.len() != sys.dim() {
        return Err(SimError::Dimension {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    if norm(x0) > params.radius {
        return Err(SimError::Precondition(format!(
            "|x0| = {} exceeds the operating radius {}",
            norm(x0),
            params.radius
        )));
    }
    let instants = params.partition.instants(params.horizon)?;
    let bound = params.divergence_bound();
    let mut out = SampledTrajectory {
        samples: vec![0.0],
        sample_states: vec![x0.to_vec()],
        sample_v: vec![sys.v_at(x0)?],
        intervals: Vec::new(),
        dense: params.keep_dense.then(|| Trajectory {
            t: vec![0.0],
            states: vec![x0.to_vec()],
            u: vec![0.0],
        }),
        termination: Termination::Horizon,
        peak_norm: norm(x0),
        min_decrease: None,
    };
    let mut x = x0.to_vec();
    for w in instants.windows(2) {
        let r = norm(&x);
        if r <= params.convergence_radius {
            out.termination = Termination::Converged;
            return Ok(out);
        }
        if r >= bound {
            out.termination = Termination::Diverged;
            return Ok(out);
        }
        let (t_i, t_next) = (w[0], w[1]);
        let cap = t_next - t_i;
        let witness = match synthesize(sys, &x, cap, true, &params.synth) {
            Ok(w) => w,
            Err(e) => {
                out.termination = Termination::Error(format!("at t = {t_i}: {e}"));
                return Ok(out);
            }
        };
        let traj = integrate(sys, &x, &witness.schedule, params.synth.ode_tol)?;
        for s in &traj.states {
            out.peak_norm = out.peak_norm.max(norm(s));
        }
        if let Some(d) = out.dense.as_mut() {
            d.t.extend(traj.t.iter().skip(1).map(|t| t_i + t));
            d.states.extend(traj.states.iter().skip(1).cloned());
            d.u.extend(traj.u.iter().skip(1));
        }
        x = traj.end().to_vec();
        let v_prev = *out.sample_v.last().unwrap();
        let v = sys.v_at(&x)?;
        let dec = v_prev - v;
        out.min_decrease = Some(out.min_decrease.map_or(dec, |m: f64| m.min(dec)));
        out.samples.push(t_next);
        out.sample_states.push(x.clone());
        out.sample_v.push(v);
        out.intervals.push(Interval {
            schedule: witness.schedule,
            v_max: witness.v_max_along,
            attempts: witness.attempts,
        });
    }
    let r = norm(&x);
    out.termination = if r <= params.convergence_radius {
        Termination::Converged
    } else if r >= bound {
        Termination::Diverged
    } else {
        Termination::Horizon
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub x0: Vec<f64>,
    pub peak_norm: f64,
    pub termination: Termination,
    pub convergence_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    /// Supremum of the peak norms over the runs at this radius.
    pub sup_peak: f64,
    pub converged: usize,
    pub runs: Vec<SweepRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seed: u64,
    pub samples_per_delta: usize,
    pub rows: Vec<SweepRow>,
    /// `(ε, smallest swept δ whose sup-peak exceeds ε)`; `None` when every
    /// swept δ stays within ε.
    pub epsilon_table: Vec<(f64, Option<f64>)>,
}

fn run_seed(seed: u64, delta_index: usize, sample: usize) -> u64 {
    seed ^ (delta_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (sample as u64)
            .wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
            .rotate_left(17)
}

/// Closed loops from seeded random initial states on each sphere `|x0| = δ`.
pub fn stability_sweep(
    sys: &SystemDef,
    deltas: &[f64],
    epsilons: &[f64],
    params: &LoopParams,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> StabilityReport {
    let jobs: Vec<(usize, usize, f64)> = deltas
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| (0..samples).map(move |s| (i, s, d)))
        .collect();
    let runs = exec::map(exec, &jobs, |&(i, s, delta)| {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed(seed, i, s));
        let x0 = if delta == 0.0 {
            vec![0.0; sys.dim()]
        } else {
            random_on_sphere(&mut rng, sys.dim(), delta)
        };
        match run_closed_loop(sys, &x0, params) {
            Ok(t) => SweepRun {
                x0,
                peak_norm: t.peak_norm,
                convergence_time: t.convergence_time(),
                termination: t.termination,
            },
            Err(e) => SweepRun {
                x0,
                peak_norm: f64::NAN,
                termination: Termination::Error(e.to_string()),
                convergence_time: None,
            },
        }
    });
    let mut rows: Vec<SweepRow> = deltas
        .iter()
        .map(|&delta| SweepRow {
            delta,
            sup_peak: 0.0,
            converged: 0,
            runs: Vec::new(),
        })
        .collect();
    for ((i, _, _), run) in jobs.into_iter().zip(runs) {
        let row = &mut rows[i];
        row.sup_peak = row.sup_peak.max(run.peak_norm);
        if run.peak_norm.is_nan() {
            row.sup_peak = f64::NAN;
        }
        row.converged += usize::from(run.termination == Termination::Converged);
        row.runs.push(run);
    }
    let epsilon_table = epsilons
        .iter()
        .map(|&eps| {
            let first_bad = rows
                .iter()
                .filter(|r| !(r.sup_peak <= eps))
                .map(|r| r.delta)
                .fold(None, |acc: Option<f64>, d| {
                    Some(acc.map_or(d, |a| a.min(d)))
                });
            (eps, first_bad)
        })
        .collect();
    StabilityReport {
        seed,
        samples_per_delta: samples,
        rows,
        epsilon_table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::VectorField;
    use crate::symexpr::parse;
    use crate::templates::Corollary2;

    fn chain() -> SystemDef {
        Corollary2::new("1", "1", 3).unwrap().system().unwrap()
    }

    #[test]
    fn exponential_decay_endpoint() {
        let sys = SystemDef::new(
            VectorField::parse(&["-x1"]).unwrap(),
            VectorField::parse(&["0"]).unwrap(),
            parse("0.5*x1^2", 1).unwrap(),
        )
        .unwrap();
        let s = ControlSchedule::constant(1.0, 0.0).unwrap();
        let traj = integrate(&sys, &[1.0], &s, 1e-10).unwrap();
        assert!((traj.end()[0] - 0.367879).abs() < 1e-6);
        assert_eq!(*traj.t.last().unwrap(), 1.0);
    }

    #[test]
    fn equilibrium_stays_put() {
        let s = ControlSchedule::constant(1.0, 0.0).unwrap();
        let traj = integrate(&chain(), &[0.0; 3], &s, 1e-10).unwrap();
        assert_eq!(traj.end(), &[0.0; 3]);
    }

    #[test]
    fn input_channel_is_exact() {
        let s = ControlSchedule::constant(1.0, -1.0).unwrap();
        let traj = integrate(&chain(), &[0.0, 0.0, 1.0], &s, 1e-10).unwrap();
        assert!(traj.end()[2].abs() <= 1e-9);
    }

    #[test]
    fn boundaries_are_dense_points() {
        let s = ControlSchedule::new(vec![(0.3, 1.0), (0.2, -1.0)]).unwrap();
        let traj = integrate(&chain(), &[0.1, 0.1, 0.1], &s, 1e-8).unwrap();
        assert!(traj.t.contains(&0.3));
        assert_eq!(*traj.t.last().unwrap(), 0.5);
        let i = traj.t.iter().position(|t| *t == 0.3).unwrap();
        assert_eq!(traj.u[i], 1.0);
        assert_eq!(traj.u[i + 1], -1.0);
    }

    #[test]
    fn partitions() {
        let u = PartitionRule::Uniform { delta: 0.25 }
            .instants(1.0)
            .unwrap();
        assert_eq!(u, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let e = PartitionRule::Explicit {
            times: vec![0.0, 1e-6, 0.5],
        }
        .instants(1.0)
        .unwrap();
        assert_eq!(e, vec![0.0, 1e-6, 0.5, 1.0]);
        assert!(PartitionRule::Explicit {
            times: vec![0.0, 0.5, 0.5]
        }
        .instants(1.0)
        .is_err());
        let r = PartitionRule::Random {
            min: 0.1,
            max: 0.3,
            seed: 3,
        }
        .instants(2.0)
        .unwrap();
        assert!(r.windows(2).all(|w| w[1] > w[0]) && *r.last().unwrap() == 2.0);
    }

    #[test]
    fn origin_converges_immediately() {
        let p = LoopParams::new(PartitionRule::Uniform { delta: 0.25 }, 10.0, 2.0);
        let run = run_closed_loop(&chain(), &[0.0; 3], &p).unwrap();
        assert!(run.converged());
        assert_eq!(run.samples, vec![0.0]);
    }

    #[test]
    fn outside_operating_ball_is_rejected() {
        let p = LoopParams::new(PartitionRule::Uniform { delta: 0.25 }, 10.0, 1.0);
        assert!(matches!(
            run_closed_loop(&chain(), &[2.0, 0.0, 0.0], &p),
            Err(SimError::Precondition(_))
        ));
    }

    #[test]
    fn zero_radius_sweep_has_zero_peak() {
        let p = LoopParams::new(PartitionRule::Uniform { delta: 0.25 }, 1.0, 2.0);
        let r = stability_sweep(&chain(), &[0.0], &[0.1], &p, 3, 1, Execution::Sequential);
        assert_eq!(r.rows[0].sup_peak, 0.0);
        assert_eq!(r.epsilon_table, vec![(0.1, None)]);
    }
}

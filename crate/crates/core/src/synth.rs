//! Finite-duration decrease witnesses: `V(x(ε)) < V(x₀)` with
//! `V ≤ 2·V(x₀)` along the way.
//!
//! Bracket signs only order the candidate search. A candidate is accepted
//! when a simulation shows the decrease, and the winner is re-simulated at a
//! tighter tolerance before it is returned.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{classify_point, Classification, ClassifyError, SystemDef, Tag};
use crate::exec::{self, Execution};
use crate::ode::{self, OdeError, OdeOptions};
use crate::simloop::{integrate, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub value: f64,
}

/// Piecewise-constant input, applied segment by segment from `s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
}

impl ControlSchedule {
    /// Segments as `(duration, value)`; durations must be positive and finite.
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self, SynthError> {
        if segments.is_empty() {
            return Err(SynthError::Precondition("schedule has no segments".into()));
        }
        if let Some((d, _)) = segments.iter().find(|(d, _)| !(d.is_finite() && *d > 0.0)) {
            return Err(SynthError::Precondition(format!(
                "segment duration must be positive, got {d}"
            )));
        }
        Ok(Self {
            segments: segments
                .into_iter()
                .map(|(duration, value)| Segment { duration, value })
                .collect(),
        })
    }

    pub fn constant(duration: f64, value: f64) -> Result<Self, SynthError> {
        Self::new(vec![(duration, value)])
    }

    /// `u₂ = −ρu₁` for `t`, then `u₁` for `ρt`.
    pub fn two_phase(t: f64, rho: f64, u1: f64) -> Result<Self, SynthError> {
        if !(rho > 0.0) {
            return Err(SynthError::Precondition(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Self::new(vec![(t, -rho * u1), (rho * t, u1)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Appends a `u = 0` segment so the total reaches `length`.
    pub fn padded_to(&self, length: f64) -> Self {
        let rest = length - self.total_duration();
        let mut out = self.clone();
        if rest > 1e-12 * length.max(1.0) {
            out.segments.push(Segment {
                duration: rest,
                value: 0.0,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    /// Candidate input magnitudes, tried largest first.
    pub u_magnitudes: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Decreasing base time scales. Constant inputs use them as durations
    /// rescaled so the first equals the cap; two-phase schedules use them as
    /// the first-phase length, shrunk when `(1+ρ)t` would exceed the cap.
    pub durations: Vec<f64>,
    pub ode_tol: f64,
    pub max_attempts: usize,
    pub selection: Selection,
    pub execution: Execution,
}

/// How the winner is picked among verified candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// First verified candidate in search order.
    #[default]
    First,
    /// Largest verified decrease over every candidate of the stage.
    BestDecrease,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            u_magnitudes: log_spaced(1e-2, 1e1, 8),
            rhos: vec![0.5, 1.0, 2.0, 4.0],
            durations: (0..14).map(|k| 0.1 * 0.5f64.powi(k)).collect(),
            ode_tol: 1e-10,
            max_attempts: 20_000,
            selection: Selection::First,
            execution: Execution::default(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = |name: &str, xs: &[f64]| {
            if xs.is_empty() || xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                Err(SynthError::Precondition(format!(
                    "{name} must be a nonempty list of positive numbers"
                )))
            } else {
                Ok(())
            }
        };
        positive("u_magnitudes", &self.u_magnitudes)?;
        positive("rhos", &self.rhos)?;
        positive("durations", &self.durations)?;
        if self.durations.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(SynthError::Precondition(
                "durations must be decreasing".into(),
            ));
        }
        if !(self.ode_tol > 0.0) || self.max_attempts == 0 {
            return Err(SynthError::Precondition(
                "ode_tol and max_attempts must be positive".into(),
            ));
        }
        Ok(())
    }

    fn magnitudes_desc(&self) -> Vec<f64> {
        let mut m = self.u_magnitudes.clone();
        m.sort_by(|a, b| b.total_cmp(a));
        m
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Candidate {
    Constant { duration: f64, u: f64 },
    TwoPhase { t: f64, rho: f64, u1: f64 },
}

impl Candidate {
    fn schedule(&self) -> Result<ControlSchedule, SynthError> {
        match *self {
            Candidate::Constant { duration, u } => ControlSchedule::constant(duration, u),
            Candidate::TwoPhase { t, rho, u1 } => ControlSchedule::two_phase(t, rho, u1),
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Constant { duration, u } => write!(f, "u={u:.4e} for {duration:.4e}"),
            Candidate::TwoPhase { t, rho, u1 } => {
                write!(f, "u1={u1:.4e}, rho={rho}, t={t:.4e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub candidate: Candidate,
    /// `V_end − V_start`; NaN when simulation failed.
    pub v_delta: f64,
    pub v_max: f64,
    pub accepted: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFailure {
    pub reason: String,
    pub trace: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("no candidate verified ({} tried): {}", .0.trace.len(), .0.reason)]
    Failed(SynthFailure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreaseWitness {
    pub schedule: ControlSchedule,
    pub candidate: Candidate,
    pub v_start: f64,
    pub v_end: f64,
    pub v_max_along: f64,
    pub classification: Classification,
    /// Length of the search trace up to and including the winner.
    pub attempts: usize,
}

impl DecreaseWitness {
    /// `(u₁, ρ)` for two-phase witnesses.
    pub fn two_phase_parameters(&self) -> Option<(f64, f64)> {
        match self.candidate {
            Candidate::TwoPhase { rho, u1, .. } => Some((u1, rho)),
            Candidate::Constant { .. } => None,
        }
    }
}

struct Search<'a> {
    sys: &'a SystemDef,
    x0: &'a [f64],
    v0: f64,
    margin: f64,
    pad_to: Option<f64>,
    params: &'a SynthParams,
    trace: Vec<Attempt>,
}

struct Verified {
    schedule: ControlSchedule,
    v_end: f64,
    v_max: f64,
}

impl Search<'_> {
    fn simulate(&self, c: &Candidate, tol: f64) -> Result<Verified, String> {
        let mut schedule = c.schedule().map_err(|e| e.to_string())?;
        if let Some(len) = self.pad_to {
            schedule = schedule.padded_to(len);
        }
        let traj = integrate(self.sys, self.x0, &schedule, tol).map_err(|e| e.to_string())?;
        let mut v_max = f64::NEG_INFINITY;
        for s in &traj.states {
            v_max = v_max.max(self.sys.v_at(s).map_err(|e| e.to_string())?);
        }
        let v_end = self.sys.v_at(traj.end()).map_err(|e| e.to_string())?;
        Ok(Verified {
            schedule,
            v_end,
            v_max,
        })
    }

    fn accepts(&self, v: &Verified) -> bool {
        v.v_end < self.v0 - self.margin && v.v_max <= 2.0 * self.v0
    }

    fn attempt(&self, c: &Candidate) -> (Attempt, Option<Verified>) {
        match self.simulate(c, self.params.ode_tol) {
            Ok(v) => {
                let accepted = self.accepts(&v);
                (
                    Attempt {
                        candidate: *c,
                        v_delta: v.v_end - self.v0,
                        v_max: v.v_max,
                        accepted,
                        note: None,
                    },
                    accepted.then_some(v),
                )
            }
            Err(note) => (
                Attempt {
                    candidate: *c,
                    v_delta: f64::NAN,
                    v_max: f64::NAN,
                    accepted: false,
                    note: Some(note),
                },
                None,
            ),
        }
    }

    /// Tries candidates in order, in chunks; returns the first that passes
    /// both the search simulation and the tighter re-simulation.
    fn run(&mut self, candidates: &[Candidate]) -> Option<(Candidate, Verified)> {
        match self.params.selection {
            Selection::First => self.run_first(candidates),
            Selection::BestDecrease => self.run_best(candidates),
        }
    }

    fn run_best(&mut self, candidates: &[Candidate]) -> Option<(Candidate, Verified)> {
        let budget = self.params.max_attempts.saturating_sub(self.trace.len());
        let candidates = &candidates[..candidates.len().min(budget)];
        let results = exec::map(self.params.execution, candidates, |c| self.attempt(c));
        let mut ranked: Vec<(usize, f64)> = results
            .iter()
            .enumerate()
            .filter_map(|(i, (_, v))| v.as_ref().map(|v| (i, v.v_end)))
            .collect();
        // stable sort keeps search order among ties
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut attempts: Vec<Attempt> = results.into_iter().map(|(a, _)| a).collect();
        let mut winner = None;
        for (i, _) in ranked {
            match self.simulate(&candidates[i], self.params.ode_tol * 1e-2) {
                Ok(tight) if self.accepts(&tight) => {
                    winner = Some((candidates[i], tight));
                    break;
                }
                _ => {
                    attempts[i].accepted = false;
                    attempts[i].note = Some("rejected on re-simulation".into());
                }
            }
        }
        self.trace.extend(attempts);
        winner
    }

    fn run_first(&mut self, candidates: &[Candidate]) -> Option<(Candidate, Verified)> {
        const CHUNK: usize = 32;
        for chunk in candidates.chunks(CHUNK) {
            let budget = self.params.max_attempts.saturating_sub(self.trace.len());
            if budget == 0 {
                return None;
            }
            let chunk = &chunk[..chunk.len().min(budget)];
            let results = exec::map(self.params.execution, chunk, |c| self.attempt(c));
            for (c, (mut attempt, verified)) in chunk.iter().zip(results) {
                if verified.is_some() {
                    match self.simulate(c, self.params.ode_tol * 1e-2) {
                        Ok(tight) if self.accepts(&tight) => {
                            self.trace.push(attempt);
                            return Some((*c, tight));
                        }
                        Ok(_) => {
                            attempt.accepted = false;
                            attempt.note = Some("rejected on re-simulation".into());
                        }
                        Err(e) => {
                            attempt.accepted = false;
                            attempt.note = Some(e);
                        }
                    }
                }
                self.trace.push(attempt);
            }
        }
        None
    }

    fn witness(
        &self,
        (candidate, v): (Candidate, Verified),
        classification: Classification,
    ) -> DecreaseWitness {
        DecreaseWitness {
            schedule: v.schedule,
            candidate,
            v_start: self.v0,
            v_end: v.v_end,
            v_max_along: v.v_max,
            classification,
            attempts: self.trace.len(),
        }
    }

    fn fail(self, reason: String) -> SynthError {
        SynthError::Failed(SynthFailure {
            reason,
            trace: self.trace,
        })
    }
}

fn search<'a>(
    sys: &'a SystemDef,
    x0: &'a [f64],
    cap: f64,
    pad: bool,
    params: &'a SynthParams,
) -> Result<Search<'a>, SynthError> {
    params.validate()?;
    if x0.len() != sys.dim() {
        return Err(ClassifyError::Dimension {
            expected: sys.dim(),
            got: x0.len(),
        }
        .into());
    }
    if !(cap.is_finite() && cap > 0.0) {
        return Err(SynthError::Precondition(format!(
            "duration cap must be positive, got {cap}"
        )));
    }
    let v0 = sys
        .v_at(x0)
        .map_err(|e| SynthError::Precondition(e.to_string()))?;
    Ok(Search {
        sys,
        x0,
        v0,
        margin: sys.decrease_margin(x0, v0),
        pad_to: pad.then_some(cap),
        params,
        trace: Vec::new(),
    })
}

fn constant_candidates(
    params: &SynthParams,
    cap: f64,
    signs: &[f64],
    zero_first: bool,
) -> Vec<Candidate> {
    let scale = cap / params.durations[0];
    let mut out = Vec::new();
    for d in &params.durations {
        let duration = d * scale;
        if zero_first {
            out.push(Candidate::Constant { duration, u: 0.0 });
        }
        for k in params.magnitudes_desc() {
            for s in signs {
                out.push(Candidate::Constant { duration, u: s * k });
            }
        }
    }
    out
}

fn two_phase_candidates(
    params: &SynthParams,
    cap: f64,
    signs: &[f64],
    zero_first: bool,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (k, _) in params.durations.iter().enumerate() {
        for &rho in &params.rhos {
            let shrink = (cap / ((1.0 + rho) * params.durations[0])).min(1.0);
            let t = params.durations[k] * shrink;
            if zero_first {
                out.push(Candidate::TwoPhase { t, rho, u1: 0.0 });
            }
            for m in params.magnitudes_desc() {
                for s in signs {
                    out.push(Candidate::TwoPhase { t, rho, u1: s * m });
                }
            }
        }
    }
    out
}

fn sign_or_one(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Single constant input over a duration `≤ cap`: `u = −κ·sign(gV)` for
/// `GNonzero`, `u = 0` for `ArtsteinSontag`.
pub fn synth_constant(
    sys: &SystemDef,
    x0: &[f64],
    cap: f64,
    params: &SynthParams,
) -> Result<DecreaseWitness, SynthError> {
    let class = classify_point(sys, x0)?;
    let mut s = search(sys, x0, cap, false, params)?;
    let candidates = match class.tag {
        Tag::GNonzero => {
            let sign = -sign_or_one(class.diagnostics["gV"]);
            constant_candidates(params, cap, &[sign], false)
        }
        Tag::ArtsteinSontag => {
            let scale = cap / params.durations[0];
            params
                .durations
                .iter()
                .map(|d| Candidate::Constant {
                    duration: d * scale,
                    u: 0.0,
                })
                .collect()
        }
        other => {
            return Err(SynthError::Precondition(format!(
                "constant control needs gV != 0 or fV < 0, point is {other}"
            )))
        }
    };
    match s.run(&candidates) {
        Some(hit) => Ok(s.witness(hit, class)),
        None => Err(s.fail(format!("no constant input verified for {}", class.tag))),
    }
}

/// Signs of `u₁` that the leading term of `m` predicts to decrease `V`,
/// in trial order.
pub fn predicted_signs(class: &Classification) -> Vec<f64> {
    let value = class.certificate().unwrap_or(0.0);
    match class.tag {
        Tag::P2 => {
            // sign(u₁^N · value) < 0 with N odd
            vec![-sign_or_one(value)]
        }
        Tag::P3 => vec![1.0, -1.0],
        Tag::P4 => vec![-sign_or_one(value), sign_or_one(value)],
        _ => vec![1.0, -1.0],
    }
}

/// The two-phase schedule `u₂ = −ρu₁` for `t`, then `u₁` for `ρt`, searched
/// over the predicted sign of `u₁` only.
pub fn synth_two_phase(
    sys: &SystemDef,
    x0: &[f64],
    class: &Classification,
    cap: f64,
    params: &SynthParams,
) -> Result<DecreaseWitness, SynthError> {
    if !class.tag.is_bracket_condition() || class.n == 0 {
        return Err(SynthError::Precondition(format!(
            "two-phase control needs a P1-P4 classification, got {}",
            class.tag
        )));
    }
    let mut s = search(sys, x0, cap, false, params)?;
    let candidates =
        two_phase_candidates(params, cap, &predicted_signs(class), class.tag == Tag::P1);
    match s.run(&candidates) {
        Some(hit) => Ok(s.witness(hit, class.clone())),
        None => Err(s.fail(format!(
            "no two-phase schedule verified for {}/N={}",
            class.tag, class.n
        ))),
    }
}

/// Classifies `x0` and searches for a witness with total duration `≤ cap`.
///
/// The branch matching the classification is tried first. If it fails, the
/// remaining constant and two-phase candidates of both signs are tried
/// (with [`Selection::BestDecrease`], all of them form a single stage). With
/// `pad`, every candidate is zero-padded to `cap` and verified over the
/// whole padded interval.
pub fn synthesize(
    sys: &SystemDef,
    x0: &[f64],
    cap: f64,
    pad: bool,
    params: &SynthParams,
) -> Result<DecreaseWitness, SynthError> {
    let class = classify_point(sys, x0)?;
    let mut s = search(sys, x0, cap, pad, params)?;
    let both = [1.0, -1.0];
    let (primary, fallback) = match class.tag {
        Tag::GNonzero => {
            let sign = -sign_or_one(class.diagnostics["gV"]);
            (
                constant_candidates(params, cap, &[sign], false),
                [
                    constant_candidates(params, cap, &[-sign], false),
                    two_phase_candidates(params, cap, &both, false),
                ]
                .concat(),
            )
        }
        Tag::ArtsteinSontag => (
            constant_candidates(params, cap, &both, true),
            two_phase_candidates(params, cap, &both, false),
        ),
        Tag::P1 | Tag::P2 | Tag::P3 | Tag::P4 => {
            let predicted = predicted_signs(&class);
            let rest: Vec<f64> = both
                .into_iter()
                .filter(|s| !predicted.contains(s))
                .collect();
            (
                two_phase_candidates(params, cap, &predicted, class.tag == Tag::P1),
                [
                    two_phase_candidates(params, cap, &rest, false),
                    constant_candidates(params, cap, &both, true),
                ]
                .concat(),
            )
        }
        Tag::Unclassified => (
            constant_candidates(params, cap, &both, true),
            two_phase_candidates(params, cap, &both, false),
        ),
    };
    let stages = match params.selection {
        Selection::First => vec![primary, fallback],
        Selection::BestDecrease => vec![[primary, fallback].concat()],
    };
    for stage in &stages {
        if let Some(hit) = s.run(stage) {
            return Ok(s.witness(hit, class));
        }
    }
    Err(s.fail(format!("search exhausted for {} at {x0:?}", class.tag)))
}

const GAUSS_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `m(t) − m(0)` for any real `t`, where `m(t) = V(R(t))` and
/// `R(t) = X_{ρt}∘Y_t(x₀)` with `X = f + u₁g`, `Y = f − ρu₁g`.
///
/// The deviation `R(t) − x₀` is integrated directly and `ΔV` is obtained by
/// Gauss–Legendre quadrature of `∇V` along the segment, so tiny increments
/// are not lost to cancellation.
pub fn m_increment(
    sys: &SystemDef,
    x0: &[f64],
    u1: f64,
    rho: f64,
    t: f64,
) -> Result<f64, OdeError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = sys.dim();
    let dir = t.signum();
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-300,
        max_steps: 200_000,
    };
    let mut y = vec![0.0; n];
    let mut buf = vec![0.0; n];
    for (u, duration) in [(-rho * u1, t.abs()), (u1, rho * t.abs())] {
        let rhs = |dy_state: &[f64], dy: &mut [f64]| {
            let mut p = vec![0.0; n];
            for i in 0..n {
                p[i] = x0[i] + dy_state[i];
            }
            sys.rhs_into(&p, u, dy).map_err(|e| e.to_string())?;
            for d in dy.iter_mut() {
                *d *= dir;
            }
            Ok(())
        };
        y = ode::integrate(rhs, &y, duration, &opts, |_, _| {})?;
    }
    let mut acc = 0.0;
    for (node, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
        let s = 0.5 * (1.0 + node);
        let p: Vec<f64> = x0.iter().zip(&y).map(|(a, d)| a + s * d).collect();
        sys.grad_v_into(&p, &mut buf).map_err(|e| OdeError::Rhs {
            t,
            message: e.to_string(),
        })?;
        acc += 0.5 * w * buf.iter().zip(&y).map(|(g, d)| g * d).sum::<f64>();
    }
    Ok(acc)
}

/// `(t, m(t))` over a nonnegative increasing grid.
pub fn m_profile(
    sys: &SystemDef,
    x0: &[f64],
    u1: f64,
    rho: f64,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64)>, SynthError> {
    if t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SynthError::Precondition(
            "t grid must be nonnegative and increasing".into(),
        ));
    }
    let m0 = sys
        .v_at(x0)
        .map_err(|e| SynthError::Precondition(e.to_string()))?;
    t_grid
        .iter()
        .map(|&t| {
            m_increment(sys, x0, u1, rho, t)
                .map(|d| (t, m0 + d))
                .map_err(|e| SynthError::Precondition(format!("m({t}): {e}")))
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central divided difference of order `k` of `m` at 0 with step `h`:
/// `Σ_j (−1)^j C(k,j) m((k/2 − j)h) / h^k`.
pub fn m_derivative_fd(
    sys: &SystemDef,
    x0: &[f64],
    u1: f64,
    rho: f64,
    order: usize,
    h: f64,
) -> Result<f64, OdeError> {
    let mut acc = 0.0;
    for j in 0..=order {
        let t = (order as f64 / 2.0 - j as f64) * h;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(order, j) * m_increment(sys, x0, u1, rho, t)?;
    }
    Ok(acc / h.powi(order as i32))
}

/// Checks a witness against the decrease conditions by re-simulation.
pub fn recheck(
    sys: &SystemDef,
    x0: &[f64],
    w: &DecreaseWitness,
    tol: f64,
) -> Result<(bool, f64, f64), SimError> {
    let traj = integrate(sys, x0, &w.schedule, tol)?;
    let v0 = sys.v_at(x0)?;
    let mut v_max = f64::NEG_INFINITY;
    for s in &traj.states {
        v_max = v_max.max(sys.v_at(s)?);
    }
    let v_end = sys.v_at(traj.end())?;
    Ok((
        v_end < v0 - sys.decrease_margin(x0, v0) && v_max <= 2.0 * v0,
        v_end,
        v_max,
    ))
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

    fn seq() -> SynthParams {
        SynthParams {
            execution: Execution::Sequential,
            ..SynthParams::default()
        }
    }

    #[test]
    fn schedule_shapes() {
        let s = ControlSchedule::two_phase(0.1, 2.0, 3.0).unwrap();
        assert_eq!(
            s.segments()[0],
            Segment {
                duration: 0.1,
                value: -6.0
            }
        );
        assert_eq!(s.segments()[1].duration, 0.2);
        assert!((s.total_duration() - 0.3).abs() < 1e-15);
        assert_eq!(s.padded_to(0.5).segments().len(), 3);
        assert!(ControlSchedule::constant(0.0, 1.0).is_err());
        assert!(ControlSchedule::new(vec![]).is_err());
        assert_eq!(log_spaced(1e-2, 1e1, 8).len(), 8);
    }

    #[test]
    fn constant_input_on_input_channel() {
        let w = synth_constant(&chain(), &[0.0, 0.0, 1.0], 0.25, &seq()).unwrap();
        let u = w.schedule.segments()[0].value;
        assert!(u < 0.0);
        assert!(w.v_end < w.v_start && w.v_max_along <= 2.0 * w.v_start);
        assert!(recheck(&chain(), &[0.0, 0.0, 1.0], &w, 1e-12).unwrap().0);
    }

    #[test]
    fn stable_drift_uses_zero_input() {
        let sys = SystemDef::new(
            VectorField::parse(&["-x1"]).unwrap(),
            VectorField::parse(&["0"]).unwrap(),
            parse("0.5*x1^2", 1).unwrap(),
        )
        .unwrap();
        let w = synth_constant(&sys, &[1.0], 0.5, &seq()).unwrap();
        assert_eq!(w.schedule.segments()[0].value, 0.0);
        assert_eq!(w.classification.tag, Tag::ArtsteinSontag);
    }

    #[test]
    fn wrong_branch_is_a_precondition_error() {
        let r = synth_constant(&chain(), &[1.0, 1.0, 0.0], 0.25, &seq());
        assert!(matches!(r, Err(SynthError::Precondition(_))));
        let c = classify_point(&chain(), &[0.0, 0.0, 1.0]).unwrap();
        let r = synth_two_phase(&chain(), &[0.0, 0.0, 1.0], &c, 0.25, &seq());
        assert!(matches!(r, Err(SynthError::Precondition(_))));
        let c = classify_point(&chain(), &[1.0, 1.0, 0.0]).unwrap();
        let r = synth_two_phase(&chain(), &[1.0, 1.0, 0.0], &c, 0.0, &seq());
        assert!(matches!(r, Err(SynthError::Precondition(_))));
    }

    #[test]
    fn case_points_get_two_phase_witnesses() {
        let sys = chain();
        for x0 in [[1.0, 1.0, 0.0], [1.0, 0.0, 0.0]] {
            let c = classify_point(&sys, &x0).unwrap();
            let w = synth_two_phase(&sys, &x0, &c, 0.25, &seq()).unwrap();
            let (u1, rho) = w.two_phase_parameters().unwrap();
            assert!(u1 > 0.0, "{x0:?}");
            assert!(rho > 0.0);
            assert!(w.v_end < w.v_start && w.v_max_along <= 2.0 * w.v_start);
        }
    }

    #[test]
    fn profile_starts_at_v0() {
        let p = m_profile(&chain(), &[1.0, 1.0, 0.0], 1.0, 1.0, &[0.0, 0.01]).unwrap();
        assert_eq!(p[0], (0.0, 0.75));
        assert!(p[1].1 < 0.75);
        assert!(m_profile(&chain(), &[1.0, 1.0, 0.0], 1.0, 1.0, &[0.1, 0.01]).is_err());
    }

    #[test]
    fn finite_differences_match_closed_forms() {
        // m'(0) = (ρ+1)fV = 0, m''(0) = ρ(ρ+1)u₁[f,g]V = −2 at (1,1,0).
        let sys = chain();
        let x0 = [1.0, 1.0, 0.0];
        let d1 = m_derivative_fd(&sys, &x0, 1.0, 1.0, 1, 1e-4).unwrap();
        let d2 = m_derivative_fd(&sys, &x0, 1.0, 1.0, 2, 1e-4).unwrap();
        assert!(d1.abs() < 1e-6, "{d1}");
        assert!((d2 + 2.0).abs() < 1e-4, "{d2}");
        // m''''(0) = −6x1ρ³(ρ+1)u₁³ = −12 at (1,0,0), ρ = u₁ = 1.
        let d4 = m_derivative_fd(&sys, &[1.0, 0.0, 0.0], 1.0, 1.0, 4, 1e-3).unwrap();
        assert!((d4 + 12.0).abs() < 1e-2, "{d4}");
    }

    #[test]
    fn padding_is_verified_over_the_whole_interval() {
        let sys = chain();
        let w = synthesize(&sys, &[1.0, 1.0, 0.0], 0.25, true, &seq()).unwrap();
        assert!((w.schedule.total_duration() - 0.25).abs() < 1e-12);
    }
}

//! Pointwise certification of the Lie-bracket sufficient conditions and grid
//! scans over regions of the state space.
//!
//! At a nonzero state the classifier reports the first condition that holds,
//! in the fixed order: `(gV)(x) ≠ 0`, `(fV)(x) < 0`, and then, for the
//! smallest `N ≤ N_max` at which every admissible operator product of total
//! order `≤ N` annihilates `V` at `x`, the first of P1–P4.
//!
//! Equalities are tested as `|·| ≤ ε₀(x)` with `ε₀(x) = eps0·(1 + |x|)`;
//! strict inequalities as `value < −ε₀(x)`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::liealg::{
    hall_basis, BracketConvention, BracketWord, CompiledField, LieContext, LieError, VectorField,
};
use crate::symexpr::{gradient, CompiledExpr, EvalError, ScalarField};

pub const DEFAULT_EPS0: f64 = 1e-9;
pub const DEFAULT_N_MAX: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("dimension mismatch: f has {f}, g has {g}, V has {v}")]
    Dimension { f: usize, g: usize, v: usize },
    #[error("f(0) = {0:?} is not zero")]
    DriftNotZeroAtOrigin(Vec<f64>),
    #[error("V(0) = {0} is not zero")]
    LyapunovNotZeroAtOrigin(f64),
    #[error("V is not positive at sampled point {point:?} (V = {value})")]
    NotPositiveDefinite { point: Vec<f64>, value: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("the origin is excluded")]
    ZeroState,
    #[error("state has {got} coordinates, system has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("order {n} exceeds the configured cap {n_max}")]
    OrderAboveCap { n: usize, n_max: usize },
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

type Lazy<T> = Vec<OnceLock<Result<T, LieError>>>;

fn lazy<T>(n: usize) -> Lazy<T> {
    (0..n).map(|_| OnceLock::new()).collect()
}

#[derive(Debug)]
struct Compiled {
    label: String,
    field: ScalarField,
    code: CompiledExpr,
}

impl Compiled {
    fn new(label: String, field: ScalarField) -> Self {
        let code = CompiledExpr::new(field.body());
        Self { label, field, code }
    }
}

/// Symbolic quantities needed at level `N`.
#[derive(Debug)]
struct Level {
    /// Distinct nonzero fields `(Δ1…Δk V)` with total order exactly `N`.
    products: Vec<Compiled>,
    /// Number of products before deduplication.
    raw_count: usize,
    drift: Compiled,
    drift_next: Compiled,
    ad_g: Compiled,
    ad_f: Compiled,
}

/// Affine single-input system with Lyapunov candidate and classifier knobs.
#[derive(Debug)]
pub struct SystemDef {
    lie: LieContext,
    v: ScalarField,
    eps0: f64,
    n_max: usize,
    f_code: CompiledField,
    g_code: CompiledField,
    v_code: CompiledExpr,
    grad_v: Vec<CompiledExpr>,
    gv: Compiled,
    fv: Compiled,
    words: Lazy<Vec<(BracketWord, VectorField)>>,
    levels: Lazy<Level>,
}

impl SystemDef {
    /// Builds and validates the system: `f(0) = 0`, `V(0) = 0` and `V > 0`
    /// on a seeded random sample of the unit sphere.
    pub fn new(f: VectorField, g: VectorField, v: ScalarField) -> Result<Self, SystemError> {
        Self::with_options(
            f,
            g,
            v,
            DEFAULT_EPS0,
            DEFAULT_N_MAX,
            BracketConvention::Standard,
        )
    }

    pub fn with_options(
        f: VectorField,
        g: VectorField,
        v: ScalarField,
        eps0: f64,
        n_max: usize,
        convention: BracketConvention,
    ) -> Result<Self, SystemError> {
        if f.dim() != g.dim() || f.dim() != v.dim() {
            return Err(SystemError::Dimension {
                f: f.dim(),
                g: g.dim(),
                v: v.dim(),
            });
        }
        if !(eps0 > 0.0) {
            return Err(SystemError::Parameter(format!(
                "eps0 must be positive, got {eps0}"
            )));
        }
        if n_max == 0 {
            return Err(SystemError::Parameter("n_max must be at least 1".into()));
        }
        let n = f.dim();
        let origin = vec![0.0; n];
        let f0 = f.eval(&origin)?;
        if f0.iter().any(|c| c.abs() > eps0) {
            return Err(SystemError::DriftNotZeroAtOrigin(f0));
        }
        let v0 = v.eval(&origin)?;
        if v0.abs() > eps0 {
            return Err(SystemError::LyapunovNotZeroAtOrigin(v0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..64 {
            let p = random_on_sphere(&mut rng, n, 1.0);
            let value = v.eval(&p)?;
            if !(value > 0.0) {
                return Err(SystemError::NotPositiveDefinite { point: p, value });
            }
        }

        let lie = LieContext::new(f, g)?.with_convention(convention);
        let gv = lie.derivative(lie.g(), &v)?;
        let fv = lie.derivative(lie.f(), &v)?;
        Ok(Self {
            f_code: lie.f().compile(),
            g_code: lie.g().compile(),
            v_code: CompiledExpr::new(v.body()),
            grad_v: gradient(&v)
                .iter()
                .map(|d| CompiledExpr::new(d.body()))
                .collect(),
            gv: Compiled::new("gV".into(), gv),
            fv: Compiled::new("fV".into(), fv),
            words: lazy(n_max + 1),
            levels: lazy(n_max + 1),
            lie,
            v,
            eps0,
            n_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn f(&self) -> &VectorField {
        self.lie.f()
    }

    pub fn g(&self) -> &VectorField {
        self.lie.g()
    }

    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    pub fn lie(&self) -> &LieContext {
        &self.lie
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Scale-aware zero tolerance `eps0·(1 + |x|)`.
    pub fn zero_tol(&self, x: &[f64]) -> f64 {
        self.eps0 * (1.0 + norm(x))
    }

    /// Minimum decrease of `V` a witness must achieve from `x`, where
    /// `V(x) = v0`: the zero tolerance, shrunk proportionally once `v0 < 1`.
    pub fn decrease_margin(&self, x: &[f64], v0: f64) -> f64 {
        self.zero_tol(x) * v0.clamp(0.0, 1.0)
    }

    pub fn v_at(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.v_code.eval(x)
    }

    pub fn gv_at(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.gv.code.eval(x)
    }

    pub fn fv_at(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.fv.code.eval(x)
    }

    pub fn grad_v_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, d) in out.iter_mut().zip(&self.grad_v) {
            *o = d.eval(x)?;
        }
        Ok(())
    }

    /// `out = f(x) + u·g(x)`.
    pub fn rhs_into(&self, x: &[f64], u: f64, out: &mut [f64]) -> Result<(), EvalError> {
        self.f_code.eval_into(x, out)?;
        if u != 0.0 {
            let mut gx = vec![0.0; out.len()];
            self.g_code.eval_into(x, &mut gx)?;
            for (o, gi) in out.iter_mut().zip(gx) {
                *o += u * gi;
            }
        }
        Ok(())
    }

    fn words_of_order(&self, order: usize) -> Result<&[(BracketWord, VectorField)], LieError> {
        self.words[order]
            .get_or_init(|| {
                hall_basis(order)
                    .into_iter()
                    .filter(|w| w.order() == order && *w != BracketWord::G)
                    .map(|w| self.lie.realize(&w).map(|field| (w, field)))
                    .collect()
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    fn level(&self, n: usize) -> Result<&Level, LieError> {
        self.levels[n]
            .get_or_init(|| self.build_level(n))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn build_level(&self, n: usize) -> Result<Level, LieError> {
        let mut seen = HashSet::new();
        let mut products = Vec::new();
        let mut raw_count = 0;
        for order in 1..=n {
            let words = self.words_of_order(order)?;
            let rest: Vec<(String, &ScalarField)> = if order == n {
                vec![(String::new(), &self.v)]
            } else {
                self.level(n - order)?
                    .products
                    .iter()
                    .map(|c| (c.label.clone(), &c.field))
                    .collect()
            };
            for (w, field) in words {
                for (label, inner) in &rest {
                    raw_count += 1;
                    let out = self.lie.derivative(field, inner)?;
                    if out.body().is_zero() || !seen.insert(out.body().clone()) {
                        continue;
                    }
                    let label = if label.is_empty() {
                        format!("({w})")
                    } else {
                        format!("({w} {}", &label[1..])
                    };
                    products.push(Compiled::new(label, out));
                }
            }
        }
        let drift = self.lie.drift_power(n, &self.v)?;
        let drift_next = self.lie.derivative(self.lie.f(), &drift)?;
        let ad_g = self.lie.derivative(
            &self.lie.iterated(BracketWord::F, BracketWord::G, n)?,
            &self.v,
        )?;
        let ad_f = self.lie.derivative(
            &self.lie.iterated(BracketWord::G, BracketWord::F, n)?,
            &self.v,
        )?;
        Ok(Level {
            products,
            raw_count,
            drift: Compiled::new(format!("f^{n}V"), drift),
            drift_next: Compiled::new(format!("f^{}V", n + 1), drift_next),
            ad_g: Compiled::new(format!("ad_g^{n}(f)V"), ad_g),
            ad_f: Compiled::new(format!("ad_f^{n}(g)V"), ad_f),
        })
    }

    /// Admissible operator products of total order exactly `n`, deduplicated
    /// by canonical form; returns (representative labels, raw count).
    pub fn products_of_order(&self, n: usize) -> Result<(Vec<String>, usize), ClassifyError> {
        self.check_order(n)?;
        let level = self.level(n)?;
        Ok((
            level.products.iter().map(|c| c.label.clone()).collect(),
            level.raw_count,
        ))
    }

    fn check_order(&self, n: usize) -> Result<(), ClassifyError> {
        if n == 0 || n > self.n_max {
            return Err(ClassifyError::OrderAboveCap {
                n,
                n_max: self.n_max,
            });
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ClassifyError> {
        if x.len() != self.dim() {
            return Err(ClassifyError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().all(|c| *c == 0.0) {
            return Err(ClassifyError::ZeroState);
        }
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn random_on_sphere<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    loop {
        // Box–Muller normals give a uniform direction.
        let p: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let r = norm(&p);
        if r > 1e-12 {
            return p.into_iter().map(|c| radius * c / r).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    GNonzero,
    ArtsteinSontag,
    P1,
    P2,
    P3,
    P4,
    Unclassified,
}

impl Tag {
    pub const ALL: [Tag; 7] = [
        Tag::GNonzero,
        Tag::ArtsteinSontag,
        Tag::P1,
        Tag::P2,
        Tag::P3,
        Tag::P4,
        Tag::Unclassified,
    ];

    pub fn is_bracket_condition(self) -> bool {
        matches!(self, Tag::P1 | Tag::P2 | Tag::P3 | Tag::P4)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub tag: Tag,
    /// Witness order `N`; 0 for `GNonzero` and `ArtsteinSontag`.
    pub n: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

impl Classification {
    /// The quantity whose sign or nonvanishing certifies the tag.
    pub fn certificate(&self) -> Option<f64> {
        let key = match self.tag {
            Tag::GNonzero => "gV".to_string(),
            Tag::ArtsteinSontag => "fV".to_string(),
            Tag::P1 => format!("f^{}V", self.n + 1),
            Tag::P2 | Tag::P3 => format!("ad_g^{}(f)V", self.n),
            Tag::P4 => format!("ad_f^{}(g)V", self.n),
            Tag::Unclassified => return None,
        };
        self.diagnostics.get(&key).copied()
    }
}

/// Whether the vanishing conditions hold at `x` for order `n`: `gV`, `f^iV`
/// (`i ≤ n`) and every admissible product of total order `≤ n` vanish.
pub fn check_214(
    sys: &SystemDef,
    x: &[f64],
    n: usize,
) -> Result<(bool, BTreeMap<String, f64>), ClassifyError> {
    sys.check_point(x)?;
    sys.check_order(n)?;
    let tol = sys.zero_tol(x);
    let mut diag = BTreeMap::new();
    let gv = sys.gv_at(x)?;
    diag.insert("gV".to_string(), gv);
    let mut ok = gv.abs() <= tol;
    for k in 1..=n {
        if !ok {
            break;
        }
        ok &= level_vanishes(sys, x, k, tol, &mut diag)?;
    }
    Ok((ok, diag))
}

fn level_vanishes(
    sys: &SystemDef,
    x: &[f64],
    k: usize,
    tol: f64,
    diag: &mut BTreeMap<String, f64>,
) -> Result<bool, ClassifyError> {
    let level = sys.level(k)?;
    let mut worst = 0.0f64;
    for p in &level.products {
        worst = worst.max(p.code.eval(x)?.abs());
    }
    diag.insert(level.drift.label.clone(), level.drift.code.eval(x)?);
    diag.insert(format!("max|products order {k}|"), worst);
    Ok(worst <= tol)
}

/// Classifies a nonzero state.
pub fn classify_point(sys: &SystemDef, x: &[f64]) -> Result<Classification, ClassifyError> {
    sys.check_point(x)?;
    let tol = sys.zero_tol(x);
    let mut diag = BTreeMap::new();
    let gv = sys.gv_at(x)?;
    diag.insert("gV".to_string(), gv);
    if gv.abs() > tol {
        return Ok(Classification {
            tag: Tag::GNonzero,
            n: 0,
            diagnostics: diag,
        });
    }
    let fv = sys.fv_at(x)?;
    diag.insert("fV".to_string(), fv);
    if fv < -tol {
        return Ok(Classification {
            tag: Tag::ArtsteinSontag,
            n: 0,
            diagnostics: diag,
        });
    }
    for n in 1..=sys.n_max() {
        if !level_vanishes(sys, x, n, tol, &mut diag)? {
            break;
        }
        let level = sys.level(n)?;
        let next = level.drift_next.code.eval(x)?;
        let ad_g = level.ad_g.code.eval(x)?;
        let ad_f = level.ad_f.code.eval(x)?;
        diag.insert(level.drift_next.label.clone(), next);
        diag.insert(level.ad_g.label.clone(), ad_g);
        diag.insert(level.ad_f.label.clone(), ad_f);
        let tag = if next < -tol {
            Some(Tag::P1)
        } else if n % 2 == 1 && ad_g.abs() > tol {
            Some(Tag::P2)
        } else if n % 2 == 0 && ad_g < -tol {
            Some(Tag::P3)
        } else if next.abs() <= tol && ad_f.abs() > tol {
            Some(Tag::P4)
        } else {
            None
        };
        if let Some(tag) = tag {
            return Ok(Classification {
                tag,
                n,
                diagnostics: diag,
            });
        }
    }
    Ok(Classification {
        tag: Tag::Unclassified,
        n: 0,
        diagnostics: diag,
    })
}

/// Axis-aligned lattice `lower + k·step` (per axis, inclusive of `upper`
/// up to rounding), minus the open ball `|x| < exclude_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub step: f64,
    pub exclude_radius: f64,
}

impl Grid {
    pub fn cube(dim: usize, half_width: f64, step: f64, exclude_radius: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
            step,
            exclude_radius,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        if self.lower.is_empty() || !(self.step > 0.0) || self.lower.len() != self.upper.len() {
            return Vec::new();
        }
        let counts: Vec<usize> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                if hi < lo {
                    0
                } else {
                    ((hi - lo) / self.step + 1e-9).floor() as usize + 1
                }
            })
            .collect();
        if counts.contains(&0) {
            return Vec::new();
        }
        let total: usize = counts.iter().product();
        let snap = 1e-12 * self.step;
        let radius = self.exclude_radius.max(0.0);
        let mut out = Vec::new();
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            let p: Vec<f64> = idx
                .iter()
                .zip(&self.lower)
                .map(|(&k, lo)| {
                    let c = lo + k as f64 * self.step;
                    if c.abs() < snap {
                        0.0
                    } else {
                        c
                    }
                })
                .collect();
            let r = norm(&p);
            if r > 0.0 && r >= radius {
                out.push(p);
            }
            for (d, i) in idx.iter_mut().enumerate().rev() {
                *i += 1;
                if *i < counts[d] {
                    break;
                }
                *i = 0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointOutcome {
    Classified(Classification),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub x: Vec<f64>,
    pub outcome: PointOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub grid: Grid,
    pub points: Vec<ScanPoint>,
    /// Per-tag counts plus `"Error"` for points that failed to evaluate.
    pub counts: BTreeMap<String, usize>,
    pub unclassified: Vec<Vec<f64>>,
}

impl ScanReport {
    pub fn count(&self, tag: Tag) -> usize {
        self.counts.get(&tag.to_string()).copied().unwrap_or(0)
    }

    pub fn errors(&self) -> usize {
        self.counts.get("Error").copied().unwrap_or(0)
    }

    /// One row per point: coordinates, tag, N, gV, fV, certificate.
    pub fn csv_rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let dim = self.grid.lower.len();
        let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        header.extend(["tag", "N", "gV", "fV", "certificate"].map(String::from));
        let fmt_opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        let rows = self
            .points
            .iter()
            .map(|p| {
                let mut row: Vec<String> = p.x.iter().map(|c| c.to_string()).collect();
                match &p.outcome {
                    PointOutcome::Classified(c) => {
                        row.push(c.tag.to_string());
                        row.push(c.n.to_string());
                        row.push(fmt_opt(c.diagnostics.get("gV").copied()));
                        row.push(fmt_opt(c.diagnostics.get("fV").copied()));
                        row.push(fmt_opt(c.certificate()));
                    }
                    PointOutcome::Error(e) => {
                        row.push("Error".into());
                        row.push(String::new());
                        row.push(String::new());
                        row.push(String::new());
                        row.push(e.clone());
                    }
                }
                row
            })
            .collect();
        (header, rows)
    }
}

/// Classifies every grid point; per-point failures are recorded, not raised.
pub fn scan_region(sys: &SystemDef, grid: &Grid, exec: Execution) -> ScanReport {
    let pts = grid.points();
    let outcomes = exec::map(exec, &pts, |x| match classify_point(sys, x) {
        Ok(c) => PointOutcome::Classified(c),
        Err(e) => PointOutcome::Error(e.to_string()),
    });
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut unclassified = Vec::new();
    let mut points = Vec::with_capacity(pts.len());
    for (x, outcome) in pts.into_iter().zip(outcomes) {
        let key = match &outcome {
            PointOutcome::Classified(c) => {
                if c.tag == Tag::Unclassified {
                    unclassified.push(x.clone());
                }
                c.tag.to_string()
            }
            PointOutcome::Error(_) => "Error".to_string(),
        };
        *counts.entry(key).or_default() += 1;
        points.push(ScanPoint { x, outcome });
    }
    ScanReport {
        grid: grid.clone(),
        points,
        counts,
        unclassified,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary1Check {
    /// Columns `g`, `[f,g]`, `[f,[f,g]]` evaluated at the point.
    pub columns: [[f64; 3]; 3],
    pub determinant: f64,
    pub spans: bool,
    pub gradient_nonzero: bool,
    /// `gV = 0` implies either `fV < 0` or `fV = f²V = f³V = 0`.
    pub implication: bool,
    pub holds: bool,
}

/// Three-dimensional rank / gradient / implication test at `x`.
pub fn check_corollary1(sys: &SystemDef, x: &[f64]) -> Result<Corollary1Check, ClassifyError> {
    if sys.dim() != 3 {
        return Err(ClassifyError::Dimension {
            expected: 3,
            got: sys.dim(),
        });
    }
    sys.check_point(x)?;
    let tol = sys.zero_tol(x);
    let fg = sys.lie.bracket(sys.f(), sys.g())?;
    let ffg = sys.lie.bracket(sys.f(), &fg)?;
    let mut columns = [[0.0; 3]; 3];
    for (col, field) in columns.iter_mut().zip([sys.g(), &fg, &ffg]) {
        let v = field.eval(x)?;
        col.copy_from_slice(&v);
    }
    let [a, b, c] = columns;
    let determinant = a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1])
        + c[0] * (a[1] * b[2] - a[2] * b[1]);
    let mut grad = [0.0; 3];
    sys.grad_v_into(x, &mut grad)?;
    let gradient_nonzero = norm(&grad) > tol;
    let gv = sys.gv_at(x)?;
    let implication = if gv.abs() > tol {
        true
    } else {
        let fv = sys.fv_at(x)?;
        let f2 = sys.lie.drift_power(2, sys.v())?.eval(x)?;
        let f3 = sys.lie.drift_power(3, sys.v())?.eval(x)?;
        fv < -tol || (fv.abs() <= tol && f2.abs() <= tol && f3.abs() <= tol)
    };
    let spans = determinant.abs() > tol;
    Ok(Corollary1Check {
        columns,
        determinant,
        spans,
        gradient_nonzero,
        implication,
        holds: spans && gradient_nonzero && implication,
    })
}

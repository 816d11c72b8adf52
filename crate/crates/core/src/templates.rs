//! Built-in example systems and their closed-form bracket oracles.
//!
//! `corollary2(a, b, L)` is the three-dimensional chain
//! `ẋ1 = a(x)·x3^L, ẋ2 = b(x)·x3, ẋ3 = u` with
//! `V = ½x1² + x2^(L+1)/(L+1) + ½x3²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{SystemDef, SystemError, DEFAULT_EPS0, DEFAULT_N_MAX};
use crate::liealg::{BracketConvention, BracketWord, LieContext, LieError, VectorField};
use crate::symexpr::{parse, partial, CompiledExpr, EvalError, ParseError, ScalarField};

pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("L must be an odd integer >= 3, got {0}")]
    BadExponent(u32),
    #[error("in {what}: {source}")]
    Parse {
        what: &'static str,
        source: ParseError,
    },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Parameters of the cubic-type chain. `a` and `b` are expressions in
/// `x1..x3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary2 {
    pub a: String,
    pub b: String,
    pub l: u32,
}

impl Corollary2 {
    pub fn new(a: impl Into<String>, b: impl Into<String>, l: u32) -> Result<Self, TemplateError> {
        if l < 3 || l.is_multiple_of(2) {
            return Err(TemplateError::BadExponent(l));
        }
        Ok(Self {
            a: a.into(),
            b: b.into(),
            l,
        })
    }

    pub fn f_sources(&self) -> [String; 3] {
        [
            format!("({})*x3^{}", self.a, self.l),
            format!("({})*x3", self.b),
            "0".to_string(),
        ]
    }

    pub fn g_sources(&self) -> [String; 3] {
        ["0".into(), "0".into(), "1".into()]
    }

    pub fn v_source(&self) -> String {
        format!("0.5*x1^2 + x2^{}/{} + 0.5*x3^2", self.l + 1, self.l + 1)
    }

    pub fn fields(&self) -> Result<(VectorField, VectorField, ScalarField), TemplateError> {
        let f = self.f_sources();
        let g = self.g_sources();
        let f = VectorField::parse(&f.each_ref().map(String::as_str))
            .map_err(|source| TemplateError::Parse { what: "f", source })?;
        let g = VectorField::parse(&g.each_ref().map(String::as_str))
            .map_err(|source| TemplateError::Parse { what: "g", source })?;
        let v = parse(&self.v_source(), 3)
            .map_err(|source| TemplateError::Parse { what: "V", source })?;
        Ok((f, g, v))
    }

    pub fn system(&self) -> Result<SystemDef, TemplateError> {
        self.system_with(DEFAULT_EPS0, DEFAULT_N_MAX, BracketConvention::Standard)
    }

    pub fn system_with(
        &self,
        eps0: f64,
        n_max: usize,
        convention: BracketConvention,
    ) -> Result<SystemDef, TemplateError> {
        let (f, g, v) = self.fields()?;
        Ok(SystemDef::with_options(f, g, v, eps0, n_max, convention)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_abs_diff: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub points: usize,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
    /// First failing comparison, as `name at x: symbolic vs closed form`.
    pub first_mismatch: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tally {
    name: String,
    worst: f64,
}

/// Compares the symbolically computed `gV`, `[f,g]`, `[f,g]V` and the
/// iterated brackets `ad_g^k f` (`1 ≤ k ≤ L`) and `ad_f^k g` (`2 ≤ k ≤ L`) on `x3 = 0` against
/// the hand-derived closed forms at `n_points` seeded random points.
pub fn verify_corollary2(
    params: &Corollary2,
    convention: BracketConvention,
    n_points: usize,
    seed: u64,
) -> Result<VerifyReport, TemplateError> {
    let (f, g, v) = params.fields()?;
    let lie = LieContext::new(f, g)?.with_convention(convention);
    let l = params.l as i32;
    let lf = params.l as f64;

    let a = parse(&params.a, 3).map_err(|source| TemplateError::Parse { what: "a", source })?;
    let b = parse(&params.b, 3).map_err(|source| TemplateError::Parse { what: "b", source })?;
    // ∂^j b/∂x3^j for j < L and ∂a/∂x3.
    let mut db = vec![b.clone()];
    for _ in 1..params.l {
        let next = partial(db.last().unwrap(), 3).expect("x3 is in range");
        db.push(next);
    }
    let da = partial(&a, 3).expect("x3 is in range");
    let code = |s: &ScalarField| CompiledExpr::new(s.body());
    let (a_c, da_c) = (code(&a), code(&da));
    let db_c: Vec<CompiledExpr> = db.iter().map(code).collect();

    let gv = lie.derivative(lie.g(), &v)?;
    let fg = lie.bracket(lie.f(), lie.g())?;
    let fgv = lie.derivative(&fg, &v)?;
    let mut ad_g = Vec::new();
    let mut ad_f = Vec::new();
    for k in 1..=params.l as usize {
        ad_g.push(lie.iterated(BracketWord::F, BracketWord::G, k)?);
        ad_f.push(lie.iterated(BracketWord::G, BracketWord::F, k)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: Vec<Tally> = ["gV", "[f,g]", "[f,g]V"]
        .into_iter()
        .chain(std::iter::once("ad_g^k f on x3=0"))
        .chain(std::iter::once("ad_f^k g on x3=0"))
        .chain(std::iter::once("[f,g]V on x3=0"))
        .map(|name| Tally {
            name: name.to_string(),
            worst: 0.0,
        })
        .collect();
    let mut first_mismatch = None;
    let mut note = |idx: usize, x: &[f64], got: f64, want: f64, tallies: &mut Vec<Tally>| {
        let d = (got - want).abs();
        let d = if d.is_nan() { f64::INFINITY } else { d };
        let t = &mut tallies[idx];
        t.worst = t.worst.max(d);
        if d > VERIFY_TOL && first_mismatch.is_none() {
            first_mismatch = Some(format!(
                "{} at {x:?}: symbolic {got} vs closed form {want}",
                t.name
            ));
        }
    };

    for _ in 0..n_points {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let (av, dav) = (a_c.eval(&x)?, da_c.eval(&x)?);
        let (bv, dbv) = (db_c[0].eval(&x)?, partial_at(&db_c, 1, &x)?);

        note(0, &x, gv.eval(&x)?, x3, &mut tallies);

        let want = [
            -dav * x3.powi(l) - lf * av * x3.powi(l - 1),
            -dbv * x3 - bv,
            0.0,
        ];
        for (got, want) in fg.eval(&x)?.into_iter().zip(want) {
            note(1, &x, got, want, &mut tallies);
        }

        let want = -dav * x1 * x3.powi(l)
            - lf * av * x1 * x3.powi(l - 1)
            - dbv * x2.powi(l) * x3
            - bv * x2.powi(l);
        note(2, &x, fgv.eval(&x)?, want, &mut tallies);

        let z = [x1, x2, 0.0];
        let (az, bz) = (a_c.eval(&z)?, db_c[0].eval(&z)?);
        for k in 1..=params.l as usize {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let first = if k == params.l as usize {
                sign * (0..k)
                    .map(|i| (params.l as usize - i) as f64)
                    .product::<f64>()
                    * az
            } else {
                0.0
            };
            let second = sign * k as f64 * db_c[k - 1].eval(&z)?;
            let got = ad_g[k - 1].eval(&z)?;
            for (got, want) in got.into_iter().zip([first, second, 0.0]) {
                note(3, &z, got, want, &mut tallies);
            }
            if k >= 2 {
                for got in ad_f[k - 1].eval(&z)? {
                    note(4, &z, got, 0.0, &mut tallies);
                }
            }
        }
        note(5, &z, fgv.eval(&z)?, -bz * x2.powi(l), &mut tallies);
    }

    let checks = tallies
        .into_iter()
        .map(|t| IdentityCheck {
            passed: t.worst <= VERIFY_TOL,
            name: t.name,
            max_abs_diff: t.worst,
        })
        .collect();
    Ok(VerifyReport {
        points: n_points,
        tolerance: VERIFY_TOL,
        checks,
        first_mismatch,
    })
}

fn partial_at(table: &[CompiledExpr], j: usize, x: &[f64]) -> Result<f64, EvalError> {
    match table.get(j) {
        Some(c) => c.eval(x),
        None => Ok(0.0),
    }
}

//! Reaction terms `Σ(t, x, u)` and their partial derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Env, Expr, ParseError, Var};
use crate::geometry::GeometryState;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),
    #[error("coefficient '{field}': {source}")]
    Parse {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("catalog entry '{entry}' needs '{field}'")]
    Missing {
        entry: &'static str,
        field: &'static str,
    },
    #[error("derivative self-check failed for {derivative} at (t={t}, x={x}, u={u}): symbolic {symbolic}, finite difference {numeric}")]
    SelfCheck {
        derivative: &'static str,
        t: f64,
        x: f64,
        u: f64,
        symbolic: f64,
        numeric: f64,
    },
    #[error("non-finite reaction value at (t={t}, x={x}, u={u})")]
    NonFinite { t: f64, x: f64, u: f64 },
    #[error("positivity violated: u = {0}")]
    Positivity(f64),
}

/// Coefficient block of a catalog entry. Coefficients are expressions in
/// `(t, x)`; exponents are numbers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a: Option<String>,
    pub b: Option<String>,
    pub c: Option<String>,
    pub p: Option<String>,
    pub exp_p: Option<f64>,
    pub exp_q: Option<f64>,
    /// Full formula in `(t, x, u)` for the `custom` entry.
    pub expr: Option<String>,
}

/// Box from which derivative self-check probes are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub u: (f64, f64),
}

impl Default for ProbeBox {
    fn default() -> Self {
        ProbeBox {
            t: (0.0, 1.0),
            x: (0.0, 2.0 * std::f64::consts::PI),
            u: (0.1, 10.0),
        }
    }
}

/// Everything the estimates need about `Σ` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Bundle<T> {
    pub sigma: T,
    /// Radial frame component of `Σ_x`.
    pub sigma_x: T,
    pub sigma_u: T,
    pub sigma_uu: T,
    /// Radial frame component of `Σ_xu`.
    pub sigma_xu: T,
    /// `Δ_f` of `x ↦ Σ(t, x, u)` with `(t, u)` frozen.
    pub lap_f_sigma_x: T,
}

#[derive(Clone, Debug)]
pub struct NonlinearitySpec {
    name: String,
    sigma: Expr,
    s_x: Expr,
    s_u: Expr,
    s_uu: Expr,
    s_xu: Expr,
}

const SELF_CHECK_PROBES: usize = 100;
const SELF_CHECK_SEED: u64 = 0x5eed_cafe;
const SELF_CHECK_RTOL: f64 = 1e-6;

fn coeff(
    src: &Option<String>,
    field: &'static str,
    default: &str,
) -> Result<Expr, NonlinearityError> {
    let text = src.as_deref().unwrap_or(default);
    Expr::parse_with(text, &[Var::T, Var::X]).map_err(|source| NonlinearityError::Parse { field, source })
}

fn u_pow(k: f64) -> Expr {
    expr::pow(Expr::var(Var::U), Expr::constant(k))
}

fn u_log_u() -> Expr {
    expr::mul(Expr::var(Var::U), expr::call(expr::Func::Log, Expr::var(Var::U)))
}

/// Builds a named catalog entry and runs the derivative self-check on the
/// default probe box.
pub fn make_catalog_entry(
    name: &str,
    coefficients: &Coefficients,
) -> Result<NonlinearitySpec, NonlinearityError> {
    make_catalog_entry_in(name, coefficients, &ProbeBox::default())
}

pub fn make_catalog_entry_in(
    name: &str,
    c: &Coefficients,
    probe: &ProbeBox,
) -> Result<NonlinearitySpec, NonlinearityError> {
    use expr::{add, mul};
    let sigma = match name {
        "zero" => Expr::zero(),
        "log" => mul(coeff(&c.p, "p", "1")?, u_log_u()),
        "yamabe" | "lichnerowicz" => {
            let entry = if name == "yamabe" { "yamabe" } else { "lichnerowicz" };
            let ep = c.exp_p.ok_or(NonlinearityError::Missing {
                entry,
                field: "exp_p",
            })?;
            let eq = c.exp_q.unwrap_or(1.0);
            let mut s = add(
                mul(coeff(&c.a, "a", "1")?, u_pow(ep)),
                mul(coeff(&c.b, "b", "0")?, u_pow(eq)),
            );
            if name == "lichnerowicz" {
                s = add(s, mul(coeff(&c.c, "c", "0")?, u_log_u()));
            }
            s
        }
        "exponential" => {
            let e2 = |k: f64| {
                expr::call(
                    expr::Func::Exp,
                    mul(Expr::constant(k), Expr::var(Var::U)),
                )
            };
            add(
                add(
                    mul(coeff(&c.a, "a", "1")?, e2(2.0)),
                    mul(coeff(&c.b, "b", "0")?, e2(-2.0)),
                ),
                coeff(&c.c, "c", "0")?,
            )
        }
        "custom" => {
            let text = c.expr.as_deref().ok_or(NonlinearityError::Missing {
                entry: "custom",
                field: "expr",
            })?;
            Expr::parse(text).map_err(|source| NonlinearityError::Parse {
                field: "expr",
                source,
            })?
        }
        other => return Err(NonlinearityError::UnknownEntry(other.to_string())),
    };
    NonlinearitySpec::from_expr(name, sigma, probe)
}

impl NonlinearitySpec {
    /// Wraps an arbitrary expression, deriving and self-checking it.
    pub fn from_expr(
        name: &str,
        sigma: Expr,
        probe: &ProbeBox,
    ) -> Result<Self, NonlinearityError> {
        let spec = Self::unchecked(name, sigma);
        spec.self_check(probe)?;
        Ok(spec)
    }

    /// Wraps an expression without running the self-check.
    pub fn unchecked(name: &str, sigma: Expr) -> Self {
        let s_x = sigma.diff(Var::X);
        let s_u = sigma.diff(Var::U);
        let s_uu = s_u.diff(Var::U);
        let s_xu = s_x.diff(Var::U);
        NonlinearitySpec {
            name: name.to_string(),
            sigma,
            s_x,
            s_u,
            s_uu,
            s_xu,
        }
    }

    pub fn zero() -> Self {
        Self::unchecked("zero", Expr::zero())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn expr(&self) -> &Expr {
        &self.sigma
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.is_zero()
    }

    pub fn depends_on_x(&self) -> bool {
        self.sigma.depends_on(Var::X)
    }

    pub fn depends_on_t(&self) -> bool {
        self.sigma.depends_on(Var::T)
    }

    /// `Σ + q u`.
    pub fn plus_linear(&self, q: &Expr) -> Self {
        Self::unchecked(
            &format!("{}+qu", self.name),
            expr::add(self.sigma.clone(), expr::mul(q.clone(), Expr::var(Var::U))),
        )
    }

    #[inline]
    pub fn value<T: Real>(&self, t: T, x: T, u: T) -> T {
        self.sigma.eval(&Env { t, x, u })
    }

    #[inline]
    pub fn d_u<T: Real>(&self, t: T, x: T, u: T) -> T {
        self.s_u.eval(&Env { t, x, u })
    }

    #[inline]
    pub fn d_uu<T: Real>(&self, t: T, x: T, u: T) -> T {
        self.s_uu.eval(&Env { t, x, u })
    }

    /// Chart derivative `∂Σ/∂x`.
    #[inline]
    pub fn d_x<T: Real>(&self, t: T, x: T, u: T) -> T {
        self.s_x.eval(&Env { t, x, u })
    }

    #[inline]
    pub fn d_xu<T: Real>(&self, t: T, x: T, u: T) -> T {
        self.s_xu.eval(&Env { t, x, u })
    }

    fn self_check(&self, probe: &ProbeBox) -> Result<(), NonlinearityError> {
        if self.is_zero() {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SELF_CHECK_SEED);
        let draw = |rng: &mut ChaCha8Rng, (a, b): (f64, f64)| {
            if b > a {
                rng.gen_range(a..b)
            } else {
                a
            }
        };
        for _ in 0..SELF_CHECK_PROBES {
            let t = draw(&mut rng, probe.t);
            let x = draw(&mut rng, probe.x);
            let u = draw(&mut rng, probe.u);
            let s = |x: f64, u: f64| self.value(t, x, u);
            let v = s(x, u);
            if !v.is_finite() {
                return Err(NonlinearityError::NonFinite { t, x, u });
            }
            let h1 = 1e-5 * u.abs().max(1.0);
            let h2 = 1e-4 * u.abs().max(1.0);
            let hx = 1e-4 * x.abs().max(1.0);
            let checks: [(&'static str, f64, f64); 3] = [
                (
                    "sigma_u",
                    self.d_u(t, x, u),
                    (s(x, u + h1) - s(x, u - h1)) / (2.0 * h1),
                ),
                (
                    "sigma_uu",
                    self.d_uu(t, x, u),
                    (s(x, u + h2) - 2.0 * v + s(x, u - h2)) / (h2 * h2),
                ),
                (
                    "sigma_xu",
                    self.d_xu(t, x, u),
                    (s(x + hx, u + h2) - s(x + hx, u - h2) - s(x - hx, u + h2)
                        + s(x - hx, u - h2))
                        / (4.0 * hx * h2),
                ),
            ];
            for (derivative, symbolic, numeric) in checks {
                let scale = symbolic.abs().max(numeric.abs()).max(1.0);
                if !symbolic.is_finite() || (symbolic - numeric).abs() > SELF_CHECK_RTOL * scale {
                    return Err(NonlinearityError::SelfCheck {
                        derivative,
                        t,
                        x,
                        u,
                        symbolic,
                        numeric,
                    });
                }
            }
        }
        Ok(())
    }

    /// Gathers `Σ`, its derivatives and `Δ_f Σ^x` at node `i`.
    pub fn evaluate_bundle<T: Real>(
        &self,
        geom: &GeometryState<T>,
        t: T,
        i: usize,
        u: T,
    ) -> Result<Bundle<T>, NonlinearityError> {
        if !(u > T::zero()) {
            return Err(NonlinearityError::Positivity(u.to_f64().unwrap_or(f64::NAN)));
        }
        if self.is_zero() {
            return Ok(Bundle::default());
        }
        let x = geom.coord(i);
        let mut b = Bundle {
            sigma: self.value(t, x, u),
            sigma_u: self.d_u(t, x, u),
            sigma_uu: self.d_uu(t, x, u),
            ..Bundle::default()
        };
        if self.depends_on_x() {
            let s = geom.scale(t);
            b.sigma_x = self.d_x(t, x, u) / s;
            b.sigma_xu = self.d_xu(t, x, u) / s;
            b.lap_f_sigma_x =
                geom.witten_laplacian_at(i, t, |j| self.value(t, geom.coord(j), u));
        }
        Ok(b)
    }
}

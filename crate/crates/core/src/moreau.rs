//! Moreau envelopes and proximity operators.
//!
//! `prox` dispatches between a closed form, an inner gradient descent on the
//! strongly convex prox objective, and a grid argmin. The envelope and the
//! decomposition/gradient residuals follow the index convention
//! `env_gamma f = f box (q/gamma)`, so the decomposition reads
//! `env_{1/gamma} f + env_gamma f* o (gamma Id) = gamma q` and the envelope
//! gradient reads
//! `grad env_{1/gamma} f = Prox_{gamma f*} o (gamma Id) = gamma (Id - Prox_{f/gamma})`,
//! with the `1/gamma` and `gamma` indices exactly as stated — the identities
//! are verified numerically in this form, not silently rewritten.

use thiserror::Error;

use crate::functions::{CatalogFunction, Caps, FunctionError, Kind, ShiftedConjugate};
use crate::oracles::{self, GridSpec, OracleError};
use crate::par;
use crate::vecspace::{half_sq_norm, SpaceError, SymOperator, Vector};

/// Default stopping threshold on the inner-objective gradient norm.
pub const DESCENT_GRAD_TOL: f64 = 1e-10;
/// Default iteration cap for the inner descent.
pub const DESCENT_MAX_ITERS: usize = 10_000;
/// Default grid resolution per axis for the grid prox fallback.
pub const GRID_PROX_POINTS: usize = 2001;

#[derive(Debug, Error)]
pub enum MoreauError {
    #[error("gamma must be positive, got {0}")]
    BadGamma(f64),
    #[error("no usable route: {0}")]
    NoRoute(String),
    #[error("inner descent did not converge after {iterations} iterations (gradient norm {residual:.3e})")]
    DescentDidNotConverge {
        iterations: usize,
        residual: f64,
        last_iterate: Vector,
    },
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// How to compute a prox.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxMethod {
    Closed,
    InnerDescent,
    Grid,
}

/// Tunables for the numeric prox routes. Defaults match the documented
/// contract; tests that need prox values well below the 1e-10 tier tighten
/// `grad_tol` explicitly.
#[derive(Debug, Clone, Copy)]
pub struct ProxOpts {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub grid_points: usize,
}

impl Default for ProxOpts {
    fn default() -> Self {
        ProxOpts {
            grad_tol: DESCENT_GRAD_TOL,
            max_iters: DESCENT_MAX_ITERS,
            grid_points: GRID_PROX_POINTS,
        }
    }
}

/// A fully specified prox computation.
#[derive(Debug, Clone)]
pub struct ProxRequest<'a> {
    pub f: &'a CatalogFunction,
    pub gamma: f64,
    pub x: &'a Vector,
    pub method: ProxMethod,
}

/// `argmin_y f(y) + ||x - y||^2 / (2 gamma)` by the requested route.
pub fn prox(req: &ProxRequest<'_>, opts: &ProxOpts) -> Result<Vector, MoreauError> {
    if !(req.gamma > 0.0) || !req.gamma.is_finite() {
        return Err(MoreauError::BadGamma(req.gamma));
    }
    match req.method {
        ProxMethod::Closed => Ok(req.f.prox_closed(req.gamma, req.x)?),
        ProxMethod::InnerDescent => prox_inner_descent(req.f, req.gamma, req.x, opts),
        ProxMethod::Grid => prox_grid(req.f, req.gamma, req.x, opts).map(|scan| scan.0),
    }
}

/// Prox by the best available route: closed form, then inner descent, then
/// grid.
pub fn prox_auto(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
) -> Result<Vector, MoreauError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(MoreauError::BadGamma(gamma));
    }
    if f.has(Caps::PROX_CLOSED) {
        return Ok(f.prox_closed(gamma, x)?);
    }
    if f.has(Caps::GRAD) && f.lipschitz_beta().is_some() {
        return prox_inner_descent(f, gamma, x, opts);
    }
    if f.dim() <= 3 {
        return prox_grid(f, gamma, x, opts).map(|scan| scan.0);
    }
    Err(MoreauError::NoRoute(format!(
        "{} has no closed prox, no gradient, and dim {} exceeds the grid limit",
        f.name(),
        f.dim()
    )))
}

/// Gradient descent on `g(y) = f(y) + ||x-y||^2/(2 gamma)`, which is
/// `(1/gamma)`-strongly convex with a `(beta + 1/gamma)`-Lipschitz gradient.
/// Step `gamma / (1 + gamma beta)` is the classical `1/L` choice.
fn prox_inner_descent(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
) -> Result<Vector, MoreauError> {
    if !f.has(Caps::GRAD) {
        return Err(MoreauError::NoRoute(format!(
            "{} has no gradient for the inner descent",
            f.name()
        )));
    }
    let beta = f.lipschitz_beta().ok_or_else(|| {
        MoreauError::NoRoute(format!(
            "{} has no known gradient Lipschitz constant",
            f.name()
        ))
    })?;
    let step = gamma / (1.0 + gamma * beta);
    let mut y = x.clone();
    let mut grad_norm = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let g = f.gradient(&y)?.axpy(1.0 / gamma, &y.sub(x));
        grad_norm = g.norm();
        if grad_norm <= opts.grad_tol {
            return Ok(y);
        }
        y = y.axpy(-step, &g);
    }
    Err(MoreauError::DescentDidNotConverge {
        iterations: opts.max_iters,
        residual: grad_norm,
        last_iterate: y,
    })
}

/// Grid argmin of the prox objective over the member's sampling box; the
/// radius is doubled once when the argmin lands on the grid boundary.
fn prox_grid(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
) -> Result<(Vector, f64), MoreauError> {
    if f.dim() > 3 {
        return Err(MoreauError::NoRoute(format!(
            "grid prox limited to dim <= 3, got {}",
            f.dim()
        )));
    }
    let grid = GridSpec::new(f.box_radius(), opts.grid_points, f.dim())?;
    let objective = |y: &Vector| f.value(y) + half_sq_norm(&x.sub(y)) / gamma;
    let scan = oracles::grid_argmin(&objective, &grid);
    if scan.boundary {
        let scan = oracles::grid_argmin(&objective, &grid.doubled());
        return Ok((scan.point, scan.value));
    }
    Ok((scan.point, scan.value))
}

/// `env_gamma f (x) = f(p) + ||x-p||^2/(2 gamma)` with `p` the prox of `x`.
/// Always at most `f(x)` since the envelope is an infimum.
pub fn moreau_env(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
) -> Result<f64, MoreauError> {
    if f.has(Caps::PROX_CLOSED) || (f.has(Caps::GRAD) && f.lipschitz_beta().is_some()) {
        let p = prox_auto(f, gamma, x, opts)?;
        return Ok(f.value(&p) + half_sq_norm(&x.sub(&p)) / gamma);
    }
    // pure grid members: the scan already carries the objective value
    prox_grid(f, gamma, x, opts).map(|(_, value)| value)
}

/// Conjugate values of a dim-1 member tabulated over a `u`-grid, each entry
/// computed by an independent grid supremum over the member's sampling box.
/// Built once and reused by the nested conjugate routes.
pub struct ConjugateTable<'a> {
    f: &'a CatalogFunction,
    u_grid: GridSpec,
    us: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> ConjugateTable<'a> {
    pub fn build(
        f: &'a CatalogFunction,
        u_radius: f64,
        points: usize,
    ) -> Result<Self, MoreauError> {
        if f.dim() != 1 {
            return Err(MoreauError::NoRoute(format!(
                "conjugate table is a dim-1 route, got dim {}",
                f.dim()
            )));
        }
        let u_grid = GridSpec::new(u_radius, points, 1)?;
        let x_grid = GridSpec::new(f.box_radius(), points, 1)?;
        let step = x_grid.step();
        let n = x_grid.total_points();
        // tabulate f once, then each conjugate entry is a flat scan
        let fx: Vec<f64> = (0..n)
            .map(|j| {
                let x = -x_grid.radius() + step * j as f64;
                f.value(&Vector::new(vec![x]).expect("finite"))
            })
            .collect();
        let us: Vec<f64> = (0..u_grid.total_points())
            .map(|i| u_grid.point(i)[0])
            .collect();
        let values = us
            .iter()
            .map(|&u| {
                par::scan_max(n, |j| {
                    let x = -x_grid.radius() + step * j as f64;
                    u * x - fx[j]
                })
                .expect("grid non-empty")
                .1
            })
            .collect();
        Ok(ConjugateTable { f, u_grid, us, values })
    }

    pub fn u_grid(&self) -> &GridSpec {
        &self.u_grid
    }

    pub fn function(&self) -> &CatalogFunction {
        self.f
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// `argmin_u f*(u) + ||z - u||^2/(2 gamma)` over the table.
    pub fn prox_of_conjugate(&self, gamma: f64, z: f64) -> (f64, f64) {
        let (idx, value) = par::scan_min(self.values.len(), |i| {
            let u = self.us[i];
            self.values[i] + (z - u) * (z - u) / (2.0 * gamma)
        })
        .expect("table non-empty");
        (self.us[idx], value)
    }

    /// `h*(w) = sup_u (w u - h(u))` with `h = f* - q/beta` read off the table.
    pub fn shifted_star_value(&self, beta: f64, w: f64) -> f64 {
        par::scan_max(self.values.len(), |i| {
            let u = self.us[i];
            w * u - (self.values[i] - 0.5 * u * u / beta)
        })
        .expect("table non-empty")
        .1
    }
}

/// Builds the tabulated conjugate for members that have no closed conjugate
/// prox (`None` when the closed route exists). Batch callers build this once
/// and pass it to the conjugate-route functions below.
pub fn build_conjugate_table<'a>(
    f: &'a CatalogFunction,
    opts: &ProxOpts,
) -> Result<Option<ConjugateTable<'a>>, MoreauError> {
    if f.conjugate_prox_closed(1.0, &Vector::zeros(f.dim())).is_ok() {
        return Ok(None);
    }
    Ok(Some(conjugate_table_for(f, opts)?))
}

/// `|env_{1/gamma} f (x) + env_gamma f* (gamma x) - gamma q(x)|`.
///
/// The conjugate envelope term goes through the closed conjugate prox when
/// one exists and through the dim-1 tabulated grid otherwise.
pub fn moreau_decomposition_residual(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
) -> Result<f64, MoreauError> {
    moreau_decomposition_residual_with(f, gamma, x, opts, None)
}

/// [`moreau_decomposition_residual`] reusing a prebuilt conjugate table.
pub fn moreau_decomposition_residual_with(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
    table: Option<&ConjugateTable<'_>>,
) -> Result<f64, MoreauError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(MoreauError::BadGamma(gamma));
    }
    let env_f = moreau_env(f, 1.0 / gamma, x, opts)?;
    let gx = x.scale(gamma);
    let env_conj = env_of_conjugate(f, gamma, &gx, opts, table)?;
    Ok((env_f + env_conj - gamma * half_sq_norm(x)).abs())
}

/// `env_gamma f* (z) = inf_u f*(u) + ||z-u||^2/(2 gamma)`.
pub fn env_of_conjugate(
    f: &CatalogFunction,
    gamma: f64,
    z: &Vector,
    opts: &ProxOpts,
    table: Option<&ConjugateTable<'_>>,
) -> Result<f64, MoreauError> {
    match f.conjugate_prox_closed(gamma, z) {
        Ok(p) => {
            let conj_at_p = f.conjugate_value(&p)?;
            debug_assert!(
                conj_at_p.is_finite(),
                "closed conjugate prox must be feasible"
            );
            Ok(conj_at_p + half_sq_norm(&z.sub(&p)) / gamma)
        }
        Err(FunctionError::MissingCapability { .. }) => {
            let owned;
            let t = match table {
                Some(t) => t,
                None => {
                    owned = conjugate_table_for(f, opts)?;
                    &owned
                }
            };
            Ok(t.prox_of_conjugate(gamma, z[0]).1)
        }
        Err(e) => Err(e.into()),
    }
}

/// `Prox_{gamma f*}(z) = argmin_u f*(u) + ||z-u||^2/(2 gamma)`, computed
/// without going through the Moreau decomposition (which is exactly the
/// identity this operator is used to check).
pub fn prox_of_conjugate(
    f: &CatalogFunction,
    gamma: f64,
    z: &Vector,
    opts: &ProxOpts,
    table: Option<&ConjugateTable<'_>>,
) -> Result<Vector, MoreauError> {
    match f.conjugate_prox_closed(gamma, z) {
        Ok(p) => Ok(p),
        Err(FunctionError::MissingCapability { .. }) => {
            let owned;
            let t = match table {
                Some(t) => t,
                None => {
                    owned = conjugate_table_for(f, opts)?;
                    &owned
                }
            };
            let (u, _) = t.prox_of_conjugate(gamma, z[0]);
            Ok(Vector::new(vec![u])?)
        }
        Err(e) => Err(e.into()),
    }
}

fn conjugate_table_for<'a>(
    f: &'a CatalogFunction,
    opts: &ProxOpts,
) -> Result<ConjugateTable<'a>, MoreauError> {
    if f.dim() != 1 {
        return Err(MoreauError::NoRoute(format!(
            "{} has no closed conjugate prox and the tabulated route is dim-1 only",
            f.name()
        )));
    }
    let radius = f.conjugate_domain_radius().unwrap_or_else(|| f.box_radius());
    if radius <= 0.0 {
        return Err(MoreauError::NoRoute(format!(
            "{} has a degenerate conjugate domain",
            f.name()
        )));
    }
    ConjugateTable::build(f, radius, opts.grid_points)
}

/// Residuals of the envelope-gradient identity: `r1` compares a central
/// difference of `env_{1/gamma} f` against `gamma (Id - Prox_{f/gamma})`,
/// `r2` compares the independently computed `Prox_{gamma f*} (gamma x)`
/// against the same map.
pub fn env_gradient_residual(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
) -> Result<(f64, f64), MoreauError> {
    env_gradient_residual_with(f, gamma, x, opts, None)
}

/// [`env_gradient_residual`] reusing a prebuilt conjugate table.
pub fn env_gradient_residual_with(
    f: &CatalogFunction,
    gamma: f64,
    x: &Vector,
    opts: &ProxOpts,
    table: Option<&ConjugateTable<'_>>,
) -> Result<(f64, f64), MoreauError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(MoreauError::BadGamma(gamma));
    }
    // gamma (x - Prox_{f/gamma} x); Prox_{f/gamma} is prox at index 1/gamma
    let p = prox_auto(f, 1.0 / gamma, x, opts)?;
    let reference = x.sub(&p).scale(gamma);

    let envelope = |y: &Vector| {
        moreau_env(f, 1.0 / gamma, y, opts).expect("envelope evaluable near sample point")
    };
    let fd = oracles::fd_gradient(envelope, x, oracles::FD_GRADIENT_STEP)?;
    let r1 = fd.sub(&reference).norm();

    let pc = prox_of_conjugate(f, gamma, &x.scale(gamma), opts, table)?;
    let r2 = pc.sub(&reference).norm();
    Ok((r1, r2))
}

/// Builds the tabulated conjugate once for members that need the dim-1 grid
/// route (`None` for members with closed conjugates). Suites that evaluate
/// the shifted-conjugate operators at many points build this table up front
/// and pass it down.
pub fn build_shifted_table(
    sc: &ShiftedConjugate,
) -> Result<Option<ConjugateTable<'_>>, MoreauError> {
    let f = sc.base();
    if f.has(Caps::CONJ_CLOSED) || f.dim() != 1 {
        return Ok(None);
    }
    let radius = f.conjugate_domain_radius().unwrap_or_else(|| f.box_radius());
    if radius <= 0.0 {
        return Ok(None);
    }
    Ok(Some(ConjugateTable::build(f, radius, sc.grid_points())?))
}

/// `env_beta h (z)` for `h = f* - q/beta`, at the shift's own index.
///
/// For invertible quadratics the inner objective has Hessian `A^{-1}` and a
/// closed minimizer; for l1 the inner problem is linear per component over
/// the conjugate box; dim-1 grid members go through the tabulated conjugate.
pub fn env_of_shifted_conjugate(
    sc: &ShiftedConjugate,
    z: &Vector,
    table: Option<&ConjugateTable<'_>>,
) -> Result<f64, MoreauError> {
    let f = sc.base();
    let beta = sc.beta();
    if matches!(f.kind(), Kind::Huber { .. }) && f.dim() == 1 {
        let owned;
        let t = match table {
            Some(t) => t,
            None => {
                owned = ConjugateTable::build(f, 1.0, sc.grid_points())?;
                &owned
            }
        };
        let (_, value) = par::scan_min(t.len(), |i| {
            let u = t.us[i];
            (t.value_at(i) - 0.5 * u * u / beta) + (z[0] - u) * (z[0] - u) / (2.0 * beta)
        })
        .expect("table non-empty");
        return Ok(value);
    }
    let p = prox_of_shifted_conjugate(sc, z, table)?;
    let h_at_p = sc.value(&p)?;
    if !h_at_p.is_finite() {
        return Err(MoreauError::NoRoute(format!(
            "h is not finite at its own prox point for {}",
            sc.base().name()
        )));
    }
    Ok(h_at_p + half_sq_norm(&z.sub(&p)) / beta)
}

/// `Prox_{beta h}(z)` for `h = f* - q/beta`.
pub fn prox_of_shifted_conjugate(
    sc: &ShiftedConjugate,
    z: &Vector,
    table: Option<&ConjugateTable<'_>>,
) -> Result<Vector, MoreauError> {
    let f = sc.base();
    let beta = sc.beta();
    match f.kind() {
        Kind::Zero => Ok(Vector::zeros(f.dim())),
        Kind::Quadratic {
            a,
            b,
            a_inv: Some(_),
        } => {
            // stationarity (A^-1 - Id/beta) u + c + (u - z)/beta = 0 with
            // c = -A^-1 b collapses to A^-1 u = z/beta + A^-1 b
            Ok(a.apply(&z.scale(1.0 / beta))?.add(b))
        }
        Kind::AbsL1 => {
            // h = iota_box - q/beta; the inner objective is linear per
            // component on [-1, 1], minimized at sign(z_i)
            Ok(Vector::new(
                z.entries()
                    .iter()
                    .map(|&zi| if zi >= 0.0 { 1.0 } else { -1.0 })
                    .collect(),
            )?)
        }
        Kind::Huber { .. } if f.dim() == 1 => {
            let owned;
            let t = match table {
                Some(t) => t,
                None => {
                    owned = ConjugateTable::build(f, 1.0, sc.grid_points())?;
                    &owned
                }
            };
            let (idx, _) = par::scan_min(t.len(), |i| {
                let u = t.us[i];
                let h = t.value_at(i) - 0.5 * u * u / beta;
                h + (z[0] - u) * (z[0] - u) / (2.0 * beta)
            })
            .expect("table non-empty");
            Ok(t.u_grid.point(idx))
        }
        _ => Err(MoreauError::NoRoute(format!(
            "no prox route for h = {}* - q/beta in dim {}",
            f.name(),
            f.dim()
        ))),
    }
}

/// `Prox_{h*/beta}(x)` computed without the Moreau decomposition (using the
/// decomposition here would make the identity it supports circular).
pub fn prox_of_shifted_conjugate_star(
    sc: &ShiftedConjugate,
    x: &Vector,
    table: Option<&ConjugateTable<'_>>,
) -> Result<Vector, MoreauError> {
    let f = sc.base();
    let beta = sc.beta();
    match f.kind() {
        // h = iota_{0}, so h* = 0 and its prox is the identity
        Kind::Zero => Ok(x.clone()),
        Kind::Quadratic {
            b,
            a_inv: Some(inv),
            ..
        } => {
            // h is the quadratic (M, c) with M = A^-1 - Id/beta, c = -A^-1 b
            let m = inv.sub(&SymOperator::identity(f.dim()).scale(1.0 / beta))?;
            let c = inv.apply(b)?.scale(-1.0);
            if f.dim() == 1 {
                let m00 = m.entry(0, 0);
                let tol = 1e-12 * (1.0 + m00.abs());
                if m00 > tol {
                    // h* quadratic with curvature 1/m00: solve
                    // (1/m00)(w - c) + beta (w - x) = 0
                    let w = (c[0] / m00 + beta * x[0]) / (1.0 / m00 + beta);
                    return Ok(Vector::new(vec![w])?);
                }
                if m00 >= -tol {
                    // h affine: h* is the indicator of {c}
                    return Ok(Vector::new(vec![c[0]])?);
                }
                return Err(MoreauError::NoRoute(
                    "h is concave, so h* is improper and has no prox".into(),
                ));
            }
            let (lo, _) = crate::vecspace::extreme_eigenvalues(&m, 1e-12)?;
            if lo <= 1e-10 * (1.0 + m.frobenius_norm()) {
                return Err(MoreauError::NoRoute(format!(
                    "h for {} is degenerate at beta = {beta} (smallest curvature {lo:.3e}); \
                     the h* prox route needs strictly convex h in dim > 1",
                    f.name()
                )));
            }
            // prox of h*/beta: (M^-1 + beta Id) w = M^-1 c + beta x
            let m_inv = m.inverse()?;
            let system = m_inv.add(&SymOperator::identity(f.dim()).scale(beta))?;
            let rhs = m_inv.apply(&c)?.axpy(beta, x);
            Ok(system.solve(&rhs)?)
        }
        Kind::Huber { .. } if f.dim() == 1 => {
            let owned;
            let t = match table {
                Some(t) => t,
                None => {
                    owned = ConjugateTable::build(f, 1.0, sc.grid_points())?;
                    &owned
                }
            };
            // h* is finite everywhere with slope bounded by the conjugate
            // domain radius 1, so the minimizer stays within |x| + 2
            let w_grid = GridSpec::new(x[0].abs() + 2.0, sc.grid_points(), 1)?;
            let (idx, _) = par::scan_min(w_grid.total_points(), |i| {
                let w = w_grid.point(i)[0];
                t.shifted_star_value(beta, w) / beta + 0.5 * (x[0] - w) * (x[0] - w)
            })
            .expect("grid non-empty");
            Ok(w_grid.point(idx))
        }
        _ => Err(MoreauError::NoRoute(format!(
            "no independent prox route for h* of {} in dim {}",
            f.name(),
            f.dim()
        ))),
    }
}

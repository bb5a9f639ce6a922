//! The convex-function catalog.
//!
//! Each member bundles evaluation, derivatives, closed-form prox, and
//! closed-form conjugate where available, with capability flags so the
//! verification suites know what can be checked directly versus only through
//! a brute-force oracle. The catalog is deliberately small: a quadratic
//! family, the l1 norm, the Huber family, the zero function, and conjugates
//! shifted by `q/beta`.

use bitflags::bitflags;
use thiserror::Error;

use crate::oracles::{self, GridSpec, OracleError};
use crate::vecspace::{
    half_sq_norm, inner, op_norm, psd_check, SpaceError, SymOperator, Vector, POWER_ITERATION_TOL,
};

bitflags! {
    /// Capability flags for catalog members.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct Caps: u8 {
        const VALUE             = 1 << 0;
        const GRAD              = 1 << 1;
        const HESSIAN           = 1 << 2;
        const PROX_CLOSED       = 1 << 3;
        const CONJ_CLOSED       = 1 << 4;
        const SMOOTH_EVERYWHERE = 1 << 5;
    }
}

#[derive(Debug, Error)]
pub enum FunctionError {
    #[error("matrix is not positive semidefinite; the quadratic would not be convex")]
    NotPsd,
    #[error("{function} does not provide {capability}")]
    MissingCapability {
        function: String,
        capability: &'static str,
    },
    #[error("grid fallback requires dim <= {limit}, got {dim}")]
    GridUnavailable { dim: usize, limit: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Closed-form family backing a [`CatalogFunction`].
#[derive(Debug, Clone)]
pub enum Kind {
    Zero,
    Quadratic {
        a: SymOperator,
        b: Vector,
        /// Present iff `a` is invertible; enables the closed conjugate.
        a_inv: Option<SymOperator>,
    },
    AbsL1,
    Huber {
        delta: f64,
    },
}

/// A convex function with capability flags and sampling metadata.
#[derive(Debug, Clone)]
pub struct CatalogFunction {
    name: String,
    dim: usize,
    caps: Caps,
    lipschitz_beta: Option<f64>,
    box_radius: f64,
    kind: Kind,
}

impl CatalogFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn has(&self, cap: Caps) -> bool {
        self.caps.contains(cap)
    }

    /// Known Lipschitz constant of the gradient, when one exists.
    pub fn lipschitz_beta(&self) -> Option<f64> {
        self.lipschitz_beta
    }

    /// Recommended sampling/oracle box `[-R, R]^dim`.
    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    fn check_dim(&self, x: &Vector) -> Result<(), FunctionError> {
        if x.dim() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                left: self.dim,
                right: x.dim(),
            }
            .into());
        }
        Ok(())
    }

    fn missing(&self, capability: &'static str) -> FunctionError {
        FunctionError::MissingCapability {
            function: self.name.clone(),
            capability,
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        assert_eq!(x.dim(), self.dim, "dimension mismatch in value()");
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic { a, b, .. } => {
                let ax = a.apply(x).expect("dims");
                0.5 * inner(x, &ax).expect("dims") + inner(b, x).expect("dims")
            }
            Kind::AbsL1 => x.entries().iter().map(|a| a.abs()).sum(),
            Kind::Huber { delta } => x
                .entries()
                .iter()
                .map(|&a| {
                    if a.abs() <= *delta {
                        0.5 * a * a / delta
                    } else {
                        a.abs() - 0.5 * delta
                    }
                })
                .sum(),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector, FunctionError> {
        self.check_dim(x)?;
        if !self.has(Caps::GRAD) {
            return Err(self.missing("GRAD"));
        }
        Ok(match &self.kind {
            Kind::Zero => Vector::zeros(self.dim),
            Kind::Quadratic { a, b, .. } => a.apply(x)?.add(b),
            Kind::Huber { delta } => Vector::new(
                x.entries()
                    .iter()
                    .map(|&a| {
                        if a.abs() <= *delta {
                            a / delta
                        } else {
                            a.signum()
                        }
                    })
                    .collect(),
            )?,
            Kind::AbsL1 => unreachable!("l1 never advertises GRAD"),
        })
    }

    pub fn hessian_at(&self, x: &Vector) -> Result<SymOperator, FunctionError> {
        self.check_dim(x)?;
        if !self.has(Caps::HESSIAN) {
            return Err(self.missing("HESSIAN"));
        }
        Ok(match &self.kind {
            Kind::Zero => SymOperator::zero(self.dim),
            Kind::Quadratic { a, .. } => a.clone(),
            Kind::Huber { delta } => {
                // kink points take the quadratic branch
                let diag: Vec<f64> = x
                    .entries()
                    .iter()
                    .map(|&a| if a.abs() <= *delta { 1.0 / delta } else { 0.0 })
                    .collect();
                SymOperator::diagonal(&diag)?
            }
            Kind::AbsL1 => unreachable!("l1 never advertises HESSIAN"),
        })
    }

    /// Closed-form `argmin_y f(y) + ||x - y||^2 / (2 gamma)`.
    pub fn prox_closed(&self, gamma: f64, x: &Vector) -> Result<Vector, FunctionError> {
        self.check_dim(x)?;
        if !(gamma > 0.0) {
            return Err(FunctionError::BadParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !self.has(Caps::PROX_CLOSED) {
            return Err(self.missing("PROX_CLOSED"));
        }
        Ok(match &self.kind {
            Kind::Zero => x.clone(),
            Kind::Quadratic { a, b, .. } => {
                // (Id + gamma A) y = x - gamma b
                let system = SymOperator::identity(self.dim).add(&a.scale(gamma))?;
                system.solve(&x.axpy(-gamma, b))?
            }
            Kind::AbsL1 => Vector::new(
                x.entries()
                    .iter()
                    .map(|&a| a.signum() * (a.abs() - gamma).max(0.0))
                    .collect(),
            )?,
            Kind::Huber { .. } => unreachable!("huber never advertises PROX_CLOSED"),
        })
    }

    /// Closed-form conjugate value; may be `+inf` for indicator conjugates.
    pub fn conjugate_value(&self, u: &Vector) -> Result<f64, FunctionError> {
        self.check_dim(u)?;
        if !self.has(Caps::CONJ_CLOSED) {
            return Err(self.missing("CONJ_CLOSED"));
        }
        Ok(match &self.kind {
            Kind::Zero => {
                if u.entries().iter().all(|&a| a == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Quadratic { b, a_inv, .. } => {
                let inv = a_inv.as_ref().expect("CONJ_CLOSED implies invertible");
                let shifted = u.sub(b);
                0.5 * inner(&shifted, &inv.apply(&shifted)?)?
            }
            Kind::AbsL1 => {
                if u.entries().iter().all(|&a| a.abs() <= 1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Kind::Huber { .. } => unreachable!("huber never advertises CONJ_CLOSED"),
        })
    }

    /// Gradient of the conjugate, where the conjugate is smooth on all of H
    /// (invertible quadratics only).
    pub fn conjugate_gradient(&self, u: &Vector) -> Result<Vector, FunctionError> {
        self.check_dim(u)?;
        match &self.kind {
            Kind::Quadratic {
                b,
                a_inv: Some(inv),
                ..
            } => Ok(inv.apply(&u.sub(b))?),
            _ => Err(self.missing("differentiable conjugate")),
        }
    }

    /// Closed-form prox of the conjugate, `argmin_u f*(u) + ||z-u||^2/(2 gamma)`.
    ///
    /// Available exactly where the conjugate itself has a usable closed form:
    /// invertible quadratics (conjugate is a quadratic), l1 (conjugate is the
    /// box indicator, prox is the projection), and zero (conjugate is the
    /// indicator of the origin).
    pub fn conjugate_prox_closed(&self, gamma: f64, z: &Vector) -> Result<Vector, FunctionError> {
        self.check_dim(z)?;
        if !(gamma > 0.0) {
            return Err(FunctionError::BadParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        match &self.kind {
            Kind::Zero => Ok(Vector::zeros(self.dim)),
            Kind::Quadratic {
                b,
                a_inv: Some(inv),
                ..
            } => {
                // (Id + gamma A^-1) u = z + gamma A^-1 b
                let system = SymOperator::identity(self.dim).add(&inv.scale(gamma))?;
                let rhs = z.add(&inv.apply(b)?.scale(gamma));
                Ok(system.solve(&rhs)?)
            }
            Kind::AbsL1 => Ok(Vector::new(
                z.entries().iter().map(|&a| a.clamp(-1.0, 1.0)).collect(),
            )?),
            _ => Err(self.missing("closed conjugate prox")),
        }
    }

    /// Radius of a box on which the conjugate is finite, when the conjugate's
    /// domain is bounded. `None` means the conjugate is finite everywhere.
    pub fn conjugate_domain_radius(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero => Some(0.0),
            Kind::Quadratic { a_inv: Some(_), .. } => None,
            // singular quadratic: conjugate finite only on an affine subspace
            Kind::Quadratic { .. } => Some(0.0),
            Kind::AbsL1 | Kind::Huber { .. } => Some(1.0),
        }
    }

    /// Sampling radius for checks carried out in conjugate space: strictly
    /// inside the conjugate's domain when that domain is bounded.
    pub fn conjugate_sample_radius(&self) -> f64 {
        match self.conjugate_domain_radius() {
            None => self.box_radius,
            Some(r) if r > 0.0 => 0.95 * r,
            Some(_) => 0.0,
        }
    }
}

/// `f(x) = <x, Ax>/2 + <b, x>` for PSD `A`.
pub fn make_quadratic(a: SymOperator, b: Vector) -> Result<CatalogFunction, FunctionError> {
    if b.dim() != a.dim() {
        return Err(SpaceError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        }
        .into());
    }
    if !psd_check(&a, 1e-9)? {
        return Err(FunctionError::NotPsd);
    }
    let beta = op_norm(&a, POWER_ITERATION_TOL)?;
    let a_inv = match a.inverse() {
        Ok(inv) => Some(inv),
        Err(SpaceError::Singular) => None,
        Err(e) => return Err(e.into()),
    };
    let mut caps =
        Caps::VALUE | Caps::GRAD | Caps::HESSIAN | Caps::PROX_CLOSED | Caps::SMOOTH_EVERYWHERE;
    if a_inv.is_some() {
        caps |= Caps::CONJ_CLOSED;
    }
    let dim = a.dim();
    let is_diag = (0..dim).all(|i| (0..dim).all(|j| i == j || a.entry(i, j) == 0.0));
    let mut name = if is_diag {
        let diag: Vec<String> = (0..dim).map(|i| format!("{}", a.entry(i, i))).collect();
        format!("quadratic:d={dim},diag={}", diag.join(";"))
    } else {
        format!("quadratic:d={dim},dense")
    };
    if b.entries().iter().any(|&e| e != 0.0) {
        let bs: Vec<String> = b.entries().iter().map(|e| format!("{e}")).collect();
        name.push_str(&format!(",b={}", bs.join(";")));
    }
    Ok(CatalogFunction {
        name,
        dim,
        caps,
        lipschitz_beta: Some(beta),
        box_radius: 3.0,
        kind: Kind::Quadratic { a, b, a_inv },
    })
}

/// `f(x) = sum |x_i|`: prox is the componentwise soft threshold, conjugate is
/// the indicator of the unit box. No gradient.
pub fn make_abs_l1(dim: usize) -> Result<CatalogFunction, FunctionError> {
    if dim == 0 {
        return Err(FunctionError::BadParameter("dim must be >= 1".into()));
    }
    Ok(CatalogFunction {
        name: format!("l1:d={dim}"),
        dim,
        caps: Caps::VALUE | Caps::PROX_CLOSED | Caps::CONJ_CLOSED,
        lipschitz_beta: None,
        box_radius: 5.0,
        kind: Kind::AbsL1,
    })
}

/// Componentwise Huber: `x^2/(2 delta)` inside `[-delta, delta]`, linear with
/// slope 1 outside. Smooth with gradient Lipschitz constant `1/delta`.
pub fn make_huber(delta: f64, dim: usize) -> Result<CatalogFunction, FunctionError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(FunctionError::BadParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if dim == 0 {
        return Err(FunctionError::BadParameter("dim must be >= 1".into()));
    }
    Ok(CatalogFunction {
        name: format!("huber:delta={delta},d={dim}"),
        dim,
        caps: Caps::VALUE | Caps::GRAD | Caps::HESSIAN | Caps::SMOOTH_EVERYWHERE,
        lipschitz_beta: Some(1.0 / delta),
        box_radius: delta + 2.0,
        kind: Kind::Huber { delta },
    })
}

/// The zero function: prox is the identity, conjugate is the indicator of
/// the origin.
pub fn make_zero(dim: usize) -> Result<CatalogFunction, FunctionError> {
    if dim == 0 {
        return Err(FunctionError::BadParameter("dim must be >= 1".into()));
    }
    Ok(CatalogFunction {
        name: format!("zero:d={dim}"),
        dim,
        caps: Caps::VALUE
            | Caps::GRAD
            | Caps::HESSIAN
            | Caps::PROX_CLOSED
            | Caps::CONJ_CLOSED
            | Caps::SMOOTH_EVERYWHERE,
        lipschitz_beta: Some(0.0),
        box_radius: 3.0,
        kind: Kind::Zero,
    })
}

/// Default per-axis grid resolution for conjugate scans by dimension.
pub fn default_conjugate_grid_points(dim: usize) -> usize {
    match dim {
        1 => 2001,
        2 => 201,
        _ => 81,
    }
}

/// `h = f* - q/beta`, evaluated through the closed conjugate when available
/// and through the grid conjugate (dim <= 2) otherwise.
///
/// Convexity of `h` is a property to be checked by the suites, never assumed.
#[derive(Debug, Clone)]
pub struct ShiftedConjugate {
    base: CatalogFunction,
    beta: f64,
    grid_points: usize,
}

impl ShiftedConjugate {
    pub fn base(&self) -> &CatalogFunction {
        &self.base
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn with_grid_points(mut self, points: usize) -> Self {
        self.grid_points = points;
        self
    }

    /// Conjugate value of the base, routed closed-form or grid.
    ///
    /// Points outside a known bounded conjugate domain evaluate to `+inf`.
    /// Inside it, grid values are kept even when the argmax sits on the scan
    /// boundary (the supremum can be approached asymptotically there, as for
    /// Huber at `|u| = 1`). For members whose conjugate domain is unknown, a
    /// boundary argmax marks the supremum untrusted and maps to `+inf`.
    pub fn base_conjugate_value(&self, u: &Vector) -> Result<f64, FunctionError> {
        if self.base.has(Caps::CONJ_CLOSED) {
            return self.base.conjugate_value(u);
        }
        let domain_radius = self.base.conjugate_domain_radius();
        if let Some(r) = domain_radius {
            if u.entries().iter().any(|&e| e.abs() > r) {
                return Ok(f64::INFINITY);
            }
        }
        let grid = GridSpec::new(self.base.box_radius(), self.grid_points, self.base.dim())?;
        let scan = oracles::grid_conjugate(|x| self.base.value(x), u, &grid)?;
        Ok(if scan.boundary && domain_radius.is_none() {
            f64::INFINITY
        } else {
            scan.value
        })
    }

    /// `h(u) = f*(u) - q(u)/beta`.
    pub fn value(&self, u: &Vector) -> Result<f64, FunctionError> {
        let conj = self.base_conjugate_value(u)?;
        if conj == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok(conj - half_sq_norm(u) / self.beta)
    }
}

/// See [`ShiftedConjugate`].
pub fn make_shifted_conjugate(
    f: &CatalogFunction,
    beta: f64,
) -> Result<ShiftedConjugate, FunctionError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(FunctionError::BadParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if !f.has(Caps::CONJ_CLOSED) && f.dim() > 2 {
        return Err(FunctionError::GridUnavailable {
            dim: f.dim(),
            limit: 2,
        });
    }
    Ok(ShiftedConjugate {
        grid_points: default_conjugate_grid_points(f.dim()),
        base: f.clone(),
        beta,
    })
}

//! Brute-force reference computations.
//!
//! Everything in this module is an independent check on the closed forms
//! elsewhere in the crate: grid suprema for conjugates, grid argmins for
//! proximity operators, central differences for derivatives, and midpoint
//! sampling for convexity. None of it calls back into the closed-form paths.

use thiserror::Error;

use crate::par;
use crate::vecspace::{SpaceError, SymOperator, Vector};

/// Default central-difference step for gradients.
pub const FD_GRADIENT_STEP: f64 = 1e-5;
/// Default central-difference step for Hessians.
pub const FD_HESSIAN_STEP: f64 = 1e-3;
/// Midpoint convexity slack.
pub const MIDPOINT_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid spec invalid: {0}")]
    BadGrid(String),
    #[error("grid oracle limited to dim <= 3, got {0}")]
    GridDimTooLarge(usize),
    #[error("non-finite evaluation at a stencil point")]
    NonFiniteEvaluation,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A symmetric grid over `[-radius, radius]^dim` containing the origin.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    radius: f64,
    points_per_axis: usize,
    dim: usize,
}

impl GridSpec {
    pub fn new(radius: f64, points_per_axis: usize, dim: usize) -> Result<Self, OracleError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(OracleError::BadGrid(format!("radius {radius} must be positive")));
        }
        if points_per_axis < 3 || points_per_axis % 2 == 0 {
            return Err(OracleError::BadGrid(format!(
                "points_per_axis {points_per_axis} must be odd and >= 3"
            )));
        }
        if dim == 0 || dim > 3 {
            return Err(OracleError::GridDimTooLarge(dim));
        }
        Ok(GridSpec {
            radius,
            points_per_axis,
            dim,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn step(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1) as f64
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Decodes a linear index (axis 0 slowest) into a grid point.
    pub fn point(&self, linear: usize) -> Vector {
        let n = self.points_per_axis;
        let step = self.step();
        let mut rem = linear;
        let mut coords = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            let k = rem % n;
            rem /= n;
            coords[axis] = -self.radius + step * k as f64;
        }
        Vector::new(coords).expect("grid coordinates are finite")
    }

    /// True when any coordinate of the linear index sits on the grid edge.
    pub fn on_boundary(&self, linear: usize) -> bool {
        let n = self.points_per_axis;
        let mut rem = linear;
        for _ in 0..self.dim {
            let k = rem % n;
            rem /= n;
            if k == 0 || k == n - 1 {
                return true;
            }
        }
        false
    }

    /// Same grid with twice the radius (same point count).
    pub fn doubled(&self) -> GridSpec {
        GridSpec {
            radius: 2.0 * self.radius,
            ..*self
        }
    }
}

/// Result of a grid extremum scan.
#[derive(Debug, Clone)]
pub struct GridScan {
    pub point: Vector,
    pub value: f64,
    pub boundary: bool,
}

/// `max_x <x, u> - f(x)` over the grid.
///
/// `boundary` is set when the argmax lies on the grid edge, signalling that
/// the supremum may be truncated (or infinite, as for `|u| > 1` against the
/// absolute-value function).
pub fn grid_conjugate<F>(f: F, u: &Vector, grid: &GridSpec) -> Result<GridScan, OracleError>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    if u.dim() != grid.dim {
        return Err(SpaceError::DimensionMismatch {
            left: u.dim(),
            right: grid.dim,
        }
        .into());
    }
    let (idx, value) = par::scan_max(grid.total_points(), |i| {
        let x = grid.point(i);
        crate::vecspace::inner(&x, u).expect("dims match") - f(&x)
    })
    .expect("grid is non-empty");
    Ok(GridScan {
        point: grid.point(idx),
        value,
        boundary: grid.on_boundary(idx),
    })
}

/// `min_x obj(x)` over the grid, ties broken by smallest linear index.
pub fn grid_argmin<F>(obj: F, grid: &GridSpec) -> GridScan
where
    F: Fn(&Vector) -> f64 + Sync,
{
    let (idx, value) = par::scan_min(grid.total_points(), |i| obj(&grid.point(i)))
        .expect("grid is non-empty");
    GridScan {
        point: grid.point(idx),
        value,
        boundary: grid.on_boundary(idx),
    }
}

/// Central-difference gradient, `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn fd_gradient<F>(f: F, x: &Vector, h: f64) -> Result<Vector, OracleError>
where
    F: Fn(&Vector) -> f64,
{
    assert!(h > 0.0);
    let d = x.dim();
    let mut g = vec![0.0; d];
    let mut coords = x.entries().to_vec();
    for i in 0..d {
        let orig = coords[i];
        coords[i] = orig + h;
        let plus = f(&Vector::new(coords.clone()).map_err(|_| OracleError::NonFiniteEvaluation)?);
        coords[i] = orig - h;
        let minus = f(&Vector::new(coords.clone()).map_err(|_| OracleError::NonFiniteEvaluation)?);
        coords[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(OracleError::NonFiniteEvaluation);
        }
        g[i] = (plus - minus) / (2.0 * h);
    }
    Ok(Vector::new(g).map_err(|_| OracleError::NonFiniteEvaluation)?)
}

/// Central second-difference Hessian, symmetrized.
#[derive(Debug, Clone)]
pub struct FdHessian {
    pub operator: SymOperator,
    /// Worst `|H_ij - H_ji|` seen before symmetrization; values above 1e-6
    /// should be surfaced as a warning by callers.
    pub asymmetry_defect: f64,
}

pub fn fd_hessian<F>(f: F, x: &Vector, h: f64) -> Result<FdHessian, OracleError>
where
    F: Fn(&Vector) -> f64,
{
    assert!(h > 0.0);
    let d = x.dim();
    let eval = |coords: &[f64]| -> Result<f64, OracleError> {
        let v = Vector::new(coords.to_vec()).map_err(|_| OracleError::NonFiniteEvaluation)?;
        let y = f(&v);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(OracleError::NonFiniteEvaluation)
        }
    };
    let base = eval(x.entries())?;
    let mut raw = vec![0.0; d * d];
    let mut coords = x.entries().to_vec();
    for i in 0..d {
        // diagonal: (f(x+h) - 2f(x) + f(x-h)) / h^2
        let orig = coords[i];
        coords[i] = orig + h;
        let plus = eval(&coords)?;
        coords[i] = orig - h;
        let minus = eval(&coords)?;
        coords[i] = orig;
        raw[i * d + i] = (plus - 2.0 * base + minus) / (h * h);
        for j in i + 1..d {
            let oi = coords[i];
            let oj = coords[j];
            coords[i] = oi + h;
            coords[j] = oj + h;
            let pp = eval(&coords)?;
            coords[j] = oj - h;
            let pm = eval(&coords)?;
            coords[i] = oi - h;
            let mm = eval(&coords)?;
            coords[j] = oj + h;
            let mp = eval(&coords)?;
            coords[i] = oi;
            coords[j] = oj;
            let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
            raw[i * d + j] = mixed;
            raw[j * d + i] = mixed;
        }
    }
    // The cross stencil is symmetric by construction; the defect we report is
    // between the two one-sided mixed estimates.
    let mut defect = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            defect = defect.max((raw[i * d + j] - raw[j * d + i]).abs());
        }
    }
    Ok(FdHessian {
        operator: SymOperator::from_raw(raw, d)?,
        asymmetry_defect: defect,
    })
}

/// Seeded point source with a pinned generator.
///
/// The generator is the 64-bit linear congruential recurrence
/// `state <- state * 6364136223846793005 + 1442695040888963407`; each
/// coordinate maps the top 53 bits to `[0, 1)` and then affinely onto
/// `[-radius, radius)`. Identical `(seed, count, radius)` reproduce the
/// identical sequence on every platform; this is part of the report contract.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
    pub radius: f64,
}

impl SampleSpec {
    pub fn new(seed: u64, count: usize, radius: f64) -> Self {
        assert!(count > 0 && radius > 0.0);
        SampleSpec { seed, count, radius }
    }

    pub fn with_radius(&self, radius: f64) -> SampleSpec {
        SampleSpec { radius, ..*self }
    }

    pub fn with_count(&self, count: usize) -> SampleSpec {
        SampleSpec { count, ..*self }
    }

    fn rng(&self) -> Lcg64 {
        Lcg64::new(self.seed)
    }

    /// `count` points in `[-radius, radius)^dim`.
    pub fn points(&self, dim: usize) -> Vec<Vector> {
        let mut rng = self.rng();
        (0..self.count).map(|_| rng.vector(dim, self.radius)).collect()
    }

    /// `count` pairs of points.
    pub fn pairs(&self, dim: usize) -> Vec<(Vector, Vector)> {
        let mut rng = self.rng();
        (0..self.count)
            .map(|_| (rng.vector(dim, self.radius), rng.vector(dim, self.radius)))
            .collect()
    }
}

/// The pinned 64-bit LCG (Knuth's MMIX multiplier).
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        // one warm-up step so nearby seeds decorrelate immediately
        let mut s = Lcg64 { state: seed };
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.state
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-radius, radius)`.
    pub fn next_coord(&mut self, radius: f64) -> f64 {
        radius * (2.0 * self.next_unit() - 1.0)
    }

    pub fn vector(&mut self, dim: usize, radius: f64) -> Vector {
        Vector::new((0..dim).map(|_| self.next_coord(radius)).collect())
            .expect("LCG coordinates are finite")
    }
}

/// Outcome of a midpoint-convexity sweep.
#[derive(Debug, Clone)]
pub struct ConvexitySample {
    /// Largest `g(mid) - (g(x) + g(y))/2` seen; violations are positive.
    pub worst_violation: f64,
    pub witness: Option<(Vector, Vector)>,
    pub pairs_checked: usize,
    /// The slack the verdict was taken against.
    pub slack: f64,
}

impl ConvexitySample {
    pub fn is_convex_on_sample(&self) -> bool {
        self.worst_violation <= self.slack
    }
}

/// Samples pairs and checks `g((x+y)/2) <= (g(x) + g(y))/2 + MIDPOINT_SLACK`.
///
/// Evaluations may return `+inf` (extended-real convex functions); a pair with
/// an infinite endpoint is trivially satisfied, while an infinite midpoint
/// against finite endpoints is an infinite violation.
pub fn midpoint_convexity_check<G>(g: G, samples: &SampleSpec, dim: usize) -> ConvexitySample
where
    G: Fn(&Vector) -> f64 + Sync,
{
    midpoint_convexity_check_with_slack(g, samples, dim, MIDPOINT_SLACK)
}

/// [`midpoint_convexity_check`] with an explicit slack, for evaluations that
/// only resolve values to a grid tier.
pub fn midpoint_convexity_check_with_slack<G>(
    g: G,
    samples: &SampleSpec,
    dim: usize,
    slack: f64,
) -> ConvexitySample
where
    G: Fn(&Vector) -> f64 + Sync,
{
    let pairs = samples.pairs(dim);
    let violation = |i: usize| -> f64 {
        let (x, y) = &pairs[i];
        let gx = g(x);
        let gy = g(y);
        if gx == f64::INFINITY || gy == f64::INFINITY {
            return f64::NEG_INFINITY; // trivially satisfied
        }
        let mid = x.add(y).scale(0.5);
        g(&mid) - 0.5 * (gx + gy)
    };
    let (idx, worst) = par::scan_max(pairs.len(), violation).expect("count > 0");
    let witness = if worst > slack {
        Some(pairs[idx].clone())
    } else {
        None
    };
    ConvexitySample {
        worst_violation: worst,
        witness,
        pairs_checked: pairs.len(),
        slack,
    }
}

//! Model manifolds with radial geometry: volume densities, quadrature,
//! radial Laplacian, scalar curvature, geodesic-ball masses.
//!
//! Three models are supported: the round unit sphere, the flat torus
//! (reduced to one periodic coordinate) and a radially conformal sphere
//! `g_u = u^{2*-2} g_round`. All fields are radial about a pole, so the
//! geometry collapses onto a 1-D grid carrying the full volume density.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Minimum node count accepted by the difference operators.
pub const MIN_GRID_NODES: usize = 16;

/// Volume of the unit m-sphere embedded in R^{m+1} (so `unit_sphere_volume(2)` = 4π).
///
/// Uses the recursion ω_m = 2π/(m-1) · ω_{m-2} with ω_0 = 2, ω_1 = 2π.
pub fn unit_sphere_volume(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => std::f64::consts::TAU,
        _ => std::f64::consts::TAU / (m as f64 - 1.0) * unit_sphere_volume(m - 2),
    }
}

/// Critical Sobolev exponent 2* = 2n/(n-2).
pub fn two_star(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

/// Radial conformal factor u(r) > 0 defining the metric u^{2*-2} g_round.
#[derive(Clone, Debug)]
pub enum ConformalFactor {
    One,
    /// 1 + height · exp(-(r/width)²)
    Bump { height: f64, width: f64 },
    /// Piecewise-linear table on [0, π].
    Table { rs: Vec<f64>, us: Vec<f64> },
}

impl ConformalFactor {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            ConformalFactor::One => 1.0,
            ConformalFactor::Bump { height, width } => 1.0 + height * (-(r / width).powi(2)).exp(),
            ConformalFactor::Table { rs, us } => interp_linear(rs, us, r),
        }
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(j) => return ys[j],
        Err(j) => j,
    };
    let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    ys[j - 1] * (1.0 - t) + ys[j] * t
}

/// One of the three model manifolds.
#[derive(Clone, Debug)]
pub enum ModelManifold {
    RoundSphere { n: usize },
    FlatTorus { n: usize, side: f64 },
    ConformalSphere { n: usize, conformal_factor: ConformalFactor },
}

impl ModelManifold {
    pub fn dimension(&self) -> usize {
        match self {
            ModelManifold::RoundSphere { n }
            | ModelManifold::FlatTorus { n, .. }
            | ModelManifold::ConformalSphere { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension();
        if n < 3 {
            return Err(Error::DimensionTooLow(n));
        }
        if let ModelManifold::FlatTorus { side, .. } = self {
            if *side <= 0.0 {
                return Err(Error::InvalidArgument(format!("torus side must be > 0, got {side}")));
            }
        }
        Ok(())
    }

    /// Radial coordinate range: π for spheres, the period for the torus.
    pub fn r_max(&self) -> f64 {
        match self {
            ModelManifold::RoundSphere { .. } | ModelManifold::ConformalSphere { .. } => {
                std::f64::consts::PI
            }
            ModelManifold::FlatTorus { side, .. } => *side,
        }
    }

    /// Build the radial grid with `n_intervals` cells.
    pub fn grid(&self, n_intervals: usize) -> Result<Arc<RadialGrid>> {
        self.validate()?;
        let n = self.dimension();
        match self {
            ModelManifold::RoundSphere { .. } => Ok(Arc::new(RadialGrid::sphere(n, n_intervals, &ConformalFactor::One)?)),
            ModelManifold::ConformalSphere { conformal_factor, .. } => {
                Ok(Arc::new(RadialGrid::sphere(n, n_intervals, conformal_factor)?))
            }
            ModelManifold::FlatTorus { side, .. } => Ok(Arc::new(RadialGrid::torus(n, *side, n_intervals)?)),
        }
    }

    /// Closed-region volume by quadrature.
    pub fn volume(&self, n_intervals: usize) -> Result<f64> {
        let grid = self.grid(n_intervals)?;
        Ok(grid.weights.iter().sum())
    }

    /// Scalar curvature at radial coordinate `r`.
    ///
    /// Constant n(n-1) on the round sphere, 0 on the torus; for the conformal
    /// sphere it is `(-(4(n-1)/(n-2)) Δ_g u + S_g u) u^{1-2*}` evaluated with
    /// the round-metric radial Laplacian.
    pub fn scalar_curvature(&self, grid: &RadialGrid, r: f64) -> Result<f64> {
        let profile = self.scalar_curvature_profile(grid)?;
        let idx = ((r / grid.h).round() as usize).min(grid.r.len() - 1);
        Ok(profile[idx])
    }

    /// Scalar curvature sampled at every grid node.
    pub fn scalar_curvature_profile(&self, grid: &RadialGrid) -> Result<Vec<f64>> {
        let n = self.dimension();
        match self {
            ModelManifold::RoundSphere { .. } => Ok(vec![(n * (n - 1)) as f64; grid.r.len()]),
            ModelManifold::FlatTorus { .. } => Ok(vec![0.0; grid.r.len()]),
            ModelManifold::ConformalSphere { conformal_factor, .. } => {
                let round = RadialGrid::sphere(n, grid.r.len() - 1, &ConformalFactor::One)?;
                let u: Vec<f64> = round.r.iter().map(|&r| conformal_factor.eval(r)).collect();
                let lap = round.radial_laplacian(&u)?;
                let nf = n as f64;
                let sg = nf * (nf - 1.0);
                let coef = 4.0 * (nf - 1.0) / (nf - 2.0);
                let p = two_star(n);
                Ok(u.iter()
                    .zip(lap.iter())
                    .map(|(&ui, &li)| (-coef * li + sg * ui) * ui.powf(1.0 - p))
                    .collect())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridTopology {
    /// Bounded interval [0, r_max].
    Bounded,
    /// Periodic with period r_max (torus reduction); the last node is r_max - h.
    Periodic,
}

/// 1-D radial discretization carrying the volume density and quadrature weights.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    /// Manifold dimension.
    pub n: usize,
    pub topology: GridTopology,
    /// Node coordinates, strictly increasing.
    pub r: Vec<f64>,
    /// Uniform spacing.
    pub h: f64,
    /// Interval length (bounded) or period (periodic).
    pub r_max: f64,
    /// Volume density σ(r_i) including the angular factor, so ∫ f dv = ∫ f σ dr.
    pub sigma: Vec<f64>,
    /// Quadrature weights (composite Simpson × σ, or uniform × σ on the torus).
    pub weights: Vec<f64>,
    /// Face coefficients a(r_{j+1/2}) of the divergence-form Laplacian
    /// (1/σ) d/dr (a du/dr); a = σ for unweighted metrics, u²σ_round conformally.
    flux: Vec<f64>,
    /// Exact cell masses ∫_{cell_i} σ dr (finite-volume node measure); half
    /// cells at bounded ends. Σ mass = volume.
    mass: Vec<f64>,
}

/// 8-point Gauss–Legendre on [a, b].
fn gauss_cell(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 8] = [
        -0.9602898564975363,
        -0.7966664774136267,
        -0.5255324099163290,
        -0.1834346424956498,
        0.1834346424956498,
        0.5255324099163290,
        0.7966664774136267,
        0.9602898564975363,
    ];
    const W: [f64; 8] = [
        0.1012285362903763,
        0.2223810344533745,
        0.3137066458778873,
        0.3626837833783620,
        0.3626837833783620,
        0.3137066458778873,
        0.2223810344533745,
        0.1012285362903763,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in X.iter().zip(W.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

fn cell_masses_bounded(density: &dyn Fn(f64) -> f64, r: &[f64], h: f64, r_max: f64) -> Vec<f64> {
    let m = r.len();
    (0..m)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { r[i] - h / 2.0 };
            let hi = if i == m - 1 { r_max } else { r[i] + h / 2.0 };
            gauss_cell(density, lo, hi)
        })
        .collect()
}

fn simpson_coeffs(n_nodes: usize) -> Vec<f64> {
    let mut c = vec![1.0; n_nodes];
    for (i, ci) in c.iter_mut().enumerate().take(n_nodes - 1).skip(1) {
        *ci = if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    c
}

impl RadialGrid {
    fn check_size(n_intervals: usize) -> Result<usize> {
        if n_intervals < MIN_GRID_NODES {
            return Err(Error::GridTooCoarse(n_intervals));
        }
        Ok(if n_intervals % 2 == 1 { n_intervals + 1 } else { n_intervals })
    }

    /// Sphere grid on [0, π]; conformal factor scales the density by u^{2*}
    /// and the flux coefficient by u².
    pub fn sphere(n: usize, n_intervals: usize, u: &ConformalFactor) -> Result<RadialGrid> {
        let n_int = Self::check_size(n_intervals)?;
        let r_max = std::f64::consts::PI;
        let h = r_max / n_int as f64;
        let area = unit_sphere_volume(n - 1);
        let p = two_star(n);
        let r: Vec<f64> = (0..=n_int).map(|i| i as f64 * h).collect();
        let density = |x: f64| {
            let uf = u.eval(x);
            if uf <= 0.0 {
                return f64::NAN;
            }
            area * x.sin().powi(n as i32 - 1) * uf.powf(p)
        };
        let sigma: Vec<f64> = r.iter().map(|&x| density(x)).collect();
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("conformal factor must be strictly positive".into()));
        }
        let coeffs = simpson_coeffs(r.len());
        let weights: Vec<f64> = sigma
            .iter()
            .zip(coeffs.iter())
            .map(|(&s, &c)| s * c * h / 3.0)
            .collect();
        let flux: Vec<f64> = (0..n_int)
            .map(|j| {
                let mid = (j as f64 + 0.5) * h;
                area * mid.sin().powi(n as i32 - 1) * u.eval(mid).powi(2)
            })
            .collect();
        let mass = cell_masses_bounded(&density, &r, h, r_max);
        Ok(RadialGrid {
            n,
            topology: GridTopology::Bounded,
            r,
            h,
            r_max,
            sigma,
            weights,
            flux,
            mass,
        })
    }

    /// Flat torus reduced to one periodic coordinate in [0, side).
    pub fn torus(n: usize, side: f64, n_intervals: usize) -> Result<RadialGrid> {
        let n_int = Self::check_size(n_intervals)?;
        let h = side / n_int as f64;
        let cross = side.powi(n as i32 - 1);
        let r: Vec<f64> = (0..n_int).map(|i| i as f64 * h).collect();
        Ok(RadialGrid {
            n,
            topology: GridTopology::Periodic,
            r,
            h,
            r_max: side,
            sigma: vec![cross; n_int],
            weights: vec![cross * h; n_int],
            flux: vec![cross; n_int],
            mass: vec![cross * h; n_int],
        })
    }

    /// Euclidean ball grid on [0, radius] with density ω_{n-1} r^{n-1}.
    pub fn euclidean_ball(n: usize, radius: f64, n_intervals: usize) -> Result<RadialGrid> {
        let n_int = Self::check_size(n_intervals)?;
        let h = radius / n_int as f64;
        let area = unit_sphere_volume(n - 1);
        let r: Vec<f64> = (0..=n_int).map(|i| i as f64 * h).collect();
        let sigma: Vec<f64> = r.iter().map(|&x| area * x.powi(n as i32 - 1)).collect();
        let coeffs = simpson_coeffs(r.len());
        let weights: Vec<f64> = sigma
            .iter()
            .zip(coeffs.iter())
            .map(|(&s, &c)| s * c * h / 3.0)
            .collect();
        let flux: Vec<f64> = (0..n_int)
            .map(|j| area * ((j as f64 + 0.5) * h).powi(n as i32 - 1))
            .collect();
        let density = |x: f64| area * x.powi(n as i32 - 1);
        let mass = cell_masses_bounded(&density, &r, h, radius);
        Ok(RadialGrid {
            n,
            topology: GridTopology::Bounded,
            r,
            h,
            r_max: radius,
            sigma,
            weights,
            flux,
            mass,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn same_grid(&self, other: &RadialGrid) -> bool {
        self.n == other.n
            && self.topology == other.topology
            && self.r.len() == other.r.len()
            && (self.h - other.h).abs() <= 1e-15 * self.h
            && (self.r_max - other.r_max).abs() <= 1e-12 * self.r_max
    }

    fn check_profile(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.r.len() {
            return Err(Error::GridMismatch(format!(
                "profile has {} nodes, grid has {}",
                f.len(),
                self.r.len()
            )));
        }
        Ok(())
    }

    /// ∫ f dv by the grid's quadrature rule.
    pub fn quadrature(&self, f: &[f64]) -> Result<f64> {
        self.check_profile(f)?;
        Ok(f.iter().zip(self.weights.iter()).map(|(a, w)| a * w).sum())
    }

    /// Quadrature restricted to nodes with r ≤ delta (same node weights, masked).
    pub fn quadrature_ball(&self, f: &[f64], delta: f64) -> Result<f64> {
        self.check_profile(f)?;
        Ok(self
            .r
            .iter()
            .zip(f.iter().zip(self.weights.iter()))
            .filter(|(&ri, _)| self.ball_distance(ri) <= delta)
            .map(|(_, (a, w))| a * w)
            .sum())
    }

    /// Distance from the pole along the reduced coordinate (wraps on the torus).
    pub fn ball_distance(&self, r: f64) -> f64 {
        match self.topology {
            GridTopology::Bounded => r,
            GridTopology::Periodic => r.min(self.r_max - r),
        }
    }

    /// Divergence-form radial Laplacian in finite-volume form: the flux
    /// balance a(u')|faces divided by the exact cell mass. Second order
    /// uniformly (exact on u = r² over power-law densities); zero-flux
    /// closure u'(0) = u'(r_max) = 0 at bounded ends.
    pub fn radial_laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_profile(u)?;
        if self.r.len() < MIN_GRID_NODES {
            return Err(Error::GridTooCoarse(self.r.len()));
        }
        let m = self.r.len();
        let h = self.h;
        let mut out = vec![0.0; m];
        match self.topology {
            GridTopology::Periodic => {
                for i in 0..m {
                    let ip = (i + 1) % m;
                    let im = (i + m - 1) % m;
                    let f_right = self.flux[i] * (u[ip] - u[i]) / h;
                    let f_left = self.flux[im] * (u[i] - u[im]) / h;
                    out[i] = (f_right - f_left) / self.mass[i];
                }
            }
            GridTopology::Bounded => {
                for i in 0..m {
                    let f_right = if i + 1 < m { self.flux[i] * (u[i + 1] - u[i]) / h } else { 0.0 };
                    let f_left = if i > 0 { self.flux[i - 1] * (u[i] - u[i - 1]) / h } else { 0.0 };
                    out[i] = (f_right - f_left) / self.mass[i];
                }
            }
        }
        Ok(out)
    }

    /// Number of faces of the staggered derivative.
    pub fn n_faces(&self) -> usize {
        match self.topology {
            GridTopology::Bounded => self.r.len() - 1,
            GridTopology::Periodic => self.r.len(),
        }
    }

    /// Face coefficient a(r_{j+1/2}).
    pub fn flux_coeff(&self, j: usize) -> f64 {
        self.flux[j]
    }

    /// Midpoint coordinate of face j.
    pub fn face_mid(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    /// Staggered derivative (u_{j+1} - u_j)/h on face j.
    pub fn face_derivative(&self, u: &[f64], j: usize) -> f64 {
        match self.topology {
            GridTopology::Bounded => (u[j + 1] - u[j]) / self.h,
            GridTopology::Periodic => (u[(j + 1) % u.len()] - u[j]) / self.h,
        }
    }

    /// ∫ (u')² a dr for a scalar profile (one Dirichlet term).
    pub fn dirichlet_scalar(&self, u: &[f64]) -> Result<f64> {
        self.check_profile(u)?;
        let mut acc = 0.0;
        for j in 0..self.n_faces() {
            let d = self.face_derivative(u, j);
            acc += self.flux[j] * d * d * self.h;
        }
        Ok(acc)
    }

    /// Finite-volume node measure (exact cell masses, Σ = volume); the
    /// measure-weighted gradient of `dirichlet_scalar` is exactly -2 Δ_h u at
    /// every node and the Laplacian is self-adjoint in this pairing.
    pub fn node_mass(&self) -> Vec<f64> {
        self.mass.clone()
    }

    /// Discrete inner product ⟨u, v⟩ = Σ m_i u_i v_i matching the Laplacian's
    /// natural pairing.
    pub fn inner_sigma(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_profile(u)?;
        self.check_profile(v)?;
        Ok(u.iter()
            .zip(v.iter())
            .zip(self.mass.iter())
            .map(|((a, b), s)| a * b * s)
            .sum())
    }
}

/// A k-map on the manifold represented by k radial profiles on a shared grid.
#[derive(Clone, Debug)]
pub struct VectorRadialField {
    pub grid: Arc<RadialGrid>,
    pub components: Vec<Vec<f64>>,
}

/// Which integrand `ball_mass` accumulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallIntegrand {
    FMass,
    Dirichlet,
    L2,
}

impl VectorRadialField {
    pub fn new(grid: Arc<RadialGrid>, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        for c in &components {
            grid.check_profile(c)?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("field has non-finite values".into()));
            }
        }
        Ok(VectorRadialField { grid, components })
    }

    /// Scalar profile lifted along a fixed direction t0.
    pub fn from_scalar(grid: Arc<RadialGrid>, profile: Vec<f64>, t0: &[f64]) -> Result<Self> {
        let comps = t0.iter().map(|&ti| profile.iter().map(|&v| ti * v).collect()).collect();
        Self::new(grid, comps)
    }

    pub fn constant(grid: Arc<RadialGrid>, values: &[f64]) -> Result<Self> {
        let m = grid.len();
        Self::new(grid, values.iter().map(|&v| vec![v; m]).collect())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    /// Pointwise ℓ² norm across components.
    pub fn norm_profile(&self) -> Vec<f64> {
        let m = self.n_nodes();
        let mut out = vec![0.0; m];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c.iter()) {
                *o += v * v;
            }
        }
        out.iter_mut().for_each(|v| *v = v.sqrt());
        out
    }

    pub fn value_at(&self, i: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[i]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.norm_profile().into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        VectorRadialField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        if !self.grid.same_grid(&other.grid) || self.k() != other.k() {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let comps = self
            .components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x + y * factor).collect())
            .collect();
        VectorRadialField::new(self.grid.clone(), comps)
    }

    /// Σ_i ∫ (u_i')² dv by the staggered face rule.
    pub fn gradient_dirichlet(&self) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.components {
            acc += self.grid.dirichlet_scalar(c)?;
        }
        Ok(acc)
    }

    /// Σ_i ∫ u_i² dv.
    pub fn l2_mass(&self) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.components {
            let sq: Vec<f64> = c.iter().map(|v| v * v).collect();
            acc += self.grid.quadrature(&sq)?;
        }
        Ok(acc)
    }

    /// Quadrature over the pole ball of radius delta of F(U), |∇U|² or |U|².
    ///
    /// `f_at` evaluates the F-potential at a point value (required for FMass).
    pub fn ball_mass(
        &self,
        center: f64,
        delta: f64,
        integrand: BallIntegrand,
        f_at: Option<&dyn Fn(&[f64]) -> f64>,
    ) -> Result<f64> {
        if center != 0.0 {
            return Err(Error::OffPoleCenter { center });
        }
        match integrand {
            BallIntegrand::FMass => {
                let f = f_at.ok_or(Error::MissingConstant("F potential for ball F-mass"))?;
                let vals: Vec<f64> = (0..self.n_nodes()).map(|i| f(&self.value_at(i))).collect();
                self.grid.quadrature_ball(&vals, delta)
            }
            BallIntegrand::L2 => {
                let nrm = self.norm_profile();
                let sq: Vec<f64> = nrm.iter().map(|v| v * v).collect();
                self.grid.quadrature_ball(&sq, delta)
            }
            BallIntegrand::Dirichlet => {
                let mut acc = 0.0;
                for j in 0..self.grid.n_faces() {
                    if self.grid.ball_distance(self.grid.face_mid(j)) > delta {
                        continue;
                    }
                    for c in &self.components {
                        let d = self.grid.face_derivative(c, j);
                        acc += self.grid.flux_coeff(j) * d * d * self.grid.h;
                    }
                }
                Ok(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const N: usize = 2048;

    #[test]
    fn sphere_volumes_match_closed_form() {
        // ω_3 = 2π², ω_4 = 8π²/3
        let v3 = ModelManifold::RoundSphere { n: 3 }.volume(N).unwrap();
        assert_relative_eq!(v3, 2.0 * std::f64::consts::PI.powi(2), max_relative = 1e-8);
        let v4 = ModelManifold::RoundSphere { n: 4 }.volume(N).unwrap();
        assert_relative_eq!(v4, 8.0 * std::f64::consts::PI.powi(2) / 3.0, max_relative = 1e-8);
    }

    #[test]
    fn torus_volume_is_side_power_n() {
        let v = ModelManifold::FlatTorus { n: 4, side: 1.0 }.volume(N).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        let v = ModelManifold::FlatTorus { n: 3, side: 1.7 }.volume(N).unwrap();
        assert_relative_eq!(v, 1.7f64.powi(3), max_relative = 1e-12);
    }

    #[test]
    fn quadrature_of_one_is_volume_for_all_models() {
        for m in [
            ModelManifold::RoundSphere { n: 5 },
            ModelManifold::FlatTorus { n: 5, side: 1.3 },
            ModelManifold::ConformalSphere {
                n: 5,
                conformal_factor: ConformalFactor::Bump { height: 0.5, width: 0.7 },
            },
        ] {
            let grid = m.grid(N).unwrap();
            let ones = vec![1.0; grid.len()];
            let q = grid.quadrature(&ones).unwrap();
            let v = m.volume(N).unwrap();
            assert_relative_eq!(q, v, max_relative = 1e-14);
        }
    }

    #[test]
    fn quadrature_examples_on_spheres() {
        // cos r against sin² weight on S³ integrates to zero by symmetry.
        let grid = ModelManifold::RoundSphere { n: 3 }.grid(N).unwrap();
        let f: Vec<f64> = grid.r.iter().map(|&r| r.cos()).collect();
        let q = grid.quadrature(&f).unwrap();
        assert!(q.abs() <= 1e-8 * grid.weights.iter().sum::<f64>());

        // Indicator of the upper half sphere gives half the volume; the mask
        // cuts the Simpson pattern mid-stride, so the accuracy is O(h).
        for n in [3usize, 6] {
            let grid = ModelManifold::RoundSphere { n }.grid(N).unwrap();
            let half = std::f64::consts::FRAC_PI_2;
            let f: Vec<f64> = grid.r.iter().map(|&r| if r <= half { 1.0 } else { 0.0 }).collect();
            let q = grid.quadrature(&f).unwrap();
            let vol: f64 = grid.weights.iter().sum();
            assert_relative_eq!(q, vol / 2.0, max_relative = 1e-3);
        }
    }

    #[test]
    fn grid_refinement_convergence_smooth_integrand() {
        let m = ModelManifold::RoundSphere { n: 4 };
        let q = |ni: usize| {
            let grid = m.grid(ni).unwrap();
            let f: Vec<f64> = grid.r.iter().map(|&r| (1.5 * r).cos() * (0.5 * r).exp()).collect();
            grid.quadrature(&f).unwrap()
        };
        let a = q(N);
        let b = q(2 * N);
        assert!((a - b).abs() / b.abs() <= 1e-6);
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        for m in [
            ModelManifold::RoundSphere { n: 4 },
            ModelManifold::FlatTorus { n: 4, side: 1.0 },
        ] {
            let grid = m.grid(256).unwrap();
            let u = vec![3.25; grid.len()];
            let lap = grid.radial_laplacian(&u).unwrap();
            assert!(lap.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn laplacian_eigenfunction_cos_on_sphere() {
        // Δ cos r = -n cos r on Sⁿ; second-order accuracy against the exact value.
        for n in [3usize, 5] {
            let grid = ModelManifold::RoundSphere { n }.grid(N).unwrap();
            let u: Vec<f64> = grid.r.iter().map(|&r| r.cos()).collect();
            let lap = grid.radial_laplacian(&u).unwrap();
            let h2 = grid.h * grid.h;
            for (i, (&l, &r)) in lap.iter().zip(grid.r.iter()).enumerate() {
                let expect = -(n as f64) * r.cos();
                assert!(
                    (l - expect).abs() <= 60.0 * h2 * (n as f64),
                    "node {i}: {l} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn laplacian_of_r_squared_near_origin_euclidean() {
        let n = 4;
        let grid = RadialGrid::euclidean_ball(n, 1.0, 1024).unwrap();
        let u: Vec<f64> = grid.r.iter().map(|&r| r * r).collect();
        let lap = grid.radial_laplacian(&u).unwrap();
        // Δ r² = 2n exactly; the scheme reproduces it up to O(h²).
        for &l in lap.iter().take(grid.len() - 1) {
            assert_relative_eq!(l, 2.0 * n as f64, max_relative = 1e-9);
        }
    }

    #[test]
    fn laplacian_discretely_self_adjoint() {
        let grid = ModelManifold::RoundSphere { n: 5 }.grid(N).unwrap();
        let bump = |c: f64, w: f64, r: f64| {
            let x: f64 = (r - c) / w;
            if x.abs() < 1.0 {
                (1.0 - x * x).powi(3)
            } else {
                0.0
            }
        };
        let u: Vec<f64> = grid.r.iter().map(|&r| bump(1.2, 0.5, r)).collect();
        let v: Vec<f64> = grid.r.iter().map(|&r| bump(1.6, 0.7, r)).collect();
        let lu = grid.radial_laplacian(&u).unwrap();
        let lv = grid.radial_laplacian(&v).unwrap();
        let a = grid.inner_sigma(&lu, &v).unwrap();
        let b = grid.inner_sigma(&u, &lv).unwrap();
        let nu = grid.inner_sigma(&u, &u).unwrap().sqrt();
        let nv = grid.inner_sigma(&v, &v).unwrap().sqrt();
        assert!((a - b).abs() <= 1e-6 * nu * nv, "asymmetry {}", (a - b).abs() / (nu * nv));
    }

    #[test]
    fn conformal_identity_factor_reproduces_round_sphere() {
        let n = 5;
        let round = ModelManifold::RoundSphere { n };
        let conf = ModelManifold::ConformalSphere { n, conformal_factor: ConformalFactor::One };
        let g1 = round.grid(512).unwrap();
        let g2 = conf.grid(512).unwrap();
        assert_relative_eq!(round.volume(512).unwrap(), conf.volume(512).unwrap(), max_relative = 1e-15);
        let u: Vec<f64> = g1.r.iter().map(|&r| (2.0 * r).cos()).collect();
        let l1 = g1.radial_laplacian(&u).unwrap();
        let l2 = g2.radial_laplacian(&u).unwrap();
        for (a, b) in l1.iter().zip(l2.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let s = conf.scalar_curvature(&g2, 1.0).unwrap();
        assert_relative_eq!(s, (n * (n - 1)) as f64, max_relative = 1e-12);
    }

    #[test]
    fn gradient_dirichlet_cos_on_s3() {
        // ∫ sin²r · ω₂ sin²r dr = 4π · 3π/8 = 3π²/2
        let grid = ModelManifold::RoundSphere { n: 3 }.grid(N).unwrap();
        let u: Vec<f64> = grid.r.iter().map(|&r| r.cos()).collect();
        let field = VectorRadialField::new(grid, vec![u]).unwrap();
        let d = field.gradient_dirichlet().unwrap();
        let exact = 1.5 * std::f64::consts::PI.powi(2);
        assert_relative_eq!(d, exact, max_relative = 1e-6);
    }

    #[test]
    fn dirichlet_sums_over_components() {
        let grid = ModelManifold::RoundSphere { n: 4 }.grid(512).unwrap();
        let u: Vec<f64> = grid.r.iter().map(|&r| r.cos()).collect();
        let v: Vec<f64> = grid.r.iter().map(|&r| (2.0 * r).sin()).collect();
        let fu = VectorRadialField::new(grid.clone(), vec![u.clone()]).unwrap();
        let fv = VectorRadialField::new(grid.clone(), vec![v.clone()]).unwrap();
        let fuv = VectorRadialField::new(grid, vec![u, v]).unwrap();
        let sum = fu.gradient_dirichlet().unwrap() + fv.gradient_dirichlet().unwrap();
        assert_relative_eq!(fuv.gradient_dirichlet().unwrap(), sum, max_relative = 1e-14);
        let c = VectorRadialField::constant(fu.grid.clone(), &[2.0, -1.0]).unwrap();
        assert_eq!(c.gradient_dirichlet().unwrap(), 0.0);
    }

    #[test]
    fn ball_mass_endpoints() {
        let grid = ModelManifold::RoundSphere { n: 4 }.grid(N).unwrap();
        let u: Vec<f64> = grid.r.iter().map(|&r| (1.0 + r).recip()).collect();
        let field = VectorRadialField::new(grid.clone(), vec![u]).unwrap();
        let abs4 = |t: &[f64]| t[0].powi(4).abs();
        let total = field
            .ball_mass(0.0, grid.r_max, BallIntegrand::FMass, Some(&abs4))
            .unwrap();
        let vals: Vec<f64> = (0..field.n_nodes()).map(|i| abs4(&field.value_at(i))).collect();
        let direct = grid.quadrature(&vals).unwrap();
        assert_relative_eq!(total, direct, max_relative = 1e-15);
        let zero = field.ball_mass(0.0, 0.0, BallIntegrand::L2, None).unwrap();
        assert_eq!(zero, 0.0);
        assert!(matches!(
            field.ball_mass(0.5, 0.2, BallIntegrand::L2, None),
            Err(Error::OffPoleCenter { .. })
        ));
    }

    #[test]
    fn grid_too_coarse_rejected() {
        assert!(matches!(
            ModelManifold::RoundSphere { n: 4 }.grid(8),
            Err(Error::GridTooCoarse(8))
        ));
    }
}

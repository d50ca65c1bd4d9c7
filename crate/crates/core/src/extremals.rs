//! Closed-form extremal families and equality residuals in the sharp
//! inequalities.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::manifolds::{two_star, GridTopology, RadialGrid, VectorRadialField};
use crate::potentials::{
    integrate_potential, integrate_spatial, max_on_direction_sphere, HomogeneousPotential,
    SpatialPotential,
};

/// The Euclidean bubble w(x) = (1 + |x|²)^{-n/2*} evaluated radially.
pub fn bubble_value(n: usize, r: f64) -> f64 {
    (1.0 + r * r).powf(-(n as f64) / two_star(n))
}

/// Radial derivative of the bubble.
pub fn bubble_derivative(n: usize, r: f64) -> f64 {
    let e = -(n as f64) / two_star(n);
    e * 2.0 * r * (1.0 + r * r).powf(e - 1.0)
}

/// Parameters of the scaled Euclidean extremal a·t0·w(b·x).
#[derive(Clone, Debug)]
pub struct BubbleParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub t0: Vec<f64>,
}

impl BubbleParams {
    pub fn validate(&self) -> Result<()> {
        if self.a == 0.0 || self.b == 0.0 {
            return Err(Error::InvalidArgument("bubble needs a ≠ 0 and b ≠ 0".into()));
        }
        let nrm: f64 = self.t0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("t0 must be unit, |t0| = {nrm}")));
        }
        Ok(())
    }
}

/// Sample a·t0·w(b·r) on a Euclidean radial grid.
pub fn bubble_profile(p: &BubbleParams, grid: Arc<RadialGrid>) -> Result<VectorRadialField> {
    p.validate()?;
    let profile: Vec<f64> = grid.r.iter().map(|&r| p.a * bubble_value(p.n, p.b * r)).collect();
    VectorRadialField::from_scalar(grid, profile, &p.t0)
}

/// The norm-preserving scaling b^{n/2*} w(b·x) used in blow-up analysis.
pub fn normalized_bubble_profile(n: usize, b: f64, grid: Arc<RadialGrid>) -> Result<VectorRadialField> {
    let amp = b.powf(n as f64 / two_star(n));
    bubble_profile(&BubbleParams { n, a: amp, b, t0: vec![1.0] }, grid)
}

/// Parameters of the sphere extremal family u_{p0,β}, β > 1.
#[derive(Clone, Debug)]
pub struct SphereExtremalParams {
    pub n: usize,
    pub beta: f64,
    pub t0: Vec<f64>,
}

/// Pole amplitude and radial profile
/// `(β²-1)^{(n-2)/4} ω_n^{-1/2*} (β - cos r)^{1-n/2}`.
pub fn sphere_extremal_value(n: usize, beta: f64, omega_n: f64, r: f64) -> f64 {
    let nf = n as f64;
    (beta * beta - 1.0).powf((nf - 2.0) / 4.0)
        * omega_n.powf(-1.0 / two_star(n))
        * (beta - r.cos()).powf(1.0 - nf / 2.0)
}

/// Sample the sphere extremal times t0 on a sphere grid.
pub fn sphere_extremal_profile(
    p: &SphereExtremalParams,
    grid: Arc<RadialGrid>,
) -> Result<VectorRadialField> {
    if p.beta <= 1.0 {
        return Err(Error::BetaOutOfRange { beta: p.beta });
    }
    if grid.topology != GridTopology::Bounded || (grid.r_max - std::f64::consts::PI).abs() > 1e-9 {
        return Err(Error::InvalidArgument("sphere extremal needs a sphere grid".into()));
    }
    let omega_n = grid.weights.iter().sum::<f64>();
    let profile: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| sphere_extremal_value(p.n, p.beta, omega_n, r))
        .collect();
    VectorRadialField::from_scalar(grid, profile, &p.t0)
}

/// Log grid in β - 1 from 1e-3 to 10 with 40 points (family sweeps).
pub fn beta_sweep() -> Vec<f64> {
    let lo: f64 = 1e-3;
    let hi: f64 = 10.0;
    let count = 40;
    (0..count)
        .map(|i| 1.0 + lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Which sharp inequality a residual refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inequality {
    /// Scalar Euclidean: (∫|u|^{2*})^{2/2*} ≤ A₀ ∫|∇u|²
    EuclideanScalar,
    /// Saturated scalar Riemannian: LHS ≤ A₀ ∫|∇u|² + B₀ ∫u²
    SecondSharpScalar,
    /// Saturated vector Riemannian: (∫F(U))^{2/2*} ≤ 𝒜 ∫|∇U|² + ℬ ∫G(x,U)
    SecondSharpVector,
}

/// Constants entering the right-hand side of the chosen inequality.
#[derive(Clone, Copy, Debug, Default)]
pub struct ResidualConstants {
    pub leading: Option<f64>,
    pub zero_order: Option<f64>,
}

/// (RHS - LHS) / |RHS| of the chosen inequality; ≈ 0 for extremals,
/// ≥ -tol for valid constants.
pub fn equality_residual(
    u: &VectorRadialField,
    inequality: Inequality,
    constants: ResidualConstants,
    f: Option<&HomogeneousPotential>,
    g: Option<&SpatialPotential>,
) -> Result<f64> {
    let n = u.grid.n;
    let p = two_star(n);
    let leading = constants.leading.ok_or(Error::MissingConstant("leading constant"))?;
    let dirichlet = u.gradient_dirichlet()?;
    let (lhs, rhs) = match inequality {
        Inequality::EuclideanScalar => {
            let lp: Vec<f64> = u
                .norm_profile()
                .iter()
                .map(|v| v.abs().powf(p))
                .collect();
            let mass = u.grid.quadrature(&lp)?;
            (mass.powf(2.0 / p), leading * dirichlet)
        }
        Inequality::SecondSharpScalar => {
            let b0 = constants.zero_order.ok_or(Error::MissingConstant("second constant"))?;
            let nrm = u.norm_profile();
            let lp: Vec<f64> = nrm.iter().map(|v| v.powf(p)).collect();
            let l2: Vec<f64> = nrm.iter().map(|v| v * v).collect();
            let mass = u.grid.quadrature(&lp)?;
            let m2 = u.grid.quadrature(&l2)?;
            (mass.powf(2.0 / p), leading * dirichlet + b0 * m2)
        }
        Inequality::SecondSharpVector => {
            let b0 = constants.zero_order.ok_or(Error::MissingConstant("second constant"))?;
            let fpot = f.ok_or(Error::MissingConstant("F potential"))?;
            let gpot = g.ok_or(Error::MissingConstant("G potential"))?;
            let mass = integrate_potential(fpot, u)?;
            let gmass = integrate_spatial(gpot, u)?;
            (mass.powf(2.0 / p), leading * dirichlet + b0 * gmass)
        }
    };
    Ok((rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE))
}

/// Rank-one factorization diagnostics for a field U ≈ t0 · u.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub t0: Vec<f64>,
    pub scalar_profile: Vec<f64>,
    /// ‖U - t0 u‖_{L²} / ‖U‖_{L²}
    pub deviation: f64,
    /// F(t0) ≥ M_F (1 - tol)?
    pub t0_maximizes_f: bool,
}

/// Dominant direction t0 ∝ ∫ U |U|^{2*-2} dv, scalar part ⟨U, t0⟩ and the
/// relative L² deviation from the rank-one factorization.
pub fn extremal_factorization(
    u: &VectorRadialField,
    f: &HomogeneousPotential,
    tol: f64,
) -> Result<Factorization> {
    let p = two_star(u.grid.n);
    let nrm = u.norm_profile();
    let total: f64 = u.l2_mass()?;
    if total <= 0.0 {
        return Err(Error::ZeroField);
    }
    let mut t0 = vec![0.0; u.k()];
    for (i, comp) in u.components.iter().enumerate() {
        let integrand: Vec<f64> = comp
            .iter()
            .zip(nrm.iter())
            .map(|(&ui, &m)| if m > 0.0 { ui * m.powf(p - 2.0) } else { 0.0 })
            .collect();
        t0[i] = u.grid.quadrature(&integrand)?;
    }
    let t0_norm: f64 = t0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if t0_norm == 0.0 {
        return Err(Error::ZeroField);
    }
    t0.iter_mut().for_each(|v| *v /= t0_norm);

    let m = u.n_nodes();
    let mut scalar = vec![0.0; m];
    for (i, comp) in u.components.iter().enumerate() {
        for (s, &v) in scalar.iter_mut().zip(comp.iter()) {
            *s += t0[i] * v;
        }
    }
    let mut dev2 = 0.0;
    for (i, comp) in u.components.iter().enumerate() {
        let resid: Vec<f64> = comp
            .iter()
            .zip(scalar.iter())
            .map(|(&v, &s)| {
                let d = v - t0[i] * s;
                d * d
            })
            .collect();
        dev2 += u.grid.quadrature(&resid)?;
    }
    let deviation = (dev2.max(0.0) / total).sqrt();
    let m_f = max_on_direction_sphere(f, 1e-8)?.m_f;
    let t0_maximizes_f = f.evaluate(&t0) >= m_f * (1.0 - tol);
    Ok(Factorization { t0, scalar_profile: scalar, deviation, t0_maximizes_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::ModelManifold;
    use approx::assert_relative_eq;

    #[test]
    fn bubble_values() {
        // w(0) = 1; the exponent is n/2* = (n-2)/2, so n = 4 gives w(1) = 1/2
        // and n = 6 gives w(1) = 1/4.
        assert_eq!(bubble_value(4, 0.0), 1.0);
        assert_relative_eq!(bubble_value(4, 1.0), 0.5, max_relative = 1e-14);
        assert_relative_eq!(bubble_value(6, 1.0), 0.25, max_relative = 1e-14);
        let grid = RadialGrid::euclidean_ball(4, 10.0, 256).map(Arc::new).unwrap();
        let p = BubbleParams { n: 4, a: 1.0, b: 1.0, t0: vec![1.0] };
        let field = bubble_profile(&p, grid).unwrap();
        let prof = &field.components[0];
        assert!(prof.windows(2).all(|w| w[1] < w[0]), "bubble must decrease radially");
    }

    #[test]
    fn sphere_extremal_unit_norm_and_limits() {
        for (n, beta) in [(4usize, 1.1), (4, 1.5), (4, 2.0), (5, 1.1), (5, 1.5), (5, 2.0)] {
            let grid = ModelManifold::RoundSphere { n }.grid(2048).unwrap();
            let p = SphereExtremalParams { n, beta, t0: vec![1.0] };
            let u = sphere_extremal_profile(&p, grid.clone()).unwrap();
            let lp: Vec<f64> = u.norm_profile().iter().map(|v| v.powf(two_star(n))).collect();
            let mass = grid.quadrature(&lp).unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-6);
        }

        // β → ∞: profile tends to the constant ω_n^{-1/2*}; the deviation is
        // (n-2)/(2β) cos r to leading order, so it halves when β doubles.
        let n = 4;
        let grid = ModelManifold::RoundSphere { n }.grid(512).unwrap();
        let omega = grid.weights.iter().sum::<f64>();
        let c = omega.powf(-1.0 / two_star(n));
        let max_dev = |beta: f64| {
            let u = sphere_extremal_profile(
                &SphereExtremalParams { n, beta, t0: vec![1.0] },
                grid.clone(),
            )
            .unwrap();
            u.components[0]
                .iter()
                .map(|v| (v - c).abs() / c)
                .fold(0.0, f64::max)
        };
        let d3 = max_dev(1e3);
        assert!(d3 <= 1.2e-3, "deviation at beta=1e3: {d3}");
        let d4 = max_dev(2e3);
        assert!(d4 <= 0.6 * d3, "deviation must shrink like 1/beta: {d3} -> {d4}");

        // Pole amplitude grows without bound as β ↓ 1.
        let amp = |beta: f64| sphere_extremal_value(n, beta, omega, 0.0);
        assert!(amp(1.01) > amp(1.1));
        assert!(matches!(
            sphere_extremal_profile(&SphereExtremalParams { n, beta: 1.0, t0: vec![1.0] }, grid),
            Err(Error::BetaOutOfRange { .. })
        ));
    }

    #[test]
    fn missing_constant_is_reported() {
        let grid = ModelManifold::RoundSphere { n: 4 }.grid(128).unwrap();
        let u = VectorRadialField::constant(grid, &[1.0]).unwrap();
        let r = equality_residual(&u, Inequality::EuclideanScalar, ResidualConstants::default(), None, None);
        assert!(matches!(r, Err(Error::MissingConstant(_))));
    }

    #[test]
    fn factorization_recovers_rank_one() {
        let n = 4;
        let grid = ModelManifold::RoundSphere { n }.grid(512).unwrap();
        let f = HomogeneousPotential::norm2(2, two_star(n));
        let w: Vec<f64> = grid.r.iter().map(|&r| (1.0 + r * r).recip()).collect();

        // U = t0 w exactly: deviation 0, t0 recovered up to sign.
        let t0 = [0.6, -0.8];
        let u = VectorRadialField::from_scalar(grid.clone(), w.clone(), &t0).unwrap();
        let fac = extremal_factorization(&u, &f, 1e-6).unwrap();
        assert!(fac.deviation < 1e-12);
        let dot: f64 = fac.t0.iter().zip(t0.iter()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(dot.abs(), 1.0, max_relative = 1e-10);

        // Two equal orthogonal components of one profile are still rank one.
        let u2 = VectorRadialField::new(grid.clone(), vec![w.clone(), w.clone()]).unwrap();
        let fac2 = extremal_factorization(&u2, &f, 1e-6).unwrap();
        assert!(fac2.deviation < 1e-12);
        let inv = 0.5f64.sqrt();
        assert_relative_eq!(fac2.t0[0].abs(), inv, max_relative = 1e-9);
        assert_relative_eq!(fac2.t0[1].abs(), inv, max_relative = 1e-9);

        // Genuinely non-factorized field has a definite deviation.
        let w2: Vec<f64> = grid.r.iter().map(|&r| (1.0 + 4.0 * r * r).recip()).collect();
        let u3 = VectorRadialField::new(grid.clone(), vec![w, w2]).unwrap();
        let fac3 = extremal_factorization(&u3, &f, 1e-6).unwrap();
        assert!(fac3.deviation > 0.05, "deviation {}", fac3.deviation);

        let zero = VectorRadialField::constant(grid, &[0.0, 0.0]).unwrap();
        assert!(matches!(extremal_factorization(&zero, &f, 1e-6), Err(Error::ZeroField)));
    }
}

//! Blow-up and concentration diagnostics for families of fields: ball-mass
//! profiles, reverse-Hölder atom estimates, De Giorgi–Nash–Moser sup ratios,
//! L² tail ratios and rescaling extraction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extremals::{sphere_extremal_profile, SphereExtremalParams};
use crate::manifolds::{two_star, BallIntegrand, RadialGrid, VectorRadialField};
use crate::potentials::HomogeneousPotential;
use crate::report::{CsvCell, CsvTable};

/// Default δ-ladder for ball-mass profiles.
pub const DELTA_LADDER: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];

/// A one-parameter family of fields on a shared grid.
#[derive(Clone, Debug)]
pub struct FieldFamily {
    pub parameter_name: String,
    pub parameters: Vec<f64>,
    pub fields: Vec<VectorRadialField>,
}

impl FieldFamily {
    pub fn new(
        parameter_name: &str,
        parameters: Vec<f64>,
        fields: Vec<VectorRadialField>,
    ) -> Result<Self> {
        if parameters.len() != fields.len() || fields.is_empty() {
            return Err(Error::InvalidArgument("family needs one field per parameter".into()));
        }
        let monotone = parameters.windows(2).all(|w| w[1] > w[0])
            || parameters.windows(2).all(|w| w[1] < w[0]);
        if !monotone {
            return Err(Error::InvalidArgument("family parameter must be strictly monotone".into()));
        }
        let grid = &fields[0].grid;
        for f in &fields[1..] {
            if !f.grid.same_grid(grid) {
                return Err(Error::GridMismatch("family fields live on different grids".into()));
            }
        }
        Ok(FieldFamily { parameter_name: parameter_name.into(), parameters, fields })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Sphere extremal family over a β sweep (most concentrated member first or
/// last depending on the sweep order; the parameter is β).
pub fn sphere_extremal_family(
    n: usize,
    betas: &[f64],
    t0: &[f64],
    grid: Arc<RadialGrid>,
) -> Result<FieldFamily> {
    let fields: Vec<VectorRadialField> = betas
        .iter()
        .map(|&beta| {
            sphere_extremal_profile(&SphereExtremalParams { n, beta, t0: t0.to_vec() }, grid.clone())
        })
        .collect::<Result<_>>()?;
    FieldFamily::new("beta", betas.to_vec(), fields)
}

/// (δ, F-mass, Dirichlet mass, L² mass) rows over a δ-ladder.
pub fn mass_profile(
    u: &VectorRadialField,
    deltas: &[f64],
    f: &HomogeneousPotential,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let eval = |t: &[f64]| f.evaluate(t);
    deltas
        .iter()
        .map(|&d| {
            let fm = u.ball_mass(0.0, d, BallIntegrand::FMass, Some(&eval))?;
            let dm = u.ball_mass(0.0, d, BallIntegrand::Dirichlet, None)?;
            let l2 = u.ball_mass(0.0, d, BallIntegrand::L2, None)?;
            Ok((d, fm, dm, l2))
        })
        .collect()
}

pub fn mass_profile_csv(rows: &[(f64, f64, f64, f64)]) -> CsvTable {
    let mut t = CsvTable::new(&["delta", "f_mass", "dirichlet_mass", "l2_mass"]);
    for &(d, fm, dm, l2) in rows {
        t.push_row(vec![CsvCell::Num(d), CsvCell::Num(fm), CsvCell::Num(dm), CsvCell::Num(l2)]);
    }
    t
}

/// Per-member diagnostics inside a concentration report.
#[derive(Clone, Debug)]
pub struct MemberDiagnostics {
    pub parameter: f64,
    pub sup: f64,
    /// Concentration scale μ = sup^{-2*/n}.
    pub mu: f64,
    pub f_ball_masses: Vec<f64>,
    pub dirichlet_ball_masses: Vec<f64>,
    pub l2_tail: f64,
}

#[derive(Clone, Debug)]
pub struct ConcentrationReport {
    pub deltas: Vec<f64>,
    pub members: Vec<MemberDiagnostics>,
    /// F-atom estimate at the pole.
    pub nu1: f64,
    /// Dirichlet-atom estimate at the pole.
    pub mu1: f64,
    /// 𝒜₀(n,F)·μ₁ - ν₁^{2/2*}.
    pub reverse_holder_margin: f64,
    /// Smallest ladder δ resolved by the most concentrated member (0 when the
    /// family does not concentrate).
    pub resolved_delta: f64,
    pub concentrating: bool,
}

impl ConcentrationReport {
    pub fn members_csv(&self) -> CsvTable {
        let mut header: Vec<String> =
            vec!["parameter".into(), "sup".into(), "mu".into(), "l2_tail".into()];
        for d in &self.deltas {
            header.push(format!("f_mass_{d}"));
        }
        for d in &self.deltas {
            header.push(format!("dirichlet_mass_{d}"));
        }
        let mut t = CsvTable::default();
        t.header = header;
        for m in &self.members {
            let mut row = vec![
                CsvCell::Num(m.parameter),
                CsvCell::Num(m.sup),
                CsvCell::Num(m.mu),
                CsvCell::Num(m.l2_tail),
            ];
            row.extend(m.f_ball_masses.iter().map(|&v| CsvCell::Num(v)));
            row.extend(m.dirichlet_ball_masses.iter().map(|&v| CsvCell::Num(v)));
            t.push_row(row);
        }
        t
    }

    pub fn to_json(&self) -> crate::report::JsonValue {
        use crate::report::JsonValue as J;
        J::obj(vec![
            ("nu1", J::Num(self.nu1)),
            ("mu1", J::Num(self.mu1)),
            ("reverse_holder_margin", J::Num(self.reverse_holder_margin)),
            ("resolved_delta", J::Num(self.resolved_delta)),
            ("concentrating", J::Bool(self.concentrating)),
            ("deltas", J::Arr(self.deltas.iter().map(|&d| J::Num(d)).collect())),
            ("members", J::Int(self.members.len() as i64)),
        ])
    }
}

/// Estimate the pole atoms (ν₁, μ₁) of a concentrating family and check the
/// reverse Hölder constraint 𝒜₀(n,F) μ₁ ≥ ν₁^{2/2*}.
///
/// The iterated limit δ→0 after α→∞ is approximated by a two-point Richardson
/// extrapolation in μ^n over the two most concentrated members, evaluated at
/// the smallest ladder δ the most concentrated member resolves (δ ≥ 4μ);
/// smaller δ sit inside the concentration core where the α-limit has not
/// settled and extrapolation is unstable.
pub fn reverse_holder_check(
    family: &FieldFamily,
    f: &HomogeneousPotential,
    a0_nf: f64,
) -> Result<ConcentrationReport> {
    reverse_holder_check_with(family, f, a0_nf, &DELTA_LADDER)
}

pub fn reverse_holder_check_with(
    family: &FieldFamily,
    f: &HomogeneousPotential,
    a0_nf: f64,
    deltas: &[f64],
) -> Result<ConcentrationReport> {
    if family.len() < 2 {
        return Err(Error::ExtrapolationUnstable("need at least two family members".into()));
    }
    let n = family.fields[0].grid.n;
    let p = two_star(n);
    let eval = |t: &[f64]| f.evaluate(t);
    let tail_delta = deltas[deltas.len() / 2];
    let mut members: Vec<MemberDiagnostics> = Vec::with_capacity(family.len());
    for (idx, u) in family.fields.iter().enumerate() {
        let sup = u.sup_norm();
        let mu = if sup > 0.0 { sup.powf(-p / n as f64) } else { f64::INFINITY };
        let mut fm = Vec::with_capacity(deltas.len());
        let mut dm = Vec::with_capacity(deltas.len());
        for &d in deltas {
            fm.push(u.ball_mass(0.0, d, BallIntegrand::FMass, Some(&eval))?);
            dm.push(u.ball_mass(0.0, d, BallIntegrand::Dirichlet, None)?);
        }
        let l2_tail = l2_tail_ratio(u, tail_delta).unwrap_or(0.0);
        members.push(MemberDiagnostics {
            parameter: family.parameters[idx],
            sup,
            mu,
            f_ball_masses: fm,
            dirichlet_ball_masses: dm,
            l2_tail,
        });
    }

    // Order by concentration (growing sup).
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[a].sup.partial_cmp(&members[b].sup).unwrap());
    let last = order[order.len() - 1];
    let prev = order[order.len() - 2];
    let sup_ratio = members[last].sup / members[order[0]].sup.max(f64::MIN_POSITIVE);
    let concentrating = sup_ratio > 4.0;

    if !concentrating {
        return Ok(ConcentrationReport {
            deltas: deltas.to_vec(),
            members,
            nu1: 0.0,
            mu1: 0.0,
            reverse_holder_margin: 0.0,
            resolved_delta: 0.0,
            concentrating: false,
        });
    }

    let mu_last = members[last].mu;
    let resolved = deltas
        .iter()
        .copied()
        .filter(|&d| d >= 4.0 * mu_last)
        .fold(f64::INFINITY, f64::min);
    if !resolved.is_finite() {
        return Err(Error::ExtrapolationUnstable(format!(
            "no ladder radius resolves the concentration scale mu = {mu_last:.3e}"
        )));
    }
    let di = deltas.iter().position(|&d| d == resolved).unwrap();
    let z1 = members[last].mu.powi(n as i32);
    let z2 = members[prev].mu.powi(n as i32);
    if (z2 - z1).abs() <= f64::EPSILON * z2.abs() {
        return Err(Error::ExtrapolationUnstable("two most concentrated members coincide".into()));
    }
    let richardson = |m1: f64, m2: f64| m1 + (m1 - m2) * z1 / (z2 - z1);
    let m1 = members[last].f_ball_masses[di];
    let m2 = members[prev].f_ball_masses[di];
    if (m1 - m2).abs() > 0.5 * m1.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::ExtrapolationUnstable(format!(
            "ball masses far from settled at delta = {resolved}: {m1:.4e} vs {m2:.4e}"
        )));
    }
    let nu1 = richardson(m1, m2);
    let mu1 = richardson(
        members[last].dirichlet_ball_masses[di],
        members[prev].dirichlet_ball_masses[di],
    );
    let margin = a0_nf * mu1 - nu1.powf(2.0 / p);
    Ok(ConcentrationReport {
        deltas: deltas.to_vec(),
        members,
        nu1,
        mu1,
        reverse_holder_margin: margin,
        resolved_delta: resolved,
        concentrating: true,
    })
}

/// De Giorgi–Nash–Moser sup ratio
/// sup_{B(δ)} |U| / (δ^{-n/p} (∫_{B(2δ)} |U|^p dv)^{1/p}) together with the
/// L^q(B(2δ)) gate norm.
pub fn dgnm_ratio(
    u: &VectorRadialField,
    delta: f64,
    p_exp: f64,
    q_exp: f64,
) -> Result<(f64, f64)> {
    let grid = &u.grid;
    if 2.0 * delta > grid.ball_distance_max() {
        return Err(Error::InvalidArgument(format!(
            "dgnm_ratio needs 2*delta within the grid range: delta = {delta}, r_max = {}",
            grid.r_max
        )));
    }
    let nrm = u.norm_profile();
    let sup = grid
        .r
        .iter()
        .zip(nrm.iter())
        .filter(|(&r, _)| grid.ball_distance(r) <= delta)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    let pp: Vec<f64> = nrm.iter().map(|v| v.powf(p_exp)).collect();
    let lp = grid.quadrature_ball(&pp, 2.0 * delta)?.powf(1.0 / p_exp);
    let qq: Vec<f64> = nrm.iter().map(|v| v.powf(q_exp)).collect();
    let lq = grid.quadrature_ball(&qq, 2.0 * delta)?.powf(1.0 / q_exp);
    let n = grid.n as f64;
    let denom = delta.powf(-n / p_exp) * lp;
    Ok((sup / denom.max(f64::MIN_POSITIVE), lq))
}

/// Quotient of L² masses outside the pole ball over the total.
pub fn l2_tail_ratio(u: &VectorRadialField, delta: f64) -> Result<f64> {
    let total = u.l2_mass()?;
    if total <= 0.0 {
        return Err(Error::ZeroField);
    }
    let inside = u.ball_mass(0.0, delta, BallIntegrand::L2, None)?;
    Ok((total - inside) / total)
}

/// Rescaled zoom profile V(ρ) = μ^{n/2*} U(μρ) on a Euclidean radial grid,
/// with μ = sup^{-2*/n}; |V(0)| = 1 by construction.
pub fn rescale_extract(
    u: &VectorRadialField,
    rho_max: f64,
    out_intervals: usize,
) -> Result<(f64, VectorRadialField)> {
    let nrm = u.norm_profile();
    let (argmax, &sup) = nrm
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or(Error::ZeroField)?;
    if sup <= 0.0 {
        return Err(Error::ZeroField);
    }
    if argmax != 0 && nrm[argmax] > nrm[0] * (1.0 + 1e-12) {
        return Err(Error::SupNotAtPole { index: argmax });
    }
    let n = u.grid.n;
    let p = two_star(n);
    let mu = sup.powf(-p / n as f64);
    let amp = mu.powf(n as f64 / p);
    let out_grid = Arc::new(RadialGrid::euclidean_ball(n, rho_max, out_intervals)?);
    let comps: Vec<Vec<f64>> = u
        .components
        .iter()
        .map(|c| {
            out_grid
                .r
                .iter()
                .map(|&rho| amp * interp_clamped(&u.grid.r, c, mu * rho))
                .collect()
        })
        .collect();
    Ok((mu, VectorRadialField::new(out_grid, comps)?))
}

/// Catmull-Rom interpolation on the uniform source grid (linear in the two
/// boundary cells).
fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[m - 1] {
        return ys[m - 1];
    }
    let h = xs[1] - xs[0];
    let j = (((x - xs[0]) / h).floor() as usize).min(m - 2);
    let t = (x - xs[j]) / h;
    if j == 0 || j + 2 >= m {
        return ys[j] * (1.0 - t) + ys[j + 1] * t;
    }
    let (y0, y1, y2, y3) = (ys[j - 1], ys[j], ys[j + 1], ys[j + 2]);
    let a = -0.5 * y0 + 1.5 * y1 - 1.5 * y2 + 0.5 * y3;
    let b = y0 - 2.5 * y1 + 2.0 * y2 - 0.5 * y3;
    let c = 0.5 * (y2 - y0);
    a * t * t * t + b * t * t + c * t + y1
}

/// Fitted decay-envelope constant C = max over ρ ∈ [lo, hi] of |V(ρ)| ρ^{n-2-s}.
pub fn decay_envelope_constant(v: &VectorRadialField, s: f64, lo: f64, hi: f64) -> f64 {
    let n = v.grid.n as f64;
    let nrm = v.norm_profile();
    v.grid
        .r
        .iter()
        .zip(nrm.iter())
        .filter(|(&rho, _)| rho >= lo && rho <= hi)
        .map(|(&rho, &val)| val * rho.powf(n - 2.0 - s))
        .fold(0.0, f64::max)
}

impl RadialGrid {
    /// Largest pole distance representable on the grid.
    pub fn ball_distance_max(&self) -> f64 {
        match self.topology {
            crate::manifolds::GridTopology::Bounded => self.r_max,
            crate::manifolds::GridTopology::Periodic => self.r_max / 2.0,
        }
    }
}

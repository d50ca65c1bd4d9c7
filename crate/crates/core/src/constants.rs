//! Best constants: A₀(n), 𝒜₀(n,F), two-sided bounds for the second best
//! constant ℬ₀(n,F,G,g), geometric thresholds and the dichotomy classifier.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extremals::{bubble_derivative, bubble_value};
use crate::manifolds::{two_star, ModelManifold, RadialGrid};
use crate::potentials::{
    direction_grid, global_min_on_sphere, integrate_potential, m_fg, max_on_direction_sphere,
    max_over_manifold, HomogeneousPotential, MaximizerSet, SpatialPotential,
};
use crate::report::JsonValue;

/// Default bubble truncation radius for the Euclidean best constant.
pub const BUBBLE_R_CUT: f64 = 200.0;

/// Scalar Euclidean best constant A₀(n) as the bubble's Rayleigh quotient
/// (∫w^{2*})^{2/2*} / ∫|∇w|², by radial quadrature with an analytic
/// power-law tail correction beyond the truncation radius.
pub fn a0_euclidean(n: usize, grid_n: usize) -> Result<f64> {
    bubble_rayleigh_quotient(n, grid_n, 1.0, 1.0, BUBBLE_R_CUT)
}

/// Rayleigh quotient of the scaled bubble a·w(b·x) truncated at r_cut.
/// Invariant under (a, b) up to quadrature error.
pub fn bubble_rayleigh_quotient(
    n: usize,
    grid_n: usize,
    a: f64,
    b: f64,
    r_cut: f64,
) -> Result<f64> {
    if n < 3 {
        return Err(Error::DimensionTooLow(n));
    }
    let p = two_star(n);
    let x_cut = b.abs() * r_cut;
    // Unit-bubble integrals over [0, x_cut] in the scaled variable.
    let num_f = |x: f64| bubble_value(n, x).powf(p) * x.powi(n as i32 - 1);
    let den_f = |x: f64| bubble_derivative(n, x).powi(2) * x.powi(n as i32 - 1);
    let split = 2.0f64.min(x_cut);
    let half = (grid_n / 2).max(64);
    let mut num = simpson(&num_f, 0.0, split, half);
    let mut den = simpson(&den_f, 0.0, split, half);
    if x_cut > split {
        // Log substitution resolves the power-law decay.
        num += simpson(&|s: f64| num_f(s.exp()) * s.exp(), split.ln(), x_cut.ln(), half);
        den += simpson(&|s: f64| den_f(s.exp()) * s.exp(), split.ln(), x_cut.ln(), half);
    }
    let (tail_num, rem_num) = bubble_tail_num(n, x_cut);
    let (tail_den, rem_den) = bubble_tail_den(n, x_cut);
    num += tail_num;
    den += tail_den;
    let remainder = (rem_num / num).abs().max((rem_den / den).abs());
    if remainder > 1e-8 {
        return Err(Error::TailNotConverged { remainder });
    }
    let area = crate::manifolds::unit_sphere_volume(n - 1);
    // Amplitude and scale factors cancel analytically in the quotient; they
    // are kept to exercise the invariance numerically.
    let bn = b.abs().powi(n as i32);
    let mass = a.abs().powf(p) / bn * area * num;
    let dirichlet = a * a * b * b / bn * area * den;
    Ok(mass.powf(2.0 / p) / dirichlet)
}

/// ∫_R^∞ (1+x²)^{-n} x^{n-1} dx via the expansion x^{-n-1}(1 - n x^{-2} + ...);
/// returns (three-term value, magnitude of the first omitted term).
fn bubble_tail_num(n: usize, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let t1 = r.powf(-nf) / nf;
    let t2 = -nf * r.powf(-nf - 2.0) / (nf + 2.0);
    let t3 = nf * (nf + 1.0) / 2.0 * r.powf(-nf - 4.0) / (nf + 4.0);
    let rem = nf * (nf + 1.0) * (nf + 2.0) / 6.0 * r.powf(-nf - 6.0) / (nf + 6.0);
    (t1 + t2 + t3, rem)
}

/// ∫_R^∞ (w')² x^{n-1} dx = (n-2)² ∫_R^∞ x^{-(n-1)} (1+x^{-2})^{-n} dx expanded
/// the same way.
fn bubble_tail_den(n: usize, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let c = (nf - 2.0) * (nf - 2.0);
    let t1 = r.powf(-(nf - 2.0)) / (nf - 2.0);
    let t2 = -r.powf(-nf);
    let t3 = nf * (nf + 1.0) / 2.0 * r.powf(-nf - 2.0) / (nf + 2.0);
    let rem = c * nf * (nf + 1.0) * (nf + 2.0) / 6.0 * r.powf(-nf - 4.0) / (nf + 4.0);
    (c * (t1 + t2 + t3), rem)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n_half: usize) -> f64 {
    let n = 2 * n_half;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Vector best constant 𝒜₀(n,F) = M_F^{2/2*} A₀(n).
pub fn a0_vector(n: usize, f: &HomogeneousPotential, grid_n: usize) -> Result<f64> {
    let m_f = max_on_direction_sphere(f, 1e-9)?.m_f;
    Ok(m_f.powf(2.0 / two_star(n)) * a0_euclidean(n, grid_n)?)
}

/// Scalar second best constant on the round sphere: ω_n^{-2/n}.
pub fn b0_scalar_sphere(n: usize, grid_n: usize) -> Result<f64> {
    let omega = ModelManifold::RoundSphere { n }.volume(grid_n)?;
    Ok(omega.powf(-2.0 / n as f64))
}

/// Reference upper bounds for B₀(n,1,g) on two standard geometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceModel {
    /// S¹ × S^{n-1} with the product metric.
    ProductCircleSphere,
    /// Real projective space with the canonical metric.
    ProjectiveSpace,
}

pub fn reference_upper_bounds(n: usize, model: ReferenceModel, grid_n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::DimensionTooLow(n));
    }
    let nf = n as f64;
    let omega = ModelManifold::RoundSphere { n }.volume(grid_n)?;
    Ok(match model {
        ReferenceModel::ProductCircleSphere => {
            (1.0 + (nf - 2.0) * (nf - 2.0)) / (nf * (nf - 2.0) * omega.powf(2.0 / nf))
        }
        ReferenceModel::ProjectiveSpace => (nf + 2.0) / ((nf - 2.0) * omega.powf(2.0 / nf)),
    })
}

/// Scalar B₀(n,1,g) when usable for the model: exact on the round sphere;
/// optionally the conformal-class value on a conformal sphere.
pub fn scalar_b0(
    manifold: &ModelManifold,
    grid_n: usize,
    assume_conformal_scalar_b0: bool,
) -> Result<f64> {
    match manifold {
        ModelManifold::RoundSphere { n } => b0_scalar_sphere(*n, grid_n),
        ModelManifold::FlatTorus { .. } => Err(Error::UnknownScalarB0(
            "flat torus: the geometric bound degenerates to 0; only the trivial lower bound applies"
                .into(),
        )),
        ModelManifold::ConformalSphere { n, .. } => {
            if !assume_conformal_scalar_b0 {
                return Err(Error::UnknownScalarB0(
                    "conformal sphere: enable the conformal-class mode to use the curvature value"
                        .into(),
                ));
            }
            if *n < 4 {
                return Err(Error::UnknownScalarB0("conformal value needs n >= 4".into()));
            }
            let grid = manifold.grid(grid_n)?;
            let s = manifold.scalar_curvature_profile(&grid)?;
            let max_s = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let nf = *n as f64;
            Ok((nf - 2.0) / (4.0 * (nf - 1.0)) * a0_euclidean(*n, grid_n)? * max_s)
        }
    }
}

/// Precomputed data shared by the bound assembly and the classifier.
pub struct ConstantsContext {
    pub manifold: ModelManifold,
    pub grid: Arc<RadialGrid>,
    pub f: HomogeneousPotential,
    pub g: SpatialPotential,
    pub x_f: MaximizerSet,
    pub a0_n: f64,
    pub a0_nf: f64,
    pub scalar_curv: Vec<f64>,
    pub volume: f64,
    /// Treat the conformal-class curvature value as an exact scalar B₀.
    pub assume_conformal_scalar_b0: bool,
    grid_n: usize,
}

impl ConstantsContext {
    pub fn new(
        manifold: ModelManifold,
        grid_n: usize,
        f: HomogeneousPotential,
        g: SpatialPotential,
    ) -> Result<Self> {
        manifold.validate()?;
        let grid = manifold.grid(grid_n)?;
        let x_f = max_on_direction_sphere(&f, 1e-9)?;
        let n = manifold.dimension();
        let a0_n = a0_euclidean(n, grid_n)?;
        let a0_nf = x_f.m_f.powf(2.0 / two_star(n)) * a0_n;
        let scalar_curv = manifold.scalar_curvature_profile(&grid)?;
        let volume = grid.weights.iter().sum();
        Ok(ConstantsContext {
            manifold,
            grid,
            f,
            g,
            x_f,
            a0_n,
            a0_nf,
            scalar_curv,
            volume,
            assume_conformal_scalar_b0: false,
            grid_n,
        })
    }

    pub fn n(&self) -> usize {
        self.manifold.dimension()
    }

    pub fn m_f(&self) -> f64 {
        self.x_f.m_f
    }

    /// Representative maximizer directions (direction-grid subsample when the
    /// restriction is constant).
    pub fn representative_directions(&self) -> Vec<Vec<f64>> {
        if self.x_f.degenerate {
            let grid = direction_grid(self.f.k());
            let stride = (grid.points.len() / 128).max(1);
            grid.points.iter().step_by(stride).cloned().collect()
        } else {
            self.x_f.points.clone()
        }
    }

    /// sup over x and t₀ ∈ X_F of (n-2)/(4(n-1)) · 𝒜₀(n,F) S_g(x) / G(x,t₀).
    pub fn threshold_sup(&self) -> f64 {
        let reps = self.representative_directions();
        let mut sup = f64::NEG_INFINITY;
        for (i, &x) in self.grid.r.iter().enumerate() {
            for t0 in &reps {
                let g = self.g.eval_at(x, t0);
                let v = geometric_coefficient(self.n()) * self.a0_nf * self.scalar_curv[i] / g;
                sup = sup.max(v);
            }
        }
        sup
    }
}

fn geometric_coefficient(n: usize) -> f64 {
    let nf = n as f64;
    (nf - 2.0) / (4.0 * (nf - 1.0))
}

/// (n-2)/(4(n-1)) · 𝒜₀(n,F) · S_g(x) / m_{F,G}(x); carries an n < 4 warning
/// through `BestConstantReport`, not here.
pub fn geometric_threshold(ctx: &ConstantsContext, x: f64) -> Result<f64> {
    let m = m_fg(&ctx.g, x, &ctx.x_f)?;
    let s = ctx.manifold.scalar_curvature(&ctx.grid, x)?;
    Ok(geometric_coefficient(ctx.n()) * ctx.a0_nf * s / m)
}

/// The local-inequality coefficient 𝓑_ε = geometric threshold + ε.
pub fn b_epsilon(ctx: &ConstantsContext, x0: f64, epsilon: f64) -> Result<f64> {
    Ok(geometric_threshold(ctx, x0)? + epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    TrivialTestFunction,
    Geometric,
    Des1Lower,
    Des1Upper,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::TrivialTestFunction => "trivial-test-function",
            Provenance::Geometric => "geometric",
            Provenance::Des1Lower => "des1-lower",
            Provenance::Des1Upper => "des1-upper",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExactValue {
    pub value: f64,
    pub reason: String,
}

/// Two-sided bound report for ℬ₀(n,F,G,g) with per-bound provenance.
#[derive(Clone, Debug)]
pub struct BestConstantReport {
    pub n: usize,
    pub k: usize,
    pub a0_n: f64,
    pub m_f: f64,
    pub a0_nf: f64,
    pub b0_lower: Vec<(f64, Provenance)>,
    pub b0_upper: Vec<(f64, Provenance)>,
    pub exact: Option<ExactValue>,
    pub warnings: Vec<String>,
    pub consistent: bool,
}

impl BestConstantReport {
    pub fn max_lower(&self) -> f64 {
        self.b0_lower.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_upper(&self) -> Option<f64> {
        self.b0_upper
            .iter()
            .map(|(v, _)| *v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }

    pub fn to_json(&self, verdict: Option<&DichotomyVerdict>) -> JsonValue {
        use JsonValue as J;
        let mut bounds: Vec<JsonValue> = Vec::new();
        for (v, p) in &self.b0_lower {
            bounds.push(J::obj(vec![
                ("side", J::Str("lower".into())),
                ("value", J::Num(*v)),
                ("provenance", J::Str(p.as_str().into())),
            ]));
        }
        for (v, p) in &self.b0_upper {
            bounds.push(J::obj(vec![
                ("side", J::Str("upper".into())),
                ("value", J::Num(*v)),
                ("provenance", J::Str(p.as_str().into())),
            ]));
        }
        let mut fields = vec![
            ("n", J::Int(self.n as i64)),
            ("k", J::Int(self.k as i64)),
            ("A0_n", J::Num(self.a0_n)),
            ("M_F", J::Num(self.m_f)),
            ("A0_nF", J::Num(self.a0_nf)),
            ("bounds", J::Arr(bounds)),
            ("consistent", J::Bool(self.consistent)),
            (
                "warnings",
                J::Arr(self.warnings.iter().map(|w| J::Str(w.clone())).collect()),
            ),
        ];
        if let Some(e) = &self.exact {
            fields.push(("exact", J::Num(e.value)));
            fields.push(("exact_reason", J::Str(e.reason.clone())));
        }
        if let Some(v) = verdict {
            fields.push(("verdict", J::Str(v.verdict.as_str().into())));
            fields.push(("threshold_sup", J::Num(v.threshold_sup)));
        }
        J::Obj(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn to_csv(&self) -> crate::report::CsvTable {
        use crate::report::{CsvCell, CsvTable};
        let mut t = CsvTable::new(&["side", "value", "provenance"]);
        for (v, p) in &self.b0_lower {
            t.push_row(vec![
                CsvCell::Str("lower".into()),
                CsvCell::Num(*v),
                CsvCell::Str(p.as_str().into()),
            ]);
        }
        for (v, p) in &self.b0_upper {
            t.push_row(vec![
                CsvCell::Str("upper".into()),
                CsvCell::Num(*v),
                CsvCell::Str(p.as_str().into()),
            ]);
        }
        if let Some(e) = &self.exact {
            t.push_row(vec![
                CsvCell::Str("exact".into()),
                CsvCell::Num(e.value),
                CsvCell::Str(e.reason.clone()),
            ]);
        }
        t
    }
}

/// Assemble lower/upper bounds for ℬ₀ on the model manifold.
///
/// Lower bounds: the constant test map `t₀·1` gives
/// `M_F^{2/2*} v^{2/2*} / ∫G(x,t₀)dv` (the M_F factor comes from F(t₀) = M_F
/// and keeps the (θF, λG) covariance); the geometric bound for n ≥ 4; the
/// Des1 lower `M_F^{2/2*} B₀ / max_x G(x,t₀)` per stored maximizer when a
/// scalar B₀ is known. Upper: Des1 `M_F^{2/2*} B₀ / m_G`. The report is exact
/// when the Des1 bounds pinch.
pub fn b0_bounds(ctx: &ConstantsContext) -> Result<BestConstantReport> {
    let n = ctx.n();
    let p = two_star(n);
    let m_f_pow = ctx.m_f().powf(2.0 / p);
    let reps = ctx.representative_directions();
    let mut warnings = Vec::new();
    let mut lower: Vec<(f64, Provenance)> = Vec::new();
    let mut upper: Vec<(f64, Provenance)> = Vec::new();

    // Trivial test-function bound: best over representative maximizers.
    let mut best_trivial = f64::NEG_INFINITY;
    for t0 in &reps {
        let g_vals: Vec<f64> = ctx.grid.r.iter().map(|&x| ctx.g.eval_at(x, t0)).collect();
        let denom = ctx.grid.quadrature(&g_vals)?;
        best_trivial = best_trivial.max(m_f_pow * ctx.volume.powf(2.0 / p) / denom);
    }
    lower.push((best_trivial, Provenance::TrivialTestFunction));

    // Geometric bound (vacuous 0 on scalar-flat models).
    if n >= 4 {
        let sup = ctx.threshold_sup();
        lower.push((sup.max(0.0), Provenance::Geometric));
    } else {
        warnings.push("geometric lower bound requires n >= 4; skipped".into());
    }

    // Des1 bounds when a scalar B₀ is available.
    let m_g = global_min_on_sphere(&ctx.g, &ctx.grid.r);
    let mut exact = None;
    match scalar_b0(&ctx.manifold, ctx.grid_n, ctx.assume_conformal_scalar_b0) {
        Ok(b0) => {
            let mut pinch_at: Option<usize> = None;
            for (i, t0) in reps.iter().enumerate() {
                let max_g = max_over_manifold(&ctx.g, &ctx.grid.r, t0);
                lower.push((m_f_pow * b0 / max_g, Provenance::Des1Lower));
                if (max_g - m_g).abs() <= 1e-9 * m_g.abs() {
                    pinch_at = pinch_at.or(Some(i));
                }
            }
            upper.push((m_f_pow * b0 / m_g, Provenance::Des1Upper));
            if let Some(i) = pinch_at {
                exact = Some(ExactValue {
                    value: m_f_pow * b0 / m_g,
                    reason: format!(
                        "Des1 bounds pinch: m_G attained along the maximizer direction #{i}"
                    ),
                });
            }
        }
        Err(Error::UnknownScalarB0(msg)) => warnings.push(format!("no Des1 bounds: {msg}")),
        Err(e) => return Err(e),
    }

    let max_lower = lower.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
    let min_upper = upper.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
    let consistent = upper.is_empty() || max_lower <= min_upper * (1.0 + 1e-12);
    if !consistent {
        warnings.push(format!(
            "Inconsistent: max lower {max_lower:.12e} exceeds min upper {min_upper:.12e}"
        ));
    }
    if let Some(e) = &exact {
        if e.value < max_lower * (1.0 - 1e-12)
            || (!upper.is_empty() && e.value > min_upper * (1.0 + 1e-12))
        {
            warnings.push("exact value escapes the bound interval".into());
        }
    }
    if n < 5 {
        warnings.push("dichotomy theorems are established for n >= 5; verdicts carry over formally".into());
    }

    Ok(BestConstantReport {
        n,
        k: ctx.f.k(),
        a0_n: ctx.a0_n,
        m_f: ctx.m_f(),
        a0_nf: ctx.a0_nf,
        b0_lower: lower,
        b0_upper: upper,
        exact,
        warnings,
        consistent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Compactness hypothesis holds: lower bound strictly above the threshold.
    StrictlyAbove,
    /// The exact constant touches the geometric threshold within tolerance.
    TouchesWithin,
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::StrictlyAbove => "StrictlyAbove",
            Verdict::TouchesWithin => "TouchesWithin",
            Verdict::Undetermined => "Undetermined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DichotomyVerdict {
    pub threshold_sup: f64,
    pub max_lower: f64,
    pub min_upper: Option<f64>,
    pub exact: Option<f64>,
    pub verdict: Verdict,
    pub tol: f64,
    pub warnings: Vec<String>,
}

pub const DEFAULT_DICHOTOMY_TOL: f64 = 1e-4;

/// Classify the dichotomy: StrictlyAbove when the best lower bound exceeds
/// the threshold by at least `tol` (relative), TouchesWithin when the exact
/// value agrees with the threshold within `tol`, Undetermined otherwise.
pub fn classify_dichotomy(
    report: &BestConstantReport,
    ctx: &ConstantsContext,
    tol: f64,
) -> DichotomyVerdict {
    let threshold = ctx.threshold_sup();
    let max_lower = report.max_lower();
    let scale = max_lower.abs().max(threshold.abs()).max(f64::MIN_POSITIVE);
    let mut warnings = Vec::new();
    if ctx.n() < 5 {
        warnings.push("n < 5: outside the proven range of the dichotomy".into());
    }
    let verdict = if max_lower - threshold >= tol * scale {
        Verdict::StrictlyAbove
    } else if report
        .exact
        .as_ref()
        .is_some_and(|e| (e.value - threshold).abs() <= tol * threshold.abs().max(f64::MIN_POSITIVE))
    {
        Verdict::TouchesWithin
    } else {
        Verdict::Undetermined
    };
    DichotomyVerdict {
        threshold_sup: threshold,
        max_lower,
        min_upper: report.min_upper(),
        exact: report.exact.as_ref().map(|e| e.value),
        verdict,
        tol,
        warnings,
    }
}

/// Λ-normalize a constant direction map and return its F-mass 1 check value
/// (used by scenario plumbing and tests).
pub fn lambda_normalized_constant(
    ctx: &ConstantsContext,
    t0: &[f64],
) -> Result<(f64, f64)> {
    let f_t0 = ctx.f.evaluate(t0);
    let c = (f_t0 * ctx.volume).powf(-1.0 / two_star(ctx.n()));
    let field = crate::manifolds::VectorRadialField::constant(
        ctx.grid.clone(),
        &t0.iter().map(|&v| c * v).collect::<Vec<_>>(),
    )?;
    let mass = integrate_potential(&ctx.f, &field)?;
    Ok((c, mass))
}

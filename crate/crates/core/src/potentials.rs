//! Positive homogeneous potential functions F ∈ F_k and G ∈ G_k.
//!
//! A potential of degree p is represented by its restriction f to the unit
//! direction sphere, extended by `|t|^p f(t/|t|)`. Closed forms carry exact
//! gradients where they are C¹; merely continuous forms (ℓ¹-type norms,
//! |t_i||t_j| bilinears, sampled tables) can be mollified by `smooth`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifolds::VectorRadialField;

/// Number of direction samples used for brute-force seeding, per codomain dimension.
pub fn direction_sample_count(k: usize) -> usize {
    match k {
        0 | 1 => 2,
        2 => 4096,
        3 => 8192,
        _ => 100_000,
    }
}

#[derive(Clone, Debug)]
enum Form {
    /// |t|_q^degree
    LqNorm { q: f64 },
    /// Σ w_i |t_i|^degree
    WeightedPowerSum { weights: Vec<f64> },
    /// ⟨A t, t⟩^{degree/2} with A symmetric positive definite
    QuadraticForm { a: Vec<Vec<f64>> },
    /// (Σ A_ij |t_i| |t_j|)^{degree/2} with A_ij ≥ 0, diag > 0
    AbsBilinear { a: Vec<Vec<f64>> },
    /// k = 2 only: f sampled on a uniform periodic angle grid, linear interpolation
    SampledCircle { values: Vec<f64> },
    /// k = 2 only: truncated Fourier series of a mollified direction restriction
    SmoothedSeries { cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64> },
    /// k ≥ 3: mollification of `base` by a ball bump kernel of width `width`
    MollifiedBall { base: Box<HomogeneousPotential>, width: f64 },
}

/// A positive degree-p homogeneous function on R^k.
#[derive(Clone, Debug)]
pub struct HomogeneousPotential {
    k: usize,
    degree: f64,
    scale: f64,
    form: Form,
    label: String,
    /// Certified sup deviation of the direction restriction from the original,
    /// set by `smooth`.
    smoothing_deviation: Option<f64>,
}

impl HomogeneousPotential {
    /// F(t) = scale · |t|_q^degree.
    pub fn lq(k: usize, q: f64, degree: f64) -> Self {
        HomogeneousPotential {
            k,
            degree,
            scale: 1.0,
            form: Form::LqNorm { q },
            label: format!("|t|_{q}^{degree}"),
            smoothing_deviation: None,
        }
    }

    /// Euclidean norm power |t|^degree.
    pub fn norm2(k: usize, degree: f64) -> Self {
        Self::lq(k, 2.0, degree)
    }

    /// F(t) = Σ w_i |t_i|^degree.
    pub fn weighted_power_sum(weights: Vec<f64>, degree: f64) -> Self {
        HomogeneousPotential {
            k: weights.len(),
            degree,
            scale: 1.0,
            form: Form::WeightedPowerSum { weights },
            label: format!("sum w_i|t_i|^{degree}"),
            smoothing_deviation: None,
        }
    }

    /// F(t) = ⟨A t, t⟩^{degree/2}.
    pub fn quadratic_form(a: Vec<Vec<f64>>, degree: f64) -> Self {
        HomogeneousPotential {
            k: a.len(),
            degree,
            scale: 1.0,
            form: Form::QuadraticForm { a },
            label: format!("<At,t>^{}", degree / 2.0),
            smoothing_deviation: None,
        }
    }

    /// F(t) = (Σ A_ij |t_i||t_j|)^{degree/2}.
    pub fn abs_bilinear(a: Vec<Vec<f64>>, degree: f64) -> Self {
        HomogeneousPotential {
            k: a.len(),
            degree,
            scale: 1.0,
            form: Form::AbsBilinear { a },
            label: format!("(sum A|t||t|)^{}", degree / 2.0),
            smoothing_deviation: None,
        }
    }

    /// k = 2 direction restriction sampled on a uniform angle grid.
    pub fn sampled_circle(values: Vec<f64>, degree: f64) -> Self {
        HomogeneousPotential {
            k: 2,
            degree,
            scale: 1.0,
            form: Form::SampledCircle { values },
            label: "sampled".into(),
            smoothing_deviation: None,
        }
    }

    /// θ · P, preserving the argmax set.
    pub fn scaled(&self, theta: f64) -> Self {
        let mut out = self.clone();
        out.scale *= theta;
        out.label = format!("{}*{}", theta, out.label);
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn smoothing_deviation(&self) -> Option<f64> {
        self.smoothing_deviation
    }

    /// Evaluate |t|^degree f(t/|t|); zero at t = 0.
    pub fn evaluate(&self, t: &[f64]) -> f64 {
        debug_assert_eq!(t.len(), self.k);
        let norm = l2_norm(t);
        if norm == 0.0 {
            return 0.0;
        }
        self.scale
            * match &self.form {
                Form::LqNorm { q } => lq_norm(t, *q).powf(self.degree),
                Form::WeightedPowerSum { weights } => weights
                    .iter()
                    .zip(t.iter())
                    .map(|(w, x)| w * x.abs().powf(self.degree))
                    .sum(),
                Form::QuadraticForm { a } => quad_form(a, t).powf(self.degree / 2.0),
                Form::AbsBilinear { a } => abs_bilinear_sum(a, t).powf(self.degree / 2.0),
                Form::SampledCircle { values } => {
                    norm.powf(self.degree) * interp_periodic(values, t[1].atan2(t[0]))
                }
                Form::SmoothedSeries { cos_coeffs, sin_coeffs } => {
                    let theta = t[1].atan2(t[0]);
                    norm.powf(self.degree) * fourier_eval(cos_coeffs, sin_coeffs, theta).0
                }
                Form::MollifiedBall { base, width } => {
                    let theta: Vec<f64> = t.iter().map(|x| x / norm).collect();
                    norm.powf(self.degree) * ball_mollify(base, *width, &theta).0
                }
            }
    }

    /// True when the form carries an exact C¹ gradient.
    pub fn has_gradient(&self) -> bool {
        match &self.form {
            Form::LqNorm { q } => *q >= 2.0,
            Form::WeightedPowerSum { .. } | Form::QuadraticForm { .. } => true,
            Form::AbsBilinear { .. } | Form::SampledCircle { .. } => false,
            Form::SmoothedSeries { .. } | Form::MollifiedBall { .. } => true,
        }
    }

    /// ∇F(t); `None` for merely continuous forms. Gradient at 0 is 0 (p > 1).
    pub fn gradient(&self, t: &[f64]) -> Option<Vec<f64>> {
        if !self.has_gradient() {
            return None;
        }
        let norm = l2_norm(t);
        if norm == 0.0 {
            return Some(vec![0.0; self.k]);
        }
        let p = self.degree;
        let g = match &self.form {
            Form::LqNorm { q } => {
                let nq = lq_norm(t, *q);
                if nq == 0.0 {
                    return Some(vec![0.0; self.k]);
                }
                t.iter()
                    .map(|&x| {
                        p * nq.powf(p - *q) * x.abs().powf(*q - 1.0) * x.signum()
                    })
                    .collect()
            }
            Form::WeightedPowerSum { weights } => weights
                .iter()
                .zip(t.iter())
                .map(|(w, &x)| w * p * x.abs().powf(p - 1.0) * x.signum())
                .collect(),
            Form::QuadraticForm { a } => {
                let qv = quad_form(a, t);
                let at = mat_vec(a, t);
                at.iter().map(|&v| p * qv.powf(p / 2.0 - 1.0) * v).collect()
            }
            Form::SmoothedSeries { cos_coeffs, sin_coeffs } => {
                let theta = t[1].atan2(t[0]);
                let (f, df) = fourier_eval(cos_coeffs, sin_coeffs, theta);
                let nm = norm.powf(p - 2.0);
                vec![
                    nm * (p * f * t[0] - df * t[1]),
                    nm * (p * f * t[1] + df * t[0]),
                ]
            }
            Form::MollifiedBall { base, width } => {
                let theta: Vec<f64> = t.iter().map(|x| x / norm).collect();
                let (f, grad_f) = ball_mollify(base, *width, &theta);
                // ∇(|t|^p f(θ)) = p|t|^{p-1} f θ + |t|^{p-1} (I - θθᵀ) ∇f
                let dot: f64 = theta.iter().zip(grad_f.iter()).map(|(a, b)| a * b).sum();
                let nm = norm.powf(p - 1.0);
                theta
                    .iter()
                    .zip(grad_f.iter())
                    .map(|(&th, &gf)| nm * (p * f * th + (gf - dot * th)))
                    .collect()
            }
            Form::AbsBilinear { .. } | Form::SampledCircle { .. } => unreachable!(),
        };
        Some(g.into_iter().map(|v: f64| v * self.scale).collect())
    }

    /// JSON descriptor {kind, k, degree, params | sampled direction table}.
    pub fn descriptor(&self) -> crate::report::JsonValue {
        use crate::report::JsonValue as J;
        let mut fields: Vec<(String, J)> = vec![
            ("k".into(), J::Int(self.k as i64)),
            ("degree".into(), J::Num(self.degree)),
            ("scale".into(), J::Num(self.scale)),
        ];
        let kind = match &self.form {
            Form::LqNorm { q } => {
                fields.push(("q".into(), J::Num(*q)));
                "lq"
            }
            Form::WeightedPowerSum { weights } => {
                fields.push(("weights".into(), J::Arr(weights.iter().map(|&w| J::Num(w)).collect())));
                "weighted-power-sum"
            }
            Form::QuadraticForm { a } => {
                fields.push(("matrix".into(), matrix_json(a)));
                "quadratic-form"
            }
            Form::AbsBilinear { a } => {
                fields.push(("matrix".into(), matrix_json(a)));
                "abs-bilinear"
            }
            Form::SampledCircle { values } => {
                fields.push(("samples".into(), J::Int(values.len() as i64)));
                "sampled-circle"
            }
            Form::SmoothedSeries { cos_coeffs, .. } => {
                fields.push(("modes".into(), J::Int(cos_coeffs.len() as i64)));
                fields.push((
                    "deviation".into(),
                    J::Num(self.smoothing_deviation.unwrap_or(0.0)),
                ));
                "smoothed-series"
            }
            Form::MollifiedBall { width, .. } => {
                fields.push(("width".into(), J::Num(*width)));
                "mollified"
            }
        };
        fields.insert(0, ("kind".into(), J::Str(kind.into())));
        J::Obj(fields)
    }

    /// Sampled direction table as CSV rows (k = 2: theta, f).
    pub fn direction_table_csv(&self, samples: usize) -> String {
        let mut out = String::from("theta,f\n");
        for i in 0..samples {
            let theta = TAU * i as f64 / samples as f64;
            let t = [theta.cos(), theta.sin()];
            let v = if self.k == 2 { self.evaluate(&t) } else { f64::NAN };
            out.push_str(&format!("{theta:.12e},{v:.12e}\n"));
        }
        out
    }
}

fn matrix_json(a: &[Vec<f64>]) -> crate::report::JsonValue {
    use crate::report::JsonValue as J;
    J::Arr(
        a.iter()
            .map(|row| J::Arr(row.iter().map(|&v| J::Num(v)).collect()))
            .collect(),
    )
}

fn l2_norm(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lq_norm(t: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        return l2_norm(t);
    }
    t.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

fn quad_form(a: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, &aij) in row.iter().enumerate() {
            acc += aij * t[i] * t[j];
        }
    }
    acc
}

fn abs_bilinear_sum(a: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, &aij) in row.iter().enumerate() {
            acc += aij * t[i].abs() * t[j].abs();
        }
    }
    acc
}

fn mat_vec(a: &[Vec<f64>], t: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(t.iter()).map(|(x, y)| x * y).sum())
        .collect()
}

fn interp_periodic(values: &[f64], theta: f64) -> f64 {
    let n = values.len() as f64;
    let pos = (theta.rem_euclid(TAU)) / TAU * n;
    let i = pos.floor() as usize % values.len();
    let frac = pos - pos.floor();
    let j = (i + 1) % values.len();
    values[i] * (1.0 - frac) + values[j] * frac
}

fn fourier_eval(cos_coeffs: &[f64], sin_coeffs: &[f64], theta: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut df = 0.0;
    for (m, (&am, &bm)) in cos_coeffs.iter().zip(sin_coeffs.iter()).enumerate() {
        let mf = m as f64;
        let (s, c) = (mf * theta).sin_cos();
        f += am * c + bm * s;
        df += mf * (bm * c - am * s);
    }
    (f, df)
}

/// Mollified direction value and its ambient gradient at a unit vector θ:
/// (H₀ * φ_w)(θ) where φ_w is the normalized bump on the w-ball.
fn ball_mollify(base: &HomogeneousPotential, width: f64, theta: &[f64]) -> (f64, Vec<f64>) {
    let k = base.k();
    let nodes_per_axis: usize = if k <= 3 { 9 } else { 7 };
    let h = 2.0 * width / (nodes_per_axis - 1) as f64;
    let simpson: Vec<f64> = (0..nodes_per_axis)
        .map(|i| {
            if i == 0 || i == nodes_per_axis - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect();
    let mut mass = 0.0;
    let mut val = 0.0;
    let mut grad = vec![0.0; k];
    let mut idx = vec![0usize; k];
    let total = nodes_per_axis.pow(k as u32);
    let mut y = vec![0.0; k];
    let mut shifted = vec![0.0; k];
    for flat in 0..total {
        let mut rem = flat;
        let mut wgt = 1.0;
        for d in 0..k {
            idx[d] = rem % nodes_per_axis;
            rem /= nodes_per_axis;
            wgt *= simpson[idx[d]] * h / 3.0;
            y[d] = -width + idx[d] as f64 * h;
        }
        let rho2: f64 = y.iter().map(|v| (v / width) * (v / width)).sum();
        if rho2 >= 1.0 {
            continue;
        }
        let bump = (1.0 - rho2).powi(3);
        for d in 0..k {
            shifted[d] = theta[d] - y[d];
        }
        let hv = base.evaluate(&shifted);
        mass += wgt * bump;
        val += wgt * bump * hv;
        // ∇φ(y) = -6 y / w² (1-|y/w|²)²
        let dbump = -6.0 * (1.0 - rho2).powi(2) / (width * width);
        for d in 0..k {
            grad[d] += wgt * dbump * y[d] * hv;
        }
    }
    let val = val / mass;
    let grad = grad.iter().map(|g| g / mass).collect();
    (val, grad)
}

// ---------------------------------------------------------------------------
// Direction grids and maximization
// ---------------------------------------------------------------------------

/// Brute-force seeding grid of unit directions.
#[derive(Clone, Debug)]
pub struct DirectionGrid {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
}

/// Uniform angles for k = 2, Fibonacci lattice for k = 3, quasi-random
/// rejection sample for k ≥ 4.
pub fn direction_grid(k: usize) -> DirectionGrid {
    let count = direction_sample_count(k);
    let points = match k {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let theta = TAU * i as f64 / count as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let phi = TAU * (i as f64 / golden).fract();
                    let s = (1.0 - z * z).sqrt();
                    vec![s * phi.cos(), s * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            // Kronecker low-discrepancy sequence in [-1,1]^k, rejected to the
            // unit ball and pushed to the sphere.
            let alphas = kronecker_alphas(k);
            let mut pts = Vec::with_capacity(count);
            let mut i = 0u64;
            while pts.len() < count {
                i += 1;
                let y: Vec<f64> = alphas
                    .iter()
                    .map(|a| 2.0 * ((i as f64 * a).fract()) - 1.0)
                    .collect();
                let nrm = l2_norm(&y);
                if nrm > 1.0 || nrm < 1e-3 {
                    continue;
                }
                pts.push(y.iter().map(|v| v / nrm).collect());
            }
            pts
        }
    };
    DirectionGrid { k, points }
}

fn kronecker_alphas(k: usize) -> Vec<f64> {
    // Generalized golden ratios: x solving x^{k+1} = x + 1.
    let mut x = 1.5f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (k as f64 + 1.0));
    }
    (1..=k).map(|j| (1.0 / x.powi(j as i32)).fract()).collect()
}

/// The set X_F of direction-sphere maximizers with its value M_F.
#[derive(Clone, Debug)]
pub struct MaximizerSet {
    pub m_f: f64,
    pub points: Vec<Vec<f64>>,
    pub tolerance: f64,
    /// Constant direction restriction: every direction maximizes.
    pub degenerate: bool,
}

impl MaximizerSet {
    pub fn is_member(&self, f: &HomogeneousPotential, t: &[f64]) -> bool {
        f.evaluate(t) >= self.m_f * (1.0 - self.tolerance)
    }
}

/// Maximize the direction restriction by grid seeding plus local pattern ascent.
pub fn max_on_direction_sphere(
    p: &HomogeneousPotential,
    refine_tol: f64,
) -> Result<MaximizerSet> {
    let grid = direction_grid(p.k());
    max_on_direction_sphere_with(p, refine_tol, &grid)
}

pub fn max_on_direction_sphere_with(
    p: &HomogeneousPotential,
    refine_tol: f64,
    grid: &DirectionGrid,
) -> Result<MaximizerSet> {
    let vals: Vec<f64> = grid.points.iter().map(|t| p.evaluate(t)).collect();
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &v in &vals {
        if v <= 0.0 {
            return Err(Error::NonPositivePotential { value: v });
        }
        max = max.max(v);
        min = min.min(v);
    }
    if max - min <= 1e-12 * max {
        return Ok(MaximizerSet {
            m_f: max,
            points: Vec::new(),
            tolerance: refine_tol.max(1e-12),
            degenerate: true,
        });
    }

    // Seeds: local maxima on the circle for k = 2; top values otherwise.
    let mut seeds: Vec<usize> = if p.k() == 2 {
        (0..vals.len())
            .filter(|&i| {
                let prev = vals[(i + vals.len() - 1) % vals.len()];
                let next = vals[(i + 1) % vals.len()];
                vals[i] >= prev && vals[i] >= next
            })
            .collect()
    } else {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
        order.truncate(64);
        order
    };
    seeds.retain(|&i| vals[i] >= max * (1.0 - 1e-3));
    if seeds.is_empty() {
        seeds.push(
            (0..vals.len())
                .max_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap())
                .unwrap(),
        );
    }

    let step0 = match p.k() {
        2 => TAU / grid.points.len() as f64,
        _ => (4.0 / grid.points.len() as f64).powf(1.0 / (p.k() as f64 - 1.0)),
    };
    let mut refined: Vec<(Vec<f64>, f64)> = seeds
        .iter()
        .map(|&i| pattern_ascent(p, &grid.points[i], step0, refine_tol))
        .collect();
    let m_f = refined.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);

    let band = refine_tol.max(1e-9);
    refined.retain(|(_, v)| *v >= m_f * (1.0 - band));
    refined.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (t, _) in refined {
        if points
            .iter()
            .all(|q| q.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() > 1e-4)
        {
            points.push(t);
        }
    }
    Ok(MaximizerSet { m_f, points, tolerance: band, degenerate: false })
}

/// Derivative-free ascent on the sphere: move along tangent stencil directions,
/// halving the radius on failure.
fn pattern_ascent(
    p: &HomogeneousPotential,
    start: &[f64],
    step0: f64,
    tol: f64,
) -> (Vec<f64>, f64) {
    let k = p.k();
    let mut point = start.to_vec();
    let mut value = p.evaluate(&point);
    let mut step = step0;
    let floor = tol.max(1e-12);
    let mut iters = 0;
    while step > floor && iters < 400 {
        iters += 1;
        let basis = tangent_basis(&point);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for b in &basis {
            for sgn in [1.0, -1.0] {
                let mut cand: Vec<f64> = point
                    .iter()
                    .zip(b.iter())
                    .map(|(x, e)| x + sgn * step * e)
                    .collect();
                let nrm = l2_norm(&cand);
                cand.iter_mut().for_each(|v| *v /= nrm);
                let cv = p.evaluate(&cand);
                if cv > value && best.as_ref().map_or(true, |(_, bv)| cv > *bv) {
                    best = Some((cand, cv));
                }
            }
        }
        match best {
            Some((cand, cv)) => {
                point = cand;
                value = cv;
            }
            None => step *= 0.5,
        }
        let _ = k;
    }
    (point, value)
}

fn tangent_basis(point: &[f64]) -> Vec<Vec<f64>> {
    let k = point.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        // Remove the radial part, then orthogonalize against earlier vectors.
        let dot: f64 = e.iter().zip(point.iter()).map(|(a, b)| a * b).sum();
        for (ev, pv) in e.iter_mut().zip(point.iter()) {
            *ev -= dot * pv;
        }
        for b in &basis {
            let d: f64 = e.iter().zip(b.iter()).map(|(a, c)| a * c).sum();
            for (ev, bv) in e.iter_mut().zip(b.iter()) {
                *ev -= d * bv;
            }
        }
        let nrm = l2_norm(&e);
        if nrm > 1e-8 {
            e.iter_mut().for_each(|v| *v /= nrm);
            basis.push(e);
            if basis.len() == k - 1 {
                break;
            }
        }
    }
    basis
}

// ---------------------------------------------------------------------------
// Spatial potentials G(x, t)
// ---------------------------------------------------------------------------

/// Radial coefficient profile entering x-dependent potentials.
#[derive(Clone, Debug)]
pub enum RadialCoeff {
    Const(f64),
    /// a + b cos r
    CosAffine { a: f64, b: f64 },
    Table { rs: Vec<f64>, vals: Vec<f64> },
}

impl RadialCoeff {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialCoeff::Const(c) => *c,
            RadialCoeff::CosAffine { a, b } => a + b * r.cos(),
            RadialCoeff::Table { rs, vals } => {
                if r <= rs[0] {
                    vals[0]
                } else if r >= rs[rs.len() - 1] {
                    vals[vals.len() - 1]
                } else {
                    let j = rs.partition_point(|&x| x < r).max(1);
                    let t = (r - rs[j - 1]) / (rs[j] - rs[j - 1]);
                    vals[j - 1] * (1.0 - t) + vals[j] * t
                }
            }
        }
    }

    fn range_on(&self, rs: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &r in rs {
            let v = self.eval(r);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

#[derive(Clone, Debug)]
enum SpatialKind {
    /// No x-dependence.
    Uniform(HomogeneousPotential),
    /// β(x) · base(t)
    Weighted { beta: RadialCoeff, base: HomogeneousPotential },
    /// Σ A_ij(x) |t_i||t_j|, degree 2
    AbsBilinearX { coeffs: Vec<Vec<RadialCoeff>> },
}

/// Degree-2 (in t) potential G(x, t) on the product of a radial manifold and R^k.
#[derive(Clone, Debug)]
pub struct SpatialPotential {
    k: usize,
    kind: SpatialKind,
    label: String,
}

impl SpatialPotential {
    pub fn uniform(p: HomogeneousPotential) -> Self {
        let label = format!("G(t)={}", p.label());
        SpatialPotential { k: p.k(), kind: SpatialKind::Uniform(p), label }
    }

    pub fn weighted(beta: RadialCoeff, base: HomogeneousPotential) -> Self {
        let label = format!("beta(x)*{}", base.label());
        SpatialPotential { k: base.k(), kind: SpatialKind::Weighted { beta, base }, label }
    }

    pub fn abs_bilinear_x(coeffs: Vec<Vec<RadialCoeff>>) -> Self {
        let k = coeffs.len();
        SpatialPotential { k, kind: SpatialKind::AbsBilinearX { coeffs }, label: "sum A_ij(x)|t_i||t_j|".into() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn degree(&self) -> f64 {
        2.0
    }

    /// The degree-2 homogeneous slice G(x, ·).
    pub fn potential_at(&self, x: f64) -> HomogeneousPotential {
        match &self.kind {
            SpatialKind::Uniform(p) => p.clone(),
            SpatialKind::Weighted { beta, base } => base.scaled(beta.eval(x)),
            SpatialKind::AbsBilinearX { coeffs } => {
                let a: Vec<Vec<f64>> = coeffs
                    .iter()
                    .map(|row| row.iter().map(|c| c.eval(x)).collect())
                    .collect();
                HomogeneousPotential::abs_bilinear(a, 2.0)
            }
        }
    }

    pub fn eval_at(&self, x: f64, t: &[f64]) -> f64 {
        match &self.kind {
            SpatialKind::Uniform(p) => p.evaluate(t),
            SpatialKind::Weighted { beta, base } => beta.eval(x) * base.evaluate(t),
            SpatialKind::AbsBilinearX { coeffs } => {
                let mut acc = 0.0;
                for (i, row) in coeffs.iter().enumerate() {
                    for (j, c) in row.iter().enumerate() {
                        acc += c.eval(x) * t[i].abs() * t[j].abs();
                    }
                }
                acc
            }
        }
    }

    pub fn has_gradient(&self) -> bool {
        match &self.kind {
            SpatialKind::Uniform(p) => p.has_gradient(),
            SpatialKind::Weighted { base, .. } => base.has_gradient(),
            SpatialKind::AbsBilinearX { .. } => false,
        }
    }

    pub fn grad_at(&self, x: f64, t: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            SpatialKind::Uniform(p) => p.gradient(t),
            SpatialKind::Weighted { beta, base } => {
                let b = beta.eval(x);
                base.gradient(t).map(|g| g.into_iter().map(|v| v * b).collect())
            }
            SpatialKind::AbsBilinearX { .. } => None,
        }
    }

    /// Smooth the t-dependence (Prop-style mollification of the base form).
    /// Genuinely x-dependent non-C¹ kinds are unsupported.
    pub fn smoothed(&self, epsilon: f64) -> Result<SpatialPotential> {
        if self.has_gradient() {
            return Ok(self.clone());
        }
        match &self.kind {
            SpatialKind::Uniform(p) => Ok(SpatialPotential::uniform(smooth(p, epsilon)?)),
            SpatialKind::Weighted { beta, base } => {
                Ok(SpatialPotential::weighted(beta.clone(), smooth(base, epsilon)?))
            }
            SpatialKind::AbsBilinearX { coeffs } => {
                // Constant-coefficient bilinears reduce to a uniform slice.
                let constant = coeffs.iter().all(|row| {
                    row.iter().all(|c| matches!(c, RadialCoeff::Const(_)))
                });
                if constant {
                    let slice = self.potential_at(0.0);
                    Ok(SpatialPotential::uniform(smooth(&slice, epsilon)?))
                } else {
                    Err(Error::MissingGradient(self.label.clone()))
                }
            }
        }
    }

    /// Scale by λ.
    pub fn scaled(&self, lambda: f64) -> SpatialPotential {
        match &self.kind {
            SpatialKind::Uniform(p) => SpatialPotential::uniform(p.scaled(lambda)),
            SpatialKind::Weighted { beta, base } => {
                SpatialPotential::weighted(beta.clone(), base.scaled(lambda))
            }
            SpatialKind::AbsBilinearX { coeffs } => {
                let scaled = coeffs
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|c| match c {
                                RadialCoeff::Const(v) => RadialCoeff::Const(v * lambda),
                                RadialCoeff::CosAffine { a, b } => {
                                    RadialCoeff::CosAffine { a: a * lambda, b: b * lambda }
                                }
                                RadialCoeff::Table { rs, vals } => RadialCoeff::Table {
                                    rs: rs.clone(),
                                    vals: vals.iter().map(|v| v * lambda).collect(),
                                },
                            })
                            .collect()
                    })
                    .collect();
                SpatialPotential::abs_bilinear_x(scaled)
            }
        }
    }
}

/// m_{F,G}(x) = min over the stored maximizer points of G(x, ·); for the
/// degenerate whole-sphere set the minimum ranges over the direction grid.
pub fn m_fg(g: &SpatialPotential, x: f64, x_f: &MaximizerSet) -> Result<f64> {
    if x_f.degenerate {
        let grid = direction_grid(g.k());
        return Ok(grid
            .points
            .iter()
            .map(|t| g.eval_at(x, t))
            .fold(f64::INFINITY, f64::min));
    }
    if x_f.points.is_empty() {
        return Err(Error::EmptyMaximizerSet);
    }
    Ok(x_f
        .points
        .iter()
        .map(|t| g.eval_at(x, t))
        .fold(f64::INFINITY, f64::min))
}

/// m_G = min of G over the product of the manifold sample grid and the
/// direction grid.
pub fn global_min_on_sphere(g: &SpatialPotential, manifold_rs: &[f64]) -> f64 {
    let dirs = direction_grid(g.k());
    match &g.kind {
        SpatialKind::Uniform(p) => dirs
            .points
            .iter()
            .map(|t| p.evaluate(t))
            .fold(f64::INFINITY, f64::min),
        SpatialKind::Weighted { beta, base } => {
            let (beta_min, _) = beta.range_on(manifold_rs);
            let base_min = dirs
                .points
                .iter()
                .map(|t| base.evaluate(t))
                .fold(f64::INFINITY, f64::min);
            beta_min * base_min
        }
        SpatialKind::AbsBilinearX { .. } => {
            let stride = (manifold_rs.len() * dirs.points.len() / 20_000_000).max(1);
            let mut min = f64::INFINITY;
            for x in manifold_rs.iter().step_by(stride) {
                for t in &dirs.points {
                    min = min.min(g.eval_at(*x, t));
                }
            }
            min
        }
    }
}

/// max of G over the manifold sample grid at a fixed direction.
pub fn max_over_manifold(g: &SpatialPotential, manifold_rs: &[f64], t: &[f64]) -> f64 {
    manifold_rs
        .iter()
        .map(|&x| g.eval_at(x, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Smoothing (C¹ approximation of merely continuous potentials)
// ---------------------------------------------------------------------------

const SMOOTH_TABLE: usize = 4096;
const SMOOTH_CHECK: usize = 16384;

/// Replace a merely continuous potential by a C¹ one whose direction
/// restriction deviates by at most ε in sup norm, certified on a dense
/// sample grid. C¹ inputs are returned unchanged with certificate 0.
pub fn smooth(h0: &HomogeneousPotential, epsilon: f64) -> Result<HomogeneousPotential> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("smoothing epsilon must be > 0, got {epsilon}")));
    }
    if h0.has_gradient() {
        let mut out = h0.clone();
        out.smoothing_deviation = Some(0.0);
        return Ok(out);
    }
    match h0.k() {
        2 => smooth_circle(h0, epsilon),
        _ => smooth_ball(h0, epsilon),
    }
}

fn smooth_circle(h0: &HomogeneousPotential, epsilon: f64) -> Result<HomogeneousPotential> {
    let n = SMOOTH_TABLE;
    let f0: Vec<f64> = (0..n)
        .map(|i| {
            let theta = TAU * i as f64 / n as f64;
            h0.evaluate(&[theta.cos(), theta.sin()])
        })
        .collect();
    // Real DFT of the sample table.
    let modes = n / 2;
    let mut a = vec![0.0; modes];
    let mut b = vec![0.0; modes];
    for m in 0..modes {
        let mut ca = 0.0;
        let mut cb = 0.0;
        for (i, &v) in f0.iter().enumerate() {
            let ang = TAU * (m * i) as f64 / n as f64;
            ca += v * ang.cos();
            cb += v * ang.sin();
        }
        let norm = if m == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
        a[m] = ca * norm;
        b[m] = cb * norm;
    }

    let floor_width = 4.0 * TAU / n as f64;
    let mut width = PI / 4.0;
    let mut best_dev = f64::INFINITY;
    while width >= floor_width {
        let atten: Vec<f64> = (0..modes).map(|m| bump_attenuation(m as f64, width)).collect();
        let keep = atten
            .iter()
            .rposition(|&t| t.abs() > 1e-14)
            .map_or(1, |p| p + 1);
        let ac: Vec<f64> = a[..keep].iter().zip(&atten[..keep]).map(|(x, t)| x * t).collect();
        let bc: Vec<f64> = b[..keep].iter().zip(&atten[..keep]).map(|(x, t)| x * t).collect();
        let mut dev: f64 = 0.0;
        let mut positive = true;
        for i in 0..SMOOTH_CHECK {
            let theta = TAU * i as f64 / SMOOTH_CHECK as f64;
            let (v, _) = fourier_eval(&ac, &bc, theta);
            if v <= 0.0 {
                positive = false;
                break;
            }
            let truth = h0.evaluate(&[theta.cos(), theta.sin()]);
            dev = dev.max((v - truth).abs());
        }
        if positive {
            best_dev = best_dev.min(dev);
            if dev <= epsilon {
                let mut out = HomogeneousPotential {
                    k: 2,
                    degree: h0.degree(),
                    scale: 1.0,
                    form: Form::SmoothedSeries { cos_coeffs: ac, sin_coeffs: bc },
                    label: format!("smoothed({})", h0.label()),
                    smoothing_deviation: Some(dev),
                };
                out.smoothing_deviation = Some(dev);
                return Ok(out);
            }
        }
        width *= 0.5;
    }
    Err(Error::SmoothingFailed { requested: epsilon, best: best_dev })
}

/// Attenuation of mode m under circular convolution with the normalized bump
/// kernel of half-width w (computed by quadrature).
fn bump_attenuation(m: f64, w: f64) -> f64 {
    let nodes = 65;
    let h = 2.0 * w / (nodes - 1) as f64;
    let mut mass = 0.0;
    let mut val = 0.0;
    for i in 0..nodes {
        let x = -w + i as f64 * h;
        let c = if i == 0 || i == nodes - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let kern = (1.0 - (x / w) * (x / w)).max(0.0).powi(3);
        mass += c * kern;
        val += c * kern * (m * x).cos();
    }
    val / mass
}

fn smooth_ball(h0: &HomogeneousPotential, epsilon: f64) -> Result<HomogeneousPotential> {
    let grid = direction_grid(h0.k());
    let check: Vec<&Vec<f64>> = grid.points.iter().step_by(4.max(grid.points.len() / 4096)).collect();
    let mut width = 0.5;
    let mut best_dev = f64::INFINITY;
    while width >= 1e-3 {
        let probe = HomogeneousPotential {
            k: h0.k(),
            degree: h0.degree(),
            scale: 1.0,
            form: Form::MollifiedBall { base: Box::new(h0.clone()), width },
            label: format!("smoothed({})", h0.label()),
            smoothing_deviation: None,
        };
        let mut dev: f64 = 0.0;
        let mut positive = true;
        for t in &check {
            let v = probe.evaluate(t);
            if v <= 0.0 {
                positive = false;
                break;
            }
            dev = dev.max((v - h0.evaluate(t)).abs());
        }
        if positive {
            best_dev = best_dev.min(dev);
            if dev <= epsilon {
                let mut out = probe;
                out.smoothing_deviation = Some(dev);
                return Ok(out);
            }
        }
        width *= 0.5;
    }
    Err(Error::SmoothingFailed { requested: epsilon, best: best_dev })
}

// ---------------------------------------------------------------------------
// Brézis–Lieb machinery
// ---------------------------------------------------------------------------

/// The constant C(ε) = M / δ(ε)^p making |F(s+t) - F(s)| ≤ ε|s|^p + C|t|^p,
/// with M = max of F on the closed 2-ball and δ a sampled continuity modulus.
#[derive(Clone, Debug)]
pub struct BrezisLiebConstant {
    pub c: f64,
    pub delta: f64,
    pub m: f64,
    pub epsilon: f64,
}

pub fn brezis_lieb_constant(
    f: &HomogeneousPotential,
    epsilon: f64,
    seed: u64,
) -> Result<BrezisLiebConstant> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument("epsilon must be > 0".into()));
    }
    let p = f.degree();
    let grid = direction_grid(f.k());
    let m_f = grid
        .points
        .iter()
        .map(|t| f.evaluate(t))
        .fold(f64::NEG_INFINITY, f64::max)
        * (1.0 + 1e-4);
    let m = 2f64.powf(p) * m_f;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 20_000;
    let passes = |delta: f64, rng: &mut ChaCha8Rng| -> bool {
        for _ in 0..samples {
            let a = random_in_ball(rng, f.k(), 2.0);
            let d = random_in_ball(rng, f.k(), delta);
            let mut b = a.clone();
            for (bi, di) in b.iter_mut().zip(d.iter()) {
                *bi += di;
            }
            if l2_norm(&b) > 2.0 {
                continue;
            }
            if (f.evaluate(&b) - f.evaluate(&a)).abs() > epsilon {
                return false;
            }
        }
        true
    };

    if !passes(1e-9, &mut rng) {
        return Err(Error::ModulusNotFound { epsilon });
    }
    let mut lo = 1e-9;
    let mut hi = 1.0 - 1e-12;
    if passes(hi, &mut rng) {
        lo = hi;
    } else {
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if passes(mid, &mut rng) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    // Halve the sampled modulus as a safety margin against unsampled pairs.
    let delta = 0.5 * lo;
    Ok(BrezisLiebConstant { c: m / delta.powf(p), delta, m, epsilon })
}

impl BrezisLiebConstant {
    /// Count violations of |F(s+t) - F(s)| ≤ ε|s|^p + C|t|^p on random pairs.
    pub fn verify(&self, f: &HomogeneousPotential, n_pairs: usize, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = f.degree();
        let mut violations = 0;
        for _ in 0..n_pairs {
            let scale_s = 10f64.powf(rng.gen_range(-3.0..3.0));
            let scale_t = 10f64.powf(rng.gen_range(-3.0..3.0));
            let s = random_in_ball(&mut rng, f.k(), scale_s);
            let t = random_in_ball(&mut rng, f.k(), scale_t);
            let st: Vec<f64> = s.iter().zip(t.iter()).map(|(a, b)| a + b).collect();
            let lhs = (f.evaluate(&st) - f.evaluate(&s)).abs();
            let rhs = self.epsilon * l2_norm(&s).powf(p) + self.c * l2_norm(&t).powf(p);
            if lhs > rhs * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        violations
    }
}

fn random_in_ball(rng: &mut ChaCha8Rng, k: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nrm: f64 = l2_norm(&v);
        if nrm <= 1.0 {
            return v.iter().map(|x| x * radius).collect();
        }
    }
}

/// Per-member defect d_α = |∫(F(U_α) - F(U_α - U)) dv - ∫F(U) dv|.
pub fn brezis_lieb_defect(
    f: &HomogeneousPotential,
    family: &[VectorRadialField],
    limit: &VectorRadialField,
) -> Result<Vec<f64>> {
    let fu = integrate_potential(f, limit)?;
    family
        .iter()
        .map(|u_a| {
            if !u_a.grid.same_grid(&limit.grid) || u_a.k() != limit.k() {
                return Err(Error::GridMismatch("family member grid differs from limit".into()));
            }
            let diff = u_a.add_scaled(limit, -1.0)?;
            let t1 = integrate_potential(f, u_a)?;
            let t2 = integrate_potential(f, &diff)?;
            Ok(((t1 - t2) - fu).abs())
        })
        .collect()
}

/// ∫ F(U) dv on the field's grid.
pub fn integrate_potential(f: &HomogeneousPotential, u: &VectorRadialField) -> Result<f64> {
    let vals: Vec<f64> = (0..u.n_nodes()).map(|i| f.evaluate(&u.value_at(i))).collect();
    u.grid.quadrature(&vals)
}

/// ∫ G(x, U) dv.
pub fn integrate_spatial(g: &SpatialPotential, u: &VectorRadialField) -> Result<f64> {
    let vals: Vec<f64> = (0..u.n_nodes())
        .map(|i| g.eval_at(u.grid.r[i], &u.value_at(i)))
        .collect();
    u.grid.quadrature(&vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{two_star, ModelManifold};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        let n = 4;
        let f = HomogeneousPotential::norm2(2, two_star(n));
        assert_eq!(f.evaluate(&[0.0, 0.0]), 0.0);
        assert_relative_eq!(f.evaluate(&[1.0, 1.0]), 4.0, max_relative = 1e-14);
        let f1 = HomogeneousPotential::lq(2, 1.0, two_star(n));
        assert_relative_eq!(f1.evaluate(&[0.6, 0.8]), 1.4f64.powi(4), max_relative = 1e-14);
        assert_relative_eq!(f1.evaluate(&[0.6, 0.8]), 3.8416, max_relative = 1e-12);
    }

    #[test]
    fn max_constant_restriction_is_degenerate() {
        let f = HomogeneousPotential::norm2(2, 4.0);
        let set = max_on_direction_sphere(&f, 1e-6).unwrap();
        assert!(set.degenerate);
        assert_relative_eq!(set.m_f, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn max_l1_norm_brute_force_oracle() {
        // Oracle: brute force over 10^6 circle points.
        let f = HomogeneousPotential::lq(2, 1.0, 4.0);
        let mut brute = f64::NEG_INFINITY;
        for i in 0..1_000_000 {
            let th = TAU * i as f64 / 1e6;
            brute = brute.max(f.evaluate(&[th.cos(), th.sin()]));
        }
        let set = max_on_direction_sphere(&f, 1e-8).unwrap();
        assert_relative_eq!(set.m_f, 4.0, max_relative = 1e-9);
        assert!(set.m_f >= brute - 1e-9);
        assert_eq!(set.points.len(), 4);
        let inv = 0.5f64.sqrt();
        for p in &set.points {
            assert_relative_eq!(p[0].abs(), inv, max_relative = 1e-4);
            assert_relative_eq!(p[1].abs(), inv, max_relative = 1e-4);
        }
    }

    #[test]
    fn max_weighted_power_sum() {
        // F = |t1|^4 + 0.5 |t2|^4 has its direction max 1 at ±e1.
        let f = HomogeneousPotential::weighted_power_sum(vec![1.0, 0.5], 4.0);
        let mut brute = f64::NEG_INFINITY;
        for i in 0..1_000_000 {
            let th = TAU * i as f64 / 1e6;
            brute = brute.max(f.evaluate(&[th.cos(), th.sin()]));
        }
        assert_relative_eq!(brute, 1.0, max_relative = 1e-9);
        let set = max_on_direction_sphere(&f, 1e-8).unwrap();
        assert_relative_eq!(set.m_f, 1.0, max_relative = 1e-10);
        assert_eq!(set.points.len(), 2);
        for p in &set.points {
            assert!(p[0].abs() > 1.0 - 1e-5 && p[1].abs() < 1e-4);
        }
    }

    #[test]
    fn scaling_preserves_argmax_and_scales_max() {
        let f = HomogeneousPotential::lq(2, 1.0, 4.0);
        let theta = 2.7;
        let set = max_on_direction_sphere(&f, 1e-8).unwrap();
        let set_s = max_on_direction_sphere(&f.scaled(theta), 1e-8).unwrap();
        assert_relative_eq!(set_s.m_f, theta * set.m_f, max_relative = 1e-12);
        assert_eq!(set.points.len(), set_s.points.len());
        for p in &set.points {
            assert!(set_s
                .points
                .iter()
                .any(|q| p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-6));
        }
    }

    #[test]
    fn m_fg_examples() {
        let g = SpatialPotential::uniform(HomogeneousPotential::norm2(2, 2.0));
        let xf = MaximizerSet { m_f: 1.0, points: vec![vec![1.0, 0.0]], tolerance: 1e-6, degenerate: false };
        assert_relative_eq!(m_fg(&g, 0.3, &xf).unwrap(), 1.0, max_relative = 1e-12);

        // Example-1 potential with constant minimal diagonal entry.
        let coeffs = vec![
            vec![RadialCoeff::Const(1.0), RadialCoeff::CosAffine { a: 0.5, b: 0.25 }],
            vec![RadialCoeff::CosAffine { a: 0.5, b: 0.25 }, RadialCoeff::CosAffine { a: 2.0, b: 0.5 }],
        ];
        let g1 = SpatialPotential::abs_bilinear_x(coeffs);
        let xf1 = MaximizerSet { m_f: 1.0, points: vec![vec![1.0, 0.0]], tolerance: 1e-6, degenerate: false };
        assert_relative_eq!(m_fg(&g1, 0.9, &xf1).unwrap(), 1.0, max_relative = 1e-12);

        // beta(x) = 2 + cos r at the pole.
        let g2 = SpatialPotential::weighted(
            RadialCoeff::CosAffine { a: 2.0, b: 1.0 },
            HomogeneousPotential::norm2(3, 2.0),
        );
        let xf2 = MaximizerSet { m_f: 1.0, points: vec![vec![0.0, 1.0, 0.0]], tolerance: 1e-6, degenerate: false };
        assert_relative_eq!(m_fg(&g2, 0.0, &xf2).unwrap(), 3.0, max_relative = 1e-12);

        let empty = MaximizerSet { m_f: 1.0, points: vec![], tolerance: 1e-6, degenerate: false };
        assert!(matches!(m_fg(&g2, 0.0, &empty), Err(Error::EmptyMaximizerSet)));
    }

    #[test]
    fn global_min_examples() {
        let grid = ModelManifold::RoundSphere { n: 4 }.grid(512).unwrap();
        let g = SpatialPotential::uniform(HomogeneousPotential::norm2(2, 2.0));
        assert_relative_eq!(global_min_on_sphere(&g, &grid.r), 1.0, max_relative = 1e-9);

        let g2 = SpatialPotential::weighted(
            RadialCoeff::CosAffine { a: 2.0, b: 1.0 },
            HomogeneousPotential::norm2(2, 2.0),
        );
        assert_relative_eq!(global_min_on_sphere(&g2, &grid.r), 1.0, max_relative = 1e-6);

        let coeffs = vec![
            vec![RadialCoeff::Const(0.8), RadialCoeff::Const(0.0)],
            vec![RadialCoeff::Const(0.0), RadialCoeff::CosAffine { a: 2.0, b: 1.0 }],
        ];
        let g3 = SpatialPotential::abs_bilinear_x(coeffs);
        assert_relative_eq!(global_min_on_sphere(&g3, &grid.r), 0.8, max_relative = 1e-6);
    }

    #[test]
    fn smooth_c1_input_returned_unchanged() {
        let f = HomogeneousPotential::norm2(2, 4.0);
        let s = smooth(&f, 0.5).unwrap();
        assert_eq!(s.smoothing_deviation(), Some(0.0));
        assert_eq!(s.evaluate(&[0.3, -0.8]), f.evaluate(&[0.3, -0.8]));
    }

    #[test]
    fn smooth_l1_certificate_and_euler_identity() {
        let f = HomogeneousPotential::lq(2, 1.0, 4.0);
        let eps = 0.01;
        let s = smooth(&f, eps).unwrap();
        let dev = s.smoothing_deviation().unwrap();
        assert!(dev <= eps, "certified deviation {dev}");
        assert!(s.has_gradient());
        // Euler identity <∇F, t> = p F(t) on samples.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = random_in_ball(&mut rng, 2, 1.5);
            if l2_norm(&t) < 1e-3 {
                continue;
            }
            let fv = s.evaluate(&t);
            let gv = s.gradient(&t).unwrap();
            let dot: f64 = gv.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
            assert_relative_eq!(dot, 4.0 * fv, max_relative = 1e-8);
        }
    }

    #[test]
    fn smooth_unreachable_tolerance_fails() {
        // Coarsely sampled kinked restriction: interpolation floor blocks 1e-9.
        let coarse: Vec<f64> = (0..64)
            .map(|i| {
                let th = TAU * i as f64 / 64.0;
                let t = [th.cos(), th.sin()];
                t[0].abs() + t[1].abs()
            })
            .map(|v| v.powi(4))
            .collect();
        let f = HomogeneousPotential::sampled_circle(coarse, 4.0);
        assert!(matches!(
            smooth(&f, 1e-9),
            Err(Error::SmoothingFailed { .. })
        ));
    }

    #[test]
    fn smooth_k3_mollified_ball() {
        let f = HomogeneousPotential::lq(3, 1.0, 3.0);
        let s = smooth(&f, 0.05).unwrap();
        assert!(s.has_gradient());
        assert!(s.smoothing_deviation().unwrap() <= 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let t = random_in_ball(&mut rng, 3, 1.5);
            if l2_norm(&t) < 0.05 {
                continue;
            }
            let fv = s.evaluate(&t);
            let gv = s.gradient(&t).unwrap();
            let dot: f64 = gv.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
            assert_relative_eq!(dot, 3.0 * fv, max_relative = 1e-8);
        }
    }

    #[test]
    fn brezis_lieb_constant_verified_on_samples() {
        // F = |t|²: inequality verified on random pairs.
        let f = HomogeneousPotential::norm2(2, 2.0);
        let c = brezis_lieb_constant(&f, 1.0, 42).unwrap();
        assert_eq!(c.verify(&f, 100_000, 43), 0);
        // s = t = 0 holds trivially.
        assert_eq!(f.evaluate(&[0.0, 0.0]), 0.0);

        let f1 = HomogeneousPotential::lq(2, 1.0, 4.0);
        let c1 = brezis_lieb_constant(&f1, 0.1, 44).unwrap();
        assert!(c1.c.is_finite() && c1.c > 0.0);
        assert_eq!(c1.verify(&f1, 100_000, 45), 0);
    }

    #[test]
    fn brezis_lieb_defect_zero_for_constant_family() {
        let grid = ModelManifold::RoundSphere { n: 4 }.grid(256).unwrap();
        let f = HomogeneousPotential::norm2(1, two_star(4));
        let profile: Vec<f64> = grid.r.iter().map(|&r| (1.0 + r * r).recip()).collect();
        let u = VectorRadialField::new(grid.clone(), vec![profile]).unwrap();
        let family = vec![u.clone(), u.clone(), u.clone()];
        let d = brezis_lieb_defect(&f, &family, &u).unwrap();
        for v in d {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn brezis_lieb_defect_vanishes_along_perturbation() {
        let grid = ModelManifold::RoundSphere { n: 5 }.grid(512).unwrap();
        let f = HomogeneousPotential::norm2(1, two_star(5));
        let base: Vec<f64> = grid.r.iter().map(|&r| (-(r * r)).exp()).collect();
        let bump: Vec<f64> = grid.r.iter().map(|&r| 0.005 * (-(r - 1.0) * (r - 1.0) * 4.0).exp()).collect();
        let u = VectorRadialField::new(grid.clone(), vec![base]).unwrap();
        let w = VectorRadialField::new(grid.clone(), vec![bump]).unwrap();
        let alphas = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
        let family: Vec<VectorRadialField> = alphas
            .iter()
            .map(|&a| u.add_scaled(&w, 1.0 / a).unwrap())
            .collect();
        let d = brezis_lieb_defect(&f, &family, &u).unwrap();
        for pair in d.windows(2) {
            assert!(pair[1] < pair[0], "defect not decreasing: {pair:?}");
        }
        assert!(d[d.len() - 1] < 1e-4, "defect at alpha=100: {}", d[d.len() - 1]);

        // U = 0 limit: both sides equal ∫F(U_α) identically.
        let zero = u.scaled(0.0);
        let dz = brezis_lieb_defect(&f, &family, &zero).unwrap();
        for v in dz {
            assert!(v.abs() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn homogeneity_random_samples(
            lambda in 1e-3f64..1e3,
            x in -2.0f64..2.0,
            y in -2.0f64..2.0,
            qsel in 0usize..3,
        ) {
            let q = [1.0, 2.0, 3.0][qsel];
            let p = HomogeneousPotential::lq(2, q, 10.0 / 3.0);
            let t = [x, y];
            let lt = [lambda * x, lambda * y];
            let lhs = p.evaluate(&lt);
            let rhs = lambda.powf(10.0 / 3.0) * p.evaluate(&t);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
        }

        #[test]
        fn euler_identity_for_c1_forms(x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let t = [x, y, z];
            if l2_norm(&t) > 1e-3 {
                for p in [
                    HomogeneousPotential::norm2(3, 10.0 / 3.0),
                    HomogeneousPotential::weighted_power_sum(vec![1.0, 0.5, 2.0], 10.0 / 3.0),
                    HomogeneousPotential::quadratic_form(
                        vec![vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.1], vec![0.0, 0.1, 1.5]],
                        2.0,
                    ),
                ] {
                    let f = p.evaluate(&t);
                    let g = p.gradient(&t).unwrap();
                    let dot: f64 = g.iter().zip(t.iter()).map(|(a, b)| a * b).sum();
                    prop_assert!((dot - p.degree() * f).abs() <= 1e-8 * (p.degree() * f).abs());
                }
            }
        }
    }
}

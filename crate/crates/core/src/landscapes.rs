//! Analytic objective functions with exact derivatives.
//!
//! Every built-in landscape carries closed-form first and second derivatives;
//! there is no autodiff. Kink locations (where a derivative jumps) are listed
//! per landscape so finite-difference checks can avoid them.

use std::sync::Arc;

use crate::error::LandscapeError;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VecEvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VecGradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HvpFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type KinkFn = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;

/// A 1-D objective with closed-form value and first two derivatives.
///
/// Built-ins are even with a global minimum of 0 at the origin.
#[derive(Clone)]
pub struct ScalarLandscape {
    label: String,
    eval: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    kinks: Vec<f64>,
}

impl ScalarLandscape {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kinks: Vec<f64>,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            kinks,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Points where a listed derivative jumps. Finite-difference probes must
    /// stay at least one step away from these.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn near_kink(&self, x: f64, step: f64) -> bool {
        self.kinks.iter().any(|&k| (x - k).abs() <= step)
    }

    /// Value scaling `a * f(x)`. Rescales the curvature at the origin and with
    /// it the GD stability threshold.
    pub fn scaled(&self, a: f64, label: impl Into<String>) -> Self {
        let (e, g, h) = (self.eval.clone(), self.d1.clone(), self.d2.clone());
        Self {
            label: label.into(),
            eval: Arc::new(move |x| a * e(x)),
            d1: Arc::new(move |x| a * g(x)),
            d2: Arc::new(move |x| a * h(x)),
            kinks: self.kinks.clone(),
        }
    }

    /// View as a 1-D vector landscape (with exact Hessian-vector product).
    pub fn to_vector(&self) -> VectorLandscape {
        let this = self.clone();
        let g = self.clone();
        let h = self.clone();
        let k = self.clone();
        VectorLandscape {
            label: self.label.clone(),
            dim: 1,
            eval: Arc::new(move |x: &[f64]| this.eval(x[0])),
            grad: Arc::new(move |x: &[f64]| vec![g.d1(x[0])]),
            hvp: Some(Arc::new(move |x: &[f64], v: &[f64]| vec![h.d2(x[0]) * v[0]])),
            near_kink: Some(Arc::new(move |x: &[f64], step: f64| k.near_kink(x[0], step))),
        }
    }
}

/// An n-D objective with closed-form value and gradient, plus an optional
/// Hessian-vector product.
#[derive(Clone)]
pub struct VectorLandscape {
    label: String,
    dim: usize,
    eval: VecEvalFn,
    grad: VecGradFn,
    hvp: Option<HvpFn>,
    near_kink: Option<KinkFn>,
}

impl VectorLandscape {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            hvp: None,
            near_kink: None,
        }
    }

    pub fn with_hvp(mut self, hvp: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hvp = Some(Arc::new(hvp));
        self
    }

    pub fn with_kink_test(mut self, f: impl Fn(&[f64], f64) -> bool + Send + Sync + 'static) -> Self {
        self.near_kink = Some(Arc::new(f));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (self.grad)(x)
    }

    pub fn has_hvp(&self) -> bool {
        self.hvp.is_some()
    }

    /// Hessian-vector product. Analytic when available, otherwise a central
    /// difference of the gradient with step 1e-5.
    pub fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        if let Some(h) = &self.hvp {
            return h(x, v);
        }
        let step = 1e-5;
        let norm = norm(v);
        if norm == 0.0 {
            return vec![0.0; self.dim];
        }
        let mut fwd = x.to_vec();
        let mut bwd = x.to_vec();
        for i in 0..self.dim {
            fwd[i] += step * v[i] / norm;
            bwd[i] -= step * v[i] / norm;
        }
        let gf = self.grad(&fwd);
        let gb = self.grad(&bwd);
        (0..self.dim)
            .map(|i| (gf[i] - gb[i]) / (2.0 * step) * norm)
            .collect()
    }

    pub fn near_kink(&self, x: &[f64], step: f64) -> bool {
        match &self.near_kink {
            Some(f) => f(x, step),
            None => false,
        }
    }
}

/// A smooth positive flatness function `h` over the manifold coordinates,
/// with its gradient.
#[derive(Clone)]
pub struct FlatnessFn {
    eval: VecEvalFn,
    grad: VecGradFn,
    dim: usize,
}

impl FlatnessFn {
    pub fn new(
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            dim,
        }
    }

    /// 1-D convenience constructor from scalar closures.
    pub fn scalar(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(move |x: &[f64]| eval(x[0])),
            grad: Arc::new(move |x: &[f64]| vec![d1(x[0])]),
            dim: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

/// Non-decreasing cutoff confining a value to `[0, c]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutoffKind {
    /// `min(z, c)`
    Hard(f64),
    /// `c * z / (1 + z)`
    Rational(f64),
}

impl CutoffKind {
    pub fn bound(&self) -> f64 {
        match *self {
            CutoffKind::Hard(c) | CutoffKind::Rational(c) => c,
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match *self {
            CutoffKind::Hard(c) => z.min(c),
            CutoffKind::Rational(c) => c * z / (1.0 + z),
        }
    }

    pub fn d1(&self, z: f64) -> f64 {
        match *self {
            CutoffKind::Hard(c) => {
                if z < c {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffKind::Rational(c) => c / ((1.0 + z) * (1.0 + z)),
        }
    }
}

/// Orthonormal basis given by its columns, checked at construction.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    columns: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    const TOL: f64 = 1e-10;

    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self, LandscapeError> {
        let n = columns.len();
        let mut max_dev: f64 = 0.0;
        for (i, ci) in columns.iter().enumerate() {
            if ci.len() != n {
                return Err(LandscapeError::DimensionMismatch {
                    expected: n,
                    got: ci.len(),
                });
            }
            for (j, cj) in columns.iter().enumerate() {
                let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((dot - target).abs());
            }
        }
        if max_dev > Self::TOL {
            return Err(LandscapeError::NotOrthonormal {
                max_dev,
                tol: Self::TOL,
            });
        }
        Ok(Self { columns })
    }

    pub fn identity(n: usize) -> Self {
        let columns = (0..n)
            .map(|i| {
                let mut c = vec![0.0; n];
                c[i] = 1.0;
                c
            })
            .collect();
        Self { columns }
    }

    /// 2-D rotation by `theta`.
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            columns: vec![vec![c, s], vec![-s, c]],
        }
    }

    /// 3-D rotation about the z axis by `theta`.
    pub fn rotation3_z(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            columns: vec![vec![c, s, 0.0], vec![-s, c, 0.0], vec![0.0, 0.0, 1.0]],
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn project(&self, i: usize, x: &[f64]) -> f64 {
        self.columns[i].iter().zip(x).map(|(p, v)| p * v).sum()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `(1+|x|) ln(1+|x|) - |x|`: strictly subquadratic and convex, curvature
/// `1/(1+|x|)` decaying from 1 at the origin.
pub fn f1_logquad() -> ScalarLandscape {
    ScalarLandscape::new(
        "f1",
        |x: f64| {
            let a = x.abs();
            // ln_1p keeps the value accurate through the cancellation near 0,
            // where f behaves like x^2/2
            (1.0 + a) * a.ln_1p() - a
        },
        |x: f64| x.signum() * x.abs().ln_1p(),
        |x: f64| 1.0 / (1.0 + x.abs()),
        vec![],
    )
}

/// Population loss of the 3-neuron bump model over `Uniform[0, C]` data:
/// quadratic `C^2/3 w^2` inside `|w| <= 1/C`, nonconvex tail `1 - 2/(3C|w|)`
/// outside. C1 at the breakpoint; the second derivative jumps there.
pub fn f2_population(c: f64) -> Result<ScalarLandscape, LandscapeError> {
    if !(c > 0.0) {
        return Err(LandscapeError::NonPositiveParameter { name: "C", value: c });
    }
    let b = 1.0 / c;
    Ok(ScalarLandscape::new(
        format!("f2:C={c}"),
        move |w: f64| {
            let a = w.abs();
            if a <= b {
                c * c / 3.0 * w * w
            } else {
                1.0 - 2.0 / (3.0 * c * a)
            }
        },
        move |w: f64| {
            let a = w.abs();
            if a <= b {
                2.0 * c * c / 3.0 * w
            } else {
                w.signum() * 2.0 / (3.0 * c * a * a)
            }
        },
        move |w: f64| {
            let a = w.abs();
            if a <= b {
                2.0 * c * c / 3.0
            } else {
                -4.0 / (3.0 * c * a * a * a)
            }
        },
        vec![-b, b],
    ))
}

/// Superquadratic control `x^4 / 4`. Useful as a divergence witness; GD with
/// a fixed rate blows up from moderate initializations.
pub fn quartic() -> ScalarLandscape {
    ScalarLandscape::new(
        "quartic",
        |x: f64| 0.25 * x.powi(4),
        |x: f64| x.powi(3),
        |x: f64| 3.0 * x * x,
        vec![],
    )
}

/// Sum of per-direction scalar landscapes along an orthonormal basis:
/// `f(x) = sum_i f_i(p_i^T x)`.
pub fn separable_sum(
    components: &[ScalarLandscape],
    basis: &OrthonormalBasis,
) -> Result<VectorLandscape, LandscapeError> {
    let n = basis.dim();
    if components.len() != n {
        return Err(LandscapeError::DimensionMismatch {
            expected: n,
            got: components.len(),
        });
    }
    let comps = components.to_vec();
    let b = basis.clone();
    let comps_g = comps.clone();
    let b_g = b.clone();
    let comps_h = comps.clone();
    let b_h = b.clone();
    let comps_k = comps.clone();
    let b_k = b.clone();
    let label = format!(
        "separable:{}",
        comps.iter().map(|c| c.label()).collect::<Vec<_>>().join("+")
    );
    Ok(VectorLandscape::new(
        label,
        n,
        move |x: &[f64]| (0..n).map(|i| comps[i].eval(b.project(i, x))).sum(),
        move |x: &[f64]| {
            let mut g = vec![0.0; n];
            for i in 0..n {
                let d = comps_g[i].d1(b_g.project(i, x));
                for (gj, pj) in g.iter_mut().zip(b_g.column(i)) {
                    *gj += d * pj;
                }
            }
            g
        },
    )
    .with_hvp(move |x: &[f64], v: &[f64]| {
        let mut out = vec![0.0; n];
        for i in 0..n {
            let c = comps_h[i].d2(b_h.project(i, x)) * b_h.project(i, v);
            for (oj, pj) in out.iter_mut().zip(b_h.column(i)) {
                *oj += c * pj;
            }
        }
        out
    })
    .with_kink_test(move |x: &[f64], step: f64| {
        (0..n).any(|i| comps_k[i].near_kink(b_k.project(i, x), step))
    }))
}

/// Valley landscape `F(x, y) = f(h(x) y)` over `dim + 1` coordinates, where
/// the last coordinate is the transverse direction. The set `{y = 0}` is a
/// manifold of global minima; `h` controls its flatness.
///
/// Nonpositive `h` is outside the construction's domain; evaluation yields
/// NaN there, which downstream runs report as divergence.
pub fn valley(f: &ScalarLandscape, h: &FlatnessFn, dim: usize) -> VectorLandscape {
    assert_eq!(h.dim(), dim, "flatness function dimension mismatch");
    let fe = f.clone();
    let fg = f.clone();
    let he = h.clone();
    let hg = h.clone();
    let label = format!("valley:{}", f.label());
    VectorLandscape::new(
        label,
        dim + 1,
        move |p: &[f64]| {
            let (x, y) = p.split_at(dim);
            let hv = he.eval(x);
            if hv <= 0.0 {
                return f64::NAN;
            }
            fe.eval(hv * y[0])
        },
        move |p: &[f64]| {
            let (x, y) = p.split_at(dim);
            let hv = hg.eval(x);
            if hv <= 0.0 {
                return vec![f64::NAN; dim + 1];
            }
            let y = y[0];
            let d = fg.d1(hv * y);
            let hgrad = hg.grad(x);
            let mut g: Vec<f64> = hgrad.iter().map(|hi| d * y * hi).collect();
            g.push(d * hv);
            g
        },
    )
}

/// Two valleys at separate scales:
/// `F(x, y) = f(h1(x) y) + phi_c(f(k h2(y) x))` with `k > 1`.
///
/// The second valley is `k` times narrower and its influence is confined to
/// `[0, c]` by the cutoff.
pub fn two_valley(
    f: &ScalarLandscape,
    h1: &FlatnessFn,
    h2: &FlatnessFn,
    k: f64,
    cutoff: CutoffKind,
) -> Result<VectorLandscape, LandscapeError> {
    if !(k > 1.0) {
        return Err(LandscapeError::InvalidScaleFactor(k));
    }
    if !(cutoff.bound() > 0.0) {
        return Err(LandscapeError::NonPositiveParameter {
            name: "cutoff bound",
            value: cutoff.bound(),
        });
    }
    assert_eq!(h1.dim(), 1);
    assert_eq!(h2.dim(), 1);
    let (fe, fg) = (f.clone(), f.clone());
    let (h1e, h1g) = (h1.clone(), h1.clone());
    let (h2e, h2g) = (h2.clone(), h2.clone());
    let label = format!("twovalley:{}", f.label());
    Ok(VectorLandscape::new(
        label,
        2,
        move |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            let g1 = fe.eval(h1e.eval(&[x]) * y);
            let g2 = fe.eval(k * h2e.eval(&[y]) * x);
            g1 + cutoff.value(g2)
        },
        move |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            let h1v = h1g.eval(&[x]);
            let h1d = h1g.grad(&[x])[0];
            let h2v = h2g.eval(&[y]);
            let h2d = h2g.grad(&[y])[0];
            let d1 = fg.d1(h1v * y);
            let g2 = fg.eval(k * h2v * x);
            let d2 = fg.d1(k * h2v * x);
            let cut = cutoff.d1(g2);
            vec![
                d1 * y * h1d + cut * d2 * k * h2v,
                d1 * h1v + cut * d2 * k * h2d * x,
            ]
        },
    ))
}

/// 2-D nonconvex subquadratic test function:
/// `f2(x1) + f2(x1 + x2) + 0.5 f1(sqrt(x1^2 + x2^2))` with `C = 3`.
///
/// The radial term's gradient at the origin is taken as zero (the limit).
pub fn f3_2d() -> VectorLandscape {
    let f1 = f1_logquad();
    let f2 = f2_population(3.0).expect("C=3 is positive");
    let (f1e, f2e) = (f1.clone(), f2.clone());
    let (f1g, f2g) = (f1, f2.clone());
    let f2k = f2;
    VectorLandscape::new(
        "f3",
        2,
        move |p: &[f64]| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            f2e.eval(p[0]) + f2e.eval(p[0] + p[1]) + 0.5 * f1e.eval(r)
        },
        move |p: &[f64]| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let da = f2g.d1(p[0]);
            let db = f2g.d1(p[0] + p[1]);
            let (rx, ry) = if r > 0.0 {
                let dr = 0.5 * f1g.d1(r);
                (dr * p[0] / r, dr * p[1] / r)
            } else {
                (0.0, 0.0)
            };
            vec![da + db + rx, db + ry]
        },
    )
    .with_kink_test(move |p: &[f64], step: f64| {
        f2k.near_kink(p[0], step) || f2k.near_kink(p[0] + p[1], step)
    })
}

/// Max relative error between the analytic gradient and a central difference
/// of the value, over all components. Probes that touch a listed kink are
/// rejected instead of producing a spurious figure.
pub fn grad_check(l: &VectorLandscape, point: &[f64], step: f64) -> Result<f64, LandscapeError> {
    assert!(step > 0.0);
    if l.near_kink(point, step) {
        return Err(LandscapeError::NearKink { step });
    }
    let analytic = l.grad(point);
    let mut worst: f64 = 0.0;
    for i in 0..l.dim() {
        let mut fwd = point.to_vec();
        let mut bwd = point.to_vec();
        fwd[i] += step;
        bwd[i] -= step;
        let fd = (l.eval(&fwd) - l.eval(&bwd)) / (2.0 * step);
        let rel = (analytic[i] - fd).abs() / (analytic[i].abs() + 1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Flatness function of the single-valley figure: `h(x1) = 1 / (1 + 0.01 x1)`.
pub fn fig5_flatness() -> FlatnessFn {
    FlatnessFn::scalar(
        |x: f64| 1.0 / (1.0 + 0.01 * x),
        |x: f64| {
            let d = 1.0 + 0.01 * x;
            -0.01 / (d * d)
        },
    )
}

/// The single-valley preset landscape `f1(x2 / (1 + 0.01 x1))`.
pub fn fig5_valley() -> VectorLandscape {
    valley(&f1_logquad(), &fig5_flatness(), 1)
}

/// The two-valley preset landscape
/// `h(x1, x2) + 0.25 h(x2, 10 x1) / (1 + h(x2, 10 x1))` with
/// `h(a, b) = f1((1 + 0.001 a^2) b)`.
pub fn fig6_two_valley() -> VectorLandscape {
    let widen = FlatnessFn::scalar(|a: f64| 1.0 + 0.001 * a * a, |a: f64| 0.002 * a);
    two_valley(
        &f1_logquad(),
        &widen.clone(),
        &widen,
        10.0,
        CutoffKind::Rational(0.25),
    )
    .expect("k = 10 > 1")
}

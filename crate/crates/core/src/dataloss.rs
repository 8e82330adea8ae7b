//! Loss landscapes built from training data: the 3-neuron ReLU bump model,
//! its closed-form piecewise empirical loss, the uniform-data population
//! loss, 2-D two-valley constructions, and homogeneity scaling checks on
//! tiny deep ReLU networks.

use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DataLossError, LandscapeError};
use crate::landscapes::{ScalarLandscape, VectorLandscape};

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

/// The 3-neuron shared-weight bump network
/// `1 - relu(wx + 1) + 2 relu(wx) - relu(wx - 1)`.
///
/// For `x > 0` this is 1 outside `|w| <= 1/x` and `|xw|` inside.
pub fn relu_bump(x: f64, w: f64) -> f64 {
    let z = w * x;
    1.0 - relu(z + 1.0) + 2.0 * relu(z) - relu(z - 1.0)
}

/// Positive input magnitudes with implicit zero targets.
#[derive(Clone, Debug)]
pub struct DataSet1D {
    magnitudes: Vec<f64>,
}

impl DataSet1D {
    pub fn new(magnitudes: Vec<f64>) -> Result<Self, DataLossError> {
        if magnitudes.is_empty() {
            return Err(DataLossError::EmptyDataset);
        }
        for &m in &magnitudes {
            if !(m > 0.0) || !m.is_finite() {
                return Err(DataLossError::NonPositiveMagnitude(m));
            }
        }
        Ok(Self { magnitudes })
    }

    /// One positive real per line; blank lines and `#` comments skipped.
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self, DataLossError> {
        let mut magnitudes = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|_| DataLossError::ParseLine {
                line: i + 1,
                text: String::from("<io error>"),
            })?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let v: f64 = text.parse().map_err(|_| DataLossError::ParseLine {
                line: i + 1,
                text: text.to_string(),
            })?;
            magnitudes.push(v);
        }
        Self::new(magnitudes)
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Mean of `relu_bump(x_i, w)^2` evaluated directly through the network.
    pub fn direct_loss(&self, w: f64) -> f64 {
        let n = self.magnitudes.len() as f64;
        self.magnitudes.iter().map(|&x| relu_bump(x, w).powi(2)).sum::<f64>() / n
    }
}

/// One piece of the closed-form empirical loss: `quad w^2 + offset` on
/// `|w| <= upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub upper: f64,
    pub quad: f64,
    pub offset: f64,
}

/// Closed-form empirical loss of the bump model: piecewise quadratic in `w`
/// with breakpoints at reciprocal data magnitudes and a constant tail of 1.
///
/// Symmetric in `w`; segments are stored innermost first.
#[derive(Clone, Debug)]
pub struct PiecewiseLoss {
    segments: Vec<Segment>,
}

impl PiecewiseLoss {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.upper).collect()
    }

    pub fn eval(&self, w: f64) -> f64 {
        let a = w.abs();
        for s in &self.segments {
            if a <= s.upper {
                return s.quad * w * w + s.offset;
            }
        }
        1.0
    }

    pub fn d1(&self, w: f64) -> f64 {
        let a = w.abs();
        for s in &self.segments {
            if a <= s.upper {
                return 2.0 * s.quad * w;
            }
        }
        0.0
    }

    /// CSV rows `(segment_low, segment_high, quad_coeff, offset)`, innermost
    /// segment first, tail last with an infinite upper bound.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "segment_low,segment_high,quad_coeff,offset")?;
        let mut low = 0.0;
        for s in &self.segments {
            writeln!(w, "{low:.17e},{:.17e},{:.17e},{:.17e}", s.upper, s.quad, s.offset)?;
            low = s.upper;
        }
        writeln!(w, "{low:.17e},inf,0,1")?;
        Ok(())
    }
}

/// Build the closed-form piecewise loss of a dataset. Tied magnitudes merge
/// into a single breakpoint.
pub fn empirical_loss(data: &DataSet1D) -> PiecewiseLoss {
    let mut xs = data.magnitudes().to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    // prefix[k] = sum of x_i^2 over the k smallest magnitudes
    let mut prefix = vec![0.0; xs.len() + 1];
    for (i, &x) in xs.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x * x;
    }
    let mut segments = Vec::new();
    // innermost segment: all data quadratic, then peel off the largest
    // magnitudes one breakpoint at a time
    let mut k = xs.len();
    while k > 0 {
        let upper = 1.0 / xs[k - 1];
        // merge ties: all magnitudes equal to xs[k-1] leave together
        let mut j = k;
        while j > 1 && xs[j - 2] == xs[k - 1] {
            j -= 1;
        }
        segments.push(Segment {
            upper,
            quad: prefix[k] / n,
            offset: (xs.len() - k) as f64 / n,
        });
        k = j - 1;
    }
    PiecewiseLoss { segments }
}

/// Population loss over `Uniform[0, C]` data: identical to the subquadratic
/// analytic landscape with the same `C`.
pub fn population_loss_uniform(c: f64) -> Result<ScalarLandscape, LandscapeError> {
    crate::landscapes::f2_population(c)
}

/// Monte-Carlo estimate of the population loss at `w` with its standard
/// error, for validating the closed form.
pub fn population_loss_monte_carlo(c: f64, w: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = rng.gen_range(0.0..c);
        let v = relu_bump(x, w).powi(2);
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// How the per-axis valleys of the 2-D construction are built.
#[derive(Clone, Copy, Debug)]
pub enum DataLossMode {
    /// Mean over the dataset's finitely many magnitudes.
    Empirical,
    /// `Uniform[0, C]` population loss; the dataset argument is unused.
    Population { c: f64 },
}

/// Two-valley 2-D loss `L(w1, w2) = mean[ bump(x, w1)^2 + bump(ratio x, w2)^2 ]`.
/// The second valley is `ratio` times narrower and `ratio^2` times sharper
/// at the origin.
pub fn two_valley_from_data(
    data: &DataSet1D,
    ratio: f64,
    mode: DataLossMode,
) -> Result<VectorLandscape, DataLossError> {
    if !(ratio > 1.0) {
        return Err(DataLossError::InvalidRatio(ratio));
    }
    let (axis1, axis2): (ScalarLandscape, ScalarLandscape) = match mode {
        DataLossMode::Empirical => {
            let wide = empirical_loss(data);
            let scaled = DataSet1D::new(data.magnitudes().iter().map(|&x| ratio * x).collect())
                .expect("scaling preserves positivity");
            let narrow = empirical_loss(&scaled);
            let (w1, w2) = (wide.clone(), narrow.clone());
            (
                ScalarLandscape::new(
                    "data-valley",
                    move |w: f64| wide.eval(w),
                    move |w: f64| w1.d1(w),
                    |_| 0.0,
                    vec![],
                ),
                ScalarLandscape::new(
                    "data-valley-narrow",
                    move |w: f64| narrow.eval(w),
                    move |w: f64| w2.d1(w),
                    |_| 0.0,
                    vec![],
                ),
            )
        }
        DataLossMode::Population { c } => {
            if !(c > 0.0) {
                return Err(DataLossError::NonPositiveMagnitude(c));
            }
            let wide = crate::landscapes::f2_population(c).expect("c > 0");
            let narrow = crate::landscapes::f2_population(ratio * c).expect("ratio c > 0");
            (wide, narrow)
        }
    };
    let (e1, e2) = (axis1.clone(), axis2.clone());
    Ok(VectorLandscape::new(
        "twovalley:data",
        2,
        move |p: &[f64]| axis1.eval(p[0]) + axis2.eval(p[1]),
        move |p: &[f64]| vec![e1.d1(p[0]), e2.d1(p[1])],
    ))
}

/// Fully connected ReLU network without (or optionally with) biases, used
/// only for homogeneity scaling checks.
#[derive(Clone, Debug)]
pub struct TinyReluNet {
    /// `weights[l]` is the `out x in` matrix of layer `l`.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Option<Vec<Vec<f64>>>,
}

impl TinyReluNet {
    pub fn new(weights: Vec<Vec<Vec<f64>>>) -> Self {
        Self { weights, biases: None }
    }

    pub fn random(widths: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = widths
            .windows(2)
            .map(|w| {
                (0..w[1])
                    .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect()
            })
            .collect();
        Self { weights, biases: None }
    }

    /// Attach small random biases to every layer.
    pub fn with_random_biases(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.biases = Some(
            self.weights
                .iter()
                .map(|m| (0..m.len()).map(|_| rng.gen_range(-0.1..0.1)).collect())
                .collect(),
        );
        self
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    fn forward_scaled(&self, x: &[f64], layer_scales: &[f64]) -> Vec<f64> {
        let depth = self.depth();
        let mut h = x.to_vec();
        for (l, m) in self.weights.iter().enumerate() {
            let mut out: Vec<f64> = m
                .iter()
                .map(|row| row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() * layer_scales[l])
                .collect();
            if let Some(b) = &self.biases {
                for (o, bi) in out.iter_mut().zip(&b[l]) {
                    *o += bi;
                }
            }
            if l + 1 < depth {
                for o in &mut out {
                    *o = relu(*o);
                }
            }
            h = out;
        }
        h
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_scaled(x, &vec![1.0; self.depth()])
    }

    /// Squared loss against `target` with per-layer weight scales.
    pub fn loss_scaled(&self, x: &[f64], target: &[f64], layer_scales: &[f64]) -> f64 {
        let out = self.forward_scaled(x, layer_scales);
        out.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum()
    }

    pub fn loss(&self, x: &[f64], target: &[f64]) -> f64 {
        self.loss_scaled(x, target, &vec![1.0; self.depth()])
    }
}

/// Relative discrepancies of the two ReLU scaling relations for input
/// scaling by `k`: depthwise (every layer times `k^{-1/L}`) and first-layer
/// only (times `k^{-1}`). Both are exact in real arithmetic; the discrepancy
/// measures rounding only.
pub fn homogeneity_check(
    net: &TinyReluNet,
    x1: &[f64],
    k: f64,
    target: &[f64],
) -> (f64, f64) {
    assert!(k > 0.0);
    let depth = net.depth();
    let l1 = net.loss(x1, target);
    let kx: Vec<f64> = x1.iter().map(|v| k * v).collect();

    let depthwise = vec![k.powf(-1.0 / depth as f64); depth];
    let l2_depthwise = net.loss_scaled(&kx, target, &depthwise);

    let mut first_only = vec![1.0; depth];
    first_only[0] = 1.0 / k;
    let l2_first = net.loss_scaled(&kx, target, &first_only);

    let denom = l1.abs().max(1e-300);
    (
        (l1 - l2_depthwise).abs() / denom,
        (l1 - l2_first).abs() / denom,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn relu_bump_direct_values() {
        assert_eq!(relu_bump(2.0, 0.0), 0.0);
        assert!((relu_bump(2.0, 0.25) - 0.5).abs() < 1e-15);
        assert!((relu_bump(2.0, 1.0) - 1.0).abs() < 1e-15);
        // piecewise form for x > 0
        for &(x, w) in &[(3.0f64, 0.1f64), (3.0, -0.2), (0.5, 1.0), (10.0, 0.05)] {
            let expect = if w.abs() <= 1.0 / x { (x * w).abs() } else { 1.0 };
            assert!((relu_bump(x, w) - expect).abs() < 1e-15, "x={x} w={w}");
        }
        assert_eq!(relu_bump(2.0, -5.0), 1.0);
    }

    #[test]
    fn dataset_rejects_bad_magnitudes() {
        assert!(DataSet1D::new(vec![]).is_err());
        assert!(DataSet1D::new(vec![1.0, 0.0]).is_err());
        assert!(DataSet1D::new(vec![-2.0]).is_err());
    }

    #[test]
    fn dataset_parses_text() {
        let text = "0.5\n# comment\n3\n\n20\n";
        let d = DataSet1D::from_reader(text.as_bytes()).unwrap();
        assert_eq!(d.magnitudes(), &[0.5, 3.0, 20.0]);
        assert!(DataSet1D::from_reader("x\n".as_bytes()).is_err());
    }

    #[test]
    fn empirical_loss_hand_derived_table() {
        let d = DataSet1D::new(vec![1.0, 2.0, 4.0]).unwrap();
        let l = empirical_loss(&d);
        let segs = l.segments();
        assert_eq!(segs.len(), 3);
        // |w| <= 1/4: (1 + 4 + 16)/3 w^2
        assert!((segs[0].upper - 0.25).abs() < 1e-15);
        assert!((segs[0].quad - 7.0).abs() < 1e-12);
        assert_eq!(segs[0].offset, 0.0);
        // [1/4, 1/2]: (5/3) w^2 + 1/3
        assert!((segs[1].upper - 0.5).abs() < 1e-15);
        assert!((segs[1].quad - 5.0 / 3.0).abs() < 1e-12);
        assert!((segs[1].offset - 1.0 / 3.0).abs() < 1e-12);
        // [1/2, 1]: (1/3) w^2 + 2/3
        assert!((segs[2].upper - 1.0).abs() < 1e-15);
        assert!((segs[2].quad - 1.0 / 3.0).abs() < 1e-12);
        assert!((segs[2].offset - 2.0 / 3.0).abs() < 1e-12);
        // continuity at w = 1/4 and value 0.4375
        assert!((l.eval(0.25) - 0.4375).abs() < 1e-12);
        assert_eq!(l.eval(5.0), 1.0);
    }

    #[test]
    fn single_datum_closed_form() {
        let d = DataSet1D::new(vec![2.5]).unwrap();
        let l = empirical_loss(&d);
        assert_eq!(l.segments().len(), 1);
        assert!((l.eval(0.1) - 6.25 * 0.01).abs() < 1e-15);
        assert_eq!(l.eval(1.0), 1.0);
    }

    #[test]
    fn piecewise_matches_direct_evaluation_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8);
            let data: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..50.0)).collect();
            let d = DataSet1D::new(data).unwrap();
            let l = empirical_loss(&d);
            for _ in 0..100 {
                let w = rng.gen_range(-3.0..3.0);
                let diff = (l.eval(w) - d.direct_loss(w)).abs();
                assert!(diff < 1e-12, "mismatch at w={w}: {diff}");
            }
        }
    }

    #[test]
    fn ties_merge_into_one_breakpoint() {
        let d = DataSet1D::new(vec![2.0, 2.0, 5.0]).unwrap();
        let l = empirical_loss(&d);
        assert_eq!(l.segments().len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let w = rng.gen_range(-1.5..1.5);
            assert!((l.eval(w) - d.direct_loss(w)).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_sharpen_toward_zero() {
        let d = DataSet1D::new(vec![0.5, 3.0, 20.0]).unwrap();
        let l = empirical_loss(&d);
        let segs = l.segments();
        for w in segs.windows(2) {
            assert!(w[0].quad > w[1].quad, "quad coefficients not decreasing outward");
            assert!(w[0].offset < w[1].offset, "offsets not increasing outward");
        }
    }

    #[test]
    fn piecewise_monotone_and_bounded() {
        let d = DataSet1D::new(vec![0.5, 3.0, 20.0]).unwrap();
        let l = empirical_loss(&d);
        let mut prev = 0.0;
        for i in 0..=4000 {
            let w = 3.0 * i as f64 / 4000.0;
            let v = l.eval(w);
            assert!(v + 1e-15 >= prev);
            assert!(v <= 1.0 + 1e-15);
            assert_eq!(v, l.eval(-w));
            prev = v;
        }
    }

    #[test]
    fn continuity_at_breakpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.gen_range(2..6);
            let data: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..30.0)).collect();
            let l = empirical_loss(&DataSet1D::new(data).unwrap());
            for s in l.segments() {
                let b = s.upper;
                let below = l.eval(b * (1.0 - 1e-12));
                let above = l.eval(b * (1.0 + 1e-12));
                assert!((below - above).abs() < 1e-10, "jump at breakpoint {b}");
            }
        }
    }

    #[test]
    fn population_matches_monte_carlo() {
        let f = population_loss_uniform(3.0).unwrap();
        for (i, &w) in [0.05, 1.0 / 3.0, 0.5, 1.2].iter().enumerate() {
            let (mc, se) = population_loss_monte_carlo(3.0, w, 200_000, 42 + i as u64);
            assert!(
                (f.eval(w) - mc).abs() < 3.0 * se.max(1e-9),
                "w={w}: closed {} vs mc {} (se {se})",
                f.eval(w),
                mc
            );
        }
        assert!((f.eval(0.5) - (1.0 - 2.0 / 4.5)).abs() < 1e-15);
    }

    #[test]
    fn two_valley_curvature_ratio() {
        let d = DataSet1D::new(vec![0.02, 0.03]).unwrap();
        for mode in [DataLossMode::Empirical, DataLossMode::Population { c: 0.05 }] {
            let l = two_valley_from_data(&d, 10.0, mode).unwrap();
            assert_eq!(l.eval(&[0.0, 0.0]), 0.0);
            // second differences near the origin, inside every quadratic core
            let h = 1e-4;
            let c1 = (l.eval(&[h, 0.0]) - 2.0 * l.eval(&[0.0, 0.0]) + l.eval(&[-h, 0.0])) / (h * h);
            let c2 = (l.eval(&[0.0, h]) - 2.0 * l.eval(&[0.0, 0.0]) + l.eval(&[0.0, -h])) / (h * h);
            assert!((c2 / c1 - 100.0).abs() < 1e-6, "curvature ratio {}", c2 / c1);
        }
    }

    #[test]
    fn two_valley_separable() {
        let d = DataSet1D::new(vec![1.0, 2.0]).unwrap();
        let l = two_valley_from_data(&d, 10.0, DataLossMode::Empirical).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (w1, w2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = l.eval(&[w1, w2]);
            let rhs = l.eval(&[w1, 0.0]) + l.eval(&[0.0, w2]);
            assert!((lhs - rhs).abs() < 1e-15);
        }
        assert!(two_valley_from_data(&d, 1.0, DataLossMode::Empirical).is_err());
    }

    #[test]
    fn homogeneity_identity_scaling() {
        let net = TinyReluNet::random(&[4, 8, 1], 7);
        let x: Vec<f64> = (0..4).map(|i| 0.3 * (i as f64 + 1.0)).collect();
        let (a, b) = homogeneity_check(&net, &x, 1.0, &[0.0]);
        assert_eq!(a, 0.0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn homogeneity_two_layer() {
        let net = TinyReluNet::random(&[4, 8, 1], 11);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = homogeneity_check(&net, &x, 4.0, &[0.0]);
        assert!(a < 1e-12, "depthwise discrepancy {a}");
        assert!(b < 1e-12, "first-layer discrepancy {b}");
    }

    #[test]
    fn homogeneity_first_layer_with_biases() {
        // the first-layer-only relation survives biases; the depthwise one
        // does not
        let net = TinyReluNet::random(&[3, 5, 5, 1], 21).with_random_biases(22);
        let x = [0.4, -0.7, 1.1];
        let (depthwise, first) = homogeneity_check(&net, &x, 3.0, &[0.5]);
        assert!(first < 1e-12, "first-layer discrepancy {first}");
        assert!(depthwise > 1e-6, "biases should break the depthwise relation");
    }
}

//! Weighted Savitzky-Golay coefficient construction and application.
//!
//! Window abscissae are scaled to `[-1, 1]` with spacing `1/m`. The local fit
//! has `n` polynomial parameters (degree `n - 1`) and minimises a weighted sum
//! of squared residuals. Row `j` of the smoothing bank evaluates the fit at
//! window position `j`; the centre row is used for interior outputs and the
//! remaining rows for the `m` samples at each end, where the window is pinned
//! to the first or last `2m + 1` samples.
//!
//! Derivatives are per sample step: the derivative matrix divides by `m`, so
//! multiply by `1/Δx` for physical units.

use crate::error::{Error, Result};
use crate::linalg::{condition_one, Cholesky, Matrix};

/// Largest acceptable 1-norm condition estimate of `XᵀWX`.
pub const MAX_CONDITION: f64 = 1e12;

/// Diagonal weighting of the local least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Weighting {
    /// Quadratic weights that vanish one step outside the window and have mean one.
    #[default]
    OptimalQuadratic,
    /// Ordinary (unweighted) least squares.
    Uniform,
}

/// Filter parameters: `n` polynomial terms fitted over `2m + 1` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FilterSpec {
    n: usize,
    m: usize,
    weighting: Weighting,
}

impl FilterSpec {
    /// Optimal-quadratic weighting.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Self::with_weighting(n, m, Weighting::default())
    }

    pub fn with_weighting(n: usize, m: usize, weighting: Weighting) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidSpec(format!("n >= 1 violated (n = {n})")));
        }
        if m < 1 {
            return Err(Error::InvalidSpec(format!("m >= 1 violated (m = {m})")));
        }
        if 2 * m + 1 <= n {
            return Err(Error::InvalidSpec(format!(
                "2m+1 > n violated (2m+1 = {}, n = {n})",
                2 * m + 1
            )));
        }
        Ok(Self { n, m, weighting })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// Window length `2m + 1`.
    pub fn window(&self) -> usize {
        2 * self.m + 1
    }

    /// Residual degrees of freedom of one local fit, `2m + 1 - n`.
    pub fn dof(&self) -> usize {
        self.window() - self.n
    }

    /// Smallest half-window admissible for `n`, i.e. the least `m` with `2m + 1 > n`.
    pub fn min_half_window(n: usize) -> usize {
        n.saturating_sub(1) / 2 + 1
    }

    /// An even `n` fits one more parameter than the odd `n - 1` without changing
    /// interior outputs, while widening every confidence interval. Returns a
    /// message when that applies.
    pub fn advisory(&self) -> Option<String> {
        (self.n % 2 == 0).then(|| {
            format!(
                "n = {} is even: n = {} gives the same interior smoothing with narrower confidence intervals",
                self.n,
                self.n - 1
            )
        })
    }
}

/// Quadratic weight at (possibly virtual) window index `i` (1-based).
///
/// Evaluates to zero at `i = 0` and `i = 2m + 2`.
pub fn quadratic_weight(i: f64, m: usize) -> f64 {
    let m = m as f64;
    3.0 * i / (2.0 * m + 3.0) * (2.0 - i / (m + 1.0))
}

/// Diagonal of the weight matrix, length `2m + 1`.
pub fn build_weights(spec: &FilterSpec) -> Vec<f64> {
    match spec.weighting {
        Weighting::Uniform => vec![1.0; spec.window()],
        Weighting::OptimalQuadratic => (1..=spec.window())
            .map(|i| quadratic_weight(i as f64, spec.m))
            .collect(),
    }
}

/// Window abscissae `x_i = (i - 1 - m) / m`.
pub fn abscissae(m: usize) -> Vec<f64> {
    (0..=2 * m).map(|k| (k as f64 - m as f64) / m as f64).collect()
}

/// Ingredients of the local fit.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    /// Abscissae, length `2m + 1`.
    pub x: Vec<f64>,
    /// `X[i][j] = x_i^j`, `(2m + 1) × n`.
    pub design: Matrix,
    /// Diagonal of `W`.
    pub weights: Vec<f64>,
    /// `D[k-1][k] = k/m`, `n × n`.
    pub derivative: Matrix,
}

pub fn build_design(spec: &FilterSpec) -> DesignMatrices {
    let x = abscissae(spec.m);
    let design = Matrix::from_fn(spec.window(), spec.n, |i, j| x[i].powi(j as i32));
    let mut derivative = Matrix::zeros(spec.n, spec.n);
    for k in 1..spec.n {
        derivative.set(k - 1, k, k as f64 / spec.m as f64);
    }
    DesignMatrices { x, design, weights: build_weights(spec), derivative }
}

/// Smoothing and first-derivative coefficient rows for every window position.
#[derive(Debug, Clone)]
pub struct CoefficientBank {
    spec: FilterSpec,
    smooth: Matrix,
    deriv: Matrix,
}

/// `X (XᵀWX)⁻¹ XᵀW` and `X D (XᵀWX)⁻¹ XᵀW`.
pub fn build_coefficient_bank(spec: &FilterSpec) -> Result<CoefficientBank> {
    let DesignMatrices { design, weights, derivative, .. } = build_design(spec);
    let xtw = Matrix::from_fn(spec.n, spec.window(), |i, j| design.get(j, i) * weights[j]);
    let normal = xtw.matmul(&design);
    let chol = Cholesky::factor(&normal).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let condition = condition_one(&normal, &chol);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let projector = chol.solve_matrix(&xtw);
    let mut smooth = design.matmul(&projector);
    let mut deriv = design.matmul(&derivative).matmul(&projector);
    reflect_average(&mut smooth, 1.0);
    reflect_average(&mut deriv, -1.0);
    Ok(CoefficientBank { spec: *spec, smooth, deriv })
}

/// The weights are symmetric about the window centre, so
/// `A[j][i] = sign · A[w-1-j][w-1-i]`. Averaging each mirrored pair makes
/// that hold bit-exactly, including the centre row.
fn reflect_average(a: &mut Matrix, sign: f64) {
    let w = a.rows();
    for j in 0..w {
        for i in 0..w {
            let (rj, ri) = (w - 1 - j, w - 1 - i);
            if (j, i) < (rj, ri) {
                let avg = 0.5 * (a.get(j, i) + sign * a.get(rj, ri));
                a.set(j, i, avg);
                a.set(rj, ri, sign * avg);
            } else if (j, i) == (rj, ri) && sign < 0.0 {
                a.set(j, i, 0.0);
            }
        }
    }
}

impl CoefficientBank {
    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    /// Full smoothing matrix; row `j` (0-based) is `c(j+1)`.
    pub fn smooth(&self) -> &Matrix {
        &self.smooth
    }

    pub fn deriv(&self) -> &Matrix {
        &self.deriv
    }

    pub fn smooth_row(&self, j: usize) -> &[f64] {
        self.smooth.row(j)
    }

    pub fn deriv_row(&self, j: usize) -> &[f64] {
        self.deriv.row(j)
    }

    /// Coefficient row and window start used for output `t` of a series of length `q`.
    pub fn placement(&self, t: usize, q: usize) -> (usize, usize) {
        let m = self.spec.m;
        let last_start = q - self.spec.window();
        if t < m {
            (t, 0)
        } else if t >= q - m {
            (t - last_start, last_start)
        } else {
            (m, t - m)
        }
    }

    /// Filters `y`, producing smoothed values and per-sample derivatives.
    pub fn apply(&self, y: &[f64]) -> Result<FilteredSeries> {
        let q = y.len();
        let w = self.spec.window();
        if q < w {
            return Err(Error::SeriesTooShort { len: q, min: w });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut yf = Vec::with_capacity(q);
        let mut dyf = Vec::with_capacity(q);
        for t in 0..q {
            let (j, start) = self.placement(t, q);
            let window = &y[start..start + w];
            yf.push(dot(self.smooth.row(j), window));
            dyf.push(dot(self.deriv.row(j), window));
        }
        Ok(FilteredSeries { yf, dyf })
    }

    /// `Σ c(j)_i²` for each row.
    pub fn smooth_sum_squares(&self) -> Vec<f64> {
        sum_squares(&self.smooth)
    }

    pub fn deriv_sum_squares(&self) -> Vec<f64> {
        sum_squares(&self.deriv)
    }
}

fn sum_squares(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|j| m.row(j).iter().map(|c| c * c).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Filter output: smoothed series and its first derivative per sample step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSeries {
    pub yf: Vec<f64>,
    pub dyf: Vec<f64>,
}

impl FilteredSeries {
    pub fn len(&self) -> usize {
        self.yf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.yf.is_empty()
    }

    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.yf).map(|(a, b)| a - b).collect()
    }
}

/// Builds the bank for `spec` and filters `y` with it.
pub fn apply_filter(spec: &FilterSpec, y: &[f64]) -> Result<FilteredSeries> {
    let w = spec.window();
    if y.len() < w {
        return Err(Error::SeriesTooShort { len: y.len(), min: w });
    }
    build_coefficient_bank(spec)?.apply(y)
}

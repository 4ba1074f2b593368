//! Eigenvalue families of `-A`, interpolation-space norms and the sine
//! transform between grid values and spectral coefficients.
//!
//! Everything here is diagonal in the basis `e_k(x) = √2 sin(kπx)` on `[0, 1]`
//! with Dirichlet boundary conditions. Mode indices are 1-based in the
//! mathematics and 0-based in the slices: `eigenvalues()[k - 1] = α_k`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Which eigenvalue family an operator was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `α_k = (kπ)²`, the Dirichlet Laplacian on `[0, 1]`.
    DirichletLaplacian,
    /// `α_k = (kπ)⁴`.
    Bilaplacian1d,
    /// `α_k = scale · k^{1/(1-η₀)}`.
    PowerLaw,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::DirichletLaplacian => "dirichlet_laplacian",
            Family::Bilaplacian1d => "bilaplacian_1d",
            Family::PowerLaw => "power_law",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet_laplacian" => Ok(Family::DirichletLaplacian),
            "bilaplacian_1d" => Ok(Family::Bilaplacian1d),
            "power_law" => Ok(Family::PowerLaw),
            other => Err(invalid("family", format!("unknown operator family `{other}`"))),
        }
    }
}

/// Truncated diagonal operator `-A` with eigenvalues `α_1 ≤ … ≤ α_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    family: Family,
    eigenvalues: Vec<f64>,
    eta0: f64,
    /// `α_k = coefficient · k^exponent` holds exactly for every built-in family.
    coefficient: f64,
    exponent: f64,
}

/// Builds the first `n` eigenvalues of the requested family.
///
/// The Laplacian pins `η₀ = 1/2` and the bilaplacian `η₀ = 3/4` regardless of
/// the `eta0` argument, which is still validated. `scale` only affects
/// [`Family::PowerLaw`].
pub fn make_operator(family: Family, n: usize, eta0: f64, scale: f64) -> Result<SpectralOperator> {
    if n == 0 {
        return Err(invalid("n", "at least one mode is required"));
    }
    if !(eta0 > 0.0 && eta0 < 1.0) {
        return Err(invalid("eta0", format!("{eta0} is outside (0, 1)")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", format!("{scale} must be positive")));
    }
    let (coefficient, exponent, eta0) = match family {
        Family::DirichletLaplacian => (PI * PI, 2.0, 0.5),
        Family::Bilaplacian1d => (PI.powi(4), 4.0, 0.75),
        Family::PowerLaw => (scale, 1.0 / (1.0 - eta0), eta0),
    };
    let eigenvalues = (1..=n)
        .map(|k| {
            let kf = k as f64;
            match family {
                Family::DirichletLaplacian => (kf * PI).powi(2),
                Family::Bilaplacian1d => (kf * PI).powi(4),
                Family::PowerLaw => scale * kf.powf(exponent),
            }
        })
        .collect();
    Ok(SpectralOperator {
        family,
        eigenvalues,
        eta0,
        coefficient,
        exponent,
    })
}

impl SpectralOperator {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `α_1`, the smallest eigenvalue.
    pub fn lowest(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Σ_{k≤N} α_k^{-(1-η)}`.
    pub fn partial_sum(&self, eta: f64) -> f64 {
        let s = 1.0 - eta;
        self.eigenvalues.iter().map(|a| a.powf(-s)).sum()
    }

    /// Integral-test bracket `(lower, upper)` for the tail `Σ_{k>N} α_k^{-(1-η)}`
    /// of the untruncated family. `None` when the series diverges (`η ≥ η₀`).
    pub fn tail_bracket(&self, eta: f64) -> Option<(f64, f64)> {
        let ps = self.exponent * (1.0 - eta);
        if ps <= 1.0 {
            return None;
        }
        let n = self.len() as f64;
        let c = self.coefficient.powf(-(1.0 - eta)) / (ps - 1.0);
        Some((c * (n + 1.0).powf(1.0 - ps), c * n.powf(1.0 - ps)))
    }

    /// Upper bound on `Σ_{k≥1} α_k^{-(1-η)}` valid for every truncation level.
    pub fn series_bound(&self, eta: f64) -> Option<f64> {
        let ps = self.exponent * (1.0 - eta);
        if ps <= 1.0 {
            return None;
        }
        let first = self.coefficient.powf(-(1.0 - eta));
        Some(first + first / (ps - 1.0))
    }

    /// `N_μ^λ = max{k : 1 - 4μ(α_k + λ) ≥ 0}`, zero when no mode qualifies.
    pub fn overdamped_count(&self, mu: f64, lambda: f64) -> usize {
        self.eigenvalues
            .iter()
            .take_while(|&&a| 1.0 - 4.0 * mu * (a + lambda) >= 0.0)
            .count()
    }

    /// `|v|_{H^δ(λ)}`; see [`norm`].
    pub fn norm(&self, v: &[f64], spec: NormSpec) -> Result<f64> {
        if v.len() > self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: v.len(),
            });
        }
        if spec.delta == 0.0 {
            return Ok(v.iter().map(|c| c * c).sum::<f64>().sqrt());
        }
        let sum: f64 = v
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, a)| (a + spec.lambda_shift).powf(spec.delta) * c * c)
            .sum();
        Ok(sum.sqrt())
    }
}

/// Coefficients of a function against the orthonormal sine basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeVector(Vec<f64>);

impl ModeVector {
    pub fn zeros(n: usize) -> Self {
        ModeVector(vec![0.0; n])
    }

    /// The basis vector `e_k` (1-based) in an `n`-mode space.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k - 1] = 1.0;
        ModeVector(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Plain `H` norm, which by Parseval is the Euclidean norm of the coefficients.
    pub fn h_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ModeVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for ModeVector {
    fn from(v: Vec<f64>) -> Self {
        ModeVector(v)
    }
}

impl Deref for ModeVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ModeVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Exponent and shift of `|f|²_{H^δ(λ)} = Σ (α_k+λ)^δ c_k²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub delta: f64,
    pub lambda_shift: f64,
}

impl NormSpec {
    pub fn plain(delta: f64) -> Self {
        NormSpec {
            delta,
            lambda_shift: 0.0,
        }
    }

    pub fn shifted(delta: f64, lambda_shift: f64) -> Self {
        NormSpec {
            delta,
            lambda_shift,
        }
    }
}

/// `|v|_{H^δ(λ)}`. With `δ = 0` this is the `H` norm for every shift.
pub fn norm(v: &ModeVector, spec: NormSpec, op: &SpectralOperator) -> Result<f64> {
    op.norm(v, spec)
}

/// Interior Dirichlet grid `x_j = j/(G+1)`, `j = 1..=G`.
pub fn grid_points(grid: usize) -> Vec<f64> {
    let h = 1.0 / (grid as f64 + 1.0);
    (1..=grid).map(|j| j as f64 * h).collect()
}

/// Precomputed sampling table `√2 sin(kπ x_j)` for `k ≤ N`, `j ≤ G`.
///
/// `to_spectral` uses quadrature weight `1/(G+1)`, which makes the pair an
/// exact inverse on `span{e_1..e_N}` whenever `G ≥ N`.
#[derive(Debug, Clone)]
pub struct SineTransform {
    modes: usize,
    grid: usize,
    table: Vec<f64>,
}

impl SineTransform {
    pub fn new(modes: usize, grid: usize) -> Result<Self> {
        if grid < 1 {
            return Err(invalid("grid", "at least one grid point is required"));
        }
        let period = 2 * (grid + 1);
        let step = PI / (grid as f64 + 1.0);
        let mut table = Vec::with_capacity(modes * grid);
        for k in 1..=modes {
            for j in 1..=grid {
                // reduce k·j modulo the period so the argument stays in [0, 2π)
                let m = (k * j) % period;
                table.push(std::f64::consts::SQRT_2 * (m as f64 * step).sin());
            }
        }
        Ok(SineTransform { modes, grid, table })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.table[k * self.grid..(k + 1) * self.grid]
    }

    /// Writes `Σ_k c_k e_k(x_j)` into `out`. Uses the first `min(N, len)` coefficients.
    pub fn to_physical_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.grid);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, &c) in coeffs.iter().take(self.modes).enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(self.row(k)) {
                *o += c * s;
            }
        }
    }

    /// Writes the discrete projection of grid samples onto `e_1..e_N` into `out`.
    pub fn to_spectral_into(&self, samples: &[f64], out: &mut [f64]) {
        debug_assert_eq!(samples.len(), self.grid);
        let w = 1.0 / (self.grid as f64 + 1.0);
        for (k, o) in out.iter_mut().take(self.modes).enumerate() {
            let dot: f64 = self.row(k).iter().zip(samples).map(|(s, x)| s * x).sum();
            *o = w * dot;
        }
    }

    pub fn to_physical(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid];
        self.to_physical_into(v, &mut out);
        out
    }

    pub fn to_spectral(&self, samples: &[f64]) -> ModeVector {
        let mut out = vec![0.0; self.modes];
        self.to_spectral_into(samples, &mut out);
        ModeVector(out)
    }

    /// Discrete `H` norm of grid samples, `(Σ_j w_j² / (G+1))^{1/2}`.
    pub fn grid_norm(&self, samples: &[f64]) -> f64 {
        (samples.iter().map(|x| x * x).sum::<f64>() / (self.grid as f64 + 1.0)).sqrt()
    }
}

/// Samples `v` on the interior grid of size `grid`.
pub fn to_physical(v: &ModeVector, grid: usize) -> Result<Vec<f64>> {
    Ok(SineTransform::new(v.len(), grid)?.to_physical(v))
}

/// Projects grid samples onto the first `n` sine modes.
pub fn to_spectral(samples: &[f64], n: usize) -> Result<ModeVector> {
    Ok(SineTransform::new(n, samples.len())?.to_spectral(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn laplacian_eigenvalues_and_pinned_eta() {
        let op = make_operator(Family::DirichletLaplacian, 3, 0.3, 1.0).unwrap();
        assert_eq!(op.eta0(), 0.5);
        let want = [PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        for (a, w) in op.eigenvalues().iter().zip(want) {
            assert!((a - w).abs() <= 1e-12 * w);
        }
        let bi = make_operator(Family::Bilaplacian1d, 2, 0.5, 1.0).unwrap();
        assert_eq!(bi.eta0(), 0.75);
        assert!((bi.eigenvalues()[1] - (2.0 * PI).powi(4)).abs() < 1e-9);
    }

    #[test]
    fn power_law_at_half() {
        let op = make_operator(Family::PowerLaw, 2, 0.5, 1.0).unwrap();
        assert_eq!(op.eigenvalues(), &[1.0, 4.0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_operator(Family::PowerLaw, 0, 0.5, 1.0).is_err());
        assert!(make_operator(Family::PowerLaw, 3, 0.0, 1.0).is_err());
        assert!(make_operator(Family::PowerLaw, 3, 1.0, 1.0).is_err());
        assert!(make_operator(Family::PowerLaw, 3, 0.5, -1.0).is_err());
        assert!("neumann".parse::<Family>().is_err());
    }

    #[test]
    fn power_law_growth_envelope() {
        // C⁻¹ k^{1/(1-η₀)} ≤ α_k ≤ C k^{1/(1-η₀)} with C = max(scale, 1/scale)
        let scale = 0.3;
        let op = make_operator(Family::PowerLaw, 200, 0.6, scale).unwrap();
        let c = scale.max(1.0 / scale);
        for (i, a) in op.eigenvalues().iter().enumerate() {
            let kp = ((i + 1) as f64).powf(1.0 / 0.4);
            assert!(*a >= kp / c - 1e-9 && *a <= c * kp + 1e-9);
        }
    }

    #[test]
    fn partial_sums_bracketed_by_integral_test() {
        // Direct summation up to 10⁶ modes is the oracle for the tail.
        let s = 0.6;
        let direct = |n: usize| -> f64 {
            (1..=n).map(|k| ((k as f64) * PI).powi(2).powf(-s)).sum()
        };
        let op = make_operator(Family::DirichletLaplacian, 1000, 0.5, 1.0).unwrap();
        let at_1000 = op.partial_sum(0.4);
        assert!((at_1000 - direct(1000)).abs() < 1e-10);
        let far = direct(1_000_000);
        let (lo, hi) = op.tail_bracket(0.4).unwrap();
        let gap = far - at_1000;
        // the far partial sum only sees part of the tail, so only the upper bound applies
        assert!(gap <= hi && gap > 0.0);
        assert!(lo > 0.0 && lo < hi);
        assert!(far <= op.series_bound(0.4).unwrap());
    }

    #[test]
    fn partial_sums_monotone_and_bounded() {
        for eta in [0.1, 0.3, 0.45] {
            let mut prev = 0.0;
            for n in [1, 4, 16, 64, 256, 1024, 4096] {
                let op = make_operator(Family::DirichletLaplacian, n, 0.5, 1.0).unwrap();
                let s = op.partial_sum(eta);
                assert!(s > prev);
                assert!(s <= op.series_bound(eta).unwrap());
                prev = s;
            }
        }
        let op = make_operator(Family::DirichletLaplacian, 10, 0.5, 1.0).unwrap();
        assert!(op.series_bound(0.5).is_none());
    }

    #[test]
    fn overdamped_count_threshold() {
        let op = make_operator(Family::PowerLaw, 10, 0.5, 1.0).unwrap();
        // α_k = k², 1 - 4μ(k²+λ) ≥ 0 ⇔ k² ≤ 1/(4μ) - λ
        assert_eq!(op.overdamped_count(0.01, 0.0), 5);
        assert_eq!(op.overdamped_count(0.01, 9.0), 4);
        assert_eq!(op.overdamped_count(1.0, 0.0), 0);
    }

    #[test]
    fn norm_examples() {
        let op = make_operator(Family::DirichletLaplacian, 4, 0.5, 1.0).unwrap();
        for k in 1..=4 {
            let e = ModeVector::unit(4, k);
            let n = norm(&e, NormSpec::plain(-1.0), &op).unwrap();
            assert!((n - op.eigenvalues()[k - 1].powf(-0.5)).abs() < 1e-15);
        }
        let e1 = ModeVector::unit(4, 1);
        let n = norm(&e1, NormSpec::shifted(1.0, 5.0), &op).unwrap();
        assert!((n - (PI * PI + 5.0).sqrt()).abs() < 1e-14);
        assert_eq!(norm(&ModeVector::zeros(0), NormSpec::plain(1.0), &op).unwrap(), 0.0);
        assert!(norm(&ModeVector::zeros(5), NormSpec::plain(0.0), &op).is_err());
    }

    #[test]
    fn sampling_e1_on_three_points() {
        let vals = to_physical(&ModeVector::unit(1, 1), 3).unwrap();
        let r2 = std::f64::consts::SQRT_2;
        let want = [r2 * (PI / 4.0).sin(), r2, r2 * (3.0 * PI / 4.0).sin()];
        for (a, b) in vals.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(to_physical(&ModeVector::unit(1, 1), 0).is_err());
    }

    #[test]
    fn projection_of_constant_approaches_integral() {
        let g = 4095;
        let c = to_spectral(&vec![1.0; g], 6).unwrap();
        for k in 1..=6 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let exact = std::f64::consts::SQRT_2 * (1.0 - sign) / (k as f64 * PI);
            assert!((c[k - 1] - exact).abs() < 1e-5, "k={k}: {} vs {exact}", c[k - 1]);
        }
    }

    #[test]
    fn discrete_parseval_for_full_grid() {
        // Orthogonality of the discrete sine vectors, checked through the grid norm.
        let t = SineTransform::new(512, 512).unwrap();
        let v: Vec<f64> = (0..512).map(|k| ((k * 37 % 11) as f64 - 5.0) / (k + 1) as f64).collect();
        let phys = t.to_physical(&v);
        let lhs = t.grid_norm(&phys);
        let rhs = ModeVector::from(v).h_norm();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(coeffs in prop::collection::vec(-10.0f64..10.0, 64)) {
            let t = SineTransform::new(64, 256).unwrap();
            let back = t.to_spectral(&t.to_physical(&coeffs));
            for (a, b) in back.iter().zip(&coeffs) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn delta_zero_is_lambda_invariant(
            coeffs in prop::collection::vec(-5.0f64..5.0, 1..32),
            lambda in 0.0f64..1e4,
        ) {
            let op = make_operator(Family::DirichletLaplacian, 32, 0.5, 1.0).unwrap();
            let v = ModeVector::from(coeffs);
            let a = norm(&v, NormSpec::shifted(0.0, lambda), &op).unwrap();
            let b = norm(&v, NormSpec::plain(0.0), &op).unwrap();
            prop_assert_eq!(a, b);
            let euclid = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!((a - euclid).abs() <= 1e-14 * euclid.max(1.0));
        }
    }
}

//! Nemytskii drift and diffusion fields, their pointwise inverses, and
//! Lipschitz approximations by piecewise-affine interpolation.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::spectral::grid_points;

/// A pointwise field `(t, x, u) ↦ b(t, x, u)` acting on physical-grid values.
pub trait Nemytskii: Send + Sync {
    fn eval(&self, t: f64, x: f64, u: f64) -> f64;

    /// `Some(c)` when the field is the constant `c`; lets the simulator skip
    /// transforms.
    fn constant(&self) -> Option<f64> {
        None
    }
}

/// A diffusion multiplier with a nondegeneracy floor `g ≥ floor > 0`.
pub trait Multiplier: Nemytskii {
    fn floor(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierForm {
    Constant(f64),
    /// `g(u) = min(floor + |u|^β, M(1 + |u|))`.
    Power { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderMultiplier {
    form: MultiplierForm,
    floor: f64,
    growth: f64,
}

impl HolderMultiplier {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(invalid("value", format!("{value} must be finite and nonnegative")));
        }
        Ok(HolderMultiplier {
            form: MultiplierForm::Constant(value),
            floor: value,
            growth: value,
        })
    }

    pub fn power(beta: f64, floor: f64, growth: f64) -> Result<Self> {
        if !(beta > 0.75 && beta <= 1.0) {
            return Err(invalid("beta", format!("{beta} is outside (3/4, 1]")));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(invalid("floor", format!("{floor} must be positive")));
        }
        if !(growth >= floor && growth.is_finite()) {
            return Err(invalid("growth", format!("{growth} must be at least the floor {floor}")));
        }
        Ok(HolderMultiplier {
            form: MultiplierForm::Power { beta },
            floor,
            growth,
        })
    }

    pub fn form(&self) -> MultiplierForm {
        self.form
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    /// Exponent β (1 for constants).
    pub fn beta(&self) -> f64 {
        match self.form {
            MultiplierForm::Constant(_) => 1.0,
            MultiplierForm::Power { beta } => beta,
        }
    }

    /// Constant `M_H` in `|g(u) - g(w)| ≤ M_H |u - w|^β` for `|u - w| ≤ 1`.
    pub fn holder_constant(&self) -> f64 {
        match self.form {
            MultiplierForm::Constant(_) => 0.0,
            MultiplierForm::Power { .. } => self.growth.max(1.0),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self.form {
            MultiplierForm::Constant(c) => c,
            MultiplierForm::Power { beta } => {
                let a = u.abs();
                (self.floor + a.powf(beta)).min(self.growth * (1.0 + a))
            }
        }
    }
}

impl Nemytskii for HolderMultiplier {
    fn eval(&self, _t: f64, _x: f64, u: f64) -> f64 {
        self.value(u)
    }

    fn constant(&self) -> Option<f64> {
        match self.form {
            MultiplierForm::Constant(c) => Some(c),
            MultiplierForm::Power { .. } => None,
        }
    }
}

impl Multiplier for HolderMultiplier {
    fn floor(&self) -> f64 {
        self.floor
    }
}

impl fmt::Display for HolderMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.form {
            MultiplierForm::Constant(c) => write!(f, "constant({c})"),
            MultiplierForm::Power { beta } => {
                write!(f, "power(beta={beta}, floor={}, growth={})", self.floor, self.growth)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HolderDrift {
    Zero,
    /// `b(u) = κ sign(u) |u|^α`.
    Power { kappa: f64, alpha: f64 },
}

impl HolderDrift {
    pub fn power(kappa: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 1]")));
        }
        if !kappa.is_finite() {
            return Err(invalid("kappa", "must be finite"));
        }
        Ok(HolderDrift::Power { kappa, alpha })
    }

    pub fn value(&self, u: f64) -> f64 {
        match *self {
            HolderDrift::Zero => 0.0,
            HolderDrift::Power { kappa, alpha } => kappa * u.signum() * u.abs().powf(alpha),
        }
    }

    /// Hölder exponent (1 for the zero field).
    pub fn alpha(&self) -> f64 {
        match *self {
            HolderDrift::Zero => 1.0,
            HolderDrift::Power { alpha, .. } => alpha,
        }
    }

    /// `M` in `|b(u) - b(w)| ≤ M|u - w|^α` and `|b(u)| ≤ M(1 + |u|)`.
    pub fn holder_constant(&self) -> f64 {
        match *self {
            HolderDrift::Zero => 0.0,
            // sign(u)|u|^α is α-Hölder on ℝ with constant 2^{1-α}
            HolderDrift::Power { kappa, alpha } => kappa.abs() * 2f64.powf(1.0 - alpha),
        }
    }
}

impl Nemytskii for HolderDrift {
    fn eval(&self, _t: f64, _x: f64, u: f64) -> f64 {
        self.value(u)
    }

    fn constant(&self) -> Option<f64> {
        match self {
            HolderDrift::Zero => Some(0.0),
            HolderDrift::Power { kappa, .. } if *kappa == 0.0 => Some(0.0),
            HolderDrift::Power { .. } => None,
        }
    }
}

impl fmt::Display for HolderDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HolderDrift::Zero => f.write_str("zero"),
            HolderDrift::Power { kappa, alpha } => write!(f, "power(kappa={kappa}, alpha={alpha})"),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `b(t, x_j, u_j)` at the interior grid points `x_j = j/(G+1)`.
pub fn apply_drift(b: &dyn Nemytskii, u_phys: &[f64], t: f64) -> Vec<f64> {
    let xs = grid_points(u_phys.len());
    u_phys.iter().zip(xs).map(|(&u, x)| b.eval(t, x, u)).collect()
}

/// `g(t, x_j, u_j) w_j`.
pub fn apply_multiplier(g: &dyn Nemytskii, u_phys: &[f64], w_phys: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(u_phys.len(), w_phys.len())?;
    let xs = grid_points(u_phys.len());
    Ok(u_phys
        .iter()
        .zip(w_phys)
        .zip(xs)
        .map(|((&u, &w), x)| g.eval(t, x, u) * w)
        .collect())
}

/// `w_j / g(t, x_j, u_j)`; rejects values below the multiplier's floor.
pub fn inverse_multiplier(
    g: &dyn Multiplier,
    u_phys: &[f64],
    w_phys: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    check_len(u_phys.len(), w_phys.len())?;
    let floor = g.floor();
    if !(floor > 0.0) {
        return Err(Error::FloorViolation { value: floor, floor });
    }
    let xs = grid_points(u_phys.len());
    u_phys
        .iter()
        .zip(w_phys)
        .zip(xs)
        .map(|((&u, &w), x)| {
            let value = g.eval(t, x, u);
            // interpolated values may sit an ulp below the floor
            if value < floor * (1.0 - 1e-12) || !value.is_finite() {
                Err(Error::FloorViolation { value, floor })
            } else {
                Ok(w / value)
            }
        })
        .collect()
}

/// Half-width of the interval on which approximation errors are audited.
pub const AUDIT_RADIUS: f64 = 10.0;

/// Piecewise-affine interpolant of a scalar function on the lattice `ℤ/n`,
/// extended affinely outside `[-n, n]` with the slope of the outermost cell.
#[derive(Clone)]
pub struct LipschitzApprox {
    n: usize,
    base: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    error_bound: f64,
    lipschitz: f64,
    floor: f64,
    // base values at k/n for k = -n², ..., n², when small enough to tabulate
    nodes: Option<Arc<[f64]>>,
}

/// Largest node table kept in memory.
const MAX_TABULATED_NODES: usize = 1 << 22;

impl fmt::Debug for LipschitzApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzApprox")
            .field("n", &self.n)
            .field("error_bound", &self.error_bound)
            .field("lipschitz", &self.lipschitz)
            .field("floor", &self.floor)
            .finish()
    }
}

impl LipschitzApprox {
    /// Interpolates `base` on `ℤ/n` and audits the sup-distance on a grid of
    /// spacing `1/(100n)` over `[-10, 10]`. `floor` is the declared lower
    /// bound carried over to [`Multiplier::floor`] (0 for drifts).
    pub fn interpolate(
        base: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        n: usize,
        floor: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "refinement level must be at least 1"));
        }
        let nf = n as f64;
        let cells = 2 * n * n;
        let node = |i: usize| base(-nf + i as f64 / nf);
        let nodes: Option<Arc<[f64]>> =
            (cells < MAX_TABULATED_NODES).then(|| (0..=cells).map(node).collect());
        let mut lip = 0.0f64;
        let mut left = node(0);
        for i in 1..=cells {
            let right = nodes.as_ref().map_or_else(|| node(i), |t| t[i]);
            lip = lip.max(((right - left) * nf).abs());
            left = right;
        }
        let mut approx = LipschitzApprox {
            n,
            base,
            error_bound: 0.0,
            lipschitz: lip,
            floor,
            nodes,
        };
        let steps = (2.0 * AUDIT_RADIUS * 100.0 * nf).round() as usize;
        let mut err = 0.0f64;
        for i in 0..=steps {
            let u = -AUDIT_RADIUS + i as f64 / (100.0 * nf);
            err = err.max((approx.value(u) - (approx.base)(u)).abs());
        }
        approx.error_bound = err;
        Ok(approx)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Measured `c_n`.
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    /// Largest cell slope, i.e. the global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn base(&self, u: f64) -> f64 {
        (self.base)(u)
    }

    pub fn value(&self, u: f64) -> f64 {
        let nf = self.n as f64;
        let k = (u * nf).floor().clamp(-nf * nf, nf * nf - 1.0);
        let a = k / nf;
        let (fa, fb) = match &self.nodes {
            Some(t) => {
                let i = (k + nf * nf) as usize;
                (t[i], t[i + 1])
            }
            None => ((self.base)(a), (self.base)((k + 1.0) / nf)),
        };
        fa + (fb - fa) * (u - a) * nf
    }
}

impl Nemytskii for LipschitzApprox {
    fn eval(&self, _t: f64, _x: f64, u: f64) -> f64 {
        self.value(u)
    }
}

impl Multiplier for LipschitzApprox {
    fn floor(&self) -> f64 {
        self.floor
    }
}

/// Lipschitz approximation `g_n` of a multiplier.
pub fn mollify_1d(g: &HolderMultiplier, n: usize) -> Result<LipschitzApprox> {
    let g0 = *g;
    LipschitzApprox::interpolate(Arc::new(move |u| g0.value(u)), n, g.floor())
}

/// Lipschitz approximation `b_n` of a drift.
pub fn mollify_drift(b: &HolderDrift, n: usize) -> Result<LipschitzApprox> {
    let b0 = *b;
    LipschitzApprox::interpolate(Arc::new(move |u| b0.value(u)), n, 0.0)
}

type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Lipschitz approximation of a continuous map on the first `d ≤ 3`
/// coordinates: values on the lattice `(ℤ/n)^d` are truncated to norm `n`
/// and blended with multilinear vertex weights.
#[derive(Clone)]
pub struct RavskyApprox {
    f: VectorField,
    d: usize,
    n: usize,
}

impl fmt::Debug for RavskyApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RavskyApprox")
            .field("d", &self.d)
            .field("n", &self.n)
            .finish()
    }
}

pub fn ravsky_approximate(f: VectorField, d: usize, n: usize) -> Result<RavskyApprox> {
    if d == 0 || d > 3 {
        return Err(invalid("d", format!("{d} is outside 1..=3")));
    }
    if n == 0 {
        return Err(invalid("n", "refinement level must be at least 1"));
    }
    Ok(RavskyApprox { f, d, n })
}

impl RavskyApprox {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Lattice vertices of the cell containing `p_n x` with their weights.
    pub fn vertex_weights(&self, x: &[f64]) -> Vec<(Vec<f64>, f64)> {
        let nf = self.n as f64;
        let mut base = [0.0; 3];
        let mut frac = [0.0; 3];
        for i in 0..self.d {
            let xi = x.get(i).copied().unwrap_or(0.0) * nf;
            let fl = xi.floor();
            base[i] = fl;
            frac[i] = xi - fl;
        }
        (0..1usize << self.d)
            .map(|mask| {
                let mut vertex = Vec::with_capacity(self.d);
                let mut w = 1.0;
                for i in 0..self.d {
                    let up = mask >> i & 1 == 1;
                    vertex.push((base[i] + if up { 1.0 } else { 0.0 }) / nf);
                    w *= if up { frac[i] } else { 1.0 - frac[i] };
                }
                (vertex, w)
            })
            .collect()
    }

    /// `f` at a lattice point with its output norm truncated at `n`.
    fn truncated(&self, vertex: &[f64]) -> Vec<f64> {
        let mut y = (self.f)(vertex);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cap = self.n as f64;
        if norm > cap {
            y.iter_mut().for_each(|v| *v *= cap / norm);
        }
        y
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (vertex, w) in self.vertex_weights(x) {
            if w == 0.0 {
                continue;
            }
            let y = self.truncated(&vertex);
            if out.is_empty() {
                out = vec![0.0; y.len()];
            }
            for (o, v) in out.iter_mut().zip(&y) {
                *o += w * v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SineTransform;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_norm(v: &[f64]) -> f64 {
        (v.iter().map(|x| x * x).sum::<f64>() / (v.len() + 1) as f64).sqrt()
    }

    #[test]
    fn multiplier_at_zero_is_identity() {
        let g = HolderMultiplier::power(0.8, 1.0, 10.0).unwrap();
        let w: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        assert_eq!(apply_multiplier(&g, &[0.0; 16], &w, 0.0).unwrap(), w);
    }

    #[test]
    fn square_root_drift_example() {
        let b = HolderDrift::power(1.0, 0.5).unwrap();
        assert!(apply_drift(&b, &[4.0; 8], 0.0).iter().all(|&v| v == 2.0));
        assert_eq!(b.value(-4.0), -2.0);
    }

    #[test]
    fn inverse_of_constant_halves() {
        let g = HolderMultiplier::constant(2.0).unwrap();
        let out = inverse_multiplier(&g, &[0.3, -1.0], &[1.0, 3.0], 0.0).unwrap();
        assert_eq!(out, vec![0.5, 1.5]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(HolderMultiplier::power(0.7, 1.0, 2.0).is_err());
        assert!(HolderMultiplier::power(0.8, 0.0, 2.0).is_err());
        assert!(HolderMultiplier::power(0.8, 3.0, 2.0).is_err());
        assert!(HolderDrift::power(1.0, 0.0).is_err());
        assert!(matches!(
            apply_multiplier(&HolderDrift::Zero, &[0.0; 3], &[0.0; 4], 0.0),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
        let zero = HolderMultiplier::constant(0.0).unwrap();
        assert!(matches!(
            inverse_multiplier(&zero, &[0.0], &[1.0], 0.0),
            Err(Error::FloorViolation { .. })
        ));
    }

    #[test]
    fn nemytskii_holder_estimate_on_random_states() {
        let g = HolderMultiplier::power(0.8, 1.0, 50.0).unwrap();
        let tr = SineTransform::new(32, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0) / (1.0 + rng.gen::<f64>())).collect();
            let scale = rng.gen_range(0.0..0.3);
            let b: Vec<f64> = a.iter().map(|x| x + scale * rng.gen_range(-1.0..1.0)).collect();
            let (ua, ub) = (tr.to_physical(&a), tr.to_physical(&b));
            let diff: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| x - y).collect();
            let d = grid_norm(&diff);
            if d > 1.0 {
                continue;
            }
            let ga = apply_drift(&g, &ua, 0.0);
            let gb = apply_drift(&g, &ub, 0.0);
            let gd: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x - y).collect();
            assert!(grid_norm(&gd) <= g.holder_constant() * d.powf(0.8) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn inverse_round_trip_and_norm() {
        let g = HolderMultiplier::power(0.9, 0.5, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let w: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let inv = inverse_multiplier(&g, &u, &w, 0.0).unwrap();
            assert!(grid_norm(&inv) <= grid_norm(&w) / g.floor() * (1.0 + 1e-14));
            let back = apply_multiplier(&g, &u, &inv, 0.0).unwrap();
            for (x, y) in back.iter().zip(&w) {
                assert!((x - y).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn mollified_power_error_and_lipschitz() {
        let g = HolderMultiplier::power(0.8, 1.0, 1e6).unwrap();
        let mut prev = f64::INFINITY;
        for n in [4, 16, 64, 256] {
            let gn = mollify_1d(&g, n).unwrap();
            let c = gn.error_bound();
            assert!(c <= 2.0 * (n as f64).powf(-0.8), "n = {n}: {c}");
            assert!(c < prev);
            prev = c;
            assert!(gn.lipschitz() <= (n as f64).powf(0.2) * (1.0 + 1e-12));
            for i in 0..=2000 {
                let u = -10.0 + i as f64 * 0.01;
                assert!(gn.value(u) >= g.floor());
            }
        }
    }

    #[test]
    fn affine_functions_are_reproduced() {
        let f = LipschitzApprox::interpolate(Arc::new(|u| 3.0 * u - 1.0), 8, 0.0).unwrap();
        assert!(f.error_bound() < 1e-12);
        assert!((f.value(123.456) - (3.0 * 123.456 - 1.0)).abs() < 1e-9);
        assert!(LipschitzApprox::interpolate(Arc::new(|u| u), 0, 0.0).is_err());
    }

    #[test]
    fn drift_mollification_converges() {
        let b = HolderDrift::power(0.5, 0.8).unwrap();
        let e16 = mollify_drift(&b, 16).unwrap().error_bound();
        let e64 = mollify_drift(&b, 64).unwrap().error_bound();
        assert!(e64 < e16 && e16 < 0.5 * 2.0 * 16f64.powf(-0.8));
    }

    #[test]
    fn ravsky_affine_and_partition_of_unity() {
        let f: VectorField = Arc::new(|x: &[f64]| vec![1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2], x[1]]);
        let r = ravsky_approximate(f.clone(), 3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let sum: f64 = r.vertex_weights(&x).iter().map(|(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let got = r.eval(&x);
            let want = f(&x);
            assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
        }
        assert!(ravsky_approximate(f.clone(), 4, 8).is_err());
        assert!(ravsky_approximate(f.clone(), 0, 8).is_err());
        assert!(ravsky_approximate(f, 2, 0).is_err());
    }

    #[test]
    fn ravsky_power_error_and_lipschitz() {
        for n in [4usize, 16, 64] {
            let f: VectorField = Arc::new(|x: &[f64]| vec![x[0].abs().powf(0.8)]);
            let r = ravsky_approximate(f, 1, n).unwrap();
            let mut err = 0.0f64;
            let mut lip = 0.0f64;
            let mut prev = r.eval(&[-1.0])[0];
            let h = 1.0 / (100.0 * n as f64);
            for i in 1..=(200 * n) {
                let x = -1.0 + i as f64 * h;
                let y = r.eval(&[x])[0];
                err = err.max((y - x.abs().powf(0.8)).abs());
                lip = lip.max((y - prev).abs() / h);
                prev = y;
            }
            assert!(err <= (1.0 / n as f64).powf(0.8) * 1.01);
            assert!(lip.is_finite() && lip <= (n as f64).powf(0.2) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn ravsky_truncates_large_outputs() {
        let f: VectorField = Arc::new(|x: &[f64]| vec![100.0 + x[0]]);
        let r = ravsky_approximate(f, 1, 4).unwrap();
        assert!((r.eval(&[0.3])[0] - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn multiplier_invariants(beta in 0.76f64..=1.0, floor in 0.1f64..2.0, extra in 0.0f64..5.0,
                                 u in -50.0f64..50.0, du in -1.0f64..1.0) {
            let g = HolderMultiplier::power(beta, floor, floor + extra).unwrap();
            let (a, b) = (g.value(u), g.value(u + du));
            prop_assert!(a >= floor);
            prop_assert!(a <= g.growth() * (1.0 + u.abs()) * (1.0 + 1e-15));
            prop_assert!((a - b).abs() <= g.holder_constant() * du.abs().powf(beta) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn drift_invariants(kappa in -3.0f64..3.0, alpha in 0.05f64..=1.0,
                            u in -50.0f64..50.0, du in -1.0f64..1.0) {
            let b = HolderDrift::power(kappa, alpha).unwrap();
            let m = b.holder_constant();
            prop_assert!((b.value(u) - b.value(u + du)).abs() <= m * du.abs().powf(alpha) * (1.0 + 1e-12) + 1e-12);
            prop_assert!(b.value(u).abs() <= kappa.abs() * (1.0 + u.abs()));
        }

        #[test]
        fn mollified_floor_holds(beta in 0.76f64..=1.0, n in 1usize..12, u in -30.0f64..30.0) {
            let g = HolderMultiplier::power(beta, 0.5, 3.0).unwrap();
            let gn = mollify_1d(&g, n).unwrap();
            prop_assert!(gn.value(u) >= 0.5 - 1e-12);
        }
    }
}

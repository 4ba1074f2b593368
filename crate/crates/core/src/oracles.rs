//! Independent reference computations used to check the closed forms:
//! a classical RK4 integrator for one mode and adaptive Simpson quadrature.

/// Integrates `μ f'' + ζ f' + γ f = 0` from `(u, v)` with RK4 using `steps`
/// uniform steps on `[0, t_end]`. Returns `(t, f, f')` at every step.
pub fn rk4_mode(
    mu: f64,
    zeta: f64,
    gamma: f64,
    u: f64,
    v: f64,
    t_end: f64,
    steps: usize,
) -> Vec<(f64, f64, f64)> {
    let h = t_end / steps as f64;
    let rhs = |x: f64, y: f64| (y, -(zeta * y + gamma * x) / mu);
    let (mut x, mut y) = (u, v);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, x, y));
    for i in 1..=steps {
        let k1 = rhs(x, y);
        let k2 = rhs(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1);
        let k3 = rhs(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1);
        let k4 = rhs(x + h * k3.0, y + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((i as f64 * h, x, y));
    }
    out
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `rtol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    // coarse composite estimate sets the absolute scale
    let n = 64;
    let h = (b - a) / n as f64;
    let mut scale = 0.0;
    for i in 0..n {
        let x0 = a + i as f64 * h;
        scale += (f(x0).abs() + 4.0 * f(x0 + 0.5 * h).abs() + f(x0 + h).abs()) * h / 6.0;
    }
    let tol = (rtol * scale).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for i in 0..n {
        let x0 = a + i as f64 * h;
        let x1 = x0 + h;
        let (fa, fm, fb) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = (fa + 4.0 * fm + fb) * h / 6.0;
        total += simpson(&f, x0, x1, fa, fm, fb, whole, tol / n as f64, 48);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (fa + 4.0 * flm + fm) * (m - a) / 6.0;
    let right = (fm + 4.0 * frm + fb) * (b - m) / 6.0;
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

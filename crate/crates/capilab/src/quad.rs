//! Gauss-Legendre quadrature on intervals, used for every analytic curve and
//! volume-of-revolution integral. Nodes are generated by Newton iteration on
//! the Legendre recurrence, so any order is available; the composite rule
//! splits the interval into equal panels.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d2) = legendre_with_deriv(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule: `order` nodes per panel, `panels` equal
/// panels on `[a, b]`. Node/weight pairs are laid out panel by panel.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(a: f64, b: f64, order: usize, panels: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let left = a + p as f64 * width;
            let mid = left + 0.5 * width;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        PanelRule { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Integrate `f` on `[a, b]` with a single non-composite rule. Handy for
/// per-edge integrals where the integrand is smooth on the edge.
pub fn integrate_gauss<F: FnMut(f64) -> f64>(a: f64, b: f64, order: usize, mut f: F) -> f64 {
    let (xs, ws) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| half * w * f(mid + half * x))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_rule_matches_closed_form() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3f64.sqrt();
        assert_relative_eq!(x[0], -r, max_relative = 1e-14);
        assert_relative_eq!(x[1], r, max_relative = 1e-14);
        assert_relative_eq!(w[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(w[1], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn high_order_rule_is_exact_on_polynomials() {
        // 16-point Gauss integrates degree 31 exactly.
        let (xs, ws) = gauss_legendre(16);
        for k in [0usize, 5, 17, 31] {
            let val: f64 = xs.iter().zip(&ws).map(|(&x, &w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert_relative_eq!(val, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_rule_integrates_transcendentals() {
        let rule = PanelRule::new(0.0, std::f64::consts::PI, 16, 64);
        let val = rule.integrate(|x| x.sin());
        assert_relative_eq!(val, 2.0, max_relative = 1e-14);
        let val = rule.integrate(|x| (3.0 * x).cos() * x);
        let exact = -2.0 / 9.0; // int_0^pi x cos(3x) dx
        assert_relative_eq!(val, exact, epsilon = 1e-13);
    }

    #[test]
    fn single_interval_gauss_matches_composite() {
        let a = integrate_gauss(0.25, 1.75, 16, |x| (x * x).exp().ln_1p());
        let rule = PanelRule::new(0.25, 1.75, 16, 32);
        let b = rule.integrate(|x| (x * x).exp().ln_1p());
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}

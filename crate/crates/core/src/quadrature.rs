//! Gauss-Legendre rules and interval mapping helpers.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre polynomial from Chebyshev-like initial
/// guesses; accurate to machine precision for the small n used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!((1..=64).contains(&n), "unsupported rule size {n}");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // initial guess (Abramowitz & Stegun 25.4.30 vicinity)
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(t) and derivative by recurrence
            let mut p0 = 1.0;
            let mut p1 = t;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { t } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            pp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let dt = pn / pp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Map a [-1, 1] rule onto [a, b].
pub fn map_interval(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let x = nodes.iter().map(|&t| mid + half * t).collect();
    let w = weights.iter().map(|&wi| wi * half).collect();
    (x, w)
}

/// Composite rule: `tiles` equal sub-intervals of [a, b], `pts` Gauss points each.
pub fn composite(pts: usize, tiles: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(pts);
    let mut xs = Vec::with_capacity(pts * tiles);
    let mut ws = Vec::with_capacity(pts * tiles);
    let step = (b - a) / tiles as f64;
    for t in 0..tiles {
        let lo = a + t as f64 * step;
        let (x, w) = map_interval(&gx, &gw, lo, lo + step);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(f: impl Fn(f64) -> f64, x: &[f64], w: &[f64]) -> f64 {
        x.iter().zip(w).map(|(&xi, &wi)| wi * f(xi)).sum()
    }

    #[test]
    fn weights_sum_to_length() {
        for n in 1..=12 {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_on_monomials() {
        // n-point rule integrates x^m exactly for m <= 2n-1
        for n in [2usize, 3, 4, 6] {
            let (x, w) = gauss_legendre(n);
            for m in 0..2 * n {
                let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
                let got = integrate(|t| t.powi(m as i32), &x, &w);
                assert!(
                    (got - exact).abs() < 1e-13,
                    "n={n} m={m}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn composite_matches_analytic() {
        // exact on degree-5 polynomials tile by tile
        let (x, w) = composite(3, 2, -0.5, 0.5);
        let got = integrate(|t| t.powi(4), &x, &w);
        assert!((got - 2.0 * 0.5_f64.powi(5) / 5.0).abs() < 1e-15);
        // smooth non-polynomial integrand converges at the rule's rate
        let got = integrate(|t| (2.0 * t).cos(), &x, &w);
        let exact = (1.0_f64).sin();
        assert!((got - exact).abs() < 1e-6);
    }
}

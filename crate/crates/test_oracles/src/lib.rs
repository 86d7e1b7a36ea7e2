//! Brute-force references: adaptive Gauss-Legendre quadrature, integral
//! representations of `K_nu` and of GIG moments, derivative-free
//! maximizers, and exhaustive combinatorial searches.

use std::f64::consts::PI;

mod ecm;
pub use ecm::{part_eta_argmax, part_q, part_q_argmax, proportion_argmax, PartWeights};

pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [-1, 1] by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn apply(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

/// Adaptive bisection with a 30-point rule; `rel_tol` is relative to the
/// magnitude of the whole integral.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rule = GaussLegendre::new(30);
    let whole = rule.apply(f, a, b);
    let scale = whole.abs().max(1e-300);
    let len = b - a;
    let mut total = 0.0;
    let mut stack = vec![(a, b, whole, 0usize)];
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.apply(f, lo, mid);
        let right = rule.apply(f, mid, hi);
        let tol = (rel_tol * scale * ((hi - lo) / len).max(1e-6))
            .max(64.0 * f64::EPSILON * (left.abs() + right.abs()));
        if (left + right - est).abs() <= tol || depth > 30 {
            total += left + right;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    total
}

/// Integral over a union of intervals separated at the given breakpoints.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, breaks: &[f64], rel_tol: f64) -> f64 {
    breaks.windows(2).map(|w| integrate(f, w[0], w[1], rel_tol)).sum()
}

/// `ln ∫_lo^hi exp(g)` for a unimodal `g` with its maximum near `peak`.
fn log_integral_unimodal(g: &dyn Fn(f64) -> f64, peak: f64, lo: f64, hi: f64) -> f64 {
    let top = g(peak);
    let shifted = |t: f64| (g(t) - top).exp();
    let mut breaks = vec![lo];
    if peak > lo && peak < hi {
        breaks.push(peak);
    }
    breaks.push(hi);
    top + integrate_pieces(&shifted, &breaks, 1e-15).ln()
}

/// `ln K_nu(x)` from `∫_0^∞ exp(-x cosh t) cosh(nu t) dt`.
pub fn log_bessel_k_quadrature(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let g = move |t: f64| {
        let lc = if nu == 0.0 {
            0.0
        } else {
            nu * t + (-2.0 * nu * t).exp().ln_1p() - std::f64::consts::LN_2
        };
        -x * t.cosh() + lc
    };
    // the maximizer solves x sinh t = nu tanh(nu t)
    let mut peak = 0.0;
    if nu * nu > x {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi.sinh() * x < nu * (nu * hi).tanh() {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.sinh() * x < nu * (nu * mid).tanh() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        peak = 0.5 * (lo + hi);
    }
    let top = g(peak);
    let mut end = peak + 0.01;
    while g(end) > top - 80.0 {
        end = peak + 2.0 * (end - peak);
    }
    log_integral_unimodal(&g, peak, 0.0, end)
}

/// `ln ∫_0^∞ w^(k-1) exp(-(a w + b/w)/2) dw`, via `w = e^s`.
pub fn log_gig_kernel_integral(a: f64, b: f64, k: f64) -> f64 {
    let h = move |s: f64| k * s - 0.5 * (a * s.exp() + b * (-s).exp());
    let peak = ((k + (k * k + a * b).sqrt()) / a).ln();
    let top = h(peak);
    let mut lo = 1.0;
    while h(peak - lo) > top - 80.0 {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while h(peak + hi) > top - 80.0 {
        hi *= 2.0;
    }
    log_integral_unimodal(&h, peak, peak - lo, peak + hi)
}

/// `(E[W], E[1/W])` for the GIG law with density proportional to
/// `w^(nu-1) exp(-(a w + b/w)/2)`.
pub fn gig_moments_quadrature(a: f64, b: f64, nu: f64) -> (f64, f64) {
    let base = log_gig_kernel_integral(a, b, nu);
    (
        (log_gig_kernel_integral(a, b, nu + 1.0) - base).exp(),
        (log_gig_kernel_integral(a, b, nu - 1.0) - base).exp(),
    )
}

/// Maximizes `f` by Nelder-Mead, restarting from the incumbent until a
/// restart no longer improves it.
pub fn nelder_mead_max(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64) -> Vec<f64> {
    let neg = |x: &[f64]| -f(x);
    let mut best = x0.to_vec();
    let mut best_val = neg(&best);
    let mut step = step;
    for _ in 0..60 {
        let (x, v) = nelder_mead_min(&neg, &best, step, 20_000);
        let improved = v < best_val - 1e-15 * best_val.abs().max(1.0);
        if v <= best_val {
            best = x;
            best_val = v;
        }
        if !improved {
            step *= 0.1;
            if step < 1e-9 {
                break;
            }
        }
    }
    best
}

fn nelder_mead_min(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step * x0[i].abs().max(1.0);
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = simplex
            .iter()
            .skip(1)
            .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= 1e-17 * vals[0].abs().max(1e-300) && size < 1e-12 {
            break;
        }
        if size < 1e-14 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(a, b)| b + 0.5 * (a - b))
                        .collect();
                    vals[i] = f(&p);
                    simplex[i] = p;
                }
            }
        }
    }
    let i = (0..=n)
        .min_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap())
        .unwrap();
    (simplex[i].clone(), vals[i])
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_section_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..500 {
        if (hi - lo).abs() < 1e-14 * (1.0 + c.abs()) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// The two-group partition of `points` minimizing within-group squared
/// error, by enumeration. Labels are 0/1 with point 0 in group 0.
pub fn brute_force_two_means(points: &[Vec<f64>]) -> Vec<usize> {
    let n = points.len();
    let mut best = (f64::INFINITY, vec![0; n]);
    for mask in 0u64..(1u64 << (n - 1)) {
        let labels: Vec<usize> = (0..n)
            .map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize })
            .collect();
        if labels.iter().all(|&l| l == 0) {
            continue;
        }
        let mut cost = 0.0;
        for g in 0..2 {
            let members: Vec<&Vec<f64>> =
                points.iter().zip(&labels).filter(|(_, &l)| l == g).map(|(p, _)| p).collect();
            let d = members[0].len();
            for k in 0..d {
                let m = members.iter().map(|p| p[k]).sum::<f64>() / members.len() as f64;
                cost += members.iter().map(|p| (p[k] - m).powi(2)).sum::<f64>();
            }
        }
        if cost < best.0 {
            best = (cost, labels);
        }
    }
    best.1
}

/// Adjusted Rand index by counting agreements over all pairs.
pub fn pair_counting_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut ss, mut sd, mut ds, mut dd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0.0 {
        return 1.0;
    }
    2.0 * (ss * dd - sd * ds) / den
}

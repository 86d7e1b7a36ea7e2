use nalgebra::{DMatrix, DVector};
use sal_distribution::SalKernel;

use crate::{CwmModel, Dataset, Family, FitError, Responsibilities, Variant, DELTA_MAX, DELTA_MIN};

/// Smallest eigenvalue tolerated in an updated scale matrix.
const MIN_EIGEN: f64 = 1e-10;
/// Smallest eigenvalue relative to the largest. Beyond a condition number of
/// 1e10 the quadratic forms lose enough digits that an EM step can no
/// longer be told apart from rounding.
const MIN_RELATIVE_EIGEN: f64 = 1e-10;

/// Location parameters held fixed by the singularity guard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Frozen {
    pub mu: Vec<bool>,
    pub beta: Vec<bool>,
}

impl Frozen {
    pub fn none(g: usize) -> Self {
        Self { mu: vec![false; g], beta: vec![false; g] }
    }
}

/// Components on which a safeguard fired during a CM-step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CmDiagnostics {
    pub jittered: Vec<usize>,
    pub pseudo_inverse: Vec<usize>,
    pub eta_unchanged: Vec<usize>,
    /// Proposed covariate locations rejected by the singularity guard.
    pub guarded_mu: Vec<usize>,
    /// Proposed regression coefficients rejected by the singularity guard.
    pub guarded_beta: Vec<usize>,
}

impl CmDiagnostics {
    pub fn merge(&mut self, other: &CmDiagnostics) {
        for (a, b) in [
            (&mut self.jittered, &other.jittered),
            (&mut self.pseudo_inverse, &other.pseudo_inverse),
            (&mut self.eta_unchanged, &other.eta_unchanged),
            (&mut self.guarded_mu, &other.guarded_mu),
            (&mut self.guarded_beta, &other.guarded_beta),
        ] {
            a.extend(b);
            a.sort_unstable();
            a.dedup();
        }
    }
}

/// Symmetrize and, if needed, shift the spectrum so the smallest
/// eigenvalue is at least `jitter`, and at least `1e-12` of the largest:
/// beyond that condition number the updates lose every digit.
pub(crate) fn enforce_pd(s: DMatrix<f64>, jitter: f64) -> (DMatrix<f64>, bool) {
    let sym = (&s + s.transpose()) * 0.5;
    let p = sym.nrows();
    let (lmin, lmax) = if p == 1 {
        (sym[(0, 0)], sym[(0, 0)])
    } else {
        let e = sym.clone().symmetric_eigenvalues();
        (e.min(), e.max())
    };
    let floor = MIN_EIGEN.max(MIN_RELATIVE_EIGEN * lmax);
    if lmin.is_finite() && lmin >= floor {
        return (sym, false);
    }
    let shift = (-lmin).max(0.0) + jitter.max(floor);
    (sym + DMatrix::identity(p, p) * shift, true)
}

/// `m^-1 rhs` for a symmetric positive semi-definite `m`, falling back to
/// the pseudo-inverse (flag set) when `m` is numerically singular.
pub(crate) fn solve_or_pinv(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if let Some(ch) = m.clone().cholesky() {
        let l = ch.l();
        let dmin = l.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(*v));
        if dmin * dmin > 1e-13 * scale {
            return (ch.solve(rhs), false);
        }
    }
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let pinv = m.clone().pseudo_inverse(eps).expect("non-negative tolerance");
    (pinv * rhs, true)
}

fn clamp_delta(d: f64) -> f64 {
    d.clamp(DELTA_MIN, DELTA_MAX)
}

/// Joint minimizer of `sum_i a_i |t_i - X_i c|^2 - 2 c_i (t_i - X_i c)' g +
/// b_i |g|^2` over the coefficients `c` (q x p) and the skewness `g` (p),
/// coordinate by coordinate. Completing the square turns it into ordinary
/// least squares on rows `sqrt(a_i) [X_i, c_i / a_i]` plus one row
/// `[0, sqrt(sum(b_i - c_i^2 / a_i))]`, solved by SVD so that a single
/// dominant weight (a point sitting on the location) costs only the square
/// root of its condition number. Returns `(coefficients, skewness, rank
/// deficient)`.
fn location_skewness_ls(
    design: &DMatrix<f64>,
    target: &DMatrix<f64>,
    a_w: &[f64],
    b_w: &[f64],
    c_w: &[f64],
) -> (DMatrix<f64>, DVector<f64>, bool) {
    let (n, q) = design.shape();
    let p = target.ncols();
    let mut lhs = DMatrix::<f64>::zeros(n + 1, q + 1);
    let mut rhs = DMatrix::<f64>::zeros(n + 1, p);
    let mut rest = 0.0;
    for i in 0..n {
        if !(a_w[i] > 0.0) {
            continue;
        }
        let sa = a_w[i].sqrt();
        let ratio = c_w[i] / a_w[i];
        for j in 0..q {
            lhs[(i, j)] = sa * design[(i, j)];
        }
        lhs[(i, q)] = sa * ratio;
        for c in 0..p {
            rhs[(i, c)] = sa * target[(i, c)];
        }
        rest += (b_w[i] - c_w[i] * ratio).max(0.0);
    }
    lhs[(n, q)] = rest.sqrt();
    let svd = lhs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let deficient = !(smin > 1e-12 * smax);
    let sol = svd.solve(&rhs, 1e-12 * smax).expect("U and V were computed");
    let coef = sol.rows(0, q).into_owned();
    let skew = sol.row(q).transpose();
    (coef, skew, deficient)
}

/// The weighted location/skewness/scale update shared by the covariate and
/// regression parts, for weights `a_w` (on `r r'`), `b_w` (on `alpha
/// alpha'`) and `c_w` (cross term). `resid(i)` is the centred point.
fn scale_update(
    resid: &DMatrix<f64>,
    alpha: &DVector<f64>,
    a_w: &[f64],
    b_w: &[f64],
    c_w: &[f64],
    n_g: f64,
) -> DMatrix<f64> {
    let p = resid.ncols();
    let mut s = DMatrix::<f64>::zeros(p, p);
    let mut cr = DVector::<f64>::zeros(p);
    for i in 0..resid.nrows() {
        let r = resid.row(i).transpose();
        s.ger(a_w[i], &r, &r, 1.0);
        cr.axpy(c_w[i], &r, 1.0);
    }
    let sb: f64 = b_w.iter().sum();
    s -= &cr * alpha.transpose() + alpha * cr.transpose();
    s += alpha * alpha.transpose() * sb;
    s / n_g
}

fn weights(
    z: f64,
    post: f64,
    e1: f64,
    e2: f64,
    e1t: f64,
    e2t: f64,
    eta: f64,
) -> (f64, f64, f64) {
    (
        z * ((1.0 - post) * e2 + post * e2t / eta),
        z * ((1.0 - post) * e1 + post * e1t),
        z * ((1.0 - post) + post / eta.sqrt()),
    )
}

fn within(a: &[f64], b: &[f64], guard: f64) -> bool {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() < guard * guard
}

/// First conditional maximization: weights, locations, skewness, scales,
/// regression coefficients and contamination proportions, with `eta` held
/// fixed. In the SAL variant this is the whole M-step.
///
/// A proposed location (covariate mode, or regression mean at some `x_i`)
/// closer than `mu_guard` to an observation is rejected, and the remaining
/// parameters of that part are maximized with the previous location. The
/// same conditional update is used for the locations listed in `frozen`.
/// The guard only applies to parts of dimension two or more: a univariate
/// SAL density is finite at its mode and the floored latent-scale moments
/// stay finite, while rejecting proposals there stalls the update at the
/// first data point the regression line approaches.
pub fn cm_step_1(
    dataset: &Dataset,
    resp: &Responsibilities,
    model: &CwmModel,
    frozen: &Frozen,
    mu_guard: f64,
    sigma_jitter: f64,
) -> Result<(CwmModel, CmDiagnostics), FitError> {
    let n = dataset.n();
    let (dx, dy) = (model.d_x, model.d_y);
    let contaminated = model.variant == Variant::Csal;
    let mut out = model.clone();
    let mut diag = CmDiagnostics::default();
    for (k, comp) in out.components.iter_mut().enumerate() {
        let z: Vec<f64> = (0..n).map(|i| resp.z[(i, k)]).collect();
        let n_g: f64 = z.iter().sum();
        if !(n_g > 1e-8) {
            return Err(FitError::DegenerateComponent { component: k, reason: "no posterior mass".into() });
        }
        comp.weight = n_g / n as f64;

        if let (Some(x_law), Family::Cwm) = (comp.x_law.as_mut(), model.family) {
            let eta = x_law.eta;
            let (mut a_w, mut b_w, mut c_w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for i in 0..n {
                let e = resp.gig_x.get(i, k);
                let et = resp.gig_x_tilde.get(i, k);
                (a_w[i], b_w[i], c_w[i]) = weights(z[i], resp.v[(i, k)], e.e1, e.e2, et.e1, et.e2, eta);
            }
            let (sb, sc): (f64, f64) = (b_w.iter().sum(), c_w.iter().sum());
            let mut hold = frozen.mu.get(k).copied().unwrap_or(false);
            if !hold {
                let ones = DMatrix::from_element(n, 1, 1.0);
                let (mu, alpha, deficient) = location_skewness_ls(&ones, dataset.x(), &a_w, &b_w, &c_w);
                if deficient {
                    return Err(FitError::SingularLocationSystem { component: k });
                }
                let mu = mu.row(0).transpose();
                if mu_guard > 0.0 && dx >= 2 && (0..n).any(|i| within(dataset.x_row(i), mu.as_slice(), mu_guard)) {
                    diag.guarded_mu.push(k);
                    hold = true;
                } else {
                    x_law.base.alpha = alpha;
                    x_law.base.mu = mu;
                }
            }
            if hold {
                let mu = &x_law.base.mu;
                let mut scx = DVector::<f64>::zeros(dx);
                for i in 0..n {
                    for (j, xj) in dataset.x_row(i).iter().enumerate() {
                        scx[j] += c_w[i] * xj;
                    }
                }
                x_law.base.alpha = (&scx - mu * sc) / sb;
            }
            let mu = x_law.base.mu.clone();
            let resid = DMatrix::from_fn(n, dx, |i, j| dataset.x_row(i)[j] - mu[j]);
            let s = scale_update(&resid, &x_law.base.alpha, &a_w, &b_w, &c_w, n_g);
            let (sigma, jit) = enforce_pd(s, sigma_jitter);
            if jit {
                diag.jittered.push(k);
            }
            x_law.base.sigma = sigma;
            if contaminated {
                let sv: f64 = (0..n).map(|i| z[i] * resp.v[(i, k)]).sum();
                x_law.delta = clamp_delta(sv / n_g);
            }
        }

        let y_law = &mut comp.y_law;
        let eta = y_law.eta_y;
        let (mut d_w, mut f_w, mut g_w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let e = resp.gig_y.get(i, k);
            let et = resp.gig_y_tilde.get(i, k);
            (d_w[i], f_w[i], g_w[i]) = weights(z[i], resp.u[(i, k)], e.e1, e.e2, et.e1, et.e2, eta);
        }
        let sf: f64 = f_w.iter().sum();
        if !frozen.beta.get(k).copied().unwrap_or(false) {
            let design = DMatrix::from_fn(n, dx + 1, |i, j| if j == 0 { 1.0 } else { dataset.x_row(i)[j - 1] });
            let (beta, _, pinv) = location_skewness_ls(&design, dataset.y(), &d_w, &f_w, &g_w);
            if pinv {
                diag.pseudo_inverse.push(k);
            }
            let old = std::mem::replace(&mut y_law.beta, beta);
            let mut mean = vec![0.0; dy];
            let hit = mu_guard > 0.0
                && dy >= 2
                && (0..n).any(|i| {
                    y_law.mean_into(dataset.x_row(i), &mut mean);
                    within(dataset.y_row(i), &mean, mu_guard)
                });
            if hit {
                diag.guarded_beta.push(k);
                y_law.beta = old;
            }
        }
        let mut resid = DMatrix::<f64>::zeros(n, dy);
        let mut mean = vec![0.0; dy];
        for i in 0..n {
            y_law.mean_into(dataset.x_row(i), &mut mean);
            for (c, yc) in dataset.y_row(i).iter().enumerate() {
                resid[(i, c)] = yc - mean[c];
            }
        }
        let mut gr = DVector::<f64>::zeros(dy);
        for i in 0..n {
            gr.axpy(g_w[i], &resid.row(i).transpose(), 1.0);
        }
        y_law.alpha_y = gr / sf;
        let s = scale_update(&resid, &y_law.alpha_y, &d_w, &f_w, &g_w, n_g);
        let (sigma, jit) = enforce_pd(s, sigma_jitter);
        if jit && !diag.jittered.contains(&k) {
            diag.jittered.push(k);
        }
        y_law.sigma_y = sigma;
        if contaminated {
            let su: f64 = (0..n).map(|i| z[i] * resp.u[(i, k)]).sum();
            y_law.delta_y = clamp_delta(su / n_g);
        }
    }
    Ok((out, diag))
}

/// Positive root `s` of `a s^2 + b s + c = 0` with `a > 0`, `c <= 0`,
/// returned squared (`eta* = s^2`). `None` when `a` is not positive.
pub fn eta_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if !(a > 0.0) {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    assert!(disc >= 0.0, "negative discriminant with a = {a}, c = {c}");
    let s = if b > 0.0 {
        -2.0 * c / (b + disc.sqrt())
    } else {
        (-b + disc.sqrt()) / (2.0 * a)
    };
    Some(s * s)
}

/// Inflation update for one part: coefficients of the quadratic in
/// `sqrt(eta)` assembled from the contaminant posteriors `w = z * post`,
/// the contaminant moments `E2~`, and the distances at the current (already
/// updated) location, scale and skewness.
fn eta_update<'a>(
    kernel: &SalKernel,
    resid: impl Iterator<Item = (f64, &'a [f64], f64)>,
    current: f64,
) -> (f64, bool) {
    let (mut s, mut t, mut r) = (0.0, 0.0, 0.0);
    for (w, ri, e2t) in resid {
        if w == 0.0 {
            continue;
        }
        let parts = kernel.parts(ri);
        s += w;
        t += w * e2t * parts.b;
        r += w * parts.q;
    }
    match eta_root(kernel.dim() as f64 * s, r, -t) {
        Some(e) => (e.max(1.0), false),
        None => (current, true),
    }
}

/// Second conditional maximization: the inflation parameters, given the
/// parameters produced by [`cm_step_1`] in the same iteration.
pub fn cm_step_2(
    dataset: &Dataset,
    resp: &Responsibilities,
    model: &CwmModel,
) -> Result<(CwmModel, CmDiagnostics), FitError> {
    let mut out = model.clone();
    let mut diag = CmDiagnostics::default();
    if model.variant != Variant::Csal {
        return Ok((out, diag));
    }
    let n = dataset.n();
    for (k, comp) in out.components.iter_mut().enumerate() {
        if let (Some(x_law), Family::Cwm) = (comp.x_law.as_mut(), model.family) {
            let kernel = SalKernel::new(&x_law.base)?;
            let mu = x_law.base.mu.as_slice();
            let resid: Vec<Vec<f64>> = (0..n)
                .map(|i| dataset.x_row(i).iter().zip(mu).map(|(a, b)| a - b).collect())
                .collect();
            let it = (0..n).map(|i| {
                (resp.z[(i, k)] * resp.v[(i, k)], resid[i].as_slice(), resp.gig_x_tilde.get(i, k).e2)
            });
            let (eta, unchanged) = eta_update(&kernel, it, x_law.eta);
            x_law.eta = eta;
            if unchanged {
                diag.eta_unchanged.push(k);
            }
        }
        let y_law = &mut comp.y_law;
        let kernel = SalKernel::from_scale(&y_law.sigma_y, &y_law.alpha_y)?;
        let mut mean = vec![0.0; model.d_y];
        let resid: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                y_law.mean_into(dataset.x_row(i), &mut mean);
                dataset.y_row(i).iter().zip(&mean).map(|(a, b)| a - b).collect()
            })
            .collect();
        let it = (0..n).map(|i| {
            (resp.z[(i, k)] * resp.u[(i, k)], resid[i].as_slice(), resp.gig_y_tilde.get(i, k).e2)
        });
        let (eta, unchanged) = eta_update(&kernel, it, y_law.eta_y);
        y_law.eta_y = eta;
        if unchanged && !diag.eta_unchanged.contains(&k) {
            diag.eta_unchanged.push(k);
        }
    }
    Ok((out, diag))
}

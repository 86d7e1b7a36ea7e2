use nalgebra::DMatrix;
use sal_distribution::{log_add, MahalanobisParts, SalKernel};
use special_functions::GigExpectations;

use crate::{CwmModel, Dataset, Family, FitError, Variant};

/// An n x G table of latent-scale moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GigTable {
    n: usize,
    g: usize,
    data: Vec<GigExpectations>,
}

impl GigTable {
    fn filled(n: usize, g: usize) -> Self {
        let one = GigExpectations { e1: 1.0, e2: 1.0, clamped: false };
        Self { n, g, data: vec![one; n * g] }
    }

    fn empty(g: usize) -> Self {
        Self { n: 0, g, data: Vec::new() }
    }

    /// Rows covered; zero for the covariate tables of the MRM family.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, g: usize) -> &GigExpectations {
        &self.data[i * self.g + g]
    }

    fn set(&mut self, i: usize, g: usize, v: GigExpectations) {
        self.data[i * self.g + g] = v;
    }

    pub fn clamped_count(&self) -> usize {
        self.data.iter().filter(|e| e.clamped).count()
    }
}

/// Posterior quantities of one E-step. `v` (covariate contaminant) and `u`
/// (response contaminant) are the posterior probabilities that the point
/// came from the inflated component, given its membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub z: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub gig_x: GigTable,
    pub gig_x_tilde: GigTable,
    pub gig_y: GigTable,
    pub gig_y_tilde: GigTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    pub resp: Responsibilities,
    pub loglik: f64,
    /// (row, component) cells whose divergent density was replaced by the
    /// largest finite value of its column.
    pub capped: Vec<(usize, usize)>,
}

pub fn e_step(dataset: &Dataset, model: &CwmModel) -> Result<EStep, FitError> {
    run(dataset, model, true)
}

pub fn observed_log_likelihood(dataset: &Dataset, model: &CwmModel) -> Result<f64, FitError> {
    Ok(run(dataset, model, false)?.loglik)
}

/// Distance floor for the latent-scale moments. It only has to keep `E[1/W]`
/// finite at an exact zero distance; a larger floor perturbs the E-step of
/// points near a location enough to break monotonicity.
const B_FLOOR: f64 = 1e-24;

struct PartLaw {
    kernel: SalKernel,
    delta: f64,
    eta: f64,
}

impl PartLaw {
    fn gig(&self, parts: &MahalanobisParts, eta: f64) -> Result<GigExpectations, FitError> {
        Ok(self.kernel.gig_with_floor(parts, eta, B_FLOOR)?)
    }

    /// `(ln f_cSAL, posterior contaminant probability)`.
    fn evaluate(&self, parts: &MahalanobisParts) -> Result<(f64, f64), FitError> {
        if self.delta == 0.0 {
            return Ok((self.kernel.log_density(parts, 1.0)?, 0.0));
        }
        let (good, bad) = self.kernel.component_log_densities(parts, self.delta, self.eta)?;
        let total = log_add(good, bad);
        let post = if total == f64::INFINITY {
            1.0 - self.kernel.typical_probability(parts, self.delta, self.eta)?
        } else {
            (bad - total).exp()
        };
        Ok((total, post.clamp(0.0, 1.0)))
    }
}

fn run(dataset: &Dataset, model: &CwmModel, with_gig: bool) -> Result<EStep, FitError> {
    let n = dataset.n();
    let g = model.g();
    if dataset.d_x() != model.d_x || dataset.d_y() != model.d_y {
        return Err(FitError::InvalidData("dataset and model dimensions differ".into()));
    }
    let cwm = model.family == Family::Cwm;
    let contaminated = model.variant == Variant::Csal;
    let mut lfx = DMatrix::<f64>::zeros(n, g);
    let mut lfy = DMatrix::<f64>::zeros(n, g);
    let mut v = DMatrix::<f64>::zeros(n, g);
    let mut u = DMatrix::<f64>::zeros(n, g);
    let gig_n = if with_gig { n } else { 0 };
    let mut gig_x = if cwm { GigTable::filled(gig_n, g) } else { GigTable::empty(g) };
    let mut gig_xt = gig_x.clone();
    let mut gig_y = GigTable::filled(gig_n, g);
    let mut gig_yt = gig_y.clone();
    let mut r = vec![0.0; model.d_x.max(model.d_y)];

    for (k, comp) in model.components.iter().enumerate() {
        let y_law = &comp.y_law;
        let ylaw = PartLaw {
            kernel: SalKernel::from_scale(&y_law.sigma_y, &y_law.alpha_y)?,
            delta: if contaminated { y_law.delta_y } else { 0.0 },
            eta: y_law.eta_y,
        };
        let xlaw = match (&comp.x_law, cwm) {
            (Some(x), true) => Some((
                PartLaw {
                    kernel: SalKernel::new(&x.base)?,
                    delta: if contaminated { x.delta } else { 0.0 },
                    eta: x.eta,
                },
                x.base.mu.as_slice(),
            )),
            _ => None,
        };
        for i in 0..n {
            if let Some((law, mu)) = &xlaw {
                let xi = dataset.x_row(i);
                for (j, rj) in r[..model.d_x].iter_mut().enumerate() {
                    *rj = xi[j] - mu[j];
                }
                let parts = law.kernel.parts(&r[..model.d_x]);
                let (lf, post) = law.evaluate(&parts)?;
                lfx[(i, k)] = lf;
                v[(i, k)] = post;
                if with_gig {
                    let e = law.gig(&parts, 1.0)?;
                    gig_x.set(i, k, e);
                    gig_xt.set(i, k, if contaminated { law.gig(&parts, law.eta)? } else { e });
                }
            }
            let yi = dataset.y_row(i);
            y_law.mean_into(dataset.x_row(i), &mut r[..model.d_y]);
            for (j, rj) in r[..model.d_y].iter_mut().enumerate() {
                *rj = yi[j] - *rj;
            }
            let parts = ylaw.kernel.parts(&r[..model.d_y]);
            let (lf, post) = ylaw.evaluate(&parts)?;
            lfy[(i, k)] = lf;
            u[(i, k)] = post;
            if with_gig {
                let e = ylaw.gig(&parts, 1.0)?;
                gig_y.set(i, k, e);
                gig_yt.set(i, k, if contaminated { ylaw.gig(&parts, ylaw.eta)? } else { e });
            }
        }
    }

    let mut capped = Vec::new();
    for m in [&mut lfx, &mut lfy] {
        for k in 0..g {
            if !m.column(k).iter().any(|&l| l == f64::INFINITY) {
                continue;
            }
            let cap = m
                .column(k)
                .iter()
                .copied()
                .filter(|l| l.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            let cap = if cap.is_finite() { cap } else { 0.0 };
            for i in 0..n {
                if m[(i, k)] == f64::INFINITY {
                    m[(i, k)] = cap;
                    capped.push((i, k));
                }
            }
        }
    }
    capped.sort_unstable();
    capped.dedup();

    let mut z = DMatrix::<f64>::zeros(n, g);
    let mut loglik = 0.0;
    let log_w: Vec<f64> = model.components.iter().map(|c| c.weight.ln()).collect();
    let mut row = vec![0.0; g];
    for i in 0..n {
        for k in 0..g {
            row[k] = log_w[k] + lfy[(i, k)] + if cwm { lfx[(i, k)] } else { 0.0 };
        }
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(FitError::DegenerateRow { row: i });
        }
        let s: f64 = row.iter().map(|l| (l - top).exp()).sum();
        let lse = top + s.ln();
        loglik += lse;
        for k in 0..g {
            z[(i, k)] = (row[k] - lse).exp();
        }
    }
    if !loglik.is_finite() {
        return Err(FitError::InvalidData("log-likelihood is not finite".into()));
    }
    Ok(EStep {
        resp: Responsibilities {
            z,
            v,
            u,
            gig_x,
            gig_x_tilde: gig_xt,
            gig_y,
            gig_y_tilde: gig_yt,
        },
        loglik,
        capped,
    })
}

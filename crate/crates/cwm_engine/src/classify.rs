use crate::{FitResult, Responsibilities, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Typical,
    Outlier,
    GoodLeverage,
    BadLeverage,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Typical => "typical",
            Category::Outlier => "outlier",
            Category::GoodLeverage => "good_leverage",
            Category::BadLeverage => "bad_leverage",
        }
    }

    /// Quadrant of the (outlier, leverage) posteriors, upper cells closed.
    pub fn from_posteriors(u: f64, v: f64) -> Self {
        match (u >= 0.5, v >= 0.5) {
            (false, false) => Category::Typical,
            (false, true) => Category::GoodLeverage,
            (true, false) => Category::Outlier,
            (true, true) => Category::BadLeverage,
        }
    }

    pub fn is_atypical(self) -> bool {
        self != Category::Typical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub component: usize,
    pub category: Category,
}

/// MAP component (lowest index on ties) and its category. Every point of a
/// SAL-variant fit is typical.
pub fn classify_responsibilities(resp: &Responsibilities, variant: Variant) -> Vec<Classification> {
    (0..resp.z.nrows())
        .map(|i| {
            let row = resp.z.row(i);
            let mut h = 0;
            for k in 1..row.len() {
                if row[k] > row[h] {
                    h = k;
                }
            }
            let category = match variant {
                Variant::Sal => Category::Typical,
                Variant::Csal => Category::from_posteriors(resp.u[(i, h)], resp.v[(i, h)]),
            };
            Classification { component: h, category }
        })
        .collect()
}

pub fn classify(fit: &FitResult) -> Vec<Classification> {
    classify_responsibilities(&fit.resp, fit.model.variant)
}

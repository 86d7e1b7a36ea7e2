//! Process-wide counters of monotonicity and nesting checks, filled by
//! every fit so a test run can report on all fits it executed.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Decreases smaller than this are rounding noise and are not recorded.
pub const SLACK: f64 = 1e-8;

static FITS: AtomicU64 = AtomicU64::new(0);
static STEPS: AtomicU64 = AtomicU64::new(0);
static MONOTONE_VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static NESTED_FITS: AtomicU64 = AtomicU64::new(0);
static NESTING_VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static WORST: Mutex<f64> = Mutex::new(0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSnapshot {
    pub fits_checked: u64,
    pub steps_checked: u64,
    pub monotone_violations: u64,
    /// Largest single-step decrease seen, violation or not.
    pub worst_decrease: f64,
    pub nested_fits: u64,
    pub nesting_violations: u64,
}

pub fn record_trace(trace: &[f64]) {
    FITS.fetch_add(1, Ordering::Relaxed);
    STEPS.fetch_add(trace.len().saturating_sub(1) as u64, Ordering::Relaxed);
    let mut worst = 0.0f64;
    for w in trace.windows(2) {
        let drop = w[0] - w[1];
        worst = worst.max(drop);
        if drop > SLACK {
            MONOTONE_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        }
    }
    let mut g = WORST.lock().unwrap_or_else(|e| e.into_inner());
    *g = g.max(worst);
}

pub fn record_nesting(seed_loglik: f64, final_loglik: f64) {
    NESTED_FITS.fetch_add(1, Ordering::Relaxed);
    if final_loglik < seed_loglik - SLACK {
        NESTING_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
}

pub fn snapshot() -> AuditSnapshot {
    AuditSnapshot {
        fits_checked: FITS.load(Ordering::Relaxed),
        steps_checked: STEPS.load(Ordering::Relaxed),
        monotone_violations: MONOTONE_VIOLATIONS.load(Ordering::Relaxed),
        worst_decrease: *WORST.lock().unwrap_or_else(|e| e.into_inner()),
        nested_fits: NESTED_FITS.load(Ordering::Relaxed),
        nesting_violations: NESTING_VIOLATIONS.load(Ordering::Relaxed),
    }
}

/// Aitken stopping rule on three consecutive log-likelihoods.
///
/// When the acceleration is undefined (flat first step, `a >= 1`, or
/// `a <= 0`) the run counts as converged only on a plateau, i.e. when the
/// last increment is below `epsilon / 100`.
pub fn aitken_check(l_r: f64, l_r1: f64, l_r2: f64, epsilon: f64) -> bool {
    let plateau = (l_r2 - l_r1).abs() < epsilon * 1e-2;
    let den = l_r1 - l_r;
    if den == 0.0 {
        return plateau;
    }
    let a = (l_r2 - l_r1) / den;
    if !a.is_finite() || a >= 1.0 || a <= 0.0 {
        return plateau;
    }
    let l_inf = l_r1 + (l_r2 - l_r1) / (1.0 - a);
    let gap = l_inf - l_r1;
    gap > 0.0 && gap < epsilon
}

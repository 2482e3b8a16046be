/// Solves a tridiagonal system in place by the Thomas algorithm.
///
/// `sub[0]` and `sup[len-1]` are ignored. The Newton matrices assembled by
/// the stepper are M-matrices, so no pivoting is needed. On return `rhs`
/// holds the solution.
pub fn solve_in_place(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], work: &mut Vec<f64>) {
    let len = diag.len();
    debug_assert!(sub.len() == len && sup.len() == len && rhs.len() == len);
    work.clear();
    work.resize(len, 0.0);
    let mut denom = diag[0];
    work[0] = sup[0] / denom;
    rhs[0] /= denom;
    for i in 1..len {
        denom = diag[i] - sub[i] * work[i - 1];
        work[i] = sup[i] / denom;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..len - 1).rev() {
        rhs[i] -= work[i] * rhs[i + 1];
    }
}

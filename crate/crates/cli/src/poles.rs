//! Discrete pole placement for single-input systems via Ackermann's formula.

use rmpc_au::linalg::{solve_dense, Mat};

/// Gain `K` with `eig(A + BK)` at the requested real poles. Returns `None`
/// when the system is not single input, the pole count is wrong, or the
/// controllability matrix is singular.
pub fn place_poles(a: &Mat<f64>, b: &Mat<f64>, poles: &[f64]) -> Option<Mat<f64>> {
    let n = a.rows();
    if b.cols() != 1 || poles.len() != n {
        return None;
    }
    // Controllability matrix [B, AB, ..., A^{n-1}B].
    let mut ctrb = Mat::zeros(n, n);
    let mut col = b.col(0);
    for j in 0..n {
        for i in 0..n {
            ctrb[(i, j)] = col[i];
        }
        col = a.mul_vec(&col);
    }
    // Monic characteristic polynomial from the desired poles.
    let mut coeffs = vec![1.0];
    for &p in poles {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    // phi(A) = A^n + c_1 A^{n-1} + ... + c_n I, built low power first.
    let mut phi = Mat::zeros(n, n);
    let mut power = Mat::identity(n);
    for k in (0..=n).rev() {
        phi = phi.add(&power.scale(coeffs[k]));
        if k > 0 {
            power = power.mul(a);
        }
    }
    // Ackermann: K' = e_n' C^{-1} phi(A) places eig(A - B K'), so the
    // feedback for x+ = Ax + B(Kx) is K = -K'.
    let mut e_n = vec![0.0; n];
    e_n[n - 1] = 1.0;
    let row = solve_dense(&ctrb.transpose(), &e_n)?;
    let k_row: Vec<f64> = (0..n).map(|j| -rmpc_au::linalg::dot(&row, &phi.col(j))).collect();
    Some(Mat::from_rows(&[k_row]).unwrap())
}

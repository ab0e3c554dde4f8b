//! Small dense complex linear algebra on `ndarray` matrices.
//!
//! Everything here targets matrices of dimension ≤ 63, so the routines favour
//! clarity over blocking or pivoting heuristics beyond partial pivoting.

use ndarray::Array2;
use num_complex::Complex64;

pub type CMatrix = Array2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diag().iter().sum()
}

/// Trace of a product without forming it.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest componentwise deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// ‖A†A − 1‖ in the Frobenius norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    frobenius(&(dagger(u).dot(u) - identity(u.nrows())))
}

pub fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// LU factorisation with partial pivoting, in place. Returns the row
/// permutation and its parity, or `None` for an exactly singular matrix.
fn lu_in_place(a: &mut CMatrix) -> Option<(Vec<usize>, bool)> {
    let n = a.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    for k in 0..n {
        let (piv, mag) = (k..n).map(|i| (i, a[[i, k]].norm())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if mag == 0.0 {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap([k, j], [piv, j]);
            }
            perm.swap(k, piv);
            odd = !odd;
        }
        let pivot = a[[k, k]];
        for i in k + 1..n {
            let factor = a[[i, k]] / pivot;
            a[[i, k]] = factor;
            for j in k + 1..n {
                let t = a[[k, j]];
                a[[i, j]] -= factor * t;
            }
        }
    }
    Some((perm, odd))
}

pub fn determinant(a: &CMatrix) -> Complex64 {
    let mut lu = a.clone();
    match lu_in_place(&mut lu) {
        None => ZERO,
        Some((_, odd)) => {
            let d: Complex64 = lu.diag().iter().product();
            if odd {
                -d
            } else {
                d
            }
        }
    }
}

/// Solve `A X = B` for square `A`. Returns `None` if `A` is singular.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    let mut lu = a.clone();
    let (perm, _) = lu_in_place(&mut lu)?;
    let mut x = CMatrix::zeros(b.raw_dim());
    for col in 0..b.ncols() {
        let mut y: Vec<Complex64> = perm.iter().map(|&p| b[[p, col]]).collect();
        for i in 0..n {
            for k in 0..i {
                let t = lu[[i, k]] * y[k];
                y[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = lu[[i, k]] * y[k];
                y[i] -= t;
            }
            y[i] /= lu[[i, i]];
        }
        for i in 0..n {
            x[[i, col]] = y[i];
        }
    }
    Some(x)
}

// Diagonal Padé(6,6) coefficients for exp.
const PADE6: [f64; 7] = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];

/// Matrix exponential by scaling and squaring with a diagonal Padé(6,6)
/// approximant. The scaled norm is kept below 1/2, where the truncation error
/// is below double precision.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|z| z * 0.5f64.powi(squarings));

    let id = identity(n);
    let mut power = id.clone();
    let mut even = id.mapv(|z| z * PADE6[0]);
    let mut odd = CMatrix::zeros((n, n));
    for (k, &c) in PADE6.iter().enumerate().skip(1) {
        power = power.dot(&scaled);
        if k % 2 == 0 {
            even = even + power.mapv(|z| z * c);
        } else {
            odd = odd + power.mapv(|z| z * c);
        }
    }
    // exp(A) ≈ (E − O)⁻¹ (E + O)
    let numer = &even + &odd;
    let denom = &even - &odd;
    let mut result = solve(&denom, &numer).expect("Padé denominator is nonsingular for ‖A‖ ≤ 1/2");
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// exp(−i·dt·H) for Hermitian `h`.
pub fn unitary_step(h: &CMatrix, dt: f64) -> CMatrix {
    expm(&h.mapv(|z| z * Complex64::new(0.0, -dt)))
}

//! Eigendecomposition of small Hermitian matrices by cyclic complex Jacobi
//! rotations, plus band projections and gaps built on it.

use crate::linalg::{self, CMatrix};
use crate::model::{FluxAngle, HermitianOperator};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Ascending spectrum with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl EigenSystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Columns `indices` of the eigenvector matrix.
    pub fn frame(&self, indices: &[usize]) -> CMatrix {
        let n = self.dim();
        let mut f = CMatrix::zeros((n, indices.len()));
        for (c, &k) in indices.iter().enumerate() {
            f.column_mut(c).assign(&self.vectors.column(k));
        }
        f
    }

    /// `V diag(E) V†`
    pub fn reconstruct(&self) -> CMatrix {
        let scaled = CMatrix::from_shape_fn(self.vectors.raw_dim(), |(i, j)| self.vectors[[i, j]] * self.values[j]);
        scaled.dot(&linalg::dagger(&self.vectors))
    }
}

/// Which eigenvalues (ascending order, zero-based) make up a band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// The `q` lowest levels, i.e. everything below gap `q`.
    Lowest(usize),
    Indices(Vec<usize>),
    All,
}

impl Band {
    pub fn indices(&self, dim: usize) -> Vec<usize> {
        match self {
            Band::Lowest(q) => (0..*q).collect(),
            Band::Indices(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
            Band::All => (0..dim).collect(),
        }
    }

    pub fn complement(&self, dim: usize) -> Vec<usize> {
        let inside = self.indices(dim);
        (0..dim).filter(|k| !inside.contains(k)).collect()
    }
}

/// Orthogonal projection of rank `rank`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub matrix: CMatrix,
    pub rank: usize,
}

impl Projection {
    /// ‖P² − P‖ in the Frobenius norm.
    pub fn idempotency_defect(&self) -> f64 {
        linalg::frobenius(&(self.matrix.dot(&self.matrix) - &self.matrix))
    }
}

/// Diagonalizes `h`. The output is deterministic: a fixed sweep order, ascending
/// eigenvalues, and each eigenvector rephased so its first largest-modulus
/// component is real and positive.
pub fn eigensystem(h: &HermitianOperator) -> Result<EigenSystem> {
    let m = h.matrix();
    let defect = linalg::hermiticity_defect(m);
    if defect > HermitianOperator::TOLERANCE * linalg::max_abs(m).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    jacobi(m.clone())
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: CMatrix) -> Result<EigenSystem> {
    let n = a.nrows();
    let mut v = linalg::identity(n);
    let scale = linalg::frobenius(&a);
    let target = OFF_DIAGONAL_TOL * scale;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > target {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].re.total_cmp(&a[[j, j]].re));
    let values = order.iter().map(|&i| a[[i, i]].re).collect();
    let mut vectors = CMatrix::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for r in 0..n {
            let mag = v[[r, i]].norm();
            if mag > best_mag * (1.0 + 1e-12) {
                best = r;
                best_mag = mag;
            }
        }
        let phase = v[[best, i]].conj() / best_mag;
        for r in 0..n {
            vectors[[r, col]] = v[[r, i]] * phase;
        }
        vectors[[best, col]] = Complex64::new(best_mag, 0.0);
    }
    Ok(EigenSystem { values, vectors })
}

/// One complex Givens rotation annihilating `a[p][q]`: `A ← J†AJ`, `V ← VJ` with
/// `J = [[c, s], [−s e^{−iφ}, c e^{−iφ}]]` on the `(p, q)` plane.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[[p, q]];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let e = apq / mag;
    let app = a[[p, p]].re;
    let aqq = a[[q, q]].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let eb = e.conj();
    let n = a.nrows();
    for k in 0..n {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = akp * c - akq * (eb * s);
        a[[k, q]] = akp * s + akq * (eb * c);
    }
    for k in 0..n {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = apk * c - aqk * (e * s);
        a[[q, k]] = apk * s + aqk * (e * c);
    }
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = vkp * c - vkq * (eb * s);
        v[[k, q]] = vkp * s + vkq * (eb * c);
    }
    a[[p, q]] = Complex64::new(0.0, 0.0);
    a[[q, p]] = Complex64::new(0.0, 0.0);
    a[[p, p]] = Complex64::new(a[[p, p]].re, 0.0);
    a[[q, q]] = Complex64::new(a[[q, q]].re, 0.0);
}

/// `Σ_{k ∈ indices} v_k v_k†`. Fails if the index set cuts through a cluster of
/// eigenvalues closer than [`CLUSTER_TOL`].
pub fn band_projection(es: &EigenSystem, indices: &[usize]) -> Result<Projection> {
    let n = es.dim();
    let mut inside = vec![false; n];
    for &k in indices {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, dim: n });
        }
        inside[k] = true;
    }
    for k in 1..n {
        let spacing = es.values[k] - es.values[k - 1];
        if inside[k] != inside[k - 1] && spacing < CLUSTER_TOL {
            return Err(Error::SplitDegeneracy { index: k, spacing });
        }
    }
    let sel: Vec<usize> = (0..n).filter(|&k| inside[k]).collect();
    let f = es.frame(&sel);
    Ok(Projection { matrix: f.dot(&linalg::dagger(&f)), rank: sel.len() })
}

/// `E_k − E_{k−1}` for `1 ≤ k ≤ dim − 1`.
pub fn spectral_gap(es: &EigenSystem, k: usize) -> Result<f64> {
    if k == 0 || k >= es.dim() {
        return Err(Error::IndexOutOfRange { index: k, dim: es.dim() });
    }
    Ok(es.values[k] - es.values[k - 1])
}

/// Smallest spacing between a level in `indices` and an adjacent level outside
/// it. Infinite when the band is the whole spectrum.
pub fn band_isolation(es: &EigenSystem, indices: &[usize]) -> f64 {
    let n = es.dim();
    let mut inside = vec![false; n];
    for &k in indices {
        inside[k] = true;
    }
    (1..n).filter(|&k| inside[k] != inside[k - 1]).map(|k| es.values[k] - es.values[k - 1]).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingTest {
    pub crossing: bool,
    /// `(a² + b² + c²)^{3/2} − 3^{3/2} abc |cos ϑ|`, nonnegative by AM–GM.
    pub margin: f64,
}

/// Tolerance of [`trimer_crossing_test`], relative to `(a² + b² + c²)^{3/2}`.
pub const CROSSING_TOL: f64 = 1e-12;

/// Whether the trimer with hoppings `a, b, c` and flux `flux` has a degenerate
/// level. A crossing needs `|a| = |b| = |c|` and `cos ϑ = ±1`; since both
/// conditions enter the margin quadratically, a side mismatch δ shows up as a
/// margin of order δ².
pub fn trimer_crossing_test(a: f64, b: f64, c: f64, flux: FluxAngle) -> CrossingTest {
    let cos = flux.angle().cos();
    let size = (a * a + b * b + c * c).powf(1.5);
    let margin = size - 3f64.powf(1.5) * (a * b * c).abs() * cos.abs();
    let tol = CROSSING_TOL * size.max(f64::MIN_POSITIVE);
    let crossing = margin.abs() < tol && (1.0 - cos.abs()) < CROSSING_TOL;
    CrossingTest { crossing, margin }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::trimer_hamiltonian;
    use ndarray::Array2;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_hermitian(n: usize, entries: &[f64]) -> HermitianOperator {
        let mut m = CMatrix::zeros((n, n));
        let mut it = entries.iter().cycle();
        for i in 0..n {
            m[[i, i]] = c(*it.next().unwrap());
            for j in i + 1..n {
                let z = Complex64::new(*it.next().unwrap(), *it.next().unwrap());
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    fn check_decomposition(h: &HermitianOperator) {
        let es = eigensystem(h).unwrap();
        let scale = linalg::frobenius(h.matrix()).max(1.0);
        assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(linalg::unitarity_defect(&es.vectors) < 1e-11);
        assert!(linalg::frobenius(&(es.reconstruct() - h.matrix())) < 1e-11 * scale);
        for k in 0..es.dim() {
            let v = es.vectors.column(k).to_owned();
            let r = h.matrix().dot(&v) - v.mapv(|z| z * es.values[k]);
            assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-11 * scale);
        }
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let m = Array2::from_diag(&ndarray::arr1(&[c(3.0), c(-1.0), c(0.5)]));
        let es = eigensystem(&HermitianOperator::new(m).unwrap()).unwrap();
        assert_eq!(es.values(), &[-1.0, 0.5, 3.0]);
    }

    #[test]
    fn heptagon_doublets() {
        let spec = crate::model::NecklaceSpec::new(7, Default::default()).unwrap();
        let h = crate::model::necklace_hamiltonian(&spec, Default::default(), FluxAngle::zero()).unwrap();
        let es = eigensystem(&h).unwrap();
        let expect =
            [-1.8019377358048383, -1.8019377358048383, -0.4450418679126288, -0.4450418679126288, 1.2469796037174667, 1.2469796037174667, 2.0];
        for (e, x) in es.values().iter().zip(expect) {
            assert!((e - x).abs() < 1e-12);
        }
        for m in 0..4 {
            let em = 2.0 * (TAU * m as f64 / 7.0).cos();
            assert!(es.values().iter().any(|e| (e - em).abs() < 1e-12));
        }
    }

    #[test]
    fn identical_input_gives_identical_output() {
        let h = random_hermitian(9, &[0.3, -1.2, 0.8, 2.2, -0.4, 0.1, 0.9]);
        let a = eigensystem(&h).unwrap();
        let b = eigensystem(&h).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
        for k in 0..9 {
            let col = a.vectors.column(k);
            let (idx, _) =
                col.iter().enumerate().fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 * (1.0 + 1e-12) { (i, z.norm()) } else { best });
            assert_eq!(col[idx].im, 0.0);
            assert!(col[idx].re > 0.0);
        }
    }

    #[test]
    fn trimer_projection_kills_uniform_state() {
        let es = eigensystem(&trimer_hamiltonian(1.0, 1.0, 1.0, FluxAngle::zero())).unwrap();
        let p = band_projection(&es, &[0, 1]).unwrap();
        let ones = ndarray::arr1(&[c(1.0), c(1.0), c(1.0)]);
        assert!(p.matrix.dot(&ones).iter().all(|z| z.norm() < 1e-12));
        assert!((linalg::trace(&p.matrix).re - 2.0).abs() < 1e-10);
        assert!(p.idempotency_defect() < 1e-11);
        let full = band_projection(&es, &[0, 1, 2]).unwrap();
        assert!(linalg::max_abs(&(full.matrix - linalg::identity(3))) < 1e-12);
        assert!(matches!(band_projection(&es, &[0]), Err(Error::SplitDegeneracy { .. })));
        assert!(matches!(band_projection(&es, &[3]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn trimer_gaps() {
        let es = eigensystem(&trimer_hamiltonian(1.0, 1.0, 1.0, FluxAngle::zero())).unwrap();
        assert!((spectral_gap(&es, 2).unwrap() - 3.0).abs() < 1e-12);
        assert!(spectral_gap(&es, 1).unwrap() < 1e-12);
        assert!(spectral_gap(&es, 0).is_err());
        let es = eigensystem(&trimer_hamiltonian(1.0, 1.0, 1.0, FluxAngle(PI))).unwrap();
        assert!(spectral_gap(&es, 2).unwrap() < 1e-12);
        let es = eigensystem(&trimer_hamiltonian(1.1, 1.0, 1.0, FluxAngle::zero())).unwrap();
        assert!(spectral_gap(&es, 1).unwrap() > 1e-3);
    }

    #[test]
    fn crossing_test_examples() {
        let t = trimer_crossing_test(1.0, 1.0, 1.0, FluxAngle::zero());
        assert!(t.crossing && t.margin.abs() < 1e-12);
        assert!(!trimer_crossing_test(1.0, 1.0, 1.0, FluxAngle(PI / 2.0)).crossing);
        assert!(trimer_crossing_test(1.0, 1.0, 1.0, FluxAngle(PI)).crossing);
        let t = trimer_crossing_test(1.2, 1.0, 1.0, FluxAngle::zero());
        assert!(!t.crossing && t.margin > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reconstruction(n in 1usize..=63, entries in proptest::collection::vec(-3.0f64..3.0, 17)) {
            check_decomposition(&random_hermitian(n, &entries));
        }

        #[test]
        fn degenerate_blocks_decompose(n in 2usize..=20, value in -2.0f64..2.0) {
            let m = linalg::identity(n).mapv(|z| z * value);
            check_decomposition(&HermitianOperator::new(m).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn gap_vanishes_iff_equal_sides(a in 0.2f64..2.0, b in 0.2f64..2.0, c in 0.2f64..2.0, equal in proptest::bool::ANY) {
            let (b, c) = if equal { (a, a) } else { (b, c) };
            let es = eigensystem(&trimer_hamiltonian(a, b, c, FluxAngle::zero())).unwrap();
            let gap = spectral_gap(&es, 1).unwrap().min(spectral_gap(&es, 2).unwrap());
            let test = trimer_crossing_test(a, b, c, FluxAngle::zero());
            prop_assert!(test.margin >= -1e-12);
            if equal {
                prop_assert!(gap < 1e-9 && test.crossing);
            } else {
                // the gap is of first order in the side mismatch δ, the margin of second order
                let delta = (a - b).abs().max((b - c).abs());
                prop_assert!(gap > 0.1 * delta);
                prop_assert_eq!(test.crossing, false);
            }
        }
    }
}

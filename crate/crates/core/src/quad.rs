//! Adaptive Gauss–Kronrod (7, 15) quadrature for complex-valued integrands.

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: [f64; 2],
    error: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<[f64; 2]>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; 2];
    let mut gauss = [0.0; 2];
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let pts: &[f64] = if x == 0.0 { &[0.0] } else { &[-x, x] };
        for &t in pts {
            let v = f(c + h * t)?;
            for i in 0..2 {
                kron[i] += w * v[i];
                if k % 2 == 1 {
                    gauss[i] += WG[k / 2] * v[i];
                }
            }
        }
    }
    let value = [kron[0] * h, kron[1] * h];
    let error = ((kron[0] - gauss[0]).powi(2) + (kron[1] - gauss[1]).powi(2)).sqrt() * h.abs();
    Ok(Panel { a, b, value, error })
}

/// Integrates `f` over the union of consecutive intervals given by `breaks`,
/// bisecting the panel with the largest error estimate until the total error
/// is below `max(abs_tol, rel_tol·|I|)`. Returns the integral and the error
/// estimate.
pub(crate) fn integrate<F>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64, max_panels: usize) -> Result<([f64; 2], f64)>
where
    F: Fn(f64) -> Result<[f64; 2]>,
{
    let mut panels = Vec::new();
    for w in breaks.windows(2) {
        panels.push(gk15(&f, w[0], w[1])?);
    }
    loop {
        let total = panels.iter().fold([0.0; 2], |acc, p| [acc[0] + p.value[0], acc[1] + p.value[1]]);
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let tol = abs_tol.max(rel_tol * total[0].hypot(total[1]));
        if err <= tol {
            return Ok((total, err));
        }
        if panels.len() >= max_panels {
            return Err(Error::NoConvergence(panels.len()));
        }
        let worst = panels.iter().enumerate().fold(0, |best, (i, p)| if p.error > panels[best].error { i } else { best });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&f, p.a, mid)?);
        panels.push(gk15(&f, mid, p.b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| Ok([x.powi(10), -x.powi(3)]), &[0.0, 2.0], 1e-14, 0.0, 4).unwrap();
        assert!((v[0] - 2f64.powi(11) / 11.0).abs() < 1e-10);
        assert!((v[1] + 4.0).abs() < 1e-13);
    }

    #[test]
    fn narrow_peak() {
        // ∫ w/(x² + w²) over [−1, 1] = 2 atan(1/w)
        let w = 1e-3;
        let (v, err) = integrate(|x| Ok([w / (x * x + w * w), 0.0]), &[-1.0, 0.3, 1.0], 1e-10, 1e-10, 500).unwrap();
        assert!((v[0] - 2.0 * (1.0 / w).atan()).abs() < 1e-8, "{} {err}", v[0]);
    }

    #[test]
    fn propagates_integrand_errors() {
        let r = integrate(|x| if x > 0.5 { Err(Error::Singular) } else { Ok([1.0, 0.0]) }, &[0.0, 1.0], 1e-10, 0.0, 10);
        assert_eq!(r.unwrap_err(), Error::Singular);
    }
}

//! Composite Simpson quadrature over complex-valued integrands.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Simpson nodes and weights on `[t0, t1]` with `panels` double-intervals (`2 * panels + 1` nodes).
pub fn simpson_rule(t0: f64, t1: f64, panels: usize) -> Vec<(f64, f64)> {
    let m = 2 * panels;
    let h = (t1 - t0) / m as f64;
    (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (t0 + h * i as f64, w * h / 3.0)
        })
        .collect()
}

fn check_panels(panels: usize) -> Result<()> {
    if panels < 2 {
        return Err(Error::InvalidSpec(format!(
            "quadrature needs at least 2 panels, got {panels}"
        )));
    }
    Ok(())
}

/// `∫_{t0}^{t1} f(t) dt` by composite Simpson with `panels` panels.
pub fn quadrature<F>(f: F, t0: f64, t1: f64, panels: usize) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    check_panels(panels)?;
    let mut acc = C64::new(0.0, 0.0);
    for (t, w) in simpson_rule(t0, t1, panels) {
        let v = f(t);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NumericalDomain(format!("integrand is not finite at t = {t}")));
        }
        acc += v * w;
    }
    Ok(acc)
}

/// Matrix-valued counterpart of [`quadrature`] for fallible integrands.
pub fn quadrature_matrix<F>(f: F, t0: f64, t1: f64, panels: usize) -> Result<DMatrix<C64>>
where
    F: Fn(f64) -> Result<DMatrix<C64>>,
{
    check_panels(panels)?;
    let mut acc: Option<DMatrix<C64>> = None;
    for (t, w) in simpson_rule(t0, t1, panels) {
        let v = f(t)?;
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NumericalDomain(format!("integrand is not finite at t = {t}")));
        }
        let term = v * C64::new(w, 0.0);
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    Ok(acc.expect("rule has at least five nodes"))
}

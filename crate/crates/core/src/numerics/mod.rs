//! Small numerical kernels shared by the solvers: Gauss rules, tridiagonal
//! solves, an adaptive Runge-Kutta integrator and 2D FFT helpers.

pub mod fft2;
pub mod ode;
pub mod quadrature;
pub mod tridiag;

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            h * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Fourth-order centered first and second derivatives on a uniform grid.
/// The two nodes at each end fall back to second-order one-sided/centered
/// formulas.
pub fn derivatives4<T>(f: &[T], h: f64) -> (Vec<T>, Vec<T>)
where
    T: Copy
        + Default
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<f64, Output = T>,
{
    let n = f.len();
    let mut d1 = vec![T::default(); n];
    let mut d2 = vec![T::default(); n];
    if n < 5 {
        return (d1, d2);
    }
    for i in 2..n - 2 {
        d1[i] = (f[i - 2] - f[i + 2] + (f[i + 1] - f[i - 1]) * 8.0) * (1.0 / (12.0 * h));
        d2[i] = ((f[i + 1] + f[i - 1]) * 16.0 - (f[i + 2] + f[i - 2]) - f[i] * 30.0)
            * (1.0 / (12.0 * h * h));
    }
    for &i in &[1, n - 2] {
        d1[i] = (f[i + 1] - f[i - 1]) * (0.5 / h);
        d2[i] = (f[i + 1] + f[i - 1] - f[i] * 2.0) * (1.0 / (h * h));
    }
    d1[0] = (f[1] - f[0]) * (1.0 / h);
    d1[n - 1] = (f[n - 1] - f[n - 2]) * (1.0 / h);
    d2[0] = d2[1];
    d2[n - 1] = d2[n - 2];
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * h + 1.0).collect();
        assert!((trapezoid(&v, h) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivatives_of_sine() {
        let h = 0.01;
        let f: Vec<f64> = (0..200).map(|i| (i as f64 * h).sin()).collect();
        let (d1, d2) = derivatives4(&f, h);
        for i in 2..198 {
            let x = i as f64 * h;
            assert!((d1[i] - x.cos()).abs() < 1e-9);
            assert!((d2[i] + x.sin()).abs() < 1e-7);
        }
    }
}

//! Adaptive Gauss-Kronrod (7/15) quadrature for complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

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

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-6,
            max_subdivisions: 2000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Quadrature {
    let (value, error) = gk15(&mut f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_error = error;

    let mut subdivisions = 1;
    while total_error > tol.abs.max(tol.rel * total.norm()) && subdivisions < tol.max_subdivisions {
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
    // resum to shed accumulated rounding from the incremental updates
    let value: Complex64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Quadrature {
        value,
        error,
        evaluations,
        converged: error <= tol.abs.max(tol.rel * value.norm()),
    }
}

/// Iterated integral over the rectangle `[ya, yb] x [za, zb]`, inner over `y`.
pub fn integrate_2d<F: FnMut(f64, f64) -> Complex64>(
    mut f: F,
    (ya, yb): (f64, f64),
    (za, zb): (f64, f64),
    tol: Tolerance,
) -> Quadrature {
    let inner_tol = Tolerance {
        abs: tol.abs / (zb - za).abs().max(1.0) / 10.0,
        rel: tol.rel / 10.0,
        max_subdivisions: tol.max_subdivisions,
    };
    let mut inner_error = 0.0f64;
    let mut evaluations = 0;
    let mut inner_ok = true;
    let outer = integrate(
        |z| {
            let q = integrate(|y| f(y, z), ya, yb, inner_tol);
            inner_error = inner_error.max(q.error);
            evaluations += q.evaluations;
            inner_ok &= q.converged;
            q.value
        },
        za,
        zb,
        tol,
    );
    let error = outer.error + inner_error * (zb - za).abs();
    Quadrature {
        value: outer.value,
        error,
        evaluations,
        converged: outer.converged && inner_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| Complex64::new(x.powi(5) - 2.0 * x, x * x), 0.0, 2.0, Tolerance::default());
        assert!((q.value - Complex64::new(64.0 / 6.0 - 4.0, 8.0 / 3.0)).norm() < 1e-13);
        assert!(q.converged);
    }

    #[test]
    fn oscillatory_exponential() {
        // int_{-1/2}^{1/2} exp(-j 2 pi 7.3 x) dx = sinc(7.3)
        let f = 7.3;
        let q = integrate(|x| Complex64::from_polar(1.0, -2.0 * PI * f * x), -0.5, 0.5, Tolerance::default());
        let expected = (PI * f).sin() / (PI * f);
        assert!((q.value.re - expected).abs() < 1e-9);
        assert!(q.value.im.abs() < 1e-9);
    }

    #[test]
    fn separable_2d() {
        let q = integrate_2d(
            |y, z| Complex64::new((y * z).cos(), 0.0) * Complex64::from_polar(1.0, y),
            (0.0, 1.0),
            (-1.0, 2.0),
            Tolerance::default(),
        );
        // reference from a dense tensor Gauss-Legendre sum
        let n = 400;
        let mut reference = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let y = (i as f64 + 0.5) / n as f64;
                let z = -1.0 + 3.0 * (j as f64 + 0.5) / n as f64;
                reference += Complex64::new((y * z).cos(), 0.0) * Complex64::from_polar(1.0, y) * (3.0 / (n * n) as f64);
            }
        }
        assert!((q.value - reference).norm() < 1e-4);
        assert!(q.converged);
    }
}

//! The 28 two-dimensional test functions. Each takes a slice of length 2.

use std::f64::consts::PI;

pub fn ackley02(x: &[f64]) -> f64 {
    -200.0 * (-0.02 * (x[0] * x[0] + x[1] * x[1]).sqrt()).exp()
}

pub fn beale(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a * b - a + 1.5).powi(2) + (a * b * b - a + 2.25).powi(2) + (a * b.powi(3) - a + 2.625).powi(2)
}

pub fn bird(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a - b).powi(2) + (1.0 - a.sin()).powi(2).exp() * b.cos() + (1.0 - b.cos()).powi(2).exp() * a.sin()
}

pub fn bohachevsky01(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    a * a + 2.0 * b * b - 0.3 * (3.0 * PI * a).cos() - 0.4 * (4.0 * PI * b).cos() + 0.7
}

pub fn branin02(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0).powi(2)
        + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() * b.cos()
        + (a * a + b * b + 1.0).ln()
        + 10.0
}

pub fn brent(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a + 10.0).powi(2) + (b + 10.0).powi(2) + (-a * a - b * b).exp()
}

pub fn brown(x: &[f64]) -> f64 {
    let (a2, b2) = (x[0] * x[0], x[1] * x[1]);
    a2.powf(b2 + 1.0) + b2.powf(a2 + 1.0)
}

pub fn eggcrate(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    a * a + b * b + 25.0 * (a.sin().powi(2) + b.sin().powi(2))
}

pub fn goldstein_price(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let left = 1.0 + (a + b + 1.0).powi(2) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    let right =
        30.0 + (2.0 * a - 3.0 * b).powi(2) * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    left * right
}

pub fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
}

/// The decay factor is `exp(-x2)`; with `exp(-x1)` the listed minimum at
/// (4, 2) is not a stationary point.
pub fn hosaki(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let poly = 1.0 - 8.0 * a + 7.0 * a * a - 7.0 / 3.0 * a.powi(3) + 0.25 * a.powi(4);
    poly * b * b * (-b).exp()
}

/// Defined as 0 at the origin, which is the limit of the expression there.
pub fn keane(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let r = (a * a + b * b).sqrt();
    if r == 0.0 {
        return 0.0;
    }
    (a - b).sin().powi(2) * (a + b).sin().powi(2) / r
}

/// Uses the transformed variables `y_i = 1 + (x_i - 1) / 4`.
pub fn levy03(x: &[f64]) -> f64 {
    let y1 = 1.0 + (x[0] - 1.0) / 4.0;
    let y2 = 1.0 + (x[1] - 1.0) / 4.0;
    (PI * y1).sin().powi(2) + (y1 - 1.0).powi(2) * (1.0 + 10.0 * (PI * y2).sin().powi(2)) + (y1 - 1.0).powi(2)
}

pub fn matyas(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    0.26 * (a * a + b * b) - 0.48 * a * b
}

pub fn price02(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    1.0 + a.sin().powi(2) + b.sin().powi(2) - 0.1 * (-a * a - b * b).exp()
}

pub fn quadratic(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    -3803.84 - 138.08 * a - 232.92 * b + 128.08 * a * a + 203.64 * b * b + 182.25 * a * b
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|&v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2)
}

pub fn rotated_ellipse01(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    7.0 * a * a - 6.0 * 3f64.sqrt() * a * b + 13.0 * b * b
}

pub fn salomon(x: &[f64]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    1.0 - (2.0 * PI * r).cos() + 0.1 * r
}

pub fn schaffer03(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let r2 = a * a + b * b;
    0.5 + ((a * a - b * b).abs().cos().sin().powi(2) - 0.5) / (1.0 + 0.001 * r2 * r2)
}

pub fn schaffer04(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let r2 = a * a + b * b;
    0.5 + ((a * a - b * b).sin().cos().powi(2) - 0.5) / (1.0 + 0.001 * r2 * r2)
}

pub fn schwefel04(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a - 1.0).powi(2) + (b - a * a).powi(2)
}

pub fn treccani(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    a.powi(4) + 4.0 * a.powi(3) + 4.0 * a * a + b * b
}

pub fn ursem04(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    -3.0 * (0.5 * PI * a + 0.5 * PI).sin() * (2.0 - (a * a + b * b).sqrt()) / 4.0
}

pub fn whitley(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let t = 100.0 * (a * a - b).powi(2) + (1.0 - b).powi(2);
    t * t / 4000.0 - t.cos() + 1.0
}

pub fn zettl(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    0.25 * a + (a * a - 2.0 * a + b * b).powi(2)
}

pub fn zirilli(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    0.25 * a.powi(4) - 0.5 * a * a + 0.1 * a + 0.5 * b * b
}

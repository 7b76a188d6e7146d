//! Independent reference computations shared by the integration and
//! acceptance tests. Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use hybridloc_core::Point2;

/// Minimum distance from `p` to points sampled every `step` meters along
/// each segment (segment endpoints included).
pub fn dense_sampling_distance(p: Point2, vertices: &[Point2], step: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
        let n = (len / step).ceil() as usize;
        for k in 0..=n {
            let t = (k as f64 / n as f64).min(1.0);
            let q = (a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            let d = ((p.x - q.0).powi(2) + (p.y - q.1).powi(2)).sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Central finite-difference gradient of a scalar field in the plane.
pub fn central_gradient(f: impl Fn(Point2) -> f64, p: Point2, h: f64) -> (f64, f64) {
    let gx = (f(Point2::new(p.x + h, p.y)) - f(Point2::new(p.x - h, p.y))) / (2.0 * h);
    let gy = (f(Point2::new(p.x, p.y + h)) - f(Point2::new(p.x, p.y - h))) / (2.0 * h);
    (gx, gy)
}

/// Fraction of `values` not exceeding `t`, by direct counting.
pub fn brute_cdf(values: &[f64], t: f64) -> f64 {
    values.iter().filter(|&&v| v <= t).count() as f64 / values.len() as f64
}

/// Median by full sort; mean of the middle pair for even counts.
pub fn brute_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Inverse-variance mean and variance of scalar samples, written out
/// term by term.
pub fn inverse_variance_1d(samples: &[(f64, f64)]) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, var) in samples {
        num += x / var;
        den += 1.0 / var;
    }
    (num / den, 1.0 / den)
}

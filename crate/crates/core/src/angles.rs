//! Angle arithmetic on the torus.
//!
//! Every angle in the crate lives in `(-pi, pi]`. Distances, interpolation,
//! and spring lengths all use per-coordinate wrapped differences so that
//! paths never tear across the +/-pi seam.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Minimal signed angular difference `a - b`, wrapped into `(-pi, pi]`.
///
/// Ties at exactly pi break toward +pi.
pub fn wrap_diff(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

/// Componentwise wrapped difference `a - b`.
pub fn wrap_diff_vec(a: &[f64], b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), out.len());
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = wrap_diff(x, y);
    }
}

/// Geodesic (wrapped Euclidean) distance between two points on the torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = wrap_diff(x, y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Wrap every component of a vector in place.
pub fn wrap_vec(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = wrap(*x);
    }
}

/// Continuous lift of a node sequence: consecutive nodes are shifted by
/// multiples of 2*pi so that each step is the minimal arc. The first node is
/// kept verbatim.
pub fn unwrap_path(nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(nodes.len());
    if nodes.is_empty() {
        return out;
    }
    out.push(nodes[0].clone());
    for k in 1..nodes.len() {
        let prev = &out[k - 1];
        let lifted: Vec<f64> = prev
            .iter()
            .zip(&nodes[k])
            .map(|(&p, &n)| p + wrap_diff(n, p))
            .collect();
        out.push(lifted);
    }
    out
}

pub fn deg_to_rad(d: f64) -> f64 {
    d * PI / 180.0
}

pub fn rad_to_deg(r: f64) -> f64 {
    r * 180.0 / PI
}

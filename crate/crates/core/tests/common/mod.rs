//! Test-only oracles and random generators, independent of the library's
//! integrator and kernel code.
#![allow(dead_code)]

use carnot_core::{AlgebraSpec, ControlBody, SkewMatrix};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let b = a * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..=24 {
        term = &term * &b / j as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-t M A) h0`: the vertical flow of an ellipsoid body on `H = 1`.
pub fn linear_flow(m: &SkewMatrix, shape: &DMatrix<f64>, h0: &[f64], t: f64) -> Vec<f64> {
    let gen = -(m.matrix() * shape) * t;
    let v = expm(&gen) * DVector::from_column_slice(h0);
    v.iter().copied().collect()
}

/// Null direction of a nonzero 3x3 skew matrix via the cross-product formula.
pub fn null_direction_3(h12: f64, h13: f64, h23: f64) -> [f64; 3] {
    let v = [h23, -h13, h12];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut v = v.map(|x| x / n);
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v = v.map(|x| -x);
        }
    }
    v
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| -> f64 { StandardNormal.sample(rng) }).collect()
}

pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let v = gaussian_vec(rng, n);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Symmetric positive definite matrix with eigenvalues in `[0.5, 2]`.
pub fn random_spd<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_fn(k, |_, _| rng.random_range(0.5..2.0)));
    let a: DMatrix<f64> = &q * d * q.transpose();
    (&a + a.transpose()) * 0.5
}

/// Skew matrix with upper entries uniform in `[-1, 1]`.
pub fn random_skew<R: Rng>(rng: &mut R, k: usize) -> SkewMatrix {
    let spec = AlgebraSpec::new(k).unwrap();
    let upper: Vec<f64> = (0..spec.pair_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    SkewMatrix::from_upper(spec, &upper).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ellipsoid,
    LpBall,
    TranslatedEllipsoid,
}

pub const FAMILIES: [Family; 3] = [Family::Ellipsoid, Family::LpBall, Family::TranslatedEllipsoid];

pub fn random_body<R: Rng>(rng: &mut R, k: usize, family: Family) -> ControlBody {
    let body = match family {
        Family::Ellipsoid => ControlBody::ellipsoid(random_spd(rng, k)),
        Family::LpBall => ControlBody::lp_ball(k, rng.random_range(1.5..4.0), rng.random_range(0.5..2.0)),
        Family::TranslatedEllipsoid => {
            let shape = random_spd(rng, k);
            // c = 0.5 s L u with A = L L^T, |u| = 1, so c^T A^-1 c = 0.25 s^2 < 1
            let l = shape.clone().cholesky().unwrap().l();
            let u = DVector::from_vec(random_unit(rng, k));
            let s: f64 = rng.random_range(0.0..1.6);
            ControlBody::translated_ellipsoid(shape, l * u * (0.5 * s))
        }
    };
    body.validated().unwrap()
}

/// A covector whose support gradient for an lp body is parallel to `a`.
pub fn lp_parallel_covector(a: &[f64], p: f64) -> Vec<f64> {
    // grad H(h) is proportional to sign(h_i)|h_i|^(q-1); invert with exponent p - 1
    a.iter().map(|x| x.signum() * x.abs().powf(p - 1.0)).collect()
}

/// Minimum of `|exp(-tM)h0 - h0|` over `[delta, t_max]` for block-diagonal
/// `M` with rotation speeds `alpha`, `beta`, on a dense grid.
pub fn two_frequency_min(alpha: f64, beta: f64, h0: &[f64], delta: f64, t_max: f64) -> f64 {
    // closed form: each 2x2 block rotates rigidly
    let r1 = h0[0] * h0[0] + h0[1] * h0[1];
    let r2 = h0[2] * h0[2] + h0[3] * h0[3];
    let n = 2_000_000;
    (0..=n)
        .map(|i| {
            let t = delta + (t_max - delta) * i as f64 / n as f64;
            (2.0 * r1 * (1.0 - (alpha * t).cos()) + 2.0 * r2 * (1.0 - (beta * t).cos())).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Composite Simpson rule on uniformly sampled values.
pub fn simpson(values: &[f64], dt: f64) -> f64 {
    let n = values.len() - 1;
    assert!(n % 2 == 0);
    let mut s = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * dt / 3.0
}

//! Linear algebra for degenerate induced metrics: inner products against a
//! diagonal ambient signature, radical extraction from a singular Gram
//! matrix, and sign-aware Gram-Schmidt for screen bases whose vectors may be
//! timelike.

use crate::error::GeomError;
use crate::linalg::{null_space, Mat, PIVOT_REL_TOL};
use crate::scalar::Scalar;

/// Ambient inner product `sum_k eps_k u_k v_k` for a diagonal signature.
pub fn inner<S: Scalar>(eps: &[f64], u: &[S], v: &[S]) -> S {
    assert_eq!(eps.len(), u.len(), "signature/vector length mismatch");
    assert_eq!(u.len(), v.len(), "vector length mismatch");
    let mut acc = u[0].zero_like();
    for k in 0..u.len() {
        acc = acc.add(&u[k].mul(&v[k]).scale(eps[k]));
    }
    acc
}

/// Plain Euclidean dot product, used only for basis bookkeeping (pivot
/// deprojection, sign canonicalization), never as the geometry.
pub fn euclid_inner<S: Scalar>(u: &[S], v: &[S]) -> S {
    assert_eq!(u.len(), v.len(), "vector length mismatch");
    let mut acc = u[0].zero_like();
    for k in 0..u.len() {
        acc = acc.add(&u[k].mul(&v[k]));
    }
    acc
}

/// Gram matrix of a list of ambient vectors.
pub fn gram<S: Scalar>(eps: &[f64], vecs: &[Vec<S>]) -> Mat<S> {
    let n = vecs.len();
    Mat::from_fn(n, n, |i, j| inner(eps, &vecs[i], &vecs[j]))
}

/// Chart coefficients of the radical direction: the (required 1-dimensional)
/// null space of the induced Gram matrix.  The result is unnormalized; the
/// caller rescales once the ambient representative is known.
pub fn radical_chart_coeffs<S: Scalar>(g: &Mat<S>) -> Result<Vec<S>, GeomError> {
    let basis = null_space(g)?;
    if basis.len() != 1 {
        return Err(GeomError::RadicalRank { found: basis.len(), expected: 1 });
    }
    Ok(basis.into_iter().next().expect("length checked"))
}

/// Seed chart vectors for the screen: the Euclidean orthogonal complement of
/// the radical coefficient vector `c` inside chart space, one seed per
/// non-pivot coordinate axis.  With `k0` the largest-magnitude entry of `c`,
/// the seed for axis `k` is `e_k - (c_k / c_k0) e_k0`.
pub fn screen_seed_chart<S: Scalar>(c: &[S]) -> Result<Vec<Vec<S>>, GeomError> {
    let m = c.len();
    let k0 = (0..m)
        .max_by(|&a, &b| c[a].mag().total_cmp(&c[b].mag()))
        .expect("chart dimension is positive");
    if c[k0].mag() == 0.0 {
        return Err(GeomError::RadicalRank { found: 0, expected: 1 });
    }
    let pivot_inv = c[k0].recip()?;
    let zero = c[0].zero_like();
    let mut seeds = Vec::with_capacity(m - 1);
    for k in 0..m {
        if k == k0 {
            continue;
        }
        let mut d = vec![zero.clone(); m];
        d[k] = c[0].one_like();
        d[k0] = c[k].mul(&pivot_inv).neg();
        seeds.push(d);
    }
    Ok(seeds)
}

/// An orthonormalized family together with the causal sign of each member:
/// `metric(vecs[i], vecs[i]) = signs[i]`, off-diagonal products vanish.
#[derive(Debug)]
pub struct OrthoFrame<S> {
    pub vecs: Vec<Vec<S>>,
    pub signs: Vec<f64>,
}

/// Gram-Schmidt with full pivoting under an indefinite metric.  At each step
/// the remaining vector with the largest `|<v,v>|` is normalized (so timelike
/// directions are handled the same way as spacelike ones) and projected out
/// of the rest.  A step where every remaining norm is below the relative
/// degeneracy threshold fails: the span does not carry a nondegenerate
/// metric, which for a screen candidate means the chosen complement is bad.
pub fn gram_schmidt<S, F>(
    metric: F,
    mut pool: Vec<Vec<S>>,
    context: &'static str,
) -> Result<OrthoFrame<S>, GeomError>
where
    S: Scalar,
    F: Fn(&[S], &[S]) -> S,
{
    let count = pool.len();
    let mut scale0: f64 = 1.0;
    for v in &pool {
        scale0 = scale0.max(metric(v, v).mag());
    }
    let mut vecs = Vec::with_capacity(count);
    let mut signs = Vec::with_capacity(count);
    for step in 0..count {
        let norms: Vec<S> = pool.iter().map(|v| metric(v, v)).collect();
        let best = (0..pool.len())
            .max_by(|&a, &b| norms[a].mag().total_cmp(&norms[b].mag()))
            .expect("pool nonempty");
        let q = &norms[best];
        if q.mag() < PIVOT_REL_TOL * scale0 {
            let _ = context;
            return Err(GeomError::DegeneratePivot { step, mag: q.mag() });
        }
        let sign = q.val().signum();
        let v = pool.swap_remove(best);
        let inv_norm = q.scale(sign).sqrt()?.recip()?;
        let z: Vec<S> = v.iter().map(|x| x.mul(&inv_norm)).collect();
        for u in pool.iter_mut() {
            let proj = metric(u, &z).scale(sign);
            for k in 0..u.len() {
                u[k] = u[k].sub(&z[k].mul(&proj));
            }
        }
        vecs.push(z);
        signs.push(sign);
    }
    Ok(OrthoFrame { vecs, signs })
}

/// Basis of the metric orthogonal complement of a spanning family: all `x`
/// with `inner(eps, v, x) = 0` for every `v` in the family.
pub fn metric_orthocomplement<S: Scalar>(
    eps: &[f64],
    spanning: &[Vec<S>],
) -> Result<Vec<Vec<S>>, GeomError> {
    let dim = eps.len();
    let a = Mat::from_fn(spanning.len(), dim, |i, j| spanning[i][j].scale(eps[j]));
    null_space(&a)
}

//! Newton transformations of a shape operator and the elementary symmetric
//! functions of its principal curvatures.
//!
//! The symmetric functions come from power sums through Newton's identity
//! `k e_k = sum_{i=1..k} (-1)^(i-1) e_(k-i) p_i`, never from an
//! eigendecomposition, so the same code runs over floats, jets, and exact
//! rationals.  The transformation chain uses the alternating-sign form
//!
//! ```text
//! T_0 = I,    T_r = (-1)^r S_r I + A T_(r-1),
//! ```
//!
//! under which `T_n` vanishes by Cayley-Hamilton and the trace identities
//! checked by [`verify_trace_identities`] hold.

use crate::linalg::Mat;
use crate::scalar::{RingScalar, Scalar};

/// Power sums `p_0 = n, p_1 = tr A, ..., p_upto = tr A^upto`.
pub fn power_sums<S: RingScalar>(a: &Mat<S>, upto: usize) -> Vec<S> {
    assert_eq!(a.rows(), a.cols(), "power sums need a square matrix");
    let n = a.rows();
    let mut out = Vec::with_capacity(upto + 1);
    let mut p0 = a.sample().zero_like();
    for _ in 0..n {
        p0 = p0.add(&a.sample().one_like());
    }
    out.push(p0);
    let mut pw = Mat::identity_like(a.sample(), n);
    for _ in 1..=upto {
        pw = pw.mul(a);
        out.push(pw.trace());
    }
    out
}

/// Elementary symmetric functions `S_0 = 1, S_1, ..., S_upto` of the
/// eigenvalues of `a`.  Entries beyond the dimension are exactly zero.
pub fn symmetric_functions<S: RingScalar>(a: &Mat<S>, upto: usize) -> Vec<S> {
    let n = a.rows();
    let p = power_sums(a, upto.min(n));
    let zero = a.sample().zero_like();
    let mut e: Vec<S> = Vec::with_capacity(upto + 1);
    e.push(a.sample().one_like());
    for k in 1..=upto {
        if k > n {
            e.push(zero.clone());
            continue;
        }
        let mut acc = zero.clone();
        for i in 1..=k {
            let term = e[k - i].mul(&p[i]);
            acc = if i % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
        }
        e.push(acc.div_nat(k as u32));
    }
    e
}

/// The chain `T_0..T_dim` together with `S_0..S_dim`.
#[derive(Debug, Clone)]
pub struct NewtonChain<S> {
    pub dim: usize,
    /// `s[r]` is `S_r`; length `dim + 1`.
    pub s: Vec<S>,
    /// `t[r]` is `T_r`; length `dim + 1`, and `t[dim]` is the zero matrix up
    /// to roundoff by Cayley-Hamilton.
    pub t: Vec<Mat<S>>,
}

impl<S: RingScalar> NewtonChain<S> {
    /// `S_r`, extended by zero beyond the dimension.
    pub fn s_ext(&self, r: usize) -> S {
        if r <= self.dim {
            self.s[r].clone()
        } else {
            self.s[0].zero_like()
        }
    }
}

pub fn newton_chain<S: RingScalar>(a: &Mat<S>) -> NewtonChain<S> {
    assert_eq!(a.rows(), a.cols(), "Newton chain needs a square matrix");
    let n = a.rows();
    let s = symmetric_functions(a, n);
    let mut t = Vec::with_capacity(n + 1);
    t.push(Mat::identity_like(a.sample(), n));
    for r in 1..=n {
        let sr = if r % 2 == 0 { s[r].clone() } else { s[r].neg() };
        let mut next = a.mul(&t[r - 1]);
        for i in 0..n {
            *next.at_mut(i, i) = next.at(i, i).add(&sr);
        }
        t.push(next);
    }
    NewtonChain { dim: n, s, t }
}

/// Residuals of the closed-form trace identities of the chain, one entry per
/// `r` in `0..=dim`:
///
/// ```text
/// tr T_r         = (-1)^r (dim - r) S_r
/// tr (A T_r)     = (-1)^r (r + 1) S_(r+1)
/// tr (A^2 T_r)   = (-1)^(r+1) (-S_1 S_(r+1) + (r + 2) S_(r+2))
/// ```
///
/// plus the largest entry of `T_dim`, which Cayley-Hamilton says is zero.
/// For jet scalars the residual magnitude covers every Taylor coefficient,
/// so the identities are checked as local functions, not just at the point.
#[derive(Debug, Clone)]
pub struct TraceIdentityResiduals {
    pub trace_t: Vec<f64>,
    pub trace_at: Vec<f64>,
    pub trace_a2t: Vec<f64>,
    pub cayley_hamilton: f64,
}

impl TraceIdentityResiduals {
    pub fn worst(&self) -> f64 {
        self.trace_t
            .iter()
            .chain(&self.trace_at)
            .chain(&self.trace_a2t)
            .chain(std::iter::once(&self.cayley_hamilton))
            .fold(0.0_f64, |m, &r| m.max(r))
    }
}

pub fn verify_trace_identities<S: Scalar>(
    a: &Mat<S>,
    chain: &NewtonChain<S>,
) -> TraceIdentityResiduals {
    let n = chain.dim;
    let a2 = a.mul(a);
    let mut trace_t = Vec::with_capacity(n + 1);
    let mut trace_at = Vec::with_capacity(n + 1);
    let mut trace_a2t = Vec::with_capacity(n + 1);
    for r in 0..=n {
        let parity = if r % 2 == 0 { 1.0 } else { -1.0 };
        let tr = &chain.t[r];

        let lhs = tr.trace();
        let rhs = chain.s[r].scale(parity * (n - r) as f64);
        trace_t.push(resid(&lhs.sub(&rhs)));

        let lhs = a.mul(tr).trace();
        let rhs = chain.s_ext(r + 1).scale(parity * (r + 1) as f64);
        trace_at.push(resid(&lhs.sub(&rhs)));

        let lhs = a2.mul(tr).trace();
        let inner = chain.s_ext(r + 2).scale((r + 2) as f64).sub(&chain.s[1].mul(&chain.s_ext(r + 1)));
        let rhs = inner.scale(-parity);
        trace_a2t.push(resid(&lhs.sub(&rhs)));
    }
    let mut ch = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            ch = ch.max(resid(chain.t[n].at(i, j)));
        }
    }
    TraceIdentityResiduals { trace_t, trace_at, trace_a2t, cayley_hamilton: ch }
}

/// Largest deviation of `a` from self-adjointness with respect to the
/// diagonal screen metric `signs`: `max_ij |eps_j a_ji - eps_i a_ij|`.
pub fn self_adjointness_defect<S: Scalar>(a: &Mat<S>, signs: &[f64]) -> f64 {
    let n = a.rows();
    assert_eq!(signs.len(), n, "one sign per basis vector");
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let d = a.at(j, i).scale(signs[j]).sub(&a.at(i, j).scale(signs[i]));
            worst = worst.max(resid(&d));
        }
    }
    worst
}

fn resid<S: Scalar>(x: &S) -> f64 {
    x.resid_mag()
}

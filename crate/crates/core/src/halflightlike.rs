//! Quasi-orthonormal frames along a parametrized half-lightlike submanifold.
//!
//! Given an immersion `x : U -> R^(n+3)` into a flat semi-Euclidean ambient
//! space whose induced metric has a one-dimensional radical, this module
//! produces at each chart point the frame `{E, Z_1..Z_n, N, W}`:
//!
//! * `E` spans the radical of the induced metric, normalized so its first
//!   ambient component of appreciable size equals 1;
//! * `Z_i` is an orthonormal basis (signs tracked) of the screen
//!   distribution, by default the Euclidean-orthogonal complement of the
//!   radical direction in chart coordinates, or a user-supplied family;
//! * `W` is the unit screen transversal picked in the metric normal bundle,
//!   Euclidean-deprojected of `E` and sign-fixed so its last appreciable
//!   ambient component is positive;
//! * `N` is the lightlike transversal: null, orthogonal to screen and `W`,
//!   pairing to 1 with `E`.
//!
//! Every component is carried as an order-3 jet so that downstream
//! differentiation of the frame fields is a table lookup, not a new
//! geometric construction.

use std::sync::Arc;

use crate::error::GeomError;
use crate::expr::{coordinate_jets, Expr};
use crate::jets::{self, Jet3, JetTable};
use crate::linalg::{Mat, PIVOT_REL_TOL};
use crate::scalar::{RingScalar, Scalar};
use crate::semimetric::{
    euclid_inner, gram, gram_schmidt, inner, metric_orthocomplement, radical_chart_coeffs,
    screen_seed_chart, OrthoFrame,
};

/// Largest value-level relative residual tolerated when checking that a
/// screen override field is tangent to the submanifold.
pub const OVERRIDE_TANGENT_TOL: f64 = 1e-8;

/// A parametrized half-lightlike submanifold: `n + 3` component expressions
/// in `n + 1` parameters, a diagonal ambient signature, and an optional
/// explicit screen frame (ambient components, one expression list per
/// field).
#[derive(Debug, Clone)]
pub struct Immersion {
    pub params: Vec<String>,
    pub components: Vec<Expr>,
    pub eps: Vec<f64>,
    pub screen_override: Option<Vec<Vec<Expr>>>,
}

impl Immersion {
    /// `(ambient, m, n)`: ambient dimension, chart dimension, screen rank.
    pub fn dims(&self) -> Result<(usize, usize, usize), GeomError> {
        let ambient = self.components.len();
        let m = self.params.len();
        if self.eps.len() != ambient {
            return Err(GeomError::Dimension {
                context: "signature length vs ambient components",
                got: self.eps.len(),
                expected: ambient,
            });
        }
        if ambient < 4 || m + 2 != ambient {
            return Err(GeomError::Dimension {
                context: "chart dimension vs ambient (codimension-two submanifold)",
                got: m,
                expected: ambient.max(4) - 2,
            });
        }
        if ambient + 2 > jets::MAX_VARS {
            return Err(GeomError::Dimension {
                context: "ambient dimension beyond supported jet width",
                got: ambient,
                expected: jets::MAX_VARS - 2,
            });
        }
        for &e in &self.eps {
            if e != 1.0 && e != -1.0 {
                return Err(GeomError::Unsupported(format!(
                    "signature entries must be +1 or -1, got {e}"
                )));
            }
        }
        if let Some(ov) = &self.screen_override {
            if ov.len() != m - 1 {
                return Err(GeomError::OverrideCount { expected: m - 1, got: ov.len() });
            }
            for field in ov {
                if field.len() != ambient {
                    return Err(GeomError::Dimension {
                        context: "screen override ambient components",
                        got: field.len(),
                        expected: ambient,
                    });
                }
            }
        }
        Ok((ambient, m, m - 1))
    }

    /// Immersion components as jets over `table` at `point`.  The table may
    /// be wider than the parameter list; extra variables ride along as
    /// passive constants.
    pub fn component_jets(
        &self,
        table: &Arc<JetTable>,
        point: &[f64],
    ) -> Result<Vec<Jet3>, GeomError> {
        let args = coordinate_jets(table, point)?;
        self.components
            .iter()
            .map(|c| {
                c.eval_jet(&self.params, &args[..self.params.len()])
                    .map_err(|e| GeomError::Unsupported(format!("immersion component: {e}")))
            })
            .collect()
    }

    pub(crate) fn override_jets(
        &self,
        table: &Arc<JetTable>,
        point: &[f64],
    ) -> Result<Option<Vec<Vec<Jet3>>>, GeomError> {
        let Some(ov) = &self.screen_override else { return Ok(None) };
        let args = coordinate_jets(table, point)?;
        let mut fields = Vec::with_capacity(ov.len());
        for field in ov {
            let comps: Result<Vec<Jet3>, GeomError> = field
                .iter()
                .map(|c| {
                    c.eval_jet(&self.params, &args[..self.params.len()])
                        .map_err(|e| GeomError::Unsupported(format!("screen override: {e}")))
                })
                .collect();
            fields.push(comps?);
        }
        Ok(Some(fields))
    }

    /// Frame at a chart point, over a jet table in exactly the chart
    /// variables.
    pub fn frame_at(&self, point: &[f64]) -> Result<FramePoint, GeomError> {
        let (_, m, _) = self.dims()?;
        if point.len() != m {
            return Err(GeomError::Dimension {
                context: "chart point length",
                got: point.len(),
                expected: m,
            });
        }
        let table = jets::table(m)?;
        let x = self.component_jets(&table, point)?;
        let ov = self.override_jets(&table, point)?;
        frame_from_jets(&self.eps, &x, m, ov)
    }
}

/// Raw override screen fields, kept verbatim (pre-orthonormalization) so
/// stated properties of a specific screen choice can be checked against the
/// exact fields they were stated for.
#[derive(Debug, Clone)]
pub struct RawScreen {
    pub ambient: Vec<Vec<Jet3>>,
    pub chart: Vec<Vec<Jet3>>,
}

/// The frame at one point, every component an order-3 jet.
#[derive(Debug, Clone)]
pub struct FramePoint {
    pub eps: Vec<f64>,
    /// Chart dimension of the submanifold (`m`); tangents use only the
    /// first `active` variables of the jet table.
    pub active: usize,
    /// Screen rank (`m - 1`).
    pub n: usize,
    pub x: Vec<Jet3>,
    /// Coordinate tangents `d x / d u_k`.
    pub tangents: Vec<Vec<Jet3>>,
    pub e: Vec<Jet3>,
    pub e_chart: Vec<Jet3>,
    pub screen: Vec<Vec<Jet3>>,
    pub screen_chart: Vec<Vec<Jet3>>,
    pub screen_signs: Vec<f64>,
    pub raw_screen: Option<RawScreen>,
    pub w: Vec<Jet3>,
    /// `<W, W> = w_sign`, +1 or -1.
    pub w_sign: f64,
    pub nvec: Vec<Jet3>,
}

/// Build the frame from ambient component jets.  `active` is the chart
/// dimension; the jet table may carry extra variables (used by the parallel
/// extension machinery), which are differentiated through but never treated
/// as chart directions here.
pub fn frame_from_jets(
    eps: &[f64],
    x: &[Jet3],
    active: usize,
    screen_override: Option<Vec<Vec<Jet3>>>,
) -> Result<FramePoint, GeomError> {
    let ambient = x.len();
    if ambient != active + 2 {
        return Err(GeomError::Dimension {
            context: "ambient components vs chart dimension",
            got: ambient,
            expected: active + 2,
        });
    }
    let n = active - 1;

    let tangents: Vec<Vec<Jet3>> = (0..active)
        .map(|k| x.iter().map(|c| c.partial(k)).collect())
        .collect();

    // Radical direction from the null space of the induced Gram matrix.
    let g = gram(eps, &tangents);
    let c_raw = radical_chart_coeffs(&g)?;
    let mut e: Vec<Jet3> = (0..ambient)
        .map(|a| {
            let mut acc = x[0].zero_like();
            for k in 0..active {
                acc = acc.add(&c_raw[k].mul(&tangents[k][a]));
            }
            acc
        })
        .collect();
    let e_scale = {
        let top = e.iter().map(|c| c.mag()).fold(0.0_f64, f64::max);
        if top == 0.0 {
            return Err(GeomError::RadicalRank { found: 0, expected: 1 });
        }
        let a0 = e
            .iter()
            .position(|c| c.mag() > PIVOT_REL_TOL * top)
            .expect("some component reaches the maximum");
        Scalar::recip(&e[a0])?
    };
    for c in e.iter_mut() {
        *c = c.mul(&e_scale);
    }
    let e_chart: Vec<Jet3> = c_raw.iter().map(|c| c.mul(&e_scale)).collect();

    // Screen: override fields (checked tangent) or radical-complement seeds,
    // orthonormalized with chart coefficients transformed in lockstep by
    // running the elimination on concatenated ambient+chart vectors.
    let (seed_pairs, raw_screen) = match screen_override {
        Some(fields) => {
            if fields.len() != n {
                return Err(GeomError::OverrideCount { expected: n, got: fields.len() });
            }
            let jtj = Mat::from_fn(active, active, |i, j| euclid_inner(&tangents[i], &tangents[j]));
            let lu = crate::linalg::Lu::factor(&jtj, "override tangency projection")?;
            let mut pairs = Vec::with_capacity(n);
            let mut raw_chart = Vec::with_capacity(n);
            for (idx, v) in fields.iter().enumerate() {
                if v.len() != ambient {
                    return Err(GeomError::Dimension {
                        context: "override field ambient components",
                        got: v.len(),
                        expected: ambient,
                    });
                }
                let rhs: Vec<Jet3> =
                    (0..active).map(|k| euclid_inner(&tangents[k], v)).collect();
                let coeffs = lu.solve(&rhs);
                let mut resid2 = 0.0_f64;
                let mut scale2 = 1.0_f64;
                for a in 0..ambient {
                    let mut rec = v[a].neg();
                    for k in 0..active {
                        rec = rec.add(&coeffs[k].mul(&tangents[k][a]));
                    }
                    resid2 += rec.val() * rec.val();
                    scale2 += v[a].val() * v[a].val();
                }
                let rel = (resid2 / scale2).sqrt();
                if rel > OVERRIDE_TANGENT_TOL {
                    return Err(GeomError::OverrideNotTangent { index: idx, residual: rel });
                }
                let mut joint = v.clone();
                joint.extend(coeffs.iter().cloned());
                pairs.push(joint);
                raw_chart.push(coeffs);
            }
            (pairs, Some(RawScreen { ambient: fields, chart: raw_chart }))
        }
        None => {
            let seeds = screen_seed_chart(&e_chart)?;
            let pairs = seeds
                .into_iter()
                .map(|d| {
                    let mut joint: Vec<Jet3> = (0..ambient)
                        .map(|a| {
                            let mut acc = x[0].zero_like();
                            for k in 0..active {
                                acc = acc.add(&d[k].mul(&tangents[k][a]));
                            }
                            acc
                        })
                        .collect();
                    joint.extend(d);
                    joint
                })
                .collect();
            (pairs, None)
        }
    };
    let OrthoFrame { vecs: joint, signs: screen_signs } = gram_schmidt(
        |u: &[Jet3], v: &[Jet3]| inner(eps, &u[..ambient], &v[..ambient]),
        seed_pairs,
        "screen orthonormalization",
    )?;
    let mut screen = Vec::with_capacity(n);
    let mut screen_chart = Vec::with_capacity(n);
    for mut z in joint {
        let chart = z.split_off(ambient);
        screen.push(z);
        screen_chart.push(chart);
    }

    // Screen transversal: in the metric normal bundle, Euclidean-orthogonal
    // to E, non-null, unit, with its last appreciable component positive.
    let normal_basis = metric_orthocomplement(eps, &tangents)?;
    if normal_basis.len() != 2 {
        return Err(GeomError::Dimension {
            context: "metric normal bundle rank",
            got: normal_basis.len(),
            expected: 2,
        });
    }
    let ee = euclid_inner(&e, &e);
    let mut best: Option<(f64, Vec<Jet3>)> = None;
    for v in &normal_basis {
        let coef = euclid_inner(v, &e).div(&ee).map_err(GeomError::from)?;
        let w: Vec<Jet3> = (0..ambient).map(|a| v[a].sub(&coef.mul(&e[a]))).collect();
        let size = euclid_inner(&w, &w).val();
        if best.as_ref().map_or(true, |(s, _)| size > *s) {
            best = Some((size, w));
        }
    }
    let (euclid_size, w_raw) = best.expect("normal bundle rank checked");
    let norm2 = inner(eps, &w_raw, &w_raw);
    if norm2.mag() < PIVOT_REL_TOL * euclid_size.max(1.0) {
        return Err(GeomError::DegenerateTransversal { mag: norm2.mag() });
    }
    let w_sign = norm2.val().signum();
    let inv_len = Scalar::recip(&Scalar::sqrt(&norm2.scale(w_sign))?)?;
    let mut w: Vec<Jet3> = w_raw.iter().map(|c| c.mul(&inv_len)).collect();
    let top = w.iter().map(|c| c.mag()).fold(0.0_f64, f64::max);
    let last = w
        .iter()
        .rposition(|c| c.mag() > PIVOT_REL_TOL * top)
        .expect("unit vector has an appreciable component");
    if w[last].val() < 0.0 {
        for c in w.iter_mut() {
            *c = c.neg();
        }
    }

    // Lightlike transversal: N0 solves <N0,E> = 1, <N0,Z_i> = 0, <N0,W> = 0
    // with the Euclidean pairing against E as gauge row, then the null shift
    // N = N0 - (<N0,N0>/2) E.
    let mut rows: Vec<Vec<Jet3>> = Vec::with_capacity(ambient);
    let metric_row =
        |v: &[Jet3]| -> Vec<Jet3> { (0..ambient).map(|a| v[a].scale(eps[a])).collect() };
    rows.push(metric_row(&e));
    for z in &screen {
        rows.push(metric_row(z));
    }
    rows.push(metric_row(&w));
    rows.push(e.clone());
    let a = Mat::from_fn(ambient, ambient, |i, j| rows[i][j].clone());
    let lu = crate::linalg::Lu::factor(&a, "lightlike transversal system")?;
    let mut rhs = vec![x[0].zero_like(); ambient];
    rhs[0] = x[0].constant_like(1.0);
    let n0 = lu.solve(&rhs);
    let lambda = inner(eps, &n0, &n0).scale(-0.5);
    let nvec: Vec<Jet3> = (0..ambient).map(|a| n0[a].add(&lambda.mul(&e[a]))).collect();

    Ok(FramePoint {
        eps: eps.to_vec(),
        active,
        n,
        x: x.to_vec(),
        tangents,
        e,
        e_chart,
        screen,
        screen_chart,
        screen_signs,
        raw_screen,
        w,
        w_sign,
        nvec,
    })
}

impl FramePoint {
    /// Value-level residuals of every frame pairing, labeled by what the
    /// pairing should be.  All must vanish for a valid quasi-orthonormal
    /// frame.
    pub fn gram_residuals(&self) -> Vec<(String, f64)> {
        let eps = &self.eps;
        let mut out = Vec::new();
        let pair = |u: &[Jet3], v: &[Jet3]| inner(eps, u, v).val();
        out.push(("<E,E> = 0".to_string(), pair(&self.e, &self.e).abs()));
        out.push(("<E,W> = 0".to_string(), pair(&self.e, &self.w).abs()));
        out.push(("<E,N> = 1".to_string(), (pair(&self.e, &self.nvec) - 1.0).abs()));
        out.push(("<N,N> = 0".to_string(), pair(&self.nvec, &self.nvec).abs()));
        out.push(("<N,W> = 0".to_string(), pair(&self.nvec, &self.w).abs()));
        out.push((
            "<W,W> = sign".to_string(),
            (pair(&self.w, &self.w) - self.w_sign).abs(),
        ));
        for (i, z) in self.screen.iter().enumerate() {
            out.push((format!("<E,Z{}> = 0", i + 1), pair(&self.e, z).abs()));
            out.push((format!("<N,Z{}> = 0", i + 1), pair(&self.nvec, z).abs()));
            out.push((format!("<W,Z{}> = 0", i + 1), pair(&self.w, z).abs()));
            for (j, zj) in self.screen.iter().enumerate() {
                let want = if i == j { self.screen_signs[i] } else { 0.0 };
                out.push((
                    format!("<Z{},Z{}> = {}", i + 1, j + 1, want),
                    (pair(z, zj) - want).abs(),
                ));
            }
        }
        out
    }

    /// Directional derivative of an ambient jet field along a tangent given
    /// by chart coefficients: `sum_k c_k d(field)/d u_k`.
    pub fn chart_derivative(&self, chart_coeffs: &[Jet3], field: &[Jet3]) -> Vec<Jet3> {
        field
            .iter()
            .map(|comp| {
                let mut acc = comp.zero_like();
                for (k, c) in chart_coeffs.iter().enumerate() {
                    acc = acc.add(&c.mul(&comp.partial(k)));
                }
                acc
            })
            .collect()
    }
}

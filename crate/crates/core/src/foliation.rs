//! Screen foliation induced by a unit normal section of the frame bundle.
//!
//! A section `L = a E + b N + c W` with `<L, L> = 2ab + eps_W c^2 > 0` is
//! normalized to a unit spacelike field `What`, and the leaves of the screen
//! distribution are studied through the shape operator of `What`, the Newton
//! transformations of that operator, and the higher-order mean curvatures
//! they encode.
//!
//! Transversal derivatives are taken honestly.  The immersion is thickened
//! to `x + s N + t W` over two extra jet variables, the frame fields ride
//! along with unchanged ambient components, and every directional derivative
//! resolves vector fields against the coordinate frame of the thickened map.
//! Resolving against the base chart alone drops the transversal variation of
//! that coordinate frame, and the second-order balance checks in this module
//! stop holding; the two extra variables carry real information even though
//! the frame fields themselves do not depend on them.

use std::sync::Arc;

use crate::error::GeomError;
use crate::expr::{self, coordinate_jets, Expr, ParseError};
use crate::forms::{forms_at, Forms};
use crate::halflightlike::{frame_from_jets, FramePoint, Immersion};
use crate::jets::{self, Jet3, JetTable};
use crate::linalg::{Lu, Mat};
use crate::newton::{newton_chain, self_adjointness_defect, NewtonChain};
use crate::semimetric::inner;

/// Coefficients of the section `L = a E + b N + c W`, each an expression in
/// the chart parameters.
#[derive(Debug, Clone)]
pub struct NormalGauge {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
}

impl NormalGauge {
    pub fn parse(a: &str, b: &str, c: &str) -> Result<NormalGauge, ParseError> {
        Ok(NormalGauge {
            a: expr::parse(a)?,
            b: expr::parse(b)?,
            c: expr::parse(c)?,
        })
    }

    /// The default section `E + N / 2`, which is unit without rescaling.
    pub fn standard() -> NormalGauge {
        Self::parse("1", "0.5", "0").expect("fixed literals parse")
    }
}

/// Frame, forms, and the thickened coordinate system at one chart point.
///
/// `x_ext = x + s N + t W` over a jet table in the chart variables plus
/// `(s, t)`; its coordinate vector fields span the ambient space near the
/// point, so tube coordinates of any ambient field are well defined and can
/// be differentiated in all directions.
pub struct TubePoint {
    pub point: Vec<f64>,
    pub table: Arc<JetTable>,
    /// Coordinate jets of the thickened chart, base point `(point, 0, 0)`.
    pub args: Vec<Jet3>,
    pub frame: FramePoint,
    pub forms: Forms,
    pub x_ext: Vec<Jet3>,
    ext_lu: Lu<Jet3>,
    frame_lu: Lu<Jet3>,
}

/// Build the thickened frame data of an immersion at a chart point.
pub fn tube_at(im: &Immersion, point: &[f64]) -> Result<TubePoint, GeomError> {
    let (ambient, m, _n) = im.dims()?;
    if point.len() != m {
        return Err(GeomError::Dimension {
            context: "tube chart point",
            got: point.len(),
            expected: m,
        });
    }
    let table = jets::table(m + 2)?;
    let mut full = point.to_vec();
    full.extend_from_slice(&[0.0, 0.0]);
    let args = coordinate_jets(&table, &full)?;
    let x = im.component_jets(&table, &full)?;
    let ov = im.override_jets(&table, &full)?;
    let frame = frame_from_jets(&im.eps, &x, m, ov)?;
    let forms = forms_at(&frame)?;
    let s = &args[m];
    let t = &args[m + 1];
    let x_ext: Vec<Jet3> = (0..ambient)
        .map(|i| &(&frame.x[i] + &(s * &frame.nvec[i])) + &(t * &frame.w[i]))
        .collect();
    let ext_mat = Mat::from_fn(ambient, ambient, |i, k| x_ext[i].partial(k));
    let ext_lu = Lu::factor(&ext_mat, "tube coordinate frame")?;
    let frame_mat = Mat::from_fn(ambient, ambient, |i, c| {
        if c == 0 {
            frame.e[i].clone()
        } else if c <= frame.n {
            frame.screen[c - 1][i].clone()
        } else if c == frame.n + 1 {
            frame.nvec[i].clone()
        } else {
            frame.w[i].clone()
        }
    });
    let frame_lu = Lu::factor(&frame_mat, "frame coefficient resolution")?;
    Ok(TubePoint {
        point: point.to_vec(),
        table,
        args,
        frame,
        forms,
        x_ext,
        ext_lu,
        frame_lu,
    })
}

impl TubePoint {
    /// Coefficients of an ambient field in the thickened coordinate frame.
    pub fn tube_coords(&self, v: &[Jet3]) -> Vec<Jet3> {
        self.ext_lu.solve(v)
    }

    /// Coefficients of an ambient field in the frame `E, Z_1..Z_n, N, W`.
    pub fn frame_coords(&self, v: &[Jet3]) -> Vec<Jet3> {
        self.frame_lu.solve(v)
    }

    /// Flat ambient derivative of a field along a direction given by tube
    /// coordinates.  Coordinates shorter than the table are padded with
    /// zero directions.
    pub fn dir_derivative(&self, coords: &[Jet3], field: &[Jet3]) -> Vec<Jet3> {
        field
            .iter()
            .map(|comp| {
                let mut acc = comp.zero_like();
                for (k, c) in coords.iter().enumerate() {
                    acc = &acc + &(c * &comp.partial(k));
                }
                acc
            })
            .collect()
    }

    /// Derivative of a scalar jet along a direction given by tube
    /// coordinates.
    pub fn dir_scalar(&self, coords: &[Jet3], f: &Jet3) -> Jet3 {
        let mut acc = f.zero_like();
        for (k, c) in coords.iter().enumerate() {
            acc = &acc + &(c * &f.partial(k));
        }
        acc
    }

    /// Ambient divergence of a field over the thickened chart.
    pub fn ambient_div(&self, field: &[Jet3]) -> Jet3 {
        let vars = self.table.vars();
        let mut acc = field[0].zero_like();
        for k in 0..vars {
            let dv: Vec<Jet3> = field.iter().map(|c| c.partial(k)).collect();
            acc = &acc + &self.ext_lu.solve(&dv)[k];
        }
        acc
    }

    /// Leaf divergence of a screen-valued field: the signed trace of its
    /// ambient derivative paired back against the screen frame.
    pub fn screen_div(&self, field: &[Jet3]) -> Jet3 {
        let mut acc = field[0].zero_like();
        for x in 0..self.frame.n {
            let coords = self.tube_coords(&self.frame.screen[x]);
            let d = self.dir_derivative(&coords, field);
            let paired = inner(&self.frame.eps, &d, &self.frame.screen[x]);
            acc = &acc + &paired.scale(self.frame.screen_signs[x]);
        }
        acc
    }

    /// Ambient pairing with the immersion signature.
    pub fn pair(&self, u: &[Jet3], v: &[Jet3]) -> Jet3 {
        inner(&self.frame.eps, u, v)
    }

    /// Value of the derivative of a scalar jet along screen field `x`.
    fn screen_dir_value(&self, x: usize, f: &Jet3) -> f64 {
        let mut acc = 0.0;
        for (l, c) in self.frame.screen_chart[x].iter().enumerate() {
            acc += c.value() * f.grad(l);
        }
        acc
    }

    /// Value of the induced-connection coefficient: the `Z_(k+1)` component
    /// of the derivative of `Z_(i+1)` along `Z_(x+1)`.
    fn gamma(&self, x: usize, k: usize, i: usize) -> f64 {
        self.forms.nabla[x + 1].at(k + 1, i + 1).value()
    }
}

/// A unit normal section, its shape operator field, and the Newton chain of
/// that operator at one tube point.
pub struct Foliation {
    pub n: usize,
    pub a: Jet3,
    pub b: Jet3,
    pub c: Jet3,
    /// `<L, L> = 2ab + eps_W c^2`.
    pub norm2: Jet3,
    /// `sqrt(<L, L>)`, the factor that makes `What` unit.
    pub scale: Jet3,
    /// Ambient components of the unit section.
    pub what: Vec<Jet3>,
    /// Tube coordinates of `What`.
    pub what_coords: Vec<Jet3>,
    /// Shape operator on the screen: column `j` holds the screen components
    /// of minus the ambient derivative of `What` along `Z_(j+1)`.
    pub shape: Mat<Jet3>,
    pub chain: NewtonChain<Jet3>,
    /// Ambient derivative of `What` along itself.
    pub mu: Vec<Jet3>,
    /// Screen components of `mu`.
    pub mu_screen: Vec<Jet3>,
}

/// Assemble the foliation data for a gauge at a tube point.
pub fn foliation_at(
    tp: &TubePoint,
    params: &[String],
    gauge: &NormalGauge,
) -> Result<Foliation, GeomError> {
    let n = tp.frame.n;
    let ambient = tp.frame.x.len();
    let chart_args = &tp.args[..params.len()];
    let eval = |e: &Expr, which: &str| {
        e.eval_jet(params, chart_args)
            .map_err(|err| GeomError::Unsupported(format!("gauge coefficient {which}: {err}")))
    };
    let a = eval(&gauge.a, "a")?;
    let b = eval(&gauge.b, "b")?;
    let c = eval(&gauge.c, "c")?;
    let norm2 = &(&a * &b).scale(2.0) + &(&c * &c).scale(tp.frame.w_sign);
    if !(norm2.value() > 0.0) {
        return Err(GeomError::NullNormalSection {
            value: norm2.value(),
        });
    }
    let scale = norm2.sqrt()?;
    let inv = scale.recip()?;
    let what: Vec<Jet3> = (0..ambient)
        .map(|i| {
            let l = &(&(&a * &tp.frame.e[i]) + &(&b * &tp.frame.nvec[i])) + &(&c * &tp.frame.w[i]);
            &l * &inv
        })
        .collect();
    let what_coords = tp.tube_coords(&what);
    let mut shape = Mat::from_fn(n, n, |_, _| what[0].zero_like());
    for j in 0..n {
        let zc = tp.tube_coords(&tp.frame.screen[j]);
        let dw = tp.dir_derivative(&zc, &what);
        let co = tp.frame_coords(&dw);
        for k in 0..n {
            *shape.at_mut(k, j) = -&co[k + 1];
        }
    }
    let chain = newton_chain(&shape);
    let mu = tp.dir_derivative(&what_coords, &what);
    let mco = tp.frame_coords(&mu);
    let mu_screen = mco[1..=n].to_vec();
    Ok(Foliation {
        n,
        a,
        b,
        c,
        norm2,
        scale,
        what,
        what_coords,
        shape,
        chain,
        mu,
        mu_screen,
    })
}

impl Foliation {
    /// First-order sanity of the assembled section, as labeled residuals.
    pub fn point_residuals(&self, tp: &TubePoint) -> Vec<(String, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        let unit = (tp.pair(&self.what, &self.what).value() - 1.0).abs();
        out.push(("gbar(What, What) = 1".to_string(), unit));
        let mut ortho = 0.0f64;
        for z in &tp.frame.screen {
            ortho = ortho.max(tp.pair(&self.what, z).value().abs());
        }
        out.push(("gbar(What, Z_i) = 0".to_string(), ortho));
        let inv = 1.0 / self.scale.value();
        let (av, bv, cv) = (self.a.value(), self.b.value(), self.c.value());
        let mut route = 0.0f64;
        for k in 0..n {
            for j in 0..n {
                let combo = inv
                    * (av * tp.forms.a_star.at(k + 1, j + 1).value()
                        + bv * tp.forms.a_n.at(k + 1, j + 1).value()
                        + cv * tp.forms.a_w.at(k + 1, j + 1).value());
                route = route.max((self.shape.at(k, j).value() - combo).abs());
            }
        }
        out.push((
            "A_What = (a A*_E + b A_N + c A_W) / |L| on the screen".to_string(),
            route,
        ));
        let vals = Mat::from_fn(n, n, |k, j| self.shape.at(k, j).value());
        out.push((
            "g(A_What X, Y) = g(X, A_What Y)".to_string(),
            self_adjointness_defect(&vals, &tp.frame.screen_signs),
        ));
        out.push((
            "gbar(nabla_What What, What) = 0".to_string(),
            tp.pair(&self.mu, &self.what).value().abs(),
        ));
        out
    }

    /// Worst asymmetry of `g((nabla'_X A_What) Y, Z)` over screen triples,
    /// at the base point.
    pub fn lemma1_defect(&self, tp: &TubePoint) -> f64 {
        let n = self.n;
        let signs = &tp.frame.screen_signs;
        let mut worst = 0.0f64;
        for x in 0..n {
            let mut m = vec![vec![0.0f64; n]; n];
            for k in 0..n {
                for j in 0..n {
                    let mut v = tp.screen_dir_value(x, self.shape.at(k, j));
                    for i in 0..n {
                        v += tp.gamma(x, k, i) * self.shape.at(i, j).value();
                        v -= self.shape.at(k, i).value() * tp.gamma(x, i, j);
                    }
                    m[k][j] = v;
                }
            }
            for k in 0..n {
                for j in 0..k {
                    worst = worst.max((signs[k] * m[k][j] - signs[j] * m[j][k]).abs());
                }
            }
        }
        worst
    }

    /// Screen components of the leaf divergence of the Newton transformation
    /// `T_r`, at the base point.
    pub fn div_t_values(&self, tp: &TubePoint, r: usize) -> Vec<f64> {
        let n = self.n;
        let t = &self.chain.t[r];
        let signs = &tp.frame.screen_signs;
        let mut out = vec![0.0f64; n];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for x in 0..n {
                let mut v = tp.screen_dir_value(x, t.at(k, x));
                for i in 0..n {
                    v += tp.gamma(x, k, i) * t.at(i, x).value();
                    v -= t.at(k, i).value() * tp.gamma(x, i, x);
                }
                acc += signs[x] * v;
            }
            *slot = acc;
        }
        out
    }

    /// Flat-ambient divergence checks of the Newton chain: each `div T_r`
    /// vanishes, and consecutive divergences satisfy the shape-operator
    /// recursion.
    pub fn lemma2_residuals(&self, tp: &TubePoint) -> Vec<(String, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        let mut prev = self.div_t_values(tp, 0);
        for r in 1..=n {
            let cur = self.div_t_values(tp, r);
            let flat = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            out.push((
                format!("div T_{r} = 0 for a flat ambient metric"),
                flat,
            ));
            let mut rec = 0.0f64;
            for k in 0..n {
                let mut hit = 0.0;
                for i in 0..n {
                    hit += self.shape.at(k, i).value() * prev[i];
                }
                rec = rec.max((cur[k] - hit).abs());
            }
            out.push((
                format!("div T_{r} = A_What div T_{} plus flat curvature terms", r - 1),
                rec,
            ));
            prev = cur;
        }
        out
    }

    /// Second-order balance for the screen Hessian of `What` along itself,
    /// evaluated with screen coordinate fields made parallel at the base
    /// point to first order.  With `parallel_correction` off the raw screen
    /// fields are used instead, and the balance acquires connection terms
    /// that do not cancel on a twisting frame.
    pub fn lemma3_defect(&self, tp: &TubePoint, parallel_correction: bool) -> f64 {
        let n = self.n;
        let m = tp.frame.active;
        let ambient = tp.frame.x.len();
        let mut fields: Vec<Vec<Jet3>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut fj = tp.frame.screen[j].clone();
            if parallel_correction {
                for k in 0..m {
                    let dz: Vec<Jet3> =
                        tp.frame.screen[j].iter().map(|c| c.partial(k)).collect();
                    let co = tp.frame_coords(&dz);
                    let mut corr = vec![0.0f64; ambient];
                    for i in 0..n {
                        for (al, slot) in corr.iter_mut().enumerate() {
                            *slot += co[i + 1].value() * tp.frame.screen[i][al].value();
                        }
                    }
                    let du = &tp.args[k] + &Jet3::constant(&tp.table, -tp.point[k]);
                    for (al, slot) in fj.iter_mut().enumerate() {
                        *slot = &*slot - &(&du * &Jet3::constant(&tp.table, corr[al]));
                    }
                }
            }
            fields.push(fj);
        }
        let a2 = self.shape.mul(&self.shape);
        let mu_z: Vec<f64> = (0..n)
            .map(|i| tp.pair(&self.mu, &tp.frame.screen[i]).value())
            .collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            let pcoords = tp.frame_coords(&fields[i]);
            let mut applied = Vec::with_capacity(n);
            for k in 0..n {
                let mut acc = self.what[0].zero_like();
                for l in 0..n {
                    acc = &acc + &(self.shape.at(k, l) * &pcoords[l + 1]);
                }
                applied.push(acc);
            }
            let g: Vec<Jet3> = (0..ambient)
                .map(|al| {
                    let mut acc = self.what[0].zero_like();
                    for (k, coeff) in applied.iter().enumerate() {
                        acc = &acc + &(coeff * &tp.frame.screen[k][al]);
                    }
                    acc
                })
                .collect();
            let dg = tp.dir_derivative(&self.what_coords, &g);
            let zc = tp.tube_coords(&tp.frame.screen[i]);
            let dmu = tp.dir_derivative(&zc, &self.mu);
            for j in 0..n {
                let lhs = tp.pair(&dmu, &tp.frame.screen[j]).value();
                let sq = tp.frame.screen_signs[j] * a2.at(j, i).value();
                let term3 = tp.pair(&dg, &tp.frame.screen[j]).value();
                let r = (lhs - sq + term3 - mu_z[i] * mu_z[j]).abs();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Divergence identities for the Newton chain at one `r`, as labeled
    /// residuals.  The `r = 0` call also emits the mean-curvature row
    /// `S_1 = -div(What)`.
    pub fn theorem_rows(&self, tp: &TubePoint, r: usize) -> Vec<(String, f64)> {
        assert!(r <= self.n, "Newton transformation order out of range");
        let n = self.n;
        let ambient = tp.frame.x.len();
        let sgn = if (r + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let s1 = self.chain.s[1].value();
        let sr1 = self.chain.s_ext(r + 1);
        let sr2 = self.chain.s_ext(r + 2);
        let what_s = tp.dir_scalar(&self.what_coords, &sr1).value();
        let mut rows = Vec::new();
        if r == 0 {
            let divw = tp.ambient_div(&self.what).value();
            rows.push(("S_1 = -div(What)".to_string(), (s1 + divw).abs()));
        }
        let sv: Vec<Jet3> = self.what.iter().map(|c| c * &sr1).collect();
        let divsv = tp.ambient_div(&sv).value();
        rows.push((
            format!(
                "div(S_{} What) = What(S_{}) - S_1 S_{}",
                r + 1,
                r + 1,
                r + 1
            ),
            (divsv - (what_s - s1 * sr1.value())).abs(),
        ));
        let t = &self.chain.t[r];
        let tmu: Vec<Jet3> = (0..n)
            .map(|k| {
                let mut acc = self.what[0].zero_like();
                for l in 0..n {
                    acc = &acc + &(t.at(k, l) * &self.mu_screen[l]);
                }
                acc
            })
            .collect();
        let g: Vec<Jet3> = (0..ambient)
            .map(|al| {
                let mut acc = self.what[0].zero_like();
                for (k, coeff) in tmu.iter().enumerate() {
                    acc = &acc + &(coeff * &tp.frame.screen[k][al]);
                }
                acc
            })
            .collect();
        let divt = self.div_t_values(tp, r);
        let mut gdiv = 0.0;
        let mut mudot = 0.0;
        for k in 0..n {
            gdiv += tp.frame.screen_signs[k] * divt[k] * self.mu_screen[k].value();
            mudot += tp.frame.screen_signs[k] * self.mu_screen[k].value() * tmu[k].value();
        }
        let batch = sgn * (what_s + (-s1 * sr1.value() + (r as f64 + 2.0) * sr2.value()));
        let div_g = tp.ambient_div(&g).value();
        rows.push((
            format!(
                "div(T_{r} mu) = gbar(div T_{r}, mu) + (-1)^{} (What(S_{}) - S_1 S_{} + {} S_{})",
                r + 1,
                r + 1,
                r + 1,
                r + 2,
                r + 2
            ),
            (div_g - (gdiv + batch)).abs(),
        ));
        let wsgn = if r % 2 == 0 { 1.0 } else { -1.0 };
        let g2: Vec<Jet3> = (0..ambient)
            .map(|al| &g[al] + &(&sv[al]).scale(wsgn))
            .collect();
        let div_g2 = tp.ambient_div(&g2).value();
        rows.push((
            format!(
                "div(T_{r} mu + (-1)^{r} S_{} What) = gbar(div T_{r}, mu) + (-1)^{} {} S_{}",
                r + 1,
                r + 1,
                r + 2,
                r + 2
            ),
            (div_g2 - (gdiv + sgn * (r as f64 + 2.0) * sr2.value())).abs(),
        ));
        let divp = tp.screen_div(&g).value();
        rows.push((
            format!(
                "leaf div(T_{r} mu) = gbar(div T_{r}, mu) + (-1)^{} (What(S_{}) - S_1 S_{} + {} S_{}) + gbar(mu, T_{r} mu)",
                r + 1,
                r + 1,
                r + 1,
                r + 2,
                r + 2
            ),
            (divp - (gdiv + batch + mudot)).abs(),
        ));
        rows
    }
}

/// Central-difference oracle for `What(S_(r+1))`: rebuilds the pipeline at
/// chart points shifted along the chart part of `What` and evaluates the
/// symmetric function off the base leaf through the jet offsets of the
/// transversal part.
pub fn what_derivative_fd(
    im: &Immersion,
    gauge: &NormalGauge,
    point: &[f64],
    r: usize,
    h: f64,
) -> Result<f64, GeomError> {
    let tp = tube_at(im, point)?;
    let fol = foliation_at(&tp, &im.params, gauge)?;
    let m = tp.frame.active;
    let wc: Vec<f64> = fol.what_coords.iter().map(|c| c.value()).collect();
    let mut vals = [0.0f64; 2];
    for (slot, sgn) in vals.iter_mut().zip([1.0f64, -1.0]) {
        let shifted: Vec<f64> = (0..m).map(|k| point[k] + sgn * h * wc[k]).collect();
        let tps = tube_at(im, &shifted)?;
        let fols = foliation_at(&tps, &im.params, gauge)?;
        let sj = fols.chain.s_ext(r + 1);
        let mut offs = vec![0.0f64; m + 2];
        offs[m] = sgn * h * wc[m];
        offs[m + 1] = sgn * h * wc[m + 1];
        *slot = sj.eval_offset(&offs);
    }
    Ok((vals[0] - vals[1]) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn immersion(comps: [&str; 5], ov: Option<Vec<[&str; 5]>>) -> Immersion {
        Immersion {
            params: vec!["p1".into(), "p2".into(), "p3".into()],
            components: comps.iter().map(|s| expr::parse(s).unwrap()).collect(),
            eps: vec![-1.0, 1.0, 1.0, 1.0, 1.0],
            screen_override: ov.map(|fields| {
                fields
                    .iter()
                    .map(|f| f.iter().map(|s| expr::parse(s).unwrap()).collect())
                    .collect()
            }),
        }
    }

    fn cylinder() -> Immersion {
        immersion(
            [
                "p1",
                "sin(p2) * sin(p3)",
                "p1",
                "cos(p2) * sin(p3)",
                "cos(p3)",
            ],
            None,
        )
    }

    fn build(im: &Immersion, gauge: &NormalGauge, point: &[f64]) -> (TubePoint, Foliation) {
        let tp = tube_at(im, point).unwrap();
        let fol = foliation_at(&tp, &im.params, gauge).unwrap();
        (tp, fol)
    }

    fn assert_rows_below(rows: &[(String, f64)], tol: f64) {
        for (label, r) in rows {
            assert!(*r < tol, "{label}: residual {r:.3e} above {tol:.1e}");
        }
    }

    #[test]
    fn geodesic_fixture_is_exactly_flat() {
        let im = immersion(["p1", "p1", "p2", "p3", "0"], None);
        let gauge = NormalGauge::parse("1", "0.5", "1").unwrap();
        let (tp, fol) = build(&im, &gauge, &[0.2, 0.4, -0.3]);
        assert_rows_below(&fol.point_residuals(&tp), 1e-12);
        assert!(fol.lemma1_defect(&tp) < 1e-12);
        assert_rows_below(&fol.lemma2_residuals(&tp), 1e-12);
        assert!(fol.lemma3_defect(&tp, true) < 1e-12);
        assert!(fol.lemma3_defect(&tp, false) < 1e-12);
        for r in 0..=2 {
            assert_rows_below(&fol.theorem_rows(&tp, r), 1e-12);
        }
        for k in 0..fol.n {
            for j in 0..fol.n {
                assert!(fol.shape.at(k, j).value().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cylinder_matches_frozen_hand_values() {
        let im = cylinder();
        let gauge = NormalGauge::parse("1", "0.5", "1").unwrap();
        let (tp, fol) = build(&im, &gauge, &[0.3, 1.0, 0.7]);
        let root2 = 2.0f64.sqrt();
        for k in 0..2 {
            for j in 0..2 {
                let want = if k == j { -1.0 / root2 } else { 0.0 };
                assert!(
                    (fol.shape.at(k, j).value() - want).abs() < 1e-10,
                    "shape[{k}][{j}]"
                );
            }
        }
        assert!((fol.chain.s[1].value() + root2).abs() < 1e-10);
        assert!((fol.chain.s[2].value() - 0.5).abs() < 1e-10);
        for c in &fol.mu_screen {
            assert!(c.value().abs() < 1e-10);
        }
        let ws1 = tp.dir_scalar(&fol.what_coords, &fol.chain.s[1]).value();
        assert!((ws1 - 1.0).abs() < 1e-9, "What(S_1) = {ws1}");
        let ws2 = tp.dir_scalar(&fol.what_coords, &fol.chain.s[2]).value();
        assert!((ws2 + 1.0 / root2).abs() < 1e-9, "What(S_2) = {ws2}");
        assert_rows_below(&fol.point_residuals(&tp), 1e-9);
        assert!(fol.lemma1_defect(&tp) < 1e-9);
        assert_rows_below(&fol.lemma2_residuals(&tp), 1e-8);
        assert!(fol.lemma3_defect(&tp, true) < 1e-8);
        for r in 0..=2 {
            assert_rows_below(&fol.theorem_rows(&tp, r), 1e-8);
        }
    }

    #[test]
    fn standard_gauge_on_cylinder_has_zero_shape() {
        let im = cylinder();
        let (tp, fol) = build(&im, &NormalGauge::standard(), &[0.3, 1.0, 0.7]);
        for k in 0..fol.n {
            for j in 0..fol.n {
                assert!(fol.shape.at(k, j).value().abs() < 1e-12);
            }
        }
        assert!(fol.chain.s[1].value().abs() < 1e-12);
        assert_rows_below(&fol.point_residuals(&tp), 1e-10);
    }

    #[test]
    fn twisted_screen_override_separates_lemma3_routes() {
        let im = immersion(
            [
                "p1",
                "sin(p2) * sin(p3)",
                "p1",
                "cos(p2) * sin(p3)",
                "cos(p3)",
            ],
            Some(vec![
                [
                    "0",
                    "cos(p1) * cos(p2) + sin(p1) * sin(p2) * cos(p3)",
                    "0",
                    "-cos(p1) * sin(p2) + sin(p1) * cos(p2) * cos(p3)",
                    "-sin(p1) * sin(p3)",
                ],
                [
                    "0",
                    "-sin(p1) * cos(p2) + cos(p1) * sin(p2) * cos(p3)",
                    "0",
                    "sin(p1) * sin(p2) + cos(p1) * cos(p2) * cos(p3)",
                    "-cos(p1) * sin(p3)",
                ],
            ]),
        );
        let gauge = NormalGauge::parse("1", "0.5", "1").unwrap();
        let (tp, fol) = build(&im, &gauge, &[0.4, 1.0, 0.7]);
        let corrected = fol.lemma3_defect(&tp, true);
        let raw = fol.lemma3_defect(&tp, false);
        assert!(corrected < 1e-6, "corrected route residual {corrected:.3e}");
        assert!(raw > 1e-3, "raw route should fail, got {raw:.3e}");
        assert!(fol.lemma1_defect(&tp) < 1e-8);
        for r in 0..=1 {
            assert_rows_below(&fol.theorem_rows(&tp, r), 1e-7);
        }
    }

    #[test]
    fn ellipsoid_general_shape_passes_identities() {
        let im = immersion(
            [
                "p1",
                "sin(p2) * sin(p3)",
                "p1",
                "0.5 * cos(p2) * sin(p3)",
                "cos(p3)",
            ],
            None,
        );
        let gauge = NormalGauge::parse("1", "0.5", "1").unwrap();
        let (tp, fol) = build(&im, &gauge, &[0.3, 0.9, 0.8]);
        let s1 = fol.chain.s[1].value();
        let s2 = fol.chain.s[2].value();
        assert!(
            s1 * s1 - 4.0 * s2 > 1e-4,
            "shape should have distinct eigenvalues"
        );
        assert!(fol.lemma1_defect(&tp) < 1e-8);
        assert_rows_below(&fol.lemma2_residuals(&tp), 1e-7);
        assert!(fol.lemma3_defect(&tp, true) < 1e-6);
        for r in 0..=2 {
            assert_rows_below(&fol.theorem_rows(&tp, r), 1e-6);
        }
        assert_rows_below(&fol.point_residuals(&tp), 1e-8);
    }

    #[test]
    fn cone_mixed_operators_agree_between_routes() {
        let im = immersion(
            [
                "p1",
                "p1 * sin(p3) * sin(p2)",
                "p1 * sin(p3) * cos(p2)",
                "p1 * cos(p3)",
                "0",
            ],
            None,
        );
        let gauge = NormalGauge::parse("1", "0.5", "1").unwrap();
        let (tp, fol) = build(&im, &gauge, &[1.3, 0.8, 0.6]);
        assert_rows_below(&fol.point_residuals(&tp), 1e-8);
        let mut top = 0.0f64;
        for k in 0..fol.n {
            for j in 0..fol.n {
                top = top.max(fol.shape.at(k, j).value().abs());
            }
        }
        assert!(top > 0.05, "cone shape should be nontrivial, max {top:.3e}");
        for r in 0..=2 {
            assert_rows_below(&fol.theorem_rows(&tp, r), 1e-6);
        }
        assert_rows_below(&fol.lemma2_residuals(&tp), 1e-7);
    }

    #[test]
    fn gauge_rescaling_is_projective() {
        let im = cylinder();
        let g1 = NormalGauge::parse("1", "0.5", "1").unwrap();
        let g2 = NormalGauge::parse("2", "1", "2").unwrap();
        let point = [0.3, 1.0, 0.7];
        let (_, f1) = build(&im, &g1, &point);
        let (_, f2) = build(&im, &g2, &point);
        for (u, v) in f1.what.iter().zip(&f2.what) {
            assert!((u.value() - v.value()).abs() < 1e-12);
        }
        for k in 0..f1.n {
            for j in 0..f1.n {
                assert!(
                    (f1.shape.at(k, j).value() - f2.shape.at(k, j).value()).abs() < 1e-12
                );
            }
        }
        assert!((f1.chain.s[1].value() - f2.chain.s[1].value()).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_matches_jet_transversal_derivative() {
        let im = cylinder();
        let gauge = NormalGauge::parse("1", "0.5", "1").unwrap();
        let point = [0.3, 1.0, 0.7];
        let (tp, fol) = build(&im, &gauge, &point);
        for r in 0..=1 {
            let jet = tp
                .dir_scalar(&fol.what_coords, &fol.chain.s_ext(r + 1))
                .value();
            let fd = what_derivative_fd(&im, &gauge, &point, r, 1e-4).unwrap();
            assert!(
                (jet - fd).abs() < 1e-5,
                "r = {r}: jet {jet:.8} vs fd {fd:.8}"
            );
        }
    }
}

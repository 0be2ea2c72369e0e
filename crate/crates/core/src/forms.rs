//! Second fundamental forms, shape operators, and transversal one-forms of a
//! framed half-lightlike submanifold, extracted by solving the frame
//! coefficient system for each covariant derivative.
//!
//! For a frame direction `X` and any ambient field `V`, the flat ambient
//! derivative decomposes as `alpha E + beta^i Z_i + gamma N + delta W`; the
//! slots of the decompositions of the derivatives of `E, Z_j, N, W` along
//! tangent directions are, by the Gauss-Weingarten equations, exactly the
//! forms `B, D, C`, the shape operators `A*_E, A_N, A_W`, the one-forms
//! `tau, phi, rho`, and the induced connection coefficients.  Redundant
//! slots (the same quantity reachable through two different derivatives) are
//! kept and exposed as consistency residuals rather than collapsed.

use crate::error::GeomError;
use crate::halflightlike::FramePoint;
use crate::jets::Jet3;
use crate::linalg::{Lu, Mat};
use crate::scalar::{RingScalar, Scalar};
use crate::semimetric::inner;

/// Everything first-order the frame induces at one point.  Direction and
/// argument indices run over the frame order `X_0 = E, X_i = Z_i`.
#[derive(Debug, Clone)]
pub struct Forms {
    pub n: usize,
    /// `b[x][y] = B(X_x, X_y)`.
    pub b: Mat<Jet3>,
    /// `d[x][y] = D(X_x, X_y)`.
    pub d: Mat<Jet3>,
    /// `c[x][j] = C(X_x, Z_(j+1))`, the screen second fundamental form.
    pub c: Mat<Jet3>,
    /// Shape operator columns in the frame basis: `a_star.at(i, x)` is the
    /// `X_i` coefficient of `A*_E X_x`.  Row 0 is structurally zero.
    pub a_star: Mat<Jet3>,
    pub a_n: Mat<Jet3>,
    pub a_w: Mat<Jet3>,
    pub tau: Vec<Jet3>,
    pub phi: Vec<Jet3>,
    pub rho: Vec<Jet3>,
    /// Induced connection: `nabla[a].at(i, b)` is the `X_i` coefficient of
    /// `nabla_(X_a) X_b`.
    pub nabla: Vec<Mat<Jet3>>,
    /// N-slot of the ambient derivative of `E`: must vanish (`B(X, E) = 0`).
    pub b_e_slot: Vec<Jet3>,
    /// W-slot of the ambient derivative of `W`: must vanish.
    pub w_w_slot: Vec<Jet3>,
    /// E-coefficient of the tangential part of the ambient derivative of
    /// `E`; equals `-tau(X)` by the Weingarten equation for `E`.
    pub tau_alt_slot: Vec<Jet3>,
}

/// Solve the frame system for the derivative slots at one point.
pub fn forms_at(f: &FramePoint) -> Result<Forms, GeomError> {
    let ambient = f.eps.len();
    let n = f.n;
    let frame_mat = Mat::from_fn(ambient, ambient, |a, col| {
        if col == 0 {
            f.e[a].clone()
        } else if col <= n {
            f.screen[col - 1][a].clone()
        } else if col == n + 1 {
            f.nvec[a].clone()
        } else {
            f.w[a].clone()
        }
    });
    let lu = Lu::factor(&frame_mat, "frame coefficient system")?;

    let dirs: Vec<&Vec<Jet3>> = std::iter::once(&f.e_chart).chain(f.screen_chart.iter()).collect();
    let zero = f.x[0].zero_like();

    // coeffs[a][field] = (alpha, beta_1..beta_n, gamma, delta) of the
    // derivative of `field` along direction a, where field indexes
    // E, Z_1..Z_n, N, W in frame order.
    let mut coeffs: Vec<Vec<Vec<Jet3>>> = Vec::with_capacity(n + 1);
    for dir in &dirs {
        let mut per_field = Vec::with_capacity(n + 3);
        for col in 0..ambient {
            let field: &Vec<Jet3> = if col == 0 {
                &f.e
            } else if col <= n {
                &f.screen[col - 1]
            } else if col == n + 1 {
                &f.nvec
            } else {
                &f.w
            };
            let dv = f.chart_derivative(dir, field);
            per_field.push(lu.solve(&dv));
        }
        coeffs.push(per_field);
    }

    let b = Mat::from_fn(n + 1, n + 1, |x, y| coeffs[x][y][n + 1].clone());
    let d = Mat::from_fn(n + 1, n + 1, |x, y| coeffs[x][y][n + 2].clone());
    let c = Mat::from_fn(n + 1, n, |x, j| coeffs[x][j + 1][0].clone());
    let nabla: Vec<Mat<Jet3>> = (0..=n)
        .map(|a| Mat::from_fn(n + 1, n + 1, |i, bcol| coeffs[a][bcol][i].clone()))
        .collect();

    let a_star = Mat::from_fn(n + 1, n + 1, |i, x| {
        if i == 0 {
            zero.clone()
        } else {
            coeffs[x][0][i].neg()
        }
    });
    let a_n = Mat::from_fn(n + 1, n + 1, |i, x| coeffs[x][n + 1][i].neg());
    let a_w = Mat::from_fn(n + 1, n + 1, |i, x| coeffs[x][n + 2][i].neg());

    let tau: Vec<Jet3> = (0..=n).map(|x| coeffs[x][n + 1][n + 1].clone()).collect();
    let rho: Vec<Jet3> = (0..=n).map(|x| coeffs[x][n + 1][n + 2].clone()).collect();
    let phi: Vec<Jet3> = (0..=n).map(|x| coeffs[x][n + 2][n + 1].clone()).collect();
    let b_e_slot: Vec<Jet3> = (0..=n).map(|x| coeffs[x][0][n + 1].clone()).collect();
    let w_w_slot: Vec<Jet3> = (0..=n).map(|x| coeffs[x][n + 2][n + 2].clone()).collect();
    let tau_alt_slot: Vec<Jet3> = (0..=n).map(|x| coeffs[x][0][0].clone()).collect();

    Ok(Forms {
        n,
        b,
        d,
        c,
        a_star,
        a_n,
        a_w,
        tau,
        phi,
        rho,
        nabla,
        b_e_slot,
        w_w_slot,
        tau_alt_slot,
    })
}

/// Drop the `E` row and column of a frame-basis operator matrix, leaving its
/// restriction to the screen.
pub fn screen_part(m: &Mat<Jet3>) -> Mat<Jet3> {
    Mat::from_fn(m.rows() - 1, m.cols() - 1, |i, j| m.at(i + 1, j + 1).clone())
}

impl Forms {
    /// `g(V, X_y)` for a tangent vector given by frame coefficients `v`:
    /// only screen components pair, each with its sign.
    fn g_frame(&self, f: &FramePoint, v: &[Jet3], y: usize) -> Jet3 {
        if y == 0 {
            v[0].zero_like()
        } else {
            v[y].scale(f.screen_signs[y - 1])
        }
    }

    /// Scalar derivative of a jet along frame direction `a`.
    fn dir_deriv(&self, f: &FramePoint, a: usize, s: &Jet3) -> Jet3 {
        let chart: &Vec<Jet3> = if a == 0 { &f.e_chart } else { &f.screen_chart[a - 1] };
        let mut acc = s.zero_like();
        for (k, ck) in chart.iter().enumerate() {
            acc = acc.add(&ck.mul(&s.partial(k)));
        }
        acc
    }

    /// `(nabla_(X_a) B)(X_x, X_y)` for a bilinear form given as a frame
    /// matrix (works for `B` and `D`).
    fn nabla_form(&self, f: &FramePoint, form: &Mat<Jet3>, a: usize, x: usize, y: usize) -> Jet3 {
        let mut out = self.dir_deriv(f, a, form.at(x, y));
        for i in 0..=self.n {
            out = out.sub(&self.nabla[a].at(i, x).mul(form.at(i, y)));
            out = out.sub(&self.nabla[a].at(i, y).mul(form.at(x, i)));
        }
        out
    }

    /// `(nabla_(X_a) C)(X_x, Z_j)`: tangent slot carried by the induced
    /// connection, screen slot by the screen connection.
    fn nabla_c(&self, f: &FramePoint, a: usize, x: usize, j: usize) -> Jet3 {
        let mut out = self.dir_deriv(f, a, self.c.at(x, j));
        for i in 0..=self.n {
            out = out.sub(&self.nabla[a].at(i, x).mul(self.c.at(i, j)));
        }
        for i in 1..=self.n {
            out = out.sub(&self.nabla[a].at(i, j + 1).mul(self.c.at(x, i - 1)));
        }
        out
    }

    /// Value-level residuals of the pointwise structure identities, labeled
    /// by the identity itself.  Everything here is a consequence of metric
    /// compatibility and flatness of the ambient connection, so all entries
    /// must vanish on a correct frame.
    pub fn structure_residuals(&self, f: &FramePoint) -> Vec<(String, f64)> {
        let n = self.n;
        let eps_w = f.w_sign;
        let mut out: Vec<(String, f64)> = Vec::new();
        let mut push_max = |label: &str, vals: Vec<f64>| {
            let worst = vals.into_iter().fold(0.0_f64, f64::max);
            out.push((label.to_string(), worst));
        };

        push_max(
            "B(X,Y) = B(Y,X)",
            iter_pairs(n + 1)
                .map(|(x, y)| self.b.at(x, y).sub(self.b.at(y, x)).val().abs())
                .collect(),
        );
        push_max(
            "D(X,Y) = D(Y,X)",
            iter_pairs(n + 1)
                .map(|(x, y)| self.d.at(x, y).sub(self.d.at(y, x)).val().abs())
                .collect(),
        );
        push_max(
            "B(X,E) = 0",
            (0..=n).map(|x| self.b.at(x, 0).val().abs().max(self.b_e_slot[x].val().abs())).collect(),
        );
        push_max(
            "D(X,E) = -eps_W phi(X)",
            (0..=n)
                .map(|x| self.d.at(x, 0).add(&self.phi[x].scale(eps_w)).val().abs())
                .collect(),
        );
        push_max(
            "A*_E E = 0",
            (1..=n).map(|i| self.a_star.at(i, 0).val().abs()).collect(),
        );
        push_max(
            "gbar(A_N X, N) = 0",
            (0..=n).map(|x| self.a_n.at(0, x).val().abs()).collect(),
        );
        push_max(
            "W-component of ambient derivative of W = 0",
            (0..=n).map(|x| self.w_w_slot[x].val().abs()).collect(),
        );
        push_max(
            "tau from derivative of N matches tau from derivative of E",
            (0..=n).map(|x| self.tau[x].add(&self.tau_alt_slot[x]).val().abs()).collect(),
        );
        push_max(
            "gbar(A_W X, N) = eps_W rho(X)",
            (0..=n)
                .map(|x| self.a_w.at(0, x).sub(&self.rho[x].scale(eps_w)).val().abs())
                .collect(),
        );
        push_max(
            "g(A*_E X, Z) = B(X, Z)",
            pairs_xz(n)
                .map(|(x, j)| {
                    self.a_star
                        .at(j + 1, x)
                        .scale(f.screen_signs[j])
                        .sub(self.b.at(x, j + 1))
                        .val()
                        .abs()
                })
                .collect(),
        );
        push_max(
            "g(A_W X, Z) = eps_W D(X, Z)",
            pairs_xz(n)
                .map(|(x, j)| {
                    self.a_w
                        .at(j + 1, x)
                        .scale(f.screen_signs[j])
                        .sub(&self.d.at(x, j + 1).scale(eps_w))
                        .val()
                        .abs()
                })
                .collect(),
        );
        push_max(
            "g(A_N X, Z) = C(X, Z)",
            pairs_xz(n)
                .map(|(x, j)| {
                    self.a_n
                        .at(j + 1, x)
                        .scale(f.screen_signs[j])
                        .sub(self.c.at(x, j))
                        .val()
                        .abs()
                })
                .collect(),
        );

        // Non-metricity of the induced connection:
        // (nabla_X g)(Y,Z) = B(X,Y) lam(Z) + B(X,Z) lam(Y), lam = gbar(., N).
        let lam: Vec<Jet3> = (0..=n)
            .map(|i| {
                let field: &Vec<Jet3> = if i == 0 { &f.e } else { &f.screen[i - 1] };
                inner(&f.eps, field, &f.nvec)
            })
            .collect();
        let mut vals = Vec::new();
        for a in 0..=n {
            for y in 0..=n {
                for z in 0..=n {
                    // Frame pairings are constants, so the derivative term of
                    // (nabla_X g)(Y,Z) drops and the two connection terms remain.
                    let col_y: Vec<Jet3> = (0..=n).map(|i| self.nabla[a].at(i, y).clone()).collect();
                    let col_z: Vec<Jet3> = (0..=n).map(|i| self.nabla[a].at(i, z).clone()).collect();
                    let lhs = self
                        .g_frame(f, &col_y, z)
                        .add(&self.g_frame(f, &col_z, y))
                        .neg();
                    let rhs = self.b.at(a, y).mul(&lam[z]).add(&self.b.at(a, z).mul(&lam[y]));
                    vals.push(lhs.sub(&rhs).val().abs());
                }
            }
        }
        push_max("(nabla_X g)(Y,Z) = B(X,Y) lam(Z) + B(X,Z) lam(Y)", vals);

        // Flat-ambient Codazzi identities, derived by decomposing
        // R(X,Y) = 0 in the frame and reading off each transversal slot.
        let mut b_vals = Vec::new();
        let mut d_vals = Vec::new();
        for (x, y) in iter_pairs(n + 1) {
            for z in 0..=n {
                let cod_b = self
                    .nabla_form(f, &self.b, x, y, z)
                    .sub(&self.nabla_form(f, &self.b, y, x, z))
                    .add(&self.tau[x].mul(self.b.at(y, z)))
                    .sub(&self.tau[y].mul(self.b.at(x, z)))
                    .add(&self.phi[x].mul(self.d.at(y, z)))
                    .sub(&self.phi[y].mul(self.d.at(x, z)));
                b_vals.push(cod_b.val().abs());
                let cod_d = self
                    .nabla_form(f, &self.d, x, y, z)
                    .sub(&self.nabla_form(f, &self.d, y, x, z))
                    .add(&self.rho[x].mul(self.b.at(y, z)))
                    .sub(&self.rho[y].mul(self.b.at(x, z)));
                d_vals.push(cod_d.val().abs());
            }
        }
        push_max(
            "(nabla_X B)(Y,Z) - (nabla_Y B)(X,Z) + tau(X)B(Y,Z) - tau(Y)B(X,Z) + phi(X)D(Y,Z) - phi(Y)D(X,Z) = 0",
            b_vals,
        );
        push_max(
            "(nabla_X D)(Y,Z) - (nabla_Y D)(X,Z) + rho(X)B(Y,Z) - rho(Y)B(X,Z) = 0",
            d_vals,
        );

        let mut c_vals = Vec::new();
        for (x, y) in iter_pairs(n + 1) {
            for j in 0..n {
                c_vals.push(self.c_codazzi_core(f, x, y, j).val().abs());
            }
        }
        push_max(
            "(nabla_X C)(Y,Z) - (nabla_Y C)(X,Z) + tau(Y)C(X,Z) - tau(X)C(Y,Z) + eps_W {rho(Y)D(X,Z) - rho(X)D(Y,Z)} = 0",
            c_vals,
        );

        out
    }

    /// The flat-ambient screen-form identity with every coefficient in its
    /// derived place.
    fn c_codazzi_core(&self, f: &FramePoint, x: usize, y: usize, j: usize) -> Jet3 {
        let eps_w = f.w_sign;
        self.nabla_c(f, x, y, j)
            .sub(&self.nabla_c(f, y, x, j))
            .add(&self.tau[y].mul(self.c.at(x, j)))
            .sub(&self.tau[x].mul(self.c.at(y, j)))
            .add(
                &self.rho[y]
                    .mul(self.d.at(x, j + 1))
                    .sub(&self.rho[x].mul(self.d.at(y, j + 1)))
                    .scale(eps_w),
            )
    }

    /// Two literal readings of a printed screen-form identity whose braced
    /// difference of `rho . D` terms is joined to the rest by an unreadable
    /// operator, with the factor `eps_W` attached to the second `tau C` term
    /// as printed.  Returns `(plus_reading, minus_reading)` worst residuals;
    /// the caller reports which one vanishes instead of asserting either.
    pub fn ambiguous_screen_identity_readings(&self, f: &FramePoint) -> (f64, f64) {
        let n = self.n;
        let eps_w = f.w_sign;
        let mut plus = 0.0_f64;
        let mut minus = 0.0_f64;
        for (x, y) in iter_pairs(n + 1) {
            for j in 0..n {
                let common = self
                    .nabla_c(f, x, y, j)
                    .sub(&self.nabla_c(f, y, x, j))
                    .add(&self.tau[y].mul(self.c.at(x, j)))
                    .sub(&self.tau[x].mul(self.c.at(y, j)).scale(eps_w));
                let brace = self.rho[y]
                    .mul(self.d.at(x, j + 1))
                    .sub(&self.rho[x].mul(self.d.at(y, j + 1)));
                plus = plus.max(common.add(&brace).val().abs());
                minus = minus.max(common.sub(&brace).val().abs());
            }
        }
        (plus, minus)
    }
}

fn iter_pairs(count: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..count).flat_map(move |x| (x + 1..count).map(move |y| (x, y)))
}

fn pairs_xz(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=n).flat_map(move |x| (0..n).map(move |j| (x, j)))
}

/// Chart coefficients of the commutator `[V_i, V_j]` of two tangent fields
/// given by chart coefficient jets.
pub fn bracket_chart(
    f: &FramePoint,
    vi: &[Jet3],
    vj: &[Jet3],
) -> Vec<Jet3> {
    let m = f.active;
    (0..m)
        .map(|k| {
            let mut acc = vi[0].zero_like();
            for l in 0..m {
                acc = acc.add(&vi[l].mul(&vj[k].partial(l)));
                acc = acc.sub(&vj[l].mul(&vi[k].partial(l)));
            }
            acc
        })
        .collect()
}

/// Expand the bracket of two raw screen fields in the basis of the raw
/// screen fields plus the radical direction: returns the coefficient list
/// `(a_1..a_n, a_E)`.  A screen distribution is integrable exactly when the
/// radical coefficient of every such bracket vanishes.
pub fn screen_bracket_coefficients(
    f: &FramePoint,
    i: usize,
    j: usize,
) -> Result<Vec<Jet3>, GeomError> {
    let (fields_chart, count): (Vec<&Vec<Jet3>>, usize) = match &f.raw_screen {
        Some(raw) => (raw.chart.iter().collect(), raw.chart.len()),
        None => (f.screen_chart.iter().collect(), f.screen_chart.len()),
    };
    if i >= count || j >= count {
        return Err(GeomError::Dimension {
            context: "screen bracket field index",
            got: i.max(j),
            expected: count - 1,
        });
    }
    let br = bracket_chart(f, fields_chart[i], fields_chart[j]);
    let m = f.active;
    let basis = Mat::from_fn(m, m, |row, col| {
        if col < count {
            fields_chart[col][row].clone()
        } else {
            f.e_chart[row].clone()
        }
    });
    let lu = Lu::factor(&basis, "screen bracket expansion")?;
    Ok(lu.solve(&br))
}

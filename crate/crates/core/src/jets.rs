//! Truncated multivariate Taylor arithmetic of fixed order 3.
//!
//! A [`Jet3`] stores the value and all partial derivatives of a smooth
//! function up to total order 3 at a single point, as coefficients of the
//! Taylor polynomial in the offset variables.  Arithmetic on jets is
//! polynomial arithmetic truncated at total degree 3, so the stored
//! coefficients of a sum, product, quotient, or analytic composition are
//! exact (up to rounding) whenever the operands are.
//!
//! Order 3 is fixed because the geometry built on top needs at most three
//! derivatives of an immersion: one to reach tangent frames, a second for
//! fundamental forms and shape operators, and a third for covariant
//! derivatives of those operators.  Differentiating a jet loses its top
//! order: the degree-3 coefficients of [`Jet3::partial`] are set to zero and
//! are not meaningful.  Pipelines must budget orders accordingly; value-level
//! results of a three-derivative chain remain exact.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

/// Truncation order of every jet.
pub const ORDER: usize = 3;

/// Hard cap on the number of jet variables.  Chart dimensions stay small in
/// practice and the dense tables grow cubically, so anything beyond this is
/// almost certainly a caller bug.
pub const MAX_VARS: usize = 12;

const NONE: u32 = u32::MAX;

/// Errors produced by jet construction and analytic composition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("jet variable count {0} is unsupported (1..={MAX_VARS})")]
    BadVarCount(usize),
    #[error("jets over different variable counts cannot be combined: {0} vs {1}")]
    VarMismatch(usize, usize),
    #[error("variable index {index} out of range for {vars} variables")]
    VarIndex { index: usize, vars: usize },
    #[error("{func} evaluated outside its differentiable domain (argument value {value})")]
    Domain { func: &'static str, value: f64 },
    #[error("{func} produced a non-finite coefficient (argument value {value})")]
    NonFinite { func: &'static str, value: f64 },
}

/// Shared per-variable-count lookup tables: the monomial basis of degree
/// <= 3, the truncated product index map, and shift maps for differentiation.
pub struct JetTable {
    vars: usize,
    monomials: Vec<Vec<u8>>,
    index_of: HashMap<Vec<u8>, u32>,
    /// `product[i * len + j]`: basis index of monomial `i + j`, or `NONE`
    /// when the sum exceeds degree 3.
    product: Vec<u32>,
    /// `shift[k][i]`: basis index of monomial `i + e_k`, or `NONE`.
    shift: Vec<Vec<u32>>,
}

impl JetTable {
    fn build(vars: usize) -> Self {
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        for d in 0..=ORDER {
            gen_degree(vars, d as u8, &mut Vec::with_capacity(vars), &mut monomials);
        }
        let index_of: HashMap<Vec<u8>, u32> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as u32))
            .collect();
        let len = monomials.len();
        let mut product = vec![NONE; len * len];
        for i in 0..len {
            for j in 0..len {
                let sum: Vec<u8> = monomials[i]
                    .iter()
                    .zip(&monomials[j])
                    .map(|(a, b)| a + b)
                    .collect();
                if sum.iter().map(|&e| e as usize).sum::<usize>() <= ORDER {
                    product[i * len + j] = index_of[&sum];
                }
            }
        }
        let mut shift = vec![vec![NONE; len]; vars];
        for (i, m) in monomials.iter().enumerate() {
            for k in 0..vars {
                let mut up = m.clone();
                up[k] += 1;
                if let Some(&idx) = index_of.get(&up) {
                    shift[k][i] = idx;
                }
            }
        }
        JetTable { vars, monomials, index_of, product, shift }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Basis index of a multi-index, if its total degree is <= 3.
    pub fn index(&self, alpha: &[u8]) -> Option<usize> {
        self.index_of.get(alpha).map(|&i| i as usize)
    }

    pub fn monomial(&self, idx: usize) -> &[u8] {
        &self.monomials[idx]
    }
}

/// Multi-indices of one fixed total degree, first variable varying slowest,
/// exponents descending.  Keeps the basis order deterministic.
fn gen_degree(vars: usize, remaining: u8, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == vars - 1 {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=remaining).rev() {
        prefix.push(e);
        gen_degree(vars, remaining - e, prefix, out);
        prefix.pop();
    }
}

static REGISTRY: LazyLock<Mutex<HashMap<usize, Arc<JetTable>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Fetch (building on first use) the shared table for a variable count.
pub fn table(vars: usize) -> Result<Arc<JetTable>, JetError> {
    if vars == 0 || vars > MAX_VARS {
        return Err(JetError::BadVarCount(vars));
    }
    let mut reg = REGISTRY.lock().expect("jet table registry poisoned");
    Ok(Arc::clone(
        reg.entry(vars).or_insert_with(|| Arc::new(JetTable::build(vars))),
    ))
}

/// An order-3 jet: Taylor coefficients of a scalar quantity in the chart
/// offsets around a fixed evaluation point.
///
/// Coefficients are stored against the monomial basis of the shared
/// [`JetTable`]; the constant coefficient is the value.  Binary operators
/// panic when mixing variable counts (a caller bug); use
/// [`Jet3::same_chart`] at API boundaries where operands come from outside.
#[derive(Clone)]
pub struct Jet3 {
    table: Arc<JetTable>,
    c: Vec<f64>,
}

impl fmt::Debug for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet3({} vars; value {:.6e}", self.table.vars, self.value())?;
        for k in 0..self.table.vars {
            write!(f, ", d{}={:.6e}", k, self.grad(k))?;
        }
        write!(f, ")")
    }
}

impl Jet3 {
    /// Constant jet: value `v`, all derivatives zero.
    pub fn constant(table: &Arc<JetTable>, v: f64) -> Jet3 {
        let mut c = vec![0.0; table.len()];
        c[0] = v;
        Jet3 { table: Arc::clone(table), c }
    }

    /// Coordinate jet of variable `k` with value `v`: the function
    /// `u -> v + (u_k - center_k)`.
    pub fn coordinate(table: &Arc<JetTable>, k: usize, v: f64) -> Result<Jet3, JetError> {
        if k >= table.vars {
            return Err(JetError::VarIndex { index: k, vars: table.vars });
        }
        let mut alpha = vec![0u8; table.vars];
        alpha[k] = 1;
        let idx = table.index(&alpha).expect("degree-1 monomial present");
        let mut c = vec![0.0; table.len()];
        c[0] = v;
        c[idx] = 1.0;
        Ok(Jet3 { table: Arc::clone(table), c })
    }

    /// A zero jet sharing this jet's table.
    pub fn zero_like(&self) -> Jet3 {
        Jet3::constant(&self.table, 0.0)
    }

    /// A constant jet sharing this jet's table.
    pub fn constant_like(&self, v: f64) -> Jet3 {
        Jet3::constant(&self.table, v)
    }

    pub fn table(&self) -> &Arc<JetTable> {
        &self.table
    }

    pub fn vars(&self) -> usize {
        self.table.vars
    }

    /// Check that two jets live over the same variable count.
    pub fn same_chart(&self, other: &Jet3) -> Result<(), JetError> {
        if self.table.vars == other.table.vars {
            Ok(())
        } else {
            Err(JetError::VarMismatch(self.table.vars, other.table.vars))
        }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// First derivative along variable `k` (a value, not a jet).
    pub fn grad(&self, k: usize) -> f64 {
        let mut alpha = vec![0u8; self.table.vars];
        alpha[k] = 1;
        self.c[self.table.index(&alpha).expect("degree-1 monomial")]
    }

    /// Raw Taylor coefficient of a multi-index.
    pub fn coeff(&self, alpha: &[u8]) -> Option<f64> {
        self.table.index(alpha).map(|i| self.c[i])
    }

    /// Value of the partial derivative `d^alpha f` at the center, i.e. the
    /// Taylor coefficient rescaled by `alpha!`.
    pub fn derivative(&self, alpha: &[u8]) -> Option<f64> {
        self.coeff(alpha).map(|c| {
            let fact: f64 = alpha
                .iter()
                .map(|&e| (1..=e as u64).product::<u64>() as f64)
                .product();
            c * fact
        })
    }

    /// Partial derivative as a jet.  The result's degree-3 coefficients are
    /// zero placeholders (the information lives above order 3); its value
    /// through degree-2 coefficients are exact.
    pub fn partial(&self, k: usize) -> Jet3 {
        let tab = &self.table;
        let mut c = vec![0.0; tab.len()];
        let shift = &tab.shift[k];
        for i in 0..tab.len() {
            let up = shift[i];
            if up != NONE {
                let e = tab.monomials[i][k] as f64;
                c[i] = (e + 1.0) * self.c[up as usize];
            }
        }
        Jet3 { table: Arc::clone(tab), c }
    }

    /// Evaluate the Taylor polynomial at a finite offset from the center.
    pub fn eval_offset(&self, dx: &[f64]) -> f64 {
        assert_eq!(dx.len(), self.table.vars, "offset length mismatch");
        let mut acc = 0.0;
        for (i, m) in self.table.monomials.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            let mut term = self.c[i];
            for (k, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    term *= dx[k];
                }
            }
            acc += term;
        }
        acc
    }

    /// Re-embed into a table with more variables; the jet is constant in the
    /// appended variables.
    pub fn pad(&self, wider: &Arc<JetTable>) -> Result<Jet3, JetError> {
        if wider.vars < self.table.vars {
            return Err(JetError::VarMismatch(self.table.vars, wider.vars));
        }
        let mut c = vec![0.0; wider.len()];
        for (i, m) in self.table.monomials.iter().enumerate() {
            if self.c[i] != 0.0 {
                let mut alpha = m.clone();
                alpha.resize(wider.vars, 0);
                let idx = wider.index(&alpha).expect("padded monomial present");
                c[idx] = self.c[i];
            }
        }
        Ok(Jet3 { table: Arc::clone(wider), c })
    }

    pub fn scale(&self, k: f64) -> Jet3 {
        let mut out = self.clone();
        for c in &mut out.c {
            *c *= k;
        }
        out
    }

    fn check(&self, other: &Jet3) {
        assert_eq!(
            self.table.vars, other.table.vars,
            "jets over different variable counts cannot be combined"
        );
    }

    pub fn mul(&self, rhs: &Jet3) -> Jet3 {
        self.check(rhs);
        let tab = &self.table;
        let len = tab.len();
        let mut c = vec![0.0; len];
        for i in 0..len {
            let a = self.c[i];
            if a == 0.0 {
                continue;
            }
            let row = &tab.product[i * len..(i + 1) * len];
            for j in 0..len {
                let b = rhs.c[j];
                if b == 0.0 {
                    continue;
                }
                let k = row[j];
                if k != NONE {
                    c[k as usize] += a * b;
                }
            }
        }
        Jet3 { table: Arc::clone(tab), c }
    }

    /// Truncated composition with a univariate analytic function given by its
    /// value and first three derivatives at this jet's value.
    fn apply(&self, func: &'static str, d: [f64; 4]) -> Result<Jet3, JetError> {
        // f(v + h) = d0 + d1 h + d2/2 h^2 + d3/6 h^3 with h the nilpotent part.
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = h.scale(d[3] / 6.0);
        out.c[0] += d[2] / 2.0;
        out = out.mul(&h);
        out.c[0] += d[1];
        out = out.mul(&h);
        out.c[0] += d[0];
        if out.c.iter().any(|c| !c.is_finite()) {
            return Err(JetError::NonFinite { func, value: self.value() });
        }
        Ok(out)
    }

    pub fn sin(&self) -> Jet3 {
        let v = self.value();
        self.apply("sin", [v.sin(), v.cos(), -v.sin(), -v.cos()])
            .expect("sin is entire")
    }

    pub fn cos(&self) -> Jet3 {
        let v = self.value();
        self.apply("cos", [v.cos(), -v.sin(), -v.cos(), v.sin()])
            .expect("cos is entire")
    }

    pub fn tan(&self) -> Result<Jet3, JetError> {
        let v = self.value();
        if v.cos() == 0.0 {
            return Err(JetError::Domain { func: "tan", value: v });
        }
        let t = v.tan();
        let s = 1.0 + t * t;
        self.apply("tan", [t, s, 2.0 * t * s, s * (2.0 + 6.0 * t * t)])
    }

    pub fn exp(&self) -> Jet3 {
        let e = self.value().exp();
        self.apply("exp", [e, e, e, e]).expect("exp is entire")
    }

    pub fn log(&self) -> Result<Jet3, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain { func: "log", value: v });
        }
        self.apply("log", [v.ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)])
    }

    pub fn sqrt(&self) -> Result<Jet3, JetError> {
        let v = self.value();
        if v <= 0.0 {
            // v == 0 is excluded too: the derivative blows up there.
            return Err(JetError::Domain { func: "sqrt", value: v });
        }
        let s = v.sqrt();
        self.apply(
            "sqrt",
            [s, 0.5 / s, -0.25 / (v * s), 0.375 / (v * v * s)],
        )
    }

    pub fn recip(&self) -> Result<Jet3, JetError> {
        let v = self.value();
        if v == 0.0 {
            return Err(JetError::Domain { func: "recip", value: v });
        }
        let v2 = v * v;
        self.apply(
            "recip",
            [1.0 / v, -1.0 / v2, 2.0 / (v2 * v), -6.0 / (v2 * v2)],
        )
    }

    pub fn div(&self, rhs: &Jet3) -> Result<Jet3, JetError> {
        Ok(self.mul(&rhs.recip()?))
    }

    /// Integer power, exact truncated multiplication; negative exponents go
    /// through [`Jet3::recip`].
    pub fn powi(&self, k: i32) -> Result<Jet3, JetError> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// Largest absolute coefficient, useful as a crude jet magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl std::ops::Add for &Jet3 {
    type Output = Jet3;
    fn add(self, rhs: &Jet3) -> Jet3 {
        self.check(rhs);
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
        out
    }
}

impl std::ops::Sub for &Jet3 {
    type Output = Jet3;
    fn sub(self, rhs: &Jet3) -> Jet3 {
        self.check(rhs);
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
        out
    }
}

impl std::ops::Mul for &Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: &Jet3) -> Jet3 {
        Jet3::mul(self, rhs)
    }
}

impl std::ops::Neg for &Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

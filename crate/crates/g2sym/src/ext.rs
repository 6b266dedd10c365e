//! Dense exterior algebra on a small coframe.
//!
//! A homogeneous form of degree `k` on an `n`-dimensional space (n ≤ 8) is
//! stored as a vector of length 2ⁿ indexed by bitmask: bit `i` set means the
//! basis covector `eⁱ` occurs. Only masks with `k` bits carry coefficients.
//! Antisymmetry is therefore structural; every sign comes from bit counting.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub const MAX_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    dim: usize,
    deg: usize,
    c: Vec<f64>,
}

/// Sign of reordering e^I ∧ e^J into increasing order (0 if they overlap).
#[inline]
pub fn wedge_sign(i: usize, j: usize) -> f64 {
    if i & j != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    let mut jj = j;
    while jj != 0 {
        let b = jj.trailing_zeros();
        swaps += (i >> (b + 1)).count_ones();
        jj &= jj - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bitmask of a sorted or unsorted index list, with the sign of the sorting permutation.
/// Returns `None` on repeated indices.
pub fn mask_of(idx: &[usize]) -> Option<(usize, f64)> {
    let mut mask = 0usize;
    let mut sign = 1.0;
    for &i in idx {
        if mask & (1 << i) != 0 {
            return None;
        }
        // moving e^i past the already placed higher indices
        if (mask >> (i + 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= 1 << i;
    }
    Some((mask, sign))
}

/// Indices of the set bits, ascending.
pub fn indices(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|b| mask >> b & 1 == 1).collect()
}

impl Form {
    pub fn zero(dim: usize, deg: usize) -> Self {
        assert!(dim <= MAX_DIM && deg <= dim);
        Form {
            dim,
            deg,
            c: vec![0.0; 1 << dim],
        }
    }

    /// The basis form e^{i₁}∧…∧e^{i_k} (indices in any order; sign applied).
    pub fn basis(dim: usize, idx: &[usize]) -> Self {
        let mut f = Form::zero(dim, idx.len());
        let (m, s) = mask_of(idx).expect("repeated index in basis form");
        f.c[m] = s;
        f
    }

    /// The 1-form Σ vᵢ eⁱ.
    pub fn one_form(v: &[f64]) -> Self {
        let mut f = Form::zero(v.len(), 1);
        for (i, x) in v.iter().enumerate() {
            f.c[1 << i] = *x;
        }
        f
    }

    pub fn scalar(dim: usize, x: f64) -> Self {
        let mut f = Form::zero(dim, 0);
        f.c[0] = x;
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn coeff_mask(&self, mask: usize) -> f64 {
        self.c[mask]
    }

    /// Coefficient of e^{idx} with the sign of the permutation sorting `idx`.
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        match mask_of(idx) {
            Some((m, s)) if idx.len() == self.deg => s * self.c[m],
            _ => 0.0,
        }
    }

    pub fn set_mask(&mut self, mask: usize, x: f64) {
        debug_assert_eq!(mask.count_ones() as usize, self.deg);
        self.c[mask] = x;
    }

    /// Add `x · e^{idx}` (sign of `idx` ordering applied).
    pub fn add_term(&mut self, idx: &[usize], x: f64) {
        assert_eq!(idx.len(), self.deg);
        let (m, s) = mask_of(idx).expect("repeated index");
        self.c[m] += s * x;
    }

    /// Non-zero (mask, coefficient) pairs in mask order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(m, x)| (m, *x))
    }

    /// All masks of this degree, in increasing numeric order.
    pub fn masks(&self) -> impl Iterator<Item = usize> + '_ {
        let deg = self.deg as u32;
        (0..self.c.len()).filter(move |m| m.count_ones() == deg)
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim);
        let mut out = Form::zero(self.dim, self.deg + other.deg);
        if self.deg + other.deg > self.dim {
            return out;
        }
        for (i, a) in self.terms() {
            for (j, b) in other.terms() {
                if i & j == 0 {
                    out.c[i | j] += wedge_sign(i, j) * a * b;
                }
            }
        }
        out
    }

    /// Interior product ι_v ω, i.e. ω(v, ·, …, ·).
    pub fn interior(&self, v: &[f64]) -> Form {
        assert_eq!(v.len(), self.dim);
        assert!(self.deg > 0, "interior product of a function");
        let mut out = Form::zero(self.dim, self.deg - 1);
        for (m, a) in self.terms() {
            let mut rank = 0;
            let mut mm = m;
            while mm != 0 {
                let b = mm.trailing_zeros() as usize;
                if v[b] != 0.0 {
                    let s = if rank % 2 == 0 { 1.0 } else { -1.0 };
                    out.c[m & !(1 << b)] += s * v[b] * a;
                }
                rank += 1;
                mm &= mm - 1;
            }
        }
        out
    }

    /// ω(v₁, …, v_k).
    pub fn eval(&self, vs: &[&[f64]]) -> f64 {
        assert_eq!(vs.len(), self.deg);
        let mut f = self.clone();
        for v in vs {
            f = f.interior(v);
        }
        f.c[0]
    }

    /// Value of a top-degree form (coefficient of e^{0…n-1}).
    pub fn top(&self) -> f64 {
        self.c[(1 << self.dim) - 1]
    }

    /// Euclidean norm of the coefficient vector in this coframe.
    pub fn norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Form {
        Form {
            dim: self.dim,
            deg: self.deg,
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    /// Replace coefficients by an arbitrary pointwise map (masks kept).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Form {
        Form {
            dim: self.dim,
            deg: self.deg,
            c: self.c.iter().map(|x| f(*x)).collect(),
        }
    }

    /// Pull back along a linear map of covectors: each eⁱ ↦ Σ_j m[i][j] e'ʲ.
    pub fn pullback(&self, m: &[Vec<f64>], new_dim: usize) -> Form {
        let images: Vec<Form> = m.iter().map(|row| Form::one_form(row)).collect();
        assert_eq!(images.len(), self.dim);
        assert!(images.iter().all(|f| f.dim == new_dim));
        let mut out = Form::zero(new_dim, self.deg);
        for (mask, a) in self.terms() {
            let mut acc = Form::scalar(new_dim, a);
            for i in indices(mask) {
                acc = acc.wedge(&images[i]);
            }
            out += &acc;
        }
        out
    }
}

impl Add<&Form> for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        assert_eq!((self.dim, self.deg), (rhs.dim, rhs.deg));
        Form {
            dim: self.dim,
            deg: self.deg,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&Form> for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        assert_eq!((self.dim, self.deg), (rhs.dim, rhs.deg));
        Form {
            dim: self.dim,
            deg: self.deg,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&Form> for Form {
    fn add_assign(&mut self, rhs: &Form) {
        assert_eq!((self.dim, self.deg), (rhs.dim, rhs.deg));
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
    }
}

impl Mul<&Form> for f64 {
    type Output = Form;
    fn mul(self, rhs: &Form) -> Form {
        rhs.scale(self)
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale(-1.0)
    }
}

/// A coframe {e⁰,…,eⁿ⁻¹} with prescribed exterior derivatives deⁱ (2-forms).
///
/// d of every basis monomial is precomputed by the Leibniz rule, so the
/// derivative of a form is d(Σ c_I e^I) = Σ dc_I ∧ e^I + c_I d(e^I), where the
/// caller supplies the 1-forms dc_I.
#[derive(Clone, Debug)]
pub struct Coframe {
    dim: usize,
    d_basis: Vec<Form>,
}

impl Coframe {
    pub fn new(d_one: Vec<Form>) -> Self {
        let dim = d_one.len();
        assert!(dim <= MAX_DIM);
        for f in &d_one {
            assert_eq!((f.dim, f.deg), (dim, 2));
        }
        let mut d_basis = Vec::with_capacity(1 << dim);
        for mask in 0..(1usize << dim) {
            let idx = indices(mask);
            let k = idx.len();
            let mut acc = Form::zero(dim, (k + 1).min(dim));
            if k == 0 || k == dim {
                d_basis.push(acc);
                continue;
            }
            for (pos, &i) in idx.iter().enumerate() {
                let left = Form::basis(dim, &idx[..pos]);
                let right = Form::basis(dim, &idx[pos + 1..]);
                let term = left.wedge(&d_one[i]).wedge(&right);
                let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
                acc += &term.scale(s);
            }
            d_basis.push(acc);
        }
        Coframe { dim, d_basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// d(e^I) for a basis monomial.
    pub fn d_monomial(&self, mask: usize) -> &Form {
        &self.d_basis[mask]
    }

    /// d of a form with constant coefficients.
    pub fn d_const(&self, w: &Form) -> Form {
        let mut out = Form::zero(self.dim, (w.deg + 1).min(self.dim));
        if w.deg == self.dim {
            return out;
        }
        for (m, a) in w.terms() {
            out += &self.d_basis[m].scale(a);
        }
        out
    }

    /// d of a form whose coefficients depend on one coordinate with
    /// differential e^p: dω = e^p ∧ ∂ω + Σ c_I d(e^I).
    pub fn d_param(&self, w: &Form, w_dot: &Form, p: usize) -> Form {
        let ep = Form::basis(self.dim, &[p]);
        let mut out = ep.wedge(w_dot);
        out += &self.d_const(w);
        out
    }

    /// d of Σ c_I e^I with explicitly supplied differentials dc_I (1-forms).
    pub fn d_general<'a>(&self, terms: impl IntoIterator<Item = (usize, f64, &'a Form)>, deg: usize) -> Form {
        let mut out = Form::zero(self.dim, (deg + 1).min(self.dim));
        for (mask, c, dc) in terms {
            let e = {
                let mut f = Form::zero(self.dim, deg);
                f.c[mask] = 1.0;
                f
            };
            out += &dc.wedge(&e);
            out += &self.d_basis[mask].scale(c);
        }
        out
    }
}

//! Pointwise G2 linear algebra on ℝ⁷.
//!
//! Basis order is (∂x₁,∂x₂,∂x₃,∂a₀,∂a₁,∂a₂,∂a₃) → indices 0..7, positively
//! oriented. All routines are written for an arbitrary coframe of dimension 7,
//! so they apply verbatim to the invariant coframe (dt, e₁,e₂,e₃, f₁,f₂,f₃).

use crate::error::{Error, Result};
use crate::ext::{indices, wedge_sign, Form};
use nalgebra::{SMatrix, SVector};

pub type Vector7 = [f64; 7];
pub type Mat7 = SMatrix<f64, 7, 7>;

pub const X1: usize = 0;
pub const X2: usize = 1;
pub const X3: usize = 2;
pub const A0: usize = 3;
pub const A1: usize = 4;
pub const A2: usize = 5;
pub const A3: usize = 6;

const TOP: usize = (1 << 7) - 1;

/// Default absolute tolerance for calibration residuals on unit-volume planes.
pub const CALIBRATION_TOL: f64 = 1e-9;

/// A 3-form on a 7-dimensional coframe.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeForm7(Form);

/// A 4-form on a 7-dimensional coframe.
#[derive(Clone, Debug, PartialEq)]
pub struct FourForm7(Form);

macro_rules! form7 {
    ($name:ident, $deg:expr) => {
        impl $name {
            pub fn new(f: Form) -> Self {
                assert_eq!((f.dim(), f.degree()), (7, $deg));
                $name(f)
            }

            pub fn zero() -> Self {
                $name(Form::zero(7, $deg))
            }

            pub fn form(&self) -> &Form {
                &self.0
            }

            pub fn into_form(self) -> Form {
                self.0
            }

            /// Coefficient on the (possibly unsorted) index tuple, signed.
            pub fn coeff(&self, idx: &[usize]) -> f64 {
                self.0.coeff(idx)
            }

            pub fn eval(&self, vs: &[&Vector7]) -> f64 {
                let v: Vec<&[f64]> = vs.iter().map(|x| &x[..]).collect();
                self.0.eval(&v)
            }

            pub fn scale(&self, s: f64) -> Self {
                $name(self.0.scale(s))
            }

            /// Sorted index tuples with their coefficients (all 35 entries).
            pub fn table(&self) -> Vec<(Vec<usize>, f64)> {
                self.0.masks().map(|m| (indices(m), self.0.coeff_mask(m))).collect()
            }
        }
    };
}

form7!(ThreeForm7, 3);
form7!(FourForm7, 4);

/// Metric induced by a positive 3-form, with the signed volume scale.
///
/// `volume_scale` is |s| where vol_φ = s · e^{0…6}; `orientation` is sign(s).
/// A negative orientation means the coframe order is opposite to the one
/// determined by φ (this happens for the invariant FHN coframe).
#[derive(Clone, Debug, PartialEq)]
pub struct Metric7 {
    pub matrix: Mat7,
    pub volume_scale: f64,
    pub orientation: f64,
}

impl Metric7 {
    pub fn euclidean() -> Self {
        Metric7 {
            matrix: Mat7::identity(),
            volume_scale: 1.0,
            orientation: 1.0,
        }
    }

    pub fn inverse(&self) -> Mat7 {
        self.matrix.try_inverse().expect("metric is invertible")
    }

    pub fn inner(&self, u: &Vector7, v: &Vector7) -> f64 {
        let (u, v) = (SVector::<f64, 7>::from_row_slice(u), SVector::<f64, 7>::from_row_slice(v));
        (u.transpose() * self.matrix * v)[0]
    }

    /// Signed coefficient of vol_φ on e^{0…6}.
    pub fn signed_volume(&self) -> f64 {
        self.orientation * self.volume_scale
    }
}

/// φ₀ = dx₁₂₃ + Σ dxᵢ∧Ωᵢ with Ωᵢ = da₀∧daᵢ − daⱼ∧da_k, (i,j,k) cyclic.
pub fn standard_phi0() -> ThreeForm7 {
    let mut f = Form::zero(7, 3);
    f.add_term(&[X1, X2, X3], 1.0);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        f.add_term(&[i, A0, A1 + i], 1.0);
        f.add_term(&[i, A1 + j, A1 + k], -1.0);
    }
    ThreeForm7(f)
}

/// ∗φ₀ = da₀₁₂₃ − Σ dxⱼ∧dx_k∧Ωᵢ.
pub fn standard_star_phi0() -> FourForm7 {
    let mut f = Form::zero(7, 4);
    f.add_term(&[A0, A1, A2, A3], 1.0);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        f.add_term(&[j, k, A0, A1 + i], -1.0);
        f.add_term(&[j, k, A1 + j, A1 + k], 1.0);
    }
    FourForm7(f)
}

/// The symmetric form B with (u⌟φ)∧(v⌟φ)∧φ = −6·B(u,v)·e^{0…6}.
pub fn phi_bilinear(phi: &ThreeForm7) -> Mat7 {
    let contractions: Vec<Form> = (0..7)
        .map(|i| {
            let mut e = [0.0; 7];
            e[i] = 1.0;
            phi.0.interior(&e)
        })
        .collect();
    let mut b = Mat7::zeros();
    for i in 0..7 {
        let ci_phi = contractions[i].wedge(&phi.0);
        for j in i..7 {
            let v = -contractions[j].wedge(&ci_phi).coeff_mask(TOP) / 6.0;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// Metric and volume of a G2 3-form: g = B / det(B)^{1/9}, vol = det(B)^{1/9} e^{0…6}.
///
/// A negative definite B is accepted: the odd root flips sign, g comes out
/// positive definite and the orientation is recorded as −1.
pub fn metric_from_phi(phi: &ThreeForm7) -> Result<Metric7> {
    let b = phi_bilinear(phi);
    let eig = nalgebra::SymmetricEigen::new(b).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return Err(Error::NotPositive);
    }
    let pos = eig.iter().all(|x| *x > 1e-12 * max);
    let neg = eig.iter().all(|x| *x < -1e-12 * max);
    if !pos && !neg {
        return Err(Error::NotPositive);
    }
    let det = b.determinant();
    let s = det.signum() * det.abs().powf(1.0 / 9.0);
    Ok(Metric7 {
        matrix: b / s,
        volume_scale: s.abs(),
        orientation: s.signum(),
    })
}

fn minor_det(m: &Mat7, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    let mut a = [[0.0f64; 7]; 7];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            a[r][c] = m[(i, j)];
        }
    }
    // Gaussian elimination with partial pivoting
    let mut det = 1.0;
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap()).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for cc in c..k {
                a[r][cc] -= f * a[c][cc];
            }
        }
    }
    det
}

/// Hodge star of a form of any degree with respect to (g, vol_φ).
///
/// Indices are raised with k×k minors of g⁻¹, then
/// ∗e^I = s · sign(I, Iᶜ) e^{Iᶜ}, s the signed volume coefficient, so that
/// ω∧∗ω = |ω|²_g vol_φ.
pub fn hodge_star(g: &Metric7, w: &Form) -> Form {
    assert_eq!(w.dim(), 7);
    let k = w.degree();
    let ginv = g.inverse();
    let s = g.signed_volume();
    let mut out = Form::zero(7, 7 - k);
    let masks: Vec<usize> = w.masks().collect();
    for &i in &masks {
        let ri = indices(i);
        let mut raised = 0.0;
        for (j, c) in w.terms() {
            raised += minor_det(&ginv, &ri, &indices(j)) * c;
        }
        if raised != 0.0 {
            let ic = TOP & !i;
            out.set_mask(ic, out.coeff_mask(ic) + s * wedge_sign(i, ic) * raised);
        }
    }
    out
}

pub fn hodge_star_phi(g: &Metric7, phi: &ThreeForm7) -> FourForm7 {
    FourForm7(hodge_star(g, &phi.0))
}

/// u × v defined by g(u×v, w) = φ(u,v,w).
pub fn cross_product(u: &Vector7, v: &Vector7, phi: &ThreeForm7, g: &Metric7) -> Vector7 {
    let lowered = phi.0.interior(u).interior(v);
    let w = SVector::<f64, 7>::from_fn(|b, _| lowered.coeff_mask(1 << b));
    let r = g.inverse() * w;
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = r[i];
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Calibration {
    Positive,
    Negative,
    NotCalibrated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneTest {
    pub calibration: Calibration,
    pub residual: f64,
}

/// Gram–Schmidt under g; returns the orthonormal vectors and the Gram
/// determinant relative to the product of squared lengths.
fn orthonormalize(vs: &[&Vector7], g: &Metric7) -> (Vec<Vector7>, f64) {
    let n = vs.len();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = g.inner(vs[i], vs[j]);
        }
    }
    let scale: f64 = (0..n).map(|i| gram[(i, i)]).product();
    let rel = if scale > 0.0 { gram.determinant() / scale } else { 0.0 };
    let mut out: Vec<Vector7> = Vec::with_capacity(n);
    for v in vs {
        let mut w = **v;
        for e in &out {
            let c = g.inner(&w, e);
            for i in 0..7 {
                w[i] -= c * e[i];
            }
        }
        let nrm = g.inner(&w, &w).max(0.0).sqrt();
        if nrm > 0.0 {
            for x in w.iter_mut() {
                *x /= nrm;
            }
        }
        out.push(w);
    }
    (out, rel)
}

fn one_form_norm(g: &Metric7, f: &Form) -> f64 {
    let v = SVector::<f64, 7>::from_fn(|b, _| f.coeff_mask(1 << b));
    (v.transpose() * g.inverse() * v)[0].max(0.0).sqrt()
}

pub fn is_associative_plane(u: &Vector7, v: &Vector7, w: &Vector7, phi: &ThreeForm7, star_phi: &FourForm7, g: &Metric7) -> Result<PlaneTest> {
    is_associative_plane_tol(u, v, w, phi, star_phi, g, CALIBRATION_TOL)
}

/// A 3-plane is associative iff ∗φ(a,b,c,·) = 0 on an orthonormal basis;
/// the residual is the g-norm of that 1-form.
pub fn is_associative_plane_tol(u: &Vector7, v: &Vector7, w: &Vector7, phi: &ThreeForm7, star_phi: &FourForm7, g: &Metric7, tol: f64) -> Result<PlaneTest> {
    let (on, rel) = orthonormalize(&[u, v, w], g);
    if rel < 1e-12 {
        return Err(Error::DegenerateTriple(rel));
    }
    let chi = star_phi.0.interior(&on[0]).interior(&on[1]).interior(&on[2]);
    let residual = one_form_norm(g, &chi);
    let calibration = if residual <= tol {
        if phi.eval(&[u, v, w]) > 0.0 {
            Calibration::Positive
        } else {
            Calibration::Negative
        }
    } else {
        Calibration::NotCalibrated
    };
    Ok(PlaneTest { calibration, residual })
}

pub fn is_coassociative_plane(u: &Vector7, v: &Vector7, w: &Vector7, z: &Vector7, phi: &ThreeForm7, g: &Metric7) -> Result<PlaneTest> {
    is_coassociative_plane_tol(u, v, w, z, phi, g, CALIBRATION_TOL)
}

/// A 4-plane is coassociative iff φ vanishes on it; the residual is the norm
/// of φ restricted to an orthonormal basis. The sign is that of ∗φ(u,v,w,z).
pub fn is_coassociative_plane_tol(u: &Vector7, v: &Vector7, w: &Vector7, z: &Vector7, phi: &ThreeForm7, g: &Metric7, tol: f64) -> Result<PlaneTest> {
    let (on, rel) = orthonormalize(&[u, v, w, z], g);
    if rel < 1e-12 {
        return Err(Error::DegenerateQuadruple(rel));
    }
    let triples = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let residual = triples
        .iter()
        .map(|t| phi.eval(&[&on[t[0]], &on[t[1]], &on[t[2]]]).powi(2))
        .sum::<f64>()
        .sqrt();
    let calibration = if residual <= tol {
        let star = hodge_star_phi(g, phi);
        if star.eval(&[u, v, w, z]) > 0.0 {
            Calibration::Positive
        } else {
            Calibration::Negative
        }
    } else {
        Calibration::NotCalibrated
    };
    Ok(PlaneTest { calibration, residual })
}

/// A g-orthonormal basis of the orthogonal complement of span(vs).
pub fn orthogonal_complement(vs: &[&Vector7], g: &Metric7) -> Vec<Vector7> {
    let (mut basis, _) = orthonormalize(vs, g);
    let k = basis.len();
    for i in 0..7 {
        let mut e = [0.0; 7];
        e[i] = 1.0;
        let mut w = e;
        for b in &basis {
            let c = g.inner(&w, b);
            for t in 0..7 {
                w[t] -= c * b[t];
            }
        }
        let n = g.inner(&w, &w).max(0.0).sqrt();
        if n > 1e-8 {
            for x in w.iter_mut() {
                *x /= n;
            }
            basis.push(w);
        }
        if basis.len() == 7 {
            break;
        }
    }
    basis.split_off(k)
}

/// The standard basis vector with index i.
pub fn unit(i: usize) -> Vector7 {
    let mut e = [0.0; 7];
    e[i] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi0_examples() {
        let phi = standard_phi0();
        assert_eq!(phi.eval(&[&unit(X1), &unit(X2), &unit(X3)]), 1.0);
        assert_eq!(phi.eval(&[&unit(X1), &unit(A0), &unit(A1)]), 1.0);
        assert_eq!(phi.eval(&[&unit(A0), &unit(A1), &unit(A2)]), 0.0);
    }

    #[test]
    fn star_phi0_examples() {
        let s = standard_star_phi0();
        assert_eq!(s.eval(&[&unit(A0), &unit(A1), &unit(A2), &unit(A3)]), 1.0);
        assert_eq!(s.eval(&[&unit(X2), &unit(X3), &unit(A0), &unit(A1)]), -1.0);
        assert_eq!(s.eval(&[&unit(X1), &unit(X2), &unit(X3), &unit(A0)]), 0.0);
    }

    #[test]
    fn degenerate_form_is_rejected() {
        let f = ThreeForm7::new(Form::basis(7, &[X1, X2, X3]));
        assert_eq!(metric_from_phi(&f), Err(Error::NotPositive));
    }

    #[test]
    fn cross_product_examples() {
        let phi = standard_phi0();
        let g = Metric7::euclidean();
        assert_eq!(cross_product(&unit(X1), &unit(X2), &phi, &g), unit(X3));
        assert_eq!(cross_product(&unit(X1), &unit(A0), &phi, &g), unit(A1));
        let u = [0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.7];
        assert!(cross_product(&u, &u, &phi, &g).iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn plane_examples() {
        let (phi, star, g) = (standard_phi0(), standard_star_phi0(), Metric7::euclidean());
        let t = is_associative_plane(&unit(X1), &unit(X2), &unit(X3), &phi, &star, &g).unwrap();
        assert_eq!(t.calibration, Calibration::Positive);
        let t = is_associative_plane(&unit(X1), &unit(A0), &unit(A1), &phi, &star, &g).unwrap();
        assert_eq!(t.calibration, Calibration::Positive);
        let t = is_associative_plane(&unit(A0), &unit(A1), &unit(A2), &phi, &star, &g).unwrap();
        assert_eq!(t.calibration, Calibration::NotCalibrated);
        assert!(t.residual > 0.5);

        let t = is_coassociative_plane(&unit(A0), &unit(A1), &unit(A2), &unit(A3), &phi, &g).unwrap();
        assert_eq!(t.calibration, Calibration::Positive);
        let t = is_coassociative_plane(&unit(X2), &unit(X3), &unit(A0), &unit(A1), &phi, &g).unwrap();
        assert_eq!(t.calibration, Calibration::Negative);
        let t = is_coassociative_plane(&unit(X1), &unit(X2), &unit(X3), &unit(A0), &phi, &g).unwrap();
        assert_eq!(t.calibration, Calibration::NotCalibrated);
    }

    #[test]
    fn degenerate_planes() {
        let (phi, star, g) = (standard_phi0(), standard_star_phi0(), Metric7::euclidean());
        let r = is_associative_plane(&unit(X1), &unit(X2), &unit(X1), &phi, &star, &g);
        assert!(matches!(r, Err(Error::DegenerateTriple(_))));
        let r = is_coassociative_plane(&unit(X1), &unit(X2), &unit(X3), &unit(X3), &phi, &g);
        assert!(matches!(r, Err(Error::DegenerateQuadruple(_))));
    }
}

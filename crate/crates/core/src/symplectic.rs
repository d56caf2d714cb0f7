//! Linear symplectic algebra on ℝ²ⁿ with block ordering `(q, p)`.
//!
//! The form is `ω(u, v) = uᵀ J v` with `J = [[0, −I], [I, 0]]`, i.e.
//! `ω = Σ dpᵢ ∧ dqᵢ`. A matrix `M` is symplectic when `MᵀJM = J`.

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs};
use crate::tol::Tolerances;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The standard structure matrix `J` of size `2n`.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

fn half_dim(rows: usize, what: &str) -> Result<usize> {
    if rows == 0 || rows % 2 != 0 {
        return Err(Error::Dimension(format!("{what}: dimension {rows} is not even and positive")));
    }
    Ok(rows / 2)
}

/// `ω(u, v) = Σ (p_u·q_v − q_u·p_v)`.
pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!("omega: {} vs {}", u.len(), v.len())));
    }
    let n = half_dim(u.len(), "omega")?;
    Ok((0..n).map(|i| u[n + i] * v[i] - u[i] * v[n + i]).sum())
}

/// Max entry of `MᵀJM − J`.
pub fn symplectic_residual(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    let n = half_dim(m.nrows(), "symplectic_residual")?;
    let j = standard_j(n);
    Ok(max_abs(&(m.transpose() * &j * m - j)))
}

pub fn is_symplectic(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(symplectic_residual(m)? <= tol)
}

/// A validated symplectic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    m: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().symp)
    }

    pub fn with_tolerance(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let residual = symplectic_residual(&m)?;
        if residual > tol {
            return Err(Error::NotSymplectic { residual, tol });
        }
        Ok(SymplecticMatrix { n: m.nrows() / 2, m })
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        SymplecticMatrix { n: m.nrows() / 2, m }
    }

    pub fn identity(n: usize) -> Self {
        SymplecticMatrix { n, m: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix { n: self.n, m: &self.m * &other.m }
    }

    /// `M⁻¹ = −J Mᵀ J`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let j = standard_j(self.n);
        SymplecticMatrix { n: self.n, m: -(&j * self.m.transpose() * &j) }
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.m).unwrap_or(f64::INFINITY)
    }
}

/// A basis (as columns) of a Lagrangian subspace of ℝ²ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianFrame {
    n: usize,
    cols: DMatrix<f64>,
}

impl LagrangianFrame {
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(cols, &Tolerances::default())
    }

    pub fn with_tolerances(cols: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let n = half_dim(cols.nrows(), "LagrangianFrame")?;
        if cols.ncols() != n {
            return Err(Error::Dimension(format!(
                "frame must be {}x{}, got {}x{}",
                2 * n,
                n,
                cols.nrows(),
                cols.ncols()
            )));
        }
        let sv = cols.singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smax == 0.0 || smin < tol.rank * smax {
            return Err(Error::RankDeficient(format!("singular values {smin:e}..{smax:e}")));
        }
        let o = linalg::orthonormalize(&cols);
        let residual = max_abs(&(o.transpose() * standard_j(n) * &o));
        if residual > tol.lagr {
            return Err(Error::NotLagrangian { residual, tol: tol.lagr });
        }
        Ok(LagrangianFrame { n, cols })
    }

    pub(crate) fn new_unchecked(cols: DMatrix<f64>) -> Self {
        LagrangianFrame { n: cols.ncols(), cols }
    }

    /// The fiber `{0} × ℝⁿ`.
    pub fn vertical(n: usize) -> Self {
        let mut c = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            c[(n + i, i)] = 1.0;
        }
        LagrangianFrame { n, cols: c }
    }

    /// The zero section `ℝⁿ × {0}`.
    pub fn horizontal(n: usize) -> Self {
        let mut c = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            c[(i, i)] = 1.0;
        }
        LagrangianFrame { n, cols: c }
    }

    /// `{(q, S q)}` for symmetric `S`: frame `[I; S]`.
    pub fn graph(s: &DMatrix<f64>) -> Result<Self> {
        let n = check_symmetric(s)?;
        let mut c = DMatrix::zeros(2 * n, n);
        c.view_mut((0, 0), (n, n)).fill_with_identity();
        c.view_mut((n, 0), (n, n)).copy_from(s);
        Ok(LagrangianFrame { n, cols: c })
    }

    /// `{(S p, p)}` for symmetric `S`: frame `[S; I]`, a graph over the fiber.
    pub fn fiber_graph(s: &DMatrix<f64>) -> Result<Self> {
        let n = check_symmetric(s)?;
        let mut c = DMatrix::zeros(2 * n, n);
        c.view_mut((0, 0), (n, n)).copy_from(s);
        c.view_mut((n, 0), (n, n)).fill_with_identity();
        Ok(LagrangianFrame { n, cols: c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.cols
    }

    /// Orthonormal frame of the same subspace.
    pub fn orthonormal(&self) -> LagrangianFrame {
        LagrangianFrame { n: self.n, cols: linalg::orthonormalize(&self.cols) }
    }

    pub fn apply(&self, m: &SymplecticMatrix) -> Result<LagrangianFrame> {
        if m.n() != self.n {
            return Err(Error::Dimension(format!("{}-dof map on {}-dof frame", m.n(), self.n)));
        }
        Ok(LagrangianFrame { n: self.n, cols: m.matrix() * &self.cols })
    }

    /// Max entry of `FᵀJF` for the orthonormalized frame.
    pub fn isotropy_residual(&self) -> f64 {
        let o = linalg::orthonormalize(&self.cols);
        max_abs(&(o.transpose() * standard_j(self.n) * &o))
    }
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<usize> {
    if s.nrows() != s.ncols() || s.nrows() == 0 {
        return Err(Error::Dimension(format!("expected square matrix, got {}x{}", s.nrows(), s.ncols())));
    }
    let asym = max_abs(&(s - s.transpose()));
    if asym > 1e-12 * (1.0 + max_abs(s)) {
        return Err(Error::Invalid(format!("matrix not symmetric (asymmetry {asym:e})")));
    }
    Ok(s.nrows())
}

/// The form `(−ω) ⊕ ω` on ℝ²ⁿ × ℝ²ⁿ. With this orientation the graph of a
/// positive path in Sp(2n) crosses the diagonal positively.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DoubleForm {
    pub n: usize,
}

impl DoubleForm {
    pub fn eval(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let d = 2 * self.n;
        if u.len() != 2 * d || v.len() != 2 * d {
            return Err(Error::Dimension(format!("double form on ℝ^{} got {}", 2 * d, u.len())));
        }
        let (u1, u2) = (u.rows(0, d).into_owned(), u.rows(d, d).into_owned());
        let (v1, v2) = (v.rows(0, d).into_owned(), v.rows(d, d).into_owned());
        Ok(omega(&u2, &v2)? - omega(&u1, &v1)?)
    }

    /// Structure matrix `(−J) ⊕ J`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = 2 * self.n;
        let j = standard_j(self.n);
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&(-&j));
        m.view_mut((d, d), (d, d)).copy_from(&j);
        m
    }

    /// Orthogonal symplectomorphism onto the standard 2n-dof space:
    /// `((q₁, p₁), (q₂, p₂)) ↦ ((q₁, q₂), (−p₁, p₂))`.
    pub fn to_standard(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut t = DMatrix::zeros(4 * n, 4 * n);
        for i in 0..n {
            t[(i, i)] = 1.0; // q1
            t[(n + i, 2 * n + i)] = 1.0; // q2
            t[(2 * n + i, n + i)] = -1.0; // -p1
            t[(3 * n + i, 3 * n + i)] = 1.0; // p2
        }
        t
    }
}

/// A Lagrangian frame of `(ℝ⁴ⁿ, (−ω) ⊕ ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleFrame {
    n: usize,
    cols: DMatrix<f64>,
}

impl DoubleFrame {
    /// The diagonal `Δ = {(v, v)}`.
    pub fn diagonal(n: usize) -> Self {
        let d = 2 * n;
        let mut c = DMatrix::zeros(2 * d, d);
        for i in 0..d {
            c[(i, i)] = 1.0;
            c[(d + i, i)] = 1.0;
        }
        DoubleFrame { n, cols: c }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.cols
    }

    /// The same subspace as a Lagrangian frame of the standard 2n-dof space.
    pub fn to_standard(&self) -> LagrangianFrame {
        let t = DoubleForm { n: self.n }.to_standard();
        LagrangianFrame::new_unchecked(t * &self.cols)
    }

    pub fn isotropy_residual(&self) -> f64 {
        let o = linalg::orthonormalize(&self.cols);
        max_abs(&(o.transpose() * DoubleForm { n: self.n }.matrix() * &o))
    }
}

/// `graph Φ = {(v, Φv)}` with frame `[I; Φ]`.
pub fn graph_of_symplectic(m: &SymplecticMatrix) -> DoubleFrame {
    let d = 2 * m.n();
    let mut c = DMatrix::zeros(2 * d, d);
    c.view_mut((0, 0), (d, d)).fill_with_identity();
    c.view_mut((d, 0), (d, d)).copy_from(m.matrix());
    DoubleFrame { n: m.n(), cols: c }
}

/// Symmetric `dim × dim` matrix with entries uniform in `[−scale, scale]`.
pub fn random_symmetric<R: Rng>(dim: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let x = rng.gen_range(-scale..=scale);
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    s
}

/// `exp(J S)` for a random symmetric `S`, drawn from a seeded generator.
pub fn random_symplectic(n: usize, seed: u64) -> SymplecticMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_symplectic_with(n, 1.0, &mut rng)
}

pub fn random_symplectic_with<R: Rng>(n: usize, scale: f64, rng: &mut R) -> SymplecticMatrix {
    let s = random_symmetric(2 * n, scale, rng);
    let m = (standard_j(n) * s).exp();
    SymplecticMatrix::new_unchecked(m)
}

/// Newton projection of a nearly symplectic matrix onto Sp(2n).
///
/// Each step right-multiplies by `I + ½ J E` with `E = MᵀJM − J`, which
/// removes the defect to first order. Inputs with residual above 0.1 are
/// rejected.
pub fn resymplectify(m: &DMatrix<f64>) -> Result<SymplecticMatrix> {
    let mut r = symplectic_residual(m)?;
    if !r.is_finite() || r > 0.1 {
        return Err(Error::Resymplectify(format!("input residual {r:e} exceeds 0.1")));
    }
    let n = m.nrows() / 2;
    let j = standard_j(n);
    let id = DMatrix::<f64>::identity(2 * n, 2 * n);
    let scale = max_abs(m).max(1.0);
    let floor = 4.0 * f64::EPSILON * scale * scale;
    let mut cur = m.clone();
    for _ in 0..30 {
        if r <= floor {
            break;
        }
        let e = cur.transpose() * &j * &cur - &j;
        let next = &cur * (&id + &j * &e * 0.5);
        let rn = symplectic_residual(&next)?;
        if rn >= r {
            break;
        }
        cur = next;
        r = rn;
    }
    Ok(SymplecticMatrix::new_unchecked(cur))
}

/// Block embedding of two frames into the product space with interleaved
/// coordinates `(q', q'', p', p'')`.
pub fn direct_sum_frame(a: &LagrangianFrame, b: &LagrangianFrame) -> LagrangianFrame {
    LagrangianFrame::new_unchecked(direct_sum_columns(a.columns(), b.columns(), a.n(), b.n()))
}

pub(crate) fn direct_sum_columns(a: &DMatrix<f64>, b: &DMatrix<f64>, na: usize, nb: usize) -> DMatrix<f64> {
    let n = na + nb;
    let (ka, kb) = (a.ncols(), b.ncols());
    let mut c = DMatrix::zeros(2 * n, ka + kb);
    for j in 0..ka {
        for i in 0..na {
            c[(i, j)] = a[(i, j)];
            c[(n + i, j)] = a[(na + i, j)];
        }
    }
    for j in 0..kb {
        for i in 0..nb {
            c[(na + i, ka + j)] = b[(i, j)];
            c[(n + na + i, ka + j)] = b[(nb + i, j)];
        }
    }
    c
}

/// `A ⊕ B` acting on interleaved coordinates.
pub fn direct_sum_matrix(a: &SymplecticMatrix, b: &SymplecticMatrix) -> SymplecticMatrix {
    let (na, nb) = (a.n(), b.n());
    let n = na + nb;
    let idx_a = |i: usize| if i < na { i } else { n + (i - na) };
    let idx_b = |i: usize| if i < nb { na + i } else { n + na + (i - nb) };
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 * na {
        for j in 0..2 * na {
            m[(idx_a(i), idx_a(j))] = a.matrix()[(i, j)];
        }
    }
    for i in 0..2 * nb {
        for j in 0..2 * nb {
            m[(idx_b(i), idx_b(j))] = b.matrix()[(i, j)];
        }
    }
    SymplecticMatrix::new_unchecked(m)
}

/// Random Lagrangian frame `Ψ · vertical` with `Ψ` drawn like [`random_symplectic_with`].
pub fn random_lagrangian<R: Rng>(n: usize, rng: &mut R) -> LagrangianFrame {
    let psi = random_symplectic_with(n, 1.0, rng);
    LagrangianFrame::new_unchecked(psi.matrix() * LagrangianFrame::vertical(n).columns())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_squares_to_minus_identity() {
        for n in 1..4 {
            let j = standard_j(n);
            assert_eq!(&j * &j, -DMatrix::<f64>::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn omega_on_basis() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let f1 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(omega(&f1, &e1).unwrap(), 1.0);
        assert_eq!(omega(&e1, &f1).unwrap(), -1.0);
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(symplectic_residual(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn double_form_transport_is_symplectic() {
        for n in 1..4 {
            let f = DoubleForm { n };
            let t = f.to_standard();
            let j = standard_j(2 * n);
            assert!(max_abs(&(t.transpose() * j * &t - f.matrix())) < 1e-15);
        }
    }

    #[test]
    fn direct_sum_of_symplectic_is_symplectic() {
        let a = random_symplectic(1, 3);
        let b = random_symplectic(2, 4);
        assert!(direct_sum_matrix(&a, &b).residual() < 1e-10);
    }
}

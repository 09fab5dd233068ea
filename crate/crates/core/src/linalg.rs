//! Small dense complex linear algebra.
//!
//! Matrices are stored row-major. Everything here is sized for the handful of
//! dimensions quantum-information toy models need; there is no blocking or
//! SIMD, and the Hermitian eigensolver is a plain cyclic Jacobi iteration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<RawMatrix> for ComplexMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let data = raw.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::new(raw.rows, raw.cols, data)
    }
}

impl From<ComplexMatrix> for RawMatrix {
    fn from(m: ComplexMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Dimension("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from nested rows of complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    /// `|a><b|`
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                m.data[i * b.len() + j] = ai * bj.conj();
            }
        }
        m
    }

    /// Rank-one projector onto a state.
    pub fn projector(s: &PureState) -> Self {
        Self::outer(s.amplitudes(), s.amplitudes())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `self^dag * self`
    pub fn gram(&self) -> Self {
        self.adjoint()
            .matmul(self)
            .expect("adjoint dimensions always agree")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix sum shape mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            data: self.data.iter().map(|a| a * z).collect(),
            ..*self
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `<a| self |b>`
    pub fn sandwich(&self, a: &[C64], b: &[C64]) -> Result<C64> {
        let mb = self.apply(b)?;
        if a.len() != mb.len() {
            return Err(Error::Dimension("bra length mismatch".into()));
        }
        Ok(dot(a, &mb))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Eigenvalues are returned in ascending order together with
    /// the unitary whose columns are the matching eigenvectors.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let defect = self.hermiticity_defect();
        if defect > tol::STRUCTURAL {
            return Err(Error::NotPsd(format!("not Hermitian (defect {defect:e})")));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let scale = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let target = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);

        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.get(i, j).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let r = apq.norm();
                    if r <= target * 1e-3 {
                        continue;
                    }
                    let phase = apq / r;
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let theta = 0.5 * (2.0 * r).atan2(aqq - app);
                    let (s, c) = theta.sin_cos();
                    // W = diag(1, conj(phase)) * [[c, s], [-s, c]]
                    let w = [
                        [C64::new(c, 0.0), C64::new(s, 0.0)],
                        [-phase.conj() * s, phase.conj() * c],
                    ];
                    rotate(&mut a, &mut v, p, q, &w);
                    // Drop rounding residue on the annihilated pair.
                    a.set(p, q, ZERO);
                    a.set(q, p, ZERO);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a.get(i, i).re.total_cmp(&a.get(j, j).re));
        let values = order.iter().map(|&i| a.get(i, i).re).collect();
        let mut vecs = Self::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            for row in 0..n {
                vecs.set(row, col, v.get(row, src));
            }
        }
        Ok((values, vecs))
    }

    /// Apply `f` to the eigenvalues of a Hermitian matrix.
    fn hermitian_function(vals: &[f64], vecs: &Self, f: impl Fn(f64) -> f64) -> Self {
        let n = vals.len();
        let mut out = Self::zeros(n, n);
        for (k, &lam) in vals.iter().enumerate() {
            let fl = f(lam);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = vecs.get(i, k) * fl;
                for j in 0..n {
                    out.data[i * n + j] += vik * vecs.get(j, k).conj();
                }
            }
        }
        out
    }

    /// Principal square root of a positive semidefinite matrix.
    pub fn psd_sqrt(&self) -> Result<Self> {
        let (vals, vecs) = self.psd_eigen()?;
        Ok(Self::hermitian_function(&vals, &vecs, |x| x.max(0.0).sqrt()))
    }

    /// Inverse square root of a positive definite matrix.
    pub fn pd_inv_sqrt(&self) -> Result<Self> {
        let (vals, vecs) = self.psd_eigen()?;
        if let Some(&min) = vals.first() {
            if min <= tol::STRUCTURAL {
                return Err(Error::NotPsd(format!(
                    "singular matrix (smallest eigenvalue {min:e})"
                )));
            }
        }
        Ok(Self::hermitian_function(&vals, &vecs, |x| 1.0 / x.sqrt()))
    }

    fn psd_eigen(&self) -> Result<(Vec<f64>, Self)> {
        if !self.is_square() {
            return Err(Error::NotPsd(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let (vals, vecs) = self.hermitian_eigen()?;
        if let Some(&min) = vals.first() {
            if min < -tol::STRUCTURAL {
                return Err(Error::NotPsd(format!("eigenvalue {min:e} below zero")));
            }
        }
        Ok((vals, vecs))
    }
}

/// Apply the 2x2 unitary `w` on indices `(p, q)`: `a <- w^dag a w`, `v <- v w`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, w: &[[C64; 2]; 2]) {
    let n = a.rows;
    for i in 0..n {
        let (x, y) = (a.get(i, p), a.get(i, q));
        a.set(i, p, x * w[0][0] + y * w[1][0]);
        a.set(i, q, x * w[0][1] + y * w[1][1]);
        let (x, y) = (v.get(i, p), v.get(i, q));
        v.set(i, p, x * w[0][0] + y * w[1][0]);
        v.set(i, q, x * w[0][1] + y * w[1][1]);
    }
    for j in 0..n {
        let (x, y) = (a.get(p, j), a.get(q, j));
        a.set(p, j, w[0][0].conj() * x + w[1][0].conj() * y);
        a.set(q, j, w[0][1].conj() * x + w[1][1].conj() * y);
    }
}

/// `sum_i conj(a_i) b_i`
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PureState {
    amps: Vec<C64>,
}

impl TryFrom<Vec<[f64; 2]>> for PureState {
    type Error = Error;

    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self> {
        PureState::new(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl From<PureState> for Vec<[f64; 2]> {
    fn from(s: PureState) -> Self {
        s.amps.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl PureState {
    /// Wrap amplitudes that are already normalised.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_len(amps.len())?;
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::State("non-finite amplitude".into()));
        }
        let n = norm(&amps);
        if (n - 1.0).abs() > tol::STRUCTURAL {
            return Err(Error::State(format!("norm {n} is not 1")));
        }
        Ok(Self { amps })
    }

    /// Normalise an arbitrary nonzero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        check_len(amps.len())?;
        let n = norm(&amps);
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::State("cannot normalise a null vector".into()));
        }
        Ok(Self {
            amps: amps.into_iter().map(|z| z / n).collect(),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|k>` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::Dimension(format!("basis index {k} out of range for d={d}")));
        }
        let mut amps = vec![ZERO; d];
        amps[k] = ONE;
        Self::new(amps)
    }

    /// `cos(theta)|0> + sin(theta)|1>`
    pub fn real_qubit(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            amps: vec![C64::new(c, 0.0), C64::new(s, 0.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of states with dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(dot(&self.amps, &other.amps))
    }

    /// `|<self|other>|^2`
    pub fn overlap(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self { amps }
    }
}

/// Joint seal states live in `d_A * d_B`, so the cap is on each factor.
fn check_len(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension(format!("state of dimension {d} (need d >= 2)")));
    }
    if d > tol::MAX_DIM * tol::MAX_DIM {
        return Err(Error::Dimension(format!("dimension {d} exceeds the supported maximum")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn adjoint_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(id.adjoint(), id);

        let raise = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let lower = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(raise.adjoint(), lower);

        let m = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 0.0); 2]])
            .unwrap();
        assert_eq!(m.adjoint().get(0, 0), c(0.0, -1.0));
    }

    #[test]
    fn apply_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(id.apply(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(x.apply(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(), vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let d = ComplexMatrix::from_diag(&[c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(d.apply(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(), vec![c(2.0, 0.0), c(3.0, 0.0)]);
        assert!(matches!(d.apply(&[c(1.0, 0.0)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn inner_examples() {
        let zero = PureState::basis(2, 0).unwrap();
        let one = PureState::basis(2, 1).unwrap();
        let plus = PureState::real_qubit(std::f64::consts::FRAC_PI_4);
        assert_eq!(zero.inner(&zero).unwrap(), c(1.0, 0.0));
        assert_eq!(zero.inner(&one).unwrap(), c(0.0, 0.0));
        assert_abs_diff_eq!(zero.inner(&plus).unwrap().re, 0.5f64.sqrt(), epsilon = 1e-15);
        let three = PureState::basis(3, 0).unwrap();
        assert!(matches!(zero.inner(&three), Err(Error::Dimension(_))));
    }

    #[test]
    fn state_rejects_unnormalised() {
        assert!(PureState::from_real(&[1.0, 1.0]).is_err());
        assert!(PureState::normalized(vec![ZERO, ZERO]).is_err());
    }

    #[test]
    fn psd_sqrt_examples() {
        let id = ComplexMatrix::identity(2);
        assert!(id.psd_sqrt().unwrap().max_abs_diff(&id) < 1e-12);

        let d = ComplexMatrix::from_real_rows(&[&[4.0, 0.0], &[0.0, 9.0]]).unwrap();
        let r = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 3.0]]).unwrap();
        assert!(d.psd_sqrt().unwrap().max_abs_diff(&r) < 1e-12);

        let p = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert!(p.psd_sqrt().unwrap().max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects() {
        let neg = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        assert!(matches!(neg.psd_sqrt(), Err(Error::NotPsd(_))));
        let skew = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(skew.psd_sqrt(), Err(Error::NotPsd(_))));
    }

    #[test]
    fn eigen_of_pauli_y() {
        let y = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let (vals, vecs) = y.hermitian_eigen().unwrap();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-14);
        let v1: Vec<C64> = (0..2).map(|i| vecs.get(i, 1)).collect();
        let yv = y.apply(&v1).unwrap();
        for i in 0..2 {
            assert!((yv[i] - v1[i]).norm() < 1e-13);
        }
    }

    fn complex_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
            ComplexMatrix::new(n, n, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
        })
    }

    fn state(n: usize) -> impl Strategy<Value = PureState> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_filter_map("null vector", |v| {
                PureState::normalized(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).ok()
            })
    }

    proptest! {
        #[test]
        fn psd_sqrt_squares_back((n, a) in (2usize..=8).prop_flat_map(|n| (Just(n), complex_matrix(n)))) {
            let _ = n;
            let m = a.gram();
            let r = m.psd_sqrt().unwrap();
            prop_assert!(r.hermiticity_defect() < 1e-10);
            prop_assert!(r.matmul(&r).unwrap().max_abs_diff(&m) < 1e-10);
        }

        #[test]
        fn inner_is_conjugate_symmetric((a, b) in (2usize..=6).prop_flat_map(|n| (state(n), state(n)))) {
            let ab = a.inner(&b).unwrap();
            let ba = b.inner(&a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-15);
            prop_assert!(ab.norm() <= 1.0 + 1e-10);
        }
    }
}

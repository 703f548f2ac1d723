//! Lie algebras by structure constants, inner products by Gram matrices,
//! and concrete matrix-group models for group-level checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::linalg;

/// Relative tolerance for the Jacobi identity check.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Residual gate for recovering tangent coordinates by least squares.
pub const TANGENT_RESIDUAL_TOL: f64 = 1e-10;

/// A finite-dimensional real Lie algebra given by structure constants
/// `C[k][i][j]` with `[e_i, e_j] = sum_k C[k][i][j] e_k`.
///
/// Antisymmetry in (i, j) is enforced at construction: the constants are
/// taken from the upper triangle and mirrored.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    dim: usize,
    /// `structure[k]` is the n x n matrix with entry (i, j) = C^k_{ij}.
    structure: Vec<DMatrix<f64>>,
    name: Option<String>,
}

impl LieAlgebraSpec {
    /// Build from a bracket table: entries `(i, j, coeffs)` mean
    /// `[e_i, e_j] = sum_k coeffs[k] e_k` with `i < j` (0-based).
    /// Unlisted pairs bracket to zero.
    pub fn from_brackets(
        dim: usize,
        brackets: &[(usize, usize, Vec<f64>)],
        name: Option<String>,
    ) -> Result<Self> {
        let mut structure = vec![DMatrix::zeros(dim, dim); dim];
        for (i, j, coeffs) in brackets {
            if *i >= dim {
                return Err(CoreError::IndexOutOfRange { index: *i, dim });
            }
            if *j >= dim {
                return Err(CoreError::IndexOutOfRange { index: *j, dim });
            }
            if coeffs.len() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: coeffs.len(),
                });
            }
            for (k, &c) in coeffs.iter().enumerate() {
                if !c.is_finite() {
                    return Err(CoreError::NonFinite);
                }
                structure[k][(*i, *j)] += c;
                structure[k][(*j, *i)] -= c;
            }
        }
        let alg = Self {
            dim,
            structure,
            name,
        };
        let residual = alg.jacobi_residual();
        if residual > JACOBI_REL_TOL * (1.0 + alg.max_constant()) {
            return Err(CoreError::JacobiViolation { residual });
        }
        Ok(alg)
    }

    /// Construction bypassing the Jacobi gate, for negative tests.
    pub fn from_brackets_unchecked(
        dim: usize,
        brackets: &[(usize, usize, Vec<f64>)],
        name: Option<String>,
    ) -> Self {
        let mut structure = vec![DMatrix::zeros(dim, dim); dim];
        for (i, j, coeffs) in brackets {
            for (k, &c) in coeffs.iter().enumerate() {
                structure[k][(*i, *j)] += c;
                structure[k][(*j, *i)] -= c;
            }
        }
        Self {
            dim,
            structure,
            name,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn max_constant(&self) -> f64 {
        self.structure
            .iter()
            .map(|m| m.amax())
            .fold(0.0, f64::max)
    }

    /// Coordinates of `[e_i, e_j]`.
    pub fn basis_bracket(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.structure.iter().map(|c| c[(i, j)]))
    }

    /// `[x, y]` in basis coordinates.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if y.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.dim,
            self.structure.iter().map(|c| (x.transpose() * c * y)[0]),
        ))
    }

    /// Max-norm residual of `[[x,y],z] + [[y,z],x] + [[z,x],y]` over all
    /// basis triples. Zero for a genuine Lie algebra.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let basis: Vec<DVector<f64>> = (0..n)
            .map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }))
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = self
                        .bracket(&self.bracket(&basis[i], &basis[j]).unwrap(), &basis[k])
                        .unwrap();
                    let b = self
                        .bracket(&self.bracket(&basis[j], &basis[k]).unwrap(), &basis[i])
                        .unwrap();
                    let c = self
                        .bracket(&self.bracket(&basis[k], &basis[i]).unwrap(), &basis[j])
                        .unwrap();
                    worst = worst.max((a + b + c).amax());
                }
            }
        }
        worst
    }
}

/// A positive-definite inner product on the algebra, stored as its
/// Gram matrix in the chosen basis.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    gram: DMatrix<f64>,
}

impl InnerProduct {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(CoreError::DimensionMismatch {
                expected: gram.nrows(),
                got: gram.ncols(),
            });
        }
        if (&gram - gram.transpose()).amax() != 0.0 {
            return Err(CoreError::NotSymmetric);
        }
        let eig = gram.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        let max_eig = eig.eigenvalues.max();
        if min_eig <= 1e-12 * max_eig {
            return Err(CoreError::NotPositiveDefinite { min_eig });
        }
        Ok(Self { gram })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            gram: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Uniform rescaling by `factor > 0`, used by the admissibility scaling.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gram: &self.gram * factor,
        }
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        let n = self.dim();
        if x.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if y.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        Ok((x.transpose() * &self.gram * y)[0])
    }

    pub fn norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0).sqrt())
    }
}

/// Value at the identity of a left-invariant vector field, in algebra
/// coordinates. Admissibility against the metric is certified elsewhere.
#[derive(Debug, Clone)]
pub struct InvariantVectorField {
    coords: DVector<f64>,
}

impl InvariantVectorField {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::NonFinite);
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    /// Unit upper-triangular 3x3 (Heisenberg).
    Heisenberg,
    /// I + last-column embedding of R^n; unipotent.
    Abelian,
    /// Rotation group, elements via Rodrigues only.
    So3,
}

/// A faithful matrix model of a group integrating one of the catalog
/// algebras. Used for group-level verification of left invariance and
/// automorphism lifts.
#[derive(Debug, Clone)]
pub struct MatrixGroupModel {
    kind: ModelKind,
    name: String,
    embed_dim: usize,
    basis_mats: Vec<DMatrix<f64>>,
    log_available: bool,
}

impl MatrixGroupModel {
    /// Strictly upper-triangular 3x3 model of the Heisenberg algebra:
    /// E1 = e12, E2 = e23, E3 = e13, so [E1, E2] = E3.
    pub fn heisenberg3() -> Self {
        let mut e1 = DMatrix::zeros(3, 3);
        e1[(0, 1)] = 1.0;
        let mut e2 = DMatrix::zeros(3, 3);
        e2[(1, 2)] = 1.0;
        let mut e3 = DMatrix::zeros(3, 3);
        e3[(0, 2)] = 1.0;
        Self {
            kind: ModelKind::Heisenberg,
            name: "heisenberg3".into(),
            embed_dim: 3,
            basis_mats: vec![e1, e2, e3],
            log_available: true,
        }
    }

    /// Abelian R^n as unipotent (n+1)x(n+1) matrices: E_i = e_{i,n+1}.
    /// All basis products vanish, so exp(A) = I + A.
    pub fn abelian(n: usize) -> Self {
        let m = n + 1;
        let basis_mats = (0..n)
            .map(|i| {
                let mut e = DMatrix::zeros(m, m);
                e[(i, n)] = 1.0;
                e
            })
            .collect();
        Self {
            kind: ModelKind::Abelian,
            name: format!("abelian{n}"),
            embed_dim: m,
            basis_mats,
            log_available: true,
        }
    }

    /// so(3) with the cross-product basis; group elements only through the
    /// Rodrigues exponential, no logarithm.
    pub fn so3() -> Self {
        let l1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let l2 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let l3 = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        Self {
            kind: ModelKind::So3,
            name: "so3".into(),
            embed_dim: 3,
            basis_mats: vec![l1, l2, l3],
            log_available: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis_mats.len()
    }

    pub fn basis_mats(&self) -> &[DMatrix<f64>] {
        &self.basis_mats
    }

    pub fn log_available(&self) -> bool {
        self.log_available
    }

    pub fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.embed_dim, self.embed_dim)
    }

    /// Max-norm deviation of the model brackets from the structure constants.
    pub fn bracket_fidelity(&self, alg: &LieAlgebraSpec) -> f64 {
        let n = self.algebra_dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let comm = &self.basis_mats[i] * &self.basis_mats[j]
                    - &self.basis_mats[j] * &self.basis_mats[i];
                let coords = alg.basis_bracket(i, j);
                let mut expected = DMatrix::zeros(self.embed_dim, self.embed_dim);
                for (k, e) in self.basis_mats.iter().enumerate() {
                    expected += e * coords[k];
                }
                worst = worst.max((comm - expected).amax());
            }
        }
        worst
    }

    /// Structural membership test for the built-in model groups.
    pub fn contains(&self, g: &DMatrix<f64>) -> bool {
        if g.nrows() != self.embed_dim || g.ncols() != self.embed_dim {
            return false;
        }
        let m = self.embed_dim;
        match self.kind {
            ModelKind::Heisenberg => {
                for i in 0..m {
                    for j in 0..m {
                        if i == j {
                            if (g[(i, j)] - 1.0).abs() > 1e-12 {
                                return false;
                            }
                        } else if i > j && g[(i, j)].abs() > 1e-12 {
                            return false;
                        }
                    }
                }
                true
            }
            ModelKind::Abelian => {
                let n = m - 1;
                for i in 0..m {
                    for j in 0..m {
                        let expected_identity = if i == j { 1.0 } else { 0.0 };
                        if j == n && i < n {
                            continue; // free entries
                        }
                        if (g[(i, j)] - expected_identity).abs() > 1e-12 {
                            return false;
                        }
                    }
                }
                true
            }
            ModelKind::So3 => {
                let orth = (g.transpose() * g - DMatrix::identity(m, m)).amax();
                orth <= 1e-9 && (g.determinant() - 1.0).abs() <= 1e-9
            }
        }
    }

    /// Left translation `L_g(h) = g h`.
    pub fn left_translate(&self, g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !self.contains(g) {
            return Err(CoreError::NotGroupElement {
                model: self.name.clone(),
            });
        }
        Ok(g * h)
    }

    /// Differential of left translation: `dL_g(Y) = g Y` on the matrix model.
    pub fn differential_left_translate(
        &self,
        g: &DMatrix<f64>,
        y: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        if !self.contains(g) {
            return Err(CoreError::NotGroupElement {
                model: self.name.clone(),
            });
        }
        Ok(g * y)
    }

    /// Coordinates of `h^{-1} Y_h` in the algebra basis, by least squares.
    ///
    /// Fails if `Y_h` is not tangent at `h` (residual above the gate).
    pub fn pull_to_identity(&self, h: &DMatrix<f64>, y_h: &DMatrix<f64>) -> Result<DVector<f64>> {
        if !self.contains(h) {
            return Err(CoreError::NotGroupElement {
                model: self.name.clone(),
            });
        }
        let z = h
            .clone()
            .lu()
            .solve(y_h)
            .ok_or_else(|| CoreError::NotGroupElement {
                model: self.name.clone(),
            })?;
        let m2 = self.embed_dim * self.embed_dim;
        let n = self.algebra_dim();
        let mut design = DMatrix::zeros(m2, n);
        for (j, e) in self.basis_mats.iter().enumerate() {
            design.set_column(j, &linalg::vec_of(e));
        }
        let rhs = linalg::vec_of(&z);
        let svd = design.clone().svd(true, true);
        let coords = svd
            .solve(&rhs, 1e-14)
            .map_err(|_| CoreError::NotTangent { residual: f64::NAN })?;
        let residual = (&design * &coords - &rhs).amax();
        if residual > TANGENT_RESIDUAL_TOL * (1.0 + z.amax()) {
            return Err(CoreError::NotTangent { residual });
        }
        Ok(coords)
    }

    /// The algebra element `sum_i x_i E_i` as an embedded matrix.
    pub fn algebra_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.algebra_dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.algebra_dim(),
                got: x.len(),
            });
        }
        let mut out = DMatrix::zeros(self.embed_dim, self.embed_dim);
        for (i, e) in self.basis_mats.iter().enumerate() {
            out += e * x[i];
        }
        Ok(out)
    }

    /// Group element `exp(sum_i x_i E_i)`.
    ///
    /// Polynomial for the nilpotent models, Rodrigues closed form for so3.
    pub fn exp_coords(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let a = self.algebra_matrix(x)?;
        match self.kind {
            ModelKind::Heisenberg | ModelKind::Abelian => {
                linalg::exp_nilpotent(&a).ok_or_else(|| CoreError::NotGroupElement {
                    model: self.name.clone(),
                })
            }
            ModelKind::So3 => {
                let theta = x.norm();
                let eye = DMatrix::identity(3, 3);
                if theta < 1e-300 {
                    return Ok(eye);
                }
                let k = &a / theta;
                Ok(eye + &k * theta.sin() + (&k * &k) * (1.0 - theta.cos()))
            }
        }
    }

    /// Algebra coordinates of `log g`, polynomial on nilpotent models only.
    pub fn log_coords(&self, g: &DMatrix<f64>) -> Result<DVector<f64>> {
        if !self.log_available {
            return Err(CoreError::LogUnavailable {
                model: self.name.clone(),
            });
        }
        if !self.contains(g) {
            return Err(CoreError::NotGroupElement {
                model: self.name.clone(),
            });
        }
        let a = linalg::log_unipotent(g).ok_or_else(|| CoreError::NotGroupElement {
            model: self.name.clone(),
        })?;
        self.pull_to_identity(&self.identity(), &a)
    }
}

/// Catalog entry: the algebra together with its matrix model, when one
/// is built in.
pub struct CatalogEntry {
    pub algebra: LieAlgebraSpec,
    pub model: Option<MatrixGroupModel>,
}

/// Names of the built-in algebras.
pub const CATALOG_NAMES: [&str; 4] = ["heisenberg3", "abelian3", "so3", "aff1"];

/// Look up a built-in algebra by name.
pub fn catalog(name: &str) -> Option<CatalogEntry> {
    match name {
        "heisenberg3" => Some(CatalogEntry {
            algebra: LieAlgebraSpec::from_brackets(
                3,
                &[(0, 1, vec![0.0, 0.0, 1.0])],
                Some("heisenberg3".into()),
            )
            .expect("catalog algebra"),
            model: Some(MatrixGroupModel::heisenberg3()),
        }),
        "abelian3" => Some(CatalogEntry {
            algebra: LieAlgebraSpec::from_brackets(3, &[], Some("abelian3".into()))
                .expect("catalog algebra"),
            model: Some(MatrixGroupModel::abelian(3)),
        }),
        "so3" => Some(CatalogEntry {
            algebra: LieAlgebraSpec::from_brackets(
                3,
                &[
                    (0, 1, vec![0.0, 0.0, 1.0]),
                    (1, 2, vec![1.0, 0.0, 0.0]),
                    (0, 2, vec![0.0, -1.0, 0.0]),
                ],
                Some("so3".into()),
            )
            .expect("catalog algebra"),
            model: Some(MatrixGroupModel::so3()),
        }),
        "aff1" => Some(CatalogEntry {
            algebra: LieAlgebraSpec::from_brackets(
                2,
                &[(0, 1, vec![0.0, 1.0])],
                Some("aff1".into()),
            )
            .expect("catalog algebra"),
            model: None,
        }),
        _ => None,
    }
}

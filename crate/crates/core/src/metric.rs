//! Evaluation of the left-invariant (alpha,beta)-metric
//! F(y) = |y|_g * phi(<X, y>_g / |y|_g) and numerical verification of
//! strong convexity through the fundamental tensor.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::lie::{InnerProduct, InvariantVectorField, LieAlgebraSpec, MatrixGroupModel};
use crate::phi::{max_admissible_b, PhiFunction, PhiKind};

/// Relative eigenvalue floor for the strong-convexity verdict.
pub const CONVEXITY_REL_FLOOR: f64 = 1e-8;

/// Relative asymmetry allowed in the finite-difference Hessian before
/// symmetrization.
pub const HESSIAN_ASYMMETRY_TOL: f64 = 1e-6;

/// An (alpha,beta)-structure on a Lie algebra: inner product, invariant
/// vector field and profile function, with its admissibility certificate.
#[derive(Debug, Clone)]
pub struct FinslerStructure {
    alg: LieAlgebraSpec,
    ip: InnerProduct,
    x_field: InvariantVectorField,
    phi: PhiFunction,
    /// cached |X|_g
    b: f64,
    /// regularity bound max_admissible_b(phi, 1e-6), when one exists
    bound: Option<f64>,
    admissible: bool,
}

impl FinslerStructure {
    /// Construct with the admissibility gate: |X|_g must stay below the
    /// certified regularity bound of phi. Inadmissible structures are
    /// rejected unless `allow_inadmissible` is set; structures whose phi
    /// can never be regular (kropina) are representable regardless and
    /// carry `admissible = false`.
    pub fn new(
        alg: LieAlgebraSpec,
        ip: InnerProduct,
        x_field: InvariantVectorField,
        phi: PhiFunction,
        allow_inadmissible: bool,
    ) -> Result<Self> {
        let n = alg.dim();
        if ip.dim() != n || x_field.dim() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: ip.dim().max(x_field.dim()),
            });
        }
        let b = ip.norm(x_field.coords())?;
        let bound = max_admissible_b(&phi, 1e-6).ok();
        let admissible = phi.regular_candidate() && bound.map_or(false, |bd| b < bd);
        if !admissible && phi.regular_candidate() && !allow_inadmissible {
            return Err(CoreError::Inadmissible {
                b,
                bound: bound.unwrap_or(0.0),
            });
        }
        Ok(Self {
            alg,
            ip,
            x_field,
            phi,
            b,
            bound,
            admissible,
        })
    }

    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.alg
    }

    pub fn inner_product(&self) -> &InnerProduct {
        &self.ip
    }

    pub fn x_field(&self) -> &InvariantVectorField {
        &self.x_field
    }

    pub fn phi(&self) -> &PhiFunction {
        &self.phi
    }

    /// |X|_g, the b entering the regularity inequality.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn regularity_bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn admissible(&self) -> bool {
        self.admissible
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    /// F(y) at the identity. Errors on the zero vector and on the kropina
    /// singular hyperplane <X, y> = 0.
    pub fn minkowski_norm(&self, y: &DVector<f64>) -> Result<f64> {
        let alpha = self.ip.norm(y)?;
        if alpha <= 0.0 {
            return Err(CoreError::ZeroVector);
        }
        let s = self.ip.inner(self.x_field.coords(), y)? / alpha;
        let jet = self.phi.eval(s)?;
        Ok(alpha * jet.value)
    }

    /// F at a group point h applied to a tangent matrix Y_h, through the
    /// pull-back to the identity.
    pub fn group_norm(
        &self,
        model: &MatrixGroupModel,
        h: &DMatrix<f64>,
        y_h: &DMatrix<f64>,
    ) -> Result<f64> {
        let coords = model.pull_to_identity(h, y_h)?;
        self.minkowski_norm(&coords)
    }

    /// Relative residual |F(lambda y) - lambda F(y)| / (lambda F(y)).
    pub fn homogeneity_check(&self, y: &DVector<f64>, lambda: f64) -> Result<f64> {
        assert!(lambda > 0.0);
        let f = self.minkowski_norm(y)?;
        let f_scaled = self.minkowski_norm(&(y * lambda))?;
        Ok((f_scaled - lambda * f).abs() / (lambda * f).abs())
    }

    /// Fundamental tensor g_ij(y) = 1/2 d^2(F^2)/dy_i dy_j by central
    /// second differences with Richardson extrapolation.
    ///
    /// The returned matrix is symmetrized by averaging; the pre-
    /// symmetrization asymmetry is reported and gated at 1e-6 relative.
    pub fn fundamental_tensor(&self, y: &DVector<f64>, step: f64) -> Result<FundamentalTensor> {
        assert!(step > 0.0);
        let n = self.dim();
        let f2 = |v: &DVector<f64>| -> Result<f64> {
            let f = self.minkowski_norm(v)?;
            Ok(0.5 * f * f)
        };
        let center = f2(y)?;
        let second = |i: usize, j: usize, h: f64| -> Result<f64> {
            if i == j {
                let mut p = y.clone();
                p[i] += h;
                let mut m = y.clone();
                m[i] -= h;
                Ok((f2(&p)? - 2.0 * center + f2(&m)?) / (h * h))
            } else {
                let mut pp = y.clone();
                pp[i] += h;
                pp[j] += h;
                let mut pm = y.clone();
                pm[i] += h;
                pm[j] -= h;
                let mut mp = y.clone();
                mp[i] -= h;
                mp[j] += h;
                let mut mm = y.clone();
                mm[i] -= h;
                mm[j] -= h;
                Ok((f2(&pp)? - f2(&pm)? - f2(&mp)? + f2(&mm)?) / (4.0 * h * h))
            }
        };
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let coarse = second(i, j, step)?;
                let fine = second(i, j, step * 0.5)?;
                g[(i, j)] = (4.0 * fine - coarse) / 3.0;
            }
        }
        let asym_abs = (&g - g.transpose()).amax();
        let scale = g.amax().max(f64::MIN_POSITIVE);
        let asymmetry = asym_abs / scale;
        if asymmetry > HESSIAN_ASYMMETRY_TOL {
            return Err(CoreError::AsymmetricHessian { asymmetry });
        }
        let sym = (&g + g.transpose()) * 0.5;
        Ok(FundamentalTensor {
            matrix: sym,
            asymmetry,
        })
    }

    /// Default finite-difference base step, eps^(1/4) * (1 + |y|).
    pub fn default_step(&self, y: &DVector<f64>) -> f64 {
        f64::EPSILON.powf(0.25) * (1.0 + y.norm())
    }

    /// All eigenvalues of the fundamental tensor above the relative floor.
    pub fn is_strongly_convex(&self, y: &DVector<f64>) -> Result<bool> {
        let ft = self.fundamental_tensor(y, self.default_step(y))?;
        let n = self.dim() as f64;
        let floor = CONVEXITY_REL_FLOOR * ft.matrix.trace() / n;
        let eig = ft.matrix.symmetric_eigen();
        Ok(eig.eigenvalues.iter().all(|&l| l > floor))
    }

    /// Smallest eigenvalue of the fundamental tensor at y.
    pub fn min_convexity_eigenvalue(&self, y: &DVector<f64>) -> Result<f64> {
        let ft = self.fundamental_tensor(y, self.default_step(y))?;
        Ok(ft.matrix.symmetric_eigen().eigenvalues.min())
    }

    /// True when phi is kropina and y lies on (or too close to) its
    /// singular hyperplane <X, y> = 0.
    pub fn on_singular_locus(&self, y: &DVector<f64>) -> bool {
        if !matches!(self.phi.kind(), PhiKind::Kropina) {
            return false;
        }
        let alpha = match self.ip.norm(y) {
            Ok(a) if a > 0.0 => a,
            _ => return true,
        };
        let s = self.ip.inner(self.x_field.coords(), y).unwrap_or(0.0) / alpha;
        self.phi.is_singular_at(s) || s.abs() < 1e-8
    }
}

/// Symmetrized fundamental tensor with the pre-symmetrization asymmetry.
#[derive(Debug, Clone)]
pub struct FundamentalTensor {
    pub matrix: DMatrix<f64>,
    pub asymmetry: f64,
}

//! Infinitesimal symmetry computation: the derivation algebra Der(g), the
//! X-fixing and g-skew subspaces, their intersection k' (the Lie algebra of
//! the compact group Aut_X(g) ∩ O(g)), exponential lifts to algebra and
//! group automorphisms, and the isometry/invariance probes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::lie::{InnerProduct, LieAlgebraSpec, MatrixGroupModel};
use crate::linalg;
use crate::metric::FinslerStructure;
use crate::phi::{max_admissible_b, PhiFunction};

/// Residual gate for the Leibniz (derivation) identity.
pub const DERIVATION_TOL: f64 = 1e-9;

/// Residual gate for the automorphism property A[x,y] = [Ax, Ay].
pub const AUTOMORPHISM_TOL: f64 = 1e-9;

/// Residual gate for lifted-homomorphism checks on group models.
pub const HOMOMORPHISM_TOL: f64 = 1e-9;

/// Which subspace of derivations a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Full,
    XFixing,
    Skew,
    KPrime,
}

impl BasisKind {
    pub fn tag(&self) -> &'static str {
        match self {
            BasisKind::Full => "full",
            BasisKind::XFixing => "x_fixing",
            BasisKind::Skew => "skew",
            BasisKind::KPrime => "k_prime",
        }
    }
}

/// A Frobenius-orthonormal basis of a subspace of Der(g).
#[derive(Debug, Clone)]
pub struct DerivationBasis {
    mats: Vec<DMatrix<f64>>,
    which: BasisKind,
}

impl DerivationBasis {
    pub fn mats(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn which(&self) -> BasisKind {
        self.which
    }

    /// Basis matrices flattened row-major, for report serialization.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.mats
            .iter()
            .map(|m| m.transpose().as_slice().to_vec())
            .collect()
    }

    /// Max deviation of the basis Gram matrix from the identity under the
    /// Frobenius inner product.
    pub fn gram_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let g = linalg::frobenius_inner(&self.mats[a], &self.mats[b]);
                let expected = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - expected).abs());
            }
        }
        worst
    }

    /// Max Leibniz residual of the basis over all basis pairs of the algebra.
    pub fn derivation_residual(&self, alg: &LieAlgebraSpec) -> f64 {
        self.mats
            .iter()
            .map(|d| leibniz_residual(alg, d))
            .fold(0.0, f64::max)
    }

    /// Max residual of projecting this basis into the span of `other`.
    pub fn containment_residual(&self, other: &DerivationBasis) -> f64 {
        self.mats
            .iter()
            .map(|m| linalg::projection_residual(m, &other.mats))
            .fold(0.0, f64::max)
    }

    fn combine(&self, coeffs: &DVector<f64>) -> DMatrix<f64> {
        let n = self.mats[0].nrows();
        let mut out = DMatrix::zeros(n, n);
        for (c, m) in coeffs.iter().zip(&self.mats) {
            out += m * *c;
        }
        out
    }
}

/// Max-norm residual of D[e_i,e_j] - [De_i,e_j] - [e_i,De_j] over i < j.
pub fn leibniz_residual(alg: &LieAlgebraSpec, d: &DMatrix<f64>) -> f64 {
    let n = alg.dim();
    let basis: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let lhs = d * alg.basis_bracket(i, j);
            let rhs = alg.bracket(&(d * &basis[i]), &basis[j]).unwrap()
                + alg.bracket(&basis[i], &(d * &basis[j])).unwrap();
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst
}

/// Nullspace of the Leibniz operator: the full derivation algebra Der(g).
///
/// The operator D -> (D[e_i,e_j] - [De_i,e_j] - [e_i,De_j])_{i<j} is
/// assembled as an (n * n(n-1)/2) x n^2 matrix and solved by SVD; the
/// returned basis is Frobenius-orthonormal because V's rows are.
pub fn derivation_algebra(alg: &LieAlgebraSpec) -> DerivationBasis {
    let n = alg.dim();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut constraint = DMatrix::zeros(pairs.len() * n, n * n);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let w = alg.basis_bracket(i, j);
        for k in 0..n {
            let row = p * n + k;
            // (D w)_k = sum_p D_{kp} w_p
            for q in 0..n {
                constraint[(row, q * n + k)] += w[q];
            }
            // -[De_i, e_j]_k = -sum_a C^k_{aj} D_{ai}
            for a in 0..n {
                constraint[(row, i * n + a)] -= alg.basis_bracket(a, j)[k];
            }
            // -[e_i, De_j]_k = -sum_b C^k_{ib} D_{bj}
            for b in 0..n {
                constraint[(row, j * n + b)] -= alg.basis_bracket(i, b)[k];
            }
        }
    }
    let mats = linalg::nullspace(&constraint)
        .iter()
        .map(|v| linalg::mat_of(v, n))
        .collect();
    DerivationBasis {
        mats,
        which: BasisKind::Full,
    }
}

/// Subspace of a derivation basis annihilating the field value: D x = 0.
pub fn x_fixing_derivations(der: &DerivationBasis, x: &DVector<f64>) -> Result<DerivationBasis> {
    if der.which != BasisKind::Full {
        return Err(CoreError::Precondition(
            "x_fixing_derivations expects the full derivation basis".into(),
        ));
    }
    let n = x.len();
    let dim = der.dim();
    let mut constraint = DMatrix::zeros(n, dim);
    for (a, d) in der.mats.iter().enumerate() {
        constraint.set_column(a, &(d * x));
    }
    let mats = linalg::nullspace(&constraint)
        .iter()
        .map(|c| der.combine(c))
        .collect();
    Ok(DerivationBasis {
        mats,
        which: BasisKind::XFixing,
    })
}

/// Subspace of a derivation basis skew w.r.t. the Gram matrix:
/// D^T g + g D = 0 (the Lie algebra of O(g) met inside Der(g)).
pub fn skew_derivations(der: &DerivationBasis, ip: &InnerProduct) -> Result<DerivationBasis> {
    if der.which != BasisKind::Full {
        return Err(CoreError::Precondition(
            "skew_derivations expects the full derivation basis".into(),
        ));
    }
    let g = ip.gram();
    let n = g.nrows();
    let dim = der.dim();
    let mut constraint = DMatrix::zeros(n * n, dim);
    for (a, d) in der.mats.iter().enumerate() {
        let skew = d.transpose() * g + g * d;
        constraint.set_column(a, &linalg::vec_of(&skew));
    }
    let mats = linalg::nullspace(&constraint)
        .iter()
        .map(|c| der.combine(c))
        .collect();
    Ok(DerivationBasis {
        mats,
        which: BasisKind::Skew,
    })
}

/// Dimensions, bases and residual certificates for the four symmetry
/// subspaces of one (algebra, inner product, X) triple.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub der: DerivationBasis,
    pub x_fixing: DerivationBasis,
    pub skew: DerivationBasis,
    pub k_prime: DerivationBasis,
    /// Max Leibniz residual over all four bases.
    pub derivation_residual: f64,
    /// Max Frobenius-orthonormality deviation over all four bases.
    pub gram_residual: f64,
    /// Max residual of re-projecting commutators of k' basis elements
    /// into the span of k'.
    pub bracket_closure_residual: f64,
    /// Max residual of D^T g + g D over the k' basis; exact skewness is
    /// the compact-type witness (exponentials stay g-orthogonal).
    pub compact_type_residual: f64,
    /// Nesting residuals: k' in x_fixing, x_fixing in full, k' in skew.
    pub nesting_residual: f64,
}

/// Compute k' = (derivations fixing X) ∩ (g-skew derivations) with the
/// stacked-constraint SVD, plus all certificate residuals.
pub fn k_prime(
    alg: &LieAlgebraSpec,
    ip: &InnerProduct,
    x: &DVector<f64>,
) -> Result<SymmetryReport> {
    let n = alg.dim();
    if ip.dim() != n || x.len() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: ip.dim().max(x.len()),
        });
    }
    let der = derivation_algebra(alg);
    let x_fixing = x_fixing_derivations(&der, x)?;
    let skew = skew_derivations(&der, ip)?;

    // stacked constraints on the full-derivation coefficient space
    let dim = der.dim();
    let g = ip.gram();
    let mut constraint = DMatrix::zeros(n + n * n, dim);
    for (a, d) in der.mats.iter().enumerate() {
        let mut col = DVector::zeros(n + n * n);
        col.rows_mut(0, n).copy_from(&(d * x));
        let skew_res = d.transpose() * g + g * d;
        col.rows_mut(n, n * n).copy_from(&linalg::vec_of(&skew_res));
        constraint.set_column(a, &col);
    }
    let kp_mats: Vec<DMatrix<f64>> = linalg::nullspace(&constraint)
        .iter()
        .map(|c| der.combine(c))
        .collect();
    let k_prime = DerivationBasis {
        mats: kp_mats,
        which: BasisKind::KPrime,
    };

    let derivation_residual = [&der, &x_fixing, &skew, &k_prime]
        .iter()
        .map(|b| b.derivation_residual(alg))
        .fold(0.0, f64::max);
    let gram_residual = [&der, &x_fixing, &skew, &k_prime]
        .iter()
        .map(|b| b.gram_residual())
        .fold(0.0, f64::max);

    let mut bracket_closure_residual: f64 = 0.0;
    for a in k_prime.mats() {
        for b in k_prime.mats() {
            let comm = a * b - b * a;
            let res = linalg::projection_residual(&comm, k_prime.mats());
            bracket_closure_residual = bracket_closure_residual.max(res / (1.0 + comm.norm()));
        }
    }

    let compact_type_residual = k_prime
        .mats()
        .iter()
        .map(|d| (d.transpose() * g + g * d).amax())
        .fold(0.0, f64::max);

    let nesting_residual = k_prime
        .containment_residual(&x_fixing)
        .max(x_fixing.containment_residual(&der))
        .max(k_prime.containment_residual(&skew));

    Ok(SymmetryReport {
        der,
        x_fixing,
        skew,
        k_prime,
        derivation_residual,
        gram_residual,
        bracket_closure_residual,
        compact_type_residual,
        nesting_residual,
    })
}

/// A linear automorphism of the algebra, certified at construction.
#[derive(Debug, Clone)]
pub struct AutomorphismMatrix {
    mat: DMatrix<f64>,
}

impl AutomorphismMatrix {
    pub fn new(alg: &LieAlgebraSpec, mat: DMatrix<f64>) -> Result<Self> {
        let residual = automorphism_residual(alg, &mat);
        if residual > AUTOMORPHISM_TOL {
            return Err(CoreError::NotAutomorphism { residual });
        }
        // invertibility through the condition estimate of the SVD
        let svd = mat.clone().svd(false, false);
        let smin = svd.singular_values.min();
        if smin <= 1e-12 * svd.singular_values.max() {
            return Err(CoreError::NotAutomorphism { residual: f64::INFINITY });
        }
        Ok(Self { mat })
    }

    /// Bypass the certification, for negative controls only.
    pub fn new_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// Max residual of A[e_i,e_j] - [Ae_i, Ae_j] over basis pairs.
pub fn automorphism_residual(alg: &LieAlgebraSpec, a: &DMatrix<f64>) -> f64 {
    let n = alg.dim();
    let basis: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let lhs = a * alg.basis_bracket(i, j);
            let rhs = alg
                .bracket(&(a * &basis[i]), &(a * &basis[j]))
                .unwrap();
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst
}

pub fn is_automorphism(alg: &LieAlgebraSpec, a: &DMatrix<f64>, tol: f64) -> bool {
    automorphism_residual(alg, a) <= tol
}

/// A^T g A = g within tol.
pub fn is_orthogonal(ip: &InnerProduct, a: &DMatrix<f64>, tol: f64) -> bool {
    let g = ip.gram();
    (a.transpose() * g * a - g).amax() <= tol
}

/// A x = x within tol (absolute, scaled by 1 + |x|).
pub fn fixes_x(a: &DMatrix<f64>, x: &DVector<f64>, tol: f64) -> bool {
    (a * x - x).amax() <= tol * (1.0 + x.amax())
}

/// exp(t D) as a certified algebra automorphism.
///
/// Scaling-and-squaring Pade exponential; the result must pass the
/// automorphism residual gate, which fails exactly when D was not a
/// derivation to tolerance.
pub fn exp_derivation(alg: &LieAlgebraSpec, d: &DMatrix<f64>, t: f64) -> Result<AutomorphismMatrix> {
    let a = (d * t).exp();
    AutomorphismMatrix::new(alg, a)
}

/// Seeded points on the unit sphere of R^n.
fn sphere_samples(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / norm);
        }
    }
    out
}

/// A random orthogonal matrix (w.r.t. the Euclidean product) from the QR
/// of a Gaussian matrix, sign-fixed for determinism.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Max relative deviation |F(Ay) - F(y)| / F(y) over seeded unit-sphere
/// samples, for an A that is g-orthogonal and fixes X.
///
/// This is the forward isometry probe: such deviations must vanish to
/// numerical precision.
pub fn isometry_invariance_check(
    fs: &FinslerStructure,
    a: &AutomorphismMatrix,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !is_orthogonal(fs.inner_product(), a.mat(), 1e-8) {
        return Err(CoreError::Precondition(
            "isometry_invariance_check requires an orthogonal A".into(),
        ));
    }
    if !fixes_x(a.mat(), fs.x_field().coords(), 1e-8) {
        return Err(CoreError::Precondition(
            "isometry_invariance_check requires A X = X; use converse_probe".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for y in sphere_samples(fs.dim(), samples, seed) {
        if fs.on_singular_locus(&y) {
            continue;
        }
        let ay = a.mat() * &y;
        if fs.on_singular_locus(&ay) {
            continue;
        }
        let f = fs.minkowski_norm(&y)?;
        let fa = fs.minkowski_norm(&ay)?;
        worst = worst.max((fa - f).abs() / f.abs());
    }
    Ok(worst)
}

/// Outcome of the converse probe: either a witness direction where F is
/// not preserved, or an inconclusive exhausted search.
#[derive(Debug, Clone)]
pub enum ConverseOutcome {
    Witness { y: DVector<f64>, relative_gap: f64 },
    /// The search found no separation; this is a failed test run, not a
    /// verification of invariance.
    NotFound { samples: usize },
}

/// Search for a direction separating F and F ∘ A, for an orthogonal A
/// that moves X and an injective phi. Such a witness must exist.
pub fn converse_probe(
    fs: &FinslerStructure,
    a: &AutomorphismMatrix,
    samples: usize,
    seed: u64,
) -> Result<ConverseOutcome> {
    if !fs.phi().injective() {
        return Err(CoreError::Precondition(
            "converse_probe requires an injective phi".into(),
        ));
    }
    if !is_orthogonal(fs.inner_product(), a.mat(), 1e-8) {
        return Err(CoreError::Precondition(
            "converse_probe requires an orthogonal A".into(),
        ));
    }
    let x = fs.x_field().coords();
    if (a.mat() * x - x).norm() < 1e-6 {
        return Err(CoreError::Precondition(
            "converse_probe requires A X != X; use isometry_invariance_check".into(),
        ));
    }
    for y in sphere_samples(fs.dim(), samples, seed) {
        if fs.on_singular_locus(&y) {
            continue;
        }
        let ay = a.mat() * &y;
        if fs.on_singular_locus(&ay) {
            continue;
        }
        let f = fs.minkowski_norm(&y)?;
        let fa = fs.minkowski_norm(&ay)?;
        let gap = (fa - f).abs() / f.abs();
        if gap >= 1e-6 {
            return Ok(ConverseOutcome::Witness {
                y,
                relative_gap: gap,
            });
        }
    }
    Ok(ConverseOutcome::NotFound { samples })
}

/// A group automorphism of a nilpotent matrix model, lifted from an
/// algebra automorphism through exp and log: psi(g) = exp(A log g).
#[derive(Debug, Clone)]
pub struct GroupAutomorphism {
    model: MatrixGroupModel,
    algebra_map: AutomorphismMatrix,
}

impl GroupAutomorphism {
    pub fn algebra_map(&self) -> &AutomorphismMatrix {
        &self.algebra_map
    }

    pub fn model(&self) -> &MatrixGroupModel {
        &self.model
    }

    pub fn apply(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let coords = self.model.log_coords(g)?;
        self.model.exp_coords(&(self.algebra_map.mat() * coords))
    }

    /// Construction bypassing all checks, for negative controls.
    pub fn new_unchecked(model: MatrixGroupModel, algebra_map: AutomorphismMatrix) -> Self {
        Self {
            model,
            algebra_map,
        }
    }
}

fn random_group_pair(
    model: &MatrixGroupModel,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = model.algebra_dim();
    let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.5..1.5));
    let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.5..1.5));
    Ok((model.exp_coords(&x)?, model.exp_coords(&y)?))
}

/// Lift an algebra automorphism to the model group and certify the
/// homomorphism property plus the recovered differential.
pub fn lift_to_group(model: &MatrixGroupModel, a: &AutomorphismMatrix) -> Result<GroupAutomorphism> {
    if !model.log_available() {
        return Err(CoreError::LogUnavailable {
            model: model.name().to_string(),
        });
    }
    let psi = GroupAutomorphism {
        model: model.clone(),
        algebra_map: a.clone(),
    };
    let residual = homomorphism_residual(&psi, 50, 0xF1A5)?;
    if residual > HOMOMORPHISM_TOL {
        return Err(CoreError::NotHomomorphism { residual });
    }
    // recover (d psi)_e by central differences and compare against A
    let n = model.algebra_dim();
    let h = 1e-5;
    for i in 0..n {
        let mut dir = DVector::zeros(n);
        dir[i] = h;
        let plus = psi.apply(&model.exp_coords(&dir)?)?;
        let minus = psi.apply(&model.exp_coords(&(-&dir))?)?;
        let deriv = (plus - minus) / (2.0 * h);
        let coords = model.pull_to_identity(&model.identity(), &deriv)?;
        let expected = a.mat().column(i);
        if (coords - expected).amax() > 1e-6 {
            return Err(CoreError::NotHomomorphism { residual: f64::NAN });
        }
    }
    Ok(psi)
}

/// Max residual of psi(gh) - psi(g) psi(h) over seeded random pairs.
pub fn homomorphism_residual(
    psi: &GroupAutomorphism,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (g, h) = random_group_pair(&psi.model, &mut rng)?;
        let lhs = psi.apply(&(&g * &h))?;
        let rhs = psi.apply(&g)? * psi.apply(&h)?;
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}

/// Max residual of psi(L_g h) - L_{psi(g)} psi(h) over seeded pairs: the
/// commutation of automorphisms with left translations.
pub fn commutation_check(
    model: &MatrixGroupModel,
    psi: &GroupAutomorphism,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (g, h) = random_group_pair(model, &mut rng)?;
        let lhs = psi.apply(&model.left_translate(&g, &h)?)?;
        let rhs = model.left_translate(&psi.apply(&g)?, &psi.apply(&h)?)?;
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}

/// Max residual of d(psi)_g X_g - X_{psi(g)} over seeded points, with
/// d(psi)_g computed by central differences along the left-invariant
/// extension of X.
pub fn field_invariance_check(
    model: &MatrixGroupModel,
    psi: &GroupAutomorphism,
    x: &DVector<f64>,
    points: usize,
    seed: u64,
) -> Result<f64> {
    let x_mat = model.algebra_matrix(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.algebra_dim();
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let coords = DVector::from_fn(n, |_, _| rng.gen_range(-1.5..1.5));
        let g = model.exp_coords(&coords)?;
        let h = 1e-5 * (1.0 + g.amax());
        // curve g exp(t X) has velocity X_g = dL_g X at t = 0
        let step = model.exp_coords(&(x * h))?;
        let step_inv = model.exp_coords(&(x * -h))?;
        let plus = psi.apply(&(&g * step))?;
        let minus = psi.apply(&(&g * step_inv))?;
        let dpsi_xg = (plus - minus) / (2.0 * h);
        let x_at_psi_g = psi.apply(&g)? * &x_mat;
        worst = worst.max((dpsi_xg - x_at_psi_g).amax());
    }
    Ok(worst)
}

/// Minimal integer N making X admissible for phi under the scaled inner
/// product (1/N) g0, per the sufficiently-large-N construction.
pub fn admissibility_scaling(
    ip0: &InnerProduct,
    x: &DVector<f64>,
    phi: &PhiFunction,
) -> Result<(u64, InnerProduct)> {
    let bound = max_admissible_b(phi, 1e-6)?;
    let q = ip0.inner(x, x)?;
    let b2 = bound * bound;
    let mut n = (q / b2).floor() as u64 + 1;
    while q / n as f64 >= b2 {
        n += 1;
    }
    let ip = if n == 1 {
        ip0.clone()
    } else {
        ip0.scaled(1.0 / n as f64)
    };
    Ok((n, ip))
}

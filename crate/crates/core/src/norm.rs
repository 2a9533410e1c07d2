//! The projector-anchored matrix norm: half the spectral norms of the two
//! diagonal blocks plus the maximum over all s1 x s2 contiguous windows of
//! the off-diagonal block. Also the consecutive-support epsilon-nets used as
//! test oracles for the window supremum.

use crate::eigen::{spectral_norm, sym_spectral_norm};
use crate::error::{Error, Result};
use crate::matrix::{max_abs_norm, DenseMatrix, SymMatrix};
use crate::num::Scalar;
use crate::spectral::ProjectorFrame;

/// Window widths: s1 in [1, m], s2 in [1, d-m].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormParams {
    pub s1: usize,
    pub s2: usize,
}

impl NormParams {
    pub fn new(s1: usize, s2: usize) -> Self {
        Self { s1, s2 }
    }

    pub fn validate(&self, m: usize, d: usize) -> Result<()> {
        if self.s1 == 0 || self.s1 > m {
            return Err(Error::InvalidInput(format!("s1 = {} not in [1, {m}]", self.s1)));
        }
        if self.s2 == 0 || self.s2 > d - m {
            return Err(Error::InvalidInput(format!("s2 = {} not in [1, {}]", self.s2, d - m)));
        }
        Ok(())
    }
}

fn block<T: Scalar>(left: &DenseMatrix<T>, a: &SymMatrix<T>, right: &DenseMatrix<T>) -> DenseMatrix<T> {
    left.tr_matmul(&a.to_dense()).matmul(right)
}

fn small_sym_spectral_norm<T: Scalar>(b: &DenseMatrix<T>) -> Result<T> {
    if b.rows() == 0 {
        return Ok(T::zero());
    }
    if b.rows() == 1 {
        return Ok(b.get(0, 0).abs());
    }
    sym_spectral_norm(&SymMatrix::symmetrize_unchecked(b))
}

/// Maximum over all contiguous s1 x s2 windows of the spectral norm of the
/// window, enumerated row-major.
pub fn window_max<T: Scalar>(b12: &DenseMatrix<T>, params: &NormParams) -> Result<T> {
    let (m, dm) = (b12.rows(), b12.cols());
    let (s1, s2) = (params.s1, params.s2);
    if s1 == 1 && s2 == 1 {
        return max_abs_norm(b12);
    }
    if s1 == m && s2 == dm {
        return spectral_norm(b12);
    }
    let mut best = T::zero();
    for k in 0..=(m - s1) {
        for l in 0..=(dm - s2) {
            let sub = b12.submatrix(k, s1, l, s2)?;
            best = best.max(spectral_norm(&sub)?);
        }
    }
    Ok(best)
}

/// Evaluates the norm of a symmetric matrix anchored at the given frame.
pub fn proj_norm<T: Scalar>(
    a: &SymMatrix<T>,
    frame: &ProjectorFrame<T>,
    params: &NormParams,
) -> Result<T> {
    if a.dim() != frame.d {
        return Err(Error::InvalidInput(format!(
            "matrix dimension {} does not match frame dimension {}",
            a.dim(),
            frame.d
        )));
    }
    params.validate(frame.m, frame.d)?;
    a.check_finite()?;
    let b11 = block(&frame.gamma1, a, &frame.gamma1);
    let b22 = block(&frame.gamma2, a, &frame.gamma2);
    let b12 = block(&frame.gamma1, a, &frame.gamma2);
    let half = T::of(0.5);
    Ok(half * small_sym_spectral_norm(&b11)?
        + half * small_sym_spectral_norm(&b22)?
        + window_max(&b12, params)?)
}

/// Epsilon-net over pairs of consecutive-support unit vectors.
#[derive(Debug, Clone)]
pub struct EpsNet<T> {
    pub epsilon: T,
    /// Unit vectors in R^m, support of <= s1 consecutive coordinates.
    pub left: Vec<Vec<T>>,
    /// Unit vectors in R^{d-m}, support of <= s2 consecutive coordinates.
    pub right: Vec<Vec<T>>,
}

impl<T> EpsNet<T> {
    pub fn pair_count(&self) -> usize {
        self.left.len() * self.right.len()
    }
}

/// Proper epsilon-net of the unit sphere in R^s. Exact constructions exist
/// for s = 1 (the two signs) and s = 2 (equally spaced circle points with
/// chord spacing <= epsilon); higher s is not needed outside proofs.
pub fn sphere_eps_net<T: Scalar>(s: usize, epsilon: T) -> Result<Vec<Vec<T>>> {
    if epsilon <= T::zero() || epsilon >= T::of(0.5) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} not in (0, 1/2)")));
    }
    match s {
        1 => Ok(vec![vec![T::one()], vec![-T::one()]]),
        2 => {
            let half = epsilon * T::of(0.5);
            let k = (T::of(std::f64::consts::PI) / half.asin()).ceil().to_f64_lossy() as usize;
            let step = T::of(2.0 * std::f64::consts::PI) / T::of(k as f64);
            Ok((0..k)
                .map(|i| {
                    let theta = step * T::of(i as f64);
                    vec![theta.cos(), theta.sin()]
                })
                .collect())
        }
        _ => Err(Error::Unsupported(format!("exact sphere net for s = {s} (only s <= 2)"))),
    }
}

/// Net of the consecutive-support set in R^k: k-s+1 zero-padded shifts of
/// the sphere net in R^s.
pub fn dset_eps_net<T: Scalar>(k: usize, s: usize, epsilon: T) -> Result<Vec<Vec<T>>> {
    if s == 0 || s > k {
        return Err(Error::InvalidInput(format!("support width {s} not in [1, {k}]")));
    }
    let sphere = sphere_eps_net(s, epsilon)?;
    let mut out = Vec::with_capacity((k - s + 1) * sphere.len());
    for shift in 0..=(k - s) {
        for v in &sphere {
            let mut padded = vec![T::zero(); k];
            padded[shift..shift + s].copy_from_slice(v);
            out.push(padded);
        }
    }
    Ok(out)
}

pub fn build_eps_net<T: Scalar>(
    m: usize,
    d: usize,
    params: &NormParams,
    epsilon: T,
) -> Result<EpsNet<T>> {
    params.validate(m, d)?;
    Ok(EpsNet {
        epsilon,
        left: dset_eps_net(m, params.s1, epsilon)?,
        right: dset_eps_net(d - m, params.s2, epsilon)?,
    })
}

/// Upper bound on log of the net pair count:
/// (s1+s2) log(3/eps) + 2 log d (natural logs).
pub fn covering_bound(d: usize, _m: usize, s1: usize, s2: usize, epsilon: f64) -> f64 {
    (s1 + s2) as f64 * (3.0 / epsilon).ln() + 2.0 * (d as f64).ln()
}

/// Finite maximum over net pairs of (Gamma1 v)^T A (Gamma2 w). For matrices
/// of the off-diagonal block form this sandwiches the norm:
/// max <= ||A|| <= max / (1 - 2 eps).
pub fn discretized_sup<T: Scalar>(
    a: &SymMatrix<T>,
    frame: &ProjectorFrame<T>,
    net: &EpsNet<T>,
) -> Result<T> {
    let d = frame.d;
    if a.dim() != d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    // block-form precondition: the diagonal blocks must vanish
    let pd = frame.p.to_dense();
    let ad = a.to_dense();
    let amax = crate::matrix::sym_max_abs_norm(a);
    let tol = T::of(1e-8) * (T::one() + amax);
    let pap = pd.matmul(&ad).matmul(&pd);
    let icomp = DenseMatrix::identity(d).sub(&pd);
    let qaq = icomp.matmul(&ad).matmul(&icomp);
    if max_abs_norm(&pap)? > tol || max_abs_norm(&qaq)? > tol {
        return Err(Error::BlockFormViolation(
            "diagonal blocks of A w.r.t. P are not negligible".into(),
        ));
    }
    let b12 = block(&frame.gamma1, a, &frame.gamma2);
    let mut best = T::neg_infinity();
    // supports are contiguous, so each quadratic form touches s1*s2 entries
    for v in &net.left {
        for w in &net.right {
            let mut acc = T::zero();
            for (i, &vi) in v.iter().enumerate() {
                if vi == T::zero() {
                    continue;
                }
                for (j, &wj) in w.iter().enumerate() {
                    if wj == T::zero() {
                        continue;
                    }
                    acc = acc + vi * b12.get(i, j) * wj;
                }
            }
            best = best.max(acc);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::sym_eigen;
    use crate::spectral::{frame_from_projector, projector_for_selection, RankRange};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_frame(d: usize, m: usize) -> ProjectorFrame<f64> {
        let vals: Vec<f64> = (0..d).map(|i| if i < m { 1.0 } else { 0.0 }).collect();
        frame_from_projector(&SymMatrix::diag(&vals), m).unwrap()
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        let frame = identity_frame(4, 2);
        let n = proj_norm(&SymMatrix::zeros(4), &frame, &NormParams::new(1, 1)).unwrap();
        assert_eq!(n, 0.0);
    }

    #[test]
    fn direct_evaluation_2d() {
        // d=2, m=1, Gamma = I, A=[[2,1],[1,-2]]: 1/2*2 + 1/2*2 + 1 = 3
        let frame = identity_frame(2, 1);
        let a = SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => 2.0,
            (1, 1) => -2.0,
            _ => 1.0,
        });
        let n = proj_norm(&a, &frame, &NormParams::new(1, 1)).unwrap();
        assert!((n - 3.0).abs() < 1e-12);
    }

    #[test]
    fn window_max_matches_brute_force_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = SymMatrix::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let eig = sym_eigen(&a).unwrap();
        let p = projector_for_selection(&eig, &RankRange::new(1, 2, 6).unwrap()).unwrap();
        let frame = frame_from_projector(&p, 2).unwrap();
        let params = NormParams::new(1, 2);
        let got = proj_norm(&a, &frame, &params).unwrap();

        // brute force: every window extracted and its spectral norm taken
        let b11 = block(&frame.gamma1, &a, &frame.gamma1);
        let b22 = block(&frame.gamma2, &a, &frame.gamma2);
        let b12 = block(&frame.gamma1, &a, &frame.gamma2);
        let mut wmax: f64 = 0.0;
        for k in 0..=(2 - 1) {
            for l in 0..=(4 - 2) {
                let sub = b12.submatrix(k, 1, l, 2).unwrap();
                wmax = wmax.max(spectral_norm(&sub).unwrap());
            }
        }
        let want = 0.5 * small_sym_spectral_norm(&b11).unwrap()
            + 0.5 * small_sym_spectral_norm(&b22).unwrap()
            + wmax;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn params_validated() {
        let frame = identity_frame(4, 2);
        assert!(proj_norm(&SymMatrix::zeros(4), &frame, &NormParams::new(0, 1)).is_err());
        assert!(proj_norm(&SymMatrix::zeros(4), &frame, &NormParams::new(3, 1)).is_err());
        assert!(proj_norm(&SymMatrix::zeros(4), &frame, &NormParams::new(1, 3)).is_err());
        assert!(proj_norm(&SymMatrix::zeros(3), &frame, &NormParams::new(1, 1)).is_err());
    }

    #[test]
    fn sphere_net_s1_and_s2() {
        let n1 = sphere_eps_net::<f64>(1, 0.3).unwrap();
        assert_eq!(n1, vec![vec![1.0], vec![-1.0]]);
        // epsilon near 1 is outside the (0, 1/2) contract
        assert!(sphere_eps_net::<f64>(2, 1.0).is_err());
        assert!(sphere_eps_net::<f64>(3, 0.1).is_err());
        // K = ceil(pi / asin(eps/2)) grows like 2*pi/eps
        let n2 = sphere_eps_net::<f64>(2, 0.1).unwrap();
        assert_eq!(n2.len(), (std::f64::consts::PI / (0.05f64).asin()).ceil() as usize);
        for v in &n2 {
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn circle_net_covers_random_directions() {
        let net = sphere_eps_net::<f64>(2, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10_000 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let (x, y) = (theta.cos(), theta.sin());
            let dist = net
                .iter()
                .map(|v| ((v[0] - x).powi(2) + (v[1] - y).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(dist <= 0.05, "uncovered direction at distance {dist}");
        }
    }

    #[test]
    fn dset_net_shifts_and_membership() {
        // k=3, s=1: {+-e1, +-e2, +-e3}
        let n = dset_eps_net::<f64>(3, 1, 0.3).unwrap();
        assert_eq!(n.len(), 6);
        // k=7, s=3 would need a sphere net in R^3
        assert!(dset_eps_net::<f64>(7, 3, 0.3).is_err());
        // k=7, s=2: 6 shifted copies; all unit-norm with support width <= 2
        let n = dset_eps_net::<f64>(7, 2, 0.1).unwrap();
        let per_shift = sphere_eps_net::<f64>(2, 0.1).unwrap().len();
        assert_eq!(n.len(), 6 * per_shift);
        for v in &n {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-10);
            let nz: Vec<usize> =
                v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, _)| i).collect();
            if let (Some(&first), Some(&last)) = (nz.first(), nz.last()) {
                assert!(last - first <= 1);
            }
        }
    }

    #[test]
    fn covering_bound_dominates_actual_counts() {
        // m=1, d=2, s1=s2=1: actual pairs {+-e1} x {+-e1} = 4
        let net = build_eps_net::<f64>(1, 2, &NormParams::new(1, 1), 1.0 / 3.0).unwrap();
        assert_eq!(net.pair_count(), 4);
        assert!((net.pair_count() as f64).ln() <= covering_bound(2, 1, 1, 1, 1.0 / 3.0));
        // monotonicity spot checks
        assert!(covering_bound(10, 3, 2, 2, 0.05) > covering_bound(10, 3, 1, 2, 0.05));
        assert!(covering_bound(20, 3, 1, 2, 0.05) > covering_bound(10, 3, 1, 2, 0.05));
    }

    #[test]
    fn discretized_sup_trivial_cases() {
        let frame = identity_frame(2, 1);
        let net = build_eps_net::<f64>(1, 2, &NormParams::new(1, 1), 0.05).unwrap();
        assert_eq!(discretized_sup(&SymMatrix::zeros(2), &frame, &net).unwrap(), 0.0);
        let a = SymMatrix::from_fn(2, |i, j| if i != j { 1.0 } else { 0.0 });
        assert!((discretized_sup(&a, &frame, &net).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discretized_sup_rejects_non_block_form() {
        let frame = identity_frame(2, 1);
        let net = build_eps_net::<f64>(1, 2, &NormParams::new(1, 1), 0.05).unwrap();
        let a = SymMatrix::diag(&[1.0, -1.0]);
        assert!(matches!(
            discretized_sup(&a, &frame, &net),
            Err(Error::BlockFormViolation(_))
        ));
    }

    #[test]
    fn sandwich_on_random_block_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let d = 6;
        let m = 2;
        let a0 = SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let eig = sym_eigen(&SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
        let p = projector_for_selection(&eig, &RankRange::new(1, m, d).unwrap()).unwrap();
        let frame = frame_from_projector(&p, m).unwrap();
        // project to block form: P A (I-P) + (I-P) A P
        let pd = p.to_dense();
        let ic = DenseMatrix::identity(d).sub(&pd);
        let ad = a0.to_dense();
        let bf = pd.matmul(&ad).matmul(&ic).add(&ic.matmul(&ad).matmul(&pd));
        let a = SymMatrix::symmetrize_unchecked(&bf);

        let params = NormParams::new(1, 2);
        let eps = 0.05;
        let net = build_eps_net::<f64>(m, d, &params, eps).unwrap();
        let sup = discretized_sup(&a, &frame, &net).unwrap();
        let norm = proj_norm(&a, &frame, &params).unwrap();
        assert!(sup <= norm + 1e-10, "sup {sup} > norm {norm}");
        assert!(norm <= sup / (1.0 - 2.0 * eps) + 1e-10);
    }
}

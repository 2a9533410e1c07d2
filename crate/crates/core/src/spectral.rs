//! Eigenvalue grouping, spectral projectors and frames, the linear
//! perturbation term, and spectrum diagnostics.

use crate::eigen::{sym_eigen, EigenSystem};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SymMatrix};
use crate::num::Scalar;

/// Distinct eigenvalues with multiplicities and the contiguous eigenvector
/// index range (0-based, half-open) each group occupies.
#[derive(Debug, Clone)]
pub struct SpectralGroups<T> {
    mu: Vec<T>,
    mult: Vec<usize>,
    ranges: Vec<(usize, usize)>,
}

impl<T: Scalar> SpectralGroups<T> {
    pub fn count(&self) -> usize {
        self.mu.len()
    }

    pub fn dim(&self) -> usize {
        self.mult.iter().sum()
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn mult(&self) -> &[usize] {
        &self.mult
    }

    pub fn range(&self, r: usize) -> (usize, usize) {
        self.ranges[r]
    }

    /// Eigenvector rank range (1-based inclusive) covered by consecutive
    /// groups `j`.
    pub fn rank_range(&self, j: &GroupRange) -> Result<RankRange> {
        j.validate(self.count())?;
        let start = self.ranges[j.start].0 + 1;
        let end = self.ranges[j.end].1;
        RankRange::new(start, end, self.dim())
    }
}

/// Consecutive groups J = {start..=end} (0-based) into a `SpectralGroups`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupRange {
    pub start: usize,
    pub end: usize,
}

impl GroupRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, r: usize) -> bool {
        r >= self.start && r <= self.end
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        if self.start > self.end || self.end >= q {
            return Err(Error::InvalidSelection(format!(
                "group range {}..={} out of bounds for {} groups",
                self.start, self.end, q
            )));
        }
        Ok(())
    }

    /// Validates additionally that the complement is nonempty.
    pub fn validate_proper(&self, q: usize) -> Result<()> {
        self.validate(q)?;
        if self.start == 0 && self.end == q - 1 {
            return Err(Error::InvalidSelection(
                "selection covers all eigenvalue groups; complement is empty".into(),
            ));
        }
        Ok(())
    }
}

/// Contiguous eigenvector ranks, 1-based inclusive, with 1 <= m <= d-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRange {
    start: usize,
    end: usize,
}

impl RankRange {
    pub fn new(start: usize, end: usize, d: usize) -> Result<Self> {
        if start == 0 || start > end || end > d {
            return Err(Error::InvalidSelection(format!(
                "rank range {start}..={end} invalid for dimension {d}"
            )));
        }
        let m = end - start + 1;
        if m > d - 1 {
            return Err(Error::InvalidSelection(format!(
                "rank range selects m = {m} of d = {d} eigenvectors; need m <= d-1"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn m(&self) -> usize {
        self.end - self.start + 1
    }

    /// 0-based column indices into an eigenvector matrix.
    pub fn cols(&self) -> std::ops::Range<usize> {
        (self.start - 1)..self.end
    }
}

/// Merges adjacent eigenvalues into distinct-value groups. Adjacent values
/// v_i, v_{i+1} collapse into one group when v_i - v_{i+1} <= rel_tol *
/// max(1, |v_1|); the group value is the mean of the merged eigenvalues.
pub fn group_eigenvalues<T: Scalar>(values: &[T], rel_tol: T) -> Result<SpectralGroups<T>> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite eigenvalue".into()));
    }
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("eigenvalues not sorted descending".into()));
    }
    let gap_tol = rel_tol * T::one().max(values[0].abs());
    let mut mu = Vec::new();
    let mut mult = Vec::new();
    let mut ranges = Vec::new();
    let mut start = 0usize;
    for i in 0..values.len() {
        let close_next = i + 1 < values.len() && values[i] - values[i + 1] <= gap_tol;
        if !close_next {
            let count = i + 1 - start;
            let mean = values[start..=i].iter().copied().sum::<T>() / T::of(count as f64);
            mu.push(mean);
            mult.push(count);
            ranges.push((start, i + 1));
            start = i + 1;
        }
    }
    Ok(SpectralGroups { mu, mult, ranges })
}

/// P = sum over selected ranks of u_k u_k^T.
pub fn projector_for_selection<T: Scalar>(
    eig: &EigenSystem<T>,
    sel: &RankRange,
) -> Result<SymMatrix<T>> {
    let d = eig.dim();
    if sel.end() > d {
        return Err(Error::InvalidSelection(format!(
            "rank range ends at {} but dimension is {d}",
            sel.end()
        )));
    }
    let v = &eig.vectors;
    let cols = sel.cols();
    Ok(SymMatrix::from_fn(d, |i, j| {
        cols.clone().map(|k| v.get(i, k) * v.get(j, k)).sum()
    }))
}

/// Rank-m projector P with orthonormal frames for its range (gamma1) and
/// the range of I - P (gamma2).
#[derive(Debug, Clone)]
pub struct ProjectorFrame<T> {
    pub p: SymMatrix<T>,
    pub gamma1: DenseMatrix<T>,
    pub gamma2: DenseMatrix<T>,
    pub m: usize,
    pub d: usize,
}

/// Extracts frames from a projector: gamma1 spans the eigenvalue-1
/// eigenspace, gamma2 the eigenvalue-0 eigenspace. Deterministic under the
/// eigendecomposition sign convention.
pub fn frame_from_projector<T: Scalar>(p: &SymMatrix<T>, m: usize) -> Result<ProjectorFrame<T>> {
    let d = p.dim();
    if m == 0 || m > d {
        return Err(Error::NotAProjector {
            expected: m,
            detail: format!("rank {m} out of range for dimension {d}"),
        });
    }
    let eig = sym_eigen(p)?;
    let tol = T::of(0.1);
    let mut ones = 0usize;
    for &v in &eig.values {
        if (v - T::one()).abs() <= tol {
            ones += 1;
        } else if v.abs() > tol {
            return Err(Error::NotAProjector {
                expected: m,
                detail: format!("eigenvalue {v} not near 0 or 1"),
            });
        }
    }
    if ones != m {
        return Err(Error::NotAProjector {
            expected: m,
            detail: format!("found {ones} eigenvalues near 1"),
        });
    }
    let gamma1 = DenseMatrix::from_fn(d, m, |i, k| eig.vectors.get(i, k));
    let gamma2 = DenseMatrix::from_fn(d, d - m, |i, k| eig.vectors.get(i, m + k));
    Ok(ProjectorFrame { p: p.clone(), gamma1, gamma2, m, d })
}

/// Linear term of the projector perturbation: for a symmetric perturbation E,
/// L_J(E) = sum over r in J, s outside J of (P_r E P_s + P_s E P_r)/(mu_r - mu_s).
///
/// Computed in the eigenbasis: (V^T E V) masked to the J x J^c blocks and
/// divided by the group-value gaps, then rotated back.
pub fn linear_term<T: Scalar>(
    groups: &SpectralGroups<T>,
    eig: &EigenSystem<T>,
    j: &GroupRange,
    e: &SymMatrix<T>,
) -> Result<SymMatrix<T>> {
    j.validate_proper(groups.count())?;
    let d = eig.dim();
    if groups.dim() != d || e.dim() != d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    // group index of each eigenvector rank
    let mut gidx = vec![0usize; d];
    for (g, &(a, b)) in groups.ranges.iter().enumerate() {
        for k in a..b {
            gidx[k] = g;
        }
    }
    let v = &eig.vectors;
    let m_in = v.tr_matmul(&e.to_dense()).matmul(v); // V^T E V
    let mut l_tilde = DenseMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let (gk, gl) = (gidx[k], gidx[l]);
            let k_in = j.contains(gk);
            let l_in = j.contains(gl);
            if k_in == l_in {
                continue;
            }
            // gap is always mu(J side) - mu(complement side)
            let denom = if k_in {
                groups.mu[gk] - groups.mu[gl]
            } else {
                groups.mu[gl] - groups.mu[gk]
            };
            l_tilde.set(k, l, m_in.get(k, l) / denom);
        }
    }
    let back = v.matmul(&l_tilde).matmul(&v.transpose());
    Ok(SymMatrix::symmetrize_unchecked(&back))
}

/// Gap-weighted effective-dimension measure of the spectrum around group r
/// (0-based). Boundary conventions: the gap above the top group is infinite
/// and the value below the bottom group is 0.
pub fn relative_rank<T: Scalar>(groups: &SpectralGroups<T>, r: usize) -> Result<T> {
    let q = groups.count();
    if q < 2 {
        return Err(Error::UndefinedGap);
    }
    if r >= q {
        return Err(Error::InvalidSelection(format!("group {r} out of {q}")));
    }
    let mu = &groups.mu;
    let mult = &groups.mult;
    let mut sum = T::zero();
    for s in 0..q {
        if s == r {
            continue;
        }
        sum = sum + T::of(mult[s] as f64) * mu[s] / (mu[r] - mu[s]).abs();
    }
    let gap_up = if r == 0 { T::infinity() } else { mu[r - 1] - mu[r] };
    let gap_down = if r == q - 1 { mu[r] } else { mu[r] - mu[r + 1] };
    let gap = gap_up.min(gap_down);
    Ok(sum + T::of(mult[r] as f64) * mu[r] / gap)
}

fn cross_sum<T: Scalar>(groups: &SpectralGroups<T>, r: usize) -> T {
    let mu = &groups.mu;
    let mult = &groups.mult;
    let mut s_sum = T::zero();
    for s in 0..groups.count() {
        if s == r {
            continue;
        }
        let gap = mu[r] - mu[s];
        s_sum = s_sum
            + T::of(mult[r] as f64) * mu[r] * T::of(mult[s] as f64) * mu[s] / (gap * gap);
    }
    s_sum
}

/// Effective dimension r_J: replaces the ambient dimension in error bounds.
pub fn eff_dim_rj<T: Scalar>(groups: &SpectralGroups<T>, j: &GroupRange) -> Result<T> {
    j.validate_proper(groups.count())?;
    let mut acc = T::zero();
    for r in j.start..=j.end {
        let relr = relative_rank(groups, r)?;
        acc = acc + relr * cross_sum(groups, r).sqrt();
    }
    Ok(acc.powf(T::of(2.0 / 3.0)))
}

/// Effective dimension r~_J: the double sum over the J / complement split.
pub fn eff_dim_rre<T: Scalar>(groups: &SpectralGroups<T>, j: &GroupRange) -> Result<T> {
    j.validate_proper(groups.count())?;
    let mu = &groups.mu;
    let mult = &groups.mult;
    let mut acc = T::zero();
    for r in j.start..=j.end {
        for s in 0..groups.count() {
            if j.contains(s) {
                continue;
            }
            let gap = mu[r] - mu[s];
            acc = acc
                + T::of(mult[r] as f64) * mu[r] * T::of(mult[s] as f64) * mu[s] / (gap * gap);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy)]
pub struct KappaStats<T> {
    pub under: T,
    pub over: T,
    pub ratio: T,
}

/// Condition numbers of the J / complement split:
/// min and max over pairs of sqrt(mu_r mu_s)/|mu_r - mu_s|, and their ratio.
pub fn kappa_stats<T: Scalar>(groups: &SpectralGroups<T>, j: &GroupRange) -> Result<KappaStats<T>> {
    j.validate_proper(groups.count())?;
    let mu = &groups.mu;
    let mut under = T::infinity();
    let mut over = T::zero();
    for r in j.start..=j.end {
        for s in 0..groups.count() {
            if j.contains(s) {
                continue;
            }
            let v = (mu[r] * mu[s]).sqrt() / (mu[r] - mu[s]).abs();
            under = under.min(v);
            over = over.max(v);
        }
    }
    Ok(KappaStats { under, over, ratio: over / under })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::sym_max_abs_norm;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spiked_spectrum_grouping() {
        let g = group_eigenvalues(&[10.0f64, 6.0, 3.0, 1.0, 1.0, 1.0], 1e-9).unwrap();
        assert_eq!(g.mu(), &[10.0, 6.0, 3.0, 1.0]);
        assert_eq!(g.mult(), &[1, 1, 1, 3]);
        assert_eq!(g.range(3), (3, 6));
    }

    #[test]
    fn all_equal_is_one_group() {
        let g = group_eigenvalues(&[5.0f64, 5.0, 5.0], 1e-9).unwrap();
        assert_eq!(g.mu(), &[5.0]);
        assert_eq!(g.mult(), &[3]);
    }

    #[test]
    fn sub_tolerance_gap_merges() {
        let g = group_eigenvalues(&[3.0f64, 3.0 - 1e-12, 1.0], 1e-9).unwrap();
        assert_eq!(g.count(), 2);
        assert!((g.mu()[0] - 3.0).abs() < 1e-9);
        assert_eq!(g.mult(), &[2, 1]);
    }

    #[test]
    fn unsorted_rejected() {
        assert!(group_eigenvalues(&[1.0f64, 2.0], 1e-9).is_err());
    }

    #[test]
    fn projector_identity_system() {
        let eig = sym_eigen(&SymMatrix::diag(&[3.0f64, 2.0, 1.0])).unwrap();
        let p = projector_for_selection(&eig, &RankRange::new(1, 1, 3).unwrap()).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(1, 1), 0.0);
    }

    #[test]
    fn projector_idempotent_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = SymMatrix::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let eig = sym_eigen(&a).unwrap();
        let p = projector_for_selection(&eig, &RankRange::new(1, 2, 6).unwrap()).unwrap();
        let p2 = SymMatrix::symmetrize_unchecked(&p.to_dense().matmul(&p.to_dense()));
        assert!(sym_max_abs_norm(&p.sub(&p2)) < 1e-8);
        let tr: f64 = (0..6).map(|i| p.get(i, i)).sum();
        assert!((tr - 2.0).abs() < 1e-6);
    }

    #[test]
    fn full_selection_rejected() {
        // m = d is not a valid selection (no complement)
        assert!(RankRange::new(1, 3, 3).is_err());
    }

    #[test]
    fn frame_round_trip_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = SymMatrix::<f64>::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let eig = sym_eigen(&a).unwrap();
        let p = projector_for_selection(&eig, &RankRange::new(1, 2, 5).unwrap()).unwrap();
        let f = frame_from_projector(&p, 2).unwrap();

        let g1tg1 = f.gamma1.tr_matmul(&f.gamma1);
        let g1g1t = f.gamma1.matmul(&f.gamma1.transpose());
        let g2tg2 = f.gamma2.tr_matmul(&f.gamma2);
        let g2g2t = f.gamma2.matmul(&f.gamma2.transpose());
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g1tg1.get(i, j) - want).abs() < 1e-8);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g2tg2.get(i, j) - want).abs() < 1e-8);
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                assert!((g1g1t.get(i, j) - p.get(i, j)).abs() < 1e-8);
                let want = (if i == j { 1.0 } else { 0.0 }) - p.get(i, j);
                assert!((g2g2t.get(i, j) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn frame_diag_projector() {
        let f = frame_from_projector(&SymMatrix::diag(&[1.0f64, 0.0]), 1).unwrap();
        assert!((f.gamma1.get(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!(f.gamma1.get(1, 0).abs() < 1e-12);
        assert!((f.gamma2.get(1, 0).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_rejects_non_projector() {
        assert!(frame_from_projector(&SymMatrix::diag(&[0.5f64, 0.0]), 1).is_err());
        assert!(frame_from_projector(&SymMatrix::diag(&[1.0f64, 1.0]), 1).is_err());
    }

    #[test]
    fn linear_term_hand_value() {
        // Sigma = diag(3,1), J = {first group}, E = [[0,1],[1,0]]:
        // L = E / (mu1 - mu2) restricted to off-diagonal blocks = [[0,.5],[.5,0]]
        let eig = sym_eigen(&SymMatrix::diag(&[3.0f64, 1.0])).unwrap();
        let groups = group_eigenvalues(&eig.values, 1e-9).unwrap();
        let e = SymMatrix::<f64>::from_fn(2, |i, j| if i != j { 1.0 } else { 0.0 });
        let l = linear_term(&groups, &eig, &GroupRange::new(0, 0), &e).unwrap();
        assert!(l.get(0, 0).abs() < 1e-12);
        assert!((l.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_term_zero_and_diagonal_perturbation() {
        let eig = sym_eigen(&SymMatrix::diag(&[3.0f64, 2.0, 1.0])).unwrap();
        let groups = group_eigenvalues(&eig.values, 1e-9).unwrap();
        let j = GroupRange::new(0, 0);
        let z = linear_term(&groups, &eig, &j, &SymMatrix::zeros(3)).unwrap();
        assert_eq!(sym_max_abs_norm(&z), 0.0);
        // E diagonal in the eigenbasis -> L = 0
        let e = SymMatrix::diag(&[0.3f64, -0.7, 0.1]);
        let l = linear_term(&groups, &eig, &j, &e).unwrap();
        assert!(sym_max_abs_norm(&l) < 1e-14);
    }

    #[test]
    fn linear_term_block_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sigma = SymMatrix::from_fn(6, |i, j| {
            if i == j { 6.0 - i as f64 } else { 0.0 }
        });
        let eig = sym_eigen(&sigma).unwrap();
        let groups = group_eigenvalues(&eig.values, 1e-9).unwrap();
        let j = GroupRange::new(0, 1);
        let e = SymMatrix::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
        let l = linear_term(&groups, &eig, &j, &e).unwrap();
        let p = projector_for_selection(&eig, &groups.rank_range(&j).unwrap()).unwrap();
        let pd = p.to_dense();
        let ld = l.to_dense();
        let plp = pd.matmul(&ld).matmul(&pd);
        assert!(crate::matrix::max_abs_norm(&plp).unwrap() < 1e-8);
        let icomp = DenseMatrix::identity(6).sub(&pd);
        let qlq = icomp.matmul(&ld).matmul(&icomp);
        assert!(crate::matrix::max_abs_norm(&qlq).unwrap() < 1e-8);
    }

    #[test]
    fn linear_term_rejects_full_selection() {
        let eig = sym_eigen(&SymMatrix::diag(&[3.0f64, 1.0])).unwrap();
        let groups = group_eigenvalues(&eig.values, 1e-9).unwrap();
        let e = SymMatrix::<f64>::zeros(2);
        assert!(linear_term(&groups, &eig, &GroupRange::new(0, 1), &e).is_err());
    }

    #[test]
    fn relative_rank_hand_values() {
        let g = group_eigenvalues(&[3.0f64, 1.0], 1e-9).unwrap();
        assert!((relative_rank(&g, 0).unwrap() - 2.0).abs() < 1e-12);
        assert!((relative_rank(&g, 1).unwrap() - 2.5).abs() < 1e-12);
        let single = group_eigenvalues(&[2.0f64, 2.0], 1e-9).unwrap();
        assert!(matches!(relative_rank(&single, 0), Err(Error::UndefinedGap)));
    }

    #[test]
    fn effective_dimensions_hand_values() {
        let g = group_eigenvalues(&[3.0f64, 1.0], 1e-9).unwrap();
        let j = GroupRange::new(0, 0);
        let rj = eff_dim_rj(&g, &j).unwrap();
        assert!((rj - 3f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((eff_dim_rre(&g, &j).unwrap() - 0.75).abs() < 1e-12);

        let g3 = group_eigenvalues(&[2.0f64, 1.0, 0.5], 1e-9).unwrap();
        let rre = eff_dim_rre(&g3, &GroupRange::new(0, 0)).unwrap();
        assert!((rre - (2.0 / 1.0 + 1.0 / (1.5 * 1.5))).abs() < 1e-12);
    }

    #[test]
    fn kappa_hand_values() {
        let g = group_eigenvalues(&[3.0f64, 1.0], 1e-9).unwrap();
        let k = kappa_stats(&g, &GroupRange::new(0, 0)).unwrap();
        assert!((k.under - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((k.over - k.under).abs() < 1e-15);
        assert!((k.ratio - 1.0).abs() < 1e-12);

        let g3 = group_eigenvalues(&[4.0f64, 1.0, 0.25], 1e-9).unwrap();
        let k3 = kappa_stats(&g3, &GroupRange::new(0, 0)).unwrap();
        assert!((k3.over - 2.0 / 3.0).abs() < 1e-12);
        assert!((k3.under - 1.0 / 3.75).abs() < 1e-12);
        assert!((k3.ratio - 2.5).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_scale_invariant() {
        let base = [5.0, 2.0, 1.0, 0.5];
        for c in [0.1, 3.0, 100.0] {
            let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
            let g0 = group_eigenvalues(&base, 1e-9).unwrap();
            let g1 = group_eigenvalues(&scaled, 1e-9).unwrap();
            let j = GroupRange::new(0, 1);
            assert!((relative_rank(&g0, 1).unwrap() - relative_rank(&g1, 1).unwrap()).abs() < 1e-9);
            assert!((eff_dim_rj(&g0, &j).unwrap() - eff_dim_rj(&g1, &j).unwrap()).abs() < 1e-9);
            assert!((eff_dim_rre(&g0, &j).unwrap() - eff_dim_rre(&g1, &j).unwrap()).abs() < 1e-9);
            let (k0, k1) = (kappa_stats(&g0, &j).unwrap(), kappa_stats(&g1, &j).unwrap());
            assert!((k0.ratio - k1.ratio).abs() < 1e-9);
            assert!((k0.over - k1.over).abs() < 1e-9);
        }
    }
}

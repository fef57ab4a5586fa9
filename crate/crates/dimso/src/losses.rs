//! Loss functions driving the distribution mapping: randomized absolute
//! error, per-dimension Wasserstein, and Wasserstein combined with a
//! covariance gap. Each returns its value together with the exact gradient
//! with respect to the synthetic batch.
//!
//! Every optimization step draws a fresh [`PairingPlan`]: a random subset of
//! synthetic rows paired with a random subset of target rows. Rows left out
//! of the plan receive zero gradient for that step. Absolute-value kinks use
//! the subgradient convention `sign(0) = 0`; sorting ties break on the
//! original row index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which loss drives the optimization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Randomized absolute error between paired rows.
    #[default]
    Rae,
    /// Per-dimension sorted (1-D Wasserstein) matching.
    W,
    /// Equal-weight combination of Wasserstein and covariance gap.
    Wc,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::Rae => write!(f, "rae"),
            LossKind::W => write!(f, "w"),
            LossKind::Wc => write!(f, "wc"),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rae" => Ok(LossKind::Rae),
            "w" => Ok(LossKind::W),
            "wc" => Ok(LossKind::Wc),
            other => Err(Error::InvalidInput(format!(
                "unknown loss '{other}', expected one of rae|w|wc"
            ))),
        }
    }
}

/// A step's random pairing: `synthetic[k]` is matched with `target[k]`.
///
/// Both sequences have length `m = min(n_synthetic, n_target)`, each is a
/// sample without replacement from its index set, and the pair order is
/// shuffled. [`PairingPlan::draw`] samples the two sides independently;
/// [`PairingPlan::draw_coupled`] keeps a persistent row correspondence and
/// randomizes only which rows participate (what the generator trains with).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingPlan {
    synthetic: Vec<usize>,
    target: Vec<usize>,
}

/// Uniformly random `m`-subset of `0..n` in uniformly random order
/// (partial Fisher-Yates).
fn sample_prefix<R: Rng>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

impl PairingPlan {
    /// Draws a fresh plan for sample counts `(n_synthetic, n_target)`.
    pub fn draw<R: Rng>(n_synthetic: usize, n_target: usize, rng: &mut R) -> Result<PairingPlan> {
        if n_synthetic == 0 || n_target == 0 {
            return Err(Error::InvalidInput(
                "cannot pair empty sample sets".into(),
            ));
        }
        let m = n_synthetic.min(n_target);
        let synthetic = sample_prefix(n_synthetic, m, rng);
        let target = sample_prefix(n_target, m, rng);
        PairingPlan::from_parts(synthetic, target)
    }

    /// The identity pairing `k <-> k`; covers all rows when both sides have
    /// `n` samples.
    pub fn identity(n: usize) -> Result<PairingPlan> {
        PairingPlan::from_parts((0..n).collect(), (0..n).collect())
    }

    /// Draws a plan coupled through a persistent assignment: synthetic row
    /// `k` is always matched with target `assignment[k]`, and the step's
    /// randomness only decides which rows participate.
    ///
    /// With more synthetic rows than targets, every target appears once,
    /// represented by one of its assigned synthetic rows chosen at random;
    /// otherwise every synthetic row participates against its fixed partner.
    /// Either way the plan length is `min(n_synthetic, n_target)` and the
    /// pair order is shuffled.
    pub fn draw_coupled<R: Rng>(
        assignment: &[usize],
        n_target: usize,
        rng: &mut R,
    ) -> Result<PairingPlan> {
        let n_synthetic = assignment.len();
        if n_synthetic == 0 || n_target == 0 {
            return Err(Error::InvalidInput("cannot pair empty sample sets".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&t| t >= n_target) {
            return Err(Error::InvalidInput(format!(
                "assignment references target {bad} but only {n_target} targets exist"
            )));
        }
        let mut synthetic: Vec<usize> = if n_synthetic >= n_target {
            let mut owners: Vec<Vec<usize>> = vec![Vec::new(); n_target];
            for (k, &t) in assignment.iter().enumerate() {
                owners[t].push(k);
            }
            if let Some(empty) = owners.iter().position(Vec::is_empty) {
                return Err(Error::InvalidInput(format!(
                    "assignment leaves target {empty} without a synthetic row"
                )));
            }
            owners
                .iter()
                .map(|o| o[rng.gen_range(0..o.len())])
                .collect()
        } else {
            (0..n_synthetic).collect()
        };
        for i in 0..synthetic.len() {
            let j = rng.gen_range(i..synthetic.len());
            synthetic.swap(i, j);
        }
        let target: Vec<usize> = synthetic.iter().map(|&k| assignment[k]).collect();
        PairingPlan::from_parts(synthetic, target)
    }

    /// Builds a plan from explicit index sequences, validating lengths and
    /// uniqueness.
    pub fn from_parts(synthetic: Vec<usize>, target: Vec<usize>) -> Result<PairingPlan> {
        if synthetic.is_empty() || synthetic.len() != target.len() {
            return Err(Error::InvalidInput(format!(
                "pairing needs equal nonempty index sequences, got {} and {}",
                synthetic.len(),
                target.len()
            )));
        }
        for seq in [&synthetic, &target] {
            let mut sorted = seq.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(
                    "pairing indices must be distinct within each side".into(),
                ));
            }
        }
        Ok(PairingPlan { synthetic, target })
    }

    pub fn len(&self) -> usize {
        self.synthetic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synthetic.is_empty()
    }

    pub fn synthetic_indices(&self) -> &[usize] {
        &self.synthetic
    }

    pub fn target_indices(&self) -> &[usize] {
        &self.target
    }

    fn check_compatible(&self, n_synthetic: usize, n_target: usize) -> Result<()> {
        let max_syn = self.synthetic.iter().max().copied().unwrap_or(0);
        let max_tgt = self.target.iter().max().copied().unwrap_or(0);
        if max_syn >= n_synthetic || max_tgt >= n_target {
            return Err(Error::InvalidInput(format!(
                "pairing indexes row {max_syn}/{max_tgt} outside matrices with {n_synthetic}/{n_target} rows"
            )));
        }
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_columns(s: &Matrix, t: &Matrix) -> Result<()> {
    if s.cols() != t.cols() {
        return Err(Error::ShapeMismatch(format!(
            "synthetic batch has {} columns, target has {}",
            s.cols(),
            t.cols()
        )));
    }
    Ok(())
}

/// Randomized absolute error: the summed elementwise absolute difference
/// between paired rows. Paired synthetic rows receive `sign(s - t)` gradient
/// entries; unpaired rows receive zero.
pub fn rae_loss(s: &Matrix, t: &Matrix, plan: &PairingPlan) -> Result<(f64, Matrix)> {
    check_columns(s, t)?;
    plan.check_compatible(s.rows(), t.rows())?;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(s.rows(), s.cols());
    for (&si, &ti) in plan.synthetic.iter().zip(&plan.target) {
        let srow = s.row(si);
        let trow = t.row(ti);
        let grow = grad.row_mut(si);
        for ((g, &sv), &tv) in grow.iter_mut().zip(srow).zip(trow) {
            let d = sv - tv;
            value += d.abs();
            *g += sign(d);
        }
    }
    Ok((value, grad))
}

/// Per-dimension Wasserstein matching over the plan's subsamples: each
/// column of the sampled synthetic and target rows is sorted and matched
/// rank against rank; the loss is the mean absolute gap per dimension,
/// summed over dimensions. Gradients flow through the sorting permutation
/// back to the contributing synthetic rows.
pub fn wasserstein_loss(s: &Matrix, t: &Matrix, plan: &PairingPlan) -> Result<(f64, Matrix)> {
    check_columns(s, t)?;
    plan.check_compatible(s.rows(), t.rows())?;
    let m = plan.len();
    let inv_m = 1.0 / m as f64;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(s.rows(), s.cols());
    let mut syn_col: Vec<(f64, usize)> = Vec::with_capacity(m);
    let mut tgt_col: Vec<f64> = Vec::with_capacity(m);
    for j in 0..s.cols() {
        syn_col.clear();
        tgt_col.clear();
        for &si in &plan.synthetic {
            syn_col.push((s[(si, j)], si));
        }
        for &ti in &plan.target {
            tgt_col.push(t[(ti, j)]);
        }
        // Ties break on the original row index for a deterministic routing.
        syn_col.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        tgt_col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (&(sv, si), &tv) in syn_col.iter().zip(&tgt_col) {
            let d = sv - tv;
            value += d.abs() * inv_m;
            grad[(si, j)] += sign(d) * inv_m;
        }
    }
    Ok((value, grad))
}

/// Absolute elementwise gap between the sample covariance matrices of two
/// equally sized subsamples (divisor `m - 1`). The gradient with respect to
/// the synthetic subsample is `(2 / (m - 1)) * centered(S) * sign(C_S - C_T)`.
pub fn covariance_gap(s_sub: &Matrix, t_sub: &Matrix) -> Result<(f64, Matrix)> {
    check_columns(s_sub, t_sub)?;
    if s_sub.rows() != t_sub.rows() {
        return Err(Error::ShapeMismatch(format!(
            "covariance gap needs equally sized subsamples, got {} and {} rows",
            s_sub.rows(),
            t_sub.rows()
        )));
    }
    let m = s_sub.rows();
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "covariance needs at least 2 samples, got {m}"
        )));
    }
    let centered = |x: &Matrix| {
        let means = x.col_means();
        let mut c = x.clone();
        for i in 0..c.rows() {
            for (v, mu) in c.row_mut(i).iter_mut().zip(&means) {
                *v -= mu;
            }
        }
        c
    };
    let cs_centered = centered(s_sub);
    let ct_centered = centered(t_sub);
    let denom = 1.0 / (m as f64 - 1.0);
    let mut cov_s = cs_centered.matmul_ta(&cs_centered)?;
    let mut cov_t = ct_centered.matmul_ta(&ct_centered)?;
    for v in cov_s.data_mut() {
        *v *= denom;
    }
    for v in cov_t.data_mut() {
        *v *= denom;
    }

    let mut value = 0.0;
    let mut sign_gap = Matrix::zeros(cov_s.rows(), cov_s.cols());
    for i in 0..cov_s.rows() {
        for j in 0..cov_s.cols() {
            let d = cov_s[(i, j)] - cov_t[(i, j)];
            value += d.abs();
            sign_gap[(i, j)] = sign(d);
        }
    }
    let mut grad = cs_centered.matmul(&sign_gap)?;
    let scale = 2.0 * denom;
    for v in grad.data_mut() {
        *v *= scale;
    }
    Ok((value, grad))
}

/// Equal-weight combination of the Wasserstein loss and the covariance gap
/// over the plan's subsamples; the gradient is the mean of the component
/// gradients mapped back to original rows.
pub fn wc_loss(s: &Matrix, t: &Matrix, plan: &PairingPlan) -> Result<(f64, Matrix)> {
    let (w_value, w_grad) = wasserstein_loss(s, t, plan)?;
    let s_sub = s.select_rows(plan.synthetic_indices());
    let t_sub = t.select_rows(plan.target_indices());
    let (c_value, c_grad_sub) = covariance_gap(&s_sub, &t_sub)?;
    let mut grad = w_grad;
    for v in grad.data_mut() {
        *v *= 0.5;
    }
    for (k, &si) in plan.synthetic_indices().iter().enumerate() {
        let src = c_grad_sub.row(k);
        let dst = grad.row_mut(si);
        for (d, &g) in dst.iter_mut().zip(src) {
            *d += 0.5 * g;
        }
    }
    Ok(((w_value + c_value) / 2.0, grad))
}

/// Evaluates the chosen loss; value plus gradient with respect to `s`.
pub fn loss_and_grad(
    kind: LossKind,
    s: &Matrix,
    t: &Matrix,
    plan: &PairingPlan,
) -> Result<(f64, Matrix)> {
    match kind {
        LossKind::Rae => rae_loss(s, t, plan),
        LossKind::W => wasserstein_loss(s, t, plan),
        LossKind::Wc => wc_loss(s, t, plan),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Matrix::zeros(rows, cols);
        for v in out.data_mut() {
            *v = rng.gen_range(-2.0..2.0);
        }
        out
    }

    /// Central-difference check of `grad` against the loss value function.
    fn fd_check(
        loss: impl Fn(&Matrix) -> f64,
        s: &Matrix,
        grad: &Matrix,
        h: f64,
        rtol: f64,
    ) {
        for i in 0..s.rows() {
            for j in 0..s.cols() {
                let mut plus = s.clone();
                plus[(i, j)] += h;
                let mut minus = s.clone();
                minus[(i, j)] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = grad[(i, j)];
                let diff = (analytic - numeric).abs();
                let scale = analytic.abs().max(numeric.abs());
                assert!(
                    diff <= 1e-8 || diff / scale <= rtol,
                    "({i},{j}): analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn plan_draw_shapes_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = PairingPlan::draw(10, 4, &mut rng).unwrap();
        assert_eq!(plan.len(), 4);
        assert!(plan.synthetic_indices().iter().all(|&i| i < 10));
        assert!(plan.target_indices().iter().all(|&i| i < 4));
        assert!(PairingPlan::draw(0, 4, &mut rng).is_err());
        assert!(PairingPlan::from_parts(vec![0, 0], vec![0, 1]).is_err());
    }

    #[test]
    fn plan_draw_is_uniformly_shuffled_subset() {
        // All 6 = 3! orderings of a full 3-of-3 sample should appear.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..500 {
            let plan = PairingPlan::draw(3, 3, &mut rng).unwrap();
            seen.insert(plan.synthetic_indices().to_vec());
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn coupled_plans_respect_the_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 6 synthetic rows over 3 targets, two owners each.
        let assignment = vec![2, 0, 1, 1, 0, 2];
        for _ in 0..20 {
            let plan = PairingPlan::draw_coupled(&assignment, 3, &mut rng).unwrap();
            assert_eq!(plan.len(), 3);
            let mut targets = plan.target_indices().to_vec();
            targets.sort_unstable();
            assert_eq!(targets, vec![0, 1, 2]);
            for (&s, &t) in plan.synthetic_indices().iter().zip(plan.target_indices()) {
                assert_eq!(assignment[s], t);
            }
        }
        // Fewer synthetic rows than targets: all rows participate.
        let assignment = vec![4, 1];
        let plan = PairingPlan::draw_coupled(&assignment, 5, &mut rng).unwrap();
        assert_eq!(plan.len(), 2);
        let mut syn = plan.synthetic_indices().to_vec();
        syn.sort_unstable();
        assert_eq!(syn, vec![0, 1]);
        // Uncovered target with n_synthetic >= n_target is rejected.
        assert!(PairingPlan::draw_coupled(&[0, 0, 0], 3, &mut rng).is_err());
        assert!(PairingPlan::draw_coupled(&[9], 3, &mut rng).is_err());
    }

    #[test]
    fn rae_zero_on_identical_data() {
        let s = random_matrix(4, 3, 7);
        let plan = PairingPlan::identity(4).unwrap();
        let (value, grad) = rae_loss(&s, &s, &plan).unwrap();
        assert_eq!(value, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rae_hand_example() {
        let s = m(&[vec![0.0], vec![2.0]]);
        let t = m(&[vec![1.0], vec![3.0]]);
        let plan = PairingPlan::identity(2).unwrap();
        let (value, grad) = rae_loss(&s, &t, &plan).unwrap();
        assert_eq!(value, 2.0);
        assert_eq!(grad.data(), &[-1.0, -1.0]);
    }

    #[test]
    fn rae_unpaired_rows_get_zero_gradient() {
        let s = random_matrix(5, 2, 3);
        let t = random_matrix(2, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let plan = PairingPlan::draw(5, 2, &mut rng).unwrap();
        let (_, grad) = rae_loss(&s, &t, &plan).unwrap();
        for i in 0..5 {
            let in_plan = plan.synthetic_indices().contains(&i);
            let row_zero = grad.row(i).iter().all(|&g| g == 0.0);
            assert_eq!(!in_plan, row_zero, "row {i}");
        }
    }

    #[test]
    fn rae_depends_on_the_pairing() {
        let s = m(&[vec![0.0], vec![10.0]]);
        let t = m(&[vec![0.0], vec![10.0]]);
        let aligned = PairingPlan::from_parts(vec![0, 1], vec![0, 1]).unwrap();
        let crossed = PairingPlan::from_parts(vec![0, 1], vec![1, 0]).unwrap();
        let (v_aligned, _) = rae_loss(&s, &t, &aligned).unwrap();
        let (v_crossed, _) = rae_loss(&s, &t, &crossed).unwrap();
        assert_eq!(v_aligned, 0.0);
        assert_eq!(v_crossed, 20.0);
    }

    #[test]
    fn rae_gradient_matches_finite_differences() {
        let s = random_matrix(5, 3, 21);
        let t = random_matrix(4, 3, 22);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let plan = PairingPlan::draw(5, 4, &mut rng).unwrap();
        let (_, grad) = rae_loss(&s, &t, &plan).unwrap();
        fd_check(
            |x| rae_loss(x, &t, &plan).unwrap().0,
            &s,
            &grad,
            1e-5,
            1e-4,
        );
    }

    #[test]
    fn wasserstein_zero_on_identical_rows_any_order() {
        let s = m(&[vec![1.0, -1.0], vec![0.5, 2.0], vec![-3.0, 0.0]]);
        let t = s.select_rows(&[2, 0, 1]);
        let plan = PairingPlan::identity(3).unwrap();
        let (value, _) = wasserstein_loss(&s, &t, &plan).unwrap();
        assert!(value.abs() < 1e-15);
    }

    #[test]
    fn wasserstein_hand_example() {
        let s = m(&[vec![0.0], vec![1.0]]);
        let t = m(&[vec![1.0], vec![2.0]]);
        let plan = PairingPlan::identity(2).unwrap();
        let (value, grad) = wasserstein_loss(&s, &t, &plan).unwrap();
        assert!((value - 1.0).abs() < 1e-15);
        // Sorted matching pairs 0->1 and 1->2, both below target.
        assert_eq!(grad.data(), &[-0.5, -0.5]);
    }

    #[test]
    fn wasserstein_invariant_to_row_order_under_full_plan() {
        let s = random_matrix(6, 3, 31);
        let t = random_matrix(6, 3, 32);
        let plan = PairingPlan::identity(6).unwrap();
        let (value, _) = wasserstein_loss(&s, &t, &plan).unwrap();
        let perm = [3, 1, 5, 0, 4, 2];
        let s_perm = s.select_rows(&perm);
        let (value_perm, _) = wasserstein_loss(&s_perm, &t, &plan).unwrap();
        assert!((value - value_perm).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_gradient_matches_finite_differences() {
        let s = random_matrix(6, 3, 41);
        let t = random_matrix(5, 3, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let plan = PairingPlan::draw(6, 5, &mut rng).unwrap();
        let (_, grad) = wasserstein_loss(&s, &t, &plan).unwrap();
        fd_check(
            |x| wasserstein_loss(x, &t, &plan).unwrap().0,
            &s,
            &grad,
            1e-5,
            1e-4,
        );
    }

    #[test]
    fn covariance_gap_zero_on_identical() {
        let s = random_matrix(5, 3, 50);
        let (value, grad) = covariance_gap(&s, &s).unwrap();
        assert_eq!(value, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn covariance_gap_identity_vs_scaled_identity() {
        // Columns (a,a,-a,-a) and (a,-a,a,-a) with a = sqrt(3)/2 have unit
        // sample covariance; scaling rows by sqrt(2) doubles it.
        let a = (3.0f64).sqrt() / 2.0;
        let s = m(&[
            vec![a, a],
            vec![a, -a],
            vec![-a, a],
            vec![-a, -a],
        ]);
        let mut t = s.clone();
        for v in t.data_mut() {
            *v *= (2.0f64).sqrt();
        }
        let (value, _) = covariance_gap(&s, &t).unwrap();
        assert!((value - 2.0).abs() < 1e-12, "value {value}");
    }

    #[test]
    fn covariance_gap_rejects_tiny_samples() {
        let s = random_matrix(1, 3, 1);
        assert!(covariance_gap(&s, &s).is_err());
    }

    #[test]
    fn covariance_gradient_matches_finite_differences() {
        let s = random_matrix(6, 3, 61);
        let t = random_matrix(6, 3, 62);
        let (_, grad) = covariance_gap(&s, &t).unwrap();
        fd_check(
            |x| covariance_gap(x, &t).unwrap().0,
            &s,
            &grad,
            1e-5,
            1e-4,
        );
    }

    #[test]
    fn wc_is_the_mean_of_its_components() {
        let s = random_matrix(6, 3, 71);
        let t = random_matrix(5, 3, 72);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let plan = PairingPlan::draw(6, 5, &mut rng).unwrap();
        let (wc, _) = wc_loss(&s, &t, &plan).unwrap();
        let (w, _) = wasserstein_loss(&s, &t, &plan).unwrap();
        let s_sub = s.select_rows(plan.synthetic_indices());
        let t_sub = t.select_rows(plan.target_indices());
        let (c, _) = covariance_gap(&s_sub, &t_sub).unwrap();
        assert!((wc - (w + c) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn wc_zero_on_identical_data() {
        let s = random_matrix(5, 2, 81);
        let plan = PairingPlan::identity(5).unwrap();
        let (value, _) = wc_loss(&s, &s, &plan).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn wc_gradient_matches_finite_differences() {
        let s = random_matrix(6, 3, 91);
        let t = random_matrix(6, 3, 92);
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let plan = PairingPlan::draw(6, 6, &mut rng).unwrap();
        let (_, grad) = wc_loss(&s, &t, &plan).unwrap();
        fd_check(|x| wc_loss(x, &t, &plan).unwrap().0, &s, &grad, 1e-5, 1e-4);
    }

    #[test]
    fn column_mismatch_is_rejected() {
        let s = random_matrix(4, 3, 1);
        let t = random_matrix(4, 2, 2);
        let plan = PairingPlan::identity(4).unwrap();
        assert!(rae_loss(&s, &t, &plan).is_err());
        assert!(wasserstein_loss(&s, &t, &plan).is_err());
        assert!(wc_loss(&s, &t, &plan).is_err());
    }

    proptest! {
        #[test]
        fn losses_are_nonnegative(seed in 0u64..500) {
            let s = random_matrix(5, 2, seed);
            let t = random_matrix(4, 2, seed.wrapping_add(1000));
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2000));
            let plan = PairingPlan::draw(5, 4, &mut rng).unwrap();
            for kind in [LossKind::Rae, LossKind::W, LossKind::Wc] {
                let (value, _) = loss_and_grad(kind, &s, &t, &plan).unwrap();
                prop_assert!(value >= 0.0);
            }
        }

        #[test]
        fn full_plan_w_and_cov_are_row_order_invariant(seed in 0u64..200) {
            let s = random_matrix(6, 2, seed);
            let t = random_matrix(6, 2, seed.wrapping_add(400));
            let plan = PairingPlan::identity(6).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..6).collect();
            for i in 0..6 {
                let j = rng.gen_range(i..6);
                perm.swap(i, j);
            }
            let s_perm = s.select_rows(&perm);
            let (w_a, _) = wasserstein_loss(&s, &t, &plan).unwrap();
            let (w_b, _) = wasserstein_loss(&s_perm, &t, &plan).unwrap();
            prop_assert!((w_a - w_b).abs() < 1e-9);
            let (c_a, _) = covariance_gap(&s, &t).unwrap();
            let (c_b, _) = covariance_gap(&s_perm, &t).unwrap();
            prop_assert!((c_a - c_b).abs() < 1e-9);
        }
    }
}

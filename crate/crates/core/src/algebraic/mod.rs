//! Algebraic CPD: symmetric kernel of `R_{m,l}(T)`, pencil decomposition of
//! the folded kernel to obtain `F`, then `C`, `A` and `B` by linear algebra.

mod als;
mod hyperplanes;
mod recover;

use std::time::Instant;

use serde::Serialize;

pub use als::als_baseline;
pub use hyperplanes::{f_from_c, recover_c_from_f, sample_budget, FMatrix};
pub use recover::{recover_ab, AbRecovery, INTERSECTION_DEFECT_MAX};

use crate::combinatorics::binomial;
use crate::error::{CpdError, LAttempt, Result};
use crate::gevd::{gevd_cpd_report, power_root, PencilConfig, PencilReport};
use crate::kernel::{expand_and_fold, sym_kernel_rows, sym_kernel_with, KernelConfig};
use crate::linalg::{relative_diff, Mat, TAU_RANK};
use crate::multilinear::{
    best_rank1, line_angle, mode3_compress_tol, synthesize, FactorTriple, Mode3Compression, Tensor3,
};
use crate::structured::{build_sym_gram_with, gram_rows, row_group_count, sym_dim, GramConfig};

/// Above this many entries of `G` the kernel comes from the streamed Gram matrix.
pub const ROW_SVD_MAX_ENTRIES: u128 = 20_000_000;

/// Largest folded kernel tensor (entries) materialized before the pencil step.
pub const MAX_FOLD_ENTRIES: u128 = 200_000_000;

#[derive(Debug, Clone, Copy)]
pub struct CpdConfig {
    pub l_max: usize,
    pub kernel: KernelConfig,
    pub pencil: PencilConfig,
    pub gram: GramConfig,
    /// Relative singular value cutoff for the mode-3 compression.
    pub compress_tau: f64,
    /// Relative orthogonality tolerance when counting hyperplane members.
    pub orth_tol: f64,
    pub search_seed: u64,
    /// Results with a larger relative residual are rejected.
    pub residual_max: f64,
}

impl Default for CpdConfig {
    fn default() -> Self {
        Self {
            l_max: 3,
            kernel: KernelConfig::default(),
            pencil: PencilConfig::default(),
            gram: GramConfig::default(),
            compress_tau: TAU_RANK,
            orth_tol: 1e-7,
            search_seed: 0x0c0ffee,
            residual_max: 1e-6,
        }
    }
}

impl CpdConfig {
    /// Derives every internal seed from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.pencil.mixing_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
        self.search_seed = seed.rotate_left(17) ^ 0x2545_f491_4f6c_dd1d;
        self
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PhaseDiagnostics {
    pub compressed_k: usize,
    pub compression_residual: f64,
    pub gram_dim: usize,
    pub gram_seconds: f64,
    /// Ratio of the first nonzero to the last zero eigenvalue.
    pub kernel_gap: f64,
    /// Smallest Gram eigenvalues relative to the largest.
    pub kernel_spectrum: Vec<f64>,
    pub kernel_seconds: f64,
    pub pencil: Option<PencilReport>,
    pub pencil_seconds: f64,
    /// Worst fit of a pencil column to a symmetric power.
    pub power_fit_min: f64,
    /// Worst angle between the two estimates of each column of `F`.
    pub f_mode_angle_max: f64,
    pub hyperplane_samples: usize,
    /// Worst subspace intersection defect when recovering `A` and `B`.
    pub intersection_defect: f64,
    pub total_seconds: f64,
    /// Values of `l` tried and rejected before this one.
    pub rejected: Vec<LAttempt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CpdResult {
    pub factors: FactorTriple,
    pub l_used: usize,
    pub m: usize,
    pub kernel_dim: usize,
    pub residual: f64,
    pub phase_diagnostics: PhaseDiagnostics,
}

/// `K = R` case (after mode-3 compression).
pub fn algorithm1(t: &Tensor3, r: usize, l: usize, cfg: &CpdConfig) -> Result<CpdResult> {
    let comp = mode3_compress_tol(t, cfg.compress_tau);
    let k = comp.basis.ncols();
    if k != r {
        return Err(CpdError::InvalidArgument(format!(
            "the square case needs mode-3 rank equal to R = {r}, found {k}"
        )));
    }
    run(t, &comp, r, l, cfg)
}

/// `K < R` case; a square input is handed to [`algorithm1`].
pub fn algorithm2(t: &Tensor3, r: usize, l: usize, cfg: &CpdConfig) -> Result<CpdResult> {
    let comp = mode3_compress_tol(t, cfg.compress_tau);
    let k = comp.basis.ncols();
    if k > r {
        return Err(rank_exceeded(k, r));
    }
    run(t, &comp, r, l, cfg)
}

/// Either algorithm, chosen by the mode-3 rank.
pub fn decompose(t: &Tensor3, r: usize, l: usize, cfg: &CpdConfig) -> Result<CpdResult> {
    algorithm2(t, r, l, cfg)
}

/// Tries `l = 0, 1, ..., l_max` and returns the first success.
pub fn auto_l(t: &Tensor3, r: usize, l_max: usize, cfg: &CpdConfig) -> Result<CpdResult> {
    let started = Instant::now();
    let comp = mode3_compress_tol(t, cfg.compress_tau);
    precheck(t, &comp, r)?;
    let mut attempts = Vec::new();
    for l in 0..=l_max {
        match run(t, &comp, r, l, cfg) {
            Ok(mut res) => {
                res.phase_diagnostics.rejected = attempts;
                res.phase_diagnostics.total_seconds = started.elapsed().as_secs_f64();
                return Ok(res);
            }
            Err(e @ CpdError::ResourceLimit { .. }) => return Err(e),
            Err(e) => {
                let (kernel_dim, expected_dim) = match &e {
                    CpdError::KernelDimension { found, expected, .. } => (Some(*found), Some(*expected)),
                    _ => (None, None),
                };
                attempts.push(LAttempt {
                    l,
                    kernel_dim,
                    expected_dim,
                    reason: e.to_string(),
                    condition: e.is_condition_violation(),
                });
            }
        }
    }
    Err(CpdError::AllRejected { l_max, attempts })
}

fn rank_exceeded(k: usize, r: usize) -> CpdError {
    CpdError::Condition(format!("mode-3 rank {k} exceeds the requested rank {r}"))
}

fn precheck(t: &Tensor3, comp: &Mode3Compression, r: usize) -> Result<()> {
    let (ni, nj, _) = t.dims();
    let k = comp.basis.ncols();
    if r == 0 {
        return Err(CpdError::InvalidArgument("rank must be positive".into()));
    }
    if t.norm() == 0.0 {
        return Err(CpdError::DegenerateInput("zero tensor".into()));
    }
    if k > r {
        return Err(rank_exceeded(k, r));
    }
    if r == 1 {
        return Ok(());
    }
    if k == 1 {
        return Err(CpdError::Condition(
            "mode-3 rank 1 admits no essentially unique decomposition with R >= 2".into(),
        ));
    }
    let m = r - k + 2;
    if m > ni.min(nj) {
        return Err(CpdError::Condition(format!(
            "m = R - K + 2 = {m} exceeds min(I, J) = {}",
            ni.min(nj)
        )));
    }
    Ok(())
}

fn run(t: &Tensor3, comp: &Mode3Compression, r: usize, l: usize, cfg: &CpdConfig) -> Result<CpdResult> {
    let started = Instant::now();
    precheck(t, comp, r)?;
    let k = comp.basis.ncols();
    // whiten mode 3: the compressed columns are U * diag(sigma), so dividing by their
    // norms leaves a third factor about as well conditioned as A (.) B
    let unfolded = comp.tensor.unfold_r10();
    let scale: Vec<f64> = unfolded.column_iter().map(|c| c.norm()).collect();
    let whitened = Mat::from_fn(unfolded.nrows(), k, |row, col| unfolded[(row, col)] / scale[col]);
    let (ni, nj, _) = comp.tensor.dims();
    let tw = Tensor3::from_unfolding(ni, nj, &whitened)?;
    let tc = &tw;
    let mut diag = PhaseDiagnostics {
        compressed_k: k,
        compression_residual: comp.residual,
        ..PhaseDiagnostics::default()
    };
    if r == 1 {
        return rank_one(t, comp, diag, started);
    }
    let m = r - k + 2;
    let d = m + l;
    let expected = binomial(r, k - 1);
    let fold_entries = (k as u128).pow(d as u32) * expected;
    if fold_entries > MAX_FOLD_ENTRIES {
        return Err(CpdError::ResourceLimit {
            what: "folded kernel entries",
            size: fold_entries,
            limit: MAX_FOLD_ENTRIES,
        });
    }
    let n = expected as usize;

    // small problems take the kernel straight from the rows of G
    let row_entries = row_group_count(ni, nj, m, l).saturating_mul(sym_dim(k, d));
    let clock = Instant::now();
    let kernel = if row_entries <= ROW_SVD_MAX_ENTRIES {
        let rows = gram_rows(tc, m, l)?;
        diag.gram_dim = rows.ncols();
        diag.gram_seconds = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let kernel = sym_kernel_rows(&rows, n, &cfg.kernel)?;
        diag.kernel_seconds = clock.elapsed().as_secs_f64();
        kernel
    } else {
        let gram = build_sym_gram_with(tc, m, l, &cfg.gram)?;
        diag.gram_dim = gram.dim;
        diag.gram_seconds = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let kernel = sym_kernel_with(&gram.q, n, &cfg.kernel)?;
        diag.kernel_seconds = clock.elapsed().as_secs_f64();
        kernel
    };
    diag.kernel_gap = kernel.gap;
    diag.kernel_spectrum = kernel.spectrum.clone();

    let clock = Instant::now();
    let folded = expand_and_fold(&kernel, k, m, l)?;
    let (pencil, report) = gevd_cpd_report(&folded, n, &cfg.pencil)?;
    diag.pencil = Some(report);
    diag.pencil_seconds = clock.elapsed().as_secs_f64();

    // F from the power columns, cross-checked against the first mode
    let mut f = Mat::zeros(k, n);
    let mut power_fit = 1.0f64;
    let mut mode_angle = 0.0f64;
    for col in 0..n {
        let power = pencil.b.column(col);
        let mut v = if d > 2 {
            let (v, fit) = power_root(power.as_slice(), k, d - 1)?;
            power_fit = power_fit.min(fit);
            v
        } else {
            power.into_owned()
        };
        v /= v.norm();
        mode_angle = mode_angle.max(line_angle(&v, &pencil.a.column(col).into_owned()));
        f.set_column(col, &v);
    }
    diag.power_fit_min = power_fit;
    diag.f_mode_angle_max = mode_angle;
    let fm = FMatrix { f };

    let (c, samples) = recover_c_from_f(&fm, r, k, cfg.orth_tol, cfg.search_seed)?;
    diag.hyperplane_samples = samples;
    let ab = recover_ab(tc, &c, &fm)?;
    diag.intersection_defect = ab.defect;
    let c = Mat::from_fn(k, r, |row, col| ab.c[(row, col)] * scale[row]);

    let factors = FactorTriple::new(ab.a, ab.b, comp.expand_c(&c))?.normalized();
    let residual = relative_diff(&synthesize(&factors).unfold_r10(), &t.unfold_r10());
    if residual > cfg.residual_max || !residual.is_finite() {
        return Err(CpdError::VerificationFailure {
            what: "relative reconstruction residual",
            value: residual,
            limit: cfg.residual_max,
        });
    }
    diag.total_seconds = started.elapsed().as_secs_f64();
    Ok(CpdResult {
        factors,
        l_used: l,
        m,
        kernel_dim: kernel.n,
        residual,
        phase_diagnostics: diag,
    })
}

fn rank_one(t: &Tensor3, comp: &Mode3Compression, mut diag: PhaseDiagnostics, started: Instant) -> Result<CpdResult> {
    let (ni, nj, _) = t.dims();
    let outer = best_rank1(&comp.tensor.unfold_r10())?;
    let ab = Mat::from_fn(ni, nj, |i, j| outer.u[i * nj + j]);
    let inner = best_rank1(&ab)?;
    let a = Mat::from_column_slice(ni, 1, inner.u.as_slice());
    let b = Mat::from_column_slice(nj, 1, inner.v.as_slice());
    let c = Mat::from_column_slice(
        comp.basis.ncols(),
        1,
        (&outer.v * (outer.sigma * inner.sigma)).as_slice(),
    );
    let factors = FactorTriple::new(a, b, comp.expand_c(&c))?.normalized();
    let residual = relative_diff(&synthesize(&factors).unfold_r10(), &t.unfold_r10());
    diag.total_seconds = started.elapsed().as_secs_f64();
    Ok(CpdResult {
        factors,
        l_used: 0,
        m: 2,
        kernel_dim: 0,
        residual,
        phase_diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multilinear::match_factors;
    use crate::random::{hankel_instance, random_instance as random};

    #[test]
    fn square_case_small() {
        let (truth, t) = random((3, 3, 4), 4, 1);
        let res = algorithm1(&t, 4, 0, &CpdConfig::default()).unwrap();
        assert_eq!((res.m, res.l_used, res.kernel_dim), (2, 0, 4));
        assert!(res.residual <= 1e-8);
        assert!(match_factors(&res.factors, &truth).unwrap().max_column_angle <= 1e-6);
    }

    #[test]
    fn non_square_case_small() {
        let (truth, t) = random((4, 5, 6), 7, 2);
        let res = algorithm2(&t, 7, 1, &CpdConfig::default()).unwrap();
        assert_eq!((res.m, res.phase_diagnostics.gram_dim, res.kernel_dim), (3, 126, 21));
        assert!(res.residual <= 1e-8, "{}", res.residual);
        assert!(match_factors(&res.factors, &truth).unwrap().max_column_angle <= 1e-6);
    }

    #[test]
    fn lifting_needed() {
        let (_, t) = random((3, 7, 12), 12, 3);
        let cfg = CpdConfig::default();
        let err = algorithm1(&t, 12, 0, &cfg).unwrap_err();
        assert!(err.is_condition_violation(), "{err}");
        let res = auto_l(&t, 12, 3, &cfg).unwrap();
        assert_eq!(res.l_used, 1);
        assert_eq!(res.phase_diagnostics.rejected.len(), 1);
        let rej = &res.phase_diagnostics.rejected[0];
        assert!(rej.kernel_dim.unwrap() >= rej.expected_dim.unwrap());
    }

    #[test]
    fn rank_one_shortcut() {
        let (truth, t) = random((2, 3, 4), 1, 4);
        let res = auto_l(&t, 1, 0, &CpdConfig::default()).unwrap();
        assert!(res.residual < 1e-14);
        assert!(match_factors(&res.factors, &truth).unwrap().max_column_angle < 1e-12);
    }

    #[test]
    fn prechecks() {
        let (_, t) = random((3, 3, 4), 4, 5);
        let cfg = CpdConfig::default();
        assert!(matches!(auto_l(&t, 3, 2, &cfg), Err(CpdError::Condition(_))));
        assert!(matches!(
            auto_l(&Tensor3::zeros((2, 2, 2)), 1, 0, &cfg),
            Err(CpdError::DegenerateInput(_))
        ));
        let (_, t) = random((3, 3, 3), 6, 6);
        // m = 6 - 3 + 2 = 5 > 3
        assert!(matches!(auto_l(&t, 6, 2, &cfg), Err(CpdError::Condition(_))));
    }

    #[test]
    fn beyond_generic_bound_is_rejected() {
        let (_, t) = random((3, 3, 5), 5, 7);
        match auto_l(&t, 5, 3, &CpdConfig::default()) {
            Err(CpdError::AllRejected { attempts, .. }) => {
                assert_eq!(attempts.len(), 4);
                assert!(attempts.iter().all(|a| a.condition));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hankel_instance_needs_lifting() {
        let truth = hankel_instance();
        let t = synthesize(&truth);
        let cfg = CpdConfig::default();
        assert!(algorithm1(&t, 12, 0, &cfg).unwrap_err().is_condition_violation());
        let res = algorithm1(&t, 12, 1, &cfg).unwrap();
        assert!(res.residual <= 1e-8, "{}", res.residual);
        assert!(match_factors(&res.factors, &truth).unwrap().max_column_angle <= 1e-6);
    }
}

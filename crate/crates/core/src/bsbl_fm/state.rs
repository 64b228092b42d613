//! Solver state and the sweep → select → apply iteration.
//!
//! The state keeps the full `n × n` matrix `ΦᵀC⁻¹Φ` and the vector `ΦᵀC⁻¹y`.
//! Their diagonal blocks are the per-block `S_i`, `Q_i`; the off-diagonal
//! columns are exactly what a rank-`d_i` Woodbury update of `C⁻¹` needs, so
//! every step refreshes all blocks in `O(n²·d_i)`.
//!
//! For an active block, mapping `S_i` back to `s_i = Φᵢᵀ C₋ᵢ⁻¹ Φᵢ` through
//! `(I − S_i A_i)⁻¹` cancels catastrophically once the block is well
//! determined (`‖A_i s_i‖` ~ 1e8 is routine with `β⁻¹ = 1e-6`). Active blocks
//! therefore rebuild their excluded statistics from the other active blocks
//! directly: all at once from one factorization of the active set
//! ([`SolverState::batch_excluded_stats`]), per block with a QR of the others
//! as the fallback ([`SolverState::excluded_stats`]).

use nalgebra::{DMatrix, DVector};

use super::block::{block_cost, candidate_update, factorize, normalized_identity, regularize};
use super::config::{CorrelationModel, RefreshMode, SolverConfig};
use crate::linalg::{chol_logdet, cholesky, psd_factor, symmetrize};
use crate::signal_model::BlockPartition;
use crate::{Error, Result};

/// Prior covariance of one block, `A_i = γ_i·B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub index: usize,
    pub active: bool,
    pub a: DMatrix<f64>,
    pub gamma: f64,
    pub b: DMatrix<f64>,
}

impl BlockState {
    fn inactive(index: usize, d: usize) -> Self {
        BlockState {
            index,
            active: false,
            a: DMatrix::zeros(d, d),
            gamma: 0.0,
            b: normalized_identity(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Add,
    Reestimate,
    Delete,
}

/// One proposed change to one block and the cost change it would cause.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub block: usize,
    pub action: Action,
    /// Proposed `A_i` (zero for a deletion).
    pub a_star: DMatrix<f64>,
    pub gamma: f64,
    pub b_star: DMatrix<f64>,
    /// `ℒ(A*) − ℒ(A_i)`; `+∞` when the candidate is unusable.
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    /// Ordered by block, then add/re-estimate before delete.
    pub candidates: Vec<Candidate>,
    /// AR coefficient used to regularize this sweep (0 under SIM).
    pub shared_r: f64,
    /// Blocks whose candidate could not be formed (singular `s`).
    pub degenerate: Vec<usize>,
}

impl Sweep {
    /// Minimum finite `ΔL`; ties resolve to the earliest candidate, which is
    /// the lowest block index.
    pub fn best(&self) -> Option<&Candidate> {
        self.candidates
            .iter()
            .filter(|c| c.delta.is_finite())
            .fold(None, |best: Option<&Candidate>, c| match best {
                Some(b) if b.delta <= c.delta => Some(b),
                _ => Some(c),
            })
    }
}

/// Record of an applied step.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepRecord {
    pub block: usize,
    pub action: Action,
    pub delta: f64,
    pub cost: f64,
    pub shared_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// A step was applied and its cost change was at least `η`.
    Continue,
    /// A step was applied and its `|ΔL|` fell below `η`.
    Converged,
    /// No candidate lowers the cost; nothing was applied.
    NoDescent,
}

/// Posterior over the active coefficients.
#[derive(Debug, Clone)]
pub struct Posterior {
    /// Coefficient indices (into `0..n`) covered by `mu` and `sigma`, in block order.
    pub support: Vec<usize>,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub cost: f64,
}

/// Relative size below which a cost change is indistinguishable from round-off.
const DELTA_ROUNDOFF: f64 = 1e-12;

/// `new − old`, snapped to zero when it is below round-off of the operands.
/// Keeps no-op re-estimates from registering as descent depending on the
/// scale of the data.
fn cost_change(new: f64, old: f64) -> f64 {
    let delta = new - old;
    if delta.abs() <= DELTA_ROUNDOFF * new.abs().max(old.abs()) {
        0.0
    } else {
        delta
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    partition: BlockPartition,
    cfg: SolverConfig,
    beta: f64,
    m: usize,
    op: DMatrix<f64>,
    y: DVector<f64>,
    y_sq: f64,
    /// `ΦᵀΦ`
    gram: DMatrix<f64>,
    /// `Φᵀy`
    proj: DVector<f64>,
    /// `ΦᵀC⁻¹Φ`
    s_full: DMatrix<f64>,
    /// `ΦᵀC⁻¹y`
    q_full: DVector<f64>,
    blocks: Vec<BlockState>,
    cost: f64,
    steps: Vec<StepRecord>,
    degenerate_candidates: usize,
}

impl SolverState {
    /// Empty model: every block inactive, `C = β⁻¹I`, so `S_i = βΦᵢᵀΦᵢ` and
    /// `Q_i = βΦᵢᵀy`.
    pub fn init(
        y: &[f64],
        op: &DMatrix<f64>,
        partition: &BlockPartition,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if op.ncols() != partition.n() {
            return Err(Error::Dimension {
                context: "operator columns vs partition length",
                expected: partition.n(),
                actual: op.ncols(),
            });
        }
        if op.nrows() != y.len() {
            return Err(Error::Dimension {
                context: "operator rows vs measurement length",
                expected: y.len(),
                actual: op.nrows(),
            });
        }
        if !y.iter().chain(op.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("inputs contain non-finite values".into()));
        }
        let beta = 1.0 / cfg.beta_inv;
        let yv = DVector::from_column_slice(y);
        let gram = op.tr_mul(op);
        let proj = op.tr_mul(&yv);
        let y_sq = yv.norm_squared();
        let m = y.len();
        let blocks = partition
            .sizes()
            .iter()
            .enumerate()
            .map(|(i, &d)| BlockState::inactive(i, d))
            .collect();
        Ok(SolverState {
            partition: partition.clone(),
            cfg: cfg.clone(),
            beta,
            m,
            op: op.clone(),
            y: yv,
            y_sq,
            s_full: &gram * beta,
            q_full: &proj * beta,
            gram,
            proj,
            blocks,
            cost: m as f64 * cfg.beta_inv.ln() + beta * y_sq,
            steps: Vec::new(),
            degenerate_candidates: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn blocks(&self) -> &[BlockState] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &BlockState {
        &self.blocks[i]
    }

    /// Incrementally maintained cost `log|C| + yᵀC⁻¹y`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn degenerate_candidates(&self) -> usize {
        self.degenerate_candidates
    }

    pub fn active_blocks(&self) -> Vec<usize> {
        self.blocks.iter().filter(|b| b.active).map(|b| b.index).collect()
    }

    /// `S_i = ΦᵢᵀC⁻¹Φᵢ`.
    pub fn s(&self, i: usize) -> DMatrix<f64> {
        let r = self.partition.range(i);
        self.s_full.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    /// `Q_i = ΦᵢᵀC⁻¹y`.
    pub fn q(&self, i: usize) -> DVector<f64> {
        let r = self.partition.range(i);
        self.q_full.rows(r.start, r.len()).into_owned()
    }

    /// `(s_i, q_i)` measured against `C₋ᵢ`, the covariance without block `i`.
    ///
    /// For an active block, with `U = [Φ_j L_j]` over the other active blocks
    /// (`A_j = L_j L_jᵀ`) and `U = QR`, `βC₋ᵢ⁻¹ = β²(I + βUUᵀ)⁻¹` splits into the
    /// complement of `range(Q)` plus `Q(I + βRRᵀ)⁻¹Qᵀ`; `s_i` is then a sum of
    /// two Gram matrices and stays PSD even when `Φ_i` nearly lies in `range(U)`.
    pub fn excluded_stats(&self, i: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if !self.blocks[i].active {
            return Ok((self.s(i), self.q(i)));
        }
        let r = self.partition.range(i);
        let beta = self.beta;
        let others: Vec<&BlockState> = self
            .blocks
            .iter()
            .filter(|b| b.active && b.index != i)
            .collect();
        if others.is_empty() {
            let g_ii = self.gram.view((r.start, r.start), (r.len(), r.len()));
            return Ok((g_ii * beta, self.proj.rows(r.start, r.len()) * beta));
        }
        let k: usize = others.iter().map(|b| b.a.nrows()).sum();
        let mut u = DMatrix::zeros(self.m, k);
        let mut off = 0;
        for b in &others {
            let lb = psd_factor(&b.a)
                .ok_or_else(|| Error::degenerate(Some(b.index), "A is not positive semidefinite"))?;
            let rb = self.partition.range(b.index);
            u.columns_mut(off, rb.len())
                .copy_from(&(self.op.columns(rb.start, rb.len()) * lb));
            off += rb.len();
        }
        let qr = u.qr();
        let (q_u, r_u) = (qr.q(), qr.r());
        let mut inner = &r_u * r_u.transpose() * beta;
        for j in 0..inner.nrows() {
            inner[(j, j)] += 1.0;
        }
        symmetrize(&mut inner);
        let t = cholesky(&inner)
            .ok_or_else(|| Error::degenerate(Some(i), "reduced covariance is not invertible"))?
            .l();
        let phi_i = self.op.columns(r.start, r.len());
        let f = q_u.tr_mul(&phi_i);
        let e = phi_i - &q_u * &f;
        let fy = q_u.tr_mul(&self.y);
        let ey = &self.y - &q_u * &fy;
        let ft = t
            .solve_lower_triangular(&f)
            .ok_or_else(|| Error::degenerate(Some(i), "reduced covariance is not invertible"))?;
        let fyt = t
            .solve_lower_triangular(&fy)
            .ok_or_else(|| Error::degenerate(Some(i), "reduced covariance is not invertible"))?;
        let mut s = (e.tr_mul(&e) + ft.tr_mul(&ft)) * beta;
        let q = (e.tr_mul(&ey) + ft.tr_mul(&fyt)) * beta;
        symmetrize(&mut s);
        Ok((s, q))
    }

    /// Excluded statistics of every active block from one factorization.
    ///
    /// With `M = I + βLᵀΦ_aᵀΦ_aL = RᵀR` over all active blocks, moving block
    /// `i`'s columns of `R` to the end and re-triangularizing leaves a trailing
    /// `d × d` block `X` and right-hand side `t` with `I + Lᵢᵀs_iLᵢ = XᵀX` and
    /// `Lᵢᵀq_i = Xᵀt`. Only the band below the moved columns is touched, so a
    /// block costs `O(d·K²)` instead of a fresh QR. Entries are `None` where the
    /// result cannot be trusted; callers fall back to [`Self::excluded_stats`].
    pub fn batch_excluded_stats(&self) -> Vec<Option<(DMatrix<f64>, DVector<f64>)>> {
        let mut out = vec![None; self.blocks.len()];
        let active: Vec<&BlockState> = self.blocks.iter().filter(|b| b.active).collect();
        if active.len() < 2 {
            return out;
        }
        let mut factors = Vec::with_capacity(active.len());
        let mut offsets = Vec::with_capacity(active.len());
        let mut k = 0;
        for b in &active {
            let Some(c) = cholesky(&b.a) else {
                return out;
            };
            factors.push(c.l());
            offsets.push(k);
            k += b.a.nrows();
        }
        let beta = self.beta;
        let mut m = DMatrix::identity(k, k);
        let mut rhs = DVector::zeros(k);
        for (x, bx) in active.iter().enumerate() {
            let rx = self.partition.range(bx.index);
            let lx = &factors[x];
            rhs.rows_mut(offsets[x], rx.len())
                .copy_from(&(lx.tr_mul(&self.proj.rows(rx.start, rx.len())) * beta));
            for (z, bz) in active.iter().enumerate().skip(x) {
                let rz = self.partition.range(bz.index);
                let g = self.gram.view((rx.start, rz.start), (rx.len(), rz.len()));
                let blk = lx.tr_mul(&(g * &factors[z])) * beta;
                let mut view = m.view_mut((offsets[x], offsets[z]), (rx.len(), rz.len()));
                view += &blk;
                if z != x {
                    m.view_mut((offsets[z], offsets[x]), (rz.len(), rx.len()))
                        .copy_from(&blk.transpose());
                }
            }
        }
        symmetrize(&mut m);
        let Some(chol) = cholesky(&m) else {
            return out;
        };
        let lower = chol.l();
        let Some(h) = lower.solve_lower_triangular(&rhs) else {
            return out;
        };
        let upper = lower.transpose();
        for (x, b) in active.iter().enumerate() {
            let d = b.a.nrows();
            let (xm, t) = move_block_last(&upper, &h, offsets[x], d);
            out[b.index] = whitened_to_excluded(&factors[x], &xm, &t);
        }
        out
    }

    /// Evaluates every block's add / re-estimate / delete candidate.
    pub fn sweep(&self) -> Result<Sweep> {
        struct Raw {
            s: DMatrix<f64>,
            q: DVector<f64>,
            old_cost: f64,
            cand: Option<(f64, DMatrix<f64>)>,
        }

        let mut fast = self.batch_excluded_stats();
        let mut raws = Vec::with_capacity(self.blocks.len());
        let mut degenerate = Vec::new();
        for blk in &self.blocks {
            let i = blk.index;
            let (s, q) = match fast.get_mut(i).and_then(Option::take) {
                Some(sq) => sq,
                None => self.excluded_stats(i)?,
            };
            let old_cost = if blk.active {
                block_cost(&blk.a, &s, &q).map_err(|e| e.in_block(i))?
            } else {
                0.0
            };
            let cand = match candidate_update(&s, &q) {
                Ok(a_raw) => Some(factorize(&a_raw)),
                Err(Error::Degenerate { .. }) => {
                    degenerate.push(i);
                    None
                }
                Err(e) => return Err(e.in_block(i)),
            };
            raws.push(Raw { s, q, old_cost, cand });
        }

        let shared_r = match self.cfg.model {
            CorrelationModel::Sim => 0.0,
            CorrelationModel::Ar1 => self.cfg.fixed_r.unwrap_or_else(|| {
                let active_raw = self
                    .blocks
                    .iter()
                    .zip(&raws)
                    .filter(|(b, _)| b.active)
                    .filter_map(|(_, r)| r.cand.as_ref().map(|(_, b_raw)| b_raw));
                super::block::estimate_r(active_raw, self.cfg.r_clamp)
            }),
        };

        let mut candidates = Vec::with_capacity(2 * self.blocks.len());
        for (blk, raw) in self.blocks.iter().zip(raws) {
            let i = blk.index;
            let d = blk.a.nrows();
            let action = if blk.active { Action::Reestimate } else { Action::Add };
            let proposal = raw.cand.map(|(gamma, b_raw)| {
                let b_star = regularize(&b_raw, self.cfg.model, shared_r, self.cfg.r_clamp);
                let a_star = &b_star * gamma;
                let delta = if gamma > 0.0 {
                    block_cost(&a_star, &raw.s, &raw.q)
                        .map(|c| cost_change(c, raw.old_cost))
                        .unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                };
                Candidate {
                    block: i,
                    action,
                    a_star,
                    gamma,
                    b_star,
                    delta,
                }
            });
            candidates.push(proposal.unwrap_or_else(|| Candidate {
                block: i,
                action,
                a_star: DMatrix::zeros(d, d),
                gamma: 0.0,
                b_star: normalized_identity(d),
                delta: f64::INFINITY,
            }));
            if blk.active {
                candidates.push(Candidate {
                    block: i,
                    action: Action::Delete,
                    a_star: DMatrix::zeros(d, d),
                    gamma: 0.0,
                    b_star: normalized_identity(d),
                    delta: -raw.old_cost,
                });
            }
        }
        Ok(Sweep {
            candidates,
            shared_r,
            degenerate,
        })
    }

    /// Replaces block `chosen.block`'s prior by `chosen.a_star` and refreshes
    /// every maintained quantity. `cost` advances by `chosen.delta`.
    pub fn apply(&mut self, chosen: &Candidate, shared_r: f64) -> Result<()> {
        let i = chosen.block;
        let r = self.partition.range(i);
        let d = r.len();
        if chosen.a_star.shape() != (d, d) {
            return Err(Error::Dimension {
                context: "candidate block size",
                expected: d,
                actual: chosen.a_star.nrows(),
            });
        }
        let delta_a = &chosen.a_star - &self.blocks[i].a;

        match self.cfg.refresh {
            RefreshMode::Incremental => self.woodbury_update(r.start, &delta_a).map_err(|e| e.in_block(i))?,
            RefreshMode::FromScratch => {}
        }

        let blk = &mut self.blocks[i];
        match chosen.action {
            Action::Delete => *blk = BlockState::inactive(i, d),
            Action::Add | Action::Reestimate => {
                blk.active = true;
                blk.a = chosen.a_star.clone();
                blk.gamma = chosen.gamma;
                blk.b = chosen.b_star.clone();
            }
        }
        self.cost += chosen.delta;

        if self.cfg.refresh == RefreshMode::FromScratch {
            self.refresh_from_scratch()?;
        }
        self.steps.push(StepRecord {
            block: i,
            action: chosen.action,
            delta: chosen.delta,
            cost: self.cost,
            shared_r,
        });
        Ok(())
    }

    /// `C' = C + Φᵢ ΔA Φᵢᵀ` ⇒ `C'⁻¹ = C⁻¹ − C⁻¹Φᵢ K ΦᵢᵀC⁻¹` with
    /// `K = ΔA (I + S_i ΔA)⁻¹`.
    fn woodbury_update(&mut self, start: usize, delta_a: &DMatrix<f64>) -> Result<()> {
        let d = delta_a.nrows();
        let p = self.s_full.columns(start, d).into_owned();
        let s_ii = p.rows(start, d).into_owned();
        let q_i = self.q_full.rows(start, d).into_owned();
        // Kᵀ = (I + ΔA S_i)⁻¹ ΔA; S_i and ΔA are symmetric.
        let lhs = DMatrix::identity(d, d) + delta_a * &s_ii;
        let mut k = lhs
            .lu()
            .solve(delta_a)
            .ok_or_else(|| Error::degenerate(None, "I + S·ΔA is singular"))?
            .transpose();
        symmetrize(&mut k);
        let pk = &p * &k;
        self.s_full -= &pk * p.transpose();
        self.q_full -= &pk * q_i;
        symmetrize(&mut self.s_full);
        if !self.s_full.iter().all(|v| v.is_finite()) {
            return Err(Error::degenerate(None, "Woodbury update produced non-finite values"));
        }
        Ok(())
    }

    /// Rebuilds `ΦᵀC⁻¹Φ`, `ΦᵀC⁻¹y` and the cost from the active-set posterior.
    pub fn refresh_from_scratch(&mut self) -> Result<()> {
        let post = self.posterior()?;
        let beta = self.beta;
        let g_cols = self.gram.select_columns(&post.support);
        let mut s_full = &self.gram * beta;
        if !post.support.is_empty() {
            s_full -= &g_cols * (&post.sigma * g_cols.transpose()) * (beta * beta);
        }
        symmetrize(&mut s_full);
        self.s_full = s_full;
        self.q_full = &self.proj * beta - &g_cols * &post.mu * beta;
        self.cost = post.cost;
        Ok(())
    }

    /// `Σ = (Γ⁻¹ + βΦₐᵀΦₐ)⁻¹` and `μ = βΣΦₐᵀy` over the active blocks,
    /// evaluated as `Σ = L(I + βLᵀΦₐᵀΦₐL)⁻¹Lᵀ` with `Γ = LLᵀ`, plus the cost
    /// `m·log β⁻¹ + log|I + βLᵀΦₐᵀΦₐL| + β‖y‖² − β(Φₐᵀy)ᵀμ`.
    pub fn posterior(&self) -> Result<Posterior> {
        let active: Vec<&BlockState> = self.blocks.iter().filter(|b| b.active).collect();
        let support: Vec<usize> = active
            .iter()
            .flat_map(|b| self.partition.range(b.index))
            .collect();
        let k = support.len();
        let empty_cost = self.m as f64 * self.cfg.beta_inv.ln() + self.beta * self.y_sq;
        if k == 0 {
            return Ok(Posterior {
                support,
                mu: DVector::zeros(0),
                sigma: DMatrix::zeros(0, 0),
                cost: empty_cost,
            });
        }

        let mut l = DMatrix::zeros(k, k);
        let mut off = 0;
        for b in &active {
            let d = b.a.nrows();
            let lb = psd_factor(&b.a)
                .ok_or_else(|| Error::degenerate(Some(b.index), "A is not positive semidefinite"))?;
            l.view_mut((off, off), (d, d)).copy_from(&lb);
            off += d;
        }
        let g_aa = self.gram.select_rows(&support).select_columns(&support);
        let z_a = self.proj.select_rows(&support);
        let mut inner = DMatrix::identity(k, k) + l.tr_mul(&(&g_aa * &l)) * self.beta;
        symmetrize(&mut inner);
        let chol = cholesky(&inner)
            .ok_or_else(|| Error::degenerate(None, "active-set covariance is not invertible"))?;
        let mut sigma = &l * chol.solve(&l.transpose());
        symmetrize(&mut sigma);
        let mu = &sigma * &z_a * self.beta;
        let cost = empty_cost + chol_logdet(&chol) - self.beta * z_a.dot(&mu);
        Ok(Posterior {
            support,
            mu,
            sigma,
            cost,
        })
    }

    /// Posterior mean scattered into a length-`n` vector, zero off the support.
    pub fn theta(&self) -> Result<DVector<f64>> {
        let post = self.posterior()?;
        let mut theta = DVector::zeros(self.partition.n());
        for (&idx, &v) in post.support.iter().zip(post.mu.iter()) {
            theta[idx] = v;
        }
        Ok(theta)
    }

    /// One iteration: sweep, select the steepest descent, apply it.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let sweep = self.sweep()?;
        self.degenerate_candidates += sweep.degenerate.len();
        let Some(best) = sweep.best() else {
            return Ok(StepOutcome::NoDescent);
        };
        if best.delta >= 0.0 {
            return Ok(StepOutcome::NoDescent);
        }
        let delta = best.delta;
        self.apply(best, sweep.shared_r)?;
        if delta.abs() < self.cfg.eta {
            Ok(StepOutcome::Converged)
        } else {
            Ok(StepOutcome::Continue)
        }
    }
}

/// Moves columns `c..c + d` of the upper-triangular `r` to the end and
/// restores triangular form with Householder reflections, applied to `h` as
/// well. Returns the trailing `d × d` block and the trailing `d` entries.
fn move_block_last(
    r: &DMatrix<f64>,
    h: &DVector<f64>,
    c: usize,
    d: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = r.nrows();
    let mut w = DMatrix::zeros(k, k);
    w.columns_mut(0, c).copy_from(&r.columns(0, c));
    w.columns_mut(c, k - c - d).copy_from(&r.columns(c + d, k - c - d));
    w.columns_mut(k - d, d).copy_from(&r.columns(c, d));
    let mut rhs = h.clone();
    for j in c..k - d {
        let rows = d + 1;
        let mut v = w.view((j, j), (rows, 1)).column(0).into_owned();
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vv = v.norm_squared();
        if vv == 0.0 {
            continue;
        }
        let scale = 2.0 / vv;
        let mut blk = w.view_mut((j, j), (rows, k - j));
        let proj = v.tr_mul(&blk) * scale;
        blk -= &v * proj;
        let mut seg = rhs.rows_mut(j, rows);
        let p = v.dot(&seg) * scale;
        seg.axpy(-p, &v, 1.0);
    }
    (
        w.view((k - d, k - d), (d, d)).into_owned(),
        rhs.rows(k - d, d).into_owned(),
    )
}

/// `(s, q)` from `I + LᵀsL = XᵀX`, `Lᵀq = Xᵀt`; `None` if `L` cannot be
/// inverted or the result is not PSD up to round-off.
fn whitened_to_excluded(
    l: &DMatrix<f64>,
    x: &DMatrix<f64>,
    t: &DVector<f64>,
) -> Option<(DMatrix<f64>, DVector<f64>)> {
    let mut sz = x.tr_mul(x);
    for j in 0..sz.nrows() {
        sz[(j, j)] -= 1.0;
    }
    let wz = x.tr_mul(t);
    let half = l.tr_solve_lower_triangular(&sz)?;
    let mut s = l.tr_solve_lower_triangular(&half.transpose())?.transpose();
    symmetrize(&mut s);
    let q = l.tr_solve_lower_triangular(&wz)?;
    if !s.iter().chain(q.iter()).all(|v| v.is_finite()) {
        return None;
    }
    let floor = -1e-10 * s.diagonal().amax().max(f64::MIN_POSITIVE);
    if s.diagonal().iter().any(|&v| v < floor) {
        return None;
    }
    Some((s, q))
}

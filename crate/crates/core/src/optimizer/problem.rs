//! Convex programs over Hermitian PSD blocks and bounded scalars.
//!
//! Every general constraint has the form
//! `a·x + b − log2(d + c·x) ≤ 0` (log part optional), where `c` has
//! nonnegative weight on the PSD cone so the log argument stays `≥ d > 0`.

use std::collections::BTreeMap;

use crate::linalg::herm_dim;
use crate::streams::StreamId;

/// Position of one Hermitian matrix variable inside the stacked vector.
#[derive(Clone, Debug)]
pub struct BlockVar {
    pub stream: Option<StreamId>,
    pub offset: usize,
    pub dim: usize,
}

impl BlockVar {
    pub fn len(&self) -> usize {
        herm_dim(self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// What a scalar variable stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarRole {
    /// Aggregated rate `R_K`.
    StreamRate(StreamId),
    /// Split `R^(k)_K` for user `k`.
    SplitRate { stream: StreamId, user: usize },
    /// Worst-user slack `y`.
    Slack,
    /// Phase-I infeasibility variable.
    Infeasibility,
    Free(usize),
}

#[derive(Clone, Debug)]
pub struct ScalarVar {
    pub role: ScalarRole,
    pub offset: usize,
    /// Strict lower bound enforced by a log barrier.
    pub lower: f64,
}

/// Provenance of a constraint, used for census and diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintTag {
    /// Joint-decoding constraint of `user` for the subset `subset` (bitmask
    /// over the active streams containing `user`, in canonical order).
    JointRate { user: usize, subset: u64 },
    /// Successive-decoding constraint of `user` at decoding round `round`.
    SuccessiveRate { user: usize, round: usize },
    PowerBudget,
    RateTarget { user: usize },
    WorstUserSlack { user: usize },
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    LinearInequality,
    LogAffineInequality,
    TraceBudget,
}

/// `lin·x + constant − log2(log_const + log_coef·x) ≤ 0` over the indices `idx`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub tag: ConstraintTag,
    pub idx: Vec<usize>,
    pub lin: Vec<f64>,
    pub log_coef: Option<Vec<f64>>,
    pub constant: f64,
    pub log_const: f64,
}

/// Incrementally assembles a constraint from index/value contributions.
#[derive(Default)]
pub struct ConstraintBuilder {
    terms: BTreeMap<usize, (f64, f64)>,
    constant: f64,
    log_const: Option<f64>,
}

impl ConstraintBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lin(&mut self, i: usize, v: f64) -> &mut Self {
        self.terms.entry(i).or_default().0 += v;
        self
    }

    pub fn lin_slice(&mut self, offset: usize, vals: &[f64], scale: f64) -> &mut Self {
        for (j, v) in vals.iter().enumerate() {
            if *v != 0.0 {
                self.lin(offset + j, v * scale);
            }
        }
        self
    }

    pub fn log_slice(&mut self, offset: usize, vals: &[f64]) -> &mut Self {
        self.log_const.get_or_insert(1.0);
        for (j, v) in vals.iter().enumerate() {
            if *v != 0.0 {
                self.terms.entry(offset + j).or_default().1 += v;
            }
        }
        self
    }

    pub fn log_const(&mut self, d: f64) -> &mut Self {
        self.log_const = Some(d);
        self
    }

    pub fn constant(&mut self, b: f64) -> &mut Self {
        self.constant += b;
        self
    }

    pub fn build(&self, kind: ConstraintKind, tag: ConstraintTag) -> Constraint {
        let idx: Vec<usize> = self.terms.keys().copied().collect();
        let lin = self.terms.values().map(|t| t.0).collect();
        let log_coef = self.log_const.map(|_| self.terms.values().map(|t| t.1).collect());
        Constraint {
            kind,
            tag,
            idx,
            lin,
            log_coef,
            constant: self.constant,
            log_const: self.log_const.unwrap_or(1.0),
        }
    }
}

impl Constraint {
    /// Value of the log argument `d + c·x` (1 for linear constraints).
    pub fn log_arg(&self, x: &[f64]) -> f64 {
        match &self.log_coef {
            Some(c) => self.log_const + self.idx.iter().zip(c).map(|(&i, v)| v * x[i]).sum::<f64>(),
            None => 1.0,
        }
    }

    pub fn linear_part(&self, x: &[f64]) -> f64 {
        self.constant + self.idx.iter().zip(&self.lin).map(|(&i, v)| v * x[i]).sum::<f64>()
    }

    /// Constraint function value; `+∞` when the log argument is not positive.
    pub fn value(&self, x: &[f64]) -> f64 {
        let lin = self.linear_part(x);
        if self.log_coef.is_none() {
            return lin;
        }
        let u = self.log_arg(x);
        if u <= 0.0 {
            return f64::INFINITY;
        }
        lin - u.log2()
    }

    pub fn is_rate(&self) -> bool {
        matches!(self.tag, ConstraintTag::JointRate { .. } | ConstraintTag::SuccessiveRate { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// A convex program ready for the interior-point core.
#[derive(Clone, Debug)]
pub struct ConvexSubproblem {
    pub blocks: Vec<BlockVar>,
    pub scalars: Vec<ScalarVar>,
    pub n: usize,
    pub sense: Sense,
    /// Objective coefficients (dense, length `n`).
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl ConvexSubproblem {
    pub fn new(sense: Sense) -> Self {
        Self { blocks: Vec::new(), scalars: Vec::new(), n: 0, sense, objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn add_block(&mut self, stream: Option<StreamId>, dim: usize) -> usize {
        let b = BlockVar { stream, offset: self.n, dim };
        self.n += b.len();
        self.objective.resize(self.n, 0.0);
        self.blocks.push(b);
        self.blocks.len() - 1
    }

    pub fn add_scalar(&mut self, role: ScalarRole, lower: f64) -> usize {
        let s = ScalarVar { role, offset: self.n, lower };
        self.n += 1;
        self.objective.resize(self.n, 0.0);
        self.scalars.push(s);
        self.n - 1
    }

    pub fn scalar_offset(&self, role: ScalarRole) -> Option<usize> {
        self.scalars.iter().find(|s| s.role == role).map(|s| s.offset)
    }

    pub fn block_of(&self, stream: StreamId) -> Option<&BlockVar> {
        self.blocks.iter().find(|b| b.stream == Some(stream))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn count_constraints(&self, pred: impl Fn(&Constraint) -> bool) -> usize {
        self.constraints.iter().filter(|c| pred(c)).count()
    }

    /// Number of real decision variables (PSD blocks plus scalars).
    pub fn variable_count(&self) -> usize {
        self.n
    }

    /// Largest constraint value at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.value(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Barrier complexity parameter: block orders plus scalar bounds plus constraints.
    pub fn barrier_parameter(&self) -> f64 {
        (self.blocks.iter().map(|b| b.dim).sum::<usize>() + self.scalars.len() + self.constraints.len()) as f64
    }
}

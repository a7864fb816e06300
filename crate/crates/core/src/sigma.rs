//! Channel-adapted partition families.
//!
//! The channel partition lumps inputs whose rows agree on every γ-block. For a
//! subset `M` and a context `x̄ ∈ X_{N∖M}`, the context trace lumps the states
//! of `X_M` that the constrained kernel `ν(·, x̄)` cannot tell apart, and the
//! `M`-trace is the join of all context traces. Traces are in general not
//! projective. Two repairs restore projectivity:
//!
//! - the extension `Ā_M = ⋁_{L ⊆ M} lift(trace(L), M)`, the smallest
//!   projective family refining every trace;
//! - the reduction `A̲_M = {A ⊆ X_M : A × X_{N∖M} ∈ σ(channel partition)}`,
//!   the largest projective family coarser than every trace.
//!
//! Rows are compared within the model's tolerance (max over γ-blocks of the
//! absolute difference). Tolerance equality is not transitive, so rows are
//! clustered greedily in index order against the first member of each
//! cluster; near-ties at the tolerance scale may split differently than exact
//! arithmetic would.

use serde::Serialize;

use crate::channel::Model;
use crate::error::{Error, Result};
use crate::partition::{lift, refines_via, Partition, ProductSpace, Subset, UnionFind};

/// Which construction produced a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    RawTrace,
    Extension,
    Reduction,
    Classical,
    Custom,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::RawTrace => "raw_trace",
            FamilyKind::Extension => "extension",
            FamilyKind::Reduction => "reduction",
            FamilyKind::Classical => "classical",
            FamilyKind::Custom => "custom",
        }
    }
}

/// A pair `L ⊆ M` for which `family[M]` does not refine `lift(family[L], M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub smaller: Subset,
    pub larger: Subset,
}

/// Result of a projectivity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Projectivity {
    pub projective: bool,
    pub witness: Option<Violation>,
}

/// A partition of `X_M` for every `M ⊆ N`, indexed by subset bitmask.
#[derive(Debug, Clone)]
pub struct PartitionFamily {
    kind: FamilyKind,
    members: Vec<Partition>,
    certificate: Projectivity,
}

impl PartitionFamily {
    /// Validate sizes and compute the projectivity certificate.
    pub fn new(space: &ProductSpace, kind: FamilyKind, members: Vec<Partition>) -> Result<Self> {
        let n = space.n();
        if members.len() != 1 << n {
            return Err(Error::InvalidParameter(format!(
                "family has {} members, expected {}",
                members.len(),
                1 << n
            )));
        }
        for m in Subset::all(n) {
            let expected = space.size(m);
            if members[m.index()].len() != expected {
                return Err(Error::GroundMismatch {
                    left: members[m.index()].len(),
                    right: expected,
                });
            }
        }
        let certificate = check_projectivity(space, &members);
        Ok(PartitionFamily {
            kind,
            members,
            certificate,
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn get(&self, m: Subset) -> &Partition {
        &self.members[m.index()]
    }

    pub fn members(&self) -> &[Partition] {
        &self.members
    }

    pub fn certificate(&self) -> Projectivity {
        self.certificate
    }

    pub fn is_projective(&self) -> bool {
        self.certificate.projective
    }
}

fn rows_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Greedy clustering of rows in order: each row joins the first cluster whose
/// representative matches within `tol`.
fn cluster_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, tol: f64) -> Partition {
    let mut reps: Vec<&[f64]> = Vec::new();
    let ids: Vec<usize> = rows
        .map(
            |row| match reps.iter().position(|r| rows_match(r, row, tol)) {
                Some(i) => i,
                None => {
                    reps.push(row);
                    reps.len() - 1
                }
            },
        )
        .collect();
    Partition::new(ids).expect("nonempty")
}

fn check_in_model(model: &Model, m: Subset) -> Result<()> {
    if !m.is_subset_of(model.full()) {
        return Err(Error::NotSubset {
            inner: m.to_vec(),
            outer: model.full().to_vec(),
        });
    }
    Ok(())
}

/// σ(ν) at γ-resolution: `x ~ x'` iff `ν(x; C) ≈ ν(x'; C)` on every γ-block.
pub fn channel_partition(model: &Model) -> Partition {
    cluster_rows(
        (0..model.num_inputs()).map(|x| model.gamma_row(x)),
        model.tol(),
    )
}

/// Distinguishability partition of `X_M` under the fixed context `x̄`
/// (an index into `X_{N∖M}`).
pub fn context_trace(model: &Model, m: Subset, context: usize) -> Result<Partition> {
    check_in_model(model, m)?;
    let space = model.space();
    let rest = m.complement(model.n());
    let contexts = space.size(rest);
    if context >= contexts {
        return Err(Error::InvalidContext {
            index: context,
            size: contexts,
        });
    }
    Ok(cluster_rows(
        (0..space.size(m)).map(|xm| model.gamma_row(space.combine(m, xm, rest, context))),
        model.tol(),
    ))
}

/// `M`-trace: the join of the context traces over all `x̄ ∈ X_{N∖M}`.
pub fn m_trace(model: &Model, m: Subset) -> Result<Partition> {
    check_in_model(model, m)?;
    let rest = m.complement(model.n());
    let mut acc = Partition::trivial(model.space().size(m));
    for ctx in 0..model.space().size(rest) {
        acc = acc.join(&context_trace(model, m, ctx)?)?;
    }
    Ok(acc)
}

/// `M`-trace computed from sections of the channel partition: for each
/// context, states of `X_M` share a block iff `(x_M, x̄)` lie in the same
/// channel block. Agrees with [`m_trace`] (constrained kernels generate the
/// sections of the kernel's σ-algebra).
pub fn m_trace_from_sections(model: &Model, channel: &Partition, m: Subset) -> Result<Partition> {
    check_in_model(model, m)?;
    let space = model.space();
    let rest = m.complement(model.n());
    let size_m = space.size(m);
    let mut acc = Partition::trivial(size_m);
    for ctx in 0..space.size(rest) {
        let section = Partition::from_keys(
            (0..size_m).map(|xm| channel.block_of(space.combine(m, xm, rest, ctx))),
        )?;
        acc = acc.join(&section)?;
    }
    Ok(acc)
}

/// `True` iff `family[M]` refines `lift(family[L], M)` for every `L ⊆ M`.
///
/// Checking the covering pairs `L = M ∖ {i}` suffices since lifts compose and
/// refinement is transitive; the witness is the first violating covering pair.
pub fn check_projectivity(space: &ProductSpace, members: &[Partition]) -> Projectivity {
    for m in Subset::all(space.n()) {
        for i in m.iter() {
            let l = m.without(i);
            let coarse = &members[l.index()];
            if !refines_via(&members[m.index()], |xm| {
                coarse.block_of(space.project(m, xm, l))
            }) {
                return Projectivity {
                    projective: false,
                    witness: Some(Violation {
                        smaller: l,
                        larger: m,
                    }),
                };
            }
        }
    }
    Projectivity {
        projective: true,
        witness: None,
    }
}

/// The raw `M`-traces (not projective in general).
pub fn raw_trace_family(model: &Model) -> Result<PartitionFamily> {
    let members = Subset::all(model.n())
        .map(|m| m_trace(model, m))
        .collect::<Result<Vec<_>>>()?;
    PartitionFamily::new(model.space(), FamilyKind::RawTrace, members)
}

/// Smallest projective family refining every trace.
pub fn projective_extension(model: &Model) -> Result<PartitionFamily> {
    let space = model.space();
    let n = model.n();
    let mut members: Vec<Partition> = Vec::with_capacity(1 << n);
    // ext[M] = trace(M) ∨ ⋁_i lift(ext[M∖i], M); bitmask order visits M∖i before M.
    for m in Subset::all(n) {
        let mut acc = m_trace(model, m)?;
        for i in m.iter() {
            let l = m.without(i);
            acc = acc.join(&lift(&members[l.index()], space, l, m)?)?;
        }
        members.push(acc);
    }
    PartitionFamily::new(space, FamilyKind::Extension, members)
}

/// Largest projective family coarser than every trace. Atoms of `A̲_M` are the
/// connected components of the hypergraph on `X_M` whose hyperedges are the
/// `X_M`-projections of channel blocks.
pub fn projective_reduction(model: &Model) -> Result<PartitionFamily> {
    let channel = channel_partition(model);
    let space = model.space();
    let full = model.full();
    let members: Vec<Partition> = Subset::all(model.n())
        .map(|m| {
            let mut uf = UnionFind::new(space.size(m));
            let mut first = vec![usize::MAX; channel.num_blocks()];
            for x in 0..model.num_inputs() {
                let xm = space.project(full, x, m);
                let b = channel.block_of(x);
                if first[b] == usize::MAX {
                    first[b] = xm;
                } else {
                    uf.union(first[b], xm);
                }
            }
            uf.into_partition()
        })
        .collect();
    PartitionFamily::new(space, FamilyKind::Reduction, members)
}

/// Singleton partitions everywhere: recovers classical (conditional) mutual
/// information.
pub fn classical_family(model: &Model) -> Result<PartitionFamily> {
    let space = model.space();
    let members = Subset::all(model.n())
        .map(|m| Partition::singletons(space.size(m)))
        .collect();
    PartitionFamily::new(space, FamilyKind::Classical, members)
}

/// Build the family selected by `kind`. `Custom` is not constructible here.
pub fn build_family(model: &Model, kind: FamilyKind) -> Result<PartitionFamily> {
    match kind {
        FamilyKind::RawTrace => raw_trace_family(model),
        FamilyKind::Extension => projective_extension(model),
        FamilyKind::Reduction => projective_reduction(model),
        FamilyKind::Classical => classical_family(model),
        FamilyKind::Custom => Err(Error::InvalidParameter(
            "custom families are built from explicit members".into(),
        )),
    }
}

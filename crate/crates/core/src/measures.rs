//! Entropies, classical and causal (conditional) mutual information, chain
//! decompositions and the natural-properties audit.
//!
//! Every quantity is resolved on the γ-blocks of the model and reported in
//! nats. The flow from `X_{M∖L}` to `Z` given `X_L` under a partition family is
//!
//! ```text
//! I(X_{M∖L} → Z | X_L) = Σ_{x_M} μ_M(x_M) Σ_C ν̂_M(x_M; C) log[ν̂_M(x_M; C) / ν̂_L(x_L; C)]
//! ```
//!
//! where `ν̂_M` is the output kernel conditioned on the atoms of `family[M]`.
//! With singleton partitions this is the classical conditional mutual
//! information. Cells with `ν̂_M = 0` contribute nothing; a cell with
//! `ν̂_M > 0` but `ν̂_L = 0` cannot occur under a projective family and is
//! reported as [`Error::NotAbsolutelyContinuous`].

use std::fmt;

use serde::Serialize;

use crate::channel::{hat_marginal, input_marginal, pushforward_gamma, HatKernel, Model};
use crate::error::{Error, Result};
use crate::partition::{Partition, Subset};
use crate::sigma::{FamilyKind, PartitionFamily};

/// Numerical tolerances shared by reports and audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Equality assertions (chain-rule residuals, flow = MI, zero tests).
    pub equality: f64,
    /// Slack for inequalities and nonnegativity.
    pub inequality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality: 1e-9,
            inequality: 1e-12,
        }
    }
}

/// Shannon entropy in nats, `0 log 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(
            "entropy of a non-probability vector".into(),
        ));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(sum));
    }
    Ok(-dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>())
}

/// `H(γ | α)` where `α` is a partition of `X_M`.
pub fn conditional_entropy(model: &Model, m: Subset, conditioning: &Partition) -> Result<f64> {
    let kernel = hat_marginal(model, m, conditioning)?;
    let mut h = 0.0;
    for (atom, &mass) in kernel.atom_mass().iter().enumerate() {
        if let Some(dist) = kernel.atom_gamma(atom) {
            h -= mass
                * dist
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| p * p.ln())
                    .sum::<f64>();
        }
    }
    Ok(h)
}

/// `I(α; γ)` for a partition `α` of `X_M`. Singletons give `I_γ(X_M; Z)`; the
/// family partition gives the flow `I_γ(X_M → Z)`.
pub fn mutual_information(model: &Model, m: Subset, conditioning: &Partition) -> Result<f64> {
    let fine = hat_marginal(model, m, conditioning)?;
    let coarse = trivial_kernel(model);
    flow_between(model, &fine, &coarse)
}

fn trivial_kernel(model: &Model) -> HatKernel {
    hat_marginal(model, Subset::EMPTY, &Partition::trivial(1)).expect("X_∅ has one element")
}

/// The flow integral between two kernels on `L ⊆ M`.
fn flow_between(model: &Model, fine: &HatKernel, coarse: &HatKernel) -> Result<f64> {
    let (m, l) = (fine.subset(), coarse.subset());
    if !l.is_subset_of(m) {
        return Err(Error::NotSubset {
            inner: l.to_vec(),
            outer: m.to_vec(),
        });
    }
    let space = model.space();
    let mu_m = input_marginal(model, m);
    let mut total = 0.0;
    for (xm, &w) in mu_m.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = fine
            .at(xm)
            .expect("positive-mass state lies in a positive-mass atom");
        let q = coarse
            .at(space.project(m, xm, l))
            .expect("projection of a positive-mass state");
        for (c, (&pc, &qc)) in p.iter().zip(q).enumerate() {
            if pc > 0.0 {
                if qc <= 0.0 {
                    return Err(Error::NotAbsolutelyContinuous {
                        fine: m.to_vec(),
                        coarse: l.to_vec(),
                        block: c,
                    });
                }
                total += w * pc * (pc / qc).ln();
            }
        }
    }
    Ok(total)
}

fn check_pair(model: &Model, m: Subset, l: Subset) -> Result<()> {
    if !m.is_subset_of(model.full()) {
        return Err(Error::NotSubset {
            inner: m.to_vec(),
            outer: model.full().to_vec(),
        });
    }
    if !l.is_subset_of(m) {
        return Err(Error::NotSubset {
            inner: l.to_vec(),
            outer: m.to_vec(),
        });
    }
    Ok(())
}

/// `I_γ(X_{M∖L} → Z | X_L)` under `family`. Non-projective families are
/// evaluated as given (with a warning); the result may then be negative.
pub fn information_flow(
    model: &Model,
    family: &PartitionFamily,
    m: Subset,
    l: Subset,
) -> Result<f64> {
    check_pair(model, m, l)?;
    if !family.is_projective() {
        log::warn!(
            "information flow under a non-projective {} family",
            family.kind().as_str()
        );
    }
    let fine = hat_marginal(model, m, family.get(m))?;
    let coarse = hat_marginal(model, l, family.get(l))?;
    flow_between(model, &fine, &coarse)
}

/// Classical `I_γ(X_{M∖L}; Z | X_L)`.
pub fn classical_cmi(model: &Model, m: Subset, l: Subset) -> Result<f64> {
    check_pair(model, m, l)?;
    let space = model.space();
    let fine = hat_marginal(model, m, &Partition::singletons(space.size(m)))?;
    let coarse = hat_marginal(model, l, &Partition::singletons(space.size(l)))?;
    flow_between(model, &fine, &coarse)
}

/// Classical `I_γ(X_M; Z)`.
pub fn classical_mi(model: &Model, m: Subset) -> Result<f64> {
    classical_cmi(model, m, Subset::EMPTY)
}

/// Kernels for every subset under one family, for repeated flow evaluation.
pub struct FlowContext<'a> {
    model: &'a Model,
    family: &'a PartitionFamily,
    kernels: Vec<HatKernel>,
    classical: Vec<HatKernel>,
}

impl<'a> FlowContext<'a> {
    pub fn new(model: &'a Model, family: &'a PartitionFamily) -> Result<Self> {
        let space = model.space();
        let mut kernels = Vec::with_capacity(1 << model.n());
        let mut classical = Vec::with_capacity(1 << model.n());
        for m in Subset::all(model.n()) {
            kernels.push(hat_marginal(model, m, family.get(m))?);
            classical.push(hat_marginal(
                model,
                m,
                &Partition::singletons(space.size(m)),
            )?);
        }
        Ok(FlowContext {
            model,
            family,
            kernels,
            classical,
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn family(&self) -> &PartitionFamily {
        self.family
    }

    pub fn kernel(&self, m: Subset) -> &HatKernel {
        &self.kernels[m.index()]
    }

    pub fn flow(&self, m: Subset, l: Subset) -> Result<f64> {
        check_pair(self.model, m, l)?;
        flow_between(
            self.model,
            &self.kernels[m.index()],
            &self.kernels[l.index()],
        )
    }

    pub fn cmi(&self, m: Subset, l: Subset) -> Result<f64> {
        check_pair(self.model, m, l)?;
        flow_between(
            self.model,
            &self.classical[m.index()],
            &self.classical[l.index()],
        )
    }
}

/// Unit of reported information values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTerm {
    pub label: String,
    pub value: f64,
}

/// An ordered chain-rule decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub ordering: Vec<Vec<String>>,
    #[serde(skip)]
    pub blocks: Vec<Subset>,
    pub terms: Vec<FlowTerm>,
    /// `I_γ(X_{M^k} → Z)`, the flow from the union of all blocks.
    pub total: f64,
    pub residual: f64,
    pub family_kind: FamilyKind,
    pub projective: bool,
    pub units: Units,
}

impl FlowReport {
    pub fn values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.value).collect()
    }

    /// Same report with every value divided by `ln 2`.
    pub fn in_bits(&self) -> FlowReport {
        if self.units == Units::Bits {
            return self.clone();
        }
        let s = std::f64::consts::LN_2;
        let mut out = self.clone();
        for t in &mut out.terms {
            t.value /= s;
        }
        out.total /= s;
        out.residual /= s;
        out.units = Units::Bits;
        out
    }

    pub fn ordering_spec(&self) -> String {
        self.ordering
            .iter()
            .map(|b| b.join(","))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// One CSV row per term: `ordering,step,term,value,total,residual,family,units`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wtr.write_record([
            "ordering", "step", "term", "value", "total", "residual", "family", "units",
        ])?;
        let spec = self.ordering_spec();
        let units = match self.units {
            Units::Nats => "nats",
            Units::Bits => "bits",
        };
        for (j, t) in self.terms.iter().enumerate() {
            wtr.write_record([
                spec.as_str(),
                &(j + 1).to_string(),
                &t.label,
                &t.value.to_string(),
                &self.total.to_string(),
                &self.residual.to_string(),
                self.family_kind.as_str(),
                units,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn names(model: &Model, m: Subset) -> String {
    model.subset_names(m).join(",")
}

fn term_label(model: &Model, block: Subset, given: Subset) -> String {
    if given.is_empty() {
        format!("I({} -> Z)", names(model, block))
    } else {
        format!("I({} -> Z | {})", names(model, block), names(model, given))
    }
}

/// Decompose `I_γ(X_{M_1 ∪ .. ∪ M_k} → Z)` along the ordered disjoint blocks.
pub fn chain_decomposition(
    model: &Model,
    family: &PartitionFamily,
    ordering: &[Subset],
) -> Result<FlowReport> {
    let mut seen = Subset::EMPTY;
    for &block in ordering {
        if block.is_empty() {
            return Err(Error::InvalidParameter("empty block in ordering".into()));
        }
        if !block.is_subset_of(model.full()) {
            return Err(Error::NotSubset {
                inner: block.to_vec(),
                outer: model.full().to_vec(),
            });
        }
        if let Some(i) = block.intersection(seen).iter().next() {
            return Err(Error::OverlappingBlocks(i));
        }
        seen = seen.union(block);
    }
    if !family.is_projective() {
        log::warn!(
            "chain decomposition under a non-projective {} family",
            family.kind().as_str()
        );
    }
    let kernel = |m: Subset| hat_marginal(model, m, family.get(m));
    let mut prev = kernel(Subset::EMPTY)?;
    let mut upto = Subset::EMPTY;
    let mut terms = Vec::with_capacity(ordering.len());
    for &block in ordering {
        let next_set = upto.union(block);
        let next = kernel(next_set)?;
        terms.push(FlowTerm {
            label: term_label(model, block, upto),
            value: flow_between(model, &next, &prev)?,
        });
        prev = next;
        upto = next_set;
    }
    let total = flow_between(model, &prev, &kernel(Subset::EMPTY)?)?;
    let sum: f64 = terms.iter().map(|t| t.value).sum();
    Ok(FlowReport {
        ordering: ordering.iter().map(|&b| model.subset_names(b)).collect(),
        blocks: ordering.to_vec(),
        terms,
        total,
        residual: (total - sum).abs(),
        family_kind: family.kind(),
        projective: family.is_projective(),
        units: Units::Nats,
    })
}

/// Audited property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Projectivity,
    ChainRule,
    Nonnegativity,
    A,
    B,
    C,
    D,
    E,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Projectivity => "projectivity",
            Property::ChainRule => "chain-rule",
            Property::Nonnegativity => "nonnegativity",
            Property::A => "(a)",
            Property::B => "(b)",
            Property::C => "(c)",
            Property::D => "(d)",
            Property::E => "(e)",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub property: Property,
    pub passed: bool,
    pub detail: String,
    /// Subsets (by input name) witnessing a failure.
    pub witness: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub family_kind: FamilyKind,
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, property: Property) -> Option<&Check> {
        self.checks.iter().find(|c| c.property == property)
    }
}

/// Accumulates the first violation of one property across subsets.
struct Tally {
    property: Property,
    checked: usize,
    failure: Option<(String, Vec<Vec<String>>)>,
}

impl Tally {
    fn new(property: Property) -> Self {
        Tally {
            property,
            checked: 0,
            failure: None,
        }
    }

    fn record(
        &mut self,
        ok: bool,
        detail: impl FnOnce() -> String,
        witness: impl FnOnce() -> Vec<Vec<String>>,
    ) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some((detail(), witness()));
        }
    }

    fn error(&mut self, err: &Error, witness: Vec<Vec<String>>) {
        self.record(false, || format!("evaluation failed: {err}"), || witness);
    }

    fn finish(self) -> Check {
        match self.failure {
            None => Check {
                property: self.property,
                passed: true,
                detail: format!("{} cases", self.checked),
                witness: Vec::new(),
            },
            Some((detail, witness)) => Check {
                property: self.property,
                passed: false,
                detail,
                witness,
            },
        }
    }
}

fn projectivity_check(model: &Model, family: &PartitionFamily) -> Check {
    let cert = family.certificate();
    match cert.witness {
        None => Check {
            property: Property::Projectivity,
            passed: true,
            detail: format!("{} family is projective", family.kind().as_str()),
            witness: Vec::new(),
        },
        Some(v) => Check {
            property: Property::Projectivity,
            passed: false,
            detail: format!(
                "family[{{{}}}] does not refine the lift of family[{{{}}}]",
                names(model, v.larger),
                names(model, v.smaller)
            ),
            witness: vec![model.subset_names(v.smaller), model.subset_names(v.larger)],
        },
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Singleton orderings audited by [`chain_rule_audit`]: all `n!` for `n ≤ 6`,
/// otherwise every rotation of the identity order and of its reverse.
pub fn singleton_orderings(n: usize) -> Vec<Vec<Subset>> {
    let idx: Vec<usize> = (0..n).collect();
    let orders = if n <= 6 {
        permutations(&idx)
    } else {
        let mut v = Vec::new();
        for r in 0..n {
            let rot: Vec<usize> = (0..n).map(|i| (i + r) % n).collect();
            v.push(rot.iter().rev().copied().collect());
            v.push(rot);
        }
        v
    };
    orders
        .into_iter()
        .map(|o| o.into_iter().map(Subset::singleton).collect())
        .collect()
}

/// Projectivity, chain rule and nonnegativity over singleton orderings.
/// The chain-rule residual is taken against `I_γ(X_N → Z)`.
pub fn chain_rule_audit(
    model: &Model,
    family: &PartitionFamily,
    tol: Tolerances,
) -> Result<AuditReport> {
    let mut chain = Tally::new(Property::ChainRule);
    let mut nonneg = Tally::new(Property::Nonnegativity);
    for order in singleton_orderings(model.n()) {
        let witness = || {
            order
                .iter()
                .map(|&b| model.subset_names(b))
                .collect::<Vec<_>>()
        };
        match chain_decomposition(model, family, &order) {
            Ok(report) => {
                chain.record(
                    report.residual <= tol.equality,
                    || {
                        format!(
                            "ordering {}: residual {:e}",
                            report.ordering_spec(),
                            report.residual
                        )
                    },
                    witness,
                );
                let mut upto = Subset::EMPTY;
                for (t, &b) in report.terms.iter().zip(&order) {
                    let given = upto;
                    nonneg.record(
                        t.value >= -tol.inequality,
                        || format!("{} = {:e} < 0", t.label, t.value),
                        || vec![model.subset_names(b), model.subset_names(given)],
                    );
                    upto = upto.union(b);
                }
            }
            Err(e) => {
                chain.error(&e, witness());
                nonneg.error(&e, witness());
            }
        }
    }
    Ok(AuditReport {
        family_kind: family.kind(),
        checks: vec![
            projectivity_check(model, family),
            chain.finish(),
            nonneg.finish(),
        ],
    })
}

/// Checks (a)–(e) of the natural properties of information flow.
pub fn natural_properties_audit(
    model: &Model,
    family: &PartitionFamily,
    tol: Tolerances,
) -> Result<AuditReport> {
    let ctx = FlowContext::new(model, family)?;
    let n = model.n();
    let full = model.full();
    let empty = Subset::EMPTY;
    let nm = |m: Subset| model.subset_names(m);

    let mut a = Tally::new(Property::A);
    match (ctx.flow(full, empty), ctx.cmi(full, empty)) {
        (Ok(f), Ok(mi)) => a.record(
            (f - mi).abs() <= tol.equality,
            || format!("I(X_N -> Z) = {f} but I(X_N; Z) = {mi}"),
            || vec![nm(full)],
        ),
        (Err(e), _) | (_, Err(e)) => a.error(&e, vec![nm(full)]),
    }

    let mut b = Tally::new(Property::B);
    let mut c = Tally::new(Property::C);
    let mut d = Tally::new(Property::D);
    let mut e = Tally::new(Property::E);
    let mut flow_from: Vec<Option<f64>> = vec![None; 1 << n];
    for m in Subset::all(n) {
        match (ctx.flow(m, empty), ctx.cmi(m, empty)) {
            (Ok(f), Ok(mi)) => {
                flow_from[m.index()] = Some(f);
                b.record(
                    f <= mi + tol.inequality,
                    || {
                        format!(
                            "I({} -> Z) = {f} exceeds I({}; Z) = {mi}",
                            names(model, m),
                            names(model, m)
                        )
                    },
                    || vec![nm(m)],
                );
            }
            (Err(err), _) | (_, Err(err)) => b.error(&err, vec![nm(m)]),
        }
        let rest = m.complement(n);
        match (ctx.flow(full, rest), ctx.cmi(full, rest)) {
            (Ok(f), Ok(cmi)) => {
                c.record(
                    f >= cmi - tol.inequality,
                    || {
                        format!(
                            "I({} -> Z | {}) = {f} below CMI {cmi}",
                            names(model, m),
                            names(model, rest)
                        )
                    },
                    || vec![nm(m), nm(rest)],
                );
                if f.abs() <= tol.equality {
                    d.record(
                        cmi.abs() <= tol.equality,
                        || format!("flow {f} vanishes but CMI = {cmi}"),
                        || vec![nm(m), nm(rest)],
                    );
                }
            }
            (Err(err), _) | (_, Err(err)) => {
                c.error(&err, vec![nm(m), nm(rest)]);
                d.error(&err, vec![nm(m), nm(rest)]);
            }
        }
    }
    for m in Subset::all(n) {
        let Some(fm) = flow_from[m.index()] else {
            continue;
        };
        if fm.abs() > tol.equality {
            continue;
        }
        for l in m.subsets() {
            match flow_from[l.index()] {
                Some(fl) => e.record(
                    fl.abs() <= tol.equality + tol.inequality,
                    || {
                        format!(
                            "I({} -> Z) = 0 but I({} -> Z) = {fl}",
                            names(model, m),
                            names(model, l)
                        )
                    },
                    || vec![nm(l), nm(m)],
                ),
                None => e.record(false, || "flow unavailable".into(), || vec![nm(l), nm(m)]),
            }
        }
    }
    Ok(AuditReport {
        family_kind: family.kind(),
        checks: vec![a.finish(), b.finish(), c.finish(), d.finish(), e.finish()],
    })
}

/// Projectivity, chain rule, nonnegativity and (a)–(e) in one report.
pub fn full_audit(model: &Model, family: &PartitionFamily, tol: Tolerances) -> Result<AuditReport> {
    let mut report = chain_rule_audit(model, family, tol)?;
    report
        .checks
        .extend(natural_properties_audit(model, family, tol)?.checks);
    Ok(report)
}

/// `H(γ)` of the output.
pub fn output_entropy(model: &Model) -> Result<f64> {
    entropy(&pushforward_gamma(model))
}

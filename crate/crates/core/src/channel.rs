//! The probabilistic model: input distribution μ on `X_N`, channel ν from
//! `X_N` to `Z`, and the output partition γ at which every quantity is
//! resolved.
//!
//! Marginal channels come in two flavours. [`classical_marginal`] conditions
//! on the full state of `X_M`. [`hat_marginal`] conditions on the atoms of a
//! coarser partition of `X_M` and is the μ-weighted average of the classical
//! marginal over each atom. Atoms of zero μ-mass carry no distribution.

use crate::error::{Error, Result};
use crate::partition::{FiniteSet, Partition, ProductSpace, Subset};

/// Normalization tolerance for in-memory construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default row-equality tolerance used when comparing channel rows.
pub const DEFAULT_ROW_TOL: f64 = 1e-9;

fn check_probabilities(what: &str, values: &[f64], tol: f64) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {v} is not a probability"
        )));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// μ on `X_N`, indexed mixed-radix with factor 1 fastest.
#[derive(Debug, Clone)]
pub struct InputDistribution {
    space: ProductSpace,
    prob: Vec<f64>,
}

impl InputDistribution {
    pub fn new(space: ProductSpace, prob: Vec<f64>) -> Result<Self> {
        let size = space.size(space.full());
        if prob.len() != size {
            return Err(Error::InvalidDistribution(format!(
                "mu has {} entries, input space has {size}",
                prob.len()
            )));
        }
        check_probabilities("mu", &prob, NORMALIZATION_TOL)?;
        Ok(InputDistribution { space, prob })
    }

    pub fn uniform(space: ProductSpace) -> Self {
        let size = space.size(space.full());
        InputDistribution {
            space,
            prob: vec![1.0 / size as f64; size],
        }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }
}

/// Row-stochastic table `X_N × Z`.
#[derive(Debug, Clone)]
pub struct Channel {
    space: ProductSpace,
    out: FiniteSet,
    rows: Vec<f64>,
}

impl Channel {
    pub fn new(space: ProductSpace, out: FiniteSet, rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = space.size(space.full());
        if rows.len() != size {
            return Err(Error::InvalidDistribution(format!(
                "nu has {} rows, input space has {size}",
                rows.len()
            )));
        }
        let width = out.size();
        let mut flat = Vec::with_capacity(size * width);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidDistribution(format!(
                    "nu row {x} has {} entries, output has {width}",
                    row.len()
                )));
            }
            check_probabilities(&format!("nu row {x}"), row, NORMALIZATION_TOL)?;
            flat.extend_from_slice(row);
        }
        Ok(Channel {
            space,
            out,
            rows: flat,
        })
    }

    /// Deterministic channel `x ↦ f(x)`.
    pub fn deterministic(
        space: ProductSpace,
        out: FiniteSet,
        f: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let width = out.size();
        let rows = (0..space.size(space.full()))
            .map(|x| {
                let mut row = vec![0.0; width];
                let z = f(x);
                if z >= width {
                    return Err(Error::OutOfRange {
                        element: z,
                        size: width,
                    });
                }
                row[z] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Channel::new(space, out, rows)
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn out(&self) -> &FiniteSet {
        &self.out
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let w = self.out.size();
        &self.rows[x * w..(x + 1) * w]
    }
}

/// A validated (μ, ν, γ) triple.
#[derive(Debug, Clone)]
pub struct Model {
    mu: InputDistribution,
    nu: Channel,
    gamma: Partition,
    tol: f64,
    names: Vec<String>,
    // ν(x; C) for each γ-block C, row-major over x.
    gamma_rows: Vec<f64>,
}

impl Model {
    pub fn new(mu: InputDistribution, nu: Channel) -> Result<Self> {
        if mu.space() != nu.space() {
            return Err(Error::InvalidModel(
                "mu and nu live on different input spaces".into(),
            ));
        }
        let n = mu.space().n();
        let gamma = Partition::singletons(nu.out().size());
        let names = (1..=n).map(|i| format!("X{i}")).collect();
        let mut model = Model {
            mu,
            nu,
            gamma,
            tol: DEFAULT_ROW_TOL,
            names,
            gamma_rows: Vec::new(),
        };
        model.refresh_gamma_rows();
        Ok(model)
    }

    pub fn with_gamma(mut self, gamma: Partition) -> Result<Self> {
        if gamma.len() != self.nu.out().size() {
            return Err(Error::GroundMismatch {
                left: gamma.len(),
                right: self.nu.out().size(),
            });
        }
        self.gamma = gamma;
        self.refresh_gamma_rows();
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("row tolerance {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_names<S: Into<String>>(
        mut self,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != self.n() {
            return Err(Error::InvalidModel(format!(
                "{} names for {} inputs",
                names.len(),
                self.n()
            )));
        }
        FiniteSet::new(names.clone())?;
        self.names = names;
        Ok(self)
    }

    fn refresh_gamma_rows(&mut self) {
        let k = self.gamma.num_blocks();
        let size = self.space().size(self.space().full());
        let mut rows = vec![0.0; size * k];
        for x in 0..size {
            for (z, &p) in self.nu.row(x).iter().enumerate() {
                rows[x * k + self.gamma.block_of(z)] += p;
            }
        }
        self.gamma_rows = rows;
    }

    pub fn mu(&self) -> &InputDistribution {
        &self.mu
    }

    pub fn nu(&self) -> &Channel {
        &self.nu
    }

    pub fn gamma(&self) -> &Partition {
        &self.gamma
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn space(&self) -> &ProductSpace {
        self.mu.space()
    }

    pub fn n(&self) -> usize {
        self.space().n()
    }

    pub fn full(&self) -> Subset {
        self.space().full()
    }

    /// Number of states of `X_N`.
    pub fn num_inputs(&self) -> usize {
        self.space().size(self.full())
    }

    pub fn num_gamma_blocks(&self) -> usize {
        self.gamma.num_blocks()
    }

    /// True when γ is coarser than the singleton partition of `Z`.
    pub fn gamma_resolved(&self) -> bool {
        !self.gamma.is_discrete()
    }

    /// `ν(x; C)` for every γ-block `C`.
    pub fn gamma_row(&self, x: usize) -> &[f64] {
        let k = self.num_gamma_blocks();
        &self.gamma_rows[x * k..(x + 1) * k]
    }

    /// Names of the members of `m`.
    pub fn subset_names(&self, m: Subset) -> Vec<String> {
        m.iter().map(|i| self.names[i].clone()).collect()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Output distribution `μ*(z) = Σ_x μ(x) ν(x; z)` over `Z`.
pub fn pushforward(model: &Model) -> Vec<f64> {
    let mut out = vec![0.0; model.nu().out().size()];
    for (x, &w) in model.mu().prob().iter().enumerate() {
        for (acc, &p) in out.iter_mut().zip(model.nu().row(x)) {
            *acc += w * p;
        }
    }
    out
}

/// `μ*(C)` for each γ-block `C`.
pub fn pushforward_gamma(model: &Model) -> Vec<f64> {
    let mut out = vec![0.0; model.num_gamma_blocks()];
    for (x, &w) in model.mu().prob().iter().enumerate() {
        for (acc, &p) in out.iter_mut().zip(model.gamma_row(x)) {
            *acc += w * p;
        }
    }
    out
}

/// Marginal `μ_M` on `X_M`; the unit mass on the empty sequence when `M = ∅`.
pub fn input_marginal(model: &Model, m: Subset) -> Vec<f64> {
    let space = model.space();
    let mut out = vec![0.0; space.size(m)];
    for (x, &w) in model.mu().prob().iter().enumerate() {
        out[space.project(space.full(), x, m)] += w;
    }
    out
}

/// Output kernel conditioned on the atoms of a partition of `X_M`.
#[derive(Debug, Clone)]
pub struct HatKernel {
    subset: Subset,
    conditioning: Partition,
    atom_mass: Vec<f64>,
    gamma_table: Vec<Option<Vec<f64>>>,
    z_table: Vec<Option<Vec<f64>>>,
}

impl HatKernel {
    pub fn subset(&self) -> Subset {
        self.subset
    }

    pub fn conditioning(&self) -> &Partition {
        &self.conditioning
    }

    /// μ_M-mass of each atom.
    pub fn atom_mass(&self) -> &[f64] {
        &self.atom_mass
    }

    /// Distribution over γ-blocks on an atom; `None` for null atoms.
    pub fn atom_gamma(&self, atom: usize) -> Option<&[f64]> {
        self.gamma_table[atom].as_deref()
    }

    /// Distribution over `Z` on an atom; `None` for null atoms.
    pub fn atom_z(&self, atom: usize) -> Option<&[f64]> {
        self.z_table[atom].as_deref()
    }

    /// `ν̂_M(x_M; ·)` over γ-blocks.
    pub fn at(&self, x_m: usize) -> Option<&[f64]> {
        self.atom_gamma(self.conditioning.block_of(x_m))
    }

    pub fn is_null(&self, atom: usize) -> bool {
        self.gamma_table[atom].is_none()
    }
}

/// Classical marginal `ν_M(x_M; C) = Σ_x̄ μ(x̄ | x_M) ν(x_M, x̄; C)`.
pub fn classical_marginal(model: &Model, m: Subset) -> HatKernel {
    let conditioning = Partition::singletons(model.space().size(m));
    hat_marginal(model, m, &conditioning).expect("singletons match X_M")
}

/// Marginal channel conditioned on the atoms of `conditioning` (a partition
/// of `X_M`): `ν̂(A; C) = P(Z ∈ C | X_M ∈ A)`.
pub fn hat_marginal(model: &Model, m: Subset, conditioning: &Partition) -> Result<HatKernel> {
    let space = model.space();
    if !m.is_subset_of(model.full()) {
        return Err(Error::NotSubset {
            inner: m.to_vec(),
            outer: model.full().to_vec(),
        });
    }
    let size_m = space.size(m);
    if conditioning.len() != size_m {
        return Err(Error::GroundMismatch {
            left: conditioning.len(),
            right: size_m,
        });
    }
    let atoms = conditioning.num_blocks();
    let k = model.num_gamma_blocks();
    let nz = model.nu().out().size();
    let mut mass = vec![0.0; atoms];
    let mut acc_gamma = vec![0.0; atoms * k];
    let mut acc_z = vec![0.0; atoms * nz];
    for (x, &w) in model.mu().prob().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let a = conditioning.block_of(space.project(space.full(), x, m));
        mass[a] += w;
        for (c, &p) in model.gamma_row(x).iter().enumerate() {
            acc_gamma[a * k + c] += w * p;
        }
        for (z, &p) in model.nu().row(x).iter().enumerate() {
            acc_z[a * nz + z] += w * p;
        }
    }
    let normalize = |acc: &[f64], width: usize| -> Vec<Option<Vec<f64>>> {
        (0..atoms)
            .map(|a| {
                (mass[a] > 0.0).then(|| {
                    acc[a * width..(a + 1) * width]
                        .iter()
                        .map(|v| v / mass[a])
                        .collect()
                })
            })
            .collect()
    };
    let gamma_table = normalize(&acc_gamma, k);
    let z_table = normalize(&acc_z, nz);
    Ok(HatKernel {
        subset: m,
        conditioning: conditioning.clone(),
        atom_mass: mass,
        gamma_table,
        z_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> ProductSpace {
        ProductSpace::from_sizes(&[2, 2]).unwrap()
    }

    #[test]
    fn rejects_bad_tables() {
        let s = two_by_two();
        assert!(matches!(
            InputDistribution::new(s.clone(), vec![0.5, 0.5, 0.5, -0.5]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            InputDistribution::new(s.clone(), vec![0.3, 0.3, 0.3, 0.3]),
            Err(Error::NotNormalized(_))
        ));
        let out = FiniteSet::indexed(2).unwrap();
        assert!(Channel::new(s, out, vec![vec![1.0, 0.0]; 3]).is_err());
    }

    #[test]
    fn constant_channel_pushes_to_point_mass() {
        let s = two_by_two();
        let mu = InputDistribution::new(s.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let nu = Channel::deterministic(s, FiniteSet::indexed(3).unwrap(), |_| 2).unwrap();
        let model = Model::new(mu, nu).unwrap();
        let pf = pushforward(&model);
        assert_eq!(pf, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_channel_on_uniform_is_uniform() {
        let s = two_by_two();
        let nu = Channel::deterministic(s.clone(), FiniteSet::indexed(4).unwrap(), |x| x).unwrap();
        let model = Model::new(InputDistribution::uniform(s), nu).unwrap();
        for p in pushforward(&model) {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_edge_cases() {
        let s = two_by_two();
        let mu = InputDistribution::new(s.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let nu =
            Channel::deterministic(s.clone(), FiniteSet::indexed(2).unwrap(), |x| x % 2).unwrap();
        let model = Model::new(mu, nu).unwrap();
        assert_eq!(
            input_marginal(&model, model.full()),
            vec![0.1, 0.2, 0.3, 0.4]
        );
        assert_eq!(input_marginal(&model, Subset::EMPTY), vec![1.0]);
        let m1 = input_marginal(&model, Subset::singleton(0));
        assert!((m1[0] - 0.4).abs() < 1e-15 && (m1[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_atoms_are_flagged() {
        let s = two_by_two();
        let mu = InputDistribution::new(s.clone(), vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let nu = Channel::deterministic(s, FiniteSet::indexed(2).unwrap(), |x| x / 2).unwrap();
        let model = Model::new(mu, nu).unwrap();
        let k = classical_marginal(&model, Subset::singleton(0));
        assert!(!k.is_null(0));
        assert!(k.is_null(1));
        assert!(k.at(1).is_none());
        assert_eq!(k.atom_mass(), &[1.0, 0.0]);
    }

    #[test]
    fn coarse_gamma_rows_aggregate() {
        let s = ProductSpace::from_sizes(&[2]).unwrap();
        let nu = Channel::new(
            s.clone(),
            FiniteSet::indexed(3).unwrap(),
            vec![vec![0.2, 0.3, 0.5], vec![0.1, 0.1, 0.8]],
        )
        .unwrap();
        let model = Model::new(InputDistribution::uniform(s), nu)
            .unwrap()
            .with_gamma(Partition::new(vec![0, 0, 1]).unwrap())
            .unwrap();
        assert!(model.gamma_resolved());
        assert!((model.gamma_row(0)[0] - 0.5).abs() < 1e-15);
        assert!((model.gamma_row(1)[1] - 0.8).abs() < 1e-15);
        let pg = pushforward_gamma(&model);
        assert!((pg[0] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn trivial_conditioning_gives_pushforward() {
        let s = two_by_two();
        let mu = InputDistribution::new(s.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let nu = Channel::new(
            s,
            FiniteSet::indexed(2).unwrap(),
            vec![
                vec![0.9, 0.1],
                vec![0.4, 0.6],
                vec![0.5, 0.5],
                vec![0.0, 1.0],
            ],
        )
        .unwrap();
        let model = Model::new(mu, nu).unwrap();
        let m = Subset::singleton(1);
        let k = hat_marginal(&model, m, &Partition::trivial(2)).unwrap();
        let pf = pushforward(&model);
        for (a, b) in k.at(0).unwrap().iter().zip(&pf) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(hat_marginal(&model, m, &Partition::trivial(3)).is_err());
    }
}

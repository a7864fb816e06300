//! Brute-force reference implementations. Everything here works from the raw
//! tables of a model (μ, ν rows, γ block ids, factor sizes) with its own
//! indexing code, and shares no computation with the library beyond reading
//! those tables.

#![allow(dead_code)]

use infoflow::{Model, Partition, Subset};

/// Digits of state `x` of the full space, factor 0 fastest.
pub fn digits(sizes: &[usize], mut x: usize) -> Vec<usize> {
    sizes
        .iter()
        .map(|&s| {
            let d = x % s;
            x /= s;
            d
        })
        .collect()
}

/// Index in `X_M` of the restriction of a full-space digit vector.
pub fn restrict(sizes: &[usize], members: &[usize], full_digits: &[usize]) -> usize {
    let mut idx = 0;
    let mut radix = 1;
    for &i in members {
        idx += full_digits[i] * radix;
        radix *= sizes[i];
    }
    idx
}

pub fn members(m: Subset) -> Vec<usize> {
    (0..32).filter(|&i| m.bits() >> i & 1 == 1).collect()
}

pub fn subspace_size(sizes: &[usize], m: Subset) -> usize {
    members(m).iter().map(|&i| sizes[i]).product()
}

/// A model flattened to plain tables.
pub struct Tables {
    pub sizes: Vec<usize>,
    pub mu: Vec<f64>,
    /// ν(x; C) per γ-block, computed by summing raw rows.
    pub rows: Vec<Vec<f64>>,
    pub tol: f64,
}

impl Tables {
    pub fn of(model: &Model) -> Tables {
        let sizes: Vec<usize> = model.space().factors().iter().map(|f| f.size()).collect();
        let total: usize = sizes.iter().product();
        let out = model.nu().out().size();
        let gamma_ids: Vec<usize> = (0..out).map(|z| model.gamma().block_of(z)).collect();
        let k = gamma_ids.iter().max().unwrap() + 1;
        let rows = (0..total)
            .map(|x| {
                let mut r = vec![0.0; k];
                for z in 0..out {
                    r[gamma_ids[z]] += model.nu().row(x)[z];
                }
                r
            })
            .collect();
        Tables {
            sizes,
            mu: model.mu().prob().to_vec(),
            rows,
            tol: model.tol(),
        }
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.mu.len()
    }

    pub fn proj(&self, m: Subset, x: usize) -> usize {
        restrict(&self.sizes, &members(m), &digits(&self.sizes, x))
    }

    /// ν̂ for every state of `X_M`, conditioning on the blocks of `alpha`.
    /// `None` where the block has zero mass.
    pub fn hat(&self, m: Subset, alpha: &[usize]) -> Vec<Option<Vec<f64>>> {
        let k = self.rows[0].len();
        let nm = subspace_size(&self.sizes, m);
        (0..nm)
            .map(|xm| {
                let mut mass = 0.0;
                let mut acc = vec![0.0; k];
                for x in 0..self.total() {
                    if alpha[self.proj(m, x)] == alpha[xm] {
                        mass += self.mu[x];
                        for (a, r) in acc.iter_mut().zip(&self.rows[x]) {
                            *a += self.mu[x] * r;
                        }
                    }
                }
                (mass > 0.0).then(|| acc.iter().map(|a| a / mass).collect())
            })
            .collect()
    }

    pub fn marginal(&self, m: Subset) -> Vec<f64> {
        let mut p = vec![0.0; subspace_size(&self.sizes, m)];
        for x in 0..self.total() {
            p[self.proj(m, x)] += self.mu[x];
        }
        p
    }

    /// The flow integral with brute-force kernels on `L ⊆ M`.
    pub fn flow(&self, m: Subset, alpha_m: &[usize], l: Subset, alpha_l: &[usize]) -> f64 {
        let hm = self.hat(m, alpha_m);
        let hl = self.hat(l, alpha_l);
        let mu_m = self.marginal(m);
        let ml = members(l);
        let mm = members(m);
        let mut total = 0.0;
        for (xm, &w) in mu_m.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            // Rebuild full-space digits of x_M to restrict to L.
            let mut d = vec![0; self.n()];
            let mut rest = xm;
            for &i in &mm {
                d[i] = rest % self.sizes[i];
                rest /= self.sizes[i];
            }
            let xl = restrict(&self.sizes, &ml, &d);
            let p = hm[xm].as_ref().unwrap();
            let q = hl[xl].as_ref().unwrap();
            for c in 0..p.len() {
                if p[c] > 0.0 {
                    total += w * p[c] * (p[c] / q[c]).ln();
                }
            }
        }
        total
    }

    pub fn classical_cmi(&self, m: Subset, l: Subset) -> f64 {
        let id = |s: Subset| (0..subspace_size(&self.sizes, s)).collect::<Vec<_>>();
        self.flow(m, &id(m), l, &id(l))
    }

    fn rows_equal(&self, a: usize, b: usize) -> bool {
        self.rows[a]
            .iter()
            .zip(&self.rows[b])
            .all(|(p, q)| (p - q).abs() <= self.tol)
    }

    /// Channel classes by first matching representative, in index order.
    pub fn channel_classes(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        (0..self.total())
            .map(|x| match reps.iter().position(|&r| self.rows_equal(r, x)) {
                Some(i) => i,
                None => {
                    reps.push(x);
                    reps.len() - 1
                }
            })
            .collect()
    }

    /// Trace on `X_M`: `x_M ~ x'_M` iff the channel classes agree in every context.
    pub fn trace(&self, m: Subset) -> Vec<Vec<usize>> {
        let classes = self.channel_classes();
        let rest = Subset::from_bits(!m.bits() & ((1u32 << self.n()) - 1));
        let nm = subspace_size(&self.sizes, m);
        let nr = subspace_size(&self.sizes, rest);
        let mut key = vec![vec![usize::MAX; nr]; nm];
        for x in 0..self.total() {
            key[self.proj(m, x)][self.proj(rest, x)] = classes[x];
        }
        key
    }

    /// Reduction atoms on `X_M` by membership: enumerate every subset
    /// `A ⊆ X_M` and keep those whose cylinder is a union of channel
    /// classes. Returns the atom bitmask of each element. Requires `|X_M| ≤ 20`.
    pub fn reduction_atoms(&self, m: Subset) -> Vec<u64> {
        let nm = subspace_size(&self.sizes, m);
        assert!(nm <= 20);
        let classes = self.channel_classes();
        let mut rep = vec![usize::MAX; self.total()];
        for x in 0..self.total() {
            if rep[classes[x]] == usize::MAX {
                rep[classes[x]] = x;
            }
        }
        let proj: Vec<usize> = (0..self.total()).map(|x| self.proj(m, x)).collect();
        let full_mask: u64 = (1u64 << nm) - 1;
        let mut atoms = vec![full_mask; nm];
        for a in 0..=full_mask {
            let inside = |x: usize| a >> proj[x] & 1 == 1;
            if (0..self.total()).all(|x| inside(x) == inside(rep[classes[x]])) {
                for (e, atom) in atoms.iter_mut().enumerate() {
                    if a >> e & 1 == 1 {
                        *atom &= a;
                    }
                }
            }
        }
        atoms
    }
}

/// Block ids of a library partition, as a plain vector.
pub fn ids(p: &Partition) -> Vec<usize> {
    (0..p.len()).map(|e| p.block_of(e)).collect()
}

/// Same-block relation of two labelings agrees on every pair.
pub fn same_partition<A: PartialEq, B: PartialEq>(a: &[A], b: &[B]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// `fine` refines `coarse` as labelings.
pub fn refines<A: PartialEq, B: PartialEq>(fine: &[A], coarse: &[B]) -> bool {
    (0..fine.len()).all(|i| (0..fine.len()).all(|j| fine[i] != fine[j] || coarse[i] == coarse[j]))
}

/// Projectivity over all nested pairs by brute force.
pub fn projective_all_pairs(t: &Tables, family: &[Vec<usize>]) -> bool {
    let n = t.n();
    for mb in 0u32..1 << n {
        let m = Subset::from_bits(mb);
        let mm = members(m);
        let nm = subspace_size(&t.sizes, m);
        for lb in 0u32..1 << n {
            if lb & !mb != 0 {
                continue;
            }
            let l = Subset::from_bits(lb);
            let ml = members(l);
            let lifted: Vec<usize> = (0..nm)
                .map(|xm| {
                    let mut d = vec![0; n];
                    let mut r = xm;
                    for &i in &mm {
                        d[i] = r % t.sizes[i];
                        r /= t.sizes[i];
                    }
                    family[lb as usize][restrict(&t.sizes, &ml, &d)]
                })
                .collect();
            if !refines(&family[mb as usize], &lifted) {
                return false;
            }
        }
    }
    true
}

/// Lift of a labeling of `X_L` to `X_M`.
pub fn lift_labels(t: &Tables, labels: &[usize], l: Subset, m: Subset) -> Vec<usize> {
    let mm = members(m);
    let ml = members(l);
    (0..subspace_size(&t.sizes, m))
        .map(|xm| {
            let mut d = vec![0; t.n()];
            let mut r = xm;
            for &i in &mm {
                d[i] = r % t.sizes[i];
                r /= t.sizes[i];
            }
            labels[restrict(&t.sizes, &ml, &d)]
        })
        .collect()
}

/// Extension by the direct formula: the common refinement of the lifts of
/// all traces `trace(L)`, `L ⊆ M`. Labels are key vectors.
pub fn extension_direct(t: &Tables, m: Subset) -> Vec<Vec<usize>> {
    let nm = subspace_size(&t.sizes, m);
    let mut keys = vec![Vec::new(); nm];
    for lb in 0u32..1 << t.n() {
        if lb & !m.bits() != 0 {
            continue;
        }
        let l = Subset::from_bits(lb);
        let tr = t.trace(l);
        // Label each X_L state by the index of its first equal trace key.
        let labels: Vec<usize> = (0..tr.len())
            .map(|a| (0..tr.len()).find(|&b| tr[b] == tr[a]).unwrap())
            .collect();
        for (xm, lab) in lift_labels(t, &labels, l, m).into_iter().enumerate() {
            keys[xm].push(lab);
        }
    }
    keys
}

//! Parametrized example models and β-sweeps.
//!
//! - **copy**: inputs `X, Y ∈ {−1, +1}` with `μ(x, y) ∝ exp(βxy)` and `Z = Y`.
//! - **transfer**: one step of a coupled binary Markov chain. Inputs are the
//!   current `(X, Y)` under the stationary law, the output is the next `X'`
//!   with `p(x' | x, y) = 1 / (1 + exp(2βx'y))`.
//! - **sum**: `n` inputs in `{0, .., k−1}` and `Z = Σ x_i`. The input law is
//!   `μ ∝ exp(β Σ_{i<j} c_i c_j)` with centred values `c_i = x_i − (k−1)/2`,
//!   uniform at `β = 0`.

use std::f64::consts::LN_2;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::channel::{Channel, InputDistribution, Model};
use crate::error::{Error, Result};
use crate::measures::FlowContext;
use crate::partition::{FiniteSet, ProductSpace, Subset};
use crate::sigma::{projective_extension, projective_reduction};

/// Largest input space accepted by [`build_sum`].
pub const SUM_STATE_CAP: usize = 4096;

const SPIN: [f64; 2] = [-1.0, 1.0];

fn spin_set() -> FiniteSet {
    FiniteSet::new(["-1", "+1"]).expect("distinct labels")
}

fn spin_space() -> ProductSpace {
    ProductSpace::new(vec![spin_set(), spin_set()]).expect("two factors")
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must be finite, got {beta}"
        )))
    }
}

/// Normalize `exp(energy)` without overflow.
fn gibbs(energy: &[f64]) -> Vec<f64> {
    let max = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = energy.iter().map(|e| (e - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// `1 / (1 + e^t)` without overflow.
fn logistic_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub fn build_copy(beta: f64) -> Result<Model> {
    check_beta(beta)?;
    let space = spin_space();
    let energy: Vec<f64> = (0..4).map(|s| beta * SPIN[s % 2] * SPIN[s / 2]).collect();
    let mu = InputDistribution::new(space.clone(), gibbs(&energy))?;
    let nu = Channel::deterministic(space, spin_set(), |s| s / 2)?;
    Model::new(mu, nu)?.with_names(["X", "Y"])
}

/// Closed-form information quantities of the copy model, in nats.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CopyAnalytic {
    pub i_xz: f64,
    pub i_yz_given_x: f64,
    pub i_x_to_z: f64,
    pub i_y_to_z_given_x: f64,
    pub i_yz: f64,
    pub i_xz_given_y: f64,
}

pub fn analytic_copy(beta: f64) -> Result<CopyAnalytic> {
    check_beta(beta)?;
    let t = 2.0 * beta;
    let i_xz = LN_2 - softplus(t) * logistic_neg(t) - softplus(-t) * logistic_neg(-t);
    Ok(CopyAnalytic {
        i_xz,
        i_yz_given_x: LN_2 - i_xz,
        i_x_to_z: 0.0,
        i_y_to_z_given_x: LN_2,
        i_yz: LN_2,
        i_xz_given_y: 0.0,
    })
}

/// `p(x' | x, y)` of the transfer chain.
pub fn transfer_x_kernel(beta: f64, x_next: f64, y: f64) -> f64 {
    logistic_neg(2.0 * beta * x_next * y)
}

/// `p(y' | x, y)` of the transfer chain.
pub fn transfer_y_kernel(beta: f64, y_next: f64, y: f64) -> f64 {
    logistic_neg(2.0 * beta * y_next * y)
}

/// Joint transition matrix on states `s = x + 2y`.
pub fn transfer_transition(beta: f64) -> Matrix4<f64> {
    Matrix4::from_fn(|s, t| {
        let (y, xn, yn) = (SPIN[s / 2], SPIN[t % 2], SPIN[t / 2]);
        transfer_x_kernel(beta, xn, y) * transfer_y_kernel(beta, yn, y)
    })
}

/// Closed-form stationary law: `1/2 − ab` on aligned states, `ab` otherwise,
/// with `a = 1/(1+e^{2β})`, `b = 1/(1+e^{−2β})`.
pub fn transfer_stationary_closed_form(beta: f64) -> [f64; 4] {
    let ab = logistic_neg(2.0 * beta) * logistic_neg(-2.0 * beta);
    [0.5 - ab, ab, ab, 0.5 - ab]
}

/// Stationary law of the transfer chain by a direct linear solve, with the
/// residual `max |μP − μ|`.
pub fn transfer_stationary(beta: f64) -> Result<(Vec<f64>, f64)> {
    check_beta(beta)?;
    let p = transfer_transition(beta);
    // (Pᵀ − I) μ = 0 with the last equation replaced by Σ μ = 1.
    let mut a = p.transpose() - Matrix4::identity();
    for j in 0..4 {
        a[(3, j)] = 1.0;
    }
    let rhs = Vector4::new(0.0, 0.0, 0.0, 1.0);
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotStationary(f64::INFINITY))?;
    let mut mu: Vec<f64> = sol.iter().map(|v| v.max(0.0)).collect();
    let z: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|v| *v /= z);
    let row = nalgebra::RowVector4::from_row_slice(&mu);
    let residual = (row * p - row).amax();
    if residual > 1e-8 {
        return Err(Error::NotStationary(residual));
    }
    Ok((mu, residual))
}

pub fn build_transfer(beta: f64) -> Result<Model> {
    let (mu, _) = transfer_stationary(beta)?;
    let space = spin_space();
    let rows = (0..4)
        .map(|s| {
            SPIN.iter()
                .map(|&xn| transfer_x_kernel(beta, xn, SPIN[s / 2]))
                .collect()
        })
        .collect();
    let nu = Channel::new(space.clone(), spin_set(), rows)?;
    Model::new(InputDistribution::new(space, mu)?, nu)?.with_names(["X", "Y"])
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub beta: f64,
    /// Classical `I(Y; X' | X)`.
    pub cmi: f64,
    /// `I(Y → X' | X)` under the extension family.
    pub flow: f64,
    /// `I(Y; X')`.
    pub mi: f64,
    pub stationary: Vec<f64>,
    pub stationary_residual: f64,
}

pub fn transfer_report(beta: f64) -> Result<TransferReport> {
    let model = build_transfer(beta)?;
    let (stationary, stationary_residual) = transfer_stationary(beta)?;
    let fam = projective_extension(&model)?;
    let ctx = FlowContext::new(&model, &fam)?;
    let (x, y, full) = (Subset::singleton(0), Subset::singleton(1), model.full());
    Ok(TransferReport {
        beta,
        cmi: ctx.cmi(full, x)?,
        flow: ctx.flow(full, x)?,
        mi: ctx.cmi(y, Subset::EMPTY)?,
        stationary,
        stationary_residual,
    })
}

pub fn build_sum(n: usize, k: usize) -> Result<Model> {
    build_sum_coupled(n, k, 0.0)
}

pub fn build_sum_coupled(n: usize, k: usize, beta: f64) -> Result<Model> {
    check_beta(beta)?;
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!(
            "sum model needs n >= 2 and k >= 2, got n={n}, k={k}"
        )));
    }
    let size = u32::try_from(n)
        .ok()
        .and_then(|e| k.checked_pow(e))
        .filter(|&s| s <= SUM_STATE_CAP)
        .ok_or(Error::ResourceCap {
            size: k.saturating_pow(n.min(64) as u32),
            cap: SUM_STATE_CAP,
        })?;
    let alphabet = FiniteSet::new((0..k).map(|v| v.to_string()))?;
    let space = ProductSpace::new(vec![alphabet; n])?;
    let centre = (k as f64 - 1.0) / 2.0;
    let energy: Vec<f64> = (0..size)
        .map(|x| {
            let c: Vec<f64> = space
                .decode(space.full(), x)
                .iter()
                .map(|&v| v as f64 - centre)
                .collect();
            let mut e = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    e += c[i] * c[j];
                }
            }
            beta * e
        })
        .collect();
    let mu = if beta == 0.0 {
        InputDistribution::uniform(space.clone())
    } else {
        InputDistribution::new(space.clone(), gibbs(&energy))?
    };
    let out = FiniteSet::new((0..=n * (k - 1)).map(|v| v.to_string()))?;
    let digits = space.clone();
    let nu = Channel::deterministic(space, out, |x| digits.decode(digits.full(), x).iter().sum())?;
    Model::new(mu, nu)
}

/// Scenario selector for sweeps and model export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Copy,
    Transfer,
    Sum { n: usize, k: usize },
}

impl Scenario {
    pub fn parse(id: &str, n: usize, k: usize) -> Result<Scenario> {
        match id {
            "copy" => Ok(Scenario::Copy),
            "transfer" => Ok(Scenario::Transfer),
            "sum" => Ok(Scenario::Sum { n, k }),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario '{other}' (copy | transfer | sum)"
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Scenario::Copy => "copy",
            Scenario::Transfer => "transfer",
            Scenario::Sum { .. } => "sum",
        }
    }

    pub fn build(&self, beta: f64) -> Result<Model> {
        match *self {
            Scenario::Copy => build_copy(beta),
            Scenario::Transfer => build_transfer(beta),
            Scenario::Sum { n, k } => build_sum_coupled(n, k, beta),
        }
    }

    /// Quantity ids available for sweeps, in output order.
    pub fn quantities(&self) -> Vec<String> {
        match *self {
            Scenario::Copy => [
                "mi_x_z",
                "cmi_y_z_given_x",
                "flow_x_to_z",
                "flow_y_to_z_given_x",
                "mi_xy_z",
                "analytic_mi_x_z",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            Scenario::Transfer => ["cmi", "flow", "mi"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            Scenario::Sum { n, .. } => {
                let mut q = vec!["mi_total".to_string()];
                q.extend((1..=n).map(|j| format!("ext_term_{j}")));
                q.extend((1..=n).map(|j| format!("red_term_{j}")));
                q
            }
        }
    }

    fn evaluate(&self, beta: f64, quantities: &[String]) -> Result<Vec<f64>> {
        let model = self.build(beta)?;
        let ext = projective_extension(&model)?;
        let ectx = FlowContext::new(&model, &ext)?;
        let empty = Subset::EMPTY;
        let full = model.full();
        let red_family;
        let rctx = if matches!(self, Scenario::Sum { .. }) {
            red_family = projective_reduction(&model)?;
            Some(FlowContext::new(&model, &red_family)?)
        } else {
            None
        };
        let prefix = |j: usize| Subset::from_indices(0..j);
        quantities
            .iter()
            .map(|q| {
                let (x, y) = (Subset::singleton(0), Subset::singleton(1));
                match (self, q.as_str()) {
                    (Scenario::Copy, "mi_x_z") => ectx.cmi(x, empty),
                    (Scenario::Copy, "cmi_y_z_given_x") => ectx.cmi(full, x),
                    (Scenario::Copy, "flow_x_to_z") => ectx.flow(x, empty),
                    (Scenario::Copy, "flow_y_to_z_given_x") => ectx.flow(full, x),
                    (Scenario::Copy, "mi_xy_z") => ectx.cmi(full, empty),
                    (Scenario::Copy, "analytic_mi_x_z") => Ok(analytic_copy(beta)?.i_xz),
                    (Scenario::Transfer, "cmi") => ectx.cmi(full, x),
                    (Scenario::Transfer, "flow") => ectx.flow(full, x),
                    (Scenario::Transfer, "mi") => ectx.cmi(y, empty),
                    (Scenario::Sum { .. }, "mi_total") => ectx.cmi(full, empty),
                    (Scenario::Sum { n, .. }, other) => {
                        let (ctx, j) = if let Some(j) = other.strip_prefix("ext_term_") {
                            (&ectx, j)
                        } else if let Some(j) = other.strip_prefix("red_term_") {
                            (rctx.as_ref().expect("built for sum"), j)
                        } else {
                            return Err(unknown_quantity(self, other));
                        };
                        match j.parse::<usize>() {
                            Ok(j) if (1..=*n).contains(&j) => ctx.flow(prefix(j), prefix(j - 1)),
                            _ => Err(unknown_quantity(self, other)),
                        }
                    }
                    (_, other) => Err(unknown_quantity(self, other)),
                }
            })
            .collect()
    }
}

fn unknown_quantity(s: &Scenario, q: &str) -> Error {
    Error::InvalidParameter(format!(
        "unknown quantity '{q}' for scenario {} (available: {})",
        s.id(),
        s.quantities().join(", ")
    ))
}

/// Evenly spaced grid `start, start + step, .., stop` (inclusive).
pub fn beta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(Error::InvalidParameter(format!(
            "bad grid {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub betas: Vec<f64>,
    pub quantities: Vec<String>,
}

impl SweepSpec {
    /// Empty `quantities` selects every quantity of the scenario.
    pub fn new(scenario: Scenario, betas: Vec<f64>, quantities: Vec<String>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidParameter("empty beta grid".into()));
        }
        if let Some(b) = betas.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite beta {b}")));
        }
        let available = scenario.quantities();
        let quantities = if quantities.is_empty() {
            available.clone()
        } else {
            quantities
        };
        if let Some(q) = quantities.iter().find(|q| !available.contains(q)) {
            return Err(unknown_quantity(&scenario, q));
        }
        Ok(SweepSpec {
            scenario,
            betas,
            quantities,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub quantity: String,
    pub value: f64,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(spec.betas.len() * spec.quantities.len());
    for &beta in &spec.betas {
        let values = spec.scenario.evaluate(beta, &spec.quantities)?;
        for (q, v) in spec.quantities.iter().zip(values) {
            rows.push(SweepRow {
                beta,
                quantity: q.clone(),
                value: v,
            });
        }
    }
    Ok(rows)
}

/// CSV with header `beta,quantity,value` and LF line endings.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(["beta", "quantity", "value"])?;
    for r in rows {
        wtr.write_record([r.beta.to_string(), r.quantity.clone(), r.value.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copy_mu_examples() {
        let m = build_copy(0.0).unwrap();
        assert!(m.mu().prob().iter().all(|&p| (p - 0.25).abs() < 1e-15));
        let m = build_copy(1.0).unwrap();
        let e = 1f64.exp();
        // state (+1, +1) is index 3
        assert!((m.mu().prob()[3] - e / (2.0 * e + 2.0 / e)).abs() < 1e-15);
        for s in 0..4 {
            assert_eq!(m.nu().row(s)[s / 2], 1.0);
        }
    }

    #[test]
    fn analytic_copy_limits() {
        assert!(analytic_copy(0.0).unwrap().i_xz.abs() < 1e-15);
        assert!((analytic_copy(20.0).unwrap().i_xz - LN_2).abs() < 1e-9);
        assert!((analytic_copy(-400.0).unwrap().i_xz - LN_2).abs() < 1e-12);
        assert!(analytic_copy(f64::NAN).is_err());
    }

    #[test]
    fn transfer_stationary_matches_closed_form() {
        for beta in [0.0, 0.5, 1.0, 3.0, 20.0, -2.0] {
            let (mu, res) = transfer_stationary(beta).unwrap();
            assert!(res <= 1e-10);
            for (a, b) in mu.iter().zip(transfer_stationary_closed_form(beta)) {
                assert!((a - b).abs() < 1e-10, "beta {beta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn transfer_rows_depend_on_y_only() {
        let m = build_transfer(0.7).unwrap();
        assert_eq!(m.nu().row(0), m.nu().row(1));
        assert_eq!(m.nu().row(2), m.nu().row(3));
        let m = build_transfer(20.0).unwrap();
        // (x, y) ↦ x' = −y
        assert!(m.nu().row(3)[0] > 1.0 - 1e-15);
        assert!(m.nu().row(0)[1] > 1.0 - 1e-15);
    }

    #[test]
    fn sum_shapes_and_caps() {
        let m = build_sum(3, 2).unwrap();
        assert_eq!(m.nu().out().size(), 4);
        assert_eq!(m.nu().row(7)[3], 1.0);
        assert!(matches!(build_sum(13, 2), Err(Error::ResourceCap { .. })));
        assert!(matches!(build_sum(7, 4), Err(Error::ResourceCap { .. })));
        assert!(build_sum(1, 3).is_err());
        assert!(build_sum(6, 4).is_ok());
    }

    #[test]
    fn grid_and_spec_validation() {
        assert_eq!(
            beta_grid(-1.0, 1.0, 0.5).unwrap(),
            vec![-1.0, -0.5, 0.0, 0.5, 1.0]
        );
        assert_eq!(beta_grid(0.0, 0.3, 0.1).unwrap().len(), 4);
        assert!(beta_grid(1.0, 0.0, 0.1).is_err());
        assert!(SweepSpec::new(Scenario::Copy, vec![], vec![]).is_err());
        assert!(SweepSpec::new(Scenario::Copy, vec![f64::INFINITY], vec![]).is_err());
        assert!(SweepSpec::new(Scenario::Transfer, vec![0.0], vec!["nope".into()]).is_err());
        assert!(SweepSpec::new(
            Scenario::Sum { n: 3, k: 2 },
            vec![0.0],
            vec!["ext_term_4".into()]
        )
        .is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let spec = SweepSpec::new(
            Scenario::Transfer,
            vec![0.0, 1.0],
            vec!["flow".into(), "mi".into()],
        )
        .unwrap();
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("beta,quantity,value\n0,flow,"));
        assert!(!text.contains('\r'));
    }
}

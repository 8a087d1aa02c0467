//! Second-stage demand: choice of orbital shell.
//!
//! Each representative operator picks a shell with multinomial-logit
//! probabilities over deterministic utilities
//! `V_j = asc_j + x_j . beta + access_cost_j * gamma`, where `x_j` holds the
//! shell's active payload counts per operator group and its total
//! unadjusted collision rate. Parameters are fitted by maximum likelihood,
//! separately per operator group.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{OperatorGroup, ShellGrid, MU_EARTH};
use crate::error::{Error, Result};
use crate::optim::{inf_norm, minimize, BfgsSettings};

/// Shell attributes entering the utility, in coefficient order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    CivilPayloads,
    CommercialPayloads,
    DefensePayloads,
    OtherPayloads,
    CollisionRate,
}

impl Attribute {
    pub const COUNT: usize = 5;
    pub const ALL: [Attribute; 5] = [
        Attribute::CivilPayloads,
        Attribute::CommercialPayloads,
        Attribute::DefensePayloads,
        Attribute::OtherPayloads,
        Attribute::CollisionRate,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Attribute::CivilPayloads => "Civil active payload",
            Attribute::CommercialPayloads => "Commercial active payload",
            Attribute::DefensePayloads => "Defense active payload",
            Attribute::OtherPayloads => "Other active payload",
            Attribute::CollisionRate => "Total PIB collision rate",
        }
    }
}

/// What an operator sees in every shell in one year.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellCharacteristics {
    /// Per shell, values in [`Attribute`] order.
    pub attributes: Vec<[f64; Attribute::COUNT]>,
    /// Per shell access cost, million $-GJ.
    pub access_cost: Vec<f64>,
}

impl ShellCharacteristics {
    pub fn n_shells(&self) -> usize {
        self.attributes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.access_cost.len() != self.attributes.len() {
            return Err(Error::DimensionMismatch {
                what: "access cost shells".into(),
                expected: self.attributes.len(),
                found: self.access_cost.len(),
            });
        }
        for (j, (row, &ac)) in self.attributes.iter().zip(&self.access_cost).enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!(
                    "shell {j}: payload counts and collision rate must be finite and non-negative"
                )));
            }
            if !(ac.is_finite() && ac > 0.0) {
                return Err(Error::invalid(format!("shell {j}: access cost {ac} must be positive")));
            }
        }
        Ok(())
    }
}

/// One satellite placement: the shell chosen and everything visible at the
/// time. Occasions from the same operator group and year share their
/// characteristics.
#[derive(Debug, Clone)]
pub struct ChoiceOccasion {
    pub group: OperatorGroup,
    pub year: i32,
    pub chosen: usize,
    pub chars: Arc<ShellCharacteristics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceModelParams {
    /// Alternative-specific constants; `asc[reference_shell] == 0`.
    pub asc: Vec<f64>,
    pub beta: [f64; Attribute::COUNT],
    /// Marginal utility of access cost.
    pub gamma: f64,
    pub reference_shell: usize,
    #[serde(default)]
    pub asc_penalty: f64,
}

impl ChoiceModelParams {
    /// All-zero parameters over `n_shells` shells.
    pub fn zeros(n_shells: usize) -> Self {
        Self {
            asc: vec![0.0; n_shells],
            beta: [0.0; Attribute::COUNT],
            gamma: 0.0,
            reference_shell: 0,
            asc_penalty: 0.0,
        }
    }

    pub fn n_shells(&self) -> usize {
        self.asc.len()
    }

    /// Number of free parameters: J - 1 constants, the attribute weights and
    /// the access-cost weight.
    pub fn n_free(&self) -> usize {
        self.asc.len() - 1 + Attribute::COUNT + 1
    }

    /// Free parameters as a flat vector: constants of every non-reference
    /// shell in shell order, then `beta`, then `gamma`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .asc
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != self.reference_shell)
            .map(|(_, a)| *a)
            .collect();
        v.extend_from_slice(&self.beta);
        v.push(self.gamma);
        v
    }

    pub fn from_vector(v: &[f64], n_shells: usize, reference_shell: usize, asc_penalty: f64) -> Result<Self> {
        let expected = n_shells - 1 + Attribute::COUNT + 1;
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "choice parameter vector".into(),
                expected,
                found: v.len(),
            });
        }
        if reference_shell >= n_shells {
            return Err(Error::IndexOutOfRange {
                what: "reference shell",
                index: reference_shell,
                len: n_shells,
            });
        }
        let mut asc = vec![0.0; n_shells];
        let mut it = v.iter();
        for (j, slot) in asc.iter_mut().enumerate() {
            if j != reference_shell {
                *slot = *it.next().unwrap();
            }
        }
        let mut beta = [0.0; Attribute::COUNT];
        for b in beta.iter_mut() {
            *b = *it.next().unwrap();
        }
        let gamma = *it.next().unwrap();
        Ok(Self {
            asc,
            beta,
            gamma,
            reference_shell,
            asc_penalty,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference_shell >= self.asc.len() {
            return Err(Error::IndexOutOfRange {
                what: "reference shell",
                index: self.reference_shell,
                len: self.asc.len(),
            });
        }
        if self.asc[self.reference_shell] != 0.0 {
            return Err(Error::invalid("constant of the reference shell must be 0"));
        }
        let all = self.asc.iter().chain(&self.beta).chain(std::iter::once(&self.gamma));
        if all.clone().any(|v| !v.is_finite()) || !(self.asc_penalty >= 0.0) {
            return Err(Error::NonFinite("choice model parameters".into()));
        }
        Ok(())
    }
}

/// Specific energy (GJ per tonne) of a circular orbit at the midpoint of
/// shell `j`, measured from rest on the surface.
pub fn orbital_energy_proxy(grid: &ShellGrid, j: usize) -> Result<f64> {
    let r = grid.earth_radius() + grid.midpoint_altitude(j)?;
    let kinetic = 0.5 * MU_EARTH / r;
    let potential = MU_EARTH * (1.0 / grid.earth_radius() - 1.0 / r);
    // km^2/s^2 == MJ/kg == GJ/t
    Ok(kinetic + potential)
}

/// Launch price times the energy needed to reach shell `j`, in million
/// $-GJ. An explicit per-shell energy table (GJ/t) overrides the circular
/// orbit proxy.
pub fn access_cost(price_musd: f64, shell: usize, grid: &ShellGrid, energy_table: Option<&[f64]>) -> Result<f64> {
    if !(price_musd.is_finite() && price_musd > 0.0) {
        return Err(Error::invalid(format!("launch price {price_musd} must be positive")));
    }
    let energy = match energy_table {
        Some(table) => {
            if table.len() != grid.n_shells() {
                return Err(Error::DimensionMismatch {
                    what: "energy table".into(),
                    expected: grid.n_shells(),
                    found: table.len(),
                });
            }
            let e = *table.get(shell).ok_or(Error::IndexOutOfRange {
                what: "shell",
                index: shell,
                len: table.len(),
            })?;
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::invalid(format!("energy table entry {e} for shell {shell}")));
            }
            e
        }
        None => orbital_energy_proxy(grid, shell)?,
    };
    Ok(price_musd * energy)
}

fn check_dims(params: &ChoiceModelParams, chars: &ShellCharacteristics) -> Result<()> {
    if params.n_shells() != chars.n_shells() || chars.access_cost.len() != chars.n_shells() {
        return Err(Error::DimensionMismatch {
            what: "choice set shells".into(),
            expected: params.n_shells(),
            found: chars.n_shells(),
        });
    }
    Ok(())
}

/// Deterministic utility of every shell.
pub fn utility(params: &ChoiceModelParams, chars: &ShellCharacteristics) -> Result<Vec<f64>> {
    check_dims(params, chars)?;
    Ok(utilities_unchecked(params, chars))
}

fn utilities_unchecked(params: &ChoiceModelParams, chars: &ShellCharacteristics) -> Vec<f64> {
    chars
        .attributes
        .iter()
        .zip(&chars.access_cost)
        .zip(&params.asc)
        .map(|((x, ac), a)| {
            let xb: f64 = x.iter().zip(&params.beta).map(|(xi, b)| xi * b).sum();
            a + xb + ac * params.gamma
        })
        .collect()
}

/// Largest admissible utility gap below the best shell.
pub const MAX_UTILITY_SPREAD: f64 = 700.0;

/// Softmax with max subtraction. Utilities more than
/// [`MAX_UTILITY_SPREAD`] below the maximum are rejected so every
/// probability stays strictly positive.
pub fn softmax(utilities: &[f64]) -> Result<Vec<f64>> {
    let (max, log_sum) = log_sum_exp(utilities)?;
    Ok(utilities.iter().map(|v| (v - max - log_sum).exp()).collect())
}

/// Returns `(max, log sum exp(v - max))`.
fn log_sum_exp(utilities: &[f64]) -> Result<(f64, f64)> {
    if utilities.is_empty() {
        return Err(Error::invalid("empty choice set"));
    }
    if utilities.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("utility".into()));
    }
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if utilities.iter().any(|v| max - v > MAX_UTILITY_SPREAD) {
        return Err(Error::NonFinite(format!(
            "utility: spread across shells exceeds {MAX_UTILITY_SPREAD}"
        )));
    }
    let sum: f64 = utilities.iter().map(|v| (v - max).exp()).sum();
    Ok((max, sum.ln()))
}

pub fn choice_probabilities(params: &ChoiceModelParams, chars: &ShellCharacteristics) -> Result<Vec<f64>> {
    softmax(&utility(params, chars)?)
}

/// Probability-weighted mean utility across shells, used as the price index
/// of the first stage.
pub fn price_index(params: &ChoiceModelParams, chars: &ShellCharacteristics) -> Result<f64> {
    let v = utility(params, chars)?;
    let p = softmax(&v)?;
    Ok(p.iter().zip(&v).map(|(p, v)| p * v).sum())
}

fn check_occasions(params: &ChoiceModelParams, occasions: &[ChoiceOccasion]) -> Result<()> {
    if occasions.is_empty() {
        return Err(Error::invalid("no choice occasions"));
    }
    for (i, occ) in occasions.iter().enumerate() {
        if occ.chars.n_shells() == 0 {
            return Err(Error::invalid(format!("occasion {i} has an empty choice set")));
        }
        check_dims(params, &occ.chars)?;
        if occ.chosen >= occ.chars.n_shells() {
            return Err(Error::IndexOutOfRange {
                what: "chosen shell",
                index: occ.chosen,
                len: occ.chars.n_shells(),
            });
        }
    }
    Ok(())
}

/// Sum of log choice probabilities of the chosen shells, minus
/// `asc_penalty * |asc|^2`.
pub fn log_likelihood(params: &ChoiceModelParams, occasions: &[ChoiceOccasion]) -> Result<f64> {
    check_occasions(params, occasions)?;
    let mut ll = 0.0;
    for occ in occasions {
        let v = utilities_unchecked(params, &occ.chars);
        let (max, lse) = log_sum_exp(&v)?;
        ll += v[occ.chosen] - max - lse;
    }
    Ok(ll - penalty(params))
}

fn penalty(params: &ChoiceModelParams) -> f64 {
    if params.asc_penalty == 0.0 {
        0.0
    } else {
        params.asc_penalty * params.asc.iter().map(|a| a * a).sum::<f64>()
    }
}

/// Log-likelihood and its gradient with respect to
/// [`ChoiceModelParams::to_vector`].
pub fn log_likelihood_with_gradient(
    params: &ChoiceModelParams,
    occasions: &[ChoiceOccasion],
) -> Result<(f64, Vec<f64>)> {
    check_occasions(params, occasions)?;
    let n = params.n_shells();
    let mut ll = 0.0;
    let mut g_asc = vec![0.0; n];
    let mut g_beta = [0.0; Attribute::COUNT];
    let mut g_gamma = 0.0;
    // Occasions sharing characteristics reuse the probabilities.
    let mut cached: Option<(*const ShellCharacteristics, Vec<f64>, f64, f64)> = None;
    for occ in occasions {
        let key = Arc::as_ptr(&occ.chars);
        if cached.as_ref().map(|c| c.0) != Some(key) {
            let v = utilities_unchecked(params, &occ.chars);
            let (max, lse) = log_sum_exp(&v)?;
            let p: Vec<f64> = v.iter().map(|u| (u - max - lse).exp()).collect();
            let mut mean_x = [0.0; Attribute::COUNT];
            let mut mean_ac = 0.0;
            for (j, pj) in p.iter().enumerate() {
                for (m, x) in mean_x.iter_mut().zip(&occ.chars.attributes[j]) {
                    *m += pj * x;
                }
                mean_ac += pj * occ.chars.access_cost[j];
            }
            let mut packed = p;
            packed.extend_from_slice(&mean_x);
            let log_norm = max + lse;
            cached = Some((key, packed, mean_ac, log_norm));
        }
        let (_, packed, mean_ac, log_norm) = cached.as_ref().unwrap();
        let (p, mean_x) = packed.split_at(n);
        let c = occ.chosen;
        let v_c = params.asc[c]
            + occ.chars.attributes[c].iter().zip(&params.beta).map(|(x, b)| x * b).sum::<f64>()
            + occ.chars.access_cost[c] * params.gamma;
        ll += v_c - log_norm;
        for (g, pj) in g_asc.iter_mut().zip(p) {
            *g -= pj;
        }
        g_asc[c] += 1.0;
        for k in 0..Attribute::COUNT {
            g_beta[k] += occ.chars.attributes[c][k] - mean_x[k];
        }
        g_gamma += occ.chars.access_cost[c] - mean_ac;
    }
    ll -= penalty(params);
    let mut grad = Vec::with_capacity(params.n_free());
    for (j, g) in g_asc.iter().enumerate() {
        if j != params.reference_shell {
            grad.push(g - 2.0 * params.asc_penalty * params.asc[j]);
        }
    }
    grad.extend_from_slice(&g_beta);
    grad.push(g_gamma);
    Ok((ll, grad))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChoiceFitSettings {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub asc_penalty: f64,
    /// Constants beyond this magnitude with no penalty signal separation.
    pub asc_bound: f64,
}

impl Default for ChoiceFitSettings {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            grad_tol: 1e-6,
            asc_penalty: 1e-4,
            asc_bound: 15.0,
        }
    }
}

/// Fitted model plus fit statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceFit {
    pub group: OperatorGroup,
    pub params: ChoiceModelParams,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub iterations: usize,
}

/// Most frequently chosen shell, lowest index on ties.
pub fn most_chosen_shell(occasions: &[ChoiceOccasion], n_shells: usize) -> usize {
    let mut counts = vec![0usize; n_shells];
    for occ in occasions {
        if occ.chosen < n_shells {
            counts[occ.chosen] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == max).unwrap_or(0)
}

/// Maximum (penalised) likelihood fit by BFGS. Attribute columns are
/// rescaled internally; the gradient tolerance applies on the original
/// parameter scale.
pub fn fit_choice_model(occasions: &[ChoiceOccasion], settings: &ChoiceFitSettings) -> Result<ChoiceFit> {
    let first = occasions.first().ok_or_else(|| Error::invalid("no choice occasions"))?;
    let group = first.group;
    if occasions.iter().any(|o| o.group != group) {
        return Err(Error::invalid("choice occasions mix operator groups"));
    }
    if !(settings.asc_penalty >= 0.0) {
        return Err(Error::invalid("asc_penalty must be non-negative"));
    }
    let n_shells = first.chars.n_shells();
    for occ in occasions {
        occ.chars.validate()?;
    }
    let reference = most_chosen_shell(occasions, n_shells);
    let template = ChoiceModelParams {
        reference_shell: reference,
        asc_penalty: settings.asc_penalty,
        ..ChoiceModelParams::zeros(n_shells)
    };
    check_occasions(&template, occasions)?;

    // Scale of each non-constant coefficient: spread of its attribute.
    let scales = attribute_scales(occasions);
    let n_asc = n_shells - 1;
    let n_free = template.n_free();
    let unscale = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| if k < n_asc { *v } else { v / scales[k - n_asc] })
            .collect()
    };

    let mut objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let theta = unscale(x);
        let params = ChoiceModelParams::from_vector(&theta, n_shells, reference, settings.asc_penalty)?;
        let (ll, grad) = log_likelihood_with_gradient(&params, occasions)?;
        let g: Vec<f64> = grad
            .iter()
            .enumerate()
            .map(|(k, gv)| if k < n_asc { -gv } else { -gv / scales[k - n_asc] })
            .collect();
        Ok((-ll, g))
    };
    let max_scale = scales.iter().copied().fold(1.0_f64, f64::max);
    let bfgs = BfgsSettings {
        max_iter: settings.max_iter,
        grad_tol: settings.grad_tol / max_scale,
    };
    let x0 = vec![0.0; n_free];
    // Without a penalty, a shell that is never chosen has no finite
    // maximum-likelihood constant.
    let mut chosen = vec![false; n_shells];
    for occ in occasions {
        chosen[occ.chosen] = true;
    }
    let never_chosen = chosen.iter().any(|c| !c);
    let separated = |theta: &[f64]| -> Option<f64> {
        let max_asc = inf_norm(&theta[..n_asc]);
        (settings.asc_penalty == 0.0 && (never_chosen || max_asc > settings.asc_bound)).then_some(max_asc)
    };
    let min = match minimize(&mut objective, &x0, bfgs) {
        Ok(m) => m,
        Err(Error::NotConverged {
            iterations,
            grad_norm,
            best,
        }) => {
            let theta = unscale(&best);
            if let Some(max_asc) = separated(&theta) {
                return Err(Error::Separation { max_asc });
            }
            return Err(Error::NotConverged {
                iterations,
                grad_norm,
                best: theta,
            });
        }
        Err(e) => return Err(e),
    };
    let theta = unscale(&min.x);
    if let Some(max_asc) = separated(&theta) {
        return Err(Error::Separation { max_asc });
    }
    let params = ChoiceModelParams::from_vector(&theta, n_shells, reference, settings.asc_penalty)?;
    let (ll, grad) = log_likelihood_with_gradient(&params, occasions)?;
    if inf_norm(&grad) >= settings.grad_tol {
        return Err(Error::NotConverged {
            iterations: min.iterations,
            grad_norm: inf_norm(&grad),
            best: theta,
        });
    }
    Ok(ChoiceFit {
        group,
        params,
        log_likelihood: ll,
        n_obs: occasions.len(),
        iterations: min.iterations,
    })
}

/// Root mean square deviation of each attribute (and the access cost) from
/// its choice-set mean, pooled over occasions. Falls back to 1 for constant
/// columns.
fn attribute_scales(occasions: &[ChoiceOccasion]) -> Vec<f64> {
    let mut sums = vec![0.0; Attribute::COUNT + 1];
    let mut count = 0.0_f64;
    let mut last: Option<*const ShellCharacteristics> = None;
    for occ in occasions {
        let key = Arc::as_ptr(&occ.chars);
        if last == Some(key) {
            continue;
        }
        last = Some(key);
        let n = occ.chars.n_shells() as f64;
        for k in 0..=Attribute::COUNT {
            let col = |j: usize| {
                if k < Attribute::COUNT {
                    occ.chars.attributes[j][k]
                } else {
                    occ.chars.access_cost[j]
                }
            };
            let mean = (0..occ.chars.n_shells()).map(col).sum::<f64>() / n;
            sums[k] += (0..occ.chars.n_shells()).map(|j| (col(j) - mean).powi(2)).sum::<f64>() / n;
        }
        count += 1.0;
    }
    sums.into_iter()
        .map(|s| {
            let sd = (s / count.max(1.0)).sqrt();
            if sd > 1e-12 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_chars(n: usize) -> ShellCharacteristics {
        ShellCharacteristics {
            attributes: vec![[1.0, 2.0, 3.0, 4.0, 0.5]; n],
            access_cost: vec![1000.0; n],
        }
    }

    #[test]
    fn zero_params_give_zero_utility() {
        let v = utility(&ChoiceModelParams::zeros(4), &flat_chars(4)).unwrap();
        assert_eq!(v, vec![0.0; 4]);
    }

    #[test]
    fn asc_only_utility() {
        let mut p = ChoiceModelParams::zeros(3);
        p.asc = vec![0.0, 0.7, -1.2];
        assert_eq!(utility(&p, &flat_chars(3)).unwrap(), p.asc);
    }

    #[test]
    fn commercial_weights_match_dot_product() {
        let p = ChoiceModelParams {
            asc: vec![0.0, 0.3],
            beta: [-0.006, 0.015, -0.021, -0.001, -0.003],
            gamma: -0.017,
            reference_shell: 0,
            asc_penalty: 0.0,
        };
        let chars = ShellCharacteristics {
            attributes: vec![[10.0, 40.0, 5.0, 20.0, 2.0], [3.0, 100.0, 0.0, 7.0, 0.25]],
            access_cost: vec![1012.0, 1069.0],
        };
        let v = utility(&p, &chars).unwrap();
        let v0 = -0.006 * 10.0 + 0.015 * 40.0 - 0.021 * 5.0 - 0.001 * 20.0 - 0.003 * 2.0 - 0.017 * 1012.0;
        let v1 = 0.3 - 0.006 * 3.0 + 0.015 * 100.0 - 0.001 * 7.0 - 0.003 * 0.25 - 0.017 * 1069.0;
        assert!((v[0] - v0).abs() < 1e-12 && (v[1] - v1).abs() < 1e-12);
    }

    #[test]
    fn symmetric_shells_split_evenly() {
        let p = choice_probabilities(&ChoiceModelParams::zeros(2), &flat_chars(2)).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn analytic_softmax() {
        let mut params = ChoiceModelParams::zeros(2);
        params.asc[1] = 3.0_f64.ln();
        let p = choice_probabilities(&params, &flat_chars(2)).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn access_cost_odds_ratio() {
        let mut params = ChoiceModelParams::zeros(3);
        params.gamma = -0.017;
        params.asc = vec![0.0, 0.4, -0.2];
        let mut chars = flat_chars(3);
        let before = choice_probabilities(&params, &chars).unwrap();
        chars.access_cost[1] += 1.0;
        let after = choice_probabilities(&params, &chars).unwrap();
        let odds = |p: f64| p / (1.0 - p);
        // Odds of shell 1 against any other shell.
        let ratio = (after[1] / after[0]) / (before[1] / before[0]);
        assert!((ratio - 0.983_143_684_634_909_6).abs() < 1e-12);
        assert!(odds(after[1]) < odds(before[1]));
    }

    #[test]
    fn overflow_safe_and_rejects_huge_spread() {
        let p = softmax(&[1000.0, 1000.0 + 2.0_f64.ln()]).unwrap();
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(softmax(&[0.0, 800.0]).is_err());
        assert!(softmax(&[0.0, f64::NAN]).is_err());
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn access_cost_rules() {
        let g = ShellGrid::default();
        assert!(access_cost(0.0, 3, &g, None).is_err());
        assert!(access_cost(10.0, 24, &g, None).is_err());
        let mut prev = 0.0;
        for j in 0..24 {
            let ac = access_cost(31.754, j, &g, None).unwrap();
            assert!(ac > prev);
            prev = ac;
        }
        // Hand-computed circular-orbit energy at 525 km: 33.663971755 GJ/t.
        let ac = access_cost(31.754, 8, &g, None).unwrap();
        assert!((ac - 31.754 * 33.663_971_755_056_444).abs() < 1e-9);
        let table: Vec<f64> = (0..24).map(|j| 30.0 + j as f64).collect();
        assert_eq!(access_cost(2.0, 5, &g, Some(&table)).unwrap(), 70.0);
    }

    #[test]
    fn likelihood_of_indifferent_choice() {
        let chars = Arc::new(flat_chars(2));
        let occ = vec![ChoiceOccasion {
            group: OperatorGroup::Commercial,
            year: 2010,
            chosen: 1,
            chars,
        }];
        let ll = log_likelihood(&ChoiceModelParams::zeros(2), &occ).unwrap();
        assert!((ll - 0.5_f64.ln()).abs() < 1e-15);
        assert!(log_likelihood(&ChoiceModelParams::zeros(2), &[]).is_err());
    }

    #[test]
    fn likelihood_approaches_zero_when_choices_are_certain() {
        let chars = Arc::new(flat_chars(3));
        let occ = vec![ChoiceOccasion {
            group: OperatorGroup::Civil,
            year: 2010,
            chosen: 2,
            chars,
        }];
        let mut p = ChoiceModelParams::zeros(3);
        let mut prev = f64::NEG_INFINITY;
        for a in [1.0, 5.0, 20.0, 40.0] {
            p.asc[2] = a;
            let ll = log_likelihood(&p, &occ).unwrap();
            assert!(ll <= 0.0 && ll > prev);
            prev = ll;
        }
        assert!(prev > -1e-15);
    }

    #[test]
    fn price_index_of_three_shells() {
        let mut p = ChoiceModelParams::zeros(3);
        p.asc = vec![0.0, 1.0, 2.0];
        let idx = price_index(&p, &flat_chars(3)).unwrap();
        let z = 1.0 + 1.0_f64.exp() + 2.0_f64.exp();
        let oracle = (1.0_f64.exp() + 2.0 * 2.0_f64.exp()) / z;
        assert!((idx - oracle).abs() < 1e-15);
        assert!((idx - 1.575_210_382_604_441_5).abs() < 1e-14);
    }

    #[test]
    fn price_index_of_constant_utilities() {
        let mut p = ChoiceModelParams::zeros(4);
        p.gamma = -0.01;
        let idx = price_index(&p, &flat_chars(4)).unwrap();
        assert!((idx + 10.0).abs() < 1e-12);
    }

    #[test]
    fn vector_round_trip() {
        let p = ChoiceModelParams {
            asc: vec![0.5, 0.0, -1.0, 2.0],
            beta: [1.0, 2.0, 3.0, 4.0, 5.0],
            gamma: -0.5,
            reference_shell: 1,
            asc_penalty: 0.1,
        };
        let v = p.to_vector();
        assert_eq!(v.len(), p.n_free());
        assert_eq!(ChoiceModelParams::from_vector(&v, 4, 1, 0.1).unwrap(), p);
    }

    #[test]
    fn degenerate_data_with_penalty_stays_finite() {
        let chars = Arc::new(ShellCharacteristics {
            attributes: (0..4).map(|j| [j as f64, 1.0, 2.0, 0.0, 0.1 * j as f64]).collect(),
            access_cost: (0..4).map(|j| 1000.0 + 10.0 * j as f64).collect(),
        });
        let occ: Vec<_> = (0..50)
            .map(|_| ChoiceOccasion {
                group: OperatorGroup::Defense,
                year: 2015,
                chosen: 2,
                chars: chars.clone(),
            })
            .collect();
        let settings = ChoiceFitSettings {
            asc_penalty: 1e-2,
            ..Default::default()
        };
        let fit = fit_choice_model(&occ, &settings).unwrap();
        assert_eq!(fit.params.reference_shell, 2);
        assert!(fit.params.to_vector().iter().all(|v| v.is_finite()));
        let p = choice_probabilities(&fit.params, &chars).unwrap();
        assert!(p[2] > 0.9);
        assert!(fit.log_likelihood <= 0.0);
    }

    #[test]
    fn separation_without_penalty_is_reported() {
        let chars = Arc::new(flat_chars(3));
        let occ: Vec<_> = (0..20)
            .map(|i| ChoiceOccasion {
                group: OperatorGroup::Civil,
                year: 2015,
                chosen: if i % 2 == 0 { 0 } else { 1 },
                chars: chars.clone(),
            })
            .collect();
        let settings = ChoiceFitSettings {
            asc_penalty: 0.0,
            max_iter: 400,
            ..Default::default()
        };
        match fit_choice_model(&occ, &settings) {
            Err(Error::Separation { .. }) => {}
            other => panic!("expected separation error, got {other:?}"),
        }
    }
}

//! Secondary hit filtering on well-level readouts.
//!
//! A primary hit survives when at least `⌈p_s · a_j⌉` of its `a_j` wells lie
//! strictly beyond `μ ± r·σ` in the effect direction. `(μ, σ)` is either
//! supplied or estimated per compound from the wells that do not contain it
//! (median and `1.48 · MAD`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::screening::{EffectSign, HitList};

/// Consistency factor turning a MAD into a normal-scale SD estimate.
pub const MAD_SCALE: f64 = 1.48;

/// Wells needed outside the candidate's pools for robust estimation.
pub const MIN_REFERENCE_WELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SigmaMode {
    Known { mu: f64, sigma: f64 },
    Robust,
}

impl FromStr for SigmaMode {
    type Err = Error;

    /// `robust` or `known:MU,SIGMA`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("robust") {
            return Ok(SigmaMode::Robust);
        }
        let bad = || Error::InvalidConfig(format!("sigma mode {s:?}: expected robust or known:MU,SIGMA"));
        let rest = s.strip_prefix("known:").ok_or_else(bad)?;
        let (mu, sigma) = rest.split_once(',').ok_or_else(bad)?;
        let mu: f64 = mu.trim().parse().map_err(|_| bad())?;
        let sigma: f64 = sigma.trim().parse().map_err(|_| bad())?;
        Ok(SigmaMode::Known { mu, sigma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondaryCriterion {
    /// Required fraction of a compound's wells.
    pub p_s: f64,
    /// SD multiplier.
    pub r: f64,
    pub sigma_mode: SigmaMode,
    #[serde(default)]
    pub effect_sign: EffectSign,
}

impl SecondaryCriterion {
    pub fn new(p_s: f64, r: f64, sigma_mode: SigmaMode, effect_sign: EffectSign) -> Self {
        Self {
            p_s,
            r,
            sigma_mode,
            effect_sign,
        }
    }

    /// Parses the `P_S@R` or `P_S@Rsd` shorthand, e.g. `0.75@3sd`.
    pub fn parse_rule(rule: &str, sigma_mode: SigmaMode, effect_sign: EffectSign) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("secondary rule {rule:?}: expected P_S@R, e.g. 0.75@3sd"));
        let (p, r) = rule.trim().split_once('@').ok_or_else(bad)?;
        let r = r.trim().trim_end_matches("sd").trim_end_matches("SD");
        let c = Self::new(
            p.trim().parse().map_err(|_| bad())?,
            r.parse().map_err(|_| bad())?,
            sigma_mode,
            effect_sign,
        );
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_s > 0.0 && self.p_s <= 1.0) {
            return Err(Error::InvalidConfig(format!("p_s must lie in (0, 1], got {}", self.p_s)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidConfig(format!("r must be positive, got {}", self.r)));
        }
        if let SigmaMode::Known { mu, sigma } = self.sigma_mode {
            if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "known mode needs finite mu and positive sigma, got ({mu}, {sigma})"
                )));
            }
        }
        Ok(())
    }

    /// Wells required out of `a`.
    pub fn required(&self, a: usize) -> usize {
        required_count(self.p_s, a)
    }

    /// Label in the style "3 of 4 > 2 SD" for a compound in `a` wells.
    pub fn label(&self, a: usize) -> String {
        format!("{} of {a} > {} SD", self.required(a), self.r)
    }
}

impl fmt::Display for SecondaryCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}sd", self.p_s, self.r)
    }
}

/// `⌈p_s · a⌉`, with a small guard so that products such as `0.75 · 4` are not
/// pushed up by rounding.
pub fn required_count(p_s: f64, a: usize) -> usize {
    ((p_s * a as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Per-compound evidence for the secondary rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondaryStats {
    pub mu: f64,
    pub sigma: f64,
    /// Wells strictly beyond the cutoff.
    pub count: usize,
    pub wells: usize,
    pub required: usize,
}

/// Number of `values` strictly beyond `μ + rσ` (positive) or below `μ − rσ`.
pub fn count_beyond<F: Scalar>(values: impl IntoIterator<Item = F>, mu: F, sigma: F, r: F, sign: EffectSign) -> usize {
    values
        .into_iter()
        .filter(|&v| match sign {
            EffectSign::Positive => v > mu + r * sigma,
            EffectSign::Negative => v < mu - r * sigma,
        })
        .count()
}

fn median_sorted<F: Scalar>(v: &[F]) -> F {
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / F::of(2.0)
    }
}

/// Median and `1.48 · MAD`.
pub fn robust_location_scale<F: Scalar>(values: &[F]) -> Result<(F, F)> {
    if values.is_empty() {
        return Err(Error::InvalidInput("robust scale of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let med = median_sorted(&v);
    let mut dev: Vec<F> = v.iter().map(|&x| (x - med).abs()).collect();
    dev.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok((med, F::of(MAD_SCALE) * median_sorted(&dev)))
}

fn check_inputs<F: Scalar>(design: &Design, y: &[F], primary: &HitList) -> Result<Vec<usize>> {
    if y.len() != design.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} readings for a design with {} wells",
            y.len(),
            design.n()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("readings must be finite".into()));
    }
    primary
        .hits
        .iter()
        .map(|id| {
            design
                .compound_index(id)
                .ok_or_else(|| Error::InvalidInput(format!("primary hit {id} is not in the design")))
        })
        .collect()
}

fn assemble(primary: &HitList, crit: &SecondaryCriterion, results: Vec<(String, Option<SecondaryStats>)>) -> HitList {
    let mut out = primary.clone();
    out.hits.clear();
    out.per_compound.clear();
    out.method_tag = format!("{} + secondary {crit}", primary.method_tag);
    for (id, stats) in results {
        match stats {
            None => out
                .diagnostics
                .push(format!("{id}: reference wells have zero spread; skipped")),
            Some(s) if s.count >= s.required => {
                let mut diag = primary.per_compound.get(&id).cloned().unwrap_or_default();
                diag.secondary = Some(s);
                out.per_compound.insert(id.clone(), diag);
                out.hits.push(id);
            }
            Some(s) => out.diagnostics.push(format!(
                "{id}: {} of {} wells beyond cutoff, {} required",
                s.count, s.wells, s.required
            )),
        }
    }
    out
}

/// Keeps primary hits whose wells clear `μ ± rσ` often enough.
pub fn secondary_filter_known<F: Scalar>(
    design: &Design,
    y: &[F],
    primary: &HitList,
    mu: f64,
    sigma: f64,
    crit: &SecondaryCriterion,
) -> Result<HitList> {
    crit.validate()?;
    if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidConfig(format!("need finite mu and positive sigma, got ({mu}, {sigma})")));
    }
    let idx = check_inputs(design, y, primary)?;
    let results = primary
        .hits
        .iter()
        .zip(idx)
        .map(|(id, j)| {
            let wells = design.wells_of(j);
            let count = count_beyond(wells.iter().map(|&i| y[i]), F::of(mu), F::of(sigma), F::of(crit.r), crit.effect_sign);
            let stats = SecondaryStats {
                mu,
                sigma,
                count,
                wells: wells.len(),
                required: crit.required(wells.len()),
            };
            (id.clone(), Some(stats))
        })
        .collect();
    Ok(assemble(primary, crit, results))
}

/// Robust `(μ̂, σ̂)` for compound `j` from the wells that do not contain it.
pub fn reference_stats<F: Scalar>(design: &Design, y: &[F], j: usize) -> Result<(F, F)> {
    let without: Vec<F> = (0..design.n()).filter(|&i| design.get(i, j) == 0).map(|i| y[i]).collect();
    if without.len() < MIN_REFERENCE_WELLS {
        return Err(Error::InvalidInput(format!(
            "compound {} leaves {} reference wells; at least {MIN_REFERENCE_WELLS} are needed",
            design.compound_ids()[j],
            without.len()
        )));
    }
    robust_location_scale(&without)
}

/// Known-mode rule with `(μ̂, σ̂)` estimated per compound.
pub fn secondary_filter_robust<F: Scalar>(
    design: &Design,
    y: &[F],
    primary: &HitList,
    crit: &SecondaryCriterion,
) -> Result<HitList> {
    crit.validate()?;
    let idx = check_inputs(design, y, primary)?;
    let mut results = Vec::with_capacity(idx.len());
    for (id, j) in primary.hits.iter().zip(idx) {
        let (mu, sigma) = reference_stats(design, y, j)?;
        if sigma <= F::zero() {
            results.push((id.clone(), None));
            continue;
        }
        let wells = design.wells_of(j);
        let count = count_beyond(wells.iter().map(|&i| y[i]), mu, sigma, F::of(crit.r), crit.effect_sign);
        results.push((
            id.clone(),
            Some(SecondaryStats {
                mu: mu.as_f64(),
                sigma: sigma.as_f64(),
                count,
                wells: wells.len(),
                required: crit.required(wells.len()),
            }),
        ));
    }
    Ok(assemble(primary, crit, results))
}

/// Dispatches on the criterion's sigma mode.
pub fn secondary_filter<F: Scalar>(
    design: &Design,
    y: &[F],
    primary: &HitList,
    crit: &SecondaryCriterion,
) -> Result<HitList> {
    match crit.sigma_mode {
        SigmaMode::Known { mu, sigma } => secondary_filter_known(design, y, primary, mu, sigma, crit),
        SigmaMode::Robust => secondary_filter_robust(design, y, primary, crit),
    }
}

/// Index-level known-mode filter used by simulations.
pub fn passing_indices<F: Scalar>(
    design: &Design,
    y: &[F],
    candidates: &[usize],
    mu: F,
    sigma: F,
    crit: &SecondaryCriterion,
) -> Vec<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&j| {
            let wells = design.wells_of(j);
            count_beyond(wells.iter().map(|&i| y[i]), mu, sigma, F::of(crit.r), crit.effect_sign)
                >= crit.required(wells.len())
        })
        .collect()
}

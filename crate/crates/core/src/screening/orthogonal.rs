use super::{CompoundDiagnostics, EffectSign, HitList};
use crate::designs::Design;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear-interpolation sample quantile (Hyndman–Fan type 7).
pub fn quantile_type7<F: Scalar>(values: &[F], p: f64) -> Result<F> {
    if values.is_empty() {
        return Err(Error::InvalidInput("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("quantile level {p} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + F::of(h - lo as f64) * (v[hi] - v[lo]))
}

/// Two-replicate percentile rule: a compound is a hit when both of its wells
/// lie beyond the `percentile` quantile of all wells (strictly), in the effect
/// direction.
pub fn orthogonal_pooling_detect<F: Scalar>(
    design: &Design,
    y: &[F],
    percentile: f64,
    sign: EffectSign,
) -> Result<HitList> {
    if y.len() != design.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} readings for a design with {} wells",
            y.len(),
            design.n()
        )));
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::InvalidConfig(format!("percentile must lie in (0, 1), got {percentile}")));
    }
    let reps = design.replications();
    if let Some(j) = reps.iter().position(|&a| a != 2) {
        return Err(Error::InvalidInput(format!(
            "compound {} appears in {} wells; the percentile rule needs exactly 2",
            design.compound_ids()[j],
            reps[j]
        )));
    }
    let oriented: Vec<F> = y.iter().map(|&v| sign.orient(v)).collect();
    if oriented.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("readings must be finite".into()));
    }
    let cut = quantile_type7(&oriented, percentile)?;
    let mut hits = Vec::new();
    let mut entries = Vec::new();
    for j in 0..design.k() {
        let wells = design.wells_of(j);
        if wells.iter().all(|&i| oriented[i] > cut) {
            hits.push(j);
            let low = wells.iter().map(|&i| oriented[i]).fold(F::infinity(), |m, v| m.min(v));
            entries.push(CompoundDiagnostics {
                index: j,
                estimate: (low * F::of(sign.factor())).as_f64(),
                ..Default::default()
            });
        }
    }
    Ok(HitList::from_indices(
        design,
        format!("orthogonal_pooling(q={percentile})"),
        sign,
        entries,
        &hits,
    ))
}

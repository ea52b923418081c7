use serde::{Deserialize, Serialize};

use super::HitList;
use crate::error::{Error, Result};

/// Wild-type-only candidates and compounds flagged in both assays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualAssayHits {
    pub candidates: HitList,
    pub pseudo_hits: Vec<String>,
}

/// `wt \ mut` carrying the wild-type diagnostics; the intersection is reported
/// as pseudo-hits.
pub fn dual_assay_hits(wt: &HitList, mutant: &HitList) -> Result<DualAssayHits> {
    if wt.universe != mutant.universe || wt.universe_digest != mutant.universe_digest {
        return Err(Error::InvalidInput(
            "wild-type and mutant hit lists come from different compound sets".into(),
        ));
    }
    let mut candidates = wt.clone();
    candidates.hits.retain(|h| !mutant.contains(h));
    candidates
        .per_compound
        .retain(|id, _| !mutant.contains(id) || !wt.contains(id));
    let pseudo_hits = wt.hits.iter().filter(|h| mutant.contains(h)).cloned().collect();
    candidates.method_tag = format!("{} [wt minus mut]", wt.method_tag);
    Ok(DualAssayHits { candidates, pseudo_hits })
}

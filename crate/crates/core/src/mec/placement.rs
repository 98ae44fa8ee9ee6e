use rand::Rng;

use super::{PlacementPolicy, Resources};

/// Sum over dimensions of the free share left after placing `req`.
pub fn leftover_score(free: Resources, capacity: Resources, req: Resources) -> f64 {
    let (f, c, r) = (free.as_array(), capacity.as_array(), req.as_array());
    (0..3)
        .map(|d| if c[d] > 0.0 { (f[d] - r[d]) / c[d] } else { 0.0 })
        .sum()
}

/// Chooses a VM index among `(free, capacity)` pairs, or `None` when no VM
/// can hold `req` in every dimension.
pub fn place<R: Rng + ?Sized>(
    policy: PlacementPolicy,
    vms: &[(Resources, Resources)],
    req: Resources,
    rng: &mut R,
) -> Option<usize> {
    let feasible = vms.iter().enumerate().filter(|(_, (free, _))| req.fits_in(*free));
    match policy {
        PlacementPolicy::FirstFit => feasible.map(|(i, _)| i).next(),
        PlacementPolicy::BestFit => {
            let mut best: Option<(f64, usize)> = None;
            for (i, (free, cap)) in feasible {
                let s = leftover_score(*free, *cap, req);
                if best.is_none_or(|(b, _)| s < b) {
                    best = Some((s, i));
                }
            }
            best.map(|(_, i)| i)
        }
        PlacementPolicy::Random => {
            let ids: Vec<usize> = feasible.map(|(i, _)| i).collect();
            if ids.is_empty() {
                None
            } else {
                Some(ids[rng.random_range(0..ids.len())])
            }
        }
    }
}

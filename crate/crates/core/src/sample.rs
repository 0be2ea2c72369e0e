//! Deterministic sample plans over chart domains.
//!
//! Every plan is a pure function of the domain description and, for random
//! plans, an explicit seed, so repeated runs enumerate identical points in
//! identical order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One parameter's closed sampling interval with an exclusion margin that
/// keeps points away from both ends.  Open domain ends and coordinate
/// singularities are handled by choosing the margin, not by rejection.
#[derive(Debug, Clone)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64, margin: f64) -> Domain {
        assert!(lo.is_finite() && hi.is_finite() && lo < hi, "domain must be finite with lo < hi");
        assert!(margin >= 0.0 && 2.0 * margin < hi - lo, "margin must leave a nonempty interior");
        Domain { lo, hi, margin }
    }

    /// Margin at five percent of the span, enough to clear endpoint
    /// singularities in the bundled charts.
    pub fn with_default_margin(lo: f64, hi: f64) -> Domain {
        Domain::new(lo, hi, 0.05 * (hi - lo))
    }

    fn inner_lo(&self) -> f64 {
        self.lo + self.margin
    }

    fn inner_hi(&self) -> f64 {
        self.hi - self.margin
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Per-parameter sweeps: for each parameter in turn, `per_axis` evenly
/// spaced points across its interior while every other parameter sits at
/// its midpoint.
pub fn axis_grid(domains: &[Domain], per_axis: usize) -> Vec<Vec<f64>> {
    assert!(per_axis >= 2, "an axis sweep needs at least two points");
    let mid: Vec<f64> = domains.iter().map(Domain::midpoint).collect();
    let mut out = Vec::with_capacity(domains.len() * per_axis);
    for (axis, d) in domains.iter().enumerate() {
        let step = (d.inner_hi() - d.inner_lo()) / (per_axis - 1) as f64;
        for k in 0..per_axis {
            let mut p = mid.clone();
            p[axis] = d.inner_lo() + step * k as f64;
            out.push(p);
        }
    }
    out
}

/// `count` points drawn uniformly from the interior of each domain with a
/// counter-based generator, so the sequence is a pure function of the seed.
pub fn random_points(domains: &[Domain], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            domains
                .iter()
                .map(|d| rng.gen_range(d.inner_lo()..=d.inner_hi()))
                .collect()
        })
        .collect()
}

/// The default desk-scale plan: seeded random points plus per-axis sweeps.
pub fn default_plan(domains: &[Domain], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = random_points(domains, count, seed);
    out.extend(axis_grid(domains, 11));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domains() -> Vec<Domain> {
        vec![
            Domain::with_default_margin(-1.0, 1.0),
            Domain::with_default_margin(0.0, std::f64::consts::TAU),
        ]
    }

    #[test]
    fn random_points_are_reproducible_and_respect_margins() {
        let d = domains();
        let a = random_points(&d, 40, 7);
        let b = random_points(&d, 40, 7);
        assert_eq!(a, b);
        let c = random_points(&d, 40, 8);
        assert_ne!(a, c);
        for p in &a {
            for (x, dom) in p.iter().zip(&d) {
                assert!(*x >= dom.lo + dom.margin && *x <= dom.hi - dom.margin);
            }
        }
    }

    #[test]
    fn axis_grid_sweeps_one_parameter_at_a_time() {
        let d = domains();
        let grid = axis_grid(&d, 11);
        assert_eq!(grid.len(), 22);
        for p in &grid[..11] {
            assert_eq!(p[1], d[1].midpoint());
        }
        assert!((grid[0][0] - (d[0].lo + d[0].margin)).abs() < 1e-12);
        assert!((grid[10][0] - (d[0].hi - d[0].margin)).abs() < 1e-12);
    }

    #[test]
    fn default_plan_concatenates_random_then_grid() {
        let d = domains();
        let plan = default_plan(&d, 50, 3);
        assert_eq!(plan.len(), 50 + 22);
        assert_eq!(&plan[..50], &random_points(&d, 50, 3)[..]);
    }
}

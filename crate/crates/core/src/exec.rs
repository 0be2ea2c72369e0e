//! Execution strategy for mapping per-point checks over a sample plan.
//!
//! Both strategies produce results in plan order, so report assembly is
//! independent of how the work was scheduled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Exec {
    /// The preferred strategy for this build: data-parallel when the
    /// `parallel` feature is compiled in, sequential otherwise.
    pub fn preferred() -> Exec {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }

    pub fn map<T, F>(&self, points: &[Vec<f64>], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        match self {
            Exec::Sequential => points.iter().map(|p| f(p)).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => points.par_iter().map(|p| f(p)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_plan_order() {
        let points: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let seq = Exec::Sequential.map(&points, |p| p[0] * 2.0);
        assert_eq!(seq[3], 6.0);
        let pref = Exec::preferred().map(&points, |p| p[0] * 2.0);
        assert_eq!(seq, pref);
    }
}

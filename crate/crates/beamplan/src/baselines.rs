//! Comparison baselines: exhaustive per-location search, greedy forward
//! reference selection, and fixed-size regions.

use crate::error::{Error, Result};
use crate::planner::{Partition, PlannerConfig};
use crate::skeleton::{quantized_distance, QuantizedSkeleton};
use crate::stochastic::SkeletonProcess;

/// Which baseline produced a partition.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineKind {
    /// One region and one measurement per location.
    Exhaustive,
    /// Forward scan; a new reference opens where the realized skeleton is
    /// dissimilar from the current reference's (same `d <= gamma` test as
    /// the planner).
    Greedy { gamma: f64 },
    /// Pre-set region boundaries, reference at each region's first location.
    Fixed { boundaries: Vec<usize> },
}

/// Every location is its own region and reference.
pub fn exhaustive_plan(m: usize) -> Result<Partition> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "exhaustive_plan: M must be >= 1".into(),
        ));
    }
    Ok(Partition {
        boundaries: (0..=m).collect(),
        references: (1..=m).collect(),
        measured: (1..=m).collect(),
    })
}

/// Scan the realized skeleton sequence from the front: start with a
/// reference at location 1 and open a new region (with a new reference) at
/// the first location whose skeleton is dissimilar from the current
/// reference's.
pub fn greedy_plan(
    realized: &[QuantizedSkeleton],
    process: &SkeletonProcess,
    config: &PlannerConfig,
) -> Result<Partition> {
    if realized.is_empty() {
        return Err(Error::InvalidArgument(
            "greedy_plan: need at least one realized skeleton".into(),
        ));
    }
    let m = realized.len();
    let mut references = vec![1usize];
    let mut boundaries = vec![0usize];
    let mut current = 1usize;
    for x in 2..=m {
        let d = quantized_distance(
            &realized[x - 1],
            &realized[current - 1],
            process.bs_book(),
            process.ue_book(),
        )?;
        if d <= config.gamma {
            boundaries.push(x - 1);
            references.push(x);
            current = x;
        }
    }
    boundaries.push(m);
    let partition = Partition {
        boundaries,
        measured: references.clone(),
        references,
    };
    partition.validate(m)?;
    Ok(partition)
}

/// Fixed regions from pre-set boundaries (strictly increasing, last = M);
/// the reference is the first location of each region.
pub fn fixed_plan(m: usize, boundaries: &[usize]) -> Result<Partition> {
    if boundaries.is_empty() || *boundaries.last().unwrap() != m {
        return Err(Error::InvalidArgument(
            "fixed_plan: boundaries must end at M".into(),
        ));
    }
    if boundaries[0] == 0 || boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "fixed_plan: boundaries must be strictly increasing and start past 0".into(),
        ));
    }
    let mut full = vec![0usize];
    full.extend_from_slice(boundaries);
    let references: Vec<usize> = full[..full.len() - 1].iter().map(|&a| a + 1).collect();
    let partition = Partition {
        boundaries: full,
        measured: references.clone(),
        references,
    };
    partition.validate(m)?;
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arraysim::dft_codebook;
    use crate::skeleton::BeamPair;

    fn q(bs: u16, ue: u16) -> QuantizedSkeleton {
        QuantizedSkeleton::new(vec![Some(BeamPair { bs, ue })])
    }

    fn process_with_labels(labels: Vec<Vec<QuantizedSkeleton>>) -> SkeletonProcess {
        let bs = dft_codebook(64, 128).unwrap();
        let ue = dft_codebook(4, 64).unwrap();
        SkeletonProcess::from_parts_f64(labels, &[vec![1.0]], &[1.0], bs, ue, 1).unwrap()
    }

    #[test]
    fn exhaustive_is_m_singletons() {
        let p = exhaustive_plan(10).unwrap();
        assert_eq!(p.region_count(), 10);
        assert_eq!(p.boundaries, (0..=10).collect::<Vec<_>>());
        assert_eq!(p.references, (1..=10).collect::<Vec<_>>());
        p.validate(10).unwrap();

        let single = exhaustive_plan(1).unwrap();
        assert_eq!(single.region_count(), 1);
        assert!(exhaustive_plan(0).is_err());
    }

    #[test]
    fn greedy_constant_skeletons_one_region() {
        let labels: Vec<Vec<QuantizedSkeleton>> = (0..6).map(|_| vec![q(10, 3)]).collect();
        let process = process_with_labels(labels.clone());
        let realized: Vec<QuantizedSkeleton> = labels.into_iter().map(|mut v| v.remove(0)).collect();
        let config = PlannerConfig {
            l: 1,
            gamma: 0.2,
            ..Default::default()
        };
        let p = greedy_plan(&realized, &process, &config).unwrap();
        assert_eq!(p.region_count(), 1);
        assert_eq!(p.references, vec![1]);
    }

    #[test]
    fn greedy_two_clusters_split_at_boundary() {
        let beta = 4usize;
        let labels: Vec<Vec<QuantizedSkeleton>> = (0..8)
            .map(|x| vec![if x < beta { q(10, 3) } else { q(100, 50) }])
            .collect();
        let process = process_with_labels(labels.clone());
        let realized: Vec<QuantizedSkeleton> = labels.into_iter().map(|mut v| v.remove(0)).collect();
        let config = PlannerConfig {
            l: 1,
            gamma: 0.2,
            ..Default::default()
        };
        let p = greedy_plan(&realized, &process, &config).unwrap();
        assert_eq!(p.references, vec![1, beta + 1]);
        assert_eq!(p.boundaries, vec![0, beta, 8]);
    }

    #[test]
    fn fixed_plan_matches_stated_regions() {
        let p = fixed_plan(10, &[4, 6, 10]).unwrap();
        assert_eq!(p.boundaries, vec![0, 4, 6, 10]);
        assert_eq!(p.references, vec![1, 5, 7]);
        assert_eq!(p.region(0), 1..=4);
        assert_eq!(p.region(1), 5..=6);
        assert_eq!(p.region(2), 7..=10);
        p.validate(10).unwrap();
    }

    #[test]
    fn fixed_plan_extremes() {
        let whole = fixed_plan(7, &[7]).unwrap();
        assert_eq!(whole.region_count(), 1);
        assert_eq!(whole.references, vec![1]);

        let singletons = fixed_plan(5, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(singletons.boundaries, exhaustive_plan(5).unwrap().boundaries);

        assert!(fixed_plan(10, &[4, 4, 10]).is_err());
        assert!(fixed_plan(10, &[4, 6]).is_err());
    }
}

//! Path skeletons: the ordered (AoD, AoA) pairs of the strongest paths, the
//! beam-space similarity metric between two skeletons, and quantization onto
//! codebook grids.

use serde::{Deserialize, Serialize};

use crate::arraysim::{array_response, Codebook, PathComponent};
use crate::error::{Error, Result};

/// One (AoD, AoA) azimuth pair of a skeleton entry, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub aod_rad: f64,
    pub aoa_rad: f64,
}

/// Ordered list of exactly `L` entries; `None` marks a blocked slot when
/// fewer than `L` paths exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSkeleton {
    pairs: Vec<Option<AnglePair>>,
}

impl PathSkeleton {
    pub fn new(pairs: Vec<Option<AnglePair>>) -> Self {
        Self { pairs }
    }

    pub fn l(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[Option<AnglePair>] {
        &self.pairs
    }

    /// Number of non-blocked entries.
    pub fn active_paths(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_some()).count()
    }
}

/// A skeleton mapped onto codebook beam indices; `None` marks a blocked slot.
/// This is the finite-alphabet form the planner memoizes on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantizedSkeleton {
    pairs: Vec<Option<BeamPair>>,
}

/// Indices into the BS and UE codebooks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamPair {
    pub bs: u16,
    pub ue: u16,
}

impl QuantizedSkeleton {
    pub fn new(pairs: Vec<Option<BeamPair>>) -> Self {
        Self { pairs }
    }

    pub fn l(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[Option<BeamPair>] {
        &self.pairs
    }

    pub fn active_paths(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_some()).count()
    }

    /// Map beam indices back to the grid angles of the given codebooks.
    pub fn dequantize(&self, bs_book: &Codebook, ue_book: &Codebook) -> PathSkeleton {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                p.map(|bp| AnglePair {
                    aod_rad: bs_book.angle(bp.bs as usize),
                    aoa_rad: ue_book.angle(bp.ue as usize),
                })
            })
            .collect();
        PathSkeleton::new(pairs)
    }
}

/// Keep the `l` strongest paths by |gain|, descending; gain ties break by
/// ascending AoD. Missing slots are filled with `None`.
pub fn extract_skeleton(paths: &[PathComponent], l: usize) -> Result<PathSkeleton> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "extract_skeleton: L must be >= 1".into(),
        ));
    }
    let mut order: Vec<&PathComponent> = paths.iter().collect();
    order.sort_by(|a, b| {
        b.gain
            .norm_sqr()
            .partial_cmp(&a.gain.norm_sqr())
            .unwrap()
            .then(a.aod_rad.partial_cmp(&b.aod_rad).unwrap())
    });
    let mut pairs = Vec::with_capacity(l);
    for p in order.into_iter().take(l) {
        pairs.push(Some(AnglePair {
            aod_rad: p.aod_rad,
            aoa_rad: p.aoa_rad,
        }));
    }
    pairs.resize(l, None);
    Ok(PathSkeleton::new(pairs))
}

/// Beam-space similarity between two skeletons of the same length:
/// `sum_l |a_ue(aoa_b)^H a_ue(aoa_a)| * |a_bs(aod_b)^H a_bs(aod_a)|`,
/// pairing entries by rank. A blocked slot on either side contributes 0, so
/// the value lies in `[0, L]`; larger means more similar beams.
pub fn skeleton_distance(
    a: &PathSkeleton,
    b: &PathSkeleton,
    n_bs: usize,
    n_ue: usize,
) -> Result<f64> {
    if a.l() != b.l() {
        return Err(Error::InvalidArgument(format!(
            "skeleton_distance: mismatched lengths {} vs {}",
            a.l(),
            b.l()
        )));
    }
    let mut total = 0.0;
    for (pa, pb) in a.pairs().iter().zip(b.pairs()) {
        let (Some(pa), Some(pb)) = (pa, pb) else {
            continue;
        };
        let bs_a = array_response(pa.aod_rad, n_bs)?;
        let bs_b = array_response(pb.aod_rad, n_bs)?;
        let ue_a = array_response(pa.aoa_rad, n_ue)?;
        let ue_b = array_response(pb.aoa_rad, n_ue)?;
        total += ue_b.dot_h(&ue_a).norm() * bs_b.dot_h(&bs_a).norm();
    }
    Ok(total)
}

/// Similarity between two quantized skeletons via their grid angles.
pub fn quantized_distance(
    a: &QuantizedSkeleton,
    b: &QuantizedSkeleton,
    bs_book: &Codebook,
    ue_book: &Codebook,
) -> Result<f64> {
    skeleton_distance(
        &a.dequantize(bs_book, ue_book),
        &b.dequantize(bs_book, ue_book),
        bs_book.elements(),
        ue_book.elements(),
    )
}

/// Snap each entry to the nearest grid beam in `sin(phi)`; midpoint ties go
/// to the lower index. Blocked slots stay blocked.
pub fn quantize_skeleton(
    ps: &PathSkeleton,
    bs_book: &Codebook,
    ue_book: &Codebook,
) -> Result<QuantizedSkeleton> {
    if bs_book.size() == 0 || ue_book.size() == 0 {
        return Err(Error::InvalidArgument(
            "quantize_skeleton: codebooks must be non-empty".into(),
        ));
    }
    let pairs = ps
        .pairs()
        .iter()
        .map(|p| {
            p.map(|ap| BeamPair {
                bs: bs_book.nearest(ap.aod_rad) as u16,
                ue: ue_book.nearest(ap.aoa_rad) as u16,
            })
        })
        .collect();
    Ok(QuantizedSkeleton::new(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arraysim::dft_codebook;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn path(gain: f64, aod: f64, aoa: f64) -> PathComponent {
        PathComponent::new(Complex64::new(gain, 0.0), aod, aoa)
    }

    #[test]
    fn extract_orders_by_gain() {
        let paths = [
            path(0.2, 0.1, 0.0),
            path(0.9, -0.4, 0.3),
            path(0.5, 0.8, -0.2),
            path(0.7, 0.2, 0.5),
            path(0.1, -0.9, 0.9),
        ];
        let ps = extract_skeleton(&paths, 3).unwrap();
        let aods: Vec<f64> = ps.pairs().iter().map(|p| p.unwrap().aod_rad).collect();
        assert_eq!(aods, vec![-0.4, 0.2, 0.8]);
    }

    #[test]
    fn extract_pads_with_nulls() {
        let paths = [path(1.0, 0.3, -0.1)];
        let ps = extract_skeleton(&paths, 3).unwrap();
        assert!(ps.pairs()[0].is_some());
        assert!(ps.pairs()[1].is_none());
        assert!(ps.pairs()[2].is_none());
        assert_eq!(ps.active_paths(), 1);
    }

    #[test]
    fn extract_ties_break_by_ascending_aod() {
        let paths = [path(0.5, 0.7, 0.0), path(0.5, -0.3, 0.0)];
        let ps = extract_skeleton(&paths, 2).unwrap();
        assert_eq!(ps.pairs()[0].unwrap().aod_rad, -0.3);
        assert_eq!(ps.pairs()[1].unwrap().aod_rad, 0.7);
    }

    #[test]
    fn extract_rejects_l_zero() {
        assert!(extract_skeleton(&[path(1.0, 0.0, 0.0)], 0).is_err());
    }

    #[test]
    fn distance_of_identical_null_free_skeleton_is_l() {
        let ps = PathSkeleton::new(vec![
            Some(AnglePair {
                aod_rad: 0.3,
                aoa_rad: -0.2,
            }),
            Some(AnglePair {
                aod_rad: -0.6,
                aoa_rad: 0.1,
            }),
            Some(AnglePair {
                aod_rad: 0.9,
                aoa_rad: 0.8,
            }),
        ]);
        let d = skeleton_distance(&ps, &ps, 64, 4).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn distance_of_orthogonal_grid_skeletons_is_zero() {
        // Critically sampled grids: distinct beam indices are orthogonal.
        let bs = dft_codebook(8, 8).unwrap();
        let ue = dft_codebook(4, 4).unwrap();
        let a = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: bs.angle(2),
            aoa_rad: ue.angle(1),
        })]);
        let b = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: bs.angle(5),
            aoa_rad: ue.angle(3),
        })]);
        let d = skeleton_distance(&a, &b, 8, 4).unwrap();
        assert!(d.abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn distance_matches_direct_inner_product() {
        // Single-pair skeletons, 64-element BS, AoDs one grid step apart,
        // identical AoA. Oracle: direct complex summation.
        let aod_a = 0.0;
        let aod_b = (2.0 / 64.0f64).asin();
        let a = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: aod_a,
            aoa_rad: 0.2,
        })]);
        let b = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: aod_b,
            aoa_rad: 0.2,
        })]);
        let oracle = |delta_sin: f64, n: usize| -> f64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                acc += Complex64::from_polar(1.0 / n as f64, PI * m as f64 * delta_sin);
            }
            acc.norm()
        };
        let expect = oracle(aod_b.sin() - aod_a.sin(), 64);
        let d = skeleton_distance(&a, &b, 64, 4).unwrap();
        assert!((d - expect).abs() < 1e-12, "d = {d}, oracle = {expect}");
        // One full grid step on a critically sampled array is a null.
        assert!(d < 1e-9);

        // Half a grid step: the classic 2/pi mainlobe value.
        let aod_c = (1.0 / 64.0f64).asin();
        let c = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: aod_c,
            aoa_rad: 0.2,
        })]);
        let expect_half = oracle(aod_c.sin(), 64);
        let d_half = skeleton_distance(&a, &c, 64, 4).unwrap();
        assert!((d_half - expect_half).abs() < 1e-12);
        assert!((d_half - 2.0 / PI).abs() < 0.01);
    }

    #[test]
    fn distance_mismatched_lengths_rejected() {
        let a = PathSkeleton::new(vec![None, None]);
        let b = PathSkeleton::new(vec![None]);
        assert!(skeleton_distance(&a, &b, 4, 2).is_err());
    }

    #[test]
    fn quantize_exact_grid_point() {
        let bs = dft_codebook(8, 16).unwrap();
        let ue = dft_codebook(4, 8).unwrap();
        let ps = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: bs.angle(11),
            aoa_rad: ue.angle(2),
        })]);
        let qs = quantize_skeleton(&ps, &bs, &ue).unwrap();
        assert_eq!(qs.pairs()[0], Some(BeamPair { bs: 11, ue: 2 }));
    }

    #[test]
    fn quantize_midpoint_ties_to_lower_index() {
        let bs = dft_codebook(8, 16).unwrap();
        let ue = dft_codebook(4, 8).unwrap();
        let mid_bs = ((bs.sin_angle(5) + bs.sin_angle(6)) / 2.0).asin();
        let mid_ue = ((ue.sin_angle(2) + ue.sin_angle(3)) / 2.0).asin();
        let ps = PathSkeleton::new(vec![Some(AnglePair {
            aod_rad: mid_bs,
            aoa_rad: mid_ue,
        })]);
        let qs = quantize_skeleton(&ps, &bs, &ue).unwrap();
        assert_eq!(qs.pairs()[0], Some(BeamPair { bs: 5, ue: 2 }));
    }

    #[test]
    fn quantize_nulls_stay_null() {
        let bs = dft_codebook(8, 16).unwrap();
        let ue = dft_codebook(4, 8).unwrap();
        let ps = PathSkeleton::new(vec![
            None,
            Some(AnglePair {
                aod_rad: 0.1,
                aoa_rad: 0.1,
            }),
        ]);
        let qs = quantize_skeleton(&ps, &bs, &ue).unwrap();
        assert!(qs.pairs()[0].is_none());
        assert!(qs.pairs()[1].is_some());
    }

    #[test]
    fn quantize_matches_scan_over_grid() {
        // Dequantized angle must be within half a grid step in sin(phi), and
        // the chosen index must agree with a full scan.
        let bs = dft_codebook(16, 32).unwrap();
        let ue = dft_codebook(4, 16).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let aod = (2.0 * next() - 1.0).asin();
            let aoa = (2.0 * next() - 1.0).asin();
            let ps = PathSkeleton::new(vec![Some(AnglePair {
                aod_rad: aod,
                aoa_rad: aoa,
            })]);
            let qs = quantize_skeleton(&ps, &bs, &ue).unwrap();
            let bp = qs.pairs()[0].unwrap();
            let scan = |t: f64, grid: &Codebook| -> usize {
                let mut best = 0;
                for k in 1..grid.size() {
                    if (t - grid.sin_angle(k)).abs() < (t - grid.sin_angle(best)).abs() {
                        best = k;
                    }
                }
                best
            };
            assert_eq!(bp.bs as usize, scan(aod.sin(), &bs));
            assert_eq!(bp.ue as usize, scan(aoa.sin(), &ue));
            assert!((aod.sin() - bs.sin_angle(bp.bs as usize)).abs() <= 1.0 / 32.0 + 1e-12);
            assert!((aoa.sin() - ue.sin_angle(bp.ue as usize)).abs() <= 1.0 / 16.0 + 1e-12);
        }
    }

    #[test]
    fn quantize_idempotent_on_grid_aligned_skeletons() {
        let bs = dft_codebook(8, 16).unwrap();
        let ue = dft_codebook(4, 8).unwrap();
        let qs = QuantizedSkeleton::new(vec![
            Some(BeamPair { bs: 3, ue: 7 }),
            None,
            Some(BeamPair { bs: 15, ue: 0 }),
        ]);
        let round = quantize_skeleton(&qs.dequantize(&bs, &ue), &bs, &ue).unwrap();
        assert_eq!(round, qs);
    }
}

//! SNR along a trajectory under a given partition.

use crate::arraysim::{best_pair_exhaustive, snr_db, ChannelMatrix, Codebook};
use crate::error::{Error, Result};
use crate::planner::Partition;
use crate::skeleton::QuantizedSkeleton;

/// Per-location SNR in dB for a partition.
///
/// Pre-setup measures the full codebook sweep at each reference, which also
/// yields the reference's path skeleton. At run time a location reuses its
/// region's stored skeleton: the L x L beam pairs are searched against the
/// current channel and the strongest wins. At the reference location itself
/// the sweep optimum is already known and is used directly. Fully blocked
/// links surface as the `-inf` sentinel.
pub fn evaluate_snr(
    partition: &Partition,
    channels: &[ChannelMatrix],
    realized_skeletons: &[QuantizedSkeleton],
    f_book: &Codebook,
    w_book: &Codebook,
    p_dbm: f64,
    noise_dbm: f64,
) -> Result<Vec<f64>> {
    let m = channels.len();
    if realized_skeletons.len() != m {
        return Err(Error::InvalidArgument(format!(
            "evaluate_snr: {} skeletons for {m} channels",
            realized_skeletons.len()
        )));
    }
    partition.validate(m)?;
    let mut out = vec![f64::NEG_INFINITY; m];
    for k in 0..partition.region_count() {
        let reference = partition.references[k];
        let skeleton = &realized_skeletons[reference - 1];
        // Beam candidates stored for this region: the cross product of the
        // skeleton's BS and UE beams.
        let mut bs_beams: Vec<usize> = Vec::new();
        let mut ue_beams: Vec<usize> = Vec::new();
        for pair in skeleton.pairs().iter().flatten() {
            if !bs_beams.contains(&(pair.bs as usize)) {
                bs_beams.push(pair.bs as usize);
            }
            if !ue_beams.contains(&(pair.ue as usize)) {
                ue_beams.push(pair.ue as usize);
            }
        }
        for x in partition.region(k) {
            if x == reference {
                let best = best_pair_exhaustive(&channels[x - 1], f_book, w_book)?;
                out[x - 1] = if best.snr_db == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    best.snr_db + p_dbm - noise_dbm
                };
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for &fi in &bs_beams {
                for &wi in &ue_beams {
                    let snr = snr_db(
                        &channels[x - 1],
                        f_book.beam(fi),
                        w_book.beam(wi),
                        p_dbm,
                        noise_dbm,
                    )?;
                    if snr > best {
                        best = snr;
                    }
                }
            }
            out[x - 1] = best;
        }
    }
    Ok(out)
}

/// Convenience for comparisons: the per-location optimum over the codebooks.
pub fn per_location_best(
    channels: &[ChannelMatrix],
    f_book: &Codebook,
    w_book: &Codebook,
    p_dbm: f64,
    noise_dbm: f64,
) -> Result<Vec<f64>> {
    channels
        .iter()
        .map(|h| {
            let best = best_pair_exhaustive(h, f_book, w_book)?;
            if best.snr_db == f64::NEG_INFINITY {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(best.snr_db + p_dbm - noise_dbm)
            }
        })
        .collect()
}

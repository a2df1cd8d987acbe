//! Beam-search complexity accounting. Exact integer arithmetic.

use crate::error::{Error, Result};

/// Pre-setup cost: one full codebook sweep per measured reference point,
/// `K * |F| * |W|`.
pub fn count_presetup_searches(k: usize, f_size: usize, w_size: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "count_presetup_searches: K must be >= 1".into(),
        ));
    }
    (k as u64)
        .checked_mul(f_size as u64)
        .and_then(|v| v.checked_mul(w_size as u64))
        .ok_or_else(|| Error::InvalidArgument("pre-setup count overflows u64".into()))
}

/// Run-time cost: searching the stored skeleton's `L x L` beam pairs at each
/// reference, `K * L^2`.
pub fn count_runtime_searches(k: usize, l: usize) -> Result<u64> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidArgument(
            "count_runtime_searches: K and L must be >= 1".into(),
        ));
    }
    (k as u64)
        .checked_mul(l as u64)
        .and_then(|v| v.checked_mul(l as u64))
        .ok_or_else(|| Error::InvalidArgument("run-time count overflows u64".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presetup_counts() {
        assert_eq!(count_presetup_searches(10, 128, 128).unwrap(), 163_840);
        assert_eq!(count_presetup_searches(6, 128, 128).unwrap(), 98_304);
        assert_eq!(count_presetup_searches(1, 1, 1).unwrap(), 1);
        assert!(count_presetup_searches(0, 128, 128).is_err());
    }

    #[test]
    fn runtime_counts() {
        assert_eq!(count_runtime_searches(3, 3).unwrap(), 27);
        assert_eq!(count_runtime_searches(1, 1).unwrap(), 1);
        assert_eq!(count_runtime_searches(6, 3).unwrap(), 54);
        assert!(count_runtime_searches(0, 3).is_err());
    }
}

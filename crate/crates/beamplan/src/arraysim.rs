//! Antenna-array and channel algebra for uniform linear arrays.
//!
//! Half-wavelength element spacing is assumed throughout, so a beam is fully
//! parameterized by its azimuth steering angle. All arrays are ULAs and the
//! model is azimuth-only.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unit-norm array response vector of an `n`-element half-wavelength ULA.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    elements: Vec<Complex64>,
}

impl SteeringVector {
    /// Build a custom beam from raw weights; must be unit-norm within 1e-9.
    pub fn from_elements(elements: Vec<Complex64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument(
                "steering vector must have at least one element".into(),
            ));
        }
        let norm: f64 = elements.iter().map(|e| e.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "steering vector norm^2 = {norm}, expected 1"
            )));
        }
        Ok(Self { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Complex64] {
        &self.elements
    }

    /// Hermitian inner product `self^H other`.
    pub fn dot_h(&self, other: &SteeringVector) -> Complex64 {
        self.elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Array response `a(phi)` of an `n`-element ULA with lambda/2 spacing:
/// `(1/sqrt(n)) * [1, e^{j pi sin(phi)}, ..., e^{j (n-1) pi sin(phi)}]`.
pub fn array_response(angle_rad: f64, n: usize) -> Result<SteeringVector> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "array_response: element count must be >= 1".into(),
        ));
    }
    if !angle_rad.is_finite() {
        return Err(Error::InvalidArgument(
            "array_response: angle must be finite".into(),
        ));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let step = PI * angle_rad.sin();
    let elements = (0..n)
        .map(|m| Complex64::from_polar(scale, step * m as f64))
        .collect();
    Ok(SteeringVector { elements })
}

/// One propagation path: complex small-scale coefficient plus azimuth
/// departure/arrival angles in the ULA range `(-pi/2, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aod_rad: f64,
    pub aoa_rad: f64,
}

impl PathComponent {
    pub fn new(gain: Complex64, aod_rad: f64, aoa_rad: f64) -> Self {
        Self {
            gain,
            aod_rad,
            aoa_rad,
        }
    }
}

fn check_angle(angle: f64, what: &str) -> Result<()> {
    if !angle.is_finite() || angle <= -PI / 2.0 - 1e-12 || angle > PI / 2.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "{what} {angle} outside ULA range (-pi/2, pi/2]"
        )));
    }
    Ok(())
}

/// Dense `n_ue x n_bs` complex channel matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n_ue: usize,
    n_bs: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    /// Channel of a fully blocked link.
    pub fn zero(n_ue: usize, n_bs: usize) -> Self {
        Self {
            n_ue,
            n_bs,
            entries: vec![Complex64::new(0.0, 0.0); n_ue * n_bs],
        }
    }

    pub fn n_ue(&self) -> usize {
        self.n_ue
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n_bs + col]
    }

    /// `w^H H f` for combining vector `w` and beamforming vector `f`.
    pub fn beamformed(&self, f: &SteeringVector, w: &SteeringVector) -> Result<Complex64> {
        if f.len() != self.n_bs || w.len() != self.n_ue {
            return Err(Error::InvalidArgument(format!(
                "beamformed: dimensions (|w|={}, |f|={}) do not match {}x{} channel",
                w.len(),
                f.len(),
                self.n_ue,
                self.n_bs
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (row, wc) in w.elements().iter().enumerate() {
            let mut row_acc = Complex64::new(0.0, 0.0);
            for (col, fc) in f.elements().iter().enumerate() {
                row_acc += self.entry(row, col) * fc;
            }
            acc += wc.conj() * row_acc;
        }
        Ok(acc)
    }
}

/// Synthesize the channel `sqrt(n_bs*n_ue/L) * sum_l h_l a_ue(aoa_l) a_bs(aod_l)^H`.
pub fn make_channel(paths: &[PathComponent], n_bs: usize, n_ue: usize) -> Result<ChannelMatrix> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument(
            "make_channel: path list must be non-empty; use ChannelMatrix::zero for a blocked link"
                .into(),
        ));
    }
    if n_bs == 0 || n_ue == 0 {
        return Err(Error::InvalidArgument(
            "make_channel: antenna counts must be >= 1".into(),
        ));
    }
    for p in paths {
        check_angle(p.aod_rad, "make_channel: AoD")?;
        check_angle(p.aoa_rad, "make_channel: AoA")?;
    }
    let prefactor = ((n_bs * n_ue) as f64 / paths.len() as f64).sqrt();
    let mut entries = vec![Complex64::new(0.0, 0.0); n_ue * n_bs];
    for p in paths {
        let a_ue = array_response(p.aoa_rad, n_ue)?;
        let a_bs = array_response(p.aod_rad, n_bs)?;
        for (row, u) in a_ue.elements().iter().enumerate() {
            let coeff = prefactor * p.gain * u;
            for (col, b) in a_bs.elements().iter().enumerate() {
                entries[row * n_bs + col] += coeff * b.conj();
            }
        }
    }
    Ok(ChannelMatrix {
        n_ue,
        n_bs,
        entries,
    })
}

/// SNR in dB for transmit power `p_dbm` and noise power `noise_dbm`:
/// `10 log10(p |w^H H f|^2 / sigma^2)`. A zero beamformed gain yields the
/// `f64::NEG_INFINITY` sentinel, never an error.
pub fn snr_db(
    h: &ChannelMatrix,
    f: &SteeringVector,
    w: &SteeringVector,
    p_dbm: f64,
    noise_dbm: f64,
) -> Result<f64> {
    let y = h.beamformed(f, w)?;
    let gain2 = y.norm_sqr();
    if gain2 == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(p_dbm - noise_dbm + 10.0 * gain2.log10())
}

/// An ordered set of unit-norm beams on a grid uniform in `sin(phi)`.
#[derive(Debug, Clone)]
pub struct Codebook {
    n: usize,
    sin_grid: Vec<f64>,
    beams: Vec<SteeringVector>,
}

impl Codebook {
    pub fn size(&self) -> usize {
        self.beams.len()
    }

    /// Element count of the array this codebook steers.
    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn beam(&self, k: usize) -> &SteeringVector {
        &self.beams[k]
    }

    pub fn beams(&self) -> &[SteeringVector] {
        &self.beams
    }

    /// Steering angle of beam `k` in radians.
    pub fn angle(&self, k: usize) -> f64 {
        self.sin_grid[k].asin()
    }

    /// `sin` of the steering angle of beam `k`.
    pub fn sin_angle(&self, k: usize) -> f64 {
        self.sin_grid[k]
    }

    /// Index of the grid point nearest to `angle_rad` in `sin(phi)`.
    /// Exact midpoints resolve to the lower index.
    pub fn nearest(&self, angle_rad: f64) -> usize {
        let t = angle_rad.sin();
        let size = self.beams.len();
        // Grid point k sits at sin = (2k+1)/size - 1.
        let pos = (t + 1.0) * size as f64 / 2.0 - 0.5;
        let lo = pos.floor().clamp(0.0, (size - 1) as f64) as usize;
        let hi = (lo + 1).min(size - 1);
        let d_lo = (t - self.sin_grid[lo]).abs();
        let d_hi = (t - self.sin_grid[hi]).abs();
        if d_hi < d_lo {
            hi
        } else {
            lo
        }
    }
}

/// Build a DFT-style codebook of `size` beams for an `n`-element ULA.
/// Beam `k` steers to `phi_k = arcsin((2k+1)/size - 1)`; at `size == n` the
/// beams are pairwise orthogonal.
pub fn dft_codebook(n: usize, size: usize) -> Result<Codebook> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "dft_codebook: size must be >= 1".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "dft_codebook: element count must be >= 1".into(),
        ));
    }
    let mut sin_grid = Vec::with_capacity(size);
    let mut beams = Vec::with_capacity(size);
    for k in 0..size {
        let s = (2 * k + 1) as f64 / size as f64 - 1.0;
        sin_grid.push(s);
        beams.push(array_response(s.asin(), n)?);
    }
    Ok(Codebook { n, sin_grid, beams })
}

/// Result of an exhaustive sweep over a beamforming/combining codebook pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSearchResult {
    pub f_index: usize,
    pub w_index: usize,
    pub snr_db: f64,
    /// Number of beam pairs evaluated (`|F| * |W|`).
    pub evaluations: u64,
}

/// Sweep all `|F| x |W|` beam pairs and return the SNR maximizer. Ties break
/// to the lexicographically smallest `(f_index, w_index)`.
pub fn best_pair_exhaustive(
    h: &ChannelMatrix,
    f_book: &Codebook,
    w_book: &Codebook,
) -> Result<BeamSearchResult> {
    if f_book.size() == 0 || w_book.size() == 0 {
        return Err(Error::InvalidArgument(
            "best_pair_exhaustive: codebooks must be non-empty".into(),
        ));
    }
    if f_book.elements() != h.n_bs() || w_book.elements() != h.n_ue() {
        return Err(Error::InvalidArgument(format!(
            "best_pair_exhaustive: books steer {}x{} arrays, channel is {}x{}",
            w_book.elements(),
            f_book.elements(),
            h.n_ue(),
            h.n_bs()
        )));
    }
    let mut best = BeamSearchResult {
        f_index: 0,
        w_index: 0,
        snr_db: f64::NEG_INFINITY,
        evaluations: (f_book.size() * w_book.size()) as u64,
    };
    let mut have = false;
    // Factor the sweep: precompute H f once per transmit beam, then combine
    // with every w. Matches the summation order of `beamformed` exactly.
    let mut hf = vec![Complex64::new(0.0, 0.0); h.n_ue()];
    for (fi, f) in f_book.beams().iter().enumerate() {
        for (row, slot) in hf.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, fc) in f.elements().iter().enumerate() {
                acc += h.entry(row, col) * fc;
            }
            *slot = acc;
        }
        for (wi, w) in w_book.beams().iter().enumerate() {
            let mut y = Complex64::new(0.0, 0.0);
            for (wc, hfc) in w.elements().iter().zip(&hf) {
                y += wc.conj() * hfc;
            }
            let gain2 = y.norm_sqr();
            let snr = if gain2 == 0.0 {
                f64::NEG_INFINITY
            } else {
                10.0 * gain2.log10()
            };
            if !have || snr > best.snr_db {
                have = true;
                best.f_index = fi;
                best.w_index = wi;
                best.snr_db = snr;
            }
        }
    }
    Ok(best)
}

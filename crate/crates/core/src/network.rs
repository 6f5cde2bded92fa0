//! Network configuration and generic channel generation for the
//! three-cell uplink.
//!
//! Cell, base-station and user indices are 0-based in the Rust API and
//! 1-based in every serialized form (JSON keys, CSV columns), matching the
//! usual `[i, j]` user notation.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, hstack, ComplexMatrix};

/// Number of cells (and base stations).
pub const CELLS: usize = 3;

/// Antenna counts, users per cell and streams per user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Base-station antennas.
    #[serde(rename = "M")]
    pub m: usize,
    /// Mobile-station antennas.
    #[serde(rename = "N")]
    pub n: usize,
    /// Cell-edge users per cell.
    #[serde(rename = "K")]
    pub k: usize,
    /// Streams per user.
    pub d: usize,
}

impl NetworkConfig {
    pub fn new(m: usize, n: usize, k: usize, d: usize) -> Result<Self> {
        let cfg = NetworkConfig { m, n, k, d };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks `M > N >= 1`, `K > 1`, `d >= 1` and `M <= K N`.
    pub fn validate(&self) -> Result<()> {
        let NetworkConfig { m, n, k, d } = *self;
        if n < 1 {
            return Err(Error::Configuration("N must be at least 1".into()));
        }
        if m <= n {
            return Err(Error::Configuration(format!("requires M > N, got M={m}, N={n}")));
        }
        if k < 2 {
            return Err(Error::Configuration(format!("requires K > 1, got K={k}")));
        }
        if d < 1 {
            return Err(Error::Configuration("d must be at least 1".into()));
        }
        if m > k * n {
            return Err(Error::Configuration(format!(
                "requires M <= K*N, got M={m} > K*N={}",
                k * n
            )));
        }
        Ok(())
    }

    /// Users in the whole network, `3K`.
    pub fn users(&self) -> usize {
        CELLS * self.k
    }

    /// Total antennas of one cell's users, `K N`.
    pub fn cell_antennas(&self) -> usize {
        self.k * self.n
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(M={}, N={}, K={}, d={})", self.m, self.n, self.k, self.d)
    }
}

/// All `9K` uplink channel matrices `H_bs^[cell, user]`, each `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    config: NetworkConfig,
    seed: u64,
    h: Vec<ComplexMatrix>,
}

impl ChannelSet {
    /// Builds a channel set from explicit matrices laid out as `[bs][cell][user]`.
    pub fn from_matrices(config: NetworkConfig, seed: u64, h: Vec<ComplexMatrix>) -> Result<Self> {
        config.validate()?;
        let expected = CELLS * CELLS * config.k;
        if h.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} channel matrices, got {}",
                h.len()
            )));
        }
        if let Some(bad) = h.iter().find(|m| m.shape() != (config.m, config.n)) {
            return Err(Error::DimensionMismatch(format!(
                "channel matrix is {}x{}, expected {}x{}",
                bad.nrows(),
                bad.ncols(),
                config.m,
                config.n
            )));
        }
        if h.iter().flat_map(|m| m.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("channel matrix has a non-finite entry".into()));
        }
        Ok(ChannelSet { config, seed, h })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn slot(&self, bs: usize, cell: usize, user: usize) -> usize {
        (bs * CELLS + cell) * self.config.k + user
    }

    fn check_index(&self, bs: usize, cell: usize, user: usize) -> Result<()> {
        if bs >= CELLS || cell >= CELLS || user >= self.config.k {
            return Err(Error::Index(format!(
                "channel index (bs={bs}, cell={cell}, user={user}) outside 3x3x{}",
                self.config.k
            )));
        }
        Ok(())
    }

    /// Channel from user `user` of cell `cell` to base station `bs`.
    ///
    /// # Panics
    /// On an out-of-range index; use [`ChannelSet::get`] for a checked lookup.
    pub fn h(&self, bs: usize, cell: usize, user: usize) -> &ComplexMatrix {
        self.get(bs, cell, user).expect("channel index out of range")
    }

    pub fn get(&self, bs: usize, cell: usize, user: usize) -> Result<&ComplexMatrix> {
        self.check_index(bs, cell, user)?;
        Ok(&self.h[self.slot(bs, cell, user)])
    }

    pub fn get_mut(&mut self, bs: usize, cell: usize, user: usize) -> Result<&mut ComplexMatrix> {
        self.check_index(bs, cell, user)?;
        let slot = self.slot(bs, cell, user);
        Ok(&mut self.h[slot])
    }

    /// Serializes to the debug/golden JSON layout with 1-based `"i,k,j"` keys.
    pub fn to_json(&self) -> Result<String> {
        let mut h = BTreeMap::new();
        for bs in 0..CELLS {
            for cell in 0..CELLS {
                for user in 0..self.config.k {
                    let m = self.h(bs, cell, user);
                    let mut entries = Vec::with_capacity(m.len());
                    for r in 0..m.nrows() {
                        for c in 0..m.ncols() {
                            let z = m[(r, c)];
                            entries.push([z.re, z.im]);
                        }
                    }
                    h.insert(format!("{},{},{}", bs + 1, cell + 1, user + 1), entries);
                }
            }
        }
        let dump = ChannelDump {
            config: self.config,
            seed: self.seed,
            h,
        };
        serde_json::to_string(&dump).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: ChannelDump =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let cfg = dump.config;
        cfg.validate()?;
        let mut h = Vec::with_capacity(CELLS * CELLS * cfg.k);
        for bs in 0..CELLS {
            for cell in 0..CELLS {
                for user in 0..cfg.k {
                    let key = format!("{},{},{}", bs + 1, cell + 1, user + 1);
                    let entries = dump
                        .h
                        .get(&key)
                        .ok_or_else(|| Error::Serialization(format!("missing channel {key}")))?;
                    if entries.len() != cfg.m * cfg.n {
                        return Err(Error::Serialization(format!(
                            "channel {key} has {} entries, expected {}",
                            entries.len(),
                            cfg.m * cfg.n
                        )));
                    }
                    h.push(ComplexMatrix::from_row_iterator(
                        cfg.m,
                        cfg.n,
                        entries.iter().map(|[re, im]| c64::new(*re, *im)),
                    ));
                }
            }
        }
        ChannelSet::from_matrices(cfg, dump.seed, h)
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelDump {
    config: NetworkConfig,
    seed: u64,
    #[serde(rename = "H")]
    h: BTreeMap<String, Vec<[f64; 2]>>,
}

/// Draws every channel entry i.i.d. CN(0, 1) from a ChaCha8 stream seeded with `seed`.
///
/// Draw order: base station, then cell, then user, then row-major entries;
/// each entry consumes the real part then the imaginary part.
pub fn generate_channels(config: &NetworkConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = Vec::with_capacity(CELLS * CELLS * config.k);
    for _ in 0..CELLS * CELLS * config.k {
        let mut entries = Vec::with_capacity(config.m * config.n);
        for _ in 0..config.m * config.n {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            entries.push(c64::new(re * scale, im * scale));
        }
        h.push(ComplexMatrix::from_row_slice(config.m, config.n, &entries));
    }
    ChannelSet::from_matrices(*config, seed, h)
}

/// `G = [H_bs^[cell,1] ... H_bs^[cell,K]]`, an `M x KN` matrix.
pub fn combine_channels(ch: &ChannelSet, bs: usize, cell: usize) -> Result<ComplexMatrix> {
    if bs >= CELLS || cell >= CELLS {
        return Err(Error::Index(format!(
            "combine_channels(bs={bs}, cell={cell}) outside 0..3"
        )));
    }
    let blocks: Vec<&ComplexMatrix> = (0..ch.config.k).map(|u| ch.h(bs, cell, u)).collect();
    hstack(&blocks)
}

/// The `3M x 3KN` block matrix of all inter-cell channels.
///
/// Block row `i` holds `H_i^[k,1..K]` in block column `k` for `k != i` and
/// exact zeros in its own-cell block.
pub fn stacked_interference_matrix(ch: &ChannelSet) -> ComplexMatrix {
    let cfg = ch.config;
    let kn = cfg.cell_antennas();
    let mut out = ComplexMatrix::zeros(CELLS * cfg.m, CELLS * kn);
    for bs in 0..CELLS {
        for cell in (0..CELLS).filter(|&c| c != bs) {
            for user in 0..cfg.k {
                out.view_mut((bs * cfg.m, cell * kn + user * cfg.n), (cfg.m, cfg.n))
                    .copy_from(ch.h(bs, cell, user));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{numerical_rank, right_null_basis, Tolerance};

    fn motivating() -> NetworkConfig {
        NetworkConfig::new(16, 8, 2, 3).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(16, 8, 2, 3).is_ok());
        assert!(NetworkConfig::new(8, 8, 2, 1).is_err());
        assert!(NetworkConfig::new(16, 8, 1, 1).is_err());
        assert!(NetworkConfig::new(16, 8, 2, 0).is_err());
        assert!(NetworkConfig::new(17, 8, 2, 1).is_err());
        assert!(NetworkConfig::new(4, 0, 2, 1).is_err());
    }

    #[test]
    fn generate_shapes_and_determinism() {
        let ch = generate_channels(&motivating(), 1).unwrap();
        assert_eq!(ch.h.len(), 18);
        assert!(ch.h.iter().all(|m| m.shape() == (16, 8)));
        assert_eq!(ch, generate_channels(&motivating(), 1).unwrap());
        assert_ne!(ch, generate_channels(&motivating(), 2).unwrap());
    }

    #[test]
    fn generated_channels_are_full_rank() {
        let cfg = NetworkConfig::new(8, 4, 3, 1).unwrap();
        let ch = generate_channels(&cfg, 2).unwrap();
        assert_eq!(ch.h.len(), 27);
        let tol = Tolerance::default();
        for m in &ch.h {
            assert_eq!(m.shape(), (8, 4));
            assert_eq!(numerical_rank(m, &tol).unwrap(), 4);
        }
    }

    #[test]
    fn entries_have_unit_variance() {
        let cfg = NetworkConfig::new(16, 8, 4, 1).unwrap();
        let ch = generate_channels(&cfg, 5).unwrap();
        let count = ch.h.len() * 128;
        let power: f64 = ch.h.iter().map(|m| m.norm_squared()).sum::<f64>() / count as f64;
        let mean: c64 = ch.h.iter().flat_map(|m| m.iter()).sum::<c64>() / count as f64;
        assert!((power - 1.0).abs() < 0.05, "power {power}");
        assert!(mean.norm() < 0.05);
    }

    #[test]
    fn combine_layout() {
        let ch = generate_channels(&motivating(), 1).unwrap();
        let g = combine_channels(&ch, 0, 1).unwrap();
        assert_eq!(g.shape(), (16, 16));
        assert_eq!(g.columns(0, 8), ch.h(0, 1, 0).columns(0, 8));
        assert_eq!(g.columns(8, 8), ch.h(0, 1, 1).columns(0, 8));
        assert_eq!(numerical_rank(&g, &Tolerance::default()).unwrap(), 16);

        let cfg = NetworkConfig::new(8, 4, 3, 1).unwrap();
        let ch = generate_channels(&cfg, 2).unwrap();
        assert_eq!(combine_channels(&ch, 2, 0).unwrap().shape(), (8, 12));
        assert!(matches!(combine_channels(&ch, 3, 0), Err(Error::Index(_))));
        assert!(matches!(ch.get(0, 0, 3), Err(Error::Index(_))));
    }

    #[test]
    fn stacked_matrix_pattern_rank_and_null_space() {
        let cfg = NetworkConfig::new(8, 4, 3, 1).unwrap();
        let ch = generate_channels(&cfg, 2).unwrap();
        let hbar = stacked_interference_matrix(&ch);
        assert_eq!(hbar.shape(), (24, 36));
        for b in 0..3 {
            assert!(hbar.view((b * 8, b * 12), (8, 12)).iter().all(|z| *z == c64::new(0.0, 0.0)));
        }
        assert_eq!(hbar.view((0, 12), (8, 4)), ch.h(0, 1, 0).view((0, 0), (8, 4)));
        assert_eq!(hbar.view((8, 32), (8, 4)), ch.h(1, 2, 2).view((0, 0), (8, 4)));
        let tol = Tolerance::default();
        assert_eq!(numerical_rank(&hbar, &tol).unwrap(), 24);
        assert_eq!(right_null_basis(&hbar, &tol).unwrap().ncols(), 12);
    }

    #[test]
    fn json_round_trip() {
        let cfg = NetworkConfig::new(6, 4, 2, 1).unwrap();
        let ch = generate_channels(&cfg, 9).unwrap();
        let text = ch.to_json().unwrap();
        assert!(text.contains("\"1,2,2\""));
        assert!(text.contains("\"M\":6"));
        assert_eq!(ChannelSet::from_json(&text).unwrap(), ch);
        assert!(ChannelSet::from_json("{}").is_err());
    }
}

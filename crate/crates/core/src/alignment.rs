//! Transmit-side inter-cell interference alignment.
//!
//! Each cell's `K` users are treated as one virtual `KN`-antenna transmitter
//! while the precoders are designed, and the resulting combined precoder is
//! then split back into per-user blocks. Every stream `k` produces, at each
//! base station, `2K` interfering image vectors that are linearly dependent
//! (they satisfy one nontrivial relation), so the interference occupies
//! `(2K - 1) d` dimensions instead of `2K d`.
//!
//! Two constructions are provided:
//!
//! * [`Method::Eigen`] for `M = KN`: the combined precoders of cells 2 and 3
//!   follow from cell 1 through `F` and `C`, and cell 1 uses eigenvectors of
//!   the chained product `E`.
//! * [`Method::NullSpace`] for `M < KN`: all `3K` precoders are stacked and
//!   taken from the right null space of the block interference matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{combine_channels, stacked_interference_matrix, ChannelSet, NetworkConfig, CELLS};
use crate::numerics::{
    general_eig, hstack, numerical_rank, right_null_basis, span_dimension, ComplexMatrix, Tolerance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Eigen,
    NullSpace,
}

/// Outcome of the achievability test for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// `None` when infeasible.
    pub method: Option<Method>,
    /// Largest stream count per user the construction supports.
    pub d_max: usize,
    /// Total DoF `3 K d` when feasible, else 0.
    pub eta: usize,
}

impl FeasibilityVerdict {
    /// The method to use, or a configuration error naming the violated bound.
    pub fn require(&self, config: &NetworkConfig) -> Result<Method> {
        match self.method {
            Some(m) if self.feasible => Ok(m),
            _ => Err(Error::Configuration(bound_violation(config, self.d_max))),
        }
    }
}

fn bound_violation(cfg: &NetworkConfig, d_max: usize) -> String {
    let per_dim = cfg.m / (3 * cfg.k - 1);
    if cfg.m == cfg.cell_antennas() || d_max == per_dim {
        format!("d={} exceeds floor(M/(3K-1))={}", cfg.d, per_dim)
    } else {
        format!("d={} exceeds 3(KN-M)={}", cfg.d, d_max)
    }
}

/// Achievability of `3 K d` DoF for `config`.
///
/// `d_max = floor(M/(3K-1))` when `M = KN` and
/// `min(floor(M/(3K-1)), 3(KN-M))` when `M < KN`.
pub fn check_feasibility(config: &NetworkConfig) -> Result<FeasibilityVerdict> {
    config.validate()?;
    let kn = config.cell_antennas();
    let per_dim = config.m / (3 * config.k - 1);
    let (d_max, method) = if config.m == kn {
        (per_dim, Method::Eigen)
    } else {
        (per_dim.min(3 * (kn - config.m)), Method::NullSpace)
    };
    let feasible = config.d <= d_max;
    Ok(FeasibilityVerdict {
        feasible,
        method: feasible.then_some(method),
        d_max,
        eta: if feasible { CELLS * config.k * config.d } else { 0 },
    })
}

/// Transmit precoders for all `3K` users.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub config: NetworkConfig,
    /// `N x d` per-user precoders with unit-norm columns, laid out `[cell][user]`.
    pub per_user: Vec<ComplexMatrix>,
    /// `KN x d` combined precoder of each cell, before normalization.
    pub combined: Vec<ComplexMatrix>,
    /// `None` for externally supplied precoders.
    pub method: Option<Method>,
}

impl PrecoderSolution {
    /// Wraps arbitrary per-user precoders (e.g. an unaligned baseline).
    pub fn from_per_user(config: NetworkConfig, per_user: Vec<ComplexMatrix>) -> Result<Self> {
        config.validate()?;
        if per_user.len() != config.users() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} precoders, got {}",
                config.users(),
                per_user.len()
            )));
        }
        if per_user.iter().any(|w| w.shape() != (config.n, config.d)) {
            return Err(Error::DimensionMismatch(format!(
                "every precoder must be {}x{}",
                config.n, config.d
            )));
        }
        let combined = (0..CELLS)
            .map(|c| {
                let blocks: Vec<&ComplexMatrix> = per_user[c * config.k..(c + 1) * config.k].iter().collect();
                crate::numerics::vstack(&blocks)
            })
            .collect::<Result<_>>()?;
        Ok(PrecoderSolution {
            config,
            per_user,
            combined,
            method: None,
        })
    }

    /// Precoder of user `user` in cell `cell` (0-based).
    pub fn w(&self, cell: usize, user: usize) -> &ComplexMatrix {
        &self.per_user[cell * self.config.k + user]
    }

    /// Per-user blocks of the combined precoders without column normalization.
    pub fn unnormalized_blocks(&self) -> Vec<ComplexMatrix> {
        split_combined(&self.config, &self.combined)
    }
}

fn split_combined(cfg: &NetworkConfig, combined: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    combined
        .iter()
        .flat_map(|w| (0..cfg.k).map(move |u| w.rows(u * cfg.n, cfg.n).into_owned()))
        .collect()
}

fn normalize_columns(blocks: &mut [ComplexMatrix]) -> Result<()> {
    for (idx, w) in blocks.iter_mut().enumerate() {
        for mut col in w.column_iter_mut() {
            let norm = col.norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::degenerate(
                    "precoder normalization",
                    format!("user slot {idx} received a zero precoding column"),
                ));
            }
            col.unscale_mut(norm);
        }
    }
    Ok(())
}

fn finish(cfg: NetworkConfig, combined: Vec<ComplexMatrix>, method: Method) -> Result<PrecoderSolution> {
    let mut per_user = split_combined(&cfg, &combined);
    normalize_columns(&mut per_user)?;
    Ok(PrecoderSolution {
        config: cfg,
        per_user,
        combined,
        method: Some(method),
    })
}

fn config_with_streams(ch: &ChannelSet, d: usize) -> Result<NetworkConfig> {
    let cfg = NetworkConfig { d, ..*ch.config() };
    cfg.validate()?;
    Ok(cfg)
}

/// Chained products of the combined channels used by the eigen construction.
#[derive(Debug, Clone)]
pub struct ChainedMatrices {
    /// `(G31)^-1 G32 (G12)^-1 G13 (G23)^-1 G21`
    pub e: ComplexMatrix,
    /// `(G32)^-1 G31`
    pub f: ComplexMatrix,
    /// `(G23)^-1 G21`
    pub c: ComplexMatrix,
}

/// Computes `E`, `F` and `C`; requires `M = KN`. Inverses are applied as LU solves.
pub fn chained_matrices(ch: &ChannelSet) -> Result<ChainedMatrices> {
    let cfg = ch.config();
    if cfg.m != cfg.cell_antennas() {
        return Err(Error::Configuration(format!(
            "chained matrices need M = KN, got M={} and KN={}",
            cfg.m,
            cfg.cell_antennas()
        )));
    }
    let tol = Tolerance::default();
    // G^[ij] with 1-based (bs, cell) labels.
    let g = |bs: usize, cell: usize| -> Result<ComplexMatrix> {
        let m = combine_channels(ch, bs - 1, cell - 1)?;
        if numerical_rank(&m, &tol)? < cfg.m {
            return Err(Error::degenerate(
                "chained matrices",
                format!("combined channel G[{bs}{cell}] is singular"),
            ));
        }
        Ok(m)
    };
    let solve = |a: ComplexMatrix, b: &ComplexMatrix, label: &str| -> Result<ComplexMatrix> {
        a.lu().solve(b).ok_or_else(|| {
            Error::degenerate("chained matrices", format!("LU solve with {label} failed"))
        })
    };

    let (g12, g13, g21, g23, g31, g32) = (g(1, 2)?, g(1, 3)?, g(2, 1)?, g(2, 3)?, g(3, 1)?, g(3, 2)?);
    let c = solve(g23, &g21, "G23")?;
    let f = solve(g32.clone(), &g31, "G32")?;
    let x = solve(g12, &(&g13 * &c), "G12")?;
    let e = solve(g31, &(&g32 * x), "G31")?;
    Ok(ChainedMatrices { e, f, c })
}

/// Eigen construction (`M = KN`): cell 1 takes the first `d` eigenvectors of `E`,
/// cells 2 and 3 take `F` and `C` applied to them.
pub fn design_precoders_eigen(ch: &ChannelSet, d: usize) -> Result<PrecoderSolution> {
    let cfg = config_with_streams(ch, d)?;
    let method = check_feasibility(&cfg)?.require(&cfg)?;
    if method != Method::Eigen {
        return Err(Error::Configuration(format!(
            "eigen construction needs M = KN, got {cfg}"
        )));
    }
    let chained = chained_matrices(ch)?;
    let eig = general_eig(&chained.e).map_err(|e| match e {
        Error::NumericalFailure(msg) => Error::NumericalFailure(format!("eigendecomposition of E: {msg}")),
        other => other,
    })?;
    let w1 = eig.vectors.columns(0, d).into_owned();
    let w2 = &chained.f * &w1;
    let w3 = &chained.c * &w1;
    finish(cfg, vec![w1, w2, w3], Method::Eigen)
}

/// Null-space construction (`M < KN`): the stacked precoder of all users is the
/// first `d` columns of the right null basis of the block interference matrix.
pub fn design_precoders_nullspace(ch: &ChannelSet, d: usize) -> Result<PrecoderSolution> {
    let cfg = config_with_streams(ch, d)?;
    let method = check_feasibility(&cfg)?.require(&cfg)?;
    if method != Method::NullSpace {
        return Err(Error::Configuration(format!(
            "null-space construction needs M < KN, got {cfg}"
        )));
    }
    let hbar = stacked_interference_matrix(ch);
    let null = right_null_basis(&hbar, &Tolerance::default())?;
    if null.ncols() < d {
        return Err(Error::degenerate(
            "null-space precoders",
            format!("null space has {} dimensions, need {d}", null.ncols()),
        ));
    }
    let stacked = null.columns(0, d);
    let kn = cfg.cell_antennas();
    let combined = (0..CELLS).map(|c| stacked.rows(c * kn, kn).into_owned()).collect();
    finish(cfg, combined, Method::NullSpace)
}

/// Dispatches on the feasibility verdict of the channel set's own configuration.
pub fn design_precoders(ch: &ChannelSet) -> Result<PrecoderSolution> {
    let cfg = ch.config();
    match check_feasibility(cfg)?.require(cfg)? {
        Method::Eigen => design_precoders_eigen(ch, cfg.d),
        Method::NullSpace => design_precoders_nullspace(ch, cfg.d),
    }
}

/// Images `H_bs^[k,j] W^[k,j]` of all out-of-cell users at base station `bs`.
pub fn interference_images(ch: &ChannelSet, per_user: &[ComplexMatrix], bs: usize) -> Vec<ComplexMatrix> {
    let k = ch.config().k;
    (0..CELLS)
        .filter(|&cell| cell != bs)
        .flat_map(|cell| (0..k).map(move |u| (cell, u)))
        .map(|(cell, u)| ch.h(bs, cell, u) * &per_user[cell * k + u])
        .collect()
}

/// The `M x 2Kd` inter-cell interference matrix seen at base station `bs`.
pub fn interference_matrix(ch: &ChannelSet, per_user: &[ComplexMatrix], bs: usize) -> Result<ComplexMatrix> {
    if bs >= CELLS {
        return Err(Error::Index(format!("base station {bs} outside 0..3")));
    }
    let images = interference_images(ch, per_user, bs);
    let refs: Vec<&ComplexMatrix> = images.iter().collect();
    hstack(&refs)
}

/// Dimension of the inter-cell interference subspace at base station `bs`.
pub fn interference_dimension(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
    bs: usize,
    tol: &Tolerance,
) -> Result<usize> {
    interference_dimension_of(ch, &sol.per_user, bs, tol)
}

/// As [`interference_dimension`] but for an arbitrary set of per-user precoders.
pub fn interference_dimension_of(
    ch: &ChannelSet,
    per_user: &[ComplexMatrix],
    bs: usize,
    tol: &Tolerance,
) -> Result<usize> {
    let m = interference_matrix(ch, per_user, bs)?;
    span_dimension(&[&m], tol)
}

/// Dimension spanned by the `2K` interference images of stream `stream` at `bs`.
pub fn stream_interference_dimension(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
    bs: usize,
    stream: usize,
    tol: &Tolerance,
) -> Result<usize> {
    if stream >= sol.config.d {
        return Err(Error::Index(format!("stream {stream} outside 0..{}", sol.config.d)));
    }
    let columns: Vec<ComplexMatrix> = sol.per_user.iter().map(|w| w.columns(stream, 1).into_owned()).collect();
    interference_dimension_of(ch, &columns, bs, tol)
}

/// `(G_bs_a W_a, G_bs_b W_b)` pairs whose spans must agree under the eigen construction,
/// one pair per base station: `G12 W2 ~ G13 W3`, `G21 W1 ~ G23 W3`, `G31 W1 ~ G32 W2`.
pub fn span_condition_pairs(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
) -> Result<Vec<(ComplexMatrix, ComplexMatrix)>> {
    let img = |bs: usize, cell: usize| -> Result<ComplexMatrix> {
        Ok(combine_channels(ch, bs, cell)? * &sol.combined[cell])
    };
    (0..CELLS)
        .map(|bs| {
            let others: Vec<usize> = (0..CELLS).filter(|&c| c != bs).collect();
            Ok((img(bs, others[0])?, img(bs, others[1])?))
        })
        .collect()
}

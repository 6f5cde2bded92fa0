//! Cascaded receive beamforming at each base station.
//!
//! `V` projects onto `Kd` directions orthogonal to the aligned inter-cell
//! interference; `P_j` then zero-forces the other same-cell users inside the
//! `Kd`-dimensional ICI-free space, leaving a `d x d` channel per user.

use crate::alignment::{interference_matrix, PrecoderSolution};
use crate::error::{Error, Result};
use crate::network::{ChannelSet, CELLS};
use crate::numerics::{hstack, left_null_basis, numerical_rank, relative_norm, ComplexMatrix, Tolerance};

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSolution {
    /// `M x Kd` ICI eliminator per base station, orthonormal columns.
    pub v: Vec<ComplexMatrix>,
    /// `Kd x d` IUI eliminator per `[bs][user]`, orthonormal columns.
    pub p: Vec<ComplexMatrix>,
    /// `d x d` post-cascade desired channel per `[bs][user]`.
    pub h_eff: Vec<ComplexMatrix>,
    k: usize,
}

impl ReceiverSolution {
    pub fn v(&self, bs: usize) -> &ComplexMatrix {
        &self.v[bs]
    }

    pub fn p(&self, bs: usize, user: usize) -> &ComplexMatrix {
        &self.p[bs * self.k + user]
    }

    pub fn h_eff(&self, bs: usize, user: usize) -> &ComplexMatrix {
        &self.h_eff[bs * self.k + user]
    }
}

/// First `Kd` columns of the left null basis of the interference at `bs`.
pub fn design_ici_eliminator(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
    bs: usize,
    tol: &Tolerance,
) -> Result<ComplexMatrix> {
    let cfg = &sol.config;
    let needed = cfg.k * cfg.d;
    let ici = interference_matrix(ch, &sol.per_user, bs)?;
    let free = left_null_basis(&ici, tol)?;
    if free.ncols() < needed {
        return Err(Error::Feasibility(format!(
            "base station {} has {} interference-free dimensions, needs K*d={needed}",
            bs + 1,
            free.ncols()
        )));
    }
    Ok(free.columns(0, needed).into_owned())
}

/// `V^H H_bs^[bs,j] W^[bs,j]` for every user `j` of cell `bs`.
pub fn ici_free_channels(ch: &ChannelSet, sol: &PrecoderSolution, v: &ComplexMatrix, bs: usize) -> Vec<ComplexMatrix> {
    (0..sol.config.k)
        .map(|u| v.adjoint() * ch.h(bs, bs, u) * sol.w(bs, u))
        .collect()
}

fn other_users(channels: &[ComplexMatrix], target: usize) -> Result<ComplexMatrix> {
    let others: Vec<&ComplexMatrix> = channels
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target)
        .map(|(_, m)| m)
        .collect();
    hstack(&others)
}

/// Zero-forcing combiner for `target_user` against the other same-cell users.
///
/// `channels` holds the `Kd x d` ICI-free channel of every user of the cell.
pub fn design_iui_eliminator(channels: &[ComplexMatrix], target_user: usize, tol: &Tolerance) -> Result<ComplexMatrix> {
    if target_user >= channels.len() {
        return Err(Error::Index(format!(
            "target user {target_user} outside 0..{}",
            channels.len()
        )));
    }
    let d = channels[target_user].ncols();
    let stack = other_users(channels, target_user)?;
    let rank = numerical_rank(&stack, tol)?;
    if rank != stack.ncols() {
        return Err(Error::degenerate(
            "IUI elimination",
            format!("other-user channels have rank {rank}, expected {}", stack.ncols()),
        ));
    }
    let free = left_null_basis(&stack, tol)?;
    if free.ncols() < d {
        return Err(Error::degenerate(
            "IUI elimination",
            format!("only {} IUI-free dimensions for {d} streams", free.ncols()),
        ));
    }
    Ok(free.columns(0, d).into_owned())
}

/// `P_user^[bs]^H V^[bs]^H H_bs^[cell,from] W^[cell,from]`: what stream block of
/// user `[cell, from]` looks like after user `[bs, user]`'s receive cascade.
pub fn received_block(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
    rx: &ReceiverSolution,
    bs: usize,
    user: usize,
    cell: usize,
    from: usize,
) -> ComplexMatrix {
    let combiner = rx.v(bs) * rx.p(bs, user);
    combiner.adjoint() * ch.h(bs, cell, from) * sol.w(cell, from)
}

/// The `d x d` desired channel of user `[i, j]` after the cascade.
pub fn effective_channel(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
    rx: &ReceiverSolution,
    i: usize,
    j: usize,
) -> ComplexMatrix {
    received_block(ch, sol, rx, i, j, i, j)
}

/// Builds `V`, every `P_j` and the resulting effective channels.
pub fn design_receivers(ch: &ChannelSet, sol: &PrecoderSolution, tol: &Tolerance) -> Result<ReceiverSolution> {
    let k = sol.config.k;
    let mut v = Vec::with_capacity(CELLS);
    let mut p = Vec::with_capacity(CELLS * k);
    let mut h_eff = Vec::with_capacity(CELLS * k);
    for bs in 0..CELLS {
        let vi = design_ici_eliminator(ch, sol, bs, tol)?;
        let channels = ici_free_channels(ch, sol, &vi, bs);
        for user in 0..k {
            let pj = design_iui_eliminator(&channels, user, tol)?;
            h_eff.push(pj.adjoint() * &channels[user]);
            p.push(pj);
        }
        v.push(vi);
    }
    Ok(ReceiverSolution { v, p, h_eff, k })
}

/// Relative residual interference after the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct Leakage {
    /// `||V^H ICI||_F / ||ICI||_F` per base station.
    pub per_bs_ici: Vec<f64>,
    /// `||P^H IUI||_F / ||IUI||_F` per `[bs][user]`, where IUI stacks the
    /// other same-cell users' ICI-free channels.
    pub per_user_iui: Vec<f64>,
}

impl Leakage {
    pub fn max(&self) -> f64 {
        self.per_bs_ici
            .iter()
            .chain(&self.per_user_iui)
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Leakage of `rx` against the precoders in `sol`. An exactly zero interference term reports 0.
pub fn end_to_end_leakage(ch: &ChannelSet, sol: &PrecoderSolution, rx: &ReceiverSolution) -> Result<Leakage> {
    let k = sol.config.k;
    let mut per_bs_ici = Vec::with_capacity(CELLS);
    let mut per_user_iui = Vec::with_capacity(CELLS * k);
    for bs in 0..CELLS {
        let ici = interference_matrix(ch, &sol.per_user, bs)?;
        per_bs_ici.push(relative_norm(&(rx.v(bs).adjoint() * &ici), &ici));
        let channels = ici_free_channels(ch, sol, rx.v(bs), bs);
        for user in 0..k {
            let iui = other_users(&channels, user)?;
            per_user_iui.push(relative_norm(&(rx.p(bs, user).adjoint() * &iui), &iui));
        }
    }
    Ok(Leakage {
        per_bs_ici,
        per_user_iui,
    })
}

//! End-to-end trials, Monte Carlo statistics, DoF accounting and the
//! high-SNR sum-rate check.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{check_feasibility, design_precoders, interference_dimension, Method, PrecoderSolution};
use crate::error::{Error, Result};
use crate::network::{generate_channels, ChannelSet, NetworkConfig, CELLS};
use crate::numerics::{numerical_rank, ComplexMatrix, Tolerance};
use crate::receiver::{design_receivers, end_to_end_leakage, received_block, ReceiverSolution};

/// Environment variable holding an optional worker-count hint for Monte Carlo fan-out.
pub const THREADS_ENV: &str = "IA3_THREADS";

/// Verification summary of one channel draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub config: NetworkConfig,
    pub seed: u64,
    pub method: Method,
    /// Interference subspace dimension at each base station.
    pub per_bs_interference_dim: Vec<usize>,
    pub per_bs_ici_leakage: Vec<f64>,
    /// Laid out `[cell][user]`.
    pub per_user_iui_leakage: Vec<f64>,
    /// Laid out `[cell][user]`.
    #[serde(rename = "per_user_W_rank")]
    pub per_user_w_rank: Vec<usize>,
    /// Interference-free decodable streams.
    pub eta_achieved: usize,
    pub decodable: bool,
}

impl AlignmentReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Names of the checks that failed, empty when decodable.
    pub fn failed_checks(&self, tol: &Tolerance) -> Vec<String> {
        let cfg = &self.config;
        let target = (2 * cfg.k - 1) * cfg.d;
        let mut failed = Vec::new();
        if self.per_bs_interference_dim.iter().any(|&dim| dim != target) {
            failed.push(format!(
                "interference-dimension check: {:?} != {target}",
                self.per_bs_interference_dim
            ));
        }
        let worst_ici = self.per_bs_ici_leakage.iter().copied().fold(0.0, f64::max);
        if worst_ici > tol.leakage_tol {
            failed.push(format!("ICI leakage check: {worst_ici:e} > {:e}", tol.leakage_tol));
        }
        let worst_iui = self.per_user_iui_leakage.iter().copied().fold(0.0, f64::max);
        if worst_iui > tol.leakage_tol {
            failed.push(format!("IUI leakage check: {worst_iui:e} > {:e}", tol.leakage_tol));
        }
        if self.eta_achieved != CELLS * cfg.k * cfg.d {
            failed.push(format!(
                "stream-count check: eta {} != {}",
                self.eta_achieved,
                CELLS * cfg.k * cfg.d
            ));
        }
        failed
    }
}

/// Channels, precoders and receivers of one draw plus their report.
#[derive(Debug, Clone)]
pub struct Trial {
    pub channels: ChannelSet,
    pub precoders: PrecoderSolution,
    pub receivers: ReceiverSolution,
    pub report: AlignmentReport,
}

impl Trial {
    pub fn run(config: &NetworkConfig, seed: u64, tol: &Tolerance) -> Result<Self> {
        check_feasibility(config)?.require(config)?;
        Self::from_channels(generate_channels(config, seed)?, tol)
    }

    /// Runs both phases on an existing channel draw, e.g. one loaded from a dump.
    pub fn from_channels(channels: ChannelSet, tol: &Tolerance) -> Result<Self> {
        tol.validate()?;
        let method = check_feasibility(channels.config())?.require(channels.config())?;
        let precoders = design_precoders(&channels)?;
        let receivers = design_receivers(&channels, &precoders, tol)?;
        let report = assess(&channels, &precoders, &receivers, method, tol)?;
        Ok(Trial {
            channels,
            precoders,
            receivers,
            report,
        })
    }
}

fn assess(
    ch: &ChannelSet,
    sol: &PrecoderSolution,
    rx: &ReceiverSolution,
    method: Method,
    tol: &Tolerance,
) -> Result<AlignmentReport> {
    let cfg = sol.config;
    let target = (2 * cfg.k - 1) * cfg.d;
    let dims = (0..CELLS)
        .map(|bs| interference_dimension(ch, sol, bs, tol))
        .collect::<Result<Vec<_>>>()?;
    let leak = end_to_end_leakage(ch, sol, rx)?;
    let w_rank = sol
        .per_user
        .iter()
        .map(|w| numerical_rank(w, tol))
        .collect::<Result<Vec<_>>>()?;

    let mut eta = 0;
    for bs in 0..CELLS {
        for user in 0..cfg.k {
            let clean = leak.per_bs_ici[bs] <= tol.leakage_tol && leak.per_user_iui[bs * cfg.k + user] <= tol.leakage_tol;
            if clean {
                eta += numerical_rank(rx.h_eff(bs, user), tol)?;
            }
        }
    }
    let full_rank = (0..CELLS * cfg.k).all(|i| numerical_rank(&rx.h_eff[i], tol).map(|r| r == cfg.d).unwrap_or(false));
    let decodable = full_rank && leak.max() <= tol.leakage_tol && dims.iter().all(|&d| d == target);

    Ok(AlignmentReport {
        config: cfg,
        seed: ch.seed(),
        method,
        per_bs_interference_dim: dims,
        per_bs_ici_leakage: leak.per_bs_ici,
        per_user_iui_leakage: leak.per_user_iui,
        per_user_w_rank: w_rank,
        eta_achieved: eta,
        decodable,
    })
}

/// Generates channels for `seed`, runs both phases and verifies the result.
pub fn run_trial(config: &NetworkConfig, seed: u64, tol: &Tolerance) -> Result<AlignmentReport> {
    Trial::run(config, seed, tol).map(|t| t.report)
}

/// Interference-free streams of the orthogonal (time-sharing) baseline, `M` for `N < M <= KN`.
pub fn orthogonal_dof(config: &NetworkConfig) -> Result<usize> {
    if config.n >= config.m || config.m > config.cell_antennas() {
        return Err(Error::Configuration(format!(
            "orthogonal baseline needs N < M <= K*N, got {config}"
        )));
    }
    Ok(config.m)
}

/// One row of the DoF comparison sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofSweepRow {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "best_K")]
    pub best_k: usize,
    #[serde(rename = "best_N")]
    pub best_n: usize,
    pub best_d: usize,
    pub ia_dof: usize,
    pub orthogonal_dof: usize,
}

pub const DOF_SWEEP_CSV_HEADER: &str = "M,best_K,best_N,best_d,ia_dof,orthogonal_dof";

impl DofSweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.m, self.best_k, self.best_n, self.best_d, self.ia_dof, self.orthogonal_dof
        )
    }
}

/// Best `3 K d_max` over `K` and `N` with `N < M <= KN`; ties go to the smallest `K`, then `N`.
pub fn best_ia_dof_for_m(
    m: usize,
    n_range: RangeInclusive<usize>,
    k_range: RangeInclusive<usize>,
) -> DofSweepRow {
    let mut best = DofSweepRow {
        m,
        best_k: 0,
        best_n: 0,
        best_d: 0,
        ia_dof: 0,
        orthogonal_dof: m,
    };
    for k in k_range {
        for n in n_range.clone() {
            let cfg = NetworkConfig { m, n, k, d: 1 };
            let Ok(verdict) = check_feasibility(&cfg) else {
                continue;
            };
            let dof = CELLS * k * verdict.d_max;
            if dof > best.ia_dof {
                best = DofSweepRow {
                    best_k: k,
                    best_n: n,
                    best_d: verdict.d_max,
                    ia_dof: dof,
                    ..best
                };
            }
        }
    }
    best
}

/// Default search: `N` in `[1, M-1]`, `K` in `[2, 10]`.
pub fn dof_sweep(m_min: usize, m_max: usize) -> Result<Vec<DofSweepRow>> {
    if m_min < 2 || m_min > m_max {
        return Err(Error::Configuration(format!(
            "sweep needs 2 <= M_min <= M_max, got [{m_min}, {m_max}]"
        )));
    }
    Ok((m_min..=m_max)
        .map(|m| best_ia_dof_for_m(m, 1..=m - 1, 2..=10))
        .collect())
}

/// Per-user-position rank histogram of the designed precoders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankHistogram {
    pub config: NetworkConfig,
    pub trials: usize,
    pub base_seed: u64,
    /// `counts[cell * K + user][rank] = trials`.
    pub counts: Vec<BTreeMap<usize, usize>>,
    /// Trials that raised an error instead of producing precoders.
    pub failures: Vec<(u64, String)>,
}

impl RankHistogram {
    /// `user_i,user_j,rank,count` rows with 1-based user indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("user_i,user_j,rank,count\n");
        for (pos, hist) in self.counts.iter().enumerate() {
            let (cell, user) = (pos / self.config.k + 1, pos % self.config.k + 1);
            for (rank, count) in hist {
                out.push_str(&format!("{cell},{user},{rank},{count}\n"));
            }
        }
        out
    }

    /// Fraction of successful trials in which every user's precoder had rank `d`.
    pub fn full_rank_fraction(&self) -> f64 {
        let d = self.config.d;
        let ok = self
            .counts
            .iter()
            .map(|h| h.get(&d).copied().unwrap_or(0))
            .min()
            .unwrap_or(0);
        ok as f64 / self.trials as f64
    }
}

/// Runs `f` on a worker pool sized by `IA3_THREADS` when it is set.
pub fn with_workers<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Rank of every `W^[i,j]` over `trials` draws with seeds `base_seed + t`.
pub fn rank_distribution(config: &NetworkConfig, trials: usize, base_seed: u64, tol: &Tolerance) -> Result<RankHistogram> {
    check_feasibility(config)?.require(config)?;
    if trials == 0 {
        return Err(Error::InvalidInput("rank distribution needs at least one trial".into()));
    }
    let outcomes: Vec<(u64, Result<Vec<usize>>)> = with_workers(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let seed = base_seed.wrapping_add(t);
                let ranks = generate_channels(config, seed)
                    .and_then(|ch| design_precoders(&ch))
                    .and_then(|sol| sol.per_user.iter().map(|w| numerical_rank(w, tol)).collect());
                (seed, ranks)
            })
            .collect()
    });

    let mut counts = vec![BTreeMap::new(); config.users()];
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(ranks) => {
                for (pos, r) in ranks.into_iter().enumerate() {
                    *counts[pos].entry(r).or_insert(0) += 1;
                }
            }
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    Ok(RankHistogram {
        config: *config,
        trials,
        base_seed,
        counts,
        failures,
    })
}

fn log2_det_hpd(m: &ComplexMatrix) -> Result<f64> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NumericalFailure("covariance is not positive definite".into()))?;
    let l = chol.l();
    Ok(2.0 * l.diagonal().iter().map(|z| z.re.ln()).sum::<f64>() / std::f64::consts::LN_2)
}

/// Sum over all users of `log2 det(I + (SNR/d) H H^H R^-1)` with `R` the
/// post-cascade noise plus residual-interference covariance (`sigma^2 = 1`,
/// power `SNR/d` per stream).
pub fn sum_rate_for(ch: &ChannelSet, sol: &PrecoderSolution, rx: &ReceiverSolution, snr_db: f64) -> Result<f64> {
    let cfg = sol.config;
    let snr = 10f64.powf(snr_db / 10.0);
    if snr == 0.0 {
        return Ok(0.0);
    }
    if !snr.is_finite() {
        return Err(Error::InvalidInput(format!("SNR {snr_db} dB is not finite")));
    }
    let per_stream = snr / cfg.d as f64;
    let mut total = 0.0;
    for bs in 0..CELLS {
        for user in 0..cfg.k {
            let combiner = rx.v(bs) * rx.p(bs, user);
            let mut cov = combiner.adjoint() * &combiner;
            for cell in 0..CELLS {
                for from in 0..cfg.k {
                    if (cell, from) != (bs, user) {
                        let a = received_block(ch, sol, rx, bs, user, cell, from);
                        cov += (&a * a.adjoint()) * crate::numerics::c64::new(per_stream, 0.0);
                    }
                }
            }
            let h = rx.h_eff(bs, user);
            let signal = &cov + (h * h.adjoint()) * crate::numerics::c64::new(per_stream, 0.0);
            total += log2_det_hpd(&signal)? - log2_det_hpd(&cov)?;
        }
    }
    Ok(total)
}

/// Sum rate of the aligned scheme for the draw at `seed`.
pub fn sum_rate(config: &NetworkConfig, seed: u64, snr_db: f64, tol: &Tolerance) -> Result<f64> {
    Ok(sum_rate_curve(config, seed, &[snr_db], tol)?[0].1)
}

/// `(snr_db, sum_rate)` pairs for a single decodable draw.
pub fn sum_rate_curve(config: &NetworkConfig, seed: u64, snrs_db: &[f64], tol: &Tolerance) -> Result<Vec<(f64, f64)>> {
    let trial = Trial::run(config, seed, tol)?;
    if !trial.report.decodable {
        return Err(Error::NumericalFailure(format!(
            "seed {seed} is not decodable: {}",
            trial.report.failed_checks(tol).join("; ")
        )));
    }
    snrs_db
        .iter()
        .map(|&s| sum_rate_for(&trial.channels, &trial.precoders, &trial.receivers, s).map(|r| (s, r)))
        .collect()
}

/// Least-squares slope of rate against `log2(SNR)`; `None` with fewer than two distinct SNRs.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let xs: Vec<f64> = points.iter().map(|(db, _)| db / 10.0 * 10f64.log2()).collect();
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Slope over the top decade of SNR (points within 10 dB of the highest),
/// falling back to the two highest points when the decade holds only one.
pub fn high_snr_slope(points: &[(f64, f64)]) -> Option<f64> {
    let top = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let decade: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= top - 10.0).collect();
    if decade.len() >= 2 {
        return fit_slope(&decade);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    sorted.truncate(2);
    fit_slope(&sorted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, n: usize, k: usize, d: usize) -> NetworkConfig {
        NetworkConfig::new(m, n, k, d).unwrap()
    }

    #[test]
    fn orthogonal_baseline() {
        assert_eq!(orthogonal_dof(&cfg(16, 8, 2, 1)).unwrap(), 16);
        assert_eq!(orthogonal_dof(&cfg(8, 4, 3, 1)).unwrap(), 8);
        assert_eq!(orthogonal_dof(&cfg(7, 4, 2, 1)).unwrap(), 7);
        assert!(orthogonal_dof(&NetworkConfig { m: 9, n: 4, k: 2, d: 1 }).is_err());
    }

    #[test]
    fn best_dof_rows() {
        let row = best_ia_dof_for_m(16, 1..=15, 2..=10);
        assert_eq!((row.ia_dof, row.best_k, row.best_n, row.best_d), (18, 2, 8, 3));
        assert_eq!(best_ia_dof_for_m(7, 1..=6, 2..=10).ia_dof, 6);
        assert_eq!(best_ia_dof_for_m(13, 1..=12, 2..=10).ia_dof, 12);
        assert_eq!(best_ia_dof_for_m(19, 1..=18, 2..=10).ia_dof, 18);
        let none = best_ia_dof_for_m(3, 1..=2, 2..=10);
        assert_eq!(none.ia_dof, 0);
        assert_eq!(none.orthogonal_dof, 3);
    }

    #[test]
    fn sweep_csv_line() {
        let rows = dof_sweep(8, 8).unwrap();
        assert_eq!(rows[0].csv_line(), "8,3,3,1,9,8");
        assert!(dof_sweep(1, 4).is_err());
        assert!(dof_sweep(9, 4).is_err());
    }

    #[test]
    fn trial_reports() {
        let tol = Tolerance::default();
        let r = run_trial(&cfg(16, 8, 2, 3), 1, &tol).unwrap();
        assert!(r.decodable);
        assert_eq!(r.eta_achieved, 18);
        assert_eq!(r.per_bs_interference_dim, vec![9, 9, 9]);
        assert_eq!(r.per_user_w_rank, vec![3; 6]);
        assert!(r.failed_checks(&tol).is_empty());

        let r = run_trial(&cfg(8, 4, 3, 1), 2, &tol).unwrap();
        assert!(r.decodable);
        assert_eq!(r.eta_achieved, 9);
        assert_eq!(r.per_bs_interference_dim, vec![5, 5, 5]);
        assert_eq!(r.method, Method::NullSpace);

        assert!(matches!(
            run_trial(&cfg(16, 8, 2, 4), 1, &tol),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn strict_leakage_tolerance_fails_named_check() {
        let tol = Tolerance::new(crate::numerics::DEFAULT_RANK_TOL, 1e-30).unwrap();
        let r = run_trial(&cfg(16, 8, 2, 3), 1, &tol).unwrap();
        assert!(!r.decodable);
        assert!(r.failed_checks(&tol).iter().any(|c| c.contains("leakage")));
    }

    #[test]
    fn report_json_round_trip() {
        let r = run_trial(&cfg(6, 4, 2, 1), 3, &Tolerance::default()).unwrap();
        let text = r.to_json().unwrap();
        assert!(text.contains("\"per_user_W_rank\""));
        let back: AlignmentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rank_histogram_small() {
        let tol = Tolerance::default();
        let c = cfg(8, 4, 3, 1);
        let h = rank_distribution(&c, 20, 7, &tol).unwrap();
        assert!(h.failures.is_empty());
        assert!(h.counts.iter().all(|m| m.len() == 1 && m[&1] == 20));
        assert_eq!(h, rank_distribution(&c, 20, 7, &tol).unwrap());
        let csv = h.to_csv();
        assert!(csv.starts_with("user_i,user_j,rank,count\n1,1,1,20\n"));
        assert_eq!(csv.lines().count(), 1 + 9);
        assert_eq!(h.full_rank_fraction(), 1.0);
        assert!(rank_distribution(&c, 0, 7, &tol).is_err());
    }

    #[test]
    fn zero_snr_gives_zero_rate() {
        let tol = Tolerance::default();
        let c = cfg(8, 4, 3, 1);
        assert_eq!(sum_rate(&c, 2, f64::NEG_INFINITY, &tol).unwrap(), 0.0);
        assert!(sum_rate(&c, 2, -60.0, &tol).unwrap() < 1e-3);
    }

    #[test]
    fn doubling_streams_doubles_slope() {
        let tol = Tolerance::default();
        let slope = |d| {
            let pts = sum_rate_curve(&cfg(10, 5, 2, d), 1, &[30.0, 50.0], &tol).unwrap();
            fit_slope(&pts).unwrap()
        };
        let (one, two) = (slope(1), slope(2));
        assert!((two / one - 2.0).abs() < 0.05, "{one} {two}");
        assert!((one - 6.0).abs() < 0.3);
    }

    #[test]
    fn slope_fit() {
        assert_eq!(fit_slope(&[(30.0, 1.0)]), None);
        let pts: Vec<(f64, f64)> = [30.0, 40.0, 50.0]
            .iter()
            .map(|&db| (db, 5.0 * db / 10.0 * 10f64.log2() + 2.0))
            .collect();
        assert!((fit_slope(&pts).unwrap() - 5.0).abs() < 1e-12);
        assert!((high_snr_slope(&pts).unwrap() - 5.0).abs() < 1e-12);
        assert!((high_snr_slope(&[(0.0, 0.0), (50.0, 5.0 * 5.0 * 10f64.log2())]).unwrap() - 5.0).abs() < 1e-12);
    }
}

//! Seeded experiment orchestration: channels, schedules, window designs,
//! latency reports, and CSV emission.
//!
//! Every random draw is keyed by the master seed plus structural tags
//! (realization index, window contents), so a window shared by several
//! scheduling schemes in the same realization gets the same design, and
//! identical configurations emit byte-identical output. Realizations run
//! concurrently but results are assembled in realization order.

use crate::channel::{generate_channel_set, igc, ChannelSet, IgcMatrix};
use crate::config::{OmegaMode, Scheme, SimConfig};
use crate::metrics::{total_latency, LatencyReport, SwitchingPlacement};
use crate::precoder::{design_window, HybridDesign};
use crate::rng::{mix_seed, Rng};
use crate::scheduler::{
    calibrate_omega, schedule_exact, schedule_rand, schedule_sing, schedule_xhaus, Schedule,
    SchedulerParams,
};
use crate::Error;
use std::collections::HashMap;

/// Fixed output schema of [`run_experiment`].
pub const CSV_HEADER: &str = "realization,scheme,t_s,total_ms,min_esinr,note";
/// Partition-count guard for exhaustive scheduling.
pub const DEFAULT_XHAUS_CAP: usize = 10_000;

const TAG_CHANNEL: u64 = 0x11;
const TAG_RAND_SCHEME: u64 = 0x22;
const TAG_DESIGN: u64 = 0x33;

/// Channel realization `r` of a configuration.
pub fn realization_channels(cfg: &SimConfig, realization: usize) -> ChannelSet {
    let seed = mix_seed(cfg.seed, &[TAG_CHANNEL, realization as u64]);
    let mut rng = Rng::from_seed(seed);
    generate_channel_set(
        cfg.n_tx,
        cfg.n_rx,
        cfg.n_paths,
        cfg.g_total,
        cfg.k_total,
        cfg.bits_per_group,
        &mut rng,
    )
}

/// Design seed for one window: a function of the master seed, realization,
/// and window contents only, so schemes sharing a window share its design.
fn window_seed(cfg: &SimConfig, realization: usize, window: &[usize]) -> u64 {
    let mut tags = vec![TAG_DESIGN, realization as u64];
    let mut sorted = window.to_vec();
    sorted.sort_unstable();
    tags.extend(sorted.iter().map(|&g| g as u64));
    mix_seed(cfg.seed, &tags)
}

fn design_cached(
    cache: &mut HashMap<Vec<usize>, HybridDesign>,
    cfg: &SimConfig,
    chs: &ChannelSet,
    realization: usize,
    window: &[usize],
) -> Result<HybridDesign, Error> {
    // Designs are canonical per window *set*: the sorted window is what
    // gets designed, so every scheme that schedules the same groups
    // together shares one design.
    let mut key = window.to_vec();
    key.sort_unstable();
    if let Some(d) = cache.get(&key) {
        return Ok(d.clone());
    }
    let design = design_window(
        chs,
        &key,
        &cfg.precoder_config(),
        window_seed(cfg, realization, &key),
    )?;
    cache.insert(key, design.clone());
    Ok(design)
}

fn igc_of(chs: &ChannelSet) -> Result<IgcMatrix, Error> {
    if chs.n_groups() >= 2 {
        igc(chs)
    } else {
        Ok(IgcMatrix::from_entries(1, |_, _| 0.0))
    }
}

/// Resolved IGC penalty weight for one realization.
pub fn resolve_omega(cfg: &SimConfig, rho: &IgcMatrix) -> f64 {
    match cfg.omega_mode {
        OmegaMode::Fixed(v) => v,
        OmegaMode::Auto => calibrate_omega(
            rho,
            &SchedulerParams::new(cfg.lambda, 0.0, cfg.effective_n_rf()),
        ),
    }
}

/// Schedule produced by one scheme on one realization. `XHAUS` designs
/// every window it enumerates through the shared cache.
fn schedule_for_scheme(
    scheme: Scheme,
    cfg: &SimConfig,
    chs: &ChannelSet,
    rho: &IgcMatrix,
    realization: usize,
    cache: &mut HashMap<Vec<usize>, HybridDesign>,
) -> Result<Schedule, Error> {
    match scheme {
        Scheme::Sing => Ok(schedule_sing(cfg.g_total)),
        Scheme::Rand => {
            let seed = mix_seed(cfg.seed, &[TAG_RAND_SCHEME, realization as u64]);
            Ok(schedule_rand(
                cfg.g_total,
                cfg.effective_n_rf(),
                &mut Rng::from_seed(seed),
            ))
        }
        Scheme::Hydrawave => {
            let omega = resolve_omega(cfg, rho);
            let params = SchedulerParams::new(cfg.lambda, omega, cfg.effective_n_rf());
            Ok(schedule_exact(rho, &params).0)
        }
        Scheme::Xhaus => {
            let (schedule, _) = schedule_xhaus(
                chs,
                cfg.effective_n_rf(),
                DEFAULT_XHAUS_CAP,
                |w| design_cached(cache, cfg, chs, realization, w),
                &cfg.rate_model(),
                cfg.noise_w(),
                cfg.delta_sw_s(),
            )?;
            Ok(schedule)
        }
    }
}

/// Evaluates one schedule into a latency report using cached designs.
fn evaluate_schedule(
    schedule: &Schedule,
    cfg: &SimConfig,
    chs: &ChannelSet,
    realization: usize,
    cache: &mut HashMap<Vec<usize>, HybridDesign>,
) -> Result<LatencyReport, Error> {
    let designs: Vec<HybridDesign> = schedule
        .windows
        .iter()
        .map(|w| design_cached(cache, cfg, chs, realization, w))
        .collect::<Result<_, _>>()?;
    Ok(total_latency(
        schedule,
        &designs,
        chs,
        &cfg.rate_model(),
        cfg.noise_w(),
        cfg.delta_sw_s(),
        SwitchingPlacement::BetweenWindows,
    ))
}

#[derive(Debug, Clone)]
enum SchemeOutcome {
    Data {
        scheme: Scheme,
        t_s: usize,
        total_ms: f64,
        min_esinr: f64,
    },
    Skipped {
        scheme: Scheme,
        note: String,
    },
}

fn run_realization(cfg: &SimConfig, realization: usize) -> Result<Vec<SchemeOutcome>, Error> {
    let chs = realization_channels(cfg, realization);
    let rho = igc_of(&chs)?;
    let mut cache = HashMap::new();
    let mut outcomes = Vec::with_capacity(cfg.schemes.len());
    for &scheme in &cfg.schemes {
        let schedule = match schedule_for_scheme(scheme, cfg, &chs, &rho, realization, &mut cache) {
            Ok(s) => s,
            Err(Error::PartitionCapExceeded { count, cap }) => {
                outcomes.push(SchemeOutcome::Skipped {
                    scheme,
                    note: format!("skipped: {count} partitions exceed cap {cap}"),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let report = evaluate_schedule(&schedule, cfg, &chs, realization, &mut cache)?;
        outcomes.push(SchemeOutcome::Data {
            scheme,
            t_s: schedule.t_s(),
            total_ms: report.total_ms(),
            min_esinr: report.min_esinr(&chs),
        });
    }
    Ok(outcomes)
}

/// Runs realizations concurrently, returning per-realization outcomes in
/// realization order.
fn run_all(cfg: &SimConfig) -> Result<Vec<Vec<SchemeOutcome>>, Error> {
    let n = cfg.realizations;
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n)
        .max(1);
    if workers == 1 {
        return (0..n).map(|r| run_realization(cfg, r)).collect();
    }
    let mut slots: Vec<Option<Result<Vec<SchemeOutcome>, Error>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut local = Vec::new();
                    let mut r = w;
                    while r < n {
                        local.push((r, run_realization(cfg, r)));
                        r += workers;
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            for (r, res) in h.join().expect("realization worker panicked") {
                slots[r] = Some(res);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("all realizations assigned"))
        .collect()
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs the experiment grid and renders the result table: one data row per
/// (realization, scheme), then one aggregate row per scheme with means and
/// standard errors.
pub fn run_experiment(cfg: &SimConfig) -> Result<String, Error> {
    cfg.validate()?;
    let all = run_all(cfg)?;

    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (r, outcomes) in all.iter().enumerate() {
        for outcome in outcomes {
            match outcome {
                SchemeOutcome::Data {
                    scheme,
                    t_s,
                    total_ms,
                    min_esinr,
                } => {
                    out.push_str(&format!(
                        "{r},{},{t_s},{total_ms},{min_esinr},\n",
                        scheme.as_str()
                    ));
                }
                SchemeOutcome::Skipped { scheme, note } => {
                    out.push_str(&format!("{r},{},,,,{note}\n", scheme.as_str()));
                }
            }
        }
    }
    for &scheme in &cfg.schemes {
        let mut t_s = Vec::new();
        let mut total = Vec::new();
        let mut esinr = Vec::new();
        for outcomes in &all {
            for outcome in outcomes {
                if let SchemeOutcome::Data {
                    scheme: s,
                    t_s: t,
                    total_ms,
                    min_esinr,
                } = outcome
                {
                    if *s == scheme {
                        t_s.push(*t as f64);
                        total.push(*total_ms);
                        esinr.push(*min_esinr);
                    }
                }
            }
        }
        if total.is_empty() {
            out.push_str(&format!("mean,{},,,,no data\n", scheme.as_str()));
            continue;
        }
        let (mts, _) = mean_and_stderr(&t_s);
        let (mtot, setot) = mean_and_stderr(&total);
        let (mes, sees) = mean_and_stderr(&esinr);
        out.push_str(&format!(
            "mean,{},{mts},{mtot},{mes},se_total_ms={setot} se_min_esinr={sees}\n",
            scheme.as_str()
        ));
    }
    Ok(out)
}

/// Result of one lambda point in a sweep.
#[derive(Debug, Clone)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub mean_total_ms: f64,
    pub stderr_total_ms: f64,
    pub mean_t_s: f64,
}

/// Sweeps the IGC ceiling over `lambdas` with the exact scheduler,
/// designing each distinct window once per realization.
pub fn sweep_lambda_points(cfg: &SimConfig, lambdas: &[f64]) -> Result<Vec<LambdaPoint>, Error> {
    cfg.validate()?;
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument(
            "lambda sweep needs at least one value".into(),
        ));
    }
    let n = cfg.realizations;
    let per_realization = |r: usize| -> Result<Vec<(f64, usize)>, Error> {
        let chs = realization_channels(cfg, r);
        let rho = igc_of(&chs)?;
        let mut cache = HashMap::new();
        let mut points = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let mut sub = cfg.clone();
            sub.lambda = lambda;
            let omega = resolve_omega(&sub, &rho);
            let params = SchedulerParams::new(lambda, omega, sub.effective_n_rf());
            let (schedule, _) = schedule_exact(&rho, &params);
            let report = evaluate_schedule(&schedule, &sub, &chs, r, &mut cache)?;
            points.push((report.total_ms(), schedule.t_s()));
        }
        Ok(points)
    };

    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n)
        .max(1);
    let mut slots: Vec<Option<Result<Vec<(f64, usize)>, Error>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let per_realization = &per_realization;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut local = Vec::new();
                    let mut r = w;
                    while r < n {
                        local.push((r, per_realization(r)));
                        r += workers;
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            for (r, res) in h.join().expect("sweep worker panicked") {
                slots[r] = Some(res);
            }
        }
    });
    let rows: Vec<Vec<(f64, usize)>> = slots
        .into_iter()
        .map(|s| s.expect("assigned"))
        .collect::<Result<_, _>>()?;

    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let totals: Vec<f64> = rows.iter().map(|r| r[i].0).collect();
            let windows: Vec<f64> = rows.iter().map(|r| r[i].1 as f64).collect();
            let (mean_total_ms, stderr_total_ms) = mean_and_stderr(&totals);
            let (mean_t_s, _) = mean_and_stderr(&windows);
            LambdaPoint {
                lambda,
                mean_total_ms,
                stderr_total_ms,
                mean_t_s,
            }
        })
        .collect())
}

/// Golden-section-style search for the IGC ceiling that minimizes the
/// mean realized latency: the interval shrinks until the spread of the
/// evaluated points is negligible or `max_evals` is exhausted, and the
/// best (lambda, mean latency) pair seen is returned.
///
/// The latency landscape over lambda is piecewise constant (schedules only
/// change when a window's aggregate IGC crosses the ceiling), so the
/// search tracks the best evaluation rather than trusting unimodality.
pub fn search_lambda_opt(
    cfg: &SimConfig,
    lambda_low: f64,
    lambda_high: f64,
    max_evals: usize,
) -> Result<(f64, f64), Error> {
    if !(lambda_low <= lambda_high) || lambda_low < 0.0 {
        return Err(Error::InvalidArgument("invalid lambda interval".into()));
    }
    let golden = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut lo = lambda_low;
    let mut hi = lambda_high;
    let mut evals = 0usize;
    let mut best: Option<(f64, f64)> = None;
    let probe = |lambda: f64, best: &mut Option<(f64, f64)>| -> Result<f64, Error> {
        let point = &sweep_lambda_points(cfg, &[lambda])?[0];
        let latency = point.mean_total_ms;
        if best.as_ref().is_none_or(|(_, b)| latency < *b) {
            *best = Some((lambda, latency));
        }
        Ok(latency)
    };
    probe(lo, &mut best)?;
    probe(hi, &mut best)?;
    evals += 2;
    let mut a = hi - golden * (hi - lo);
    let mut b = lo + golden * (hi - lo);
    let mut fa = probe(a, &mut best)?;
    let mut fb = probe(b, &mut best)?;
    evals += 2;
    while evals < max_evals && (hi - lo) > 1e-3 * (1.0 + lambda_high) {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - golden * (hi - lo);
            fa = probe(a, &mut best)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + golden * (hi - lo);
            fb = probe(b, &mut best)?;
        }
        evals += 1;
    }
    Ok(best.expect("at least the endpoints were evaluated"))
}

/// CSV rendering of [`sweep_lambda_points`]; the `best` column flags the
/// first argmin of the mean latency.
pub fn sweep_lambda(cfg: &SimConfig, lambdas: &[f64]) -> Result<String, Error> {
    let points = sweep_lambda_points(cfg, lambdas)?;
    let best = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean_total_ms.partial_cmp(&b.1.mean_total_ms).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut out = String::from("lambda,mean_total_ms,stderr_total_ms,mean_t_s,best\n");
    for (i, p) in points.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.lambda,
            p.mean_total_ms,
            p.stderr_total_ms,
            p.mean_t_s,
            if i == best { 1 } else { 0 }
        ));
    }
    Ok(out)
}

/// Designs one window on realization 0 and dumps it.
pub fn design_dump(cfg: &SimConfig, window: &[usize]) -> Result<String, Error> {
    cfg.validate()?;
    let chs = realization_channels(cfg, 0);
    let design = design_window(
        &chs,
        window,
        &cfg.precoder_config(),
        window_seed(cfg, 0, window),
    )?;
    Ok(design.to_csv())
}

/// Emits the schedule one scheme produces on one realization.
pub fn schedule_dump(cfg: &SimConfig, scheme: Scheme, realization: usize) -> Result<String, Error> {
    cfg.validate()?;
    let chs = realization_channels(cfg, realization);
    let rho = igc_of(&chs)?;
    let mut cache = HashMap::new();
    let schedule = schedule_for_scheme(scheme, cfg, &chs, &rho, realization, &mut cache)?;
    Ok(schedule.to_csv())
}

//! Simulation configuration: a flat `key=value` text format with the
//! reference hardware and protocol values as defaults.
//!
//! Power quantities enter in dBm and are converted to linear watts at this
//! boundary; everything downstream works in watts.

use crate::metrics::RateModel;
use crate::precoder::{PrecoderConfig, PrecoderMode};
use crate::Error;

/// `10^((dBm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10.0_f64.powf((dbm - 30.0) / 10.0)
}

/// Scheduling scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Sing,
    Rand,
    Xhaus,
    Hydrawave,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Sing => "SING",
            Scheme::Rand => "RAND",
            Scheme::Xhaus => "XHAUS",
            Scheme::Hydrawave => "HYDRAWAVE",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SING" => Ok(Scheme::Sing),
            "RAND" => Ok(Scheme::Rand),
            "XHAUS" => Ok(Scheme::Xhaus),
            "HYDRAWAVE" => Ok(Scheme::Hydrawave),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

/// How the IGC penalty weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaMode {
    /// Balance the window-count and IGC terms on average per realization.
    Auto,
    Fixed(f64),
}

/// All simulation knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_tx: usize,
    pub l_tx: usize,
    pub n_rf: usize,
    pub n_rx: usize,
    pub d_f: usize,
    pub d_w: usize,
    pub p_tx_max_dbm: f64,
    pub p_rx_max_dbm: f64,
    pub noise_dbm: f64,
    pub g_total: usize,
    pub k_total: usize,
    pub bits_per_group: f64,
    pub n_bis: [usize; 3],
    pub n_rand: [usize; 3],
    pub n_iter: usize,
    pub n_paths: usize,
    pub lambda: f64,
    pub omega_mode: OmegaMode,
    pub delta_sw_ms: f64,
    pub bandwidth_hz: f64,
    pub c_max: f64,
    pub realizations: usize,
    pub seed: u64,
    pub precoder_mode: PrecoderMode,
    pub schemes: Vec<Scheme>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_tx: 24,
            l_tx: 6,
            n_rf: 4,
            n_rx: 2,
            d_f: 16,
            d_w: 4,
            p_tx_max_dbm: 20.0,
            p_rx_max_dbm: 0.0,
            noise_dbm: 10.0,
            g_total: 4,
            k_total: 8,
            bits_per_group: 4.0e6,
            n_bis: [10, 10, 10],
            n_rand: [5, 100, 20],
            n_iter: 3,
            n_paths: 6,
            lambda: 0.1,
            omega_mode: OmegaMode::Auto,
            delta_sw_ms: 0.5,
            bandwidth_hz: 4.0e8,
            c_max: 12.0,
            realizations: 100,
            seed: 1,
            precoder_mode: PrecoderMode::Hybrid,
            schemes: vec![Scheme::Hydrawave, Scheme::Sing, Scheme::Rand, Scheme::Xhaus],
        }
    }
}

impl SimConfig {
    pub fn p_tx_max_w(&self) -> f64 {
        dbm_to_watts(self.p_tx_max_dbm)
    }

    pub fn p_rx_max_w(&self) -> f64 {
        dbm_to_watts(self.p_rx_max_dbm)
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn delta_sw_s(&self) -> f64 {
        self.delta_sw_ms * 1e-3
    }

    pub fn rate_model(&self) -> RateModel {
        RateModel::new(0.5, self.c_max, self.bandwidth_hz)
    }

    /// Groups-per-window limit in effect: the digital architecture has one
    /// RF chain per antenna.
    pub fn effective_n_rf(&self) -> usize {
        match self.precoder_mode {
            PrecoderMode::Digital => self.n_tx,
            _ => self.n_rf,
        }
    }

    pub fn precoder_config(&self) -> PrecoderConfig {
        PrecoderConfig {
            n_rf: self.n_rf,
            l_tx: self.l_tx,
            d_f: self.d_f,
            d_w: self.d_w,
            p_tx_max: self.p_tx_max_w(),
            p_rx_max: self.p_rx_max_w(),
            noise_power: self.noise_w(),
            n_bis: self.n_bis,
            n_rand: self.n_rand,
            n_iter: self.n_iter,
            mode: self.precoder_mode,
            ..PrecoderConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fail = |key: &str, message: String| {
            Err(Error::Config {
                line: None,
                key: key.to_string(),
                message,
            })
        };
        if self.n_tx != self.l_tx * self.n_rf {
            return fail(
                "n_tx",
                format!(
                    "n_tx must equal l_tx * n_rf ({} != {} * {})",
                    self.n_tx, self.l_tx, self.n_rf
                ),
            );
        }
        for (key, v) in [
            ("n_tx", self.n_tx),
            ("l_tx", self.l_tx),
            ("n_rf", self.n_rf),
            ("n_rx", self.n_rx),
            ("d_f", self.d_f),
            ("d_w", self.d_w),
            ("g_total", self.g_total),
            ("k_total", self.k_total),
            ("n_iter", self.n_iter),
            ("n_paths", self.n_paths),
            ("realizations", self.realizations),
        ] {
            if v < 1 {
                return fail(key, format!("{key} must be at least 1"));
            }
        }
        if !self.k_total.is_multiple_of(self.g_total) {
            return fail(
                "k_total",
                format!(
                    "k_total must divide equally among groups ({} % {} != 0)",
                    self.k_total, self.g_total
                ),
            );
        }
        if !(self.bits_per_group > 0.0) {
            return fail("bits_per_group", "payload must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) || !(self.c_max > 0.0) {
            return fail("bandwidth_hz", "rate model values must be positive".into());
        }
        if self.lambda < 0.0 {
            return fail("lambda", "lambda must be nonnegative".into());
        }
        if self.delta_sw_ms < 0.0 {
            return fail("delta_sw_ms", "switching delay must be nonnegative".into());
        }
        if let OmegaMode::Fixed(v) = self.omega_mode {
            if v < 0.0 {
                return fail("omega_mode", "fixed omega must be nonnegative".into());
            }
        }
        if self.schemes.is_empty() {
            return fail("schemes", "at least one scheme required".into());
        }
        Ok(())
    }
}

fn parse_usize_list<const N: usize>(line: usize, key: &str, v: &str) -> Result<[usize; N], Error> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::Config {
            line: Some(line),
            key: key.into(),
            message: format!("expected {N} comma-separated values, got {}", parts.len()),
        });
    }
    let mut out = [0usize; N];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.parse().map_err(|_| Error::Config {
            line: Some(line),
            key: key.into(),
            message: format!("'{p}' is not a nonnegative integer"),
        })?;
    }
    Ok(out)
}

/// Parses the flat `key = value` format: UTF-8, `#` comments, one pair per
/// line. Unknown keys are rejected; an empty file yields the defaults.
pub fn parse_config_str(text: &str) -> Result<SimConfig, Error> {
    let mut cfg = SimConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: Some(line_no),
                key: line.to_string(),
                message: "expected key=value".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |message: String| Error::Config {
            line: Some(line_no),
            key: key.to_string(),
            message,
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("'{v}' is not a number")))
        };
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| bad(format!("'{v}' is not an integer")))
        };
        match key {
            "n_tx" => cfg.n_tx = parse_usize(value)?,
            "l_tx" => cfg.l_tx = parse_usize(value)?,
            "n_rf" => cfg.n_rf = parse_usize(value)?,
            "n_rx" => cfg.n_rx = parse_usize(value)?,
            "d_f" => cfg.d_f = parse_usize(value)?,
            "d_w" => cfg.d_w = parse_usize(value)?,
            "p_tx_max_dbm" => cfg.p_tx_max_dbm = parse_f64(value)?,
            "p_rx_max_dbm" => cfg.p_rx_max_dbm = parse_f64(value)?,
            "noise_dbm" => cfg.noise_dbm = parse_f64(value)?,
            "g_total" => cfg.g_total = parse_usize(value)?,
            "k_total" => cfg.k_total = parse_usize(value)?,
            "bits_per_group" => cfg.bits_per_group = parse_f64(value)?,
            "n_bis" => cfg.n_bis = parse_usize_list::<3>(line_no, key, value)?,
            "n_rand" => cfg.n_rand = parse_usize_list::<3>(line_no, key, value)?,
            "n_iter" => cfg.n_iter = parse_usize(value)?,
            "n_paths" => cfg.n_paths = parse_usize(value)?,
            "lambda" => cfg.lambda = parse_f64(value)?,
            "omega_mode" => {
                cfg.omega_mode = if value.eq_ignore_ascii_case("auto") {
                    OmegaMode::Auto
                } else {
                    OmegaMode::Fixed(parse_f64(value)?)
                }
            }
            "delta_sw_ms" => cfg.delta_sw_ms = parse_f64(value)?,
            "bandwidth_hz" => cfg.bandwidth_hz = parse_f64(value)?,
            "c_max" => cfg.c_max = parse_f64(value)?,
            "realizations" => cfg.realizations = parse_usize(value)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("'{value}' is not a valid seed")))?
            }
            "precoder_mode" => cfg.precoder_mode = value.parse().map_err(|e: String| bad(e))?,
            "schemes" => {
                let mut schemes = Vec::new();
                for part in value.split(',') {
                    schemes.push(part.parse::<Scheme>().map_err(&bad)?);
                }
                cfg.schemes = schemes;
            }
            other => {
                return Err(Error::Config {
                    line: Some(line_no),
                    key: other.to_string(),
                    message: "unknown key".into(),
                });
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn parse_config(path: &std::path::Path) -> Result<SimConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    parse_config_str(&text)
}

/// Serializes a config back into the flat text form; the output parses to
/// an equal configuration.
pub fn emit_config(cfg: &SimConfig) -> String {
    let omega = match cfg.omega_mode {
        OmegaMode::Auto => "auto".to_string(),
        OmegaMode::Fixed(v) => format!("{v}"),
    };
    let schemes: Vec<&str> = cfg.schemes.iter().map(|s| s.as_str()).collect();
    format!(
        "n_tx={}\nl_tx={}\nn_rf={}\nn_rx={}\nd_f={}\nd_w={}\n\
         p_tx_max_dbm={}\np_rx_max_dbm={}\nnoise_dbm={}\n\
         g_total={}\nk_total={}\nbits_per_group={}\n\
         n_bis={},{},{}\nn_rand={},{},{}\nn_iter={}\nn_paths={}\n\
         lambda={}\nomega_mode={}\ndelta_sw_ms={}\nbandwidth_hz={}\nc_max={}\n\
         realizations={}\nseed={}\nprecoder_mode={}\nschemes={}\n",
        cfg.n_tx,
        cfg.l_tx,
        cfg.n_rf,
        cfg.n_rx,
        cfg.d_f,
        cfg.d_w,
        cfg.p_tx_max_dbm,
        cfg.p_rx_max_dbm,
        cfg.noise_dbm,
        cfg.g_total,
        cfg.k_total,
        cfg.bits_per_group,
        cfg.n_bis[0],
        cfg.n_bis[1],
        cfg.n_bis[2],
        cfg.n_rand[0],
        cfg.n_rand[1],
        cfg.n_rand[2],
        cfg.n_iter,
        cfg.n_paths,
        cfg.lambda,
        omega,
        cfg.delta_sw_ms,
        cfg.bandwidth_hz,
        cfg.c_max,
        cfg.realizations,
        cfg.seed,
        cfg.precoder_mode.as_str(),
        schemes.join(",")
    )
}

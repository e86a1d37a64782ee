//! Geometric mmWave channel generation, receiver/group topology, and
//! inter-group correlation statistics.
//!
//! Channels follow the narrowband geometric model: a handful of propagation
//! paths, each a complex Gaussian gain times an outer product of transmit
//! and receive steering vectors on half-wavelength uniform linear arrays.
//! Path gains are unit-variance and no large-scale loss is applied, so the
//! expected squared Frobenius norm of a channel equals `N_tx * N_rx`.

use crate::linalg::{CMat, C64};
use crate::rng::Rng;
use crate::Error;
use std::f64::consts::PI;

/// Half-wavelength uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize) -> Self {
        assert!(n_elements >= 1, "array needs at least one element");
        Self { n_elements }
    }
}

/// Unit-norm array response for the given angle, entry
/// `m = exp(j pi m sin(angle)) / sqrt(n)`.
pub fn steering_vector(geometry: ArrayGeometry, angle: f64) -> Vec<C64> {
    let n = geometry.n_elements;
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|m| C64::from_polar(scale, PI * m as f64 * angle.sin()))
        .collect()
}

/// One geometric channel realization of shape `N_rx x N_tx`.
pub fn generate_channel(
    geometry_tx: ArrayGeometry,
    geometry_rx: ArrayGeometry,
    n_paths: usize,
    rng: &mut Rng,
) -> CMat {
    assert!(n_paths >= 1, "need at least one propagation path");
    let n_tx = geometry_tx.n_elements;
    let n_rx = geometry_rx.n_elements;
    let gain = ((n_tx * n_rx) as f64 / n_paths as f64).sqrt();
    let mut h = CMat::zeros(n_rx, n_tx);
    for _ in 0..n_paths {
        let alpha = rng.complex_normal();
        let theta = rng.angle();
        let phi = rng.angle();
        let a_rx = steering_vector(geometry_rx, theta);
        let a_tx = steering_vector(geometry_tx, phi);
        for r in 0..n_rx {
            let lead = alpha * a_rx[r] * gain;
            for c in 0..n_tx {
                h[(r, c)] += lead * a_tx[c].conj();
            }
        }
    }
    h
}

/// Per-receiver channels plus the group partition and payload sizes.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// `H_k`, one per receiver, all `N_rx x N_tx`.
    pub channels: Vec<CMat>,
    /// Disjoint receiver-index sets covering all receivers.
    pub groups: Vec<Vec<usize>>,
    /// Payload per group in bits.
    pub bits: Vec<f64>,
}

impl ChannelSet {
    pub fn new(
        channels: Vec<CMat>,
        groups: Vec<Vec<usize>>,
        bits: Vec<f64>,
    ) -> Result<Self, Error> {
        if groups.len() != bits.len() {
            return Err(Error::InvalidArgument(
                "one payload size per group required".into(),
            ));
        }
        if let Some(first) = channels.first() {
            let shape = (first.rows, first.cols);
            if channels.iter().any(|h| (h.rows, h.cols) != shape) {
                return Err(Error::DimensionMismatch(
                    "all receiver channels must share dimensions".into(),
                ));
            }
        }
        let mut seen = vec![false; channels.len()];
        for g in &groups {
            for &k in g {
                if k >= channels.len() || seen[k] {
                    return Err(Error::InvalidArgument(
                        "groups must be disjoint subsets of the receiver set".into(),
                    ));
                }
                seen[k] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "groups must cover every receiver".into(),
            ));
        }
        if bits.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::InvalidArgument(
                "payload sizes must be positive".into(),
            ));
        }
        Ok(Self {
            channels,
            groups,
            bits,
        })
    }

    pub fn n_receivers(&self) -> usize {
        self.channels.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_rx(&self) -> usize {
        self.channels.first().map_or(0, |h| h.rows)
    }

    pub fn n_tx(&self) -> usize {
        self.channels.first().map_or(0, |h| h.cols)
    }

    /// Group index of a receiver.
    pub fn group_of(&self, receiver: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&receiver))
            .expect("receiver not in any group")
    }

    /// Payload sizes normalized by the largest one, in (0, 1].
    pub fn bits_normalized(&self) -> Vec<f64> {
        let max = self.bits.iter().cloned().fold(f64::MIN, f64::max);
        self.bits.iter().map(|b| b / max).collect()
    }

    /// Flat dump (receiver, row, col, re, im) for fixture replay.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("receiver,row,col,re,im\n");
        for (k, h) in self.channels.iter().enumerate() {
            for r in 0..h.rows {
                for c in 0..h.cols {
                    let v = h[(r, c)];
                    out.push_str(&format!("{},{},{},{},{}\n", k, r, c, v.re, v.im));
                }
            }
        }
        out
    }
}

/// Reads back the per-receiver channel matrices of a [`ChannelSet::to_csv`]
/// dump; pair with a group partition and payload sizes to replay fixtures.
pub fn channels_from_csv(text: &str) -> Result<Vec<CMat>, Error> {
    let mut entries: Vec<(usize, usize, usize, C64)> = Vec::new();
    let mut shape = (0usize, 0usize, 0usize);
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 && line.starts_with("receiver,") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::InvalidArgument(format!(
                "channel dump line {} has {} fields, expected 5",
                idx + 1,
                parts.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, Error> {
            s.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("bad number '{s}' at line {}", idx + 1))
            })
        };
        let k = parse(parts[0])? as usize;
        let r = parse(parts[1])? as usize;
        let c = parse(parts[2])? as usize;
        shape = (shape.0.max(k + 1), shape.1.max(r + 1), shape.2.max(c + 1));
        entries.push((k, r, c, C64::new(parse(parts[3])?, parse(parts[4])?)));
    }
    let mut channels = vec![CMat::zeros(shape.1, shape.2); shape.0];
    for (k, r, c, v) in entries {
        channels[k][(r, c)] = v;
    }
    Ok(channels)
}

/// Generates a channel set with receivers divided equally among groups.
pub fn generate_channel_set(
    n_tx: usize,
    n_rx: usize,
    n_paths: usize,
    g_total: usize,
    k_total: usize,
    bits_per_group: f64,
    rng: &mut Rng,
) -> ChannelSet {
    assert!(g_total >= 1 && k_total >= g_total && k_total.is_multiple_of(g_total));
    let tx = ArrayGeometry::new(n_tx);
    let rx = ArrayGeometry::new(n_rx);
    let channels: Vec<CMat> = (0..k_total)
        .map(|_| generate_channel(tx, rx, n_paths, rng))
        .collect();
    let per_group = k_total / g_total;
    let groups: Vec<Vec<usize>> = (0..g_total)
        .map(|g| (g * per_group..(g + 1) * per_group).collect())
        .collect();
    let bits = vec![bits_per_group; g_total];
    ChannelSet::new(channels, groups, bits).expect("equal-split topology is always valid")
}

/// Mean of the column-major vectorized member channels of one group.
pub fn mean_group_vector(chs: &ChannelSet, group: usize) -> Result<Vec<C64>, Error> {
    let members = chs.groups.get(group).ok_or(Error::EmptyGroup(group))?;
    if members.is_empty() {
        return Err(Error::EmptyGroup(group));
    }
    let len = chs.n_rx() * chs.n_tx();
    let mut mean = vec![C64::new(0.0, 0.0); len];
    for &k in members {
        for (m, v) in mean.iter_mut().zip(chs.channels[k].vec_col_major()) {
            *m += v;
        }
    }
    let inv = 1.0 / members.len() as f64;
    for m in &mut mean {
        *m *= inv;
    }
    Ok(mean)
}

/// Symmetric inter-group correlation matrix with entries in [0, 1] and a
/// zero diagonal by convention.
#[derive(Debug, Clone)]
pub struct IgcMatrix {
    pub n_groups: usize,
    rho: Vec<f64>,
}

impl IgcMatrix {
    pub fn from_entries(n_groups: usize, mut entries: impl FnMut(usize, usize) -> f64) -> Self {
        let mut rho = vec![0.0; n_groups * n_groups];
        for j in 0..n_groups {
            for l in (j + 1)..n_groups {
                let v = entries(j, l);
                assert!(
                    (0.0..=1.0 + 1e-12).contains(&v),
                    "correlation out of range: {v}"
                );
                rho[j * n_groups + l] = v;
                rho[l * n_groups + j] = v;
            }
        }
        Self { n_groups, rho }
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.rho[j * self.n_groups + l]
    }

    /// Pairwise sum over a window, iterated in canonical sorted-pair order.
    pub fn window_sum(&self, window: &[usize]) -> f64 {
        let mut sorted = window.to_vec();
        sorted.sort_unstable();
        let mut acc = 0.0;
        for (a, &j) in sorted.iter().enumerate() {
            for &l in &sorted[a + 1..] {
                acc += self.get(j, l);
            }
        }
        acc
    }
}

/// Normalized absolute inner products of the groups' mean channel vectors.
pub fn igc(chs: &ChannelSet) -> Result<IgcMatrix, Error> {
    if chs.n_groups() < 2 {
        return Err(Error::InvalidArgument(
            "IGC needs at least two groups".into(),
        ));
    }
    let means: Vec<Vec<C64>> = (0..chs.n_groups())
        .map(|g| mean_group_vector(chs, g))
        .collect::<Result<_, _>>()?;
    let norms: Vec<f64> = means
        .iter()
        .map(|m| m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    for (g, &n) in norms.iter().enumerate() {
        if n <= 0.0 {
            return Err(Error::DegenerateGroup(g));
        }
    }
    Ok(IgcMatrix::from_entries(chs.n_groups(), |j, l| {
        let dot: C64 = means[j]
            .iter()
            .zip(&means[l])
            .map(|(a, b)| a.conj() * b)
            .sum();
        (dot.norm() / (norms[j] * norms[l])).min(1.0)
    }))
}

//! Malfunction detection: high-pass filter each snapshot, take its GFT, and
//! flag the current snapshot when any coefficient magnitude exceeds a
//! threshold calibrated on the most recent history.

use crate::error::{GspError, Result};
use crate::filtering::{apply_filter, GraphFilter};
use crate::graph::{Graph, GraphSignal};
use crate::spectral::{gft, SpectralBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Calibration {
    /// Largest per-snapshot peak over the window; assumes clean history.
    #[default]
    Max,
    /// Median of the per-snapshot peaks; tolerates a corrupted snapshot.
    Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub filter: GraphFilter,
    pub window: usize,
    pub threshold_scale: f64,
    pub calibration: Calibration,
    /// Apply the filter to `A^norm` rather than `A`.
    pub normalized: bool,
}

impl DetectorConfig {
    pub fn new(filter: GraphFilter) -> Self {
        DetectorConfig {
            filter,
            window: 3,
            threshold_scale: 1.0,
            calibration: Calibration::Max,
            normalized: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(GspError::InvalidArgument(
                "window must be at least 1".into(),
            ));
        }
        if !(self.threshold_scale.is_finite() && self.threshold_scale > 0.0) {
            return Err(GspError::InvalidArgument(format!(
                "threshold scale must be positive, got {}",
                self.threshold_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub flagged: bool,
    /// `(spectral index, |coefficient|)` above threshold, largest first.
    pub offending: Vec<(usize, f64)>,
    pub threshold: f64,
}

/// `|gft(h(A)s)_k|` for every spectral index `k`.
pub fn filtered_spectrum(
    g: &Graph,
    b: &SpectralBasis,
    cfg: &DetectorConfig,
    s: &GraphSignal,
) -> Result<Vec<f64>> {
    let filtered = apply_filter(g, &cfg.filter, s, cfg.normalized)?;
    Ok(gft(b, &filtered)?.iter().map(|z| z.norm()).collect())
}

fn peak(values: &[f64]) -> f64 {
    values.iter().cloned().fold(0.0, f64::max)
}

pub fn detect_malfunction(
    g: &Graph,
    b: &SpectralBasis,
    cfg: &DetectorConfig,
    history: &[GraphSignal],
    current: &GraphSignal,
) -> Result<Detection> {
    cfg.validate()?;
    if b.graph_id() != g.id() {
        return Err(GspError::GraphMismatch);
    }
    if history.len() < cfg.window {
        return Err(GspError::InsufficientHistory {
            needed: cfg.window,
            got: history.len(),
        });
    }
    let mut peaks = history[history.len() - cfg.window..]
        .iter()
        .map(|h| filtered_spectrum(g, b, cfg, h).map(|m| peak(&m)))
        .collect::<Result<Vec<f64>>>()?;
    let base = match cfg.calibration {
        Calibration::Max => peak(&peaks),
        Calibration::Median => {
            peaks.sort_by(f64::total_cmp);
            let k = peaks.len();
            if k % 2 == 1 {
                peaks[k / 2]
            } else {
                0.5 * (peaks[k / 2 - 1] + peaks[k / 2])
            }
        }
    };
    let threshold = cfg.threshold_scale * base;
    let mags = filtered_spectrum(g, b, cfg, current)?;
    let mut offending: Vec<(usize, f64)> = mags
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > threshold)
        .map(|(k, m)| (k, *m))
        .collect();
    offending.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(Detection {
        flagged: !offending.is_empty(),
        offending,
        threshold,
    })
}

//! Kernel weights and the smoothing step that turns per-time win counts
//! into the pooled matrices `X̃(t) = Σ_m W_h(t_m, t) X^(m)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::data::{add_record, raw_count_matrix_at, CountMatrix, Dataset};
use crate::error::{Error, Result};
use crate::solver::TheoryParams;

/// Weights below this are flushed to zero.
pub const WEIGHT_FLUSH: f64 = 1e-300;

/// Connectivity threshold for smoothed matrices.
pub const SMOOTHED_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    /// Standard density form `W(x)`; both have unit integral and `sup W < 1`.
    pub fn profile(self, x: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            KernelFamily::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Lipschitz constant of `W`.
    pub fn lipschitz(self) -> f64 {
        match self {
            // sup |φ'(x)| = φ(1)
            KernelFamily::Gaussian => (-0.5f64).exp() / (2.0 * PI).sqrt(),
            KernelFamily::Epanechnikov => 1.5,
        }
    }

    pub fn sup(self) -> f64 {
        self.profile(0.0)
    }

    /// Whether `W > 0` everywhere, so smoothed supports never shrink over time.
    pub fn full_support(self) -> bool {
        matches!(self, KernelFamily::Gaussian)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Epanechnikov => "epanechnikov",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelFamily::Gaussian),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            other => Err(Error::Validation(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        Ok(KernelSpec { family, bandwidth })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn lipschitz(&self) -> f64 {
        self.family.lipschitz()
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        KernelSpec::new(self.family, bandwidth)
    }
}

/// `W_h(s, t) = W((s - t) / h) / h`.
pub fn kernel_weight(spec: &KernelSpec, s: f64, t: f64) -> f64 {
    let h = spec.bandwidth;
    let w = spec.family.profile((s - t) / h) / h;
    if w < WEIGHT_FLUSH {
        0.0
    } else {
        w
    }
}

/// Smoothed count matrix at time `t`, summed record by record.
pub fn smooth_counts(dataset: &Dataset, spec: &KernelSpec, t: f64) -> CountMatrix {
    let mut m = CountMatrix::zeros(dataset.n_teams());
    for r in dataset.records() {
        let w = kernel_weight(spec, r.time, t);
        if w > 0.0 {
            add_record(&mut m, r, w);
        }
    }
    m
}

/// Anything that yields the count matrix the solver should fit at time `t`.
pub trait CountSource: Sync {
    fn dataset(&self) -> &Dataset;

    fn counts_at(&self, t: f64) -> CountMatrix;

    /// Weight one game played at time `t` carries in `counts_at(t)`.
    fn self_weight(&self, t: f64) -> f64;

    /// Entries at or below this are treated as absent edges.
    fn eps(&self) -> f64;
}

/// Kernel smoother with the per-time raw matrices cached, so each
/// evaluation costs one weighted sum over distinct times.
pub struct KernelSmoother<'a> {
    dataset: &'a Dataset,
    spec: KernelSpec,
    raw: Vec<CountMatrix>,
}

impl<'a> KernelSmoother<'a> {
    pub fn new(dataset: &'a Dataset, spec: KernelSpec) -> Self {
        let raw = (0..dataset.distinct_times().len()).map(|k| raw_count_matrix_at(dataset, k)).collect();
        KernelSmoother { dataset, spec, raw }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }
}

impl CountSource for KernelSmoother<'_> {
    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn counts_at(&self, t: f64) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.dataset.n_teams());
        for (tk, raw) in self.dataset.distinct_times().iter().zip(&self.raw) {
            let w = kernel_weight(&self.spec, *tk, t);
            if w > 0.0 {
                m.add_scaled(raw, w);
            }
        }
        m
    }

    fn self_weight(&self, t: f64) -> f64 {
        kernel_weight(&self.spec, t, t)
    }

    fn eps(&self) -> f64 {
        SMOOTHED_EPS
    }
}

/// No smoothing: the counts observed at exactly `t` (the static per-time fit).
pub struct PerTimeCounts<'a> {
    dataset: &'a Dataset,
}

impl<'a> PerTimeCounts<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        PerTimeCounts { dataset }
    }
}

impl CountSource for PerTimeCounts<'_> {
    fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn counts_at(&self, t: f64) -> CountMatrix {
        match self.dataset.time_index(t) {
            Some(k) => raw_count_matrix_at(self.dataset, k),
            None => CountMatrix::zeros(self.dataset.n_teams()),
        }
    }

    fn self_weight(&self, _t: f64) -> f64 {
        1.0
    }

    fn eps(&self) -> f64 {
        0.0
    }
}

fn check_theory(params: &TheoryParams) -> Result<()> {
    params.validate()?;
    if params.n_teams < 2 {
        return Err(Error::Domain(format!("need N >= 2, got {}", params.n_teams)));
    }
    Ok(())
}

fn bandwidth_with_log(params: &TheoryParams, log_term: f64) -> f64 {
    let n = params.n_teams as f64;
    let t = params.t_games;
    let bias = t.powf(-(1.0 + params.eta));
    let variance = (36.0 * (1.0 - params.p_min) * log_term
        / (params.c_s * params.c_s * params.d_min * (n - 1.0) * t))
        .max(0.0)
        .cbrt();
    bias.max(variance)
}

/// Pointwise bandwidth schedule:
/// `h = max{T^-(1+η), (36 (1-p_min) log N / (C_s² D_m (N-1) T))^(1/3)}`.
pub fn bandwidth_pointwise(params: &TheoryParams) -> Result<f64> {
    check_theory(params)?;
    Ok(bandwidth_with_log(params, (params.n_teams as f64).ln()))
}

/// Uniform-in-time schedule, with `log(N T^(3+3η))` in place of `log N`.
pub fn bandwidth_uniform(params: &TheoryParams) -> Result<f64> {
    check_theory(params)?;
    let log_term = (params.n_teams as f64).ln() + (3.0 + 3.0 * params.eta) * params.t_games.ln();
    Ok(bandwidth_with_log(params, log_term))
}

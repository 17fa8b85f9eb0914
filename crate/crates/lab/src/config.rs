//! Experiment configuration: TOML with one section per experiment kind.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use cxlab::bg::MAX_CAPS;
use cxlab::extension::{QuadratureSpec, Rule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Identities,
    Decay,
    Rescale,
    Kakeya,
    Bg,
    Acs,
    Bl,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Identities => "identities",
            Kind::Decay => "decay",
            Kind::Rescale => "rescale",
            Kind::Kakeya => "kakeya",
            Kind::Bg => "bg",
            Kind::Acs => "acs",
            Kind::Bl => "bl",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub points_per_axis: usize,
    pub rule: String,
    pub nyquist: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            points_per_axis: 0,
            rule: "midpoint".into(),
            nyquist: 8.0,
        }
    }
}

impl QuadratureConfig {
    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            points_per_axis: self.points_per_axis,
            rule: if self.rule == "gauss-legendre" {
                Rule::GaussLegendre
            } else {
                Rule::Midpoint
            },
            nyquist: self.nyquist,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    pub block_det: usize,
    pub vmatrix: usize,
    pub hessian: usize,
    pub takagi: usize,
    pub wedge: usize,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            block_det: 1000,
            vmatrix: 200,
            hessian: 100,
            takagi: 500,
            wedge: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub t: Vec<f64>,
    pub sigma: f64,
    pub side: f64,
    pub ray: [f64; 2],
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            t: cxlab::extension::default_t_values(),
            sigma: 0.5,
            side: 4.0,
            ray: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescaleConfig {
    pub instances: usize,
    pub w_max: f64,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self {
            instances: 50,
            w_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KakeyaConfig {
    pub deltas: Vec<f64>,
    pub family_size: usize,
    pub nu: f64,
    pub floor: f64,
    pub samples: usize,
    pub induction_delta: f64,
    pub induction_nu: f64,
    pub induction_bound: f64,
    pub epsilon_max: f64,
}

impl Default for KakeyaConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.25, 0.125, 0.0625, 0.03125],
            family_size: 50,
            nu: 0.05,
            floor: 0.5,
            samples: 10_000_000,
            induction_delta: 1.0 / 64.0,
            induction_nu: 0.25,
            induction_bound: 8.0,
            epsilon_max: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BgConfig {
    #[serde(rename = "K")]
    pub scales: Vec<usize>,
    /// `R` as a multiple of `K`.
    pub r_over_k: usize,
    pub c: f64,
    pub narrow_constant: f64,
    pub mode: String,
    pub count_bound: f64,
    pub amplitudes: usize,
    pub pairs_per_amplitude: usize,
}

impl Default for BgConfig {
    fn default() -> Self {
        Self {
            scales: vec![8, 16, 32],
            r_over_k: 2,
            c: cxlab::bg::DEFAULT_C,
            narrow_constant: cxlab::bg::DEFAULT_NARROW_CONSTANT,
            mode: "proxy".into(),
            count_bound: 10.0,
            amplitudes: 20,
            pairs_per_amplitude: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcsConfig {
    pub size: usize,
    pub trials: usize,
}

impl Default for AcsConfig {
    fn default() -> Self {
        Self { size: 12, trials: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlConfig {
    pub trials: usize,
    pub seeds: usize,
}

impl Default for BlConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seeds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<String>,
    pub quadrature: QuadratureConfig,
    pub identities: IdentitiesConfig,
    pub decay: DecayConfig,
    pub rescale: RescaleConfig,
    pub kakeya: KakeyaConfig,
    pub bg: BgConfig,
    pub acs: AcsConfig,
    pub bl: BlConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            n: 2,
            k: 2,
            seed: 0,
            workers: 1,
            out: None,
            quadrature: QuadratureConfig::default(),
            identities: IdentitiesConfig::default(),
            decay: DecayConfig::default(),
            rescale: RescaleConfig::default(),
            kakeya: KakeyaConfig::default(),
            bg: BgConfig::default(),
            acs: AcsConfig::default(),
            bl: BlConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl FromStr for ExperimentConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        text.parse()
    }

    /// Every violated constraint, each naming its field. Only the section
    /// of the configured kind is checked; with no kind, all of them are.
    pub fn validate(&self) -> Vec<Violation> {
        let wants = |k: Kind| self.kind.is_none_or(|own| own == k);
        let mut v = Vec::new();
        let mut bad = |field: &str, message: String| {
            v.push(Violation {
                field: field.into(),
                message,
            })
        };
        if !(2..=4).contains(&self.n) {
            bad("n", format!("must lie in [2, 4], got {}", self.n));
        }
        if self.k < 2 || self.k > self.n {
            bad("k", format!("must satisfy 2 ≤ k ≤ n = {}, got {}", self.n, self.k));
        }
        if self.workers == 0 {
            bad("workers", "must be at least 1".into());
        }
        let q = &self.quadrature;
        if !(q.nyquist >= 4.0) {
            bad("quadrature.nyquist", format!("must be at least 4, got {}", q.nyquist));
        }
        if q.rule != "midpoint" && q.rule != "gauss-legendre" {
            bad(
                "quadrature.rule",
                format!("must be \"midpoint\" or \"gauss-legendre\", got {:?}", q.rule),
            );
        }
        if wants(Kind::Decay) {
            let d = &self.decay;
            if !(d.sigma > 0.0) {
                bad("decay.sigma", format!("must be positive, got {}", d.sigma));
            }
            if !(d.side > 0.0 && d.side <= 4.0) {
                bad("decay.side", format!("must lie in (0, 4], got {}", d.side));
            }
            if d.t.iter().any(|t| !(*t > 0.0)) {
                bad("decay.t", "every t must be positive".into());
            }
            if ((d.ray[0].hypot(d.ray[1])) - 1.0).abs() > 1e-12 {
                bad("decay.ray", "must be a unit vector".into());
            }
        }
        if wants(Kind::Rescale)
            && !(self.rescale.w_max >= 0.0) {
                bad(
                    "rescale.w_max",
                    format!("must be nonnegative, got {}", self.rescale.w_max),
                );
            }
        if wants(Kind::Kakeya) {
            let kk = &self.kakeya;
            if kk.deltas.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                bad("kakeya.deltas", "every δ must lie in (0, 1]".into());
            }
            if kk.family_size == 0 {
                bad("kakeya.family_size", "must be at least 1".into());
            }
            if !(0.0..=0.5).contains(&kk.nu) {
                bad("kakeya.nu", format!("must lie in [0, 0.5], got {}", kk.nu));
            }
            if kk.samples < 10_000 {
                bad("kakeya.samples", format!("must be at least 10000, got {}", kk.samples));
            }
            if !(kk.induction_delta > 0.0 && kk.induction_nu > 0.0 && kk.induction_delta <= kk.induction_nu) {
                bad(
                    "kakeya.induction_delta",
                    "need 0 < induction_delta ≤ induction_nu".into(),
                );
            }
            if kk.induction_nu > 0.5 {
                bad(
                    "kakeya.induction_nu",
                    format!("must be at most 0.5, got {}", kk.induction_nu),
                );
            }
        }
        if wants(Kind::Bg) {
            let b = &self.bg;
            if b.scales.is_empty() {
                bad("bg.K", "need at least one scale".into());
            }
            for &k in &b.scales {
                if k < 4 {
                    bad("bg.K", format!("every K must be at least 4, got {k}"));
                }
                let caps = (k as f64).powi(2 * self.n as i32 - 2);
                if caps > MAX_CAPS as f64 {
                    bad(
                        "bg.K",
                        format!("budget: K^(2n-2) = {caps} exceeds {MAX_CAPS} caps at K = {k}"),
                    );
                }
            }
            if b.r_over_k == 0 {
                bad("bg.r_over_k", "must be at least 1".into());
            }
            if !(b.c > 0.0) {
                bad("bg.c", format!("must be positive, got {}", b.c));
            }
            if b.mode != "proxy" && b.mode != "definition" {
                bad(
                    "bg.mode",
                    format!("must be \"proxy\" or \"definition\", got {:?}", b.mode),
                );
            }
        }
        if wants(Kind::Acs)
            && (self.acs.size == 0 || !self.acs.size.is_multiple_of(2)) {
                bad(
                    "acs.size",
                    format!("must be a positive even number, got {}", self.acs.size),
                );
            }
        if wants(Kind::Bl)
            && self.bl.seeds == 0 {
                bad("bl.seeds", "must be at least 1".into());
            }
        v
    }
}

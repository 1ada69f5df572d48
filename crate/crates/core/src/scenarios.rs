//! What-if scenarios, one-at-a-time sensitivity and seeded Monte Carlo.
//!
//! Monte Carlo draws come from ChaCha8 (`rand_chacha`): the generator is
//! seeded once from the 64-bit seed and sample `i` reads stream `i`, so every
//! sample is reproducible on its own and the result does not depend on how
//! samples are scheduled across threads.

use crate::diary::{DiaryDataset, ParticipantId, PlatformCategory};
use crate::engine::{cohort_mean, footprint, EngineError, FootprintOptions};
use crate::params::{DeviceField, DeviceKind, ModelParams, ParamKey, ParamValue, ParamsError, Resolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_200_101;

pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario file: {0}")]
    Parse(String),
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("duration scale for {platform} must be finite and ≥ 0 (got {value})")]
    NegativeScale {
        platform: PlatformCategory,
        value: f64,
    },
    #[error("no sensitivity ranges given")]
    EmptyRanges,
    #[error("range for `{key}`: {message}")]
    InvalidRange { key: ParamKey, message: String },
    #[error("distribution for `{key}`: {message}")]
    InvalidDistribution { key: ParamKey, message: String },
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorOverrides {
    /// Hours on the key device are re-attributed to the value device.
    #[serde(default)]
    pub device_substitution: BTreeMap<DeviceKind, DeviceKind>,
    #[serde(default)]
    pub forced_resolution: BTreeMap<PlatformCategory, Resolution>,
    /// Multiplies the hours of every entry on the platform.
    #[serde(default)]
    pub duration_scale: BTreeMap<PlatformCategory, f64>,
}

impl BehaviorOverrides {
    pub fn is_empty(&self) -> bool {
        self.device_substitution.is_empty()
            && self.forced_resolution.is_empty()
            && self.duration_scale.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Dotted parameter paths, e.g. `devices.smart_tv.embodied_kg`.
    #[serde(default)]
    pub param_overrides: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub behavior: BehaviorOverrides,
}

impl ScenarioSpec {
    pub fn identity() -> Self {
        ScenarioSpec {
            name: "identity".into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for key in self.param_overrides.keys() {
            key.parse::<ParamKey>()
                .map_err(|_| ScenarioError::UnknownKey(key.clone()))?;
        }
        for (platform, value) in &self.behavior.duration_scale {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(ScenarioError::NegativeScale {
                    platform: *platform,
                    value: *value,
                });
            }
        }
        Ok(())
    }

    /// Spec equivalent to applying `self` and then `other`.
    pub fn merge(&self, other: &ScenarioSpec) -> ScenarioSpec {
        let mut param_overrides = self.param_overrides.clone();
        param_overrides.extend(other.param_overrides.clone());

        let (a, b) = (&self.behavior, &other.behavior);
        let mut device_substitution = BTreeMap::new();
        for d in DeviceKind::ALL {
            let via = a.device_substitution.get(&d).copied().unwrap_or(d);
            let to = b.device_substitution.get(&via).copied().unwrap_or(via);
            if to != d {
                device_substitution.insert(d, to);
            }
        }
        let mut forced_resolution = a.forced_resolution.clone();
        forced_resolution.extend(b.forced_resolution.clone());
        let mut duration_scale = a.duration_scale.clone();
        for (platform, factor) in &b.duration_scale {
            *duration_scale.entry(*platform).or_insert(1.0) *= factor;
        }
        ScenarioSpec {
            name: format!("{}+{}", self.name, other.name),
            description: None,
            param_overrides,
            behavior: BehaviorOverrides {
                device_substitution,
                forced_resolution,
                duration_scale,
            },
        }
    }
}

pub fn scenario_from_toml_str(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn scenario_to_toml_string(spec: &ScenarioSpec) -> String {
    toml::to_string(spec).expect("scenario specs always serialize")
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    scenario_from_toml_str(&text)
}

/// Scenarios shipped with the library, by file stem.
pub const BUILTIN_SCENARIOS: [(&str, &str); 3] = [
    ("low_res_default", include_str!("../data/scenarios/low_res_default.toml")),
    ("phone_instead_of_tv", include_str!("../data/scenarios/phone_instead_of_tv.toml")),
    ("half_paid_hours", include_str!("../data/scenarios/half_paid_hours.toml")),
];

pub fn builtin_scenario(name: &str) -> Option<ScenarioSpec> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| scenario_from_toml_str(text).expect("built-in scenarios are valid"))
}

/// Returns transformed copies. Order: parameter overrides, device
/// substitution, forced resolution, duration scaling.
pub fn apply_scenario(
    spec: &ScenarioSpec,
    params: &ModelParams,
    ds: &DiaryDataset,
) -> Result<(ModelParams, DiaryDataset), ScenarioError> {
    spec.validate()?;
    let mut new_params = params.clone();
    for (key, value) in &spec.param_overrides {
        let key: ParamKey = key
            .parse()
            .map_err(|_| ScenarioError::UnknownKey(key.clone()))?;
        key.set(&mut new_params, value)?;
    }
    new_params.validate()?;

    let b = &spec.behavior;
    if b.is_empty() {
        return Ok((new_params, ds.clone()));
    }
    let entries = ds
        .entries()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if let Some(d) = e.device {
                e.device = Some(b.device_substitution.get(&d).copied().unwrap_or(d));
            }
            if let Some(r) = b.forced_resolution.get(&e.platform) {
                e.resolution = *r;
            }
            if let Some(f) = b.duration_scale.get(&e.platform) {
                e.hours *= f;
            }
            e
        })
        .collect();
    Ok((new_params, ds.with_entries_unchecked(entries)))
}

/// Weekly GWP total of one participant, or the cohort mean for `None`.
pub fn weekly_total(
    params: &ModelParams,
    ds: &DiaryDataset,
    participant: Option<&ParticipantId>,
    opts: FootprintOptions,
) -> Result<f64, EngineError> {
    let breakdown = match participant {
        Some(id) => footprint(params, ds, id, opts)?,
        None => cohort_mean(params, ds, opts)?,
    };
    Ok(breakdown.total().gwp.total())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub key: ParamKey,
    pub fraction: f64,
    pub low_value: f64,
    pub high_value: f64,
    pub low_total: f64,
    pub high_total: f64,
    pub swing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub baseline_total: f64,
    /// Sorted by swing, largest first; ties keep parameter order.
    pub rows: Vec<SensitivityRow>,
}

/// Relative half-widths used when none are given: ±30 % on embodied
/// emissions and ±20 % on everything else.
pub fn default_ranges() -> Vec<(ParamKey, f64)> {
    ParamKey::numeric_keys()
        .into_iter()
        .map(|k| match k {
            ParamKey::Device(_, DeviceField::EmbodiedKg) => (k, 0.30),
            _ => (k, 0.20),
        })
        .collect()
}

fn perturbed(params: &ModelParams, key: ParamKey, value: f64) -> Result<ModelParams, ParamsError> {
    let mut p = params.clone();
    key.set_f64(&mut p, value)?;
    p.validate()?;
    Ok(p)
}

/// One-at-a-time sensitivity: each parameter at `base·(1 ± fraction)`.
pub fn tornado(
    params: &ModelParams,
    ds: &DiaryDataset,
    participant: Option<&ParticipantId>,
    ranges: &[(ParamKey, f64)],
) -> Result<SensitivityReport, ScenarioError> {
    if ranges.is_empty() {
        return Err(ScenarioError::EmptyRanges);
    }
    let opts = FootprintOptions::default();
    let baseline_total = weekly_total(params, ds, participant, opts)?;
    let mut rows = Vec::with_capacity(ranges.len());
    for &(key, fraction) in ranges {
        let invalid = |message: String| ScenarioError::InvalidRange { key, message };
        if !(fraction.is_finite() && fraction >= 0.0) {
            return Err(invalid(format!("fraction must be ≥ 0 (got {fraction})")));
        }
        let base = key
            .get_f64(params)
            .ok_or_else(|| invalid("not a numeric parameter".into()))?;
        let (low_value, high_value) = (base * (1.0 - fraction), base * (1.0 + fraction));
        let low = perturbed(params, key, low_value).map_err(|e| invalid(e.to_string()))?;
        let high = perturbed(params, key, high_value).map_err(|e| invalid(e.to_string()))?;
        let low_total = weekly_total(&low, ds, participant, opts)?;
        let high_total = weekly_total(&high, ds, participant, opts)?;
        rows.push(SensitivityRow {
            key,
            fraction,
            low_value,
            high_value,
            low_total,
            high_total,
            swing: (high_total - low_total).abs(),
        });
    }
    // stable sort keeps input order among equal swings
    rows.sort_by(|a, b| b.swing.total_cmp(&a.swing));
    Ok(SensitivityReport {
        baseline_total,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Uniform { low: f64, high: f64 },
    Triangular { low: f64, mode: f64, high: f64 },
}

impl Distribution {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { low, high } | Distribution::Triangular { low, high, .. } => {
                (low, high)
            }
        }
    }

    fn check(&self) -> Result<(), String> {
        let (low, high) = self.bounds();
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return Err(format!("bounds must satisfy low ≤ high (got {low}, {high})"));
        }
        if let Distribution::Triangular { mode, .. } = *self {
            if !(low <= mode && mode <= high) {
                return Err(format!("mode {mode} outside [{low}, {high}]"));
            }
        }
        Ok(())
    }

    /// Inverse CDF at `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    low + u * (high - low)
                }
            }
            Distribution::Triangular { low, mode, high } => {
                if low == high {
                    return low;
                }
                let width = high - low;
                if u < (mode - low) / width {
                    low + (u * width * (mode - low)).sqrt()
                } else {
                    high - ((1.0 - u) * width * (high - mode)).sqrt()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub distributions: BTreeMap<ParamKey, Distribution>,
}

impl McConfig {
    /// Triangular distributions peaked at the current value, spanning `±fraction`.
    pub fn triangular_around(
        params: &ModelParams,
        ranges: &[(ParamKey, f64)],
        seed: u64,
        n_samples: usize,
    ) -> Result<McConfig, ScenarioError> {
        let mut distributions = BTreeMap::new();
        for &(key, fraction) in ranges {
            let base = key.get_f64(params).ok_or_else(|| ScenarioError::InvalidDistribution {
                key,
                message: "not a numeric parameter".into(),
            })?;
            distributions.insert(
                key,
                Distribution::Triangular {
                    low: base * (1.0 - fraction),
                    mode: base,
                    high: base * (1.0 + fraction),
                },
            );
        }
        Ok(McConfig {
            seed,
            n_samples,
            distributions,
        })
    }

    /// Checks bounds, and that parameters stay valid at both ends of every range.
    pub fn validate(&self, params: &ModelParams) -> Result<(), ScenarioError> {
        if self.n_samples == 0 {
            return Err(ScenarioError::NoSamples);
        }
        for (&key, dist) in &self.distributions {
            let invalid = |message: String| ScenarioError::InvalidDistribution { key, message };
            if !key.is_numeric() {
                return Err(invalid("not a numeric parameter".into()));
            }
            dist.check().map_err(invalid)?;
            let (low, high) = dist.bounds();
            for v in [low, high] {
                perturbed(params, key, v).map_err(|e| invalid(e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSummary {
    pub n_samples: usize,
    pub mean: f64,
    pub sd: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Nearest-rank percentile of sorted values.
pub fn nearest_rank(sorted: &[f64], percent: f64) -> f64 {
    let n = sorted.len();
    let rank = ((percent / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Weekly totals for every sample, in sample order.
pub fn monte_carlo_samples(
    params: &ModelParams,
    ds: &DiaryDataset,
    participant: Option<&ParticipantId>,
    cfg: &McConfig,
) -> Result<Vec<f64>, ScenarioError> {
    cfg.validate(params)?;
    if let Some(id) = participant {
        ds.participant(id).map_err(EngineError::from)?;
    }
    let opts = FootprintOptions::default();
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let mut p = params.clone();
            for (&key, dist) in &cfg.distributions {
                key.set_f64(&mut p, dist.quantile(rng.gen::<f64>()))?;
            }
            Ok(weekly_total(&p, ds, participant, opts)?)
        })
        .collect()
}

pub fn summarize_samples(samples: &[f64]) -> McSummary {
    let n = samples.len();
    // shifted sums: exact when all samples are equal
    let shift = samples[0];
    let mean_shift = samples.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = (shift + mean_shift).clamp(sorted[0], sorted[n - 1]);
    let sd = if n > 1 {
        let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    McSummary {
        n_samples: n,
        mean,
        sd,
        p5: nearest_rank(&sorted, 5.0),
        p50: nearest_rank(&sorted, 50.0),
        p95: nearest_rank(&sorted, 95.0),
    }
}

pub fn monte_carlo(
    params: &ModelParams,
    ds: &DiaryDataset,
    participant: Option<&ParticipantId>,
    cfg: &McConfig,
) -> Result<McSummary, ScenarioError> {
    Ok(summarize_samples(&monte_carlo_samples(params, ds, participant, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diary::{synth_average_participant, AVERAGE_PARTICIPANT};
    use crate::engine::hourly_intensity;
    use crate::params::{default_params, NetworkSegment};
    use proptest::prelude::*;

    fn avg() -> ParticipantId {
        ParticipantId::new(AVERAGE_PARTICIPANT)
    }

    fn total(p: &ModelParams, ds: &DiaryDataset) -> f64 {
        weekly_total(p, ds, Some(&avg()), FootprintOptions::default()).unwrap()
    }

    #[test]
    fn identity_is_a_no_op() {
        let (p, ds) = (default_params(), synth_average_participant());
        let (p2, ds2) = apply_scenario(&ScenarioSpec::identity(), &p, &ds).unwrap();
        assert_eq!(p, p2);
        assert_eq!(ds, ds2);
    }

    #[test]
    fn builtins_parse_and_round_trip() {
        for (name, _) in BUILTIN_SCENARIOS {
            let spec = builtin_scenario(name).unwrap();
            assert_eq!(scenario_from_toml_str(&scenario_to_toml_string(&spec)).unwrap(), spec);
        }
        let low = builtin_scenario("low_res_default").unwrap();
        assert_eq!(low.behavior.forced_resolution.len(), 4);
    }

    #[test]
    fn rejects_bad_specs() {
        let err = scenario_from_toml_str("name = \"x\"\n[param_overrides]\n\"devices.toaster.power_watts\" = 3.0\n");
        assert!(matches!(err, Err(ScenarioError::UnknownKey(_))));
        let err = scenario_from_toml_str("name = \"x\"\n[behavior.duration_scale]\npaid_platform = -1.0\n");
        assert!(matches!(err, Err(ScenarioError::NegativeScale { .. })));
        let err = scenario_from_toml_str("name = \"x\"\n[behavior.device_substitution]\nsmart_tv = \"toaster\"\n");
        assert!(matches!(err, Err(ScenarioError::Parse(_))));
        // override that breaks a parameter invariant
        let spec = scenario_from_toml_str("name = \"x\"\n[param_overrides]\n\"devices.smart_tv.lifetime_years\" = 0.0\n").unwrap();
        let r = apply_scenario(&spec, &default_params(), &synth_average_participant());
        assert!(matches!(r, Err(ScenarioError::Params(_))));
    }

    #[test]
    fn phone_instead_of_tv_moves_hours_and_cuts_intensity() {
        let (p, ds) = (default_params(), synth_average_participant());
        let spec = builtin_scenario("phone_instead_of_tv").unwrap();
        let (p2, ds2) = apply_scenario(&spec, &p, &ds).unwrap();
        let before = footprint(&p, &ds, &avg(), FootprintOptions::default()).unwrap().by_device();
        let after = footprint(&p2, &ds2, &avg(), FootprintOptions::default()).unwrap().by_device();
        assert!(!after.contains_key(&DeviceKind::SmartTv));
        let tv_hours = before[&DeviceKind::SmartTv].hours;
        let phone_gain = after[&DeviceKind::Smartphone].hours - before[&DeviceKind::Smartphone].hours;
        assert!((phone_gain - tv_hours).abs() < 1e-12);
        // every substituted hour moves from TV to native phone intensity
        let tv_rate = before[&DeviceKind::SmartTv].gwp.total() / tv_hours;
        let phone_rate = (after[&DeviceKind::Smartphone].gwp.total() - before[&DeviceKind::Smartphone].gwp.total()) / phone_gain;
        let ratio = tv_rate / phone_rate;
        let table = hourly_intensity(&p, DeviceKind::SmartTv, Resolution::Automatic).unwrap().total()
            / hourly_intensity(&p, DeviceKind::Smartphone, Resolution::Automatic).unwrap().total();
        assert!((ratio - table).abs() < 1e-9, "{ratio} vs {table}");
        assert!((10.0..=12.0).contains(&ratio));
    }

    #[test]
    fn forced_low_resolution_scales_tv_traffic() {
        let (p, ds) = (default_params(), synth_average_participant());
        let spec = scenario_from_toml_str("name = \"paid360\"\n[behavior.forced_resolution]\npaid_platform = \"360p\"\n").unwrap();
        let (p2, ds2) = apply_scenario(&spec, &p, &ds).unwrap();
        let key = (PlatformCategory::PaidPlatform, DeviceKind::SmartTv);
        let before = footprint(&p, &ds, &avg(), FootprintOptions::default()).unwrap().by_platform_device()[&key];
        let after = footprint(&p2, &ds2, &avg(), FootprintOptions::default()).unwrap().by_platform_device()[&key];
        assert!((after.gwp.traffic_kg / before.gwp.traffic_kg - 0.3 / 1.8).abs() < 1e-12);
        assert_eq!(after.gwp.production_kg, before.gwp.production_kg);
        assert_eq!(after.gwp.operation_kg, before.gwp.operation_kg);
    }

    #[test]
    fn half_paid_hours_halves_paid_gwp() {
        let (p, ds) = (default_params(), synth_average_participant());
        let (p2, ds2) = apply_scenario(&builtin_scenario("half_paid_hours").unwrap(), &p, &ds).unwrap();
        let b = footprint(&p, &ds, &avg(), FootprintOptions::default()).unwrap().by_platform();
        let a = footprint(&p2, &ds2, &avg(), FootprintOptions::default()).unwrap().by_platform();
        let paid = PlatformCategory::PaidPlatform;
        assert!((a[&paid].gwp.total() - 0.5 * b[&paid].gwp.total()).abs() < 1e-12);
        assert_eq!(a[&PlatformCategory::FreePlatform], b[&PlatformCategory::FreePlatform]);
    }

    #[test]
    fn merge_composes_substitutions() {
        let mut a = ScenarioSpec::identity();
        a.behavior.device_substitution.insert(DeviceKind::SmartTv, DeviceKind::LaptopPc);
        let mut b = ScenarioSpec::identity();
        b.behavior.device_substitution.insert(DeviceKind::LaptopPc, DeviceKind::Smartphone);
        let m = a.merge(&b);
        assert_eq!(m.behavior.device_substitution[&DeviceKind::SmartTv], DeviceKind::Smartphone);
        assert_eq!(m.behavior.device_substitution[&DeviceKind::LaptopPc], DeviceKind::Smartphone);
        let (p, ds) = (default_params(), synth_average_participant());
        let (pa, dsa) = apply_scenario(&a, &p, &ds).unwrap();
        let seq = apply_scenario(&b, &pa, &dsa).unwrap();
        assert_eq!(seq, apply_scenario(&m, &p, &ds).unwrap());
    }

    fn arb_spec(tag: &'static str) -> impl Strategy<Value = ScenarioSpec> {
        let devices = prop::sample::select(DeviceKind::ALL.to_vec());
        let platforms = prop::sample::select(PlatformCategory::ALL.to_vec());
        let res = prop::sample::select(Resolution::CONCRETE.to_vec());
        (
            prop::collection::btree_map(devices.clone(), devices, 0..3),
            prop::collection::btree_map(platforms.clone(), res, 0..3),
            prop::collection::btree_map(platforms, 0.0..3.0f64, 0..3),
            prop::option::of(0.3..0.9f64),
        )
            .prop_map(move |(sub, res, scale, grid)| ScenarioSpec {
                name: tag.into(),
                description: None,
                param_overrides: grid
                    .map(|g| (format!("grid_{tag}.kg_per_kwh"), ParamValue::Number(g)))
                    .into_iter()
                    .collect(),
                behavior: BehaviorOverrides {
                    device_substitution: sub,
                    forced_resolution: res,
                    duration_scale: scale,
                },
            })
    }

    proptest! {
        #[test]
        fn sequential_equals_merged_for_disjoint_specs(a in arb_spec("device"), b in arb_spec("network")) {
            // make behaviour keys disjoint: B leaves A's platforms alone
            let mut b = b;
            b.behavior.forced_resolution.retain(|k, _| !a.behavior.forced_resolution.contains_key(k));
            b.behavior.duration_scale.retain(|k, _| !a.behavior.duration_scale.contains_key(k));
            let (p, ds) = (default_params(), synth_average_participant());
            let (pa, dsa) = apply_scenario(&a, &p, &ds).unwrap();
            let seq = apply_scenario(&b, &pa, &dsa).unwrap();
            let merged = apply_scenario(&a.merge(&b), &p, &ds).unwrap();
            prop_assert_eq!(&seq, &merged);
            prop_assert_eq!(total(&seq.0, &seq.1), total(&merged.0, &merged.1));
        }

        #[test]
        fn application_leaves_inputs_untouched(a in arb_spec("device")) {
            let (p, ds) = (default_params(), synth_average_participant());
            let (p0, ds0) = (p.clone(), ds.clone());
            let _ = apply_scenario(&a, &p, &ds).unwrap();
            prop_assert_eq!(p, p0);
            prop_assert_eq!(ds, ds0);
        }
    }

    #[test]
    fn tornado_zero_ranges_have_zero_swing() {
        let (p, ds) = (default_params(), synth_average_participant());
        let ranges: Vec<_> = default_ranges().into_iter().map(|(k, _)| (k, 0.0)).collect();
        let report = tornado(&p, &ds, Some(&avg()), &ranges).unwrap();
        assert!(report.rows.iter().all(|r| r.swing == 0.0));
        let keys: Vec<_> = report.rows.iter().map(|r| r.key).collect();
        assert_eq!(keys, ParamKey::numeric_keys());
        assert!(matches!(tornado(&p, &ds, Some(&avg()), &[]), Err(ScenarioError::EmptyRanges)));
    }

    #[test]
    fn tornado_embodied_swing_is_linear() {
        let (p, ds) = (default_params(), synth_average_participant());
        let key = ParamKey::Device(DeviceKind::SmartTv, DeviceField::EmbodiedKg);
        let report = tornado(&p, &ds, Some(&avg()), &[(key, 0.5)]).unwrap();
        let tv = footprint(&p, &ds, &avg(), FootprintOptions::default()).unwrap().by_device()[&DeviceKind::SmartTv];
        // ±50 % moves TV production by ±0.5, so the swing is 1.0 × TV production
        assert!((report.rows[0].swing - tv.gwp.production_kg).abs() < 1e-12);
    }

    #[test]
    fn tornado_ranks_and_brackets_baseline() {
        let (p, ds) = (default_params(), synth_average_participant());
        let report = tornado(&p, &ds, Some(&avg()), &default_ranges()).unwrap();
        for w in report.rows.windows(2) {
            assert!(w[0].swing >= w[1].swing);
        }
        for r in &report.rows {
            let (lo, hi) = (r.low_total.min(r.high_total), r.low_total.max(r.high_total));
            assert!(lo <= report.baseline_total + 1e-12 && report.baseline_total <= hi + 1e-12, "{}", r.key);
        }
        assert_eq!(report, tornado(&p, &ds, Some(&avg()), &default_ranges()).unwrap());
        let bad = tornado(&p, &ds, Some(&avg()), &[(ParamKey::GridDeviceIntensity, 1.5)]);
        assert!(matches!(bad, Err(ScenarioError::InvalidRange { .. })));
    }

    #[test]
    fn quantiles_match_closed_forms() {
        let u = Distribution::Uniform { low: 2.0, high: 4.0 };
        assert_eq!(u.quantile(0.25), 2.5);
        let t = Distribution::Triangular { low: 0.0, mode: 1.0, high: 2.0 };
        // symmetric triangle: median at the mode, F(0.5) = 1/8
        assert!((t.quantile(0.5) - 1.0).abs() < 1e-15);
        assert!((t.quantile(0.125) - 0.5).abs() < 1e-15);
        let d = Distribution::Triangular { low: 3.0, mode: 3.0, high: 3.0 };
        assert_eq!(d.quantile(0.7), 3.0);
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], 50.0), 3.0);
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], 5.0), 1.0);
        assert_eq!(nearest_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], 95.0), 5.0);
    }

    #[test]
    fn degenerate_monte_carlo_equals_baseline() {
        let (p, ds) = (default_params(), synth_average_participant());
        let ranges: Vec<_> = default_ranges().into_iter().map(|(k, _)| (k, 0.0)).collect();
        let cfg = McConfig::triangular_around(&p, &ranges, DEFAULT_SEED, 500).unwrap();
        let s = monte_carlo(&p, &ds, Some(&avg()), &cfg).unwrap();
        let base = total(&p, &ds);
        assert_eq!(s.mean, base);
        assert_eq!(s.sd, 0.0);
        assert_eq!((s.p5, s.p50, s.p95), (base, base, base));
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let (p, ds) = (default_params(), synth_average_participant());
        let cfg = McConfig::triangular_around(&p, &default_ranges(), 7, 300).unwrap();
        let a = monte_carlo(&p, &ds, Some(&avg()), &cfg).unwrap();
        let b = monte_carlo(&p, &ds, Some(&avg()), &cfg).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&p, &ds, Some(&avg()), &McConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn grid_uncertainty_propagates_linearly() {
        let (p, ds) = (default_params(), synth_average_participant());
        let base = total(&p, &ds);
        let traffic = footprint(&p, &ds, &avg(), FootprintOptions::default()).unwrap().total().gwp.traffic_kg;
        let g = p.grid_network.kg_per_kwh;
        let mut distributions = BTreeMap::new();
        distributions.insert(ParamKey::GridNetworkIntensity, Distribution::Uniform { low: 0.9 * g, high: 1.1 * g });
        let cfg = McConfig { seed: 11, n_samples: 20_000, distributions };
        let s = monte_carlo(&p, &ds, Some(&avg()), &cfg).unwrap();
        assert!((s.mean / base - 1.0).abs() < 0.005);
        // total = rest + traffic·(γ/γ₀): the 5–95 % band of U(0.9, 1.1) is 0.18 wide
        let expected_band = 0.18 * traffic;
        assert!(((s.p95 - s.p5) / expected_band - 1.0).abs() < 0.02);
        // uniform sd = width / √12
        let expected_sd = 0.2 * traffic / 12f64.sqrt();
        assert!((s.sd / expected_sd - 1.0).abs() < 0.03);
    }

    #[test]
    fn invalid_distributions_rejected() {
        let p = default_params();
        let mut distributions = BTreeMap::new();
        distributions.insert(ParamKey::Network(NetworkSegment::Access), Distribution::Uniform { low: -1.0, high: 1.0 });
        let cfg = McConfig { seed: 1, n_samples: 10, distributions };
        assert!(matches!(cfg.validate(&p), Err(ScenarioError::InvalidDistribution { .. })));
        let mut distributions = BTreeMap::new();
        distributions.insert(ParamKey::GridDeviceIntensity, Distribution::Triangular { low: 0.5, mode: 0.9, high: 0.7 });
        let cfg = McConfig { seed: 1, n_samples: 10, distributions };
        assert!(matches!(cfg.validate(&p), Err(ScenarioError::InvalidDistribution { .. })));
        let cfg = McConfig { seed: 1, n_samples: 0, distributions: BTreeMap::new() };
        assert!(matches!(cfg.validate(&p), Err(ScenarioError::NoSamples)));
    }
}

//! Model parameters: device life-cycle data, bitrates, network and grid intensities.
//!
//! Every numeric leaf of [`ModelParams`] is addressable through a [`ParamKey`]
//! (`devices.smart_tv.embodied_kg`, `bitrates.360p`, `grid_network.kg_per_kwh`, ...),
//! which is what scenario overrides, tornado ranges and Monte Carlo
//! distributions refer to.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Days per year used to convert device lifetimes. Leap days are ignored.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Upper sanity bound for any grid intensity, kg CO₂-eq./kWh.
pub const MAX_GRID_KG_PER_KWH: f64 = 2.0;

/// The parameter file compiled into the binary. Equal to `to_toml_string(&default_params())`.
pub const DEFAULT_PARAMS_TOML: &str = include_str!("../data/default_params.toml");

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("cannot read parameter file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed parameter file: {0}")]
    Parse(String),
    #[error("validation error: {field}: {message}")]
    Validation { field: String, message: String },
    #[error("configuration error: no bitrate entry for resolution {0}")]
    MissingBitrate(Resolution),
    #[error("unknown parameter key `{0}`")]
    UnknownKey(String),
    #[error("parameter `{key}` expects {expected}")]
    TypeMismatch { key: String, expected: &'static str },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ParamsError {
    ParamsError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Smartphone,
    Tablet,
    LaptopPc,
    SmartTv,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 4] = [
        DeviceKind::Smartphone,
        DeviceKind::Tablet,
        DeviceKind::LaptopPc,
        DeviceKind::SmartTv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Smartphone => "smartphone",
            DeviceKind::Tablet => "tablet",
            DeviceKind::LaptopPc => "laptop_pc",
            DeviceKind::SmartTv => "smart_tv",
        }
    }

    /// Human-readable column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            DeviceKind::Smartphone => "Smartphone",
            DeviceKind::Tablet => "Tablet",
            DeviceKind::LaptopPc => "Laptop/PC",
            DeviceKind::SmartTv => "Smart TV",
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smartphone" => Ok(DeviceKind::Smartphone),
            "tablet" => Ok(DeviceKind::Tablet),
            "laptop_pc" | "laptop" | "pc" => Ok(DeviceKind::LaptopPc),
            "smart_tv" | "tv" => Ok(DeviceKind::SmartTv),
            other => Err(format!("unknown device kind `{other}`")),
        }
    }
}

/// Video resolution as chosen by a viewer. `Automatic` and `Unknown` defer to
/// the device's native resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resolution {
    #[serde(rename = "360p")]
    R360p,
    #[serde(rename = "480p")]
    R480p,
    #[serde(rename = "720p")]
    R720p,
    #[serde(rename = "1080p")]
    R1080p,
    #[serde(rename = "automatic")]
    Automatic,
    #[serde(rename = "unknown")]
    Unknown,
}

impl Resolution {
    /// Concrete resolutions in ascending order.
    pub const CONCRETE: [Resolution; 4] = [
        Resolution::R360p,
        Resolution::R480p,
        Resolution::R720p,
        Resolution::R1080p,
    ];

    pub fn is_concrete(self) -> bool {
        !matches!(self, Resolution::Automatic | Resolution::Unknown)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Resolution::R360p => "360p",
            Resolution::R480p => "480p",
            Resolution::R720p => "720p",
            Resolution::R1080p => "1080p",
            Resolution::Automatic => "automatic",
            Resolution::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Resolution {
    type Err = String;

    /// Accepts the survey's answer labels as aliases; "I don't know" maps to
    /// `automatic` since such viewers had not changed the default setting.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "360p" | "low" => Ok(Resolution::R360p),
            "480p" | "middle" => Ok(Resolution::R480p),
            "720p" | "hd" => Ok(Resolution::R720p),
            "1080p" | "uhd" | "u-hd" => Ok(Resolution::R1080p),
            "automatic" | "auto" | "dont_know" | "don't know" | "i don't know" => {
                Ok(Resolution::Automatic)
            }
            "unknown" => Ok(Resolution::Unknown),
            other => Err(format!("unknown resolution `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    /// Embodied production emissions, kg CO₂-eq.
    pub embodied_kg: f64,
    pub lifetime_years: f64,
    /// Power draw under medium load, W.
    pub power_watts: f64,
    pub native_resolution: Resolution,
    /// Overall daily use of the device, h/day. Denominator of the production allocation.
    pub daily_use_hours: f64,
}

impl DeviceProfile {
    pub fn lifetime_days(&self) -> f64 {
        self.lifetime_years * DAYS_PER_YEAR
    }

    /// Embodied emissions allocated to one hour of use.
    pub fn production_kg_per_hour(&self) -> f64 {
        self.embodied_kg / (self.lifetime_days() * self.daily_use_hours)
    }

    pub fn power_kw(&self) -> f64 {
        self.power_watts / 1000.0
    }

    fn validate(&self, kind: DeviceKind) -> Result<(), ParamsError> {
        let prefix = format!("devices.{kind}");
        for (name, value) in [
            ("embodied_kg", self.embodied_kg),
            ("lifetime_years", self.lifetime_years),
            ("power_watts", self.power_watts),
            ("daily_use_hours", self.daily_use_hours),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(
                    format!("{prefix}.{name}"),
                    format!("must be > 0 (got {value})"),
                ));
            }
        }
        if self.daily_use_hours > 24.0 {
            return Err(invalid(
                format!("{prefix}.daily_use_hours"),
                format!("must be <= 24 (got {})", self.daily_use_hours),
            ));
        }
        if !self.native_resolution.is_concrete() {
            return Err(invalid(
                format!("{prefix}.native_resolution"),
                "must be a concrete resolution",
            ));
        }
        Ok(())
    }
}

/// Data volume per hour of video, GB/h, per concrete resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitrateTable(pub BTreeMap<Resolution, f64>);

impl BitrateTable {
    pub fn get(&self, resolution: Resolution) -> Option<f64> {
        self.0.get(&resolution).copied()
    }

    fn validate(&self) -> Result<(), ParamsError> {
        let mut previous: Option<(Resolution, f64)> = None;
        for (&res, &rate) in &self.0 {
            if !res.is_concrete() {
                return Err(invalid(
                    format!("bitrates.{res}"),
                    "only concrete resolutions may carry a bitrate",
                ));
            }
            if !(rate.is_finite() && rate > 0.0) {
                return Err(invalid(
                    format!("bitrates.{res}"),
                    format!("must be > 0 (got {rate})"),
                ));
            }
            if let Some((prev_res, prev_rate)) = previous {
                if rate < prev_rate {
                    return Err(invalid(
                        format!("bitrates.{res}"),
                        format!(
                            "must be >= bitrates.{prev_res} ({prev_rate}) to stay monotone (got {rate})"
                        ),
                    ));
                }
            }
            previous = Some((res, rate));
        }
        Ok(())
    }
}

/// Electricity intensity of moving one GB from data center to the home.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkIntensity {
    pub access_kwh_per_gb: f64,
    pub core_edge_kwh_per_gb: f64,
    pub datacenter_kwh_per_gb: f64,
}

impl NetworkIntensity {
    /// Combined intensity, kWh/GB.
    pub fn total(&self) -> f64 {
        self.access_kwh_per_gb + self.core_edge_kwh_per_gb + self.datacenter_kwh_per_gb
    }

    fn validate(&self) -> Result<(), ParamsError> {
        for (name, value) in [
            ("access_kwh_per_gb", self.access_kwh_per_gb),
            ("core_edge_kwh_per_gb", self.core_edge_kwh_per_gb),
            ("datacenter_kwh_per_gb", self.datacenter_kwh_per_gb),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(invalid(
                    format!("network.{name}"),
                    format!("must be >= 0 (got {value})"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridIntensity {
    pub region_label: String,
    pub kg_per_kwh: f64,
}

impl GridIntensity {
    fn validate(&self, field: &str) -> Result<(), ParamsError> {
        // Zero is allowed so a fully renewable supply can be modelled.
        if !(self.kg_per_kwh.is_finite()
            && self.kg_per_kwh >= 0.0
            && self.kg_per_kwh < MAX_GRID_KG_PER_KWH)
        {
            return Err(invalid(
                format!("{field}.kg_per_kwh"),
                format!(
                    "must be in [0, {MAX_GRID_KG_PER_KWH}) (got {})",
                    self.kg_per_kwh
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub devices: BTreeMap<DeviceKind, DeviceProfile>,
    pub bitrates: BitrateTable,
    pub network: NetworkIntensity,
    /// Grid used for device operation (household electricity).
    pub grid_device: GridIntensity,
    /// Grid used for network and data-center electricity.
    pub grid_network: GridIntensity,
    /// Source note per parameter key.
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        for kind in DeviceKind::ALL {
            let profile = self.devices.get(&kind).ok_or_else(|| {
                invalid(
                    format!("devices.{kind}"),
                    format!("missing device profile for {kind}"),
                )
            })?;
            profile.validate(kind)?;
        }
        self.bitrates.validate()?;
        for (kind, profile) in &self.devices {
            if self.bitrates.get(profile.native_resolution).is_none() {
                return Err(invalid(
                    format!("devices.{kind}.native_resolution"),
                    format!(
                        "no bitrate entry for native resolution {}",
                        profile.native_resolution
                    ),
                ));
            }
        }
        self.network.validate()?;
        self.grid_device.validate("grid_device")?;
        self.grid_network.validate("grid_network")?;
        Ok(())
    }

    pub fn device(&self, kind: DeviceKind) -> &DeviceProfile {
        // Presence of every kind is a validation invariant.
        &self.devices[&kind]
    }

    /// Resolution that is actually delivered for `chosen` on `device`.
    pub fn effective_resolution(&self, device: DeviceKind, chosen: Resolution) -> Resolution {
        if chosen.is_concrete() {
            chosen
        } else {
            self.device(device).native_resolution
        }
    }

    /// Bitrate in GB/h for a device at the chosen resolution.
    pub fn bitrate_for(&self, device: DeviceKind, chosen: Resolution) -> Result<f64, ParamsError> {
        let res = self.effective_resolution(device, chosen);
        self.bitrates
            .get(res)
            .ok_or(ParamsError::MissingBitrate(res))
    }
}

/// Free-function form of [`ModelParams::bitrate_for`].
pub fn bitrate_for(
    params: &ModelParams,
    device: DeviceKind,
    chosen: Resolution,
) -> Result<f64, ParamsError> {
    params.bitrate_for(device, chosen)
}

/// The published parameter set with back-derived grid intensities and daily use hours.
pub fn default_params() -> ModelParams {
    let device = |embodied_kg, lifetime_years, power_watts, native_resolution, daily_use_hours| {
        DeviceProfile {
            embodied_kg,
            lifetime_years,
            power_watts,
            native_resolution,
            daily_use_hours,
        }
    };
    let devices = BTreeMap::from([
        (
            DeviceKind::Smartphone,
            device(44.0, 3.0, 6.0, Resolution::R360p, 2.27),
        ),
        (
            DeviceKind::Tablet,
            device(138.0, 3.0, 7.0, Resolution::R480p, 0.60),
        ),
        (
            DeviceKind::LaptopPc,
            device(250.0, 6.0, 32.0, Resolution::R720p, 1.27),
        ),
        (
            DeviceKind::SmartTv,
            device(1000.0, 8.0, 200.0, Resolution::R1080p, 2.14),
        ),
    ]);
    let bitrates = BitrateTable(BTreeMap::from([
        (Resolution::R360p, 0.3),
        (Resolution::R480p, 0.45),
        (Resolution::R720p, 1.2),
        (Resolution::R1080p, 1.8),
    ]));

    let mut provenance = BTreeMap::new();
    for kind in DeviceKind::ALL {
        for field in ["embodied_kg", "lifetime_years", "power_watts"] {
            provenance.insert(format!("devices.{kind}.{field}"), "published: device life-cycle data".into());
        }
        provenance.insert(
            format!("devices.{kind}.native_resolution"),
            "published: resolution bitrates".into(),
        );
        let use_source = if kind == DeviceKind::Smartphone {
            "derived: per-hour production intensity fixed by a 36% traffic share of smartphone GWP"
        } else {
            "derived: embodied / (lifetime * 365 * published per-hour production intensity)"
        };
        provenance.insert(format!("devices.{kind}.daily_use_hours"), use_source.into());
    }
    for res in Resolution::CONCRETE {
        provenance.insert(format!("bitrates.{res}"), "published: resolution bitrates".into());
    }
    for field in [
        "access_kwh_per_gb",
        "core_edge_kwh_per_gb",
        "datacenter_kwh_per_gb",
    ] {
        provenance.insert(format!("network.{field}"), "published: network electricity intensities".into());
    }
    provenance.insert(
        "grid_device.kg_per_kwh".into(),
        "derived: published per-hour electricity intensity / device power".into(),
    );
    provenance.insert(
        "grid_network.kg_per_kwh".into(),
        "derived: published per-hour traffic intensity / (bitrate * network intensity)".into(),
    );

    ModelParams {
        devices,
        bitrates,
        network: NetworkIntensity {
            access_kwh_per_gb: 0.004,
            core_edge_kwh_per_gb: 0.02,
            datacenter_kwh_per_gb: 0.049,
        },
        grid_device: GridIntensity {
            region_label: "Germany".into(),
            kg_per_kwh: 0.62,
        },
        grid_network: GridIntensity {
            region_label: "EU-28".into(),
            kg_per_kwh: 0.55,
        },
        provenance,
    }
}

pub fn from_toml_str(text: &str) -> Result<ModelParams, ParamsError> {
    let params: ModelParams =
        toml::from_str(text).map_err(|e| ParamsError::Parse(e.to_string()))?;
    params.validate()?;
    Ok(params)
}

pub fn to_toml_string(params: &ModelParams) -> String {
    toml::to_string(params).expect("model parameters always serialize")
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams, ParamsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParamsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_toml_str(&text)
}

pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<(), ParamsError> {
    let path = path.as_ref();
    std::fs::write(path, to_toml_string(params)).map_err(|source| ParamsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceField {
    EmbodiedKg,
    LifetimeYears,
    PowerWatts,
    DailyUseHours,
    NativeResolution,
}

impl DeviceField {
    pub const NUMERIC: [DeviceField; 4] = [
        DeviceField::EmbodiedKg,
        DeviceField::LifetimeYears,
        DeviceField::PowerWatts,
        DeviceField::DailyUseHours,
    ];

    fn as_str(self) -> &'static str {
        match self {
            DeviceField::EmbodiedKg => "embodied_kg",
            DeviceField::LifetimeYears => "lifetime_years",
            DeviceField::PowerWatts => "power_watts",
            DeviceField::DailyUseHours => "daily_use_hours",
            DeviceField::NativeResolution => "native_resolution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetworkSegment {
    Access,
    CoreEdge,
    Datacenter,
}

impl NetworkSegment {
    pub const ALL: [NetworkSegment; 3] = [
        NetworkSegment::Access,
        NetworkSegment::CoreEdge,
        NetworkSegment::Datacenter,
    ];

    fn as_str(self) -> &'static str {
        match self {
            NetworkSegment::Access => "access_kwh_per_gb",
            NetworkSegment::CoreEdge => "core_edge_kwh_per_gb",
            NetworkSegment::Datacenter => "datacenter_kwh_per_gb",
        }
    }
}

/// Address of one leaf value in [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKey {
    Device(DeviceKind, DeviceField),
    Bitrate(Resolution),
    Network(NetworkSegment),
    GridDeviceIntensity,
    GridDeviceLabel,
    GridNetworkIntensity,
    GridNetworkLabel,
}

/// Value assigned to a [`ParamKey`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamKey {
    /// Every numeric key, in a fixed order.
    pub fn numeric_keys() -> Vec<ParamKey> {
        let mut keys = Vec::new();
        for kind in DeviceKind::ALL {
            for field in DeviceField::NUMERIC {
                keys.push(ParamKey::Device(kind, field));
            }
        }
        keys.extend(Resolution::CONCRETE.map(ParamKey::Bitrate));
        keys.extend(NetworkSegment::ALL.map(ParamKey::Network));
        keys.push(ParamKey::GridDeviceIntensity);
        keys.push(ParamKey::GridNetworkIntensity);
        keys
    }

    pub fn is_numeric(self) -> bool {
        !matches!(
            self,
            ParamKey::Device(_, DeviceField::NativeResolution)
                | ParamKey::GridDeviceLabel
                | ParamKey::GridNetworkLabel
        )
    }

    pub fn get(self, params: &ModelParams) -> Option<ParamValue> {
        use ParamValue::{Number, Text};
        Some(match self {
            ParamKey::Device(kind, field) => {
                let d = params.devices.get(&kind)?;
                match field {
                    DeviceField::EmbodiedKg => Number(d.embodied_kg),
                    DeviceField::LifetimeYears => Number(d.lifetime_years),
                    DeviceField::PowerWatts => Number(d.power_watts),
                    DeviceField::DailyUseHours => Number(d.daily_use_hours),
                    DeviceField::NativeResolution => Text(d.native_resolution.to_string()),
                }
            }
            ParamKey::Bitrate(res) => Number(params.bitrates.get(res)?),
            ParamKey::Network(NetworkSegment::Access) => Number(params.network.access_kwh_per_gb),
            ParamKey::Network(NetworkSegment::CoreEdge) => {
                Number(params.network.core_edge_kwh_per_gb)
            }
            ParamKey::Network(NetworkSegment::Datacenter) => {
                Number(params.network.datacenter_kwh_per_gb)
            }
            ParamKey::GridDeviceIntensity => Number(params.grid_device.kg_per_kwh),
            ParamKey::GridDeviceLabel => Text(params.grid_device.region_label.clone()),
            ParamKey::GridNetworkIntensity => Number(params.grid_network.kg_per_kwh),
            ParamKey::GridNetworkLabel => Text(params.grid_network.region_label.clone()),
        })
    }

    pub fn get_f64(self, params: &ModelParams) -> Option<f64> {
        match self.get(params)? {
            ParamValue::Number(v) => Some(v),
            ParamValue::Text(_) => None,
        }
    }

    /// Writes `value` without validating the result; call [`ModelParams::validate`] afterwards.
    pub fn set(self, params: &mut ModelParams, value: &ParamValue) -> Result<(), ParamsError> {
        let number = || match value {
            ParamValue::Number(v) => Ok(*v),
            ParamValue::Text(_) => Err(ParamsError::TypeMismatch {
                key: self.to_string(),
                expected: "a number",
            }),
        };
        let text = || match value {
            ParamValue::Text(s) => Ok(s.clone()),
            ParamValue::Number(_) => Err(ParamsError::TypeMismatch {
                key: self.to_string(),
                expected: "a string",
            }),
        };
        match self {
            ParamKey::Device(kind, field) => {
                let d = params
                    .devices
                    .get_mut(&kind)
                    .ok_or_else(|| ParamsError::UnknownKey(self.to_string()))?;
                match field {
                    DeviceField::EmbodiedKg => d.embodied_kg = number()?,
                    DeviceField::LifetimeYears => d.lifetime_years = number()?,
                    DeviceField::PowerWatts => d.power_watts = number()?,
                    DeviceField::DailyUseHours => d.daily_use_hours = number()?,
                    DeviceField::NativeResolution => {
                        d.native_resolution =
                            text()?.parse().map_err(|_| ParamsError::TypeMismatch {
                                key: self.to_string(),
                                expected: "a resolution such as \"720p\"",
                            })?
                    }
                }
            }
            ParamKey::Bitrate(res) => {
                params.bitrates.0.insert(res, number()?);
            }
            ParamKey::Network(NetworkSegment::Access) => {
                params.network.access_kwh_per_gb = number()?
            }
            ParamKey::Network(NetworkSegment::CoreEdge) => {
                params.network.core_edge_kwh_per_gb = number()?
            }
            ParamKey::Network(NetworkSegment::Datacenter) => {
                params.network.datacenter_kwh_per_gb = number()?
            }
            ParamKey::GridDeviceIntensity => params.grid_device.kg_per_kwh = number()?,
            ParamKey::GridDeviceLabel => params.grid_device.region_label = text()?,
            ParamKey::GridNetworkIntensity => params.grid_network.kg_per_kwh = number()?,
            ParamKey::GridNetworkLabel => params.grid_network.region_label = text()?,
        }
        Ok(())
    }

    pub fn set_f64(self, params: &mut ModelParams, value: f64) -> Result<(), ParamsError> {
        self.set(params, &ParamValue::Number(value))
    }
}

impl Serialize for ParamKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKey::Device(kind, field) => write!(f, "devices.{kind}.{}", field.as_str()),
            ParamKey::Bitrate(res) => write!(f, "bitrates.{res}"),
            ParamKey::Network(seg) => write!(f, "network.{}", seg.as_str()),
            ParamKey::GridDeviceIntensity => f.write_str("grid_device.kg_per_kwh"),
            ParamKey::GridDeviceLabel => f.write_str("grid_device.region_label"),
            ParamKey::GridNetworkIntensity => f.write_str("grid_network.kg_per_kwh"),
            ParamKey::GridNetworkLabel => f.write_str("grid_network.region_label"),
        }
    }
}

impl FromStr for ParamKey {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || ParamsError::UnknownKey(s.to_string());
        let parts: Vec<&str> = s.trim().split('.').collect();
        match parts.as_slice() {
            ["devices", kind, field] => {
                let kind: DeviceKind = kind.parse().map_err(|_| unknown())?;
                let field = match *field {
                    "embodied_kg" => DeviceField::EmbodiedKg,
                    "lifetime_years" => DeviceField::LifetimeYears,
                    "power_watts" => DeviceField::PowerWatts,
                    "daily_use_hours" => DeviceField::DailyUseHours,
                    "native_resolution" => DeviceField::NativeResolution,
                    _ => return Err(unknown()),
                };
                Ok(ParamKey::Device(kind, field))
            }
            ["bitrates", res] => {
                let res: Resolution = res.parse().map_err(|_| unknown())?;
                if !res.is_concrete() {
                    return Err(unknown());
                }
                Ok(ParamKey::Bitrate(res))
            }
            ["network", seg] => NetworkSegment::ALL
                .into_iter()
                .find(|s| s.as_str() == *seg)
                .map(ParamKey::Network)
                .ok_or_else(unknown),
            ["grid_device", "kg_per_kwh"] => Ok(ParamKey::GridDeviceIntensity),
            ["grid_device", "region_label"] => Ok(ParamKey::GridDeviceLabel),
            ["grid_network", "kg_per_kwh"] => Ok(ParamKey::GridNetworkIntensity),
            ["grid_network", "region_label"] => Ok(ParamKey::GridNetworkLabel),
            _ => Err(unknown()),
        }
    }
}

//! GWP model of one person's weekly video streaming.
//!
//! Every in-model diary entry contributes three addends:
//!
//! * production: embodied emissions per day of device lifetime, allocated by
//!   the share of the device's overall daily use spent streaming;
//! * operation: device power × hours × household grid intensity;
//! * traffic: bitrate × hours × network intensity × network grid intensity.
//!
//! All three are linear in hours, so the model is expressed through per-hour
//! intensities that are multiplied by each entry's duration.

use crate::diary::{DaytimeSlot, DiaryDataset, DiaryEntry, DiaryError, ParticipantId, PlatformCategory};
use crate::params::{DeviceKind, ModelParams, ParamsError, Resolution};
use serde::Serialize;
use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};
use thiserror::Error;

pub const WEEKS_PER_YEAR: f64 = 52.0;

/// Per-capita annual CO₂ budget compatible with 1.5 °C, kg.
pub const DEFAULT_ANNUAL_BUDGET_KG: f64 = 1609.0;

/// Column order of the per-hour intensity table.
pub const INTENSITY_TABLE_ORDER: [DeviceKind; 4] = [
    DeviceKind::LaptopPc,
    DeviceKind::Smartphone,
    DeviceKind::SmartTv,
    DeviceKind::Tablet,
];

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Diary(#[from] DiaryError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("annual budget must be positive (got {0})")]
    InvalidBudget(f64),
    #[error("weekly emissions must be non-negative (got {0})")]
    NegativeEmissions(f64),
}

/// kg CO₂-eq. split by life-cycle stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Components {
    pub production_kg: f64,
    pub operation_kg: f64,
    pub traffic_kg: f64,
}

impl Components {
    pub fn total(&self) -> f64 {
        self.production_kg + self.operation_kg + self.traffic_kg
    }

    pub fn scaled(&self, factor: f64) -> Components {
        Components {
            production_kg: self.production_kg * factor,
            operation_kg: self.operation_kg * factor,
            traffic_kg: self.traffic_kg * factor,
        }
    }

    pub fn divided(&self, divisor: f64) -> Components {
        Components {
            production_kg: self.production_kg / divisor,
            operation_kg: self.operation_kg / divisor,
            traffic_kg: self.traffic_kg / divisor,
        }
    }
}

impl Add for Components {
    type Output = Components;

    fn add(self, rhs: Components) -> Components {
        Components {
            production_kg: self.production_kg + rhs.production_kg,
            operation_kg: self.operation_kg + rhs.operation_kg,
            traffic_kg: self.traffic_kg + rhs.traffic_kg,
        }
    }
}

impl AddAssign for Components {
    fn add_assign(&mut self, rhs: Components) {
        *self = *self + rhs;
    }
}

/// Streaming hours and the GWP they cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Cell {
    pub hours: f64,
    pub gwp: Components,
}

impl AddAssign for Cell {
    fn add_assign(&mut self, rhs: Cell) {
        self.hours += rhs.hours;
        self.gwp += rhs.gwp;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CellKey {
    pub device: DeviceKind,
    pub platform: PlatformCategory,
    pub day: u8,
    pub slot: DaytimeSlot,
}

/// GWP cells keyed by device × platform × day × slot, with marginal views.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FootprintBreakdown {
    pub cells: BTreeMap<CellKey, Cell>,
}

impl FootprintBreakdown {
    /// Sums cells grouped by `group`, in cell-key order.
    pub fn marginal<K: Ord>(&self, group: impl Fn(&CellKey) -> K) -> BTreeMap<K, Cell> {
        let mut out = BTreeMap::new();
        for (key, cell) in &self.cells {
            *out.entry(group(key)).or_default() += *cell;
        }
        out
    }

    pub fn by_device(&self) -> BTreeMap<DeviceKind, Cell> {
        self.marginal(|k| k.device)
    }

    pub fn by_platform(&self) -> BTreeMap<PlatformCategory, Cell> {
        self.marginal(|k| k.platform)
    }

    pub fn by_day(&self) -> BTreeMap<u8, Cell> {
        self.marginal(|k| k.day)
    }

    pub fn by_slot(&self) -> BTreeMap<DaytimeSlot, Cell> {
        self.marginal(|k| k.slot)
    }

    pub fn by_platform_device(&self) -> BTreeMap<(PlatformCategory, DeviceKind), Cell> {
        self.marginal(|k| (k.platform, k.device))
    }

    pub fn total(&self) -> Cell {
        let mut total = Cell::default();
        for cell in self.cells.values() {
            total += *cell;
        }
        total
    }

    pub fn merge(&mut self, other: &FootprintBreakdown) {
        for (key, cell) in &other.cells {
            *self.cells.entry(*key).or_default() += *cell;
        }
    }

    /// Divides hours and every component by `divisor`.
    pub fn divided(&self, divisor: f64) -> FootprintBreakdown {
        FootprintBreakdown {
            cells: self
                .cells
                .iter()
                .map(|(k, c)| {
                    (
                        *k,
                        Cell {
                            hours: c.hours / divisor,
                            gwp: c.gwp.divided(divisor),
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FootprintOptions {
    /// Divide each entry's emissions by its audience size. Off by default:
    /// shared viewing is not allocated per capita in the reference model.
    pub per_viewer: bool,
}

/// Embodied emissions allocated to `streaming_hours` of use.
pub fn production_kg(params: &ModelParams, device: DeviceKind, streaming_hours: f64) -> f64 {
    let d = params.device(device);
    d.embodied_kg / d.lifetime_days() * (streaming_hours / d.daily_use_hours)
}

pub fn operation_kg(params: &ModelParams, device: DeviceKind, hours: f64) -> f64 {
    params.device(device).power_kw() * hours * params.grid_device.kg_per_kwh
}

pub fn traffic_kg(
    params: &ModelParams,
    device: DeviceKind,
    resolution: Resolution,
    hours: f64,
) -> Result<f64, ParamsError> {
    let gb = params.bitrate_for(device, resolution)? * hours;
    Ok(gb * params.network.total() * params.grid_network.kg_per_kwh)
}

/// kg CO₂-eq. per hour of streaming, by stage.
pub fn hourly_intensity(
    params: &ModelParams,
    device: DeviceKind,
    resolution: Resolution,
) -> Result<Components, ParamsError> {
    Ok(Components {
        production_kg: params.device(device).production_kg_per_hour(),
        operation_kg: operation_kg(params, device, 1.0),
        traffic_kg: traffic_kg(params, device, resolution, 1.0)?,
    })
}

/// GWP of one entry, or `None` for entries outside the model (broadcast TV).
pub fn entry_footprint(
    params: &ModelParams,
    entry: &DiaryEntry,
    opts: FootprintOptions,
) -> Result<Option<(CellKey, Cell)>, ParamsError> {
    let device = match (entry.platform.in_model(), entry.device) {
        (true, Some(device)) => device,
        _ => return Ok(None),
    };
    let mut gwp = hourly_intensity(params, device, entry.resolution)?.scaled(entry.hours);
    if opts.per_viewer {
        gwp = gwp.divided(f64::from(entry.audience));
    }
    let key = CellKey {
        device,
        platform: entry.platform,
        day: entry.day_index,
        slot: entry.slot,
    };
    Ok(Some((
        key,
        Cell {
            hours: entry.hours,
            gwp,
        },
    )))
}

/// Weekly footprint of one participant.
pub fn footprint(
    params: &ModelParams,
    ds: &DiaryDataset,
    participant: &ParticipantId,
    opts: FootprintOptions,
) -> Result<FootprintBreakdown, EngineError> {
    ds.participant(participant)?;
    let mut breakdown = FootprintBreakdown::default();
    for entry in ds.entries_for(participant) {
        if let Some((key, cell)) = entry_footprint(params, entry, opts)? {
            *breakdown.cells.entry(key).or_default() += cell;
        }
    }
    Ok(breakdown)
}

/// Footprint of every participant, keyed by id.
pub fn footprints(
    params: &ModelParams,
    ds: &DiaryDataset,
    opts: FootprintOptions,
) -> Result<BTreeMap<ParticipantId, FootprintBreakdown>, EngineError> {
    ds.participant_ids()
        .map(|id| Ok((id.clone(), footprint(params, ds, id, opts)?)))
        .collect()
}

/// Mean weekly breakdown across all participants (all-zero for an empty cohort).
pub fn cohort_mean(
    params: &ModelParams,
    ds: &DiaryDataset,
    opts: FootprintOptions,
) -> Result<FootprintBreakdown, EngineError> {
    let all = footprints(params, ds, opts)?;
    let mut sum = FootprintBreakdown::default();
    for breakdown in all.values() {
        sum.merge(breakdown);
    }
    if all.is_empty() {
        return Ok(sum);
    }
    Ok(sum.divided(all.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityRow {
    pub device: DeviceKind,
    pub production_kg_per_h: f64,
    pub electricity_kg_per_h: f64,
    pub traffic_kg_per_h: f64,
    pub total_kg_per_h: f64,
}

/// Per-hour GWP intensity of each device at its native resolution, in
/// [`INTENSITY_TABLE_ORDER`].
pub fn intensity_table(params: &ModelParams) -> Result<Vec<IntensityRow>, ParamsError> {
    INTENSITY_TABLE_ORDER
        .into_iter()
        .map(|device| {
            let c = hourly_intensity(params, device, Resolution::Automatic)?;
            Ok(IntensityRow {
                device,
                production_kg_per_h: c.production_kg,
                electricity_kg_per_h: c.operation_kg,
                traffic_kg_per_h: c.traffic_kg,
                total_kg_per_h: c.total(),
            })
        })
        .collect()
}

pub fn annual_kg(weekly_kg: f64) -> f64 {
    weekly_kg * WEEKS_PER_YEAR
}

/// Fraction of an annual per-capita budget taken by a weekly footprint kept up all year.
pub fn annual_budget_share(weekly_kg: f64, budget_kg_per_year: f64) -> Result<f64, EngineError> {
    if !(budget_kg_per_year > 0.0) {
        return Err(EngineError::InvalidBudget(budget_kg_per_year));
    }
    if !(weekly_kg >= 0.0) {
        return Err(EngineError::NegativeEmissions(weekly_kg));
    }
    Ok(weekly_kg / (budget_kg_per_year / WEEKS_PER_YEAR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diary::{synth_average_participant, ParticipantProfile, AVERAGE_PARTICIPANT};
    use crate::params::default_params;
    use std::collections::BTreeSet;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn entry(device: DeviceKind, platform: PlatformCategory, hours: f64) -> DiaryEntry {
        DiaryEntry {
            participant_id: "p".into(),
            day_index: 1,
            slot: DaytimeSlot::Evening,
            platform,
            hours,
            device: Some(device),
            audience: 2,
            resolution: Resolution::Automatic,
            parallel_activities: BTreeSet::new(),
        }
    }

    fn single(e: DiaryEntry) -> DiaryDataset {
        DiaryDataset::new(vec![ParticipantProfile::bare("p")], vec![e]).unwrap()
    }

    #[test]
    fn production_by_hand() {
        let p = default_params();
        // 250 / (6 * 365) / 1.27
        assert!(close(production_kg(&p, DeviceKind::LaptopPc, 1.0), 0.089_886, 1e-6));
        // 1000 / (8 * 365) / 2.14
        assert!(close(production_kg(&p, DeviceKind::SmartTv, 1.0), 0.160_031, 1e-6));
        for d in DeviceKind::ALL {
            assert_eq!(production_kg(&p, d, 0.0), 0.0);
        }
    }

    #[test]
    fn operation_by_hand() {
        let p = default_params();
        assert!(close(operation_kg(&p, DeviceKind::SmartTv, 1.0), 0.124, 1e-12));
        assert!(close(operation_kg(&p, DeviceKind::LaptopPc, 1.0), 0.019_84, 1e-12));
        assert_eq!(operation_kg(&p, DeviceKind::Smartphone, 0.0), 0.0);
    }

    #[test]
    fn traffic_by_hand() {
        let p = default_params();
        let tv = traffic_kg(&p, DeviceKind::SmartTv, Resolution::Automatic, 1.0).unwrap();
        assert!(close(tv, 1.8 * 0.073 * 0.55, 1e-12));
        let phone = traffic_kg(&p, DeviceKind::Smartphone, Resolution::Automatic, 1.0).unwrap();
        assert!(close(phone, 0.3 * 0.073 * 0.55, 1e-12));
        assert_eq!(traffic_kg(&p, DeviceKind::Tablet, Resolution::Automatic, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn resolution_affects_traffic_only() {
        let p = default_params();
        let native = hourly_intensity(&p, DeviceKind::SmartTv, Resolution::Automatic).unwrap();
        let low = hourly_intensity(&p, DeviceKind::SmartTv, Resolution::R360p).unwrap();
        assert_eq!(native.production_kg, low.production_kg);
        assert_eq!(native.operation_kg, low.operation_kg);
        assert!(close(low.traffic_kg / native.traffic_kg, 0.3 / 1.8, 1e-12));
    }

    #[test]
    fn single_tv_hour_total() {
        let p = default_params();
        let ds = single(entry(DeviceKind::SmartTv, PlatformCategory::PaidPlatform, 1.0));
        let total = footprint(&p, &ds, &"p".into(), FootprintOptions::default())
            .unwrap()
            .total();
        assert!(close(total.gwp.total(), 0.36, 0.01), "{}", total.gwp.total());
        assert_eq!(total.hours, 1.0);
    }

    #[test]
    fn broadcast_tv_excluded_and_empty_is_zero() {
        let p = default_params();
        let mut e = entry(DeviceKind::SmartTv, PlatformCategory::BroadcastTv, 3.0);
        e.device = None;
        let ds = single(e);
        let b = footprint(&p, &ds, &"p".into(), FootprintOptions::default()).unwrap();
        assert!(b.cells.is_empty());
        assert_eq!(b.total(), Cell::default());

        let empty = DiaryDataset::new(vec![ParticipantProfile::bare("p")], vec![]).unwrap();
        let b = footprint(&p, &empty, &"p".into(), FootprintOptions::default()).unwrap();
        assert_eq!(b.total().gwp.total(), 0.0);
        assert!(footprint(&p, &empty, &"q".into(), FootprintOptions::default()).is_err());
    }

    #[test]
    fn per_viewer_divides_by_audience() {
        let p = default_params();
        let ds = single(entry(DeviceKind::LaptopPc, PlatformCategory::FreePlatform, 2.0));
        let id = "p".into();
        let whole = footprint(&p, &ds, &id, FootprintOptions::default()).unwrap().total();
        let shared = footprint(&p, &ds, &id, FootprintOptions { per_viewer: true })
            .unwrap()
            .total();
        assert_eq!(shared.gwp, whole.gwp.divided(2.0));
        assert_eq!(shared.hours, whole.hours);
    }

    #[test]
    fn intensity_rows_sum_exactly() {
        for row in intensity_table(&default_params()).unwrap() {
            assert_eq!(
                row.total_kg_per_h,
                row.production_kg_per_h + row.electricity_kg_per_h + row.traffic_kg_per_h
            );
        }
    }

    #[test]
    fn device_ordering_by_intensity() {
        let rows = intensity_table(&default_params()).unwrap();
        let total = |d| rows.iter().find(|r| r.device == d).unwrap().total_kg_per_h;
        assert!(total(DeviceKind::Smartphone) < total(DeviceKind::LaptopPc));
        assert!(total(DeviceKind::LaptopPc) < total(DeviceKind::Tablet));
        assert!(total(DeviceKind::Tablet) < total(DeviceKind::SmartTv));
    }

    #[test]
    fn budget_share() {
        assert!(close(annual_budget_share(2.0, 1609.0).unwrap(), 104.0 / 1609.0, 1e-15));
        assert_eq!(annual_budget_share(0.0, 1609.0).unwrap(), 0.0);
        assert_eq!(annual_budget_share(1609.0 / 52.0, 1609.0).unwrap(), 1.0);
        assert!(matches!(annual_budget_share(1.0, 0.0), Err(EngineError::InvalidBudget(_))));
        assert!(annual_budget_share(-1.0, 1609.0).is_err());
    }

    #[test]
    fn average_week_marginals_agree() {
        let p = default_params();
        let ds = synth_average_participant();
        let b = footprint(&p, &ds, &AVERAGE_PARTICIPANT.into(), FootprintOptions::default()).unwrap();
        let total = b.total().gwp.total();
        for marginal in [
            b.by_device().values().map(|c| c.gwp.total()).sum::<f64>(),
            b.by_platform().values().map(|c| c.gwp.total()).sum::<f64>(),
            b.by_day().values().map(|c| c.gwp.total()).sum::<f64>(),
            b.by_slot().values().map(|c| c.gwp.total()).sum::<f64>(),
        ] {
            assert!(((marginal - total) / total).abs() < 1e-9);
        }
        assert!(!b.by_platform().contains_key(&PlatformCategory::BroadcastTv));
    }
}

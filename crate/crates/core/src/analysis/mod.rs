//! Descriptive statistics, paired t-test, correlations and the regression of
//! streaming behaviour on its determinants.

mod ols;
pub mod special;

pub use ols::{correlation_p, ols, Coefficient, Intercept, Predictor, RegressionResult};
pub use special::{inc_beta, ln_gamma, student_t_cdf, student_t_two_sided_p};

use crate::diary::{
    DaytimeSlot, DiaryDataset, Gender, MobileFlatrate, ParticipantId,
    ParticipantProfile, PlatformCategory, DAYS_PER_WEEK,
};
use crate::params::{DeviceKind, Resolution};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no values to analyse")]
    Empty,
    #[error("length mismatch ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("{what} needs at least {needed} observations (got {n})")]
    InsufficientData {
        n: usize,
        needed: usize,
        what: &'static str,
    },
    #[error("{0} has zero variance")]
    ZeroVariance(String),
    #[error("design matrix is rank deficient at column `{column}`")]
    RankDeficient { column: String },
    #[error("no GWP value for participant `{0}`")]
    MissingOutcome(ParticipantId),
}

/// Sample statistics; `sd` uses the n−1 denominator and is absent for n = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    pub min: f64,
    pub max: f64,
}

fn mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let first = values.iter().sum::<f64>() / n;
    // one refinement pass
    first + values.iter().map(|v| v - first).sum::<f64>() / n
}

/// Sample standard deviation (n−1); 0 for fewer than two values.
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn describe(values: &[f64]) -> Result<DescriptiveStats, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DescriptiveStats {
        n: values.len(),
        mean: mean(values).clamp(min, max),
        sd: (values.len() >= 2).then(|| sample_sd(values)),
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t_value: f64,
    pub df: usize,
    /// Two-sided.
    pub p_value: f64,
    pub cohens_d: f64,
    pub mean_difference: f64,
}

/// Paired t-test of `a − b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(AnalysisError::InsufficientData {
            n,
            needed: 2,
            what: "paired t-test",
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&diffs);
    let sd = sample_sd(&diffs);
    if !(sd > 0.0) {
        return Err(AnalysisError::ZeroVariance("paired differences".into()));
    }
    let t = md / (sd / (n as f64).sqrt());
    let df = n - 1;
    Ok(TTestResult {
        t_value: t,
        df,
        p_value: student_t_two_sided_p(t, df as f64),
        cohens_d: md / sd,
        mean_difference: md,
    })
}

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(AnalysisError::InsufficientData {
            n: x.len(),
            needed: 2,
            what: "correlation",
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(AnalysisError::ZeroVariance("x".into()));
    }
    if !(syy > 0.0) {
        return Err(AnalysisError::ZeroVariance("y".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Significance marker: `**` for p < .001, `*` for p < .01, `+` for p < .05.
pub fn significance_marker(p: f64) -> &'static str {
    if p < 0.001 {
        "**"
    } else if p < 0.01 {
        "*"
    } else if p < 0.05 {
        "+"
    } else {
        ""
    }
}

/// Mean daily in-model streaming hours on weekdays (Mon–Fri) and weekend days,
/// one pair per participant.
pub fn weekend_weekday_daily_hours(ds: &DiaryDataset) -> (Vec<f64>, Vec<f64>) {
    let mut weekend = Vec::new();
    let mut weekday = Vec::new();
    for id in ds.participant_ids() {
        let (mut we, mut wd) = (0.0, 0.0);
        for e in ds.entries_for(id).filter(|e| e.platform.in_model()) {
            if e.is_weekend() {
                we += e.hours;
            } else {
                wd += e.hours;
            }
        }
        weekend.push(we / 2.0);
        weekday.push(wd / 5.0);
    }
    (weekend, weekday)
}

/// Cohort-level summary of streaming behaviour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorSummary {
    pub participants: usize,
    /// Mean daily streaming hours per participant.
    pub daily_hours: DescriptiveStats,
    pub weekday_daily_hours: DescriptiveStats,
    pub weekend_daily_hours: DescriptiveStats,
    /// Mean daily hours per daytime slot.
    pub slot_daily_hours: BTreeMap<DaytimeSlot, DescriptiveStats>,
    /// Weekly hours per device (participants without use count as 0).
    pub device_weekly_hours: BTreeMap<DeviceKind, DescriptiveStats>,
    /// Share of participants who used each device at all.
    pub device_user_share: BTreeMap<DeviceKind, f64>,
    /// Weekly hours per platform, broadcast TV included.
    pub platform_weekly_hours: BTreeMap<PlatformCategory, DescriptiveStats>,
    /// Persons watching together, averaged per participant over their entries
    /// on that platform; only participants who used the platform.
    pub audience: BTreeMap<PlatformCategory, DescriptiveStats>,
    /// Percentage of participants per reported resolution, per streaming platform.
    pub resolution_share: BTreeMap<PlatformCategory, BTreeMap<Resolution, f64>>,
    /// Percentage of streaming days with each parallel activity (`none` for days without any).
    pub parallel_activity_share: BTreeMap<String, f64>,
}

fn describe_map<K: Ord>(
    m: BTreeMap<K, Vec<f64>>,
) -> Result<BTreeMap<K, DescriptiveStats>, AnalysisError> {
    m.into_iter().map(|(k, v)| Ok((k, describe(&v)?))).collect()
}

pub fn summarize_behavior(ds: &DiaryDataset) -> Result<BehaviorSummary, AnalysisError> {
    let n = ds.participants().len();
    if n == 0 {
        return Err(AnalysisError::Empty);
    }
    let days = f64::from(DAYS_PER_WEEK);
    let mut daily = Vec::new();
    let mut slot_daily: BTreeMap<DaytimeSlot, Vec<f64>> = BTreeMap::new();
    let mut device_weekly: BTreeMap<DeviceKind, Vec<f64>> = BTreeMap::new();
    let mut platform_weekly: BTreeMap<PlatformCategory, Vec<f64>> = BTreeMap::new();
    let mut audience: BTreeMap<PlatformCategory, Vec<f64>> = BTreeMap::new();
    let mut streaming_days = 0usize;
    let mut activity_days: BTreeMap<String, usize> = BTreeMap::new();

    for id in ds.participant_ids() {
        let mut total = 0.0;
        let mut slots: BTreeMap<DaytimeSlot, f64> = BTreeMap::new();
        let mut devices: BTreeMap<DeviceKind, f64> = BTreeMap::new();
        let mut platforms: BTreeMap<PlatformCategory, f64> = BTreeMap::new();
        let mut crowd: BTreeMap<PlatformCategory, Vec<f64>> = BTreeMap::new();
        let mut day_activities: BTreeMap<u8, BTreeSet<&str>> = BTreeMap::new();
        for e in ds.entries_for(id) {
            if e.hours > 0.0 {
                crowd.entry(e.platform).or_default().push(f64::from(e.audience));
            }
            *platforms.entry(e.platform).or_default() += e.hours;
            if !e.platform.in_model() {
                continue;
            }
            total += e.hours;
            *slots.entry(e.slot).or_default() += e.hours;
            if let Some(d) = e.device {
                *devices.entry(d).or_default() += e.hours;
            }
            if e.hours > 0.0 {
                day_activities
                    .entry(e.day_index)
                    .or_default()
                    .extend(e.parallel_activities.iter().map(String::as_str));
            }
        }
        daily.push(total / days);
        for slot in DaytimeSlot::ALL {
            slot_daily
                .entry(slot)
                .or_default()
                .push(slots.get(&slot).copied().unwrap_or(0.0) / days);
        }
        for device in DeviceKind::ALL {
            device_weekly
                .entry(device)
                .or_default()
                .push(devices.get(&device).copied().unwrap_or(0.0));
        }
        for platform in PlatformCategory::ALL {
            platform_weekly
                .entry(platform)
                .or_default()
                .push(platforms.get(&platform).copied().unwrap_or(0.0));
        }
        for (platform, values) in crowd {
            audience.entry(platform).or_default().push(mean(&values));
        }
        streaming_days += day_activities.len();
        for activities in day_activities.values() {
            if activities.is_empty() {
                *activity_days.entry("none".into()).or_default() += 1;
            }
            for a in activities {
                *activity_days.entry((*a).to_string()).or_default() += 1;
            }
        }
    }

    let (weekend, weekday) = weekend_weekday_daily_hours(ds);
    let device_user_share = device_weekly
        .iter()
        .map(|(d, v)| (*d, v.iter().filter(|h| **h > 0.0).count() as f64 / n as f64))
        .collect();

    let mut resolution_share = BTreeMap::new();
    for platform in PlatformCategory::STREAMING {
        let mut counts: BTreeMap<Resolution, usize> = BTreeMap::new();
        for p in ds.participants() {
            *counts.entry(p.resolution_for(platform)).or_default() += 1;
        }
        resolution_share.insert(
            platform,
            counts
                .into_iter()
                .map(|(r, c)| (r, 100.0 * c as f64 / n as f64))
                .collect(),
        );
    }

    Ok(BehaviorSummary {
        participants: n,
        daily_hours: describe(&daily)?,
        weekday_daily_hours: describe(&weekday)?,
        weekend_daily_hours: describe(&weekend)?,
        slot_daily_hours: describe_map(slot_daily)?,
        device_weekly_hours: describe_map(device_weekly)?,
        device_user_share,
        platform_weekly_hours: describe_map(platform_weekly)?,
        audience: describe_map(audience)?,
        resolution_share,
        parallel_activity_share: activity_days
            .into_iter()
            .map(|(a, c)| (a, 100.0 * c as f64 / streaming_days.max(1) as f64))
            .collect(),
    })
}

/// How categorical covariates become regression columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingConfig {
    /// `unlimited` mobile data is coded as this multiple of the largest finite tier.
    pub unlimited_flatrate_factor: f64,
    /// Largest finite tier offered by the survey, GB/month.
    pub largest_flatrate_tier_gb: f64,
    /// Gender `other` rows are coded 0 when at least this many exist, and
    /// dropped otherwise.
    pub other_gender_min_count: usize,
}

impl Default for CodingConfig {
    fn default() -> Self {
        CodingConfig {
            unlimited_flatrate_factor: 2.0,
            largest_flatrate_tier_gb: 8.0,
            other_gender_min_count: 2,
        }
    }
}

/// Predictor labels, in report order.
pub const DETERMINANTS: [&str; 9] = [
    "Digital literacy",
    "Impact knowledge",
    "Personal norm",
    "Platform membership",
    "Smartphone flat rate size",
    "Age",
    "Education level",
    "Income",
    "Gender",
];

/// Codes the nine determinants for every participant; `None` where any is
/// missing (listwise deletion).
pub fn code_determinants(
    ds: &DiaryDataset,
    coding: &CodingConfig,
) -> BTreeMap<ParticipantId, Option<[f64; 9]>> {
    let largest_tier = ds
        .participants()
        .iter()
        .filter_map(|p| match p.mobile_flatrate {
            MobileFlatrate::Limited(gb) => Some(gb),
            _ => None,
        })
        .fold(coding.largest_flatrate_tier_gb, f64::max);
    let others = ds
        .participants()
        .iter()
        .filter(|p| p.gender == Some(Gender::Other))
        .count();
    let code = |p: &ParticipantProfile| -> Option<[f64; 9]> {
        let flatrate = match p.mobile_flatrate {
            MobileFlatrate::Limited(gb) => gb,
            MobileFlatrate::Unlimited => coding.unlimited_flatrate_factor * largest_tier,
            MobileFlatrate::Unknown => return None,
        };
        let gender = match p.gender? {
            Gender::Female => 1.0,
            Gender::Male => 0.0,
            Gender::Other if others >= coding.other_gender_min_count => 0.0,
            Gender::Other => return None,
        };
        Some([
            p.digital_literacy?,
            p.impact_knowledge?,
            p.personal_norm?,
            if p.paid_membership? { 1.0 } else { 0.0 },
            flatrate,
            p.age?,
            p.education_level?.ordinal(),
            p.income_band?.ordinal(),
            gender,
        ])
    };
    ds.participants()
        .iter()
        .map(|p| (p.participant_id.clone(), code(p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantsReport {
    /// Mean daily streaming hours on the nine determinants.
    pub hours: RegressionResult,
    /// Weekly GWP on the nine determinants.
    pub gwp: RegressionResult,
    /// Participants dropped for missing covariates.
    pub excluded: usize,
}

/// Regresses mean daily streaming hours and weekly GWP on the nine determinants.
pub fn determinants_report(
    ds: &DiaryDataset,
    weekly_gwp: &BTreeMap<ParticipantId, f64>,
    coding: &CodingConfig,
) -> Result<DeterminantsReport, AnalysisError> {
    let coded = code_determinants(ds, coding);
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); DETERMINANTS.len()];
    let mut hours = Vec::new();
    let mut gwp = Vec::new();
    let mut excluded = 0;
    for (id, row) in &coded {
        let Some(row) = row else {
            excluded += 1;
            continue;
        };
        let weekly: f64 = ds
            .entries_for(id)
            .filter(|e| e.platform.in_model())
            .map(|e| e.hours)
            .sum();
        hours.push(weekly / f64::from(DAYS_PER_WEEK));
        gwp.push(
            *weekly_gwp
                .get(id)
                .ok_or_else(|| AnalysisError::MissingOutcome(id.clone()))?,
        );
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(*v);
        }
    }
    let predictors: Vec<Predictor> = DETERMINANTS
        .iter()
        .zip(columns)
        .map(|(label, values)| Predictor::new(*label, values))
        .collect();
    Ok(DeterminantsReport {
        hours: ols("Daily streaming duration", &hours, &predictors)?,
        gwp: ols("GHG emissions", &gwp, &predictors)?,
        excluded,
    })
}

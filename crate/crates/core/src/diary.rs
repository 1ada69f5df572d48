//! Usage diaries and participant covariates.
//!
//! Two CSV files make up a dataset. The diary file has one row per
//! (participant, day, slot, platform) observation:
//!
//! ```text
//! participant_id,day,slot,platform,hours,device,audience,parallel_activities
//! ```
//!
//! The profile file has one row per participant:
//!
//! ```text
//! participant_id,age,gender,education,income,employment,paid_membership,mobile_flatrate,
//! digital_literacy,impact_knowledge,personal_norm,environmental_concern,
//! resolution_free_platform,resolution_paid_platform,resolution_social_media,resolution_tv_station_stream
//! ```
//!
//! Headers are mandatory and must match exactly. Empty covariate cells mean
//! "missing". Resolution is surveyed once per platform, so entries inherit it
//! from the participant's profile.

use crate::params::{DeviceKind, Resolution};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

pub const DIARY_COLUMNS: [&str; 8] = [
    "participant_id",
    "day",
    "slot",
    "platform",
    "hours",
    "device",
    "audience",
    "parallel_activities",
];

pub const PROFILE_COLUMNS: [&str; 16] = [
    "participant_id",
    "age",
    "gender",
    "education",
    "income",
    "employment",
    "paid_membership",
    "mobile_flatrate",
    "digital_literacy",
    "impact_knowledge",
    "personal_norm",
    "environmental_concern",
    "resolution_free_platform",
    "resolution_paid_platform",
    "resolution_social_media",
    "resolution_tv_station_stream",
];

/// Length of every daytime slot, h.
pub const SLOT_HOURS: f64 = 6.0;
pub const DAYS_PER_WEEK: u8 = 7;
/// Bounds of every Likert-type score.
pub const SCORE_RANGE: (f64, f64) = (1.0, 5.0);

const AVERAGE_DIARY_CSV: &str = include_str!("../data/average_participant_diary.csv");
const AVERAGE_PROFILES_CSV: &str = include_str!("../data/average_participant_profiles.csv");

#[derive(Debug, Error)]
pub enum DiaryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} file: header must be `{expected}`, found `{found}`")]
    Header {
        file: &'static str,
        expected: String,
        found: String,
    },
    #[error("{file} file: {message}, row {row}")]
    Row {
        file: &'static str,
        row: u64,
        message: String,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("unknown participant `{0}`")]
    UnknownParticipant(ParticipantId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Self {
        ParticipantId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ParticipantId {
    fn from(s: &str) -> Self {
        ParticipantId(s.to_string())
    }
}

/// Generates `as_str`, `Display` and `FromStr` for a fieldless enum from a
/// table of canonical names (first) plus accepted aliases.
macro_rules! labelled_enum {
    ($ty:ident { $($variant:ident => $name:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name $(| $alias)* => Ok($ty::$variant),)+
                    other => Err(format!(concat!("unknown ", stringify!($ty), " `{}`"), other)),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformCategory {
    FreePlatform,
    PaidPlatform,
    SocialMedia,
    TvStationStream,
    BroadcastTv,
}

labelled_enum!(PlatformCategory {
    FreePlatform => "free_platform" | "free",
    PaidPlatform => "paid_platform" | "paid",
    SocialMedia => "social_media" | "social",
    TvStationStream => "tv_station_stream" | "tv_station",
    BroadcastTv => "broadcast_tv" | "broadcast",
});

impl PlatformCategory {
    pub const ALL: [PlatformCategory; 5] = [
        PlatformCategory::FreePlatform,
        PlatformCategory::PaidPlatform,
        PlatformCategory::SocialMedia,
        PlatformCategory::TvStationStream,
        PlatformCategory::BroadcastTv,
    ];

    /// The four online streaming categories that enter the GWP model.
    pub const STREAMING: [PlatformCategory; 4] = [
        PlatformCategory::FreePlatform,
        PlatformCategory::PaidPlatform,
        PlatformCategory::SocialMedia,
        PlatformCategory::TvStationStream,
    ];

    /// Broadcast TV is recorded in the diary but has no streaming footprint.
    pub fn in_model(self) -> bool {
        self != PlatformCategory::BroadcastTv
    }

    pub fn label(self) -> &'static str {
        match self {
            PlatformCategory::FreePlatform => "Free platform",
            PlatformCategory::PaidPlatform => "Paid platform",
            PlatformCategory::SocialMedia => "Social media",
            PlatformCategory::TvStationStream => "Streams from TV stations",
            PlatformCategory::BroadcastTv => "Broadcast TV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaytimeSlot {
    /// 6:00–12:00
    Morning,
    /// 12:00–18:00
    Afternoon,
    /// 18:00–24:00
    Evening,
    /// 0:00–6:00
    Night,
}

labelled_enum!(DaytimeSlot {
    Morning => "morning",
    Afternoon => "afternoon",
    Evening => "evening",
    Night => "night",
});

impl DaytimeSlot {
    pub const ALL: [DaytimeSlot; 4] = [
        DaytimeSlot::Morning,
        DaytimeSlot::Afternoon,
        DaytimeSlot::Evening,
        DaytimeSlot::Night,
    ];

    pub fn hours(self) -> f64 {
        SLOT_HOURS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Other,
}

labelled_enum!(Gender {
    Female => "female" | "f",
    Male => "male" | "m",
    Other => "other",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EducationLevel {
    Primary,
    Secondary,
    Tertiary,
}

labelled_enum!(EducationLevel {
    Primary => "primary",
    Secondary => "secondary",
    Tertiary => "tertiary",
});

impl EducationLevel {
    pub fn ordinal(self) -> f64 {
        match self {
            EducationLevel::Primary => 1.0,
            EducationLevel::Secondary => 2.0,
            EducationLevel::Tertiary => 3.0,
        }
    }
}

/// Monthly net income band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeBand {
    /// below 1 500 €
    Low,
    /// 1 500–3 000 €
    Middle,
    /// above 3 000 €
    High,
}

labelled_enum!(IncomeBand {
    Low => "low" | "<1500",
    Middle => "middle" | "1500-3000",
    High => "high" | ">3000",
});

impl IncomeBand {
    pub fn ordinal(self) -> f64 {
        match self {
            IncomeBand::Low => 1.0,
            IncomeBand::Middle => 2.0,
            IncomeBand::High => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Employment {
    FullTime,
    HalfTime,
    Unemployed,
}

labelled_enum!(Employment {
    FullTime => "full_time" | "full-time",
    HalfTime => "half_time" | "half-time",
    Unemployed => "unemployed",
});

/// Size of the participant's mobile data plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobileFlatrate {
    /// Finite monthly allowance in GB (0 = no mobile data).
    Limited(f64),
    Unlimited,
    Unknown,
}

impl fmt::Display for MobileFlatrate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MobileFlatrate::Limited(gb) => write!(f, "{gb}"),
            MobileFlatrate::Unlimited => f.write_str("unlimited"),
            MobileFlatrate::Unknown => f.write_str("unknown"),
        }
    }
}

impl FromStr for MobileFlatrate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "unknown" | "dont_know" => Ok(MobileFlatrate::Unknown),
            "unlimited" | "limitless" => Ok(MobileFlatrate::Unlimited),
            "none" => Ok(MobileFlatrate::Limited(0.0)),
            other => {
                let gb: f64 = other
                    .trim_end_matches("gb")
                    .trim()
                    .parse()
                    .map_err(|_| format!("unknown mobile_flatrate `{other}`"))?;
                if !(gb.is_finite() && gb >= 0.0) {
                    return Err(format!("mobile_flatrate out of range ({gb})"));
                }
                Ok(MobileFlatrate::Limited(gb))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiaryEntry {
    pub participant_id: ParticipantId,
    /// 1 = Monday … 7 = Sunday.
    pub day_index: u8,
    pub slot: DaytimeSlot,
    pub platform: PlatformCategory,
    pub hours: f64,
    /// Main device for this platform on this day. Absent for broadcast TV.
    pub device: Option<DeviceKind>,
    /// Persons watching together, including the participant.
    pub audience: u32,
    pub resolution: Resolution,
    pub parallel_activities: BTreeSet<String>,
}

/// Uniqueness key of a diary entry.
pub type EntryKey = (ParticipantId, u8, DaytimeSlot, PlatformCategory);

impl DiaryEntry {
    pub fn key(&self) -> EntryKey {
        (
            self.participant_id.clone(),
            self.day_index,
            self.slot,
            self.platform,
        )
    }

    pub fn is_weekend(&self) -> bool {
        self.day_index >= 6
    }

    fn check(&self) -> Result<(), String> {
        if !(self.hours.is_finite() && (0.0..=SLOT_HOURS).contains(&self.hours)) {
            return Err(format!("hours out of range ({})", self.hours));
        }
        if !(1..=DAYS_PER_WEEK).contains(&self.day_index) {
            return Err(format!("day out of range ({})", self.day_index));
        }
        if self.audience < 1 {
            return Err("audience must be at least 1".into());
        }
        if self.platform.in_model() && self.device.is_none() {
            return Err(format!("device required for {}", self.platform));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub participant_id: ParticipantId,
    pub age: Option<f64>,
    pub gender: Option<Gender>,
    pub education_level: Option<EducationLevel>,
    pub income_band: Option<IncomeBand>,
    pub employment: Option<Employment>,
    pub paid_membership: Option<bool>,
    pub mobile_flatrate: MobileFlatrate,
    pub digital_literacy: Option<f64>,
    pub impact_knowledge: Option<f64>,
    pub personal_norm: Option<f64>,
    pub environmental_concern: Option<f64>,
    /// Most-used resolution per streaming platform.
    pub resolutions: BTreeMap<PlatformCategory, Resolution>,
}

impl ParticipantProfile {
    /// A profile with every covariate missing and automatic resolutions.
    pub fn bare(id: impl Into<String>) -> Self {
        ParticipantProfile {
            participant_id: ParticipantId::new(id),
            age: None,
            gender: None,
            education_level: None,
            income_band: None,
            employment: None,
            paid_membership: None,
            mobile_flatrate: MobileFlatrate::Unknown,
            digital_literacy: None,
            impact_knowledge: None,
            personal_norm: None,
            environmental_concern: None,
            resolutions: PlatformCategory::STREAMING
                .into_iter()
                .map(|p| (p, Resolution::Automatic))
                .collect(),
        }
    }

    pub fn resolution_for(&self, platform: PlatformCategory) -> Resolution {
        self.resolutions
            .get(&platform)
            .copied()
            .unwrap_or(Resolution::Automatic)
    }

    fn check(&self) -> Result<(), String> {
        for (name, score) in [
            ("digital_literacy", self.digital_literacy),
            ("impact_knowledge", self.impact_knowledge),
            ("personal_norm", self.personal_norm),
            ("environmental_concern", self.environmental_concern),
        ] {
            if let Some(v) = score {
                if !(SCORE_RANGE.0..=SCORE_RANGE.1).contains(&v) {
                    return Err(format!(
                        "{name} out of range [{}, {}] ({v})",
                        SCORE_RANGE.0, SCORE_RANGE.1
                    ));
                }
            }
        }
        if let Some(age) = self.age {
            if !(0.0..=120.0).contains(&age) {
                return Err(format!("age out of range ({age})"));
            }
        }
        Ok(())
    }
}

/// A validated set of participants and their diary entries.
///
/// Participants are kept sorted by id and entries by [`EntryKey`], so every
/// downstream sum runs in the same order regardless of input row order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiaryDataset {
    participants: Vec<ParticipantProfile>,
    entries: Vec<DiaryEntry>,
    warnings: Vec<String>,
}

impl DiaryDataset {
    pub fn new(
        mut participants: Vec<ParticipantProfile>,
        mut entries: Vec<DiaryEntry>,
    ) -> Result<Self, DiaryError> {
        participants.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
        for pair in participants.windows(2) {
            if pair[0].participant_id == pair[1].participant_id {
                return Err(DiaryError::Invalid(format!(
                    "duplicate participant_id `{}`",
                    pair[0].participant_id
                )));
            }
        }
        for p in &participants {
            p.check()
                .map_err(|m| DiaryError::Invalid(format!("participant {}: {m}", p.participant_id)))?;
        }
        let known: BTreeSet<&ParticipantId> =
            participants.iter().map(|p| &p.participant_id).collect();
        let mut devices: BTreeMap<(&ParticipantId, u8, PlatformCategory), DeviceKind> =
            BTreeMap::new();
        for e in &entries {
            e.check()
                .map_err(|m| DiaryError::Invalid(format!("entry {:?}: {m}", e.key())))?;
            if !known.contains(&e.participant_id) {
                return Err(DiaryError::Invalid(format!(
                    "orphan participant_id `{}`",
                    e.participant_id
                )));
            }
            if let Some(device) = e.device {
                let slot = devices
                    .entry((&e.participant_id, e.day_index, e.platform))
                    .or_insert(device);
                if *slot != device {
                    return Err(DiaryError::Invalid(format!(
                        "participant {} day {} {}: conflicting devices {} and {}",
                        e.participant_id, e.day_index, e.platform, slot, device
                    )));
                }
            }
        }
        entries.sort_by_key(|a| a.key());
        for pair in entries.windows(2) {
            if pair[0].key() == pair[1].key() {
                return Err(DiaryError::Invalid(format!(
                    "duplicate key {:?}",
                    pair[0].key()
                )));
            }
        }
        let warnings = oversubscription_warnings(&entries);
        Ok(DiaryDataset {
            participants,
            entries,
            warnings,
        })
    }

    pub fn participants(&self) -> &[ParticipantProfile] {
        &self.participants
    }

    pub fn entries(&self) -> &[DiaryEntry] {
        &self.entries
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn participant(&self, id: &ParticipantId) -> Result<&ParticipantProfile, DiaryError> {
        self.participants
            .binary_search_by(|p| p.participant_id.cmp(id))
            .map(|i| &self.participants[i])
            .map_err(|_| DiaryError::UnknownParticipant(id.clone()))
    }

    pub fn participant_ids(&self) -> impl Iterator<Item = &ParticipantId> {
        self.participants.iter().map(|p| &p.participant_id)
    }

    /// Entries of one participant, in key order.
    pub fn entries_for<'a>(&'a self, id: &'a ParticipantId) -> impl Iterator<Item = &'a DiaryEntry> {
        let start = self.entries.partition_point(|e| &e.participant_id < id);
        self.entries[start..]
            .iter()
            .take_while(move |e| &e.participant_id == id)
    }

    /// Rebuilds the dataset with transformed entries, re-sorting and
    /// recomputing warnings. Used by scenario transforms, which may push
    /// per-entry hours past the slot length.
    pub(crate) fn with_entries_unchecked(&self, mut entries: Vec<DiaryEntry>) -> DiaryDataset {
        entries.sort_by_key(|a| a.key());
        let warnings = oversubscription_warnings(&entries);
        DiaryDataset {
            participants: self.participants.clone(),
            entries,
            warnings,
        }
    }
}

fn oversubscription_warnings(entries: &[DiaryEntry]) -> Vec<String> {
    let mut per_slot: BTreeMap<(&ParticipantId, u8, DaytimeSlot), f64> = BTreeMap::new();
    for e in entries {
        *per_slot
            .entry((&e.participant_id, e.day_index, e.slot))
            .or_default() += e.hours;
    }
    per_slot
        .into_iter()
        .filter(|(_, total)| *total > SLOT_HOURS)
        .map(|((id, day, slot), total)| {
            format!(
                "participant {id} day {day} {slot}: slot oversubscribed (multi-watching?), {total:.2} h in a {SLOT_HOURS} h slot"
            )
        })
        .collect()
}

fn check_header(
    file: &'static str,
    reader: &mut csv::Reader<impl Read>,
    expected: &[&str],
) -> Result<(), DiaryError> {
    let found = reader.headers().map_err(|e| DiaryError::Row {
        file,
        row: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != expected {
        return Err(DiaryError::Header {
            file,
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn csv_reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn opt<T: FromStr>(cell: &str, name: &str) -> Result<Option<T>, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| format!("invalid {name} `{cell}`"))
}

fn parse_bool(cell: &str) -> Result<Option<bool>, String> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "true" | "yes" | "1" => Ok(Some(true)),
        "false" | "no" | "0" => Ok(Some(false)),
        other => Err(format!("invalid paid_membership `{other}`")),
    }
}

fn parse_profile_record(record: &csv::StringRecord) -> Result<ParticipantProfile, String> {
    let id = record[0].trim();
    if id.is_empty() {
        return Err("empty participant_id".into());
    }
    let mut resolutions = BTreeMap::new();
    for (i, platform) in PlatformCategory::STREAMING.into_iter().enumerate() {
        let cell = record[12 + i].trim();
        let res = if cell.is_empty() {
            Resolution::Automatic
        } else {
            cell.parse::<Resolution>()?
        };
        resolutions.insert(platform, res);
    }
    let profile = ParticipantProfile {
        participant_id: ParticipantId::new(id),
        age: opt(&record[1], "age")?,
        gender: opt(&record[2], "gender")?,
        education_level: opt(&record[3], "education")?,
        income_band: opt(&record[4], "income")?,
        employment: opt(&record[5], "employment")?,
        paid_membership: parse_bool(&record[6])?,
        mobile_flatrate: record[7].parse()?,
        digital_literacy: opt(&record[8], "digital_literacy")?,
        impact_knowledge: opt(&record[9], "impact_knowledge")?,
        personal_norm: opt(&record[10], "personal_norm")?,
        environmental_concern: opt(&record[11], "environmental_concern")?,
        resolutions,
    };
    profile.check()?;
    Ok(profile)
}

fn parse_entry_record(
    record: &csv::StringRecord,
    profiles: &BTreeMap<ParticipantId, ParticipantProfile>,
) -> Result<DiaryEntry, String> {
    let id = ParticipantId::new(record[0].trim());
    let profile = profiles
        .get(&id)
        .ok_or_else(|| format!("orphan participant_id `{id}`"))?;
    let day: u8 = record[1]
        .trim()
        .parse()
        .map_err(|_| format!("invalid day `{}`", record[1].trim()))?;
    let slot: DaytimeSlot = record[2].parse()?;
    let platform: PlatformCategory = record[3].parse()?;
    let hours: f64 = record[4]
        .trim()
        .parse()
        .map_err(|_| format!("invalid hours `{}`", record[4].trim()))?;
    if !(hours.is_finite() && (0.0..=SLOT_HOURS).contains(&hours)) {
        return Err("hours out of range".into());
    }
    let device: Option<DeviceKind> = opt(&record[5], "device").map_err(|_| {
        format!("unknown device `{}`", record[5].trim())
    })?;
    let audience: u32 = match record[6].trim() {
        "" => 1,
        cell => cell
            .parse()
            .map_err(|_| format!("invalid audience `{cell}`"))?,
    };
    let parallel_activities = record[7]
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    let entry = DiaryEntry {
        participant_id: id,
        day_index: day,
        slot,
        platform,
        hours,
        device,
        audience,
        resolution: if platform.in_model() {
            profile.resolution_for(platform)
        } else {
            Resolution::Automatic
        },
        parallel_activities,
    };
    entry.check()?;
    Ok(entry)
}

/// Parses and validates a dataset from two CSV readers.
pub fn parse_dataset_from_readers(
    diary: impl Read,
    profiles: impl Read,
) -> Result<DiaryDataset, DiaryError> {
    let mut reader = csv_reader(profiles);
    check_header("profiles", &mut reader, &PROFILE_COLUMNS)?;
    let mut by_id = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| row_error("profiles", &e))?;
        let row = record.position().map_or(0, |p| p.line());
        let profile = parse_profile_record(&record).map_err(|message| DiaryError::Row {
            file: "profiles",
            row,
            message,
        })?;
        if by_id.contains_key(&profile.participant_id) {
            return Err(DiaryError::Row {
                file: "profiles",
                row,
                message: format!("duplicate participant_id `{}`", profile.participant_id),
            });
        }
        by_id.insert(profile.participant_id.clone(), profile);
    }

    let mut reader = csv_reader(diary);
    check_header("diary", &mut reader, &DIARY_COLUMNS)?;
    let mut entries = Vec::new();
    let mut seen = BTreeMap::new();
    let mut devices = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| row_error("diary", &e))?;
        let row = record.position().map_or(0, |p| p.line());
        let fail = |message: String| DiaryError::Row {
            file: "diary",
            row,
            message,
        };
        let entry = parse_entry_record(&record, &by_id).map_err(fail)?;
        if let Some(first) = seen.insert(entry.key(), row) {
            return Err(fail(format!("duplicate key (same as row {first})")));
        }
        if let Some(device) = entry.device {
            let key = (entry.participant_id.clone(), entry.day_index, entry.platform);
            if let Some(&(other, other_row)) = devices.get(&key) {
                if other != device {
                    return Err(fail(format!(
                        "device {device} conflicts with {other} at row {other_row} (one main device per platform and day)"
                    )));
                }
            } else {
                devices.insert(key, (device, row));
            }
        }
        entries.push(entry);
    }
    DiaryDataset::new(by_id.into_values().collect(), entries)
}

fn row_error(file: &'static str, e: &csv::Error) -> DiaryError {
    DiaryError::Row {
        file,
        row: e.position().map_or(0, |p| p.line()),
        message: format!("malformed row: {e}"),
    }
}

pub fn parse_dataset(
    diary_path: impl AsRef<Path>,
    profile_path: impl AsRef<Path>,
) -> Result<DiaryDataset, DiaryError> {
    let open = |path: &Path| {
        std::fs::File::open(path).map_err(|source| DiaryError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let diary = open(diary_path.as_ref())?;
    let profiles = open(profile_path.as_ref())?;
    parse_dataset_from_readers(diary, profiles)
}

fn fmt_opt<T: fmt::Display>(value: &Option<T>) -> String {
    value.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Writes the dataset back out in the two-file CSV layout.
pub fn write_dataset(
    ds: &DiaryDataset,
    diary: impl Write,
    profiles: impl Write,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(profiles);
    w.write_record(PROFILE_COLUMNS)?;
    for p in &ds.participants {
        let mut row = vec![
            p.participant_id.to_string(),
            fmt_opt(&p.age),
            fmt_opt(&p.gender),
            fmt_opt(&p.education_level),
            fmt_opt(&p.income_band),
            fmt_opt(&p.employment),
            fmt_opt(&p.paid_membership),
            p.mobile_flatrate.to_string(),
            fmt_opt(&p.digital_literacy),
            fmt_opt(&p.impact_knowledge),
            fmt_opt(&p.personal_norm),
            fmt_opt(&p.environmental_concern),
        ];
        row.extend(
            PlatformCategory::STREAMING
                .into_iter()
                .map(|pl| p.resolution_for(pl).to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(diary);
    w.write_record(DIARY_COLUMNS)?;
    for e in &ds.entries {
        w.write_record([
            e.participant_id.to_string(),
            e.day_index.to_string(),
            e.slot.to_string(),
            e.platform.to_string(),
            e.hours.to_string(),
            fmt_opt(&e.device),
            e.audience.to_string(),
            e.parallel_activities
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes to `(diary_csv, profiles_csv)`.
pub fn to_csv_strings(ds: &DiaryDataset) -> (String, String) {
    let mut diary = Vec::new();
    let mut profiles = Vec::new();
    write_dataset(ds, &mut diary, &mut profiles).expect("writing to memory cannot fail");
    (
        String::from_utf8(diary).expect("utf-8"),
        String::from_utf8(profiles).expect("utf-8"),
    )
}

/// Weekly streaming hours per device for one participant. Broadcast TV is excluded.
pub fn weekly_device_hours(
    ds: &DiaryDataset,
    participant: &ParticipantId,
) -> Result<BTreeMap<DeviceKind, f64>, DiaryError> {
    ds.participant(participant)?;
    let mut hours = BTreeMap::new();
    for e in ds.entries_for(participant) {
        if let (true, Some(device)) = (e.platform.in_model(), e.device) {
            *hours.entry(device).or_insert(0.0) += e.hours;
        }
    }
    Ok(hours)
}

/// Id of the built-in average participant.
pub const AVERAGE_PARTICIPANT: &str = "avg";

/// One synthetic participant whose per-device weekly hours equal the cohort
/// means (laptop 4.92 h, smartphone 3.76 h, smart TV 2.49 h, tablet 0.97 h).
/// The platform split is documented in `data/README.md`.
pub fn synth_average_participant() -> DiaryDataset {
    parse_dataset_from_readers(AVERAGE_DIARY_CSV.as_bytes(), AVERAGE_PROFILES_CSV.as_bytes())
        .expect("built-in fixture is valid")
}

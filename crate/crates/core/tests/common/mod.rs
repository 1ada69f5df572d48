#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use streamgwp::diary::{
    DaytimeSlot, DiaryDataset, DiaryEntry, ParticipantProfile, PlatformCategory,
};
use streamgwp::params::{default_params, DeviceKind, ModelParams, Resolution};

pub const RESOLUTIONS: [Resolution; 5] = [
    Resolution::R360p,
    Resolution::R480p,
    Resolution::R720p,
    Resolution::R1080p,
    Resolution::Automatic,
];

/// Parameters with every numeric value scaled by a random factor in [0.5, 1.5],
/// keeping the bitrate table monotone.
pub fn arb_params() -> impl Strategy<Value = ModelParams> {
    (
        prop::collection::vec(0.5..1.5f64, 16),
        0.5..1.5f64,
        prop::collection::vec(0.5..1.5f64, 3),
        0.0..1.9f64,
        0.0..1.9f64,
    )
        .prop_map(|(device_f, bitrate_f, net_f, g_dev, g_net)| {
            let mut p = default_params();
            for (i, d) in p.devices.values_mut().enumerate() {
                d.embodied_kg *= device_f[4 * i];
                d.lifetime_years *= device_f[4 * i + 1];
                d.power_watts *= device_f[4 * i + 2];
                d.daily_use_hours *= device_f[4 * i + 3];
            }
            for v in p.bitrates.0.values_mut() {
                *v *= bitrate_f;
            }
            p.network.access_kwh_per_gb *= net_f[0];
            p.network.core_edge_kwh_per_gb *= net_f[1];
            p.network.datacenter_kwh_per_gb *= net_f[2];
            p.grid_device.kg_per_kwh = g_dev;
            p.grid_network.kg_per_kwh = g_net;
            p.validate().expect("scaled params stay valid");
            p
        })
}

type RawEntry = (usize, u8, usize, usize, f64, u32, usize);

/// Up to `max_entries` entries spread over up to three participants.
pub fn arb_dataset(max_entries: usize) -> impl Strategy<Value = DiaryDataset> {
    let entry = (0..3usize, 1..=7u8, 0..4usize, 0..5usize, 0.0..=6.0f64, 1..=5u32, 0..5usize);
    (
        prop::collection::vec(entry, 0..=max_entries),
        prop::collection::vec(0..4usize, 3 * 7 * 5),
        1..=3usize,
    )
        .prop_map(|(raw, device_table, n_participants): (Vec<RawEntry>, Vec<usize>, usize)| {
            let participants: Vec<ParticipantProfile> = (0..n_participants)
                .map(|i| ParticipantProfile::bare(format!("p{i}")))
                .collect();
            let mut seen = BTreeSet::new();
            let mut entries = Vec::new();
            for (p, day, slot, platform, hours, audience, res) in raw {
                let p = p % n_participants;
                if !seen.insert((p, day, slot, platform)) {
                    continue;
                }
                let platform_kind = PlatformCategory::ALL[platform];
                let device = platform_kind
                    .in_model()
                    .then(|| DeviceKind::ALL[device_table[(p * 7 + usize::from(day) - 1) * 5 + platform]]);
                entries.push(DiaryEntry {
                    participant_id: participants[p].participant_id.clone(),
                    day_index: day,
                    slot: DaytimeSlot::ALL[slot],
                    platform: platform_kind,
                    hours,
                    device,
                    audience,
                    resolution: RESOLUTIONS[res],
                    parallel_activities: BTreeSet::new(),
                });
            }
            DiaryDataset::new(participants, entries).expect("generated entries are valid")
        })
}

/// Per-participant weekly [production, operation, traffic], straight from the
/// model equations, entry by entry.
pub fn brute_force(params: &ModelParams, ds: &DiaryDataset, per_viewer: bool) -> BTreeMap<String, [f64; 3]> {
    let mut out: BTreeMap<String, [f64; 3]> = ds
        .participants()
        .iter()
        .map(|p| (p.participant_id.to_string(), [0.0; 3]))
        .collect();
    for e in ds.entries() {
        if e.platform == PlatformCategory::BroadcastTv {
            continue;
        }
        let device = e.device.unwrap();
        let d = &params.devices[&device];
        let res = match e.resolution {
            Resolution::Automatic | Resolution::Unknown => d.native_resolution,
            r => r,
        };
        let share = if per_viewer { 1.0 / f64::from(e.audience) } else { 1.0 };
        let production = d.embodied_kg / (d.lifetime_years * 365.0) * e.hours / d.daily_use_hours;
        let operation = d.power_watts / 1000.0 * e.hours * params.grid_device.kg_per_kwh;
        let kwh_per_gb = params.network.access_kwh_per_gb
            + params.network.core_edge_kwh_per_gb
            + params.network.datacenter_kwh_per_gb;
        let traffic = params.bitrates.0[&res] * e.hours * kwh_per_gb * params.grid_network.kg_per_kwh;
        let acc = out.get_mut(e.participant_id.as_str()).unwrap();
        acc[0] += production * share;
        acc[1] += operation * share;
        acc[2] += traffic * share;
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Solves the square system `a x = b` exactly by Gauss-Jordan elimination.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("non-singular");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..n {
                    let delta = &f * &a[col][c];
                    a[r][c] -= delta;
                }
                let delta = &f * &b[col];
                b[r] -= delta;
            }
        }
    }
    (0..n).map(|i| &b[i] / &a[i][i]).collect()
}

/// Exact OLS via the normal equations: (coefficients, standard errors, R²),
/// intercept first.
pub fn exact_ols(y: &[f64], columns: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, f64) {
    let n = y.len();
    let mut x: Vec<Vec<BigRational>> = vec![vec![BigRational::from_integer(BigInt::from(1)); n]];
    x.extend(columns.iter().map(|c| c.iter().copied().map(rational).collect()));
    let y: Vec<BigRational> = y.iter().copied().map(rational).collect();
    let p = x.len();
    let dot = |u: &[BigRational], v: &[BigRational]| {
        u.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
    };
    let xtx: Vec<Vec<BigRational>> = (0..p).map(|i| (0..p).map(|j| dot(&x[i], &x[j])).collect()).collect();
    let xty: Vec<BigRational> = (0..p).map(|i| dot(&x[i], &y)).collect();
    let b = solve_exact(xtx.clone(), xty);
    let resid: Vec<BigRational> = (0..n)
        .map(|r| {
            let fit = (0..p).fold(BigRational::zero(), |acc, j| acc + &x[j][r] * &b[j]);
            &y[r] - fit
        })
        .collect();
    let rss = dot(&resid, &resid);
    let mean = y.iter().fold(BigRational::zero(), |a, v| a + v) / BigRational::from_integer(BigInt::from(n));
    let centred: Vec<BigRational> = y.iter().map(|v| v - &mean).collect();
    let tss = dot(&centred, &centred);
    let sigma2 = &rss / BigRational::from_integer(BigInt::from(n - p));
    let se = (0..p)
        .map(|j| {
            let mut e = vec![BigRational::zero(); p];
            e[j] = BigRational::from_integer(BigInt::from(1));
            let inv_col = solve_exact(xtx.clone(), e);
            (&sigma2 * &inv_col[j]).to_f64().unwrap().sqrt()
        })
        .collect();
    let r2 = BigRational::from_integer(BigInt::from(1)) - rss / tss;
    (
        b.iter().map(|v| v.to_f64().unwrap()).collect(),
        se,
        r2.to_f64().unwrap(),
    )
}

/// Student-t CDF by adaptive Simpson quadrature of the unnormalised density,
/// mapping [0, ∞) onto [0, 1) with t = u / (1 − u).
pub fn t_cdf_quadrature(t: f64, df: f64) -> f64 {
    let density = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let mapped = |u: f64| {
        if u >= 1.0 {
            // limit of density(u/(1-u))/(1-u)^2 as u → 1
            if df == 1.0 { 1.0 } else { 0.0 }
        } else {
            let w = 1.0 - u;
            density(u / w) / (w * w)
        }
    };
    let half_mass = simpson(&mapped, 0.0, 1.0, 1e-13);
    let upto = simpson(&density, 0.0, t.abs(), 1e-13);
    let tail_fraction = 0.5 * upto / half_mass;
    if t >= 0.0 {
        0.5 + tail_fraction
    } else {
        0.5 - tail_fraction
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

use streamgwp::engine::{footprint, Cell, FootprintOptions};

fn components(cell: &Cell) -> [f64; 3] {
    [cell.gwp.production_kg, cell.gwp.operation_kg, cell.gwp.traffic_kg]
}

fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    a.iter().zip(&b).all(|(x, y)| rel_close(*x, *y, tol))
}

/// Engine output equals the entry-by-entry oracle, for both allocation modes.
pub fn check_oracle(params: &ModelParams, ds: &DiaryDataset) -> Result<(), String> {
    for per_viewer in [false, true] {
        let expected = brute_force(params, ds, per_viewer);
        for p in ds.participants() {
            let got = footprint(params, ds, &p.participant_id, FootprintOptions { per_viewer })
                .map_err(|e| e.to_string())?
                .total();
            let want = expected[p.participant_id.as_str()];
            if !close3(components(&got), want, 1e-12) {
                return Err(format!("{}: engine {:?} vs oracle {want:?}", p.participant_id, components(&got)));
            }
        }
    }
    Ok(())
}

/// Scaling every duration by `k` scales every component by `k`.
pub fn check_linearity(params: &ModelParams, ds: &DiaryDataset, k: f64) -> Result<(), String> {
    let scaled: Vec<_> = ds
        .entries()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.hours *= k;
            e
        })
        .collect();
    let scaled = DiaryDataset::new(ds.participants().to_vec(), scaled).map_err(|e| e.to_string())?;
    for p in ds.participants() {
        let opts = FootprintOptions::default();
        let base = footprint(params, ds, &p.participant_id, opts).unwrap().total();
        let s = footprint(params, &scaled, &p.participant_id, opts).unwrap().total();
        let want = components(&base).map(|v| v * k);
        if !close3(components(&s), want, 1e-12) {
            return Err(format!("k={k}: {:?} vs {want:?}", components(&s)));
        }
    }
    Ok(())
}

/// Footprint of a split diary is the sum of the parts.
pub fn check_additivity(params: &ModelParams, ds: &DiaryDataset, mask: &[bool]) -> Result<(), String> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, e) in ds.entries().iter().enumerate() {
        if mask.get(i).copied().unwrap_or(false) { a.push(e.clone()) } else { b.push(e.clone()) }
    }
    let part = |entries| DiaryDataset::new(ds.participants().to_vec(), entries).unwrap();
    let (da, db) = (part(a), part(b));
    let opts = FootprintOptions::default();
    for p in ds.participants() {
        let id = &p.participant_id;
        let whole = components(&footprint(params, ds, id, opts).unwrap().total());
        let ca = components(&footprint(params, &da, id, opts).unwrap().total());
        let cb = components(&footprint(params, &db, id, opts).unwrap().total());
        let sum = [ca[0] + cb[0], ca[1] + cb[1], ca[2] + cb[2]];
        if !close3(sum, whole, 1e-12) {
            return Err(format!("{id}: parts {sum:?} vs whole {whole:?}"));
        }
    }
    Ok(())
}

/// Every marginal sums back to the total.
pub fn check_marginals(params: &ModelParams, ds: &DiaryDataset) -> Result<(), String> {
    for p in ds.participants() {
        let b = footprint(params, ds, &p.participant_id, FootprintOptions::default()).unwrap();
        let total = b.total();
        let sums: Vec<(&str, Cell)> = vec![
            ("device", b.by_device().values().fold(Cell::default(), |mut a, c| { a += *c; a })),
            ("platform", b.by_platform().values().fold(Cell::default(), |mut a, c| { a += *c; a })),
            ("day", b.by_day().values().fold(Cell::default(), |mut a, c| { a += *c; a })),
            ("slot", b.by_slot().values().fold(Cell::default(), |mut a, c| { a += *c; a })),
            ("platform_device", b.by_platform_device().values().fold(Cell::default(), |mut a, c| { a += *c; a })),
        ];
        for (name, s) in sums {
            if !close3(components(&s), components(&total), 1e-12) || !rel_close(s.hours, total.hours, 1e-12) {
                return Err(format!("{name} marginal {s:?} vs total {total:?}"));
            }
        }
    }
    Ok(())
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random regression problem with planted non-zero slopes.
pub fn random_ols_instance(seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=4);
    let n = rng.gen_range(k + 4..=20);
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let slopes: Vec<f64> = (0..k)
        .map(|_| rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let y = (0..n)
        .map(|r| 1.5 + (0..k).map(|j| slopes[j] * columns[j][r]).sum::<f64>() + rng.gen_range(-1.0..1.0))
        .collect();
    (y, columns)
}

/// Compares `ols` with the exact oracle on one instance.
pub fn check_ols_against_oracle(seed: u64) -> Result<(), String> {
    use streamgwp::analysis::{ols, Predictor};
    let (y, columns) = random_ols_instance(seed);
    let predictors: Vec<Predictor> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| Predictor::new(format!("x{i}"), c.clone()))
        .collect();
    let fit = ols("y", &y, &predictors).map_err(|e| e.to_string())?;
    let (b, se, r2) = exact_ols(&y, &columns);
    let got_b: Vec<f64> = std::iter::once(fit.intercept.b).chain(fit.coefficients.iter().map(|c| c.b)).collect();
    let got_se: Vec<f64> = std::iter::once(fit.intercept.se).chain(fit.coefficients.iter().map(|c| c.se)).collect();
    for j in 0..b.len() {
        if !rel_close(got_b[j], b[j], 1e-9) || !rel_close(got_se[j], se[j], 1e-9) {
            return Err(format!("seed {seed} term {j}: b {} vs {}, se {} vs {}", got_b[j], b[j], got_se[j], se[j]));
        }
    }
    if !rel_close(fit.r_squared, r2, 1e-9) {
        return Err(format!("seed {seed}: R² {} vs {r2}", fit.r_squared));
    }
    Ok(())
}

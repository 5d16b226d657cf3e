//! The end-to-end acceptance checks. Each one panics on failure and
//! returns a short summary of what it measured. The focused test files
//! and the `acceptance` runner share them.

use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use mfagl::aggl::{loss, read_predictions, train, write_predictions, GranularPrediction, MfAglModel, TrainConfig};
use mfagl::geofeatures::io::{read_geofeatures, read_pois, read_trajectories, write_geofeatures, write_pois, write_trajectories};
use mfagl::geofeatures::{
    count_within_radius, daily_geo_rows, detect_stay_points, extract_features, haversine, FeatureConfig, GpsPoint,
    GpsTrajectory, LatLon, Poi,
};
use mfagl::harness::metrics::{mape, pearson};
use mfagl::harness::{evaluate_models, schedule_run, EvalConfig, ScheduleConfig, MODEL_AR, MODEL_MFAGL};
use mfagl::netcore::{Activation, Gradient, Network, NetworkConfig};
use mfagl::regions::io::{read_hierarchy, read_labels, read_panel, write_hierarchy, write_labels, write_panel};
use mfagl::regions::{AreaId, Features, FrequencyCalendar, Labels, MixedFrequencyPanel, Period, RegionHierarchy};
use mfagl::synth::{generate_world, read_truth, write_truth, WorldConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{by_area, random_small_panel, rel_diff, small_train_config, Layout};

// ---- aggregate loss ----

/// The aggregate loss written out as nested loops over the plain layout.
pub fn brute_force_loss(panel: &MixedFrequencyPanel, layout: &Layout, model: &MfAglModel) -> f64 {
    let mut total = 0.0;
    for (p, kids) in &layout.areas {
        for (t, days) in &layout.months {
            let y = layout
                .labels
                .iter()
                .find(|(lp, lt, _)| lp == p && lt == t)
                .map(|l| l.2)
                .unwrap();
            for &d in days {
                let mut agg = 0.0;
                for (q, w) in kids {
                    agg += w * model.predict_at(&panel.features, q, d).unwrap();
                }
                total += (y - agg) * (y - agg);
            }
        }
    }
    total
}

pub fn loss_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (panel, layout) = random_small_panel(&mut rng, case % 2 == 0);
        assert!(panel.validate().is_empty(), "case {case}");
        let model = MfAglModel::init(&panel, &small_train_config(case)).unwrap();
        let lib = loss(&panel, &model).unwrap();
        let oracle = brute_force_loss(&panel, &layout, &model);
        let d = rel_diff(lib, oracle);
        assert!(d <= 1e-9, "case {case}: {lib} vs {oracle}");
        worst = worst.max(d);
    }
    format!("50 panels, worst relative difference {worst:.1e}")
}

pub fn singleton_panel() -> MixedFrequencyPanel {
    let hierarchy = RegionHierarchy::new([("q", "p", None)]).unwrap();
    let calendar = FrequencyCalendar::monthly(Period::new(2020, 1).unwrap(), Period::new(2020, 3).unwrap()).unwrap();
    let features: Features = calendar
        .ticks()
        .iter()
        .enumerate()
        .map(|(i, &d)| (AreaId::new("q"), d, (10 + (i * 7) % 13) as f64))
        .collect();
    let labels: Labels = calendar
        .periods()
        .iter()
        .zip([310.0, 295.5, 330.25])
        .map(|(&t, y)| ((AreaId::new("p"), t), y))
        .collect();
    MixedFrequencyPanel::new(hierarchy, calendar, features, labels)
}

fn supervised_sum(panel: &MixedFrequencyPanel, model: &MfAglModel) -> f64 {
    let mut total = 0.0;
    for (&(_, t), &y) in &panel.labels {
        for d in t.dates() {
            let r = y - model.predict_at(&panel.features, "q", d).unwrap();
            total += r * r;
        }
    }
    total
}

pub fn singleton_is_supervised() -> String {
    let panel = singleton_panel();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let config = TrainConfig {
            epochs: 2,
            ..small_train_config(seed)
        };
        let model = train(&panel, &config).unwrap().model;
        let lib = loss(&panel, &model).unwrap();
        let sup = supervised_sum(&panel, &model);
        let d = rel_diff(lib, sup);
        assert!(d <= 1e-12, "{lib} vs {sup}");
        worst = worst.max(d);
    }
    format!("5 trained models, worst relative difference {worst:.1e}")
}

// ---- gradients ----

const H: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
/// Below this both sides are numerically zero for the differences.
const GRAD_ZERO: f64 = 1e-8;

fn small_net_config() -> NetworkConfig {
    NetworkConfig {
        input_size: 1,
        hidden_size: 3,
        extra_size: 3,
        mlp_hidden: vec![4],
        mlp_activation: Activation::Tanh,
        output: Activation::Softplus,
    }
}

fn random_net(rng: &mut ChaCha8Rng) -> Network {
    let mut net = Network::init(&small_net_config(), rng).unwrap();
    for s in net.slices_mut() {
        for v in s.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    net
}

/// Compare every analytic entry with a central difference of `objective`;
/// returns the largest relative error.
fn finite_difference_check(net: &Network, analytic: &[Vec<f64>], objective: impl Fn(&Network) -> f64) -> f64 {
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (b, grads) in analytic.iter().enumerate() {
        for (i, &g) in grads.iter().enumerate() {
            let orig = probe.slices()[b][i];
            probe.slices_mut()[b][i] = orig + H;
            let up = objective(&probe);
            probe.slices_mut()[b][i] = orig - H;
            let down = objective(&probe);
            probe.slices_mut()[b][i] = orig;
            let fd = (up - down) / (2.0 * H);
            if g.abs() < GRAD_ZERO && fd.abs() < GRAD_ZERO {
                continue;
            }
            let rel = (g - fd).abs() / g.abs().max(fd.abs());
            assert!(rel <= GRAD_TOL, "buffer {b} index {i}: analytic {g} fd {fd}");
            worst = worst.max(rel);
        }
    }
    worst
}

pub fn output_gradient() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let net = random_net(&mut rng);
        let seq: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let extra: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (_, trace) = net.forward(&seq, &extra).unwrap();
        let grad = net.backward(&trace, 1.0).unwrap();
        let analytic: Vec<Vec<f64>> = grad.slices().iter().map(|s| s.to_vec()).collect();
        worst = worst.max(finite_difference_check(&net, &analytic, |n| n.predict(&seq, &extra).unwrap()));
    }
    format!("20 nets, worst relative error {worst:.1e}")
}

/// The squared aggregate residual over several children, as the trainer
/// forms it.
pub fn aggregate_residual_gradient() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let net = random_net(&mut rng);
        let n_children = rng.gen_range(1..=6);
        let inputs: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..n_children)
            .map(|_| {
                (
                    (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                    (0..3).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    rng.gen_range(0.1..1.0),
                )
            })
            .collect();
        let y: f64 = rng.gen_range(0.0..5.0);
        let objective = |n: &Network| {
            let agg: f64 = inputs.iter().map(|(s, e, w)| w * n.predict(s, e).unwrap()).sum();
            (y - agg).powi(2)
        };
        let items: Vec<(&[f64], &[f64])> = inputs.iter().map(|(s, e, _)| (&s[..], &e[..])).collect();
        let (outs, trace) = net.forward_batch(&items).unwrap();
        let agg: f64 = outs.iter().zip(&inputs).map(|(o, (_, _, w))| w * o).sum();
        let upstream: Vec<f64> = inputs.iter().map(|(_, _, w)| -2.0 * (y - agg) * w).collect();
        let mut grad = Gradient::zeros_like(&net);
        net.backward_batch_into(&trace, &upstream, &mut grad).unwrap();
        let analytic: Vec<Vec<f64>> = grad.slices().iter().map(|s| s.to_vec()).collect();
        worst = worst.max(finite_difference_check(&net, &analytic, objective));
    }
    format!("20 nets, worst relative error {worst:.1e}")
}

// ---- recovery on the default world ----

pub struct Recovery {
    pub pearson: f64,
    pub mfagl_mape: f64,
    pub ar_mape: f64,
}

/// Train with the default recipe on every month but the last and score the
/// last month against the latent truth.
pub fn recovery() -> Recovery {
    let world = generate_world(&WorldConfig::default()).unwrap();
    let eval = evaluate_models(&world.panel, &EvalConfig::default()).unwrap();
    let holdout = eval.report.holdout;
    assert_eq!(holdout, WorldConfig::default().last_period());
    let (pred, truth): (Vec<f64>, Vec<f64>) = eval
        .granular
        .iter()
        .map(|(q, v)| (*v, world.truth[&(q.clone(), holdout)]))
        .unzip();
    Recovery {
        pearson: pearson(&pred, &truth).unwrap(),
        mfagl_mape: eval.report.row(MODEL_MFAGL).unwrap().mape.0,
        ar_mape: eval.report.row(MODEL_AR).unwrap().mape.0,
    }
}

// ---- release schedule ----

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

pub fn cheap_schedule() -> ScheduleConfig {
    let mut c = ScheduleConfig::default();
    c.baselines.rf.n_trees = 10;
    c
}

pub fn quick_model(panel: &MixedFrequencyPanel) -> MfAglModel {
    let config = TrainConfig {
        epochs: 1,
        ..small_train_config(3)
    };
    train(panel, &config).unwrap().model
}

/// Every label handed to AR or RF was already released.
pub fn no_early_label_reads() -> String {
    let panel = generate_world(&WorldConfig::default()).unwrap().panel;
    let config = cheap_schedule();
    let ticks = panel.calendar.ticks();
    let (mut days, mut granted, mut denied) = (0, 0, 0);
    for &as_of in ticks.iter().step_by(5) {
        let run = schedule_run(&panel, None, as_of, &config).unwrap();
        for a in &run.label_accesses {
            assert!(
                !a.granted || a.release_date <= as_of,
                "{as_of}: read {} {} released {}",
                a.area,
                a.period,
                a.release_date
            );
            if a.granted {
                granted += 1;
            } else {
                denied += 1;
            }
        }
        if let Some(t) = run.newest_released {
            assert!(config.release.release_date(t) <= as_of);
            assert!(config.release.release_date(t.next()) > as_of);
        }
        days += 1;
    }
    assert!(granted > 0);
    let oct1 = schedule_run(&panel, None, d(2020, 10, 1), &config).unwrap();
    assert_eq!(oct1.newest_released, Some(Period::new(2020, 7).unwrap()));
    format!("{days} nowcast days, {granted} reads granted, {denied} refused, Oct 1 sees July")
}

/// Nowcasts on consecutive days of one month move with the features.
pub fn consecutive_days_differ() -> String {
    let panel = generate_world(&WorldConfig::default()).unwrap().panel;
    let model = quick_model(&panel);
    let mut pairs = 0;
    for q in panel.hierarchy.small_areas() {
        for day in 1..30 {
            let tau = d(2020, 9, day);
            let next = tau + Duration::days(1);
            let (a, b) = (
                model.window(&panel.features, q.as_str(), tau).unwrap(),
                model.window(&panel.features, q.as_str(), next).unwrap(),
            );
            if a.visit_lags != b.visit_lags {
                let ya = model.predict_at(&panel.features, q.as_str(), tau).unwrap();
                let yb = model.predict_at(&panel.features, q.as_str(), next).unwrap();
                assert_ne!(ya, yb, "{q} {tau}");
                pairs += 1;
            }
        }
    }
    assert!(pairs > 100);
    format!("{pairs} day pairs")
}

// ---- MAPE fixture ----

pub fn mape_fixture() -> String {
    let m = mape(&by_area(&[("a", 100.0), ("b", 200.0)]), &by_area(&[("a", 110.0), ("b", 180.0)])).unwrap();
    assert_eq!(m.to_string(), "10.00");
    assert!((m.0 - 10.0).abs() < 1e-12);
    format!("MAPE {m}%")
}

// ---- geo-features ----

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 4, 12, 8, 0, 0).unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn radius_monotonicity() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let poi = Poi::new("o", 35.0, 139.0, 25.0).unwrap();
    for _ in 0..100 {
        let n = rng.gen_range(0..60);
        let mut t = t0();
        let pts = (0..n)
            .map(|_| {
                t += Duration::seconds(rng.gen_range(1..600));
                GpsPoint::new(t, 35.0 + rng.gen_range(-0.01..0.01), 139.0 + rng.gen_range(-0.01..0.01))
            })
            .collect();
        let traj = GpsTrajectory::new("u", pts).unwrap();
        let mut radii: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1500.0)).collect();
        radii.sort_by(f64::total_cmp);
        let counts: Vec<u64> = radii.iter().map(|&r| count_within_radius(&traj, &poi, r)).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{radii:?} {counts:?}");
        let row = extract_features(&traj, &poi, &FeatureConfig::default()).unwrap();
        // The default ladder runs from wide to narrow.
        assert!(row.records_inside.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(row.records_inside[0] + row.records_outside_500m, n as u64);
    }
    "100 random trajectories".into()
}

pub fn stationary_trace() -> String {
    let pts = (0..10).map(|i| GpsPoint::new(t0() + Duration::seconds(i * 133), 35.0, 139.0)).collect();
    let traj = GpsTrajectory::new("u", pts).unwrap();
    assert_eq!(detect_stay_points(&traj, 200.0, 300.0).len(), 1);
    let row = extract_features(&traj, &Poi::new("o", 35.0, 139.0, 20.0).unwrap(), &FeatureConfig::default()).unwrap();
    assert_eq!((row.mean_speed, row.max_speed, row.stay_count), (0.0, 0.0, 1));
    "1 stay point, zero speeds".into()
}

pub fn straight_approach() -> String {
    // Due north towards a POI 1 km away.
    let step = 1.0 / 111_194.93;
    let pts = [0.0, 300.0, 600.0]
        .iter()
        .enumerate()
        .map(|(i, m)| GpsPoint::new(t0() + Duration::seconds(60 * i as i64), m * step, 0.0))
        .collect();
    let traj = GpsTrajectory::new("u", pts).unwrap();
    let poi = Poi::new("o", 1000.0 * step, 0.0, 10.0).unwrap();
    let row = extract_features(&traj, &poi, &FeatureConfig::default()).unwrap();
    assert!((row.cosine_at_9[0] + 1.0).abs() <= 1e-6, "{:?}", row.cosine_at_9);
    assert!((row.cosine_at_9[1] + 1.0).abs() <= 1e-6);
    assert_eq!(row.cosine_at_9[2], -1.0, "the first record has no predecessor");
    format!("cosines {:?}", &row.cosine_at_9[..3])
}

pub fn equator_degree() -> String {
    let dist = haversine(LatLon::new(0.0, 0.0), LatLon::new(0.0, 1.0));
    assert!((dist - 111_194.9).abs() <= 1.0, "{dist}");
    format!("{dist:.2} m")
}

pub fn golden_row() -> String {
    let trajs = read_trajectories(&fixture("golden_trace.csv")).unwrap();
    let pois = read_pois(&fixture("golden_poi.csv")).unwrap();
    assert_eq!(trajs[0].len(), 20);
    let rows = daily_geo_rows(&trajs, &pois, &FeatureConfig::default()).unwrap();
    let golden = read_geofeatures(&fixture("golden_row.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    let (got, want) = (&rows[0], &golden[0]);
    assert_eq!((&got.user, got.date, &got.office_id), (&want.user, want.date, &want.office_id));
    assert_eq!(got.features.names(), want.features.names());

    // Counts worked out by hand from the trace layout: approach at
    // 590/470/380/260/170/95 m, eight records within 10 m, departure at
    // 85/190/280/360/450/550 m.
    let f = &got.features;
    assert_eq!(f.records_inside, [18, 16, 14, 12, 10, 10, 9, 8, 8, 8, 8, 8, 8, 8, 8, 0, 0]);
    assert_eq!((f.records_outside_500m, f.records_inside_building, f.stay_count), (2, 8, 1));

    for (name, (a, b)) in f.names().iter().zip(f.values().into_iter().zip(want.features.values())) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{name}: {a} vs golden {b}");
    }
    format!("{} columns", f.names().len())
}

// ---- determinism through the CLI ----

fn mfagl(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_mfagl")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "mfagl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// simulate → train → evaluate in `dir`; returns (report, checkpoint) bytes.
fn pipeline(dir: &Path, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let data = dir.join("world");
    let ckpt = dir.join("model.json");
    let report = dir.join("report.csv");
    let seed = format!("seed={seed}");
    let common = ["--set", &seed, "--set", "epochs=3", "--set", "hidden_size=6", "--set", "rf.n_trees=20"];
    let run = |extra: &[&str]| {
        let mut args: Vec<&str> = extra.to_vec();
        args.extend_from_slice(&common);
        mfagl(&args);
    };
    run(&["simulate", "--out", data.to_str().unwrap(), "--set", "world.n_months=16"]);
    run(&["train", "--data", data.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    run(&["evaluate", "--data", data.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    (std::fs::read(&report).unwrap(), std::fs::read(&ckpt).unwrap())
}

pub fn end_to_end_determinism() -> String {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(a.path(), 21);
    let second = pipeline(b.path(), 21);
    assert!(first.0 == second.0, "reports differ");
    assert!(first.1 == second.1, "checkpoints differ");
    let other = pipeline(b.path(), 22);
    assert!(other.1 != first.1, "the seed has no effect");
    format!("report {} B and checkpoint {} B identical", first.0.len(), first.1.len())
}

// ---- file round trips ----

fn awkward(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen::<f64>() / 3.0,
        1 => rng.gen_range(0.0..1e9),
        2 => 1.0 / rng.gen_range(1.0..1e12),
        _ => rng.gen_range(0u32..1000) as f64,
    }
}

pub fn panel_round_trip() -> String {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut world = generate_world(&WorldConfig {
        n_months: 5,
        ..WorldConfig::default()
    })
    .unwrap();
    for v in world.panel.labels.values_mut() {
        *v = awkward(&mut rng) + 1.0;
    }
    write_panel(dir.path(), &world.panel).unwrap();
    assert_eq!(read_panel(dir.path()).unwrap(), world.panel);

    let labels: Labels = (0..30)
        .map(|i| ((AreaId::new(format!("P{}", i % 4)), Period::new(2019, 1).unwrap().add_months(i)), awkward(&mut rng)))
        .collect();
    let lp = dir.path().join("labels-awkward.csv");
    write_labels(&lp, &labels).unwrap();
    assert_eq!(read_labels(&lp).unwrap(), labels);

    let h = dir.path().join("hierarchy-weighted.csv");
    let weighted = RegionHierarchy::new([("a", "P", Some(0.25)), ("b", "P", Some(1.0 / 3.0)), ("c", "Q", None)]).unwrap();
    write_hierarchy(&h, &weighted).unwrap();
    assert_eq!(read_hierarchy(&h).unwrap(), weighted);

    let t = dir.path().join("truth.csv");
    write_truth(&t, &world.truth).unwrap();
    assert_eq!(read_truth(&t).unwrap(), world.truth);
    "hierarchy, labels, features, truth".into()
}

pub fn predictions_round_trip() -> String {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let preds: Vec<GranularPrediction> = (0..40)
        .map(|i| {
            let as_of = NaiveDate::from_ymd_opt(2020, 1 + i % 12, 1 + i % 28).unwrap();
            GranularPrediction {
                small_area: AreaId::new(format!("q{i}")),
                as_of,
                period: Period::of(as_of),
                value: awkward(&mut rng),
            }
        })
        .collect();
    let p = dir.path().join("predictions.csv");
    write_predictions(&p, &preds).unwrap();
    assert_eq!(read_predictions(&p).unwrap(), preds);
    "40 predictions".into()
}

pub fn gps_round_trip() -> String {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t0 = Utc.with_ymd_and_hms(2020, 6, 1, 7, 0, 0).unwrap();
    let trajs: Vec<GpsTrajectory> = (0..4)
        .map(|u| {
            let mut t = t0;
            let pts = (0..30)
                .map(|_| {
                    t += Duration::milliseconds(rng.gen_range(1_000..900_000));
                    GpsPoint::new(t, 35.0 + rng.gen_range(-0.01..0.01), 139.0 + rng.gen_range(-0.01..0.01))
                })
                .collect();
            GpsTrajectory::new(format!("user{u}"), pts).unwrap()
        })
        .collect();
    let pois = vec![
        Poi::new("A", 35.001, 139.002, 40.0).unwrap(),
        Poi::new("B", 34.995, 138.996, 1.0 / 3.0 * 100.0).unwrap(),
    ];
    let tp = dir.path().join("trajectories.csv");
    write_trajectories(&tp, &trajs).unwrap();
    assert_eq!(read_trajectories(&tp).unwrap(), trajs);
    let pp = dir.path().join("pois.csv");
    write_pois(&pp, &pois).unwrap();
    assert_eq!(read_pois(&pp).unwrap(), pois);
    let rows = daily_geo_rows(&trajs, &pois, &FeatureConfig::default()).unwrap();
    assert!(rows.len() >= 4);
    let gp = dir.path().join("geofeatures.csv");
    write_geofeatures(&gp, &rows).unwrap();
    assert_eq!(read_geofeatures(&gp).unwrap(), rows);
    format!("{} trajectories, {} POIs, {} geo rows", trajs.len(), pois.len(), rows.len())
}

pub fn checkpoint_bits() -> String {
    let dir = tempfile::tempdir().unwrap();
    let world = generate_world(&WorldConfig {
        n_months: 3,
        ..WorldConfig::default()
    })
    .unwrap();
    let model = train(
        &world.panel,
        &TrainConfig {
            epochs: 1,
            standardize: true,
            ..small_train_config(9)
        },
    )
    .unwrap()
    .model;
    let p = dir.path().join("model.json");
    model.save(&p).unwrap();
    let back = MfAglModel::load(&p).unwrap();
    let bits = |m: &MfAglModel| -> Vec<u64> { m.network.slices().iter().flat_map(|s| s.iter().map(|v| v.to_bits())).collect() };
    let n = bits(&model).len();
    assert_eq!(bits(&back), bits(&model));
    assert_eq!(back.scaling.feature.to_bits(), model.scaling.feature.to_bits());
    assert_eq!(back.scaling.target.to_bits(), model.scaling.target.to_bits());
    assert_eq!(back, model);
    format!("{n} parameters bit-exact")
}

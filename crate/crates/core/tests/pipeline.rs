use barry_core::audit::{audit_series, audit_series_with, Classification};
use barry_core::ingest::{
    generate_scenario, parse_csv, parse_json, read_dataset, to_csv, to_json, write_dataset, DefectInjection,
    DefectKind, Format, ScenarioSpec,
};
use barry_core::owi::{builtin_spec, DatasetSeries};
use barry_core::par::Strategy;
use barry_core::render::{
    animate, frame_file_name, frame_to_svg, jitter_overlaps, metric_shares, project_frame, project_frame_with,
    render_frame, render_frames_with, stacked_chart, timeseries_chart, ViewConfig,
};
use barry_core::simplex::{barycentric_from_shares, contains, face_distances, NormalizationMode, ViewRotation};

fn scenario(name: &str, snaps: Option<usize>, seed: u64) -> DatasetSeries {
    generate_scenario(&ScenarioSpec::builtin(name, None, snaps, seed).unwrap()).unwrap()
}

fn attr<'a>(element: &'a str, name: &str) -> &'a str {
    let key = format!(" {name}=\"");
    let start = element.find(&key).unwrap() + key.len();
    let rest = &element[start..];
    &rest[..rest.find('"').unwrap()]
}

#[test]
fn fig6_frame_geometry() {
    let d = scenario("fig6", Some(3), 42);
    let view = ViewConfig::builtin("session3").unwrap();
    let scene = project_frame(&d, 1, &view).unwrap();
    assert_eq!(scene.dots.len(), 60);
    let idle_vertex = scene.embedding.vertex(1);
    let wait_vertex = scene.embedding.vertex(2);
    assert_eq!(scene.dots.iter().filter(|d| d.position == idle_vertex).count(), 4);
    assert_eq!(scene.dots.iter().filter(|d| d.position == wait_vertex).count(), 2);
    let half = scene
        .dots
        .iter()
        .filter(|d| (face_distances(&d.position, &scene.embedding).unwrap()[1] - 0.5).abs() < 1e-9)
        .count();
    assert_eq!(half, 2);
    assert!(scene.dots.iter().all(|d| contains(&d.position, &scene.embedding)));

    let radius = 0.015;
    let jittered = jitter_overlaps(&scene, radius, 0);
    let waiting: Vec<_> = scene.dots.iter().enumerate().filter(|(_, d)| d.position == wait_vertex).collect();
    let (a, b) = (jittered.dots[waiting[0].0].screen, jittered.dots[waiting[1].0].screen);
    assert!((a.distance(&b) - 2.0 * radius).abs() < 1e-9);
    for (before, after) in scene.dots.iter().zip(&jittered.dots) {
        assert!(before.screen.distance(&after.screen) <= radius + 1e-12);
        assert_eq!(before.coords, after.coords);
    }
}

#[test]
fn rendered_frame_contents() {
    let d = scenario("fig6", Some(2), 42);
    let svg = String::from_utf8(render_frame(&d, 2, &ViewConfig::builtin("session3").unwrap()).unwrap()).unwrap();
    assert_eq!(svg.matches("<circle class=\"dot\"").count(), 60);
    assert_eq!(svg.matches("<line class=\"gridline\"").count(), 27);
    assert!(svg.contains("<text class=\"odometer\""));
    let order: Vec<usize> =
        ["class=\"frame\"", "class=\"gridlines\"", "class=\"dots\"", "class=\"labels\"", "class=\"odometer\""]
            .iter()
            .map(|k| svg.find(k).unwrap())
            .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn tetrahedron_rotation_moves_only_screen() {
    let d = scenario("fig8", Some(2), 5);
    let mut view = ViewConfig::builtin("session4").unwrap();
    let a = project_frame(&d, 1, &view).unwrap();
    view.rotation = ViewRotation::new(120.0, -35.0).unwrap();
    let b = project_frame(&d, 1, &view).unwrap();
    assert_eq!(a.n(), 4);
    for (x, y) in a.dots.iter().zip(&b.dots) {
        assert_eq!(x.coords, y.coords);
        assert_eq!(x.position, y.position);
        assert_eq!(x.color, y.color);
    }
    assert_ne!(a.dots[0].screen, b.dots[0].screen);
}

#[test]
fn colors_stable_across_frames() {
    let d = scenario("uniform", Some(3), 11);
    let view = ViewConfig::builtin("session3").unwrap();
    let f1 = project_frame(&d, 1, &view).unwrap();
    let f3 = project_frame(&d, 3, &view).unwrap();
    for dot in &f1.dots {
        assert_eq!(dot.color, f3.dot(&dot.session_id).unwrap().color);
    }
}

#[test]
fn drift_io_band_and_single_crossing() {
    let d = scenario("drift", None, 42);
    let rows = metric_shares(&d, &["IO_PCT", "DB_CPU_PCT", "WAIT_PCT"]).unwrap();
    assert_eq!(rows.len(), 42);
    for r in &rows {
        assert!((r.shares[0] - 0.10).abs() <= 0.01, "snap {} io {}", r.snap_id, r.shares[0]);
        assert!((r.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    let svg = String::from_utf8(timeseries_chart(&d, &["DB_CPU_PCT", "WAIT_PCT"]).unwrap()).unwrap();
    let series: Vec<Vec<f64>> = svg
        .lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| attr(l, "points").split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect())
        .collect();
    assert_eq!(series.len(), 2);
    let diff: Vec<f64> = series[0].iter().zip(&series[1]).map(|(a, b)| a - b).collect();
    assert_eq!(diff.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count(), 1);
    assert!(svg.contains("class=\"legend\""));
}

#[test]
fn stacked_chart_bands() {
    let d = scenario("drift", Some(10), 3);
    let svg = String::from_utf8(stacked_chart(&d, &["IO_PCT", "DB_CPU_PCT", "WAIT_PCT"]).unwrap()).unwrap();
    let bands: Vec<&str> = svg.lines().filter(|l| l.starts_with("<rect class=\"band\"")).collect();
    assert_eq!(bands.len(), 30);
    let rows = metric_shares(&d, &["IO_PCT", "DB_CPU_PCT", "WAIT_PCT"]).unwrap();
    for (i, row) in rows.iter().enumerate() {
        let snap_bands = &bands[i * 3..i * 3 + 3];
        let heights: Vec<f64> = snap_bands.iter().map(|b| attr(b, "height").parse().unwrap()).collect();
        let total: f64 = heights.iter().sum();
        for (h, share) in heights.iter().zip(&row.shares) {
            assert!((h / total - share).abs() < 1e-3);
        }
        // stack top is flat because the shares partition the snap
        let top: f64 = attr(snap_bands[2], "y").parse().unwrap();
        let first_top: f64 = attr(bands[2], "y").parse().unwrap();
        assert!((top - first_top).abs() < 2e-3);
    }
}

#[test]
fn audit_finds_injected_defects() {
    let spec = ScenarioSpec::builtin("fig6", None, Some(5), 42).unwrap().with_defects(DefectInjection {
        count: 3,
        kind: DefectKind::Unaccounted,
        magnitude_ms: 100,
    });
    let d = generate_scenario(&spec).unwrap();
    let report = audit_series(&d, 0.01);
    assert_eq!(report.findings.len(), 3);
    assert!(report.findings.iter().all(|f| f.classification == Classification::Unaccounted));
    assert!(report.findings.iter().all(|f| (f.residual_ms - 100.0).abs() < 1e-9));
    assert_eq!(report.totals.total(), 300);
    assert_eq!(audit_series_with(&d, 0.01, Strategy::Sequential), report);
}

#[test]
fn slack_coordinate_equals_audit_residual() {
    let spec = ScenarioSpec::builtin("uniform", Some(10), Some(4), 8).unwrap().with_defects(DefectInjection {
        count: 12,
        kind: DefectKind::Unaccounted,
        magnitude_ms: 70,
    });
    let d = generate_scenario(&spec).unwrap();
    let findings = audit_series(&d, 0.0).findings;
    let spec3 = builtin_spec("session3").unwrap();
    for s in d.snapshots() {
        let values: Vec<f64> = spec3.sources().map(|m| s.metrics.get(m).unwrap()).collect();
        let p = barycentric_from_shares(&values, s.sample_interval_ms, NormalizationMode::Slack).unwrap();
        let residual = findings
            .iter()
            .find(|f| f.snap_id == s.snap_id && f.session_id == s.session_id)
            .map(|f| f.residual_fraction)
            .unwrap_or(0.0);
        assert_eq!(p.coords()[3], residual);
    }
}

#[test]
fn dataset_round_trips() {
    let spec = ScenarioSpec::builtin("fig6", Some(10), Some(3), 42).unwrap().with_accounting(true);
    let d = generate_scenario(&spec).unwrap();
    let csv = to_csv(&d);
    assert_eq!(parse_csv(std::str::from_utf8(&csv).unwrap()).unwrap(), d);
    let json = to_json(&d);
    assert_eq!(parse_json(std::str::from_utf8(&json).unwrap()).unwrap(), d);

    let dir = tempfile::tempdir().unwrap();
    for file in ["d.csv", "d.json"] {
        let path = dir.path().join(file);
        write_dataset(&d, &path, Format::Auto).unwrap();
        let first = std::fs::read(&path).unwrap();
        assert_eq!(read_dataset(&path, Format::Auto).unwrap(), d);
        write_dataset(&read_dataset(&path, Format::Auto).unwrap(), &path, Format::Auto).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}

#[test]
fn animation_is_deterministic() {
    let d = scenario("drift", Some(100), 42);
    let view = ViewConfig::builtin("owi3").unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(animate(&d, &view, a.path()).unwrap(), 100);
    assert_eq!(animate(&d, &view, b.path()).unwrap(), 100);
    for id in [1u64, 8, 100] {
        let name = frame_file_name(id);
        let fa = std::fs::read_to_string(a.path().join(&name)).unwrap();
        assert_eq!(fa.as_bytes(), std::fs::read(b.path().join(&name)).unwrap().as_slice());
        assert!(fa.contains(&format!(">{id}</text>\n</svg>")));
    }
    assert_eq!(std::fs::read_dir(a.path()).unwrap().count(), 100);
}

#[test]
fn strategies_produce_identical_output() {
    let d = scenario("fig6", Some(6), 9);
    let mut view = ViewConfig::builtin("session3").unwrap();
    view.jitter_radius = 0.01;
    assert_eq!(
        project_frame_with(&d, 4, &view, Strategy::Sequential).unwrap(),
        project_frame_with(&d, 4, &view, Strategy::Parallel).unwrap()
    );
    assert_eq!(
        render_frames_with(&d, &view, Strategy::Sequential).unwrap(),
        render_frames_with(&d, &view, Strategy::Parallel).unwrap()
    );
}

#[test]
fn rendering_same_scene_twice_is_identical() {
    let d = scenario("uniform", Some(1), 1);
    let scene = project_frame(&d, 1, &ViewConfig::builtin("session3").unwrap()).unwrap();
    assert_eq!(frame_to_svg(&scene), frame_to_svg(&scene));
}

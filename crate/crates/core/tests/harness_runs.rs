use nadrc_core::control::VariantKind;
use nadrc_core::harness::compare::compare_variants;
use nadrc_core::harness::export::{
    comparison_error_svg, comparison_svg, export_comparison_svg, export_csv, export_svg, run_svg,
    trace_csv,
};
use nadrc_core::harness::{parse_scenario, run_scenario, RunError, Scenario, ScenarioError};
use nadrc_core::plants::{PlantParams, SignalSpec};

fn zero_scenario(variant: VariantKind) -> Scenario {
    Scenario {
        plant: PlantParams {
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            disturbance_on: false,
            ..PlantParams::default()
        },
        reference: SignalSpec::zero(),
        horizon: 2.0,
        ..Scenario::default()
    }
    .with_variant(variant)
}

#[test]
fn zero_plant_zero_metrics() {
    for v in [VariantKind::Conventional, VariantKind::Nested] {
        let r = run_scenario(&zero_scenario(v)).unwrap();
        assert!(r.metrics.itae.abs() <= 1e-9, "{v:?}");
        assert!(r.metrics.isu.abs() <= 1e-9, "{v:?}");
    }
}

#[test]
fn conventional_default_tracks_reference() {
    let r = run_scenario(&Scenario::default()).unwrap();
    let y = r.trace.channel("y").unwrap();
    let r1 = r.trace.channel("r1").unwrap();
    let start = r.trace.grid().iter().position(|&t| t >= 16.0).unwrap();
    let worst = (start..y.len()).map(|k| (y[k] - r1[k]).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05, "steady |y - r1| = {worst}");
}

#[test]
fn nested_not_worse_in_any_cell() {
    let cmp = compare_variants(&Scenario::default()).unwrap();
    let c = cmp.reference.cells();
    let n = cmp.candidate.cells();
    for k in 0..4 {
        assert!(n[k] <= c[k], "cell {k}: {} > {}", n[k], c[k]);
    }
}

#[test]
fn same_seed_same_csv_other_seed_differs() {
    let s = Scenario {
        horizon: 3.0,
        ..Scenario::default()
    }
    .with_noise(true);
    let a = trace_csv(&run_scenario(&s).unwrap().trace).unwrap();
    let b = trace_csv(&run_scenario(&s).unwrap().trace).unwrap();
    assert_eq!(a, b);
    let mut other = s.clone();
    other.noise.seed += 1;
    assert_ne!(a, trace_csv(&run_scenario(&other).unwrap().trace).unwrap());
}

#[test]
fn noise_only_enters_measurement() {
    let s = Scenario {
        horizon: 1.0,
        ..Scenario::default()
    }
    .with_noise(true);
    let r = run_scenario(&s).unwrap();
    let y = r.trace.channel("y").unwrap();
    let x1 = r.trace.channel("x1").unwrap();
    let spread: f64 = y.iter().zip(x1).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    assert!((spread / s.noise.variance - 1.0).abs() < 0.2, "noise power {spread}");
}

#[test]
fn csv_export_files() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_scenario(&Scenario {
        horizon: 0.5,
        ..Scenario::default()
    })
    .unwrap();
    let p = dir.path().join("run.csv");
    export_csv(&r, &p).unwrap();
    let first = std::fs::read(&p).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), r.trace.len() + 1);
    assert!(!text.contains('\r'));
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    assert!(header.contains(&"L") && header.contains(&"e3"));
    export_csv(&r, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), first);
}

#[test]
fn horizon_below_one_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario {
        horizon: 5e-4,
        ..Scenario::default()
    };
    let err = run_scenario(&s).unwrap_err();
    assert!(matches!(err, RunError::Scenario(ScenarioError::Invalid { ref key, .. }) if key == "horizon"));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn unwritable_path_reports_io_error() {
    let r = run_scenario(&Scenario {
        horizon: 0.1,
        ..Scenario::default()
    })
    .unwrap();
    let err = export_csv(&r, std::path::Path::new("/nonexistent-dir/x.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
}

fn panels(svg: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().all(|n| n.tag_name().name() != "script"));
    doc.descendants()
        .filter(|n| n.attribute("class") == Some("panel"))
        .map(|g| {
            g.descendants()
                .filter(|n| n.is_text())
                .filter_map(|n| n.text())
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect()
}

#[test]
fn run_svg_panels() {
    let s = Scenario {
        horizon: 2.0,
        ..Scenario::default()
    };
    let c = panels(&run_svg(&run_scenario(&s).unwrap()));
    assert_eq!(c.len(), 3);
    assert!(c[0].contains("r1") && c[0].contains("|y"));
    assert!(!c[2].contains("ζ3"));
    let n = panels(&run_svg(&run_scenario(&s.with_variant(VariantKind::Nested)).unwrap()));
    assert!(n[2].contains("e3") && n[2].contains("ζ3"));
    for p in c.iter().chain(&n) {
        assert!(p.contains("t (s)"));
    }
}

#[test]
fn comparison_svg_grid() {
    let cmp = compare_variants(&Scenario {
        horizon: 2.0,
        ..Scenario::default()
    })
    .unwrap();
    let p = panels(&comparison_svg(&cmp));
    assert_eq!(p.len(), 4);
    assert!(p[0].starts_with("(a) C-ADRC (without noise)"));
    assert!(p[1].starts_with("(b) N-ADRC (without noise)"));
    assert!(p[2].starts_with("(c) C-ADRC (with noise)"));
    assert!(p[3].starts_with("(d) N-ADRC (with noise)"));
    let doc_svg = comparison_svg(&cmp);
    let doc = roxmltree::Document::parse(&doc_svg).unwrap();
    let xs: Vec<f64> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("panel"))
        .map(|g| g.first_element_child().unwrap().attribute("x").unwrap().parse().unwrap())
        .collect();
    assert_eq!(xs[0], xs[2]);
    assert_eq!(xs[1], xs[3]);
    assert!(xs[1] > xs[0]);
    assert_eq!(panels(&comparison_error_svg(&cmp)).len(), 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cmp.svg");
    export_comparison_svg(&cmp, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), doc_svg);
    let run_path = dir.path().join("run.svg");
    export_svg(&cmp.candidate.noisy, &run_path).unwrap();
    panels(&std::fs::read_to_string(run_path).unwrap());
}

#[test]
fn scenario_document_drives_run() {
    let s = parse_scenario("variant = nested\nhorizon = 1\nnoise.enabled = on\nnoise.seed = 3\n").unwrap();
    let r = run_scenario(&s).unwrap();
    assert_eq!(r.variant, VariantKind::Nested);
    assert!(r.noisy);
    assert_eq!(r.trace.len(), 1001);
    assert!(r.error_metrics.itae_zeta3.is_some());
}

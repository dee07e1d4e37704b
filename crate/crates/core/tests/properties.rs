mod common;

use std::collections::BTreeSet;

use common::unit_dataset;
use glc_core::data::{load_dataset, normalize_dataset, EditCommand, Format};
use glc_core::eval::{compute_auc, stratified_folds, train_classifier, ClassifierKind};
use glc_core::layout::{export_geometry, invert_layout, layout, load_geometry, GeometryFormat};
use glc_core::purity::rank_regions_by_purity;
use glc_core::rules::{classify_slope, spc_slope, SlopeRuleConfig};
use glc_core::sdg::{auto_label, generate, SdgStrategy};
use glc_core::{CaseId, GlcKind, LayoutConfig, Provenance};
use proptest::prelude::*;

fn points(n: usize, max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..=1.0f64, n), 1..max_len)
}

fn labelled(n: usize, max_len: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<&'static str>)> {
    points(n, max_len).prop_flat_map(|p| {
        let len = p.len();
        (Just(p), prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), len))
    })
}

fn config_for(kind: GlcKind, n: usize) -> impl Strategy<Value = LayoutConfig> {
    (
        Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        prop::collection::vec(any::<bool>(), n),
        prop::collection::vec(0.05..3.0f64, n),
        0.2..5.0f64,
    )
        .prop_map(move |(order, inverted, coefficients, radius)| {
            let mut c = LayoutConfig::new(kind, n);
            c.attribute_order = order;
            c.inverted = inverted;
            c.coefficients = coefficients;
            c.radius = radius;
            c
        })
}

fn kind_and_n() -> impl Strategy<Value = (GlcKind, usize)> {
    (prop::sample::select(GlcKind::ALL.to_vec()), prop::sample::select(vec![2usize, 3, 4, 8]))
}

proptest! {
    #[test]
    fn layout_round_trips((kind, n, pts, cfg) in kind_and_n().prop_flat_map(|(k, n)| {
        (Just(k), Just(n), points(n, 20), config_for(k, n))
    })) {
        let labels = vec!["a"; pts.len()];
        let ds = unit_dataset(&pts, &labels);
        let view = layout(&ds, &cfg).unwrap();
        let reloaded = load_geometry(&export_geometry(&view, GeometryFormat::GeometryJson).unwrap()).unwrap();
        for recovered in [invert_layout(&view).unwrap(), invert_layout(&reloaded).unwrap()] {
            for (r, p) in recovered.iter().zip(&pts) {
                for (a, b) in r.values.iter().zip(p) {
                    prop_assert!((a - b).abs() <= 1e-9, "{kind} n={n}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn normalization_is_idempotent((pts, labels) in labelled(3, 30)) {
        let text = std::iter::once("a,b,c,class".to_string())
            .chain(pts.iter().zip(&labels).map(|(p, l)| format!("{},{},{},{l}", p[0] * 7.0 - 2.0, p[1] * 100.0, p[2])))
            .collect::<Vec<_>>()
            .join("\n");
        let once = normalize_dataset(&load_dataset(text.as_bytes(), Format::Csv).unwrap());
        let again = normalize_dataset(&load_dataset(once.to_csv_string(false).unwrap().as_bytes(), Format::Csv).unwrap());
        for (x, y) in once.cases.iter().zip(&again.cases) {
            for (a, b) in x.values.iter().zip(&y.values) {
                prop_assert!((0.0..=1.0).contains(a));
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn edits_never_touch_the_source(
        (pts, labels) in labelled(2, 20),
        delta in prop::collection::vec(-2.0..2.0f64, 2),
        pick in any::<prop::sample::Index>(),
    ) {
        let ds = unit_dataset(&pts, &labels);
        let before = ds.clone();
        let id = ds.cases[pick.index(ds.len())].id;

        let shifted = ds.edit(&EditCommand::Shift { case_ids: vec![id], delta: delta.clone() }).unwrap();
        prop_assert_eq!(&ds, &before);
        prop_assert_eq!(shifted.len(), ds.len());
        prop_assert!(shifted.cases.iter().all(|c| c.values.iter().all(|v| (0.0..=1.0).contains(v))));

        let cloned = ds.edit(&EditCommand::Clone { case_ids: vec![id] }).unwrap();
        prop_assert_eq!(cloned.len(), ds.len() + 1);
        let ids: BTreeSet<CaseId> = cloned.cases.iter().map(|c| c.id).collect();
        prop_assert_eq!(ids.len(), cloned.len());

        let deleted = ds.edit(&EditCommand::Delete { case_ids: vec![id] }).unwrap();
        prop_assert_eq!(deleted.len(), ds.len() - 1);
        prop_assert!(deleted.case(id).is_none());

        let relabeled = ds.edit(&EditCommand::Relabel { case_ids: vec![id], class: "z".into() }).unwrap();
        prop_assert_eq!(&relabeled.case(id).unwrap().label, "z");
        prop_assert!(relabeled.class_palette.contains(&"z".to_string()));
    }

    #[test]
    fn purity_regions_partition_each_coordinate((pts, labels) in labelled(3, 40), min_support in 1usize..5) {
        let ds = unit_dataset(&pts, &labels);
        let report = rank_regions_by_purity(&ds, min_support).unwrap();
        for coordinate in 0..3 {
            let mut seen: Vec<CaseId> = report
                .regions
                .iter()
                .filter(|r| r.coordinate == coordinate)
                .flat_map(|r| r.case_ids.iter().copied())
                .collect();
            seen.sort();
            let all: Vec<CaseId> = ds.cases.iter().map(|c| c.id).collect();
            prop_assert_eq!(seen, all);
        }
        for w in report.regions.windows(2) {
            prop_assert!(w[0].purity > w[1].purity
                || (w[0].purity == w[1].purity && w[0].support >= w[1].support));
        }
        for r in &report.regions {
            prop_assert!(r.lo <= r.hi && r.purity > 0.0 && r.purity <= 1.0);
        }
    }

    #[test]
    fn auto_label_never_conflicts((pts, labels) in labelled(2, 40), probes in points(2, 30)) {
        let ds = unit_dataset(&pts, &labels);
        let report = rank_regions_by_purity(&ds, 2).unwrap();
        for (p, label) in probes.iter().zip(auto_label(&report, &probes)) {
            if let Some(l) = label {
                let containing: Vec<_> = report.pure_regions().filter(|r| r.contains(p)).collect();
                prop_assert!(!containing.is_empty());
                prop_assert!(containing.iter().all(|r| r.dominant_class == l));
            }
        }
    }

    #[test]
    fn generators_stay_in_the_unit_cube(
        (pts, labels) in labelled(3, 30),
        seed in any::<u64>(),
        count in 1usize..20,
        delta in -1.5..1.5f64,
    ) {
        let ds = unit_dataset(&pts, &labels);
        let class = labels[0].to_string();
        let members: Vec<&Vec<f64>> = pts.iter().zip(&labels).filter(|(_, l)| **l == class).map(|(p, _)| p).collect();
        let strategies = vec![
            SdgStrategy::SingleShift { case_id: CaseId(0), coordinate: 1, delta },
            SdgStrategy::DuplicateShift { delta: vec![delta] },
            SdgStrategy::InBoundsProportional { class: class.clone(), count },
            SdgStrategy::Unbounded { count },
        ];
        for s in &strategies {
            let batch = generate(&ds, s, seed).unwrap();
            prop_assert_eq!(&batch, &generate(&ds, s, seed).unwrap());
            for c in &batch.cases {
                prop_assert_eq!(c.provenance, Provenance::Synthetic);
                prop_assert!(c.values.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            if matches!(s, SdgStrategy::InBoundsProportional { .. }) {
                for c in &batch.cases {
                    for a in 0..3 {
                        let lo = members.iter().map(|m| m[a]).fold(f64::INFINITY, f64::min);
                        let hi = members.iter().map(|m| m[a]).fold(f64::NEG_INFINITY, f64::max);
                        prop_assert!(lo <= c.values[a] && c.values[a] <= hi);
                    }
                }
            }
        }
    }

    #[test]
    fn out_of_bounds_violates_only_the_chosen_coordinate(
        (pts, labels) in labelled(3, 30),
        seed in any::<u64>(),
    ) {
        let ds = unit_dataset(&pts, &labels);
        let class = labels[0];
        let hi = pts.iter().zip(&labels).filter(|(_, l)| **l == class).map(|(p, _)| p[0]).fold(0.0, f64::max);
        prop_assume!(hi < 0.95);
        let batch = generate(&ds, &SdgStrategy::OutOfBounds {
            class: class.into(), coordinate: 0, lo: hi + 0.01, hi: 1.0, count: 10,
        }, seed).unwrap();
        for c in &batch.cases {
            prop_assert!(c.values[0] > hi);
            for a in 1..3 {
                let (lo, up) = pts.iter().zip(&labels).filter(|(_, l)| **l == class)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, up), (p, _)| (lo.min(p[a]), up.max(p[a])));
                prop_assert!(lo <= c.values[a] && c.values[a] <= up);
            }
        }
    }

    #[test]
    fn slope_ignores_vertical_translation(x in prop::collection::vec(0.1..0.9f64, 4), shift in -0.1..0.1f64) {
        let cfg = LayoutConfig::new(GlcKind::Spc, 4);
        // the y of each SPC pair point is the second attribute of the pair
        let moved = vec![x[0], x[1] + shift, x[2], x[3] + shift];
        let a = spc_slope(&x, &cfg).unwrap();
        let b = spc_slope(&moved, &cfg).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn slope_rule_is_total(x in prop::collection::vec(0.0..=1.0f64, 4)) {
        let mut rule = SlopeRuleConfig::new("up", "down", LayoutConfig::new(GlcKind::Spc, 4));
        rule.flat_tolerance = 0.0;
        let c = classify_slope(&x, &rule).unwrap();
        prop_assert!(c == "up" || c == "down");
    }

    #[test]
    fn auc_ignores_monotone_transforms(
        raw in prop::collection::vec((0.0..1.0f64, 0usize..3), 6..40),
    ) {
        let labels: Vec<usize> = raw.iter().map(|r| r.1).collect();
        let scores: Vec<Vec<f64>> = raw.iter().map(|r| vec![r.0, 1.0 - r.0, (r.0 * 7.0).fract()]).collect();
        let warped: Vec<Vec<f64>> = scores.iter().map(|s| s.iter().map(|v| (3.0 * v).exp() - 5.0).collect()).collect();
        let a = compute_auc(&scores, &labels, 3).unwrap();
        let b = compute_auc(&warped, &labels, 3).unwrap();
        prop_assert_eq!(a.skipped, b.skipped);
        match (a.auc, b.auc) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12 && (0.0..=1.0).contains(&x)),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn folds_keep_class_proportions(labels in prop::collection::vec(0usize..3, 30..90), folds in 2usize..6, seed in any::<u64>()) {
        let sets = stratified_folds(&labels, 3, folds, seed);
        for c in 0..3 {
            let per_fold: Vec<usize> = sets.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {c}: {per_fold:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn predict_is_argmax_of_score((pts, labels) in labelled(3, 40), probes in points(3, 10)) {
        let ds = unit_dataset(&pts, &labels);
        prop_assume!(ds.class_palette.len() >= 2);
        for kind in ClassifierKind::defaults() {
            let model = train_classifier(&kind, &ds).unwrap();
            for p in &probes {
                let s = model.score(p);
                prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let best = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let first = s.iter().position(|&v| v == best).unwrap();
                prop_assert_eq!(model.predict(p), ds.class_palette[first].as_str());
            }
        }
    }
}

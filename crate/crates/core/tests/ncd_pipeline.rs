use std::collections::BTreeMap;

use proptest::prelude::*;
use xlabel_core::ebm::{fit, FeatureVector, TrainConfig};
use xlabel_core::ncd::{
    extract_features, feature_names, read_dataset, synth_dataset, synth_generate, write_dataset, ClinicalLists,
    Dataset, Labs, RawRecord, SynthConfig, Task, TaskChain, TaskView, Upstream,
};
use xlabel_core::XlabelError;

fn trained_chain(ds: &Dataset, lists: &ClinicalLists) -> TaskChain {
    let mut chain = TaskChain::new(lists.clone());
    for t in Task::CHAIN {
        let view = TaskView::from_dataset(ds, t, lists).unwrap();
        let model = fit(&view.feature_names, &view.features, &view.labels, &TrainConfig::default()).unwrap();
        chain.set_model(t, model);
    }
    chain
}

/// Row mapping written out by hand, independent of `extract_features`.
fn hand_row(r: &RawRecord, task: Task, up: &Upstream) -> Vec<Option<f64>> {
    let note = r.note.to_lowercase();
    let kw = |words: &[&str]| words.iter().any(|w| note.contains(&w.to_lowercase()));
    let icd = |prefixes: &[&str]| {
        r.icd10_codes
            .iter()
            .any(|c| prefixes.iter().any(|p| c.replace('.', "").to_uppercase().starts_with(p)))
    };
    let drug = |names: &[&str]| r.drugs.iter().any(|d| names.contains(&d.to_lowercase().as_str()));
    let b = |v: bool| Some(if v { 1.0 } else { 0.0 });
    let p = |t: Task| Some(f64::from(up[&t]));
    let l = &r.labs;
    match task {
        Task::Dm => vec![
            b(kw(&["DM", "diabetes", "T1D", "T2D"])),
            b(icd(&["E10", "E11", "E12", "E13", "E14"])),
            b(drug(&["metformin", "glipizide", "gliclazide", "sitagliptin", "pioglitazone", "empagliflozin", "insulin glargine"])),
            l.glucose,
            l.hba1c,
            l.egfr,
        ],
        Task::Htn => vec![
            b(kw(&["HT", "hypertension", "bisoprolol"])),
            b(icd(&["I10", "I11", "I12", "I13", "I14", "I15"])),
            b(drug(&["amlodipine", "losartan", "enalapril", "bisoprolol", "hydrochlorothiazide", "valsartan"])),
            l.sbp1,
            l.dbp1,
        ],
        Task::Ckd => vec![
            b(kw(&["CKD"])),
            b(icd(&["N18"])),
            b(drug(&["sevelamer", "calcium acetate", "sodium bicarbonate", "erythropoietin"])),
            p(Task::Dm),
            p(Task::Htn),
            l.egfr,
        ],
        Task::Dlp => vec![
            b(kw(&["DLP", "dyslipid", "statin"])),
            b(icd(&["E78"])),
            b(drug(&["atorvastatin", "simvastatin", "rosuvastatin", "pravastatin", "fenofibrate", "ezetimibe"])),
            l.glucose,
            p(Task::Dm),
            p(Task::Htn),
            p(Task::Ckd),
            l.ldl_c,
        ],
    }
}

#[test]
fn generated_records_match_hand_mapping() {
    let lists = ClinicalLists::default();
    let cfg = SynthConfig { seed: 21, flag_noise: 0.1, dropout_rate: 0.1, typo_rate: 0.1, ..Default::default() };
    let (records, truth) = synth_generate(&cfg, &lists).unwrap();
    for (r, y) in records.iter().zip(&truth) {
        let up: Upstream = [(Task::Dm, y[0]), (Task::Htn, y[1]), (Task::Ckd, y[2])].into_iter().collect();
        for t in Task::CHAIN {
            let x = extract_features(&lists, r, t, &up).unwrap();
            assert_eq!(x.len(), feature_names(t).len());
            assert_eq!(x.values(), hand_row(r, t, &up).as_slice(), "{} {t}", r.id);
        }
    }
}

#[test]
fn zero_noise_positives_show_an_indicator() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 8, ..Default::default() }, &lists).unwrap();
    for t in Task::CHAIN {
        let view = TaskView::from_dataset(&ds, t, &lists).unwrap();
        let n_flags = 3;
        for (x, &y) in view.features.iter().zip(&view.labels) {
            let any_flag = (0..n_flags).any(|j| x.get(j) == Some(1.0));
            if y == 0 {
                assert!(!any_flag, "{t}: negative with a fired flag");
            }
        }
    }
}

#[test]
fn chain_feeds_upstream_pseudo_labels() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 3, ..Default::default() }, &lists).unwrap();
    let chain = trained_chain(&ds, &lists);
    let strong = RawRecord {
        id: "S1".into(),
        labs: Labs {
            glucose: Some(250.0),
            hba1c: Some(9.5),
            egfr: Some(85.0),
            sbp1: Some(165.0),
            dbp1: Some(98.0),
            ldl_c: Some(120.0),
        },
        icd10_codes: vec!["E11.9".into(), "I10".into()],
        drugs: vec!["metformin".into(), "amlodipine".into()],
        note: "known case of T2D, hypertension on follow up".into(),
        ..Default::default()
    };
    let out = chain.predict(&strong).unwrap();
    assert_eq!(out[&Task::Dm].pseudo_label, 1);
    assert_eq!(out[&Task::Htn].pseudo_label, 1);
    let ckd = &out[&Task::Ckd].features;
    let names = feature_names(Task::Ckd);
    let at = |n: &str| ckd.get(names.iter().position(|x| *x == n).unwrap());
    assert_eq!(at("DM_pred"), Some(1.0));
    assert_eq!(at("HTN_pred"), Some(1.0));
    for t in Task::CHAIN {
        let h = &out[&t].heat;
        assert_eq!(h.len(), feature_names(t).len());
        assert!(h.iter().all(|(_, v)| *v > 0.0 && *v < 1.0));
    }
}

#[test]
fn chain_rejects_reordering_and_missing_models() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 3, n_records: 300, ..Default::default() }, &lists).unwrap();
    let chain = trained_chain(&ds, &lists);
    let r = &ds.records[0];
    for order in [
        vec![Task::Htn, Task::Dm, Task::Ckd, Task::Dlp],
        vec![Task::Dm, Task::Ckd],
        vec![Task::Dlp],
    ] {
        assert!(matches!(chain.predict_in_order(r, &order), Err(XlabelError::ChainOrder(_))));
    }
    assert_eq!(chain.predict_in_order(r, &[Task::Dm, Task::Htn]).unwrap().len(), 2);
    let empty = TaskChain::new(lists);
    assert!(matches!(empty.predict(r), Err(XlabelError::ChainOrder(_))));
}

#[test]
fn chain_equals_step_by_step_evaluation() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 13, flag_noise: 0.1, ..Default::default() }, &lists).unwrap();
    let chain = trained_chain(&ds, &lists);
    for r in ds.records.iter().take(50) {
        let out = chain.predict(r).unwrap();
        let mut up = Upstream::new();
        for t in Task::CHAIN {
            let x = extract_features(&lists, r, t, &up).unwrap();
            let m = chain.model(t).unwrap();
            let y = m.predict_label(&x).unwrap();
            assert_eq!(out[&t].features, x);
            assert_eq!(out[&t].pseudo_label, y);
            assert_eq!(out[&t].p.to_bits(), m.predict_proba(&x).unwrap().to_bits());
            up.insert(t, y);
        }
    }
}

#[test]
fn synthetic_csv_round_trip() {
    let lists = ClinicalLists::default();
    let ds = synth_dataset(&SynthConfig { seed: 1, dropout_rate: 0.2, ..Default::default() }, &lists).unwrap();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &ds).unwrap();
    let back = read_dataset(buf.as_slice()).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.len(), 838);
}

proptest! {
    #[test]
    fn keyword_spans_are_keywords(words in prop::collection::vec(
        prop::sample::select(vec![
            "DM", "dm", "Diabetes", "T2D", "t1d", "HT", "hypertension", "Bisoprolol", "CKD", "DLP",
            "dyslipidemia", "statin", "note", "ok", "ß", "日本", "x", " ", ",", "DN",
        ]),
        0..20,
    )) {
        let note: String = words.concat();
        let lists = ClinicalLists::default();
        for t in Task::CHAIN {
            let (flag, spans) = lists.keyword_match(&note, t);
            prop_assert_eq!(flag == 1, !spans.is_empty());
            let kws: Vec<String> = lists.task(t).keywords.iter().map(|k| k.to_lowercase()).collect();
            for &(s, e) in &spans {
                prop_assert!(kws.contains(&note[s..e].to_lowercase()));
            }
            let expected = kws.iter().any(|k| note.to_lowercase().contains(k.as_str()));
            prop_assert_eq!(flag == 1, expected);
        }
    }
}

#[test]
fn every_schema_feature_is_produced() {
    let lists = ClinicalLists::default();
    let r = RawRecord { id: "z".into(), ..Default::default() };
    let up: Upstream = BTreeMap::from([(Task::Dm, 0), (Task::Htn, 0), (Task::Ckd, 0)]);
    for t in Task::CHAIN {
        let x: FeatureVector = extract_features(&lists, &r, t, &up).unwrap();
        assert_eq!(x.len(), feature_names(t).len());
    }
}

use super::{ClinicalLists, RawRecord, Task, Upstream};

const HBA1C_DM: f64 = 6.5;
const GLUCOSE_DM: f64 = 126.0;
const SBP_HTN: f64 = 140.0;
const DBP_HTN: f64 = 90.0;
const EGFR_CKD: f64 = 60.0;
const LDL_DLP: f64 = 160.0;

fn at_least(v: Option<f64>, limit: f64) -> bool {
    v.is_some_and(|v| v >= limit)
}

fn below(v: Option<f64>, limit: f64) -> bool {
    v.is_some_and(|v| v < limit)
}

/// Guideline baseline. Positive if any of the task's keyword, ICD-10 or drug
/// flags fires, or a lab value crosses its guideline cut-off. Missing labs
/// never trigger. The upstream map is accepted for interface symmetry with
/// the chained models; none of the rules read it.
pub fn rule_based_classify(
    lists: &ClinicalLists,
    record: &RawRecord,
    task: Task,
    _upstream: &Upstream,
) -> u8 {
    let flags = lists.keyword_match(&record.note, task).0 == 1
        || lists.icd10_flag(&record.icd10_codes, task) == 1
        || lists.drug_flag(&record.drugs, task) == 1;
    let labs = &record.labs;
    let lab = match task {
        Task::Dm => at_least(labs.hba1c, HBA1C_DM) || at_least(labs.glucose, GLUCOSE_DM),
        Task::Htn => at_least(labs.sbp1, SBP_HTN) || at_least(labs.dbp1, DBP_HTN),
        Task::Ckd => below(labs.egfr, EGFR_CKD),
        Task::Dlp => at_least(labs.ldl_c, LDL_DLP),
    };
    u8::from(flags || lab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncd::Labs;

    fn classify(rec: &RawRecord, task: Task) -> u8 {
        rule_based_classify(&ClinicalLists::default(), rec, task, &Upstream::new())
    }

    #[test]
    fn stage_two_pressure_without_flags() {
        let rec = RawRecord {
            id: "a".into(),
            labs: Labs { sbp1: Some(153.0), dbp1: Some(72.0), ..Default::default() },
            ..Default::default()
        };
        assert_eq!(classify(&rec, Task::Htn), 1);
        let rec = RawRecord {
            id: "b".into(),
            labs: Labs { sbp1: Some(145.0), dbp1: Some(93.0), ..Default::default() },
            ..Default::default()
        };
        assert_eq!(classify(&rec, Task::Htn), 1);
    }

    #[test]
    fn empty_record_is_negative_everywhere() {
        let rec = RawRecord { id: "e".into(), ..Default::default() };
        for t in Task::CHAIN {
            assert_eq!(classify(&rec, t), 0);
        }
    }

    #[test]
    fn thresholds_are_inclusive_where_guidelines_are() {
        let mk = |labs: Labs| RawRecord { id: "x".into(), labs, ..Default::default() };
        assert_eq!(classify(&mk(Labs { hba1c: Some(6.5), ..Default::default() }), Task::Dm), 1);
        assert_eq!(classify(&mk(Labs { hba1c: Some(6.4), ..Default::default() }), Task::Dm), 0);
        assert_eq!(classify(&mk(Labs { glucose: Some(126.0), ..Default::default() }), Task::Dm), 1);
        assert_eq!(classify(&mk(Labs { egfr: Some(60.0), ..Default::default() }), Task::Ckd), 0);
        assert_eq!(classify(&mk(Labs { egfr: Some(59.9), ..Default::default() }), Task::Ckd), 1);
        assert_eq!(classify(&mk(Labs { ldl_c: Some(160.0), ..Default::default() }), Task::Dlp), 1);
        assert_eq!(classify(&mk(Labs { dbp1: Some(90.0), ..Default::default() }), Task::Htn), 1);
    }

    #[test]
    fn flags_trigger_without_labs() {
        let rec = RawRecord {
            id: "f".into(),
            drugs: vec!["ezetimibe".into()],
            ..Default::default()
        };
        assert_eq!(classify(&rec, Task::Dlp), 1);
        assert_eq!(classify(&rec, Task::Dm), 0);
        let rec = RawRecord { id: "g".into(), note: "hx CKD".into(), ..Default::default() };
        assert_eq!(classify(&rec, Task::Ckd), 1);
    }
}

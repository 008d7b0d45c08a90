//! Synthetic NCD records. A latent disease status per task drives note
//! keywords, ICD-10 codes, prescriptions and lab values. Three knobs model
//! the failure modes seen in real visit data: flag misfires, minor visits
//! without labs or codes, and mistyped keywords.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClinicalLists, Dataset, Labs, RawRecord, Task};
use crate::error::{Result, XlabelError};

/// Filler note fragments. None contains a keyword of any task.
pub const NOTE_FILLERS: &[&str] = &[
    "routine check up",
    "refill medication",
    "no complaint",
    "cough for 3 days",
    "mild fever",
    "back pain",
    "condition stable",
    "follow up visit",
    "advised diet and exercise",
    "sore throat",
    "knee pain",
    "lab review",
    "headache",
];

/// Replacement spellings for mistyped keywords; other keywords get their
/// last two characters swapped.
pub const TYPO_VARIANTS: &[(&str, &str)] = &[("DM", "DN"), ("HT", "TH"), ("statin", "statni")];

const MENTION_TEMPLATES: &[&str] = &["known case of {}", "{} on follow up", "hx {}", "{} controlled"];
const FILLER_CODES: &[&str] = &["J06.9", "M54.5", "K21.9", "R51", "Z00.0", "J30.1", "L30.9"];
const FILLER_DRUGS: &[&str] = &["paracetamol", "omeprazole", "cetirizine", "amoxicillin", "ibuprofen"];

/// Positive counts of the reference cohort (DM, HTN, CKD, DLP) out of 838.
pub const REFERENCE_POSITIVES: [usize; 4] = [72, 139, 52, 77];
pub const REFERENCE_SIZE: usize = 838;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_records: usize,
    /// Positive rate per task in chain order.
    pub class_rates: [f64; 4],
    /// Per record and task, probability that one of the keyword / ICD-10 /
    /// drug flags is flipped.
    pub flag_noise: f64,
    /// Probability that a record is a minor visit without labs or codes.
    pub dropout_rate: f64,
    /// Probability that a keyword mention in the note is mistyped.
    pub typo_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_records: REFERENCE_SIZE,
            class_rates: REFERENCE_POSITIVES.map(|k| k as f64 / REFERENCE_SIZE as f64),
            flag_noise: 0.0,
            dropout_rate: 0.0,
            typo_rate: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(XlabelError::invalid("n_records must be at least 1"));
        }
        let rates = self
            .class_rates
            .iter()
            .chain([&self.flag_noise, &self.dropout_rate, &self.typo_rate]);
        for r in rates {
            if !(0.0..=1.0).contains(r) {
                return Err(XlabelError::invalid(format!("rate {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Probability that a positive record shows each indicator:
/// (keyword, ICD-10, drug, abnormal lab).
fn indicator_rates(task: Task) -> [f64; 4] {
    match task {
        Task::Dm => [0.75, 0.7, 0.85, 0.7],
        Task::Htn => [0.7, 0.65, 0.85, 0.6],
        Task::Ckd => [0.7, 0.7, 0.4, 0.8],
        Task::Dlp => [0.7, 0.6, 0.85, 0.6],
    }
}

/// Sampling weight of a record for `task` given the statuses already drawn.
fn comorbidity_weight(task: Task, status: &[bool; 4]) -> f64 {
    let dm = f64::from(u8::from(status[0]));
    let htn = f64::from(u8::from(status[1]));
    match task {
        Task::Dm => 1.0,
        Task::Htn => 1.0 + 2.0 * dm,
        Task::Ckd => 1.0 + 2.0 * dm + 2.0 * htn,
        Task::Dlp => 1.0 + 1.5 * dm + htn,
    }
}

pub fn mistype(keyword: &str) -> String {
    if let Some((_, v)) = TYPO_VARIANTS.iter().find(|(k, _)| *k == keyword) {
        return v.to_string();
    }
    let mut chars: Vec<char> = keyword.chars().collect();
    let n = chars.len();
    if n >= 2 {
        chars.swap(n - 1, n - 2);
    }
    chars.into_iter().collect()
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 10.0).round() / 10.0
}

/// Generate records and their ground-truth labels (DM, HTN, CKD, DLP).
pub fn synth_generate(
    config: &SynthConfig,
    lists: &ClinicalLists,
) -> Result<(Vec<RawRecord>, Vec<[u8; 4]>)> {
    config.validate()?;
    let n = config.n_records;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Exact positive counts per task; comorbid records are more likely to be
    // drawn for later tasks (weighted sampling without replacement).
    let mut status = vec![[false; 4]; n];
    for task in Task::CHAIN {
        let k = (config.class_rates[task.index()] * n as f64).round() as usize;
        let mut keys: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (u.ln() / comorbidity_weight(task, &status[i]), i)
            })
            .collect();
        keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in keys.iter().take(k.min(n)) {
            status[i][task.index()] = true;
        }
    }

    let mut records = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for (i, st) in status.iter().enumerate() {
        records.push(synth_record(i, st, config, lists, &mut rng));
        truth.push(st.map(u8::from));
    }
    Ok((records, truth))
}

/// Generated records wrapped as a fully labeled dataset.
pub fn synth_dataset(config: &SynthConfig, lists: &ClinicalLists) -> Result<Dataset> {
    let (records, truth) = synth_generate(config, lists)?;
    Dataset::new(records, truth.into_iter().map(|row| row.map(Some)).collect())
}

fn synth_record(
    i: usize,
    status: &[bool; 4],
    config: &SynthConfig,
    lists: &ClinicalLists,
    rng: &mut ChaCha8Rng,
) -> RawRecord {
    let minor_visit = rng.gen_bool(config.dropout_rate);
    // [key, icd, drug, lab] per task
    let mut fired = [[false; 4]; 4];
    for task in Task::CHAIN {
        let t = task.index();
        if status[t] {
            let rates = indicator_rates(task);
            for (slot, rate) in fired[t].iter_mut().zip(rates) {
                *slot = rng.gen_bool(rate);
            }
            if !fired[t].iter().any(|&f| f) {
                fired[t][rng.gen_range(0..4)] = true;
            }
        }
        if rng.gen_bool(config.flag_noise) {
            let which = rng.gen_range(0..3);
            fired[t][which] = !fired[t][which];
        }
    }

    let age = uniform(rng, 25.0, 85.0).round();
    let sex = if rng.gen_bool(0.5) { "F" } else { "M" }.to_string();
    let height = uniform(rng, 148.0, 185.0);
    let weight = uniform(rng, 45.0, 98.0);

    let mut labs = Labs::default();
    if !minor_visit {
        let present = |needed: bool, rng: &mut ChaCha8Rng| needed || rng.gen_bool(0.9);
        let dm_lab = fired[Task::Dm.index()][3];
        if present(dm_lab, rng) {
            labs.glucose = Some(if dm_lab { uniform(rng, 130.0, 280.0) } else { uniform(rng, 72.0, 120.0) });
            labs.hba1c = Some(if dm_lab { uniform(rng, 6.7, 11.5) } else { uniform(rng, 4.6, 6.2) });
        }
        let ckd_lab = fired[Task::Ckd.index()][3];
        if present(ckd_lab, rng) {
            labs.egfr = Some(if ckd_lab { uniform(rng, 12.0, 57.0) } else { uniform(rng, 62.0, 118.0) });
        }
        let htn_lab = fired[Task::Htn.index()][3];
        if present(htn_lab, rng) {
            if htn_lab {
                labs.sbp1 = Some(uniform(rng, 142.0, 178.0).round());
                labs.dbp1 = Some(uniform(rng, 70.0, 105.0).round());
            } else {
                labs.sbp1 = Some(uniform(rng, 102.0, 136.0).round());
                labs.dbp1 = Some(uniform(rng, 62.0, 87.0).round());
            }
        }
        let dlp_lab = fired[Task::Dlp.index()][3];
        if present(dlp_lab, rng) {
            labs.ldl_c = Some(if dlp_lab { uniform(rng, 165.0, 240.0) } else { uniform(rng, 70.0, 152.0) });
        }
    }

    let mut icd10_codes = Vec::new();
    let mut drugs = Vec::new();
    let mut fragments: Vec<String> = Vec::new();
    for task in Task::CHAIN {
        let t = task.index();
        let tl = lists.task(task);
        if fired[t][0] {
            let kw = tl.keywords.choose(rng).expect("non-empty keyword list");
            let shown = if rng.gen_bool(config.typo_rate) { mistype(kw) } else { kw.clone() };
            let template = MENTION_TEMPLATES.choose(rng).expect("templates");
            fragments.push(template.replace("{}", &shown));
        }
        if fired[t][1] && !minor_visit {
            if let Some(prefix) = tl.icd10_prefixes.choose(rng) {
                icd10_codes.push(format!("{prefix}.{}", rng.gen_range(0..10)));
            }
        }
        if fired[t][2] {
            if let Some(d) = tl.drugs.choose(rng) {
                drugs.push(d.clone());
            }
        }
    }
    if !minor_visit {
        for _ in 0..rng.gen_range(0..3) {
            icd10_codes.push(FILLER_CODES.choose(rng).expect("codes").to_string());
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        drugs.push(FILLER_DRUGS.choose(rng).expect("drugs").to_string());
    }
    for _ in 0..rng.gen_range(1..3) {
        fragments.push(NOTE_FILLERS.choose(rng).expect("fillers").to_string());
    }
    fragments.shuffle(rng);
    icd10_codes.dedup();
    drugs.dedup();

    RawRecord {
        id: format!("R{:05}", i + 1),
        age: Some(age),
        sex,
        height: Some(height),
        weight: Some(weight),
        labs,
        icd10_codes,
        drugs,
        note: fragments.join(", "),
    }
}

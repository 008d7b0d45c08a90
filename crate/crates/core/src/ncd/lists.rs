use std::path::Path;

use super::Task;
use crate::error::{Result, XlabelError};

/// Default indicator lists shipped with the crate.
pub const DEFAULT_LISTS: &str = include_str!("../../config/clinical_lists.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskLists {
    pub keywords: Vec<String>,
    pub icd10_prefixes: Vec<String>,
    pub drugs: Vec<String>,
}

/// Keyword, ICD-10 prefix and drug lists for every task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClinicalLists {
    tasks: [TaskLists; 4],
}

impl Default for ClinicalLists {
    fn default() -> Self {
        ClinicalLists::parse(DEFAULT_LISTS).expect("bundled clinical lists are valid")
    }
}

fn normalize_code(code: &str) -> String {
    code.trim()
        .chars()
        .filter(|c| *c != '.')
        .map(|c| c.to_ascii_uppercase())
        .collect()
}

impl ClinicalLists {
    /// Parse the `TASK.kind = a, b, c` list format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tasks: [TaskLists; 4] = Default::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| XlabelError::invalid(format!("line {}: {msg}", lineno + 1));
            let (key, items) = line.split_once('=').ok_or_else(|| err("expected `TASK.kind = items`"))?;
            let (task, kind) = key.trim().split_once('.').ok_or_else(|| err("expected `TASK.kind`"))?;
            let task: Task = task.parse().map_err(|_| err("unknown task"))?;
            let items: Vec<String> = items
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            let slot = &mut tasks[task.index()];
            match kind.trim() {
                "keywords" => slot.keywords.extend(items),
                "icd10" => slot.icd10_prefixes.extend(items.iter().map(|c| normalize_code(c))),
                "drugs" => slot.drugs.extend(items.iter().map(|d| d.to_lowercase())),
                other => return Err(err(&format!("unknown list kind {other:?}"))),
            }
        }
        for t in Task::CHAIN {
            let l = &tasks[t.index()];
            if l.keywords.is_empty() {
                return Err(XlabelError::invalid(format!("no keywords for {t}")));
            }
            if l.keywords.iter().any(|k| !k.is_ascii()) {
                return Err(XlabelError::invalid(format!("keywords for {t} must be ASCII")));
            }
        }
        Ok(ClinicalLists { tasks })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn task(&self, task: Task) -> &TaskLists {
        &self.tasks[task.index()]
    }

    /// Case-insensitive substring search for the task's keywords. Returns
    /// the flag and the byte spans of every occurrence, sorted.
    pub fn keyword_match(&self, note: &str, task: Task) -> (u8, Vec<(usize, usize)>) {
        let haystack = note.to_ascii_lowercase();
        let mut spans = Vec::new();
        for kw in &self.task(task).keywords {
            let needle = kw.to_ascii_lowercase();
            spans.extend(haystack.match_indices(&needle).map(|(s, m)| (s, s + m.len())));
        }
        spans.sort_unstable();
        spans.dedup();
        (u8::from(!spans.is_empty()), spans)
    }

    pub fn icd10_flag(&self, codes: &[String], task: Task) -> u8 {
        let prefixes = &self.task(task).icd10_prefixes;
        u8::from(codes.iter().map(|c| normalize_code(c)).any(|c| {
            prefixes.iter().any(|p| c.starts_with(p.as_str()))
        }))
    }

    pub fn drug_flag(&self, drugs: &[String], task: Task) -> u8 {
        let list = &self.task(task).drugs;
        u8::from(drugs.iter().any(|d| {
            let d = d.trim().to_lowercase();
            list.contains(&d)
        }))
    }
}

//! Theory text to verdicts: chase, exhaustive family, distillation, the
//! conditions and the σ̄ checks, then the same with one model removed.

use super::chase::{chase, ChaseConfig, ChaseError, PartialStructure};
use super::distill::{Distilled, DEFAULT_ARITY};
use super::evaluation::Evaluation;
use super::models::{flatten, Family, FinModel};
use super::syntax::parse_theory;
use crate::report::Report;
use serde::Deserialize;

/// One line of a corpus manifest.
#[derive(Debug, Clone, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub theory: String,
    pub start: Vec<usize>,
    pub max: usize,
    pub designated: String,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub chase: Result<usize, String>,
    pub family_size: usize,
    pub conditions: Report,
    pub sigma_bar: Result<Report, String>,
    pub designated: Option<String>,
    pub removed: Option<Result<Report, String>>,
}

/// Checks whose verdict differs between the full family and the family
/// without the designated model.
pub fn flipped(full: &Report, less: &Report) -> Vec<String> {
    full.checks
        .iter()
        .filter(|c| less.get(&c.name).is_some_and(|d| d.pass != c.pass))
        .map(|c| c.name.clone())
        .collect()
}

pub fn run(src: &str, start: &[usize], max: usize, designated: Option<&str>, cfg: &ChaseConfig) -> Result<PipelineOutcome, String> {
    let th = parse_theory(src).map_err(|e| e.to_string())?;
    let flat = flatten(&th);
    let chased = match chase(&flat, &PartialStructure::points(start.to_vec()), cfg) {
        Ok(run) => Ok(run.steps),
        Err(ChaseError::Refuted { steps, .. }) => Err(format!("refuted after {steps} steps")),
        Err(ChaseError::Exhausted { reason, .. }) => Err(format!("budget exhausted: {reason}")),
    };
    let family = Family::exhaustive(flat.clone(), max)?;
    let c = Distilled::new(family, DEFAULT_ARITY);
    let ev = Evaluation::new(&c, &c.family)?;
    let mut conditions = Report::new();
    conditions.merge("", ev.check_m1());
    conditions.merge("", ev.check_m2());
    conditions.merge("", ev.check_m3());
    let sigma_bar = ev.sigma_bar_check();
    let (mut designated_name, mut removed) = (None, None);
    if let Some(json) = designated {
        let v: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
        let m = FinModel::from_json(&flat.sig, &v)?;
        let i = c.family.position_iso(&m).ok_or("the designated model is not in the family")?;
        designated_name = Some(c.family.names[i].clone());
        let s = c.family.without(i);
        let ev = Evaluation::new(&c, &s)?;
        removed = Some(ev.sigma_bar_check());
    }
    Ok(PipelineOutcome {
        chase: chased,
        family_size: c.family.len(),
        conditions,
        sigma_bar,
        designated: designated_name,
        removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn fixtures() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/logic")
    }

    #[test]
    fn corpus_flips_exactly_m2_and_embedding() {
        let dir = fixtures();
        let entries: Vec<CorpusEntry> = serde_json::from_str(&std::fs::read_to_string(dir.join("corpus.json")).unwrap()).unwrap();
        for e in entries {
            let src = std::fs::read_to_string(dir.join(&e.theory)).unwrap();
            let des = std::fs::read_to_string(dir.join(&e.designated)).unwrap();
            let out = run(&src, &e.start, e.max, Some(&des), &ChaseConfig::default()).unwrap();
            assert!(out.chase.is_ok(), "{}: {:?}", e.name, out.chase);
            assert!(out.conditions.pass(), "{}: {:?}", e.name, out.conditions.failures());
            let full = out.sigma_bar.unwrap();
            assert!(full.pass(), "{}: {:?}", e.name, full.failures());
            let less = out.removed.unwrap().unwrap();
            assert_eq!(flipped(&full, &less), vec!["M2", "embedding"], "{}", e.name);
        }
    }
}

//! Data-parallel assessment of many scenarios.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{GeacError, Result};
use crate::scenario::{load_scenario, Scenario};
use crate::swing::{analyze, Assessment};

/// Outcome of one scenario, kept in input order.
#[derive(Debug)]
pub struct BatchEntry {
    pub name: String,
    pub outcome: Result<Assessment>,
}

fn run_one(s: &Scenario) -> Result<Assessment> {
    analyze(&s.model()?, s.initial_state()?, &s.assessment_options())
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| GeacError::InvalidOptions(e.to_string()))
}

/// Assesses every scenario on `parallelism` worker threads. A failing
/// scenario yields an error entry without stopping the others.
pub fn run_batch(scenarios: &[Scenario], parallelism: usize) -> Result<Vec<BatchEntry>> {
    Ok(pool(parallelism)?.install(|| {
        scenarios
            .par_iter()
            .map(|s| BatchEntry {
                name: s.name.clone(),
                outcome: run_one(s),
            })
            .collect()
    }))
}

/// Like [`run_batch`] on scenario files, each passed through `prepare`
/// after loading. Files that fail to load or prepare are reported as entries.
pub fn run_batch_files<P, F>(paths: &[P], parallelism: usize, prepare: F) -> Result<Vec<BatchEntry>>
where
    P: AsRef<Path> + Sync,
    F: Fn(Scenario) -> Result<Scenario> + Sync,
{
    Ok(pool(parallelism)?.install(|| {
        paths
            .par_iter()
            .map(|p| {
                let p = p.as_ref();
                match load_scenario(p).and_then(&prepare) {
                    Ok(s) => BatchEntry {
                        name: if s.name.is_empty() {
                            p.display().to_string()
                        } else {
                            s.name.clone()
                        },
                        outcome: run_one(&s),
                    },
                    Err(e) => BatchEntry {
                        name: p.display().to_string(),
                        outcome: Err(e),
                    },
                }
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn case(omega: f64) -> Scenario {
        parse_scenario(&format!(
            "name = \"w{omega}\"\n[model.polynomial]\ndamping = 0.01\ncoefficients = [0.2649, -0.0503, -0.04414]\n\
             [start.initial]\ndelta = 0.13\nomega = {omega}\n"
        ))
        .unwrap()
    }

    #[test]
    fn empty_batch() {
        assert!(run_batch(&[], 4).unwrap().is_empty());
    }

    #[test]
    fn order_is_preserved_and_failures_are_isolated() {
        let mut bad = case(-0.1);
        bad.start.initial.as_mut().unwrap().delta = 10.0;
        let list = vec![case(-0.2), bad, case(-0.5)];
        let out = run_batch(&list, 3).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].name, "w-0.2");
        assert!(out[0].outcome.is_ok());
        assert!(matches!(out[1].outcome, Err(GeacError::OutsideWell(_))));
        assert_eq!(out[2].name, "w-0.5");
        assert!(out[2].outcome.is_ok());
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let list: Vec<_> = (1..8).map(|i| case(-0.1 * i as f64)).collect();
        let serial = run_batch(&list, 1).unwrap();
        let parallel = run_batch(&list, 4).unwrap();
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.outcome.as_ref().unwrap().report, b.outcome.as_ref().unwrap().report);
        }
    }
}

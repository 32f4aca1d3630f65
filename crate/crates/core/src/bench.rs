//! Wall-clock timing of a full analysis over a grid of synthetic inputs.

use std::time::Instant;

use crate::error::Result;
use crate::measures::Registry;
use crate::mi::Budget;
use crate::report::{build_report, ReportOptions};
use crate::synth::{generate_cases, GenConfig, Shape};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub cases: Vec<usize>,
    pub fact_probability: f64,
    pub seed: u64,
    pub shape: Shape,
    pub measures: Vec<String>,
    pub workers: Option<usize>,
    /// Each cell reports the fastest of this many runs.
    pub repeats: usize,
    pub budget: Budget,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![10, 20],
            cases: vec![1000, 2000],
            fact_probability: 0.3,
            seed: 0,
            shape: Shape::Chain,
            // adjusted Shapley is exponential in the active part; opt in
            measures: ["mi", "cd", "chash", "shapley-mi"].map(String::from).to_vec(),
            workers: None,
            repeats: 1,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCell {
    pub size: usize,
    pub cases: usize,
    pub seconds: f64,
    /// Distinct fact sets, i.e. how many bases were actually analyzed.
    pub classes: usize,
    /// Σ I_MI of the generated input, as a cheap check that runs agree.
    pub total_mi: usize,
}

/// Generates and analyzes every (size, cases) cell. Generation is not
/// timed; MI enumeration and every requested measure are.
pub fn run_bench(config: &BenchConfig, registry: &Registry) -> Result<Vec<BenchCell>> {
    let options = ReportOptions {
        measures: config.measures.clone(),
        rank_by: None,
    };
    let mut cells = Vec::new();
    for &size in &config.sizes {
        for &cases in &config.cases {
            let caseset = generate_cases(&GenConfig {
                n_rules: size,
                n_cases: cases,
                fact_probability: config.fact_probability,
                seed: config.seed,
                shape: config.shape,
            })?;
            let mut best = f64::INFINITY;
            let mut total_mi = 0;
            for _ in 0..config.repeats.max(1) {
                let start = Instant::now();
                let analysis = caseset.analyze(&config.budget, config.workers)?;
                build_report(&analysis, registry, &options)?;
                best = best.min(start.elapsed().as_secs_f64());
                total_mi = analysis.per_case_mi().iter().sum();
            }
            cells.push(BenchCell {
                size,
                cases,
                seconds: best,
                classes: caseset.classes().len(),
                total_mi,
            });
        }
    }
    Ok(cells)
}

/// `size,cases,seconds`
pub fn bench_csv(cells: &[BenchCell]) -> String {
    let mut out = String::from("size,cases,seconds\n");
    for c in cells {
        out.push_str(&format!("{},{},{:.6}\n", c.size, c.cases, c.seconds));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape_and_repeatability() {
        let config = BenchConfig {
            sizes: vec![3, 4],
            cases: vec![20, 40],
            ..BenchConfig::default()
        };
        let reg = Registry::standard();
        let a = run_bench(&config, &reg).unwrap();
        let b = run_bench(&config, &reg).unwrap();
        assert_eq!(a.len(), 4);
        let csv = bench_csv(&a);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("size,cases,seconds\n3,20,"));
        let totals = |cells: &[BenchCell]| cells.iter().map(|c| c.total_mi).collect::<Vec<_>>();
        assert_eq!(totals(&a), totals(&b));
    }
}

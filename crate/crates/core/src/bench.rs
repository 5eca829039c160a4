//! Run records and subdomain-count sweeps, with CSV output.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::bnb::{gap, solve_with, HistoryRow, SolveError, SolverConfig, SolverResult, Status};
use crate::bounder::{Bounder, BoundingEngine, PartitionStrategy};
use crate::dag::Problem;

/// One solver run with its configuration echoed.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub problem: String,
    pub config: SolverConfig,
    pub result: SolverResult,
    /// Solve time only, excluding parsing.
    pub wall: Duration,
}

impl RunRecord {
    pub fn run(name: &str, problem: &Problem, config: &SolverConfig) -> Result<RunRecord, SolveError> {
        let engine = BoundingEngine::new(config.workers)?;
        RunRecord::run_with(&engine, name, problem, config)
    }

    pub fn run_with(engine: &BoundingEngine, name: &str, problem: &Problem, config: &SolverConfig) -> Result<RunRecord, SolveError> {
        let start = Instant::now();
        let result = solve_with(engine, problem, config)?;
        let wall = start.elapsed();
        Ok(RunRecord { problem: name.to_string(), config: config.clone(), result, wall })
    }

    pub fn gap(&self) -> f64 {
        self.result.gap()
    }

    pub fn wall_ms(&self) -> f64 {
        millis(self.wall)
    }

    pub fn summary(&self) -> String {
        let r = &self.result;
        let c = &self.config;
        let mut s = format!(
            "problem     {}\nconfig      bounder={} partition={} subdomains={} schedule={} workers={}\nstatus      {}\nlb          {}\nub          {}\ngap         {}\niterations  {}\nnodes       {} created, {} pruned by bound, {} pruned as infeasible\nwall        {:.3} ms\n",
            self.problem,
            c.bounder.name(),
            c.partition.name(),
            c.target_subdomains,
            c.schedule.name(),
            if c.workers == 0 { "max".to_string() } else { c.workers.to_string() },
            r.status.name(),
            r.lb,
            r.ub,
            self.gap(),
            r.iterations,
            r.nodes_created,
            r.nodes_pruned_bound,
            r.nodes_pruned_infeasible,
            self.wall_ms(),
        );
        if let Some(x) = &r.incumbent {
            let xs: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            s.push_str(&format!("incumbent   [{}]\n", xs.join(", ")));
        }
        s
    }

    /// Columns `iteration,nodes_open,lb,ub,gap,wall_ms`.
    pub fn write_history_csv(&self, out: impl Write) -> csv::Result<()> {
        write_history_csv(&self.result.history, out)
    }
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn write_history_csv(history: &[HistoryRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "nodes_open", "lb", "ub", "gap", "wall_ms"])?;
    for h in history {
        w.write_record(&[
            h.iteration.to_string(),
            h.nodes_open.to_string(),
            h.lb.to_string(),
            h.ub.to_string(),
            gap(h.lb, h.ub).to_string(),
            format!("{:.3}", millis(h.wall)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub counts: Vec<usize>,
    pub bounders: Vec<Bounder>,
    pub partitions: Vec<PartitionStrategy>,
    pub repetitions: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.counts.is_empty() || self.bounders.is_empty() || self.partitions.is_empty() {
            return Err("sweep needs at least one count, bounder and partition".into());
        }
        if self.counts.contains(&0) {
            return Err("subdomain counts must be at least 1".into());
        }
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub problem: String,
    pub bounder: Bounder,
    pub partition: PartitionStrategy,
    pub subdomains: usize,
    pub root_lb: f64,
    pub iterations: usize,
    pub status: Status,
    /// Fastest of the repetitions.
    pub wall: Duration,
}

/// One row per (count, bounder, partition), in that nesting order.
pub fn run_sweep(name: &str, problem: &Problem, base: &SolverConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>, SolveError> {
    spec.validate().map_err(SolveError::Config)?;
    let engine = BoundingEngine::new(base.workers)?;
    let mut rows = Vec::new();
    for &count in &spec.counts {
        for &bounder in &spec.bounders {
            for &partition in &spec.partitions {
                let config = SolverConfig { bounder, partition, target_subdomains: count, ..base.clone() };
                let mut best: Option<RunRecord> = None;
                for _ in 0..spec.repetitions {
                    let rec = RunRecord::run_with(&engine, name, problem, &config)?;
                    if best.as_ref().map_or(true, |b| rec.wall < b.wall) {
                        best = Some(rec);
                    }
                }
                let rec = best.expect("at least one repetition");
                rows.push(SweepRow {
                    problem: name.to_string(),
                    bounder,
                    partition,
                    subdomains: count,
                    root_lb: rec.result.root_lb,
                    iterations: rec.result.iterations,
                    status: rec.result.status,
                    wall: rec.wall,
                });
            }
        }
    }
    Ok(rows)
}

/// Columns `problem,bounder,partition,subdomains,root_lb,iterations,status,wall_ms`.
pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem", "bounder", "partition", "subdomains", "root_lb", "iterations", "status", "wall_ms"])?;
    for r in rows {
        w.write_record(&[
            r.problem.clone(),
            r.bounder.name().to_string(),
            r.partition.name().to_string(),
            r.subdomains.to_string(),
            r.root_lb.to_string(),
            r.iterations.to_string(),
            r.status.name().to_string(),
            format!("{:.3}", millis(r.wall)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::parse_problem;

    #[test]
    fn history_csv_shape() {
        let p = parse_problem("var x in [-1,1]; obj: x^2").unwrap();
        let config = SolverConfig { target_subdomains: 4, workers: 1, ..SolverConfig::default() };
        let rec = RunRecord::run("sq", &p, &config).unwrap();
        let mut buf = Vec::new();
        rec.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,nodes_open,lb,ub,gap,wall_ms"));
        assert_eq!(lines.count(), rec.result.iterations);
    }

    #[test]
    fn single_interval_sweep_has_one_row_per_bounder() {
        let p = parse_problem("var x in [-1,2]; obj: x^2 - x").unwrap();
        let spec = SweepSpec {
            counts: vec![1],
            bounders: vec![Bounder::Nie, Bounder::Mvf],
            partitions: vec![PartitionStrategy::Uniform],
            repetitions: 1,
        };
        let rows = run_sweep("q", &p, &SolverConfig { workers: 1, ..SolverConfig::default() }, &spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].bounder, Bounder::Nie);
        assert_eq!(rows[1].bounder, Bounder::Mvf);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("problem,bounder,partition,subdomains,root_lb,iterations,status,wall_ms\nq,nie,uniform,1,"));
    }

    #[test]
    fn invalid_sweeps() {
        let bad = SweepSpec { counts: vec![], bounders: vec![Bounder::Nie], partitions: vec![PartitionStrategy::Uniform], repetitions: 1 };
        assert!(bad.validate().is_err());
        let bad = SweepSpec { counts: vec![0], ..bad };
        assert!(bad.validate().is_err());
    }
}

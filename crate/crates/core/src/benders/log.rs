use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Gap within ε under an exact master, or the master repeated an evaluated point.
    Converged,
    /// Annealing master: no upper-bound improvement for the stall window.
    Stalled,
    IterationLimit,
}

impl StopReason {
    pub fn label(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::Stalled => "stalled",
            StopReason::IterationLimit => "iteration-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ub: f64,
    pub lb: f64,
    pub gap: f64,
    /// Whether `lb` is a proven bound.
    pub lb_certified: bool,
    /// Kinds of the cuts that entered the pools, `O` or `F` each.
    pub cuts: String,
    pub subproblems: usize,
    pub master_bits: usize,
    pub master_ms: f64,
    pub sub_ms: f64,
    pub sampler_best: Option<f64>,
    pub sampler_median: Option<f64>,
    pub escalations: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn ms(v: f64, times: bool) -> String {
    if times {
        format!("{v:.3}")
    } else {
        "NA".into()
    }
}

impl IterationLog {
    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// One tab-separated line per iteration. Timings print as `NA` unless
    /// `times` is set, which keeps the file reproducible.
    pub fn to_tsv(&self, times: bool) -> String {
        let mut s = String::from("iter\tub\tlb\tgap\tcuts_added\tmaster_bits\tmaster_ms\tsub_ms\n");
        for r in &self.records {
            let cuts = if r.cuts.is_empty() { "-" } else { &r.cuts };
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.iteration,
                r.ub,
                r.lb,
                r.gap,
                cuts,
                r.master_bits,
                ms(r.master_ms, times),
                ms(r.sub_ms, times)
            );
        }
        if let Some(stop) = self.stop {
            let _ = writeln!(s, "# stop: {}", stop.label());
        }
        s
    }

    pub fn to_csv(&self, times: bool) -> String {
        let mut s = String::from(
            "iteration,ub,lb,gap,lb_certified,cuts,subproblems,master_bits,master_ms,sub_ms,sampler_best,sampler_median,escalations\n",
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.iteration,
                r.ub,
                r.lb,
                r.gap,
                r.lb_certified,
                r.cuts,
                r.subproblems,
                r.master_bits,
                ms(r.master_ms, times),
                ms(r.sub_ms, times),
                opt(r.sampler_best),
                opt(r.sampler_median),
                r.escalations
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_hides_timings_by_default() {
        let mut log = IterationLog::default();
        log.push(IterationRecord {
            iteration: 1,
            ub: -2.5,
            lb: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            lb_certified: true,
            cuts: "OF".into(),
            subproblems: 2,
            master_bits: 7,
            master_ms: 1.25,
            sub_ms: 3.0,
            sampler_best: None,
            sampler_median: Some(-1.0),
            escalations: 0,
        });
        log.stop = Some(StopReason::IterationLimit);
        assert_eq!(
            log.to_tsv(false),
            "iter\tub\tlb\tgap\tcuts_added\tmaster_bits\tmaster_ms\tsub_ms\n1\t-2.5\t-inf\tinf\tOF\t7\tNA\tNA\n# stop: iteration-limit\n"
        );
        assert!(log.to_tsv(true).contains("\t1.250\t3.000\n"));
        assert!(log.to_csv(false).ends_with("1,-2.5,-inf,inf,true,OF,2,7,NA,NA,NA,-1,0\n"));
    }
}

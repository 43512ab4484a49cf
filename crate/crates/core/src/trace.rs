use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniRecord {
    pub t: f64,
    pub g: f64,
    pub n: f64,
    pub w: f64,
    /// Instantaneous `dG/dt`: the analytic rate for the deterministic solvers,
    /// a finite-difference estimate for agent runs.
    pub dgdt: f64,
}

/// Time series of Gini values with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GiniTrace {
    records: Vec<GiniRecord>,
}

impl GiniTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<GiniRecord>) -> Result<Self> {
        let mut trace = Self::new();
        for r in records {
            trace.push(r)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, record: GiniRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(record.t > last.t) {
                return Err(Error::Parse(format!(
                    "trace times must increase strictly ({} after {})",
                    record.t, last.t
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[GiniRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&GiniRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn ginis(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.g).collect()
    }

    /// Overwrite `dgdt` with finite differences of `G`: central inside,
    /// one-sided at the ends.
    pub fn fill_finite_difference_rates(&mut self) {
        let n = self.records.len();
        if n < 2 {
            return;
        }
        let g: Vec<(f64, f64)> = self.records.iter().map(|r| (r.t, r.g)).collect();
        for (i, r) in self.records.iter_mut().enumerate() {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            r.dgdt = (g[b].1 - g[a].1) / (g[b].0 - g[a].0);
        }
    }

    /// Linear interpolation of `G` at `t`, `None` outside the recorded span.
    pub fn gini_at(&self, t: f64) -> Option<f64> {
        let first = self.records.first()?;
        let last = self.records.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let k = self.records.partition_point(|r| r.t <= t);
        if k == 0 {
            return Some(first.g);
        }
        if k == self.records.len() {
            return Some(last.g);
        }
        let (a, b) = (&self.records[k - 1], &self.records[k]);
        Some(a.g + (t - a.t) / (b.t - a.t) * (b.g - a.g))
    }
}

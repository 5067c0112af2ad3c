use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub vertices: usize,
    /// Tuples (edges or constraints) of the stage's instance.
    pub tuples: usize,
    /// Compatibility of the stage's assignment, if it carries one.
    pub k: Option<usize>,
    pub passed: bool,
    /// Verified on a seeded sample rather than exhaustively.
    pub sampled: bool,
    pub verdict: String,
    /// Files written for this stage, relative to the output directory.
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub pipeline: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    /// `(stage, k)` in pipeline order.
    pub ledger: Vec<(String, usize)>,
    pub chromatic_bounds: Vec<String>,
    pub flags: Vec<String>,
    pub passed: bool,
    /// Kept out of the JSON so that reports compare bit-for-bit.
    #[serde(skip)]
    pub wall_times: Vec<(String, Duration)>,
}

impl PipelineReport {
    pub fn new(pipeline: &str, seed: u64) -> Self {
        PipelineReport {
            pipeline: pipeline.into(),
            seed,
            stages: Vec::new(),
            ledger: Vec::new(),
            chromatic_bounds: Vec::new(),
            flags: Vec::new(),
            passed: true,
            wall_times: Vec::new(),
        }
    }

    pub fn push(&mut self, stage: StageRecord, took: Duration) {
        self.passed &= stage.passed;
        if let Some(k) = stage.k {
            self.ledger.push((stage.name.clone(), k));
        }
        self.wall_times.push((stage.name.clone(), took));
        self.stages.push(stage);
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = format!("pipeline {} (seed {}): {}\n", self.pipeline, self.seed, if self.passed { "PASS" } else { "FAIL" });
        for (st, (_, t)) in self.stages.iter().zip(&self.wall_times) {
            let k = st.k.map(|k| format!(" k={k}")).unwrap_or_default();
            s += &format!(
                "  {:<22} {:>8} vertices {:>9} tuples{k}  [{}] {}{}  ({:.2?})\n",
                st.name,
                st.vertices,
                st.tuples,
                if st.passed { "ok" } else { "FAILED" },
                st.verdict,
                if st.sampled { " (sampled)" } else { "" },
                t
            );
        }
        if !self.ledger.is_empty() {
            let chain: Vec<String> = self.ledger.iter().map(|(n, k)| format!("{n}:{k}")).collect();
            s += &format!("  ledger: {}\n", chain.join(" -> "));
        }
        for b in &self.chromatic_bounds {
            s += &format!("  bound: {b}\n");
        }
        for f in &self.flags {
            s += &format!("  flag: {f}\n");
        }
        s
    }
}

/// Where a pipeline stores its witness files, if anywhere.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    dir: Option<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Artifacts { dir: dir.map(Path::to_path_buf) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Writes `value` as JSON and returns the file name, or nothing when no directory is set.
    pub fn write<T: Serialize>(&self, name: &str, value: &T) -> Result<Vec<String>> {
        let Some(d) = &self.dir else { return Ok(Vec::new()) };
        let path = d.join(name);
        let f = std::io::BufWriter::new(std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer(f, value)?;
        Ok(vec![name.to_string()])
    }

    pub fn finish(&self, report: &PipelineReport) -> Result<()> {
        if let Some(d) = &self.dir {
            std::fs::write(d.join("report.json"), report.to_json())?;
            std::fs::write(d.join("summary.txt"), report.summary())?;
        }
        Ok(())
    }
}

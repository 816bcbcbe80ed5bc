use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One verification outcome. `pass` is decided from `statistics` and
/// `threshold` by the check that builds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub test: String,
    pub params: Map<String, Value>,
    pub statistics: Map<String, Value>,
    pub threshold: Map<String, Value>,
    pub pass: bool,
    pub seed: Option<u64>,
    pub wall_time_s: Option<f64>,
}

impl VerificationReport {
    pub fn new(test: impl Into<String>) -> Self {
        VerificationReport {
            test: test.into(),
            params: Map::new(),
            statistics: Map::new(),
            threshold: Map::new(),
            pass: false,
            seed: None,
            wall_time_s: None,
        }
    }

    pub fn param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.into(), v.into());
        self
    }

    pub fn stat(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.statistics.insert(key.into(), v.into());
        self
    }

    pub fn threshold(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.threshold.insert(key.into(), v.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn passed(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn stat_f64(&self, key: &str) -> Option<f64> {
        self.statistics.get(key).and_then(Value::as_f64)
    }
}

/// Covariances of a finite family of scalar variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn from_matrix(labels: Vec<String>, m: &nalgebra::DMatrix<f64>) -> Self {
        let entries = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
        GramMatrix { labels, entries }
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.entries.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }
}

/// The reports of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub reports: Vec<VerificationReport>,
}

impl SuiteReport {
    pub fn find(&self, test: &str) -> Option<&VerificationReport> {
        self.reports.iter().find(|r| r.test == test)
    }
}

use std::path::{Path, PathBuf};

use carnot_core::{CarnotGroup, CascadeMode, GroupSpec, TestKind};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Group-law identities on random samples.
    GroupCheck,
    /// Taylor projection and remainder decay.
    Taylor,
    /// Grid refinement study for a smooth manufactured solution.
    Solve,
    /// Maximum principle, De Giorgi, mean value, Sobolev and harmonic bounds.
    Lemmas,
    /// Frozen-coefficient cascade around the origin.
    Cascade,
    /// Second-derivative modulus estimate over random pairs.
    Schauder,
    /// Every check above at the configured sizes.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroupCheck => "group-check",
            Command::Taylor => "taylor",
            Command::Solve => "solve",
            Command::Lemmas => "lemmas",
            Command::Cascade => "cascade",
            Command::Schauder => "schauder",
            Command::Report => "report",
        }
    }
}

/// One experiment: a JSON document whose fields command-line flags override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub group: String,
    /// Test function `kind[:param]`, e.g. `holder:0.5`, `lipschitz`, `constant:1`.
    pub rhs: String,
    /// Nodes per axis for single-grid checks.
    pub n: usize,
    /// Grid sizes of the refinement study.
    pub grid_sizes: Vec<usize>,
    pub k_max: usize,
    pub rho: f64,
    pub mode: CascadeMode,
    /// Base point of the translated cascade; none skips it.
    pub xi0: Option<Vec<f64>>,
    pub seed: u64,
    /// Random samples for group-check and mean-value draws.
    pub trials: usize,
    /// Point pairs for the schauder check.
    pub pairs: usize,
    /// Largest admissible group-law error.
    pub tolerance: f64,
    /// Run directory; excluded from the config hash.
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            group: "h1".into(),
            rhs: "holder:0.5".into(),
            n: 33,
            grid_sizes: vec![17, 33, 65],
            k_max: 5,
            rho: 0.5,
            mode: CascadeMode::Manufactured,
            xi0: None,
            seed: 42,
            trials: 1000,
            pairs: 500,
            tolerance: 1e-12,
            out: PathBuf::from("carnot-out"),
        }
    }
}

fn bad(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn command(&self) -> Result<Command, RunError> {
        self.command
            .ok_or_else(|| bad("no command given on the command line or in the config"))
    }

    pub fn group_spec(&self) -> Result<GroupSpec, RunError> {
        match self.group.as_str() {
            "h1" | "heisenberg" => Ok(GroupSpec::heisenberg()),
            "engel" => Ok(GroupSpec::engel()),
            other => Err(bad(format!("unknown group `{other}` (expected h1 or engel)"))),
        }
    }

    pub fn carnot_group(&self) -> Result<CarnotGroup, RunError> {
        CarnotGroup::new(self.group_spec()?).map_err(|e| bad(e.to_string()))
    }

    pub fn test_kind(&self) -> Result<TestKind, RunError> {
        self.rhs
            .parse()
            .map_err(|e| bad(format!("bad --rhs `{}`: {e}", self.rhs)))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.command()?;
        let group = self.carnot_group()?;
        carnot_core::test_function(self.test_kind()?).map_err(|e| bad(e.to_string()))?;
        if self.n < 9 {
            return Err(bad(format!("n must be at least 9, got {}", self.n)));
        }
        if self.grid_sizes.len() < 2 || self.grid_sizes.windows(2).any(|w| w[1] <= w[0]) || self.grid_sizes[0] < 9 {
            return Err(bad("grid_sizes needs at least two increasing sizes, each at least 9"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(bad(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if self.trials == 0 || self.pairs == 0 {
            return Err(bad("trials and pairs must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(bad("tolerance must be positive"));
        }
        if let Some(xi0) = &self.xi0 {
            if xi0.len() != group.dimension() {
                return Err(bad(format!(
                    "xi0 has {} coordinates, the group has {}",
                    xi0.len(),
                    group.dimension()
                )));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the config without its output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

//! Experiment configuration: a TOML file, overlaid with command-line flags,
//! resolved and validated before any computation.

use std::path::{Path, PathBuf};

use mterm_core::mterm::regime_of;
use mterm_core::{
    BesovParams, BlockSelection, BlockShape, Error, LacunaryFamily, LorentzExponents, Regime,
    Result, SchemeKind, SchemeSpec, Tau,
};
use serde::{Deserialize, Serialize};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "MTERM_OUT_DIR";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawClass {
    pub p: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub r: Option<f64>,
    pub tau: Option<Tau>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTarget {
    pub q: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScheme {
    pub kind: Option<SchemeKind>,
    pub selection: Option<String>,
    pub terms: Option<usize>,
    pub ms: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFamily {
    pub shape: Option<BlockShape>,
    pub extra_blocks: Option<u32>,
    pub max_block: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub oversample: Option<usize>,
    pub band: Option<f64>,
    pub compensated_band: Option<f64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub class: RawClass,
    #[serde(default)]
    pub target: RawTarget,
    #[serde(default)]
    pub scheme: RawScheme,
    #[serde(default)]
    pub family: RawFamily,
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// `self` with every value set in `flags` replaced.
    pub fn overlay(self, flags: RawConfig) -> Self {
        Self {
            seed: pick(flags.seed, self.seed),
            oversample: pick(flags.oversample, self.oversample),
            band: pick(flags.band, self.band),
            compensated_band: pick(flags.compensated_band, self.compensated_band),
            out_dir: pick(flags.out_dir, self.out_dir),
            class: RawClass {
                p: pick(flags.class.p, self.class.p),
                theta: pick(flags.class.theta, self.class.theta),
                r: pick(flags.class.r, self.class.r),
                tau: pick(flags.class.tau, self.class.tau),
            },
            target: RawTarget {
                q: pick(flags.target.q, self.target.q),
                theta: pick(flags.target.theta, self.target.theta),
            },
            scheme: RawScheme {
                kind: pick(flags.scheme.kind, self.scheme.kind),
                selection: pick(flags.scheme.selection, self.scheme.selection),
                terms: pick(flags.scheme.terms, self.scheme.terms),
                ms: pick(flags.scheme.ms, self.scheme.ms),
            },
            family: RawFamily {
                shape: pick(flags.family.shape, self.family.shape),
                extra_blocks: pick(flags.family.extra_blocks, self.family.extra_blocks),
                max_block: pick(flags.family.max_block, self.family.max_block),
            },
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        let missing = |what: &str| Error::InvalidParameter(format!("missing required setting `{what}`"));
        let p = self.class.p.ok_or_else(|| missing("class.p"))?;
        let q = self.target.q.ok_or_else(|| missing("target.q"))?;
        let class = ClassConfig {
            theta: self.class.theta.unwrap_or_else(|| p.clone()),
            p,
            r: self.class.r.ok_or_else(|| missing("class.r"))?,
            tau: self.class.tau.unwrap_or(Tau::Infinite),
        };
        let target = TargetConfig { theta: self.target.theta.unwrap_or_else(|| q.clone()), q };
        let selection = match self.scheme.selection.as_deref().unwrap_or("greedy") {
            "greedy" => SelectionName::Greedy,
            "sampled" => SelectionName::Sampled,
            other => return Err(Error::Parse(format!("unknown selection `{other}` (greedy | sampled)"))),
        };
        let config = ExperimentConfig {
            seed: self.seed.unwrap_or(0),
            oversample: self.oversample.unwrap_or(4),
            band: self.band.unwrap_or(0.2),
            compensated_band: self.compensated_band.unwrap_or(0.1),
            class,
            target,
            scheme: SchemeConfig {
                kind: self.scheme.kind.ok_or_else(|| missing("scheme.kind"))?,
                selection,
                terms: self.scheme.terms,
                ms: self.scheme.ms.unwrap_or_default(),
            },
            family: FamilyConfig {
                shape: self.family.shape.unwrap_or(BlockShape::Peaked),
                extra_blocks: self.family.extra_blocks.unwrap_or(2),
                max_block: self.family.max_block.unwrap_or(20),
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassConfig {
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
    pub r: f64,
    pub tau: Tau,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetConfig {
    pub q: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionName {
    Greedy,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub selection: SelectionName,
    pub terms: Option<usize>,
    pub ms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyConfig {
    pub shape: BlockShape,
    pub extra_blocks: u32,
    pub max_block: u32,
}

/// Fully resolved configuration; embedded verbatim in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub oversample: usize,
    pub band: f64,
    pub compensated_band: f64,
    pub class: ClassConfig,
    pub target: TargetConfig,
    pub scheme: SchemeConfig,
    pub family: FamilyConfig,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        let m = self.class.p.len();
        for (name, len) in [
            ("class.theta", self.class.theta.len()),
            ("target.q", self.target.q.len()),
            ("target.theta", self.target.theta.len()),
        ] {
            if len != m {
                return Err(Error::InvalidParameter(format!("{name} has {len} entries, class.p has {m}")));
            }
        }
        if self.oversample < 4 {
            return Err(Error::InvalidParameter(format!("oversample {} must be at least 4", self.oversample)));
        }
        self.source()?;
        self.target()?;
        self.regime()?;
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.class.p.len()
    }

    pub fn source(&self) -> Result<BesovParams> {
        BesovParams::new(LorentzExponents::new(self.class.p.clone(), self.class.theta.clone())?, self.class.r, self.class.tau)
    }

    pub fn target(&self) -> Result<LorentzExponents> {
        LorentzExponents::new(self.target.q.clone(), self.target.theta.clone())
    }

    pub fn regime(&self) -> Result<Regime> {
        regime_of(&self.class.p, &self.target.q, self.class.r)
    }

    pub fn scheme_spec(&self, terms: usize) -> Result<SchemeSpec> {
        let selection = match self.scheme.selection {
            SelectionName::Greedy => BlockSelection::Greedy,
            SelectionName::Sampled => BlockSelection::Sampled { seed: self.seed },
        };
        let mut spec = SchemeSpec::new(self.scheme.kind, self.source()?, self.target()?, terms).with_selection(selection);
        spec.oversample = self.oversample;
        Ok(spec)
    }

    pub fn family(&self) -> LacunaryFamily {
        LacunaryFamily {
            shape: self.family.shape,
            seed: self.seed,
            extra_blocks: self.family.extra_blocks,
            max_block: self.family.max_block,
            oversample: self.oversample,
        }
    }
}

/// Output directory: flag, then environment, then config file, then `.`.
pub fn output_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or(file)
        .unwrap_or_else(|| PathBuf::from("."))
}

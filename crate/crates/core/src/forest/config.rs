use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Depth limit; `None` grows until the other stopping rules apply.
///
/// Serialized as an integer, or the string `"none"` when unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MaxDepth(pub Option<usize>);

impl MaxDepth {
    pub const UNLIMITED: MaxDepth = MaxDepth(None);

    pub fn limit(depth: usize) -> Self {
        MaxDepth(Some(depth))
    }

    pub fn reached(self, depth: usize) -> bool {
        self.0.is_some_and(|d| depth >= d)
    }
}

impl fmt::Display for MaxDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(d) => write!(f, "{d}"),
            None => f.write_str("none"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntOrWord {
    Int(usize),
    Word(String),
}

impl Serialize for MaxDepth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(d) => IntOrWord::Int(d),
            None => IntOrWord::Word("none".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaxDepth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match IntOrWord::deserialize(d)? {
            IntOrWord::Int(v) => Ok(MaxDepth(Some(v))),
            IntOrWord::Word(w) if w == "none" => Ok(MaxDepth(None)),
            IntOrWord::Word(w) => Err(de::Error::custom(format!(
                "max_depth must be an integer or \"none\", got `{w}`"
            ))),
        }
    }
}

/// Number of candidate features drawn at each node.
///
/// Serialized as `"sqrt"`, `"all"` or an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FeaturesPerSplit {
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            FeaturesPerSplit::Sqrt => (n_features as f64).sqrt().floor() as usize,
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl fmt::Display for FeaturesPerSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeaturesPerSplit::Sqrt => f.write_str("sqrt"),
            FeaturesPerSplit::All => f.write_str("all"),
            FeaturesPerSplit::Count(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for FeaturesPerSplit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FeaturesPerSplit::Sqrt => IntOrWord::Word("sqrt".into()),
            FeaturesPerSplit::All => IntOrWord::Word("all".into()),
            FeaturesPerSplit::Count(k) => IntOrWord::Int(*k),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeaturesPerSplit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match IntOrWord::deserialize(d)? {
            IntOrWord::Int(k) => Ok(FeaturesPerSplit::Count(k)),
            IntOrWord::Word(w) => match w.as_str() {
                "sqrt" => Ok(FeaturesPerSplit::Sqrt),
                "all" => Ok(FeaturesPerSplit::All),
                _ => Err(de::Error::custom(format!(
                    "features_per_split must be \"sqrt\", \"all\" or an integer, got `{w}`"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: MaxDepth,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: MaxDepth::UNLIMITED,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Parameter("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Parameter("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Parameter("min_samples_leaf must be at least 1".into()));
        }
        if self.features_per_split == FeaturesPerSplit::Count(0) {
            return Err(Error::Parameter("features_per_split must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_per_split_resolution() {
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(17), 4);
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(1), 1);
        assert_eq!(FeaturesPerSplit::All.resolve(9), 9);
        assert_eq!(FeaturesPerSplit::Count(20).resolve(9), 9);
    }

    #[test]
    fn config_serde_uses_words_for_special_values() {
        let cfg = ForestConfig {
            max_depth: MaxDepth::UNLIMITED,
            features_per_split: FeaturesPerSplit::Count(3),
            ..Default::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"max_depth\":\"none\""));
        assert!(json.contains("\"features_per_split\":3"));
        assert_eq!(serde_json::from_str::<ForestConfig>(&json).unwrap(), cfg);
        assert!(serde_json::from_str::<MaxDepth>("\"deep\"").is_err());
    }

    #[test]
    fn validation() {
        assert!(ForestConfig::default().validate().is_ok());
        let bad = ForestConfig {
            min_samples_split: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::equilibrium::Concept;
use crate::error::{Error, Result};
use crate::neural::{Architecture, EncodingMode};

/// Every predictor the harness can evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Cnn,
    /// CNN trained only on other sessions of the test game.
    CnnGs,
    Nash,
    Qre,
    Pse,
    Ase,
    Ibe,
    /// Empirical action frequencies of the test game itself. An oracle
    /// benchmark rather than a trained model.
    BestStatic,
    /// Empirical action frequencies of the training data.
    BestStaticTrain,
    Random,
    Rl,
    Nfp,
    Inertia,
    Mf,
    /// Predicts the realized action with certainty; harness self-test.
    Oracle,
}

impl ModelKind {
    pub const ALL: [ModelKind; 16] = [
        ModelKind::Mlp,
        ModelKind::Cnn,
        ModelKind::CnnGs,
        ModelKind::Nash,
        ModelKind::Qre,
        ModelKind::Pse,
        ModelKind::Ase,
        ModelKind::Ibe,
        ModelKind::BestStatic,
        ModelKind::BestStaticTrain,
        ModelKind::Random,
        ModelKind::Rl,
        ModelKind::Nfp,
        ModelKind::Inertia,
        ModelKind::Mf,
        ModelKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Cnn => "cnn",
            ModelKind::CnnGs => "cnn_gs",
            ModelKind::Nash => "nash",
            ModelKind::Qre => "qre",
            ModelKind::Pse => "pse",
            ModelKind::Ase => "ase",
            ModelKind::Ibe => "ibe",
            ModelKind::BestStatic => "best_static",
            ModelKind::BestStaticTrain => "best_static_train",
            ModelKind::Random => "random",
            ModelKind::Rl => "rl",
            ModelKind::Nfp => "nfp",
            ModelKind::Inertia => "inertia",
            ModelKind::Mf => "mf",
            ModelKind::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown model {name:?}")))
    }

    pub fn is_neural(self) -> bool {
        matches!(self, ModelKind::Mlp | ModelKind::Cnn | ModelKind::CnnGs)
    }

    pub fn architecture(self) -> Option<Architecture> {
        match self {
            ModelKind::Mlp => Some(Architecture::default_mlp()),
            ModelKind::Cnn | ModelKind::CnnGs => Some(Architecture::default_cnn()),
            _ => None,
        }
    }

    /// Equilibrium concept behind a static model.
    pub fn concept(self) -> Option<Concept> {
        match self {
            ModelKind::Nash => Some(Concept::Nash),
            ModelKind::Qre => Some(Concept::Qre),
            ModelKind::Pse => Some(Concept::Pse),
            ModelKind::Ase => Some(Concept::Ase),
            ModelKind::Ibe => Some(Concept::Ibe),
            _ => None,
        }
    }

    /// Name used in reports; neural models carry their input encoding.
    pub fn label(self, mode: EncodingMode) -> String {
        match (self, mode) {
            (ModelKind::BestStatic, _) => "best_static_test_empirical".into(),
            (m, EncodingMode::EconAware) if m.is_neural() => format!("{}_econ", m.name()),
            (m, _) => m.name().into(),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(ModelKind::parse(m.name()).unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!(matches!(ModelKind::parse("lstm"), Err(Error::Config(_))));
    }

    #[test]
    fn labels() {
        assert_eq!(ModelKind::Cnn.label(EncodingMode::EconAware), "cnn_econ");
        assert_eq!(ModelKind::Cnn.label(EncodingMode::ActionOnly), "cnn");
        assert_eq!(ModelKind::Qre.label(EncodingMode::EconAware), "qre");
        assert_eq!(ModelKind::BestStatic.label(EncodingMode::ActionOnly), "best_static_test_empirical");
    }
}

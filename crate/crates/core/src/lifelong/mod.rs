//! Lifelong learning over a stream of collections: knowledge pools, the
//! topic regularizer, embedding transfer, selective co-training and their
//! combination into one training objective.

mod embtf;
mod kb_io;
mod pool;
mod sal;
mod topic_reg;
mod train;

use serde::{Deserialize, Serialize};

pub use embtf::{build_embtf_context, EmbSource, EmbTfContext};
pub use kb_io::{load_kb, save_kb, KB_FORMAT_VERSION};
pub use pool::{accumulate_knowledge, KnowledgeBase, TopicPoolEntry, WordPoolEntry};
pub use sal::{delta_sal, distill_documents, doc_perplexity, AugmentedDoc, AugmentedSet, DistillSource, SourceCounts};
pub use topic_reg::{delta_tr, AlignmentParams, DecoderMap, TaskAlignment, TrGrads};
pub use train::{lifelong_train, LifelongConfig, LifelongOutcome};

/// Which transfer approaches are switched on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approaches {
    pub embtf: bool,
    pub tr: bool,
    pub sal: bool,
}

impl Approaches {
    pub const NONE: Approaches = Approaches { embtf: false, tr: false, sal: false };
    pub const ALL: Approaches = Approaches { embtf: true, tr: true, sal: true };

    pub fn any(self) -> bool {
        self.embtf || self.tr || self.sal
    }

    pub fn label(self) -> String {
        let mut parts = Vec::new();
        if self.embtf {
            parts.push("embtf");
        }
        if self.tr {
            parts.push("tr");
        }
        if self.sal {
            parts.push("sal");
        }
        if parts.is_empty() {
            "ntm".to_string()
        } else if parts.len() == 3 {
            "lntm-all".to_string()
        } else {
            format!("lntm+{}", parts.join("+"))
        }
    }
}

impl std::str::FromStr for Approaches {
    type Err = String;

    /// Comma-separated subset of `embtf,tr,sal`; `all` and `none` are accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Approaches::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "embtf" => out.embtf = true,
                "tr" => out.tr = true,
                "sal" => out.sal = true,
                "all" => out = Approaches::ALL,
                "none" => {}
                other => return Err(format!("unknown approach `{other}`")),
            }
        }
        Ok(out)
    }
}

/// Per-past-task transfer strengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaTriad {
    pub tr: f64,
    pub embtf: f64,
    pub sal: f64,
}

impl LambdaTriad {
    pub fn new(tr: f64, embtf: f64, sal: f64) -> Self {
        LambdaTriad { tr, embtf, sal }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        for (name, v) in [("tr", self.tr), ("embtf", self.embtf), ("sal", self.sal)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(crate::error::Error::Config(format!("lambda_{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approaches_parse_and_label() {
        assert_eq!("all".parse::<Approaches>().unwrap(), Approaches::ALL);
        assert_eq!("".parse::<Approaches>().unwrap(), Approaches::NONE);
        let a: Approaches = "tr, sal".parse().unwrap();
        assert!(a.tr && a.sal && !a.embtf);
        assert_eq!(a.label(), "lntm+tr+sal");
        assert_eq!(Approaches::ALL.label(), "lntm-all");
        assert!("bogus".parse::<Approaches>().is_err());
    }

    #[test]
    fn negative_lambdas_are_rejected() {
        assert!(LambdaTriad::new(0.1, -1.0, 0.0).validate().is_err());
        assert!(LambdaTriad::new(0.001, 0.1, 1.0).validate().is_ok());
    }
}

//! Scenario files: a grade, polynomial generators and an ordered pipeline.

use hardy_blh::subspace::DEFAULT_WORKING_MARGIN;
use hardy_blh::{parse_polynomial, Grade, HardyVector};
use serde::{Deserialize, Serialize};

use crate::{CliError, Settings};

fn default_margin() -> usize {
    DEFAULT_WORKING_MARGIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub grade: Grade,
    pub generators: Vec<String>,
    #[serde(default = "default_margin")]
    pub working_margin: usize,
    pub pipeline: Vec<Step>,
}

/// One pipeline step. `tolerance` overrides the step's default verdict
/// tolerance; `trusted_degree` narrows the degree range that is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Build,
    Invariance {
        tolerance: Option<f64>,
    },
    Wandering {
        tolerance: Option<f64>,
    },
    Wold {
        tolerance: Option<f64>,
    },
    ExtractTheta {
        #[serde(default)]
        force: bool,
    },
    Isometry {
        tolerance: Option<f64>,
    },
    ExtractPhi {
        trusted_degree: Option<usize>,
        tolerance: Option<f64>,
    },
    Intertwining {
        trusted_degree: Option<usize>,
        tolerance: Option<f64>,
    },
    Commutation {
        trusted_degree: Option<usize>,
        tolerance: Option<f64>,
    },
    Rebuild {
        tolerance: Option<f64>,
    },
    Purity {
        cap: Option<usize>,
        steps: Option<usize>,
    },
    Defect {
        expect_rank: Option<usize>,
    },
    Classify {
        expect_doubly_commuting: Option<bool>,
    },
}

/// Artifacts a step consumes or produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Artifact {
    Subspace,
    Wandering,
    Theta,
    Phi,
}

impl Artifact {
    fn step_name(self) -> &'static str {
        match self {
            Artifact::Subspace => "build",
            Artifact::Wandering => "wandering",
            Artifact::Theta => "extract_theta",
            Artifact::Phi => "extract_phi",
        }
    }
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Build => "build",
            Step::Invariance { .. } => "invariance",
            Step::Wandering { .. } => "wandering",
            Step::Wold { .. } => "wold",
            Step::ExtractTheta { .. } => "extract_theta",
            Step::Isometry { .. } => "isometry",
            Step::ExtractPhi { .. } => "extract_phi",
            Step::Intertwining { .. } => "intertwining",
            Step::Commutation { .. } => "commutation",
            Step::Rebuild { .. } => "rebuild",
            Step::Purity { .. } => "purity",
            Step::Defect { .. } => "defect",
            Step::Classify { .. } => "classify",
        }
    }

    pub fn requires(&self) -> &'static [Artifact] {
        use Artifact::*;
        match self {
            Step::Build => &[],
            Step::Invariance { .. } | Step::Wandering { .. } | Step::Defect { .. } | Step::Classify { .. } => &[Subspace],
            Step::Wold { .. } | Step::ExtractTheta { .. } | Step::ExtractPhi { .. } => &[Wandering],
            Step::Isometry { .. } | Step::Rebuild { .. } => &[Theta],
            Step::Intertwining { .. } => &[Theta, Phi],
            Step::Commutation { .. } | Step::Purity { .. } => &[Phi],
        }
    }

    pub fn produces(&self) -> Option<Artifact> {
        match self {
            Step::Build => Some(Artifact::Subspace),
            Step::Wandering { .. } => Some(Artifact::Wandering),
            Step::ExtractTheta { .. } => Some(Artifact::Theta),
            Step::ExtractPhi { .. } => Some(Artifact::Phi),
            _ => None,
        }
    }

    pub fn tolerance(&self) -> Option<f64> {
        match self {
            Step::Invariance { tolerance }
            | Step::Wandering { tolerance }
            | Step::Wold { tolerance }
            | Step::Isometry { tolerance }
            | Step::ExtractPhi { tolerance, .. }
            | Step::Intertwining { tolerance, .. }
            | Step::Commutation { tolerance, .. }
            | Step::Rebuild { tolerance } => *tolerance,
            _ => None,
        }
    }

    pub fn trusted_degree(&self) -> Option<usize> {
        match self {
            Step::ExtractPhi { trusted_degree, .. }
            | Step::Intertwining { trusted_degree, .. }
            | Step::Commutation { trusted_degree, .. } => *trusted_degree,
            _ => None,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn working_margin(&self, settings: &Settings) -> usize {
        settings.margin.unwrap_or(self.working_margin)
    }

    /// Grade the orbit is built on.
    pub fn working_grade(&self, settings: &Settings) -> Grade {
        self.grade.with_outer_cap(self.grade.outer_cap + self.working_margin(settings))
    }

    /// Everything that can be rejected before any computation: grade and
    /// budget, generator syntax, tolerances, trusted degrees and step order.
    pub fn validate(&self, settings: &Settings) -> Result<Vec<HardyVector>, CliError> {
        let input = |msg: String| CliError::Input(format!("scenario '{}': {msg}", self.label));
        let grade = self.grade.validated().map_err(|e| input(e.to_string()))?;
        let extra = if settings.stability { 1 } else { 0 };
        let largest = self.working_grade(settings).with_outer_cap(self.working_grade(settings).outer_cap + extra);
        largest.check_budget(settings.max_dim).map_err(|e| input(format!("{e} (see --max-dim)")))?;
        if self.generators.is_empty() {
            return Err(input("no generators".into()));
        }
        let gens = self
            .generators
            .iter()
            .enumerate()
            .map(|(j, t)| parse_polynomial(t, grade).map_err(|e| input(format!("generator {j}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(t) = settings.tolerance {
            if !(t > 0.0) {
                return Err(input(format!("--tolerance must be positive, got {t}")));
            }
        }
        if self.pipeline.is_empty() {
            return Err(input("empty pipeline".into()));
        }
        let mut have: Vec<Artifact> = Vec::new();
        for (k, step) in self.pipeline.iter().enumerate() {
            let at = |msg: String| input(format!("step {k} ({}): {msg}", step.name()));
            for need in step.requires() {
                if !have.contains(need) {
                    return Err(at(format!("requires an earlier '{}' step", need.step_name())));
                }
            }
            if let Some(t) = step.tolerance() {
                if !(t > 0.0) {
                    return Err(at(format!("tolerance must be positive, got {t}")));
                }
            }
            if let Some(t) = step.trusted_degree() {
                match grade.trusted_degree() {
                    None => {
                        return Err(at(format!(
                            "trusted degree {t} requested but D = {} leaves no safe band (safe margin {})",
                            grade.outer_cap, grade.safe_margin
                        )))
                    }
                    Some(top) if t > top => return Err(at(format!("trusted degree {t} exceeds {top}"))),
                    _ => {}
                }
            }
            if grade.trusted_degree().is_none() && matches!(step, Step::Intertwining { .. } | Step::Commutation { .. }) {
                return Err(at(format!("D = {} leaves no trusted degree range", grade.outer_cap)));
            }
            if let Some(a) = step.produces() {
                have.push(a);
            }
        }
        Ok(gens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(pipeline: &str) -> String {
        format!(r#"{{"label":"t","grade":{{"n":1,"D":3,"N":2,"d_E":1}},"generators":["z - z1"],"pipeline":{pipeline}}}"#)
    }

    #[test]
    fn parses_steps_and_defaults() {
        let sc = Scenario::from_json(&scenario(r#"[{"step":"build"},{"step":"wandering"},{"step":"extract_theta","force":true}]"#))
            .unwrap();
        assert_eq!(sc.working_margin, 2);
        assert_eq!(sc.grade.safe_margin, 1);
        assert_eq!(sc.pipeline[2], Step::ExtractTheta { force: true });
        sc.validate(&Settings::default()).unwrap();
    }

    #[test]
    fn unknown_step_and_option_rejected() {
        assert!(Scenario::from_json(&scenario(r#"[{"step":"explode"}]"#)).is_err());
        assert!(Scenario::from_json(&scenario(r#"[{"step":"wold","tol":1}]"#)).is_err());
    }

    #[test]
    fn dependency_error_names_the_step() {
        let sc = Scenario::from_json(&scenario(r#"[{"step":"build"},{"step":"extract_theta"}]"#)).unwrap();
        let err = sc.validate(&Settings::default()).unwrap_err().to_string();
        assert!(err.contains("step 1 (extract_theta)") && err.contains("'wandering'"), "{err}");
    }

    #[test]
    fn degenerate_cap_with_trusted_degree_is_input_error() {
        let text = r#"{"label":"t","grade":{"n":1,"D":0,"N":2,"d_E":1},"generators":["1"],
            "pipeline":[{"step":"build"},{"step":"wandering"},{"step":"extract_phi","trusted_degree":1}]}"#;
        let err = Scenario::from_json(text).unwrap().validate(&Settings::default()).unwrap_err();
        assert!(matches!(err, CliError::Input(ref m) if m.contains("no safe band")), "{err}");
    }

    #[test]
    fn budget_and_tolerance_checked() {
        let sc = Scenario::from_json(&scenario(r#"[{"step":"build"},{"step":"invariance","tolerance":0}]"#)).unwrap();
        assert!(sc.validate(&Settings::default()).unwrap_err().to_string().contains("tolerance must be positive"));
        let sc = Scenario::from_json(&scenario(r#"[{"step":"build"}]"#)).unwrap();
        let tight = Settings { max_dim: 10, ..Settings::default() };
        assert!(sc.validate(&tight).unwrap_err().to_string().contains("exceeds the limit"));
    }

    #[test]
    fn generator_errors_are_input_errors() {
        let text = scenario(r#"[{"step":"build"}]"#).replace("z - z1", "z^9");
        let err = Scenario::from_json(&text).unwrap().validate(&Settings::default()).unwrap_err();
        assert!(err.to_string().contains("generator 0"), "{err}");
    }
}

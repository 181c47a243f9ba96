//! Run configuration: JSON ingestion and validation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{IVec, Lattice};
use crate::params::ResonanceParams;
use crate::symbol::FourierSymbol;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub basis: Vec<Vec<f64>>,
    #[serde(default)]
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub k: IVec,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub terms: Vec<PotentialTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Auto(String),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    #[serde(default)]
    pub c_schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub d_schedule: Option<ScheduleSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub params: Option<ParamsSpec>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_radius() -> f64 {
    20.0
}

fn default_steps() -> usize {
    2
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn dim(&self) -> usize {
        self.lattice.basis.len()
    }

    /// Hash of the canonical JSON serialization, embedded in artifacts.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_lattice(&self) -> Result<Lattice> {
        let d = self.dim();
        let kappa = if self.lattice.kappa.is_empty() {
            vec![0.0; d]
        } else if self.lattice.kappa.len() == d {
            self.lattice.kappa.clone()
        } else {
            return Err(Error::InvalidConfig(format!(
                "kappa has {} entries for dimension {d}",
                self.lattice.kappa.len()
            )));
        };
        Lattice::new(self.lattice.basis.clone(), kappa)
    }

    /// Validates the parameter constraints before any run.
    pub fn build_params(&self) -> Result<ResonanceParams> {
        let d = self.dim();
        let p = match &self.params {
            None => ResonanceParams::defaults(d)?,
            Some(spec) => {
                let mut p = ResonanceParams::new(d, spec.epsilon, spec.delta, spec.tau)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                if let Some(ScheduleSpec::Explicit(c)) = &spec.c_schedule {
                    p.c_schedule = c.clone();
                }
                if let Some(ScheduleSpec::Explicit(ds)) = &spec.d_schedule {
                    p.d_schedule = ds.clone();
                }
                p.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
                p
            }
        };
        Ok(p)
    }

    /// Builds the potential, closing it Hermitianly when a mirror term is
    /// absent. Returns the symbol together with a list of warnings.
    pub fn build_potential(&self) -> Result<(FourierSymbol, Vec<String>)> {
        let d = self.dim();
        let mut warnings = Vec::new();
        let mut terms: Vec<(IVec, Complex64)> = Vec::new();
        for t in &self.potential.terms {
            if t.k.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "potential term {:?} has wrong dimension",
                    t.k
                )));
            }
            terms.push((t.k.clone(), Complex64::new(t.re, t.im)));
        }
        let mut closed = terms.clone();
        for (k, c) in &terms {
            let kneg: IVec = k.iter().map(|&x| -x).collect();
            let mirror: Complex64 = terms
                .iter()
                .filter(|(kk, _)| *kk == kneg)
                .map(|(_, cc)| *cc)
                .sum();
            if (mirror - c.conj()).norm() > 1e-12 {
                if mirror.norm() == 0.0 {
                    warnings.push(format!(
                        "mirror term at {kneg:?} missing; added conjugate for a real potential"
                    ));
                    closed.push((kneg, c.conj()));
                } else {
                    return Err(Error::NotSelfAdjoint(format!(
                        "terms at {k:?} and {kneg:?} are not conjugate"
                    )));
                }
            }
        }
        let symbol = FourierSymbol::from_constants(d, &closed);
        Ok((symbol, warnings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal() {
        let cfg = RunConfig::from_json(
            r#"{"lattice": {"basis": [[1,0],[0,1]], "kappa": [0.3, 0.2]},
                "potential": {"terms": [{"k": [1,0], "re": 1.0}, {"k": [-1,0], "re": 1.0}]},
                "radius": 12}"#,
        )
        .unwrap();
        assert_eq!(cfg.dim(), 2);
        let lat = cfg.build_lattice().unwrap();
        assert_eq!(lat.kappa, vec![0.3, 0.2]);
        let p = cfg.build_params().unwrap();
        assert_eq!(p.dim, 2);
        let (v, warnings) = cfg.build_potential().unwrap();
        assert!(warnings.is_empty());
        assert_eq!(v.support().len(), 2);
    }

    #[test]
    fn parameter_constraint_rejected() {
        let cfg = RunConfig::from_json(
            r#"{"lattice": {"basis": [[1,0],[0,1]]},
                "params": {"epsilon": 0.1, "delta": 0.9, "tau": 1.1}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.build_params(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn hermitian_closure_warns() {
        let cfg = RunConfig::from_json(
            r#"{"lattice": {"basis": [[1]]},
                "potential": {"terms": [{"k": [1], "re": 0.5, "im": 0.2}]}}"#,
        )
        .unwrap();
        let (v, warnings) = cfg.build_potential().unwrap();
        assert_eq!(warnings.len(), 1);
        v.check_hermitian(&[vec![0.0], vec![3.0]]).unwrap();
    }

    #[test]
    fn config_hash_deterministic() {
        let text = r#"{"lattice": {"basis": [[1,0],[0,1]]}, "radius": 9}"#;
        let a = RunConfig::from_json(text).unwrap().hash();
        let b = RunConfig::from_json(text).unwrap().hash();
        assert_eq!(a, b);
    }
}

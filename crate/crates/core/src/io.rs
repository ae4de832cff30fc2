//! JSON file schemas for systems, assemblages, tensors, measures, bipartite
//! states and witnesses. Every `load` re-validates all invariants.

use serde::{Deserialize, Serialize};

use crate::bipartite::BipartiteState;
use crate::choquet::SimpleMeasure;
use crate::error::{invalid, Result};
use crate::gpt::{GptSystem, Measurement, SystemSpec, Vector};
use crate::steering::{Assemblage, Witness};
use crate::tensor::{DichotomicTensor, TensorElement};

fn vectors(system: &GptSystem, rows: &[Vec<f64>], what: &str) -> Result<Vec<Vector>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != system.dim() {
                return invalid(format!("{what} {i} has length {}, expected {}", r.len(), system.dim()));
            }
            system.vector(r.clone())
        })
        .collect()
}

fn vector(system: &GptSystem, r: &[f64], what: &str) -> Result<Vector> {
    if r.len() != system.dim() {
        return invalid(format!("{what} has length {}, expected {}", r.len(), system.dim()));
    }
    system.vector(r.to_vec())
}

/// `{"system", "barycenter", "entries": [[vector, ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblageFile {
    pub system: SystemSpec,
    pub barycenter: Vec<f64>,
    pub entries: Vec<Vec<Vec<f64>>>,
}

impl AssemblageFile {
    pub fn load(&self) -> Result<(GptSystem, Assemblage)> {
        let sys = self.system.build()?;
        let sigma = vector(&sys, &self.barycenter, "barycenter")?;
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(x, row)| vectors(&sys, row, &format!("entry of setting {x}")))
            .collect::<Result<Vec<_>>>()?;
        let asm = Assemblage::new(&sys, sigma, entries)?;
        Ok((sys, asm))
    }

    pub fn from_assemblage(system: &GptSystem, asm: &Assemblage) -> AssemblageFile {
        AssemblageFile {
            system: system.to_spec(),
            barycenter: asm.sigma().coords().to_vec(),
            entries: asm
                .entries()
                .iter()
                .map(|r| r.iter().map(|v| v.coords().to_vec()).collect())
                .collect(),
        }
    }
}

/// `{"system", "sigma", "components"}`: a dichotomic tensor `(σ, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub system: SystemSpec,
    pub sigma: Vec<f64>,
    pub components: Vec<Vec<f64>>,
}

impl TensorFile {
    pub fn load(&self) -> Result<(GptSystem, DichotomicTensor)> {
        let sys = self.system.build()?;
        let sigma = vector(&sys, &self.sigma, "sigma")?;
        let ys = vectors(&sys, &self.components, "component")?;
        let t = DichotomicTensor::new(&sys, sigma, ys)?;
        Ok((sys, t))
    }
}

/// `{"weight", "point"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: f64,
    pub point: Vec<f64>,
}

/// `{"system", "atoms": [{"weight", "point"}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub system: SystemSpec,
    pub atoms: Vec<AtomSpec>,
}

impl MeasureFile {
    pub fn load(&self) -> Result<(GptSystem, SimpleMeasure)> {
        let sys = self.system.build()?;
        let m = self.load_on(&sys)?;
        Ok((sys, m))
    }

    /// Loads the atoms onto an already-built system, which must match.
    pub fn load_on(&self, system: &GptSystem) -> Result<SimpleMeasure> {
        if self.system.build()?.id() != system.id() {
            return invalid("measures are over different systems");
        }
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(j, a)| Ok((a.weight, vector(system, &a.point, &format!("atom {j}"))?)))
            .collect::<Result<Vec<_>>>()?;
        SimpleMeasure::new(system, atoms)
    }

    pub fn from_measure(system: &GptSystem, m: &SimpleMeasure) -> MeasureFile {
        MeasureFile {
            system: system.to_spec(),
            atoms: m
                .atoms()
                .iter()
                .map(|(w, p)| AtomSpec { weight: *w, point: p.coords().to_vec() })
                .collect(),
        }
    }
}

/// `{"system_a", "system_b", "coeffs": matrix}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteFile {
    pub system_a: SystemSpec,
    pub system_b: SystemSpec,
    pub coeffs: Vec<Vec<f64>>,
}

impl BipartiteFile {
    pub fn load(&self) -> Result<(GptSystem, GptSystem, BipartiteState)> {
        let a = self.system_a.build()?;
        let b = self.system_b.build()?;
        let t = TensorElement::new(&a, &b, self.coeffs.clone())?;
        let st = BipartiteState::new(&a, &b, t)?;
        Ok((a, b, st))
    }

    pub fn from_state(a: &GptSystem, b: &GptSystem, st: &BipartiteState) -> BipartiteFile {
        BipartiteFile {
            system_a: a.to_spec(),
            system_b: b.to_spec(),
            coeffs: st.tensor().coeffs().to_vec(),
        }
    }
}

/// `{"system", "sigma", "w0", "components"}`: a dichotomic witness with the
/// barycenter it is checked against. `w0` is optional on input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessFile {
    pub system: SystemSpec,
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<f64>>,
    pub components: Vec<Vec<f64>>,
}

impl WitnessFile {
    pub fn load(&self) -> Result<(GptSystem, Vector, Witness)> {
        let sys = self.system.build()?;
        let sigma = vector(&sys, &self.sigma, "sigma")?;
        let w0 = match &self.w0 {
            Some(w) => {
                if w.len() != sys.dim() {
                    return invalid("w0 has the wrong length");
                }
                sys.functional(w.clone())?
            }
            None => sys.unit(),
        };
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(x, c)| {
                if c.len() != sys.dim() {
                    return invalid(format!("witness component {x} has the wrong length"));
                }
                sys.functional(c.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        let w = Witness::new(&sys, w0, comps)?;
        Ok((sys, sigma, w))
    }

    pub fn from_witness(system: &GptSystem, sigma: &Vector, w: &Witness) -> WitnessFile {
        WitnessFile {
            system: system.to_spec(),
            sigma: sigma.coords().to_vec(),
            w0: Some(w.w0.coords().to_vec()),
            components: w.components.iter().map(|c| c.coords().to_vec()).collect(),
        }
    }
}

/// Measurements as effect lists: `[[effect, ...], ...]`.
pub fn measurements_from_json(system: &GptSystem, effects: &[Vec<Vec<f64>>]) -> Result<Vec<Measurement>> {
    effects
        .iter()
        .enumerate()
        .map(|(x, fs)| {
            let fs = fs
                .iter()
                .map(|f| {
                    if f.len() != system.dim() {
                        return invalid(format!("effect of measurement {x} has the wrong length"));
                    }
                    system.functional(f.clone())
                })
                .collect::<Result<Vec<_>>>()?;
            Measurement::new(system, fs)
        })
        .collect()
}

pub fn measurements_to_json(measurements: &[Measurement]) -> Vec<Vec<Vec<f64>>> {
    measurements
        .iter()
        .map(|m| m.effects.iter().map(|f| f.coords().to_vec()).collect())
        .collect()
}

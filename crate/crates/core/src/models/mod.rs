//! Case-study systems: discrete-event simulation, a buffered stack machine
//! and a write-coalescing memory controller, each with its specification
//! system, a refinement map, and fault injection for negative testing.
//!
//! Every state is labeled with its full configuration. Model files carry the
//! decoded configuration of every state under `meta`, which is all that is
//! needed to rebuild refinement maps.

pub mod des;
mod explore;
pub mod memc;
pub mod stk;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lts::{Label, Lts, LtsFile, StateId};
use crate::union::RefinementMap;
use explore::{explore, Explored};

pub use des::DesParams;
pub use memc::MemParams;
pub use stk::StkParams;

/// Default bound on generated state spaces.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DesAbs,
    DesOpt,
    Stk,
    Bstk,
    Memc,
    Optmemc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] =
        [ModelKind::DesAbs, ModelKind::DesOpt, ModelKind::Stk, ModelKind::Bstk, ModelKind::Memc, ModelKind::Optmemc];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DesAbs => "des_abs",
            ModelKind::DesOpt => "des_opt",
            ModelKind::Stk => "stk",
            ModelKind::Bstk => "bstk",
            ModelKind::Memc => "memc",
            ModelKind::Optmemc => "optmemc",
        }
    }

    /// The specification system an implementation kind refines.
    pub fn specification(self) -> Option<ModelKind> {
        match self {
            ModelKind::DesOpt => Some(ModelKind::DesAbs),
            ModelKind::Bstk => Some(ModelKind::Stk),
            ModelKind::Optmemc => Some(ModelKind::Memc),
            _ => None,
        }
    }

    pub fn faults(self) -> &'static [FaultKind] {
        match self {
            ModelKind::Bstk => &[FaultKind::DropLastOnDrain, FaultKind::SkipPcIncrement, FaultKind::OffByOnePointer],
            ModelKind::Optmemc => &FaultKind::ALL,
            _ => &[],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// The last buffered item is lost when the buffer drains.
    DropLastOnDrain,
    /// The draining step leaves the program counter where it was.
    SkipPcIncrement,
    /// The newest of several writes to one address is treated as redundant.
    MarkNewestRedundant,
    /// The draining step advances the program counter by two.
    OffByOnePointer,
}

impl FaultKind {
    pub const ALL: [FaultKind; 4] = [
        FaultKind::DropLastOnDrain,
        FaultKind::SkipPcIncrement,
        FaultKind::MarkNewestRedundant,
        FaultKind::OffByOnePointer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultKind::DropLastOnDrain => "drop_last_on_drain",
            FaultKind::SkipPcIncrement => "skip_pc_increment",
            FaultKind::MarkNewestRedundant => "mark_newest_redundant",
            FaultKind::OffByOnePointer => "off_by_one_pointer",
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<FaultKind> {
        FaultKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown fault `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelParams {
    Des(DesParams),
    Stk(StkParams),
    Mem(MemParams),
}

impl ModelParams {
    /// Reads kind-specific parameters from JSON.
    pub fn from_json(kind: ModelKind, v: Value) -> Result<ModelParams> {
        Ok(match kind {
            ModelKind::DesAbs | ModelKind::DesOpt => ModelParams::Des(serde_json::from_value(v)?),
            ModelKind::Stk | ModelKind::Bstk => ModelParams::Stk(serde_json::from_value(v)?),
            ModelKind::Memc | ModelKind::Optmemc => ModelParams::Mem(serde_json::from_value(v)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultKind>,
    /// Decoded configuration of each state, indexed by state id.
    pub states: Vec<Value>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub lts: Lts,
    pub meta: ModelMeta,
}

impl Model {
    fn from_explored<C: Serialize>(kind: ModelKind, fault: Option<FaultKind>, e: Explored<C>) -> Model {
        let states = e.configs.iter().map(|c| serde_json::to_value(c).expect("configs serialize")).collect();
        Model { lts: e.lts, meta: ModelMeta { kind, fault, states } }
    }

    /// Lts file with an extra `meta` member.
    pub fn to_json_value(&self) -> Value {
        let mut v = self.lts.to_json_value();
        v["meta"] = serde_json::to_value(&self.meta).expect("meta serializes");
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("model serializes")
    }

    /// Reads a model file; `None` metadata when the file is a plain Lts.
    pub fn read(text: &str) -> Result<(Lts, Option<ModelMeta>)> {
        let mut v: Value = serde_json::from_str(text)?;
        let meta = match v.as_object_mut().and_then(|o| o.remove("meta")) {
            Some(m) => Some(serde_json::from_value::<ModelMeta>(m)?),
            None => None,
        };
        let file: LtsFile = serde_json::from_value(v)?;
        let lts = file.into_lts()?;
        if let Some(m) = &meta {
            if m.states.len() != lts.num_states() {
                return Err(Error::InvalidParams(format!(
                    "metadata describes {} states but the system has {}",
                    m.states.len(),
                    lts.num_states()
                )));
            }
        }
        Ok((lts, meta))
    }

    pub fn from_json(text: &str) -> Result<Model> {
        match Model::read(text)? {
            (lts, Some(meta)) => Ok(Model { lts, meta }),
            (_, None) => Err(Error::IncompatibleModels("file carries no model metadata".into())),
        }
    }
}

fn wrong_params(kind: ModelKind) -> Error {
    Error::InvalidParams(format!("parameters do not fit model kind {kind}"))
}

/// Generates a model with the default state cap.
pub fn gen_model(kind: ModelKind, params: &ModelParams) -> Result<Model> {
    gen_model_capped(kind, params, None, DEFAULT_STATE_CAP)
}

/// Generates `kind` with `fault` injected.
pub fn inject_fault(kind: ModelKind, params: &ModelParams, fault: FaultKind) -> Result<Model> {
    gen_model_capped(kind, params, Some(fault), DEFAULT_STATE_CAP)
}

pub fn gen_model_capped(kind: ModelKind, params: &ModelParams, fault: Option<FaultKind>, cap: usize) -> Result<Model> {
    gen_with_seeds(kind, params, fault, cap, &[])
}

/// Generation closed over extra seed configurations (given as JSON), which
/// lets a specification system cover every image of a faulty implementation.
fn gen_with_seeds(
    kind: ModelKind,
    params: &ModelParams,
    fault: Option<FaultKind>,
    cap: usize,
    seeds: &[Value],
) -> Result<Model> {
    if let Some(f) = fault {
        if !kind.faults().contains(&f) {
            return Err(Error::InapplicableFault { fault: f.name().into(), kind: kind.name().into() });
        }
    }
    match (kind, params) {
        (ModelKind::DesAbs, ModelParams::Des(p)) => {
            p.validate()?;
            let e = explore(&[des::initial(p)], &decode(seeds)?, cap, |c| des::abs_step(p, c))?;
            Ok(Model::from_explored(kind, fault, e))
        }
        (ModelKind::DesOpt, ModelParams::Des(p)) => {
            p.validate()?;
            let e = explore(&[des::initial(p)], &decode(seeds)?, cap, |c| vec![des::opt_step(p, c)])?;
            Ok(Model::from_explored(kind, fault, e))
        }
        (ModelKind::Stk, ModelParams::Stk(p)) => {
            p.validate()?;
            let e = explore(&[stk::stk_initial()], &decode(seeds)?, cap, |c| vec![stk::stk_step(p, c)])?;
            Ok(Model::from_explored(kind, fault, e))
        }
        (ModelKind::Bstk, ModelParams::Stk(p)) => {
            p.validate()?;
            let e = explore(&[stk::bstk_initial()], &decode(seeds)?, cap, |c| vec![stk::bstk_step(p, fault, c)])?;
            Ok(Model::from_explored(kind, fault, e))
        }
        (ModelKind::Memc, ModelParams::Mem(p)) => {
            p.validate()?;
            let e = explore(&[memc::memc_initial(p)], &decode(seeds)?, cap, |c| vec![memc::memc_step(p, c)])?;
            Ok(Model::from_explored(kind, fault, e))
        }
        (ModelKind::Optmemc, ModelParams::Mem(p)) => {
            p.validate()?;
            let init = memc::optmemc_initial(p);
            let e = explore(&[init], &decode(seeds)?, cap, |c| vec![memc::optmemc_step(p, fault, c)])?;
            Ok(Model::from_explored(kind, fault, e))
        }
        _ => Err(wrong_params(kind)),
    }
}

fn decode<C: serde::de::DeserializeOwned>(seeds: &[Value]) -> Result<Vec<C>> {
    seeds
        .iter()
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| Error::IncompatibleModels(e.to_string())))
        .collect()
}

/// Image of a concrete configuration in the specification system.
fn image_of(kind: ModelKind, state: &Value) -> Result<Value> {
    let bad = || Error::IncompatibleModels(format!("{kind} state {state} has an unexpected shape"));
    Ok(match kind {
        ModelKind::DesOpt => state.clone(),
        ModelKind::Bstk => {
            let c: stk::BstkConfig = serde_json::from_value(state.clone()).map_err(|_| bad())?;
            if c.ibuf.len() > c.pc {
                return Err(bad());
            }
            serde_json::to_value(c.image()).expect("configs serialize")
        }
        ModelKind::Optmemc => {
            let c: memc::OptMemcConfig = serde_json::from_value(state.clone()).map_err(|_| bad())?;
            if c.rbuf.len() > c.pt {
                return Err(bad());
            }
            serde_json::to_value(c.image()).expect("configs serialize")
        }
        k => return Err(Error::IncompatibleModels(format!("{k} is not an implementation kind"))),
    })
}

/// Rebuilds the refinement map from model metadata: identity on DES
/// configurations; buffer-forgetting with pc rollback for the buffered
/// machines.
pub fn refinement_map_of(concrete: &ModelMeta, abstract_: &ModelMeta) -> Result<RefinementMap> {
    if concrete.kind.specification() != Some(abstract_.kind) {
        return Err(Error::IncompatibleModels(format!("{} does not implement {}", concrete.kind, abstract_.kind)));
    }
    let index: HashMap<Label, usize> =
        abstract_.states.iter().enumerate().map(|(i, v)| (Label::from_value(v), i)).collect();
    let map = concrete
        .states
        .iter()
        .map(|s| {
            let img = image_of(concrete.kind, s)?;
            index.get(&Label::from_value(&img)).map(|&i| StateId(i)).ok_or_else(|| {
                Error::IncompatibleModels(format!("image {img} of {s} is not a state of the {} model", abstract_.kind))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RefinementMap::new(map))
}

/// An implementation model, its specification model and the map between them.
#[derive(Debug, Clone)]
pub struct ModelPair {
    pub concrete: Model,
    pub abstract_: Model,
    pub map: RefinementMap,
}

/// Generates `kind` (possibly faulty) together with its specification.
///
/// The specification is closed over the images of all implementation states,
/// so a faulty implementation still has a complete refinement map; its
/// declared initial state is the specification's own.
pub fn gen_pair(kind: ModelKind, params: &ModelParams, fault: Option<FaultKind>, cap: usize) -> Result<ModelPair> {
    let spec =
        kind.specification().ok_or_else(|| Error::IncompatibleModels(format!("{kind} has no specification system")))?;
    let concrete = gen_model_capped(kind, params, fault, cap)?;
    let images = concrete.meta.states.iter().map(|s| image_of(kind, s)).collect::<Result<Vec<_>>>()?;
    let abstract_ = gen_with_seeds(spec, params, None, cap, &images)?;
    let map = refinement_map_of(&concrete.meta, &abstract_.meta)?;
    Ok(ModelPair { concrete, abstract_, map })
}

/// Whether every state of a BSTK model drains to what STK computes in the
/// same number of steps from its image.
pub fn bstk_drains_agree(params: &StkParams, model: &Model) -> Result<bool> {
    for s in &model.meta.states {
        let c: stk::BstkConfig = serde_json::from_value(s.clone())?;
        if !stk::drain_agrees(params, &c) {
            return Ok(false);
        }
    }
    Ok(true)
}

//! JSON instance files.
//!
//! An instance lists `voters` and `edges` by id, with optional `control`
//! and `params` blocks:
//!
//! ```json
//! {
//!   "voters": [{"id": "a", "voting_cost": 6, "delegating_cost": 4}],
//!   "edges": [["a", "b"]],
//!   "control": {"designated": "b", "k": 1, "action": "delete_voters"},
//!   "params": {"ell": 2}
//! }
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::{ControlAction, ControlInstance, ControlMode};
use crate::error::{Error, Result};
use crate::model::{Election, VoterRecord};
use crate::reductions::GadgetCertificate;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlBlock {
    pub designated: String,
    pub k: usize,
    pub action: ControlAction,
    #[serde(default)]
    pub mode: ControlMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unregistered: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_edges: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub voters: Vec<VoterRecord>,
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsBlock>,
}

const TOP_KEYS: &[&str] = &["voters", "edges", "control", "params"];
const VOTER_KEYS: &[&str] = &["id", "voting_cost", "delegating_cost"];
const CONTROL_KEYS: &[&str] = &["designated", "k", "action", "mode", "unregistered", "candidate_edges"];
const PARAM_KEYS: &[&str] = &["beta", "ell", "alpha"];

fn unknown_keys(value: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |v: &Value, allowed: &[&str], path: &str| {
        if let Value::Object(map) = v {
            for k in map.keys() {
                if !allowed.contains(&k.as_str()) {
                    out.push(format!("{path}{k}"));
                }
            }
        }
    };
    check(value, TOP_KEYS, "");
    if let Some(Value::Array(vs)) = value.get("voters") {
        for (i, v) in vs.iter().enumerate() {
            check(v, VOTER_KEYS, &format!("voters[{i}]."));
        }
    }
    if let Some(c) = value.get("control") {
        check(c, CONTROL_KEYS, "control.");
    }
    if let Some(p) = value.get("params") {
        check(p, PARAM_KEYS, "params.");
    }
    out
}

fn json_error(err: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {}", err.line(), err.column(), err))
}

impl InstanceFile {
    /// Parses an instance. Unknown keys are an error unless `allow_unknown`,
    /// in which case they are returned as warnings.
    pub fn parse(text: &str, allow_unknown: bool) -> Result<(InstanceFile, Vec<String>)> {
        let value: Value = serde_json::from_str(text).map_err(json_error)?;
        let unknown = unknown_keys(&value);
        if !unknown.is_empty() && !allow_unknown {
            return Err(Error::Parse(format!("unknown keys: {}", unknown.join(", "))));
        }
        let file: InstanceFile = serde_json::from_str(text).map_err(json_error)?;
        let warnings = unknown.into_iter().map(|k| format!("ignoring unknown key `{k}`")).collect();
        Ok((file, warnings))
    }

    pub fn from_election(e: &Election) -> Self {
        InstanceFile {
            voters: e.voters().to_vec(),
            edges: e.edges().map(|(i, j)| (e.id(i).to_string(), e.id(j).to_string())).collect(),
            control: None,
            params: None,
        }
    }

    pub fn from_control(ci: &ControlInstance) -> Self {
        let e = &ci.election;
        let mut f = InstanceFile::from_election(e);
        let name = |i: usize| e.id(i).to_string();
        f.control = Some(ControlBlock {
            designated: name(ci.designated),
            k: ci.k,
            action: ci.action,
            mode: ci.mode,
            unregistered: ci.unregistered.iter().map(|&i| name(i)).collect(),
            candidate_edges: ci
                .candidate_edges
                .as_ref()
                .map(|l| l.iter().map(|&(i, j)| (name(i), name(j))).collect()),
        });
        f
    }

    /// Instance for a gadget. Control gadgets carry a control block with the
    /// matching action; the others carry their parameters.
    pub fn from_gadget(cert: &GadgetCertificate) -> Self {
        let e = &cert.election;
        let p = &cert.params;
        let mut f = InstanceFile::from_election(e);
        if let (Some(x), Some(k)) = (p.designated, p.k) {
            let action = if p.unregistered.is_empty() {
                ControlAction::DeleteVoters
            } else {
                ControlAction::AddVoters
            };
            f.control = Some(ControlBlock {
                designated: e.id(x).to_string(),
                k,
                action,
                mode: ControlMode::Constructive,
                unregistered: p.unregistered.iter().map(|&i| e.id(i).to_string()).collect(),
                candidate_edges: None,
            });
        } else {
            f.params = Some(ParamsBlock {
                beta: p.beta,
                ell: p.ell,
                alpha: p.alpha,
            });
        }
        f
    }

    pub fn to_election(&self) -> Result<Election> {
        let names = Election::new(self.voters.clone(), [])?;
        let lookup = |id: &str| {
            names
                .index_of(id)
                .ok_or_else(|| Error::InvalidElection(format!("edge endpoint {id:?} is not a voter")))
        };
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<_>>()?;
        Election::new(self.voters.clone(), edges)
    }

    /// The control problem described by the `control` block, if any.
    pub fn control_instance(&self) -> Result<Option<ControlInstance>> {
        let Some(c) = &self.control else {
            return Ok(None);
        };
        let e = self.to_election()?;
        let idx = |id: &str| {
            e.index_of(id)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown voter {id:?} in control block")))
        };
        let designated = idx(&c.designated)?;
        let unregistered: BTreeSet<usize> = c.unregistered.iter().map(|u| idx(u)).collect::<Result<_>>()?;
        let candidate_edges = match &c.candidate_edges {
            Some(list) => Some(list.iter().map(|(a, b)| Ok((idx(a)?, idx(b)?))).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(Some(ControlInstance {
            election: e,
            unregistered,
            designated,
            k: c.k,
            action: c.action,
            mode: c.mode,
            candidate_edges,
        }))
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }
}

/// Sidecar document written next to a gadget instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetMetadata {
    pub source: String,
    pub expected_voters: usize,
    pub expected_edges: usize,
    pub counts_match: bool,
    pub params: crate::reductions::GadgetParams,
}

impl GadgetMetadata {
    pub fn new(cert: &GadgetCertificate) -> Self {
        GadgetMetadata {
            source: cert.source.clone(),
            expected_voters: cert.expected_voters,
            expected_edges: cert.expected_edges,
            counts_match: cert.counts_match(),
            params: cert.params.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }
}

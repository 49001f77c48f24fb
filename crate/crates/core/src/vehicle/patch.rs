use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ConfigError, ThrusterSpec, VehicleConfig};

/// Replace the value at an existing dotted path, e.g. `body.ballast.0.position`
/// or `thrusters.heave.max_thrust_fwd` (array elements can be addressed by
/// index or by their `id`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetOp {
    pub path: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrusterInsert {
    #[serde(flatten)]
    pub spec: ThrusterSpec,
    /// Insert position; appended when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

/// Partial update of a [`VehicleConfig`].
///
/// Applied in order: thruster removals, thruster insertions, then value sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigPatch {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remove_thrusters: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub add_thrusters: Vec<ThrusterInsert>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub set: Vec<SetOp>,
}

impl ConfigPatch {
    pub fn is_empty(&self) -> bool {
        self.remove_thrusters.is_empty() && self.add_thrusters.is_empty() && self.set.is_empty()
    }

    pub fn remove_thruster(id: &str) -> Self {
        ConfigPatch { remove_thrusters: vec![id.to_string()], ..Default::default() }
    }

    pub fn set(path: &str, value: Value) -> Self {
        ConfigPatch { set: vec![SetOp { path: path.to_string(), value }], ..Default::default() }
    }

    /// Patch that undoes `self` when applied to `apply_patch(base, self)`.
    pub fn inverse(&self, base: &VehicleConfig) -> Result<ConfigPatch, ConfigError> {
        let doc = serde_json::to_value(base)?;
        let mut restore = Vec::new();
        for op in &self.set {
            // Paths into thrusters added by this patch have nothing to restore.
            if let Ok(old) = lookup(&doc, &op.path) {
                restore.push(SetOp { path: op.path.clone(), value: old.clone() });
            }
        }
        let mut reinsert = Vec::new();
        for id in &self.remove_thrusters {
            let index = base
                .thruster_index(id)
                .ok_or_else(|| ConfigError::UnknownThruster(id.clone()))?;
            reinsert.push(ThrusterInsert { spec: base.thrusters[index].clone(), index: Some(index) });
        }
        reinsert.sort_by_key(|t| t.index);
        Ok(ConfigPatch {
            remove_thrusters: self.add_thrusters.iter().map(|t| t.spec.id.clone()).collect(),
            add_thrusters: reinsert,
            set: restore,
        })
    }
}

/// Returns a new validated config with `patch` applied; `config` is untouched.
pub fn apply_patch(config: &VehicleConfig, patch: &ConfigPatch) -> Result<VehicleConfig, ConfigError> {
    if patch.is_empty() {
        return Ok(config.clone());
    }
    let mut next = config.clone();
    for id in &patch.remove_thrusters {
        let index = next
            .thruster_index(id)
            .ok_or_else(|| ConfigError::UnknownThruster(id.clone()))?;
        next.thrusters.remove(index);
    }
    for insert in &patch.add_thrusters {
        let at = insert.index.unwrap_or(next.thrusters.len());
        if at > next.thrusters.len() {
            return Err(ConfigError::invalid(
                format!("add_thrusters[{}].index", insert.spec.id),
                "beyond end of thruster list",
            ));
        }
        next.thrusters.insert(at, insert.spec.clone());
    }
    if !patch.set.is_empty() {
        let mut doc = serde_json::to_value(&next)?;
        for op in &patch.set {
            *lookup_mut(&mut doc, &op.path)? = op.value.clone();
        }
        next = serde_json::from_value(doc)?;
    }
    next.validated()
}

/// Applies dotted-path value sets to any serializable document, e.g. an
/// environment. The result is not validated.
pub fn apply_sets<T: Serialize + DeserializeOwned>(value: &T, ops: &[SetOp]) -> Result<T, ConfigError> {
    let mut doc = serde_json::to_value(value)?;
    for op in ops {
        *lookup_mut(&mut doc, &op.path)? = op.value.clone();
    }
    Ok(serde_json::from_value(doc)?)
}

fn select<'a>(items: &'a [Value], seg: &str) -> Option<usize> {
    if let Ok(i) = seg.parse::<usize>() {
        return (i < items.len()).then_some(i);
    }
    items.iter().position(|v| v.get("id").and_then(Value::as_str) == Some(seg))
}

fn lookup<'a>(doc: &'a Value, path: &str) -> Result<&'a Value, ConfigError> {
    let mut cur = doc;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get(seg),
            Value::Array(items) => select(items, seg).map(|i| &items[i]),
            _ => None,
        }
        .ok_or_else(|| ConfigError::UnknownPath(path.to_string()))?;
    }
    Ok(cur)
}

fn lookup_mut<'a>(doc: &'a mut Value, path: &str) -> Result<&'a mut Value, ConfigError> {
    if path.is_empty() {
        return Err(ConfigError::UnknownPath(path.to_string()));
    }
    let mut cur = doc;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => match select(items, seg) {
                Some(i) => items.get_mut(i),
                None => None,
            },
            _ => None,
        }
        .ok_or_else(|| ConfigError::UnknownPath(path.to_string()))?;
    }
    Ok(cur)
}

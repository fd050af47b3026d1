//! JSON model and query files.
//!
//! Numeric operands are written unscaled (`36.5`, or `"36.5"` to keep the
//! exact decimal) and scaled here by the model's `scale_factors`.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::{scale_vital, FieldValue, PatientState, Predicate, StateDescriptor, Symbol, Transition, WeightedNfaModel};
use crate::error::{Error, Result};

pub const EPSILON_TOKEN: &str = "EPSILON";

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Validation(format!("missing field {key:?}")))
}

fn as_obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::Validation(format!("{what} must be an object")))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::Validation(format!("{what} must be a string")))
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::Validation(format!("{what} must be a nonnegative integer")))
}

fn decimal(v: &Value, what: &str) -> Result<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => bad(format!("{what} must be a number or decimal string")),
    }
}

fn scaled(v: &Value, field: &str, scales: &BTreeMap<String, u32>) -> Result<u64> {
    let factor = scales.get(field).copied().unwrap_or(1);
    scale_vital(&decimal(v, field)?, factor)
}

fn pair<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<[&'a Value; 2]> {
    match get(obj, key)?.as_array().map(Vec::as_slice) {
        Some([a, b]) => Ok([a, b]),
        _ => bad(format!("{key:?} must be a two-element array")),
    }
}

fn predicate(v: &Value, scales: &BTreeMap<String, u32>) -> Result<Predicate> {
    let o = as_obj(v, "predicate")?;
    let kind = as_str(get(o, "kind")?, "kind")?;
    let field = || -> Result<String> { Ok(as_str(get(o, "field")?, "field")?.to_string()) };
    Ok(match kind {
        "range" => {
            let f = field()?;
            Predicate::Range { lo: scaled(get(o, "lo")?, &f, scales)?, hi: scaled(get(o, "hi")?, &f, scales)?, field: f }
        }
        "range_pair" => {
            let [a, b] = pair(o, "fields")?;
            let fields = [as_str(a, "fields")?.to_string(), as_str(b, "fields")?.to_string()];
            let [lo0, lo1] = pair(o, "lo")?;
            let [hi0, hi1] = pair(o, "hi")?;
            Predicate::RangePair {
                lo: [scaled(lo0, &fields[0], scales)?, scaled(lo1, &fields[1], scales)?],
                hi: [scaled(hi0, &fields[0], scales)?, scaled(hi1, &fields[1], scales)?],
                fields,
            }
        }
        "gt" | "lt" => {
            let f = field()?;
            let threshold = scaled(get(o, "threshold")?, &f, scales)?;
            if kind == "gt" {
                Predicate::Gt { field: f, threshold }
            } else {
                Predicate::Lt { field: f, threshold }
            }
        }
        "keyword_eq" => Predicate::KeywordEq { field: field()?, keyword: as_str(get(o, "keyword")?, "keyword")?.to_string() },
        other => return bad(format!("unknown predicate kind {other:?}")),
    })
}

/// A parsed model plus the optional human-readable state labels.
#[derive(Clone, Debug)]
pub struct ModelFile {
    pub model: WeightedNfaModel,
    pub labels: Vec<String>,
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Validation(format!("model JSON: {e}")))?;
    let root = as_obj(&root, "model")?;

    let mut scale_factors = BTreeMap::new();
    if let Some(s) = root.get("scale_factors") {
        for (k, v) in as_obj(s, "scale_factors")? {
            let f = as_u64(v, "scale factor")?;
            if ![1, 10, 100].contains(&f) {
                return bad(format!("scale factor for {k:?} must be 1, 10 or 100"));
            }
            scale_factors.insert(k.clone(), f as u32);
        }
    }

    let states = get(root, "states")?.as_array().ok_or_else(|| Error::Validation("states must be an array".into()))?;
    let n_states = states.len();
    let mut descriptors: Vec<Option<StateDescriptor>> = vec![None; n_states];
    let mut labels = vec![String::new(); n_states];
    for s in states {
        let o = as_obj(s, "state")?;
        let id = as_u64(get(o, "id")?, "state id")? as usize;
        if id >= n_states || descriptors[id].is_some() {
            return bad(format!("state ids must be 0..{n_states} without repeats (got {id})"));
        }
        let preds = match o.get("descriptor") {
            None => Vec::new(),
            Some(d) => d
                .as_array()
                .ok_or_else(|| Error::Validation("descriptor must be an array".into()))?
                .iter()
                .map(|p| predicate(p, &scale_factors))
                .collect::<Result<_>>()?,
        };
        descriptors[id] = Some(preds);
        labels[id] = match o.get("label") {
            Some(l) => as_str(l, "label")?.to_string(),
            None => format!("q{id}"),
        };
    }

    let accept: BTreeSet<usize> = get(root, "accept")?
        .as_array()
        .ok_or_else(|| Error::Validation("accept must be an array".into()))?
        .iter()
        .map(|v| as_u64(v, "accept state").map(|x| x as usize))
        .collect::<Result<_>>()?;
    let alphabet: Vec<String> = get(root, "alphabet")?
        .as_array()
        .ok_or_else(|| Error::Validation("alphabet must be an array".into()))?
        .iter()
        .map(|v| as_str(v, "alphabet entry").map(str::to_string))
        .collect::<Result<_>>()?;
    if alphabet.iter().any(|a| a == EPSILON_TOKEN) {
        return bad("EPSILON is implicit and may not appear in the alphabet");
    }
    let transitions = match root.get("transitions") {
        None => Vec::new(),
        Some(t) => t
            .as_array()
            .ok_or_else(|| Error::Validation("transitions must be an array".into()))?
            .iter()
            .map(|t| {
                let o = as_obj(t, "transition")?;
                let sym = as_str(get(o, "symbol")?, "symbol")?;
                Ok(Transition {
                    from: as_u64(get(o, "from")?, "from")? as usize,
                    to: as_u64(get(o, "to")?, "to")? as usize,
                    symbol: if sym == EPSILON_TOKEN { Symbol::Epsilon } else { Symbol::Keyword(sym.to_string()) },
                    weight: as_u64(get(o, "weight")?, "weight")?,
                })
            })
            .collect::<Result<_>>()?,
    };
    let model = WeightedNfaModel {
        n_states,
        accept,
        alphabet,
        transitions,
        descriptors: descriptors.into_iter().map(Option::unwrap_or_default).collect(),
        scale_factors,
    };
    model.validate()?;
    Ok(ModelFile { model, labels })
}

fn unscale(v: u64, factor: u32) -> Value {
    match factor {
        10 => Value::String(format!("{}.{}", v / 10, v % 10)),
        100 => Value::String(format!("{}.{:02}", v / 100, v % 100)),
        _ => json!(v),
    }
}

/// Inverse of [`parse_model`]; operands are written as exact decimal strings.
pub fn model_to_json(file: &ModelFile) -> Value {
    let m = &file.model;
    let sf = |f: &str| m.scale_factor(f);
    let pred = |p: &Predicate| match p {
        Predicate::Range { field, lo, hi } => {
            json!({"kind": "range", "field": field, "lo": unscale(*lo, sf(field)), "hi": unscale(*hi, sf(field))})
        }
        Predicate::RangePair { fields, lo, hi } => json!({
            "kind": "range_pair",
            "fields": fields,
            "lo": [unscale(lo[0], sf(&fields[0])), unscale(lo[1], sf(&fields[1]))],
            "hi": [unscale(hi[0], sf(&fields[0])), unscale(hi[1], sf(&fields[1]))],
        }),
        Predicate::Gt { field, threshold } => {
            json!({"kind": "gt", "field": field, "threshold": unscale(*threshold, sf(field))})
        }
        Predicate::Lt { field, threshold } => {
            json!({"kind": "lt", "field": field, "threshold": unscale(*threshold, sf(field))})
        }
        Predicate::KeywordEq { field, keyword } => json!({"kind": "keyword_eq", "field": field, "keyword": keyword}),
    };
    let states: Vec<Value> = (0..m.n_states)
        .map(|i| {
            json!({
                "id": i,
                "label": file.labels.get(i).cloned().unwrap_or_else(|| format!("q{i}")),
                "descriptor": m.descriptors[i].iter().map(pred).collect::<Vec<_>>(),
            })
        })
        .collect();
    let transitions: Vec<Value> = m
        .transitions
        .iter()
        .map(|t| {
            let symbol = match &t.symbol {
                Symbol::Epsilon => EPSILON_TOKEN.to_string(),
                Symbol::Keyword(k) => k.clone(),
            };
            json!({"from": t.from, "to": t.to, "symbol": symbol, "weight": t.weight})
        })
        .collect();
    json!({
        "states": states,
        "accept": m.accept,
        "alphabet": m.alphabet,
        "transitions": transitions,
        "scale_factors": m.scale_factors,
    })
}

/// Query file: `{"states": [{field: value, ...}, ...]}`. Fields of keyword
/// predicates take strings; all others take decimals scaled like the model.
pub fn parse_query(text: &str, model: &WeightedNfaModel) -> Result<Vec<PatientState>> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Validation(format!("query JSON: {e}")))?;
    let states = get(as_obj(&root, "query")?, "states")?
        .as_array()
        .ok_or_else(|| Error::Validation("states must be an array".into()))?;
    let schema = model.schema();
    states
        .iter()
        .map(|s| {
            let mut out = PatientState::default();
            for (field, v) in as_obj(s, "patient state")? {
                let value = match schema.get(field) {
                    Some(true) => FieldValue::Keyword(as_str(v, field)?.to_string()),
                    Some(false) => FieldValue::Number(scaled(v, field, &model.scale_factors)?),
                    None => return bad(format!("field {field:?} is not used by the model")),
                };
                out.values.insert(field.clone(), value);
            }
            Ok(out)
        })
        .collect()
}

//! JSON input files for the `chern`, `euler` and `reduce` verbs.
//!
//! A model is either a chart (`4`, `{"chart": 4}`), a torus (`{"torus": 4}`)
//! or a presented CDGA:
//! `{"generators": [{"name": "a", "degree": 2}, ...], "differential": {"b": "a^2"}, "max_degree": 4}`.
//! Form entries are expression strings in the grammar of [`crate::expr`].

use crate::expr::{parse_form, ExprContext};
use serde_json::Value;
use std::sync::Arc;
use supercocycle_core::chern::SuperConnection;
use supercocycle_core::cocycles::{make_k_element, KElement};
use supercocycle_core::euler::CurvatureSpec;
use supercocycle_core::forms::{Form, FormMatrix, ManifoldModel, ModelGen};
use supercocycle_core::grassmann::GrassmannRing;
use supercocycle_core::scalars::ScalarRing;
use supercocycle_core::{Error, Result};

fn invalid(msg: impl Into<String>) -> Error {
    Error::ValidationError(msg.into())
}

/// Parse JSON text, reporting syntax errors as a byte offset.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        let line_start: usize = text.split_inclusive('\n').take(e.line().saturating_sub(1)).map(str::len).sum();
        Error::ParseError { pos: line_start + e.column().saturating_sub(1), expected: vec!["valid JSON".into()] }
    })
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| invalid(format!("missing field \"{key}\"")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64().map(|n| n as usize).ok_or_else(|| invalid(format!("{what} must be a non-negative integer")))
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| invalid(format!("{what} must be a string")))
}

pub fn parse_model(v: &Value) -> Result<Arc<ManifoldModel>> {
    if let Some(n) = v.as_u64() {
        return Ok(ManifoldModel::chart(n as usize));
    }
    if let Some(n) = v.get("chart") {
        return Ok(ManifoldModel::chart(as_usize(n, "chart")?));
    }
    if let Some(n) = v.get("torus") {
        return Ok(ManifoldModel::torus(as_usize(n, "torus")?));
    }
    let gens_v = field(v, "generators")?.as_array().ok_or_else(|| invalid("generators must be an array"))?;
    let mut gens = Vec::new();
    for g in gens_v {
        let name = as_str(field(g, "name")?, "generator name")?.to_string();
        let degree = as_usize(field(g, "degree")?, "generator degree")? as u32;
        gens.push(ModelGen { name, degree });
    }
    let max_degree = as_usize(field(v, "max_degree")?, "max_degree")? as u32;
    // Differentials are read in the free algebra first, then checked by the model.
    let free = ManifoldModel::cdga(gens.clone(), vec![vec![]; gens.len()], max_degree)?;
    let ctx = ExprContext::new(&free);
    let mut diff = vec![vec![]; gens.len()];
    if let Some(d) = v.get("differential") {
        let d = d.as_object().ok_or_else(|| invalid("differential must be an object"))?;
        for (name, expr) in d {
            let i = free.index(name).ok_or_else(|| invalid(format!("differential of unknown generator {name}")))?;
            let f = parse_form(as_str(expr, "differential")?, &ctx)?;
            for ((mask, mono), c) in &f.terms {
                let k = c.as_constant().filter(|_| *mask == 0).ok_or_else(|| invalid(format!("d({name}) needs constant coefficients")))?;
                diff[i].push((k, mono.clone()));
            }
        }
    }
    ManifoldModel::cdga(gens, diff, max_degree)
}

fn form_matrix(v: &Value, ctx: &ExprContext, what: &str) -> Result<Vec<Vec<Form>>> {
    let rows = v.as_array().ok_or_else(|| invalid(format!("{what} must be an array of rows")))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| invalid(format!("{what} rows must be arrays")))?
                .iter()
                .map(|e| parse_form(as_str(e, what)?, ctx))
                .collect()
        })
        .collect()
}

/// `{"model": ..., "grading": [p, q], "components": [{"j": 1, "matrix": [[...]]}]}`.
pub fn parse_chern_spec(text: &str) -> Result<SuperConnection> {
    let v = parse_json(text)?;
    let model = parse_model(field(&v, "model")?)?;
    let grading = field(&v, "grading")?.as_array().filter(|a| a.len() == 2).ok_or_else(|| invalid("grading must be [p, q]"))?;
    let (p, q) = (as_usize(&grading[0], "p")?, as_usize(&grading[1], "q")?);
    let ctx = ExprContext::new(&model);
    let mut comps = Vec::new();
    for c in field(&v, "components")?.as_array().ok_or_else(|| invalid("components must be an array"))? {
        let j = as_usize(field(c, "j")?, "j")? as u32;
        let rows = form_matrix(field(c, "matrix")?, &ctx, "matrix")?;
        comps.push((j, FormMatrix::new(p, q, rows)?));
    }
    SuperConnection::new(&model, p, q, comps)
}

/// A parsed curvature file: F and the optional string structure H.
#[derive(Clone, Debug)]
pub struct EulerInput {
    pub curvature: CurvatureSpec,
    pub h: Option<Form>,
}

/// `{"model": ..., "rank": r, "F": [[...]], "H": "..."}`.
pub fn parse_euler_spec(text: &str) -> Result<EulerInput> {
    let v = parse_json(text)?;
    let model = parse_model(field(&v, "model")?)?;
    let rank = as_usize(field(&v, "rank")?, "rank")?;
    let ctx = ExprContext::new(&model);
    let rows = form_matrix(field(&v, "F")?, &ctx, "F")?;
    if rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
        return Err(Error::NotSquare);
    }
    let curvature = CurvatureSpec::new(FormMatrix::from_rows(rows)?)?;
    let h = match v.get("H") {
        Some(h) => Some(parse_form(as_str(h, "H")?, &ctx)?.with_ring(ScalarRing::Moduli)?),
        None => None,
    };
    Ok(EulerInput { curvature, h })
}

/// `{"model": ..., "Z": "...", "L": "..."}`: a K-element over the circle moduli.
pub fn parse_cocycle_spec(text: &str) -> Result<KElement> {
    let v = parse_json(text)?;
    if let Some(c) = v.get("complex") {
        if as_str(c, "complex")? != "K" {
            return Err(invalid("only K-cocycles can be reduced"));
        }
    }
    let model = parse_model(field(&v, "model")?)?;
    let ctx = ExprContext::new(&model).with_ring(&GrassmannRing::new(ScalarRing::Circle, &[]));
    let read = |key: &str| -> Result<Form> {
        match v.get(key) {
            Some(e) => parse_form(as_str(e, key)?, &ctx)?.with_ring(ScalarRing::Circle),
            None => Ok(Form::zero(&model, &ctx.gr)),
        }
    };
    make_k_element(&read("Z")?, &read("L")?)
}

//! JSON serialization of inputs and reports. All documents carry a
//! `"schema": "germkit/1"` tag; complex numbers are `[re, im]` pairs and
//! matrices are row-major nested arrays.

use ndarray::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{GermError, Result};
use crate::germ::{GermField, GermReport, GermSample};
use crate::linalg::{c, C64};
use crate::models::CyclicModelSpec;
use crate::monodromy::{MonodromyResult, PeriodLattice};
use crate::pli::{PLIResult, PliVerification};
use crate::spectral::StabilityReport;
use crate::symcore::Subspace;

pub const SCHEMA: &str = "germkit/1";

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn cvec_to_json(v: &ArrayView1<C64>) -> Value {
    Value::Array(v.iter().map(|&z| complex_to_json(z)).collect())
}

pub fn cmatrix_to_json(m: &Array2<C64>) -> Value {
    Value::Array(m.rows().into_iter().map(|r| cvec_to_json(&r)).collect())
}

pub fn rvec_to_json(v: &ArrayView1<f64>) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

pub fn rmatrix_to_json(m: &Array2<f64>) -> Value {
    Value::Array(m.rows().into_iter().map(|r| rvec_to_json(&r)).collect())
}

fn bad(path: &str, what: &str) -> GermError {
    GermError::InputError(format!("{path}: {what}"))
}

/// Accept a scalar entry as either a plain number (real) or an `[re, im]` pair.
pub fn complex_from_json(v: &Value, path: &str) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(c(x.as_f64().ok_or_else(|| bad(path, "not a float"))?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| bad(path, "real part is not a number"))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| bad(path, "imaginary part is not a number"))?;
            Ok(c(re, im))
        }
        _ => Err(bad(path, "expected a number or an [re, im] pair")),
    }
}

pub fn cmatrix_from_json(v: &Value, path: &str) -> Result<Array2<C64>> {
    let rows = v
        .as_array()
        .ok_or_else(|| bad(path, "expected an array of rows"))?;
    let nrows = rows.len();
    if nrows == 0 {
        return Err(bad(path, "matrix has no rows"));
    }
    let ncols = rows[0]
        .as_array()
        .ok_or_else(|| bad(&format!("{path}[0]"), "expected a row array"))?
        .len();
    let mut out = Array2::<C64>::zeros((nrows, ncols));
    for (i, row) in rows.iter().enumerate() {
        let entries = row
            .as_array()
            .ok_or_else(|| bad(&format!("{path}[{i}]"), "expected a row array"))?;
        if entries.len() != ncols {
            return Err(bad(
                &format!("{path}[{i}]"),
                &format!("row length {} differs from {}", entries.len(), ncols),
            ));
        }
        for (j, e) in entries.iter().enumerate() {
            out[(i, j)] = complex_from_json(e, &format!("{path}[{i}][{j}]"))?;
        }
    }
    Ok(out)
}

pub fn rvec_from_json(v: &Value, path: &str) -> Result<Array1<f64>> {
    let entries = v
        .as_array()
        .ok_or_else(|| bad(path, "expected an array of numbers"))?;
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.as_f64()
                .ok_or_else(|| bad(&format!("{path}[{i}]"), "not a number"))
        })
        .collect::<Result<Vec<f64>>>()
        .map(Array1::from)
}

/// Verify and strip an optional schema tag on an input document.
pub fn check_schema_tag(v: &mut Value) -> Result<()> {
    if let Some(obj) = v.as_object_mut() {
        if let Some(tag) = obj.remove("schema") {
            if tag.as_str() != Some(SCHEMA) {
                return Err(GermError::InputError(format!(
                    "schema: unsupported tag {tag}; this tool reads \"{SCHEMA}\""
                )));
            }
        }
    }
    Ok(())
}

/// Parse a model spec document, reporting the offending field path on error.
pub fn model_spec_from_json(mut v: Value) -> Result<CyclicModelSpec> {
    check_schema_tag(&mut v)?;
    serde_path_to_error::deserialize(v).map_err(|e| {
        GermError::InputError(format!("{}: {}", e.path(), e.inner()))
    })
}

/// Parse a matrix-list document: either `{"matrices": [...]}` or a bare array.
pub fn matrices_from_json(mut v: Value) -> Result<Vec<Array2<C64>>> {
    check_schema_tag(&mut v)?;
    let list = match &v {
        Value::Object(obj) => obj
            .get("matrices")
            .ok_or_else(|| bad("matrices", "missing field"))?,
        Value::Array(_) => &v,
        _ => return Err(bad("$", "expected an object with \"matrices\" or an array")),
    };
    let arr = list
        .as_array()
        .ok_or_else(|| bad("matrices", "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, m)| cmatrix_from_json(m, &format!("matrices[{i}]")))
        .collect()
}

fn subspace_to_json(s: &Subspace) -> Value {
    cmatrix_to_json(s.basis())
}

pub fn stability_report_to_json(r: &StabilityReport) -> Value {
    json!({
        "class": r.class,
        "reasons": r.reasons,
        "clusters": r.clusters.iter().map(|cl| json!({
            "value": complex_to_json(cl.value),
            "algebraic_multiplicity": cl.algebraic_multiplicity,
            "geometric_multiplicity": cl.geometric_multiplicity,
            "on_unit_circle": cl.on_unit_circle,
            "krein_signature": [cl.krein_signature.0, cl.krein_signature.1, cl.krein_signature.2],
            "conditioning_warning": cl.conditioning_warning,
        })).collect::<Vec<_>>(),
    })
}

pub fn classify_output(reports: &[StabilityReport]) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "stability_reports",
        "reports": reports.iter().map(stability_report_to_json).collect::<Vec<_>>(),
    })
}

pub fn pli_output(result: &PLIResult, verification: &PliVerification) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "pli",
        "basis": subspace_to_json(&result.subspace),
        "per_cluster_choice": result.per_cluster_choice,
        "unique": result.unique,
        "certificate": result.certificate,
        "verification": {
            "isotropy_residual": verification.isotropy_residual,
            "min_krein_eigenvalue": verification.min_krein_eigenvalue,
            "invariance_residuals": verification.invariance_residuals,
            "pass": verification.pass,
        },
    })
}

pub fn lattice_to_json(l: &PeriodLattice) -> Value {
    json!({
        "generators": l.generators.iter().map(|g| rvec_to_json(&g.view())).collect::<Vec<_>>(),
        "return_residuals": l.return_residuals,
    })
}

pub fn analysis_output(
    lattice: &PeriodLattice,
    monodromy: &MonodromyResult,
    reports: &[StabilityReport],
    decision: &Value,
) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "analysis",
        "lattice": lattice_to_json(lattice),
        "monodromy": {
            "matrices": monodromy.monodromies.iter().map(cmatrix_to_json).collect::<Vec<_>>(),
            "symplectic_residuals": monodromy.symplectic_residuals,
            "commutation_residuals": rmatrix_to_json(&monodromy.commutation_residuals),
        },
        "reduced": monodromy.reduced.iter().map(cmatrix_to_json).collect::<Vec<_>>(),
        "stability": reports.iter().map(stability_report_to_json).collect::<Vec<_>>(),
        "decision": decision,
    })
}

pub fn field_to_json(spec: &CyclicModelSpec, field: &GermField) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "germ_field",
        "model": serde_json::to_value(spec).expect("model spec serializes"),
        "grid": field.grid,
        "base_frame": subspace_to_json(&field.base_subspace),
        "reduced_frame": subspace_to_json(&field.reduced_subspace),
        "notes": field.construction_notes,
        "samples": field.samples.iter().map(|s| json!({
            "angles": s.angles,
            "point": rvec_to_json(&s.point.view()),
            "frame": cmatrix_to_json(&s.frame),
        })).collect::<Vec<_>>(),
    })
}

pub fn field_from_json(mut v: Value) -> Result<(CyclicModelSpec, GermField)> {
    check_schema_tag(&mut v)?;
    let obj: &Map<String, Value> = v
        .as_object()
        .ok_or_else(|| bad("$", "expected a germ field object"))?;
    if obj.get("kind").and_then(Value::as_str) != Some("germ_field") {
        return Err(bad("kind", "expected \"germ_field\""));
    }
    let spec: CyclicModelSpec = {
        let m = obj
            .get("model")
            .ok_or_else(|| bad("model", "missing field"))?;
        serde_path_to_error::deserialize(m.clone())
            .map_err(|e| GermError::InputError(format!("model.{}: {}", e.path(), e.inner())))?
    };
    let grid: Vec<usize> = obj
        .get("grid")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("grid", "missing or not an array"))?
        .iter()
        .enumerate()
        .map(|(i, e)| {
            e.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| bad(&format!("grid[{i}]"), "not a count"))
        })
        .collect::<Result<_>>()?;
    let base_frame = cmatrix_from_json(
        obj.get("base_frame")
            .ok_or_else(|| bad("base_frame", "missing field"))?,
        "base_frame",
    )?;
    let reduced_frame = cmatrix_from_json(
        obj.get("reduced_frame")
            .ok_or_else(|| bad("reduced_frame", "missing field"))?,
        "reduced_frame",
    )?;
    let notes = obj
        .get("notes")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(Value::as_str)
                .map(String::from)
                .collect()
        })
        .unwrap_or_default();
    let samples_json = obj
        .get("samples")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("samples", "missing or not an array"))?;
    let mut samples = Vec::with_capacity(samples_json.len());
    for (i, s) in samples_json.iter().enumerate() {
        let path = format!("samples[{i}]");
        let so = s
            .as_object()
            .ok_or_else(|| bad(&path, "expected an object"))?;
        let angles = so
            .get("angles")
            .map(|a| rvec_from_json(a, &format!("{path}.angles")))
            .transpose()?
            .ok_or_else(|| bad(&format!("{path}.angles"), "missing field"))?
            .to_vec();
        let point = rvec_from_json(
            so.get("point")
                .ok_or_else(|| bad(&format!("{path}.point"), "missing field"))?,
            &format!("{path}.point"),
        )?;
        let frame = cmatrix_from_json(
            so.get("frame")
                .ok_or_else(|| bad(&format!("{path}.frame"), "missing field"))?,
            &format!("{path}.frame"),
        )?;
        samples.push(GermSample {
            angles,
            point,
            frame,
        });
    }
    let field = GermField {
        grid,
        samples,
        base_subspace: Subspace::new(base_frame)?,
        reduced_subspace: Subspace::new(reduced_frame)?,
        construction_notes: notes,
    };
    Ok((spec, field))
}

pub fn report_output(report: &GermReport) -> Value {
    let mut v = serde_json::to_value(report).expect("germ report serializes");
    let obj = v.as_object_mut().expect("object");
    obj.insert("schema".into(), json!(SCHEMA));
    obj.insert("kind".into(), json!("germ_report"));
    v
}

/// Per-sample residual rows for plotting.
pub fn report_csv(report: &GermReport) -> String {
    let mut out = String::from("sample,lagrangian,min_krein\n");
    for (i, r) in report.per_sample.iter().enumerate() {
        out.push_str(&format!("{},{:.17e},{:.17e}\n", i, r.lagrangian, r.min_krein));
    }
    out
}

//! CSV and JSON rendering. Floats use the shortest representation that
//! parses back to the same value, so identical inputs give identical bytes.

use serde_json::{json, Map, Value};

use crate::analysis::{SweepResult, TimeSeries, TransientMinimum};
use crate::observables::Temperature;
use crate::spectral::{Spectrum, SpectrumClassification};

use super::config::fmt_float;

/// Column order of time-series CSV files.
pub const TIMESERIES_HEADER: &str = "t,D,T_c,T_r,T_h,W_R_CH,W_genuine,p1,p2,p3,p4,p5,p6,p7,p8,im_rho36";

/// Column order of sweep CSV files; `{param}` is replaced by the swept key.
pub const SWEEP_HEADER: &str = "series,{param},steady_T_c,min_T_c,t_min,decay_rate,damping_rate,oscillation_frequency,complex_pairs,W_max_R_CH,W_max_genuine,solver,error";

pub const SPECTRUM_HEADER: &str = "index,re,im,coefficient_re,coefficient_im";

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Quotes a free-text field when it would break the row.
fn text_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn timeseries_csv(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(256 * (series.times.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for (t, r) in series.times.iter().zip(&series.records) {
        let mut cells = vec![
            fmt_float(*t),
            fmt_float(r.distance),
            fmt_float(r.t_c.value),
            fmt_float(r.t_r.value),
            fmt_float(r.t_h.value),
            fmt_float(r.w_r_ch),
            fmt_float(r.w_genuine),
        ];
        cells.extend(r.populations.iter().map(|p| fmt_float(*p)));
        cells.push(fmt_float(r.im_rho36));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One block of rows per series, each sorted by the swept value.
pub fn sweep_csv(series: &[(String, SweepResult)]) -> String {
    let param = series.first().map(|(_, r)| r.parameter.name()).unwrap_or("value");
    let mut out = SWEEP_HEADER.replace("{param}", param);
    out.push('\n');
    for (label, result) in series {
        for row in &result.rows {
            let cells = match &row.outcome {
                Ok(s) => {
                    let c = &s.classification;
                    vec![
                        text_field(label),
                        fmt_float(row.value),
                        fmt_float(s.steady_t_c.value),
                        fmt_float(s.min_t_c.temperature.value),
                        fmt_float(s.min_t_c.time),
                        fmt_float(c.decay_rate),
                        opt(c.damping_rate),
                        opt(c.oscillation_angular_frequency),
                        c.complex_pairs.to_string(),
                        fmt_float(s.w_max_bipartite),
                        fmt_float(s.w_max_genuine),
                        s.solver.to_string(),
                        String::new(),
                    ]
                }
                Err(e) => {
                    let mut cells = vec![text_field(label), fmt_float(row.value)];
                    cells.extend(vec![String::new(); 10]);
                    cells.push(text_field(&e.to_string()));
                    cells
                }
            };
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for (j, (l, c)) in spectrum.eigen.values.iter().zip(&spectrum.coefficients).enumerate() {
        out.push_str(&format!(
            "{j},{},{},{},{}\n",
            fmt_float(l.re),
            fmt_float(l.im),
            fmt_float(c.re),
            fmt_float(c.im)
        ));
    }
    out
}

pub fn temperature_json(t: &Temperature) -> Value {
    json!({ "value": t.value, "regime": t.regime })
}

pub fn minimum_json(m: &TransientMinimum) -> Value {
    json!({
        "t": m.time,
        "T_c": temperature_json(&m.temperature),
        "ground_population": m.ground_population,
    })
}

fn complex_json(z: nalgebra::Complex<f64>) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn classification_json(eigenvalues: &[nalgebra::Complex<f64>], c: &SpectrumClassification) -> Value {
    json!({
        "eigenvalues": eigenvalues.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "lambda_max": complex_json(c.lambda_max),
        "lambda_cp": c.lambda_cp.map(complex_json),
        "decay_rate": c.decay_rate,
        "damping_rate": c.damping_rate,
        "oscillation_angular_frequency": c.oscillation_angular_frequency,
        "complex_pairs": c.complex_pairs,
    })
}

/// Pretty-printed with keys sorted, newline-terminated.
pub fn render_json(value: &Value) -> String {
    fn sorted(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                let mut out = Map::new();
                for k in keys {
                    out.insert(k.clone(), sorted(&m[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    let mut s = serde_json::to_string_pretty(&sorted(value)).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_has_sixteen_columns_and_no_trailing_comma() {
        let cols: Vec<&str> = TIMESERIES_HEADER.split(',').collect();
        assert_eq!(cols.len(), 16);
        assert!(cols.iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn floats_round_trip() {
        for x in [1e-5, 0.1 + 0.2, 2e6, -4.642818415179628e-5, 0.0] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn text_fields_are_quoted() {
        assert_eq!(text_field("p_C=2e-5,p_H=2e-5"), "\"p_C=2e-5,p_H=2e-5\"");
        assert_eq!(text_field("base"), "base");
    }

    #[test]
    fn json_keys_sorted() {
        let s = render_json(&json!({"b": 1, "a": {"d": 2, "c": 3}}));
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        let c = s.find("\"c\"").unwrap();
        let d = s.find("\"d\"").unwrap();
        assert!(a < b && c < d);
        assert!(s.ends_with('\n'));
    }
}

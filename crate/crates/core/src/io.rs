//! JSON instance files.
//!
//! ```text
//! {"kind":"topk","n":N,"k":K,"P":[[...],...]}        rows in rank order
//! {"kind":"domination","n":N,"p":[...],"q":[...]}
//! ```
//!
//! Numbers are written with 17 significant digits so every `f64` survives a
//! round trip unchanged. Loading re-checks every invariant and names the one
//! that failed.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{validate_sst, DominationInstance, ProbMatrix, SstVerdict, TopKInstance};

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    TopK(TopKInstance),
    Domination(DominationInstance),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    TopK,
    Domination,
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::TopK(_) => InstanceKind::TopK,
            Instance::Domination(_) => InstanceKind::Domination,
        }
    }
}

/// Formats like C's `%.17g`: shortest of fixed or exponent notation with 17
/// significant digits, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let digits = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", digits, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn write_vec(out: &mut String, v: &[f64]) {
    out.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_g17(*x));
    }
    out.push(']');
}

pub fn to_json(instance: &Instance) -> String {
    let mut out = String::new();
    match instance {
        Instance::TopK(t) => {
            out.push_str(&format!("{{\"kind\":\"topk\",\"n\":{},\"k\":{},\"P\":[", t.n(), t.k()));
            for u in 0..t.n() {
                if u > 0 {
                    out.push(',');
                }
                write_vec(&mut out, t.matrix().row(u));
            }
            out.push_str("]}");
        }
        Instance::Domination(d) => {
            out.push_str(&format!("{{\"kind\":\"domination\",\"n\":{},\"p\":", d.n()));
            write_vec(&mut out, d.p());
            out.push_str(",\"q\":");
            write_vec(&mut out, d.q());
            out.push('}');
        }
    }
    out.push('\n');
    out
}

fn load_err(msg: impl Into<String>) -> Error {
    Error::Load(msg.into())
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| load_err(format!("missing field '{name}'")))
}

fn as_usize(v: &Value, name: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| load_err(format!("'{name}' must be a non-negative integer")))
}

fn as_vec(v: &Value, name: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| load_err(format!("'{name}' must be an array")))?;
    arr.iter()
        .map(|x| x.as_f64().ok_or_else(|| load_err(format!("'{name}' must contain only numbers"))))
        .collect()
}

pub fn from_json(text: &str) -> Result<Instance> {
    let v: Value = serde_json::from_str(text).map_err(|e| load_err(format!("malformed JSON: {e}")))?;
    let kind = field(&v, "kind")?.as_str().ok_or_else(|| load_err("'kind' must be a string"))?;
    let n = as_usize(field(&v, "n")?, "n")?;
    match kind {
        "topk" => {
            let k = as_usize(field(&v, "k")?, "k")?;
            let rows_v = field(&v, "P")?.as_array().ok_or_else(|| load_err("'P' must be an array of rows"))?;
            let rows = rows_v.iter().map(|r| as_vec(r, "P")).collect::<Result<Vec<_>>>()?;
            if rows.len() != n {
                return Err(load_err(format!("'P' has {} rows but n = {n}", rows.len())));
            }
            match validate_sst(&rows).map_err(|e| load_err(e.to_string()))? {
                SstVerdict::Ok => {}
                SstVerdict::Violations(list) => {
                    return Err(load_err(list[0].to_string()));
                }
            }
            let m = ProbMatrix::from_rows(rows).map_err(|e| load_err(e.to_string()))?;
            Ok(Instance::TopK(TopKInstance::new(m, k).map_err(|e| load_err(e.to_string()))?))
        }
        "domination" => {
            let p = as_vec(field(&v, "p")?, "p")?;
            let q = as_vec(field(&v, "q")?, "q")?;
            if p.len() != n || q.len() != n {
                return Err(load_err(format!("p and q must have n = {n} entries")));
            }
            let d = DominationInstance::new(p, q).map_err(|e| match e {
                Error::Precondition(m) | Error::InputShape(m) => load_err(m),
                other => other,
            })?;
            Ok(Instance::Domination(d))
        }
        other => Err(load_err(format!("unknown kind '{other}'"))),
    }
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)?;
    from_json(&text)
}

pub fn read_domination(path: &Path) -> Result<DominationInstance> {
    match read_instance(path)? {
        Instance::Domination(d) => Ok(d),
        Instance::TopK(_) => Err(load_err("expected a domination instance, found topk")),
    }
}

pub fn read_topk(path: &Path) -> Result<TopKInstance> {
    match read_instance(path)? {
        Instance::TopK(t) => Ok(t),
        Instance::Domination(_) => Err(load_err("expected a topk instance, found domination")),
    }
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    fs::write(path, to_json(instance))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(0.0001), "0.0001");
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1e20), "1e+20");
    }

    #[test]
    fn topk_roundtrip() {
        let t = crate::model::sst_from_scores(&[1.0, 0.3, -0.2], crate::model::Link::Logistic).unwrap();
        let inst = Instance::TopK(TopKInstance::new(t, 1).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        write_instance(&inst, &path).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
    }

    #[test]
    fn load_errors_name_invariants() {
        let e = from_json(r#"{"kind":"domination","n":1,"p":[0.4],"q":[0.5]}"#).unwrap_err();
        assert!(matches!(&e, Error::Load(m) if m.contains("domination order violated")), "{e}");
        let e = from_json(r#"{"kind":"topk","n":2,"k":1,"P":[[0.5,0.7],[0.4,0.5]]}"#).unwrap_err();
        assert!(matches!(&e, Error::Load(m) if m.contains("skew-symmetry")), "{e}");
        assert!(matches!(from_json("{"), Err(Error::Load(_))));
        assert!(matches!(from_json(r#"{"kind":"x","n":1}"#), Err(Error::Load(_))));
        assert_eq!(e.exit_code(), 4);
    }

    proptest! {
        #[test]
        fn g17_roundtrips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let s = format_g17(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }

        #[test]
        fn domination_roundtrip(v in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..20)) {
            let (p, q): (Vec<f64>, Vec<f64>) = v.into_iter().map(|(a, b)| (a.max(b), a.min(b))).unzip();
            let inst = Instance::Domination(DominationInstance::new(p, q).unwrap());
            prop_assert_eq!(from_json(&to_json(&inst)).unwrap(), inst);
        }
    }
}

//! Text form of bodies: `ball:r=1`, `ellipsoid:a=2,1,1`, `lp:p=1,scale=1`,
//! `cube`, `qsum:q=2;ball:r=1;ellipsoid:a=2,1`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::StarBody;
use crate::error::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_num(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| parse_err(format!("not a number: {s:?}"))),
    }
}

fn params(s: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            let key = k.trim().to_ascii_lowercase();
            if out.contains_key(&key) {
                return Err(parse_err(format!("duplicate parameter {key}")));
            }
            out.insert(key.clone(), vec![parse_num(v)?]);
            current = Some(key);
        } else {
            let key = current.as_ref().ok_or_else(|| parse_err(format!("value {tok:?} without a key")))?;
            out.get_mut(key).expect("key inserted").push(parse_num(tok)?);
        }
    }
    Ok(out)
}

fn take_scalar(p: &mut BTreeMap<String, Vec<f64>>, key: &str, default: Option<f64>) -> Result<f64> {
    match p.remove(key) {
        Some(v) if v.len() == 1 => Ok(v[0]),
        Some(_) => Err(parse_err(format!("parameter {key} takes one value"))),
        None => default.ok_or_else(|| parse_err(format!("missing parameter {key}"))),
    }
}

fn finish(p: BTreeMap<String, Vec<f64>>, kind: &str) -> Result<()> {
    if let Some(k) = p.keys().next() {
        return Err(parse_err(format!("unknown parameter {k} for {kind}")));
    }
    Ok(())
}

fn need_dim(n: Option<usize>, kind: &str) -> Result<usize> {
    n.ok_or_else(|| parse_err(format!("{kind} needs a dimension")))
}

fn parse_simple(head: &str, n: Option<usize>) -> Result<StarBody> {
    let (kind, rest) = head.split_once(':').unwrap_or((head, ""));
    let kind = kind.trim().to_ascii_lowercase();
    let mut p = params(rest)?;
    let body = match kind.as_str() {
        "ball" => {
            let r = take_scalar(&mut p, "r", Some(1.0))?;
            StarBody::ball(need_dim(n, "ball")?, r)?
        }
        "ellipsoid" => {
            let a = p.remove("a").ok_or_else(|| parse_err("ellipsoid needs a=..."))?;
            if let Some(n) = n {
                if n != a.len() {
                    return Err(Error::DimensionMismatch { expected: n, got: a.len() });
                }
            }
            StarBody::ellipsoid(&a)?
        }
        "lp" => {
            let pp = take_scalar(&mut p, "p", None)?;
            let scale = take_scalar(&mut p, "scale", Some(1.0))?;
            StarBody::lp_ball(need_dim(n, "lp")?, pp, scale)?
        }
        "cube" => {
            let scale = take_scalar(&mut p, "scale", Some(1.0))?;
            StarBody::cube(need_dim(n, "cube")?, scale)?
        }
        other => return Err(parse_err(format!("unknown body kind {other:?}"))),
    };
    finish(p, &kind)?;
    Ok(body)
}

/// Parses a body description; `n` supplies the dimension for kinds that do
/// not carry one.
pub fn parse_body(spec: &str, n: Option<usize>) -> Result<StarBody> {
    let segments: Vec<&str> = spec.split(';').map(str::trim).collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(parse_err(format!("empty segment in {spec:?}")));
    }
    let body = parse_segments(&segments, n)?;
    if let Some(n) = n {
        if body.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: body.dim() });
        }
    }
    Ok(body)
}

fn parse_segments(segments: &[&str], n: Option<usize>) -> Result<StarBody> {
    let head = segments[0];
    let (kind, rest) = head.split_once(':').unwrap_or((head, ""));
    match kind.trim().to_ascii_lowercase().as_str() {
        "qsum" => {
            let mut p = params(rest)?;
            let q = take_scalar(&mut p, "q", None)?;
            finish(p, "qsum")?;
            if segments.len() < 3 {
                return Err(parse_err("qsum needs at least two bodies"));
            }
            let mut acc = parse_simple(segments[1], n)?;
            for s in &segments[2..] {
                let part = parse_simple(s, n.or(Some(acc.dim())))?;
                acc = acc.radial_q_sum(&part, q)?;
            }
            Ok(acc)
        }
        "scaled" => {
            let mut p = params(rest)?;
            let f = take_scalar(&mut p, "f", None)?;
            finish(p, "scaled")?;
            if segments.len() < 2 {
                return Err(parse_err("scaled needs a body"));
            }
            StarBody::scaled(parse_segments(&segments[1..], n)?, f)
        }
        "linear" => {
            let mut p = params(rest)?;
            let m = p.remove("m").ok_or_else(|| parse_err("linear needs m=..."))?;
            finish(p, "linear")?;
            if segments.len() < 2 {
                return Err(parse_err("linear needs a body"));
            }
            let base = parse_segments(&segments[1..], n)?;
            let d = base.dim();
            if m.len() != d * d {
                return Err(parse_err(format!("linear map needs {} entries, got {}", d * d, m.len())));
            }
            StarBody::linear_image(base, DMatrix::from_row_slice(d, d, &m))
        }
        _ => {
            if segments.len() != 1 {
                return Err(parse_err(format!("unexpected segments after {head:?}")));
            }
            parse_simple(head, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::BodyKind;

    #[test]
    fn parses_examples() {
        assert_eq!(parse_body("ball:r=1", Some(3)).unwrap(), StarBody::ball(3, 1.0).unwrap());
        assert_eq!(parse_body("ball", Some(4)).unwrap(), StarBody::ball(4, 1.0).unwrap());
        assert_eq!(parse_body("ellipsoid:a=2,1,1", None).unwrap(), StarBody::ellipsoid(&[2.0, 1.0, 1.0]).unwrap());
        assert_eq!(parse_body("lp:p=1,scale=1", Some(3)).unwrap(), StarBody::lp_ball(3, 1.0, 1.0).unwrap());
        assert_eq!(parse_body("cube", Some(3)).unwrap(), StarBody::cube(3, 1.0).unwrap());
        assert_eq!(parse_body("lp:p=inf", Some(2)).unwrap(), StarBody::cube(2, 1.0).unwrap());
        let q = parse_body("qsum:q=2;ball:r=1;ellipsoid:a=2,1", Some(2)).unwrap();
        assert!(matches!(q.kind(), BodyKind::RadialQSum { parts, .. } if parts.len() == 2));
    }

    #[test]
    fn round_trips_through_display() {
        for s in [
            "ball:r=1.5",
            "ellipsoid:a=2,1,0.5",
            "lp:p=3,scale=0.7",
            "cube:scale=2",
            "qsum:q=2;ball:r=1;ellipsoid:a=2,1,3",
            "scaled:f=0.5;lp:p=1,scale=1",
            "linear:m=1,0.5,0,0,1,0,0,0,2;cube:scale=1",
        ] {
            let b = parse_body(s, Some(3)).unwrap();
            assert_eq!(b.to_string(), s);
            assert_eq!(parse_body(&b.to_string(), Some(3)).unwrap(), b);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_body("ball", None), Err(Error::Parse(_))));
        assert!(matches!(parse_body("torus:r=1", Some(3)), Err(Error::Parse(_))));
        assert!(matches!(parse_body("ellipsoid:a=2,1", Some(3)), Err(Error::DimensionMismatch { .. })));
        assert!(parse_body("ball:r=-1", Some(3)).is_err());
        assert!(parse_body("ball:r=x", Some(3)).is_err());
        assert!(parse_body("ball:r=1,s=2", Some(3)).is_err());
        assert!(parse_body("qsum:q=2;ball:r=1", Some(3)).is_err());
        assert!(parse_body("", Some(3)).is_err());
        assert!(parse_body("lp:p=0.5", Some(3)).is_err());
    }
}

//! `key=value` assignments on dotted paths into a TOML document.

use anyhow::{anyhow, bail, Result};
use toml::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub path: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: String,
    pub values: Vec<Value>,
}

/// Parses a literal the way it would appear on the right of `=` in TOML;
/// anything that is not valid TOML is taken as a bare string.
pub fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn parse_assignment(s: &str) -> Result<Assignment> {
    let (path, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected key=value, got `{s}`"))?;
    let path = path.trim();
    if path.is_empty() {
        bail!("empty key in `{s}`");
    }
    Ok(Assignment {
        path: path.to_string(),
        value: parse_value(value),
    })
}

pub fn parse_axis(s: &str) -> Result<Axis> {
    let (path, values) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected key=v1,v2,..., got `{s}`"))?;
    let values: Vec<Value> = values.split(',').filter(|v| !v.trim().is_empty()).map(parse_value).collect();
    if path.trim().is_empty() || values.is_empty() {
        bail!("sweep axis `{s}` needs a key and at least one value");
    }
    Ok(Axis {
        path: path.trim().to_string(),
        values,
    })
}

/// Writes `value` at `path` (`a.b.0.c`), creating intermediate tables. Array
/// elements must already exist.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Table(t) => {
                if last {
                    t.insert(part.to_string(), value);
                    return Ok(());
                }
                t.entry(part.to_string())
                    .or_insert_with(|| Value::Table(toml::Table::new()))
            }
            Value::Array(a) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| anyhow!("`{path}`: `{part}` is not an array index"))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("`{path}`: index {idx} out of range (length {len})"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => bail!("`{path}`: `{}` is not a table", parts[..i].join(".")),
        };
    }
    unreachable!("paths have at least one segment")
}

/// Cartesian product of the sweep axes, first axis varying slowest.
pub fn sweep_points(axes: &[Axis]) -> Vec<Vec<Assignment>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut p = p.clone();
                    p.push(Assignment {
                        path: axis.path.clone(),
                        value: v.clone(),
                    });
                    p
                })
            })
            .collect();
    }
    points
}

pub fn render(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        v => v.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse_as_toml() {
        assert_eq!(parse_value("3"), Value::Integer(3));
        assert_eq!(parse_value("0.5"), Value::Float(0.5));
        assert_eq!(parse_value("true"), Value::Boolean(true));
        assert_eq!(parse_value("honest_operator"), Value::String("honest_operator".into()));
    }

    #[test]
    fn nested_set() {
        let mut doc: Value = toml::from_str("a = 1\n[[pop]]\nx = 1\n[[pop]]\nx = 2\n").unwrap();
        set_path(&mut doc, "pop.1.x", Value::Integer(9)).unwrap();
        set_path(&mut doc, "s.t", Value::Integer(4)).unwrap();
        assert_eq!(doc["pop"][1]["x"], Value::Integer(9));
        assert_eq!(doc["s"]["t"], Value::Integer(4));
        assert!(set_path(&mut doc, "pop.5.x", Value::Integer(1)).is_err());
        assert!(set_path(&mut doc, "a.b", Value::Integer(1)).is_err());
    }

    #[test]
    fn product_order() {
        let axes = vec![parse_axis("a=1,2").unwrap(), parse_axis("b=x,y,z").unwrap()];
        let pts = sweep_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(render(&pts[1][1].value), "y");
        assert_eq!(render(&pts[3][0].value), "2");
    }

    #[test]
    fn no_axes_one_point() {
        assert_eq!(sweep_points(&[]), vec![Vec::new()]);
    }
}

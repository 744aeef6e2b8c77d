//! Human tables and CSV derived from the canonical JSON value.

use serde_json::Value;

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) if items.is_empty() => "[]".into(),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            items.iter().map(cell).collect::<Vec<_>>().join(" ")
        }
        Value::Object(map) if map.len() == 1 => {
            // externally tagged enums such as {"QPow": 3}
            let (k, v) = map.iter().next().unwrap();
            format!("{k}({})", cell(v))
        }
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        other => other.to_string(),
    }
}

fn is_row_list(v: &Value) -> bool {
    matches!(v, Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object))
}

fn columns(rows: &[Value]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        for (k, v) in r.as_object().unwrap() {
            if !is_row_list(v) && !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

fn grid(rows: &[Value]) -> (Vec<String>, Vec<Vec<String>>) {
    let cols = columns(rows);
    let body = rows
        .iter()
        .map(|r| cols.iter().map(|c| r.get(c).map_or("-".into(), cell)).collect())
        .collect();
    (cols, body)
}

fn push_table(out: &mut String, title: &str, rows: &[Value]) {
    let (cols, body) = grid(rows);
    let mut width: Vec<usize> = cols.iter().map(String::len).collect();
    for line in &body {
        for (w, c) in width.iter_mut().zip(line) {
            *w = (*w).max(c.chars().count());
        }
    }
    let fmt = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    out.push_str(&format!("\n{title}:\n"));
    out.push_str(&fmt(&cols));
    out.push('\n');
    for line in &body {
        out.push_str(&fmt(line));
        out.push('\n');
    }
}

fn push_fields(out: &mut String, prefix: &str, v: &Value, tables: &mut Vec<(String, Vec<Value>)>) {
    let Value::Object(map) = v else {
        out.push_str(&format!("{prefix}: {}\n", cell(v)));
        return;
    };
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        if is_row_list(v) {
            tables.push((key, v.as_array().unwrap().clone()));
        } else if v.is_object() && v.as_object().unwrap().len() > 1 {
            push_fields(out, &key, v, tables);
        } else {
            out.push_str(&format!("{key}: {}\n", cell(v)));
        }
    }
}

/// Scalar fields as `key: value` lines, then every list of objects as an
/// aligned table.
pub fn table(v: &Value) -> String {
    let mut out = String::new();
    let mut tables = Vec::new();
    push_fields(&mut out, "", v, &mut tables);
    for (title, rows) in tables {
        push_table(&mut out, &title, &rows);
    }
    out
}

fn csv_cell(s: String) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// The list under `rows_key` as CSV, or `key,value` pairs when there is none.
pub fn csv(v: &Value, rows_key: Option<&str>) -> String {
    let mut out = String::new();
    match rows_key.and_then(|k| v.get(k)).filter(|r| is_row_list(r)) {
        Some(rows) => {
            let (cols, body) = grid(rows.as_array().unwrap());
            out.push_str(&cols.join(","));
            out.push('\n');
            for line in body {
                let cells: Vec<String> = line.into_iter().map(csv_cell).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        None => {
            out.push_str("key,value\n");
            let mut lines = String::new();
            let mut tables = Vec::new();
            push_fields(&mut lines, "", v, &mut tables);
            for l in lines.lines() {
                let (k, val) = l.split_once(": ").unwrap_or((l, ""));
                out.push_str(&format!("{},{}\n", csv_cell(k.into()), csv_cell(val.into())));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn table_lists_fields_then_rows() {
        let v = json!({"n": 2, "ok": true, "rows": [{"x": "0.5", "y": 1}, {"x": "1", "y": 2}]});
        let t = table(&v);
        assert!(t.starts_with("n: 2\nok: true\n"));
        assert!(t.contains("rows:\nx    y\n0.5  1\n1    2\n"));
    }

    #[test]
    fn csv_rows_and_pairs() {
        let v = json!({"n": 2, "rows": [{"x": "a,b", "p": {"QPow": 3}}]});
        assert_eq!(csv(&v, Some("rows")), "x,p\n\"a,b\",QPow(3)\n");
        assert_eq!(csv(&v, None), "key,value\nn,2\n");
    }
}

//! Rendering of reports as JSON, CSV or plain text.

use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Leaf values keyed by path, `a.b[0]` style, in document order.
fn flatten(value: &Value, path: String, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(v, p, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, format!("{path}[{i}]"), out);
            }
        }
        Value::String(s) => out.push((path, s.clone())),
        other => out.push((path, other.to_string())),
    }
}

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => format!("{value}\n"),
        Format::Text => {
            let mut leaves = Vec::new();
            flatten(value, String::new(), &mut leaves);
            leaves.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
        }
        Format::Csv => {
            let mut leaves = Vec::new();
            flatten(value, String::new(), &mut leaves);
            let mut w = csv::Writer::from_writer(Vec::new());
            // Writing to memory cannot fail.
            w.write_record(leaves.iter().map(|(k, _)| k)).expect("in-memory write");
            w.write_record(leaves.iter().map(|(_, v)| v)).expect("in-memory write");
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn formats() {
        let v = json!({"d": 30, "g": 6, "kanold": 8});
        assert_eq!(render(&v, Format::Json), "{\"d\":30,\"g\":6,\"kanold\":8}\n");
        assert_eq!(render(&v, Format::Csv), "d,g,kanold\n30,6,8\n");
        assert_eq!(render(&v, Format::Text), "d: 30\ng: 6\nkanold: 8\n");
        let nested = json!({"a": [[1, 2]], "b": {"c": "x,y"}, "e": []});
        assert_eq!(render(&nested, Format::Csv), "a[0][0],a[0][1],b.c,e\n1,2,\"x,y\",[]\n");
    }
}

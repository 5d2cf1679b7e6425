use serde_json::Value;

/// Canonical float rendering: 12 significant digits, fixed notation for
/// magnitudes in [1e-4, 1e6], scientific outside, zero as "0.0". Every float
/// in a report goes through here so that reruns diff byte-for-byte.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{:.11e}", v);
    let tail = sci.rfind('e').expect("scientific rendering always carries an exponent");
    let exp: i32 = sci[tail + 1..].parse().expect("exponent is a small integer");
    if (-4..=5).contains(&exp) || (exp == 6 && v.abs() <= 1e6) {
        format!("{:.*}", (11 - exp) as usize, v)
    } else {
        sci
    }
}

/// Serializes a report deterministically: keys in insertion order, floats
/// through [`format_f64`], two-space indentation, one trailing newline.
/// Parsing the output and writing it again reproduces the same bytes.
pub fn write_json(root: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, root, 0);
    out.push('\n');
    out
}

fn push_indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serialization cannot fail"));
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else {
        out.push_str(&format_f64(n.as_f64().expect("number is u64, i64, or f64")));
    }
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                push_indent(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            push_indent(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                push_indent(out, depth + 1);
                write_string(out, k);
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            push_indent(out, depth);
            out.push('}');
        }
    }
}

/// RFC 4180 field quoting; character ids contain commas, so they are always
/// emitted quoted.
pub fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

//! Result envelope: a small hand-rolled JSON writer with stable key order
//! and 17-significant-digit floats, so identical runs produce identical
//! bytes (the point of golden-file testing).

use std::fmt::Write as _;

/// JSON value with insertion-ordered objects.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn obj() -> Json {
        Json::Object(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: Json) -> &mut Self {
        if let Json::Object(entries) = self {
            entries.push((key.to_string(), value));
        } else {
            panic!("push on non-object");
        }
        self
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            Json::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Json::Float(v) => {
                if v.is_finite() {
                    let _ = write!(out, "{v:.16e}");
                } else {
                    out.push_str("null");
                }
            }
            Json::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\t' => out.push_str("\\t"),
                        '\r' => out.push_str("\\r"),
                        c if (c as u32) < 0x20 => {
                            let _ = write!(out, "\\u{:04x}", c as u32);
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    item.render_into(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Json::Object(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    let _ = write!(out, "\"{k}\": ");
                    v.render_into(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out.push('\n');
        out
    }
}

/// Standard result envelope around a payload. `generated_at` is taken from
/// SOURCE_DATE_EPOCH when set and is the fixed string "unset" otherwise;
/// wall-clock time would break byte-identical reruns.
pub fn envelope(config_hash: &str, seed: u64, payload: Json) -> Json {
    let mut e = Json::obj();
    e.push("tool", Json::Str("spinmotion".into()));
    e.push("tool_version", Json::Str(env!("CARGO_PKG_VERSION").into()));
    e.push("config_hash", Json::Str(config_hash.into()));
    e.push("seed", Json::Int(seed as i64));
    e.push(
        "generated_at",
        Json::Str(std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unset".into())),
    );
    e.push("payload", payload);
    e
}

//! Minimal validator for the closed object schemas used in structured
//! completions: `type`, `properties`, `required`, `additionalProperties`,
//! `items`, and `enum`. Selection tasks never need more than this subset,
//! and a closed validator keeps the wire contract auditable.

use serde_json::Value;

/// Validates `doc` against `schema`; the error names the failing path.
pub fn validate(schema: &Value, doc: &Value) -> Result<(), String> {
    validate_at(schema, doc, "$")
}

fn validate_at(schema: &Value, doc: &Value, path: &str) -> Result<(), String> {
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(doc) {
            return Err(format!("{path}: value {doc} not in enum"));
        }
    }
    let Some(ty) = schema.get("type").and_then(Value::as_str) else {
        return Ok(());
    };
    match ty {
        "object" => {
            let Some(map) = doc.as_object() else {
                return Err(format!("{path}: expected object"));
            };
            let props = schema.get("properties").and_then(Value::as_object);
            if let Some(required) = schema.get("required").and_then(Value::as_array) {
                for key in required.iter().filter_map(Value::as_str) {
                    if !map.contains_key(key) {
                        return Err(format!("{path}: missing required field '{key}'"));
                    }
                }
            }
            let closed = schema
                .get("additionalProperties")
                .and_then(Value::as_bool)
                .unwrap_or(true);
            for (key, value) in map {
                match props.and_then(|p| p.get(key)) {
                    Some(sub) => validate_at(sub, value, &format!("{path}.{key}"))?,
                    None if !closed => {
                        return Err(format!("{path}: unexpected field '{key}'"));
                    }
                    None => {}
                }
            }
            Ok(())
        }
        "array" => {
            let Some(items) = doc.as_array() else {
                return Err(format!("{path}: expected array"));
            };
            if let Some(item_schema) = schema.get("items") {
                for (i, item) in items.iter().enumerate() {
                    validate_at(item_schema, item, &format!("{path}[{i}]"))?;
                }
            }
            Ok(())
        }
        "string" => doc
            .is_string()
            .then_some(())
            .ok_or_else(|| format!("{path}: expected string")),
        "boolean" => doc
            .is_boolean()
            .then_some(())
            .ok_or_else(|| format!("{path}: expected boolean")),
        "integer" => doc
            .is_i64()
            .then_some(())
            .ok_or_else(|| format!("{path}: expected integer")),
        "number" => doc
            .is_number()
            .then_some(())
            .ok_or_else(|| format!("{path}: expected number")),
        "null" => doc
            .is_null()
            .then_some(())
            .ok_or_else(|| format!("{path}: expected null")),
        other => Err(format!("{path}: unsupported schema type '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn choice_schema(ids: &[&str]) -> Value {
        json!({
            "type": "object",
            "properties": {
                "selected": { "type": "array", "items": { "type": "string", "enum": ids } },
                "abstain": { "type": "boolean" }
            },
            "required": ["selected", "abstain"],
            "additionalProperties": false
        })
    }

    #[test]
    fn accepts_conforming_choice_document() {
        let schema = choice_schema(&["a", "b", "c"]);
        let doc = json!({ "selected": ["a", "c"], "abstain": false });
        assert!(validate(&schema, &doc).is_ok());
    }

    #[test]
    fn rejects_out_of_enum_values() {
        let schema = choice_schema(&["a", "b", "c"]);
        let doc = json!({ "selected": ["z"], "abstain": false });
        let err = validate(&schema, &doc).unwrap_err();
        assert!(err.contains("selected[0]"), "{err}");
    }

    #[test]
    fn rejects_missing_required_and_extra_fields() {
        let schema = choice_schema(&["a"]);
        assert!(validate(&schema, &json!({ "selected": ["a"] })).is_err());
        assert!(validate(
            &schema,
            &json!({ "selected": ["a"], "abstain": true, "extra": 1 })
        )
        .is_err());
    }

    #[test]
    fn type_mismatches_name_their_path() {
        let schema = choice_schema(&["a"]);
        let err = validate(&schema, &json!({ "selected": "a", "abstain": false })).unwrap_err();
        assert!(err.contains("$.selected"), "{err}");
    }
}

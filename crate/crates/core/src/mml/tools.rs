//! The seven specialized middle-layer tools.
//!
//! All tools are read-only, exhaustive, and return sorted structured
//! observations. The dispatcher rejects any tool name outside the suite
//! before touching the tree, which is what keeps agent actions closed.

use serde_json::{json, Value};

use crate::types::FinderError;

use super::{MmlFamily, MmlField, MmlSystem, MmlTree};

pub const MML_TOOLSET: &[&str] = &[
    "list_systems",
    "list_families",
    "list_fields",
    "get_channels",
    "get_indices",
    "describe",
    "count_channels",
];

/// Executes one middle-layer tool by name.
pub fn execute_mml_tool(tree: &MmlTree, tool: &str, args: &Value) -> Result<Value, FinderError> {
    if !MML_TOOLSET.contains(&tool) {
        return Err(FinderError::UnknownTool(tool.to_string()));
    }
    let arg = |key: &str| args.get(key).and_then(Value::as_str).unwrap_or_default();
    match tool {
        "list_systems" => {
            let mut systems: Vec<&MmlSystem> = tree.systems.iter().collect();
            systems.sort_by(|a, b| a.name.cmp(&b.name));
            Ok(json!(systems
                .iter()
                .map(|s| json!({ "name": s.name, "description": s.description }))
                .collect::<Vec<_>>()))
        }
        "list_families" => {
            let system = lookup_system(tree, arg("system"))?;
            let mut families: Vec<&MmlFamily> = system.families.iter().collect();
            families.sort_by(|a, b| a.name.cmp(&b.name));
            Ok(json!(families
                .iter()
                .map(|f| json!({ "name": f.name, "description": f.description }))
                .collect::<Vec<_>>()))
        }
        "list_fields" => {
            let family = lookup_family(tree, arg("system"), arg("family"))?;
            let mut fields: Vec<&MmlField> = family.fields.iter().collect();
            fields.sort_by(|a, b| a.name.cmp(&b.name));
            Ok(json!(fields
                .iter()
                .map(|f| json!({ "name": f.name, "description": f.description }))
                .collect::<Vec<_>>()))
        }
        "get_channels" => {
            let field = lookup_field(tree, arg("system"), arg("family"), arg("field"))?;
            let filter = args.get("filter").and_then(Value::as_str);
            let mut channels: Vec<(&str, u32)> = field
                .channels
                .iter()
                .filter(|c| match filter {
                    None => true,
                    // Numeric filters match the device index, anything
                    // else is an address substring.
                    Some(f) => match f.parse::<u32>() {
                        Ok(n) => c.device_index == n,
                        Err(_) => c.address.contains(f),
                    },
                })
                .map(|c| (c.address.as_str(), c.device_index))
                .collect();
            channels.sort();
            Ok(json!(channels
                .iter()
                .map(|(address, index)| json!({ "address": address, "device_index": index }))
                .collect::<Vec<_>>()))
        }
        "get_indices" => {
            let family = lookup_family(tree, arg("system"), arg("family"))?;
            let mut indices: Vec<u32> = family
                .fields
                .iter()
                .flat_map(|f| f.channels.iter().map(|c| c.device_index))
                .collect();
            indices.sort_unstable();
            indices.dedup();
            if let Some(selector) = args.get("selector").and_then(Value::as_str) {
                indices = apply_index_selector(&indices, selector)?;
            }
            Ok(json!(indices))
        }
        "describe" => {
            let path = path_arg(args)?;
            let description = match path.as_slice() {
                [system] => lookup_system(tree, system)?.description.clone(),
                [system, family] => lookup_family(tree, system, family)?.description.clone(),
                [system, family, field] => {
                    lookup_field(tree, system, family, field)?.description.clone()
                }
                _ => {
                    return Err(FinderError::Config(
                        "describe takes a path of 1 to 3 components".into(),
                    ))
                }
            };
            Ok(json!({ "path": path, "description": description }))
        }
        "count_channels" => {
            let path = path_arg(args)?;
            let count = match path.as_slice() {
                [] => tree.channel_count(),
                [system] => lookup_system(tree, system)?
                    .families
                    .iter()
                    .flat_map(|f| &f.fields)
                    .map(|f| f.channels.len())
                    .sum(),
                [system, family] => lookup_family(tree, system, family)?
                    .fields
                    .iter()
                    .map(|f| f.channels.len())
                    .sum(),
                [system, family, field] => {
                    lookup_field(tree, system, family, field)?.channels.len()
                }
                _ => {
                    return Err(FinderError::Config(
                        "count_channels takes a path of 0 to 3 components".into(),
                    ))
                }
            };
            Ok(json!({ "path": path, "count": count }))
        }
        _ => unreachable!(),
    }
}

fn path_arg(args: &Value) -> Result<Vec<String>, FinderError> {
    match args.get("path") {
        None => Ok(Vec::new()),
        Some(Value::String(s)) => Ok(s
            .split('.')
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect()),
        Some(Value::Array(a)) => Ok(a
            .iter()
            .filter_map(Value::as_str)
            .map(str::to_string)
            .collect()),
        Some(other) => Err(FinderError::Config(format!(
            "path must be a dotted string or array, got {other}"
        ))),
    }
}

/// Selector grammar: `all`, a single index, a comma list, or `lo:hi`.
fn apply_index_selector(indices: &[u32], selector: &str) -> Result<Vec<u32>, FinderError> {
    let selector = selector.trim();
    if selector.is_empty() || selector == "all" {
        return Ok(indices.to_vec());
    }
    if let Some((lo, hi)) = selector.split_once(':') {
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|_| FinderError::Config(format!("bad index range '{selector}'")))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|_| FinderError::Config(format!("bad index range '{selector}'")))?;
        return Ok(indices
            .iter()
            .copied()
            .filter(|i| (lo..=hi).contains(i))
            .collect());
    }
    let wanted: Result<Vec<u32>, _> = selector.split(',').map(|p| p.trim().parse::<u32>()).collect();
    let wanted =
        wanted.map_err(|_| FinderError::Config(format!("bad index list '{selector}'")))?;
    Ok(indices.iter().copied().filter(|i| wanted.contains(i)).collect())
}

fn lookup_system<'t>(tree: &'t MmlTree, name: &str) -> Result<&'t MmlSystem, FinderError> {
    tree.systems
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| FinderError::UnknownSystem(name.to_string()))
}

fn lookup_family<'t>(
    tree: &'t MmlTree,
    system: &str,
    family: &str,
) -> Result<&'t MmlFamily, FinderError> {
    lookup_system(tree, system)?
        .families
        .iter()
        .find(|f| f.name == family)
        .ok_or_else(|| FinderError::UnknownFamily(family.to_string()))
}

fn lookup_field<'t>(
    tree: &'t MmlTree,
    system: &str,
    family: &str,
    field: &str,
) -> Result<&'t MmlField, FinderError> {
    lookup_family(tree, system, family)?
        .fields
        .iter()
        .find(|f| f.name == field)
        .ok_or_else(|| FinderError::UnknownField(field.to_string()))
}

#[cfg(test)]
mod tests {
    use super::super::tests::SMALL_TREE;
    use super::*;

    fn tree() -> MmlTree {
        MmlTree::load_str(SMALL_TREE).unwrap()
    }

    #[test]
    fn lists_every_system() {
        let obs = execute_mml_tool(&tree(), "list_systems", &json!({})).unwrap();
        let names: Vec<&str> = obs
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v["name"].as_str().unwrap())
            .collect();
        assert_eq!(names, ["BR", "SR"]);
    }

    #[test]
    fn get_channels_honors_index_and_substring_filters() {
        let t = tree();
        let by_index = execute_mml_tool(
            &t,
            "get_channels",
            &json!({ "system": "SR", "family": "BPM", "field": "X", "filter": "2" }),
        )
        .unwrap();
        assert_eq!(by_index.as_array().unwrap().len(), 1);
        assert_eq!(by_index[0]["address"], "SR02C___BPM2__X_AM01");
        let by_substring = execute_mml_tool(
            &t,
            "get_channels",
            &json!({ "system": "SR", "family": "BPM", "field": "X", "filter": "BPM1" }),
        )
        .unwrap();
        assert_eq!(by_substring[0]["address"], "SR01C___BPM1__X_AM00");
    }

    #[test]
    fn get_indices_supports_ranges_and_lists() {
        let t = tree();
        let all = execute_mml_tool(
            &t,
            "get_indices",
            &json!({ "system": "SR", "family": "BPM" }),
        )
        .unwrap();
        assert_eq!(all, json!([1, 2]));
        let ranged = execute_mml_tool(
            &t,
            "get_indices",
            &json!({ "system": "SR", "family": "BPM", "selector": "2:9" }),
        )
        .unwrap();
        assert_eq!(ranged, json!([2]));
        let listed = execute_mml_tool(
            &t,
            "get_indices",
            &json!({ "system": "SR", "family": "BPM", "selector": "1,5" }),
        )
        .unwrap();
        assert_eq!(listed, json!([1]));
    }

    #[test]
    fn describe_and_count_walk_paths() {
        let t = tree();
        let d = execute_mml_tool(&t, "describe", &json!({ "path": "SR.QF" })).unwrap();
        assert_eq!(d["description"], "focusing quadrupole magnets");
        let c = execute_mml_tool(&t, "count_channels", &json!({ "path": "SR" })).unwrap();
        assert_eq!(c["count"], 6);
        let total = execute_mml_tool(&t, "count_channels", &json!({})).unwrap();
        assert_eq!(total["count"], 8);
    }

    #[test]
    fn unknown_names_error_at_each_level() {
        let t = tree();
        assert!(matches!(
            execute_mml_tool(&t, "list_families", &json!({ "system": "XX" })),
            Err(FinderError::UnknownSystem(_))
        ));
        assert!(matches!(
            execute_mml_tool(&t, "list_fields", &json!({ "system": "SR", "family": "XX" })),
            Err(FinderError::UnknownFamily(_))
        ));
        assert!(matches!(
            execute_mml_tool(
                &t,
                "get_channels",
                &json!({ "system": "SR", "family": "BPM", "field": "XX" })
            ),
            Err(FinderError::UnknownField(_))
        ));
    }

    #[test]
    fn eighth_tool_is_rejected() {
        assert!(matches!(
            execute_mml_tool(&tree(), "run_sql", &json!({})),
            Err(FinderError::UnknownTool(_))
        ));
    }

    #[test]
    fn outputs_match_direct_tree_traversal() {
        let t = tree();
        for sys in &t.systems {
            let families = execute_mml_tool(
                &t,
                "list_families",
                &json!({ "system": sys.name }),
            )
            .unwrap();
            let mut expected: Vec<&str> = sys.families.iter().map(|f| f.name.as_str()).collect();
            expected.sort_unstable();
            let got: Vec<&str> = families
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v["name"].as_str().unwrap())
                .collect();
            assert_eq!(got, expected);
            for fam in &sys.families {
                for field in &fam.fields {
                    let obs = execute_mml_tool(
                        &t,
                        "get_channels",
                        &json!({ "system": sys.name, "family": fam.name, "field": field.name }),
                    )
                    .unwrap();
                    let mut expected: Vec<&str> =
                        field.channels.iter().map(|c| c.address.as_str()).collect();
                    expected.sort_unstable();
                    let got: Vec<&str> = obs
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|v| v["address"].as_str().unwrap())
                        .collect();
                    assert_eq!(got, expected);
                }
            }
        }
    }
}

//! Template-based translation of operator intent into graph queries.
//!
//! Translation is deliberately narrow: pick the best-matching template,
//! fill its device-class and signal-role slots through constrained
//! selection, and parse the substituted text. The same template works on
//! any conforming graph, whatever local naming was mapped into it.

use serde::{Deserialize, Serialize};

use crate::selector::{ChoiceOption, ChoiceRequest, Selector};

use super::{is_literal, literal_text, parse_query, GraphQuery, OntoError, TripleStore};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryTemplate {
    pub name: String,
    /// Text matched against the operator query when picking a template.
    pub trigger: String,
    /// Query text with `{class}` / `{role}` placeholders.
    pub sparql: String,
    /// Which slots the template uses, e.g. ["class", "role"].
    #[serde(default)]
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoleOption {
    pub predicate: String,
    pub label: String,
    /// Keyword bag matched against query wording.
    #[serde(default)]
    pub keywords: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateSet {
    pub templates: Vec<QueryTemplate>,
    pub roles: Vec<RoleOption>,
}

impl TemplateSet {
    pub fn load_str(text: &str) -> Result<Self, OntoError> {
        serde_yaml::from_str(text).map_err(|e| OntoError::Config(format!("templates: {e}")))
    }

    /// Built-in template set covering the class/role query shapes.
    pub fn builtin() -> Self {
        Self {
            templates: vec![
                QueryTemplate {
                    name: "class-role-channels".into(),
                    trigger: "list the setting reading command PVs channels signals for all devices of a kind"
                        .into(),
                    sparql: "SELECT ?pv WHERE { ?dev rdf:type ?class . ?class rdfs:subClassOf+ {class} . ?dev {role} ?pv }"
                        .into(),
                    slots: vec!["class".into(), "role".into()],
                },
                QueryTemplate {
                    name: "devices-of-class".into(),
                    trigger: "which devices instances exist of a kind enumerate hardware".into(),
                    sparql: "SELECT ?dev WHERE { ?dev rdf:type ?class . ?class rdfs:subClassOf+ {class} }"
                        .into(),
                    slots: vec!["class".into()],
                },
            ],
            roles: vec![
                RoleOption {
                    predicate: "acc:hasSetpoint".into(),
                    label: "setpoint".into(),
                    keywords: "setpoint setting set write target value".into(),
                },
                RoleOption {
                    predicate: "acc:hasReadback".into(),
                    label: "readback".into(),
                    keywords: "readback reading read measure monitor current value".into(),
                },
                RoleOption {
                    predicate: "acc:hasCommand".into(),
                    label: "command".into(),
                    keywords: "command trigger execute action".into(),
                },
            ],
        }
    }
}

/// Classes known to the graph: anything on either side of the subclass
/// hierarchy, with labels and keyword bags when present.
fn class_options(store: &TripleStore) -> Vec<ChoiceOption> {
    let mut classes: Vec<String> = Vec::new();
    for t in store.triples() {
        if t.predicate == "rdfs:subClassOf" {
            for term in [&t.subject, &t.object] {
                if !is_literal(term) && !classes.contains(term) {
                    classes.push(term.clone());
                }
            }
        }
    }
    classes.sort();
    classes
        .into_iter()
        .map(|class| {
            let label = store
                .objects(&class, "rdfs:label")
                .first()
                .map(|l| literal_text(l).to_string())
                .unwrap_or_else(|| class.clone());
            let keywords = store
                .objects(&class, "acc:keywords")
                .first()
                .map(|l| literal_text(l).to_string())
                .unwrap_or_default();
            ChoiceOption::new(&class, label, keywords)
        })
        .collect()
}

/// Translates an operator query into a graph query by template selection
/// and slot filling, all through the selector boundary. Returns
/// [`OntoError::NoTemplateMatch`] when nothing fits.
pub fn translate_nl(
    query: &str,
    templates: &TemplateSet,
    selector: &Selector,
    store: &TripleStore,
) -> Result<GraphQuery, OntoError> {
    if templates.templates.is_empty() {
        return Err(OntoError::Config("template set is empty".into()));
    }
    let template_options: Vec<ChoiceOption> = templates
        .templates
        .iter()
        .map(|t| ChoiceOption::new(&t.name, &t.name, &t.trigger))
        .collect();
    let req = ChoiceRequest::for_query(
        "Pick the query template matching the request.",
        query,
        template_options,
        false,
        true,
    );
    let resp = selector.choose(&req)?;
    let Some(template_name) = resp.selected.into_iter().next() else {
        return Err(OntoError::NoTemplateMatch);
    };
    let template = templates
        .templates
        .iter()
        .find(|t| t.name == template_name)
        .expect("selected id came from the option set");

    let mut sparql = template.sparql.clone();
    if template.slots.iter().any(|s| s == "class") {
        let options = class_options(store);
        if options.is_empty() {
            return Err(OntoError::Config("graph declares no classes".into()));
        }
        let req = ChoiceRequest::for_query(
            "Pick the device class the request refers to.",
            query,
            options,
            false,
            true,
        );
        let resp = selector.choose(&req)?;
        let Some(class) = resp.selected.into_iter().next() else {
            return Err(OntoError::NoTemplateMatch);
        };
        sparql = sparql.replace("{class}", &class);
    }
    if template.slots.iter().any(|s| s == "role") {
        let options: Vec<ChoiceOption> = templates
            .roles
            .iter()
            .map(|r| ChoiceOption::new(&r.predicate, &r.label, &r.keywords))
            .collect();
        if options.is_empty() {
            return Err(OntoError::Config("template set declares no roles".into()));
        }
        let req = ChoiceRequest::for_query(
            "Pick the signal role the request refers to.",
            query,
            options,
            false,
            true,
        );
        let resp = selector.choose(&req)?;
        let Some(role) = resp.selected.into_iter().next() else {
            return Err(OntoError::NoTemplateMatch);
        };
        sparql = sparql.replace("{role}", &role);
    }
    parse_query(&sparql)
}

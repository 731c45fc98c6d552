//! Paradigm 3a: interactive exploration over compositional addresses.
//!
//! Addresses decompose into FACILITY/DEVICE/LOCATION/PROPERTY components
//! with a description on the property. The agent loop works through a
//! closed toolset: component listing with filters, top-k fuzzy retrieval
//! (`guess_addresses`), and `compose_address` for final assembly and
//! validation. The hybrid workflow identifies the facility first, attempts
//! rapid fuzzy retrieval, and falls back to component-wise construction;
//! invalid compositions trigger re-reasoning within the iteration limit.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::config::ExplorerConfig;
use crate::db::ChannelDatabase;
use crate::selector::{ChoiceOption, ChoiceRequest, Selector};
use crate::text::lexical_score;
use crate::types::{FinderError, FinderResult};

/// Component positions of a compositional address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ComponentLevel {
    Facility,
    Device,
    Location,
    Property,
}

impl ComponentLevel {
    pub const ALL: [ComponentLevel; 4] = [
        ComponentLevel::Facility,
        ComponentLevel::Device,
        ComponentLevel::Location,
        ComponentLevel::Property,
    ];

    fn index(self) -> usize {
        match self {
            ComponentLevel::Facility => 0,
            ComponentLevel::Device => 1,
            ComponentLevel::Location => 2,
            ComponentLevel::Property => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentLevel::Facility => "facility",
            ComponentLevel::Device => "device",
            ComponentLevel::Location => "location",
            ComponentLevel::Property => "property",
        }
    }
}

/// A fully specified compositional address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionalAddress {
    pub facility: String,
    pub device: String,
    pub location: String,
    pub property: String,
    /// Property description.
    pub description: String,
}

impl CompositionalAddress {
    pub fn serialized(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.facility, self.device, self.location, self.property
        )
    }
}

/// Optional per-component hints for fuzzy retrieval.
#[derive(Debug, Clone, Default)]
pub struct AddressHints {
    pub facility: Option<String>,
    pub device: Option<String>,
    pub location: Option<String>,
    pub property: Option<String>,
}

/// Flat view of a four-level database as a component table.
pub struct ComponentView<'a> {
    db: &'a ChannelDatabase,
    rows: Vec<CompositionalAddress>,
}

impl<'a> ComponentView<'a> {
    /// Requires a schema of exactly four required levels, read positionally
    /// as facility / device / location / property.
    pub fn new(db: &'a ChannelDatabase) -> Result<Self, FinderError> {
        if db.schema().depth() != 4 {
            return Err(FinderError::Config(format!(
                "compositional exploration needs a 4-level schema, found {} levels",
                db.schema().depth()
            )));
        }
        let mut rows = Vec::with_capacity(db.len());
        for r in db.records() {
            if r.path.len() != 4 {
                return Err(FinderError::Config(format!(
                    "record {} does not span all four components",
                    r.address
                )));
            }
            // The record description is the root-to-leaf chain; the
            // property's own description is its final segment.
            let description = r
                .description
                .rsplit(", ")
                .next()
                .unwrap_or(&r.description)
                .to_string();
            rows.push(CompositionalAddress {
                facility: r.path[0].1.clone(),
                device: r.path[1].1.clone(),
                location: r.path[2].1.clone(),
                property: r.path[3].1.clone(),
                description,
            });
        }
        Ok(Self { db, rows })
    }

    pub fn db(&self) -> &ChannelDatabase {
        self.db
    }

    /// The flat address table.
    pub fn rows(&self) -> &[CompositionalAddress] {
        &self.rows
    }

    fn component<'r>(&self, row: &'r CompositionalAddress, level: ComponentLevel) -> &'r str {
        match level {
            ComponentLevel::Facility => &row.facility,
            ComponentLevel::Device => &row.device,
            ComponentLevel::Location => &row.location,
            ComponentLevel::Property => &row.property,
        }
    }

    /// Exhaustive, sorted, deduplicated component list under the filters.
    /// Filters must fix exactly the components above `level`; their values
    /// must exist.
    pub fn list_components(
        &self,
        level: ComponentLevel,
        filters: &BTreeMap<ComponentLevel, String>,
    ) -> Result<Vec<(String, String)>, FinderError> {
        for key in filters.keys() {
            if key.index() >= level.index() {
                return Err(FinderError::InvalidFilter(format!(
                    "{} is not above {}",
                    key.name(),
                    level.name()
                )));
            }
        }
        for above in ComponentLevel::ALL.iter().take(level.index()) {
            let Some(value) = filters.get(above) else {
                return Err(FinderError::InvalidFilter(format!(
                    "listing {} requires a {} filter",
                    level.name(),
                    above.name()
                )));
            };
            if !self.rows.iter().any(|r| self.component(r, *above) == value) {
                return Err(FinderError::UnknownComponent(value.clone()));
            }
        }
        let mut out: BTreeMap<String, String> = BTreeMap::new();
        for row in &self.rows {
            let matches = filters
                .iter()
                .all(|(l, v)| self.component(row, *l) == v);
            if !matches {
                continue;
            }
            let value = self.component(row, level).to_string();
            let description = self.component_description(row, level);
            out.entry(value).or_insert(description);
        }
        Ok(out.into_iter().collect())
    }

    fn component_description(&self, row: &CompositionalAddress, level: ComponentLevel) -> String {
        if level == ComponentLevel::Property {
            return row.description.clone();
        }
        let values: Vec<&str> = match level {
            ComponentLevel::Facility => vec![&row.facility],
            ComponentLevel::Device => vec![&row.facility, &row.device],
            ComponentLevel::Location => vec![&row.facility, &row.device, &row.location],
            ComponentLevel::Property => unreachable!(),
        };
        self.db
            .node_at(&values)
            .map(|n| n.description.clone())
            .unwrap_or_default()
    }

    /// Returns the address iff the quadruple exists; `None` signals a miss
    /// and triggers agent re-reasoning.
    pub fn compose_address(&self, parts: &CompositionalAddress) -> Option<String> {
        let address = parts.serialized();
        self.db.contains(&address).then_some(address)
    }

    /// Top-k fuzzy retrieval: property-centric scoring with additive
    /// boosts from facility, device, and location matches. Ties break
    /// lexicographically by address; every returned address exists.
    pub fn guess_addresses(
        &self,
        hints: &AddressHints,
        k: usize,
        cfg: &ExplorerConfig,
    ) -> Result<Vec<(String, f64)>, FinderError> {
        let Some(property_hint) = hints.property.as_deref() else {
            return Err(FinderError::EmptyHints);
        };
        if k == 0 {
            return Err(FinderError::Config("k must be at least 1".into()));
        }
        let mut scored: Vec<(String, f64)> = self
            .rows
            .iter()
            .map(|row| {
                let score = guess_score(row, property_hint, hints, cfg);
                (row.serialized(), score)
            })
            .collect();
        scored.sort_by(|(a, sa), (b, sb)| sb.partial_cmp(sa).unwrap().then_with(|| a.cmp(b)));
        scored.truncate(k);
        Ok(scored)
    }
}

/// Property-centric score with additive component boosts.
pub fn guess_score(
    row: &CompositionalAddress,
    property_hint: &str,
    hints: &AddressHints,
    cfg: &ExplorerConfig,
) -> f64 {
    let property_text = format!("{} {}", row.property, row.description);
    let mut score = cfg.weight_property * lexical_score(property_hint, &property_text);
    if let Some(h) = &hints.facility {
        score += cfg.weight_facility * lexical_score(h, &row.facility);
    }
    if let Some(h) = &hints.device {
        score += cfg.weight_device * lexical_score(h, &row.device);
    }
    if let Some(h) = &hints.location {
        score += cfg.weight_location * lexical_score(h, &row.location);
    }
    score
}

/// One reasoning/acting step of the agent loop.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AgentStep {
    pub thought: String,
    pub tool: String,
    pub args: Value,
    pub observation: String,
}

/// The registered toolset; any other tool name is rejected.
pub const TOOLSET: &[&str] = &[
    "list_facilities",
    "list_devices",
    "list_locations",
    "list_properties",
    "guess_addresses",
    "compose_address",
];

/// Executes one tool call against the component view. Unknown tools and
/// malformed arguments are errors; the agent loop routes every action
/// through here so the closure is enforced uniformly.
pub fn execute_tool(
    view: &ComponentView,
    tool: &str,
    args: &Value,
    cfg: &ExplorerConfig,
) -> Result<Value, FinderError> {
    if !TOOLSET.contains(&tool) {
        return Err(FinderError::UnknownTool(tool.to_string()));
    }
    let filters_from = |args: &Value| -> BTreeMap<ComponentLevel, String> {
        let mut filters = BTreeMap::new();
        for level in ComponentLevel::ALL {
            if let Some(v) = args.get(level.name()).and_then(Value::as_str) {
                filters.insert(level, v.to_string());
            }
        }
        filters
    };
    match tool {
        "list_facilities" | "list_devices" | "list_locations" | "list_properties" => {
            let level = match tool {
                "list_facilities" => ComponentLevel::Facility,
                "list_devices" => ComponentLevel::Device,
                "list_locations" => ComponentLevel::Location,
                _ => ComponentLevel::Property,
            };
            let listed = view.list_components(level, &filters_from(args))?;
            Ok(json!(listed
                .into_iter()
                .map(|(value, description)| json!({ "value": value, "description": description }))
                .collect::<Vec<_>>()))
        }
        "guess_addresses" => {
            let hint = |key: &str| args.get(key).and_then(Value::as_str).map(String::from);
            let hints = AddressHints {
                facility: hint("facility"),
                device: hint("device"),
                location: hint("location"),
                property: hint("property"),
            };
            let k = args
                .get("k")
                .and_then(Value::as_u64)
                .map(|k| k as usize)
                .unwrap_or(cfg.k);
            let ranked = view.guess_addresses(&hints, k, cfg)?;
            Ok(json!(ranked
                .into_iter()
                .map(|(address, score)| json!({ "address": address, "score": score }))
                .collect::<Vec<_>>()))
        }
        "compose_address" => {
            let part = |key: &str| {
                args.get(key)
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string()
            };
            let parts = CompositionalAddress {
                facility: part("facility"),
                device: part("device"),
                location: part("location"),
                property: part("property"),
                description: String::new(),
            };
            match view.compose_address(&parts) {
                Some(address) => Ok(json!({ "valid": true, "address": address })),
                None => Ok(json!({ "valid": false })),
            }
        }
        _ => unreachable!(),
    }
}

struct Agent<'a> {
    view: &'a ComponentView<'a>,
    selector: &'a Selector,
    cfg: &'a ExplorerConfig,
    steps: Vec<AgentStep>,
    iterations: usize,
}

enum AgentOutcome {
    Found(Vec<String>),
    Abstain(String),
}

impl Agent<'_> {
    fn act(&mut self, thought: &str, tool: &str, args: Value) -> Result<Value, FinderError> {
        self.iterations += 1;
        if self.iterations > self.cfg.max_iterations {
            return Err(FinderError::IterationLimitExceeded(self.iterations));
        }
        let obs = execute_tool(self.view, tool, &args, self.cfg)?;
        self.steps.push(AgentStep {
            thought: thought.to_string(),
            tool: tool.to_string(),
            args,
            observation: obs.to_string(),
        });
        Ok(obs)
    }

    fn choose_component(
        &mut self,
        listed: &[(String, String)],
        query: &str,
        what: &str,
        exclude: &[String],
    ) -> Result<Option<String>, FinderError> {
        let options: Vec<ChoiceOption> = listed
            .iter()
            .filter(|(v, _)| !exclude.contains(v))
            .map(|(value, description)| ChoiceOption::new(value, value, description))
            .collect();
        if options.is_empty() {
            return Ok(None);
        }
        if options.len() == 1 {
            return Ok(Some(options[0].id.clone()));
        }
        self.iterations += 1;
        if self.iterations > self.cfg.max_iterations {
            return Err(FinderError::IterationLimitExceeded(self.iterations));
        }
        let req = ChoiceRequest::for_query(
            &format!("Pick the {what} relevant to the query."),
            query,
            options,
            false,
            true,
        );
        let resp = self.selector.choose(&req)?;
        Ok(resp.selected.into_iter().next())
    }

    fn run(&mut self, query: &str) -> Result<AgentOutcome, FinderError> {
        // Stage 1: identify the facility.
        let obs = self.act(
            "Identify which facilities exist before narrowing the search.",
            "list_facilities",
            json!({}),
        )?;
        let facilities: Vec<(String, String)> = listed_pairs(&obs);
        let Some(facility) = self.choose_component(&facilities, query, "facility", &[])? else {
            return Ok(AgentOutcome::Abstain("no facility matches the query".into()));
        };

        // Stage 2: rapid retrieval via fuzzy search with model-determined
        // hints.
        let obs = self.act(
            "Attempt rapid retrieval via fuzzy search before component-wise descent.",
            "guess_addresses",
            json!({ "facility": facility, "property": query, "k": self.cfg.k }),
        )?;
        let ranked: Vec<(String, f64)> = obs
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|v| {
                        (
                            v["address"].as_str().unwrap_or_default().to_string(),
                            v["score"].as_f64().unwrap_or(0.0),
                        )
                    })
                    .collect()
            })
            .unwrap_or_default();
        if let Some((top, top_score)) = ranked.first() {
            let margin_ok = ranked
                .get(1)
                .map(|(_, second)| top_score - second >= self.cfg.satisfied_margin)
                .unwrap_or(true);
            if *top_score >= self.cfg.satisfied_score && margin_ok {
                return Ok(AgentOutcome::Found(vec![top.clone()]));
            }
        }

        // Stage 3: systematic component-wise construction.
        let mut filters = json!({ "facility": facility });
        let obs = self.act(
            "Fuzzy candidates are inconclusive; enumerate devices under the facility.",
            "list_devices",
            filters.clone(),
        )?;
        let Some(device) = self.choose_component(&listed_pairs(&obs), query, "device", &[])? else {
            return Ok(AgentOutcome::Abstain("no device matches the query".into()));
        };
        filters["device"] = json!(device);
        let obs = self.act(
            "Enumerate installation locations for the chosen device class.",
            "list_locations",
            filters.clone(),
        )?;
        let Some(location) = self.choose_component(&listed_pairs(&obs), query, "location", &[])?
        else {
            return Ok(AgentOutcome::Abstain("no location matches the query".into()));
        };
        filters["location"] = json!(location);
        let obs = self.act(
            "Enumerate accessible properties; descriptions guide the final pick.",
            "list_properties",
            filters.clone(),
        )?;
        let properties = listed_pairs(&obs);

        // Invalid compositions trigger re-reasoning over the remaining
        // properties, bounded by the iteration limit.
        let mut tried: Vec<String> = Vec::new();
        loop {
            let Some(property) = self.choose_component(&properties, query, "property", &tried)?
            else {
                return Ok(AgentOutcome::Abstain("no property matches the query".into()));
            };
            let mut compose_args = filters.clone();
            compose_args["property"] = json!(property);
            let obs = self.act(
                "Compose the full address and validate it against the control system.",
                "compose_address",
                compose_args,
            )?;
            if obs["valid"].as_bool() == Some(true) {
                let address = obs["address"].as_str().unwrap_or_default().to_string();
                return Ok(AgentOutcome::Found(vec![address]));
            }
            tried.push(property);
        }
    }
}

fn listed_pairs(obs: &Value) -> Vec<(String, String)> {
    obs.as_array()
        .map(|a| {
            a.iter()
                .map(|v| {
                    (
                        v["value"].as_str().unwrap_or_default().to_string(),
                        v["description"].as_str().unwrap_or_default().to_string(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

/// ReAct loop for one atomic query: hybrid fuzzy-first workflow with
/// systematic fallback. Hitting the iteration limit abstains and keeps the
/// partial trace.
pub fn run_react(
    query: &str,
    view: &ComponentView,
    selector: &Selector,
    cfg: &ExplorerConfig,
) -> Result<(FinderResult, Vec<AgentStep>), FinderError> {
    let mut agent = Agent {
        view,
        selector,
        cfg,
        steps: Vec::new(),
        iterations: 0,
    };
    let outcome = match agent.run(query) {
        Ok(outcome) => outcome,
        Err(FinderError::IterationLimitExceeded(n)) => {
            AgentOutcome::Abstain(format!("iteration limit exceeded after {n} steps"))
        }
        Err(e) => return Err(e),
    };
    let result = match outcome {
        AgentOutcome::Found(channels) => {
            let (valid, invalid) = view.db.validate_channels(&channels);
            debug_assert!(invalid.is_empty());
            FinderResult {
                abstained: valid.is_empty(),
                channels: valid,
                selector_calls: selector.calls_used(),
                notes: Vec::new(),
            }
        }
        AgentOutcome::Abstain(reason) => FinderResult::abstention(selector.calls_used(), reason),
    };
    Ok((result, agent.steps))
}

/// Full Paradigm 3a pipeline: decompose, one agent loop per sub-query,
/// order-stable aggregation.
pub fn find_explorer(
    query: &str,
    db: &ChannelDatabase,
    selector: &Selector,
    cfg: &ExplorerConfig,
) -> Result<(FinderResult, Vec<AgentStep>), FinderError> {
    let view = ComponentView::new(db)?;
    let subs = selector.decompose(query)?;
    let outcomes: Vec<Result<(FinderResult, Vec<AgentStep>), FinderError>> =
        std::thread::scope(|scope| {
            let view = &view;
            let handles: Vec<_> = subs
                .iter()
                .map(|sub| scope.spawn(move || run_react(&sub.text, view, selector, cfg)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
    let mut channels: Vec<String> = Vec::new();
    let mut notes = Vec::new();
    let mut steps = Vec::new();
    for (sub, outcome) in subs.iter().zip(outcomes) {
        let (result, trace) = outcome?;
        if result.abstained {
            notes.push(format!("sub-query '{sub}' abstained"));
            notes.extend(result.notes);
        }
        for c in result.channels {
            if !channels.contains(&c) {
                channels.push(c);
            }
        }
        steps.extend(trace);
    }
    Ok((
        FinderResult {
            abstained: channels.is_empty(),
            channels,
            selector_calls: selector.calls_used(),
            notes,
        },
        steps,
    ))
}

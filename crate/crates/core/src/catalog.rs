//! Built-in scenarios and the TOML scenario-file schema shared with
//! user-supplied files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rigging::NullHypersurface;
use crate::spacetime::ChartedSpacetime;

const BUILTIN: &[(&str, &str)] = &[
    ("ads_slice", include_str!("../catalog/ads_slice.toml")),
    (
        "desitter_horizon",
        include_str!("../catalog/desitter_horizon.toml"),
    ),
    ("flat_torus", include_str!("../catalog/flat_torus.toml")),
    (
        "minkowski_cone",
        include_str!("../catalog/minkowski_cone.toml"),
    ),
    (
        "minkowski_hyperplane",
        include_str!("../catalog/minkowski_hyperplane.toml"),
    ),
    (
        "minkowski_hyperplane_tilted",
        include_str!("../catalog/minkowski_hyperplane_tilted.toml"),
    ),
    ("ppwave_flat", include_str!("../catalog/ppwave_flat.toml")),
    (
        "ppwave_twisted",
        include_str!("../catalog/ppwave_twisted.toml"),
    ),
    (
        "ppwave_wavefront",
        include_str!("../catalog/ppwave_wavefront.toml"),
    ),
];

/// Quantities an `[[expected]]` entry may name.
pub const QUANTITIES: &[&str] = &[
    "max_abs_b",
    "max_abs_domega",
    "transverse_curvature_mean",
    "rigged_curvature_mean",
    "ambient_screen_curvature_mean",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedValue {
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub note: String,
}

/// Defaults for the periodic-geodesic hunt.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuntSetup {
    pub origin: Vec<f64>,
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default = "three")]
    pub grid: usize,
    #[serde(default = "two_hundred")]
    pub budget: usize,
}

fn one() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

fn two_hundred() -> usize {
    200
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: String,
    dimension: usize,
    coordinates: Vec<String>,
    #[serde(default)]
    bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    periodic: BTreeMap<String, f64>,
    metric: Vec<String>,
    level_function: Option<String>,
    rigging: Option<Vec<String>>,
    graph_coordinate: Option<String>,
    #[serde(default)]
    sampling_domain: BTreeMap<String, [f64; 2]>,
    leaf_coordinates: Option<Vec<String>>,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_samples")]
    samples: usize,
    hunt: Option<HuntSetup>,
    #[serde(default)]
    expected: Vec<ExpectedValue>,
}

fn default_seed() -> u64 {
    42
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub spacetime: ChartedSpacetime,
    /// Absent for geodesic-only scenarios such as the torus.
    pub hypersurface: Option<NullHypersurface>,
    pub expected: Vec<ExpectedValue>,
    pub seed: u64,
    pub samples: usize,
    pub hunt: Option<HuntSetup>,
}

impl Scenario {
    pub fn expected(&self, quantity: &str) -> Option<&ExpectedValue> {
        self.expected.iter().find(|e| e.quantity == quantity)
    }
}

pub fn list_scenarios() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

pub fn load(name: &str) -> Result<Scenario> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    parse_scenario(text)
}

pub fn load_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::scenario(path.display().to_string(), e))?;
    parse_scenario(&text)
}

/// A built-in name, or else a path to a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    match load(name_or_path) {
        Err(Error::UnknownScenario(_)) if Path::new(name_or_path).is_file() => {
            load_file(Path::new(name_or_path))
        }
        r => r,
    }
}

fn coordinate_index(coordinates: &[String], name: &str, path: &str) -> Result<usize> {
    coordinates
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::scenario(path, format!("unknown coordinate `{name}`")))
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        match e.span() {
            Some(span) => {
                let line = text[..span.start].matches('\n').count() + 1;
                Error::scenario(format!("line {line}"), message)
            }
            None => Error::scenario("scenario", message),
        }
    })?;
    let coords = &file.coordinates;
    let n = coords.len();
    if file.dimension != n {
        return Err(Error::scenario(
            "dimension",
            format!(
                "dimension {} does not match {n} coordinates",
                file.dimension
            ),
        ));
    }
    for key in file.bounds.keys() {
        coordinate_index(coords, key, &format!("bounds.{key}"))?;
    }
    let mut periods = vec![None; n];
    for (key, &p) in &file.periodic {
        periods[coordinate_index(coords, key, &format!("periodic.{key}"))?] = Some(p);
    }
    let mut bounds = Vec::with_capacity(n);
    for (i, c) in coords.iter().enumerate() {
        match (file.bounds.get(c), periods[i]) {
            (Some(b), _) => bounds.push(*b),
            (None, Some(p)) => bounds.push([0.0, p]),
            (None, None) => return Err(Error::scenario(format!("bounds.{c}"), "missing bounds")),
        }
    }
    let spacetime = ChartedSpacetime::new(coords.clone(), bounds, periods, &file.metric)?;
    let hypersurface = build_hypersurface(&file, &spacetime)?;
    for (i, e) in file.expected.iter().enumerate() {
        if !QUANTITIES.contains(&e.quantity.as_str()) {
            return Err(Error::scenario(
                format!("expected[{i}].quantity"),
                format!("unknown quantity `{}`", e.quantity),
            ));
        }
        if !(e.tolerance > 0.0) {
            return Err(Error::scenario(
                format!("expected[{i}].tolerance"),
                "must be positive",
            ));
        }
        if hypersurface.is_none() {
            return Err(Error::scenario(
                format!("expected[{i}]"),
                "expected values need a hypersurface",
            ));
        }
    }
    if let Some(h) = &file.hunt {
        if h.origin.len() != n {
            return Err(Error::scenario(
                "hunt.origin",
                format!("expected {n} components"),
            ));
        }
        if !(h.period > 0.0) {
            return Err(Error::scenario("hunt.period", "must be positive"));
        }
    }
    Ok(Scenario {
        name: file.name,
        description: file.description,
        spacetime,
        hypersurface,
        expected: file.expected,
        seed: file.seed,
        samples: file.samples,
        hunt: file.hunt,
    })
}

fn build_hypersurface(
    file: &ScenarioFile,
    spacetime: &ChartedSpacetime,
) -> Result<Option<NullHypersurface>> {
    let coords = &file.coordinates;
    let (level, rigging, graph) =
        match (&file.level_function, &file.rigging, &file.graph_coordinate) {
            (None, None, None) => {
                if !file.sampling_domain.is_empty() {
                    return Err(Error::scenario(
                        "sampling_domain",
                        "given without a hypersurface",
                    ));
                }
                if file.leaf_coordinates.is_some() {
                    return Err(Error::scenario(
                        "leaf_coordinates",
                        "given without a hypersurface",
                    ));
                }
                return Ok(None);
            }
            (Some(l), Some(r), Some(g)) => (l, r, g),
            (l, r, _) => {
                let missing = if l.is_none() {
                    "level_function"
                } else if r.is_none() {
                    "rigging"
                } else {
                    "graph_coordinate"
                };
                return Err(Error::scenario(
                    missing,
                    "required when a hypersurface is described",
                ));
            }
        };
    if rigging.len() != coords.len() {
        return Err(Error::scenario(
            "rigging",
            format!(
                "expected {} components, found {}",
                coords.len(),
                rigging.len()
            ),
        ));
    }
    let graph = coordinate_index(coords, graph, "graph_coordinate")?;
    for key in file.sampling_domain.keys() {
        coordinate_index(coords, key, &format!("sampling_domain.{key}"))?;
    }
    let domain: Vec<[f64; 2]> = coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            *file
                .sampling_domain
                .get(c)
                .unwrap_or(&spacetime.bounds()[i])
        })
        .collect();
    let mut surface = NullHypersurface::new(spacetime.clone(), level, rigging, graph, domain)?;
    if let Some(leaf) = &file.leaf_coordinates {
        let idx = leaf
            .iter()
            .enumerate()
            .map(|(k, c)| coordinate_index(coords, c, &format!("leaf_coordinates[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        if idx.contains(&graph) {
            return Err(Error::scenario(
                "leaf_coordinates",
                "must not contain the graph coordinate",
            ));
        }
        surface = surface.with_leaf_coordinates(idx)?;
    }
    Ok(Some(surface))
}

//! View parameters shared by HTTP queries and command-line flags.

use std::collections::HashMap;
use std::str::FromStr;

use barry_core::owi::{builtin_spec, AxisAssignment, DatasetSeries, ViewViolation};
use barry_core::render::{RenderError, ViewConfig};
use barry_core::simplex::{GeometryError, NormalizationMode, ViewRotation};

/// A rejected view parameter, named as it appears in the query string.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid parameter '{parameter}': {message}")]
pub struct ParamError {
    pub parameter: &'static str,
    pub message: String,
}

impl ParamError {
    pub fn new(parameter: &'static str, message: impl Into<String>) -> Self {
        Self { parameter, message: message.into() }
    }
}

/// Unset fields fall back to the view defaults of the resolved spec.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewParams {
    pub spec: Option<String>,
    /// Expected vertex count; selects a spec when `spec` is unset.
    pub n: Option<usize>,
    pub azimuth: Option<f64>,
    pub elevation: Option<f64>,
    pub mode: Option<NormalizationMode>,
    pub axes: Option<Vec<String>>,
    pub jitter: Option<f64>,
    /// `Some(None)` turns gridlines off.
    pub grid: Option<Option<f64>>,
}

fn parse<T: FromStr>(q: &HashMap<String, String>, key: &'static str) -> Result<Option<T>, ParamError>
where
    T::Err: std::fmt::Display,
{
    q.get(key).map(|raw| raw.trim().parse::<T>().map_err(|e| ParamError::new(key, format!("'{raw}': {e}")))).transpose()
}

/// Comma-separated axis list.
pub fn parse_axes(raw: &str) -> Vec<String> {
    raw.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect()
}

/// `none` or `0` disables gridlines; otherwise a step in (0, 1).
pub fn parse_grid(raw: &str) -> Result<Option<f64>, ParamError> {
    match raw.trim() {
        "none" | "off" | "0" => Ok(None),
        other => other.parse::<f64>().map(Some).map_err(|e| ParamError::new("grid", format!("'{raw}': {e}"))),
    }
}

impl ViewParams {
    pub fn from_query(q: &HashMap<String, String>) -> Result<Self, ParamError> {
        Ok(Self {
            spec: q.get("spec").map(|s| s.trim().to_string()),
            n: parse(q, "n")?,
            azimuth: parse(q, "az")?,
            elevation: parse(q, "el")?,
            mode: parse(q, "mode")?,
            axes: q.get("axes").map(|a| parse_axes(a)),
            jitter: parse(q, "jitter")?,
            grid: q.get("grid").map(|g| parse_grid(g)).transpose()?,
        })
    }

    /// Builds and validates the view against `d`.
    pub fn resolve(&self, d: &DatasetSeries, default_spec: &str) -> Result<ViewConfig, ParamError> {
        let mode = self.mode.unwrap_or_default();
        let spec = match (&self.spec, self.n) {
            (Some(name), _) => builtin_spec(name).map_err(|e| ParamError::new("spec", e.to_string()))?,
            (None, Some(n)) => ["session4", "session3", "owi3"]
                .iter()
                .filter_map(|name| builtin_spec(name).ok())
                .find(|s| mode.output_len(s.len()) == n && s.sources().all(|m| d.has_metric(m)))
                .ok_or_else(|| {
                    ParamError::new("n", format!("no built-in spec over this dataset draws {n} vertices"))
                })?,
            (None, None) => builtin_spec(default_spec).map_err(|e| ParamError::new("spec", e.to_string()))?,
        };

        let mut view = ViewConfig::for_spec(spec);
        view.mode = mode;
        if let Some(axes) = &self.axes {
            view.axes = AxisAssignment::new(axes.iter().cloned());
        }
        if let Some(grid) = self.grid {
            view.gridline_step = grid;
        }
        if let Some(j) = self.jitter {
            view.jitter_radius = j;
        }
        let az = self.azimuth.unwrap_or(view.rotation.azimuth());
        let el = self.elevation.unwrap_or(view.rotation.elevation());
        view.rotation = ViewRotation::new(az, el)
            .map_err(|e| ParamError::new(if az.is_finite() { "el" } else { "az" }, e.to_string()))?;

        if let Some(n) = self.n {
            if view.vertex_count() != n {
                return Err(ParamError::new(
                    "n",
                    format!(
                        "spec {} in {} mode draws {} vertices, not {n}",
                        view.spec.name(),
                        mode.name(),
                        view.vertex_count()
                    ),
                ));
            }
        }
        view.validate(d).map_err(|e| self.explain(e))?;
        Ok(view)
    }

    fn explain(&self, e: RenderError) -> ParamError {
        let parameter = match &e {
            RenderError::View(violations) => {
                let axis_problem = violations.iter().any(|v| !matches!(v, ViewViolation::MissingMetric(_)));
                if axis_problem && self.axes.is_some() {
                    "axes"
                } else {
                    "spec"
                }
            }
            RenderError::InvalidConfig(_) => "jitter",
            RenderError::Geometry(GeometryError::InvalidStep(_)) => "grid",
            _ => "mode",
        };
        ParamError::new(parameter, e.to_string())
    }
}

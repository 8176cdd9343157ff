//! Scene construction and deterministic SVG output.

mod chart;
mod svg;

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::owi::{
    aggregate, builtin_spec, validate_view, AggregationSpec, AxisAssignment, DatasetSeries, ModelError, ViewViolation,
};
use crate::par::{self, Strategy};
use crate::simplex::{
    barycentric_from_shares, embed, rotate_project, simplex_embedding, trilinear_gridlines, BarycentricPoint,
    CartesianPoint, GeometryError, NormalizationMode, SimplexEmbedding, ViewRotation,
};

pub use chart::{metric_shares, resolve_metric, stacked_chart, timeseries_chart, SnapShares};
pub use svg::frame_to_svg;

/// Coincidence threshold for overlap jitter, in scene units.
pub const OVERLAP_EPSILON: f64 = 1e-9;

/// Axis name given to the residual coordinate added by slack normalization.
pub const UNACCOUNTED_AXIS: &str = "UNACCOUNTED";

pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("view does not fit the dataset: {}", join_violations(.0))]
    View(Vec<ViewViolation>),
    #[error("snap {0} not found in dataset")]
    SnapNotFound(u64),
    #[error("session {session_id}: {source}")]
    Session { session_id: String, source: GeometryError },
    #[error("missing metric {0}")]
    MissingMetric(String),
    #[error("invalid view: {0}")]
    InvalidConfig(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn join_violations(v: &[ViewViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, RenderError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Self { width: 800, height: 700 }
    }
}

/// Everything that determines how a snapshot is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewConfig {
    pub spec: AggregationSpec,
    pub axes: AxisAssignment,
    pub mode: NormalizationMode,
    /// Ring radius for overlapping dots, in scene units; 0 disables.
    pub jitter_radius: f64,
    /// Trilinear gridline spacing (triangle views only).
    pub gridline_step: Option<f64>,
    /// Orbit angles (tetrahedron views only).
    pub rotation: ViewRotation,
    pub canvas: Canvas,
    pub palette_seed: u64,
}

pub const DEFAULT_GRIDLINE_STEP: f64 = 0.1;
pub const DEFAULT_AZIMUTH: f64 = 30.0;
pub const DEFAULT_ELEVATION: f64 = 20.0;

impl ViewConfig {
    /// Default axes (CPU at the apex), strict normalization, no jitter,
    /// gridlines every 10% and a 30°/20° orbit. Gridlines only apply to
    /// triangles and the orbit only to tetrahedra.
    pub fn for_spec(spec: AggregationSpec) -> Self {
        Self {
            axes: AxisAssignment::default_for(&spec),
            spec,
            mode: NormalizationMode::Strict,
            jitter_radius: 0.0,
            gridline_step: Some(DEFAULT_GRIDLINE_STEP),
            rotation: ViewRotation::new(DEFAULT_AZIMUTH, DEFAULT_ELEVATION).expect("finite"),
            canvas: Canvas::default(),
            palette_seed: 0,
        }
    }

    pub fn builtin(spec_name: &str) -> Result<Self> {
        Ok(Self::for_spec(builtin_spec(spec_name)?))
    }

    /// Number of simplex vertices, counting the residual axis in slack mode.
    pub fn vertex_count(&self) -> usize {
        self.mode.output_len(self.axes.len())
    }

    pub fn axis_names(&self) -> Vec<String> {
        let mut names = self.axes.axes().to_vec();
        if self.mode == NormalizationMode::Slack {
            names.push(UNACCOUNTED_AXIS.to_string());
        }
        names
    }

    pub fn validate(&self, dataset: &DatasetSeries) -> Result<()> {
        validate_view(dataset, &self.spec, &self.axes).map_err(RenderError::View)?;
        if !(self.jitter_radius.is_finite() && self.jitter_radius >= 0.0) {
            return Err(RenderError::InvalidConfig(format!("jitter radius must be >= 0, got {}", self.jitter_radius)));
        }
        if let Some(step) = self.gridline_step {
            trilinear_gridlines(step)?;
        }
        if self.canvas.width == 0 || self.canvas.height == 0 {
            return Err(RenderError::InvalidConfig("canvas must be non-empty".into()));
        }
        simplex_embedding(self.vertex_count())?;
        Ok(())
    }
}

/// One session drawn in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Dot {
    pub session_id: String,
    /// Position in the embedding's own 2D/3D space.
    pub position: CartesianPoint,
    /// 2D scene position after orbit projection and jitter.
    pub screen: CartesianPoint,
    pub color: &'static str,
    pub coords: BarycentricPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gridline {
    pub axis: usize,
    pub level: f64,
    pub from: CartesianPoint,
    pub to: CartesianPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisLabel {
    pub text: String,
    pub anchor: CartesianPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameScene {
    pub embedding: SimplexEmbedding,
    pub rotation: ViewRotation,
    /// Vertices projected to 2D scene space.
    pub screen_vertices: Vec<CartesianPoint>,
    pub dots: Vec<Dot>,
    pub gridlines: Vec<Gridline>,
    pub labels: Vec<AxisLabel>,
    pub odometer: String,
    pub canvas: Canvas,
}

impl FrameScene {
    /// Outline and odometer only.
    pub fn empty(n: usize, odometer: impl Into<String>, rotation: ViewRotation, canvas: Canvas) -> Result<Self> {
        let embedding = simplex_embedding(n)?;
        let screen_vertices = project_all(embedding.vertices(), &rotation)?;
        Ok(Self {
            embedding,
            rotation,
            screen_vertices,
            dots: Vec::new(),
            gridlines: Vec::new(),
            labels: Vec::new(),
            odometer: odometer.into(),
            canvas,
        })
    }

    pub fn n(&self) -> usize {
        self.embedding.n()
    }

    pub fn dot(&self, session_id: &str) -> Option<&Dot> {
        self.dots.iter().find(|d| d.session_id == session_id)
    }
}

fn to_screen(c: &CartesianPoint, rotation: &ViewRotation) -> Result<CartesianPoint> {
    Ok(if c.dim() == 3 { rotate_project(c, rotation)? } else { *c })
}

fn project_all(points: &[CartesianPoint], rotation: &ViewRotation) -> Result<Vec<CartesianPoint>> {
    points.iter().map(|v| to_screen(v, rotation)).collect()
}

/// FNV-1a over the palette seed (little endian) followed by the session id.
pub fn session_color(session_id: &str, palette_seed: u64) -> &'static str {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in palette_seed.to_le_bytes().iter().chain(session_id.as_bytes()) {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    PALETTE[(hash % PALETTE.len() as u64) as usize]
}

pub fn project_frame(d: &DatasetSeries, snap_id: u64, view: &ViewConfig) -> Result<FrameScene> {
    project_frame_with(d, snap_id, view, Strategy::default())
}

pub fn project_frame_with(
    d: &DatasetSeries,
    snap_id: u64,
    view: &ViewConfig,
    strategy: Strategy,
) -> Result<FrameScene> {
    view.validate(d)?;
    let group = d.snap(snap_id).ok_or(RenderError::SnapNotFound(snap_id))?;
    let mut scene = FrameScene::empty(view.vertex_count(), snap_id.to_string(), view.rotation, view.canvas)?;

    let embedding = &scene.embedding;
    scene.dots = par::try_map(strategy, &group.sessions, |s| -> Result<Dot> {
        let composites = aggregate(&s.metrics, &view.spec)?;
        let values = view.axes.arrange(&composites)?;
        let annotate = |source| RenderError::Session { session_id: s.session_id.clone(), source };
        let coords = barycentric_from_shares(&values, s.sample_interval_ms, view.mode).map_err(annotate)?;
        let position = embed(&coords, embedding).map_err(annotate)?;
        Ok(Dot {
            session_id: s.session_id.clone(),
            screen: to_screen(&position, &view.rotation)?,
            position,
            color: session_color(&s.session_id, view.palette_seed),
            coords,
        })
    })?;

    if let (Some(step), 3) = (view.gridline_step, scene.n()) {
        scene.gridlines = trilinear_gridlines(step)?
            .iter()
            .map(|g| {
                Ok(Gridline {
                    axis: g.axis,
                    level: g.level,
                    from: embed(&g.from, &scene.embedding)?,
                    to: embed(&g.to, &scene.embedding)?,
                })
            })
            .collect::<Result<_>>()?;
    }
    scene.labels = view
        .axis_names()
        .into_iter()
        .zip(&scene.screen_vertices)
        .map(|(text, anchor)| AxisLabel { text, anchor: *anchor })
        .collect();
    Ok(scene)
}

/// Spreads coincident dots (within [`OVERLAP_EPSILON`] on screen) evenly
/// around a ring of `radius` centered on their shared point, in arrival
/// order. The ring's starting angle is `seed mod 360` degrees.
pub fn jitter_overlaps(scene: &FrameScene, radius: f64, seed: u64) -> FrameScene {
    let mut out = scene.clone();
    if radius <= 0.0 {
        return out;
    }
    let mut groups: Vec<(CartesianPoint, Vec<usize>)> = Vec::new();
    for (i, dot) in scene.dots.iter().enumerate() {
        match groups.iter_mut().find(|(anchor, _)| anchor.distance(&dot.screen) <= OVERLAP_EPSILON) {
            Some((_, members)) => members.push(i),
            None => groups.push((dot.screen, vec![i])),
        }
    }
    let phase = ((seed % 360) as f64).to_radians();
    for (center, members) in groups.into_iter().filter(|(_, m)| m.len() > 1) {
        let k = members.len() as f64;
        for (j, &i) in members.iter().enumerate() {
            let theta = phase + 2.0 * std::f64::consts::PI * j as f64 / k;
            out.dots[i].screen =
                CartesianPoint::new2(center.x() + radius * theta.cos(), center.y() + radius * theta.sin());
        }
    }
    out
}

/// Projects, jitters per the view and serializes one frame.
pub fn render_frame(d: &DatasetSeries, snap_id: u64, view: &ViewConfig) -> Result<Vec<u8>> {
    render_frame_with(d, snap_id, view, Strategy::default())
}

pub fn render_frame_with(d: &DatasetSeries, snap_id: u64, view: &ViewConfig, strategy: Strategy) -> Result<Vec<u8>> {
    let scene = project_frame_with(d, snap_id, view, strategy)?;
    Ok(frame_to_svg(&jitter_overlaps(&scene, view.jitter_radius, view.palette_seed)))
}

pub fn frame_file_name(snap_id: u64) -> String {
    format!("frame_{snap_id:06}.svg")
}

/// Renders every snap; output order follows the dataset.
pub fn render_frames_with(d: &DatasetSeries, view: &ViewConfig, strategy: Strategy) -> Result<Vec<(u64, Vec<u8>)>> {
    view.validate(d)?;
    let ids: Vec<u64> = d.snap_ids().collect();
    // frames run in parallel; sessions within a frame stay sequential
    par::try_map(strategy, &ids, |&id| Ok((id, render_frame_with(d, id, view, Strategy::Sequential)?)))
}

pub fn animate(d: &DatasetSeries, view: &ViewConfig, outdir: impl AsRef<Path>) -> Result<usize> {
    animate_with(d, view, outdir, Strategy::default())
}

/// Writes `frame_%06d.svg` (numbered by snap id) per snap into `outdir`.
pub fn animate_with(
    d: &DatasetSeries,
    view: &ViewConfig,
    outdir: impl AsRef<Path>,
    strategy: Strategy,
) -> Result<usize> {
    let outdir = outdir.as_ref();
    let io = |path: &Path, source| RenderError::Io { path: path.display().to_string(), source };
    fs::create_dir_all(outdir).map_err(|e| io(outdir, e))?;
    let frames = render_frames_with(d, view, strategy)?;
    for (id, bytes) in &frames {
        let path = outdir.join(frame_file_name(*id));
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    }
    Ok(frames.len())
}

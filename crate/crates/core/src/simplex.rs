//! Barycentric geometry on the unit-height 2-simplex and 3-simplex.
//!
//! A point with shares `p_1..p_N` (summing to the simplex height, fixed at 1)
//! embeds at `Σ p_i · V_i`. The inverse map recovers each `p_i` as the
//! perpendicular distance from the point to the face opposite `V_i`; for a
//! regular simplex of unit height those distances coincide with the shares.

use std::fmt;

use serde::Serialize;

/// Tolerance on the sum rule and on hull membership.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Relative tolerance accepted by strict normalization.
pub const STRICT_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Height of every embedded simplex.
pub const SIMPLEX_HEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("sum rule violated: shares sum to {sum} against expected {expected} (relative residual {relative:.6})")]
    SumRuleViolation { sum: f64, expected: f64, relative: f64 },
    #[error("share {index} is negative ({value})")]
    NegativeShare { index: usize, value: f64 },
    #[error("share {index} is not finite")]
    NonFiniteShare { index: usize },
    #[error("cannot rescale: shares sum to zero")]
    ZeroTotal,
    #[error("expected total must be positive and finite, got {0}")]
    InvalidTotal(f64),
    #[error("barycentric point needs at least 2 coordinates, got {0}")]
    TooFewCoordinates(usize),
    #[error("unsupported simplex dimension: {0} vertices (only 3 and 4 are embeddable)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point lies outside the simplex (face {face} distance {distance})")]
    OutsideSimplex { face: usize, distance: f64 },
    #[error("gridline step must lie strictly between 0 and 1, got {0}")]
    InvalidStep(f64),
    #[error("rotation angles must be finite")]
    NonFiniteAngle,
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Ordered nonnegative shares summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BarycentricPoint {
    coords: Vec<f64>,
}

impl BarycentricPoint {
    /// Validates the sum rule and bounds. Values within [`SUM_TOLERANCE`] of
    /// zero are clamped to zero.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(GeometryError::TooFewCoordinates(coords.len()));
        }
        for (index, &value) in coords.iter().enumerate() {
            if !value.is_finite() {
                return Err(GeometryError::NonFiniteShare { index });
            }
            if value < -SUM_TOLERANCE {
                return Err(GeometryError::NegativeShare { index, value });
            }
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(GeometryError::SumRuleViolation { sum, expected: 1.0, relative: sum - 1.0 });
        }
        let coords = coords.into_iter().map(|c| c.max(0.0)).collect();
        Ok(Self { coords })
    }

    pub fn centroid(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeometryError::TooFewCoordinates(n));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, index: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeometryError::TooFewCoordinates(n));
        }
        if index >= n {
            return Err(GeometryError::DimensionMismatch { expected: n, actual: index + 1 });
        }
        let mut coords = vec![0.0; n];
        coords[index] = 1.0;
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }
}

/// A point in the 2D or 3D scene space of an embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    coords: [f64; 3],
    dim: usize,
}

impl CartesianPoint {
    pub fn new2(x: f64, y: f64) -> Self {
        Self { coords: [x, y, 0.0], dim: 2 }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Self { coords: [x, y, z], dim: 3 }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match *values {
            [x, y] => Ok(Self::new2(x, y)),
            [x, y, z] => Ok(Self::new3(x, y, z)),
            _ => Err(GeometryError::DimensionMismatch { expected: 3, actual: values.len() }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn z(&self) -> f64 {
        self.coords[2]
    }

    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        self.coords.iter().zip(other.coords.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn sub(&self, other: &CartesianPoint) -> [f64; 3] {
        [self.coords[0] - other.coords[0], self.coords[1] - other.coords[1], self.coords[2] - other.coords[2]]
    }
}

impl fmt::Display for CartesianPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Vertex coordinates of a regular, unit-height simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexEmbedding {
    vertices: Vec<CartesianPoint>,
    height: f64,
}

impl SimplexEmbedding {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    /// Dimension of the scene space (`n - 1`).
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[CartesianPoint] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> CartesianPoint {
        self.vertices[index]
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Pairs of vertex indices forming the simplex edges, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }
}

/// Builds the embedding for `n` vertices.
///
/// `n = 3`: the triangle `(1/√3, 1)`, `(0, 0)`, `(2/√3, 0)`.
/// `n = 4`: apex `(0, 0, 1)` over base vertices at radius `√0.5` in the
/// `z = 0` plane at polar angles 90°, 210° and 330°.
pub fn simplex_embedding(n: usize) -> Result<SimplexEmbedding> {
    let vertices = match n {
        3 => {
            let s = 3f64.sqrt();
            vec![CartesianPoint::new2(1.0 / s, 1.0), CartesianPoint::new2(0.0, 0.0), CartesianPoint::new2(2.0 / s, 0.0)]
        }
        4 => {
            let radius = 0.5f64.sqrt();
            let mut vertices = vec![CartesianPoint::new3(0.0, 0.0, 1.0)];
            for degrees in [90.0f64, 210.0, 330.0] {
                let theta = degrees.to_radians();
                vertices.push(CartesianPoint::new3(radius * theta.cos(), radius * theta.sin(), 0.0));
            }
            vertices
        }
        other => return Err(GeometryError::UnsupportedDimension(other)),
    };
    Ok(SimplexEmbedding { vertices, height: SIMPLEX_HEIGHT })
}

/// How raw measurements are turned into shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    /// Divide by the expected total; reject when the sum is off by more than
    /// [`STRICT_RELATIVE_TOLERANCE`].
    #[default]
    Strict,
    /// Divide by the actual sum.
    Rescale,
    /// Divide by the expected total and append the shortfall as an extra
    /// "unaccounted" coordinate.
    Slack,
}

impl NormalizationMode {
    pub fn name(self) -> &'static str {
        match self {
            NormalizationMode::Strict => "strict",
            NormalizationMode::Rescale => "rescale",
            NormalizationMode::Slack => "slack",
        }
    }

    /// Number of coordinates produced for `metrics` input values.
    pub fn output_len(self, metrics: usize) -> usize {
        match self {
            NormalizationMode::Slack => metrics + 1,
            _ => metrics,
        }
    }
}

impl std::str::FromStr for NormalizationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(NormalizationMode::Strict),
            "rescale" => Ok(NormalizationMode::Rescale),
            "slack" => Ok(NormalizationMode::Slack),
            other => Err(format!("unknown normalization mode '{other}' (expected strict, rescale or slack)")),
        }
    }
}

pub fn barycentric_from_shares(
    values: &[f64],
    expected_total: f64,
    mode: NormalizationMode,
) -> Result<BarycentricPoint> {
    if !(expected_total.is_finite() && expected_total > 0.0) {
        return Err(GeometryError::InvalidTotal(expected_total));
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(GeometryError::NonFiniteShare { index });
        }
        if value < 0.0 {
            return Err(GeometryError::NegativeShare { index, value });
        }
    }
    let sum: f64 = values.iter().sum();
    let relative = (expected_total - sum) / expected_total;

    let coords = match mode {
        NormalizationMode::Strict => {
            if relative.abs() > STRICT_RELATIVE_TOLERANCE {
                return Err(GeometryError::SumRuleViolation { sum, expected: expected_total, relative });
            }
            let mut coords: Vec<f64> = values.iter().map(|v| v / expected_total).collect();
            renormalize(&mut coords);
            coords
        }
        NormalizationMode::Rescale => {
            if sum == 0.0 {
                return Err(GeometryError::ZeroTotal);
            }
            let mut coords: Vec<f64> = values.iter().map(|v| v / sum).collect();
            renormalize(&mut coords);
            coords
        }
        NormalizationMode::Slack => {
            if relative < -STRICT_RELATIVE_TOLERANCE {
                return Err(GeometryError::SumRuleViolation { sum, expected: expected_total, relative });
            }
            let mut coords: Vec<f64> = values.iter().map(|v| v / expected_total).collect();
            if relative >= 0.0 {
                // Computed the same way as an audit residual fraction.
                coords.push(relative);
            } else {
                coords.push(0.0);
                renormalize(&mut coords);
            }
            coords
        }
    };
    BarycentricPoint::new(coords)
}

fn renormalize(coords: &mut [f64]) {
    let sum: f64 = coords.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() > 1e-12 {
        coords.iter_mut().for_each(|c| *c /= sum);
    }
}

/// Cartesian position of `p` inside `e`: `Σ p_i · V_i`.
pub fn embed(p: &BarycentricPoint, e: &SimplexEmbedding) -> Result<CartesianPoint> {
    if p.len() != e.n() {
        return Err(GeometryError::DimensionMismatch { expected: e.n(), actual: p.len() });
    }
    let mut acc = [0.0f64; 3];
    for (share, vertex) in p.coords().iter().zip(e.vertices()) {
        for (a, v) in acc.iter_mut().zip(vertex.coords.iter()) {
            *a += share * v;
        }
    }
    Ok(CartesianPoint { coords: acc, dim: e.dim() })
}

/// Signed perpendicular distance from `c` to each face; entry `i` is the
/// distance to the face opposite vertex `i`, positive toward that vertex.
pub fn signed_face_distances(c: &CartesianPoint, e: &SimplexEmbedding) -> Result<Vec<f64>> {
    if c.dim() != e.dim() {
        return Err(GeometryError::DimensionMismatch { expected: e.dim(), actual: c.dim() });
    }
    let n = e.n();
    let mut out = Vec::with_capacity(n);
    for opposite in 0..n {
        let face: Vec<&CartesianPoint> =
            e.vertices().iter().enumerate().filter(|(i, _)| *i != opposite).map(|(_, v)| v).collect();
        let normal = match e.dim() {
            2 => {
                let t = face[1].sub(face[0]);
                [-t[1], t[0], 0.0]
            }
            3 => cross(face[1].sub(face[0]), face[2].sub(face[0])),
            other => return Err(GeometryError::UnsupportedDimension(other + 1)),
        };
        let length = dot(normal, normal).sqrt();
        let mut unit = normal.map(|v| v / length);
        if dot(e.vertex(opposite).sub(face[0]), unit) < 0.0 {
            unit = unit.map(|v| -v);
        }
        out.push(dot(c.sub(face[0]), unit));
    }
    Ok(out)
}

/// Recovers barycentric coordinates as face distances, rejecting points
/// outside the hull.
pub fn face_distances(c: &CartesianPoint, e: &SimplexEmbedding) -> Result<Vec<f64>> {
    let distances = signed_face_distances(c, e)?;
    if let Some((face, &distance)) = distances.iter().enumerate().find(|(_, d)| **d < -SUM_TOLERANCE) {
        return Err(GeometryError::OutsideSimplex { face, distance });
    }
    Ok(distances)
}

pub fn contains(c: &CartesianPoint, e: &SimplexEmbedding) -> bool {
    face_distances(c, e).is_ok()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Orbit angles for viewing a 3D embedding, in degrees.
///
/// Azimuth wraps into `[0, 360)`; elevation is clamped to `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ViewRotation {
    azimuth: f64,
    elevation: f64,
}

impl ViewRotation {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !(azimuth.is_finite() && elevation.is_finite()) {
            return Err(GeometryError::NonFiniteAngle);
        }
        let mut azimuth = azimuth.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        if azimuth >= 360.0 {
            azimuth = 0.0;
        }
        Ok(Self { azimuth, elevation: elevation.clamp(-90.0, 90.0) })
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }
}

/// Orthographic view of a 3D point: rotate by azimuth about the vertical
/// (z) axis, then by elevation about the horizontal screen (x) axis, and
/// keep `(x, z)` as screen coordinates.
pub fn rotate_project(c: &CartesianPoint, r: &ViewRotation) -> Result<CartesianPoint> {
    if c.dim() != 3 {
        return Err(GeometryError::DimensionMismatch { expected: 3, actual: c.dim() });
    }
    let (x, y, z) = (c.x(), c.y(), c.z());
    let (sa, ca) = r.azimuth.to_radians().sin_cos();
    let (se, ce) = r.elevation.to_radians().sin_cos();
    let x1 = x * ca - y * sa;
    let y1 = x * sa + y * ca;
    let z2 = y1 * se + z * ce;
    Ok(CartesianPoint::new2(x1, z2))
}

/// A gridline of constant share on one axis, as two boundary endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSegment {
    pub axis: usize,
    pub level: f64,
    pub from: BarycentricPoint,
    pub to: BarycentricPoint,
}

/// Trilinear gridlines for the triangle at every multiple of `step` below 1.
pub fn trilinear_gridlines(step: f64) -> Result<Vec<GridSegment>> {
    if !(step.is_finite() && step > 0.0 && step < 1.0) {
        return Err(GeometryError::InvalidStep(step));
    }
    let levels = ((1.0 / step) - SUM_TOLERANCE).ceil() as usize - 1;
    let mut segments = Vec::with_capacity(levels * 3);
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for k in 1..=levels {
            let level = k as f64 * step;
            let mut from = [0.0; 3];
            let mut to = [0.0; 3];
            from[axis] = level;
            to[axis] = level;
            from[a] = 1.0 - level;
            to[b] = 1.0 - level;
            segments.push(GridSegment {
                axis,
                level,
                from: BarycentricPoint::new(from.to_vec())?,
                to: BarycentricPoint::new(to.to_vec())?,
            });
        }
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn strict_normalization_of_offcenter_point() {
        let p = barycentric_from_shares(&[620.0, 280.0, 100.0], 1000.0, NormalizationMode::Strict).unwrap();
        assert_eq!(p.coords(), &[0.62, 0.28, 0.1]);
    }

    #[test]
    fn strict_vertex_purity() {
        let p = barycentric_from_shares(&[1000.0, 0.0, 0.0], 1000.0, NormalizationMode::Strict).unwrap();
        assert_eq!(p.coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn strict_rejects_ten_percent_shortfall() {
        let err = barycentric_from_shares(&[300.0, 500.0, 100.0], 1000.0, NormalizationMode::Strict).unwrap_err();
        match err {
            GeometryError::SumRuleViolation { relative, .. } => assert!(close(relative, 0.1, 1e-12)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slack_appends_residual() {
        let p = barycentric_from_shares(&[300.0, 500.0, 100.0], 1000.0, NormalizationMode::Slack).unwrap();
        let expected = [0.3, 0.5, 0.1, 0.1];
        for (a, b) in p.coords().iter().zip(expected) {
            assert!(close(*a, b, 1e-12), "{:?}", p.coords());
        }
    }

    #[test]
    fn slack_rejects_overfull() {
        let err = barycentric_from_shares(&[600.0, 600.0, 0.0], 1000.0, NormalizationMode::Slack).unwrap_err();
        assert!(matches!(err, GeometryError::SumRuleViolation { .. }));
    }

    #[test]
    fn rescale_divides_by_actual_sum() {
        let p = barycentric_from_shares(&[300.0, 500.0, 200.0], 2000.0, NormalizationMode::Rescale).unwrap();
        assert_eq!(p.coords(), &[0.3, 0.5, 0.2]);
        let err = barycentric_from_shares(&[0.0, 0.0, 0.0], 1000.0, NormalizationMode::Rescale).unwrap_err();
        assert_eq!(err, GeometryError::ZeroTotal);
    }

    #[test]
    fn negative_share_rejected() {
        let err = barycentric_from_shares(&[-1.0, 500.0, 501.0], 1000.0, NormalizationMode::Rescale).unwrap_err();
        assert!(matches!(err, GeometryError::NegativeShare { index: 0, .. }));
    }

    #[test]
    fn invalid_total_rejected() {
        assert!(matches!(
            barycentric_from_shares(&[1.0, 1.0], 0.0, NormalizationMode::Strict),
            Err(GeometryError::InvalidTotal(_))
        ));
    }

    #[test]
    fn triangle_vertices_exact() {
        let e = simplex_embedding(3).unwrap();
        let s = 3f64.sqrt();
        assert_eq!(e.vertex(0), CartesianPoint::new2(1.0 / s, 1.0));
        assert_eq!(e.vertex(1), CartesianPoint::new2(0.0, 0.0));
        assert_eq!(e.vertex(2), CartesianPoint::new2(2.0 / s, 0.0));
        assert!(close(e.vertex(0).x(), 0.577_350_269, 1e-9));
        assert!(close(e.vertex(2).x(), 1.154_700_538, 1e-9));
    }

    #[test]
    fn tetrahedron_vertices() {
        let e = simplex_embedding(4).unwrap();
        assert_eq!(e.vertex(0), CartesianPoint::new3(0.0, 0.0, 1.0));
        for v in &e.vertices()[1..] {
            assert!(close((v.x() * v.x() + v.y() * v.y()).sqrt(), 0.5f64.sqrt(), 1e-12));
            assert_eq!(v.z(), 0.0);
        }
        // edge length √(3/2) from solving a·√(2/3) = 1
        let edge = 1.5f64.sqrt();
        for (i, j) in e.edges() {
            assert!(close(e.vertex(i).distance(&e.vertex(j)), edge, 1e-9));
        }
        assert_eq!(e.edges().len(), 6);
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(simplex_embedding(5).unwrap_err(), GeometryError::UnsupportedDimension(5));
        assert_eq!(simplex_embedding(2).unwrap_err(), GeometryError::UnsupportedDimension(2));
    }

    #[test]
    fn embed_centroid() {
        let e = simplex_embedding(3).unwrap();
        let c = embed(&BarycentricPoint::centroid(3).unwrap(), &e).unwrap();
        assert!(close(c.x(), 0.57735, 1e-5));
        assert!(close(c.y(), 0.33333, 1e-5));
    }

    #[test]
    fn embed_offcenter_point() {
        let e = simplex_embedding(3).unwrap();
        let p = BarycentricPoint::new(vec![0.62, 0.28, 0.10]).unwrap();
        let c = embed(&p, &e).unwrap();
        // (0.62 + 2 * 0.10) / √3
        assert!(close(c.x(), 0.4734, 1e-4));
        assert!(close(c.y(), 0.62, 1e-4));
    }

    #[test]
    fn embed_dimension_mismatch() {
        let e = simplex_embedding(3).unwrap();
        let p = BarycentricPoint::centroid(4).unwrap();
        assert!(matches!(embed(&p, &e), Err(GeometryError::DimensionMismatch { expected: 3, actual: 4 })));
    }

    #[test]
    fn face_distances_of_vertices() {
        for n in [3, 4] {
            let e = simplex_embedding(n).unwrap();
            for i in 0..n {
                let d = face_distances(&e.vertex(i), &e).unwrap();
                for (j, dj) in d.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(close(*dj, want, 1e-12), "n={n} i={i} {d:?}");
                }
            }
        }
    }

    #[test]
    fn face_distances_rejects_outside() {
        let e = simplex_embedding(3).unwrap();
        let err = face_distances(&CartesianPoint::new2(-0.1, 0.0), &e).unwrap_err();
        assert!(matches!(err, GeometryError::OutsideSimplex { .. }));
    }

    #[test]
    fn rotate_identity_and_periodicity() {
        let apex = CartesianPoint::new3(0.0, 0.0, 1.0);
        let id = rotate_project(&apex, &ViewRotation::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(id, CartesianPoint::new2(0.0, 1.0));

        let c = CartesianPoint::new3(0.3, -0.2, 0.4);
        let a = rotate_project(&c, &ViewRotation::new(360.0, 0.0).unwrap()).unwrap();
        let b = rotate_project(&c, &ViewRotation::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rotate_apex_at_full_elevation() {
        let apex = CartesianPoint::new3(0.0, 0.0, 1.0);
        let p = rotate_project(&apex, &ViewRotation::new(0.0, 90.0).unwrap()).unwrap();
        assert!(close(p.x(), 0.0, 1e-9) && close(p.y(), 0.0, 1e-9));
    }

    #[test]
    fn rotation_normalization() {
        let r = ViewRotation::new(-30.0, 120.0).unwrap();
        assert_eq!(r.azimuth(), 330.0);
        assert_eq!(r.elevation(), 90.0);
        assert_eq!(ViewRotation::new(720.0, -95.0).unwrap(), ViewRotation::new(0.0, -90.0).unwrap());
        assert_eq!(ViewRotation::new(f64::NAN, 0.0).unwrap_err(), GeometryError::NonFiniteAngle);
    }

    #[test]
    fn rotate_project_rejects_2d() {
        let err = rotate_project(&CartesianPoint::new2(0.0, 0.0), &ViewRotation::default()).unwrap_err();
        assert!(matches!(err, GeometryError::DimensionMismatch { .. }));
    }

    #[test]
    fn gridline_counts() {
        let half = trilinear_gridlines(0.5).unwrap();
        assert_eq!(half.len(), 3);
        for seg in &half {
            assert!(close(seg.from.coords().iter().sum::<f64>(), 1.0, 1e-12));
            assert!(close(seg.to.coords().iter().sum::<f64>(), 1.0, 1e-12));
            assert_eq!(seg.from.coords()[seg.axis], 0.5);
        }
        assert_eq!(trilinear_gridlines(0.1).unwrap().len(), 27);
        assert_eq!(trilinear_gridlines(0.3).unwrap().len(), 9);
        assert_eq!(trilinear_gridlines(1.5).unwrap_err(), GeometryError::InvalidStep(1.5));
        assert!(trilinear_gridlines(0.0).is_err());
    }

    #[test]
    fn gridline_endpoints_on_boundary() {
        let e = simplex_embedding(3).unwrap();
        for seg in trilinear_gridlines(0.25).unwrap() {
            for end in [&seg.from, &seg.to] {
                let c = embed(end, &e).unwrap();
                let d = face_distances(&c, &e).unwrap();
                assert!(d.iter().any(|x| x.abs() < 1e-12), "endpoint not on boundary: {d:?}");
                assert!(close(d[seg.axis], seg.level, 1e-12));
            }
        }
    }

    #[test]
    fn barycentric_point_validation() {
        assert!(BarycentricPoint::new(vec![1.0]).is_err());
        assert!(BarycentricPoint::new(vec![0.5, 0.6]).is_err());
        let p = BarycentricPoint::new(vec![-1e-12, 1.0 + 1e-12]).unwrap();
        assert_eq!(p.coords()[0], 0.0);
    }
}

//! Surface complexes: finitely many marked planes with slits, gluings and
//! surgeries, the truncated presentation of an infinite translation surface.
//!
//! Every plane carries a chart matrix in GL+(2, Q); gluing validity and all
//! disjointness checks are exact. Gluing two finite slits by translation
//! produces two cone points of angle 4 pi; gluing two infinite rays produces a
//! degree-two branch point at the matched base points.

use crate::geom::*;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

pub const SCHEMA: &str = "flatsurf-complex/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Plane {
    pub id: String,
    pub chart: Mat2,
    /// Models an embedded closed half-plane `R x [0, oo)` rather than a full
    /// plane (slit placement is then restricted to `y >= 0`).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub half_plane: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitGeom {
    /// Finite slit: holonomy vector from the base point, in plane coordinates.
    Segment(Vec2),
    /// Infinite slit: direction of the ray from the base point.
    Ray(Vec2),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Slit {
    pub label: String,
    pub plane: String,
    pub base: Vec2,
    pub geom: SlitGeom,
}

impl Slit {
    pub fn piece(&self) -> Piece {
        match &self.geom {
            SlitGeom::Segment(h) => Piece::seg(self.base.clone(), h.clone()),
            SlitGeom::Ray(d) => Piece::ray(self.base.clone(), d.clone()),
        }
    }

    pub fn end(&self) -> Option<Vec2> {
        match &self.geom {
            SlitGeom::Segment(h) => Some(self.base.add(h)),
            SlitGeom::Ray(_) => None,
        }
    }
}

/// A closed line piece `base + t * dir`, `t` in `[0, t_max]` or `[0, oo)`.
#[derive(Clone, Debug)]
pub struct Piece {
    pub base: Vec2,
    pub dir: Vec2,
    pub t_max: Option<Q>,
}

impl Piece {
    pub fn seg(base: Vec2, holonomy: Vec2) -> Piece {
        Piece { base, dir: holonomy, t_max: Some(Q::one()) }
    }

    pub fn ray(base: Vec2, dir: Vec2) -> Piece {
        Piece { base, dir, t_max: None }
    }
}

/// Do two closed pieces intersect (including touching and collinear overlap)?
pub fn pieces_intersect(p1: &Piece, p2: &Piece) -> bool {
    let in_range = |t: &Q, t_max: &Option<Q>| {
        !t.is_negative() && t_max.as_ref().map_or(true, |m| t <= m)
    };
    let denom = p1.dir.cross(&p2.dir);
    let r = p2.base.sub(&p1.base);
    if denom.is_zero() {
        if !p1.dir.cross(&r).is_zero() {
            return false;
        }
        // collinear: compare parameter intervals on p1's line
        let len2 = p1.dir.norm2();
        let t0 = r.dot(&p1.dir) / &len2;
        let step = p2.dir.dot(&p1.dir) / &len2; // nonzero, sign = orientation
        let t1 = p2.t_max.as_ref().map(|m| &t0 + &step * m);
        let (lo2, hi2) = if step.is_positive() {
            (Some(t0), t1)
        } else {
            match t1 {
                Some(t1) => (Some(t1), Some(t0)),
                None => (None, Some(t0)),
            }
        };
        let hi1 = p1.t_max.clone();
        // intervals [0, hi1] and [lo2, hi2] with None = unbounded
        let below = matches!(&hi1, Some(h) if matches!(&lo2, Some(l) if l > h));
        let above = matches!(&hi2, Some(h) if h.is_negative());
        return !(below || above);
    }
    let t = r.cross(&p2.dir) / &denom;
    let u = r.cross(&p1.dir) / &denom;
    in_range(&t, &p1.t_max) && in_range(&u, &p2.t_max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gluing {
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SurgeryKind {
    /// A centrally symmetric convex polygon carved out of the plane, opposite
    /// sides glued by translation; `sides` lists half of the boundary. With
    /// an even number of half-sides all corners become one cone point of
    /// angle `(4k - 2) pi` for `2k` half-sides (the icosagon gives 18 pi).
    Polygon { sides: Vec<Vec2> },
    /// Cyclic branched cover of the given degree, ramified at the base point,
    /// cut along the ray in direction `dir`; `sheets` lists the auxiliary
    /// plane ids (the base plane is sheet 0).
    BranchedCover { degree: u32, dir: Vec2, sheets: Vec<String> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Surgery {
    pub id: String,
    pub plane: String,
    /// Polygon: center of symmetry. Branched cover: the ramification point.
    pub base: Vec2,
    #[serde(flatten)]
    pub kind: SurgeryKind,
}

impl Surgery {
    /// Boundary polygon in plane coordinates (polygons only).
    pub fn polygon(&self) -> Option<ConvexPoly> {
        let SurgeryKind::Polygon { sides } = &self.kind else { return None };
        let mut half = Vec2::zero();
        for s in sides {
            half = half.add(s);
        }
        let mut p = self.base.sub(&half.scale(&qr(1, 2)));
        let mut verts = Vec::with_capacity(2 * sides.len());
        for s in sides.iter().chain(sides.iter()) {
            verts.push(p.clone());
            let s = if verts.len() > sides.len() { s.neg() } else { s.clone() };
            p = p.add(&s);
        }
        Some(ConvexPoly { verts })
    }

    /// Cone angle at the surgery point, as a multiple of pi.
    pub fn cone_angle_pi(&self) -> u64 {
        match &self.kind {
            SurgeryKind::Polygon { sides } => 2 * sides.len() as u64 - 2,
            SurgeryKind::BranchedCover { degree, .. } => 2 * *degree as u64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpenStub {
    /// Label of a slit whose scheduled partner lies beyond the truncation.
    pub slit: String,
    pub note: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SurfaceComplex {
    pub schema: String,
    pub planes: Vec<Plane>,
    pub slits: Vec<Slit>,
    pub gluings: Vec<Gluing>,
    pub surgeries: Vec<Surgery>,
    pub open_stubs: Vec<OpenStub>,
    /// Builder-recorded truncation parameters, for reproducibility.
    pub truncation: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("duplicate plane id {0:?}")]
    DuplicatePlane(String),
    #[error("unknown plane {0:?}")]
    UnknownPlane(String),
    #[error("duplicate slit label {0:?}")]
    DuplicateSlit(String),
    #[error("unknown slit {0:?}")]
    UnknownSlit(String),
    #[error("slit {new:?} is not disjoint from {existing:?} on plane {plane:?}")]
    SlitOverlap { new: String, existing: String, plane: String },
    #[error("slit {slit:?} meets surgery {surgery:?} on plane {plane:?}")]
    SlitMeetsSurgery { slit: String, surgery: String, plane: String },
    #[error("slit {0:?} has degenerate geometry")]
    DegenerateSlit(String),
    #[error("slit {0:?} leaves the half-plane y >= 0 of plane {1:?}")]
    OutsideHalfPlane(String, String),
    #[error("slit {0:?} is already glued (to {1:?})")]
    AlreadyGlued(String, String),
    #[error("cannot glue a finite slit to an infinite one: {0:?} vs {1:?}")]
    MixedGluing(String, String),
    #[error(
        "holonomy mismatch gluing {a:?} to {b:?}: image holonomies {va:?} and {vb:?} \
         are not parallel of equal length"
    )]
    HolonomyMismatch { a: String, b: String, va: Vec2, vb: Vec2 },
    #[error("surgery {new:?} is not disjoint from {existing:?} on plane {plane:?}")]
    SurgeryOverlap { new: String, existing: String, plane: String },
    #[error("duplicate surgery id {0:?}")]
    DuplicateSurgery(String),
    #[error("matrix must have positive determinant")]
    NotOrientationPreserving,
    #[error("branched cover degree must be at least 2")]
    BadDegree,
    #[error("bad schema {0:?}, expected {SCHEMA:?}")]
    BadSchema(String),
    #[error("json: {0}")]
    Json(String),
}

impl SurfaceComplex {
    pub fn new() -> Self {
        SurfaceComplex { schema: SCHEMA.to_string(), ..Default::default() }
    }

    pub fn plane(&self, id: &str) -> Result<&Plane, ComplexError> {
        self.planes
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| ComplexError::UnknownPlane(id.to_string()))
    }

    pub fn slit(&self, label: &str) -> Result<&Slit, ComplexError> {
        self.slits
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| ComplexError::UnknownSlit(label.to_string()))
    }

    pub fn slits_on(&self, plane: &str) -> impl Iterator<Item = &Slit> {
        let plane = plane.to_string();
        self.slits.iter().filter(move |s| s.plane == plane)
    }

    pub fn surgeries_on(&self, plane: &str) -> impl Iterator<Item = &Surgery> {
        let plane = plane.to_string();
        self.surgeries.iter().filter(move |s| s.plane == plane)
    }

    /// Partner of a glued slit.
    pub fn partner(&self, label: &str) -> Option<&str> {
        self.gluings.iter().find_map(|g| {
            if g.a == label {
                Some(g.b.as_str())
            } else if g.b == label {
                Some(g.a.as_str())
            } else {
                None
            }
        })
    }

    pub fn is_stub(&self, label: &str) -> bool {
        self.open_stubs.iter().any(|s| s.slit == label)
    }

    pub fn add_plane(&mut self, id: &str, chart: Mat2, half_plane: bool) -> Result<(), ComplexError> {
        if self.planes.iter().any(|p| p.id == id) {
            return Err(ComplexError::DuplicatePlane(id.to_string()));
        }
        self.planes.push(Plane { id: id.to_string(), chart, half_plane });
        Ok(())
    }

    pub fn add_slit(&mut self, slit: Slit) -> Result<(), ComplexError> {
        let plane = self.plane(&slit.plane)?.clone();
        if self.slits.iter().any(|s| s.label == slit.label) {
            return Err(ComplexError::DuplicateSlit(slit.label.clone()));
        }
        let dir = match &slit.geom {
            SlitGeom::Segment(h) => h,
            SlitGeom::Ray(d) => d,
        };
        if dir.is_zero() {
            return Err(ComplexError::DegenerateSlit(slit.label.clone()));
        }
        if plane.half_plane {
            let ok = match &slit.geom {
                SlitGeom::Segment(h) => {
                    !slit.base.y.is_negative() && !(&slit.base.y + &h.y).is_negative()
                }
                SlitGeom::Ray(d) => !slit.base.y.is_negative() && !d.y.is_negative(),
            };
            if !ok {
                return Err(ComplexError::OutsideHalfPlane(slit.label.clone(), plane.id));
            }
        }
        let piece = slit.piece();
        for other in self.slits_on(&slit.plane) {
            if pieces_intersect(&piece, &other.piece()) {
                return Err(ComplexError::SlitOverlap {
                    new: slit.label.clone(),
                    existing: other.label.clone(),
                    plane: slit.plane.clone(),
                });
            }
        }
        for sg in self.surgeries_on(&slit.plane) {
            if surgery_meets_piece(sg, &piece) {
                return Err(ComplexError::SlitMeetsSurgery {
                    slit: slit.label.clone(),
                    surgery: sg.id.clone(),
                    plane: slit.plane.clone(),
                });
            }
        }
        self.slits.push(slit);
        Ok(())
    }

    /// Image holonomy (chart applied), for gluing checks.
    pub fn image_holonomy(&self, slit: &Slit) -> Result<Vec2, ComplexError> {
        let chart = &self.plane(&slit.plane)?.chart;
        Ok(match &slit.geom {
            SlitGeom::Segment(h) => chart.apply(h),
            SlitGeom::Ray(d) => chart.apply(d),
        })
    }

    pub fn glue(&mut self, a: &str, b: &str) -> Result<(), ComplexError> {
        for l in [a, b] {
            if let Some(p) = self.partner(l) {
                return Err(ComplexError::AlreadyGlued(l.to_string(), p.to_string()));
            }
        }
        let sa = self.slit(a)?.clone();
        let sb = self.slit(b)?.clone();
        let va = self.image_holonomy(&sa)?;
        let vb = self.image_holonomy(&sb)?;
        let ok = match (&sa.geom, &sb.geom) {
            (SlitGeom::Segment(_), SlitGeom::Segment(_)) => {
                // parallel, equal length: equal up to sign
                va == vb || va == vb.neg()
            }
            (SlitGeom::Ray(_), SlitGeom::Ray(_)) => va.same_direction(&vb),
            _ => return Err(ComplexError::MixedGluing(a.to_string(), b.to_string())),
        };
        if !ok {
            return Err(ComplexError::HolonomyMismatch {
                a: a.to_string(),
                b: b.to_string(),
                va,
                vb,
            });
        }
        self.gluings.push(Gluing { a: a.to_string(), b: b.to_string() });
        Ok(())
    }

    pub fn mark_stub(&mut self, slit: &str, note: &str) {
        self.open_stubs.push(OpenStub { slit: slit.to_string(), note: note.to_string() });
    }

    /// Forget marked slits that ended up unglued and are not open stubs.
    pub fn forget_unglued(&mut self) {
        let glued: HashSet<String> = self
            .gluings
            .iter()
            .flat_map(|g| [g.a.clone(), g.b.clone()])
            .collect();
        let stubs: HashSet<String> = self.open_stubs.iter().map(|s| s.slit.clone()).collect();
        self.slits
            .retain(|s| glued.contains(&s.label) || stubs.contains(&s.label));
    }

    fn add_surgery(&mut self, sg: Surgery) -> Result<(), ComplexError> {
        self.plane(&sg.plane)?;
        if self.surgeries.iter().any(|s| s.id == sg.id) {
            return Err(ComplexError::DuplicateSurgery(sg.id.clone()));
        }
        for s in self.slits_on(&sg.plane) {
            if surgery_meets_piece(&sg, &s.piece()) {
                return Err(ComplexError::SlitMeetsSurgery {
                    slit: s.label.clone(),
                    surgery: sg.id.clone(),
                    plane: sg.plane.clone(),
                });
            }
        }
        for other in self.surgeries_on(&sg.plane) {
            if surgeries_meet(&sg, other) {
                return Err(ComplexError::SurgeryOverlap {
                    new: sg.id.clone(),
                    existing: other.id.clone(),
                    plane: sg.plane.clone(),
                });
            }
        }
        self.surgeries.push(sg);
        Ok(())
    }

    /// Carve a centrally symmetric convex `2m`-gon centered at `center` with
    /// the canonical pairwise distinct side lengths, scaled so the diameter
    /// is below `max_diam`. `m` must be even (one cone point, angle
    /// `(2m - 2) pi`) and at most the canonical direction pool (10).
    pub fn polygon_surgery(
        &mut self,
        id: &str,
        plane: &str,
        center: Vec2,
        half_sides: usize,
        max_diam: &Q,
    ) -> Result<(), ComplexError> {
        assert!(half_sides % 2 == 0 && (4..=10).contains(&half_sides));
        assert!(max_diam.is_positive());
        // Pythagorean directions with strictly increasing angle in [0, 90):
        // rational unit vectors keep side lengths rational.
        const DIRS: [(i64, i64, i64); 10] = [
            (1, 0, 1),
            (24, 7, 25),
            (12, 5, 13),
            (15, 8, 17),
            (4, 3, 5),
            (21, 20, 29),
            (3, 4, 5),
            (8, 15, 17),
            (5, 12, 13),
            (7, 24, 25),
        ];
        let sides_raw: Vec<Vec2> = DIRS[..half_sides]
            .iter()
            .enumerate()
            .map(|(i, (x, y, n))| {
                let len = q(11 + i as i64);
                Vec2::new(&q(*x) / q(*n) * &len, &q(*y) / q(*n) * &len)
            })
            .collect();
        // circumradius bound for the unscaled polygon
        let probe = Surgery {
            id: id.to_string(),
            plane: plane.to_string(),
            base: Vec2::zero(),
            kind: SurgeryKind::Polygon { sides: sides_raw.clone() },
        };
        let r2 = probe
            .polygon()
            .unwrap()
            .verts
            .iter()
            .map(|v| v.norm2())
            .max()
            .unwrap();
        let bound = Q::from_integer(sqrt_upper_bound(&r2) + 1);
        let scale = max_diam / (Q::from_integer(2.into()) * bound);
        let sides: Vec<Vec2> = sides_raw.iter().map(|s| s.scale(&scale)).collect();
        self.add_surgery(Surgery {
            id: id.to_string(),
            plane: plane.to_string(),
            base: center,
            kind: SurgeryKind::Polygon { sides },
        })
    }

    /// The canonical 20-gon: one cone point of angle 18 pi, genus five, ten
    /// pairwise distinct side lengths, diameter below `max_diam`.
    pub fn icosagon_surgery(
        &mut self,
        id: &str,
        plane: &str,
        center: Vec2,
        max_diam: &Q,
    ) -> Result<(), ComplexError> {
        self.polygon_surgery(id, plane, center, 10, max_diam)
    }

    /// Cyclic branched cover of the plane, ramified at `point`, cut along the
    /// ray in direction `dir`; adds `degree - 1` auxiliary sheet planes.
    pub fn branched_cover_surgery(
        &mut self,
        id: &str,
        plane: &str,
        point: Vec2,
        dir: Vec2,
        degree: u32,
    ) -> Result<(), ComplexError> {
        if degree < 2 {
            return Err(ComplexError::BadDegree);
        }
        let chart = self.plane(plane)?.chart.clone();
        let cut = Piece::ray(point.clone(), dir.clone());
        for s in self.slits_on(plane) {
            if pieces_intersect(&cut, &s.piece()) {
                return Err(ComplexError::SlitMeetsSurgery {
                    slit: s.label.clone(),
                    surgery: id.to_string(),
                    plane: plane.to_string(),
                });
            }
        }
        let mut sheets = Vec::new();
        for k in 1..degree {
            let sheet_id = format!("{plane}#{k}");
            self.add_plane(&sheet_id, chart.clone(), false)?;
            sheets.push(sheet_id);
        }
        self.add_surgery(Surgery {
            id: id.to_string(),
            plane: plane.to_string(),
            base: point,
            kind: SurgeryKind::BranchedCover { degree, dir, sheets },
        })
    }

    /// Post-compose every chart with `a` (the GL+(2, Q) action).
    pub fn apply_matrix(&mut self, a: &Mat2) -> Result<(), ComplexError> {
        if !a.det().is_positive() {
            return Err(ComplexError::NotOrientationPreserving);
        }
        for p in &mut self.planes {
            p.chart = a.mul(&p.chart);
        }
        Ok(())
    }

    /// Rename every plane and slit with a prefix (used for copies in Cayley
    /// assemblies).
    pub fn prefixed(&self, prefix: &str) -> SurfaceComplex {
        let tag = |s: &str| format!("{prefix}{s}");
        SurfaceComplex {
            schema: self.schema.clone(),
            planes: self
                .planes
                .iter()
                .map(|p| Plane { id: tag(&p.id), ..p.clone() })
                .collect(),
            slits: self
                .slits
                .iter()
                .map(|s| Slit { label: tag(&s.label), plane: tag(&s.plane), ..s.clone() })
                .collect(),
            gluings: self
                .gluings
                .iter()
                .map(|g| Gluing { a: tag(&g.a), b: tag(&g.b) })
                .collect(),
            surgeries: self
                .surgeries
                .iter()
                .map(|s| Surgery {
                    id: tag(&s.id),
                    plane: tag(&s.plane),
                    kind: match &s.kind {
                        SurgeryKind::BranchedCover { degree, dir, sheets } => {
                            SurgeryKind::BranchedCover {
                                degree: *degree,
                                dir: dir.clone(),
                                sheets: sheets.iter().map(|x| tag(x)).collect(),
                            }
                        }
                        k => k.clone(),
                    },
                    ..s.clone()
                })
                .collect(),
            open_stubs: self
                .open_stubs
                .iter()
                .map(|s| OpenStub { slit: tag(&s.slit), note: s.note.clone() })
                .collect(),
            truncation: self.truncation.clone(),
        }
    }

    /// Merge another complex into this one (ids must not clash).
    pub fn absorb(&mut self, other: SurfaceComplex) -> Result<(), ComplexError> {
        for p in &other.planes {
            if self.planes.iter().any(|q| q.id == p.id) {
                return Err(ComplexError::DuplicatePlane(p.id.clone()));
            }
        }
        for s in &other.slits {
            if self.slits.iter().any(|q| q.label == s.label) {
                return Err(ComplexError::DuplicateSlit(s.label.clone()));
            }
        }
        self.planes.extend(other.planes);
        self.slits.extend(other.slits);
        self.gluings.extend(other.gluings);
        self.surgeries.extend(other.surgeries);
        self.open_stubs.extend(other.open_stubs);
        for (k, v) in other.truncation {
            self.truncation.entry(k).or_insert(v);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<SurfaceComplex, ComplexError> {
        let c: SurfaceComplex =
            serde_json::from_str(text).map_err(|e| ComplexError::Json(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Structural validation: referenced ids exist, slit labels are unique,
    /// each slit is glued at most once, and every gluing passes the holonomy
    /// gate.
    pub fn validate(&self) -> Result<(), ComplexError> {
        if self.schema != SCHEMA {
            return Err(ComplexError::BadSchema(self.schema.clone()));
        }
        let mut seen = HashSet::new();
        for p in &self.planes {
            if !seen.insert(&p.id) {
                return Err(ComplexError::DuplicatePlane(p.id.clone()));
            }
        }
        let mut labels = HashSet::new();
        for s in &self.slits {
            self.plane(&s.plane)?;
            if !labels.insert(&s.label) {
                return Err(ComplexError::DuplicateSlit(s.label.clone()));
            }
        }
        let mut glued: HashMap<&str, &str> = HashMap::new();
        for g in &self.gluings {
            let sa = self.slit(&g.a)?;
            let sb = self.slit(&g.b)?;
            for l in [&g.a, &g.b] {
                if let Some(p) = glued.insert(l, if l == &g.a { &g.b } else { &g.a }) {
                    return Err(ComplexError::AlreadyGlued(l.clone(), p.to_string()));
                }
            }
            let va = self.image_holonomy(sa)?;
            let vb = self.image_holonomy(sb)?;
            let ok = match (&sa.geom, &sb.geom) {
                (SlitGeom::Segment(_), SlitGeom::Segment(_)) => va == vb || va == vb.neg(),
                (SlitGeom::Ray(_), SlitGeom::Ray(_)) => va.same_direction(&vb),
                _ => return Err(ComplexError::MixedGluing(g.a.clone(), g.b.clone())),
            };
            if !ok {
                return Err(ComplexError::HolonomyMismatch {
                    a: g.a.clone(),
                    b: g.b.clone(),
                    va,
                    vb,
                });
            }
        }
        for sg in &self.surgeries {
            self.plane(&sg.plane)?;
            if let SurgeryKind::BranchedCover { sheets, degree, .. } = &sg.kind {
                if *degree < 2 || sheets.len() + 1 != *degree as usize {
                    return Err(ComplexError::BadDegree);
                }
                for s in sheets {
                    self.plane(s)?;
                }
            }
        }
        Ok(())
    }
}

fn surgery_meets_piece(sg: &Surgery, piece: &Piece) -> bool {
    match &sg.kind {
        SurgeryKind::Polygon { .. } => {
            let poly = sg.polygon().unwrap();
            // treat the closed polygon as the obstacle
            poly_meets_piece(&poly, piece)
        }
        SurgeryKind::BranchedCover { dir, .. } => {
            pieces_intersect(&Piece::ray(sg.base.clone(), dir.clone()), piece)
        }
    }
}

fn poly_meets_piece(poly: &ConvexPoly, piece: &Piece) -> bool {
    if poly.contains_interior(&piece.base) {
        return true;
    }
    poly.edges().any(|e| pieces_intersect(&Piece::seg(e.a.clone(), e.dir()), piece))
        || match &piece.t_max {
            Some(_) => poly.seg_meets_interior(&Seg::new(
                piece.base.clone(),
                piece.base.add(&piece.dir.scale(piece.t_max.as_ref().unwrap())),
            )),
            None => false, // a ray missing every edge is outside
        }
}

fn surgeries_meet(a: &Surgery, b: &Surgery) -> bool {
    match (&a.kind, &b.kind) {
        (SurgeryKind::Polygon { .. }, SurgeryKind::Polygon { .. }) => {
            let pa = a.polygon().unwrap();
            let pb = b.polygon().unwrap();
            pa.edges().any(|e| poly_meets_piece(&pb, &Piece::seg(e.a.clone(), e.dir())))
                || pb.contains_interior(&pa.verts[0])
                || pa.contains_interior(&pb.verts[0])
        }
        (SurgeryKind::Polygon { .. }, SurgeryKind::BranchedCover { dir, .. }) => {
            poly_meets_piece(&a.polygon().unwrap(), &Piece::ray(b.base.clone(), dir.clone()))
        }
        (SurgeryKind::BranchedCover { dir, .. }, SurgeryKind::Polygon { .. }) => {
            poly_meets_piece(&b.polygon().unwrap(), &Piece::ray(a.base.clone(), dir.clone()))
        }
        (SurgeryKind::BranchedCover { dir: da, .. }, SurgeryKind::BranchedCover { dir: db, .. }) => {
            pieces_intersect(
                &Piece::ray(a.base.clone(), da.clone()),
                &Piece::ray(b.base.clone(), db.clone()),
            )
        }
    }
}

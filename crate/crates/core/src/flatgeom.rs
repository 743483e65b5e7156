//! Flat geometry on surface complexes: cone-point bookkeeping, exact
//! straight-line development, saddle-connection enumeration and verification
//! of automorphism candidates.
//!
//! All geometry happens in image (chart-applied) coordinates, where every
//! transition across a gluing is a translation; development therefore keeps
//! a per-plane translation offset and nothing else. Results that touch the
//! truncation (open stubs, crossing caps) are flagged instead of guessed.

use crate::geom::*;
use crate::surface::*;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

/// A representative of a cone point: a marked point on one plane, in stored
/// (pre-chart) coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeRep {
    pub plane: String,
    pub point: Vec2,
}

/// A cone point of the glued surface: the identified representatives and the
/// total angle, in multiples of pi.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeClass {
    pub reps: Vec<ConeRep>,
    pub angle_pi: u64,
}

/// Cone points from local gluing and surgery combinatorics: each endpoint
/// pair of a glued finite slit gives angle 4 pi, a glued ray pair gives a
/// degree-two branch point (4 pi), a carved `2m`-gon gives `(2m-2) pi`, a
/// branched cover gives `2 pi * degree`.
pub fn audit_cone_angles(c: &SurfaceComplex) -> Result<Vec<ConeClass>, ComplexError> {
    let mut classes = Vec::new();
    for g in &c.gluings {
        let sa = c.slit(&g.a)?;
        let sb = c.slit(&g.b)?;
        let rep = |s: &Slit, p: Vec2| ConeRep { plane: s.plane.clone(), point: p };
        match (&sa.geom, &sb.geom) {
            (SlitGeom::Segment(_), SlitGeom::Segment(_)) => {
                let va = c.image_holonomy(sa)?;
                let vb = c.image_holonomy(sb)?;
                let (b_start, b_end) = if va == vb {
                    (sb.base.clone(), sb.end().unwrap())
                } else {
                    (sb.end().unwrap(), sb.base.clone())
                };
                classes.push(ConeClass {
                    reps: vec![rep(sa, sa.base.clone()), rep(sb, b_start)],
                    angle_pi: 4,
                });
                classes.push(ConeClass {
                    reps: vec![rep(sa, sa.end().unwrap()), rep(sb, b_end)],
                    angle_pi: 4,
                });
            }
            (SlitGeom::Ray(_), SlitGeom::Ray(_)) => {
                classes.push(ConeClass {
                    reps: vec![rep(sa, sa.base.clone()), rep(sb, sb.base.clone())],
                    angle_pi: 4,
                });
            }
            _ => return Err(ComplexError::MixedGluing(g.a.clone(), g.b.clone())),
        }
    }
    for sg in &c.surgeries {
        match &sg.kind {
            SurgeryKind::Polygon { .. } => {
                let poly = sg.polygon().unwrap();
                classes.push(ConeClass {
                    reps: poly
                        .verts
                        .iter()
                        .map(|p| ConeRep { plane: sg.plane.clone(), point: p.clone() })
                        .collect(),
                    angle_pi: sg.cone_angle_pi(),
                });
            }
            SurgeryKind::BranchedCover { sheets, .. } => {
                let mut reps =
                    vec![ConeRep { plane: sg.plane.clone(), point: sg.base.clone() }];
                for s in sheets {
                    reps.push(ConeRep { plane: s.clone(), point: sg.base.clone() });
                }
                classes.push(ConeClass { reps, angle_pi: sg.cone_angle_pi() });
            }
        }
    }
    Ok(classes)
}

/// Exact Gauss-Bonnet style bookkeeping: the total angle excess
/// `sum (angle - 2 pi)` must equal `4 pi` per glued finite slit pair, `2 pi`
/// per glued ray pair, `(2m - 4) pi` per carved `2m`-gon and
/// `(2d - 2) pi` per degree-`d` branched cover.
pub fn cone_excess_identity(c: &SurfaceComplex) -> Result<bool, ComplexError> {
    let classes = audit_cone_angles(c)?;
    let actual: i64 = classes.iter().map(|k| k.angle_pi as i64 - 2).sum();
    let mut expected = 0i64;
    for g in &c.gluings {
        expected += match &c.slit(&g.a)?.geom {
            SlitGeom::Segment(_) => 4,
            SlitGeom::Ray(_) => 2,
        };
    }
    for sg in &c.surgeries {
        expected += sg.cone_angle_pi() as i64 - 2;
    }
    Ok(actual == expected)
}

/// Axis-aligned window in stored plane coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rect {
    #[serde(with = "rat_serde")]
    pub x0: Q,
    #[serde(with = "rat_serde")]
    pub y0: Q,
    #[serde(with = "rat_serde")]
    pub x1: Q,
    #[serde(with = "rat_serde")]
    pub y1: Q,
}

impl Rect {
    pub fn of(x0: i64, y0: i64, x1: i64, y1: i64) -> Rect {
        Rect { x0: q(x0), y0: q(y0), x1: q(x1), y1: q(y1) }
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }
}

pub type Region = BTreeMap<String, Rect>;

/// Exact rational square root, when one exists.
fn exact_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Q::new(sn, sd))
}

/// With a region given, planes absent from the map count as outside it.
fn in_region(region: Option<&Region>, plane: &str, stored: &Vec2) -> bool {
    match region {
        Some(r) => match r.get(plane) {
            Some(rect) => rect.contains(stored),
            None => false,
        },
        None => true,
    }
}

/// One obstacle or portal feature of a plane, in image coordinates.
#[derive(Clone, Debug)]
struct Feature {
    piece: Piece,
    kind: FeatureKind,
}

#[derive(Clone, Debug)]
enum FeatureKind {
    /// Glued slit: index of the slit, partner label.
    Glued { slit: String },
    /// Open stub or unglued marked slit: touching it is indeterminate.
    Stub { slit: String },
    /// Polygon edge `j` of a surgery (2m edges).
    PolyEdge { surgery: String, edge: usize },
    /// Branch cut of a cyclic cover, on the given sheet (0 = base plane).
    BranchCut { surgery: String, sheet: usize },
}

/// Static geometry tables for development over a complex.
pub struct DevContext<'a> {
    pub complex: &'a SurfaceComplex,
    pub cones: Vec<ConeClass>,
    features: BTreeMap<String, Vec<Feature>>,
    /// carved polygon interiors per plane, in image coordinates
    polys: BTreeMap<String, Vec<ConvexPoly>>,
    /// cone rep -> class index
    rep_class: BTreeMap<(String, String), usize>,
}

fn key(plane: &str, p: &Vec2) -> (String, String) {
    (plane.to_string(), format!("{p:?}"))
}

impl<'a> DevContext<'a> {
    pub fn new(c: &'a SurfaceComplex) -> Result<Self, ComplexError> {
        let cones = audit_cone_angles(c)?;
        let mut rep_class = BTreeMap::new();
        for (i, k) in cones.iter().enumerate() {
            for r in &k.reps {
                rep_class.insert(key(&r.plane, &r.point), i);
            }
        }
        let mut features: BTreeMap<String, Vec<Feature>> = BTreeMap::new();
        for p in &c.planes {
            features.insert(p.id.clone(), vec![]);
        }
        for s in &c.slits {
            let chart = &c.plane(&s.plane)?.chart;
            let piece = match &s.geom {
                SlitGeom::Segment(h) => Piece::seg(chart.apply(&s.base), chart.apply(h)),
                SlitGeom::Ray(d) => Piece::ray(chart.apply(&s.base), chart.apply(d)),
            };
            let kind = if c.partner(&s.label).is_some() {
                FeatureKind::Glued { slit: s.label.clone() }
            } else {
                FeatureKind::Stub { slit: s.label.clone() }
            };
            features.get_mut(&s.plane).unwrap().push(Feature { piece, kind });
        }
        let mut polys: BTreeMap<String, Vec<ConvexPoly>> = BTreeMap::new();
        for sg in &c.surgeries {
            let chart = &c.plane(&sg.plane)?.chart;
            match &sg.kind {
                SurgeryKind::Polygon { .. } => {
                    let poly = sg.polygon().unwrap();
                    polys
                        .entry(sg.plane.clone())
                        .or_default()
                        .push(poly.map(chart, &Vec2::zero()));
                    let n = poly.verts.len();
                    for j in 0..n {
                        let a = chart.apply(&poly.verts[j]);
                        let b = chart.apply(&poly.verts[(j + 1) % n]);
                        features.get_mut(&sg.plane).unwrap().push(Feature {
                            piece: Piece::seg(a.clone(), b.sub(&a)),
                            kind: FeatureKind::PolyEdge { surgery: sg.id.clone(), edge: j },
                        });
                    }
                }
                SurgeryKind::BranchedCover { sheets, dir, .. } => {
                    let piece = Piece::ray(chart.apply(&sg.base), chart.apply(dir));
                    for (sheet, plane) in
                        std::iter::once(&sg.plane).chain(sheets.iter()).enumerate()
                    {
                        features.get_mut(plane.as_str()).unwrap().push(Feature {
                            piece: piece.clone(),
                            kind: FeatureKind::BranchCut {
                                surgery: sg.id.clone(),
                                sheet,
                            },
                        });
                    }
                }
            }
        }
        Ok(DevContext { complex: c, cones, features, polys, rep_class })
    }

    pub fn class_of(&self, plane: &str, point: &Vec2) -> Option<usize> {
        self.rep_class.get(&key(plane, point)).copied()
    }

    fn chart(&self, plane: &str) -> &Mat2 {
        &self.complex.plane(plane).unwrap().chart
    }

    /// Image-coordinate position of a stored point.
    pub fn img(&self, plane: &str, stored: &Vec2) -> Vec2 {
        self.chart(plane).apply(stored)
    }

    fn stored(&self, plane: &str, img: &Vec2) -> Vec2 {
        self.chart(plane).inverse().unwrap().apply(img)
    }

    /// Portal transport: crossing `feature` on `plane` at image point `x`
    /// moving in direction `u`; returns the target plane and the matched
    /// image point there.
    fn transport(
        &self,
        plane: &str,
        f: &Feature,
        x: &Vec2,
        u: &Vec2,
    ) -> Option<(String, Vec2)> {
        match &f.kind {
            FeatureKind::Stub { .. } => None,
            FeatureKind::Glued { slit } => {
                let a = self.complex.slit(slit).unwrap();
                let b = self.complex.slit(self.complex.partner(slit).unwrap()).unwrap();
                let va = self.complex.image_holonomy(a).unwrap();
                let vb = self.complex.image_holonomy(b).unwrap();
                let img_a_base = self.img(&a.plane, &a.base);
                let img_b_base = self.img(&b.plane, &b.base);
                let y = if va.same_direction(&vb) || va == vb {
                    // t on a matches t on b
                    img_b_base.add(&x.sub(&img_a_base))
                } else {
                    // reversed: t on a matches 1 - t on b; still a translation
                    let img_b_end = match &b.geom {
                        SlitGeom::Segment(_) => self.img(&b.plane, &b.end().unwrap()),
                        SlitGeom::Ray(_) => unreachable!("reversed rays cannot glue"),
                    };
                    img_b_end.add(&x.sub(&img_a_base))
                };
                Some((b.plane.clone(), y))
            }
            FeatureKind::PolyEdge { surgery, edge } => {
                let sg = self.complex.surgeries.iter().find(|s| s.id == *surgery).unwrap();
                let poly = sg.polygon().unwrap();
                let n = poly.verts.len();
                let m = n / 2;
                let chart = self.chart(&sg.plane);
                let vj = chart.apply(&poly.verts[*edge]);
                let vopp = chart.apply(&poly.verts[(*edge + m + 1) % n]);
                let tau = vopp.sub(&vj);
                let _ = u;
                Some((sg.plane.clone(), x.add(&tau)))
            }
            FeatureKind::BranchCut { surgery, sheet } => {
                let sg = self.complex.surgeries.iter().find(|s| s.id == *surgery).unwrap();
                let SurgeryKind::BranchedCover { degree, dir, sheets } = &sg.kind else {
                    unreachable!()
                };
                let d = *degree as usize;
                let cut_dir = self.chart(&sg.plane).apply(dir);
                let step = if cut_dir.cross(u).is_positive() { 1 } else { d - 1 };
                let next = (*sheet + step) % d;
                let target = if next == 0 {
                    sg.plane.clone()
                } else {
                    sheets[next - 1].clone()
                };
                let _ = plane;
                Some((target, x.clone()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxLength,
    ConePoint { plane: String, point: Vec2 },
    OpenStub { slit: String },
    LeftRegion { plane: String },
    LeftHalfPlane { plane: String },
    StepLimit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DevSegment {
    pub plane: String,
    /// Stored-coordinate endpoints on this plane.
    pub from: Vec2,
    pub to: Vec2,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<DevSegment>,
    pub termination: Termination,
    /// Squared length is exact; the length itself need not be rational.
    #[serde(with = "rat_serde")]
    pub length2: Q,
}

/// Follow the straight line from `start` (stored coordinates on `plane`) in
/// stored direction `dir` until it has image length `max_len`, hits a cone
/// point, an open stub, a region boundary or the edge of a half-plane.
pub fn develop_ray(
    ctx: &DevContext,
    plane: &str,
    start: &Vec2,
    dir: &Vec2,
    max_len: &Q,
    region: Option<&Region>,
) -> Trajectory {
    assert!(!dir.is_zero());
    let mut segments = Vec::new();
    let mut cur_plane = plane.to_string();
    let mut pos = ctx.img(plane, start);
    let u = ctx.img(plane, dir).sub(&ctx.img(plane, &Vec2::zero()));
    // length bookkeeping: track the line parameter t (image length is
    // t * |u|), with the budget held as the exact square
    let u_norm2 = u.norm2();
    let t_budget_sq = max_len.clone() * max_len / &u_norm2;
    let mut spent_t = Q::zero();

    let max_steps = 4096;
    for _ in 0..max_steps {
        // find earliest event parameter t > 0 along pos + t u
        let mut best: Option<(Q, Event)> = None;
        let mut consider = |t: Q, e: Event| {
            if !t.is_positive() {
                return;
            }
            match &best {
                Some((bt, _)) if *bt <= t => {}
                _ => best = Some((t, e)),
            }
        };

        #[derive(Clone, Debug)]
        enum Event {
            Portal(usize),
            Cone(Vec2),
            Region,
            HalfPlane,
        }

        let feats = &ctx.features[&cur_plane];
        for (i, f) in feats.iter().enumerate() {
            // intersection of the ray pos + t u with the feature piece
            let denom = u.cross(&f.piece.dir);
            let r = f.piece.base.sub(&pos);
            if denom.is_zero() {
                continue; // parallel or collinear: never a transversal event
            }
            let t = r.cross(&f.piece.dir) / &denom;
            let s = r.cross(&u) / &denom;
            let on_piece = !s.is_negative()
                && f.piece.t_max.as_ref().map_or(true, |m| &s <= m);
            if !on_piece {
                continue;
            }
            let hit = f.piece.base.add(&f.piece.dir.scale(&s));
            let at_endpoint =
                s.is_zero() || f.piece.t_max.as_ref().map_or(false, |m| &s == m);
            if at_endpoint {
                consider(t, Event::Cone(hit));
            } else {
                consider(t, Event::Portal(i));
            }
        }
        // isolated cone reps not on any feature (branch points are feature
        // endpoints already; polygon corners are edge endpoints) -- nothing
        // else to add.

        // region boundary in stored coordinates
        if let Some(rect) = region.and_then(|r| r.get(&cur_plane)) {
            let inv = ctx.chart(&cur_plane).inverse().unwrap();
            let p0 = inv.apply(&pos);
            let v = inv.apply(&u);
            for (c0, vc, lo, hi) in [
                (&p0.x, &v.x, &rect.x0, &rect.x1),
                (&p0.y, &v.y, &rect.y0, &rect.y1),
            ] {
                if !vc.is_zero() {
                    for bound in [lo, hi] {
                        let t = (bound - c0) / vc;
                        if t.is_positive() {
                            consider(t, Event::Region);
                        }
                    }
                }
            }
        }
        if ctx.complex.plane(&cur_plane).unwrap().half_plane {
            let inv = ctx.chart(&cur_plane).inverse().unwrap();
            let p0 = inv.apply(&pos);
            let v = inv.apply(&u);
            if !v.y.is_zero() {
                let t = -&p0.y / &v.y;
                if t.is_positive() {
                    consider(t, Event::HalfPlane);
                }
            }
        }

        // the budget runs out first when there is no event, or the next
        // event lies beyond the (possibly irrational) budget parameter
        let budget_hit = match &best {
            None => true,
            Some((t, _)) => {
                let after = &spent_t + t;
                &after * &after > t_budget_sq
            }
        };
        if budget_hit {
            // clip to the exact budget endpoint when it is rational
            if let Some(t_end) = exact_sqrt(&t_budget_sq) {
                if t_end > spent_t {
                    let next = pos.add(&u.scale(&(&t_end - &spent_t)));
                    segments.push(DevSegment {
                        plane: cur_plane.clone(),
                        from: ctx.stored(&cur_plane, &pos),
                        to: ctx.stored(&cur_plane, &next),
                    });
                    spent_t = t_end;
                }
            }
            let spent2 = &spent_t * &spent_t * &u_norm2;
            return Trajectory {
                segments,
                termination: Termination::MaxLength,
                length2: spent2,
            };
        }
        let (t_step, event) = best.unwrap();

        let next = pos.add(&u.scale(&t_step));
        segments.push(DevSegment {
            plane: cur_plane.clone(),
            from: ctx.stored(&cur_plane, &pos),
            to: ctx.stored(&cur_plane, &next),
        });
        spent_t = &spent_t + &t_step;

        match event {
            Event::Cone(hit) => {
                let stored = ctx.stored(&cur_plane, &hit);
                let spent2 = &spent_t * &spent_t * &u_norm2;
                return Trajectory {
                    segments,
                    termination: Termination::ConePoint { plane: cur_plane, point: stored },
                    length2: spent2,
                };
            }
            Event::Region => {
                let spent2 = &spent_t * &spent_t * &u_norm2;
                return Trajectory {
                    segments,
                    termination: Termination::LeftRegion { plane: cur_plane },
                    length2: spent2,
                };
            }
            Event::HalfPlane => {
                let spent2 = &spent_t * &spent_t * &u_norm2;
                return Trajectory {
                    segments,
                    termination: Termination::LeftHalfPlane { plane: cur_plane },
                    length2: spent2,
                };
            }
            Event::Portal(i) => {
                let f = &ctx.features[&cur_plane][i];
                if let FeatureKind::Stub { slit } = &f.kind {
                    let spent2 = &spent_t * &spent_t * &u_norm2;
                    return Trajectory {
                        segments,
                        termination: Termination::OpenStub { slit: slit.clone() },
                        length2: spent2,
                    };
                }
                let (new_plane, new_pos) =
                    ctx.transport(&cur_plane, f, &next, &u).expect("glued feature");
                if !in_region(region, &new_plane, &ctx.stored(&new_plane, &new_pos)) {
                    let spent2 = &spent_t * &spent_t * &u_norm2;
                    return Trajectory {
                        segments,
                        termination: Termination::LeftRegion { plane: new_plane },
                        length2: spent2,
                    };
                }
                cur_plane = new_plane;
                pos = new_pos;
            }
        }
    }
    let spent2 = &spent_t * &spent_t * &u_norm2;
    Trajectory { segments, termination: Termination::StepLimit, length2: spent2 }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub from: usize,
    pub to: usize,
    /// Image-coordinate holonomy, canonically oriented (`y > 0`, or `y = 0`
    /// and `x > 0`).
    pub holonomy: Vec2,
    #[serde(with = "rat_serde")]
    pub length2: Q,
    /// Portal crossings along the way ("0" for a straight within-plane
    /// connection; slit-side connections report 0).
    pub crossings: usize,
    /// Discriminates parallel connections with equal endpoints: the plane of
    /// departure plus the crossed portal list.
    pub via: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaddleReport {
    pub connections: Vec<SaddleConnection>,
    /// False when the enumeration touched the truncation (an open stub or
    /// the crossing cap); the list is then a verified lower bound only.
    pub complete: bool,
}

fn canonical(h: &Vec2) -> Option<Vec2> {
    if h.y.is_positive() || (h.y.is_zero() && h.x.is_positive()) {
        Some(h.clone())
    } else {
        None
    }
}

/// Enumerate all saddle connections of image length at most `bound` staying
/// inside `region` (if given), by breadth-first development over portal
/// crossing sequences with exact feasibility checks.
pub fn saddle_connections(
    ctx: &DevContext,
    bound: &Q,
    region: Option<&Region>,
    max_crossings: usize,
) -> SaddleReport {
    let bound2 = bound * bound;
    let mut out: Vec<SaddleConnection> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut complete = true;

    // slit-side connections: both sides of every glued finite slit
    for g in &ctx.complex.gluings {
        for label in [&g.a, &g.b] {
            let s = ctx.complex.slit(label).unwrap();
            let SlitGeom::Segment(_) = s.geom else { continue };
            let h_img = ctx.complex.image_holonomy(s).unwrap();
            if h_img.norm2() > bound2 {
                continue;
            }
            if region.is_some()
                && !(in_region(region, &s.plane, &s.base)
                    && in_region(region, &s.plane, &s.end().unwrap()))
            {
                continue;
            }
            let (from_pt, to_pt, h) = match canonical(&h_img) {
                Some(h) => (s.base.clone(), s.end().unwrap(), h),
                None => (s.end().unwrap(), s.base.clone(), h_img.neg()),
            };
            let from = ctx.class_of(&s.plane, &from_pt).unwrap();
            let to = ctx.class_of(&s.plane, &to_pt).unwrap();
            push_conn(
                &mut out,
                &mut seen,
                SaddleConnection {
                    from,
                    to,
                    length2: h.norm2(),
                    holonomy: h,
                    crossings: 0,
                    via: format!("side:{label}"),
                },
            );
        }
    }
    // polygon sides
    for sg in &ctx.complex.surgeries {
        let SurgeryKind::Polygon { sides } = &sg.kind else { continue };
        let chart = ctx.chart(&sg.plane);
        let poly = sg.polygon().unwrap();
        let cls = ctx.class_of(&sg.plane, &poly.verts[0]).unwrap();
        if region.is_some() && !in_region(region, &sg.plane, &poly.verts[0]) {
            continue;
        }
        for (j, side) in sides.iter().enumerate() {
            let v = chart.apply(side);
            if v.norm2() > bound2 {
                continue;
            }
            let h = canonical(&v).unwrap_or_else(|| v.neg());
            push_conn(
                &mut out,
                &mut seen,
                SaddleConnection {
                    from: cls,
                    to: cls,
                    length2: h.norm2(),
                    holonomy: h,
                    crossings: 0,
                    via: format!("poly:{}:{j}", sg.id),
                },
            );
        }
    }

    // generic connections: develop from every cone representative
    for (ci, class) in ctx.cones.iter().enumerate() {
        for rep in &class.reps {
            if region.is_some() && !in_region(region, &rep.plane, &rep.point) {
                continue;
            }
            let origin = ctx.img(&rep.plane, &rep.point);
            let start = Visit {
                plane: rep.plane.clone(),
                offset: origin.neg(),
                entry: None,
                entry_feature: None,
                wedge: None,
                lines: Vec::new(),
            };
            let mut queue = vec![vec![start]];
            while let Some(path) = queue.pop() {
                if search_terminals(
                    ctx, &bound2, region, ci, &path, &mut out, &mut seen,
                ) {
                    complete = false;
                }
                if path.len() > max_crossings {
                    complete = false;
                    continue;
                }
                expand(ctx, &bound2, region, &path, &mut queue, &mut complete);
            }
        }
    }

    out.sort_by(|a, b| {
        (&a.length2, &a.holonomy.x, &a.holonomy.y, a.from, a.to, &a.via).cmp(&(
            &b.length2,
            &b.holonomy.x,
            &b.holonomy.y,
            b.from,
            b.to,
            &b.via,
        ))
    });
    SaddleReport { connections: out, complete }
}

fn push_conn(out: &mut Vec<SaddleConnection>, seen: &mut HashSet<String>, c: SaddleConnection) {
    let key = format!(
        "{}|{}|{:?}|{}",
        c.from, c.to, c.holonomy, c.via
    );
    if seen.insert(key) {
        out.push(c);
    }
}

/// One developed copy along a crossing sequence.
#[derive(Clone, Debug)]
struct Visit {
    plane: String,
    /// dev = img + offset on this copy.
    offset: Vec2,
    /// Entry portal segment endpoint data in dev coordinates (None for the
    /// first copy).
    entry: Option<Seg>,
    entry_feature: Option<usize>,
    /// Accumulated open visibility cone from the origin (counterclockwise
    /// from `.0` to `.1`, both spans under pi); None means unrestricted.
    wedge: Option<(Vec2, Vec2)>,
    /// Far-side half-plane constraints `n . x > c` (with `c > 0`) from every
    /// crossed portal line: crossing points move strictly outward, so any
    /// later point of the connection lies strictly beyond each crossed line.
    lines: Vec<(Vec2, Q)>,
}

/// The half-plane constraint for the far side of the line through `seg`;
/// None when the line passes through the origin.
fn line_constraint(seg: &Seg) -> Option<(Vec2, Q)> {
    let d = seg.dir();
    let n = Vec2::new(-d.y.clone(), d.x.clone());
    let c = n.dot(&seg.a);
    if c.is_positive() {
        Some((n, c))
    } else if c.is_negative() {
        Some((n.neg(), -c))
    } else {
        None
    }
}

/// Clip the parameter range `[0, extent]` of `x(s) = base + s dir` by strict
/// linear conditions: the wedge (if any) and the far half-planes. Returns a
/// nonempty open interval or None.
fn clip_portal(
    base: &Vec2,
    dir: &Vec2,
    extent: &Q,
    wedge: Option<&(Vec2, Vec2)>,
    lines: &[(Vec2, Q)],
) -> Option<(Q, Q)> {
    let mut lo = Q::zero();
    let mut hi = extent.clone();
    // each condition is f0 + s f1 > 0
    let mut conds: Vec<(Q, Q)> = Vec::new();
    if let Some((wlo, whi)) = wedge {
        conds.push((wlo.cross(base), wlo.cross(dir)));
        conds.push((base.cross(whi), dir.cross(whi)));
    }
    for (n, c) in lines {
        conds.push((n.dot(base) - c, n.dot(dir)));
    }
    for (f0, f1) in conds {
        if f1.is_zero() {
            if !f0.is_positive() {
                return None;
            }
        } else {
            let s0 = -&f0 / &f1;
            if f1.is_positive() {
                lo = lo.max(s0);
            } else {
                hi = hi.min(s0);
            }
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Open-cone intersection of two salient cones (each under pi), given as
/// counterclockwise (lo, hi) direction pairs; None for empty.
fn wedge_intersect(a: &(Vec2, Vec2), b: &(Vec2, Vec2)) -> Option<(Vec2, Vec2)> {
    let lo = if a.0.cross(&b.0).is_positive() { b.0.clone() } else { a.0.clone() };
    let hi = if a.1.cross(&b.1).is_positive() { a.1.clone() } else { b.1.clone() };
    lo.cross(&hi).is_positive().then_some((lo, hi))
}

/// The cone of directions from the origin through the open segment, as a
/// counterclockwise pair; None when the segment's line passes through the
/// origin (degenerate).
fn seg_wedge(s: &Seg) -> Option<(Vec2, Vec2)> {
    let d = s.a.cross(&s.b);
    if d.is_positive() {
        Some((s.a.clone(), s.b.clone()))
    } else if d.is_negative() {
        Some((s.b.clone(), s.a.clone()))
    } else {
        None
    }
}

/// Is `x` strictly inside the open cone?
fn in_wedge(x: &Vec2, w: &(Vec2, Vec2)) -> bool {
    w.0.cross(x).is_positive() && x.cross(&w.1).is_positive()
}

/// Check candidate terminals in the last copy of the path; returns true if a
/// truncation artifact (stub contact) was encountered.
fn search_terminals(
    ctx: &DevContext,
    bound2: &Q,
    region: Option<&Region>,
    from_class: usize,
    path: &[Visit],
    out: &mut Vec<SaddleConnection>,
    seen: &mut HashSet<String>,
) -> bool {
    let last = path.last().unwrap();
    let mut hit_truncation = false;
    for (ti, tclass) in ctx.cones.iter().enumerate() {
        for trep in &tclass.reps {
            if trep.plane != last.plane {
                continue;
            }
            let v = ctx.img(&trep.plane, &trep.point).add(&last.offset);
            if v.is_zero() || v.norm2() > *bound2 {
                continue;
            }
            if let Some(w) = &last.wedge {
                if !in_wedge(&v, w) {
                    continue;
                }
            }
            if last.lines.iter().any(|(n, c)| n.dot(&v) <= *c) {
                continue;
            }
            match feasible(ctx, region, path, &v) {
                Feasibility::Ok => {
                    let Some(h) = canonical(&v) else { continue };
                    let via: Vec<String> = path
                        .iter()
                        .filter_map(|p| p.entry_feature.map(|i| format!("{}:{i}", p.plane)))
                        .collect();
                    push_conn(
                        out,
                        seen,
                        SaddleConnection {
                            from: from_class,
                            to: ti,
                            length2: h.norm2(),
                            holonomy: h,
                            crossings: path.len() - 1,
                            via: format!("{}>{}", path[0].plane, via.join(">")),
                        },
                    );
                }
                Feasibility::Blocked => {}
                Feasibility::Truncated => hit_truncation = true,
            }
        }
    }
    hit_truncation
}

enum Feasibility {
    Ok,
    Blocked,
    Truncated,
}

/// Is the straight dev segment 0 -> v realizable along this crossing path?
fn feasible(ctx: &DevContext, region: Option<&Region>, path: &[Visit], v: &Vec2) -> Feasibility {
    let line = Seg::new(Vec2::zero(), v.clone());
    // crossing parameters must strictly increase
    let mut params = vec![Q::zero()];
    for visit in &path[1..] {
        let portal = visit.entry.as_ref().unwrap();
        let Some(t) = seg_crosses_portal(&line, portal) else {
            return Feasibility::Blocked;
        };
        if t <= *params.last().unwrap() {
            return Feasibility::Blocked;
        }
        params.push(t);
    }
    params.push(Q::one());
    if params[params.len() - 2] >= Q::one() {
        return Feasibility::Blocked;
    }

    // each sub-segment must avoid the obstacles of its copy
    for (k, visit) in path.iter().enumerate() {
        let (t_lo, t_hi) = (&params[k], &params[k + 1]);
        let feats = &ctx.features[&visit.plane];
        for f in feats {
            // dev-transformed feature
            let base = f.piece.base.add(&visit.offset);
            let denom = v.cross(&f.piece.dir);
            let r = base.clone();
            if denom.is_zero() {
                // parallel: collinear overlap blocks
                if v.cross(&r).is_zero() {
                    let p = Piece { base, dir: f.piece.dir.clone(), t_max: f.piece.t_max.clone() };
                    let sub = Piece::seg(
                        line.at(t_lo),
                        line.at(t_hi).sub(&line.at(t_lo)),
                    );
                    if pieces_intersect(&p, &sub) {
                        return if matches!(f.kind, FeatureKind::Stub { .. }) {
                            Feasibility::Truncated
                        } else {
                            Feasibility::Blocked
                        };
                    }
                }
                continue;
            }
            let t = r.cross(&f.piece.dir) / &denom;
            let s = r.cross(v) / &denom;
            let on_piece = !s.is_negative()
                && f.piece.t_max.as_ref().map_or(true, |m| &s <= m);
            if !on_piece {
                continue;
            }
            if &t > t_lo && &t < t_hi {
                return if matches!(f.kind, FeatureKind::Stub { .. }) {
                    Feasibility::Truncated
                } else {
                    Feasibility::Blocked
                };
            }
        }
        // carved polygon interiors are not part of the surface
        if let Some(ps) = ctx.polys.get(&visit.plane) {
            let sub = Seg::new(line.at(t_lo), line.at(t_hi));
            for p in ps {
                if p.translate(&visit.offset).seg_meets_interior(&sub) {
                    return Feasibility::Blocked;
                }
            }
        }
        // interior cone points block (t strictly inside (t_lo, t_hi) handled
        // above since cone reps are feature endpoints; isolated reps:
        for class in &ctx.cones {
            for rep in &class.reps {
                if rep.plane != visit.plane {
                    continue;
                }
                let p = ctx.img(&rep.plane, &rep.point).add(&visit.offset);
                // on the open sub-segment?
                let d = v.clone();
                if d.cross(&p).is_zero() {
                    let t = p.dot(&d) / d.norm2();
                    if &t > t_lo && &t < t_hi {
                        return Feasibility::Blocked;
                    }
                }
            }
        }
        // region containment (convex in stored coordinates)
        if let Some(r) = region {
            let Some(rect) = r.get(&visit.plane) else {
                return Feasibility::Blocked;
            };
            let inv = ctx.chart(&visit.plane).inverse().unwrap();
            for t in [t_lo, t_hi] {
                let dev = line.at(t);
                let stored = inv.apply(&dev.sub(&visit.offset));
                if !rect.contains(&stored) {
                    return Feasibility::Blocked;
                }
            }
        }
        // half planes: both endpoints must satisfy y >= 0
        if ctx.complex.plane(&visit.plane).unwrap().half_plane {
            let inv = ctx.chart(&visit.plane).inverse().unwrap();
            for t in [t_lo, t_hi] {
                let stored = inv.apply(&line.at(t).sub(&visit.offset));
                if stored.y.is_negative() {
                    return Feasibility::Blocked;
                }
            }
        }
    }
    Feasibility::Ok
}

/// Expand the crossing-sequence search by one portal.
fn expand(
    ctx: &DevContext,
    bound2: &Q,
    region: Option<&Region>,
    path: &[Visit],
    queue: &mut Vec<Vec<Visit>>,
    complete: &mut bool,
) {
    let last = path.last().unwrap();
    let feats = &ctx.features[&last.plane];
    for (i, f) in feats.iter().enumerate() {
        if last.entry_feature == Some(i) {
            continue; // cannot immediately re-cross the same feature
        }
        // dev geometry of the portal, infinite pieces clipped to the bound
        let base = f.piece.base.add(&last.offset);
        let extent = match &f.piece.t_max {
            Some(m) => m.clone(),
            None => {
                let n2 = f.piece.dir.norm2();
                Q::from_integer(sqrt_upper_bound(&(bound2 / &n2)) + 1)
            }
        };
        let seg = Seg::new(base.clone(), base.add(&f.piece.dir.scale(&extent)));
        if dist2_point_seg(&Vec2::zero(), &seg) > *bound2 {
            continue;
        }
        // a portal whose line passes through the origin cannot be crossed
        // transversally by a straight connection from the origin
        let Some(lc) = line_constraint(&seg) else { continue };
        // clip to the part visible through everything crossed so far
        let Some((s_lo, s_hi)) =
            clip_portal(&base, &f.piece.dir, &extent, last.wedge.as_ref(), &last.lines)
        else {
            continue;
        };
        let sub = Seg::new(
            base.add(&f.piece.dir.scale(&s_lo)),
            base.add(&f.piece.dir.scale(&s_hi)),
        );
        if dist2_point_seg(&Vec2::zero(), &sub) > *bound2 {
            continue;
        }
        let Some(pw) = seg_wedge(&sub) else { continue };
        let new_wedge = match &last.wedge {
            None => pw,
            Some(w) => match wedge_intersect(w, &pw) {
                Some(x) => x,
                None => continue,
            },
        };
        let mut new_lines = last.lines.clone();
        new_lines.push(lc);
        match mk_visit(ctx, region, last, f, &base, &extent, new_wedge, new_lines) {
            Some(v) => queue.push([path, std::slice::from_ref(&v)].concat()),
            None => {
                if matches!(f.kind, FeatureKind::Stub { .. }) {
                    *complete = false;
                }
            }
        }
    }
}

/// Build the next visit for crossing feature `f` (None for stubs).
fn mk_visit(
    ctx: &DevContext,
    _region: Option<&Region>,
    last: &Visit,
    f: &Feature,
    dev_base: &Vec2,
    t_max: &Q,
    wedge: (Vec2, Vec2),
    lines: Vec<(Vec2, Q)>,
) -> Option<Visit> {
    if matches!(f.kind, FeatureKind::Stub { .. }) {
        return None;
    }
    // transport a witness point (the portal base) to compute the offset; the
    // transport of any interior point x is y(x) with y - x constant per
    // portal side for slit and polygon portals; direction matters only for
    // branch cuts, where we must enqueue both sides.
    // Use the midpoint as witness with a synthetic direction; for branch
    // cuts mk_visit is called twice via expand_both_sides below.
    let mid_img = f.piece.base.add(&f.piece.dir.scale(&(t_max / q(2))));
    // a direction pointing from origin through the portal midpoint
    let u = mid_img.add(&last.offset);
    let (tp, ty) = ctx.transport(&last.plane, f, &mid_img, &u)?;
    // ty is already in image coordinates of the target plane
    let new_offset = mid_img.add(&last.offset).sub(&ty);
    let entry_seg = Seg::new(dev_base.clone(), dev_base.add(&f.piece.dir.scale(t_max)));
    let idx = ctx.features[&last.plane]
        .iter()
        .position(|g| std::ptr::eq(g, f))
        .unwrap();
    Some(Visit {
        plane: tp,
        offset: new_offset,
        entry: Some(entry_seg),
        entry_feature: Some(idx),
        wedge: Some(wedge),
        lines,
    })
}

/// Multiset of holonomy vectors of the connections in a report, sorted.
pub fn holonomy_spectrum(report: &SaddleReport) -> Vec<Vec2> {
    let mut v: Vec<Vec2> = report.connections.iter().map(|c| c.holonomy.clone()).collect();
    v.sort_by(|a, b| (&a.x, &a.y).cmp(&(&b.x, &b.y)));
    v
}

/// A candidate automorphism: a partial relabeling of planes together with a
/// constant derivative acting in image coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutomorphismCandidate {
    pub name: String,
    pub derivative: Mat2,
    pub plane_map: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKind {
    Translation,
    Isometry,
    Affine,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: AutoKind,
    pub checked_slits: usize,
    pub checked_gluings: usize,
    pub checked_surgeries: usize,
    /// Items whose image lies outside the mapped window (truncation).
    pub indeterminate: Vec<String>,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("derivative must have positive determinant")]
    BadDerivative,
    #[error("plane map is not injective at {0:?}")]
    NotInjective(String),
    #[error("plane map target {0:?} does not exist")]
    BadTarget(String),
    #[error("half-plane flag mismatch mapping {0:?} to {1:?}")]
    HalfPlaneMismatch(String, String),
    #[error("slit {slit:?} has no image slit on plane {target:?}")]
    SlitImageMissing { slit: String, target: String },
    #[error("gluing ({a:?}, {b:?}) is not sent to a gluing")]
    GluingNotPreserved { a: String, b: String },
    #[error("surgery {id:?} has no matching image surgery on {target:?}")]
    SurgeryImageMissing { id: String, target: String },
    #[error("{0}")]
    Complex(#[from] ComplexError),
}

/// Verify that the candidate maps marked slits to marked slits, gluings to
/// gluings and surgeries to surgeries with the stated constant derivative,
/// and classify it (translation, isometry, affine).
pub fn verify_automorphism(
    c: &SurfaceComplex,
    cand: &AutomorphismCandidate,
) -> Result<VerifyReport, VerifyError> {
    let d = &cand.derivative;
    if !d.det().is_positive() {
        return Err(VerifyError::BadDerivative);
    }
    let mut targets = HashSet::new();
    for (from, to) in &cand.plane_map {
        let pf = c.plane(from)?;
        let pt = c.plane(to).map_err(|_| VerifyError::BadTarget(to.clone()))?;
        if !targets.insert(to.clone()) {
            return Err(VerifyError::NotInjective(to.clone()));
        }
        if pf.half_plane != pt.half_plane {
            return Err(VerifyError::HalfPlaneMismatch(from.clone(), to.clone()));
        }
    }

    let mut indeterminate = Vec::new();
    let mut image_label: BTreeMap<String, String> = BTreeMap::new();
    let mut checked_slits = 0;

    for s in &c.slits {
        let Some(target) = cand.plane_map.get(&s.plane) else {
            indeterminate.push(format!("slit {} (plane unmapped)", s.label));
            continue;
        };
        let chart_p = &c.plane(&s.plane)?.chart;
        let chart_q_inv = c
            .plane(target)?
            .chart
            .inverse()
            .ok_or(VerifyError::BadDerivative)?;
        let to_stored = |v: &Vec2| chart_q_inv.apply(&d.apply(&chart_p.apply(v)));
        let base_img = to_stored(&s.base);
        let found = match &s.geom {
            SlitGeom::Segment(h) => {
                let h_img = to_stored(h).sub(&to_stored(&Vec2::zero()));
                c.slits_on(target).find(|t| match &t.geom {
                    SlitGeom::Segment(th) => {
                        (t.base == base_img && *th == h_img)
                            || (t.base == base_img.add(&h_img) && *th == h_img.neg())
                    }
                    _ => false,
                })
            }
            SlitGeom::Ray(dir) => {
                let d_img = to_stored(dir).sub(&to_stored(&Vec2::zero()));
                c.slits_on(target).find(|t| match &t.geom {
                    SlitGeom::Ray(td) => t.base == base_img && td.same_direction(&d_img),
                    _ => false,
                })
            }
        };
        match found {
            Some(t) => {
                image_label.insert(s.label.clone(), t.label.clone());
                checked_slits += 1;
            }
            None => {
                if c.is_stub(&s.label) {
                    indeterminate.push(format!("stub slit {}", s.label));
                } else {
                    return Err(VerifyError::SlitImageMissing {
                        slit: s.label.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
    }

    let mut checked_gluings = 0;
    for g in &c.gluings {
        match (image_label.get(&g.a), image_label.get(&g.b)) {
            (Some(ia), Some(ib)) => {
                if c.partner(ia) != Some(ib.as_str()) {
                    return Err(VerifyError::GluingNotPreserved {
                        a: g.a.clone(),
                        b: g.b.clone(),
                    });
                }
                checked_gluings += 1;
            }
            _ => indeterminate.push(format!("gluing ({}, {})", g.a, g.b)),
        }
    }

    let mut checked_surgeries = 0;
    for sg in &c.surgeries {
        let Some(target) = cand.plane_map.get(&sg.plane) else {
            indeterminate.push(format!("surgery {} (plane unmapped)", sg.id));
            continue;
        };
        let chart_p = &c.plane(&sg.plane)?.chart;
        let chart_q_inv = c
            .plane(target)?
            .chart
            .inverse()
            .ok_or(VerifyError::BadDerivative)?;
        let tf = |v: &Vec2| chart_q_inv.apply(&d.apply(&chart_p.apply(v)));
        let lin = |v: &Vec2| tf(v).sub(&tf(&Vec2::zero()));
        let base_img = tf(&sg.base);
        let found = c.surgeries_on(target).any(|t| {
            if t.base != base_img {
                return false;
            }
            match (&sg.kind, &t.kind) {
                (SurgeryKind::Polygon { sides: sa }, SurgeryKind::Polygon { sides: sb }) => {
                    sa.len() == sb.len()
                        && sa.iter().zip(sb.iter()).all(|(x, y)| lin(x) == *y)
                }
                (
                    SurgeryKind::BranchedCover { degree: da, dir: xa, .. },
                    SurgeryKind::BranchedCover { degree: db, dir: xb, .. },
                ) => da == db && lin(xa).same_direction(xb),
                _ => false,
            }
        });
        if found {
            checked_surgeries += 1;
        } else {
            return Err(VerifyError::SurgeryImageMissing {
                id: sg.id.clone(),
                target: target.clone(),
            });
        }
    }

    let kind = if d.is_identity() {
        AutoKind::Translation
    } else if d.is_orthogonal() {
        AutoKind::Isometry
    } else {
        AutoKind::Affine
    };
    Ok(VerifyReport {
        kind,
        checked_slits,
        checked_gluings,
        checked_surgeries,
        indeterminate,
    })
}

/// Compose candidates: `first`, then `second` (on the overlap of domains).
pub fn compose_candidates(
    first: &AutomorphismCandidate,
    second: &AutomorphismCandidate,
    name: &str,
) -> AutomorphismCandidate {
    let mut plane_map = BTreeMap::new();
    for (k, v) in &first.plane_map {
        if let Some(w) = second.plane_map.get(v) {
            plane_map.insert(k.clone(), w.clone());
        }
    }
    AutomorphismCandidate {
        name: name.to_string(),
        derivative: second.derivative.mul(&first.derivative),
        plane_map,
    }
}

/// The affine map induced by an upper-triangular `[[1, s], [0, t]]`, `t > 0`:
/// identity relabeling with that derivative (it fixes the horizontal axis of
/// every chart pointwise).
pub fn induced_parabolic_map(
    c: &SurfaceComplex,
    a: &Mat2,
    name: &str,
) -> Result<AutomorphismCandidate, VerifyError> {
    let ok = a.a == Q::one() && a.c.is_zero() && a.d.is_positive();
    if !ok {
        return Err(VerifyError::BadDerivative);
    }
    let plane_map = c
        .planes
        .iter()
        .map(|p| (p.id.clone(), p.id.clone()))
        .collect();
    Ok(AutomorphismCandidate { name: name.to_string(), derivative: a.clone(), plane_map })
}

//! Cayley-blueprint assemblies: a vertex surface is copied once per element
//! of a finite ball in a group, and the copies are cross-glued along slit
//! schedules indexed by generators. Each builder also emits the family of
//! relabeling automorphism candidates realizing the group action.
//!
//! Conventions: the copy of the vertex surface at the ball element `g` is
//! prefixed `M[g].`; gluing schedules use right multiplication (the out-slit
//! of `M[g]` with label `l` meets the in-slit of `M[g*g_l]`), so the
//! symmetry `T[h]` relabels by left multiplication `M[g] -> M[h*g]` and the
//! family composes as `T[g] . T[h] = T[h*g]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::end_space::{EndSpaceDescriptor, GenusMarking};
use crate::flatgeom::AutomorphismCandidate;
use crate::geom::{q, qr, sqrt_upper_bound, Mat2, Q, Vec2};
use crate::grafting::{graft, GraftError};
use crate::groups::{cayley_ball, Ball, GroupError, GroupSpec};
use crate::surface::{ComplexError, Slit, SlitGeom, SurfaceComplex};

/// Truncation and placement knobs shared by the builders.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub planes_limit: usize,
    pub slit_index_limit: usize,
    pub ball_radius: usize,
    /// Rows of cross-copy slit pairs per generator column.
    pub rows: usize,
    /// Half-length of the chain of blocks in the chained builder.
    pub chain_extent: usize,
    /// Lower bound kept between auxiliary slit groups and the rest.
    #[serde(with = "crate::geom::rat_serde")]
    pub separation: Q,
    /// Diameter bound for carved polygons.
    #[serde(with = "crate::geom::rat_serde")]
    pub small_diameter: Q,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            planes_limit: 4,
            slit_index_limit: 4,
            ball_radius: 1,
            rows: 1,
            chain_extent: 1,
            separation: q(100),
            small_diameter: qr(64, 5),
        }
    }
}

/// A truncated assembly: the complex, the group ball that guided it, and the
/// relabeling candidates (one per ball element).
#[derive(Clone, Debug)]
pub struct Blueprint {
    pub complex: SurfaceComplex,
    pub ball: Ball,
    pub automorphisms: Vec<AutomorphismCandidate>,
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("{0}")]
    Graft(#[from] GraftError),
    #[error("{0}")]
    Group(#[from] GroupError),
    #[error("{0}")]
    Complex(#[from] ComplexError),
    #[error("descriptor has no countable characteristic system")]
    NotCountable,
    #[error("descriptor must have no genus marking")]
    GenusMarked,
    #[error("component pattern index out of range: component {0}, boundary {1}")]
    PatternBounds(usize, usize),
    #[error("boundary slot used twice: component {0}, boundary {1}")]
    PatternReuse(usize, usize),
    #[error("component pattern graph is disconnected")]
    DisconnectedPattern,
    #[error("twisted slit for generator {0} leaves its strip")]
    StripOverflow(usize),
    #[error("chain extent {0} exceeds the polygon direction pool")]
    ChainTooLong(usize),
    #[error("group ball does not close at radius {0}")]
    GroupNotClosed(usize),
    #[error("could not place twisted slits disjointly")]
    PlacementFailed,
}

/// Finite list of planar components with prescribed boundary-slit counts,
/// and the annulus identifications between boundary slots. Slots are
/// `(component, index)` with `index < boundary_counts[component]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentPattern {
    pub boundary_counts: Vec<usize>,
    pub annuli: Vec<((usize, usize), (usize, usize))>,
}

impl ComponentPattern {
    /// Two components joined by a single annulus.
    pub fn default_pair() -> ComponentPattern {
        ComponentPattern {
            boundary_counts: vec![1, 1],
            annuli: vec![((0, 0), (1, 0))],
        }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let j = self.boundary_counts.len();
        if j == 0 {
            return Err(AssemblyError::DisconnectedPattern);
        }
        let mut used = std::collections::HashSet::new();
        for ((a, m), (b, n)) in &self.annuli {
            for (c, i) in [(*a, *m), (*b, *n)] {
                if c >= j || i >= self.boundary_counts[c] {
                    return Err(AssemblyError::PatternBounds(c, i));
                }
                if !used.insert((c, i)) {
                    return Err(AssemblyError::PatternReuse(c, i));
                }
            }
        }
        // union-find over components
        let mut root: Vec<usize> = (0..j).collect();
        fn find(root: &mut Vec<usize>, x: usize) -> usize {
            if root[x] != x {
                let r = find(root, root[x]);
                root[x] = r;
            }
            root[x]
        }
        for ((a, _), (b, _)) in &self.annuli {
            let (ra, rb) = (find(&mut root, *a), find(&mut root, *b));
            root[ra] = rb;
        }
        let r0 = find(&mut root, 0);
        for c in 1..j {
            if find(&mut root, c) != r0 {
                return Err(AssemblyError::DisconnectedPattern);
            }
        }
        Ok(())
    }
}

fn seg(label: &str, plane: &str, base: Vec2, hol: Vec2) -> Slit {
    Slit {
        label: label.to_string(),
        plane: plane.to_string(),
        base,
        geom: SlitGeom::Segment(hol),
    }
}

fn ray(label: &str, plane: &str, base: Vec2, dir: Vec2) -> Slit {
    Slit {
        label: label.to_string(),
        plane: plane.to_string(),
        base,
        geom: SlitGeom::Ray(dir),
    }
}

fn copy_prefix(ball: &Ball, i: usize) -> String {
    format!("M[{}].", ball.names[i])
}

/// Relabeling candidate for left multiplication by `ball.elements[h]`:
/// every plane of `M[g]` goes to the same-named plane of `M[h*g]`, where the
/// product stays inside the ball.
fn relabel_candidate(
    c: &SurfaceComplex,
    ball: &Ball,
    h: usize,
    derivative: Mat2,
    name: &str,
) -> AutomorphismCandidate {
    let mut plane_map = BTreeMap::new();
    for g in 0..ball.len() {
        let Some(hg) = ball.mul(h, g) else { continue };
        let from = copy_prefix(ball, g);
        let to = copy_prefix(ball, hg);
        for p in &c.planes {
            if let Some(rest) = p.id.strip_prefix(&from) {
                let target = format!("{to}{rest}");
                if c.planes.iter().any(|t| t.id == target) {
                    plane_map.insert(p.id.clone(), target);
                }
            }
        }
    }
    AutomorphismCandidate { name: name.to_string(), derivative, plane_map }
}

fn identity_family(c: &SurfaceComplex, ball: &Ball) -> Vec<AutomorphismCandidate> {
    (0..ball.len())
        .map(|h| {
            relabel_candidate(c, ball, h, Mat2::identity(), &format!("T[{}]", ball.names[h]))
        })
        .collect()
}

/// Vertex surface for the isometry builders: the grafted descriptor, an
/// auxiliary plane `H` joined to `P0` by a connector slit, one infinite ray
/// pair per schedule label on `H`, and the distinguished icosagon.
fn isometry_vertex(
    d: &EndSpaceDescriptor,
    cfg: &BuilderConfig,
    labels: usize,
) -> Result<SurfaceComplex, AssemblyError> {
    let mut c = graft(d, cfg.planes_limit, cfg.slit_index_limit)?;
    c.add_plane("H", Mat2::identity(), false)?;
    c.add_slit(seg("c", "H", Vec2::of(-2, 0), Vec2::of(1, 0)))?;
    c.add_slit(seg("c'", "P0", Vec2::of(-2, 0), Vec2::of(1, 0)))?;
    c.glue("c", "c'")?;
    for l in 0..labels {
        let x = 4 * (l as i64 + 1);
        c.add_slit(ray(&format!("r({l},in)"), "H", Vec2::of(x, 0), Vec2::of(0, 1)))?;
        c.add_slit(ray(&format!("r({l},out)"), "H", Vec2::of(x + 1, 0), Vec2::of(0, 1)))?;
    }
    let s = cfg.separation.clone();
    c.icosagon_surgery("ico", "H", Vec2::new(-s.clone(), s), &cfg.small_diameter)?;
    Ok(c)
}

fn assemble_copies(
    vertex: &SurfaceComplex,
    ball: &Ball,
    charts: bool,
) -> Result<SurfaceComplex, AssemblyError> {
    let mut total = SurfaceComplex::new();
    for i in 0..ball.len() {
        let mut copy = vertex.prefixed(&copy_prefix(ball, i));
        if charts {
            copy.apply_matrix(&ball.rho(i))?;
        }
        total.absorb(copy)?;
    }
    Ok(total)
}

/// Glue `label_out` of each copy to `label_in` of its right translate by
/// `gens[l]`; schedule slits whose translate falls outside the ball become
/// open stubs.
fn schedule(
    c: &mut SurfaceComplex,
    ball: &Ball,
    l: usize,
    label_out: &str,
    label_in: &str,
) -> Result<usize, AssemblyError> {
    let mut count = 0;
    for g in 0..ball.len() {
        let out = format!("{}{}", copy_prefix(ball, g), label_out);
        match ball.mul_gen(g, l) {
            Some(t) => {
                let inn = format!("{}{}", copy_prefix(ball, t), label_in);
                c.glue(&out, &inn)?;
                count += 1;
            }
            None => c.mark_stub(&out, "translate beyond ball"),
        }
    }
    // in-slits whose source copy is missing
    for g in 0..ball.len() {
        let inn = format!("{}{}", copy_prefix(ball, g), label_in);
        if c.partner(&inn).is_none() && !c.is_stub(&inn) {
            c.mark_stub(&inn, "source copy beyond ball");
        }
    }
    Ok(count)
}

/// Self-similar isometry realization for a finite group: one grafted vertex
/// copy per element, infinite ray pairs following the complete Cayley graph,
/// identity-derivative relabelings as the symmetry family.
pub fn build_selfsimilar_isometry(
    spec: &GroupSpec,
    d: &EndSpaceDescriptor,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    if d.atom.char_system().is_none() {
        return Err(AssemblyError::NotCountable);
    }
    let n = match spec {
        GroupSpec::FiniteTable { elements, .. } => elements.len(),
        _ => 2,
    };
    let ball = cayley_ball(spec, n)?;
    let labels = ball.gens.len();
    let vertex = isometry_vertex(d, cfg, labels)?;
    let mut c = assemble_copies(&vertex, &ball, false)?;
    for l in 0..labels {
        schedule(&mut c, &ball, l, &format!("r({l},out)"), &format!("r({l},in)"))?;
    }
    let automorphisms = identity_family(&c, &ball);
    Ok(Blueprint { complex: c, ball, automorphisms })
}

/// Free-group realization at genus zero: the Cayley tree of the free group
/// of rank `m`, with a degree-3 branched cover carried by each vertex copy
/// in place of the icosagon.
pub fn build_free_genus_zero(
    rank: usize,
    d: &EndSpaceDescriptor,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    if d.atom.char_system().is_none() {
        return Err(AssemblyError::NotCountable);
    }
    if d.genus_marking != GenusMarking::None {
        return Err(AssemblyError::GenusMarked);
    }
    let spec = GroupSpec::Free { rank };
    let ball = cayley_ball(&spec, cfg.ball_radius)?;
    let mut vertex = graft(d, cfg.planes_limit, cfg.slit_index_limit)?;
    vertex.add_plane("H", Mat2::identity(), false)?;
    vertex.add_slit(seg("c", "H", Vec2::of(-2, 0), Vec2::of(1, 0)))?;
    vertex.add_slit(seg("c'", "P0", Vec2::of(-2, 0), Vec2::of(1, 0)))?;
    vertex.glue("c", "c'")?;
    for l in 0..rank {
        let x = 4 * (l as i64 + 1);
        vertex.add_slit(ray(&format!("r({l},in)"), "H", Vec2::of(x, 0), Vec2::of(0, 1)))?;
        vertex.add_slit(ray(&format!("r({l},out)"), "H", Vec2::of(x + 1, 0), Vec2::of(0, 1)))?;
    }
    vertex.branched_cover_surgery("cov", "H", Vec2::of(0, 1), Vec2::of(0, 1), 3)?;
    let mut c = assemble_copies(&vertex, &ball, false)?;
    // tree edges: one schedule per positive generator (gens alternate a, a')
    for l in 0..rank {
        schedule(&mut c, &ball, 2 * l, &format!("r({l},out)"), &format!("r({l},in)"))?;
    }
    let automorphisms = identity_family(&c, &ball);
    Ok(Blueprint { complex: c, ball, automorphisms })
}

/// One copy's worth of the component-pattern assembly: a plane per
/// component, boundary slits glued per annulus, and a grid of cross-copy
/// slit pairs per generator column. `poly_half_sides` selects the carved
/// polygon (10 gives the icosagon).
fn pattern_vertex(
    pattern: &ComponentPattern,
    gens: usize,
    rows: usize,
    poly_half_sides: usize,
    cfg: &BuilderConfig,
) -> Result<SurfaceComplex, AssemblyError> {
    pattern.validate()?;
    let mut c = SurfaceComplex::new();
    for (j, &count) in pattern.boundary_counts.iter().enumerate() {
        c.add_plane(&format!("P{j}"), Mat2::identity(), false)?;
        for m in 0..count {
            c.add_slit(seg(
                &format!("b({j},{m})"),
                &format!("P{j}"),
                Vec2::of(2 * (m as i64 + 1), 0),
                Vec2::of(1, 0),
            ))?;
        }
        for l in 0..gens {
            for k in 1..=2 * rows {
                c.add_slit(seg(
                    &format!("x({j},{l},{k})"),
                    &format!("P{j}"),
                    Vec2::of(4 * l as i64 + 2, 2 * k as i64),
                    Vec2::of(1, 0),
                ))?;
            }
        }
    }
    for ((a, m), (b, n)) in &pattern.annuli {
        c.glue(&format!("b({a},{m})"), &format!("b({b},{n})"))?;
    }
    let s = cfg.separation.clone();
    c.polygon_surgery(
        "poly",
        "P0",
        Vec2::new(s.clone(), s),
        poly_half_sides,
        &cfg.small_diameter,
    )?;
    Ok(c)
}

/// Finite isometry group on the surface prescribed by the component
/// pattern: a full-group ball, cross-copy grid gluings along every
/// generator column, identity-derivative relabelings.
pub fn build_finite_isometry(
    spec: &GroupSpec,
    pattern: &ComponentPattern,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    let n = match spec {
        GroupSpec::FiniteTable { elements, .. } => elements.len(),
        _ => return Err(AssemblyError::Group(GroupError::BadTable(0))),
    };
    let ball = cayley_ball(spec, n)?;
    let gens = ball.gens.len();
    let vertex = pattern_vertex(pattern, gens, cfg.rows, 10, cfg)?;
    let mut c = assemble_copies(&vertex, &ball, false)?;
    let j_count = pattern.boundary_counts.len();
    for j in 0..j_count {
        for l in 0..gens {
            for m in 1..=cfg.rows {
                schedule(
                    &mut c,
                    &ball,
                    l,
                    &format!("x({j},{l},{})", 2 * m),
                    &format!("x({j},{l},{})", 2 * m - 1),
                )?;
            }
        }
    }
    let automorphisms = identity_family(&c, &ball);
    Ok(Blueprint { complex: c, ball, automorphisms })
}

/// Cone multiplier for the chained builder: pairwise distinct over the
/// chain, so no shift or flip of the chain preserves angles.
pub fn chain_multiplier(n: i64) -> u64 {
    if n >= 0 {
        4 * n as u64 + 3
    } else {
        4 * (-n) as u64 + 5
    }
}

/// Translatable realization. A virtually cyclic spec gives the single-chain
/// case: grafted copies Cayley-glued through auxiliary slit pairs kept far
/// from the graft window. A finite-table spec gives the chained case:
/// pattern assemblies indexed by a segment of the integers, joined by unit
/// slits per group element, with pairwise distinct polygon angles per block.
pub fn build_translatable(
    spec: &GroupSpec,
    d: &EndSpaceDescriptor,
    pattern: &ComponentPattern,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    if d.atom.char_system().is_none() {
        return Err(AssemblyError::NotCountable);
    }
    match spec {
        GroupSpec::VirtuallyCyclic { .. } => build_translatable_chain1(spec, d, cfg),
        GroupSpec::FiniteTable { .. } => build_translatable_chain2(spec, pattern, cfg),
        _ => Err(AssemblyError::Group(GroupError::BadTable(0))),
    }
}

fn build_translatable_chain1(
    spec: &GroupSpec,
    d: &EndSpaceDescriptor,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    let ball = cayley_ball(spec, cfg.ball_radius)?;
    let k = ball.gens.len();
    let mut vertex = graft(d, cfg.planes_limit, cfg.slit_index_limit)?;
    let y = -q(2) * &cfg.separation;
    for l in 0..k {
        vertex.add_slit(seg(
            &format!("u({l},-)"),
            "P0",
            Vec2::new(q(6 * l as i64), y.clone()),
            Vec2::of(1, 0),
        ))?;
        vertex.add_slit(seg(
            &format!("u({l},+)"),
            "P0",
            Vec2::new(q(6 * l as i64 + 3), y.clone()),
            Vec2::of(1, 0),
        ))?;
    }
    let s = cfg.separation.clone();
    vertex.icosagon_surgery("ico", "P0", Vec2::new(-s.clone(), -s), &cfg.small_diameter)?;
    let mut c = assemble_copies(&vertex, &ball, false)?;
    for l in 0..k {
        schedule(&mut c, &ball, l, &format!("u({l},-)"), &format!("u({l},+)"))?;
    }
    let automorphisms = identity_family(&c, &ball);
    Ok(Blueprint { complex: c, ball, automorphisms })
}

fn build_translatable_chain2(
    spec: &GroupSpec,
    pattern: &ComponentPattern,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    let n = match spec {
        GroupSpec::FiniteTable { elements, .. } => elements.len(),
        _ => unreachable!(),
    };
    let extent = cfg.chain_extent as i64;
    if cfg.chain_extent > 1 {
        // half_sides = multiplier + 1 must stay within the direction pool
        return Err(AssemblyError::ChainTooLong(cfg.chain_extent));
    }
    let ball = cayley_ball(spec, n)?;
    let gens = ball.gens.len();
    let mut c = SurfaceComplex::new();
    for block in -extent..=extent {
        let half_sides = (chain_multiplier(block) + 1) as usize;
        let mut vertex = pattern_vertex(pattern, gens, cfg.rows, half_sides, cfg)?;
        vertex.add_slit(seg("w(-)", "P0", Vec2::of(-4, 0), Vec2::of(1, 0)))?;
        vertex.add_slit(seg("w(+)", "P0", Vec2::of(-8, 0), Vec2::of(1, 0)))?;
        let mut assembled = assemble_copies(&vertex, &ball, false)?;
        let j_count = pattern.boundary_counts.len();
        for j in 0..j_count {
            for l in 0..gens {
                for m in 1..=cfg.rows {
                    schedule(
                        &mut assembled,
                        &ball,
                        l,
                        &format!("x({j},{l},{})", 2 * m),
                        &format!("x({j},{l},{})", 2 * m - 1),
                    )?;
                }
            }
        }
        c.absorb(assembled.prefixed(&format!("B{block}.")))?;
    }
    for block in -extent..extent {
        for g in 0..ball.len() {
            let p = copy_prefix(&ball, g);
            c.glue(
                &format!("B{block}.{p}w(-)"),
                &format!("B{}.{p}w(+)", block + 1),
            )?;
        }
    }
    for g in 0..ball.len() {
        let p = copy_prefix(&ball, g);
        c.mark_stub(&format!("B{}.{p}w(+)", -extent), "chain truncated");
        c.mark_stub(&format!("B{extent}.{p}w(-)"), "chain truncated");
    }
    // relabel every block by the same left multiplication
    let automorphisms = (0..ball.len())
        .map(|h| {
            let mut plane_map = BTreeMap::new();
            for g in 0..ball.len() {
                let Some(hg) = ball.mul(h, g) else { continue };
                for block in -extent..=extent {
                    let from = format!("B{block}.{}", copy_prefix(&ball, g));
                    let to = format!("B{block}.{}", copy_prefix(&ball, hg));
                    for p in &c.planes {
                        if let Some(rest) = p.id.strip_prefix(&from) {
                            plane_map.insert(p.id.clone(), format!("{to}{rest}"));
                        }
                    }
                }
            }
            AutomorphismCandidate {
                name: format!("T[{}]", ball.names[h]),
                derivative: Mat2::identity(),
                plane_map,
            }
        })
        .collect();
    Ok(Blueprint { complex: c, ball, automorphisms })
}

/// Check that every auxiliary `u(..)` slit keeps at least `separation` from
/// every other slit of its plane (exact squared-distance comparison).
pub fn separation_audit(c: &SurfaceComplex, separation: &Q) -> bool {
    use crate::geom::dist2_segs;
    let sep2 = separation * separation;
    for s in &c.slits {
        let Some(tail) = s.label.rsplit('.').next() else { continue };
        if !tail.starts_with("u(") {
            continue;
        }
        let SlitGeom::Segment(h) = &s.geom else { continue };
        let sa = crate::geom::Seg { a: s.base.clone(), b: s.base.add(h) };
        for t in c.slits_on(&s.plane) {
            let ttail = t.label.rsplit('.').next().unwrap_or("");
            if ttail.starts_with("u(") {
                continue;
            }
            if let SlitGeom::Segment(th) = &t.geom {
                let sb = crate::geom::Seg { a: t.base.clone(), b: t.base.add(th) };
                if dist2_segs(&sa, &sb) < sep2 {
                    return false;
                }
            }
        }
    }
    true
}

/// Self-similar Veech realization for a matrix group: `M[h]` carries the
/// chart `h`, untwisted unit slits meet twisted partners whose stored
/// holonomy is the generator pullback, so image holonomies agree exactly.
pub fn build_veech_selfsimilar(
    gens: &[Mat2],
    d: &EndSpaceDescriptor,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    if d.atom.char_system().is_none() {
        return Err(AssemblyError::NotCountable);
    }
    let spec = GroupSpec::MatrixGens { gens: gens.to_vec() };
    let ball = cayley_ball(&spec, cfg.ball_radius)?;
    let mut vertex = graft(d, cfg.planes_limit, cfg.slit_index_limit)?;
    for (i, g) in gens.iter().enumerate() {
        let gi = i as i64 + 1;
        let w = g.inverse().unwrap().apply(&Vec2::of(1, 0));
        // twisted slits live in the strip y in [10i, 10i+5]
        if w.y > q(3) || w.y < q(-2) {
            return Err(AssemblyError::StripOverflow(i));
        }
        let step = q(10) + Q::from_integer(sqrt_upper_bound(&w.norm2()) + 1);
        for n in 0..cfg.rows {
            vertex.add_slit(seg(
                &format!("v({i},{n},+)"),
                "P0",
                Vec2::of(2 * gi, 2 * (gi + n as i64)),
                Vec2::of(1, 0),
            ))?;
            vertex.add_slit(seg(
                &format!("v({i},{n},-)"),
                "P0",
                Vec2::new(q(10 * gi + 10) + q(n as i64) * &step, q(10 * gi + 2)),
                w.clone(),
            ))?;
        }
    }
    let mut c = assemble_copies(&vertex, &ball, true)?;
    for (i, _) in gens.iter().enumerate() {
        // ball gens alternate m{i}, m{i}' unless deduplicated
        let l = ball
            .gens
            .iter()
            .position(|(name, _)| name == &format!("m{i}"))
            .expect("generator present");
        for n in 0..cfg.rows {
            schedule(&mut c, &ball, l, &format!("v({i},{n},+)"), &format!("v({i},{n},-)"))?;
        }
    }
    let automorphisms = (0..ball.len())
        .map(|h| relabel_candidate(&c, &ball, h, ball.rho(h), &format!("A[{}]", ball.names[h])))
        .collect();
    Ok(Blueprint { complex: c, ball, automorphisms })
}

/// Finite Veech realization: the pattern assembly copied over a finite
/// matrix group, with twisted grid slits carrying holonomy `g_l * (1/2, 0)`
/// at the source and `(1/2, 0)` at the target. Placement retries with
/// doubled spacing until the slits are pairwise disjoint.
pub fn build_veech_finite(
    gens: &[Mat2],
    pattern: &ComponentPattern,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    let spec = GroupSpec::MatrixGens { gens: gens.to_vec() };
    let radius = 64;
    let ball = cayley_ball(&spec, radius)?;
    for g in 0..ball.len() {
        for l in 0..ball.gens.len() {
            if ball.mul_gen(g, l).is_none() {
                return Err(AssemblyError::GroupNotClosed(radius));
            }
        }
    }
    let half = Vec2::new(qr(1, 2), q(0));
    let mut scale = q(4);
    'attempt: for attempt in 0..6 {
        let mut vertex = pattern_vertex(pattern, 0, 0, 10, cfg)?;
        for (l, (_, e)) in ball.gens.iter().enumerate() {
            let gl = ball.spec.rho(e);
            let tw = gl.apply(&half);
            for j in 0..pattern.boundary_counts.len() {
                for k in 1..=cfg.rows {
                    let x = &scale * q(l as i64 + 1);
                    let add = vertex
                        .add_slit(seg(
                            &format!("y({j},{l},{k},+)"),
                            &format!("P{j}"),
                            Vec2::new(x.clone(), &scale * q(2 * k as i64)),
                            tw.clone(),
                        ))
                        .and_then(|_| {
                            vertex.add_slit(seg(
                                &format!("y({j},{l},{k},-)"),
                                &format!("P{j}"),
                                Vec2::new(x, &scale * q(2 * k as i64 - 1)),
                                half.clone(),
                            ))
                        });
                    if add.is_err() {
                        if attempt == 5 {
                            return Err(AssemblyError::PlacementFailed);
                        }
                        scale = &scale * q(2);
                        continue 'attempt;
                    }
                }
            }
        }
        let mut c = assemble_copies(&vertex, &ball, true)?;
        for l in 0..ball.gens.len() {
            for j in 0..pattern.boundary_counts.len() {
                for k in 1..=cfg.rows {
                    schedule(
                        &mut c,
                        &ball,
                        l,
                        &format!("y({j},{l},{k},+)"),
                        &format!("y({j},{l},{k},-)"),
                    )?;
                }
            }
        }
        let automorphisms = (0..ball.len())
            .map(|h| {
                relabel_candidate(&c, &ball, h, ball.rho(h), &format!("A[{}]", ball.names[h]))
            })
            .collect();
        return Ok(Blueprint { complex: c, ball, automorphisms });
    }
    Err(AssemblyError::PlacementFailed)
}

/// Parabolic realization: the grafted complex itself, with the induced
/// upper-triangular relabelings as certificate candidates.
pub fn build_parabolic_full(
    d: &EndSpaceDescriptor,
    cfg: &BuilderConfig,
) -> Result<Blueprint, AssemblyError> {
    if d.atom.char_system().is_none() {
        return Err(AssemblyError::NotCountable);
    }
    let c = graft(d, cfg.planes_limit, cfg.slit_index_limit)?;
    let ball = cayley_ball(&GroupSpec::cyclic(1), 1)?;
    let mut automorphisms = Vec::new();
    for (name, a) in [
        ("P[shear]", Mat2::of(1, 1, 0, 1)),
        ("P[stretch]", Mat2::new(q(1), qr(3, 2), q(0), q(2))),
    ] {
        if let Ok(cand) = crate::flatgeom::induced_parabolic_map(&c, &a, name) {
            automorphisms.push(cand);
        }
    }
    Ok(Blueprint { complex: c, ball, automorphisms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::end_space::{parse_atom, Atom};
    use crate::flatgeom::{audit_cone_angles, verify_automorphism, AutoKind};
    use crate::groups::shear;

    fn desc(text: &str, marking: GenusMarking) -> EndSpaceDescriptor {
        EndSpaceDescriptor::new(parse_atom(text).unwrap(), marking)
    }

    fn cross_gluings(c: &SurfaceComplex, tag: &str) -> usize {
        c.gluings
            .iter()
            .filter(|g| {
                let (pa, _) = g.a.rsplit_once('.').unwrap_or(("", &g.a));
                let (pb, _) = g.b.rsplit_once('.').unwrap_or(("", &g.b));
                pa != pb && g.a.contains(tag)
            })
            .count()
    }

    #[test]
    fn selfsimilar_z2_counts() {
        let d = desc("w*1+1", GenusMarking::All);
        let bp =
            build_selfsimilar_isometry(&GroupSpec::cyclic(2), &d, &BuilderConfig::default())
                .unwrap();
        assert_eq!(bp.ball.len(), 2);
        assert_eq!(cross_gluings(&bp.complex, "r("), 2);
        bp.complex.validate().unwrap();
        for cand in &bp.automorphisms {
            let rep = verify_automorphism(&bp.complex, cand).unwrap();
            assert_eq!(rep.kind, AutoKind::Translation);
        }
    }

    #[test]
    fn selfsimilar_copy_has_one_heavy_cone() {
        let d = desc("1", GenusMarking::All);
        let bp =
            build_selfsimilar_isometry(&GroupSpec::cyclic(2), &d, &BuilderConfig::default())
                .unwrap();
        let classes = audit_cone_angles(&bp.complex).unwrap();
        for name in ["e", &bp.ball.names[1].clone()] {
            let heavy: Vec<_> = classes
                .iter()
                .filter(|k| {
                    k.angle_pi != 4
                        && k.reps.iter().all(|r| r.plane.starts_with(&format!("M[{name}].")))
                })
                .collect();
            assert_eq!(heavy.len(), 1);
            assert_eq!(heavy[0].angle_pi, 18);
        }
    }

    #[test]
    fn free_tree_counts() {
        let d = desc("w*1+1", GenusMarking::None);
        let cfg = BuilderConfig::default();
        let bp1 = build_free_genus_zero(1, &d, &cfg).unwrap();
        assert_eq!(bp1.ball.len(), 3);
        assert_eq!(cross_gluings(&bp1.complex, "r("), 2);
        let bp2 = build_free_genus_zero(2, &d, &cfg).unwrap();
        assert_eq!(bp2.ball.len(), 5);
        assert_eq!(cross_gluings(&bp2.complex, "r("), 4);
        bp2.complex.validate().unwrap();
        // each copy's heavy cone is the 6 pi branch point
        let classes = audit_cone_angles(&bp1.complex).unwrap();
        let heavy: Vec<_> = classes.iter().filter(|k| k.angle_pi == 6).collect();
        assert_eq!(heavy.len(), 3);
    }

    #[test]
    fn free_requires_no_genus() {
        let d = desc("w*1+1", GenusMarking::All);
        assert!(matches!(
            build_free_genus_zero(1, &d, &BuilderConfig::default()),
            Err(AssemblyError::GenusMarked)
        ));
    }

    #[test]
    fn finite_isometry_grid_count() {
        let cfg = BuilderConfig::default();
        let bp = build_finite_isometry(
            &GroupSpec::cyclic(2),
            &ComponentPattern::default_pair(),
            &cfg,
        )
        .unwrap();
        // 2 copies * 2 components * rows cross gluings
        assert_eq!(cross_gluings(&bp.complex, "x("), 2 * 2 * cfg.rows);
        bp.complex.validate().unwrap();
        for cand in &bp.automorphisms {
            let rep = verify_automorphism(&bp.complex, cand).unwrap();
            assert_eq!(rep.kind, AutoKind::Translation);
            assert!(rep.indeterminate.is_empty());
        }
    }

    #[test]
    fn finite_isometry_sym3_family() {
        let bp = build_finite_isometry(
            &GroupSpec::sym3(),
            &ComponentPattern::default_pair(),
            &BuilderConfig::default(),
        )
        .unwrap();
        assert_eq!(bp.ball.len(), 6);
        assert_eq!(bp.automorphisms.len(), 6);
        for cand in &bp.automorphisms {
            verify_automorphism(&bp.complex, cand).unwrap();
        }
        // composition follows the right-action law
        let t = |i: usize| &bp.automorphisms[i];
        for g in 0..6 {
            for h in 0..6 {
                let hg = bp.ball.mul(h, g).unwrap();
                let composed = crate::flatgeom::compose_candidates(t(g), t(h), "c");
                for (k, v) in &composed.plane_map {
                    assert_eq!(t(hg).plane_map.get(k), Some(v));
                }
            }
        }
    }

    #[test]
    fn pattern_validation() {
        let bad = ComponentPattern { boundary_counts: vec![1, 1], annuli: vec![] };
        assert!(matches!(bad.validate(), Err(AssemblyError::DisconnectedPattern)));
        let out = ComponentPattern {
            boundary_counts: vec![1, 1],
            annuli: vec![((0, 1), (1, 0))],
        };
        assert!(matches!(out.validate(), Err(AssemblyError::PatternBounds(0, 1))));
        let reuse = ComponentPattern {
            boundary_counts: vec![2, 1],
            annuli: vec![((0, 0), (1, 0)), ((0, 0), (0, 1))],
        };
        assert!(matches!(reuse.validate(), Err(AssemblyError::PatternReuse(0, 0))));
    }

    #[test]
    fn translatable_chain1_counts() {
        let d = desc("w*1+1", GenusMarking::All);
        let cfg = BuilderConfig { ball_radius: 2, ..BuilderConfig::default() };
        let spec = GroupSpec::integers();
        let bp = build_translatable(&spec, &d, &ComponentPattern::default_pair(), &cfg).unwrap();
        assert_eq!(bp.ball.len(), 5);
        let k = bp.ball.gens.len();
        assert_eq!(k, 2);
        assert_eq!(cross_gluings(&bp.complex, "u("), 4 * k);
        assert!(separation_audit(&bp.complex, &cfg.separation));
        bp.complex.validate().unwrap();
    }

    #[test]
    fn translatable_chain2_distinct_angles() {
        let cfg = BuilderConfig::default();
        let bp = build_translatable(
            &GroupSpec::cyclic(2),
            &desc("1", GenusMarking::All),
            &ComponentPattern::default_pair(),
            &cfg,
        )
        .unwrap();
        bp.complex.validate().unwrap();
        // three blocks, distinguished angles 2 pi c_n pairwise distinct
        let classes = audit_cone_angles(&bp.complex).unwrap();
        let mut heavy: Vec<u64> =
            classes.iter().map(|k| k.angle_pi).filter(|&a| a != 4).collect();
        heavy.sort();
        heavy.dedup();
        assert_eq!(heavy, vec![6, 14, 18]);
        for cand in &bp.automorphisms {
            let rep = verify_automorphism(&bp.complex, cand).unwrap();
            assert_eq!(rep.kind, AutoKind::Translation);
        }
    }

    #[test]
    fn chain_multiplier_injective() {
        let mut seen = std::collections::HashSet::new();
        for n in -6..=6 {
            assert!(seen.insert(chain_multiplier(n)));
        }
    }

    #[test]
    fn veech_shear_counts_and_derivatives() {
        let d = desc("w*1+1", GenusMarking::All);
        let cfg = BuilderConfig::default();
        let bp = build_veech_selfsimilar(&[shear(1)], &d, &cfg).unwrap();
        assert_eq!(bp.ball.len(), 3);
        bp.complex.validate().unwrap();
        for (h, cand) in bp.automorphisms.iter().enumerate() {
            assert_eq!(cand.derivative, bp.ball.rho(h));
            verify_automorphism(&bp.complex, cand).unwrap();
        }
    }

    #[test]
    fn veech_rejects_orientation_reversal() {
        let d = desc("1", GenusMarking::All);
        let m = Mat2::of(1, 0, 0, -1);
        assert!(build_veech_selfsimilar(&[m], &d, &BuilderConfig::default()).is_err());
    }

    #[test]
    fn veech_finite_holonomy_twisting() {
        let cfg = BuilderConfig::default();
        let minus = Mat2::of(-1, 0, 0, -1);
        let bp =
            build_veech_finite(&[minus], &ComponentPattern::default_pair(), &cfg).unwrap();
        assert_eq!(bp.ball.len(), 2);
        bp.complex.validate().unwrap();
        let half = Vec2::new(qr(1, 2), q(0));
        for g in &bp.complex.gluings {
            if !g.a.contains("y(") {
                continue;
            }
            let sa = bp.complex.slit(&g.a).unwrap().clone();
            let sb = bp.complex.slit(&g.b).unwrap().clone();
            let va = bp.complex.image_holonomy(&sa).unwrap();
            let vb = bp.complex.image_holonomy(&sb).unwrap();
            assert!(va == vb || va == vb.neg());
            assert!(va == half || va == half.neg());
        }
        for cand in &bp.automorphisms {
            verify_automorphism(&bp.complex, cand).unwrap();
        }
    }

    #[test]
    fn parabolic_full_candidates_verify() {
        let d = EndSpaceDescriptor::new(Atom::ordinal("1".parse().unwrap(), 1), GenusMarking::All);
        let bp = build_parabolic_full(&d, &BuilderConfig::default()).unwrap();
        assert_eq!(bp.automorphisms.len(), 2);
        for cand in &bp.automorphisms {
            let rep = verify_automorphism(&bp.complex, cand).unwrap();
            assert_eq!(rep.kind, AutoKind::Affine);
        }
    }
}

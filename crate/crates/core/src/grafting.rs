//! End grafting: realize an end-space descriptor as a translation surface.
//!
//! A descriptor is realized by a rooted tree with all vertex degrees 2 or 3
//! whose end space is the descriptor; the tree is decomposed greedily into
//! rays, each ray gets a marked plane with the slit schedule
//! `s(n,k) = [(6k,0),(6k+1,0)]`, `t(n,k) = [(6k+2,0),(6k+3,0)]`,
//! `t'(n,k) = [(6k+4,0),(6k+5,0)]`, structural gluings `s(n,0) ~ s(n',l)`
//! realize the tree and `t ~ t'` gluings put genus along the marked rays.
//! All cone points get angle 4 pi and all saddle connections of the grafted
//! part are horizontal of length one.

use crate::end_space::{Atom, EndSpaceDescriptor, GenusMarking};
use crate::geom::{Mat2, Vec2};
use crate::ordinal::Ordinal;
use crate::surface::{Slit, SlitGeom, SurfaceComplex};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct Vertex {
    pub parent: Option<usize>,
    /// Child 0 is the canonical continuation (spine direction).
    pub children: Vec<usize>,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct RootedTree {
    pub verts: Vec<Vertex>,
    pub depth_limit: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraftError {
    #[error("descriptor atom {0} cannot be realized as a tree (empty space)")]
    EmptyAtom(String),
    #[error(
        "inconsistent limits: ray {ray} starts at offset {offset} on ray {on}, \
         beyond slit_index_limit {limit}"
    )]
    InconsistentLimits { ray: usize, on: usize, offset: usize, limit: usize },
}

/// Canonical fundamental sequence for a limit ordinal: `fs(a, k)` increases
/// strictly to `a`. For last CNF term `w^(e+1)*c` the k-th element is
/// `prefix + w^(e+1)*(c-1) + w^e*k`; for a limit exponent recurse on it.
pub fn fundamental_sequence(alpha: &Ordinal, k: u64) -> Ordinal {
    assert!(alpha.is_limit());
    let terms = alpha.terms();
    let (e, c) = terms.last().unwrap().clone();
    let mut prefix = Ordinal::zero();
    for (te, tc) in &terms[..terms.len() - 1] {
        prefix = prefix.add(&Ordinal::power_times(te.clone(), *tc));
    }
    if c > 1 {
        prefix = prefix.add(&Ordinal::power_times(e.clone(), c - 1));
    }
    if let Some(ep) = e.pred() {
        if k > 0 {
            prefix = prefix.add(&Ordinal::power_times(ep, k));
        }
        prefix
    } else {
        prefix.add(&Ordinal::power_times(fundamental_sequence(&e, k), 1))
    }
}

/// Subtree schemes: what grows below a vertex.
#[derive(Clone, Debug)]
enum Scheme {
    /// A single ray (one isolated end).
    Ray,
    /// The space `w^a + 1`: a spine accumulating copies of smaller schemes.
    Ord(Ordinal),
    /// Complete binary tree (Cantor set of ends).
    Cantor,
    /// Cantor set plus accumulating copies of an extra scheme.
    CantorPlus(Box<Scheme>),
}

impl RootedTree {
    fn add_vertex(&mut self, parent: Option<usize>) -> usize {
        let depth = parent.map_or(0, |p| self.verts[p].depth + 1);
        let id = self.verts.len();
        self.verts.push(Vertex { parent, children: vec![], depth });
        if let Some(p) = parent {
            self.verts[p].children.push(id);
        }
        id
    }

    fn grow(&mut self, v: usize, scheme: &Scheme) {
        if self.verts[v].depth >= self.depth_limit {
            return;
        }
        match scheme {
            Scheme::Ray => {
                let c = self.add_vertex(Some(v));
                self.grow(c, &Scheme::Ray);
            }
            Scheme::Ord(alpha) => {
                if alpha.is_zero() {
                    self.grow(v, &Scheme::Ray);
                    return;
                }
                // spine continuation first (child 0), then the hung subtree
                let next = self.add_vertex(Some(v));
                let sub = self.add_vertex(Some(v));
                let hung = if let Some(beta) = alpha.pred() {
                    Scheme::Ord(beta)
                } else {
                    let k = self.verts[v].depth as u64;
                    Scheme::Ord(fundamental_sequence(alpha, k))
                };
                self.grow(sub, &hung);
                self.grow(next, &Scheme::Ord(alpha.clone()));
            }
            Scheme::Cantor => {
                let l = self.add_vertex(Some(v));
                let r = self.add_vertex(Some(v));
                self.grow(l, &Scheme::Cantor);
                self.grow(r, &Scheme::Cantor);
            }
            Scheme::CantorPlus(extra) => {
                let next = self.add_vertex(Some(v));
                let e = self.add_vertex(Some(v));
                self.grow(e, extra);
                if self.verts[next].depth < self.depth_limit {
                    let back = self.add_vertex(Some(next));
                    let cantor = self.add_vertex(Some(next));
                    self.grow(cantor, &Scheme::Cantor);
                    self.grow(back, &Scheme::CantorPlus(extra.clone()));
                }
            }
        }
    }

    /// Maximal degree-2-or-3 check (root may have degree 1 or 2).
    pub fn degrees_ok(&self) -> bool {
        self.verts.iter().enumerate().all(|(i, v)| {
            let deg = v.children.len() + usize::from(v.parent.is_some());
            if v.depth == self.depth_limit {
                deg >= 1 // truncated leaf
            } else if i == 0 {
                (1..=2).contains(&deg)
            } else {
                (2..=3).contains(&deg)
            }
        })
    }
}

/// Components of a descriptor atom as tree schemes chained along a path.
fn components(atom: &Atom) -> Result<Vec<Scheme>, GraftError> {
    Ok(match atom {
        Atom::Empty => return Err(GraftError::EmptyAtom(atom.to_string())),
        Atom::Singleton => vec![Scheme::Ray],
        Atom::Cantor => vec![Scheme::Cantor],
        Atom::CantorPlusDiscrete => vec![Scheme::CantorPlus(Box::new(Scheme::Ray))],
        Atom::CantorPlusOmega(k) => vec![Scheme::CantorPlus(Box::new(Scheme::Ord(
            Ordinal::from_nat(*k),
        )))],
        Atom::Ordinal(cs) => vec![Scheme::Ord(cs.alpha.clone()); cs.degree as usize],
    })
}

/// Build the canonical truncated tree realizing the descriptor's end space.
pub fn build_tree(atom: &Atom, depth_limit: usize) -> Result<RootedTree, GraftError> {
    let comps = components(atom)?;
    let mut tree = RootedTree { verts: vec![], depth_limit };
    let root = tree.add_vertex(None);
    chain(&mut tree, root, &comps);
    debug_assert!(tree.degrees_ok());
    Ok(tree)
}

/// Hang `comps[0]`, continue the chain with the rest at the next vertex.
fn chain(tree: &mut RootedTree, v: usize, comps: &[Scheme]) {
    match comps {
        [] => {}
        [one] => tree.grow(v, one),
        [first, rest @ ..] => {
            if tree.verts[v].depth >= tree.depth_limit {
                return;
            }
            let cont = tree.add_vertex(Some(v));
            let sub = tree.add_vertex(Some(v));
            tree.grow(sub, first);
            chain(tree, cont, rest);
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ray {
    /// Vertex ids along the ray; `verts[0]` lies on an earlier ray (except
    /// for the spine).
    pub verts: Vec<usize>,
    /// `(earlier ray, offset)` with `verts[0] = rays[earlier].verts[offset]`.
    pub origin: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct RayDecomposition {
    pub rays: Vec<Ray>,
}

/// Greedy ray decomposition: the spine follows child 0 from the root; each
/// further ray branches off the earliest uncovered child in BFS order and
/// then follows child 0 to the truncation depth.
pub fn ray_decomposition(tree: &RootedTree) -> RayDecomposition {
    let n = tree.verts.len();
    // position of each vertex on the first ray covering it
    let mut on_ray: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut rays: Vec<Ray> = vec![];

    // `pos0` is the position of `start` on the ray being built
    let descend = |start: usize,
                   ray_idx: usize,
                   pos0: usize,
                   on_ray: &mut Vec<Option<(usize, usize)>>| {
        let mut verts = vec![start];
        let mut v = start;
        while let Some(&c) = tree.verts[v].children.first() {
            verts.push(c);
            v = c;
        }
        for (i, &u) in verts.iter().enumerate() {
            if on_ray[u].is_none() {
                on_ray[u] = Some((ray_idx, pos0 + i));
            }
        }
        verts
    };

    let spine = descend(0, 0, 0, &mut on_ray);
    rays.push(Ray { verts: spine, origin: None });

    // vertices in id order are already BFS-compatible within each ray; scan
    // repeatedly in id order for uncovered branch children
    for v in 0..n {
        for &c in tree.verts[v].children.iter().skip(1) {
            if on_ray[c].is_some() {
                continue;
            }
            let idx = rays.len();
            let mut verts = vec![v];
            verts.extend(descend(c, idx, 1, &mut on_ray));
            let origin = on_ray[v];
            rays.push(Ray { verts, origin });
        }
    }
    RayDecomposition { rays }
}

/// Edges (parent, child) covered by the genus rays selected by the marking.
fn genus_edges(
    tree: &RootedTree,
    dec: &RayDecomposition,
    marking: &GenusMarking,
) -> HashSet<(usize, usize)> {
    let mut set = HashSet::new();
    let mut add_ray_path = |idx: usize| {
        // path from the root to the ray's end: the ray itself, then each
        // ancestor ray up to the branch point
        let mut i = idx;
        let mut upto = dec.rays[i].verts.len();
        loop {
            for w in dec.rays[i].verts[..upto].windows(2) {
                set.insert((w[0], w[1]));
            }
            match dec.rays[i].origin {
                Some((r, off)) => {
                    i = r;
                    upto = off + 1;
                }
                None => break,
            }
        }
    };
    match marking {
        GenusMarking::None => {}
        GenusMarking::All => {
            for (v, vert) in tree.verts.iter().enumerate() {
                for &c in &vert.children {
                    set.insert((v, c));
                }
            }
        }
        GenusMarking::Spine => add_ray_path(0),
        GenusMarking::Rays(list) => {
            for &i in list {
                if i < dec.rays.len() {
                    add_ray_path(i);
                }
            }
        }
    }
    set
}

fn seg_slit(label: String, plane: &str, x: i64, y: i64) -> Slit {
    Slit {
        label,
        plane: plane.to_string(),
        base: Vec2::of(x, y),
        geom: SlitGeom::Segment(Vec2::of(1, 0)),
    }
}

/// Graft the descriptor: one plane per ray (up to `planes_limit`), slit
/// schedule on the x-axis, structural and genus gluings, unglued marked
/// slits forgotten, out-of-window gluings recorded as open stubs.
pub fn graft(
    d: &EndSpaceDescriptor,
    planes_limit: usize,
    slit_index_limit: usize,
) -> Result<SurfaceComplex, GraftError> {
    let depth_limit = planes_limit + slit_index_limit + 1;
    let tree = build_tree(&d.atom, depth_limit)?;
    let dec = ray_decomposition(&tree);
    let edges = genus_edges(&tree, &dec, &d.genus_marking);

    let n_planes = dec.rays.len().min(planes_limit);
    let mut c = SurfaceComplex::new();
    for n in 0..n_planes {
        c.add_plane(&format!("P{n}"), Mat2::identity(), false).unwrap();
    }

    // marked slits
    for (n, ray) in dec.rays.iter().enumerate().take(n_planes) {
        let plane = format!("P{n}");
        for k in 0..=slit_index_limit {
            c.add_slit(seg_slit(format!("s({n},{k})"), &plane, 6 * k as i64, 0))
                .unwrap();
            // genus slits only where the tree edge exists and is marked
            if k + 1 < ray.verts.len() && edges.contains(&(ray.verts[k], ray.verts[k + 1])) {
                c.add_slit(seg_slit(format!("t({n},{k})"), &plane, 6 * k as i64 + 2, 0))
                    .unwrap();
                c.add_slit(seg_slit(format!("t'({n},{k})"), &plane, 6 * k as i64 + 4, 0))
                    .unwrap();
                c.glue(&format!("t({n},{k})"), &format!("t'({n},{k})")).unwrap();
            }
        }
    }

    // structural gluings realizing the tree
    for (n, ray) in dec.rays.iter().enumerate() {
        let Some((on, offset)) = ray.origin else { continue };
        if n < n_planes {
            if offset > slit_index_limit {
                return Err(GraftError::InconsistentLimits {
                    ray: n,
                    on,
                    offset,
                    limit: slit_index_limit,
                });
            }
            c.glue(&format!("s({n},0)"), &format!("s({on},{offset})")).unwrap();
        } else if on < n_planes && offset <= slit_index_limit {
            // a truncated-away ray would glue here
            let target = format!("s({on},{offset})");
            if c.partner(&target).is_none() && !c.is_stub(&target) {
                c.mark_stub(&target, &format!("ray {n} beyond planes_limit"));
            }
        }
    }

    c.forget_unglued();
    c.truncation.insert("descriptor".into(), d.atom.to_string());
    c.truncation.insert("genus_marking".into(), format!("{:?}", d.genus_marking));
    c.truncation.insert("planes_limit".into(), planes_limit.to_string());
    c.truncation.insert("slit_index_limit".into(), slit_index_limit.to_string());
    c.truncation.insert("depth_limit".into(), depth_limit.to_string());
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::end_space::parse_atom;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    fn desc(s: &str) -> EndSpaceDescriptor {
        EndSpaceDescriptor::new(parse_atom(s).unwrap(), GenusMarking::All)
    }

    #[test]
    fn fundamental_sequences() {
        let fs = |a: &str, k| fundamental_sequence(&o(a), k).to_string();
        assert_eq!(fs("w", 3), "3");
        assert_eq!(fs("w", 0), "0");
        assert_eq!(fs("w^2", 2), "w*2");
        assert_eq!(fs("w*2", 3), "w*1+3");
        assert_eq!(fs("w^(w)", 2), "w^2*1");
        assert_eq!(fs("w^2+w", 4), "w^2*1+4");
        // strictly increasing and below the limit
        for a in ["w", "w^2", "w*3", "w^(w)", "w^(w+1)*2"] {
            let a = o(a);
            for k in 0..5u64 {
                assert!(fundamental_sequence(&a, k) < fundamental_sequence(&a, k + 1));
                assert!(fundamental_sequence(&a, k) < a);
            }
        }
    }

    #[test]
    fn trees_have_legal_degrees() {
        for s in ["1", "3", "w*1+1", "w*2+1", "w^2*1+1", "w^(w)*1+1", "cantor", "cantor+discrete"]
        {
            let t = build_tree(&parse_atom(s).unwrap(), 8).unwrap();
            assert!(t.degrees_ok(), "degrees violated for {s}");
        }
    }

    #[test]
    fn singleton_tree_is_a_path() {
        let t = build_tree(&Atom::Singleton, 6).unwrap();
        assert_eq!(t.verts.len(), 7);
        assert!(t.verts.iter().all(|v| v.children.len() <= 1));
        let dec = ray_decomposition(&t);
        assert_eq!(dec.rays.len(), 1);
        assert_eq!(dec.rays[0].verts.len(), 7);
    }

    #[test]
    fn ladder_tree_has_two_rays() {
        // two isolated ends: root chains two rays
        let t = build_tree(&parse_atom("2").unwrap(), 6).unwrap();
        let dec = ray_decomposition(&t);
        assert_eq!(dec.rays.len(), 2);
        assert_eq!(dec.rays[1].origin, Some((0, 0)));
    }

    #[test]
    fn spine_tree_rays_originate_on_spine() {
        let t = build_tree(&parse_atom("w*1+1").unwrap(), 8).unwrap();
        let dec = ray_decomposition(&t);
        assert!(dec.rays.len() >= 6);
        for (n, ray) in dec.rays.iter().enumerate().skip(1) {
            let (on, off) = ray.origin.unwrap();
            assert!(on < n);
            assert_eq!(dec.rays[on].verts[off], ray.verts[0]);
        }
        // every hung ray of the ladder-of-rays tree starts on the spine
        assert!(dec.rays.iter().skip(1).all(|r| r.origin.unwrap().0 == 0));
    }

    #[test]
    fn graft_loch_ness() {
        // one end, genus everywhere: a single plane, all genus pairs glued
        let c = graft(&desc("1"), 4, 4).unwrap();
        assert_eq!(c.planes.len(), 1);
        let t_gluings = c.gluings.iter().filter(|g| g.a.starts_with('t')).count();
        assert_eq!(t_gluings, 5); // one handle per slit index k = 0..=4
        // structural s slits are all forgotten (no other rays)
        assert!(c.slits.iter().all(|s| !s.label.starts_with("s(")));
    }

    #[test]
    fn graft_planar_has_no_genus() {
        let d = EndSpaceDescriptor::new(parse_atom("1").unwrap(), GenusMarking::None);
        let c = graft(&d, 4, 4).unwrap();
        assert!(c.gluings.is_empty());
    }

    #[test]
    fn graft_monster_spine() {
        let c = graft(&desc("w*1+1"), 4, 6).unwrap();
        assert_eq!(c.planes.len(), 4);
        // rays 1..3 originate on the spine at offsets 0,1,2
        for n in 1..4 {
            let g = c
                .gluings
                .iter()
                .find(|g| g.a == format!("s({n},0)"))
                .expect("structural gluing");
            assert_eq!(g.b, format!("s(0,{})", n - 1));
        }
        // truncated rays leave stubs on spine slits
        assert!(!c.open_stubs.is_empty());
        // slits on the x axis only, lower half plane of P0 untouched
        for s in &c.slits {
            assert!(s.base.y == num::BigRational::from_integer(0.into()));
        }
    }

    #[test]
    fn graft_detects_inconsistent_limits() {
        // deep spine offsets need slit indices up to the offset
        let err = graft(&desc("w*1+1"), 6, 2).unwrap_err();
        assert!(matches!(err, GraftError::InconsistentLimits { .. }), "{err:?}");
    }

    #[test]
    fn graft_json_is_deterministic() {
        let c1 = graft(&desc("w^2*2+1"), 6, 8).unwrap();
        let c2 = graft(&desc("w^2*2+1"), 6, 8).unwrap();
        assert_eq!(c1.to_json(), c2.to_json());
        c1.validate().unwrap();
    }
}

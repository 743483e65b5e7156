//! Group specifications and deterministic Cayley-ball enumeration.
//!
//! Construction schedules for surface complexes are indexed by a finite ball
//! in a finitely generated group: finite groups by multiplication table, free
//! groups, virtually cyclic groups presented as a finite-by-cyclic extension,
//! and matrix groups with exact rational entries. Each kind has a canonical
//! symmetric generating set so that balls, and everything built from them,
//! are reproducible.

use crate::geom::{Mat2, Q};
use num::Signed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GroupSpec {
    /// A finite group by its full multiplication table; element 0 is the
    /// identity and `table[i][j]` is the index of `e_i * e_j`.
    FiniteTable { elements: Vec<String>, table: Vec<Vec<usize>> },
    /// The free group of the given rank.
    Free { rank: usize },
    /// `F by Z`: elements `(f, n)` with `(f, n)(g, m) = (f phi^n(g), n + m)`
    /// where `phi` is the automorphism of the finite part given by `twist`.
    VirtuallyCyclic {
        elements: Vec<String>,
        table: Vec<Vec<usize>>,
        twist: Vec<usize>,
    },
    /// A subgroup of GL+(2, Q) given by generating matrices.
    MatrixGens { gens: Vec<Mat2> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elem {
    Finite(usize),
    /// Reduced word in the free group: letter `k > 0` is generator `k - 1`,
    /// `k < 0` its inverse.
    Word(Vec<i64>),
    Vc { f: usize, n: i64 },
    Matrix(Mat2),
}

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("multiplication table is not square over {0} elements")]
    BadTable(usize),
    #[error("element 0 must be the identity")]
    NoIdentity,
    #[error("table row {0} is not a bijection")]
    NotBijective(usize),
    #[error("multiplication table is not associative at ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    #[error("twist is not an automorphism")]
    BadTwist,
    #[error("generator {0} has non-positive determinant")]
    BadGenerator(usize),
    #[error("free rank must be positive")]
    BadRank,
}

impl GroupSpec {
    /// The cyclic group of order `n`.
    pub fn cyclic(n: usize) -> GroupSpec {
        assert!(n >= 1);
        let elements = (0..n).map(|k| format!("r{k}")).collect();
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        GroupSpec::FiniteTable { elements, table }
    }

    /// The symmetric group on three letters, as permutations of `{0, 1, 2}`.
    pub fn sym3() -> GroupSpec {
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [1, 2, 0],
            [2, 0, 1],
            [1, 0, 2],
            [0, 2, 1],
            [2, 1, 0],
        ];
        let elements = vec!["e", "r", "rr", "s", "sr", "srr"]
            .into_iter()
            .map(String::from)
            .collect();
        let compose = |p: &[usize; 3], q: &[usize; 3]| [p[q[0]], p[q[1]], p[q[2]]];
        let table = perms
            .iter()
            .map(|p| {
                perms
                    .iter()
                    .map(|q| {
                        let pq = compose(p, q);
                        perms.iter().position(|r| *r == pq).unwrap()
                    })
                    .collect()
            })
            .collect();
        GroupSpec::FiniteTable { elements, table }
    }

    /// `Z` as the trivial-fiber virtually cyclic group.
    pub fn integers() -> GroupSpec {
        GroupSpec::VirtuallyCyclic {
            elements: vec!["e".to_string()],
            table: vec![vec![0]],
            twist: vec![0],
        }
    }

    /// The infinite dihedral-flavored extension `F by Z` for a finite group
    /// given by `finite`, with trivial twist.
    pub fn finite_by_z(finite: &GroupSpec) -> GroupSpec {
        let GroupSpec::FiniteTable { elements, table } = finite else {
            panic!("finite_by_z needs a finite table")
        };
        GroupSpec::VirtuallyCyclic {
            elements: elements.clone(),
            table: table.clone(),
            twist: (0..elements.len()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), GroupError> {
        match self {
            GroupSpec::FiniteTable { elements, table } => {
                check_table(elements.len(), table)
            }
            GroupSpec::Free { rank } => {
                if *rank == 0 {
                    return Err(GroupError::BadRank);
                }
                Ok(())
            }
            GroupSpec::VirtuallyCyclic { elements, table, twist } => {
                let n = elements.len();
                check_table(n, table)?;
                if twist.len() != n || twist[0] != 0 {
                    return Err(GroupError::BadTwist);
                }
                let mut seen = vec![false; n];
                for &t in twist {
                    if t >= n || seen[t] {
                        return Err(GroupError::BadTwist);
                    }
                    seen[t] = true;
                }
                for i in 0..n {
                    for j in 0..n {
                        if twist[table[i][j]] != table[twist[i]][twist[j]] {
                            return Err(GroupError::BadTwist);
                        }
                    }
                }
                Ok(())
            }
            GroupSpec::MatrixGens { gens } => {
                for (i, g) in gens.iter().enumerate() {
                    if !g.det().is_positive() {
                        return Err(GroupError::BadGenerator(i));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn identity(&self) -> Elem {
        match self {
            GroupSpec::FiniteTable { .. } => Elem::Finite(0),
            GroupSpec::Free { .. } => Elem::Word(vec![]),
            GroupSpec::VirtuallyCyclic { .. } => Elem::Vc { f: 0, n: 0 },
            GroupSpec::MatrixGens { .. } => Elem::Matrix(Mat2::identity()),
        }
    }

    /// The canonical symmetric generating set, with labels.
    pub fn generators(&self) -> Vec<(String, Elem)> {
        match self {
            GroupSpec::FiniteTable { elements, .. } => (1..elements.len())
                .map(|i| (elements[i].clone(), Elem::Finite(i)))
                .collect(),
            GroupSpec::Free { rank } => {
                let mut v = Vec::new();
                for k in 0..*rank {
                    let name = (b'a' + (k % 26) as u8) as char;
                    v.push((format!("{name}"), Elem::Word(vec![k as i64 + 1])));
                    v.push((format!("{name}'"), Elem::Word(vec![-(k as i64 + 1)])));
                }
                v
            }
            GroupSpec::VirtuallyCyclic { elements, .. } => {
                let mut v: Vec<(String, Elem)> = (1..elements.len())
                    .map(|i| (elements[i].clone(), Elem::Vc { f: i, n: 0 }))
                    .collect();
                v.push(("z".to_string(), Elem::Vc { f: 0, n: 1 }));
                v.push(("z'".to_string(), Elem::Vc { f: 0, n: -1 }));
                v
            }
            GroupSpec::MatrixGens { gens } => {
                let mut v = Vec::new();
                for (i, g) in gens.iter().enumerate() {
                    v.push((format!("m{i}"), Elem::Matrix(g.clone())));
                    v.push((format!("m{i}'"), Elem::Matrix(g.inverse().unwrap())));
                }
                // a generating set is a set: drop repeats (e.g. involutions)
                let mut out: Vec<(String, Elem)> = Vec::new();
                for (name, e) in v {
                    if !out.iter().any(|(_, x)| *x == e) {
                        out.push((name, e));
                    }
                }
                out
            }
        }
    }

    pub fn mul(&self, x: &Elem, y: &Elem) -> Elem {
        match (self, x, y) {
            (GroupSpec::FiniteTable { table, .. }, Elem::Finite(i), Elem::Finite(j)) => {
                Elem::Finite(table[*i][*j])
            }
            (GroupSpec::Free { .. }, Elem::Word(u), Elem::Word(v)) => {
                let mut w = u.clone();
                for &l in v {
                    if w.last() == Some(&-l) {
                        w.pop();
                    } else {
                        w.push(l);
                    }
                }
                Elem::Word(w)
            }
            (
                GroupSpec::VirtuallyCyclic { table, twist, .. },
                Elem::Vc { f, n },
                Elem::Vc { f: g, n: m },
            ) => {
                let mut gg = *g;
                if *n >= 0 {
                    for _ in 0..*n {
                        gg = twist[gg];
                    }
                } else {
                    let inv = invert_perm(twist);
                    for _ in 0..n.unsigned_abs() {
                        gg = inv[gg];
                    }
                }
                Elem::Vc { f: table[*f][gg], n: n + m }
            }
            (GroupSpec::MatrixGens { .. }, Elem::Matrix(a), Elem::Matrix(b)) => {
                Elem::Matrix(a.mul(b))
            }
            _ => panic!("element kind does not match group kind"),
        }
    }

    pub fn inverse(&self, x: &Elem) -> Elem {
        match (self, x) {
            (GroupSpec::FiniteTable { table, .. }, Elem::Finite(i)) => {
                Elem::Finite(table[*i].iter().position(|&k| k == 0).unwrap())
            }
            (GroupSpec::Free { .. }, Elem::Word(u)) => {
                Elem::Word(u.iter().rev().map(|l| -l).collect())
            }
            (GroupSpec::VirtuallyCyclic { table, twist, .. }, Elem::Vc { f, n }) => {
                let f_inv = table[*f].iter().position(|&k| k == 0).unwrap();
                let mut g = f_inv;
                if *n >= 0 {
                    let inv = invert_perm(twist);
                    for _ in 0..*n {
                        g = inv[g];
                    }
                } else {
                    for _ in 0..n.unsigned_abs() {
                        g = twist[g];
                    }
                }
                Elem::Vc { f: g, n: -n }
            }
            (GroupSpec::MatrixGens { .. }, Elem::Matrix(a)) => {
                Elem::Matrix(a.inverse().expect("positive determinant"))
            }
            _ => panic!("element kind does not match group kind"),
        }
    }

    /// The linear representation used for chart twisting: matrices represent
    /// themselves, everything else is rigid.
    pub fn rho(&self, x: &Elem) -> Mat2 {
        match x {
            Elem::Matrix(a) => a.clone(),
            _ => Mat2::identity(),
        }
    }
}

fn check_table(n: usize, table: &[Vec<usize>]) -> Result<(), GroupError> {
    if n == 0 || table.len() != n || table.iter().any(|r| r.len() != n) {
        return Err(GroupError::BadTable(n));
    }
    if table.iter().flatten().any(|&x| x >= n) {
        return Err(GroupError::BadTable(n));
    }
    for i in 0..n {
        if table[0][i] != i || table[i][0] != i {
            return Err(GroupError::NoIdentity);
        }
    }
    for i in 0..n {
        let mut row = vec![false; n];
        let mut col = vec![false; n];
        for j in 0..n {
            row[table[i][j]] = true;
            col[table[j][i]] = true;
        }
        if row.iter().any(|x| !x) || col.iter().any(|x| !x) {
            return Err(GroupError::NotBijective(i));
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if table[table[i][j]][k] != table[i][table[j][k]] {
                    return Err(GroupError::NotAssociative(i, j, k));
                }
            }
        }
    }
    Ok(())
}

fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

fn elem_key(e: &Elem) -> String {
    match e {
        Elem::Finite(i) => format!("f{i}"),
        Elem::Word(w) => format!("w{w:?}"),
        Elem::Vc { f, n } => format!("v{f},{n}"),
        Elem::Matrix(m) => format!("m{m:?}"),
    }
}

/// A finite ball in the group: element 0 is the identity, elements appear in
/// breadth-first order (and within a layer, in generator order).
#[derive(Clone, Debug)]
pub struct Ball {
    pub spec: GroupSpec,
    pub elements: Vec<Elem>,
    pub names: Vec<String>,
    pub gens: Vec<(String, Elem)>,
    /// Word-length of each element.
    pub depth: Vec<usize>,
    index: BTreeMap<String, usize>,
}

impl Ball {
    pub fn lookup(&self, e: &Elem) -> Option<usize> {
        self.index.get(&elem_key(e)).copied()
    }

    /// Index of `elements[i] * gens[l]`, when inside the ball.
    pub fn mul_gen(&self, i: usize, l: usize) -> Option<usize> {
        self.lookup(&self.spec.mul(&self.elements[i], &self.gens[l].1))
    }

    /// Index of `gens[l] * elements[i]`, when inside the ball.
    pub fn gen_mul(&self, l: usize, i: usize) -> Option<usize> {
        self.lookup(&self.spec.mul(&self.gens[l].1, &self.elements[i]))
    }

    /// Index of `elements[i] * elements[j]`, when inside the ball.
    pub fn mul(&self, i: usize, j: usize) -> Option<usize> {
        self.lookup(&self.spec.mul(&self.elements[i], &self.elements[j]))
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rho(&self, i: usize) -> Mat2 {
        self.spec.rho(&self.elements[i])
    }
}

/// The ball of the given radius under the canonical generating set.
pub fn cayley_ball(spec: &GroupSpec, radius: usize) -> Result<Ball, GroupError> {
    spec.validate()?;
    let gens = spec.generators();
    let id = spec.identity();
    let mut elements = vec![id.clone()];
    let mut names = vec!["e".to_string()];
    let mut depth = vec![0usize];
    let mut index = BTreeMap::new();
    index.insert(elem_key(&id), 0usize);

    let mut frontier = vec![0usize];
    for layer in 1..=radius {
        let mut next = Vec::new();
        for &i in &frontier {
            for (gname, g) in &gens {
                let e = spec.mul(&elements[i], g);
                let key = elem_key(&e);
                if index.contains_key(&key) {
                    continue;
                }
                let name = if depth[i] == 0 {
                    gname.clone()
                } else {
                    format!("{}.{}", names[i], gname)
                };
                index.insert(key, elements.len());
                next.push(elements.len());
                elements.push(e);
                names.push(name);
                depth.push(layer);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(Ball { spec: spec.clone(), elements, names, gens, depth, index })
}

/// The single-shear Veech-style matrix group generator `[[1, s], [0, 1]]`.
pub fn shear(s: i64) -> Mat2 {
    let mut m = Mat2::identity();
    m.b = Q::from_integer(s.into());
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{One, Zero};

    #[test]
    fn free_rank_two_ball_of_radius_two_has_seventeen_elements() {
        let ball = cayley_ball(&GroupSpec::Free { rank: 2 }, 2).unwrap();
        assert_eq!(ball.len(), 17);
        assert_eq!(ball.depth.iter().filter(|&&d| d == 1).count(), 4);
        assert_eq!(ball.depth.iter().filter(|&&d| d == 2).count(), 12);
        assert_eq!(ball.names[0], "e");
    }

    #[test]
    fn cyclic_two_ball_is_whole_group() {
        let ball = cayley_ball(&GroupSpec::cyclic(2), 1).unwrap();
        assert_eq!(ball.len(), 2);
        assert_eq!(ball.mul(1, 1), Some(0));
    }

    #[test]
    fn single_shear_ball_radius_three() {
        let spec = GroupSpec::MatrixGens { gens: vec![shear(1)] };
        let ball = cayley_ball(&spec, 3).unwrap();
        assert_eq!(ball.len(), 7);
        // the ball is the set of shears with |k| <= 3
        for e in &ball.elements {
            let Elem::Matrix(m) = e else { panic!() };
            assert!(m.a.is_one() && m.c.is_zero() && m.d.is_one());
        }
    }

    #[test]
    fn sym3_is_a_group_and_fills_at_radius_one() {
        let spec = GroupSpec::sym3();
        spec.validate().unwrap();
        let ball = cayley_ball(&spec, 1).unwrap();
        assert_eq!(ball.len(), 6);
        // r * s = sr in the chosen naming
        let r = ball.lookup(&Elem::Finite(1)).unwrap();
        let s = ball.lookup(&Elem::Finite(3)).unwrap();
        assert!(ball.mul(r, s).is_some());
    }

    #[test]
    fn integers_ball_is_an_interval() {
        let ball = cayley_ball(&GroupSpec::integers(), 4).unwrap();
        assert_eq!(ball.len(), 9);
        let z = ball.lookup(&Elem::Vc { f: 0, n: 1 }).unwrap();
        assert_eq!(ball.mul(z, z), ball.lookup(&Elem::Vc { f: 0, n: 2 }));
        assert_eq!(ball.lookup(&Elem::Vc { f: 0, n: 5 }), None);
    }

    #[test]
    fn virtually_cyclic_with_twist_multiplies_correctly() {
        // Z/3 by Z with the inversion twist is well-defined only if the
        // twist is an automorphism; x -> -x on Z/3 is one.
        let GroupSpec::FiniteTable { elements, table } = GroupSpec::cyclic(3) else {
            panic!()
        };
        let spec = GroupSpec::VirtuallyCyclic {
            elements,
            table,
            twist: vec![0, 2, 1],
        };
        spec.validate().unwrap();
        // z r z^-1 = phi(r) = r^2
        let z = Elem::Vc { f: 0, n: 1 };
        let r = Elem::Vc { f: 1, n: 0 };
        let zi = spec.inverse(&z);
        let conj = spec.mul(&spec.mul(&z, &r), &zi);
        assert_eq!(conj, Elem::Vc { f: 2, n: 0 });
        // inverses really invert
        for e in [Elem::Vc { f: 2, n: -3 }, Elem::Vc { f: 1, n: 2 }] {
            assert_eq!(spec.mul(&e, &spec.inverse(&e)), spec.identity());
        }
    }

    #[test]
    fn bad_tables_are_rejected() {
        let bad = GroupSpec::FiniteTable {
            elements: vec!["e".into(), "x".into()],
            table: vec![vec![0, 1], vec![1, 1]],
        };
        assert!(bad.validate().is_err());
    }
}

//! End spaces of infinite-genus surfaces and their classification.
//!
//! A countable compact end space is, up to homeomorphism, an ordinal
//! `w^a * n + 1`; we carry it as its characteristic system `(a, n)`
//! (Cantor-Bendixson rank `a + 1`, degree `n`). The uncountable atoms are the
//! Cantor set and two fixed composite presets (Cantor set together with a
//! countable discrete set, or copies of `w^k + 1`, accumulating on one point).

use crate::ordinal::Ordinal;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharSystem {
    pub alpha: Ordinal,
    pub degree: u64,
}

impl CharSystem {
    pub fn new(alpha: Ordinal, degree: u64) -> Self {
        assert!(degree >= 1);
        CharSystem { alpha, degree }
    }

    /// Cantor-Bendixson rank of the space `w^alpha * degree + 1`.
    pub fn cb_rank(&self) -> Ordinal {
        self.alpha.succ()
    }
}

/// Which ends carry (infinite) genus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenusMarking {
    /// Every end is accumulated by genus.
    All,
    /// No genus anywhere (the surface is planar).
    None,
    /// Only the canonical spine end.
    Spine,
    /// Exactly the listed rays of the canonical ray decomposition.
    Rays(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    /// Countable compact space `w^alpha * n + 1` (with `(0, n)` meaning n
    /// isolated ends).
    Ordinal(CharSystem),
    /// One end.
    Singleton,
    /// The Cantor set.
    Cantor,
    /// Cantor set plus a countable discrete set accumulating on one of its
    /// points.
    CantorPlusDiscrete,
    /// Cantor set plus copies of `w^k + 1` accumulating on one of its points.
    CantorPlusOmega(u64),
    /// The empty space; produced only as a derivative.
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EndSpaceDescriptor {
    pub atom: Atom,
    pub genus_marking: GenusMarking,
}

impl EndSpaceDescriptor {
    pub fn new(atom: Atom, genus_marking: GenusMarking) -> Self {
        EndSpaceDescriptor { atom, genus_marking }
    }

    /// Countable atom `w^alpha * n + 1` with genus everywhere.
    pub fn ordinal(alpha: Ordinal, degree: u64) -> Self {
        EndSpaceDescriptor::new(Atom::ordinal(alpha, degree), GenusMarking::All)
    }
}

impl Atom {
    /// Normalized countable atom: `(0, 1)` collapses to `Singleton`.
    pub fn ordinal(alpha: Ordinal, degree: u64) -> Atom {
        if alpha.is_zero() && degree == 1 {
            Atom::Singleton
        } else {
            Atom::Ordinal(CharSystem::new(alpha, degree))
        }
    }

    pub fn char_system(&self) -> Option<CharSystem> {
        match self {
            Atom::Ordinal(cs) => Some(cs.clone()),
            Atom::Singleton => Some(CharSystem::new(Ordinal::zero(), 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Singleton => write!(f, "1"),
            Atom::Cantor => write!(f, "cantor"),
            Atom::CantorPlusDiscrete => write!(f, "cantor+discrete"),
            Atom::CantorPlusOmega(k) => write!(f, "cantor+w^{k}"),
            Atom::Empty => write!(f, "empty"),
            Atom::Ordinal(cs) => {
                let n = cs.degree;
                if cs.alpha.is_zero() {
                    write!(f, "{n}")
                } else if cs.alpha.as_nat() == Some(1) {
                    write!(f, "w*{n}+1")
                } else if let Some(k) = cs.alpha.as_nat() {
                    write!(f, "w^{k}*{n}+1")
                } else {
                    write!(f, "w^({})*{n}+1", cs.alpha)
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EndSpaceError {
    #[error("{0}")]
    Parse(String),
    #[error("end space expression is not compact: {0} is a limit ordinal")]
    NotCompact(Ordinal),
    #[error("classification requires genus_marking = all (surfaces of infinite genus everywhere)")]
    MarkingNotAll,
    #[error("the empty space has no classification")]
    EmptyAtom,
    #[error("Cantor-Bendixson iteration does not terminate on a non-scattered space")]
    NotScattered,
}

/// Characteristic system of a compact countable space written as an arbitrary
/// successor-ordinal expression (e.g. `w^2 + w + 1` gives `(2, 1)`).
pub fn char_system(expr: &Ordinal) -> Result<CharSystem, EndSpaceError> {
    if let Some(n) = expr.as_nat() {
        if n == 0 {
            return Err(EndSpaceError::Parse("the empty expression 0 is not a space".into()));
        }
        return Ok(CharSystem::new(Ordinal::zero(), n));
    }
    if !expr.is_successor() {
        return Err(EndSpaceError::NotCompact(expr.clone()));
    }
    let (alpha, degree) = expr.leading().unwrap();
    Ok(CharSystem::new(alpha.clone(), degree))
}

/// Parse the descriptor text grammar: an ordinal expression (`w^2*2+1`, `5`,
/// `1`), `cantor`, or a composite preset (`cantor+discrete`, `cantor+w^3`).
pub fn parse_atom(text: &str) -> Result<Atom, EndSpaceError> {
    let t = text.trim();
    if t == "cantor" {
        return Ok(Atom::Cantor);
    }
    if t == "cantor+discrete" {
        return Ok(Atom::CantorPlusDiscrete);
    }
    if let Some(rest) = t.strip_prefix("cantor+w^") {
        let k = rest
            .trim()
            .parse()
            .map_err(|_| EndSpaceError::Parse(format!("bad preset exponent {rest:?}")))?;
        return Ok(Atom::CantorPlusOmega(k));
    }
    let expr: Ordinal = t.parse().map_err(|e| EndSpaceError::Parse(format!("{e}")))?;
    let cs = char_system(&expr)?;
    Ok(Atom::ordinal(cs.alpha, cs.degree))
}

/// One symbolic Cantor-Bendixson derivative: the set of accumulation points.
///
/// For `w^a * n + 1` the derivative is `w^a' * n + 1` where `1 + a' = a`; a
/// finite rank drops by one and an infinite rank is a fixed point of the
/// single step (the transfinite stages are handled by [`cb_iterate`]).
pub fn cb_derivative(d: &EndSpaceDescriptor) -> EndSpaceDescriptor {
    let atom = match &d.atom {
        Atom::Empty => Atom::Empty,
        Atom::Singleton => Atom::Empty,
        Atom::Cantor => Atom::Cantor,
        Atom::CantorPlusDiscrete => Atom::Cantor,
        Atom::CantorPlusOmega(0) => Atom::Cantor,
        Atom::CantorPlusOmega(k) => Atom::CantorPlusOmega(k - 1),
        Atom::Ordinal(cs) => {
            if cs.alpha.is_zero() {
                Atom::Empty
            } else if let Some(m) = cs.alpha.as_nat() {
                Atom::ordinal(Ordinal::from_nat(m - 1), cs.degree)
            } else {
                Atom::Ordinal(cs.clone()) // infinite rank: 1 + a = a
            }
        }
    };
    EndSpaceDescriptor::new(atom, d.genus_marking.clone())
}

/// A stage of the transfinite Cantor-Bendixson iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CbStage {
    /// Ordinal number of derivatives taken so far.
    pub stage: Ordinal,
    pub atom: Atom,
}

/// Transfinite Cantor-Bendixson iteration of a scattered descriptor, with
/// limit stages taken as intersections in one symbolic jump.
///
/// For `w^a * n + 1` the trace ends with the finite stage `(0, n)` (n points)
/// at stage `a` and the empty space at stage `a + 1 = cb_rank`.
pub fn cb_iterate(d: &EndSpaceDescriptor) -> Result<Vec<CbStage>, EndSpaceError> {
    let mut stages = vec![CbStage { stage: Ordinal::zero(), atom: d.atom.clone() }];
    loop {
        let last = stages.last().unwrap().clone();
        let next = match &last.atom {
            Atom::Empty => break,
            Atom::Cantor | Atom::CantorPlusDiscrete | Atom::CantorPlusOmega(_) => {
                return Err(EndSpaceError::NotScattered)
            }
            Atom::Singleton => CbStage { stage: last.stage.succ(), atom: Atom::Empty },
            Atom::Ordinal(cs) => {
                if cs.alpha.is_zero() {
                    CbStage { stage: last.stage.succ(), atom: Atom::Empty }
                } else if cs.alpha.as_nat().is_some() {
                    let d = cb_derivative(&EndSpaceDescriptor::new(
                        last.atom.clone(),
                        d.genus_marking.clone(),
                    ));
                    CbStage { stage: last.stage.succ(), atom: d.atom }
                } else {
                    // limit jump: after `limit_part(a)` stages only
                    // `w^finite_part(a) * n + 1` survives
                    let gamma = cs.alpha.limit_part();
                    let m = cs.alpha.finite_part();
                    CbStage {
                        stage: last.stage.add(&gamma),
                        atom: Atom::ordinal(Ordinal::from_nat(m), cs.degree),
                    }
                }
            }
        };
        stages.push(next);
    }
    Ok(stages)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrichotomyClass {
    SelfSimilar,
    TranslatableNotSelfSimilar,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupClass {
    AnyCountable,
    VirtuallyCyclic,
    Finite,
}

/// Trichotomy for surfaces of infinite genus whose every end is accumulated
/// by genus: self-similar (degree one or Cantor-type), translatable but not
/// self-similar (degree two with zero or successor rank), or neither.
pub fn classify_trichotomy(d: &EndSpaceDescriptor) -> Result<TrichotomyClass, EndSpaceError> {
    if d.genus_marking != GenusMarking::All {
        return Err(EndSpaceError::MarkingNotAll);
    }
    match &d.atom {
        Atom::Empty => Err(EndSpaceError::EmptyAtom),
        Atom::Cantor | Atom::CantorPlusDiscrete | Atom::CantorPlusOmega(_) => {
            Ok(TrichotomyClass::SelfSimilar)
        }
        Atom::Singleton => Ok(TrichotomyClass::SelfSimilar),
        Atom::Ordinal(cs) => {
            if cs.degree == 1 {
                Ok(TrichotomyClass::SelfSimilar)
            } else if cs.degree == 2 && (cs.alpha.is_zero() || cs.alpha.is_successor()) {
                Ok(TrichotomyClass::TranslatableNotSelfSimilar)
            } else {
                Ok(TrichotomyClass::Other)
            }
        }
    }
}

/// Which isometry groups are realizable on a surface with this end space:
/// every countable group (self-similar), exactly the virtually cyclic ones
/// (translatable, not self-similar), or only finite groups.
pub fn realizable_isometry_groups(d: &EndSpaceDescriptor) -> Result<GroupClass, EndSpaceError> {
    Ok(match classify_trichotomy(d)? {
        TrichotomyClass::SelfSimilar => GroupClass::AnyCountable,
        TrichotomyClass::TranslatableNotSelfSimilar => GroupClass::VirtuallyCyclic,
        TrichotomyClass::Other => GroupClass::Finite,
    })
}

//! Acceptance suite: one test per criterion, each printing a single
//! `ACCEPT n: PASS` / `ACCEPT n: FAIL` line before asserting.

use std::collections::BTreeMap;
use std::process::Command;

use num::{Signed, Zero};

use flatsurf_core::assembly::{
    build_selfsimilar_isometry, build_veech_finite, build_veech_selfsimilar, BuilderConfig,
    ComponentPattern,
};
use flatsurf_core::end_space::{
    cb_iterate, classify_trichotomy, realizable_isometry_groups, Atom, EndSpaceDescriptor,
    GroupClass, TrichotomyClass,
};
use flatsurf_core::flatgeom::{
    audit_cone_angles, develop_ray, holonomy_spectrum, induced_parabolic_map,
    saddle_connections, verify_automorphism, AutoKind, DevContext, Rect, Region, Termination,
};
use flatsurf_core::geom::{q, qr, Mat2, Q, Vec2};
use flatsurf_core::grafting::graft;
use flatsurf_core::groups::GroupSpec;
use flatsurf_core::ordinal::Ordinal;
use flatsurf_core::surface::{Slit, SlitGeom, SurfaceComplex, SurgeryKind};

fn accept(n: usize, result: Result<(), String>) {
    match result {
        Ok(()) => println!("ACCEPT {n}: PASS"),
        Err(msg) => {
            println!("ACCEPT {n}: FAIL");
            panic!("criterion {n}: {msg}");
        }
    }
}

fn check(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn o(s: &str) -> Ordinal {
    s.parse().unwrap()
}

/// Rank/degree law: the iterated derivative of `w^a * n + 1` shows the
/// finite stage of size n and empties exactly at stage `a + 1`.
#[test]
fn criterion_1_ordinal_rank_degree() {
    let run = || -> Result<(), String> {
        let alphas = [
            "0", "1", "2", "3", "4", "w", "w+1", "w+2", "w*2", "w*2+1", "w*3+2", "w^2",
            "w^2+1", "w^2+w", "w^2+2", "w^2*3", "w^2*3+w*2", "w^3+w", "w^(w)",
            "w^(w)+1", "w^(w)+3", "w^(w)*2+3", "w^(w+1)", "w^(w^2)",
        ];
        let mut cases = 0;
        for a in alphas {
            let alpha = o(a);
            if alpha.cnf_size() > 4 {
                return Err(format!("alpha {a} exceeds CNF size 4"));
            }
            for n in 1..=4u64 {
                let d = EndSpaceDescriptor::ordinal(alpha.clone(), n);
                let stages = cb_iterate(&d).map_err(|e| e.to_string())?;
                let last = stages.last().unwrap();
                check(last.atom == Atom::Empty, &format!("({a},{n}) does not empty"))?;
                check(
                    last.stage == alpha.succ(),
                    &format!("({a},{n}) empties at stage {} not rank {}", last.stage, alpha.succ()),
                )?;
                let penult = &stages[stages.len() - 2];
                check(
                    penult.atom == Atom::ordinal(Ordinal::zero(), n),
                    &format!("({a},{n}) finite stage is {} not {n} points", penult.atom),
                )?;
                cases += 1;
            }
        }
        check(cases >= 50, &format!("only {cases} cases"))
    };
    accept(1, run());
}

/// Countable-case classifier on a 30-case grid.
#[test]
fn criterion_2_classifier_grid() {
    use GroupClass::*;
    use TrichotomyClass::*;
    let run = || -> Result<(), String> {
        let alphas = ["0", "1", "2", "w", "w+1", "w^2*3", "w^(w)", "3"];
        let mut cases: Vec<(Ordinal, u64)> = Vec::new();
        for a in alphas.iter().take(7) {
            for n in [1u64, 2, 3, 5] {
                cases.push((o(a), n));
            }
        }
        cases.push((o("3"), 2));
        cases.push((o("w*2"), 2));
        check(cases.len() == 30, "grid size")?;
        for (alpha, n) in cases {
            let d = EndSpaceDescriptor::ordinal(alpha.clone(), n);
            let tri = classify_trichotomy(&d).map_err(|e| e.to_string())?;
            let grp = realizable_isometry_groups(&d).map_err(|e| e.to_string())?;
            let (want_tri, want_grp) = if n == 1 {
                (SelfSimilar, AnyCountable)
            } else if n == 2 && (alpha.is_zero() || alpha.is_successor()) {
                (TranslatableNotSelfSimilar, VirtuallyCyclic)
            } else {
                (Other, Finite)
            };
            check(
                tri == want_tri && grp == want_grp,
                &format!("({alpha},{n}) gave {tri:?}/{grp:?}, want {want_tri:?}/{want_grp:?}"),
            )?;
        }
        Ok(())
    };
    accept(2, run());
}

fn window_all_planes(c: &SurfaceComplex, x0: i64, y0: i64, x1: i64, y1: i64) -> Region {
    c.planes
        .iter()
        .map(|p| (p.id.clone(), Rect::of(x0, y0, x1, y1)))
        .collect()
}

/// End-grafting certificates at planes_limit 6, slit_index_limit 8.
#[test]
fn criterion_3_grafting_certificates() {
    let run = || -> Result<(), String> {
        for (a, n) in [("1", 1u64), ("2", 1)] {
            let d = EndSpaceDescriptor::ordinal(o(a), n);
            let c = graft(&d, 6, 8).map_err(|e| e.to_string())?;
            c.validate().map_err(|e| e.to_string())?;
            // (a) every interior cone point has angle 4 pi
            let classes = audit_cone_angles(&c).map_err(|e| e.to_string())?;
            for k in &classes {
                check(k.angle_pi == 4, &format!("graft(({a},{n})) cone angle {} pi", k.angle_pi))?;
            }
            // (b) saddle connections with bound 3 in the slit window are
            // all horizontal of unit length
            let ctx = DevContext::new(&c).map_err(|e| e.to_string())?;
            let region = window_all_planes(&c, -2, -2, 56, 2);
            let rep = saddle_connections(&ctx, &q(3), Some(&region), 12);
            let unit = Vec2::of(1, 0);
            for h in holonomy_spectrum(&rep) {
                check(h == unit, &format!("graft(({a},{n})) holonomy {:?}", (h.x, h.y)))?;
            }
            check(!rep.connections.is_empty(), "no connections found")?;
            // (c) the half-plane y <= -1 of P0 meets no slit
            for s in c.slits_on("P0") {
                let low = match &s.geom {
                    SlitGeom::Segment(h) => s.base.y <= q(-1) || &s.base.y + &h.y <= q(-1),
                    SlitGeom::Ray(dir) => s.base.y <= q(-1) || dir.y.is_negative(),
                };
                check(!low, &format!("slit {} reaches y <= -1", s.label))?;
            }
        }
        Ok(())
    };
    accept(3, run());
}

/// Isometry-builder certificate for Z/2, Z/4, S3.
#[test]
fn criterion_4_isometry_builders() {
    let run = || -> Result<(), String> {
        let d = EndSpaceDescriptor::ordinal(o("1"), 1);
        let cfg = BuilderConfig::default();
        for spec in [GroupSpec::cyclic(2), GroupSpec::cyclic(4), GroupSpec::sym3()] {
            let bp = build_selfsimilar_isometry(&spec, &d, &cfg).map_err(|e| e.to_string())?;
            bp.complex.validate().map_err(|e| e.to_string())?;
            for cand in &bp.automorphisms {
                let rep = verify_automorphism(&bp.complex, cand).map_err(|e| e.to_string())?;
                check(
                    rep.kind == AutoKind::Translation,
                    &format!("{} is not a translation", cand.name),
                )?;
            }
            let classes = audit_cone_angles(&bp.complex).map_err(|e| e.to_string())?;
            let ctx = DevContext::new(&bp.complex).map_err(|e| e.to_string())?;
            for name in &bp.ball.names {
                let prefix = format!("M[{name}].");
                // exactly one cone point off the slit-pair angle 4 pi
                let heavy: Vec<_> = classes
                    .iter()
                    .filter(|k| {
                        k.angle_pi != 4 && k.reps.iter().all(|r| r.plane.starts_with(&prefix))
                    })
                    .collect();
                check(
                    heavy.len() == 1 && heavy[0].angle_pi == 18,
                    &format!("copy {name} heavy cones: {:?}", heavy.len()),
                )?;
                // the < 1 saddle set in the icosagon window is the 10 edges
                let plane = format!("{prefix}H");
                let sg = bp
                    .complex
                    .surgeries_on(&plane)
                    .next()
                    .ok_or("missing icosagon")?;
                let SurgeryKind::Polygon { sides } = &sg.kind else {
                    return Err("not a polygon".to_string());
                };
                let longest = sides.iter().map(|s| s.norm2()).max().unwrap();
                check(longest < q(1), "longest icosagon side must be below 1")?;
                let mut region: Region = BTreeMap::new();
                region.insert(plane.clone(), Rect::of(-110, 90, -90, 110));
                let rep = saddle_connections(&ctx, &q(1), Some(&region), 24);
                check(rep.complete, &format!("copy {name} window search truncated"))?;
                check(
                    rep.connections.len() == 10
                        && rep.connections.iter().all(|x| x.via.starts_with("poly:")),
                    &format!("copy {name} has {} window connections", rep.connections.len()),
                )?;
                let mut lens: Vec<&Q> = rep.connections.iter().map(|x| &x.length2).collect();
                lens.sort();
                lens.dedup();
                check(lens.len() == 10, "side lengths are not pairwise distinct")?;
            }
        }
        Ok(())
    };
    accept(4, run());
}

/// Veech holonomy algebra at ball radius 2.
#[test]
fn criterion_5_veech_selfsimilar() {
    let run = || -> Result<(), String> {
        let d = EndSpaceDescriptor::ordinal(o("1"), 1);
        let cfg = BuilderConfig { ball_radius: 2, ..BuilderConfig::default() };
        let sets: [&[Mat2]; 2] = [
            &[Mat2::of(1, 1, 0, 1)],
            &[Mat2::of(2, 0, 0, 1), Mat2::of(1, 0, 1, 1)],
        ];
        for gens in sets {
            let bp = build_veech_selfsimilar(gens, &d, &cfg).map_err(|e| e.to_string())?;
            // the gluing gate is exact: validate re-checks every pair
            bp.complex.validate().map_err(|e| e.to_string())?;
            check(
                bp.complex.gluings.iter().any(|g| g.a.contains("v(")),
                "no scheduled gluings",
            )?;
            for (h, cand) in bp.automorphisms.iter().enumerate() {
                check(
                    cand.derivative == bp.ball.rho(h),
                    &format!("{} has the wrong derivative", cand.name),
                )?;
                verify_automorphism(&bp.complex, cand)
                    .map_err(|e| format!("{}: {e}", cand.name))?;
            }
        }
        Ok(())
    };
    accept(5, run());
}

/// Finite Veech twisting for {I, -I}.
#[test]
fn criterion_6_veech_finite() {
    let run = || -> Result<(), String> {
        let cfg = BuilderConfig::default();
        let minus = Mat2::of(-1, 0, 0, -1);
        let bp = build_veech_finite(&[minus.clone()], &ComponentPattern::default_pair(), &cfg)
            .map_err(|e| e.to_string())?;
        bp.complex.validate().map_err(|e| e.to_string())?;
        let half = Vec2::new(qr(1, 2), q(0));
        let twisted = minus.apply(&half);
        let mut cross = 0;
        for g in &bp.complex.gluings {
            if !g.a.contains("y(") {
                continue;
            }
            let sa = bp.complex.slit(&g.a).unwrap().clone();
            let sb = bp.complex.slit(&g.b).unwrap().clone();
            let va = bp.complex.image_holonomy(&sa).unwrap();
            let vb = bp.complex.image_holonomy(&sb).unwrap();
            check(va == vb || va == vb.neg(), "image holonomies differ")?;
            // source copy e carries the generator twist verbatim
            if sa.plane.starts_with("M[e].") {
                check(va == twisted, "identity-copy holonomy is not g * (1/2, 0)")?;
            }
            check(va == half || va == twisted, "holonomy outside the orbit of (1/2, 0)")?;
            cross += 1;
        }
        check(cross > 0, "no cross-copy gluings")?;
        for cand in &bp.automorphisms {
            verify_automorphism(&bp.complex, cand).map_err(|e| format!("{}: {e}", cand.name))?;
        }
        Ok(())
    };
    accept(6, run());
}

/// Parabolic certificates on graft((1,1)).
#[test]
fn criterion_7_parabolic() {
    let run = || -> Result<(), String> {
        let d = EndSpaceDescriptor::ordinal(o("1"), 1);
        let c = graft(&d, 4, 6).map_err(|e| e.to_string())?;
        let mats = [
            Mat2::of(1, 1, 0, 1),
            Mat2::of(1, -2, 0, 3),
            Mat2::new(q(1), qr(3, 2), q(0), qr(1, 2)),
        ];
        for a in mats {
            let cand = induced_parabolic_map(&c, &a, "p").map_err(|e| e.to_string())?;
            verify_automorphism(&c, &cand).map_err(|e| e.to_string())?;
        }
        // rotations are not induced parabolic maps
        check(
            induced_parabolic_map(&c, &Mat2::of(0, -1, 1, 0), "rot").is_err(),
            "rotation accepted",
        )?;
        // holonomy spectrum within bound 3 lies in Z x {0}
        let ctx = DevContext::new(&c).map_err(|e| e.to_string())?;
        let rep = saddle_connections(&ctx, &q(3), None, 12);
        check(!rep.connections.is_empty(), "empty spectrum")?;
        for h in holonomy_spectrum(&rep) {
            check(
                h.y.is_zero() && h.x.is_integer(),
                &format!("holonomy {:?} outside Z x 0", (h.x, h.y)),
            )?;
        }
        Ok(())
    };
    accept(7, run());
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    fn int(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next() % (hi - lo + 1) as u64) as i64
    }
}

fn random_complex(rng: &mut Lcg) -> SurfaceComplex {
    let mut c = SurfaceComplex::new();
    let planes = rng.int(2, 3);
    for p in 0..planes {
        c.add_plane(&format!("P{p}"), Mat2::identity(), false).unwrap();
    }
    let pairs = rng.int(1, 4);
    let mut made = 0;
    let mut tries = 0;
    while made < pairs && tries < 40 {
        tries += 1;
        let hol = Vec2::of(rng.int(1, 3), rng.int(-1, 1));
        let mk = |label: String, plane: i64, base: Vec2| Slit {
            label,
            plane: format!("P{plane}"),
            base,
            geom: SlitGeom::Segment(hol.clone()),
        };
        let a = mk(
            format!("a{made}"),
            rng.int(0, planes - 1),
            Vec2::of(rng.int(-6, 6), rng.int(-6, 6)),
        );
        let b = mk(
            format!("b{made}"),
            rng.int(0, planes - 1),
            Vec2::of(rng.int(-6, 6), rng.int(-6, 6)),
        );
        let mut probe = c.clone();
        if probe.add_slit(a).is_ok() && probe.add_slit(b).is_ok() {
            probe.glue(&format!("a{made}"), &format!("b{made}")).unwrap();
            c = probe;
            made += 1;
        }
    }
    c
}

fn random_glp(rng: &mut Lcg) -> Mat2 {
    loop {
        let m = Mat2::new(
            qr(rng.int(-3, 3), rng.int(1, 3)),
            qr(rng.int(-3, 3), rng.int(1, 3)),
            qr(rng.int(-3, 3), rng.int(1, 3)),
            qr(rng.int(-3, 3), rng.int(1, 3)),
        );
        if m.det().is_positive() {
            return m;
        }
    }
}

/// GL+(2, Q) action laws on 20 seeded random complexes.
#[test]
fn criterion_8_gl_action_laws() {
    let run = || -> Result<(), String> {
        let mut rng = Lcg(0x5eed);
        for case in 0..20 {
            let c = random_complex(&mut rng);
            c.validate().map_err(|e| format!("case {case}: {e}"))?;
            let a = random_glp(&mut rng);
            let b = random_glp(&mut rng);
            let mut seq = c.clone();
            seq.apply_matrix(&a).unwrap();
            seq.apply_matrix(&b).unwrap();
            let mut joint = c.clone();
            joint.apply_matrix(&b.mul(&a)).unwrap();
            check(seq.to_json() == joint.to_json(), &format!("case {case}: BA != B after A"))?;
            seq.validate().map_err(|e| format!("case {case}: invalid after action: {e}"))?;
        }
        Ok(())
    };
    accept(8, run());
}

/// Independent limit-point rule for spaces `[0, w^2 a + w b + c]`: the
/// derivative is empty when a = b = 0, else the interval `[0, w a + b]`.
fn oracle_chain(alpha: u64, n: u64) -> Vec<String> {
    let mut t = match alpha {
        0 => (0u64, 0u64, n),
        1 => (0, n, 0),
        2 => (n, 0, 0),
        _ => unreachable!(),
    };
    let show = |(a, b, c): (u64, u64, u64)| -> String {
        if a > 0 {
            format!("w^2*{a}+1")
        } else if b > 0 {
            format!("w*{b}+1")
        } else {
            format!("{c}")
        }
    };
    let mut chain = vec![show(t)];
    while t.0 > 0 || t.1 > 0 {
        t = (0, t.0, t.1);
        chain.push(show(t));
    }
    chain.push("empty".to_string());
    chain
}

/// Oracle equivalence: the derivative chain against the interval oracle, and
/// scripted two-plane developments.
#[test]
fn criterion_9_oracles() {
    let run = || -> Result<(), String> {
        for alpha in 0..=2u64 {
            for n in 1..=3u64 {
                let d = EndSpaceDescriptor::ordinal(Ordinal::from_nat(alpha), n);
                let stages = cb_iterate(&d).map_err(|e| e.to_string())?;
                let got: Vec<String> = stages.iter().map(|s| s.atom.to_string()).collect();
                let want = oracle_chain(alpha, n);
                check(got == want, &format!("({alpha},{n}): {got:?} vs oracle {want:?}"))?;
            }
        }

        // two planes cross-glued along the unit slit based at the origin
        let mut c = SurfaceComplex::new();
        c.add_plane("A", Mat2::identity(), false).unwrap();
        c.add_plane("B", Mat2::identity(), false).unwrap();
        for (label, plane) in [("a", "A"), ("b", "B")] {
            c.add_slit(Slit {
                label: label.into(),
                plane: plane.into(),
                base: Vec2::of(0, 0),
                geom: SlitGeom::Segment(Vec2::of(1, 0)),
            })
            .unwrap();
        }
        c.glue("a", "b").unwrap();
        let ctx = DevContext::new(&c).map_err(|e| e.to_string())?;

        // hand-developed scripts, clipped by the window y in [-1, 2]
        let mut region: Region = BTreeMap::new();
        region.insert("A".into(), Rect::of(-10, -1, 20, 2));
        region.insert("B".into(), Rect::of(-10, -1, 20, 2));
        let half = qr(1, 2);
        let quarter = qr(1, 4);
        type Script = (Vec2, Vec2, Vec<&'static str>, Vec2, bool);
        let cases: Vec<Script> = vec![
            // through the slit from above
            (Vec2::new(half.clone(), q(1)), Vec2::of(0, -1), vec!["A", "B"],
             Vec2::new(half.clone(), q(-1)), true),
            // through from below
            (Vec2::new(half.clone(), q(-1)), Vec2::of(0, 1), vec!["A", "B"],
             Vec2::new(half.clone(), q(2)), true),
            // misses the slit to the right
            (Vec2::new(q(2), q(1)), Vec2::of(0, -1), vec!["A"], Vec2::new(q(2), q(-1)),
             true),
            // misses to the left
            (Vec2::new(q(-1), q(1)), Vec2::of(0, -1), vec!["A"], Vec2::new(q(-1), q(-1)),
             true),
            // diagonal crossing at x = 1/2
            (Vec2::new(quarter.clone(), q(1)), Vec2::of(1, -4), vec!["A", "B"],
             Vec2::new(quarter.clone() + half.clone(), q(-1)), true),
            // diagonal missing the slit (crosses y = 0 at x = 3/2)
            (Vec2::new(q(1), q(1)), Vec2::of(1, -2), vec!["A"], Vec2::new(q(2), q(-1)),
             true),
            // same scripts started on plane B
            (Vec2::new(half.clone(), q(1)), Vec2::of(0, -1), vec!["B", "A"],
             Vec2::new(half.clone(), q(-1)), true),
            (Vec2::new(q(2), q(1)), Vec2::of(0, -1), vec!["B"], Vec2::new(q(2), q(-1)),
             true),
            // horizontal line above the slit stays on one plane
            (Vec2::of(0, 1), Vec2::of(1, 0), vec!["A"], Vec2::of(4, 1),
             false),
            // steeper diagonal crossing at x = 3/4
            (Vec2::new(half.clone(), q(1)), Vec2::of(1, -4), vec!["A", "B"],
             Vec2::new(q(1), q(-1)), true),
        ];
        check(cases.len() == 10, "script count")?;
        for (i, (start, dir, planes, endpoint, leaves)) in cases.iter().enumerate() {
            let src = planes[0];
            let t = develop_ray(&ctx, src, start, dir, &q(4), Some(&region));
            let got: Vec<&str> = t.segments.iter().map(|s| s.plane.as_str()).collect();
            let left = matches!(t.termination, Termination::LeftRegion { .. });
            check(left == *leaves, &format!("script {i} ended {:?}", t.termination))?;
            check(got == *planes, &format!("script {i} planes {got:?} want {planes:?}"))?;
            let last = &t.segments.last().unwrap().to;
            check(last == endpoint, &format!("script {i} endpoint mismatch"))?;
        }
        Ok(())
    };
    accept(9, run());
}

/// Determinism: build + verify + render twice, byte-identical artifacts.
#[test]
fn criterion_10_determinism() {
    let run = || -> Result<(), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let group = dir.path().join("z2.json");
        std::fs::write(
            &group,
            r#"{"kind":"finite_table","elements":["e","a"],"table":[[0,1],[1,0]]}"#,
        )
        .map_err(|e| e.to_string())?;
        let bin = env!("CARGO_BIN_EXE_flatsurf");
        let mut artifacts: Vec<Vec<u8>> = Vec::new();
        for round in 0..2 {
            let _ = round;
            let complex = dir.path().join("c.json");
            let family = dir.path().join("f.json");
            let svg = dir.path().join("r.svg");
            let build = Command::new(bin)
                .args(["build", "selfsimilar-isometry", "--descriptor", "w*1+1"])
                .arg("--group")
                .arg(&group)
                .arg("--out")
                .arg(&complex)
                .arg("--family")
                .arg(&family)
                .arg("--json")
                .output()
                .map_err(|e| e.to_string())?;
            check(build.status.success(), "build failed")?;
            let verify = Command::new(bin)
                .args(["verify", "automorphisms"])
                .arg(&complex)
                .arg("--family")
                .arg(&family)
                .arg("--json")
                .output()
                .map_err(|e| e.to_string())?;
            check(verify.status.success(), "verify failed")?;
            let render = Command::new(bin)
                .arg("render")
                .arg(&complex)
                .arg("--out")
                .arg(&svg)
                .args(["--window", "-12,-12,30,30"])
                .output()
                .map_err(|e| e.to_string())?;
            check(render.status.success(), "render failed")?;
            let mut blob = build.stdout.clone();
            blob.extend(verify.stdout);
            blob.extend(std::fs::read(&complex).map_err(|e| e.to_string())?);
            blob.extend(std::fs::read(&family).map_err(|e| e.to_string())?);
            blob.extend(std::fs::read(&svg).map_err(|e| e.to_string())?);
            artifacts.push(blob);
        }
        check(artifacts[0] == artifacts[1], "artifacts differ between runs")
    };
    accept(10, run());
}

//! Command-line front end: classify end-space descriptors, run the
//! builders, run verification suites, trace geodesics, enumerate saddle
//! connections, and render SVG diagrams. Every command is deterministic:
//! identical inputs give byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num::{ToPrimitive, Zero};
use serde::Serialize;
use serde_json::json;

use flatsurf_core::assembly::{
    build_finite_isometry, build_free_genus_zero, build_parabolic_full,
    build_selfsimilar_isometry, build_translatable, build_veech_finite,
    build_veech_selfsimilar, separation_audit, Blueprint, BuilderConfig, ComponentPattern,
};
use flatsurf_core::end_space::{
    classify_trichotomy, parse_atom, realizable_isometry_groups, EndSpaceDescriptor,
    GenusMarking,
};
use flatsurf_core::flatgeom::{
    audit_cone_angles, cone_excess_identity, develop_ray, holonomy_spectrum,
    saddle_connections, verify_automorphism, AutomorphismCandidate, DevContext, Rect, Region,
};
use flatsurf_core::geom::{Mat2, Q, Vec2};
use flatsurf_core::grafting::graft;
use flatsurf_core::groups::GroupSpec;
use flatsurf_core::surface::{SlitGeom, SurfaceComplex, SurgeryKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser)]
#[command(name = "flatsurf", about = "End spaces and slit-glued translation surfaces")]
pub struct Cli {
    /// Emit machine-readable JSON reports.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone)]
pub struct Truncation {
    #[arg(long, default_value_t = 4)]
    pub planes: usize,
    #[arg(long, default_value_t = 4)]
    pub slits: usize,
    #[arg(long, default_value_t = 1)]
    pub radius: usize,
    #[arg(long, default_value_t = 1)]
    pub rows: usize,
    #[arg(long, default_value_t = 1)]
    pub chain: usize,
}

impl Truncation {
    fn config(&self) -> BuilderConfig {
        BuilderConfig {
            planes_limit: self.planes,
            slit_index_limit: self.slits,
            ball_radius: self.radius,
            rows: self.rows,
            chain_extent: self.chain,
            ..BuilderConfig::default()
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Classify an end-space descriptor.
    Classify {
        /// Descriptor expression, e.g. `w*1+1` or `w^2*2+1`.
        descriptor: String,
        /// Genus marking: `all` or `none`.
        #[arg(long, default_value = "all")]
        genus: String,
    },
    /// Run a builder and write the complex (and automorphism family) JSON.
    Build {
        /// One of: graft, selfsimilar-isometry, free-genus-zero,
        /// finite-isometry, translatable, veech-selfsimilar, veech-finite,
        /// veech-parabolic.
        builder: String,
        /// Descriptor expression for builders that graft.
        #[arg(long, default_value = "w*1+1")]
        descriptor: String,
        #[arg(long, default_value = "all")]
        genus: String,
        /// Group spec JSON file.
        #[arg(long)]
        group: Option<PathBuf>,
        /// Matrix generators JSON file (list of 2x2 rational matrices).
        #[arg(long)]
        gens: Option<PathBuf>,
        /// Component pattern JSON file.
        #[arg(long)]
        pattern: Option<PathBuf>,
        /// Free rank for free-genus-zero.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[command(flatten)]
        truncation: Truncation,
        /// Output path for the complex JSON.
        #[arg(long)]
        out: PathBuf,
        /// Optional output path for the automorphism family JSON.
        #[arg(long)]
        family: Option<PathBuf>,
    },
    /// Run a verification suite on a complex.
    Verify {
        /// One of: cone-angles, holonomy-spectrum, automorphisms, separation.
        suite: String,
        complex: PathBuf,
        /// Automorphism family JSON (for the automorphisms suite).
        #[arg(long)]
        family: Option<PathBuf>,
        /// Length bound (holonomy-spectrum suite).
        #[arg(long, default_value = "2")]
        bound: String,
        #[arg(long, default_value_t = 16)]
        max_crossings: usize,
        /// Require every holonomy to be horizontal.
        #[arg(long)]
        horizontal: bool,
        /// Require every cone angle to be exactly 4 pi.
        #[arg(long)]
        uniform: bool,
        /// Separation constant (separation suite).
        #[arg(long, default_value = "100")]
        separation: String,
        /// Restrict to a window `plane:x0,y0,x1,y1` (repeatable).
        #[arg(long, allow_hyphen_values = true)]
        window: Vec<String>,
    },
    /// Develop a straight trajectory from a point.
    Trace {
        complex: PathBuf,
        #[arg(long)]
        plane: String,
        /// Start point `x,y` (rational components).
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// Direction `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        #[arg(long, default_value = "10")]
        max_len: String,
        #[arg(long, allow_hyphen_values = true)]
        window: Vec<String>,
    },
    /// Enumerate saddle connections up to a length bound.
    Saddles {
        complex: PathBuf,
        #[arg(long, default_value = "2")]
        bound: String,
        #[arg(long, default_value_t = 16)]
        max_crossings: usize,
        #[arg(long, allow_hyphen_values = true)]
        window: Vec<String>,
    },
    /// Render the complex as an SVG diagram, one panel per plane.
    Render {
        complex: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// View window `x0,y0,x1,y1` in stored coordinates.
        #[arg(long, default_value = "-12,-12,30,30", allow_hyphen_values = true)]
        window: String,
    },
}

pub struct Outcome {
    pub code: i32,
    pub text: String,
}

fn ok(text: String) -> Outcome {
    Outcome { code: EXIT_OK, text }
}

fn fail(text: String) -> Outcome {
    Outcome { code: EXIT_FAIL, text }
}

fn input_error(msg: String) -> Outcome {
    Outcome { code: EXIT_INPUT, text: format!("error: {msg}\n") }
}

fn parse_q(s: &str) -> Result<Q, String> {
    s.trim().parse::<Q>().map_err(|e| format!("bad rational {s:?}: {e}"))
}

fn parse_vec2(s: &str) -> Result<Vec2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y in {s:?}"))?;
    Ok(Vec2::new(parse_q(x)?, parse_q(y)?))
}

fn parse_genus(s: &str) -> Result<GenusMarking, String> {
    match s {
        "all" => Ok(GenusMarking::All),
        "none" => Ok(GenusMarking::None),
        _ => Err(format!("genus must be `all` or `none`, got {s:?}")),
    }
}

fn parse_descriptor(text: &str, genus: &str) -> Result<EndSpaceDescriptor, String> {
    let atom = parse_atom(text).map_err(|e| e.to_string())?;
    Ok(EndSpaceDescriptor::new(atom, parse_genus(genus)?))
}

fn parse_windows(specs: &[String]) -> Result<Option<Region>, String> {
    if specs.is_empty() {
        return Ok(None);
    }
    let mut region: Region = BTreeMap::new();
    for s in specs {
        let (plane, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected plane:x0,y0,x1,y1 in {s:?}"))?;
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 4 {
            return Err(format!("expected four coordinates in {s:?}"));
        }
        let v: Vec<Q> = parts.iter().map(|p| parse_q(p)).collect::<Result<_, _>>()?;
        region.insert(
            plane.to_string(),
            Rect { x0: v[0].clone(), y0: v[1].clone(), x1: v[2].clone(), y1: v[3].clone() },
        );
    }
    Ok(Some(region))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf, what: &str) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {what} {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad {what} {}: {e}", path.display()))
}

fn read_complex(path: &PathBuf) -> Result<SurfaceComplex, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read complex {}: {e}", path.display()))?;
    let c = SurfaceComplex::from_json(&text).map_err(|e| e.to_string())?;
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn report(as_json: bool, value: serde_json::Value, text: String) -> String {
    if as_json {
        let mut s = serde_json::to_string_pretty(&value).unwrap();
        s.push('\n');
        s
    } else {
        text
    }
}

pub fn run(cli: Cli) -> Outcome {
    match dispatch(cli) {
        Ok(outcome) => outcome,
        Err(msg) => input_error(msg),
    }
}

fn dispatch(cli: Cli) -> Result<Outcome, String> {
    let as_json = cli.json;
    match cli.command {
        Command::Classify { descriptor, genus } => cmd_classify(&descriptor, &genus, as_json),
        Command::Build {
            builder,
            descriptor,
            genus,
            group,
            gens,
            pattern,
            rank,
            truncation,
            out,
            family,
        } => cmd_build(
            &builder, &descriptor, &genus, group, gens, pattern, rank, &truncation, &out,
            family, as_json,
        ),
        Command::Verify {
            suite,
            complex,
            family,
            bound,
            max_crossings,
            horizontal,
            uniform,
            separation,
            window,
        } => cmd_verify(
            &suite,
            &complex,
            family,
            &bound,
            max_crossings,
            horizontal,
            uniform,
            &separation,
            &window,
            as_json,
        ),
        Command::Trace { complex, plane, from, dir, max_len, window } => {
            cmd_trace(&complex, &plane, &from, &dir, &max_len, &window, as_json)
        }
        Command::Saddles { complex, bound, max_crossings, window } => {
            cmd_saddles(&complex, &bound, max_crossings, &window, as_json)
        }
        Command::Render { complex, out, window } => cmd_render(&complex, &out, &window),
    }
}

fn cmd_classify(descriptor: &str, genus: &str, as_json: bool) -> Result<Outcome, String> {
    let d = parse_descriptor(descriptor, genus)?;
    let tri = classify_trichotomy(&d).map_err(|e| e.to_string())?;
    let grp = realizable_isometry_groups(&d).map_err(|e| e.to_string())?;
    let system = d
        .atom
        .char_system()
        .map(|cs| format!("({}, {})", cs.alpha, cs.degree))
        .unwrap_or_else(|| "uncountable".to_string());
    let value = json!({
        "descriptor": descriptor,
        "characteristic_system": system,
        "trichotomy": format!("{tri:?}"),
        "realizable_isometry_groups": format!("{grp:?}"),
    });
    let text =
        format!("characteristic system {system}\ntrichotomy {tri:?}\nrealizable groups {grp:?}\n");
    Ok(ok(report(as_json, value, text)))
}

fn load_group(path: Option<PathBuf>) -> Result<GroupSpec, String> {
    let path = path.ok_or("this builder needs --group")?;
    let spec: GroupSpec = read_json(&path, "group spec")?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn load_gens(path: Option<PathBuf>) -> Result<Vec<Mat2>, String> {
    let path = path.ok_or("this builder needs --gens")?;
    read_json(&path, "matrix generators")
}

fn load_pattern(path: Option<PathBuf>) -> Result<ComponentPattern, String> {
    let pattern = match path {
        Some(p) => read_json(&p, "component pattern")?,
        None => ComponentPattern::default_pair(),
    };
    pattern.validate().map_err(|e| e.to_string())?;
    Ok(pattern)
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    builder: &str,
    descriptor: &str,
    genus: &str,
    group: Option<PathBuf>,
    gens: Option<PathBuf>,
    pattern: Option<PathBuf>,
    rank: usize,
    truncation: &Truncation,
    out: &PathBuf,
    family: Option<PathBuf>,
    as_json: bool,
) -> Result<Outcome, String> {
    let cfg = truncation.config();
    let d = parse_descriptor(descriptor, genus)?;
    let err = |e: flatsurf_core::assembly::AssemblyError| e.to_string();
    let bp: Blueprint = match builder {
        "graft" => {
            let c = graft(&d, cfg.planes_limit, cfg.slit_index_limit)
                .map_err(|e| e.to_string())?;
            let trivial = flatsurf_core::groups::cayley_ball(&GroupSpec::cyclic(1), 1)
                .map_err(|e| e.to_string())?;
            Blueprint { complex: c, ball: trivial, automorphisms: vec![] }
        }
        "selfsimilar-isometry" => {
            build_selfsimilar_isometry(&load_group(group)?, &d, &cfg).map_err(err)?
        }
        "free-genus-zero" => build_free_genus_zero(rank, &d, &cfg).map_err(err)?,
        "finite-isometry" => {
            build_finite_isometry(&load_group(group)?, &load_pattern(pattern)?, &cfg)
                .map_err(err)?
        }
        "translatable" => {
            build_translatable(&load_group(group)?, &d, &load_pattern(pattern)?, &cfg)
                .map_err(err)?
        }
        "veech-selfsimilar" => {
            build_veech_selfsimilar(&load_gens(gens)?, &d, &cfg).map_err(err)?
        }
        "veech-finite" => {
            build_veech_finite(&load_gens(gens)?, &load_pattern(pattern)?, &cfg).map_err(err)?
        }
        "veech-parabolic" => build_parabolic_full(&d, &cfg).map_err(err)?,
        _ => return Err(format!("unknown builder {builder:?}")),
    };
    bp.complex.validate().map_err(|e| e.to_string())?;
    std::fs::write(out, bp.complex.to_json())
        .map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    if let Some(fam) = &family {
        let mut text = serde_json::to_string_pretty(&bp.automorphisms).unwrap();
        text.push('\n');
        std::fs::write(fam, text).map_err(|e| format!("cannot write {}: {e}", fam.display()))?;
    }
    let cones = audit_cone_angles(&bp.complex).map_err(|e| e.to_string())?;
    let value = json!({
        "builder": builder,
        "planes": bp.complex.planes.len(),
        "slits": bp.complex.slits.len(),
        "gluings": bp.complex.gluings.len(),
        "open_stubs": bp.complex.open_stubs.len(),
        "cone_points": cones.len(),
        "copies": bp.ball.len(),
        "automorphisms": bp.automorphisms.len(),
        "out": out.display().to_string(),
    });
    let text = format!(
        "built {builder}: {} planes, {} slits, {} gluings, {} stubs, {} cone points, {} copies\n",
        bp.complex.planes.len(),
        bp.complex.slits.len(),
        bp.complex.gluings.len(),
        bp.complex.open_stubs.len(),
        cones.len(),
        bp.ball.len(),
    );
    Ok(ok(report(as_json, value, text)))
}

#[derive(Serialize)]
struct SuiteReport {
    suite: String,
    pass: bool,
    checked: usize,
    violations: Vec<String>,
    notes: Vec<String>,
}

impl SuiteReport {
    fn outcome(self, as_json: bool) -> Outcome {
        let mut text = format!(
            "suite {}: {} ({} checked)\n",
            self.suite,
            if self.pass { "pass" } else { "FAIL" },
            self.checked
        );
        for v in &self.violations {
            let _ = writeln!(text, "  violation: {v}");
        }
        for n in &self.notes {
            let _ = writeln!(text, "  note: {n}");
        }
        let rendered = report(as_json, serde_json::to_value(&self).unwrap(), text);
        if self.pass {
            ok(rendered)
        } else {
            fail(rendered)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    suite: &str,
    complex: &PathBuf,
    family: Option<PathBuf>,
    bound: &str,
    max_crossings: usize,
    horizontal: bool,
    uniform: bool,
    separation: &str,
    windows: &[String],
    as_json: bool,
) -> Result<Outcome, String> {
    let c = read_complex(complex)?;
    let mut rep = SuiteReport {
        suite: suite.to_string(),
        pass: true,
        checked: 0,
        violations: vec![],
        notes: vec![],
    };
    match suite {
        "cone-angles" => {
            let classes = audit_cone_angles(&c).map_err(|e| e.to_string())?;
            rep.checked = classes.len();
            if !cone_excess_identity(&c).map_err(|e| e.to_string())? {
                rep.pass = false;
                rep.violations.push("cone excess identity fails".to_string());
            }
            for k in &classes {
                if uniform && k.angle_pi != 4 {
                    rep.pass = false;
                    rep.violations.push(format!(
                        "cone at {}:{} has angle {} pi",
                        k.reps[0].plane,
                        vstr(&k.reps[0].point),
                        k.angle_pi
                    ));
                }
            }
        }
        "holonomy-spectrum" => {
            let ctx = DevContext::new(&c).map_err(|e| e.to_string())?;
            let region = parse_windows(windows)?;
            let b = parse_q(bound)?;
            let sad = saddle_connections(&ctx, &b, region.as_ref(), max_crossings);
            let spectrum = holonomy_spectrum(&sad);
            rep.checked = spectrum.len();
            if !sad.complete {
                rep.notes.push("enumeration truncated".to_string());
            }
            for h in &spectrum {
                if horizontal && !h.y.is_zero() {
                    rep.pass = false;
                    rep.violations.push(format!("non-horizontal holonomy {}", vstr(h)));
                }
            }
            rep.notes.push(format!(
                "spectrum: {}",
                spectrum.iter().map(vstr).collect::<Vec<_>>().join(" ")
            ));
        }
        "automorphisms" => {
            let path = family.ok_or("the automorphisms suite needs --family")?;
            let cands: Vec<AutomorphismCandidate> = read_json(&path, "family")?;
            rep.checked = cands.len();
            for cand in &cands {
                match verify_automorphism(&c, cand) {
                    Ok(v) => rep.notes.push(format!(
                        "{}: {:?}, {} slits, {} gluings",
                        cand.name, v.kind, v.checked_slits, v.checked_gluings
                    )),
                    Err(e) => {
                        rep.pass = false;
                        rep.violations.push(format!("{}: {e}", cand.name));
                    }
                }
            }
        }
        "separation" => {
            let sep = parse_q(separation)?;
            rep.checked = 1;
            if !separation_audit(&c, &sep) {
                rep.pass = false;
                rep.violations.push(format!("separation below {separation}"));
            }
        }
        _ => return Err(format!("unknown suite {suite:?}")),
    }
    Ok(rep.outcome(as_json))
}

fn cmd_trace(
    complex: &PathBuf,
    plane: &str,
    from: &str,
    dir: &str,
    max_len: &str,
    windows: &[String],
    as_json: bool,
) -> Result<Outcome, String> {
    let c = read_complex(complex)?;
    let ctx = DevContext::new(&c).map_err(|e| e.to_string())?;
    let start = parse_vec2(from)?;
    let direction = parse_vec2(dir)?;
    if direction.is_zero() {
        return Err("direction must be nonzero".to_string());
    }
    let region = parse_windows(windows)?;
    let t = develop_ray(&ctx, plane, &start, &direction, &parse_q(max_len)?, region.as_ref());
    let value = serde_json::to_value(&t).unwrap();
    let mut text = String::new();
    for s in &t.segments {
        let _ = writeln!(text, "{}: {} -> {}", s.plane, vstr(&s.from), vstr(&s.to));
    }
    let _ = writeln!(text, "termination {:?}, squared length {}", t.termination, t.length2);
    Ok(ok(report(as_json, value, text)))
}

fn cmd_saddles(
    complex: &PathBuf,
    bound: &str,
    max_crossings: usize,
    windows: &[String],
    as_json: bool,
) -> Result<Outcome, String> {
    let c = read_complex(complex)?;
    let ctx = DevContext::new(&c).map_err(|e| e.to_string())?;
    let region = parse_windows(windows)?;
    let sad = saddle_connections(&ctx, &parse_q(bound)?, region.as_ref(), max_crossings);
    let value = serde_json::to_value(&sad).unwrap();
    let mut text = String::new();
    for conn in &sad.connections {
        let _ = writeln!(
            text,
            "{} -> {} holonomy {} length2 {} via {}",
            conn.from, conn.to, vstr(&conn.holonomy), conn.length2, conn.via
        );
    }
    let _ = writeln!(
        text,
        "{} connections, {}",
        sad.connections.len(),
        if sad.complete { "complete" } else { "truncated" }
    );
    Ok(ok(report(as_json, value, text)))
}

fn f(x: &Q) -> f64 {
    x.to_f64().unwrap_or(0.0)
}

fn vstr(v: &Vec2) -> String {
    format!("({}, {})", v.x, v.y)
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

const PALETTE: [&str; 8] = [
    "#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50",
];

/// Deterministic SVG: one panel per plane (sorted by id), slits colored by
/// gluing pair, stubs dashed, polygons outlined, cone points labeled.
fn cmd_render(complex: &PathBuf, out: &PathBuf, window: &str) -> Result<Outcome, String> {
    let c = read_complex(complex)?;
    let parts: Vec<Q> = window.split(',').map(parse_q).collect::<Result<_, _>>()?;
    if parts.len() != 4 || parts[0] >= parts[2] || parts[1] >= parts[3] {
        return Err(format!("bad window {window:?}"));
    }
    let (x0, y0, x1, y1) = (f(&parts[0]), f(&parts[1]), f(&parts[2]), f(&parts[3]));
    let (w, h) = (x1 - x0, y1 - y0);
    let panel = 260.0;
    let margin = 20.0;
    let scale = (panel - 2.0 * margin) / w.max(h);

    let mut plane_ids: Vec<&str> = c.planes.iter().map(|p| p.id.as_str()).collect();
    plane_ids.sort();
    let cols = (plane_ids.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = plane_ids.len().div_ceil(cols);

    let color_of: BTreeMap<&str, &str> = c
        .gluings
        .iter()
        .enumerate()
        .flat_map(|(i, g)| {
            let col = PALETTE[i % PALETTE.len()];
            [(g.a.as_str(), col), (g.b.as_str(), col)]
        })
        .collect();
    let cones = audit_cone_angles(&c).map_err(|e| e.to_string())?;

    let total_w = cols as f64 * panel;
    let total_h = rows as f64 * panel;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt(total_w), fmt(total_h), fmt(total_w), fmt(total_h)
    );
    for (idx, pid) in plane_ids.iter().enumerate() {
        let px = (idx % cols) as f64 * panel;
        let py = (idx / cols) as f64 * panel;
        // y axis points up in the chart, down in SVG
        let tx = |x: f64| px + margin + (x - x0) * scale;
        let ty = |y: f64| py + panel - margin - (y - y0) * scale;
        let _ = writeln!(
            svg,
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#aaa\"/>",
            fmt(px + 2.0), fmt(py + 2.0), fmt(panel - 4.0), fmt(panel - 4.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#333\">{}</text>",
            fmt(px + 6.0), fmt(py + 14.0), xml_escape(pid)
        );
        for s in c.slits_on(pid) {
            let (ax, ay) = (f(&s.base.x), f(&s.base.y));
            let (bx, by) = match &s.geom {
                SlitGeom::Segment(hol) => (ax + f(&hol.x), ay + f(&hol.y)),
                SlitGeom::Ray(d) => {
                    // clip the ray at the window scale for display
                    let n = (f(&d.x).powi(2) + f(&d.y).powi(2)).sqrt().max(1e-9);
                    let reach = (w + h) / n;
                    (ax + f(&d.x) * reach, ay + f(&d.y) * reach)
                }
            };
            let color = color_of.get(s.label.as_str()).copied().unwrap_or("#000");
            let dash = if c.is_stub(&s.label) { " stroke-dasharray=\"4 3\"" } else { "" };
            let _ = writeln!(
                svg,
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"{}/>",
                fmt(tx(ax)), fmt(ty(ay)), fmt(tx(bx)), fmt(ty(by)), color, dash
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{}\" y=\"{}\" font-size=\"7\" fill=\"{}\">{}</text>",
                fmt(tx(ax)), fmt(ty(ay) - 3.0), color, xml_escape(short_label(&s.label))
            );
        }
        for sg in c.surgeries_on(pid) {
            match &sg.kind {
                SurgeryKind::Polygon { .. } => {
                    if let Some(poly) = sg.polygon() {
                        let pts: Vec<String> = poly
                            .verts
                            .iter()
                            .map(|v| format!("{},{}", fmt(tx(f(&v.x))), fmt(ty(f(&v.y)))))
                            .collect();
                        let _ = writeln!(
                            svg,
                            "  <polygon points=\"{}\" fill=\"none\" stroke=\"#444\"/>",
                            pts.join(" ")
                        );
                    }
                }
                SurgeryKind::BranchedCover { dir, .. } => {
                    let b = sg.base.add(dir);
                    let _ = writeln!(
                        svg,
                        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#444\" stroke-dasharray=\"2 2\"/>",
                        fmt(tx(f(&sg.base.x))), fmt(ty(f(&sg.base.y))),
                        fmt(tx(f(&b.x))), fmt(ty(f(&b.y)))
                    );
                }
            }
        }
        for k in &cones {
            for rep in &k.reps {
                if rep.plane == *pid {
                    let _ = writeln!(
                        svg,
                        "  <circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"#000\"/><text x=\"{}\" y=\"{}\" font-size=\"7\">{}&#960;</text>",
                        fmt(tx(f(&rep.point.x))), fmt(ty(f(&rep.point.y))),
                        fmt(tx(f(&rep.point.x)) + 4.0), fmt(ty(f(&rep.point.y)) + 4.0),
                        k.angle_pi
                    );
                }
            }
        }
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(out, &svg).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    Ok(ok(format!("rendered {} panels to {}\n", plane_ids.len(), out.display())))
}

fn short_label(label: &str) -> &str {
    label.rsplit('.').next().unwrap_or(label)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatsurf_core::geom::{q, qr};

    #[test]
    fn rationals_and_vectors() {
        assert_eq!(parse_q(" -3/2 ").unwrap(), qr(-3, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
        let v = parse_vec2("1/2,-4").unwrap();
        assert_eq!((v.x, v.y), (qr(1, 2), q(-4)));
        assert!(parse_vec2("7").is_err());
    }

    #[test]
    fn windows() {
        assert!(parse_windows(&[]).unwrap().is_none());
        let r = parse_windows(&["P0:-1,0,2,3".to_string()]).unwrap().unwrap();
        let rect = &r["P0"];
        assert_eq!((&rect.x0, &rect.y1), (&q(-1), &q(3)));
        assert!(parse_windows(&["P0:1,2,3".to_string()]).is_err());
        assert!(parse_windows(&["no-colon".to_string()]).is_err());
    }

    #[test]
    fn genus_and_descriptor() {
        assert_eq!(parse_genus("all").unwrap(), GenusMarking::All);
        assert!(parse_genus("half").is_err());
        assert!(parse_descriptor("w*2+1", "all").is_ok());
        assert!(parse_descriptor("nonsense", "all").is_err());
    }
}

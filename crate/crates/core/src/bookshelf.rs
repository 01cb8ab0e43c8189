//! Bookshelf circuit I/O and the planar-to-3D benchmark transformation.
//!
//! A bundle is the usual `.aux` plus `.nodes/.nets/.pl/.scl` and an optional
//! `.wts`. Coordinates in `.pl` files are lower-left corners in the file's
//! native units; internally everything becomes cell centers in the
//! normalized unit domain. 3D placements use the planar `.pl` layout
//! extended with a fourth column carrying the tier index, plus header
//! comments recording the tier count and per-tier extent.
//!
//! The transformation splits a planar instance across `T` tiers: each tier
//! keeps the original aspect ratio and receives `1/T` of the original
//! placement area enlarged by an extra whitespace fraction, cell dimensions
//! stay unchanged, and zero-area fixed objects move to the nearest boundary
//! point of the bottom tier.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::model::{
    compute_vi_weight, Cell, CellKind, DomainScale, Instance, Net, Netlist, Pin, Placement,
    Region3D, RowGrid, C_ROW_DEFAULT, C_VI_DEFAULT,
};
use crate::{Error, Result};

/// Row geometry of a planar instance, physical units.
#[derive(Debug, Clone)]
pub struct Rows2D {
    pub y0: f64,
    pub row_height: f64,
    pub num_rows: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub site_width: f64,
}

impl Rows2D {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.num_rows as f64 * self.row_height
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// A parsed planar bundle: netlist, center positions, and row geometry, all
/// in the file's native units.
#[derive(Debug, Clone)]
pub struct Bundle2D {
    pub name: String,
    pub netlist: Netlist,
    pub positions: Placement,
    pub rows: Rows2D,
}

/// Parameters of the planar-to-3D transformation.
#[derive(Debug, Clone)]
pub struct Transform3DSpec {
    pub tiers: usize,
    /// Extra whitespace fraction added to every tier (0.10 adds 10%).
    pub extra_whitespace: f64,
    pub rho_t: f64,
    /// Override for the vertical wirelength weight; computed from the
    /// capacitance ratio when absent.
    pub vi_weight: Option<f64>,
}

impl Default for Transform3DSpec {
    fn default() -> Self {
        Transform3DSpec {
            tiers: 4,
            extra_whitespace: 0.10,
            rho_t: 1.0,
            vi_weight: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn is_comment(line: &str) -> bool {
    line.is_empty() || line.starts_with('#') || line.starts_with("UCLA")
}

/// Lines of a Bookshelf file with their 1-based numbers, headers skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !is_comment(l))
}

fn header_value(line: &str, key: &str) -> Option<f64> {
    let lower = line.to_ascii_lowercase();
    let key = key.to_ascii_lowercase();
    if !lower.starts_with(&key) {
        return None;
    }
    line.split(':').nth(1)?.trim().parse().ok()
}

struct RawNode {
    name: String,
    width: f64,
    height: f64,
    terminal: bool,
}

fn parse_nodes(path: &Path) -> Result<Vec<RawNode>> {
    let text = read_file(path)?;
    let mut nodes = Vec::new();
    for (ln, line) in content_lines(&text) {
        if header_value(line, "NumNodes").is_some() || header_value(line, "NumTerminals").is_some()
        {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 3 {
            return Err(parse_err(path, ln, format!("malformed node line '{line}'")));
        }
        let width: f64 = tok[1]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad width '{}'", tok[1])))?;
        let height: f64 = tok[2]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad height '{}'", tok[2])))?;
        if width < 0.0 || height < 0.0 {
            return Err(parse_err(
                path,
                ln,
                format!("node {} has negative dimensions", tok[0]),
            ));
        }
        let terminal = tok
            .get(3)
            .map(|t| t.eq_ignore_ascii_case("terminal") || t.eq_ignore_ascii_case("terminal_NI"))
            .unwrap_or(false);
        nodes.push(RawNode {
            name: tok[0].to_string(),
            width,
            height,
            terminal,
        });
    }
    Ok(nodes)
}

fn parse_nets(path: &Path, ids: &HashMap<String, usize>) -> Result<Vec<Net>> {
    let text = read_file(path)?;
    let mut nets: Vec<Net> = Vec::new();
    let mut current: Option<Net> = None;
    for (ln, line) in content_lines(&text) {
        if header_value(line, "NumNets").is_some() || header_value(line, "NumPins").is_some() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("netdegree") {
            if let Some(net) = current.take() {
                nets.push(net);
            }
            let name = line
                .split_whitespace()
                .last()
                .filter(|t| t.parse::<f64>().is_err())
                .map(|t| t.to_string())
                .unwrap_or_else(|| format!("n{}", nets.len()));
            current = Some(Net {
                name,
                pins: Vec::new(),
                weight: 1.0,
            });
            continue;
        }
        let Some(net) = current.as_mut() else {
            return Err(parse_err(path, ln, "pin line outside a NetDegree block"));
        };
        // "<node> <I|O|B> : <dx> <dy>" with the direction and offsets optional.
        let mut parts = line.split(':');
        let head: Vec<&str> = parts.next().unwrap_or("").split_whitespace().collect();
        if head.is_empty() {
            return Err(parse_err(path, ln, "empty pin line"));
        }
        let node = head[0];
        let Some(&cell) = ids.get(node) else {
            return Err(parse_err(
                path,
                ln,
                format!("pin references undeclared node '{node}'"),
            ));
        };
        let (mut dx, mut dy) = (0.0, 0.0);
        if let Some(rest) = parts.next() {
            let off: Vec<&str> = rest.split_whitespace().collect();
            if off.len() >= 2 {
                dx = off[0]
                    .parse()
                    .map_err(|_| parse_err(path, ln, format!("bad pin offset '{}'", off[0])))?;
                dy = off[1]
                    .parse()
                    .map_err(|_| parse_err(path, ln, format!("bad pin offset '{}'", off[1])))?;
            }
        }
        net.pins.push(Pin::OnCell { cell, dx, dy });
    }
    if let Some(net) = current.take() {
        nets.push(net);
    }
    Ok(nets)
}

fn parse_wts(path: &Path, names: &HashMap<String, usize>, nets: &mut [Net]) -> Result<()> {
    let text = read_file(path)?;
    let by_name: HashMap<String, usize> = nets
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.clone(), i))
        .collect();
    for (ln, line) in content_lines(&text) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 2 {
            continue;
        }
        // Weight files may list nodes as well as nets; ignore node entries.
        if let Some(&i) = by_name.get(tok[0]) {
            let w: f64 = tok[1]
                .parse()
                .map_err(|_| parse_err(path, ln, format!("bad weight '{}'", tok[1])))?;
            if w < 0.0 {
                return Err(parse_err(path, ln, "negative net weight"));
            }
            nets[i].weight = w;
        } else if !names.contains_key(tok[0]) {
            return Err(parse_err(
                path,
                ln,
                format!("weight for unknown object '{}'", tok[0]),
            ));
        }
    }
    Ok(())
}

fn parse_scl(path: &Path) -> Result<Rows2D> {
    let text = read_file(path)?;
    let mut rows: Vec<(f64, f64, f64, f64, f64)> = Vec::new(); // y, h, x0, x1, site
    let mut cur: HashMap<String, f64> = HashMap::new();
    let mut in_row = false;
    for (_ln, line) in content_lines(&text) {
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("numrows") {
            continue;
        }
        if lower.starts_with("corerow") {
            in_row = true;
            cur.clear();
            continue;
        }
        if lower.starts_with("end") {
            if in_row {
                let y = cur.get("coordinate").copied().unwrap_or(0.0);
                let h = cur.get("height").copied().unwrap_or(1.0);
                let x0 = cur.get("subroworigin").copied().unwrap_or(0.0);
                let ns = cur.get("numsites").copied().unwrap_or(0.0);
                let sp = cur
                    .get("sitespacing")
                    .or_else(|| cur.get("sitewidth"))
                    .copied()
                    .unwrap_or(1.0);
                rows.push((y, h, x0, x0 + ns * sp, sp));
            }
            in_row = false;
            continue;
        }
        if in_row {
            // "Key : value" pairs, possibly several per line.
            let spaced = line.replace(':', " : ");
            let toks: Vec<&str> = spaced.split_whitespace().collect();
            let mut i = 0;
            while i + 2 < toks.len() {
                if toks[i + 1] == ":" {
                    if let Ok(val) = toks[i + 2].parse() {
                        cur.insert(toks[i].to_ascii_lowercase(), val);
                    }
                    i += 3;
                } else {
                    i += 1;
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Format(format!(
            "{}: no CoreRow blocks found",
            path.display()
        )));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let y0 = rows[0].0;
    let row_height = rows[0].1;
    let x_min = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let x_max = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    let site_width = rows[0].4;
    Ok(Rows2D {
        y0,
        row_height,
        num_rows: rows.len(),
        x_min,
        x_max,
        site_width,
    })
}

struct PlEntry {
    x: f64,
    y: f64,
    tier: Option<usize>,
}

struct PlFile {
    entries: HashMap<String, PlEntry>,
    tiers: Option<usize>,
    tier_extent: Option<(f64, f64)>,
}

fn parse_pl(path: &Path) -> Result<PlFile> {
    let text = read_file(path)?;
    let mut entries = HashMap::new();
    let mut tiers = None;
    let mut tier_extent = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("UCLA") {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("Tiers :").or(rest.strip_prefix("Tiers:")) {
                tiers = v.trim().parse::<usize>().ok();
            } else if let Some(v) = rest
                .strip_prefix("TierExtent :")
                .or(rest.strip_prefix("TierExtent:"))
            {
                let t: Vec<&str> = v.split_whitespace().collect();
                if t.len() == 2 {
                    if let (Ok(a), Ok(b)) = (t[0].parse(), t[1].parse()) {
                        tier_extent = Some((a, b));
                    }
                }
            }
            continue;
        }
        let before_colon = line.split(':').next().unwrap_or("");
        let tok: Vec<&str> = before_colon.split_whitespace().collect();
        if tok.len() < 3 {
            return Err(parse_err(path, ln, format!("malformed placement line '{line}'")));
        }
        let x: f64 = tok[1]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad x coordinate '{}'", tok[1])))?;
        let y: f64 = tok[2]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad y coordinate '{}'", tok[2])))?;
        let tier = if tok.len() >= 4 {
            Some(
                tok[3]
                    .parse::<usize>()
                    .map_err(|_| parse_err(path, ln, format!("bad tier index '{}'", tok[3])))?,
            )
        } else {
            None
        };
        entries.insert(tok[0].to_string(), PlEntry { x, y, tier });
    }
    Ok(PlFile {
        entries,
        tiers,
        tier_extent,
    })
}

/// Paths named by an `.aux` file, keyed by extension.
fn aux_files(aux: &Path) -> Result<HashMap<String, PathBuf>> {
    let text = read_file(aux)?;
    let dir = aux.parent().unwrap_or(Path::new("."));
    let mut out = HashMap::new();
    for (_ln, line) in text.lines().enumerate() {
        let after = line.split(':').nth(1).unwrap_or(line);
        for tok in after.split_whitespace() {
            if let Some(ext) = Path::new(tok).extension().and_then(|e| e.to_str()) {
                out.insert(ext.to_ascii_lowercase(), dir.join(tok));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Format(format!(
            "{}: aux file names no bundle files",
            aux.display()
        )));
    }
    Ok(out)
}

/// A parsed input: either planar (to be transformed) or already 3D.
#[derive(Debug)]
pub enum ParsedInput {
    Planar(Bundle2D),
    ThreeD {
        instance: Instance,
        placement: Placement,
    },
}

/// Parse a Bookshelf bundle given its `.aux`. Bundles whose `.pl` carries
/// tier headers load directly as 3D instances.
pub fn parse_bookshelf(aux: &Path, rho_t: f64) -> Result<ParsedInput> {
    let files = aux_files(aux)?;
    let need = |ext: &str| -> Result<&PathBuf> {
        files
            .get(ext)
            .ok_or_else(|| Error::Format(format!("{}: no .{ext} file listed", aux.display())))
    };
    let nodes = parse_nodes(need("nodes")?)?;
    let rows = parse_scl(need("scl")?)?;
    let pl = parse_pl(need("pl")?)?;

    let mut ids = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if ids.insert(n.name.clone(), i).is_some() {
            return Err(Error::Format(format!("duplicate node '{}'", n.name)));
        }
    }
    let mut nets = parse_nets(need("nets")?, &ids)?;
    if let Some(w) = files.get("wts") {
        if w.exists() {
            parse_wts(w, &ids, &mut nets)?;
        }
    }

    let mut netlist = Netlist::default();
    let mut positions = Placement::zeroed(nodes.len());
    let mut tiers_col: Vec<usize> = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        let kind = if n.terminal {
            if n.width * n.height > 0.0 {
                CellKind::Fixed
            } else {
                CellKind::Io
            }
        } else if n.height > 1.5 * rows.row_height {
            CellKind::Macro
        } else {
            CellKind::StdCell
        };
        netlist.cells.push(Cell {
            name: n.name.clone(),
            width: n.width,
            height: n.height,
            kind,
            movable: !n.terminal,
        });
        if let Some(e) = pl.entries.get(&n.name) {
            positions.x[i] = e.x + n.width / 2.0;
            positions.y[i] = e.y + n.height / 2.0;
            if let Some(t) = e.tier {
                tiers_col.resize(nodes.len(), 0);
                tiers_col[i] = t;
            }
        }
    }
    netlist.nets = nets;

    match pl.tiers {
        Some(t) if t > 1 || pl.tier_extent.is_some() => {
            let (wt, ht) = pl.tier_extent.ok_or_else(|| {
                Error::Format("tiered .pl missing TierExtent header".into())
            })?;
            let bundle = Bundle2D {
                name: aux
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                netlist,
                positions,
                rows,
            };
            let (instance, mut placement) = assemble_3d(&bundle, t, (wt, ht), rho_t)?;
            if !tiers_col.is_empty() {
                for (i, &tr) in tiers_col.iter().enumerate() {
                    if tr >= t {
                        return Err(Error::Format(format!(
                            "cell {} on tier {tr} but instance has {t} tiers",
                            instance.netlist.cells[i].name
                        )));
                    }
                    placement.z[i] = instance.region.tier_center(tr);
                }
                placement.tier = Some(tiers_col);
            }
            Ok(ParsedInput::ThreeD {
                instance,
                placement,
            })
        }
        _ => Ok(ParsedInput::Planar(Bundle2D {
            name: aux
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            netlist,
            positions,
            rows,
        })),
    }
}

/// Build a normalized 3D instance from a bundle already expressed in
/// per-tier physical units (tier extent given).
fn assemble_3d(
    bundle: &Bundle2D,
    tiers: usize,
    tier_extent: (f64, f64),
    rho_t: f64,
) -> Result<(Instance, Placement)> {
    let (wt, ht) = tier_extent;
    if !(wt > 0.0 && ht > 0.0) {
        return Err(Error::InvalidRegion("nonpositive tier extent".into()));
    }
    let mut region = Region3D::new(tiers, rho_t)?;
    let scale = DomainScale {
        x0: 0.0,
        y0: 0.0,
        sx: wt,
        sy: ht,
    };
    let rows = RowGrid {
        y0: (bundle.rows.y0 / ht).max(0.0),
        row_height: bundle.rows.row_height / ht,
        num_rows: bundle.rows.num_rows,
        x_min: (bundle.rows.x_min / wt).max(0.0),
        x_max: (bundle.rows.x_max / wt).min(1.0),
        site_width: bundle.rows.site_width / wt,
    };

    let mut netlist = bundle.netlist.clone();
    for c in netlist.cells.iter_mut() {
        c.width /= wt;
        c.height /= ht;
    }
    for net in netlist.nets.iter_mut() {
        for pin in net.pins.iter_mut() {
            match pin {
                Pin::OnCell { dx, dy, .. } => {
                    *dx /= wt;
                    *dy /= ht;
                }
                Pin::Fixed { x, y, .. } => {
                    *x /= wt;
                    *y /= ht;
                }
            }
        }
    }

    let n = netlist.cells.len();
    let mut placement = Placement::zeroed(n);
    for i in 0..n {
        placement.x[i] = bundle.positions.x[i] / wt;
        placement.y[i] = bundle.positions.y[i] / ht;
        placement.z[i] = 0.0;
    }

    region.beta.z = compute_vi_weight(tiers, rows.num_rows, C_VI_DEFAULT, C_ROW_DEFAULT)?;

    Ok((
        Instance {
            netlist,
            region,
            rows,
            scale,
        },
        placement,
    ))
}

// ---------------------------------------------------------------------------
// Planar-to-3D transformation
// ---------------------------------------------------------------------------

/// Transform a planar instance into a `T`-tier 3D instance. Cell dimensions
/// and netlist topology are preserved exactly; per-tier placement area is
/// `original / T` enlarged so utilization drops by the whitespace fraction;
/// zero-area fixed objects land on the nearest bottom-tier boundary point.
pub fn transform_2d_to_3d(
    bundle: &Bundle2D,
    spec: &Transform3DSpec,
) -> Result<(Instance, Placement)> {
    if !(0.0..1.0).contains(&spec.extra_whitespace) {
        return Err(Error::InvalidInput(format!(
            "whitespace fraction {} outside [0, 1)",
            spec.extra_whitespace
        )));
    }
    if spec.tiers == 0 {
        return Err(Error::InvalidRegion("tier count must be >= 1".into()));
    }
    let rows = &bundle.rows;
    let area2d = rows.area();
    if !(area2d > 0.0) {
        return Err(Error::InvalidRegion("empty planar placement area".into()));
    }

    for c in &bundle.netlist.cells {
        if !c.movable && c.area() > 0.0 {
            return Err(Error::Unsupported(format!(
                "fixed object '{}' has nonzero area; fixed-macro layouts are not transformed",
                c.name
            )));
        }
    }

    let t = spec.tiers as f64;
    let tier_area = area2d / t / (1.0 - spec.extra_whitespace);
    let aspect = rows.width() / rows.height();
    let wt = (tier_area * aspect).sqrt();
    let ht = tier_area / wt;

    // Every movable object must fit a single tier.
    let mut worst: Option<(&Cell, f64)> = None;
    for c in &bundle.netlist.cells {
        if !c.movable {
            continue;
        }
        // Minimum tier area (same aspect) accommodating this cell.
        let need = (c.width * c.width / aspect).max(c.height * c.height * aspect);
        if c.width > wt || c.height > ht {
            let ws_needed = 1.0 - area2d / (t * need);
            if worst.as_ref().map(|(_, w)| ws_needed > *w).unwrap_or(true) {
                worst = Some((c, ws_needed));
            }
        }
    }
    if let Some((c, ws)) = worst {
        return Err(Error::InfeasibleTransform(format!(
            "object '{}' ({} x {}) exceeds the tier extent ({:.4} x {:.4}); needs whitespace >= {:.3}",
            c.name, c.width, c.height, wt, ht, ws.max(0.0)
        )));
    }

    // Express the bundle in tier-local physical coordinates.
    let sx = wt / rows.width();
    let sy = ht / rows.height();
    let n = bundle.netlist.cells.len();
    let mut positions = Placement::zeroed(n);
    for i in 0..n {
        let x = (bundle.positions.x[i] - rows.x_min) * sx;
        let y = (bundle.positions.y[i] - rows.y0) * sy;
        let c = &bundle.netlist.cells[i];
        if c.movable {
            // Keep centers inside the tier.
            positions.x[i] = x.clamp(c.width / 2.0, (wt - c.width / 2.0).max(c.width / 2.0));
            positions.y[i] = y.clamp(c.height / 2.0, (ht - c.height / 2.0).max(c.height / 2.0));
        } else {
            // Nearest boundary point of the bottom tier.
            let (px, py) = nearest_boundary(x.clamp(0.0, wt), y.clamp(0.0, ht), wt, ht);
            positions.x[i] = px;
            positions.y[i] = py;
        }
        positions.z[i] = 0.0;
    }

    let num_rows_tier = ((ht / rows.row_height).floor() as usize).max(1);
    let tier_bundle = Bundle2D {
        name: bundle.name.clone(),
        netlist: bundle.netlist.clone(),
        positions,
        rows: Rows2D {
            y0: 0.0,
            row_height: rows.row_height,
            num_rows: num_rows_tier,
            x_min: 0.0,
            x_max: wt,
            site_width: rows.site_width,
        },
    };
    let (mut instance, mut placement) = assemble_3d(&tier_bundle, spec.tiers, (wt, ht), spec.rho_t)?;
    if let Some(vi) = spec.vi_weight {
        instance.region.beta.z = vi;
    }
    // Fixed pins of the transformed instance sit on the bottom face.
    for i in 0..n {
        placement.z[i] = 0.0;
    }
    Ok((instance, placement))
}

fn nearest_boundary(x: f64, y: f64, w: f64, h: f64) -> (f64, f64) {
    let d = [(x, 0usize), (w - x, 1), (y, 2), (h - y, 3)];
    let side = d
        .iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
        .1;
    match side {
        0 => (0.0, y),
        1 => (w, y),
        2 => (x, 0.0),
        _ => (x, h),
    }
}

// ---------------------------------------------------------------------------
// 3D placement files
// ---------------------------------------------------------------------------

/// Write a 3D placement: lower-left corners in per-tier physical units, the
/// tier index as a fourth column, and headers recording the geometry.
pub fn write_placement_3d(
    path: &Path,
    instance: &Instance,
    placement: &Placement,
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "UCLA pl 1.0");
    let _ = writeln!(out, "# Tiers : {}", instance.region.tiers);
    let _ = writeln!(
        out,
        "# TierExtent : {} {}",
        instance.scale.sx, instance.scale.sy
    );
    let tiers = placement.tier.as_ref();
    for (i, c) in instance.netlist.cells.iter().enumerate() {
        if c.is_filler() {
            continue;
        }
        let (cx, cy) = instance.scale.to_phys(placement.x[i], placement.y[i]);
        let (w, h) = (c.width * instance.scale.sx, c.height * instance.scale.sy);
        let tier = tiers
            .map(|t| t[i])
            .unwrap_or_else(|| instance.region.tier_of_z(placement.z[i]));
        let suffix = if c.movable { "" } else { " /FIXED" }.to_string();
        let _ = writeln!(
            out,
            "{} {} {} {} : N{}",
            c.name,
            cx - w / 2.0,
            cy - h / 2.0,
            tier,
            suffix
        );
    }
    fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read a 3D placement written by [`write_placement_3d`] (or a legacy
/// 3-column planar `.pl`, accepted only for single-tier instances).
pub fn read_placement_3d(path: &Path, instance: &Instance) -> Result<Placement> {
    let pl = parse_pl(path)?;
    let region = &instance.region;
    if let Some(t) = pl.tiers {
        if t != region.tiers {
            return Err(Error::Format(format!(
                "placement has {t} tiers, instance has {}",
                region.tiers
            )));
        }
    }
    let n = instance.netlist.cells.len();
    let mut placement = Placement::zeroed(n);
    let mut tiers = vec![0usize; n];
    for (i, c) in instance.netlist.cells.iter().enumerate() {
        let Some(e) = pl.entries.get(&c.name) else {
            return Err(Error::Format(format!("placement missing cell '{}'", c.name)));
        };
        let (w, h) = (c.width * instance.scale.sx, c.height * instance.scale.sy);
        let (nx, ny) = instance.scale.to_norm(e.x + w / 2.0, e.y + h / 2.0);
        placement.x[i] = nx;
        placement.y[i] = ny;
        let tier = match e.tier {
            Some(t) => t,
            None if region.tiers == 1 => 0,
            None => {
                return Err(Error::Format(format!(
                    "cell '{}' has no tier index in a {}-tier instance",
                    c.name, region.tiers
                )))
            }
        };
        if tier >= region.tiers {
            return Err(Error::Format(format!(
                "cell '{}' on tier {tier} but instance has {} tiers",
                c.name, region.tiers
            )));
        }
        tiers[i] = tier;
        placement.z[i] = region.tier_center(tier);
    }
    placement.tier = Some(tiers);
    Ok(placement)
}

/// Write a planar bundle (`.aux/.nodes/.nets/.wts/.scl/.pl`) under `dir`,
/// in the bundle's native units.
pub fn write_bundle_2d(dir: &Path, bundle: &Bundle2D) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let name = &bundle.name;
    let write = |file: PathBuf, content: String| -> Result<()> {
        fs::write(&file, content).map_err(|e| Error::Io {
            path: file.display().to_string(),
            source: e,
        })
    };
    let nl = &bundle.netlist;

    let mut nodes = String::from("UCLA nodes 1.0\n");
    let terminals = nl.cells.iter().filter(|c| !c.movable).count();
    let _ = writeln!(nodes, "NumNodes : {}", nl.cells.len());
    let _ = writeln!(nodes, "NumTerminals : {terminals}");
    for c in &nl.cells {
        let term = if c.movable { "" } else { " terminal" };
        let _ = writeln!(nodes, "{} {} {}{}", c.name, c.width, c.height, term);
    }
    write(dir.join(format!("{name}.nodes")), nodes)?;

    let mut nets = String::from("UCLA nets 1.0\n");
    let pins: usize = nl.nets.iter().map(|n| n.pins.len()).sum();
    let _ = writeln!(nets, "NumNets : {}", nl.nets.len());
    let _ = writeln!(nets, "NumPins : {pins}");
    for net in &nl.nets {
        let _ = writeln!(nets, "NetDegree : {} {}", net.pins.len(), net.name);
        for pin in &net.pins {
            if let Pin::OnCell { cell, dx, dy } = pin {
                let _ = writeln!(nets, "\t{} I : {} {}", nl.cells[*cell].name, dx, dy);
            }
        }
    }
    write(dir.join(format!("{name}.nets")), nets)?;

    let mut wts = String::from("UCLA wts 1.0\n");
    for net in &nl.nets {
        let _ = writeln!(wts, "{} {}", net.name, net.weight);
    }
    write(dir.join(format!("{name}.wts")), wts)?;

    let rows = &bundle.rows;
    let mut scl = String::from("UCLA scl 1.0\n");
    let _ = writeln!(scl, "NumRows : {}", rows.num_rows);
    let sites = ((rows.x_max - rows.x_min) / rows.site_width.max(1e-12)).floor() as usize;
    for r in 0..rows.num_rows {
        let _ = writeln!(scl, "CoreRow Horizontal");
        let _ = writeln!(scl, " Coordinate : {}", rows.y0 + r as f64 * rows.row_height);
        let _ = writeln!(scl, " Height : {}", rows.row_height);
        let _ = writeln!(scl, " Sitewidth : {}", rows.site_width);
        let _ = writeln!(scl, " Sitespacing : {}", rows.site_width);
        let _ = writeln!(scl, " Siteorient : 1");
        let _ = writeln!(scl, " Sitesymmetry : 1");
        let _ = writeln!(scl, " SubrowOrigin : {} NumSites : {}", rows.x_min, sites);
        let _ = writeln!(scl, "End");
    }
    write(dir.join(format!("{name}.scl")), scl)?;

    let mut pl = String::from("UCLA pl 1.0\n");
    for (i, c) in nl.cells.iter().enumerate() {
        let suffix = if c.movable { "" } else { " /FIXED" };
        let _ = writeln!(
            pl,
            "{} {} {} : N{}",
            c.name,
            bundle.positions.x[i] - c.width / 2.0,
            bundle.positions.y[i] - c.height / 2.0,
            suffix
        );
    }
    write(dir.join(format!("{name}.pl")), pl)?;

    let aux = format!(
        "RowBasedPlacement : {name}.nodes {name}.nets {name}.wts {name}.pl {name}.scl\n"
    );
    let aux_path = dir.join(format!("{name}.aux"));
    write(aux_path.clone(), aux)?;
    Ok(aux_path)
}

/// Write a full 3D bundle (`.aux/.nodes/.nets/.wts/.scl/.pl`) under `dir`.
pub fn write_bundle_3d(
    dir: &Path,
    name: &str,
    instance: &Instance,
    placement: &Placement,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let write = |file: PathBuf, content: String| -> Result<PathBuf> {
        fs::write(&file, content).map_err(|e| Error::Io {
            path: file.display().to_string(),
            source: e,
        })?;
        Ok(file)
    };
    let nl = &instance.netlist;
    let (sx, sy) = (instance.scale.sx, instance.scale.sy);
    let mut written = Vec::new();

    let mut nodes = String::from("UCLA nodes 1.0\n");
    let terminals = nl.cells.iter().filter(|c| !c.movable).count();
    let _ = writeln!(nodes, "NumNodes : {}", nl.cells.len());
    let _ = writeln!(nodes, "NumTerminals : {terminals}");
    for c in &nl.cells {
        let term = if c.movable { "" } else { " terminal" };
        let _ = writeln!(nodes, "{} {} {}{}", c.name, c.width * sx, c.height * sy, term);
    }
    written.push(write(dir.join(format!("{name}.nodes")), nodes)?);

    let mut nets = String::from("UCLA nets 1.0\n");
    let pins: usize = nl.nets.iter().map(|n| n.pins.len()).sum();
    let _ = writeln!(nets, "NumNets : {}", nl.nets.len());
    let _ = writeln!(nets, "NumPins : {pins}");
    for net in &nl.nets {
        let _ = writeln!(nets, "NetDegree : {} {}", net.pins.len(), net.name);
        for pin in &net.pins {
            match pin {
                Pin::OnCell { cell, dx, dy } => {
                    let _ = writeln!(nets, "\t{} I : {} {}", nl.cells[*cell].name, dx * sx, dy * sy);
                }
                Pin::Fixed { .. } => {}
            }
        }
    }
    written.push(write(dir.join(format!("{name}.nets")), nets)?);

    let mut wts = String::from("UCLA wts 1.0\n");
    for net in &nl.nets {
        let _ = writeln!(wts, "{} {}", net.name, net.weight);
    }
    written.push(write(dir.join(format!("{name}.wts")), wts)?);

    let rows = &instance.rows;
    let mut scl = String::from("UCLA scl 1.0\n");
    let _ = writeln!(scl, "NumRows : {}", rows.num_rows);
    let sites = ((rows.x_max - rows.x_min) * sx / (rows.site_width * sx).max(1e-12)).floor()
        as usize;
    for r in 0..rows.num_rows {
        let _ = writeln!(scl, "CoreRow Horizontal");
        let _ = writeln!(scl, " Coordinate : {}", (rows.row_bottom(r)) * sy);
        let _ = writeln!(scl, " Height : {}", rows.row_height * sy);
        let _ = writeln!(scl, " Sitewidth : {}", rows.site_width * sx);
        let _ = writeln!(scl, " Sitespacing : {}", rows.site_width * sx);
        let _ = writeln!(scl, " Siteorient : 1");
        let _ = writeln!(scl, " Sitesymmetry : 1");
        let _ = writeln!(scl, " SubrowOrigin : {} NumSites : {}", rows.x_min * sx, sites);
        let _ = writeln!(scl, "End");
    }
    written.push(write(dir.join(format!("{name}.scl")), scl)?);

    let pl_path = dir.join(format!("{name}.pl"));
    write_placement_3d(&pl_path, instance, placement)?;
    written.push(pl_path);

    let aux = format!(
        "RowBasedPlacement : {name}.nodes {name}.nets {name}.wts {name}.pl {name}.scl\n"
    );
    written.push(write(dir.join(format!("{name}.aux")), aux)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn write_toy_bundle(dir: &Path, nets_body: &str, nodes_body: &str) -> PathBuf {
        fs::create_dir_all(dir).unwrap();
        fs::write(dir.join("toy.aux"), "RowBasedPlacement : toy.nodes toy.nets toy.wts toy.pl toy.scl\n").unwrap();
        fs::write(dir.join("toy.nodes"), nodes_body).unwrap();
        fs::write(dir.join("toy.nets"), nets_body).unwrap();
        fs::write(dir.join("toy.wts"), "UCLA wts 1.0\n").unwrap();
        fs::write(
            dir.join("toy.pl"),
            "UCLA pl 1.0\n\
             a 10 20 : N\n\
             b 50 20 : N\n\
             p0 0 0 : N /FIXED\n",
        )
        .unwrap();
        fs::write(
            dir.join("toy.scl"),
            "UCLA scl 1.0\nNumRows : 2\n\
             CoreRow Horizontal\n Coordinate : 0\n Height : 12\n Sitewidth : 1\n Sitespacing : 1\n SubrowOrigin : 0 NumSites : 100\nEnd\n\
             CoreRow Horizontal\n Coordinate : 12\n Height : 12\n Sitewidth : 1\n Sitespacing : 1\n SubrowOrigin : 0 NumSites : 100\nEnd\n",
        )
        .unwrap();
        dir.join("toy.aux")
    }

    const TOY_NODES: &str = "UCLA nodes 1.0\nNumNodes : 3\nNumTerminals : 1\n\
        a 4 12\n\
        b 6 12\n\
        p0 0 0 terminal\n";

    const TOY_NETS: &str = "UCLA nets 1.0\nNumNets : 1\nNumPins : 2\n\
        NetDegree : 2 n0\n\
        \ta I : 0.0 0.0\n\
        \tb I : 1.0 -2.0\n";

    #[test]
    fn parse_toy_bundle() {
        let dir = std::env::temp_dir().join("fieldplace_parse_toy");
        let aux = write_toy_bundle(&dir, TOY_NETS, TOY_NODES);
        let parsed = parse_bookshelf(&aux, 1.0).unwrap();
        let ParsedInput::Planar(b) = parsed else {
            panic!("expected planar bundle");
        };
        assert_eq!(b.netlist.cells.len(), 3);
        assert_eq!(b.netlist.nets.len(), 1);
        assert_eq!(b.netlist.nets[0].pins.len(), 2);
        // Centers: corner + half dims.
        assert_relative_eq!(b.positions.x[0], 12.0);
        assert_relative_eq!(b.positions.y[0], 26.0);
        assert_eq!(b.rows.num_rows, 2);
        assert_relative_eq!(b.rows.row_height, 12.0);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dangling_pin_reference_errors() {
        let dir = std::env::temp_dir().join("fieldplace_parse_dangling");
        let nets = "NetDegree : 2 n0\n\ta I : 0 0\n\to999 I : 0 0\n";
        let aux = write_toy_bundle(&dir, nets, TOY_NODES);
        let err = parse_bookshelf(&aux, 1.0).unwrap_err();
        match err {
            Error::Parse { msg, .. } => assert!(msg.contains("o999"), "{msg}"),
            other => panic!("expected parse error, got {other}"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn negative_width_errors() {
        let dir = std::env::temp_dir().join("fieldplace_parse_negw");
        let nodes = "NumNodes : 1\nNumTerminals : 0\na -4 12\n";
        let aux = write_toy_bundle(&dir, TOY_NETS, nodes);
        assert!(matches!(
            parse_bookshelf(&aux, 1.0),
            Err(Error::Parse { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    fn toy_bundle() -> Bundle2D {
        let mut netlist = Netlist::default();
        netlist.cells.push(Cell {
            name: "a".into(),
            width: 4.0,
            height: 12.0,
            kind: CellKind::StdCell,
            movable: true,
        });
        netlist.cells.push(Cell {
            name: "b".into(),
            width: 6.0,
            height: 12.0,
            kind: CellKind::StdCell,
            movable: true,
        });
        netlist.cells.push(Cell {
            name: "p0".into(),
            width: 0.0,
            height: 0.0,
            kind: CellKind::Io,
            movable: false,
        });
        netlist.nets.push(Net {
            name: "n0".into(),
            pins: vec![
                Pin::OnCell { cell: 0, dx: 0.0, dy: 0.0 },
                Pin::OnCell { cell: 1, dx: 1.0, dy: -2.0 },
            ],
            weight: 1.0,
        });
        let mut positions = Placement::zeroed(3);
        positions.x.copy_from_slice(&[12.0, 53.0, 0.0]);
        positions.y.copy_from_slice(&[26.0, 26.0, 0.0]);
        Bundle2D {
            name: "toy".into(),
            netlist,
            positions,
            rows: Rows2D {
                y0: 0.0,
                row_height: 12.0,
                num_rows: 2,
                x_min: 0.0,
                x_max: 100.0,
                site_width: 1.0,
            },
        }
    }

    #[test]
    fn transform_scales_area_per_tier() {
        let bundle = toy_bundle();
        let area2d = bundle.rows.area();
        let spec = Transform3DSpec {
            tiers: 4,
            extra_whitespace: 0.10,
            rho_t: 1.0,
            vi_weight: None,
        };
        let (inst, _) = transform_2d_to_3d(&bundle, &spec).unwrap();
        let tier_area = inst.scale.sx * inst.scale.sy;
        assert_relative_eq!(tier_area, area2d / 4.0 / 0.9, max_relative = 1e-12);
        // Aspect preserved.
        assert_relative_eq!(
            inst.scale.sx / inst.scale.sy,
            bundle.rows.width() / bundle.rows.height(),
            max_relative = 1e-12
        );
        // Cell physical dims unchanged.
        assert_relative_eq!(inst.netlist.cells[0].width * inst.scale.sx, 4.0);
        assert_relative_eq!(inst.netlist.cells[0].height * inst.scale.sy, 12.0);
    }

    #[test]
    fn transform_single_tier_no_whitespace_is_identity_normalization() {
        let bundle = toy_bundle();
        let spec = Transform3DSpec {
            tiers: 1,
            extra_whitespace: 0.0,
            rho_t: 1.0,
            vi_weight: None,
        };
        let (inst, pl) = transform_2d_to_3d(&bundle, &spec).unwrap();
        assert_relative_eq!(inst.scale.sx, 100.0);
        assert_relative_eq!(inst.scale.sy, 24.0);
        // Positions map back to the originals (y center 26 pokes out of the
        // 24-high row region, so it clamps to height - h/2 = 18).
        let (px, py) = inst.scale.to_phys(pl.x[0], pl.y[0]);
        assert_relative_eq!(px, 12.0, max_relative = 1e-12);
        assert_relative_eq!(py, 18.0, max_relative = 1e-12);
    }

    #[test]
    fn transform_rejects_oversized_macro() {
        let mut bundle = toy_bundle();
        // Square planar region 100x24; tier extent at T=4, ws=0.10 is about
        // 52.7 x 12.6; a 90-wide macro cannot fit.
        bundle.netlist.cells[1].width = 90.0;
        bundle.netlist.cells[1].kind = CellKind::Macro;
        let spec = Transform3DSpec {
            tiers: 4,
            extra_whitespace: 0.10,
            rho_t: 1.0,
            vi_weight: None,
        };
        match transform_2d_to_3d(&bundle, &spec) {
            Err(Error::InfeasibleTransform(msg)) => assert!(msg.contains("b"), "{msg}"),
            other => panic!("expected InfeasibleTransform, got {other:?}"),
        }
    }

    #[test]
    fn transform_preserves_topology_and_total_area() {
        let bundle = toy_bundle();
        let spec = Transform3DSpec::default();
        let (inst, _) = transform_2d_to_3d(&bundle, &spec).unwrap();
        assert_eq!(inst.netlist.cells.len(), bundle.netlist.cells.len());
        assert_eq!(inst.netlist.nets.len(), bundle.netlist.nets.len());
        let phys_area: f64 = inst
            .netlist
            .cells
            .iter()
            .map(|c| c.area() * inst.scale.sx * inst.scale.sy)
            .sum();
        let orig_area: f64 = bundle.netlist.cells.iter().map(|c| c.area()).sum();
        assert_relative_eq!(phys_area, orig_area, max_relative = 1e-9);
    }

    #[test]
    fn transform_utilization_drops_by_whitespace() {
        let bundle = toy_bundle();
        let ws = 0.10;
        let spec = Transform3DSpec {
            tiers: 2,
            extra_whitespace: ws,
            rho_t: 1.0,
            vi_weight: None,
        };
        let (inst, _) = transform_2d_to_3d(&bundle, &spec).unwrap();
        let orig_util: f64 =
            bundle.netlist.cells.iter().map(|c| c.area()).sum::<f64>() / bundle.rows.area();
        let tier_area = inst.scale.sx * inst.scale.sy;
        let new_util: f64 = inst
            .netlist
            .cells
            .iter()
            .map(|c| c.area() * tier_area)
            .sum::<f64>()
            / (2.0 * tier_area);
        assert_relative_eq!(new_util, orig_util * (1.0 - ws), max_relative = 1e-9);
    }

    #[test]
    fn fixed_objects_land_on_bottom_boundary() {
        let mut bundle = toy_bundle();
        bundle.positions.x[2] = 40.0;
        bundle.positions.y[2] = 3.0; // near the bottom edge
        let (inst, pl) = transform_2d_to_3d(&bundle, &Transform3DSpec::default()).unwrap();
        let i = 2;
        let on_x_edge = pl.x[i] == 0.0 || (pl.x[i] - 1.0).abs() < 1e-12;
        let on_y_edge = pl.y[i] == 0.0 || (pl.y[i] - 1.0).abs() < 1e-12;
        assert!(on_x_edge || on_y_edge, "({}, {})", pl.x[i], pl.y[i]);
        assert_eq!(pl.z[i], 0.0);
        assert_eq!(inst.region.tier_of_z(pl.z[i]), 0);
    }

    #[test]
    fn placement_roundtrip_exact() {
        let bundle = toy_bundle();
        let (inst, mut pl) = transform_2d_to_3d(&bundle, &Transform3DSpec::default()).unwrap();
        pl.x[0] = 0.12345678901234;
        pl.y[0] = 0.4321;
        pl.x[1] = 0.777;
        pl.y[1] = 0.25;
        pl.tier = Some(vec![1, 3, 0]);
        pl.z = vec![
            inst.region.tier_center(1),
            inst.region.tier_center(3),
            0.0,
        ];
        let dir = std::env::temp_dir().join("fieldplace_pl3d_rt");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.pl");
        write_placement_3d(&path, &inst, &pl).unwrap();
        let back = read_placement_3d(&path, &inst).unwrap();
        for i in 0..3 {
            assert!((back.x[i] - pl.x[i]).abs() <= 1e-12);
            assert!((back.y[i] - pl.y[i]).abs() <= 1e-12);
        }
        assert_eq!(back.tier.as_ref().unwrap(), pl.tier.as_ref().unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn read_rejects_tier_out_of_range() {
        let bundle = toy_bundle();
        let (inst, pl) = transform_2d_to_3d(&bundle, &Transform3DSpec::default()).unwrap();
        let dir = std::env::temp_dir().join("fieldplace_pl3d_badtier");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.pl");
        write_placement_3d(&path, &inst, &pl).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace(" 0 :", " 5 :");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            read_placement_3d(&path, &inst),
            Err(Error::Format(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn legacy_three_column_pl_single_tier() {
        let bundle = toy_bundle();
        let spec = Transform3DSpec {
            tiers: 1,
            extra_whitespace: 0.0,
            rho_t: 1.0,
            vi_weight: None,
        };
        let (inst, _) = transform_2d_to_3d(&bundle, &spec).unwrap();
        let dir = std::env::temp_dir().join("fieldplace_pl3d_legacy");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("legacy.pl");
        fs::write(
            &path,
            "UCLA pl 1.0\na 10 2 : N\nb 50 2 : N\np0 0 0 : N /FIXED\n",
        )
        .unwrap();
        let pl = read_placement_3d(&path, &inst).unwrap();
        assert_eq!(pl.tier.as_ref().unwrap(), &vec![0, 0, 0]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bundle_roundtrip_reparses_identically() {
        let bundle = toy_bundle();
        let (inst, mut pl) = transform_2d_to_3d(&bundle, &Transform3DSpec::default()).unwrap();
        pl.tier = Some(vec![0, 1, 0]);
        pl.z[0] = inst.region.tier_center(0);
        pl.z[1] = inst.region.tier_center(1);
        let dir = std::env::temp_dir().join("fieldplace_bundle_rt");
        fs::remove_dir_all(&dir).ok();
        write_bundle_3d(&dir, "t3d", &inst, &pl).unwrap();
        let parsed = parse_bookshelf(&dir.join("t3d.aux"), 1.0).unwrap();
        let ParsedInput::ThreeD {
            instance: inst2,
            placement: pl2,
        } = parsed
        else {
            panic!("expected 3D bundle");
        };
        assert_eq!(inst2.region.tiers, inst.region.tiers);
        assert_eq!(inst2.netlist.cells.len(), inst.netlist.cells.len());
        for i in 0..inst.netlist.cells.len() {
            assert!((pl2.x[i] - pl.x[i]).abs() < 1e-9);
            assert!((pl2.y[i] - pl.y[i]).abs() < 1e-9);
        }
        assert_eq!(pl2.tier.as_ref().unwrap(), pl.tier.as_ref().unwrap());
        // Idempotent normal form: write again, reparse, identical content.
        let dir2 = std::env::temp_dir().join("fieldplace_bundle_rt2");
        fs::remove_dir_all(&dir2).ok();
        write_bundle_3d(&dir2, "t3d", &inst2, &pl2).unwrap();
        let a = fs::read_to_string(dir.join("t3d.nodes")).unwrap();
        let b = fs::read_to_string(dir2.join("t3d.nodes")).unwrap();
        assert_eq!(a, b);
        let a = fs::read_to_string(dir.join("t3d.pl")).unwrap();
        let b = fs::read_to_string(dir2.join("t3d.pl")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir).ok();
        std::fs::remove_dir_all(&dir2).ok();
    }
}

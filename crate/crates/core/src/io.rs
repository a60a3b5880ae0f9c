//! CSV formats with `# key = value` preambles, graymaps and text previews.

use crate::detection::{RunCounts, SourceStats};
use crate::error::{Error, Result};
use crate::map::{CoincidenceMap, MapMetadata};
use crate::optics::BiphotonAmplitude;
use crate::state::Branch;
use std::fmt::Write as _;
use std::path::Path;

pub type Preamble = Vec<(String, String)>;

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn push_preamble(out: &mut String, preamble: &[(String, String)]) {
    for (k, v) in preamble {
        let _ = writeln!(out, "# {k} = {v}");
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("none".to_string(), |x| x.to_string())
}

pub fn map_to_csv(map: &CoincidenceMap, extra: &[(String, String)]) -> String {
    let m = &map.metadata;
    let mut pre: Preamble = extra.to_vec();
    pre.extend([
        ("branch".to_string(), map.branch.name().to_string()),
        ("alpha_deg".to_string(), opt(m.alpha_deg)),
        ("phi_deg".to_string(), opt(m.phi_deg)),
        ("beta_per_mm".to_string(), opt(m.beta_per_mm)),
        ("a_plus".to_string(), opt(m.a_plus)),
        ("a_minus".to_string(), opt(m.a_minus)),
        ("normalized".to_string(), map.normalized.to_string()),
        ("step_mm".to_string(), map.step_mm.to_string()),
    ]);
    pre.extend(m.extra.iter().cloned());
    let mut out = String::new();
    push_preamble(&mut out, &pre);
    out.push_str("x1_mm,x2_mm,value\n");
    for (i, x1) in map.x1_mm.iter().enumerate() {
        for (j, x2) in map.x2_mm.iter().enumerate() {
            let _ = writeln!(out, "{x1},{x2},{}", map.get(i, j));
        }
    }
    out
}

pub fn write_map(path: impl AsRef<Path>, map: &CoincidenceMap, extra: &[(String, String)]) -> Result<()> {
    write_file(path.as_ref(), &map_to_csv(map, extra))
}

fn parse_preamble(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

fn parse_f64(s: &str, line: u64, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse { line, message: format!("invalid {what} '{s}'") })
}

/// Parses the map CSV format; errors carry the offending line number.
pub fn map_from_csv(text: &str) -> Result<CoincidenceMap> {
    let pre = parse_preamble(text);
    let get = |k: &str| pre.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str());
    let branch = Branch::parse(get("branch").ok_or(Error::Parse { line: 0, message: "missing '# branch' line".into() })?)?;
    let normalized = get("normalized").map(|v| v == "true").unwrap_or(false);
    let optional = |k: &str| -> Result<Option<f64>> {
        match get(k) {
            None | Some("none") => Ok(None),
            Some(v) => Ok(Some(parse_f64(v, 0, k)?)),
        }
    };
    let known = ["branch", "alpha_deg", "phi_deg", "beta_per_mm", "a_plus", "a_minus", "normalized", "step_mm"];
    let extra = pre.iter().filter(|(k, _)| !known.contains(&k.as_str())).cloned().collect();
    let metadata = MapMetadata {
        alpha_deg: optional("alpha_deg")?,
        phi_deg: optional("phi_deg")?,
        beta_per_mm: optional("beta_per_mm")?,
        a_plus: optional("a_plus")?,
        a_minus: optional("a_minus")?,
        extra,
    };

    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header_line = text.lines().position(|l| !l.starts_with('#')).unwrap_or(0) as u64 + 1;
    let headers = rdr.headers().map_err(|e| Error::Parse { line: header_line, message: e.to_string() })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x1_mm", "x2_mm", "value"] {
        return Err(Error::Parse { line: header_line, message: format!("expected header x1_mm,x2_mm,value, got {headers:?}") });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: format!("malformed row: {e}"),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Parse { line, message: format!("row has {} fields, expected 3", rec.len()) });
        }
        rows.push((parse_f64(&rec[0], line, "x1_mm")?, parse_f64(&rec[1], line, "x2_mm")?, parse_f64(&rec[2], line, "value")?, line));
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: header_line, message: "map has no rows".into() });
    }
    let mut x1: Vec<f64> = Vec::new();
    let mut x2: Vec<f64> = Vec::new();
    for r in &rows {
        if !x1.contains(&r.0) {
            x1.push(r.0);
        }
        if !x2.contains(&r.1) {
            x2.push(r.1);
        }
    }
    if x1.len() * x2.len() != rows.len() {
        return Err(Error::Shape(format!("{} rows do not form a {}x{} grid", rows.len(), x1.len(), x2.len())));
    }
    for (k, r) in rows.iter().enumerate() {
        if r.0 != x1[k / x2.len()] || r.1 != x2[k % x2.len()] {
            return Err(Error::Parse { line: r.3, message: "rows are not in row-major grid order".into() });
        }
    }
    let step_mm = match get("step_mm") {
        Some(v) => parse_f64(v, 0, "step_mm")?,
        None if x2.len() > 1 => x2[1] - x2[0],
        None => 0.0,
    };
    Ok(CoincidenceMap { x1_mm: x1, x2_mm: x2, values: rows.iter().map(|r| r.2).collect(), branch, normalized, step_mm, metadata })
}

pub fn read_map(path: impl AsRef<Path>) -> Result<CoincidenceMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    map_from_csv(&text)
}

pub fn amplitude_to_csv(a: &BiphotonAmplitude, extra: &[(String, String)]) -> String {
    let mut out = String::new();
    let mut pre = extra.to_vec();
    pre.push(("grid_n".into(), a.grid.n.to_string()));
    pre.push(("grid_extent_um".into(), (a.grid.extent * 1e6).to_string()));
    push_preamble(&mut out, &pre);
    out.push_str("xi1_um,xi2_um,re,im\n");
    for i in 0..a.grid.n {
        for j in 0..a.grid.n {
            let v = a.get(i, j);
            let _ = writeln!(out, "{},{},{},{}", a.grid.coordinate(i) * 1e6, a.grid.coordinate(j) * 1e6, v.re, v.im);
        }
    }
    out
}

/// Preamble describing the acquisition settings of simulated runs.
pub fn source_preamble(source: &SourceStats, seed: u64, gain: Option<f64>) -> Preamble {
    vec![
        ("seed".into(), seed.to_string()),
        ("p".into(), source.pairs.mean.to_string()),
        ("gamma".into(), source.overall_efficiency().to_string()),
        ("detector_efficiency".into(), source.detector_efficiency.to_string()),
        ("distribution".into(), source.pairs.family.name().to_string()),
        ("thermal_modes".into(), source.pairs.modes.to_string()),
        ("g".into(), opt(gain)),
        ("repetition_rate_hz".into(), source.repetition_rate.to_string()),
        ("tau_s".into(), source.duration.to_string()),
        ("coincidence_window_s".into(), source.coincidence_window.to_string()),
    ]
}

pub fn runs_to_csv(runs: &[RunCounts], preamble: &[(String, String)]) -> String {
    let mut out = String::new();
    push_preamble(&mut out, preamble);
    out.push_str(
        "x_d1_mm,x_d2_mm,x_d3_mm,x_d4_mm,pulses,n_d1,n_d2,n_d3,n_d4,c_12,c_13,c_14,c_23,c_24,c_34,\
         cross_12,cross_13,cross_14,cross_23,cross_24,cross_34,fourfold\n",
    );
    for r in runs {
        let mut f: Vec<String> = r.detector_positions_mm.iter().map(|x| x.to_string()).collect();
        f.push(r.pulses.to_string());
        f.extend(r.singles.iter().map(|v| v.to_string()));
        f.extend(r.coincidences.iter().map(|v| v.to_string()));
        f.extend(r.cross_pair_coincidences.iter().map(|v| v.to_string()));
        f.push(r.fourfolds.to_string());
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}

/// Plain graymap (P2) with values clipped at zero and scaled by the map
/// maximum; rows run over x1 from top to bottom.
pub fn map_to_pgm(map: &CoincidenceMap) -> String {
    let max = map.max().max(f64::MIN_POSITIVE);
    let (n1, n2) = (map.x1_mm.len(), map.x2_mm.len());
    let mut out = format!("P2\n{n2} {n1}\n255\n");
    for i in (0..n1).rev() {
        let row: Vec<String> =
            (0..n2).map(|j| ((map.get(i, j).max(0.0) / max) * 255.0).round().to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Character heat map for terminal output, largest x1 on top.
pub fn map_to_ascii(map: &CoincidenceMap) -> String {
    const SHADES: &[u8] = b" .:-=+*#%@";
    let max = map.max().max(f64::MIN_POSITIVE);
    let mut out = String::new();
    for i in (0..map.x1_mm.len()).rev() {
        for j in 0..map.x2_mm.len() {
            let t = (map.get(i, j).max(0.0) / max).min(1.0);
            let c = SHADES[((t * (SHADES.len() - 1) as f64).round()) as usize] as char;
            out.push(c);
            out.push(c);
        }
        out.push('\n');
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_file(path.as_ref(), text)
}

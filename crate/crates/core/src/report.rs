//! File formats: JSON with sorted keys and 17 significant digits, the trace
//! CSV, SVG drawings of focal conics and OBJ meshes.

use std::fmt::Write as _;
use std::io;

use nalgebra::{Matrix2, SymmetricEigen, Vector2, Vector3};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::analysis::TraceTable;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::pointwise::{ConicKind, FocalConic};

/// Float rendering shared by every format: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".to_string()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Pretty printer that writes every float with [`fmt_float`].
struct FixedFloats<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident),*) => {$(
        fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        }
    )*};
}

impl Formatter for FixedFloats<'_> {
    delegate!(begin_array, end_array, begin_object, end_object, end_array_value, begin_object_value, end_object_value);

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_float(value).as_bytes())
    }
}

/// JSON text of `value` with object keys sorted. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let tree: Value = serde_json::to_value(value).map_err(|e| Error::Consistency(format!("serialization: {e}")))?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::with_indent(b"  ")));
    tree.serialize(&mut ser).map_err(|e| Error::Consistency(format!("serialization: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

/// Nonzero terms of a jet as `[exponents..., coefficient]` rows.
pub fn jet_terms(j: &Jet) -> Value {
    let rows: Vec<Value> = j
        .terms()
        .filter(|(_, c)| *c != 0.0)
        .map(|(e, c)| {
            let mut row: Vec<Value> = e[..j.nvars()].iter().map(|&k| Value::from(k)).collect();
            row.push(Value::from(c));
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

pub const TRACE_COLUMNS: [&str; 9] = ["s_tilde", "u_plus", "u_minus", "a20", "a11", "a02", "ku_ext", "ka", "conic_kind"];

pub fn trace_csv(t: &TraceTable) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
    for row in &t.rows {
        let inv = row.invariants();
        let fields = [
            fmt_float(row.s_tilde),
            opt(row.u_plus),
            opt(row.u_minus),
            opt(inv.map(|i| i.a20)),
            opt(inv.map(|i| i.a11)),
            opt(inv.map(|i| i.a02)),
            opt(inv.map(|i| i.ku_ext)),
            opt(inv.map(|i| i.ka)),
            row.conic().map(|k| k.label().to_string()).unwrap_or_default(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Half width of the square drawn by [`conic_svg`].
pub const SVG_HALF_WIDTH: f64 = 5.0;
const SVG_CELLS: usize = 240;

/// Zero set of `g` on the square `[-h, h]^2` as line segments (marching squares).
fn zero_segments(g: &dyn Fn(f64, f64) -> f64, h: f64, n: usize) -> Vec<[[f64; 2]; 2]> {
    let step = 2.0 * h / n as f64;
    let at = |i: usize| -h + step * i as f64;
    let vals: Vec<Vec<f64>> = (0..=n).map(|i| (0..=n).map(|j| g(at(i), at(j))).collect()).collect();
    let mut segs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let corners = [
                ([at(i), at(j)], vals[i][j]),
                ([at(i + 1), at(j)], vals[i + 1][j]),
                ([at(i + 1), at(j + 1)], vals[i + 1][j + 1]),
                ([at(i), at(j + 1)], vals[i][j + 1]),
            ];
            let mut cuts = Vec::with_capacity(4);
            for k in 0..4 {
                let (p, a) = corners[k];
                let (q, b) = corners[(k + 1) % 4];
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    cuts.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                }
            }
            if cuts.len() >= 2 {
                segs.push([cuts[0], cuts[1]]);
            }
            if cuts.len() == 4 {
                segs.push([cuts[2], cuts[3]]);
            }
        }
    }
    segs
}

/// The line of a conic `(n . y + b)^2 = 0`, which has no sign change.
fn double_line(c: &FocalConic) -> Option<[[f64; 2]; 2]> {
    let m = Matrix2::new(c.quadratic[0][0], c.quadratic[0][1], c.quadratic[1][0], c.quadratic[1][1]);
    let eig = SymmetricEigen::new(m);
    let k = if eig.eigenvalues[0].abs() >= eig.eigenvalues[1].abs() { 0 } else { 1 };
    let lambda = eig.eigenvalues[k];
    if lambda.abs() < 1e-300 {
        return None;
    }
    let n: Vector2<f64> = eig.eigenvectors.column(k).into();
    let l = Vector2::new(c.linear[0], c.linear[1]);
    let foot = n * (-l.dot(&n) / (2.0 * lambda));
    let dir = Vector2::new(-n[1], n[0]) * (4.0 * SVG_HALF_WIDTH);
    Some([(foot - dir).into(), (foot + dir).into()])
}

/// SVG drawing of a focal conic in normal-plane coordinates, with the
/// plane origin (the image point) marked and the conic kind as a label.
pub fn conic_svg(c: &FocalConic, title: &str) -> String {
    let h = SVG_HALF_WIDTH;
    let mut segs = zero_segments(&|x, y| c.eval([x, y]), h, SVG_CELLS);
    if segs.is_empty() && c.kind == ConicKind::DoubleOrSingleLine {
        segs.extend(double_line(c));
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="600">"#,
        -h,
        -h,
        2.0 * h,
        2.0 * h
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#, -h, -h, 2.0 * h, 2.0 * h);
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" stroke-linecap="round">"#);
    let _ = writeln!(
        s,
        r##"<path d="M {a} 0 H {h} M 0 {a} V {h}" stroke="#999" stroke-width="0.02" fill="none"/>"##,
        a = -h
    );
    let mut d = String::new();
    for [p, q] in &segs {
        let _ = write!(d, "M {:.6} {:.6} L {:.6} {:.6} ", p[0], p[1], q[0], q[1]);
    }
    let _ = writeln!(s, r##"<path d="{}" stroke="#c02020" stroke-width="0.04" fill="none"/>"##, d.trim_end());
    let _ = writeln!(s, r##"<circle cx="0" cy="0" r="0.06" fill="#202020"/>"##);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" font-size="0.45" font-family="sans-serif" fill="#202020">{}</text>"##,
        -h + 0.2,
        -h + 0.6,
        escape(c.kind.label())
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rectangular `(u, v)` grid with `nu x nv` vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeshGrid {
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub nu: usize,
    pub nv: usize,
}

impl MeshGrid {
    pub fn new(u_range: [f64; 2], v_range: [f64; 2], nu: usize, nv: usize) -> Result<MeshGrid> {
        if nu < 2 || nv < 2 {
            return Err(Error::Usage(format!("mesh needs at least 2x2 vertices, got {nu}x{nv}")));
        }
        if u_range[0] >= u_range[1] || v_range[0] >= v_range[1] {
            return Err(Error::Usage("mesh ranges must be increasing".into()));
        }
        Ok(MeshGrid { u_range, v_range, nu, nv })
    }

    /// Vertices in row-major order: `v` is the row, `u` runs fastest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let lerp = |r: [f64; 2], i: usize, n: usize| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64;
        let mut pts = Vec::with_capacity(self.nu * self.nv);
        for j in 0..self.nv {
            for i in 0..self.nu {
                pts.push((lerp(self.u_range, i, self.nu), lerp(self.v_range, j, self.nv)));
            }
        }
        pts
    }
}

/// OBJ text for the images of the grid vertices, two triangles per cell.
pub fn mesh_obj(grid: &MeshGrid, vertices: &[Vector3<f64>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}x{} vertices", grid.nu, grid.nv);
    for p in vertices {
        let _ = writeln!(s, "v {} {} {}", fmt_float(p[0]), fmt_float(p[1]), fmt_float(p[2]));
    }
    let idx = |i: usize, j: usize| j * grid.nu + i + 1;
    for j in 0..grid.nv - 1 {
        for i in 0..grid.nu - 1 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            let _ = writeln!(s, "f {a} {b} {c}");
            let _ = writeln!(s, "f {a} {c} {d}");
        }
    }
    s
}

/// One sign (`-1`, `0`, `1`) per line, in vertex order.
pub fn sign_lines(signs: &[i8]) -> String {
    let mut s = String::with_capacity(3 * signs.len());
    for x in signs {
        let _ = writeln!(s, "{x}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::MapGerm;
    use crate::pointwise::{focal_conic, Surface};

    #[test]
    fn json_sorted_and_exact() {
        #[derive(Serialize)]
        struct T {
            zeta: f64,
            alpha: Vec<f64>,
        }
        let x = 0.1 + 0.2;
        let text = to_json(&T { zeta: x, alpha: vec![1.0, -2.5e-300] }).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["zeta"].as_f64().unwrap(), x);
        assert_eq!(back["alpha"][1].as_f64().unwrap(), -2.5e-300);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [1.0 / 3.0, -7.25e-17, 6.02214076e23, 0.0] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn mesh_counts() {
        let g = MeshGrid::new([-1.0, 1.0], [-1.0, 1.0], 50, 50).unwrap();
        let pts: Vec<Vector3<f64>> = g.points().iter().map(|&(u, v)| Vector3::new(u, v, 0.0)).collect();
        let obj = mesh_obj(&g, &pts);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 2500);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 49 * 49);
        assert!(matches!(MeshGrid::new([-1.0, 1.0], [-1.0, 1.0], 1, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn conic_drawings() {
        let f = MapGerm::parse("u; v^2; v*(u^2+v^2)+s*v").unwrap();
        let line = focal_conic(&f.frame(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(line.kind, ConicKind::DoubleOrSingleLine);
        let svg = conic_svg(&line, "model");
        assert!(svg.contains("double_or_single_line") && svg.contains(" L "));
        let ex = MapGerm::parse("u; -u^2+v^2; u^2+v^3+v*s+u^2*v").unwrap();
        let ellipse = focal_conic(&ex.frame(1.0, 0.0, -1.0).unwrap()).unwrap();
        assert_eq!(ellipse.kind, ConicKind::Ellipse);
        assert!(conic_svg(&ellipse, "ellipse").matches(" L ").count() > 20);
    }
}

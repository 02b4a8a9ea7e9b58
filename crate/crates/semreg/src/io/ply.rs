//! PLY point clouds: ascii, binary little-endian and binary big-endian
//! reading; ascii and binary little-endian writing. Only the `vertex`
//! element is interpreted: `x`, `y`, `z` and an optional integer `label`.

use std::fmt::Write as _;
use std::path::Path;

use semreg_core::{Label, Point, SemanticPointCloud};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    BinaryLittleEndian,
    BinaryBigEndian,
}

/// Storage type of the written coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Float,
    Double,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Decoded vertex data.
#[derive(Clone, Debug, PartialEq)]
pub struct PlyCloud {
    pub points: Vec<Point>,
    pub labels: Option<Vec<Label>>,
}

impl PlyCloud {
    /// Unlabeled files get label 0 everywhere.
    pub fn into_cloud(self, path: &Path) -> Result<SemanticPointCloud> {
        let n = self.points.len();
        let labels = self.labels.unwrap_or_else(|| vec![Label(0); n]);
        SemanticPointCloud::from_labeled(self.points, labels)
            .map_err(|e| CliError::malformed(path, 0, e.to_string()))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::malformed(self.path, self.pos as u64, message)
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| self.err("unterminated header line"))?;
        let line = std::str::from_utf8(&rest[..end]).map_err(|_| self.err("header is not valid UTF-8"))?;
        self.pos += end + 1;
        Ok(line.trim_end_matches('\r'))
    }

    /// One ascii data line; the final newline is optional.
    fn record(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        if rest.is_empty() {
            return Err(self.err("unexpected end of data"));
        }
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        let line = std::str::from_utf8(&rest[..end]).map_err(|_| self.err("data is not valid UTF-8"))?;
        self.pos += (end + 1).min(rest.len());
        Ok(line)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(format!("unexpected end of data, needed {n} more bytes")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn binary(&mut self, ty: Scalar, little: bool) -> Result<f64> {
        let b = self.take(ty.size())?;
        macro_rules! num {
            ($t:ty) => {{
                let arr = b.try_into().expect("sized slice");
                (if little { <$t>::from_le_bytes(arr) } else { <$t>::from_be_bytes(arr) }) as f64
            }};
        }
        Ok(match ty {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16),
            Scalar::U16 => num!(u16),
            Scalar::I32 => num!(i32),
            Scalar::U32 => num!(u32),
            Scalar::F32 => num!(f32),
            Scalar::F64 => num!(f64),
        })
    }
}

fn parse_header(cur: &mut Cursor<'_>) -> Result<(Encoding, Vec<Element>)> {
    if cur.line()? != "ply" {
        return Err(CliError::malformed(cur.path, 0, "missing `ply` magic line"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let at = cur.pos;
        let line = cur.line()?;
        let bad = |m: &str| CliError::malformed(cur.path, at as u64, format!("{m}: `{line}`"));
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, _version] => {
                encoding = Some(match *kind {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLittleEndian,
                    "binary_big_endian" => Encoding::BinaryBigEndian,
                    _ => return Err(bad("unknown format")),
                });
            }
            ["element", name, count] => {
                let count = count.parse().map_err(|_| bad("bad element count"))?;
                elements.push(Element { name: name.to_string(), count, properties: Vec::new() });
            }
            ["property", "list", count, item, _name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before any element"))?;
                let count = Scalar::parse(count).filter(|s| s.is_integer()).ok_or_else(|| bad("bad list count type"))?;
                let item = Scalar::parse(item).ok_or_else(|| bad("bad list item type"))?;
                el.properties.push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| bad("property before any element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| bad("unknown property type"))?;
                el.properties.push(Property::Scalar { name: name.to_string(), ty });
            }
            _ => return Err(bad("unrecognized header line")),
        }
    }
    let encoding = encoding.ok_or_else(|| CliError::malformed(cur.path, 0, "missing format line"))?;
    Ok((encoding, elements))
}

/// Positions of x, y, z and label within the vertex properties.
struct Layout {
    xyz: [usize; 3],
    label: Option<usize>,
}

fn vertex_layout(el: &Element, path: &Path) -> Result<Layout> {
    let find = |n: &str| {
        el.properties.iter().position(|p| matches!(p, Property::Scalar { name, .. } if name == n))
    };
    let mut xyz = [0; 3];
    for (slot, axis) in xyz.iter_mut().zip(["x", "y", "z"]) {
        *slot = find(axis).ok_or_else(|| CliError::malformed(path, 0, format!("vertex has no `{axis}` property")))?;
    }
    let label = find("label");
    if let Some(i) = label {
        if let Property::Scalar { ty, .. } = el.properties[i] {
            if !ty.is_integer() {
                return Err(CliError::malformed(path, 0, "`label` property must have an integer type"));
            }
        }
    }
    Ok(Layout { xyz, label })
}

fn to_label(v: f64, cur: &Cursor<'_>) -> Result<Label> {
    if v < 0.0 || v > u32::MAX as f64 || v.fract() != 0.0 {
        return Err(cur.err(format!("label {v} is not a non-negative 32-bit integer")));
    }
    Ok(Label(v as u32))
}

fn read_binary(cur: &mut Cursor<'_>, elements: &[Element], little: bool) -> Result<PlyCloud> {
    for el in elements {
        let is_vertex = el.name == "vertex";
        let layout = if is_vertex { Some(vertex_layout(el, cur.path)?) } else { None };
        let mut points = Vec::with_capacity(if is_vertex { el.count.min(cur.bytes.len()) } else { 0 });
        let mut labels = Vec::new();
        let mut values = vec![0.0; el.properties.len()];
        for _ in 0..el.count {
            for (slot, prop) in values.iter_mut().zip(&el.properties) {
                match *prop {
                    Property::Scalar { ty, .. } => *slot = cur.binary(ty, little)?,
                    Property::List { count, item } => {
                        let n = cur.binary(count, little)?;
                        cur.take(n as usize * item.size())?;
                    }
                }
            }
            if let Some(l) = &layout {
                points.push(Point::new(values[l.xyz[0]], values[l.xyz[1]], values[l.xyz[2]]));
                if let Some(li) = l.label {
                    labels.push(to_label(values[li], cur)?);
                }
            }
        }
        if let Some(l) = layout {
            return Ok(PlyCloud { points, labels: l.label.map(|_| labels) });
        }
    }
    Err(cur.err("file has no vertex element"))
}

fn read_ascii(cur: &mut Cursor<'_>, elements: &[Element]) -> Result<PlyCloud> {
    for el in elements {
        let layout = if el.name == "vertex" { Some(vertex_layout(el, cur.path)?) } else { None };
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut values = vec![0.0; el.properties.len()];
        for _ in 0..el.count {
            let at = cur.pos;
            let line = cur.record()?;
            let bad = |m: &str| CliError::malformed(cur.path, at as u64, m.to_string());
            let mut tokens = line.split_whitespace();
            let mut next = || -> Result<f64> {
                tokens.next().ok_or_else(|| bad("too few values"))?.parse::<f64>().map_err(|_| bad("unparsable number"))
            };
            for (slot, prop) in values.iter_mut().zip(&el.properties) {
                match prop {
                    Property::Scalar { .. } => *slot = next()?,
                    Property::List { .. } => {
                        let n = next()?;
                        for _ in 0..n as usize {
                            next()?;
                        }
                    }
                }
            }
            if let Some(l) = &layout {
                points.push(Point::new(values[l.xyz[0]], values[l.xyz[1]], values[l.xyz[2]]));
                if let Some(li) = l.label {
                    labels.push(to_label(values[li], cur).map_err(|_| bad("label is not a non-negative integer"))?);
                }
            }
        }
        if let Some(l) = layout {
            return Ok(PlyCloud { points, labels: l.label.map(|_| labels) });
        }
    }
    Err(cur.err("file has no vertex element"))
}

/// Decodes a PLY byte buffer; `path` only labels errors.
pub fn parse(bytes: &[u8], path: &Path) -> Result<PlyCloud> {
    let mut cur = Cursor { bytes, pos: 0, path };
    let (encoding, elements) = parse_header(&mut cur)?;
    match encoding {
        Encoding::Ascii => read_ascii(&mut cur, &elements),
        Encoding::BinaryLittleEndian => read_binary(&mut cur, &elements, true),
        Encoding::BinaryBigEndian => read_binary(&mut cur, &elements, false),
    }
}

/// Encodes a labeled cloud. Big-endian output is not offered.
pub fn encode(cloud: &SemanticPointCloud, encoding: Encoding, precision: Precision) -> Vec<u8> {
    let format = match encoding {
        Encoding::Ascii => "ascii",
        _ => "binary_little_endian",
    };
    let ty = match precision {
        Precision::Float => "float",
        Precision::Double => "double",
    };
    let mut header = format!("ply\nformat {format} 1.0\nelement vertex {}\n", cloud.len());
    for axis in ["x", "y", "z"] {
        let _ = writeln!(header, "property {ty} {axis}");
    }
    header.push_str("property uint label\nend_header\n");
    let mut out = header.into_bytes();
    for (p, l) in cloud.points().iter().zip(cloud.labels()) {
        match encoding {
            Encoding::Ascii => {
                let line = match precision {
                    Precision::Float => format!("{} {} {} {}\n", p.x as f32, p.y as f32, p.z as f32, l.0),
                    Precision::Double => format!("{} {} {} {}\n", p.x, p.y, p.z, l.0),
                };
                out.extend_from_slice(line.as_bytes());
            }
            _ => {
                for c in p.iter() {
                    match precision {
                        Precision::Float => out.extend_from_slice(&(*c as f32).to_le_bytes()),
                        Precision::Double => out.extend_from_slice(&c.to_le_bytes()),
                    }
                }
                out.extend_from_slice(&l.0.to_le_bytes());
            }
        }
    }
    out
}

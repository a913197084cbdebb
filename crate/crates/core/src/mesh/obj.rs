//! Wavefront OBJ subset: `v`, `vt` and `f` records. Other records (`vn`,
//! `o`, `g`, `s`, `usemtl`, ...) are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{MeshError, TriangleMesh};
use crate::{Vec2, Vec3};

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { path: path.to_string(), line, msg: msg.into() }
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve(raw: &str, count: usize, path: &str, line: usize) -> Result<usize, MeshError> {
    let i: i64 = raw.parse().map_err(|_| parse_err(path, line, format!("bad index '{raw}'")))?;
    let resolved = match i {
        0 => return Err(parse_err(path, line, "index 0 is invalid (OBJ indices are 1-based)")),
        i if i > 0 => i - 1,
        i => count as i64 + i,
    };
    if resolved < 0 {
        return Err(parse_err(path, line, format!("relative index {i} before first element")));
    }
    Ok(resolved as usize)
}

fn parse_floats<const N: usize>(fields: &[&str], path: &str, line: usize) -> Result<[f64; N], MeshError> {
    if fields.len() < N {
        return Err(parse_err(path, line, format!("expected {N} numbers")));
    }
    let mut out = [0.0f64; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.parse().map_err(|_| parse_err(path, line, format!("bad number '{f}'")))?;
        if !o.is_finite() {
            return Err(parse_err(path, line, format!("non-finite number '{f}'")));
        }
    }
    Ok(out)
}

/// Reads an OBJ mesh from any reader; `name` is used in error messages.
/// Polygons are fan-triangulated. A vertex takes the first texture
/// coordinate it is paired with.
pub fn read_obj(reader: impl BufRead, name: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut texcoords: Vec<Vec2> = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex_uv: Vec<Option<usize>> = Vec::new();
    let mut any_uv = false;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some((&kind, rest)) = fields.split_first() else { continue };
        match kind {
            "v" => {
                let [x, y, z] = parse_floats::<3>(rest, name, lineno)?;
                vertices.push(Vec3::new(x, y, z));
                vertex_uv.push(None);
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(rest, name, lineno)?;
                texcoords.push(Vec2::new(u, v));
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(name, lineno, "face needs at least 3 vertices"));
                }
                let mut face = Vec::with_capacity(rest.len());
                for corner in rest {
                    let mut parts = corner.split('/');
                    let vi = resolve(parts.next().unwrap_or(""), vertices.len(), name, lineno)?;
                    if vi >= vertices.len() {
                        return Err(parse_err(name, lineno, format!("vertex index {} out of range", vi + 1)));
                    }
                    if let Some(t) = parts.next().filter(|t| !t.is_empty()) {
                        let ti = resolve(t, texcoords.len(), name, lineno)?;
                        if ti >= texcoords.len() {
                            return Err(parse_err(name, lineno, format!("texture index {} out of range", ti + 1)));
                        }
                        vertex_uv[vi].get_or_insert(ti);
                        any_uv = true;
                    }
                    face.push(vi);
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    if any_uv {
        let uvs = vertex_uv.iter().map(|t| t.map_or(Vec2::zeros(), |t| texcoords[t])).collect();
        return mesh.with_uvs(uvs);
    }
    Ok(mesh)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    read_obj(BufReader::new(File::open(path)?), &path.display().to_string())
}

/// Writes vertices with shortest round-trip decimals. UVs, when present,
/// are written one per vertex with matching indices.
pub fn write_obj(mesh: &TriangleMesh, mut w: impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    if let Some(uvs) = mesh.uvs() {
        for t in uvs {
            writeln!(w, "vt {} {}", t.x, t.y)?;
        }
        for [a, b, c] in mesh.triangles() {
            writeln!(w, "f {0}/{0} {1}/{1} {2}/{2}", a + 1, b + 1, c + 1)?;
        }
    } else {
        for [a, b, c] in mesh.triangles() {
            writeln!(w, "f {} {} {}", a + 1, b + 1, c + 1)?;
        }
    }
    Ok(())
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_obj(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;

    fn parse(s: &str) -> Result<TriangleMesh, MeshError> {
        read_obj(s.as_bytes(), "test.obj")
    }

    #[test]
    fn cube_round_trip() {
        let cube = box_mesh(Vec3::repeat(-0.5), Vec3::repeat(0.5));
        let mut buf = Vec::new();
        write_obj(&cube, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn quads_are_fanned() {
        let m = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn slash_forms_and_uvs() {
        let m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0.1 0.2\nvt 0.3 0.4\nvt 0.5 0.6\nvn 0 0 1\nf 1/1/1 2/2/1 -1/3/1\n").unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
        assert_eq!(m.uvs().unwrap()[2], Vec2::new(0.5, 0.6));
        let n = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1//1 2//1 3//1\n").unwrap();
        assert!(n.uvs().is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n") {
            Err(MeshError::Parse { line: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"), Err(MeshError::Parse { line: 4, .. })));
        assert!(matches!(parse("v 0 zero 0\n"), Err(MeshError::Parse { line: 1, .. })));
    }
}

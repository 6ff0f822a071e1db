//! CSV and JSON file formats for meshes, densities, field samples and
//! tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::surface::{Density, Surface, SurfaceMesh};

/// Columns of a mesh file.
pub const MESH_COLUMNS: [&str; 9] = ["x", "y", "z", "w", "nx", "ny", "nz", "theta", "phi"];

/// JSON sidecar describing how a mesh file was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDescriptor {
    pub surface: Surface,
    pub nlat: usize,
    pub nlon: usize,
    pub nodes: usize,
    pub fingerprint: String,
}

impl MeshDescriptor {
    pub fn of(mesh: &SurfaceMesh) -> Self {
        let (nlat, nlon) = mesh.resolution();
        Self { surface: *mesh.surface(), nlat, nlon, nodes: mesh.len(), fingerprint: mesh.fingerprint() }
    }
}

/// Shortest decimal representation that reads back to the same double.
#[inline]
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Path of the JSON sidecar of a mesh file: `mesh.csv` → `mesh.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the mesh (and optionally named density columns) as CSV plus the
/// JSON sidecar.
pub fn write_mesh(path: &Path, mesh: &SurfaceMesh, columns: &[(&str, &Density)]) -> Result<()> {
    for (_, d) in columns {
        d.check_mesh(mesh)?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<&str> = MESH_COLUMNS.to_vec();
    header.extend(columns.iter().map(|(name, _)| *name));
    w.write_record(&header)?;
    for i in 0..mesh.len() {
        let p = mesh.nodes()[i];
        let n = mesh.normals()[i];
        let a = mesh.params()[i];
        let mut row = vec![p[0], p[1], p[2], mesh.weights()[i], n[0], n[1], n[2], a[0], a[1]];
        row.extend(columns.iter().map(|(_, d)| d.values()[i]));
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    write_json(&sidecar_path(path), &MeshDescriptor::of(mesh))
}

/// Reads a mesh written by [`write_mesh`], together with any extra columns
/// as `(name, values)` pairs.
pub fn read_mesh(path: &Path) -> Result<(SurfaceMesh, Vec<(String, Vec<f64>)>)> {
    let desc: MeshDescriptor = read_json(&sidecar_path(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < MESH_COLUMNS.len() || header[..MESH_COLUMNS.len()] != MESH_COLUMNS {
        return Err(Error::Format(format!("mesh header must start with {}", MESH_COLUMNS.join(","))));
    }
    let extra = header.len() - MESH_COLUMNS.len();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut normals = Vec::new();
    let mut params = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); extra];
    for record in r.records() {
        let record = record?;
        let v = record
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != header.len() {
            return Err(Error::Format(format!("row has {} fields, header has {}", v.len(), header.len())));
        }
        nodes.push([v[0], v[1], v[2]]);
        weights.push(v[3]);
        normals.push([v[4], v[5], v[6]]);
        params.push([v[7], v[8]]);
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(v[MESH_COLUMNS.len() + c]);
        }
    }
    if nodes.len() != desc.nodes {
        return Err(Error::SizeMismatch { expected: desc.nodes, got: nodes.len() });
    }
    let mesh = SurfaceMesh::from_parts(desc.surface, desc.nlat, desc.nlon, nodes, weights, normals, params)?;
    let names = header[MESH_COLUMNS.len()..].iter().cloned();
    Ok((mesh, names.zip(columns).collect()))
}

/// Reads one named density column of a mesh file onto `mesh`.
pub fn read_density_column(path: &Path, mesh: &SurfaceMesh, column: &str) -> Result<Density> {
    let (file_mesh, columns) = read_mesh(path)?;
    if file_mesh.len() != mesh.len() {
        return Err(Error::SizeMismatch { expected: mesh.len(), got: file_mesh.len() });
    }
    let (_, values) = columns
        .into_iter()
        .find(|(name, _)| name == column)
        .ok_or_else(|| Error::Format(format!("column {column:?} not found in {}", path.display())))?;
    Density::new(mesh, values)
}

/// Writes field samples as CSV `x,y,z,u,dist`.
pub fn write_field(path: &Path, samples: &[FieldSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["x", "y", "z", "u", "dist"])?;
    for s in samples {
        let p = s.point;
        w.write_record([p[0], p[1], p[2], s.value, s.dist].iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a numeric table as CSV preceded by one `# {json}` metadata line.
pub fn write_table<M: Serialize>(path: &Path, meta: &M, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# {}", serde_json::to_string(meta)?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::SizeMismatch { expected: header.len(), got: row.len() });
        }
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`]: metadata, header and rows.
pub fn read_table(path: &Path) -> Result<(serde_json::Value, Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("table must start with a '# {json}' line".into()))?;
    let meta: serde_json::Value = serde_json::from_str(meta.trim_end())?;
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let row = record?
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((meta, header, rows))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldQuadrature;

    #[test]
    fn mesh_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.csv");
        let mesh = SurfaceMesh::ellipsoid(1.0, 0.8, 1.3, 6, 12).unwrap();
        let phi = Density::from_fn(&mesh, |p, _| (3.0 * p[0]).sin() + p[2] / 7.0);
        write_mesh(&path, &mesh, &[("phi", &phi)]).unwrap();
        let (back, cols) = read_mesh(&path).unwrap();
        assert_eq!(back.nodes(), mesh.nodes());
        assert_eq!(back.weights(), mesh.weights());
        assert_eq!(back.normals(), mesh.normals());
        assert_eq!(back.params(), mesh.params());
        assert_eq!(back.fingerprint(), mesh.fingerprint());
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0].0, "phi");
        assert_eq!(cols[0].1, phi.values());
        let d = read_density_column(&path, &back, "phi").unwrap();
        assert_eq!(d.values(), phi.values());
        assert!(read_density_column(&path, &back, "g").is_err());
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![vec![0.0, 1.0 / 3.0], vec![1.0, -2.5e-300]];
        write_table(&path, &serde_json::json!({"alpha": 0.75}), &["l", "value"], &rows).unwrap();
        let (meta, header, back) = read_table(&path).unwrap();
        assert_eq!(meta["alpha"], 0.75);
        assert_eq!(header, ["l", "value"]);
        assert_eq!(back, rows);
        assert!(write_table(&path, &(), &["a"], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn field_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let s = FieldSample { point: [1.0, 2.0, 3.0], value: 0.5, dist: 0.25, quadrature: FieldQuadrature::Base };
        write_field(&path, &[s]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x,y,z,u,dist");
        assert_eq!(text.lines().count(), 2);
    }
}

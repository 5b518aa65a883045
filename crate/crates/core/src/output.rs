//! Serialization of diagnostics and nodal fields.

use std::io::{self, Write};

use crate::diagnostics::{w_field, z_field, DiagnosticsRecord, CSV_COLUMNS};
use crate::mesh::Mesh;
use crate::scheme::State;

pub fn write_diagnostics_header(out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))
}

pub fn write_diagnostics_row(out: &mut impl Write, rec: &DiagnosticsRecord) -> io::Result<()> {
    let row: Vec<String> = rec.csv_values().iter().map(|v| format!("{v:e}")).collect();
    writeln!(out, "{}", row.join(","))
}

/// `node_id,x,y,u,v,w,z`, one row per node.
pub fn write_fields_csv(out: &mut impl Write, mesh: &Mesh, state: &State, v_max: f64) -> io::Result<()> {
    let w = w_field(&state.v, v_max);
    let z = z_field(&state.u);
    writeln!(out, "node_id,x,y,u,v,w,z")?;
    for (i, p) in mesh.nodes().iter().enumerate() {
        writeln!(out, "{i},{:e},{:e},{:e},{:e},{:e},{:e}", p[0], p[1], state.u[i], state.v[i], w[i], z[i])?;
    }
    Ok(())
}

/// Legacy-format ASCII `UNSTRUCTURED_GRID` with point scalars `u`, `v`, `w`, `z`.
pub fn write_fields_vtk(out: &mut impl Write, mesh: &Mesh, state: &State, v_max: f64) -> io::Result<()> {
    let n = mesh.num_nodes();
    let m = mesh.num_triangles();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "chemotaxis fields t={:e}", state.t)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for p in mesh.nodes() {
        writeln!(out, "{:e} {:e} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {m} {}", 4 * m)?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {m}")?;
    for _ in 0..m {
        // VTK_TRIANGLE
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    let w = w_field(&state.v, v_max);
    let z = z_field(&state.u);
    for (name, data) in [("u", &state.u), ("v", &state.v), ("w", &w), ("z", &z)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for x in data.iter() {
            writeln!(out, "{x:e}")?;
        }
    }
    Ok(())
}

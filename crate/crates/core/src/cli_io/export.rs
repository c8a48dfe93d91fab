//! Wavefront OBJ and CSV export of surface samples.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sym::{Signature, SurfaceSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExportFormat {
    Obj,
    Csv,
}

/// Shortest round-tripping decimal, exponent form for extreme magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Serializes the valid nodes of a surface. OBJ faces are the quads whose four
/// corners are all valid; missing nodes get no vertex. Lorentzian samples
/// export the same coordinates, with the signature noted in the header only.
pub fn export_surface(surface: &SurfaceSample, format: ExportFormat) -> Result<Vec<u8>> {
    if surface.valid_count() == 0 {
        return Err(Error::NothingToExport);
    }
    let grid = &surface.grid;
    if grid.axes.len() != 2 {
        return Err(Error::InvalidParams(format!("surface export needs a 2-axis grid, got {} axes", grid.axes.len())));
    }
    let mut out = String::new();
    match format {
        ExportFormat::Csv => {
            out.push_str("x_param,y_param,X,Y,Z\n");
            for (i, p) in surface.points.iter().enumerate() {
                let Some(p) = p else { continue };
                let q = grid.point(i);
                writeln!(out, "{},{},{},{},{}", num(q[0]), num(q[1]), num(p[0]), num(p[1]), num(p[2])).unwrap();
            }
        }
        ExportFormat::Obj => {
            let signature = match surface.signature {
                Signature::Euclidean => "euclidean R^3",
                Signature::Lorentz1 => "Lorentzian R^{2,1}, coordinates written as if Euclidean",
            };
            let [re, im] = surface.eval_parameter;
            writeln!(out, "# lpfg surface").unwrap();
            writeln!(out, "# potential: {}", surface.potential_id).unwrap();
            writeln!(out, "# variant: {}", surface.variant.as_str()).unwrap();
            writeln!(out, "# parameter: {} {}", num(re), num(im)).unwrap();
            writeln!(out, "# signature: {signature}").unwrap();
            let shape = grid.shape();
            writeln!(out, "# grid: {} x {}", shape[0], shape[1]).unwrap();
            // 1-based OBJ vertex numbers of the valid nodes
            let mut vertex = vec![0usize; surface.points.len()];
            let mut next = 1;
            for (i, p) in surface.points.iter().enumerate() {
                if let Some(p) = p {
                    writeln!(out, "v {} {} {}", num(p[0]), num(p[1]), num(p[2])).unwrap();
                    vertex[i] = next;
                    next += 1;
                }
            }
            for i in 0..shape[0] - 1 {
                for j in 0..shape[1] - 1 {
                    let quad = [[i, j], [i + 1, j], [i + 1, j + 1], [i, j + 1]].map(|m| vertex[grid.flat_index(&m)]);
                    if quad.iter().all(|&v| v > 0) {
                        writeln!(out, "f {} {} {} {}", quad[0], quad[1], quad[2], quad[3]).unwrap();
                    }
                }
            }
        }
    }
    Ok(out.into_bytes())
}

//! Terrain file format: UTF-8 JSON tagged by `type`.
//!
//! ```json
//! {"type": "bumps", "bumps": [{"cx": 0, "cy": 0, "amplitude": 0.1, "sigma": 0.5}]}
//! {"type": "grid", "origin": [0, 0], "spacing": 0.5, "rows": 3, "cols": 3, "heights": [...]}
//! {"type": "plane", "gx": 0.17, "gy": 0, "z0": 0}
//! {"type": "cap", "center": [0, 0], "radius": 50}
//! ```
//!
//! Analytic surfaces accept an optional `"extent": [min_x, max_x, min_y, max_y]`
//! (default ±8 on both axes); a grid's extent is its node span.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WobbleError};

use super::{BicubicGrid, Bump, Extent, Surface, Terrain, DEFAULT_HALF_EXTENT};

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum TerrainFile {
    Bumps(BumpsBody),
    Grid(GridBody),
    Plane(PlaneBody),
    Cap(CapBody),
}

// Bodies are read straight from the text (the `type` key is ignored as an
// unknown field) so that errors keep their line and column.
#[derive(Debug, Serialize, Deserialize)]
struct BumpsBody {
    bumps: Vec<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extent: Option<[f64; 4]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridBody {
    origin: [f64; 2],
    spacing: f64,
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlaneBody {
    gx: f64,
    gy: f64,
    #[serde(default)]
    z0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extent: Option<[f64; 4]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CapBody {
    center: [f64; 2],
    radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extent: Option<[f64; 4]>,
}

#[derive(Deserialize)]
struct Tag {
    #[serde(rename = "type")]
    kind: String,
}

fn parse_err(e: serde_json::Error) -> WobbleError {
    WobbleError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn to_extent(e: Option<[f64; 4]>) -> Result<Extent> {
    match e {
        Some([a, b, c, d]) => Extent::new(a, b, c, d),
        None => Ok(Extent::square(DEFAULT_HALF_EXTENT)),
    }
}

fn from_extent(e: &Extent) -> [f64; 4] {
    [e.min_x, e.max_x, e.min_y, e.max_y]
}

pub fn parse_terrain(text: &str) -> Result<Terrain> {
    let tag: Tag = serde_json::from_str(text).map_err(parse_err)?;
    match tag.kind.as_str() {
        "bumps" => {
            let b: BumpsBody = serde_json::from_str(text).map_err(parse_err)?;
            Terrain::new(Surface::Bumps(b.bumps), to_extent(b.extent)?)
        }
        "grid" => {
            let g: GridBody = serde_json::from_str(text).map_err(parse_err)?;
            Terrain::grid(BicubicGrid::new(g.origin, g.spacing, g.rows, g.cols, g.heights)?)
        }
        "plane" => {
            let p: PlaneBody = serde_json::from_str(text).map_err(parse_err)?;
            Terrain::new(
                Surface::Plane {
                    gx: p.gx,
                    gy: p.gy,
                    z0: p.z0,
                },
                to_extent(p.extent)?,
            )
        }
        "cap" => {
            let c: CapBody = serde_json::from_str(text).map_err(parse_err)?;
            Terrain::new(
                Surface::Cap {
                    cx: c.center[0],
                    cy: c.center[1],
                    radius: c.radius,
                },
                to_extent(c.extent)?,
            )
        }
        other => Err(WobbleError::Parse {
            line: 0,
            column: 0,
            message: format!("unknown terrain type `{other}`, expected bumps, grid, plane or cap"),
        }),
    }
}

pub fn serialize_terrain(terrain: &Terrain) -> String {
    let extent = Some(from_extent(terrain.extent()));
    let file = match terrain.surface() {
        Surface::Bumps(b) => TerrainFile::Bumps(BumpsBody {
            bumps: b.clone(),
            extent,
        }),
        Surface::Grid(g) => TerrainFile::Grid(GridBody {
            origin: g.origin(),
            spacing: g.spacing(),
            rows: g.rows(),
            cols: g.cols(),
            heights: g.heights().to_vec(),
        }),
        Surface::Plane { gx, gy, z0 } => TerrainFile::Plane(PlaneBody {
            gx: *gx,
            gy: *gy,
            z0: *z0,
            extent,
        }),
        Surface::Cap { cx, cy, radius } => TerrainFile::Cap(CapBody {
            center: [*cx, *cy],
            radius: *radius,
            extent,
        }),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("terrain serializes");
    s.push('\n');
    s
}

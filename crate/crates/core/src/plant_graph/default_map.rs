//! Bundled synthetic smelter map.
//!
//! Layout (not to scale):
//!
//! ```text
//!   west ring                                                  east ring
//!   +------ north service road ------------------------------------+
//!   |   |        |        |        |        |        |        |    |
//!   +-- potline A: 40 pot cells, cross aisle every 5 cells --------+---- cast house A
//!   |   |        |        |        |        |        |        |    |
//! AlF3--+------ central road (charging stations, depot) -----------+
//!   |   |        |        |        |        |        |        |    |
//!   +-- potline B: 40 pot cells ------------------------------------+---- cast house B
//!   |   |        |        |        |        |        |        |    |
//! waste-+------ south service road ---------------------------------+
//! ```

use super::map::{MapEdge, MapFile, MapNode};
use super::{DecayParams, NodeKind, PlantGraph};

const BUNDLED: &str = include_str!("../../maps/default_plant.json");

/// JSON text of the bundled default map.
pub fn default_map_json() -> &'static str {
    BUNDLED
}

/// The bundled default map as a routable graph.
pub fn default_map(decay: DecayParams) -> PlantGraph {
    PlantGraph::from_json(BUNDLED, decay).expect("bundled map is valid")
}

/// Knobs of the synthetic layout. Potlines alternate with plain roads,
/// starting and ending with a road; the charging stations and the depot sit
/// on the middle road.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub potlines: usize,
    pub cells_per_line: usize,
    pub cell_spacing_m: f64,
    /// A cross aisle every this many cells.
    pub aisle_every: usize,
    /// Distance between a potline and the roads beside it.
    pub row_gap_m: f64,
    pub road_speed_mps: f64,
    pub potline_speed_mps: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            potlines: 4,
            cells_per_line: 60,
            cell_spacing_m: 25.0,
            aisle_every: 5,
            row_gap_m: 85.0,
            road_speed_mps: 30.0 / 3.6,
            potline_speed_mps: 15.0 / 3.6,
        }
    }
}

const LINE_START_X: f64 = 100.0;
const RING_MARGIN_M: f64 = 125.0;
const SPUR_M: f64 = 40.0;
const OUTSIDE_M: f64 = 150.0;

struct Builder {
    map: MapFile,
}

impl Builder {
    fn node(&mut self, kind: NodeKind, x: f64, y: f64) -> u32 {
        let id = self.map.nodes.len() as u32;
        self.map.nodes.push(MapNode { id, kind, x, y });
        id
    }

    fn street(&mut self, a: u32, b: u32, speed: f64) {
        let (pa, pb) = (&self.map.nodes[a as usize], &self.map.nodes[b as usize]);
        let length = ((pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2)).sqrt();
        let length = (length * 100.0).round() / 100.0;
        for (from, to) in [(a, b), (b, a)] {
            let id = self.map.edges.len() as u32;
            self.map.edges.push(MapEdge {
                id,
                from,
                to,
                length_m: length,
                speed_limit_mps: speed,
            });
        }
    }
}

impl Layout {
    pub fn build(&self) -> MapFile {
        assert!(self.potlines >= 1 && self.cells_per_line >= 2 && self.aisle_every >= 1);
        let mut b = Builder {
            map: MapFile::default(),
        };
        let n = self.cells_per_line;
        let cell_x = |i: usize| LINE_START_X + i as f64 * self.cell_spacing_m;
        let east_x = cell_x(n - 1) + RING_MARGIN_M;
        // columns joining the rows: every aisle_every-th cell and the last one
        let aisle_cells: Vec<usize> = (0..n)
            .filter(|i| i % self.aisle_every == 0 || *i == n - 1)
            .collect();
        let rows = 2 * self.potlines + 1;
        let middle = if self.potlines % 2 == 0 {
            self.potlines
        } else {
            self.potlines - 1
        };

        // column_nodes[r] = node ids on row r at the column positions, west ring first
        let mut column_nodes: Vec<Vec<u32>> = Vec::new();
        for r in 0..rows {
            let y = r as f64 * self.row_gap_m;
            let potline = r % 2 == 1;
            let mut row = vec![b.node(NodeKind::Junction, 0.0, y)];
            let mut columns = vec![row[0]];
            for i in 0..n {
                if potline {
                    let id = b.node(NodeKind::PotCell, cell_x(i), y);
                    row.push(id);
                    if aisle_cells.contains(&i) {
                        columns.push(id);
                    }
                } else if aisle_cells.contains(&i) {
                    let id = b.node(NodeKind::Junction, cell_x(i), y);
                    row.push(id);
                    columns.push(id);
                }
            }
            let east = b.node(NodeKind::Junction, east_x, y);
            row.push(east);
            columns.push(east);
            let speed = if potline {
                self.potline_speed_mps
            } else {
                self.road_speed_mps
            };
            for w in row.windows(2) {
                b.street(w[0], w[1], speed);
            }
            column_nodes.push(columns);
        }
        for pair in column_nodes.windows(2) {
            for (&a, &c) in pair[0].iter().zip(&pair[1]) {
                b.street(a, c, self.road_speed_mps);
            }
        }

        let at_column = |row: usize, x: f64, b: &Builder| {
            *column_nodes[row]
                .iter()
                .find(|&&id| (b.map.nodes[id as usize].x - x).abs() < 1e-9)
                .expect("column exists")
        };
        // stations and depot near the middle of the central road, on aisle columns
        let mid = aisle_cells.len() / 2;
        let col = |k: usize| cell_x(aisle_cells[k.min(aisle_cells.len() - 1)]);
        let ym = middle as f64 * self.row_gap_m;
        let last_row = rows - 1;
        let first_line = 1;
        let last_line = rows - 2;
        let spurs = [
            (NodeKind::ChargingStation, col(mid.saturating_sub(1)), ym + SPUR_M, middle, col(mid.saturating_sub(1))),
            (NodeKind::ChargingStation, col(mid + 1), ym - SPUR_M, middle, col(mid + 1)),
            (NodeKind::Depot, col(mid), ym + SPUR_M, middle, col(mid)),
            (NodeKind::CastHouse, east_x + OUTSIDE_M, first_line as f64 * self.row_gap_m, first_line, east_x),
            (NodeKind::CastHouse, east_x + OUTSIDE_M, last_line as f64 * self.row_gap_m, last_line, east_x),
            (NodeKind::AlF3Storage, -OUTSIDE_M, ym, middle, 0.0),
            (NodeKind::WasteArea, -OUTSIDE_M, last_row as f64 * self.row_gap_m, last_row, 0.0),
        ];
        for (kind, x, y, row, join_x) in spurs {
            let id = b.node(kind, x, y);
            let join = at_column(row, join_x, &b);
            b.street(join, id, self.road_speed_mps);
        }
        b.map
    }
}

/// Regenerates the synthetic layout shipped as the default map.
pub fn synthetic_layout() -> MapFile {
    Layout::default().build()
}

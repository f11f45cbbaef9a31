//! Structured triangulations of the footing domain `(-4, 4)²`.
//!
//! Each of the `n × n` squares is split along its lower-left to upper-right
//! diagonal. Edges are globally oriented from the lower to the higher vertex
//! index; each cell records, per local edge, the global edge index and the
//! sign relating its counter-clockwise traversal to the global orientation.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{BiotError, Result};

/// Half-width of the square domain.
pub const DOMAIN_HALF_WIDTH: f64 = 4.0;
/// Half-width of the loaded strip `Γ₁` on the top side.
pub const LOAD_HALF_WIDTH: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Loaded part of the top side, `|x| < 0.8`.
    Gamma1,
    /// Traction-free, drained part of the top side.
    Gamma2,
    /// Left, right and bottom sides: `u = 0`, `v·n = 0`.
    Clamped,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 3] = [BoundaryTag::Gamma1, BoundaryTag::Gamma2, BoundaryTag::Clamped];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Gamma1 => "GAMMA1",
            BoundaryTag::Gamma2 => "GAMMA2",
            BoundaryTag::Clamped => "CLAMPED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Per cell, for local edge `i` (opposite local vertex `i`): (global edge, sign).
    cell_edges: Vec<[(usize, i8); 3]>,
    facet_tags: HashMap<usize, BoundaryTag>,
    /// Cells incident to each edge; the second entry is `None` on the boundary.
    edge_cells: Vec<[Option<usize>; 2]>,
}

/// Builds the `n × n` structured triangulation of the footing domain.
///
/// `n` must be even and at least 2.
pub fn build_structured_mesh(n: usize) -> Result<Mesh> {
    if n < 2 || n % 2 != 0 {
        return Err(BiotError::InvalidParameter(format!("mesh subdivision must be an even integer >= 2, got {n}")));
    }
    let h = 2.0 * DOMAIN_HALF_WIDTH / n as f64;
    let stride = n + 1;
    let mut vertices = Vec::with_capacity(stride * stride);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([-DOMAIN_HALF_WIDTH + h * i as f64, -DOMAIN_HALF_WIDTH + h * j as f64]);
        }
    }
    // Pin the top/right coordinates so boundary tests can compare exactly.
    for v in vertices.iter_mut() {
        for c in v.iter_mut() {
            if (*c - DOMAIN_HALF_WIDTH).abs() < 1e-12 {
                *c = DOMAIN_HALF_WIDTH;
            }
        }
    }

    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * stride + i;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }

    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * n * n + 2 * n);
    let mut edges = Vec::with_capacity(3 * n * n + 2 * n);
    let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::with_capacity(3 * n * n + 2 * n);
    let mut cell_edges = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let mut local = [(0usize, 0i8); 3];
        for (i, slot) in local.iter_mut().enumerate() {
            let a = cell[(i + 1) % 3];
            let b = cell[(i + 2) % 3];
            let key = (a.min(b), a.max(b));
            let e = *edge_index.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edge_cells.push([None, None]);
                edges.len() - 1
            });
            if edge_cells[e][0].is_none() {
                edge_cells[e][0] = Some(c);
            } else {
                edge_cells[e][1] = Some(c);
            }
            *slot = (e, if a < b { 1 } else { -1 });
        }
        cell_edges.push(local);
    }

    let mut facet_tags = HashMap::new();
    for (e, inc) in edge_cells.iter().enumerate() {
        if inc[1].is_some() {
            continue;
        }
        let [a, b] = edges[e];
        let (pa, pb) = (vertices[a], vertices[b]);
        let on_top = pa[1] == DOMAIN_HALF_WIDTH && pb[1] == DOMAIN_HALF_WIDTH;
        let tag = if on_top {
            let mid_x = 0.5 * (pa[0] + pb[0]);
            if mid_x.abs() < LOAD_HALF_WIDTH {
                BoundaryTag::Gamma1
            } else {
                BoundaryTag::Gamma2
            }
        } else {
            BoundaryTag::Clamped
        };
        facet_tags.insert(e, tag);
    }

    Ok(Mesh { n, vertices, cells, edges, cell_edges, facet_tags, edge_cells })
}

impl Mesh {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Physical side length of one grid square.
    pub fn h(&self) -> f64 {
        2.0 * DOMAIN_HALF_WIDTH / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self) -> &[[(usize, i8); 3]] {
        &self.cell_edges
    }

    pub fn edge_cells(&self) -> &[[Option<usize>; 2]] {
        &self.edge_cells
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn facet_tag(&self, edge: usize) -> Option<BoundaryTag> {
        self.facet_tags.get(&edge).copied()
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.facet_tags.contains_key(&edge)
    }

    pub fn cell_coords(&self, cell: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.cells[cell];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area (positive for counter-clockwise cells).
    pub fn cell_area(&self, cell: usize) -> f64 {
        let [p0, p1, p2] = self.cell_coords(cell);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    pub fn edge_midpoint(&self, edge: usize) -> [f64; 2] {
        let [a, b] = self.edges[edge];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Boundary edges carrying `tag`, each with its outward unit normal.
    pub fn boundary_facets(&self, tag: BoundaryTag) -> Vec<(usize, [f64; 2])> {
        let mut out: Vec<(usize, [f64; 2])> =
            self.facet_tags.iter().filter(|(_, t)| **t == tag).map(|(&e, _)| (e, self.outward_normal(e))).collect();
        out.sort_by_key(|(e, _)| *e);
        out
    }

    /// Outward unit normal of a boundary edge, from the orientation of its cell.
    fn outward_normal(&self, edge: usize) -> [f64; 2] {
        let cell = self.edge_cells[edge][0].expect("every edge has a cell");
        let verts = self.cells[cell];
        let local = self.cell_edges[cell].iter().position(|(e, _)| *e == edge).expect("edge belongs to its cell");
        let a = self.vertices[verts[(local + 1) % 3]];
        let b = self.vertices[verts[(local + 2) % 3]];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    }

    /// Plain-text dump: vertex list, cell list and boundary tag list.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        let _ = writeln!(s, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
        let mut tagged: Vec<_> = self.facet_tags.iter().collect();
        tagged.sort_by_key(|(e, _)| **e);
        let _ = writeln!(s, "tags {}", tagged.len());
        for (e, t) in tagged {
            let [a, b] = self.edges[*e];
            let _ = writeln!(s, "{a} {b} {}", t.name());
        }
        s
    }
}

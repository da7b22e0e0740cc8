use std::fmt::Write as _;

use serde::Serialize;

use super::{cone_map, LinRow, Network, RowKind, TepModel, VariableSpace};
use crate::linalg::CsrMatrix;
use crate::netcase::UncertaintyBox;

pub const H_DIAG: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Block {
    /// Binary-only rows `A y_m <= h`.
    A,
    /// Mixed rows `T y_m + G y_s <= r`.
    Tg,
    /// Equalities `B_e y_s + J_e ξ = t_e`.
    Be,
    /// Inequalities `B_ie y_s + J_ie ξ <= t_ie`.
    Bie,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowInfo {
    pub kind: RowKind,
    pub name: String,
    pub dual: String,
}

/// Block-matrix form of the robust model with named rows.
#[derive(Debug, Clone)]
pub struct CompactRobustModel {
    pub net: Network,
    pub space: VariableSpace,
    pub xi_box: UncertaintyBox,
    pub f_m: Vec<f64>,
    pub f_s: Vec<f64>,
    pub f_c: f64,
    pub a: CsrMatrix<f64>,
    pub h: Vec<f64>,
    pub t: CsrMatrix<f64>,
    pub g: CsrMatrix<f64>,
    pub r: Vec<f64>,
    pub b_e: CsrMatrix<f64>,
    pub j_e: CsrMatrix<f64>,
    pub t_e: Vec<f64>,
    pub b_ie: CsrMatrix<f64>,
    pub j_ie: CsrMatrix<f64>,
    pub t_ie: Vec<f64>,
    /// `y_cone + U y_s = 0`, four rows per corridor.
    pub u: CsrMatrix<f64>,
    pub h_diag: [f64; 4],
    pub rows_a: Vec<RowInfo>,
    pub rows_tg: Vec<RowInfo>,
    pub rows_be: Vec<RowInfo>,
    pub rows_bie: Vec<RowInfo>,
    /// Range of D4 per corridor implied by the voltage bounds.
    pub d4_bounds: Vec<(f64, f64)>,
}

fn block_of(r: &LinRow) -> Block {
    match (r.ys.is_empty(), r.ym.is_empty(), r.eq) {
        (true, _, _) => Block::A,
        (false, false, _) => Block::Tg,
        (false, true, true) => Block::Be,
        (false, true, false) => Block::Bie,
    }
}

struct Part {
    ys: Vec<(usize, usize, f64)>,
    ym: Vec<(usize, usize, f64)>,
    xi: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    info: Vec<RowInfo>,
}

impl Part {
    fn new() -> Self {
        Self { ys: vec![], ym: vec![], xi: vec![], rhs: vec![], info: vec![] }
    }
    fn add(&mut self, r: &LinRow) {
        let k = self.rhs.len();
        self.ys.extend(r.ys.iter().map(|&(j, a)| (k, j, a)));
        self.ym.extend(r.ym.iter().map(|&(j, a)| (k, j, a)));
        self.xi.extend(r.xi.iter().map(|&(j, a)| (k, j, a)));
        self.rhs.push(r.rhs);
        self.info.push(RowInfo { kind: r.kind, name: r.name.clone(), dual: r.dual.clone() });
    }
}

pub fn assemble_compact(m: &TepModel) -> CompactRobustModel {
    let (ns, nm, nx) = (m.space.n_s(), m.space.n_m(), m.net.n_xi());
    let mut parts = [Part::new(), Part::new(), Part::new(), Part::new()];
    for r in &m.rows {
        let b = block_of(r);
        assert!(b != Block::A || (r.xi.is_empty() && !r.eq), "row {} has no continuous part", r.name);
        assert!(b != Block::Tg || (r.xi.is_empty() && !r.eq), "row {} mixes binaries with uncertainty", r.name);
        parts[b as usize].add(r);
    }
    let [pa, ptg, pbe, pbie] = parts;
    let mut ut = Vec::new();
    for c in 0..m.net.corridors.len() {
        for (k, terms) in cone_map(&m.space, &m.net, c).into_iter().enumerate() {
            ut.extend(terms.into_iter().map(|(j, a)| (4 * c + k, j, -a)));
        }
    }
    let d4_bounds = m
        .net
        .corridors
        .iter()
        .map(|c| {
            let (bi, bj) = (&m.net.buses[c.i], &m.net.buses[c.j]);
            (bi.v_min.powi(2) + bj.v_min.powi(2), bi.v_max.powi(2) + bj.v_max.powi(2))
        })
        .collect();
    let csr = |rows: usize, cols: usize, t: &[(usize, usize, f64)]| CsrMatrix::from_triplets(rows, cols, t);
    CompactRobustModel {
        a: csr(pa.rhs.len(), nm, &pa.ym),
        h: pa.rhs,
        rows_a: pa.info,
        t: csr(ptg.rhs.len(), nm, &ptg.ym),
        g: csr(ptg.rhs.len(), ns, &ptg.ys),
        r: ptg.rhs,
        rows_tg: ptg.info,
        b_e: csr(pbe.rhs.len(), ns, &pbe.ys),
        j_e: csr(pbe.rhs.len(), nx, &pbe.xi),
        t_e: pbe.rhs,
        rows_be: pbe.info,
        b_ie: csr(pbie.rhs.len(), ns, &pbie.ys),
        j_ie: csr(pbie.rhs.len(), nx, &pbie.xi),
        t_ie: pbie.rhs,
        rows_bie: pbie.info,
        u: csr(m.space.n_cone(), ns, &ut),
        h_diag: H_DIAG,
        d4_bounds,
        net: m.net.clone(),
        space: m.space.clone(),
        xi_box: m.xi_box.clone(),
        f_m: m.f_m.clone(),
        f_s: m.f_s.clone(),
        f_c: m.f_c,
    }
}

impl CompactRobustModel {
    pub fn n_s(&self) -> usize {
        self.space.n_s()
    }

    pub fn n_m(&self) -> usize {
        self.space.n_m()
    }

    pub fn n_xi(&self) -> usize {
        self.xi_box.len()
    }

    pub fn n_corridors(&self) -> usize {
        self.net.corridors.len()
    }

    /// y_cone implied by y_s.
    pub fn cone_of(&self, y_s: &[f64]) -> Vec<f64> {
        self.u.mul_vec(y_s).into_iter().map(|v| -v).collect()
    }

    /// `y^T H y` for corridor `c`.
    pub fn cone_value(&self, y_cone: &[f64], c: usize) -> f64 {
        (0..4).map(|k| self.h_diag[k] * y_cone[4 * c + k].powi(2)).sum()
    }

    /// Row residuals (left minus right) of each block, in block order.
    pub fn residuals(&self, y_m: &[f64], y_s: &[f64], xi: &[f64]) -> Vec<(Block, usize, f64)> {
        let mut out = Vec::new();
        let ah = self.a.mul_vec(y_m);
        out.extend(ah.iter().zip(&self.h).enumerate().map(|(k, (v, h))| (Block::A, k, v - h)));
        let ty = self.t.mul_vec(y_m);
        let gy = self.g.mul_vec(y_s);
        out.extend((0..self.r.len()).map(|k| (Block::Tg, k, ty[k] + gy[k] - self.r[k])));
        let by = self.b_e.mul_vec(y_s);
        let jx = self.j_e.mul_vec(xi);
        out.extend((0..self.t_e.len()).map(|k| (Block::Be, k, by[k] + jx[k] - self.t_e[k])));
        let by = self.b_ie.mul_vec(y_s);
        let jx = self.j_ie.mul_vec(xi);
        out.extend((0..self.t_ie.len()).map(|k| (Block::Bie, k, by[k] + jx[k] - self.t_ie[k])));
        out
    }

    pub fn row_info(&self, block: Block, k: usize) -> &RowInfo {
        match block {
            Block::A => &self.rows_a[k],
            Block::Tg => &self.rows_tg[k],
            Block::Be => &self.rows_be[k],
            Block::Bie => &self.rows_bie[k],
        }
    }

    /// Dual label to (block, row) for every row.
    pub fn dual_map(&self) -> Vec<(String, Block, usize)> {
        let mut out = Vec::new();
        for (b, rows) in [(Block::A, &self.rows_a), (Block::Tg, &self.rows_tg), (Block::Be, &self.rows_be), (Block::Bie, &self.rows_bie)] {
            out.extend(rows.iter().enumerate().map(|(k, r)| (r.dual.clone(), b, k)));
        }
        out
    }

    /// For each row of a block, the index of its opposite side (`.up` next to `.lo`).
    pub fn partners(&self, block: Block) -> Vec<Option<usize>> {
        let rows = match block {
            Block::A => &self.rows_a,
            Block::Tg => &self.rows_tg,
            Block::Be => &self.rows_be,
            Block::Bie => &self.rows_bie,
        };
        let mut out = vec![None; rows.len()];
        for k in 1..rows.len() {
            if let (Some(a), Some(b)) = (rows[k - 1].name.strip_suffix(".up"), rows[k].name.strip_suffix(".lo")) {
                if a == b {
                    out[k - 1] = Some(k);
                    out[k] = Some(k - 1);
                }
            }
        }
        out
    }

    /// Whether ξ_k enters any row.
    pub fn xi_enters(&self) -> Vec<bool> {
        let mut used = vec![false; self.n_xi()];
        for (_, j, a) in self.j_e.triplets().into_iter().chain(self.j_ie.triplets()) {
            if a != 0.0 {
                used[j] = true;
            }
        }
        used
    }

    /// Plain-text dump of every block and index map.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# compact robust model: {}", self.net.system.name);
        let _ = writeln!(s, "n_s {} n_m {} n_xi {} n_cone {}", self.n_s(), self.n_m(), self.n_xi(), self.space.n_cone());
        let _ = writeln!(s, "F_c {:e}", self.f_c);
        section(&mut s, "y_s", &self.space.names);
        section(&mut s, "y_m", &self.space.line_names);
        section(&mut s, "y_cone", &self.space.cone_names);
        vector(&mut s, "F_s", &self.f_s);
        vector(&mut s, "F_m", &self.f_m);
        let named = |s: &mut String, tag: &str, info: &[RowInfo], rhs: &[f64]| {
            let _ = writeln!(s, "[rows {tag}]");
            for (k, (r, v)) in info.iter().zip(rhs).enumerate() {
                let _ = writeln!(s, "{k} {} {} {:?} rhs={v:e}", r.name, r.dual, r.kind);
            }
        };
        named(&mut s, "A", &self.rows_a, &self.h);
        named(&mut s, "TG", &self.rows_tg, &self.r);
        named(&mut s, "Be", &self.rows_be, &self.t_e);
        named(&mut s, "Bie", &self.rows_bie, &self.t_ie);
        for (tag, m) in [("A", &self.a), ("T", &self.t), ("G", &self.g), ("B_e", &self.b_e), ("J_e", &self.j_e), ("B_ie", &self.b_ie), ("J_ie", &self.j_ie), ("U", &self.u)] {
            let _ = writeln!(s, "[matrix {tag} {}x{} nnz {}]", m.nrows(), m.ncols(), m.nnz());
            for (i, j, v) in m.triplets() {
                let _ = writeln!(s, "{i} {j} {v:e}");
            }
        }
        let _ = writeln!(s, "[H] {:?}", self.h_diag);
        s
    }
}

fn section(s: &mut String, tag: &str, names: &[String]) {
    let _ = writeln!(s, "[{tag}]");
    for (k, n) in names.iter().enumerate() {
        let _ = writeln!(s, "{k} {n}");
    }
}

fn vector(s: &mut String, tag: &str, v: &[f64]) {
    let _ = writeln!(s, "[{tag}]");
    for (k, x) in v.iter().enumerate() {
        if *x != 0.0 {
            let _ = writeln!(s, "{k} {x:e}");
        }
    }
}

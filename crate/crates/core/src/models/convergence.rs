//! Error norms and observed convergence rates.

use crate::error::{Error, Result};

/// `sqrt(sum w (u - r)^2) / (scale * sqrt(sum w))`.
pub fn normalized_l2(u: &[f64], reference: &[f64], weights: &[f64], scale: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((a, b), w) in u.iter().zip(reference).zip(weights) {
        num += w * (a - b) * (a - b);
        den += w;
    }
    if den == 0.0 {
        return 0.0;
    }
    (num / den).sqrt() / scale
}

/// Relative L2 difference `||u - r|| / ||r||` with weights.
pub fn relative_l2(u: &[f64], reference: &[f64], weights: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((a, b), w) in u.iter().zip(reference).zip(weights) {
        num += w * (a - b) * (a - b);
        den += w * b * b;
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Least-squares slope of `log err` against `log h`. `None` when any error
/// is zero (the rate is undefined).
pub fn observed_rate(h: &[f64], err: &[f64]) -> Result<Option<f64>> {
    if h.len() != err.len() {
        return Err(Error::Config("mesh sizes and errors differ in length".into()));
    }
    if h.len() < 2 {
        return Err(Error::Config(format!("a convergence study needs at least 2 meshes, got {}", h.len())));
    }
    if h.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Config("mesh sizes must be positive".into()));
    }
    if err.contains(&0.0) {
        return Ok(None);
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("all meshes have the same size".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(Some(sxy / sxx))
}

/// One row of an error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub label: String,
    pub h: f64,
    pub cells: usize,
    pub errors: Vec<f64>,
}

/// Errors of several quantities over a mesh sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub quantities: Vec<String>,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn new(quantities: &[&str]) -> Self {
        ErrorTable { quantities: quantities.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Observed rate of quantity `q` over rows with the given label.
    pub fn rate(&self, label: &str, q: usize) -> Result<Option<f64>> {
        let rows: Vec<&ErrorRow> = self.rows.iter().filter(|r| r.label == label).collect();
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.errors[q]).collect();
        observed_rate(&h, &e)
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("label,h,cells,{}\n", self.quantities.join(","));
        for r in &self.rows {
            let e: Vec<String> = r.errors.iter().map(|v| format!("{v:.10e}")).collect();
            s += &format!("{},{:.6e},{},{}\n", r.label, r.h, r.cells, e.join(","));
        }
        s
    }

    /// Rates per label and quantity; undefined rates are written as `nan`.
    pub fn rates_csv(&self) -> Result<String> {
        let mut s = format!("label,{}\n", self.quantities.join(","));
        for l in self.labels() {
            let mut cols = Vec::new();
            for q in 0..self.quantities.len() {
                cols.push(match self.rate(&l, q)? {
                    Some(r) => format!("{r:.6}"),
                    None => "nan".into(),
                });
            }
            s += &format!("{l},{}\n", cols.join(","));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::params::isotropic;
    use crate::discretize::tpfa::tpfa_tensor;
    use crate::discretize::{BcKind, BoundaryCondition};
    use crate::sparse::{matvec, mul};
    use std::f64::consts::PI;

    #[test]
    fn rate_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((observed_rate(&h, &e).unwrap().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_mesh_is_an_error() {
        assert!(observed_rate(&[0.1], &[0.2]).is_err());
    }

    #[test]
    fn identical_solutions_give_undefined_rate() {
        let u = [1.0, 2.0];
        let e = normalized_l2(&u, &u, &[1.0, 1.0], 1.0);
        assert_eq!(observed_rate(&[0.1, 0.05], &[e, e]).unwrap(), None);
    }

    /// TPFA on equilateral grids for -lap p = f with p = sin(pi x) sin(pi y).
    #[test]
    fn manufactured_solution_converges_at_least_linearly() {
        let exact = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let (mut hs, mut errs) = (Vec::new(), Vec::new());
        for n in [6, 12, 24] {
            let h = 1.0 / n as f64;
            let g = crate::mesh::structured::equilateral(n, n, h);
            let bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
            let d = tpfa_tensor(&g, &vec![isotropic(1.0); g.num_cells()], &bc).unwrap();
            let div = g.divergence();
            let a = mul(&div, &d.flux);
            let gb: Vec<f64> = (0..g.num_faces()).map(|f| if g.is_boundary_face(f) { exact(g.face_centers[f]) } else { 0.0 }).collect();
            let bterm = matvec(&mul(&div, &d.bound_flux), &gb);
            let rhs: Vec<f64> =
                (0..g.num_cells()).map(|c| 2.0 * PI * PI * exact(g.cell_centers[c]) * g.cell_volumes[c] - bterm[c]).collect();
            let p = crate::assembly::linsolve::linear_solve(&a, &rhs).unwrap();
            let pe: Vec<f64> = g.cell_centers.iter().map(|x| exact(*x)).collect();
            hs.push(h);
            errs.push(normalized_l2(&p, &pe, &g.cell_volumes, 1.0));
        }
        let r = observed_rate(&hs, &errs).unwrap().unwrap();
        assert!(r >= 1.0, "rate {r}");
    }

    #[test]
    fn table_csv_layout() {
        let mut t = ErrorTable::new(&["matrix", "fracture"]);
        for (h, e) in [(0.1, 0.2), (0.05, 0.1)] {
            t.rows.push(ErrorRow { label: "tpfa".into(), h, cells: 10, errors: vec![e, e] });
        }
        assert!(t.to_csv().starts_with("label,h,cells,matrix,fracture\n"));
        assert!(t.rates_csv().unwrap().contains("tpfa,1.000000,1.000000"));
    }
}

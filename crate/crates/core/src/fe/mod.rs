//! Finite element discretization: quadrature, shape functions, dof numbering, assembly.

pub mod assembly;
pub mod basis;
pub mod dofmap;
pub mod element;
pub mod quadrature;

pub use assembly::Assembler;
pub use dofmap::DofMap;
pub use element::{ElementTables, ElementValues};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{backward_facing_step_2d, unit_cube, unit_square, BoundaryTag, CellType};
    use quadrature::triangle_collapsed;

    #[test]
    fn reference_triangle_laplacian_entry() {
        let m = unit_square(1, CellType::Triangle, 1).unwrap();
        let d = DofMap::new(&m);
        let a = Assembler::new(&m, &d).scalar_laplacian();
        // Node 0 = (0,0) belongs to both triangles; each contributes 1/2.
        assert!((a.get(0, 0) - 1.0).abs() < 1e-14);
        // Node 1 = (1,0) lies only in the first triangle, where it is the right-angle-adjacent vertex.
        assert!((a.get(1, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_fields_are_in_kernels() {
        for (mesh, dim) in [
            (unit_square(3, CellType::Triangle, 2).unwrap(), 2),
            (unit_square(2, CellType::Quadrilateral, 2).unwrap(), 2),
            (unit_cube(2, 1).unwrap(), 3),
        ] {
            let d = DofMap::new(&mesh);
            let asm = Assembler::new(&mesh, &d);
            let u: Vec<f64> = (0..d.n_velocity()).map(|i| [1.0, -2.0, 0.5][i % dim]).collect();
            let bu = asm.divergence().mul(&u);
            assert!(bu.iter().all(|v| v.abs() < 1e-13));
            let ones = vec![1.0; d.n_pressure()];
            assert!(asm.pressure_laplacian().mul(&ones).iter().all(|v| v.abs() < 1e-13));
            assert!(asm.stabilization(0.1).mul(&ones).iter().all(|v| v.abs() < 1e-12));
            let total: f64 = asm.pressure_integrals().iter().sum();
            assert!((total - 1.0).abs() < 1e-13);
            let mass_total: f64 = asm.velocity_mass().values().iter().sum();
            assert!((mass_total - dim as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn stabilization_matches_exact_single_triangle() {
        let m = unit_square(1, CellType::Triangle, 1).unwrap();
        let d = DofMap::new(&m);
        let nu = 0.25;
        let c = Assembler::new(&m, &d).stabilization(nu);
        // Node 1 = (1,0) lies only in the triangle (0,0),(1,0),(1,1) of area 1/2:
        // integral of (lambda - 1/3)^2 = |T|/6 - |T|/9 = |T|/18.
        assert!((c.get(1, 1) - 0.5 / 18.0 / nu).abs() < 1e-14);
    }

    #[test]
    fn convection_matches_high_order_quadrature() {
        let m = unit_square(3, CellType::Triangle, 2).unwrap();
        let d = DofMap::new(&m);
        let w: Vec<f64> = (0..d.n_velocity()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let a = Assembler::new(&m, &d);
        let mut b = Assembler::new(&m, &d);
        b.tables = ElementTables::with_rule(&m, triangle_collapsed(8));
        for (x, y) in [(a.convection(&w), b.convection(&w)), (a.newton(&w), b.newton(&w))] {
            assert!(x.same_pattern(&y));
            for (p, q) in x.values().iter().zip(y.values()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn robin_mass_on_inlet_edge() {
        let m = backward_facing_step_2d(1, CellType::Triangle, 1).unwrap();
        let d = DofMap::new(&m);
        let w: Vec<f64> = (0..d.n_velocity()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let r = Assembler::new(&m, &d).robin_boundary_mass(&w, BoundaryTag::Inflow);
        let find = |x: f64, y: f64| {
            let n = m.coords.iter().position(|c| (c[0] - x).abs() < 1e-12 && (c[1] - y).abs() < 1e-12).unwrap();
            d.pressure_index[n].unwrap()
        };
        let (p0, p1) = (find(0.0, 0.0), find(0.0, 1.0));
        assert!((r.get(p0, p0) + 1.0 / 3.0).abs() < 1e-14);
        assert!((r.get(p0, p1) + 1.0 / 6.0).abs() < 1e-14);
        assert!((r.get(p1, p1) + 1.0 / 3.0).abs() < 1e-14);
        let total: f64 = r.values().iter().sum();
        assert!((total + 1.0).abs() < 1e-14);
    }

    #[test]
    fn robin_mass_on_inlet_face_3d() {
        let m = crate::mesh::backward_facing_step_3d(2, 2).unwrap();
        let d = DofMap::new(&m);
        let w: Vec<f64> = (0..d.n_velocity()).map(|i| if i % 3 == 0 { 2.0 } else { 0.0 }).collect();
        let r = Assembler::new(&m, &d).robin_boundary_mass(&w, BoundaryTag::Inflow);
        let total: f64 = r.values().iter().sum();
        assert!((total + 2.0).abs() < 1e-13);
    }
}

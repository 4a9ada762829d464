use std::f64::consts::TAU;

use mintori_core::dynamics::{find_periodic, level_grid, locate_brackets, xi_scan, FlowOptions};
use mintori_core::subtorus::{build_polytope, killing_witness, make_frame, WeightVector};
use mintori_core::torus::{clifford, reconstruct, ClosedOrbit, MeshInfo, TorusMesh, DEFAULT_DELTA};
use mintori_core::verify::{
    hausdorff_to, killing_variation, lagrangian_defect, lagrangian_defect_with, mean_curvature_defect,
    mesh_defects, orbit_volume, orbit_volume_profile, segment_grid, surface_defects, Method,
};
use mintori_core::reduced::ReducedModel;
use mintori_core::{AmbientPoint, FubiniStudy, TorusAlgebraVec, C64};

fn model(v: &[i64]) -> ReducedModel {
    let fs = FubiniStudy::new(2);
    let p = build_polytope(&fs);
    let f = make_frame(&WeightVector::new(v.to_vec()).unwrap(), &p).unwrap();
    ReducedModel::new(fs, f).unwrap()
}

fn orbit_13_3(m: &ReducedModel) -> ClosedOrbit {
    let fp = m.f_plus().unwrap();
    let rows = xi_scan(m, &level_grid(fp, 0.1, 0.99, 40), &FlowOptions::default());
    let br = locate_brackets(&rows, 13, 3)[0];
    ClosedOrbit::from(&find_periodic(m, 13, 3, br, &FlowOptions::with_tol(1e-12)).unwrap())
}

/// `[1 : r e^{ia} : e^{ib}]` with `r = 1 + eps sin b`: the first factor is
/// moved along `J` of the `a`-circle by an amount that varies with `b`.
fn perturbed_clifford(n: usize, eps: f64) -> TorusMesh {
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
            let r = 1.0 + eps * b.sin();
            pts.push(AmbientPoint::unit(vec![C64::new(1.0, 0.0), C64::from_polar(r, a), C64::from_polar(1.0, b)]).unwrap());
        }
    }
    TorusMesh::from_points(n, n, pts, MeshInfo::external()).unwrap()
}

#[test]
fn clifford_mesh_is_flat_minimal_lagrangian() {
    let fs = FubiniStudy::new(2);
    let mesh = clifford(2, 48, 48).unwrap();
    for z in mesh.points() {
        assert!(fs.moment_map(z).iter().all(|m| m.abs() < 1e-14));
    }
    for a in [[1.0, 0.0], [0.0, 1.0], [2.0, -3.0]] {
        assert!(killing_variation(&mesh, &TorusAlgebraVec::new(a.to_vec())) < 1e-10);
    }
    assert!(lagrangian_defect(&mesh).unwrap() < 1e-8);
    assert!(mean_curvature_defect(&mesh).unwrap() < 1e-6);
    let grid = mesh.without_stencil();
    assert!(lagrangian_defect_with(&grid, Method::Grid).unwrap() < 1e-8);
    let d = mesh_defects(&grid, Method::Grid).unwrap();
    assert!(d.mean_curvature < 1e-6 && !d.parametric);
    assert!(d.gauss_min.abs() < 1e-6 && d.gauss_max.abs() < 1e-6);
}

#[test]
fn real_projective_plane_is_totally_geodesic() {
    let f = |u: f64, v: f64| vec![C64::new(u.cos(), 0.0), C64::new(u.sin() * v.cos(), 0.0), C64::new(u.sin() * v.sin(), 0.0)];
    let h = 1e-3;
    for &(u0, v0) in &[(0.7, 0.3), (1.2, 2.0), (0.4, -1.1), (2.5, 4.0)] {
        let d = surface_defects(|a, b| f(u0 + a as f64 * h, v0 + b as f64 * h), h, h).unwrap();
        assert!(d.mean_curvature < 1e-6, "{d:?}");
        assert!(d.lagrangian < 1e-12);
        // constant curvature of the real locus
        assert!((d.gauss - 1.0).abs() < 1e-4, "{}", d.gauss);
    }
}

#[test]
fn perturbed_mesh_fails_the_lagrangian_test() {
    let mesh = perturbed_clifford(64, 1e-2);
    assert!(lagrangian_defect_with(&mesh, Method::Grid).unwrap() > 1e-4);
    let flat = perturbed_clifford(64, 0.0);
    assert!(lagrangian_defect_with(&flat, Method::Grid).unwrap() < 1e-8);
}

#[test]
fn l_plus_reconstructs_the_clifford_torus() {
    let m = model(&[2, 3]);
    let o = ClosedOrbit::l_plus(&m).unwrap();
    let mesh = reconstruct(&m, &o, 32, 32, DEFAULT_DELTA, &FlowOptions::with_tol(1e-12)).unwrap();
    let cl = clifford(2, 32, 32).unwrap();
    let fs = FubiniStudy::new(2);
    for z in mesh.points() {
        assert!(fs.moment_map(z).iter().all(|x| x.abs() < 1e-10));
    }
    // mu = 0 cuts out exactly the Clifford torus, checked above pointwise
    assert!(lagrangian_defect(&mesh).unwrap() < 1e-8);
    assert!(mean_curvature_defect(&mesh).unwrap() < 1e-6);
    assert!(hausdorff_to(&mesh, &cl) < 0.2);
}

#[test]
fn reconstructed_torus_lies_on_zero_set_and_is_certified() {
    let m = model(&[2, 3]);
    let o = orbit_13_3(&m);
    let mesh = reconstruct(&m, &o, 64, 64, DEFAULT_DELTA, &FlowOptions::with_tol(1e-12)).unwrap();
    for z in mesh.points() {
        assert!(m.z_residual(z) < 1e-9);
    }
    assert!(lagrangian_defect(&mesh).unwrap() < 1e-6);
    assert!(mean_curvature_defect(&mesh).unwrap() < 1e-4);
    let wit = killing_witness(m.fs(), m.frame()).unwrap();
    assert!(killing_variation(&mesh, &wit.a) > 1e-6);

    // shifting the seed by one full period describes the same surface
    let shifted_seed =
        mintori_core::dynamics::advance(&m, o.seed, o.period, 1.0, &FlowOptions::with_tol(1e-12)).unwrap();
    let shifted = ClosedOrbit { seed: shifted_seed, ..o };
    let again = reconstruct(&m, &shifted, 64, 64, DEFAULT_DELTA, &FlowOptions::with_tol(1e-12)).unwrap();
    // row by row the two meshes sample the same T'' circles
    for i in 0..64 {
        let row = m.make_spoint(mesh.point(i, 0), 0.0).unwrap();
        for j in 0..64 {
            let s = m.make_spoint(again.point(i, j), 0.0).unwrap();
            assert!((s.chart_tau() - row.chart_tau()).abs() < 1e-8);
            assert!(mintori_core::reduced::wrap_signed(s.psi() - row.psi()).abs() < 1e-7);
        }
    }
}

#[test]
fn grid_mean_curvature_converges_at_second_order() {
    let m = model(&[2, 3]);
    let o = orbit_13_3(&m);
    let raw: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&k| {
            let mesh = reconstruct(&m, &o, k, k, DEFAULT_DELTA, &FlowOptions::with_tol(1e-12)).unwrap();
            mesh_defects(&mesh.without_stencil(), Method::Grid).unwrap().mean_curvature_raw
        })
        .collect();
    for w in raw.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{raw:?}");
    }
}

#[test]
fn hausdorff_is_symmetric_and_vanishes_on_identity() {
    let a = clifford(2, 24, 24).unwrap();
    let b = perturbed_clifford(20, 5e-2);
    assert_eq!(hausdorff_to(&a, &a), 0.0);
    let (x, y) = (hausdorff_to(&a, &b), hausdorff_to(&b, &a));
    assert_eq!(x, y);
    assert!(x > 0.0);
}

#[test]
fn clifford_orbit_maximizes_volume() {
    let fs = FubiniStudy::new(2);
    let p = build_polytope(&fs);
    for v in [[2, 3], [1, -1], [3, -1]] {
        let frame = make_frame(&WeightVector::new(v.to_vec()).unwrap(), &p).unwrap();
        let grid = segment_grid(&frame, 50);
        let prof = orbit_volume_profile(&fs, &frame, &grid).unwrap();
        let step = (frame.t2 - frame.t1) / 50.0;
        assert!(prof.argmax.abs() <= step, "{v:?}: {}", prof.argmax);
        // closed form (2 pi)^n sqrt(prod |z_k|^2)
        for &(tau, vol) in &prof.rows {
            let pk = frame.moduli_at(&fs, tau);
            let exact = TAU.powi(2) * pk.iter().product::<f64>().sqrt();
            assert!((vol - exact).abs() < 1e-12 * exact.max(1.0));
        }
        let edge = |tau: f64| orbit_volume(&frame.orbit_point(&fs, tau).unwrap());
        let peak = edge(0.0);
        assert!(edge(frame.t1 + 1e-9) < 1e-3 * peak && edge(frame.t2 - 1e-9) < 1e-3 * peak);
        let h = 1e-5;
        let first_variation = (edge(h) - edge(-h)) / (2.0 * h);
        assert!(first_variation.abs() < 1e-5, "{first_variation}");
    }
}

#[test]
fn orbit_volume_is_permutation_invariant() {
    let z = [C64::new(0.5, 0.1), C64::new(0.3, -0.4), C64::new(0.6, 0.2)];
    let base = orbit_volume(&AmbientPoint::unit(z.to_vec()).unwrap());
    for perm in [[0, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1]] {
        let w: Vec<C64> = perm.iter().map(|&k| z[k]).collect();
        let vol = orbit_volume(&AmbientPoint::unit(w).unwrap());
        assert!((vol - base).abs() < 1e-12);
    }
}

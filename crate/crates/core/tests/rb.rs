mod common;

use faer::Mat;
use rbgrf::covariance::{GridCovariance, HyperParams, Kernel, SeparableKernel};
use rbgrf::kl::eigs_grid;
use rbgrf::linalg::frobenius;
use rbgrf::mesh::{build_field_mesh, FieldMesh, DIAM};
use rbgrf::rb::{
    build_pod, build_reduced_basis, load_basis, project_grid, rb_lift, reduced_eigs, reduced_eigs_direct, save_basis,
    snapshot_grid, snapshot_matrix, OfflineOptions, ReducedBasis, SnapshotPlan,
};
use rbgrf::rng::{normals, stream};

fn opts(lambda_min: f64) -> OfflineOptions {
    OfflineOptions {
        snapshot_kernel: Kernel::Exponential,
        separable: SeparableKernel::paired(0.5, 40).unwrap(),
        lambda_min,
        max_rb: None,
    }
}

fn basis(m: &FieldMesh, n_snap: usize, n_sto: usize, lambda_min: f64) -> ReducedBasis {
    let plan = SnapshotPlan { ell_snaps: snapshot_grid(0.322, DIAM, n_snap).unwrap(), n_sto };
    build_reduced_basis(m, &plan, &opts(lambda_min)).unwrap()
}

fn linearised(m: &FieldMesh, tau: HyperParams) -> GridCovariance {
    GridCovariance::from_kernel(m, &Kernel::Linearized(SeparableKernel::paired(0.5, 40).unwrap()), tau)
}

#[test]
fn online_assembly_equals_direct_projection() {
    let m = build_field_mesh(8).unwrap();
    let b = basis(&m, 4, 20, 1e-10);
    for tau in [HyperParams::new(0.35, 1.0), HyperParams::new(0.8, 0.6), HyperParams::new(1.3, 2.0)] {
        let direct = project_grid(&b.w, &linearised(&m, tau)).unwrap();
        let online = b.reduced_cov(tau);
        assert!(frobenius((&online - &direct).as_ref()) < 1e-10, "{tau:?}");
        let a = reduced_eigs(&b, tau, 10).unwrap();
        let d = reduced_eigs_direct(&direct, 10).unwrap();
        for i in 0..10 {
            assert!((a.eigvals[i] - d.eigvals[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn basis_is_m_orthonormal() {
    let m = build_field_mesh(12).unwrap();
    let b = basis(&m, 4, 30, 1e-10);
    let r = b.n_rb;
    let eye = Mat::from_fn(r, r, |i, j| (i == j) as u8 as f64);
    assert!(frobenius((&b.m_rb - &eye).as_ref()) < 1e-10);
}

#[test]
fn rayleigh_ritz_bound_and_snapshot_reproduction() {
    let m = build_field_mesh(16).unwrap();
    let b = basis(&m, 4, 40, 0.0);
    let prior = rbgrf::uq::Preset::FlowCell.prior();
    let mut rng = stream(21, 0, 0);
    for _ in 0..10 {
        let tau = prior.sample(&mut rng).unwrap();
        let full = eigs_grid(&linearised(&m, tau), &m, 40).unwrap();
        let red = reduced_eigs(&b, tau, 40).unwrap();
        for i in 0..red.n_sto() {
            assert!(red.eigvals[i] <= full.eigvals[i] + 1e-10 * full.eigvals[0], "{tau:?} {i}");
        }
    }
    for &ell in &b.snapshot_ells {
        let tau = HyperParams::new(ell, 1.0);
        let full = eigs_grid(&GridCovariance::from_kernel(&m, &Kernel::Exponential, tau), &m, 40).unwrap();
        let red = reduced_eigs(&b, tau, 40).unwrap();
        for i in 0..40 {
            assert!((red.eigvals[i] - full.eigvals[i]).abs() < 1e-9 * full.eigvals[0], "{ell} {i}");
        }
    }
}

#[test]
fn nested_bases_never_lose_eigenvalue() {
    let m = build_field_mesh(12).unwrap();
    let h = m.h;
    let small = basis(&m, 3, 20, 1e-10);
    // append M-orthonormalised vectors from an extra snapshot
    let extra = snapshot_matrix(&m, &SnapshotPlan { ell_snaps: vec![0.55], n_sto: 20 }, &Kernel::Exponential).unwrap();
    let n = m.n();
    let mut cols: Vec<Vec<f64>> = (0..small.n_rb).map(|j| small.w.col_as_slice(j).to_vec()).collect();
    for j in 0..extra.ncols() {
        let mut v = extra.col_as_slice(j).to_vec();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() * h * h;
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nrm = (v.iter().map(|x| x * x).sum::<f64>() * h * h).sqrt();
        if nrm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nrm);
            cols.push(v);
        }
    }
    assert!(cols.len() > small.n_rb);
    let big = Mat::from_fn(n, cols.len(), |i, j| cols[j][i]);
    for tau in [HyperParams::new(0.4, 1.0), HyperParams::new(0.9, 1.0)] {
        let g = linearised(&m, tau);
        let a = reduced_eigs_direct(&project_grid(&small.w, &g).unwrap(), 20).unwrap();
        let c = reduced_eigs_direct(&project_grid(&big, &g).unwrap(), 20).unwrap();
        for i in 0..20 {
            assert!(c.eigvals[i] >= a.eigvals[i] - 1e-10, "{i}");
        }
    }
}

#[test]
fn single_snapshot_gives_its_own_eigenvectors() {
    let m = build_field_mesh(10).unwrap();
    let plan = SnapshotPlan { ell_snaps: vec![0.7], n_sto: 15 };
    let snaps = snapshot_matrix(&m, &plan, &Kernel::Exponential).unwrap();
    let pod = build_pod(&snaps, m.h, 0.0, None).unwrap();
    assert_eq!(pod.w.ncols(), 15);
}

#[test]
fn offline_phase_is_deterministic_and_round_trips() {
    let m = build_field_mesh(16).unwrap();
    let a = basis(&m, 10, 30, 1e-10);
    let b = basis(&m, 10, 30, 1e-10);
    assert_eq!(a.n_rb, b.n_rb);
    assert_eq!(a.w, b.w);
    let dir = tempfile::tempdir().unwrap();
    save_basis(dir.path(), &a, serde_json::json!({"note": "test"})).unwrap();
    let (c, man) = load_basis(dir.path()).unwrap();
    assert_eq!(man.n_rb, a.n_rb);
    assert_eq!(c.w, a.w);
    assert_eq!(c.components, a.components);
    assert_eq!(c.pod_sv, a.pod_sv);
    std::fs::remove_file(dir.path().join("manifest.json")).unwrap();
    assert!(load_basis(dir.path()).is_err());
}

#[test]
fn lifted_draws_have_projected_covariance() {
    let m = build_field_mesh(8).unwrap();
    let b = basis(&m, 4, 12, 1e-8);
    let tau = HyperParams::new(0.6, 1.0);
    let kl = reduced_eigs(&b, tau, 12).unwrap();
    // W Ψ Ψᵀ Wᵀ
    let wpsi = rbgrf::linalg::mul(b.w.as_ref(), kl.psi.as_ref());
    let target = rbgrf::linalg::mul(wpsi.as_ref(), wpsi.transpose());
    let zero = vec![0.0; m.n()];
    let draws: Vec<Vec<f64>> = (0..100_000)
        .map(|i| {
            let xi = normals(&mut stream(5, 0, i), kl.n_sto());
            rb_lift(&b, &zero, &kl.sample(&xi).unwrap()).unwrap()
        })
        .collect();
    assert!(common::covariance_within(&draws, &target, 3.0) >= 0.99);
}

#[test]
fn truncation_keeps_leading_block() {
    let m = build_field_mesh(8).unwrap();
    let b = basis(&m, 4, 12, 1e-10);
    let t = b.truncated(10).unwrap();
    let tau = HyperParams::new(0.7, 1.0);
    let direct = project_grid(&t.w, &linearised(&m, tau)).unwrap();
    assert!(frobenius((&t.reduced_cov(tau) - &direct).as_ref()) < 1e-10);
    assert!(b.truncated(0).is_err() && b.truncated(b.n_rb + 1).is_err());
}

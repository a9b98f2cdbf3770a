use std::f64::consts::FRAC_PI_6;

use helmcsg::experiments::{
    read_record, run, solve_point_source, write_record, ExperimentConfig, Mode, Precondition, Sweep,
};
use helmcsg::{
    assemble_helmholtz_1d, assemble_helmholtz_2d, build_ecs_grid, dense_eigenvalues,
    point_source_rhs, BandLu, Dims, DomainPair, EcsDomain, KrylovOptions, MgOptions, C64,
};

fn pair(n: usize) -> DomainPair {
    DomainPair::new(
        EcsDomain::ecs(1.0, 1.25, FRAC_PI_6, n, n / 4).unwrap(),
        0.18,
    )
    .unwrap()
}

fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let n: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (d / n).sqrt()
}

#[test]
fn every_preconditioner_reaches_the_direct_solution() {
    let opts = KrylovOptions {
        rel_tol: 1e-10,
        ..KrylovOptions::default()
    };
    for dims in [Dims::One, Dims::Two] {
        let p = pair(32);
        let grid = build_ecs_grid(&p.ecs).unwrap();
        let h = match dims {
            Dims::One => assemble_helmholtz_1d(&grid, 12.0).unwrap().to_sparse(),
            Dims::Two => assemble_helmholtz_2d(&grid, 12.0).unwrap(),
        };
        let b = point_source_rhs(&grid, dims.count()).unwrap();
        let direct = BandLu::from_sparse(&h).unwrap().solve(&b);
        for precond in [
            Precondition::None,
            Precondition::CsgExact,
            Precondition::CsgMg,
        ] {
            let (x, log) =
                solve_point_source(&p, 12.0, dims, precond, &opts, &MgOptions::default()).unwrap();
            assert!(log.converged, "{dims:?} {precond:?}");
            assert!(rel_diff(&x, &direct) < 1e-7, "{dims:?} {precond:?}");
        }
    }
}

#[test]
fn helmholtz_spectrum_is_shifted_laplacian() {
    let p = pair(16);
    let grid = build_ecs_grid(&p.ecs).unwrap();
    let k = 7.5;
    let mut l: Vec<C64> = dense_eigenvalues(&assemble_helmholtz_1d(&grid, 0.0).unwrap().to_dense())
        .unwrap()
        .eigenvalues
        .into_iter()
        .map(|z| z - k * k)
        .collect();
    let mut h = dense_eigenvalues(&assemble_helmholtz_1d(&grid, k).unwrap().to_dense())
        .unwrap()
        .eigenvalues;
    let key = |z: &C64| (z.re, z.im);
    l.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    h.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    for (a, b) in l.iter().zip(&h) {
        assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
    }
}

#[test]
fn indefinite_at_large_wave_number() {
    let grid = build_ecs_grid(&pair(64).ecs).unwrap();
    let e = dense_eigenvalues(&assemble_helmholtz_1d(&grid, 26.4).unwrap().to_dense())
        .unwrap()
        .eigenvalues;
    let smallest = e
        .iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    assert!(smallest.re < 0.0, "{smallest}");
}

#[test]
fn every_mode_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let base = ExperimentConfig {
        n: 16,
        sweep: Sweep::List(vec![3.0, 9.0]),
        ..Default::default()
    };
    let modes = [
        Mode::Spectrum,
        Mode::PrecondSpectrum,
        Mode::BranchPoint,
        Mode::KSweep1d,
        Mode::KSweep2d,
        Mode::Solve,
        Mode::TableCriticalk,
    ];
    for (i, mode) in modes.into_iter().enumerate() {
        let cfg = ExperimentConfig {
            mode,
            n_max: 128,
            detect_n_max: 64,
            ..base.clone()
        };
        let rec = run(&cfg).unwrap();
        let stem = dir.path().join(format!("run{i}"));
        write_record(&rec, &stem).unwrap();
        assert_eq!(read_record(&stem).unwrap(), rec, "{mode:?}");
        assert_eq!(rec.wall_times.len(), rec.k_rows.len());
    }
}

#[test]
fn sweep_rows_follow_sweep_order() {
    let cfg = ExperimentConfig {
        mode: Mode::KSweep1d,
        n: 16,
        sweep: Sweep::List(vec![9.0, 3.0, 6.0]),
        ..Default::default()
    };
    let rec = run(&cfg).unwrap();
    let ks: Vec<f64> = rec.k_rows.iter().map(|r| r.k).collect();
    assert_eq!(ks, vec![9.0, 3.0, 6.0]);
    assert!(rec
        .k_rows
        .iter()
        .all(|r| r.kappa_continuous.value().is_some()));
}

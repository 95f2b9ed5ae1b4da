use fgm_core::flamelet::{
    stoichiometric_mixture_fraction, BoundaryConditions, Grid, DEFAULT_CLUSTERING,
    DEFAULT_GRID_POINTS,
};
use fgm_core::library::*;
use fgm_core::mech::{bundled_methane, Mechanism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

struct Fixture {
    mech: Mechanism,
    lib: FlameletLibrary,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mech = bundled_methane();
        let bc = BoundaryConditions::methane_air(&mech).unwrap();
        let z_st = stoichiometric_mixture_fraction(&mech, &bc).unwrap();
        let grid = Grid::clustered(DEFAULT_GRID_POINTS, z_st, DEFAULT_CLUSTERING).unwrap();
        let lib = tabulate(
            &mech,
            &bc,
            &grid,
            &REFERENCE_CHIS,
            &TabulateOptions::default(),
        )
        .unwrap();
        Fixture { mech, lib }
    })
}

#[test]
fn reference_library_flattens_to_210_rows() {
    let lib = &fixture().lib;
    assert_eq!(lib.entries.len(), 7);
    assert!(lib
        .entries
        .iter()
        .all(|e| e.converged && e.grid.len() == 30));
    let ds = lib.flatten();
    assert_eq!(ds.len(), 210);
    assert_eq!(
        ds.column_names(),
        ["Z", "chi", "T", "CH4", "O2", "CO2", "H2O", "CO", "H2", "N2"]
    );
    // ascending chi, then ascending Z; every node exactly once
    for (r, x) in ds.inputs.iter().enumerate() {
        let (e, i) = (r / 30, r % 30);
        assert_eq!(x[1], REFERENCE_CHIS[e]);
        assert_eq!(x[0], lib.grid.points()[i]);
        assert_eq!(ds.targets[r][0], lib.entries[e].temperature[i]);
        assert_eq!(ds.targets[r][1..], lib.entries[e].mass_fractions[i][..]);
    }
}

#[test]
fn single_entry_library() {
    let f = fixture();
    let lib = tabulate(
        &f.mech,
        &f.lib.bc,
        &f.lib.grid,
        &[5.0],
        &TabulateOptions::default(),
    )
    .unwrap();
    assert_eq!(lib.entries.len(), 1);
    assert_eq!(lib.flatten().len(), 30);
}

#[test]
fn tabulate_rejects_unsorted_chis() {
    let f = fixture();
    let r = tabulate(
        &f.mech,
        &f.lib.bc,
        &f.lib.grid,
        &[5.0, 1.0],
        &TabulateOptions::default(),
    );
    assert!(matches!(r, Err(LibraryError::InvalidInput(_))));
}

#[test]
fn csv_round_trip_of_library_dataset() {
    let ds = fixture().lib.flatten();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lib.csv");
    write_csv(&ds, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 211);
    assert!(text.ends_with('\n'));
    assert_eq!(read_csv(&path).unwrap(), ds);
}

#[test]
fn empty_dataset_writes_header_only() {
    let ds = Dataset::new(
        vec!["Z".into(), "chi".into()],
        vec!["T".into(), "CO".into()],
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    write_csv(&ds, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "Z,chi,T,CO\n");
    assert_eq!(read_csv(&path).unwrap(), ds);
}

#[test]
fn csv_parse_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "Z,chi,T\n0,1,300\n0.5,1,abc\n").unwrap();
    match read_csv(&path) {
        Err(LibraryError::Parse { row, col, .. }) => assert_eq!((row, col), (3, 3)),
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, "Z,T,chi\n").unwrap();
    assert!(matches!(read_csv(&path), Err(LibraryError::Schema(_))));
    std::fs::write(&path, "Z,chi,T\n0,1\n").unwrap();
    assert!(matches!(read_csv(&path), Err(LibraryError::Schema(_))));
    assert!(matches!(
        read_csv(dir.path().join("missing.csv")),
        Err(LibraryError::Io(_))
    ));
}

#[test]
fn csv_round_trip_is_bit_exact_on_random_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ds = Dataset::new(
        vec!["Z".into(), "chi".into()],
        vec!["T".into(), "A".into(), "B".into()],
    );
    for _ in 0..10_000 {
        let mut v = || -> f64 {
            match rng.gen_range(0..4) {
                0 => rng.gen::<f64>(),
                1 => rng.gen_range(-1e6..1e6),
                2 => f64::from_bits(
                    rng.gen::<u64>() & !(0x7ff << 52) | (rng.gen_range(1u64..2046) << 52),
                ),
                _ => rng.gen::<f64>() * 1e-30,
            }
        };
        let x = vec![v(), v()];
        let y = vec![v(), v(), v()];
        ds.push(x, y);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_csv(&ds, &path).unwrap();
    let back = read_csv(&path).unwrap();
    let bits = |d: &Dataset| -> Vec<u64> {
        d.inputs
            .iter()
            .zip(&d.targets)
            .flat_map(|(a, b)| a.iter().chain(b).map(|v| v.to_bits()).collect::<Vec<_>>())
            .collect()
    };
    assert_eq!(bits(&back), bits(&ds));
}

#[test]
fn lookup_reproduces_stored_nodes() {
    let lib = &fixture().lib;
    for e in &lib.entries {
        for (i, &z) in lib.grid.points().iter().enumerate() {
            let (t, y) = lib.lookup(z, e.chi_st).unwrap();
            assert_eq!(t, e.temperature[i]);
            assert_eq!(y, e.mass_fractions[i]);
        }
        assert_eq!(lib.lookup(1.0, e.chi_st).unwrap().0, 300.15);
        assert_eq!(lib.lookup(0.0, e.chi_st).unwrap().0, 300.0);
    }
}

#[test]
fn lookup_between_identical_profiles_is_that_profile() {
    let lib = &fixture().lib;
    let mut twin = lib.subset(&[2, 2]);
    twin.entries[1].chi_st = 20.0;
    let e = &lib.entries[2];
    for (i, &z) in lib.grid.points().iter().enumerate() {
        let (t, y) = twin.lookup(z, 15.0).unwrap();
        assert_eq!(t, e.temperature[i]);
        assert_eq!(y, e.mass_fractions[i]);
    }
}

#[test]
fn lookup_interpolates_and_rejects_out_of_range() {
    let lib = &fixture().lib;
    let z = 0.3 * lib.grid.points()[10] + 0.7 * lib.grid.points()[11];
    let (t, _) = lib.lookup(z, 7.75).unwrap();
    let node = |e: usize, i: usize| lib.entries[e].temperature[i];
    let lo = 0.3 * node(1, 10) + 0.7 * node(1, 11);
    let hi = 0.3 * node(2, 10) + 0.7 * node(2, 11);
    assert!((t - 0.5 * (lo + hi)).abs() < 1e-9);
    assert!(matches!(
        lib.lookup(0.5, 30.0),
        Err(LibraryError::OutOfRange { what: "chi", .. })
    ));
    assert!(matches!(
        lib.lookup(0.5, 0.001),
        Err(LibraryError::OutOfRange { .. })
    ));
    assert!(matches!(
        lib.lookup(1.5, 5.5),
        Err(LibraryError::OutOfRange { what: "Z", .. })
    ));
}

#[test]
fn library_container_round_trips() {
    let lib = &fixture().lib;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.fgmlib");
    write_library(lib, &path).unwrap();
    let back = read_library(&path).unwrap();
    assert_eq!(&back, lib);
    back.check_mechanism(&fixture().mech).unwrap();
    let path2 = dir.path().join("again.fgmlib");
    write_library(&back, &path2).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );
}

#[test]
fn corrupted_container_is_rejected() {
    let lib = &fixture().lib;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.fgmlib");
    write_library(lib, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(LIBRARY_MAGIC));
    let tampered = text.replacen("300.15", "300.16", 1);
    std::fs::write(&path, tampered).unwrap();
    assert!(matches!(read_library(&path), Err(LibraryError::Corrupt(_))));
}

#[test]
fn mechanism_fingerprint_mismatch_is_reported() {
    let lib = &fixture().lib;
    let mut other = fixture().mech.clone();
    other.reactions[0].arrhenius_a *= 2.0;
    assert!(matches!(
        lib.check_mechanism(&other),
        Err(LibraryError::MechanismMismatch(_))
    ));
}

#[test]
fn subset_error_falls_with_library_count() {
    let f = fixture();
    let opts = TabulateOptions::default();
    let pool = tabulate(
        &f.mech,
        &f.lib.bc,
        &f.lib.grid,
        &log_spaced(0.01, 29.5, 27),
        &opts,
    )
    .unwrap();
    let peaks: Vec<f64> = pool.entries.iter().map(|e| e.max_temperature()).collect();
    assert!(peaks.windows(2).all(|w| w[1] <= w[0] + 1.0), "{peaks:?}");
    let rows = subset_study(&f.mech, &pool, &[3, 7, 12, 17, 22, 27], &opts).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.selected_chis.len(), r.count);
        assert_eq!(r.eval_chis.len(), r.count - 1);
        assert!(r.temperature.min <= r.temperature.mean && r.temperature.mean <= r.temperature.max);
        assert!(r.co2.is_some());
    }
    let mean = |k: usize| rows.iter().find(|r| r.count == k).unwrap().temperature.mean;
    assert!(mean(3) > mean(22), "{} vs {}", mean(3), mean(22));
    assert!(mean(3) >= mean(7) && mean(7) >= mean(22));
    assert!(mean(27) < 1.0);
    assert!(matches!(
        subset_study(&f.mech, &pool, &[28], &opts),
        Err(LibraryError::InsufficientPool {
            pool: 27,
            requested: 28
        })
    ));
}

use polygrade::fixtures::{self, Fixture, FIXTURE_NAMES};
use polygrade::refine3d::check_decomposition;

#[test]
fn embedded_fixtures_match_the_generator() {
    for name in ["cube3d", "prismwedge3d", "fichera3d"] {
        let (domain, decomp) = fixtures::embedded_text(name).unwrap();
        let (gd, gt) = fixtures::generate_fixture_text(name).unwrap();
        assert_eq!(domain, gd, "{name} domain");
        assert_eq!(decomp, gt, "{name} decomposition");
    }
}

#[test]
fn every_builtin_loads_and_validates() {
    for name in FIXTURE_NAMES {
        let name = if name == "sector2d(alpha)" { "sector2d(4.5)" } else { name };
        match fixtures::builtin(name).unwrap() {
            Fixture::Planar(d) => assert_eq!(d.dim, 2),
            Fixture::Solid { domain, decomposition } => {
                let report = check_decomposition(&decomposition, &domain).unwrap();
                assert!(report.passed(), "{name}: {report:?}");
                assert!((decomposition.volume() - domain.measure()).abs() < 1e-12 * domain.measure());
            }
        }
    }
    assert!(fixtures::builtin("torus3d").is_err());
    assert!(fixtures::builtin("sector2d(7)").is_err());
}

#[test]
fn fixture_volumes() {
    let vol = |n: &str| fixtures::builtin(n).unwrap().domain().measure();
    assert!((vol("cube3d") - 1.0).abs() < 1e-14);
    assert!((vol("prismwedge3d") - 3.0).abs() < 1e-14);
    assert!((vol("fichera3d") - 7.0).abs() < 1e-14);
}

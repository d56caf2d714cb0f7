use maslov_core::flow::FlowConfig;
use maslov_core::maslov::MaslovConfig;
use maslov_core::verify::*;

#[test]
fn axiom_suites_pass() {
    let cfg = MaslovConfig::default();
    for r in all_axioms(None, 24, 3, &cfg).unwrap() {
        assert!(r.ok(), "{r:?}");
    }
    assert!(axiom_suite("commutativity", None, 1, 0, &cfg).is_err());
}

#[test]
fn reports_are_seed_deterministic() {
    let cfg = MaslovConfig::default();
    let a = axiom_suite("juxtaposition", Some(2), 12, 7, &cfg).unwrap();
    let b = axiom_suite("juxtaposition", Some(2), 12, 7, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!((case_dim(None, 4), case_dim(Some(3), 4)), (2, 3));
}

#[test]
fn inequality_suites_pass() {
    let cfg = MaslovConfig::default();
    assert!(hormander_suite(3, 6, 1, &cfg).ok());
    let r = hormander_pairs(40, 1, &cfg);
    assert!(r.ok(), "{r:?}");
    assert!(subadditivity_suite(6, 2, &FlowConfig::default(), &cfg).ok());
    assert!(lemma1_suite(10, 10, 4).ok());
    let r = reparametrization_suite(100, 4);
    assert!(r.ok(), "{r:?}");
    assert_eq!(bott_suite(&[]).cases, 0);
}

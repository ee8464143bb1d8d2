use formulanet_wasm::{dataset, Demo, Options, DATASETS};

fn small() -> Options {
    Options { hidden: vec![6], epochs: 8, ..Options::default() }
}

#[test]
fn every_dataset_trains_and_plots() {
    for (name, _, _) in DATASETS {
        let mut demo = Demo::new();
        let svg = demo.train(name, 120, &small()).unwrap();
        assert_eq!(svg.matches("<polyline class=\"series\"").count(), 3, "{name}");
        let features = demo.features().unwrap();
        assert!(!features.is_empty());
        for kind in ["pdp", "ale"] {
            let curve = demo.effect_svg(&features[0], kind).unwrap();
            assert_eq!(curve.matches("<polyline class=\"series\"").count(), 1);
        }
        assert!(demo.summary().unwrap().starts_with("— Feature Importance\n"));
    }
}

#[test]
fn bootstrap_adds_ribbons_and_uncertainty() {
    let mut demo = Demo::new();
    demo.train("linear", 150, &Options { bootstrap: Some(3), ..small() }).unwrap();
    let curve = demo.effect_svg("x1", "pdp").unwrap();
    assert!(curve.contains("class=\"ribbon\""));
    assert!(demo.summary().unwrap().contains("Signif. codes"));
}

#[test]
fn errors_are_reported() {
    let mut demo = Demo::new();
    assert!(demo.summary().is_err());
    assert!(demo.effect_svg("x1", "pdp").is_err());
    assert!(demo.train("nope", 100, &small()).is_err());
    demo.train("xor", 100, &small()).unwrap();
    assert!(demo.effect_svg("x1", "ice").is_err());
    assert!(demo.effect_svg("zz", "ale").is_err());
    assert!(dataset("nope", 10, 1).is_err());
}

#[test]
fn training_is_deterministic() {
    let (mut a, mut b) = (Demo::new(), Demo::new());
    assert_eq!(a.train("presence", 200, &small()).unwrap(), b.train("presence", 200, &small()).unwrap());
    assert_eq!(a.model().unwrap().network, b.model().unwrap().network);
}

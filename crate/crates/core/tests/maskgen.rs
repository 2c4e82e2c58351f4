use snn_topo::archspec::LayerSpec;
use snn_topo::fixtures;
use snn_topo::maskgen::{
    attach_weights, density_report, generate, proportional_term, read_mask, sidecar_path, write_mask,
    GenerateOptions, GeneratorInfo, Method, WeightInit,
};

#[test]
fn global_sparsity_is_met_for_every_architecture() {
    for name in fixtures::architecture_names() {
        let spec = fixtures::architecture(name).unwrap();
        for method in [Method::Uniform, Method::Er, Method::Erk] {
            for s in [0.5, 0.9, 0.98] {
                let g = generate(&spec, &GenerateOptions::new(method, s, 0)).unwrap();
                g.mask.check_against(&spec).unwrap();
                let d = density_report(&g.mask).global_density;
                assert!((d - (1.0 - s)).abs() < 1e-3, "{name} {method} {s}: density {d}");
            }
        }
    }
}

#[test]
fn erk_density_grows_with_the_proportional_term() {
    let spec = fixtures::architecture("resnet32").unwrap();
    let g = generate(&spec, &GenerateOptions::new(Method::Erk, 0.9, 0)).unwrap();
    let mut pairs: Vec<(f64, f64)> = g
        .mask
        .layers()
        .iter()
        .map(|l| (proportional_term(l.shape(), Method::Erk), l.density()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pairs.windows(2) {
        assert!(w[1].1 + 1e-3 >= w[0].1, "{w:?}");
    }
}

#[test]
fn seeds_control_the_pattern() {
    let spec = fixtures::architecture("conv6").unwrap();
    let a = generate(&spec, &GenerateOptions::new(Method::Erk, 0.9, 1)).unwrap().mask;
    let b = generate(&spec, &GenerateOptions::new(Method::Erk, 0.9, 1)).unwrap().mask;
    let c = generate(&spec, &GenerateOptions::new(Method::Erk, 0.9, 2)).unwrap().mask;
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.nnz(), c.nnz());
}

#[test]
fn files_round_trip_and_sidecar_is_checked() {
    let spec = fixtures::architecture("resnet20").unwrap();
    let mask = generate(&spec, &GenerateOptions::new(Method::Er, 0.95, 4)).unwrap().mask;
    let mask = attach_weights(&mask, 4, WeightInit::GaussianFanIn).unwrap();
    assert!(mask.layers().iter().all(|l| l.weights().unwrap().iter().all(|&w| w != 0.0)));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.bin");
    let info = GeneratorInfo {
        method: Method::Er,
        sparsity: 0.95,
        seed: 4,
    };
    write_mask(&p, &mask, Some(info)).unwrap();
    assert_eq!(read_mask(&p).unwrap(), mask);

    let side = sidecar_path(&p);
    let text = std::fs::read_to_string(&side).unwrap();
    let first_nnz = mask.layers()[0].nnz();
    std::fs::write(&side, text.replacen(&format!("\"nnz\": {first_nnz}"), "\"nnz\": 1", 1)).unwrap();
    assert!(read_mask(&p).is_err());
    std::fs::remove_file(&side).unwrap();
    assert_eq!(read_mask(&p).unwrap(), mask);
}

#[test]
fn excluded_layers_stay_dense() {
    let spec = fixtures::architecture("conv6").unwrap();
    let first = spec.weighted_layers().next().unwrap();
    let last = spec.weighted_layers().last().unwrap();
    assert!(matches!(spec.layers()[last], LayerSpec::Linear(_)));
    let opts = GenerateOptions {
        exclude: vec![first, last],
        ..GenerateOptions::new(Method::Erk, 0.9, 0)
    };
    let mask = generate(&spec, &opts).unwrap().mask;
    assert_eq!(mask.layer(first).unwrap().density(), 1.0);
    assert_eq!(mask.layer(last).unwrap().density(), 1.0);
    assert!((density_report(&mask).global_density - 0.1).abs() < 1e-3);

    let opts = GenerateOptions {
        exclude: vec![first, last],
        ..GenerateOptions::new(Method::Uniform, 0.9, 0)
    };
    let mask = generate(&spec, &opts).unwrap().mask;
    for l in mask.layers() {
        if l.layer_index() != first && l.layer_index() != last {
            assert!((l.density() - 0.1).abs() < 1e-3, "{}", l.layer_index());
        }
    }
}

//! Bundled reference architectures and published accuracy tables.

use crate::archspec::{ArchError, ArchitectureSpec};

pub const ARCHITECTURES: [(&str, &str); 4] = [
    ("conv6", include_str!("../data/arch/conv6.json")),
    ("resnet20", include_str!("../data/arch/resnet20.json")),
    ("resnet32", include_str!("../data/arch/resnet32.json")),
    ("wide_resnet28_2", include_str!("../data/arch/wide_resnet28_2.json")),
];

/// Accuracy tables for CIFAR-10, CIFAR-100 and downsampled Tiny-ImageNet. Rows
/// are three-run means (`run = 0`); `acc` is empty where the pruned network did
/// not beat chance.
pub const ACCURACY_TABLES: [(&str, &str); 3] = [
    ("accuracy_cifar10.csv", include_str!("../data/accuracy_cifar10.csv")),
    ("accuracy_cifar100.csv", include_str!("../data/accuracy_cifar100.csv")),
    ("accuracy_tiny_imagenet.csv", include_str!("../data/accuracy_tiny_imagenet.csv")),
];

pub fn architecture_names() -> impl Iterator<Item = &'static str> {
    ARCHITECTURES.iter().map(|(n, _)| *n)
}

/// Looks up a bundled architecture by name (`conv6`, `resnet20`, `resnet32`,
/// `wide_resnet28_2`); a `.json` suffix is ignored.
pub fn architecture(name: &str) -> Option<ArchitectureSpec> {
    let key = name.trim_end_matches(".json");
    ARCHITECTURES
        .iter()
        .find(|(n, _)| *n == key)
        .map(|(_, text)| ArchitectureSpec::from_json_str(text).expect("bundled architecture is valid"))
}

pub fn architecture_source(name: &str) -> Option<&'static str> {
    let key = name.trim_end_matches(".json");
    ARCHITECTURES.iter().find(|(n, _)| *n == key).map(|(_, t)| *t)
}

/// Writes every bundled file into `dir` (`arch/*.json` and the accuracy CSVs).
pub fn install(dir: &std::path::Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    let arch_dir = dir.join("arch");
    std::fs::create_dir_all(&arch_dir)?;
    let mut written = Vec::new();
    for (name, text) in ARCHITECTURES {
        let p = arch_dir.join(format!("{name}.json"));
        std::fs::write(&p, text)?;
        written.push(p);
    }
    for (name, text) in ACCURACY_TABLES {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        written.push(p);
    }
    Ok(written)
}

pub fn load_architecture_or_file(name_or_path: &str) -> Result<ArchitectureSpec, ArchError> {
    match architecture(name_or_path) {
        Some(spec) if !std::path::Path::new(name_or_path).exists() => Ok(spec),
        _ => ArchitectureSpec::load(name_or_path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspec::{LayerSpec, Shape3};

    #[test]
    fn all_bundled_architectures_compose() {
        for name in architecture_names() {
            let spec = architecture(name).unwrap();
            let last = spec.layers().len() - 1;
            assert_eq!(spec.output_shape(last).unwrap(), Shape3::flat(10), "{name}");
            for size in [8, 16] {
                spec.with_input_size(size, size).unwrap();
            }
        }
    }

    #[test]
    fn conv6_layout() {
        let spec = architecture("conv6.json").unwrap();
        let channels: Vec<String> = spec
            .layers()
            .iter()
            .map(|l| match l {
                LayerSpec::Conv(c) => c.c_out.to_string(),
                LayerSpec::Pool(_) => "pool".into(),
                LayerSpec::Linear(l) => format!("fc{}", l.n_out),
                LayerSpec::Residual(_) => "res".into(),
            })
            .collect();
        assert_eq!(
            channels,
            ["64", "64", "pool", "128", "128", "pool", "256", "256", "pool", "fc256", "fc256", "fc10"]
        );
        assert_eq!(spec.output_shape(0).unwrap(), Shape3::new(32, 32, 64));
    }

    #[test]
    fn parameter_counts_near_published() {
        let expect = [("conv6", 2.3e6), ("resnet20", 270e3), ("resnet32", 460e3), ("wide_resnet28_2", 1.4e6)];
        for (name, approx) in expect {
            let n = architecture(name).unwrap().total_params() as f64;
            let tol = if name == "conv6" { 0.02 } else { 0.06 };
            assert!((n / approx - 1.0).abs() < tol, "{name}: {n}");
        }
    }

    #[test]
    fn conv_param_formula() {
        let spec = architecture("conv6").unwrap();
        for l in spec.layers() {
            if let LayerSpec::Conv(c) = l {
                assert_eq!(l.weight_count(), c.c_out * c.c_in * c.kernel_h * c.kernel_w);
            }
        }
    }
}

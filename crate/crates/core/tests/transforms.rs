use censemble::imageio::NormalizedImage;
use censemble::transforms::{apply_transform, lookup, REGISTRY};
use proptest::prelude::*;

fn image(w: usize, h: usize, seed: u64) -> NormalizedImage {
    let mut s = seed | 1;
    NormalizedImage::from_fn(w, h, |x, y| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        // smooth base plus noise so quantizers see real structure
        let base = ((x * 5 + y * 3) % 256) as u8;
        [base.wrapping_add(s as u8 % 40), (s >> 8) as u8, base / 2 + (s >> 16) as u8 % 64]
    })
}

const IDEMPOTENT: &[&str] = &["colors_grayscale", "colors_quantize_bw", "colors_quantize3", "colors_quantize5"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fixed_parameter_transforms_are_idempotent(w in 8usize..48, h in 8usize..48, seed in any::<u64>()) {
        let img = image(w, h, seed);
        for id in IDEMPOTENT {
            let spec = lookup(id).unwrap().default_spec();
            let once = apply_transform(&spec, &img, 1).unwrap();
            let twice = apply_transform(&spec, &once, 1).unwrap();
            prop_assert_eq!(once.as_bytes(), twice.as_bytes(), "{}", id);
        }
    }

    #[test]
    fn grayscale_output_is_gray(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
        let spec = lookup("colors_grayscale").unwrap().default_spec();
        prop_assert!(apply_transform(&spec, &image(w, h, seed), 1).unwrap().is_gray());
    }
}

#[test]
fn every_transform_is_deterministic() {
    let img = image(40, 30, 77);
    for def in REGISTRY.iter() {
        let spec = def.default_spec();
        let a = apply_transform(&spec, &img, 9).unwrap();
        let b = apply_transform(&spec, &img, 9).unwrap();
        assert_eq!(a.as_bytes(), b.as_bytes(), "{}", def.id);
        assert!(a.width() > 0 && a.height() > 0, "{}", def.id);
    }
}

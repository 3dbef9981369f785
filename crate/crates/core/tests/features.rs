use censemble::features::{
    box_counting, color_frequency_stats, colorfulness_rgb, compute_stats, contrast_stats, fractal_dimension,
    hough_angle_entropy, FractalSource, StatConfig,
};
use censemble::imageio::NormalizedImage;

/// Level-`n` carpet mask on a 3^n grid; `true` marks filled cells.
fn carpet(n: u32) -> (Vec<bool>, usize) {
    let side = 3usize.pow(n);
    let mut mask = vec![true; side * side];
    for y in 0..side {
        for x in 0..side {
            let (mut a, mut b) = (x, y);
            while a > 0 || b > 0 {
                if a % 3 == 1 && b % 3 == 1 {
                    mask[y * side + x] = false;
                    break;
                }
                a /= 3;
                b /= 3;
            }
        }
    }
    (mask, side)
}

fn mask_image(mask: &[bool], side: usize) -> NormalizedImage {
    NormalizedImage::from_fn(side, side, |x, y| if mask[y * side + x] { [0; 3] } else { [255; 3] })
}

#[test]
fn sierpinski_carpet_dimension() {
    let (mask, side) = carpet(5);
    let expect = 8f64.ln() / 3f64.ln();
    let d = box_counting(&mask, side, side, side, side).unwrap();
    assert!((d - expect).abs() < 0.1, "{d} vs {expect}");
    // dark pixels are the bilevel foreground
    let img = mask_image(&mask, side);
    let d = fractal_dimension(&img, 1.0, 1.0, FractalSource::Bilevel, &StatConfig::default()).unwrap();
    assert!((d - 1.8928).abs() < 0.1, "{d}");
}

#[test]
fn square_and_line_dimensions_from_images() {
    let cfg = StatConfig::default();
    let square = NormalizedImage::filled(256, 256, [0; 3]);
    let d = fractal_dimension(&square, 1.0, 1.0, FractalSource::Bilevel, &cfg).unwrap();
    assert!((d - 2.0).abs() < 0.1, "{d}");
    let line = NormalizedImage::from_fn(256, 256, |_, y| if y == 128 { [0; 3] } else { [255; 3] });
    let d = fractal_dimension(&line, 1.0, 1.0, FractalSource::Bilevel, &cfg).unwrap();
    assert!((d - 1.0).abs() < 0.15, "{d}");
}

/// Opponent-channel colorfulness computed directly from the definition.
fn hasler_m3(pixels: &[[f64; 3]]) -> f64 {
    let n = pixels.len() as f64;
    let rg: Vec<f64> = pixels.iter().map(|p| p[0] - p[1]).collect();
    let yb: Vec<f64> = pixels.iter().map(|p| 0.5 * (p[0] + p[1]) - p[2]).collect();
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
    };
    let ((mrg, srg), (myb, syb)) = (stats(&rg), stats(&yb));
    (srg * srg + syb * syb).sqrt() + 0.3 * (mrg * mrg + myb * myb).sqrt()
}

#[test]
fn colorfulness_matches_definition() {
    let half = NormalizedImage::from_fn(20, 10, |x, _| if x < 10 { [255, 0, 0] } else { [0, 255, 0] });
    let px: Vec<[f64; 3]> = half.pixels().map(|p| p.map(f64::from)).collect();
    assert!((hasler_m3(&px) - 293.25).abs() < 1e-9);
    assert!((colorfulness_rgb(&half) - 293.25).abs() < 1e-6);
    let red = NormalizedImage::filled(10, 10, [255, 0, 0]);
    assert!((colorfulness_rgb(&red) - 85.529).abs() < 1e-3);
    let odd = NormalizedImage::from_fn(17, 9, |x, y| [(x * 15) as u8, (y * 28) as u8, ((x * y) % 256) as u8]);
    let px: Vec<[f64; 3]> = odd.pixels().map(|p| p.map(f64::from)).collect();
    assert!((colorfulness_rgb(&odd) - hasler_m3(&px)).abs() < 1e-9);
}

#[test]
fn contrast_and_entropy_fixtures() {
    let bw = NormalizedImage::from_fn(40, 40, |x, _| if x % 2 == 0 { [0; 3] } else { [255; 3] });
    assert!((contrast_stats(&bw, 200).range - 100.0).abs() < 0.5);
    let four = NormalizedImage::from_fn(8, 8, |x, y| [[10, 10, 10], [200, 0, 0], [0, 200, 0], [0, 0, 200]][(x + y) % 4]);
    assert!((color_frequency_stats(&four, 200).entropy - 2.0).abs() < 1e-9);
}

#[test]
fn hough_entropy_orders_line_structure() {
    let cfg = StatConfig::default();
    let one = NormalizedImage::from_fn(200, 200, |_, y| if (99..=101).contains(&y) { [0; 3] } else { [255; 3] });
    let grid = NormalizedImage::from_fn(200, 200, |x, y| {
        if (99..=101).contains(&y) || (99..=101).contains(&x) { [0; 3] } else { [255; 3] }
    });
    let (e1, e2) = (hough_angle_entropy(&one, &cfg), hough_angle_entropy(&grid, &cfg));
    assert!(e1 <= 0.5, "{e1}");
    assert!(e2 > e1, "{e2} <= {e1}");
    assert!(e2 <= (cfg.angle_bins as f64).log2());
}

#[test]
fn stat_vector_matches_names() {
    let cfg = StatConfig::default();
    let img = NormalizedImage::from_fn(120, 100, |x, y| [(x * 2) as u8, (y * 2) as u8, ((x + y) % 256) as u8]);
    let v = compute_stats(&img, &cfg).unwrap();
    assert_eq!(v.len(), cfg.names().len());
    assert!(v.iter().all(|x| x.is_finite()));
}

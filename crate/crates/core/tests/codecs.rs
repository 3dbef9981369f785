use censemble::codecs::CodecId;
use censemble::imageio::NormalizedImage;
use proptest::prelude::*;

fn decode_gif(bytes: &[u8]) -> (usize, usize, Vec<u8>) {
    let mut opts = gif::DecodeOptions::new();
    opts.set_color_output(gif::ColorOutput::RGBA);
    let mut d = opts.read_info(bytes).expect("gif header");
    let (w, h) = (d.width() as usize, d.height() as usize);
    let frame = d.read_next_frame().expect("gif frame").expect("one frame");
    let rgb = frame.buffer.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    (w, h, rgb)
}

fn decode_png(bytes: &[u8]) -> (usize, usize, Vec<u8>) {
    let mut d = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().expect("png header");
    let mut buf = vec![0; d.output_buffer_size().unwrap()];
    let info = d.next_frame(&mut buf).expect("png frame");
    assert_eq!(info.color_type, png::ColorType::Rgb);
    buf.truncate(info.buffer_size());
    (info.width as usize, info.height as usize, buf)
}

fn palette_image(w: usize, h: usize, colors: usize, seed: u64) -> NormalizedImage {
    let palette: Vec<[u8; 3]> = (0..colors as u64)
        .map(|i| {
            let v = (i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed;
            [(v >> 8) as u8, (v >> 24) as u8, (v >> 40) as u8]
        })
        .collect();
    NormalizedImage::from_fn(w, h, |x, y| {
        let k = ((x * 31 + y * 17) as u64 ^ seed.rotate_left((x % 7) as u32)) as usize;
        palette[k % colors]
    })
}

fn noise(w: usize, h: usize, seed: u64) -> NormalizedImage {
    let mut s = seed | 1;
    NormalizedImage::from_fn(w, h, |_, _| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        [s as u8, (s >> 8) as u8, (s >> 16) as u8]
    })
}

#[test]
fn gif_round_trips_palette_images() {
    for (colors, seed) in [(1, 1), (2, 7), (16, 3), (200, 11), (256, 5)] {
        let img = palette_image(97, 61, colors, seed);
        let (w, h, rgb) = decode_gif(&CodecId::Gif.encode(&img));
        assert_eq!((w, h), (97, 61));
        assert_eq!(rgb, img.as_bytes(), "{colors} colors");
    }
}

#[test]
fn gif_of_truecolor_noise_still_decodes() {
    let img = noise(120, 80, 42);
    let (w, h, rgb) = decode_gif(&CodecId::Gif.encode(&img));
    assert_eq!((w, h, rgb.len()), (120, 80, 120 * 80 * 3));
}

#[test]
fn png_round_trips_any_image() {
    for img in [noise(131, 67, 9), palette_image(40, 40, 3, 1), NormalizedImage::filled(1, 1, [1, 2, 3])] {
        let (w, h, rgb) = decode_png(&CodecId::Png.encode(&img));
        assert_eq!((w, h), (img.width(), img.height()));
        assert_eq!(rgb, img.as_bytes());
    }
}

#[test]
fn jpeg_streams_decode() {
    let img = noise(64, 48, 3);
    for c in [CodecId::Jpeg100, CodecId::Jpeg0] {
        let bytes = c.encode(&img);
        let dec = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg).expect("jpeg decodes");
        assert_eq!((dec.width(), dec.height()), (64, 48));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gif_lossless_below_257_colors(w in 1usize..60, h in 1usize..60, colors in 1usize..=256, seed in any::<u64>()) {
        let img = palette_image(w, h, colors, seed);
        let (dw, dh, rgb) = decode_gif(&CodecId::Gif.encode(&img));
        prop_assert_eq!((dw, dh), (w, h));
        prop_assert_eq!(rgb, img.as_bytes().to_vec());
    }

    #[test]
    fn png_lossless(w in 1usize..50, h in 1usize..50, seed in any::<u64>()) {
        let img = noise(w, h, seed);
        let (_, _, rgb) = decode_png(&CodecId::Png.encode(&img));
        prop_assert_eq!(rgb, img.as_bytes().to_vec());
    }

    #[test]
    fn size_equals_stream_length(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
        let img = noise(w, h, seed);
        for c in [CodecId::Gif, CodecId::Png, CodecId::Jpeg100, CodecId::Jpeg0] {
            prop_assert_eq!(c.size(&img), c.encode(&img).len());
        }
    }
}

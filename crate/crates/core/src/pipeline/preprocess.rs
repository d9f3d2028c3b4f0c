use crate::error::{Error, Result};
use crate::frame::Frame;

/// Round-half-up quantisation of a sample in [0, 255].
#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Bilinear sample at continuous pixel coordinates; coordinates are clamped to
/// the frame, which replicates edge pixels outside it.
#[inline]
pub(crate) fn sample_bilinear(f: &Frame, x: f64, y: f64, channel: usize) -> f64 {
    let max_x = (f.width() - 1) as f64;
    let max_y = (f.height() - 1) as f64;
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(f.width() - 1);
    let y1 = (y0 + 1).min(f.height() - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;

    let c = channel.min(f.channels() - 1);
    let at = |px: usize, py: usize| f.pixel(px, py)[c] as f64;
    let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Resizes the whole frame to `size`x`size` RGB (aspect ratio is not kept, no
/// crop). Bilinear interpolation with half-pixel centres, round-half-up.
/// Gray input is replicated to three channels.
pub fn preprocess(f: &Frame, size: usize) -> Result<Frame> {
    if f.is_empty() || size == 0 {
        return Err(Error::ZeroDimension);
    }
    let sx = f.width() as f64 / size as f64;
    let sy = f.height() as f64 / size as f64;
    let mut out = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        for x in 0..size {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            for c in 0..3 {
                out.push(quantize(sample_bilinear(f, src_x, src_y, c)));
            }
        }
    }
    Frame::new(size, size, 3, out, f.timestamp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frame_stays_constant() {
        let f = Frame::filled(640, 480, 3, 128, 1.5).unwrap();
        let out = preprocess(&f, 224).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (224, 224, 3));
        assert!(out.data().iter().all(|&v| v == 128));
        assert_eq!(out.timestamp, 1.5);
    }

    #[test]
    fn same_size_is_identity() {
        let data: Vec<u8> = (0..224 * 224 * 3).map(|i| (i * 31 % 251) as u8).collect();
        let f = Frame::new(224, 224, 3, data, 0.0).unwrap();
        assert_eq!(preprocess(&f, 224).unwrap(), f);
    }

    #[test]
    fn checkerboard_to_single_pixel() {
        let f = Frame::new(2, 2, 1, vec![0, 255, 255, 0], 0.0).unwrap();
        let out = preprocess(&f, 1).unwrap();
        // Centre of the 2x2 grid averages all four: 127.5, rounded half up.
        assert_eq!(out.data(), &[128, 128, 128]);
    }

    #[test]
    fn gray_is_expanded() {
        let f = Frame::filled(10, 10, 1, 42, 0.0).unwrap();
        let out = preprocess(&f, 10).unwrap();
        assert_eq!(out.channels(), 3);
        assert!(out.data().iter().all(|&v| v == 42));
    }

    #[test]
    fn zero_dimension_rejected() {
        let f = Frame::new(0, 10, 3, vec![], 0.0).unwrap();
        assert!(matches!(preprocess(&f, 224), Err(Error::ZeroDimension)));
    }
}

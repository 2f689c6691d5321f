//! Binary morphology with a 3×3 square structuring element.
//!
//! Pixels outside the image read as background, so erosion always clears the
//! one-pixel border.

use super::BinaryMask;

pub fn erode(mask: &BinaryMask) -> BinaryMask {
    let mut out = BinaryMask::empty(mask.width, mask.height);
    for y in 0..mask.height as i32 {
        for x in 0..mask.width as i32 {
            let keep = (-1..=1).all(|dy| (-1..=1).all(|dx| mask.get_signed(x + dx, y + dy)));
            if keep {
                out.set(x as u32, y as u32, true);
            }
        }
    }
    out
}

pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    dilate_square(mask, 1)
}

/// Dilation by a `(2r+1)`×`(2r+1)` square, done as two separable passes.
pub fn dilate_square(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let r = radius as usize;
    let mut horizontal = vec![false; w * h];
    for y in 0..h {
        let row = &mask.bits[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            horizontal[y * w + x] = row[lo..=hi].iter().any(|&b| b);
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi).any(|yy| horizontal[yy * w + x]);
        }
    }
    BinaryMask::new(mask.width, mask.height, out)
}

/// Erosion followed by dilation; removes specks smaller than the element.
pub fn morph_open(mask: &BinaryMask) -> BinaryMask {
    dilate(&erode(mask))
}

/// Dilation followed by erosion; fills pinholes.
pub fn morph_close(mask: &BinaryMask) -> BinaryMask {
    erode(&dilate(mask))
}

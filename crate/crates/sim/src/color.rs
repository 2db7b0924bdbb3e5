//! RGB ⇄ HSV conversion on unit-range channels.

/// Converts RGB in `[0,1]` to `(hue in turns [0,1), saturation, value)`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let sat = if max > 0.0 { delta / max } else { 0.0 };
    [hue, sat, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let h6 = h.rem_euclid(1.0) * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h6 % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Rotates the hue of an 8-bit color by `turns`.
pub fn shift_hue(rgb: [u8; 3], turns: f64) -> [u8; 3] {
    if turns == 0.0 {
        return rgb;
    }
    let unit = rgb.map(|c| c as f64 / 255.0);
    let [h, s, v] = rgb_to_hsv(unit);
    hsv_to_rgb([h + turns, s, v]).map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
}

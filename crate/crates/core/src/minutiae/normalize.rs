use crate::raster::GrayImage;

pub const TARGET_MEAN: f64 = 128.0;
pub const TARGET_STD: f64 = 48.0;

/// Piecewise mean/variance normalization to mean 128, std 48.
///
/// Pixels above the mean map to `M0 + sqrt(V0 (I - M)^2 / V)` and pixels
/// below to `M0 - sqrt(...)`. Constant images become all-128.
pub fn normalize(img: &GrayImage) -> GrayImage {
    let n = img.pixels().len().max(1) as f64;
    let mean = img.pixels().iter().map(|&p| p as f64).sum::<f64>() / n;
    let var = img
        .pixels()
        .iter()
        .map(|&p| (p as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    if var <= 0.0 {
        return GrayImage::filled(img.width(), img.height(), TARGET_MEAN as u8);
    }
    let gain = (TARGET_STD * TARGET_STD / var).sqrt();
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| {
            let d = p as f64 - mean;
            let v = if d > 0.0 {
                TARGET_MEAN + (d * d).sqrt() * gain
            } else {
                TARGET_MEAN - (d * d).sqrt() * gain
            };
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("same geometry")
}

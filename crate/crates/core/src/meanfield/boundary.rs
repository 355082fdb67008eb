use log::warn;

/// Predicted normal speed of a curved boundary of radius `radius`,
/// `r²/(9R)`, directed toward the center of curvature.
pub fn boundary_speed_prediction(radius: f64, r: f64) -> f64 {
    if radius < 5.0 * r {
        warn!("boundary radius {radius} < 5r = {}: outside the small-curvature regime", 5.0 * r);
    }
    r * r / (9.0 * radius)
}

/// Leading-order mean field on a circular boundary of radius `radius` when
/// the order parameter varies linearly across it with slope `gamma / r`:
/// the disk average of `(γ/r)(|c + ρ| - R)` over `|ρ| < r`, `|c| = R`,
/// which is `γ r / (8R) + O(r³/R³)`.
pub fn interface_mean_field(radius: f64, r: f64, gamma: f64) -> f64 {
    gamma * r / (8.0 * radius)
}

/// Proportionality constant `α = v·R` implied by the prediction.
pub fn predicted_alpha(r: f64) -> f64 {
    r * r / 9.0
}

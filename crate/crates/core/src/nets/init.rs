use gssl_autodiff::Tensor;
use rand::Rng;

/// Uniform Glorot/Xavier initialisation on `±sqrt(6 / (fan_in + fan_out))`,
/// with `fan_in = rows` and `fan_out = cols`.
pub fn glorot_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    assert!(rows > 0 && cols > 0, "glorot_init needs positive dims");
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

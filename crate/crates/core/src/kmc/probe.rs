use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::init::uniform_point;
use crate::model::{log_jump_rate, total_energy, Configuration, KernelSpec, TorusDomain};

/// Worst violation of `c(x,y,γ) e^{−E(γ)} = c(y,x,γ′) e^{−E(γ′)}` with `γ′ = γ∖x∪y`,
/// measured as `|log-ratio|` over random configurations.
///
/// Configurations are drawn uniformly in a box of side `2.5 × cutoff` so that
/// most pairs interact; targets `y` are drawn from the jump kernel around `x`.
pub fn detailed_balance_probe(
    n_trials: usize,
    n_particles: usize,
    kernels: &KernelSpec,
    seed: u64,
) -> f64 {
    if n_particles == 0 {
        return 0.0;
    }
    let side = 2.5 * kernels.cutoff_radius.max(f64::MIN_POSITIVE);
    let domain = TorusDomain::new(kernels.dim(), side).expect("positive side");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_trials {
        let gamma = Configuration::from_points(
            domain,
            (0..n_particles).map(|_| uniform_point(&domain, &mut rng)),
        );
        let i = rng.random_range(0..n_particles);
        let id = gamma.ids()[i];
        let x = gamma.points()[i];
        let y = loop {
            let r = kernels.jump.sample_radius(rng.random());
            let mut dir = [0.0; 3];
            let mut norm2 = 0.0;
            while norm2 < 1e-12 {
                for c in dir.iter_mut().take(domain.dim()) {
                    *c = 2.0 * rng.random::<f64>() - 1.0;
                }
                norm2 = dir.iter().map(|c| c * c).sum();
            }
            let s = r / norm2.sqrt();
            let y = domain.wrap([x[0] + s * dir[0], x[1] + s * dir[1], x[2] + s * dir[2]]);
            if kernels.a(&domain.min_image(&x, &y)) > 0.0 {
                break y;
            }
        };
        let after = gamma.jumped(id, y).expect("id is present");
        let lhs = log_jump_rate(&gamma, id, &y, kernels).expect("id is present")
            - total_energy(&gamma, kernels);
        let rhs = log_jump_rate(&after, id, &x, kernels).expect("id is present")
            - total_energy(&after, kernels);
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

//! Fixtures shared by the criterion targets.

use kawasaki_core::{KernelFamily, KernelSpec};

/// Top-hat jump kernel (height 0.5, range 1) and top-hat repulsion (height 0.5, range 0.5).
pub fn demo_spec(dim: usize) -> KernelSpec {
    KernelSpec::new(
        KernelFamily::TopHat {
            height: 0.5,
            range: 1.0,
        },
        KernelFamily::TopHat {
            height: 0.5,
            range: 0.5,
        },
        dim,
    )
    .expect("valid demo kernels")
}

//! Minimal network kernel: the attention-pooled value network, its exact
//! backward pass, the optimizer, and parameter serialization. 64-bit floats
//! throughout the pipeline; determinism and gradient-check fidelity beat
//! speed at this scale.

mod features;
mod io;
mod linear;
mod optimizer;
mod value;

pub use features::{featurize, FeatureRow, FEAT_DIM, ROBOT_FEAT_DIM, SENTINEL_DISTANCE};
pub use io::{
    load_weights, load_weights_expecting, save_weights, weights_from_bytes, weights_to_bytes,
};
pub use linear::{Linear, Mlp, MlpCache, MlpGrads};
pub use optimizer::{SgdConfig, SgdMomentum};
pub use value::{NnError, ValueArch, ValueCache, ValueGrads, ValueNetwork};

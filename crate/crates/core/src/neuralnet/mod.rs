//! From-scratch dense tensor math and the convolutional network: forward
//! pass, analytic backward pass, and SGD.

pub mod arch;
pub mod layers;
pub mod network;
pub mod sgd;
pub mod tensor;

pub use arch::{conv_pad, parse_architecture, LayerSpec, NetworkSpec, Shape};
pub use layers::{
    conv2d, conv2d_backward, fully_connected, fully_connected_backward, lrn, lrn_backward,
    max_pool, max_pool_backward, relu, relu_backward, softmax, softmax_cross_entropy,
};
pub use network::{
    backward, example_gradients, forward, input_gradient, load_checkpoint, save_checkpoint,
    Checkpoint, ForwardPass, ParamEntry, ParamSet,
};
pub use sgd::Sgd;
pub use tensor::Tensor;

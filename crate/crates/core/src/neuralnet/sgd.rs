//! Stochastic gradient descent with classical momentum and weight decay.

use super::network::{ParamEntry, ParamSet};

/// Momentum-SGD update state.
pub struct Sgd {
    velocity: ParamSet,
}

impl Sgd {
    pub fn new(like: &ParamSet) -> Self {
        Sgd {
            velocity: like.zeros_like(),
        }
    }

    pub fn velocity(&self) -> &ParamSet {
        &self.velocity
    }

    /// `v <- momentum*v - lr*(g + weight_decay*p); p <- p + v`
    pub fn step(
        &mut self,
        params: &mut ParamSet,
        grads: &ParamSet,
        lr: f64,
        momentum: f64,
        weight_decay: f64,
    ) {
        for ((p, g), v) in params
            .entries
            .iter_mut()
            .zip(&grads.entries)
            .zip(&mut self.velocity.entries)
        {
            let (
                ParamEntry::WeightBias {
                    weight: pw,
                    bias: pb,
                },
                ParamEntry::WeightBias {
                    weight: gw,
                    bias: gb,
                },
                ParamEntry::WeightBias {
                    weight: vw,
                    bias: vb,
                },
            ) = (p, g, v)
            else {
                continue;
            };
            for ((pv, &gv), vv) in pw.data_mut().iter_mut().zip(gw.data()).zip(vw.data_mut()) {
                *vv = momentum * *vv - lr * (gv + weight_decay * *pv);
                *pv += *vv;
            }
            for ((pv, &gv), vv) in pb.data_mut().iter_mut().zip(gb.data()).zip(vb.data_mut()) {
                *vv = momentum * *vv - lr * (gv + weight_decay * *pv);
                *pv += *vv;
            }
        }
    }
}

//! Architecture strings and shape inference.
//!
//! Grammar: `I` then any sequence of `C(stride,field,depth)`, `L`, `P`,
//! `F(units)`, closed by `O`. `P` is always a 3x3 max pool with stride 2;
//! `L` carries the standard LRN constants. The output width comes from the
//! task's class count, not the string.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// LRN constants used for every `L` layer.
pub const LRN_SIZE: usize = 5;
pub const LRN_K: f64 = 2.0;
pub const LRN_ALPHA: f64 = 1e-4;
pub const LRN_BETA: f64 = 0.75;

/// Max-pool geometry used for every `P` layer.
pub const POOL_WINDOW: usize = 3;
pub const POOL_STRIDE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Input,
    Conv {
        stride: usize,
        field: usize,
        depth: usize,
        pad: usize,
    },
    Lrn {
        n: usize,
        k: f64,
        alpha: f64,
        beta: f64,
    },
    MaxPool {
        window: usize,
        stride: usize,
    },
    FullyConnected {
        units: usize,
    },
    Output {
        classes: usize,
    },
}

/// Shape flowing between layers: a feature map or a flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Map { h: usize, w: usize, c: usize },
    Vec(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Map { h, w, c } => h * w * c,
            Shape::Vec(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub arch: String,
    pub input_shape: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

/// Convolution padding: `(field - stride) / 2`, clamped at zero.
/// For stride-1 layers this is "same" padding; for the stride-5/field-15
/// first layer it gives pad 5, so a 205x216 input divides cleanly.
pub fn conv_pad(field: usize, stride: usize) -> usize {
    field.saturating_sub(stride) / 2
}

fn conv_out(extent: usize, field: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = extent + 2 * pad;
    if padded < field {
        return None;
    }
    Some((padded - field) / stride + 1)
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> Error {
        Error::Arch(format!(
            "`{}` at position {}: {message}",
            self.src, self.pos
        ))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            Some(got) => Err(self.err(&format!("expected `{c}`, found `{got}`"))),
            None => Err(self.err(&format!("expected `{c}`, found end of string"))),
        }
    }

    fn number(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse()
            .map_err(|_| self.err(&format!("number `{text}` out of range")))
    }

    fn args(&mut self, n: usize) -> Result<Vec<usize>> {
        self.expect('(')?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(',')?;
            }
            out.push(self.number()?);
        }
        self.expect(')')?;
        Ok(out)
    }
}

/// Parse an architecture string and run shape inference against the given
/// input shape and class count.
pub fn parse_architecture(
    s: &str,
    input_shape: (usize, usize, usize),
    n_classes: usize,
) -> Result<NetworkSpec> {
    if n_classes == 0 {
        return Err(Error::Arch("class count must be positive".into()));
    }
    let mut p = Parser {
        chars: s.chars().collect(),
        pos: 0,
        src: s,
    };

    p.expect('I')?;
    let mut layers = vec![LayerSpec::Input];
    loop {
        match p.bump() {
            Some('C') => {
                let a = p.args(3)?;
                let (stride, field, depth) = (a[0], a[1], a[2]);
                if stride == 0 {
                    return Err(p.err("stride must be positive"));
                }
                if field == 0 || depth == 0 {
                    return Err(p.err("field and depth must be positive"));
                }
                let pad = conv_pad(field, stride);
                layers.push(LayerSpec::Conv {
                    stride,
                    field,
                    depth,
                    pad,
                });
            }
            Some('L') => layers.push(LayerSpec::Lrn {
                n: LRN_SIZE,
                k: LRN_K,
                alpha: LRN_ALPHA,
                beta: LRN_BETA,
            }),
            Some('P') => layers.push(LayerSpec::MaxPool {
                window: POOL_WINDOW,
                stride: POOL_STRIDE,
            }),
            Some('F') => {
                let a = p.args(1)?;
                if a[0] == 0 {
                    return Err(p.err("fully connected width must be positive"));
                }
                layers.push(LayerSpec::FullyConnected { units: a[0] });
            }
            Some('O') => {
                layers.push(LayerSpec::Output { classes: n_classes });
                break;
            }
            Some(c) => return Err(p.err(&format!("unexpected `{c}`"))),
            None => return Err(p.err("expected `O` before end of string")),
        }
    }
    if p.pos != p.chars.len() {
        return Err(p.err("trailing characters after `O`"));
    }

    let spec = NetworkSpec {
        arch: s.to_string(),
        input_shape,
        layers,
    };
    spec.shape_chain()?; // validate now; callers get the error with context
    Ok(spec)
}

impl NetworkSpec {
    pub fn n_classes(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Output { classes }) => *classes,
            _ => 0,
        }
    }

    /// Output shape of every layer, input layer included.
    pub fn shape_chain(&self) -> Result<Vec<Shape>> {
        let (h, w, c) = self.input_shape;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Shape("input shape must be positive".into()));
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = Shape::Map { h, w, c };
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match *layer {
                LayerSpec::Input => {
                    if i != 0 {
                        return Err(Error::Arch("input layer must come first".into()));
                    }
                    cur
                }
                LayerSpec::Conv {
                    stride,
                    field,
                    depth,
                    pad,
                } => {
                    let Shape::Map { h, w, .. } = cur else {
                        return Err(Error::Shape(format!(
                            "layer {i}: convolution needs a feature map input"
                        )));
                    };
                    if pad >= field {
                        return Err(Error::Shape(format!("layer {i}: pad must be < field")));
                    }
                    let oh = conv_out(h, field, stride, pad);
                    let ow = conv_out(w, field, stride, pad);
                    match (oh, ow) {
                        (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Shape::Map {
                            h: oh,
                            w: ow,
                            c: depth,
                        },
                        _ => {
                            return Err(Error::Shape(format!(
                                "layer {i}: {field}x{field} kernel does not fit {h}x{w} map"
                            )))
                        }
                    }
                }
                LayerSpec::Lrn { n, .. } => {
                    if n % 2 == 0 {
                        return Err(Error::Shape(format!("layer {i}: LRN size must be odd")));
                    }
                    match cur {
                        Shape::Map { .. } => cur,
                        _ => {
                            return Err(Error::Shape(format!(
                                "layer {i}: LRN needs a feature map input"
                            )))
                        }
                    }
                }
                LayerSpec::MaxPool { window, stride } => {
                    let Shape::Map { h, w, c } = cur else {
                        return Err(Error::Shape(format!(
                            "layer {i}: max pool needs a feature map input"
                        )));
                    };
                    if window > h || window > w {
                        return Err(Error::Shape(format!(
                            "layer {i}: {window}x{window} pool exceeds {h}x{w} map"
                        )));
                    }
                    Shape::Map {
                        h: (h - window) / stride + 1,
                        w: (w - window) / stride + 1,
                        c,
                    }
                }
                LayerSpec::FullyConnected { units } => Shape::Vec(units),
                LayerSpec::Output { classes } => {
                    if i + 1 != self.layers.len() {
                        return Err(Error::Arch("output layer must come last".into()));
                    }
                    Shape::Vec(classes)
                }
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL_ARCH: &str = "IC(5,15,64)LPC(1,5,64)LPF(384)F(192)O";

    #[test]
    fn default_architecture_parses_in_order() {
        let spec = parse_architecture(FULL_ARCH, (205, 216, 1), 9).unwrap();
        let kinds: Vec<&str> = spec
            .layers
            .iter()
            .map(|l| match l {
                LayerSpec::Input => "I",
                LayerSpec::Conv { .. } => "C",
                LayerSpec::Lrn { .. } => "L",
                LayerSpec::MaxPool { .. } => "P",
                LayerSpec::FullyConnected { .. } => "F",
                LayerSpec::Output { .. } => "O",
            })
            .collect();
        assert_eq!(
            kinds,
            vec!["I", "C", "L", "P", "C", "L", "P", "F", "F", "O"]
        );
        assert_eq!(
            spec.layers[1],
            LayerSpec::Conv {
                stride: 5,
                field: 15,
                depth: 64,
                pad: 5
            }
        );
        assert_eq!(
            spec.layers[4],
            LayerSpec::Conv {
                stride: 1,
                field: 5,
                depth: 64,
                pad: 2
            }
        );
    }

    #[test]
    fn default_shape_chain_resolves_exactly() {
        let spec = parse_architecture(FULL_ARCH, (205, 216, 1), 9).unwrap();
        let shapes = spec.shape_chain().unwrap();
        let expected = vec![
            Shape::Map {
                h: 205,
                w: 216,
                c: 1,
            },
            Shape::Map {
                h: 41,
                w: 43,
                c: 64,
            },
            Shape::Map {
                h: 41,
                w: 43,
                c: 64,
            },
            Shape::Map {
                h: 20,
                w: 21,
                c: 64,
            },
            Shape::Map {
                h: 20,
                w: 21,
                c: 64,
            },
            Shape::Map {
                h: 20,
                w: 21,
                c: 64,
            },
            Shape::Map { h: 9, w: 10, c: 64 },
            Shape::Vec(384),
            Shape::Vec(192),
            Shape::Vec(9),
        ];
        assert_eq!(shapes, expected);
        // FC(384) reads 9*10*64 = 5760 flattened inputs.
        assert_eq!(shapes[6].len(), 5760);
    }

    #[test]
    fn minimal_linear_classifier() {
        let spec = parse_architecture("IO", (8, 8, 1), 3).unwrap();
        assert_eq!(spec.layers.len(), 2);
        let shapes = spec.shape_chain().unwrap();
        assert_eq!(shapes.last(), Some(&Shape::Vec(3)));
    }

    #[test]
    fn zero_stride_is_rejected_with_position() {
        let err = parse_architecture("IC(0,3,8)O", (8, 8, 1), 3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stride must be positive"), "{msg}");
        assert!(msg.contains("position"), "{msg}");
    }

    #[test]
    fn grammar_violations_carry_position() {
        assert!(parse_architecture("XC(1,3,8)O", (8, 8, 1), 3).is_err());
        assert!(parse_architecture("IC(1,3)O", (8, 8, 1), 3).is_err());
        assert!(parse_architecture("IC(1,3,8)", (8, 8, 1), 3).is_err());
        assert!(parse_architecture("IC(1,3,8)OX", (8, 8, 1), 3).is_err());
        assert!(parse_architecture("IF(8)PO", (8, 8, 1), 3).is_err()); // pool after flatten
    }

    #[test]
    fn pool_larger_than_map_is_rejected() {
        // 4x4 input, stride-2 conv (pad 0) leaves 1x1; a 3x3 pool cannot fit.
        let err = parse_architecture("IC(2,3,4)PO", (4, 4, 1), 3).unwrap_err();
        assert!(err.to_string().contains("pool exceeds"), "{err}");
    }

    #[test]
    fn benchmark_net_shapes() {
        let spec = parse_architecture("IC(2,3,4)PF(8)O", (8, 8, 1), 3).unwrap();
        let shapes = spec.shape_chain().unwrap();
        assert_eq!(
            shapes,
            vec![
                Shape::Map { h: 8, w: 8, c: 1 },
                Shape::Map { h: 3, w: 3, c: 4 },
                Shape::Map { h: 1, w: 1, c: 4 },
                Shape::Vec(8),
                Shape::Vec(3),
            ]
        );
    }
}

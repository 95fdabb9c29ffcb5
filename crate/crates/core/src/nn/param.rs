use crate::error::Result;

/// How a parameter is initialised when no trained value exists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    FanInUniform { fan_in: usize },
    Zeros,
    Const(f32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamRequest {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamRequest {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, init: Init) -> Self {
        Self {
            name: name.into(),
            shape,
            init,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Supplies named parameter tensors to layer constructors.
pub trait ParamSource {
    fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>>;
}

/// Records every request and answers with the deterministic part of the
/// initialisation (zeros for random tensors). Building a network against a
/// recorder yields its complete parameter manifest.
#[derive(Debug, Default)]
pub struct Recorder {
    pub requests: Vec<ParamRequest>,
}

impl ParamSource for Recorder {
    fn fetch(&mut self, req: ParamRequest) -> Result<Vec<f32>> {
        let value = match req.init {
            Init::Const(c) => c,
            Init::Zeros | Init::FanInUniform { .. } => 0.0,
        };
        let out = vec![value; req.numel()];
        self.requests.push(req);
        Ok(out)
    }
}

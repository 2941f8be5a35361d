use super::adam::{adabelief_step, adam_step, MomentState};
use super::adaterm::{adaterm_step, AdaTermState};
use super::config::{Algorithm, OptimizerConfig};
use super::tadam::{tadam_step, TMomentState};
use crate::checkpoint;
use crate::error::{ensure_finite, Error, Result};
use crate::model::MlpModel;
use crate::numerics::DenseArray;
use crate::tdist::{StepDiagnostics, TDistState};

#[derive(Debug, Clone, PartialEq)]
pub enum GroupState {
    AdaTerm(AdaTermState),
    Adam(MomentState),
    AdaBelief(MomentState),
    TAdam(TMomentState),
}

impl GroupState {
    pub fn new(d: usize, cfg: &OptimizerConfig) -> Result<Self> {
        Ok(match cfg.algorithm {
            Algorithm::AdaTerm => Self::AdaTerm(AdaTermState::new(d, cfg)?),
            Algorithm::Adam => Self::Adam(MomentState::new(d)),
            Algorithm::AdaBelief => Self::AdaBelief(MomentState::new(d)),
            Algorithm::TAdam => Self::TAdam(TMomentState::new(d, cfg.beta1)),
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Self::AdaTerm(_) => Algorithm::AdaTerm,
            Self::Adam(_) => Algorithm::Adam,
            Self::AdaBelief(_) => Algorithm::AdaBelief,
            Self::TAdam(_) => Algorithm::TAdam,
        }
    }

    /// Current `ν̃` for AdaTerm groups.
    pub fn nu_tilde(&self) -> Option<f64> {
        match self {
            Self::AdaTerm(s) => Some(s.estimator.nu_tilde()),
            _ => None,
        }
    }

    const MAGIC: &'static [u8; 4] = b"ATOS";
    const VERSION: u8 = 1;

    /// Optimizer checkpoint: the framed float layout tagged with the algorithm.
    pub fn to_bytes(&self) -> Vec<u8> {
        let floats = match self {
            Self::AdaTerm(s) => {
                let mut f = s.estimator.to_floats();
                f.push(s.bias);
                f
            }
            Self::Adam(s) | Self::AdaBelief(s) => {
                let mut f = vec![s.m.len() as f64, s.t as f64];
                f.extend_from_slice(&s.m);
                f.extend_from_slice(&s.v);
                f
            }
            Self::TAdam(s) => {
                let mut f = vec![s.m.len() as f64, s.t as f64, s.weight_sum];
                f.extend_from_slice(&s.m);
                f.extend_from_slice(&s.v);
                f
            }
        };
        checkpoint::encode(Self::MAGIC, Self::VERSION, self.algorithm().tag(), &floats)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (tag, f) = checkpoint::decode(Self::MAGIC, Self::VERSION, bytes)?;
        let algorithm = Algorithm::from_tag(tag)
            .ok_or_else(|| Error::Checkpoint(format!("unknown algorithm tag {tag}")))?;
        let moments = |f: &[f64], offset: usize| -> Result<(usize, u64, Vec<f64>, Vec<f64>)> {
            let d = checkpoint::as_count(*f.first().unwrap_or(&-1.0), "dimension")?;
            let t = checkpoint::as_count(*f.get(1).unwrap_or(&-1.0), "step")? as u64;
            if f.len() != offset + 2 * d {
                return Err(Error::Checkpoint(format!("expected {} values, found {}", offset + 2 * d, f.len())));
            }
            Ok((d, t, f[offset..offset + d].to_vec(), f[offset + d..].to_vec()))
        };
        Ok(match algorithm {
            Algorithm::AdaTerm => {
                let (bias, rest) = f
                    .split_last()
                    .ok_or_else(|| Error::Checkpoint("empty AdaTerm record".into()))?;
                Self::AdaTerm(AdaTermState {
                    estimator: TDistState::from_floats(rest)?,
                    bias: *bias,
                })
            }
            Algorithm::Adam | Algorithm::AdaBelief => {
                let (_, t, m, v) = moments(&f, 2)?;
                let s = MomentState { m, v, t };
                if algorithm == Algorithm::Adam {
                    Self::Adam(s)
                } else {
                    Self::AdaBelief(s)
                }
            }
            Algorithm::TAdam => {
                let (_, t, m, v) = moments(&f, 3)?;
                Self::TAdam(TMomentState {
                    m,
                    v,
                    weight_sum: f[2],
                    t,
                })
            }
        })
    }
}

/// What one optimizer step did to a group.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Update direction; the parameters moved by `−lr · eta`.
    pub eta: Vec<f64>,
    pub lr: f64,
    pub diagnostics: Option<StepDiagnostics>,
}

/// A named block of parameters with its own gradient slot and optimizer state.
#[derive(Debug, Clone)]
pub struct ParamGroup {
    pub id: String,
    pub values: DenseArray,
    pub grad: DenseArray,
    pub state: GroupState,
}

impl ParamGroup {
    pub fn new(id: impl Into<String>, values: DenseArray, cfg: &OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        let grad = DenseArray::zeros(values.shape().to_vec());
        let state = GroupState::new(values.len(), cfg)?;
        Ok(Self {
            id: id.into(),
            values,
            grad,
            state,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn set_grad(&mut self, grad: &[f64]) -> Result<()> {
        crate::error::ensure_len(self.dim(), grad.len())?;
        self.grad.as_mut_slice().copy_from_slice(grad);
        Ok(())
    }

    pub fn step(&mut self, cfg: &OptimizerConfig) -> Result<StepReport> {
        match cfg.algorithm {
            Algorithm::AdaTerm => adaterm_step(self, cfg),
            Algorithm::Adam => adam_step(self, cfg),
            Algorithm::AdaBelief => adabelief_step(self, cfg),
            Algorithm::TAdam => tadam_step(self, cfg),
        }
    }

    pub(crate) fn check_gradient(&self) -> Result<()> {
        crate::error::ensure_len(self.dim(), self.grad.len())?;
        ensure_finite(self.grad.as_slice(), "gradient")
    }

    pub(crate) fn apply(&mut self, eta: &[f64], lr: f64, weight_decay: f64) {
        let decay = 1.0 - lr * weight_decay;
        for (x, e) in self.values.as_mut_slice().iter_mut().zip(eta) {
            if weight_decay > 0.0 {
                *x *= decay;
            }
            *x -= lr * e;
        }
    }
}

/// One weight group and one bias group per layer, in layer order.
pub fn make_param_groups(model: &MlpModel, cfg: &OptimizerConfig) -> Result<Vec<ParamGroup>> {
    let mut groups = Vec::with_capacity(2 * model.layers().len());
    for (i, layer) in model.layers().iter().enumerate() {
        let w = DenseArray::new(vec![layer.outputs(), layer.inputs()], layer.weight().to_vec())?;
        groups.push(ParamGroup::new(format!("layer{i}.weight"), w, cfg)?);
        groups.push(ParamGroup::new(
            format!("layer{i}.bias"),
            DenseArray::from_vec(layer.bias().to_vec()),
            cfg,
        )?);
    }
    Ok(groups)
}

/// A configuration together with the groups it drives.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub groups: Vec<ParamGroup>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, groups: Vec<ParamGroup>) -> Result<Self> {
        config.validate()?;
        if let Some(g) = groups.iter().find(|g| g.state.algorithm() != config.algorithm) {
            return Err(Error::param(format!(
                "group `{}` was built for {}, optimizer is {}",
                g.id,
                g.state.algorithm(),
                config.algorithm
            )));
        }
        Ok(Self { config, groups })
    }

    pub fn for_model(config: OptimizerConfig, model: &MlpModel) -> Result<Self> {
        let groups = make_param_groups(model, &config)?;
        Self::new(config, groups)
    }

    /// Steps every group; gradients must already be in place. All gradients
    /// are checked before any group moves.
    pub fn step(&mut self) -> Result<Vec<StepReport>> {
        for g in &self.groups {
            g.check_gradient()?;
        }
        let cfg = &self.config;
        self.groups.iter_mut().map(|g| g.step(cfg)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn group_layout_for_regression_mlp() {
        let mut rng = Rng::new(0);
        let model = MlpModel::new(&[1, 50, 50, 50, 50, 1], &mut rng).unwrap();
        let groups = make_param_groups(&model, &OptimizerConfig::adaterm()).unwrap();
        let sizes: Vec<usize> = groups.iter().map(ParamGroup::dim).collect();
        assert_eq!(sizes, vec![50, 50, 2500, 50, 2500, 50, 2500, 50, 50, 1]);
        assert_eq!(sizes.iter().sum::<usize>(), model.parameter_count());
        assert_eq!(groups[0].id, "layer0.weight");
        assert_eq!(groups[9].id, "layer4.bias");
    }

    #[test]
    fn empty_model_has_no_groups() {
        let model = MlpModel::empty();
        assert!(make_param_groups(&model, &OptimizerConfig::adam()).unwrap().is_empty());
    }

    #[test]
    fn group_order_does_not_change_trajectories() {
        let cfg = OptimizerConfig::adaterm().with_alpha(0.01);
        let mut rng = Rng::new(6);
        let a = ParamGroup::new("a", DenseArray::from_vec(vec![1.0, 2.0]), &cfg).unwrap();
        let b = ParamGroup::new("b", DenseArray::from_vec(vec![-1.0, 0.5, 3.0]), &cfg).unwrap();
        let mut fwd = Optimizer::new(cfg.clone(), vec![a.clone(), b.clone()]).unwrap();
        let mut rev = Optimizer::new(cfg, vec![b, a]).unwrap();
        for _ in 0..100 {
            let ga: Vec<f64> = (0..2).map(|_| rng.standard_normal()).collect();
            let gb: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            fwd.groups[0].set_grad(&ga).unwrap();
            fwd.groups[1].set_grad(&gb).unwrap();
            rev.groups[1].set_grad(&ga).unwrap();
            rev.groups[0].set_grad(&gb).unwrap();
            fwd.step().unwrap();
            rev.step().unwrap();
        }
        assert_eq!(fwd.groups[0].values, rev.groups[1].values);
        assert_eq!(fwd.groups[1].values, rev.groups[0].values);
    }

    #[test]
    fn optimizer_rejects_mixed_groups() {
        let adam = ParamGroup::new("x", DenseArray::zeros(vec![2]), &OptimizerConfig::adam()).unwrap();
        assert!(Optimizer::new(OptimizerConfig::adaterm(), vec![adam]).is_err());
    }

    #[test]
    fn weight_decay_is_applied_before_the_step() {
        let mut cfg = OptimizerConfig::adam().with_alpha(0.1);
        cfg.weight_decay = 0.5;
        let mut g = ParamGroup::new("x", DenseArray::from_vec(vec![2.0]), &cfg).unwrap();
        g.set_grad(&[0.0]).unwrap();
        g.step(&cfg).unwrap();
        assert!((g.values.as_slice()[0] - 2.0 * 0.95).abs() < 1e-15);
    }

    #[test]
    fn state_checkpoints_round_trip() {
        let mut rng = Rng::new(10);
        for algorithm in Algorithm::ALL {
            let cfg = OptimizerConfig::new(algorithm);
            let mut g = ParamGroup::new("x", DenseArray::zeros(vec![3]), &cfg).unwrap();
            for _ in 0..5 {
                let grad: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
                g.set_grad(&grad).unwrap();
                g.step(&cfg).unwrap();
            }
            let bytes = g.state.to_bytes();
            assert_eq!(bytes[5], algorithm.tag());
            assert_eq!(GroupState::from_bytes(&bytes).unwrap(), g.state);
        }
        assert!(GroupState::from_bytes(b"ATOS\x01\x09\0\0\0\0\0\0\0\0").is_err());
    }
}

use crate::error::{dim_err, Error, Result};
use crate::nn::{Init, LayerKind, LayerSpec, ParamRequest, ParamSource, Tensor};

/// Causal attention over S-TCM group outputs.
///
/// Each group output is pooled to a scalar per frame, a `G x G` projection
/// turns the pooled vector into scores, and the softmax-weighted sum of the
/// groups is added to the last group's output. Nothing outside the current
/// frame is read.
#[derive(Clone, Debug)]
pub struct Caham {
    groups: usize,
    /// row-major `[score, descriptor]`
    proj: Vec<f32>,
    bias: Vec<f32>,
}

impl Caham {
    pub fn new(groups: usize, proj: &[f32], bias: &[f32]) -> Result<Self> {
        if groups < 2 {
            return Err(Error::Config(format!(
                "attention needs at least 2 groups, got {groups}"
            )));
        }
        if proj.len() != groups * groups || bias.len() != groups {
            return dim_err(format!(
                "attention projection for {groups} groups got {} weights and {} biases",
                proj.len(),
                bias.len()
            ));
        }
        Ok(Self {
            groups,
            proj: proj.to_vec(),
            bias: bias.to_vec(),
        })
    }

    pub fn load(src: &mut dyn ParamSource, prefix: &str, groups: usize) -> Result<Self> {
        let proj = src.fetch(ParamRequest::new(
            format!("{prefix}.proj.kernel"),
            vec![groups, groups],
            Init::FanInUniform { fan_in: groups },
        ))?;
        let bias = src.fetch(ParamRequest::new(
            format!("{prefix}.proj.bias"),
            vec![groups],
            Init::Zeros,
        ))?;
        Caham::new(groups, &proj, &bias)
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            kind: LayerKind::Caham,
            in_ch: self.groups,
            out_ch: self.groups,
            kernel: (1, 1),
            stride: (1, 1),
            dilation: 1,
            norm: false,
            act: false,
        }
    }

    fn check_frames(&self, frames: &[&[f32]]) -> Result<usize> {
        if frames.len() != self.groups {
            return dim_err(format!(
                "attention expects {} group outputs, got {}",
                self.groups,
                frames.len()
            ));
        }
        let width = frames[0].len();
        if width == 0 || frames.iter().any(|f| f.len() != width) {
            return dim_err("group outputs differ in shape");
        }
        Ok(width)
    }

    /// Softmax weights for one frame of group outputs.
    pub fn attention(&self, frames: &[&[f32]]) -> Result<Vec<f64>> {
        let width = self.check_frames(frames)?;
        let pooled: Vec<f64> = frames
            .iter()
            .map(|f| f.iter().map(|&v| v as f64).sum::<f64>() / width as f64)
            .collect();
        let scores: Vec<f64> = (0..self.groups)
            .map(|g| {
                let row = &self.proj[g * self.groups..(g + 1) * self.groups];
                self.bias[g] as f64
                    + row.iter().zip(&pooled).map(|(&w, &p)| w as f64 * p).sum::<f64>()
            })
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / total).collect())
    }

    pub fn step(&self, frames: &[&[f32]]) -> Result<Vec<f32>> {
        let w = self.attention(frames)?;
        let last = frames[self.groups - 1];
        Ok((0..last.len())
            .map(|i| {
                let mix: f64 = frames.iter().zip(&w).map(|(f, &wg)| wg * f[i] as f64).sum();
                (mix + last[i] as f64) as f32
            })
            .collect())
    }

    pub fn forward(&self, groups: &[Tensor]) -> Result<Tensor> {
        if groups.len() != self.groups {
            return dim_err(format!(
                "attention expects {} group outputs, got {}",
                self.groups,
                groups.len()
            ));
        }
        let (t, f, c) = (groups[0].frames(), groups[0].freq(), groups[0].channels());
        if groups
            .iter()
            .any(|g| g.frames() != t || g.freq() != f || g.channels() != c)
        {
            return dim_err("group outputs differ in shape");
        }
        let mut data = Vec::with_capacity(t * f * c);
        for frame in 0..t {
            let frames: Vec<&[f32]> = groups.iter().map(|g| g.frame(frame)).collect();
            data.extend(self.step(&frames)?);
        }
        Ok(Tensor::from_raw(t, f, c, data))
    }

    /// Projection plus weighted sum for `width` values per group.
    pub fn macs_per_frame(&self, width: usize) -> u64 {
        (self.groups * self.groups + self.groups * width) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testutil::{random_tensor, random_vec, RandomParams};

    #[test]
    fn repeated_group_with_symmetric_weights_is_uniform() {
        let att = Caham::new(4, &[0.3; 16], &[0.1; 4]).unwrap();
        let y = random_tensor(5, 1, 10, 1);
        let groups = vec![y.clone(); 4];
        for t in 0..5 {
            let frames: Vec<&[f32]> = groups.iter().map(|g| g.frame(t)).collect();
            for w in att.attention(&frames).unwrap() {
                assert!((w - 0.25).abs() < 1e-12);
            }
        }
        let out = att.forward(&groups).unwrap();
        for (o, &v) in out.data().iter().zip(y.data()) {
            assert!((o - 2.0 * v).abs() <= 1e-6 * v.abs().max(1.0));
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let att = Caham::load(&mut RandomParams::new(2), "a", 4).unwrap();
        let groups: Vec<Tensor> = (0..4).map(|g| random_tensor(20, 5, 8, 10 + g)).collect();
        for t in 0..20 {
            let frames: Vec<&[f32]> = groups.iter().map(|g| g.frame(t)).collect();
            let w = att.attention(&frames).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(w.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn output_matches_explicit_mixture() {
        let proj = random_vec(9, 3);
        let bias = random_vec(3, 4);
        let att = Caham::new(3, &proj, &bias).unwrap();
        let groups: Vec<Vec<f32>> = (0..3).map(|g| random_vec(6, 20 + g)).collect();
        let frames: Vec<&[f32]> = groups.iter().map(|g| g.as_slice()).collect();
        let pooled: Vec<f64> = groups
            .iter()
            .map(|g| g.iter().map(|&v| v as f64).sum::<f64>() / 6.0)
            .collect();
        let scores: Vec<f64> = (0..3)
            .map(|i| bias[i] as f64 + (0..3).map(|j| proj[i * 3 + j] as f64 * pooled[j]).sum::<f64>())
            .collect();
        let z: f64 = scores.iter().map(|s| s.exp()).sum();
        let out = att.step(&frames).unwrap();
        for i in 0..6 {
            let want: f64 = (0..3).map(|g| scores[g].exp() / z * groups[g][i] as f64).sum::<f64>()
                + groups[2][i] as f64;
            assert!((out[i] as f64 - want).abs() < 1e-6);
        }
    }

    #[test]
    fn is_frame_local() {
        let att = Caham::load(&mut RandomParams::new(7), "a", 2).unwrap();
        let groups: Vec<Tensor> = (0..2).map(|g| random_tensor(8, 1, 4, g)).collect();
        let base = att.forward(&groups).unwrap();
        let mut changed = groups.clone();
        changed[0].frame_mut(5).iter_mut().for_each(|v| *v += 3.0);
        let out = att.forward(&changed).unwrap();
        for t in 0..8 {
            assert_eq!(base.frame(t) == out.frame(t), t != 5, "frame {t}");
        }
    }

    #[test]
    fn shape_errors() {
        assert!(Caham::new(1, &[0.0], &[0.0]).is_err());
        assert!(Caham::new(2, &[0.0; 3], &[0.0; 2]).is_err());
        let att = Caham::new(2, &[0.0; 4], &[0.0; 2]).unwrap();
        assert!(att.step(&[&[1.0, 2.0], &[1.0]]).is_err());
        assert!(att.step(&[&[1.0]]).is_err());
        let a = random_tensor(3, 1, 4, 0);
        let b = random_tensor(4, 1, 4, 0);
        assert!(att.forward(&[a, b]).is_err());
    }
}

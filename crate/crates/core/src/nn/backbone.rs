use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mff::{param_count, MffConfig};

pub const TOTAL_FUSION_BLOCKS: usize = 8;
pub const STAGE_KERNELS: [usize; 3] = [3, 5, 7];
pub const LAST_STAGE_KERNELS: [usize; 4] = [3, 5, 7, 9];
pub const FIRST_FUSION_STAGE: usize = 2;
pub const LAST_FUSION_STAGE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub stage: usize,
    pub blocks: usize,
    pub kernels: Vec<usize>,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneDescriptor {
    pub stages: Vec<StageSpec>,
}

impl BackboneDescriptor {
    /// Stages 2–5 with the given widths and per-stage block counts.
    pub fn reference(widths: [usize; 4], blocks: [usize; 4]) -> Self {
        let stages = (0..4)
            .map(|i| StageSpec {
                stage: FIRST_FUSION_STAGE + i,
                blocks: blocks[i],
                kernels: if i == 3 {
                    LAST_STAGE_KERNELS.to_vec()
                } else {
                    STAGE_KERNELS.to_vec()
                },
                channels: widths[i],
            })
            .collect();
        BackboneDescriptor { stages }
    }

    pub fn total_blocks(&self) -> usize {
        self.stages.iter().map(|s| s.blocks).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNetwork(m));
        let mut seen = [false; LAST_FUSION_STAGE + 1];
        for s in &self.stages {
            if !(FIRST_FUSION_STAGE..=LAST_FUSION_STAGE).contains(&s.stage) {
                return bad(format!(
                    "stage {} outside {FIRST_FUSION_STAGE}..={LAST_FUSION_STAGE}",
                    s.stage
                ));
            }
            if std::mem::replace(&mut seen[s.stage], true) {
                return bad(format!("stage {} listed twice", s.stage));
            }
            let expected: &[usize] = if s.stage == LAST_FUSION_STAGE {
                &LAST_STAGE_KERNELS
            } else {
                &STAGE_KERNELS
            };
            if s.kernels != expected {
                return bad(format!(
                    "stage {} uses kernel sequence {:?}, expected {:?}",
                    s.stage, s.kernels, expected
                ));
            }
            if s.channels == 0 {
                return bad(format!("stage {} has zero channels", s.stage));
            }
        }
        let total = self.total_blocks();
        if total != TOTAL_FUSION_BLOCKS {
            return bad(format!(
                "backbone has {total} fusion blocks, expected {TOTAL_FUSION_BLOCKS}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub blocks: usize,
    pub kernels: Vec<usize>,
    pub channels: usize,
    pub params_per_block: usize,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneReport {
    pub stages: Vec<StageReport>,
    pub total_blocks: usize,
    /// Fusion-block parameters only; stems, heads and the (parameter-free)
    /// downsamplers are not counted.
    pub total_params: usize,
}

pub fn describe_backbone(descriptor: &BackboneDescriptor) -> Result<BackboneReport> {
    descriptor.validate()?;
    let stages: Vec<StageReport> = descriptor
        .stages
        .iter()
        .map(|s| {
            let per_block = param_count(&MffConfig::zeros(s.channels, &s.kernels));
            StageReport {
                stage: s.stage,
                blocks: s.blocks,
                kernels: s.kernels.clone(),
                channels: s.channels,
                params_per_block: per_block,
                params: per_block * s.blocks,
            }
        })
        .collect();
    Ok(BackboneReport {
        total_blocks: descriptor.total_blocks(),
        total_params: stages.iter().map(|s| s.params).sum(),
        stages,
    })
}

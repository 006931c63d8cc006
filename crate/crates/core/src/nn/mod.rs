//! Forward-only reference kernels for the detector's downsampling module and
//! fusion block, plus parameter accounting and a weight container.

mod backbone;
pub mod mbp;
pub mod mff;
mod tensor;
pub mod weights;

pub use backbone::{
    describe_backbone, BackboneDescriptor, BackboneReport, StageReport, StageSpec,
    LAST_STAGE_KERNELS, STAGE_KERNELS, TOTAL_FUSION_BLOCKS,
};
pub use mbp::{make_blur_kernel, max_pool_stride1, max_pool_stride2, mbp_forward, BlurKernel};
pub use mff::{mff_forward, param_count, DepthwiseConv, MffConfig};
pub use tensor::Tensor4;
pub use weights::{NamedTensor, WeightFile};

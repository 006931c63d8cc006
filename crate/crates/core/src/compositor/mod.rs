//! Object sets, vicinity placement, clone images, training pairs and
//! target-driven dataset expansion.

mod dataset;
mod object_set;
mod pairs;
mod placement;
mod synth;

pub use dataset::{
    boxes_by_image, generate_dataset, schedule_embeds, write_dataset, DirectorySink,
    GenerateOptions, GeneratedDataset, GenerationReport, ImageReport, ImageSink, MemorySink,
    MANIFEST_FILE, REPORT_FILE,
};
pub use object_set::{
    build_object_set, crop_annotation, extract_crops, load_object_set, save_object_set, CropIndex,
    CropIndexEntry, ObjectSet, CROP_INDEX_FILE,
};
pub use pairs::{build_training_pair, choose_cover, TrainingPair, MAX_ASPECT_RATIO_GAP};
pub use placement::{propose_placement, Placement, PlacementPolicy, MIN_PLACED_SIDE};
pub use synth::{
    synthesize, synthesize_counts, CountRange, EmbedOutcome, EmbedRecord, SynthesisSpec,
    Synthesized,
};

"""geoembed: continuous GPS-to-embedding encoding aligned with image features,
with contrastive training and worldwide image-to-GPS retrieval.
"""

from .errors import (
    CorruptionError,
    DegenerateInputError,
    EmptyRestrictionError,
    FormatError,
    GeoembedError,
    InvalidConfigError,
    InvalidInputError,
    InvalidStateError,
    RejectedInputError,
    TrainingDivergenceError,
)
from .geodesy import (
    EARTH_RADIUS_KM,
    GpsCoord,
    LandMask,
    ProjectedCoord,
    eep_project,
    eep_project_array,
    fibonacci_lattice,
    geodesic_distance_km,
    geodesic_distance_km_array,
    land_filter,
    perturb_coord,
    read_landmask,
    write_landmask,
)
from .posenc import RffLayer, SigmaSchedule, init_rff, rff_encode, sigma_schedule
from .net import (
    DenseLayer,
    Mlp,
    TemperatureParam,
    adam_step,
    init_image_head,
    init_mlp,
    l2_normalize,
    step_decay,
)
from .locenc import EncoderConfig, LocationEncoder, encode_gps, encode_gps_batch
from .trainer import (
    EpochReport,
    GpsQueue,
    TrainConfig,
    TrainSample,
    TrainingSet,
    TrainState,
    contrastive_loss,
    make_queue_negatives,
    queue_update,
    train,
    train_epoch,
)
from .gallery import (
    DEFAULT_THRESHOLDS_KM,
    GalleryIndex,
    ThresholdReport,
    average_views,
    build_gallery,
    restrict_gallery,
    retrieve_top1_batch,
    retrieve_topk,
    sample_training_coords,
    threshold_accuracy,
)
from .fileio import (
    EmbeddingFile,
    load_checkpoint,
    read_coord_csv,
    read_embeddings,
    save_checkpoint,
    save_train_state,
    write_coord_csv,
    write_embeddings,
)
from .heatmap import heatmap_scores, make_grid, write_heatmap_csv, write_heatmap_pgm
from .synth import SyntheticWorld, make_synthetic_world

__version__ = "0.1.0"

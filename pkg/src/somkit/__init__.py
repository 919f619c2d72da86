"""somkit: self-organizing map toolkit.

Training (online and batch), map analyses (U-matrix, hit/score/rank/
classification maps, sample collection), codebook clustering (k-means,
GMM, elbow), SVG rendering, and a blob benchmark harness, plus the
``somkit`` command-line interface.
"""

from .analysis import (
    CollectResult,
    MapLayer,
    NeuronBuffer,
    assign,
    classification_map,
    collect_sample,
    component_plane,
    hit_map,
    metric_map,
    rank_map,
    score_map,
    u_matrix,
)
from .bench import BenchPlan, BenchRow, parse_table_csv, render_table, requires_large, run_plan
from .clustering import (
    ClusterAlgorithm,
    ClusterQuality,
    ClusterResult,
    ClusterSpace,
    ClusterSpaceKind,
    ComparisonRow,
    ElbowResult,
    cluster_features,
    compare,
    comparison_to_csv,
    elbow,
    gmm,
    kmeans,
    quality,
)
from .data import BlobSpec, Dataset, Scaler, load_csv, make_blobs, save_csv, split, standardize
from .errors import (
    BoundsError,
    ConfigError,
    DomainError,
    InputError,
    ParameterError,
    ParseError,
    ShapeError,
    SomkitError,
    VersionError,
)
from .grid import (
    Coord,
    GridTopology,
    Topology,
    grid_distance,
    neighbors_at_order,
    planar_position,
    planar_positions,
    ring_distance,
    ring_distances,
)
from .kernels import (
    Kernel,
    Metric,
    Schedule,
    asymptotic_step,
    distances_from,
    feature_distance,
    kernel_value,
    lr_schedule,
    lr_step,
    sigma_schedule,
    sigma_step,
)
from .render import RenderStyle, render_bars, render_curves, render_map
from .som import (
    BmuResult,
    FitReport,
    SomModel,
    TrainConfig,
    UpdateMode,
    batch_epoch,
    evaluate,
    find_bmu,
    fit,
    init_pca,
    init_random,
    load,
    online_epoch,
    predict_bmus,
    quantization_error,
    save,
    topographic_error,
)

__version__ = "0.1.0"

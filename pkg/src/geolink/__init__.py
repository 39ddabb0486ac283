"""geolink: account linkage across location platforms from check-in data."""

from .model import (
    AccountRecordSet,
    CheckIn,
    Dataset,
    GroundTruth,
    ingest_checkins,
    ingest_ground_truth,
    write_checkins,
    write_ground_truth,
)
from .indexing import (
    GridRepresentation,
    GridSpec,
    SpatioTemporalRepresentation,
    TimeRepresentation,
    TimeSpec,
    build_representation,
    build_specs,
    cell_center_meters,
    locate,
)
from .kde import (
    Bandwidths,
    KernelCounters,
    gaussian_kernel,
    indexed_similarity,
    joint_weighted_similarity,
    naive_similarity,
)
from .outliers import CellScore, DpParams, density_peaks, detect_outliers
from .weights import WeightTable, build_weight_table, renyi_entropy
from .candidates import CandidateSet, overlap_score, retrieve_candidates
from .linkage import (
    AccountLinker,
    LinkConfig,
    LinkageMetrics,
    LinkageRun,
    evaluate_pairs,
    link_accounts,
)
from .synth import GenParams, generate_scaled, inject_noise, make_corpus, split_dataset
from .predict import (
    ActivityPredictor,
    ProfileSet,
    UserProfile,
    build_profiles,
    fuse_datasets,
    predict_location,
    predict_time,
    predict_user,
    temporal_train_test_split,
)

__version__ = "0.1.0"

__all__ = [
    "AccountLinker",
    "AccountRecordSet",
    "ActivityPredictor",
    "Bandwidths",
    "CandidateSet",
    "CellScore",
    "CheckIn",
    "Dataset",
    "DpParams",
    "GenParams",
    "GridRepresentation",
    "GridSpec",
    "GroundTruth",
    "KernelCounters",
    "LinkConfig",
    "LinkageMetrics",
    "LinkageRun",
    "ProfileSet",
    "SpatioTemporalRepresentation",
    "TimeRepresentation",
    "TimeSpec",
    "UserProfile",
    "WeightTable",
    "build_profiles",
    "build_representation",
    "build_specs",
    "build_weight_table",
    "cell_center_meters",
    "density_peaks",
    "detect_outliers",
    "evaluate_pairs",
    "fuse_datasets",
    "gaussian_kernel",
    "generate_scaled",
    "indexed_similarity",
    "ingest_checkins",
    "ingest_ground_truth",
    "inject_noise",
    "joint_weighted_similarity",
    "link_accounts",
    "locate",
    "make_corpus",
    "naive_similarity",
    "overlap_score",
    "predict_location",
    "predict_time",
    "predict_user",
    "renyi_entropy",
    "retrieve_candidates",
    "split_dataset",
    "temporal_train_test_split",
    "write_checkins",
    "write_ground_truth",
]

from .rng import seed_rng, derive_stream
from .schedule import NoiseSchedule, linear_schedule
from .data import Dataset, ingest_dataset, save_dataset_npy
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint, FORMAT_VERSION

__all__ = [
    "seed_rng", "derive_stream",
    "NoiseSchedule", "linear_schedule",
    "Dataset", "ingest_dataset", "save_dataset_npy",
    "Checkpoint", "save_checkpoint", "load_checkpoint", "FORMAT_VERSION",
]

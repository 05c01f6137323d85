"""Serialization: datasets, checkpoints, configuration and reports."""
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .dataset_file import read_dataset, write_dataset

__all__ = ["Checkpoint", "load_checkpoint", "read_dataset", "save_checkpoint", "write_dataset"]

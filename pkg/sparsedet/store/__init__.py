"""On-disk persistence for datasets and run directories."""

from sparsedet.store.local import DatasetNotFoundError, DatasetStore, atomic_write, dataset_fingerprint
from sparsedet.store.runs import RunDirectory, finish_manifest, new_manifest

__all__ = [
    "DatasetNotFoundError",
    "DatasetStore",
    "RunDirectory",
    "atomic_write",
    "dataset_fingerprint",
    "finish_manifest",
    "new_manifest",
]

"""Board-conditioned graph embeddings for low-shot component classification."""

from ._core import (
    BoardgraphError,
    box_iou,
    evaluate,
    generate_dataset,
    gradcheck,
    make_splits,
    train,
    __version__,
)

__all__ = [
    "BoardgraphError",
    "box_iou",
    "evaluate",
    "generate_dataset",
    "gradcheck",
    "make_splits",
    "train",
    "__version__",
]

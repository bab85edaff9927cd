"""Transform-domain multilinear discriminant analysis for third-order tensors."""

from .errors import (DimensionError, NumericalConsistencyError, SingularScatterError,
                     TensorFormatError, TldaError)
from .transforms import LinearTransform, build_dct, build_dft, custom_transform, get_transform, l_product
from .tlda import LabeledTensorDataset, TldaModel, project, train_ratio_trace, train_trace_ratio

__version__ = "0.1.0"

__all__ = [
    "DimensionError", "NumericalConsistencyError", "SingularScatterError", "TensorFormatError",
    "TldaError", "LinearTransform", "build_dct", "build_dft", "custom_transform", "get_transform",
    "l_product", "LabeledTensorDataset", "TldaModel", "project", "train_ratio_trace",
    "train_trace_ratio",
]

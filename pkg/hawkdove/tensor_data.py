from __future__ import annotations

from typing import Any, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from typing_extensions import TypeAlias

Storage: TypeAlias = npt.NDArray[np.floating[Any]]
OutIndex: TypeAlias = npt.NDArray[np.int32]
Index: TypeAlias = npt.NDArray[np.int32]
Shape: TypeAlias = npt.NDArray[np.int32]
Strides: TypeAlias = npt.NDArray[np.int32]

UserShape: TypeAlias = Sequence[int]
UserStrides: TypeAlias = Sequence[int]

# Dense tensors are plain row-major numpy arrays; `TensorData` is the
# (storage, shape, strides) view handed to the JIT kernels.
Tensor: TypeAlias = npt.NDArray[np.floating[Any]]


class ShapeError(RuntimeError):
    "Exception raised when two tensor shapes do not line up."

    def __init__(self, where: str, expected: Sequence[Any], actual: Sequence[Any]):
        self.where = where
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{where}: expected shape {self.expected}, got {self.actual}")


class NumericError(ArithmeticError):
    "Exception raised when a kernel produces a non-finite value."

    def __init__(self, where: str, index: int):
        self.where = where
        self.index = index
        super().__init__(f"{where}: non-finite value at batch index {index}")


def index_to_position(index: Index, strides: Strides) -> int:
    """
    Converts a multidimensional tensor `index` into a single-dimensional position in
    storage based on strides.

    Args:
        index : index tuple of ints
        strides : tensor strides

    Returns:
        Position in storage
    """
    position = 0
    for i in range(len(index)):
        position += index[i] * strides[i]
    return position


def to_index(ordinal: int, shape: Shape, out_index: OutIndex) -> None:
    """
    Convert an `ordinal` to an index in the `shape`, last dimension fastest.

    Args:
        ordinal: ordinal position to convert.
        shape : tensor shape.
        out_index : return index corresponding to position.
    """
    # Copy first: inlined into a prange body, `ordinal` is the loop index.
    rest = ordinal + 0
    for i in range(len(shape) - 1, -1, -1):
        out_index[i] = rest % shape[i]
        rest = rest // shape[i]


def strides_from_shape(shape: UserShape) -> Tuple[int, ...]:
    layout = [1]
    offset = 1
    for s in reversed(shape):
        layout.append(s * offset)
        offset = s * offset
    return tuple(reversed(layout[:-1]))


def check_shape(where: str, expected: Sequence[Any], actual: Sequence[Any]) -> None:
    """
    Compare two shapes dimension by dimension. `None` in `expected` matches any size.

    Raises:
        ShapeError : on rank or size mismatch; nothing is broadcast.
    """
    if len(expected) != len(actual) or any(
        e is not None and e != a for e, a in zip(expected, actual)
    ):
        raise ShapeError(where, expected, actual)


def check_finite(where: str, values: Tensor) -> None:
    "Raise `NumericError` naming the first batch row holding a NaN or inf."
    if np.all(np.isfinite(values)):
        return
    rows = values.reshape(values.shape[0], -1) if values.ndim > 1 else values.reshape(-1, 1)
    bad = np.flatnonzero(~np.all(np.isfinite(rows), axis=1))
    raise NumericError(where, int(bad[0]))


class TensorData:
    _storage: Storage
    _strides: Strides
    _shape: Shape
    strides: Tuple[int, ...]
    shape: Tuple[int, ...]
    dims: int
    size: int

    def __init__(
        self,
        storage: Storage,
        shape: UserShape,
        strides: Optional[UserStrides] = None,
    ):
        shape = tuple(int(s) for s in shape)
        if strides is None:
            strides = strides_from_shape(shape)
        strides = tuple(int(s) for s in strides)
        if len(strides) != len(shape):
            raise ShapeError("TensorData strides", shape, strides)
        self._storage = storage
        self._strides = np.array(strides, dtype=np.int32)
        self._shape = np.array(shape, dtype=np.int32)
        self.strides = strides
        self.shape = shape
        self.dims = len(shape)
        self.size = int(np.prod(shape, dtype=np.int64))
        assert storage.ndim == 1, "Storage must be flat"

    @classmethod
    def from_array(cls, values: Tensor) -> TensorData:
        "Wrap a row-major array without copying it (copies only if it is not contiguous)."
        values = np.ascontiguousarray(values)
        return cls(values.reshape(-1), values.shape)

    @classmethod
    def zeros(cls, shape: UserShape, dtype: npt.DTypeLike) -> TensorData:
        return cls(np.zeros(int(np.prod(shape, dtype=np.int64)), dtype=dtype), shape)

    def is_contiguous(self) -> bool:
        """
        Check that the layout is contiguous, i.e. outer dimensions have bigger strides than inner dimensions.

        Returns:
            bool : True if contiguous
        """
        last = 1e9
        for stride in self._strides:
            if stride > last:
                return False
            last = stride
        return True

    def tuple(self) -> Tuple[Storage, Shape, Strides]:
        return (self._storage, self._shape, self._strides)

    def permute(self, *order: int) -> TensorData:
        """
        Permute the dimensions of the tensor.

        Args:
            *order: a permutation of the dimensions

        Returns:
            New `TensorData` with the same storage and a new dimension order.
        """
        assert list(sorted(order)) == list(
            range(len(self.shape))
        ), f"Must give a position to each dimension. Shape: {self.shape} Order: {order}"
        return TensorData(
            self._storage,
            tuple(self.shape[i] for i in order),
            tuple(self.strides[i] for i in order),
        )

    def to_array(self) -> Tensor:
        "Row-major array with this layout's values (a view when already contiguous)."
        if self.is_contiguous() and self.strides == strides_from_shape(self.shape):
            return self._storage.reshape(self.shape)
        item = self._storage.itemsize
        view = np.lib.stride_tricks.as_strided(
            self._storage,
            shape=self.shape,
            strides=tuple(s * item for s in self.strides),
            writeable=False,
        )
        return np.ascontiguousarray(view)

"""Spatial weight matrices: construction, validation, normalization and I/O.

Weights are stored dense. A ``SpatialWeightSet`` is immutable once built and
can be shared read-only across worker processes.

Triplet file format::

    # comment
    n p
    l i j w        (l is 1-based, i and j are 0-based)
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from src.utils.errors import WeightsValidationError
from src.utils.logging import get_logger

logger = get_logger("weights")

ROW_SUM_TOL = 1e-12


def _is_row_normalized(mat: np.ndarray) -> bool:
    sums = mat.sum(axis=1)
    return bool(np.all((np.abs(sums) <= ROW_SUM_TOL) | (np.abs(sums - 1.0) <= ROW_SUM_TOL)))


@dataclass(frozen=True, eq=False)
class SpatialWeightSet:
    """Ordered set of p dense n x n weight matrices M_1..M_p.

    :param mats: The weight matrices, all n x n
    :type mats: Tuple[np.ndarray, ...]
    :param row_normalized: Per-matrix flag, all nonzero rows sum to one
    :type row_normalized: Tuple[bool, ...]
    :raises WeightsValidationError: On non-square, mismatched, non-finite,
        negative or nonzero-diagonal input
    """

    mats: Tuple[np.ndarray, ...]
    row_normalized: Tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.mats) == 0:
            raise WeightsValidationError("at least one weight matrix is required", field="mats")

        frozen = []
        n = None
        for idx, raw in enumerate(self.mats, start=1):
            mat = np.array(raw, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise WeightsValidationError(f"M_{idx} is not square: shape {mat.shape}", field=f"M_{idx}")
            if n is None:
                n = mat.shape[0]
            elif mat.shape[0] != n:
                raise WeightsValidationError(
                    f"M_{idx} has dimension {mat.shape[0]}, expected {n}", field=f"M_{idx}"
                )
            if not np.all(np.isfinite(mat)):
                raise WeightsValidationError(f"M_{idx} has non-finite entries", field=f"M_{idx}")
            if np.any(mat < 0):
                raise WeightsValidationError(f"M_{idx} has negative entries", field=f"M_{idx}")
            if np.any(np.diag(mat) != 0):
                i = int(np.flatnonzero(np.diag(mat))[0])
                raise WeightsValidationError(
                    f"M_{idx} has nonzero diagonal entry at ({i}, {i})", field=f"M_{idx}"
                )
            mat.setflags(write=False)
            frozen.append(mat)

        flags = tuple(self.row_normalized) or tuple(_is_row_normalized(m) for m in frozen)
        if len(flags) != len(frozen):
            raise WeightsValidationError("row_normalized needs one flag per matrix", field="row_normalized")
        for idx, (mat, flag) in enumerate(zip(frozen, flags), start=1):
            if flag and not _is_row_normalized(mat):
                raise WeightsValidationError(
                    f"M_{idx} is flagged row-normalized but its row sums are not in {{0, 1}}",
                    field=f"M_{idx}",
                )

        object.__setattr__(self, "mats", tuple(frozen))
        object.__setattr__(self, "row_normalized", tuple(bool(f) for f in flags))

    @property
    def n(self) -> int:
        return self.mats[0].shape[0]

    @property
    def p(self) -> int:
        return len(self.mats)

    @property
    def all_row_normalized(self) -> bool:
        return all(self.row_normalized)

    @property
    def squares(self) -> List[np.ndarray]:
        """M_l @ M_l for each l."""
        return [m @ m for m in self.mats]

    @property
    def ordered_products(self) -> List[np.ndarray]:
        """All ordered products M_a @ M_b, a-major."""
        return [a @ b for a in self.mats for b in self.mats]

    @property
    def max_inf_norm(self) -> float:
        """max_l ||M_l||_inf (largest absolute row sum)."""
        return max(float(np.abs(m).sum(axis=1).max()) for m in self.mats)

    def combine(self, coefs: Sequence[float]) -> np.ndarray:
        """Return sum_l coefs[l] * M_l.

        :param coefs: One coefficient per matrix
        :type coefs: Sequence[float]
        :return: The n x n linear combination
        :rtype: np.ndarray
        """
        out = np.zeros((self.n, self.n))
        for c, m in zip(coefs, self.mats):
            out += c * m
        return out


def _lattice_chebyshev(side: int) -> np.ndarray:
    rows, cols = np.divmod(np.arange(side * side), side)
    return np.maximum(
        np.abs(rows[:, None] - rows[None, :]),
        np.abs(cols[:, None] - cols[None, :]),
    )


def _queen_adjacency(side: int) -> np.ndarray:
    return (_lattice_chebyshev(side) == 1).astype(float)


def _normalize_matrix(mat: np.ndarray) -> np.ndarray:
    if np.any(mat < 0):
        raise WeightsValidationError("row normalization requires non-negative weights", field="mats")
    sums = mat.sum(axis=1, keepdims=True)
    # Zero rows (islands) stay zero; rows already summing to one are untouched
    safe = np.where((sums == 0) | (np.abs(sums - 1.0) <= ROW_SUM_TOL), 1.0, sums)
    return mat / safe


def build_queen_contiguity(side: int) -> SpatialWeightSet:
    """Row-normalized queen contiguity on a side x side lattice.

    Cells are numbered row-major; two cells are neighbors when their
    Chebyshev distance is 1.

    :param side: Lattice side, n = side**2
    :type side: int
    :return: Weight set with p = 1
    :rtype: SpatialWeightSet
    :raises WeightsValidationError: If side < 2
    """
    if side < 2:
        raise WeightsValidationError(f"queen lattice needs side >= 2, got {side}", field="side")
    return SpatialWeightSet(mats=(_normalize_matrix(_queen_adjacency(side)),), row_normalized=(True,))


def build_second_order_contiguity(side: int) -> SpatialWeightSet:
    """First- and second-lag queen neighbors, each row-normalized on its own.

    M_2 links cells at graph distance exactly 2 in the queen adjacency graph,
    so the supports of M_1 and M_2 are disjoint.

    :param side: Lattice side, n = side**2
    :type side: int
    :return: Weight set with p = 2
    :rtype: SpatialWeightSet
    :raises WeightsValidationError: If side < 3
    """
    if side < 3:
        raise WeightsValidationError(
            f"second-order lattice needs side >= 3, got {side}", field="side"
        )
    first = _queen_adjacency(side) > 0
    within_two = (first.astype(int) @ first.astype(int)) > 0
    second = within_two & ~first
    np.fill_diagonal(second, False)
    mats = (
        _normalize_matrix(first.astype(float)),
        _normalize_matrix(second.astype(float)),
    )
    return SpatialWeightSet(mats=mats, row_normalized=(True, True))


def row_normalize(weights: SpatialWeightSet) -> SpatialWeightSet:
    """Divide each nonzero row by its sum; zero rows are kept.

    :param weights: Input weights
    :type weights: SpatialWeightSet
    :return: Normalized copy with every flag set
    :rtype: SpatialWeightSet
    """
    mats = tuple(_normalize_matrix(m) for m in weights.mats)
    return SpatialWeightSet(mats=mats, row_normalized=tuple(True for _ in mats))


def save_weights(weights: SpatialWeightSet, path: Union[str, Path]) -> Path:
    """Write ``weights`` as a triplet text file.

    Values are written with ``repr`` so a reload is bit-exact.

    :param weights: Weights to persist
    :type weights: SpatialWeightSet
    :param path: Destination file
    :type path: Union[str, Path]
    :return: The written path
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "# spatial weights: header 'n p', then 'l i j w' (l 1-based, i j 0-based)",
        f"{weights.n} {weights.p}",
    ]
    for l, mat in enumerate(weights.mats, start=1):
        rows, cols = np.nonzero(mat)
        for i, j in zip(rows, cols):
            lines.append(f"{l} {i} {j} {float(mat[i, j])!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("Saved weights", extra={"path": str(path), "n": weights.n, "p": weights.p})
    return path


def _read_triplets(path: Path) -> Tuple[int, List[np.ndarray]]:
    header = None
    mats: List[np.ndarray] = []
    seen = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            where = f"{path.name}:{lineno}"
            if header is None:
                if len(parts) != 2:
                    raise WeightsValidationError(f"{where}: header must be 'n p'", field="header")
                try:
                    n, p = int(parts[0]), int(parts[1])
                except ValueError as exc:
                    raise WeightsValidationError(f"{where}: header must be integers", field="header") from exc
                if n < 1 or p < 1:
                    raise WeightsValidationError(f"{where}: header needs n >= 1 and p >= 1", field="header")
                header = (n, p)
                mats = [np.zeros((n, n)) for _ in range(p)]
                continue
            if len(parts) != 4:
                raise WeightsValidationError(f"{where}: expected 'l i j w'", field="entry")
            try:
                l, i, j, w = int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
            except ValueError as exc:
                raise WeightsValidationError(f"{where}: malformed entry {line!r}", field="entry") from exc
            n, p = header
            if not 1 <= l <= p:
                raise WeightsValidationError(f"{where}: matrix index {l} out of range 1..{p}", field="l")
            if not (0 <= i < n and 0 <= j < n):
                raise WeightsValidationError(
                    f"{where}: entry ({i}, {j}) out of range for n={n}", field="index"
                )
            if i == j and w != 0:
                raise WeightsValidationError(
                    f"{where}: nonzero diagonal entry ({i}, {j}) in M_{l}", field="diagonal"
                )
            if (l, i, j) in seen:
                raise WeightsValidationError(f"{where}: duplicate entry ({l}, {i}, {j})", field="entry")
            seen.add((l, i, j))
            mats[l - 1][i, j] = w
    if header is None:
        raise WeightsValidationError(f"{path.name}: missing 'n p' header", field="header")
    return header[0], mats


def load_weights(paths: Union[str, Path, Iterable[Union[str, Path]]]) -> SpatialWeightSet:
    """Read one or more triplet files into a single weight set.

    Matrices from several files are concatenated in file order; all files
    must agree on n.

    :param paths: A path or an iterable of paths
    :type paths: Union[str, Path, Iterable]
    :return: The loaded weights, flags inferred from row sums
    :rtype: SpatialWeightSet
    :raises WeightsValidationError: On malformed entries or dimension mismatch
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    n_ref = None
    mats: List[np.ndarray] = []
    for raw in paths:
        path = Path(raw)
        n, file_mats = _read_triplets(path)
        if n_ref is None:
            n_ref = n
        elif n != n_ref:
            raise WeightsValidationError(
                f"{path.name} declares n={n}, expected {n_ref}", field="n"
            )
        mats.extend(file_mats)
    if not mats:
        raise WeightsValidationError("no weight files given", field="paths")
    return SpatialWeightSet(mats=tuple(mats))


def weights_from_recipe(recipe) -> SpatialWeightSet:
    """Build the weight set described by a ``WeightsRecipe``.

    :param recipe: Lattice builder name and side, or a triplet file path
    :type recipe: WeightsRecipe
    :return: The weights
    :rtype: SpatialWeightSet
    """
    if recipe.kind == "queen":
        return build_queen_contiguity(recipe.side)
    if recipe.kind == "second_order":
        return build_second_order_contiguity(recipe.side)
    return load_weights(recipe.path)


__all__ = [
    "weights_from_recipe",
    "SpatialWeightSet",
    "build_queen_contiguity",
    "build_second_order_contiguity",
    "row_normalize",
    "load_weights",
    "save_weights",
]

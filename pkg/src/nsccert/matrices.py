"""Dense sensing matrices: construction, generators, permutation and file I/O.

All randomness is driven by numpy's Philox counter-based bit generator keyed
by an explicit integer seed; Gaussian variates come from numpy's ziggurat
sampler (``Generator.standard_normal``).  Generated matrices are therefore
pure functions of their parameters within one installation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "MatrixFormatError",
    "SensingMatrix",
    "IndexSet",
    "load_matrix",
    "save_matrix",
    "gen_gaussian",
    "gen_partial_fourier",
    "permute_columns_desc",
]

_NORM_TOL = 1e-12


class MatrixFormatError(ValueError):
    """Raised when a matrix file cannot be parsed."""


def seeded_rng(seed: int) -> np.random.Generator:
    """The one PRNG used across the package: Philox keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SensingMatrix:
    """An m-by-n dense real matrix plus provenance and column bookkeeping.

    ``col_permutation``, when present, maps internal column order to the
    original one: internal column ``i`` (1-based) holds original column
    ``col_permutation[i-1]``.  Instances are immutable after construction
    and safe to share across threads.
    """

    entries: np.ndarray
    provenance: str = "unknown"
    col_permutation: tuple[int, ...] | None = None
    normalized: bool = False

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix must be 2-D and nonempty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must all be finite")
        object.__setattr__(self, "entries", _freeze(arr))
        if self.col_permutation is not None:
            perm = tuple(int(p) for p in self.col_permutation)
            if sorted(perm) != list(range(1, arr.shape[1] + 1)):
                raise ValueError("col_permutation is not a bijection on 1..n")
            object.__setattr__(self, "col_permutation", perm)
        if self.normalized:
            norms = np.linalg.norm(arr, axis=0)
            if np.any(np.abs(norms - 1.0) > _NORM_TOL):
                raise ValueError("matrix marked normalized but has non-unit columns")

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def to_original_columns(self, internal: Iterable[int]) -> tuple[int, ...]:
        """Map internal 1-based column indices back to the original ordering."""
        if self.col_permutation is None:
            return tuple(sorted(int(i) for i in internal))
        return tuple(sorted(self.col_permutation[int(i) - 1] for i in internal))

    def vector_to_original(self, z: np.ndarray) -> np.ndarray:
        """Reorder an n-vector from internal column order to the original one."""
        if self.col_permutation is None:
            return np.array(z, dtype=np.float64)
        out = np.empty(self.cols, dtype=np.float64)
        for i, orig in enumerate(self.col_permutation):
            out[orig - 1] = z[i]
        return out


@dataclass(frozen=True, order=True)
class IndexSet:
    """A strictly increasing tuple of 1-based column indices."""

    indices: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing, got {idx}")
        if idx and idx[0] < 1:
            raise ValueError(f"indices must be >= 1, got {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, *indices: int) -> "IndexSet":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i: int) -> bool:
        return i in self.indices

    def __str__(self) -> str:
        return "{" + ",".join(str(i) for i in self.indices) + "}"

    def zero_based(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp) - 1


def load_matrix(path: str | Path, fmt: str = "csv") -> SensingMatrix:
    """Parse a dense matrix from a text file, one row per line.

    ``fmt`` is "csv" (comma-separated) or "whitespace" (split on blanks).
    """
    if fmt not in ("csv", "whitespace"):
        raise ValueError(f"unknown matrix format {fmt!r}")
    text = Path(path).read_text()
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",") if fmt == "csv" else line.split()
        try:
            row = [float(c) for c in cells]
        except ValueError as exc:
            raise MatrixFormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
        if rows and len(row) != len(rows[0]):
            raise MatrixFormatError(
                f"{path}:{lineno}: ragged rows ({len(row)} cells, expected {len(rows[0])})"
            )
        rows.append(row)
    if not rows:
        raise MatrixFormatError(f"{path}: empty matrix file")
    return SensingMatrix(np.array(rows), provenance=str(path))


def save_matrix(matrix: SensingMatrix, path: str | Path) -> None:
    """Write CSV with 17 significant digits so load_matrix round-trips bit-exactly."""
    lines = [
        ",".join(format(v, ".17g") for v in row)
        for row in matrix.entries
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def gen_gaussian(m: int, n: int, seed: int) -> SensingMatrix:
    """i.i.d. standard normal entries, columns scaled to unit Euclidean norm."""
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got {m}x{n}")
    rng = seeded_rng(seed)
    entries = rng.standard_normal((m, n))
    norms = np.linalg.norm(entries, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("degenerate zero column, try another seed")
    entries /= norms
    return SensingMatrix(
        entries,
        provenance=f"gaussian(m={m},n={n},seed={seed})",
        normalized=True,
    )


def gen_partial_fourier(m: int, n: int, seed: int) -> SensingMatrix:
    """Real partial Fourier matrix: cosine/sine rows at random frequencies.

    Frequencies are drawn without replacement from 0..floor(n/2) (a larger
    pool would alias: frequency f and n-f give linearly dependent rows).
    Each frequency contributes its cosine row and, unless identically zero,
    its sine row; rows accumulate until m are available, then the matrix is
    truncated to m rows and column-normalized.
    """
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got {m}x{n}")
    if m > n:
        raise ValueError(f"m={m} exceeds the {n} available real Fourier rows")
    rng = seeded_rng(seed)
    freqs = rng.permutation(n // 2 + 1)
    j = np.arange(n)
    rows = []
    for f in freqs:
        rows.append(np.cos(2.0 * np.pi * f * j / n))
        if f != 0 and not (n % 2 == 0 and f == n // 2):
            rows.append(np.sin(2.0 * np.pi * f * j / n))
        if len(rows) >= m:
            break
    entries = np.array(rows[:m])
    norms = np.linalg.norm(entries, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("degenerate zero column, try another seed")
    entries /= norms
    return SensingMatrix(
        entries,
        provenance=f"partial_fourier(m={m},n={n},seed={seed})",
        normalized=True,
    )


def permute_columns_desc(matrix: SensingMatrix, scores: Sequence[float]) -> SensingMatrix:
    """Reorder columns so the given scores are non-increasing.

    Ties are broken by ascending original column index; the permutation is
    recorded (composed with any existing one) so results can be mapped back.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (matrix.cols,):
        raise ValueError(f"need {matrix.cols} scores, got {scores.shape}")
    order = np.argsort(-scores, kind="stable")
    entries = matrix.entries[:, order]
    if matrix.col_permutation is None:
        perm = tuple(int(i) + 1 for i in order)
    else:
        perm = tuple(matrix.col_permutation[int(i)] for i in order)
    return SensingMatrix(
        entries,
        provenance=matrix.provenance,
        col_permutation=perm,
        normalized=matrix.normalized,
    )


def binom(n: int, k: int) -> int:
    """C(n, k), zero outside the valid range."""
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)

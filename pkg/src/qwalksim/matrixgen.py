"""Band-matrix generation, preprocessing, and QRAM packing.

The preprocessing pipeline turns a symmetric matrix into a compact
per-row layout: each row stores exactly ``s`` fixed-point elements and
``s`` sorted column indices, padded rows included. The packed memory
holds the element segment followed by the sparsity (column-index)
segment as two continuous runs of words.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SimulationError, ValueOverflowError, WidthError
from .semiquantum import QramImage
from .state import U64


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class BandMatrixSpec:
    """Parameters of one random symmetric band matrix."""

    rows: int
    bandwidth: int
    word_length: int
    seed: int

    def __post_init__(self):
        if not _is_pow2(self.rows):
            raise SimulationError(f"row count must be a power of two, got {self.rows}")
        if not 0 <= self.bandwidth < self.rows // 2:
            raise SimulationError(f"bandwidth must be in [0, rows/2), got {self.bandwidth}")
        if not 1 <= self.word_length <= 52:
            raise WidthError("element word length must be in [1, 52]")

    @property
    def s_tilde(self) -> int:
        """Nonzeros per interior row: 2*bandwidth + 1."""
        return 2 * self.bandwidth + 1

    @property
    def s_padded(self) -> int:
        """s_tilde rounded up to the next power of two."""
        return 1 << math.ceil(math.log2(self.s_tilde))


@dataclass(frozen=True)
class CscMatrixImage:
    """Preprocessed sparse matrix in the packed per-row layout."""

    n_rows: int              # N, a power of two
    s: int                   # padded per-row entry count, a power of two
    elements: np.ndarray     # N*s fixed-point words, k_w bits each
    col_indices: np.ndarray  # N*s index words, n = log2(N)+1 bits each
    element_offset: int
    sparsity_offset: int
    word_lengths: tuple[int, int]  # (k_w, n)

    @property
    def k_w(self) -> int:
        return self.word_lengths[0]

    @property
    def n(self) -> int:
        return self.word_lengths[1]

    def validate(self) -> None:
        n_rows, s = self.n_rows, self.s
        if not (_is_pow2(n_rows) and _is_pow2(s)):
            raise SimulationError("N and s must be powers of two")
        if self.n != int(math.log2(n_rows)) + 1:
            raise SimulationError("index width must be log2(N) + 1")
        if self.sparsity_offset != self.element_offset + n_rows * s:
            raise SimulationError("sparsity segment must follow the element segment")
        cols = self.col_indices.reshape(n_rows, s)
        elems = self.elements.reshape(n_rows, s)
        if np.any(cols[:, 1:] <= cols[:, :-1]):
            raise SimulationError("column indices must be strictly increasing per row")
        if np.any(cols >> U64(self.n) != 0):
            raise ValueOverflowError("column index exceeds the index word width")
        if np.any(elems >> U64(self.k_w) != 0):
            raise ValueOverflowError("element word exceeds the element word width")
        if np.any(elems[cols >= n_rows] != 0):
            raise SimulationError("padding positions must hold zero elements")

    def nnz(self) -> int:
        return int(np.sum(self.col_indices < self.n_rows))


def quantize(x: float, k_w: int) -> int:
    """Fixed-point word of x in [0, 1): floor(x * 2**k_w)."""
    if not 0.0 <= x < 1.0:
        raise ValueOverflowError(f"fixed-point inputs must lie in [0, 1), got {x}")
    return int(x * (1 << k_w))


def dequantize(word: int, k_w: int) -> float:
    return word / float(1 << k_w)


def gen_band_matrix(spec: BandMatrixSpec) -> np.ndarray:
    """Random positive-valued symmetric band matrix.

    In-band entries are uniform on the k_w-bit fixed-point grid of
    [0, 1); entries outside the band are zero. Deterministic for a
    fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    n, k_w = spec.rows, spec.word_length
    m = np.zeros((n, n))
    scale = 1.0 / (1 << k_w)
    for d in range(spec.bandwidth + 1):
        vals = rng.integers(0, 1 << k_w, size=n - d).astype(np.float64) * scale
        m += np.diag(vals, d)
        if d:
            m += np.diag(vals, -d)
    return m


def preprocess(dense: np.ndarray, word_length: int) -> tuple[CscMatrixImage, float]:
    """Five preprocessing steps.

    1. rescale so the max entry magnitude is 1 if it exceeds 1;
    2. convert to the compressed per-row format;
    3. record the max per-row nonzero count and round it up to a
       power of two as s;
    4. fill rows that have fewer than s entries;
    5. kappa = 1 / min |eigenvalue| of A/s.

    Returns the packed image plus kappa. Element words are quantized to
    ``word_length`` bits; a rescaled entry of exactly 1.0 is clamped to
    the largest representable word.
    """
    from .oracle import min_abs_eigenvalue

    a = np.asarray(dense, dtype=np.float64)
    n_rows = a.shape[0]
    if a.shape != (n_rows, n_rows) or not _is_pow2(n_rows):
        raise SimulationError("matrix must be square with a power-of-two dimension")
    if not np.array_equal(a, a.T):
        raise SimulationError("matrix must be symmetric")
    mx = float(np.max(np.abs(a)))
    if mx > 1.0:
        a = a / mx
    counts = np.count_nonzero(a, axis=1)
    s_raw = int(counts.max())
    if s_raw == 0:
        raise SimulationError("matrix is all zero")
    s = 1 << math.ceil(math.log2(s_raw))
    k_w = word_length
    n_bits = int(math.log2(n_rows)) + 1
    top = (1 << k_w) - 1
    elements = np.zeros(n_rows * s, dtype=U64)
    col_indices = np.zeros(n_rows * s, dtype=U64)
    for j in range(n_rows):
        cols = np.nonzero(a[j])[0]
        v = cols.shape[0]
        words = [min(int(a[j, c] * (1 << k_w)), top) for c in cols]
        pad = range(n_rows, n_rows + (s - v))
        col_indices[j * s : (j + 1) * s] = np.concatenate([cols, np.fromiter(pad, dtype=np.int64, count=s - v)])
        elements[j * s : j * s + v] = words
    lam = min_abs_eigenvalue(a / s)
    if lam < 1e-14:
        raise SimulationError("matrix is numerically singular (min |eigenvalue| below 1e-14)")
    kappa = 1.0 / lam
    csc = CscMatrixImage(
        n_rows=n_rows,
        s=s,
        elements=elements,
        col_indices=col_indices,
        element_offset=0,
        sparsity_offset=n_rows * s,
        word_lengths=(k_w, n_bits),
    )
    csc.validate()
    return csc, kappa


def reconstruct_dense(csc: CscMatrixImage) -> np.ndarray:
    """Dense matrix of the quantized values stored in the image."""
    n_rows, s = csc.n_rows, csc.s
    a = np.zeros((n_rows, n_rows))
    cols = csc.col_indices.reshape(n_rows, s)
    elems = csc.elements.reshape(n_rows, s)
    for j in range(n_rows):
        valid = cols[j] < n_rows
        a[j, cols[j, valid].astype(np.intp)] = elems[j, valid].astype(np.float64) / (1 << csc.k_w)
    return a


def pack_qram(csc: CscMatrixImage) -> QramImage:
    """Lay the two segments out as one flat word memory.

    words[element_offset + j*s + l] is the l-th element word of row j;
    words[sparsity_offset + j*s + l] the matching column index. The
    address width covers computed addresses for any n-bit row and
    position operand; the word width is the wider of the two segments
    (readers mask to their own register width).
    """
    n_rows, s = csc.n_rows, csc.s
    words = np.zeros(2 * n_rows * s, dtype=U64)
    words[csc.element_offset : csc.element_offset + n_rows * s] = csc.elements
    words[csc.sparsity_offset : csc.sparsity_offset + n_rows * s] = csc.col_indices
    address_width = csc.n + int(math.log2(s)) + 1 if s > 1 else csc.n + 2
    word_width = max(csc.k_w, csc.n)
    return QramImage(words, address_width, word_width)


def unpack_qram(image: QramImage, n_rows: int, s: int, k_w: int) -> CscMatrixImage:
    """Inverse of pack_qram given the sidecar geometry."""
    n_bits = int(math.log2(n_rows)) + 1
    return CscMatrixImage(
        n_rows=n_rows,
        s=s,
        elements=image.words[: n_rows * s].copy(),
        col_indices=image.words[n_rows * s : 2 * n_rows * s].copy(),
        element_offset=0,
        sparsity_offset=n_rows * s,
        word_lengths=(k_w, n_bits),
    )


def save_image(directory, csc: CscMatrixImage, kappa: float, seed: int) -> None:
    """Write matrix.qram plus the matrix.json sidecar into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pack_qram(csc).save(directory / "matrix.qram")
    sidecar = {
        "N": csc.n_rows,
        "s": csc.s,
        "k_w": csc.k_w,
        "n": csc.n,
        "elementOffset": csc.element_offset,
        "sparsityOffset": csc.sparsity_offset,
        "kappa": kappa,
        "seed": seed,
    }
    (directory / "matrix.json").write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


def load_image(path) -> tuple[QramImage, dict]:
    """Load (QramImage, sidecar) given a directory or a sidecar path."""
    p = Path(path)
    if p.is_dir():
        p = p / "matrix.json"
    sidecar = json.loads(p.read_text())
    image = QramImage.load(p.with_suffix(".qram"))
    return image, sidecar

"""Matrix Market coordinate-format reader and writer.

Hand-rolled instead of scipy.io so parse failures can report the offending
line number. Supports real (and integer) general or symmetric matrices;
complex, pattern, and skew-symmetric files are rejected. Duplicate entries
are summed, the standard convention.
"""

import numpy as np
import scipy.sparse as sp

from .matrices import as_csr

BANNER = "%%MatrixMarket"


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market content; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _parse_header(first, lineno):
    parts = first.split()
    if not parts or parts[0] != BANNER:
        raise MatrixMarketError(
            f"missing '{BANNER}' banner (got {first.strip()!r})", lineno
        )
    fields = [p.lower() for p in parts[1:]]
    if len(fields) != 4:
        raise MatrixMarketError(
            "banner needs exactly 4 qualifiers: object format field symmetry", lineno
        )
    obj, fmt, field, symmetry = fields
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}, only 'matrix'", lineno)
    if fmt != "coordinate":
        raise MatrixMarketError(
            f"unsupported format {fmt!r}, only 'coordinate'", lineno
        )
    if field not in ("real", "integer"):
        raise MatrixMarketError(
            f"unsupported field {field!r}, only 'real' or 'integer'", lineno
        )
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(
            f"unsupported symmetry {symmetry!r}, only 'general' or 'symmetric'",
            lineno,
        )
    return symmetry


def load_matrix_market(path):
    """Read a coordinate real/integer general/symmetric file into CSR.

    Indices are converted from the file's 1-based convention; symmetric
    storage is expanded to both triangles; duplicates are summed.
    """
    with open(path, "rt", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    symmetry = _parse_header(lines[0], 1)

    shape = None
    declared = 0
    seen = 0
    rows, cols, vals = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if shape is None:
            if len(parts) != 3:
                raise MatrixMarketError(
                    f"size line needs 'rows cols nnz', got {text!r}", lineno
                )
            try:
                m, n, declared = (int(p) for p in parts)
            except ValueError:
                raise MatrixMarketError(
                    f"non-integer size line {text!r}", lineno
                ) from None
            if m < 0 or n < 0 or declared < 0:
                raise MatrixMarketError("negative size", lineno)
            shape = (m, n)
            continue
        if len(parts) != 3:
            raise MatrixMarketError(
                f"entry needs 'row col value', got {text!r}", lineno
            )
        try:
            i, j = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"malformed entry {text!r}", lineno) from None
        if not (1 <= i <= shape[0]) or not (1 <= j <= shape[1]):
            raise MatrixMarketError(
                f"index ({i}, {j}) outside {shape[0]}x{shape[1]}", lineno
            )
        seen += 1
        if seen > declared:
            raise MatrixMarketError(
                f"more than the declared {declared} entries", lineno
            )
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if symmetry == "symmetric" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)

    if shape is None:
        raise MatrixMarketError("missing size line", len(lines))
    if seen != declared:
        raise MatrixMarketError(
            f"declared {declared} entries, found {seen}", len(lines)
        )
    coo = sp.coo_array(
        (np.array(vals, dtype=np.float64), (np.array(rows, dtype=np.int64),
                                            np.array(cols, dtype=np.int64))),
        shape=shape,
    )
    return as_csr(coo)


def write_matrix_market(M, path, comment=None):
    """Write a matrix as coordinate real general, 1-based, row-major order.

    Dense inputs list their nonzero entries; output is deterministic, so
    regenerating with the same data gives byte-identical files. Values are
    printed with 17 significant digits and round-trip exactly.
    """
    if sp.issparse(M):
        coo = M.tocoo()
        order = np.lexsort((coo.col, coo.row))
        rows, cols, vals = coo.row[order], coo.col[order], coo.data[order]
    else:
        dense = np.asarray(M, dtype=np.float64)
        if dense.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {dense.shape}")
        rows, cols = np.nonzero(dense)
        vals = dense[rows, cols]
    m, n = M.shape
    with open(path, "wt", encoding="ascii", newline="\n") as fh:
        fh.write(f"{BANNER} matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m} {n} {len(vals)}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")

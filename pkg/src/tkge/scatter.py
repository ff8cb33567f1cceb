"""Row-indexed scatter-add used for gradient accumulation into parameter tables."""

from __future__ import annotations

import numpy as np
from scipy import sparse


class RowScatter:
    """Accumulates values into rows of a table by id; reusable across tables
    sharing the same id array."""

    def __init__(self, ids, n_rows):
        self.ids = np.asarray(ids).ravel()
        self.n_rows = n_rows
        self._mat = None

    def _matrix(self):
        if self._mat is None:
            m = self.ids.size
            self._mat = sparse.csr_matrix(
                (np.ones(m), self.ids, np.arange(m + 1)), shape=(m, self.n_rows)
            )
        return self._mat

    def add_to(self, out, values):
        """out[ids[k]] += values[k] for every flattened index k."""
        flat = np.ascontiguousarray(values, dtype=np.float64).reshape(self.ids.size, -1)
        if self.ids.size < 2048:
            np.add.at(out.reshape(self.n_rows, -1), self.ids, flat)
        else:
            out.reshape(self.n_rows, -1)[...] += self._matrix().T @ flat

"""Column space over fragment keys and sparse molecule x key matrices."""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from molftp.chem import FragmentIndex


class KeySpace:
    """Sorted fragment keys with a key -> column lookup."""

    def __init__(self, keys: Iterable[int]):
        self.keys = np.array(sorted(set(keys)), dtype=np.uint64)
        self.column = {int(k): i for i, k in enumerate(self.keys)}

    @classmethod
    def from_indexes(cls, indexes: Sequence[FragmentIndex], max_depth: int | None = None):
        keys: set[int] = set()
        for ix in indexes:
            keys.update(ix.key_presence if max_depth is None else ix.keys_up_to(max_depth))
        return cls(keys)

    def __len__(self) -> int:
        return len(self.keys)

    def matrix(
        self,
        indexes: Sequence[FragmentIndex],
        counts: bool = False,
        max_depth: int | None = None,
    ) -> sp.csr_matrix:
        """Molecule x key matrix; presence (0/1) by default, occurrence counts otherwise.

        Keys missing from the space are dropped.
        """
        rows, cols, vals = [], [], []
        col = self.column
        for r, ix in enumerate(indexes):
            if max_depth is None:
                items = ix.key_counts.items()
            else:
                sub: dict[int, int] = {}
                for h in ix.hits:
                    if h.depth <= max_depth:
                        sub[h.key] = sub.get(h.key, 0) + 1
                items = sub.items()
            for key, n in items:
                c = col.get(key)
                if c is not None:
                    rows.append(r)
                    cols.append(c)
                    vals.append(n if counts else 1)
        m = sp.csr_matrix(
            (np.asarray(vals, dtype=np.int64), (rows, cols)),
            shape=(len(indexes), len(self)),
        )
        m.sort_indices()
        return m

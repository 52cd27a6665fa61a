"""Pretrained word vectors in the plain text format: token then d floats per line."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class WordVectors:
    """Read-only token -> dense vector table with a zero-vector OOV fallback."""

    def __init__(self, table: dict[str, np.ndarray], dim: int):
        self.table = table
        self.dim = dim
        self._zero = np.zeros(dim)

    @classmethod
    def load(cls, path: str | Path) -> "WordVectors":
        table: dict[str, np.ndarray] = {}
        dim: int | None = None
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                parts = line.split()
                if not parts:
                    continue
                token, values = parts[0], parts[1:]
                if dim is None:
                    if not values:
                        raise ValueError(f"{path}: line {line_no}: no vector components")
                    dim = len(values)
                elif len(values) != dim:
                    raise ValueError(
                        f"{path}: line {line_no}: expected {dim} components, got {len(values)}"
                    )
                try:
                    table[token] = np.array([float(v) for v in values])
                except ValueError as exc:
                    raise ValueError(f"{path}: line {line_no}: {exc}") from None
        if dim is None:
            raise ValueError(f"{path}: empty vector file")
        return cls(table, dim)

    def get(self, token: str) -> np.ndarray:
        """Vector for a token, trying the exact then lowercased form; zeros if OOV."""
        vec = self.table.get(token)
        if vec is None:
            vec = self.table.get(token.lower())
        return self._zero if vec is None else vec

    def __contains__(self, token: str) -> bool:
        return token in self.table or token.lower() in self.table

    def __len__(self) -> int:
        return len(self.table)

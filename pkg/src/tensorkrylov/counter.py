"""Operation accounting in tensor-vector-vector (tvv) units."""

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass


@dataclass
class OpCounter:
    """Counts of the expensive tensor operations performed by a run.

    One Gram matrix-vector product costs about as much as two tvv
    multiplications, which is how :attr:`tvv_equivalents` weighs it.
    """

    tvv: int = 0
    gram_matvec: int = 0
    inner: int = 0
    wall: float = 0.0

    @property
    def tvv_equivalents(self):
        return self.tvv + 2 * self.gram_matvec

    def add(self, other):
        self.tvv += other.tvv
        self.gram_matvec += other.gram_matvec
        self.inner += other.inner
        self.wall += other.wall
        return self

    def copy(self):
        return OpCounter(**asdict(self))

    def to_dict(self):
        return asdict(self)

    @contextmanager
    def timed(self):
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.wall += time.perf_counter() - start

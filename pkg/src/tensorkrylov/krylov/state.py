"""Recursion state, breakdown events, start vectors and archive I/O."""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .._validation import as_generator, check_tensor
from ..counter import OpCounter
from ..tensor import fibre_mean
from .basis import CoeffTensor, OrthoBasis

RESOLUTIONS = ("subspace-complete", "random-replacement")


class BreakdownError(RuntimeError):
    """Raised by a recursion in strict mode when a new vector vanishes."""


@dataclass
class BreakdownEvent:
    mode: int
    step: int
    residual: float
    resolution: str

    def __post_init__(self):
        if self.resolution not in RESOLUTIONS:
            raise ValueError(f"unknown breakdown resolution {self.resolution!r}")


@dataclass
class LoopRecord:
    """Boundary of one loop of the maximal recursion."""

    mode: int
    sizes: tuple
    complete: bool


@dataclass
class Record:
    """One generated candidate ``tvv(A, x, y)`` and its Gram-Schmidt coefficients.

    ``x`` and ``y`` are stored in coordinates of the bases of the two
    contracted modes, so the identity
    ``tvv(A, Q_a @ x, Q_b @ y) == Q_mode[:, :len(coeffs)] @ coeffs``
    can be checked after the fact.
    """

    mode: int
    x: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray


@dataclass
class StartVectors:
    """Normalized starting vectors ``u1``, ``v1`` and optionally ``w1``."""

    u1: np.ndarray
    v1: np.ndarray
    w1: np.ndarray = None
    provenance: str = "user"

    def __post_init__(self):
        for name in ("u1", "v1", "w1"):
            x = getattr(self, name)
            if x is None:
                continue
            x = np.asarray(x, dtype=np.float64).ravel()
            nrm = np.linalg.norm(x)
            if nrm == 0:
                raise ValueError(f"start vector {name} is zero")
            setattr(self, name, x / nrm)

    @classmethod
    def random(cls, dims, random_state=None, with_w=False):
        rng = as_generator(random_state)
        vecs = [rng.standard_normal(d) for d in dims]
        return cls(vecs[0], vecs[1], vecs[2] if with_w else None, "random")

    @classmethod
    def fibre_mean(cls, A, with_w=False):
        """Means of the mode-1, mode-2 (and mode-3) fibres of ``A``."""
        A = check_tensor(A)
        w = fibre_mean(A, 3) if with_w else None
        return cls(fibre_mean(A, 1), fibre_mean(A, 2), w, "fibre-mean")

    @classmethod
    def from_file(cls, path):
        """Read ``u1``, ``v1`` and optionally ``w1`` from a ``.npz`` file."""
        with np.load(path, allow_pickle=False) as z:
            missing = {"u1", "v1"} - set(z.files)
            if missing:
                raise ValueError(f"{path} lacks start vectors {sorted(missing)}")
            w1 = z["w1"] if "w1" in z.files else None
            return cls(z["u1"], z["v1"], w1, "file")

    @classmethod
    def make(cls, A, start, random_state=None, with_w=False):
        """Resolve a start policy, a tuple of vectors or a StartVectors.

        Policies are ``'random'``, ``'fibre-mean'`` and ``'file:PATH'``.
        """
        if isinstance(start, StartVectors):
            sv = start
        elif start is None or start == "random":
            return cls.random(A.shape, random_state, with_w)
        elif start == "fibre-mean":
            return cls.fibre_mean(A, with_w)
        elif isinstance(start, str) and start.startswith("file:"):
            sv = cls.from_file(start[5:])
        elif isinstance(start, str):
            raise ValueError(f"unknown start policy {start!r}")
        else:
            vecs = list(start) + [None] * (3 - len(start))
            sv = cls(*vecs[:3], provenance="user")
        for name, d in zip(("u1", "v1", "w1"), A.shape):
            x = getattr(sv, name)
            if x is not None and x.size != d:
                raise ValueError(f"start vector {name} has length {x.size}, expected {d}")
        return sv


@dataclass
class KrylovState:
    """Everything a tensor Krylov run produced.

    Attributes
    ----------
    bases : dict
        Mode -> :class:`OrthoBasis`.
    H : CoeffTensor
        Coefficients ``<A; u_a, v_b, w_c>`` recorded during the run.
    records : list of Record
        Every candidate vector with its Gram-Schmidt coefficients.
    step_sizes, step_tvv : list
        Basis sizes and cumulative tvv-equivalents after each step, used
        to read off nested prefixes of one run.
    """

    method: str
    dims: tuple
    bases: dict
    H: CoeffTensor = field(default_factory=CoeffTensor)
    records: list = field(default_factory=list)
    counter: OpCounter = field(default_factory=OpCounter)
    events: list = field(default_factory=list)
    loops: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    step_tvv: list = field(default_factory=list)
    norm_A: float = 0.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, method, dims, capacities=None, **kwargs):
        caps = capacities or dims
        bases = {m: OrthoBasis(m, dims[m - 1], caps[m - 1]) for m in (1, 2, 3)}
        return cls(method=method, dims=tuple(dims), bases=bases, **kwargs)

    @property
    def U(self):
        return self.bases[1].Q

    @property
    def V(self):
        return self.bases[2].Q

    @property
    def W(self):
        return self.bases[3].Q

    @property
    def factors(self):
        return self.U, self.V, self.W

    @property
    def sizes(self):
        return tuple(self.bases[m].size for m in (1, 2, 3))

    def mark_step(self):
        self.H.grow(self.sizes)
        self.step_sizes.append(self.sizes)
        self.step_tvv.append(self.counter.tvv_equivalents)

    def tvv_at(self, sizes):
        """Cumulative recursion cost when all bases first reached ``sizes``."""
        for s, t in zip(self.step_sizes, self.step_tvv):
            if all(a >= b for a, b in zip(s, sizes)):
                return t
        return self.counter.tvv_equivalents

    def events_at(self, sizes):
        """Number of breakdowns recorded before the bases reached ``sizes``."""
        for step, s in enumerate(self.step_sizes):
            if all(a >= b for a, b in zip(s, sizes)):
                return sum(1 for e in self.events if e.step <= step)
        return len(self.events)

    def hessenberg(self, mode):
        """Matrix whose columns are the coefficient vectors of ``mode``'s records."""
        cols = [r.coeffs for r in self.records if r.mode == mode]
        n = self.bases[mode].size
        Hm = np.zeros((n, len(cols)))
        for j, c in enumerate(cols):
            Hm[: len(c), j] = c
        return Hm

    def orthogonality_error(self):
        return max(self.bases[m].orthogonality_error() for m in (1, 2, 3))

    def save(self, path):
        save_state(self, path)


def _pad(rows, width):
    out = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


def save_state(state, path):
    """Write a :class:`KrylovState` to a ``.npz`` archive.

    Arrays hold the bases, the coefficient tensor and its fill mask and the
    candidate records; a JSON string holds the scalar metadata, counters,
    breakdown events and loop boundaries.
    """
    recs = state.records
    width = max([len(r.coeffs) for r in recs] + [len(r.x) for r in recs] + [len(r.y) for r in recs] + [1])
    meta = {
        "kind": "krylov-state",
        "method": state.method,
        "dims": list(state.dims),
        "capacities": [state.bases[m].capacity for m in (1, 2, 3)],
        "counter": state.counter.to_dict(),
        "events": [asdict(e) for e in state.events],
        "loops": [{"mode": lp.mode, "sizes": list(lp.sizes), "complete": lp.complete} for lp in state.loops],
        "step_sizes": [list(s) for s in state.step_sizes],
        "step_tvv": list(state.step_tvv),
        "norm_A": state.norm_A,
        "meta": state.meta,
    }
    np.savez_compressed(
        path,
        meta=np.array(json.dumps(meta)),
        U=state.U,
        V=state.V,
        W=state.W,
        H=state.H.values,
        H_mask=state.H.mask,
        rec_mode=np.array([r.mode for r in recs], dtype=np.int64),
        rec_len=np.array([[len(r.x), len(r.y), len(r.coeffs)] for r in recs], dtype=np.int64).reshape(-1, 3),
        rec_x=_pad([r.x for r in recs], width),
        rec_y=_pad([r.y for r in recs], width),
        rec_coeffs=_pad([r.coeffs for r in recs], width),
    )


def load_state(path):
    """Read an archive written by :func:`save_state`."""
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("kind") != "krylov-state":
            raise ValueError(f"{path} is not a Krylov state archive")
        dims = tuple(meta["dims"])
        bases = {}
        for m, key in zip((1, 2, 3), ("U", "V", "W")):
            b = OrthoBasis(m, dims[m - 1], meta["capacities"][m - 1])
            Q = z[key]
            b._buf[:, : Q.shape[1]] = Q
            b.size = Q.shape[1]
            bases[m] = b
        H = CoeffTensor(z["H"].shape)
        H._data[tuple(slice(0, s) for s in z["H"].shape)] = z["H"]
        H._mask[tuple(slice(0, s) for s in z["H"].shape)] = z["H_mask"]
        records = []
        for mode, (lx, ly, lc), x, y, c in zip(
            z["rec_mode"], z["rec_len"], z["rec_x"], z["rec_y"], z["rec_coeffs"]
        ):
            records.append(Record(int(mode), x[:lx].copy(), y[:ly].copy(), c[:lc].copy()))
    return KrylovState(
        method=meta["method"],
        dims=dims,
        bases=bases,
        H=H,
        records=records,
        counter=OpCounter(**meta["counter"]),
        events=[BreakdownEvent(**e) for e in meta["events"]],
        loops=[LoopRecord(lp["mode"], tuple(lp["sizes"]), lp["complete"]) for lp in meta["loops"]],
        step_sizes=[tuple(s) for s in meta["step_sizes"]],
        step_tvv=list(meta["step_tvv"]),
        norm_A=meta["norm_A"],
        meta=meta["meta"],
    )

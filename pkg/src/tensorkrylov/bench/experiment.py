"""Experiment specifications, the experiment runner and CSV reports.

A spec file is flat ``key = value`` text; ``#`` starts a comment::

    experiment_id = compare
    source = low-rank          # low-rank | gaussian | sparse | file
    dims = 50, 60, 40
    ranks = 10, 10, 10         # generator ranks (low-rank source)
    methods = minimal, hosvd
    k = 5, 10, 15              # rank schedule; '5:20:5' ranges and '5x8x12' triples allowed
    reps = 3
    seed = 0
    output = compare.csv
"""

import configparser
import csv
import logging
import math
import time
import zlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.linalg import subspace_angles

from .._validation import check_ranks
from ..krylov import (
    contracted_recursion,
    maximal_recursion,
    maximal_truncate,
    minimal_recursion,
    modified_minimal_recursion,
    optimized_recursion,
    small_mode_recursion,
)
from ..io import load_tensor
from ..tensor import frob_norm
from ..tucker import core_project, hosvd_via_krylov, truncated_hosvd
from .generators import gen_gaussian, gen_low_rank, gen_sparse

log = logging.getLogger(__name__)

SOURCES = ("low-rank", "gaussian", "sparse", "file")
METHODS = ("minimal", "modified", "optimized", "small_mode", "contracted", "maximal", "hosvd",
           "hosvd-krylov")
COLUMNS = ("experiment_id", "method", "k", "rep", "seed", "core_norm", "rel_error",
           "max_principal_angle", "tvv_count", "wall_ms", "breakdowns")
#: columns that legitimately differ between identical runs
NONDETERMINISTIC = ("wall_ms",)


def _ints(text):
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def parse_schedule(text):
    """Parse a rank schedule into a tuple of ``(p, q, r)`` triples.

    Items are separated by commas and may be an int ``k`` (meaning
    ``(k, k, k)``), a triple ``p x q x r`` or an inclusive range
    ``start:stop:step``.
    """
    out = []
    for item in str(text).split(","):
        item = item.strip().lower()
        if not item:
            continue
        try:
            if ":" in item:
                parts = [int(x) for x in item.split(":")]
                if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] <= 0):
                    raise ValueError
                step = parts[2] if len(parts) == 3 else 1
                out.extend((k, k, k) for k in range(parts[0], parts[1] + 1, step))
            elif "x" in item:
                t = tuple(int(x) for x in item.split("x"))
                if len(t) != 3:
                    raise ValueError
                out.append(t)
            else:
                k = int(item)
                out.append((k, k, k))
        except ValueError:
            raise ValueError(f"bad rank schedule item {item!r}") from None
    if not out:
        raise ValueError("empty rank schedule")
    if any(min(t) < 1 for t in out):
        raise ValueError(f"rank schedule entries must be positive, got {text!r}")
    return tuple(out)


def format_ranks(t):
    return str(t[0]) if t[0] == t[1] == t[2] else "x".join(str(x) for x in t)


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    Parameters
    ----------
    experiment_id : str
    source : {'low-rank', 'gaussian', 'sparse', 'file'}
        Where the tensor comes from. Generated tensors are redrawn for each
        repetition from seed ``seed + rep``; a file tensor is shared.
    dims, ranks : tuple of int
        Generator dimensions and, for ``'low-rank'``, the true multilinear
        rank (ground truth enables the principal-angle column).
    nnz, distribution, single_per_tube
        Sparse generator parameters.
    file : str
        Tensor file for ``source='file'`` (``.npy`` or coordinate text).
    methods : tuple of str
    schedule : tuple of (p, q, r)
        Approximation ranks; parsed from the ``k`` key.
    reps, seed : int
    start : str
        ``'random'``, ``'fibre-mean'`` or ``'file:PATH'``.
    strategy, inner_steps, warmup
        Optimized recursion settings.
    small_mode, policy
        Small-mode recursion settings; ``small_mode=0`` picks the smallest
        dimension.
    oversample : int
        Extra vectors for ``'hosvd-krylov'`` and the maximal truncation.
    output : str
        CSV path.
    """

    experiment_id: str = "experiment"
    source: str = "low-rank"
    dims: tuple = (20, 20, 20)
    ranks: tuple = (5, 5, 5)
    nnz: int = 1000
    distribution: str = "normal"
    single_per_tube: bool = False
    file: str = ""
    methods: tuple = ("minimal",)
    schedule: tuple = ((5, 5, 5),)
    reps: int = 1
    seed: int = 0
    start: str = "random"
    strategy: str = "inner-krylov"
    inner_steps: int = 3
    warmup: int = 4
    small_mode: int = 0
    policy: str = "cyclic"
    oversample: int = 0
    output: str = "results.csv"

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.ranks = tuple(int(r) for r in self.ranks)
        self.methods = tuple(self.methods)
        self.schedule = tuple(tuple(int(x) for x in t) for t in self.schedule)
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        if self.source == "file" and not self.file:
            raise ValueError("source 'file' needs a 'file' key")
        if self.source != "file" and len(self.dims) != 3:
            raise ValueError(f"dims must have three entries, got {self.dims}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ValueError(f"unknown methods {unknown}; expected some of {METHODS}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")

    @classmethod
    def from_text(cls, text, source="<spec>"):
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                           comment_prefixes=("#",))
        try:
            parser.read_string("[experiment]\n" + text, source=source)
        except configparser.Error as exc:
            raise ValueError(f"{source}: {exc}") from None
        return cls.from_mapping(dict(parser["experiment"]))

    @classmethod
    def from_file(cls, path):
        return cls.from_text(Path(path).read_text(encoding="utf-8"), source=str(path))

    @classmethod
    def from_mapping(cls, items):
        """Build a spec from string values, as read from a spec file."""
        known = {f.name for f in fields(cls)} | {"k"}
        kw = {}
        for key, value in items.items():
            key = key.strip().lower().replace("-", "_")
            if key not in known or key == "schedule":
                raise ValueError(f"unknown spec key {key!r}")
            value = str(value).strip()
            if key in ("dims", "ranks"):
                kw[key] = _ints(value)
            elif key == "k":
                kw["schedule"] = parse_schedule(value)
            elif key == "methods":
                kw[key] = tuple(m.strip() for m in value.split(",") if m.strip())
            elif key in ("nnz", "reps", "seed", "inner_steps", "warmup", "small_mode",
                         "oversample"):
                kw[key] = int(value)
            elif key == "single_per_tube":
                kw[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                kw[key] = value
        return cls(**kw)

    def with_overrides(self, **kw):
        """Copy with the given non-``None`` fields replaced."""
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class Instance:
    A: object
    truth: tuple = None
    seed: int = 0
    norm: float = field(init=False)

    def __post_init__(self):
        self.norm = frob_norm(self.A)


def make_instance(spec, rep, cache=None):
    seed = spec.seed + rep
    if spec.source == "file":
        if cache is not None and "file" in cache:
            return Instance(cache["file"], None, seed)
        A = load_tensor(spec.file)
        if cache is not None:
            cache["file"] = A
        return Instance(A, None, seed)
    if spec.source == "low-rank":
        A, truth, _ = gen_low_rank(spec.dims, spec.ranks, seed)
        return Instance(A, truth, seed)
    if spec.source == "gaussian":
        return Instance(gen_gaussian(spec.dims, seed), None, seed)
    return Instance(gen_sparse(spec.dims, spec.nnz, seed, spec.distribution,
                               spec.single_per_tube), None, seed)


def method_seed(rep_seed, method):
    """Seed of a method's random choices, independent across methods."""
    return np.random.SeedSequence([rep_seed, zlib.crc32(method.encode())])


def max_principal_angle(factors, truth):
    """Largest principal angle over the three modes, in radians."""
    if truth is None:
        return float("nan")
    return float(max(np.max(subspace_angles(F, X)) if F.shape[1] and X.shape[1] else 0.0
                     for F, X in zip(factors, truth)))


def _envelope(schedule):
    return tuple(max(t[i] for t in schedule) for i in range(3))


def _cubical(schedule, method):
    if any(len(set(t)) != 1 for t in schedule):
        raise ValueError(f"method {method!r} needs cubical ranks, got a non-cubical schedule")
    return max(t[0] for t in schedule)


def _krylov_run(spec, method, A, rng, schedule):
    """One recursion run large enough for every schedule entry."""
    top = _envelope(schedule)
    kw = dict(start=spec.start, random_state=rng)
    if method == "minimal":
        return minimal_recursion(A, _cubical(schedule, method), **kw)
    if method == "modified":
        return modified_minimal_recursion(A, top, **kw)
    if method == "optimized":
        return optimized_recursion(A, _cubical(schedule, method), strategy=spec.strategy,
                                   inner_steps=spec.inner_steps, warmup=spec.warmup, **kw)
    if method == "small_mode":
        small = spec.small_mode or int(np.argmin(A.shape)) + 1
        return small_mode_recursion(A, small, max(top), policy=spec.policy, **kw)
    if method == "contracted":
        return contracted_recursion(A, top, start=spec.start, random_state=rng)
    if method == "maximal":
        limits = tuple(min(r + spec.oversample, d) for r, d in zip(top, A.shape))
        return maximal_recursion(A, start=spec.start, limits=limits, random_state=rng)
    raise AssertionError(method)


def _nan_row(base):
    row = dict(base)
    for c in ("core_norm", "rel_error", "max_principal_angle", "tvv_count", "wall_ms"):
        row[c] = float("nan")
    row["breakdowns"] = -1
    return row


def _row(base, inst, factors, core, tvv, wall_ms, breakdowns):
    cn = frob_norm(core) if core.size else 0.0
    rel = math.sqrt(max(0.0, 1.0 - (cn / inst.norm) ** 2)) if inst.norm else 0.0
    row = dict(base)
    row.update(core_norm=cn, rel_error=rel,
               max_principal_angle=max_principal_angle(factors, inst.truth),
               tvv_count=tvv, wall_ms=wall_ms, breakdowns=breakdowns)
    return row


def _method_rows(spec, method, inst, rep):
    """All rows of one method on one instance, one per schedule entry.

    Recursions run once at the largest requested rank and every smaller
    entry uses a prefix of the bases (nested subspaces). A basis that
    stopped below the requested size spans its whole mode subspace and is
    used as is. The tvv count of
    a prefix is the recursion cost up to that point plus the ``p * q``
    tvvs of the core projection. Wall time covers the shared run plus
    the row's own core projection.
    """
    A = inst.A
    base = dict(experiment_id=spec.experiment_id, method=method, rep=rep, seed=inst.seed)
    ok = []
    rows = []
    for t in spec.schedule:
        b = dict(base, k=format_ranks(t))
        try:
            check_ranks(t, A.shape)
        except ValueError as exc:
            log.warning("%s %s k=%s rep=%d skipped: %s", spec.experiment_id, method, b["k"], rep,
                        exc)
            rows.append(_nan_row(b))
        else:
            ok.append((t, b))
    if not ok:
        return rows
    rng = np.random.default_rng(method_seed(inst.seed, method))
    schedule = [t for t, _ in ok]

    if method in ("hosvd", "hosvd-krylov"):
        for t, b in ok:
            try:
                t0 = time.perf_counter()
                if method == "hosvd":
                    dec = truncated_hosvd(A, t)
                    tvv, events = float("nan"), 0
                else:
                    dec = hosvd_via_krylov(A, t, oversample=spec.oversample, start=spec.start,
                                           random_state=rng)
                    tvv, events = dec.counter.tvv_equivalents, dec.meta["breakdowns"]
                wall = 1e3 * (time.perf_counter() - t0)
            except (ValueError, ArithmeticError) as exc:
                log.warning("%s %s k=%s rep=%d failed: %s", spec.experiment_id, method, b["k"],
                            rep, exc)
                rows.append(_nan_row(b))
                continue
            rows.append(_row(b, inst, dec.factors, dec.core, tvv, wall, events))
        return rows

    try:
        t0 = time.perf_counter()
        state = _krylov_run(spec, method, A, rng, schedule)
        run_ms = 1e3 * (time.perf_counter() - t0)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        log.warning("%s %s rep=%d failed: %s", spec.experiment_id, method, rep, exc)
        return rows + [_nan_row(b) for _, b in ok]

    for t, b in ok:
        if any(s < r for s, r in zip(state.sizes, t)):
            # a basis stops short only when its mode subspace is exhausted
            log.info("%s %s k=%s rep=%d: bases stopped at sizes %s", spec.experiment_id,
                     method, b["k"], rep, state.sizes)
            t = tuple(min(s, r) for s, r in zip(state.sizes, t))
        t0 = time.perf_counter()
        if method == "maximal":
            cut = maximal_truncate(state, A, t)
            factors = cut.factors
            tvv = state.counter.tvv_equivalents
            events = len(state.events)
        else:
            factors = [state.bases[m].Q[:, :r] for m, r in zip((1, 2, 3), t)]
            tvv = state.tvv_at(t)
            events = state.events_at(t)
        core = core_project(A, *factors, check=False)
        tvv += t[0] * t[1]
        wall = run_ms + 1e3 * (time.perf_counter() - t0)
        rows.append(_row(b, inst, factors, core, tvv, wall, events))
    return rows


def _sort_key(row):
    k = tuple(int(x) for x in str(row["k"]).split("x"))
    return (row["experiment_id"], METHODS.index(row["method"]), k, row["rep"])


def run_experiment(spec, write=True):
    """Run every (method, rank, repetition) of ``spec``.

    Rows that cannot be computed (for example a rank above a dimension)
    carry NaN values and ``breakdowns = -1``, a warning is logged and the
    run continues. Rows are sorted by method, rank and repetition, so
    equal specs give equal reports apart from ``wall_ms``.

    Returns
    -------
    list of dict
        One dict per CSV row; also written to ``spec.output`` when
        ``write`` is true.
    """
    rows = []
    cache = {}
    for rep in range(spec.reps):
        inst = make_instance(spec, rep, cache)
        for method in spec.methods:
            rows.extend(_method_rows(spec, method, inst, rep))
    rows.sort(key=_sort_key)
    if write:
        write_csv(rows, spec.output)
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, path):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in COLUMNS])


def read_csv(path):
    """Read a report back; numeric columns become numbers."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for c in ("rep", "seed", "breakdowns"):
                row[c] = int(row[c])
            for c in ("core_norm", "rel_error", "max_principal_angle", "tvv_count", "wall_ms"):
                row[c] = float(row[c])
            out.append(row)
    return out


def win_fraction(rows, method, baseline, k=None):
    """Fraction of repetitions where ``method`` has a larger core norm than ``baseline``.

    Only repetitions where both methods produced a value count.
    """
    def norms(name):
        return {(r["k"], r["rep"]): r["core_norm"] for r in rows
                if r["method"] == name and (k is None or r["k"] == str(k))
                and not math.isnan(r["core_norm"])}

    a, b = norms(method), norms(baseline)
    keys = sorted(set(a) & set(b))
    if not keys:
        raise ValueError(f"no repetitions with both {method!r} and {baseline!r}")
    return sum(a[key] > b[key] for key in keys) / len(keys)

"""``tensorkrylov`` command line.

Every option can also be set through an environment variable named
``TKRYLOV_<COMMAND>_<OPTION>``, for example ``TKRYLOV_RUN_OUTPUT`` or
``TKRYLOV_GEN_SEED``.
"""

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from ..io import load_tensor, save_tensor
from ..krylov import factorization_residuals, load_state
from ..tensor import SparseTensor3, frob_norm
from .experiment import METHODS, ExperimentSpec, run_experiment

ENV_PREFIX = "TKRYLOV"


def _load(path):
    try:
        return load_tensor(path)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _triple(ctx, param, value):
    if value is None:
        return None
    try:
        t = tuple(int(x) for x in value.replace("x", ",").split(","))
    except ValueError:
        raise click.BadParameter(f"expected three integers, got {value!r}") from None
    if len(t) == 1:
        t = t * 3
    if len(t) != 3:
        raise click.BadParameter(f"expected one or three integers, got {value!r}")
    return t


@click.group(context_settings={"auto_envvar_prefix": ENV_PREFIX, "show_default": True})
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def main(verbose):
    """Tensor Krylov recursions and low multilinear rank approximation."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("output", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--kind", type=click.Choice(["low-rank", "gaussian", "sparse"]), default="low-rank")
@click.option("--dims", callback=_triple, default="50,60,40", help="Dimensions l,m,n.")
@click.option("--ranks", callback=_triple, default="10,10,10", help="Multilinear rank (low-rank).")
@click.option("--nnz", type=int, default=1000, help="Stored entries (sparse).")
@click.option("--distribution", type=click.Choice(["normal", "uniform", "ones"]), default="normal")
@click.option("--single-per-tube", is_flag=True, help="At most one nonzero per mode-3 fibre.")
@click.option("--seed", type=int, default=0)
@click.option("--truth", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Also write the ground-truth factors and core (low-rank) to this .npz.")
def gen(output, kind, dims, ranks, nnz, distribution, single_per_tube, seed, truth):
    """Write a synthetic tensor to OUTPUT (.npy dense, otherwise coordinate text)."""
    from .generators import gen_gaussian, gen_low_rank, gen_sparse

    try:
        if kind == "low-rank":
            A, (X, Y, Z), C = gen_low_rank(dims, ranks, seed)
            if truth is not None:
                np.savez(truth, X=X, Y=Y, Z=Z, core=C)
        elif kind == "gaussian":
            A = gen_gaussian(dims, seed)
        else:
            A = gen_sparse(dims, nnz, seed, distribution, single_per_tube)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    save_tensor(A, output)
    click.echo(f"wrote {kind} tensor {'x'.join(map(str, dims))} to {output}")


@main.command()
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--output", default=None, help="CSV path; overrides the spec's 'output'.")
@click.option("--reps", type=int, default=None, help="Overrides the spec's 'reps'.")
@click.option("--seed", type=int, default=None, help="Overrides the spec's 'seed'.")
@click.option("--start", default=None, help="random, fibre-mean or file:PATH.")
def run(spec_file, output, reps, seed, start):
    """Run the experiment described by SPEC_FILE and write a CSV report."""
    try:
        spec = ExperimentSpec.from_file(spec_file).with_overrides(
            output=output, reps=reps, seed=seed, start=start)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    rows = run_experiment(spec)
    failed = sum(r["breakdowns"] < 0 for r in rows)
    click.echo(f"{len(rows)} rows written to {spec.output}" + (f" ({failed} failed)" if failed else ""))


@main.command()
@click.argument("tensor", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("output", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--method", type=click.Choice(METHODS), default="minimal")
@click.option("--ranks", callback=_triple, default="10", help="k or p,q,r.")
@click.option("--start", default="random", help="random, fibre-mean or file:PATH.")
@click.option("--seed", type=int, default=0)
def decompose(tensor, output, method, ranks, start, seed):
    """Approximate TENSOR and archive the result in OUTPUT (.npz).

    Krylov methods archive the full recursion state, which `verify` can
    check; the HOSVD methods archive the Tucker factors and core.
    """
    from ..estimator import KrylovTucker

    A = _load(tensor)
    est = KrylovTucker(ranks=ranks, method=method, start=start, random_state=seed)
    try:
        est.fit(A)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    if est.state_ is not None:
        est.state_.save(output)
    else:
        from ..tucker import TuckerDecomp

        TuckerDecomp(est.U_, est.V_, est.W_, est.core_, method, est.error_).save(output)
    click.echo(f"{method}: ranks {est.core_.shape}, relative error {est.relative_error_:.6e}")
    click.echo(f"archive written to {output}")


@main.command()
@click.argument("archive", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tensor", "tensor_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Tensor the archived state was computed from.")
@click.option("--tol", type=float, default=1e-10, help="Largest acceptable relative residual.")
def verify(archive, tensor_path, tol):
    """Check the factorization identities of a recursion state ARCHIVE.

    Exits with status 1 when any residual exceeds TOL.
    """
    A = _load(tensor_path)
    try:
        state = load_state(archive)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    if tuple(state.dims) != tuple(A.shape):
        raise click.UsageError(f"archive dims {tuple(state.dims)} differ from tensor {A.shape}")
    report = factorization_residuals(A, state, tol=tol)
    for key, val in report.items():
        if key not in ("max", "ok"):
            click.echo(f"{key:14s} {val:.3e}")
    click.echo(f"{'max':14s} {report['max']:.3e}")
    click.echo("OK" if report["ok"] else f"FAILED (tol {tol:g})")
    sys.exit(0 if report["ok"] else 1)


def _archive_info(path):
    with np.load(path, allow_pickle=False) as z:
        if "meta" not in z.files:
            raise ValueError(f"{path} is not a tensorkrylov archive")
        meta = json.loads(str(z["meta"]))
        shapes = {k: z[k].shape for k in z.files if k != "meta"}
    return meta, shapes


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def info(path):
    """Print statistics of a tensor file or a summary of an archive."""
    if path.suffix == ".npz":
        try:
            meta, shapes = _archive_info(path)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from None
        click.echo(f"archive      {meta.get('kind')}")
        click.echo(f"method       {meta.get('method')}")
        for key in ("dims", "ranks", "error", "counter"):
            if key in meta:
                click.echo(f"{key:12s} {meta[key]}")
        for key, shape in shapes.items():
            click.echo(f"{key:12s} array {shape}")
        return
    A = _load(path)
    size = int(np.prod(A.shape))
    if isinstance(A, SparseTensor3):
        nnz, kind = A.nnz, "sparse"
        vals = A.values
    else:
        vals = A.ravel()
        nnz, kind = int(np.count_nonzero(vals)), "dense"
    click.echo(f"format       {kind}")
    click.echo(f"dims         {'x'.join(map(str, A.shape))}")
    click.echo(f"nnz          {nnz}")
    click.echo(f"density      {nnz / size:.6g}")
    click.echo(f"norm         {frob_norm(A):.12g}")
    if vals.size:
        click.echo(f"min/max      {vals.min():.6g} / {vals.max():.6g}")
    for mode in (1, 2, 3):
        if isinstance(A, SparseTensor3):
            used = np.unique(A.mode_coords(mode)).size
        else:
            axes = tuple(ax for ax in range(3) if ax != mode - 1)
            used = int(np.count_nonzero(np.abs(A).sum(axis=axes)))
        click.echo(f"mode {mode}       nonempty slices {used}/{A.shape[mode - 1]}")


if __name__ == "__main__":  # pragma: no cover
    main()

"""Click CLI: theory, sweep, haar, mcmc, compare, check, replay commands."""

import functools
import logging
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError
from rich.markup import escape
from rich.table import Table

from . import theory
from .errors import (
    BelowBetaMinus,
    DomainError,
    NumericalError,
    SampleError,
    SchemaError,
    SpectrumInvalid,
    UnsupportedImbalance,
)
from .loader import format_validation_error, load_manifest, load_spectra
from .models import (
    CompareParams,
    HaarParams,
    McmcParams,
    Phase,
    RecordMode,
    SweepParams,
    TheoryParams,
)
from .outputs import (
    now,
    write_chain_csv,
    write_histogram_csv,
    write_json,
    write_manifest,
    write_purity_csv,
    write_spectra_csv,
    write_sweep_csv,
)
from .utils import THREADS_ENV, console, ensure_output_dir, err_console, format_file_size, setup_logging, timer

logger = logging.getLogger("isopurity")

PHASE_QUANTITIES = ("a", "b", "c", "phase", "xi_im", "density", "r", "G", "s_rel", "reported_F", "reported_S")
QUANTITIES = PHASE_QUANTITIES + ("cumulants",)
EMIT_CHOICES = {"purity": RecordMode.PURITY, "spectra": RecordMode.SPECTRUM, "both": RecordMode.BOTH}
HISTOGRAM_SPAN = 1.25  # histogram range is [0, HISTOGRAM_SPAN * a]

USAGE_ERRORS = (DomainError, SpectrumInvalid, SampleError, SchemaError, FileNotFoundError)


def exits_on_error(fn):
    """Map library errors to exit codes: 2 for bad input, 3 for numerical failure."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        verbose = click.get_current_context().obj.get("verbose", False)
        try:
            return fn(*args, **kwargs)
        except ValidationError as e:
            err_console.print(f"[red]Error:[/red] {escape(format_validation_error(e, 'parameters'))}")
            sys.exit(2)
        except USAGE_ERRORS as e:
            err_console.print(f"[red]Error:[/red] {escape(str(e))}")
            if verbose:
                err_console.print_exception()
            sys.exit(2)
        except NumericalError as e:
            err_console.print(f"[red]Numerical failure:[/red] {escape(str(e))}")
            if verbose:
                err_console.print_exception()
            sys.exit(3)

    return wrapper


def _parse_quantities(ctx, param, value: str) -> list[str]:
    names = [q.strip() for q in value.split(",") if q.strip()]
    unknown = [q for q in names if q not in QUANTITIES]
    if unknown or not names:
        raise click.BadParameter(f"unknown quantity {', '.join(unknown) or '(none)'}; choose from {','.join(QUANTITIES)}")
    return names


def _manifest_path(out: Path) -> Path:
    """Single-file commands keep their manifest next to the output as <stem>.manifest.json."""
    return out.with_name(out.stem + ".manifest.json")


# ── Command bodies (shared with replay) ──────────────────────────────────────

def _quantity(name: str, beta: float, lam: float | None):
    if name == "density":
        return theory.density(beta, lam)
    if name == "r":
        return theory.mean_purity_coeff(beta)
    if name == "G":
        return theory.log_mgf(beta)
    if name == "s_rel":
        return theory.entropy_rel(beta)
    if name == "reported_F":
        return theory.reported_free_energy(beta)
    if name == "reported_S":
        return theory.reported_entropy(beta)
    p = theory.support_params(beta)
    return {"a": p.a, "b": p.b, "c": p.c, "phase": p.phase.value, "xi_im": p.xi_im}[name]


def _cumulants(mu) -> dict:
    entries = theory.cumulant_set(mu).entries
    return {
        str(order): {"coefficient": str(coefficient), "power": power, "value_coefficient": float(coefficient)}
        for order, (coefficient, power) in entries.items()
    }


def evaluate_theory(params: TheoryParams) -> dict:
    """Requested quantities at one beta; below beta_minus they become null if allowed."""
    if "density" in params.quantities and params.lam is None:
        raise click.UsageError("--quantity density requires --lambda")
    mu = params.mu_fraction
    if mu != 0 and any(q in PHASE_QUANTITIES for q in params.quantities):
        raise UnsupportedImbalance("phase-diagram quantities are available for mu=0 only")

    result: dict = {}
    errors: dict[str, str] = {}
    for name in params.quantities:
        if name == "cumulants":
            result[name] = _cumulants(mu)
            continue
        try:
            result[name] = _quantity(name, params.beta, params.lam)
        except BelowBetaMinus as e:
            if not params.allow_below_critical:
                raise
            result[name] = None
            errors[name] = str(e)
    if errors:
        result["errors"] = errors
    return result


def run_sweep(params: SweepParams, out: Path) -> list[Path]:
    if params.mu_fraction != 0:
        raise UnsupportedImbalance("the analytic phase diagram is available for mu=0 only")
    theory.check_domain(params.beta_min)
    theory.check_domain(params.beta_max)
    betas = theory.beta_grid(params.beta_min, params.beta_max, params.steps)
    with timer(f"sweep over {len(betas)} betas", logger):
        table = theory.sweep(betas, params.mu_fraction)
    return [write_sweep_csv(out, table)]


def run_haar(params: HaarParams, out_dir: Path, workers: int | None) -> list[Path]:
    from .core import make_dims
    from .haar import purity_batch

    dims = make_dims(params.n, params.m)
    keep_spectra = params.emit in (RecordMode.SPECTRUM, RecordMode.BOTH)
    with timer(f"Haar batch of {params.samples} states (n={params.n}, m={params.m})", logger):
        batch = purity_batch(dims, params.samples, params.seed, chains=params.chains,
                             keep_spectra=keep_spectra, workers=workers)

    written = [write_purity_csv(out_dir / "purity.csv", batch.purities)]
    if keep_spectra:
        written.append(write_spectra_csv(out_dir / "spectra.csv", batch.spectra))
    written.append(write_json(out_dir / "summary.json", batch.summary))
    return written


def run_mcmc(params: McmcParams, out_dir: Path, workers: int | None) -> list[Path]:
    from .coulomb import run_chains

    with timer(f"{params.chains} chain(s) of {params.sweeps} sweeps (n={params.n}, beta={params.beta})", logger):
        outputs = run_chains(
            n=params.n, beta=params.beta, mu=params.mu_fraction, sweeps=params.sweeps,
            burn_in=params.burn_in, thin=params.thin, seed=params.seed, chains=params.chains,
            init_mode=params.init, record=RecordMode.BOTH, workers=workers,
        )

    written = [
        write_chain_csv(out_dir / f"chain_{k}.csv", out.sweeps, out.purity)
        for k, out in enumerate(outputs)
    ]
    written.append(write_spectra_csv(out_dir / "spectra.csv", [out.spectra for out in outputs]))

    pooled = np.concatenate([out.purity for out in outputs])
    diagnostics = {
        "chains": [out.diagnostics.model_dump(mode="json") for out in outputs],
        "pooled": {
            "recorded": int(pooled.size),
            "mean_purity": float(pooled.mean()),
            "mean_scaled_purity": float(params.n * pooled.mean()),
            "evaporation_flag": any(out.diagnostics.evaporation_flag for out in outputs),
            "r_theory": _r_theory(params),
        },
    }
    written.append(write_json(out_dir / "diagnostics.json", diagnostics))
    return written


def _r_theory(params: McmcParams) -> float | None:
    if params.mu_fraction != 0 or params.beta < theory.BETA_MINUS:
        return None
    return theory.mean_purity_coeff(params.beta)


def run_compare(params: CompareParams, out: Path) -> tuple[dict, list[Path]]:
    from .stats import empirical_density, ks_one_sample, l1_distance

    if params.mu_fraction != 0:
        raise UnsupportedImbalance("the analytic density is available for mu=0 only")
    spectra = load_spectra(params.spectra)
    support = theory.support_params(params.beta)
    lower = support.b if support.phase == Phase.SEMICIRCLE else 0.0
    values = spectra.rescaled

    histogram = empirical_density(values, params.bins, (0.0, HISTOGRAM_SPAN * support.a))
    rho = theory.density_function(params.beta)
    cdf = functools.partial(theory.cumulative, params.beta)
    result = {
        "l1": l1_distance(histogram, lambda x: float(rho(np.array([x]))[0]), cdf=cdf),
        "ks_vs_analytic_cdf": ks_one_sample(values, cdf),
        "bins": params.bins,
        "support": [lower, support.a],
        "n": spectra.n,
        "samples": int(spectra.spectra.shape[0]),
        "out_of_range": histogram.out_of_range,
    }
    hist_path = write_histogram_csv(out.parent / "histogram.csv", histogram, rho(histogram.midpoints))
    return result, [write_json(out, result), hist_path]


def _report(written: list[Path]) -> None:
    for path in written:
        console.print(f"  [green]wrote[/green] {path} ({format_file_size(path.stat().st_size)})")


# ── Commands ─────────────────────────────────────────────────────────────────

@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging.")
@click.option("--threads", type=int, default=None, envvar=THREADS_ENV, help=f"Worker cap (env {THREADS_ENV}).")
@click.pass_context
def main(ctx: click.Context, verbose: bool, threads: int | None) -> None:
    """isopurity: purity statistics of random bipartite states."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["threads"] = threads
    setup_logging(verbose)


@main.command("theory")
@click.option("--beta", type=float, required=True)
@click.option("--mu", default="0", show_default=True, help="Imbalance (m-n)/n, e.g. 1/2.")
@click.option("--quantity", "quantities", default="a,b,c,r", show_default=True, callback=_parse_quantities,
              help=f"Comma-separated subset of {','.join(QUANTITIES)}.")
@click.option("--lambda", "lam", type=float, default=None, help="Rescaled eigenvalue for --quantity density.")
@click.option("--out", "-o", type=click.Path(dir_okay=False), required=True, help="JSON file.")
@click.option("--allow-below-critical", is_flag=True, help="Report null values below beta_minus instead of failing.")
@click.pass_context
@exits_on_error
def theory_cmd(ctx, beta, mu, quantities, lam, out, allow_below_critical) -> None:
    """Evaluate analytic quantities at one beta."""
    started = now()
    params = TheoryParams(beta=beta, mu=mu, quantities=quantities, lam=lam,
                          allow_below_critical=allow_below_critical)
    result = evaluate_theory(params)
    path = Path(out)
    ensure_output_dir(path.parent)
    write_json(path, result)
    write_manifest(_manifest_path(path), "theory", params, started, [path])
    _report([path])


@main.command("sweep")
@click.option("--beta-min", type=float, required=True)
@click.option("--beta-max", type=float, required=True)
@click.option("--steps", type=int, required=True)
@click.option("--mu", default="0", show_default=True)
@click.option("--out", "-o", type=click.Path(dir_okay=False), default="sweep.csv", show_default=True)
@click.pass_context
@exits_on_error
def sweep_cmd(ctx, beta_min, beta_max, steps, mu, out) -> None:
    """Tabulate the phase diagram on an evenly spaced beta grid."""
    started = now()
    params = SweepParams(beta_min=beta_min, beta_max=beta_max, steps=steps, mu=mu)
    path = Path(out)
    ensure_output_dir(path.parent)
    written = run_sweep(params, path)
    write_manifest(_manifest_path(path), "sweep", params, started, written)
    _report(written)


@main.command("haar")
@click.option("--n", "n", type=int, required=True, help="Dimension of subsystem A.")
@click.option("--m", "m", type=int, required=True, help="Dimension of subsystem B (m >= n).")
@click.option("--samples", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chains", type=int, default=1, show_default=True, help="Independent seeded sub-streams.")
@click.option("--emit", type=click.Choice(list(EMIT_CHOICES)), default="purity", show_default=True)
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), default="./output", show_default=True)
@click.pass_context
@exits_on_error
def haar_cmd(ctx, n, m, samples, seed, chains, emit, out_dir) -> None:
    """Sample Haar-random states and record their purities."""
    started = now()
    params = HaarParams(n=n, m=m, samples=samples, seed=seed, chains=chains, emit=EMIT_CHOICES[emit])
    out = ensure_output_dir(Path(out_dir))
    written = run_haar(params, out, ctx.obj["threads"])
    write_manifest(out / "manifest.json", "haar", params, started, written)
    _report(written)


@main.command("mcmc")
@click.option("--n", "n", type=int, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--mu", default="0", show_default=True)
@click.option("--sweeps", type=int, required=True, help="Total sweeps, burn-in included.")
@click.option("--burn-in", type=int, default=0, show_default=True)
@click.option("--thin", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chains", type=int, default=1, show_default=True)
@click.option("--init", "init", type=click.Choice(["uniform-jitter", "haar-draw"]), default="uniform-jitter",
              show_default=True)
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), default="./output", show_default=True)
@click.pass_context
@exits_on_error
def mcmc_cmd(ctx, n, beta, mu, sweeps, burn_in, thin, seed, chains, init, out_dir) -> None:
    """Run Coulomb-gas Metropolis chains at fixed beta."""
    started = now()
    params = McmcParams(n=n, beta=beta, mu=mu, sweeps=sweeps, burn_in=burn_in, thin=thin,
                        seed=seed, chains=chains, init=init)
    out = ensure_output_dir(Path(out_dir))
    written = run_mcmc(params, out, ctx.obj["threads"])
    write_manifest(out / "manifest.json", "mcmc", params, started, written)
    _report(written)


@main.command("compare")
@click.option("--spectra", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--beta", type=float, required=True)
@click.option("--mu", default="0", show_default=True)
@click.option("--bins", type=int, default=60, show_default=True)
@click.option("--out", "-o", type=click.Path(dir_okay=False), default="compare.json", show_default=True)
@click.pass_context
@exits_on_error
def compare_cmd(ctx, spectra, beta, mu, bins, out) -> None:
    """Compare a spectra file with the analytic eigenvalue density."""
    started = now()
    params = CompareParams(spectra=spectra, beta=beta, mu=mu, bins=bins)
    path = Path(out)
    ensure_output_dir(path.parent)
    result, written = run_compare(params, path)
    write_manifest(_manifest_path(path), "compare", params, started, written)
    console.print(f"L1 = {result['l1']:.4f}   KS = {result['ks_vs_analytic_cdf']:.4f}")
    _report(written)


@main.command("check")
def check_cmd() -> None:
    """Verify analytic landmarks (r values, moments, cumulants, identities)."""
    from .checks import run_checks

    ok = run_checks(console)
    sys.exit(0 if ok else 1)


@main.command("replay")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), required=True)
@click.pass_context
@exits_on_error
def replay_cmd(ctx, manifest_path, out_dir) -> None:
    """Re-run a command from its manifest and compare output digests."""
    from .utils import file_digest

    manifest = load_manifest(manifest_path)
    out = ensure_output_dir(Path(out_dir))
    workers = ctx.obj["threads"]
    name = manifest.command
    first = out / manifest.outputs[0].path if manifest.outputs else out / "output"

    if name == "theory":
        params = TheoryParams.model_validate(manifest.parameters)
        written = [write_json(first, evaluate_theory(params))]
    elif name == "sweep":
        written = run_sweep(SweepParams.model_validate(manifest.parameters), first)
    elif name == "haar":
        written = run_haar(HaarParams.model_validate(manifest.parameters), out, workers)
    elif name == "mcmc":
        written = run_mcmc(McmcParams.model_validate(manifest.parameters), out, workers)
    elif name == "compare":
        _, written = run_compare(CompareParams.model_validate(manifest.parameters), first)
    else:
        raise SchemaError(f"unknown command {name!r} in {manifest_path}")

    digests = {p.name: file_digest(p) for p in written}
    table = Table(title=f"Replay of {name}")
    table.add_column("File", style="cyan")
    table.add_column("Status", style="bold")
    all_ok = True
    for entry in manifest.outputs:
        ok = digests.get(entry.path) == entry.sha256
        all_ok &= ok
        table.add_row(entry.path, "[green]identical[/green]" if ok else "[red]differs[/red]")
    console.print(table)
    sys.exit(0 if all_ok else 1)


if __name__ == "__main__":
    main()

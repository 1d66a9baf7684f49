#!/usr/bin/env python3
"""
Regenerate the figure data: eigenvalue densities at several temperatures and
the mean-purity curve, all through the isopurity CLI.

Usage:
    python reproduce_figures.py                        # Full run (minutes per beta)
    python reproduce_figures.py --betas 0,2            # Only some densities
    python reproduce_figures.py --quick                # Short chains, smoke test
    python reproduce_figures.py --skip-mcmc            # Only the sweep and the Haar check

Stages:
    sweep  : r, G, s_rel on beta_minus..4 (200 points)
    mcmc   : n=64 chains at each beta, then compare against the analytic density
    haar   : n=m=64 Haar spectra compared with the beta=0 density
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

console = Console()

ROOT = Path(__file__).parent
OUTPUT_DIR = ROOT / "output" / "figures"

DENSITY_BETAS = ["-1/27", "0", "1", "2", "8"]
L1_LIMIT = 0.07


def as_float(beta: str) -> float:
    num, _, den = beta.partition("/")
    return float(num) / float(den) if den else float(num)


def run_cli(*args: str) -> bool:
    """Run one isopurity command; True on exit code 0."""
    cmd = ["isopurity", *args]
    console.print(f"  [dim]$ {' '.join(cmd)}[/dim]")
    result = subprocess.run(cmd, capture_output=False, cwd=ROOT)
    if result.returncode != 0:
        console.print(f"[red]Command failed with exit code {result.returncode}[/red]")
        return False
    return True


# ── Stages ────────────────────────────────────────────────────────────────────

def sweep_stage() -> bool:
    console.print("\n[bold]Mean-purity curve[/bold]")
    return run_cli("sweep", "--beta-min", "-0.074", "--beta-max", "4", "--steps", "200",
                   "--out", str(OUTPUT_DIR / "sweep.csv"))


def density_stage(beta: str, n: int, sweeps: int, burn_in: int, seed: int) -> dict | None:
    console.print(f"\n[bold]Density at beta={beta}[/bold]")
    run_dir = OUTPUT_DIR / f"mcmc_beta_{beta.replace('/', '_')}"
    ok = run_cli("mcmc", "--n", str(n), "--beta", repr(as_float(beta)), "--sweeps", str(sweeps),
                 "--burn-in", str(burn_in), "--seed", str(seed), "--out-dir", str(run_dir))
    if not ok:
        return None
    ok = run_cli("compare", "--spectra", str(run_dir / "spectra.csv"), "--beta", repr(as_float(beta)),
                 "--out", str(run_dir / "compare.json"))
    if not ok:
        return None
    result = json.loads((run_dir / "compare.json").read_text(encoding="utf-8"))
    diagnostics = json.loads((run_dir / "diagnostics.json").read_text(encoding="utf-8"))
    result["mean_scaled_purity"] = diagnostics["pooled"]["mean_scaled_purity"]
    result["r_theory"] = diagnostics["pooled"]["r_theory"]
    result["evaporated"] = diagnostics["pooled"]["evaporation_flag"]
    return result


def haar_stage(n: int, samples: int, seed: int) -> dict | None:
    console.print("\n[bold]Haar spectra against the beta=0 density[/bold]")
    run_dir = OUTPUT_DIR / "haar"
    if not run_cli("haar", "--n", str(n), "--m", str(n), "--samples", str(samples), "--seed", str(seed),
                   "--emit", "both", "--out-dir", str(run_dir)):
        return None
    if not run_cli("compare", "--spectra", str(run_dir / "spectra.csv"), "--beta", "0",
                   "--out", str(run_dir / "compare.json")):
        return None
    return json.loads((run_dir / "compare.json").read_text(encoding="utf-8"))


def summary_table(results: dict[str, dict]) -> Table:
    table = Table(title="Density comparison")
    table.add_column("beta", style="cyan")
    table.add_column("L1", justify="right")
    table.add_column("KS", justify="right")
    table.add_column("n<pi>", justify="right")
    table.add_column("r(beta)", justify="right")
    table.add_column("Status", style="bold")
    for beta, r in results.items():
        ok = r["l1"] < L1_LIMIT
        mean = r.get("mean_scaled_purity")
        theory = r.get("r_theory")
        table.add_row(
            beta,
            f"{r['l1']:.4f}",
            f"{r['ks_vs_analytic_cdf']:.4f}",
            f"{mean:.4f}" if mean is not None else "-",
            f"{theory:.4f}" if theory is not None else "-",
            "[green]OK[/green]" if ok else "[red]OFF[/red]",
        )
    return table


# ── Main ──────────────────────────────────────────────────────────────────────

def main() -> None:
    parser = argparse.ArgumentParser(
        description="Regenerate density and mean-purity figure data.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("Usage:")[1].strip() if "Usage:" in __doc__ else "",
    )
    parser.add_argument("--betas", default=",".join(DENSITY_BETAS),
                        help=f"Comma-separated betas for the density figure. Default: {','.join(DENSITY_BETAS)}")
    parser.add_argument("--n", type=int, default=64, help="Subsystem dimension. Default: 64")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true", help="Short chains and small Haar batch")
    parser.add_argument("--skip-mcmc", action="store_true", help="Skip the density chains")
    args = parser.parse_args()

    sweeps, burn_in, samples = (3_000, 500, 500) if args.quick else (22_000, 2_000, 400)
    betas = [b.strip() for b in args.betas.split(",") if b.strip()]

    console.print(Panel(
        f"[bold]isopurity figure data[/bold]\n"
        f"Densities: {', '.join(betas) if not args.skip_mcmc else 'skipped'}\n"
        f"n: {args.n}   sweeps: {sweeps}   Haar samples: {samples}\n"
        f"Output: {OUTPUT_DIR}",
        style="blue",
    ))
    OUTPUT_DIR.mkdir(parents=True, exist_ok=True)

    if not sweep_stage():
        sys.exit(1)

    results: dict[str, dict] = {}
    if not args.skip_mcmc:
        for beta in betas:
            result = density_stage(beta, args.n, sweeps, burn_in, args.seed)
            if result is None:
                console.print(f"\n[red]Aborting: beta={beta} failed.[/red]")
                sys.exit(1)
            results[beta] = result

    haar = haar_stage(args.n, samples, args.seed)
    if haar is None:
        sys.exit(1)
    results["haar (0)"] = haar

    console.print()
    console.print(summary_table(results))
    console.print(f"\n[green bold]Done![/green bold] {OUTPUT_DIR}")


if __name__ == "__main__":
    main()

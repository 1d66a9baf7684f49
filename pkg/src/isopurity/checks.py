"""Self-check of the analytic landmarks of the phase diagram."""

import math
from collections.abc import Callable
from fractions import Fraction

from rich.console import Console
from rich.table import Table

from . import theory

LANDMARK_TOL = 1e-10
MOMENT_BETAS = (theory.BETA_MINUS, -0.05, 0.0, 0.5, 1.0, 2.0, 5.0, 20.0)
IDENTITY_BETAS = (0.5, 1.0, 1.9, 2.5, 4.0, 10.0)
FD_STEP = 1e-5


def check_landmarks() -> tuple[bool, str]:
    """r at beta_minus, 0, beta_plus and 4 against 9/4, 2, 5/4, 9/8."""
    expected = {theory.BETA_MINUS: 2.25, 0.0: 2.0, theory.BETA_PLUS: 1.25, 4.0: 1.125}
    worst = max(abs(theory.mean_purity_coeff(b) - r) for b, r in expected.items())
    return worst <= LANDMARK_TOL, f"max deviation {worst:.1e}"


def check_moments() -> tuple[bool, str]:
    """Density normalisation and first moment over a beta grid."""
    worst = 0.0
    for beta in MOMENT_BETAS:
        norm, mean = theory.density_moments(beta)
        worst = max(worst, abs(norm - 1.0), abs(mean - 1.0))
    return worst <= theory.MOMENT_TOL, f"max deviation {worst:.1e} over {len(MOMENT_BETAS)} betas"


def check_taylor() -> tuple[bool, str]:
    from_series = theory.cumulants_from_taylor(6)
    exact = [theory.cumulant_exact(n)[0] for n in range(1, 7)]
    ok = from_series == exact
    return ok, "orders 1-6 agree exactly" if ok else f"{from_series} != {exact}"


def check_unbalanced_limit() -> tuple[bool, str]:
    """Unbalanced cumulant formulas at mu = 0 against the balanced ones."""
    zero = Fraction(0)
    ok = all(theory._unbalanced_cumulant(n, zero) == theory._balanced_cumulant(n) for n in range(1, 6))
    return ok, "orders 1-5 agree exactly" if ok else "mismatch at mu=0"


def check_identity() -> tuple[bool, str]:
    """d(beta F)/d beta = r on the printed free energies, by central differences."""
    worst = 0.0
    for beta in IDENTITY_BETAS:
        bf = lambda b: b * theory.reported_free_energy(b)  # noqa: E731
        slope = (bf(beta + FD_STEP) - bf(beta - FD_STEP)) / (2 * FD_STEP)
        worst = max(worst, abs(slope - theory.mean_purity_coeff(beta)))
    return worst <= 1e-6, f"max deviation {worst:.1e}"


def check_continuity() -> tuple[bool, str]:
    """Edges continuous across beta_plus."""
    below = theory.support_params(theory.BETA_PLUS)
    above = theory.support_params(math.nextafter(theory.BETA_PLUS, math.inf))
    worst = max(abs(below.a - above.a), abs(below.b - above.b))
    return worst <= LANDMARK_TOL, f"|jump| {worst:.1e}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("r landmarks", check_landmarks),
    ("density moments", check_moments),
    ("edges at beta_plus", check_continuity),
    ("Taylor vs cumulants", check_taylor),
    ("unbalanced at mu=0", check_unbalanced_limit),
    ("printed F identity", check_identity),
]


def run_checks(console: Console | None = None) -> bool:
    """Run all landmark checks and print a table. Returns True if all pass."""
    console = console or Console()
    table = Table(title="Landmark Checks")
    table.add_column("Check", style="cyan")
    table.add_column("Status", style="bold")
    table.add_column("Details")

    all_ok = True
    for name, check_fn in CHECKS:
        try:
            ok, detail = check_fn()
        except Exception as e:
            ok, detail = False, f"{type(e).__name__}: {e}"
        status = "[green]OK[/green]" if ok else "[red]FAIL[/red]"
        if not ok:
            all_ok = False
        table.add_row(name, status, detail)

    console.print(table)

    if all_ok:
        console.print("\n[green]All checks passed.[/green]")
    else:
        console.print("\n[red]Some checks failed.[/red]")

    return all_ok

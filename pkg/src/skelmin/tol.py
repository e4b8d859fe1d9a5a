"""Single tolerance policy used by every geometric comparison in the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """One knob per comparison class; defaults are the reproducibility contract.

    geo: coordinate tolerance for dedup / membership.
    unit: unit-vector and orthonormality checks.
    cover: relative uncovered-measure threshold below which a face counts as
        fully covered during erosion.
    quad: relative target for adaptive quadrature.
    rotondity_floor: minimum admissible rotondity for merge gap cells.
    """

    geo: float = 1e-9
    unit: float = 1e-12
    cover: float = 1e-6
    quad: float = 1e-6
    rotondity_floor: float = 0.02
    # quantization step for canonical vertex keys; must sit well above geo
    # and well below the minimum feature size of any grid we build.
    quant: float = 1e-7


DEFAULT_TOL = Tolerances()


def vkey(coords, tol: Tolerances = DEFAULT_TOL):
    """Canonical hashable key for a vertex, stable under <= geo jitter."""
    q = tol.quant
    return tuple(int(round(float(c) / q)) for c in coords)

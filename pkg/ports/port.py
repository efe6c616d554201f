"""Power ports: an effort/flow pair and the pairing that turns it into watts."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from forms.cochain import BoundaryField, Form, FormError, TensorValuedForm
from forms.operators import integrate, pair, wedge
from forms.tensor import dot_wedge
from rigidbody.se3 import FrameMismatchError, Twist, Wrench, power


class PortError(ValueError):
    pass


class PairingKind(str, Enum):
    DOMAIN_WEDGE = "domain-wedge"
    BOUNDARY_DOT = "boundary-dot-wedge"
    FINITE_DUAL = "finite-dual"


@dataclass(frozen=True)
class PowerPort:
    """Effort/flow carriers with a pairing kind; `sign` orients the power.

    A flow of None marks a constraint port (Lagrange multiplier) that
    carries no power.
    """
    name: str
    effort: Any
    flow: Any
    kind: PairingKind
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PortError(f"port '{self.name}': sign must be +1 or -1")
        object.__setattr__(self, "kind", PairingKind(self.kind))


def _domain_power(e, f) -> float:
    if isinstance(e, TensorValuedForm) and isinstance(f, TensorValuedForm):
        return integrate(dot_wedge(e, f))
    if isinstance(e, Form) and isinstance(f, Form):
        if e.dual != f.dual:
            return pair(e, f)
        return integrate(wedge(e, f))
    raise PortError(f"domain pairing of {type(e).__name__} with {type(f).__name__}")


def _boundary_power(e, f) -> float:
    if isinstance(e, BoundaryField) and isinstance(f, BoundaryField):
        return integrate(dot_wedge(e, f))
    if isinstance(e, Form) and isinstance(f, Form) and e.component is not None:
        return integrate(wedge(e, f))
    raise PortError(f"boundary pairing of {type(e).__name__} with {type(f).__name__}")


def _finite_power(e, f) -> float:
    if isinstance(e, Wrench) and isinstance(f, Twist):
        return power(e, f)
    if isinstance(e, (Wrench, Twist)) or isinstance(f, (Wrench, Twist)):
        raise PortError("finite ports pair a wrench with a twist")
    e, f = np.asarray(e, dtype=float), np.asarray(f, dtype=float)
    if e.shape != f.shape:
        raise PortError(f"finite effort/flow shapes differ: {e.shape} vs {f.shape}")
    return float(np.sum(e * f))


_PAIRINGS = {
    PairingKind.DOMAIN_WEDGE: _domain_power,
    PairingKind.BOUNDARY_DOT: _boundary_power,
    PairingKind.FINITE_DUAL: _finite_power,
}


def pair_power(port: PowerPort) -> float:
    if port.flow is None or port.effort is None:
        return 0.0
    try:
        value = _PAIRINGS[port.kind](port.effort, port.flow)
    except (FormError, FrameMismatchError) as e:
        raise PortError(f"port '{port.name}': {e}") from e
    return port.sign * value

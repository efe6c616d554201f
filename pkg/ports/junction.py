"""Junctions and modulated transformers between power ports."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, List, Tuple

import numpy as np

from forms.cochain import BoundaryField, Form, TensorValuedForm
from ports.port import PortError, PowerPort
from rigidbody.se3 import Twist, Wrench


class StaleModulationError(RuntimeError):
    pass


class JunctionKind(str, Enum):
    ONE = "one-junction"
    ZERO = "zero-junction"
    TRANSFORMER = "transformer"


def carrier_values(x: Any) -> np.ndarray:
    if isinstance(x, (Form, BoundaryField)):
        return x.values
    if isinstance(x, TensorValuedForm):
        return x.array()
    if isinstance(x, (Twist, Wrench)):
        return x.vector
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class ModulatedTransformer:
    """Power-preserving map whose modulation (pose, boundary) is valid at one time.

    `forward` maps flows, `dual` maps efforts the other way; both were built
    for the state at `time_tag` and refuse any other time.
    """
    name: str
    forward: Callable[[Any], Any]
    dual: Callable[[Any], Any]
    time_tag: float

    def check(self, t: float) -> None:
        if t != self.time_tag:
            raise StaleModulationError(
                f"transformer '{self.name}' modulated at t={self.time_tag} used at t={t}"
            )


def transformer_apply(tr: ModulatedTransformer, flow: Any, t: float) -> Any:
    tr.check(t)
    return tr.forward(flow)


def transformer_dual_apply(tr: ModulatedTransformer, effort: Any, t: float) -> Any:
    tr.check(t)
    return tr.dual(effort)


@dataclass
class Junction:
    kind: JunctionKind
    ports: List[PowerPort] = field(default_factory=list)
    transformer: ModulatedTransformer | None = None

    def __post_init__(self):
        self.kind = JunctionKind(self.kind)
        if self.kind is JunctionKind.TRANSFORMER and self.transformer is None:
            raise PortError("transformer junction needs a ModulatedTransformer")


def _spread(values: List[np.ndarray]) -> float:
    head = values[0]
    for v in values[1:]:
        if v.shape != head.shape:
            raise PortError(f"junction members have shapes {head.shape} and {v.shape}")
    return max((float(np.max(np.abs(v - head), initial=0.0)) for v in values[1:]), default=0.0)


def _signed_sum(ports: List[PowerPort], attr: str) -> float:
    total = None
    for port in ports:
        v = port.sign * carrier_values(getattr(port, attr))
        if total is not None and v.shape != total.shape:
            raise PortError(f"junction members have shapes {total.shape} and {v.shape}")
        total = v if total is None else total + v
    return float(np.max(np.abs(total), initial=0.0))


def junction_residual(j: Junction, t: float | None = None) -> Tuple[float, float]:
    """(flow residual, effort residual).

    One-junction: flows agree and signed efforts sum to zero. Zero-junction:
    the dual. Transformer (two ports, input first): flow and effort mismatch
    after mapping through the modulation at time t.
    """
    if not j.ports:
        raise PortError("empty junction")
    for port in j.ports:
        if port.effort is None or port.flow is None:
            raise PortError(f"port '{port.name}' is not populated")
    if j.kind is JunctionKind.ONE:
        return _spread([carrier_values(p.flow) for p in j.ports]), _signed_sum(j.ports, "effort")
    if j.kind is JunctionKind.ZERO:
        return _signed_sum(j.ports, "flow"), _spread([carrier_values(p.effort) for p in j.ports])
    if len(j.ports) != 2:
        raise PortError("transformer junction connects exactly two ports")
    inner, outer = j.ports
    tag = j.transformer.time_tag if t is None else t
    flow = carrier_values(transformer_apply(j.transformer, inner.flow, tag)) - carrier_values(outer.flow)
    effort = carrier_values(transformer_dual_apply(j.transformer, outer.effort, tag)) - carrier_values(inner.effort)
    return float(np.max(np.abs(flow), initial=0.0)), float(np.max(np.abs(effort), initial=0.0))

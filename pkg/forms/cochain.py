from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

from mesh.complex import SimplicialComplex

VALENCES = ("vector", "covector")
LEGS = ("normal", "tangent")


class FormError(ValueError):
    pass


class ValenceMismatchError(FormError):
    pass


@dataclass(frozen=True, eq=False)
class Form:
    """Discrete k-cochain. Dual forms of degree k live on primal (n-k)-cells.

    With `component` set the form lives on that boundary component
    (degree n-1 on its cells, degree 0 on its vertices).
    """
    degree: int
    values: np.ndarray
    complex: SimplicialComplex
    dual: bool = False
    component: str | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        expected = support_size(self.complex, self.degree, self.dual, self.component)
        if vals.shape != (expected,):
            where = f"component '{self.component}'" if self.component else ("dual" if self.dual else "primal")
            raise FormError(f"{where} {self.degree}-form needs {expected} values, got shape {vals.shape}")

    @property
    def n(self) -> int:
        return self.complex.dim

    def like(self, values: np.ndarray) -> "Form":
        return replace(self, values=values)

    def _check(self, other: "Form") -> None:
        if (other.degree, other.dual, other.component) != (self.degree, self.dual, self.component) or (
            other.complex is not self.complex
        ):
            raise FormError("forms live on different spaces")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "Form") -> "Form":
        self._check(other)
        return self.like(self.values - other.values)

    def __neg__(self) -> "Form":
        return self.like(-self.values)

    def __mul__(self, scalar: float) -> "Form":
        return self.like(self.values * float(scalar))

    __rmul__ = __mul__


def support_size(complex_: SimplicialComplex, degree: int, dual: bool, component: str | None) -> int:
    n = complex_.dim
    if not 0 <= degree <= n:
        raise FormError(f"degree {degree} outside 0..{n}")
    if component is not None:
        comp = complex_.component(component)
        if dual or degree not in (0, n - 1):
            raise FormError("boundary forms are primal of degree 0 or n-1")
        return len(comp.vertices) if degree == 0 else len(comp.cells)
    return complex_.n_cells(n - degree if dual else degree)


def zero_form(complex_: SimplicialComplex, degree: int, dual: bool = False) -> Form:
    return Form(degree, np.zeros(support_size(complex_, degree, dual, None)), complex_, dual)


def constant_form(complex_: SimplicialComplex, value: float = 1.0) -> Form:
    return Form(0, np.full(complex_.n_cells(0), float(value)), complex_)


@dataclass(frozen=True, eq=False)
class TensorValuedForm:
    """n Cartesian component forms sharing degree, support and complex.

    `cells` optionally keeps the per-top-cell tensor the form was sampled
    from; in-domain ∧̇ pairings use it when both operands carry one. `leg`
    records which edge vector the form leg was sampled on: "normal" for
    stress-like (n-1)-forms, "tangent" for 1-forms. In 2D both have degree
    1, so the degree alone cannot tell them apart.
    """
    valence: str
    components: Tuple[Form, ...]
    symmetric: bool = False
    cells: np.ndarray | None = field(default=None, repr=False)
    leg: str = "normal"

    def __post_init__(self):
        if self.valence not in VALENCES:
            raise ValenceMismatchError(f"valence must be one of {VALENCES}, got '{self.valence}'")
        if self.leg not in LEGS:
            raise FormError(f"leg must be one of {LEGS}, got '{self.leg}'")
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise FormError("tensor-valued form needs components")
        head = comps[0]
        if len(comps) != head.complex.dim:
            raise FormError(f"expected {head.complex.dim} components, got {len(comps)}")
        for c in comps[1:]:
            if (c.degree, c.dual, c.component) != (head.degree, head.dual, head.component) or c.complex is not head.complex:
                raise FormError("components must share degree, support and complex")

    @property
    def degree(self) -> int:
        return self.components[0].degree

    @property
    def complex(self) -> SimplicialComplex:
        return self.components[0].complex

    def array(self) -> np.ndarray:
        """Values as (n_cells, n)."""
        return np.stack([c.values for c in self.components], axis=1)

    @classmethod
    def from_array(
        cls,
        valence: str,
        degree: int,
        values: np.ndarray,
        complex_: SimplicialComplex,
        dual: bool = False,
        symmetric: bool = False,
        cells: np.ndarray | None = None,
        leg: str = "normal",
    ) -> "TensorValuedForm":
        comps = tuple(Form(degree, values[:, a], complex_, dual) for a in range(values.shape[1]))
        return cls(valence, comps, symmetric, cells, leg)

    def _combine(self, other: "TensorValuedForm", sign: float) -> "TensorValuedForm":
        if other.valence != self.valence:
            raise ValenceMismatchError("cannot combine vector- and covector-valued forms")
        if other.leg != self.leg:
            raise ValenceMismatchError(f"cannot combine a {self.leg} form with a {other.leg} form")
        comps = tuple(a + b * sign for a, b in zip(self.components, other.components))
        cells = None
        if self.cells is not None and other.cells is not None:
            cells = self.cells + sign * other.cells
        return TensorValuedForm(self.valence, comps, self.symmetric and other.symmetric, cells, self.leg)

    def __add__(self, other: "TensorValuedForm") -> "TensorValuedForm":
        return self._combine(other, 1.0)

    def __sub__(self, other: "TensorValuedForm") -> "TensorValuedForm":
        return self._combine(other, -1.0)

    def __neg__(self) -> "TensorValuedForm":
        return self * -1.0

    def __mul__(self, scalar: float) -> "TensorValuedForm":
        cells = None if self.cells is None else self.cells * float(scalar)
        return TensorValuedForm(self.valence, tuple(c * scalar for c in self.components), self.symmetric, cells, self.leg)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Tensor-valued form on a boundary component with the value leg in R^n.

    Covector-valued (n-1)-forms hold one row per boundary cell, evaluated on
    the cell oriented by the component convention; vector-valued 0-forms
    hold one row per component vertex.
    """
    component: str
    valence: str
    degree: int
    values: np.ndarray
    complex: SimplicialComplex

    def __post_init__(self):
        if self.valence not in VALENCES:
            raise ValenceMismatchError(f"valence must be one of {VALENCES}, got '{self.valence}'")
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        rows = support_size(self.complex, self.degree, False, self.component)
        if vals.shape != (rows, self.complex.dim):
            raise FormError(f"boundary field on '{self.component}' needs shape {(rows, self.complex.dim)}, got {vals.shape}")

    @property
    def comp(self):
        return self.complex.component(self.component)

    def like(self, values: np.ndarray) -> "BoundaryField":
        return replace(self, values=values)

    def cell_average(self) -> np.ndarray:
        """Vector 0-form averaged over the vertices of each boundary cell."""
        if self.degree != 0:
            raise FormError("only vertex fields can be averaged onto cells")
        return self.values[self.comp.cell_vertices].mean(axis=1)

    def _check(self, other: "BoundaryField") -> None:
        if (other.component, other.valence, other.degree) != (self.component, self.valence, self.degree) or (
            other.complex is not self.complex
        ):
            raise ValenceMismatchError("boundary fields live on different spaces")

    def __add__(self, other: "BoundaryField") -> "BoundaryField":
        self._check(other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "BoundaryField") -> "BoundaryField":
        self._check(other)
        return self.like(self.values - other.values)

    def __neg__(self) -> "BoundaryField":
        return self.like(-self.values)

    def __mul__(self, scalar: float) -> "BoundaryField":
        return self.like(self.values * float(scalar))

    __rmul__ = __mul__

"""Cochain dumps as CSV with header `cell_id,component,value`.

Scalar forms use component 0; tensor-valued forms write one row per cell and
Cartesian component.
"""
from __future__ import annotations

import os

import numpy as np
import pandas as pd

from forms.cochain import Form, FormError, TensorValuedForm
from mesh.complex import SimplicialComplex
from storage.history_writer import FLOAT_FORMAT

COLUMNS = ["cell_id", "component", "value"]


def cochain_frame(form: Form | TensorValuedForm) -> pd.DataFrame:
    if isinstance(form, TensorValuedForm):
        values = form.array()
    else:
        values = form.values[:, None]
    n_cells, n_comp = values.shape
    return pd.DataFrame(
        {
            "cell_id": np.repeat(np.arange(n_cells), n_comp),
            "component": np.tile(np.arange(n_comp), n_cells),
            "value": values.ravel(),
        },
        columns=COLUMNS,
    )


def write_cochain(path: str, form: Form | TensorValuedForm) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    cochain_frame(form).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_cochain(path: str, complex_: SimplicialComplex, degree: int, dual: bool = False) -> Form:
    """Load a scalar cochain written by `write_cochain`."""
    df = pd.read_csv(path, float_precision="round_trip")
    if list(df.columns) != COLUMNS:
        raise FormError(f"{path}: expected columns {COLUMNS}, got {list(df.columns)}")
    if df["component"].nunique() != 1:
        raise FormError(f"{path}: holds a tensor-valued cochain")
    df = df.sort_values("cell_id", kind="stable")
    return Form(degree, df["value"].to_numpy(dtype=float), complex_, dual)

import json

import numpy as np
import pandas as pd
import pytest

from forms.cochain import Form, FormError
from forms.tensor import covector_from_cell_tensor
from rigidbody.dynamics import RigidBodyState, RigidStepper, inertia_matrix
from rigidbody.se3 import Pose, Wrench
from storage.cochain_io import COLUMNS, read_cochain, write_cochain
from storage.history_writer import RIGID_COLUMNS, HistoryWriter, rigid_frame


def test_cochain_file_keeps_every_digit(tmp_path, rng, square):
    form = Form(1, rng.normal(size=square.n_cells(1)), square)
    path = write_cochain(str(tmp_path / "sub" / "velocity.csv"), form)
    assert list(pd.read_csv(path).columns) == COLUMNS
    back = read_cochain(path, square, 1)
    assert np.array_equal(back.values, form.values)


def test_tensor_cochain_is_not_read_as_scalar(tmp_path, rng, square):
    stress = covector_from_cell_tensor(rng.normal(size=(square.n_cells(2), 2, 2)), square)
    path = write_cochain(str(tmp_path / "stress.csv"), stress)
    assert len(pd.read_csv(path)) == stress.array().size
    with pytest.raises(FormError):
        read_cochain(path, square, 1)


def test_foreign_csv_is_refused(tmp_path, square):
    path = tmp_path / "other.csv"
    pd.DataFrame({"id": [0], "value": [1.0]}).to_csv(path, index=False)
    with pytest.raises(FormError):
        read_cochain(str(path), square, 0)


def test_summary_json_is_plain_and_sorted(tmp_path):
    writer = HistoryWriter(str(tmp_path / "run"))
    path = writer.json("summary.json", {"b": np.float64(1.5), "a": {"n": np.int64(3), "v": np.arange(2.0)}})
    text = open(path, encoding="utf-8").read()
    assert json.loads(text) == {"a": {"n": 3, "v": [0.0, 1.0]}, "b": 1.5}
    assert text.index('"a"') < text.index('"b"')
    assert writer.written == [path]


def test_rigid_frame_columns(tmp_path):
    body = RigidBodyState(Pose(), np.ones(6), inertia_matrix(1.0, np.diag([1.0, 2.0, 3.0])), 1.0)
    states = [body, RigidStepper().step(body, Wrench.zero(), 0.01)]
    frame = rigid_frame([0.0, 0.01], states)
    assert list(frame.columns) == RIGID_COLUMNS
    assert frame["R00"].iloc[0] == 1.0
    writer = HistoryWriter(str(tmp_path))
    first = open(writer.rigid([0.0, 0.01], states), "rb").read()
    second = open(writer.rigid([0.0, 0.01], states), "rb").read()
    assert first == second

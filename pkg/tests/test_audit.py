import numpy as np
import pandas as pd
import pytest

from audit.ledger import MissingChannelError, PowerLedger, power_ledger, recompute
from audit.reynolds import (
    SnapshotMismatchError,
    reynolds_check,
    sample_density,
    translating_snapshots,
)
from mesh.generators import unit_square


def fluid_history(t, energy, dissipation, flux_db=None, flux_dv=None):
    zeros = np.zeros_like(t)
    return pd.DataFrame(
        {
            "t": t,
            "H_f": energy,
            "dissipation": dissipation,
            "flux_dB": zeros if flux_db is None else flux_db,
            "flux_dV": zeros if flux_dv is None else flux_dv,
        }
    )


def linear_density(x):
    return 1.0 + 2.0 * x[:, 0] + 3.0 * x[:, 1]


def test_quiet_history_balances_exactly():
    t = np.linspace(0.0, 1.0, 11)
    frame, summary = power_ledger(fluid_history(t, np.full_like(t, 2.0), np.zeros_like(t)))
    assert summary == {"fluid": {"max_residual": 0.0, "max_relative": 0.0}}
    assert len(frame) == 9
    assert frame["fluid_supply_ok"].all()


def test_decaying_energy_is_balanced_by_dissipation():
    t = np.arange(0, 1001) * 1e-3
    history = fluid_history(t, np.exp(-t), np.exp(-t))
    frame, summary = PowerLedger().audit(history, ["fluid"])
    assert summary["fluid"]["max_relative"] <= 1e-6
    assert np.allclose(recompute(frame, "fluid"), frame["residual_fluid"], rtol=0, atol=1e-14)


def test_supplied_power_shows_up_in_the_residual():
    t = np.linspace(0.0, 1.0, 21)
    # energy grows at rate 2 but only 1 is supplied through the outer boundary
    history = fluid_history(t, 2.0 * t, np.zeros_like(t), flux_dv=np.ones_like(t))
    frame, summary = power_ledger(history, ["fluid"])
    assert summary["fluid"]["max_residual"] == pytest.approx(1.0)
    assert summary["fluid"]["max_relative"] == pytest.approx(0.5)
    assert not frame["fluid_supply_ok"].any()


def test_rigid_and_coupled_balances():
    t = np.linspace(0.0, 1.0, 11)
    history = pd.DataFrame(
        {
            "t": t,
            "H_b": 3.0 * t,
            "P_W": np.full_like(t, 3.0),
            "H_f": -5.0 * t,
            "dissipation": np.full_like(t, 2.0),
            "flux_dB": np.full_like(t, -3.0),
            "flux_dV": np.zeros_like(t),
        }
    )
    ledger = PowerLedger()
    assert ledger.available(history) == ["fluid", "rigid", "coupled"]
    _, summary = ledger.audit(history)
    # the body takes 3 from the fluid and the fluid loses 2 more to viscosity
    for balance in ("fluid", "rigid", "coupled"):
        assert summary[balance]["max_residual"] <= 1e-12


def test_missing_channels_are_refused():
    t = np.linspace(0.0, 1.0, 5)
    history = pd.DataFrame({"t": t, "H_f": t})
    with pytest.raises(MissingChannelError):
        power_ledger(history, ["fluid"])
    with pytest.raises(MissingChannelError):
        power_ledger(history, ["momentum"])
    with pytest.raises(MissingChannelError):
        power_ledger(pd.DataFrame({"H_b": t, "P_W": t}), ["rigid"])
    with pytest.raises(MissingChannelError):
        recompute(pd.DataFrame({"t": t}), "rigid")


def test_short_history_has_no_rows():
    t = np.array([0.0, 0.1])
    frame, summary = power_ledger(fluid_history(t, t, t), ["fluid"])
    assert len(frame) == 0
    assert summary["fluid"] == {"max_residual": 0.0, "max_relative": 0.0}


def test_static_mesh_has_no_transport():
    cx = unit_square(6)
    snaps = translating_snapshots(cx, linear_density, np.zeros(2), 0.1, 3)
    result = reynolds_check(snaps, 0.1)
    assert result.max_residual == 0.0
    assert result.representation_gap <= 1e-12


def test_accelerating_mesh_residual_is_first_order():
    cx = unit_square(8)
    residuals = []
    for dt in (0.02, 0.01):
        result = reynolds_check(translating_snapshots(cx, linear_density, np.array([1.0, 0.5]), dt, 2), dt)
        # grad h . a * area * dt / 2
        assert np.allclose(result.residuals, 1.75 * dt, rtol=1e-9, atol=0)
        assert result.representation_gap <= 1e-12
        residuals.append(result.max_residual)
    assert residuals[0] / residuals[1] == pytest.approx(2.0, rel=1e-9)


def test_snapshot_checks():
    cx = unit_square(4)
    snaps = translating_snapshots(cx, linear_density, np.array([1.0, 0.0]), 0.1, 2)
    with pytest.raises(SnapshotMismatchError):
        reynolds_check(snaps, 0.05)
    with pytest.raises(SnapshotMismatchError):
        reynolds_check(snaps[:1], 0.1)
    with pytest.raises(ValueError):
        reynolds_check(snaps, 0.0)
    finer = unit_square(5)
    other = sample_density(lambda x, t: linear_density(x), finer, 0.1, np.zeros((finer.n_cells(0), 2)))
    with pytest.raises(SnapshotMismatchError):
        reynolds_check([snaps[0], other], 0.1)
    with pytest.raises(SnapshotMismatchError):
        sample_density(lambda x, t: linear_density(x), cx, 0.0, np.zeros((3, 2)))

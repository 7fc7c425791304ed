import csv
import math

import numpy as np
import pytest

from gaussian_teleport.core import InputState, MeasurementSpec, ThreeModeState, build_symmetric_channel
from gaussian_teleport.fidelity import (
    conditional_cm,
    conditional_displacement,
    conditional_fidelity,
    measurement_matrix,
    outcome_probability,
)
from gaussian_teleport.oracle import (
    DEFAULT_SEED,
    QuadratureError,
    fidelity_surface,
    grid_search,
    quadrature_conditional,
    random_genuine_channel,
    random_physical_block,
    suite_seed,
    thermal_dominance_margin,
    verify_outcome_dominance,
    verify_thermal_dominance,
    write_surface_csv,
)

COH = InputState.coherent()


def test_quadrature_vacuum():
    state = ThreeModeState.from_cm(0.5 * np.eye(6))
    res = quadrature_conditional(state, MeasurementSpec(1.0, 0.0))
    np.testing.assert_allclose(res.state.cm, 0.5 * np.eye(4), atol=1e-10)
    assert res.probability == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_quadrature_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    state = random_genuine_channel(rng, scale=0.5, with_displacement=True)
    spec = MeasurementSpec(10 ** rng.uniform(-0.3, 0.3), rng.uniform(0, math.pi))
    d0 = state.charlie_displacement + rng.normal(size=2)
    res = quadrature_conditional(state, spec, d0=d0)
    closed = conditional_cm(state, spec)
    np.testing.assert_allclose(res.state.cm, closed.cm, atol=1e-8)
    np.testing.assert_allclose(res.state.displacement, conditional_displacement(state, spec, d0), atol=1e-7)
    assert res.probability == pytest.approx(outcome_probability(state, spec, d0), rel=1e-7)


def test_quadrature_reports_non_convergence():
    state = random_genuine_channel(np.random.default_rng(1), scale=0.5)
    with pytest.raises(QuadratureError) as info:
        quadrature_conditional(state, MeasurementSpec(0.5, 0.2), tol=1e-15, start_order=4, max_order=8)
    assert info.value.error > 0


def test_fidelity_surface_matches_pointwise(rng):
    state = random_genuine_channel(rng)
    inp = InputState.squeezed(2.0, 0.4)
    xis = np.array([1e-3, 0.3, 1.0, 4.0, 1e3])
    phis = np.array([0.0, 0.7, 2.9])
    surf = fidelity_surface(state, inp, xis, phis)
    for i, xi in enumerate(xis):
        for j, phi in enumerate(phis):
            assert surf[i, j] == pytest.approx(conditional_fidelity(state, inp, MeasurementSpec(xi, phi)).fidelity,
                                               rel=1e-10)


def test_grid_search_reports_surface_maximum(tmp_path, example2):
    res = grid_search(example2, COH, 16, 12, keep_surface=True)
    assert res.surface.shape == (18, 12)
    assert res.fidelity == res.surface.max()
    assert np.all((res.surface > 0) & (res.surface <= 1))
    assert res.xis[0] == 0.0 and math.isinf(res.xis[-1])
    path = tmp_path / "surface.csv"
    write_surface_csv(res, path)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["xi", "phi", "fidelity"]
    assert len(rows) == 1 + 18 * 12
    assert rows[-1][0] == "inf"


def test_grid_without_surface_cannot_be_written(tmp_path, example1):
    with pytest.raises(ValueError):
        write_surface_csv(grid_search(example1, COH, 8, 8), tmp_path / "x.csv")


def test_grid_search_finds_example2_homodyne(example2):
    res = grid_search(example2, COH, 60, 60)
    assert res.xi == 0.0 and res.phi == 0.0
    assert res.fidelity == pytest.approx(0.526, abs=1e-3)


def test_gaussian_outcome_never_below_trace(rng):
    for _ in range(100):
        state = random_genuine_channel(rng)
        spec = MeasurementSpec(10 ** rng.uniform(-3, 3), rng.uniform(0, math.pi))
        assert verify_outcome_dominance(state, COH, spec)


def test_thermal_dominance(rng):
    for _ in range(100):
        C = random_physical_block(rng)
        assert verify_thermal_dominance(C, 10 ** rng.uniform(-3, 2))
    assert thermal_dominance_margin(np.eye(2), 0.0) == 0.0


def test_thermal_measurement_shrinks_with_noise():
    C = np.array([[0.9, 0.1], [0.1, 0.6]])
    norms = [np.linalg.norm(measurement_matrix(0.5 * (1 + 2 * n) * np.eye(2), C).M) for n in (0, 0.5, 2, 10)]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_random_physical_block_is_physical(rng):
    from gaussian_teleport.core import OMEGA

    for _ in range(50):
        C = random_physical_block(rng)
        assert np.linalg.eigvalsh(C - 0.5j * OMEGA)[0] > 0


@pytest.mark.parametrize("raw, expected", [(None, DEFAULT_SEED), ("", DEFAULT_SEED), ("17", 17), ("0x10", 16)])
def test_suite_seed(monkeypatch, raw, expected):
    if raw is None:
        monkeypatch.delenv("GTO_SEED", raising=False)
    else:
        monkeypatch.setenv("GTO_SEED", raw)
    assert suite_seed() == expected


def test_symmetric_grid_matches_heterodyne():
    state = build_symmetric_channel(1.0)
    res = grid_search(state, COH, 41, 8)
    # the log grid contains xi = 1 exactly when n_xi is odd
    assert res.fidelity == pytest.approx(conditional_fidelity(state, COH, MeasurementSpec(1.0)).fidelity, rel=1e-12)

from __future__ import annotations

import numpy as np
import pytest

from darkqubit.driving import compact_construction, ideal_construction
from darkqubit.dynamics import NumericalError
from darkqubit.gates import (
    extract_effective_hamiltonian,
    microwave_sigma_y,
    prepare_initial_state,
    protected_report,
    raman_sigma_x,
)
from darkqubit.levels import ca40_dp


@pytest.fixture(scope="module")
def ideal():
    scheme = ca40_dp()
    con = ideal_construction(scheme, 0.3, 1.0)
    return con, protected_report(con)


def test_protected_report_finds_dark_pair(ideal):
    con, rep = ideal
    assert rep.dim == 2
    assert rep.gap == pytest.approx(1.0, abs=1e-12)
    for d in rep.dark_states:
        assert np.linalg.norm(con.ip.static @ d) < 1e-12


def test_prepare_initial_state(ideal):
    _, rep = ideal
    d1 = prepare_initial_state(rep, "D1")
    assert np.allclose(d1, rep.dark_states[0])
    mix = prepare_initial_state(rep, [1.0, 1.0j])
    want = (rep.dark_states[0] + 1.0j * rep.dark_states[1]) / np.sqrt(2.0)
    assert np.allclose(mix, want)
    assert np.linalg.norm(mix) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError, match="unknown target"):
        prepare_initial_state(rep, "D3")
    with pytest.raises(ValueError, match="length 2"):
        prepare_initial_state(rep, [1.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="all zero"):
        prepare_initial_state(rep, [0.0, 0.0])


@pytest.mark.parametrize("builder", [ideal_construction, compact_construction])
def test_microwave_rate_is_three_quarters(builder):
    # <D2|J_y|D1> = 3/2 on the lower manifold, so the sigma_y rate is
    # exactly 3 omega_g / 4; the dressed states at +/- Omega contribute
    # second-order corrections that cancel pairwise
    scheme = ca40_dp()
    con = builder(scheme, 0.3, 1.0)
    op = microwave_sigma_y(0.02, con)
    assert op.kind == "hamiltonian"
    assert op.details["jy_element"] == pytest.approx(1.5, abs=1e-12)
    assert op.rate == pytest.approx(0.75 * 0.02, rel=1e-12)
    assert op.details["rate_over_expected"] == pytest.approx(1.0, rel=1e-12)
    assert op.leakage < 1e-12
    assert op.fidelity == pytest.approx(1.0, abs=1e-12)
    coeffs = op.pauli_coefficients()
    assert abs(coeffs["y"]) == pytest.approx(op.rate, rel=1e-12)
    for axis in ("i", "x", "z"):
        assert abs(coeffs[axis]) < 1e-12


def test_microwave_validation(ideal):
    con, rep = ideal
    with pytest.raises(ValueError, match="nonnegative"):
        microwave_sigma_y(-0.01, con, rep)
    zero = microwave_sigma_y(0.0, con, rep)
    assert zero.rate == 0.0
    assert np.all(zero.matrix == 0)
    with pytest.warns(UserWarning, match="0.1 Omega"):
        microwave_sigma_y(0.5, con, rep)


def test_raman_rate_second_order(ideal):
    con, rep = ideal
    op = raman_sigma_x(0.05, 20.0, con, rep)
    expected = 3.0 * 0.05**2 / (4.0 * 20.0)
    assert op.details["expected_second_order"] == pytest.approx(expected)
    # extracted rate carries the next correction 1 + (Omega/delta_r)^2
    assert op.details["rate_over_expected"] == pytest.approx(
        1.0 + 1.0 / 20.0**2, abs=1e-4
    )
    assert op.details["transfer_contrast"] == pytest.approx(1.0, abs=1e-3)
    assert op.details["fit_rms"] < 1e-4
    assert op.leakage < 10.0 * 0.05**2
    assert op.fidelity == 1.0
    coeffs = op.pauli_coefficients()
    assert abs(coeffs["x"]) == pytest.approx(op.rate, rel=1e-12)
    assert abs(coeffs["y"]) < 1e-12


def test_raman_detuning_scaling(ideal):
    con, rep = ideal
    near = raman_sigma_x(0.05, 20.0, con, rep)
    far = raman_sigma_x(0.05, 40.0, con, rep)
    # rate ~ 1/delta_r at fixed omega_g
    assert near.rate / far.rate == pytest.approx(2.0, abs=0.01)
    # leakage is a virtual population ~ (omega_g/delta_r)^2
    assert near.leakage / far.leakage == pytest.approx(4.0, rel=0.2)


def test_raman_validation(ideal):
    con, rep = ideal
    with pytest.raises(ValueError):
        raman_sigma_x(0.05, 0.0, con, rep)
    with pytest.raises(ValueError):
        raman_sigma_x(-0.05, 20.0, con, rep)
    with pytest.warns(UserWarning, match="delta_r below 5 Omega"):
        raman_sigma_x(0.01, 3.0, con, rep)
    with pytest.warns(UserWarning, match="omega_g above Omega/5"):
        raman_sigma_x(0.3, 20.0, con, rep)


def test_extract_effective_hamiltonian_two_level_oracle():
    h = 0.3 * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex) / 2.0
    gen, defect = extract_effective_hamiltonian(h, np.eye(2, dtype=complex), 1.0)
    assert np.abs(gen - h).max() < 1e-12
    assert defect < 1e-12


def test_extract_effective_hamiltonian_rejects_leaky_basis(ideal):
    con, rep = ideal
    # pairing a dark state with a bright one makes the projected propagator
    # lose norm as the bright state precesses out of the plane
    bright = rep.complement[0][1]
    basis = np.column_stack([rep.dark_states[0], bright])
    ham = con.ip.plus_static(0.02 / 2.0 * con.scheme.spin_operator("D3/2", "y"))
    with pytest.raises(NumericalError, match="not preserved"):
        extract_effective_hamiltonian(ham, basis, 40.0)

import json

import numpy as np
import pytest
from scipy.integrate import trapezoid

from parafeq.analysis import analyze, check_admissibility
from parafeq.errors import ConfigError, MissingParam, UnknownModel
from parafeq.models import (
    ModelDescriptor,
    builtin_model,
    heat_interval_neumann,
    heat_torus,
    ks_interval_coronlu,
    load_model,
    model_from_dict,
    model_to_dict,
    random_instance,
    save_model,
    torus_basis,
    torus_wavenumbers,
)
from parafeq.spectral import validate_operator


def test_wavenumber_order():
    assert list(torus_wavenumbers(7)) == [0, -1, 1, -2, 2, -3, 3]


def test_torus_basis_orthonormal():
    L = 64
    x = 2 * np.pi * np.arange(L) / L
    E = torus_basis(9, x)
    G = (2 * np.pi / L) * E.conj().T @ E
    assert np.allclose(G, np.eye(9))


def test_ks_torus_spectrum(ks):
    op, B = ks
    assert list(op.eigenvalues[:7].real) == [0, 0, 0, -12, -12, -72, -72]
    assert B.inputs == 3 and B.growth_exponent == 0


def test_coronlu_spectrum_sorted():
    op, B = ks_interval_coronlu(32, 1.0)
    assert np.all(np.diff(op.eigenvalues.real) < 0)
    assert B.coefficients[0, 0] == pytest.approx(-np.pi)
    assert validate_operator(op).passed


def test_coronlu_double_eigenvalue_warns():
    # nu = pi^2 (1 + 4) gives lambda_1 = lambda_2
    with pytest.warns(RuntimeWarning, match="double eigenvalue"):
        ks_interval_coronlu(8, 5 * np.pi**2)


def test_heat_torus_dirac_coefficients():
    op, B = heat_torus(9, 0.7)
    k = torus_wavenumbers(9)
    assert np.allclose(B.coefficients[0], np.exp(-1j * k * 0.7) / np.sqrt(2 * np.pi))
    assert list(op.eigenvalues.real[:3]) == [0, -1, -1]


def test_heat_neumann_coefficients_by_quadrature():
    a = 0.3
    op, B = heat_interval_neumann(6, a, 2.0)
    x = np.linspace(0, a, 20001)
    for n in range(6):
        phi = np.ones_like(x) if n == 0 else np.sqrt(2) * np.cos(n * np.pi * x)
        assert B.coefficients[0, n].real == pytest.approx(trapezoid(phi, x), abs=1e-8)
    assert op.eigenvalues[0] == 2.0


def test_heat_neumann_bad_support():
    with pytest.raises(ConfigError):
        heat_interval_neumann(8, 1.5)


def test_builtin_lookup():
    op, B = builtin_model(ModelDescriptor("heat-torus", {"p": 1.0}, 16))
    assert op.truncation == 16
    with pytest.raises(UnknownModel):
        builtin_model(ModelDescriptor("navier-stokes"))
    with pytest.raises(MissingParam):
        builtin_model(ModelDescriptor("custom"))
    with pytest.raises(ConfigError):
        builtin_model(ModelDescriptor("ks-torus", truncation=0))


def test_model_file_roundtrip(tmp_path, ks):
    op, B = ks
    path = tmp_path / "m.json"
    save_model(path, op, B)
    op2, B2 = load_model(path)
    assert np.array_equal(op.eigenvalues, op2.eigenvalues)
    assert np.array_equal(B.coefficients, B2.coefficients)
    assert list(op2.modes) == list(op.modes)
    op3, _ = builtin_model(ModelDescriptor("custom", {"path": str(path)}, 10))
    assert op3.truncation == 10


def test_model_file_errors(tmp_path):
    doc = {"eigenvalues": [[0, 0], [-1, 0]], "controls": [{"coefficients": [[1, 0]]}]}
    with pytest.raises(ConfigError):
        model_from_dict(doc)
    with pytest.raises(MissingParam):
        model_from_dict({"eigenvalues": []})
    with pytest.raises(ConfigError):
        model_from_dict({"eigenvalues": [1, 2], "controls": [{"coefficients": [1, 2]}]})
    with pytest.raises(ConfigError):
        model_from_dict({**doc, "controls": []})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_model(bad)


def test_model_dict_is_json(ks):
    json.dumps(model_to_dict(*ks))


def test_random_instances_admissible():
    rng = np.random.default_rng(0)
    for _ in range(100):
        op, B = random_instance(rng)
        assert op.truncation <= 64
        assert validate_operator(op).passed
        an = analyze(op, B, 10.0)
        assert an.error is None
        assert an.split.N_lambda <= 8
        assert an.split.m_lambda == B.inputs
        adm = check_admissibility(an.partition, B)
        assert adm.admissible and adm.leak_free

import math

import numpy as np
import pytest

import staticgeo as sg


@pytest.fixture(scope="module")
def schwarzschild():
    return sg.metric("schwarzschild_isotropic", {"m": 1.0})


def test_catalog():
    names = sg.metric_names()
    assert "euclidean" in names and "schwarzschild_standard" in names
    with pytest.raises(sg.StaticGeoError, match="unknown_name"):
        sg.metric("no_such_metric")


def test_curvature_of_flat_space_vanishes():
    c = sg.curvature(sg.metric("euclidean"), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(c["g"], np.eye(3))
    assert np.abs(c["ricci"]).max() == 0.0
    assert c["scalar"] == 0.0


def test_static_residual_schwarzschild(schwarzschild):
    v = schwarzschild.exact_potential
    assert v is not None
    r = sg.static_residual(schwarzschild, v, np.array([1.0, 2.0, 2.0]))
    assert r["norm"] <= 1e-8
    # V = 1 is not static on Schwarzschild: the residual is |Ric|.
    standard = sg.metric("schwarzschild_standard", {"m": 1.0})
    x = np.array([0.0, 3.0, 4.0])
    r1 = sg.static_residual(standard, sg.constant_field(3, 1.0), x)
    assert r1["norm"] == pytest.approx(math.sqrt(6.0) / 125.0, abs=1e-6)


def test_masses_agree(schwarzschild):
    radii = [8.0, 16.0, 32.0, 64.0]
    v = schwarzschild.exact_potential
    flux = sg.adm_mass_flux(schwarzschild, radii)["value"]
    fit = sg.fit_expansion(v, radii)
    ricci = sg.ricci_flux_mass(schwarzschild, v, radii)["value"] / fit["a0"]
    pot = sg.mass_from_potential(v, radii)["value"]
    assert fit["case"] == 3
    assert flux == pytest.approx(1.0, abs=1e-3)
    assert max(abs(flux - ricci), abs(flux - pot), abs(ricci - pot)) <= 1e-2


def test_linear_potential_classification():
    fit = sg.fit_expansion(sg.coordinate_field(3, 2), [8.0, 16.0, 32.0, 64.0])
    assert fit["case"] == 2
    assert np.allclose(fit["a"], [0.0, 0.0, 1.0])


def test_ode_trials_deterministic():
    a = sg.ode_trials(20, seed=5)
    b = sg.ode_trials(20, seed=5, jobs=2)
    assert a == b
    assert a["failures"] == 0


def test_horizon_stability(schwarzschild):
    sphere = sg.coordinate_sphere(0.5)
    assert sg.stability_eigenvalue(schwarzschild, sphere) == pytest.approx(0.25, abs=1e-3)
    s = sg.surface_summary(schwarzschild, sphere)
    assert s["sup_norm_a"] <= 1e-8
    assert sg.boundary_identity(schwarzschild, sg.coordinate_sphere(3.0), schwarzschild.exact_potential) <= 1e-6


def test_conformal_flow(schwarzschild):
    f = sg.conformal_flow(schwarzschild, schwarzschild.exact_potential, sg.coordinate_sphere(3.0, 8, 16), 1.0, 40)
    assert f["monotone"]
    assert f["monotonicity_residual"] <= 1e-6
    assert f["area_variation"] <= 1e-5
    assert len(f["times"]) == 41


def test_minimal_disk_and_plateau_sequence():
    flat = sg.metric("euclidean")
    eps = 0.01
    d = sg.minimal_disk(flat, 1.0, lambda phi: eps * math.sin(2 * phi))
    expected = eps * np.asarray(d["r"]) ** 2 * np.sin(2 * np.asarray(d["phi"]))
    assert np.abs(np.asarray(d["heights"]) - expected).max() <= 1e-5
    seq = sg.plateau_sequence(flat, sg.coordinate_field(3, 2), [4.0, 8.0, 16.0], 2.0)
    assert seq["prediction_held"]
    assert all(r["sup_abs_height"] <= 1e-8 for r in seq["radii"])


def test_run_suite_and_tables():
    report = sg.run_suite("metric: euclidean\nsuites: [static]\n")
    assert report["pass"] and report["exit_code"] == 0
    assert all(r["paper_anchor"] for r in report["records"])
    assert report["csv"].splitlines()[0].startswith("suite,name,value")
    failing = sg.run_suite(
        "metric: {name: schwarzschild_isotropic, params: {m: 1}}\nsuites: [mass]\ntolerance: 1.0e-30\n"
    )
    assert failing["exit_code"] == 1
    assert len(failing["csv"].splitlines()) == 4
    with pytest.raises(sg.StaticGeoError):
        sg.run_suite("colour: blue\n")

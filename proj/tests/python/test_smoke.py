"""Smoke tests for the pywsc module (driven by ctest against the build tree)."""
import math

import numpy as np
import pytest

pywsc = pytest.importorskip("pywsc")

SEGMENT_CFG = """
[domain]
ambient_dim = 2
bbox = [[0,0],[1,1]]
[[stratum]]
kind = "simplex"
dim = 1
vertices = [[0.05,0.05],[0.829422863406,0.5]]
density = "1"
"""

LEB1_CFG = """
[domain]
ambient_dim = 1
bbox = [[0],[1]]
[[stratum]]
kind = "ac_density"
density = "1"
"""


def test_parse_and_mass():
    spec = pywsc.parse_measure_spec(SEGMENT_CFG)
    assert spec.ambient_dim == 2
    assert abs(spec.total_mass - 0.9) < 1e-9
    assert spec.lebesgue_labels() == ["singular"]


def test_cell_mass_query():
    spec = pywsc.parse_measure_spec(LEB1_CFG)
    assert abs(spec.cell_mass([0.25], [0.75]) - 0.5) < 1e-12


def test_tangent_field_segment():
    spec = pywsc.parse_measure_spec(SEGMENT_CFG)
    sweep = pywsc.compute_tangent_field(spec, [1 / 16, 1 / 32])
    dims = sweep.dims()
    assert (dims == 1).all()
    basis = sweep.basis(0).ravel()
    direction = np.array([math.cos(math.pi / 6), math.sin(math.pi / 6)])
    assert abs(abs(basis @ direction) - 1.0) < 1e-6
    assert sweep.unstable_mass_fraction == 0.0


def test_mwug_and_energy():
    spec = pywsc.parse_measure_spec(LEB1_CFG)
    out = pywsc.mwug(spec, [1 / 16, 1 / 32], "x1")
    proj = np.asarray(out["mwug_projection"])
    assert np.allclose(proj, 1.0, atol=1e-8)
    assert abs(out["energy"] - 0.5) < 1e-3
    e = pywsc.cheeger_energy(spec, 1 / 64, "x1")
    assert abs(e - 0.5) < 1e-3


def test_heat_decays():
    spec = pywsc.parse_measure_spec(LEB1_CFG)
    out = pywsc.heat_flow(spec, [1 / 32, 1 / 64], "cos(pi*x1)", 0.05, 16)
    energy = np.asarray(out["energy"])
    assert energy[0] > energy[-1] > 0
    mass = np.asarray(out["mass"])
    assert np.allclose(mass, mass[0], rtol=1e-9, atol=1e-12)


def test_product_measure():
    leb = pywsc.parse_measure_spec(LEB1_CFG)
    prod = pywsc.product_measure(leb, leb)
    assert prod.ambient_dim == 2
    assert abs(prod.total_mass - 1.0) < 1e-12

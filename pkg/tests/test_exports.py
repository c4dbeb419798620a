import csv

import numpy as np
import pytest

from channel_damp import multipliers, profiles, rayleigh
from channel_damp.errors import NearEigenvalue


def test_hom_table_and_spectral_csv(tmp_path):
    prof = profiles.couette_constant(65)
    tab = rayleigh.phi1_table(prof, 1)
    p1 = tmp_path / "hom.csv"
    rayleigh.export_hom_table_csv(p1, tab, stride=16)
    rows = list(csv.reader(p1.open()))
    assert len(rows) == 66
    assert rows[0][0] == "y"
    spec = rayleigh.j_functions(prof, 1, tab)
    p2 = tmp_path / "spec.csv"
    rayleigh.export_spectral_csv(p2, spec)
    rows = list(csv.reader(p2.open()))
    assert rows[0] == ["yprime", "rho", "J1", "J2", "indicator"]
    assert len(rows) == 66
    # full-precision decimal floats round-trip
    assert float(rows[33][1]) == spec.rho[32]


def test_w_csv(tmp_path):
    p = tmp_path / "w.csv"
    multipliers.export_w_csv(p, 2, [50.0], [10.0, 40.0, 120.0])
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["t", "eta", "w", "J", "A", "B", "Astar"]
    assert len(rows) == 4
    assert float(rows[3][2]) == 1.0  # t = 120 >= 2 eta


def test_phi1_solve_single_column():
    prof = profiles.couette_constant(129)
    phi, dphi = rayleigh.phi1_solve(prof, 2, 0.5)
    c = 64
    assert phi[c] == 1.0 and dphi[c] == 0.0
    exact = np.sinh(2 * (prof.y[-1] - 0.5)) / (2 * (prof.y[-1] - 0.5))
    assert phi[-1] == pytest.approx(exact, rel=1e-8)


def test_near_eigenvalue_guard():
    prof = profiles.couette_bump(65, eps_u=0.05)
    sd = rayleigh.SpectralData(prof, 1)
    sd.guard_eigenvalue()  # stable profile passes
    sd.spec.J1 = np.zeros_like(sd.spec.J1)
    sd.spec.J2 = np.zeros_like(sd.spec.J2)
    with pytest.raises(NearEigenvalue):
        sd.guard_eigenvalue()

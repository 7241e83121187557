"""Experiment drivers at desk scale: outputs, invariants, determinism."""

import numpy as np
import pytest

from tpmhd import cases
from tpmhd.config import parse_text
from tpmhd.fespace import interpolate
from tpmhd.forms import integral_vector
from tpmhd.mesh import build_structured_mesh
from tpmhd.report import DIAG_COLUMNS
from tpmhd.scheme import SolverError, Stepper, build_spaces


SPINODAL_TEXT = """
experiment = spinodal
case = I
n = 8
dt = 0.001
T_final = 0.003
gamma = 0.01
mobility = 0.01
lambda = 0.01
seed = 5
"""

KH_TEXT = """
experiment = kh
case = I
n = 8
dt = 0.001
T_final = 0.002
gamma = 0.01
mobility = 0.01
nu = 0.001
lambda = 0.0001
dump_every = 1
"""


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestSpinodalPhase:
    def test_mean_is_exact(self):
        mesh = build_structured_mesh(12)
        spaces = build_spaces(mesh, "I")
        phi = cases.spinodal_phase(spaces.phi, 7)
        weights = integral_vector(spaces.phi)
        mean = weights @ phi / weights.sum()
        assert abs(mean + 0.05) < 1e-14

    def test_amplitude(self):
        mesh = build_structured_mesh(12)
        spaces = build_spaces(mesh, "I")
        phi = cases.spinodal_phase(spaces.phi, 7)
        assert np.all(np.abs(phi + 0.05) <= 0.002)

    def test_seed_determinism(self):
        mesh = build_structured_mesh(8)
        spaces = build_spaces(mesh, "I")
        a = cases.spinodal_phase(spaces.phi, 3)
        b = cases.spinodal_phase(spaces.phi, 3)
        c = cases.spinodal_phase(spaces.phi, 4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestVorticityProjection:
    def test_rigid_rotation(self):
        mesh = build_structured_mesh(8)
        spaces = build_spaces(mesh, "I")
        u = interpolate(spaces.u, lambda x, y, t: (-y, x))
        vort = cases.vorticity_projection(spaces.u, u, spaces.phi)
        assert np.abs(vort - 2.0).max() < 1e-11

    def test_gradient_field_is_curl_free(self):
        mesh = build_structured_mesh(8)
        spaces = build_spaces(mesh, "I")
        u = interpolate(spaces.u, lambda x, y, t: (x, y))
        vort = cases.vorticity_projection(spaces.u, u, spaces.phi)
        assert np.abs(vort).max() < 1e-11


class TestSpinodalDriver:
    def test_outputs_and_mass(self, tmp_path):
        cfg = parse_text(SPINODAL_TEXT)
        state, rows = cases.run_spinodal(cfg, tmp_path)
        header, csv_rows = read_csv(tmp_path / "spinodal_diagnostics.csv")
        assert tuple(header) == DIAG_COLUMNS
        assert len(csv_rows) == 4
        masses = [float(r[header.index("mass")]) for r in csv_rows]
        assert max(abs(m - masses[0]) for m in masses) < 1e-12
        assert (tmp_path / "spinodal_diagnostics.png").exists()

    def test_energy_nonincreasing(self, tmp_path):
        cfg = parse_text(SPINODAL_TEXT)
        _, rows = cases.run_spinodal(cfg, tmp_path)
        energies = [row[2] for row in rows]
        diffs = np.diff(energies)
        assert np.all(diffs <= 1e-11)

    def test_dumps_on_request(self, tmp_path):
        cfg = parse_text(SPINODAL_TEXT + "dump_every = 2\n")
        cases.run_spinodal(cfg, tmp_path)
        names = {p.name for p in tmp_path.iterdir()}
        assert "spinodal_000000.vtk" in names
        assert "spinodal_000002.vtk" in names
        assert "spinodal_000001.vtk" not in names

    def test_rerun_byte_identical(self, tmp_path):
        cfg = parse_text(SPINODAL_TEXT)
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        cases.run_spinodal(cfg, a)
        cases.run_spinodal(cfg, b)
        assert ((a / "spinodal_diagnostics.csv").read_bytes()
                == (b / "spinodal_diagnostics.csv").read_bytes())


class TestKhDriver:
    def test_outputs(self, tmp_path):
        cfg = parse_text(KH_TEXT)
        state, rows = cases.run_kh(cfg, tmp_path)
        header, csv_rows = read_csv(tmp_path / "kh_diagnostics.csv")
        assert tuple(header) == DIAG_COLUMNS
        assert len(csv_rows) == 3
        dump = (tmp_path / "kh_000000.vtk").read_text()
        for name in ("phi", "u", "p", "B", "vorticity"):
            assert name in dump

    def test_mass_constant(self, tmp_path):
        cfg = parse_text(KH_TEXT)
        _, rows = cases.run_kh(cfg, tmp_path)
        masses = [row[4] for row in rows]
        assert max(abs(m - masses[0]) for m in masses) < 1e-11

    def test_initial_dump_is_shear_profile(self, tmp_path):
        cfg = parse_text(KH_TEXT)
        cases.run_kh(cfg, tmp_path)
        text = (tmp_path / "kh_000000.vtk").read_text().splitlines()
        start = next(i for i, line in enumerate(text)
                     if line.startswith("SCALARS phi")) + 2
        values = []
        for line in text[start:]:
            try:
                values.append(float(line))
            except ValueError:
                break
        values = np.array(values)
        assert values.min() < -0.9
        assert values.max() > 0.9


class TestConvergeDriver:
    def test_partial_table_flushed_on_failure(self, tmp_path, monkeypatch):
        cfg = parse_text("""
experiment = converge
case = I
n_list = 4, 8
T_final = 0.05
""")
        original = Stepper.newton_solve_step

        def failing(self, state):
            if self.problem.mesh.cells.shape[0] > 40:
                raise SolverError("injected")
            return original(self, state)

        monkeypatch.setattr(Stepper, "newton_solve_step", failing)
        with pytest.raises(SolverError):
            cases.run_converge(cfg, tmp_path)
        header, rows = read_csv(tmp_path / "converge_caseI.csv")
        assert len(rows) == 1
        assert float(rows[0][0]) == pytest.approx(np.sqrt(2.0) / 4.0)

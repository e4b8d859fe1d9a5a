import numpy as np
import pytest

from skelmin.cli import main
from skelmin.errors import ConfigError, ParseError
from skelmin.offio import export_mesh, face_key_set, import_as_set, import_mesh

from conftest import grid2

L_DOMAIN_CFG = """
[domain]
box = -2,-2 ; 2,2
n = 2
d = 1

[input]
kind = terminals
points = 1,-2 ; 1,2

[obstacles]
box0 = -1,-1 ; 1,1
clearance = 0

[oracle]
kind = connectivity

[density]
kind = constant
value = 1

[schedule]
strides = 0.5,0.25

[tolerances]
tol_j = 1e-9
tol_d = 0.2

[seed]
value = 7
"""


@pytest.fixture
def l_domain_cfg(tmp_path):
    p = tmp_path / "l_domain.cfg"
    p.write_text(L_DOMAIN_CFG)
    return p


class TestConfig:
    def test_parse(self, l_domain_cfg):
        from skelmin.config import parse_config

        prob = parse_config(l_domain_cfg)
        assert prob.n == 2 and prob.d == 1
        assert prob.strides == [0.5, 0.25]
        assert len(prob.obstacles) == 1

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(L_DOMAIN_CFG + "\n[domain]\nbogus = 1\n")
        from skelmin.config import parse_config

        with pytest.raises((ConfigError, Exception)):
            parse_config(p)

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "bad2.cfg"
        p.write_text(L_DOMAIN_CFG + "\n[mystery]\nx = 1\n")
        from skelmin.config import parse_config

        with pytest.raises(ConfigError):
            parse_config(p)


class TestCli:
    def test_minimize_smoke(self, l_domain_cfg, tmp_path):
        out = tmp_path / "out"
        code = main(["minimize", "--config", str(l_domain_cfg), "--out", str(out)])
        assert code == 0
        assert (out / "run_report.jsonl").exists()
        assert (out / "final_skeleton.off").exists()

    def test_unknown_subcommand_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_d_geq_n_exit_1(self, tmp_path, capsys):
        bad = L_DOMAIN_CFG.replace("d = 1", "d = 2")
        p = tmp_path / "bad.cfg"
        p.write_text(bad)
        code = main(["minimize", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "DimensionMismatch" in capsys.readouterr().err

    def test_verify_passes(self, tmp_path):
        assert main(["verify", "--out", str(tmp_path)]) == 0

    def test_same_seed_byte_identical_outputs(self, l_domain_cfg, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["minimize", "--config", str(l_domain_cfg), "--out", str(out1)]) == 0
        assert main(["minimize", "--config", str(l_domain_cfg), "--out", str(out2)]) == 0
        for name in ("run_report.jsonl", "strides.csv", "final_skeleton.off", "gauge.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


SOUP_CFG = """
[domain]
box = 0,0 ; 2,1
n = 2
d = 1

[input]
kind = soup
simplices = 0.2,0.3,1.7,0.8

[oracle]
kind = connectivity

[schedule]
strides = 1.0

[seed]
value = 2
"""

PATCH_CFG = """
[domain]
box = -2,-2 ; 3,3
n = 2
d = 1

[input]
kind = terminals
points = 0,0 ; 1,1

[oracle]
kind = connectivity

[schedule]
strides = 0.25

[seed]
value = 11

[patch]
center = 0.5,0.5
angle_deg = 45
stride = 0.3535533905932738
cells_along = 4
cells_across = 2
"""


class TestSubcommands:
    def test_grid_build(self, l_domain_cfg, tmp_path):
        assert main(["grid", "build", "--config", str(l_domain_cfg),
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "grid_skeleton.off").exists()

    def test_grid_merge(self, tmp_path):
        p = tmp_path / "patch.cfg"
        p.write_text(PATCH_CFG)
        assert main(["grid", "merge", "--config", str(p), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "merged_skeleton.off").exists()

    def test_project_and_erode(self, tmp_path):
        p = tmp_path / "soup.cfg"
        p.write_text(SOUP_CFG)
        assert main(["project", "--config", str(p), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "cascade.csv").exists()
        assert (tmp_path / "projected.off").exists()
        assert main(["erode", "--config", str(p), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "skeleton.off").exists()

    def test_optimize_subcommand(self, l_domain_cfg, tmp_path):
        assert main(["optimize", "--config", str(l_domain_cfg),
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "moves.csv").exists()
        header = (tmp_path / "moves.csv").read_text().splitlines()
        assert header[1] == "iter,move,face,delta,accepted"

    def test_export_round_trip_cmd(self, tmp_path):
        S = grid2(2, 2)
        src = tmp_path / "in.off"
        export_mesh(frozenset(S.faces_of_dim(1)), src, complex_=S)
        out = tmp_path / "out"
        assert main(["export", "--input", str(src), "--out", str(out)]) == 0
        assert face_key_set(out / "in.off") == face_key_set(src)


class TestOffIO:
    def test_round_trip_grid_skeleton(self, tmp_path):
        S = grid2(4, 4)
        path = tmp_path / "skel.off"
        export_mesh(frozenset(S.faces_of_dim(1)), path, complex_=S)
        keys = face_key_set(path)
        want = {S.faces[f].vkeys for f in S.faces_of_dim(1)}
        assert keys == want

    def test_empty_skeleton_valid_file(self, tmp_path):
        S = grid2(1, 1)
        path = tmp_path / "empty.off"
        export_mesh(frozenset(), path, complex_=S)
        verts, faces = import_mesh(path)
        assert len(faces) == 0

    def test_truncated_file_parse_error_with_line(self, tmp_path):
        S = grid2(1, 1)
        path = tmp_path / "trunc.off"
        export_mesh(frozenset(S.faces_of_dim(1)), path, complex_=S)
        text = path.read_text().splitlines()
        path.write_text("\n".join(text[:4]))
        with pytest.raises(ParseError) as exc:
            import_mesh(path)
        assert exc.value.line is not None

    def test_set_round_trip_measure(self, tmp_path):
        from skelmin.simplicial import SimplicialSet

        E = SimplicialSet.from_simplices(np.array([[[0.0, 0], [1, 0]], [[1, 0], [1, 1.0]]]))
        path = tmp_path / "set.off"
        export_mesh(E, path)
        back = import_as_set(path, d=1)
        assert back.measure() == pytest.approx(E.measure(), abs=1e-9)

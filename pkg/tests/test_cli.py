"""Tests for model files, reports and the markov-copula command line."""

import io
import json
from pathlib import Path

import numpy as np
import pytest

from cli import COMMANDS, EXIT_ERROR, EXIT_FAIL, EXIT_PASS, ModelFile, default_grid, run
from cli.model_file import ModelParseError, load_model, parse_model, write_model
from conftest import (
    COMMON_SHOCK,
    RECOVERING,
    absorbing_matrix,
    binary_factor,
    constant_model,
    family_model,
)
from main import main
from state_model import ConstantGenerator, FactoredStateSpace, TensorSumGenerator

MODELS = Path(__file__).resolve().parents[1] / "models"


def invoke(*argv: str):
    """Run the CLI and return (exit code, printed text)."""
    stdout = io.StringIO()
    code = run(list(argv), stdout=stdout)
    return code, stdout.getvalue()


def read_report(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture
def common_shock_file(write_model):
    return write_model("common_shock.json", family_model("common_shock", COMMON_SHOCK))


@pytest.fixture
def first_jump_file(write_model):
    return write_model("first_jump_shock.json", family_model("first_jump_shock", COMMON_SHOCK))


@pytest.fixture
def recovering_file(write_model):
    return write_model("recovering_shock.json", family_model("recovering_shock", RECOVERING))


@pytest.fixture
def marginal_files(write_model):
    return (
        write_model("x1.json", constant_model("X1", absorbing_matrix(0.7))),
        write_model("x2.json", constant_model("X2", absorbing_matrix(0.5))),
    )


class TestModelFile:
    def test_family_round_trip(self, tmp_path, common_shock, origin):
        path = tmp_path / "model.json"
        write_model(path, common_shock, origin)
        loaded = load_model(path)
        assert loaded.generator.kind == "family"
        np.testing.assert_array_equal(loaded.generator.matrix_at(0.0), common_shock.matrix_at(0.0))
        np.testing.assert_array_equal(loaded.initial.weights, origin.weights)
        assert len(loaded.digest) == 64

    def test_tensor_sum_round_trip(self, tmp_path):
        one = ConstantGenerator(space=binary_factor("A"), rates=absorbing_matrix(0.7))
        two = ConstantGenerator(space=binary_factor("B"), rates=absorbing_matrix(0.5))
        space = FactoredStateSpace.product(one.space, two.space)
        joint = TensorSumGenerator(space=space, components=(one, two))
        path = tmp_path / "joint.json"
        write_model(path, joint)
        loaded = load_model(path)
        assert isinstance(loaded.generator, TensorSumGenerator)
        np.testing.assert_allclose(loaded.generator.matrix_at(1.0), joint.matrix_at(1.0))

    def test_initial_state_labels(self):
        document = family_model("common_shock", COMMON_SHOCK)
        document["initial"] = {"state": ["1", "0"]}
        loaded = parse_model(json.dumps(document))
        assert loaded.initial.probability(2) == 1.0

    def test_default_initial_is_first_state(self):
        loaded = parse_model(json.dumps(family_model("common_shock", COMMON_SHOCK)))
        assert loaded.initial.probability(0) == 1.0

    @pytest.mark.parametrize("name", ["common_shock", "first_jump_shock", "recovering_shock"])
    def test_shipped_models_load(self, name):
        loaded = load_model(MODELS / f"{name}.json")
        assert loaded.generator.name == name
        assert loaded.initial.probability((0, 0)) == 1.0

    def test_syntax_error_has_line_and_column(self):
        with pytest.raises(ModelParseError) as info:
            parse_model('{\n  "factors": [\n}', "broken.json")
        assert info.value.position.startswith("line 3")
        assert str(info.value).startswith("broken.json: line 3, column")

    def test_schema_error_names_the_field(self):
        document = family_model("common_shock", COMMON_SHOCK)
        document["generator"]["kind"] = "spline"
        with pytest.raises(ModelParseError) as info:
            parse_model(json.dumps(document))
        assert info.value.position.startswith("field generator")

    def test_initial_needs_one_form(self):
        document = family_model("common_shock", COMMON_SHOCK)
        document["initial"] = {"state": ["0", "0"], "weights": [1.0, 0.0, 0.0, 0.0]}
        with pytest.raises(ModelParseError) as info:
            parse_model(json.dumps(document))
        assert info.value.position == "field initial"

    def test_bad_family_parameters(self):
        with pytest.raises(ModelParseError) as info:
            parse_model(json.dumps(family_model("common_shock", {"a": 0.5})))
        assert info.value.position == "field generator"

    def test_dumps_is_deterministic(self, common_shock):
        text = ModelFile.from_model(common_shock).dumps()
        assert text == ModelFile.from_model(common_shock).dumps()
        assert json.loads(text)["format"] == "markov-copula/model"


class TestDefaultGrid:
    def test_scaled_by_exit_rate(self, common_shock):
        grid = default_grid([common_shock])
        assert len(grid) == 16
        assert grid[0] == pytest.approx(0.01)
        assert grid[-1] == pytest.approx(4.0)

    def test_breakpoints_are_added(self, common_shock):
        assert default_grid([common_shock], breakpoints=True)[0] == 0.0


class TestValidate:
    def test_valid_model(self, common_shock_file):
        code, text = invoke("validate", common_shock_file)
        assert code == EXIT_PASS
        assert text.startswith("valid generator")

    def test_violation_is_located(self, write_model, tmp_path):
        matrix = [
            [-0.5, 0.6, -0.1, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]
        document = {
            "factors": [{"name": "X1", "states": ["0", "1"]}, {"name": "X2", "states": ["0", "1"]}],
            "generator": {"kind": "constant", "matrix": matrix},
        }
        out = tmp_path / "report.json"
        code, text = invoke("validate", write_model("bad.json", document), "--grid", "0", "--out", str(out))
        assert code == EXIT_FAIL
        assert "row (0,0) column (1,0): negative_rate" in text
        report = read_report(out)
        assert report["verdicts"] == {"valid": False}
        assert report["certificates"][0]["row_label"] == "(0,0)"

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"factors": [', encoding="utf-8")
        code, text = invoke("validate", str(path))
        assert code == EXIT_ERROR
        assert "line 1" in text

    def test_missing_file(self, tmp_path):
        code, text = invoke("validate", str(tmp_path / "absent.json"))
        assert code == EXIT_ERROR
        assert text.startswith("Error:")

    def test_unknown_verb(self):
        code, text = invoke("explain")
        assert code == EXIT_ERROR
        assert text.startswith("Error:")


class TestCheck:
    def test_first_jump_shock_strong_fails(self, first_jump_file):
        code, text = invoke("check", first_jump_file, "--mode", "strong")
        assert code == EXIT_FAIL
        assert "X1: inconsistent" in text

    def test_first_jump_shock_weak_passes(self, first_jump_file):
        code, _ = invoke("check", first_jump_file, "--mode", "weak")
        assert code == EXIT_PASS

    def test_first_jump_shock_both_reports_immersion(self, first_jump_file, tmp_path):
        out = tmp_path / "report.json"
        code, _ = invoke("check", first_jump_file, "--mode", "both", "--grid", "0.5", "1", "--out", str(out))
        assert code == EXIT_PASS
        report = read_report(out)
        assert report["verdicts"]["X1"] == {"verdict": "weak_evidence", "immersion": "fails"}
        assert report["verdicts"]["condition_M"] == [False, False]
        assert report["marginals"]["X1"]["closed_form"] == "first_jump_shock_marginal_1"
        assert report["command"][:2] == ["markov-copula", "check"]
        assert "timing" not in report

    def test_recovering_shock_certificate(self, recovering_file, tmp_path):
        out = tmp_path / "report.json"
        code, _ = invoke(
            "check", recovering_file, "--mode", "weak", "--factor", "2", "--grid", "1", "--out", str(out)
        )
        assert code == EXIT_FAIL
        report = read_report(out)
        assert list(report["verdicts"]) == ["X2", "condition_M"]
        cert = next(c for c in report["certificates"] if c["from_state"] == "0")
        assert cert["left_context"] == "X2(1)=0"
        assert cert["right"] == pytest.approx(RECOVERING["f"], abs=1e-8)
        assert cert["right_context"] == "X2(0.5)=1, X2(1)=0"

    def test_common_shock_passes(self, common_shock_file):
        code, text = invoke("check", common_shock_file)
        assert code == EXIT_PASS
        assert "X1: strong (immersion holds)" in text

    @pytest.mark.parametrize(
        "args", [["--factor", "3"], ["--factor", "0"], ["--depth", "4"], ["--mode", "odd"]]
    )
    def test_bad_arguments(self, common_shock_file, args):
        code, _ = invoke("check", common_shock_file, *args)
        assert code == EXIT_ERROR

    def test_command_data_carries_report(self, common_shock_file):
        output = COMMANDS["check"].run({"model": common_shock_file, "mode": "strong", "grid": [1.0]})
        assert output.success
        assert output.data["exit_code"] == EXIT_PASS
        assert output.data["format"] == "markov-copula/report"


class TestBuild:
    def test_independent_gives_tensor_sum(self, marginal_files, tmp_path):
        joint = tmp_path / "joint.json"
        code, _ = invoke("build", *marginal_files, "--model-out", str(joint))
        assert code == EXIT_PASS
        loaded = load_model(joint)
        assert loaded.document.generator.kind == "constant"
        assert loaded.generator.matrix_at(0.0)[0, 3] == 0.0
        assert [f.name for f in loaded.generator.space.factors] == ["X1", "X2"]

    def test_maximize_common_jumps(self, marginal_files, tmp_path):
        joint = tmp_path / "joint.json"
        out = tmp_path / "report.json"
        code, _ = invoke(
            "build",
            *marginal_files,
            "--objective",
            "maximize_common_jumps",
            "--model-out",
            str(joint),
            "--out",
            str(out),
        )
        assert code == EXIT_PASS
        document = json.loads(joint.read_text(encoding="utf-8"))
        assert document["generator"]["matrix"][0][3] == pytest.approx(0.5, abs=1e-9)
        report = read_report(out)
        assert report["verdicts"] == {"status": "optimal", "marginals_reproduced": True}
        assert report["residuals"]["objective_values"] == [pytest.approx(0.5, abs=1e-9)]

    def test_built_model_is_strongly_consistent(self, marginal_files, tmp_path):
        joint = tmp_path / "joint.json"
        invoke("build", *marginal_files, "--objective", "maximize_common_jumps", "--model-out", str(joint))
        code, _ = invoke("check", str(joint), "--mode", "strong")
        assert code == EXIT_PASS

    def test_model_printed_without_model_out(self, marginal_files):
        code, text = invoke("build", *marginal_files)
        assert code == EXIT_PASS
        assert '"markov-copula/model"' in text

    def test_time_dependent_marginals(self, write_model, tmp_path):
        files = [
            write_model(f"m{k}.json", family_model(f"first_jump_shock_marginal_{k}", COMMON_SHOCK, factors=1))
            for k in (1, 2)
        ]
        joint = tmp_path / "joint.json"
        code, _ = invoke("build", *files, "--model-out", str(joint))
        assert code == EXIT_PASS
        assert load_model(joint).document.generator.kind == "tensor_sum"

    def test_invalid_marginal(self, marginal_files, write_model):
        bad = write_model("bad.json", constant_model("X3", [[0.3, -0.3], [0.0, 0.0]]))
        code, _ = invoke("build", marginal_files[0], bad)
        assert code == EXIT_ERROR

    def test_weighted_objective_not_offered(self, marginal_files):
        code, _ = invoke("build", *marginal_files, "--objective", "maximize_weighted")
        assert code == EXIT_ERROR

    def test_needs_two_marginals(self, marginal_files):
        code, _ = invoke("build", marginal_files[0])
        assert code == EXIT_ERROR


class TestSimulate:
    def test_zero_paths_rejected(self, common_shock_file):
        code, _ = invoke("simulate", common_shock_file, "--t", "1", "--paths", "0")
        assert code == EXIT_ERROR

    def test_too_few_paths_for_residuals(self, common_shock_file):
        code, _ = invoke("simulate", common_shock_file, "--t", "1", "--paths", "500")
        assert code == EXIT_ERROR

    def test_reports_are_reproducible(self, common_shock_file, tmp_path):
        out = tmp_path / "report.json"
        argv = ["simulate", common_shock_file, "--t", "1", "--paths", "2000", "--seed", "7"]
        argv += ["--report", "both"]
        first_code, _ = invoke(*argv, "--out", str(out))
        first = out.read_bytes()
        second_code, _ = invoke(*argv, "--out", str(out))
        assert first_code == second_code == EXIT_PASS
        assert out.read_bytes() == first
        report = json.loads(first)
        assert set(report["verdicts"]) == {"martingale_residuals", "empirical_law"}
        assert report["residuals"]["empirical"]["states"] == ["(0,0)", "(0,1)", "(1,0)", "(1,1)"]


def test_main_exits_with_command_code(common_shock_file):
    with pytest.raises(SystemExit) as info:
        main(["validate", common_shock_file])
    assert info.value.code == EXIT_PASS

import json
from fractions import Fraction

import pytest

from ellipack.cli import main, parse_ellipsoid_expr
from ellipack.ech import Ellipsoid
from ellipack.radicals import Radical


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEllipsoidExpr:
    def test_plain(self):
        assert parse_ellipsoid_expr("E(1,2)") == Ellipsoid.of(1, 2)

    def test_sorts(self):
        assert parse_ellipsoid_expr("E(3, 1, 2)") == Ellipsoid.of(1, 2, 3)

    def test_ball_expands(self):
        assert parse_ellipsoid_expr("B(3)") == Ellipsoid.of(3, 3)
        assert parse_ellipsoid_expr("B(28^(1/2))") == \
            Ellipsoid([Radical(Fraction(28), 2)] * 2)

    def test_scalar_grammar_inside(self):
        e = parse_ellipsoid_expr("E(1.5, 2^(1/2)*3)")
        assert e.factors[0] == Fraction(3, 2)

    @pytest.mark.parametrize("bad", ["E()", "E(1,)", "B(1,2)", "(1,2)",
                                     "E(0,1)", "X(1)"])
    def test_rejects(self, bad):
        with pytest.raises(Exception):
            parse_ellipsoid_expr(bad)


class TestDecideCommand:
    def test_obstructed_exit_and_witness(self, capsys):
        code, out, _ = run(capsys, "decide", "E(1,1)", "E(9/10,6/5)")
        assert code == 1
        doc = json.loads(out)
        assert doc["outcome"] == "obstructed"
        assert doc["witness"] == {"k": 1, "lhs": "1", "rhs": "9/10"}

    def test_embeds_exit(self, capsys):
        code, out, _ = run(capsys, "decide", "E(1,1)", "E(1,2)")
        assert code == 0
        doc = json.loads(out)
        assert doc["rule"] == "TermwiseWithCutoff"

    def test_inconclusive_exit(self, capsys):
        code, out, _ = run(capsys, "decide", "E(1,4)", "E(2,2)",
                           "--max-terms", "500")
        assert code == 2
        assert json.loads(out)["outcome"] == "verified_up_to"

    def test_parse_error_exit(self, capsys):
        code, _, err = run(capsys, "decide", "E(1,1)", "nonsense")
        assert code == 4
        assert "parse error" in err

    def test_pretty_mode(self, capsys):
        code, out, _ = run(capsys, "decide", "E(1,1)", "E(1,2)", "--pretty")
        assert code == 0
        assert "TermwiseWithCutoff" in out


class TestCapsCommand:
    def test_csv_schema(self, capsys):
        code, out, _ = run(capsys, "caps", "1", "4", "--terms", "10", "--csv")
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "k,value_num,value_den"
        values = [Fraction(int(l.split(",")[1]), int(l.split(",")[2]))
                  for l in lines[1:]]
        assert values == [0, 1, 2, 3, 4, 4, 5, 5, 6, 6]

    def test_json_default(self, capsys):
        code, out, _ = run(capsys, "caps", "1", "4", "--terms", "10")
        doc = json.loads(out)
        assert doc["values"] == ["0", "1", "2", "3", "4", "4", "5", "5",
                                 "6", "6"]

    def test_unsorted_input_normalized(self, capsys):
        _, out1, _ = run(capsys, "caps", "4", "1", "--terms", "6")
        _, out2, _ = run(capsys, "caps", "1", "4", "--terms", "6")
        assert out1 == out2


class TestCountAndBounds:
    def test_count(self, capsys):
        code, out, _ = run(capsys, "count", "1", "2", "3")
        assert code == 0
        assert json.loads(out)["count"] == 6

    def test_bounds(self, capsys):
        code, out, _ = run(capsys, "bounds", "1", "2", "3")
        doc = json.loads(out)
        assert (doc["lower"], doc["count"], doc["upper"]) == ("15/4", 6, "13/2")

    def test_negative_y_rejected(self, capsys):
        code, _, err = run(capsys, "count", "1", "2", "-3")
        assert code == 4


class TestPlanCommand:
    DOMAIN = "E(1/4000,4)"
    TARGET = "E(1/40,1/25)"

    def test_emits_certificate(self, capsys):
        code, out, _ = run(capsys, "plan", self.DOMAIN, self.TARGET)
        assert code == 0
        doc = json.loads(out)
        assert doc["steps"]

    def test_round_trip_verify(self, capsys, tmp_path):
        _, out, _ = run(capsys, "plan", self.DOMAIN, self.TARGET)
        path = tmp_path / "cert.json"
        path.write_text(out)
        code, out2, _ = run(capsys, "plan", "--verify", str(path))
        assert code == 0
        assert json.loads(out2)["verified"] is True

    def test_tampered_file_fails(self, capsys, tmp_path):
        _, out, _ = run(capsys, "plan", self.DOMAIN, self.TARGET)
        doc = json.loads(out)
        doc["steps"][0]["params"]["pair_target"][0] = "1/2"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "plan", "--verify", str(path))
        assert code == 3

    def test_hypothesis_failure_exit(self, capsys):
        code, _, err = run(capsys, "plan", "E(1,1,1)", "E(1,1,1)")
        assert code == 3
        assert "thinness" in err

    def test_volume_obstruction_exit(self, capsys):
        code, _, _ = run(capsys, "plan", "E(2,2,2)", "E(1,1,1)")
        assert code == 3

    def test_missing_arguments(self, capsys):
        code, _, _ = run(capsys, "plan", "E(1,1)")
        assert code == 4


class TestPackCommand:
    def test_balls(self, capsys):
        code, out, _ = run(capsys, "pack", "balls", "3", "--into", "E(1,3)")
        assert code == 0
        doc = json.loads(out)
        assert doc["rule"] == "AxiomFullFill"
        assert doc["copies"] == 3
        assert doc["target"]["factors"] == ["1", "3"]

    def test_balls_target_mismatch(self, capsys):
        code, _, _ = run(capsys, "pack", "balls", "3", "--into", "E(1,4)")
        assert code == 4

    def test_ellipsoid(self, capsys):
        code, out, _ = run(capsys, "pack", "ellipsoid", "E(1,2)", "3")
        doc = json.loads(out)
        assert doc["target"]["factors"] == ["1", "6"]


class TestStabCommand:
    def test_cpn(self, capsys):
        code, out, _ = run(capsys, "stab", "cpn", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["bound"] == 23
        assert doc["manifold"] == {"kind": "CPn", "n": 3}

    def test_cpn_with_chain(self, capsys):
        code, out, _ = run(capsys, "stab", "cpn", "3", "--chain", "27")
        doc = json.loads(out)
        assert len(doc["chain"]["steps"]) == 2

    def test_hyp(self, capsys):
        code, out, _ = run(capsys, "stab", "hyp", "2", "1")
        assert json.loads(out)["bound"] == 28

    def test_hyp_with_chain(self, capsys):
        code, out, _ = run(capsys, "stab", "hyp", "2", "1", "--chain", "28")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["chain"]["steps"]) == 1

    def test_chain_below_threshold(self, capsys):
        code, _, _ = run(capsys, "stab", "cpn", "3", "--chain", "8")
        assert code == 3

    def test_exceptions_file(self, capsys, tmp_path):
        path = tmp_path / "exc.json"
        path.write_text(json.dumps([["36/5", "15/2"]]))
        code, out, _ = run(capsys, "stab", "cpn", "3",
                           "--exceptions", str(path))
        assert code == 0
        assert json.loads(out)["bound"] == 21


class TestCliContract:
    def test_usage_error_is_4(self, capsys):
        assert run(capsys, "frobnicate")[0] == 4
        assert run(capsys)[0] == 4

    def test_version_header_on_stderr_only(self, capsys):
        _, out, err = run(capsys, "count", "1", "1", "0")
        assert err.startswith("ellipack ")
        assert "ellipack" not in out

    def test_byte_identical_reruns(self, capsys):
        first = run(capsys, "stab", "cpn", "3", "--chain", "27")
        second = run(capsys, "stab", "cpn", "3", "--chain", "27")
        assert first == second

    def test_precision_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("ELLIPACK_MAX_PRECISION", "not-an-int")
        code, _, _ = run(capsys, "decide", "E(1,1)", "E(1,2)")
        assert code == 4
        monkeypatch.setenv("ELLIPACK_MAX_PRECISION", "256")
        code, _, _ = run(capsys, "decide", "E(1,1)", "E(1,2)")
        assert code == 0

    def test_help_exits_zero(self, capsys):
        assert run(capsys, "--help")[0] == 0

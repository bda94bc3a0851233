import json
import math

import jsonschema
import pytest

from fejercert.cli import main
from fejercert.serialize import load_schema


def write_instance(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture
def toy_instance(tmp_path):
    return write_instance(tmp_path / "toy.json", {"n": 2, "m": 1, "energy": [0, 1]})


@pytest.fixture
def qap_instance(tmp_path):
    return write_instance(
        tmp_path / "qap.json",
        {"n": 3, "m": 3, "generator": {"kind": "assignment", "cost": [[0, 1, 2], [2, 0, 1], [1, 2, 0]]}},
    )


def run(args):
    return main(args)


class TestCertify:
    def test_two_string_toy(self, toy_instance, tmp_path):
        out = tmp_path / "cert.json"
        code = run([
            "certify", "--instance", toy_instance, "--gamma", str(math.pi),
            "-p", "1", "--epsilon", "0.1", "-o", str(out),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("certificate"))
        assert doc["q0_exact"] == pytest.approx(1.0)
        assert doc["q0_bound"] == pytest.approx(0.8)
        assert doc["status"] == "certified"
        assert doc["bound_satisfied"] is True

    def test_all_optimal_instance(self, tmp_path):
        inst = write_instance(tmp_path / "flat.json", {"n": 2, "m": 1, "energy": [3, 3]})
        out = tmp_path / "cert.json"
        assert run(["certify", "--instance", inst, "--gamma", "0.5", "-p", "2", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["q0_exact"] == pytest.approx(1.0)
        assert doc["q0_bound"] == pytest.approx(1.0)
        assert doc["delta"] == pytest.approx(math.pi)

    def test_collision_is_uncertifiable(self, tmp_path):
        inst = write_instance(tmp_path / "coll.json", {"n": 2, "m": 1, "energy": [0, 3]})
        out = tmp_path / "cert.json"
        code = run([
            "certify", "--instance", inst, "--gamma", str(2 * math.pi / 3), "-p", "2",
            "-o", str(out),
        ])
        assert code == 3
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("certificate"))
        assert doc["status"] == "uncertifiable"
        assert doc["collisions"] == ["1"]
        assert doc["shots"] is None

    def test_external_envelope(self, toy_instance, tmp_path):
        env_path = tmp_path / "env.json"
        env_path.write_text(json.dumps([0.8, 0.2]))
        out = tmp_path / "cert.json"
        code = run([
            "certify", "--instance", toy_instance, "--gamma", str(math.pi), "-p", "1",
            "--envelope", str(env_path), "-o", str(out),
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["c_beta"] == pytest.approx(0.8)
        assert doc["envelope_source"] == "external"

    def test_degrees_flag(self, toy_instance, tmp_path):
        out = tmp_path / "cert.json"
        run([
            "certify", "--instance", toy_instance, "--gamma", "180", "--degrees",
            "-p", "1", "-o", str(out),
        ])
        doc = json.loads(out.read_text())
        assert doc["gamma"] == pytest.approx(math.pi)
        assert doc["q0_bound"] == pytest.approx(0.8)

    def test_beta_count_mismatch_is_precondition(self, toy_instance, tmp_path):
        code = run([
            "certify", "--instance", toy_instance, "--gamma", "1.0", "-p", "2",
            "--betas", "0.4", "-o", str(tmp_path / "x.json"),
        ])
        assert code == 2

    def test_cap_exceeded(self, tmp_path):
        inst = write_instance(tmp_path / "big.json", {"n": 4, "m": 8, "energy": []})
        code = run(["certify", "--instance", inst, "--gamma", "1", "-p", "1",
                    "-o", str(tmp_path / "x.json")])
        assert code == 4

    def test_law_output_csv(self, toy_instance, tmp_path):
        out = tmp_path / "cert.json"
        law = tmp_path / "law.csv"
        run(["certify", "--instance", toy_instance, "--gamma", str(math.pi), "-p", "1",
             "-o", str(out), "--law-output", str(law)])
        lines = law.read_text().strip().split("\n")
        assert lines[0] == "string,phase,fejer_weight,probability"
        rows = {line.split(",")[0]: line.split(",")[1:] for line in lines[1:]}
        assert float(rows["0"][2]) == pytest.approx(1.0)  # probability column
        assert float(rows["1"][1]) == pytest.approx(0.0)  # F_1(pi) weight
        # re-parses: every cell is a finite float
        for cells in rows.values():
            assert all(math.isfinite(float(c)) for c in cells)

    def test_feasible_scope_with_infeasible_collision(self, tmp_path):
        # the infeasible string (0,0) ties the optimal energy, so the
        # feasible-only gap does not control the full law: the certificate
        # must report the unmet bound and exit uncertifiable
        inst = write_instance(
            tmp_path / "tie.json",
            {"n": 2, "m": 2, "energy": [0, 0, 1, 2]},
        )
        out = tmp_path / "cert.json"
        code = run(["certify", "--instance", inst, "--gamma", "0.9", "-p", "4",
                    "--scope", "feasible", "-o", str(out)])
        assert code == 3
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("certificate"))
        assert doc["status"] == "uncertifiable"
        assert doc["bound_satisfied"] is False
        assert doc["q0_exact"] < doc["q0_bound"]

    def test_envelope_and_betas_conflict(self, toy_instance, tmp_path):
        env_path = tmp_path / "env.json"
        env_path.write_text(json.dumps([0.8, 0.2]))
        code = run(["certify", "--instance", toy_instance, "--gamma", "1.0", "-p", "1",
                    "--betas", "0.4", "--envelope", str(env_path),
                    "-o", str(tmp_path / "x.json")])
        assert code == 2


class TestPlanAndCurves:
    def test_plan_document(self, tmp_path):
        out = tmp_path / "plan.json"
        assert run(["plan", "-p", "3", "--c-beta", "0.4", "--delta", "0.8",
                    "--epsilon", "0.1", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("certificate"))
        assert doc["status"] == "planned"
        assert doc["x"] == pytest.approx(16 * math.sin(0.4) ** 2 * 0.4)

    def test_curves_checkpoint_and_format(self, tmp_path):
        out = tmp_path / "curves.csv"
        assert run(["curves", "--deltas", f"1.0,{math.pi},0.5", "--orders", "2,1",
                    "--epsilon", "0.1", "-o", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "delta,p,epsilon,c_min"
        rows = [line.split(",") for line in lines[1:]]
        # sorted by (p, delta)
        keys = [(int(r[1]), float(r[0])) for r in rows]
        assert keys == sorted(keys)
        # the (pi, p=2, 0.1) checkpoint has c_min = 0.5
        target = [r for r in rows if int(r[1]) == 2 and abs(float(r[0]) - math.pi) < 1e-12]
        assert float(target[0][3]) == pytest.approx(0.5)

    def test_cmin_strictly_decreasing_in_delta(self, tmp_path):
        out = tmp_path / "curves.csv"
        run(["curves", "--deltas", "0.3:3.1:25", "--orders", "4", "-o", str(out)])
        rows = [line.split(",") for line in out.read_text().strip().split("\n")[1:]]
        values = [float(r[3]) for r in rows]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_empty_grid_rejected(self, tmp_path):
        assert run(["curves", "--deltas", "", "--orders", "1",
                    "-o", str(tmp_path / "x.csv")]) == 2


class TestEnvelopeCommand:
    def test_json_array(self, qap_instance, tmp_path):
        out = tmp_path / "env.json"
        assert run(["envelope", "--instance", qap_instance, "--betas", "0.4,0.9",
                    "-o", str(out)]) == 0
        data = json.loads(out.read_text())
        assert len(data) == 27
        assert sum(data) == pytest.approx(1.0)

    def test_csv_format(self, qap_instance, tmp_path):
        out = tmp_path / "env.csv"
        run(["envelope", "--instance", qap_instance, "--betas", "0.4", "--format", "csv",
             "-o", str(out)])
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "string,probability"
        assert len(lines) == 28
        assert lines[1].startswith("0-0-0,")

    def test_external_v0(self, tmp_path):
        inst = write_instance(tmp_path / "i.json", {"n": 2, "m": 1, "energy": [0, 1]})
        v0 = tmp_path / "v0.json"
        v0.write_text(json.dumps([0.9, 0.1]))
        out = tmp_path / "env.json"
        run(["envelope", "--instance", inst, "--v0", str(v0), "-o", str(out)])
        assert json.loads(out.read_text()) == [0.9, 0.1]


class TestFeasibilityCommand:
    def test_report_schema_and_values(self, qap_instance, tmp_path):
        out = tmp_path / "feas.json"
        assert run(["feasibility", "--instance", qap_instance, "--gamma", "0.5",
                    "--budget", "40", "--seed", "3", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("feasibility_report"))
        assert doc["levels"] == {"0": 6, "2": 18, "6": 3}
        assert doc["connected"] is True
        assert doc["delta_f"] == pytest.approx(1.0)
        assert doc["c_f"] == pytest.approx(6 / 27)
        assert doc["search"]["pi_f"] >= 6 / 27 - 1e-12

    def test_no_search(self, qap_instance, tmp_path):
        out = tmp_path / "feas.json"
        run(["feasibility", "--instance", qap_instance, "--gamma", "0.5", "--no-search",
             "-o", str(out)])
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("feasibility_report"))
        assert doc["search"] is None

    def test_penalty_phase_collision_exit(self, qap_instance, tmp_path):
        out = tmp_path / "feas.json"
        code = run(["feasibility", "--instance", qap_instance, "--gamma", str(math.pi),
                    "--no-search", "-o", str(out)])
        assert code == 3
        doc = json.loads(out.read_text())
        assert doc["collided"] is True and doc["bounds"] is None


class TestRLCommand:
    def test_report_schema(self, qap_instance, tmp_path):
        out = tmp_path / "rl.json"
        law = tmp_path / "law.csv"
        assert run(["rl", "--instance", qap_instance, "--gamma", "0.4", "-p", "4",
                    "--half-width", "0.8", "--samples", "40", "--seed", "1",
                    "-o", str(out), "--law-output", str(law)]) == 0
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, load_schema("rl_report"))
        assert doc["success_mass"] >= doc["bound"] - 3 * (doc["success_stderr"] or 0.0)
        lines = law.read_text().strip().split("\n")
        assert lines[0] == "string,probability,stderr"
        assert len(lines) == 28


class TestSimulateCommand:
    def test_document_fields(self, qap_instance, tmp_path):
        out = tmp_path / "sim.json"
        assert run(["simulate", "--instance", qap_instance, "--gammas", "0.3,0.6",
                    "--betas", "0.5,0.5", "--shots", "500", "--seed", "2",
                    "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert 0.0 <= doc["success_probability"] <= 1.0
        assert 0.0 <= doc["feasibility_probability"] <= 1.0
        assert sum(doc["counts"].values()) == 500
        assert doc["success_ci"][0] <= doc["success_frequency"] <= doc["success_ci"][1]

    def test_without_shots_no_counts(self, qap_instance, tmp_path):
        out = tmp_path / "sim.json"
        run(["simulate", "--instance", qap_instance, "--gammas", "0.3",
             "--betas", "0.5", "-o", str(out)])
        doc = json.loads(out.read_text())
        assert "counts" not in doc

    def test_schedule_mismatch_precondition(self, qap_instance, tmp_path):
        assert run(["simulate", "--instance", qap_instance, "--gammas", "0.3",
                    "--betas", "0.5,0.6", "-o", str(tmp_path / "x.json")]) == 2


class TestInstanceSchema:
    def test_documents_validate(self):
        schema = load_schema("instance")
        jsonschema.validate({"n": 2, "m": 1, "energy": [0, 1]}, schema)
        jsonschema.validate(
            {"n": 2, "m": 2, "generator": {"kind": "assignment", "cost": [[0, 1], [1, 0]]},
             "lattice_scale": 2.0},
            schema,
        )
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"n": 2, "m": 1}, schema)
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(
                {"n": 2, "m": 1, "energy": [0, 1], "generator": {"kind": "assignment", "cost": []}},
                schema,
            )


class TestDeterminism:
    def test_all_commands_byte_identical(self, toy_instance, qap_instance, tmp_path):
        jobs = {
            "certify": ["certify", "--instance", toy_instance, "--gamma", "2.2", "-p", "3"],
            "plan": ["plan", "-p", "4", "--c-beta", "0.3", "--delta", "1.1"],
            "curves": ["curves", "--deltas", "0.4:3.0:7", "--orders", "1,3"],
            "envelope": ["envelope", "--instance", qap_instance, "--betas", "0.7,0.2"],
            "feasibility": ["feasibility", "--instance", qap_instance, "--gamma", "0.45",
                            "--budget", "25", "--seed", "11"],
            "rl": ["rl", "--instance", qap_instance, "--gamma", "0.4", "-p", "3",
                   "--half-width", "0.6", "--samples", "30", "--seed", "5"],
            "simulate": ["simulate", "--instance", qap_instance, "--gammas", "0.3,0.6",
                         "--betas", "0.5,0.5", "--shots", "100", "--seed", "2"],
        }
        for name, args in jobs.items():
            first = tmp_path / f"{name}_1.out"
            second = tmp_path / f"{name}_2.out"
            assert run(args + ["-o", str(first)]) == 0
            assert run(args + ["-o", str(second)]) == 0
            assert first.read_bytes() == second.read_bytes(), name
